use std::ops::RangeInclusive;

use crate::error::{Error, Result};

/// A vector indexed by a contiguous range of integers `lo..=hi`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeVec<S> {
    lo: i64,
    values: Vec<S>,
}

impl<S> LatticeVec<S> {
    /// `values[0]` sits at index `lo`. Must be non-empty.
    pub fn new(lo: i64, values: Vec<S>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("empty index range".into()));
        }
        Ok(LatticeVec { lo, values })
    }

    /// Centered vector over `-half..=half`; `values` must have `2 * half + 1` entries.
    pub fn centered(half: usize, values: Vec<S>) -> Result<Self> {
        if values.len() != 2 * half + 1 {
            return Err(Error::InvalidInput(format!(
                "expected {} values for half-width {half}, got {}",
                2 * half + 1,
                values.len()
            )));
        }
        Ok(LatticeVec {
            lo: -(half as i64),
            values,
        })
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.values.len() as i64 - 1
    }

    pub fn range(&self) -> RangeInclusive<i64> {
        self.lo..=self.hi()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, index: i64) -> Option<&S> {
        if index < self.lo {
            return None;
        }
        self.values.get((index - self.lo) as usize)
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn into_values(self) -> Vec<S> {
        self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, &S)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, v)| (self.lo + i as i64, v))
    }

    pub fn map<T>(&self, f: impl FnMut(&S) -> T) -> LatticeVec<T> {
        LatticeVec {
            lo: self.lo,
            values: self.values.iter().map(f).collect(),
        }
    }
}

impl<S: PartialEq> LatticeVec<S> {
    /// `v[i] == v[-i]` for every index; false unless the range is symmetric.
    pub fn is_palindrome(&self) -> bool {
        self.lo == -self.hi() && self.values.iter().eq(self.values.iter().rev())
    }
}
