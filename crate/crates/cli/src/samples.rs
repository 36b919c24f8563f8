//! Sample files: one `index,value` pair per line.
//!
//! Blank lines and lines starting with `#` are skipped. The first remaining
//! line may be a header. Values are integers, decimals or ratios `p/r`.

use std::collections::BTreeMap;

use gauss_cardinal::arithmetic::parse_rational;
use gauss_cardinal::BigRational;

use crate::{CliError, CliResult};

/// Samples in index order, each with the line it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleTable {
    pub rows: Vec<(i64, BigRational)>,
}

impl SampleTable {
    pub fn lo(&self) -> i64 {
        self.rows[0].0
    }

    pub fn hi(&self) -> i64 {
        self.rows[self.rows.len() - 1].0
    }
}

fn bad(line: usize, msg: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("line {line}: {msg}"))
}

pub fn parse_samples(text: &str) -> CliResult<SampleTable> {
    let mut seen: BTreeMap<i64, (usize, BigRational)> = BTreeMap::new();
    let mut first_data = true;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 2 {
            return Err(bad(line_no, format!("expected `index,value`, found `{line}`")));
        }
        let header = first_data && fields[0].parse::<f64>().is_err() && fields[0].parse::<i64>().is_err();
        first_data = false;
        if header {
            continue;
        }
        let index: i64 = fields[0]
            .parse()
            .map_err(|_| bad(line_no, format!("index `{}` is not an integer", fields[0])))?;
        let value = parse_rational(fields[1])
            .map_err(|_| bad(line_no, format!("value `{}` is not a number", fields[1])))?;
        if let Some((prev, _)) = seen.get(&index) {
            return Err(bad(line_no, format!("index {index} repeats line {prev}")));
        }
        seen.insert(index, (line_no, value));
    }
    if seen.is_empty() {
        return Err(CliError::Input("input has no samples".into()));
    }
    let mut rows = Vec::with_capacity(seen.len());
    let mut previous: Option<i64> = None;
    for (index, (line_no, value)) in seen {
        if let Some(p) = previous {
            if index != p + 1 {
                return Err(bad(line_no, format!("index {index} leaves a gap after {p}")));
            }
        }
        previous = Some(index);
        rows.push((index, value));
    }
    Ok(SampleTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn parses_with_header_and_comments() {
        let t = parse_samples("# impulse\nindex,value\n-1, 0\n0,1/2\n\n1,0.25\n").unwrap();
        assert_eq!(t.rows, vec![(-1, rat(0, 1)), (0, rat(1, 2)), (1, rat(1, 4))]);
        assert_eq!((t.lo(), t.hi()), (-1, 1));
    }

    #[test]
    fn accepts_any_row_order() {
        let t = parse_samples("2,1\n1,3\n").unwrap();
        assert_eq!(t.rows, vec![(1, rat(3, 1)), (2, rat(1, 1))]);
    }

    #[test]
    fn reports_offending_lines() {
        let msg = |text: &str| parse_samples(text).unwrap_err().to_string();
        assert_eq!(msg("0,1\n1.5,2\n"), "line 2: index `1.5` is not an integer");
        assert_eq!(msg("0,1\n1,x\n"), "line 2: value `x` is not a number");
        assert_eq!(msg("0,1\n1,2\n0,3\n"), "line 3: index 0 repeats line 1");
        assert_eq!(msg("0,1\n3,2\n1,1\n"), "line 2: index 3 leaves a gap after 1");
        assert_eq!(msg("0,1,2\n"), "line 1: expected `index,value`, found `0,1,2`");
        assert_eq!(msg("# nothing\n\n"), "input has no samples");
        assert_eq!(msg(""), "input has no samples");
        assert!(matches!(parse_samples("a,b\nc,d\n"), Err(CliError::Input(_))));
    }
}
