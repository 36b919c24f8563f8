//! Acceptance checks, one PASS/FAIL line each. Exits non-zero on any failure.
//!
//! Tolerances:
//! - exact mode: equality
//! - 256-bit mode: relative difference at most 2^-200
//! - criterion 1 runtime: under 30 s for the whole exact sweep

use std::process::Command;
use std::time::{Duration, Instant};

use gauss_cardinal::arithmetic::rational_to_float;
use gauss_cardinal::gauss_system::{build_matrix, build_node_rhs};
use gauss_cardinal::interpolator::{
    eval_node_function, expand_interpolant, expand_interpolant_nodesum, series_coefficients,
};
use gauss_cardinal::node_solver::{
    compute, determinant_closed_form, determinant_elimination, determinant_exponent, solve,
    solve_dense, solve_escalating, solve_exact,
};
use gauss_cardinal::vandermonde::{vdm_minor, MinorIndex, NodeVector};
use gauss_cardinal::{
    BigFloat, BigRational, Error, Escalation, LatticeVec, QSpec, SampleWindow, Scalar, SolveMethod,
    SystemSpec, Tolerance,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const Q_SWEEP: [(i64, i64); 5] = [(1, 10), (1, 3), (1, 2), (2, 3), (9, 10)];
const N_MAX: usize = 6;
const FLOAT_BITS: usize = 256;
const FLOAT_LOG2_TOL: f64 = -200.0;
const SWEEP_BUDGET: Duration = Duration::from_secs(30);

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn sweep() -> impl Iterator<Item = (usize, BigRational)> {
    (0..=N_MAX).flat_map(|n| Q_SWEEP.iter().map(move |&(a, b)| (n, rat(a, b))))
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// `log2(max |a_k - b_k| / max |b_k|)`; `None` when identical.
fn log2_rel_diff<S: Scalar>(a: &LatticeVec<S>, b: &LatticeVec<S>) -> Option<f64> {
    let zero = b.values()[0].zero_like();
    let scale = b.values().iter().fold(zero.clone(), |m, x| if x.abs() > m { x.abs() } else { m });
    let diff = a
        .values()
        .iter()
        .zip(b.values())
        .fold(zero, |m, (x, y)| {
            let d = (x.clone() - y).abs();
            if d > m { d } else { m }
        });
    (diff / &scale).log2_abs()
}

fn within_float_tol(l: Option<f64>) -> bool {
    l.is_none_or(|v| v <= FLOAT_LOG2_TOL)
}

fn worse(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.max(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

fn show(l: Option<f64>) -> String {
    l.map_or("0".into(), |v| format!("2^{v:.1}"))
}

fn determinants_agree() -> Outcome {
    let start = Instant::now();
    let mut cases = 0;
    for (n, q) in sweep() {
        let closed = determinant_closed_form(n, &q).map_err(|e| e.to_string())?;
        let elim = determinant_elimination(n, &q).map_err(|e| e.to_string())?;
        ensure(closed.value == elim.value, || format!("n={n} q={q}: {} vs {}", closed.value, elim.value))?;
        cases += 1;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < SWEEP_BUDGET, || format!("sweep took {elapsed:?}"))?;

    let anchor = determinant_closed_form(1, &rat(1, 2)).map_err(|e| e.to_string())?;
    ensure(anchor.value == rat(135, 256), || format!("n=1 q=1/2 gives {}", anchor.value))?;
    let q = rat(1, 3);
    let two = determinant_closed_form(2, &q).map_err(|e| e.to_string())?;
    ensure(determinant_exponent(2) == 20, || "exponent for n=2 is not 20".into())?;
    let prefactor = (0..20).fold(rat(1, 1), |acc, _| acc * &q);
    ensure(two.value == prefactor * &two.vandermonde_factor, || {
        "n=2 determinant is not q^20 times the Vandermonde factor".into()
    })?;
    Ok(format!("{cases} exact cases, anchors 135/256 and q^20, {:.2} s", elapsed.as_secs_f64()))
}

fn determinants_positive() -> Outcome {
    let mut cases = 0;
    for (n, q) in sweep() {
        let det = determinant_closed_form(n, &q).map_err(|e| e.to_string())?;
        ensure(!det.value.is_negative() && !Scalar::is_zero(&det.value), || {
            format!("n={n} q={q}: determinant {}", det.value)
        })?;
        cases += 1;
    }
    Ok(format!("{cases} exact cases"))
}

fn solvers_agree() -> Outcome {
    let tol = Tolerance {
        log2_backward: 32.0 - FLOAT_BITS as f64,
        log2_forward: FLOAT_LOG2_TOL,
    };
    let mut worst: Option<f64> = None;
    for (n, q) in sweep() {
        let spec = SystemSpec::square(n);
        let exact: Vec<_> = SolveMethod::SQUARE
            .iter()
            .map(|&m| solve(m, spec, &q, &Tolerance::for_scalar(&q)).map(|s| s.d))
            .collect::<Result<_, _>>()
            .map_err(|e| format!("n={n} q={q}: {e}"))?;
        ensure(exact[0] == exact[1] && exact[1] == exact[2], || {
            format!("n={n} q={q}: exact solutions differ")
        })?;

        let qf = rational_to_float(&q, FLOAT_BITS);
        let float: Vec<_> = SolveMethod::SQUARE
            .iter()
            .map(|&m| solve(m, spec, &qf, &tol).map(|s| s.d))
            .collect::<Result<_, _>>()
            .map_err(|e| format!("n={n} q={q} at {FLOAT_BITS} bits: {e}"))?;
        let reference = exact[0].map(|x| x.to_big_float(FLOAT_BITS));
        for (i, a) in float.iter().enumerate() {
            for b in float[i + 1..].iter().chain([&reference]) {
                let l = log2_rel_diff(a, b);
                ensure(within_float_tol(l), || {
                    format!("n={n} q={q}: {FLOAT_BITS}-bit difference {}", show(l))
                })?;
                worst = worse(worst, l);
            }
        }
    }
    Ok(format!(
        "exact equality; {FLOAT_BITS}-bit worst relative difference {}",
        show(worst)
    ))
}

fn anchor_solution() -> Outcome {
    let q = rat(1, 2);
    let want = LatticeVec::centered(1, vec![rat(-8, 9), rat(17, 9), rat(-8, 9)]).unwrap();
    for m in SolveMethod::SQUARE {
        let sol = solve_exact(m, SystemSpec::square(1), &QSpec::Ratio(q.clone())).map_err(|e| e.to_string())?;
        ensure(sol.d == want, || format!("{m}: {:?}", sol.d.values()))?;
    }
    let mut cases = 0;
    for (n, q) in sweep() {
        let spec = SystemSpec::square(n);
        let sol = solve_exact(SolveMethod::Folded, spec, &QSpec::Ratio(q.clone())).map_err(|e| e.to_string())?;
        let a = build_matrix(spec, &q).map_err(|e| e.to_string())?;
        let rhs = build_node_rhs(spec, &q);
        for (row, y) in a.rows().iter().zip(rhs.values()) {
            let lhs = row.iter().zip(sol.d.values()).fold(rat(0, 1), |acc, (x, d)| acc + x * d);
            ensure(&lhs == y, || format!("n={n} q={q}: node condition {lhs} != {y}"))?;
        }
        cases += 1;
    }
    Ok(format!("d = (-8/9, 17/9, -8/9) by every method; node conditions hold in {cases} cases"))
}

fn palindromes() -> Outcome {
    let mut worst: Option<f64> = None;
    for (n, q) in sweep() {
        let spec = SystemSpec::square(n);
        for m in [SolveMethod::Folded, SolveMethod::ClosedForm] {
            let sol = compute(m, spec, &q).map_err(|e| e.to_string())?;
            ensure(sol.is_palindrome(), || format!("{m} n={n} q={q} not palindromic"))?;
        }
        let qf = rational_to_float(&q, FLOAT_BITS);
        let dense = compute(SolveMethod::Dense, spec, &qf).map_err(|e| e.to_string())?;
        let reversed = LatticeVec::centered(n, dense.d.values().iter().rev().cloned().collect()).unwrap();
        let l = log2_rel_diff(&dense.d, &reversed);
        ensure(within_float_tol(l), || format!("dense n={n} q={q}: defect {}", show(l)))?;
        worst = worse(worst, l);
    }
    Ok(format!("folded and closed form exact; dense {FLOAT_BITS}-bit worst defect {}", show(worst)))
}

fn laplace_det(m: &[Vec<BigRational>]) -> BigRational {
    if m.is_empty() {
        return rat(1, 1);
    }
    let mut acc = rat(0, 1);
    for c in 0..m.len() {
        let sub: Vec<Vec<BigRational>> = m[1..]
            .iter()
            .map(|row| row.iter().enumerate().filter(|&(i, _)| i != c).map(|(_, x)| x.clone()).collect())
            .collect();
        let term = &m[0][c] * laplace_det(&sub);
        acc = if c % 2 == 0 { acc + term } else { acc - term };
    }
    acc
}

fn vandermonde_minors() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x5eed_0006);
    let mut checked = 0;
    for _ in 0..20 {
        let size = rng.gen_range(1..=6usize);
        let mut nodes: Vec<BigRational> = Vec::new();
        while nodes.len() < size {
            let x = rat(rng.gen_range(-20..=20), rng.gen_range(1..=9));
            if !nodes.contains(&x) {
                nodes.push(x);
            }
        }
        let full: Vec<Vec<BigRational>> = nodes
            .iter()
            .map(|x| (0..size).map(|p| (0..p).fold(rat(1, 1), |acc, _| acc * x)).collect())
            .collect();
        let vec = NodeVector::new(nodes.clone()).map_err(|e| e.to_string())?;
        for l in 1..=size {
            for k in 1..=size {
                let sub: Vec<Vec<BigRational>> = full
                    .iter()
                    .enumerate()
                    .filter(|&(r, _)| r + 1 != l)
                    .map(|(_, row)| row.iter().enumerate().filter(|&(c, _)| c + 1 != k).map(|(_, x)| x.clone()).collect())
                    .collect();
                let idx = MinorIndex::new(l, k, size).map_err(|e| e.to_string())?;
                let got = vdm_minor(&vec, idx).map_err(|e| e.to_string())?;
                let want = laplace_det(&sub);
                ensure(got == want, || format!("nodes {nodes:?} minor ({l},{k}): {got} vs {want}"))?;
                checked += 1;
            }
        }
    }
    Ok(format!("20 random node sets, {checked} minors match cofactor expansion"))
}

fn node_function_is_cardinal() -> Outcome {
    let mut checked = 0;
    for (n, q) in sweep().filter(|(n, _)| *n <= 5) {
        for m in SolveMethod::SQUARE {
            let sol = compute(m, SystemSpec::square(n), &q).map_err(|e| e.to_string())?;
            for j in -(n as i64)..=n as i64 {
                let h = eval_node_function(&sol, &rat(j, 1)).map_err(|e| e.to_string())?;
                let want = if j == 0 { rat(1, 1) } else { rat(0, 1) };
                ensure(h == want, || format!("{m} n={n} q={q}: H({j}) = {h}"))?;
                checked += 1;
            }
        }
    }
    Ok(format!("H(j) = delta_j0 exactly at {checked} nodes"))
}

fn rearrangement_exact() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x5eed_0008);
    let points: Vec<BigRational> = (0..25)
        .map(|_| rat(rng.gen_range(-40..=40), rng.gen_range(1..=7)))
        .collect();
    let mut checked = 0;
    for &(a, b) in &Q_SWEEP[1..4] {
        let q = rat(a, b);
        for n in 0..=3usize {
            let sol = compute(SolveMethod::Folded, SystemSpec::square(n), &q).map_err(|e| e.to_string())?;
            for size in 1..=4usize {
                let lo = rng.gen_range(-3..=3i64);
                let values = (0..size).map(|_| rat(rng.gen_range(-9..=9), rng.gen_range(1..=5))).collect();
                let window = SampleWindow::new(lo, values).map_err(|e| e.to_string())?;
                let series = series_coefficients(&window, &sol);
                for x in &points {
                    let left = expand_interpolant(&series, x);
                    let right = expand_interpolant_nodesum(&window, &sol, x);
                    ensure(left == right, || format!("q={q} n={n} window {window:?} x={x}"))?;
                    checked += 1;
                }
            }
        }
    }
    Ok(format!("{checked} exact expansion comparisons"))
}

fn escalation() -> Outcome {
    let q = rat(99, 100);
    let spec = SystemSpec::square(8);
    match solve_dense(spec, &rational_to_float(&q, 53), &Tolerance::for_bits(53)) {
        Err(Error::PrecisionExhausted { .. }) => {}
        other => return Err(format!("53-bit dense solve did not report exhaustion: {other:?}")),
    }
    let policy = Escalation::new(53).with_target(FLOAT_LOG2_TOL);
    let found = solve_escalating(SolveMethod::Dense, spec, &QSpec::Ratio(q.clone()), &policy)
        .map_err(|e| e.to_string())?;
    let bits = found.precision.mantissa_bits().unwrap_or(0);
    ensure(bits <= policy.max_bits, || format!("escalated to {bits} bits"))?;
    let exact = solve_exact(SolveMethod::Dense, spec, &QSpec::Ratio(q)).map_err(|e| e.to_string())?;
    let reference: LatticeVec<BigFloat> = exact.d.map(|x| x.to_big_float(bits));
    let l = log2_rel_diff(&found.d, &reference);
    ensure(within_float_tol(l), || format!("error {} at {bits} bits", show(l)))?;
    Ok(format!("53 bits exhausted; escalated to {bits} bits, error {}", show(l)))
}

fn cli_impulse() -> Outcome {
    let exe = env!("CARGO_BIN_EXE_gauss-cardinal");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let impulse = dir.path().join("impulse.csv");
    let malformed = dir.path().join("bad.csv");
    let a = dir.path().join("series.csv");
    let b = dir.path().join("coefficients.csv");
    std::fs::write(&impulse, "index,value\n0,1\n").map_err(|e| e.to_string())?;
    std::fs::write(&malformed, "0,1\n1;2\n").map_err(|e| e.to_string())?;
    let common = ["--n", "2", "--q", "1/3", "--precision", "exact"];

    let run = |args: &[&str]| Command::new(exe).args(args).output().map_err(|e| e.to_string());
    let interp = run(&[&["interpolate"], &common[..], &["--input", impulse.to_str().unwrap(), "--coefficients", a.to_str().unwrap()]].concat())?;
    let node = run(&[&["node-fn"], &common[..], &["--method", "folded", "--coefficients", b.to_str().unwrap()]].concat())?;
    ensure(interp.status.success() && node.status.success(), || "a command failed".into())?;

    let csv_a = std::fs::read(&a).map_err(|e| e.to_string())?;
    let csv_b = std::fs::read(&b).map_err(|e| e.to_string())?;
    ensure(csv_a == csv_b, || "coefficient CSVs differ".into())?;

    let ja: serde_json::Value = serde_json::from_slice(&interp.stdout).map_err(|e| e.to_string())?;
    let jb: serde_json::Value = serde_json::from_slice(&node.stdout).map_err(|e| e.to_string())?;
    let series = &ja["outputs"]["series"]["values"];
    let coefs = &jb["outputs"]["solutions"][0]["coefficients"]["values"];
    ensure(series == coefs && series.is_array(), || "JSON coefficient blocks differ".into())?;

    let bad = run(&[&["interpolate"], &common[..], &["--input", malformed.to_str().unwrap()]].concat())?;
    ensure(bad.status.code() == Some(3), || format!("malformed CSV exited {:?}", bad.status.code()))?;
    Ok("impulse series equals node coefficients byte for byte; malformed CSV exits 3".into())
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("closed-form determinant equals elimination", determinants_agree),
        ("determinant is positive", determinants_positive),
        ("dense, folded and closed-form solvers agree", solvers_agree),
        ("anchor solution and node conditions", anchor_solution),
        ("coefficients are palindromic", palindromes),
        ("Vandermonde minors match brute force", vandermonde_minors),
        ("node function is cardinal on |j| <= n", node_function_is_cardinal),
        ("interpolant rearrangement is exact", rearrangement_exact),
        ("precision escalation recovers n=8, q=99/100", escalation),
        ("CLI impulse interpolation equals node-fn", cli_impulse),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS criterion {}: {name} ({detail})", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {}: {name} ({detail})", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
