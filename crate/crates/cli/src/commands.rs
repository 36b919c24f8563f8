use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use gauss_cardinal::arithmetic::{
    integer_power, max_abs, parse_rational, relative_difference, PrecisionContext,
    DEFAULT_MANTISSA_BITS, DEFAULT_MAX_BITS, MIN_MANTISSA_BITS,
};
use gauss_cardinal::interpolator::{
    certify_region, expand_interpolant, expand_node_function, node_reproduction,
    rational_grid, reproduction_bound, series_coefficients, GaussianExpansion,
};
use gauss_cardinal::node_solver::{
    compute, determinant_closed_form, determinant_elimination, folded_pivots, solve,
    solve_escalating, ELIMINATION_MAX_ORDER,
};
use gauss_cardinal::{
    BigFloat, BigRational, Error, Escalation, LatticeVec, NodeCoefficients, QSpec, SampleWindow,
    Scalar, SolveMethod, SystemSpec, Tolerance,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::report::{
    render, render_decimal, write_file, CoefficientBlock, Curve, CurvePoint, SolutionBlock,
};
use crate::samples::parse_samples;
use crate::{
    CliError, CliResult, Command, DetArgs, DiagnoseArgs, InterpolateArgs, NodeFnArgs, ShiftArgs,
    SolveArgs, VerifyArgs, EXIT_OK, EXIT_VERIFICATION, MAX_BITS_ENV,
};

/// Width used to render non-integer points of an exact-mode curve.
const CURVE_FLOAT_BITS: usize = DEFAULT_MANTISSA_BITS;

/// Start of the precision search in `diagnose`.
const DIAGNOSE_START_BITS: usize = MIN_MANTISSA_BITS;

/// Default `q` values for `verify`.
pub const VERIFY_Q_SWEEP: [&str; 5] = ["1/10", "1/3", "1/2", "2/3", "9/10"];

pub struct Completed {
    pub envelope: Value,
    pub output: Option<PathBuf>,
    pub status: i32,
    /// Human-readable table printed to stderr.
    pub summary: Option<String>,
}

struct Outcome {
    inputs: Value,
    outputs: Value,
    output: Option<PathBuf>,
    status: i32,
    summary: Option<String>,
}

pub fn execute(command: &Command) -> CliResult<Completed> {
    let start = Instant::now();
    let (name, outcome) = match command {
        Command::Det(a) => ("det", det(a)?),
        Command::NodeFn(a) => ("node-fn", node_fn(a)?),
        Command::Interpolate(a) => ("interpolate", interpolate(a)?),
        Command::Verify(a) => ("verify", verify(a)?),
        Command::Diagnose(a) => ("diagnose", diagnose(a)?),
    };
    let elapsed = start.elapsed();
    Ok(Completed {
        envelope: json!({
            "command": name,
            "inputs": outcome.inputs,
            "outputs": outcome.outputs,
            "timing": { "elapsed_ms": elapsed.as_secs_f64() * 1e3 },
        }),
        output: outcome.output,
        status: outcome.status,
        summary: outcome.summary,
    })
}

fn to_value(x: impl Serialize) -> CliResult<Value> {
    serde_json::to_value(x).map_err(|e| CliError::Internal(e.to_string()))
}

fn parse_shift(shift: &ShiftArgs) -> CliResult<QSpec> {
    let parsed = match (&shift.q, &shift.sigma) {
        (Some(q), None) => QSpec::parse_q(q),
        (None, Some(s)) => QSpec::parse_sigma(s),
        _ => return Err(CliError::Usage("give exactly one of --q and --sigma".into())),
    };
    parsed.map_err(|e| CliError::Usage(e.to_string()))
}

fn parse_precision(text: &str) -> CliResult<PrecisionContext> {
    text.parse()
        .map_err(|e: Error| CliError::Usage(format!("--precision: {e}")))
}

fn shift_inputs(shift: &ShiftArgs) -> Value {
    match (&shift.q, &shift.sigma) {
        (Some(q), _) => json!({ "q": q }),
        (_, Some(s)) => json!({ "sigma": s }),
        _ => json!({}),
    }
}

fn merge(mut base: Value, extra: Value) -> Value {
    if let (Value::Object(b), Value::Object(e)) = (&mut base, extra) {
        b.extend(e);
    }
    base
}

/// Escalation cap from the environment.
pub fn max_bits() -> CliResult<usize> {
    match std::env::var(MAX_BITS_ENV) {
        Err(_) => Ok(DEFAULT_MAX_BITS),
        Ok(text) => match text.trim().parse::<usize>() {
            Ok(bits) if bits >= MIN_MANTISSA_BITS => Ok(bits),
            _ => Err(CliError::Usage(format!(
                "{MAX_BITS_ENV} must be an integer of at least {MIN_MANTISSA_BITS}, got `{text}`"
            ))),
        },
    }
}

fn parse_grid(text: &str) -> CliResult<Vec<BigRational>> {
    let parts: Vec<&str> = text.split(':').collect();
    let usage = |msg: String| CliError::Usage(format!("--grid `{text}`: {msg}"));
    if parts.len() != 3 {
        return Err(usage("expected xmin:xmax:count".into()));
    }
    let lo = parse_rational(parts[0]).map_err(|e| usage(e.to_string()))?;
    let hi = parse_rational(parts[1]).map_err(|e| usage(e.to_string()))?;
    let count: usize = parts[2]
        .trim()
        .parse()
        .map_err(|_| usage(format!("count `{}` is not a non-negative integer", parts[2])))?;
    rational_grid(&lo, &hi, count).map_err(|e| usage(e.to_string()))
}

/// Number-system specific behaviour the commands need.
trait Numeric: Scalar {
    /// Retry a failed solve at higher precision; `None` when that is meaningless.
    fn escalate(
        _method: SolveMethod,
        _spec: SystemSpec,
        _source: &QSpec,
        _policy: &Escalation,
    ) -> Option<gauss_cardinal::Result<NodeCoefficients<Self>>> {
        None
    }
}

impl Numeric for BigRational {}

impl Numeric for BigFloat {
    fn escalate(
        method: SolveMethod,
        spec: SystemSpec,
        source: &QSpec,
        policy: &Escalation,
    ) -> Option<gauss_cardinal::Result<NodeCoefficients<Self>>> {
        Some(solve_escalating(method, spec, source, policy))
    }
}

struct Solved<S> {
    sol: NodeCoefficients<S>,
    block: SolutionBlock,
}

/// Solves at the requested width, escalating when verification fails.
fn solve_checked<S: Numeric>(
    method: SolveMethod,
    spec: SystemSpec,
    source: &QSpec,
    ctx: &PrecisionContext,
    strict: bool,
) -> CliResult<Solved<S>> {
    let q: S = source.q_in(ctx)?;
    let raw = compute(method, spec, &q)?;
    let first = match raw.clone().verify(&Tolerance::for_scalar(&q)) {
        Ok(sol) => {
            let block = SolutionBlock::new(&sol, true, None);
            return Ok(Solved { sol, block });
        }
        Err(e @ Error::PrecisionExhausted { .. }) => e,
        Err(e) => return Err(e.into()),
    };
    let bits = ctx.mantissa_bits().unwrap_or(DEFAULT_MANTISSA_BITS);
    let cap = max_bits()?;
    let policy = Escalation::new(2 * bits)
        .with_max_bits(cap)
        .with_target(16.0 - bits as f64);
    let escalated = if 2 * bits <= cap {
        S::escalate(method, spec, source, &policy)
    } else {
        None
    };
    let last = match escalated {
        Some(Ok(sol)) => {
            let block = SolutionBlock::new(&sol, true, Some(bits));
            return Ok(Solved { sol, block });
        }
        Some(Err(e @ Error::PrecisionExhausted { .. })) => e,
        Some(Err(e)) => return Err(e.into()),
        None => first,
    };
    if strict {
        return Err(CliError::Precision(format!(
            "{method} solve: {last} (cap {cap} bits); residual at {bits} bits was {}",
            render(&raw.residual_inf)
        )));
    }
    eprintln!("warning: {method} solve could not be verified: {last}");
    let block = SolutionBlock::new(&raw, false, None);
    Ok(Solved { sol: raw, block })
}

fn solve_spec(args: &SolveArgs) -> CliResult<SystemSpec> {
    SystemSpec::new(args.n, args.m.unwrap_or(args.n)).map_err(|e| CliError::Usage(e.to_string()))
}

fn solve_inputs(args: &SolveArgs, spec: SystemSpec) -> Value {
    let mut base = json!({
        "n": spec.n(),
        "m": spec.m(),
        "precision": args.common.precision,
        "strict": args.strict,
    });
    if let Some(g) = &args.grid {
        base = merge(base, json!({ "grid": g }));
    }
    merge(base, shift_inputs(&args.shift))
}

/// Evaluates an expansion, falling back to a float for irrational exact values.
fn evaluate_point<S: Scalar>(expansion: &GaussianExpansion<S>, q: &S) -> CliResult<(String, String, String)> {
    match expansion.evaluate(q) {
        Ok(v) => Ok((render(&v), render_decimal(&v), q.context().to_string())),
        Err(Error::ExactMode(_)) => {
            let qf = q.to_big_float(CURVE_FLOAT_BITS);
            let v = expansion.to_float(CURVE_FLOAT_BITS).evaluate(&qf)?;
            Ok((render(&v), render(&v), CURVE_FLOAT_BITS.to_string()))
        }
        Err(e) => Err(e.into()),
    }
}

fn build_curve<S: Scalar>(
    method: SolveMethod,
    grid: &[BigRational],
    q: &S,
    expand: impl Fn(&BigRational) -> GaussianExpansion<S>,
) -> CliResult<Curve> {
    let mut points = Vec::with_capacity(grid.len());
    let mut csv_rows = Vec::with_capacity(grid.len());
    for x in grid {
        let (value, decimal, precision) = evaluate_point(&expand(x), q)?;
        points.push(CurvePoint {
            x: x.to_string(),
            value,
            precision,
        });
        csv_rows.push((render_decimal(x), decimal));
    }
    Ok(Curve {
        method: method.to_string(),
        points,
        csv_rows,
    })
}

fn write_curve(args: &SolveArgs, curve: Option<&Curve>) -> CliResult<()> {
    match (&args.curve, curve) {
        (Some(path), Some(c)) => write_file(path, &c.to_csv()),
        (Some(_), None) => Err(CliError::Usage("--curve needs --grid".into())),
        _ => Ok(()),
    }
}

/// Largest entrywise difference between two vectors relative to the larger magnitude.
fn vector_difference<S: Scalar>(a: &LatticeVec<S>, b: &LatticeVec<S>) -> S {
    let proto = &a.values()[0];
    let scale = {
        let (ma, mb) = (max_abs(proto, a.values()), max_abs(proto, b.values()));
        if ma > mb {
            ma
        } else {
            mb
        }
    };
    let diff = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x.clone() - y).abs())
        .fold(proto.zero_like(), |m, d| if d > m { d } else { m });
    if scale.is_zero() {
        diff
    } else {
        diff / scale
    }
}

fn det(args: &DetArgs) -> CliResult<Outcome> {
    let source = parse_shift(&args.shift)?;
    let ctx = parse_precision(&args.common.precision)?;
    let outputs = if ctx.is_exact() {
        det_outputs::<BigRational>(args.n, &source, &ctx)?
    } else {
        det_outputs::<BigFloat>(args.n, &source, &ctx)?
    };
    let status = if outputs["agree"] == Value::Bool(false) {
        EXIT_VERIFICATION
    } else {
        EXIT_OK
    };
    Ok(Outcome {
        inputs: merge(
            json!({ "n": args.n, "precision": args.common.precision }),
            shift_inputs(&args.shift),
        ),
        outputs,
        output: args.common.output.clone(),
        status,
        summary: None,
    })
}

/// `log2` of the agreement tolerance at `bits`: a quarter of the width is
/// allowed for rounding growth in the two elimination orders.
pub fn agreement_log2_tolerance(bits: usize) -> f64 {
    -((25 * bits / 32) as f64)
}

fn within<S: Scalar>(diff: &S) -> bool {
    match diff.context().mantissa_bits() {
        None => diff.is_zero(),
        Some(bits) => diff
            .log2_abs()
            .is_none_or(|l| l <= agreement_log2_tolerance(bits)),
    }
}

fn det_outputs<S: Scalar>(n: usize, source: &QSpec, ctx: &PrecisionContext) -> CliResult<Value> {
    let q: S = source.q_in(ctx)?;
    let closed = determinant_closed_form(n, &q)?;
    let elimination = if n <= ELIMINATION_MAX_ORDER {
        Some(determinant_elimination(n, &q)?)
    } else {
        None
    };
    let precision = ctx.to_string();
    let difference = elimination
        .as_ref()
        .map(|e| relative_difference(&closed.value, &e.value));
    let positive = !closed.value.is_negative()
        && !closed.value.is_zero()
        && elimination
            .as_ref()
            .is_none_or(|e| !e.value.is_negative() && !e.value.is_zero());
    Ok(json!({
        "precision": precision,
        "exponent": closed.exponent,
        "closed_form": {
            "value": render(&closed.value),
            "vandermonde_factor": render(&closed.vandermonde_factor),
            "precision": precision,
        },
        "elimination": elimination.as_ref().map(|e| json!({
            "value": render(&e.value),
            "vandermonde_factor": render(&e.vandermonde_factor),
            "precision": precision,
        })),
        "relative_difference": difference.as_ref().map(render),
        "agree": difference.as_ref().map(within),
        "positive": positive,
    }))
}

fn square_methods(text: &str, spec: SystemSpec) -> CliResult<Vec<SolveMethod>> {
    if text == "all" {
        return Ok(if spec.is_square() {
            SolveMethod::SQUARE.to_vec()
        } else {
            vec![SolveMethod::LeastSquares]
        });
    }
    let method: SolveMethod = text.parse().map_err(|e: Error| CliError::Usage(e.to_string()))?;
    if method == SolveMethod::LeastSquares || spec.is_square() {
        Ok(vec![method])
    } else {
        Err(CliError::Usage(format!(
            "--method {method} needs m = n; use --method all for least squares"
        )))
    }
}

fn node_fn(args: &NodeFnArgs) -> CliResult<Outcome> {
    let solve_args = &args.solve;
    let spec = solve_spec(solve_args)?;
    let source = parse_shift(&solve_args.shift)?;
    let ctx = parse_precision(&solve_args.common.precision)?;
    let methods = square_methods(&args.method, spec)?;
    let grid = solve_args.grid.as_deref().map(parse_grid).transpose()?;
    let outputs = if ctx.is_exact() {
        node_fn_outputs::<BigRational>(solve_args, spec, &source, &ctx, &methods, grid.as_deref())?
    } else {
        node_fn_outputs::<BigFloat>(solve_args, spec, &source, &ctx, &methods, grid.as_deref())?
    };
    Ok(Outcome {
        inputs: merge(solve_inputs(solve_args, spec), json!({ "method": args.method })),
        outputs,
        output: solve_args.common.output.clone(),
        status: EXIT_OK,
        summary: None,
    })
}

fn node_fn_outputs<S: Numeric>(
    args: &SolveArgs,
    spec: SystemSpec,
    source: &QSpec,
    ctx: &PrecisionContext,
    methods: &[SolveMethod],
    grid: Option<&[BigRational]>,
) -> CliResult<Value> {
    let solved = methods
        .iter()
        .map(|&m| solve_checked::<S>(m, spec, source, ctx, args.strict))
        .collect::<CliResult<Vec<_>>>()?;
    // folded when present: it is palindromic by construction
    let primary = solved
        .iter()
        .find(|s| s.sol.method == SolveMethod::Folded)
        .unwrap_or(&solved[0]);
    let mut agreement = Vec::new();
    for (i, a) in solved.iter().enumerate() {
        for b in &solved[i + 1..] {
            let diff = vector_difference(&a.sol.d, &b.sol.d);
            agreement.push(json!({
                "methods": [a.sol.method.to_string(), b.sol.method.to_string()],
                "max_relative_difference": render(&diff),
                "precision": diff.context().to_string(),
                "agree": within(&diff),
            }));
        }
    }
    let curve = grid
        .map(|g| build_curve(primary.sol.method, g, &primary.sol.q, |x| expand_node_function(&primary.sol, x)))
        .transpose()?;
    write_curve(args, curve.as_ref())?;
    if let Some(path) = &args.coefficients {
        write_file(path, &primary.block.coefficients.to_csv())?;
    }
    Ok(json!({
        "solutions": solved.iter().map(|s| to_value(&s.block)).collect::<CliResult<Vec<_>>>()?,
        "agreement": agreement,
        "curve": curve.map(to_value).transpose()?,
    }))
}

fn interpolate(args: &InterpolateArgs) -> CliResult<Outcome> {
    let solve_args = &args.solve;
    let spec = solve_spec(solve_args)?;
    let source = parse_shift(&solve_args.shift)?;
    let ctx = parse_precision(&solve_args.common.precision)?;
    let method = if spec.is_square() {
        match args.method.parse::<SolveMethod>() {
            Ok(SolveMethod::LeastSquares) | Err(_) => {
                return Err(CliError::Usage(format!(
                    "--method must be dense, folded or closed, got `{}`",
                    args.method
                )))
            }
            Ok(m) => m,
        }
    } else {
        SolveMethod::LeastSquares
    };
    let grid = solve_args.grid.as_deref().map(parse_grid).transpose()?;
    let text = std::fs::read_to_string(&args.input)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", args.input.display())))?;
    let table = parse_samples(&text)?;
    let outputs = if ctx.is_exact() {
        interpolate_outputs::<BigRational>(solve_args, spec, &source, &ctx, method, &table.rows, grid.as_deref())?
    } else {
        interpolate_outputs::<BigFloat>(solve_args, spec, &source, &ctx, method, &table.rows, grid.as_deref())?
    };
    Ok(Outcome {
        inputs: merge(
            solve_inputs(solve_args, spec),
            json!({
                "method": method.to_string(),
                "input": args.input.display().to_string(),
                "window": { "lo": table.lo(), "hi": table.hi() },
            }),
        ),
        outputs,
        output: solve_args.common.output.clone(),
        status: EXIT_OK,
        summary: None,
    })
}

fn interpolate_outputs<S: Numeric>(
    args: &SolveArgs,
    spec: SystemSpec,
    source: &QSpec,
    ctx: &PrecisionContext,
    method: SolveMethod,
    rows: &[(i64, BigRational)],
    grid: Option<&[BigRational]>,
) -> CliResult<Value> {
    let solved = solve_checked::<S>(method, spec, source, ctx, args.strict)?;
    let d = &solved.sol;
    let window = SampleWindow::from_pairs(
        rows.iter()
            .map(|(i, v)| (*i, d.q.from_rational_like(v)))
            .collect(),
    )?;
    let series = series_coefficients(&window, d);
    let block = CoefficientBlock::new(
        &solved.block.method,
        &solved.block.precision,
        &series.coefficients,
    );
    let region = certify_region(&window, spec);
    let reproduction = node_reproduction(&window, d)?
        .into_iter()
        .map(|r| json!({ "index": r.index, "error": render(&r.error), "certified": r.certified }))
        .collect::<Vec<_>>();
    let curve = grid
        .map(|g| build_curve(method, g, &d.q, |x| expand_interpolant(&series, x)))
        .transpose()?;
    write_curve(args, curve.as_ref())?;
    if let Some(path) = &args.coefficients {
        write_file(path, &block.to_csv())?;
    }
    Ok(json!({
        "solution": to_value(&solved.block)?,
        "series": to_value(&block)?,
        "certified_region": region.bounds().map(|(lo, hi)| json!({ "lo": lo, "hi": hi })),
        "node_reproduction": {
            "precision": solved.block.precision,
            "nodes": reproduction,
            "certified_bound": render(&reproduction_bound(&window, d)),
        },
        "curve": curve.map(to_value).transpose()?,
    }))
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyRow {
    pub n: usize,
    pub q: String,
    pub identity: &'static str,
    pub passed: bool,
    pub precision: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lhs: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rhs: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub difference: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

fn verify(args: &VerifyArgs) -> CliResult<Outcome> {
    let ctx = parse_precision(&args.precision)?;
    let q_texts: Vec<String> = if args.q.is_empty() {
        VERIFY_Q_SWEEP.iter().map(|s| s.to_string()).collect()
    } else {
        args.q.clone()
    };
    let sources = q_texts
        .iter()
        .map(|t| QSpec::parse_q(t).map_err(|e| CliError::Usage(e.to_string())))
        .collect::<CliResult<Vec<_>>>()?;
    let mut rows = Vec::new();
    for n in 0..=args.n_max {
        for (text, source) in q_texts.iter().zip(&sources) {
            let found = if ctx.is_exact() {
                verify_case(n, text, &source.q_in::<BigRational>(&ctx)?)
            } else {
                verify_case(n, text, &source.q_in::<BigFloat>(&ctx)?)
            };
            rows.extend(found);
        }
    }
    let failed = rows.iter().filter(|r| !r.passed).count();
    let mut table = String::new();
    let _ = writeln!(table, "{:>3}  {:>8}  {:<17}  {:<6}  difference", "n", "q", "identity", "result");
    for r in &rows {
        let _ = writeln!(
            table,
            "{:>3}  {:>8}  {:<17}  {:<6}  {}",
            r.n,
            r.q,
            r.identity,
            if r.passed { "pass" } else { "FAIL" },
            r.difference.as_deref().or(r.detail.as_deref()).unwrap_or("-")
        );
    }
    let _ = writeln!(table, "{} checks, {} failed", rows.len(), failed);
    Ok(Outcome {
        inputs: json!({ "n_max": args.n_max, "q": q_texts, "precision": args.precision }),
        outputs: json!({
            "checks": rows.len(),
            "failed": failed,
            "tolerance_log2": ctx.mantissa_bits().map(agreement_log2_tolerance),
            "rows": to_value(&rows)?,
        }),
        output: args.output.clone(),
        status: if failed == 0 { EXIT_OK } else { EXIT_VERIFICATION },
        summary: Some(table),
    })
}

/// Determinant, palindrome and three-way agreement checks for one `(n, q)`.
pub fn verify_case<S: Scalar>(n: usize, q_text: &str, q: &S) -> Vec<VerifyRow> {
    let precision = q.context().to_string();
    let row = |identity, passed, lhs, rhs, difference, detail| VerifyRow {
        n,
        q: q_text.to_string(),
        identity,
        passed,
        precision: precision.clone(),
        lhs,
        rhs,
        difference,
        detail,
    };
    let mut rows = Vec::new();

    let det = determinant_closed_form(n, q).and_then(|c| Ok((c, determinant_elimination(n, q)?)));
    rows.push(match det {
        Ok((closed, elim)) => {
            let diff = relative_difference(&closed.value, &elim.value);
            let positive = !closed.value.is_negative() && !closed.value.is_zero()
                && !elim.value.is_negative() && !elim.value.is_zero();
            row(
                "determinant",
                positive && within(&diff),
                Some(render(&closed.value)),
                Some(render(&elim.value)),
                Some(render(&diff)),
                (!positive).then(|| "determinant is not positive".to_string()),
            )
        }
        Err(e) => row("determinant", false, None, None, None, Some(e.to_string())),
    });

    let spec = SystemSpec::square(n);
    // each solve must be good to the tolerance its agreement is judged by
    let tol = match q.context().mantissa_bits() {
        Some(bits) => Tolerance {
            log2_backward: 32.0 - bits as f64,
            log2_forward: agreement_log2_tolerance(bits),
        },
        None => Tolerance::for_scalar(q),
    };
    let solved: Vec<_> = SolveMethod::SQUARE
        .iter()
        .map(|&m| (m, solve(m, spec, q, &tol)))
        .collect();
    let failures: Vec<String> = solved
        .iter()
        .filter_map(|(m, r)| r.as_ref().err().map(|e| format!("{m}: {e}")))
        .collect();
    if !failures.is_empty() {
        let detail = Some(failures.join("; "));
        rows.push(row("palindrome", false, None, None, None, detail.clone()));
        rows.push(row("solver-agreement", false, None, None, None, detail));
        return rows;
    }
    let sols: Vec<&NodeCoefficients<S>> = solved.iter().map(|(_, r)| r.as_ref().unwrap()).collect();

    let defects: Vec<S> = sols.iter().map(|s| s.palindrome_defect()).collect();
    let worst = defects
        .iter()
        .fold(q.zero_like(), |m, d| if *d > m { d.clone() } else { m });
    let exact_ok = !S::EXACT || sols.iter().all(|s| s.is_palindrome());
    rows.push(row(
        "palindrome",
        exact_ok && within(&worst),
        None,
        None,
        Some(render(&worst)),
        None,
    ));

    let mut max_diff = q.zero_like();
    for (i, a) in sols.iter().enumerate() {
        for b in &sols[i + 1..] {
            let d = vector_difference(&a.d, &b.d);
            if d > max_diff {
                max_diff = d;
            }
        }
    }
    rows.push(row(
        "solver-agreement",
        within(&max_diff),
        None,
        None,
        Some(render(&max_diff)),
        None,
    ));
    rows
}

fn diagnose(args: &DiagnoseArgs) -> CliResult<Outcome> {
    let source = parse_shift(&args.shift)?;
    let ctx = parse_precision(&args.common.precision)?;
    let mut outputs = if ctx.is_exact() {
        diagnose_outputs::<BigRational>(args.n, &source, &ctx)?
    } else {
        diagnose_outputs::<BigFloat>(args.n, &source, &ctx)?
    };
    let reference_bits = ctx.mantissa_bits().unwrap_or(DEFAULT_MANTISSA_BITS);
    let target = 16.0 - reference_bits as f64;
    let cap = max_bits()?;
    let (required, escalation) = required_bits(args.n, &source, target, cap)?;
    outputs = merge(
        outputs,
        json!({
            "required_bits": required,
            "escalation_bits": escalation,
            "target_log2_error": target,
            "max_bits": cap,
        }),
    );
    Ok(Outcome {
        inputs: merge(
            json!({ "n": args.n, "precision": args.common.precision }),
            shift_inputs(&args.shift),
        ),
        outputs,
        output: args.common.output.clone(),
        status: EXIT_OK,
        summary: None,
    })
}

fn diagnose_outputs<S: Scalar>(n: usize, source: &QSpec, ctx: &PrecisionContext) -> CliResult<Value> {
    let q: S = source.q_in(ctx)?;
    let det = determinant_closed_form(n, &q)?;
    let side = 2 * n as i64;
    let min_entry = integer_power(&q, side * side)?;
    let pivots = folded_pivots(n, &q)?;
    let magnitudes: Vec<S> = pivots.iter().map(|p| p.abs()).collect();
    let largest = magnitudes.iter().fold(q.zero_like(), |m, p| if *p > m { p.clone() } else { m });
    let smallest = magnitudes
        .iter()
        .fold(largest.clone(), |m, p| if *p < m { p.clone() } else { m });
    let condition = largest / smallest;
    let precision = ctx.to_string();
    Ok(json!({
        "precision": precision,
        "determinant": { "value": render(&det.value), "exponent": det.exponent },
        "min_entry": render(&min_entry),
        "max_entry": render(&q.one_like()),
        "folded_pivots": pivots.iter().map(render).collect::<Vec<_>>(),
        "condition": render(&condition),
        "log2_condition": condition.log2_abs(),
    }))
}

/// Smallest width at which the dense solve meets `target`, and the width
/// the doubling schedule from 53 bits would settle on.
fn required_bits(
    n: usize,
    source: &QSpec,
    target: f64,
    cap: usize,
) -> CliResult<(Option<usize>, Option<usize>)> {
    let spec = SystemSpec::square(n);
    let policy = Escalation::new(DIAGNOSE_START_BITS)
        .with_max_bits(cap)
        .with_target(target);
    let found = match solve_escalating(SolveMethod::Dense, spec, source, &policy) {
        Ok(sol) => sol.precision.mantissa_bits().unwrap_or(DIAGNOSE_START_BITS),
        Err(Error::PrecisionExhausted { .. }) => return Ok((None, None)),
        Err(e) => return Err(e.into()),
    };
    let passes = |bits: usize| -> CliResult<bool> {
        let q = source.float_q(bits)?;
        let tol = Tolerance {
            log2_backward: 32.0 - bits as f64,
            log2_forward: target,
        };
        match solve(SolveMethod::Dense, spec, &q, &tol) {
            Ok(_) => Ok(true),
            Err(Error::PrecisionExhausted { .. }) => Ok(false),
            Err(e) => Err(e.into()),
        }
    };
    // bisect between the last failing and the first passing width
    let (mut lo, mut hi) = (found / 2, found);
    if hi == DIAGNOSE_START_BITS || lo < DIAGNOSE_START_BITS {
        return Ok((Some(hi), Some(found)));
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if passes(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((Some(hi), Some(found)))
}
