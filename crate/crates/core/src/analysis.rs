//! Crossing times, inverse curves, asymptotic speed-up and the threshold
//! tables comparing imperfect feedback with measurement plus a final rotation.

use std::fmt;

use crate::analytic::{self, Curve};
use crate::error::{check, Result, RspError};
use crate::model::BenchmarkConvention;

/// Default root tolerance in time.
pub const CROSSING_TOL: f64 = 1e-4;
/// Tolerance when inverting a curve.
pub const INVERSE_TOL: f64 = 1e-6;
/// Tolerance on table parameters. Much tighter than the printed digits so the
/// smallest delay entries (order 10⁻⁴) keep their relative accuracy.
const PARAM_TOL: f64 = 1e-10;

/// Bisection on `[lo, hi]`, which must bracket a sign change of `f`.
pub fn bisect(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let (fa, fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if !(fa.signum() != fb.signum()) {
        return Err(RspError::NoSignChange {
            lo,
            hi,
            f_lo: fa,
            f_hi: fb,
        });
    }
    let a_negative = fa < 0.0;
    while (b - a).abs() > tol {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if (fm < 0.0) == a_negative {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// What a feedback curve is compared against.
#[derive(Debug, Clone, PartialEq)]
pub enum Reference {
    Benchmark(BenchmarkConvention),
    Curve(Curve),
}

impl Reference {
    fn eval(&self, gamma: f64, t: f64) -> f64 {
        match self {
            Reference::Benchmark(conv) => conv.value(gamma, t),
            Reference::Curve(c) => c.eval(t),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossingQuery {
    pub curve: Curve,
    pub reference: Reference,
    pub bracket: (f64, f64),
    pub tol: f64,
}

impl CrossingQuery {
    pub fn new(curve: Curve, reference: Reference, lo: f64, hi: f64) -> Self {
        Self {
            curve,
            reference,
            bracket: (lo, hi),
            tol: CROSSING_TOL,
        }
    }
}

/// Time at which the feedback curve meets its reference.
pub fn crossing_time(q: &CrossingQuery) -> Result<f64> {
    closed_form(&q.curve)?;
    let gamma = q.curve.params.gamma;
    bisect(
        |t| q.curve.eval(t) - q.reference.eval(gamma, t),
        q.bracket.0,
        q.bracket.1,
        q.tol,
    )
}

fn closed_form(curve: &Curve) -> Result<()> {
    if curve.has_closed_form() {
        Ok(())
    } else {
        Err(RspError::NoClosedForm(curve.name().to_string()))
    }
}

/// First time at which a non-decreasing curve reaches `target`.
pub fn time_to_value(curve: &Curve, target: f64) -> Result<f64> {
    closed_form(curve)?;
    let steady_state = curve.steady_state();
    if target >= steady_state {
        return Err(RspError::Unreachable {
            target,
            steady_state,
        });
    }
    if curve.eval(0.0) >= target {
        return Ok(0.0);
    }
    let mut hi = 1.0 / curve.params.gamma;
    while curve.eval(hi) < target {
        hi *= 2.0;
        if hi > 1e6 / curve.params.gamma {
            return Err(RspError::Unreachable {
                target,
                steady_state,
            });
        }
    }
    bisect(|t| curve.eval(t) - target, 0.0, hi, INVERSE_TOL)
}

/// Ratio of open-loop to ideal-feedback times to reach Bloch length `1 - ε`,
/// using the long-time open-loop form. Solved in log space so that ε far below
/// machine epsilon is still meaningful.
pub fn asymptotic_speedup(epsilons: &[f64]) -> Result<Vec<f64>> {
    epsilons
        .iter()
        .map(|&eps| {
            check(
                eps > 0.0 && eps <= 1e-2,
                "epsilon",
                eps,
                "must lie in (0, 1e-2]",
            )?;
            let target = -eps.ln();
            // Open loop: 1 - x = e^{-t}/√(πt).
            let t_open = bisect(
                |t| t + 0.5 * (std::f64::consts::PI * t).ln() - target,
                1e-3,
                2.0 * target + 10.0,
                1e-12,
            )?;
            // Ideal: 1 - x = e^{-2t}/(1 + x).
            let t_ideal = bisect(
                |t| 2.0 * t + (1.0 + analytic::ideal_x(1.0, t)).ln() - target,
                0.0,
                target + 10.0,
                1e-12,
            )?;
            Ok(t_open / t_ideal)
        })
        .collect()
}

/// Control imperfections compared in the threshold tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Imperfection {
    /// Constant strength `√(2γ)α`.
    ConstantStrength,
    /// Calibration error δ on the ideal schedule.
    Calibration,
    /// Efficiency η with the η = 1 schedule.
    EfficiencyOblivious,
    /// Efficiency η with the η-aware schedule.
    EfficiencyOptimal,
    /// Delay τ with `Ω = √(2γ)`.
    DelayOblivious,
    /// Delay τ with `Ω = √(2γ)(1 - 3γτ)`.
    DelayOptimal,
}

impl Imperfection {
    pub const ALL: [Imperfection; 6] = [
        Imperfection::ConstantStrength,
        Imperfection::Calibration,
        Imperfection::EfficiencyOblivious,
        Imperfection::EfficiencyOptimal,
        Imperfection::DelayOblivious,
        Imperfection::DelayOptimal,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Imperfection::ConstantStrength => "Constant FB strength",
            Imperfection::Calibration => "Time dep. cal. errors",
            Imperfection::EfficiencyOblivious => "Inefficient det. oblivious FB",
            Imperfection::EfficiencyOptimal => "Inefficient det. optimal FB",
            Imperfection::DelayOblivious => "Time delay oblivious FB",
            Imperfection::DelayOptimal => "Time delay optimal FB",
        }
    }

    /// Machine-readable name used in CSV output.
    pub fn key(self) -> &'static str {
        match self {
            Imperfection::ConstantStrength => "alpha",
            Imperfection::Calibration => "delta",
            Imperfection::EfficiencyOblivious => "eta-oblivious",
            Imperfection::EfficiencyOptimal => "eta-optimal",
            Imperfection::DelayOblivious => "tau-oblivious",
            Imperfection::DelayOptimal => "tau-optimal",
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Imperfection::ConstantStrength => "α",
            Imperfection::Calibration => "δ",
            Imperfection::EfficiencyOblivious | Imperfection::EfficiencyOptimal => "η",
            Imperfection::DelayOblivious | Imperfection::DelayOptimal => "τ",
        }
    }

    /// Search domain of the parameter.
    fn domain(self) -> (f64, f64) {
        match self {
            Imperfection::ConstantStrength => (0.0, 10.0),
            Imperfection::Calibration => (0.0, 1.0),
            Imperfection::EfficiencyOblivious => (0.5, 1.0),
            Imperfection::EfficiencyOptimal => (0.0, 1.0),
            // Stay inside the perturbative regime.
            Imperfection::DelayOblivious => (0.0, 0.2),
            Imperfection::DelayOptimal => (0.0, 1.0 / 3.0 - 1e-9),
        }
    }

    /// Bloch length `x(t)` of the imperfect protocol with parameter `p` (γ = 1).
    pub fn feedback_x(self, t: f64, p: f64) -> f64 {
        match self {
            Imperfection::ConstantStrength => analytic::constant_x(1.0, t, p),
            Imperfection::Calibration => analytic::calibrated_x(1.0, t, p),
            Imperfection::EfficiencyOblivious => analytic::eta_oblivious_x(1.0, t, p).value,
            Imperfection::EfficiencyOptimal => analytic::eta_optimal_x(1.0, t, p),
            Imperfection::DelayOblivious => analytic::delay_oblivious_x(1.0, t, p),
            Imperfection::DelayOptimal => analytic::constant_x(1.0, t, 1.0 - 3.0 * p),
        }
    }
}

/// Where the comparison is made.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TableReference {
    /// Compare values at a fixed time (first table).
    FixedTime(f64),
    /// Compare at the time the benchmark reaches this value (second table).
    FixedLength(f64),
}

impl TableReference {
    pub const TABLE_ONE: [TableReference; 2] = [
        TableReference::FixedTime(2.0),
        TableReference::FixedTime(4.0),
    ];
    pub const TABLE_TWO: [TableReference; 2] = [
        TableReference::FixedLength(1.0 - 1e-2),
        TableReference::FixedLength(1.0 - 1e-4),
    ];

    pub fn value(self) -> f64 {
        match self {
            TableReference::FixedTime(v) | TableReference::FixedLength(v) => v,
        }
    }
}

impl fmt::Display for TableReference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TableReference::FixedTime(t) => write!(f, "t={t}"),
            TableReference::FixedLength(x) => write!(f, "x={x}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub kind: Imperfection,
    pub reference: TableReference,
    /// Parameter values for which feedback beats the benchmark; `None` if none do.
    pub interval: Option<(f64, f64)>,
}

/// Comparison time and target value for a reference point.
fn comparison_point(
    reference: TableReference,
    benchmark: BenchmarkConvention,
) -> Result<(f64, f64)> {
    match reference {
        TableReference::FixedTime(t) => {
            check(t > 0.0, "t", t, "must be positive")?;
            Ok((t, benchmark.value(1.0, t)))
        }
        TableReference::FixedLength(x) => {
            check(x > 0.0 && x < 1.0, "x", x, "must lie in (0, 1)")?;
            let g = |t: f64| benchmark.value(1.0, t) - x;
            if g(0.0) >= 0.0 {
                return Ok((0.0, x));
            }
            let mut hi = 1.0;
            while g(hi) < 0.0 {
                hi *= 2.0;
            }
            // The table entries are sensitive to this time, so solve it tightly.
            Ok((bisect(g, 0.0, hi, 1e-13)?, x))
        }
    }
}

/// Parameter range over which the imperfect protocol matches or beats the
/// benchmark at the reference point.
pub fn parameter_range(
    kind: Imperfection,
    reference: TableReference,
    benchmark: BenchmarkConvention,
) -> Result<TableRow> {
    let (t, target) = comparison_point(reference, benchmark)?;
    let f = |p: f64| kind.feedback_x(t, p) - target;
    let (lo, hi) = kind.domain();
    let interval = match kind {
        Imperfection::ConstantStrength => {
            let peak = golden_max(|a| kind.feedback_x(t, a), lo, hi, 1e-12);
            if f(peak) < 0.0 {
                None
            } else {
                Some((
                    bisect(f, lo, peak, PARAM_TOL)?,
                    bisect(f, peak, hi, PARAM_TOL)?,
                ))
            }
        }
        // Performance improves with η: the range is [η*, 1].
        Imperfection::EfficiencyOblivious | Imperfection::EfficiencyOptimal => {
            if f(hi) < 0.0 {
                None
            } else if f(lo) >= 0.0 {
                Some((lo, hi))
            } else {
                Some((bisect(f, lo, hi, PARAM_TOL)?, hi))
            }
        }
        // Performance degrades with δ and τ: the range is [0, p*].
        _ => {
            if f(lo) < 0.0 {
                None
            } else if f(hi) >= 0.0 {
                Some((lo, hi))
            } else {
                Some((lo, bisect(f, lo, hi, PARAM_TOL)?))
            }
        }
    };
    Ok(TableRow {
        kind,
        reference,
        interval,
    })
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    while (b - a).abs() > tol {
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - r * (b - a);
        d = a + r * (b - a);
    }
    0.5 * (a + b)
}

/// Both tables: first the fixed-time rows, then the fixed-length rows, each
/// ordered by imperfection with range A before range B.
pub fn reproduce_tables(benchmark: BenchmarkConvention) -> Result<Vec<TableRow>> {
    let mut rows = Vec::with_capacity(24);
    for refs in [TableReference::TABLE_ONE, TableReference::TABLE_TWO] {
        for kind in Imperfection::ALL {
            for reference in refs {
                rows.push(parameter_range(kind, reference, benchmark)?);
            }
        }
    }
    Ok(rows)
}

/// Rows of one table (1 = fixed time, 2 = fixed length).
pub fn table(which: u8, benchmark: BenchmarkConvention) -> Result<Vec<TableRow>> {
    let refs = match which {
        1 => TableReference::TABLE_ONE,
        2 => TableReference::TABLE_TWO,
        _ => {
            return Err(RspError::InvalidParameter {
                name: "table",
                value: f64::from(which),
                reason: "must be 1 or 2",
            })
        }
    };
    let mut rows = Vec::with_capacity(12);
    for kind in Imperfection::ALL {
        for reference in refs {
            rows.push(parameter_range(kind, reference, benchmark)?);
        }
    }
    Ok(rows)
}

/// Decimal places printed for each entry, following the reference layout.
fn printed_decimals(kind: Imperfection, reference: TableReference) -> usize {
    use Imperfection::*;
    let range_b =
        reference == TableReference::TABLE_ONE[1] || reference == TableReference::TABLE_TWO[1];
    match (reference, range_b) {
        (TableReference::FixedTime(_), false) => match kind {
            DelayOblivious | DelayOptimal => 4,
            _ => 3,
        },
        (TableReference::FixedTime(_), true) => 4,
        (TableReference::FixedLength(_), false) => match kind {
            ConstantStrength => 3,
            DelayOblivious | DelayOptimal => 5,
            _ => 4,
        },
        (TableReference::FixedLength(_), true) => match kind {
            Calibration => 5,
            DelayOblivious => 7,
            DelayOptimal => 6,
            _ => 4,
        },
    }
}

/// One cell such as `0.956 ≤ α ≤ 1.189` or `0 ≤ τ ≤ 0.0045`.
pub fn format_cell(row: &TableRow) -> String {
    let d = printed_decimals(row.kind, row.reference);
    let s = row.kind.symbol();
    match row.interval {
        None => "none".to_string(),
        Some((lo, hi)) => {
            let fmt_end = |v: f64| {
                if v == 0.0 || v == 1.0 {
                    format!("{v}")
                } else {
                    format!("{v:.d$}")
                }
            };
            format!("{} ≤ {s} ≤ {}", fmt_end(lo), fmt_end(hi))
        }
    }
}

/// Human-readable table with one row per imperfection and ranges A and B side by side.
pub fn format_table(rows: &[TableRow], benchmark: BenchmarkConvention) -> String {
    let mut out = String::new();
    if benchmark != BenchmarkConvention::LambdaMax {
        out.push_str(&format!(
            "# benchmark convention: {benchmark} (reference tables use lambda)\n"
        ));
    }
    let width = 32;
    out.push_str(&format!(
        "{:<width$}{:<26}{}\n",
        "Control imperfection", "Parameter range A", "Parameter range B"
    ));
    for pair in rows.chunks(2) {
        let a = format_cell(&pair[0]);
        let b = pair.get(1).map(format_cell).unwrap_or_default();
        let pad = 26usize.saturating_sub(a.chars().count());
        out.push_str(&format!(
            "{:<width$}{a}{}{b}\n",
            pair[0].kind.label(),
            " ".repeat(pad)
        ));
    }
    out
}
