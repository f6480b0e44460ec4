//! Checks of the discrete inequalities on concrete sequences and sampled
//! functions.

use std::ops::RangeInclusive;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grids::{
    dq_norm0_raw, dq_raw, l2_time_norm, seq_norm0, time_sobolev_norm, weighted_dq_norm_raw,
    Derivative, SeqNormKind, TimeGrid, TimeSampler, Trajectory,
};
use crate::inequality::constants::{c_a, scale_factor, scale_factor_ceiling, ConstantsTable};
use crate::report::{CheckId, CheckParams, InequalityReport};
use crate::space::HilbertSpace;

/// Default composite-trapezoid point count for continuous time norms.
pub const DEFAULT_QUAD_POINTS: usize = 8193;

/// Means below this multiple of the largest snapshot norm count as zero.
const ZERO_MEAN_TOL: f64 = 1e-12;

/// The sequence lemmas.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Lemma {
    /// `max_n ‖f_n‖ ≤ c_A ‖f‖_0^{1/2} ‖Df‖_0^{1/2}`, zero mean.
    Agmon,
    /// `‖D^k f_n‖ ≤ c_{A,1} ‖D^k f‖_0^{1/2} ‖D^k f‖_1^{1/2}`.
    AgmonDk,
    /// Periodic `‖D^k f‖_0 ≤ ‖D^{k−1} f‖_0^{1/2} ‖D^{k+1} f‖_0^{1/2}`.
    PartsPeriodic,
    /// Periodic `‖Df‖_0 ≤ ‖f‖_0^{(m−1)/m} ‖D^m f‖_0^{1/m}`.
    InterpPeriodic,
    /// Periodic `max_n ‖f_n‖ ≤ c_A ‖f‖_0^{1−1/(2m)} ‖D^m f‖_0^{1/(2m)}`, zero mean.
    MaxEstPeriodic,
    /// `‖D^k f‖_0 ≤ c_{B,1} ‖D^{k−1} f‖_0^{1/2} ‖D^k f‖_1^{1/2}`, with
    /// `c_{B,1}/√2` for `k = 1`.
    PartsGeneral,
    /// `‖Df‖_0 ≤ c_m ‖f‖_0^{(m−1)/m} ‖Df‖_{m−1}^{1/m}`.
    InterpGeneral,
    /// `max_n ‖f_n‖ ≤ c_A c_m^{1/2} ‖f‖_0^{1−1/(2m)} ‖Df‖_{m−1}^{1/(2m)}`, zero mean.
    MaxEstGeneral,
}

impl Lemma {
    pub const ALL: [Lemma; 8] = [
        Lemma::Agmon,
        Lemma::AgmonDk,
        Lemma::PartsPeriodic,
        Lemma::InterpPeriodic,
        Lemma::MaxEstPeriodic,
        Lemma::PartsGeneral,
        Lemma::InterpGeneral,
        Lemma::MaxEstGeneral,
    ];

    pub fn check_id(self) -> CheckId {
        match self {
            Lemma::Agmon => CheckId::Agmon,
            Lemma::AgmonDk => CheckId::AgmonDk,
            Lemma::PartsPeriodic => CheckId::PartsPeriodic,
            Lemma::InterpPeriodic => CheckId::InterpPeriodic,
            Lemma::MaxEstPeriodic => CheckId::MaxEstPeriodic,
            Lemma::PartsGeneral => CheckId::PartsGeneral,
            Lemma::InterpGeneral => CheckId::InterpGeneral,
            Lemma::MaxEstGeneral => CheckId::MaxEstGeneral,
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        Lemma::ALL
            .into_iter()
            .find(|l| l.check_id().as_str() == s)
            .map_or_else(|| invalid(format!("unknown lemma {s:?}")), Ok)
    }

    pub fn name(self) -> &'static str {
        self.check_id().as_str()
    }

    /// Lemmas stated for periodic sequences.
    pub fn is_periodic(self) -> bool {
        matches!(
            self,
            Lemma::PartsPeriodic | Lemma::InterpPeriodic | Lemma::MaxEstPeriodic
        )
    }

    /// Whether the order argument is `k` (difference order) or `m`.
    fn order_is_k(self) -> bool {
        matches!(
            self,
            Lemma::AgmonDk | Lemma::PartsPeriodic | Lemma::PartsGeneral
        )
    }

    /// Orders accepted on a grid of `M` intervals. Agmon ignores the order
    /// and reports `0..=0`.
    pub fn orders(self, intervals: usize) -> RangeInclusive<usize> {
        let m = intervals;
        match self {
            Lemma::Agmon => 0..=0,
            Lemma::AgmonDk | Lemma::PartsPeriodic | Lemma::PartsGeneral | Lemma::MaxEstGeneral => {
                1..=m.saturating_sub(1)
            }
            Lemma::InterpPeriodic | Lemma::InterpGeneral => 2..=m,
            Lemma::MaxEstPeriodic => 1..=m,
        }
    }

    /// Smallest interval count admitting `order`.
    pub fn min_intervals(self, order: usize) -> usize {
        (1..)
            .find(|&m| self.orders(m).contains(&order))
            .unwrap_or(usize::MAX)
    }

    fn params(self, order: usize) -> CheckParams {
        if self == Lemma::Agmon {
            CheckParams::default()
        } else if self.order_is_k() {
            CheckParams::k(order)
        } else {
            CheckParams::m(order)
        }
    }
}

fn check_order(lemma: Lemma, order: usize, intervals: usize) -> Result<()> {
    let range = lemma.orders(intervals);
    if !range.contains(&order) {
        return invalid(format!(
            "{} with M = {intervals} needs order in {}..={}, got {order}",
            lemma.name(),
            range.start(),
            range.end()
        ));
    }
    Ok(())
}

fn max_norm(values: &DMatrix<f64>, space: &HilbertSpace) -> (f64, usize) {
    let mut best = (0.0, 0);
    for (n, c) in values.column_iter().enumerate() {
        let v = space.norm_view(c);
        if v > best.0 {
            best = (v, n);
        }
    }
    best
}

/// Columns with their mean removed; also reports whether the mean was
/// significant.
fn centered(values: &DMatrix<f64>, space: &HilbertSpace) -> (DMatrix<f64>, bool) {
    let mean = values.column_mean();
    let scale = max_norm(values, space).0;
    let significant = space.norm(&mean) > ZERO_MEAN_TOL * scale;
    let mut out = values.clone();
    for mut c in out.column_iter_mut() {
        c -= &mean;
    }
    (out, significant)
}

/// `a^p` with `0^0 = 1` and `0^p = 0` for `p > 0`.
fn pow(a: f64, p: f64) -> f64 {
    if p == 0.0 {
        1.0
    } else {
        a.powf(p)
    }
}

/// Evaluates one lemma on a trajectory.
///
/// Periodic lemmas read `f` modulo `M` and require `f.periodic()`. General
/// lemmas read `f_0..f_M` as given. Lemmas stated for zero-mean sequences
/// subtract the mean first (over `f_1..f_M` in the periodic case) and say so
/// in the report note.
pub fn check_lemma(
    f: &Trajectory,
    lemma: Lemma,
    order: usize,
    consts: &ConstantsTable,
) -> Result<InequalityReport> {
    let big_m = f.grid().intervals();
    check_order(lemma, order, big_m)?;
    if lemma.is_periodic() && !f.periodic() {
        return invalid(format!("{} needs a periodic trajectory", lemma.name()));
    }
    let step = f.grid().step();
    let space = f.space();
    let params = lemma.params(order);
    let id = lemma.check_id();
    let report = match lemma {
        Lemma::PartsPeriodic => {
            let k = order;
            let lhs = dq_norm0_raw(f.values(), step, k, true, space)?;
            let a = dq_norm0_raw(f.values(), step, k - 1, true, space)?;
            let b = dq_norm0_raw(f.values(), step, k + 1, true, space)?;
            InequalityReport::bound(id, lhs, (a * b).sqrt(), params)
        }
        Lemma::InterpPeriodic => {
            let m = order as f64;
            let lhs = dq_norm0_raw(f.values(), step, 1, true, space)?;
            let a = dq_norm0_raw(f.values(), step, 0, true, space)?;
            let b = dq_norm0_raw(f.values(), step, order, true, space)?;
            InequalityReport::bound(id, lhs, pow(a, (m - 1.0) / m) * pow(b, 1.0 / m), params)
        }
        Lemma::MaxEstPeriodic => {
            let m = order as f64;
            let tail = f.values().columns(1, big_m).into_owned();
            let (g, significant) = centered(&tail, space);
            let (lhs, at) = max_norm(&g, space);
            // Periodic closure of the centred values.
            let mut closed = DMatrix::zeros(g.nrows(), big_m + 1);
            closed.column_mut(0).copy_from(&g.column(big_m - 1));
            closed.columns_mut(1, big_m).copy_from(&g);
            let a = dq_norm0_raw(&closed, step, 0, true, space)?;
            let b = dq_norm0_raw(&closed, step, order, true, space)?;
            let rhs = c_a() * pow(a, 1.0 - 1.0 / (2.0 * m)) * pow(b, 1.0 / (2.0 * m));
            let r = InequalityReport::bound(id, lhs, rhs, params.with_n(at + 1));
            if significant {
                r.with_note("mean of f_1..f_M subtracted")
            } else {
                r
            }
        }
        Lemma::Agmon => agmon_report(f.values(), step, space, SeqNormKind::Uniform)?,
        Lemma::AgmonDk => agmon_dk_report(f, order, consts)?,
        Lemma::PartsGeneral => {
            let k = order;
            let (g, significant) = centered(f.values(), space);
            let lhs = dq_norm0_raw(&g, step, k, false, space)?;
            let a = dq_norm0_raw(&g, step, k - 1, false, space)?;
            let b = weighted_dq_norm_raw(&g, f.grid(), k, 1, space)?;
            let c = if k == 1 {
                consts.base().c_b1 / std::f64::consts::SQRT_2
            } else {
                consts.base().c_b1
            };
            let r = InequalityReport::bound(id, lhs, c * (a * b).sqrt(), params);
            if significant {
                r.with_note("mean subtracted")
            } else {
                r
            }
        }
        Lemma::InterpGeneral => {
            let m = order as f64;
            let (g, significant) = centered(f.values(), space);
            let lhs = dq_norm0_raw(&g, step, 1, false, space)?;
            let a = seq_norm0(&g, step, SeqNormKind::Uniform, space)?;
            let b = weighted_dq_norm_raw(&g, f.grid(), 1, order - 1, space)?;
            let cm = consts.c_m(order)?;
            let rhs = cm * pow(a, (m - 1.0) / m) * pow(b, 1.0 / m);
            let r = InequalityReport::bound(id, lhs, rhs, params);
            if significant {
                r.with_note("mean subtracted")
            } else {
                r
            }
        }
        Lemma::MaxEstGeneral => {
            let m = order as f64;
            let (g, significant) = centered(f.values(), space);
            let (lhs, at) = max_norm(&g, space);
            let a = seq_norm0(&g, step, SeqNormKind::Uniform, space)?;
            let b = weighted_dq_norm_raw(&g, f.grid(), 1, order - 1, space)?;
            let cm = consts.c_m(order)?;
            let rhs = c_a() * cm.sqrt() * pow(a, 1.0 - 1.0 / (2.0 * m)) * pow(b, 1.0 / (2.0 * m));
            let r = InequalityReport::bound(id, lhs, rhs, params.with_n(at));
            if significant {
                r.with_note("mean subtracted")
            } else {
                r
            }
        }
    };
    Ok(report)
}

/// Agmon bound with either weighting of `‖f‖_0`. The mean over `f_0..f_M`
/// is removed first.
pub fn check_agmon(f: &Trajectory, kind: SeqNormKind) -> Result<InequalityReport> {
    agmon_report(f.values(), f.grid().step(), f.space(), kind)
}

fn agmon_report(
    values: &DMatrix<f64>,
    step: f64,
    space: &HilbertSpace,
    kind: SeqNormKind,
) -> Result<InequalityReport> {
    let (g, significant) = centered(values, space);
    let (lhs, at) = max_norm(&g, space);
    let a = seq_norm0(&g, step, kind, space)?;
    let b = dq_norm0_raw(&g, step, 1, false, space)?;
    let r = InequalityReport::bound(
        CheckId::Agmon,
        lhs,
        c_a() * (a * b).sqrt(),
        CheckParams::default().with_n(at),
    );
    Ok(if significant {
        r.with_note("mean subtracted")
    } else {
        r
    })
}

fn agmon_dk_report(f: &Trajectory, k: usize, consts: &ConstantsTable) -> Result<InequalityReport> {
    let step = f.grid().step();
    let space = f.space();
    let d = dq_raw(f.values(), step, k, false)?;
    let a = (step
        * d.values
            .column_iter()
            .map(|c| space.norm_view(c).powi(2))
            .sum::<f64>())
    .sqrt();
    let b = weighted_dq_norm_raw(f.values(), f.grid(), k, 1, space)?;
    let rhs = consts.base().c_a1 * (a * b).sqrt();
    let (lhs, at) = max_norm(&d.values, space);
    let big_m = f.grid().intervals();
    let report = InequalityReport::bound(
        CheckId::AgmonDk,
        lhs,
        rhs,
        CheckParams::k(k).with_n(at + d.first_index),
    );
    // The bound is asserted on n = k..M; flag the endpoint separately.
    let last = space.norm_view(d.values.column(d.len() - 1));
    let interior = (0..d.len() - 1)
        .map(|j| space.norm_view(d.values.column(j)))
        .fold(0.0, f64::max);
    let interior_ok =
        InequalityReport::bound(CheckId::AgmonDk, interior, rhs, CheckParams::k(k)).pass;
    let endpoint_ok = InequalityReport::bound(CheckId::AgmonDk, last, rhs, CheckParams::k(k)).pass;
    Ok(if interior_ok && !endpoint_ok {
        report.with_note(format!("violation only at n = M = {big_m}"))
    } else {
        report
    })
}

/// Which function theorem to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FunctionTheorem {
    /// `T`-periodic functions, sequence `f_1..f_M`, `1 ≤ m ≤ M−1`.
    Periodic,
    /// Any function, sequence `f_0..f_M`, `1 ≤ m ≤ M`.
    General,
}

/// The difference-quotient bound and the pointwise bound of a function
/// theorem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionTheoremReports {
    pub dq: InequalityReport,
    pub max: InequalityReport,
}

/// Snapshots `f(t_n)` of a sampler on a grid, as an `N × (M+1)` matrix.
pub fn sample_values(sampler: &dyn TimeSampler, grid: &TimeGrid) -> Result<DMatrix<f64>> {
    let n = sampler.dim();
    let mut values = DMatrix::zeros(n, grid.intervals() + 1);
    for (j, t) in grid.nodes().into_iter().enumerate() {
        let v = sampler.sample(t, 0)?;
        if v.len() != n {
            return invalid(format!("sampler returned length {}, expected {n}", v.len()));
        }
        values.column_mut(j).copy_from(&v);
    }
    Ok(values)
}

/// Evaluates both bounds of a function theorem for `f` sampled on `grid`.
///
/// Continuous norms use `quad_points` composite-trapezoid nodes. The
/// `‖f_τ‖_0 / √T` term is included only when the sequence mean is nonzero.
pub fn check_function_theorem(
    sampler: &dyn TimeSampler,
    grid: &TimeGrid,
    space: &HilbertSpace,
    variant: FunctionTheorem,
    m: usize,
    consts: &ConstantsTable,
    quad_points: usize,
) -> Result<FunctionTheoremReports> {
    space.check_dim(sampler.dim(), "sampler")?;
    let big_m = grid.intervals();
    let ok = match variant {
        FunctionTheorem::Periodic => (1..big_m).contains(&m),
        FunctionTheorem::General => (1..=big_m).contains(&m),
    };
    if !ok {
        return invalid(format!("order m = {m} inadmissible for M = {big_m}"));
    }
    if sampler.max_order() < m {
        return invalid(format!(
            "sampler supplies derivatives up to {}, need {m}",
            sampler.max_order()
        ));
    }
    let values = sample_values(sampler, grid)?;
    let step = grid.step();
    let duration = grid.duration();
    let mf = m as f64;
    let two = 2.0f64;
    match variant {
        FunctionTheorem::Periodic => {
            let f0 = dq_norm0_raw(&values, step, 0, true, space)?;
            let df = dq_norm0_raw(&values, step, 1, true, space)?;
            let dm = l2_time_norm(sampler, space, duration, m, quad_points)?;
            let rhs_dq = two.powf((mf - 1.0) / mf)
                * mf.powf(1.0 / mf)
                * pow(f0, (mf - 1.0) / mf)
                * pow(dm, 1.0 / mf);
            let dq =
                InequalityReport::bound(CheckId::PeriodicFunctionDq, df, rhs_dq, CheckParams::m(m));
            let tail = values.columns(1, big_m).into_owned();
            let (lhs, at) = max_norm(&tail, space);
            let mean_nonzero = centered(&tail, space).1;
            let mut rhs = two.powf((mf - 1.0) / (2.0 * mf))
                * mf.powf(1.0 / (2.0 * mf))
                * c_a()
                * pow(f0, 1.0 - 1.0 / (2.0 * mf))
                * pow(dm, 1.0 / (2.0 * mf));
            if mean_nonzero {
                rhs += f0 / duration.sqrt();
            }
            let max = InequalityReport::bound(
                CheckId::PeriodicFunctionMax,
                lhs,
                rhs,
                CheckParams::m(m).with_n(at + 1),
            );
            Ok(FunctionTheoremReports { dq, max })
        }
        FunctionTheorem::General => {
            let f0 = seq_norm0(&values, step, SeqNormKind::Uniform, space)?;
            let df = dq_norm0_raw(&values, step, 1, false, space)?;
            let h = time_sobolev_norm(&Derivative(sampler), space, duration, m - 1, quad_points)?;
            let cm = consts.c_m(m)?;
            let rhs_dq =
                two.powf((mf - 1.0) / mf) * cm * pow(f0, (mf - 1.0) / mf) * pow(h, 1.0 / mf);
            let dq =
                InequalityReport::bound(CheckId::GeneralFunctionDq, df, rhs_dq, CheckParams::m(m));
            let (lhs, at) = max_norm(&values, space);
            let mean_nonzero = centered(&values, space).1;
            let mut rhs = two.powf((mf - 1.0) / (2.0 * mf))
                * c_a()
                * cm.sqrt()
                * pow(f0, 1.0 - 1.0 / (2.0 * mf))
                * pow(h, 1.0 / (2.0 * mf));
            if mean_nonzero {
                rhs += f0 / duration.sqrt();
            }
            let max = InequalityReport::bound(
                CheckId::GeneralFunctionMax,
                lhs,
                rhs,
                CheckParams::m(m).with_n(at),
            );
            Ok(FunctionTheoremReports { dq, max })
        }
    }
}

/// Slack added to the right side of the sampled-derivative checks to absorb
/// quadrature error.
pub const QUADRATURE_SLACK: f64 = 1e-8;

/// `‖D^k f_τ‖_0 ≤ k ‖∂^k f‖_{L²(0,T,X)}` for `k ≥ 1`.
pub fn check_dq_derivative(
    sampler: &dyn TimeSampler,
    grid: &TimeGrid,
    space: &HilbertSpace,
    k: usize,
    quad_points: usize,
) -> Result<InequalityReport> {
    if k == 0 || k > grid.intervals() {
        return invalid(format!("k = {k} outside 1..=M"));
    }
    let values = sample_values(sampler, grid)?;
    let lhs = dq_norm0_raw(&values, grid.step(), k, false, space)?;
    let rhs = k as f64 * l2_time_norm(sampler, space, grid.duration(), k, quad_points)?;
    Ok(InequalityReport::bound(
        CheckId::DqDerivative,
        lhs,
        rhs + QUADRATURE_SLACK,
        CheckParams::k(k),
    ))
}

/// `‖D f_τ‖_{m−1}^{1/m} ≤ 4 ‖∂_t f‖_{H^{m−1}(0,T,X)}^{1/m}` for `2 ≤ m ≤ M`.
pub fn check_weighted_dq_derivative(
    sampler: &dyn TimeSampler,
    grid: &TimeGrid,
    space: &HilbertSpace,
    m: usize,
    quad_points: usize,
) -> Result<InequalityReport> {
    if m < 2 || m > grid.intervals() {
        return invalid(format!("m = {m} outside 2..=M"));
    }
    let values = sample_values(sampler, grid)?;
    let mf = m as f64;
    let lhs = weighted_dq_norm_raw(&values, grid, 1, m - 1, space)?.powf(1.0 / mf);
    let h = time_sobolev_norm(
        &Derivative(sampler),
        space,
        grid.duration(),
        m - 1,
        quad_points,
    )?;
    Ok(InequalityReport::bound(
        CheckId::WeightedDqDerivative,
        lhs,
        4.0 * h.powf(1.0 / mf) + QUADRATURE_SLACK,
        CheckParams::m(m),
    ))
}

/// `max_k (k+1)^{1/m} (T/T_{k+1})^{(m−k)/m} ≤ e^{1+1/e}`, with a note when
/// the ceiling itself exceeds 3.93.
pub fn check_scale_factor(intervals: usize, m: usize) -> Result<InequalityReport> {
    let lhs = scale_factor(intervals, m)?;
    let ceiling = scale_factor_ceiling();
    let r = InequalityReport::bound(CheckId::ScaleFactor, lhs, ceiling, CheckParams::m(m));
    Ok(if ceiling > 3.93 {
        InequalityReport { pass: false, ..r }.with_note("e^(1+1/e) exceeds 3.93")
    } else {
        r
    })
}
