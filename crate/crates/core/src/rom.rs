//! POD-Galerkin reduced-order model for the heat equation and evaluation of
//! the projection and reduced-solution error bounds.

use nalgebra::{Cholesky, DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, numeric, Error, Result};
use crate::fem::{poincare_constant, FeProblem};
use crate::grids::{
    l2_time_norm, snapshot_mean, time_sobolev_norm, Derivative, TimeGrid, TimeSampler, Trajectory,
};
use crate::inequality::{c_a, ConstantsTable};
use crate::pod::{cross_norm_tail, projection_error_series, PodBasis};
use crate::report::{ratio, ser_f64, BOUND_ABS_TOL};
use crate::space::{GramKind, HilbertSpace};

/// Time discretization of the reduced model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Euler,
    Bdf2,
}

impl Scheme {
    /// Consistency order `p`.
    pub fn order(self) -> usize {
        match self {
            Scheme::Euler => 1,
            Scheme::Bdf2 => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Euler => "euler",
            Scheme::Bdf2 => "bdf2",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "euler" => Ok(Scheme::Euler),
            "bdf2" => Ok(Scheme::Bdf2),
            _ => invalid(format!("unknown scheme {s:?}, expected euler or bdf2")),
        }
    }
}

/// How BDF2 obtains `u_r^1`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bdf2Start {
    /// `u_r^1 = P_X^r u^1`.
    #[default]
    Project,
    /// One backward Euler step from `u_r^0`.
    EulerStep,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RomConfig {
    pub scheme: Scheme,
    pub bdf2_start: Bdf2Start,
    pub r: usize,
    pub grid: TimeGrid,
    pub nu: f64,
}

impl RomConfig {
    pub fn new(scheme: Scheme, r: usize, grid: TimeGrid, nu: f64) -> Self {
        RomConfig {
            scheme,
            bdf2_start: Bdf2Start::Project,
            r,
            grid,
            nu,
        }
    }

    pub fn with_start(mut self, start: Bdf2Start) -> Self {
        self.bdf2_start = start;
        self
    }
}

fn require_stiffness(basis: &PodBasis) -> Result<()> {
    if basis.space().kind() != GramKind::Stiffness {
        return invalid(format!(
            "basis built under the {} gram, the Ritz projection needs the stiffness gram",
            basis.space().kind().as_str()
        ));
    }
    Ok(())
}

/// Ritz projection `R_r v`, which is `P_X^r v` for a stiffness-Gram basis.
pub fn ritz_project(
    p: &FeProblem,
    basis: &PodBasis,
    r: usize,
    v: &DVector<f64>,
) -> Result<DVector<f64>> {
    require_stiffness(basis)?;
    p.stiffness_space()
        .check_dim(basis.space().dim(), "basis")?;
    basis.project(r, v.as_view())
}

/// Output of [`rom_solve`].
#[derive(Clone, Debug)]
pub struct RomSolution {
    /// Reduced coordinates, `r × (M+1)`.
    pub coeffs: DMatrix<f64>,
    /// `u_r^n` in the mass space.
    pub solution: Trajectory,
    /// `‖u_r^n − u^n‖_{L²}` for `n = 0..M`.
    pub errors: Vec<f64>,
    /// `‖e_r^n‖_{L²}` with `e_r^n = u_r^n − P_X^r u^n`.
    pub projected_errors: Vec<f64>,
    /// BDF2 energy `ℰ_n = ½(‖e_r^n‖² + ‖2e_r^n − e_r^{n−1}‖²)^{1/2}` for
    /// `n = 1..M`, in the L² norm; empty for Euler.
    pub energy: Vec<f64>,
}

impl RomSolution {
    pub fn max_error(&self) -> f64 {
        self.errors.iter().cloned().fold(0.0, f64::max)
    }
}

fn reduced(m: &DMatrix<f64>, v: &DMatrix<f64>) -> DMatrix<f64> {
    let a = v.tr_mul(&(m * v));
    (&a + a.transpose()) * 0.5
}

fn factor(a: DMatrix<f64>, what: &str) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    Cholesky::new(a)
        .ok_or_else(|| Error::NumericFailure(format!("{what} is not positive definite")))
}

/// Solves the reduced heat equation in `span{φ^1..φ^r}` around the basis
/// mean, with `u_r^0 = P_X^r u^0`, and measures it against `reference`.
///
/// `load(t)` is the FE load vector `((f(t), φ_i))_i`.
pub fn rom_solve<F>(
    p: &FeProblem,
    basis: &PodBasis,
    cfg: &RomConfig,
    load: F,
    reference: &Trajectory,
) -> Result<RomSolution>
where
    F: Fn(f64) -> DVector<f64>,
{
    let r = cfg.r;
    if r > basis.rank() {
        return invalid(format!("r = {r} exceeds basis rank {}", basis.rank()));
    }
    if reference.grid() != &cfg.grid {
        return invalid("reference trajectory lives on a different grid");
    }
    if !(cfg.nu > 0.0) {
        return invalid("diffusivity must be positive");
    }
    p.mass_space().check_dim(reference.dim(), "reference")?;
    p.mass_space().check_dim(basis.space().dim(), "basis")?;
    let v = basis.modes().columns(0, r).into_owned();
    let mean = basis
        .mean()
        .cloned()
        .unwrap_or_else(|| DVector::zeros(p.dofs()));
    let mr = reduced(p.mass(), &v);
    let kr = reduced(p.stiffness(), &v);
    let mean_flux = p.stiffness() * &mean * cfg.nu;
    let rhs_at = |t: f64| -> DVector<f64> { v.tr_mul(&(load(t) - &mean_flux)) };
    let dt = cfg.grid.step();
    let big_m = cfg.grid.intervals();
    let target = |n: usize| basis.coefficients(r, basis.center(reference.snapshot(n)).as_view());

    let mut coeffs = DMatrix::zeros(r, big_m + 1);
    coeffs.column_mut(0).copy_from(&target(0)?);
    if r > 0 && big_m > 0 {
        let euler = factor(&mr + &kr * (dt * cfg.nu), "reduced Euler matrix")?;
        let euler_step = |prev: &DVector<f64>, n: usize| -> DVector<f64> {
            euler.solve(&(&mr * prev + rhs_at(cfg.grid.node(n)) * dt))
        };
        match cfg.scheme {
            Scheme::Euler => {
                for n in 1..=big_m {
                    let next = euler_step(&coeffs.column(n - 1).into_owned(), n);
                    coeffs.column_mut(n).copy_from(&next);
                }
            }
            Scheme::Bdf2 => {
                let first = match cfg.bdf2_start {
                    Bdf2Start::Project => target(1)?,
                    Bdf2Start::EulerStep => euler_step(&coeffs.column(0).into_owned(), 1),
                };
                coeffs.column_mut(1).copy_from(&first);
                let bdf = factor(&mr * 1.5 + &kr * (dt * cfg.nu), "reduced BDF2 matrix")?;
                for n in 2..=big_m {
                    let hist = coeffs.column(n - 1) * 2.0 - coeffs.column(n - 2) * 0.5;
                    let next = bdf.solve(&(&mr * hist + rhs_at(cfg.grid.node(n)) * dt));
                    coeffs.column_mut(n).copy_from(&next);
                }
            }
        }
    }
    if !coeffs.iter().all(|x| x.is_finite()) {
        return numeric("non-finite reduced solution");
    }

    let mut values = &v * &coeffs;
    for mut c in values.column_iter_mut() {
        c += &mean;
    }
    let solution = Trajectory::new(cfg.grid, p.mass_space().clone(), values, false)?;
    let l2 = p.mass_space();
    let mut errors = Vec::with_capacity(big_m + 1);
    let mut e_series: Vec<DVector<f64>> = Vec::with_capacity(big_m + 1);
    for n in 0..=big_m {
        errors.push(l2.norm(&(solution.snapshot(n) - reference.snapshot(n))));
        let dc = coeffs.column(n) - target(n)?;
        e_series.push(&v * dc);
    }
    let projected_errors = e_series.iter().map(|e| l2.norm(e)).collect();
    let energy = match cfg.scheme {
        Scheme::Euler => Vec::new(),
        Scheme::Bdf2 => (1..=big_m)
            .map(|n| {
                let a = l2.norm(&e_series[n]);
                let b = l2.norm(&(&e_series[n] * 2.0 - &e_series[n - 1]));
                0.5 * (a * a + b * b).sqrt()
            })
            .collect(),
    };
    Ok(RomSolution {
        coeffs,
        solution,
        errors,
        projected_errors,
        energy,
    })
}

/// `‖τ^n‖` with `τ^n = D P_X^r u^n − ∂_t u(t_n)`, for `n = 1..M` (entry
/// `n − 1`), measured in the space of `reference`.
pub fn truncation_series(
    basis: &PodBasis,
    r: usize,
    reference: &Trajectory,
    sampler: &dyn TimeSampler,
) -> Result<Vec<f64>> {
    let grid = reference.grid();
    let dt = grid.step();
    let projected: Vec<DVector<f64>> = (0..reference.len())
        .map(|n| basis.project(r, basis.center(reference.snapshot(n)).as_view()))
        .collect::<Result<_>>()?;
    (1..reference.len())
        .map(|n| {
            let dq = (&projected[n] - &projected[n - 1]) / dt;
            let tau = dq - sampler.sample(grid.node(n), 1)?;
            Ok(reference.space().norm(&tau))
        })
        .collect()
}

/// `(I − P_X^r) ∂_t^k u`, with the basis mean removed from `u` itself.
pub struct TailSampler<'a> {
    inner: &'a dyn TimeSampler,
    basis: &'a PodBasis,
    r: usize,
}

impl<'a> TailSampler<'a> {
    pub fn new(inner: &'a dyn TimeSampler, basis: &'a PodBasis, r: usize) -> Result<Self> {
        if r > basis.rank() {
            return invalid(format!("r = {r} exceeds basis rank {}", basis.rank()));
        }
        basis.space().check_dim(inner.dim(), "sampler")?;
        Ok(TailSampler { inner, basis, r })
    }
}

impl TimeSampler for TailSampler<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn max_order(&self) -> usize {
        self.inner.max_order()
    }

    fn sample(&self, t: f64, order: usize) -> Result<DVector<f64>> {
        let v = self.inner.sample(t, order)?;
        let v = if order == 0 {
            self.basis.center(v.as_view())
        } else {
            v
        };
        self.basis.residual(self.r, v.as_view())
    }
}

/// Named right-hand sides in a [`BoundReport`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    Thm1,
    Thm2,
    Thm3,
    Esti1,
    Esti2,
    Diferente1,
    Diferente2,
    Rho,
    Mu,
    ThmHeat,
    DegradedBaseline,
}

impl BoundKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundKind::Thm1 => "thm1",
            BoundKind::Thm2 => "thm2",
            BoundKind::Thm3 => "thm3",
            BoundKind::Esti1 => "esti1",
            BoundKind::Esti2 => "esti2",
            BoundKind::Diferente1 => "diferente1",
            BoundKind::Diferente2 => "diferente2",
            BoundKind::Rho => "rho",
            BoundKind::Mu => "mu",
            BoundKind::ThmHeat => "thm-heat",
            BoundKind::DegradedBaseline => "degraded-baseline",
        }
    }
}

/// Measured quantity a bound is compared with.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Measured {
    /// `max_n ‖u^n − P_X^r u^n‖_X`.
    MaxProjectionX,
    /// `max_n ‖u^n − P_X^r u^n‖_{L²}`.
    MaxProjectionL2,
    /// `(Δt Σ_{n=1}^M ‖(I − P_X^r) D u^n‖_X²)^{1/2}`.
    DqProjectionX,
    /// Same in the L² norm.
    DqProjectionL2,
    /// `max_n ‖u_r^n − u^n‖_{L²}`.
    MaxRomErrorL2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundEntry {
    pub bound: BoundKind,
    pub m: Option<usize>,
    /// Scheme order for the reduced-solution bound.
    pub p: Option<usize>,
    pub measured: Measured,
    #[serde(serialize_with = "ser_f64")]
    pub lhs: f64,
    #[serde(serialize_with = "ser_f64")]
    pub rhs: f64,
    /// Overestimation factor `rhs / lhs`.
    #[serde(serialize_with = "ser_f64")]
    pub factor: f64,
    pub pass: bool,
}

/// Relative slack on bounds whose right side involves time quadrature.
pub const BOUND_SLACK: f64 = 1e-8;

/// Absolute slack as a fraction of the untruncated measured quantity.
pub const BOUND_SCALE_SLACK: f64 = 1e-10;

impl BoundEntry {
    fn new(
        bound: BoundKind,
        m: Option<usize>,
        measured: Measured,
        lhs: f64,
        rhs: f64,
        scale: f64,
    ) -> Self {
        let abs = BOUND_ABS_TOL.max(BOUND_SCALE_SLACK * scale);
        let pass = lhs.is_finite() && !rhs.is_nan() && lhs <= rhs * (1.0 + BOUND_SLACK) + abs;
        BoundEntry {
            bound,
            m,
            p: None,
            measured,
            lhs,
            rhs,
            factor: ratio(rhs, lhs),
            pass,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasuredValues {
    #[serde(serialize_with = "ser_f64")]
    pub max_projection_x: f64,
    #[serde(serialize_with = "ser_f64")]
    pub max_projection_l2: f64,
    #[serde(serialize_with = "ser_f64")]
    pub dq_projection_x: f64,
    #[serde(serialize_with = "ser_f64")]
    pub dq_projection_l2: f64,
    #[serde(serialize_with = "ser_f64")]
    pub max_rom_error_l2: f64,
}

impl MeasuredValues {
    pub fn get(&self, which: Measured) -> f64 {
        match which {
            Measured::MaxProjectionX => self.max_projection_x,
            Measured::MaxProjectionL2 => self.max_projection_l2,
            Measured::DqProjectionX => self.dq_projection_x,
            Measured::DqProjectionL2 => self.dq_projection_l2,
            Measured::MaxRomErrorL2 => self.max_rom_error_l2,
        }
    }
}

/// Every bound right-hand side next to its measured counterpart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub r: usize,
    pub intervals: usize,
    pub duration: f64,
    pub periodic: bool,
    pub scheme: Scheme,
    pub bdf2_start: Bdf2Start,
    /// `γ_r` in the basis norm.
    #[serde(serialize_with = "ser_f64")]
    pub gamma: f64,
    /// `(Σ_{k>r} σ_k² ‖φ^k‖_{L²}²)^{1/2}`.
    #[serde(serialize_with = "ser_f64")]
    pub gamma_l2: f64,
    #[serde(serialize_with = "ser_f64")]
    pub poincare: f64,
    /// Whether the `γ/√T` terms were added.
    pub mean_term: bool,
    pub measured: MeasuredValues,
    pub bounds: Vec<BoundEntry>,
    pub pass: bool,
}

impl BoundReport {
    pub fn find(&self, bound: BoundKind, m: Option<usize>) -> Option<&BoundEntry> {
        self.bounds.iter().find(|e| e.bound == bound && e.m == m)
    }
}

/// Inputs of [`bound_report`].
pub struct BoundInputs<'a> {
    pub problem: &'a FeProblem,
    /// Basis under the stiffness Gram.
    pub basis: &'a PodBasis,
    pub r: usize,
    /// Snapshots the basis was built from, in any space of matching size.
    pub reference: &'a Trajectory,
    /// Exact `u` with time derivatives.
    pub sampler: &'a dyn TimeSampler,
    /// FE load vector of the heat problem solved by `u`.
    pub load: &'a (dyn Fn(f64) -> DVector<f64> + Sync),
    pub scheme: Scheme,
    pub bdf2_start: Bdf2Start,
    pub consts: &'a ConstantsTable,
    pub quad_points: usize,
}

fn pow(x: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else {
        x.powf(e)
    }
}

fn dq_projection(
    basis: &PodBasis,
    r: usize,
    traj: &Trajectory,
    space: &HilbertSpace,
) -> Result<f64> {
    let dt = traj.grid().step();
    let mut acc = 0.0;
    for n in 1..traj.len() {
        let d = (traj.snapshot(n) - traj.snapshot(n - 1)) / dt;
        let e = basis.residual(r, d.as_view())?;
        let s = space.norm(&e);
        acc += s * s;
    }
    Ok((dt * acc).sqrt())
}

/// Tail factors that depend on `m`.
struct TailNorms {
    /// `‖(I − P) ∂_t u‖_{H^{m−1}(0,T,X)}`.
    h_x: f64,
    h_l2: f64,
    /// `‖(I − P) ∂_t^m u‖_{L²(0,T,X)}`.
    d_x: f64,
    d_l2: f64,
    /// `‖∂_t^{p+1} u‖_{L²(0,T,L²)}`.
    time_error: f64,
}

/// Evaluates every bound for the orders in `m_list`.
pub fn bound_report(inp: &BoundInputs<'_>, m_list: &[usize]) -> Result<BoundReport> {
    let basis = inp.basis;
    let r = inp.r;
    require_stiffness(basis)?;
    let p = inp.problem;
    let grid = *inp.reference.grid();
    let big_m = grid.intervals();
    let duration = grid.duration();
    let order = inp.scheme.order();
    for &m in m_list {
        if m == 0 || m > inp.consts.mmax() || m >= big_m {
            return invalid(format!(
                "order m = {m} inadmissible: need 1 ≤ m < M = {big_m} and m ≤ {}",
                inp.consts.mmax()
            ));
        }
        if inp.sampler.max_order() < m.max(order + 1) {
            return invalid(format!(
                "sampler supplies derivatives up to {}",
                inp.sampler.max_order()
            ));
        }
    }
    let x = basis.space();
    let l2 = p.mass_space();
    let reference = inp.reference.with_space(x.clone())?;
    let periodic = reference.periodic();

    let proj_x = projection_error_series(basis, r, &reference, x)?;
    let proj_l2 = projection_error_series(basis, r, &reference, l2)?;
    let cfg = RomConfig::new(inp.scheme, r, grid, p.nu()).with_start(inp.bdf2_start);
    let rom = rom_solve(p, basis, &cfg, inp.load, &reference.with_space(l2.clone())?)?;
    let measured = MeasuredValues {
        max_projection_x: proj_x.max,
        max_projection_l2: proj_l2.max,
        dq_projection_x: dq_projection(basis, r, &reference, x)?,
        dq_projection_l2: dq_projection(basis, r, &reference, l2)?,
        max_rom_error_l2: rom.max_error(),
    };
    let full_l2 = projection_error_series(basis, 0, &reference, l2)?.max;
    let scales = MeasuredValues {
        max_projection_x: projection_error_series(basis, 0, &reference, x)?.max,
        max_projection_l2: full_l2,
        dq_projection_x: dq_projection(basis, 0, &reference, x)?,
        dq_projection_l2: dq_projection(basis, 0, &reference, l2)?,
        max_rom_error_l2: full_l2,
    };

    let gamma = basis.gamma(r);
    let gamma_l2 = cross_norm_tail(basis, r, l2)?.sqrt();
    let cp = poincare_constant(p)?;
    let ca = c_a();
    let sqrt_t = duration.sqrt();
    let mean_term = !basis.options().subtract_mean && snapshot_mean(&reference).amax() > 0.0;
    let tail_x = if mean_term { gamma / sqrt_t } else { 0.0 };
    let tail_l2 = if mean_term { gamma_l2 / sqrt_t } else { 0.0 };

    let tail = TailSampler::new(inp.sampler, basis, r)?;
    let q = inp.quad_points;
    let a1 = l2_time_norm(&tail, x, duration, 1, q)?;
    let time_error = l2_time_norm(inp.sampler, l2, duration, order + 1, q)?;
    let norms: Vec<TailNorms> = m_list
        .par_iter()
        .map(|&m| {
            Ok(TailNorms {
                h_x: time_sobolev_norm(&Derivative(&tail), x, duration, m - 1, q)?,
                h_l2: time_sobolev_norm(&Derivative(&tail), l2, duration, m - 1, q)?,
                d_x: l2_time_norm(&tail, x, duration, m, q)?,
                d_l2: l2_time_norm(&tail, l2, duration, m, q)?,
                time_error,
            })
        })
        .collect::<Result<_>>()?;

    use BoundKind as B;
    use Measured as Q;
    let get = |q: Measured| measured.get(q);
    let entry = |b: BoundKind, m: Option<usize>, q: Measured, rhs: f64| {
        BoundEntry::new(b, m, q, get(q), rhs, scales.get(q))
    };
    let mut bounds = vec![
        entry(
            B::DegradedBaseline,
            None,
            Q::MaxProjectionX,
            basis.degraded_bound(r),
        ),
        entry(
            B::Thm1,
            None,
            Q::MaxProjectionX,
            ca * gamma.sqrt() * a1.sqrt() + tail_x,
        ),
    ];
    let sqrt2 = std::f64::consts::SQRT_2;
    for (&m, t) in m_list.iter().zip(&norms) {
        let mf = m as f64;
        let cm = inp.consts.c_m(m)?;
        let half = 1.0 / (2.0 * mf);
        let full = 1.0 / mf;
        let e = Some(m);
        bounds.push(entry(
            B::Thm2,
            e,
            Q::MaxProjectionX,
            sqrt2 * ca * cm.sqrt() * pow(gamma, 1.0 - half) * pow(t.h_x, half) + tail_x,
        ));
        bounds.push(entry(
            B::Thm3,
            e,
            Q::DqProjectionX,
            2.0 * cm * pow(gamma, 1.0 - full) * pow(t.h_x, full),
        ));
        if periodic {
            bounds.push(entry(
                B::Esti1,
                e,
                Q::MaxProjectionX,
                sqrt2 * ca * pow(gamma, 1.0 - half) * pow(t.d_x, half) + tail_x,
            ));
            bounds.push(entry(
                B::Esti2,
                e,
                Q::DqProjectionX,
                2.0 * pow(gamma, 1.0 - full) * pow(t.d_x, full),
            ));
            bounds.push(entry(
                B::Diferente1,
                e,
                Q::MaxProjectionL2,
                sqrt2 * ca * pow(gamma_l2, 1.0 - half) * pow(t.d_l2, half) + tail_l2,
            ));
            bounds.push(entry(
                B::Diferente2,
                e,
                Q::DqProjectionL2,
                2.0 * pow(gamma_l2, 1.0 - full) * pow(t.d_l2, full),
            ));
            bounds.push(entry(
                B::Rho,
                e,
                Q::DqProjectionL2,
                2.0 * cp * pow(gamma, 1.0 - full) * pow(t.d_x, full),
            ));
            bounds.push(entry(
                B::Mu,
                e,
                Q::DqProjectionL2,
                2.0 * pow(gamma_l2, 1.0 - full) * pow(t.d_l2, full),
            ));
        } else {
            bounds.push(entry(
                B::Diferente1,
                e,
                Q::MaxProjectionL2,
                sqrt2 * ca * cm.sqrt() * pow(gamma_l2, 1.0 - half) * pow(t.h_l2, half) + tail_l2,
            ));
            bounds.push(entry(
                B::Diferente2,
                e,
                Q::DqProjectionL2,
                2.0 * cm * pow(gamma_l2, 1.0 - full) * pow(t.h_l2, full),
            ));
        }
        if inp.scheme == Scheme::Euler || inp.bdf2_start == Bdf2Start::Project {
            let pf = order as f64;
            let rhs = 4.0 * cp * sqrt_t * cm * pow(gamma, 1.0 - full) * pow(t.h_x, full)
                + sqrt2 * cp * ca * cm.sqrt() * pow(gamma, 1.0 - half) * pow(t.h_x, half)
                + tail_x
                + (pf + 3.0).sqrt() * grid.step().powi(order as i32) * sqrt_t * t.time_error;
            let mut heat = entry(B::ThmHeat, e, Q::MaxRomErrorL2, rhs);
            heat.p = Some(order);
            bounds.push(heat);
        }
    }
    let pass = bounds.iter().all(|b| b.pass);
    Ok(BoundReport {
        r,
        intervals: big_m,
        duration,
        periodic,
        scheme: inp.scheme,
        bdf2_start: inp.bdf2_start,
        gamma,
        gamma_l2,
        poincare: cp,
        mean_term,
        measured,
        bounds,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble_fe, Dirichlet, MeshKind};
    use crate::manufactured::{Coefficient, ManufacturedSpec};
    use crate::pod::{pod, SnapshotOptions, DEFAULT_RANK_TOL};
    use crate::random::trial_rng;
    use rand::Rng;
    use std::f64::consts::PI;

    fn problem() -> FeProblem {
        assemble_fe(MeshKind::Interval, 16, Dirichlet::All, 1.0).unwrap()
    }

    fn stiffness_basis(p: &FeProblem, traj: &Trajectory) -> PodBasis {
        pod(
            traj,
            p.stiffness_space(),
            SnapshotOptions::default(),
            DEFAULT_RANK_TOL,
        )
        .unwrap()
    }

    fn heat_spec(p: &FeProblem, modes: usize) -> ManufacturedSpec {
        let mut spec = ManufacturedSpec::new(p.dofs());
        for j in 1..=modes {
            let prof = p.interpolate(|x, _| (j as f64 * PI * x).sin());
            let a = Coefficient::Harmonic {
                amplitude: 0.5f64.powi(j as i32),
                angular: 1.0 + j as f64,
                phase: 0.3 * j as f64,
            };
            spec = spec.term(a, &prof).unwrap();
        }
        spec
    }

    #[test]
    fn ritz_projection_properties() {
        let p = problem();
        let spec = heat_spec(&p, 4);
        let grid = TimeGrid::new(1.0, 20).unwrap();
        let traj = spec.trajectory(p.mass_space(), &grid).unwrap();
        let basis = stiffness_basis(&p, &traj);
        assert_eq!(basis.rank(), 4);
        let mut rng = trial_rng(5, 0);
        let v = DVector::from_fn(p.dofs(), |_, _| rng.random_range(-1.0..1.0));
        for r in 0..=4 {
            let rv = ritz_project(&p, &basis, r, &v).unwrap();
            let res = &v - &rv;
            for k in 1..=r {
                let g = basis.mode(k).dot(&(p.stiffness() * &res));
                assert!(g.abs() < 1e-10, "r = {r}, k = {k}: {g}");
            }
        }
        assert_eq!(ritz_project(&p, &basis, 0, &v).unwrap().amax(), 0.0);
        let inside = basis.mode(1) * 2.0 - basis.mode(3) * 0.5;
        let back = ritz_project(&p, &basis, 3, &inside).unwrap();
        assert!((back - &inside).amax() < 1e-12);
        let mass_basis = pod(
            &traj,
            p.mass_space(),
            SnapshotOptions::default(),
            DEFAULT_RANK_TOL,
        )
        .unwrap();
        assert!(ritz_project(&p, &mass_basis, 1, &v).is_err());
    }

    #[test]
    fn zero_data_gives_projection_error() {
        let p = problem();
        let spec = heat_spec(&p, 3);
        let grid = TimeGrid::new(1.0, 10).unwrap();
        let traj = spec.trajectory(p.mass_space(), &grid).unwrap();
        let basis = stiffness_basis(&p, &traj);
        let zero = Trajectory::new(
            grid,
            p.mass_space().clone(),
            DMatrix::zeros(p.dofs(), 11),
            false,
        )
        .unwrap();
        let n = p.dofs();
        let cfg = RomConfig::new(Scheme::Euler, 2, grid, 1.0);
        let sol = rom_solve(&p, &basis, &cfg, |_| DVector::zeros(n), &zero).unwrap();
        assert_eq!(sol.solution.values().amax(), 0.0);
        assert!(sol.errors.iter().all(|e| *e == 0.0));
    }

    #[test]
    fn steady_state_is_exact() {
        let p = problem();
        let u0 = p.interpolate(|x, _| x * (1.0 - x) * (1.0 + x));
        let grid = TimeGrid::new(1.0, 12).unwrap();
        let traj =
            Trajectory::from_snapshots(grid, p.mass_space().clone(), &vec![u0.clone(); 13], false)
                .unwrap();
        let basis = stiffness_basis(&p, &traj);
        let flux = p.diffusion(&u0);
        for scheme in [Scheme::Euler, Scheme::Bdf2] {
            let cfg = RomConfig::new(scheme, 1, grid, 1.0);
            let sol = rom_solve(&p, &basis, &cfg, |_| flux.clone(), &traj).unwrap();
            assert!(
                sol.projected_errors.iter().all(|e| *e < 1e-10),
                "{scheme:?}"
            );
            assert!(sol.errors.iter().all(|e| *e < 1e-10));
        }
    }

    fn convergence_orders(scheme: Scheme) -> Vec<f64> {
        let p = problem();
        let spec = heat_spec(&p, 3);
        let load = |t: f64| spec.heat_load(&p, t);
        let errs: Vec<f64> = [16, 32, 64, 128, 256]
            .iter()
            .map(|&m| {
                let grid = TimeGrid::new(1.0, m).unwrap();
                let traj = spec.trajectory(p.mass_space(), &grid).unwrap();
                let basis = stiffness_basis(&p, &traj);
                let cfg = RomConfig::new(scheme, basis.rank(), grid, 1.0);
                rom_solve(&p, &basis, &cfg, load, &traj)
                    .unwrap()
                    .max_error()
            })
            .collect();
        errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
    }

    #[test]
    fn euler_is_first_order() {
        for o in convergence_orders(Scheme::Euler) {
            assert!((o - 1.0).abs() < 0.15, "{o}");
        }
    }

    #[test]
    fn bdf2_is_second_order() {
        for o in convergence_orders(Scheme::Bdf2) {
            assert!((o - 2.0).abs() < 0.2, "{o}");
        }
    }

    #[test]
    fn truncation_oracles() {
        let p = problem();
        let v = p.interpolate(|x, _| (PI * x).sin());
        let grid = TimeGrid::new(1.0, 8).unwrap();
        let quad = ManufacturedSpec::new(p.dofs())
            .term(
                Coefficient::Polynomial {
                    coeffs: vec![0.0, 0.0, 1.0],
                },
                &v,
            )
            .unwrap();
        let traj = quad.trajectory(p.mass_space(), &grid).unwrap();
        let basis = stiffness_basis(&p, &traj);
        let tau = truncation_series(&basis, 1, &traj, &quad.sampler()).unwrap();
        let expected = grid.step() * p.mass_space().norm(&v);
        assert_eq!(tau.len(), 8);
        assert!(tau
            .iter()
            .all(|t| (t - expected).abs() < 1e-12 * expected.max(1.0)));

        let lin = ManufacturedSpec::new(p.dofs())
            .term(
                Coefficient::Polynomial {
                    coeffs: vec![0.0, 1.0],
                },
                &v,
            )
            .unwrap();
        let traj = lin.trajectory(p.mass_space(), &grid).unwrap();
        let basis = stiffness_basis(&p, &traj);
        let tau = truncation_series(&basis, 1, &traj, &lin.sampler()).unwrap();
        assert!(tau.iter().all(|t| *t < 1e-12));
    }

    #[test]
    fn bdf2_energy_dominates_half_the_error() {
        let p = problem();
        let spec = heat_spec(&p, 5);
        let grid = TimeGrid::new(1.0, 32).unwrap();
        let traj = spec.trajectory(p.mass_space(), &grid).unwrap();
        let basis = stiffness_basis(&p, &traj);
        let cfg = RomConfig::new(Scheme::Bdf2, 2, grid, 1.0);
        let sol = rom_solve(&p, &basis, &cfg, |t| spec.heat_load(&p, t), &traj).unwrap();
        assert_eq!(sol.energy.len(), 32);
        for n in 1..=32 {
            assert!(sol.projected_errors[n] <= 2.0 * sol.energy[n - 1] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn full_basis_has_zero_tail() {
        let p = problem();
        let spec = heat_spec(&p, 3);
        let grid = TimeGrid::new(1.0, 16).unwrap();
        let traj = spec.trajectory(p.mass_space(), &grid).unwrap();
        let basis = stiffness_basis(&p, &traj);
        let consts = ConstantsTable::new(6, Default::default()).unwrap();
        let load = |t: f64| spec.heat_load(&p, t);
        let sampler = spec.sampler();
        let inp = BoundInputs {
            problem: &p,
            basis: &basis,
            r: basis.rank(),
            reference: &traj,
            sampler: &sampler,
            load: &load,
            scheme: Scheme::Euler,
            bdf2_start: Bdf2Start::Project,
            consts: &consts,
            quad_points: 513,
        };
        let rep = bound_report(&inp, &[2, 3]).unwrap();
        assert!(rep.measured.max_projection_x < 1e-10);
        assert!(rep.mean_term);
        let t1 = rep.find(BoundKind::Thm1, None).unwrap();
        assert!((t1.rhs - rep.gamma / rep.duration.sqrt()).abs() < 1e-12);
        assert!(
            rep.pass,
            "{:#?}",
            rep.bounds.iter().filter(|b| !b.pass).collect::<Vec<_>>()
        );
        assert!(bound_report(&inp, &[0]).is_err());
        assert!(bound_report(&inp, &[7]).is_err());
    }
}
