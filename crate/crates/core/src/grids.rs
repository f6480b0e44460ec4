//! Uniform time grids, snapshot trajectories, backward difference quotients
//! and the discrete-in-time norms built from them.
//!
//! A trajectory holds `M + 1` snapshots `f_0, …, f_M` on `t_n = n τ`. The
//! backward quotient is `D f_n = (f_n − f_{n−1}) / τ` and `D^k` its k-fold
//! composition, defined for `n = k, …, M`. A periodic trajectory (`f_M = f_0`)
//! is read modulo `M`, so every order is defined for `n = 1, …, M`.

use nalgebra::{DMatrix, DVector, DVectorView};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::space::HilbertSpace;

/// Relative tolerance used to accept `f_M = f_0` on periodic trajectories.
pub const PERIODIC_CLOSURE_TOL: f64 = 1e-12;

/// Uniform partition of `[0, T]` into `M` intervals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    duration: f64,
    intervals: usize,
    step: f64,
}

impl TimeGrid {
    pub fn new(duration: f64, intervals: usize) -> Result<Self> {
        if !(duration > 0.0) || !duration.is_finite() {
            return invalid(format!(
                "duration must be positive and finite, got {duration}"
            ));
        }
        if intervals == 0 {
            return invalid("interval count must be at least 1");
        }
        Ok(TimeGrid {
            duration,
            intervals,
            step: duration / intervals as f64,
        })
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    /// Interval count `M`.
    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// `t_n = n τ`, with `t_M = T` returned exactly.
    pub fn node(&self, n: usize) -> f64 {
        if n == self.intervals {
            self.duration
        } else {
            n as f64 * self.step
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.intervals).map(|n| self.node(n)).collect()
    }

    /// `T_k = (M + 1 − k) τ` for `k ≥ 1` and `T_0 = T`.
    pub fn tail_length(&self, k: usize) -> f64 {
        if k == 0 {
            self.duration
        } else {
            (self.intervals + 1 - k.min(self.intervals + 1)) as f64 * self.step
        }
    }

    /// The same grid with time stretched by `s > 0`.
    pub fn rescaled(&self, s: f64) -> Result<Self> {
        TimeGrid::new(self.duration * s, self.intervals)
    }
}

/// Weighting used by [`seq_norm0`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeqNormKind {
    /// Every term weighted by `τ`.
    Uniform,
    /// Endpoint weights halved.
    Trapezoid,
}

/// Snapshots `f_0..f_M` of a vector-valued function on a [`TimeGrid`].
///
/// Values are stored as an `N × (M+1)` matrix, one snapshot per column, so
/// each snapshot is contiguous in memory.
#[derive(Clone, Debug)]
pub struct Trajectory {
    grid: TimeGrid,
    space: HilbertSpace,
    values: DMatrix<f64>,
    periodic: bool,
}

impl Trajectory {
    pub fn new(
        grid: TimeGrid,
        space: HilbertSpace,
        values: DMatrix<f64>,
        periodic: bool,
    ) -> Result<Self> {
        if values.ncols() != grid.intervals() + 1 {
            return invalid(format!(
                "expected {} snapshots, got {}",
                grid.intervals() + 1,
                values.ncols()
            ));
        }
        space.check_dim(values.nrows(), "trajectory")?;
        let traj = Trajectory {
            grid,
            space,
            values,
            periodic,
        };
        if periodic {
            let m = grid.intervals();
            let gap = traj
                .space
                .norm(&(traj.values.column(m) - traj.values.column(0)));
            let scale = (0..=m)
                .map(|n| traj.space.norm_view(traj.values.column(n)))
                .fold(0.0, f64::max);
            if gap > PERIODIC_CLOSURE_TOL * scale {
                return invalid(format!(
                    "periodic trajectory does not close: |f_M - f_0| = {gap:e}"
                ));
            }
        }
        Ok(traj)
    }

    /// Builds a trajectory from a list of snapshots.
    pub fn from_snapshots(
        grid: TimeGrid,
        space: HilbertSpace,
        snapshots: &[DVector<f64>],
        periodic: bool,
    ) -> Result<Self> {
        let n = space.dim();
        for (i, s) in snapshots.iter().enumerate() {
            if s.len() != n {
                return invalid(format!("snapshot {i} has length {}, expected {n}", s.len()));
            }
        }
        let values = DMatrix::from_fn(n, snapshots.len(), |i, j| snapshots[j][i]);
        Trajectory::new(grid, space, values, periodic)
    }

    /// Scalar trajectory in `R` with the Euclidean product.
    pub fn scalar(grid: TimeGrid, values: &[f64], periodic: bool) -> Result<Self> {
        let m = DMatrix::from_row_slice(1, values.len(), values);
        Trajectory::new(grid, HilbertSpace::identity(1), m, periodic)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn periodic(&self) -> bool {
        self.periodic
    }

    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    /// Snapshot count `M + 1`.
    pub fn len(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.values.ncols() == 0
    }

    pub fn snapshot(&self, n: usize) -> DVectorView<'_, f64> {
        self.values.column(n)
    }

    /// The same data read as a general (non-periodic) sequence.
    pub fn as_general(&self) -> Trajectory {
        Trajectory {
            periodic: false,
            ..self.clone()
        }
    }

    /// Same snapshots measured in another inner product.
    pub fn with_space(&self, space: HilbertSpace) -> Result<Trajectory> {
        Trajectory::new(self.grid, space, self.values.clone(), self.periodic)
    }

    /// Same snapshots on a time axis stretched by `s`.
    pub fn rescaled_time(&self, s: f64) -> Result<Trajectory> {
        Ok(Trajectory {
            grid: self.grid.rescaled(s)?,
            ..self.clone()
        })
    }

    /// Snapshots multiplied by `alpha`.
    pub fn scaled(&self, alpha: f64) -> Trajectory {
        Trajectory {
            values: &self.values * alpha,
            ..self.clone()
        }
    }

    /// Snapshots with `shift` subtracted from each.
    pub fn shifted(&self, shift: &DVector<f64>) -> Trajectory {
        let mut values = self.values.clone();
        for mut c in values.column_iter_mut() {
            c -= shift;
        }
        Trajectory {
            values,
            ..self.clone()
        }
    }

    /// Largest snapshot norm.
    pub fn max_norm(&self) -> f64 {
        (0..self.len())
            .map(|n| self.space.norm_view(self.snapshot(n)))
            .fold(0.0, f64::max)
    }
}

/// `D^k f_n` for a contiguous range of indices `n`.
#[derive(Clone, Debug)]
pub struct DqSequence {
    /// Index `n` of the first column.
    pub first_index: usize,
    /// One column per index.
    pub values: DMatrix<f64>,
}

impl DqSequence {
    pub fn len(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.values.ncols() == 0
    }

    /// Value at sequence index `n`.
    pub fn at(&self, n: usize) -> DVectorView<'_, f64> {
        self.values.column(n - self.first_index)
    }
}

/// Backward difference quotients of order `k`.
///
/// Non-periodic trajectories yield `D^k f_n` for `n = k..M` and require
/// `k ≤ M`. Periodic trajectories yield `n = 1..M` for any `k ≥ 1`, and the
/// values `f_0..f_M` unchanged for `k = 0`.
pub fn dq(f: &Trajectory, k: usize) -> Result<DqSequence> {
    dq_raw(f.values(), f.grid().step(), k, f.periodic())
}

pub(crate) fn dq_raw(values: &DMatrix<f64>, step: f64, k: usize, wrap: bool) -> Result<DqSequence> {
    let m = values.ncols() - 1;
    if k == 0 {
        return Ok(DqSequence {
            first_index: 0,
            values: values.clone(),
        });
    }
    let inv = 1.0 / step;
    if wrap {
        if m == 0 {
            return invalid("periodic trajectory needs at least one interval");
        }
        // Cyclic buffer over residues 1..=M; index 0 aliases M.
        let mut cur = values.columns(1, m).into_owned();
        let mut next = DMatrix::zeros(values.nrows(), m);
        for _ in 0..k {
            for j in 0..m {
                let prev = if j == 0 { m - 1 } else { j - 1 };
                let mut col = next.column_mut(j);
                col.copy_from(&cur.column(j));
                col -= cur.column(prev);
                col *= inv;
            }
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(DqSequence {
            first_index: 1,
            values: cur,
        })
    } else {
        if k > m {
            return invalid(format!("difference order {k} exceeds interval count {m}"));
        }
        let mut cur = values.clone();
        for level in 1..=k {
            let len = m + 1 - level;
            let mut next = DMatrix::zeros(values.nrows(), len);
            for j in 0..len {
                let mut col = next.column_mut(j);
                col.copy_from(&cur.column(j + 1));
                col -= cur.column(j);
                col *= inv;
            }
            cur = next;
        }
        Ok(DqSequence {
            first_index: k,
            values: cur,
        })
    }
}

/// `(τ Σ w_n ‖f_n‖²)^{1/2}` with uniform or trapezoid weights.
pub fn seq_norm0(
    values: &DMatrix<f64>,
    step: f64,
    kind: SeqNormKind,
    space: &HilbertSpace,
) -> Result<f64> {
    if values.ncols() == 0 {
        return invalid("empty sequence");
    }
    if !(step > 0.0) {
        return invalid(format!("step must be positive, got {step}"));
    }
    space.check_dim(values.nrows(), "sequence")?;
    let last = values.ncols() - 1;
    let mut acc = 0.0;
    for n in 0..=last {
        let w = match kind {
            SeqNormKind::Trapezoid if last > 0 && (n == 0 || n == last) => 0.5,
            _ => 1.0,
        };
        let s = space.norm_view(values.column(n));
        acc += w * s * s;
    }
    Ok((step * acc).sqrt())
}

fn sum_sq(values: &DMatrix<f64>, space: &HilbertSpace) -> f64 {
    values
        .column_iter()
        .map(|c| {
            let s = space.norm_view(c);
            s * s
        })
        .sum()
}

/// `‖D^k f_τ‖_0`: `τ`-weighted root-sum-square of `D^k f_n` over the range
/// returned by [`dq`]. For periodic trajectories and `k = 0` the sum runs over
/// `n = 1..M`, which equals the trapezoid norm.
pub fn dq_norm0(f: &Trajectory, k: usize) -> Result<f64> {
    dq_norm0_raw(f.values(), f.grid().step(), k, f.periodic(), f.space())
}

pub(crate) fn dq_norm0_raw(
    values: &DMatrix<f64>,
    step: f64,
    k: usize,
    wrap: bool,
    space: &HilbertSpace,
) -> Result<f64> {
    if wrap && k == 0 {
        let m = values.ncols() - 1;
        if m == 0 {
            return invalid("periodic trajectory needs at least one interval");
        }
        return Ok((step * sum_sq(&values.columns(1, m).into_owned(), space)).sqrt());
    }
    let d = dq_raw(values, step, k, wrap)?;
    Ok((step * sum_sq(&d.values, space)).sqrt())
}

/// Scale-invariant norm `‖D^k f_τ‖_m`.
///
/// `(Σ_{j=k}^{k+m} T_j^{−2(m+k−j)} ‖D^j f_τ‖_0²)^{1/2}` with `T_j` from
/// [`TimeGrid::tail_length`]. Always evaluated on the general (non-wrapped)
/// reading of the sequence; requires `k + m ≤ M`.
pub fn weighted_dq_norm(f: &Trajectory, k: usize, m: usize) -> Result<f64> {
    weighted_dq_norm_raw(f.values(), f.grid(), k, m, f.space())
}

pub(crate) fn weighted_dq_norm_raw(
    values: &DMatrix<f64>,
    grid: &TimeGrid,
    k: usize,
    m: usize,
    space: &HilbertSpace,
) -> Result<f64> {
    let big_m = grid.intervals();
    if k + m > big_m {
        return invalid(format!("k + m = {} exceeds interval count {big_m}", k + m));
    }
    let step = grid.step();
    let mut acc = 0.0;
    let mut cur = dq_raw(values, step, k, false)?.values;
    for j in k..=(k + m) {
        if j > k {
            cur = dq_raw(&cur, step, 1, false)?.values;
        }
        let n0 = step * sum_sq(&cur, space);
        let tj = grid.tail_length(j);
        let expo = 2 * (m + k - j);
        acc += n0 / tj.powi(expo as i32);
    }
    Ok(acc.sqrt())
}

/// Mean of `D^k f_n` over `n = k..M` (general reading).
pub fn tail_mean(f: &Trajectory, k: usize) -> Result<DVector<f64>> {
    let d = dq_raw(f.values(), f.grid().step(), k, false)?;
    Ok(d.values.column_mean())
}

/// Mean of the retained snapshots: `f_1..f_M` if periodic, else `f_0..f_M`.
pub fn snapshot_mean(f: &Trajectory) -> DVector<f64> {
    if f.periodic() && f.len() > 1 {
        f.values().columns(1, f.len() - 1).column_mean()
    } else {
        f.values().column_mean()
    }
}

/// A function of time with derivatives available on demand.
pub trait TimeSampler: Sync {
    /// Length of sampled vectors.
    fn dim(&self) -> usize;

    /// Highest derivative order the sampler can supply.
    fn max_order(&self) -> usize;

    /// `∂_t^order u(t)`.
    fn sample(&self, t: f64, order: usize) -> Result<DVector<f64>>;
}

/// Sampler backed by a closure `(t, order) -> value`.
pub struct FnSampler<F> {
    dim: usize,
    max_order: usize,
    f: F,
}

impl<F> FnSampler<F>
where
    F: Fn(f64, usize) -> Result<DVector<f64>> + Sync,
{
    pub fn new(dim: usize, max_order: usize, f: F) -> Self {
        FnSampler { dim, max_order, f }
    }
}

impl<F> TimeSampler for FnSampler<F>
where
    F: Fn(f64, usize) -> Result<DVector<f64>> + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn max_order(&self) -> usize {
        self.max_order
    }

    fn sample(&self, t: f64, order: usize) -> Result<DVector<f64>> {
        if order > self.max_order {
            return invalid(format!(
                "derivative order {order} exceeds sampler maximum {}",
                self.max_order
            ));
        }
        (self.f)(t, order)
    }
}

/// `∂_t u` viewed as a sampler of its own.
pub struct Derivative<'a, S: ?Sized>(pub &'a S);

impl<S: TimeSampler + ?Sized> TimeSampler for Derivative<'_, S> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn max_order(&self) -> usize {
        self.0.max_order().saturating_sub(1)
    }

    fn sample(&self, t: f64, order: usize) -> Result<DVector<f64>> {
        self.0.sample(t, order + 1)
    }
}

/// Composite trapezoid approximation of `∫_0^T ‖∂_t^order u‖_X² dt`.
pub fn time_integral_sq(
    sampler: &dyn TimeSampler,
    space: &HilbertSpace,
    duration: f64,
    order: usize,
    quad_points: usize,
) -> Result<f64> {
    if quad_points < 2 {
        return invalid("need at least 2 quadrature points");
    }
    if !(duration > 0.0) {
        return invalid("duration must be positive");
    }
    if order > sampler.max_order() {
        return invalid(format!(
            "derivative order {order} exceeds sampler maximum {}",
            sampler.max_order()
        ));
    }
    space.check_dim(sampler.dim(), "sampler")?;
    let h = duration / (quad_points - 1) as f64;
    let mut acc = 0.0;
    for i in 0..quad_points {
        let t = if i == quad_points - 1 {
            duration
        } else {
            i as f64 * h
        };
        let v = sampler.sample(t, order)?;
        let w = if i == 0 || i == quad_points - 1 {
            0.5
        } else {
            1.0
        };
        let s = space.norm(&v);
        acc += w * s * s;
    }
    Ok(acc * h)
}

/// `‖∂_t^order u‖_{L²(0,T,X)}`.
pub fn l2_time_norm(
    sampler: &dyn TimeSampler,
    space: &HilbertSpace,
    duration: f64,
    order: usize,
    quad_points: usize,
) -> Result<f64> {
    Ok(time_integral_sq(sampler, space, duration, order, quad_points)?.sqrt())
}

/// `‖u‖_{H^m(0,T,X)} = (Σ_{k=0}^m T^{−2(m−k)} ∫_0^T ‖∂_t^k u‖_X² dt)^{1/2}`.
pub fn time_sobolev_norm(
    sampler: &dyn TimeSampler,
    space: &HilbertSpace,
    duration: f64,
    m: usize,
    quad_points: usize,
) -> Result<f64> {
    let mut acc = 0.0;
    for k in 0..=m {
        let integral = time_integral_sq(sampler, space, duration, k, quad_points)?;
        acc += integral / duration.powi(2 * (m - k) as i32);
    }
    Ok(acc.sqrt())
}
