//! POD bases by the method of snapshots.
//!
//! For retained snapshots `u^n` with weight `w` the correlation matrix is
//! `C_ij = w (u^i, u^j)_X`. Its eigenpairs `(λ_k, v_k)` give the singular
//! values `σ_k = λ_k^{1/2}` and modes `φ^k = (w^{1/2} / σ_k) Σ_n (v_k)_n u^n`.
//!
//! [`compute_pod`] obtains the same pairs from a thin SVD of `w^{1/2} Lᵀ U`,
//! where `G = L Lᵀ`: the singular values of that factor carry an absolute
//! error of order `ε σ_1` instead of the `ε σ_1²` an eigensolver leaves on
//! `σ_k²`, so the energy identities stay sharp down to the rank cutoff.

use std::ops::Range;

use nalgebra::{Cholesky, DMatrix, DVector, DVectorView, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, numeric, Result};
use crate::grids::Trajectory;
use crate::report::{CheckId, CheckParams, InequalityReport};
use crate::space::HilbertSpace;

/// Eigenvalues at or below `rank_tol · λ_1` are discarded.
pub const DEFAULT_RANK_TOL: f64 = 1e-12;

/// Which snapshots enter the correlation matrix and how they are centred.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotOptions {
    /// Skip `u^0` and weight by `1/M` (periodic data, where `u^0 = u^M`).
    pub drop_first: bool,
    /// Subtract the mean of the retained snapshots before the decomposition.
    pub subtract_mean: bool,
}

impl SnapshotOptions {
    pub fn new(drop_first: bool, subtract_mean: bool) -> Self {
        SnapshotOptions {
            drop_first,
            subtract_mean,
        }
    }

    /// Indices of the retained snapshots of a trajectory with `len` entries.
    pub fn retained(&self, len: usize) -> Range<usize> {
        if self.drop_first {
            1..len
        } else {
            0..len
        }
    }
}

/// Weighted snapshot correlation matrix.
#[derive(Clone, Debug)]
pub struct CorrelationMatrix {
    entries: DMatrix<f64>,
    weight: f64,
    options: SnapshotOptions,
    mean: Option<DVector<f64>>,
}

impl CorrelationMatrix {
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// `1/(M+1)`, or `1/M` when the first snapshot is dropped.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn options(&self) -> SnapshotOptions {
        self.options
    }

    /// Number of retained snapshots `S`.
    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    /// Subtracted mean, if any.
    pub fn mean(&self) -> Option<&DVector<f64>> {
        self.mean.as_ref()
    }
}

fn retained_block(
    traj: &Trajectory,
    options: SnapshotOptions,
) -> Result<(DMatrix<f64>, Option<DVector<f64>>)> {
    let range = options.retained(traj.len());
    if range.is_empty() {
        return invalid("no snapshots retained");
    }
    let mut block = traj.values().columns(range.start, range.len()).into_owned();
    let mean = if options.subtract_mean {
        let mean = block.column_mean();
        for mut c in block.column_iter_mut() {
            c -= &mean;
        }
        Some(mean)
    } else {
        None
    };
    Ok((block, mean))
}

/// Correlation matrix of the retained, optionally centred, snapshots of
/// `traj` under the inner product of `space`.
pub fn build_correlation(
    traj: &Trajectory,
    space: &HilbertSpace,
    drop_first: bool,
    subtract_mean: bool,
) -> Result<CorrelationMatrix> {
    space.check_dim(traj.dim(), "correlation")?;
    let options = SnapshotOptions::new(drop_first, subtract_mean);
    if drop_first && traj.len() < 2 {
        return invalid("dropping the first snapshot needs at least two");
    }
    let (block, mean) = retained_block(traj, options)?;
    let weight = 1.0 / block.ncols() as f64;
    let gu = space.apply_block(&block);
    let mut entries = block.transpose() * gu;
    entries *= weight;
    // Symmetrise to remove rounding asymmetry of the product.
    let s = entries.nrows();
    for i in 0..s {
        for j in (i + 1)..s {
            let a = 0.5 * (entries[(i, j)] + entries[(j, i)]);
            entries[(i, j)] = a;
            entries[(j, i)] = a;
        }
    }
    Ok(CorrelationMatrix {
        entries,
        weight,
        options,
        mean,
    })
}

/// Singular values and X-orthonormal modes of a snapshot set.
#[derive(Clone, Debug)]
pub struct PodBasis {
    space: HilbertSpace,
    sigma: Vec<f64>,
    modes: DMatrix<f64>,
    weight: f64,
    source_count: usize,
    options: SnapshotOptions,
    mean: Option<DVector<f64>>,
    discarded_sigma: Vec<f64>,
    discarded_modes: DMatrix<f64>,
}

/// Leading singular pairs of the snapshot set described by `corr`.
///
/// Modes are re-orthonormalised in `X` after lifting and signed so that
/// their first significant coordinate is positive.
pub fn compute_pod(
    corr: &CorrelationMatrix,
    traj: &Trajectory,
    space: &HilbertSpace,
    rank_tol: f64,
) -> Result<PodBasis> {
    space.check_dim(traj.dim(), "pod")?;
    if !(rank_tol >= 0.0) {
        return invalid(format!(
            "rank tolerance must be nonnegative, got {rank_tol}"
        ));
    }
    let options = corr.options();
    let (block, mean) = retained_block(traj, options)?;
    if block.ncols() != corr.size() {
        return invalid(format!(
            "correlation has {} snapshots, trajectory retains {}",
            corr.size(),
            block.ncols()
        ));
    }
    let weighted = weighted_factor(&block, space, corr.weight())?;
    let (sigma_all, left) = sorted_svd(weighted.0)?;
    let lambda1 = sigma_all.first().map_or(0.0, |s| s * s);
    let n = traj.dim();
    if !(lambda1 > 0.0) {
        return Ok(PodBasis {
            space: space.clone(),
            sigma: Vec::new(),
            modes: DMatrix::zeros(n, 0),
            weight: corr.weight(),
            source_count: corr.size(),
            options,
            mean,
            discarded_sigma: Vec::new(),
            discarded_modes: DMatrix::zeros(n, 0),
        });
    }
    let cut = rank_tol * lambda1;
    let j = sigma_all.iter().take_while(|&&s| s * s > cut).count();
    let noise = sigma_all.len() as f64 * f64::EPSILON * sigma_all[0];
    let kept = j + sigma_all[j..].iter().take_while(|&&s| s > noise).count();
    let mut all = left.columns(0, kept).into_owned();
    if let Some(chol) = &weighted.1 {
        let lt = chol.l().transpose();
        if !lt.solve_upper_triangular_mut(&mut all) {
            return numeric("singular Cholesky factor of the Gram matrix");
        }
    }
    orthonormalize(&mut all, space)?;
    for k in 0..all.ncols() {
        fix_sign(all.column_mut(k));
    }
    Ok(PodBasis {
        space: space.clone(),
        sigma: sigma_all[..j].to_vec(),
        modes: all.columns(0, j).into_owned(),
        weight: corr.weight(),
        source_count: corr.size(),
        options,
        mean,
        discarded_sigma: sigma_all[j..kept].to_vec(),
        discarded_modes: all.columns(j, all.ncols() - j).into_owned(),
    })
}

/// Builds the correlation matrix and the basis in one call.
pub fn pod(
    traj: &Trajectory,
    space: &HilbertSpace,
    options: SnapshotOptions,
    rank_tol: f64,
) -> Result<PodBasis> {
    let corr = build_correlation(traj, space, options.drop_first, options.subtract_mean)?;
    compute_pod(&corr, traj, space, rank_tol)
}

/// `w^{1/2} Lᵀ U` together with the Cholesky factor of `G` (none for the
/// identity Gram).
fn weighted_factor(
    block: &DMatrix<f64>,
    space: &HilbertSpace,
    weight: f64,
) -> Result<(DMatrix<f64>, Option<Cholesky<f64, Dyn>>)> {
    let sw = weight.sqrt();
    match space.gram() {
        None => Ok((block * sw, None)),
        Some(g) => {
            let Some(chol) = Cholesky::new(g.clone()) else {
                return numeric("Gram matrix is not positive definite");
            };
            let b = chol.l().transpose() * block * sw;
            Ok((b, Some(chol)))
        }
    }
}

/// Singular values in decreasing order with the matching left vectors.
///
/// One-sided Jacobi on `Rᵀ` from a QR factorisation of `bᵀ` when `b` is
/// wide, on `b` itself otherwise. Columns belonging to a zero singular
/// value are left zero.
fn sorted_svd(b: DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let frobenius = b.norm_squared();
    let mut a = if b.ncols() > b.nrows() {
        b.transpose().qr().r().transpose()
    } else {
        b
    };
    jacobi_orthogonalize(&mut a)?;
    let norms: Vec<f64> = a.column_iter().map(|c| c.norm()).collect();
    let mut order: Vec<usize> = (0..norms.len()).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let sigma: Vec<f64> = order.iter().map(|&i| norms[i]).collect();
    if sigma.iter().any(|s| !s.is_finite()) {
        return numeric("non-finite singular value");
    }
    let captured: f64 = sigma.iter().rev().map(|s| s * s).sum();
    if (captured - frobenius).abs() > 1e-10 * frobenius {
        return numeric("singular value decomposition lost accuracy");
    }
    let mut left = DMatrix::zeros(a.nrows(), order.len());
    for (dst, &src) in order.iter().enumerate() {
        if norms[src] > 0.0 {
            left.column_mut(dst)
                .copy_from(&(a.column(src) / norms[src]));
        }
    }
    Ok((sigma, left))
}

/// Rotates column pairs of `a` until they are mutually orthogonal to
/// working precision.
fn jacobi_orthogonalize(a: &mut DMatrix<f64>) -> Result<()> {
    const MAX_SWEEPS: usize = 80;
    let n = a.ncols();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                let gamma = a.column(p).dot(&a.column(q));
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + zeta.hypot(1.0));
                let c = 1.0 / t.hypot(1.0);
                let s = c * t;
                for i in 0..a.nrows() {
                    let (x, y) = (a[(i, p)], a[(i, q)]);
                    a[(i, p)] = c * x - s * y;
                    a[(i, q)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            return Ok(());
        }
    }
    numeric("Jacobi singular value sweeps did not converge")
}

/// Two passes of modified Gram–Schmidt in the inner product of `space`.
/// `G q_i` is kept for every finished column.
fn orthonormalize(modes: &mut DMatrix<f64>, space: &HilbertSpace) -> Result<()> {
    let (n, j) = modes.shape();
    let mut gq = DMatrix::zeros(n, j);
    for _ in 0..2 {
        for k in 0..j {
            for i in 0..k {
                let c = modes.column(k).dot(&gq.column(i));
                let qi = modes.column(i).into_owned();
                modes.column_mut(k).axpy(-c, &qi, 1.0);
            }
            let g = space.apply(&modes.column(k).into_owned());
            let nk = modes.column(k).dot(&g).max(0.0).sqrt();
            if !(nk > 0.0) || !nk.is_finite() {
                return numeric(format!(
                    "mode {} collapsed during orthonormalisation",
                    k + 1
                ));
            }
            modes.column_mut(k).unscale_mut(nk);
            gq.column_mut(k).copy_from(&(g / nk));
        }
    }
    Ok(())
}

fn fix_sign(mut v: nalgebra::DVectorViewMut<'_, f64>) {
    let peak = v.amax();
    if let Some(x) = v.iter().find(|x| x.abs() > 1e-8 * peak) {
        if *x < 0.0 {
            v.neg_mut();
        }
    }
}

impl PodBasis {
    /// Assembles a basis from stored parts, checking X-orthonormality.
    pub fn from_parts(
        space: HilbertSpace,
        sigma: Vec<f64>,
        modes: DMatrix<f64>,
        weight: f64,
        source_count: usize,
        options: SnapshotOptions,
        mean: Option<DVector<f64>>,
    ) -> Result<Self> {
        space.check_dim(modes.nrows(), "modes")?;
        if modes.ncols() != sigma.len() {
            return invalid(format!(
                "{} singular values for {} modes",
                sigma.len(),
                modes.ncols()
            ));
        }
        if sigma.windows(2).any(|w| w[1] > w[0]) || sigma.iter().any(|s| !(*s > 0.0)) {
            return invalid("singular values must be positive and nonincreasing");
        }
        if let Some(m) = &mean {
            space.check_dim(m.len(), "mean")?;
        }
        let n = modes.nrows();
        let basis = PodBasis {
            space,
            sigma,
            modes,
            weight,
            source_count,
            options,
            mean,
            discarded_sigma: Vec::new(),
            discarded_modes: DMatrix::zeros(n, 0),
        };
        let dev = basis.orthonormality_defect();
        if dev > 1e-10 {
            return invalid(format!("modes are not orthonormal (defect {dev:.3e})"));
        }
        Ok(basis)
    }

    /// Attaches the singular pairs that fell below the rank cutoff.
    ///
    /// They never enter a projection but complete the tail sums of the
    /// energy identities.
    pub fn with_discarded(mut self, sigma: Vec<f64>, modes: DMatrix<f64>) -> Result<Self> {
        self.space.check_dim(modes.nrows(), "discarded modes")?;
        if modes.ncols() != sigma.len() {
            return invalid(format!(
                "{} discarded singular values for {} modes",
                sigma.len(),
                modes.ncols()
            ));
        }
        let floor = self.sigma.last().copied().unwrap_or(f64::INFINITY);
        if sigma.windows(2).any(|w| w[1] > w[0])
            || sigma.iter().any(|s| !(*s >= 0.0 && *s <= floor))
        {
            return invalid(
                "discarded singular values must be nonincreasing and below the retained ones",
            );
        }
        self.discarded_sigma = sigma;
        self.discarded_modes = modes;
        Ok(self)
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    /// Rank `J`.
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    /// Modes as the columns of an `N × J` matrix.
    pub fn modes(&self) -> &DMatrix<f64> {
        &self.modes
    }

    /// Mode `φ^k` for `k = 1..J`.
    pub fn mode(&self, k: usize) -> DVectorView<'_, f64> {
        self.modes.column(k - 1)
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn source_count(&self) -> usize {
        self.source_count
    }

    pub fn options(&self) -> SnapshotOptions {
        self.options
    }

    pub fn mean(&self) -> Option<&DVector<f64>> {
        self.mean.as_ref()
    }

    /// Singular values below the rank cutoff.
    pub fn discarded_sigma(&self) -> &[f64] {
        &self.discarded_sigma
    }

    /// Modes of [`Self::discarded_sigma`], X-orthogonal to the retained ones.
    pub fn discarded_modes(&self) -> &DMatrix<f64> {
        &self.discarded_modes
    }

    /// `Σ_k σ_k²` over the discarded pairs.
    pub fn discarded_energy(&self) -> f64 {
        self.discarded_sigma.iter().rev().map(|s| s * s).sum()
    }

    /// `max_ij |(φ^i, φ^j) − δ_ij|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.modes.transpose() * self.space.apply_block(&self.modes);
        let mut dev: f64 = 0.0;
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                let target = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((g[(i, j)] - target).abs());
            }
        }
        dev
    }

    fn check_r(&self, r: usize) -> Result<()> {
        if r > self.rank() {
            return invalid(format!("r = {r} exceeds basis rank {}", self.rank()));
        }
        Ok(())
    }

    /// `Σ_{k>r} σ_k²`, the discarded pairs included.
    pub fn tail_sq(&self, r: usize) -> f64 {
        self.sigma
            .iter()
            .skip(r)
            .rev()
            .fold(self.discarded_energy(), |acc, s| acc + s * s)
    }

    /// `γ_r = (Σ_{k>r} σ_k²)^{1/2}`.
    pub fn gamma(&self, r: usize) -> f64 {
        self.tail_sq(r).sqrt()
    }

    /// `√S γ_r`, the pointwise bound that follows from the energy identity
    /// alone.
    pub fn degraded_bound(&self, r: usize) -> f64 {
        (self.source_count as f64).sqrt() * self.gamma(r)
    }

    /// `v` minus the stored mean, if one was subtracted.
    pub fn center(&self, v: DVectorView<'_, f64>) -> DVector<f64> {
        match &self.mean {
            Some(m) => v - m,
            None => v.into_owned(),
        }
    }

    /// Coordinates `((v, φ^k)_X)_{k ≤ r}`.
    pub fn coefficients(&self, r: usize, v: DVectorView<'_, f64>) -> Result<DVector<f64>> {
        self.check_r(r)?;
        self.space.check_dim(v.len(), "vector")?;
        let gv = self.space.apply(&v.into_owned());
        Ok(self.modes.columns(0, r).tr_mul(&gv))
    }

    /// Linear combination of the first `r` modes.
    pub fn synthesize(&self, coeffs: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_r(coeffs.len())?;
        Ok(self.modes.columns(0, coeffs.len()) * coeffs)
    }

    /// `P_X^r v = Σ_{k ≤ r} (v, φ^k)_X φ^k`.
    pub fn project(&self, r: usize, v: DVectorView<'_, f64>) -> Result<DVector<f64>> {
        let c = self.coefficients(r, v)?;
        self.synthesize(&c)
    }

    /// `(I − P_X^r) v`.
    pub fn residual(&self, r: usize, v: DVectorView<'_, f64>) -> Result<DVector<f64>> {
        let p = self.project(r, v)?;
        Ok(v - p)
    }
}

/// `P_X^r v`.
pub fn project(basis: &PodBasis, r: usize, v: &DVector<f64>) -> Result<DVector<f64>> {
    basis.project(r, v.as_view())
}

/// Per-snapshot projection errors and their summaries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionErrors {
    /// `‖u^n − P_X^r u^n‖` for `n = 0..M`, after centring by the basis mean.
    pub errors: Vec<f64>,
    /// Maximum over the retained snapshots.
    pub max: f64,
    /// Index attaining `max`.
    pub argmax: usize,
    /// `w Σ_n ‖u^n − P_X^r u^n‖²` over the retained snapshots.
    pub mean_square: f64,
}

impl ProjectionErrors {
    pub fn quadratic_mean(&self) -> f64 {
        self.mean_square.sqrt()
    }
}

/// Projection error of every snapshot of `traj`, measured in `measure`.
pub fn projection_error_series(
    basis: &PodBasis,
    r: usize,
    traj: &Trajectory,
    measure: &HilbertSpace,
) -> Result<ProjectionErrors> {
    basis.check_r(r)?;
    basis.space.check_dim(traj.dim(), "trajectory")?;
    measure.check_dim(traj.dim(), "measure")?;
    let mut errors = Vec::with_capacity(traj.len());
    for n in 0..traj.len() {
        let c = basis.center(traj.snapshot(n));
        let e = basis.residual(r, c.as_view())?;
        errors.push(measure.norm(&e));
    }
    let range = basis.options.retained(traj.len());
    let mut max = 0.0;
    let mut argmax = range.start;
    let mut acc = 0.0;
    for n in range.clone() {
        let e = errors[n];
        if e > max {
            max = e;
            argmax = n;
        }
        acc += e * e;
    }
    Ok(ProjectionErrors {
        errors,
        max,
        argmax,
        mean_square: acc / range.len() as f64,
    })
}

fn summarize(res: &DMatrix<f64>, mres: &DMatrix<f64>, range: Range<usize>) -> ProjectionErrors {
    let errors: Vec<f64> = res
        .column_iter()
        .zip(mres.column_iter())
        .map(|(a, b)| a.dot(&b).max(0.0).sqrt())
        .collect();
    let mut max = 0.0;
    let mut argmax = range.start;
    let mut acc = 0.0;
    for n in range.clone() {
        let e = errors[n];
        if e > max {
            max = e;
            argmax = n;
        }
        acc += e * e;
    }
    ProjectionErrors {
        errors,
        max,
        argmax,
        mean_square: acc / range.len() as f64,
    }
}

/// [`projection_error_series`] for every `r = 0..=J` (entry `r`).
///
/// Residuals are peeled one mode at a time, so each further `r` costs
/// `O(N S)` instead of a fresh projection.
pub fn projection_error_profile(
    basis: &PodBasis,
    traj: &Trajectory,
    measure: &HilbertSpace,
) -> Result<Vec<ProjectionErrors>> {
    basis.space.check_dim(traj.dim(), "trajectory")?;
    measure.check_dim(traj.dim(), "measure")?;
    let mut res = traj.values().clone();
    if let Some(mean) = &basis.mean {
        for mut c in res.column_iter_mut() {
            c -= mean;
        }
    }
    let coeffs = basis.modes.tr_mul(&basis.space.apply_block(&res));
    let mut mres = measure.apply_block(&res);
    let mphi = measure.apply_block(&basis.modes);
    let range = basis.options.retained(traj.len());
    let mut out = Vec::with_capacity(basis.rank() + 1);
    out.push(summarize(&res, &mres, range.clone()));
    for k in 0..basis.rank() {
        let ck = coeffs.row(k).transpose();
        res.ger(-1.0, &basis.modes.column(k), &ck, 1.0);
        mres.ger(-1.0, &mphi.column(k), &ck, 1.0);
        out.push(summarize(&res, &mres, range.clone()));
    }
    Ok(out)
}

/// Energy identity reports for every `r = 0..=J`.
pub fn energy_identity_profile(
    basis: &PodBasis,
    traj: &Trajectory,
) -> Result<Vec<InequalityReport>> {
    let profile = projection_error_profile(basis, traj, &basis.space)?;
    Ok(profile
        .iter()
        .enumerate()
        .map(|(r, e)| {
            InequalityReport::identity(
                CheckId::EnergyIdentity,
                e.mean_square,
                basis.tail_sq(r),
                CheckParams::r(r),
            )
        })
        .collect())
}

/// Cross-norm identity reports for every `r = 0..=J`.
pub fn cross_norm_identity_profile(
    basis: &PodBasis,
    traj: &Trajectory,
    other: &HilbertSpace,
) -> Result<Vec<InequalityReport>> {
    let profile = projection_error_profile(basis, traj, other)?;
    let norms = mode_norms(basis, other)?;
    let mut tails = vec![0.0; basis.rank() + 1];
    tails[basis.rank()] = discarded_cross_tail(basis, other);
    for k in (0..basis.rank()).rev() {
        let t = basis.sigma[k] * norms[k];
        tails[k] = tails[k + 1] + t * t;
    }
    Ok(profile
        .iter()
        .zip(tails)
        .enumerate()
        .map(|(r, (e, tail))| {
            InequalityReport::identity(
                CheckId::CrossNormIdentity,
                e.mean_square,
                tail,
                CheckParams::r(r),
            )
        })
        .collect())
}

/// Checks `w Σ_n ‖u^n − P_X^r u^n‖_X² = Σ_{k>r} σ_k²`.
pub fn verify_energy_identity(
    basis: &PodBasis,
    traj: &Trajectory,
    r: usize,
) -> Result<InequalityReport> {
    let errs = projection_error_series(basis, r, traj, &basis.space)?;
    Ok(InequalityReport::identity(
        CheckId::EnergyIdentity,
        errs.mean_square,
        basis.tail_sq(r),
        CheckParams::r(r),
    ))
}

/// `Σ_{k>r} σ_k² ‖φ^k‖²` with the mode norms taken in `other`.
pub fn cross_norm_tail(basis: &PodBasis, r: usize, other: &HilbertSpace) -> Result<f64> {
    basis.check_r(r)?;
    let norms = mode_norms(basis, other)?;
    Ok(basis
        .sigma
        .iter()
        .zip(norms.iter())
        .skip(r)
        .rev()
        .fold(discarded_cross_tail(basis, other), |acc, (s, n)| {
            acc + (s * n) * (s * n)
        }))
}

fn discarded_cross_tail(basis: &PodBasis, other: &HilbertSpace) -> f64 {
    let gphi = other.apply_block(&basis.discarded_modes);
    basis
        .discarded_sigma
        .iter()
        .enumerate()
        .rev()
        .map(|(k, s)| s * s * basis.discarded_modes.column(k).dot(&gphi.column(k)))
        .sum()
}

/// Checks `w Σ_n ‖(I − P_X^r) u^n‖² = Σ_{k>r} σ_k² ‖φ^k‖²` in the norm of
/// `other`.
pub fn verify_cross_norm_identity(
    basis: &PodBasis,
    traj: &Trajectory,
    r: usize,
    other: &HilbertSpace,
) -> Result<InequalityReport> {
    let errs = projection_error_series(basis, r, traj, other)?;
    let rhs = cross_norm_tail(basis, r, other)?;
    Ok(InequalityReport::identity(
        CheckId::CrossNormIdentity,
        errs.mean_square,
        rhs,
        CheckParams::r(r),
    ))
}

/// `‖φ^k‖` in the norm of `other`, for `k = 1..J`.
pub fn mode_norms(basis: &PodBasis, other: &HilbertSpace) -> Result<Vec<f64>> {
    other.check_dim(basis.modes.nrows(), "mode norms")?;
    Ok(basis
        .modes
        .column_iter()
        .map(|c| other.norm_view(c))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grids::TimeGrid;
    use crate::space::GramKind;

    fn traj_from(cols: &[&[f64]], periodic: bool) -> Trajectory {
        let n = cols[0].len();
        let m = cols.len() - 1;
        let data: Vec<f64> = cols.iter().flat_map(|c| c.iter().copied()).collect();
        let values = DMatrix::from_column_slice(n, m + 1, &data);
        Trajectory::new(
            TimeGrid::new(1.0, m).unwrap(),
            HilbertSpace::identity(n),
            values,
            periodic,
        )
        .unwrap()
    }

    #[test]
    fn correlation_of_two_unit_vectors() {
        let t = traj_from(&[&[1.0, 0.0], &[0.0, 1.0]], false);
        let c = build_correlation(&t, t.space(), false, false).unwrap();
        assert_eq!(c.entries(), &(DMatrix::identity(2, 2) * 0.5));
        assert_eq!(c.weight(), 0.5);
    }

    #[test]
    fn single_retained_snapshot_has_weight_one() {
        // M = 1 with the first snapshot dropped leaves u^1 alone.
        let t = traj_from(&[&[0.0, 0.0], &[2.0, 0.0]], false);
        let c = build_correlation(&t, t.space(), true, false).unwrap();
        assert_eq!(c.size(), 1);
        assert_eq!(c.entries()[(0, 0)], 4.0);
    }

    #[test]
    fn doubling_gram_doubles_correlation() {
        let t = traj_from(&[&[1.0, 2.0], &[0.5, -1.0], &[3.0, 0.0]], false);
        let g = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let s1 = HilbertSpace::with_gram(GramKind::Mass, g.clone()).unwrap();
        let s2 = HilbertSpace::with_gram(GramKind::Mass, g * 2.0).unwrap();
        let c1 = build_correlation(&t, &s1, false, false).unwrap();
        let c2 = build_correlation(&t, &s2, false, false).unwrap();
        assert!((c1.entries() * 2.0 - c2.entries()).amax() < 1e-15);
    }

    #[test]
    fn rank_one_trajectory() {
        let u = [3.0, 4.0];
        let t = traj_from(&[&u, &u, &u], false);
        let b = pod(&t, t.space(), SnapshotOptions::default(), DEFAULT_RANK_TOL).unwrap();
        assert_eq!(b.rank(), 1);
        assert!((b.sigma()[0] - 5.0).abs() < 1e-12);
        assert!((b.mode(1)[0] - 0.6).abs() < 1e-12);
        assert!((b.mode(1)[1] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn two_orthonormal_snapshots() {
        let t = traj_from(&[&[1.0, 0.0], &[0.0, 1.0]], false);
        let b = pod(&t, t.space(), SnapshotOptions::default(), DEFAULT_RANK_TOL).unwrap();
        assert_eq!(b.rank(), 2);
        for s in b.sigma() {
            assert!((s - 0.5f64.sqrt()).abs() < 1e-14);
        }
        let errs = projection_error_series(&b, 1, &t, t.space()).unwrap();
        assert!((errs.mean_square - 0.5).abs() < 1e-14);
        let rep = verify_energy_identity(&b, &t, 1).unwrap();
        assert!(rep.pass);
        assert!((rep.lhs - 0.5).abs() < 1e-14 && (rep.rhs - 0.5).abs() < 1e-14);
        let full = verify_energy_identity(&b, &t, 2).unwrap();
        assert!(full.pass);
        assert_eq!(full.rhs, 0.0);
    }

    #[test]
    fn zero_trajectory_gives_empty_basis() {
        let t = traj_from(&[&[0.0, 0.0], &[0.0, 0.0]], false);
        let b = pod(&t, t.space(), SnapshotOptions::default(), DEFAULT_RANK_TOL).unwrap();
        assert_eq!(b.rank(), 0);
        assert_eq!(b.modes().ncols(), 0);
        assert!(verify_energy_identity(&b, &t, 0).unwrap().pass);
    }

    #[test]
    fn coordinate_projection() {
        let t = traj_from(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]], false);
        let b = pod(&t, t.space(), SnapshotOptions::default(), DEFAULT_RANK_TOL).unwrap();
        let v = DVector::from_vec(vec![3.0, 4.0, 5.0]);
        let p = project(&b, 2, &v).unwrap();
        assert!((p - DVector::from_vec(vec![3.0, 4.0, 0.0])).amax() < 1e-14);
        let ortho = DVector::from_vec(vec![0.0, 0.0, 1.0]);
        assert!(project(&b, 2, &ortho).unwrap().amax() < 1e-15);
        assert!(project(&b, 3, &v).is_err());
        let phi = b.mode(1).into_owned();
        assert!((project(&b, 1, &phi).unwrap() - &phi).amax() < 1e-15);
    }

    #[test]
    fn r_zero_errors_equal_snapshot_norms() {
        let t = traj_from(&[&[1.0, 2.0], &[0.0, -1.0], &[2.0, 2.0]], false);
        let opts = SnapshotOptions::new(false, true);
        let b = pod(&t, t.space(), opts, DEFAULT_RANK_TOL).unwrap();
        let errs = projection_error_series(&b, 0, &t, t.space()).unwrap();
        let mean = b.mean().unwrap();
        for n in 0..t.len() {
            let c = t.snapshot(n) - mean;
            assert!((errs.errors[n] - c.norm()).abs() < 1e-14);
        }
    }

    #[test]
    fn mode_norms_in_own_space_are_one() {
        let g = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0]);
        let s = HilbertSpace::with_gram(GramKind::Stiffness, g).unwrap();
        let t = traj_from(
            &[&[1.0, 0.0, 2.0], &[0.0, 1.0, 1.0], &[1.0, 1.0, 0.0]],
            false,
        )
        .with_space(s.clone())
        .unwrap();
        let b = pod(&t, &s, SnapshotOptions::default(), DEFAULT_RANK_TOL).unwrap();
        for v in mode_norms(&b, &s).unwrap() {
            assert!((v - 1.0).abs() < 1e-10);
        }
        let plain = cross_norm_tail(&b, 1, &s).unwrap();
        assert!((plain - b.tail_sq(1)).abs() < 1e-14);
        assert_eq!(cross_norm_tail(&b, b.rank(), &s).unwrap(), 0.0);
    }

    #[test]
    fn sign_convention() {
        let u = [-3.0, 4.0];
        let t = traj_from(&[&u, &u], false);
        let b = pod(&t, t.space(), SnapshotOptions::default(), DEFAULT_RANK_TOL).unwrap();
        assert!(b.mode(1)[0] > 0.0);
    }

    #[test]
    fn profile_agrees_with_direct_series() {
        use crate::random::{random_trajectory, trial_rng, RandomSpec};
        let g = DMatrix::from_fn(6, 6, |i, j| match i.abs_diff(j) {
            0 => 2.0,
            1 => -1.0,
            _ => 0.0,
        });
        let x = HilbertSpace::with_gram(GramKind::Stiffness, g).unwrap();
        let spec = RandomSpec::new(6, 9).smoothing(1);
        let t = random_trajectory(&mut trial_rng(11, 0), &spec, None).unwrap();
        let b = pod(&t, &x, SnapshotOptions::new(false, true), DEFAULT_RANK_TOL).unwrap();
        let l2 = HilbertSpace::identity(6);
        let profile = projection_error_profile(&b, &t, &l2).unwrap();
        assert_eq!(profile.len(), b.rank() + 1);
        for (r, p) in profile.iter().enumerate() {
            let d = projection_error_series(&b, r, &t, &l2).unwrap();
            for (a, c) in p.errors.iter().zip(&d.errors) {
                assert!((a - c).abs() < 1e-12, "r = {r}: {a} vs {c}");
            }
            assert_eq!(p.argmax, d.argmax);
        }
        let energy = energy_identity_profile(&b, &t).unwrap();
        let cross = cross_norm_identity_profile(&b, &t, &l2).unwrap();
        for r in 0..=b.rank() {
            assert!(energy[r].pass && cross[r].pass);
            let direct = verify_cross_norm_identity(&b, &t, r, &l2).unwrap();
            assert!((cross[r].rhs - direct.rhs).abs() <= 1e-14 * (1.0 + direct.rhs));
        }
    }

    #[test]
    fn jacobi_svd_handles_rank_deficient_factors() {
        // Rank 2 out of a 6 x 9 shape, and its tall transpose.
        let x = DMatrix::from_fn(6, 2, |i, j| {
            ((i + 1) * (j + 2)) as f64 + (i * i) as f64 * 0.1
        });
        let y = DMatrix::from_fn(2, 9, |i, j| (i as f64 + 1.0) * (j as f64 * 0.7).cos());
        for b in [&x * &y, (&x * &y).transpose()] {
            let (sigma, left) = sorted_svd(b.clone()).unwrap();
            let gram = b.transpose() * b.clone();
            let eig = gram.symmetric_eigen();
            let mut lambda: Vec<f64> = eig.eigenvalues.iter().copied().collect();
            lambda.sort_by(|p, q| q.total_cmp(p));
            for k in 0..2 {
                assert!((sigma[k] * sigma[k] - lambda[k]).abs() <= 1e-12 * lambda[0]);
                let uk = left.column(k);
                assert!((uk.norm() - 1.0).abs() < 1e-14);
                assert!(((b.transpose() * uk).norm() - sigma[k]).abs() <= 1e-13 * sigma[0]);
            }
            assert!(sigma[2..].iter().all(|s| *s <= 1e-14 * sigma[0]));
            assert!((left.column(0).dot(&left.column(1))).abs() < 1e-14);
        }
    }
}
