//! Seeded fuzzing and empirical sharpness probes for the sequence lemmas.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grids::{TimeGrid, Trajectory};
use crate::inequality::checks::{check_lemma, Lemma};
use crate::inequality::constants::ConstantsTable;
use crate::random::{random_values, trial_rng, RandomSpec};
use crate::report::InequalityReport;
use crate::space::HilbertSpace;

/// Ranges the fuzzer draws trajectory shapes from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FuzzConfig {
    pub max_dim: usize,
    pub max_intervals: usize,
    pub max_smoothing: usize,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig {
            max_dim: 8,
            max_intervals: 64,
            max_smoothing: 3,
        }
    }
}

/// Counts and worst case of one fuzz run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FuzzSummary {
    pub lemma: Lemma,
    pub order: usize,
    pub seed: u64,
    pub trials: usize,
    pub violations: usize,
    /// Report with the largest ratio.
    pub worst: InequalityReport,
}

fn random_case<R: Rng + ?Sized>(
    rng: &mut R,
    lemma: Lemma,
    order: usize,
    cfg: &FuzzConfig,
) -> Result<Trajectory> {
    let lo = lemma.min_intervals(order).max(1);
    if lo > cfg.max_intervals {
        return invalid(format!(
            "{} order {order} needs M ≥ {lo}, fuzz range stops at {}",
            lemma.name(),
            cfg.max_intervals
        ));
    }
    let m = rng.random_range(lo..=cfg.max_intervals);
    let n = rng.random_range(1..=cfg.max_dim.max(1));
    let smoothing = rng.random_range(0..=cfg.max_smoothing);
    let duration = 10f64.powf(rng.random_range(-1.0..1.0));
    let spec = RandomSpec {
        dim: n,
        intervals: m,
        duration,
        periodic: lemma.is_periodic(),
        smoothing,
    };
    let values = random_values(rng, &spec);
    Trajectory::new(
        TimeGrid::new(duration, m)?,
        HilbertSpace::identity(n),
        values,
        spec.periodic,
    )
}

fn worse(a: InequalityReport, b: InequalityReport) -> InequalityReport {
    if b.ratio > a.ratio {
        b
    } else {
        a
    }
}

/// Runs `trials` random trajectories through one lemma at one order.
/// Trial `i` uses stream `i` of a generator seeded with `seed`.
pub fn fuzz_lemma(
    lemma: Lemma,
    order: usize,
    trials: usize,
    seed: u64,
    cfg: &FuzzConfig,
    consts: &ConstantsTable,
) -> Result<FuzzSummary> {
    if trials == 0 {
        return invalid("trials must be at least 1");
    }
    let reports: Result<Vec<InequalityReport>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i as u64);
            let f = random_case(&mut rng, lemma, order, cfg)?;
            check_lemma(&f, lemma, order, consts)
        })
        .collect();
    let reports = reports?;
    let violations = reports.iter().filter(|r| !r.pass).count();
    let worst = reports.into_iter().reduce(worse).expect("trials ≥ 1");
    Ok(FuzzSummary {
        lemma,
        order,
        seed,
        trials,
        violations,
        worst,
    })
}

/// Shape of the trajectories probed by [`sharpness_search`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchDims {
    pub dim: usize,
    pub intervals: usize,
}

/// Largest ratio found for a lemma: random starts plus an alternating start
/// when the period is even, each refined by coordinate-wise hill climbing.
/// Deterministic given `seed`.
pub fn sharpness_search(
    lemma: Lemma,
    order: usize,
    trials: usize,
    seed: u64,
    dims: SearchDims,
    consts: &ConstantsTable,
) -> Result<InequalityReport> {
    if trials == 0 {
        return invalid("trials must be at least 1");
    }
    let m = dims.intervals;
    if !lemma.orders(m).contains(&order) {
        return invalid(format!(
            "order {order} inadmissible for {} with M = {m}",
            lemma.name()
        ));
    }
    let grid = TimeGrid::new(1.0, m)?;
    let space = HilbertSpace::identity(dims.dim);
    let periodic = lemma.is_periodic();
    let build = |x: &[f64]| -> Result<Trajectory> {
        let n = dims.dim;
        let free = if periodic { m } else { m + 1 };
        let mut values = nalgebra::DMatrix::zeros(n, m + 1);
        for j in 0..free {
            let col = if periodic { j + 1 } else { j };
            for i in 0..n {
                values[(i, col)] = x[j * n + i];
            }
        }
        if periodic {
            let last = values.column(m).into_owned();
            values.column_mut(0).copy_from(&last);
        }
        Trajectory::new(grid, space.clone(), values, periodic)
    };
    let ratio_of =
        |x: &[f64]| -> Result<InequalityReport> { check_lemma(&build(x)?, lemma, order, consts) };
    let free = if periodic { m } else { m + 1 };
    let len = free * dims.dim;

    let mut starts: Vec<Vec<f64>> = Vec::with_capacity(trials);
    if periodic && m % 2 == 0 {
        let alt: Vec<f64> = (0..free)
            .flat_map(|j| {
                let s = if (j + 1) % 2 == 0 { 1.0 } else { -1.0 };
                std::iter::repeat_n(s, dims.dim)
            })
            .collect();
        starts.push(alt);
    }
    for i in starts.len()..trials {
        let mut rng = trial_rng(seed, i as u64);
        starts.push(
            (0..len)
                .map(|_| rng.sample(rand_distr::StandardNormal))
                .collect(),
        );
    }

    let refined: Result<Vec<InequalityReport>> = starts
        .into_par_iter()
        .map(|mut x| {
            let mut best = ratio_of(&x)?;
            let mut delta = 0.5;
            for _ in 0..6 {
                let mut improved = true;
                let mut sweeps = 0;
                while improved && sweeps < 20 {
                    improved = false;
                    sweeps += 1;
                    for c in 0..len {
                        for sign in [1.0, -1.0] {
                            let old = x[c];
                            x[c] = old + sign * delta;
                            let r = ratio_of(&x)?;
                            if r.ratio.is_finite() && r.ratio > best.ratio {
                                best = r;
                                improved = true;
                            } else {
                                x[c] = old;
                            }
                        }
                    }
                }
                delta *= 0.25;
            }
            Ok(best)
        })
        .collect();
    Ok(refined?.into_iter().reduce(worse).expect("trials ≥ 1"))
}
