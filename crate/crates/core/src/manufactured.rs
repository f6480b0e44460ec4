//! Closed-form trajectories `u(t) = Σ_i a_i(t) p_i` with exact time
//! derivatives, used to generate snapshots and reference quantities.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::fem::FeProblem;
use crate::grids::{TimeGrid, TimeSampler, Trajectory};
use crate::space::HilbertSpace;

/// Smooth scalar coefficient functions of time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Coefficient {
    Constant {
        value: f64,
    },
    /// `Σ_j c_j t^j`.
    Polynomial {
        coeffs: Vec<f64>,
    },
    /// `A sin(ω t + φ)`.
    Harmonic {
        amplitude: f64,
        angular: f64,
        phase: f64,
    },
    /// `A e^{λ t}`.
    Exponential {
        amplitude: f64,
        rate: f64,
    },
}

impl Coefficient {
    /// `A sin(2π k t / T + φ)`, periodic on `[0, T]`.
    pub fn periodic(amplitude: f64, k: u32, period: f64, phase: f64) -> Self {
        Coefficient::Harmonic {
            amplitude,
            angular: 2.0 * PI * k as f64 / period,
            phase,
        }
    }

    /// `d^order a / dt^order` at `t`.
    pub fn eval(&self, t: f64, order: usize) -> f64 {
        match self {
            Coefficient::Constant { value } => {
                if order == 0 {
                    *value
                } else {
                    0.0
                }
            }
            Coefficient::Polynomial { coeffs } => {
                // Horner in descending powers of t.
                coeffs
                    .iter()
                    .enumerate()
                    .skip(order)
                    .rev()
                    .fold(0.0, |acc, (j, c)| {
                        let falling: f64 = (j + 1 - order..=j).map(|x| x as f64).product();
                        acc * t + c * falling
                    })
            }
            Coefficient::Harmonic {
                amplitude,
                angular,
                phase,
            } => {
                amplitude
                    * angular.powi(order as i32)
                    * (angular * t + phase + order as f64 * FRAC_PI_2).sin()
            }
            Coefficient::Exponential { amplitude, rate } => {
                amplitude * rate.powi(order as i32) * (rate * t).exp()
            }
        }
    }

    /// Whether `a(t + T) = a(t)` for every `t`.
    pub fn is_periodic(&self, period: f64) -> bool {
        match self {
            Coefficient::Constant { .. } => true,
            Coefficient::Polynomial { coeffs } => coeffs.iter().skip(1).all(|c| *c == 0.0),
            Coefficient::Harmonic { angular, .. } => {
                let cycles = angular * period / (2.0 * PI);
                (cycles - cycles.round()).abs() < 1e-12 * cycles.abs().max(1.0)
            }
            Coefficient::Exponential { amplitude, rate } => *amplitude == 0.0 || *rate == 0.0,
        }
    }
}

/// Finite sum of coefficient functions times fixed spatial profiles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManufacturedSpec {
    dim: usize,
    terms: Vec<(Coefficient, Vec<f64>)>,
    max_order: usize,
}

/// Highest derivative a spec supplies unless told otherwise.
pub const DEFAULT_MAX_ORDER: usize = 12;

impl ManufacturedSpec {
    pub fn new(dim: usize) -> Self {
        ManufacturedSpec {
            dim,
            terms: Vec::new(),
            max_order: DEFAULT_MAX_ORDER,
        }
    }

    /// Adds `a(t) p`.
    pub fn term(mut self, a: Coefficient, profile: &DVector<f64>) -> Result<Self> {
        if profile.len() != self.dim {
            return invalid(format!(
                "profile has length {}, expected {}",
                profile.len(),
                self.dim
            ));
        }
        self.terms.push((a, profile.iter().copied().collect()));
        Ok(self)
    }

    pub fn with_max_order(mut self, max_order: usize) -> Self {
        self.max_order = max_order;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> usize {
        self.terms.len()
    }

    /// True when all coefficients are periodic with period `T`.
    pub fn is_periodic(&self, period: f64) -> bool {
        self.terms.iter().all(|(a, _)| a.is_periodic(period))
    }

    /// `∂_t^order u(t)`.
    pub fn eval(&self, t: f64, order: usize) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim);
        for (a, p) in &self.terms {
            let c = a.eval(t, order);
            if c != 0.0 {
                out.iter_mut().zip(p).for_each(|(o, x)| *o += c * x);
            }
        }
        out
    }

    /// Snapshots on `grid` in `space`; periodic when every coefficient is.
    pub fn trajectory(&self, space: &HilbertSpace, grid: &TimeGrid) -> Result<Trajectory> {
        space.check_dim(self.dim, "manufactured spec")?;
        let snaps: Vec<DVector<f64>> = grid.nodes().into_iter().map(|t| self.eval(t, 0)).collect();
        let periodic = self.is_periodic(grid.duration());
        let mut traj = Trajectory::from_snapshots(*grid, space.clone(), &snaps, false)?;
        if periodic {
            // Close the orbit exactly; rounding in sin(2πk) is not zero.
            let mut values = traj.values().clone();
            let first = values.column(0).into_owned();
            values.column_mut(grid.intervals()).copy_from(&first);
            traj = Trajectory::new(*grid, space.clone(), values, true)?;
        }
        Ok(traj)
    }

    /// Load vector `M u'(t) + ν K u(t)` whose semidiscrete heat solution is
    /// exactly `u`.
    pub fn heat_load(&self, p: &FeProblem, t: f64) -> DVector<f64> {
        p.mass() * self.eval(t, 1) + p.diffusion(&self.eval(t, 0))
    }

    /// This spec viewed as a [`TimeSampler`].
    pub fn sampler(&self) -> ManufacturedSampler<'_> {
        ManufacturedSampler(self)
    }

    /// `n_terms` random smooth terms in `R^dim` with unit-normal profiles.
    /// Periodic specs use harmonics `k = 1..=4` of `T`; general specs mix
    /// harmonics with incommensurate frequencies, exponentials and cubics.
    pub fn random<R: Rng + ?Sized>(
        rng: &mut R,
        dim: usize,
        n_terms: usize,
        period: f64,
        periodic: bool,
    ) -> Self {
        let mut spec = ManufacturedSpec::new(dim);
        for i in 0..n_terms {
            let profile: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
            let amplitude = rng.random_range(0.5..2.0);
            let phase = rng.random_range(0.0..2.0 * PI);
            let a = if periodic {
                Coefficient::periodic(amplitude, rng.random_range(1..=4), period, phase)
            } else {
                match i % 3 {
                    0 => Coefficient::Harmonic {
                        amplitude,
                        angular: rng.random_range(1.0..9.0) / period,
                        phase,
                    },
                    1 => Coefficient::Exponential {
                        amplitude,
                        rate: rng.random_range(-2.0..1.0) / period,
                    },
                    _ => Coefficient::Polynomial {
                        coeffs: (0..4)
                            .map(|j| rng.random_range(-1.0..1.0) / period.powi(j))
                            .collect(),
                    },
                }
            };
            spec.terms.push((a, profile));
        }
        spec
    }
}

/// Exact sampler of a [`ManufacturedSpec`].
#[derive(Clone, Copy, Debug)]
pub struct ManufacturedSampler<'a>(pub &'a ManufacturedSpec);

impl TimeSampler for ManufacturedSampler<'_> {
    fn dim(&self) -> usize {
        self.0.dim
    }

    fn max_order(&self) -> usize {
        self.0.max_order
    }

    fn sample(&self, t: f64, order: usize) -> Result<DVector<f64>> {
        if order > self.0.max_order {
            return invalid(format!(
                "derivative order {order} exceeds spec maximum {}",
                self.0.max_order
            ));
        }
        Ok(self.0.eval(t, order))
    }
}

/// Snapshots of `spec` on `grid` in the mass space of `p`, with its exact
/// derivative sampler.
pub fn manufactured_trajectory<'a>(
    spec: &'a ManufacturedSpec,
    p: &FeProblem,
    grid: &TimeGrid,
) -> Result<(Trajectory, ManufacturedSampler<'a>)> {
    if spec.dim != p.dofs() {
        return invalid(format!(
            "spec dimension {} differs from {} dofs",
            spec.dim,
            p.dofs()
        ));
    }
    Ok((spec.trajectory(p.mass_space(), grid)?, spec.sampler()))
}
