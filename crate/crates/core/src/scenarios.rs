//! Standing test problems shared by the CLI, the acceptance suite and the
//! benchmarks.

use std::f64::consts::PI;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::fem::{assemble_fe, Dirichlet, FeProblem, MeshKind};
use crate::grids::{TimeGrid, Trajectory};
use crate::inequality::ConstantsTable;
use crate::manufactured::{Coefficient, ManufacturedSpec};
use crate::pod::{pod, PodBasis, SnapshotOptions, DEFAULT_RANK_TOL};
use crate::rom::{
    bound_report, rom_solve, Bdf2Start, BoundInputs, BoundReport, RomConfig, RomSolution, Scheme,
};

/// Cells of the standing interval mesh.
pub const STANDING_CELLS: usize = 16;

/// Spatial profiles `sin(jπx)` used by the standing problems.
pub const STANDING_PROFILES: usize = 10;

/// Time dependence of a standing problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    /// `T`-periodic orbit, the analog of a stable limit cycle.
    Periodic,
    /// Smooth non-periodic transient.
    General,
}

impl Flavor {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "periodic" => Ok(Flavor::Periodic),
            "general" => Ok(Flavor::General),
            _ => invalid(format!(
                "unknown trajectory kind {s:?}, expected periodic or general"
            )),
        }
    }
}

/// Manufactured heat problem `u(x,t) = Σ_j a_j(t) sin(jπx)` on the unit
/// interval with homogeneous Dirichlet data.
#[derive(Clone, Debug)]
pub struct HeatScenario {
    pub problem: FeProblem,
    pub spec: ManufacturedSpec,
    pub flavor: Flavor,
    pub duration: f64,
}

impl HeatScenario {
    /// Standing problem on [`STANDING_CELLS`] cells with `ν = 1`.
    pub fn standing(flavor: Flavor) -> Result<Self> {
        Self::new(flavor, STANDING_CELLS, STANDING_PROFILES, 1.0, 1.0)
    }

    /// `profiles` modes on `cells` cells; the time scale follows `duration`.
    pub fn new(
        flavor: Flavor,
        cells: usize,
        profiles: usize,
        nu: f64,
        duration: f64,
    ) -> Result<Self> {
        let problem = assemble_fe(MeshKind::Interval, cells, Dirichlet::All, nu)?;
        if profiles == 0 || profiles > problem.dofs() {
            return invalid(format!(
                "need 1..={} profiles, got {profiles}",
                problem.dofs()
            ));
        }
        if !(duration > 0.0 && duration.is_finite()) {
            return invalid(format!("duration must be positive, got {duration}"));
        }
        let mut spec = ManufacturedSpec::new(problem.dofs());
        for j in 1..=profiles {
            let jf = j as f64;
            let prof = problem.interpolate(|x, _| (jf * PI * x).sin());
            let amp = 0.35f64.powi(j as i32 - 1);
            let a = match flavor {
                Flavor::Periodic => Coefficient::periodic(amp, j as u32, duration, 0.7 * jf),
                Flavor::General => Coefficient::Harmonic {
                    amplitude: amp,
                    angular: (2.0 + 1.3 * jf) / duration,
                    phase: 0.7 * jf,
                },
            };
            spec = spec.term(a, &prof)?;
            if flavor == Flavor::General && j <= 3 {
                let decay = Coefficient::Exponential {
                    amplitude: 0.5 * amp,
                    rate: -jf / duration,
                };
                spec = spec.term(decay, &prof)?;
            }
        }
        Ok(HeatScenario {
            problem,
            spec,
            flavor,
            duration,
        })
    }

    pub fn grid(&self, intervals: usize) -> Result<TimeGrid> {
        TimeGrid::new(self.duration, intervals)
    }

    /// Exact snapshots on `intervals` steps, in the mass space.
    pub fn trajectory(&self, intervals: usize) -> Result<Trajectory> {
        self.spec
            .trajectory(self.problem.mass_space(), &self.grid(intervals)?)
    }

    /// POD basis of `traj` under the stiffness Gram.
    pub fn basis(&self, traj: &Trajectory, options: SnapshotOptions) -> Result<PodBasis> {
        pod(
            traj,
            self.problem.stiffness_space(),
            options,
            DEFAULT_RANK_TOL,
        )
    }

    pub fn load(&self, t: f64) -> DVector<f64> {
        self.spec.heat_load(&self.problem, t)
    }

    pub fn rom(&self, basis: &PodBasis, traj: &Trajectory, cfg: &RomConfig) -> Result<RomSolution> {
        rom_solve(&self.problem, basis, cfg, |t| self.load(t), traj)
    }

    /// Snapshots, stiffness basis and the full bound report.
    #[allow(clippy::too_many_arguments)]
    pub fn bound_report(
        &self,
        intervals: usize,
        r: usize,
        scheme: Scheme,
        bdf2_start: Bdf2Start,
        options: SnapshotOptions,
        consts: &ConstantsTable,
        m_list: &[usize],
        quad_points: usize,
    ) -> Result<BoundReport> {
        let traj = self.trajectory(intervals)?;
        let basis = self.basis(&traj, options)?;
        let load = |t: f64| self.load(t);
        let sampler = self.spec.sampler();
        let inp = BoundInputs {
            problem: &self.problem,
            basis: &basis,
            r,
            reference: &traj,
            sampler: &sampler,
            load: &load,
            scheme,
            bdf2_start,
            consts,
            quad_points,
        };
        bound_report(&inp, m_list)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standing_problems_have_full_rank() {
        for flavor in [Flavor::Periodic, Flavor::General] {
            let s = HeatScenario::standing(flavor).unwrap();
            let traj = s.trajectory(64).unwrap();
            assert_eq!(traj.periodic(), flavor == Flavor::Periodic);
            let basis = s.basis(&traj, SnapshotOptions::default()).unwrap();
            assert_eq!(basis.rank(), STANDING_PROFILES);
        }
    }

    #[test]
    fn flavor_names() {
        assert_eq!(Flavor::parse("periodic").unwrap(), Flavor::Periodic);
        assert!(Flavor::parse("other").is_err());
    }
}
