//! Shared inputs for the benchmarks.

use podkit::random::{random_trajectory, trial_rng, RandomSpec};
use podkit::scenarios::{Flavor, HeatScenario};
use podkit::{assemble_fe, Dirichlet, FeProblem, MeshKind, Trajectory};

/// Interval problem with `cells` cells and a random trajectory on it.
pub fn random_fe_trajectory(cells: usize, intervals: usize, seed: u64) -> (FeProblem, Trajectory) {
    let p = assemble_fe(MeshKind::Interval, cells, Dirichlet::All, 1.0).expect("mesh");
    let spec = RandomSpec::new(p.dofs(), intervals);
    let t = random_trajectory(&mut trial_rng(seed, 0), &spec, Some(p.mass_space()))
        .expect("trajectory");
    (p, t)
}

pub fn heat(flavor: Flavor) -> HeatScenario {
    HeatScenario::standing(flavor).expect("scenario")
}
