use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use podkit::grids::dq;
use podkit::inequality::check_lemma;
use podkit::pod::{cross_norm_identity_profile, energy_identity_profile};
use podkit::pod::{mode_norms, verify_cross_norm_identity, verify_energy_identity};
use podkit::random::{random_trajectory, trial_rng, RandomSpec};
use podkit::scenarios::{Flavor, HeatScenario};
use podkit::{
    assemble_fe, pod, ConstantsTable, Dirichlet, GramKind, HatSeed, HilbertSpace, Lemma, MeshKind,
    SnapshotOptions, TimeGrid, Trajectory, DEFAULT_RANK_TOL,
};

fn traj(seed: u64, dim: usize, intervals: usize, periodic: bool, duration: f64) -> Trajectory {
    let spec = RandomSpec::new(dim, intervals)
        .periodic(periodic)
        .duration(duration);
    random_trajectory(&mut trial_rng(seed, 0), &spec, None).unwrap()
}

fn binomial(k: usize, i: usize) -> f64 {
    (0..i).fold(1.0, |acc, j| acc * (k - j) as f64 / (j + 1) as f64)
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, x| a.max(x.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dq_is_linear(
        seed in any::<u64>(),
        dim in 1usize..5,
        intervals in 2usize..24,
        k in 0usize..4,
        periodic in any::<bool>(),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        prop_assume!(periodic || k <= intervals);
        let f = traj(seed, dim, intervals, periodic, 1.0);
        let g = traj(seed.wrapping_add(1), dim, intervals, periodic, 1.0);
        let combo = Trajectory::new(
            *f.grid(),
            HilbertSpace::identity(dim),
            f.values() * a + g.values() * b,
            periodic,
        ).unwrap();
        let lhs = dq(&combo, k).unwrap().values;
        let rhs = dq(&f, k).unwrap().values * a + dq(&g, k).unwrap().values * b;
        let scale = 1.0 + max_abs(&rhs);
        prop_assert!(max_abs(&(lhs - rhs)) <= 1e-11 * scale);
    }

    #[test]
    fn dq_matches_binomial_stencil(
        seed in any::<u64>(),
        intervals in 1usize..20,
        k in 1usize..5,
        duration in 0.1f64..5.0,
        periodic in any::<bool>(),
    ) {
        prop_assume!(periodic || k <= intervals);
        let f = traj(seed, 2, intervals, periodic, duration);
        let d = dq(&f, k).unwrap();
        let step = f.grid().step();
        let m = intervals as isize;
        let at = |n: isize| {
            let idx = if periodic { (((n - 1).rem_euclid(m)) + 1) as usize } else { n as usize };
            f.snapshot(idx).into_owned()
        };
        let first = d.first_index;
        for j in 0..d.len() {
            let n = (first + j) as isize;
            let mut expect = DVector::zeros(2);
            for i in 0..=k {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                expect += at(n - i as isize) * (sign * binomial(k, i));
            }
            expect /= step.powi(k as i32);
            let got = d.at(first + j).into_owned();
            let scale = 1.0 + expect.amax();
            prop_assert!((got - expect).amax() <= 1e-9 * scale);
        }
    }

    #[test]
    fn dq_composes(seed in any::<u64>(), intervals in 4usize..20, j in 1usize..3, k in 1usize..3) {
        let f = traj(seed, 3, intervals, false, 2.0);
        let dj = dq(&f, j).unwrap();
        let inner = Trajectory::new(
            TimeGrid::new(f.grid().step() * (intervals - j) as f64, intervals - j).unwrap(),
            HilbertSpace::identity(3),
            dj.values.clone(),
            false,
        ).unwrap();
        let nested = dq(&inner, k).unwrap().values;
        let direct = dq(&f, j + k).unwrap().values;
        prop_assert!(max_abs(&(nested - &direct)) <= 1e-9 * (1.0 + max_abs(&direct)));
    }

    #[test]
    fn lemma_ratios_are_amplitude_invariant(
        seed in any::<u64>(),
        intervals in 8usize..32,
        alpha in prop_oneof![0.001f64..0.1, 10.0f64..1000.0],
        lemma_ix in 0usize..8,
        order in 1usize..5,
    ) {
        let lemma = Lemma::ALL[lemma_ix];
        let order = if lemma == Lemma::Agmon { 0 } else { order };
        prop_assume!(lemma.orders(intervals).contains(&order));
        let consts = ConstantsTable::new(6, HatSeed::default()).unwrap();
        let f = traj(seed, 2, intervals, lemma.is_periodic(), 1.0);
        let a = check_lemma(&f, lemma, order, &consts).unwrap();
        let b = check_lemma(&f.scaled(alpha), lemma, order, &consts).unwrap();
        prop_assert!((a.ratio - b.ratio).abs() <= 1e-9 * a.ratio.max(1e-300));
        prop_assert_eq!(a.pass, b.pass);
    }

    #[test]
    fn periodic_lemma_ratios_are_time_scale_invariant(
        seed in any::<u64>(),
        intervals in 8usize..32,
        s in prop_oneof![0.01f64..0.5, 2.0f64..100.0],
        lemma_ix in 0usize..4,
        order in 1usize..5,
    ) {
        let lemma = [Lemma::Agmon, Lemma::PartsPeriodic, Lemma::InterpPeriodic, Lemma::MaxEstPeriodic][lemma_ix];
        let order = if lemma == Lemma::Agmon { 0 } else { order };
        prop_assume!(lemma.orders(intervals).contains(&order));
        let consts = ConstantsTable::new(6, HatSeed::default()).unwrap();
        let f = traj(seed, 2, intervals, lemma.is_periodic(), 1.0);
        let a = check_lemma(&f, lemma, order, &consts).unwrap();
        let b = check_lemma(&f.rescaled_time(s).unwrap(), lemma, order, &consts).unwrap();
        prop_assert!((a.ratio - b.ratio).abs() <= 1e-9 * a.ratio.max(1e-300));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pod_identities_hold_for_every_r(
        seed in any::<u64>(),
        cells in 3usize..40,
        intervals in 1usize..48,
        stiffness in any::<bool>(),
        periodic in any::<bool>(),
        drop_first in any::<bool>(),
        subtract_mean in any::<bool>(),
    ) {
        let p = assemble_fe(MeshKind::Interval, cells, Dirichlet::All, 1.0).unwrap();
        let f = traj(seed, p.dofs(), intervals, periodic, 1.0);
        let (kind, other) = if stiffness {
            (GramKind::Stiffness, GramKind::Mass)
        } else {
            (GramKind::Mass, GramKind::Stiffness)
        };
        let opts = SnapshotOptions::new(drop_first && periodic, subtract_mean);
        let basis = pod(&f, &p.space(kind), opts, DEFAULT_RANK_TOL).unwrap();
        prop_assert!(basis.orthonormality_defect() < 1e-10);
        let other = p.space(other);
        for r in 0..=basis.rank() {
            let e = verify_energy_identity(&basis, &f, r).unwrap();
            prop_assert!(e.pass, "energy r={} gap {:e}", r, e.relative_gap());
            let c = verify_cross_norm_identity(&basis, &f, r, &other).unwrap();
            prop_assert!(c.pass, "cross r={} gap {:e}", r, c.relative_gap());
        }
        let norms = mode_norms(&basis, basis.space()).unwrap();
        prop_assert!(norms.iter().all(|n| (n - 1.0).abs() < 1e-10));
    }

    #[test]
    fn projection_is_idempotent_and_orthogonal(
        seed in any::<u64>(),
        dim in 2usize..12,
        intervals in 2usize..30,
        r_frac in 0.0f64..=1.0,
        v_seed in any::<u64>(),
    ) {
        let p = assemble_fe(MeshKind::Interval, dim + 1, Dirichlet::All, 1.0).unwrap();
        let f = traj(seed, dim, intervals, false, 1.0);
        let basis = pod(&f, p.stiffness_space(), SnapshotOptions::default(), DEFAULT_RANK_TOL).unwrap();
        let r = (r_frac * basis.rank() as f64).round() as usize;
        let v = traj(v_seed, dim, 1, false, 1.0).snapshot(0).into_owned();
        let pv = basis.project(r, v.as_view()).unwrap();
        let ppv = basis.project(r, pv.as_view()).unwrap();
        let scale = 1.0 + v.amax();
        prop_assert!((&ppv - &pv).amax() <= 1e-10 * scale);
        let res = basis.residual(r, v.as_view()).unwrap();
        for k in 1..=r {
            let phi = basis.mode(k).into_owned();
            prop_assert!(basis.space().inner(&res, &phi).abs() <= 1e-10 * scale);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn identities_stay_sharp_on_fast_decaying_spectra(
        periodic in any::<bool>(),
        cells in 8usize..40,
        profiles in 4usize..8,
        intervals in 16usize..160,
        stiffness in any::<bool>(),
        drop_first in any::<bool>(),
        subtract_mean in any::<bool>(),
    ) {
        let flavor = if periodic { Flavor::Periodic } else { Flavor::General };
        let s = HeatScenario::new(flavor, cells, profiles, 1.0, 1.0).unwrap();
        let p = assemble_fe(MeshKind::Interval, cells, Dirichlet::All, 1.0).unwrap();
        let (kind, other) = if stiffness {
            (GramKind::Stiffness, GramKind::Mass)
        } else {
            (GramKind::Mass, GramKind::Stiffness)
        };
        let f = s.trajectory(intervals).unwrap();
        let opts = SnapshotOptions::new(drop_first, subtract_mean);
        let basis = pod(&f, &p.space(kind), opts, DEFAULT_RANK_TOL).unwrap();
        let energy = energy_identity_profile(&basis, &f).unwrap();
        let cross = cross_norm_identity_profile(&basis, &f, &p.space(other)).unwrap();
        for (e, c) in energy.iter().zip(&cross) {
            prop_assert!(e.pass, "energy {:?}: {:e} vs {:e}", e.params, e.lhs, e.rhs);
            prop_assert!(c.pass, "cross {:?}: {:e} vs {:e}", c.params, c.lhs, c.rhs);
        }
    }
}
