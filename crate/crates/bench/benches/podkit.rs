use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use podkit::inequality::check_lemma;
use podkit::pod::energy_identity_profile;
use podkit::random::{random_trajectory, trial_rng, RandomSpec};
use podkit::scenarios::Flavor;
use podkit::{
    pod, Bdf2Start, ConstantsTable, HatSeed, Lemma, RomConfig, Scheme, SnapshotOptions,
    DEFAULT_RANK_TOL,
};
use podkit_bench::{heat, random_fe_trajectory};

fn bench_pod(c: &mut Criterion) {
    let mut group = c.benchmark_group("pod");
    for (cells, intervals) in [(32, 64), (128, 256), (201, 256)] {
        let (p, t) = random_fe_trajectory(cells, intervals, 1);
        group.bench_with_input(
            BenchmarkId::new("stiffness", format!("{cells}x{intervals}")),
            &t,
            |b, t| {
                b.iter(|| {
                    pod(
                        black_box(t),
                        p.stiffness_space(),
                        SnapshotOptions::default(),
                        DEFAULT_RANK_TOL,
                    )
                })
            },
        );
    }
    let (p, t) = random_fe_trajectory(128, 256, 2);
    let basis = pod(
        &t,
        p.mass_space(),
        SnapshotOptions::default(),
        DEFAULT_RANK_TOL,
    )
    .unwrap();
    group.bench_function("energy_identity_profile", |b| {
        b.iter(|| energy_identity_profile(black_box(&basis), &t))
    });
    group.finish();
}

fn bench_lemmas(c: &mut Criterion) {
    let consts = ConstantsTable::new(6, HatSeed::default()).unwrap();
    let mut group = c.benchmark_group("lemma");
    for lemma in [Lemma::Agmon, Lemma::PartsPeriodic, Lemma::MaxEstPeriodic] {
        let spec = RandomSpec::new(8, 128).periodic(lemma.is_periodic());
        let f = random_trajectory(&mut trial_rng(3, 0), &spec, None).unwrap();
        let order = if lemma == Lemma::Agmon { 0 } else { 3 };
        group.bench_function(format!("{lemma:?}"), |b| {
            b.iter(|| check_lemma(black_box(&f), lemma, order, &consts))
        });
    }
    group.bench_function("constants_table", |b| {
        b.iter(|| ConstantsTable::new(black_box(10), HatSeed::default()))
    });
    group.finish();
}

fn bench_rom(c: &mut Criterion) {
    let s = heat(Flavor::General);
    let mut group = c.benchmark_group("rom");
    for intervals in [128, 512] {
        let traj = s.trajectory(intervals).unwrap();
        let basis = s.basis(&traj, SnapshotOptions::default()).unwrap();
        for scheme in [Scheme::Euler, Scheme::Bdf2] {
            let cfg = RomConfig::new(scheme, 4, *traj.grid(), 1.0);
            group.bench_function(format!("{scheme:?}/{intervals}"), |b| {
                b.iter(|| s.rom(black_box(&basis), &traj, &cfg))
            });
        }
    }
    group.finish();
}

fn bench_bounds(c: &mut Criterion) {
    let s = heat(Flavor::Periodic);
    let consts = ConstantsTable::new(5, HatSeed::default()).unwrap();
    c.bench_function("bound_report/periodic/128", |b| {
        b.iter(|| {
            s.bound_report(
                black_box(128),
                4,
                Scheme::Bdf2,
                Bdf2Start::Project,
                SnapshotOptions::default(),
                &consts,
                &[2, 3, 4, 5],
                2049,
            )
        })
    });
}

criterion_group!(benches, bench_pod, bench_lemmas, bench_rom, bench_bounds);
criterion_main!(benches);
