use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use podkit::inequality::constants::{ConstantsSummary, TableComparison};
use podkit::inequality::{
    check_lemma, compare_with_published, fuzz_lemma, FuzzConfig, FuzzSummary,
};
use podkit::io::{read_basis, read_snapshots, write_basis, write_snapshots};
use podkit::output::{
    deriv_norm_series, digest_path, error_vs_r_series, mode_norm_series, sigma_tail_series,
    write_report, Envelope, PlotKind, ReportKind,
};
use podkit::pod::{cross_norm_identity_profile, energy_identity_profile, projection_error_series};
use podkit::rom::{BoundKind, Measured};
use podkit::scenarios::HeatScenario;
use podkit::{
    assemble_fe, pod, BoundReport, ConstantsTable, Dirichlet, Error, FeProblem, GramKind, HatSeed,
    HilbertSpace, InequalityReport, Lemma, MeshKind, Result, RomConfig, SnapshotOptions, TimeGrid,
    Trajectory, DEFAULT_RANK_TOL,
};

use crate::args::{
    BoundsArgs, Cli, Command, ConstantsArgs, GenArgs, LemmaArgs, PodArgs, ProjArgs, RomArgs,
    ScenarioArgs, SweepArgs, TableArg,
};

/// Verdict of a command that ran to completion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Violation,
}

impl Outcome {
    fn from_pass(pass: bool) -> Self {
        if pass {
            Outcome::Pass
        } else {
            Outcome::Violation
        }
    }
}

struct Ctx {
    seed: u64,
    out: PathBuf,
    json: bool,
}

impl Ctx {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn emit<T: Serialize>(&self, file: &str, kind: ReportKind, env: &Envelope<T>) -> Result<()> {
        let path = self.path(file);
        write_report(&path, kind, env)?;
        if self.json {
            let _ = io::stdout().lock().write_all(&fs::read(&path)?);
        }
        Ok(())
    }

    fn say(&self, line: impl AsRef<str>) {
        if !self.json {
            let _ = writeln!(io::stdout().lock(), "{}", line.as_ref());
        }
    }
}

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub fn run(cli: Cli) -> Result<Outcome> {
    let ctx = Ctx {
        seed: cli.seed,
        out: cli.out,
        json: cli.json,
    };
    fs::create_dir_all(&ctx.out)?;
    match cli.command {
        Command::Constants(a) => constants(&ctx, a),
        Command::CheckLemmas(a) => check_lemmas(&ctx, a),
        Command::Gen(a) => generate(&ctx, a),
        Command::Pod(a) => run_pod(&ctx, a),
        Command::ProjErrors(a) => proj_errors(&ctx, a),
        Command::Rom(a) => rom(&ctx, a),
        Command::Bounds(a) => bounds(&ctx, a),
        Command::Sweep(a) => sweep(&ctx, a),
    }
}

fn scenario(a: &ScenarioArgs) -> Result<HeatScenario> {
    HeatScenario::new(a.kind.flavor(), a.cells, a.profiles, a.nu, a.duration)
}

/// FE matrices of the standing interval mesh, checked against `dim`.
fn fe_problem(cells: usize, dim: usize) -> Result<FeProblem> {
    let p = assemble_fe(MeshKind::Interval, cells, Dirichlet::All, 1.0)?;
    if p.dofs() != dim {
        return Err(bad(format!(
            "{cells} cells give {} unknowns, the data has {dim}",
            p.dofs()
        )));
    }
    Ok(p)
}

fn other_gram(kind: GramKind) -> GramKind {
    match kind {
        GramKind::Stiffness => GramKind::Mass,
        _ => GramKind::Stiffness,
    }
}

fn write_csv(path: &Path, header: &str, rows: &[String]) -> Result<()> {
    let mut text = String::with_capacity(64 * (rows.len() + 1));
    text.push_str(header);
    text.push('\n');
    for r in rows {
        text.push_str(r);
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

#[derive(Serialize)]
struct ConstantsPayload {
    #[serde(flatten)]
    summary: ConstantsSummary,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    comparisons: Vec<TableComparison>,
}

fn constants(ctx: &Ctx, a: ConstantsArgs) -> Result<Outcome> {
    let seed = HatSeed::parse(&a.hat_seed)?;
    let table = ConstantsTable::new(a.mmax, seed)?;
    let orders: Vec<usize> = (1..=a.mmax).collect();
    let summary = table.summary(&orders)?;
    let comparisons = if a.compare {
        HatSeed::ADMISSIBLE
            .iter()
            .map(|&s| compare_with_published(s, 5e-3))
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    ctx.say(format!(
        "c_A = {:.10}  c_A1 = {:.10}  c_B1 = {:.10}  seed {} = {:.6}",
        summary.c_a, summary.c_a1, summary.c_b1, summary.seed, summary.seed_value
    ));
    for row in summary.c_m.iter() {
        ctx.say(format!("c_{:<6} = {:.4}", row.m, row.c_m));
    }
    for c in &comparisons {
        ctx.say(format!(
            "seed {:<10} matches={} nondecreasing={} c(1e5)-c(1e4) = {:.4e}",
            c.seed, c.matches, c.nondecreasing, c.saturation_gap
        ));
    }
    let env = Envelope::new(
        ReportKind::Constants,
        ctx.seed,
        ConstantsPayload {
            summary,
            comparisons,
        },
    );
    ctx.emit("constants.json", ReportKind::Constants, &env)?;
    Ok(Outcome::Pass)
}

#[derive(Serialize)]
struct LemmaPayload {
    trials: usize,
    config: FuzzConfig,
    runs: Vec<FuzzSummary>,
    /// Alternating period-2 sequence, where summation by parts is an equality.
    sbp_equality: InequalityReport,
    violations: usize,
    pass: bool,
}

fn check_lemmas(ctx: &Ctx, a: LemmaArgs) -> Result<Outcome> {
    if a.trials == 0 {
        return Err(bad("--trials must be at least 1"));
    }
    if a.max_dim == 0 || a.max_intervals < 2 {
        return Err(bad("need --max-dim ≥ 1 and --max-intervals ≥ 2"));
    }
    let lemmas = if a.lemma.is_empty() {
        Lemma::ALL.to_vec()
    } else {
        a.lemma
            .iter()
            .map(|s| Lemma::from_name(s))
            .collect::<Result<_>>()?
    };
    let cfg = FuzzConfig {
        max_dim: a.max_dim,
        max_intervals: a.max_intervals,
        ..FuzzConfig::default()
    };
    let consts = ConstantsTable::new(a.max_order.max(2), HatSeed::default())?;
    let mut runs = Vec::new();
    for lemma in lemmas {
        for order in lemma.orders(a.max_intervals) {
            if order > a.max_order {
                break;
            }
            let s = fuzz_lemma(lemma, order, a.trials, ctx.seed, &cfg, &consts)?;
            ctx.say(format!(
                "{:<18} order {order}: {} violations / {} (worst ratio {:.6})",
                lemma.name(),
                s.violations,
                s.trials,
                s.worst.ratio
            ));
            runs.push(s);
        }
    }
    let alt = Trajectory::scalar(TimeGrid::new(2.0, 2)?, &[1.0, -1.0, 1.0], true)?;
    let sbp = check_lemma(&alt, Lemma::PartsPeriodic, 1, &consts)?;
    let sbp_equality = InequalityReport::identity(sbp.check, sbp.lhs, sbp.rhs, sbp.params.clone());
    ctx.say(format!(
        "summation-by-parts equality: lhs {:.12} rhs {:.12}",
        sbp_equality.lhs, sbp_equality.rhs
    ));
    let violations: usize = runs.iter().map(|r| r.violations).sum();
    let pass = violations == 0 && sbp_equality.pass;
    let env = Envelope::new(
        ReportKind::Lemmas,
        ctx.seed,
        LemmaPayload {
            trials: a.trials,
            config: cfg,
            runs,
            sbp_equality,
            violations,
            pass,
        },
    );
    ctx.emit("lemmas.json", ReportKind::Lemmas, &env)?;
    Ok(Outcome::from_pass(pass))
}

#[derive(Serialize)]
struct GenPayload<'a> {
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "M")]
    m: usize,
    #[serde(rename = "T")]
    t: f64,
    periodic: bool,
    kind: &'a str,
    cells: usize,
    profiles: usize,
    nu: f64,
    gram: GramKind,
    container: &'a str,
}

fn generate(ctx: &Ctx, a: GenArgs) -> Result<Outcome> {
    let s = scenario(&a.scenario)?;
    let traj = s.trajectory(a.grid)?;
    let traj = traj.with_space(s.problem.space(a.space.gram()))?;
    let dir = ctx.path("snapshots");
    write_snapshots(&dir, &traj, false)?;
    ctx.say(format!(
        "wrote {} snapshots of dimension {} to {}",
        traj.len(),
        traj.dim(),
        dir.display()
    ));
    let payload = GenPayload {
        n: traj.dim(),
        m: a.grid,
        t: a.scenario.duration,
        periodic: traj.periodic(),
        kind: match a.scenario.kind {
            crate::args::KindArg::Periodic => "periodic",
            crate::args::KindArg::General => "general",
        },
        cells: a.scenario.cells,
        profiles: a.scenario.profiles,
        nu: a.scenario.nu,
        gram: a.space.gram(),
        container: "snapshots",
    };
    let env = Envelope::new(ReportKind::Generate, ctx.seed, payload)
        .with_input("snapshots", digest_path(&dir)?);
    ctx.emit("gen.json", ReportKind::Generate, &env)?;
    Ok(Outcome::Pass)
}

#[derive(Serialize)]
struct IdentityBatch {
    gram: GramKind,
    #[serde(serialize_with = "podkit::report::ser_f64")]
    max_relative_gap: f64,
    pass: bool,
    reports: Vec<InequalityReport>,
}

impl IdentityBatch {
    fn new(gram: GramKind, reports: Vec<InequalityReport>) -> Self {
        IdentityBatch {
            gram,
            max_relative_gap: reports.iter().map(|r| r.relative_gap()).fold(0.0, f64::max),
            pass: reports.iter().all(|r| r.pass),
            reports,
        }
    }
}

#[derive(Serialize)]
struct PodPayload {
    rank: usize,
    sigma: Vec<f64>,
    weight: f64,
    gram: GramKind,
    options: SnapshotOptions,
    energy_identity: IdentityBatch,
    cross_norm_identity: IdentityBatch,
    pass: bool,
}

fn run_pod(ctx: &Ctx, a: PodArgs) -> Result<Outcome> {
    let input = a.input.unwrap_or_else(|| ctx.path("snapshots"));
    let (traj, _) = read_snapshots(&input)?;
    let p = fe_problem(a.cells, traj.dim())?;
    let gram = a.space.gram();
    let space = p.space(gram);
    let basis = pod(&traj, &space, a.snapshots.options(), DEFAULT_RANK_TOL)?;
    let other = p.space(other_gram(gram));
    let energy = energy_identity_profile(&basis, &traj)?;
    let cross = cross_norm_identity_profile(&basis, &traj, &other)?;
    let energy = IdentityBatch::new(gram, energy);
    let cross = IdentityBatch::new(other.kind(), cross);
    let pass = energy.pass && cross.pass;

    let dir = ctx.path("basis");
    write_basis(&dir, &basis)?;
    sigma_tail_series(&basis).write(&ctx.path(PlotKind::SigmaTail.file_name()))?;
    mode_norm_series(&basis, &other)?.write(&ctx.path(PlotKind::ModeNorms.file_name()))?;
    ctx.say(format!(
        "rank {} under the {} Gram, sigma_1 = {:.6e}; identities: energy gap {:.2e}, cross-norm gap {:.2e}",
        basis.rank(),
        gram.as_str(),
        basis.sigma().first().copied().unwrap_or(0.0),
        energy.max_relative_gap,
        cross.max_relative_gap
    ));

    let env = Envelope::new(
        ReportKind::Pod,
        ctx.seed,
        PodPayload {
            rank: basis.rank(),
            sigma: basis.sigma().to_vec(),
            weight: basis.weight(),
            gram,
            options: basis.options(),
            energy_identity: energy,
            cross_norm_identity: cross,
            pass,
        },
    )
    .with_input("snapshots", digest_path(&input)?)
    .with_input("basis", digest_path(&dir)?);
    ctx.emit("pod.json", ReportKind::Pod, &env)?;
    Ok(Outcome::from_pass(pass))
}

#[derive(Serialize)]
struct ProjPayload {
    r: usize,
    gram: GramKind,
    errors: Vec<f64>,
    max: f64,
    argmax: usize,
    mean_square: f64,
    gamma: f64,
}

fn proj_errors(ctx: &Ctx, a: ProjArgs) -> Result<Outcome> {
    let input = a.input.unwrap_or_else(|| ctx.path("snapshots"));
    let basis_dir = a.basis.unwrap_or_else(|| ctx.path("basis"));
    let (traj, _) = read_snapshots(&input)?;
    let basis = read_basis(&basis_dir)?;
    let gram = a.space.map_or(basis.space().kind(), |s| s.gram());
    let measure: HilbertSpace = if gram == basis.space().kind() {
        basis.space().clone()
    } else {
        fe_problem(a.cells, traj.dim())?.space(gram)
    };
    let errs = projection_error_series(&basis, a.r, &traj, &measure)?;
    error_vs_r_series(&basis, &traj, &measure)?.write(&ctx.path(PlotKind::ErrorVsR.file_name()))?;
    ctx.say(format!(
        "r = {}: max {} projection error {:.6e} at n = {}, mean square {:.6e}",
        a.r,
        gram.as_str(),
        errs.max,
        errs.argmax,
        errs.mean_square
    ));
    let env = Envelope::new(
        ReportKind::ProjErrors,
        ctx.seed,
        ProjPayload {
            r: a.r,
            gram,
            max: errs.max,
            argmax: errs.argmax,
            mean_square: errs.mean_square,
            gamma: basis.gamma(a.r),
            errors: errs.errors,
        },
    )
    .with_input("snapshots", digest_path(&input)?)
    .with_input("basis", digest_path(&basis_dir)?);
    ctx.emit("proj_errors.json", ReportKind::ProjErrors, &env)?;
    Ok(Outcome::Pass)
}

#[derive(Serialize)]
struct RomPayload {
    scheme: &'static str,
    bdf2_start: podkit::Bdf2Start,
    r: usize,
    #[serde(rename = "M")]
    m: usize,
    errors: Vec<f64>,
    projected_errors: Vec<f64>,
    energy: Vec<f64>,
    max_error: f64,
}

fn rom(ctx: &Ctx, a: RomArgs) -> Result<Outcome> {
    let s = scenario(&a.scenario)?;
    let traj = s.trajectory(a.grid)?;
    let basis = s.basis(&traj, a.snapshots.options())?;
    let cfg = RomConfig::new(a.scheme.scheme(), a.r, s.grid(a.grid)?, a.scenario.nu)
        .with_start(a.bdf2_start.start());
    let sol = s.rom(&basis, &traj, &cfg)?;
    let max_error = sol.max_error();
    ctx.say(format!(
        "{} r = {} M = {}: max L2 error {:.6e}",
        cfg.scheme.as_str(),
        a.r,
        a.grid,
        max_error
    ));
    let env = Envelope::new(
        ReportKind::Rom,
        ctx.seed,
        RomPayload {
            scheme: cfg.scheme.as_str(),
            bdf2_start: cfg.bdf2_start,
            r: a.r,
            m: a.grid,
            errors: sol.errors,
            projected_errors: sol.projected_errors,
            energy: sol.energy,
            max_error,
        },
    );
    ctx.emit("rom.json", ReportKind::Rom, &env)?;
    Ok(Outcome::Pass)
}

fn consts_for(m: &[usize]) -> Result<ConstantsTable> {
    ConstantsTable::new(
        m.iter().copied().max().unwrap_or(2).max(2),
        HatSeed::default(),
    )
}

fn print_report(ctx: &Ctx, rep: &BoundReport) {
    ctx.say(format!(
        "{} r = {} M = {} gamma = {:.4e} pass = {}",
        rep.scheme.as_str(),
        rep.r,
        rep.intervals,
        rep.gamma,
        rep.pass
    ));
    for b in &rep.bounds {
        let m = b.m.map_or_else(|| "-".to_string(), |m| m.to_string());
        ctx.say(format!(
            "  {:<18} m={m:<2} measured {:.4e} bound {:.4e} factor {:>10.3} {}",
            b.bound.as_str(),
            b.lhs,
            b.rhs,
            b.factor,
            if b.pass { "ok" } else { "VIOLATED" }
        ));
    }
}

#[derive(Serialize)]
struct BoundsPayload {
    reports: Vec<BoundReport>,
    pass: bool,
}

fn bounds(ctx: &Ctx, a: BoundsArgs) -> Result<Outcome> {
    if a.scheme.is_empty() || a.m.is_empty() {
        return Err(bad("need at least one scheme and one order"));
    }
    let s = scenario(&a.scenario)?;
    let consts = consts_for(&a.m)?;
    let mut reports = Vec::with_capacity(a.scheme.len());
    for scheme in &a.scheme {
        let rep = s.bound_report(
            a.grid,
            a.r,
            scheme.scheme(),
            a.bdf2_start.start(),
            a.snapshots.options(),
            &consts,
            &a.m,
            a.quad,
        )?;
        print_report(ctx, &rep);
        reports.push(rep);
    }
    deriv_norm_series(
        &s.spec.sampler(),
        s.problem.mass_space(),
        &s.grid(a.grid)?,
        a.deriv_order,
    )?
    .write(&ctx.path(PlotKind::DerivNorms.file_name()))?;
    let pass = reports.iter().all(|r| r.pass);
    let env = Envelope::new(
        ReportKind::Bounds,
        ctx.seed,
        BoundsPayload { reports, pass },
    );
    ctx.emit("bounds.json", ReportKind::Bounds, &env)?;
    Ok(Outcome::from_pass(pass))
}

#[derive(Serialize)]
struct NondegradeRow {
    #[serde(rename = "M")]
    m: usize,
    max_projection_error: f64,
    degraded_baseline: f64,
}

#[derive(Serialize)]
struct FactorRow {
    #[serde(rename = "M")]
    m: usize,
    scheme: &'static str,
    bound: BoundKind,
    order: Option<usize>,
    measured: Measured,
    #[serde(serialize_with = "podkit::report::ser_f64")]
    lhs: f64,
    #[serde(serialize_with = "podkit::report::ser_f64")]
    rhs: f64,
    #[serde(serialize_with = "podkit::report::ser_f64")]
    factor: f64,
    pass: bool,
}

#[derive(Serialize)]
struct SweepPayload<T: Serialize> {
    table: &'static str,
    r: usize,
    rows: Vec<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error_spread: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    baseline_growth: Option<f64>,
    pass: bool,
}

fn sweep(ctx: &Ctx, a: SweepArgs) -> Result<Outcome> {
    if a.grid.is_empty() {
        return Err(bad("--grid needs at least one interval count"));
    }
    let s = scenario(&a.scenario)?;
    match a.table {
        TableArg::Nondegrade => {
            let mut rows = Vec::with_capacity(a.grid.len());
            for &m in &a.grid {
                let traj = s.trajectory(m)?;
                let basis = s.basis(&traj, a.snapshots.options())?;
                let errs = projection_error_series(&basis, a.r, &traj, basis.space())?;
                rows.push(NondegradeRow {
                    m,
                    max_projection_error: errs.max,
                    degraded_baseline: basis.degraded_bound(a.r),
                });
            }
            let (lo, hi) = rows.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), r| {
                (
                    lo.min(r.max_projection_error),
                    hi.max(r.max_projection_error),
                )
            });
            let spread = hi / lo;
            let growth = rows.last().map_or(1.0, |l| l.degraded_baseline)
                / rows.first().map_or(1.0, |f| f.degraded_baseline);
            let pass = spread.is_finite() && spread < 2.0;
            let csv: Vec<String> = rows
                .iter()
                .map(|r| format!("{},{},{}", r.m, r.max_projection_error, r.degraded_baseline))
                .collect();
            write_csv(
                &ctx.path("sweep_nondegrade.csv"),
                "M,max_projection_error,degraded_baseline",
                &csv,
            )?;
            for r in &rows {
                ctx.say(format!(
                    "M = {:>5}  max projection error {:.6e}  degraded baseline {:.6e}",
                    r.m, r.max_projection_error, r.degraded_baseline
                ));
            }
            ctx.say(format!(
                "error spread {spread:.4}x, baseline growth {growth:.4}x"
            ));
            let env = Envelope::new(
                ReportKind::Sweep,
                ctx.seed,
                SweepPayload {
                    table: "nondegrade",
                    r: a.r,
                    rows,
                    error_spread: Some(spread),
                    baseline_growth: Some(growth),
                    pass,
                },
            );
            ctx.emit("sweep.json", ReportKind::Sweep, &env)?;
            Ok(Outcome::from_pass(pass))
        }
        TableArg::Factors => {
            if a.scheme.is_empty() || a.m.is_empty() {
                return Err(bad("need at least one scheme and one order"));
            }
            let consts = consts_for(&a.m)?;
            let mut rows = Vec::new();
            for &m in &a.grid {
                for scheme in &a.scheme {
                    let rep = s.bound_report(
                        m,
                        a.r,
                        scheme.scheme(),
                        Default::default(),
                        a.snapshots.options(),
                        &consts,
                        &a.m,
                        a.quad,
                    )?;
                    rows.extend(rep.bounds.iter().map(|b| FactorRow {
                        m,
                        scheme: rep.scheme.as_str(),
                        bound: b.bound,
                        order: b.m,
                        measured: b.measured,
                        lhs: b.lhs,
                        rhs: b.rhs,
                        factor: b.factor,
                        pass: b.pass,
                    }));
                }
            }
            let csv: Vec<String> = rows
                .iter()
                .map(|r| {
                    format!(
                        "{},{},{},{},{},{},{},{}",
                        r.m,
                        r.scheme,
                        r.bound.as_str(),
                        r.order.map_or_else(String::new, |m| m.to_string()),
                        r.lhs,
                        r.rhs,
                        r.factor,
                        r.pass
                    )
                })
                .collect();
            write_csv(
                &ctx.path("sweep_factors.csv"),
                "M,scheme,bound,m,lhs,rhs,factor,pass",
                &csv,
            )?;
            let pass = rows.iter().all(|r| r.pass);
            let worst = rows
                .iter()
                .filter(|r| r.factor.is_finite())
                .fold(0.0f64, |w, r| w.max(r.factor));
            ctx.say(format!(
                "{} bound evaluations, all pass = {pass}, largest finite factor {worst:.4e}",
                rows.len()
            ));
            let env = Envelope::new(
                ReportKind::Sweep,
                ctx.seed,
                SweepPayload {
                    table: "factors",
                    r: a.r,
                    rows,
                    error_spread: None,
                    baseline_growth: None,
                    pass,
                },
            );
            ctx.emit("sweep.json", ReportKind::Sweep, &env)?;
            Ok(Outcome::from_pass(pass))
        }
    }
}
