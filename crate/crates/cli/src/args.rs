use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use podkit::inequality::DEFAULT_QUAD_POINTS;
use podkit::scenarios::{Flavor, STANDING_CELLS, STANDING_PROFILES};
use podkit::{Bdf2Start, GramKind, Scheme, SnapshotOptions};

#[derive(Debug, Parser)]
#[command(
    name = "podkit",
    version,
    about = "POD bases, discrete inequalities and reduced heat models"
)]
pub struct Cli {
    /// Seed recorded in every report and used by the random checks.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,

    /// Output directory; every written path is relative to it.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,

    /// Print the JSON report on stdout instead of the text summary.
    #[arg(long, global = true)]
    pub json: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate c_A, c_A1, c_B1 and c_m.
    Constants(ConstantsArgs),
    /// Fuzz the sequence lemmas on seeded random trajectories.
    CheckLemmas(LemmaArgs),
    /// Write the snapshots of a manufactured heat trajectory.
    Gen(GenArgs),
    /// Compute a POD basis from a snapshot container.
    Pod(PodArgs),
    /// Projection errors of a snapshot container onto a basis.
    ProjErrors(ProjArgs),
    /// Solve the POD-Galerkin reduced heat model.
    Rom(RomArgs),
    /// Evaluate every error bound against its measured quantity.
    Bounds(BoundsArgs),
    /// Tables over several grids.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SpaceArg {
    /// FE mass matrix.
    L2,
    /// FE stiffness matrix.
    H10,
}

impl SpaceArg {
    pub fn gram(self) -> GramKind {
        match self {
            SpaceArg::L2 => GramKind::Mass,
            SpaceArg::H10 => GramKind::Stiffness,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Periodic,
    General,
}

impl KindArg {
    pub fn flavor(self) -> Flavor {
        match self {
            KindArg::Periodic => Flavor::Periodic,
            KindArg::General => Flavor::General,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Euler,
    Bdf2,
}

impl SchemeArg {
    pub fn scheme(self) -> Scheme {
        match self {
            SchemeArg::Euler => Scheme::Euler,
            SchemeArg::Bdf2 => Scheme::Bdf2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StartArg {
    /// Project the reference at t_1.
    Project,
    /// One backward Euler step.
    Euler,
}

impl StartArg {
    pub fn start(self) -> Bdf2Start {
        match self {
            StartArg::Project => Bdf2Start::Project,
            StartArg::Euler => Bdf2Start::EulerStep,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TableArg {
    /// Max pointwise projection error against the degraded baseline.
    Nondegrade,
    /// Overestimation factor of every bound.
    Factors,
}

/// The manufactured heat problem on the unit interval.
#[derive(Clone, Debug, Args)]
pub struct ScenarioArgs {
    #[arg(long, value_enum, default_value_t = KindArg::Periodic)]
    pub kind: KindArg,

    /// Interval mesh cells.
    #[arg(long, default_value_t = STANDING_CELLS)]
    pub cells: usize,

    /// Number of sin(jπx) profiles.
    #[arg(long, default_value_t = STANDING_PROFILES)]
    pub profiles: usize,

    /// Final time T.
    #[arg(long, default_value_t = 1.0)]
    pub duration: f64,

    /// Diffusivity.
    #[arg(long, default_value_t = 1.0)]
    pub nu: f64,
}

#[derive(Clone, Copy, Debug, Args)]
pub struct SnapshotArgs {
    /// Skip u^0 and weight by 1/M.
    #[arg(long)]
    pub drop_first: bool,

    /// Subtract the snapshot mean before the decomposition.
    #[arg(long)]
    pub subtract_mean: bool,
}

impl SnapshotArgs {
    pub fn options(self) -> SnapshotOptions {
        SnapshotOptions::new(self.drop_first, self.subtract_mean)
    }
}

#[derive(Debug, Args)]
pub struct ConstantsArgs {
    /// Largest order m of the table.
    #[arg(long, default_value_t = 10)]
    pub mmax: usize,

    /// Seed of the d̂ recursion: cb1, cb1/sqrt2, ca, ca1, one or a number.
    #[arg(long, default_value = "cb1")]
    pub hat_seed: String,

    /// Also compare every named seed with the published table.
    #[arg(long)]
    pub compare: bool,
}

#[derive(Debug, Args)]
pub struct LemmaArgs {
    /// Random trajectories per lemma and order.
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,

    /// Highest order checked.
    #[arg(long, default_value_t = 6)]
    pub max_order: usize,

    /// Restrict to these lemmas (by report name).
    #[arg(long, value_delimiter = ',')]
    pub lemma: Vec<String>,

    /// Largest interval count of a random trajectory.
    #[arg(long, default_value_t = 64)]
    pub max_intervals: usize,

    /// Largest state dimension of a random trajectory.
    #[arg(long, default_value_t = 8)]
    pub max_dim: usize,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,

    /// Time intervals M.
    #[arg(long, default_value_t = 128)]
    pub grid: usize,

    /// Gram stored with the snapshots.
    #[arg(long, value_enum, default_value_t = SpaceArg::L2)]
    pub space: SpaceArg,
}

#[derive(Debug, Args)]
pub struct PodArgs {
    /// Snapshot container; defaults to OUT/snapshots.
    #[arg(long)]
    pub input: Option<PathBuf>,

    /// Inner product of the decomposition.
    #[arg(long, value_enum, default_value_t = SpaceArg::H10)]
    pub space: SpaceArg,

    #[command(flatten)]
    pub snapshots: SnapshotArgs,

    /// Mesh cells the FE matrices are rebuilt on.
    #[arg(long, default_value_t = STANDING_CELLS)]
    pub cells: usize,
}

#[derive(Debug, Args)]
pub struct ProjArgs {
    /// Snapshot container; defaults to OUT/snapshots.
    #[arg(long)]
    pub input: Option<PathBuf>,

    /// Basis container; defaults to OUT/basis.
    #[arg(long)]
    pub basis: Option<PathBuf>,

    /// Retained modes.
    #[arg(long, default_value_t = 4)]
    pub r: usize,

    /// Norm of the errors; defaults to the basis inner product.
    #[arg(long, value_enum)]
    pub space: Option<SpaceArg>,

    /// Mesh cells the FE matrices are rebuilt on.
    #[arg(long, default_value_t = STANDING_CELLS)]
    pub cells: usize,
}

#[derive(Debug, Args)]
pub struct RomArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,

    #[command(flatten)]
    pub snapshots: SnapshotArgs,

    /// Time intervals M.
    #[arg(long, default_value_t = 128)]
    pub grid: usize,

    /// Retained modes.
    #[arg(long, default_value_t = 4)]
    pub r: usize,

    #[arg(long, value_enum, default_value_t = SchemeArg::Euler)]
    pub scheme: SchemeArg,

    /// How BDF2 obtains its second value.
    #[arg(long, value_enum, default_value_t = StartArg::Project)]
    pub bdf2_start: StartArg,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,

    #[command(flatten)]
    pub snapshots: SnapshotArgs,

    /// Time intervals M.
    #[arg(long, default_value_t = 128)]
    pub grid: usize,

    /// Retained modes.
    #[arg(long, default_value_t = 4)]
    pub r: usize,

    /// Interpolation orders.
    #[arg(long, value_delimiter = ',', default_values_t = [2usize, 3, 4, 5])]
    pub m: Vec<usize>,

    /// Time schemes of the reduced model.
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [SchemeArg::Euler, SchemeArg::Bdf2])]
    pub scheme: Vec<SchemeArg>,

    #[arg(long, value_enum, default_value_t = StartArg::Project)]
    pub bdf2_start: StartArg,

    /// Trapezoid nodes of the continuous time norms.
    #[arg(long, default_value_t = DEFAULT_QUAD_POINTS)]
    pub quad: usize,

    /// Derivative order written to deriv_norms.csv.
    #[arg(long, default_value_t = 1)]
    pub deriv_order: usize,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum, default_value_t = TableArg::Nondegrade)]
    pub table: TableArg,

    #[command(flatten)]
    pub scenario: ScenarioArgs,

    #[command(flatten)]
    pub snapshots: SnapshotArgs,

    /// Time interval counts.
    #[arg(long, value_delimiter = ',', default_values_t = [64usize, 128, 256, 512])]
    pub grid: Vec<usize>,

    /// Retained modes.
    #[arg(long, default_value_t = 8)]
    pub r: usize,

    /// Interpolation orders of the factors table.
    #[arg(long, value_delimiter = ',', default_values_t = [2usize, 3, 4, 5])]
    pub m: Vec<usize>,

    /// Time schemes of the factors table.
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [SchemeArg::Euler, SchemeArg::Bdf2])]
    pub scheme: Vec<SchemeArg>,

    /// Trapezoid nodes of the continuous time norms.
    #[arg(long, default_value_t = DEFAULT_QUAD_POINTS)]
    pub quad: usize,
}
