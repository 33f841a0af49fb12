use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "decoy-synth",
    version,
    about = "Decoy allocation and attack-action cost synthesis"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and validate an instance file and print a summary.
    Validate(ValidateArgs),
    /// Run one scenario on an instance.
    Solve(SolveArgs),
    /// Evaluate a saved strategy against a hard-rational attacker.
    Evaluate(EvaluateArgs),
    /// Write a gridworld, random or shipped instance file.
    Generate(GenerateArgs),
    /// Time full synthesis across grid sizes.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub instance: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// No allocation; decoys are plain states.
    NoDecoy,
    /// Decoy rewards only; modifiable actions are ignored.
    Decoy,
    /// Decoy rewards and action modifications.
    DecoyAction,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::NoDecoy => "no-decoy",
            Mode::Decoy => "decoy",
            Mode::DecoyAction => "decoy-action",
        }
    }
}

/// Overrides shared by every command that runs synthesis.
#[derive(Debug, Clone, Default, Args)]
pub struct SynthFlags {
    /// Decoy budget `h`, replacing the instance's.
    #[arg(long)]
    pub budget: Option<f64>,
    /// Discount factor, replacing the instance's.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Policy-improvement temperature.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Attacker (soft best response) temperature.
    #[arg(long)]
    pub tau2: Option<f64>,
    /// Barrier weight `t` [default: 1000].
    #[arg(long = "barrier-t")]
    pub barrier_t: Option<f64>,
    /// Outer stopping threshold on the change in defender value.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Outer iteration cap per restart.
    #[arg(long = "max-iters")]
    pub max_iters: Option<usize>,
    /// Run restarts one after another instead of in parallel.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub instance: PathBuf,
    #[arg(long, value_enum, default_value = "decoy-action")]
    pub mode: Mode,
    #[command(flatten)]
    pub flags: SynthFlags,
    /// Directory for the report, strategy, per-restart traces and manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the best restart's trace here.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Record wall-clock milliseconds in traces (they are zero otherwise).
    #[arg(long = "trace-timing")]
    pub trace_timing: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    pub instance: PathBuf,
    pub strategy: PathBuf,
    /// Budget the strategy must respect, replacing the instance's.
    #[arg(long)]
    pub budget: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Also write the report to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(subcommand)]
    pub kind: GenerateKind,
}

#[derive(Debug, Subcommand)]
pub enum GenerateKind {
    /// Gridworld with compass actions and lateral slips.
    Gridworld(GridArgs),
    /// Random attack graph.
    Random(RandomArgs),
    /// Gridworld with a seeded random layout.
    RandomGrid(RandomGridArgs),
    /// One of the shipped instances.
    Fixture(FixtureArgs),
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long)]
    pub rows: usize,
    #[arg(long)]
    pub cols: usize,
    /// Slip probability to each lateral neighbour.
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.95)]
    pub gamma: f64,
    /// Start cell `r,c`.
    #[arg(long, default_value = "0,0")]
    pub init: String,
    /// Target cell `r,c` or `r,c=reward` (reward 1 if omitted); repeatable.
    #[arg(long = "target", required = true)]
    pub targets: Vec<String>,
    /// Sensor cell `r,c`; repeatable.
    #[arg(long = "sensor")]
    pub sensors: Vec<String>,
    /// Decoy candidate cell `r,c`; repeatable.
    #[arg(long = "decoy")]
    pub decoys: Vec<String>,
    /// Modifiable move `r,c:DIR` with DIR one of N, S, E, W; repeatable.
    #[arg(long = "modifiable")]
    pub modifiable: Vec<String>,
    #[arg(long, default_value_t = 0.0)]
    pub budget: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RandomArgs {
    /// State count including the sink.
    #[arg(long)]
    pub states: usize,
    #[arg(long, default_value_t = 3)]
    pub actions: usize,
    #[arg(long, default_value_t = 3)]
    pub branching: usize,
    #[arg(long, default_value_t = 2)]
    pub decoys: usize,
    #[arg(long, default_value_t = 1)]
    pub targets: usize,
    #[arg(long, default_value_t = 0.95)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RandomGridArgs {
    #[arg(long)]
    pub rows: usize,
    #[arg(long)]
    pub cols: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FixtureArgs {
    /// fig1, grid6, grid6_alt, grid10 or decoy_on_only_path.
    pub name: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Grid side lengths. Sizes 6 and 10 use the shipped analogs, other
    /// sizes a seeded random layout.
    #[arg(long, value_delimiter = ',', default_value = "6,10")]
    pub sizes: Vec<usize>,
    #[command(flatten)]
    pub flags: SynthFlags,
    /// Also write the table to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
