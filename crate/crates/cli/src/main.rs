use std::path::PathBuf;
use std::process::ExitCode;

use basin_scope_core::koopman::IsostableMode;
use basin_scope_core::order::OrthantSignature;
use basin_scope_core::sampler::Strategy;
use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod setup;

use setup::CliError;

#[derive(Parser, Debug)]
#[command(name = "basin-scope", version, about = "Basins of attraction and isostables of monotone systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand.
#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Builtin system: toggle2d, nonmon3 or toxin_antitoxin.
    #[arg(long, conflicts_with = "config")]
    pub system: Option<String>,
    /// System description in TOML.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Parameter vector (comma separated) or the name of a config variant.
    #[arg(long, allow_hyphen_values = true)]
    pub params: Option<String>,
    /// State box as `lo:hi` per coordinate, comma separated.
    #[arg(long = "box", allow_hyphen_values = true)]
    pub bbox: Option<String>,
    /// State orthant signature, e.g. `+-` or `1,-1`.
    #[arg(long, allow_hyphen_values = true)]
    pub sigma_x: Option<OrthantSignature>,
    /// Parameter orthant signature.
    #[arg(long, allow_hyphen_values = true)]
    pub sigma_p: Option<OrthantSignature>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Oracle call or sample budget of the command.
    #[arg(long)]
    pub budget: Option<usize>,
    /// Worker threads; 1 gives reproducible output.
    #[arg(long, env = "BASIN_SCOPE_DEFAULT_THREADS")]
    pub threads: Option<usize>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct SamplerArgs {
    /// Which stable point to sample: `star` is reached from the lower order
    /// corner of the box, `bullet` from the upper one.
    #[arg(long, value_enum, default_value_t = Side::Star)]
    pub fixed_point: Side,
    #[arg(long, value_enum, default_value_t = StrategyArg::Hybrid)]
    pub strategy: StrategyArg,
    /// Stop once the undecided fraction falls to this value.
    #[arg(long, default_value_t = 0.02)]
    pub v_stop: f64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Star,
    Bullet,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum StrategyArg {
    Hybrid,
    LearningRate,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Hybrid => Strategy::Hybrid,
            StrategyArg::LearningRate => Strategy::LearningRate,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum ModeArg {
    Abs,
    Signed,
}

impl From<ModeArg> for IsostableMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Abs => IsostableMode::Abs,
            ModeArg::Signed => IsostableMode::Signed,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Locate fixed points from a seed grid and extra guesses.
    FixedPoints {
        #[command(flatten)]
        common: Common,
        /// Extra Newton starting point, comma separated; repeatable.
        #[arg(long = "guess", allow_hyphen_values = true)]
        guesses: Vec<String>,
        /// Seeds per axis of the box grid.
        #[arg(long, default_value_t = 3)]
        grid: usize,
    },
    /// Jacobian spectrum at given points, or at every fixed point found.
    Spectral {
        #[command(flatten)]
        common: Common,
        /// Point to analyse, comma separated; repeatable.
        #[arg(long = "at", allow_hyphen_values = true)]
        at: Vec<String>,
    },
    /// Sample the basin of attraction of a stable point.
    Basin {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sampler: SamplerArgs,
    },
    /// Sample the part of a basin below an isostable level.
    Isostable {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sampler: SamplerArgs,
        #[arg(long)]
        alpha: f64,
        /// `signed` tests s1 < alpha and stays increasing for every alpha.
        #[arg(long, value_enum, default_value_t = ModeArg::Signed)]
        mode: ModeArg,
    },
    /// Sample a basin with some state coordinates held fixed.
    CrossSection {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sampler: SamplerArgs,
        /// 1-based state indices to hold fixed.
        #[arg(long, value_delimiter = ',', required = true)]
        indices: Vec<usize>,
        /// Values of the fixed coordinates.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        values: Vec<f64>,
    },
    /// Count stable fixed points over a grid of two parameters.
    BistabilityMap {
        #[command(flatten)]
        common: Common,
        /// 1-based indices of the two scanned parameters.
        #[arg(long, value_delimiter = ',', required = true)]
        indices: Vec<usize>,
        /// First axis as `lo:hi:step`.
        #[arg(long, default_value = "0:4:0.25")]
        d1: String,
        /// Second axis as `lo:hi:step`.
        #[arg(long, default_value = "0:4:0.25")]
        d2: String,
        /// Box for Newton seeds as `lo:hi` per coordinate.
        #[arg(long)]
        seed_box: Option<String>,
        /// Newton seeds per axis of the seed box.
        #[arg(long, default_value_t = 5)]
        grid: usize,
        #[arg(long)]
        no_continuation: bool,
    },
    /// Check the bounding premises and basin containment for an ordered
    /// triple of systems or an ordered parameter interval.
    CompareBounds {
        #[command(flatten)]
        common: Common,
        /// Lower system parameters (vector or variant name).
        #[arg(long, allow_hyphen_values = true, requires_all = ["mid", "upper"], conflicts_with_all = ["p_min", "p_max"])]
        lower: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        mid: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        upper: Option<String>,
        /// Lower end of the parameter interval.
        #[arg(long, allow_hyphen_values = true, requires = "p_max")]
        p_min: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        p_max: Option<String>,
        /// Draw cap for the containment test.
        #[arg(long, default_value_t = 2000)]
        max_draws: usize,
    },
    /// Kamke-Muller sign check and optional flow-order test.
    CheckMonotone {
        #[command(flatten)]
        common: Common,
        /// Signature to test; repeatable. Defaults to the system's.
        #[arg(long = "signature", allow_hyphen_values = true)]
        signatures: Vec<OrthantSignature>,
        /// Test all 2^n signatures.
        #[arg(long, conflicts_with = "signatures")]
        all_signatures: bool,
        /// Parameter box lower end (vector or variant); enables parameter columns.
        #[arg(long, allow_hyphen_values = true, requires = "p_max")]
        p_min: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        p_max: Option<String>,
        /// Also integrate ordered pairs and check that order persists.
        #[arg(long)]
        flow: bool,
    },
    /// Parse the component expressions and cross-check against the native field.
    ParseCheck {
        #[command(flatten)]
        common: Common,
        /// Points per axis of the box grid used for the cross-check.
        #[arg(long, default_value_t = 5)]
        grid: usize,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::FixedPoints { common, guesses, grid } => commands::fixed_points(&common, &guesses, grid),
        Command::Spectral { common, at } => commands::spectral(&common, &at),
        Command::Basin { common, sampler } => commands::basin(&common, &sampler, None),
        Command::Isostable { common, sampler, alpha, mode } => {
            commands::basin(&common, &sampler, Some((alpha, mode.into())))
        }
        Command::CrossSection { common, sampler, indices, values } => {
            commands::cross_section(&common, &sampler, &indices, &values)
        }
        Command::BistabilityMap { common, indices, d1, d2, seed_box, grid, no_continuation } => {
            let scan = commands::ScanArgs { indices, d1, d2, seed_box, grid, continuation: !no_continuation };
            commands::bistability_map(&common, &scan)
        }
        Command::CompareBounds { common, lower, mid, upper, p_min, p_max, max_draws } => {
            let bounds = match (lower, mid, upper, p_min, p_max) {
                (Some(g), Some(f), Some(h), None, None) => commands::Bounds::Triple { g, f, h },
                (None, None, None, Some(lo), Some(hi)) => commands::Bounds::Interval { lo, hi },
                _ => return Err(CliError::Usage("give either --lower/--mid/--upper or --p-min/--p-max".into())),
            };
            commands::compare_bounds(&common, &bounds, max_draws)
        }
        Command::CheckMonotone { common, signatures, all_signatures, p_min, p_max, flow } => {
            let range = p_min.zip(p_max);
            commands::check_monotone(&common, &signatures, all_signatures, range, flow)
        }
        Command::ParseCheck { common, grid } => commands::parse_check(&common, grid),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
