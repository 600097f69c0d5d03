mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use wlkit::parallel::WORKERS_ENV;
use wlkit::range_image::{ReturnIndex, SensorId};

/// Lossless LiDAR range-image compression and motion-forecasting evaluation.
#[derive(Debug, Parser)]
#[command(name = "wlkit", version)]
struct Cli {
    /// Worker threads (0 = number of processors).
    #[arg(long, global = true, env = WORKERS_ENV, default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compress a directory of raw `.wlrr` frames into an archive.
    Compress {
        input_dir: PathBuf,
        output: PathBuf,
        #[command(flatten)]
        profile: ProfileArg,
    },
    /// Expand an archive into raw `.wlrr` frames.
    Decompress {
        archive: PathBuf,
        output_dir: PathBuf,
        #[command(flatten)]
        profile: ProfileArg,
        /// Also write a world-frame point cloud per frame.
        #[arg(long)]
        points: bool,
        #[arg(long, value_enum, default_value_t = PointFormat::Binary)]
        format: PointFormat,
    },
    /// Print header and section sizes of an archive, frame or raw frame.
    Inspect { file: PathBuf },
    /// Print size accounting for an archive.
    Stats { archive: PathBuf },
    /// Generate a deterministic synthetic corpus.
    Gen(GenArgs),
    /// Evaluate predictions against a scenario corpus.
    Eval {
        scenarios: PathBuf,
        predictions: PathBuf,
        #[arg(long)]
        thresholds: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ReportFormat::Summary)]
        output: ReportFormat,
        /// Row label in the summary table.
        #[arg(long, default_value = "predictions")]
        model: String,
    },
}

#[derive(Debug, Args)]
struct ProfileArg {
    /// TOML file with quantization steps and inclination overrides.
    #[arg(long)]
    profile: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: GenKind,
    /// Frames or scenarios to generate.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    count: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for frames, output file for scenes.
    output: PathBuf,
    /// Frames: sensor geometry.
    #[arg(long, value_parser = parse_sensor, default_value = "top")]
    sensor: SensorId,
    /// Frames: return index.
    #[arg(long = "return", value_enum, default_value_t = ReturnArg::First)]
    return_index: ReturnArg,
    /// Frames: constant-valued frames instead of street scenes.
    #[arg(long)]
    constant: bool,
    /// Scenes: agents per scenario.
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..))]
    agents: u64,
    /// Scenes: also write baseline predictions to this file.
    #[arg(long)]
    predictions: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Predictor::ConstantVelocity)]
    predictor: Predictor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PointFormat {
    Binary,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Summary,
    Table,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GenKind {
    Frames,
    Scenes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReturnArg {
    First,
    Second,
}

impl From<ReturnArg> for ReturnIndex {
    fn from(r: ReturnArg) -> Self {
        match r {
            ReturnArg::First => ReturnIndex::First,
            ReturnArg::Second => ReturnIndex::Second,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Predictor {
    Oracle,
    ConstantVelocity,
}

fn parse_sensor(s: &str) -> Result<SensorId, String> {
    SensorId::ALL
        .into_iter()
        .find(|id| id.name() == s)
        .ok_or_else(|| {
            let names: Vec<_> = SensorId::ALL.iter().map(|id| id.name()).collect();
            format!("unknown sensor `{s}`, expected one of {}", names.join(", "))
        })
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<std::io::Error>()
            .is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
    })
}

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_DATA)
        }
    }
}
