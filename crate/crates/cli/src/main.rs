use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod error;
mod predictions;

use error::CliError;

/// Environment variable holding the default worker thread count.
pub const THREADS_ENV: &str = "AIR_FORGE_THREADS";

#[derive(Parser, Debug)]
#[command(name = "air-forge", version, about = "Retarget room impulse responses and build labelled reverberant-speech datasets")]
struct Cli {
    /// Worker threads; overrides the config file's `threads`.
    #[arg(long, global = true, env = THREADS_ENV)]
    threads: Option<usize>,

    /// Log filter (error, warn, info, debug, trace).
    #[arg(long, global = true)]
    log_level: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Measure fullband T60 and DRR of an impulse response.
    Analyze(AnalyzeArgs),
    /// Retarget the T60 and/or DRR of an impulse response.
    #[command(allow_negative_numbers = true)]
    Augment(AugmentArgs),
    /// Build a dataset from a pipeline config.
    GenDataset(GenDatasetArgs),
    /// Regenerate one manifest row from its recipe.
    Mix(MixArgs),
    /// Measure a signal level.
    Level(LevelArgs),
    /// Score predictions against manifest labels.
    Eval(EvalArgs),
    /// Fit a linear calibration from predictions to manifest labels.
    Calibrate(CalibrateArgs),
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    pub input: PathBuf,
    /// Calibration JSON: `{"t60": {...}, "drr": {...}}` or a dataset header.json.
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct AugmentArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Target T60 in seconds.
    #[arg(long)]
    pub t60: Option<f64>,
    /// Target DRR in dB.
    #[arg(long)]
    pub drr: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the augmentation report here as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GenDatasetArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct MixArgs {
    /// Dataset directory holding header.json and manifest.jsonl.
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub row: usize,
    /// Write the regenerated mixture here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum MethodArg {
    P56,
    Rms,
    Lufs,
}

#[derive(Args, Debug)]
pub struct LevelArgs {
    #[arg(long, value_enum)]
    pub method: MethodArg,
    pub input: PathBuf,
    #[arg(long)]
    pub json: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Param {
    T60,
    Drr,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum FormatArg {
    Text,
    Json,
    Csv,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// CSV with a `row` or `mixture` column and a `prediction` (or `t60`/`drr`) column.
    #[arg(long)]
    pub pred: PathBuf,
    /// manifest.jsonl, or the dataset directory containing it.
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, value_enum)]
    pub param: Param,
    #[arg(long, value_enum, default_value = "text")]
    pub format: FormatArg,
    /// Name shown in the report.
    #[arg(long, default_value = "estimator")]
    pub method: String,
}

#[derive(Args, Debug)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, value_enum)]
    pub param: Param,
    /// Calibration file to create or update; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn init_logging(filter: Option<&str>) {
    env_logger::Builder::new()
        .parse_filters(filter.unwrap_or("warn"))
        .format(|buf, record| {
            writeln!(
                buf,
                "ts={} level={} target={} {}",
                buf.timestamp_millis(),
                record.level().as_str().to_lowercase(),
                record.target(),
                record.args()
            )
        })
        .target(env_logger::Target::Stderr)
        .init();
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    // peek at --log-level before clap runs so usage errors are logged too
    let early_level = argv
        .windows(2)
        .find(|w| w[0] == "--log-level")
        .map(|w| w[1].clone());
    init_logging(early_level.as_deref());

    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                log::error!("code=2 kind=usage msg={:?}", e.kind().to_string());
            }
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = e.exit_code();
            log::error!("code={code} kind={} msg={:?}", e.kind(), e.to_string());
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    let mut out = std::io::stdout().lock();
    let text = match cli.command {
        Command::Analyze(a) => commands::analyze(&a)?,
        Command::Augment(a) => commands::augment(&a)?,
        Command::GenDataset(a) => commands::gen_dataset(&a, cli.threads, cli.log_level.is_some())?,
        Command::Mix(a) => commands::mix(&a)?,
        Command::Level(a) => commands::level(&a)?,
        Command::Eval(a) => commands::eval(&a)?,
        Command::Calibrate(a) => commands::calibrate(&a)?,
    };
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| CliError::Data(format!("stdout: {e}")))
}
