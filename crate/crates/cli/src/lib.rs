//! Command-line front end: synthesise panels, fit the feature mixture, run
//! the walk-forward backtest and rebuild reports from records.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand};
use serde::Serialize;

use drift_fx::backtest::{
    build_report, cumulative, fit_features, read_records, run, write_records, AgentSummary, BacktestConfig,
    FitSummary, PerformanceReport, Strategy,
};
use drift_fx::marketdata::{load_panel_dir, synth_panel, MarketPanel, SynthConfig};
use drift_fx::mixture::MixtureModel;

/// Environment variable holding the log filter, e.g. `info` or `drift_fx=debug`.
pub const LOG_ENV: &str = "DRIFT_FX_LOG";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Engine(#[from] drift_fx::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use drift_fx::Error as E;
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Engine(e) => match e.root() {
                E::Config(_) => EXIT_USAGE,
                E::Numeric(_) | E::Domain(_) => EXIT_NUMERIC,
                _ => EXIT_DATA,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "drift-fx", version, about = "Sequential-learning FX trading backtester")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic quote panel.
    Synth(SynthArgs),
    /// Fit the feature mixture on the training window and save it.
    FitFeatures(FitArgs),
    /// Run the walk-forward backtest.
    Backtest(BacktestArgs),
    /// Rebuild the performance report from a records file.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["config", "demo"])))]
pub struct SynthArgs {
    /// Generator configuration (JSON).
    #[arg(long, value_name = "PATH", visible_alias = "synth-config")]
    pub config: Option<PathBuf>,
    /// Use the built-in demo universe with this many instruments.
    #[arg(long, value_name = "N")]
    pub demo: Option<usize>,
    /// Number of business days for the demo universe.
    #[arg(long, default_value_t = 2840, requires = "demo")]
    pub days: usize,
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Experiment settings shared by `fit-features` and `backtest`. Flags
/// override values from `--config`.
#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long, value_name = "DIR")]
    pub data_dir: PathBuf,
    /// Backtest configuration (JSON); omitted fields take their defaults.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    /// Training length in dates, overriding the fraction.
    #[arg(long)]
    pub train_size: Option<usize>,
    #[arg(long)]
    pub k_min: Option<usize>,
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Exponential decay of the online learners.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Ridge penalty of the online learners.
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct BacktestArgs {
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
    /// Previously fitted mixture; fitted on the training window if absent.
    #[arg(long, value_name = "PATH")]
    pub mixture: Option<PathBuf>,
    #[arg(long)]
    pub no_costs: bool,
    #[arg(long)]
    pub no_carry: bool,
    /// Comma-separated subset of drl, mom, carry.
    #[arg(long, value_delimiter = ',', value_parser = parse_strategy)]
    pub strategies: Option<Vec<Strategy>>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Records CSV written by `backtest`.
    pub records: PathBuf,
    /// Also write report.json and report.txt here.
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse().map_err(|e: drift_fx::Error| e.to_string())
}

pub const RECORDS_FILE: &str = "records.csv";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TXT: &str = "report.txt";
pub const AGENTS_FILE: &str = "agents.json";
pub const MIXTURE_FILE: &str = "mixture.json";
pub const MANIFEST_FILE: &str = "manifest.json";

fn io_err(path: &Path, source: std::io::Error) -> CliError {
    drift_fx::Error::Io {
        path: path.to_path_buf(),
        source,
    }
    .into()
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(drift_fx::Error::from)?;
    s.push('\n');
    Ok(s)
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    seed: u64,
    n_days: usize,
    instruments: Vec<&'a str>,
    files: Vec<String>,
    config: &'a SynthConfig,
}

pub fn cmd_synth(args: &SynthArgs, out: &mut dyn Write) -> CliResult<()> {
    let config = match (&args.config, args.demo) {
        (Some(path), _) => serde_json::from_str::<SynthConfig>(&read_text(path)?)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?,
        (None, Some(n)) => SynthConfig::demo(n, args.days)?,
        (None, None) => return Err(CliError::Usage("either --config or --demo is required".into())),
    };
    let panel = synth_panel(&config, args.seed)?;
    let written = panel.write_dir(&args.out_dir)?;
    let manifest = Manifest {
        seed: args.seed,
        n_days: panel.len(),
        instruments: panel.instruments().iter().map(|i| i.symbol.as_str()).collect(),
        files: written
            .iter()
            .filter_map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()))
            .collect(),
        config: &config,
    };
    write_text(&args.out_dir.join(MANIFEST_FILE), &to_json(&manifest)?)?;
    writeln!(
        out,
        "wrote {} instruments x {} dates to {}",
        panel.n_instruments(),
        panel.len(),
        args.out_dir.display()
    )
    .map_err(|e| io_err(&args.out_dir, e))?;
    Ok(())
}

fn experiment_config(args: &ExperimentArgs) -> CliResult<BacktestConfig> {
    let mut cfg = match &args.config {
        Some(path) => serde_json::from_str::<BacktestConfig>(&read_text(path)?)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?,
        None => BacktestConfig::default(),
    };
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.train_fraction {
        cfg.train_fraction = v;
    }
    if args.train_size.is_some() {
        cfg.train_size = args.train_size;
    }
    if let Some(v) = args.k_min {
        cfg.hyper.k_min = v;
    }
    if let Some(v) = args.k_max {
        cfg.hyper.k_max = v;
    }
    if let Some(v) = args.tau {
        cfg.hyper.decay = v;
    }
    if let Some(v) = args.alpha {
        cfg.hyper.ridge = v;
    }
    Ok(cfg)
}

fn load(args: &ExperimentArgs) -> CliResult<MarketPanel> {
    let panel = load_panel_dir(&args.data_dir)?;
    log::info!(
        "loaded {} instruments x {} dates from {}",
        panel.n_instruments(),
        panel.len(),
        args.data_dir.display()
    );
    Ok(panel)
}

pub fn cmd_fit_features(args: &FitArgs, out: &mut dyn Write) -> CliResult<FitSummary> {
    let cfg = experiment_config(&args.experiment)?;
    let panel = load(&args.experiment)?;
    let (model, summary) = fit_features(&panel, &cfg)?;
    create_dir(&args.out_dir)?;
    let path = args.out_dir.join(MIXTURE_FILE);
    model.save(&path)?;
    writeln!(out, "k={} message_length={}", summary.k, summary.message_length).map_err(|e| io_err(&path, e))?;
    Ok(summary)
}

#[derive(Debug, Serialize)]
struct AgentsFile<'a> {
    train_len: usize,
    fit: &'a Option<FitSummary>,
    agents: &'a [AgentSummary],
}

pub fn cumulative_file(strategy: Strategy) -> String {
    format!("cumulative_{strategy}.csv")
}

pub fn cmd_backtest(args: &BacktestArgs, out: &mut dyn Write) -> CliResult<PerformanceReport> {
    let mut cfg = experiment_config(&args.experiment)?;
    if args.no_costs {
        cfg.costs_enabled = false;
    }
    if args.no_carry {
        cfg.carry_enabled = false;
    }
    if let Some(s) = &args.strategies {
        cfg.strategies = s.clone();
    }
    let mixture = args.mixture.as_deref().map(MixtureModel::load).transpose()?;
    let panel = load(&args.experiment)?;
    let output = run(&panel, &cfg, mixture.as_ref())?;

    let dir = &args.out_dir;
    create_dir(dir)?;
    let records_path = dir.join(RECORDS_FILE);
    let file = File::create(&records_path).map_err(|e| io_err(&records_path, e))?;
    write_records(BufWriter::new(file), &output.records)?;
    write_text(&dir.join(REPORT_JSON), &(output.report.to_json()? + "\n"))?;
    let table = output.report.render();
    write_text(&dir.join(REPORT_TXT), &table)?;
    for (strategy, series) in cumulative(&output.records)? {
        let mut text = String::from("date,cumulative_net\n");
        for (date, v) in series {
            text.push_str(&format!("{date},{v}\n"));
        }
        write_text(&dir.join(cumulative_file(strategy)), &text)?;
    }
    let agents = AgentsFile {
        train_len: output.train_len,
        fit: &output.fit,
        agents: &output.agents,
    };
    write_text(&dir.join(AGENTS_FILE), &to_json(&agents)?)?;
    if let Some(m) = &output.mixture {
        if output.fit.is_some() {
            m.save(&dir.join(MIXTURE_FILE))?;
        }
    }
    write!(out, "{table}").map_err(|e| io_err(dir, e))?;
    Ok(output.report)
}

pub fn cmd_report(args: &ReportArgs, out: &mut dyn Write) -> CliResult<PerformanceReport> {
    let file = File::open(&args.records).map_err(|e| io_err(&args.records, e))?;
    let records = read_records(BufReader::new(file), &args.records)?;
    let report = build_report(&records)?;
    let table = report.render();
    if let Some(dir) = &args.out_dir {
        create_dir(dir)?;
        write_text(&dir.join(REPORT_JSON), &(report.to_json()? + "\n"))?;
        write_text(&dir.join(REPORT_TXT), &table)?;
    }
    write!(out, "{table}").map_err(|e| io_err(&args.records, e))?;
    Ok(report)
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> CliResult<()> {
    match &cli.command {
        Command::Synth(a) => cmd_synth(a, out),
        Command::FitFeatures(a) => cmd_fit_features(a, out).map(drop),
        Command::Backtest(a) => cmd_backtest(a, out).map(drop),
        Command::Report(a) => cmd_report(a, out).map(drop),
    }
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or(LOG_ENV, "warn");
    let _ = env_logger::Builder::from_env(env).try_init();
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Usage errors print clap's message.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    init_logging();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match execute(&cli, &mut lock) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
