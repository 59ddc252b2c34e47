use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use handicap_lab::InferenceMode;

mod commands;
mod config;

use config::{MarketName, ObjectiveName, RunConfig, SourceName};

#[derive(Debug, Parser)]
#[command(name = "handicap-lab", version, about = "Rating, forecasting and betting backtests for football leagues")]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (also the default artifact directory).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for parallel stages.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Directory holding upstream artifacts, if not the output directory.
    #[arg(long, global = true)]
    artifacts: Option<PathBuf>,
    /// Dataset artifact to read.
    #[arg(long, global = true)]
    dataset: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse season CSVs and the possession sidecar into a dataset artifact.
    Ingest(IngestArgs),
    /// Grid-search rating parameters and write the error surface.
    FitRatings(RatingsArgs),
    /// Fit network parameters per rating-difference level.
    FitBn,
    /// Forecast every eligible match.
    Forecast(ForecastArgs),
    /// Simulate threshold betting and optimize θ.
    Backtest(BacktestArgs),
    /// Accuracy table, mean AH odds and stake matching.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct IngestArgs {
    /// Season CSV files.
    #[arg(long, num_args = 1..)]
    matches: Vec<PathBuf>,
    /// Possession sidecar CSV.
    #[arg(long)]
    possession: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RatingsArgs {
    /// Skip the search and use the configured λ, γ, k.
    #[arg(long)]
    no_search: bool,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    k: Option<u32>,
}

#[derive(Debug, Args)]
struct ForecastArgs {
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Forecast with parameters fitted on every match, including the one forecast.
    #[arg(long)]
    no_loocv: bool,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum ModeArg {
    Hard,
    Soft,
}

#[derive(Debug, Args)]
struct BacktestArgs {
    /// Predictions CSV to use instead of the forecasts artifact.
    #[arg(long)]
    predictions: Option<PathBuf>,
    #[arg(long, value_enum, num_args = 1..)]
    market: Vec<MarketName>,
    #[arg(long, value_enum, num_args = 1..)]
    odds: Vec<SourceName>,
    #[arg(long, value_enum, num_args = 1..)]
    objective: Vec<ObjectiveName>,
    /// Single threshold as a fraction, e.g. 0.10; omit to sweep.
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    theta_max_percent: Option<u32>,
    #[arg(long)]
    stake: Option<f64>,
    #[arg(long)]
    best_outcome_only: bool,
    /// Round discrepancies to this many decimals before thresholding.
    #[arg(long)]
    discrepancy_decimals: Option<u32>,
    #[arg(long)]
    min_bets_season: Option<usize>,
    #[arg(long)]
    min_bets_static: Option<usize>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Score only seasons that have possession data.
    #[arg(long)]
    possession_seasons_only: bool,
}

impl Cli {
    fn effective_config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = Some(s);
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        if let Some(j) = self.jobs {
            cfg.jobs = j;
        }
        if let Some(a) = &self.artifacts {
            cfg.paths.artifacts = Some(a.clone());
        }
        if let Some(d) = &self.dataset {
            cfg.paths.dataset = Some(d.clone());
        }
        match &self.command {
            Command::Ingest(a) => {
                if !a.matches.is_empty() {
                    cfg.paths.matches = a.matches.clone();
                }
                if a.possession.is_some() {
                    cfg.paths.possession = a.possession.clone();
                }
            }
            Command::FitRatings(a) => {
                let r = &mut cfg.ratings;
                r.search &= !a.no_search;
                r.lambda = a.lambda.unwrap_or(r.lambda);
                r.gamma = a.gamma.unwrap_or(r.gamma);
                r.k = a.k.unwrap_or(r.k);
            }
            Command::FitBn => {}
            Command::Forecast(a) => {
                let b = &mut cfg.bn;
                b.n_samples = a.samples.unwrap_or(b.n_samples);
                if let Some(m) = a.mode {
                    b.mode = match m {
                        ModeArg::Hard => InferenceMode::Hard,
                        ModeArg::Soft => InferenceMode::Soft,
                    };
                }
                b.leave_one_out &= !a.no_loocv;
            }
            Command::Backtest(a) => {
                if a.predictions.is_some() {
                    cfg.paths.predictions = a.predictions.clone();
                }
                let b = &mut cfg.backtest;
                if !a.market.is_empty() {
                    b.markets = a.market.clone();
                }
                if !a.odds.is_empty() {
                    b.odds_sources = a.odds.clone();
                }
                if !a.objective.is_empty() {
                    b.objectives = a.objective.clone();
                }
                if a.theta.is_some() {
                    b.theta = a.theta;
                }
                b.theta_max_percent = a.theta_max_percent.unwrap_or(b.theta_max_percent);
                b.stake = a.stake.unwrap_or(b.stake);
                b.best_outcome_only |= a.best_outcome_only;
                if a.discrepancy_decimals.is_some() {
                    b.discrepancy_decimals = a.discrepancy_decimals;
                }
                b.min_bets_season = a.min_bets_season.unwrap_or(b.min_bets_season);
                b.min_bets_static = a.min_bets_static.unwrap_or(b.min_bets_static);
            }
            Command::Report(_) => {}
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = cli.effective_config()?;
    if cfg.jobs > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(cfg.jobs).build_global()?;
    }
    std::fs::create_dir_all(&cfg.out)?;
    let name = match &cli.command {
        Command::Ingest(_) => "ingest",
        Command::FitRatings(_) => "fit-ratings",
        Command::FitBn => "fit-bn",
        Command::Forecast(_) => "forecast",
        Command::Backtest(_) => "backtest",
        Command::Report(_) => "report",
    };
    std::fs::write(cfg.out.join(format!("config.{name}.toml")), cfg.to_toml()?)?;
    match &cli.command {
        Command::Ingest(_) => commands::ingest(&cfg),
        Command::FitRatings(_) => commands::fit_ratings(&cfg),
        Command::FitBn => commands::fit_bn(&cfg),
        Command::Forecast(_) => commands::forecast(&cfg),
        Command::Backtest(_) => commands::backtest(&cfg),
        Command::Report(a) => commands::report(&cfg, a.possession_seasons_only),
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .with_ansi(std::io::IsTerminal::is_terminal(&std::io::stderr()))
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
