//! Run configuration: a TOML file whose every field can be overridden from
//! the command line. The effective configuration is echoed into the output
//! directory by every subcommand.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use handicap_lab::bn::FitConfig;
use handicap_lab::ratings::{linspace_step, ParamGrid};
use handicap_lab::{InferenceMode, KRule, Market, Objective, OddsSource, RatingParams, SimConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Required by any command that samples.
    pub seed: Option<u64>,
    pub out: PathBuf,
    /// Worker threads; 0 lets the pool decide.
    pub jobs: usize,
    pub paths: Paths,
    pub ratings: RatingsConfig,
    pub bn: BnConfig,
    pub backtest: BacktestConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: None,
            out: PathBuf::from("out"),
            jobs: 0,
            paths: Paths::default(),
            ratings: RatingsConfig::default(),
            bn: BnConfig::default(),
            backtest: BacktestConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Raw season CSVs for `ingest`.
    pub matches: Vec<PathBuf>,
    pub possession: Option<PathBuf>,
    /// Where upstream artifacts are read from; defaults to the output dir.
    pub artifacts: Option<PathBuf>,
    /// Dataset artifact; defaults to `dataset.artifact` in the artifact dir.
    pub dataset: Option<PathBuf>,
    /// Predictions CSV for `backtest`, instead of the forecasts artifact.
    pub predictions: Option<PathBuf>,
}

/// `start..=stop` by `step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Range {
    fn values(&self) -> Vec<f64> {
        linspace_step(self.start, self.stop, self.step)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RatingsConfig {
    /// Grid-search λ, γ, k; when false the fixed values below are used.
    pub search: bool,
    pub lambda: f64,
    pub gamma: f64,
    pub k: u32,
    pub new_team_threshold: u32,
    pub k_rule: KRule,
    pub lambda_grid: Range,
    pub gamma_grid: Range,
    pub k_grid: Vec<u32>,
}

impl Default for RatingsConfig {
    fn default() -> Self {
        let p = RatingParams::default();
        Self {
            search: true,
            lambda: p.lambda,
            gamma: p.gamma,
            k: p.k,
            new_team_threshold: p.new_team_threshold,
            k_rule: p.k_rule,
            lambda_grid: Range { start: 0.001, stop: 0.1, step: 0.001 },
            gamma_grid: Range { start: 0.0, stop: 1.0, step: 0.05 },
            k_grid: (1..=10).collect(),
        }
    }
}

impl RatingsConfig {
    pub fn params(&self) -> RatingParams {
        RatingParams {
            lambda: self.lambda,
            gamma: self.gamma,
            k: self.k,
            new_team_threshold: self.new_team_threshold,
            k_rule: self.k_rule,
        }
    }

    pub fn grid(&self) -> ParamGrid {
        ParamGrid {
            lambdas: self.lambda_grid.values(),
            gammas: self.gamma_grid.values(),
            ks: self.k_grid.clone(),
            base: self.params(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BnConfig {
    pub n_samples: u64,
    pub mode: InferenceMode,
    pub leave_one_out: bool,
    pub smoothing: f64,
    pub minutes_per_match: f64,
}

impl Default for BnConfig {
    fn default() -> Self {
        let fit = FitConfig::default();
        Self {
            n_samples: 100_000,
            mode: InferenceMode::Hard,
            leave_one_out: true,
            smoothing: fit.smoothing,
            minutes_per_match: fit.minutes_per_match,
        }
    }
}

impl BnConfig {
    pub fn fit_config(&self) -> FitConfig {
        FitConfig { smoothing: self.smoothing, minutes_per_match: self.minutes_per_match }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
pub enum MarketName {
    #[serde(rename = "1x2")]
    #[value(name = "1x2")]
    OneXTwo,
    #[serde(rename = "ah")]
    #[value(name = "ah")]
    Ah,
}

impl MarketName {
    pub fn market(self) -> Market {
        match self {
            MarketName::OneXTwo => Market::OneXTwo,
            MarketName::Ah => Market::Ah,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            MarketName::OneXTwo => "1x2",
            MarketName::Ah => "ah",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SourceName {
    Avg,
    Max,
}

impl SourceName {
    pub fn source(self) -> OddsSource {
        match self {
            SourceName::Avg => OddsSource::Average,
            SourceName::Max => OddsSource::Maximum,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveName {
    Roi,
    Profit,
}

impl ObjectiveName {
    pub fn objective(self) -> Objective {
        match self {
            ObjectiveName::Roi => Objective::Roi,
            ObjectiveName::Profit => Objective::Profit,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ObjectiveName::Roi => "roi",
            ObjectiveName::Profit => "profit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BacktestConfig {
    pub markets: Vec<MarketName>,
    pub odds_sources: Vec<SourceName>,
    /// θ grid runs 0..=this many percent in 1% steps.
    pub theta_max_percent: u32,
    /// Run a single θ (fraction) instead of the sweep.
    pub theta: Option<f64>,
    pub objectives: Vec<ObjectiveName>,
    pub min_bets_season: usize,
    pub min_bets_static: usize,
    pub stake: f64,
    pub best_outcome_only: bool,
    pub discrepancy_decimals: Option<u32>,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        Self {
            markets: vec![MarketName::OneXTwo, MarketName::Ah],
            odds_sources: vec![SourceName::Avg, SourceName::Max],
            theta_max_percent: 25,
            theta: None,
            objectives: vec![ObjectiveName::Roi, ObjectiveName::Profit],
            min_bets_season: 30,
            min_bets_static: 100,
            stake: 1.0,
            best_outcome_only: false,
            discrepancy_decimals: None,
        }
    }
}

impl BacktestConfig {
    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            stake: self.stake,
            best_outcome_only: self.best_outcome_only,
            discrepancy_decimals: self.discrepancy_decimals,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn artifact_dir(&self) -> &Path {
        self.paths.artifacts.as_deref().unwrap_or(&self.out)
    }

    pub fn dataset_path(&self) -> PathBuf {
        self.paths.dataset.clone().unwrap_or_else(|| self.artifact_dir().join("dataset.artifact"))
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.seed.context("this command samples; set `seed` in the config or pass --seed")
    }

    /// Checks that do not depend on which subcommand runs.
    pub fn validate(&self) -> Result<()> {
        self.ratings.params().validate().context("invalid rating parameters")?;
        if self.bn.n_samples == 0 {
            bail!("bn.n_samples must be positive");
        }
        if !(self.bn.smoothing > 0.0) {
            bail!("bn.smoothing must be positive");
        }
        let b = &self.backtest;
        if let Some(t) = b.theta {
            if !(0.0..=1.0).contains(&t) {
                bail!("backtest.theta {t} is a fraction and must lie in [0, 1]");
            }
        }
        if b.theta_max_percent > 100 {
            bail!("backtest.theta_max_percent must be at most 100");
        }
        if !(b.stake > 0.0) {
            bail!("backtest.stake must be positive");
        }
        if b.markets.is_empty() || b.odds_sources.is_empty() {
            bail!("backtest needs at least one market and one odds source");
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }
}

/// Fails unless every path exists.
pub fn require_paths<'a>(paths: impl IntoIterator<Item = &'a Path>) -> Result<()> {
    for p in paths {
        if !p.exists() {
            bail!("missing input {}", p.display());
        }
    }
    Ok(())
}
