//! Asian handicap forecasting and betting research toolkit.
//!
//! Pipeline: [`ingest`] match data, learn team strength with [`ratings`],
//! turn rating differences into goal-difference forecasts with [`bn`],
//! score them with [`metrics`] and bet on them with [`backtest`]. Settlement
//! of handicap lines lives in [`ah`]; [`synthetic`] generates leagues with
//! known strengths for testing.

pub mod ah;
pub mod backtest;
pub mod bn;
pub mod ingest;
pub mod metrics;
pub mod pmf;
pub mod ratings;
pub mod synthetic;

pub use ah::{AhError, AhQuote, HandicapLine, LineKind, Side};
pub use backtest::{BacktestError, BacktestReport, MatchPrediction, Objective, SimConfig};
pub use bn::{BnError, BnParameters, FitConfig, ForecastConfig, ForecastSet, InferenceMode, MatchForecast};
pub use ingest::{
    load_artifact, save_artifact, Artifact, ArtifactError, Dataset, IngestError, MatchRecord,
    Odds1x2, OddsSource,
};
pub use metrics::{Market, MetricsError, Outcome1x2};
pub use pmf::GdPmf;
pub use ratings::{KRule, RatingBook, RatingError, RatingParams, TraceEntry};
