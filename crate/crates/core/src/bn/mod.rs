//! Beta-Binomial goal-difference network.
//!
//! Each match is a chain: home possession `P` splits 90 minutes between the
//! sides, each minute may produce a shot, each shot may be on target, and each
//! shot on target may be a goal. Every rate is a Beta whose parameters are
//! pooled counts from past matches in the same rating difference level.

mod forecast;
mod rdl;

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ah::Side;
use crate::ingest::{Artifact, Dataset, MatchRecord};
use crate::ratings::TraceEntry;

pub use forecast::{
    enumerate_forecast, forecast, forecast_chain, forecast_matches, forecast_with_mode,
    match_seed, soft_rdl_posterior, ChainParams, EnumeratedForecast, ForecastConfig, ForecastSet,
    InferenceMode, MatchForecast, NodeDist, PointChain, PointSide, SideChain,
};
pub use rdl::{assign_rdl, RdlLevel, RdlTable, RDL_LEVELS, RDL_WIDTH};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BnError {
    #[error("trace has {trace} entries for {matches} matches")]
    TraceLength { trace: usize, matches: usize },
    #[error("trace entry {index} is for {found}, expected {expected}")]
    TraceMismatch {
        index: usize,
        expected: String,
        found: String,
    },
    #[error("level {level} has no supporting matches and no smoothing")]
    EmptyLevel { level: usize },
    #[error("invalid {node} parameters ({a}, {b})")]
    InvalidBeta { node: &'static str, a: f64, b: f64 },
    #[error("n_samples must be at least 1")]
    NoSamples,
    #[error("probability {0} outside [0, 1]")]
    Probability(f64),
    #[error("no level has a fitted rating difference distribution")]
    NoGaussian,
    #[error(transparent)]
    Ah(#[from] crate::ah::AhError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaParams {
    pub a: f64,
    pub b: f64,
}

impl BetaParams {
    pub fn new(a: f64, b: f64) -> Self {
        Self { a, b }
    }

    pub fn mean(&self) -> f64 {
        self.a / (self.a + self.b)
    }

    pub fn is_valid(&self) -> bool {
        self.a > 0.0 && self.b > 0.0 && self.a.is_finite() && self.b.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub mean: f64,
    pub variance: f64,
}

impl Gaussian {
    pub fn ln_pdf(&self, x: f64) -> f64 {
        let d = x - self.mean;
        -0.5 * (2.0 * std::f64::consts::PI * self.variance).ln() - d * d / (2.0 * self.variance)
    }
}

/// One side's parameters for one level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelParams {
    /// Minutes in possession against minutes without.
    pub possession: BetaParams,
    /// Shots against non-shot minutes.
    pub shot_rate: BetaParams,
    /// On-target against off-target shots.
    pub on_target: BetaParams,
    /// Goals against saved shots on target.
    pub conversion: BetaParams,
    pub rd_gaussian: Option<Gaussian>,
    pub support: usize,
    /// No supporting matches; parameters are smoothing only.
    pub prior_only: bool,
    /// Mean goal difference from this side's view over the supporting matches.
    pub observed_mean_gd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideParams {
    pub levels: Vec<LevelParams>,
}

impl SideParams {
    pub fn level(&self, level: usize) -> &LevelParams {
        &self.levels[level - 1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Added to every Beta parameter.
    pub smoothing: f64,
    pub minutes_per_match: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            smoothing: 0.5,
            minutes_per_match: 90.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BnParameters {
    pub rdl: RdlTable,
    pub home: SideParams,
    pub away: SideParams,
    pub fit_config: FitConfig,
}

impl Artifact for BnParameters {
    const KIND: &'static str = "bn-params";
}

impl BnParameters {
    pub fn side(&self, side: Side) -> &SideParams {
        match side {
            Side::Home => &self.home,
            Side::Away => &self.away,
        }
    }

    /// Chain for one level, rejecting unusable Betas.
    pub fn chain(&self, level: usize) -> Result<ChainParams, BnError> {
        let h = self.home.level(level);
        let a = self.away.level(level);
        if h.prior_only && self.fit_config.smoothing <= 0.0 {
            return Err(BnError::EmptyLevel { level });
        }
        let side = |p: &LevelParams| -> Result<SideChain, BnError> {
            Ok(SideChain {
                shot_rate: NodeDist::beta("shot_rate", p.shot_rate)?,
                on_target: NodeDist::beta("on_target", p.on_target)?,
                conversion: NodeDist::beta("conversion", p.conversion)?,
            })
        };
        Ok(ChainParams {
            possession: NodeDist::beta("possession", h.possession)?,
            minutes: self.fit_config.minutes_per_match.round() as u32,
            home: side(h)?,
            away: side(a)?,
        })
    }

    /// One row per level and side:
    /// `level,side,lower,upper,support,prior_only,a_p,b_p,a_sm,b_sm,a_st,b_st,a_g,b_g,rd_mean,rd_var,observed_mean_gd`.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "level", "side", "lower", "upper", "support", "prior_only", "a_p", "b_p", "a_sm",
            "b_sm", "a_st", "b_st", "a_g", "b_g", "rd_mean", "rd_var", "observed_mean_gd",
        ])?;
        for lv in &self.rdl.levels {
            for side in [Side::Home, Side::Away] {
                let p = self.side(side).level(lv.level);
                w.write_record([
                    lv.level.to_string(),
                    side.to_string(),
                    opt(lv.lower),
                    opt(lv.upper),
                    p.support.to_string(),
                    p.prior_only.to_string(),
                    p.possession.a.to_string(),
                    p.possession.b.to_string(),
                    p.shot_rate.a.to_string(),
                    p.shot_rate.b.to_string(),
                    p.on_target.a.to_string(),
                    p.on_target.b.to_string(),
                    p.conversion.a.to_string(),
                    p.conversion.b.to_string(),
                    opt(p.rd_gaussian.map(|g| g.mean)),
                    opt(p.rd_gaussian.map(|g| g.variance)),
                    opt(p.observed_mean_gd),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Raw (unsmoothed) Beta parameters for one side of one level.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SideSums {
    pub a_p: f64,
    pub b_p: f64,
    pub a_sm: f64,
    pub b_sm: f64,
    pub a_st: f64,
    pub b_st: f64,
    pub a_g: f64,
    pub b_g: f64,
    pub gd: f64,
}

impl SideSums {
    fn add(&mut self, o: &SideSums, sign: f64) {
        self.a_p += sign * o.a_p;
        self.b_p += sign * o.b_p;
        self.a_sm += sign * o.a_sm;
        self.b_sm += sign * o.b_sm;
        self.a_st += sign * o.a_st;
        self.b_st += sign * o.b_st;
        self.a_g += sign * o.a_g;
        self.b_g += sign * o.b_g;
        self.gd += sign * o.gd;
    }
}

/// Sufficient statistics for one level.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LevelSums {
    pub n: usize,
    pub rd_sum: f64,
    pub rd_sq_sum: f64,
    pub home: SideSums,
    pub away: SideSums,
}

/// A single match's contribution to its level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contribution {
    pub level: usize,
    pub rd: f64,
    pub home: SideSums,
    pub away: SideSums,
}

/// Contribution of `m` observed at rating difference `rd`; `None` when the
/// record lacks possession or shot counts.
pub fn contribution(m: &MatchRecord, rd: f64, minutes: f64) -> Option<Contribution> {
    if !m.has_match_stats() {
        return None;
    }
    let p = m.home_possession?;
    let side = |own_minutes: f64, opp_minutes: f64, shots: u32, sot: u32, goals: u32, gd: i32| {
        let shots = shots as f64;
        let sot = sot as f64;
        let goals = goals as f64;
        SideSums {
            a_p: own_minutes,
            b_p: opp_minutes,
            a_sm: shots,
            b_sm: own_minutes - shots,
            a_st: sot,
            b_st: shots - sot,
            a_g: goals,
            b_g: sot - goals,
            gd: gd as f64,
        }
    };
    let mh = minutes * p;
    let ma = minutes * (1.0 - p);
    let gd = m.goal_difference();
    Some(Contribution {
        level: assign_rdl(rd),
        rd,
        home: side(mh, ma, m.home_shots?, m.home_sot?, m.home_goals, gd),
        away: side(ma, mh, m.away_shots?, m.away_sot?, m.away_goals, -gd),
    })
}

/// Per-level sufficient statistics, kept so a single match can be removed
/// cheaply for leave-one-out fits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitStats {
    pub config: FitConfig,
    pub levels: Vec<LevelSums>,
}

impl FitStats {
    pub fn new(config: FitConfig) -> Self {
        Self {
            config,
            levels: vec![LevelSums::default(); RDL_LEVELS],
        }
    }

    /// Accumulates every eligible match with full statistics.
    pub fn accumulate(
        dataset: &Dataset,
        trace: &[TraceEntry],
        config: FitConfig,
    ) -> Result<Self, BnError> {
        check_trace(dataset, trace)?;
        let mut stats = Self::new(config);
        for (m, t) in dataset.matches().iter().zip(trace) {
            if !t.eligible {
                continue;
            }
            if let Some(c) = contribution(m, t.rd, config.minutes_per_match) {
                stats.add(&c);
            }
        }
        Ok(stats)
    }

    pub fn add(&mut self, c: &Contribution) {
        self.apply(c, 1.0);
    }

    pub fn remove(&mut self, c: &Contribution) {
        self.apply(c, -1.0);
    }

    fn apply(&mut self, c: &Contribution, sign: f64) {
        let l = &mut self.levels[c.level - 1];
        if sign > 0.0 {
            l.n += 1;
        } else {
            l.n -= 1;
        }
        l.rd_sum += sign * c.rd;
        l.rd_sq_sum += sign * c.rd * c.rd;
        l.home.add(&c.home, sign);
        l.away.add(&c.away, sign);
    }

    /// Smoothed parameters.
    pub fn params(&self) -> BnParameters {
        let eps = self.config.smoothing;
        let beta = |a: f64, b: f64| BetaParams::new(a.max(0.0) + eps, b.max(0.0) + eps);
        let mut rdl = RdlTable::default();
        let mut home = Vec::with_capacity(RDL_LEVELS);
        let mut away = Vec::with_capacity(RDL_LEVELS);
        for (i, l) in self.levels.iter().enumerate() {
            rdl.levels[i].count = l.n;
            let gaussian = if l.n >= 2 {
                let n = l.n as f64;
                let mean = l.rd_sum / n;
                let variance = (l.rd_sq_sum - n * mean * mean) / (n - 1.0);
                (variance > 0.0).then_some(Gaussian { mean, variance })
            } else {
                None
            };
            let side = |s: &SideSums| LevelParams {
                possession: beta(s.a_p, s.b_p),
                shot_rate: beta(s.a_sm, s.b_sm),
                on_target: beta(s.a_st, s.b_st),
                conversion: beta(s.a_g, s.b_g),
                rd_gaussian: gaussian,
                support: l.n,
                prior_only: l.n == 0,
                observed_mean_gd: (l.n > 0).then(|| s.gd / l.n as f64),
            };
            home.push(side(&l.home));
            away.push(side(&l.away));
        }
        BnParameters {
            rdl,
            home: SideParams { levels: home },
            away: SideParams { levels: away },
            fit_config: self.config,
        }
    }
}

pub(crate) fn check_trace(dataset: &Dataset, trace: &[TraceEntry]) -> Result<(), BnError> {
    if trace.len() != dataset.len() {
        return Err(BnError::TraceLength {
            trace: trace.len(),
            matches: dataset.len(),
        });
    }
    for (i, (m, t)) in dataset.matches().iter().zip(trace).enumerate() {
        if m.match_id != t.match_id {
            return Err(BnError::TraceMismatch {
                index: i,
                expected: m.match_id.clone(),
                found: t.match_id.clone(),
            });
        }
    }
    Ok(())
}

/// Fits the network on eligible matches, leaving out `exclude` if given.
pub fn fit(
    dataset: &Dataset,
    trace: &[TraceEntry],
    exclude: Option<&str>,
    config: FitConfig,
) -> Result<BnParameters, BnError> {
    let mut stats = FitStats::accumulate(dataset, trace, config)?;
    if let Some(id) = exclude {
        let hit = dataset
            .matches()
            .iter()
            .zip(trace)
            .find(|(m, t)| t.eligible && m.match_id == id);
        if let Some((m, t)) = hit {
            if let Some(c) = contribution(m, t.rd, config.minutes_per_match) {
                stats.remove(&c);
            }
        }
    }
    let params = stats.params();
    for lv in &params.rdl.levels {
        if lv.count < 50 {
            tracing::warn!(level = lv.level, count = lv.count, "sparse rating difference level");
        }
    }
    Ok(params)
}
