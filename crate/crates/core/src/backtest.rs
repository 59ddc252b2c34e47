//! Fixed-stake value betting simulation.
//!
//! A bet is placed on an outcome when the model probability beats the
//! bookmaker's implied probability `1/odds` by at least `θ`. Every outcome of
//! every match is judged on its own unless `best_outcome_only` is set.

use std::collections::HashMap;
use std::io::{Read, Write};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ah::{settle_bet, AhError, HandicapLine, Side};
use crate::bn::ForecastSet;
use crate::ingest::{Artifact, Dataset, MatchRecord, Odds1x2, OddsSource};
use crate::metrics::{Market, Outcome1x2};

/// Absorbs representation error when a discrepancy equals `θ` in decimal,
/// e.g. `0.50 − 1/2.50` evaluates to `0.0999…`.
pub const THETA_SLACK: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum BacktestError {
    #[error("prediction for unknown match {0}")]
    UnknownMatch(String),
    #[error("duplicate prediction for match {0}")]
    DuplicatePrediction(String),
    #[error("theta {0} outside [0, 1]")]
    Theta(f64),
    #[error("stake must be positive, got {0}")]
    Stake(f64),
    #[error("no theta reaches {min_bets} bets")]
    NoQualifyingTheta { min_bets: usize },
    #[error("empty profit series")]
    EmptySeries,
    #[error("AH final profit {0} is not positive")]
    NonPositiveProfit(f64),
    #[error(transparent)]
    Ah(#[from] AhError),
    #[error("predictions line {line}: {reason}")]
    PredictionCsv { line: u64, reason: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// `model_p − 1/odds`.
pub fn discrepancy(model_p: f64, odds: f64) -> f64 {
    model_p - 1.0 / odds
}

/// Place iff the discrepancy is positive and at least `θ`.
pub fn decide(model_p: f64, odds: f64, theta: f64) -> bool {
    passes(discrepancy(model_p, odds), theta)
}

fn passes(d: f64, theta: f64) -> bool {
    d > 0.0 && d >= theta - THETA_SLACK
}

/// Discrepancies of the three 1X2 outcomes.
pub fn discrepancies_1x2(p: [f64; 3], odds: &Odds1x2) -> [f64; 3] {
    let o = odds.as_array();
    [0, 1, 2].map(|i| discrepancy(p[i], o[i]))
}

/// Model probabilities for one match.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchPrediction {
    pub match_id: String,
    /// Home, draw, away.
    pub p_1x2: Option<[f64; 3]>,
    /// `(home, away)` at the match's recorded handicap.
    pub p_ah: Option<(f64, f64)>,
}

impl From<&ForecastSet> for Vec<MatchPrediction> {
    fn from(set: &ForecastSet) -> Self {
        set.rows
            .iter()
            .map(|r| MatchPrediction {
                match_id: r.match_id.clone(),
                p_1x2: Some(r.forecast.p_1x2),
                p_ah: r.p_ah,
            })
            .collect()
    }
}

/// Reads CSV `match_id,p_home,p_draw,p_away,p_ah_home,p_ah_away`. Either
/// market's columns may be blank, but not partly filled.
pub fn read_predictions_csv<R: Read>(reader: R) -> Result<Vec<MatchPrediction>, BacktestError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let bad = |reason: String| BacktestError::PredictionCsv { line, reason };
        let num = |i: usize| -> Result<Option<f64>, BacktestError> {
            match rec.get(i).unwrap_or("") {
                "" => Ok(None),
                s => s.parse().map(Some).map_err(|_| bad(format!("column {i}: {s:?}"))),
            }
        };
        let match_id = rec.get(0).unwrap_or("").to_string();
        if match_id.is_empty() {
            return Err(bad("empty match_id".into()));
        }
        let p_ah = match (num(4)?, num(5)?) {
            (Some(h), Some(a)) => Some((h, a)),
            (None, None) => None,
            _ => return Err(bad("AH probabilities must be both present or both blank".into())),
        };
        let p_1x2 = match (num(1)?, num(2)?, num(3)?) {
            (Some(h), Some(d), Some(a)) => Some([h, d, a]),
            (None, None, None) => None,
            _ => return Err(bad("1X2 probabilities must be all present or all blank".into())),
        };
        out.push(MatchPrediction {
            match_id,
            p_1x2,
            p_ah,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetSelection {
    OneXTwo(Outcome1x2),
    Ah { side: Side, line: HandicapLine },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetRow {
    pub match_id: String,
    pub date: NaiveDate,
    pub season: String,
    pub selection: BetSelection,
    pub model_p: f64,
    pub odds: f64,
    pub discrepancy: f64,
    pub stake: f64,
    pub returns: f64,
    pub profit: f64,
}

impl BetRow {
    /// Returned more than staked; a half-won quarter line counts, a void does not.
    pub fn won(&self) -> bool {
        self.returns > self.stake
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub stake: f64,
    /// Keep at most the single highest-discrepancy outcome per match.
    pub best_outcome_only: bool,
    /// Round discrepancies to this many decimals before comparing with θ,
    /// for replaying ledgers whose probabilities were published rounded.
    pub discrepancy_decimals: Option<u32>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            stake: 1.0,
            best_outcome_only: false,
            discrepancy_decimals: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub bets: usize,
    pub bets_won: usize,
    /// Mean odds of placed bets.
    pub mean_odds: f64,
    pub win_rate: f64,
    pub staked: f64,
    pub returns: f64,
    pub profit: f64,
    /// Profit over total staked.
    pub roi: f64,
}

impl Summary {
    fn from_bets<'a>(bets: impl IntoIterator<Item = &'a BetRow>) -> Self {
        let mut s = Summary::default();
        let mut odds = 0.0;
        for b in bets {
            s.bets += 1;
            s.bets_won += b.won() as usize;
            odds += b.odds;
            s.staked += b.stake;
            s.returns += b.returns;
            s.profit += b.profit;
        }
        s.finish(odds)
    }

    fn finish(mut self, odds_sum: f64) -> Self {
        if self.bets > 0 {
            self.mean_odds = odds_sum / self.bets as f64;
            self.win_rate = self.bets_won as f64 / self.bets as f64;
        }
        if self.staked > 0.0 {
            self.roi = self.profit / self.staked;
        }
        self
    }

    /// Pools several summaries as if their bets were one ledger.
    pub fn pooled<'a>(parts: impl IntoIterator<Item = &'a Summary>) -> Self {
        let mut s = Summary::default();
        let mut odds = 0.0;
        for p in parts {
            s.bets += p.bets;
            s.bets_won += p.bets_won;
            odds += p.mean_odds * p.bets as f64;
            s.staked += p.staked;
            s.returns += p.returns;
            s.profit += p.profit;
        }
        s.finish(odds)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeasonSummary {
    pub season: String,
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumPoint {
    pub match_index: usize,
    pub date: NaiveDate,
    pub match_id: String,
    pub cum_profit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub market: Market,
    pub odds_source: OddsSource,
    pub theta: f64,
    pub config: SimConfig,
    pub overall: Summary,
    pub seasons: Vec<SeasonSummary>,
    /// Running profit after each evaluated match, in date order.
    pub cumulative: Vec<CumPoint>,
    pub ledger: Vec<BetRow>,
}

impl Artifact for BacktestReport {
    const KIND: &'static str = "backtest-report";
}

impl BacktestReport {
    pub fn season(&self, season: &str) -> Option<&Summary> {
        self.seasons
            .iter()
            .find(|s| s.season == season)
            .map(|s| &s.summary)
    }
}

/// A possible bet with its discrepancy, before θ is applied.
#[derive(Debug, Clone)]
struct Candidate {
    match_index: usize,
    bet: BetRow,
}

struct Prepared<'a> {
    evaluated: Vec<&'a MatchRecord>,
    candidates: Vec<Candidate>,
}

fn index_predictions(
    dataset: &Dataset,
    predictions: &[MatchPrediction],
) -> Result<HashMap<String, MatchPrediction>, BacktestError> {
    let known: HashMap<&str, ()> = dataset.matches().iter().map(|m| (m.match_id.as_str(), ())).collect();
    let mut by_id = HashMap::with_capacity(predictions.len());
    for p in predictions {
        if !known.contains_key(p.match_id.as_str()) {
            return Err(BacktestError::UnknownMatch(p.match_id.clone()));
        }
        if by_id.insert(p.match_id.clone(), p.clone()).is_some() {
            return Err(BacktestError::DuplicatePrediction(p.match_id.clone()));
        }
    }
    Ok(by_id)
}

fn round_to(x: f64, decimals: Option<u32>) -> f64 {
    match decimals {
        Some(d) => {
            let f = 10f64.powi(d as i32);
            (x * f).round() / f
        }
        None => x,
    }
}

fn prepare<'a>(
    dataset: &'a Dataset,
    predictions: &[MatchPrediction],
    market: Market,
    source: OddsSource,
    config: &SimConfig,
) -> Result<Prepared<'a>, BacktestError> {
    if !(config.stake.is_finite() && config.stake > 0.0) {
        return Err(BacktestError::Stake(config.stake));
    }
    let by_id = index_predictions(dataset, predictions)?;
    let mut evaluated = Vec::new();
    let mut candidates = Vec::new();
    for m in dataset.matches() {
        let Some(pred) = by_id.get(&m.match_id) else {
            continue;
        };
        let mut options: Vec<(BetSelection, f64, f64)> = Vec::new();
        match market {
            Market::OneXTwo => {
                let (Some(odds), Some(p)) = (m.odds_1x2(source), pred.p_1x2) else {
                    continue;
                };
                for o in Outcome1x2::ALL {
                    options.push((BetSelection::OneXTwo(o), p[o.index()], odds.get(o)));
                }
            }
            Market::Ah => {
                let (Some(line), Some(quote), Some((ph, pa))) = (m.ah_line, m.odds_ah(source), pred.p_ah)
                else {
                    continue;
                };
                options.push((BetSelection::Ah { side: Side::Home, line }, ph, quote.odds_home));
                options.push((BetSelection::Ah { side: Side::Away, line }, pa, quote.odds_away));
            }
        }
        let match_index = evaluated.len();
        evaluated.push(m);
        let mut rows = Vec::with_capacity(options.len());
        for (selection, model_p, odds) in options {
            let stake = config.stake;
            let returns = match selection {
                BetSelection::OneXTwo(o) => {
                    if o == m.outcome() {
                        stake * odds
                    } else {
                        0.0
                    }
                }
                BetSelection::Ah { side, line } => {
                    settle_bet(m.goal_difference(), line, side, stake, odds)?
                }
            };
            rows.push(BetRow {
                match_id: m.match_id.clone(),
                date: m.date,
                season: m.season.clone(),
                selection,
                model_p,
                odds,
                discrepancy: round_to(discrepancy(model_p, odds), config.discrepancy_decimals),
                stake,
                returns,
                profit: returns - stake,
            });
        }
        if config.best_outcome_only {
            // first maximum keeps the home/draw/away order on ties
            let best = rows
                .iter()
                .enumerate()
                .fold(None::<(usize, f64)>, |acc, (i, r)| match acc {
                    Some((_, d)) if d >= r.discrepancy => acc,
                    _ => Some((i, r.discrepancy)),
                })
                .map(|(i, _)| i);
            rows = best.map(|i| vec![rows.swap_remove(i)]).unwrap_or_default();
        }
        candidates.extend(rows.into_iter().map(|bet| Candidate { match_index, bet }));
    }
    Ok(Prepared {
        evaluated,
        candidates,
    })
}

fn report_for(
    prep: &Prepared<'_>,
    market: Market,
    source: OddsSource,
    theta: f64,
    config: &SimConfig,
) -> BacktestReport {
    let ledger: Vec<BetRow> = prep
        .candidates
        .iter()
        .filter(|c| passes(c.bet.discrepancy, theta))
        .map(|c| c.bet.clone())
        .collect();

    let mut per_match = vec![0.0; prep.evaluated.len()];
    for c in prep.candidates.iter().filter(|c| passes(c.bet.discrepancy, theta)) {
        per_match[c.match_index] += c.bet.profit;
    }
    let mut running = 0.0;
    let cumulative = prep
        .evaluated
        .iter()
        .zip(&per_match)
        .enumerate()
        .map(|(i, (m, p))| {
            running += p;
            CumPoint {
                match_index: i,
                date: m.date,
                match_id: m.match_id.clone(),
                cum_profit: running,
            }
        })
        .collect();

    let mut order: Vec<String> = Vec::new();
    for m in &prep.evaluated {
        if !order.contains(&m.season) {
            order.push(m.season.clone());
        }
    }
    let seasons = order
        .into_iter()
        .map(|season| SeasonSummary {
            summary: Summary::from_bets(ledger.iter().filter(|b| b.season == season)),
            season,
        })
        .collect();

    BacktestReport {
        market,
        odds_source: source,
        theta,
        config: *config,
        overall: Summary::from_bets(&ledger),
        seasons,
        cumulative,
        ledger,
    }
}

fn check_theta(theta: f64) -> Result<(), BacktestError> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(BacktestError::Theta(theta));
    }
    Ok(())
}

/// Runs one θ over every match with a prediction and the market's odds.
pub fn simulate(
    dataset: &Dataset,
    predictions: &[MatchPrediction],
    market: Market,
    source: OddsSource,
    theta: f64,
    config: &SimConfig,
) -> Result<BacktestReport, BacktestError> {
    check_theta(theta)?;
    let prep = prepare(dataset, predictions, market, source, config)?;
    Ok(report_for(&prep, market, source, theta, config))
}

/// `0%, 1%, …, max_percent%` as fractions.
pub fn theta_grid(max_percent: u32) -> Vec<f64> {
    (0..=max_percent).map(|i| i as f64 / 100.0).collect()
}

/// One report per θ, in grid order.
pub fn sweep_theta(
    dataset: &Dataset,
    predictions: &[MatchPrediction],
    market: Market,
    source: OddsSource,
    thetas: &[f64],
    config: &SimConfig,
) -> Result<Vec<BacktestReport>, BacktestError> {
    for &t in thetas {
        check_theta(t)?;
    }
    let prep = prepare(dataset, predictions, market, source, config)?;
    Ok(thetas
        .par_iter()
        .map(|&t| report_for(&prep, market, source, t, config))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    Roi,
    Profit,
}

impl Objective {
    fn value(self, s: &Summary) -> f64 {
        match self {
            Objective::Roi => s.roi,
            Objective::Profit => s.profit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeasonChoice {
    pub season: String,
    pub theta: f64,
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizedTable {
    pub objective: Objective,
    pub min_bets: usize,
    pub seasons: Vec<SeasonChoice>,
    /// Seasons where no θ reached `min_bets`.
    pub excluded: Vec<String>,
    /// Chosen θ values weighted by their bet counts.
    pub overall_theta: f64,
    pub overall: Summary,
}

fn best_index<'a>(
    items: impl Iterator<Item = (f64, &'a Summary)>,
    objective: Objective,
    min_bets: usize,
) -> Option<(f64, Summary)> {
    let mut sorted: Vec<(f64, &Summary)> = items.filter(|(_, s)| s.bets >= min_bets).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best: Option<(f64, Summary)> = None;
    for (t, s) in sorted {
        match &best {
            Some((_, b)) if objective.value(s) <= objective.value(b) => {}
            _ => best = Some((t, *s)),
        }
    }
    best
}

/// Per-season θ maximizing `objective` among θ with at least `min_bets`
/// bets in that season; ties go to the smaller θ.
pub fn optimize_theta(
    reports: &[BacktestReport],
    objective: Objective,
    min_bets: usize,
) -> OptimizedTable {
    let mut order: Vec<String> = Vec::new();
    for r in reports {
        for s in &r.seasons {
            if !order.contains(&s.season) {
                order.push(s.season.clone());
            }
        }
    }
    let mut seasons = Vec::new();
    let mut excluded = Vec::new();
    for season in order {
        let items = reports
            .iter()
            .filter_map(|r| r.season(&season).map(|s| (r.theta, s)));
        match best_index(items, objective, min_bets) {
            Some((theta, summary)) => seasons.push(SeasonChoice {
                season,
                theta,
                summary,
            }),
            None => excluded.push(season),
        }
    }
    let overall = Summary::pooled(seasons.iter().map(|c| &c.summary));
    let overall_theta = if overall.bets > 0 {
        seasons
            .iter()
            .map(|c| c.theta * c.summary.bets as f64)
            .sum::<f64>()
            / overall.bets as f64
    } else {
        0.0
    };
    OptimizedTable {
        objective,
        min_bets,
        seasons,
        excluded,
        overall_theta,
        overall,
    }
}

/// Single θ for the whole period maximizing `objective` among θ with at
/// least `min_bets` bets; ties go to the smaller θ.
pub fn optimize_theta_static(
    reports: &[BacktestReport],
    objective: Objective,
    min_bets: usize,
) -> Result<(f64, Summary), BacktestError> {
    best_index(reports.iter().map(|r| (r.theta, &r.overall)), objective, min_bets)
        .ok_or(BacktestError::NoQualifyingTheta { min_bets })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StakeMatch {
    /// Stake multiplier that brings the AH final profit up to the 1X2 one.
    pub factor: f64,
    pub scaled_ah: Vec<f64>,
}

/// Scales the AH cumulative profit series so its final value equals the
/// 1X2 series' final value.
pub fn stake_match(ah: &[f64], one_x_two: &[f64]) -> Result<StakeMatch, BacktestError> {
    let (Some(&ah_final), Some(&oxt_final)) = (ah.last(), one_x_two.last()) else {
        return Err(BacktestError::EmptySeries);
    };
    if !(ah_final > 0.0) {
        return Err(BacktestError::NonPositiveProfit(ah_final));
    }
    let factor = oxt_final / ah_final;
    Ok(StakeMatch {
        factor,
        scaled_ah: ah.iter().map(|p| p * factor).collect(),
    })
}

/// Per-season mean AH odds: `(season, avg home, avg away, max home, max away)`.
pub fn mean_ah_odds_by_season(dataset: &Dataset) -> Vec<(String, [Option<f64>; 4])> {
    let mut out: Vec<(String, [f64; 4], [usize; 4])> = Vec::new();
    for m in dataset.matches() {
        if out.last().is_none_or(|(s, _, _)| *s != m.season) {
            out.push((m.season.clone(), [0.0; 4], [0; 4]));
        }
        let (_, sums, counts) = out.last_mut().expect("pushed");
        let quotes = [m.odds_ah_avg, m.odds_ah_max];
        for (k, q) in quotes.iter().enumerate() {
            if let Some(q) = q {
                sums[2 * k] += q.odds_home;
                sums[2 * k + 1] += q.odds_away;
                counts[2 * k] += 1;
                counts[2 * k + 1] += 1;
            }
        }
    }
    out.into_iter()
        .map(|(s, sums, counts)| {
            let mean = |i: usize| (counts[i] > 0).then(|| sums[i] / counts[i] as f64);
            (s, [mean(0), mean(1), mean(2), mean(3)])
        })
        .collect()
}

const SUMMARY_COLUMNS: [&str; 7] = ["bets", "bets_won", "odds", "win_rate", "returns", "profit", "roi"];

fn summary_fields(s: &Summary) -> [String; 7] {
    [
        s.bets.to_string(),
        s.bets_won.to_string(),
        s.mean_odds.to_string(),
        s.win_rate.to_string(),
        s.returns.to_string(),
        s.profit.to_string(),
        s.roi.to_string(),
    ]
}

fn prefixed(prefix: &str, names: &[&str]) -> Vec<String> {
    names.iter().map(|n| format!("{prefix}_{n}")).collect()
}

/// θ sweep with average-odds and maximum-odds results side by side.
/// Rows pair up by position; θ, win rate and ROI are fractions.
pub fn write_sweep_csv<W: Write>(
    out: W,
    avg: &[BacktestReport],
    max: &[BacktestReport],
) -> Result<(), BacktestError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["theta".to_string()];
    header.extend(prefixed("avg", &SUMMARY_COLUMNS));
    header.extend(prefixed("max", &SUMMARY_COLUMNS));
    w.write_record(&header)?;
    for (a, m) in avg.iter().zip(max) {
        let mut row = vec![a.theta.to_string()];
        row.extend(summary_fields(&a.overall));
        row.extend(summary_fields(&m.overall));
        w.write_record(&row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Per-season optimized θ for average and maximum odds side by side, with a
/// final `Overall` row. A season missing on one side leaves its cells blank.
pub fn write_optimized_csv<W: Write>(
    out: W,
    avg: &OptimizedTable,
    max: &OptimizedTable,
) -> Result<(), BacktestError> {
    let mut w = csv::Writer::from_writer(out);
    let mut cols = vec!["theta"];
    cols.extend(SUMMARY_COLUMNS);
    let mut header = vec!["season".to_string()];
    header.extend(prefixed("avg", &cols));
    header.extend(prefixed("max", &cols));
    w.write_record(&header)?;

    let mut seasons: Vec<&str> = avg.seasons.iter().map(|c| c.season.as_str()).collect();
    for c in &max.seasons {
        if !seasons.contains(&c.season.as_str()) {
            seasons.push(&c.season);
        }
    }
    let cells = |t: &OptimizedTable, season: &str| -> Vec<String> {
        match t.seasons.iter().find(|c| c.season == season) {
            Some(c) => {
                let mut v = vec![c.theta.to_string()];
                v.extend(summary_fields(&c.summary));
                v
            }
            None => vec![String::new(); 8],
        }
    };
    for s in seasons {
        let mut row = vec![s.to_string()];
        row.extend(cells(avg, s));
        row.extend(cells(max, s));
        w.write_record(&row)?;
    }
    let mut row = vec!["Overall".to_string(), avg.overall_theta.to_string()];
    row.extend(summary_fields(&avg.overall));
    row.push(max.overall_theta.to_string());
    row.extend(summary_fields(&max.overall));
    w.write_record(&row)?;
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// CSV `match_index,date,scenario,cum_profit` for several named series.
pub fn write_cumulative_csv<W: Write>(
    out: W,
    series: &[(&str, &[CumPoint])],
) -> Result<(), BacktestError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["match_index", "date", "scenario", "cum_profit"])?;
    for (name, points) in series {
        for p in *points {
            w.write_record([
                p.match_index.to_string(),
                p.date.to_string(),
                name.to_string(),
                p.cum_profit.to_string(),
            ])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// CSV `season,avg_home,avg_away,max_home,max_away`.
pub fn write_mean_ah_odds_csv<W: Write>(out: W, dataset: &Dataset) -> Result<(), BacktestError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["season", "avg_home", "avg_away", "max_home", "max_away"])?;
    for (season, means) in mean_ah_odds_by_season(dataset) {
        let mut row = vec![season];
        row.extend(means.iter().map(|m| m.map(|v| v.to_string()).unwrap_or_default()));
        w.write_record(&row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Bet ledger CSV, one row per placed bet.
pub fn write_ledger_csv<W: Write>(out: W, ledger: &[BetRow]) -> Result<(), BacktestError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "match_id", "date", "season", "selection", "line", "model_p", "odds", "discrepancy",
        "stake", "returns", "profit",
    ])?;
    for b in ledger {
        let (sel, line) = match b.selection {
            BetSelection::OneXTwo(o) => (o.label().to_string(), String::new()),
            BetSelection::Ah { side, line } => (side.to_string(), line.goals().to_string()),
        };
        w.write_record([
            b.match_id.clone(),
            b.date.to_string(),
            b.season.clone(),
            sel,
            line,
            b.model_p.to_string(),
            b.odds.to_string(),
            b.discrepancy.to_string(),
            b.stake.to_string(),
            b.returns.to_string(),
            b.profit.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ah::AhQuote;
    use proptest::prelude::*;

    #[test]
    fn decide_examples() {
        assert!(decide(0.51, 2.0, 0.01));
        assert!(decide(0.62, 1.96, 0.10));
        for theta in [0.0, 0.01, 0.5] {
            assert!(!decide(0.50, 2.0, theta));
        }
        assert!(decide(0.50, 2.50, 0.10));
        assert!(!decide(0.50, 2.50, 0.11));
    }

    fn game(day: u32, season_year: i32, hg: u32, ag: u32) -> MatchRecord {
        let d = NaiveDate::from_ymd_opt(season_year, 9, 1).unwrap() + chrono::Days::new(day as u64);
        let mut m = MatchRecord::new(d, format!("H{day}"), format!("A{day}"), hg, ag);
        m.odds_1x2_avg = Some(Odds1x2::new(2.0, 3.4, 4.0));
        m.odds_1x2_max = Some(Odds1x2::new(2.1, 3.6, 4.4));
        m.ah_line = Some(HandicapLine::from_quarters(-1));
        m.odds_ah_avg = Some(AhQuote::new(1.9, 1.95).unwrap());
        m.odds_ah_max = Some(AhQuote::new(2.0, 2.05).unwrap());
        m
    }

    fn pred(m: &MatchRecord, p: [f64; 3], ah: (f64, f64)) -> MatchPrediction {
        MatchPrediction {
            match_id: m.match_id.clone(),
            p_1x2: Some(p),
            p_ah: Some(ah),
        }
    }

    fn small() -> (Dataset, Vec<MatchPrediction>) {
        let ms = vec![game(0, 2010, 2, 0), game(1, 2010, 0, 0), game(2, 2011, 0, 1), game(3, 2011, 1, 0)];
        let preds = vec![
            pred(&ms[0], [0.60, 0.25, 0.15], (0.60, 0.40)),
            pred(&ms[1], [0.45, 0.35, 0.20], (0.45, 0.55)),
            pred(&ms[2], [0.30, 0.30, 0.40], (0.40, 0.60)),
            pred(&ms[3], [0.52, 0.28, 0.20], (0.56, 0.44)),
        ];
        (Dataset::from_matches(ms).unwrap(), preds)
    }

    #[test]
    fn one_x_two_ledger() {
        let (ds, preds) = small();
        let r = simulate(&ds, &preds, Market::OneXTwo, OddsSource::Average, 0.05, &SimConfig::default()).unwrap();
        // home 0.60 vs 0.5 on match 0 wins 2.0; away 0.40 vs 0.25 on match 2 wins 4.0;
        // draw 0.35 vs 0.294 on match 1 wins 3.4
        assert_eq!(r.overall.bets, 3);
        assert_eq!(r.overall.bets_won, 3);
        assert!((r.overall.returns - 9.4).abs() < 1e-12);
        assert!((r.overall.profit - 6.4).abs() < 1e-12);
        assert!((r.overall.roi * 3.0 - r.overall.profit).abs() < 1e-9);
        assert_eq!(r.seasons.len(), 2);
        assert_eq!(r.season("2010/11").unwrap().bets, 2);
        assert_eq!(r.cumulative.len(), 4);
        assert!((r.cumulative[3].cum_profit - 6.4).abs() < 1e-12);
    }

    #[test]
    fn unreachable_threshold_places_nothing() {
        let (ds, preds) = small();
        for market in [Market::OneXTwo, Market::Ah] {
            let r = simulate(&ds, &preds, market, OddsSource::Average, 1.0, &SimConfig::default()).unwrap();
            assert_eq!(r.overall.bets, 0);
            assert_eq!(r.overall.profit, 0.0);
            assert_eq!(r.overall.roi, 0.0);
        }
    }

    #[test]
    fn quarter_line_half_win_counts_as_won() {
        let (ds, preds) = small();
        let r = simulate(&ds, &preds, Market::Ah, OddsSource::Average, 0.0, &SimConfig::default()).unwrap();
        // line −0.25: 1–0 home is a full win, 0–0 home is a half loss
        let first = r.ledger.iter().find(|b| b.match_id == ds.matches()[0].match_id).unwrap();
        assert!(first.won());
        let level = r.ledger.iter().find(|b| b.match_id == ds.matches()[1].match_id).unwrap();
        assert_eq!(level.selection, BetSelection::Ah { side: Side::Away, line: HandicapLine::from_quarters(-1) });
        assert!((level.returns - (0.5 + 0.5 * 1.95)).abs() < 1e-12);
        assert!(level.won());
    }

    #[test]
    fn best_outcome_only_keeps_one_bet() {
        let m = game(0, 2010, 1, 1);
        let ds = Dataset::from_matches(vec![m.clone()]).unwrap();
        let preds = vec![pred(&m, [0.55, 0.31, 0.14], (0.5, 0.5))];
        let all = simulate(&ds, &preds, Market::OneXTwo, OddsSource::Average, 0.0, &SimConfig::default()).unwrap();
        assert_eq!(all.overall.bets, 2);
        let one = simulate(
            &ds, &preds, Market::OneXTwo, OddsSource::Average, 0.0,
            &SimConfig { best_outcome_only: true, ..SimConfig::default() },
        )
        .unwrap();
        assert_eq!(one.overall.bets, 1);
        assert_eq!(one.ledger[0].selection, BetSelection::OneXTwo(Outcome1x2::Home));
    }

    #[test]
    fn missing_odds_are_skipped_and_unknown_ids_rejected() {
        let (ds, mut preds) = small();
        let mut ms = ds.matches().to_vec();
        ms[0].odds_1x2_max = None;
        let ds2 = Dataset::from_matches(ms).unwrap();
        let r = simulate(&ds2, &preds, Market::OneXTwo, OddsSource::Maximum, 0.0, &SimConfig::default()).unwrap();
        assert_eq!(r.cumulative.len(), 3);
        preds.push(MatchPrediction { match_id: "nope".into(), p_1x2: Some([0.3; 3]), p_ah: None });
        assert!(matches!(
            simulate(&ds2, &preds, Market::OneXTwo, OddsSource::Average, 0.0, &SimConfig::default()),
            Err(BacktestError::UnknownMatch(_))
        ));
    }

    #[test]
    fn sweep_matches_individual_runs() {
        let (ds, preds) = small();
        let grid = theta_grid(25);
        assert_eq!(grid.len(), 26);
        let sweep = sweep_theta(&ds, &preds, Market::OneXTwo, OddsSource::Average, &grid, &SimConfig::default()).unwrap();
        for r in &sweep {
            let one = simulate(&ds, &preds, Market::OneXTwo, OddsSource::Average, r.theta, &SimConfig::default()).unwrap();
            assert_eq!(&one, r);
        }
        for w in sweep.windows(2) {
            assert!(w[1].overall.bets <= w[0].overall.bets);
        }
    }

    fn summary(bets: usize, profit: f64) -> Summary {
        Summary::pooled([&Summary {
            bets,
            bets_won: 0,
            mean_odds: 2.0,
            win_rate: 0.0,
            staked: bets as f64,
            returns: bets as f64 + profit,
            profit,
            roi: 0.0,
        }])
    }

    fn report(theta: f64, seasons: &[(&str, usize, f64)]) -> BacktestReport {
        let seasons: Vec<SeasonSummary> = seasons
            .iter()
            .map(|&(s, b, p)| SeasonSummary { season: s.into(), summary: summary(b, p) })
            .collect();
        BacktestReport {
            market: Market::OneXTwo,
            odds_source: OddsSource::Average,
            theta,
            config: SimConfig::default(),
            overall: Summary::pooled(seasons.iter().map(|s| &s.summary)),
            seasons,
            cumulative: vec![],
            ledger: vec![],
        }
    }

    #[test]
    fn optimize_per_season() {
        let reports = vec![
            report(0.00, &[("a", 100, 5.0), ("b", 80, -3.0), ("c", 10, 9.0)]),
            report(0.05, &[("a", 40, 6.0), ("b", 50, 2.0), ("c", 5, 9.0)]),
            report(0.10, &[("a", 20, 8.0), ("b", 30, 2.0), ("c", 2, 9.0)]),
        ];
        let roi = optimize_theta(&reports, Objective::Roi, 30);
        assert_eq!(roi.excluded, vec!["c".to_string()]);
        assert_eq!((roi.seasons[0].theta, roi.seasons[1].theta), (0.05, 0.10));
        let profit = optimize_theta(&reports, Objective::Profit, 30);
        // season b ties at 2.0 between 5% and 10%: smaller θ wins
        assert_eq!((profit.seasons[0].theta, profit.seasons[1].theta), (0.05, 0.05));
        assert!(profit.overall.profit >= roi.overall.profit);
        assert_eq!(roi.overall.bets, 70);
        assert!((roi.overall.roi - 8.0 / 70.0).abs() < 1e-12);
        assert!((roi.overall_theta - (0.05 * 40.0 + 0.10 * 30.0) / 70.0).abs() < 1e-12);
    }

    #[test]
    fn optimize_static() {
        let one = vec![report(0.03, &[("a", 200, 1.0)])];
        assert_eq!(optimize_theta_static(&one, Objective::Profit, 100).unwrap().0, 0.03);
        let reports: Vec<_> = (0..=10)
            .map(|i| {
                let t = i as f64 / 100.0;
                let profit = 10.0 - ((i as f64) - 5.0).powi(2);
                report(t, &[("a", 300 - 20 * i, profit)])
            })
            .collect();
        assert_eq!(optimize_theta_static(&reports, Objective::Profit, 100).unwrap().0, 0.05);
        let tied = vec![report(0.02, &[("a", 150, 4.0)]), report(0.01, &[("a", 180, 4.0)])];
        assert_eq!(optimize_theta_static(&tied, Objective::Profit, 100).unwrap().0, 0.01);
        assert!(matches!(
            optimize_theta_static(&tied, Objective::Profit, 1000),
            Err(BacktestError::NoQualifyingTheta { .. })
        ));
    }

    #[test]
    fn stake_match_examples() {
        let s = stake_match(&[1.0, 3.0], &[2.0, 3.0]).unwrap();
        assert_eq!(s.factor, 1.0);
        let s = stake_match(&[4.0, 10.0], &[20.0, 55.9]).unwrap();
        assert!((s.factor - 5.59).abs() < 1e-12);
        assert!((s.scaled_ah.last().unwrap() - 55.9).abs() < 1e-12);
        assert!(matches!(stake_match(&[-1.0], &[1.0]), Err(BacktestError::NonPositiveProfit(_))));
        assert!(matches!(stake_match(&[], &[1.0]), Err(BacktestError::EmptySeries)));
    }

    #[test]
    fn predictions_csv_round_trip() {
        let text = "match_id,p_home,p_draw,p_away,p_ah_home,p_ah_away\nx,0.5,0.3,0.2,0.55,0.45\ny,0.2,0.3,0.5,,\n";
        let p = read_predictions_csv(text.as_bytes()).unwrap();
        assert_eq!(p[0].p_ah, Some((0.55, 0.45)));
        assert_eq!(p[1].p_ah, None);
        let bad = "match_id,p_home,p_draw,p_away,p_ah_home,p_ah_away\nx,0.5,,0.2,,\n";
        assert!(matches!(
            read_predictions_csv(bad.as_bytes()),
            Err(BacktestError::PredictionCsv { line: 2, .. })
        ));
    }

    #[test]
    fn mean_ah_odds() {
        let (ds, _) = small();
        let rows = mean_ah_odds_by_season(&ds);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].1, [Some(1.9), Some(1.95), Some(2.0), Some(2.05)]);
    }

    proptest! {
        #[test]
        fn profit_is_linear_in_stake(stake in 0.1f64..50.0, theta in 0.0f64..0.2) {
            let (ds, preds) = small();
            for market in [Market::OneXTwo, Market::Ah] {
                let unit = simulate(&ds, &preds, market, OddsSource::Average, theta, &SimConfig::default()).unwrap();
                let scaled = simulate(&ds, &preds, market, OddsSource::Average, theta,
                    &SimConfig { stake, ..SimConfig::default() }).unwrap();
                prop_assert_eq!(unit.overall.bets, scaled.overall.bets);
                prop_assert!((scaled.overall.profit - stake * unit.overall.profit).abs() < 1e-9 * stake.max(1.0));
                for (a, b) in unit.ledger.iter().zip(&scaled.ledger) {
                    prop_assert!((b.profit - stake * a.profit).abs() < 1e-9 * stake.max(1.0));
                }
                prop_assert!((scaled.overall.roi * scaled.overall.staked - scaled.overall.profit).abs() < 1e-9);
            }
        }

        #[test]
        fn overround_leaves_a_negative_discrepancy(
            a in 0.01f64..1.0, b in 0.01f64..1.0, c in 0.01f64..1.0,
            margin in 1.0f64..1.2, ia in 0.05f64..1.0, ib in 0.05f64..1.0, ic in 0.05f64..1.0,
        ) {
            let z = a + b + c;
            let p = [a / z, b / z, c / z];
            let iz = (ia + ib + ic) / margin;
            let odds = Odds1x2::new(iz / ia, iz / ib, iz / ic);
            let d = discrepancies_1x2(p, &odds);
            let total: f64 = d.iter().sum();
            prop_assert!((total + odds.overround()).abs() < 1e-9);
            if margin > 1.0 + 1e-9 {
                prop_assert!(d.iter().any(|&x| x < 0.0));
            }
        }

        #[test]
        fn longer_odds_never_remove_bets(p in 0.05f64..0.9, odds in 1.05f64..8.0, c in 1.0f64..2.0, theta in 0.0f64..0.3) {
            if decide(p, odds, theta) {
                prop_assert!(decide(p, odds * c, theta));
            }
        }
    }
}
