//! Modified pi-ratings.
//!
//! Every team carries a home rating and an away rating, both measured in
//! expected goal difference. After each match the home side's home rating and
//! the away side's away rating move by `error · λ · k_eff`, and each team's
//! other-ground rating follows by a fraction `γ` of that move. The predicted
//! goal difference is the plain rating difference `R_home.H − R_away.A`.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{Artifact, Dataset, MatchRecord};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RatingError {
    #[error("no eligible matches to score")]
    NoEligibleMatches,
    #[error("empty parameter grid")]
    EmptyGrid,
    #[error("invalid rating parameters: {0}")]
    InvalidParams(String),
}

/// When the new-team multiplier `k` applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KRule {
    /// Both teams below the threshold.
    #[default]
    BothBelow,
    /// At least one team below the threshold.
    EitherBelow,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatingParams {
    pub lambda: f64,
    pub gamma: f64,
    pub k: u32,
    pub new_team_threshold: u32,
    pub k_rule: KRule,
}

impl Default for RatingParams {
    fn default() -> Self {
        Self {
            lambda: 0.018,
            gamma: 0.7,
            k: 3,
            new_team_threshold: 38,
            k_rule: KRule::BothBelow,
        }
    }
}

impl RatingParams {
    pub fn new(lambda: f64, gamma: f64, k: u32) -> Self {
        Self {
            lambda,
            gamma,
            k,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), RatingError> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(RatingError::InvalidParams(format!("lambda {}", self.lambda)));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(RatingError::InvalidParams(format!("gamma {}", self.gamma)));
        }
        if self.k < 1 {
            return Err(RatingError::InvalidParams("k must be at least 1".into()));
        }
        Ok(())
    }

    fn k_eff(&self, home_played: u32, away_played: u32) -> f64 {
        let t = self.new_team_threshold;
        let applies = match self.k_rule {
            KRule::BothBelow => home_played < t && away_played < t,
            KRule::EitherBelow => home_played < t || away_played < t,
        };
        if applies {
            self.k as f64
        } else {
            1.0
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TeamRating {
    pub home: f64,
    pub away: f64,
    pub matches_played: u32,
}

/// Per-match record of what the ratings predicted and how wrong they were.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub match_id: String,
    /// Pre-match rating difference; also the predicted goal difference.
    pub rd: f64,
    pub observed_gd: i32,
    pub error: f64,
    /// Both teams had played at least the new-team threshold beforehand.
    pub eligible: bool,
}

/// Change produced by one update, all from pre-match ratings.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Deltas {
    rd: f64,
    error: f64,
    home_h: f64,
    home_a: f64,
    away_a: f64,
    away_h: f64,
    eligible: bool,
}

fn compute_deltas(
    params: &RatingParams,
    home: &TeamRating,
    away: &TeamRating,
    observed_gd: i32,
) -> Deltas {
    let rd = home.home - away.away;
    let error = observed_gd as f64 - rd;
    let step = params.lambda * params.k_eff(home.matches_played, away.matches_played);
    let home_h = error * step;
    let away_a = -error * step;
    let t = params.new_team_threshold;
    Deltas {
        rd,
        error,
        home_h,
        home_a: params.gamma * home_h,
        away_a,
        away_h: params.gamma * away_a,
        eligible: home.matches_played >= t && away.matches_played >= t,
    }
}

fn apply(d: &Deltas, home: &mut TeamRating, away: &mut TeamRating) {
    home.home += d.home_h;
    home.away += d.home_a;
    home.matches_played += 1;
    away.away += d.away_a;
    away.home += d.away_h;
    away.matches_played += 1;
}

/// Ratings for every team seen so far plus the learning parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingBook {
    pub params: RatingParams,
    teams: BTreeMap<String, TeamRating>,
}

impl RatingBook {
    pub fn new(params: RatingParams) -> Self {
        Self {
            params,
            teams: BTreeMap::new(),
        }
    }

    /// Rating of `team`; unseen teams read as zero.
    pub fn rating(&self, team: &str) -> TeamRating {
        self.teams.get(team).copied().unwrap_or_default()
    }

    pub fn set_rating(&mut self, team: impl Into<String>, rating: TeamRating) {
        self.teams.insert(team.into(), rating);
    }

    pub fn teams(&self) -> impl Iterator<Item = (&str, &TeamRating)> {
        self.teams.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.teams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.teams.is_empty()
    }

    /// `R_home.H − R_away.A`.
    pub fn predicted_gd(&self, home: &str, away: &str) -> f64 {
        self.rating(home).home - self.rating(away).away
    }

    /// Applies one result and returns its trace entry.
    pub fn update_result(
        &mut self,
        match_id: &str,
        home: &str,
        away: &str,
        home_goals: u32,
        away_goals: u32,
    ) -> TraceEntry {
        let mut h = self.rating(home);
        let mut a = self.rating(away);
        let observed_gd = home_goals as i32 - away_goals as i32;
        let d = compute_deltas(&self.params, &h, &a, observed_gd);
        apply(&d, &mut h, &mut a);
        self.teams.insert(home.to_string(), h);
        self.teams.insert(away.to_string(), a);
        TraceEntry {
            match_id: match_id.to_string(),
            rd: d.rd,
            observed_gd,
            error: d.error,
            eligible: d.eligible,
        }
    }

    pub fn update(&mut self, m: &MatchRecord) -> TraceEntry {
        self.update_result(
            &m.match_id,
            &m.home_team,
            &m.away_team,
            m.home_goals,
            m.away_goals,
        )
    }
}

impl Artifact for RatingBook {
    const KIND: &'static str = "ratings";
}

/// Plays every match in order through a fresh book.
pub fn replay(dataset: &Dataset, params: RatingParams) -> (RatingBook, Vec<TraceEntry>) {
    let mut book = RatingBook::new(params);
    let trace = dataset.matches().iter().map(|m| book.update(m)).collect();
    (book, trace)
}

/// Mean `|error|` over eligible entries.
pub fn mean_abs_error(trace: &[TraceEntry]) -> Result<f64, RatingError> {
    let (sum, n) = trace
        .iter()
        .filter(|t| t.eligible)
        .fold((0.0, 0usize), |(s, n), t| (s + t.error.abs(), n + 1));
    if n == 0 {
        return Err(RatingError::NoEligibleMatches);
    }
    Ok(sum / n as f64)
}

/// Team names interned to indices so a grid point replays without hashing strings.
struct Fixtures {
    teams: usize,
    games: Vec<(usize, usize, i32)>,
}

impl Fixtures {
    fn new(dataset: &Dataset) -> Self {
        let mut ids: HashMap<&str, usize> = HashMap::new();
        let mut intern = |name| {
            let next = ids.len();
            *ids.entry(name).or_insert(next)
        };
        let games = dataset
            .matches()
            .iter()
            .map(|m| {
                (
                    intern(m.home_team.as_str()),
                    intern(m.away_team.as_str()),
                    m.goal_difference(),
                )
            })
            .collect();
        Self {
            teams: ids.len(),
            games,
        }
    }

    fn mean_abs_error(&self, params: &RatingParams) -> Result<f64, RatingError> {
        let mut table = vec![TeamRating::default(); self.teams];
        let mut sum = 0.0;
        let mut n = 0usize;
        for &(h, a, gd) in &self.games {
            let d = compute_deltas(params, &table[h], &table[a], gd);
            if d.eligible {
                sum += d.error.abs();
                n += 1;
            }
            let (home, away) = pair_mut(&mut table, h, a);
            apply(&d, home, away);
        }
        if n == 0 {
            return Err(RatingError::NoEligibleMatches);
        }
        Ok(sum / n as f64)
    }
}

fn pair_mut<T>(xs: &mut [T], i: usize, j: usize) -> (&mut T, &mut T) {
    assert_ne!(i, j, "a team cannot play itself");
    if i < j {
        let (lo, hi) = xs.split_at_mut(j);
        (&mut lo[i], &mut hi[0])
    } else {
        let (lo, hi) = xs.split_at_mut(i);
        (&mut hi[0], &mut lo[j])
    }
}

/// Candidate values for each learning parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamGrid {
    pub lambdas: Vec<f64>,
    pub gammas: Vec<f64>,
    pub ks: Vec<u32>,
    /// Threshold and k-rule shared by every grid point.
    pub base: RatingParams,
}

impl Default for ParamGrid {
    /// λ 0.001..=0.100 by 0.001, γ 0..=1 by 0.05, k 1..=10.
    fn default() -> Self {
        Self {
            lambdas: (1..=100).map(|i| i as f64 / 1000.0).collect(),
            gammas: (0..=20).map(|i| i as f64 / 20.0).collect(),
            ks: (1..=10).collect(),
            base: RatingParams::default(),
        }
    }
}

/// Evenly spaced values `start, start+step, …` up to `stop` inclusive, each
/// computed as `start + i·step` so long ranges do not accumulate drift.
pub fn linspace_step(start: f64, stop: f64, step: f64) -> Vec<f64> {
    if !(step > 0.0) || stop < start {
        return vec![start];
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n)
        .map(|i| {
            let x = start + i as f64 * step;
            // snap to 12 significant decimals so 0.1*3 prints as 0.3
            (x * 1e12).round() / 1e12
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub lambda: f64,
    pub gamma: f64,
    pub k: u32,
    pub mean_abs_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub best: RatingParams,
    pub best_error: f64,
    /// Every evaluated point in λ-major, then γ, then k order.
    pub surface: Vec<SurfacePoint>,
}

impl GridSearchResult {
    /// CSV `lambda,gamma,k,mean_abs_error`.
    pub fn write_surface_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["lambda", "gamma", "k", "mean_abs_error"])?;
        for p in &self.surface {
            w.write_record([
                p.lambda.to_string(),
                p.gamma.to_string(),
                p.k.to_string(),
                p.mean_abs_error.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Exhaustive search for the parameters minimizing [`mean_abs_error`].
///
/// Ties go to the smallest λ, then γ, then k. Points are evaluated in parallel;
/// the result does not depend on scheduling.
pub fn grid_search(dataset: &Dataset, grid: &ParamGrid) -> Result<GridSearchResult, RatingError> {
    if grid.lambdas.is_empty() || grid.gammas.is_empty() || grid.ks.is_empty() {
        return Err(RatingError::EmptyGrid);
    }
    let mut points: Vec<RatingParams> = Vec::new();
    for &lambda in &grid.lambdas {
        for &gamma in &grid.gammas {
            for &k in &grid.ks {
                let p = RatingParams {
                    lambda,
                    gamma,
                    k,
                    ..grid.base
                };
                p.validate()?;
                points.push(p);
            }
        }
    }
    let fixtures = Fixtures::new(dataset);
    let errors: Vec<f64> = points
        .par_iter()
        .map(|p| fixtures.mean_abs_error(p))
        .collect::<Result<_, _>>()?;

    let key = |p: &RatingParams| (p.lambda, p.gamma, p.k);
    let mut best = 0;
    for i in 1..points.len() {
        let better = errors[i] < errors[best]
            || (errors[i] == errors[best]
                && key(&points[i]).partial_cmp(&key(&points[best])) == Some(std::cmp::Ordering::Less));
        if better {
            best = i;
        }
    }
    let surface = points
        .iter()
        .zip(&errors)
        .map(|(p, &e)| SurfacePoint {
            lambda: p.lambda,
            gamma: p.gamma,
            k: p.k,
            mean_abs_error: e,
        })
        .collect();
    Ok(GridSearchResult {
        best: points[best],
        best_error: errors[best],
        surface,
    })
}
