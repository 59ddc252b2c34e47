//! Forecast scoring: ranked probability score for 1X2, Brier score for AH.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ah::Side;

const NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("1X2 probabilities sum to {0}, expected 1")]
    Unnormalized(f64),
    #[error("probability {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("voided AH observation cannot be scored")]
    Voided,
    #[error("no matches to score")]
    Empty,
}

/// Ordinal 1X2 outcome: home < draw < away.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome1x2 {
    Home,
    Draw,
    Away,
}

impl Outcome1x2 {
    pub const ALL: [Outcome1x2; 3] = [Outcome1x2::Home, Outcome1x2::Draw, Outcome1x2::Away];

    pub fn from_goals(home: u32, away: u32) -> Self {
        match home.cmp(&away) {
            std::cmp::Ordering::Greater => Outcome1x2::Home,
            std::cmp::Ordering::Equal => Outcome1x2::Draw,
            std::cmp::Ordering::Less => Outcome1x2::Away,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Outcome1x2::Home => 0,
            Outcome1x2::Draw => 1,
            Outcome1x2::Away => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Outcome1x2::Home => "1",
            Outcome1x2::Draw => "X",
            Outcome1x2::Away => "2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Market {
    OneXTwo,
    Ah,
}

/// What actually happened in one market.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutcomeObs {
    OneXTwo(Outcome1x2),
    /// `None` when the handicap voided.
    Ah(Option<Side>),
}

impl OutcomeObs {
    pub fn market(&self) -> Market {
        match self {
            OutcomeObs::OneXTwo(_) => Market::OneXTwo,
            OutcomeObs::Ah(_) => Market::Ah,
        }
    }

    pub fn voided(&self) -> bool {
        matches!(self, OutcomeObs::Ah(None))
    }
}

/// Ranked probability score over the ordered outcomes (home, draw, away).
pub fn rps(p: [f64; 3], observed: Outcome1x2) -> Result<f64, MetricsError> {
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(MetricsError::Unnormalized(total));
    }
    if let Some(&bad) = p.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(MetricsError::OutOfRange(bad));
    }
    let mut cum_p = 0.0;
    let mut cum_o = 0.0;
    let mut sum = 0.0;
    for (i, &pi) in p.iter().take(2).enumerate() {
        cum_p += pi;
        cum_o += if i == observed.index() { 1.0 } else { 0.0 };
        sum += (cum_p - cum_o).powi(2);
    }
    Ok(sum / 2.0)
}

/// Single-outcome Brier score `(p_home - 1{home})²`.
pub fn brier(p_home: f64, observed: Side) -> Result<f64, MetricsError> {
    if !(0.0..=1.0).contains(&p_home) {
        return Err(MetricsError::OutOfRange(p_home));
    }
    let o = if observed == Side::Home { 1.0 } else { 0.0 };
    Ok((p_home - o).powi(2))
}

/// Brier score for an observation that may be voided.
pub fn brier_obs(p_home: f64, obs: OutcomeObs) -> Result<f64, MetricsError> {
    match obs {
        OutcomeObs::Ah(Some(side)) => brier(p_home, side),
        _ => Err(MetricsError::Voided),
    }
}

/// One match's forecasts and outcomes for the accuracy table.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredMatch {
    pub season: String,
    pub p_1x2: [f64; 3],
    pub outcome: Outcome1x2,
    /// Home-side AH probability and observed binary AH outcome, when the match had a line.
    pub ah: Option<(f64, OutcomeObs)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeasonScore {
    pub season: String,
    pub rps: f64,
    /// `None` when the season has no scorable AH outcome.
    pub brier: Option<f64>,
    pub n_matches: usize,
    pub n_ah: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeasonTable {
    pub seasons: Vec<SeasonScore>,
    pub overall: SeasonScore,
}

#[derive(Default)]
struct Acc {
    rps: f64,
    n: usize,
    brier: f64,
    n_ah: usize,
}

impl Acc {
    fn finish(&self, season: String) -> SeasonScore {
        SeasonScore {
            season,
            rps: self.rps / self.n as f64,
            brier: (self.n_ah > 0).then(|| self.brier / self.n_ah as f64),
            n_matches: self.n,
            n_ah: self.n_ah,
        }
    }
}

/// Mean RPS and Brier per season plus a pooled overall row. Voided AH
/// outcomes are left out of the Brier denominators.
pub fn season_table(matches: &[ScoredMatch]) -> Result<SeasonTable, MetricsError> {
    if matches.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut by_season: BTreeMap<&str, Acc> = BTreeMap::new();
    let mut overall = Acc::default();
    for m in matches {
        let r = rps(m.p_1x2, m.outcome)?;
        let b = match m.ah {
            Some((p, obs)) if !obs.voided() => Some(brier_obs(p, obs)?),
            _ => None,
        };
        for acc in [by_season.entry(&m.season).or_default(), &mut overall] {
            acc.rps += r;
            acc.n += 1;
            if let Some(b) = b {
                acc.brier += b;
                acc.n_ah += 1;
            }
        }
    }
    Ok(SeasonTable {
        seasons: by_season
            .iter()
            .map(|(s, acc)| acc.finish(s.to_string()))
            .collect(),
        overall: overall.finish("Overall".to_string()),
    })
}

impl SeasonTable {
    /// CSV with header `season,rps,brier,n_matches`.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["season", "rps", "brier", "n_matches"])?;
        for row in self.seasons.iter().chain(std::iter::once(&self.overall)) {
            w.write_record([
                row.season.clone(),
                format!("{:.6}", row.rps),
                row.brier.map(|b| format!("{b:.6}")).unwrap_or_default(),
                row.n_matches.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rps_examples() {
        assert_eq!(rps([1.0, 0.0, 0.0], Outcome1x2::Home).unwrap(), 0.0);
        let third = 1.0 / 3.0;
        let r = rps([third, third, third], Outcome1x2::Home).unwrap();
        assert!((r - 5.0 / 18.0).abs() < 1e-12);
        assert_eq!(rps([0.0, 0.0, 1.0], Outcome1x2::Home).unwrap(), 1.0);
        assert!(matches!(
            rps([0.5, 0.5, 0.5], Outcome1x2::Home),
            Err(MetricsError::Unnormalized(_))
        ));
    }

    #[test]
    fn rps_respects_ordering() {
        let near = rps([0.0, 1.0, 0.0], Outcome1x2::Home).unwrap();
        let far = rps([0.0, 0.0, 1.0], Outcome1x2::Home).unwrap();
        assert_eq!(near, 0.5);
        assert_eq!(far, 1.0);
        assert!(near < far);
    }

    #[test]
    fn brier_examples() {
        assert_eq!(brier(0.5, Side::Home).unwrap(), 0.25);
        assert_eq!(brier(0.5, Side::Away).unwrap(), 0.25);
        assert_eq!(brier(1.0, Side::Home).unwrap(), 0.0);
        assert!((brier(0.7, Side::Away).unwrap() - 0.49).abs() < 1e-12);
        assert_eq!(brier_obs(0.5, OutcomeObs::Ah(None)), Err(MetricsError::Voided));
        assert!(brier(1.2, Side::Home).is_err());
    }

    fn scored(season: &str, p: [f64; 3], outcome: Outcome1x2) -> ScoredMatch {
        ScoredMatch {
            season: season.into(),
            p_1x2: p,
            outcome,
            ah: None,
        }
    }

    #[test]
    fn season_table_pools_overall() {
        // rps((1-x, x, 0), home) = x²/2, so x = √0.2 and √0.6 give 0.1 and 0.3.
        let x1 = 0.2f64.sqrt();
        let x2 = 0.6f64.sqrt();
        let a = scored("2010/11", [1.0 - x1, x1, 0.0], Outcome1x2::Home);
        let b = scored("2011/12", [1.0 - x2, x2, 0.0], Outcome1x2::Home);
        let table = season_table(&[a, b]).unwrap();
        assert_eq!(table.seasons.len(), 2);
        assert!((table.seasons[0].rps - 0.1).abs() < 1e-12);
        assert!((table.seasons[1].rps - 0.3).abs() < 1e-12);
        assert!((table.overall.rps - 0.2).abs() < 1e-12);
        assert_eq!(table.overall.brier, None);
        assert_eq!(season_table(&[]), Err(MetricsError::Empty));
    }

    #[test]
    fn voids_leave_brier_denominator() {
        let mut a = scored("s", [1.0, 0.0, 0.0], Outcome1x2::Home);
        a.ah = Some((0.5, OutcomeObs::Ah(Some(Side::Home))));
        let mut b = scored("s", [1.0, 0.0, 0.0], Outcome1x2::Home);
        b.ah = Some((0.9, OutcomeObs::Ah(None)));
        let t = season_table(&[a, b]).unwrap();
        assert_eq!(t.overall.brier, Some(0.25));
        assert_eq!(t.overall.n_ah, 1);
        assert_eq!(t.overall.n_matches, 2);
    }
}
