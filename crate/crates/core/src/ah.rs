//! Asian Handicap settlement.
//!
//! Handicaps are held as integer quarter-goals applied to the home team, so
//! `-1.25` is `HandicapLine(-5)`. A line is *whole* when divisible by four,
//! *half* when divisible by two but not four, and *quarter* otherwise. Quarter
//! lines are two bets: half the stake on each adjacent whole/half line, settled
//! independently at the quoted odds.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pmf::GdPmf;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AhError {
    #[error("quarter line {0} must be split before leg settlement")]
    QuarterLine(HandicapLine),
    #[error("line {0} is not a quarter line")]
    NotQuarter(HandicapLine),
    #[error("handicap {0} is not a multiple of 0.25")]
    NotQuarterMultiple(f64),
    #[error("decimal odds must exceed 1.0, got {0}")]
    InvalidOdds(f64),
    #[error("stake must be positive, got {0}")]
    InvalidStake(f64),
    #[error("line {0} voids with certainty; win probability undefined")]
    CertainVoid(HandicapLine),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    Home,
    Away,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Home => Side::Away,
            Side::Away => Side::Home,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Home => "home",
            Side::Away => "away",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineKind {
    Whole,
    Half,
    Quarter,
}

/// A handicap in quarter-goals, applied to the home team (negative = home gives goals).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HandicapLine(pub i32);

impl HandicapLine {
    pub fn from_quarters(quarter_units: i32) -> Self {
        Self(quarter_units)
    }

    /// Converts a decimal handicap such as `-0.75`; rejects anything off the quarter grid.
    pub fn from_goals(goals: f64) -> Result<Self, AhError> {
        let scaled = goals * 4.0;
        let rounded = scaled.round();
        if !goals.is_finite() || (scaled - rounded).abs() > 1e-6 {
            return Err(AhError::NotQuarterMultiple(goals));
        }
        Ok(Self(rounded as i32))
    }

    pub fn quarter_units(self) -> i32 {
        self.0
    }

    pub fn goals(self) -> f64 {
        self.0 as f64 / 4.0
    }

    pub fn kind(self) -> LineKind {
        if self.0 % 4 == 0 {
            LineKind::Whole
        } else if self.0 % 2 == 0 {
            LineKind::Half
        } else {
            LineKind::Quarter
        }
    }

    pub fn is_quarter(self) -> bool {
        self.kind() == LineKind::Quarter
    }
}

impl fmt::Display for HandicapLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.goals())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LegOutcome {
    Win,
    Lose,
    Void,
}

/// Average or best-price odds on both sides of one handicap line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AhQuote {
    pub odds_home: f64,
    pub odds_away: f64,
}

impl AhQuote {
    pub fn new(odds_home: f64, odds_away: f64) -> Result<Self, AhError> {
        check_odds(odds_home)?;
        check_odds(odds_away)?;
        Ok(Self {
            odds_home,
            odds_away,
        })
    }

    pub fn odds(&self, side: Side) -> f64 {
        match side {
            Side::Home => self.odds_home,
            Side::Away => self.odds_away,
        }
    }
}

fn check_odds(odds: f64) -> Result<(), AhError> {
    if odds.is_finite() && odds > 1.0 {
        Ok(())
    } else {
        Err(AhError::InvalidOdds(odds))
    }
}

/// Settlement score in quarter-goals from the home side: `4·gd + line`.
pub fn settlement_quarters(gd: i32, line: HandicapLine) -> i32 {
    4 * gd + line.0
}

/// Settles one whole- or half-line leg.
pub fn settle_leg(gd: i32, line: HandicapLine, side: Side) -> Result<LegOutcome, AhError> {
    if line.is_quarter() {
        return Err(AhError::QuarterLine(line));
    }
    let score = match side {
        Side::Home => settlement_quarters(gd, line),
        Side::Away => -settlement_quarters(gd, line),
    };
    Ok(match score.signum() {
        1 => LegOutcome::Win,
        0 => LegOutcome::Void,
        _ => LegOutcome::Lose,
    })
}

/// The two adjacent whole/half lines a quarter line splits into, lower first.
pub fn split_quarter(line: HandicapLine) -> Result<(HandicapLine, HandicapLine), AhError> {
    if !line.is_quarter() {
        return Err(AhError::NotQuarter(line));
    }
    Ok((HandicapLine(line.0 - 1), HandicapLine(line.0 + 1)))
}

fn leg_return(outcome: LegOutcome, stake: f64, odds: f64) -> f64 {
    match outcome {
        LegOutcome::Win => stake * odds,
        LegOutcome::Void => stake,
        LegOutcome::Lose => 0.0,
    }
}

/// Total amount returned (stake included) for a bet on `side` at `line`.
pub fn settle_bet(
    gd: i32,
    line: HandicapLine,
    side: Side,
    stake: f64,
    odds: f64,
) -> Result<f64, AhError> {
    if !(stake.is_finite() && stake > 0.0) {
        return Err(AhError::InvalidStake(stake));
    }
    check_odds(odds)?;
    if line.is_quarter() {
        let (lo, hi) = split_quarter(line)?;
        let half = stake / 2.0;
        Ok(leg_return(settle_leg(gd, lo, side)?, half, odds)
            + leg_return(settle_leg(gd, hi, side)?, half, odds))
    } else {
        Ok(leg_return(settle_leg(gd, line, side)?, stake, odds))
    }
}

fn leg_model_prob(pmf: &GdPmf, line: HandicapLine, side: Side) -> Result<f64, AhError> {
    let win = pmf.mass_where(|gd| settle_leg(gd, line, side) == Ok(LegOutcome::Win));
    match line.kind() {
        LineKind::Half => Ok(win),
        LineKind::Whole => {
            let void = pmf.mass_where(|gd| settlement_quarters(gd, line) == 0);
            let live = 1.0 - void;
            if live <= 0.0 {
                return Err(AhError::CertainVoid(line));
            }
            Ok(win / live)
        }
        LineKind::Quarter => unreachable!("quarter lines are split by the caller"),
    }
}

/// Model probability that `side` wins at `line`, voids removed and renormalized.
///
/// Quarter lines take the mean of the two split legs.
pub fn ah_model_prob(pmf: &GdPmf, line: HandicapLine, side: Side) -> Result<f64, AhError> {
    if line.is_quarter() {
        let (lo, hi) = split_quarter(line)?;
        Ok(0.5 * (leg_model_prob(pmf, lo, side)? + leg_model_prob(pmf, hi, side)?))
    } else {
        leg_model_prob(pmf, line, side)
    }
}

/// Unnormalized bookmaker probability, `1/odds`.
pub fn implied_prob(odds: f64) -> Result<f64, AhError> {
    check_odds(odds)?;
    Ok(1.0 / odds)
}

/// Binary handicap result used for scoring.
///
/// Quarter lines resolve on their half-goal leg; whole-line voids give `None`.
pub fn binary_outcome(gd: i32, line: HandicapLine) -> Option<Side> {
    let decisive = if line.is_quarter() {
        let (lo, hi) = split_quarter(line).expect("quarter");
        if lo.kind() == LineKind::Half {
            lo
        } else {
            hi
        }
    } else {
        line
    };
    match settle_leg(gd, decisive, Side::Home).expect("non-quarter") {
        LegOutcome::Win => Some(Side::Home),
        LegOutcome::Lose => Some(Side::Away),
        LegOutcome::Void => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(goals: f64) -> HandicapLine {
        HandicapLine::from_goals(goals).unwrap()
    }

    #[test]
    fn line_classification() {
        assert_eq!(q(-1.0).kind(), LineKind::Whole);
        assert_eq!(q(0.0).kind(), LineKind::Whole);
        assert_eq!(q(-1.5).kind(), LineKind::Half);
        assert_eq!(q(-0.25).kind(), LineKind::Quarter);
        assert_eq!(q(1.25).kind(), LineKind::Quarter);
        assert_eq!(q(-1.0).quarter_units(), -4);
        assert!(HandicapLine::from_goals(0.3).is_err());
    }

    #[test]
    fn leg_settlement_examples() {
        assert_eq!(settle_leg(1, q(-1.0), Side::Home), Ok(LegOutcome::Void));
        assert_eq!(settle_leg(1, q(-1.0), Side::Away), Ok(LegOutcome::Void));
        assert_eq!(settle_leg(2, q(-1.0), Side::Home), Ok(LegOutcome::Win));
        assert_eq!(settle_leg(1, q(-1.5), Side::Home), Ok(LegOutcome::Lose));
        assert_eq!(settle_leg(1, q(-1.5), Side::Away), Ok(LegOutcome::Win));
        assert_eq!(
            settle_leg(0, q(-0.25), Side::Home),
            Err(AhError::QuarterLine(q(-0.25)))
        );
    }

    #[test]
    fn quarter_split_examples() {
        assert_eq!(split_quarter(q(-0.25)), Ok((q(-0.5), q(0.0))));
        assert_eq!(split_quarter(q(-0.75)), Ok((q(-1.0), q(-0.5))));
        assert_eq!(split_quarter(q(1.25)), Ok((q(1.0), q(1.5))));
        assert!(split_quarter(q(-1.0)).is_err());
    }

    #[test]
    fn bet_settlement_examples() {
        let r = settle_bet(1, q(-0.75), Side::Home, 1.0, 1.85).unwrap();
        assert!((r - 1.425).abs() < 1e-12);
        let r = settle_bet(1, q(-1.25), Side::Home, 1.0, 2.01).unwrap();
        assert!((r - 0.5).abs() < 1e-12);
        assert_eq!(settle_bet(0, q(0.0), Side::Home, 1.0, 1.55).unwrap(), 1.0);
        // 0-0 at -0.25 backing the away side: void half plus winning half at 1.66.
        let r = settle_bet(0, q(-0.25), Side::Away, 10.0, 1.66).unwrap();
        assert!((r - (5.0 + 8.3)).abs() < 1e-9);
        assert!(settle_bet(0, q(0.0), Side::Home, 0.0, 1.5).is_err());
        assert!(settle_bet(0, q(0.0), Side::Home, 1.0, 1.0).is_err());
    }

    #[test]
    fn model_prob_examples() {
        let pmf = GdPmf::from_pairs([(2, 0.4), (1, 0.3), (0, 0.2), (-1, 0.1)]);
        let p = ah_model_prob(&pmf, q(-1.0), Side::Home).unwrap();
        assert!((p - 0.4 / 0.7).abs() < 1e-12);

        let sym = GdPmf::from_pairs([(-1, 0.3), (0, 0.4), (1, 0.3)]);
        assert!((ah_model_prob(&sym, q(0.0), Side::Home).unwrap() - 0.5).abs() < 1e-12);
        assert!((ah_model_prob(&sym, q(0.0), Side::Away).unwrap() - 0.5).abs() < 1e-12);

        let sure = GdPmf::point(1);
        assert_eq!(ah_model_prob(&sure, q(-1.5), Side::Home).unwrap(), 0.0);
        assert_eq!(
            ah_model_prob(&GdPmf::point(1), q(-1.0), Side::Home),
            Err(AhError::CertainVoid(q(-1.0)))
        );
    }

    #[test]
    fn implied_prob_examples() {
        assert_eq!(implied_prob(2.0).unwrap(), 0.5);
        assert_eq!((implied_prob(1.96).unwrap() * 100.0).round() / 100.0, 0.51);
        assert_eq!((implied_prob(4.23).unwrap() * 100.0).round() / 100.0, 0.24);
        assert!(implied_prob(1.0).is_err());
        assert!(implied_prob(0.5).is_err());
    }

    #[test]
    fn binary_outcome_rules() {
        assert_eq!(binary_outcome(1, q(-1.0)), None);
        assert_eq!(binary_outcome(2, q(-1.0)), Some(Side::Home));
        // 1-1 at -0.25: whole leg void, half leg to the away side.
        assert_eq!(binary_outcome(0, q(-0.25)), Some(Side::Away));
        assert_eq!(binary_outcome(1, q(-0.75)), Some(Side::Home));
    }
}
