//! Match data: parsing, validation, possession join and artifact persistence.

mod artifact;
mod football_data;
mod possession;

use std::collections::HashSet;
use std::path::PathBuf;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ah::{AhQuote, HandicapLine, Side};
use crate::metrics::Outcome1x2;

pub use artifact::{
    load_artifact, read_artifact, save_artifact, write_artifact, Artifact, ArtifactError,
    ARTIFACT_FORMAT, ARTIFACT_VERSION,
};
pub use football_data::{
    load_dataset, parse_date, parse_match_csv, parse_match_reader, write_match_csv, Column,
    ColumnMap,
};
pub use possession::{
    merge_possession, merge_possession_reader, write_possession_csv, MergeReport, PossessionRow,
};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{source_name}: {source}")]
    Csv {
        source_name: String,
        #[source]
        source: csv::Error,
    },
    #[error("{source_name}: header has no column for {column:?} (tried {aliases:?})")]
    MissingColumn {
        source_name: String,
        column: Column,
        aliases: Vec<String>,
    },
    #[error("{source_name} line {line}: malformed {column:?} value {value:?}")]
    Malformed {
        source_name: String,
        line: u64,
        column: Column,
        value: String,
    },
    #[error("{source_name} line {line}: {reason}")]
    InvalidRow {
        source_name: String,
        line: u64,
        reason: InvalidRecord,
    },
    #[error("{source_name} line {line}: possession {value} outside [0, 100]")]
    PossessionRange {
        source_name: String,
        line: u64,
        value: f64,
    },
    #[error("ambiguous fixture key {date} {home} v {away}")]
    AmbiguousKey {
        date: NaiveDate,
        home: String,
        away: String,
    },
    #[error("duplicate match id {0}")]
    DuplicateMatch(String),
    #[error("match {match_id}: {reason}")]
    Invalid {
        match_id: String,
        reason: InvalidRecord,
    },
}

/// Reasons a record breaks a [`MatchRecord`] invariant.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum InvalidRecord {
    #[error("{field} odds {value} must exceed 1.0")]
    Odds { field: &'static str, value: f64 },
    #[error("{side} shots on target {sot} exceed shots {shots}")]
    SotAboveShots { side: Side, sot: u32, shots: u32 },
    #[error("{side} goals {goals} exceed shots on target {sot}")]
    GoalsAboveSot { side: Side, goals: u32, sot: u32 },
    #[error("home possession {0} outside [0, 1]")]
    Possession(f64),
    #[error("empty team name")]
    EmptyTeam,
}

/// Decimal 1X2 odds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Odds1x2 {
    pub home: f64,
    pub draw: f64,
    pub away: f64,
}

impl Odds1x2 {
    pub fn new(home: f64, draw: f64, away: f64) -> Self {
        Self { home, draw, away }
    }

    pub fn get(&self, outcome: Outcome1x2) -> f64 {
        match outcome {
            Outcome1x2::Home => self.home,
            Outcome1x2::Draw => self.draw,
            Outcome1x2::Away => self.away,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.home, self.draw, self.away]
    }

    /// Σ 1/odds − 1.
    pub fn overround(&self) -> f64 {
        self.as_array().iter().map(|o| 1.0 / o).sum::<f64>() - 1.0
    }
}

/// One fixture with its result, match statistics and market odds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub match_id: String,
    pub date: NaiveDate,
    pub season: String,
    pub home_team: String,
    pub away_team: String,
    pub home_goals: u32,
    pub away_goals: u32,
    /// Fraction in `[0, 1]`.
    pub home_possession: Option<f64>,
    pub home_shots: Option<u32>,
    pub away_shots: Option<u32>,
    pub home_sot: Option<u32>,
    pub away_sot: Option<u32>,
    pub odds_1x2_avg: Option<Odds1x2>,
    pub odds_1x2_max: Option<Odds1x2>,
    pub ah_line: Option<HandicapLine>,
    pub odds_ah_avg: Option<AhQuote>,
    pub odds_ah_max: Option<AhQuote>,
}

impl MatchRecord {
    /// A record with result only; everything optional left absent.
    pub fn new(
        date: NaiveDate,
        home_team: impl Into<String>,
        away_team: impl Into<String>,
        home_goals: u32,
        away_goals: u32,
    ) -> Self {
        let home_team = home_team.into();
        let away_team = away_team.into();
        Self {
            match_id: match_id(date, &home_team, &away_team),
            season: season_of(date),
            date,
            home_team,
            away_team,
            home_goals,
            away_goals,
            home_possession: None,
            home_shots: None,
            away_shots: None,
            home_sot: None,
            away_sot: None,
            odds_1x2_avg: None,
            odds_1x2_max: None,
            ah_line: None,
            odds_ah_avg: None,
            odds_ah_max: None,
        }
    }

    pub fn validate(&self) -> Result<(), InvalidRecord> {
        if self.home_team.trim().is_empty() || self.away_team.trim().is_empty() {
            return Err(InvalidRecord::EmptyTeam);
        }
        let odds = [
            ("1x2 average", self.odds_1x2_avg.map(|o| o.as_array().to_vec())),
            ("1x2 maximum", self.odds_1x2_max.map(|o| o.as_array().to_vec())),
            ("AH average", self.odds_ah_avg.map(|q| vec![q.odds_home, q.odds_away])),
            ("AH maximum", self.odds_ah_max.map(|q| vec![q.odds_home, q.odds_away])),
        ];
        for (field, values) in odds {
            for value in values.into_iter().flatten() {
                if !(value.is_finite() && value > 1.0) {
                    return Err(InvalidRecord::Odds { field, value });
                }
            }
        }
        let sides = [
            (Side::Home, self.home_goals, self.home_shots, self.home_sot),
            (Side::Away, self.away_goals, self.away_shots, self.away_sot),
        ];
        for (side, goals, shots, sot) in sides {
            if let (Some(shots), Some(sot)) = (shots, sot) {
                if sot > shots {
                    return Err(InvalidRecord::SotAboveShots { side, sot, shots });
                }
            }
            if let Some(sot) = sot {
                if goals > sot {
                    return Err(InvalidRecord::GoalsAboveSot { side, goals, sot });
                }
            }
        }
        if let Some(p) = self.home_possession {
            if !(0.0..=1.0).contains(&p) {
                return Err(InvalidRecord::Possession(p));
            }
        }
        Ok(())
    }

    pub fn goal_difference(&self) -> i32 {
        self.home_goals as i32 - self.away_goals as i32
    }

    pub fn outcome(&self) -> Outcome1x2 {
        Outcome1x2::from_goals(self.home_goals, self.away_goals)
    }

    pub fn odds_1x2(&self, source: OddsSource) -> Option<Odds1x2> {
        match source {
            OddsSource::Average => self.odds_1x2_avg,
            OddsSource::Maximum => self.odds_1x2_max,
        }
    }

    pub fn odds_ah(&self, source: OddsSource) -> Option<AhQuote> {
        match source {
            OddsSource::Average => self.odds_ah_avg,
            OddsSource::Maximum => self.odds_ah_max,
        }
    }

    /// True when possession, shots and shots on target are all present.
    pub fn has_match_stats(&self) -> bool {
        self.home_possession.is_some()
            && self.home_shots.is_some()
            && self.away_shots.is_some()
            && self.home_sot.is_some()
            && self.away_sot.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OddsSource {
    Average,
    Maximum,
}

impl OddsSource {
    pub fn label(self) -> &'static str {
        match self {
            OddsSource::Average => "avg",
            OddsSource::Maximum => "max",
        }
    }
}

/// Stable key `YYYY-MM-DD_Home_Away`.
pub fn match_id(date: NaiveDate, home: &str, away: &str) -> String {
    format!("{}_{}_{}", date.format("%Y-%m-%d"), home.trim(), away.trim())
}

/// August–July season label, e.g. `2010/11` for any date from Aug 2010 to Jul 2011.
pub fn season_of(date: NaiveDate) -> String {
    let start = if date.month() >= 8 {
        date.year()
    } else {
        date.year() - 1
    };
    format!("{}/{:02}", start, (start + 1).rem_euclid(100))
}

/// SHA-256 of one input file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceDigest {
    pub name: String,
    pub sha256: String,
}

impl SourceDigest {
    pub fn of_bytes(name: impl Into<String>, bytes: &[u8]) -> Self {
        Self {
            name: name.into(),
            sha256: hex::encode(Sha256::digest(bytes)),
        }
    }
}

/// Validated, chronologically ordered matches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDataset")]
pub struct Dataset {
    matches: Vec<MatchRecord>,
    provenance: Vec<SourceDigest>,
}

#[derive(Deserialize)]
struct RawDataset {
    matches: Vec<MatchRecord>,
    provenance: Vec<SourceDigest>,
}

impl TryFrom<RawDataset> for Dataset {
    type Error = IngestError;

    fn try_from(raw: RawDataset) -> Result<Self, Self::Error> {
        Dataset::new(raw.matches, raw.provenance)
    }
}

impl Dataset {
    /// Validates every record, sorts by `(date, match_id)` and rejects duplicate ids.
    pub fn new(
        mut matches: Vec<MatchRecord>,
        provenance: Vec<SourceDigest>,
    ) -> Result<Self, IngestError> {
        for m in &matches {
            m.validate().map_err(|reason| IngestError::Invalid {
                match_id: m.match_id.clone(),
                reason,
            })?;
        }
        matches.sort_by(|a, b| (a.date, &a.match_id).cmp(&(b.date, &b.match_id)));
        let mut seen = HashSet::with_capacity(matches.len());
        for m in &matches {
            if !seen.insert(m.match_id.as_str()) {
                return Err(IngestError::DuplicateMatch(m.match_id.clone()));
            }
        }
        Ok(Self {
            matches,
            provenance,
        })
    }

    pub fn from_matches(matches: Vec<MatchRecord>) -> Result<Self, IngestError> {
        Self::new(matches, Vec::new())
    }

    pub fn empty() -> Self {
        Self {
            matches: Vec::new(),
            provenance: Vec::new(),
        }
    }

    pub fn matches(&self) -> &[MatchRecord] {
        &self.matches
    }

    pub fn provenance(&self) -> &[SourceDigest] {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.matches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matches.is_empty()
    }

    pub fn into_matches(self) -> Vec<MatchRecord> {
        self.matches
    }

    /// Distinct season labels in chronological order.
    pub fn seasons(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for m in &self.matches {
            if !out.contains(&m.season) {
                out.push(m.season.clone());
            }
        }
        out
    }

    /// SHA-256 over the canonical serialization of the matches.
    pub fn digest(&self) -> String {
        let body = serde_json::to_vec(&self.matches).expect("match records serialize");
        hex::encode(Sha256::digest(&body))
    }
}

impl Artifact for Dataset {
    const KIND: &'static str = "dataset";
}
