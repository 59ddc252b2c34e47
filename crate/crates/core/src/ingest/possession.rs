//! Possession sidecar join.
//!
//! The sidecar is CSV `date,home_team,away_team,home_possession_pct`. Rows are
//! keyed on `(date, home, away)`; a key that resolves to more than one fixture
//! is an error rather than a guess.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{parse_date, IngestError, MatchRecord};

/// One sidecar row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PossessionRow {
    pub line: u64,
    pub date: NaiveDate,
    pub home_team: String,
    pub away_team: String,
    pub home_possession_pct: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MergeReport {
    pub matched: usize,
    /// Sidecar rows with no fixture.
    pub unmatched: Vec<PossessionRow>,
}

type Key = (NaiveDate, String, String);

fn key(date: NaiveDate, home: &str, away: &str) -> Key {
    (date, home.trim().to_string(), away.trim().to_string())
}

fn read_rows<R: Read>(reader: R, source_name: &str) -> Result<Vec<PossessionRow>, IngestError> {
    let csv_err = |source| IngestError::Csv {
        source_name: source_name.to_string(),
        source,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows = Vec::new();
    for result in rdr.records() {
        let rec = result.map_err(csv_err)?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let malformed = |column, value: &str| IngestError::Malformed {
            source_name: source_name.to_string(),
            line,
            column,
            value: value.to_string(),
        };
        let get = |i: usize| rec.get(i).unwrap_or("");
        let date = parse_date(get(0)).ok_or_else(|| malformed(super::Column::Date, get(0)))?;
        let pct: f64 = get(3)
            .parse()
            .map_err(|_| malformed(super::Column::HomePossession, get(3)))?;
        if !(0.0..=100.0).contains(&pct) {
            return Err(IngestError::PossessionRange {
                source_name: source_name.to_string(),
                line,
                value: pct,
            });
        }
        rows.push(PossessionRow {
            line,
            date,
            home_team: get(1).to_string(),
            away_team: get(2).to_string(),
            home_possession_pct: pct,
        });
    }
    Ok(rows)
}

/// Joins sidecar possession onto `matches` from a reader.
///
/// Matched records get `home_possession = pct / 100`, replacing any earlier
/// value, so applying the same sidecar twice changes nothing.
pub fn merge_possession_reader<R: Read>(
    mut matches: Vec<MatchRecord>,
    reader: R,
    source_name: &str,
) -> Result<(Vec<MatchRecord>, MergeReport), IngestError> {
    let rows = read_rows(reader, source_name)?;

    let mut index: HashMap<Key, usize> = HashMap::with_capacity(matches.len());
    let mut ambiguous: Vec<Key> = Vec::new();
    for (i, m) in matches.iter().enumerate() {
        let k = key(m.date, &m.home_team, &m.away_team);
        if index.insert(k.clone(), i).is_some() {
            ambiguous.push(k);
        }
    }

    let mut report = MergeReport::default();
    let mut seen: HashMap<Key, f64> = HashMap::new();
    for row in rows {
        let k = key(row.date, &row.home_team, &row.away_team);
        if ambiguous.contains(&k) {
            return Err(IngestError::AmbiguousKey {
                date: k.0,
                home: k.1,
                away: k.2,
            });
        }
        if let Some(prev) = seen.insert(k.clone(), row.home_possession_pct) {
            if prev != row.home_possession_pct {
                return Err(IngestError::AmbiguousKey {
                    date: k.0,
                    home: k.1,
                    away: k.2,
                });
            }
        }
        match index.get(&k) {
            Some(&i) => {
                matches[i].home_possession = Some(row.home_possession_pct / 100.0);
                report.matched += 1;
            }
            None => report.unmatched.push(row),
        }
    }
    Ok((matches, report))
}

/// Joins a possession sidecar file onto `matches`.
pub fn merge_possession(
    matches: Vec<MatchRecord>,
    sidecar: impl AsRef<Path>,
) -> Result<(Vec<MatchRecord>, MergeReport), IngestError> {
    let path = sidecar.as_ref();
    let bytes = std::fs::read(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    merge_possession_reader(matches, bytes.as_slice(), &path.display().to_string())
}

/// Sidecar rows for every match with possession, as percentages.
pub fn write_possession_csv<W: Write>(out: W, matches: &[MatchRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["date", "home_team", "away_team", "home_possession_pct"])?;
    for m in matches {
        if let Some(p) = m.home_possession {
            w.write_record([
                m.date.to_string(),
                m.home_team.clone(),
                m.away_team.clone(),
                (100.0 * p).to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
