//! football-data.co.uk style results files.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use super::{
    match_id, merge_possession, season_of, Dataset, IngestError, MatchRecord, Odds1x2,
    SourceDigest,
};
use crate::ah::{AhQuote, HandicapLine};

/// Canonical columns the parser understands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Column {
    Date,
    Season,
    HomeTeam,
    AwayTeam,
    HomeGoals,
    AwayGoals,
    HomeShots,
    AwayShots,
    HomeSot,
    AwaySot,
    AvgHome,
    AvgDraw,
    AvgAway,
    MaxHome,
    MaxDraw,
    MaxAway,
    AhLine,
    AhAvgHome,
    AhAvgAway,
    AhMaxHome,
    AhMaxAway,
    /// Possession sidecar percentage; never read from results files.
    HomePossession,
}

const MANDATORY: [Column; 5] = [
    Column::Date,
    Column::HomeTeam,
    Column::AwayTeam,
    Column::HomeGoals,
    Column::AwayGoals,
];

/// Source header names for each canonical column, tried in order.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnMap {
    aliases: BTreeMap<Column, Vec<String>>,
}

impl Default for ColumnMap {
    /// Names used by football-data.co.uk before and after its 2019 column rename.
    fn default() -> Self {
        use Column::*;
        let table: &[(Column, &[&str])] = &[
            (Date, &["Date"]),
            (Season, &["Season"]),
            (HomeTeam, &["HomeTeam", "Home", "HT"]),
            (AwayTeam, &["AwayTeam", "Away", "AT"]),
            (HomeGoals, &["FTHG", "HG"]),
            (AwayGoals, &["FTAG", "AG"]),
            (HomeShots, &["HS"]),
            (AwayShots, &["AS"]),
            (HomeSot, &["HST"]),
            (AwaySot, &["AST"]),
            (AvgHome, &["AvgH", "BbAvH"]),
            (AvgDraw, &["AvgD", "BbAvD"]),
            (AvgAway, &["AvgA", "BbAvA"]),
            (MaxHome, &["MaxH", "BbMxH"]),
            (MaxDraw, &["MaxD", "BbMxD"]),
            (MaxAway, &["MaxA", "BbMxA"]),
            (AhLine, &["AHh", "BbAHh"]),
            (AhAvgHome, &["AvgAHH", "BbAvAHH"]),
            (AhAvgAway, &["AvgAHA", "BbAvAHA"]),
            (AhMaxHome, &["MaxAHH", "BbMxAHH"]),
            (AhMaxAway, &["MaxAHA", "BbMxAHA"]),
        ];
        Self {
            aliases: table
                .iter()
                .map(|(c, names)| (*c, names.iter().map(|s| s.to_string()).collect()))
                .collect(),
        }
    }
}

impl ColumnMap {
    /// Adds `name` as the highest-priority alias for `column`.
    pub fn with_alias(mut self, column: Column, name: impl Into<String>) -> Self {
        self.aliases.entry(column).or_default().insert(0, name.into());
        self
    }

    pub fn aliases(&self, column: Column) -> &[String] {
        self.aliases.get(&column).map(Vec::as_slice).unwrap_or(&[])
    }

    fn resolve(&self, headers: &csv::StringRecord) -> HashMap<Column, usize> {
        let positions: HashMap<&str, usize> = headers
            .iter()
            .enumerate()
            .map(|(i, h)| (h.trim(), i))
            .collect();
        self.aliases
            .iter()
            .filter_map(|(col, names)| {
                names
                    .iter()
                    .find_map(|n| positions.get(n.as_str()).copied())
                    .map(|i| (*col, i))
            })
            .collect()
    }
}

/// Parses `DD/MM/YY`, `DD/MM/YYYY` or ISO `YYYY-MM-DD`.
pub fn parse_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    if s.contains('-') {
        return NaiveDate::parse_from_str(s, "%Y-%m-%d").ok();
    }
    let year_len = s.rsplit('/').next()?.len();
    let fmt = if year_len == 4 { "%d/%m/%Y" } else { "%d/%m/%y" };
    NaiveDate::parse_from_str(s, fmt).ok()
}

struct Row<'a> {
    source_name: &'a str,
    line: u64,
    record: &'a csv::StringRecord,
    columns: &'a HashMap<Column, usize>,
}

impl Row<'_> {
    fn cell(&self, col: Column) -> Option<&str> {
        let i = *self.columns.get(&col)?;
        let v = self.record.get(i)?.trim();
        (!v.is_empty()).then_some(v)
    }

    fn malformed(&self, col: Column, value: &str) -> IngestError {
        IngestError::Malformed {
            source_name: self.source_name.to_string(),
            line: self.line,
            column: col,
            value: value.to_string(),
        }
    }

    fn required(&self, col: Column) -> Result<&str, IngestError> {
        self.cell(col).ok_or_else(|| self.malformed(col, ""))
    }

    fn count(&self, col: Column) -> Result<Option<u32>, IngestError> {
        self.cell(col)
            .map(|v| parse_count(v).ok_or_else(|| self.malformed(col, v)))
            .transpose()
    }

    fn real(&self, col: Column) -> Result<Option<f64>, IngestError> {
        self.cell(col)
            .map(|v| match v.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(x),
                _ => Err(self.malformed(col, v)),
            })
            .transpose()
    }

    /// All of `cols` present, or none.
    fn reals<const N: usize>(&self, cols: [Column; N]) -> Result<Option<[f64; N]>, IngestError> {
        let mut out = [0.0; N];
        for (slot, col) in out.iter_mut().zip(cols) {
            match self.real(col)? {
                Some(x) => *slot = x,
                None => return Ok(None),
            }
        }
        Ok(Some(out))
    }
}

// Some exports write integer counts as "2.0".
fn parse_count(v: &str) -> Option<u32> {
    v.parse::<u32>().ok().or_else(|| {
        let x = v.parse::<f64>().ok()?;
        (x >= 0.0 && x.fract() == 0.0 && x <= u32::MAX as f64).then_some(x as u32)
    })
}

/// Parses one results file from a reader. `source_name` only labels errors.
pub fn parse_match_reader<R: Read>(
    reader: R,
    source_name: &str,
    column_map: &ColumnMap,
) -> Result<Vec<MatchRecord>, IngestError> {
    let csv_err = |source| IngestError::Csv {
        source_name: source_name.to_string(),
        source,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let columns = column_map.resolve(&headers);
    for col in MANDATORY {
        if !columns.contains_key(&col) {
            return Err(IngestError::MissingColumn {
                source_name: source_name.to_string(),
                column: col,
                aliases: column_map.aliases(col).to_vec(),
            });
        }
    }

    let mut out = Vec::new();
    for result in rdr.records() {
        let record = result.map_err(csv_err)?;
        if record.iter().all(|c| c.trim().is_empty()) {
            continue;
        }
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let row = Row {
            source_name,
            line,
            record: &record,
            columns: &columns,
        };
        out.push(parse_row(&row)?);
    }
    Ok(out)
}

fn parse_row(row: &Row<'_>) -> Result<MatchRecord, IngestError> {
    use Column::*;
    let date_raw = row.required(Date)?;
    let date = parse_date(date_raw).ok_or_else(|| row.malformed(Date, date_raw))?;
    let home_team = row.required(HomeTeam)?.to_string();
    let away_team = row.required(AwayTeam)?.to_string();
    let goals = |col| {
        let v = row.required(col)?;
        parse_count(v).ok_or_else(|| row.malformed(col, v))
    };
    let ah_line = row
        .real(AhLine)?
        .map(|x| HandicapLine::from_goals(x).map_err(|_| row.malformed(AhLine, &x.to_string())))
        .transpose()?;
    let quote = |[h, a]: [f64; 2]| AhQuote {
        odds_home: h,
        odds_away: a,
    };

    let record = MatchRecord {
        match_id: match_id(date, &home_team, &away_team),
        season: row
            .cell(Season)
            .map(str::to_string)
            .unwrap_or_else(|| season_of(date)),
        date,
        home_goals: goals(HomeGoals)?,
        away_goals: goals(AwayGoals)?,
        home_team,
        away_team,
        home_possession: None,
        home_shots: row.count(HomeShots)?,
        away_shots: row.count(AwayShots)?,
        home_sot: row.count(HomeSot)?,
        away_sot: row.count(AwaySot)?,
        odds_1x2_avg: row
            .reals([AvgHome, AvgDraw, AvgAway])?
            .map(|[h, d, a]| Odds1x2::new(h, d, a)),
        odds_1x2_max: row
            .reals([MaxHome, MaxDraw, MaxAway])?
            .map(|[h, d, a]| Odds1x2::new(h, d, a)),
        ah_line,
        odds_ah_avg: row.reals([AhAvgHome, AhAvgAway])?.map(quote),
        odds_ah_max: row.reals([AhMaxHome, AhMaxAway])?.map(quote),
    };
    record.validate().map_err(|reason| IngestError::InvalidRow {
        source_name: row.source_name.to_string(),
        line: row.line,
        reason,
    })?;
    Ok(record)
}

fn read_file(path: &Path) -> Result<Vec<u8>, IngestError> {
    fs::read(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses one results file.
pub fn parse_match_csv(
    path: impl AsRef<Path>,
    column_map: &ColumnMap,
) -> Result<Vec<MatchRecord>, IngestError> {
    let path = path.as_ref();
    let bytes = read_file(path)?;
    parse_match_reader(bytes.as_slice(), &path.display().to_string(), column_map)
}

/// Parses several results files, optionally joins a possession sidecar, and
/// builds a [`Dataset`] whose provenance lists every input digest.
pub fn load_dataset(
    csvs: &[PathBuf],
    sidecar: Option<&Path>,
    column_map: &ColumnMap,
) -> Result<(Dataset, Option<super::MergeReport>), IngestError> {
    let mut matches = Vec::new();
    let mut provenance = Vec::new();
    for path in csvs {
        let bytes = read_file(path)?;
        provenance.push(SourceDigest::of_bytes(file_label(path), &bytes));
        matches.extend(parse_match_reader(
            bytes.as_slice(),
            &path.display().to_string(),
            column_map,
        )?);
    }
    let report = match sidecar {
        Some(path) => {
            let bytes = read_file(path)?;
            provenance.push(SourceDigest::of_bytes(file_label(path), &bytes));
            let (merged, report) = merge_possession(matches, path)?;
            matches = merged;
            Some(report)
        }
        None => None,
    };
    Ok((Dataset::new(matches, provenance)?, report))
}

fn file_label(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Writes matches in the football-data layout this module reads, with ISO
/// dates. Possession is not part of the layout; see
/// [`write_possession_csv`](super::possession::write_possession_csv).
pub fn write_match_csv<W: Write>(out: W, matches: &[MatchRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "Date", "HomeTeam", "AwayTeam", "FTHG", "FTAG", "HS", "AS", "HST", "AST", "AvgH", "AvgD",
        "AvgA", "MaxH", "MaxD", "MaxA", "AHh", "AvgAHH", "AvgAHA", "MaxAHH", "MaxAHA",
    ])?;
    fn opt<T: ToString>(x: Option<T>) -> String {
        x.map(|v| v.to_string()).unwrap_or_default()
    }
    for m in matches {
        let mut row = vec![
            m.date.to_string(),
            m.home_team.clone(),
            m.away_team.clone(),
            m.home_goals.to_string(),
            m.away_goals.to_string(),
            opt(m.home_shots),
            opt(m.away_shots),
            opt(m.home_sot),
            opt(m.away_sot),
        ];
        for o in [m.odds_1x2_avg, m.odds_1x2_max] {
            row.extend([opt(o.map(|o| o.home)), opt(o.map(|o| o.draw)), opt(o.map(|o| o.away))]);
        }
        row.push(opt(m.ah_line.map(|l| l.goals())));
        for q in [m.odds_ah_avg, m.odds_ah_max] {
            row.extend([opt(q.map(|q| q.odds_home)), opt(q.map(|q| q.odds_away))]);
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
