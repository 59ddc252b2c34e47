//! Rating difference levels.

use serde::{Deserialize, Serialize};

/// Number of rating difference levels.
pub const RDL_LEVELS: usize = 23;

/// Width of every bounded level, in goals.
pub const RDL_WIDTH: f64 = 0.165;

/// Lower bound of level `level` in 1..=22, computed in thousandths so bounds are exact decimals.
fn lower_bound(level: usize) -> f64 {
    (2095 - 165 * (level as i64 - 1)) as f64 / 1000.0
}

/// Level 1..=23 containing `rd`. Intervals are `[lower, upper)`, so a
/// boundary value belongs to the higher rating difference.
pub fn assign_rdl(rd: f64) -> usize {
    (1..RDL_LEVELS)
        .find(|&l| rd >= lower_bound(l))
        .unwrap_or(RDL_LEVELS)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RdlLevel {
    pub level: usize,
    /// `None` for the open-below bottom level.
    pub lower: Option<f64>,
    /// `None` for the open-above top level.
    pub upper: Option<f64>,
    pub count: usize,
}

impl RdlLevel {
    pub fn contains(&self, rd: f64) -> bool {
        self.lower.is_none_or(|lo| rd >= lo) && self.upper.is_none_or(|hi| rd < hi)
    }

    /// Representative rating difference: interval midpoint, or one width
    /// past the finite edge for the open levels.
    pub fn midpoint(&self) -> f64 {
        match (self.lower, self.upper) {
            (Some(lo), Some(hi)) => 0.5 * (lo + hi),
            (Some(lo), None) => lo + 0.5 * RDL_WIDTH,
            (None, Some(hi)) => hi - 0.5 * RDL_WIDTH,
            (None, None) => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RdlTable {
    pub levels: Vec<RdlLevel>,
}

impl Default for RdlTable {
    fn default() -> Self {
        let levels = (1..=RDL_LEVELS)
            .map(|l| RdlLevel {
                level: l,
                lower: (l < RDL_LEVELS).then(|| lower_bound(l)),
                upper: (l > 1).then(|| lower_bound(l - 1)),
                count: 0,
            })
            .collect();
        Self { levels }
    }
}

impl RdlTable {
    /// Table with counts of `rds` per level.
    pub fn with_counts(rds: impl IntoIterator<Item = f64>) -> Self {
        let mut t = Self::default();
        for rd in rds {
            t.levels[assign_rdl(rd) - 1].count += 1;
        }
        t
    }

    pub fn level(&self, level: usize) -> &RdlLevel {
        &self.levels[level - 1]
    }
}
