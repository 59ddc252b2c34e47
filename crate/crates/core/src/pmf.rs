//! Goal-difference probability mass functions.

use serde::{Deserialize, Serialize};

/// Smallest goal difference represented; mass below is folded in here.
pub const MIN_GD: i32 = -15;
/// Largest goal difference represented; mass above is folded in here.
pub const MAX_GD: i32 = 15;

const WIDTH: usize = (MAX_GD - MIN_GD + 1) as usize;

/// Probability mass over home-minus-away goal difference on `[MIN_GD, MAX_GD]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GdPmf {
    probs: Vec<f64>,
}

impl GdPmf {
    /// Builds a pmf from `(gd, mass)` pairs, folding out-of-range entries into the extremes.
    /// The masses are taken as given; callers decide whether they are normalized.
    pub fn from_pairs<I: IntoIterator<Item = (i32, f64)>>(pairs: I) -> Self {
        let mut probs = vec![0.0; WIDTH];
        for (gd, mass) in pairs {
            probs[index(gd)] += mass;
        }
        Self { probs }
    }

    /// Empirical pmf from sample counts indexed by goal difference.
    pub fn from_counts(counts: &[u64; WIDTH], total: u64) -> Self {
        let n = total as f64;
        Self {
            probs: counts.iter().map(|&c| c as f64 / n).collect(),
        }
    }

    /// Point mass at `gd`.
    pub fn point(gd: i32) -> Self {
        Self::from_pairs([(gd, 1.0)])
    }

    pub fn prob(&self, gd: i32) -> f64 {
        if !(MIN_GD..=MAX_GD).contains(&gd) {
            return 0.0;
        }
        self.probs[index(gd)]
    }

    /// `(gd, probability)` over the full support range, zeros included.
    pub fn iter(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, &p)| (i as i32 + MIN_GD, p))
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.total() - 1.0).abs() <= tol
    }

    /// Sum of mass over goal differences satisfying `pred`.
    pub fn mass_where(&self, pred: impl Fn(i32) -> bool) -> f64 {
        self.iter().filter(|&(gd, _)| pred(gd)).map(|(_, p)| p).sum()
    }

    /// Home win / draw / away win probabilities.
    pub fn outcome_probs(&self) -> [f64; 3] {
        [
            self.mass_where(|gd| gd > 0),
            self.prob(0),
            self.mass_where(|gd| gd < 0),
        ]
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(gd, p)| gd as f64 * p).sum()
    }

    /// Total-variation distance, `0.5 * Σ |p - q|`.
    pub fn total_variation(&self, other: &GdPmf) -> f64 {
        0.5 * self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(p, q)| (p - q).abs())
            .sum::<f64>()
    }

    /// Reflects the distribution around zero (home and away swapped).
    pub fn mirrored(&self) -> Self {
        let mut probs = self.probs.clone();
        probs.reverse();
        Self { probs }
    }

    pub(crate) fn index_of(gd: i32) -> usize {
        index(gd)
    }
}

fn index(gd: i32) -> usize {
    (gd.clamp(MIN_GD, MAX_GD) - MIN_GD) as usize
}

/// Number of cells in a [`GdPmf`].
pub const GD_CELLS: usize = WIDTH;
