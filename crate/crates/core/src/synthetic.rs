//! Synthetic leagues with known team strengths.
//!
//! Every team has a latent strength that drifts between seasons. For a
//! fixture with strength gap `d` (home advantage included) the match is
//! played out by the same possession → shots → goals chain the network
//! models, with every rate a fixed function of `d`. Fair odds come from the
//! exact goal-difference distribution, shaded by a bookmaker margin.

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::ah::{ah_model_prob, AhQuote, HandicapLine, Side};
use crate::bn::{enumerate_forecast, PointChain, PointSide};
use crate::ingest::{Dataset, IngestError, MatchRecord, Odds1x2};
use crate::pmf::GdPmf;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub teams: usize,
    pub seasons: usize,
    pub start_year: i32,
    /// Stationary standard deviation of team strength.
    pub strength_sd: f64,
    /// Season-to-season autocorrelation of strength.
    pub persistence: f64,
    pub home_advantage: f64,
    /// Bookmaker overround applied to fair prices.
    pub margin: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            teams: 20,
            seasons: 10,
            start_year: 2000,
            strength_sd: 0.8,
            persistence: 0.9,
            home_advantage: 0.35,
            margin: 0.05,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticLeague {
    pub dataset: Dataset,
    /// `strengths[season][team]`.
    pub strengths: Vec<Vec<f64>>,
    pub teams: Vec<String>,
}

const MINUTES: u32 = 90;

/// Home possession share at strength gap `d`.
pub fn possession(d: f64) -> f64 {
    0.5 + 0.12 * (d / 1.5).tanh()
}

/// Per-side rates at strength gap `d`, seen from that side.
pub fn side_rates(d: f64) -> PointSide {
    PointSide {
        shot_rate: (0.28 * (0.3 * d).exp()).min(0.9),
        on_target: 0.35,
        conversion: (0.3 * (0.2 * d).exp()).min(0.9),
    }
}

/// The fixed chain that generates a fixture with strength gap `d`.
pub fn true_chain(d: f64) -> PointChain {
    PointChain::new(MINUTES, possession(d), side_rates(d), side_rates(-d))
}

/// Exact goal-difference distribution at strength gap `d`.
pub fn true_pmf(d: f64) -> GdPmf {
    enumerate_forecast(&true_chain(d), MINUTES).gd_pmf
}

/// Double round robin by the circle method: `2·(n−1)` rounds of `n/2` pairs.
fn schedule(n: usize) -> Vec<Vec<(usize, usize)>> {
    let mut ring: Vec<usize> = (0..n).collect();
    let mut first = Vec::new();
    for r in 0..n - 1 {
        let round: Vec<(usize, usize)> = (0..n / 2)
            .map(|i| {
                let (a, b) = (ring[i], ring[n - 1 - i]);
                if (r + i) % 2 == 0 {
                    (a, b)
                } else {
                    (b, a)
                }
            })
            .collect();
        first.push(round);
        ring[1..].rotate_right(1);
    }
    let second: Vec<Vec<(usize, usize)>> = first
        .iter()
        .map(|round| round.iter().map(|&(h, a)| (a, h)).collect())
        .collect();
    first.into_iter().chain(second).collect()
}

fn binomial(n: u64, p: f64, rng: &mut ChaCha8Rng) -> u32 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    Binomial::new(n, p.min(1.0)).expect("valid p").sample(rng) as u32
}

/// Nearest quarter line to the fair handicap, `−E[gd]`.
fn fair_line(pmf: &GdPmf) -> HandicapLine {
    HandicapLine::from_quarters((-4.0 * pmf.mean()).round() as i32)
}

fn priced(p: f64, margin: f64, rng: &mut ChaCha8Rng) -> f64 {
    let shade = 1.0 + margin * rng.random_range(0.6..1.4);
    let odds = 1.0 / (p.max(1e-3) * shade);
    (odds * 100.0).round().max(101.0) / 100.0
}

pub fn generate(config: &SyntheticConfig) -> Result<SyntheticLeague, IngestError> {
    assert!(config.teams >= 2 && config.teams.is_multiple_of(2), "even number of teams");
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let teams: Vec<String> = (1..=config.teams).map(|i| format!("Team {i:02}")).collect();
    let innovation = config.strength_sd * (1.0 - config.persistence.powi(2)).sqrt();

    let mut s: Vec<f64> = (0..config.teams)
        .map(|_| config.strength_sd * normal.sample(&mut rng))
        .collect();
    let rounds = schedule(config.teams);
    let mut strengths = Vec::with_capacity(config.seasons);
    let mut matches = Vec::new();
    for season in 0..config.seasons {
        if season > 0 {
            for x in &mut s {
                *x = config.persistence * *x + innovation * normal.sample(&mut rng);
            }
        }
        strengths.push(s.clone());
        let year = config.start_year + season as i32;
        let opening = NaiveDate::from_ymd_opt(year, 8, 10).expect("valid date");
        let gap = (290 / rounds.len().max(1)).max(1) as u64;
        for (r, round) in rounds.iter().enumerate() {
            let date = opening + chrono::Days::new(r as u64 * gap);
            for &(h, a) in round {
                let d = s[h] - s[a] + config.home_advantage;
                let p = possession(d);
                let n_home = ((MINUTES as f64 * p).round() as u64).min(MINUTES as u64);
                let n_away = MINUTES as u64 - n_home;
                let mut play = |n: u64, rates: PointSide| {
                    let shots = binomial(n, rates.shot_rate, &mut rng);
                    let sot = binomial(shots as u64, rates.on_target, &mut rng);
                    let goals = binomial(sot as u64, rates.conversion, &mut rng);
                    (shots, sot, goals)
                };
                let (hs, hst, hg) = play(n_home, side_rates(d));
                let (as_, ast, ag) = play(n_away, side_rates(-d));

                let mut m = MatchRecord::new(date, &teams[h], &teams[a], hg, ag);
                m.home_possession = Some((p * 100.0).round() / 100.0);
                m.home_shots = Some(hs);
                m.away_shots = Some(as_);
                m.home_sot = Some(hst);
                m.away_sot = Some(ast);

                let pmf = true_pmf(d);
                let [ph, pd, pa] = pmf.outcome_probs();
                let margin = config.margin;
                let avg = Odds1x2::new(
                    priced(ph, margin, &mut rng),
                    priced(pd, margin, &mut rng),
                    priced(pa, margin, &mut rng),
                );
                let max = Odds1x2::new(avg.home * 1.02, avg.draw * 1.02, avg.away * 1.02);
                m.odds_1x2_avg = Some(avg);
                m.odds_1x2_max = Some(max);

                let line = fair_line(&pmf);
                if let (Ok(qh), Ok(qa)) = (
                    ah_model_prob(&pmf, line, Side::Home),
                    ah_model_prob(&pmf, line, Side::Away),
                ) {
                    let oh = priced(qh, margin / 2.0, &mut rng);
                    let oa = priced(qa, margin / 2.0, &mut rng);
                    m.ah_line = Some(line);
                    m.odds_ah_avg = AhQuote::new(oh, oa).ok();
                    m.odds_ah_max = AhQuote::new(oh * 1.02, oa * 1.02).ok();
                }
                matches.push(m);
            }
        }
    }
    Ok(SyntheticLeague {
        dataset: Dataset::from_matches(matches)?,
        strengths,
        teams,
    })
}
