//! Forward sampling of the possession → shots → goals chain.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{
    assign_rdl, check_trace, contribution, BetaParams, BnError, BnParameters, FitStats,
    RDL_LEVELS,
};
use crate::ah::{ah_model_prob, HandicapLine, Side};
use crate::ingest::{Artifact, Dataset};
use crate::pmf::{GdPmf, GD_CELLS};
use crate::ratings::TraceEntry;

/// Distribution of one chain probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeDist {
    Beta(BetaParams),
    /// Point mass, used to pin a node in tests.
    Fixed(f64),
}

impl NodeDist {
    pub(crate) fn beta(node: &'static str, p: BetaParams) -> Result<Self, BnError> {
        if !p.is_valid() {
            return Err(BnError::InvalidBeta { node, a: p.a, b: p.b });
        }
        Ok(NodeDist::Beta(p))
    }

    pub fn fixed(p: f64) -> Result<Self, BnError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(BnError::Probability(p));
        }
        Ok(NodeDist::Fixed(p))
    }

    fn sampler(&self) -> Result<NodeSampler, BnError> {
        Ok(match *self {
            NodeDist::Beta(p) => NodeSampler::Beta(
                Beta::new(p.a, p.b).map_err(|_| BnError::InvalidBeta { node: "beta", a: p.a, b: p.b })?,
            ),
            NodeDist::Fixed(p) => NodeSampler::Fixed(NodeDist::fixed(p).map(|_| p)?),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SideChain {
    pub shot_rate: NodeDist,
    pub on_target: NodeDist,
    pub conversion: NodeDist,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    /// Home share of possession.
    pub possession: NodeDist,
    pub minutes: u32,
    pub home: SideChain,
    pub away: SideChain,
}

enum NodeSampler {
    Beta(Beta<f64>),
    Fixed(f64),
}

impl NodeSampler {
    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            NodeSampler::Beta(b) => b.sample(rng),
            NodeSampler::Fixed(p) => *p,
        }
    }
}

fn binomial<R: Rng>(n: u64, p: f64, rng: &mut R) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("p in (0, 1)").sample(rng)
}

struct SideSampler([NodeSampler; 3]);

impl SideSampler {
    fn goals<R: Rng>(&self, minutes: u64, rng: &mut R) -> u64 {
        let [sm, st, g] = &self.0;
        let (p_sm, p_st, p_g) = (sm.draw(rng), st.draw(rng), g.draw(rng));
        let shots = binomial(minutes, p_sm, rng);
        let on_target = binomial(shots, p_st, rng);
        binomial(on_target, p_g, rng)
    }
}

struct ChainSampler {
    possession: NodeSampler,
    minutes: u64,
    home: SideSampler,
    away: SideSampler,
}

impl ChainSampler {
    fn new(c: &ChainParams) -> Result<Self, BnError> {
        let side = |s: &SideChain| -> Result<SideSampler, BnError> {
            Ok(SideSampler([s.shot_rate.sampler()?, s.on_target.sampler()?, s.conversion.sampler()?]))
        };
        Ok(Self {
            possession: c.possession.sampler()?,
            minutes: c.minutes as u64,
            home: side(&c.home)?,
            away: side(&c.away)?,
        })
    }

    fn draw_gd<R: Rng>(&self, rng: &mut R) -> i32 {
        let p = self.possession.draw(rng);
        let n_home = ((self.minutes as f64 * p).round() as u64).min(self.minutes);
        let n_away = self.minutes - n_home;
        let gh = self.home.goals(n_home, rng);
        let ga = self.away.goals(n_away, rng);
        gh as i32 - ga as i32
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchForecast {
    pub rd: f64,
    pub level: usize,
    pub gd_pmf: GdPmf,
    /// Home, draw, away.
    pub p_1x2: [f64; 3],
    pub sample_count: u64,
    pub seed: u64,
}

impl MatchForecast {
    fn from_counts(rd: f64, counts: &[u64; GD_CELLS], n: u64, seed: u64) -> Self {
        let gd_pmf = GdPmf::from_counts(counts, n);
        Self {
            rd,
            level: assign_rdl(rd),
            p_1x2: gd_pmf.outcome_probs(),
            gd_pmf,
            sample_count: n,
            seed,
        }
    }

    /// Short hex digest of the goal-difference pmf, for comparing runs.
    pub fn pmf_digest(&self) -> String {
        let mut h = Sha256::new();
        for (gd, p) in self.gd_pmf.iter() {
            h.update(gd.to_le_bytes());
            h.update(p.to_le_bytes());
        }
        hex::encode(&h.finalize()[..8])
    }

    pub fn ah_prob(&self, line: HandicapLine, side: Side) -> Result<f64, BnError> {
        Ok(ah_model_prob(&self.gd_pmf, line, side)?)
    }

    /// `(home, away)` model probabilities at `line`.
    pub fn ah_probs(&self, line: HandicapLine) -> Result<(f64, f64), BnError> {
        Ok((self.ah_prob(line, Side::Home)?, self.ah_prob(line, Side::Away)?))
    }

    pub fn expected_gd(&self) -> f64 {
        self.gd_pmf.mean()
    }
}

fn run<F: FnMut(&mut ChaCha8Rng) -> i32>(n_samples: u64, seed: u64, mut draw: F) -> [u64; GD_CELLS] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = [0u64; GD_CELLS];
    for _ in 0..n_samples {
        counts[GdPmf::index_of(draw(&mut rng))] += 1;
    }
    counts
}

/// Monte Carlo forecast from an explicit chain.
pub fn forecast_chain(
    rd: f64,
    chain: &ChainParams,
    n_samples: u64,
    seed: u64,
) -> Result<MatchForecast, BnError> {
    if n_samples == 0 {
        return Err(BnError::NoSamples);
    }
    let sampler = ChainSampler::new(chain)?;
    let counts = run(n_samples, seed, |rng| sampler.draw_gd(rng));
    Ok(MatchForecast::from_counts(rd, &counts, n_samples, seed))
}

/// How the rating difference selects level parameters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InferenceMode {
    /// The single level whose interval contains the rating difference.
    #[default]
    Hard,
    /// Mixture over levels weighted by [`soft_rdl_posterior`].
    Soft,
}

/// Hard-assignment forecast at rating difference `rd`.
pub fn forecast(
    rd: f64,
    params: &BnParameters,
    n_samples: u64,
    seed: u64,
) -> Result<MatchForecast, BnError> {
    forecast_with_mode(rd, params, InferenceMode::Hard, n_samples, seed)
}

pub fn forecast_with_mode(
    rd: f64,
    params: &BnParameters,
    mode: InferenceMode,
    n_samples: u64,
    seed: u64,
) -> Result<MatchForecast, BnError> {
    match mode {
        InferenceMode::Hard => forecast_chain(rd, &params.chain(assign_rdl(rd))?, n_samples, seed),
        InferenceMode::Soft => {
            if n_samples == 0 {
                return Err(BnError::NoSamples);
            }
            let posterior = soft_rdl_posterior(rd, params)?;
            let mut mix = Vec::new();
            let mut cum = 0.0;
            for (i, &w) in posterior.iter().enumerate() {
                if w > 0.0 {
                    cum += w;
                    mix.push((cum, ChainSampler::new(&params.chain(i + 1)?)?));
                }
            }
            let counts = run(n_samples, seed, |rng| {
                let u = rng.random::<f64>() * cum;
                let k = mix.iter().position(|(c, _)| u < *c).unwrap_or(mix.len() - 1);
                mix[k].1.draw_gd(rng)
            });
            Ok(MatchForecast::from_counts(rd, &counts, n_samples, seed))
        }
    }
}

/// Posterior over levels given `rd`: level counts times the level's Normal
/// density, normalized in log space. Levels without a fitted Normal get no
/// mass; if none has one the result is the hard assignment.
pub fn soft_rdl_posterior(rd: f64, params: &BnParameters) -> Result<[f64; RDL_LEVELS], BnError> {
    let mut logw = [f64::NEG_INFINITY; RDL_LEVELS];
    for (i, l) in params.home.levels.iter().enumerate() {
        if let (Some(g), true) = (l.rd_gaussian, l.support > 0) {
            logw[i] = (l.support as f64).ln() + g.ln_pdf(rd);
        }
    }
    let max = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out = [0.0; RDL_LEVELS];
    if !max.is_finite() {
        out[assign_rdl(rd) - 1] = 1.0;
        return Ok(out);
    }
    let mut z = 0.0;
    for (o, &lw) in out.iter_mut().zip(&logw) {
        *o = (lw - max).exp();
        z += *o;
    }
    for o in &mut out {
        *o /= z;
    }
    Ok(out)
}

/// One side of a chain with every node pinned.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointSide {
    pub shot_rate: f64,
    pub on_target: f64,
    pub conversion: f64,
}

impl PointSide {
    pub fn composite(&self) -> f64 {
        self.shot_rate * self.on_target * self.conversion
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointChain {
    pub home_minutes: u32,
    pub away_minutes: u32,
    pub home: PointSide,
    pub away: PointSide,
}

impl PointChain {
    /// Pins possession at `p` with minutes split as the sampler does.
    pub fn new(minutes: u32, possession: f64, home: PointSide, away: PointSide) -> Self {
        let home_minutes = ((minutes as f64 * possession).round() as u32).min(minutes);
        Self {
            home_minutes,
            away_minutes: minutes - home_minutes,
            home,
            away,
        }
    }

    /// The equivalent sampler chain.
    pub fn to_chain(&self) -> ChainParams {
        let side = |s: &PointSide| SideChain {
            shot_rate: NodeDist::Fixed(s.shot_rate),
            on_target: NodeDist::Fixed(s.on_target),
            conversion: NodeDist::Fixed(s.conversion),
        };
        let minutes = self.home_minutes + self.away_minutes;
        let p = if minutes == 0 { 0.5 } else { self.home_minutes as f64 / minutes as f64 };
        ChainParams {
            possession: NodeDist::Fixed(p),
            minutes,
            home: side(&self.home),
            away: side(&self.away),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnumeratedForecast {
    pub gd_pmf: GdPmf,
    /// Probability of either side exceeding `max_goals`, left out of `gd_pmf`.
    pub truncated_mass: f64,
}

/// `P(X = k)` for `k` in `0..=min(n, max)` and the mass above `max`.
pub fn binomial_pmf(n: u32, p: f64, max: u32) -> (Vec<f64>, f64) {
    let top = n.min(max) as usize;
    let mut out = vec![0.0; top + 1];
    if p <= 0.0 {
        out[0] = 1.0;
        return (out, 0.0);
    }
    if p >= 1.0 {
        if (n as usize) <= top {
            out[n as usize] = 1.0;
            return (out, 0.0);
        }
        return (out, 1.0);
    }
    let ratio = p / (1.0 - p);
    let mut cur = (1.0 - p).powi(n as i32);
    for (k, o) in out.iter_mut().enumerate() {
        *o = cur;
        cur *= (n as usize - k) as f64 / (k + 1) as f64 * ratio;
    }
    let kept: f64 = out.iter().sum();
    (out, (1.0 - kept).max(0.0))
}

/// Exact goal-difference pmf for a pinned chain. Each side's goals are
/// `Binomial(minutes, p_shot · p_target · p_goal)`.
pub fn enumerate_forecast(chain: &PointChain, max_goals: u32) -> EnumeratedForecast {
    let (home, th) = binomial_pmf(chain.home_minutes, chain.home.composite(), max_goals);
    let (away, ta) = binomial_pmf(chain.away_minutes, chain.away.composite(), max_goals);
    let pairs = home.iter().enumerate().flat_map(|(gh, &ph)| {
        away.iter()
            .enumerate()
            .map(move |(ga, &pa)| (gh as i32 - ga as i32, ph * pa))
    });
    EnumeratedForecast {
        gd_pmf: GdPmf::from_pairs(pairs),
        truncated_mass: 1.0 - (1.0 - th) * (1.0 - ta),
    }
}

/// Per-match seed, independent of evaluation order.
pub fn match_seed(seed: u64, match_id: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(match_id.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastConfig {
    pub n_samples: u64,
    pub seed: u64,
    pub mode: InferenceMode,
    /// Refit without each match before forecasting it.
    pub leave_one_out: bool,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        Self {
            n_samples: 100_000,
            seed: 0,
            mode: InferenceMode::Hard,
            leave_one_out: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastRow {
    pub match_id: String,
    pub season: String,
    pub forecast: MatchForecast,
    pub ah_line: Option<HandicapLine>,
    /// `(home, away)` at `ah_line`.
    pub p_ah: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastSet {
    pub config: ForecastConfig,
    pub rows: Vec<ForecastRow>,
}

impl Artifact for ForecastSet {
    const KIND: &'static str = "forecasts";
}

impl ForecastSet {
    /// CSV `match_id,p_home,p_draw,p_away,p_ah_home,p_ah_away`.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "match_id", "p_home", "p_draw", "p_away", "p_ah_home", "p_ah_away", "ah_line", "rd", "level",
            "expected_gd", "pmf_digest",
        ])?;
        for r in &self.rows {
            let [h, d, a] = r.forecast.p_1x2;
            let (ah_h, ah_a) = match r.p_ah {
                Some((x, y)) => (x.to_string(), y.to_string()),
                None => (String::new(), String::new()),
            };
            let line = r.ah_line.map(|l| l.goals().to_string()).unwrap_or_default();
            let f = &r.forecast;
            w.write_record([
                r.match_id.clone(),
                h.to_string(),
                d.to_string(),
                a.to_string(),
                ah_h,
                ah_a,
                line,
                f.rd.to_string(),
                f.level.to_string(),
                f.expected_gd().to_string(),
                f.pmf_digest(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Forecasts every eligible match, in dataset order.
///
/// With `leave_one_out` each match is removed from the fitted statistics
/// before its own forecast. Seeds come from [`match_seed`], so the output
/// does not depend on thread count.
pub fn forecast_matches(
    dataset: &Dataset,
    trace: &[TraceEntry],
    stats: &FitStats,
    config: ForecastConfig,
) -> Result<ForecastSet, BnError> {
    check_trace(dataset, trace)?;
    let shared = stats.params();
    let minutes = stats.config.minutes_per_match;
    let rows = dataset
        .matches()
        .par_iter()
        .zip(trace.par_iter())
        .filter(|(_, t)| t.eligible)
        .map(|(m, t)| {
            let own;
            let params = match (config.leave_one_out, contribution(m, t.rd, minutes)) {
                (true, Some(c)) => {
                    let mut s = stats.clone();
                    s.remove(&c);
                    own = s.params();
                    &own
                }
                _ => &shared,
            };
            let seed = match_seed(config.seed, &m.match_id);
            let forecast = forecast_with_mode(t.rd, params, config.mode, config.n_samples, seed)?;
            let p_ah = m.ah_line.map(|l| forecast.ah_probs(l)).transpose()?;
            Ok(ForecastRow {
                match_id: m.match_id.clone(),
                season: m.season.clone(),
                forecast,
                ah_line: m.ah_line,
                p_ah,
            })
        })
        .collect::<Result<Vec<_>, BnError>>()?;
    Ok(ForecastSet { config, rows })
}
