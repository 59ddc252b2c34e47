use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use handicap_lab::ah::binary_outcome;
use handicap_lab::backtest::{
    optimize_theta, optimize_theta_static, read_predictions_csv, simulate, stake_match, sweep_theta,
    theta_grid, write_cumulative_csv, write_ledger_csv, write_mean_ah_odds_csv, write_optimized_csv,
    write_sweep_csv, BacktestReport, CumPoint, MatchPrediction,
};
use handicap_lab::bn::{self, forecast_matches, FitStats, ForecastConfig, ForecastSet};
use handicap_lab::ingest::{load_dataset, ColumnMap};
use handicap_lab::metrics::{season_table, OutcomeObs, ScoredMatch};
use handicap_lab::ratings::{grid_search, mean_abs_error, replay, TraceEntry};
use handicap_lab::{load_artifact, save_artifact, Artifact, Dataset, RatingBook};
use tracing::{info, warn};

use crate::config::{require_paths, MarketName, RunConfig, SourceName};

fn create(path: PathBuf) -> Result<BufWriter<File>> {
    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn load<T: Artifact>(path: &Path) -> Result<T> {
    require_paths([path])?;
    load_artifact(path).with_context(|| format!("loading {}", path.display()))
}

fn save<T: Artifact>(path: PathBuf, value: &T) -> Result<()> {
    save_artifact(&path, value).with_context(|| format!("writing {}", path.display()))?;
    info!(path = %path.display(), "wrote artifact");
    Ok(())
}

fn dataset(cfg: &RunConfig) -> Result<Dataset> {
    load(&cfg.dataset_path())
}

fn ratings(cfg: &RunConfig) -> Result<RatingBook> {
    load(&cfg.artifact_dir().join("ratings.artifact"))
}

/// Dataset plus the rating trace under the fitted parameters.
fn traced(cfg: &RunConfig) -> Result<(Dataset, Vec<TraceEntry>)> {
    let ds = dataset(cfg)?;
    let book = ratings(cfg)?;
    let (_, trace) = replay(&ds, book.params);
    Ok((ds, trace))
}

pub fn ingest(cfg: &RunConfig) -> Result<()> {
    let p = &cfg.paths;
    if p.matches.is_empty() {
        bail!("no match CSVs given; pass --matches or set paths.matches");
    }
    require_paths(p.matches.iter().map(PathBuf::as_path).chain(p.possession.as_deref()))?;
    let (ds, report) = load_dataset(&p.matches, p.possession.as_deref(), &ColumnMap::default())?;
    if let Some(r) = &report {
        if !r.unmatched.is_empty() {
            warn!(rows = r.unmatched.len(), "possession rows without a fixture");
        }
        let mut w = csv::Writer::from_writer(create(cfg.out.join("possession_unmatched.csv"))?);
        for row in &r.unmatched {
            w.serialize(row)?;
        }
        w.flush()?;
        println!("possession: {} fixtures matched, {} sidecar rows unmatched", r.matched, r.unmatched.len());
    }
    println!("{} matches over {} seasons", ds.len(), ds.seasons().len());
    save(cfg.out.join("dataset.artifact"), &ds)
}

pub fn fit_ratings(cfg: &RunConfig) -> Result<()> {
    let ds = dataset(cfg)?;
    let params = if cfg.ratings.search {
        let result = grid_search(&ds, &cfg.ratings.grid())?;
        result.write_surface_csv(create(cfg.out.join("error_surface.csv"))?)?;
        result.best
    } else {
        cfg.ratings.params()
    };
    let (book, trace) = replay(&ds, params);
    let mut w = csv::Writer::from_writer(create(cfg.out.join("rating_trace.csv"))?);
    w.write_record(["match_id", "rd", "observed_gd", "error", "eligible"])?;
    for t in &trace {
        w.write_record([
            t.match_id.clone(),
            t.rd.to_string(),
            t.observed_gd.to_string(),
            t.error.to_string(),
            t.eligible.to_string(),
        ])?;
    }
    w.flush()?;
    let eligible = trace.iter().filter(|t| t.eligible).count();
    println!(
        "lambda={} gamma={} k={} mean_abs_error={:.4} eligible={eligible}",
        params.lambda,
        params.gamma,
        params.k,
        mean_abs_error(&trace)?
    );
    save(cfg.out.join("ratings.artifact"), &book)
}

pub fn fit_bn(cfg: &RunConfig) -> Result<()> {
    let (ds, trace) = traced(cfg)?;
    let params = bn::fit(&ds, &trace, None, cfg.bn.fit_config())?;
    params.write_csv(create(cfg.out.join("level_summary.csv"))?)?;
    let counts: Vec<String> = params.rdl.levels.iter().map(|l| l.count.to_string()).collect();
    println!("level counts: {}", counts.join(" "));
    save(cfg.out.join("bn_params.artifact"), &params)
}

pub fn forecast(cfg: &RunConfig) -> Result<()> {
    let seed = cfg.require_seed()?;
    let (ds, trace) = traced(cfg)?;
    let stats = FitStats::accumulate(&ds, &trace, cfg.bn.fit_config())?;
    let fc = ForecastConfig {
        n_samples: cfg.bn.n_samples,
        seed,
        mode: cfg.bn.mode,
        leave_one_out: cfg.bn.leave_one_out,
    };
    let set = forecast_matches(&ds, &trace, &stats, fc)?;
    set.write_csv(create(cfg.out.join("forecasts.csv"))?)?;
    println!("{} matches forecast", set.rows.len());
    save(cfg.out.join("forecasts.artifact"), &set)
}

fn predictions(cfg: &RunConfig) -> Result<Vec<MatchPrediction>> {
    match &cfg.paths.predictions {
        Some(p) => {
            require_paths([p.as_path()])?;
            Ok(read_predictions_csv(File::open(p)?).with_context(|| format!("reading {}", p.display()))?)
        }
        None => {
            let set: ForecastSet = load(&cfg.artifact_dir().join("forecasts.artifact"))?;
            Ok(Vec::from(&set))
        }
    }
}

fn print_summary(r: &BacktestReport, label: &str) {
    let s = &r.overall;
    println!(
        "{label}: theta={} bets={} won={} staked={:.2} returns={:.2} profit={:.2} roi={:.2}%",
        r.theta,
        s.bets,
        s.bets_won,
        s.staked,
        s.returns,
        s.profit,
        100.0 * s.roi
    );
}

fn report_name(market: MarketName, source: SourceName) -> String {
    format!("{}_{}", market.label(), if source == SourceName::Avg { "avg" } else { "max" })
}

pub fn backtest(cfg: &RunConfig) -> Result<()> {
    let ds = dataset(cfg)?;
    let preds = predictions(cfg)?;
    let b = &cfg.backtest;
    let sim = b.sim_config();
    for &market in &b.markets {
        if let Some(theta) = b.theta {
            for &source in &b.odds_sources {
                let name = report_name(market, source);
                let r = simulate(&ds, &preds, market.market(), source.source(), theta, &sim)?;
                write_ledger_csv(create(cfg.out.join(format!("ledger_{name}.csv")))?, &r.ledger)?;
                write_cumulative_csv(
                    create(cfg.out.join(format!("cumulative_{name}.csv")))?,
                    &[(name.as_str(), r.cumulative.as_slice())],
                )?;
                print_summary(&r, &name);
                save(cfg.out.join(format!("backtest_{name}.artifact")), &r)?;
            }
            continue;
        }

        // sweep tables always pair average and maximum odds
        let grid = theta_grid(b.theta_max_percent);
        let sweeps: Vec<(SourceName, Vec<BacktestReport>)> = [SourceName::Avg, SourceName::Max]
            .into_iter()
            .map(|s| Ok((s, sweep_theta(&ds, &preds, market.market(), s.source(), &grid, &sim)?)))
            .collect::<Result<_>>()?;
        let (avg, max) = (&sweeps[0].1, &sweeps[1].1);
        let m = market.label();
        write_sweep_csv(create(cfg.out.join(format!("sweep_{m}.csv")))?, avg, max)?;

        let mut statics = csv::Writer::from_writer(create(cfg.out.join(format!("static_{m}.csv")))?);
        statics.write_record(["objective", "odds", "theta", "bets", "profit", "roi"])?;
        let mut series: Vec<(String, Vec<CumPoint>)> = Vec::new();
        for (oi, &objective) in b.objectives.iter().enumerate() {
            let o = objective.label();
            let ta = optimize_theta(avg, objective.objective(), b.min_bets_season);
            let tm = optimize_theta(max, objective.objective(), b.min_bets_season);
            write_optimized_csv(create(cfg.out.join(format!("optimized_{m}_{o}.csv")))?, &ta, &tm)?;
            println!(
                "{m} per-season {o}: avg roi={:.2}% profit={:.2}, max roi={:.2}% profit={:.2}",
                100.0 * ta.overall.roi,
                ta.overall.profit,
                100.0 * tm.overall.roi,
                tm.overall.profit
            );
            for (source, reports) in &sweeps {
                if !b.odds_sources.contains(source) {
                    continue;
                }
                let name = report_name(market, *source);
                match optimize_theta_static(reports, objective.objective(), b.min_bets_static) {
                    Ok((theta, s)) => {
                        statics.write_record([
                            o.to_string(),
                            name.clone(),
                            theta.to_string(),
                            s.bets.to_string(),
                            s.profit.to_string(),
                            s.roi.to_string(),
                        ])?;
                        let r = reports.iter().find(|r| r.theta == theta).expect("theta from grid");
                        series.push((format!("{name}_{o}"), r.cumulative.clone()));
                        if oi == 0 {
                            print_summary(r, &format!("{name} static {o}"));
                            save(cfg.out.join(format!("backtest_{name}.artifact")), r)?;
                        }
                    }
                    Err(e) => warn!(market = m, objective = o, "{e}"),
                }
            }
        }
        statics.flush()?;
        let named: Vec<(&str, &[CumPoint])> = series.iter().map(|(n, p)| (n.as_str(), p.as_slice())).collect();
        write_cumulative_csv(create(cfg.out.join(format!("cumulative_{m}.csv")))?, &named)?;
    }
    Ok(())
}

pub fn report(cfg: &RunConfig, possession_seasons_only: bool) -> Result<()> {
    let ds = dataset(cfg)?;
    write_mean_ah_odds_csv(create(cfg.out.join("mean_ah_odds.csv"))?, &ds)?;

    let dir = cfg.artifact_dir();
    let set: ForecastSet = load(&dir.join("forecasts.artifact"))?;
    let keep: BTreeSet<&str> = ds
        .matches()
        .iter()
        .filter(|m| !possession_seasons_only || m.home_possession.is_some())
        .map(|m| m.season.as_str())
        .collect();
    let by_id: HashMap<&str, _> = ds.matches().iter().map(|m| (m.match_id.as_str(), m)).collect();
    let mut scored = Vec::new();
    for r in set.rows.iter().filter(|r| keep.contains(r.season.as_str())) {
        let m = by_id
            .get(r.match_id.as_str())
            .with_context(|| format!("forecast for {} is not in the dataset", r.match_id))?;
        scored.push(ScoredMatch {
            season: r.season.clone(),
            p_1x2: r.forecast.p_1x2,
            outcome: m.outcome(),
            ah: r.p_ah.zip(m.ah_line).map(|((ph, _), line)| (ph, OutcomeObs::Ah(binary_outcome(m.goal_difference(), line)))),
        });
    }
    let table = season_table(&scored)?;
    table.write_csv(create(cfg.out.join("accuracy.csv"))?)?;
    let o = &table.overall;
    match o.brier {
        Some(b) => println!("overall rps={:.4} brier={b:.4} over {} matches", o.rps, o.n_matches),
        None => println!("overall rps={:.4} over {} matches (no AH outcomes)", o.rps, o.n_matches),
    }

    let (one, ah) = (dir.join("backtest_1x2_avg.artifact"), dir.join("backtest_ah_avg.artifact"));
    if one.exists() && ah.exists() {
        let one: BacktestReport = load(&one)?;
        let ah: BacktestReport = load(&ah)?;
        let profits = |r: &BacktestReport| r.cumulative.iter().map(|p| p.cum_profit).collect::<Vec<_>>();
        match stake_match(&profits(&ah), &profits(&one)) {
            Ok(sm) => {
                let scaled: Vec<CumPoint> = ah
                    .cumulative
                    .iter()
                    .zip(&sm.scaled_ah)
                    .map(|(p, &v)| CumPoint { cum_profit: v, ..p.clone() })
                    .collect();
                write_cumulative_csv(
                    create(cfg.out.join("stake_match.csv"))?,
                    &[("1x2", &one.cumulative), ("ah", &ah.cumulative), ("ah_scaled", &scaled)],
                )?;
                println!("stake-match factor {:.4}", sm.factor);
            }
            Err(e) => warn!("stake matching skipped: {e}"),
        }
    }
    Ok(())
}
