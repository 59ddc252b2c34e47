//! End-to-end runs on a small generated league: CSV round trip, artifact
//! persistence, and forecast reproducibility.

use handicap_lab::backtest::{simulate, SimConfig};
use handicap_lab::bn::{fit, forecast_matches, FitConfig, FitStats, ForecastConfig, ForecastSet};
use handicap_lab::ingest::{
    load_dataset, read_artifact, write_artifact, write_match_csv, write_possession_csv, ArtifactError,
    ColumnMap,
};
use handicap_lab::ratings::replay;
use handicap_lab::synthetic::{generate, SyntheticConfig, SyntheticLeague};
use handicap_lab::{
    load_artifact, save_artifact, BacktestReport, BnParameters, Dataset, InferenceMode, Market,
    MatchPrediction, OddsSource, RatingBook, RatingParams,
};

fn league() -> SyntheticLeague {
    generate(&SyntheticConfig { teams: 10, seasons: 5, seed: 3, ..SyntheticConfig::default() }).unwrap()
}

fn forecasts(ds: &Dataset, threads: usize, config: ForecastConfig) -> ForecastSet {
    let (_, trace) = replay(ds, RatingParams::default());
    let stats = FitStats::accumulate(ds, &trace, FitConfig::default()).unwrap();
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(|| forecast_matches(ds, &trace, &stats, config).unwrap())
}

fn small_config() -> ForecastConfig {
    ForecastConfig { n_samples: 4_000, seed: 99, ..ForecastConfig::default() }
}

#[test]
fn csv_round_trip_preserves_matches() {
    let lg = league();
    let dir = tempfile::tempdir().unwrap();
    let results = dir.path().join("league.csv");
    let sidecar = dir.path().join("possession.csv");
    write_match_csv(std::fs::File::create(&results).unwrap(), lg.dataset.matches()).unwrap();
    write_possession_csv(std::fs::File::create(&sidecar).unwrap(), lg.dataset.matches()).unwrap();

    let (ds, report) = load_dataset(&[results], Some(&sidecar), &ColumnMap::default()).unwrap();
    let report = report.unwrap();
    assert_eq!(report.matched, lg.dataset.len());
    assert!(report.unmatched.is_empty());
    assert_eq!(ds.len(), lg.dataset.len());
    for (a, b) in ds.matches().iter().zip(lg.dataset.matches()) {
        let (pa, pb) = (a.home_possession.unwrap(), b.home_possession.unwrap());
        assert!((pa - pb).abs() < 1e-12);
        let mut a = a.clone();
        a.home_possession = b.home_possession;
        assert_eq!(&a, b);
    }
}

#[test]
fn artifacts_round_trip() {
    let lg = league();
    let ds = &lg.dataset;
    let (book, trace) = replay(ds, RatingParams::default());
    let params = fit(ds, &trace, None, FitConfig::default()).unwrap();
    let set = forecasts(ds, 2, small_config());
    let preds = Vec::<MatchPrediction>::from(&set);
    let report = simulate(ds, &preds, Market::Ah, OddsSource::Maximum, 0.03, &SimConfig::default()).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name);
    save_artifact(p("d"), ds).unwrap();
    save_artifact(p("r"), &book).unwrap();
    save_artifact(p("b"), &params).unwrap();
    save_artifact(p("f"), &set).unwrap();
    save_artifact(p("t"), &report).unwrap();
    assert_eq!(&load_artifact::<Dataset>(p("d")).unwrap(), ds);
    assert_eq!(load_artifact::<RatingBook>(p("r")).unwrap(), book);
    assert_eq!(load_artifact::<BnParameters>(p("b")).unwrap(), params);
    assert_eq!(load_artifact::<ForecastSet>(p("f")).unwrap(), set);
    assert_eq!(load_artifact::<BacktestReport>(p("t")).unwrap(), report);

    let head = std::fs::read_to_string(p("b")).unwrap();
    assert!(head.starts_with("handicap-lab/v1/bn-params\n"));
    assert!(matches!(load_artifact::<RatingBook>(p("b")), Err(ArtifactError::Kind { .. })));
}

#[test]
fn tampered_artifact_is_rejected() {
    let (book, _) = replay(&league().dataset, RatingParams::default());
    let mut bytes = Vec::new();
    write_artifact(&mut bytes, &book).unwrap();
    let text = String::from_utf8(bytes).unwrap().replacen("\"lambda\": 0.018", "\"lambda\": 0.019", 1);
    assert!(matches!(read_artifact::<RatingBook, _>(text.as_bytes()), Err(ArtifactError::Digest { .. })));
}

#[test]
fn forecasts_do_not_depend_on_thread_count() {
    let ds = league().dataset;
    let one = forecasts(&ds, 1, small_config());
    let four = forecasts(&ds, 4, small_config());
    assert!(!one.rows.is_empty());
    assert_eq!(one, four);
    let mut a = Vec::new();
    let mut b = Vec::new();
    one.write_csv(&mut a).unwrap();
    four.write_csv(&mut b).unwrap();
    assert_eq!(a, b);
}

#[test]
fn forecasts_cover_eligible_matches_only() {
    let ds = league().dataset;
    let (_, trace) = replay(&ds, RatingParams::default());
    let set = forecasts(&ds, 2, small_config());
    let eligible: Vec<&str> = trace.iter().filter(|t| t.eligible).map(|t| t.match_id.as_str()).collect();
    let ids: Vec<&str> = set.rows.iter().map(|r| r.match_id.as_str()).collect();
    assert_eq!(ids, eligible);
    for r in &set.rows {
        assert!(r.forecast.gd_pmf.is_normalized(1e-9));
        assert!((r.forecast.p_1x2.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        if let Some((h, a)) = r.p_ah {
            assert!((0.0..=1.0).contains(&h) && (0.0..=1.0).contains(&a));
        }
    }
}

#[test]
fn leave_one_out_changes_forecasts_but_not_seeds() {
    let ds = league().dataset;
    let loo = forecasts(&ds, 2, small_config());
    let full = forecasts(&ds, 2, ForecastConfig { leave_one_out: false, ..small_config() });
    assert_eq!(loo.rows.len(), full.rows.len());
    assert!(loo.rows.iter().zip(&full.rows).all(|(a, b)| a.forecast.seed == b.forecast.seed));
    assert!(loo.rows.iter().zip(&full.rows).any(|(a, b)| a.forecast.p_1x2 != b.forecast.p_1x2));
}

#[test]
fn soft_inference_forecasts_are_normalized() {
    let ds = league().dataset;
    let set = forecasts(&ds, 2, ForecastConfig { mode: InferenceMode::Soft, ..small_config() });
    for r in &set.rows {
        assert!(r.forecast.gd_pmf.is_normalized(1e-9));
    }
}
