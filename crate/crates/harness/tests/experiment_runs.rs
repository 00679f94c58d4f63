mod common;

use std::fs;

use rwe_harness::experiment::{MANIFEST, RANKED_FILE};
use rwe_harness::{run_experiment, ExperimentConfig, HarnessError, Stage};

fn load(path: &std::path::Path) -> ExperimentConfig {
    ExperimentConfig::load(path).unwrap()
}

#[test]
fn popularity_data_selects_unpenalized_beta() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("pop.tsv");
    common::popularity_dataset(&data, 150, 120, 10, 1);
    let cfg = common::write_config(dir.path(), "exp.toml", &data, "rp3b", "beta = [2.0, 0.0]\nseed = 5");
    let outcome = run_experiment(&load(&cfg)).unwrap();

    assert_eq!(outcome.grid.len(), 2);
    let (heavy, plain) = (&outcome.grid[0], &outcome.grid[1]);
    assert!(plain.mean.auc > heavy.mean.auc, "{} vs {}", plain.mean.auc, heavy.mean.auc);
    assert_eq!(outcome.best.hyperparameters.label(), "beta-0");

    let grid = fs::read_to_string(outcome.run_dir.join("grid.tsv")).unwrap();
    let selected: Vec<&str> =
        grid.lines().skip(1).filter(|l| l.split('\t').nth(1) == Some("1")).map(|l| l.split('\t').next().unwrap()).collect();
    assert_eq!(selected, ["beta-0"]);
}

#[test]
fn single_point_grid_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("pop.tsv");
    common::popularity_dataset(&data, 60, 50, 8, 2);
    let cfg = common::write_config(dir.path(), "exp.toml", &data, "p3", "repetitions = 2");
    let outcome = run_experiment(&load(&cfg)).unwrap();
    assert_eq!(outcome.grid.len(), 1);
    assert_eq!(outcome.best.per_split.len(), 2);

    let manifest = fs::read_to_string(outcome.run_dir.join(MANIFEST)).unwrap();
    let mut lines = manifest.lines();
    assert_eq!(lines.next(), Some("status\tcomplete"));
    let listed: Vec<&str> = lines.map(|l| l.split_once("  ").unwrap().1).collect();
    for k in 0..2 {
        assert!(listed.contains(&format!("default/split-{k}/{RANKED_FILE}").as_str()));
        assert!(listed.contains(&format!("default/split-{k}/metrics.json").as_str()));
    }
    assert!(listed.contains(&"report.json"));
    assert!(listed.contains(&"grid.tsv"));
}

#[test]
fn same_seed_gives_identical_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("pop.tsv");
    common::popularity_dataset(&data, 80, 60, 8, 3);
    let mut runs = Vec::new();
    for name in ["a", "b"] {
        let sub = dir.path().join(name);
        fs::create_dir(&sub).unwrap();
        let cfg = common::write_config(&sub, "exp.toml", &data, "rwe-d", "beta = [0.3, 0.7]\nnu = [0.5, 1.0]\nseed = 9");
        let outcome = run_experiment(&load(&cfg)).unwrap();
        runs.push((
            fs::read(outcome.run_dir.join(MANIFEST)).unwrap(),
            fs::read(outcome.run_dir.join("report.json")).unwrap(),
        ));
    }
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn different_algorithms_share_split_fingerprints() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("pop.tsv");
    common::popularity_dataset(&data, 60, 50, 8, 4);
    let fp = |algo: &str| {
        let cfg = common::write_config(dir.path(), &format!("{algo}.toml"), &data, algo, "seed = 2");
        run_experiment(&load(&cfg)).unwrap().best.fingerprints().into_iter().map(String::from).collect::<Vec<_>>()
    };
    assert_eq!(fp("p3"), fp("itemknn"));
}

#[test]
fn failed_run_leaves_incomplete_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("broken.tsv");
    fs::write(&data, "u1\ti1\nu1\ti2\nthis line is malformed\n").unwrap();
    let cfg = common::write_config(dir.path(), "exp.toml", &data, "p3", "");
    let err = match run_experiment(&load(&cfg)) {
        Err(e) => e,
        Ok(_) => panic!("malformed data accepted"),
    };
    assert!(matches!(err, HarnessError::Stage { stage: Stage::Ingest, .. }), "{err}");
    assert_eq!(err.exit_code(), 2);
    let manifest = fs::read_to_string(dir.path().join("runs/p3").join(MANIFEST)).unwrap();
    assert!(manifest.starts_with("status\tincomplete\t"), "{manifest}");
    assert!(manifest.contains("line 3"), "{manifest}");
    assert_eq!(manifest.lines().count(), 1);
}
