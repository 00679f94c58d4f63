mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rwe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rwe")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_and_usage_exit_codes() {
    assert_eq!(rwe(&["--help"]).status.code(), Some(0));
    for sub in ["ingest", "split", "fit-ideology", "recommend", "evaluate", "grid", "compare", "export-hist"] {
        let o = rwe(&[sub, "--help"]);
        assert_eq!(o.status.code(), Some(0), "{sub}");
        assert!(stdout(&o).contains("Usage"), "{sub}");
    }
    assert_eq!(rwe(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(rwe(&["ingest", "--dataset", "x", "--format", "csv"]).status.code(), Some(1));
}

#[test]
fn config_errors_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("pop.tsv");
    common::popularity_dataset(&data, 20, 20, 5, 0);
    let cfg = common::write_config(dir.path(), "bad.toml", &data, "svd", "");
    assert_eq!(rwe(&["grid", "--config", s(&cfg)]).status.code(), Some(1));
    let cfg = common::write_config(dir.path(), "rweb.toml", &data, "rwe-b", "");
    assert_eq!(rwe(&["grid", "--config", s(&cfg)]).status.code(), Some(1));
    let cfg = common::write_config(dir.path(), "typo.toml", &data, "p3", "betta = [1.0]");
    assert_eq!(rwe(&["grid", "--config", s(&cfg)]).status.code(), Some(1));
    let o = rwe(&["recommend", "--dataset", s(&data), "--format", "tsv-edges", "--algorithm", "p3", "--beta", "0.5"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bad.dat");
    fs::write(&data, "1::10::5::978300760\n1::11::x::978300761\n").unwrap();
    let o = rwe(&["ingest", "--dataset", s(&data), "--format", "movielens-dat"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    let o = rwe(&["ingest", "--dataset", s(&dir.path().join("missing")), "--format", "tsv-edges"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn ingest_split_and_recommend() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("ml.dat");
    let mut text = String::new();
    for u in 1..=6 {
        for i in 1..=8 {
            if (u + i) % 3 != 0 {
                text.push_str(&format!("{u}::{}::4::97830076{i}\n", 1000 + i));
            }
        }
    }
    fs::write(&data, text).unwrap();
    let o = rwe(&["ingest", "--dataset", s(&data), "--format", "movielens-dat"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("users\t6\nitems\t8\n"));

    let splits = dir.path().join("splits");
    let args = ["split", "--dataset", s(&data), "--format", "movielens-dat", "--outdir", s(&splits), "--seed", "3"];
    let first = rwe(&args);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(stdout(&first), stdout(&rwe(&args)));
    for k in 0..3 {
        let test = fs::read_to_string(splits.join(format!("split-{k}/test.tsv"))).unwrap();
        let train = fs::read_to_string(splits.join(format!("split-{k}/train.tsv"))).unwrap();
        assert!(!test.is_empty());
        assert!(test.lines().all(|l| !train.lines().any(|t| t == l)));
    }

    let out = dir.path().join("recs.tsv");
    let o = rwe(&[
        "recommend", "--dataset", s(&data), "--format", "movielens-dat", "--algorithm", "rwe-d", "--beta", "0.7", "--nu",
        "0.7", "--k", "2", "--out", s(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let recs = fs::read_to_string(&out).unwrap();
    // Every user has at least two unseen items.
    assert_eq!(recs.lines().skip(1).count(), 12);
}

#[test]
fn grid_compare_and_histogram() {
    let dir = tempfile::tempdir().unwrap();
    let p = common::polarized_dataset(dir.path(), 7);
    let pos = format!("positions = {:?}", p.positions);
    for algo in ["p3", "rwe-b"] {
        let cfg = common::write_config(dir.path(), &format!("{algo}.toml"), &p.edges, algo, &pos);
        let o = rwe(&["grid", "--config", s(&cfg)]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).contains("RecRange@10"));
    }
    let runs = dir.path().join("runs");
    let o = rwe(&[
        "compare", "--a", s(&runs.join("rwe-b")), "--b", s(&runs.join("p3")), "--positions", s(&p.positions), "--metric",
        "RecRange@10", "--metric", "AUC",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let table = stdout(&o);
    assert!(table.starts_with("metric\trwe-b\tp3\t"));
    assert!(table.lines().any(|l| l.starts_with("RecRange@10\t")));
    assert!(table.lines().any(|l| l.starts_with("KS-positions\t")));

    let hist = dir.path().join("hist.tsv");
    let o = rwe(&["export-hist", "--run", s(&runs.join("rwe-b")), "--positions", s(&p.positions), "--out", s(&hist)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let hist = fs::read_to_string(hist).unwrap();
    assert_eq!(hist.lines().next(), Some("bin_lo\tbin_hi\tLeft\tCenter\tRight"));
    assert_eq!(hist.lines().count(), 21);
}

#[test]
fn compare_rejects_different_splits() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("pop.tsv");
    common::popularity_dataset(&data, 40, 30, 6, 1);
    for (algo, seed) in [("p3", 1), ("rp3b", 2)] {
        let cfg = common::write_config(dir.path(), "c.toml", &data, algo, &format!("seed = {seed}"));
        assert_eq!(rwe(&["grid", "--config", s(&cfg)]).status.code(), Some(0));
    }
    let runs = dir.path().join("runs");
    let o = rwe(&["compare", "--a", s(&runs.join("p3")), "--b", s(&runs.join("rp3b"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("fingerprint"));
}

#[test]
fn fit_ideology_and_external_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let elites = dir.path().join("elites.tsv");
    let mut text = String::new();
    for u in 0..30 {
        let side = if u < 15 { ["e0", "e1"] } else { ["e2", "e3"] };
        for e in side {
            text.push_str(&format!("u{u}\t{e}\t{}\n", 1 + u % 3));
        }
        if u % 5 == 0 {
            text.push_str(&format!("u{u}\t{}\t1\n", if u < 15 { "e2" } else { "e1" }));
        }
    }
    fs::write(&elites, text).unwrap();
    let model = dir.path().join("model.tsv");
    let o = rwe(&[
        "fit-ideology", "--elite-edges", s(&elites), "--out", s(&model), "--anchor-elite", "e3", "--anchor-sign", "1",
        "--weighting", "log-count",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(&model).unwrap();
    let pos = |id: &str| -> f64 {
        table.lines().find(|l| l.starts_with(&format!("elite\t{id}\t"))).unwrap().split('\t').nth(2).unwrap().parse().unwrap()
    };
    assert!(pos("e3") > 0.0 && pos("e0") < 0.0);
    assert_eq!(rwe(&["fit-ideology", "--out", s(&model)]).status.code(), Some(1));

    // Lists from a finished run fed back in as an external system give the
    // same accuracy numbers.
    let data = dir.path().join("pop.tsv");
    common::popularity_dataset(&data, 50, 40, 8, 6);
    let cfg = common::write_config(dir.path(), "p3.toml", &data, "p3", "seed = 4");
    assert_eq!(rwe(&["evaluate", "--config", s(&cfg)]).status.code(), Some(0));
    let o = rwe(&[
        "evaluate", "--config", s(&cfg), "--ranked-dir", s(&dir.path().join("runs/p3/default")), "--label", "replay",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let metric = |run: &str, name: &str| -> f64 {
        let text = fs::read_to_string(dir.path().join("runs").join(run).join("report.json")).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v["mean"][name].as_f64().unwrap()
    };
    assert_eq!(metric("p3", "hit_rate"), metric("replay", "hit_rate"));
    assert_eq!(metric("p3", "precision"), metric("replay", "precision"));
}
