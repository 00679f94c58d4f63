use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rwe_core::eval::{ks_two_sample, stars, welch_t_one_tailed, EvalReport, KsResult};
use rwe_core::ideology::PositionTable;
use rwe_core::recommenders::RANKED_HEADER;

use crate::config::ItemKind;
use crate::error::{HarnessError, Result};
use crate::experiment::{split_dir_name, RANKED_FILE};
use crate::positions::item_position;

/// Welch test of one metric across paired splits.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub metric: String,
    pub mean_a: f64,
    pub mean_b: f64,
    /// `None` when the test is undefined (both samples constant).
    pub t: Option<f64>,
    pub df: Option<f64>,
    pub p_value: Option<f64>,
    pub stars: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub a: String,
    pub b: String,
    pub rows: Vec<ComparisonRow>,
    pub ks: Option<KsResult>,
}

impl Comparison {
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "metric\t{}\t{}\tt\tdf\tp_value\tsig", self.a, self.b)?;
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_else(|| "NA".into());
        for r in &self.rows {
            writeln!(
                out,
                "{}\t{:.6}\t{:.6}\t{}\t{}\t{}\t{}",
                r.metric,
                r.mean_a,
                r.mean_b,
                opt(r.t),
                opt(r.df),
                r.p_value.map(|p| format!("{p:.3e}")).unwrap_or_else(|| "NA".into()),
                r.stars
            )?;
        }
        if let Some(ks) = &self.ks {
            writeln!(out, "KS-positions\t\t\t{:.6}\t\t{:.3e}\t{}", ks.statistic, ks.p_value, stars(ks.p_value))?;
        }
        Ok(())
    }
}

/// One-tailed Welch tests (`a > b`) of each metric over the paired splits,
/// plus a KS test on pooled position samples when given. Both reports must
/// come from identical splits.
pub fn compare_runs(
    a: &EvalReport,
    b: &EvalReport,
    metrics: &[String],
    pooled: Option<(&[f64], &[f64])>,
) -> Result<Comparison> {
    let (fa, fb) = (a.fingerprints(), b.fingerprints());
    if fa.len() != fb.len() {
        return Err(HarnessError::FingerprintMismatch { split: fa.len().min(fb.len()) });
    }
    if let Some(k) = fa.iter().zip(&fb).position(|(x, y)| x != y) {
        return Err(HarnessError::FingerprintMismatch { split: k });
    }
    let mut rows = Vec::new();
    for name in metrics {
        let missing = |r: &EvalReport| HarnessError::Usage(format!("metric '{name}' not available for {}", r.algorithm));
        let xa = a.series(name).ok_or_else(|| missing(a))?;
        let xb = b.series(name).ok_or_else(|| missing(b))?;
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let test = welch_t_one_tailed(&xa, &xb).ok();
        rows.push(ComparisonRow {
            metric: name.clone(),
            mean_a: mean(&xa),
            mean_b: mean(&xb),
            t: test.map(|w| w.t),
            df: test.map(|w| w.df),
            p_value: test.map(|w| w.p_value),
            stars: test.map(|w| stars(w.p_value)).unwrap_or(""),
        });
    }
    let ks = match pooled {
        Some((pa, pb)) => Some(ks_two_sample(pa, pb)?),
        None => None,
    };
    Ok(Comparison { a: a.algorithm.clone(), b: b.algorithm.clone(), rows, ks })
}

/// `(user_id, rank, item_id)` rows of a ranked-list file.
pub fn read_ranked_rows(path: &Path) -> Result<Vec<(String, usize, String)>> {
    let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let mut rows = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| HarnessError::io(path, e))?;
        if line.trim().is_empty() || (n == 0 && line == RANKED_HEADER) {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        let bad = || HarnessError::File {
            path: path.to_path_buf(),
            source: rwe_core::Error::Parse { line: n + 1, message: "expected user, rank, item, score".into() },
        };
        if f.len() != 4 {
            return Err(bad());
        }
        rows.push((f[0].to_string(), f[1].parse().map_err(|_| bad())?, f[2].to_string()));
    }
    Ok(rows)
}

/// Ranked rows of the selected grid point of a run, across its splits.
pub fn winning_rows(run_dir: &Path, report: &EvalReport) -> Result<Vec<(String, usize, String)>> {
    let point = run_dir.join(report.hyperparameters.label());
    let mut all = Vec::new();
    for s in &report.per_split {
        all.extend(read_ranked_rows(&point.join(split_dir_name(s.split)).join(RANKED_FILE))?);
    }
    Ok(all)
}

/// Positions of all top-`k` recommendations of a run, pooled over splits.
pub fn pooled_positions(
    run_dir: &Path,
    report: &EvalReport,
    table: &PositionTable,
    kind: ItemKind,
    k: usize,
) -> Result<Vec<f64>> {
    winning_rows(run_dir, report)?
        .into_iter()
        .filter(|(_, rank, _)| *rank <= k)
        .map(|(_, _, item)| item_position(table, kind, &item).ok_or(rwe_core::Error::MissingPosition(item).into()))
        .collect()
}

pub fn load_report(run_dir: &Path) -> Result<EvalReport> {
    let path = run_dir.join("report.json");
    let text = std::fs::read_to_string(&path).map_err(|e| HarnessError::io(&path, e))?;
    EvalReport::from_json(&text).map_err(|source| HarnessError::File { path, source })
}
