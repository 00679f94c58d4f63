use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::accuracy::{aggregate, tally_user};
use super::ideological::{ideological_battery, rec_range, IdeologicalBattery};
use super::longtail::longtail_metrics;
use super::split::Split;
use crate::error::{Error, Result};
use crate::positions::Positions;
use crate::recommenders::{rank_all, Hyperparams, RankedList, Recommender};

/// List lengths each metric family is computed at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cutoffs {
    /// HR and P.
    pub accuracy: usize,
    /// GiniD, AvgDeg, Pers and Surp.
    pub longtail: usize,
    /// RecRange and the ideological battery.
    pub ideological: usize,
}

impl Default for Cutoffs {
    fn default() -> Self {
        Cutoffs { accuracy: 10, longtail: 20, ideological: 10 }
    }
}

impl Cutoffs {
    pub fn max(&self) -> usize {
        self.accuracy.max(self.longtail).max(self.ideological)
    }
}

/// One set of metric values, for a single split or averaged over splits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub auc: f64,
    pub hit_rate: f64,
    pub precision: f64,
    pub mean_rank: f64,
    pub gini_diversity: f64,
    pub avg_degree: f64,
    pub personalization: f64,
    pub surprisal: f64,
    pub rec_range: Option<f64>,
    pub battery: Option<IdeologicalBattery>,
}

impl Metrics {
    /// `(display name, value)` in report column order.
    pub fn entries(&self, cutoffs: &Cutoffs) -> Vec<(String, Option<f64>)> {
        let (a, l, r) = (cutoffs.accuracy, cutoffs.longtail, cutoffs.ideological);
        let mut out = vec![
            ("AUC".to_string(), Some(self.auc)),
            (format!("HR@{a}"), Some(self.hit_rate)),
            (format!("P@{a}"), Some(self.precision)),
            ("MR".to_string(), Some(self.mean_rank)),
            (format!("GiniD@{l}"), Some(self.gini_diversity)),
            (format!("AvgDeg@{l}"), Some(self.avg_degree)),
            (format!("Pers@{l}"), Some(self.personalization)),
            (format!("Surp@{l}"), Some(self.surprisal)),
            (format!("RecRange@{r}"), self.rec_range),
        ];
        let battery = self.battery.map(|b| b.values());
        for (k, name) in IdeologicalBattery::NAMES.iter().enumerate() {
            out.push((name.to_string(), battery.map(|v| v[k])));
        }
        out
    }

    pub fn get(&self, name: &str, cutoffs: &Cutoffs) -> Option<f64> {
        self.entries(cutoffs).into_iter().find(|(n, _)| n == name).and_then(|(_, v)| v)
    }

    /// Field-wise mean; optional values are kept only when every input has
    /// them.
    pub fn mean_of(items: &[Metrics]) -> Option<Metrics> {
        if items.is_empty() {
            return None;
        }
        let n = items.len() as f64;
        let avg = |f: fn(&Metrics) -> f64| items.iter().map(f).sum::<f64>() / n;
        let rec_range = items.iter().map(|m| m.rec_range).collect::<Option<Vec<f64>>>().map(|v| v.iter().sum::<f64>() / n);
        let battery = items
            .iter()
            .map(|m| m.battery)
            .collect::<Option<Vec<_>>>()
            .and_then(|v| IdeologicalBattery::mean_of(&v));
        Some(Metrics {
            auc: avg(|m| m.auc),
            hit_rate: avg(|m| m.hit_rate),
            precision: avg(|m| m.precision),
            mean_rank: avg(|m| m.mean_rank),
            gini_diversity: avg(|m| m.gini_diversity),
            avg_degree: avg(|m| m.avg_degree),
            personalization: avg(|m| m.personalization),
            surprisal: avg(|m| m.surprisal),
            rec_range,
            battery,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitResult {
    pub split: usize,
    pub seed: u64,
    pub fingerprint: String,
    pub evaluated_users: usize,
    pub metrics: Metrics,
}

/// Metrics for one algorithm at one grid point over all splits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub algorithm: String,
    pub hyperparameters: Hyperparams,
    pub seed: u64,
    pub cutoffs: Cutoffs,
    pub per_split: Vec<SplitResult>,
    pub mean: Metrics,
}

impl EvalReport {
    pub fn new(
        algorithm: impl Into<String>,
        hyperparameters: Hyperparams,
        seed: u64,
        cutoffs: Cutoffs,
        per_split: Vec<SplitResult>,
    ) -> Result<Self> {
        let metrics: Vec<Metrics> = per_split.iter().map(|s| s.metrics).collect();
        let mean = Metrics::mean_of(&metrics).ok_or(Error::NoEvaluatedUsers)?;
        Ok(EvalReport { algorithm: algorithm.into(), hyperparameters, seed, cutoffs, per_split, mean })
    }

    /// Per-split values of a metric, by display name.
    pub fn series(&self, name: &str) -> Option<Vec<f64>> {
        self.per_split.iter().map(|s| s.metrics.get(name, &self.cutoffs)).collect()
    }

    pub fn fingerprints(&self) -> Vec<&str> {
        self.per_split.iter().map(|s| s.fingerprint.as_str()).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse { line: e.line(), message: e.to_string() })
    }

    /// Aligned table with one row per split plus a `mean` row.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let names: Vec<String> = self.mean.entries(&self.cutoffs).into_iter().map(|(n, _)| n).collect();
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_else(|| "NA".into());
        let mut rows = vec![std::iter::once("split".to_string()).chain(names).collect::<Vec<_>>()];
        for s in &self.per_split {
            let mut row = vec![s.split.to_string()];
            row.extend(s.metrics.entries(&self.cutoffs).into_iter().map(|(_, v)| fmt(v)));
            rows.push(row);
        }
        let mut mean = vec!["mean".to_string()];
        mean.extend(self.mean.entries(&self.cutoffs).into_iter().map(|(_, v)| fmt(v)));
        rows.push(mean);
        let widths: Vec<usize> =
            (0..rows[0].len()).map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0)).collect();
        for row in rows {
            let cells: Vec<String> = row.iter().zip(&widths).map(|(cell, &w)| format!("{cell:<w$}")).collect();
            writeln!(out, "{}", cells.join("\t").trim_end())?;
        }
        Ok(())
    }
}

/// What [`evaluate_split`] computes beyond accuracy and long-tail metrics.
#[derive(Debug, Clone, Copy, Default)]
pub struct EvalOptions<'a> {
    pub cutoffs: Cutoffs,
    /// Item positions enable RecRange; user positions additionally enable
    /// the battery when `battery` is set.
    pub positions: Option<&'a Positions>,
    pub battery: bool,
    /// Seed for sampled personalization pairs.
    pub seed: u64,
}

/// Scores every user with held-out items once, then computes all metrics.
/// Returns the result together with each user's top-`cutoffs.max()` list.
pub fn evaluate_split(
    rec: &dyn Recommender,
    split: &Split,
    opts: &EvalOptions<'_>,
) -> Result<(SplitResult, Vec<RankedList>)> {
    let train = &split.train;
    let users = split.test.users();
    let keep = opts.cutoffs.max();
    let per_user: Vec<_> = users
        .par_iter()
        .map(|&u| {
            let scores = rec.score(u)?;
            let full = rank_all(u, &scores, train.items_of(u), train.num_items());
            let tally = tally_user(&full, split.test.items_of(u), opts.cutoffs.accuracy);
            Ok((tally, full.truncated(keep)))
        })
        .collect::<Result<_>>()?;
    let (tallies, lists): (Vec<_>, Vec<_>) = per_user.into_iter().unzip();
    let accuracy = aggregate(&tallies, opts.cutoffs.accuracy)?;
    let longtail = longtail_metrics(&lists, train, opts.cutoffs.longtail, opts.seed);
    let (range, battery) = match opts.positions {
        Some(p) => {
            let range = rec_range(&lists, p, opts.cutoffs.ideological)?;
            let battery =
                if opts.battery { Some(ideological_battery(&lists, train, p, opts.cutoffs.ideological)?) } else { None };
            (Some(range), battery)
        }
        None => (None, None),
    };
    let metrics = Metrics {
        auc: accuracy.auc,
        hit_rate: accuracy.hit_rate,
        precision: accuracy.precision,
        mean_rank: accuracy.mean_rank,
        gini_diversity: longtail.gini_diversity,
        avg_degree: longtail.avg_degree,
        personalization: longtail.personalization,
        surprisal: longtail.surprisal,
        rec_range: range,
        battery,
    };
    let result = SplitResult {
        split: split.rep,
        seed: split.seed,
        fingerprint: split.fingerprint.clone(),
        evaluated_users: accuracy.users,
        metrics,
    };
    Ok((result, lists))
}
