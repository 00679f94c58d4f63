use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use rwe_core::eval::{
    accuracy_metrics, evaluate_split, ideological_battery, longtail_metrics, rec_range, split, Cutoffs, EvalOptions,
    EvalReport, Metrics, Split, SplitResult,
};
use rwe_core::recommenders::{read_ranked_tsv, write_ranked_tsv, BuildContext, Hyperparams, RecommenderRegistry};
use rwe_core::{build_graph, transition, FeedbackGraph, Positions, RankedList, TransitionMatrix};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::dataset::parse_dataset;
use crate::error::{AtStage, HarnessError, Result, Stage};
use crate::positions::{fit_positions, graph_positions, load_endorsements, load_position_table, table_from_model, write_model};
use crate::seeds::derive_seed;

pub const MANIFEST: &str = "MANIFEST";
pub const RANKED_FILE: &str = "ranked.tsv";
pub const MODEL_FILE: &str = "ideology-model.tsv";

/// A split with its training graph and transition matrix shared across
/// grid points.
pub struct PreparedSplit {
    pub split: Split,
    pub train: Arc<FeedbackGraph>,
    pub transition: Arc<TransitionMatrix>,
}

impl PreparedSplit {
    pub fn new(split: Split) -> Self {
        let train = Arc::new(split.train.clone());
        let transition = Arc::new(transition(&train));
        PreparedSplit { split, train, transition }
    }
}

pub fn split_dir_name(rep: usize) -> String {
    format!("split-{rep}")
}

/// Evaluates one grid point on every split. Returns the report and each
/// split's top lists.
pub fn evaluate_point(
    registry: &RecommenderRegistry,
    algorithm: &str,
    params: &Hyperparams,
    splits: &[PreparedSplit],
    positions: Option<&Positions>,
    seed: u64,
) -> Result<(EvalReport, Vec<Vec<RankedList>>)> {
    let battery = positions.is_some_and(|p| p.complete_users().is_ok());
    let results: Vec<(SplitResult, Vec<RankedList>)> = splits
        .par_iter()
        .map(|s| {
            let ctx = BuildContext {
                train: Arc::clone(&s.train),
                transition: Arc::clone(&s.transition),
                positions,
                params,
            };
            let rec = registry.build(algorithm, &ctx).at(Stage::Build)?;
            let opts = EvalOptions {
                cutoffs: Cutoffs::default(),
                positions,
                battery,
                seed: derive_seed(seed, "personalization", s.split.rep as u64),
            };
            evaluate_split(rec.as_ref(), &s.split, &opts).at(Stage::Evaluate)
        })
        .collect::<Result<_>>()?;
    let (per_split, lists): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let report =
        EvalReport::new(algorithm, params.clone(), seed, Cutoffs::default(), per_split).at(Stage::Evaluate)?;
    Ok((report, lists))
}

/// Index of the report with the highest mean AUC; the first wins ties.
pub fn select_best(reports: &[EvalReport]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (k, r) in reports.iter().enumerate() {
        let auc = r.mean.auc;
        if auc.is_nan() {
            continue;
        }
        if best.is_none_or(|b| auc > reports[b].mean.auc) {
            best = Some(k);
        }
    }
    best.or(if reports.is_empty() { None } else { Some(0) })
}

/// Everything one experiment produced.
pub struct ExperimentOutcome {
    pub best: EvalReport,
    pub grid: Vec<EvalReport>,
    /// `<outdir>/<algorithm>`.
    pub run_dir: PathBuf,
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| HarnessError::io(parent, e))?;
    }
    let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut out = BufWriter::new(file);
    f(&mut out).and_then(|_| out.flush()).map_err(|e| HarnessError::io(path, e))
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| HarnessError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Writes `<run_dir>/MANIFEST`: a status line, then `sha256  path` for each
/// of `artifacts` (relative to `run_dir`) that exists, sorted by path.
pub fn write_manifest(run_dir: &Path, artifacts: &[String], failure: Option<&HarnessError>) -> Result<()> {
    let mut rel: Vec<&String> = artifacts.iter().filter(|r| run_dir.join(r).is_file()).collect();
    rel.sort();
    let mut lines = vec![match failure {
        None => "status\tcomplete".to_string(),
        Some(e) => format!("status\tincomplete\t{}", e.to_string().replace('\n', " ")),
    }];
    for r in rel {
        lines.push(format!("{}  {}", sha256_file(&run_dir.join(r))?, r));
    }
    write_file(&run_dir.join(MANIFEST), |out| writeln!(out, "{}", lines.join("\n")))
}

/// Every file a run of `cfg` writes, relative to its run directory.
pub fn expected_artifacts(cfg: &ExperimentConfig) -> Vec<String> {
    let mut out = vec!["report.json".to_string(), "report.tsv".to_string(), "grid.tsv".to_string()];
    if cfg.positions.is_none() && (cfg.elite_edges.is_some() || cfg.content_edges.is_some()) {
        out.push(MODEL_FILE.to_string());
    }
    for params in cfg.grid_points() {
        for rep in 0..cfg.repetitions {
            for file in [RANKED_FILE, "metrics.json"] {
                out.push(format!("{}/{}/{}", params.label(), split_dir_name(rep), file));
            }
        }
    }
    out
}

/// Loads the interaction graph named by the config.
pub fn load_graph(cfg: &ExperimentConfig) -> Result<FeedbackGraph> {
    let records = parse_dataset(&cfg.dataset, cfg.format)?;
    let pairs: Vec<(&str, &str)> = records.iter().map(|r| (r.user_id.as_str(), r.item_id.as_str())).collect();
    Ok(build_graph(&pairs, cfg.min_user_degree, cfg.min_item_degree)?)
}

/// Positions from a table file or a fresh fit; the fitted model is saved
/// into `run_dir`.
pub fn load_positions(cfg: &ExperimentConfig, graph: &FeedbackGraph, run_dir: &Path) -> Result<Option<Positions>> {
    if let Some(path) = &cfg.positions {
        let table = load_position_table(path)?;
        return Ok(Some(graph_positions(&table, graph, cfg.item_kind)));
    }
    if cfg.elite_edges.is_none() && cfg.content_edges.is_none() {
        return Ok(None);
    }
    let data = load_endorsements(cfg.elite_edges.as_deref(), cfg.content_edges.as_deref(), cfg.fit_weighting)?;
    let fit_cfg = cfg.fit_config(derive_seed(cfg.seed, "ideology", 0));
    let anchor = cfg.anchor_elite.as_deref().map(|id| (id, cfg.anchor_sign));
    let model = fit_positions(&data, &fit_cfg, anchor)?;
    fs::create_dir_all(run_dir).map_err(|e| HarnessError::io(run_dir, e))?;
    write_model(&run_dir.join(MODEL_FILE), &model, &data)?;
    Ok(Some(graph_positions(&table_from_model(&model, &data), graph, cfg.item_kind)))
}

fn write_grid_tsv(path: &Path, reports: &[EvalReport], best: usize) -> Result<()> {
    write_file(path, |out| {
        let names: Vec<String> = reports[0].mean.entries(&reports[0].cutoffs).into_iter().map(|(n, _)| n).collect();
        writeln!(out, "gridpoint\tselected\t{}", names.join("\t"))?;
        for (k, r) in reports.iter().enumerate() {
            let vals: Vec<String> = r
                .mean
                .entries(&r.cutoffs)
                .into_iter()
                .map(|(_, v)| v.map(|x| format!("{x:.6}")).unwrap_or_else(|| "NA".into()))
                .collect();
            writeln!(out, "{}\t{}\t{}", r.hyperparameters.label(), u8::from(k == best), vals.join("\t"))?;
        }
        Ok(())
    })
}

fn run_inner(cfg: &ExperimentConfig, run_dir: &Path) -> Result<ExperimentOutcome> {
    cfg.validate().at(Stage::Config)?;
    let graph = load_graph(cfg).at(Stage::Ingest)?;
    let positions = load_positions(cfg, &graph, run_dir).at(Stage::Positions)?;
    let spec = cfg.split_spec(derive_seed(cfg.seed, "split", 0));
    let splits: Vec<PreparedSplit> =
        split(&graph, &spec).at(Stage::Split)?.into_iter().map(PreparedSplit::new).collect();
    let registry = RecommenderRegistry::default();
    let grid = cfg.grid_points();
    let algo = cfg.algorithm.as_str();

    let reports: Vec<EvalReport> = grid
        .par_iter()
        .map(|params| {
            let (report, lists) = evaluate_point(&registry, algo, params, &splits, positions.as_ref(), cfg.seed)?;
            let point_dir = run_dir.join(params.label());
            for ((s, lists), result) in splits.iter().zip(&lists).zip(&report.per_split) {
                let dir = point_dir.join(split_dir_name(s.split.rep));
                let top: Vec<RankedList> = lists.iter().map(|l| l.truncated(report.cutoffs.longtail)).collect();
                write_file(&dir.join(RANKED_FILE), |out| write_ranked_tsv(out, &graph, &top)).at(Stage::Write)?;
                let json = serde_json::to_string_pretty(result).expect("split result serializes");
                write_file(&dir.join("metrics.json"), |out| writeln!(out, "{json}")).at(Stage::Write)?;
            }
            Ok(report)
        })
        .collect::<Result<_>>()?;

    let best = select_best(&reports).expect("grid is non-empty");
    let winner = &reports[best];
    write_file(&run_dir.join("report.json"), |out| writeln!(out, "{}", winner.to_json())).at(Stage::Write)?;
    write_file(&run_dir.join("report.tsv"), |out| winner.write_tsv(out)).at(Stage::Write)?;
    write_grid_tsv(&run_dir.join("grid.tsv"), &reports, best).at(Stage::Write)?;
    Ok(ExperimentOutcome { best: winner.clone(), grid: reports, run_dir: run_dir.to_path_buf() })
}

/// Runs every grid point on every split, keeps the point with the best
/// mean AUC and writes all artifacts plus a MANIFEST under
/// `<outdir>/<algorithm>/`. On failure the MANIFEST is marked incomplete.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let run_dir = cfg.outdir.join(&cfg.algorithm);
    let artifacts = expected_artifacts(cfg);
    match run_inner(cfg, &run_dir) {
        Ok(outcome) => {
            write_manifest(&run_dir, &artifacts, None).at(Stage::Write)?;
            Ok(outcome)
        }
        Err(e) => {
            // Best effort: the original error matters more than this one.
            let _ = write_manifest(&run_dir, &artifacts, Some(&e));
            Err(e)
        }
    }
}

/// Evaluates externally produced ranked lists, read from
/// `<ranked_dir>/split-<k>/ranked.tsv`, on the config's splits. Partial
/// lists are completed with the unlisted items for AUC and MR.
pub fn evaluate_external(cfg: &ExperimentConfig, ranked_dir: &Path, label: &str) -> Result<EvalReport> {
    let run_dir = cfg.outdir.join(label);
    let result = (|| {
        let graph = load_graph(cfg).at(Stage::Ingest)?;
        let positions = load_positions(cfg, &graph, &run_dir).at(Stage::Positions)?;
        let spec = cfg.split_spec(derive_seed(cfg.seed, "split", 0));
        let cutoffs = Cutoffs::default();
        let mut per_split = Vec::new();
        for s in split(&graph, &spec).at(Stage::Split)? {
            let path = ranked_dir.join(split_dir_name(s.rep)).join(RANKED_FILE);
            let file = File::open(&path).map_err(|e| HarnessError::io(&path, e)).at(Stage::Ingest)?;
            let lists = read_ranked_tsv(std::io::BufReader::new(file), &graph)
                .map_err(|source| HarnessError::File { path: path.clone(), source })
                .at(Stage::Ingest)?;
            let lists: Vec<RankedList> =
                lists.into_iter().filter(|l| !s.test.items_of(l.user).is_empty()).collect();
            per_split.push(evaluate_lists(&s, &lists, positions.as_ref(), cutoffs, derive_seed(cfg.seed, "personalization", s.rep as u64)).at(Stage::Evaluate)?);
        }
        let report = EvalReport::new(label, Hyperparams::new(), cfg.seed, cutoffs, per_split).at(Stage::Evaluate)?;
        write_file(&run_dir.join("report.json"), |out| writeln!(out, "{}", report.to_json())).at(Stage::Write)?;
        write_file(&run_dir.join("report.tsv"), |out| report.write_tsv(out)).at(Stage::Write)?;
        Ok(report)
    })();
    let mut artifacts = vec!["report.json".to_string(), "report.tsv".to_string()];
    if cfg.positions.is_none() && (cfg.elite_edges.is_some() || cfg.content_edges.is_some()) {
        artifacts.push(MODEL_FILE.to_string());
    }
    match &result {
        Ok(_) => write_manifest(&run_dir, &artifacts, None).at(Stage::Write)?,
        Err(e) => {
            let _ = write_manifest(&run_dir, &artifacts, Some(e));
        }
    }
    result
}

fn evaluate_lists(
    s: &Split,
    lists: &[RankedList],
    positions: Option<&Positions>,
    cutoffs: Cutoffs,
    seed: u64,
) -> rwe_core::Result<SplitResult> {
    let accuracy = accuracy_metrics(lists, &s.test, &s.train, cutoffs.accuracy)?;
    let top: Vec<RankedList> = lists.iter().map(|l| l.truncated(cutoffs.longtail)).collect();
    let longtail = longtail_metrics(&top, &s.train, cutoffs.longtail, seed);
    let (range, battery) = match positions {
        Some(p) => {
            let battery = if p.complete_users().is_ok() {
                Some(ideological_battery(lists, &s.train, p, cutoffs.ideological)?)
            } else {
                None
            };
            (Some(rec_range(lists, p, cutoffs.ideological)?), battery)
        }
        None => (None, None),
    };
    Ok(SplitResult {
        split: s.rep,
        seed: s.seed,
        fingerprint: s.fingerprint.clone(),
        evaluated_users: accuracy.users,
        metrics: Metrics {
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
        },
    })
}
