use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rwe_core::eval::{histogram_export, split, SplitSpec};
use rwe_core::ideology::{classify, FitConfig};
use rwe_core::recommenders::{recommend_all, write_ranked_tsv, BuildContext, Hyperparams, RecommenderRegistry};
use rwe_core::{build_graph, FeedbackGraph};

use crate::compare::{compare_runs, load_report, pooled_positions, winning_rows};
use crate::config::{ExperimentConfig, ItemKind, Weighting};
use crate::dataset::{parse_dataset, Format};
use crate::error::{HarnessError, Result};
use crate::experiment::{evaluate_external, run_experiment, split_dir_name};
use crate::positions::{fit_positions, graph_positions, load_endorsements, load_position_table, write_model};
use crate::seeds::derive_seed;

#[derive(Debug, Parser)]
#[command(name = "rwe", version, about = "Random walk with erasure recommenders: experiments and evaluation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a dataset and report its size after degree filtering.
    Ingest(IngestArgs),
    /// Write train/test splits.
    Split(SplitArgs),
    /// Fit ideological positions from user→elite and user→content edges.
    FitIdeology(FitArgs),
    /// Train on the full dataset and write top-k lists for every user.
    Recommend(RecommendArgs),
    /// Evaluate the first grid point of a config, or external ranked lists.
    Evaluate(EvaluateArgs),
    /// Run the full hyperparameter grid of a config and keep the best AUC.
    Grid(RunArgs),
    /// Significance tests between two runs on the same splits.
    Compare(CompareArgs),
    /// Histogram of recommended-item positions per user leaning.
    ExportHist(HistArgs),
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_parser = parse_format)]
    pub format: Format,
    #[arg(long, default_value_t = 1)]
    pub min_user_degree: usize,
    #[arg(long, default_value_t = 1)]
    pub min_item_degree: usize,
}

fn parse_format(s: &str) -> std::result::Result<Format, String> {
    s.parse().map_err(|e: HarnessError| e.to_string())
}

fn parse_item_kind(s: &str) -> std::result::Result<ItemKind, String> {
    match s {
        "elite" => Ok(ItemKind::Elite),
        "content" => Ok(ItemKind::Content),
        other => Err(format!("unknown item kind '{other}' (expected elite or content)")),
    }
}

fn parse_weighting(s: &str) -> std::result::Result<Weighting, String> {
    match s {
        "unit" => Ok(Weighting::Unit),
        "log-count" => Ok(Weighting::LogCount),
        other => Err(format!("unknown weighting '{other}' (expected unit or log-count)")),
    }
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    /// Also write the filtered edges as tsv-edges.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    #[arg(long)]
    pub outdir: PathBuf,
    #[arg(long, default_value_t = 0.3)]
    pub test_fraction: f64,
    #[arg(long, default_value_t = 4)]
    pub min_interactions: usize,
    #[arg(long, default_value_t = 3)]
    pub repetitions: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub elite_edges: Option<PathBuf>,
    #[arg(long)]
    pub content_edges: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = FitConfig::default().lambda)]
    pub lambda: f64,
    #[arg(long, default_value_t = FitConfig::default().mu)]
    pub mu: f64,
    #[arg(long, default_value_t = FitConfig::default().learning_rate)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = FitConfig::default().max_epochs)]
    pub max_epochs: usize,
    #[arg(long, default_value = "unit", value_parser = parse_weighting)]
    pub weighting: Weighting,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Elite whose position fixes the sign of the scale.
    #[arg(long)]
    pub anchor_elite: Option<String>,
    #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
    pub anchor_sign: i8,
}

#[derive(Debug, Args)]
pub struct RecommendArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    #[arg(long)]
    pub algorithm: String,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub neighbors: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub walk_length: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Position table for rwe-b.
    #[arg(long)]
    pub positions: Option<PathBuf>,
    #[arg(long, default_value = "content", value_parser = parse_item_kind)]
    pub item_kind: ItemKind,
    #[arg(long, default_value_t = 20)]
    pub k: usize,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub outdir: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Directory with `split-<k>/ranked.tsv` files from an external system.
    #[arg(long)]
    pub ranked_dir: Option<PathBuf>,
    /// Name for the external system's results.
    #[arg(long, default_value = "external")]
    pub label: String,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Run directory `<outdir>/<algorithm>` of the first system.
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    /// Metrics to test; defaults to RecRange@10 when both runs have it,
    /// AUC otherwise.
    #[arg(long = "metric")]
    pub metrics: Vec<String>,
    /// Position table for the KS test on pooled top-10 positions.
    #[arg(long)]
    pub positions: Option<PathBuf>,
    #[arg(long, default_value = "content", value_parser = parse_item_kind)]
    pub item_kind: ItemKind,
}

#[derive(Debug, Args)]
pub struct HistArgs {
    #[arg(long)]
    pub run: PathBuf,
    #[arg(long)]
    pub positions: PathBuf,
    #[arg(long, default_value = "content", value_parser = parse_item_kind)]
    pub item_kind: ItemKind,
    #[arg(long, default_value_t = 20)]
    pub bins: usize,
    #[arg(long, default_value_t = -3.0, allow_negative_numbers = true)]
    pub lo: f64,
    #[arg(long, default_value_t = 3.0, allow_negative_numbers = true)]
    pub hi: f64,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(|e| HarnessError::io(parent, e))?;
            }
            Box::new(BufWriter::new(File::create(p).map_err(|e| HarnessError::io(p, e))?))
        }
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn io_err(path: Option<&Path>) -> impl Fn(io::Error) -> HarnessError + '_ {
    move |e| HarnessError::io(path.unwrap_or(Path::new("<stdout>")), e)
}

fn load_graph(args: &DatasetArgs) -> Result<FeedbackGraph> {
    let records = parse_dataset(&args.dataset, args.format)?;
    let pairs: Vec<(&str, &str)> = records.iter().map(|r| (r.user_id.as_str(), r.item_id.as_str())).collect();
    Ok(build_graph(&pairs, args.min_user_degree, args.min_item_degree)?)
}

fn write_edges(out: &mut dyn Write, graph: &FeedbackGraph, edges: impl Iterator<Item = (usize, usize)>) -> io::Result<()> {
    for (u, i) in edges {
        writeln!(out, "{}\t{}", graph.user_id(u), graph.item_id(i))?;
    }
    Ok(())
}

fn load_config(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(o) = &args.outdir {
        cfg.outdir = o.clone();
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn print_report(report: &rwe_core::eval::EvalReport) -> Result<()> {
    report.write_tsv(io::stdout().lock()).map_err(io_err(None))
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest(a) => {
            let g = load_graph(&a.data)?;
            println!("users\t{}\nitems\t{}\nedges\t{}", g.num_users(), g.num_items(), g.num_edges());
            if let Some(path) = &a.out {
                let mut out = output(Some(path))?;
                write_edges(&mut out, &g, g.edges()).and_then(|_| out.flush()).map_err(io_err(Some(path)))?;
            }
            Ok(())
        }
        Command::Split(a) => {
            let g = load_graph(&a.data)?;
            let spec = SplitSpec {
                test_fraction: a.test_fraction,
                min_interactions: a.min_interactions,
                repetitions: a.repetitions,
                seed: derive_seed(a.seed, "split", 0),
            };
            for s in split(&g, &spec)? {
                let dir = a.outdir.join(split_dir_name(s.rep));
                for (name, edges) in [
                    ("train.tsv", s.train.edges().collect::<Vec<_>>()),
                    ("test.tsv", s.test.edges().collect::<Vec<_>>()),
                ] {
                    let path = dir.join(name);
                    let mut out = output(Some(&path))?;
                    write_edges(&mut out, &g, edges.into_iter()).and_then(|_| out.flush()).map_err(io_err(Some(&path)))?;
                }
                let fp = dir.join("fingerprint");
                fs::write(&fp, format!("{}\n", s.fingerprint)).map_err(|e| HarnessError::io(&fp, e))?;
                println!("{}\t{}", split_dir_name(s.rep), s.fingerprint);
            }
            Ok(())
        }
        Command::FitIdeology(a) => {
            if a.elite_edges.is_none() && a.content_edges.is_none() {
                return Err(HarnessError::Usage("give --elite-edges and/or --content-edges".into()));
            }
            let data = load_endorsements(a.elite_edges.as_deref(), a.content_edges.as_deref(), a.weighting)?;
            let cfg = FitConfig {
                lambda: a.lambda,
                mu: a.mu,
                learning_rate: a.learning_rate,
                max_epochs: a.max_epochs,
                seed: derive_seed(a.seed, "ideology", 0),
                ..FitConfig::default()
            };
            let model = fit_positions(&data, &cfg, a.anchor_elite.as_deref().map(|id| (id, a.anchor_sign)))?;
            write_model(&a.out, &model, &data)?;
            println!(
                "epochs\t{}\nobjective\t{:.6}\ngradient_norm\t{:.3e}",
                model.objective_trace.len(),
                model.objective_trace.last().copied().unwrap_or(f64::NAN),
                model.gradient_norm.unwrap_or(f64::NAN)
            );
            Ok(())
        }
        Command::Recommend(a) => {
            let registry = RecommenderRegistry::default();
            let factory = registry.get(&a.algorithm).map_err(|e| HarnessError::Usage(e.to_string()))?;
            let given = [
                ("beta", a.beta),
                ("nu", a.nu),
                ("neighbors", a.neighbors.map(|v| v as f64)),
                ("epsilon", a.epsilon),
                ("walk_length", a.walk_length.map(|v| v as f64)),
                ("iterations", a.iterations.map(|v| v as f64)),
            ];
            let mut params = Hyperparams::new();
            for (key, value) in given {
                if let Some(v) = value {
                    if !factory.params().contains(&key) {
                        return Err(HarnessError::Usage(format!("{} does not use --{}", a.algorithm, key.replace('_', "-"))));
                    }
                    params = params.with(key, v);
                }
            }
            let graph = Arc::new(load_graph(&a.data)?);
            let positions = a
                .positions
                .as_deref()
                .map(|p| load_position_table(p).map(|t| graph_positions(&t, &graph, a.item_kind)))
                .transpose()?;
            let mut ctx = BuildContext::new(Arc::clone(&graph), &params);
            if let Some(p) = &positions {
                ctx = ctx.with_positions(p);
            }
            let rec = registry.build(&a.algorithm, &ctx)?;
            let users: Vec<usize> = (0..graph.num_users()).collect();
            let lists = recommend_all(rec.as_ref(), &graph, &users, a.k)?;
            let mut out = output(a.out.as_deref())?;
            write_ranked_tsv(&mut out, &graph, &lists).and_then(|_| out.flush()).map_err(io_err(a.out.as_deref()))
        }
        Command::Evaluate(a) => {
            let mut cfg = load_config(&a.run)?;
            let report = match &a.ranked_dir {
                Some(dir) => evaluate_external(&cfg, dir, &a.label)?,
                None => {
                    cfg.beta.truncate(1);
                    cfg.nu.truncate(1);
                    cfg.neighbors.truncate(1);
                    run_experiment(&cfg)?.best
                }
            };
            print_report(&report)
        }
        Command::Grid(a) => {
            let cfg = load_config(&a)?;
            let outcome = run_experiment(&cfg)?;
            print_report(&outcome.best)
        }
        Command::Compare(a) => {
            let ra = load_report(&a.a)?;
            let rb = load_report(&a.b)?;
            let metrics = if a.metrics.is_empty() {
                let range = format!("RecRange@{}", ra.cutoffs.ideological);
                if ra.series(&range).is_some() && rb.series(&range).is_some() {
                    vec![range]
                } else {
                    vec!["AUC".to_string()]
                }
            } else {
                a.metrics.clone()
            };
            let pooled = match &a.positions {
                Some(p) => {
                    let table = load_position_table(p)?;
                    let k = ra.cutoffs.ideological;
                    Some((
                        pooled_positions(&a.a, &ra, &table, a.item_kind, k)?,
                        pooled_positions(&a.b, &rb, &table, a.item_kind, k)?,
                    ))
                }
                None => None,
            };
            let cmp = compare_runs(&ra, &rb, &metrics, pooled.as_ref().map(|(x, y)| (x.as_slice(), y.as_slice())))?;
            cmp.write_tsv(io::stdout().lock()).map_err(io_err(None))
        }
        Command::ExportHist(a) => {
            let report = load_report(&a.run)?;
            let table = load_position_table(&a.positions)?;
            let mut values = Vec::new();
            let mut classes = Vec::new();
            for (user, rank, item) in winning_rows(&a.run, &report)? {
                if rank > a.k {
                    continue;
                }
                let theta = table.user(&user).ok_or(rwe_core::Error::MissingPosition(format!("user {user}")))?;
                let pos = crate::positions::item_position(&table, a.item_kind, &item)
                    .ok_or(rwe_core::Error::MissingPosition(item))?;
                values.push(pos);
                classes.push(classify(theta));
            }
            let hist = histogram_export(&values, &classes, a.bins, (a.lo, a.hi))?;
            let mut out = output(a.out.as_deref())?;
            hist.write_tsv(&mut out).and_then(|_| out.flush()).map_err(io_err(a.out.as_deref()))
        }
    }
}
