//! Top-k recommendation over interchangeable scoring backends.
//!
//! Every backend implements [`Recommender`]; a [`RecommenderRegistry`]
//! maps algorithm names (`p3`, `rp3b`, `itemknn`, `rwe-d`, `rwe-b`) to
//! factories that build a scorer from a training graph and hyperparameters.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{transition, user_walk, FeedbackGraph, TransitionMatrix};
use crate::positions::Positions;
use crate::rwe::{self, ErasureMatrix};
use crate::scores::ScoreMap;

/// Per-user scorer.
pub trait Recommender: Send + Sync {
    fn name(&self) -> &str;

    /// Scores for the items this backend reaches from `user`.
    fn score(&self, user: usize) -> Result<ScoreMap>;
}

/// Three-step walk probability from the user.
pub fn p3_score(p: &TransitionMatrix, user: usize) -> Result<ScoreMap> {
    Ok(ScoreMap::from_pairs(user_walk(p, user, 3)?))
}

/// P³ divided by `degree(j)^β`.
pub fn rp3b_score(p: &TransitionMatrix, graph: &FeedbackGraph, user: usize, beta: f64) -> Result<ScoreMap> {
    if !(beta >= 0.0) {
        return Err(Error::InvalidParameter(format!("beta must be >= 0, got {beta}")));
    }
    let walk = user_walk(p, user, 3)?;
    Ok(ScoreMap::from_pairs(
        walk.into_iter().map(|(j, s)| (j, s / (graph.item_degree(j) as f64).powf(beta))).collect(),
    ))
}

/// Truncated item-item cosine neighborhoods over binary incidence columns.
#[derive(Debug, Clone)]
pub struct ItemSimilarityIndex {
    neighbors: Vec<Vec<(u32, f64)>>,
}

impl ItemSimilarityIndex {
    /// Keeps the `neighborhood` most similar items per item, ties broken
    /// by ascending item index.
    pub fn build(graph: &FeedbackGraph, neighborhood: usize) -> Self {
        let n = graph.num_items();
        let neighbors = (0..n)
            .into_par_iter()
            .map_init(
                || (vec![0u32; n], Vec::<u32>::new()),
                |(counts, touched), i| {
                    for &u in graph.users_of(i) {
                        for &j in graph.items_of(u as usize) {
                            if j as usize == i {
                                continue;
                            }
                            if counts[j as usize] == 0 {
                                touched.push(j);
                            }
                            counts[j as usize] += 1;
                        }
                    }
                    let di = graph.item_degree(i) as f64;
                    let mut row: Vec<(u32, f64)> = touched
                        .iter()
                        .map(|&j| {
                            let c = counts[j as usize] as f64;
                            let cos = c / (di * graph.item_degree(j as usize) as f64).sqrt();
                            (j, cos.min(1.0))
                        })
                        .collect();
                    for &j in touched.iter() {
                        counts[j as usize] = 0;
                    }
                    touched.clear();
                    row.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
                    row.truncate(neighborhood);
                    row
                },
            )
            .collect();
        ItemSimilarityIndex { neighbors }
    }

    pub fn neighbors(&self, item: usize) -> &[(u32, f64)] {
        &self.neighbors[item]
    }

    pub fn num_items(&self) -> usize {
        self.neighbors.len()
    }
}

/// `score(j) = Σ_{i ∈ train(user)} cos(i, j)` over the truncated lists.
pub fn itemknn_score(index: &ItemSimilarityIndex, graph: &FeedbackGraph, user: usize) -> ScoreMap {
    let pairs = graph
        .items_of(user)
        .iter()
        .flat_map(|&i| index.neighbors(i as usize).iter().map(|&(j, c)| (j as usize, c)))
        .collect();
    ScoreMap::from_pairs(pairs)
}

/// One user's recommendations, best first.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub user: usize,
    pub entries: Vec<(usize, f64)>,
}

impl RankedList {
    pub fn items(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|&(i, _)| i)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn truncated(&self, k: usize) -> RankedList {
        RankedList { user: self.user, entries: self.entries.iter().take(k).copied().collect() }
    }
}

fn by_score_then_index(a: &(usize, f64), b: &(usize, f64)) -> std::cmp::Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

/// Drops training items, orders by (score desc, item asc), keeps `k`.
pub fn recommend_topk(user: usize, scores: &ScoreMap, train_items: &[u32], k: usize) -> RankedList {
    let mut entries: Vec<(usize, f64)> =
        scores.iter().filter(|&(i, _)| train_items.binary_search(&(i as u32)).is_err()).collect();
    if entries.len() > k {
        entries.select_nth_unstable_by(k, by_score_then_index);
        entries.truncate(k);
    }
    entries.sort_by(by_score_then_index);
    RankedList { user, entries }
}

/// Full ranking of every non-training item out of `num_items`; items the
/// scorer did not reach get score 0.
pub fn rank_all(user: usize, scores: &ScoreMap, train_items: &[u32], num_items: usize) -> RankedList {
    let mut dense = vec![0.0; num_items];
    for (i, s) in scores.iter() {
        dense[i] = s;
    }
    let mut entries: Vec<(usize, f64)> = dense
        .into_iter()
        .enumerate()
        .filter(|&(i, _)| train_items.binary_search(&(i as u32)).is_err())
        .collect();
    entries.sort_by(by_score_then_index);
    RankedList { user, entries }
}

pub struct P3 {
    transition: Arc<TransitionMatrix>,
}

impl P3 {
    pub fn new(transition: Arc<TransitionMatrix>) -> Self {
        P3 { transition }
    }
}

impl Recommender for P3 {
    fn name(&self) -> &str {
        "p3"
    }
    fn score(&self, user: usize) -> Result<ScoreMap> {
        p3_score(&self.transition, user)
    }
}

pub struct Rp3Beta {
    transition: Arc<TransitionMatrix>,
    graph: Arc<FeedbackGraph>,
    beta: f64,
}

impl Rp3Beta {
    pub fn new(transition: Arc<TransitionMatrix>, graph: Arc<FeedbackGraph>, beta: f64) -> Self {
        Rp3Beta { transition, graph, beta }
    }
}

impl Recommender for Rp3Beta {
    fn name(&self) -> &str {
        "rp3b"
    }
    fn score(&self, user: usize) -> Result<ScoreMap> {
        rp3b_score(&self.transition, &self.graph, user, self.beta)
    }
}

pub struct ItemKnn {
    index: ItemSimilarityIndex,
    graph: Arc<FeedbackGraph>,
}

impl ItemKnn {
    pub fn new(graph: Arc<FeedbackGraph>, neighborhood: usize) -> Self {
        ItemKnn { index: ItemSimilarityIndex::build(&graph, neighborhood), graph }
    }
}

impl Recommender for ItemKnn {
    fn name(&self) -> &str {
        "itemknn"
    }
    fn score(&self, user: usize) -> Result<ScoreMap> {
        Ok(itemknn_score(&self.index, &self.graph, user))
    }
}

/// RWE with any erasure strategy.
pub struct Rwe {
    label: String,
    transition: Arc<TransitionMatrix>,
    erasure: ErasureMatrix,
    walk_length: usize,
    iterations: usize,
}

impl Rwe {
    pub fn new(
        label: impl Into<String>,
        transition: Arc<TransitionMatrix>,
        erasure: ErasureMatrix,
        walk_length: usize,
        iterations: usize,
    ) -> Result<Self> {
        if walk_length.is_multiple_of(2) {
            return Err(Error::EvenWalkLength(walk_length));
        }
        if iterations == 0 {
            return Err(Error::InvalidParameter("iterations must be >= 1".into()));
        }
        Ok(Rwe { label: label.into(), transition, erasure, walk_length, iterations })
    }
}

impl Recommender for Rwe {
    fn name(&self) -> &str {
        &self.label
    }
    fn score(&self, user: usize) -> Result<ScoreMap> {
        Ok(rwe::rwe_score(&self.transition, &self.erasure, user, self.walk_length, self.iterations)?.scores)
    }
}

/// Named numeric hyperparameters for one grid point.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Hyperparams(pub BTreeMap<String, f64>);

impl Hyperparams {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.0.insert(key.to_string(), value);
        self
    }

    pub fn get_or(&self, key: &str, default: f64) -> f64 {
        self.0.get(key).copied().unwrap_or(default)
    }

    fn count_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.0.get(key) {
            None => Ok(default),
            Some(&v) if v >= 1.0 && v.fract() == 0.0 => Ok(v as usize),
            Some(&v) => Err(Error::InvalidParameter(format!("{key} must be a positive integer, got {v}"))),
        }
    }

    /// Stable label such as `beta-0.7_nu-1`, or `default` when empty.
    pub fn label(&self) -> String {
        if self.0.is_empty() {
            return "default".to_string();
        }
        self.0.iter().map(|(k, v)| format!("{k}-{v}")).collect::<Vec<_>>().join("_")
    }
}

impl fmt::Display for Hyperparams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// Everything a factory may need to build a scorer.
pub struct BuildContext<'a> {
    pub train: Arc<FeedbackGraph>,
    pub transition: Arc<TransitionMatrix>,
    pub positions: Option<&'a Positions>,
    pub params: &'a Hyperparams,
}

impl<'a> BuildContext<'a> {
    pub fn new(train: Arc<FeedbackGraph>, params: &'a Hyperparams) -> Self {
        let transition = Arc::new(transition(&train));
        BuildContext { train, transition, positions: None, params }
    }

    pub fn with_positions(mut self, positions: &'a Positions) -> Self {
        self.positions = Some(positions);
        self
    }
}

pub const DEFAULT_BETA: f64 = 0.5;
pub const DEFAULT_NEIGHBORS: usize = 100;
pub const DEFAULT_EPSILON: f64 = 0.9;

/// Builds one algorithm family from hyperparameters.
pub trait RecommenderFactory: Send + Sync {
    fn name(&self) -> &'static str;
    /// Hyperparameters the factory reads.
    fn params(&self) -> &'static [&'static str];
    fn needs_positions(&self) -> bool {
        false
    }
    fn build(&self, ctx: &BuildContext<'_>) -> Result<Box<dyn Recommender>>;
}

struct P3Factory;
struct Rp3bFactory;
struct ItemKnnFactory;
struct RweLongTailFactory;
struct RweBridgeFactory;

impl RecommenderFactory for P3Factory {
    fn name(&self) -> &'static str {
        "p3"
    }
    fn params(&self) -> &'static [&'static str] {
        &[]
    }
    fn build(&self, ctx: &BuildContext<'_>) -> Result<Box<dyn Recommender>> {
        Ok(Box::new(P3::new(Arc::clone(&ctx.transition))))
    }
}

impl RecommenderFactory for Rp3bFactory {
    fn name(&self) -> &'static str {
        "rp3b"
    }
    fn params(&self) -> &'static [&'static str] {
        &["beta"]
    }
    fn build(&self, ctx: &BuildContext<'_>) -> Result<Box<dyn Recommender>> {
        let beta = ctx.params.get_or("beta", DEFAULT_BETA);
        if !(beta >= 0.0) {
            return Err(Error::InvalidParameter(format!("beta must be >= 0, got {beta}")));
        }
        Ok(Box::new(Rp3Beta::new(Arc::clone(&ctx.transition), Arc::clone(&ctx.train), beta)))
    }
}

impl RecommenderFactory for ItemKnnFactory {
    fn name(&self) -> &'static str {
        "itemknn"
    }
    fn params(&self) -> &'static [&'static str] {
        &["neighbors"]
    }
    fn build(&self, ctx: &BuildContext<'_>) -> Result<Box<dyn Recommender>> {
        let k = ctx.params.count_or("neighbors", DEFAULT_NEIGHBORS)?;
        Ok(Box::new(ItemKnn::new(Arc::clone(&ctx.train), k)))
    }
}

fn walk_params(params: &Hyperparams) -> Result<(usize, usize)> {
    Ok((
        params.count_or("walk_length", rwe::DEFAULT_WALK_LENGTH)?,
        params.count_or("iterations", rwe::DEFAULT_ITERATIONS)?,
    ))
}

impl RecommenderFactory for RweLongTailFactory {
    fn name(&self) -> &'static str {
        "rwe-d"
    }
    fn params(&self) -> &'static [&'static str] {
        &["beta", "nu", "walk_length", "iterations"]
    }
    fn build(&self, ctx: &BuildContext<'_>) -> Result<Box<dyn Recommender>> {
        let q = rwe::erasure_longtail(&ctx.train, ctx.params.get_or("beta", DEFAULT_BETA))?;
        let q = rwe::apply_nu(&q, ctx.params.get_or("nu", 1.0))?;
        let (k, iters) = walk_params(ctx.params)?;
        Ok(Box::new(Rwe::new("rwe-d", Arc::clone(&ctx.transition), q, k, iters)?))
    }
}

impl RecommenderFactory for RweBridgeFactory {
    fn name(&self) -> &'static str {
        "rwe-b"
    }
    fn params(&self) -> &'static [&'static str] {
        &["nu", "epsilon", "walk_length", "iterations"]
    }
    fn needs_positions(&self) -> bool {
        true
    }
    fn build(&self, ctx: &BuildContext<'_>) -> Result<Box<dyn Recommender>> {
        let positions = ctx
            .positions
            .ok_or_else(|| Error::InvalidParameter("rwe-b needs ideological positions".into()))?;
        let q = rwe::erasure_bridge(
            &positions.complete_users()?,
            &positions.complete_items()?,
            ctx.params.get_or("epsilon", DEFAULT_EPSILON),
            ctx.params.get_or("nu", 1.0),
        )?;
        let (k, iters) = walk_params(ctx.params)?;
        Ok(Box::new(Rwe::new("rwe-b", Arc::clone(&ctx.transition), q, k, iters)?))
    }
}

/// Name → factory table.
pub struct RecommenderRegistry {
    factories: BTreeMap<&'static str, Box<dyn RecommenderFactory>>,
}

impl Default for RecommenderRegistry {
    fn default() -> Self {
        let mut r = RecommenderRegistry { factories: BTreeMap::new() };
        r.register(Box::new(P3Factory));
        r.register(Box::new(Rp3bFactory));
        r.register(Box::new(ItemKnnFactory));
        r.register(Box::new(RweLongTailFactory));
        r.register(Box::new(RweBridgeFactory));
        r
    }
}

impl RecommenderRegistry {
    pub fn empty() -> Self {
        RecommenderRegistry { factories: BTreeMap::new() }
    }

    /// Adds or replaces a factory under its own name.
    pub fn register(&mut self, factory: Box<dyn RecommenderFactory>) {
        self.factories.insert(factory.name(), factory);
    }

    pub fn get(&self, name: &str) -> Result<&dyn RecommenderFactory> {
        self.factories
            .get(name)
            .map(|f| f.as_ref())
            .ok_or_else(|| Error::Unknown { kind: "algorithm", name: name.to_string() })
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.factories.keys().copied()
    }

    pub fn build(&self, name: &str, ctx: &BuildContext<'_>) -> Result<Box<dyn Recommender>> {
        self.get(name)?.build(ctx)
    }
}

/// Top-k lists for the given users, computed in parallel.
pub fn recommend_all(
    rec: &dyn Recommender,
    train: &FeedbackGraph,
    users: &[usize],
    k: usize,
) -> Result<Vec<RankedList>> {
    users
        .par_iter()
        .map(|&u| Ok(recommend_topk(u, &rec.score(u)?, train.items_of(u), k)))
        .collect()
}

/// Fixed-notation decimal with 10 significant digits.
pub fn format_score(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v:.9}");
    }
    let sci = format!("{v:.9e}");
    let exp: i32 = sci.rsplit('e').next().and_then(|e| e.parse().ok()).unwrap_or(0);
    let decimals = (9 - exp).max(0) as usize;
    format!("{v:.decimals$}")
}

pub const RANKED_HEADER: &str = "user_id\trank\titem_id\tscore";

/// Writes `user_id, rank, item_id, score` rows with a header line.
pub fn write_ranked_tsv<W: Write>(mut out: W, graph: &FeedbackGraph, lists: &[RankedList]) -> std::io::Result<()> {
    writeln!(out, "{RANKED_HEADER}")?;
    for list in lists {
        let uid = graph.user_id(list.user);
        for (rank, &(item, score)) in list.entries.iter().enumerate() {
            writeln!(out, "{}\t{}\t{}\t{}", uid, rank + 1, graph.item_id(item), format_score(score))?;
        }
    }
    Ok(())
}

/// Reads ranked lists written by [`write_ranked_tsv`] or an external
/// baseline. Rows are re-sorted by rank within each user; users keep the
/// order of first appearance. Unknown user or item IDs are errors.
pub fn read_ranked_tsv<R: BufRead>(input: R, graph: &FeedbackGraph) -> Result<Vec<RankedList>> {
    let mut order: Vec<usize> = Vec::new();
    let mut rows: BTreeMap<usize, Vec<(usize, usize, f64)>> = BTreeMap::new();
    for (lineno, line) in input.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::Parse { line: lineno, message: e.to_string() })?;
        if line.trim().is_empty() || (lineno == 1 && line == RANKED_HEADER) {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 4 {
            return Err(Error::Parse { line: lineno, message: format!("expected 4 fields, found {}", f.len()) });
        }
        let bad = |what: &str| Error::Parse { line: lineno, message: format!("bad {what}") };
        let user = graph.user_index(f[0]).ok_or_else(|| bad("user id"))?;
        let rank: usize = f[1].parse().map_err(|_| bad("rank"))?;
        let item = graph.item_index(f[2]).ok_or_else(|| bad("item id"))?;
        let score: f64 = f[3].parse().map_err(|_| bad("score"))?;
        let entry = rows.entry(user).or_insert_with(|| {
            order.push(user);
            Vec::new()
        });
        entry.push((rank, item, score));
    }
    Ok(order
        .into_iter()
        .map(|u| {
            let mut r = rows.remove(&u).unwrap_or_default();
            r.sort_by_key(|&(rank, item, _)| (rank, item));
            RankedList { user: u, entries: r.into_iter().map(|(_, i, s)| (i, s)).collect() }
        })
        .collect())
}
