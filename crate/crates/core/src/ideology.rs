//! One-dimensional ideal points for users, elites and content.
//!
//! A user endorses a target with probability `σ(Π)` where
//! `Π = -(θ_u - x_t)² + α_u + b_t`, `x_t` being the elite position `φ_e`
//! or content position `ψ_i` and `b_t` its bias. The fitted objective is
//!
//! ```text
//! μ Σ_(u,e) [a_ue Π_ue - log(1 + e^Π_ue)] + Σ_(u,i) [b_ui Π_ui - log(1 + e^Π_ui)]
//!   - λ/2 (‖θ‖² + ‖φ‖² + ‖ψ‖²)
//! ```
//!
//! with unobserved pairs entering as negatives (`a = 0`). Small problems sum
//! over every pair; large ones sample negatives per epoch.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Above this many user × target pairs negatives are sampled.
pub const FULL_SUM_LIMIT: usize = 10_000_000;

/// Numerically stable logistic function.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `Π = -(pos_a - pos_b)² + bias_a + bias_b`.
pub fn linear_predictor(pos_a: f64, pos_b: f64, bias_a: f64, bias_b: f64) -> f64 {
    let d = pos_a - pos_b;
    -(d * d) + bias_a + bias_b
}

/// How raw endorsement counts become confidence weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConfidenceWeighting {
    /// Every observed pair weighs 1.
    #[default]
    Unit,
    /// `log(1 + count)`.
    LogCount,
}

impl ConfidenceWeighting {
    pub fn weight(self, count: u32) -> f64 {
        match self {
            ConfidenceWeighting::Unit => 1.0,
            ConfidenceWeighting::LogCount => (count as f64).ln_1p(),
        }
    }
}

/// Observed positives of one user × target matrix, stored per user.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Endorsements {
    num_targets: usize,
    ptr: Vec<usize>,
    targets: Vec<u32>,
    weights: Vec<f64>,
}

impl Endorsements {
    fn new(num_users: usize, num_targets: usize, mut obs: Vec<(u32, u32, f64)>) -> Self {
        obs.sort_by_key(|&(u, t, _)| (u, t));
        obs.dedup_by_key(|&mut (u, t, _)| (u, t));
        let mut ptr = vec![0usize; num_users + 1];
        for &(u, _, _) in &obs {
            ptr[u as usize + 1] += 1;
        }
        for u in 0..num_users {
            ptr[u + 1] += ptr[u];
        }
        Endorsements {
            num_targets,
            ptr,
            targets: obs.iter().map(|o| o.1).collect(),
            weights: obs.iter().map(|o| o.2).collect(),
        }
    }

    pub fn num_targets(&self) -> usize {
        self.num_targets
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// `(target, weight)` pairs of `user`, targets ascending.
    pub fn of_user(&self, user: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.ptr[user]..self.ptr[user + 1];
        self.targets[span.clone()].iter().zip(&self.weights[span]).map(|(&t, &w)| (t as usize, w))
    }

    /// All observed `(user, target, weight)` triples.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.ptr.len() - 1).flat_map(move |u| self.of_user(u).map(move |(t, w)| (u, t, w)))
    }

    fn contains(&self, user: usize, target: usize) -> bool {
        self.targets[self.ptr[user]..self.ptr[user + 1]].binary_search(&(target as u32)).is_ok()
    }
}

/// Elite-endorsement matrix `R` and content-share matrix `S` over a common
/// user set.
#[derive(Debug, Clone, PartialEq)]
pub struct EndorsementData {
    pub user_ids: Vec<String>,
    pub elite_ids: Vec<String>,
    pub content_ids: Vec<String>,
    pub elites: Endorsements,
    pub contents: Endorsements,
}

fn intern<'a>(ids: &mut Vec<String>, index: &mut HashMap<&'a str, u32>, key: &'a str) -> u32 {
    *index.entry(key).or_insert_with(|| {
        ids.push(key.to_string());
        (ids.len() - 1) as u32
    })
}

impl EndorsementData {
    /// Builds from `(user, target, count)` records. Users are indexed in
    /// first-seen order over elite records, then content records.
    pub fn from_records<S: AsRef<str>>(
        elite_records: &[(S, S, u32)],
        content_records: &[(S, S, u32)],
        weighting: ConfidenceWeighting,
    ) -> Self {
        let mut user_ids = Vec::new();
        let mut elite_ids = Vec::new();
        let mut content_ids = Vec::new();
        let mut uidx = HashMap::new();
        let mut eidx = HashMap::new();
        let mut cidx = HashMap::new();
        let mut r = Vec::new();
        let mut s = Vec::new();
        for (u, e, c) in elite_records {
            let u = intern(&mut user_ids, &mut uidx, u.as_ref());
            let e = intern(&mut elite_ids, &mut eidx, e.as_ref());
            r.push((u, e, weighting.weight(*c)));
        }
        for (u, i, c) in content_records {
            let u = intern(&mut user_ids, &mut uidx, u.as_ref());
            let i = intern(&mut content_ids, &mut cidx, i.as_ref());
            s.push((u, i, weighting.weight(*c)));
        }
        let m = user_ids.len();
        EndorsementData {
            elites: Endorsements::new(m, elite_ids.len(), r),
            contents: Endorsements::new(m, content_ids.len(), s),
            user_ids,
            elite_ids,
            content_ids,
        }
    }

    /// Builds from dense indices with unit weights; IDs are the indices.
    pub fn from_indexed(
        num_users: usize,
        num_elites: usize,
        num_contents: usize,
        elite_pairs: &[(usize, usize)],
        content_pairs: &[(usize, usize)],
    ) -> Self {
        let ids = |n: usize| (0..n).map(|i| i.to_string()).collect::<Vec<_>>();
        let conv = |p: &[(usize, usize)]| p.iter().map(|&(u, t)| (u as u32, t as u32, 1.0)).collect::<Vec<_>>();
        EndorsementData {
            user_ids: ids(num_users),
            elite_ids: ids(num_elites),
            content_ids: ids(num_contents),
            elites: Endorsements::new(num_users, num_elites, conv(elite_pairs)),
            contents: Endorsements::new(num_users, num_contents, conv(content_pairs)),
        }
    }

    pub fn num_users(&self) -> usize {
        self.user_ids.len()
    }

    pub fn num_elites(&self) -> usize {
        self.elite_ids.len()
    }

    pub fn num_contents(&self) -> usize {
        self.content_ids.len()
    }

    /// The same data with `S` dropped (no content entities).
    pub fn elite_only(&self) -> Self {
        EndorsementData {
            content_ids: Vec::new(),
            contents: Endorsements::new(self.num_users(), 0, Vec::new()),
            ..self.clone()
        }
    }

    fn total_pairs(&self) -> usize {
        self.num_users() * (self.num_elites() + self.num_contents())
    }

    fn check_non_degenerate(&self) -> Result<()> {
        if self.num_users() == 0 || self.num_elites() + self.num_contents() == 0 {
            return Err(Error::DegenerateData("no users or no targets".into()));
        }
        let mut user_seen = vec![false; self.num_users()];
        let mut elite_seen = vec![false; self.num_elites()];
        let mut content_seen = vec![false; self.num_contents()];
        for (u, e, _) in self.elites.iter() {
            user_seen[u] = true;
            elite_seen[e] = true;
        }
        for (u, i, _) in self.contents.iter() {
            user_seen[u] = true;
            content_seen[i] = true;
        }
        if let Some(u) = user_seen.iter().position(|s| !s) {
            return Err(Error::DegenerateData(format!("user {} has no endorsements", self.user_ids[u])));
        }
        if let Some(e) = elite_seen.iter().position(|s| !s) {
            return Err(Error::DegenerateData(format!("elite {} is never endorsed", self.elite_ids[e])));
        }
        if let Some(i) = content_seen.iter().position(|s| !s) {
            return Err(Error::DegenerateData(format!("content {} is never shared", self.content_ids[i])));
        }
        Ok(())
    }
}

/// Why fitting stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxEpochs,
}

/// Fitted (or initial) parameters of the joint model.
#[derive(Debug, Clone, PartialEq)]
pub struct IdealPointModel {
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub lambda: f64,
    pub mu: f64,
    pub prior_sigma: f64,
    /// Objective after each epoch of [`fit`].
    pub objective_trace: Vec<f64>,
    pub stop_reason: Option<StopReason>,
    pub gradient_norm: Option<f64>,
}

impl IdealPointModel {
    /// All-zero parameters sized for `data`.
    pub fn zeros(data: &EndorsementData, lambda: f64, mu: f64) -> Self {
        let (m, ne, ni) = (data.num_users(), data.num_elites(), data.num_contents());
        IdealPointModel {
            theta: vec![0.0; m],
            phi: vec![0.0; ne],
            psi: vec![0.0; ni],
            alpha: vec![0.0; m],
            beta: vec![0.0; ne],
            gamma: vec![0.0; ni],
            lambda,
            mu,
            prior_sigma: 1.0,
            objective_trace: Vec::new(),
            stop_reason: None,
            gradient_norm: None,
        }
    }

    fn block(&self, b: Block) -> &[f64] {
        match b {
            Block::Theta => &self.theta,
            Block::Phi => &self.phi,
            Block::Psi => &self.psi,
            Block::Alpha => &self.alpha,
            Block::Beta => &self.beta,
            Block::Gamma => &self.gamma,
        }
    }

    fn block_mut(&mut self, b: Block) -> &mut Vec<f64> {
        match b {
            Block::Theta => &mut self.theta,
            Block::Phi => &mut self.phi,
            Block::Psi => &mut self.psi,
            Block::Alpha => &mut self.alpha,
            Block::Beta => &mut self.beta,
            Block::Gamma => &mut self.gamma,
        }
    }

    pub fn is_finite(&self) -> bool {
        BLOCKS.iter().all(|&b| self.block(b).iter().all(|v| v.is_finite()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Block {
    Theta,
    Phi,
    Psi,
    Alpha,
    Beta,
    Gamma,
}

const BLOCKS: [Block; 6] = [Block::Theta, Block::Phi, Block::Psi, Block::Alpha, Block::Beta, Block::Gamma];

#[derive(Debug, Clone, Copy)]
enum Side {
    Elite,
    Content,
}

/// Which user × target pairs enter the sums.
enum Pairs {
    All,
    /// Observed positives plus these sampled negatives.
    Sampled { elite: Vec<(u32, u32)>, content: Vec<(u32, u32)> },
}

fn side_parts<'a>(model: &'a IdealPointModel, data: &'a EndorsementData, side: Side) -> (&'a Endorsements, &'a [f64], &'a [f64], f64) {
    match side {
        Side::Elite => (&data.elites, &model.phi, &model.beta, model.mu),
        Side::Content => (&data.contents, &model.psi, &model.gamma, 1.0),
    }
}

fn visit_pairs(data: &EndorsementData, side: Side, pairs: &Pairs, mut f: impl FnMut(usize, usize, f64)) {
    let obs = match side {
        Side::Elite => &data.elites,
        Side::Content => &data.contents,
    };
    match pairs {
        Pairs::All => {
            for u in 0..data.num_users() {
                let mut seen = obs.of_user(u).peekable();
                for t in 0..obs.num_targets() {
                    let a = match seen.peek() {
                        Some(&(st, w)) if st == t => {
                            seen.next();
                            w
                        }
                        _ => 0.0,
                    };
                    f(u, t, a);
                }
            }
        }
        Pairs::Sampled { elite, content } => {
            for (u, t, w) in obs.iter() {
                f(u, t, w);
            }
            let neg = match side {
                Side::Elite => elite,
                Side::Content => content,
            };
            for &(u, t) in neg {
                f(u as usize, t as usize, 0.0);
            }
        }
    }
}

fn objective(model: &IdealPointModel, data: &EndorsementData, pairs: &Pairs) -> f64 {
    let mut total = 0.0;
    for side in [Side::Elite, Side::Content] {
        let (_, pos, bias, scale) = side_parts(model, data, side);
        let mut sum = 0.0;
        visit_pairs(data, side, pairs, |u, t, a| {
            let pi = linear_predictor(model.theta[u], pos[t], model.alpha[u], bias[t]);
            sum += a * pi - softplus(pi);
        });
        total += scale * sum;
    }
    let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
    total - 0.5 * model.lambda * (sq(&model.theta) + sq(&model.phi) + sq(&model.psi))
}

/// Exact joint log-likelihood over every user × target pair.
pub fn log_likelihood(model: &IdealPointModel, data: &EndorsementData) -> f64 {
    objective(model, data, &Pairs::All)
}

/// Partial derivatives of the objective for every parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl Gradients {
    fn block(&self, b: Block) -> &[f64] {
        match b {
            Block::Theta => &self.theta,
            Block::Phi => &self.phi,
            Block::Psi => &self.psi,
            Block::Alpha => &self.alpha,
            Block::Beta => &self.beta,
            Block::Gamma => &self.gamma,
        }
    }

    pub fn norm(&self) -> f64 {
        BLOCKS.iter().flat_map(|&b| self.block(b).iter()).map(|g| g * g).sum::<f64>().sqrt()
    }
}

fn gradients_with(model: &IdealPointModel, data: &EndorsementData, pairs: &Pairs) -> Gradients {
    let mut g = Gradients {
        theta: model.theta.iter().map(|t| -model.lambda * t).collect(),
        phi: model.phi.iter().map(|t| -model.lambda * t).collect(),
        psi: model.psi.iter().map(|t| -model.lambda * t).collect(),
        alpha: vec![0.0; model.alpha.len()],
        beta: vec![0.0; model.beta.len()],
        gamma: vec![0.0; model.gamma.len()],
    };
    for side in [Side::Elite, Side::Content] {
        let (_, pos, bias, scale) = side_parts(model, data, side);
        let (gpos, gbias) = match side {
            Side::Elite => (&mut g.phi, &mut g.beta),
            Side::Content => (&mut g.psi, &mut g.gamma),
        };
        let (gtheta, galpha) = (&mut g.theta, &mut g.alpha);
        visit_pairs(data, side, pairs, |u, t, a| {
            let diff = model.theta[u] - pos[t];
            let pi = -(diff * diff) + model.alpha[u] + bias[t];
            let r = scale * (a - sigmoid(pi));
            gtheta[u] -= 2.0 * r * diff;
            gpos[t] += 2.0 * r * diff;
            galpha[u] += r;
            gbias[t] += r;
        });
    }
    g
}

/// Analytic gradient of [`log_likelihood`].
pub fn gradients(model: &IdealPointModel, data: &EndorsementData) -> Gradients {
    gradients_with(model, data, &Pairs::All)
}

/// Optimizer settings for [`fit`].
#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub lambda: f64,
    pub mu: f64,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub prior_sigma: f64,
    pub negatives_per_positive: usize,
    pub full_sum_limit: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            lambda: 0.1,
            mu: 1.0,
            learning_rate: 0.05,
            max_epochs: 500,
            tolerance: 1e-6,
            seed: 0,
            prior_sigma: 1.0,
            negatives_per_positive: 5,
            full_sum_limit: FULL_SUM_LIMIT,
        }
    }
}

const MAX_HALVINGS: usize = 40;

fn sample_negatives(obs: &Endorsements, per_positive: usize, rng: &mut ChaCha8Rng) -> Vec<(u32, u32)> {
    let n = obs.num_targets();
    let mut out = Vec::with_capacity(obs.len() * per_positive);
    if n == 0 {
        return out;
    }
    for (u, _, _) in obs.iter() {
        let free = n - obs.of_user(u).count();
        if free == 0 {
            continue;
        }
        for _ in 0..per_positive {
            loop {
                let t = rng.random_range(0..n);
                if !obs.contains(u, t) {
                    out.push((u as u32, t as u32));
                    break;
                }
            }
        }
    }
    out
}

/// Block-alternating gradient ascent on the joint objective.
///
/// Each epoch updates θ, φ, ψ, α, β, γ in turn. A block step that would
/// lower the objective is halved until it does not. Positions start from
/// `Normal(0, prior_sigma)` draws in the order θ, φ, ψ; biases start at 0.
pub fn fit(data: &EndorsementData, config: &FitConfig) -> Result<IdealPointModel> {
    data.check_non_degenerate()?;
    if !(config.learning_rate > 0.0) || !(config.lambda >= 0.0) || !(config.mu >= 0.0) || !(config.prior_sigma > 0.0) {
        return Err(Error::InvalidParameter(format!("invalid fit configuration {config:?}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let normal = Normal::new(0.0, config.prior_sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut model = IdealPointModel::zeros(data, config.lambda, config.mu);
    model.prior_sigma = config.prior_sigma;
    for b in [Block::Theta, Block::Phi, Block::Psi] {
        for v in model.block_mut(b).iter_mut() {
            *v = normal.sample(&mut rng);
        }
    }

    let sampled = data.total_pairs() > config.full_sum_limit;
    let mut pairs = Pairs::All;
    model.stop_reason = Some(StopReason::MaxEpochs);
    for epoch in 0..config.max_epochs {
        if sampled {
            pairs = Pairs::Sampled {
                elite: sample_negatives(&data.elites, config.negatives_per_positive, &mut rng),
                content: sample_negatives(&data.contents, config.negatives_per_positive, &mut rng),
            };
        }
        let mut current = objective(&model, data, &pairs);
        if !current.is_finite() {
            return Err(Error::NonFiniteObjective(epoch));
        }
        for block in BLOCKS {
            if model.block(block).is_empty() {
                continue;
            }
            let grad = gradients_with(&model, data, &pairs).block(block).to_vec();
            let saved = model.block(block).to_vec();
            let mut step = config.learning_rate;
            for _ in 0..MAX_HALVINGS {
                for ((v, s), g) in model.block_mut(block).iter_mut().zip(&saved).zip(&grad) {
                    *v = s + step * g;
                }
                let trial = objective(&model, data, &pairs);
                if trial.is_finite() && trial >= current {
                    current = trial;
                    break;
                }
                step *= 0.5;
                model.block_mut(block).copy_from_slice(&saved);
            }
        }
        if !current.is_finite() || !model.is_finite() {
            return Err(Error::NonFiniteObjective(epoch));
        }
        model.objective_trace.push(current);
        let norm = gradients_with(&model, data, &pairs).norm();
        model.gradient_norm = Some(norm);
        if norm < config.tolerance {
            model.stop_reason = Some(StopReason::Converged);
            break;
        }
    }
    Ok(model)
}

/// Fits the elite-endorsement model alone: `S` is dropped and μ fixed at 1.
pub fn elite_only_fit(data: &EndorsementData, config: &FitConfig) -> Result<IdealPointModel> {
    let config = FitConfig { mu: 1.0, ..config.clone() };
    fit(&data.elite_only(), &config)
}

/// A user, elite or content entity by index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntityRef {
    User(usize),
    Elite(usize),
    Content(usize),
}

/// Negates every position when the anchor's sign differs from
/// `desired_sign`. An anchor sitting exactly at 0 leaves the model as is.
pub fn align_sign(model: &IdealPointModel, anchor: EntityRef, desired_sign: i8) -> Result<IdealPointModel> {
    if desired_sign != 1 && desired_sign != -1 {
        return Err(Error::InvalidParameter(format!("desired sign must be ±1, got {desired_sign}")));
    }
    let pos = match anchor {
        EntityRef::User(i) => model.theta.get(i),
        EntityRef::Elite(i) => model.phi.get(i),
        EntityRef::Content(i) => model.psi.get(i),
    }
    .copied()
    .ok_or_else(|| Error::InvalidParameter(format!("anchor {anchor:?} does not exist")))?;
    let mut out = model.clone();
    if pos * f64::from(desired_sign) < 0.0 {
        for b in [Block::Theta, Block::Phi, Block::Psi] {
            out.block_mut(b).iter_mut().for_each(|v| *v = -*v);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub enum Leaning {
    Left,
    Center,
    Right,
}

/// Left below -0.5, Right above 0.5, Center otherwise (boundaries included).
pub fn classify(position: f64) -> Leaning {
    if position < -0.5 {
        Leaning::Left
    } else if position > 0.5 {
        Leaning::Right
    } else {
        Leaning::Center
    }
}

pub const MODEL_HEADER: &str = "entity_kind\texternal_id\tposition\tbias";

/// Writes one `(entity_kind, external_id, position, bias)` row per entity.
pub fn write_model_tsv<W: Write>(mut out: W, model: &IdealPointModel, data: &EndorsementData) -> std::io::Result<()> {
    writeln!(out, "{MODEL_HEADER}")?;
    let groups = [
        ("user", &data.user_ids, &model.theta, &model.alpha),
        ("elite", &data.elite_ids, &model.phi, &model.beta),
        ("content", &data.content_ids, &model.psi, &model.gamma),
    ];
    for (kind, ids, pos, bias) in groups {
        for ((id, p), b) in ids.iter().zip(pos).zip(bias) {
            writeln!(out, "{kind}\t{id}\t{p}\t{b}")?;
        }
    }
    Ok(())
}

/// Positions and biases read back from a model TSV, keyed by external ID.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PositionTable {
    pub users: HashMap<String, (f64, f64)>,
    pub elites: HashMap<String, (f64, f64)>,
    pub contents: HashMap<String, (f64, f64)>,
}

impl PositionTable {
    pub fn user(&self, id: &str) -> Option<f64> {
        self.users.get(id).map(|v| v.0)
    }
    pub fn elite(&self, id: &str) -> Option<f64> {
        self.elites.get(id).map(|v| v.0)
    }
    pub fn content(&self, id: &str) -> Option<f64> {
        self.contents.get(id).map(|v| v.0)
    }
}

pub fn read_model_tsv<R: BufRead>(input: R) -> Result<PositionTable> {
    let mut table = PositionTable::default();
    for (n, line) in input.lines().enumerate() {
        let lineno = n + 1;
        let line = line.map_err(|e| Error::Parse { line: lineno, message: e.to_string() })?;
        if line.trim().is_empty() || (lineno == 1 && line == MODEL_HEADER) {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 4 {
            return Err(Error::Parse { line: lineno, message: format!("expected 4 fields, found {}", f.len()) });
        }
        let num = |s: &str, what: &str| {
            s.parse::<f64>().map_err(|_| Error::Parse { line: lineno, message: format!("bad {what} '{s}'") })
        };
        let entry = (num(f[2], "position")?, num(f[3], "bias")?);
        let map = match f[0] {
            "user" => &mut table.users,
            "elite" => &mut table.elites,
            "content" => &mut table.contents,
            other => {
                return Err(Error::Parse { line: lineno, message: format!("unknown entity kind '{other}'") })
            }
        };
        map.insert(f[1].to_string(), entry);
    }
    Ok(table)
}

/// Ground truth behind [`synthetic_data`].
#[derive(Debug, Clone)]
pub struct SyntheticTruth {
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
}

/// Draws positions from `Normal(0, 1)` and endorsements from the model with
/// zero biases. Elites or contents never endorsed, and users without an
/// endorsement of some non-empty kind, get one forced positive with their
/// nearest counterpart so both the joint and the elite-only fit apply.
pub fn synthetic_data(num_users: usize, num_elites: usize, num_contents: usize, seed: u64) -> (EndorsementData, SyntheticTruth) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut draw = |n: usize| (0..n).map(|_| normal.sample(&mut rng)).collect::<Vec<f64>>();
    let theta = draw(num_users);
    let phi = draw(num_elites);
    let psi = draw(num_contents);
    let mut sample = |pos: &[f64]| {
        let mut pairs = Vec::new();
        for (u, &t) in theta.iter().enumerate() {
            for (j, &x) in pos.iter().enumerate() {
                if rng.random::<f64>() < sigmoid(linear_predictor(t, x, 0.0, 0.0)) {
                    pairs.push((u, j));
                }
            }
        }
        pairs
    };
    let mut r = sample(&phi);
    let mut s = sample(&psi);
    let nearest = |x: f64, pool: &[f64]| {
        (0..pool.len()).min_by(|&a, &b| (pool[a] - x).abs().total_cmp(&(pool[b] - x).abs())).expect("non-empty pool")
    };
    for (pairs, pos) in [(&mut r, &phi), (&mut s, &psi)] {
        if pos.is_empty() {
            continue;
        }
        let mut seen = vec![false; pos.len()];
        pairs.iter().for_each(|&(_, j)| seen[j] = true);
        for j in (0..pos.len()).filter(|&j| !seen[j]) {
            pairs.push((nearest(pos[j], &theta), j));
        }
    }
    // Every user endorses at least one entity of each non-empty kind, so
    // either block can be fitted on its own.
    for (pairs, pos) in [(&mut r, &phi), (&mut s, &psi)] {
        if pos.is_empty() {
            continue;
        }
        let mut user_seen = vec![false; num_users];
        pairs.iter().for_each(|&(u, _)| user_seen[u] = true);
        for u in (0..num_users).filter(|&u| !user_seen[u]) {
            pairs.push((u, nearest(theta[u], pos)));
        }
    }
    let data = EndorsementData::from_indexed(num_users, num_elites, num_contents, &r, &s);
    (data, SyntheticTruth { theta, phi, psi })
}

/// Removes `fraction` of each user's elite endorsements (rounded down,
/// always keeping at least one per user and per elite), choosing at random.
pub fn thin_elite_endorsements(data: &EndorsementData, fraction: f64, seed: u64) -> EndorsementData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kept = Vec::new();
    for u in 0..data.num_users() {
        let mut mine: Vec<(usize, f64)> = data.elites.of_user(u).collect();
        let drop = ((mine.len() as f64 * fraction).floor() as usize).min(mine.len().saturating_sub(1));
        mine.shuffle(&mut rng);
        kept.extend(mine.into_iter().skip(drop).map(|(t, w)| (u as u32, t as u32, w)));
    }
    // Restore one endorsement for any elite left with none.
    let mut elite_seen = vec![false; data.num_elites()];
    kept.iter().for_each(|&(_, e, _)| elite_seen[e as usize] = true);
    for (u, e, w) in data.elites.iter() {
        if !elite_seen[e] {
            elite_seen[e] = true;
            kept.push((u as u32, e as u32, w));
        }
    }
    EndorsementData { elites: Endorsements::new(data.num_users(), data.num_elites(), kept), ..data.clone() }
}
