//! Random walk with erasure.
//!
//! Each iteration launches k-step walks from the origin user with the mass
//! left over from the previous round. At destination item `j` a fraction
//! `Q[origin, j]` of the arriving mass is erased and sent back to the
//! origin; the rest stays and accumulates as the item's score.
//!
//! Erasure matrices are never materialized. A strategy evaluates
//! `Q[origin, j]` on demand from degrees or positions.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::graph::{user_walk, FeedbackGraph, TransitionMatrix};
use crate::scores::ScoreMap;

/// Default number of erasure rounds.
pub const DEFAULT_ITERATIONS: usize = 10;
/// Default walk length.
pub const DEFAULT_WALK_LENGTH: usize = 3;
/// Iteration stops once the origin mass falls below this.
pub const MASS_EPSILON: f64 = 1e-12;
/// Upper clamp on bridge similarities so every entry stays below 1.
pub const MAX_BRIDGE_SIMILARITY: f64 = 1.0 - 1e-9;

/// A closed-form erasure rule `(origin user, destination item) -> [0, 1)`.
pub trait ErasureStrategy: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;
    fn erasure(&self, origin: usize, item: usize) -> f64;
}

/// No erasure: RWE reduces to the plain k-step walk.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroErasure;

impl ErasureStrategy for ZeroErasure {
    fn name(&self) -> &'static str {
        "zero"
    }
    fn erasure(&self, _origin: usize, _item: usize) -> f64 {
        0.0
    }
}

/// The same erasure probability everywhere.
#[derive(Debug, Clone, Copy)]
pub struct UniformErasure(f64);

impl UniformErasure {
    pub fn new(q: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&q) {
            return Err(Error::InvalidParameter(format!("uniform erasure must lie in [0, 1), got {q}")));
        }
        Ok(UniformErasure(q))
    }
}

impl ErasureStrategy for UniformErasure {
    fn name(&self) -> &'static str {
        "uniform"
    }
    fn erasure(&self, _origin: usize, _item: usize) -> f64 {
        self.0
    }
}

/// `Q[i, j] = 1 - degree(j)^-β`; favors low-degree items.
#[derive(Debug, Clone)]
pub struct LongTailErasure {
    per_item: Vec<f64>,
}

impl ErasureStrategy for LongTailErasure {
    fn name(&self) -> &'static str {
        "longtail"
    }
    fn erasure(&self, _origin: usize, item: usize) -> f64 {
        self.per_item[item]
    }
}

/// Similarity-based erasure for bridge items (opposite ideological sign
/// to the user), a constant `epsilon` for everything else.
#[derive(Debug, Clone)]
pub struct BridgeErasure {
    user_positions: Vec<f64>,
    item_positions: Vec<f64>,
    span: f64,
    epsilon: f64,
}

impl BridgeErasure {
    pub fn is_bridge(&self, user: usize, item: usize) -> bool {
        self.user_positions[user] * self.item_positions[item] < 0.0
    }

    /// `1 - |ψ_i - θ_u| / (max_p - min_p)`, clamped into `[0, 1 - 1e-9]`.
    pub fn similarity(&self, user: usize, item: usize) -> f64 {
        let d = (self.item_positions[item] - self.user_positions[user]).abs();
        (1.0 - d / self.span).clamp(0.0, MAX_BRIDGE_SIMILARITY)
    }
}

impl ErasureStrategy for BridgeErasure {
    fn name(&self) -> &'static str {
        "bridge"
    }
    fn erasure(&self, origin: usize, item: usize) -> f64 {
        if self.is_bridge(origin, item) {
            self.similarity(origin, item)
        } else {
            self.epsilon
        }
    }
}

/// Explicit dense `users × items` table. Meant for small graphs and tests.
#[derive(Debug, Clone)]
pub struct TableErasure {
    num_items: usize,
    values: Vec<f64>,
}

impl TableErasure {
    pub fn new(num_users: usize, num_items: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != num_users * num_items {
            return Err(Error::DimensionMismatch { expected: num_users * num_items, found: values.len() });
        }
        for (k, &v) in values.iter().enumerate() {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::ErasureOutOfRange { origin: k / num_items.max(1), dest: k % num_items.max(1), value: v });
            }
        }
        Ok(TableErasure { num_items, values })
    }
}

impl ErasureStrategy for TableErasure {
    fn name(&self) -> &'static str {
        "table"
    }
    fn erasure(&self, origin: usize, item: usize) -> f64 {
        self.values[origin * self.num_items + item]
    }
}

/// An erasure strategy plus the element-wise exponent ν.
#[derive(Debug, Clone)]
pub struct ErasureMatrix {
    strategy: Arc<dyn ErasureStrategy>,
    nu: f64,
}

impl ErasureMatrix {
    pub fn new(strategy: Arc<dyn ErasureStrategy>) -> Self {
        ErasureMatrix { strategy, nu: 1.0 }
    }

    pub fn zero() -> Self {
        Self::new(Arc::new(ZeroErasure))
    }

    pub fn uniform(q: f64) -> Result<Self> {
        Ok(Self::new(Arc::new(UniformErasure::new(q)?)))
    }

    pub fn table(num_users: usize, num_items: usize, values: Vec<f64>) -> Result<Self> {
        Ok(Self::new(Arc::new(TableErasure::new(num_users, num_items, values)?)))
    }

    pub fn strategy_name(&self) -> &'static str {
        self.strategy.name()
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// `Q[origin, item]^ν`.
    pub fn entry(&self, origin: usize, item: usize) -> f64 {
        let q = self.strategy.erasure(origin, item);
        if self.nu == 1.0 {
            q
        } else {
            q.powf(self.nu)
        }
    }
}

/// Long-tail erasure `1 - 1/degree(j)^β` over the item degrees of `graph`.
pub fn erasure_longtail(graph: &FeedbackGraph, beta: f64) -> Result<ErasureMatrix> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!("beta must be finite and >= 0, got {beta}")));
    }
    let per_item = (0..graph.num_items())
        .map(|j| {
            let d = graph.item_degree(j);
            // Unreachable items (degree 0 in a train graph) never receive mass.
            if d == 0 {
                0.0
            } else {
                1.0 - (d as f64).powf(beta).recip()
            }
        })
        .collect();
    Ok(ErasureMatrix::new(Arc::new(LongTailErasure { per_item })))
}

/// Bridge erasure from per-user and per-item positions, raised to `nu`.
///
/// The position range is taken over users and items together.
pub fn erasure_bridge(
    user_positions: &[f64],
    item_positions: &[f64],
    epsilon: f64,
    nu: f64,
) -> Result<ErasureMatrix> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::InvalidParameter(format!("epsilon must lie in [0, 1), got {epsilon}")));
    }
    let all = user_positions.iter().chain(item_positions);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &p in all {
        if !p.is_finite() {
            return Err(Error::InvalidParameter(format!("non-finite position {p}")));
        }
        lo = lo.min(p);
        hi = hi.max(p);
    }
    if !(hi - lo > 0.0) {
        return Err(Error::DegenerateRange(lo));
    }
    let q = ErasureMatrix::new(Arc::new(BridgeErasure {
        user_positions: user_positions.to_vec(),
        item_positions: item_positions.to_vec(),
        span: hi - lo,
        epsilon,
    }));
    apply_nu(&q, nu)
}

/// Element-wise power `Q^∘ν`.
pub fn apply_nu(q: &ErasureMatrix, nu: f64) -> Result<ErasureMatrix> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::InvalidParameter(format!("nu must be finite and > 0, got {nu}")));
    }
    Ok(ErasureMatrix { strategy: Arc::clone(&q.strategy), nu: q.nu * nu })
}

/// Retained mass per item for one origin.
#[derive(Debug, Clone, PartialEq)]
pub struct RweScores {
    pub origin: usize,
    pub scores: ScoreMap,
    pub iterations_run: usize,
    pub residual_mass: f64,
}

fn check_walk(p: &TransitionMatrix, origin: usize, k: usize) -> Result<()> {
    if k.is_multiple_of(2) {
        return Err(Error::EvenWalkLength(k));
    }
    if origin >= p.num_users() {
        return Err(Error::NotAUser { index: origin, num_users: p.num_users() });
    }
    Ok(())
}

/// Iterative RWE scores for `origin`.
///
/// The k-step row `p` of the origin is computed once; round `t` sends
/// `m_t · p` out, keeps `m_t p_j (1 - Q_j)` at each item and returns
/// `Σ_j m_t p_j Q_j` to the origin as `m_{t+1}`.
pub fn rwe_score(
    p: &TransitionMatrix,
    q: &ErasureMatrix,
    origin: usize,
    k: usize,
    iterations: usize,
) -> Result<RweScores> {
    check_walk(p, origin, k)?;
    if iterations == 0 {
        return Err(Error::InvalidParameter("iterations must be >= 1".into()));
    }
    let walk = user_walk(p, origin, k)?;
    let erase: Vec<f64> = walk.iter().map(|&(j, _)| q.entry(origin, j)).collect();
    let mut acc = vec![0.0; walk.len()];
    let mut mass = 1.0;
    let mut run = 0;
    while run < iterations && mass >= MASS_EPSILON {
        let mut returned = 0.0;
        for (slot, (&(_, pj), &qj)) in walk.iter().zip(&erase).enumerate() {
            let arrived = mass * pj;
            acc[slot] += arrived * (1.0 - qj);
            returned += arrived * qj;
        }
        mass = returned;
        run += 1;
    }
    let scores = ScoreMap::from_pairs(walk.iter().map(|&(j, _)| j).zip(acc).collect());
    Ok(RweScores { origin, scores, iterations_run: run, residual_mass: mass })
}

/// Geometric-series limit of [`rwe_score`]:
/// `p_j (1 - Q_j) / (1 - Σ_l p_l Q_l)`.
pub fn rwe_closed_form(p: &TransitionMatrix, q: &ErasureMatrix, origin: usize, k: usize) -> Result<RweScores> {
    check_walk(p, origin, k)?;
    let walk = user_walk(p, origin, k)?;
    let erase: Vec<f64> = walk.iter().map(|&(j, _)| q.entry(origin, j)).collect();
    let r: f64 = walk.iter().zip(&erase).map(|(&(_, pj), &qj)| pj * qj).sum();
    assert!(r < 1.0, "returned mass {r} must stay below 1");
    let scale = (1.0 - r).recip();
    let scores = ScoreMap::from_pairs(
        walk.iter().zip(&erase).map(|(&(j, pj), &qj)| (j, pj * (1.0 - qj) * scale)).collect(),
    );
    Ok(RweScores { origin, scores, iterations_run: 0, residual_mass: 0.0 })
}
