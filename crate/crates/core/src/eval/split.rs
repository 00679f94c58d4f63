use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::FeedbackGraph;

/// How train/test splits are drawn.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SplitSpec {
    pub test_fraction: f64,
    /// Users with at least this many interactions contribute test items.
    pub min_interactions: usize,
    pub repetitions: usize,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec { test_fraction: 0.3, min_interactions: 4, repetitions: 3, seed: 0 }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::InvalidParameter(format!("test_fraction must lie in (0, 1), got {}", self.test_fraction)));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidParameter("repetitions must be >= 1".into()));
        }
        Ok(())
    }

    /// Test items for a user of the given degree.
    pub fn test_size(&self, degree: usize) -> usize {
        if degree < self.min_interactions {
            return 0;
        }
        // Round half up, at least one.
        ((self.test_fraction * degree as f64 + 0.5).floor() as usize).clamp(1, degree)
    }
}

/// Held-out items per user.
#[derive(Debug, Clone, PartialEq)]
pub struct TestSet {
    per_user: Vec<Vec<u32>>,
}

impl TestSet {
    pub fn from_edges(num_users: usize, edges: &[(usize, usize)]) -> Self {
        let mut per_user = vec![Vec::new(); num_users];
        for &(u, i) in edges {
            per_user[u].push(i as u32);
        }
        for items in &mut per_user {
            items.sort_unstable();
            items.dedup();
        }
        TestSet { per_user }
    }

    pub fn items_of(&self, user: usize) -> &[u32] {
        &self.per_user[user]
    }

    /// Users with at least one test item, ascending.
    pub fn users(&self) -> Vec<usize> {
        (0..self.per_user.len()).filter(|&u| !self.per_user[u].is_empty()).collect()
    }

    pub fn num_users(&self) -> usize {
        self.per_user.len()
    }

    pub fn len(&self) -> usize {
        self.per_user.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.per_user.iter().enumerate().flat_map(|(u, items)| items.iter().map(move |&i| (u, i as usize)))
    }
}

/// One repetition: train graph over the original index space plus the
/// held-out edges.
#[derive(Debug, Clone)]
pub struct Split {
    pub rep: usize,
    pub seed: u64,
    pub train: FeedbackGraph,
    pub test: TestSet,
    pub fingerprint: String,
}

/// SHA-256 over the sorted held-out edges, written as external IDs.
pub fn fingerprint(graph: &FeedbackGraph, test: &TestSet) -> String {
    let mut h = Sha256::new();
    for (u, i) in test.edges() {
        h.update(graph.user_id(u).as_bytes());
        h.update(b"\t");
        h.update(graph.item_id(i).as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

/// Draws `spec.repetitions` independent splits; repetition `r` uses seed
/// `spec.seed + r`.
pub fn split(graph: &FeedbackGraph, spec: &SplitSpec) -> Result<Vec<Split>> {
    spec.validate()?;
    (0..spec.repetitions).map(|rep| split_once(graph, spec, rep)).collect()
}

pub fn split_once(graph: &FeedbackGraph, spec: &SplitSpec, rep: usize) -> Result<Split> {
    let seed = spec.seed.wrapping_add(rep as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::with_capacity(graph.num_edges());
    let mut test = Vec::new();
    for u in 0..graph.num_users() {
        let items = graph.items_of(u);
        let k = spec.test_size(items.len());
        let mut held = vec![false; items.len()];
        for idx in rand::seq::index::sample(&mut rng, items.len(), k) {
            held[idx] = true;
        }
        for (&i, &h) in items.iter().zip(&held) {
            if h {
                test.push((u, i as usize));
            } else {
                train.push((u, i as usize));
            }
        }
    }
    let train = FeedbackGraph::from_indexed_edges(graph.user_ids().to_vec(), graph.item_ids().to_vec(), train)?;
    let test = TestSet::from_edges(graph.num_users(), &test);
    let fingerprint = fingerprint(graph, &test);
    Ok(Split { rep, seed, train, test, fingerprint })
}
