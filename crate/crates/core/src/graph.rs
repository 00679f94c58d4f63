//! Bipartite implicit-feedback graph, its row-stochastic transition matrix
//! and k-step mass propagation.
//!
//! Nodes are laid out users first: node `u` is user `u`, node `m + i` is
//! item `i`. Every stored edge has unit weight.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Immutable user × item incidence structure with degree index and
/// external-ID maps.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackGraph {
    user_ids: Vec<String>,
    item_ids: Vec<String>,
    user_index: HashMap<String, usize>,
    item_index: HashMap<String, usize>,
    // CSR user -> items, items sorted ascending.
    user_ptr: Vec<usize>,
    user_items: Vec<u32>,
    // CSR item -> users, users sorted ascending.
    item_ptr: Vec<usize>,
    item_users: Vec<u32>,
}

impl FeedbackGraph {
    /// Builds a graph over a fixed index space from dense `(user, item)`
    /// pairs. Duplicates are collapsed; nodes may end up with degree zero,
    /// which is how train graphs keep the index space of the full graph.
    pub fn from_indexed_edges(
        user_ids: Vec<String>,
        item_ids: Vec<String>,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let m = user_ids.len();
        let n = item_ids.len();
        let mut pairs: Vec<(u32, u32)> = Vec::new();
        for (u, i) in edges {
            if u >= m || i >= n {
                return Err(Error::IndexOutOfRange { user: u, item: i, num_users: m, num_items: n });
            }
            pairs.push((u as u32, i as u32));
        }
        pairs.sort_unstable();
        pairs.dedup();

        let (user_ptr, user_items) = csr(m, pairs.iter().map(|&(u, i)| (u, i)));
        let mut flipped: Vec<(u32, u32)> = pairs.iter().map(|&(u, i)| (i, u)).collect();
        flipped.sort_unstable();
        let (item_ptr, item_users) = csr(n, flipped.into_iter());

        let user_index = user_ids.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        let item_index = item_ids.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Ok(FeedbackGraph {
            user_ids,
            item_ids,
            user_index,
            item_index,
            user_ptr,
            user_items,
            item_ptr,
            item_users,
        })
    }

    pub fn num_users(&self) -> usize {
        self.user_ids.len()
    }

    pub fn num_items(&self) -> usize {
        self.item_ids.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.num_users() + self.num_items()
    }

    pub fn num_edges(&self) -> usize {
        self.user_items.len()
    }

    /// Items of `user`, ascending.
    pub fn items_of(&self, user: usize) -> &[u32] {
        &self.user_items[self.user_ptr[user]..self.user_ptr[user + 1]]
    }

    /// Users of `item`, ascending.
    pub fn users_of(&self, item: usize) -> &[u32] {
        &self.item_users[self.item_ptr[item]..self.item_ptr[item + 1]]
    }

    pub fn user_degree(&self, user: usize) -> usize {
        self.user_ptr[user + 1] - self.user_ptr[user]
    }

    pub fn item_degree(&self, item: usize) -> usize {
        self.item_ptr[item + 1] - self.item_ptr[item]
    }

    pub fn has_edge(&self, user: usize, item: usize) -> bool {
        self.items_of(user).binary_search(&(item as u32)).is_ok()
    }

    pub fn user_id(&self, user: usize) -> &str {
        &self.user_ids[user]
    }

    pub fn item_id(&self, item: usize) -> &str {
        &self.item_ids[item]
    }

    pub fn user_ids(&self) -> &[String] {
        &self.user_ids
    }

    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }

    pub fn user_index(&self, id: &str) -> Option<usize> {
        self.user_index.get(id).copied()
    }

    pub fn item_index(&self, id: &str) -> Option<usize> {
        self.item_index.get(id).copied()
    }

    /// All edges in (user, item) order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_users()).flat_map(move |u| self.items_of(u).iter().map(move |&i| (u, i as usize)))
    }

    /// Node index of an item in the `(m + n)` node space.
    pub fn item_node(&self, item: usize) -> usize {
        self.num_users() + item
    }

    pub fn node_degree(&self, node: usize) -> usize {
        let m = self.num_users();
        if node < m {
            self.user_degree(node)
        } else {
            self.item_degree(node - m)
        }
    }
}

fn csr(rows: usize, sorted: impl Iterator<Item = (u32, u32)>) -> (Vec<usize>, Vec<u32>) {
    let mut ptr = vec![0usize; rows + 1];
    let mut cols = Vec::new();
    for (r, c) in sorted {
        ptr[r as usize + 1] += 1;
        cols.push(c);
    }
    for r in 0..rows {
        ptr[r + 1] += ptr[r];
    }
    (ptr, cols)
}

/// Builds a feedback graph from external-ID interactions.
///
/// Duplicate pairs collapse to one edge. Users with fewer than
/// `min_user_degree` items and items with fewer than `min_item_degree`
/// users are removed repeatedly until no node violates its threshold.
/// Surviving IDs get dense indices in order of first appearance.
pub fn build_graph<U, I>(
    interactions: &[(U, I)],
    min_user_degree: usize,
    min_item_degree: usize,
) -> Result<FeedbackGraph>
where
    U: AsRef<str>,
    I: AsRef<str>,
{
    if interactions.is_empty() {
        return Err(Error::EmptyInput);
    }
    // Provisional indices in first-seen order.
    let mut users: Vec<&str> = Vec::new();
    let mut items: Vec<&str> = Vec::new();
    let mut uidx: HashMap<&str, u32> = HashMap::new();
    let mut iidx: HashMap<&str, u32> = HashMap::new();
    let mut pairs: Vec<(u32, u32)> = Vec::with_capacity(interactions.len());
    for (u, i) in interactions {
        let (u, i) = (u.as_ref(), i.as_ref());
        let ui = *uidx.entry(u).or_insert_with(|| {
            users.push(u);
            (users.len() - 1) as u32
        });
        let ii = *iidx.entry(i).or_insert_with(|| {
            items.push(i);
            (items.len() - 1) as u32
        });
        pairs.push((ui, ii));
    }
    pairs.sort_unstable();
    pairs.dedup();

    let mut user_alive = vec![true; users.len()];
    let mut item_alive = vec![true; items.len()];
    loop {
        let mut udeg = vec![0usize; users.len()];
        let mut ideg = vec![0usize; items.len()];
        for &(u, i) in &pairs {
            udeg[u as usize] += 1;
            ideg[i as usize] += 1;
        }
        let mut changed = false;
        for (u, alive) in user_alive.iter_mut().enumerate() {
            if *alive && (udeg[u] < min_user_degree || udeg[u] == 0) {
                *alive = false;
                changed = true;
            }
        }
        for (i, alive) in item_alive.iter_mut().enumerate() {
            if *alive && (ideg[i] < min_item_degree || ideg[i] == 0) {
                *alive = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        pairs.retain(|&(u, i)| user_alive[u as usize] && item_alive[i as usize]);
    }

    if pairs.is_empty() {
        return Err(Error::EmptyAfterFiltering { min_user_degree, min_item_degree });
    }

    let remap = |alive: &[bool]| {
        let mut next = 0usize;
        alive
            .iter()
            .map(|&a| {
                if a {
                    next += 1;
                    Some(next - 1)
                } else {
                    None
                }
            })
            .collect::<Vec<_>>()
    };
    let umap = remap(&user_alive);
    let imap = remap(&item_alive);
    let user_ids = users.iter().zip(&user_alive).filter(|(_, &a)| a).map(|(s, _)| s.to_string()).collect();
    let item_ids = items.iter().zip(&item_alive).filter(|(_, &a)| a).map(|(s, _)| s.to_string()).collect();
    let edges = pairs.iter().map(|&(u, i)| {
        (umap[u as usize].expect("live user"), imap[i as usize].expect("live item"))
    });
    FeedbackGraph::from_indexed_edges(user_ids, item_ids, edges)
}

/// Row-stochastic transition matrix `P = D⁻¹ A^G` over the `m + n` nodes.
#[derive(Debug, Clone)]
pub struct TransitionMatrix {
    num_users: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl TransitionMatrix {
    pub fn dim(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_items(&self) -> usize {
        self.dim() - self.num_users
    }

    /// Non-zero `(column, probability)` entries of row `node`.
    pub fn row(&self, node: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[node]..self.row_ptr[node + 1];
        self.cols[span.clone()].iter().zip(&self.vals[span]).map(|(&c, &v)| (c as usize, v))
    }

    /// Dense copy, only sensible for tiny graphs.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        let mut out = vec![vec![0.0; d]; d];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in self.row(r) {
                row[c] = v;
            }
        }
        out
    }
}

/// Row-normalizes the block adjacency of `graph`.
///
/// Nodes of degree zero (possible only in train graphs that keep the
/// full index space) get an empty row; they are unreachable.
pub fn transition(graph: &FeedbackGraph) -> TransitionMatrix {
    let m = graph.num_users();
    let n = graph.num_items();
    let mut row_ptr = Vec::with_capacity(m + n + 1);
    let mut cols = Vec::with_capacity(2 * graph.num_edges());
    let mut vals = Vec::with_capacity(2 * graph.num_edges());
    row_ptr.push(0);
    for u in 0..m {
        let items = graph.items_of(u);
        let p = 1.0 / items.len() as f64;
        for &i in items {
            cols.push((m + i as usize) as u32);
            vals.push(p);
        }
        row_ptr.push(cols.len());
    }
    for i in 0..n {
        let users = graph.users_of(i);
        let p = 1.0 / users.len() as f64;
        for &u in users {
            cols.push(u);
            vals.push(p);
        }
        row_ptr.push(cols.len());
    }
    TransitionMatrix { num_users: m, row_ptr, cols, vals }
}

/// Dense walk mass over all `m + n` nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct MassVector(pub Vec<f64>);

impl MassVector {
    pub fn zeros(dim: usize) -> Self {
        MassVector(vec![0.0; dim])
    }

    /// `mass` concentrated on `node`.
    pub fn unit(dim: usize, node: usize, mass: f64) -> Self {
        let mut v = vec![0.0; dim];
        v[node] = mass;
        MassVector(v)
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Computes `start · P^steps` by repeated sparse vector-matrix products.
pub fn propagate(p: &TransitionMatrix, start: &MassVector, steps: usize) -> Result<MassVector> {
    if start.len() != p.dim() {
        return Err(Error::DimensionMismatch { expected: p.dim(), found: start.len() });
    }
    if steps == 0 {
        return Err(Error::InvalidParameter("propagate needs steps >= 1".into()));
    }
    let mut cur = start.0.clone();
    let mut next = vec![0.0; cur.len()];
    for _ in 0..steps {
        next.iter_mut().for_each(|x| *x = 0.0);
        for (r, &mass) in cur.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            for (c, prob) in p.row(r) {
                next[c] += mass * prob;
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(MassVector(cur))
}

/// k-step walk probabilities from `user`, restricted to item vertices,
/// as `(item, probability)` pairs with positive probability.
pub(crate) fn user_walk(p: &TransitionMatrix, user: usize, steps: usize) -> Result<Vec<(usize, f64)>> {
    let m = p.num_users();
    if user >= m {
        return Err(Error::NotAUser { index: user, num_users: m });
    }
    let out = propagate(p, &MassVector::unit(p.dim(), user, 1.0), steps)?;
    Ok(out.0[m..].iter().enumerate().filter(|(_, &v)| v > 0.0).map(|(i, &v)| (i, v)).collect())
}
