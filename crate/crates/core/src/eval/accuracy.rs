use rayon::prelude::*;

use super::split::TestSet;
use crate::error::{Error, Result};
use crate::graph::FeedbackGraph;
use crate::recommenders::RankedList;

/// Accuracy of full rankings against held-out items.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyMetrics {
    pub auc: f64,
    /// Held-out items found in the top `cutoff`, over all held-out items.
    pub hit_rate: f64,
    pub precision: f64,
    /// Mean 1-based rank of held-out items, micro-averaged over items.
    pub mean_rank: f64,
    pub cutoff: usize,
    pub users: usize,
}

/// Extends a (possibly partial) ranking to every non-training item. Items
/// the list does not mention go below it in ascending index order, tied at
/// negative infinity.
pub fn complete_ranking(list: &RankedList, train_items: &[u32], num_items: usize) -> RankedList {
    let mut seen = vec![false; num_items];
    let mut entries = Vec::with_capacity(num_items.saturating_sub(train_items.len()));
    for &(i, s) in &list.entries {
        if i < num_items && !seen[i] && train_items.binary_search(&(i as u32)).is_err() {
            seen[i] = true;
            entries.push((i, s));
        }
    }
    for (i, &was_seen) in seen.iter().enumerate() {
        if !was_seen && train_items.binary_search(&(i as u32)).is_err() {
            entries.push((i, f64::NEG_INFINITY));
        }
    }
    RankedList { user: list.user, entries }
}

/// One user's contribution to [`AccuracyMetrics`].
#[derive(Debug, Default, Clone, Copy)]
pub struct UserTally {
    auc: Option<f64>,
    hits: usize,
    rank_sum: usize,
    test_items: usize,
}

/// Tallies a complete ranking (see [`complete_ranking`]).
pub fn tally_user(ranking: &RankedList, test: &[u32], cutoff: usize) -> UserTally {
    let is_test = |i: usize| test.binary_search(&(i as u32)).is_ok();
    let mut negatives: Vec<f64> = ranking.entries.iter().filter(|&&(i, _)| !is_test(i)).map(|&(_, s)| s).collect();
    negatives.sort_by(f64::total_cmp);
    let mut t = UserTally::default();
    let mut correct = 0.0;
    for (pos, &(i, s)) in ranking.entries.iter().enumerate() {
        if !is_test(i) {
            continue;
        }
        t.test_items += 1;
        t.rank_sum += pos + 1;
        if pos < cutoff {
            t.hits += 1;
        }
        let below = negatives.partition_point(|&n| n < s);
        let tied = negatives.partition_point(|&n| n <= s) - below;
        correct += below as f64 + 0.5 * tied as f64;
    }
    if !negatives.is_empty() && t.test_items > 0 {
        t.auc = Some(correct / (t.test_items * negatives.len()) as f64);
    }
    t
}

/// AUC, HR@cutoff, P@cutoff and mean rank. `ranked` may hold partial lists;
/// each is completed with [`complete_ranking`] first. Users without held-out
/// items are skipped, and users with no negative candidates drop out of the
/// AUC mean only.
pub fn accuracy_metrics(
    ranked: &[RankedList],
    test: &TestSet,
    train: &FeedbackGraph,
    cutoff: usize,
) -> Result<AccuracyMetrics> {
    let tallies: Vec<UserTally> = ranked
        .par_iter()
        .filter(|l| l.user < test.num_users() && !test.items_of(l.user).is_empty())
        .map(|l| {
            let full = complete_ranking(l, train.items_of(l.user), train.num_items());
            tally_user(&full, test.items_of(l.user), cutoff)
        })
        .collect();
    aggregate(&tallies, cutoff)
}

/// Combines per-user tallies, in order.
pub fn aggregate(tallies: &[UserTally], cutoff: usize) -> Result<AccuracyMetrics> {
    if tallies.is_empty() {
        return Err(Error::NoEvaluatedUsers);
    }
    let aucs: Vec<f64> = tallies.iter().filter_map(|t| t.auc).collect();
    let hits: usize = tallies.iter().map(|t| t.hits).sum();
    let total: usize = tallies.iter().map(|t| t.test_items).sum();
    let rank_sum: usize = tallies.iter().map(|t| t.rank_sum).sum();
    let users = tallies.len();
    Ok(AccuracyMetrics {
        auc: if aucs.is_empty() { f64::NAN } else { aucs.iter().sum::<f64>() / aucs.len() as f64 },
        hit_rate: if total == 0 { 0.0 } else { hits as f64 / total as f64 },
        precision: hits as f64 / (cutoff * users) as f64,
        mean_rank: if total == 0 { f64::NAN } else { rank_sum as f64 / total as f64 },
        cutoff,
        users,
    })
}
