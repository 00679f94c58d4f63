use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::graph::FeedbackGraph;
use crate::recommenders::RankedList;

/// Above this many users personalization is estimated from sampled pairs.
pub const EXACT_PAIR_LIMIT: usize = 2000;
pub const SAMPLED_PAIRS: usize = 100_000;

/// Long-tail and diversity measures of top-`cutoff` lists.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LongtailMetrics {
    pub gini_diversity: f64,
    pub avg_degree: f64,
    pub personalization: f64,
    pub surprisal: f64,
    pub cutoff: usize,
}

/// Gini coefficient of non-negative counts, zeros included.
pub fn gini(counts: &[u64]) -> f64 {
    let n = counts.len() as i128;
    let total: i128 = counts.iter().map(|&c| c as i128).sum();
    if n == 0 || total == 0 {
        return 0.0;
    }
    let mut sorted = counts.to_vec();
    sorted.sort_unstable();
    let numerator: i128 = sorted.iter().zip(1i128..).map(|(&x, i)| (2 * i - n - 1) * x as i128).sum();
    numerator as f64 / (n * total) as f64
}

fn sorted_items(lists: &[RankedList], cutoff: usize) -> Vec<Vec<usize>> {
    lists
        .iter()
        .map(|l| {
            let mut v: Vec<usize> = l.items().take(cutoff).collect();
            v.sort_unstable();
            v
        })
        .collect()
}

fn overlap(a: &[usize], b: &[usize]) -> u64 {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// 1 minus the mean pairwise overlap fraction, over every user pair.
pub fn personalization_exact(lists: &[RankedList], cutoff: usize) -> f64 {
    let sets = sorted_items(lists, cutoff);
    let n = sets.len();
    if n < 2 {
        return 1.0;
    }
    let shared: u64 = (0..n).into_par_iter().map(|a| ((a + 1)..n).map(|b| overlap(&sets[a], &sets[b])).sum::<u64>()).sum();
    let pairs = (n * (n - 1) / 2) as f64;
    1.0 - shared as f64 / (pairs * cutoff as f64)
}

/// Same as [`personalization_exact`] but over `pairs` seeded random pairs of
/// distinct users.
pub fn personalization_sampled(lists: &[RankedList], cutoff: usize, pairs: usize, seed: u64) -> f64 {
    let sets = sorted_items(lists, cutoff);
    let n = sets.len();
    if n < 2 || pairs == 0 {
        return 1.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shared = 0u64;
    for _ in 0..pairs {
        let a = rng.random_range(0..n);
        let mut b = rng.random_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        shared += overlap(&sets[a], &sets[b]);
    }
    1.0 - shared as f64 / (pairs as f64 * cutoff as f64)
}

/// GiniD, average training degree, personalization and surprisal of the
/// top-`cutoff` lists. Surprisal of an item with training degree `d` among
/// `m` users is `-log2(max(d, 1) / m)`.
pub fn longtail_metrics(lists: &[RankedList], train: &FeedbackGraph, cutoff: usize, seed: u64) -> LongtailMetrics {
    let mut counts = vec![0u64; train.num_items()];
    let mut degree_sum = 0u64;
    let mut surprisal_sum = 0.0;
    let mut slots = 0usize;
    let m = train.num_users().max(1) as f64;
    for l in lists {
        for i in l.items().take(cutoff) {
            counts[i] += 1;
            let d = train.item_degree(i);
            degree_sum += d as u64;
            surprisal_sum += -((d.max(1) as f64) / m).log2();
            slots += 1;
        }
    }
    let personalization = if lists.len() <= EXACT_PAIR_LIMIT {
        personalization_exact(lists, cutoff)
    } else {
        personalization_sampled(lists, cutoff, SAMPLED_PAIRS, seed)
    };
    let per_slot = |x: f64| if slots == 0 { 0.0 } else { x / slots as f64 };
    LongtailMetrics {
        gini_diversity: 1.0 - gini(&counts),
        avg_degree: per_slot(degree_sum as f64),
        personalization,
        surprisal: per_slot(surprisal_sum),
        cutoff,
    }
}
