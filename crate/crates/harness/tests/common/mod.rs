#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Users pick items with probability proportional to `1/(rank+1)`, so the
/// popular head is what every held-out set is made of.
pub fn popularity_dataset(path: &Path, users: usize, items: usize, per_user: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<f64> = (0..items).map(|i| 1.0 / (i + 1) as f64).collect();
    let total: f64 = weights.iter().sum();
    let mut out = String::new();
    for u in 0..users {
        let mut chosen = std::collections::BTreeSet::new();
        while chosen.len() < per_user {
            let mut x = rng.random::<f64>() * total;
            let mut i = 0;
            while i + 1 < items && x >= weights[i] {
                x -= weights[i];
                i += 1;
            }
            chosen.insert(i);
        }
        for i in chosen {
            writeln!(out, "u{u}\ti{i}").unwrap();
        }
    }
    fs::write(path, out).unwrap();
}

/// Two camps of users and items around -1 and +1 with a thin band of
/// centrist items that both camps touch now and then. Writes the edge file
/// and a position table; returns their paths.
pub struct Polarized {
    pub edges: PathBuf,
    pub positions: PathBuf,
}

pub fn polarized_dataset(dir: &Path, seed: u64) -> Polarized {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (users_per_side, items_per_side, bridge_items) = (80, 60, 12);
    let mut edges = String::new();
    let mut table = String::from("entity_kind\texternal_id\tposition\tbias\n");

    let mut item_pos = Vec::new();
    for side in [-1.0, 1.0] {
        for _ in 0..items_per_side {
            item_pos.push(side * rng.random_range(0.6..1.4));
        }
    }
    for _ in 0..bridge_items {
        item_pos.push(rng.random_range(-0.3..0.3));
    }
    for (i, p) in item_pos.iter().enumerate() {
        writeln!(table, "content\ti{i}\t{p}\t0").unwrap();
    }

    let mut u = 0;
    for (s, side) in [-1.0f64, 1.0].into_iter().enumerate() {
        let own = s * items_per_side;
        for _ in 0..users_per_side {
            writeln!(table, "user\tu{u}\t{}\t0", side * rng.random_range(0.6..1.4)).unwrap();
            for i in sample(&mut rng, items_per_side, 12) {
                writeln!(edges, "u{u}\ti{}", own + i).unwrap();
            }
            if rng.random::<f64>() < 0.3 {
                writeln!(edges, "u{u}\ti{}", 2 * items_per_side + rng.random_range(0..bridge_items)).unwrap();
            }
            u += 1;
        }
    }
    let edges_path = dir.join("polarized.tsv");
    let positions_path = dir.join("polarized-positions.tsv");
    fs::write(&edges_path, edges).unwrap();
    fs::write(&positions_path, table).unwrap();
    Polarized { edges: edges_path, positions: positions_path }
}

/// Writes a flat config file; `extra` holds additional `key = value` lines.
pub fn write_config(dir: &Path, name: &str, dataset: &Path, algorithm: &str, extra: &str) -> PathBuf {
    let path = dir.join(name);
    let text = format!(
        "dataset = {:?}\nformat = \"tsv-edges\"\nalgorithm = \"{algorithm}\"\noutdir = {:?}\n{extra}\n",
        dataset,
        dir.join("runs")
    );
    fs::write(&path, text).unwrap();
    path
}
