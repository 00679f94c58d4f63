/// Sparse item → score map, kept sorted by item index.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreMap {
    entries: Vec<(usize, f64)>,
}

impl ScoreMap {
    /// Builds from arbitrary `(item, score)` pairs; repeated items are summed.
    pub fn from_pairs(mut pairs: Vec<(usize, f64)>) -> Self {
        pairs.sort_by_key(|&(i, _)| i);
        let mut entries: Vec<(usize, f64)> = Vec::with_capacity(pairs.len());
        for (i, s) in pairs {
            match entries.last_mut() {
                Some((last, acc)) if *last == i => *acc += s,
                _ => entries.push((i, s)),
            }
        }
        ScoreMap { entries }
    }

    /// Keeps the non-zero entries of a dense per-item vector.
    pub fn from_dense(dense: &[f64]) -> Self {
        ScoreMap {
            entries: dense.iter().enumerate().filter(|(_, &s)| s != 0.0).map(|(i, &s)| (i, s)).collect(),
        }
    }

    pub fn get(&self, item: usize) -> Option<f64> {
        self.entries.binary_search_by_key(&item, |&(i, _)| i).ok().map(|k| self.entries[k].1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|&(_, s)| s).sum()
    }

    /// Scales every score by `f`.
    pub fn scaled(&self, f: f64) -> Self {
        ScoreMap { entries: self.entries.iter().map(|&(i, s)| (i, s * f)).collect() }
    }

    /// Items ordered by (score desc, item asc).
    pub fn ranking(&self) -> Vec<usize> {
        let mut v = self.entries.clone();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        v.into_iter().map(|(i, _)| i).collect()
    }
}
