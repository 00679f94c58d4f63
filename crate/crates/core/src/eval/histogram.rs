use std::io::Write;

use crate::error::{Error, Result};
use crate::ideology::Leaning;

const CLASSES: [Leaning; 3] = [Leaning::Left, Leaning::Center, Leaning::Right];

/// Per-class bin counts over a fixed range.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    /// `counts[c][b]` for class `c` in Left, Center, Right order.
    pub counts: [Vec<u64>; 3],
}

impl Histogram {
    pub fn bins(&self) -> usize {
        self.counts[0].len()
    }

    pub fn class_counts(&self, class: Leaning) -> &[u64] {
        &self.counts[CLASSES.iter().position(|&c| c == class).unwrap_or(0)]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// One row per bin: `bin_lo bin_hi Left Center Right`.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "bin_lo\tbin_hi\tLeft\tCenter\tRight")?;
        let width = (self.hi - self.lo) / self.bins() as f64;
        for b in 0..self.bins() {
            let lo = self.lo + width * b as f64;
            let hi = if b + 1 == self.bins() { self.hi } else { lo + width };
            writeln!(out, "{lo:.6}\t{hi:.6}\t{}\t{}\t{}", self.counts[0][b], self.counts[1][b], self.counts[2][b])?;
        }
        Ok(())
    }
}

/// Bins `values` into `bins` equal-width bins over `[lo, hi]`, separately per
/// class. Values outside the range land in the edge bins.
pub fn histogram_export(values: &[f64], classes: &[Leaning], bins: usize, range: (f64, f64)) -> Result<Histogram> {
    let (lo, hi) = range;
    if bins < 2 {
        return Err(Error::InvalidParameter(format!("bins must be >= 2, got {bins}")));
    }
    if !(hi > lo) {
        return Err(Error::DegenerateRange(hi - lo));
    }
    if values.len() != classes.len() {
        return Err(Error::DimensionMismatch { expected: values.len(), found: classes.len() });
    }
    let mut counts = [vec![0u64; bins], vec![0u64; bins], vec![0u64; bins]];
    for (&v, &c) in values.iter().zip(classes) {
        let b = (((v - lo) / (hi - lo)) * bins as f64).floor().clamp(0.0, (bins - 1) as f64) as usize;
        let ci = CLASSES.iter().position(|&k| k == c).unwrap_or(0);
        counts[ci][b] += 1;
    }
    Ok(Histogram { lo, hi, counts })
}
