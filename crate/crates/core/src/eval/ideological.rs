use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::FeedbackGraph;
use crate::positions::Positions;
use crate::recommenders::RankedList;

fn item_positions(list: &RankedList, k: usize, positions: &Positions) -> Result<Vec<f64>> {
    list.items().take(k).map(|i| positions.item(i)).collect()
}

fn spread(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    max - min
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Mean over lists of the position range covered by the top `k` items.
/// Lists with fewer than two items contribute 0.
pub fn rec_range(lists: &[RankedList], positions: &Positions, k: usize) -> Result<f64> {
    if lists.is_empty() {
        return Err(Error::NoEvaluatedUsers);
    }
    let mut total = 0.0;
    for l in lists {
        total += spread(&item_positions(l, k, positions)?);
    }
    Ok(total / lists.len() as f64)
}

/// Per-user position summaries of recommendations against the user's own
/// position and training profile, averaged over users.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdeologicalBattery {
    pub rec_pos: f64,
    pub train_pos: f64,
    pub user_shift: f64,
    pub train_shift: f64,
    pub rec_range: f64,
    pub uw_recs: f64,
    pub uw_shift: f64,
    pub tw_recs: f64,
    pub tw_shift: f64,
    pub uw_range: f64,
}

impl IdeologicalBattery {
    pub const NAMES: [&'static str; 10] = [
        "Rec-pos",
        "Train-pos",
        "User-shift",
        "Train-shift",
        "Rec-range",
        "UW-Recs",
        "UW-Shift",
        "TW-Recs",
        "TW-Shift",
        "UW-Range",
    ];

    pub fn values(&self) -> [f64; 10] {
        [
            self.rec_pos,
            self.train_pos,
            self.user_shift,
            self.train_shift,
            self.rec_range,
            self.uw_recs,
            self.uw_shift,
            self.tw_recs,
            self.tw_shift,
            self.uw_range,
        ]
    }

    fn from_values(v: [f64; 10]) -> Self {
        IdeologicalBattery {
            rec_pos: v[0],
            train_pos: v[1],
            user_shift: v[2],
            train_shift: v[3],
            rec_range: v[4],
            uw_recs: v[5],
            uw_shift: v[6],
            tw_recs: v[7],
            tw_shift: v[8],
            uw_range: v[9],
        }
    }

    /// The battery for one user.
    pub fn for_user(theta: f64, rec: &[f64], train: &[f64]) -> Self {
        let rec_pos = mean(rec);
        let train_pos = mean(train);
        let user_shift = rec_pos - theta;
        let train_shift = rec_pos - train_pos;
        let range = spread(rec);
        IdeologicalBattery {
            rec_pos,
            train_pos,
            user_shift,
            train_shift,
            rec_range: range,
            uw_recs: theta * rec_pos,
            uw_shift: theta * user_shift,
            tw_recs: train_pos * rec_pos,
            tw_shift: train_pos * train_shift,
            uw_range: theta.abs() * range,
        }
    }

    /// Element-wise mean.
    pub fn mean_of(items: &[IdeologicalBattery]) -> Option<Self> {
        if items.is_empty() {
            return None;
        }
        let mut acc = [0.0; 10];
        for b in items {
            for (a, v) in acc.iter_mut().zip(b.values()) {
                *a += v;
            }
        }
        Some(Self::from_values(acc.map(|a| a / items.len() as f64)))
    }
}

/// Battery averaged over users that have both recommendations and training
/// items.
pub fn ideological_battery(
    lists: &[RankedList],
    train: &FeedbackGraph,
    positions: &Positions,
    k: usize,
) -> Result<IdeologicalBattery> {
    let mut per_user = Vec::with_capacity(lists.len());
    for l in lists {
        let train_items = train.items_of(l.user);
        if l.is_empty() || train_items.is_empty() {
            continue;
        }
        let rec = item_positions(l, k, positions)?;
        let profile: Vec<f64> = train_items.iter().map(|&i| positions.item(i as usize)).collect::<Result<_>>()?;
        per_user.push(IdeologicalBattery::for_user(positions.user(l.user)?, &rec, &profile));
    }
    IdeologicalBattery::mean_of(&per_user).ok_or(Error::NoEvaluatedUsers)
}
