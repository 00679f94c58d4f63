use crate::error::{Error, Result};
use crate::graph::FeedbackGraph;

/// Ideological positions aligned with a graph's user and item indices.
/// Entries are `None` where no position is known.
#[derive(Debug, Clone, PartialEq)]
pub struct Positions {
    users: Vec<Option<f64>>,
    items: Vec<Option<f64>>,
    item_labels: Vec<String>,
    user_labels: Vec<String>,
}

impl Positions {
    /// Complete positions; labels are the indices.
    pub fn new(users: Vec<f64>, items: Vec<f64>) -> Self {
        Positions {
            user_labels: (0..users.len()).map(|u| u.to_string()).collect(),
            item_labels: (0..items.len()).map(|i| i.to_string()).collect(),
            users: users.into_iter().map(Some).collect(),
            items: items.into_iter().map(Some).collect(),
        }
    }

    /// Looks up every node of `graph` by external ID.
    pub fn for_graph(
        graph: &FeedbackGraph,
        user: impl Fn(&str) -> Option<f64>,
        item: impl Fn(&str) -> Option<f64>,
    ) -> Self {
        Positions {
            users: graph.user_ids().iter().map(|id| user(id)).collect(),
            items: graph.item_ids().iter().map(|id| item(id)).collect(),
            user_labels: graph.user_ids().to_vec(),
            item_labels: graph.item_ids().to_vec(),
        }
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_items(&self) -> usize {
        self.items.len()
    }

    pub fn user(&self, u: usize) -> Result<f64> {
        self.users[u].ok_or_else(|| Error::MissingPosition(format!("user {}", self.user_labels[u])))
    }

    pub fn item(&self, i: usize) -> Result<f64> {
        self.items[i].ok_or_else(|| Error::MissingPosition(self.item_labels[i].clone()))
    }

    /// All user positions, failing on the first gap.
    pub fn complete_users(&self) -> Result<Vec<f64>> {
        (0..self.users.len()).map(|u| self.user(u)).collect()
    }

    /// All item positions, failing on the first gap.
    pub fn complete_items(&self) -> Result<Vec<f64>> {
        (0..self.items.len()).map(|i| self.item(i)).collect()
    }
}
