//! Splitting, accuracy, long-tail and ideological metrics, and the
//! significance tests used to compare recommenders.

pub mod accuracy;
pub mod histogram;
pub mod ideological;
pub mod longtail;
pub mod report;
pub mod split;
pub mod stats;

pub use accuracy::{accuracy_metrics, complete_ranking, AccuracyMetrics};
pub use histogram::{histogram_export, Histogram};
pub use ideological::{ideological_battery, rec_range, IdeologicalBattery};
pub use longtail::{gini, longtail_metrics, personalization_exact, personalization_sampled, LongtailMetrics};
pub use report::{evaluate_split, Cutoffs, EvalOptions, EvalReport, Metrics, SplitResult};
pub use split::{fingerprint, split, split_once, Split, SplitSpec, TestSet};
pub use stats::{ks_two_sample, pearson, stars, welch_t_one_tailed, KsResult, WelchResult};
