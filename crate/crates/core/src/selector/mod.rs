//! Meta-learning selector: sub-tags subsets with their best reduction method
//! and trains an MLP to predict that label from dataset meta-features.

pub mod boost;
pub mod grid;
pub mod instance;
pub mod metrics;
pub mod mlp;
pub mod model;
pub mod rfe;
pub mod smote;
pub mod tagging;

pub use boost::{boost_train, split_by_subset, BoostOutcome, BoostParams, RoundReport};
pub use grid::{grid_search, CvRow, GridResult, ParamGrid};
pub use instance::{best_method, read_tagged_csv, write_tagged_csv, Provenance, TaggedInstance};
pub use metrics::{evaluate_metrics, ClassificationReport};
pub use mlp::{mlp_predict, mlp_train, MlpConfig, MlpModel};
pub use model::{select_method, SelectorModel};
pub use rfe::{rfe_select, RfeParams};
pub use smote::smote_balance;
pub use tagging::{meta_features, sub_tag, PreparedSubset, TaggingParams};
