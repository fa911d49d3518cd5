//! Datasets, feature scaling, splits, synthetic generators and model files.

mod dataset;
pub mod persist;
mod scaling;
mod split;
pub mod synth;

pub use dataset::{load_csv, write_csv, Dataset, LabelColumn, LabelMapping};
pub use scaling::{ScalingTransform, SCALED_HIGH, SCALED_LOW};
pub use split::{kfold, stratified_folds, train_test_split, SplitSpec};
