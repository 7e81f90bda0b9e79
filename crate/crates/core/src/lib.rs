//! Categorical machine-learning toolkit built around the seven-class Ayurvedic
//! dosha ("Prakriti") classification pipeline.
//!
//! The crate covers the full pipeline at library level:
//!
//! * [`dataset`] — categorical tables: CSV ingestion, forward-fill imputation,
//!   seeded train/test splitting.
//! * [`feature_selection`] — chi-square scoring against the class label and
//!   top-K reduction.
//! * [`kmodes`] — k-modes clustering with simple-matching dissimilarity.
//! * [`mnb`] — multinomial naive Bayes over one-hot categorical events.
//! * [`dtree`] — entropy-based multiway decision trees with reduced-error
//!   post-pruning.
//! * [`metrics`] — confusion matrices and support-weighted multiclass metrics.
//! * [`synth`] — seeded generator of categorical datasets with planted class
//!   structure, for verification at desk scale.
//! * [`experiment`] — end-to-end pipeline and sweep driver over test sizes and
//!   feature counts.
//!
//! Statistical kernels are generic over the scalar type through the [`num::Real`]
//! trait (`f32` or `f64`); concrete `f64` aliases live at the crate root.

pub mod dataset;
pub mod dtree;
pub mod error;
pub mod experiment;
pub mod feature_selection;
pub mod kmodes;
pub mod metrics;
pub mod mnb;
pub mod num;
pub mod rng;
pub mod special;
pub mod synth;

pub use dataset::{CategoricalTable, IngestOptions, LabelColumn, SplitPair};
pub use error::{Error, Result};
pub use synth::DOSHA_CLASSES;

/// Chi-square contingency table with `f64` expected counts.
pub type ContingencyTable64 = feature_selection::ContingencyTable<f64>;
/// Per-feature chi-square score at `f64` precision.
pub type FeatureScore64 = feature_selection::FeatureScore<f64>;
/// Multinomial naive Bayes model at `f64` precision.
pub type MnbModel64 = mnb::MnbModel<f64>;
/// Decision-tree hyperparameters at `f64` precision.
pub type TreeParams64 = dtree::TreeParams<f64>;
/// Multiclass metrics report at `f64` precision.
pub type MetricsReport64 = metrics::MetricsReport<f64>;
