//! Probability estimates for links the principle step left open.

mod features;
mod mlr;

pub use features::{build_features, FeatureSchema, FeatureVector};
pub use mlr::{
    argmax_label, class_index, cross_entropy, fit, gradient, loss, mean_cross_entropy, naive_baseline, one_hot,
    predict, softmax, train, train_test_split, write_predictions_csv, ProbabilityEstimate, TrainConfig, TrainedModel,
    CLASS_ORDER,
};
