//! Metrics, the UCLA-style baseline and the shrinking experiment.

mod baseline;
mod confusion;
mod stability;

pub use baseline::ucla_baseline;
pub use confusion::{
    accuracy, confusion, confusion_from_predictions, universe_mismatch, ConfusionMatrix, Inferred, TrueRel,
};
pub use stability::{
    compare, mean_rows, run_algorithm, stability_experiment, transition, write_mean_csv, write_stability_csv,
    Algorithm, MeanRow, StabilityInput, StepResult, TransitionCount, TRANSITION_CATEGORIES,
};
