//! Training loops and adaptation schemes.

mod config;
mod early_stop;
mod ensemble;
mod record;
mod run;
mod schemes;

pub use config::{LossReduction, Metric, Scheme, TrainConfig};
pub use early_stop::{EarlyStopping, StopDecision};
pub use ensemble::{ensemble_predict, ensemble_probabilities, ensemble_score, evaluate_models, predict_labels};
pub use record::{EpochRecord, Phase, RunRecord, SnapshotRef, RUN_FORMAT, RUN_VERSION};
pub use run::{predict_all, score, train_loop, trainable_components, RunOutcome};
pub use schemes::{adapt, prepare_target_model, pretrain, Trained};
