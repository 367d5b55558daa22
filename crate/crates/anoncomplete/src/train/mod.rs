//! Target construction, loss strategies, AdamW, and the chunked training
//! loop with carried per-program state.

pub mod adamw;
pub mod config;
pub mod loss;
pub mod run;
pub mod targets;

pub use adamw::{epoch_lr, AdamW};
pub use config::{parse_train_file, read_train_file, TrainFile};
pub use loss::{position_loss, Strategy};
pub use run::{holdout_split, train, EpochSummary, TrainConfig, TrainOutcome};
pub use targets::{make_targets, TargetKind};
