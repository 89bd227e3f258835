//! Pretraining of the direct and indirect relatedness functions.

mod backprop;
mod config;
mod gradcheck;
mod optim;
mod sampling;
mod train;

pub use backprop::{batch_pass, margin_loss, BatchOutcome, EncoderGrads};
pub use config::TrainConfig;
pub use gradcheck::{analytic_gradient, gradient_check, GradCheckReport, REL_FLOOR};
pub use optim::Adam;
pub use sampling::{
    sample, sample_direct, sample_indirect, PairSample, RelationKind, MAX_REJECTIONS,
};
pub use train::{
    graph_vocabulary, random_word_table, ranking_accuracy, train, train_from, EpochSummary,
    TrainingRun,
};
