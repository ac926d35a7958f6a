//! MTL-DBN-DNN surrogate: a stack of RBM-pretrained sigmoid layers whose
//! output layer gives each task its own window of the last hidden layer,
//! adjacent windows sharing a few units. A fully connected DNN without
//! pretraining serves as the baseline.

pub mod checkpoint;
pub mod eval;
pub mod network;
pub mod norm;
pub mod rbm;
pub mod train;

pub use checkpoint::{read_checkpoint, write_checkpoint};
pub use eval::{evaluate, evaluate_predictions, r_squared, Evaluation};
pub use network::{Layer, ModelKind, MtlNetwork, Prediction, TaskMask};
pub use norm::{InputScaler, TargetScaler};
pub use rbm::{pretrain_dbn, RbmLayer, VisibleKind};
pub use train::{
    build_dnn, build_mtl, dataset_matrices, fine_tune, train_baseline_dnn, train_model, train_mtl, write_trace_csv,
    Architecture, EpochRecord, Split, TrainConfig, TrainedModel,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Independent generator stream for one purpose of a seeded run.
pub(crate) fn stream(seed: u64, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose);
    rng
}
