//! Factorized speech autoencoder: content/rhythm/pitch encoders around a
//! frozen timbre vector, factor removal by zeroing encoder inputs, and
//! deterministic corpus reconstruction under a factor mask.

pub mod config;
pub mod model;
pub mod train;

pub use config::{FactorMask, SpeechFlowConfig};
pub use model::{
    decode, encode, frames_loss, mask_inputs, reconstruction_loss, LatentBundle, MaskedInputs,
    ReconLoss, RrSeeds, SpeechFlowModel,
};
pub use train::{
    corpus_mse, load_flow, mean_frame_baseline_mse, reconstruct_corpus, save_flow,
    train_speechflow, FlowSidecar, FlowTrainReport, ReconstructedCorpus,
};
