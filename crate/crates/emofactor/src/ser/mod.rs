//! Emotion classification: the attention-CRNN model, its input channels,
//! training loop, and artifacts.

pub mod input;
pub mod model;
pub mod train;

pub use input::{make_acrnn_input, AcrnnInput};
pub use model::{acrnn_forward, AcrnnConfig, AcrnnModel, EmotionPosterior, N_CLASSES};
pub use train::{
    evaluate_acrnn, examples_from_features, load_acrnn, predict_batch, save_acrnn, train_acrnn,
    AcrnnSidecar, AcrnnTrainReport, SerExample,
};
