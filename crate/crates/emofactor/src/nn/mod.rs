//! Minimal dense-math substrate for the models in this crate.
//!
//! Everything is `f64` and single-threaded per utterance; batch parallelism
//! happens one level up via [`crate::batch`]. Layers implement explicit
//! forward/backward pairs instead of a tape so that every gradient path is
//! visible and finite-difference checkable.

pub mod attention;
pub mod conv;
pub mod gradcheck;
pub mod init;
pub mod linear;
pub mod lstm;
pub mod ops;
pub mod optim;
pub mod serialize;

use ndarray::{Array1, Array2};

/// Mutable view of one named parameter (or gradient) tensor.
pub enum TensorMut<'a> {
    M(&'a mut Array2<f64>),
    V(&'a mut Array1<f64>),
}

/// Shared view of one named parameter (or gradient) tensor.
pub enum TensorRef<'a> {
    M(&'a Array2<f64>),
    V(&'a Array1<f64>),
}

impl TensorMut<'_> {
    pub fn as_slice_mut(&mut self) -> &mut [f64] {
        match self {
            TensorMut::M(a) => a.as_slice_mut().expect("standard layout"),
            TensorMut::V(a) => a.as_slice_mut().expect("standard layout"),
        }
    }

    pub fn shape(&self) -> Vec<usize> {
        match self {
            TensorMut::M(a) => a.shape().to_vec(),
            TensorMut::V(a) => a.shape().to_vec(),
        }
    }
}

impl TensorRef<'_> {
    pub fn as_slice(&self) -> &[f64] {
        match self {
            TensorRef::M(a) => a.as_slice().expect("standard layout"),
            TensorRef::V(a) => a.as_slice().expect("standard layout"),
        }
    }

    pub fn shape(&self) -> Vec<usize> {
        match self {
            TensorRef::M(a) => a.shape().to_vec(),
            TensorRef::V(a) => a.shape().to_vec(),
        }
    }
}

/// Uniform access to the named tensors of a model or of its gradient mirror.
///
/// Implementations must enumerate tensors in a fixed order; the optimizer,
/// serializer and gradient checker all pair parameters with gradients by
/// position.
pub trait HasTensors {
    fn tensors(&self) -> Vec<(&'static str, TensorRef<'_>)>;
    fn tensors_mut(&mut self) -> Vec<(&'static str, TensorMut<'_>)>;

    fn param_count(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.as_slice().len()).sum()
    }
}
