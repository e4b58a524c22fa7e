//! Weakly supervised sequence learning with multiple instance pooling.
//!
//! A recording (or utterance) is a *bag* whose frames are *instances*. An
//! instance-level network produces per-frame class probabilities, a pooling
//! function aggregates them into one bag-level probability per class, and the
//! bag-level prediction is trained against presence/absence labels. Two
//! pooling functions are provided:
//!
//! * max pooling, `y = max_i y_i`
//! * noisy-or pooling, `y = 1 - prod_i (1 - y_i)`, kept in log-complement form
//!
//! together with a CTC baseline, best path decoding, phone error rate,
//! segment-based sound event detection metrics, class-specific threshold
//! tuning, and a synthetic data generator.
//!
//! All numerics are generic over a [`Scalar`] (`f32` or `f64`); the aliases
//! at the crate root fix the scalar to `f64`, which is what the training
//! harness uses.

pub mod decoder;
pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod objectives;
pub mod scalar;
pub mod seqnets;
pub mod synthgen;
pub mod tensor;
pub mod trainer;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Dense row-major array of `f64`.
pub type Array = tensor::DenseArray<f64>;
/// Reverse-mode tape over `f64` arrays.
pub type Tape = tensor::Tape<f64>;
/// Named model parameters over `f64`.
pub type Params = tensor::ParamSet<f64>;
/// Per-frame class probabilities over `f64`.
pub type FramePredictions = seqnets::FramePredictions<f64>;
/// Bag-level pooled prediction over `f64`.
pub type BagPrediction = objectives::BagPrediction<f64>;
/// Instance-level network over `f64`.
pub type Model = seqnets::Model<f64>;
