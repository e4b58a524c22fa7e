//! Instance-level sequence classifiers.
//!
//! A model is an optional convolutional front end (ReLU, non-overlapping max
//! pooling along time), a stack of bidirectional gated recurrent layers, and
//! a per-frame output layer. The output layer is a sigmoid per class for the
//! presence/absence systems or a softmax over classes plus blank for CTC.
//!
//! Input sequences are truncated to the largest multiple of the total time
//! pooling factor before the first layer; the trailing frames are dropped.

mod config;
mod gru;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{Bound, DenseArray, ParamSet, Tape, Var};

pub use config::{ConvLayer, Head, ModelConfig};

/// Per-frame probabilities produced by a model.
#[derive(Debug, Clone, PartialEq)]
pub struct FramePredictions<T> {
    /// `T' x K`: `K = C` for sigmoid heads, `C + 1` (blank last) for softmax.
    pub values: DenseArray<T>,
    /// Output frames per second.
    pub frame_rate: f64,
    pub head: Head,
}

impl<T: Scalar> FramePredictions<T> {
    pub fn frames(&self) -> usize {
        self.values.rows()
    }

    /// Output width, including the blank column for softmax heads.
    pub fn width(&self) -> usize {
        self.values.cols()
    }

    pub fn duration(&self) -> f64 {
        self.frames() as f64 / self.frame_rate
    }
}

/// Dropout behaviour for one forward pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dropout {
    Off,
    /// Masks drawn from a generator seeded with this value.
    On { seed: u64 },
}

/// A configured network with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Model<T> {
    pub config: ModelConfig,
    pub params: ParamSet<T>,
}

impl<T: Scalar> Model<T> {
    /// Fresh parameters: weights uniform in `+-sqrt(6 / (fan_in + fan_out))`,
    /// biases zero. Deterministic given `seed`.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self> {
        let params = init_parameters(&config, seed)?;
        Ok(Self { config, params })
    }

    /// Wraps loaded parameters after checking names and shapes.
    pub fn from_params(config: ModelConfig, params: ParamSet<T>) -> Result<Self> {
        config.validate()?;
        let layout = config.param_layout();
        if layout.len() != params.len() {
            return Err(Error::format(
                "parameter set",
                format!("expected {} arrays, found {}", layout.len(), params.len()),
            ));
        }
        for (name, shape) in &layout {
            match params.get(name) {
                Some(v) if v.shape() == shape.as_slice() => {}
                Some(v) => {
                    return Err(Error::format(
                        "parameter set",
                        format!("`{}` has shape {:?}, expected {:?}", name, v.shape(), shape),
                    ))
                }
                None => return Err(Error::format("parameter set", format!("missing `{}`", name))),
            }
        }
        Ok(Self { config, params })
    }

    /// Records the pre-activation output (`T' x K`) on `tape` using the
    /// parameters bound there.
    pub fn logits<'t>(
        &self,
        tape: &'t Tape<T>,
        bound: &Bound<'t, T>,
        features: &DenseArray<T>,
        dropout: Dropout,
    ) -> Result<Var<'t, T>> {
        let cfg = &self.config;
        if features.shape().len() != 2 || features.cols() != cfg.input_dim {
            return Err(Error::shape(
                "model input",
                format!("expected T x {}, got {:?}", cfg.input_dim, features.shape()),
            ));
        }
        let factor = cfg.pooling_factor();
        let usable = features.rows() / factor * factor;
        if usable == 0 {
            return Err(Error::shape(
                "model input",
                format!("{} frames is shorter than the pooling factor {}", features.rows(), factor),
            ));
        }
        let input = if usable == features.rows() {
            features.clone()
        } else {
            DenseArray::matrix(usable, cfg.input_dim, features.data()[..usable * cfg.input_dim].to_vec())?
        };

        let mut x = tape.constant(input);
        for (i, layer) in cfg.conv.iter().enumerate() {
            x = x
                .unfold(layer.width)?
                .affine(bound.get(&format!("conv{}.w", i))?, bound.get(&format!("conv{}.b", i))?)?
                .relu()?;
            if layer.pool > 1 {
                x = x.max_pool_rows(layer.pool)?;
            }
        }

        let mut rng = match dropout {
            Dropout::On { seed } if cfg.dropout > 0.0 => Some(ChaCha8Rng::seed_from_u64(seed)),
            _ => None,
        };
        for (l, _) in cfg.recurrent.iter().enumerate() {
            let fwd = gru::run(bound, &format!("rnn{}.fwd", l), x, false)?;
            let bwd = gru::run(bound, &format!("rnn{}.bwd", l), x, true)?;
            x = Var::concat_cols(&[fwd, bwd])?;
            if let Some(rng) = rng.as_mut() {
                x = x.mul(tape.constant(dropout_mask(&x.shape(), cfg.dropout, rng)))?;
            }
        }
        x.affine(bound.get("head.w")?, bound.get("head.b")?)
    }

    /// Per-frame probabilities. `input_rate` is the feature frame rate.
    pub fn forward(&self, features: &DenseArray<T>, input_rate: f64, dropout: Dropout) -> Result<FramePredictions<T>> {
        let tape = Tape::new();
        let bound = tape.bind(&self.params);
        let logits = self.logits(&tape, &bound, features, dropout)?;
        let probs = match self.config.head {
            Head::Sigmoid => logits.sigmoid()?,
            Head::Softmax => logits.softmax()?,
        };
        Ok(FramePredictions {
            values: probs.value(),
            frame_rate: input_rate / self.config.pooling_factor() as f64,
            head: self.config.head,
        })
    }

    /// Inference without dropout.
    pub fn predict(&self, features: &DenseArray<T>, input_rate: f64) -> Result<FramePredictions<T>> {
        self.forward(features, input_rate, Dropout::Off)
    }
}

fn dropout_mask<T: Scalar>(shape: &[usize], rate: f64, rng: &mut ChaCha8Rng) -> DenseArray<T> {
    let n: usize = shape.iter().product();
    let keep = T::lit(1.0 / (1.0 - rate));
    let data = (0..n)
        .map(|_| if rng.gen::<f64>() < rate { T::zero() } else { keep })
        .collect();
    DenseArray::new(shape.to_vec(), data).expect("mask shape")
}

/// Draws parameters for `config`. Arrays are filled in name order from one
/// generator so the result depends only on `(config, seed)`.
pub fn init_parameters<T: Scalar>(config: &ModelConfig, seed: u64) -> Result<ParamSet<T>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ParamSet::new();
    let mut layout = config.param_layout();
    layout.sort_by(|a, b| a.0.cmp(&b.0));
    for (name, shape) in layout {
        let n: usize = shape.iter().product();
        let data = if name.ends_with(".b") {
            vec![T::zero(); n]
        } else {
            let bound = (6.0 / (shape[0] + shape[1]) as f64).sqrt();
            (0..n).map(|_| T::lit(rng.gen_range(-bound..=bound))).collect()
        };
        params.insert(name, DenseArray::new(shape, data)?);
    }
    Ok(params)
}
