use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Output nonlinearity of the per-frame layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Head {
    /// Independent sigmoid per class; classes may co-occur in a frame.
    Sigmoid,
    /// Softmax over the classes plus a trailing blank column.
    Softmax,
}

/// One convolutional layer: `width`-frame kernel, `channels` outputs, then
/// max pooling over `pool` frames (1 disables pooling).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvLayer {
    pub width: usize,
    pub channels: usize,
    #[serde(default = "one")]
    pub pool: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub input_dim: usize,
    #[serde(default)]
    pub conv: Vec<ConvLayer>,
    /// Hidden units per direction for each bidirectional recurrent layer.
    #[serde(default)]
    pub recurrent: Vec<usize>,
    pub head: Head,
    pub classes: usize,
    #[serde(default)]
    pub dropout: f64,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.input_dim == 0 {
            return bad("input_dim must be positive".into());
        }
        if self.classes == 0 {
            return bad("classes must be positive".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} outside [0, 1)", self.dropout));
        }
        for (i, c) in self.conv.iter().enumerate() {
            if c.width == 0 || c.channels == 0 || c.pool == 0 {
                return bad(format!("conv layer {} has a zero width, channel count or pool", i));
            }
        }
        if let Some(i) = self.recurrent.iter().position(|&h| h == 0) {
            return bad(format!("recurrent layer {} has zero units", i));
        }
        Ok(())
    }

    /// Product of the time pooling factors.
    pub fn pooling_factor(&self) -> usize {
        self.conv.iter().map(|c| c.pool).product()
    }

    /// Width of the output layer: `C`, or `C + 1` with a blank.
    pub fn output_width(&self) -> usize {
        match self.head {
            Head::Sigmoid => self.classes,
            Head::Softmax => self.classes + 1,
        }
    }

    /// Every parameter name with its shape.
    pub fn param_layout(&self) -> Vec<(String, Vec<usize>)> {
        let mut out = Vec::new();
        let mut width = self.input_dim;
        for (i, c) in self.conv.iter().enumerate() {
            out.push((format!("conv{}.w", i), vec![c.width * width, c.channels]));
            out.push((format!("conv{}.b", i), vec![1, c.channels]));
            width = c.channels;
        }
        for (l, &h) in self.recurrent.iter().enumerate() {
            for dir in ["fwd", "bwd"] {
                let p = format!("rnn{}.{}", l, dir);
                out.push((format!("{}.wx", p), vec![width, 3 * h]));
                out.push((format!("{}.uzr", p), vec![h, 2 * h]));
                out.push((format!("{}.un", p), vec![h, h]));
                out.push((format!("{}.b", p), vec![1, 3 * h]));
            }
            width = 2 * h;
        }
        out.push(("head.w".into(), vec![width, self.output_width()]));
        out.push(("head.b".into(), vec![1, self.output_width()]));
        out
    }
}
