//! Gated recurrent layer, one direction.
//!
//! ```text
//! z = sigmoid(x Wz + h Uz + bz)
//! r = sigmoid(x Wr + h Ur + br)
//! n = tanh(x Wn + (r * h) Un + bn)
//! h' = n + z * (h - n)
//! ```
//!
//! `wx` holds `[Wz Wr Wn]`, `uzr` holds `[Uz Ur]`, `b` holds `[bz br bn]`.

use crate::error::Result;
use crate::scalar::Scalar;
use crate::tensor::{Bound, DenseArray, Var};

pub(super) fn run<'t, T: Scalar>(
    bound: &Bound<'t, T>,
    prefix: &str,
    input: Var<'t, T>,
    reverse: bool,
) -> Result<Var<'t, T>> {
    let wx = bound.get(&format!("{}.wx", prefix))?;
    let uzr = bound.get(&format!("{}.uzr", prefix))?;
    let un = bound.get(&format!("{}.un", prefix))?;
    let b = bound.get(&format!("{}.b", prefix))?;
    let hidden = un.shape()[0];
    let frames = input.shape()[0];

    let projected = input.affine(wx, b)?;
    let gates_in = projected.slice_cols(0, 2 * hidden)?;
    let cand_in = projected.slice_cols(2 * hidden, 3 * hidden)?;

    let mut h = input.tape().constant(DenseArray::zeros(&[1, hidden]));
    let mut states = Vec::with_capacity(frames);
    let order: Box<dyn Iterator<Item = usize>> = if reverse {
        Box::new((0..frames).rev())
    } else {
        Box::new(0..frames)
    };
    for t in order {
        let zr = gates_in.slice_rows(t, t + 1)?.add(h.matmul(uzr)?)?.sigmoid()?;
        let z = zr.slice_cols(0, hidden)?;
        let r = zr.slice_cols(hidden, 2 * hidden)?;
        let n = cand_in.slice_rows(t, t + 1)?.add(r.mul(h)?.matmul(un)?)?.tanh()?;
        h = n.add(z.mul(h.sub(n)?)?)?;
        states.push(h);
    }
    if reverse {
        states.reverse();
    }
    Var::concat_rows(&states)
}
