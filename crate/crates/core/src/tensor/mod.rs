//! Dense arrays and tape-based reverse-mode differentiation.
//!
//! Every array is row-major and at most two-dimensional in practice: frames
//! along rows, features or classes along columns. A [`Tape`] records
//! [`Primitive`] applications and [`Tape::backward`] walks the record once in
//! reverse to produce gradients for every bound parameter.

mod array;
pub mod checkpoint;
pub mod gradcheck;
mod primitive;
mod tape;

pub use array::DenseArray;
pub use primitive::{Cache, Primitive};
pub use tape::{Bound, Gradients, ParamSet, Tape, Var};
