use std::cell::{Cell, RefCell};
use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{Cache, DenseArray, Primitive};

static NEXT_TAPE_ID: AtomicUsize = AtomicUsize::new(0);

/// Named parameter arrays, iterated in name order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamSet<T> {
    entries: BTreeMap<String, DenseArray<T>>,
}

/// Gradients share the layout of the parameters they belong to.
pub type Gradients<T> = ParamSet<T>;

impl<T: Scalar> ParamSet<T> {
    pub fn new() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, name: impl Into<String>, value: DenseArray<T>) {
        self.entries.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Option<&DenseArray<T>> {
        self.entries.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut DenseArray<T>> {
        self.entries.get_mut(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &DenseArray<T>)> {
        self.entries.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&String, &mut DenseArray<T>)> {
        self.entries.iter_mut()
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.entries.keys()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total number of scalar values across all arrays.
    pub fn value_count(&self) -> usize {
        self.entries.values().map(DenseArray::len).sum()
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .map(|(k, v)| (k.clone(), DenseArray::zeros(v.shape())))
                .collect(),
        }
    }

    /// `self += scale * other`, matching entries by name.
    pub fn add_scaled(&mut self, other: &Self, scale: T) {
        for (name, dst) in self.entries.iter_mut() {
            if let Some(src) = other.entries.get(name) {
                for (d, &s) in dst.data_mut().iter_mut().zip(src.data()) {
                    *d += scale * s;
                }
            }
        }
    }

    pub fn scale(&mut self, factor: T) {
        for v in self.entries.values_mut() {
            for d in v.data_mut() {
                *d *= factor;
            }
        }
    }

    /// Largest absolute value over every entry.
    pub fn max_abs(&self) -> T {
        self.entries
            .values()
            .flat_map(|v| v.data().iter())
            .fold(T::zero(), |m, &v| m.max(v.abs()))
    }
}

struct Node<T> {
    primitive: Option<Primitive>,
    inputs: Vec<usize>,
    value: DenseArray<T>,
    cache: Cache<T>,
    param: Option<String>,
}

/// Records primitive applications for one reverse pass.
///
/// Nodes only ever reference earlier nodes, so reverse insertion order is a
/// reverse topological order. A tape is single-threaded and supports exactly
/// one [`Tape::backward`] call.
pub struct Tape<T> {
    id: usize,
    nodes: RefCell<Vec<Node<T>>>,
    consumed: Cell<bool>,
}

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t, T> {
    tape: &'t Tape<T>,
    index: usize,
}

/// Parameters registered on a tape, looked up by name.
pub struct Bound<'t, T> {
    vars: BTreeMap<String, Var<'t, T>>,
}

impl<'t, T: Scalar> Bound<'t, T> {
    pub fn get(&self, name: &str) -> Result<Var<'t, T>> {
        self.vars
            .get(name)
            .copied()
            .ok_or_else(|| Error::format("parameter set", format!("missing parameter `{}`", name)))
    }
}

impl<T: Scalar> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Self {
            id: NEXT_TAPE_ID.fetch_add(1, Ordering::Relaxed),
            nodes: RefCell::new(Vec::new()),
            consumed: Cell::new(false),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn push(&self, node: Node<T>) -> Var<'_, T> {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(node);
        Var {
            tape: self,
            index: nodes.len() - 1,
        }
    }

    /// A leaf that receives no gradient.
    pub fn constant(&self, value: DenseArray<T>) -> Var<'_, T> {
        self.push(Node {
            primitive: None,
            inputs: Vec::new(),
            value,
            cache: Cache::None,
            param: None,
        })
    }

    /// A named leaf whose gradient is reported by [`Tape::backward`].
    pub fn param(&self, name: impl Into<String>, value: DenseArray<T>) -> Var<'_, T> {
        self.push(Node {
            primitive: None,
            inputs: Vec::new(),
            value,
            cache: Cache::None,
            param: Some(name.into()),
        })
    }

    /// Registers every entry of `params` as a parameter leaf.
    pub fn bind(&self, params: &ParamSet<T>) -> Bound<'_, T> {
        Bound {
            vars: params
                .iter()
                .map(|(k, v)| (k.clone(), self.param(k.clone(), v.clone())))
                .collect(),
        }
    }

    /// Applies `primitive` to recorded inputs and records the result.
    pub fn apply<'a>(&'a self, primitive: Primitive, inputs: &[Var<'a, T>]) -> Result<Var<'a, T>> {
        if inputs.iter().any(|v| v.tape.id != self.id) {
            return Err(Error::ForeignVar);
        }
        let (value, cache) = {
            let nodes = self.nodes.borrow();
            let args: Vec<&DenseArray<T>> = inputs.iter().map(|v| &nodes[v.index].value).collect();
            primitive.forward(&args)?
        };
        if !value.is_finite() {
            return Err(Error::NonFinite {
                op: primitive.name(),
            });
        }
        Ok(self.push(Node {
            primitive: Some(primitive),
            inputs: inputs.iter().map(|v| v.index).collect(),
            value,
            cache,
            param: None,
        }))
    }

    /// Reverse pass from a one-element `output`. Every parameter on the tape
    /// gets an entry; parameters the output does not depend on get zeros.
    pub fn backward(&self, output: Var<'_, T>) -> Result<Gradients<T>> {
        if output.tape.id != self.id {
            return Err(Error::ForeignVar);
        }
        if self.consumed.replace(true) {
            return Err(Error::TapeConsumed);
        }
        let nodes = self.nodes.borrow();
        let out = &nodes[output.index].value;
        if !out.is_scalar() {
            return Err(Error::NotScalar(out.shape().to_vec()));
        }
        let mut grads: Vec<Option<DenseArray<T>>> = vec![None; output.index + 1];
        grads[output.index] = Some(DenseArray::full(out.shape(), T::one()));

        for i in (0..=output.index).rev() {
            let node = &nodes[i];
            let Some(prim) = &node.primitive else { continue };
            let Some(g) = grads[i].take() else { continue };
            let args: Vec<&DenseArray<T>> = node.inputs.iter().map(|&j| &nodes[j].value).collect();
            let input_grads = prim.vjp(&args, &node.value, &node.cache, &g);
            for (&j, ig) in node.inputs.iter().zip(input_grads) {
                match &mut grads[j] {
                    Some(acc) => acc.add_assign(&ig),
                    slot @ None => *slot = Some(ig),
                }
            }
        }

        let mut result = ParamSet::new();
        for (i, node) in nodes.iter().enumerate() {
            if let Some(name) = &node.param {
                let g = grads
                    .get_mut(i)
                    .and_then(Option::take)
                    .unwrap_or_else(|| DenseArray::zeros(node.value.shape()));
                match result.get_mut(name) {
                    Some(acc) => acc.add_assign(&g),
                    None => result.insert(name.clone(), g),
                }
            }
        }
        Ok(result)
    }
}

impl<'t, T: Scalar> Var<'t, T> {
    pub fn value(&self) -> DenseArray<T> {
        self.tape.nodes.borrow()[self.index].value.clone()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.tape.nodes.borrow()[self.index].value.shape().to_vec()
    }

    pub fn tape(&self) -> &'t Tape<T> {
        self.tape
    }

    fn unary(self, p: Primitive) -> Result<Self> {
        self.tape.apply(p, &[self])
    }

    fn binary(self, p: Primitive, other: Self) -> Result<Self> {
        self.tape.apply(p, &[self, other])
    }

    pub fn matmul(self, other: Self) -> Result<Self> {
        self.binary(Primitive::MatMul, other)
    }

    pub fn affine(self, weight: Self, bias: Self) -> Result<Self> {
        self.tape.apply(Primitive::Affine, &[self, weight, bias])
    }

    pub fn add(self, other: Self) -> Result<Self> {
        self.binary(Primitive::Add, other)
    }

    pub fn sub(self, other: Self) -> Result<Self> {
        self.binary(Primitive::Sub, other)
    }

    pub fn mul(self, other: Self) -> Result<Self> {
        self.binary(Primitive::Mul, other)
    }

    pub fn scale(self, c: f64) -> Result<Self> {
        self.unary(Primitive::Scale(c))
    }

    pub fn sigmoid(self) -> Result<Self> {
        self.unary(Primitive::Sigmoid)
    }

    pub fn tanh(self) -> Result<Self> {
        self.unary(Primitive::Tanh)
    }

    pub fn relu(self) -> Result<Self> {
        self.unary(Primitive::Relu)
    }

    pub fn softmax(self) -> Result<Self> {
        self.unary(Primitive::Softmax)
    }

    pub fn log_softmax(self) -> Result<Self> {
        self.unary(Primitive::LogSoftmax)
    }

    pub fn log(self) -> Result<Self> {
        self.unary(Primitive::Log {
            floor: Primitive::LOG_FLOOR,
        })
    }

    pub fn log_clamped(self, floor: f64) -> Result<Self> {
        self.unary(Primitive::Log { floor })
    }

    pub fn log1m(self, floor: f64) -> Result<Self> {
        self.unary(Primitive::Log1m { floor })
    }

    pub fn log1m_exp(self, floor: f64) -> Result<Self> {
        self.unary(Primitive::Log1mExp { floor })
    }

    pub fn sum(self) -> Result<Self> {
        self.unary(Primitive::Sum)
    }

    pub fn sum_rows(self) -> Result<Self> {
        self.unary(Primitive::SumRows)
    }

    pub fn max_rows(self) -> Result<Self> {
        self.unary(Primitive::MaxRows)
    }

    pub fn slice_rows(self, start: usize, end: usize) -> Result<Self> {
        self.unary(Primitive::SliceRows { start, end })
    }

    pub fn slice_cols(self, start: usize, end: usize) -> Result<Self> {
        self.unary(Primitive::SliceCols { start, end })
    }

    pub fn unfold(self, width: usize) -> Result<Self> {
        self.unary(Primitive::Unfold { width })
    }

    pub fn max_pool_rows(self, factor: usize) -> Result<Self> {
        self.unary(Primitive::MaxPoolRows { factor })
    }

    pub fn ctc_nll(self, labels: Vec<usize>, blank: usize) -> Result<Self> {
        self.unary(Primitive::CtcNll { labels, blank })
    }

    pub fn concat_rows(parts: &[Self]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::shape("concat_rows", "no inputs"))?;
        first.tape.apply(Primitive::ConcatRows, parts)
    }

    pub fn concat_cols(parts: &[Self]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::shape("concat_cols", "no inputs"))?;
        first.tape.apply(Primitive::ConcatCols, parts)
    }
}
