use crate::error::{Error, Result};
use crate::objectives::ctc;
use crate::scalar::Scalar;

use super::DenseArray;

/// The differentiable operations a tape can record.
///
/// Matrix-shaped primitives expect rank-2 inputs laid out as
/// `frames x features`. Clamped logarithms have zero derivative wherever the
/// clamp is active.
#[derive(Debug, Clone, PartialEq)]
pub enum Primitive {
    /// `a (n x k) . b (k x m)`
    MatMul,
    /// `x (n x i) . w (i x o) + b (1 x o)`, bias repeated over rows.
    Affine,
    Add,
    Sub,
    /// Elementwise product.
    Mul,
    Scale(f64),
    Sigmoid,
    Tanh,
    Relu,
    /// Row-wise softmax.
    Softmax,
    /// Row-wise log-softmax.
    LogSoftmax,
    /// `ln(max(x, floor))`; [`Primitive::LOG_FLOOR`] unless a caller opts
    /// into its own clamp.
    Log { floor: f64 },
    /// `ln(max(1 - x, floor))`, evaluated as `ln_1p(-x)` when unclamped.
    Log1m { floor: f64 },
    /// `ln(max(1 - exp(x), floor))`: maps a log-complement back to the log of
    /// the probability it complements.
    Log1mExp { floor: f64 },
    /// Sum of all elements into a zero-dimensional array.
    Sum,
    /// Column sums, `n x c -> 1 x c`.
    SumRows,
    /// Column maxima, `n x c -> 1 x c`. Gradient goes to the first maximal row.
    MaxRows,
    /// Stacks matrices along the frame axis.
    ConcatRows,
    /// Stacks matrices along the feature axis.
    ConcatCols,
    SliceRows { start: usize, end: usize },
    SliceCols { start: usize, end: usize },
    /// Zero-padded sliding window over frames: row `t` of the output is the
    /// concatenation of input rows `t - (width-1)/2 ..= t + width/2`.
    Unfold { width: usize },
    /// Non-overlapping max over groups of `factor` consecutive frames.
    MaxPoolRows { factor: usize },
    /// CTC negative log-likelihood of `labels` given per-frame log
    /// probabilities, `T x K -> scalar`.
    CtcNll { labels: Vec<usize>, blank: usize },
}

/// Values kept from the forward pass for the backward pass.
#[derive(Debug, Clone)]
pub enum Cache<T> {
    None,
    Indices(Vec<usize>),
    Grad(DenseArray<T>),
}

fn matrix<'a, T: Scalar>(op: &'static str, a: &'a DenseArray<T>) -> Result<(usize, usize)> {
    if a.shape().len() != 2 {
        return Err(Error::shape(op, format!("expected a matrix, got {:?}", a.shape())));
    }
    Ok((a.rows(), a.cols()))
}

fn same_shape<T: Scalar>(op: &'static str, a: &DenseArray<T>, b: &DenseArray<T>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::shape(op, format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    Ok(())
}

fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

fn matmul<T: Scalar>(a: &[T], b: &[T], n: usize, k: usize, m: usize) -> Vec<T> {
    let mut out = vec![T::zero(); n * m];
    for i in 0..n {
        let row = &mut out[i * m..(i + 1) * m];
        for p in 0..k {
            let av = a[i * k + p];
            if av == T::zero() {
                continue;
            }
            for (o, &bv) in row.iter_mut().zip(&b[p * m..(p + 1) * m]) {
                *o += av * bv;
            }
        }
    }
    out
}

fn transpose<T: Scalar>(a: &[T], n: usize, m: usize) -> Vec<T> {
    let mut out = vec![T::zero(); n * m];
    for i in 0..n {
        for j in 0..m {
            out[j * n + i] = a[i * m + j];
        }
    }
    out
}

fn mat<T: Scalar>(rows: usize, cols: usize, data: Vec<T>) -> DenseArray<T> {
    DenseArray::new(vec![rows, cols], data).expect("internal shape bookkeeping")
}

impl Primitive {
    /// Default clamp applied to logarithm inputs.
    pub const LOG_FLOOR: f64 = 1e-300;

    pub fn name(&self) -> &'static str {
        match self {
            Primitive::MatMul => "matmul",
            Primitive::Affine => "affine",
            Primitive::Add => "add",
            Primitive::Sub => "sub",
            Primitive::Mul => "mul",
            Primitive::Scale(_) => "scale",
            Primitive::Sigmoid => "sigmoid",
            Primitive::Tanh => "tanh",
            Primitive::Relu => "relu",
            Primitive::Softmax => "softmax",
            Primitive::LogSoftmax => "log_softmax",
            Primitive::Log { .. } => "log",
            Primitive::Log1m { .. } => "log1m",
            Primitive::Log1mExp { .. } => "log1m_exp",
            Primitive::Sum => "sum",
            Primitive::SumRows => "sum_rows",
            Primitive::MaxRows => "max_rows",
            Primitive::ConcatRows => "concat_rows",
            Primitive::ConcatCols => "concat_cols",
            Primitive::SliceRows { .. } => "slice_rows",
            Primitive::SliceCols { .. } => "slice_cols",
            Primitive::Unfold { .. } => "unfold",
            Primitive::MaxPoolRows { .. } => "max_pool_rows",
            Primitive::CtcNll { .. } => "ctc_nll",
        }
    }

    fn arity(&self) -> Option<usize> {
        match self {
            Primitive::ConcatRows | Primitive::ConcatCols => None,
            Primitive::Affine => Some(3),
            Primitive::MatMul | Primitive::Add | Primitive::Sub | Primitive::Mul => Some(2),
            _ => Some(1),
        }
    }

    /// Evaluates the primitive. The returned cache is what [`Primitive::vjp`]
    /// needs besides the inputs and the output.
    pub fn forward<T: Scalar>(&self, inputs: &[&DenseArray<T>]) -> Result<(DenseArray<T>, Cache<T>)> {
        let op = self.name();
        match self.arity() {
            Some(n) if inputs.len() != n => {
                return Err(Error::shape(op, format!("expected {} inputs, got {}", n, inputs.len())))
            }
            None if inputs.is_empty() => return Err(Error::shape(op, "no inputs")),
            _ => {}
        }
        let out = match self {
            Primitive::MatMul => {
                let (n, k) = matrix(op, inputs[0])?;
                let (k2, m) = matrix(op, inputs[1])?;
                if k != k2 {
                    return Err(Error::shape(op, format!("{}x{} . {}x{}", n, k, k2, m)));
                }
                (mat(n, m, matmul(inputs[0].data(), inputs[1].data(), n, k, m)), Cache::None)
            }
            Primitive::Affine => {
                let (n, i) = matrix(op, inputs[0])?;
                let (i2, o) = matrix(op, inputs[1])?;
                let (b1, o2) = matrix(op, inputs[2])?;
                if i != i2 || b1 != 1 || o != o2 {
                    return Err(Error::shape(
                        op,
                        format!("x {}x{}, w {}x{}, b {}x{}", n, i, i2, o, b1, o2),
                    ));
                }
                let mut data = matmul(inputs[0].data(), inputs[1].data(), n, i, o);
                for row in data.chunks_mut(o.max(1)) {
                    for (v, &b) in row.iter_mut().zip(inputs[2].data()) {
                        *v += b;
                    }
                }
                (mat(n, o, data), Cache::None)
            }
            Primitive::Add | Primitive::Sub | Primitive::Mul => {
                same_shape(op, inputs[0], inputs[1])?;
                let f = match self {
                    Primitive::Add => |a: T, b: T| a + b,
                    Primitive::Sub => |a: T, b: T| a - b,
                    _ => |a: T, b: T| a * b,
                };
                (inputs[0].zip_map(inputs[1], f)?, Cache::None)
            }
            Primitive::Scale(c) => {
                let c = T::lit(*c);
                (inputs[0].map(|v| v * c), Cache::None)
            }
            Primitive::Sigmoid => (inputs[0].map(sigmoid), Cache::None),
            Primitive::Tanh => (inputs[0].map(|v| v.tanh()), Cache::None),
            Primitive::Relu => (inputs[0].map(|v| v.max(T::zero())), Cache::None),
            Primitive::Softmax | Primitive::LogSoftmax => {
                let (n, c) = matrix(op, inputs[0])?;
                if c == 0 {
                    return Err(Error::shape(op, "zero columns"));
                }
                let mut data = Vec::with_capacity(n * c);
                for r in 0..n {
                    let row = inputs[0].row_slice(r);
                    let m = row.iter().copied().fold(T::neg_infinity(), T::max);
                    let z: T = row.iter().map(|&v| (v - m).exp()).sum();
                    if matches!(self, Primitive::Softmax) {
                        data.extend(row.iter().map(|&v| (v - m).exp() / z));
                    } else {
                        let lse = m + z.ln();
                        data.extend(row.iter().map(|&v| v - lse));
                    }
                }
                (mat(n, c, data), Cache::None)
            }
            Primitive::Log { floor } => {
                let floor = T::clamp_floor(*floor);
                (inputs[0].map(|v| v.max(floor).ln()), Cache::None)
            }
            Primitive::Log1m { floor } => {
                let floor = T::clamp_floor(*floor);
                (
                    inputs[0].map(|v| {
                        if T::one() - v >= floor {
                            (-v).ln_1p()
                        } else {
                            floor.ln()
                        }
                    }),
                    Cache::None,
                )
            }
            Primitive::Log1mExp { floor } => {
                let floor = T::clamp_floor(*floor);
                (
                    inputs[0].map(|v| {
                        let p = -v.exp_m1();
                        p.max(floor).ln()
                    }),
                    Cache::None,
                )
            }
            Primitive::Sum => (DenseArray::scalar(inputs[0].sum()), Cache::None),
            Primitive::SumRows => {
                let (n, c) = matrix(op, inputs[0])?;
                let mut out = vec![T::zero(); c];
                for r in 0..n {
                    for (o, &v) in out.iter_mut().zip(inputs[0].row_slice(r)) {
                        *o += v;
                    }
                }
                (mat(1, c, out), Cache::None)
            }
            Primitive::MaxRows => {
                let (n, c) = matrix(op, inputs[0])?;
                if n == 0 {
                    return Err(Error::EmptyBag);
                }
                let mut idx = vec![0usize; c];
                let mut out = inputs[0].row_slice(0).to_vec();
                for r in 1..n {
                    for (j, &v) in inputs[0].row_slice(r).iter().enumerate() {
                        if v > out[j] {
                            out[j] = v;
                            idx[j] = r;
                        }
                    }
                }
                (mat(1, c, out), Cache::Indices(idx))
            }
            Primitive::ConcatRows => {
                let (_, c) = matrix(op, inputs[0])?;
                let mut rows = 0;
                let mut data = Vec::new();
                for a in inputs {
                    let (r, c2) = matrix(op, a)?;
                    if c2 != c {
                        return Err(Error::shape(op, format!("column counts {} vs {}", c, c2)));
                    }
                    rows += r;
                    data.extend_from_slice(a.data());
                }
                (mat(rows, c, data), Cache::None)
            }
            Primitive::ConcatCols => {
                let (n, _) = matrix(op, inputs[0])?;
                let mut widths = Vec::with_capacity(inputs.len());
                for a in inputs {
                    let (r, c) = matrix(op, a)?;
                    if r != n {
                        return Err(Error::shape(op, format!("row counts {} vs {}", n, r)));
                    }
                    widths.push(c);
                }
                let total: usize = widths.iter().sum();
                let mut data = Vec::with_capacity(n * total);
                for r in 0..n {
                    for a in inputs {
                        data.extend_from_slice(a.row_slice(r));
                    }
                }
                (mat(n, total, data), Cache::None)
            }
            Primitive::SliceRows { start, end } => {
                let (n, c) = matrix(op, inputs[0])?;
                if start > end || *end > n {
                    return Err(Error::shape(op, format!("rows {}..{} of {}", start, end, n)));
                }
                let data = inputs[0].data()[start * c..end * c].to_vec();
                (mat(end - start, c, data), Cache::None)
            }
            Primitive::SliceCols { start, end } => {
                let (n, c) = matrix(op, inputs[0])?;
                if start > end || *end > c {
                    return Err(Error::shape(op, format!("cols {}..{} of {}", start, end, c)));
                }
                let mut data = Vec::with_capacity(n * (end - start));
                for r in 0..n {
                    data.extend_from_slice(&inputs[0].row_slice(r)[*start..*end]);
                }
                (mat(n, end - start, data), Cache::None)
            }
            Primitive::Unfold { width } => {
                let (n, c) = matrix(op, inputs[0])?;
                if *width == 0 {
                    return Err(Error::shape(op, "zero window width"));
                }
                let left = (width - 1) / 2;
                let mut data = vec![T::zero(); n * width * c];
                for t in 0..n {
                    for j in 0..*width {
                        let src = t + j;
                        if src < left || src - left >= n {
                            continue;
                        }
                        let dst = t * width * c + j * c;
                        data[dst..dst + c].copy_from_slice(inputs[0].row_slice(src - left));
                    }
                }
                (mat(n, width * c, data), Cache::None)
            }
            Primitive::MaxPoolRows { factor } => {
                let (n, c) = matrix(op, inputs[0])?;
                if *factor == 0 || n % factor != 0 {
                    return Err(Error::shape(op, format!("{} rows not divisible by {}", n, factor)));
                }
                let m = n / factor;
                let mut out = Vec::with_capacity(m * c);
                let mut idx = Vec::with_capacity(m * c);
                for g in 0..m {
                    for j in 0..c {
                        let mut best = g * factor;
                        for r in g * factor + 1..(g + 1) * factor {
                            if inputs[0].get(r, j) > inputs[0].get(best, j) {
                                best = r;
                            }
                        }
                        out.push(inputs[0].get(best, j));
                        idx.push(best);
                    }
                }
                (mat(m, c, out), Cache::Indices(idx))
            }
            Primitive::CtcNll { labels, blank } => {
                let res = ctc::forward_backward(inputs[0], labels, *blank)?;
                (DenseArray::scalar(res.nll), Cache::Grad(res.grad))
            }
        };
        Ok(out)
    }

    /// Vector-Jacobian product: gradients with respect to each input given
    /// the gradient `grad` of the output.
    pub fn vjp<T: Scalar>(
        &self,
        inputs: &[&DenseArray<T>],
        output: &DenseArray<T>,
        cache: &Cache<T>,
        grad: &DenseArray<T>,
    ) -> Vec<DenseArray<T>> {
        let g = grad.data();
        match self {
            Primitive::MatMul => {
                let (n, k) = (inputs[0].rows(), inputs[0].cols());
                let m = inputs[1].cols();
                let bt = transpose(inputs[1].data(), k, m);
                let at = transpose(inputs[0].data(), n, k);
                vec![mat(n, k, matmul(g, &bt, n, m, k)), mat(k, m, matmul(&at, g, k, n, m))]
            }
            Primitive::Affine => {
                let (n, i) = (inputs[0].rows(), inputs[0].cols());
                let o = inputs[1].cols();
                let wt = transpose(inputs[1].data(), i, o);
                let xt = transpose(inputs[0].data(), n, i);
                let mut gb = vec![T::zero(); o];
                for row in g.chunks(o.max(1)) {
                    for (b, &v) in gb.iter_mut().zip(row) {
                        *b += v;
                    }
                }
                vec![
                    mat(n, i, matmul(g, &wt, n, o, i)),
                    mat(i, o, matmul(&xt, g, i, n, o)),
                    mat(1, o, gb),
                ]
            }
            Primitive::Add => vec![grad.clone(), grad.clone()],
            Primitive::Sub => vec![grad.clone(), grad.map(|v| -v)],
            Primitive::Mul => vec![
                grad.zip_map(inputs[1], |a, b| a * b).expect("shape"),
                grad.zip_map(inputs[0], |a, b| a * b).expect("shape"),
            ],
            Primitive::Scale(c) => {
                let c = T::lit(*c);
                vec![grad.map(|v| v * c)]
            }
            Primitive::Sigmoid => {
                vec![grad.zip_map(output, |gv, y| gv * y * (T::one() - y)).expect("shape")]
            }
            Primitive::Tanh => vec![grad.zip_map(output, |gv, y| gv * (T::one() - y * y)).expect("shape")],
            Primitive::Relu => vec![grad
                .zip_map(inputs[0], |gv, x| if x > T::zero() { gv } else { T::zero() })
                .expect("shape")],
            Primitive::Softmax => {
                let (n, c) = (output.rows(), output.cols());
                let mut out = Vec::with_capacity(n * c);
                for r in 0..n {
                    let y = output.row_slice(r);
                    let gr = &g[r * c..(r + 1) * c];
                    let dot: T = y.iter().zip(gr).map(|(&a, &b)| a * b).sum();
                    out.extend(y.iter().zip(gr).map(|(&yv, &gv)| yv * (gv - dot)));
                }
                vec![mat(n, c, out)]
            }
            Primitive::LogSoftmax => {
                let (n, c) = (output.rows(), output.cols());
                let mut out = Vec::with_capacity(n * c);
                for r in 0..n {
                    let y = output.row_slice(r);
                    let gr = &g[r * c..(r + 1) * c];
                    let total: T = gr.iter().copied().sum();
                    out.extend(y.iter().zip(gr).map(|(&ly, &gv)| gv - ly.exp() * total));
                }
                vec![mat(n, c, out)]
            }
            Primitive::Log { floor } => {
                let floor = T::clamp_floor(*floor);
                vec![grad
                    .zip_map(inputs[0], |gv, x| if x >= floor { gv / x } else { T::zero() })
                    .expect("shape")]
            }
            Primitive::Log1m { floor } => {
                let floor = T::clamp_floor(*floor);
                vec![grad
                    .zip_map(inputs[0], |gv, x| {
                        let c = T::one() - x;
                        if c >= floor {
                            -gv / c
                        } else {
                            T::zero()
                        }
                    })
                    .expect("shape")]
            }
            Primitive::Log1mExp { floor } => {
                let floor = T::clamp_floor(*floor);
                vec![grad
                    .zip_map(inputs[0], |gv, x| {
                        let p = -x.exp_m1();
                        if p >= floor {
                            -gv * x.exp() / p
                        } else {
                            T::zero()
                        }
                    })
                    .expect("shape")]
            }
            Primitive::Sum => vec![DenseArray::full(inputs[0].shape(), g[0])],
            Primitive::SumRows => {
                let n = inputs[0].rows();
                let data = (0..n).flat_map(|_| g.iter().copied()).collect();
                vec![mat(n, inputs[0].cols(), data)]
            }
            Primitive::MaxRows => {
                let Cache::Indices(idx) = cache else { unreachable!("max_rows cache") };
                let c = inputs[0].cols();
                let mut out = DenseArray::zeros(inputs[0].shape());
                for (j, &r) in idx.iter().enumerate() {
                    out.data_mut()[r * c + j] += g[j];
                }
                vec![out]
            }
            Primitive::ConcatRows => {
                let mut offset = 0;
                inputs
                    .iter()
                    .map(|a| {
                        let len = a.len();
                        let part = mat(a.rows(), a.cols(), g[offset..offset + len].to_vec());
                        offset += len;
                        part
                    })
                    .collect()
            }
            Primitive::ConcatCols => {
                let n = output.rows();
                let total = output.cols();
                let mut start = 0;
                inputs
                    .iter()
                    .map(|a| {
                        let c = a.cols();
                        let mut data = Vec::with_capacity(n * c);
                        for r in 0..n {
                            data.extend_from_slice(&g[r * total + start..r * total + start + c]);
                        }
                        start += c;
                        mat(n, c, data)
                    })
                    .collect()
            }
            Primitive::SliceRows { start, .. } => {
                let c = inputs[0].cols();
                let mut out = DenseArray::zeros(inputs[0].shape());
                out.data_mut()[start * c..start * c + g.len()].copy_from_slice(g);
                vec![out]
            }
            Primitive::SliceCols { start, end } => {
                let (n, c) = (inputs[0].rows(), inputs[0].cols());
                let w = end - start;
                let mut out = DenseArray::zeros(inputs[0].shape());
                for r in 0..n {
                    out.data_mut()[r * c + start..r * c + end].copy_from_slice(&g[r * w..(r + 1) * w]);
                }
                vec![out]
            }
            Primitive::Unfold { width } => {
                let (n, c) = (inputs[0].rows(), inputs[0].cols());
                let left = (width - 1) / 2;
                let mut out = DenseArray::zeros(inputs[0].shape());
                let data = out.data_mut();
                for t in 0..n {
                    for j in 0..*width {
                        let src = t + j;
                        if src < left || src - left >= n {
                            continue;
                        }
                        let from = t * width * c + j * c;
                        let to = (src - left) * c;
                        for k in 0..c {
                            data[to + k] += g[from + k];
                        }
                    }
                }
                vec![out]
            }
            Primitive::MaxPoolRows { .. } => {
                let Cache::Indices(idx) = cache else { unreachable!("max_pool cache") };
                let c = inputs[0].cols();
                let mut out = DenseArray::zeros(inputs[0].shape());
                for (pos, &r) in idx.iter().enumerate() {
                    let j = pos % c;
                    out.data_mut()[r * c + j] += g[pos];
                }
                vec![out]
            }
            Primitive::CtcNll { .. } => {
                let Cache::Grad(dnll) = cache else { unreachable!("ctc cache") };
                vec![dnll.map(|v| v * g[0])]
            }
        }
    }
}
