//! Central finite-difference gradient checking.
//!
//! Only forward evaluations of the function are used, so the numerical
//! gradient is independent of any backward rule it is compared with.

use crate::error::Result;

use super::{DenseArray, Gradients, ParamSet};

/// Step used by the gradient checks in this crate.
pub const STEP: f64 = 1e-4;

/// Norm-wise relative error `|a - b| / max(|a|, |b|, 1e-8)`.
pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let norm = |v: &mut dyn Iterator<Item = f64>| v.map(|x| x * x).sum::<f64>().sqrt();
    let diff = norm(&mut analytic.iter().zip(numeric).map(|(a, b)| a - b));
    let scale = norm(&mut analytic.iter().copied())
        .max(norm(&mut numeric.iter().copied()))
        .max(1e-8);
    diff / scale
}

/// Numerical gradient of `f` at `x` by central differences.
pub fn numeric_gradient(
    x: &DenseArray<f64>,
    step: f64,
    mut f: impl FnMut(&DenseArray<f64>) -> Result<f64>,
) -> Result<DenseArray<f64>> {
    let mut grad = Vec::with_capacity(x.len());
    let mut probe = x.clone();
    for i in 0..x.len() {
        let orig = x.data()[i];
        probe.data_mut()[i] = orig + step;
        let hi = f(&probe)?;
        probe.data_mut()[i] = orig - step;
        let lo = f(&probe)?;
        probe.data_mut()[i] = orig;
        grad.push((hi - lo) / (2.0 * step));
    }
    DenseArray::new(x.shape().to_vec(), grad)
}

/// Numerical gradient of `loss` with respect to every parameter array.
pub fn numeric_param_gradients(
    params: &ParamSet<f64>,
    step: f64,
    mut loss: impl FnMut(&ParamSet<f64>) -> Result<f64>,
) -> Result<Gradients<f64>> {
    let mut out = ParamSet::new();
    let names: Vec<String> = params.names().cloned().collect();
    let mut probe = params.clone();
    for name in names {
        let base = params.get(&name).expect("name from the same set").clone();
        let g = numeric_gradient(&base, step, |x| {
            *probe.get_mut(&name).expect("same layout") = x.clone();
            loss(&probe)
        })?;
        *probe.get_mut(&name).expect("same layout") = base;
        out.insert(name, g);
    }
    Ok(out)
}

/// Worst per-array relative error between two gradient sets.
pub fn max_relative_error(analytic: &Gradients<f64>, numeric: &Gradients<f64>) -> f64 {
    analytic
        .iter()
        .map(|(name, a)| match numeric.get(name) {
            Some(n) => relative_error(a.data(), n.data()),
            None => f64::INFINITY,
        })
        .fold(0.0, f64::max)
}
