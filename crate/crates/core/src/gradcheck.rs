//! Central finite differences, the independent oracle for every analytic
//! gradient in the crate.

use crate::error::Result;
use crate::nn::ParamSet;
use crate::tensor::Tensor;

pub const DEFAULT_STEP: f64 = 1e-5;

/// d f / d x by (f(x + h e_i) - f(x - h e_i)) / 2h for every entry of `x`.
pub fn numeric_gradient(x: &Tensor, h: f64, mut f: impl FnMut(&Tensor) -> Result<f64>) -> Result<Tensor> {
    let mut probe = x.clone();
    let mut out = Tensor::zeros(x.shape());
    for i in 0..x.len() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + h;
        let up = f(&probe)?;
        probe.data_mut()[i] = orig - h;
        let down = f(&probe)?;
        probe.data_mut()[i] = orig;
        out.data_mut()[i] = (up - down) / (2.0 * h);
    }
    Ok(out)
}

/// Finite-difference gradient for every tensor in a parameter set.
pub fn numeric_param_gradient(
    params: &ParamSet,
    h: f64,
    mut f: impl FnMut(&ParamSet) -> Result<f64>,
) -> Result<Vec<Tensor>> {
    let mut probe = params.clone();
    let mut out = Vec::with_capacity(params.len());
    for k in 0..params.len() {
        let mut g = Tensor::zeros(params.tensors()[k].shape());
        for i in 0..g.len() {
            let orig = probe.tensors()[k].data()[i];
            probe.tensors_mut()[k].data_mut()[i] = orig + h;
            let up = f(&probe)?;
            probe.tensors_mut()[k].data_mut()[i] = orig - h;
            let down = f(&probe)?;
            probe.tensors_mut()[k].data_mut()[i] = orig;
            g.data_mut()[i] = (up - down) / (2.0 * h);
        }
        out.push(g);
    }
    Ok(out)
}

/// Central differences plus a per-entry kink flag: an entry is flagged when
/// its one-sided slopes disagree by more than `kink_tol` (absolute), i.e. a
/// ReLU or max-pool switch lies inside [x - h, x + h].
pub fn numeric_param_gradient_with_kinks(
    params: &ParamSet,
    h: f64,
    kink_tol: f64,
    mut f: impl FnMut(&ParamSet) -> Result<f64>,
) -> Result<(Vec<Tensor>, Vec<Vec<bool>>)> {
    let base = f(params)?;
    let mut probe = params.clone();
    let mut grads = Vec::with_capacity(params.len());
    let mut kinks = Vec::with_capacity(params.len());
    for k in 0..params.len() {
        let mut g = Tensor::zeros(params.tensors()[k].shape());
        let mut flags = vec![false; g.len()];
        for i in 0..g.len() {
            let orig = probe.tensors()[k].data()[i];
            probe.tensors_mut()[k].data_mut()[i] = orig + h;
            let up = f(&probe)?;
            probe.tensors_mut()[k].data_mut()[i] = orig - h;
            let down = f(&probe)?;
            probe.tensors_mut()[k].data_mut()[i] = orig;
            g.data_mut()[i] = (up - down) / (2.0 * h);
            flags[i] = ((up - base) / h - (base - down) / h).abs() > kink_tol;
        }
        grads.push(g);
        kinks.push(flags);
    }
    Ok((grads, kinks))
}

/// [`relative_error`] over the entries not flagged in `mask`.
pub fn relative_error_masked(a: &[Tensor], b: &[Tensor], mask: &[Vec<bool>]) -> f64 {
    let keep = |t: &[Tensor]| -> Vec<Tensor> {
        t.iter()
            .zip(mask)
            .map(|(x, m)| Tensor::vector(x.data().iter().zip(m).filter(|(_, k)| !**k).map(|(v, _)| *v).collect()))
            .collect()
    };
    relative_error(&keep(a), &keep(b))
}

/// ||a - b|| / max(||a||, ||b||) over all entries of both tensor lists.
pub fn relative_error(a: &[Tensor], b: &[Tensor]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut diff = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.iter().zip(b) {
        assert_eq!(x.shape(), y.shape());
        for (p, q) in x.data().iter().zip(y.data()) {
            diff += (p - q) * (p - q);
            na += p * p;
            nb += q * q;
        }
    }
    let scale = na.sqrt().max(nb.sqrt());
    if scale < 1e-300 {
        return 0.0;
    }
    diff.sqrt() / scale
}
