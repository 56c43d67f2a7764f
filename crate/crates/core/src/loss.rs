//! Differentiable alignment objectives on minibatch features.
//!
//! Both losses take features as `m x d` batches (one row per example) and
//! return closed-form gradients with respect to those batches; the trainer
//! seeds the autodiff graph with them.

use crate::error::{Error, Result};
use crate::linalg::{inv_sqrt_sym_floored, svd, SPECTRAL_FLOOR};
use crate::tensor::{dot, Tensor};
use serde::{Deserialize, Serialize};

/// Added to squared row norms in the cosine objective.
pub const COSINE_NORM_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CcaLossConfig {
    /// Number of leading canonical correlations summed (k).
    pub out_dim: usize,
    /// Ridge added to both view covariances.
    pub eps: f64,
    /// Relative eigenvalue floor used before whitening.
    pub floor: f64,
}

impl CcaLossConfig {
    pub fn new(out_dim: usize) -> Self {
        CcaLossConfig {
            out_dim,
            eps: 1e-4,
            floor: SPECTRAL_FLOOR,
        }
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }
}

#[derive(Debug, Clone)]
pub struct CcaLossResult {
    pub loss: f64,
    pub grad_fx: Tensor,
    pub grad_fy: Tensor,
    /// d1 x k whitened projection of the x view.
    pub proj_cx: Tensor,
    /// d2 x k whitened projection of the y view.
    pub proj_dy: Tensor,
    pub correlations: Vec<f64>,
}

struct Whitened {
    h1: Tensor,
    h2: Tensor,
    r11_isqrt: Tensor,
    r22_isqrt: Tensor,
    u: Tensor,
    v: Tensor,
    sigma: Vec<f64>,
    m: usize,
}

fn check_batch(f_x: &Tensor, f_y: &Tensor, cfg: &CcaLossConfig) -> Result<()> {
    if f_x.rank() != 2 || f_y.rank() != 2 || f_x.rows() != f_y.rows() {
        return Err(Error::contract(format!(
            "cca_loss: batches must be m x d with equal m, got {:?} and {:?}",
            f_x.shape(),
            f_y.shape()
        )));
    }
    let (m, d1, d2) = (f_x.rows(), f_x.cols(), f_y.cols());
    if !f_x.is_finite() || !f_y.is_finite() {
        return Err(Error::contract("cca_loss: non-finite features"));
    }
    if cfg.out_dim == 0 || cfg.out_dim > d1.min(d2) {
        return Err(Error::config(format!(
            "cca_loss: out_dim {} must be in 1..={}",
            cfg.out_dim,
            d1.min(d2)
        )));
    }
    if m <= d1.max(d2) {
        return Err(Error::MinibatchTooSmall {
            got: m,
            need: d1.max(d2) + 1,
        });
    }
    if cfg.eps < 0.0 {
        return Err(Error::config("cca_loss: eps must be >= 0"));
    }
    Ok(())
}

fn whiten(f_x: &Tensor, f_y: &Tensor, cfg: &CcaLossConfig) -> Result<Whitened> {
    check_batch(f_x, f_y, cfg)?;
    let m = f_x.rows();
    let scale = 1.0 / (m as f64 - 1.0);
    let (h1, _) = f_x.transpose().center_rows();
    let (h2, _) = f_y.transpose().center_rows();
    let r11 = h1.matmul(&h1.transpose()).scale(scale).symmetrize();
    let r22 = h2.matmul(&h2.transpose()).scale(scale).symmetrize();
    let r12 = h1.matmul(&h2.transpose()).scale(scale);
    let r11_isqrt = inv_sqrt_sym_floored(&r11, cfg.eps, cfg.floor)?;
    let r22_isqrt = inv_sqrt_sym_floored(&r22, cfg.eps, cfg.floor)?;
    let e = r11_isqrt.matmul(&r12).matmul(&r22_isqrt);
    let dec = svd(&e)?;
    let k = cfg.out_dim;
    Ok(Whitened {
        h1,
        h2,
        r11_isqrt,
        r22_isqrt,
        u: dec.u.leading_cols(k),
        v: dec.v.leading_cols(k),
        sigma: dec.s[..k].to_vec(),
        m,
    })
}

/// Negative sum of the top-k singular values of
/// E = R11^{-1/2} R12 R22^{-1/2}, with gradients for both batches.
///
/// Repeated singular values make U and V non-unique, but the gradient of the
/// sum does not depend on the basis chosen inside a tied block.
pub fn cca_loss(f_x: &Tensor, f_y: &Tensor, cfg: &CcaLossConfig) -> Result<CcaLossResult> {
    let w = whiten(f_x, f_y, cfg)?;
    let Whitened {
        h1,
        h2,
        r11_isqrt,
        r22_isqrt,
        u,
        v,
        sigma,
        m,
    } = w;
    let k = sigma.len();

    let d = Tensor::diag(&sigma);
    let grad12 = r11_isqrt.matmul(&u).matmul(&v.transpose()).matmul(&r22_isqrt);
    let grad11 = r11_isqrt
        .matmul(&u)
        .matmul(&d)
        .matmul(&u.transpose())
        .matmul(&r11_isqrt)
        .scale(-0.5);
    let grad22 = r22_isqrt
        .matmul(&v)
        .matmul(&d)
        .matmul(&v.transpose())
        .matmul(&r22_isqrt)
        .scale(-0.5);

    // d corr / d H1 = (2 grad11 H1 + grad12 H2) / (m - 1); the loss is -corr.
    let c = -1.0 / (m as f64 - 1.0);
    let g1 = grad11.scale(2.0).matmul(&h1).add(&grad12.matmul(&h2)).scale(c);
    let g2 = grad22
        .scale(2.0)
        .matmul(&h2)
        .add(&grad12.transpose().matmul(&h1))
        .scale(c);

    let loss = -sigma.iter().sum::<f64>();
    debug_assert!(loss <= 0.0 && loss >= -(k as f64) - 1e-6);
    Ok(CcaLossResult {
        loss,
        grad_fx: g1.transpose(),
        grad_fy: g2.transpose(),
        proj_cx: r11_isqrt.matmul(&u),
        proj_dy: r22_isqrt.matmul(&v),
        correlations: sigma,
    })
}

/// Top-k canonical correlations of two batches, without gradients.
pub fn canonical_correlations(f_x: &Tensor, f_y: &Tensor, cfg: &CcaLossConfig) -> Result<Vec<f64>> {
    Ok(whiten(f_x, f_y, cfg)?.sigma)
}

#[derive(Debug, Clone)]
pub struct CosineLossResult {
    pub loss: f64,
    pub grad_fx: Tensor,
    pub grad_fy: Tensor,
}

fn check_pair(f_x: &Tensor, f_y: &Tensor) -> Result<()> {
    if f_x.rank() != 2 || f_x.shape() != f_y.shape() || f_x.rows() == 0 {
        return Err(Error::contract(format!(
            "cosine_loss: batches must share a non-empty m x d shape, got {:?} and {:?}",
            f_x.shape(),
            f_y.shape()
        )));
    }
    Ok(())
}

/// 1 - mean_i cos(x_i, y_i), norms guarded by [`COSINE_NORM_GUARD`].
pub fn cosine_loss(f_x: &Tensor, f_y: &Tensor) -> Result<CosineLossResult> {
    check_pair(f_x, f_y)?;
    let (m, d) = (f_x.rows(), f_x.cols());
    let mut gx = Tensor::zeros(&[m, d]);
    let mut gy = Tensor::zeros(&[m, d]);
    let mut total = 0.0;
    let scale = -1.0 / m as f64;
    for i in 0..m {
        let (x, y) = (f_x.row(i), f_y.row(i));
        let nx = (dot(x, x) + COSINE_NORM_GUARD).sqrt();
        let ny = (dot(y, y) + COSINE_NORM_GUARD).sqrt();
        let xy = dot(x, y);
        let cos = xy / (nx * ny);
        total += cos;
        for j in 0..d {
            gx.set(i, j, scale * (y[j] / (nx * ny) - cos * x[j] / (nx * nx)));
            gy.set(i, j, scale * (x[j] / (nx * ny) - cos * y[j] / (ny * ny)));
        }
    }
    Ok(CosineLossResult {
        loss: 1.0 - total / m as f64,
        grad_fx: gx,
        grad_fy: gy,
    })
}

/// Batch mean of row-wise cosine similarity.
pub fn mean_cosine(f_x: &Tensor, f_y: &Tensor) -> Result<f64> {
    Ok(1.0 - cosine_loss(f_x, f_y)?.loss)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Alignment {
    pub mean_canonical_correlation: f64,
    pub mean_cosine_similarity: f64,
}

/// Mean top-k canonical correlation and mean cosine similarity.
pub fn measure_alignment(f_x: &Tensor, f_y: &Tensor, cfg: &CcaLossConfig) -> Result<Alignment> {
    let corr = canonical_correlations(f_x, f_y, cfg)?;
    let cosine = if f_x.shape() == f_y.shape() {
        mean_cosine(f_x, f_y)?
    } else {
        return Err(Error::contract(
            "measure_alignment: cosine similarity needs equal feature widths",
        ));
    };
    Ok(Alignment {
        mean_canonical_correlation: corr.iter().sum::<f64>() / corr.len() as f64,
        mean_cosine_similarity: cosine,
    })
}
