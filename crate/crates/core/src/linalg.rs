//! Linear-algebra kernels behind every CCA computation.
//!
//! Symmetric eigenproblems go through Householder tridiagonalization
//! followed by implicit QL (the classic EISPACK `tred2`/`tql2` pair), which
//! keeps the cost at O(n^3) with a small constant so Gram matrices of a few
//! thousand samples stay tractable. General SVD uses one-sided Jacobi
//! rotations, which give high relative accuracy on the small whitened
//! matrices the losses work with.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Relative floor applied to eigenvalues / singular values before inversion.
pub const SPECTRAL_FLOOR: f64 = 1e-12;

const SYMMETRY_TOL: f64 = 1e-10;
const QL_MAX_ITER: usize = 64;
const JACOBI_MAX_SWEEPS: usize = 80;

#[derive(Debug, Clone)]
pub struct SvdResult {
    /// m x k, column-orthonormal.
    pub u: Tensor,
    /// k singular values, descending.
    pub s: Vec<f64>,
    /// n x k, column-orthonormal.
    pub v: Tensor,
}

impl SvdResult {
    pub fn reconstruct(&self) -> Tensor {
        let mut us = self.u.clone();
        let k = self.s.len();
        for i in 0..us.rows() {
            for j in 0..k {
                let v = us.at(i, j) * self.s[j];
                us.set(i, j, v);
            }
        }
        us.matmul(&self.v.transpose())
    }
}

#[derive(Debug, Clone)]
pub struct EigSym {
    /// Descending.
    pub values: Vec<f64>,
    /// Eigenvectors as columns, matching `values`.
    pub vectors: Tensor,
}

impl EigSym {
    /// V diag(f(lambda)) V^T.
    pub fn apply_spectral(&self, f: impl Fn(f64) -> f64) -> Tensor {
        let n = self.values.len();
        let scaled: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let mut out = Tensor::zeros(&[n, n]);
        let v = &self.vectors;
        for i in 0..n {
            for j in i..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += v.at(i, k) * scaled[k] * v.at(j, k);
                }
                out.set(i, j, acc);
                out.set(j, i, acc);
            }
        }
        out
    }
}

fn check_finite(m: &Tensor, what: &str) -> Result<()> {
    if m.is_finite() {
        Ok(())
    } else {
        Err(Error::contract(format!("{what}: input contains non-finite values")))
    }
}

fn check_square(m: &Tensor, what: &str) -> Result<usize> {
    if m.rank() != 2 || m.rows() != m.cols() {
        return Err(Error::contract(format!(
            "{what}: expected a square matrix, got shape {:?}",
            m.shape()
        )));
    }
    Ok(m.rows())
}

/// Eigendecomposition of a symmetric matrix, eigenvalues descending.
pub fn eig_sym(m: &Tensor) -> Result<EigSym> {
    let n = check_square(m, "eig_sym")?;
    check_finite(m, "eig_sym")?;
    let scale = m.data().iter().fold(1.0f64, |a, v| a.max(v.abs()));
    for i in 0..n {
        for j in (i + 1)..n {
            if (m.at(i, j) - m.at(j, i)).abs() > SYMMETRY_TOL * scale {
                return Err(Error::contract(format!(
                    "eig_sym: matrix is not symmetric at ({i},{j}): {} vs {}",
                    m.at(i, j),
                    m.at(j, i)
                )));
            }
        }
    }
    if n == 0 {
        return Ok(EigSym {
            values: vec![],
            vectors: Tensor::zeros(&[0, 0]),
        });
    }

    let mut v: Vec<f64> = m.symmetrize().into_data();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(n, &mut v, &mut d, &mut e);
    tql2(n, &mut v, &mut d, &mut e)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[b].total_cmp(&d[a]));
    let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let mut vectors = Tensor::zeros(&[n, n]);
    for (new_j, &old_j) in order.iter().enumerate() {
        for i in 0..n {
            vectors.set(i, new_j, v[i * n + old_j]);
        }
    }
    Ok(EigSym { values, vectors })
}

// Householder reduction to tridiagonal form; `v` is row-major n x n and
// ends up holding the accumulated orthogonal transform.
fn tred2(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64]) {
    let idx = |i: usize, j: usize| i * n + j;
    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = 0.0;
                v[idx(j, i)] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[idx(j, i)] = f;
                g = e[j] + v[idx(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[idx(k, j)] * d[k];
                    e[k] += v[idx(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[idx(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }

    for i in 0..(n - 1) {
        v[idx(n - 1, i)] = v[idx(i, i)];
        v[idx(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[idx(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[idx(k, i + 1)] * v[idx(k, j)];
                }
                for k in 0..=i {
                    v[idx(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[idx(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
        v[idx(n - 1, j)] = 0.0;
    }
    v[idx(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

// Implicit QL iteration on the tridiagonal (d, e).
fn tql2(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let idx = |i: usize, j: usize| i * n + j;
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > QL_MAX_ITER {
                    return Err(Error::Numerical(format!(
                        "eig_sym: QL iteration did not converge for eigenvalue {l}"
                    )));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        h = v[idx(k, i + 1)];
                        v[idx(k, i + 1)] = s * v[idx(k, i)] + c * h;
                        v[idx(k, i)] = c * v[idx(k, i)] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Thin SVD by one-sided Jacobi rotations.
pub fn svd(m: &Tensor) -> Result<SvdResult> {
    if m.rank() != 2 {
        return Err(Error::contract(format!(
            "svd: expected a matrix, got shape {:?}",
            m.shape()
        )));
    }
    check_finite(m, "svd")?;
    if m.rows() < m.cols() {
        let t = svd(&m.transpose())?;
        return Ok(SvdResult {
            u: t.v,
            s: t.s,
            v: t.u,
        });
    }
    let (rows, cols) = (m.rows(), m.cols());
    if cols == 0 {
        return Ok(SvdResult {
            u: Tensor::zeros(&[rows, 0]),
            s: vec![],
            v: Tensor::zeros(&[0, 0]),
        });
    }

    // column-major working copies
    let mut a: Vec<Vec<f64>> = (0..cols).map(|j| m.col(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..cols)
        .map(|j| {
            let mut c = vec![0.0; cols];
            c[j] = 1.0;
            c
        })
        .collect();
    let tol = 2.0 * f64::EPSILON * (rows as f64).sqrt().max(1.0);

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols.saturating_sub(1) {
            for q in (p + 1)..cols {
                let (alpha, beta, gamma) = {
                    let (ap, aq) = (&a[p], &a[q]);
                    let mut al = 0.0;
                    let mut be = 0.0;
                    let mut ga = 0.0;
                    for i in 0..rows {
                        al += ap[i] * ap[i];
                        be += aq[i] * aq[i];
                        ga += ap[i] * aq[i];
                    }
                    (al, be, ga)
                };
                if alpha == 0.0 || beta == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut a, p, q, c, s);
                rotate_pair(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numerical(format!(
            "svd: Jacobi sweeps did not converge within {JACOBI_MAX_SWEEPS} sweeps"
        )));
    }

    let norms: Vec<f64> = a.iter().map(|c| crate::tensor::norm(c)).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let s: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let smax = s.first().copied().unwrap_or(0.0);

    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(cols);
    let mut missing = Vec::new();
    for (k, &j) in order.iter().enumerate() {
        if s[k] > smax * f64::EPSILON * rows as f64 && s[k] > 0.0 {
            u_cols.push(a[j].iter().map(|x| x / s[k]).collect());
        } else {
            missing.push(k);
            u_cols.push(vec![0.0; rows]);
        }
    }
    complete_orthonormal(&mut u_cols, &missing);

    let mut u = Tensor::zeros(&[rows, cols]);
    let mut vt = Tensor::zeros(&[cols, cols]);
    for (k, &j) in order.iter().enumerate() {
        for i in 0..rows {
            u.set(i, k, u_cols[k][i]);
        }
        for i in 0..cols {
            vt.set(i, k, v[j][i]);
        }
    }
    Ok(SvdResult { u, s, v: vt })
}

fn rotate_pair(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    let (cp, cq) = (&mut lo[p], &mut hi[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

// Fills the listed slots with unit vectors orthogonal to every other column.
fn complete_orthonormal(cols: &mut [Vec<f64>], missing: &[usize]) {
    if missing.is_empty() {
        return;
    }
    let rows = cols[0].len();
    let mut candidate = 0;
    for &slot in missing {
        while candidate < rows {
            let mut w = vec![0.0; rows];
            w[candidate] = 1.0;
            candidate += 1;
            for _ in 0..2 {
                for (k, c) in cols.iter().enumerate() {
                    if k == slot || (missing.contains(&k) && c.iter().all(|x| *x == 0.0)) {
                        continue;
                    }
                    let proj = crate::tensor::dot(&w, c);
                    for (wi, ci) in w.iter_mut().zip(c) {
                        *wi -= proj * ci;
                    }
                }
            }
            let nw = crate::tensor::norm(&w);
            if nw > 0.5 {
                cols[slot] = w.iter().map(|x| x / nw).collect();
                break;
            }
        }
    }
}

/// (m + eps I)^{-1/2} through the eigendecomposition of the shifted matrix.
pub fn inv_sqrt_sym(m: &Tensor, eps: f64) -> Result<Tensor> {
    inv_sqrt_sym_floored(m, eps, SPECTRAL_FLOOR)
}

/// As [`inv_sqrt_sym`], clamping eigenvalues below `rel_floor * largest`.
pub fn inv_sqrt_sym_floored(m: &Tensor, eps: f64, rel_floor: f64) -> Result<Tensor> {
    if eps < 0.0 {
        return Err(Error::contract("inv_sqrt_sym: ridge must be >= 0"));
    }
    let eig = eig_sym(&shift_diag(m, eps)?)?;
    let floor = spectral_floor(&eig.values)? / SPECTRAL_FLOOR * rel_floor;
    Ok(eig.apply_spectral(|l| 1.0 / l.max(floor).sqrt()))
}

/// (m + eps I)^{-1} for symmetric positive definite m + eps I.
pub fn inv_sym(m: &Tensor, eps: f64) -> Result<Tensor> {
    let eig = eig_sym(&shift_diag(m, eps)?)?;
    let floor = spectral_floor(&eig.values)?;
    Ok(eig.apply_spectral(|l| 1.0 / l.max(floor)))
}

fn shift_diag(m: &Tensor, eps: f64) -> Result<Tensor> {
    let n = check_square(m, "shift_diag")?;
    let mut shifted = m.clone();
    for i in 0..n {
        let v = shifted.at(i, i) + eps;
        shifted.set(i, i, v);
    }
    Ok(shifted)
}

// Rejects non-positive spectra and returns the clamp floor otherwise.
fn spectral_floor(values: &[f64]) -> Result<f64> {
    let (Some(&max), Some(&min)) = (values.first(), values.last()) else {
        return Ok(0.0);
    };
    if min <= 0.0 {
        return Err(Error::Singular { eigenvalue: min });
    }
    Ok(SPECTRAL_FLOOR * max)
}

/// Sample cross-covariance of `x` (n x m) and `y` (p x m), samples in columns.
pub fn covariance(x: &Tensor, y: &Tensor, center: bool) -> Result<Tensor> {
    if x.rank() != 2 || y.rank() != 2 || x.cols() != y.cols() {
        return Err(Error::contract(format!(
            "covariance: sample counts differ ({:?} vs {:?})",
            x.shape(),
            y.shape()
        )));
    }
    let m = x.cols();
    if m < 2 {
        return Err(Error::DegenerateSample { count: m });
    }
    let (xc, yc) = if center {
        (x.center_rows().0, y.center_rows().0)
    } else {
        (x.clone(), y.clone())
    };
    Ok(xc.matmul(&yc.transpose()).scale(1.0 / (m as f64 - 1.0)))
}

/// Sum of singular values.
pub fn trace_norm(m: &Tensor) -> Result<f64> {
    Ok(svd(m)?.s.iter().sum())
}
