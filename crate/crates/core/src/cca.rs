//! Closed-form CCA solvers: linear, kernel and generalized (MAXVAR).
//!
//! All solvers take views as `n x m` matrices with samples in columns and
//! center them with stored means, so new data can be projected later.

use crate::error::{Error, Result};
use crate::linalg::{covariance, eig_sym, inv_sqrt_sym, inv_sym, svd, SPECTRAL_FLOOR};
use crate::tensor::Tensor;
use serde::{Deserialize, Serialize};

pub const DEFAULT_RIDGE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcaSolution {
    /// n1 x r, A* = S11^{-1/2} U.
    pub map_x: Tensor,
    /// n2 x r, B* = S22^{-1/2} V.
    pub map_y: Tensor,
    /// Descending, each in [0, 1].
    pub correlations: Vec<f64>,
    pub mean_x: Vec<f64>,
    pub mean_y: Vec<f64>,
    pub eps: f64,
}

impl CcaSolution {
    pub fn total_correlation(&self) -> f64 {
        self.correlations.iter().sum()
    }
}

fn check_views(x: &Tensor, y: &Tensor) -> Result<usize> {
    if x.rank() != 2 || y.rank() != 2 || x.cols() != y.cols() {
        return Err(Error::contract(format!(
            "views must be n x m with a common sample count, got {:?} and {:?}",
            x.shape(),
            y.shape()
        )));
    }
    if !x.is_finite() || !y.is_finite() {
        return Err(Error::contract("views contain non-finite values"));
    }
    Ok(x.cols())
}

// Inverse square root of a covariance, refusing a numerically singular one
// when no ridge is supplied.
fn whitener(s: &Tensor, eps: f64) -> Result<Tensor> {
    if eps == 0.0 {
        let eig = eig_sym(s)?;
        let (max, min) = (eig.values[0], *eig.values.last().unwrap());
        if min <= SPECTRAL_FLOOR * max.abs() {
            return Err(Error::Singular { eigenvalue: min });
        }
    }
    inv_sqrt_sym(s, eps)
}

/// Linear CCA of `x` (n1 x m) and `y` (n2 x m) keeping `r` components.
pub fn linear_cca(x: &Tensor, y: &Tensor, r: usize, eps: f64) -> Result<CcaSolution> {
    let m = check_views(x, y)?;
    if m < 2 {
        return Err(Error::DegenerateSample { count: m });
    }
    let (n1, n2) = (x.rows(), y.rows());
    if r == 0 || r > n1.min(n2) {
        return Err(Error::contract(format!(
            "linear_cca: r = {r} must be in 1..={}",
            n1.min(n2)
        )));
    }
    if eps < 0.0 {
        return Err(Error::contract("linear_cca: eps must be >= 0"));
    }
    let s11 = covariance(x, x, true)?.symmetrize();
    let s22 = covariance(y, y, true)?.symmetrize();
    let s12 = covariance(x, y, true)?;
    let w1 = whitener(&s11, eps)?;
    let w2 = whitener(&s22, eps)?;
    let z = w1.matmul(&s12).matmul(&w2);
    let dec = svd(&z)?;
    Ok(CcaSolution {
        map_x: w1.matmul(&dec.u.leading_cols(r)),
        map_y: w2.matmul(&dec.v.leading_cols(r)),
        correlations: dec.s[..r].to_vec(),
        mean_x: x.row_means(),
        mean_y: y.row_means(),
        eps,
    })
}

fn project_view(map: &Tensor, mean: &[f64], data: &Tensor, which: &str) -> Result<Tensor> {
    if data.rank() != 2 || data.rows() != map.rows() {
        return Err(Error::contract(format!(
            "cca_project: {which} view has shape {:?}, expected {} rows",
            data.shape(),
            map.rows()
        )));
    }
    let mut centered = data.clone();
    for i in 0..centered.rows() {
        for j in 0..centered.cols() {
            let v = centered.at(i, j) - mean[i];
            centered.set(i, j, v);
        }
    }
    Ok(map.transpose().matmul(&centered))
}

/// Centers new samples with the training means and maps them into the
/// r-dimensional canonical space. Returns (r x m', r x m').
pub fn cca_project(sol: &CcaSolution, x_new: &Tensor, y_new: &Tensor) -> Result<(Tensor, Tensor)> {
    Ok((
        project_view(&sol.map_x, &sol.mean_x, x_new, "x")?,
        project_view(&sol.map_y, &sol.mean_y, y_new, "y")?,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KernelSpec {
    Linear,
    /// `None` selects the median pairwise distance at fit time.
    Rbf { bandwidth: Option<f64> },
}

impl KernelSpec {
    pub fn rbf_median() -> Self {
        KernelSpec::Rbf { bandwidth: None }
    }

    fn validate(&self) -> Result<()> {
        if let KernelSpec::Rbf { bandwidth: Some(b) } = self {
            if !(*b > 0.0) {
                return Err(Error::contract(format!("RBF bandwidth must be > 0, got {b}")));
            }
        }
        Ok(())
    }
}

/// Median Euclidean distance over all sample pairs (columns of `x`).
pub fn median_pairwise_distance(x: &Tensor) -> f64 {
    let m = x.cols();
    let xt = x.transpose();
    let mut d = Vec::with_capacity(m * (m.saturating_sub(1)) / 2);
    for i in 0..m {
        for j in (i + 1)..m {
            let dist: f64 = xt
                .row(i)
                .iter()
                .zip(xt.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            d.push(dist);
        }
    }
    if d.is_empty() {
        return 1.0;
    }
    let mid = d.len() / 2;
    let (_, med, _) = d.select_nth_unstable_by(mid, f64::total_cmp);
    if *med > 0.0 {
        *med
    } else {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum ResolvedKernel {
    Linear,
    Rbf { bandwidth: f64 },
}

impl ResolvedKernel {
    fn resolve(spec: KernelSpec, x: &Tensor) -> Self {
        match spec {
            KernelSpec::Linear => ResolvedKernel::Linear,
            KernelSpec::Rbf { bandwidth } => ResolvedKernel::Rbf {
                bandwidth: bandwidth.unwrap_or_else(|| median_pairwise_distance(x)),
            },
        }
    }

    fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            ResolvedKernel::Linear => crate::tensor::dot(a, b),
            ResolvedKernel::Rbf { bandwidth } => {
                let d2: f64 = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum();
                (-d2 / (2.0 * bandwidth * bandwidth)).exp()
            }
        }
    }

    // Gram matrix between the columns of `a` and the columns of `b`.
    fn gram(&self, a: &Tensor, b: &Tensor) -> Tensor {
        let (at, bt) = (a.transpose(), b.transpose());
        let mut k = Tensor::zeros(&[at.rows(), bt.rows()]);
        for i in 0..at.rows() {
            for j in 0..bt.rows() {
                k.set(i, j, self.eval(at.row(i), bt.row(j)));
            }
        }
        k
    }
}

#[derive(Debug, Clone)]
struct KernelView {
    kernel: ResolvedKernel,
    train: Tensor,
    col_means: Vec<f64>,
    grand_mean: f64,
    /// m x r dual coefficients.
    alpha: Tensor,
}

impl KernelView {
    fn project(&self, data: &Tensor) -> Result<Tensor> {
        if data.rank() != 2 || data.rows() != self.train.rows() {
            return Err(Error::contract(format!(
                "kcca_project: expected {} feature rows, got {:?}",
                self.train.rows(),
                data.shape()
            )));
        }
        // k(new, train), centered consistently with the training Gram.
        let mut k = self.kernel.gram(data, &self.train);
        let m = self.train.cols() as f64;
        for i in 0..k.rows() {
            let row_mean = k.row(i).iter().sum::<f64>() / m;
            for j in 0..k.cols() {
                let v = k.at(i, j) - row_mean - self.col_means[j] + self.grand_mean;
                k.set(i, j, v);
            }
        }
        Ok(self.alpha.transpose().matmul(&k.transpose()))
    }
}

#[derive(Debug, Clone)]
pub struct KccaSolution {
    pub correlations: Vec<f64>,
    pub reg: f64,
    x: KernelView,
    y: KernelView,
}

impl KccaSolution {
    pub fn alpha_x(&self) -> &Tensor {
        &self.x.alpha
    }

    pub fn alpha_y(&self) -> &Tensor {
        &self.y.alpha
    }

    pub fn total_correlation(&self) -> f64 {
        self.correlations.iter().sum()
    }

    /// Projects new samples (columns) of each view; returns r x m' each.
    pub fn project(&self, x_new: &Tensor, y_new: &Tensor) -> Result<(Tensor, Tensor)> {
        Ok((self.x.project(x_new)?, self.y.project(y_new)?))
    }
}

fn center_gram(k: &Tensor) -> (Tensor, Vec<f64>, f64) {
    let m = k.rows();
    let col_means: Vec<f64> = (0..m).map(|j| (0..m).map(|i| k.at(i, j)).sum::<f64>() / m as f64).collect();
    let grand = col_means.iter().sum::<f64>() / m as f64;
    let mut c = k.clone();
    for i in 0..m {
        for j in 0..m {
            c.set(i, j, k.at(i, j) - col_means[i] - col_means[j] + grand);
        }
    }
    (c.symmetrize(), col_means, grand)
}

/// Regularized kernel CCA.
///
/// With centered Gram matrices K_x, K_y and kappa = (m - 1) reg, the
/// canonical correlations are the singular values of R_x^{1/2} R_y^{1/2},
/// R = K (K + kappa I)^{-1}. For linear kernels this coincides with
/// [`linear_cca`] at covariance ridge `reg`.
pub fn kernel_cca(
    x: &Tensor,
    y: &Tensor,
    spec_x: KernelSpec,
    spec_y: KernelSpec,
    r: usize,
    reg: f64,
) -> Result<KccaSolution> {
    let m = check_views(x, y)?;
    if !(reg > 0.0) {
        return Err(Error::contract(format!(
            "kernel_cca: reg must be > 0 (kernel CCA is ill-posed without it), got {reg}"
        )));
    }
    if m < 4 {
        return Err(Error::contract(format!("kernel_cca: need at least 4 samples, got {m}")));
    }
    if r == 0 || r > m {
        return Err(Error::contract(format!("kernel_cca: r = {r} must be in 1..={m}")));
    }
    spec_x.validate()?;
    spec_y.validate()?;
    let kx_spec = ResolvedKernel::resolve(spec_x, x);
    let ky_spec = ResolvedKernel::resolve(spec_y, y);
    let (kx, kx_means, kx_grand) = center_gram(&kx_spec.gram(x, x));
    let (ky, ky_means, ky_grand) = center_gram(&ky_spec.gram(y, y));
    let kappa = (m as f64 - 1.0) * reg;

    let ex = eig_sym(&kx)?;
    let ey = eig_sym(&ky)?;
    let shrink = |l: f64| {
        let l = l.max(0.0);
        (l / (l + kappa)).sqrt()
    };
    let dx: Vec<f64> = ex.values.iter().map(|&l| shrink(l)).collect();
    let dy: Vec<f64> = ey.values.iter().map(|&l| shrink(l)).collect();

    // N = diag(dx) Vx^T Vy diag(dy); its singular values are the correlations.
    let mut n = ex.vectors.transpose().matmul(&ey.vectors);
    for i in 0..m {
        for j in 0..m {
            let v = n.at(i, j) * dx[i] * dy[j];
            n.set(i, j, v);
        }
    }
    let left = eig_sym(&n.matmul(&n.transpose()).symmetrize())?;
    let correlations: Vec<f64> = left.values[..r].iter().map(|&l| l.max(0.0).sqrt().min(1.0)).collect();
    let p = left.vectors.leading_cols(r);
    // right singular vectors q_j = N^T p_j / sigma_j
    let mut q = n.transpose().matmul(&p);
    for j in 0..r {
        let s = correlations[j];
        for i in 0..m {
            let v = if s > 0.0 { q.at(i, j) / s } else { 0.0 };
            q.set(i, j, v);
        }
    }

    let dual = |eig: &crate::linalg::EigSym, coeffs: &Tensor| {
        let floor = SPECTRAL_FLOOR * eig.values[0].abs().max(f64::MIN_POSITIVE);
        let mut scaled = coeffs.clone();
        for i in 0..m {
            let l = eig.values[i];
            let f = if l > floor {
                (m as f64 - 1.0).sqrt() / (l * (l + kappa)).sqrt()
            } else {
                0.0
            };
            for j in 0..r {
                let v = scaled.at(i, j) * f;
                scaled.set(i, j, v);
            }
        }
        eig.vectors.matmul(&scaled)
    };
    let alpha_x = dual(&ex, &p);
    let alpha_y = dual(&ey, &q);

    Ok(KccaSolution {
        correlations,
        reg,
        x: KernelView {
            kernel: kx_spec,
            train: x.clone(),
            col_means: kx_means,
            grand_mean: kx_grand,
            alpha: alpha_x,
        },
        y: KernelView {
            kernel: ky_spec,
            train: y.clone(),
            col_means: ky_means,
            grand_mean: ky_grand,
            alpha: alpha_y,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GccaSolution {
    /// r x m shared representation with orthonormal rows.
    pub shared: Tensor,
    /// One n_i x r map per view.
    pub view_maps: Vec<Tensor>,
    pub means: Vec<Vec<f64>>,
    /// ||G - W_i^T X_i||_F per view.
    pub residuals: Vec<f64>,
    pub reg: f64,
}

impl GccaSolution {
    /// W_i^T (x_i - mean_i) for each view (r x m').
    pub fn project_views(&self, views: &[Tensor]) -> Result<Vec<Tensor>> {
        if views.len() != self.view_maps.len() {
            return Err(Error::contract(format!(
                "gcca_project: {} views supplied, solution has {}",
                views.len(),
                self.view_maps.len()
            )));
        }
        views
            .iter()
            .zip(&self.view_maps)
            .zip(&self.means)
            .enumerate()
            .map(|(i, ((v, w), mu))| project_view(w, mu, v, &format!("view {i}")))
            .collect()
    }

    /// Average of the per-view projections (r x m').
    pub fn project(&self, views: &[Tensor]) -> Result<Tensor> {
        let parts = self.project_views(views)?;
        let mut acc = parts[0].clone();
        for p in &parts[1..] {
            acc.add_assign(p);
        }
        Ok(acc.scale(1.0 / parts.len() as f64))
    }
}

/// MAXVAR generalized CCA over two or more views.
///
/// G's rows are the top-r eigenvectors of sum_i P_i, where P_i is the
/// ridge-regularized projection onto the row space of the centered view i.
/// The eigenproblem is solved in the (sum n_i)-dimensional dual so its cost
/// does not grow with m^3.
pub fn gcca(views: &[Tensor], r: usize, reg: f64) -> Result<GccaSolution> {
    if views.len() < 2 {
        return Err(Error::contract(format!("gcca: need at least 2 views, got {}", views.len())));
    }
    let m = views[0].cols();
    for v in views {
        check_views(&views[0], v)?;
    }
    if m < 2 {
        return Err(Error::DegenerateSample { count: m });
    }
    if r == 0 || r > m {
        return Err(Error::contract(format!("gcca: r = {r} must be in 1..={m}")));
    }
    let total: usize = views.iter().map(|v| v.rows()).sum();
    if r > total {
        return Err(Error::contract(format!(
            "gcca: r = {r} exceeds the combined view width {total}"
        )));
    }
    if reg < 0.0 {
        return Err(Error::contract("gcca: reg must be >= 0"));
    }
    let scale = 1.0 / (m as f64 - 1.0);
    let mut centered = Vec::with_capacity(views.len());
    let mut means = Vec::with_capacity(views.len());
    let mut blocks = Vec::with_capacity(views.len());
    let mut covs = Vec::with_capacity(views.len());
    for v in views {
        let (c, mu) = v.center_rows();
        let cov = c.matmul(&c.transpose()).scale(scale).symmetrize();
        let w = whitener(&cov, reg)?;
        blocks.push(w.matmul(&c).scale(scale.sqrt()));
        covs.push(cov);
        centered.push(c);
        means.push(mu);
    }
    let refs: Vec<&Tensor> = blocks.iter().collect();
    let q = Tensor::vstack(&refs);
    let eig = eig_sym(&q.matmul(&q.transpose()).symmetrize())?;
    let mut shared = Tensor::zeros(&[r, m]);
    for k in 0..r {
        let l = eig.values[k];
        if l <= SPECTRAL_FLOOR * eig.values[0] {
            return Err(Error::Numerical(format!(
                "gcca: component {k} has no shared variance (eigenvalue {l:e})"
            )));
        }
        let u = Tensor::matrix(q.rows(), 1, eig.vectors.col(k));
        let g = q.transpose().matmul(&u).scale(1.0 / l.sqrt());
        for j in 0..m {
            shared.set(k, j, g.at(j, 0));
        }
    }

    let mut view_maps = Vec::with_capacity(views.len());
    let mut residuals = Vec::with_capacity(views.len());
    for (c, cov) in centered.iter().zip(&covs) {
        // W = (X X^T + (m-1) reg I)^{-1} X G^T
        let inv = inv_sym(cov, reg)?;
        let w = inv.matmul(c).matmul(&shared.transpose()).scale(scale);
        let resid = shared.sub(&w.transpose().matmul(c)).frobenius_norm();
        view_maps.push(w);
        residuals.push(resid);
    }
    Ok(GccaSolution {
        shared,
        view_maps,
        means,
        residuals,
        reg,
    })
}
