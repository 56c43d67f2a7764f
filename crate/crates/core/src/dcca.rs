//! Deep CCA on fixed-width views: one MLP per view trained with the CCA loss.

use crate::autodiff::Graph;
use crate::downstream::Standardizer;
use crate::error::{Error, Result};
use crate::loss::{canonical_correlations, cca_loss, CcaLossConfig};
use crate::nn::{Mlp, ParamSet};
use crate::optim::{RmsProp, RmsPropConfig};
use crate::rng::SeededRng;
use crate::tensor::Tensor;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DccaConfig {
    pub hidden: usize,
    pub out_dim: usize,
    pub loss: CcaLossConfig,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl DccaConfig {
    pub fn new(out_dim: usize) -> Self {
        DccaConfig {
            hidden: 32,
            out_dim,
            loss: CcaLossConfig::new(out_dim),
            lr: 1e-3,
            epochs: 100,
            batch_size: 128,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DccaModel {
    pub config: DccaConfig,
    pub params: ParamSet,
    std_x: Standardizer,
    std_y: Standardizer,
    net_x: Mlp,
    net_y: Mlp,
}

impl DccaModel {
    /// Network outputs for row-per-sample inputs.
    pub fn transform(&self, x: &Tensor, y: &Tensor) -> Result<(Tensor, Tensor)> {
        let mut g = Graph::new();
        let p = self.params.bind(&mut g);
        let xv = g.leaf(self.std_x.apply(x));
        let yv = g.leaf(self.std_y.apply(y));
        let fx = self.net_x.forward(&mut g, &p, xv)?;
        let fy = self.net_y.forward(&mut g, &p, yv)?;
        Ok((g.value(fx).clone(), g.value(fy).clone()))
    }

    /// Top-k canonical correlations of the outputs on (x, y).
    pub fn correlations(&self, x: &Tensor, y: &Tensor) -> Result<Vec<f64>> {
        let (fx, fy) = self.transform(x, y)?;
        canonical_correlations(&fx, &fy, &self.config.loss)
    }
}

/// Trains both networks on paired rows of `x` and `y`.
pub fn train_dcca(x: &Tensor, y: &Tensor, cfg: &DccaConfig) -> Result<DccaModel> {
    if x.rank() != 2 || y.rank() != 2 || x.rows() != y.rows() {
        return Err(Error::contract(format!(
            "dcca: views must be row-paired matrices, got {:?} and {:?}",
            x.shape(),
            y.shape()
        )));
    }
    if cfg.out_dim == 0 || cfg.hidden == 0 || cfg.loss.out_dim > cfg.out_dim {
        return Err(Error::config("dcca: need out_dim >= 1, hidden >= 1, loss k <= out_dim"));
    }
    let n = x.rows();
    let bs = cfg.batch_size.min(n);
    if bs <= cfg.out_dim {
        return Err(Error::MinibatchTooSmall {
            got: bs,
            need: cfg.out_dim + 1,
        });
    }
    let mut rng = SeededRng::derive(cfg.seed, 4);
    let mut params = ParamSet::new();
    let net_x = Mlp::new(&mut params, "dcca.x", &[x.cols(), cfg.hidden, cfg.out_dim], &mut rng);
    let net_y = Mlp::new(&mut params, "dcca.y", &[y.cols(), cfg.hidden, cfg.out_dim], &mut rng);
    let std_x = Standardizer::fit(x);
    let std_y = Standardizer::fit(y);
    let xs = std_x.apply(x);
    let ys = std_y.apply(y);
    let mut opt = RmsProp::new(RmsPropConfig::with_lr(cfg.lr), &params);
    for epoch in 1..=cfg.epochs {
        let order = rng.permutation(n);
        for (b, chunk) in order.chunks_exact(bs).enumerate() {
            let xb = Tensor::from_rows(&chunk.iter().map(|&i| xs.row(i).to_vec()).collect::<Vec<_>>());
            let yb = Tensor::from_rows(&chunk.iter().map(|&i| ys.row(i).to_vec()).collect::<Vec<_>>());
            let mut g = Graph::new();
            let bound = params.bind(&mut g);
            let xv = g.leaf(xb);
            let yv = g.leaf(yb);
            let fx = net_x.forward(&mut g, &bound, xv)?;
            let fy = net_y.forward(&mut g, &bound, yv)?;
            let r = cca_loss(g.value(fx), g.value(fy), &cfg.loss)?;
            if !r.loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b });
            }
            let grads = g.backward(&[(fx, r.grad_fx), (fy, r.grad_fy)])?;
            let grads = bound.gradients(&params, &grads);
            opt.step(&mut params, &grads)?;
        }
    }
    Ok(DccaModel {
        config: cfg.clone(),
        params,
        std_x,
        std_y,
        net_x,
        net_y,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn training_raises_correlation_on_nonlinear_pair() {
        let mut rng = SeededRng::new(3);
        let m = 400;
        let x: Vec<Vec<f64>> = (0..m).map(|_| vec![rng.uniform_range(-1.0, 1.0)]).collect();
        let y: Vec<Vec<f64>> = x.iter().map(|r| vec![r[0] * r[0] + 0.05 * rng.normal()]).collect();
        let (x, y) = (Tensor::from_rows(&x), Tensor::from_rows(&y));
        let cfg = DccaConfig {
            hidden: 16,
            lr: 5e-3,
            epochs: 60,
            batch_size: 100,
            ..DccaConfig::new(1)
        };
        let untrained = DccaConfig { epochs: 0, ..cfg.clone() };
        let before = train_dcca(&x, &y, &untrained).unwrap().correlations(&x, &y).unwrap()[0];
        let after = train_dcca(&x, &y, &cfg).unwrap().correlations(&x, &y).unwrap()[0];
        assert!(after > 0.8 && after > before, "before {before} after {after}");
    }

    #[test]
    fn rejects_tiny_batches() {
        let x = Tensor::zeros(&[3, 2]);
        assert!(matches!(
            train_dcca(&x, &x, &DccaConfig::new(4)),
            Err(Error::MinibatchTooSmall { .. })
        ));
    }
}
