use crate::error::{Error, Result};
use crate::nn::ParamSet;
use crate::tensor::Tensor;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmsPropConfig {
    pub lr: f64,
    pub rho: f64,
    pub eps: f64,
}

impl RmsPropConfig {
    pub fn with_lr(lr: f64) -> Self {
        RmsPropConfig { lr, rho: 0.9, eps: 1e-8 }
    }
}

/// RMSProp: v <- rho v + (1 - rho) g^2; p <- p - lr g / (sqrt(v) + eps).
#[derive(Debug, Clone)]
pub struct RmsProp {
    pub config: RmsPropConfig,
    mean_square: Vec<Tensor>,
}

impl RmsProp {
    pub fn new(config: RmsPropConfig, params: &ParamSet) -> Self {
        RmsProp {
            config,
            mean_square: params.tensors().iter().map(|t| Tensor::zeros(t.shape())).collect(),
        }
    }

    pub fn mean_square(&self) -> &[Tensor] {
        &self.mean_square
    }

    /// Applies one update. Gradients are checked before anything is touched,
    /// so a non-finite gradient leaves both state and parameters unchanged.
    pub fn step(&mut self, params: &mut ParamSet, grads: &[Tensor]) -> Result<()> {
        if grads.len() != params.len() {
            return Err(Error::contract(format!(
                "rmsprop: {} gradients for {} parameters",
                grads.len(),
                params.len()
            )));
        }
        for (i, g) in grads.iter().enumerate() {
            let id = crate::nn::ParamId(i);
            if g.shape() != params.get(id).shape() {
                return Err(Error::contract(format!(
                    "rmsprop: gradient shape {:?} for `{}` of shape {:?}",
                    g.shape(),
                    params.name(id),
                    params.get(id).shape()
                )));
            }
            if !g.is_finite() {
                return Err(Error::NonFiniteGradient {
                    param: params.name(id).to_string(),
                });
            }
        }
        let RmsPropConfig { lr, rho, eps } = self.config;
        for ((p, v), g) in params
            .tensors_mut()
            .iter_mut()
            .zip(self.mean_square.iter_mut())
            .zip(grads)
        {
            for ((pi, vi), gi) in p.data_mut().iter_mut().zip(v.data_mut()).zip(g.data()) {
                *vi = rho * *vi + (1.0 - rho) * gi * gi;
                *pi -= lr * gi / (vi.sqrt() + eps);
            }
        }
        Ok(())
    }
}
