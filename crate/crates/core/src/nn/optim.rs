use serde::{Deserialize, Serialize};

use super::Param;
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam optimizer state. Moments are matched to parameters by position, so
/// every call to [`Adam::step`] must pass the parameters in the same order.
#[derive(Clone, Debug)]
pub struct Adam<T> {
    pub config: AdamConfig,
    step: u64,
    moments: Vec<(DenseMatrix<T>, DenseMatrix<T>)>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(config: AdamConfig) -> Self {
        Self {
            config,
            step: 0,
            moments: Vec::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Applies one update to every unfrozen parameter and zeroes all gradients.
    pub fn step(&mut self, params: &mut [&mut Param<T>]) -> Result<()> {
        if self.moments.is_empty() {
            self.moments = params
                .iter()
                .map(|p| {
                    let (r, c) = p.shape();
                    (DenseMatrix::zeros(r, c), DenseMatrix::zeros(r, c))
                })
                .collect();
        }
        if self.moments.len() != params.len() {
            return Err(Error::arg(format!(
                "optimizer tracks {} parameters, got {}",
                self.moments.len(),
                params.len()
            )));
        }
        self.step += 1;
        let b1 = T::lit(self.config.beta1);
        let b2 = T::lit(self.config.beta2);
        let lr = T::lit(self.config.lr);
        let eps = T::lit(self.config.eps);
        let t = self.step as i32;
        let bc1 = T::one() - b1.powi(t);
        let bc2 = T::one() - b2.powi(t);
        for (p, (m, v)) in params.iter_mut().zip(self.moments.iter_mut()) {
            if m.shape() != p.shape() {
                return Err(Error::shape("adam_step", m.shape(), p.shape()));
            }
            if !p.frozen {
                let grads = p.grad.data().to_vec();
                let values = p.value.data_mut();
                for (k, &g) in grads.iter().enumerate() {
                    let mk = &mut m.data_mut()[k];
                    *mk = b1 * *mk + (T::one() - b1) * g;
                    let mhat = *mk / bc1;
                    let vk = &mut v.data_mut()[k];
                    *vk = b2 * *vk + (T::one() - b2) * g * g;
                    let vhat = *vk / bc2;
                    values[k] -= lr * mhat / (vhat.sqrt() + eps);
                }
            }
            p.zero_grad();
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type M = DenseMatrix<f64>;

    #[test]
    fn zero_gradients_leave_params_unchanged() {
        let mut p = Param::new(M::from_rows(&[[1.0, -2.0]]).unwrap());
        let before = p.value.clone();
        let mut opt = Adam::new(AdamConfig::default());
        opt.step(&mut [&mut p]).unwrap();
        assert_eq!(p.value, before);
    }

    #[test]
    fn frozen_param_is_bit_identical() {
        let mut p = Param::new(M::from_rows(&[[0.3]]).unwrap());
        p.frozen = true;
        p.grad = M::from_rows(&[[5.0]]).unwrap();
        let before = p.value.clone();
        let mut opt = Adam::new(AdamConfig::default());
        opt.step(&mut [&mut p]).unwrap();
        assert_eq!(p.value.data()[0].to_bits(), before.data()[0].to_bits());
        assert_eq!(p.grad.data()[0], 0.0);
    }

    #[test]
    fn one_step_on_square_decreases_w() {
        // f(w) = w², w = 1 → grad 2; first Adam step moves by lr.
        let mut p = Param::new(M::from_rows(&[[1.0]]).unwrap());
        p.grad = M::from_rows(&[[2.0]]).unwrap();
        let mut opt = Adam::new(AdamConfig {
            lr: 0.1,
            ..AdamConfig::default()
        });
        opt.step(&mut [&mut p]).unwrap();
        let w = p.value.data()[0];
        assert!(w < 1.0);
        assert!((w - 0.9).abs() < 1e-6);
        assert_eq!(p.grad.data()[0], 0.0);
    }
}
