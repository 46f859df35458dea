use super::{Param, Parameterized};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A scalar objective with hand-written gradients.
pub trait Differentiable<T: Scalar>: Parameterized<T> {
    /// Clears gradients, evaluates the objective at the current parameter
    /// values and accumulates analytic gradients into every `Param::grad`.
    fn loss_and_grad(&mut self) -> Result<T>;
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Worst relative error per parameter tensor, in parameter order.
    pub per_param: Vec<(String, f64)>,
    pub entries_checked: usize,
}

/// Compares analytic gradients against central differences.
///
/// For each unfrozen parameter at most `max_entries` evenly spaced entries
/// are perturbed by `±eps`. The error of an entry is
/// `|analytic − numeric| / max(1, |analytic|)`.
pub fn grad_check<T: Scalar, M: Differentiable<T> + ?Sized>(
    model: &mut M,
    eps: T,
    max_entries: usize,
) -> Result<GradCheckReport> {
    let eps_f = eps.as_f64();
    if !(1e-7..=1e-3).contains(&eps_f) {
        return Err(Error::arg(format!("eps {eps_f} outside [1e-7, 1e-3]")));
    }
    let base = model.loss_and_grad()?;
    if !base.is_finite() {
        return Err(Error::Value("non-finite loss".into()));
    }
    let analytic: Vec<(String, bool, Vec<T>)> = model
        .params()
        .into_iter()
        .map(|(name, p)| (name, p.frozen, p.grad.data().to_vec()))
        .collect();

    let mut per_param = Vec::with_capacity(analytic.len());
    let mut checked = 0;
    let mut worst = 0.0f64;
    for (pi, (name, frozen, grads)) in analytic.iter().enumerate() {
        if *frozen {
            continue;
        }
        let len = grads.len();
        let picks: Vec<usize> = if len <= max_entries {
            (0..len).collect()
        } else {
            (0..max_entries).map(|s| s * len / max_entries).collect()
        };
        let mut param_worst = 0.0f64;
        for k in picks {
            let orig = value_at(model, pi, k);
            set_value(model, pi, k, orig + eps);
            let up = model.loss_and_grad()?;
            set_value(model, pi, k, orig - eps);
            let down = model.loss_and_grad()?;
            set_value(model, pi, k, orig);
            if !up.is_finite() || !down.is_finite() {
                return Err(Error::Value(format!("non-finite loss perturbing {name}[{k}]")));
            }
            let numeric = (up.as_f64() - down.as_f64()) / (2.0 * eps_f);
            let a = grads[k].as_f64();
            let err = (a - numeric).abs() / a.abs().max(1.0);
            param_worst = param_worst.max(err);
            checked += 1;
        }
        worst = worst.max(param_worst);
        per_param.push((name.clone(), param_worst));
    }
    // Leave the model holding gradients of the unperturbed point.
    model.loss_and_grad()?;
    Ok(GradCheckReport {
        max_rel_error: worst,
        per_param,
        entries_checked: checked,
    })
}

fn value_at<T: Scalar, M: Differentiable<T> + ?Sized>(model: &M, pi: usize, k: usize) -> T {
    model.params()[pi].1.value.data()[k]
}

fn set_value<T: Scalar, M: Differentiable<T> + ?Sized>(model: &mut M, pi: usize, k: usize, v: T) {
    let mut params = model.params_mut();
    params[pi].1.value.data_mut()[k] = v;
}

/// Wraps a model and adds a constant to every analytic gradient entry.
/// Used to confirm that [`grad_check`] actually detects wrong gradients.
pub struct CorruptedGradient<M> {
    pub inner: M,
    pub offset: f64,
}

impl<T: Scalar, M: Differentiable<T>> Parameterized<T> for CorruptedGradient<M> {
    fn params(&self) -> Vec<(String, &Param<T>)> {
        self.inner.params()
    }

    fn params_mut(&mut self) -> Vec<(String, &mut Param<T>)> {
        self.inner.params_mut()
    }
}

impl<T: Scalar, M: Differentiable<T>> Differentiable<T> for CorruptedGradient<M> {
    fn loss_and_grad(&mut self) -> Result<T> {
        let loss = self.inner.loss_and_grad()?;
        let off = T::lit(self.offset);
        for (_, p) in self.inner.params_mut() {
            p.grad.data_mut().iter_mut().for_each(|g| *g += off);
        }
        Ok(loss)
    }
}
