use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
    Sigmoid,
}

impl Activation {
    pub fn apply<T: Scalar>(self, x: &DenseMatrix<T>) -> DenseMatrix<T> {
        match self {
            Activation::Identity => x.clone(),
            Activation::Relu => relu(x),
            Activation::Tanh => tanh(x),
            Activation::Sigmoid => sigmoid(x),
        }
    }

    /// Gradient with respect to the pre-activation, given the activation
    /// output `out` and the upstream gradient.
    pub fn backward<T: Scalar>(
        self,
        out: &DenseMatrix<T>,
        grad_out: &DenseMatrix<T>,
    ) -> Result<DenseMatrix<T>> {
        match self {
            Activation::Identity => Ok(grad_out.clone()),
            Activation::Relu => out.zip_map(grad_out, "relu_backward", |y, g| {
                if y > T::zero() {
                    g
                } else {
                    T::zero()
                }
            }),
            Activation::Tanh => out.zip_map(grad_out, "tanh_backward", |y, g| g * (T::one() - y * y)),
            Activation::Sigmoid => {
                out.zip_map(grad_out, "sigmoid_backward", |y, g| g * y * (T::one() - y))
            }
        }
    }
}

pub fn relu<T: Scalar>(x: &DenseMatrix<T>) -> DenseMatrix<T> {
    x.map(|v| v.max(T::zero()))
}

pub fn tanh<T: Scalar>(x: &DenseMatrix<T>) -> DenseMatrix<T> {
    x.map(|v| v.tanh())
}

#[inline]
pub(crate) fn sigmoid_scalar<T: Scalar>(v: T) -> T {
    if v >= T::zero() {
        T::one() / (T::one() + (-v).exp())
    } else {
        let e = v.exp();
        e / (T::one() + e)
    }
}

pub fn sigmoid<T: Scalar>(x: &DenseMatrix<T>) -> DenseMatrix<T> {
    x.map(sigmoid_scalar)
}

/// Row-wise softmax with per-row max subtraction.
pub fn softmax_rows<T: Scalar>(x: &DenseMatrix<T>) -> DenseMatrix<T> {
    let mut out = x.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut total = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    out
}

/// Backward of [`softmax_rows`] given its output `probs`.
pub fn softmax_rows_backward<T: Scalar>(
    probs: &DenseMatrix<T>,
    grad_out: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>> {
    let mut g = probs.hadamard(grad_out)?;
    for i in 0..g.rows() {
        let inner: T = g.row(i).iter().copied().sum();
        let p = probs.row(i);
        for (gv, &pv) in g.row_mut(i).iter_mut().zip(p) {
            *gv -= pv * inner;
        }
    }
    Ok(g)
}
