use super::{Activation, Param};
use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, SparseMatrix};
use crate::scalar::Scalar;

/// `y = x·W (+ b)`, with `b` a `1 × out` row broadcast over the batch.
pub fn linear_forward<T: Scalar>(
    x: &DenseMatrix<T>,
    w: &Param<T>,
    b: Option<&Param<T>>,
) -> Result<DenseMatrix<T>> {
    let mut y = x.matmul(&w.value)?;
    if let Some(b) = b {
        if b.shape() != (1, y.cols()) {
            return Err(Error::shape("linear_bias", (1, y.cols()), b.shape()));
        }
        let bias = b.value.row(0);
        for i in 0..y.rows() {
            for (v, &bv) in y.row_mut(i).iter_mut().zip(bias) {
                *v += bv;
            }
        }
    }
    Ok(y)
}

/// Accumulates `∂L/∂W` and `∂L/∂b` and returns `∂L/∂x`.
pub fn linear_backward<T: Scalar>(
    x: &DenseMatrix<T>,
    w: &mut Param<T>,
    b: Option<&mut Param<T>>,
    grad_y: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>> {
    if grad_y.shape() != (x.rows(), w.value.cols()) {
        return Err(Error::shape(
            "linear_backward",
            (x.rows(), w.value.cols()),
            grad_y.shape(),
        ));
    }
    w.accumulate(&x.matmul_tn(grad_y)?)?;
    if let Some(b) = b {
        b.accumulate(&grad_y.col_sums())?;
    }
    grad_y.matmul_nt(&w.value)
}

/// Values kept from a graph-convolution forward pass.
#[derive(Clone, Debug)]
pub struct GcnCache<T> {
    /// `L·H`
    pub support: DenseMatrix<T>,
    pub out: DenseMatrix<T>,
}

/// `σ(L·H·W)`
pub fn gcn_forward<T: Scalar>(
    l: &SparseMatrix<T>,
    h: &DenseMatrix<T>,
    w: &Param<T>,
    act: Activation,
) -> Result<(DenseMatrix<T>, GcnCache<T>)> {
    if l.rows() != l.cols() {
        return Err(Error::shape("gcn_operator", l.shape(), l.shape()));
    }
    let support = l.spmm(h)?;
    let out = act.apply(&support.matmul(&w.value)?);
    Ok((
        out.clone(),
        GcnCache { support, out },
    ))
}

/// Accumulates `∂L/∂W` and returns `∂L/∂H`.
pub fn gcn_backward<T: Scalar>(
    l: &SparseMatrix<T>,
    cache: &GcnCache<T>,
    w: &mut Param<T>,
    act: Activation,
    grad_out: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>> {
    let grad_pre = act.backward(&cache.out, grad_out)?;
    w.accumulate(&cache.support.matmul_tn(&grad_pre)?)?;
    let grad_support = grad_pre.matmul_nt(&w.value)?;
    l.spmm_t(&grad_support)
}

#[cfg(test)]
mod tests {
    use super::*;

    type M = DenseMatrix<f64>;

    #[test]
    fn linear_identity_and_hand_case() {
        let x = M::from_rows(&[[1.0, -2.0], [0.5, 3.0]]).unwrap();
        let w = Param::new(M::identity(2));
        let b = Param::new(M::zeros(1, 2));
        assert_eq!(linear_forward(&x, &w, Some(&b)).unwrap(), x);

        let x = M::from_rows(&[[1.0, 1.0]]).unwrap();
        let w = Param::new(M::from_rows(&[[1.0], [2.0]]).unwrap());
        assert_eq!(linear_forward(&x, &w, None).unwrap().data(), &[3.0]);
    }

    #[test]
    fn bias_gradient_of_sum_is_row_count() {
        let x = M::from_fn(5, 3, |i, j| (i + j) as f64);
        let mut w = Param::new(M::from_fn(3, 2, |i, j| (i * 2 + j) as f64 * 0.1));
        let mut b = Param::new(M::zeros(1, 2));
        let y = linear_forward(&x, &w, Some(&b)).unwrap();
        let ones = M::filled(y.rows(), y.cols(), 1.0);
        linear_backward(&x, &mut w, Some(&mut b), &ones).unwrap();
        assert_eq!(b.grad.data(), &[5.0, 5.0]);
    }

    #[test]
    fn gcn_hand_cases() {
        let l = SparseMatrix::from_dense(&M::from_rows(&[[0.5, 0.5], [0.5, 0.5]]).unwrap());
        let h = M::from_rows(&[[1.0], [0.0]]).unwrap();
        let w = Param::new(M::from_rows(&[[2.0]]).unwrap());
        let (out, _) = gcn_forward(&l, &h, &w, Activation::Identity).unwrap();
        assert_eq!(out.data(), &[1.0, 1.0]);

        let eye = SparseMatrix::<f64>::identity(3);
        let h = M::from_fn(3, 2, |i, j| i as f64 - j as f64);
        let w = Param::new(M::identity(2));
        assert_eq!(gcn_forward(&eye, &h, &w, Activation::Identity).unwrap().0, h);
        let (r, _) = gcn_forward(&eye, &h, &w, Activation::Relu).unwrap();
        assert_eq!(r[(0, 1)], 0.0);
    }

    #[test]
    fn frozen_weight_gets_no_gradient() {
        let x = M::from_fn(2, 2, |i, j| (i + j + 1) as f64);
        let mut w = Param::new(M::identity(2));
        w.frozen = true;
        linear_backward(&x, &mut w, None, &M::filled(2, 2, 1.0)).unwrap();
        assert!(w.grad.data().iter().all(|&g| g == 0.0));
    }
}
