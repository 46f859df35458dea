use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

/// Squared Frobenius distance and its gradient with respect to `pred`.
pub fn frobenius_loss<T: Scalar>(
    pred: &DenseMatrix<T>,
    target: &DenseMatrix<T>,
) -> Result<(T, DenseMatrix<T>)> {
    let diff = pred.sub(target)?;
    let loss = diff.frobenius_sq();
    if !loss.is_finite() {
        return Err(Error::Value("non-finite reconstruction loss".into()));
    }
    Ok((loss, diff.scale(T::lit(2.0))))
}

/// Squared error restricted to the listed rows; other rows get zero gradient.
pub fn masked_row_loss<T: Scalar>(
    pred: &DenseMatrix<T>,
    target: &DenseMatrix<T>,
    rows: &[usize],
) -> Result<(T, DenseMatrix<T>)> {
    if pred.shape() != target.shape() {
        return Err(Error::shape("masked_row_loss", pred.shape(), target.shape()));
    }
    let mut grad = DenseMatrix::zeros(pred.rows(), pred.cols());
    let mut loss = T::zero();
    let two = T::lit(2.0);
    for &i in rows {
        if i >= pred.rows() {
            return Err(Error::Index {
                id: i,
                n: pred.rows(),
            });
        }
        for ((g, &p), &t) in grad.row_mut(i).iter_mut().zip(pred.row(i)).zip(target.row(i)) {
            let d = p - t;
            loss += d * d;
            *g = two * d;
        }
    }
    if !loss.is_finite() {
        return Err(Error::Value("non-finite reconstruction loss".into()));
    }
    Ok((loss, grad))
}
