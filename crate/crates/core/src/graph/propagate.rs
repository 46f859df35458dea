use super::NormalizedAdj;
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

/// Views `X̄^(1..L)` produced by restart propagation.
#[derive(Clone, Debug, PartialEq)]
pub struct PropagationStack<T> {
    pub views: Vec<DenseMatrix<T>>,
    pub alpha: T,
    pub scales: usize,
}

fn check_restart<T: Scalar>(name: &str, r: T) -> Result<()> {
    if !(r >= T::zero() && r <= T::one()) {
        return Err(Error::arg(format!("{name} = {r} outside [0, 1]")));
    }
    Ok(())
}

/// One restart step `(1 − r)·Ā·prev + r·X`.
fn restart_step<T: Scalar>(
    adj: &NormalizedAdj<T>,
    prev: &DenseMatrix<T>,
    x: &DenseMatrix<T>,
    restart: T,
) -> Result<DenseMatrix<T>> {
    let mut next = adj.matrix.spmm(prev)?;
    next.scale_in_place(T::one() - restart);
    next.scaled_add_assign(restart, x)?;
    Ok(next)
}

/// `X̄^(l) = (1 − α)·Ā·X̄^(l−1) + α·X`, `X̄^(0) = X`, for `l = 1..=scales`.
pub fn propagate_multiscale<T: Scalar>(
    adj: &NormalizedAdj<T>,
    x: &DenseMatrix<T>,
    alpha: T,
    scales: usize,
) -> Result<PropagationStack<T>> {
    if scales == 0 {
        return Err(Error::arg("scale count L must be at least 1"));
    }
    check_restart("alpha", alpha)?;
    let mut views = Vec::with_capacity(scales);
    let mut prev = x.clone();
    for _ in 0..scales {
        let next = restart_step(adj, &prev, x, alpha)?;
        views.push(next.clone());
        prev = next;
    }
    Ok(PropagationStack {
        views,
        alpha,
        scales,
    })
}

/// `T` rounds of restart diffusion with restart probability `beta`.
pub fn diffuse<T: Scalar>(
    adj: &NormalizedAdj<T>,
    x: &DenseMatrix<T>,
    beta: T,
    iterations: usize,
) -> Result<DenseMatrix<T>> {
    if iterations == 0 {
        return Err(Error::arg("diffusion iterations T must be at least 1"));
    }
    check_restart("beta", beta)?;
    let mut cur = x.clone();
    for _ in 0..iterations {
        cur = restart_step(adj, &cur, x, beta)?;
    }
    Ok(cur)
}

/// Diffusion over the enhanced (kNN) graph.
///
/// With `own_iterates` the enhanced graph diffuses its own iterates,
/// `X′^(t+1) = (1 − β)·Ā′·X′^(t) + β·X`. Otherwise the literal variant is
/// used, where each step reads the masked-graph iterate:
/// `X′^(t+1) = (1 − β)·Ā′·X^(t) + β·X`, so only the last step matters.
pub fn diffuse_enhanced<T: Scalar>(
    masked: &NormalizedAdj<T>,
    enhanced: &NormalizedAdj<T>,
    x: &DenseMatrix<T>,
    beta: T,
    iterations: usize,
    own_iterates: bool,
) -> Result<DenseMatrix<T>> {
    if own_iterates {
        return diffuse(enhanced, x, beta, iterations);
    }
    if iterations == 0 {
        return Err(Error::arg("diffusion iterations T must be at least 1"));
    }
    let prev = if iterations == 1 {
        x.clone()
    } else {
        diffuse(masked, x, beta, iterations - 1)?
    };
    restart_step(enhanced, &prev, x, beta)
}
