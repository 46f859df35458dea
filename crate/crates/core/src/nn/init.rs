use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Param;
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

/// Glorot-uniform: entries drawn from `U(-a, a)` with `a = √(6 / (fan_in + fan_out))`.
pub fn glorot_uniform<T: Scalar, R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Param<T> {
    assert!(rows > 0 && cols > 0, "parameter dimensions must be positive");
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    let value = DenseMatrix::from_fn(rows, cols, |_, _| T::lit(rng.random_range(-bound..bound)));
    Param::new(value)
}

/// Glorot-uniform parameter from a dedicated seeded stream.
pub fn init_params<T: Scalar>(rows: usize, cols: usize, seed: u64) -> Param<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    glorot_uniform(rows, cols, &mut rng)
}
