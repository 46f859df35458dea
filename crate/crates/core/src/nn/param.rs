use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

/// A trainable matrix with its gradient buffer.
#[derive(Clone, Debug, PartialEq)]
pub struct Param<T> {
    pub value: DenseMatrix<T>,
    pub grad: DenseMatrix<T>,
    /// Frozen parameters ignore gradient accumulation and optimizer steps.
    pub frozen: bool,
}

impl<T: Scalar> Param<T> {
    pub fn new(value: DenseMatrix<T>) -> Self {
        let grad = DenseMatrix::zeros(value.rows(), value.cols());
        Self {
            value,
            grad,
            frozen: false,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.value.shape()
    }

    /// Adds `g` to the gradient buffer unless the parameter is frozen.
    pub fn accumulate(&mut self, g: &DenseMatrix<T>) -> Result<()> {
        if g.shape() != self.value.shape() {
            return Err(Error::shape("accumulate", self.value.shape(), g.shape()));
        }
        if !self.frozen {
            self.grad.add_assign(g)?;
        }
        Ok(())
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(T::zero());
    }
}

/// Anything that owns named trainable parameters.
pub trait Parameterized<T: Scalar> {
    fn params(&self) -> Vec<(String, &Param<T>)>;

    fn params_mut(&mut self) -> Vec<(String, &mut Param<T>)>;

    fn zero_grad(&mut self) {
        for (_, p) in self.params_mut() {
            p.zero_grad();
        }
    }

    fn set_frozen(&mut self, frozen: bool) {
        for (_, p) in self.params_mut() {
            p.frozen = frozen;
        }
    }

    /// FNV-1a over the bit patterns of every parameter value. Equal
    /// checksums mean bit-identical parameters (up to hash collisions).
    fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for (name, p) in self.params() {
            for b in name.bytes() {
                h = (h ^ b as u64).wrapping_mul(0x0100_0000_01b3);
            }
            for &x in p.value.data() {
                let bits = x.as_f64().to_bits();
                h = (h ^ bits).wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }
}
