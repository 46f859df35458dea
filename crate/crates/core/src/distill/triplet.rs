use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

/// `(anchor, positive, negative)` node indices; anchor and positive are
/// the same node seen by student and teacher.
pub type Triplet = (usize, usize, usize);

/// `Σ max(0, ‖p − a‖² − ‖n − a‖² + m)` over rows, with the gradient with
/// respect to the anchors. Positives and negatives get no gradient.
pub fn triplet_loss<T: Scalar>(
    anchor: &DenseMatrix<T>,
    positive: &DenseMatrix<T>,
    negative: &DenseMatrix<T>,
    margin: T,
) -> Result<(T, DenseMatrix<T>)> {
    for other in [positive, negative] {
        if other.shape() != anchor.shape() {
            return Err(Error::arg(format!(
                "triplet inputs differ in shape: {:?} vs {:?}",
                anchor.shape(),
                other.shape()
            )));
        }
    }
    let mut grad = DenseMatrix::zeros(anchor.rows(), anchor.cols());
    let mut loss = T::zero();
    for r in 0..anchor.rows() {
        let hinge = hinge_row(anchor.row(r), positive.row(r), negative.row(r), margin);
        if hinge > T::zero() {
            loss += hinge;
            anchor_grad(grad.row_mut(r), positive.row(r), negative.row(r), T::one());
        }
    }
    Ok((loss, grad))
}

fn hinge_row<T: Scalar>(a: &[T], p: &[T], n: &[T], margin: T) -> T {
    let mut dp = T::zero();
    let mut dn = T::zero();
    for ((&av, &pv), &nv) in a.iter().zip(p).zip(n) {
        dp += (pv - av) * (pv - av);
        dn += (nv - av) * (nv - av);
    }
    dp - dn + margin
}

/// `∂/∂a (‖p − a‖² − ‖n − a‖²) = 2(n − p)`
fn anchor_grad<T: Scalar>(out: &mut [T], p: &[T], n: &[T], weight: T) {
    let two = T::lit(2.0) * weight;
    for ((o, &pv), &nv) in out.iter_mut().zip(p).zip(n) {
        *o += two * (nv - pv);
    }
}

/// `count` triplets; anchors cycle through the nodes and each negative is
/// uniform over the nodes other than its anchor.
pub fn sample_triplets(n: usize, count: usize, seed: u64) -> Result<Vec<Triplet>> {
    if n < 2 {
        return Err(Error::arg("triplet sampling needs at least two nodes"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|t| {
            let a = t % n;
            let r = rng.random_range(0..n - 1);
            (a, a, if r >= a { r + 1 } else { r })
        })
        .collect())
}

/// Triplet loss of student embeddings against a frozen teacher's, summed
/// over `triplets`, with `weight·∂L/∂student` accumulated into `grad`.
pub fn triplet_distill<T: Scalar>(
    student: &DenseMatrix<T>,
    teacher: &DenseMatrix<T>,
    triplets: &[Triplet],
    margin: T,
    weight: T,
    grad: &mut DenseMatrix<T>,
) -> Result<T> {
    if student.shape() != teacher.shape() {
        return Err(Error::Config(format!(
            "student embedding {:?} and teacher embedding {:?} differ",
            student.shape(),
            teacher.shape()
        )));
    }
    if grad.shape() != student.shape() {
        return Err(Error::shape("triplet_distill", student.shape(), grad.shape()));
    }
    let mut loss = T::zero();
    for &(a, p, n) in triplets {
        let hinge = hinge_row(student.row(a), teacher.row(p), teacher.row(n), margin);
        if hinge > T::zero() {
            loss += hinge;
            anchor_grad(grad.row_mut(a), teacher.row(p), teacher.row(n), weight);
        }
    }
    Ok(loss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{grad_check, Differentiable, Param, Parameterized};

    type M = DenseMatrix<f64>;

    #[test]
    fn hand_cases() {
        let a = M::from_rows(&[[0.0, 0.0]]).unwrap();
        // d(a,p)² = 0, d(a,n)² = 4, m = 1
        let (l, g) = triplet_loss(&a, &a, &M::from_rows(&[[2.0, 0.0]]).unwrap(), 1.0).unwrap();
        assert_eq!(l, 0.0);
        assert_eq!(g.max_abs(), 0.0);
        // d(a,p)² = 1, d(a,n)² = 0.5, m = 0.2
        let p = M::from_rows(&[[1.0, 0.0]]).unwrap();
        let n = M::from_rows(&[[0.5, 0.5]]).unwrap();
        let (l, _) = triplet_loss(&a, &p, &n, 0.2).unwrap();
        assert!((l - 0.7).abs() < 1e-15);
        // m = 0, p = n
        assert_eq!(triplet_loss(&a, &p, &p, 0.0).unwrap().0, 0.0);
    }

    #[test]
    fn shape_mismatch() {
        let a = M::zeros(2, 2);
        assert!(matches!(triplet_loss(&a, &M::zeros(2, 3), &a, 0.1), Err(Error::Argument(_))));
    }

    #[test]
    fn two_nodes_negative_is_the_other() {
        for (a, p, n) in sample_triplets(2, 50, 3).unwrap() {
            assert_eq!(a, p);
            assert_eq!(n, 1 - a);
        }
        assert!(sample_triplets(1, 5, 0).is_err());
        assert_eq!(sample_triplets(7, 30, 9).unwrap(), sample_triplets(7, 30, 9).unwrap());
    }

    #[test]
    fn negatives_are_uniform() {
        // χ² goodness of fit over the 9 non-anchor nodes of anchor 0.
        let n = 10;
        let draws = 10_000;
        let triplets = sample_triplets(n, draws * n, 11).unwrap();
        let mut counts = [0usize; 10];
        for &(a, _, neg) in triplets.iter().filter(|t| t.0 == 0) {
            assert_ne!(a, neg);
            counts[neg] += 1;
        }
        let expected = draws as f64 / 9.0;
        let chi2: f64 = counts[1..].iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // 99.9th percentile of χ² with 8 degrees of freedom
        assert!(chi2 < 26.12, "chi2 = {chi2}");
    }

    struct Student {
        emb: Param<f64>,
        teacher: M,
        triplets: Vec<Triplet>,
    }

    impl Parameterized<f64> for Student {
        fn params(&self) -> Vec<(String, &Param<f64>)> {
            vec![("emb".into(), &self.emb)]
        }
        fn params_mut(&mut self) -> Vec<(String, &mut Param<f64>)> {
            vec![("emb".into(), &mut self.emb)]
        }
    }

    impl Differentiable<f64> for Student {
        fn loss_and_grad(&mut self) -> Result<f64> {
            let mut g = M::zeros(self.emb.value.rows(), self.emb.value.cols());
            let l = triplet_distill(&self.emb.value, &self.teacher, &self.triplets, 0.3, 1.0, &mut g)?;
            self.emb.grad = g;
            Ok(l)
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let emb = Param::new(M::from_fn(6, 3, |i, j| ((i * 5 + j * 7) % 11) as f64 * 0.13 - 0.6));
        let teacher = M::from_fn(6, 3, |i, j| ((i * 3 + j * 2) % 7) as f64 * 0.21 - 0.5);
        let mut s = Student { emb, teacher, triplets: sample_triplets(6, 12, 1).unwrap() };
        let r = grad_check(&mut s, 1e-5, 100).unwrap();
        assert!(r.max_rel_error < 1e-6, "{r:?}");
    }
}
