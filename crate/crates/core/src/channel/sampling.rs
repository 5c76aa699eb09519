use rand::Rng;
use rand_distr::StandardNormal;

use super::ChannelError;
use crate::{CMatrix, CVector, Cx, Real};

/// Draws one circularly-symmetric `CN(0, 1)` sample.
pub fn standard_complex_normal<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Cx<T> {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Cx::new(T::lit(re * s), T::lit(im * s))
}

/// Square-root factor `F = U √Λ` of a covariance restricted to its support,
/// so that `F w ~ CN(0, R)` for white `w`.
///
/// Rows and columns of `R` that are identically zero are dropped before the
/// eigendecomposition; samples are exactly zero there. Negative eigenvalues
/// (round-off) are clamped to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelFactor<T: Real> {
    dim: usize,
    support: Vec<usize>,
    factor: CMatrix<T>,
}

impl<T: Real> ChannelFactor<T> {
    pub fn new(r: &CMatrix<T>) -> Result<Self, ChannelError> {
        if !r.is_square() {
            return Err(ChannelError::NotSquare(r.nrows(), r.ncols()));
        }
        let dim = r.nrows();
        let zero = Cx::new(T::zero(), T::zero());
        let support: Vec<usize> = (0..dim)
            .filter(|&p| r.row(p).iter().any(|v| *v != zero) || r.column(p).iter().any(|v| *v != zero))
            .collect();
        if support.is_empty() {
            return Ok(Self {
                dim,
                support,
                factor: CMatrix::zeros(0, 0),
            });
        }
        let n = support.len();
        let sub = CMatrix::from_fn(n, n, |i, j| r[(support[i], support[j])]);
        let hermitian = (&sub + sub.adjoint()).scale(T::lit(0.5));
        let eig = hermitian
            .try_symmetric_eigen(T::default_epsilon(), 10_000)
            .ok_or(ChannelError::Eigen { user: None })?;
        let mut factor = eig.eigenvectors;
        for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
            if lambda.is_nan() {
                return Err(ChannelError::Eigen { user: None });
            }
            let s = if lambda > T::zero() { lambda.sqrt() } else { T::zero() };
            factor.column_mut(j).scale_mut(s);
        }
        Ok(Self { dim, support, factor })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// `F F^H`, i.e. the covariance the factor reproduces.
    pub fn covariance(&self) -> CMatrix<T> {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        let inner = &self.factor * self.factor.adjoint();
        for (i, &p) in self.support.iter().enumerate() {
            for (j, &q) in self.support.iter().enumerate() {
                out[(p, q)] = inner[(i, j)];
            }
        }
        out
    }

    /// Draws `h ~ CN(0, R)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> CVector<T> {
        let mut h = CVector::zeros(self.dim);
        let n = self.support.len();
        if n == 0 {
            return h;
        }
        let w = CVector::from_fn(n, |_, _| standard_complex_normal::<T, _>(rng));
        let local = &self.factor * w;
        for (i, &p) in self.support.iter().enumerate() {
            h[p] = local[i];
        }
        h
    }
}

/// Draws one channel vector `h ~ CN(0, R)`.
pub fn sample_channel<T: Real, R: Rng + ?Sized>(
    r: &CMatrix<T>,
    rng: &mut R,
) -> Result<CVector<T>, ChannelError> {
    Ok(ChannelFactor::new(r)?.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_covariance_gives_zero_channel() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = sample_channel(&CMatrix::<f64>::zeros(5, 5), &mut rng).unwrap();
        assert!(h.iter().all(|v| *v == Cx::new(0.0, 0.0)));
    }

    #[test]
    fn identity_on_vr_has_unit_variance_and_exact_zeros() {
        let mut r = CMatrix::<f64>::zeros(6, 6);
        for p in 1..4 {
            r[(p, p)] = Cx::new(1.0, 0.0);
        }
        let f = ChannelFactor::new(&r).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 10_000;
        let mut power = [0.0; 6];
        for _ in 0..n {
            let h = f.sample(&mut rng);
            for p in 0..6 {
                power[p] += h[p].norm_sqr();
            }
            assert_eq!(h[0], Cx::new(0.0, 0.0));
            assert_eq!(h[5], Cx::new(0.0, 0.0));
        }
        for p in 1..4 {
            let v = power[p] / n as f64;
            assert!((v - 1.0).abs() < 0.05, "antenna {p}: {v}");
        }
    }

    #[test]
    fn factor_reproduces_rank_deficient_covariance() {
        // rank one: v v^H
        let v = CVector::from_vec(vec![Cx::new(1.0, 0.0), Cx::new(0.0, 1.0), Cx::new(-0.5, 0.5)]);
        let r = &v * v.adjoint();
        let f = ChannelFactor::new(&r).unwrap();
        assert!((f.covariance() - &r).norm() < 1e-10);
    }
}
