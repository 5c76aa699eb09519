use crate::{Cx, Real};

use super::{Constellation, ModelError};

/// Probability mass function over a constellation.
///
/// Every constructor normalizes, so a `DiscreteBelief` always sums to one.
/// Products and quotients of beliefs are carried out on log-weights with the
/// maximum subtracted before exponentiation.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteBelief<T: Real> {
    pmf: Vec<T>,
}

/// Normalizes non-negative weights into a belief.
///
/// An all-zero input is reported as [`ModelError::Underflow`]; callers fall
/// back to the uniform belief.
pub fn normalize<T: Real>(weights: &[T]) -> Result<DiscreteBelief<T>, ModelError> {
    if weights.is_empty() {
        return Err(ModelError::InvalidArgument("empty pmf".into()));
    }
    let mut total = T::zero();
    for &w in weights {
        if !(w >= T::zero()) || !w.is_finite() {
            return Err(ModelError::InvalidArgument(format!(
                "pmf weight {} is negative or not finite",
                w.to_f64_lossy()
            )));
        }
        total += w;
    }
    if total <= T::zero() {
        return Err(ModelError::Underflow);
    }
    Ok(DiscreteBelief {
        pmf: weights.iter().map(|&w| w / total).collect(),
    })
}

/// Projects a complex Gaussian `CN(mean, variance)` onto the alphabet:
/// `p(a_i) ∝ exp(-|a_i - mean|² / variance)`.
pub fn gaussian_to_belief<T: Real>(
    mean: Cx<T>,
    variance: T,
    constellation: &Constellation<T>,
) -> Result<DiscreteBelief<T>, ModelError> {
    if !(variance > T::zero()) {
        return Err(ModelError::InvalidArgument(format!(
            "variance must be positive, got {}",
            variance.to_f64_lossy()
        )));
    }
    let logs: Vec<T> = constellation
        .symbols()
        .iter()
        .map(|a| -(*a - mean).norm_sqr() / variance)
        .collect();
    DiscreteBelief::from_log_weights(&logs)
}

impl<T: Real> DiscreteBelief<T> {
    pub fn uniform(size: usize) -> Self {
        assert!(size > 0, "belief over an empty alphabet");
        let p = T::one() / T::lit(size as f64);
        Self { pmf: vec![p; size] }
    }

    /// Hard belief concentrated on `index`.
    pub fn delta(size: usize, index: usize) -> Self {
        assert!(index < size, "delta index {index} out of range {size}");
        let mut pmf = vec![T::zero(); size];
        pmf[index] = T::one();
        Self { pmf }
    }

    /// Belief from unnormalized log-weights. `-inf` entries become exact zeros.
    pub fn from_log_weights(logs: &[T]) -> Result<Self, ModelError> {
        if logs.is_empty() {
            return Err(ModelError::InvalidArgument("empty pmf".into()));
        }
        let max = logs.iter().copied().fold(neg_inf::<T>(), |a, b| a.max(b));
        if max.is_nan() || logs.iter().any(|l| l.is_nan() || *l == pos_inf::<T>()) {
            return Err(ModelError::InvalidArgument("log-weight is NaN or +inf".into()));
        }
        if max == neg_inf::<T>() {
            return Err(ModelError::Underflow);
        }
        let weights: Vec<T> = logs
            .iter()
            .map(|&l| if l == neg_inf::<T>() { T::zero() } else { (l - max).exp() })
            .collect();
        normalize(&weights)
    }

    pub fn probs(&self) -> &[T] {
        &self.pmf
    }

    pub fn len(&self) -> usize {
        self.pmf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pmf.is_empty()
    }

    /// Natural logarithm of every entry; zeros map to `-inf`.
    pub fn log_probs(&self) -> Vec<T> {
        self.pmf.iter().map(|&p| safe_ln(p)).collect()
    }

    /// Most probable symbol index, lowest index on ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.pmf.iter().enumerate().skip(1) {
            if p > self.pmf[best] {
                best = i;
            }
        }
        best
    }

    /// `Some(i)` when the belief is a delta on symbol `i`.
    pub fn hard_index(&self) -> Option<usize> {
        let i = self.argmax();
        let rest_zero = self
            .pmf
            .iter()
            .enumerate()
            .all(|(j, &p)| j == i || p == T::zero());
        (self.pmf[i] == T::one() && rest_zero).then_some(i)
    }

    pub fn is_hard(&self) -> bool {
        self.hard_index().is_some()
    }

    /// Mean symbol `Σ a_i p_i`.
    pub fn mean(&self, constellation: &Constellation<T>) -> Cx<T> {
        debug_assert_eq!(self.len(), constellation.len());
        self.pmf
            .iter()
            .zip(constellation.symbols())
            .fold(Cx::new(T::zero(), T::zero()), |acc, (&p, a)| acc + a.scale(p))
    }

    /// Symbol variance `Σ |a_i|² p_i - |mean|²`, clamped at zero.
    pub fn variance(&self, constellation: &Constellation<T>) -> T {
        let second = self
            .pmf
            .iter()
            .zip(constellation.symbols())
            .fold(T::zero(), |acc, (&p, a)| acc + a.norm_sqr() * p);
        (second - self.mean(constellation).norm_sqr()).max(T::zero())
    }

    /// Largest absolute difference between two beliefs of equal size.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.pmf
            .iter()
            .zip(&other.pmf)
            .fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs()))
    }
}

#[inline]
pub(crate) fn neg_inf<T: Real>() -> T {
    T::lit(f64::NEG_INFINITY)
}

#[inline]
pub(crate) fn pos_inf<T: Real>() -> T {
    T::lit(f64::INFINITY)
}

#[inline]
pub(crate) fn safe_ln<T: Real>(p: T) -> T {
    if p > T::zero() {
        p.ln()
    } else {
        neg_inf()
    }
}
