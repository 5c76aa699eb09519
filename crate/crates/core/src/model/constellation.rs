use crate::{Cx, Real};

use super::ModelError;

/// Finite complex symbol alphabet with a uniform prior.
///
/// Symbols are stored in a fixed order; every belief over the alphabet is
/// indexed by that order.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation<T: Real> {
    symbols: Vec<Cx<T>>,
}

impl<T: Real> Constellation<T> {
    /// Builds an alphabet from explicit points.
    ///
    /// The points must be pairwise distinct, at least two, and have unit
    /// average energy (within `1e-12` for `f64`, scaled for narrower types).
    pub fn new(symbols: Vec<Cx<T>>) -> Result<Self, ModelError> {
        if symbols.len() < 2 {
            return Err(ModelError::InvalidConstellation(format!(
                "need at least 2 symbols, got {}",
                symbols.len()
            )));
        }
        for i in 0..symbols.len() {
            for j in (i + 1)..symbols.len() {
                if symbols[i] == symbols[j] {
                    return Err(ModelError::InvalidConstellation(format!(
                        "symbols {i} and {j} coincide"
                    )));
                }
            }
        }
        let energy = symbols.iter().map(|s| s.norm_sqr()).fold(T::zero(), |a, b| a + b)
            / T::lit(symbols.len() as f64);
        let tol = T::lit(1e-12).max(T::default_epsilon() * T::lit(16.0));
        if (energy - T::one()).abs() > tol {
            return Err(ModelError::InvalidConstellation(format!(
                "average symbol energy is {}, expected 1",
                energy.to_f64_lossy()
            )));
        }
        Ok(Self { symbols })
    }

    /// Gray-labelled QPSK, `(±1 ± i)/√2`.
    ///
    /// Index `i` carries the bit pair `(b1, b0)` of `i`: `b0` selects the sign
    /// of the real part and `b1` the sign of the imaginary part, so the order
    /// is `[(+,+), (-,+), (+,-), (-,-)]`. Neighbouring points differ in one
    /// bit.
    pub fn qpsk() -> Self {
        let a = T::one() / T::lit(2.0).sqrt();
        let sign = |bit: usize| if bit == 0 { a } else { -a };
        let symbols = (0..4).map(|i| Cx::new(sign(i & 1), sign((i >> 1) & 1))).collect();
        Self { symbols }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[Cx<T>] {
        &self.symbols
    }

    pub fn symbol(&self, index: usize) -> Cx<T> {
        self.symbols[index]
    }

    /// Index of the symbol closest to `z`; ties resolve to the lowest index.
    pub fn nearest(&self, z: Cx<T>) -> usize {
        let mut best = 0;
        let mut best_dist = (self.symbols[0] - z).norm_sqr();
        for (i, s) in self.symbols.iter().enumerate().skip(1) {
            let d = (*s - z).norm_sqr();
            if d < best_dist {
                best = i;
                best_dist = d;
            }
        }
        best
    }

    /// Converts the alphabet to another scalar type.
    pub fn cast<U: Real>(&self) -> Constellation<U> {
        Constellation {
            symbols: self
                .symbols
                .iter()
                .map(|s| Cx::new(U::lit(s.re.to_f64_lossy()), U::lit(s.im.to_f64_lossy())))
                .collect(),
        }
    }
}
