//! Message algebra between the observation factor, the LPU symbol variables
//! and the equality constraints linking neighbouring LPUs.

use crate::model::{gaussian_to_belief, neg_inf, pos_inf, safe_ln, Constellation, DiscreteBelief, ModelError};
use crate::{Cx, Real};

/// Mean-field message from an LPU's observation factor to one symbol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MfMessage<T: Real> {
    /// `CN(x; mean, variance)` restricted to the alphabet.
    Gaussian { mean: Cx<T>, variance: T },
    /// The user is invisible to this sub-array; the message is constant.
    Flat,
}

impl<T: Real> MfMessage<T> {
    /// Log-density of the message at every symbol, up to a constant.
    pub fn log_weights(&self, constellation: &Constellation<T>) -> Vec<T> {
        match *self {
            Self::Gaussian { mean, variance } => constellation
                .symbols()
                .iter()
                .map(|a| -(*a - mean).norm_sqr() / variance)
                .collect(),
            Self::Flat => vec![T::zero(); constellation.len()],
        }
    }

    /// The message on its own as a belief.
    pub fn to_belief(&self, constellation: &Constellation<T>) -> Result<DiscreteBelief<T>, ModelError> {
        match *self {
            Self::Gaussian { mean, variance } => gaussian_to_belief(mean, variance, constellation),
            Self::Flat => Ok(DiscreteBelief::uniform(constellation.len())),
        }
    }
}

/// Result of a belief update together with the pathology it hit, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct Combined<T: Real> {
    pub belief: DiscreteBelief<T>,
    /// The neighbour messages ruled out every symbol the MF message allows;
    /// the MF message was used alone.
    pub conflict: bool,
}

/// Local symbol belief: the MF message times the messages arriving from the
/// left and right neighbours. The leftmost LPU passes the symbol prior as
/// `left`; the rightmost has no `right` message.
pub fn combine_belief<T: Real>(
    mf: &MfMessage<T>,
    left: &DiscreteBelief<T>,
    right: Option<&DiscreteBelief<T>>,
    constellation: &Constellation<T>,
) -> Result<Combined<T>, ModelError> {
    let mut logs = mf.log_weights(constellation);
    for (i, l) in logs.iter_mut().enumerate() {
        *l += safe_ln(left.probs()[i]);
        if let Some(r) = right {
            *l += safe_ln(r.probs()[i]);
        }
    }
    match DiscreteBelief::from_log_weights(&logs) {
        Ok(belief) => Ok(Combined {
            belief,
            conflict: false,
        }),
        Err(ModelError::Underflow) => Ok(Combined {
            belief: mf.to_belief(constellation)?,
            conflict: true,
        }),
        Err(e) => Err(e),
    }
}

/// Outgoing BP message towards one neighbour: the local belief divided by
/// the message that neighbour sent, `n ∝ q / m`.
///
/// The equality factor passes this quotient through unchanged. Where `q` is
/// zero the result is zero. Where `q > 0` but `incoming` is zero, the
/// quotient is saturated by substituting the smallest positive value for
/// the zero, and `saturated` is set.
pub fn bp_outgoing<T: Real>(
    q: &DiscreteBelief<T>,
    incoming: &DiscreteBelief<T>,
) -> Result<(DiscreteBelief<T>, bool), ModelError> {
    let mut saturated = false;
    let logs: Vec<T> = q
        .probs()
        .iter()
        .zip(incoming.probs())
        .map(|(&qi, &mi)| {
            if qi <= T::zero() {
                neg_inf()
            } else if mi <= T::zero() {
                saturated = true;
                qi.ln() - T::tiny().ln()
            } else {
                qi.ln() - mi.ln()
            }
        })
        .collect();
    Ok((DiscreteBelief::from_log_weights(&logs)?, saturated))
}

/// Likelihood-ratio metric: largest over second-largest probability,
/// `+inf` when the runner-up is zero.
pub fn lr_metric<T: Real>(q: &DiscreteBelief<T>) -> T {
    let (mut p1, mut p2) = (T::zero(), T::zero());
    for &p in q.probs() {
        if p > p1 {
            p2 = p1;
            p1 = p;
        } else if p > p2 {
            p2 = p;
        }
    }
    if p2 <= T::zero() {
        pos_inf()
    } else {
        p1 / p2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::normalize;

    fn c() -> Constellation<f64> {
        Constellation::qpsk()
    }

    #[test]
    fn neutral_neighbours_reduce_to_projection() {
        let mf = MfMessage::Gaussian {
            mean: Cx::new(0.3, -0.8),
            variance: 0.7,
        };
        let u = DiscreteBelief::uniform(4);
        let q = combine_belief(&mf, &u, Some(&u), &c()).unwrap();
        let g = gaussian_to_belief(Cx::new(0.3, -0.8), 0.7, &c()).unwrap();
        assert!(q.belief.max_abs_diff(&g) < 1e-15);
        assert!(!q.conflict);
    }

    #[test]
    fn delta_from_the_left_is_absorbed() {
        let mf = MfMessage::Gaussian {
            mean: Cx::new(0.7, 0.7),
            variance: 0.1,
        };
        let left = DiscreteBelief::delta(4, 1);
        let q = combine_belief(&mf, &left, None, &c()).unwrap();
        assert_eq!(q.belief.hard_index(), Some(1));
    }

    #[test]
    fn generic_product_matches_pointwise_multiplication() {
        let mean = Cx::new(-0.2, 0.4);
        let var = 0.9;
        let left = normalize(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        let right = normalize(&[0.5, 0.1, 0.3, 0.1]).unwrap();
        let mf = MfMessage::Gaussian { mean, variance: var };
        let q = combine_belief(&mf, &left, Some(&right), &c()).unwrap();
        // explicit four-point multiply
        let raw: Vec<f64> = c()
            .symbols()
            .iter()
            .enumerate()
            .map(|(i, a)| (-(a - mean).norm_sqr() / var).exp() * left.probs()[i] * right.probs()[i])
            .collect();
        let total: f64 = raw.iter().sum();
        for (p, r) in q.belief.probs().iter().zip(&raw) {
            assert!((p - r / total).abs() < 1e-14);
        }
    }

    #[test]
    fn conflicting_deltas_fall_back_to_mf() {
        let mf = MfMessage::Gaussian {
            mean: Cx::new(0.7, -0.7),
            variance: 0.5,
        };
        let q = combine_belief(&mf, &DiscreteBelief::delta(4, 0), Some(&DiscreteBelief::delta(4, 3)), &c())
            .unwrap();
        assert!(q.conflict);
        assert_eq!(q.belief.argmax(), 2);
    }

    #[test]
    fn flat_message_passes_neighbours_through() {
        let left = normalize(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        let q = combine_belief(&MfMessage::Flat, &left, None, &c()).unwrap();
        assert!(q.belief.max_abs_diff(&left) < 1e-15);
    }

    #[test]
    fn outgoing_examples() {
        let u = DiscreteBelief::<f64>::uniform(4);
        let (o, s) = bp_outgoing(&u, &u).unwrap();
        assert!(o.max_abs_diff(&u) < 1e-15 && !s);
        let d = DiscreteBelief::delta(4, 0);
        assert_eq!(bp_outgoing(&d, &u).unwrap().0.hard_index(), Some(0));
        let q = normalize(&[0.4, 0.3, 0.2, 0.1]).unwrap();
        let (o, _) = bp_outgoing(&q, &u).unwrap();
        assert!(o.max_abs_diff(&q) < 1e-15);
    }

    #[test]
    fn outgoing_divides_out_the_incoming_message() {
        let q = normalize(&[0.4, 0.3, 0.2, 0.1]).unwrap();
        let m = normalize(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        let (o, s) = bp_outgoing(&q, &m).unwrap();
        assert!(!s);
        let raw = [4.0, 1.5, 2.0 / 3.0, 0.25];
        let total: f64 = raw.iter().sum();
        for (p, r) in o.probs().iter().zip(raw) {
            assert!((p - r / total).abs() < 1e-14);
        }
    }

    #[test]
    fn outgoing_saturates_on_zero_incoming() {
        let q = normalize(&[0.5, 0.5, 0.0, 0.0]).unwrap();
        let m = normalize(&[0.0, 1.0, 0.0, 0.0]).unwrap();
        let (o, s) = bp_outgoing(&q, &m).unwrap();
        assert!(s);
        assert_eq!(o.argmax(), 0);
        assert_eq!(o.probs()[2], 0.0);
        let total: f64 = o.probs().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lr_metric_examples() {
        assert_eq!(lr_metric(&DiscreteBelief::<f64>::uniform(4)), 1.0);
        assert_eq!(lr_metric(&DiscreteBelief::<f64>::delta(4, 2)), f64::INFINITY);
        let q = normalize(&[0.999, 0.0005, 0.0004, 0.0001]).unwrap();
        let g: f64 = lr_metric(&q);
        assert!((g - 1998.0).abs() < 1e-9);
        assert!(g > 1e3);
    }
}
