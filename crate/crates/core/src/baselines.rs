//! Centralized reference receivers: they see the whole array at once.

use nalgebra::ComplexField;
use rand::Rng;

use crate::model::{Constellation, LambdaInit, Schedule};
use crate::receiver::{MfBpOutput, MfBpParams, MfBpReceiver, ReceiverError, INVISIBLE_NORM2};
use crate::{CMatrix, CVector, Cx, Real};

/// Zero-forcing decisions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZfOutput {
    pub decisions: Vec<usize>,
    /// `H` was numerically rank-deficient and a ridge term was added.
    pub regularized: bool,
}

/// Relative pivot size below which `R` from the QR factorization counts as
/// singular.
const RANK_TOL: f64 = 1e-10;
/// Ridge weight relative to the mean Gram diagonal in the fallback solve.
const RIDGE: f64 = 1e-10;

/// Unconstrained least-squares estimate `argmin ||y - Hx||` followed by
/// per-entry nearest-symbol mapping.
///
/// Solved through a QR factorization. If `H` is rank-deficient the solve
/// falls back to `(H^H H + δI) x = H^H y` with `δ = 1e-10 · tr(H^H H) / K`.
pub fn zf_detect<T: Real>(h: &CMatrix<T>, y: &CVector<T>, constellation: &Constellation<T>) -> ZfOutput {
    assert_eq!(h.nrows(), y.len(), "H and y disagree on the antenna count");
    let (x_hat, regularized) = zf_estimate(h, y);
    ZfOutput {
        decisions: x_hat.iter().map(|&z| constellation.nearest(z)).collect(),
        regularized,
    }
}

/// The soft ZF estimate and whether the ridge fallback was needed.
pub fn zf_estimate<T: Real>(h: &CMatrix<T>, y: &CVector<T>) -> (CVector<T>, bool) {
    let k = h.ncols();
    if k == 0 {
        return (CVector::zeros(0), false);
    }
    if h.nrows() >= k {
        let qr = h.clone().qr();
        let r = qr.r();
        let scale = (0..k).fold(T::zero(), |acc, i| acc.max(r[(i, i)].modulus()));
        let well_posed = scale > T::zero() && (0..k).all(|i| r[(i, i)].modulus() > T::lit(RANK_TOL) * scale);
        if well_posed {
            let rhs = qr.q().adjoint() * y;
            if let Some(x) = r.solve_upper_triangular(&rhs) {
                return (x, false);
            }
        }
    }
    let mut gram = h.adjoint() * h;
    let trace = (0..k).fold(T::zero(), |acc, i| acc + gram[(i, i)].re);
    let delta = (T::lit(RIDGE) * trace / T::lit(k as f64)).max(T::tiny());
    for i in 0..k {
        gram[(i, i)] += Cx::new(delta, T::zero());
    }
    let rhs = h.adjoint() * y;
    let x = match gram.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => gram.lu().solve(&rhs).unwrap_or_else(|| CVector::zeros(k)),
    };
    (x, true)
}

/// Receiver parameters of the central VMP baseline: the chain collapsed to a
/// single LPU covering the whole array, SIC off, `iterations` VMP iterations
/// after one MRC initialization.
pub fn central_vmp_params(iterations: usize, lambda_init: LambdaInit) -> MfBpParams {
    MfBpParams {
        sub_arrays: 1,
        inner_iterations: iterations,
        outer_iterations: 1,
        gamma_thr: f64::INFINITY,
        schedule: Schedule::Sequential,
        lambda_init,
        record_trace: false,
        record_messages: false,
    }
}

/// Central VMP over the full array; decisions are `output.decisions[0]`.
pub fn central_vmp<T: Real>(
    h: &CMatrix<T>,
    y: &CVector<T>,
    constellation: &Constellation<T>,
    iterations: usize,
    lambda_init: LambdaInit,
    noise_var: Option<T>,
) -> Result<MfBpOutput<T>, ReceiverError> {
    MfBpReceiver::new(central_vmp_params(iterations, lambda_init), constellation.clone())?.detect(h, y, noise_var)
}

/// Where the single-user bound takes its noise from.
pub enum BoundNoise<'a, T: Real, R: Rng + ?Sized> {
    /// Reuse the trial's noise vector for every user.
    Shared(&'a CVector<T>),
    /// Draw an independent `CN(0, σ² I)` vector per user.
    Fresh { sigma2: T, rng: &'a mut R },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundOutput {
    pub decisions: Vec<usize>,
    /// Users with an all-zero channel; their decision is a random symbol.
    pub erasures: Vec<usize>,
}

/// Matched-filter single-user bound: every user is detected as if all other
/// users had been cancelled perfectly, `x̂_k = nearest(h_k^H (h_k x_k + n) / ||h_k||²)`.
///
/// `rng` supplies the random decisions for erased users.
pub fn single_user_bound<T: Real, R: Rng + ?Sized>(
    h: &CMatrix<T>,
    x_index: &[usize],
    constellation: &Constellation<T>,
    mut noise: BoundNoise<'_, T, R>,
    rng: &mut impl Rng,
) -> BoundOutput {
    assert_eq!(h.ncols(), x_index.len(), "one symbol per user");
    let mut out = BoundOutput {
        decisions: Vec::with_capacity(x_index.len()),
        erasures: Vec::new(),
    };
    for (k, &xi) in x_index.iter().enumerate() {
        let col = h.column(k);
        let n = match &mut noise {
            BoundNoise::Shared(n) => (*n).clone(),
            BoundNoise::Fresh { sigma2, rng } => {
                let s = sigma2.sqrt();
                CVector::from_fn(h.nrows(), |_, _| {
                    crate::channel::standard_complex_normal::<T, R>(rng).scale(s)
                })
            }
        };
        let n2 = col.norm_squared();
        if n2 < T::lit(INVISIBLE_NORM2) {
            out.erasures.push(k);
            out.decisions.push(rng.random_range(0..constellation.len()));
            continue;
        }
        let y_k = col * constellation.symbol(xi) + n;
        let z = col.dotc(&y_k).unscale(n2);
        out.decisions.push(constellation.nearest(z));
    }
    out
}
