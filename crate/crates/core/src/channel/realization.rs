use std::f64::consts::FRAC_PI_2;

use rand::Rng;

use super::{build_covariance, sample_vr, ArrayGeometry, ChannelError, ChannelFactor, VisibilityRegion};
use super::sampling::standard_complex_normal;
use crate::model::{Constellation, SystemConfig};
use crate::{CMatrix, CVector, Cx, Real};

/// Large-scale description of one user's channel: azimuth, visibility
/// region, covariance and its square-root factor.
#[derive(Debug, Clone, PartialEq)]
pub struct UserChannelSpec<T: Real> {
    /// Azimuth in radians, `U(-π/2, π/2)`.
    pub theta: f64,
    pub vr: VisibilityRegion,
    pub covariance: CMatrix<T>,
    pub factor: ChannelFactor<T>,
}

impl<T: Real> UserChannelSpec<T> {
    pub fn new(
        theta: f64,
        delta: f64,
        vr: VisibilityRegion,
        geometry: &ArrayGeometry,
    ) -> Result<Self, ChannelError> {
        let covariance = build_covariance(theta, delta, geometry, vr.antennas.clone());
        let factor = ChannelFactor::new(&covariance)?;
        Ok(Self {
            theta,
            vr,
            covariance,
            factor,
        })
    }

    pub fn vr_mask(&self) -> Vec<bool> {
        self.vr.mask(self.covariance.nrows())
    }
}

/// Draws azimuths and visibility regions for all `K` users.
pub fn draw_user_specs<T: Real, R: Rng + ?Sized>(
    config: &SystemConfig,
    rng: &mut R,
) -> Result<Vec<UserChannelSpec<T>>, ChannelError> {
    let geometry = ArrayGeometry::ula(config.m, config.antenna_spacing);
    let (log_mean, log_var) = config.vr_log_params();
    let scale = config.effective_vr_scale();
    (0..config.k)
        .map(|user| {
            let theta = rng.random_range(-FRAC_PI_2..FRAC_PI_2);
            let vr = sample_vr(rng, config.m, log_mean, log_var, scale);
            UserChannelSpec::new(theta, config.delta, vr, &geometry).map_err(|e| e.for_user(user))
        })
        .collect()
}

/// One trial: `y = H x + n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization<T: Real> {
    /// `M × K`, column `k` is user `k`'s channel.
    pub h: CMatrix<T>,
    pub sigma2_n: T,
    pub y: CVector<T>,
    /// Transmitted symbol indices into the constellation.
    pub x_index: Vec<usize>,
    pub x: CVector<T>,
    pub noise: CVector<T>,
}

/// Noise variance for a given SNR with unit received power per user.
pub fn noise_variance(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// Draws fresh small-scale fading for every user plus noise at `snr_db` and
/// assembles the received signal.
pub fn generate_realization<T: Real, R: Rng + ?Sized>(
    specs: &[UserChannelSpec<T>],
    constellation: &Constellation<T>,
    x_index: &[usize],
    snr_db: f64,
    rng: &mut R,
) -> Result<ChannelRealization<T>, ChannelError> {
    if specs.len() != x_index.len() {
        return Err(ChannelError::DimensionMismatch(format!(
            "{} users but {} symbols",
            specs.len(),
            x_index.len()
        )));
    }
    let m = specs.first().map_or(0, |s| s.factor.dim());
    let mut h = CMatrix::zeros(m, specs.len());
    for (k, spec) in specs.iter().enumerate() {
        h.set_column(k, &spec.factor.sample(rng));
    }
    realize(h, constellation, x_index, snr_db, rng)
}

/// Adds symbols and noise to a fixed channel matrix.
pub fn realize<T: Real, R: Rng + ?Sized>(
    h: CMatrix<T>,
    constellation: &Constellation<T>,
    x_index: &[usize],
    snr_db: f64,
    rng: &mut R,
) -> Result<ChannelRealization<T>, ChannelError> {
    if h.ncols() != x_index.len() {
        return Err(ChannelError::DimensionMismatch(format!(
            "H has {} columns but {} symbols were given",
            h.ncols(),
            x_index.len()
        )));
    }
    if let Some(&bad) = x_index.iter().find(|&&i| i >= constellation.len()) {
        return Err(ChannelError::DimensionMismatch(format!(
            "symbol index {bad} outside constellation of size {}",
            constellation.len()
        )));
    }
    let sigma2 = noise_variance(snr_db);
    let sigma = T::lit(sigma2.sqrt());
    let x = CVector::from_iterator(x_index.len(), x_index.iter().map(|&i| constellation.symbol(i)));
    let noise = CVector::from_fn(h.nrows(), |_, _| {
        let w: Cx<T> = standard_complex_normal(rng);
        w.scale(sigma)
    });
    let y = &h * &x + &noise;
    Ok(ChannelRealization {
        h,
        sigma2_n: T::lit(sigma2),
        y,
        x_index: x_index.to_vec(),
        x,
        noise,
    })
}
