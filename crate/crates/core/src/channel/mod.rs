//! Spatially non-stationary one-ring channels with visibility regions.

mod covariance;
pub mod dump;
mod quadrature;
mod realization;
mod sampling;
mod vr;

pub use covariance::{build_covariance, one_ring_correlation, ArrayGeometry};
pub use quadrature::GaussLegendre;
pub use realization::{
    draw_user_specs, generate_realization, noise_variance, realize, ChannelRealization,
    UserChannelSpec,
};
pub use sampling::{sample_channel, standard_complex_normal, ChannelFactor};
pub use vr::{sample_vr, vr_length_from_draw, VisibilityRegion};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("eigendecomposition of covariance failed{}", user.map(|u| format!(" for user {u}")).unwrap_or_default())]
    Eigen { user: Option<usize> },
    #[error("covariance must be square, got {0}x{1}")]
    NotSquare(usize, usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

impl ChannelError {
    pub(crate) fn for_user(self, user: usize) -> Self {
        match self {
            Self::Eigen { .. } => Self::Eigen { user: Some(user) },
            other => other,
        }
    }
}
