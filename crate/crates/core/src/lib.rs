//! Uplink symbol detection for extra-large MIMO arrays.
//!
//! The array is split into `B` contiguous sub-arrays, each driven by a local
//! processing unit (LPU). Every LPU runs variational message passing on its
//! own antennas, exchanges symbol beliefs with its two neighbours through
//! equality constraints (belief propagation on a chain) and cancels users it
//! is confident about (local SIC). No unit ever sees the whole array.
//!
//! Besides the decentralized receiver the crate ships:
//!
//! - a spatially non-stationary one-ring channel generator with visibility
//!   regions ([`channel`]),
//! - centralized reference receivers: zero-forcing, central VMP and the
//!   matched-filter single-user bound ([`baselines`]),
//! - a reproducible Monte Carlo SER harness and complexity estimators
//!   ([`harness`]).
//!
//! All numerical code is generic over [`Real`] (`f32` or `f64`). The aliases
//! at the crate root fix the scalar to `f64`, which is what the harness and
//! the CLI use.

pub mod baselines;
pub mod channel;
pub mod harness;
pub mod model;
pub mod receiver;

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Scalar type the numerical core is generic over.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync + 'static {
    /// Lossy conversion from an `f64` constant.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    /// Lossy conversion to `f64`, used for reporting.
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Smallest positive value used in place of an exact zero when a finite
    /// logarithm is required.
    #[inline]
    fn tiny() -> Self {
        let t = Self::lit(1e-300);
        if t > Self::zero() {
            t
        } else {
            Self::lit(1e-37)
        }
    }

    #[inline]
    #[allow(clippy::eq_op)]
    fn is_nan(self) -> bool {
        self != self
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex scalar over a [`Real`] base type.
pub type Cx<T> = num_complex::Complex<T>;
/// Complex column vector.
pub type CVector<T> = nalgebra::DVector<Cx<T>>;
/// Complex dense matrix.
pub type CMatrix<T> = nalgebra::DMatrix<Cx<T>>;

pub type C64 = Cx<f64>;
pub type Belief = model::DiscreteBelief<f64>;
pub type Constellation = model::Constellation<f64>;
pub type ChannelRealization = channel::ChannelRealization<f64>;
pub type UserChannelSpec = channel::UserChannelSpec<f64>;
pub type MfBpOutput = receiver::MfBpOutput<f64>;

pub use model::{ModelError, SubArrayIndexing, SystemConfig};
