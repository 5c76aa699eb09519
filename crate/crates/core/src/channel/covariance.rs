use std::collections::HashMap;
use std::f64::consts::PI;
use std::ops::Range;

use num_complex::Complex64;

use super::quadrature::GaussLegendre;
use crate::{CMatrix, Cx, Real};

/// Nodes per Gauss–Legendre panel.
const PANEL_NODES: usize = 64;
/// Largest phase excursion (radians) a single panel has to resolve.
const PANEL_PHASE: f64 = 16.0;

/// Antenna positions in wavelengths.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    positions: Vec<[f64; 2]>,
}

impl ArrayGeometry {
    /// Uniform linear array along the x axis.
    pub fn ula(antennas: usize, spacing: f64) -> Self {
        Self {
            positions: (0..antennas).map(|p| [p as f64 * spacing, 0.0]).collect(),
        }
    }

    pub fn from_positions(positions: Vec<[f64; 2]>) -> Self {
        Self { positions }
    }

    pub fn positions(&self) -> &[[f64; 2]] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// One-ring correlation between two antennas separated by `d` wavelengths:
/// `(1/2Δ) ∫_{-Δ}^{Δ} exp(j f(α+θ)·d) dα` with `f(ω) = -2π [cos ω, sin ω]`.
pub fn one_ring_correlation(d: [f64; 2], theta: f64, delta: f64) -> Complex64 {
    let dist = d[0].hypot(d[1]);
    if dist == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    // the phase moves at most 2π·|d| per radian of α
    let panels = ((2.0 * PI * dist * 2.0 * delta) / PANEL_PHASE).ceil().max(1.0) as usize;
    let rule = gauss_legendre_64();
    let integral: Complex64 = rule.integrate_composite(-delta, delta, panels, |alpha| {
        let w = alpha + theta;
        let phase = -2.0 * PI * (w.cos() * d[0] + w.sin() * d[1]);
        Complex64::new(phase.cos(), phase.sin())
    });
    integral / (2.0 * delta)
}

fn gauss_legendre_64() -> &'static GaussLegendre {
    static RULE: std::sync::OnceLock<GaussLegendre> = std::sync::OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(PANEL_NODES))
}

/// Visibility-region-masked one-ring covariance.
///
/// Entries with either index outside `visible` are zero, the in-VR diagonal
/// is exactly one. Only the upper triangle is integrated; correlations are
/// cached by displacement, so a ULA costs one integral per lag.
pub fn build_covariance<T: Real>(
    theta: f64,
    delta: f64,
    geometry: &ArrayGeometry,
    visible: Range<usize>,
) -> CMatrix<T> {
    let m = geometry.len();
    assert!(visible.end <= m, "VR {visible:?} exceeds array of {m}");
    let pos = geometry.positions();
    let mut r = CMatrix::<T>::zeros(m, m);
    let mut cache: HashMap<[u64; 2], Complex64> = HashMap::new();
    for p in visible.clone() {
        r[(p, p)] = Cx::new(T::one(), T::zero());
        for q in (p + 1)..visible.end {
            let d = [pos[p][0] - pos[q][0], pos[p][1] - pos[q][1]];
            let key = [d[0].to_bits(), d[1].to_bits()];
            let v = *cache
                .entry(key)
                .or_insert_with(|| one_ring_correlation(d, theta, delta));
            let v = Cx::new(T::lit(v.re), T::lit(v.im));
            r[(p, q)] = v;
            r[(q, p)] = v.conj();
        }
    }
    r
}
