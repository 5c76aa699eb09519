use std::ops::Range;

use rand::Rng;
use rand_distr::{Distribution, LogNormal};

/// Contiguous block of antennas that see a user.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisibilityRegion {
    /// Zero-based antenna index the window is centred on.
    pub center: usize,
    /// Window length before truncation at the array edges.
    pub nominal_length: usize,
    /// Visible antennas after truncation.
    pub antennas: Range<usize>,
}

impl VisibilityRegion {
    /// Window of `length` antennas centred on `center`, truncated (not
    /// wrapped) at the edges of an `m`-antenna array.
    pub fn centered(m: usize, center: usize, length: usize) -> Self {
        assert!(center < m && length >= 1 && length <= m);
        let start = center as isize - ((length as isize - 1) / 2);
        let end = start + length as isize;
        let antennas = start.max(0) as usize..end.min(m as isize) as usize;
        Self {
            center,
            nominal_length: length,
            antennas,
        }
    }

    pub fn full(m: usize) -> Self {
        Self {
            center: m / 2,
            nominal_length: m,
            antennas: 0..m,
        }
    }

    /// Number of visible antennas.
    pub fn len(&self) -> usize {
        self.antennas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.antennas.is_empty()
    }

    pub fn contains(&self, antenna: usize) -> bool {
        self.antennas.contains(&antenna)
    }

    /// Boolean visibility mask over an `m`-antenna array.
    pub fn mask(&self, m: usize) -> Vec<bool> {
        (0..m).map(|p| self.contains(p)).collect()
    }
}

/// Maps a raw lognormal draw to a window length: `clamp(round(x·scale·m), 1, m)`.
pub fn vr_length_from_draw(x: f64, scale: f64, m: usize) -> usize {
    let raw = (x * scale * m as f64).round();
    if raw.is_nan() || raw < 1.0 {
        1
    } else if raw >= m as f64 {
        m
    } else {
        raw as usize
    }
}

/// Draws a visibility region: centre uniform over the array, length from
/// `lognormal(log_mean, log_var)` scaled to a fraction of the array.
pub fn sample_vr<R: Rng + ?Sized>(
    rng: &mut R,
    m: usize,
    log_mean: f64,
    log_var: f64,
    scale: f64,
) -> VisibilityRegion {
    assert!(m >= 1);
    let center = rng.random_range(0..m);
    let draw = LogNormal::new(log_mean, log_var.max(0.0).sqrt())
        .expect("finite lognormal parameters")
        .sample(rng);
    VisibilityRegion::centered(m, center, vr_length_from_draw(draw, scale, m))
}
