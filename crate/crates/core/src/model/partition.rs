use std::ops::Range;

use crate::{CMatrix, CVector, Real};

use super::ModelError;

/// Contiguous antenna ranges of the `B` sub-arrays, ordered left to right.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubArrayIndexing {
    antennas: usize,
    per_lpu: usize,
    count: usize,
}

impl SubArrayIndexing {
    pub fn new(antennas: usize, sub_arrays: usize) -> Result<Self, ModelError> {
        if antennas == 0 || sub_arrays == 0 || antennas % sub_arrays != 0 {
            return Err(ModelError::InvalidConfig(format!(
                "cannot split {antennas} antennas into {sub_arrays} equal sub-arrays"
            )));
        }
        Ok(Self {
            antennas,
            per_lpu: antennas / sub_arrays,
            count: sub_arrays,
        })
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    /// Number of sub-arrays `B`.
    pub fn count(&self) -> usize {
        self.count
    }

    /// Antennas per sub-array `M_b`.
    pub fn per_lpu(&self) -> usize {
        self.per_lpu
    }

    /// Zero-based antenna range of sub-array `b` (zero-based).
    pub fn range(&self, b: usize) -> Range<usize> {
        assert!(b < self.count, "sub-array {b} out of range");
        b * self.per_lpu..(b + 1) * self.per_lpu
    }

    pub fn ranges(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        (0..self.count).map(|b| self.range(b))
    }
}

/// Row blocks `(H_b, y_b)` of the channel matrix and received signal.
pub fn partition<T: Real>(
    h: &CMatrix<T>,
    y: &CVector<T>,
    idx: &SubArrayIndexing,
) -> Result<Vec<(CMatrix<T>, CVector<T>)>, ModelError> {
    if h.nrows() != idx.antennas() || y.len() != idx.antennas() {
        return Err(ModelError::DimensionMismatch(format!(
            "H is {}x{}, y has {} entries, indexing expects {} antennas",
            h.nrows(),
            h.ncols(),
            y.len(),
            idx.antennas()
        )));
    }
    Ok(idx
        .ranges()
        .map(|r| {
            (
                h.rows(r.start, r.len()).into_owned(),
                y.rows(r.start, r.len()).into_owned(),
            )
        })
        .collect())
}
