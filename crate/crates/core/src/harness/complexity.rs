//! Closed-form operation counts of the receivers.

/// Operation counts for one parameter tuple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexityTable {
    /// VMP at one LPU for one visit.
    pub mf_per_lpu: f64,
    /// Decentralized receiver when SIC never fires before the last sweep.
    pub mfbp_worst: f64,
    /// Decentralized receiver when every user is cancelled in the first sweep.
    pub mfbp_best: f64,
    pub daisy_chain: f64,
    pub zf: f64,
    pub central_vmp: f64,
    pub sic_vmp: f64,
}

impl ComplexityTable {
    /// `(name, value)` pairs in presentation order.
    pub fn rows(&self) -> [(&'static str, f64); 7] {
        [
            ("mf_per_lpu", self.mf_per_lpu),
            ("mfbp_worst", self.mfbp_worst),
            ("mfbp_best", self.mfbp_best),
            ("daisy_chain", self.daisy_chain),
            ("zf", self.zf),
            ("central_vmp", self.central_vmp),
            ("sic_vmp", self.sic_vmp),
        ]
    }
}

/// Evaluates the complexity model for `m` antennas, `k` users, `b` LPUs, an
/// alphabet of `alphabet` symbols, `j` inner and `t` outer iterations.
///
/// `M_b = M / B` is taken as a real number, so non-dividing `B` is allowed.
pub fn complexity_estimates(m: u64, k: u64, b: u64, alphabet: u64, j: u64, t: u64) -> ComplexityTable {
    let (m, k, b, a, j, t) = (m as f64, k as f64, b as f64, alphabet as f64, j as f64, t as f64);
    let mb = m / b;
    let mf = j * (k * (4.0 + a) + mb) + 3.0 * mb * k;
    ComplexityTable {
        mf_per_lpu: mf,
        mfbp_worst: t * (b * mf + k * (b * (2.0 * a + 1.0) - 2.0 * a)),
        mfbp_best: b * mf + k * (2.0 * a * (b - 1.0) + 1.0),
        daisy_chain: m * (k + 2.0),
        zf: k * k * k / 3.0 + m * k * k + m * k,
        central_vmp: j * (m * (3.0 + 2.0 * k) + m * k * a) + 3.0 * m * k,
        sic_vmp: (k * k / 2.0) * (3.0 * m + b * (a + 4.0) + 1.0) + m * k,
    }
}
