use crate::model::{gaussian_to_belief, Constellation, DiscreteBelief, ModelError};
use crate::{CMatrix, CVector, Cx, Real};

use super::messages::{lr_metric, MfMessage};
use super::ReceiverError;

/// Columns with squared norm below this are treated as invisible.
pub const INVISIBLE_NORM2: f64 = 1e-12;
/// Lower clamp on the residual energy `Z_b`.
pub const MIN_RESIDUAL_ENERGY: f64 = 1e-12;
/// Lower clamp on Gaussian variances handed to the alphabet projection.
const MIN_VARIANCE: f64 = 1e-30;

/// State of one local processing unit.
///
/// Holds the sub-array's channel block and residual signal, the active user
/// set `K_b` (users still to be detected), the detections made so far `S_b`,
/// the local beliefs and the noise-precision estimate.
#[derive(Debug, Clone)]
pub struct LpuState<T: Real> {
    index: usize,
    h: CMatrix<T>,
    gram: CMatrix<T>,
    norm2: Vec<T>,
    y_residual: CVector<T>,
    active: Vec<bool>,
    detected: Vec<Option<usize>>,
    sic_fixed: Vec<bool>,
    beliefs: Vec<DiscreteBelief<T>>,
    lambda_bar: T,
}

impl<T: Real> LpuState<T> {
    pub fn new(index: usize, h: CMatrix<T>, y: CVector<T>, alphabet: usize) -> Self {
        assert_eq!(h.nrows(), y.len(), "channel block and signal disagree");
        let k = h.ncols();
        let gram = h.adjoint() * &h;
        let norm2 = (0..k).map(|j| gram[(j, j)].re).collect();
        Self {
            index,
            h,
            gram,
            norm2,
            y_residual: y,
            active: vec![true; k],
            detected: vec![None; k],
            sic_fixed: vec![false; k],
            beliefs: vec![DiscreteBelief::uniform(alphabet); k],
            lambda_bar: T::one(),
        }
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn antennas(&self) -> usize {
        self.h.nrows()
    }

    pub fn users(&self) -> usize {
        self.h.ncols()
    }

    pub fn channel(&self) -> &CMatrix<T> {
        &self.h
    }

    pub fn residual(&self) -> &CVector<T> {
        &self.y_residual
    }

    pub fn is_active(&self, k: usize) -> bool {
        self.active[k]
    }

    /// Users still in `K_b`, ascending.
    pub fn active_users(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.users()).filter(move |&k| self.active[k])
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    /// `S_b`: detected symbol index per user.
    pub fn detections(&self) -> &[Option<usize>] {
        &self.detected
    }

    /// Whether user `k` was removed by SIC (as opposed to the final forced
    /// decision).
    pub fn is_sic_fixed(&self, k: usize) -> bool {
        self.sic_fixed[k]
    }

    pub fn beliefs(&self) -> &[DiscreteBelief<T>] {
        &self.beliefs
    }

    pub fn belief(&self, k: usize) -> &DiscreteBelief<T> {
        &self.beliefs[k]
    }

    /// Replaces all local beliefs, one per user.
    pub fn set_beliefs(&mut self, beliefs: Vec<DiscreteBelief<T>>) {
        assert_eq!(beliefs.len(), self.users(), "one belief per user");
        self.beliefs = beliefs;
    }

    pub fn lambda_bar(&self) -> T {
        self.lambda_bar
    }

    /// Squared column norm `||h_k||²`.
    pub fn norm2(&self, k: usize) -> T {
        self.norm2[k]
    }

    pub fn is_visible(&self, k: usize) -> bool {
        self.norm2[k] >= T::lit(INVISIBLE_NORM2)
    }

    /// Local noise-variance estimate `||y_b||² / M_b` from the residual.
    pub fn noise_estimate(&self) -> T {
        self.y_residual.norm_squared() / T::lit(self.antennas() as f64)
    }

    /// MRC initial beliefs for the active users; SIC-fixed users keep their
    /// deltas. Invisible users start uniform.
    ///
    /// `x̂_k = h_k^H y_b / ||h_k||²`, with variance
    /// `(Σ_{k'≠k} |h_k^H h_k'|² / ||h_k||² + σ²) / ||h_k||²` over the other
    /// active users (unit transmit powers).
    pub fn mrc_initialize(&mut self, constellation: &Constellation<T>, sigma2: T) -> Result<(), ReceiverError> {
        let active: Vec<usize> = self.active_users().collect();
        for &k in &active {
            if !self.is_visible(k) {
                self.beliefs[k] = DiscreteBelief::uniform(constellation.len());
                continue;
            }
            let n2 = self.norm2[k];
            let matched = self.h.column(k).dotc(&self.y_residual);
            let mean = matched.unscale(n2);
            let interference = active
                .iter()
                .filter(|&&j| j != k)
                .fold(T::zero(), |acc, &j| acc + self.gram[(k, j)].norm_sqr() / n2);
            let variance = ((interference + sigma2) / n2).max(T::lit(MIN_VARIANCE));
            self.beliefs[k] = gaussian_to_belief(mean, variance, constellation)
                .map_err(|e| ReceiverError::at(self.index, Some(k), e))?;
        }
        Ok(())
    }

    /// Soft interference-free residual `y_b - Σ_{k∈K_b} h_k x̄_k`.
    fn soft_residual(&self, means: &[Cx<T>]) -> CVector<T> {
        let mut r = self.y_residual.clone();
        for k in self.active_users() {
            if means[k] != Cx::new(T::zero(), T::zero()) {
                r.axpy(-means[k], &self.h.column(k), Cx::new(T::one(), T::zero()));
            }
        }
        r
    }

    /// Residual energy `Z_b = ||y_b - Σ h_k x̄_k||² + Σ σ²_k ||h_k||²` over
    /// the active users.
    pub fn residual_energy(&self, constellation: &Constellation<T>) -> T {
        let means: Vec<Cx<T>> = self.beliefs.iter().map(|q| q.mean(constellation)).collect();
        let spread = self
            .active_users()
            .fold(T::zero(), |acc, k| acc + self.beliefs[k].variance(constellation) * self.norm2[k]);
        self.soft_residual(&means).norm_squared() + spread
    }

    /// Noise-precision update `λ̄_b = M_b / max(Z_b, ε)`.
    pub fn update_lambda(&mut self, constellation: &Constellation<T>) -> T {
        let z = self.residual_energy(constellation).max(T::lit(MIN_RESIDUAL_ENERGY));
        self.lambda_bar = T::lit(self.antennas() as f64) / z;
        self.lambda_bar
    }

    /// MF messages for every user from the current beliefs: mean
    /// `h_k^H (y_b - Σ_{k'≠k} x̄_k' h_k') / ||h_k||²`, variance
    /// `1 / (λ̄_b ||h_k||²)`. Entries for inactive users are `None`.
    pub fn vmp_messages(&self, constellation: &Constellation<T>) -> Vec<Option<MfMessage<T>>> {
        let means: Vec<Cx<T>> = self.beliefs.iter().map(|q| q.mean(constellation)).collect();
        let residual = self.soft_residual(&means);
        (0..self.users())
            .map(|k| {
                self.active[k].then(|| self.mf_from_residual(k, &residual, means[k]))
            })
            .collect()
    }

    /// MF message for a single active user.
    pub fn vmp_symbol_message(&self, k: usize, constellation: &Constellation<T>) -> Result<MfMessage<T>, ReceiverError> {
        if !self.active[k] {
            return Err(ReceiverError::Contract {
                lpu: self.index,
                user: k,
                reason: "MF message requested for a user outside the active set".into(),
            });
        }
        let means: Vec<Cx<T>> = self.beliefs.iter().map(|q| q.mean(constellation)).collect();
        let residual = self.soft_residual(&means);
        Ok(self.mf_from_residual(k, &residual, means[k]))
    }

    fn mf_from_residual(&self, k: usize, residual: &CVector<T>, mean_k: Cx<T>) -> MfMessage<T> {
        if !self.is_visible(k) {
            return MfMessage::Flat;
        }
        let n2 = self.norm2[k];
        // h^H (r + x̄_k h_k) / ||h||² = h^H r / ||h||² + x̄_k
        let mean = self.h.column(k).dotc(residual).unscale(n2) + mean_k;
        let variance = (T::one() / (self.lambda_bar * n2)).max(T::lit(MIN_VARIANCE));
        MfMessage::Gaussian { mean, variance }
    }

    /// Hard-detects user `k`, cancels it from the residual and pins its belief
    /// to a delta. Requires `lr_metric(q_k) >= gamma_thr`.
    pub fn sic_detect_and_cancel(
        &mut self,
        k: usize,
        gamma_thr: T,
        constellation: &Constellation<T>,
    ) -> Result<usize, ReceiverError> {
        if !self.active[k] || lr_metric(&self.beliefs[k]) < gamma_thr {
            return Err(ReceiverError::Contract {
                lpu: self.index,
                user: k,
                reason: "SIC requires an active user whose LR metric reaches the threshold".into(),
            });
        }
        let symbol = self.beliefs[k].argmax();
        let x = constellation.symbol(symbol);
        self.y_residual.axpy(-x, &self.h.column(k), Cx::new(T::one(), T::zero()));
        self.active[k] = false;
        self.detected[k] = Some(symbol);
        self.sic_fixed[k] = true;
        self.beliefs[k] = DiscreteBelief::delta(constellation.len(), symbol);
        Ok(symbol)
    }

    /// Final decision without cancellation for a user that never passed the
    /// LR test.
    pub fn force_detect(&mut self, k: usize) -> usize {
        let symbol = self.beliefs[k].argmax();
        self.active[k] = false;
        self.detected[k] = Some(symbol);
        symbol
    }
}

impl ReceiverError {
    pub(crate) fn at(lpu: usize, user: Option<usize>, source: ModelError) -> Self {
        Self::Numerical { lpu, user, source }
    }
}
