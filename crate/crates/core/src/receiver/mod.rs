//! Decentralized MF-BP receiver.
//!
//! Every LPU approximates the posterior of its local copy of the user
//! symbols with mean-field VMP, using only its own antennas. Copies held by
//! neighbouring LPUs are tied by equality constraints, over which beliefs are
//! exchanged with belief propagation. Users whose local belief becomes
//! confident (LR metric above the threshold) are hard-detected and cancelled
//! locally; the resulting delta beliefs then travel along the chain.
//!
//! One call to [`MfBpReceiver::detect`] runs `T` outer sweeps over the chain.
//! On each LPU visit:
//!
//! 1. read the messages from the left and right neighbours,
//! 2. initialize the active users' beliefs with MRC,
//! 3. run `J` VMP iterations (noise precision, then all symbol beliefs),
//! 4. scan the active users for SIC; on the last sweep every remaining user
//!    is decided without cancellation,
//! 5. send the outgoing messages to both neighbours.

mod lpu;
mod messages;
mod trace;

pub use lpu::{LpuState, INVISIBLE_NORM2, MIN_RESIDUAL_ENERGY};
pub use messages::{bp_outgoing, combine_belief, lr_metric, Combined, MfMessage};
pub use trace::{write_trace_csv, IterationRecord, TraceRow, VisitRecord, TRACE_HEADER};

use rayon::prelude::*;
use thiserror::Error;

use crate::model::{
    partition, Constellation, DiscreteBelief, LambdaInit, ModelError, Schedule, SubArrayIndexing,
    SystemConfig,
};
use crate::{CMatrix, CVector, Real};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReceiverError {
    #[error("numerical failure at LPU {lpu}{}: {source}", user.map(|u| format!(", user {u}")).unwrap_or_default())]
    Numerical {
        lpu: usize,
        user: Option<usize>,
        #[source]
        source: ModelError,
    },
    #[error("contract violation at LPU {lpu}, user {user}: {reason}")]
    Contract { lpu: usize, user: usize, reason: String },
    #[error("invalid receiver input: {0}")]
    InvalidInput(String),
}

/// Knobs of the decentralized receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct MfBpParams {
    /// Number of LPUs `B`.
    pub sub_arrays: usize,
    /// VMP iterations per visit `J`.
    pub inner_iterations: usize,
    /// Outer sweeps `T`.
    pub outer_iterations: usize,
    /// LR threshold; non-finite disables SIC.
    pub gamma_thr: f64,
    pub schedule: Schedule,
    pub lambda_init: LambdaInit,
    /// Keep per-(sweep, LPU, user) LR rows.
    pub record_trace: bool,
    /// Keep every message and belief of every visit.
    pub record_messages: bool,
}

impl MfBpParams {
    pub fn from_config(config: &SystemConfig) -> Self {
        Self {
            sub_arrays: config.b,
            inner_iterations: config.j,
            outer_iterations: config.t,
            gamma_thr: config.gamma_thr,
            schedule: config.schedule,
            lambda_init: config.lambda_init,
            record_trace: false,
            record_messages: false,
        }
    }

    pub fn sic_enabled(&self) -> bool {
        self.gamma_thr.is_finite()
    }
}

/// Per-sweep summary.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepDiagnostics<T: Real> {
    /// Users removed by SIC at each LPU during this sweep.
    pub sic_count: Vec<usize>,
    /// `λ̄_b` after the last VMP iteration of each LPU.
    pub lambda_bar: Vec<T>,
    /// Fraction of users whose most likely symbol agrees between LPU 1 and
    /// LPU ⌈B/2⌉ at the end of the sweep.
    pub consensus: f64,
    /// Active-set sizes `|K_b|` at the end of the sweep.
    pub active: Vec<usize>,
}

/// Pathologies hit while running, counted rather than fatal.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WarningCounters {
    /// Neighbour deltas that contradicted each other or the MF message.
    pub conflicts: usize,
    /// Outgoing quotients saturated because a neighbour excluded a symbol the
    /// local belief still allows.
    pub saturations: usize,
}

impl std::ops::AddAssign for WarningCounters {
    fn add_assign(&mut self, rhs: Self) {
        self.conflicts += rhs.conflicts;
        self.saturations += rhs.saturations;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MfBpOutput<T: Real> {
    /// `B × K` symbol indices; row `b` holds LPU `b`'s decisions.
    pub decisions: Vec<Vec<usize>>,
    /// Final local beliefs, `B × K`.
    pub beliefs: Vec<Vec<DiscreteBelief<T>>>,
    pub sweeps: Vec<SweepDiagnostics<T>>,
    pub warnings: WarningCounters,
    pub trace: Vec<TraceRow>,
    pub visits: Vec<VisitRecord<T>>,
}

impl<T: Real> MfBpOutput<T> {
    /// Decisions read from one LPU (any LPU may serve as read-out).
    pub fn readout(&self, lpu: usize) -> &[usize] {
        &self.decisions[lpu]
    }

    /// Fraction of users on which two LPUs' final decisions agree.
    pub fn agreement(&self, a: usize, b: usize) -> f64 {
        let k = self.decisions[a].len();
        if k == 0 {
            return 1.0;
        }
        let same = self.decisions[a]
            .iter()
            .zip(&self.decisions[b])
            .filter(|(x, y)| x == y)
            .count();
        same as f64 / k as f64
    }
}

/// Zero-based index of LPU ⌈B/2⌉.
pub fn middle_lpu(sub_arrays: usize) -> usize {
    sub_arrays.div_ceil(2).saturating_sub(1)
}

/// The decentralized receiver for a fixed alphabet and parameter set.
#[derive(Debug, Clone)]
pub struct MfBpReceiver<T: Real> {
    params: MfBpParams,
    constellation: Constellation<T>,
}

struct VisitOutcome<T: Real> {
    to_left: Option<Vec<DiscreteBelief<T>>>,
    to_right: Option<Vec<DiscreteBelief<T>>>,
    sic_fired: Vec<bool>,
    lr: Vec<T>,
    warnings: WarningCounters,
    record: Option<VisitRecord<T>>,
}

impl<T: Real> MfBpReceiver<T> {
    pub fn new(params: MfBpParams, constellation: Constellation<T>) -> Result<Self, ReceiverError> {
        if params.sub_arrays == 0 || params.inner_iterations == 0 || params.outer_iterations == 0 {
            return Err(ReceiverError::InvalidInput(
                "B, J and T must all be at least 1".into(),
            ));
        }
        if !(params.gamma_thr > 1.0) {
            return Err(ReceiverError::InvalidInput(format!(
                "LR threshold must exceed 1, got {}",
                params.gamma_thr
            )));
        }
        Ok(Self {
            params,
            constellation,
        })
    }

    pub fn params(&self) -> &MfBpParams {
        &self.params
    }

    pub fn constellation(&self) -> &Constellation<T> {
        &self.constellation
    }

    /// Runs the chain on one received vector.
    ///
    /// `noise_var` is only consulted when the MRC initialization is
    /// configured to use the true noise level.
    pub fn detect(
        &self,
        h: &CMatrix<T>,
        y: &CVector<T>,
        noise_var: Option<T>,
    ) -> Result<MfBpOutput<T>, ReceiverError> {
        let p = &self.params;
        let idx = SubArrayIndexing::new(h.nrows(), p.sub_arrays)
            .map_err(|e| ReceiverError::InvalidInput(e.to_string()))?;
        let blocks = partition(h, y, &idx).map_err(|e| ReceiverError::InvalidInput(e.to_string()))?;
        if p.lambda_init == LambdaInit::TrueNoise && noise_var.is_none() {
            return Err(ReceiverError::InvalidInput(
                "true-noise MRC initialization needs the noise variance".into(),
            ));
        }
        if y.iter().any(|v| v.re.is_nan() || v.im.is_nan()) || h.iter().any(|v| v.re.is_nan() || v.im.is_nan()) {
            return Err(ReceiverError::InvalidInput("NaN in channel or signal".into()));
        }

        let b_count = p.sub_arrays;
        let k = h.ncols();
        let alphabet = self.constellation.len();
        let mut lpus: Vec<LpuState<T>> = blocks
            .into_iter()
            .enumerate()
            .map(|(b, (hb, yb))| LpuState::new(b, hb, yb, alphabet))
            .collect();

        let uniform = vec![DiscreteBelief::<T>::uniform(alphabet); k];
        let prior = uniform.clone();
        // to_right[b]: message LPU b sends to b+1; to_left[b]: to b-1
        let mut to_right = vec![uniform.clone(); b_count];
        let mut to_left = vec![uniform; b_count];

        let mut output = MfBpOutput {
            decisions: Vec::new(),
            beliefs: Vec::new(),
            sweeps: Vec::with_capacity(p.outer_iterations),
            warnings: WarningCounters::default(),
            trace: Vec::new(),
            visits: Vec::new(),
        };

        for sweep in 0..p.outer_iterations {
            let last = sweep + 1 == p.outer_iterations;
            let outcomes: Vec<VisitOutcome<T>> = match p.schedule {
                Schedule::Sequential => {
                    let mut outcomes = Vec::with_capacity(b_count);
                    for b in 0..b_count {
                        let left_in = if b == 0 { &prior } else { &to_right[b - 1] };
                        let right_in = (b + 1 < b_count).then(|| &to_left[b + 1]);
                        let out = self.visit(&mut lpus[b], left_in, right_in, sweep, last, noise_var)?;
                        if let Some(m) = &out.to_left {
                            to_left[b] = m.clone();
                        }
                        if let Some(m) = &out.to_right {
                            to_right[b] = m.clone();
                        }
                        outcomes.push(out);
                    }
                    outcomes
                }
                Schedule::Flooding => {
                    // every LPU reads last sweep's messages; buffers swap at the barrier
                    let outcomes = lpus
                        .par_iter_mut()
                        .enumerate()
                        .map(|(b, lpu)| {
                            let left_in = if b == 0 { &prior } else { &to_right[b - 1] };
                            let right_in = (b + 1 < b_count).then(|| &to_left[b + 1]);
                            self.visit(lpu, left_in, right_in, sweep, last, noise_var)
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    for (b, out) in outcomes.iter().enumerate() {
                        if let Some(m) = &out.to_left {
                            to_left[b] = m.clone();
                        }
                        if let Some(m) = &out.to_right {
                            to_right[b] = m.clone();
                        }
                    }
                    outcomes
                }
            };

            let mid = middle_lpu(b_count);
            let consensus = if k == 0 {
                1.0
            } else {
                (0..k)
                    .filter(|&u| lpus[0].belief(u).argmax() == lpus[mid].belief(u).argmax())
                    .count() as f64
                    / k as f64
            };
            let mut diag = SweepDiagnostics {
                sic_count: Vec::with_capacity(b_count),
                lambda_bar: Vec::with_capacity(b_count),
                consensus,
                active: lpus.iter().map(LpuState::active_count).collect(),
            };
            for (b, out) in outcomes.into_iter().enumerate() {
                diag.sic_count.push(out.sic_fired.iter().filter(|&&f| f).count());
                diag.lambda_bar.push(lpus[b].lambda_bar());
                output.warnings += out.warnings;
                if p.record_trace {
                    for u in 0..k {
                        output.trace.push(TraceRow {
                            sweep,
                            lpu: b,
                            user: u,
                            lr: out.lr[u].to_f64_lossy(),
                            sic_fired: out.sic_fired[u],
                            lambda_bar: lpus[b].lambda_bar().to_f64_lossy(),
                            consensus,
                        });
                    }
                }
                if let Some(r) = out.record {
                    output.visits.push(r);
                }
            }
            output.sweeps.push(diag);
        }

        for lpu in &lpus {
            let decisions = lpu
                .detections()
                .iter()
                .enumerate()
                .map(|(u, d)| {
                    d.ok_or_else(|| ReceiverError::Contract {
                        lpu: lpu.index(),
                        user: u,
                        reason: "user left undetected after the final sweep".into(),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            output.decisions.push(decisions);
            output.beliefs.push(lpu.beliefs().to_vec());
        }
        Ok(output)
    }

    fn visit(
        &self,
        lpu: &mut LpuState<T>,
        left_in: &[DiscreteBelief<T>],
        right_in: Option<&Vec<DiscreteBelief<T>>>,
        sweep: usize,
        last: bool,
        noise_var: Option<T>,
    ) -> Result<VisitOutcome<T>, ReceiverError> {
        let p = &self.params;
        let c = &self.constellation;
        let b = lpu.index();
        let k = lpu.users();
        let mut warnings = WarningCounters::default();

        let sigma2 = match p.lambda_init {
            LambdaInit::FromData => lpu.noise_estimate(),
            LambdaInit::TrueNoise => noise_var.expect("checked in detect"),
        };
        lpu.mrc_initialize(c, sigma2)?;

        let mut record = p.record_messages.then(|| VisitRecord {
            sweep,
            lpu: b,
            incoming_left: left_in.to_vec(),
            incoming_right: right_in.cloned(),
            mrc: lpu.beliefs().to_vec(),
            iterations: Vec::with_capacity(p.inner_iterations),
            outgoing_left: None,
            outgoing_right: None,
        });

        for _ in 0..p.inner_iterations {
            let lambda = lpu.update_lambda(c);
            let messages = lpu.vmp_messages(c);
            let mut next = lpu.beliefs().to_vec();
            for (u, msg) in messages.iter().enumerate() {
                let Some(msg) = msg else { continue };
                let right = right_in.map(|r| &r[u]);
                let combined = combine_belief(msg, &left_in[u], right, c)
                    .map_err(|e| ReceiverError::at(b, Some(u), e))?;
                if combined.conflict {
                    warnings.conflicts += 1;
                }
                next[u] = combined.belief;
            }
            lpu.set_beliefs(next);
            if let Some(r) = record.as_mut() {
                r.iterations.push(IterationRecord {
                    lambda_bar: lambda,
                    mf: messages,
                    beliefs: lpu.beliefs().to_vec(),
                });
            }
        }

        let gamma = T::lit(p.gamma_thr);
        let mut sic_fired = vec![false; k];
        let mut lr = Vec::with_capacity(k);
        for u in 0..k {
            let metric = lr_metric(lpu.belief(u));
            lr.push(metric);
            if !lpu.is_active(u) {
                continue;
            }
            if p.sic_enabled() && metric >= gamma {
                lpu.sic_detect_and_cancel(u, gamma, c)?;
                sic_fired[u] = true;
            } else if last {
                lpu.force_detect(u);
            }
        }

        let outgoing = |incoming: &[DiscreteBelief<T>], warnings: &mut WarningCounters| {
            (0..k)
                .map(|u| {
                    let (m, sat) = bp_outgoing(lpu.belief(u), &incoming[u])
                        .map_err(|e| ReceiverError::at(b, Some(u), e))?;
                    if sat {
                        warnings.saturations += 1;
                    }
                    Ok(m)
                })
                .collect::<Result<Vec<_>, ReceiverError>>()
        };
        let to_left = if b > 0 { Some(outgoing(left_in, &mut warnings)?) } else { None };
        let to_right = match right_in {
            Some(r) => Some(outgoing(r, &mut warnings)?),
            None => None,
        };
        if let Some(r) = record.as_mut() {
            r.outgoing_left = to_left.clone();
            r.outgoing_right = to_right.clone();
        }

        Ok(VisitOutcome {
            to_left,
            to_right,
            sic_fired,
            lr,
            warnings,
            record,
        })
    }
}
