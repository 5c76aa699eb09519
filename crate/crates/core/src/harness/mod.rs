//! Monte Carlo SER experiments.
//!
//! Trials are grouped in blocks of `cov_refresh`: user covariances and
//! visibility regions are drawn once per block, small-scale fading, symbols
//! and noise once per trial. Blocks run in parallel, each from its own RNG
//! stream, and the per-block tallies are merged in block order, so results
//! do not depend on the worker count.
//!
//! Every SNR point reuses the trial's stream, so all points see the same
//! channels, symbols and unit-variance noise (common random numbers).

mod complexity;
mod results;
mod rng;

pub use complexity::{complexity_estimates, ComplexityTable};
pub use results::{
    fmt_float, parse_rows, read_results, sidecar_path, write_results, write_rows, SerAccumulator,
    SerRow, DIAG_HEADER, RESULTS_HEADER,
};
pub use rng::{stream_rng, Stream};

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::baselines::{central_vmp, single_user_bound, zf_detect, BoundNoise};
use crate::channel::{
    draw_user_specs, generate_realization, noise_variance, ChannelError, ChannelRealization,
    UserChannelSpec,
};
use crate::model::{Constellation, ModelError, SystemConfig};
use crate::receiver::{middle_lpu, MfBpParams, MfBpReceiver, TraceRow};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Config(#[from] ModelError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

/// Receivers the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReceiverKind {
    /// Decentralized MF-BP; reported at the read-out LPU and at LPU ⌈B/2⌉.
    MfBp,
    Zf,
    CentralVmp,
    Bound,
}

impl ReceiverKind {
    pub const ALL: [Self; 4] = [Self::MfBp, Self::Zf, Self::CentralVmp, Self::Bound];

    pub fn name(self) -> &'static str {
        match self {
            Self::MfBp => "mfbp",
            Self::Zf => "zf",
            Self::CentralVmp => "cvmp",
            Self::Bound => "bound",
        }
    }

    /// CSV row labels this receiver produces.
    fn labels(self) -> &'static [&'static str] {
        match self {
            Self::MfBp => &["mfbp", "mfbp_mid"],
            Self::Zf => &["zf"],
            Self::CentralVmp => &["cvmp"],
            Self::Bound => &["bound"],
        }
    }
}

impl fmt::Display for ReceiverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ReceiverKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|r| r.name() == s.trim())
            .ok_or_else(|| format!("unknown receiver `{s}` (expected mfbp, zf, cvmp or bound)"))
    }
}

/// Parses a comma-separated receiver list, keeping the given order and
/// dropping duplicates.
pub fn parse_receivers(list: &str) -> Result<Vec<ReceiverKind>, String> {
    let mut out = Vec::new();
    for part in list.split(',').filter(|p| !p.trim().is_empty()) {
        let r: ReceiverKind = part.parse()?;
        if !out.contains(&r) {
            out.push(r);
        }
    }
    if out.is_empty() {
        return Err("no receivers given".into());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    pub receivers: Vec<ReceiverKind>,
    pub trials: u64,
    /// Worker threads; `None` uses all cores.
    pub workers: Option<usize>,
    /// LPU whose decisions are scored for the `mfbp` row.
    pub readout_lpu: usize,
    /// Give the single-user bound its own noise instead of the trial's.
    pub bound_fresh_noise: bool,
    /// Record MF-BP diagnostic traces for the first this-many trials.
    pub trace_trials: u64,
}

impl ExperimentConfig {
    pub fn new(system: SystemConfig, receivers: Vec<ReceiverKind>, trials: u64) -> Self {
        Self {
            system,
            receivers,
            trials,
            workers: None,
            readout_lpu: 0,
            bound_fresh_noise: false,
            trace_trials: 0,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.system.validate()?;
        if self.trials == 0 {
            return Err(HarnessError::InvalidInput("at least one trial is required".into()));
        }
        if self.receivers.is_empty() {
            return Err(HarnessError::InvalidInput("no receivers selected".into()));
        }
        if self.system.snr_db.is_empty() {
            return Err(HarnessError::InvalidInput("no SNR points".into()));
        }
        if self.readout_lpu >= self.system.b {
            return Err(HarnessError::InvalidInput(format!(
                "read-out LPU {} out of range for B = {}",
                self.readout_lpu, self.system.b
            )));
        }
        if self.workers == Some(0) {
            return Err(HarnessError::InvalidInput("workers must be at least 1".into()));
        }
        Ok(())
    }
}

/// Per-SNR counters that are not error rates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PointDiagnostics {
    /// (trial, user) pairs on which LPU 1 and LPU ⌈B/2⌉ decided alike.
    pub consensus_agree: u64,
    pub consensus_pairs: u64,
    pub conflicts: u64,
    pub saturations: u64,
    pub zf_regularized: u64,
    pub bound_erasures: u64,
    /// Receiver failures across all receivers.
    pub failures: u64,
}

impl PointDiagnostics {
    fn merge(&mut self, o: &Self) {
        self.consensus_agree += o.consensus_agree;
        self.consensus_pairs += o.consensus_pairs;
        self.conflicts += o.conflicts;
        self.saturations += o.saturations;
        self.zf_regularized += o.zf_regularized;
        self.bound_erasures += o.bound_erasures;
        self.failures += o.failures;
    }

    pub fn consensus_fraction(&self) -> f64 {
        if self.consensus_pairs == 0 {
            1.0
        } else {
            self.consensus_agree as f64 / self.consensus_pairs as f64
        }
    }
}

/// A trial a receiver could not finish.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialFailure {
    pub receiver: &'static str,
    pub snr_db: f64,
    pub trial: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialTrace {
    pub snr_db: f64,
    pub trial: u64,
    pub rows: Vec<TraceRow>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub snr_db: Vec<f64>,
    /// Row labels in output order.
    pub labels: Vec<&'static str>,
    /// `counts[label][snr]`.
    pub counts: Vec<Vec<SerAccumulator>>,
    pub diagnostics: Vec<PointDiagnostics>,
    pub failures: Vec<TrialFailure>,
    pub traces: Vec<TrialTrace>,
    pub wall_clock: Duration,
}

impl ExperimentResult {
    pub fn seed(&self) -> u64 {
        self.config.system.seed
    }

    pub fn rows(&self) -> Vec<SerRow> {
        let mut rows = Vec::new();
        for (label, per_snr) in self.labels.iter().zip(&self.counts) {
            for (snr, acc) in self.snr_db.iter().zip(per_snr) {
                rows.push(SerRow {
                    receiver: label.to_string(),
                    snr_db: *snr,
                    ser: acc.ser(),
                    stderr: acc.stderr(),
                    errors: acc.errors,
                    symbols: acc.symbols,
                    trials: acc.trials,
                    seed: self.seed(),
                });
            }
        }
        rows
    }

    /// Counters for one row label and SNR index.
    pub fn point(&self, label: &str, snr_index: usize) -> Option<&SerAccumulator> {
        let i = self.labels.iter().position(|l| *l == label)?;
        self.counts[i].get(snr_index)
    }

    pub fn total_failures(&self) -> u64 {
        self.failures.len() as u64
    }

    /// The system config in key-value form, followed by the harness settings
    /// as comments.
    pub fn config_snapshot(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.config.system.to_key_values() {
            s.push_str(&format!("{k} = {v}\n"));
        }
        let receivers: Vec<&str> = self.config.receivers.iter().map(|r| r.name()).collect();
        s.push_str(&format!("# receivers = {}\n", receivers.join(",")));
        s.push_str(&format!("# trials = {}\n", self.config.trials));
        s.push_str(&format!("# readout_lpu = {}\n", self.config.readout_lpu + 1));
        s.push_str(&format!("# bound_noise = {}\n", if self.config.bound_fresh_noise { "fresh" } else { "shared" }));
        s
    }
}

/// Everything one block of trials contributes.
struct Tally {
    counts: Vec<Vec<SerAccumulator>>,
    diagnostics: Vec<PointDiagnostics>,
    failures: Vec<TrialFailure>,
    traces: Vec<TrialTrace>,
}

impl Tally {
    fn new(labels: usize, points: usize) -> Self {
        Self {
            counts: vec![vec![SerAccumulator::default(); points]; labels],
            diagnostics: vec![PointDiagnostics::default(); points],
            failures: Vec::new(),
            traces: Vec::new(),
        }
    }

    fn merge(&mut self, other: Tally) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                x.merge(y);
            }
        }
        for (a, b) in self.diagnostics.iter_mut().zip(&other.diagnostics) {
            a.merge(b);
        }
        self.failures.extend(other.failures);
        self.traces.extend(other.traces);
    }
}

fn count_errors(decisions: &[usize], truth: &[usize]) -> u64 {
    decisions.iter().zip(truth).filter(|(a, b)| a != b).count() as u64
}

struct Engine<'a> {
    exp: &'a ExperimentConfig,
    constellation: Constellation<f64>,
    labels: Vec<&'static str>,
    mfbp: Option<MfBpReceiver<f64>>,
    mfbp_traced: Option<MfBpReceiver<f64>>,
}

impl Engine<'_> {
    fn label_index(&self, label: &str) -> usize {
        self.labels.iter().position(|l| *l == label).expect("label registered")
    }

    fn fail(&self, tally: &mut Tally, kind: ReceiverKind, si: usize, trial: u64, message: String) {
        for label in kind.labels() {
            tally.counts[self.label_index(label)][si].failures += 1;
        }
        tally.diagnostics[si].failures += 1;
        tally.failures.push(TrialFailure {
            receiver: kind.name(),
            snr_db: self.exp.system.snr_db[si],
            trial,
            message,
        });
    }

    fn run_block(&self, block: u64) -> Tally {
        let sys = &self.exp.system;
        let points = sys.snr_db.len();
        let mut tally = Tally::new(self.labels.len(), points);
        let first = block * sys.cov_refresh as u64;
        let last = (first + sys.cov_refresh as u64).min(self.exp.trials);

        let specs = match block_specs(sys, block) {
            Ok(s) => s,
            Err(e) => {
                for trial in first..last {
                    for si in 0..points {
                        for &kind in &self.exp.receivers {
                            self.fail(&mut tally, kind, si, trial, format!("channel model: {e}"));
                        }
                    }
                }
                return tally;
            }
        };
        for trial in first..last {
            for si in 0..points {
                self.run_trial(&specs, trial, si, &mut tally);
            }
        }
        tally
    }

    fn run_trial(&self, specs: &[UserChannelSpec<f64>], trial: u64, si: usize, tally: &mut Tally) {
        let sys = &self.exp.system;
        let snr = sys.snr_db[si];
        let c = &self.constellation;
        let (real, mut rng) = match trial_realization(specs, c, sys.seed, trial, snr) {
            Ok(r) => r,
            Err(e) => {
                for &kind in &self.exp.receivers {
                    self.fail(tally, kind, si, trial, format!("channel model: {e}"));
                }
                return;
            }
        };
        let users = sys.k as u64;
        let x = real.x_index.clone();
        for &kind in &self.exp.receivers {
            match kind {
                ReceiverKind::MfBp => {
                    let traced = trial < self.exp.trace_trials;
                    let rx = if traced { &self.mfbp_traced } else { &self.mfbp };
                    let rx = rx.as_ref().expect("MF-BP receiver built");
                    match rx.detect(&real.h, &real.y, Some(real.sigma2_n)) {
                        Ok(out) => {
                            let mid = middle_lpu(sys.b);
                            tally.counts[self.label_index("mfbp")][si]
                                .record(count_errors(out.readout(self.exp.readout_lpu), &x), users);
                            tally.counts[self.label_index("mfbp_mid")][si]
                                .record(count_errors(out.readout(mid), &x), users);
                            let d = &mut tally.diagnostics[si];
                            d.consensus_agree += out.decisions[0]
                                .iter()
                                .zip(&out.decisions[mid])
                                .filter(|(a, b)| a == b)
                                .count() as u64;
                            d.consensus_pairs += users;
                            d.conflicts += out.warnings.conflicts as u64;
                            d.saturations += out.warnings.saturations as u64;
                            if traced {
                                tally.traces.push(TrialTrace {
                                    snr_db: snr,
                                    trial,
                                    rows: out.trace,
                                });
                            }
                        }
                        Err(e) => self.fail(tally, kind, si, trial, e.to_string()),
                    }
                }
                ReceiverKind::Zf => {
                    let out = zf_detect(&real.h, &real.y, c);
                    if out.regularized {
                        tally.diagnostics[si].zf_regularized += 1;
                    }
                    tally.counts[self.label_index("zf")][si].record(count_errors(&out.decisions, &x), users);
                }
                ReceiverKind::CentralVmp => {
                    match central_vmp(
                        &real.h,
                        &real.y,
                        c,
                        sys.central_iterations(),
                        sys.lambda_init,
                        Some(real.sigma2_n),
                    ) {
                        Ok(out) => tally.counts[self.label_index("cvmp")][si]
                            .record(count_errors(&out.decisions[0], &x), users),
                        Err(e) => self.fail(tally, kind, si, trial, e.to_string()),
                    }
                }
                ReceiverKind::Bound => {
                    let out = if self.exp.bound_fresh_noise {
                        let mut noise_rng = rng.clone();
                        let noise = BoundNoise::Fresh {
                            sigma2: noise_variance(snr),
                            rng: &mut noise_rng,
                        };
                        single_user_bound(&real.h, &x, c, noise, &mut rng)
                    } else {
                        single_user_bound::<f64, ChaCha12Rng>(
                            &real.h,
                            &x,
                            c,
                            BoundNoise::Shared(&real.noise),
                            &mut rng,
                        )
                    };
                    tally.diagnostics[si].bound_erasures += out.erasures.len() as u64;
                    tally.counts[self.label_index("bound")][si].record(count_errors(&out.decisions, &x), users);
                }
            }
        }
    }
}

/// User covariances and VRs of refresh block `block`.
pub fn block_specs(sys: &SystemConfig, block: u64) -> Result<Vec<UserChannelSpec<f64>>, ChannelError> {
    let mut rng = stream_rng(sys.seed, Stream::Covariance, block);
    draw_user_specs(sys, &mut rng)
}

/// Symbols, fading and noise of trial `trial` at `snr_db`. Also returns the
/// trial's generator, positioned after the realization.
pub fn trial_realization(
    specs: &[UserChannelSpec<f64>],
    constellation: &Constellation<f64>,
    seed: u64,
    trial: u64,
    snr_db: f64,
) -> Result<(ChannelRealization<f64>, ChaCha12Rng), ChannelError> {
    let mut rng = stream_rng(seed, Stream::Trial, trial);
    let x: Vec<usize> = (0..specs.len()).map(|_| rng.random_range(0..constellation.len())).collect();
    let real = generate_realization(specs, constellation, &x, snr_db, &mut rng)?;
    Ok((real, rng))
}

/// Runs the experiment. Receiver failures are recorded per trial and
/// excluded from that receiver's counts, never dropped silently.
pub fn run_monte_carlo(exp: &ExperimentConfig) -> Result<ExperimentResult, HarnessError> {
    exp.validate()?;
    let start = Instant::now();
    let sys = &exp.system;
    let labels: Vec<&'static str> = exp.receivers.iter().flat_map(|r| r.labels().iter().copied()).collect();
    let build = |record_trace: bool| -> Result<Option<MfBpReceiver<f64>>, HarnessError> {
        if !exp.receivers.contains(&ReceiverKind::MfBp) {
            return Ok(None);
        }
        let mut params = MfBpParams::from_config(sys);
        params.record_trace = record_trace;
        MfBpReceiver::new(params, Constellation::qpsk())
            .map(Some)
            .map_err(|e| HarnessError::InvalidInput(e.to_string()))
    };
    let engine = Engine {
        exp,
        constellation: Constellation::qpsk(),
        labels: labels.clone(),
        mfbp: build(false)?,
        mfbp_traced: build(true)?,
    };

    let blocks = exp.trials.div_ceil(sys.cov_refresh as u64);
    let run = || {
        (0..blocks)
            .into_par_iter()
            .map(|b| engine.run_block(b))
            .collect::<Vec<_>>()
    };
    let tallies = match exp.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| HarnessError::InvalidInput(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    };

    let mut total = Tally::new(labels.len(), sys.snr_db.len());
    for t in tallies {
        total.merge(t);
    }
    total.traces.sort_by(|a, b| a.trial.cmp(&b.trial).then(a.snr_db.total_cmp(&b.snr_db)));
    Ok(ExperimentResult {
        config: exp.clone(),
        snr_db: sys.snr_db.clone(),
        labels,
        counts: total.counts,
        diagnostics: total.diagnostics,
        failures: total.failures,
        traces: total.traces,
        wall_clock: start.elapsed(),
    })
}
