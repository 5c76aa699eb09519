use std::io::{self, Write};

use super::MfMessage;
use crate::model::DiscreteBelief;
use crate::Real;

pub const TRACE_HEADER: &str = "trial,sweep,lpu,user,lr,sic_fired,lambda_bar,consensus_frac";

/// One (sweep, LPU, user) diagnostic row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub sweep: usize,
    pub lpu: usize,
    pub user: usize,
    /// LR metric at the SIC scan; `inf` for users already hard-detected.
    pub lr: f64,
    pub sic_fired: bool,
    pub lambda_bar: f64,
    pub consensus: f64,
}

/// Everything an LPU saw and produced during one VMP iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord<T: Real> {
    pub lambda_bar: T,
    /// MF messages, `None` for users outside the active set.
    pub mf: Vec<Option<MfMessage<T>>>,
    pub beliefs: Vec<DiscreteBelief<T>>,
}

/// Full message record of one LPU visit.
#[derive(Debug, Clone, PartialEq)]
pub struct VisitRecord<T: Real> {
    pub sweep: usize,
    pub lpu: usize,
    pub incoming_left: Vec<DiscreteBelief<T>>,
    pub incoming_right: Option<Vec<DiscreteBelief<T>>>,
    pub mrc: Vec<DiscreteBelief<T>>,
    pub iterations: Vec<IterationRecord<T>>,
    pub outgoing_left: Option<Vec<DiscreteBelief<T>>>,
    pub outgoing_right: Option<Vec<DiscreteBelief<T>>>,
}

/// Writes trace rows for one trial; pass `header = true` for the first.
pub fn write_trace_csv<W: Write>(out: &mut W, trial: u64, rows: &[TraceRow], header: bool) -> io::Result<()> {
    if header {
        writeln!(out, "{TRACE_HEADER}")?;
    }
    for r in rows {
        writeln!(
            out,
            "{trial},{},{},{},{:.5e},{},{:.5e},{:.5e}",
            r.sweep,
            r.lpu,
            r.user,
            r.lr,
            u8::from(r.sic_fired),
            r.lambda_bar,
            r.consensus
        )?;
    }
    Ok(())
}
