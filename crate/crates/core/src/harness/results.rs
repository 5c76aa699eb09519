use std::fs;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{ExperimentResult, HarnessError};

pub const RESULTS_HEADER: &str = "receiver,snr_db,ser,stderr,errors,symbols,trials,seed";
pub const DIAG_HEADER: &str =
    "snr_db,consensus_agree,consensus_pairs,conflicts,saturations,zf_regularized,bound_erasures,failures";

/// Error counters for one (receiver, SNR) point. Merging is plain addition.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SerAccumulator {
    pub errors: u64,
    pub symbols: u64,
    pub trials: u64,
    /// Trials on which the receiver failed; excluded from the counts above.
    pub failures: u64,
}

impl SerAccumulator {
    pub fn record(&mut self, errors: u64, users: u64) {
        self.errors += errors;
        self.symbols += users;
        self.trials += 1;
    }

    pub fn merge(&mut self, other: &Self) {
        self.errors += other.errors;
        self.symbols += other.symbols;
        self.trials += other.trials;
        self.failures += other.failures;
    }

    pub fn ser(&self) -> f64 {
        if self.symbols == 0 {
            0.0
        } else {
            self.errors as f64 / self.symbols as f64
        }
    }

    /// Binomial standard error `sqrt(p(1-p)/n)` of [`Self::ser`].
    pub fn stderr(&self) -> f64 {
        if self.symbols == 0 {
            return 0.0;
        }
        let p = self.ser();
        (p * (1.0 - p) / self.symbols as f64).sqrt()
    }
}

/// One line of the results CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct SerRow {
    pub receiver: String,
    pub snr_db: f64,
    pub ser: f64,
    pub stderr: f64,
    pub errors: u64,
    pub symbols: u64,
    pub trials: u64,
    pub seed: u64,
}

/// Six significant digits in exponent form, identical on every platform.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.5e}")
}

fn with_path(path: &Path) -> impl FnOnce(io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Sibling path `<stem>.<suffix>` next to `path`.
pub fn sidecar_path(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

pub fn write_rows<W: Write>(out: &mut W, rows: &[SerRow]) -> io::Result<()> {
    writeln!(out, "{RESULTS_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.receiver,
            fmt_float(r.snr_db),
            fmt_float(r.ser),
            fmt_float(r.stderr),
            r.errors,
            r.symbols,
            r.trials,
            r.seed
        )?;
    }
    Ok(())
}

/// Writes the results CSV at `path`, the config snapshot at
/// `<stem>.config` and per-SNR diagnostics at `<stem>.diag.csv`.
pub fn write_results(result: &ExperimentResult, path: &Path) -> Result<(), HarnessError> {
    let file = fs::File::create(path).map_err(with_path(path))?;
    let mut out = BufWriter::new(file);
    write_rows(&mut out, &result.rows()).map_err(with_path(path))?;
    out.flush().map_err(with_path(path))?;

    let cfg_path = sidecar_path(path, "config");
    fs::write(&cfg_path, result.config_snapshot()).map_err(with_path(&cfg_path))?;

    let diag_path = sidecar_path(path, "diag.csv");
    let mut diag = String::new();
    diag.push_str(DIAG_HEADER);
    diag.push('\n');
    for (snr, d) in result.snr_db.iter().zip(&result.diagnostics) {
        diag.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            fmt_float(*snr),
            d.consensus_agree,
            d.consensus_pairs,
            d.conflicts,
            d.saturations,
            d.zf_regularized,
            d.bound_erasures,
            d.failures
        ));
    }
    fs::write(&diag_path, diag).map_err(with_path(&diag_path))?;
    Ok(())
}

/// Parses a results CSV back into rows.
pub fn read_results(path: &Path) -> Result<Vec<SerRow>, HarnessError> {
    let file = fs::File::open(path).map_err(with_path(path))?;
    parse_rows(BufReader::new(file)).map_err(|e| match e {
        HarnessError::Parse { line, message, .. } => HarnessError::Parse {
            path: path.to_path_buf(),
            line,
            message,
        },
        HarnessError::Io { source, .. } => HarnessError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })
}

pub fn parse_rows<R: BufRead>(input: R) -> Result<Vec<SerRow>, HarnessError> {
    let bad = |line: usize, message: String| HarnessError::Parse {
        path: PathBuf::new(),
        line,
        message,
    };
    let mut rows = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|source| HarnessError::Io {
            path: PathBuf::new(),
            source,
        })?;
        let n = i + 1;
        if n == 1 {
            if line.trim() != RESULTS_HEADER {
                return Err(bad(n, format!("expected header `{RESULTS_HEADER}`")));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(bad(n, format!("expected 8 fields, found {}", f.len())));
        }
        let float = |s: &str| s.parse::<f64>().map_err(|e| bad(n, format!("`{s}`: {e}")));
        let int = |s: &str| s.parse::<u64>().map_err(|e| bad(n, format!("`{s}`: {e}")));
        rows.push(SerRow {
            receiver: f[0].to_string(),
            snr_db: float(f[1])?,
            ser: float(f[2])?,
            stderr: float(f[3])?,
            errors: int(f[4])?,
            symbols: int(f[5])?,
            trials: int(f[6])?,
            seed: int(f[7])?,
        });
    }
    Ok(rows)
}
