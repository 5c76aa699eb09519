use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use xlmimo::channel::dump::write_matrix;
use xlmimo::harness::{
    block_specs, complexity_estimates, parse_receivers, run_monte_carlo, sidecar_path,
    trial_realization, write_results, write_rows, ExperimentConfig, HarnessError, ReceiverKind,
};
use xlmimo::model::{parse_real_list, SubArrayIndexing, SYSTEM_KEYS};
use xlmimo::receiver::write_trace_csv;
use xlmimo::{Constellation, SystemConfig};

/// Exit status for usage and configuration errors.
const EXIT_USAGE: u8 = 2;
/// Exit status under `--strict` when any receiver failed on some trial.
const EXIT_FAILURES: u8 = 3;

fn config_keys_help() -> String {
    let mut s = String::from("Config keys (config file `key = value`, or --set key=value):\n");
    for (k, doc) in SYSTEM_KEYS {
        s.push_str(&format!("  {k:<16} {doc}\n"));
    }
    s
}

#[derive(Parser)]
#[command(name = "xlmimo", version, about = "Decentralized uplink detection for extra-large MIMO arrays")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo SER experiment.
    #[command(after_help = config_keys_help())]
    Run(RunArgs),
    /// Print operation counts of the receivers.
    Complexity(ComplexityArgs),
    /// Draw one channel realization and show which antennas see which user.
    #[command(after_help = config_keys_help())]
    InspectChannel(InspectArgs),
}

#[derive(Args)]
struct SystemArgs {
    /// Config file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// SNR points in dB, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    snr: Option<String>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// `sequential` or `flooding`.
    #[arg(long)]
    schedule: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    system: SystemArgs,
    /// Number of trials per SNR point.
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    /// Receivers to run: any of mfbp, zf, cvmp, bound.
    #[arg(long, default_value = "mfbp,zf,cvmp,bound")]
    receivers: String,
    /// Results CSV; stdout if omitted. The config snapshot and diagnostics
    /// are written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, env = "XLMIMO_WORKERS")]
    workers: Option<usize>,
    /// Exit with status 3 if any receiver failed on any trial.
    #[arg(long)]
    strict: bool,
    /// LPU (1-based) scored for the `mfbp` row.
    #[arg(long, default_value_t = 1)]
    readout_lpu: usize,
    /// Noise for the single-user bound: `shared` with the trial or `fresh`.
    #[arg(long, default_value = "shared")]
    bound_noise: String,
    /// Write MF-BP diagnostic traces to this CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Number of leading trials to trace.
    #[arg(long, default_value_t = 1)]
    trace_trials: u64,
}

#[derive(Args)]
struct ComplexityArgs {
    #[arg(long = "M")]
    m: u64,
    #[arg(long = "K")]
    k: u64,
    #[arg(long = "B")]
    b: u64,
    /// Constellation size.
    #[arg(long = "mod", default_value_t = 4)]
    alphabet: u64,
    #[arg(long = "J")]
    j: u64,
    #[arg(long = "T")]
    t: u64,
}

#[derive(Args)]
struct InspectArgs {
    #[command(flatten)]
    system: SystemArgs,
    /// Trial index to draw.
    #[arg(long, default_value_t = 0)]
    trial: u64,
    /// Also write H in the binary dump format.
    #[arg(long)]
    dump: Option<PathBuf>,
}

/// Error that maps to the usage exit status.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn load_system(args: &SystemArgs) -> Result<SystemConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
            SystemConfig::from_text(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?
        }
        None => SystemConfig::default(),
    };
    for kv in &args.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| usage(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        match cfg.set(k.trim(), v.trim()) {
            Ok(true) => {}
            Ok(false) => return Err(usage(format!("unknown config key `{}`", k.trim()))),
            Err(e) => return Err(usage(e)),
        }
    }
    if let Some(snr) = &args.snr {
        cfg.snr_db = parse_real_list(snr).map_err(usage)?;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(s) = &args.schedule {
        cfg.schedule = s.parse().map_err(|e: String| usage(e))?;
    }
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    Ok(cfg)
}

fn run(args: RunArgs) -> Result<ExitCode> {
    let system = load_system(&args.system)?;
    let receivers = parse_receivers(&args.receivers).map_err(usage)?;
    let mut exp = ExperimentConfig::new(system, receivers, args.trials);
    exp.workers = args.workers;
    if args.readout_lpu == 0 {
        return Err(usage("--readout-lpu is 1-based"));
    }
    exp.readout_lpu = args.readout_lpu - 1;
    exp.bound_fresh_noise = match args.bound_noise.as_str() {
        "shared" => false,
        "fresh" => true,
        other => return Err(usage(format!("--bound-noise must be shared or fresh, got `{other}`"))),
    };
    if args.trace.is_some() {
        if !exp.receivers.contains(&ReceiverKind::MfBp) {
            return Err(usage("--trace needs the mfbp receiver"));
        }
        exp.trace_trials = args.trace_trials;
    }

    let result = match run_monte_carlo(&exp) {
        Ok(r) => r,
        Err(e @ (HarnessError::InvalidInput(_) | HarnessError::Config(_))) => return Err(usage(e.to_string())),
        Err(e) => return Err(e.into()),
    };

    match &args.out {
        Some(path) => {
            write_results(&result, path)?;
            eprintln!(
                "wrote {} (+ {}, {})",
                path.display(),
                sidecar_path(path, "config").display(),
                sidecar_path(path, "diag.csv").display()
            );
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write_rows(&mut lock, &result.rows())?;
        }
    }
    if let Some(path) = &args.trace {
        write_traces(&result.traces, path)?;
    }

    for (snr, d) in result.snr_db.iter().zip(&result.diagnostics) {
        if d.consensus_pairs > 0 {
            eprintln!("snr {snr} dB: LPU consensus {:.4}", d.consensus_fraction());
        }
    }
    for f in &result.failures {
        eprintln!("failure: {} at {} dB, trial {}: {}", f.receiver, f.snr_db, f.trial, f.message);
    }
    eprintln!("{} trials in {:.1?}", exp.trials, result.wall_clock);
    if args.strict && result.total_failures() > 0 {
        return Ok(ExitCode::from(EXIT_FAILURES));
    }
    Ok(ExitCode::SUCCESS)
}

fn write_traces(traces: &[xlmimo::harness::TrialTrace], path: &Path) -> Result<()> {
    // one file per SNR point keeps the trace columns unambiguous
    let mut snrs: Vec<f64> = traces.iter().map(|t| t.snr_db).collect();
    snrs.sort_by(f64::total_cmp);
    snrs.dedup();
    for (i, snr) in snrs.iter().enumerate() {
        let p = if snrs.len() == 1 {
            path.to_path_buf()
        } else {
            sidecar_path(path, &format!("snr{i}.csv"))
        };
        let file = fs::File::create(&p).with_context(|| format!("creating {}", p.display()))?;
        let mut out = BufWriter::new(file);
        let mut header = true;
        for t in traces.iter().filter(|t| t.snr_db == *snr) {
            write_trace_csv(&mut out, t.trial, &t.rows, header)?;
            header = false;
        }
        out.flush()?;
        eprintln!("trace for {snr} dB in {}", p.display());
    }
    Ok(())
}

fn complexity(args: ComplexityArgs) -> Result<ExitCode> {
    if [args.m, args.k, args.b, args.alphabet, args.j, args.t].contains(&0) {
        return Err(usage("all dimensions must be positive"));
    }
    let table = complexity_estimates(args.m, args.k, args.b, args.alphabet, args.j, args.t);
    for (name, value) in table.rows() {
        println!("{name:<12} {value}");
    }
    Ok(ExitCode::SUCCESS)
}

fn inspect(args: InspectArgs) -> Result<ExitCode> {
    let cfg = load_system(&args.system)?;
    let c = Constellation::qpsk();
    let block = args.trial / cfg.cov_refresh as u64;
    let specs = block_specs(&cfg, block)?;
    let snr = cfg.snr_db[0];
    let (real, _) = trial_realization(&specs, &c, cfg.seed, args.trial, snr)?;
    let idx = SubArrayIndexing::new(cfg.m, cfg.b)?;

    println!(
        "M={} K={} B={} trial={} snr={} dB sigma2={:.4e}",
        cfg.m, cfg.k, cfg.b, args.trial, snr, real.sigma2_n
    );
    // one character per antenna, `|` between sub-arrays
    let width = cfg.m;
    let mut ruler = String::new();
    for p in 0..width {
        if p > 0 && p % idx.per_lpu() == 0 {
            ruler.push('|');
        }
        ruler.push(if p % 10 == 0 { '+' } else { '-' });
    }
    println!("{:>5} {:>7} {:>10}  {ruler}", "user", "theta", "vr");
    for (k, spec) in specs.iter().enumerate() {
        let mut row = String::new();
        for p in 0..width {
            if p > 0 && p % idx.per_lpu() == 0 {
                row.push('|');
            }
            row.push(if spec.vr.contains(p) { '#' } else { '.' });
        }
        println!(
            "{k:>5} {:>7.3} {:>10}  {row}",
            spec.theta,
            format!("{}..{}", spec.vr.antennas.start, spec.vr.antennas.end)
        );
    }
    println!("\nper-LPU channel energy ||h_bk||^2:");
    for (k, _) in specs.iter().enumerate() {
        let energies: Vec<String> = idx
            .ranges()
            .map(|r| format!("{:8.2}", real.h.view((r.start, k), (r.len(), 1)).norm_squared()))
            .collect();
        println!("{k:>5} {}", energies.join(" "));
    }
    if let Some(path) = &args.dump {
        let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut out = BufWriter::new(file);
        write_matrix(&mut out, &real.h)?;
        out.flush()?;
        eprintln!("wrote H ({}x{}) to {}", real.h.nrows(), real.h.ncols(), path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(a) => run(a),
        Command::Complexity(a) => complexity(a),
        Command::InspectChannel(a) => inspect(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
