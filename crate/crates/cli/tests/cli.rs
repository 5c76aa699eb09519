use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn xlmimo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xlmimo"))
        .args(args)
        .env_remove("XLMIMO_WORKERS")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &[&str] = &["--set", "M=16", "--set", "K=3", "--set", "B=2", "--set", "T=2", "--snr", "-5,5", "--seed", "7"];

fn run_small(extra: &[&str]) -> Output {
    let mut args = vec!["run"];
    args.extend_from_slice(SMALL);
    args.extend_from_slice(extra);
    xlmimo(&args)
}

#[test]
fn zero_trials_is_a_usage_error() {
    let o = run_small(&["--trials", "0"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn unknown_receiver_is_a_usage_error() {
    let o = run_small(&["--trials", "2", "--receivers", "mfbp,mmse"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("mmse"));
}

#[test]
fn bad_config_line_is_reported_with_its_number() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "M = 16\nK = 3\nthis line is wrong\n").unwrap();
    let o = xlmimo(&["run", "--config", cfg.to_str().unwrap(), "--trials", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn unknown_key_and_indivisible_partition_are_rejected() {
    let o = xlmimo(&["run", "--set", "Q=1", "--trials", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = xlmimo(&["run", "--set", "M=10", "--set", "B=3", "--trials", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn results_go_to_stdout_without_out() {
    let o = run_small(&["--trials", "5", "--workers", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("receiver,snr_db,ser,stderr,errors,symbols,trials,seed"));
    // mfbp, mfbp_mid, zf, cvmp, bound at two SNR points
    assert_eq!(lines.count(), 10);
}

#[test]
fn identical_runs_write_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let run_to = |name: &str, workers: &str| {
        let p = dir.path().join(name);
        let o = run_small(&["--trials", "20", "--workers", workers, "--out", p.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
        p
    };
    let a = run_to("a.csv", "1");
    let b = run_to("b.csv", "2");
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert!(Path::new(&dir.path().join("a.config")).exists());
    assert!(Path::new(&dir.path().join("a.diag.csv")).exists());
}

#[test]
fn trace_file_has_a_header_and_rows() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let o = run_small(&["--trials", "3", "--receivers", "mfbp", "--trace", trace.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let found: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().path()).collect();
    let text: String = found.iter().map(|p| fs::read_to_string(p).unwrap()).collect();
    assert!(text.starts_with("trial,sweep,lpu,user,lr,sic_fired,lambda_bar,consensus_frac"));
    assert!(text.lines().count() > 1);
}

#[test]
fn complexity_prints_the_table() {
    let o = xlmimo(&["complexity", "--M", "300", "--K", "40", "--B", "5", "--J", "2", "--T", "10"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for name in ["mf_per_lpu", "mfbp_worst", "mfbp_best", "daisy_chain", "zf", "central_vmp", "sic_vmp"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "missing {name}");
    }
    let o = xlmimo(&["complexity", "--M", "0", "--K", "1", "--B", "1", "--J", "1", "--T", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn help_lists_config_keys() {
    let o = xlmimo(&["run", "--help"]);
    let text = String::from_utf8(o.stdout).unwrap();
    for key in ["gamma_thr", "cov_refresh", "lambda_init", "j_central", "vr_length_model"] {
        assert!(text.contains(key), "help lacks {key}");
    }
}

#[test]
fn inspect_channel_dumps_h() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("h.bin");
    let mut args = vec!["inspect-channel"];
    args.extend_from_slice(SMALL);
    args.extend_from_slice(&["--dump", dump.to_str().unwrap()]);
    let o = xlmimo(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    // 16 x 3 complex doubles plus the two dimension words
    assert_eq!(fs::metadata(&dump).unwrap().len(), 16 + 16 * 3 * 16);
}
