use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command as Process;

use chiprobe_cli::config::{parse_config, Command};
use chiprobe_cli::run::{execute, peak_exp2f, EXIT_COMPUTE, EXIT_CONFIG, EXIT_IO, EXIT_OK};
use chiprobe_core::states::OscillatorState;

const LAB_CONFIG: &str = "\
# Fock |5> scan at the default lab rates
state = fock:5
r0 = 0
r_max = 0.5
n_max = 10
omega = 2pi*100 MHz
kappa = 2pi*50 kHz
kappa_delta = 2pi*1 MHz
gamma1 = 2pi*0.4 MHz
gamma2 = 2pi*0.4 MHz
";

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn chiprobe(args: &[&str]) -> (i32, String, String) {
    let out = Process::new(env!("CARGO_BIN_EXE_chiprobe")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn manifest_value(dir: &Path, key: &str) -> String {
    let text = fs::read_to_string(dir.join("manifest.txt")).unwrap();
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")).map(str::to_string))
        .unwrap_or_else(|| panic!("{key} missing from manifest:\n{text}"))
}

#[test]
fn minimal_config_fills_defaults() {
    let cfg = parse_config("state = fock:5\n").unwrap();
    assert_eq!(cfg.command, Command::Scan);
    assert_eq!(cfg.state, OscillatorState::Fock { n: 5 });
    assert_eq!(cfg.plan.r_max, 0.5);
    assert_eq!(cfg.plan.n_max, 10);
    assert_eq!(cfg.grid_resolution, 41);
    assert_eq!(cfg.seed, 0);
}

#[test]
fn unitless_rate_is_rejected_by_name() {
    let errs = parse_config("state = fock:5\ngamma1 = 2.5\n").unwrap_err();
    assert_eq!(errs.len(), 1);
    assert_eq!(errs[0].key, "gamma1");
    assert_eq!(errs[0].line, Some(2));
    assert!(errs[0].to_string().contains("unit"));
}

#[test]
fn lab_rates_keep_seven_periods_under_a_hundred() {
    let cfg = parse_config(LAB_CONFIG).unwrap();
    let (exact, approx) = peak_exp2f(&cfg, 7).unwrap();
    assert!(exact <= 110.0 && approx <= 110.0, "n = 7: {exact} / {approx}");
    let (exact10, _) = peak_exp2f(&cfg, 10).unwrap();
    assert!((1e5 / 3.0..=3e5).contains(&exact10), "n = 10: {exact10}");
}

#[test]
fn scan_writes_three_datasets_and_manifest() {
    let dir = scratch("scan_small");
    let cfg_path = dir.join("run.cfg");
    fs::write(&cfg_path, format!("{LAB_CONFIG}grid_extent = 2\ngrid_resolution = 5\n")).unwrap();
    let out = dir.join("out");
    let (code, stdout, stderr) = chiprobe(&["scan", "--config", cfg_path.to_str().unwrap(), "--output", out.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{stderr}");
    assert!(stdout.contains("scanned 25 points"));
    for (name, header) in [
        ("chi_ideal.csv", "beta_re,beta_im,chi_re,chi_im"),
        ("signal.csv", chiprobe_core::reconstruction::RECORD_CSV_HEADER),
        ("exp2f.csv", "beta_re,beta_im,n,f,exp2f"),
    ] {
        let text = fs::read_to_string(out.join(name)).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(header));
        assert_eq!(lines.count(), 25, "{name}");
    }
    assert_eq!(manifest_value(&out, "status"), "ok");
    assert_eq!(manifest_value(&out, "config.state"), "fock:5");
    assert_eq!(manifest_value(&out, "files"), "chi_ideal.csv signal.csv exp2f.csv");
}

#[test]
fn identical_config_and_seed_reproduce_bytes() {
    let dir = scratch("repro");
    let run = |name: &str, seed: &str| {
        let out = dir.join(name);
        let (code, _, stderr) = chiprobe(&[
            "reconstruct",
            "--set",
            "grid_extent = 1.5",
            "--set",
            "grid_resolution = 7",
            "--set",
            "shots = budget:0.3",
            "--set",
            &format!("seed = {seed}"),
            "--threads",
            "3",
            "--output",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_OK, "{stderr}");
        fs::read(out.join("records.csv")).unwrap()
    };
    let a = run("a", "11");
    let b = run("b", "11");
    let c = run("c", "12");
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn exit_codes() {
    let dir = scratch("exit_codes");
    let out = dir.join("out");
    let out_s = out.to_str().unwrap();

    let (code, _, stderr) = chiprobe(&["scan", "--set", "kappa = 0.3", "--output", out_s]);
    assert_eq!(code, EXIT_CONFIG);
    assert!(stderr.contains("kappa"), "{stderr}");

    let (code, _, _) = chiprobe(&["scan", "--set", "no_such_key = 1", "--output", out_s]);
    assert_eq!(code, EXIT_CONFIG);

    let missing = dir.join("missing.cfg");
    let (code, _, _) = chiprobe(&["scan", "--config", missing.to_str().unwrap(), "--output", out_s]);
    assert_eq!(code, EXIT_IO);

    // A file where the output directory should be.
    let blocker = dir.join("blocker");
    fs::write(&blocker, "").unwrap();
    let (code, _, _) = chiprobe(&["budget", "--output", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(code, EXIT_IO);

    // Saturated budgets fail individual points; the rest is still written.
    let (code, _, stderr) = chiprobe(&[
        "reconstruct",
        "--set",
        "grid_extent = 3.4",
        "--set",
        "grid_resolution = 3",
        "--set",
        "kappa_delta = 2pi*60 MHz",
        "--set",
        "shots = budget:0.1",
        "--output",
        out_s,
    ]);
    assert_eq!(code, EXIT_COMPUTE, "{stderr}");
    assert_eq!(manifest_value(&out, "status"), "partial");
    assert!(manifest_value(&out, "failures").parse::<usize>().unwrap() > 0);
    assert!(out.join("records.csv").exists());

    let (code, stdout, _) = chiprobe(&["budget", "--set", "f_values = 0, 1", "--output", out_s]);
    assert_eq!(code, EXIT_OK);
    assert!(stdout.contains("runs per axis"));
}

#[test]
fn library_execute_runs_cat_and_oracle_check() {
    let dir = scratch("lib_runs");
    let mut cfg = parse_config("command = cat\ngrid_extent = 2\ngrid_resolution = 4\n").unwrap();
    let s = execute(&cfg, &dir.join("cat")).unwrap();
    assert!(s.failures.is_empty());
    assert!(dir.join("cat/cat.csv").exists());

    // Slow drive keeps the oracle cheap; the rates scale with Ω.
    cfg = parse_config(
        "command = oracle-check\nstate = fock:1\nomega = 1 rad/us\nkappa = 0.002 omega\nkappa_delta = 0.01 omega\n\
         gamma1 = 0.004 omega\ngamma2 = 0.004 omega\nn_max = 3\ngrid_extent = 1\ngrid_resolution = 3\noracle_dim = 14\n",
    )
    .unwrap();
    let s = execute(&cfg, &dir.join("oracle")).unwrap();
    let residual: f64 = s.report[0].rsplit(' ').next().unwrap().parse().unwrap();
    assert!(residual < 1e-6, "{:?}", s.report);
}

#[test]
fn moments_of_vacuum() {
    let dir = scratch("moments");
    let cfg = parse_config("command = moments\nstate = fock:0\nfit_order = 4\nr_fit_max = 0.3\n").unwrap();
    let s = execute(&cfg, &dir).unwrap();
    let text = fs::read_to_string(dir.join("moments.csv")).unwrap();
    assert_eq!(text.lines().next(), Some(chiprobe_core::moments::MOMENT_CSV_HEADER));
    assert_eq!(text.lines().count(), 5);
    assert!(s.report.iter().any(|l| l.contains("squeezed = false")));
}
