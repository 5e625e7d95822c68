//! Executes a validated [`RunConfig`] and writes its datasets.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use chiprobe_core::catprep::{chi_prepared_cat, write_cat_csv};
use chiprobe_core::functionals::{f_harmonic_approx, run_budget, Functionals, BUDGET_SATURATED};
use chiprobe_core::lindblad::OracleConfig;
use chiprobe_core::model::{period_time, CouplingProfile, PhasePoint};
use chiprobe_core::moments::{fit_moments, geometric_radii, write_moment_report, MomentFitConfig};
use chiprobe_core::reconstruction::{
    exact_signal, plan_point, ray_grid, scan_grid, square_grid, write_records_csv, Engine, PlanConfig, ScanConfig,
    ScanOutput, ShotPolicy,
};
use chiprobe_core::states::{chi, to_density_matrix};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::config::{Command, ConfigError, EngineChoice, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_COMPUTE: i32 = 2;
pub const EXIT_IO: i32 = 3;

pub const MANIFEST: &str = "manifest.txt";

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("computation failed: {0}")]
    Compute(#[from] chiprobe_core::Error),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Compute(_) => EXIT_COMPUTE,
            RunError::Io { .. } => EXIT_IO,
        }
    }

    fn io(context: impl Into<String>) -> impl FnOnce(io::Error) -> RunError {
        let context = context.into();
        move |source| RunError::Io { context, source }
    }
}

pub fn format_config_errors(errors: &[ConfigError]) -> String {
    errors.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n")
}

/// What a finished run produced.
#[derive(Debug, Clone, Default)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    /// Points that failed; the run still wrote everything else.
    pub failures: Vec<String>,
    /// Human-readable result lines.
    pub report: Vec<String>,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            EXIT_OK
        } else {
            EXIT_COMPUTE
        }
    }
}

/// Runs `cfg`, writing datasets and `manifest.txt` under `out_dir`. The
/// manifest is written whether or not the computation succeeds.
pub fn execute(cfg: &RunConfig, out_dir: &Path) -> Result<RunSummary, RunError> {
    let start = Instant::now();
    fs::create_dir_all(out_dir).map_err(RunError::io(format!("creating {}", out_dir.display())))?;
    let mut summary = RunSummary::default();
    let result = dispatch(cfg, out_dir, &mut summary);
    let manifest = render_manifest(cfg, &summary, result.as_ref().err(), start.elapsed().as_secs_f64());
    let path = out_dir.join(MANIFEST);
    fs::write(&path, manifest).map_err(RunError::io(format!("writing {}", path.display())))?;
    result.map(|()| summary)
}

fn dispatch(cfg: &RunConfig, out: &Path, summary: &mut RunSummary) -> Result<(), RunError> {
    match cfg.command {
        Command::Scan => run_scan(cfg, out, summary),
        Command::Reconstruct => run_reconstruct(cfg, out, summary),
        Command::Moments => run_moments(cfg, out, summary),
        Command::Cat => run_cat(cfg, out, summary),
        Command::OracleCheck => run_oracle_check(cfg, out, summary),
        Command::Budget => run_budget_table(cfg, out, summary),
    }
}

fn render_manifest(cfg: &RunConfig, summary: &RunSummary, error: Option<&RunError>, wall: f64) -> String {
    let status = match (error, summary.failures.is_empty()) {
        (Some(_), _) => "failed",
        (None, true) => "ok",
        (None, false) => "partial",
    };
    let mut m = String::new();
    let _ = writeln!(m, "command = {}", cfg.command);
    let _ = writeln!(m, "version = {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(m, "seed = {}", cfg.seed);
    let _ = writeln!(m, "threads = {}", rayon::current_num_threads());
    let _ = writeln!(m, "status = {status}");
    let _ = writeln!(m, "failures = {}", summary.failures.len());
    if let Some(e) = error {
        let _ = writeln!(m, "error = {}", e.to_string().replace('\n', " "));
    }
    let _ = writeln!(m, "wall_time_s = {wall:.3}");
    let names: Vec<String> = summary
        .files
        .iter()
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect();
    let _ = writeln!(m, "files = {}", names.join(" "));
    for (k, v) in &cfg.echo {
        let _ = writeln!(m, "config.{k} = {v}");
    }
    for (k, f) in summary.failures.iter().enumerate() {
        let _ = writeln!(m, "failure.{k} = {f}");
    }
    m
}

fn write_file(
    out: &Path,
    name: &str,
    summary: &mut RunSummary,
    body: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>,
) -> Result<(), RunError> {
    let path = out.join(name);
    let ctx = format!("writing {}", path.display());
    let file = File::create(&path).map_err(RunError::io(ctx.clone()))?;
    let mut w = BufWriter::new(file);
    body(&mut w).and_then(|()| w.flush()).map_err(RunError::io(ctx))?;
    summary.files.push(path);
    Ok(())
}

fn engine(cfg: &RunConfig) -> Engine {
    match cfg.engine {
        EngineChoice::Analytic => Engine::Analytic,
        EngineChoice::Oracle => Engine::Oracle(OracleConfig::default().with_dim(cfg.oracle_dim)),
    }
}

fn scan_config(cfg: &RunConfig) -> ScanConfig {
    ScanConfig {
        plan: cfg.plan,
        engine: engine(cfg),
        seed: cfg.seed,
    }
}

fn scan(cfg: &RunConfig, grid: &[PhasePoint], summary: &mut RunSummary) -> Result<ScanOutput, RunError> {
    let out = scan_grid(&cfg.state, grid, &scan_config(cfg), &cfg.params, cfg.omega)?;
    for f in &out.failures {
        let b = f.beta.beta();
        summary.failures.push(format!("point {} beta = {}{:+}i: {}", f.index, b.re, b.im, f.error));
    }
    Ok(out)
}

fn run_scan(cfg: &RunConfig, out: &Path, summary: &mut RunSummary) -> Result<(), RunError> {
    let grid = square_grid(cfg.grid_extent, cfg.grid_resolution)?;
    write_file(out, "chi_ideal.csv", summary, |w| {
        writeln!(w, "beta_re,beta_im,chi_re,chi_im")?;
        for &b in &grid {
            let c = chi(&cfg.state, b);
            writeln!(w, "{:.16e},{:.16e},{:.16e},{:.16e}", b.beta().re, b.beta().im, c.re, c.im)?;
        }
        Ok(())
    })?;

    let records = scan(cfg, &grid, summary)?;
    write_file(out, "signal.csv", summary, |w| write_records_csv(w, &records.records))?;

    // Damping is independent of shots; plan without a budget so it never saturates.
    let plan = PlanConfig {
        shots: ShotPolicy::Infinite,
        ..cfg.plan
    };
    let points: Vec<_> = grid
        .par_iter()
        .map(|&b| plan_point(b, &plan, &cfg.params, cfg.omega))
        .collect();
    let mut peak: f64 = 1.0;
    write_file(out, "exp2f.csv", summary, |w| {
        writeln!(w, "beta_re,beta_im,n,f,exp2f")?;
        for (b, p) in grid.iter().zip(&points) {
            if let Ok(p) = p {
                let e = (2.0 * p.f).exp();
                peak = peak.max(e);
                writeln!(w, "{:.16e},{:.16e},{},{:.16e},{:.16e}", b.beta().re, b.beta().im, p.n, p.f, e)?;
            }
        }
        Ok(())
    })?;
    summary.report.push(format!(
        "scanned {} points ({} failed); max e^(2f) on grid = {peak:.4e}",
        grid.len(),
        records.failures.len()
    ));
    Ok(())
}

fn run_reconstruct(cfg: &RunConfig, out: &Path, summary: &mut RunSummary) -> Result<(), RunError> {
    let grid = square_grid(cfg.grid_extent, cfg.grid_resolution)?;
    let records = scan(cfg, &grid, summary)?;
    write_file(out, "records.csv", summary, |w| write_records_csv(w, &records.records))?;
    let worst = records
        .records
        .iter()
        .map(|r| (r.chi_hat - chi(&cfg.state, r.point.beta)).norm())
        .fold(0.0, f64::max);
    let outside = records.records.iter().filter(|r| r.exceeds_unit_disk()).count();
    summary.report.push(format!(
        "reconstructed {} of {} points; max |chi_hat - chi| = {worst:.3e}; {outside} estimates outside the unit disk",
        records.records.len(),
        grid.len()
    ));
    Ok(())
}

fn run_moments(cfg: &RunConfig, out: &Path, summary: &mut RunSummary) -> Result<(), RunError> {
    let radii = geometric_radii(cfg.fit_radii, cfg.r_fit_max)?;
    let grid = ray_grid(cfg.ray_phi, &radii)?;
    let records = scan(cfg, &grid, summary)?;
    write_file(out, "records.csv", summary, |w| write_records_csv(w, &records.records))?;
    let fit = fit_moments(
        &records.records,
        &MomentFitConfig {
            order: cfg.fit_order,
            ..MomentFitConfig::default()
        },
    )?;
    write_file(out, "moments.csv", summary, |w| write_moment_report(w, std::slice::from_ref(&fit)))?;
    summary.report.push(format!("quadrature angle theta = {:.6}", fit.theta));
    for k in 1..=cfg.fit_order {
        if let Some(m) = fit.moment(k) {
            summary.report.push(format!("  <X^{k}> = {:.6} +/- {:.2e}", m.value, m.stderr));
        }
    }
    if let Some(v) = fit.variance() {
        summary.report.push(format!("  variance = {:.6} +/- {:.2e}", v.value, v.stderr));
    }
    summary.report.push(format!("  squeezed = {}, non-Gaussian = {}", fit.squeezed(), fit.non_gaussian()));
    Ok(())
}

fn run_cat(cfg: &RunConfig, out: &Path, summary: &mut RunSummary) -> Result<(), RunError> {
    let g = CouplingProfile::harmonic(cfg.plan.r0, cfg.cat_r, cfg.cat_phi, cfg.omega, cfg.params.kappa())?;
    let t = period_time(cfg.cat_n, cfg.omega);
    let cat = chi_prepared_cat(t, &g, &cfg.params, cfg.omega, cfg.varphi, cfg.parity)?;
    let grid = square_grid(cfg.grid_extent, cfg.grid_resolution)?;
    write_file(out, "cat.csv", summary, |w| write_cat_csv(w, &cat, &grid))?;
    let alpha = cat.target_alpha();
    summary.report.push(format!(
        "post-selection probability = {:.6}; target alpha = {:.6}{:+.6}i",
        cat.probability(),
        alpha.re,
        alpha.im
    ));
    let peak = PhasePoint::new(2.0 * alpha * Complex64::i())?;
    summary.report.push(format!(
        "interference peak |chi| at 2i*alpha: prepared {:.6}, ideal {:.6}",
        cat.eval(peak).norm(),
        cat.ideal(peak).norm()
    ));
    Ok(())
}

fn run_oracle_check(cfg: &RunConfig, out: &Path, summary: &mut RunSummary) -> Result<(), RunError> {
    let grid = square_grid(cfg.grid_extent, cfg.grid_resolution)?;
    let ocfg = OracleConfig::default().with_dim(cfg.oracle_dim);
    let rho = to_density_matrix(&cfg.state, ocfg.dim)?;
    let plan = PlanConfig {
        shots: ShotPolicy::Infinite,
        ..cfg.plan
    };
    let analytic_cfg = ScanConfig {
        plan,
        engine: Engine::Analytic,
        seed: cfg.seed,
    };
    let oracle_cfg = ScanConfig {
        engine: Engine::Oracle(ocfg),
        ..analytic_cfg.clone()
    };
    let rows: Vec<_> = grid
        .par_iter()
        .map(|&b| -> chiprobe_core::Result<_> {
            let p = plan_point(b, &plan, &cfg.params, cfg.omega)?;
            let a = exact_signal(&cfg.state, None, &p, &analytic_cfg, &cfg.params, cfg.omega)?;
            let o = exact_signal(&cfg.state, Some(&rho), &p, &oracle_cfg, &cfg.params, cfg.omega)?;
            Ok((p.n, a, o))
        })
        .collect();
    let mut worst: f64 = 0.0;
    write_file(out, "oracle_check.csv", summary, |w| {
        writeln!(w, "beta_re,beta_im,n,analytic_re,analytic_im,oracle_re,oracle_im,residual")?;
        for (b, row) in grid.iter().zip(&rows) {
            if let Ok((n, a, o)) = row {
                let res = (a - o).norm();
                worst = worst.max(res);
                writeln!(
                    w,
                    "{:.16e},{:.16e},{n},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                    b.beta().re,
                    b.beta().im,
                    a.re,
                    a.im,
                    o.re,
                    o.im,
                    res
                )?;
            }
        }
        Ok(())
    })?;
    for (k, (b, row)) in grid.iter().zip(&rows).enumerate() {
        if let Err(e) = row {
            summary.failures.push(format!("point {k} beta = {}{:+}i: {e}", b.beta().re, b.beta().im));
        }
    }
    summary.report.push(format!(
        "compared {} points (oracle dim {}); max residual = {worst:.3e}",
        rows.iter().filter(|r| r.is_ok()).count(),
        ocfg.dim
    ));
    Ok(())
}

/// Largest `e^{2f}` over the outer edge `r = r_max` of the `n`-period
/// annulus, as `(exact, first-order)`.
pub fn peak_exp2f(cfg: &RunConfig, n: u32) -> Result<(f64, f64), RunError> {
    const PHI_SAMPLES: usize = 360;
    let (r, kappa) = (cfg.plan.r_max, cfg.params.kappa());
    let t = period_time(n, cfg.omega);
    let mut exact: f64 = 0.0;
    let mut approx: f64 = 0.0;
    for k in 0..PHI_SAMPLES {
        let phi = -PI + 2.0 * PI * k as f64 / PHI_SAMPLES as f64;
        let g = CouplingProfile::harmonic(cfg.plan.r0, r, phi, cfg.omega, kappa)?;
        let f = Functionals::new(&g, cfg.omega, kappa)?.damping_f(t, &cfg.params)?;
        exact = exact.max((2.0 * f).exp());
        approx = approx.max((2.0 * f_harmonic_approx(cfg.plan.r0, r, phi, n, &cfg.params, cfg.omega)).exp());
    }
    Ok((exact, approx))
}

fn budget_text(m: u64) -> String {
    if m == BUDGET_SATURATED {
        "saturated".into()
    } else {
        m.to_string()
    }
}

fn run_budget_table(cfg: &RunConfig, out: &Path, summary: &mut RunSummary) -> Result<(), RunError> {
    let eps = cfg.target_rel_error;
    let rows = cfg
        .f_values
        .iter()
        .map(|&f| Ok((f, (2.0 * f).exp(), run_budget(f, eps)?)))
        .collect::<Result<Vec<_>, RunError>>()?;
    write_file(out, "budget.csv", summary, |w| {
        writeln!(w, "f,exp2f,target_rel_error,runs_per_axis")?;
        for (f, e, m) in &rows {
            writeln!(w, "{f:.16e},{e:.16e},{eps:.16e},{}", budget_text(*m))?;
        }
        Ok(())
    })?;
    summary.report.push(format!("{:>10} {:>14} {:>16}", "f", "e^(2f)", "runs per axis"));
    for (f, e, m) in &rows {
        summary.report.push(format!("{f:>10.4} {e:>14.4e} {:>16}", budget_text(*m)));
    }

    let periods = (1..=cfg.plan.n_max)
        .into_par_iter()
        .map(|n| Ok((n, peak_exp2f(cfg, n)?)))
        .collect::<Result<Vec<_>, RunError>>()?;
    let mut prows = Vec::with_capacity(periods.len());
    for (n, (exact, approx)) in periods {
        prows.push((n, exact, approx, run_budget(0.5 * exact.ln(), eps)?));
    }
    write_file(out, "budget_periods.csv", summary, |w| {
        writeln!(w, "n,reach,max_exp2f_exact,max_exp2f_approx,runs_per_axis")?;
        for (n, exact, approx, m) in &prows {
            let reach = *n as f64 * cfg.plan.r_max;
            writeln!(w, "{n},{reach:.16e},{exact:.16e},{approx:.16e},{}", budget_text(*m))?;
        }
        Ok(())
    })?;
    summary.report.push(String::new());
    summary.report.push(format!(
        "{:>3} {:>8} {:>14} {:>14} {:>16}",
        "n", "|beta|<", "max e^(2f)", "first order", "runs per axis"
    ));
    for (n, exact, approx, m) in &prows {
        summary.report.push(format!(
            "{n:>3} {:>8.3} {exact:>14.4e} {approx:>14.4e} {:>16}",
            *n as f64 * cfg.plan.r_max,
            budget_text(*m)
        ));
    }
    Ok(())
}
