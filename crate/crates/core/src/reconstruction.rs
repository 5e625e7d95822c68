//! Measurement protocol: phase-space targets, finite-shot qubit readout, and
//! decoherence-corrected characteristic-function records.

use std::fmt;
use std::io::{self, Write};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Binomial;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::functionals::{f_harmonic_approx, run_budget, xi_harmonic_closed, Functionals};
use crate::lindblad::{evolve_master, pauli_expectations, JointState, OracleConfig};
use crate::model::{period_time, CouplingProfile, DecoherenceParams, PhasePoint};
use crate::states::{chi, to_density_matrix, NumericDensityMatrix, OscillatorState};

/// Shot count meaning "exact expectation values" (infinite-shot limit).
pub const EXACT_MEANS: u64 = 0;

/// Which damping exponent a plan carries and the correction divides out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FMode {
    /// Adaptive quadrature of the exact functional.
    #[default]
    Exact,
    /// First-order expansion in `κ/Ω`.
    Approx,
}

/// Shots per Pauli axis at each point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShotPolicy {
    Infinite,
    /// `run_budget(f, ε)` shots on each axis.
    Budgeted { target_rel_error: f64 },
    Fixed { shots: u64 },
}

impl ShotPolicy {
    fn shots(&self, f: f64) -> Result<u64> {
        match *self {
            ShotPolicy::Infinite => Ok(EXACT_MEANS),
            ShotPolicy::Budgeted { target_rel_error } => {
                let m = run_budget(f, target_rel_error)?;
                if m == crate::functionals::BUDGET_SATURATED {
                    return Err(Error::BudgetSaturated { f });
                }
                Ok(m)
            }
            ShotPolicy::Fixed { shots } => {
                if shots == 0 {
                    return Err(invalid("shots", "must be >= 1"));
                }
                Ok(shots)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanConfig {
    pub r_max: f64,
    pub n_max: u32,
    /// Constant part of the harmonic coupling.
    pub r0: f64,
    pub f_mode: FMode,
    pub shots: ShotPolicy,
}

impl Default for PlanConfig {
    fn default() -> Self {
        Self {
            r_max: 0.5,
            n_max: 10,
            r0: 0.0,
            f_mode: FMode::Exact,
            shots: ShotPolicy::Infinite,
        }
    }
}

impl PlanConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_max > 0.0 && self.r_max.is_finite()) {
            return Err(invalid("r_max", format!("must be > 0, got {}", self.r_max)));
        }
        if self.n_max == 0 {
            return Err(invalid("n_max", "must be >= 1"));
        }
        if !self.r0.is_finite() {
            return Err(invalid("r0", "must be finite"));
        }
        if let ShotPolicy::Budgeted { target_rel_error } = self.shots {
            if !(target_rel_error > 0.0 && target_rel_error <= 1.0) {
                return Err(invalid("target_rel_error", "must be in (0, 1]"));
            }
        }
        Ok(())
    }

    /// Largest `|β|` reachable: points must satisfy `|β| < n_max r_max`.
    pub fn reach(&self) -> f64 {
        self.n_max as f64 * self.r_max
    }
}

/// Harmonic-coupling settings that steer the probe to one phase-space point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolPoint {
    pub beta: PhasePoint,
    pub r: f64,
    pub phi: f64,
    pub n: u32,
    pub t: f64,
    pub f: f64,
    /// Planned shots per axis; [`EXACT_MEANS`] in the infinite-shot limit.
    pub budget: u64,
}

impl ProtocolPoint {
    pub fn coupling(&self, r0: f64, params: &DecoherenceParams, omega: f64) -> Result<CouplingProfile> {
        CouplingProfile::harmonic(r0, self.r, self.phi, omega, params.kappa())
    }
}

/// Number of periods for `|β|`: the integer with `(n−1) r_max ≤ |β| < n r_max`.
pub fn periods_for(modulus: f64, r_max: f64) -> u32 {
    (modulus / r_max).floor() as u32 + 1
}

/// Plans the harmonic coupling `(r, φ, n)` reaching `beta`.
pub fn plan_point(
    beta: PhasePoint,
    cfg: &PlanConfig,
    params: &DecoherenceParams,
    omega: f64,
) -> Result<ProtocolPoint> {
    cfg.validate()?;
    if !(omega > 0.0) {
        return Err(invalid("omega", "must be > 0"));
    }
    let b = beta.beta();
    let modulus = b.norm();
    let n = periods_for(modulus, cfg.r_max);
    if n > cfg.n_max {
        return Err(Error::BeyondReach {
            modulus,
            needed: n,
            n_max: cfg.n_max,
        });
    }
    let r = modulus / n as f64;
    let phi = if modulus == 0.0 { 0.0 } else { b.arg() };
    let t = period_time(n, omega);
    let f = match cfg.f_mode {
        FMode::Exact => {
            let g = CouplingProfile::harmonic(cfg.r0, r, phi, omega, params.kappa())?;
            Functionals::new(&g, omega, params.kappa())?.damping_f(t, params)?
        }
        FMode::Approx => f_harmonic_approx(cfg.r0, r, phi, n, params, omega).max(0.0),
    };
    let budget = if modulus == 0.0 { EXACT_MEANS } else { cfg.shots.shots(f)? };
    Ok(ProtocolPoint {
        beta,
        r,
        phi,
        n,
        t,
        f,
        budget,
    })
}

/// `ξ` the planned coupling reaches in closed form.
pub fn planned_xi(point: &ProtocolPoint) -> Complex64 {
    xi_harmonic_closed(point.r, point.phi, point.n)
}

fn check_component(name: &'static str, v: f64) -> Result<f64> {
    const SLACK: f64 = 1e-9;
    if !(v.abs() <= 1.0 + SLACK) {
        return Err(invalid(name, format!("expectation {v} outside [-1, 1]")));
    }
    Ok(v.clamp(-1.0, 1.0))
}

fn sample_axis(mean: f64, m: u64, rng: &mut ChaCha8Rng) -> f64 {
    let p = (0.5 * (1.0 + mean)).clamp(0.0, 1.0);
    let ups = rng.sample(Binomial::new(m, p).expect("p in [0, 1]"));
    (2.0 * ups as f64 - m as f64) / m as f64
}

fn axis_rng(seed: u64, point_index: u64, axis: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(point_index.wrapping_mul(2).wrapping_add(axis));
    rng
}

/// Sample means of `m_x` σx and `m_y` σy single-shot outcomes (±1) for
/// the expectation `⟨σx⟩ + i⟨σy⟩ = true_signal`.
pub fn simulate_runs(true_signal: Complex64, m_x: u64, m_y: u64, seed: u64) -> Result<(f64, f64)> {
    simulate_runs_at(true_signal, m_x, m_y, seed, 0)
}

/// As [`simulate_runs`] on the random stream of grid point `point_index`.
/// Each `(seed, point_index, axis)` owns an independent stream.
pub fn simulate_runs_at(
    true_signal: Complex64,
    m_x: u64,
    m_y: u64,
    seed: u64,
    point_index: u64,
) -> Result<(f64, f64)> {
    let sx = check_component("true_signal.re", true_signal.re)?;
    let sy = check_component("true_signal.im", true_signal.im)?;
    if m_x == 0 || m_y == 0 {
        return Err(invalid("m_x", "shot counts must be >= 1"));
    }
    let x = sample_axis(sx, m_x, &mut axis_rng(seed, point_index, 0));
    let y = sample_axis(sy, m_y, &mut axis_rng(seed, point_index, 1));
    Ok((x, y))
}

/// Corrected estimate `(sx + i sy) e^{f}` and its standard error.
///
/// The error is `e^{f} √(((1 − sx²)/m_x + (1 − sy²)/m_y)/2)`, the per-component
/// rms of the complex error; it is zero when either count is [`EXACT_MEANS`].
pub fn correct_decoherence(sx_hat: f64, sy_hat: f64, f: f64, m_x: u64, m_y: u64) -> Result<(Complex64, f64)> {
    if !(f >= 0.0) || !f.is_finite() {
        return Err(invalid("f", format!("must be finite and >= 0, got {f}")));
    }
    let scale = f.exp();
    let chi_hat = Complex64::new(sx_hat, sy_hat) * scale;
    if m_x == EXACT_MEANS || m_y == EXACT_MEANS {
        return Ok((chi_hat, 0.0));
    }
    let vx = (1.0 - sx_hat * sx_hat).max(0.0) / m_x as f64;
    let vy = (1.0 - sy_hat * sy_hat).max(0.0) / m_y as f64;
    Ok((chi_hat, scale * (0.5 * (vx + vy)).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EngineKind {
    #[default]
    Analytic,
    Oracle,
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EngineKind::Analytic => "analytic",
            EngineKind::Oracle => "oracle",
        })
    }
}

/// Source of the exact qubit signal at each point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Engine {
    /// Closed form `χ(ξ) e^{−f}`.
    Analytic,
    /// Master-equation integration from `|+⟩ ⊗ ρ0`.
    Oracle(OracleConfig),
}

impl Engine {
    pub fn kind(&self) -> EngineKind {
        match self {
            Engine::Analytic => EngineKind::Analytic,
            Engine::Oracle(_) => EngineKind::Oracle,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementRecord {
    pub point: ProtocolPoint,
    pub m_x: u64,
    pub m_y: u64,
    pub sx_hat: f64,
    pub sy_hat: f64,
    pub chi_hat: Complex64,
    pub stderr: f64,
    pub engine: EngineKind,
    pub seed: u64,
}

impl MeasurementRecord {
    pub fn raw(&self) -> Complex64 {
        Complex64::new(self.sx_hat, self.sy_hat)
    }

    /// Noise pushed the corrected estimate outside the unit disk.
    pub fn exceeds_unit_disk(&self) -> bool {
        self.chi_hat.norm() > 1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    pub plan: PlanConfig,
    pub engine: Engine,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointFailure {
    pub index: usize,
    pub beta: PhasePoint,
    pub error: Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanOutput {
    /// Successful records in grid order.
    pub records: Vec<MeasurementRecord>,
    pub failures: Vec<PointFailure>,
}

/// Exact signal `⟨σx⟩ + i⟨σy⟩` after the planned coupling.
pub fn exact_signal(
    state: &OscillatorState,
    oracle_rho: Option<&NumericDensityMatrix>,
    point: &ProtocolPoint,
    cfg: &ScanConfig,
    params: &DecoherenceParams,
    omega: f64,
) -> Result<Complex64> {
    let g = point.coupling(cfg.plan.r0, params, omega)?;
    match (&cfg.engine, oracle_rho) {
        (Engine::Oracle(ocfg), Some(rho)) => {
            let out = evolve_master(&JointState::plus_product(rho)?, &g, point.t, params, omega, ocfg)?;
            let (sx, sy) = pauli_expectations(&out);
            Ok(Complex64::new(sx, sy))
        }
        _ => {
            let r = Functionals::new(&g, omega, params.kappa())?.evaluate(point.t, params)?;
            Ok(chi(state, PhasePoint::new(r.xi)?) * (-r.f).exp())
        }
    }
}

fn measure_point(
    index: usize,
    beta: PhasePoint,
    state: &OscillatorState,
    oracle_rho: Option<&NumericDensityMatrix>,
    cfg: &ScanConfig,
    params: &DecoherenceParams,
    omega: f64,
) -> Result<MeasurementRecord> {
    let point = plan_point(beta, &cfg.plan, params, omega)?;
    let engine = cfg.engine.kind();
    if beta.beta() == Complex64::new(0.0, 0.0) {
        // Normalization is known: emit the exact record without shots.
        let damp = (-point.f).exp();
        return Ok(MeasurementRecord {
            point,
            m_x: EXACT_MEANS,
            m_y: EXACT_MEANS,
            sx_hat: damp,
            sy_hat: 0.0,
            chi_hat: Complex64::new(1.0, 0.0),
            stderr: 0.0,
            engine,
            seed: cfg.seed,
        });
    }
    let signal = exact_signal(state, oracle_rho, &point, cfg, params, omega)?;
    let m = point.budget;
    let (sx_hat, sy_hat) = if m == EXACT_MEANS {
        (check_component("signal.re", signal.re)?, check_component("signal.im", signal.im)?)
    } else {
        simulate_runs_at(signal, m, m, cfg.seed, index as u64)?
    };
    let (chi_hat, stderr) = correct_decoherence(sx_hat, sy_hat, point.f, m, m)?;
    Ok(MeasurementRecord {
        point,
        m_x: m,
        m_y: m,
        sx_hat,
        sy_hat,
        chi_hat,
        stderr,
        engine,
        seed: cfg.seed,
    })
}

/// Measures every grid point in parallel. Failed points are reported in
/// `failures` and do not stop the scan; records keep grid order.
pub fn scan_grid(
    state: &OscillatorState,
    grid: &[PhasePoint],
    cfg: &ScanConfig,
    params: &DecoherenceParams,
    omega: f64,
) -> Result<ScanOutput> {
    cfg.plan.validate()?;
    let oracle_rho = match cfg.engine {
        Engine::Oracle(ocfg) => {
            ocfg.validate()?;
            Some(to_density_matrix(state, ocfg.dim)?)
        }
        Engine::Analytic => None,
    };
    let results: Vec<Result<MeasurementRecord>> = grid
        .par_iter()
        .enumerate()
        .map(|(i, &beta)| measure_point(i, beta, state, oracle_rho.as_ref(), cfg, params, omega))
        .collect();
    let mut out = ScanOutput {
        records: Vec::with_capacity(grid.len()),
        failures: Vec::new(),
    };
    for (index, (res, &beta)) in results.into_iter().zip(grid).enumerate() {
        match res {
            Ok(rec) => out.records.push(rec),
            Err(error) => {
                log::warn!("point {index} (beta = {}) failed: {error}", beta.beta());
                out.failures.push(PointFailure { index, beta, error });
            }
        }
    }
    Ok(out)
}

/// `resolution × resolution` points covering `[−extent, extent]²`, real part
/// varying fastest.
pub fn square_grid(extent: f64, resolution: usize) -> Result<Vec<PhasePoint>> {
    if !(extent > 0.0 && extent.is_finite()) {
        return Err(invalid("extent", "must be > 0"));
    }
    if resolution < 2 {
        return Err(invalid("resolution", "must be >= 2"));
    }
    let step = 2.0 * extent / (resolution - 1) as f64;
    let axis: Vec<f64> = (0..resolution).map(|k| -extent + k as f64 * step).collect();
    let mut grid = Vec::with_capacity(resolution * resolution);
    for &im in &axis {
        for &re in &axis {
            grid.push(PhasePoint::from_parts(re, im)?);
        }
    }
    Ok(grid)
}

/// Points `r e^{iφ}` along one ray.
pub fn ray_grid(phi: f64, radii: &[f64]) -> Result<Vec<PhasePoint>> {
    radii.iter().map(|&r| PhasePoint::new(Complex64::from_polar(r, phi))).collect()
}

pub const RECORD_CSV_HEADER: &str =
    "beta_re,beta_im,r,phi,n,t,f,m_x,m_y,sx_hat,sy_hat,chi_re_raw,chi_im_raw,chi_re,chi_im,stderr,engine,seed";

/// Writes records as CSV with 17 significant digits per float.
pub fn write_records_csv<W: Write>(mut w: W, records: &[MeasurementRecord]) -> io::Result<()> {
    writeln!(w, "{RECORD_CSV_HEADER}")?;
    for rec in records {
        let p = &rec.point;
        let b = p.beta.beta();
        let raw = rec.raw();
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e},{:.16e},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{}",
            b.re,
            b.im,
            p.r,
            p.phi,
            p.n,
            p.t,
            p.f,
            rec.m_x,
            rec.m_y,
            rec.sx_hat,
            rec.sy_hat,
            raw.re,
            raw.im,
            rec.chi_hat.re,
            rec.chi_hat.im,
            rec.stderr,
            rec.engine,
            rec.seed
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    const OMEGA: f64 = 2.0 * PI;

    fn ratio_params() -> DecoherenceParams {
        let kappa = 5e-4 * OMEGA;
        DecoherenceParams::from_kappa_delta(kappa, 0.01 * OMEGA, 0.004 * OMEGA, 0.004 * OMEGA, 0.0).unwrap()
    }

    fn pp(re: f64, im: f64) -> PhasePoint {
        PhasePoint::from_parts(re, im).unwrap()
    }

    #[test]
    fn plan_examples() {
        let cfg = PlanConfig::default();
        let params = ratio_params();
        let p = plan_point(pp(3.4, 0.0), &cfg, &params, OMEGA).unwrap();
        assert_eq!(p.n, 7);
        assert!((p.r - 3.4 / 7.0).abs() < 1e-15 && p.phi == 0.0);
        assert!((planned_xi(&p) - Complex64::new(3.4, 0.0)).norm() < 1e-14);

        let b = Complex64::from_polar(0.3, PI / 4.0);
        let p = plan_point(PhasePoint::new(b).unwrap(), &cfg, &params, OMEGA).unwrap();
        assert_eq!(p.n, 1);
        assert!((p.r - 0.3).abs() < 1e-15 && (p.phi - PI / 4.0).abs() < 1e-15);

        let p = plan_point(pp(0.0, 0.0), &cfg, &params, OMEGA).unwrap();
        assert_eq!((p.n, p.r), (1, 0.0));
        assert!((p.f - params.gamma() * p.t).abs() < 1e-12);
    }

    #[test]
    fn annulus_tie_goes_up() {
        let cfg = PlanConfig::default();
        let p = plan_point(pp(1.0, 0.0), &cfg, &DecoherenceParams::noiseless(), OMEGA).unwrap();
        assert_eq!(p.n, 3);
        let r = plan_point(pp(5.0, 0.0), &cfg, &DecoherenceParams::noiseless(), OMEGA);
        assert!(matches!(r, Err(Error::BeyondReach { needed: 11, .. })));
    }

    #[test]
    fn simulate_examples() {
        for seed in 0..20 {
            assert_eq!(simulate_runs(Complex64::new(1.0, 0.0), 37, 5, seed).unwrap().0, 1.0);
        }
        let a = simulate_runs(Complex64::new(0.2, -0.4), 1000, 1000, 9).unwrap();
        let b = simulate_runs(Complex64::new(0.2, -0.4), 1000, 1000, 9).unwrap();
        assert_eq!(a.0.to_bits(), b.0.to_bits());
        assert_eq!(a.1.to_bits(), b.1.to_bits());
        let inside = (0..400)
            .filter(|&s| simulate_runs(Complex64::new(0.0, 0.0), 10_000, 10_000, s).unwrap().0.abs() < 0.04)
            .count();
        assert!(inside >= 396, "{inside}");
        assert!(simulate_runs(Complex64::new(1.2, 0.0), 10, 10, 0).is_err());
    }

    #[test]
    fn correction_examples() {
        let (c, _) = correct_decoherence((-1.0f64).exp(), 0.0, 1.0, 0, 0).unwrap();
        assert!((c - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let (c, e) = correct_decoherence(0.5, 0.5, 0.0, 0, 0).unwrap();
        assert_eq!((c, e), (Complex64::new(0.5, 0.5), 0.0));
        assert!(correct_decoherence(0.1, 0.1, -0.1, 1, 1).is_err());
    }

    #[test]
    fn origin_scan_is_exact() {
        let cfg = ScanConfig {
            plan: PlanConfig {
                shots: ShotPolicy::Budgeted { target_rel_error: 0.2 },
                ..PlanConfig::default()
            },
            engine: Engine::Analytic,
            seed: 3,
        };
        let out = scan_grid(&OscillatorState::Fock { n: 2 }, &[pp(0.0, 0.0)], &cfg, &ratio_params(), OMEGA).unwrap();
        assert_eq!(out.records[0].chi_hat, Complex64::new(1.0, 0.0));
        assert_eq!(out.records[0].stderr, 0.0);
    }

    #[test]
    fn scan_collects_failures_in_order() {
        let cfg = ScanConfig {
            plan: PlanConfig::default(),
            engine: Engine::Analytic,
            seed: 0,
        };
        let grid = [pp(0.2, 0.0), pp(9.0, 0.0), pp(0.0, 0.7)];
        let out = scan_grid(&OscillatorState::vacuum(), &grid, &cfg, &ratio_params(), OMEGA).unwrap();
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.failures.len(), 1);
        assert_eq!(out.failures[0].index, 1);
        assert_eq!(out.records[1].point.beta, grid[2]);
    }

    #[test]
    fn oracle_engine_agrees_with_analytic() {
        let params = DecoherenceParams::new(0.01, 0.01, 0.005, 0.2, 0.0).unwrap();
        let grid = [pp(0.4, 0.1), pp(-0.6, 0.5)];
        let run = |engine| {
            let cfg = ScanConfig {
                plan: PlanConfig::default(),
                engine,
                seed: 0,
            };
            scan_grid(&OscillatorState::Fock { n: 1 }, &grid, &cfg, &params, OMEGA).unwrap()
        };
        let a = run(Engine::Analytic);
        let o = run(Engine::Oracle(OracleConfig::default().with_dim(16)));
        for (x, y) in a.records.iter().zip(&o.records) {
            assert!((x.chi_hat - y.chi_hat).norm() < 1e-6);
        }
    }

    #[test]
    fn csv_layout() {
        let cfg = ScanConfig {
            plan: PlanConfig::default(),
            engine: Engine::Analytic,
            seed: 11,
        };
        let out = scan_grid(&OscillatorState::vacuum(), &[pp(0.3, 0.0)], &cfg, &ratio_params(), OMEGA).unwrap();
        let mut buf = Vec::new();
        write_records_csv(&mut buf, &out.records).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], RECORD_CSV_HEADER);
        let fields: Vec<_> = lines[1].split(',').collect();
        assert_eq!(fields.len(), 18);
        assert_eq!(fields[16], "analytic");
        assert_eq!(fields[17], "11");
        assert_eq!(fields[0].parse::<f64>().unwrap(), 0.3);
        assert_eq!(fields[0].len(), "3.0000000000000000e-1".len());
    }

    proptest! {
        #[test]
        fn plan_round_trip(re in -4.9f64..4.9, im in -4.9f64..4.9) {
            prop_assume!(re.hypot(im) < 4.99);
            let p = plan_point(pp(re, im), &PlanConfig { f_mode: FMode::Approx, ..PlanConfig::default() },
                &ratio_params(), OMEGA).unwrap();
            let b = Complex64::new(re, im);
            prop_assert!((planned_xi(&p) - b).norm() <= 1e-12 * b.norm().max(1e-300));
            prop_assert!(((p.n - 1) as f64) * 0.5 <= b.norm() && b.norm() < p.n as f64 * 0.5);
        }

        #[test]
        fn budget_monotone_along_ray(phi in -PI..PI, a in 0.01f64..4.9, b in 0.01f64..4.9) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let cfg = PlanConfig {
                f_mode: FMode::Approx,
                shots: ShotPolicy::Budgeted { target_rel_error: 0.2 },
                ..PlanConfig::default()
            };
            let params = ratio_params();
            let p1 = plan_point(PhasePoint::new(Complex64::from_polar(lo, phi)).unwrap(), &cfg, &params, OMEGA).unwrap();
            let p2 = plan_point(PhasePoint::new(Complex64::from_polar(hi, phi)).unwrap(), &cfg, &params, OMEGA).unwrap();
            prop_assert!(p1.budget <= p2.budget, "{} > {}", p1.budget, p2.budget);
        }
    }
}
