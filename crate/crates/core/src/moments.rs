//! Quadrature moments from small-`|β|` data along one ray.
//!
//! Along `β = s e^{iφ}` the characteristic function is `⟨e^{−isX_θ}⟩` with
//! `X_θ = a e^{−iθ} + a† e^{iθ}` and `θ = φ + π/2`, so
//!
//! ```text
//! Re χ = 1 − s²⟨X²⟩/2 + s⁴⟨X⁴⟩/24 − …,   Im χ = −s⟨X⟩ + s³⟨X³⟩/6 − …
//! ```

use std::f64::consts::PI;
use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::reconstruction::{MeasurementRecord, EXACT_MEANS};
use crate::states::{to_density_matrix, NumericDensityMatrix, OscillatorState};

pub const DEFAULT_ORDER: usize = 4;
pub const DEFAULT_R_FIT_MAX: f64 = 0.5;
pub const MAX_ANALYTIC_ORDER: usize = 8;
/// The extended refit still carries bias, so its shift understates the bias
/// of the requested fit; successive shifts shrink by well over this factor.
const TRUNCATION_SAFETY: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentFitConfig {
    /// Highest moment fitted.
    pub order: usize,
    /// Radii beyond this are rejected as outside the series' useful range.
    pub series_cutoff: f64,
}

impl Default for MomentFitConfig {
    fn default() -> Self {
        Self {
            order: DEFAULT_ORDER,
            series_cutoff: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub order: usize,
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentFitResult {
    pub theta: f64,
    /// `⟨X^{2k}⟩` for `k = 1, 2, …`.
    pub even_moments: Vec<MomentEstimate>,
    /// `⟨X^{2k+1}⟩` for `k = 0, 1, …`.
    pub odd_moments: Vec<MomentEstimate>,
    /// Reduced weighted residual of both fits (plain rms for exact data).
    pub fit_residual: f64,
    pub r_values: Vec<f64>,
    even_cov: DMatrix<f64>,
    odd_cov: DMatrix<f64>,
    /// Noiseless data only: moments refitted with two more series orders.
    /// `Some(empty)` when too few radii allow the refit.
    extended: Option<Vec<MomentEstimate>>,
}

impl MomentFitResult {
    pub fn moment(&self, k: usize) -> Option<MomentEstimate> {
        let list = if k % 2 == 0 { &self.even_moments } else { &self.odd_moments };
        list.iter().find(|m| m.order == k).copied()
    }

    fn value(&self, k: usize) -> f64 {
        self.moment(k).map_or(0.0, |m| m.value)
    }

    fn extended_value(&self, k: usize) -> Option<f64> {
        self.extended.as_ref()?.iter().find(|m| m.order == k).map(|m| m.value)
    }

    /// Bound on the truncation bias of `⟨X^k⟩` for noiseless fits: twice the
    /// shift when the series is extended by two orders. Zero for noisy fits,
    /// whose statistical error dominates, and infinite when the refit was
    /// impossible.
    pub fn truncation_bias(&self, k: usize) -> f64 {
        match &self.extended {
            None => 0.0,
            Some(_) => match self.extended_value(k) {
                Some(v) => TRUNCATION_SAFETY * (self.value(k) - v).abs(),
                None => f64::INFINITY,
            },
        }
    }

    /// Truncation shift of a function of the first four moments.
    fn derived_bias(&self, f: impl Fn(&dyn Fn(usize) -> f64) -> f64) -> f64 {
        let Some(ext) = &self.extended else { return 0.0 };
        if ext.is_empty() {
            return f64::INFINITY;
        }
        let fitted = f(&|k| self.value(k));
        let refit = f(&|k| self.extended_value(k).unwrap_or(0.0));
        TRUNCATION_SAFETY * (fitted - refit).abs()
    }

    fn cov(&self, a: usize, b: usize) -> f64 {
        if a % 2 != b % 2 {
            return 0.0;
        }
        if a % 2 == 0 {
            self.even_cov[(a / 2 - 1, b / 2 - 1)]
        } else {
            self.odd_cov[(a / 2, b / 2)]
        }
    }

    fn propagate(&self, grad: &[(usize, f64)]) -> f64 {
        let mut var = 0.0;
        for &(a, ga) in grad {
            for &(b, gb) in grad {
                var += ga * gb * self.cov(a, b);
            }
        }
        var.max(0.0).sqrt()
    }

    /// `⟨X²⟩ − ⟨X⟩²` with its standard error.
    pub fn variance(&self) -> Option<MomentEstimate> {
        let m2 = self.moment(2)?;
        let m1 = self.value(1);
        let value = variance_of(m1, m2.value);
        let stderr = self.propagate(&[(2, 1.0), (1, -2.0 * m1)]);
        Some(MomentEstimate { order: 2, value, stderr })
    }

    /// Fourth cumulant with its standard error; needs order ≥ 4.
    pub fn fourth_cumulant(&self) -> Option<MomentEstimate> {
        self.moment(4)?;
        let (m1, m2, m3, m4) = (self.value(1), self.value(2), self.value(3), self.value(4));
        let value = fourth_cumulant_of(m1, m2, m3, m4);
        let grad = [
            (4, 1.0),
            (3, -4.0 * m1),
            (2, -6.0 * m2 + 12.0 * m1 * m1),
            (1, -4.0 * m3 + 24.0 * m2 * m1 - 24.0 * m1.powi(3)),
        ];
        Some(MomentEstimate {
            order: 4,
            value,
            stderr: self.propagate(&grad),
        })
    }

    /// Variance below the vacuum value by more than three standard errors
    /// plus the truncation bias.
    pub fn squeezed(&self) -> bool {
        let bias = self.derived_bias(|m| variance_of(m(1), m(2)));
        self.variance().is_some_and(|v| v.value + 3.0 * v.stderr + bias < 1.0)
    }

    /// Fourth cumulant distinguishable from zero at three standard errors
    /// plus the truncation bias.
    pub fn non_gaussian(&self) -> bool {
        let bias = self.derived_bias(|m| fourth_cumulant_of(m(1), m(2), m(3), m(4)));
        self.fourth_cumulant().is_some_and(|k| k.value.abs() > 3.0 * k.stderr + bias)
    }
}

fn variance_of(m1: f64, m2: f64) -> f64 {
    m2 - m1 * m1
}

fn fourth_cumulant_of(m1: f64, m2: f64, m3: f64, m4: f64) -> f64 {
    m4 - 4.0 * m3 * m1 - 3.0 * m2 * m2 + 12.0 * m2 * m1 * m1 - 6.0 * m1.powi(4)
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|j| j as f64).product()
}

fn same_direction(a: f64, b: f64) -> bool {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d) < 1e-9
}

/// Per-component variances of a corrected estimate.
pub fn component_variances(rec: &MeasurementRecord) -> (f64, f64) {
    if rec.m_x == EXACT_MEANS || rec.m_y == EXACT_MEANS {
        return (0.0, 0.0);
    }
    let s = (2.0 * rec.point.f).exp();
    (
        s * (1.0 - rec.sx_hat * rec.sx_hat).max(0.0) / rec.m_x as f64,
        s * (1.0 - rec.sy_hat * rec.sy_hat).max(0.0) / rec.m_y as f64,
    )
}

struct Lsq {
    coef: DVector<f64>,
    cov: DMatrix<f64>,
    chi2: f64,
}

/// Weighted least squares `y ≈ A x` with `sigma` per row (all zero means
/// unweighted exact data, for which the covariance is zero).
fn weighted_lsq(a: &DMatrix<f64>, y: &DVector<f64>, sigma: &[f64]) -> Result<Lsq> {
    let (rows, cols) = a.shape();
    let exact = sigma.iter().all(|&s| s == 0.0);
    if !exact && sigma.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::Fit("mixed exact and noisy records".into()));
    }
    let w: Vec<f64> = sigma.iter().map(|&s| if exact { 1.0 } else { 1.0 / s }).collect();
    let mut aw = DMatrix::from_fn(rows, cols, |i, j| a[(i, j)] * w[i]);
    let yw = DVector::from_fn(rows, |i, _| y[i] * w[i]);
    // Column equilibration keeps the monomial design well conditioned.
    let scale: Vec<f64> = (0..cols).map(|j| aw.column(j).norm()).collect();
    if scale.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::Fit("design has an empty column".into()));
    }
    for (j, s) in scale.iter().enumerate() {
        aw.column_mut(j).scale_mut(1.0 / s);
    }
    let qr = aw.clone().qr();
    let r = qr.r();
    let rmax = (0..cols).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if (0..cols).any(|i| r[(i, i)].abs() <= 1e-13 * rmax) {
        return Err(Error::Fit("rank-deficient design".into()));
    }
    let qty = qr.q().transpose() * &yw;
    let x = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Fit("singular triangular factor".into()))?;
    let resid = &aw * &x - &yw;
    let chi2 = resid.norm_squared();
    let rinv = r
        .solve_upper_triangular(&DMatrix::identity(cols, cols))
        .ok_or_else(|| Error::Fit("singular triangular factor".into()))?;
    let mut cov = &rinv * rinv.transpose();
    let mut coef = x;
    for i in 0..cols {
        coef[i] /= scale[i];
        for j in 0..cols {
            cov[(i, j)] /= scale[i] * scale[j];
        }
    }
    if exact {
        cov.fill(0.0);
    }
    Ok(Lsq { coef, cov, chi2 })
}

/// Fits quadrature moments to corrected records that share one direction
/// `arg β`. Records at the origin are skipped.
pub fn fit_moments(records: &[MeasurementRecord], cfg: &MomentFitConfig) -> Result<MomentFitResult> {
    if cfg.order == 0 {
        return Err(invalid("order", "must be >= 1"));
    }
    let used: Vec<&MeasurementRecord> = records.iter().filter(|r| r.point.beta.beta().norm() > 0.0).collect();
    let phi = used.first().ok_or_else(|| Error::Fit("no records away from the origin".into()))?.point.beta.beta().arg();
    if let Some(bad) = used.iter().find(|r| !same_direction(r.point.beta.beta().arg(), phi)) {
        return Err(Error::Fit(format!(
            "record at beta = {} is off the ray arg = {phi}",
            bad.point.beta.beta()
        )));
    }
    let radii: Vec<f64> = used.iter().map(|r| r.point.beta.beta().norm()).collect();
    if let Some(&s) = radii.iter().find(|&&s| s > cfg.series_cutoff) {
        return Err(Error::Fit(format!("radius {s} exceeds series cutoff {}", cfg.series_cutoff)));
    }
    let mut distinct = radii.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    let needed = cfg.order / 2 + 2;
    if distinct.len() < needed {
        return Err(Error::Fit(format!(
            "{} distinct radii, need at least {needed} for order {}",
            distinct.len(),
            cfg.order
        )));
    }

    let even_orders: Vec<usize> = (2..=cfg.order).step_by(2).collect();
    let odd_orders: Vec<usize> = (1..=cfg.order).step_by(2).collect();
    let rows = used.len();
    let (mut sig_re, mut sig_im) = (Vec::with_capacity(rows), Vec::with_capacity(rows));
    for r in &used {
        let (vx, vy) = component_variances(r);
        sig_re.push(vx.sqrt());
        sig_im.push(vy.sqrt());
    }

    // Re χ − 1 = Σ (−1)^k s^{2k} m_{2k}/(2k)!;  Im χ = Σ (−1)^{k+1} s^{2k+1} m_{2k+1}/(2k+1)!.
    let series = |orders: &[usize]| {
        DMatrix::from_fn(rows, orders.len(), |i, j| {
            let k = orders[j];
            let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
            let sign = if k % 2 == 1 { -sign } else { sign };
            sign * radii[i].powi(k as i32) / factorial(k)
        })
    };
    let mut chi2 = 0.0;
    let mut params = 0;
    let mut fit = |orders: &[usize], y: DVector<f64>, sigma: &[f64]| -> Result<(Vec<MomentEstimate>, DMatrix<f64>)> {
        if orders.is_empty() {
            return Ok((Vec::new(), DMatrix::zeros(0, 0)));
        }
        let lsq = weighted_lsq(&series(orders), &y, sigma)?;
        chi2 += lsq.chi2;
        params += orders.len();
        let est = orders
            .iter()
            .enumerate()
            .map(|(j, &k)| MomentEstimate {
                order: k,
                value: lsq.coef[j],
                stderr: lsq.cov[(j, j)].max(0.0).sqrt(),
            })
            .collect();
        Ok((est, lsq.cov))
    };
    let y_re = DVector::from_fn(rows, |i, _| used[i].chi_hat.re - 1.0);
    let y_im = DVector::from_fn(rows, |i, _| used[i].chi_hat.im);
    let (even_moments, even_cov) = fit(&even_orders, y_re.clone(), &sig_re)?;
    let (odd_moments, odd_cov) = fit(&odd_orders, y_im.clone(), &sig_im)?;
    let dof = (2 * rows).saturating_sub(params).max(1);

    let noiseless = sig_re.iter().chain(&sig_im).all(|&s| s == 0.0);
    let extended = noiseless.then(|| {
        let ext_order = cfg.order + 2;
        if distinct.len() < ext_order / 2 + 2 {
            return Vec::new();
        }
        let mut out = Vec::new();
        for (first, y) in [(2, &y_re), (1, &y_im)] {
            let orders: Vec<usize> = (first..=ext_order).step_by(2).collect();
            match weighted_lsq(&series(&orders), y, &vec![0.0; rows]) {
                Ok(lsq) => out.extend(orders.iter().enumerate().map(|(j, &k)| MomentEstimate {
                    order: k,
                    value: lsq.coef[j],
                    stderr: 0.0,
                })),
                Err(_) => return Vec::new(),
            }
        }
        out
    });
    Ok(MomentFitResult {
        theta: phi + PI / 2.0,
        even_moments,
        odd_moments,
        fit_residual: (chi2 / dof as f64).sqrt(),
        r_values: radii,
        even_cov,
        odd_cov,
        extended,
    })
}

/// `count` radii geometrically spaced over `[r_fit_max/4, r_fit_max]`.
pub fn geometric_radii(count: usize, r_fit_max: f64) -> Result<Vec<f64>> {
    if count < 2 {
        return Err(invalid("count", "must be >= 2"));
    }
    if !(r_fit_max > 0.0 && r_fit_max.is_finite()) {
        return Err(invalid("r_fit_max", "must be > 0"));
    }
    let ratio = 4f64.powf(1.0 / (count - 1) as f64);
    Ok((0..count)
        .map(|k| r_fit_max / ratio.powi((count - 1 - k) as i32))
        .collect())
}

/// `X_θ` on `dim` Fock levels.
pub fn quadrature_operator(theta: f64, dim: usize) -> DMatrix<Complex64> {
    let e = Complex64::from_polar(1.0, theta);
    DMatrix::from_fn(dim, dim, |i, j| {
        if i + 1 == j {
            (j as f64).sqrt() * e.conj()
        } else if j + 1 == i {
            (i as f64).sqrt() * e
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// `tr(ρ X_θ^k)` computed with explicit operator powers.
pub fn quadrature_moment_numeric(rho: &NumericDensityMatrix, theta: f64, k: usize) -> Result<f64> {
    if k > MAX_ANALYTIC_ORDER {
        return Err(invalid("k", format!("must be <= {MAX_ANALYTIC_ORDER}, got {k}")));
    }
    let dim = rho.dim();
    // X^k restricted to the support is exact when built on dim + k levels;
    // population within k/2 of the cutoff would be missing neighbours in ρ.
    let tail = rho.tail_population(k / 2 + 1);
    if tail > 1e-10 {
        return Err(Error::Truncation {
            dim,
            reason: format!("population {tail:e} near the cutoff for order {k}"),
        });
    }
    let big = dim + k;
    let x = quadrature_operator(theta, big);
    let mut p = DMatrix::<Complex64>::identity(big, big);
    for _ in 0..k {
        p = &p * &x;
    }
    let block = p.view((0, 0), (dim, dim));
    Ok((rho.matrix() * block).trace().re)
}

/// `⟨X_θ^k⟩` for `k ≤ 8`.
pub fn quadrature_moment_analytic(state: &OscillatorState, theta: f64, k: usize) -> Result<f64> {
    let rho = match state {
        OscillatorState::Numeric(m) => m.clone(),
        _ => to_density_matrix(state, state.suggested_dim() + 2 * k)?,
    };
    quadrature_moment_numeric(&rho, theta, k)
}

pub const MOMENT_CSV_HEADER: &str = "theta,order,estimate,stderr,squeezed,non_gaussian";

/// Moment report: one row per fitted moment; flags refer to the whole fit.
pub fn write_moment_report<W: Write>(mut w: W, fits: &[MomentFitResult]) -> io::Result<()> {
    writeln!(w, "{MOMENT_CSV_HEADER}")?;
    for fit in fits {
        let mut all: Vec<MomentEstimate> = fit.even_moments.iter().chain(&fit.odd_moments).copied().collect();
        all.sort_by_key(|m| m.order);
        for m in all {
            writeln!(
                w,
                "{:.16e},{},{:.16e},{:.16e},{},{}",
                fit.theta,
                m.order,
                m.value,
                m.stderr,
                fit.squeezed(),
                fit.non_gaussian()
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DecoherenceParams;
    use crate::reconstruction::{ray_grid, scan_grid, Engine, PlanConfig, ScanConfig, ShotPolicy};

    const OMEGA: f64 = 2.0 * PI;

    fn params() -> DecoherenceParams {
        DecoherenceParams::from_kappa_delta(5e-4 * OMEGA, 0.01 * OMEGA, 0.004 * OMEGA, 0.004 * OMEGA, 0.0).unwrap()
    }

    fn ray_records(state: &OscillatorState, phi: f64, radii: &[f64], shots: ShotPolicy, seed: u64) -> Vec<MeasurementRecord> {
        let cfg = ScanConfig {
            plan: PlanConfig {
                shots,
                ..PlanConfig::default()
            },
            engine: Engine::Analytic,
            seed,
        };
        let out = scan_grid(state, &ray_grid(phi, radii).unwrap(), &cfg, &params(), OMEGA).unwrap();
        assert!(out.failures.is_empty());
        out.records
    }

    #[test]
    fn analytic_moment_examples() {
        let vac = OscillatorState::vacuum();
        assert!((quadrature_moment_analytic(&vac, 0.3, 2).unwrap() - 1.0).abs() < 1e-12);
        assert!((quadrature_moment_analytic(&vac, 1.1, 4).unwrap() - 3.0).abs() < 1e-12);
        for n in 0..5 {
            let s = OscillatorState::Fock { n };
            assert!(quadrature_moment_analytic(&s, 0.7, 1).unwrap().abs() < 1e-12);
            let m2 = quadrature_moment_analytic(&s, 0.7, 2).unwrap();
            assert!((m2 - (2 * n + 1) as f64).abs() < 1e-12);
        }
        let coh = OscillatorState::Coherent { alpha: Complex64::new(0.5, 0.0) };
        assert!((quadrature_moment_analytic(&coh, 0.0, 1).unwrap() - 1.0).abs() < 1e-10);
        assert!((quadrature_moment_analytic(&coh, 0.0, 2).unwrap() - 2.0).abs() < 1e-10);
        assert!(quadrature_moment_analytic(&vac, 0.0, 9).is_err());
    }

    #[test]
    fn leading_even_coefficient_is_minus_half() {
        // Vacuum: Re χ(s) = e^{−s²/2}; the first fitted moment must be 1.
        let radii = geometric_radii(8, 0.3).unwrap();
        let recs = ray_records(&OscillatorState::vacuum(), 0.4, &radii, ShotPolicy::Infinite, 0);
        let fit = fit_moments(&recs, &MomentFitConfig { order: 12, ..Default::default() }).unwrap();
        assert!((fit.moment(2).unwrap().value - 1.0).abs() < 1e-8);
        assert!((fit.theta - (0.4 + PI / 2.0)).abs() < 1e-12);
    }

    #[test]
    fn fit_errors() {
        let recs = ray_records(&OscillatorState::vacuum(), 0.0, &[0.1, 0.2], ShotPolicy::Infinite, 0);
        assert!(matches!(fit_moments(&recs, &MomentFitConfig::default()), Err(Error::Fit(_))));
        let mut mixed = ray_records(&OscillatorState::vacuum(), 0.0, &[0.1, 0.2, 0.3, 0.4], ShotPolicy::Infinite, 0);
        mixed.extend(ray_records(&OscillatorState::vacuum(), 1.0, &[0.2], ShotPolicy::Infinite, 0));
        assert!(fit_moments(&mixed, &MomentFitConfig::default()).is_err());
        let far = ray_records(&OscillatorState::vacuum(), 0.0, &[0.2, 0.5, 0.9, 1.2], ShotPolicy::Infinite, 0);
        assert!(fit_moments(&far, &MomentFitConfig::default()).is_err());
    }

    #[test]
    fn vacuum_not_squeezed_fock_non_gaussian() {
        let radii = geometric_radii(10, 0.5).unwrap();
        let shots = ShotPolicy::Fixed { shots: 1_000_000 };
        let vac = fit_moments(&ray_records(&OscillatorState::vacuum(), 0.0, &radii, shots, 5), &MomentFitConfig::default()).unwrap();
        assert!(!vac.squeezed());
        let fock = fit_moments(
            &ray_records(&OscillatorState::Fock { n: 1 }, 0.0, &radii, shots, 5),
            &MomentFitConfig::default(),
        )
        .unwrap();
        assert!(!fock.squeezed());
        // Fock{1}: κ4 = 15 − 3·9 = −12.
        let k4 = fock.fourth_cumulant().unwrap();
        assert!(k4.value < 0.0 && fock.non_gaussian(), "{k4:?}");
    }

    #[test]
    fn noiseless_flags_account_for_truncation() {
        let radii = geometric_radii(12, 0.5).unwrap();
        let vac = fit_moments(&ray_records(&OscillatorState::vacuum(), 0.0, &radii, ShotPolicy::Infinite, 0), &MomentFitConfig::default()).unwrap();
        assert!(vac.truncation_bias(4) > 0.0);
        assert!(!vac.squeezed() && !vac.non_gaussian());
        let fock = fit_moments(
            &ray_records(&OscillatorState::Fock { n: 1 }, 0.0, &radii, ShotPolicy::Infinite, 0),
            &MomentFitConfig::default(),
        )
        .unwrap();
        assert!(fock.non_gaussian() && !fock.squeezed());
        // Too few radii for the extended refit: no flag can be asserted.
        let few = geometric_radii(4, 0.3).unwrap();
        let fock = fit_moments(
            &ray_records(&OscillatorState::Fock { n: 1 }, 0.0, &few, ShotPolicy::Infinite, 0),
            &MomentFitConfig::default(),
        )
        .unwrap();
        assert!(fock.truncation_bias(2).is_infinite() && !fock.non_gaussian());
    }

    #[test]
    fn report_layout() {
        let radii = geometric_radii(6, 0.3).unwrap();
        let fit = fit_moments(&ray_records(&OscillatorState::vacuum(), 0.0, &radii, ShotPolicy::Infinite, 0), &MomentFitConfig::default()).unwrap();
        let mut buf = Vec::new();
        write_moment_report(&mut buf, &[fit]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(text.starts_with(MOMENT_CSV_HEADER));
    }

    #[test]
    fn radii_helper() {
        let r = geometric_radii(5, 0.5).unwrap();
        assert!((r[4] - 0.5).abs() < 1e-15 && (r[0] - 0.125).abs() < 1e-15);
        assert!(r.windows(2).all(|w| w[1] > w[0]));
    }
}
