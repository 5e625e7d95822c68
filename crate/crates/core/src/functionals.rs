//! Decoherence functionals of the coupling profile.
//!
//! For a coupling `g` and interaction time `t` (oscillator frequency `Ω`,
//! damping `κ`):
//!
//! - `ξ(g,t) = 2i ∫₀ᵗ g(s) e^{iΩs − κs/2} ds`, the probed phase-space point;
//! - `μ(g,t) = 2i/sinh(κt/2) ∫₀ᵗ g(s) e^{iΩs} sinh(κs/2) ds`;
//! - `λ(g,t) = i e^{−κt/2} ∫₀ᵗ g(s) e^{iΩs + κs/2} ds`;
//! - `ν(g,t) = γt + κΔ ∫₀ᵗ |μ(g,s)|² ds`;
//! - `f(g,t) = ν(g,t) + Δ(1 − e^{−κt}) |μ(g,t)|²`, the damping exponent of the
//!   measured signal.
//!
//! The inner `μ(g,s)` of the nested integral is evaluated at every node of a
//! composite outer rule from cached prefix integrals, so the cost is linear in
//! the number of nodes.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::model::{period_time, CouplingProfile, DecoherenceParams};
use crate::quadrature::{integrate, PanelGrid, QuadConfig, PANEL_ORDER};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Below this value of `κt/2` the `μ` functional uses its `κ → 0` limit.
pub const SMALL_KAPPA_T: f64 = 1e-6;

/// `κt` above which `sinh` prefix integrals would overflow.
const MAX_KAPPA_T: f64 = 600.0;

/// Sentinel returned by [`run_budget`] when the required shot count exceeds
/// [`BUDGET_LIMIT`].
pub const BUDGET_SATURATED: u64 = u64::MAX;
pub const BUDGET_LIMIT: f64 = 1e15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionalResult {
    pub xi: Complex64,
    pub mu: Complex64,
    pub f: f64,
    pub lambda: Complex64,
    pub nu: f64,
    pub quadrature_error_estimate: f64,
}

/// Evaluator for the functionals of one coupling profile.
#[derive(Debug, Clone)]
pub struct Functionals<'a> {
    profile: &'a CouplingProfile,
    omega: f64,
    kappa: f64,
    cfg: QuadConfig,
}

impl<'a> Functionals<'a> {
    pub fn new(profile: &'a CouplingProfile, omega: f64, kappa: f64) -> Result<Self> {
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(invalid("omega", format!("must be finite and > 0, got {omega}")));
        }
        if !(kappa >= 0.0) || !kappa.is_finite() {
            return Err(invalid("kappa", format!("must be finite and >= 0, got {kappa}")));
        }
        Ok(Self {
            profile,
            omega,
            kappa,
            cfg: QuadConfig::default(),
        })
    }

    pub fn with_config(mut self, cfg: QuadConfig) -> Self {
        self.cfg = cfg;
        self
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    fn check(&self, t: f64) -> Result<()> {
        self.profile.check_range(t)?;
        if self.kappa * t > MAX_KAPPA_T {
            return Err(invalid(
                "t",
                format!("kappa*t = {} exceeds the supported range", self.kappa * t),
            ));
        }
        Ok(())
    }

    /// Half-period splits plus profile kinks, used to seed adaptive quadrature.
    fn breakpoints(&self, t: f64) -> Vec<f64> {
        let half = PI / self.omega;
        let count = ((t / half).ceil() as usize).min(4096);
        let mut pts: Vec<f64> = (1..count).map(|k| k as f64 * half).collect();
        pts.extend(self.profile.kinks(t));
        pts
    }

    fn integrate(&self, t: f64, h: impl Fn(f64) -> Complex64) -> Result<(Complex64, f64)> {
        let r = integrate(h, 0.0, t, &self.breakpoints(t), &self.cfg)?;
        Ok((r.value, r.error))
    }

    fn xi_with_error(&self, t: f64) -> Result<(Complex64, f64)> {
        self.check(t)?;
        let (w, k, g) = (self.omega, self.kappa, self.profile);
        let (v, e) = self.integrate(t, |s| {
            Complex64::new(-0.5 * k * s, w * s).exp() * g.eval_unchecked(s)
        })?;
        Ok((2.0 * I * v, 2.0 * e))
    }

    pub fn xi(&self, t: f64) -> Result<Complex64> {
        self.xi_with_error(t).map(|(v, _)| v)
    }

    fn mu_with_error(&self, t: f64) -> Result<(Complex64, f64)> {
        self.check(t)?;
        if t == 0.0 {
            return Ok((Complex64::new(0.0, 0.0), 0.0));
        }
        let (w, k, g) = (self.omega, self.kappa, self.profile);
        let (v, e) = if 0.5 * k * t < SMALL_KAPPA_T {
            self.integrate(t, |s| Complex64::from_polar(s / t, w * s) * g.eval_unchecked(s))?
        } else {
            self.integrate(t, |s| {
                Complex64::from_polar(sinh_ratio(s, t, k), w * s) * g.eval_unchecked(s)
            })?
        };
        Ok((2.0 * I * v, 2.0 * e))
    }

    pub fn mu(&self, t: f64) -> Result<Complex64> {
        self.mu_with_error(t).map(|(v, _)| v)
    }

    /// `μ` through its `κ → 0` limit `(2i/t) ∫₀ᵗ s g(s) e^{iΩs} ds`, whatever `κ` is.
    pub fn mu_small_kappa_limit(&self, t: f64) -> Result<Complex64> {
        self.check(t)?;
        if t == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let (w, g) = (self.omega, self.profile);
        let (v, _) = self.integrate(t, |s| Complex64::from_polar(s / t, w * s) * g.eval_unchecked(s))?;
        Ok(2.0 * I * v)
    }

    fn lambda_with_error(&self, t: f64) -> Result<(Complex64, f64)> {
        self.check(t)?;
        let (w, k, g) = (self.omega, self.kappa, self.profile);
        let (v, e) = self.integrate(t, |s| {
            Complex64::new(0.5 * k * (s - t), w * s).exp() * g.eval_unchecked(s)
        })?;
        Ok((I * v, e))
    }

    pub fn lambda(&self, t: f64) -> Result<Complex64> {
        self.lambda_with_error(t).map(|(v, _)| v)
    }

    /// `∫₀ᵗ |μ(g,s)|² ds` with its error estimate.
    pub fn mu_norm_integral(&self, t: f64) -> Result<(f64, f64)> {
        self.check(t)?;
        if t == 0.0 {
            return Ok((0.0, 0.0));
        }
        let (w, k, g) = (self.omega, self.kappa, self.profile);
        let kinks = self.profile.kinks(t);
        let small = 0.5 * k * t < SMALL_KAPPA_T;
        // Panels no wider than an eighth of a period or a unit of κt.
        let mut per_segment = ((8.0 * w * t / (2.0 * PI)).ceil() as usize)
            .max((k * t).ceil() as usize)
            .max(2);
        per_segment = per_segment.div_ceil(kinks.len() + 1).max(2);

        let eval = |per_segment: usize| -> f64 {
            let grid = PanelGrid::new(t, &kinks, per_segment, PANEL_ORDER);
            let nodes = grid.nodes();
            if small {
                let h = |u: f64| Complex64::from_polar(u, w * u) * g.eval_unchecked(u);
                let (pre, _) = grid.prefix_integrals(&h);
                nodes
                    .iter()
                    .zip(&pre)
                    .map(|(&(s, wt), p)| wt * (2.0 * p / s).norm_sqr())
                    .sum()
            } else {
                let h = |u: f64| Complex64::from_polar((0.5 * k * u).sinh(), w * u) * g.eval_unchecked(u);
                let (pre, _) = grid.prefix_integrals(&h);
                nodes
                    .iter()
                    .zip(&pre)
                    .map(|(&(s, wt), p)| wt * (2.0 * p / (0.5 * k * s).sinh()).norm_sqr())
                    .sum()
            }
        };

        let mut coarse = eval(per_segment);
        let mut doublings = 0;
        loop {
            per_segment *= 2;
            let fine = eval(per_segment);
            let err = (fine - coarse).abs();
            let target = self.cfg.target(fine.abs(), fine.abs());
            if err <= target {
                return Ok((fine, err));
            }
            doublings += 1;
            if doublings >= 8 || per_segment > self.cfg.max_subdivisions * 64 {
                return Err(Error::Quadrature {
                    tol: target,
                    estimate: err,
                    evaluations: per_segment * PANEL_ORDER * PANEL_ORDER,
                });
            }
            coarse = fine;
        }
    }

    /// `γt + κΔ ∫₀ᵗ |μ(g,s)|² ds`.
    pub fn nu(&self, t: f64, params: &DecoherenceParams) -> Result<f64> {
        self.nu_with_error(t, params).map(|(v, _)| v)
    }

    fn nu_with_error(&self, t: f64, params: &DecoherenceParams) -> Result<(f64, f64)> {
        self.check(t)?;
        let gamma_t = params.gamma() * t;
        let kd = params.kappa() * params.delta();
        if kd == 0.0 || t == 0.0 {
            return Ok((gamma_t, 0.0));
        }
        let (integral, err) = self.mu_norm_integral(t)?;
        Ok((gamma_t + kd * integral, kd * err))
    }

    /// The damping exponent `f(g,t)`; never negative.
    pub fn damping_f(&self, t: f64, params: &DecoherenceParams) -> Result<f64> {
        self.evaluate(t, params).map(|r| r.f)
    }

    /// All functionals at time `t`.
    pub fn evaluate(&self, t: f64, params: &DecoherenceParams) -> Result<FunctionalResult> {
        let (xi, e_xi) = self.xi_with_error(t)?;
        let (mu, e_mu) = self.mu_with_error(t)?;
        let (lambda, e_lambda) = self.lambda_with_error(t)?;
        let (nu, e_nu) = self.nu_with_error(t, params)?;
        let decay = -(-params.kappa() * t).exp_m1();
        let f = (nu + params.delta() * decay * mu.norm_sqr()).max(0.0);
        let e_f = e_nu + params.delta() * decay * 2.0 * mu.norm() * e_mu;
        Ok(FunctionalResult {
            xi,
            mu,
            f,
            lambda,
            nu,
            quadrature_error_estimate: e_xi + e_mu + e_lambda + e_f,
        })
    }

    /// `λ(g,s)` at every node of `grid` (node order of [`PanelGrid::nodes`]).
    pub fn lambda_on_grid(&self, grid: &PanelGrid) -> Vec<Complex64> {
        let (w, k, g) = (self.omega, self.kappa, self.profile);
        // Prefix of e^{κ(u − s_max)/2} keeps the integrand bounded; rescale per node.
        let t_max = grid.nodes().last().map(|n| n.0).unwrap_or(0.0);
        let h = |u: f64| Complex64::new(0.5 * k * (u - t_max), w * u).exp() * g.eval_unchecked(u);
        let (pre, _) = grid.prefix_integrals(&h);
        grid.nodes()
            .iter()
            .zip(pre)
            .map(|(&(s, _), p)| I * p * (0.5 * k * (t_max - s)).exp())
            .collect()
    }
}

/// `sinh(κu/2) / sinh(κt/2)` for `0 <= u <= t`, without overflow.
fn sinh_ratio(u: f64, t: f64, kappa: f64) -> f64 {
    (0.5 * kappa * (u - t)).exp() * (-kappa * u).exp_m1() / (-kappa * t).exp_m1()
}

pub fn xi(g: &CouplingProfile, t: f64, kappa: f64, omega: f64) -> Result<Complex64> {
    Functionals::new(g, omega, kappa)?.xi(t)
}

pub fn mu(g: &CouplingProfile, t: f64, kappa: f64, omega: f64) -> Result<Complex64> {
    Functionals::new(g, omega, kappa)?.mu(t)
}

pub fn lambda_functional(g: &CouplingProfile, t: f64, kappa: f64, omega: f64) -> Result<Complex64> {
    Functionals::new(g, omega, kappa)?.lambda(t)
}

pub fn damping_f(g: &CouplingProfile, t: f64, params: &DecoherenceParams, omega: f64) -> Result<f64> {
    Functionals::new(g, omega, params.kappa())?.damping_f(t, params)
}

/// `ξ` of the harmonic coupling after `n` periods: `n r e^{iφ}`.
pub fn xi_harmonic_closed(r: f64, phi: f64, n: u32) -> Complex64 {
    Complex64::from_polar(n as f64 * r, phi)
}

/// First-order expansion in `κ/Ω` of the damping exponent for the harmonic
/// coupling after `n` periods.
pub fn f_harmonic_approx(r0: f64, r: f64, phi: f64, n: u32, params: &DecoherenceParams, omega: f64) -> f64 {
    let t = period_time(n, omega);
    let nf = n as f64;
    let (s, c) = phi.sin_cos();
    let pi2 = PI * PI;
    let bracket = 2.0 * r0 * r0 / pi2
        + r0 * r * (2.0 * nf * PI * c - s) / (2.0 * pi2)
        + r * r * (nf * nf / 3.0 + c * (c + 2.0 * nf * PI * s) / (4.0 * pi2));
    params.gamma() * t + params.kappa() * params.delta() * t * bracket
}

/// An earlier form of the expansion with different cross terms. It agrees with the
/// exact limit only at `r0 = 0, φ = 0`; kept for comparison.
pub fn f_harmonic_approx_printed(
    r0: f64,
    r: f64,
    phi: f64,
    n: u32,
    params: &DecoherenceParams,
    omega: f64,
) -> f64 {
    let t = period_time(n, omega);
    let nf = n as f64;
    let (s, c) = phi.sin_cos();
    let pi2 = PI * PI;
    let bracket = 2.0 * r0 * r0 / pi2 - r0 * r * (s + 2.0 * nf * PI * c) / (2.0 * pi2)
        + r * r * (nf * nf / 3.0 + c * (1.0 - 2.0 * nf * PI * s) / (4.0 * pi2));
    params.gamma() * t + params.kappa() * params.delta() * t * bracket
}

/// Minimum shot count per Pauli axis so that the decoherence-corrected
/// estimate has standard error at most `target_rel_error`:
/// `ceil(e^{2f} / ε²)`. Returns [`BUDGET_SATURATED`] above [`BUDGET_LIMIT`].
pub fn run_budget(f: f64, target_rel_error: f64) -> Result<u64> {
    if !(f >= 0.0) || f.is_nan() {
        return Err(invalid("f", format!("must be >= 0, got {f}")));
    }
    if !(target_rel_error > 0.0 && target_rel_error <= 1.0) {
        return Err(invalid(
            "target_rel_error",
            format!("must be in (0, 1], got {target_rel_error}"),
        ));
    }
    let m = (2.0 * f).exp() / (target_rel_error * target_rel_error);
    if !(m <= BUDGET_LIMIT) {
        return Ok(BUDGET_SATURATED);
    }
    // Shave rounding noise so exact integers are not bumped up by one.
    Ok((m * (1.0 - 1e-12)).ceil().max(1.0) as u64)
}
