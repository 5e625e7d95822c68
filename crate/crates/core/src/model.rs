//! Domain types shared by every module.
//!
//! # Units
//!
//! Every frequency and rate is angular (radians per time unit) and every time
//! is in the matching inverse unit, so products such as `kappa * t` are
//! dimensionless. The library never assumes a particular time unit; the CLI
//! stores rad/µs and µs. The oscillator frequency `omega` is passed explicitly
//! to every operation that needs it, and the harmonic protocol samples times
//! `t_n = n * 2π / omega`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

/// Markovian decoherence rates and bath occupations.
///
/// `kappa` is the oscillator damping, `gamma1` and `gamma2` the qubit damping
/// and pure dephasing, `n_m` and `n_q` the thermal occupations of the
/// oscillator and qubit baths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoherenceParams {
    kappa: f64,
    gamma1: f64,
    gamma2: f64,
    n_m: f64,
    n_q: f64,
}

impl DecoherenceParams {
    pub fn new(kappa: f64, gamma1: f64, gamma2: f64, n_m: f64, n_q: f64) -> Result<Self> {
        for (name, v) in [
            ("kappa", kappa),
            ("gamma1", gamma1),
            ("gamma2", gamma2),
            ("n_m", n_m),
            ("n_q", n_q),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(invalid(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        Ok(Self {
            kappa,
            gamma1,
            gamma2,
            n_m,
            n_q,
        })
    }

    /// No decoherence at all; `delta` is still 1/2.
    pub fn noiseless() -> Self {
        Self {
            kappa: 0.0,
            gamma1: 0.0,
            gamma2: 0.0,
            n_m: 0.0,
            n_q: 0.0,
        }
    }

    /// Builds parameters from the oscillator product `kappa * delta` instead of
    /// the bath occupation. Requires `kappa_delta >= kappa / 2`.
    pub fn from_kappa_delta(
        kappa: f64,
        kappa_delta: f64,
        gamma1: f64,
        gamma2: f64,
        n_q: f64,
    ) -> Result<Self> {
        if !(kappa > 0.0) {
            return Err(invalid("kappa", "must be > 0 when kappa_delta is given"));
        }
        let n_m = kappa_delta / kappa - 0.5;
        if n_m < -1e-12 {
            return Err(invalid(
                "kappa_delta",
                format!("kappa_delta = {kappa_delta} implies negative n_m = {n_m}"),
            ));
        }
        Self::new(kappa, gamma1, gamma2, n_m.max(0.0), n_q)
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }
    pub fn gamma1(&self) -> f64 {
        self.gamma1
    }
    pub fn gamma2(&self) -> f64 {
        self.gamma2
    }
    pub fn n_m(&self) -> f64 {
        self.n_m
    }
    pub fn n_q(&self) -> f64 {
        self.n_q
    }

    /// Total qubit coherence decay rate `Γ1 (N_q + 1/2) + 2 Γ2`.
    pub fn gamma(&self) -> f64 {
        self.gamma1 * (self.n_q + 0.5) + 2.0 * self.gamma2
    }

    /// `N_m + 1/2`.
    pub fn delta(&self) -> f64 {
        self.n_m + 0.5
    }

    pub fn with_n_q(mut self, n_q: f64) -> Result<Self> {
        self.n_q = n_q;
        Self::new(self.kappa, self.gamma1, self.gamma2, self.n_m, n_q)
    }
}

/// Returns `(gamma, delta)` for the given parameters.
pub fn derive_rates(params: &DecoherenceParams) -> (f64, f64) {
    (params.gamma(), params.delta())
}

/// Time-dependent qubit-oscillator coupling `g(t)`.
#[derive(Debug, Clone, PartialEq)]
pub enum CouplingProfile {
    /// `(omega/2π) e^{kappa t/2} [r0 + r sin(phi - omega t)]`.
    Harmonic {
        r0: f64,
        r: f64,
        phi: f64,
        omega: f64,
        kappa: f64,
    },
    Constant { g0: f64 },
    /// Piecewise-linear interpolation between strictly increasing knots.
    Sampled { times: Vec<f64>, values: Vec<f64> },
}

impl CouplingProfile {
    pub fn harmonic(r0: f64, r: f64, phi: f64, omega: f64, kappa: f64) -> Result<Self> {
        for (name, v) in [("r0", r0), ("r", r), ("phi", phi), ("omega", omega), ("kappa", kappa)] {
            if !v.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
        }
        if r < 0.0 {
            return Err(invalid("r", format!("must be >= 0, got {r}")));
        }
        if omega <= 0.0 {
            return Err(invalid("omega", format!("must be > 0, got {omega}")));
        }
        if kappa < 0.0 {
            return Err(invalid("kappa", format!("must be >= 0, got {kappa}")));
        }
        Ok(Self::Harmonic {
            r0,
            r,
            phi,
            omega,
            kappa,
        })
    }

    pub fn constant(g0: f64) -> Result<Self> {
        if !g0.is_finite() {
            return Err(invalid("g0", "must be finite"));
        }
        Ok(Self::Constant { g0 })
    }

    pub fn zero() -> Self {
        Self::Constant { g0: 0.0 }
    }

    pub fn sampled(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(invalid(
                "values",
                format!("{} values for {} times", values.len(), times.len()),
            ));
        }
        if times.len() < 2 {
            return Err(invalid("times", "need at least two knots"));
        }
        if times.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(invalid("times", "knots and values must be finite"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("times", "must be strictly increasing"));
        }
        Ok(Self::Sampled { times, values })
    }

    /// Evaluates `g(t)`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        match self {
            Self::Sampled { times, .. } => {
                let (start, end) = (times[0], times[times.len() - 1]);
                if !(t >= start && t <= end) {
                    return Err(Error::OutOfRange { t, start, end });
                }
                Ok(self.eval_unchecked(t))
            }
            _ => Ok(self.eval_unchecked(t)),
        }
    }

    /// Evaluates without the range check. Sampled profiles clamp to the end
    /// knots; callers validate the integration range once up front.
    pub(crate) fn eval_unchecked(&self, t: f64) -> f64 {
        match self {
            Self::Harmonic {
                r0,
                r,
                phi,
                omega,
                kappa,
            } => omega / (2.0 * PI) * (0.5 * kappa * t).exp() * (r0 + r * (phi - omega * t).sin()),
            Self::Constant { g0 } => *g0,
            Self::Sampled { times, values } => {
                let last = times.len() - 1;
                if t <= times[0] {
                    return values[0];
                }
                if t >= times[last] {
                    return values[last];
                }
                // First knot strictly greater than t.
                let hi = times.partition_point(|&k| k <= t);
                let lo = hi - 1;
                if t == times[lo] {
                    return values[lo];
                }
                let w = (t - times[lo]) / (times[hi] - times[lo]);
                values[lo] + w * (values[hi] - values[lo])
            }
        }
    }

    /// Checks that `[0, t]` is inside the profile's domain.
    pub fn check_range(&self, t: f64) -> Result<()> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(invalid("t", format!("must be finite and >= 0, got {t}")));
        }
        if let Self::Sampled { times, .. } = self {
            let (start, end) = (times[0], times[times.len() - 1]);
            if start > 0.0 || t > end {
                let bad = if start > 0.0 { 0.0 } else { t };
                return Err(Error::OutOfRange { t: bad, start, end });
            }
        }
        Ok(())
    }

    /// Interior points of `(0, t)` where the profile is not smooth.
    pub(crate) fn kinks(&self, t: f64) -> Vec<f64> {
        match self {
            Self::Sampled { times, .. } => times.iter().copied().filter(|&k| k > 0.0 && k < t).collect(),
            _ => Vec::new(),
        }
    }

    /// Multiplies the coupling by a constant.
    pub fn scaled(&self, c: f64) -> Self {
        match self {
            Self::Harmonic {
                r0,
                r,
                phi,
                omega,
                kappa,
            } => {
                // r must stay nonnegative; absorb a negative scale into the phase.
                let (r, phi) = if c >= 0.0 { (r * c, *phi) } else { (-r * c, phi + PI) };
                Self::Harmonic {
                    r0: r0 * c,
                    r,
                    phi,
                    omega: *omega,
                    kappa: *kappa,
                }
            }
            Self::Constant { g0 } => Self::Constant { g0: g0 * c },
            Self::Sampled { times, values } => Self::Sampled {
                times: times.clone(),
                values: values.iter().map(|v| v * c).collect(),
            },
        }
    }
}

/// Interaction time after `n` full oscillator periods.
pub fn period_time(n: u32, omega: f64) -> f64 {
    n as f64 * 2.0 * PI / omega
}

/// A point of the oscillator phase space, the argument of `χ(β)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint(Complex64);

impl PhasePoint {
    pub fn new(beta: Complex64) -> Result<Self> {
        if !beta.re.is_finite() || !beta.im.is_finite() {
            return Err(invalid("beta", format!("must be finite, got {beta}")));
        }
        Ok(Self(beta))
    }

    pub fn from_parts(re: f64, im: f64) -> Result<Self> {
        Self::new(Complex64::new(re, im))
    }

    pub fn beta(&self) -> Complex64 {
        self.0
    }
}

impl From<PhasePoint> for Complex64 {
    fn from(p: PhasePoint) -> Self {
        p.0
    }
}
