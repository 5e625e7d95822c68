//! Matricial characteristic function of the joint state and post-selected
//! cat preparation.
//!
//! The joint state `ρ = Σ |i⟩⟨j| ⊗ ρ_ij` is carried by four phase-space
//! functions: `χ_e = tr(ρ_ee D)`, `χ_g = tr(ρ_gg D)`, `χ₊ = tr(ρ_eg D)` and
//! `χ₋ = tr(ρ_ge D)`. Starting from `|+⟩ ⊗ ρ0` every component is `χ0/2`.
//! The evolution of `χ_e` and `χ_g` ignores thermal qubit excitation
//! (`N_q = 0` is required).

use std::io::{self, Write};

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::functionals::Functionals;
use crate::model::{CouplingProfile, DecoherenceParams, PhasePoint};
use crate::quadrature::{PanelGrid, PANEL_ORDER};
use crate::states::{chi, chi_cat, OscillatorState, Parity};

/// Gauss–Legendre panels per drive period for the `χ_g` source integral.
pub const PANELS_PER_PERIOD: usize = 16;

/// Sign selecting `χ₊` or `χ₋`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coherence {
    /// `tr(⟨e|ρ|g⟩ D(β))`.
    Plus,
    /// `tr(⟨g|ρ|e⟩ D(β))`.
    Minus,
}

impl Coherence {
    fn sign(self) -> f64 {
        match self {
            Coherence::Plus => 1.0,
            Coherence::Minus => -1.0,
        }
    }
}

/// The four components at one time `t`, with the functionals they need
/// precomputed. Evaluation at many `β` is cheap and thread-safe.
#[derive(Debug, Clone)]
pub struct MatricialChi {
    initial: OscillatorState,
    t: f64,
    kappa: f64,
    gamma1: f64,
    n_q: f64,
    xi: Complex64,
    mu: Complex64,
    nu: f64,
    /// `Δ(1 − e^{−κt})`.
    d_t: f64,
    lambda_t: Complex64,
    /// `(s, weight · e^{−Γ1 s}, λ(s))` on the source-integral grid.
    source: Vec<(f64, f64, Complex64)>,
}

impl MatricialChi {
    pub fn new(
        initial: OscillatorState,
        g: &CouplingProfile,
        t: f64,
        params: &DecoherenceParams,
        omega: f64,
    ) -> Result<Self> {
        Self::with_resolution(initial, g, t, params, omega, PANELS_PER_PERIOD)
    }

    pub fn with_resolution(
        initial: OscillatorState,
        g: &CouplingProfile,
        t: f64,
        params: &DecoherenceParams,
        omega: f64,
        panels_per_period: usize,
    ) -> Result<Self> {
        if panels_per_period == 0 {
            return Err(invalid("panels_per_period", "must be >= 1"));
        }
        if let OscillatorState::Numeric(_) = initial {
            return Err(Error::NotAnalytic("matricial evolution needs a closed-form initial χ".into()));
        }
        let fun = Functionals::new(g, omega, params.kappa())?;
        let r = fun.evaluate(t, params)?;
        let kinks = g.kinks(t);
        let periods = omega * t / (2.0 * std::f64::consts::PI);
        let per_segment = ((panels_per_period as f64 * periods).ceil() as usize)
            .max(2)
            .div_ceil(kinks.len() + 1)
            .max(2);
        let grid = PanelGrid::new(t, &kinks, per_segment, PANEL_ORDER);
        let source = if t > 0.0 && params.gamma1() > 0.0 {
            let lambdas = fun.lambda_on_grid(&grid);
            grid.nodes()
                .into_iter()
                .zip(lambdas)
                .map(|((s, w), l)| (s, w * (-params.gamma1() * s).exp(), l))
                .collect()
        } else {
            Vec::new()
        };
        Ok(Self {
            initial,
            t,
            kappa: params.kappa(),
            gamma1: params.gamma1(),
            n_q: params.n_q(),
            xi: r.xi,
            mu: r.mu,
            nu: r.nu,
            d_t: params.delta() * -(-params.kappa() * t).exp_m1(),
            lambda_t: r.lambda,
            source,
        })
    }

    pub fn xi(&self) -> Complex64 {
        self.xi
    }

    fn chi0_half(&self, beta: Complex64) -> Complex64 {
        // PhasePoint only rejects non-finite input, which cannot arise here.
        0.5 * chi(&self.initial, PhasePoint::new(beta).expect("finite β"))
    }

    fn shrink(&self) -> f64 {
        (-0.5 * self.kappa * self.t).exp()
    }

    /// `χ±(β,t) = χ±(βe^{−κt/2} ∓ ξ, 0) e^{−Δ(1−e^{−κt})|β ∓ μ|² − ν}`.
    pub fn chi_pm(&self, which: Coherence, beta: Complex64) -> Complex64 {
        let s = which.sign();
        let arg = beta * self.shrink() - s * self.xi;
        self.chi0_half(arg) * (-self.d_t * (beta - s * self.mu).norm_sqr() - self.nu).exp()
    }

    fn require_cold_qubit(&self) -> Result<()> {
        if self.n_q > 0.0 {
            return Err(invalid(
                "n_q",
                format!("population evolution assumes N_q = 0, got {}", self.n_q),
            ));
        }
        Ok(())
    }

    /// `χ_e(β,t) = e^{−Γ1 t − Δ(1−e^{−κt})|β|² + λβ* − λ*β} χ_e(βe^{−κt/2}, 0)`.
    pub fn chi_e(&self, beta: Complex64) -> Result<Complex64> {
        self.require_cold_qubit()?;
        let expo = Complex64::new(-self.gamma1 * self.t - self.d_t * beta.norm_sqr(), 2.0 * (self.lambda_t * beta.conj()).im);
        Ok(self.chi0_half(beta * self.shrink()) * expo.exp())
    }

    /// `χ_g(β,t)`: the homogeneous solution plus the decay source fed by `χ_e`,
    ///
    /// ```text
    /// χ_g = e^{−D|β|² + λ*β − λβ*} [χ_g0(b) + Γ1 χ_e0(b) ∫₀ᵗ e^{−Γ1 s + 2(λ_s b_s* − λ_s* b_s)} ds]
    /// ```
    ///
    /// with `b = βe^{−κt/2}` and `b_s = βe^{κ(s−t)/2}`.
    pub fn chi_g(&self, beta: Complex64) -> Result<Complex64> {
        self.require_cold_qubit()?;
        let b = beta * self.shrink();
        let c0 = self.chi0_half(b);
        let mut source = Complex64::new(0.0, 0.0);
        for &(s, w, l) in &self.source {
            let bs = beta * (0.5 * self.kappa * (s - self.t)).exp();
            source += Complex64::from_polar(w, 4.0 * (l * bs.conj()).im);
        }
        let outer = Complex64::new(-self.d_t * beta.norm_sqr(), -2.0 * (self.lambda_t * beta.conj()).im).exp();
        Ok(outer * (c0 + self.gamma1 * c0 * source))
    }

    /// `⟨σx⟩ + i⟨σy⟩ = 2 χ₋(0, t)`.
    pub fn signal(&self) -> Complex64 {
        2.0 * self.chi_pm(Coherence::Minus, Complex64::new(0.0, 0.0))
    }
}

/// `χ±(β,t)` from `|+⟩ ⊗ ρ0`.
pub fn evolve_chi_pm(
    initial: &OscillatorState,
    which: Coherence,
    beta: PhasePoint,
    t: f64,
    g: &CouplingProfile,
    params: &DecoherenceParams,
    omega: f64,
) -> Result<Complex64> {
    Ok(MatricialChi::new(initial.clone(), g, t, params, omega)?.chi_pm(which, beta.beta()))
}

/// `χ_e(β,t)` from `|+⟩ ⊗ ρ0`.
pub fn evolve_chi_e(
    initial: &OscillatorState,
    beta: PhasePoint,
    t: f64,
    g: &CouplingProfile,
    params: &DecoherenceParams,
    omega: f64,
) -> Result<Complex64> {
    MatricialChi::new(initial.clone(), g, t, params, omega)?.chi_e(beta.beta())
}

/// `χ_g(β,t)` from `|+⟩ ⊗ ρ0`.
pub fn evolve_chi_g(
    initial: &OscillatorState,
    beta: PhasePoint,
    t: f64,
    g: &CouplingProfile,
    params: &DecoherenceParams,
    omega: f64,
) -> Result<Complex64> {
    MatricialChi::new(initial.clone(), g, t, params, omega)?.chi_g(beta.beta())
}

/// Oscillator state after measuring the qubit in `(|g⟩ ± e^{iφ}|e⟩)/√2`,
/// starting from `|+⟩ ⊗ |0⟩`.
#[derive(Debug, Clone)]
pub struct PreparedCat {
    components: MatricialChi,
    varphi: f64,
    parity: Parity,
    norm: f64,
}

impl PreparedCat {
    fn combine(&self, beta: Complex64) -> Result<Complex64> {
        let c = &self.components;
        let s = self.parity.sign();
        let phase = Complex64::from_polar(1.0, self.varphi);
        Ok(c.chi_e(beta)?
            + c.chi_g(beta)?
            + s * phase.conj() * c.chi_pm(Coherence::Plus, beta)
            + s * phase * c.chi_pm(Coherence::Minus, beta))
    }

    /// Normalized characteristic function of the prepared state.
    pub fn eval(&self, beta: PhasePoint) -> Complex64 {
        // N_q = 0 was checked at construction, so the components cannot fail.
        self.combine(beta.beta()).expect("validated components") / self.norm
    }

    /// Probability of the post-selected outcome.
    pub fn probability(&self) -> f64 {
        0.5 * self.norm
    }

    /// Amplitude `ξ/2` of the ideal cat the protocol aims at.
    pub fn target_alpha(&self) -> Complex64 {
        0.5 * self.components.xi
    }

    /// The decoherence-free cat with the same `α`, `φ` and parity.
    pub fn ideal(&self, beta: PhasePoint) -> Complex64 {
        chi_cat(self.target_alpha(), self.varphi, self.parity, beta.beta())
    }
}

/// Prepares the post-selected superposition; the oscillator starts in vacuum.
pub fn chi_prepared_cat(
    t: f64,
    g: &CouplingProfile,
    params: &DecoherenceParams,
    omega: f64,
    varphi: f64,
    parity: Parity,
) -> Result<PreparedCat> {
    if !varphi.is_finite() {
        return Err(invalid("varphi", "must be finite"));
    }
    let components = MatricialChi::new(OscillatorState::vacuum(), g, t, params, omega)?;
    components.require_cold_qubit()?;
    let mut cat = PreparedCat {
        components,
        varphi,
        parity,
        norm: 1.0,
    };
    let norm = cat.combine(Complex64::new(0.0, 0.0))?;
    if !(norm.re > 2e-10) {
        return Err(Error::NullOutcome {
            probability: 0.5 * norm.re,
        });
    }
    cat.norm = norm.re;
    Ok(cat)
}

pub const CAT_CSV_HEADER: &str = "beta_re,beta_im,chi_ideal_re,chi_ideal_im,chi_prepared_re,chi_prepared_im";

/// Writes ideal and prepared `χ` on `grid` with 17 significant digits.
pub fn write_cat_csv<W: Write>(mut w: W, cat: &PreparedCat, grid: &[PhasePoint]) -> io::Result<()> {
    writeln!(w, "{CAT_CSV_HEADER}")?;
    for &beta in grid {
        let b = beta.beta();
        let ideal = cat.ideal(beta);
        let prepared = cat.eval(beta);
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            b.re, b.im, ideal.re, ideal.im, prepared.re, prepared.im
        )?;
    }
    Ok(())
}
