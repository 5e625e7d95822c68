//! Oscillator states and their characteristic functions.
//!
//! # Displacement convention
//!
//! `χ(β) = tr{ρ D(β)}` with `D(β) = exp(β a† − β* a)`. Under this convention
//! the qubit signal after the protocol is exactly `χ(ξ) e^{−f}` and a coherent
//! state has `χ(β) = exp(−|β|²/2 + β α* − β* α)`. The opposite-sign operator
//! `exp(β a − β* a†)` would probe `χ(−ξ) = χ(ξ)*` instead.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::PhasePoint;

/// Sign of a cat superposition `|α⟩ ± e^{−iφ}|−α⟩`, also used for the
/// post-selected qubit outcome `(|g⟩ ± e^{iφ}|e⟩)/√2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Plus,
    Minus,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Parity::Plus => 1.0,
            Parity::Minus => -1.0,
        }
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parity::Plus => "+",
            Parity::Minus => "-",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OscillatorState {
    Fock { n: usize },
    Coherent { alpha: Complex64 },
    Thermal { nbar: f64 },
    Cat { alpha: Complex64, varphi: f64, parity: Parity },
    Numeric(NumericDensityMatrix),
}

impl OscillatorState {
    pub fn vacuum() -> Self {
        Self::Fock { n: 0 }
    }

    pub fn cat(alpha: Complex64, varphi: f64, parity: Parity) -> Result<Self> {
        let norm = cat_norm(alpha, varphi, parity);
        if !(norm > 1e-14) {
            return Err(Error::StateSpec {
                spec: format!("cat:{alpha},{varphi},{parity}"),
                reason: format!("normalization 1 ± e^(-2|α|²)cos φ = {norm} vanishes"),
            });
        }
        Ok(Self::Cat { alpha, varphi, parity })
    }

    /// Smallest Fock truncation that represents the state faithfully.
    pub fn required_dim(&self) -> usize {
        match self {
            Self::Fock { n } => n + 1,
            Self::Coherent { alpha } | Self::Cat { alpha, .. } => {
                let n = alpha.norm_sqr();
                (n + 6.0 * (n + 1.0).sqrt()).ceil() as usize
            }
            Self::Thermal { nbar } if *nbar == 0.0 => 1,
            Self::Thermal { nbar } => (10.0 * (nbar + 1.0)).ceil() as usize,
            Self::Numeric(m) => m.dim(),
        }
    }

    /// A comfortable truncation for numerical work: the required size plus a
    /// margin for displaced or higher-moment evaluations.
    pub fn suggested_dim(&self) -> usize {
        (self.required_dim() + 12).max(20)
    }
}

fn cat_norm(alpha: Complex64, varphi: f64, parity: Parity) -> f64 {
    1.0 + parity.sign() * (-2.0 * alpha.norm_sqr()).exp() * varphi.cos()
}

/// Laguerre polynomial `L_n(x)` by upward three-term recurrence.
pub fn laguerre(n: usize, x: f64) -> f64 {
    let (mut l0, mut l1) = (1.0, 1.0 - x);
    if n == 0 {
        return l0;
    }
    for k in 1..n {
        let k = k as f64;
        let l2 = ((2.0 * k + 1.0 - x) * l1 - k * l0) / (k + 1.0);
        l0 = l1;
        l1 = l2;
    }
    l1
}

/// Closed-form characteristic function of an analytic state family.
pub fn chi_analytic(state: &OscillatorState, beta: PhasePoint) -> Result<Complex64> {
    let b = beta.beta();
    let b2 = b.norm_sqr();
    Ok(match state {
        OscillatorState::Fock { n } => Complex64::new((-0.5 * b2).exp() * laguerre(*n, b2), 0.0),
        OscillatorState::Coherent { alpha } => (-0.5 * b2 + b * alpha.conj() - b.conj() * alpha).exp(),
        OscillatorState::Thermal { nbar } => Complex64::new((-(nbar + 0.5) * b2).exp(), 0.0),
        OscillatorState::Cat { alpha, varphi, parity } => chi_cat(*alpha, *varphi, *parity, b),
        OscillatorState::Numeric(_) => {
            return Err(Error::NotAnalytic(
                "numeric density matrix has no closed form; use chi_numeric".into(),
            ))
        }
    })
}

/// Characteristic function of the normalized cat `|α⟩ ± e^{−iφ}|−α⟩`.
pub fn chi_cat(alpha: Complex64, varphi: f64, parity: Parity, beta: Complex64) -> Complex64 {
    let s = parity.sign();
    let norm = cat_norm(alpha, varphi, parity);
    let central = (-0.5 * beta.norm_sqr()).exp() * (2.0 * (alpha * beta.conj()).im).cos() / norm;
    let lobes = Complex64::new(-0.5 * (beta - 2.0 * alpha).norm_sqr(), -varphi).exp()
        + Complex64::new(-0.5 * (beta + 2.0 * alpha).norm_sqr(), varphi).exp();
    Complex64::new(central, 0.0) + s * lobes / (2.0 * norm)
}

/// Oscillator density matrix in a truncated Fock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericDensityMatrix {
    matrix: DMatrix<Complex64>,
    truncation_error: f64,
}

/// Tolerances applied when validating a density matrix.
#[derive(Debug, Clone, Copy)]
pub struct DensityTolerance {
    pub hermitian: f64,
    pub trace: f64,
    pub min_eigenvalue: f64,
}

impl DensityTolerance {
    pub const STRICT: Self = Self {
        hermitian: 1e-12,
        trace: 1e-10,
        min_eigenvalue: -1e-10,
    };
    /// For matrices produced by numerical integration.
    pub const INTEGRATED: Self = Self {
        hermitian: 1e-10,
        trace: 1e-8,
        min_eigenvalue: -1e-6,
    };
}

impl NumericDensityMatrix {
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        Self::with_tolerance(matrix, DensityTolerance::STRICT)
    }

    pub fn with_tolerance(matrix: DMatrix<Complex64>, tol: DensityTolerance) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::InvalidDensityMatrix(format!(
                "shape {}x{} is not square",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let herm = (&matrix - matrix.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > tol.hermitian {
            return Err(Error::InvalidDensityMatrix(format!("not Hermitian (deviation {herm:e})")));
        }
        let tr = matrix.trace();
        if (tr - 1.0).norm() > tol.trace {
            return Err(Error::InvalidDensityMatrix(format!("trace {tr} != 1")));
        }
        let sym = hermitian_part(&matrix);
        let min_eig = min_eigenvalue(&sym);
        if min_eig < tol.min_eigenvalue {
            return Err(Error::InvalidDensityMatrix(format!("negative eigenvalue {min_eig:e}")));
        }
        Ok(Self {
            matrix: sym,
            truncation_error: 0.0,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// Population discarded by truncation before renormalization.
    pub fn truncation_error(&self) -> f64 {
        self.truncation_error
    }

    /// Population in the top `levels` Fock states.
    pub fn tail_population(&self, levels: usize) -> f64 {
        let d = self.dim();
        (d.saturating_sub(levels)..d).map(|i| self.matrix[(i, i)].re).sum()
    }

    fn from_pure(mut psi: DVector<Complex64>) -> Self {
        let norm2 = psi.norm_squared();
        psi /= Complex64::new(norm2.sqrt(), 0.0);
        let matrix = &psi * psi.adjoint();
        Self {
            matrix,
            truncation_error: 0.0,
        }
    }
}

pub(crate) fn hermitian_part(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

pub(crate) fn min_eigenvalue(herm: &DMatrix<Complex64>) -> f64 {
    herm.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

fn coherent_amplitudes(alpha: Complex64, dim: usize) -> DVector<Complex64> {
    let mut v = DVector::zeros(dim);
    let mut c = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for n in 0..dim {
        v[n] = c;
        c *= alpha / ((n + 1) as f64).sqrt();
    }
    v
}

/// Truncated Fock-basis density matrix of an analytic state, renormalized to
/// unit trace.
pub fn to_density_matrix(state: &OscillatorState, dim: usize) -> Result<NumericDensityMatrix> {
    let need = state.required_dim();
    if dim < need {
        return Err(Error::Truncation {
            dim,
            reason: format!("state needs at least {need} levels"),
        });
    }
    Ok(match state {
        OscillatorState::Fock { n } => {
            let mut m = DMatrix::zeros(dim, dim);
            m[(*n, *n)] = Complex64::new(1.0, 0.0);
            NumericDensityMatrix {
                matrix: m,
                truncation_error: 0.0,
            }
        }
        OscillatorState::Coherent { alpha } => {
            let psi = coherent_amplitudes(*alpha, dim);
            let lost = 1.0 - psi.norm_squared();
            let mut out = NumericDensityMatrix::from_pure(psi);
            out.truncation_error = lost.max(0.0);
            out
        }
        OscillatorState::Cat { alpha, varphi, parity } => {
            let plus = coherent_amplitudes(*alpha, dim);
            let minus = coherent_amplitudes(-*alpha, dim);
            let psi = plus + minus * (Complex64::from_polar(1.0, -varphi) * parity.sign());
            let exact_norm2 = 2.0 * cat_norm(*alpha, *varphi, *parity);
            let lost = 1.0 - psi.norm_squared() / exact_norm2;
            let mut out = NumericDensityMatrix::from_pure(psi);
            out.truncation_error = lost.max(0.0);
            out
        }
        OscillatorState::Thermal { nbar } => {
            let mut m = DMatrix::zeros(dim, dim);
            let q = nbar / (nbar + 1.0);
            let mut p = 1.0 / (nbar + 1.0);
            let mut total = 0.0;
            for n in 0..dim {
                m[(n, n)] = Complex64::new(p, 0.0);
                total += p;
                p *= q;
            }
            m /= Complex64::new(total, 0.0);
            NumericDensityMatrix {
                matrix: m,
                truncation_error: (1.0 - total).max(0.0),
            }
        }
        OscillatorState::Numeric(m) => {
            if m.dim() > dim {
                return Err(Error::Truncation {
                    dim,
                    reason: format!("numeric state already has {} levels", m.dim()),
                });
            }
            let mut big = DMatrix::zeros(dim, dim);
            big.view_mut((0, 0), (m.dim(), m.dim())).copy_from(&m.matrix);
            NumericDensityMatrix {
                matrix: big,
                truncation_error: m.truncation_error,
            }
        }
    })
}

/// Annihilation operator on `dim` Fock levels.
pub fn annihilation(dim: usize) -> DMatrix<Complex64> {
    let mut a = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// `D(β) = exp(β a† − β* a)` truncated to `dim` levels, by matrix exponential
/// of the truncated generator.
pub fn displacement(beta: Complex64, dim: usize) -> DMatrix<Complex64> {
    let a = annihilation(dim);
    let gen = a.adjoint() * beta - a * beta.conj();
    gen.exp()
}

/// Working dimension for `D(β)` so that its top-left `dim` block is accurate.
fn displacement_dim(beta: Complex64, dim: usize) -> usize {
    let b = beta.norm();
    dim + (b * b + 8.0 * b + 16.0).ceil() as usize
}

/// `tr{ρ D(β)}` for a numeric density matrix.
///
/// `D(β)` is built in an enlarged basis and restricted to the matrix's block,
/// so only the truncation of `ρ` itself matters. Logs a warning when the top
/// five levels of `ρ` hold more than `1e-8` population.
pub fn chi_numeric(rho: &NumericDensityMatrix, beta: PhasePoint) -> Complex64 {
    let tail = rho.tail_population(5);
    if tail > 1e-8 {
        log::warn!(
            "density matrix tail population {tail:e} above dim-5 = {}; chi may be inaccurate",
            rho.dim().saturating_sub(5)
        );
    }
    let b = beta.beta();
    let d = rho.dim();
    let big = displacement(b, displacement_dim(b, d));
    let block = big.view((0, 0), (d, d));
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..d {
        for j in 0..d {
            acc += rho.matrix[(i, j)] * block[(j, i)];
        }
    }
    acc
}

/// Evaluates `χ` for any state: closed form for analytic families, matrix
/// trace for numeric ones.
pub fn chi(state: &OscillatorState, beta: PhasePoint) -> Complex64 {
    match state {
        OscillatorState::Numeric(m) => chi_numeric(m, beta),
        other => chi_analytic(other, beta).expect("analytic state"),
    }
}

fn spec_err(spec: &str, reason: impl Into<String>) -> Error {
    Error::StateSpec {
        spec: spec.to_string(),
        reason: reason.into(),
    }
}

/// Parses an angle such as `0.3`, `pi`, `-pi/4`, `2pi/3`, `0.5*pi`.
pub fn parse_angle(text: &str) -> Option<f64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let s = s.to_ascii_lowercase();
    if let Ok(v) = s.parse::<f64>() {
        return Some(v);
    }
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.to_string(), d.parse::<f64>().ok()?),
        None => (s.clone(), 1.0),
    };
    let idx = num.find("pi")?;
    if idx + 2 != num.len() {
        return None;
    }
    let coeff = num[..idx].trim_end_matches('*');
    let c = match coeff {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().ok()?,
    };
    Some(c * PI / den)
}

/// Parses a complex number such as `0.5`, `0.5+0.2i`, `-1e-1-3i`, `0.3i`.
pub fn parse_complex(text: &str) -> Option<Complex64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return None;
    }
    if let Some(body) = s.strip_suffix('i').or_else(|| s.strip_suffix('j')) {
        // Split at the last sign that is not an exponent sign or the leading sign.
        let bytes = body.as_bytes();
        let mut split = None;
        for k in (1..bytes.len()).rev() {
            if (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E') {
                split = Some(k);
                break;
            }
        }
        let (re, im) = match split {
            Some(k) => (body[..k].parse::<f64>().ok()?, &body[k..]),
            None => (0.0, body),
        };
        let im = match im {
            "" | "+" => 1.0,
            "-" => -1.0,
            v => v.parse::<f64>().ok()?,
        };
        return Some(Complex64::new(re, im));
    }
    s.parse::<f64>().ok().map(|v| Complex64::new(v, 0.0))
}

impl FromStr for OscillatorState {
    type Err = Error;

    /// `fock:5`, `coherent:0.5+0.2i`, `thermal:1.3`, `cat:1.0,pi/2,+`.
    fn from_str(spec: &str) -> Result<Self> {
        let (kind, args) = spec
            .trim()
            .split_once(':')
            .ok_or_else(|| spec_err(spec, "expected `<kind>:<args>`"))?;
        let args = args.trim();
        match kind.trim().to_ascii_lowercase().as_str() {
            "fock" => {
                let n = args
                    .parse::<usize>()
                    .map_err(|_| spec_err(spec, "Fock index must be a nonnegative integer"))?;
                Ok(Self::Fock { n })
            }
            "coherent" => {
                let alpha = parse_complex(args).ok_or_else(|| spec_err(spec, "bad complex amplitude"))?;
                Ok(Self::Coherent { alpha })
            }
            "thermal" => {
                let nbar = args
                    .parse::<f64>()
                    .map_err(|_| spec_err(spec, "bad mean occupation"))?;
                if !(nbar >= 0.0) || !nbar.is_finite() {
                    return Err(spec_err(spec, "mean occupation must be finite and >= 0"));
                }
                Ok(Self::Thermal { nbar })
            }
            "cat" => {
                let parts: Vec<&str> = args.split(',').map(str::trim).collect();
                if parts.len() != 3 {
                    return Err(spec_err(spec, "expected `cat:<alpha>,<varphi>,<+|->`"));
                }
                let alpha = parse_complex(parts[0]).ok_or_else(|| spec_err(spec, "bad complex amplitude"))?;
                let varphi = parse_angle(parts[1]).ok_or_else(|| spec_err(spec, "bad angle"))?;
                let parity = match parts[2] {
                    "+" => Parity::Plus,
                    "-" => Parity::Minus,
                    _ => return Err(spec_err(spec, "parity must be `+` or `-`")),
                };
                Self::cat(alpha, varphi, parity).map_err(|_| spec_err(spec, "cat normalization vanishes"))
            }
            other => Err(spec_err(spec, format!("unknown state kind `{other}`"))),
        }
    }
}

impl fmt::Display for OscillatorState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Fock { n } => write!(f, "fock:{n}"),
            Self::Coherent { alpha } => write!(f, "coherent:{}{:+}i", alpha.re, alpha.im),
            Self::Thermal { nbar } => write!(f, "thermal:{nbar}"),
            Self::Cat { alpha, varphi, parity } => {
                write!(f, "cat:{}{:+}i,{varphi},{parity}", alpha.re, alpha.im)
            }
            Self::Numeric(m) => write!(f, "numeric:{}", m.dim()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pp(re: f64, im: f64) -> PhasePoint {
        PhasePoint::from_parts(re, im).unwrap()
    }

    fn families() -> Vec<OscillatorState> {
        vec![
            OscillatorState::vacuum(),
            OscillatorState::Fock { n: 3 },
            OscillatorState::Fock { n: 5 },
            OscillatorState::Coherent {
                alpha: Complex64::new(0.6, -0.4),
            },
            OscillatorState::Thermal { nbar: 0.7 },
            OscillatorState::cat(Complex64::new(1.0, 0.2), PI / 2.0, Parity::Plus).unwrap(),
            OscillatorState::cat(Complex64::new(0.8, 0.0), 0.0, Parity::Minus).unwrap(),
        ]
    }

    #[test]
    fn laguerre_low_orders() {
        // L_2(x) = (x² − 4x + 2)/2, L_3(x) = (−x³ + 9x² − 18x + 6)/6.
        for x in [0.0, 0.5, 2.0, 7.3] {
            assert!((laguerre(2, x) - (x * x - 4.0 * x + 2.0) / 2.0).abs() < 1e-12);
            assert!((laguerre(3, x) - (-x * x * x + 9.0 * x * x - 18.0 * x + 6.0) / 6.0).abs() < 1e-11);
        }
        // L_5(1) = 1 − 5 + 5 − 5/3 + 5/24 − 1/120.
        let l5 = 1.0 - 5.0 + 5.0 - 5.0 / 3.0 + 5.0 / 24.0 - 1.0 / 120.0;
        assert!((laguerre(5, 1.0) - l5).abs() < 1e-14);
    }

    #[test]
    fn normalization_at_origin() {
        for s in families() {
            let v = chi_analytic(&s, pp(0.0, 0.0)).unwrap();
            assert!((v - 1.0).norm() < 1e-14, "{s}");
        }
    }

    #[test]
    fn fock5_at_unit_modulus() {
        let s = OscillatorState::Fock { n: 5 };
        let b = pp(0.6, 0.8);
        let v = chi_analytic(&s, b).unwrap();
        assert!((v.re - (-0.5f64).exp() * laguerre(5, 1.0)).abs() < 1e-14);
        let rho = to_density_matrix(&s, 30).unwrap();
        assert!((chi_numeric(&rho, b) - v).norm() < 1e-10);
    }

    #[test]
    fn cat_real_on_real_axis_at_quarter_phase() {
        // α real, φ = π/2: lobes give −i e^{−(β−2α)²/2} + i e^{−(β+2α)²/2}, purely imaginary,
        // so Re χ is the central term only.
        let s = OscillatorState::cat(Complex64::new(1.0, 0.0), PI / 2.0, Parity::Plus).unwrap();
        for x in [-2.5, -1.0, 0.3, 2.0] {
            let v = chi_analytic(&s, pp(x, 0.0)).unwrap();
            assert!((v.re - (-0.5 * x * x).exp()).abs() < 1e-14);
            let lobes = -(-0.5 * (x - 2.0) * (x - 2.0)).exp() + (-0.5 * (x + 2.0) * (x + 2.0)).exp();
            assert!((v.im - 0.5 * lobes).abs() < 1e-14);
        }
    }

    #[test]
    fn cat_interference_peaks_at_twice_alpha() {
        let alpha = Complex64::new(1.2, 0.5);
        let s = OscillatorState::cat(alpha, 0.7, Parity::Plus).unwrap();
        let central = |b: Complex64| (-0.5 * b.norm_sqr()).exp() * (2.0 * (alpha * b.conj()).im).cos() / cat_norm(alpha, 0.7, Parity::Plus);
        let lobe = |k: f64| {
            let b = alpha * k;
            (chi_analytic(&s, PhasePoint::new(b).unwrap()).unwrap() - central(b)).norm()
        };
        assert!(lobe(2.0) > lobe(1.5));
        assert!(lobe(2.0) > lobe(2.5));
    }

    #[test]
    fn numeric_vacuum() {
        let rho = to_density_matrix(&OscillatorState::vacuum(), 30).unwrap();
        assert!((chi_numeric(&rho, pp(0.0, 0.0)) - 1.0).norm() < 1e-14);
        assert!((chi_numeric(&rho, pp(1.0, 0.0)).re - (-0.5f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn numeric_matches_analytic_all_families() {
        let grid = [(0.3, 0.1), (-1.2, 0.9), (2.1, -1.7), (0.0, -3.0), (2.5, 1.5)];
        for s in families() {
            let rho = to_density_matrix(&s, 40).unwrap();
            for &(x, y) in &grid {
                let b = pp(x, y);
                let d = (chi_numeric(&rho, b) - chi_analytic(&s, b).unwrap()).norm();
                assert!(d < 1e-6, "{s} at {x},{y}: {d:e}");
            }
        }
    }

    #[test]
    fn density_matrices() {
        let m = to_density_matrix(&OscillatorState::Fock { n: 2 }, 10).unwrap();
        for i in 0..10 {
            for j in 0..10 {
                let e = if i == 2 && j == 2 { 1.0 } else { 0.0 };
                assert_eq!(m.matrix()[(i, j)], Complex64::new(e, 0.0));
            }
        }
        let m = to_density_matrix(&OscillatorState::Coherent { alpha: Complex64::new(0.5, 0.0) }, 20).unwrap();
        let mut fact = 1.0;
        for n in 0..20 {
            if n > 0 {
                fact *= n as f64;
            }
            let p = (-0.25f64).exp() * 0.25f64.powi(n as i32) / fact;
            assert!((m.matrix()[(n, n)].re - p).abs() < 1e-14);
        }
        let m = to_density_matrix(&OscillatorState::Thermal { nbar: 0.0 }, 5).unwrap();
        assert_eq!(m.matrix()[(0, 0)], Complex64::new(1.0, 0.0));
        assert_eq!(m.matrix()[(1, 1)], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn insufficient_dim_rejected() {
        let s = OscillatorState::Coherent { alpha: Complex64::new(2.0, 0.0) };
        assert!(matches!(to_density_matrix(&s, 5), Err(Error::Truncation { .. })));
        assert!(to_density_matrix(&OscillatorState::Fock { n: 5 }, 5).is_err());
        assert!(to_density_matrix(&OscillatorState::Thermal { nbar: 1.0 }, 19).is_err());
    }

    #[test]
    fn density_matrix_validation() {
        let mut m = DMatrix::<Complex64>::zeros(3, 3);
        m[(0, 0)] = Complex64::new(0.5, 0.0);
        m[(1, 1)] = Complex64::new(0.5, 0.0);
        assert!(NumericDensityMatrix::new(m.clone()).is_ok());
        let mut bad = m.clone();
        bad[(0, 1)] = Complex64::new(0.1, 0.0);
        assert!(NumericDensityMatrix::new(bad).is_err());
        let mut bad = m.clone();
        bad[(2, 2)] = Complex64::new(0.1, 0.0);
        assert!(NumericDensityMatrix::new(bad).is_err());
        let mut bad = m;
        bad[(0, 0)] = Complex64::new(1.2, 0.0);
        bad[(1, 1)] = Complex64::new(-0.2, 0.0);
        assert!(NumericDensityMatrix::new(bad).is_err());
    }

    #[test]
    fn analytic_rejects_numeric() {
        let rho = to_density_matrix(&OscillatorState::vacuum(), 4).unwrap();
        assert!(chi_analytic(&OscillatorState::Numeric(rho), pp(0.1, 0.0)).is_err());
    }

    #[test]
    fn parse_specs() {
        assert_eq!("fock:5".parse::<OscillatorState>().unwrap(), OscillatorState::Fock { n: 5 });
        assert_eq!(
            "coherent:0.5+0.2i".parse::<OscillatorState>().unwrap(),
            OscillatorState::Coherent { alpha: Complex64::new(0.5, 0.2) }
        );
        assert_eq!(
            "thermal:1.3".parse::<OscillatorState>().unwrap(),
            OscillatorState::Thermal { nbar: 1.3 }
        );
        assert_eq!(
            "cat:1.0,pi/2,+".parse::<OscillatorState>().unwrap(),
            OscillatorState::Cat {
                alpha: Complex64::new(1.0, 0.0),
                varphi: PI / 2.0,
                parity: Parity::Plus
            }
        );
        assert!("fock:-1".parse::<OscillatorState>().is_err());
        assert!("squeezed:1".parse::<OscillatorState>().is_err());
        assert!("cat:0,0,-".parse::<OscillatorState>().is_err());
        assert!("thermal:-2".parse::<OscillatorState>().is_err());
    }

    #[test]
    fn parse_numbers() {
        assert_eq!(parse_complex("-1e-1-3i"), Some(Complex64::new(-0.1, -3.0)));
        assert_eq!(parse_complex("0.3i"), Some(Complex64::new(0.0, 0.3)));
        assert_eq!(parse_complex("-i"), Some(Complex64::new(0.0, -1.0)));
        assert_eq!(parse_complex("2"), Some(Complex64::new(2.0, 0.0)));
        assert_eq!(parse_complex("1e+2+1e-2i"), Some(Complex64::new(100.0, 0.01)));
        assert_eq!(parse_angle("pi/2"), Some(PI / 2.0));
        assert_eq!(parse_angle("-pi/4"), Some(-PI / 4.0));
        assert_eq!(parse_angle("2pi/3"), Some(2.0 * PI / 3.0));
        assert_eq!(parse_angle("0.5*pi"), Some(0.5 * PI));
        assert_eq!(parse_angle("1.25"), Some(1.25));
        assert_eq!(parse_angle("pix"), None);
    }

    proptest! {
        #[test]
        fn hermitian_symmetry_and_bound(x in -3.0f64..3.0, y in -3.0f64..3.0, k in 0usize..7) {
            let s = &families()[k];
            let b = pp(x, y);
            let nb = pp(-x, -y);
            let v = chi_analytic(s, b).unwrap();
            let w = chi_analytic(s, nb).unwrap();
            prop_assert!((w - v.conj()).norm() < 1e-13);
            prop_assert!(v.norm() <= 1.0 + 1e-12);
        }
    }
}
