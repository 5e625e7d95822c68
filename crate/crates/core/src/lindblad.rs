//! Brute-force master-equation oracle on qubit ⊗ truncated Fock space.
//!
//! Integrates, in the interaction picture,
//!
//! ```text
//! dρ/dt = −i[H_I(t), ρ] + (κ/2)(N_m+1) D[a]ρ + (κ/2) N_m D[a†]ρ
//!         + (Γ1/2)(N_q+1) D[σ−]ρ + (Γ1/2) N_q D[σ+]ρ + (Γ2/2) D[σz]ρ
//! H_I(t) = g(t) σz (a e^{−iΩt} + a† e^{iΩt}),   D[A]ρ = 2AρA† − A†Aρ − ρA†A
//! ```
//!
//! with an adaptive Dormand–Prince 5(4) stepper. The joint index is
//! `q * dim + n` with qubit level `q = 0` for `|g⟩` and `q = 1` for `|e⟩`;
//! `σz = |e⟩⟨e| − |g⟩⟨g|`, `σx = |e⟩⟨g| + |g⟩⟨e|`, `σy = −i(|e⟩⟨g| − |g⟩⟨e|)`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::functionals::Functionals;
use crate::model::{CouplingProfile, DecoherenceParams, PhasePoint};
use crate::states::{
    chi, hermitian_part, min_eigenvalue, DensityTolerance, NumericDensityMatrix, OscillatorState, Parity,
};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub const GROUND: usize = 0;
pub const EXCITED: usize = 1;

/// Joint qubit–oscillator density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    dim: usize,
    matrix: DMatrix<Complex64>,
}

impl JointState {
    pub fn new(dim: usize, matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != 2 * dim || matrix.ncols() != 2 * dim {
            return Err(invalid("matrix", format!("expected {0}x{0}", 2 * dim)));
        }
        NumericDensityMatrix::with_tolerance(matrix.clone(), DensityTolerance::INTEGRATED)?;
        Ok(Self {
            dim,
            matrix: hermitian_part(&matrix),
        })
    }

    /// `ρ_q ⊗ ρ_osc` from a 2×2 qubit matrix in the (g, e) basis.
    pub fn product(qubit: &DMatrix<Complex64>, osc: &NumericDensityMatrix) -> Result<Self> {
        if qubit.shape() != (2, 2) {
            return Err(invalid("qubit", "must be 2x2"));
        }
        Self::new(osc.dim(), qubit.kronecker(osc.matrix()))
    }

    /// `|+⟩⟨+| ⊗ ρ0` with `|+⟩ = (|g⟩ + |e⟩)/√2`.
    pub fn plus_product(osc: &NumericDensityMatrix) -> Result<Self> {
        Self::product(&qubit_pure(ONE, ONE), osc)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// Oscillator block `⟨q|ρ|q'⟩`.
    pub fn block(&self, q: usize, q2: usize) -> DMatrix<Complex64> {
        self.matrix.view((q * self.dim, q2 * self.dim), (self.dim, self.dim)).into_owned()
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.matrix)
    }

    /// Population of the top `levels` Fock states, summed over the qubit.
    pub fn top_population(&self, levels: usize) -> f64 {
        let d = self.dim;
        let mut p = 0.0;
        for q in 0..2 {
            for n in d.saturating_sub(levels)..d {
                p += self.matrix[(q * d + n, q * d + n)].re;
            }
        }
        p
    }

    /// Reduced oscillator state `tr_q ρ`.
    pub fn oscillator_marginal(&self) -> Result<NumericDensityMatrix> {
        let m = self.block(GROUND, GROUND) + self.block(EXCITED, EXCITED);
        NumericDensityMatrix::with_tolerance(m, DensityTolerance::INTEGRATED)
    }
}

/// Density matrix of the pure qubit state `c_g|g⟩ + c_e|e⟩` (normalized here).
pub fn qubit_pure(c_g: Complex64, c_e: Complex64) -> DMatrix<Complex64> {
    let n = (c_g.norm_sqr() + c_e.norm_sqr()).sqrt();
    let v = [c_g / n, c_e / n];
    DMatrix::from_fn(2, 2, |i, j| v[i] * v[j].conj())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub dim: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Largest step as a fraction of the drive period `2π/Ω`.
    pub max_step: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            dim: 30,
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            max_step: 1.0 / 50.0,
        }
    }
}

impl OracleConfig {
    pub fn with_dim(mut self, dim: usize) -> Self {
        self.dim = dim;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 4 {
            return Err(invalid("dim", format!("must be >= 4, got {}", self.dim)));
        }
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return Err(invalid("rel_tol", "tolerances must be > 0"));
        }
        if !(self.max_step > 0.0) {
            return Err(invalid("max_step", "must be > 0"));
        }
        Ok(())
    }
}

/// Sparse operator as a list of `(row, col, value)` triplets.
#[derive(Debug, Clone, Default)]
struct SparseOp {
    entries: Vec<(usize, usize, Complex64)>,
}

impl SparseOp {
    fn adjoint(&self) -> Self {
        Self {
            entries: self.entries.iter().map(|&(i, j, v)| (j, i, v.conj())).collect(),
        }
    }

    /// `self * other`.
    fn compose(&self, other: &Self, n: usize) -> Self {
        let mut dense = vec![ZERO; n * n];
        for &(i, k, a) in &self.entries {
            for &(k2, j, b) in &other.entries {
                if k == k2 {
                    dense[i * n + j] += a * b;
                }
            }
        }
        Self::from_dense_rowmajor(&dense, n)
    }

    fn add_scaled(&mut self, other: &Self, c: f64, n: usize) {
        let mut dense = vec![ZERO; n * n];
        for &(i, j, v) in self.entries.iter() {
            dense[i * n + j] += v;
        }
        for &(i, j, v) in &other.entries {
            dense[i * n + j] += v * c;
        }
        *self = Self::from_dense_rowmajor(&dense, n);
    }

    fn from_dense_rowmajor(dense: &[Complex64], n: usize) -> Self {
        let mut entries = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let v = dense[i * n + j];
                if v != ZERO {
                    entries.push((i, j, v));
                }
            }
        }
        Self { entries }
    }

    /// `out += c · A ρ` (column-major `n×n` storage).
    fn left_add(&self, rho: &[Complex64], out: &mut [Complex64], c: Complex64, n: usize) {
        for &(i, k, v) in &self.entries {
            let cv = c * v;
            for j in 0..n {
                out[i + j * n] += cv * rho[k + j * n];
            }
        }
    }

    /// `out += c · ρ A`.
    fn right_add(&self, rho: &[Complex64], out: &mut [Complex64], c: Complex64, n: usize) {
        for &(k, j, v) in &self.entries {
            let cv = c * v;
            let (src, dst) = (k * n, j * n);
            for i in 0..n {
                out[dst + i] += cv * rho[src + i];
            }
        }
    }
}

/// Joint operator `Q ⊗ O` with `Q` a 2×2 qubit matrix given by its nonzero
/// entries and `O` an oscillator operator.
fn kron(qubit: &[(usize, usize, Complex64)], osc: &[(usize, usize, Complex64)], dim: usize) -> SparseOp {
    let mut entries = Vec::new();
    for &(qi, qj, qv) in qubit {
        for &(oi, oj, ov) in osc {
            entries.push((qi * dim + oi, qj * dim + oj, qv * ov));
        }
    }
    SparseOp { entries }
}

struct Generator<'a> {
    n: usize,
    coupling: &'a CouplingProfile,
    omega: f64,
    sz_a: SparseOp,
    sz_ad: SparseOp,
    /// `(rate, A, A†)` for each dissipator with nonzero rate.
    jumps: Vec<(f64, SparseOp, SparseOp)>,
    /// `Σ rate · A†A`.
    anti: SparseOp,
}

impl<'a> Generator<'a> {
    fn new(dim: usize, coupling: &'a CouplingProfile, params: &DecoherenceParams, omega: f64) -> Self {
        let n = 2 * dim;
        let a: Vec<_> = (1..dim).map(|k| (k - 1, k, Complex64::new((k as f64).sqrt(), 0.0))).collect();
        let ad: Vec<_> = a.iter().map(|&(i, j, v)| (j, i, v)).collect();
        let id_osc: Vec<_> = (0..dim).map(|k| (k, k, ONE)).collect();
        let id_q = [(GROUND, GROUND, ONE), (EXCITED, EXCITED, ONE)];
        let sz = [(GROUND, GROUND, -ONE), (EXCITED, EXCITED, ONE)];
        let sigma_minus = [(GROUND, EXCITED, ONE)];
        let sigma_plus = [(EXCITED, GROUND, ONE)];

        let (kappa, nm) = (params.kappa(), params.n_m());
        let (g1, g2, nq) = (params.gamma1(), params.gamma2(), params.n_q());
        let candidates = [
            (0.5 * kappa * (nm + 1.0), kron(&id_q, &a, dim)),
            (0.5 * kappa * nm, kron(&id_q, &ad, dim)),
            (0.5 * g1 * (nq + 1.0), kron(&sigma_minus, &id_osc, dim)),
            (0.5 * g1 * nq, kron(&sigma_plus, &id_osc, dim)),
            (0.5 * g2, kron(&sz, &id_osc, dim)),
        ];
        let mut jumps = Vec::new();
        let mut anti = SparseOp::default();
        for (rate, op) in candidates {
            if rate > 0.0 {
                let adj = op.adjoint();
                anti.add_scaled(&adj.compose(&op, n), rate, n);
                jumps.push((rate, op, adj));
            }
        }
        Self {
            n,
            coupling,
            omega,
            sz_a: kron(&sz, &a, dim),
            sz_ad: kron(&sz, &ad, dim),
            jumps,
            anti,
        }
    }

    fn rhs(&self, t: f64, rho: &[Complex64], out: &mut [Complex64], scratch: &mut [Complex64]) {
        let n = self.n;
        out.iter_mut().for_each(|v| *v = ZERO);
        let g = self.coupling.eval_unchecked(t);
        if g != 0.0 {
            let phase = Complex64::from_polar(g, -self.omega * t);
            // −i[H, ρ] with H = g(e^{−iΩt} σz a + e^{iΩt} σz a†).
            let c1 = -I * phase;
            let c2 = -I * phase.conj();
            self.sz_a.left_add(rho, out, c1, n);
            self.sz_a.right_add(rho, out, -c1, n);
            self.sz_ad.left_add(rho, out, c2, n);
            self.sz_ad.right_add(rho, out, -c2, n);
        }
        for (rate, a, adj) in &self.jumps {
            scratch.iter_mut().for_each(|v| *v = ZERO);
            a.left_add(rho, scratch, ONE, n);
            adj.right_add(scratch, out, Complex64::new(2.0 * rate, 0.0), n);
        }
        if !self.anti.entries.is_empty() {
            self.anti.left_add(rho, out, -ONE, n);
            self.anti.right_add(rho, out, -ONE, n);
        }
    }
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

const MAX_STEPS: usize = 5_000_000;

/// States at each of the increasing `times` (all ≥ 0) starting from `initial`
/// at time 0.
pub fn evolve_master_trajectory(
    initial: &JointState,
    g: &CouplingProfile,
    times: &[f64],
    params: &DecoherenceParams,
    omega: f64,
    cfg: &OracleConfig,
) -> Result<Vec<JointState>> {
    cfg.validate()?;
    if !(omega > 0.0) {
        return Err(invalid("omega", "must be > 0"));
    }
    if times.iter().any(|t| !(*t >= 0.0)) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("times", "must be nonnegative and nondecreasing"));
    }
    if let Some(&last) = times.last() {
        g.check_range(last)?;
    }
    let dim = initial.dim;
    let gen = Generator::new(dim, g, params, omega);
    let n = gen.n;
    let len = n * n;
    let h_max = cfg.max_step * 2.0 * PI / omega;

    let mut y: Vec<Complex64> = initial.matrix.as_slice().to_vec();
    let mut k: Vec<Vec<Complex64>> = vec![vec![ZERO; len]; 7];
    let mut stage = vec![ZERO; len];
    let mut y_new = vec![ZERO; len];
    let mut scratch = vec![ZERO; len];
    let mut t = 0.0;
    let mut h = h_max.min(1e-2 / (1.0 + params.kappa() + params.gamma()));
    let mut steps = 0usize;
    let mut out = Vec::with_capacity(times.len());
    let mut fsal = false;

    for &target in times {
        while t < target {
            if steps >= MAX_STEPS {
                return Err(Error::Integration {
                    t,
                    reason: "step limit exceeded".into(),
                });
            }
            let step = h.min(h_max).min(target - t);
            let last = step >= target - t;
            if !fsal {
                gen.rhs(t, &y, &mut k[0], &mut scratch);
            }
            for s in 1..7 {
                for idx in 0..len {
                    let mut acc = y[idx];
                    for (j, kj) in k.iter().enumerate().take(s) {
                        let a = A[s][j];
                        if a != 0.0 {
                            acc += kj[idx] * (step * a);
                        }
                    }
                    stage[idx] = acc;
                }
                gen.rhs(t + C[s] * step, &stage, &mut k[s], &mut scratch);
                if s == 6 {
                    y_new.copy_from_slice(&stage);
                }
            }
            let mut err2 = 0.0;
            for idx in 0..len {
                let mut e = ZERO;
                for j in 0..7 {
                    let d = B5[j] - B4[j];
                    if d != 0.0 {
                        e += k[j][idx] * (step * d);
                    }
                }
                let sc = cfg.abs_tol + cfg.rel_tol * y[idx].norm().max(y_new[idx].norm());
                err2 += (e.norm() / sc).powi(2);
            }
            let err = (err2 / len as f64).sqrt();
            if !err.is_finite() {
                return Err(Error::Integration {
                    t,
                    reason: "non-finite error estimate".into(),
                });
            }
            if err <= 1.0 {
                t = if last { target } else { t + step };
                std::mem::swap(&mut y, &mut y_new);
                k.swap(0, 6);
                fsal = true;
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if !last || step >= h {
                    h = step * factor;
                }
            } else {
                // k[0] still holds the rhs at (t, y).
                fsal = true;
                h = step * (0.9 * err.powf(-0.2)).max(0.2);
                if h < 1e-14 * (1.0 + t) {
                    return Err(Error::Integration {
                        t,
                        reason: "step size underflow".into(),
                    });
                }
            }
            steps += 1;
        }
        let matrix = DMatrix::from_column_slice(n, n, &y);
        out.push(finish(dim, matrix, t)?);
    }
    Ok(out)
}

fn finish(dim: usize, matrix: DMatrix<Complex64>, t: f64) -> Result<JointState> {
    let matrix = hermitian_part(&matrix);
    let tr = matrix.trace();
    if (tr - 1.0).norm() > 1e-6 {
        return Err(Error::Integration {
            t,
            reason: format!("trace drifted to {tr}"),
        });
    }
    let state = JointState { dim, matrix };
    let leak = state.top_population(3);
    if leak > 1e-6 {
        return Err(Error::Truncation {
            dim,
            reason: format!("population {leak:e} in the top 3 Fock levels at t = {t}"),
        });
    }
    Ok(state)
}

/// `ρ(t)` under the master equation.
pub fn evolve_master(
    initial: &JointState,
    g: &CouplingProfile,
    t: f64,
    params: &DecoherenceParams,
    omega: f64,
    cfg: &OracleConfig,
) -> Result<JointState> {
    Ok(evolve_master_trajectory(initial, g, &[t], params, omega, cfg)?.remove(0))
}

/// `(⟨σx⟩, ⟨σy⟩)` of the joint state.
pub fn pauli_expectations(state: &JointState) -> (f64, f64) {
    // P = Σ_n ⟨e n|ρ|g n⟩; ⟨σx⟩ = 2 Re P, ⟨σy⟩ = −2 Im P.
    let d = state.dim;
    let p: Complex64 = (0..d).map(|k| state.matrix[(EXCITED * d + k, GROUND * d + k)]).sum();
    (2.0 * p.re, -2.0 * p.im)
}

/// `⟨σx⟩ + i⟨σy⟩` predicted in closed form: `χ(ξ(g,t)) e^{−f(g,t)}`.
pub fn predicted_signal(
    state: &OscillatorState,
    g: &CouplingProfile,
    t: f64,
    params: &DecoherenceParams,
    omega: f64,
) -> Result<Complex64> {
    let r = Functionals::new(g, omega, params.kappa())?.evaluate(t, params)?;
    Ok(chi(state, PhasePoint::new(r.xi)?) * (-r.f).exp())
}

/// Conditions the oscillator on the qubit outcome `(|g⟩ ± e^{iφ}|e⟩)/√2`.
/// Returns the normalized oscillator state and the outcome probability.
pub fn postselect_qubit(
    state: &JointState,
    varphi: f64,
    parity: Parity,
) -> Result<(NumericDensityMatrix, f64)> {
    let s = parity.sign();
    let phase = Complex64::from_polar(s, varphi);
    // ⟨φ±|ρ|φ±⟩ = ½[ρ_gg + ρ_ee ± e^{−iφ} ρ_eg ± e^{iφ} ρ_ge].
    let m = (state.block(GROUND, GROUND)
        + state.block(EXCITED, EXCITED)
        + state.block(EXCITED, GROUND) * phase.conj()
        + state.block(GROUND, EXCITED) * phase)
        * Complex64::new(0.5, 0.0);
    let p = m.trace().re;
    if !(p >= 1e-10) {
        return Err(Error::NullOutcome { probability: p });
    }
    let rho = NumericDensityMatrix::with_tolerance(m / Complex64::new(p, 0.0), DensityTolerance::INTEGRATED)?;
    Ok((rho, p.min(1.0)))
}
