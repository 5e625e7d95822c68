//! Qubit-probe reconstruction of a harmonic oscillator's characteristic
//! function under Markovian decoherence.
//!
//! A qubit coupled to the oscillator through `g(t) σz (a + a†)` records
//! `⟨σx⟩ + i⟨σy⟩ = χ(ξ) e^{−f}`: the characteristic function at a point `ξ`
//! set by the coupling profile, damped by a state-independent factor.
//! [`functionals`] computes `ξ` and `f`, [`reconstruction`] runs the
//! measurement protocol, [`moments`] reads quadrature moments off small-`|ξ|`
//! data, [`catprep`] follows the joint state for post-selected cat
//! preparation, and [`lindblad`] is a brute-force master-equation oracle.
//!
//! Units: rates in rad/µs, times in µs. `D(β) = exp(βa† − β*a)`.

pub mod catprep;
pub mod error;
pub mod functionals;
pub mod lindblad;
pub mod model;
pub mod moments;
pub mod quadrature;
pub mod reconstruction;
pub mod states;

pub use catprep::{chi_prepared_cat, Coherence, MatricialChi, PreparedCat};
pub use error::{Error, Result};
pub use functionals::{
    damping_f, f_harmonic_approx, run_budget, xi_harmonic_closed, FunctionalResult, Functionals,
};
pub use lindblad::{
    evolve_master, pauli_expectations, postselect_qubit, predicted_signal, JointState, OracleConfig,
};
pub use model::{derive_rates, period_time, CouplingProfile, DecoherenceParams, PhasePoint};
pub use moments::{fit_moments, quadrature_moment_analytic, MomentEstimate, MomentFitConfig, MomentFitResult};
pub use reconstruction::{
    correct_decoherence, plan_point, scan_grid, simulate_runs, Engine, EngineKind, FMode, MeasurementRecord,
    PlanConfig, ProtocolPoint, ScanConfig, ScanOutput, ShotPolicy,
};
pub use states::{chi, chi_analytic, chi_numeric, NumericDensityMatrix, OscillatorState, Parity};
