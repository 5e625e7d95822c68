//! Shared fixtures for the benchmarks.

use std::f64::consts::PI;

use chiprobe_core::model::DecoherenceParams;

/// Drive frequency used by the benchmarks, rad/µs.
pub const OMEGA: f64 = 2.0 * PI * 100.0;

/// Rates of the Fock-state scan: κ = 2π·0.05, κΔ = 2π·1, Γ1 = Γ2 = 2π·0.4 (rad/µs).
pub fn scan_params() -> DecoherenceParams {
    DecoherenceParams::from_kappa_delta(2.0 * PI * 0.05, 2.0 * PI, 2.0 * PI * 0.4, 2.0 * PI * 0.4, 0.0)
        .expect("valid rates")
}

/// Same ratios at `Ω = 2π`, slow enough for the master-equation oracle.
pub fn oracle_params() -> DecoherenceParams {
    let w = 2.0 * PI;
    DecoherenceParams::from_kappa_delta(5e-4 * w, 0.01 * w, 0.004 * w, 0.004 * w, 0.0).expect("valid rates")
}
