use std::f64::consts::PI;

use chiprobe_core::catprep::{chi_prepared_cat, MatricialChi};
use chiprobe_core::lindblad::{evolve_master_trajectory, JointState, OracleConfig, EXCITED};
use chiprobe_core::model::{period_time, CouplingProfile, DecoherenceParams, PhasePoint};
use chiprobe_core::reconstruction::{plan_point, scan_grid, Engine, PlanConfig, ScanConfig, ShotPolicy};
use chiprobe_core::states::{chi_analytic, displacement, to_density_matrix, OscillatorState, Parity};
use num_complex::Complex64;
use proptest::prelude::*;

const OMEGA: f64 = 2.0 * PI;

fn ratio_params() -> DecoherenceParams {
    DecoherenceParams::from_kappa_delta(5e-4 * OMEGA, 0.01 * OMEGA, 0.004 * OMEGA, 0.004 * OMEGA, 0.0).unwrap()
}

#[test]
fn corrected_estimator_is_unbiased() {
    let state = OscillatorState::Fock { n: 2 };
    let beta = PhasePoint::from_parts(0.9, -0.5).unwrap();
    let cfg = ScanConfig {
        plan: PlanConfig {
            shots: ShotPolicy::Fixed { shots: 400 },
            ..PlanConfig::default()
        },
        engine: Engine::Analytic,
        seed: 0,
    };
    let params = ratio_params();
    let mut sum = Complex64::new(0.0, 0.0);
    let mut stderr = 0.0;
    for seed in 0..1000 {
        let out = scan_grid(&state, &[beta], &ScanConfig { seed, ..cfg.clone() }, &params, OMEGA).unwrap();
        sum += out.records[0].chi_hat;
        stderr += out.records[0].stderr;
    }
    let mean = sum / 1000.0;
    let stderr = stderr / 1000.0;
    let exact = chi_analytic(&state, beta).unwrap();
    assert!((mean - exact).norm() < 4.0 * stderr / 1000f64.sqrt(), "{mean} vs {exact}");
}

#[test]
fn oscillator_thermalizes_in_oracle() {
    let (kappa, n_m) = (0.5, 0.4);
    let params = DecoherenceParams::new(kappa, 0.0, 0.0, n_m, 0.0).unwrap();
    let init = JointState::plus_product(&to_density_matrix(&OscillatorState::vacuum(), 20).unwrap()).unwrap();
    let times = [0.5, 2.0, 6.0, 14.0];
    let states = evolve_master_trajectory(
        &init,
        &CouplingProfile::zero(),
        &times,
        &params,
        OMEGA,
        &OracleConfig::default().with_dim(20),
    )
    .unwrap();
    for (t, s) in times.iter().zip(&states) {
        let osc = s.oscillator_marginal().unwrap();
        let n: f64 = (0..20).map(|k| k as f64 * osc.matrix()[(k, k)].re).sum();
        let expect = n_m * (1.0 - (-kappa * t).exp());
        assert!((n - expect).abs() < 1e-7, "t = {t}: {n} vs {expect}");
    }
}

#[test]
fn excited_component_tracks_oracle_over_time() {
    let kappa = 0.2;
    let params = DecoherenceParams::new(kappa, 0.3, 0.05, 0.5, 0.0).unwrap();
    let dim = 16;
    let init = JointState::plus_product(&to_density_matrix(&OscillatorState::vacuum(), dim).unwrap()).unwrap();
    let times = [0.3, 1.0, 2.2, 3.5, 5.0];
    let g = CouplingProfile::zero();
    let states =
        evolve_master_trajectory(&init, &g, &times, &params, OMEGA, &OracleConfig::default().with_dim(dim)).unwrap();
    let betas = [Complex64::new(0.4, 0.1), Complex64::new(-1.0, 0.7)];
    for (t, s) in times.iter().zip(&states) {
        let m = MatricialChi::new(OscillatorState::vacuum(), &g, *t, &params, OMEGA).unwrap();
        let block = s.block(EXCITED, EXCITED);
        for &b in &betas {
            let d = displacement(b, dim + 30);
            let mut oracle = Complex64::new(0.0, 0.0);
            for i in 0..dim {
                for j in 0..dim {
                    oracle += block[(i, j)] * d[(j, i)];
                }
            }
            let analytic = m.chi_e(b).unwrap();
            assert!((analytic - oracle).norm() < 1e-7, "t = {t}, beta = {b}: {analytic} vs {oracle}");
        }
    }
}

#[test]
fn heating_steepens_the_central_peak() {
    let kappa = 5e-4 * OMEGA;
    let params = ratio_params();
    let g = CouplingProfile::harmonic(0.0, 0.5, PI / 2.0, OMEGA, kappa).unwrap();
    let cat = chi_prepared_cat(period_time(4, OMEGA), &g, &params, OMEGA, PI / 2.0, Parity::Plus).unwrap();
    // Along the cat axis the central peak carries no cos modulation.
    let axis = cat.target_alpha() / cat.target_alpha().norm();
    for s in [0.3, 0.6, 0.9] {
        let b = PhasePoint::new(axis * s).unwrap();
        assert!(cat.eval(b).norm() < cat.ideal(b).norm());
    }
}

#[test]
fn identical_seeds_give_identical_records() {
    let cfg = ScanConfig {
        plan: PlanConfig {
            shots: ShotPolicy::Budgeted { target_rel_error: 0.3 },
            ..PlanConfig::default()
        },
        engine: Engine::Analytic,
        seed: 42,
    };
    let grid: Vec<_> = (0..30).map(|k| PhasePoint::from_parts(0.1 * k as f64 - 1.5, 0.05 * k as f64).unwrap()).collect();
    let state = OscillatorState::Coherent { alpha: Complex64::new(0.3, -0.2) };
    let a = scan_grid(&state, &grid, &cfg, &ratio_params(), OMEGA).unwrap();
    let b = scan_grid(&state, &grid, &cfg, &ratio_params(), OMEGA).unwrap();
    assert_eq!(a, b);
    // A point's draw does not depend on the rest of the grid.
    let single = scan_grid(&state, &grid[..5], &cfg, &ratio_params(), OMEGA).unwrap();
    assert_eq!(single.records[..], a.records[..5]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prepared_cat_is_hermitian(re in -3.0f64..3.0, im in -3.0f64..3.0, varphi in -PI..PI, plus in any::<bool>()) {
        let params = DecoherenceParams::new(0.02, 0.05, 0.03, 1.0, 0.0).unwrap();
        let g = CouplingProfile::harmonic(0.1, 0.4, 0.3, OMEGA, 0.02).unwrap();
        let parity = if plus { Parity::Plus } else { Parity::Minus };
        let cat = match chi_prepared_cat(period_time(3, OMEGA), &g, &params, OMEGA, varphi, parity) {
            Ok(c) => c,
            Err(_) => return Ok(()),
        };
        let b = Complex64::new(re, im);
        let x = cat.eval(PhasePoint::new(b).unwrap());
        let y = cat.eval(PhasePoint::new(-b).unwrap());
        prop_assert!((x - y.conj()).norm() < 1e-12);
    }

    #[test]
    fn population_is_conserved(k in 0.0f64..0.1, g1 in 0.0f64..1.0, n_m in 0.0f64..2.0, n in 1u32..5, r in 0.0f64..0.5) {
        let params = DecoherenceParams::new(k, g1, 0.1, n_m, 0.0).unwrap();
        let g = CouplingProfile::harmonic(0.0, r, 0.4, OMEGA, k).unwrap();
        let m = MatricialChi::new(OscillatorState::Fock { n: 1 }, &g, period_time(n, OMEGA), &params, OMEGA).unwrap();
        let zero = Complex64::new(0.0, 0.0);
        prop_assert!((m.chi_e(zero).unwrap() + m.chi_g(zero).unwrap() - 1.0).norm() < 1e-8);
    }

    #[test]
    fn plan_matches_annulus(re in -4.9f64..4.9, im in -4.9f64..4.9) {
        let b = Complex64::new(re, im);
        prop_assume!(b.norm() < 4.99);
        let p = plan_point(PhasePoint::new(b).unwrap(), &PlanConfig::default(), &ratio_params(), OMEGA).unwrap();
        prop_assert!(p.r <= 0.5);
        prop_assert!((p.t - period_time(p.n, OMEGA)).abs() == 0.0);
    }
}
