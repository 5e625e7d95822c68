use std::f64::consts::PI;
use std::hint::black_box;

use chiprobe_bench::{oracle_params, scan_params, OMEGA};
use chiprobe_core::functionals::damping_f;
use chiprobe_core::lindblad::{evolve_master, JointState, OracleConfig};
use chiprobe_core::model::{period_time, CouplingProfile};
use chiprobe_core::reconstruction::{scan_grid, square_grid, Engine, PlanConfig, ScanConfig, ShotPolicy};
use chiprobe_core::states::{to_density_matrix, OscillatorState};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn bench_damping_f(c: &mut Criterion) {
    let params = scan_params();
    let mut group = c.benchmark_group("damping_f");
    for n in [1u32, 4, 10] {
        let g = CouplingProfile::harmonic(0.0, 0.5, 0.3, OMEGA, params.kappa()).unwrap();
        let t = period_time(n, OMEGA);
        group.bench_with_input(BenchmarkId::from_parameter(n), &t, |b, &t| {
            b.iter(|| damping_f(black_box(&g), t, &params, OMEGA).unwrap())
        });
    }
    group.finish();
}

fn bench_evolve_master(c: &mut Criterion) {
    let omega = 2.0 * PI;
    let params = oracle_params();
    let g = CouplingProfile::harmonic(0.0, 0.5, PI / 2.0, omega, params.kappa()).unwrap();
    let mut group = c.benchmark_group("evolve_master");
    group.sample_size(10);
    for dim in [12usize, 24] {
        let rho = to_density_matrix(&OscillatorState::Fock { n: 2 }, dim).unwrap();
        let init = JointState::plus_product(&rho).unwrap();
        let cfg = OracleConfig::default().with_dim(dim);
        group.bench_with_input(BenchmarkId::new("two_periods", dim), &init, |b, init| {
            b.iter(|| evolve_master(init, &g, period_time(2, omega), &params, omega, &cfg).unwrap())
        });
    }
    group.finish();
}

fn bench_scan_grid(c: &mut Criterion) {
    let params = scan_params();
    let state = OscillatorState::Fock { n: 5 };
    let grid = square_grid(3.5, 21).unwrap();
    let mut group = c.benchmark_group("scan_grid");
    group.sample_size(10);
    for (name, shots) in [
        ("infinite", ShotPolicy::Infinite),
        ("budget_0.2", ShotPolicy::Budgeted { target_rel_error: 0.2 }),
    ] {
        let cfg = ScanConfig {
            plan: PlanConfig {
                shots,
                ..PlanConfig::default()
            },
            engine: Engine::Analytic,
            seed: 1,
        };
        group.bench_function(name, |b| b.iter(|| scan_grid(&state, &grid, &cfg, &params, OMEGA).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, bench_damping_f, bench_evolve_master, bench_scan_grid);
criterion_main!(benches);
