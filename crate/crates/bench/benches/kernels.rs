use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use dressedsim::control::rotating_frame_hamiltonian;
use dressedsim::ensemble::{fidelity_for_realizations, sobol_gaussian_pairs, stroboscopic_grid};
use dressedsim::floquet::{gap_for, gap_variance};
use dressedsim::gates::gate1q_infidelity;
use dressedsim::linalg::{annihilation, expm, kron, pauli};
use dressedsim::propagation::{period_table, su2_period_table};
use dressedsim::{
    CoherenceOptions, ControlScheme, FloquetConfig, NoiseModel, NoiseRealization, PauliAxis, SchemeVariant,
    SobolConfig, C64,
};

fn linalg(c: &mut Criterion) {
    // spin–spin–oscillator generator of the gate benchmarks
    let a = annihilation(30);
    let x = pauli(PauliAxis::X);
    let h = &kron(&kron(&x, &x), &(&a + &a.dag())) + &kron(&kron(&pauli(PauliAxis::Z), &x), &a.dag().scale_re(0.3));
    let gen = h.scale(C64::new(0.0, -0.05));
    c.bench_function("expm_120", |b| b.iter(|| expm(black_box(&gen)).unwrap()));
}

fn propagation(c: &mut Criterion) {
    let scheme = ControlScheme::circular(22.0, 2.35).unwrap();
    let noise = NoiseRealization::new(0.7, 3e-3);
    c.bench_function("su2_period_table_64", |b| {
        b.iter(|| su2_period_table(|t| dressedsim::control::noisy_field(&scheme, noise, t), scheme.period(), 64, 8))
    });
    let h = rotating_frame_hamiltonian(&scheme, noise);
    c.bench_function("operator_period_table_64", |b| b.iter(|| period_table(black_box(&h), 64, Some(512)).unwrap()));
    c.bench_function("gate1q_ratio_10", |b| {
        b.iter(|| gate1q_infidelity(black_box(10.0), 2, SchemeVariant::DoubleDrive).unwrap())
    });
}

fn floquet(c: &mut Criterion) {
    let scheme = ControlScheme::circular(22.0, 2.35).unwrap();
    let cfg = FloquetConfig::new(4, 2).unwrap();
    c.bench_function("floquet_gap", |b| {
        b.iter(|| gap_for(&scheme, black_box(NoiseRealization::new(0.5, 1e-3)), cfg).unwrap())
    });
    let noise = NoiseModel::from_t2_star(1.0, 5e-3, 2048, 1).unwrap();
    c.bench_function("floquet_variance_gh21", |b| b.iter(|| gap_variance(&scheme, &noise, 21).unwrap()));
}

fn ensemble(c: &mut Criterion) {
    let scheme = ControlScheme::circular(22.0, 2.35).unwrap();
    let noise = NoiseModel::from_t2_star(1.0, 5e-3, 256, 1).unwrap();
    let realizations = sobol_gaussian_pairs(SobolConfig::from_noise(&noise), &noise).unwrap();
    let opts = CoherenceOptions::default();
    let times = stroboscopic_grid(scheme.period(), 400.0, opts.phases_per_period, opts.max_periods);
    let mut group = c.benchmark_group("fidelity");
    group.sample_size(10);
    group.bench_function("circular_256", |b| {
        b.iter(|| fidelity_for_realizations(&scheme, &realizations, &times, &opts).unwrap())
    });
    group.finish();
}

criterion_group!(benches, linalg, propagation, floquet, ensemble);
criterion_main!(benches);
