use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use cqed_bench::{beat_dataset, small_setup};
use cqed_core::dynamics::{propagate_lindblad, propagate_pure};
use cqed_core::experiment::{gate_matrix, master_scan, probe_effect, run_ideal};
use cqed_core::hilbert::{product_state, thermal_modes};
use cqed_core::{fit_beat, Atom, Setup};

fn pure(c: &mut Criterion) {
    let s = Setup::idealized();
    c.bench_function("run_ideal/constant", |b| b.iter(|| run_ideal(black_box(60e-6), &s).unwrap().p_e));

    let full = Setup::full_model();
    let plan = full.source_plan().unwrap();
    let seg = &plan.segments[0];
    let psi = product_state(Atom::E, 0, 0, full.dims).unwrap();
    c.bench_function("propagate_pure/gaussian_half_pulse", |b| {
        b.iter(|| propagate_pure(black_box(&psi), &seg.drive(), &full.params, &full.propagator).unwrap())
    });

    c.bench_function("gate_matrix/pi", |b| b.iter(|| gate_matrix(black_box(std::f64::consts::PI), &s).unwrap()));
}

fn mixed(c: &mut Criterion) {
    let mut g = c.benchmark_group("lindblad");
    g.sample_size(10);
    for n in [2, 4, 6] {
        let s = small_setup(n);
        let plan = s.source_plan().unwrap();
        let seg = &plan.segments[1];
        let rho = thermal_modes(0.1, 0.1, s.dims).unwrap().with_atom(Atom::E).unwrap();
        g.bench_function(format!("pi_pulse_b/n_max={n}"), |b| {
            b.iter(|| propagate_lindblad(black_box(&rho), &seg.drive(), &s.params, &s.dissipation(), &s.propagator).unwrap())
        });
    }
    let s = small_setup(3);
    g.bench_function("probe_effect/n_max=3", |b| b.iter(|| probe_effect(black_box(&s)).unwrap()));
    let times: Vec<f64> = (0..40).map(|k| 70e-6 + k as f64 * 1e-6).collect();
    g.bench_function("master_scan/40_delays/n_max=3", |b| b.iter(|| master_scan(black_box(&times), &s, true).unwrap()));
    g.finish();
}

fn fitting(c: &mut Criterion) {
    let delta = Setup::idealized().params.delta;
    let data = beat_dataset(delta);
    c.bench_function("fit_beat/four_windows", |b| b.iter(|| fit_beat(black_box(&data), delta).unwrap()));
}

criterion_group!(benches, pure, mixed, fitting);
criterion_main!(benches);
