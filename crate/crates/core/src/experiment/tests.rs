use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn small(mut s: Setup, n: usize) -> Setup {
    s.dims = ModeDims::new(n, n).unwrap();
    s
}

fn ideal_law(s: &Setup, t: f64) -> f64 {
    let p = &s.params;
    0.5 * (1.0 + (p.delta * t + PI * p.delta / (2.0 * p.omega_rabi)).cos())
}

fn wrapped(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}

#[test]
fn beat_law_over_hundred_delays() {
    let s = Setup::idealized();
    for k in 0..100 {
        let t = 20e-6 + 80e-6 * k as f64 / 99.0;
        let r = run_ideal(t, &s).unwrap();
        assert!((r.p_e - ideal_law(&s, t)).abs() < 1e-6, "T = {t}: {} vs {}", r.p_e, ideal_law(&s, t));
        assert!((r.source_g - 1.0).abs() < 1e-9);
    }
}

#[test]
fn two_mode_state_after_source() {
    let s = Setup::idealized();
    let (psi, _) = source_output(&s).unwrap();
    let (p01, p10, phi) = two_mode_phase(&psi).unwrap();
    assert!((p01 - 0.5).abs() < 1e-9 && (p10 - 0.5).abs() < 1e-9);
    let p = &s.params;
    let expected = PI / 2.0 + PI * p.delta / p.omega_rabi;
    assert!(wrapped(phi - expected).abs() < 1e-6, "{phi} vs {expected}");
    assert!(psi.excited_population() < 1e-9);
}

#[test]
fn extremes_of_the_beat() {
    let s = Setup::idealized();
    let p = &s.params;
    let phase = PI * p.delta / (2.0 * p.omega_rabi);
    let t_min = s.min_delay().unwrap();
    for (target, want) in [(0.0, 1.0), (PI, 0.0)] {
        let k = ((p.delta * t_min + phase - target) / (2.0 * PI)).ceil();
        let t = (2.0 * PI * k + target - phase) / p.delta;
        assert!(t >= t_min);
        let r = run_ideal(t, &s).unwrap();
        assert!((r.p_e - want).abs() < 1e-6, "target {target}: {}", r.p_e);
    }
}

#[test]
fn delay_shorter_than_source_is_rejected() {
    let s = Setup::idealized();
    let t = 0.5 * s.min_delay().unwrap();
    assert!(matches!(run_ideal(t, &s), Err(Error::Domain(_))));
    assert!(matches!(run_master(t, &small(s, 2)), Err(Error::Domain(_))));
}

#[test]
fn excitation_number_is_conserved() {
    for s in [Setup::idealized(), Setup { propagator: PropagatorConfig::default(), ..Setup::full_model() }] {
        let source = s.source_plan().unwrap();
        let mut psi = product_state(Atom::E, 0, 0, s.dims).unwrap();
        for seg in &source.segments {
            psi = evolve_pure(&psi, seg, seg.t_start, seg.t_end, &s).unwrap();
            assert!((excitation_number(&psi) - 1.0).abs() < 1e-9);
        }
        for t in [70e-6, 87.3e-6, 200e-6] {
            let r = run_ideal(t, &s).unwrap();
            assert!((excitation_number(&r.state) - 1.0).abs() < 1e-8, "{}", excitation_number(&r.state));
        }
    }
}

#[test]
fn energy_offset_changes_nothing_observable() {
    let s = Setup::idealized();
    let mut shifted = s;
    shifted.propagator.energy_offset = 2.0 * PI * 300e3;
    for t in [25e-6, 61e-6] {
        let a = run_ideal(t, &s).unwrap();
        let b = run_ideal(t, &shifted).unwrap();
        assert!((a.p_e - b.p_e).abs() < 1e-7);
        let (x, y) = (two_mode_phase(&a.state), two_mode_phase(&b.state));
        assert_eq!(x.is_ok(), y.is_ok());
    }
    let (a, _) = source_output(&s).unwrap();
    let (b, _) = source_output(&shifted).unwrap();
    let (pa, pb) = (two_mode_phase(&a).unwrap(), two_mode_phase(&b).unwrap());
    assert!(wrapped(pa.2 - pb.2).abs() < 1e-6);
}

/// Overlap of the source's two-mode output with the entangled target whose
/// phase follows the actual M_b pulse length.
fn target_fidelity(s: &Setup) -> f64 {
    let (psi, _) = source_output(s).unwrap();
    let plan = s.source_plan().unwrap();
    let pulse_b = plan
        .segments
        .iter()
        .find(|g| matches!(g.kind, SegmentKind::Pulse { mode: Mode::B, .. }))
        .unwrap();
    let phi = PI / 2.0 + s.params.delta * pulse_b.duration();
    let d = s.dims;
    let amp = |na, nb| psi.amplitudes()[basis_index(Atom::G, na, nb, d).unwrap()];
    let overlap = (C64::from_polar(1.0, -phi) * amp(0, 1) + amp(1, 0)) / 2f64.sqrt();
    overlap.norm_sqr()
}

#[test]
fn profile_swap_preserves_the_entangled_state() {
    let constant = Setup::idealized();
    let mut gaussian = constant;
    gaussian.plan.profile = ProfileKind::Gaussian;
    let (fc, fg) = (target_fidelity(&constant), target_fidelity(&gaussian));
    assert!((fc - 1.0).abs() < 1e-9);
    assert!((fc - fg).abs() < 1e-2, "constant {fc}, gaussian {fg}");
}

#[test]
fn closed_master_equation_matches_pure_pipeline() {
    let mut s = small(Setup::idealized(), 3);
    s.params.kappa_a = 0.0;
    s.params.kappa_b = 0.0;
    s.params.n_bar_a = 0.0;
    s.params.n_bar_b = 0.0;
    s.params.n_bar_erased = 0.0;
    for t in [22e-6, 47.5e-6, 140e-6] {
        let m = run_master(t, &s).unwrap();
        let i = run_ideal(t, &s).unwrap();
        assert!((m.p_e - i.p_e).abs() < 1e-7, "T = {t}: {} vs {}", m.p_e, i.p_e);
        assert!((m.source_g - i.source_g).abs() < 1e-7);
    }
}

#[test]
fn scan_agrees_with_direct_runs() {
    let s = small(Setup::full_model(), 3);
    let times = [150e-6, 70e-6, 95.5e-6, 70e-6];
    let scan = master_scan(&times, &s, true).unwrap();
    for (b, &t) in scan.iter().zip(&times) {
        let m = run_master(t, &s).unwrap();
        assert_eq!(b.t, t);
        assert!((b.pe_given_g - m.p_e).abs() < 1e-8, "T = {t}: {} vs {}", b.pe_given_g, m.p_e);
        assert!((b.source_g - m.source_g).abs() < 1e-10);
        assert!((0.0..=1.0).contains(&b.pe_given_e));
    }
}

#[test]
fn scan_without_source_matches_thermal_relaxation() {
    let s = small(Setup::full_model(), 3);
    let t = 400e-6;
    let b = master_scan(&[t], &s, false).unwrap()[0];
    let n = s.params.n_bar_erased;
    let modes = thermal_modes(n, n, s.dims).unwrap().with_atom(Atom::G).unwrap();
    let rho = crate::dynamics::free_evolve(&modes, t, 0.0, &s.params, &s.dissipation()).unwrap();
    let rho = run_plan_mixed(rho, &s.probe_plan(t).unwrap(), f64::INFINITY, &s).unwrap();
    assert!((b.pe_given_g - rho.excited_population().unwrap()).abs() < 1e-8);
    assert_eq!(b.source_g, 1.0);
}

fn local_contrast(s: &Setup, t0: f64) -> f64 {
    let period = 2.0 * PI / s.params.delta;
    let times: Vec<f64> = (0..24).map(|k| t0 + period * k as f64 / 24.0).collect();
    let p: Vec<f64> = master_scan(&times, s, true).unwrap().iter().map(|b| b.pe_given_g).collect();
    p.iter().cloned().fold(f64::MIN, f64::max) - p.iter().cloned().fold(f64::MAX, f64::min)
}

#[test]
fn beat_contrast_decays() {
    let s = small(Setup::full_model(), 3);
    let early = local_contrast(&s, 70e-6);
    let late = local_contrast(&s, 600e-6);
    assert!(late < early, "early {early}, late {late}");
    assert!(early > 0.3);
}

#[test]
fn thermal_asymptote() {
    let s = Setup::full_model();
    let pe = steady_state_pe(&s).unwrap();
    assert!((0.23..=0.37).contains(&pe), "{pe}");

    let mut cold = small(s, 3);
    cold.params.n_bar_a = 0.0;
    cold.params.n_bar_b = 0.0;
    assert!(steady_state_pe(&cold).unwrap().abs() < 1e-9);

    let mut last = 0.0;
    for scale in [0.25, 0.5, 1.0] {
        let mut hot = small(s, 5);
        hot.params.n_bar_a *= scale;
        hot.params.n_bar_b *= scale;
        let pe = steady_state_pe(&hot).unwrap();
        assert!(pe > last, "scale {scale}: {pe} after {last}");
        last = pe;
    }
}

#[test]
fn mixed_states_stay_physical() {
    let s = small(Setup::full_model(), 3);
    let m = run_master(80e-6, &s).unwrap();
    m.rho.validate(1e-10, 1e-7, 1e-8).unwrap();
    m.source_readout.validate(1e-10, 1e-7, 1e-8).unwrap();
}

#[test]
fn calibration_reproduces_default_phases() {
    let s = Setup::idealized();
    let c = calibrate_coupling_phases(&s).unwrap();
    assert!(wrapped(c.theta_a - s.params.coupling_phase_a).abs() < 1e-6);
    assert!(wrapped(c.theta_b - s.params.coupling_phase_b).abs() < 1e-6);
}

#[test]
fn detector_calibration_formula() {
    let mut s = small(Setup::idealized(), 2);
    s.params.n_bar_erased = 0.0;
    let c = calibrate_p_error(&s, 0.86).unwrap();
    // Ideal pulses leave the source in g for sure, so all the error sits in
    // the detector, up to relaxation during the transit.
    assert!(c.source_g > 0.9 && c.source_g <= 1.0);
    let read = c.source_g * (1.0 - c.p_error) + (1.0 - c.source_g) * c.p_error;
    assert!((read - 0.86).abs() < 1e-12);
    assert!(calibrate_p_error(&s, 0.999_999).is_err());
    assert!(calibrate_p_error(&s, 0.3).is_err());
}

#[test]
fn phase_gate_truth_table() {
    let s = Setup::idealized();
    let u = gate_matrix(PI, &s).unwrap();
    assert!(gate_fidelity(&u, &ideal_gate(PI)) > 0.999);
    let (one, zero) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
    let a = run_phase_gate(0, [zero, one], PI, &s).unwrap();
    let b = run_phase_gate(1, [zero, one], PI, &s).unwrap();
    let d = s.dims;
    let amp01 = a.state.amplitudes()[basis_index(Atom::G, 0, 1, d).unwrap()];
    let amp11 = b.state.amplitudes()[basis_index(Atom::G, 1, 1, d).unwrap()];
    assert!(amp01.norm_sqr() > 0.999);
    assert!(wrapped((amp11 / amp01).arg() - PI).abs() < 1e-3);

    let id = gate_matrix(0.0, &s).unwrap();
    assert!(gate_fidelity(&id, &ideal_gate(0.0)) > 1.0 - 1e-6);
    assert!(run_phase_gate(2, [one, zero], PI, &s).is_err());
}

fn fake_probs(points: &[ScanPoint]) -> Vec<BranchProbabilities> {
    points
        .iter()
        .map(|p| BranchProbabilities {
            t: p.t,
            source_g: 0.9,
            pe_given_g: 0.5 + 0.4 * (8e5 * p.t).cos(),
            pe_given_e: 0.3,
        })
        .collect()
}

#[test]
fn monte_carlo_is_deterministic_and_bounded() {
    let points = scan_grid(20e-6, 40e-6, 2e-6, 0).unwrap();
    let probs = fake_probs(&points);
    let d = DetectorModel::default();
    let m = SampleModel::default();
    let a = sample_dataset(&points, &probs, 500, &d, &m, 7, true).unwrap();
    let b = sample_dataset(&points, &probs, 500, &d, &m, 7, true).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    let c = sample_dataset(&points, &probs, 500, &d, &m, 8, true).unwrap();
    assert_ne!(a.to_csv(), c.to_csv());
    for p in &a.points {
        assert!(p.n_selected <= 500 && p.n_e <= p.n_selected);
    }
    assert!(sample_dataset(&points, &probs, 0, &d, &m, 7, true).is_err());
    assert!(sample_dataset(&points, &probs[1..], 10, &d, &m, 7, true).is_err());
}

#[test]
fn perfect_detector_converges_to_probabilities() {
    let points = scan_grid(20e-6, 60e-6, 2e-6, 0).unwrap();
    let probs = fake_probs(&points);
    let data = sample_dataset(&points, &probs, 200_000, &DetectorModel::perfect(), &SampleModel::default(), 3, true)
        .unwrap();
    let inside = data
        .points
        .iter()
        .zip(&probs)
        .filter(|(d, b)| (d.p_e - b.pe_given_g).abs() < 3.0 * d.stderr)
        .count();
    assert!(inside as f64 >= 0.95 * points.len() as f64, "{inside}/{}", points.len());
}

#[test]
fn selection_rate_matches_occupancy_model() {
    let points = scan_grid(20e-6, 20e-6, 1e-6, 0).unwrap();
    let probs = fake_probs(&points);
    let m = SampleModel::default();
    let d = DetectorModel { p_error: 0.1, p_miss: 0.13 };
    let n = 400_000;
    let data = sample_dataset(&points, &probs, n, &d, &m, 11, true).unwrap();
    let single = m.single_atom_probability();
    let read_g = 0.9 * 0.9 + 0.1 * 0.1;
    let expected = (single * 0.87).powi(2) * read_g;
    let rate = data.points[0].n_selected as f64 / n as f64;
    let sd = (expected * (1.0 - expected) / n as f64).sqrt();
    assert!((rate - expected).abs() < 5.0 * sd, "{rate} vs {expected}");
}

#[test]
fn monte_carlo_is_unbiased_over_seeds() {
    let points = scan_grid(30e-6, 50e-6, 5e-6, 0).unwrap();
    let probs = fake_probs(&points);
    let d = DetectorModel::default();
    let m = SampleModel::default();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut mean = vec![0.0; points.len()];
    for _ in 0..50 {
        let data = sample_dataset(&points, &probs, 2000, &d, &m, rng.random(), true).unwrap();
        for (acc, p) in mean.iter_mut().zip(&data.points) {
            *acc += p.p_e / 50.0;
        }
    }
    // Oracle: selected sequences read the source as g, mixing the two
    // conditional branches and then flipping the probe readout.
    let (pg, eps) = (0.9, d.p_error);
    let w_g = pg * (1.0 - eps) / (pg * (1.0 - eps) + (1.0 - pg) * eps);
    for (m, b) in mean.iter().zip(&probs) {
        let p = w_g * b.pe_given_g + (1.0 - w_g) * b.pe_given_e;
        let expected = p * (1.0 - eps) + (1.0 - p) * eps;
        assert!((m - expected).abs() < 1e-2, "{m} vs {expected}");
    }
}
