use std::f64::consts::PI;

use cqed_cli::config::{parse_windows, Config};
use cqed_core::{Error, Method, ProfileKind, Setup};
use proptest::prelude::*;

#[test]
fn defaults_round_trip() {
    let c = Config::default();
    let back = Config::parse(&c.serialize()).unwrap();
    assert_eq!(back, c);
    assert_eq!(back.serialize(), c.serialize());
}

#[test]
fn defaults_are_the_reference_parameters() {
    let c = Config::default();
    assert!((c.omega_rabi_khz - 47.0).abs() < 1e-9);
    assert!((c.delta_khz - 128.3).abs() < 1e-9);
    assert!((c.t_r_a_us - 1000.0).abs() < 1e-9);
    assert!((c.t_r_b_us - 900.0).abs() < 1e-9);
    assert_eq!((c.n_bar_a, c.n_bar_b, c.n_bar_erased), (0.8, 1.0, 0.1));
    assert!((c.freeze_detuning_khz + 278.0).abs() < 1e-9);
    assert_eq!(c.stark_coeff_khz, -255.0);
    assert_eq!(c.setup(false).unwrap(), Setup::full_model());
    assert_eq!(c.setup(true).unwrap(), Setup::idealized());
}

#[test]
fn units_are_converted() {
    let c = Config::parse("omega_rabi_khz = 50\ndelta_khz = 100 # beat\nt_r_a_us = 500\nwaist_mm = 5\n").unwrap();
    let p = c.params();
    assert!((p.omega_rabi - 2.0 * PI * 50e3).abs() < 1e-6);
    assert!((p.delta - 2.0 * PI * 100e3).abs() < 1e-6);
    assert!((p.kappa_a - 2000.0).abs() < 1e-9);
    assert!((p.waist - 5e-3).abs() < 1e-15);
    let s = Config::parse("freeze_detuning_khz = -300\nramp_time_us = 1.5\ndt_max_us = 0.005").unwrap().setup(true).unwrap();
    assert!((s.plan.freeze_detuning + 2.0 * PI * 300e3).abs() < 1e-6);
    assert!((s.plan.ramp_time - 1.5e-6).abs() < 1e-18);
    assert!((s.propagator.dt_max - 5e-9).abs() < 1e-20);
}

#[test]
fn profile_and_isolation_override_the_scenario() {
    let c = Config::parse("profile = gaussian\nisolation = true\n").unwrap();
    let s = c.setup(true).unwrap();
    assert_eq!(s.plan.profile, ProfileKind::Gaussian);
    assert!(s.propagator.idealized_isolation && s.plan.isolation);
    let c = Config::parse("isolation = auto\n").unwrap();
    assert_eq!(c.isolation, None);
    assert!(!c.setup(false).unwrap().propagator.idealized_isolation);
}

#[test]
fn unknown_keys_and_bad_values_are_rejected() {
    for text in [
        "omega = 47",
        "delta_khz 128.3",
        "n_bar_a = lots",
        "method = euler",
        "profile = square",
        "isolation = maybe",
        "windows = 10..5",
        "n_bar_a = -1",
        "p_error = 1.5",
        "n_max_a = 0",
        "t_step_us = 0",
        "n_sequences = 0",
    ] {
        let r = Config::parse(text);
        assert!(matches!(r, Err(Error::Parse(_)) | Err(Error::Domain(_))), "{text:?} gave {r:?}");
    }
    let err = Config::parse("# fine\n\nbogus = 1\n").unwrap_err().to_string();
    assert!(err.contains("line 3") && err.contains("bogus"), "{err}");
}

#[test]
fn window_lists() {
    assert_eq!(parse_windows("70..110, 230..270").unwrap(), vec![(70.0, 110.0), (230.0, 270.0)]);
    assert!(parse_windows("").is_err());
    assert!(parse_windows("70-110").is_err());
}

proptest! {
    #[test]
    fn arbitrary_configs_round_trip(
        omega in 1.0f64..200.0,
        delta in 1.0f64..500.0,
        n_bar in 0.0f64..3.0,
        phase in -10.0f64..10.0,
        p_error in 0.0f64..0.5,
        n_max in 1usize..9,
        seed in any::<u64>(),
        windows in prop::collection::vec((0.0f64..1e3, 0.0f64..100.0), 1..5),
        adaptive in any::<bool>(),
        gaussian in prop::option::of(any::<bool>()),
        isolation in prop::option::of(any::<bool>()),
    ) {
        let c = Config {
            omega_rabi_khz: omega,
            delta_khz: delta,
            n_bar_a: n_bar,
            coupling_phase_b: phase,
            p_error,
            n_max_b: n_max,
            seed,
            windows: windows.iter().map(|&(a, w)| (a, a + w)).collect(),
            method: if adaptive { Method::Adaptive } else { Method::Rk4 },
            profile: gaussian.map(|g| if g { ProfileKind::Gaussian } else { ProfileKind::Constant }),
            isolation,
            ..Config::default()
        };
        let back = Config::parse(&c.serialize()).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(Config::parse(&back.serialize()).unwrap(), back);
    }
}
