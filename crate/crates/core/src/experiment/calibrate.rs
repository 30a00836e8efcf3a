//! Calibration runs for the coupling phases and the detector error.

use std::f64::consts::PI;

use super::{erased_initial_state, project_atom, run_plan_mixed, source_output, two_mode_phase, Setup};
use crate::error::{domain, Result};
use crate::hilbert::{basis_index, product_state, Atom};
use crate::schedule::SegmentKind;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CouplingCalibration {
    pub theta_a: f64,
    pub theta_b: f64,
}

fn wrap(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// Coupling phases for which the source π/2 pulse gives
/// `(|e,0_a⟩ + |g,1_a⟩)/√2` and the two-mode state after the M_b pulse is
/// `(e^{iφ}|0_a,1_b⟩ + |1_a,0_b⟩)/√2` with φ = π/2 + δ·τ_b (τ_b the M_b
/// pulse length).
pub fn calibrate_coupling_phases(setup: &Setup) -> Result<CouplingCalibration> {
    setup.validate()?;
    let source = setup.source_plan()?;
    let first = source.segments.first().ok_or_else(|| crate::Error::Domain("empty source plan".into()))?;
    let pulse_b = source
        .segments
        .iter()
        .find(|s| matches!(s.kind, SegmentKind::Pulse { mode: crate::hilbert::Mode::B, .. }))
        .ok_or_else(|| crate::Error::Domain("source plan has no M_b pulse".into()))?;

    let mut s = *setup;
    s.params.coupling_phase_a = 0.0;
    let d = s.dims;
    let psi = super::evolve_pure(&product_state(Atom::E, 0, 0, d)?, first, first.t_start, first.t_end, &s)?;
    let amp = |a, na, nb| psi.amplitudes()[basis_index(a, na, nb, d).unwrap()];
    let theta_a = wrap((amp(Atom::G, 1, 0) / amp(Atom::E, 0, 0)).arg());

    s.params.coupling_phase_a = theta_a;
    s.params.coupling_phase_b = 0.0;
    let (psi, _) = source_output(&s)?;
    let (_, _, phi0) = two_mode_phase(&psi)?;
    let target = PI / 2.0 + s.params.delta * pulse_b.duration();
    Ok(CouplingCalibration { theta_a, theta_b: wrap(phi0 - target) })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectorCalibration {
    /// Simulated probability that the source atom leaves in g.
    pub source_g: f64,
    /// Misread probability that maps `source_g` onto the target rate.
    pub p_error: f64,
}

/// Misread probability p with `P_g(1−p) + (1−P_g)p = target_g`, where P_g
/// is the master-equation g-probability of the source atom at exit.
pub fn calibrate_p_error(setup: &Setup, target_g: f64) -> Result<DetectorCalibration> {
    setup.validate()?;
    if !(0.5 < target_g && target_g <= 1.0) {
        return domain("target g-readout rate must lie in (0.5, 1]");
    }
    let source = setup.source_plan()?;
    let rho = run_plan_mixed(erased_initial_state(setup)?, &source, f64::INFINITY, setup)?;
    let (source_g, _) = project_atom(&rho, Atom::G)?;
    if source_g < target_g {
        return domain(format!(
            "simulated g-rate {source_g:.4} is already below the target {target_g:.4}"
        ));
    }
    Ok(DetectorCalibration { source_g, p_error: (source_g - target_g) / (2.0 * source_g - 1.0) })
}
