//! Two-mode conditional phase gate: control = photon number of M_a, target =
//! photon-number qubit of M_b.

use nalgebra::{DVector, Matrix4};

use super::{run_plan_pure, Setup};
use crate::error::{domain, Error, Result};
use crate::hilbert::{basis_index, Atom, PureState, C64};
use crate::schedule::compile_phase_gate_plan;

/// Result of one gate application.
#[derive(Clone, Debug, PartialEq)]
pub struct GateRun {
    /// Atom-plus-modes state after the gate atom leaves.
    pub state: PureState,
    /// Time from injection to exit (s).
    pub duration: f64,
}

/// Send a gate atom (in g) through modes prepared in
/// `|control_n⟩_a ⊗ (target[0]|0⟩ + target[1]|1⟩)_b`.
pub fn run_phase_gate(control_n: usize, target: [C64; 2], gate_phase: f64, setup: &Setup) -> Result<GateRun> {
    setup.validate()?;
    if control_n > 1 {
        return domain(format!("control photon number must be 0 or 1, got {control_n}"));
    }
    let plan = compile_phase_gate_plan(&setup.params, &setup.plan_config(), gate_phase)?;
    let d = setup.dims;
    let mut v = DVector::zeros(d.total());
    v[basis_index(Atom::G, control_n, 0, d)?] = target[0];
    v[basis_index(Atom::G, control_n, 1, d)?] = target[1];
    let mut psi = PureState::from_amplitudes(d, v)?;
    psi.normalize()?;
    let state = run_plan_pure(psi, &plan, f64::INFINITY, setup)?;
    Ok(GateRun { state, duration: plan.end_time() - plan.injection_time })
}

/// Atom-g amplitudes on {|0_a0_b⟩, |0_a1_b⟩, |1_a0_b⟩, |1_a1_b⟩} with the
/// free M_b evolution over `duration` removed.
fn computational_amplitudes(psi: &PureState, duration: f64, delta: f64) -> Result<[C64; 4]> {
    let d = psi.dims();
    let mut out = [C64::new(0.0, 0.0); 4];
    for (k, (na, nb)) in [(0, 0), (0, 1), (1, 0), (1, 1)].into_iter().enumerate() {
        let free = C64::from_polar(1.0, -delta * nb as f64 * duration);
        out[k] = psi.amplitudes()[basis_index(Atom::G, na, nb, d)?] * free;
    }
    Ok(out)
}

/// Realized operation on the two-mode computational basis (columns are the
/// images of the basis states), in the frame of the free modes.
pub fn gate_matrix(gate_phase: f64, setup: &Setup) -> Result<Matrix4<C64>> {
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let mut u = Matrix4::zeros();
    for (k, (na, target)) in [(0, [one, zero]), (0, [zero, one]), (1, [one, zero]), (1, [zero, one])]
        .into_iter()
        .enumerate()
    {
        let run = run_phase_gate(na, target, gate_phase, setup)?;
        let amps = computational_amplitudes(&run.state, run.duration, setup.params.delta)?;
        for (r, a) in amps.into_iter().enumerate() {
            u[(r, k)] = a;
        }
    }
    if u.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("non-finite gate matrix".into()));
    }
    Ok(u)
}

/// diag(1, 1, 1, e^{iφ}).
pub fn ideal_gate(gate_phase: f64) -> Matrix4<C64> {
    let one = C64::new(1.0, 0.0);
    Matrix4::from_diagonal(&nalgebra::Vector4::new(one, one, one, C64::from_polar(1.0, gate_phase)))
}

/// |Tr(V†U)|²/16: 1 when U equals V up to a global phase.
pub fn gate_fidelity(u: &Matrix4<C64>, v: &Matrix4<C64>) -> f64 {
    (v.adjoint() * u).trace().norm_sqr() / 16.0
}
