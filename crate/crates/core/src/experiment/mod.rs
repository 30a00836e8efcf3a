//! Complete sequences: erased cavity, source atom, delay T, probe atom,
//! detection.
//!
//! The source atom is injected at t = 0 and the probe at t = T. The source
//! is followed until it leaves the cavity or the probe arrives, whichever is
//! first; it is then read out (projected onto g, or onto e for the discarded
//! branch) and the modes evolve freely until the probe enters.

mod calibrate;
mod dataset;
mod gate;
mod monte_carlo;
mod scan;

pub use calibrate::{calibrate_coupling_phases, calibrate_p_error, CouplingCalibration, DetectorCalibration};
pub use dataset::{format_sig, scan_grid, scan_windows, DataPoint, RunDataset, ScanPoint, CSV_HEADER};
pub use gate::{gate_fidelity, gate_matrix, ideal_gate, run_phase_gate, GateRun};
pub use monte_carlo::{run_monte_carlo, sample_dataset, DetectorModel, SampleModel, DEFAULT_P_ERROR};
pub use scan::{master_scan, probe_effect, BranchProbabilities};

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{
    dispersive_phase, propagate_lindblad, propagate_pure, Dissipation, Drive, PhysicalParams,
    ProfileKind, PropagatorConfig,
};
use crate::error::{domain, Error, Result};
use crate::hilbert::{
    basis_index, product_state, thermal_modes, Atom, DensityOp, Layout, Mode, ModeDims, PureState, C64,
};
use crate::schedule::{
    compile_probe_plan, compile_source_plan, PlanConfig, PulsePlan, Segment, SegmentKind,
};

/// Everything that defines a simulated run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Setup {
    pub params: PhysicalParams,
    pub dims: ModeDims,
    /// Pulse-plan settings; its `isolation` flag is overridden by
    /// `propagator.idealized_isolation`.
    pub plan: PlanConfig,
    pub propagator: PropagatorConfig,
}

impl Setup {
    /// Constant coupling, perfect mode isolation, instantaneous switches.
    pub fn idealized() -> Self {
        Self {
            params: PhysicalParams::default(),
            dims: ModeDims::default(),
            plan: PlanConfig { profile: ProfileKind::Constant, ..Default::default() },
            propagator: PropagatorConfig::idealized(),
        }
    }

    /// Gaussian mode profile and coupling to both modes at all times.
    pub fn full_model() -> Self {
        Self {
            params: PhysicalParams::default(),
            dims: ModeDims::default(),
            plan: PlanConfig { profile: ProfileKind::Gaussian, isolation: false, ..Default::default() },
            propagator: PropagatorConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.plan.validate()?;
        self.propagator.validate()
    }

    pub fn plan_config(&self) -> PlanConfig {
        PlanConfig { isolation: self.propagator.idealized_isolation, ..self.plan }
    }

    pub fn source_plan(&self) -> Result<PulsePlan> {
        compile_source_plan(&self.params, &self.plan_config())
    }

    /// Probe plan for a probe injected at `t`.
    pub fn probe_plan(&self, t: f64) -> Result<PulsePlan> {
        Ok(compile_probe_plan(&self.params, &self.plan_config())?.shifted(t))
    }

    pub fn dissipation(&self) -> Dissipation {
        self.params.dissipation()
    }

    /// Earliest admissible probe delay: the end of the source's pulses.
    pub fn min_delay(&self) -> Result<f64> {
        Ok(self.source_plan()?.active_end())
    }

    fn check_delay(&self, source: &PulsePlan, t: f64) -> Result<()> {
        if !(t >= source.active_end() - 1e-12) {
            return domain(format!(
                "probe delay {:.3} μs is shorter than the source sequence ({:.3} μs)",
                t * 1e6,
                source.active_end() * 1e6
            ));
        }
        Ok(())
    }
}

fn kick(seg: &Segment, b: f64) -> Option<f64> {
    match seg.kind {
        SegmentKind::Hold { kick: Some(phi) } if b >= seg.t_end => Some(phi),
        _ => None,
    }
}

pub(crate) fn evolve_pure(psi: &PureState, seg: &Segment, a: f64, b: f64, setup: &Setup) -> Result<PureState> {
    let sub = seg.between(a, b);
    let mut out = propagate_pure(psi, &sub.drive(), &setup.params, &setup.propagator)?;
    if let Some(phi) = kick(seg, b) {
        out = dispersive_phase(&out, phi, Mode::A);
    }
    Ok(out)
}

pub(crate) fn evolve_mixed(rho: &DensityOp, seg: &Segment, a: f64, b: f64, setup: &Setup) -> Result<DensityOp> {
    let sub = seg.between(a, b);
    let mut out = propagate_lindblad(rho, &sub.drive(), &setup.params, &setup.dissipation(), &setup.propagator)?;
    if let Some(phi) = kick(seg, b) {
        out = dispersive_phase(&out, phi, Mode::A);
    }
    Ok(out)
}

/// Run every segment of `plan` that starts before `t_stop`, up to `t_stop`.
pub(crate) fn run_plan_pure(psi: PureState, plan: &PulsePlan, t_stop: f64, setup: &Setup) -> Result<PureState> {
    let mut psi = psi;
    for seg in plan.segments.iter().filter(|s| s.t_start < t_stop) {
        psi = evolve_pure(&psi, seg, seg.t_start, seg.t_end.min(t_stop), setup)?;
    }
    Ok(psi)
}

pub(crate) fn run_plan_mixed(rho: DensityOp, plan: &PulsePlan, t_stop: f64, setup: &Setup) -> Result<DensityOp> {
    let mut rho = rho;
    for seg in plan.segments.iter().filter(|s| s.t_start < t_stop) {
        rho = evolve_mixed(&rho, seg, seg.t_start, seg.t_end.min(t_stop), setup)?;
    }
    Ok(rho)
}

/// Pure state with the atom projected onto `atom`, renormalized; also the
/// probability of that outcome.
pub fn project_atom_pure(psi: &PureState, atom: Atom) -> Result<(f64, PureState)> {
    let dims = psi.dims();
    let half = dims.total() / 2;
    let keep = atom.index() * half;
    let mut v = DVector::zeros(dims.total());
    for i in 0..half {
        v[i] = psi.amplitudes()[keep + i];
    }
    let p = v.norm_squared();
    if p < 1e-15 {
        return Err(Error::Numerical(format!("atom outcome {atom:?} has vanishing probability")));
    }
    let mut out = PureState::from_amplitudes(dims, v)?;
    out.normalize()?;
    Ok((p, out))
}

/// Mode state conditioned on the atom being found in `atom` (normalized),
/// with its probability. The result is in the two-mode layout.
pub fn project_atom(rho: &DensityOp, atom: Atom) -> Result<(f64, DensityOp)> {
    let dims = rho.layout().mode_dims().ok_or_else(|| Error::Domain("full layout required".into()))?;
    let half = dims.total() / 2;
    let off = atom.index() * half;
    let block = rho.matrix().view((off, off), (half, half)).into_owned();
    let p = block.trace().re;
    if !(p > 1e-15) {
        return Err(Error::Numerical(format!("atom outcome {atom:?} has vanishing probability")));
    }
    Ok((p, DensityOp::new(Layout::modes(dims), block / C64::new(p, 0.0))?))
}

/// Outcome of [`run_ideal`].
#[derive(Clone, Debug, PartialEq)]
pub struct IdealRun {
    /// Atom-plus-modes state when the probe leaves the cavity.
    pub state: PureState,
    pub p_e: f64,
    /// Probability of finding the source atom in g.
    pub source_g: f64,
}

/// Pure-state pipeline for probe delay `t` (s).
pub fn run_ideal(t: f64, setup: &Setup) -> Result<IdealRun> {
    setup.validate()?;
    let source = setup.source_plan()?;
    setup.check_delay(&source, t)?;
    let psi = product_state(Atom::E, 0, 0, setup.dims)?;
    let t_read = t.min(source.end_time());
    let psi = run_plan_pure(psi, &source, t_read, setup)?;
    let (source_g, psi) = project_atom_pure(&psi, Atom::G)?;
    let idle = Drive::steady(t_read, t, 0.0, source.segments[0].profile, false, false);
    let psi = propagate_pure(&psi, &idle, &setup.params, &setup.propagator)?;
    let probe = setup.probe_plan(t)?;
    let state = run_plan_pure(psi, &probe, f64::INFINITY, setup)?;
    let p_e = state.excited_population();
    Ok(IdealRun { state, p_e, source_g })
}

/// Source state at the end of its last resonant pulse, and that time.
pub fn source_output(setup: &Setup) -> Result<(PureState, f64)> {
    setup.validate()?;
    let source = setup.source_plan()?;
    let t_end = source
        .segments
        .iter()
        .rev()
        .find(|s| matches!(s.kind, SegmentKind::Pulse { .. }))
        .map(|s| s.t_end)
        .unwrap_or(0.0);
    let psi = product_state(Atom::E, 0, 0, setup.dims)?;
    Ok((run_plan_pure(psi, &source, t_end, setup)?, t_end))
}

/// Populations of `|g,0_a,1_b⟩` and `|g,1_a,0_b⟩` and the phase φ in
/// `e^{iφ}|0_a,1_b⟩ + |1_a,0_b⟩`.
pub fn two_mode_phase(psi: &PureState) -> Result<(f64, f64, f64)> {
    let d = psi.dims();
    let a01 = psi.amplitudes()[basis_index(Atom::G, 0, 1, d)?];
    let a10 = psi.amplitudes()[basis_index(Atom::G, 1, 0, d)?];
    Ok((a01.norm_sqr(), a10.norm_sqr(), (a01 / a10).arg()))
}

/// Atom e-population plus the mean photon numbers of both modes.
pub fn excitation_number(psi: &PureState) -> f64 {
    psi.excited_population() + psi.mean_photon(Mode::A) + psi.mean_photon(Mode::B)
}

/// Outcome of [`run_master`].
#[derive(Clone, Debug, PartialEq)]
pub struct MasterRun {
    /// Atom-plus-modes density operator when the probe leaves the cavity.
    pub rho: DensityOp,
    pub p_e: f64,
    pub source_g: f64,
    /// Source atom and modes at read-out, before projection.
    pub source_readout: DensityOp,
}

/// Initial condition: source atom in e, both modes thermal at the erased
/// occupation.
pub fn erased_initial_state(setup: &Setup) -> Result<DensityOp> {
    let n = setup.params.n_bar_erased;
    thermal_modes(n, n, setup.dims)?.with_atom(Atom::E)
}

/// Master-equation pipeline for probe delay `t` (s), conditioned on the
/// source atom being detected in g.
pub fn run_master(t: f64, setup: &Setup) -> Result<MasterRun> {
    setup.validate()?;
    let source = setup.source_plan()?;
    setup.check_delay(&source, t)?;
    let t_read = t.min(source.end_time());
    let source_readout = run_plan_mixed(erased_initial_state(setup)?, &source, t_read, setup)?;
    let (source_g, modes) = project_atom(&source_readout, Atom::G)?;
    let rho = crate::dynamics::free_evolve(&modes.with_atom(Atom::G)?, t - t_read, 0.0, &setup.params, &setup.dissipation())?;
    let probe = setup.probe_plan(t)?;
    let rho = run_plan_mixed(rho, &probe, f64::INFINITY, setup)?;
    let p_e = rho.excited_population()?;
    Ok(MasterRun { rho, p_e, source_g, source_readout })
}

/// Probe-only pipeline on modes in full thermal equilibrium: the long-delay
/// limit of `p_e`.
pub fn steady_state_pe(setup: &Setup) -> Result<f64> {
    setup.validate()?;
    let p = &setup.params;
    let rho = thermal_modes(p.n_bar_a, p.n_bar_b, setup.dims)?.with_atom(Atom::G)?;
    let probe = setup.probe_plan(0.0)?;
    run_plan_mixed(rho, &probe, f64::INFINITY, setup)?.excited_population()
}

pub(crate) fn expectation(obs: &DMatrix<C64>, rho: &DMatrix<C64>) -> f64 {
    let n = obs.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..n {
        for i in 0..n {
            acc += obs[(i, j)] * rho[(j, i)];
        }
    }
    acc.re
}

#[cfg(test)]
mod tests;
