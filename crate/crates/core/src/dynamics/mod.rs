//! Atom–two-mode dynamics in the frame rotating at the M_a frequency.
//!
//! The Hamiltonian (ħ = 1) is
//!
//! ```text
//! H = Δ(t)|e⟩⟨e| − δ b†b + s(t)·(Ω/2)·[e^{iθ_a} a σ₊ + e^{iθ_b} b σ₊ + h.c.]
//! ```
//!
//! with the energy of `|g, 1_a, 0_b⟩` as origin. Dissipation is the standard
//! finite-temperature damping of each mode: jump operators `√(κ(1+n̄)) a` and
//! `√(κ n̄) a†` (likewise for b).

mod free;
mod generator;
mod integrate;

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix2};

use crate::error::{domain, Error, Result};
use crate::hilbert::{basis_labels, DensityOp, Layout, Mode, ModeDims, PureState, C64};

pub(crate) use free::{FreeMap, ModeSuperop};
pub(crate) use generator::Generator;

/// Physical constants of the apparatus (SI, angular frequencies in rad/s).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalParams {
    /// Vacuum Rabi frequency Ω at the cavity centre.
    pub omega_rabi: f64,
    /// Splitting δ between M_a (higher) and M_b.
    pub delta: f64,
    /// Energy damping rates 1/T_r.
    pub kappa_a: f64,
    pub kappa_b: f64,
    /// Equilibrium thermal occupations.
    pub n_bar_a: f64,
    pub n_bar_b: f64,
    /// Occupation of each mode right after the erasure stage.
    pub n_bar_erased: f64,
    /// Atomic velocity (m/s).
    pub velocity: f64,
    /// Mode waist (m).
    pub waist: f64,
    pub coupling_phase_a: f64,
    pub coupling_phase_b: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            omega_rabi: 2.0 * PI * 47e3,
            delta: 2.0 * PI * 128.3e3,
            kappa_a: 1.0 / 1.0e-3,
            kappa_b: 1.0 / 0.9e-3,
            n_bar_a: 0.8,
            n_bar_b: 1.0,
            n_bar_erased: 0.1,
            velocity: 503.0,
            waist: 6e-3,
            // Reproduce |e,0_a⟩ → (|e,0_a⟩+|g,1_a⟩)/√2 for a π/2 pulse and
            // |e,0_b⟩ → i·e^{iδπ/Ω}|g,1_b⟩ for a π pulse; see `experiment::calibrate`.
            coupling_phase_a: -PI / 2.0,
            coupling_phase_b: PI,
        }
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("omega_rabi", self.omega_rabi),
            ("delta", self.delta),
            ("kappa_a", self.kappa_a),
            ("kappa_b", self.kappa_b),
            ("n_bar_a", self.n_bar_a),
            ("n_bar_b", self.n_bar_b),
            ("n_bar_erased", self.n_bar_erased),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0) || !v.is_finite() {
                return domain(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        if !(self.waist > 0.0) || !(self.velocity > 0.0) {
            return domain("waist and velocity must be positive");
        }
        if !self.coupling_phase_a.is_finite() || !self.coupling_phase_b.is_finite() {
            return domain("coupling phases must be finite");
        }
        Ok(())
    }

    /// Time for the atom to cross one waist, w/v.
    pub fn waist_time(&self) -> f64 {
        self.waist / self.velocity
    }

    pub fn dissipation(&self) -> Dissipation {
        Dissipation {
            kappa_a: self.kappa_a,
            kappa_b: self.kappa_b,
            n_bar_a: self.n_bar_a,
            n_bar_b: self.n_bar_b,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProfileKind {
    /// Uniform coupling (the spatial mode shape is ignored).
    Constant,
    /// Gaussian mode of waist w crossed at velocity v.
    Gaussian,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CouplingProfile {
    pub kind: ProfileKind,
    /// Time at which the atom crosses the cavity axis.
    pub t_center: f64,
}

impl CouplingProfile {
    pub fn constant() -> Self {
        Self { kind: ProfileKind::Constant, t_center: 0.0 }
    }

    pub fn gaussian(t_center: f64) -> Self {
        Self { kind: ProfileKind::Gaussian, t_center }
    }

    /// Window [t_c − 5w/v, t_c + 5w/v] treated as the cavity transit.
    pub fn transit_window(&self, params: &PhysicalParams) -> (f64, f64) {
        let half = 5.0 * params.waist_time();
        (self.t_center - half, self.t_center + half)
    }

    pub fn shifted(&self, dt: f64) -> Self {
        Self { t_center: self.t_center + dt, ..*self }
    }
}

/// Relative coupling s(t) ∈ [0, 1].
pub fn coupling_scale_at(profile: &CouplingProfile, params: &PhysicalParams, t: f64) -> f64 {
    match profile.kind {
        ProfileKind::Constant => 1.0,
        ProfileKind::Gaussian => {
            let x = (t - profile.t_center) / params.waist_time();
            (-x * x).exp()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Rk4,
    Adaptive,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PropagatorConfig {
    /// Largest integration step (s).
    pub dt_max: f64,
    pub method: Method,
    /// Couple the atom only to the mode a segment targets, and to neither
    /// mode outside resonant pulses.
    pub idealized_isolation: bool,
    /// Error tolerance of the adaptive method.
    pub tolerance: f64,
    /// Constant added to every diagonal element of H (frame checks).
    pub energy_offset: f64,
}

impl Default for PropagatorConfig {
    fn default() -> Self {
        Self {
            dt_max: 1e-8,
            method: Method::Rk4,
            idealized_isolation: false,
            tolerance: 1e-10,
            energy_offset: 0.0,
        }
    }
}

impl PropagatorConfig {
    pub fn idealized() -> Self {
        Self { idealized_isolation: true, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt_max > 0.0) || !(self.tolerance > 0.0) {
            return domain("dt_max and tolerance must be positive");
        }
        Ok(())
    }
}

/// Damping channels.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Dissipation {
    pub kappa_a: f64,
    pub kappa_b: f64,
    pub n_bar_a: f64,
    pub n_bar_b: f64,
}

impl Dissipation {
    pub fn none() -> Self {
        Self::default()
    }
}

/// The physical content of one plan segment: time span, detuning (linear
/// between the two end values), coupling profile and which modes couple.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Drive {
    pub t0: f64,
    pub t1: f64,
    pub detuning_start: f64,
    pub detuning_end: f64,
    pub profile: CouplingProfile,
    pub couple_a: bool,
    pub couple_b: bool,
}

impl Drive {
    /// Constant detuning over [t0, t1].
    pub fn steady(
        t0: f64,
        t1: f64,
        detuning: f64,
        profile: CouplingProfile,
        couple_a: bool,
        couple_b: bool,
    ) -> Self {
        Self { t0, t1, detuning_start: detuning, detuning_end: detuning, profile, couple_a, couple_b }
    }

    pub fn detuning_at(&self, t: f64) -> f64 {
        let span = self.t1 - self.t0;
        if span == 0.0 {
            return self.detuning_start;
        }
        let x = ((t - self.t0) / span).clamp(0.0, 1.0);
        self.detuning_start + (self.detuning_end - self.detuning_start) * x
    }

    /// ∫Δ dt over the segment.
    pub fn detuning_integral(&self) -> f64 {
        0.5 * (self.detuning_start + self.detuning_end) * (self.t1 - self.t0)
    }

    pub fn coupling_scale(&self, params: &PhysicalParams, t: f64) -> f64 {
        coupling_scale_at(&self.profile, params, t)
    }

    pub fn is_decoupled(&self) -> bool {
        !self.couple_a && !self.couple_b
    }

    fn validate(&self) -> Result<()> {
        if !(self.t1 >= self.t0) {
            return domain(format!("segment ends ({}) before it starts ({})", self.t1, self.t0));
        }
        Ok(())
    }
}

/// Dense H/ħ with both modes coupled at relative strength `coupling_scale`.
pub fn hamiltonian(
    params: &PhysicalParams,
    detuning: f64,
    coupling_scale: f64,
    dims: ModeDims,
) -> DMatrix<C64> {
    Generator::new(params, dims, true, true, &Dissipation::none(), 0.0).dense(detuning, coupling_scale)
}

/// Exact propagator on {|e,n⟩, |g,n+1⟩} for a real coupling Ω and constant
/// detuning Δ, in the same frame as [`hamiltonian`] with M_b empty.
pub fn analytic_rabi(n: usize, detuning: f64, omega: f64, t: f64) -> Matrix2<C64> {
    let omega_n = omega * ((n + 1) as f64).sqrt();
    let w = (omega_n * omega_n + detuning * detuning).sqrt();
    let global = C64::from_polar(1.0, -0.5 * detuning * t);
    let (c, s) = (0.5 * w * t).cos_sin();
    let (dz, dx) = if w > 0.0 { (detuning / w, omega_n / w) } else { (0.0, 0.0) };
    let i = C64::new(0.0, 1.0);
    let one = C64::new(1.0, 0.0);
    // cos(Wt/2)·1 − i sin(Wt/2)·(Δσ_z + Ω_n σ_x)/W
    Matrix2::new(
        one * c - i * s * dz,
        -i * s * dx,
        -i * s * dx,
        one * c + i * s * dz,
    ) * global
}

/// Probability of |e,n⟩ → |g,n+1⟩ after time t.
pub fn rabi_transfer_probability(n: usize, detuning: f64, omega: f64, t: f64) -> f64 {
    let on2 = omega * omega * (n + 1) as f64;
    let w2 = on2 + detuning * detuning;
    if w2 == 0.0 {
        return 0.0;
    }
    on2 / w2 * (0.5 * w2.sqrt() * t).sin().powi(2)
}

trait CosSin {
    fn cos_sin(self) -> (f64, f64);
}

impl CosSin for f64 {
    fn cos_sin(self) -> (f64, f64) {
        let (s, c) = self.sin_cos();
        (c, s)
    }
}

/// Photon-number-conditional phase on the atomic coherence: every
/// `|e, n_a, n_b⟩` amplitude picks up `e^{i·n·φ}` where n counts photons in
/// the selected mode.
pub trait DispersivePhase: Sized {
    fn dispersive_phase(&self, phase_per_photon: f64, mode: Mode) -> Self;
}

fn kick_factors(dims: ModeDims, phase: f64, mode: Mode) -> Vec<C64> {
    (0..dims.total())
        .map(|i| {
            let (atom, na, nb) = basis_labels(i, dims).unwrap();
            let n = if mode == Mode::A { na } else { nb };
            if atom == crate::hilbert::Atom::E {
                C64::from_polar(1.0, n as f64 * phase)
            } else {
                C64::new(1.0, 0.0)
            }
        })
        .collect()
}

impl DispersivePhase for PureState {
    fn dispersive_phase(&self, phase_per_photon: f64, mode: Mode) -> Self {
        let f = kick_factors(self.dims(), phase_per_photon, mode);
        let mut out = self.clone();
        out.amplitudes_mut().iter_mut().zip(&f).for_each(|(a, k)| *a *= k);
        out
    }
}

impl DispersivePhase for DensityOp {
    fn dispersive_phase(&self, phase_per_photon: f64, mode: Mode) -> Self {
        let dims = self.layout().mode_dims().expect("full layout");
        let f = kick_factors(dims, phase_per_photon, mode);
        let mut out = self.clone();
        let m = out.matrix_mut();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                m[(i, j)] *= f[i] * f[j].conj();
            }
        }
        out
    }
}

/// Apply [`DispersivePhase`] to either a pure state or a density operator.
pub fn dispersive_phase<S: DispersivePhase>(state: &S, phase_per_photon: f64, mode: Mode) -> S {
    state.dispersive_phase(phase_per_photon, mode)
}

fn free_map(params: &PhysicalParams, diss: &Dissipation, dims: ModeDims, drive: &Drive) -> FreeMap {
    let tau = drive.t1 - drive.t0;
    FreeMap {
        mode_a: ModeSuperop::new(dims.n_max_a() + 1, 0.0, diss.kappa_a, diss.n_bar_a, tau),
        mode_b: ModeSuperop::new(dims.n_max_b() + 1, -params.delta, diss.kappa_b, diss.n_bar_b, tau),
        atom_phase: C64::from_polar(1.0, -drive.detuning_integral()),
    }
}

fn integrate(
    y: &mut [C64],
    t0: f64,
    t1: f64,
    cfg: &PropagatorConfig,
    f: impl FnMut(f64, &[C64], &mut [C64]),
) -> Result<()> {
    match cfg.method {
        Method::Rk4 => {
            integrate::rk4(y, t0, t1, cfg.dt_max, f);
        }
        Method::Adaptive => {
            integrate::dopri5(y, t0, t1, cfg.dt_max, cfg.tolerance, f)?;
        }
    }
    Ok(())
}

/// Schrödinger evolution of `state` over one drive segment.
pub fn propagate_pure(
    state: &PureState,
    drive: &Drive,
    params: &PhysicalParams,
    cfg: &PropagatorConfig,
) -> Result<PureState> {
    drive.validate()?;
    let dims = state.dims();
    let norm0 = state.norm();
    let mut out = state.clone();
    if drive.t1 == drive.t0 {
        return Ok(out);
    }
    if drive.is_decoupled() {
        let tau = drive.t1 - drive.t0;
        let phi_e = drive.detuning_integral();
        for (i, a) in out.amplitudes_mut().iter_mut().enumerate() {
            let (atom, _, nb) = basis_labels(i, dims).unwrap();
            let mut phase = (-params.delta * nb as f64 + cfg.energy_offset) * tau;
            if atom == crate::hilbert::Atom::E {
                phase += phi_e;
            }
            *a *= C64::from_polar(1.0, -phase);
        }
    } else {
        let gen = Generator::new(
            params,
            dims,
            drive.couple_a,
            drive.couple_b,
            &Dissipation::none(),
            cfg.energy_offset,
        );
        let y = out.amplitudes_mut().as_mut_slice();
        integrate(y, drive.t0, drive.t1, cfg, |t, y, dy| gen.pure_rhs(drive, params, t, y, dy))?;
    }
    let drift = (out.norm() - norm0).abs();
    if drift > 1e-6 {
        return Err(Error::Numerical(format!("norm drift {drift:.3e} over segment")));
    }
    Ok(out)
}

fn require_full(rho: &DensityOp) -> Result<ModeDims> {
    let layout = rho.layout();
    if !layout.is_full() {
        return domain("propagation needs the full atom ⊗ M_a ⊗ M_b layout");
    }
    Ok(layout.mode_dims().unwrap())
}

/// Master-equation evolution of `rho` over one drive segment.
pub fn propagate_lindblad(
    rho: &DensityOp,
    drive: &Drive,
    params: &PhysicalParams,
    diss: &Dissipation,
    cfg: &PropagatorConfig,
) -> Result<DensityOp> {
    drive.validate()?;
    let dims = require_full(rho)?;
    let mut m = rho.matrix().clone();
    if drive.t1 > drive.t0 {
        if drive.is_decoupled() {
            free_map(params, diss, dims, drive).apply(&mut m);
        } else {
            let gen = Generator::new(params, dims, drive.couple_a, drive.couple_b, diss, cfg.energy_offset);
            let tr0 = m.trace();
            integrate(m.as_mut_slice(), drive.t0, drive.t1, cfg, |t, y, dy| {
                gen.lindblad_rhs(drive, params, t, y, dy)
            })?;
            let drift = (m.trace() - tr0).norm();
            if drift > 1e-6 {
                return Err(Error::Numerical(format!("trace drift {drift:.3e} over segment")));
            }
        }
    }
    let out = DensityOp::new(Layout::full(dims), m)?;
    let min = out.min_eigenvalue();
    let scale = out.trace().re.abs().max(1e-300);
    if min < -1e-6 * scale {
        return Err(Error::Numerical(format!("positivity lost: eigenvalue {min:.3e}")));
    }
    Ok(out)
}

/// Heisenberg-picture counterpart of [`propagate_lindblad`]: maps an
/// observable at `drive.t1` to the observable at `drive.t0` such that
/// Tr[O(t0) ρ(t0)] = Tr[O(t1) ρ(t1)].
pub fn propagate_observable(
    obs: &DMatrix<C64>,
    dims: ModeDims,
    drive: &Drive,
    params: &PhysicalParams,
    diss: &Dissipation,
    cfg: &PropagatorConfig,
) -> Result<DMatrix<C64>> {
    drive.validate()?;
    if obs.nrows() != dims.total() || obs.ncols() != dims.total() {
        return domain("observable does not match the full dimension");
    }
    let mut o = obs.clone();
    if drive.t1 > drive.t0 {
        if drive.is_decoupled() {
            free_map(params, diss, dims, drive).apply_adjoint(&mut o);
        } else {
            let gen = Generator::new(params, dims, drive.couple_a, drive.couple_b, diss, cfg.energy_offset);
            integrate(o.as_mut_slice(), drive.t1, drive.t0, cfg, |t, y, dy| {
                gen.adjoint_rhs(drive, params, t, y, dy)
            })?;
        }
    }
    Ok(o)
}

/// Exact free evolution of the two modes (atom absent or spectator) for a
/// duration `tau`, with the atomic upper level detuned by `detuning`.
pub fn free_evolve(
    rho: &DensityOp,
    tau: f64,
    detuning: f64,
    params: &PhysicalParams,
    diss: &Dissipation,
) -> Result<DensityOp> {
    if tau < 0.0 {
        return domain(format!("negative free-evolution time {tau}"));
    }
    let dims = require_full(rho)?;
    let drive = Drive::steady(0.0, tau, detuning, CouplingProfile::constant(), false, false);
    let mut m = rho.matrix().clone();
    free_map(params, diss, dims, &drive).apply(&mut m);
    DensityOp::new(Layout::full(dims), m)
}

/// Pure-state vector helper used by tests and the pipelines.
pub fn state_from(dims: ModeDims, terms: &[(crate::hilbert::Atom, usize, usize, C64)]) -> Result<PureState> {
    let mut v = DVector::zeros(dims.total());
    for &(a, na, nb, c) in terms {
        v[crate::hilbert::basis_index(a, na, nb, dims)?] += c;
    }
    PureState::from_amplitudes(dims, v)
}
