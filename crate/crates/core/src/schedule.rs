//! Pulse plans: Stark tuning, pulse areas and the per-atom segment timelines.
//!
//! Every atom's clock starts at its injection into the cavity. The transit
//! window is `[0, 10 w/v]`, with the cavity axis crossed at `5 w/v`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::dynamics::{CouplingProfile, Drive, PhysicalParams, ProfileKind};
use crate::error::{domain, Result};
use crate::hilbert::Mode;

/// Quadratic Stark law Δ/2π = offset + quad·E².
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StarkCalib {
    /// Hz per (V/cm)².
    pub quad_coeff: f64,
    /// Atom − M_a detuning at zero field, Hz.
    pub zero_field_offset: f64,
}

/// Field at which the atom is resonant with M_a.
pub const RESONANCE_FIELD_A: f64 = 0.26;

impl Default for StarkCalib {
    fn default() -> Self {
        Self::resonant_at(-255e3, RESONANCE_FIELD_A)
    }
}

impl StarkCalib {
    /// Calibration whose zero-field offset puts the M_a resonance at `field`.
    pub fn resonant_at(quad_coeff: f64, field: f64) -> Self {
        Self { quad_coeff, zero_field_offset: -quad_coeff * field * field }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.quad_coeff < 0.0) || !self.zero_field_offset.is_finite() {
            return domain("Stark coefficient must be negative and the offset finite");
        }
        Ok(())
    }

    /// Field (V/cm) producing angular detuning `detuning`, if reachable.
    pub fn field_for(&self, detuning: f64) -> Option<f64> {
        let e2 = (detuning / (2.0 * PI) - self.zero_field_offset) / self.quad_coeff;
        (e2 >= 0.0).then(|| e2.sqrt())
    }
}

/// Angular detuning (rad/s) of the atom from M_a at field `e` (V/cm).
pub fn detuning_from_field(e: f64, calib: &StarkCalib) -> Result<f64> {
    if !(e >= 0.0) {
        return domain(format!("field must be non-negative, got {e}"));
    }
    Ok(2.0 * PI * (calib.zero_field_offset + calib.quad_coeff * e * e))
}

/// Duration of a rotation of angle `theta` at constant coupling `omega_eff`.
pub fn pulse_duration(theta: f64, omega_eff: f64) -> Result<f64> {
    if !(theta >= 0.0) || !(omega_eff > 0.0) {
        return domain("pulse angle must be ≥ 0 and coupling > 0");
    }
    Ok(theta / omega_eff)
}

// 15-point Kronrod nodes/weights and the embedded 7-point Gauss weights.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

fn adaptive_gk(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (val, err) = gk15(f, a, b);
    if err <= tol || depth == 0 {
        return val;
    }
    let m = 0.5 * (a + b);
    adaptive_gk(f, a, m, 0.5 * tol, depth - 1) + adaptive_gk(f, m, b, 0.5 * tol, depth - 1)
}

/// ∫ Ω·s(t) dt over [t0, t1].
pub fn pulse_area(profile: &CouplingProfile, params: &PhysicalParams, t0: f64, t1: f64) -> Result<f64> {
    if !(t1 >= t0) {
        return domain(format!("window end {t1} precedes start {t0}"));
    }
    if t1 == t0 {
        return Ok(0.0);
    }
    Ok(match profile.kind {
        ProfileKind::Constant => params.omega_rabi * (t1 - t0),
        ProfileKind::Gaussian => {
            let f = |t| params.omega_rabi * crate::dynamics::coupling_scale_at(profile, params, t);
            adaptive_gk(&f, t0, t1, 1e-11, 40)
        }
    })
}

/// Where a solved pulse window sits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Anchor {
    /// Window begins at the given time.
    Start(f64),
    /// Window ends at the given time.
    End(f64),
    /// Window is symmetric about the given time.
    Centered(f64),
}

/// Window `(t0, t1)` inside the transit with pulse area `target`.
pub fn solve_pulse_window(
    profile: &CouplingProfile,
    params: &PhysicalParams,
    target: f64,
    anchor: Anchor,
) -> Result<(f64, f64)> {
    if !(target >= 0.0) {
        return domain(format!("pulse area must be non-negative, got {target}"));
    }
    let (lo, hi) = profile.transit_window(params);
    let window = |x: f64| match anchor {
        Anchor::Start(t) => (t, t + x),
        Anchor::End(t) => (t - x, t),
        Anchor::Centered(t) => (t - 0.5 * x, t + 0.5 * x),
    };
    let x_max = match anchor {
        Anchor::Start(t) => hi - t,
        Anchor::End(t) => t - lo,
        Anchor::Centered(t) => 2.0 * (t - lo).min(hi - t),
    };
    if x_max < 0.0 {
        return domain("pulse anchor lies outside the transit window");
    }
    if target == 0.0 {
        return Ok(window(0.0));
    }
    let area = |x: f64| {
        let (a, b) = window(x);
        pulse_area(profile, params, a, b)
    };
    let a_max = area(x_max)?;
    if a_max < target {
        return domain(format!(
            "pulse area {target:.6} rad unreachable: at most {a_max:.6} rad fits in the transit"
        ));
    }
    if profile.kind == ProfileKind::Constant {
        return Ok(window(target / params.omega_rabi));
    }
    let (mut x0, mut x1) = (0.0, x_max);
    for _ in 0..200 {
        let mid = 0.5 * (x0 + x1);
        if area(mid)? < target {
            x0 = mid;
        } else {
            x1 = mid;
        }
        if x1 - x0 < 1e-15 {
            break;
        }
    }
    Ok(window(0.5 * (x0 + x1)))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SegmentKind {
    /// Resonant interaction aimed at one mode with the given pulse area.
    Pulse { mode: Mode, area: f64 },
    /// Linear detuning sweep between two settings.
    Ramp,
    /// Off-resonant wait; `kick` is a photon-number phase on M_a applied
    /// at the segment end.
    Hold { kick: Option<f64> },
    /// Far-detuned until the atom leaves the cavity.
    Freeze,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub t_start: f64,
    pub t_end: f64,
    pub detuning_start: f64,
    pub detuning_end: f64,
    pub kind: SegmentKind,
    pub profile: CouplingProfile,
    pub isolation: bool,
}

impl Segment {
    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }

    /// Which modes the atom couples to during this segment.
    pub fn couplings(&self) -> (bool, bool) {
        match (self.kind, self.isolation) {
            (SegmentKind::Pulse { mode, .. }, true) => (mode == Mode::A, mode == Mode::B),
            (_, true) => (false, false),
            (_, false) => (true, true),
        }
    }

    pub fn drive(&self) -> Drive {
        let (couple_a, couple_b) = self.couplings();
        Drive {
            t0: self.t_start,
            t1: self.t_end,
            detuning_start: self.detuning_start,
            detuning_end: self.detuning_end,
            profile: self.profile,
            couple_a,
            couple_b,
        }
    }

    /// Copy restricted to `[a, b]` (clamped to the segment), keeping the
    /// detuning law.
    pub fn between(&self, a: f64, b: f64) -> Segment {
        let a = a.clamp(self.t_start, self.t_end);
        let b = b.clamp(a, self.t_end);
        let d = self.drive();
        Segment { t_start: a, t_end: b, detuning_start: d.detuning_at(a), detuning_end: d.detuning_at(b), ..*self }
    }

    fn label(&self) -> String {
        match self.kind {
            SegmentKind::Pulse { mode, area } => {
                let m = if mode == Mode::A { "a" } else { "b" };
                format!("pulse_{m}({area:.6})")
            }
            SegmentKind::Ramp => "ramp".into(),
            SegmentKind::Hold { kick: Some(k) } => format!("hold(kick={k:.6})"),
            SegmentKind::Hold { kick: None } => "hold".into(),
            SegmentKind::Freeze => "freeze".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AtomRole {
    Source,
    Probe,
    Gate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PulsePlan {
    pub role: AtomRole,
    pub injection_time: f64,
    pub segments: Vec<Segment>,
}

impl PulsePlan {
    /// Contiguity, ordering and positive length of every segment.
    pub fn validate(&self) -> Result<()> {
        let mut prev = self.injection_time;
        for (i, s) in self.segments.iter().enumerate() {
            if (s.t_start - prev).abs() > 1e-15 {
                return domain(format!("segment {i} starts at {} but previous ends at {prev}", s.t_start));
            }
            if !(s.t_end > s.t_start) {
                return domain(format!("segment {i} has non-positive length"));
            }
            prev = s.t_end;
        }
        Ok(())
    }

    pub fn end_time(&self) -> f64 {
        self.segments.last().map_or(self.injection_time, |s| s.t_end)
    }

    /// End of the last segment that is not the final freeze.
    pub fn active_end(&self) -> f64 {
        self.segments
            .iter()
            .rev()
            .find(|s| s.kind != SegmentKind::Freeze)
            .map_or(self.injection_time, |s| s.t_end)
    }

    /// Same plan with every time moved by `dt`.
    pub fn shifted(&self, dt: f64) -> PulsePlan {
        let segments = self
            .segments
            .iter()
            .map(|s| Segment {
                t_start: s.t_start + dt,
                t_end: s.t_end + dt,
                profile: s.profile.shifted(dt),
                ..*s
            })
            .collect();
        PulsePlan { role: self.role, injection_time: self.injection_time + dt, segments }
    }

    /// One line per segment: times in μs, detunings in kHz.
    pub fn listing(&self) -> String {
        let role = match self.role {
            AtomRole::Source => "source",
            AtomRole::Probe => "probe",
            AtomRole::Gate => "gate",
        };
        let mut out = format!("# plan {role} injection_us={:.6}\n", self.injection_time * 1e6);
        out.push_str("# t_start_us t_end_us detuning_start_kHz detuning_end_kHz kind profile isolation\n");
        for s in &self.segments {
            let profile = match s.profile.kind {
                ProfileKind::Constant => "constant",
                ProfileKind::Gaussian => "gaussian",
            };
            let _ = writeln!(
                out,
                "{:.6} {:.6} {:.6} {:.6} {} {} {}",
                s.t_start * 1e6,
                s.t_end * 1e6,
                s.detuning_start / (2.0 * PI * 1e3),
                s.detuning_end / (2.0 * PI * 1e3),
                s.label(),
                profile,
                s.isolation
            );
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlanConfig {
    pub profile: ProfileKind,
    /// Duration of each linear detuning switch (0 = instantaneous).
    pub ramp_time: f64,
    /// Detuning (rad/s) that freezes the atom-field evolution.
    pub freeze_detuning: f64,
    pub isolation: bool,
}

impl Default for PlanConfig {
    fn default() -> Self {
        Self {
            profile: ProfileKind::Constant,
            ramp_time: 0.0,
            freeze_detuning: -2.0 * PI * 278e3,
            isolation: true,
        }
    }
}

impl PlanConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.ramp_time >= 0.0) || !self.freeze_detuning.is_finite() {
            return domain("ramp time must be ≥ 0 and the freeze detuning finite");
        }
        Ok(())
    }

    pub fn profile(&self, params: &PhysicalParams) -> CouplingProfile {
        CouplingProfile { kind: self.profile, t_center: 5.0 * params.waist_time() }
    }
}

struct Builder<'a> {
    params: &'a PhysicalParams,
    cfg: &'a PlanConfig,
    profile: CouplingProfile,
    segments: Vec<Segment>,
    t: f64,
    detuning: f64,
}

impl<'a> Builder<'a> {
    fn new(params: &'a PhysicalParams, cfg: &'a PlanConfig) -> Result<Self> {
        params.validate()?;
        cfg.validate()?;
        let profile = cfg.profile(params);
        Ok(Self { params, cfg, profile, segments: Vec::new(), t: 0.0, detuning: f64::NAN })
    }

    fn exit(&self) -> f64 {
        self.profile.transit_window(self.params).1
    }

    fn push(&mut self, t_end: f64, detuning_end: f64, kind: SegmentKind) -> Result<()> {
        if t_end > self.exit() + 1e-15 {
            return domain("plan does not fit inside the cavity transit");
        }
        let detuning_start = if kind == SegmentKind::Ramp { self.detuning } else { detuning_end };
        self.segments.push(Segment {
            t_start: self.t,
            t_end,
            detuning_start,
            detuning_end,
            kind,
            profile: self.profile,
            isolation: self.cfg.isolation,
        });
        self.t = t_end;
        self.detuning = detuning_end;
        Ok(())
    }

    fn switch_to(&mut self, detuning: f64) -> Result<()> {
        if self.cfg.ramp_time > 0.0 && !self.segments.is_empty() && self.detuning != detuning {
            self.push(self.t + self.cfg.ramp_time, detuning, SegmentKind::Ramp)?;
        }
        self.detuning = detuning;
        Ok(())
    }

    fn pulse(&mut self, mode: Mode, area: f64) -> Result<()> {
        let detuning = if mode == Mode::A { 0.0 } else { -self.params.delta };
        self.switch_to(detuning)?;
        let (_, t1) = solve_pulse_window(&self.profile, self.params, area, Anchor::Start(self.t))?;
        self.push(t1, detuning, SegmentKind::Pulse { mode, area })
    }

    fn hold(&mut self, duration: f64, kick: Option<f64>) -> Result<()> {
        let d = self.cfg.freeze_detuning;
        self.switch_to(d)?;
        self.push(self.t + duration, d, SegmentKind::Hold { kick })
    }

    fn freeze(mut self, role: AtomRole) -> Result<PulsePlan> {
        self.switch_to(self.cfg.freeze_detuning)?;
        let exit = self.exit();
        if exit > self.t {
            self.push(exit, self.cfg.freeze_detuning, SegmentKind::Freeze)?;
        }
        let plan = PulsePlan { role, injection_time: 0.0, segments: self.segments };
        plan.validate()?;
        Ok(plan)
    }
}

/// π/2 pulse on M_a at resonance, π pulse on M_b, then freeze.
pub fn compile_source_plan(params: &PhysicalParams, cfg: &PlanConfig) -> Result<PulsePlan> {
    let mut b = Builder::new(params, cfg)?;
    b.pulse(Mode::A, PI / 2.0)?;
    b.pulse(Mode::B, PI)?;
    b.freeze(AtomRole::Source)
}

/// π pulse on M_a, π/2 pulse on M_b, then freeze.
pub fn compile_probe_plan(params: &PhysicalParams, cfg: &PlanConfig) -> Result<PulsePlan> {
    let mut b = Builder::new(params, cfg)?;
    b.pulse(Mode::A, PI)?;
    b.pulse(Mode::B, PI / 2.0)?;
    b.freeze(AtomRole::Probe)
}

/// π pulse on M_b, off-resonant hold carrying the conditional phase on M_a,
/// π pulse on M_b, then freeze.
///
/// The hold length makes the phase of the `|e, 0_b⟩` excursion (relative to
/// a free photon in M_b) an odd multiple of π, which cancels the sign of the
/// 2π rotation.
pub fn compile_phase_gate_plan(
    params: &PhysicalParams,
    cfg: &PlanConfig,
    gate_phase: f64,
) -> Result<PulsePlan> {
    if !gate_phase.is_finite() {
        return domain("gate phase must be finite");
    }
    let mut b = Builder::new(params, cfg)?;
    b.pulse(Mode::B, PI)?;
    let rate = cfg.freeze_detuning + params.delta;
    if rate.abs() < 1e-9 {
        return domain("hold detuning coincides with M_b");
    }
    // Each ramp between −δ and the hold detuning accrues rate·ramp/2.
    let ramps = if cfg.ramp_time > 0.0 { cfg.ramp_time } else { 0.0 };
    let period = 2.0 * PI / rate.abs();
    let mut tau = (PI / rate - ramps).rem_euclid(period);
    if tau < 1e-12 {
        tau += period;
    }
    b.hold(tau, Some(gate_phase))?;
    b.pulse(Mode::B, PI)?;
    b.freeze(AtomRole::Gate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::erf::erf;

    fn kilo(x: f64) -> f64 {
        x / (2.0 * PI * 1e3)
    }

    #[test]
    fn stark_examples() {
        let c = StarkCalib::default();
        assert!((c.zero_field_offset - 17_238.0).abs() < 1.0);
        assert!(detuning_from_field(0.26, &c).unwrap().abs() < 1e-6);
        let d76 = kilo(detuning_from_field(0.76, &c).unwrap());
        assert!((d76 - (17.238 - 255.0 * 0.5776)).abs() < 1e-3);
        assert!(((d76 + 128.3) / 128.3).abs() < 0.03);
        let d11 = kilo(detuning_from_field(1.1, &c).unwrap());
        assert!((d11 - (17.238 - 255.0 * 1.21)).abs() < 1e-3);
        assert!(detuning_from_field(-0.1, &c).is_err());
        let f = c.field_for(detuning_from_field(0.9, &c).unwrap()).unwrap();
        assert!((f - 0.9).abs() < 1e-12);
    }

    #[test]
    fn stark_shift_decreases_with_field() {
        let c = StarkCalib::default();
        let mut last = f64::INFINITY;
        for k in 0..200 {
            let d = detuning_from_field(k as f64 * 0.01, &c).unwrap();
            assert!(d < last);
            last = d;
        }
    }

    #[test]
    fn durations() {
        let om = 2.0 * PI * 47e3;
        assert!((pulse_duration(PI / 2.0, om).unwrap() - 5.319149e-6).abs() < 1e-11);
        assert!((pulse_duration(PI, om).unwrap() - 10.638298e-6).abs() < 1e-11);
        assert_eq!(pulse_duration(0.0, om).unwrap(), 0.0);
        assert!(pulse_duration(1.0, 0.0).is_err());
    }

    fn gaussian_area_oracle(p: &PhysicalParams, prof: &CouplingProfile, t0: f64, t1: f64) -> f64 {
        let tw = p.waist_time();
        let z = |t: f64| (t - prof.t_center) / tw;
        p.omega_rabi * tw * PI.sqrt() / 2.0 * (erf(z(t1)) - erf(z(t0)))
    }

    #[test]
    fn areas() {
        let p = PhysicalParams::default();
        let c = CouplingProfile::constant();
        assert_eq!(pulse_area(&c, &p, 1e-6, 4e-6).unwrap(), p.omega_rabi * 3e-6);
        let g = CouplingProfile::gaussian(60e-6);
        let (lo, hi) = g.transit_window(&p);
        let full = pulse_area(&g, &p, lo, hi).unwrap();
        assert!((full - 6.245).abs() < 5e-3);
        assert!((full - p.omega_rabi * PI.sqrt() * p.waist_time()).abs() < 1e-9);
        for (a, b) in [(lo, 50e-6), (55e-6, 70e-6), (62e-6, hi), (lo, lo + 1e-7)] {
            let q = pulse_area(&g, &p, a, b).unwrap();
            assert!((q - gaussian_area_oracle(&p, &g, a, b)).abs() < 1e-9);
        }
        assert_eq!(pulse_area(&g, &p, 3e-6, 3e-6).unwrap(), 0.0);
        assert!(pulse_area(&g, &p, 3e-6, 2e-6).is_err());
    }

    #[test]
    fn window_round_trips() {
        let p = PhysicalParams::default();
        let c = CouplingProfile { kind: ProfileKind::Constant, t_center: 60e-6 };
        let (a, b) = solve_pulse_window(&c, &p, PI / 2.0, Anchor::Start(1e-6)).unwrap();
        assert!((b - a - 5.319149e-6).abs() < 1e-11);
        let g = CouplingProfile::gaussian(60e-6);
        for prof in [c, g] {
            for target in [0.3, PI / 2.0, PI, 3.0] {
                for anchor in [Anchor::Centered(60e-6), Anchor::Start(40e-6), Anchor::End(75e-6)] {
                    let (a, b) = solve_pulse_window(&prof, &p, target, anchor).unwrap();
                    let area = pulse_area(&prof, &p, a, b).unwrap();
                    assert!((area - target).abs() < 1e-6, "{target} {anchor:?}");
                }
            }
        }
        let (a, b) = solve_pulse_window(&g, &p, PI, Anchor::Centered(60e-6)).unwrap();
        assert!(((a + b) / 2.0 - 60e-6).abs() < 1e-15);
        assert!((gaussian_area_oracle(&p, &g, a, b) - PI).abs() < 1e-8);
        let (a, b) = solve_pulse_window(&g, &p, 0.0, Anchor::Start(10e-6)).unwrap();
        assert_eq!(a, b);
        assert!(solve_pulse_window(&g, &p, 6.3, Anchor::Centered(60e-6)).is_err());
    }

    fn check_contiguous(plan: &PulsePlan, p: &PhysicalParams) {
        plan.validate().unwrap();
        assert_eq!(plan.segments[0].t_start, 0.0);
        assert!((plan.end_time() - 10.0 * p.waist_time()).abs() < 1e-15);
    }

    #[test]
    fn constant_plans() {
        let p = PhysicalParams::default();
        let cfg = PlanConfig::default();
        let s = compile_source_plan(&p, &cfg).unwrap();
        check_contiguous(&s, &p);
        let d: Vec<f64> = s.segments.iter().map(|x| x.duration() * 1e6).collect();
        assert!((d[0] - 5.319149).abs() < 1e-5 && (d[1] - 10.638298).abs() < 1e-5);
        assert_eq!(s.segments[2].kind, SegmentKind::Freeze);
        assert_eq!(s.segments[1].detuning_start, -p.delta);

        let q = compile_probe_plan(&p, &cfg).unwrap();
        check_contiguous(&q, &p);
        let d: Vec<f64> = q.segments.iter().map(|x| x.duration() * 1e6).collect();
        assert!((d[0] - 10.638298).abs() < 1e-5 && (d[1] - 5.319149).abs() < 1e-5);

        let ramped = PlanConfig { ramp_time: 1e-6, ..cfg };
        let r = compile_source_plan(&p, &ramped).unwrap();
        check_contiguous(&r, &p);
        let kinds: Vec<_> = r.segments.iter().map(|x| x.kind).collect();
        assert_eq!(kinds[1], SegmentKind::Ramp);
        assert_eq!(kinds[3], SegmentKind::Ramp);
        assert_eq!(r.segments[1].detuning_start, 0.0);
        assert_eq!(r.segments[1].detuning_end, -p.delta);
    }

    #[test]
    fn gaussian_source_geometry() {
        let p = PhysicalParams::default();
        let cfg = PlanConfig { profile: ProfileKind::Gaussian, isolation: false, ..Default::default() };
        let s = compile_source_plan(&p, &cfg).unwrap();
        check_contiguous(&s, &p);
        let tc = 5.0 * p.waist_time();
        let b = &s.segments[1];
        // π/2 ends a little under 3 mm before the axis; the M_b π window lasts ≈ 12 μs.
        let before_mm = (tc - b.t_start) * p.velocity * 1e3;
        assert!(before_mm > 2.5 && before_mm < 3.0, "{before_mm}");
        assert!(((b.duration() - 12e-6) / 12e-6).abs() < 0.1, "{}", b.duration());
        let prof = cfg.profile(&p);
        let area = pulse_area(&prof, &p, b.t_start, b.t_end).unwrap();
        assert!((area - PI).abs() < 1e-6);
        assert!(compile_probe_plan(&p, &cfg).is_ok());
        assert!(compile_phase_gate_plan(&p, &cfg, PI).is_err());
    }

    #[test]
    fn gate_plan_structure() {
        let p = PhysicalParams::default();
        for ramp in [0.0, 1e-6] {
            let cfg = PlanConfig { ramp_time: ramp, ..Default::default() };
            let g = compile_phase_gate_plan(&p, &cfg, PI).unwrap();
            check_contiguous(&g, &p);
            let hold = g.segments.iter().find(|s| matches!(s.kind, SegmentKind::Hold { .. })).unwrap();
            assert_eq!(hold.kind, SegmentKind::Hold { kick: Some(PI) });
            let pulses: Vec<usize> = (0..g.segments.len())
                .filter(|&i| matches!(g.segments[i].kind, SegmentKind::Pulse { .. }))
                .collect();
            assert_eq!(pulses.len(), 2);
            let excursion: f64 = g.segments[pulses[0] + 1..pulses[1]]
                .iter()
                .map(|s| s.drive().detuning_integral() + p.delta * s.duration())
                .sum();
            let r = (excursion - PI).rem_euclid(2.0 * PI);
            assert!(r.min(2.0 * PI - r) < 1e-9, "{r} {excursion}");
        }
    }

    #[test]
    fn listing_format() {
        let p = PhysicalParams::default();
        let s = compile_source_plan(&p, &PlanConfig::default()).unwrap();
        let text = s.listing();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2 + s.segments.len());
        assert_eq!(lines[2], "0.000000 5.319149 0.000000 0.000000 pulse_a(1.570796) constant true");
        assert!(lines[4].ends_with("freeze constant true"));
        assert!(lines[4].contains("-278.000000 -278.000000"));
    }

    #[test]
    fn shifting_moves_everything() {
        let p = PhysicalParams::default();
        let cfg = PlanConfig { profile: ProfileKind::Gaussian, ..Default::default() };
        let s = compile_probe_plan(&p, &cfg).unwrap();
        let t = s.shifted(100e-6);
        t.validate().unwrap();
        assert_eq!(t.injection_time, 100e-6);
        assert!((t.segments[0].profile.t_center - s.segments[0].profile.t_center - 100e-6).abs() < 1e-18);
        assert!((t.active_end() - s.active_end() - 100e-6).abs() < 1e-15);
    }
}
