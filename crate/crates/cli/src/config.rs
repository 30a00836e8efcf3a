//! Flat `key = value` run configuration. Times are in μs, frequencies in
//! kHz (cyclic); everything is converted to SI angular units when a
//! [`Setup`] is built.

use std::f64::consts::PI;
use std::fmt::Write as _;

use cqed_core::{
    DetectorModel, Error, Method, ModeDims, PhysicalParams, PlanConfig, ProfileKind, PropagatorConfig, Result,
    SampleModel, Setup, StarkCalib,
};

const TAU: f64 = 2.0 * PI;

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub omega_rabi_khz: f64,
    pub delta_khz: f64,
    pub t_r_a_us: f64,
    pub t_r_b_us: f64,
    pub n_bar_a: f64,
    pub n_bar_b: f64,
    pub n_bar_erased: f64,
    pub velocity_m_s: f64,
    pub waist_mm: f64,
    pub coupling_phase_a: f64,
    pub coupling_phase_b: f64,

    pub stark_coeff_khz: f64,
    pub stark_offset_khz: f64,
    pub freeze_detuning_khz: f64,
    pub ramp_time_us: f64,

    pub p_error: f64,
    pub p_miss: f64,
    pub mean_atoms: f64,
    pub repetition_rate_hz: f64,

    pub n_max_a: usize,
    pub n_max_b: usize,
    pub dt_max_us: f64,
    pub method: Method,
    pub tolerance: f64,
    pub energy_offset_khz: f64,
    /// Unset: each scenario picks its own (idealized for `ideal` and
    /// `gate`, full model otherwise).
    pub profile: Option<ProfileKind>,
    pub isolation: Option<bool>,

    pub windows: Vec<(f64, f64)>,
    pub t_step_us: f64,
    pub n_sequences: u64,
    pub seed: u64,
    pub gate_phase: f64,
    pub nominal_n: u64,
}

impl Default for Config {
    fn default() -> Self {
        let p = PhysicalParams::default();
        let stark = StarkCalib::default();
        let plan = PlanConfig::default();
        let prop = PropagatorConfig::default();
        let det = DetectorModel::default();
        let smp = SampleModel::default();
        let dims = ModeDims::default();
        Self {
            omega_rabi_khz: p.omega_rabi / TAU * 1e-3,
            delta_khz: p.delta / TAU * 1e-3,
            t_r_a_us: 1e6 / p.kappa_a,
            t_r_b_us: 1e6 / p.kappa_b,
            n_bar_a: p.n_bar_a,
            n_bar_b: p.n_bar_b,
            n_bar_erased: p.n_bar_erased,
            velocity_m_s: p.velocity,
            waist_mm: p.waist * 1e3,
            coupling_phase_a: p.coupling_phase_a,
            coupling_phase_b: p.coupling_phase_b,
            stark_coeff_khz: stark.quad_coeff * 1e-3,
            stark_offset_khz: stark.zero_field_offset * 1e-3,
            freeze_detuning_khz: plan.freeze_detuning / TAU * 1e-3,
            ramp_time_us: plan.ramp_time * 1e6,
            p_error: det.p_error,
            p_miss: det.p_miss,
            mean_atoms: smp.mean_atoms,
            repetition_rate_hz: smp.repetition_rate,
            n_max_a: dims.n_max_a(),
            n_max_b: dims.n_max_b(),
            dt_max_us: prop.dt_max * 1e6,
            method: prop.method,
            tolerance: prop.tolerance,
            energy_offset_khz: 0.0,
            profile: None,
            isolation: None,
            windows: vec![(70.0, 110.0), (230.0, 270.0), (430.0, 470.0), (670.0, 710.0)],
            t_step_us: 1.0,
            n_sequences: 2000,
            seed: 1,
            gate_phase: PI,
            nominal_n: 2000,
        }
    }
}

/// Parse `"a..b,c..d"` (μs).
pub fn parse_windows(s: &str) -> Result<Vec<(f64, f64)>> {
    let bad = || Error::Parse(format!("windows must look like \"70..110,230..270\", got {s:?}"));
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (a, b) = part.split_once("..").ok_or_else(bad)?;
        let a: f64 = a.trim().parse().map_err(|_| bad())?;
        let b: f64 = b.trim().parse().map_err(|_| bad())?;
        if !(a.is_finite() && b.is_finite() && b >= a) {
            return Err(bad());
        }
        out.push((a, b));
    }
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

fn format_windows(w: &[(f64, f64)]) -> String {
    w.iter().map(|(a, b)| format!("{a}..{b}")).collect::<Vec<_>>().join(",")
}

fn profile_name(p: ProfileKind) -> &'static str {
    match p {
        ProfileKind::Constant => "constant",
        ProfileKind::Gaussian => "gaussian",
    }
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Rk4 => "rk4",
        Method::Adaptive => "adaptive",
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Parse(format!("{key}: cannot parse {v:?}")))
}

fn flag(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "on" | "yes" => Ok(true),
        "false" | "off" | "no" => Ok(false),
        _ => Err(Error::Parse(format!("{key}: expected true or false, got {v:?}"))),
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Self::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", no + 1)))?;
            c.set(key.trim(), value.trim()).map_err(|e| match e {
                Error::Parse(m) => Error::Parse(format!("line {}: {m}", no + 1)),
                other => other,
            })?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "omega_rabi_khz" => self.omega_rabi_khz = num(key, v)?,
            "delta_khz" => self.delta_khz = num(key, v)?,
            "t_r_a_us" => self.t_r_a_us = num(key, v)?,
            "t_r_b_us" => self.t_r_b_us = num(key, v)?,
            "n_bar_a" => self.n_bar_a = num(key, v)?,
            "n_bar_b" => self.n_bar_b = num(key, v)?,
            "n_bar_erased" => self.n_bar_erased = num(key, v)?,
            "velocity_m_s" => self.velocity_m_s = num(key, v)?,
            "waist_mm" => self.waist_mm = num(key, v)?,
            "coupling_phase_a" => self.coupling_phase_a = num(key, v)?,
            "coupling_phase_b" => self.coupling_phase_b = num(key, v)?,
            "stark_coeff_khz" => self.stark_coeff_khz = num(key, v)?,
            "stark_offset_khz" => self.stark_offset_khz = num(key, v)?,
            "freeze_detuning_khz" => self.freeze_detuning_khz = num(key, v)?,
            "ramp_time_us" => self.ramp_time_us = num(key, v)?,
            "p_error" => self.p_error = num(key, v)?,
            "p_miss" => self.p_miss = num(key, v)?,
            "mean_atoms" => self.mean_atoms = num(key, v)?,
            "repetition_rate_hz" => self.repetition_rate_hz = num(key, v)?,
            "n_max_a" => self.n_max_a = num(key, v)?,
            "n_max_b" => self.n_max_b = num(key, v)?,
            "dt_max_us" => self.dt_max_us = num(key, v)?,
            "method" => {
                self.method = match v {
                    "rk4" => Method::Rk4,
                    "adaptive" => Method::Adaptive,
                    _ => return Err(Error::Parse(format!("method: expected rk4 or adaptive, got {v:?}"))),
                }
            }
            "tolerance" => self.tolerance = num(key, v)?,
            "energy_offset_khz" => self.energy_offset_khz = num(key, v)?,
            "profile" => {
                self.profile = match v {
                    "auto" => None,
                    "constant" => Some(ProfileKind::Constant),
                    "gaussian" => Some(ProfileKind::Gaussian),
                    _ => return Err(Error::Parse(format!("profile: expected constant, gaussian or auto, got {v:?}"))),
                }
            }
            "isolation" => self.isolation = if v == "auto" { None } else { Some(flag(key, v)?) },
            "windows" => self.windows = parse_windows(v)?,
            "t_step_us" => self.t_step_us = num(key, v)?,
            "n_sequences" => self.n_sequences = num(key, v)?,
            "seed" => self.seed = num(key, v)?,
            "gate_phase" => self.gate_phase = num(key, v)?,
            "nominal_n" => self.nominal_n = num(key, v)?,
            _ => return Err(Error::Parse(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Every key, in a fixed order; [`Config::parse`] reads it back exactly.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("omega_rabi_khz", self.omega_rabi_khz.to_string());
        kv("delta_khz", self.delta_khz.to_string());
        kv("t_r_a_us", self.t_r_a_us.to_string());
        kv("t_r_b_us", self.t_r_b_us.to_string());
        kv("n_bar_a", self.n_bar_a.to_string());
        kv("n_bar_b", self.n_bar_b.to_string());
        kv("n_bar_erased", self.n_bar_erased.to_string());
        kv("velocity_m_s", self.velocity_m_s.to_string());
        kv("waist_mm", self.waist_mm.to_string());
        kv("coupling_phase_a", self.coupling_phase_a.to_string());
        kv("coupling_phase_b", self.coupling_phase_b.to_string());
        kv("stark_coeff_khz", self.stark_coeff_khz.to_string());
        kv("stark_offset_khz", self.stark_offset_khz.to_string());
        kv("freeze_detuning_khz", self.freeze_detuning_khz.to_string());
        kv("ramp_time_us", self.ramp_time_us.to_string());
        kv("p_error", self.p_error.to_string());
        kv("p_miss", self.p_miss.to_string());
        kv("mean_atoms", self.mean_atoms.to_string());
        kv("repetition_rate_hz", self.repetition_rate_hz.to_string());
        kv("n_max_a", self.n_max_a.to_string());
        kv("n_max_b", self.n_max_b.to_string());
        kv("dt_max_us", self.dt_max_us.to_string());
        kv("method", method_name(self.method).into());
        kv("tolerance", self.tolerance.to_string());
        kv("energy_offset_khz", self.energy_offset_khz.to_string());
        kv("profile", self.profile.map_or("auto", profile_name).into());
        kv("isolation", self.isolation.map_or("auto".into(), |b| b.to_string()));
        kv("windows", format_windows(&self.windows));
        kv("t_step_us", self.t_step_us.to_string());
        kv("n_sequences", self.n_sequences.to_string());
        kv("seed", self.seed.to_string());
        kv("gate_phase", self.gate_phase.to_string());
        kv("nominal_n", self.nominal_n.to_string());
        s
    }

    pub fn params(&self) -> PhysicalParams {
        PhysicalParams {
            omega_rabi: TAU * self.omega_rabi_khz * 1e3,
            delta: TAU * self.delta_khz * 1e3,
            kappa_a: 1e6 / self.t_r_a_us,
            kappa_b: 1e6 / self.t_r_b_us,
            n_bar_a: self.n_bar_a,
            n_bar_b: self.n_bar_b,
            n_bar_erased: self.n_bar_erased,
            velocity: self.velocity_m_s,
            waist: self.waist_mm * 1e-3,
            coupling_phase_a: self.coupling_phase_a,
            coupling_phase_b: self.coupling_phase_b,
        }
    }

    pub fn stark(&self) -> StarkCalib {
        StarkCalib { quad_coeff: self.stark_coeff_khz * 1e3, zero_field_offset: self.stark_offset_khz * 1e3 }
    }

    pub fn detector(&self) -> DetectorModel {
        DetectorModel { p_error: self.p_error, p_miss: self.p_miss }
    }

    pub fn samples(&self) -> SampleModel {
        SampleModel { mean_atoms: self.mean_atoms, repetition_rate: self.repetition_rate_hz }
    }

    /// Simulation setup; `idealized` chooses the profile and isolation when
    /// the config leaves them unset.
    pub fn setup(&self, idealized: bool) -> Result<Setup> {
        let base = if idealized { Setup::idealized() } else { Setup::full_model() };
        let isolation = self.isolation.unwrap_or(base.propagator.idealized_isolation);
        let setup = Setup {
            params: self.params(),
            dims: ModeDims::new(self.n_max_a, self.n_max_b)?,
            plan: PlanConfig {
                profile: self.profile.unwrap_or(base.plan.profile),
                ramp_time: self.ramp_time_us * 1e-6,
                freeze_detuning: TAU * self.freeze_detuning_khz * 1e3,
                isolation,
            },
            propagator: PropagatorConfig {
                dt_max: self.dt_max_us * 1e-6,
                method: self.method,
                idealized_isolation: isolation,
                tolerance: self.tolerance,
                energy_offset: TAU * self.energy_offset_khz * 1e3,
            },
        };
        setup.validate()?;
        Ok(setup)
    }

    pub fn validate(&self) -> Result<()> {
        self.setup(false)?;
        self.stark().validate()?;
        self.detector().validate()?;
        self.samples().validate()?;
        if self.t_step_us.is_nan() || self.t_step_us <= 0.0 {
            return Err(Error::Domain("t_step_us must be positive".into()));
        }
        if self.n_sequences == 0 || self.nominal_n == 0 {
            return Err(Error::Domain("n_sequences and nominal_n must be positive".into()));
        }
        if !self.gate_phase.is_finite() {
            return Err(Error::Domain("gate_phase must be finite".into()));
        }
        Ok(())
    }
}
