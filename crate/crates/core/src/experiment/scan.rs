//! Master-equation P_e(T) over many delays at the cost of one forward pass
//! for the source and one backward (Heisenberg) pass for the probe.
//!
//! The rotating-frame generator has no explicit time dependence beyond the
//! atom's own plan, so the probe map is the same for every delay: its effect
//! operator `E` (the probe-entry observable whose expectation is the final
//! e-population) is computed once and paired with the mode state at each T.

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{erased_initial_state, evolve_mixed, expectation, project_atom, Setup};
use crate::dynamics::{dispersive_phase, free_evolve, propagate_observable};
use crate::error::Result;
use crate::hilbert::{thermal_modes, Atom, DensityOp, Layout, Mode, C64};
use crate::schedule::{PulsePlan, SegmentKind};

/// Conditional probabilities for one delay.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BranchProbabilities {
    pub t: f64,
    /// Probability that the source atom is found in g.
    pub source_g: f64,
    /// Probe e-probability given the source was in g.
    pub pe_given_g: f64,
    /// Probe e-probability given the source was in e.
    pub pe_given_e: f64,
}

/// Observable at probe injection (t = 0 of the probe clock) whose
/// expectation equals the probe's final e-population.
pub fn probe_effect(setup: &Setup) -> Result<DMatrix<C64>> {
    let probe = setup.probe_plan(0.0)?;
    let dims = setup.dims;
    let half = dims.total() / 2;
    let mut obs = DMatrix::<C64>::zeros(dims.total(), dims.total());
    for i in half..dims.total() {
        obs[(i, i)] = C64::new(1.0, 0.0);
    }
    for seg in probe.segments.iter().rev() {
        if let SegmentKind::Hold { kick: Some(phi) } = seg.kind {
            // K† O K with K = diag(e^{i n φ}) on excited states.
            let op = DensityOp::new(Layout::full(dims), obs)?;
            obs = dispersive_phase(&op, -phi, Mode::A).into_matrix();
        }
        obs = propagate_observable(&obs, dims, &seg.drive(), &setup.params, &setup.dissipation(), &setup.propagator)?;
    }
    Ok(obs)
}

struct Cursor<'a> {
    plan: &'a PulsePlan,
    seg: usize,
    t: f64,
    rho: DensityOp,
}

impl Cursor<'_> {
    fn advance(&mut self, target: f64, setup: &Setup) -> Result<()> {
        while let Some(s) = self.plan.segments.get(self.seg) {
            let b = s.t_end.min(target);
            if b > self.t {
                self.rho = evolve_mixed(&self.rho, s, self.t, b, setup)?;
                self.t = b;
            }
            if self.t >= s.t_end {
                self.seg += 1;
            } else {
                break;
            }
        }
        Ok(())
    }
}

/// Branch probabilities at each delay in `times` (any order). Without the
/// source atom the modes simply relax from the erased state until the probe
/// enters.
pub fn master_scan(times: &[f64], setup: &Setup, with_source: bool) -> Result<Vec<BranchProbabilities>> {
    setup.validate()?;
    let effect = probe_effect(setup)?;
    let diss = setup.dissipation();
    let n = setup.params.n_bar_erased;

    // (read-out time, P_g, modes | g, modes | e) per delay.
    let mut readouts: Vec<(f64, f64, DensityOp, DensityOp)> = Vec::with_capacity(times.len());
    if with_source {
        let source = setup.source_plan()?;
        for &t in times {
            setup.check_delay(&source, t)?;
        }
        let mut order: Vec<usize> = (0..times.len()).collect();
        order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
        let mut cursor = Cursor { plan: &source, seg: 0, t: 0.0, rho: erased_initial_state(setup)? };
        let mut slots: Vec<Option<(f64, f64, DensityOp, DensityOp)>> = vec![None; times.len()];
        let mut last: Option<(f64, (f64, f64, DensityOp, DensityOp))> = None;
        for &i in &order {
            let t_read = times[i].min(source.end_time());
            let entry = match &last {
                Some((t, e)) if *t == t_read => e.clone(),
                _ => {
                    cursor.advance(t_read, setup)?;
                    let (pg, g) = project_atom(&cursor.rho, Atom::G)?;
                    let e = project_atom(&cursor.rho, Atom::E).map(|x| x.1).unwrap_or_else(|_| g.clone());
                    let e = (t_read, pg, g, e);
                    last = Some((t_read, e.clone()));
                    e
                }
            };
            slots[i] = Some(entry);
        }
        readouts.extend(slots.into_iter().map(|s| s.expect("every delay visited")));
    } else {
        let modes = thermal_modes(n, n, setup.dims)?;
        for _ in times {
            readouts.push((0.0, 1.0, modes.clone(), modes.clone()));
        }
    }

    times
        .par_iter()
        .zip(readouts.par_iter())
        .map(|(&t, (t_read, pg, g, e))| {
            let branch = |m: &DensityOp| -> Result<f64> {
                let rho = free_evolve(&m.with_atom(Atom::G)?, t - t_read, 0.0, &setup.params, &diss)?;
                Ok(expectation(&effect, rho.matrix()))
            };
            let pe_given_g = branch(g)?;
            let pe_given_e = if with_source { branch(e)? } else { pe_given_g };
            Ok(BranchProbabilities { t, source_g: *pg, pe_given_g, pe_given_e })
        })
        .collect()
}
