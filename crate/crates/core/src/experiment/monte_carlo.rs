//! Detection statistics: sample occupancy, detector errors and
//! post-selection applied to master-equation branch probabilities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{master_scan, BranchProbabilities, DataPoint, RunDataset, ScanPoint, Setup};
use crate::error::{domain, Result};

/// Misread probability that brings the full-model source g-readout to 86%
/// (see [`super::calibrate_p_error`]).
pub const DEFAULT_P_ERROR: f64 = 0.062_430_662;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectorModel {
    /// Probability of reading the wrong level.
    pub p_error: f64,
    /// Probability that a present atom is not detected.
    pub p_miss: f64,
}

impl Default for DetectorModel {
    fn default() -> Self {
        Self { p_error: DEFAULT_P_ERROR, p_miss: 0.13 }
    }
}

impl DetectorModel {
    pub fn perfect() -> Self {
        Self { p_error: 0.0, p_miss: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("p_error", self.p_error), ("p_miss", self.p_miss)] {
            if !(0.0..=1.0).contains(&p) {
                return domain(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleModel {
    /// Poisson mean of the atom number per sample.
    pub mean_atoms: f64,
    /// Samples per second.
    pub repetition_rate: f64,
}

impl Default for SampleModel {
    fn default() -> Self {
        Self { mean_atoms: 0.12, repetition_rate: 600.0 }
    }
}

impl SampleModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.mean_atoms > 0.0) || !self.mean_atoms.is_finite() {
            return domain("mean atom number must be positive");
        }
        if !(self.repetition_rate > 0.0) {
            return domain("repetition rate must be positive");
        }
        Ok(())
    }

    /// Probability that an occupied sample holds exactly one atom.
    pub fn single_atom_probability(&self) -> f64 {
        let m = self.mean_atoms;
        m * (-m).exp() / -(-m).exp_m1()
    }

    /// Wall-clock time to record `n_samples` samples (s).
    pub fn acquisition_time(&self, n_samples: u64) -> f64 {
        n_samples as f64 / self.repetition_rate
    }
}

/// Draw `n_sequences` detection sequences per point from `probs`.
///
/// Sequence `j` of point `k` uses the ChaCha8 stream `k·n_sequences + j` of
/// `seed`, so results do not depend on how points are scheduled.
pub fn sample_dataset(
    points: &[ScanPoint],
    probs: &[BranchProbabilities],
    n_sequences: u64,
    detector: &DetectorModel,
    samples: &SampleModel,
    seed: u64,
    with_source: bool,
) -> Result<RunDataset> {
    if n_sequences == 0 {
        return domain("n_sequences must be positive");
    }
    if points.len() != probs.len() {
        return domain("one probability record per scan point is required");
    }
    detector.validate()?;
    samples.validate()?;
    let single = samples.single_atom_probability();
    let keep = 1.0 - detector.p_miss;
    let flip = detector.p_error;

    let counted: Vec<(u64, u64)> = probs
        .par_iter()
        .enumerate()
        .map(|(k, b)| {
            let (mut n_sel, mut n_e) = (0u64, 0u64);
            for j in 0..n_sequences {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(k as u64 * n_sequences + j);
                let source_ok = !with_source || (rng.random_bool(single) && rng.random_bool(keep));
                let probe_ok = rng.random_bool(single) && rng.random_bool(keep);
                let src_g = !with_source || rng.random_bool(b.source_g.clamp(0.0, 1.0));
                let read_src_g = src_g != rng.random_bool(flip);
                let p = if src_g { b.pe_given_g } else { b.pe_given_e };
                let probe_e = rng.random_bool(p.clamp(0.0, 1.0));
                let read_probe_e = probe_e != rng.random_bool(flip);
                if !(source_ok && probe_ok) || (with_source && !read_src_g) {
                    continue;
                }
                n_sel += 1;
                n_e += read_probe_e as u64;
            }
            (n_sel, n_e)
        })
        .collect();

    let points = points
        .iter()
        .zip(counted)
        .map(|(&at, (n_sel, n_e))| DataPoint::counted(at, n_e, n_sel))
        .collect::<Result<Vec<_>>>()?;
    Ok(RunDataset { points })
}

/// Master-equation probabilities at every scan point, then detection
/// sampling.
pub fn run_monte_carlo(
    points: &[ScanPoint],
    n_sequences: u64,
    setup: &Setup,
    detector: &DetectorModel,
    samples: &SampleModel,
    seed: u64,
    with_source: bool,
) -> Result<RunDataset> {
    let times: Vec<f64> = points.iter().map(|p| p.t).collect();
    let probs = master_scan(&times, setup, with_source)?;
    sample_dataset(points, &probs, n_sequences, detector, samples, seed, with_source)
}
