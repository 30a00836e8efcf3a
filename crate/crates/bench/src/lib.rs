//! Shared fixtures for the benchmarks.

use std::f64::consts::PI;

use cqed_core::experiment::scan_windows;
use cqed_core::{DataPoint, ModeDims, RunDataset, Setup};

/// Full-model setup with a reduced Fock truncation.
pub fn small_setup(n_max: usize) -> Setup {
    let mut s = Setup::full_model();
    s.dims = ModeDims::new(n_max, n_max).expect("positive truncation");
    s
}

/// Noiseless four-window beat record with a decaying contrast.
pub fn beat_dataset(delta: f64) -> RunDataset {
    let windows = [(70e-6, 110e-6), (230e-6, 270e-6), (430e-6, 470e-6), (670e-6, 710e-6)];
    let points = scan_windows(&windows, 1e-6).expect("valid windows");
    let points = points
        .iter()
        .map(|p| {
            let c = 0.6 * (-p.t / 6e-4).exp();
            let pe = 0.35 + 0.5 * c * (delta * p.t + PI / 3.0).cos();
            let stderr = (pe * (1.0 - pe) / 1200.0).sqrt();
            DataPoint { t: p.t, window: p.window, n_selected: 1200, n_e: (pe * 1200.0).round() as u64, p_e: pe, stderr }
        })
        .collect();
    RunDataset { points }
}
