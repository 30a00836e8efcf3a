//! Binomial errors, the shared-phase multi-window beat fit and contrast decay.
//!
//! Within window i the model is `p(T) = o_i + (c_i/2)·cos(δT + Φ)` with δ
//! fixed. For a given Φ the model is linear in `(o_i, c_i)`, so the fit scans
//! Φ on a fine grid, solves the per-window 2×2 weighted least-squares
//! problems from sufficient statistics, then polishes Φ with a safeguarded
//! Newton iteration on the profiled χ².

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::experiment::{DataPoint, RunDataset};

/// Standard error of a binomial proportion, with a `1/n` floor when the
/// observed proportion is 0 or 1.
pub fn binomial_stderr(n_e: u64, n_selected: u64) -> Result<f64> {
    if n_selected == 0 {
        return domain("binomial error undefined for zero selected events");
    }
    if n_e > n_selected {
        return domain(format!("n_e = {n_e} exceeds n_selected = {n_selected}"));
    }
    let n = n_selected as f64;
    let p = n_e as f64 / n;
    if n_e == 0 || n_e == n_selected {
        return Ok(1.0 / n);
    }
    Ok((p * (1.0 - p) / n).sqrt())
}

/// Same rule for an exactly known probability and a nominal sample size.
pub fn nominal_stderr(p: f64, n: u64) -> f64 {
    let n = n.max(1) as f64;
    let s = (p * (1.0 - p) / n).max(0.0).sqrt();
    s.max(1.0 / n)
}

#[derive(Clone, Debug, PartialEq)]
pub struct WindowFit {
    pub window: usize,
    pub contrast: f64,
    pub offset: f64,
    pub contrast_stderr: f64,
    pub offset_stderr: f64,
    /// Midpoint of the window's T range (s).
    pub t_center: f64,
    pub n_points: usize,
}

impl WindowFit {
    /// A contrast is physically meaningful in [0, 1] (reported unclamped).
    pub fn contrast_valid(&self) -> bool {
        self.contrast.is_finite() && self.contrast >= 0.0 && self.contrast <= 1.0 + 1e-6
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitReport {
    /// Shared phase in [0, 2π).
    pub phi: f64,
    pub phi_stderr: f64,
    pub windows: Vec<WindowFit>,
    pub chi2: f64,
    pub dof: usize,
    pub converged: bool,
    pub iterations: usize,
    /// dχ²/dΦ at the returned phase.
    pub gradient: f64,
}

#[derive(Serialize)]
struct WindowJson {
    window: usize,
    contrast: f64,
    offset: f64,
    t_center_us: f64,
}

#[derive(Serialize)]
struct ReportJson {
    phi_rad: f64,
    windows: Vec<WindowJson>,
    chi2: f64,
    converged: bool,
    iterations: usize,
}

impl FitReport {
    pub fn chi2_per_dof(&self) -> f64 {
        if self.dof == 0 {
            f64::NAN
        } else {
            self.chi2 / self.dof as f64
        }
    }

    pub fn to_json(&self) -> String {
        let doc = ReportJson {
            phi_rad: self.phi,
            windows: self
                .windows
                .iter()
                .map(|w| WindowJson {
                    window: w.window,
                    contrast: w.contrast,
                    offset: w.offset,
                    t_center_us: w.t_center * 1e6,
                })
                .collect(),
            chi2: self.chi2,
            converged: self.converged,
            iterations: self.iterations,
        };
        serde_json::to_string_pretty(&doc).expect("plain numbers serialize")
    }

    /// Fitted probability for window `window` at time `t`.
    pub fn model(&self, window: usize, t: f64, delta: f64) -> Option<f64> {
        let w = self.windows.iter().find(|w| w.window == window)?;
        Some(w.offset + 0.5 * w.contrast * (delta * t + self.phi).cos())
    }
}

/// Weighted sums over one window with x = cos δT, y = sin δT.
#[derive(Clone, Debug, Default)]
struct Stats {
    w: f64,
    x: f64,
    y: f64,
    xx: f64,
    yy: f64,
    xy: f64,
    p: f64,
    px: f64,
    py: f64,
    pp: f64,
}

struct Window {
    id: usize,
    /// (x, y, p, weight) per point, sorted by T.
    pts: Vec<(f64, f64, f64, f64)>,
    stats: Stats,
    t_center: f64,
}

impl Window {
    fn new(id: usize, mut points: Vec<&DataPoint>, delta: f64) -> Result<Self> {
        points.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.p_e.total_cmp(&b.p_e)));
        let mut s = Stats::default();
        let mut pts = Vec::with_capacity(points.len());
        for d in &points {
            let (y, x) = (delta * d.t).sin_cos();
            let wt = 1.0 / (d.stderr * d.stderr);
            let p = d.p_e;
            s.w += wt;
            s.x += wt * x;
            s.y += wt * y;
            s.xx += wt * x * x;
            s.yy += wt * y * y;
            s.xy += wt * x * y;
            s.p += wt * p;
            s.px += wt * p * x;
            s.py += wt * p * y;
            s.pp += wt * p * p;
            pts.push((x, y, p, wt));
        }
        let var_x = s.xx / s.w - (s.x / s.w).powi(2);
        let var_y = s.yy / s.w - (s.y / s.w).powi(2);
        if var_x.abs() < 1e-12 && var_y.abs() < 1e-12 {
            return Err(Error::NonConvergence(format!(
                "window {id}: all T values coincide modulo the beat period"
            )));
        }
        let t_center = 0.5 * (points[0].t + points[points.len() - 1].t);
        Ok(Self { id, pts, stats: s, t_center })
    }

    /// (offset, half-contrast, χ²) at phase φ.
    fn solve(&self, phi: f64) -> (f64, f64, f64) {
        let s = &self.stats;
        let (sn, cs) = phi.sin_cos();
        let su = cs * s.x - sn * s.y;
        let suu = cs * cs * s.xx - 2.0 * cs * sn * s.xy + sn * sn * s.yy;
        let spu = cs * s.px - sn * s.py;
        let det = s.w * suu - su * su;
        let (o, a) = if det > 1e-12 * s.w * s.w {
            ((s.p * suu - su * spu) / det, (s.w * spu - su * s.p) / det)
        } else {
            (s.p / s.w, 0.0)
        };
        let chi2 = (s.pp - o * s.p - a * spu).max(0.0);
        (o, a, chi2)
    }

    /// Exact residual sums at phase φ: (χ², dχ²/dφ) with (o, a) profiled.
    fn residual_terms(&self, phi: f64) -> (f64, f64) {
        let (o, a, _) = self.solve(phi);
        let (sn, cs) = phi.sin_cos();
        let (mut chi2, mut grad) = (0.0, 0.0);
        for &(x, y, p, w) in &self.pts {
            let u = x * cs - y * sn;
            let du = -x * sn - y * cs;
            let r = p - o - a * u;
            chi2 += w * r * r;
            grad += -2.0 * w * r * a * du;
        }
        (chi2, grad)
    }
}

fn profile_chi2(windows: &[Window], phi: f64) -> f64 {
    windows.iter().map(|w| w.solve(phi).2).sum()
}

fn gradient(windows: &[Window], phi: f64) -> (f64, f64) {
    windows.iter().fold((0.0, 0.0), |(c, g), w| {
        let (ci, gi) = w.residual_terms(phi);
        (c + ci, g + gi)
    })
}

const SCAN_STEP: f64 = 1e-3;
const GRAD_TOL: f64 = 1e-10;

/// Shared-phase fit of every window in `dataset` at fixed angular frequency
/// `delta` (rad/s), weighted by 1/stderr².
pub fn fit_beat(dataset: &RunDataset, delta: f64) -> Result<FitReport> {
    if !(delta.is_finite() && delta > 0.0) {
        return domain("beat frequency must be positive");
    }
    let mut groups: BTreeMap<usize, Vec<&DataPoint>> = BTreeMap::new();
    for d in &dataset.points {
        if d.n_selected == 0 || !d.p_e.is_finite() || !(d.stderr > 0.0) {
            continue;
        }
        groups.entry(d.window).or_default().push(d);
    }
    if groups.is_empty() {
        return domain("no usable data points");
    }
    let mut windows = Vec::with_capacity(groups.len());
    for (id, pts) in groups {
        if pts.len() < 3 {
            return domain(format!("window {id} has {} usable points, need at least 3", pts.len()));
        }
        windows.push(Window::new(id, pts, delta)?);
    }

    let n_scan = (2.0 * PI / SCAN_STEP).ceil() as usize;
    let (mut best_k, mut best, mut worst) = (0usize, f64::INFINITY, 0.0f64);
    for k in 0..n_scan {
        let c = profile_chi2(&windows, k as f64 * SCAN_STEP);
        if c < best {
            best = c;
            best_k = k;
        }
        worst = worst.max(c);
    }
    // χ² is assembled from sums of size Σw·p², so differences below that
    // scale times a rounding margin carry no information about Φ.
    let scale: f64 = windows.iter().map(|w| w.stats.pp).sum();
    let identifiable = worst - best > 1e-9 * scale;

    let phi0 = best_k as f64 * SCAN_STEP;
    let (mut phi, g, iterations, converged) =
        refine(&windows, phi0, Some((phi0 - SCAN_STEP, phi0 + SCAN_STEP)));
    let converged = converged && identifiable;

    let mut params: Vec<(f64, f64)> = windows
        .iter()
        .map(|w| {
            let (o, a, _) = w.solve(phi);
            (o, a)
        })
        .collect();
    let chi2 = gradient(&windows, phi).0;
    let cov = covariance(&windows, phi, &params);

    let sum_c: f64 = params.iter().map(|p| p.1).sum();
    if sum_c < 0.0 {
        phi += PI;
        for p in &mut params {
            p.1 = -p.1;
        }
    }
    let phi = phi.rem_euclid(2.0 * PI);
    let n_points: usize = windows.iter().map(|w| w.pts.len()).sum();
    let n_params = 1 + 2 * windows.len();
    let err = |k: usize| cov.as_ref().map_or(f64::NAN, |c| c[(k, k)].max(0.0).sqrt());

    Ok(FitReport {
        phi,
        phi_stderr: err(0),
        windows: windows
            .iter()
            .enumerate()
            .map(|(i, w)| WindowFit {
                window: w.id,
                offset: params[i].0,
                contrast: 2.0 * params[i].1,
                offset_stderr: err(1 + 2 * i),
                contrast_stderr: 2.0 * err(2 + 2 * i),
                t_center: w.t_center,
                n_points: w.pts.len(),
            })
            .collect(),
        chi2,
        dof: n_points.saturating_sub(n_params),
        converged,
        iterations,
        gradient: g,
    })
}

/// Newton iteration on dχ²/dΦ, falling back to bisection inside `bracket`
/// when the gradient changes sign across it. Returns (Φ, gradient,
/// iterations, converged).
fn refine(windows: &[Window], mut phi: f64, bracket: Option<(f64, f64)>) -> (f64, f64, usize, bool) {
    let bracket = bracket.filter(|&(lo, hi)| gradient(windows, lo).1 < 0.0 && gradient(windows, hi).1 > 0.0);
    let (mut lo, mut hi) = bracket.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    let mut g = gradient(windows, phi).1;
    for it in 0..200 {
        if g.abs() < GRAD_TOL {
            return (phi, g, it, true);
        }
        if g < 0.0 {
            lo = lo.max(phi);
        } else {
            hi = hi.min(phi);
        }
        let h = 1e-6;
        let curv = (gradient(windows, phi + h).1 - gradient(windows, phi - h).1) / (2.0 * h);
        let mut next = phi - g / curv;
        if !(curv > 0.0 && next > lo && next < hi) {
            if bracket.is_none() {
                return (phi, g, it, false);
            }
            next = 0.5 * (lo + hi);
        }
        let step = next - phi;
        phi = next;
        g = gradient(windows, phi).1;
        // Once steps reach the spacing of floating-point Φ the gradient is
        // at its rounding floor.
        if step.abs() <= 4.0 * f64::EPSILON * phi.abs().max(1.0) {
            return (phi, g, it + 1, true);
        }
    }
    (phi, g, 200, false)
}

/// Inverse of JᵀWJ over (Φ, o_1, a_1, o_2, a_2, …).
fn covariance(windows: &[Window], phi: f64, params: &[(f64, f64)]) -> Option<DMatrix<f64>> {
    let m = 1 + 2 * windows.len();
    let mut f = DMatrix::<f64>::zeros(m, m);
    let (sn, cs) = phi.sin_cos();
    for (i, w) in windows.iter().enumerate() {
        let a = params[i].1;
        let (io, ia) = (1 + 2 * i, 2 + 2 * i);
        for &(x, y, _, wt) in &w.pts {
            let u = x * cs - y * sn;
            let du = -x * sn - y * cs;
            let j = [(0, a * du), (io, 1.0), (ia, u)];
            for &(r, jr) in &j {
                for &(c, jc) in &j {
                    f[(r, c)] += wt * jr * jc;
                }
            }
        }
    }
    f.try_inverse()
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecayEstimate {
    /// Time constant of the contrast envelope (s).
    pub tau: f64,
    /// Windows left out because their contrast was not positive.
    pub excluded: Vec<usize>,
}

/// Fit `ln c_i = α − t_i/τ` over the windows of `report`; `centers[i]` is
/// the time assigned to `report.windows[i]`.
pub fn contrast_decay(report: &FitReport, centers: &[f64]) -> Result<DecayEstimate> {
    if centers.len() != report.windows.len() {
        return domain("one centre time per window is required");
    }
    let mut excluded = Vec::new();
    let mut pts = Vec::new();
    for (w, &t) in report.windows.iter().zip(centers) {
        if w.contrast > 0.0 && w.contrast.is_finite() {
            pts.push((t, w.contrast.ln()));
        } else {
            excluded.push(w.window);
        }
    }
    if pts.len() < 2 {
        return domain("contrast decay needs at least two windows with positive contrast");
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ml = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    if stt == 0.0 {
        return domain("window centres must differ");
    }
    let slope = pts.iter().map(|p| (p.0 - mt) * (p.1 - ml)).sum::<f64>() / stt;
    if !(slope < 0.0) {
        return Err(Error::Numerical(format!("contrast does not decay (slope {slope:.3e} per s)")));
    }
    Ok(DecayEstimate { tau: -1.0 / slope, excluded })
}
