//! Explicit Runge-Kutta integrators over flat complex buffers. Both accept
//! `t1 < t0` and then integrate backward in time.

use crate::error::{Error, Result};
use crate::hilbert::C64;

fn axpy_into(out: &mut [C64], y: &[C64], h: f64, terms: &[(&[C64], f64)]) {
    for i in 0..out.len() {
        let mut acc = C64::new(0.0, 0.0);
        for (k, w) in terms {
            acc += k[i] * *w;
        }
        out[i] = y[i] + acc * h;
    }
}

/// Classical fourth-order Runge-Kutta with the smallest uniform step not
/// exceeding `dt_max`. Returns the number of steps taken.
pub(crate) fn rk4<F>(y: &mut [C64], t0: f64, t1: f64, dt_max: f64, mut f: F) -> usize
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    let span = t1 - t0;
    if span == 0.0 {
        return 0;
    }
    let steps = (span.abs() / dt_max).ceil().max(1.0) as usize;
    let h = span / steps as f64;
    let n = y.len();
    let zero = C64::new(0.0, 0.0);
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
        (vec![zero; n], vec![zero; n], vec![zero; n], vec![zero; n], vec![zero; n]);
    for s in 0..steps {
        let t = t0 + h * s as f64;
        f(t, y, &mut k1);
        axpy_into(&mut tmp, y, h, &[(&k1, 0.5)]);
        f(t + 0.5 * h, &tmp, &mut k2);
        axpy_into(&mut tmp, y, h, &[(&k2, 0.5)]);
        f(t + 0.5 * h, &tmp, &mut k3);
        axpy_into(&mut tmp, y, h, &[(&k3, 1.0)]);
        f(t + h, &tmp, &mut k4);
        for i in 0..n {
            y[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
        }
    }
    steps
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] =
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Adaptive Dormand-Prince 5(4) with mixed absolute/relative error control;
/// steps never exceed `dt_max` in magnitude.
pub(crate) fn dopri5<F>(
    y: &mut [C64],
    t0: f64,
    t1: f64,
    dt_max: f64,
    tol: f64,
    mut f: F,
) -> Result<usize>
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(0);
    }
    let dir = span.signum();
    let n = y.len();
    let zero = C64::new(0.0, 0.0);
    let mut k: Vec<Vec<C64>> = (0..7).map(|_| vec![zero; n]).collect();
    let mut tmp = vec![zero; n];
    let mut y5 = vec![zero; n];
    let mut t = t0;
    let mut h = dt_max.min(span.abs());
    let mut accepted = 0usize;
    let h_min = span.abs() * 1e-14;

    while dir * (t1 - t) > 0.0 {
        h = h.min(dir * (t1 - t));
        let hs = dir * h;
        f(t, y, &mut k[0]);
        for stage in 1..7 {
            for i in 0..n {
                let mut acc = zero;
                for (j, kj) in k.iter().enumerate().take(stage) {
                    acc += kj[i] * A[stage][j];
                }
                tmp[i] = y[i] + acc * hs;
            }
            f(t + C[stage] * hs, &tmp, &mut k[stage]);
        }
        let mut err = 0.0f64;
        for i in 0..n {
            let mut a5 = zero;
            let mut a4 = zero;
            for s in 0..7 {
                a5 += k[s][i] * B5[s];
                a4 += k[s][i] * B4[s];
            }
            y5[i] = y[i] + a5 * hs;
            let e = ((a5 - a4) * hs).norm();
            let scale = tol + tol * y[i].norm().max(y5[i].norm());
            err = err.max(e / scale);
        }
        if err <= 1.0 || h <= h_min {
            y.copy_from_slice(&y5);
            t += hs;
            accepted += 1;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h = (h * factor).min(dt_max);
        if !h.is_finite() || h < h_min * 1e-3 {
            return Err(Error::Numerical("adaptive step size collapsed".into()));
        }
    }
    Ok(accepted)
}

#[cfg(test)]
mod tests {
    use super::*;

    // y' = -i ω y has the exact solution e^{-iωt}.
    fn rotate(omega: f64) -> impl FnMut(f64, &[C64], &mut [C64]) {
        move |_, y, dy| {
            for i in 0..y.len() {
                dy[i] = C64::new(0.0, -omega) * y[i];
            }
        }
    }

    #[test]
    fn rk4_matches_exponential() {
        let mut y = vec![C64::new(1.0, 0.0)];
        let steps = rk4(&mut y, 0.0, 1.0, 1e-3, rotate(2.0));
        assert_eq!(steps, 1000);
        assert!((y[0] - C64::from_polar(1.0, -2.0)).norm() < 1e-11);
        rk4(&mut y, 1.0, 0.0, 1e-3, rotate(2.0));
        assert!((y[0] - C64::new(1.0, 0.0)).norm() < 1e-11);
        assert_eq!(rk4(&mut y, 0.3, 0.3, 1e-3, rotate(2.0)), 0);
    }

    #[test]
    fn dopri5_matches_exponential_both_directions() {
        let mut y = vec![C64::new(1.0, 0.0), C64::new(0.0, 2.0)];
        dopri5(&mut y, 0.0, 3.0, 0.5, 1e-12, rotate(5.0)).unwrap();
        assert!((y[0] - C64::from_polar(1.0, -15.0)).norm() < 1e-9);
        dopri5(&mut y, 3.0, 0.0, 0.5, 1e-12, rotate(5.0)).unwrap();
        assert!((y[1] - C64::new(0.0, 2.0)).norm() < 1e-9);
    }
}
