//! Exact propagation while the atom is decoupled from both modes.
//!
//! Without atom-field coupling the generator splits into independent pieces:
//! a phase on the atomic coherence and one finite-temperature damping
//! Liouvillian per mode. A single-mode Liouvillian only connects `ρ_{n,m}` to
//! `ρ_{n±1,m±1}`, so it is block diagonal along the diagonals `k = n − m` and
//! each block is exponentiated on its own.

use nalgebra::DMatrix;

use crate::hilbert::C64;

/// `exp(τ·L)` for one truncated damped oscillator, stored per diagonal.
pub(crate) struct ModeSuperop {
    levels: usize,
    /// Indexed by `k + levels − 1` for `k = n − m ∈ (−levels, levels)`.
    blocks: Vec<DMatrix<C64>>,
}

fn diag_offsets(k: isize) -> (usize, usize) {
    (k.max(0) as usize, (-k).max(0) as usize)
}

impl ModeSuperop {
    /// Mode with rotating-frame frequency `omega` (H = ω a†a), damping rate
    /// `kappa` and thermal occupation `n_bar`, over a duration `tau`.
    pub fn new(levels: usize, omega: f64, kappa: f64, n_bar: f64, tau: f64) -> Self {
        let top = levels - 1;
        let up = |n: usize| if n < top { (n + 1) as f64 } else { 0.0 };
        let down_rate = kappa * (1.0 + n_bar);
        let up_rate = kappa * n_bar;
        let mut blocks = Vec::with_capacity(2 * levels - 1);
        for k in -(top as isize)..=(top as isize) {
            let (kp, km) = diag_offsets(k);
            let len = levels - k.unsigned_abs();
            let mut g = DMatrix::<C64>::zeros(len, len);
            for p in 0..len {
                let (n, m) = (p + kp, p + km);
                g[(p, p)] = C64::new(
                    -0.5 * down_rate * (n + m) as f64 - 0.5 * up_rate * (up(n) + up(m)),
                    -omega * k as f64,
                );
                if p + 1 < len {
                    g[(p, p + 1)] = C64::new(down_rate * (((n + 1) * (m + 1)) as f64).sqrt(), 0.0);
                }
                if p >= 1 {
                    g[(p, p - 1)] = C64::new(up_rate * ((n * m) as f64).sqrt(), 0.0);
                }
            }
            blocks.push((g * C64::new(tau, 0.0)).exp());
        }
        Self { levels, blocks }
    }

    fn block(&self, k: isize) -> &DMatrix<C64> {
        &self.blocks[(k + self.levels as isize - 1) as usize]
    }

    /// Apply to every `levels × levels` sub-matrix selected by `slice`,
    /// where `slice(n, m)` returns the flat index of element (n, m).
    fn apply_slice(&self, buf: &mut [C64], slice: impl Fn(usize, usize) -> usize, transpose: bool) {
        let top = self.levels as isize - 1;
        let mut x = Vec::with_capacity(self.levels);
        for k in -top..=top {
            let (kp, km) = diag_offsets(k);
            let b = self.block(k);
            let len = b.nrows();
            x.clear();
            x.extend((0..len).map(|p| buf[slice(p + kp, p + km)]));
            for p in 0..len {
                let mut acc = C64::new(0.0, 0.0);
                for q in 0..len {
                    let e = if transpose { b[(q, p)] } else { b[(p, q)] };
                    acc += e * x[q];
                }
                buf[slice(p + kp, p + km)] = acc;
            }
        }
    }
}

/// Exact decoupled map on a full-layout matrix (dimension 2·N_a·N_b).
pub(crate) struct FreeMap {
    pub mode_a: ModeSuperop,
    pub mode_b: ModeSuperop,
    /// exp(−i∫Δ dt): phase of the atomic upper level.
    pub atom_phase: C64,
}

impl FreeMap {
    fn sizes(&self) -> (usize, usize) {
        (self.mode_a.levels, self.mode_b.levels)
    }

    fn apply_modes(&self, m: &mut DMatrix<C64>, transpose: bool) {
        let (na, nb) = self.sizes();
        let dim = m.nrows();
        let atoms = dim / (na * nb);
        let buf = m.as_mut_slice();
        let idx = |s: usize, a: usize, b: usize| (s * na + a) * nb + b;
        for s in 0..atoms {
            for s2 in 0..atoms {
                for b in 0..nb {
                    for b2 in 0..nb {
                        self.mode_a.apply_slice(
                            buf,
                            |n, mm| idx(s, n, b) + idx(s2, mm, b2) * dim,
                            transpose,
                        );
                    }
                }
                for a in 0..na {
                    for a2 in 0..na {
                        self.mode_b.apply_slice(
                            buf,
                            |n, mm| idx(s, a, n) + idx(s2, a2, mm) * dim,
                            transpose,
                        );
                    }
                }
            }
        }
        if atoms == 2 {
            let half = dim / 2;
            for j in 0..dim {
                for i in 0..dim {
                    let (ei, ej) = (i >= half, j >= half);
                    if ei && !ej {
                        m[(i, j)] *= self.atom_phase;
                    } else if !ei && ej {
                        m[(i, j)] *= self.atom_phase.conj();
                    }
                }
            }
        }
    }

    /// ρ ↦ Φ(ρ).
    pub fn apply(&self, rho: &mut DMatrix<C64>) {
        self.apply_modes(rho, false);
    }

    /// O ↦ Φ†(O), defined by Tr[Φ†(O) ρ] = Tr[O Φ(ρ)].
    pub fn apply_adjoint(&self, obs: &mut DMatrix<C64>) {
        let mut t = obs.transpose();
        self.apply_modes(&mut t, true);
        *obs = t.transpose();
    }
}
