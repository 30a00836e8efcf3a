//! Sparse representation of the rotating-frame Jaynes-Cummings generator and
//! the right-hand sides used by the integrators.
//!
//! Every basis state couples to at most one partner per mode, so the
//! Hamiltonian is stored row-wise (CSR) and every jump operator as a partial
//! injection `|i⟩ → c_i |dst(i)⟩`. Density matrices are flat column-major
//! buffers (`ρ[i + j·n]`), matching nalgebra's storage.

use nalgebra::DMatrix;

use super::{Dissipation, Drive, PhysicalParams};
use crate::hilbert::{basis_index, basis_labels, Atom, ModeDims, C64};

const I: C64 = C64::new(0.0, 1.0);

/// One dissipation channel.
struct Jump {
    /// `src[i] = Some((k, c))` when `L|k⟩ = c|i⟩`.
    src: Vec<Option<(usize, f64)>>,
    /// `dst[k] = Some((i, c))` when `L|k⟩ = c|i⟩`.
    dst: Vec<Option<(usize, f64)>>,
}

pub(crate) struct Generator {
    n: usize,
    /// Static diagonal: −δ·n_b + offset − (i/2)·Σ L†L.
    base: Vec<C64>,
    /// 1.0 on atom-e states, multiplied by the instantaneous detuning.
    excited: Vec<f64>,
    row_ptr: Vec<usize>,
    col: Vec<usize>,
    /// Coupling matrix elements at unit coupling scale.
    val: Vec<C64>,
    jumps: Vec<Jump>,
}

impl Generator {
    pub fn new(
        params: &PhysicalParams,
        dims: ModeDims,
        couple_a: bool,
        couple_b: bool,
        diss: &Dissipation,
        energy_offset: f64,
    ) -> Self {
        let n = dims.total();
        let ga = C64::from_polar(params.omega_rabi / 2.0, params.coupling_phase_a);
        let gb = C64::from_polar(params.omega_rabi / 2.0, params.coupling_phase_b);

        let mut base = vec![C64::new(0.0, 0.0); n];
        let mut excited = vec![0.0; n];
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col = Vec::new();
        let mut val = Vec::new();
        row_ptr.push(0);
        for i in 0..n {
            let (atom, na, nb) = basis_labels(i, dims).expect("index in range");
            base[i] = C64::new(-params.delta * nb as f64 + energy_offset, 0.0);
            if atom == Atom::E {
                excited[i] = 1.0;
            }
            // ⟨e, n-1| H |g, n⟩ = g·√n ; the g-row holds the conjugate.
            let mut push = |j: usize, c: C64| {
                col.push(j);
                val.push(c);
            };
            match atom {
                Atom::G => {
                    if couple_a && na >= 1 {
                        let j = basis_index(Atom::E, na - 1, nb, dims).unwrap();
                        push(j, ga.conj() * (na as f64).sqrt());
                    }
                    if couple_b && nb >= 1 {
                        let j = basis_index(Atom::E, na, nb - 1, dims).unwrap();
                        push(j, gb.conj() * (nb as f64).sqrt());
                    }
                }
                Atom::E => {
                    if couple_a && na < dims.n_max_a() {
                        let j = basis_index(Atom::G, na + 1, nb, dims).unwrap();
                        push(j, ga * ((na + 1) as f64).sqrt());
                    }
                    if couple_b && nb < dims.n_max_b() {
                        let j = basis_index(Atom::G, na, nb + 1, dims).unwrap();
                        push(j, gb * ((nb + 1) as f64).sqrt());
                    }
                }
            }
            row_ptr.push(col.len());
        }

        let mut jumps = Vec::new();
        let channels = [
            (diss.kappa_a * (1.0 + diss.n_bar_a), true, false),
            (diss.kappa_a * diss.n_bar_a, true, true),
            (diss.kappa_b * (1.0 + diss.n_bar_b), false, false),
            (diss.kappa_b * diss.n_bar_b, false, true),
        ];
        for (rate, on_a, raising) in channels {
            if rate <= 0.0 {
                continue;
            }
            let mut src = vec![None; n];
            let mut dst = vec![None; n];
            for k in 0..n {
                let (atom, na, nb) = basis_labels(k, dims).unwrap();
                let (m, n_max) = if on_a { (na, dims.n_max_a()) } else { (nb, dims.n_max_b()) };
                let (target, amp) = if raising {
                    if m >= n_max {
                        continue;
                    }
                    (m + 1, ((m + 1) as f64).sqrt())
                } else {
                    if m == 0 {
                        continue;
                    }
                    (m - 1, (m as f64).sqrt())
                };
                let i = if on_a {
                    basis_index(atom, target, nb, dims).unwrap()
                } else {
                    basis_index(atom, na, target, dims).unwrap()
                };
                let c = rate.sqrt() * amp;
                dst[k] = Some((i, c));
                src[i] = Some((k, c));
                base[k] -= I * (0.5 * c * c);
            }
            jumps.push(Jump { src, dst });
        }

        Self { n, base, excited, row_ptr, col, val, jumps }
    }

    fn diag(&self, detuning: f64) -> Vec<C64> {
        self.base.iter().zip(&self.excited).map(|(b, e)| b + detuning * e).collect()
    }

    fn scaled_links(&self, scale: f64) -> Vec<C64> {
        self.val.iter().map(|v| v * scale).collect()
    }

    /// Dense effective Hamiltonian (Hermitian when there is no dissipation).
    pub fn dense(&self, detuning: f64, scale: f64) -> DMatrix<C64> {
        let d = self.diag(detuning);
        let mut h = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(d));
        for i in 0..self.n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                h[(i, self.col[p])] += self.val[p] * scale;
            }
        }
        h
    }

    /// dψ/dt = −i H ψ.
    pub fn pure_rhs(&self, drive: &Drive, params: &PhysicalParams, t: f64, y: &[C64], dy: &mut [C64]) {
        let d = self.diag(drive.detuning_at(t));
        let s = drive.coupling_scale(params, t);
        for i in 0..self.n {
            let mut acc = d[i] * y[i];
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.val[p] * s * y[self.col[p]];
            }
            dy[i] = -I * acc;
        }
    }

    /// dρ/dt = −i(H_eff ρ − ρ H_eff†) + Σ L ρ L†.
    pub fn lindblad_rhs(
        &self,
        drive: &Drive,
        params: &PhysicalParams,
        t: f64,
        rho: &[C64],
        out: &mut [C64],
    ) {
        let n = self.n;
        let d = self.diag(drive.detuning_at(t));
        let lv = self.scaled_links(drive.coupling_scale(params, t));
        for j in 0..n {
            let dj = d[j].conj();
            let col_j = j * n;
            let links_j = self.row_ptr[j]..self.row_ptr[j + 1];
            for i in 0..n {
                let r_ij = rho[i + col_j];
                let mut hr = d[i] * r_ij;
                for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                    hr += lv[p] * rho[self.col[p] + col_j];
                }
                let mut rh = r_ij * dj;
                for p in links_j.clone() {
                    rh += rho[i + self.col[p] * n] * lv[p].conj();
                }
                let mut acc = -I * (hr - rh);
                for jump in &self.jumps {
                    if let (Some((k, ci)), Some((l, cj))) = (jump.src[i], jump.src[j]) {
                        acc += rho[k + l * n] * (ci * cj);
                    }
                }
                out[i + col_j] = acc;
            }
        }
    }

    /// dO/dt = −[ i(H_eff† O − O H_eff) + Σ L† O L ], the backward
    /// (Heisenberg) equation whose solution keeps Tr[O(t) ρ(t)] constant.
    pub fn adjoint_rhs(
        &self,
        drive: &Drive,
        params: &PhysicalParams,
        t: f64,
        obs: &[C64],
        out: &mut [C64],
    ) {
        let n = self.n;
        let d = self.diag(drive.detuning_at(t));
        let lv = self.scaled_links(drive.coupling_scale(params, t));
        for j in 0..n {
            let dj = d[j];
            let col_j = j * n;
            let links_j = self.row_ptr[j]..self.row_ptr[j + 1];
            for i in 0..n {
                let o_ij = obs[i + col_j];
                let mut ho = d[i].conj() * o_ij;
                for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                    ho += lv[p] * obs[self.col[p] + col_j];
                }
                let mut oh = o_ij * dj;
                for p in links_j.clone() {
                    oh += obs[i + self.col[p] * n] * lv[p].conj();
                }
                let mut acc = I * (ho - oh);
                for jump in &self.jumps {
                    if let (Some((k, ci)), Some((l, cj))) = (jump.dst[i], jump.dst[j]) {
                        acc += obs[k + l * n] * (ci * cj);
                    }
                }
                out[i + col_j] = -acc;
            }
        }
    }
}
