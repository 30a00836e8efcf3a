//! Truncated Fock-space states for a two-level atom coupled to two cavity
//! modes.
//!
//! Basis ordering is fixed: atom outermost, M_a in the middle, M_b innermost,
//! with `g = 0` and `e = 1`. A density operator may cover any subset of the
//! three factors (kept in the same canonical order), which is what partial
//! traces produce.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{domain, Error, Result};

pub type C64 = Complex64;

/// Atomic level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Atom {
    G = 0,
    E = 1,
}

impl Atom {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Result<Self> {
        match i {
            0 => Ok(Atom::G),
            1 => Ok(Atom::E),
            _ => domain(format!("atom label {i} is neither g (0) nor e (1)")),
        }
    }
}

/// One of the two cavity modes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    A,
    B,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Subsystem {
    Atom,
    ModeA,
    ModeB,
}

impl From<Mode> for Subsystem {
    fn from(m: Mode) -> Self {
        match m {
            Mode::A => Subsystem::ModeA,
            Mode::B => Subsystem::ModeB,
        }
    }
}

/// Fock truncation of the two modes (maximum photon number kept).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModeDims {
    n_max_a: usize,
    n_max_b: usize,
}

impl ModeDims {
    pub fn new(n_max_a: usize, n_max_b: usize) -> Result<Self> {
        if n_max_a < 1 || n_max_b < 1 {
            return domain(format!(
                "Fock truncation must keep at least one photon per mode (got {n_max_a}, {n_max_b})"
            ));
        }
        Ok(Self { n_max_a, n_max_b })
    }

    pub fn n_max_a(&self) -> usize {
        self.n_max_a
    }

    pub fn n_max_b(&self) -> usize {
        self.n_max_b
    }

    pub fn n_max(&self, mode: Mode) -> usize {
        match mode {
            Mode::A => self.n_max_a,
            Mode::B => self.n_max_b,
        }
    }

    /// Dimension of atom ⊗ M_a ⊗ M_b.
    pub fn total(&self) -> usize {
        2 * (self.n_max_a + 1) * (self.n_max_b + 1)
    }

    /// Dimension of M_a ⊗ M_b.
    pub fn modes(&self) -> usize {
        (self.n_max_a + 1) * (self.n_max_b + 1)
    }
}

impl Default for ModeDims {
    /// Six photons per mode: the truncated thermal tail at n̄ = 1 is below 1%.
    fn default() -> Self {
        Self { n_max_a: 6, n_max_b: 6 }
    }
}

/// Flat index of `|atom, n_a, n_b⟩` in the full space.
pub fn basis_index(atom: Atom, n_a: usize, n_b: usize, dims: ModeDims) -> Result<usize> {
    if n_a > dims.n_max_a || n_b > dims.n_max_b {
        return domain(format!(
            "Fock labels ({n_a}, {n_b}) outside truncation ({}, {})",
            dims.n_max_a, dims.n_max_b
        ));
    }
    let (la, lb) = (dims.n_max_a + 1, dims.n_max_b + 1);
    Ok(atom.index() * la * lb + n_a * lb + n_b)
}

/// Inverse of [`basis_index`].
pub fn basis_labels(index: usize, dims: ModeDims) -> Result<(Atom, usize, usize)> {
    if index >= dims.total() {
        return domain(format!("basis index {index} outside dimension {}", dims.total()));
    }
    let (la, lb) = (dims.n_max_a + 1, dims.n_max_b + 1);
    let atom = Atom::from_index(index / (la * lb))?;
    let rem = index % (la * lb);
    Ok((atom, rem / lb, rem % lb))
}

/// Which factors a density operator lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub atom: bool,
    /// `Some(n_max)` when M_a is present.
    pub mode_a: Option<usize>,
    pub mode_b: Option<usize>,
}

impl Layout {
    pub fn full(dims: ModeDims) -> Self {
        Self { atom: true, mode_a: Some(dims.n_max_a), mode_b: Some(dims.n_max_b) }
    }

    pub fn modes(dims: ModeDims) -> Self {
        Self { atom: false, mode_a: Some(dims.n_max_a), mode_b: Some(dims.n_max_b) }
    }

    /// Present factors in canonical order with their dimensions.
    pub fn factors(&self) -> Vec<(Subsystem, usize)> {
        let mut f = Vec::with_capacity(3);
        if self.atom {
            f.push((Subsystem::Atom, 2));
        }
        if let Some(n) = self.mode_a {
            f.push((Subsystem::ModeA, n + 1));
        }
        if let Some(n) = self.mode_b {
            f.push((Subsystem::ModeB, n + 1));
        }
        f
    }

    pub fn dim(&self) -> usize {
        self.factors().iter().map(|(_, d)| d).product()
    }

    pub fn contains(&self, s: Subsystem) -> bool {
        match s {
            Subsystem::Atom => self.atom,
            Subsystem::ModeA => self.mode_a.is_some(),
            Subsystem::ModeB => self.mode_b.is_some(),
        }
    }

    pub fn is_full(&self) -> bool {
        self.atom && self.mode_a.is_some() && self.mode_b.is_some()
    }

    pub fn mode_dims(&self) -> Option<ModeDims> {
        match (self.mode_a, self.mode_b) {
            (Some(a), Some(b)) => ModeDims::new(a, b).ok(),
            _ => None,
        }
    }
}

fn digits(mut index: usize, sizes: &[usize]) -> [usize; 3] {
    let mut out = [0; 3];
    for k in (0..sizes.len()).rev() {
        out[k] = index % sizes[k];
        index /= sizes[k];
    }
    out
}

fn compose(d: &[usize], sizes: &[usize]) -> usize {
    d.iter().zip(sizes).fold(0, |acc, (&x, &s)| acc * s + x)
}

/// Pure state of atom ⊗ M_a ⊗ M_b.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    dims: ModeDims,
    amplitudes: DVector<C64>,
}

impl PureState {
    pub fn from_amplitudes(dims: ModeDims, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != dims.total() {
            return domain(format!(
                "amplitude vector has length {}, expected {}",
                amplitudes.len(),
                dims.total()
            ));
        }
        Ok(Self { dims, amplitudes })
    }

    pub fn dims(&self) -> ModeDims {
        self.dims
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut DVector<C64> {
        &mut self.amplitudes
    }

    pub fn amplitude(&self, atom: Atom, n_a: usize, n_b: usize) -> Result<C64> {
        Ok(self.amplitudes[basis_index(atom, n_a, n_b, self.dims)?])
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn normalize(&mut self) -> Result<f64> {
        let n = self.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Numerical(format!("cannot normalize state of norm {n}")));
        }
        self.amplitudes.unscale_mut(n);
        Ok(n)
    }

    pub fn inner(&self, other: &PureState) -> Result<C64> {
        if self.dims != other.dims {
            return domain("inner product between states of different truncation");
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// Population of the atomic upper level.
    pub fn excited_population(&self) -> f64 {
        let half = self.dims.modes();
        self.amplitudes.iter().skip(half).map(|a| a.norm_sqr()).sum()
    }

    pub fn mean_photon(&self, mode: Mode) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let (_, na, nb) = basis_labels(i, self.dims).expect("index in range");
                let n = if mode == Mode::A { na } else { nb };
                n as f64 * a.norm_sqr()
            })
            .sum()
    }

    /// `|ψ⟩⟨ψ|` on the full layout.
    pub fn projector(&self) -> DensityOp {
        let m = &self.amplitudes * self.amplitudes.adjoint();
        DensityOp { layout: Layout::full(self.dims), matrix: m }
    }
}

/// Basis state `|atom, n_a, n_b⟩`.
pub fn product_state(atom: Atom, n_a: usize, n_b: usize, dims: ModeDims) -> Result<PureState> {
    let idx = basis_index(atom, n_a, n_b, dims)?;
    let mut amps = DVector::zeros(dims.total());
    amps[idx] = C64::new(1.0, 0.0);
    Ok(PureState { dims, amplitudes: amps })
}

/// `|⟨a|b⟩|²`.
pub fn fidelity(a: &PureState, b: &PureState) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr())
}

/// Density operator over the factors named by its layout.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOp {
    layout: Layout,
    matrix: DMatrix<C64>,
}

impl DensityOp {
    pub fn new(layout: Layout, matrix: DMatrix<C64>) -> Result<Self> {
        let d = layout.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return domain(format!(
                "matrix is {}x{}, layout needs {d}x{d}",
                matrix.nrows(),
                matrix.ncols()
            ));
        }
        Ok(Self { layout, matrix })
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn matrix_mut(&mut self) -> &mut DMatrix<C64> {
        &mut self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// Largest elementwise deviation from Hermiticity.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in 0..=j {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.matrix + self.matrix.adjoint()).scale(0.5);
        h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Check the density-operator invariants at the given tolerances.
    pub fn validate(&self, herm_tol: f64, trace_tol: f64, eig_tol: f64) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > herm_tol {
            return Err(Error::Numerical(format!("Hermiticity error {herm:.3e}")));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > trace_tol || tr.im.abs() > trace_tol {
            return Err(Error::Numerical(format!("trace {tr} deviates from 1")));
        }
        let min = self.min_eigenvalue();
        if min < -eig_tol {
            return Err(Error::Numerical(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    pub fn excited_population(&self) -> Result<f64> {
        if !self.layout.atom {
            return domain("layout has no atom");
        }
        let half = self.dim() / 2;
        Ok((half..self.dim()).map(|i| self.matrix[(i, i)].re).sum())
    }

    pub fn mean_photon(&self, mode: Mode) -> Result<f64> {
        let target: Subsystem = mode.into();
        let factors = self.layout.factors();
        let Some(pos) = factors.iter().position(|(s, _)| *s == target) else {
            return domain(format!("layout has no {mode:?} mode"));
        };
        let sizes: Vec<usize> = factors.iter().map(|(_, d)| *d).collect();
        Ok((0..self.dim())
            .map(|i| digits(i, &sizes)[pos] as f64 * self.matrix[(i, i)].re)
            .sum())
    }

    /// Photon-number distribution of one mode.
    pub fn photon_distribution(&self, mode: Mode) -> Result<Vec<f64>> {
        let reduced = partial_trace(self, &[mode.into()])?;
        Ok((0..reduced.dim()).map(|i| reduced.matrix[(i, i)].re).collect())
    }

    /// Tensor product; every factor of `self` must precede every factor of
    /// `other` in canonical order.
    pub fn kron(&self, other: &DensityOp) -> Result<DensityOp> {
        let order = |s: Subsystem| s as usize;
        let last = self.layout.factors().last().map(|(s, _)| order(*s));
        let first = other.layout.factors().first().map(|(s, _)| order(*s));
        if let (Some(l), Some(f)) = (last, first) {
            if l >= f {
                return domain("tensor factors must be disjoint and in canonical order");
            }
        }
        let layout = Layout {
            atom: self.layout.atom || other.layout.atom,
            mode_a: self.layout.mode_a.or(other.layout.mode_a),
            mode_b: self.layout.mode_b.or(other.layout.mode_b),
        };
        Ok(DensityOp { layout, matrix: self.matrix.kronecker(&other.matrix) })
    }

    /// Reinterpret a single-mode operator as living on `mode`.
    pub fn on_mode(mut self, mode: Mode) -> Result<DensityOp> {
        let n = match (self.layout.atom, self.layout.mode_a, self.layout.mode_b) {
            (false, Some(n), None) | (false, None, Some(n)) => n,
            _ => return domain("on_mode needs a single-mode operator"),
        };
        self.layout = match mode {
            Mode::A => Layout { atom: false, mode_a: Some(n), mode_b: None },
            Mode::B => Layout { atom: false, mode_a: None, mode_b: Some(n) },
        };
        Ok(self)
    }

    /// Atom in `|atom⟩` tensored with this two-mode operator.
    pub fn with_atom(&self, atom: Atom) -> Result<DensityOp> {
        if self.layout.atom {
            return domain("operator already includes the atom");
        }
        let mut a = DMatrix::zeros(2, 2);
        a[(atom.index(), atom.index())] = C64::new(1.0, 0.0);
        let atom_op = DensityOp {
            layout: Layout { atom: true, mode_a: None, mode_b: None },
            matrix: a,
        };
        atom_op.kron(self)
    }
}

/// Reduced operator on the subsystems in `keep`.
pub fn partial_trace(rho: &DensityOp, keep: &[Subsystem]) -> Result<DensityOp> {
    if keep.is_empty() {
        return domain("partial trace needs at least one kept subsystem");
    }
    for s in keep {
        if !rho.layout.contains(*s) {
            return domain(format!("cannot keep {s:?}: not part of the operator"));
        }
    }
    let factors = rho.layout.factors();
    let sizes: Vec<usize> = factors.iter().map(|(_, d)| *d).collect();
    let kept: Vec<usize> =
        (0..factors.len()).filter(|&k| keep.contains(&factors[k].0)).collect();
    let traced: Vec<usize> = (0..factors.len()).filter(|k| !kept.contains(k)).collect();
    let kept_sizes: Vec<usize> = kept.iter().map(|&k| sizes[k]).collect();
    let traced_sizes: Vec<usize> = traced.iter().map(|&k| sizes[k]).collect();
    let dk: usize = kept_sizes.iter().product();
    let dt: usize = traced_sizes.iter().product();

    let full_index = |kd: &[usize; 3], td: &[usize; 3]| {
        let mut d = [0usize; 3];
        for (p, &k) in kept.iter().enumerate() {
            d[k] = kd[p];
        }
        for (p, &k) in traced.iter().enumerate() {
            d[k] = td[p];
        }
        compose(&d[..sizes.len()], &sizes)
    };

    let mut out = DMatrix::zeros(dk, dk);
    for i in 0..dk {
        let di = digits(i, &kept_sizes);
        for j in 0..dk {
            let dj = digits(j, &kept_sizes);
            let mut acc = C64::new(0.0, 0.0);
            for r in 0..dt {
                let dr = digits(r, &traced_sizes);
                acc += rho.matrix[(full_index(&di, &dr), full_index(&dj, &dr))];
            }
            out[(i, j)] = acc;
        }
    }
    let layout = Layout {
        atom: rho.layout.atom && keep.contains(&Subsystem::Atom),
        mode_a: rho.layout.mode_a.filter(|_| keep.contains(&Subsystem::ModeA)),
        mode_b: rho.layout.mode_b.filter(|_| keep.contains(&Subsystem::ModeB)),
    };
    Ok(DensityOp { layout, matrix: out })
}

/// Thermal photon-number distribution truncated at `n_max` and renormalized.
pub fn thermal_populations(n_bar: f64, n_max: usize) -> Result<Vec<f64>> {
    if !(n_bar >= 0.0) || !n_bar.is_finite() {
        return domain(format!("mean photon number must be non-negative, got {n_bar}"));
    }
    let ratio = n_bar / (1.0 + n_bar);
    let mut p: Vec<f64> = (0..=n_max).map(|n| ratio.powi(n as i32) / (1.0 + n_bar)).collect();
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= s);
    Ok(p)
}

/// Probability mass of the untruncated thermal distribution above `n_max`.
pub fn thermal_tail_mass(n_bar: f64, n_max: usize) -> f64 {
    (n_bar / (1.0 + n_bar)).powi(n_max as i32 + 1)
}

/// Single-mode thermal state (layout: M_a only; see [`DensityOp::on_mode`]).
pub fn thermal_mode_state(n_bar: f64, n_max: usize) -> Result<DensityOp> {
    let p = thermal_populations(n_bar, n_max)?;
    let m = DMatrix::from_diagonal(&DVector::from_iterator(
        n_max + 1,
        p.iter().map(|&x| C64::new(x, 0.0)),
    ));
    Ok(DensityOp {
        layout: Layout { atom: false, mode_a: Some(n_max), mode_b: None },
        matrix: m,
    })
}

/// Product of thermal states on M_a and M_b.
pub fn thermal_modes(n_bar_a: f64, n_bar_b: f64, dims: ModeDims) -> Result<DensityOp> {
    let a = thermal_mode_state(n_bar_a, dims.n_max_a)?;
    let b = thermal_mode_state(n_bar_b, dims.n_max_b)?.on_mode(Mode::B)?;
    a.kron(&b)
}
