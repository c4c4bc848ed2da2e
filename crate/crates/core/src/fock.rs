//! Fermionic Fock space over the one-particle modes, CAR operators,
//! second quantization and the many-body Hamiltonians.
//!
//! Basis state `s` is the occupation bitstring `n_0 n_1 … n_{N−1}` read as a
//! binary number, so mode 0 is the most significant bit. Ladder operators
//! carry the Jordan-Wigner string `a_i|n⟩ = (−1)^{Σ_{j<i} n_j}|n − e_i⟩`.

use std::ops::{Add, Mul, Sub};

use crate::error::{dim_check, NegfError, Result};
use crate::linalg::{c, hermiticity_defect, max_abs, CMatrix, CVector, HermitianSpectrum, C64};
use crate::model::{build_one_body, ModelSpec, OneBody};

pub const DEFAULT_MODE_CAP: usize = 14;
const HERMITIAN_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockBasis {
    n_modes: usize,
}

impl FockBasis {
    pub fn new(n_modes: usize) -> Result<Self> {
        Self::with_cap(n_modes, DEFAULT_MODE_CAP)
    }

    pub fn with_cap(n_modes: usize, cap: usize) -> Result<Self> {
        if n_modes > cap || n_modes >= usize::BITS as usize {
            return Err(NegfError::FockCap { modes: n_modes, cap });
        }
        Ok(Self { n_modes })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn dim(&self) -> usize {
        1 << self.n_modes
    }

    fn bit(&self, mode: usize) -> usize {
        1 << (self.n_modes - 1 - mode)
    }

    pub fn occupied(&self, state: usize, mode: usize) -> bool {
        state & self.bit(mode) != 0
    }

    pub fn particle_number(&self, state: usize) -> usize {
        state.count_ones() as usize
    }

    /// Jordan-Wigner sign `(−1)^{Σ_{j<mode} n_j}`.
    pub fn sign_before(&self, state: usize, mode: usize) -> f64 {
        let higher = state >> (self.n_modes - mode);
        if higher.count_ones().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }

    /// Basis states grouped by particle number, each group ascending.
    pub fn sectors(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_modes + 1];
        for s in 0..self.dim() {
            out[self.particle_number(s)].push(s);
        }
        out
    }

    /// Applies `a_mode` to a basis state, returning the sign and target state.
    pub fn lower(&self, state: usize, mode: usize) -> Option<(f64, usize)> {
        if self.occupied(state, mode) {
            Some((self.sign_before(state, mode), state ^ self.bit(mode)))
        } else {
            None
        }
    }

    /// Applies `a*_mode` to a basis state.
    pub fn raise(&self, state: usize, mode: usize) -> Option<(f64, usize)> {
        if self.occupied(state, mode) {
            None
        } else {
            Some((self.sign_before(state, mode), state | self.bit(mode)))
        }
    }

    /// `a(f) = Σ_i conj(f_i) a_i`, anti-linear in `f`.
    pub fn annihilate(&self, f: &CVector) -> Result<ManyBodyOperator> {
        dim_check("annihilator vector", self.n_modes, f.len())?;
        let d = self.dim();
        let mut m = CMatrix::zeros(d, d);
        for s in 0..d {
            for i in 0..self.n_modes {
                if f[i] != C64::new(0.0, 0.0) {
                    if let Some((sg, t)) = self.lower(s, i) {
                        m[(t, s)] += f[i].conj() * sg;
                    }
                }
            }
        }
        Ok(ManyBodyOperator::new(m))
    }

    /// `a*(f) = Σ_i f_i a*_i`.
    pub fn create(&self, f: &CVector) -> Result<ManyBodyOperator> {
        Ok(self.annihilate(f)?.adjoint())
    }

    pub fn annihilator(&self, mode: usize) -> ManyBodyOperator {
        self.annihilate(&crate::linalg::unit_vector(self.n_modes, mode)).expect("mode vector has basis length")
    }

    pub fn creator(&self, mode: usize) -> ManyBodyOperator {
        self.annihilator(mode).adjoint()
    }

    /// All `(a_i, a*_i)` pairs in mode order.
    pub fn ladder_operators(&self) -> Vec<(ManyBodyOperator, ManyBodyOperator)> {
        (0..self.n_modes)
            .map(|i| {
                let a = self.annihilator(i);
                let ad = a.adjoint();
                (a, ad)
            })
            .collect()
    }

    /// `dΓ(q) = Σ_ij q_ij a*_i a_j`.
    pub fn second_quantize(&self, q: &CMatrix) -> Result<ManyBodyOperator> {
        dim_check("second_quantize rows", self.n_modes, q.nrows())?;
        dim_check("second_quantize cols", self.n_modes, q.ncols())?;
        let d = self.dim();
        let n = self.n_modes;
        let mut m = CMatrix::zeros(d, d);
        for s in 0..d {
            for j in 0..n {
                let Some((sj, t)) = self.lower(s, j) else { continue };
                for i in 0..n {
                    let qij = q[(i, j)];
                    if qij == C64::new(0.0, 0.0) {
                        continue;
                    }
                    if let Some((si, u)) = self.raise(t, i) {
                        m[(u, s)] += qij * (si * sj);
                    }
                }
            }
        }
        Ok(ManyBodyOperator::new(m))
    }

    /// `N_x = a*_x a_x`.
    pub fn number(&self, mode: usize) -> ManyBodyOperator {
        let d = self.dim();
        let mut m = CMatrix::zeros(d, d);
        for s in 0..d {
            if self.occupied(s, mode) {
                m[(s, s)] = c(1.0, 0.0);
            }
        }
        ManyBodyOperator::new(m)
    }

    /// `dΓ(1_X)` for the modes in `modes`.
    pub fn number_in(&self, modes: std::ops::Range<usize>) -> ManyBodyOperator {
        let d = self.dim();
        let mut m = CMatrix::zeros(d, d);
        for s in 0..d {
            let k = modes.clone().filter(|&x| self.occupied(s, x)).count();
            m[(s, s)] = c(k as f64, 0.0);
        }
        ManyBodyOperator::new(m)
    }

    pub fn total_number(&self) -> ManyBodyOperator {
        self.number_in(0..self.n_modes)
    }

    /// Net change in particle number if `m` has a definite one.
    pub fn charge_of(&self, m: &CMatrix) -> Option<i32> {
        let mut charge = None;
        for col in 0..m.ncols() {
            for row in 0..m.nrows() {
                if m[(row, col)] != C64::new(0.0, 0.0) {
                    let q = self.particle_number(row) as i32 - self.particle_number(col) as i32;
                    match charge {
                        None => charge = Some(q),
                        Some(p) if p != q => return None,
                        _ => {}
                    }
                }
            }
        }
        Some(charge.unwrap_or(0))
    }
}

/// Dense operator on Fock space.
#[derive(Debug, Clone, PartialEq)]
pub struct ManyBodyOperator {
    matrix: CMatrix,
    hermitian: bool,
}

impl ManyBodyOperator {
    pub fn new(matrix: CMatrix) -> Self {
        let hermitian = matrix.is_square() && hermiticity_defect(&matrix) <= HERMITIAN_REL_TOL * max_abs(&matrix);
        Self { matrix, hermitian }
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(CMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self::new(CMatrix::zeros(dim, dim))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
            hermitian: self.hermitian,
        }
    }

    pub fn scale(&self, z: C64) -> Self {
        Self::new(&self.matrix * z)
    }

    pub fn commutator(&self, other: &Self) -> Self {
        Self::new(&self.matrix * &other.matrix - &other.matrix * &self.matrix)
    }

    pub fn anticommutator(&self, other: &Self) -> Self {
        Self::new(&self.matrix * &other.matrix + &other.matrix * &self.matrix)
    }

    /// Largest absolute matrix entry.
    pub fn max_norm(&self) -> f64 {
        max_abs(&self.matrix)
    }

    /// Operator 2-norm.
    pub fn op_norm(&self) -> f64 {
        if self.matrix.nrows() == 0 {
            return 0.0;
        }
        self.matrix.singular_values().max()
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }
}

impl Add for &ManyBodyOperator {
    type Output = ManyBodyOperator;
    fn add(self, rhs: Self) -> ManyBodyOperator {
        ManyBodyOperator::new(&self.matrix + &rhs.matrix)
    }
}

impl Sub for &ManyBodyOperator {
    type Output = ManyBodyOperator;
    fn sub(self, rhs: Self) -> ManyBodyOperator {
        ManyBodyOperator::new(&self.matrix - &rhs.matrix)
    }
}

impl Mul for &ManyBodyOperator {
    type Output = ManyBodyOperator;
    fn mul(self, rhs: Self) -> ManyBodyOperator {
        ManyBodyOperator::new(&self.matrix * &rhs.matrix)
    }
}

/// `W = ½ Σ_{x,y} w(x,y) N_x N_y` on the sample modes.
pub fn build_interaction(spec: &ModelSpec, basis: &FockBasis) -> Result<ManyBodyOperator> {
    spec.validate()?;
    dim_check("Fock basis modes", spec.n_modes(), basis.n_modes())?;
    let ns = spec.n_sample();
    let d = basis.dim();
    let mut m = CMatrix::zeros(d, d);
    for s in 0..d {
        let mut e = 0.0;
        for x in 0..ns {
            for y in 0..ns {
                if basis.occupied(s, x) && basis.occupied(s, y) {
                    e += spec.w[(x, y)];
                }
            }
        }
        m[(s, s)] = c(0.5 * e, 0.0);
    }
    Ok(ManyBodyOperator::new(m))
}

/// `V_x = Σ_y w(x,y) N_y`.
pub fn interaction_potential(spec: &ModelSpec, basis: &FockBasis, x: usize) -> ManyBodyOperator {
    let d = basis.dim();
    let mut m = CMatrix::zeros(d, d);
    for s in 0..d {
        let v: f64 = (0..spec.n_sample()).filter(|&y| basis.occupied(s, y)).map(|y| spec.w[(x, y)]).sum();
        m[(s, s)] = c(v, 0.0);
    }
    ManyBodyOperator::new(m)
}

#[derive(Debug, Clone)]
pub struct Hamiltonians {
    pub one_body: OneBody,
    /// `H = dΓ(h)`
    pub h: ManyBodyOperator,
    /// `H_S + H_R = dΓ(h_D)`
    pub h_d: ManyBodyOperator,
    pub h_t: ManyBodyOperator,
    pub w: ManyBodyOperator,
    pub k: ManyBodyOperator,
    pub k_d: ManyBodyOperator,
    pub xi: f64,
}

pub fn build_hamiltonians(spec: &ModelSpec, basis: &FockBasis) -> Result<Hamiltonians> {
    let one_body = build_one_body(spec)?;
    dim_check("Fock basis modes", spec.n_modes(), basis.n_modes())?;
    let h = basis.second_quantize(&one_body.h)?;
    let h_d = basis.second_quantize(&one_body.h_d)?;
    let h_t = basis.second_quantize(&one_body.h_t)?;
    let w = build_interaction(spec, basis)?;
    let xi_w = w.scale(c(spec.xi, 0.0));
    let k = &h + &xi_w;
    let k_d = &h_d + &xi_w;
    Ok(Hamiltonians {
        one_body,
        h,
        h_d,
        h_t,
        w,
        k,
        k_d,
        xi: spec.xi,
    })
}

#[derive(Debug, Clone)]
struct Sector {
    states: Vec<usize>,
    energies: Vec<f64>,
    vectors: CMatrix,
}

/// Spectral data of a number-conserving Hermitian operator, one block per
/// particle-number sector.
#[derive(Debug, Clone)]
pub struct Propagator {
    basis: FockBasis,
    sectors: Vec<Sector>,
}

impl Propagator {
    pub fn new(k: &ManyBodyOperator, basis: &FockBasis) -> Result<Self> {
        dim_check("propagator generator", basis.dim(), k.dim())?;
        if !k.is_hermitian() {
            return Err(NegfError::NotHermitian("generator of the dynamics".into()));
        }
        if basis.charge_of(k.matrix()).is_none_or(|q| q != 0) {
            return Err(NegfError::Precondition("generator does not conserve particle number".into()));
        }
        let sectors = basis
            .sectors()
            .into_iter()
            .map(|states| {
                let n = states.len();
                let block = CMatrix::from_fn(n, n, |i, j| k.matrix()[(states[i], states[j])]);
                let spec = HermitianSpectrum::new(&block);
                Sector {
                    states,
                    energies: spec.values,
                    vectors: spec.vectors,
                }
            })
            .collect();
        Ok(Self { basis: *basis, sectors })
    }

    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    pub fn n_sectors(&self) -> usize {
        self.sectors.len()
    }

    pub fn sector_states(&self, n: usize) -> &[usize] {
        &self.sectors[n].states
    }

    pub fn energies(&self, n: usize) -> &[f64] {
        &self.sectors[n].energies
    }

    pub fn eigenvectors(&self, n: usize) -> &CMatrix {
        &self.sectors[n].vectors
    }

    pub fn ground_energy(&self) -> f64 {
        self.sectors
            .iter()
            .flat_map(|s| s.energies.iter().copied())
            .fold(f64::INFINITY, f64::min)
    }

    /// `f(K)` by spectral calculus.
    pub fn apply_fn(&self, f: impl Fn(f64) -> C64) -> CMatrix {
        let d = self.basis.dim();
        let mut out = CMatrix::zeros(d, d);
        for sec in &self.sectors {
            let n = sec.states.len();
            let mut scaled = sec.vectors.clone();
            for j in 0..n {
                let fj = f(sec.energies[j]);
                for i in 0..n {
                    scaled[(i, j)] *= fj;
                }
            }
            let block = scaled * sec.vectors.adjoint();
            for (a, &sa) in sec.states.iter().enumerate() {
                for (b, &sb) in sec.states.iter().enumerate() {
                    out[(sa, sb)] = block[(a, b)];
                }
            }
        }
        out
    }

    /// `e^{−itK}`
    pub fn unitary(&self, t: f64) -> CMatrix {
        self.apply_fn(|e| crate::linalg::expi(-t * e))
    }

    /// `τ^t(X) = e^{itK} X e^{−itK}`
    pub fn evolve(&self, x: &ManyBodyOperator, t: f64) -> ManyBodyOperator {
        let u = self.unitary(t);
        ManyBodyOperator::new(u.adjoint() * x.matrix() * u)
    }

    /// Matrix of `x` from sector `from` into sector `to`, both in eigenbasis coordinates.
    pub fn block_in_eigenbasis(&self, x: &CMatrix, from: usize, to: usize) -> CMatrix {
        let sf = &self.sectors[from];
        let st = &self.sectors[to];
        let raw = CMatrix::from_fn(st.states.len(), sf.states.len(), |i, j| x[(st.states[i], sf.states[j])]);
        st.vectors.adjoint() * raw * &sf.vectors
    }

    /// Sector-`n` component of `v` in eigenbasis coordinates.
    pub fn vector_in_eigenbasis(&self, v: &CVector, n: usize) -> CVector {
        let s = &self.sectors[n];
        let raw = CVector::from_fn(s.states.len(), |i, _| v[s.states[i]]);
        s.vectors.adjoint() * raw
    }
}
