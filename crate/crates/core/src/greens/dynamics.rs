//! Heisenberg-picture state vectors on a time grid.
//!
//! For every pure component `χ_k` of the initial state (weight `p_k`) a
//! trajectory of an operator `X` stores `√p_k · τ^s(X) χ_k` for all grid
//! times `s`, in eigenbasis coordinates of `K`. Every two-point function
//! `⟨τ^{s'}(X)† τ^s(Y)⟩` is then a plain inner product of two trajectories.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::error::{NegfError, Result};
use crate::fock::{FockBasis, ManyBodyOperator, Propagator};
use crate::linalg::{expi, CMatrix, CVector, C64};
use crate::states::InitialState;

struct Component {
    sqrt_w: f64,
    sector: usize,
    coeffs: CVector,
}

pub struct Dynamics<'a> {
    prop: &'a Propagator,
    times: Vec<f64>,
    comps: Vec<Component>,
}

/// Vectors `√p_k X(s) χ_k`, stacked over components; one column per time.
#[derive(Debug, Clone)]
pub struct Trajectory {
    charge: i32,
    re: DMatrix<f64>,
    im: DMatrix<f64>,
}

impl Trajectory {
    pub fn charge(&self) -> i32 {
        self.charge
    }

    pub fn n_times(&self) -> usize {
        self.re.ncols()
    }

    pub fn at(&self, row: usize, t: usize) -> C64 {
        C64::new(self.re[(row, t)], self.im[(row, t)])
    }

    fn compatible(&self, other: &Self) -> Result<()> {
        if self.charge != other.charge || self.re.shape() != other.re.shape() {
            return Err(NegfError::Precondition(format!(
                "trajectories of charge {} and {} cannot be paired",
                self.charge, other.charge
            )));
        }
        Ok(())
    }

    /// `O[(i,j)] = ⟨x(t_i)|y(t_j)⟩` summed over components.
    pub fn overlap(x: &Self, y: &Self) -> Result<CMatrix> {
        x.compatible(y)?;
        let rr = x.re.tr_mul(&y.re);
        let ii = x.im.tr_mul(&y.im);
        let ri = x.re.tr_mul(&y.im);
        let ir = x.im.tr_mul(&y.re);
        Ok(CMatrix::from_fn(rr.nrows(), rr.ncols(), |i, j| {
            C64::new(rr[(i, j)] + ii[(i, j)], ri[(i, j)] - ir[(i, j)])
        }))
    }

    /// `⟨x(t)|y(t)⟩` for each time.
    pub fn equal_time(x: &Self, y: &Self) -> Result<Vec<C64>> {
        x.compatible(y)?;
        Ok((0..x.n_times())
            .map(|t| {
                let mut acc = C64::new(0.0, 0.0);
                for r in 0..x.re.nrows() {
                    let a = C64::new(x.re[(r, t)], x.im[(r, t)]);
                    let b = C64::new(y.re[(r, t)], y.im[(r, t)]);
                    acc += a.conj() * b;
                }
                acc
            })
            .collect())
    }

    /// `Σ_k z_k(t) X_k(t)` with time-dependent coefficients.
    pub fn combine(terms: &[(&Self, &dyn Fn(usize) -> C64)]) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| NegfError::Precondition("empty trajectory combination".into()))?
            .0;
        let mut re = DMatrix::zeros(first.re.nrows(), first.re.ncols());
        let mut im = re.clone();
        for (x, coeff) in terms {
            first.compatible(x)?;
            for t in 0..x.n_times() {
                let z = coeff(t);
                if z == C64::new(0.0, 0.0) {
                    continue;
                }
                for r in 0..x.re.nrows() {
                    let v = z * C64::new(x.re[(r, t)], x.im[(r, t)]);
                    re[(r, t)] += v.re;
                    im[(r, t)] += v.im;
                }
            }
        }
        Ok(Self {
            charge: first.charge,
            re,
            im,
        })
    }
}

impl<'a> Dynamics<'a> {
    pub fn new(prop: &'a Propagator, state: &InitialState, times: Vec<f64>) -> Result<Self> {
        let comps = state
            .ensemble(prop.basis())?
            .into_iter()
            .map(|c| Component {
                sqrt_w: c.weight.sqrt(),
                sector: c.particles,
                coeffs: prop.vector_in_eigenbasis(&c.vector, c.particles),
            })
            .collect();
        Ok(Self { prop, times, comps })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn basis(&self) -> &FockBasis {
        self.prop.basis()
    }

    pub fn n_components(&self) -> usize {
        self.comps.len()
    }

    fn target(&self, sector: usize, charge: i32) -> Option<usize> {
        let m = sector as i64 + charge as i64;
        (m >= 0 && (m as usize) < self.prop.n_sectors()).then_some(m as usize)
    }

    fn layout_rows(&self, charge: i32) -> usize {
        self.comps
            .iter()
            .map(|c| self.target(c.sector, charge).map_or(0, |m| self.prop.sector_states(m).len()))
            .sum()
    }

    /// `√p_k τ^s(X) χ_k` for an operator of definite charge.
    pub fn heisenberg(&self, x: &ManyBodyOperator) -> Result<Trajectory> {
        let charge = self
            .basis()
            .charge_of(x.matrix())
            .ok_or_else(|| NegfError::Precondition("operator does not have a definite particle-number change".into()))?;
        let nt = self.times.len();
        let rows = self.layout_rows(charge);
        let mut re = DMatrix::zeros(rows, nt);
        let mut im = DMatrix::zeros(rows, nt);
        let mut blocks: HashMap<usize, CMatrix> = HashMap::new();
        let mut row0 = 0;
        for c in &self.comps {
            let Some(m) = self.target(c.sector, charge) else { continue };
            let block = blocks
                .entry(c.sector)
                .or_insert_with(|| self.prop.block_in_eigenbasis(x.matrix(), c.sector, m));
            let e_src = self.prop.energies(c.sector);
            let e_dst = self.prop.energies(m);
            let phased = CMatrix::from_fn(e_src.len(), nt, |b, t| c.coeffs[b] * expi(-self.times[t] * e_src[b]));
            let moved = &*block * phased;
            for a in 0..e_dst.len() {
                for t in 0..nt {
                    let v = moved[(a, t)] * expi(self.times[t] * e_dst[a]) * c.sqrt_w;
                    re[(row0 + a, t)] = v.re;
                    im[(row0 + a, t)] = v.im;
                }
            }
            row0 += e_dst.len();
        }
        Ok(Trajectory { charge, re, im })
    }

    /// `√p_k a(g(s)) χ_k` for a time-dependent one-particle vector `g`,
    /// applied to the initial state without evolution.
    pub fn lowered_initial(&self, g: &dyn Fn(usize) -> CVector) -> Result<Trajectory> {
        let basis = self.basis();
        let n_modes = basis.n_modes();
        let nt = self.times.len();
        let rows = self.layout_rows(-1);
        let mut re = DMatrix::zeros(rows, nt);
        let mut im = DMatrix::zeros(rows, nt);
        let gs: Vec<CVector> = (0..nt).map(g).collect();
        let mut row0 = 0;
        for c in &self.comps {
            let Some(m) = self.target(c.sector, -1) else { continue };
            let states = self.prop.sector_states(c.sector);
            let src = self.prop.eigenvectors(c.sector) * &c.coeffs;
            let dst_states = self.prop.sector_states(m);
            let dst_index: HashMap<usize, usize> = dst_states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
            let mut lowered = CMatrix::zeros(dst_states.len(), n_modes);
            for (b, &s) in states.iter().enumerate() {
                if src[b] == C64::new(0.0, 0.0) {
                    continue;
                }
                for i in 0..n_modes {
                    if let Some((sg, t)) = basis.lower(s, i) {
                        lowered[(dst_index[&t], i)] += src[b] * sg;
                    }
                }
            }
            let in_eig = self.prop.eigenvectors(m).adjoint() * lowered;
            for (t, gt) in gs.iter().enumerate() {
                let col = &in_eig * gt.map(|z| z.conj());
                for a in 0..dst_states.len() {
                    let v = col[a] * c.sqrt_w;
                    re[(row0 + a, t)] = v.re;
                    im[(row0 + a, t)] = v.im;
                }
            }
            row0 += dst_states.len();
        }
        Ok(Trajectory { charge: -1, re, im })
    }

    /// `√p_k χ_k` at every time.
    pub fn identity(&self) -> Trajectory {
        let nt = self.times.len();
        let rows = self.layout_rows(0);
        let mut re = DMatrix::zeros(rows, nt);
        let mut im = DMatrix::zeros(rows, nt);
        let mut row0 = 0;
        for c in &self.comps {
            for a in 0..c.coeffs.len() {
                let v = c.coeffs[a] * c.sqrt_w;
                for t in 0..nt {
                    re[(row0 + a, t)] = v.re;
                    im[(row0 + a, t)] = v.im;
                }
            }
            row0 += c.coeffs.len();
        }
        Trajectory { charge: 0, re, im }
    }

    /// `⟨τ^t(A)⟩` for a number-conserving operator.
    pub fn expectation_series(&self, a: &ManyBodyOperator) -> Result<Vec<C64>> {
        let y = self.heisenberg(a)?;
        Trajectory::equal_time(&self.identity(), &y)
    }
}
