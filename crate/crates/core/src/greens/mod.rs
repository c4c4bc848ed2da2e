//! Two-time Green's functions on a uniform grid.
//!
//! Stored retarded and advanced kernels use `θ(0) = 1/2`. Integrals over
//! time need the one-sided limit instead, which [`GFKernel::causal`] supplies.

mod dynamics;
mod grid;
mod kernel;

pub use dynamics::{Dynamics, Trajectory};
pub use grid::TimeGrid;
pub use kernel::{GFKernel, ScalarKernel, Species, TwoTimeKernel};

use crate::error::{NegfError, Result};
use crate::fock::{build_hamiltonians, FockBasis, Hamiltonians, ManyBodyOperator, Propagator};
use crate::linalg::{CMatrix, CVector, HermitianSpectrum, C64, I};
use crate::model::ModelSpec;
use crate::states::{evolve_one_body, initial_product_state, InitialState};

/// `τ_K^t(X)`
pub fn evolve_heisenberg(k: &Propagator, x: &ManyBodyOperator, t: f64) -> ManyBodyOperator {
    k.evolve(x, t)
}

/// The many-body problem: model, Fock space, Hamiltonians, the spectral
/// decomposition of `K`, and an initial state.
pub struct System {
    pub spec: ModelSpec,
    pub basis: FockBasis,
    pub ham: Hamiltonians,
    pub prop: Propagator,
    pub state: InitialState,
}

impl System {
    /// Product state with the sample in its vacuum.
    pub fn new(spec: &ModelSpec) -> Result<Self> {
        let basis = FockBasis::new(spec.n_modes())?;
        let state = initial_product_state(spec, &basis)?;
        Self::with_state(spec, basis, state)
    }

    pub fn with_state(spec: &ModelSpec, basis: FockBasis, state: InitialState) -> Result<Self> {
        let ham = build_hamiltonians(spec, &basis)?;
        let prop = Propagator::new(&ham.k, &basis)?;
        Ok(Self {
            spec: spec.clone(),
            basis,
            ham,
            prop,
            state,
        })
    }

    pub fn dynamics(&self, grid: &TimeGrid) -> Result<Dynamics<'_>> {
        Dynamics::new(&self.prop, &self.state, grid.times())
    }

    /// Unit vectors of the sample sites in the full one-particle space.
    pub fn sample_vectors(&self) -> Vec<CVector> {
        (0..self.spec.n_sample()).map(|x| self.spec.sample_site_full(x)).collect()
    }
}

/// Interacting lesser, greater, retarded and advanced kernels on one block.
#[derive(Debug, Clone)]
pub struct InteractingGreens {
    pub lesser: GFKernel,
    pub greater: GFKernel,
    pub retarded: GFKernel,
    pub advanced: GFKernel,
}

/// Lowering trajectories `τ^s(a(f))χ` and raising trajectories `τ^s(a*(f))χ`.
pub struct LadderTrajectories {
    pub lowering: Vec<Trajectory>,
    pub raising: Vec<Trajectory>,
}

impl LadderTrajectories {
    pub fn new(dynamics: &Dynamics<'_>, vectors: &[CVector]) -> Result<Self> {
        let basis = dynamics.basis();
        let mut lowering = Vec::new();
        let mut raising = Vec::new();
        for f in vectors {
            lowering.push(dynamics.heisenberg(&basis.annihilate(f)?)?);
            raising.push(dynamics.heisenberg(&basis.create(f)?)?);
        }
        Ok(Self { lowering, raising })
    }
}

fn kernel_from_overlaps(
    grid: &TimeGrid,
    rows: usize,
    cols: usize,
    entry: impl Fn(usize, usize) -> Result<CMatrix>,
) -> Result<TwoTimeKernel> {
    let mut out = TwoTimeKernel::zeros(*grid, rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            let m = entry(i, j)?;
            for k in 0..grid.len() {
                for kp in 0..grid.len() {
                    out.set(k, kp, i, j, m[(k, kp)]);
                }
            }
        }
    }
    Ok(out)
}

/// `⟨f|G^<(s,s')|g⟩ = i⟨τ^{s'}(a*(g))τ^s(a(f))⟩` and
/// `⟨f|G^>(s,s')|g⟩ = −i⟨τ^s(a(f))τ^{s'}(a*(g))⟩`.
pub fn lesser_greater_from(
    grid: &TimeGrid,
    rows: &LadderTrajectories,
    cols: &LadderTrajectories,
    block: &str,
) -> Result<(GFKernel, GFKernel)> {
    let (nr, nc) = (rows.lowering.len(), cols.lowering.len());
    let lesser = kernel_from_overlaps(grid, nr, nc, |i, j| {
        Ok(Trajectory::overlap(&cols.lowering[j], &rows.lowering[i])?.transpose() * I)
    })?;
    let greater = kernel_from_overlaps(grid, nr, nc, |i, j| {
        Ok(Trajectory::overlap(&rows.raising[i], &cols.raising[j])? * (-I))
    })?;
    Ok((
        GFKernel::new(Species::Lesser, block, lesser),
        GFKernel::new(Species::Greater, block, greater),
    ))
}

/// Retarded and advanced kernels from the spectral kernel `A = i(G^> − G^<)`.
pub fn causal_pair_from_spectral(spectral: &TwoTimeKernel, block: &str) -> (GFKernel, GFKernel) {
    let ret = spectral.restricted(|k, kp| kp < k, 0.5).scale(-I);
    let adv = spectral.restricted(|k, kp| kp > k, 0.5).scale(I);
    (
        GFKernel::new(Species::Retarded, block, ret),
        GFKernel::new(Species::Advanced, block, adv),
    )
}

pub fn interacting_greens(
    dynamics: &Dynamics<'_>,
    grid: &TimeGrid,
    rows: &[CVector],
    cols: &[CVector],
    block: &str,
) -> Result<InteractingGreens> {
    let rt = LadderTrajectories::new(dynamics, rows)?;
    let ct = LadderTrajectories::new(dynamics, cols)?;
    interacting_greens_from(grid, &rt, &ct, block)
}

pub fn interacting_greens_from(
    grid: &TimeGrid,
    rows: &LadderTrajectories,
    cols: &LadderTrajectories,
    block: &str,
) -> Result<InteractingGreens> {
    let (lesser, greater) = lesser_greater_from(grid, rows, cols, block)?;
    let spectral = greater.stored().sub(lesser.stored())?.scale(I);
    let (retarded, advanced) = causal_pair_from_spectral(&spectral, block);
    Ok(InteractingGreens {
        lesser,
        greater,
        retarded,
        advanced,
    })
}

pub fn gf_lesser_greater(
    dynamics: &Dynamics<'_>,
    grid: &TimeGrid,
    rows: &[CVector],
    cols: &[CVector],
    block: &str,
) -> Result<(GFKernel, GFKernel)> {
    let rt = LadderTrajectories::new(dynamics, rows)?;
    let ct = LadderTrajectories::new(dynamics, cols)?;
    lesser_greater_from(grid, &rt, &ct, block)
}

pub fn gf_retarded_advanced(
    dynamics: &Dynamics<'_>,
    grid: &TimeGrid,
    rows: &[CVector],
    cols: &[CVector],
    block: &str,
    energy: f64,
) -> Result<(GFKernel, GFKernel)> {
    let g = interacting_greens(dynamics, grid, rows, cols, block)?;
    Ok((g.retarded.with_energy(energy), g.advanced.with_energy(energy)))
}

/// Matrix `⟨u_i|M|v_j⟩` for the lists of vectors.
fn projected(u: &[CVector], m: &CMatrix, v: &[CVector]) -> CMatrix {
    CMatrix::from_fn(u.len(), v.len(), |i, j| u[i].dotc(&(m * &v[j])))
}

/// Free retarded or advanced kernel of a Hermitian generator:
/// `∓iθ(±(s−s')) e^{i(s'−s)E} ⟨f|e^{i(s'−s)h}|g⟩`.
pub fn gf_free(
    h: &CMatrix,
    rows: &[CVector],
    cols: &[CVector],
    grid: &TimeGrid,
    energy: f64,
    species: Species,
    block: &str,
) -> Result<GFKernel> {
    let (keep, z): (fn(usize, usize) -> bool, C64) = match species {
        Species::Retarded => (|k, kp| kp < k, -I),
        Species::Advanced => (|k, kp| kp > k, I),
        other => {
            return Err(NegfError::Precondition(format!(
                "free {} kernels need a density, use gf_free_correlation",
                other.name()
            )))
        }
    };
    let hs = HermitianSpectrum::new(h);
    let values = TwoTimeKernel::from_fn(*grid, rows.len(), cols.len(), |k, kp| {
        if k == kp || keep(k, kp) {
            projected(rows, &hs.exp_i(grid.t(kp) - grid.t(k)), cols)
        } else {
            CMatrix::zeros(rows.len(), cols.len())
        }
    })
    .restricted(keep, 0.5)
    .scale(z);
    Ok(GFKernel::new(species, block, values).with_energy(energy))
}

/// Free lesser `i⟨f|e^{−ish}ϱe^{is'h}|g⟩` or greater `−i⟨f|e^{−ish}(I−ϱ)e^{is'h}|g⟩`.
pub fn gf_free_correlation(
    h: &CMatrix,
    varrho: &CMatrix,
    rows: &[CVector],
    cols: &[CVector],
    grid: &TimeGrid,
    species: Species,
    block: &str,
) -> Result<GFKernel> {
    let (m, z) = match species {
        Species::Lesser => (varrho.clone(), I),
        Species::Greater => (CMatrix::identity(h.nrows(), h.ncols()) - varrho, -I),
        other => {
            return Err(NegfError::Precondition(format!(
                "{} is not a correlation species",
                other.name()
            )))
        }
    };
    let hs = HermitianSpectrum::new(h);
    let pr: Vec<Vec<CVector>> = rows.iter().map(|f| grid.times().iter().map(|&t| evolve_one_body(&hs, f, t)).collect()).collect();
    let pc: Vec<Vec<CVector>> = cols.iter().map(|g| grid.times().iter().map(|&t| &m * evolve_one_body(&hs, g, t)).collect()).collect();
    let values = TwoTimeKernel::from_fn(*grid, rows.len(), cols.len(), |k, kp| {
        CMatrix::from_fn(rows.len(), cols.len(), |i, j| pr[i][k].dotc(&pc[j][kp]) * z)
    });
    Ok(GFKernel::new(species, block, values))
}

/// `A = i(G^> − G^<)` and `G^K = G^< + G^>`.
pub fn spectral_and_keldysh(
    lesser: &GFKernel,
    greater: &GFKernel,
    retarded: &GFKernel,
    advanced: &GFKernel,
) -> Result<(GFKernel, GFKernel)> {
    for g in [greater, retarded, advanced] {
        lesser.grid().same_as(g.grid())?;
        if g.block != lesser.block {
            return Err(NegfError::GridMismatch(format!("blocks '{}' and '{}' differ", lesser.block, g.block)));
        }
    }
    let a = greater.materialize().sub(&lesser.materialize())?.scale(I);
    let keldysh = lesser.materialize().add(&greater.materialize())?;
    Ok((
        GFKernel::new(Species::Spectral, lesser.block.clone(), a),
        GFKernel::new(Species::Keldysh, lesser.block.clone(), keldysh),
    ))
}

/// `max |i(G^> − G^<) − i(G^R − G^A)|` over the grid.
pub fn spectral_consistency(g: &InteractingGreens) -> Result<f64> {
    let a1 = g.greater.materialize().sub(&g.lesser.materialize())?.scale(I);
    let a2 = g.retarded.materialize().sub(&g.advanced.materialize())?.scale(I);
    a1.max_abs_diff(&a2)
}

/// `max_{s,s'} ‖G^R(s,s')† − G^A(s',s)‖`
pub fn conjugation_defect(retarded: &GFKernel, advanced: &GFKernel) -> Result<f64> {
    retarded.materialize().adjoint().max_abs_diff(&advanced.materialize())
}

/// `max_{s,s'} ‖G(s,s')† + G(s',s)‖` for lesser or greater kernels.
pub fn antihermiticity_defect(g: &GFKernel) -> Result<f64> {
    let m = g.materialize();
    Ok(m.adjoint().add(&m)?.max_abs())
}

/// `max_k ‖A(t_k,t_k) − I‖`
pub fn spectral_normalization_defect(spectral: &GFKernel) -> f64 {
    let n = spectral.stored().rows();
    let id = CMatrix::identity(n, n);
    (0..spectral.grid().len())
        .map(|k| crate::linalg::max_abs(&(spectral.value(k, k) - &id)))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests;
