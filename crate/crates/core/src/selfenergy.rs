//! Self-energies: the Hartree-Fock potential, the reducible memory kernel,
//! the irreducible self-energy through the Volterra inverse, the lesser
//! source `S^<` with its first expansion terms, the lesser self-energy and
//! the sign-definite quadratic forms attached to dissipation.
//!
//! Retarded and advanced memory kernels are stored with the one-sided limit
//! on the diagonal, so they enter time integrals directly.

use crate::error::{NegfError, Result};
use crate::fock::{interaction_potential, ManyBodyOperator};
use crate::greens::{Dynamics, GFKernel, Species, System, TimeGrid, Trajectory, TwoTimeKernel};
use crate::linalg::{c, CMatrix, CVector, HermitianSpectrum, C64, I};
use crate::model::lead_spectral_measure;
use crate::states::evolve_one_body;
use crate::volterra::{advanced_apply, compose_lower, kernel_invert, local_left, local_right, retarded_apply, VolterraKernel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelfEnergyKind {
    ReducibleRetarded,
    ReducibleAdvanced,
    IrreducibleRetarded,
    IrreducibleAdvanced,
    LesserSource,
    Lesser,
}

impl SelfEnergyKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::ReducibleRetarded => "reducible_R",
            Self::ReducibleAdvanced => "reducible_A",
            Self::IrreducibleRetarded => "irreducible_R",
            Self::IrreducibleAdvanced => "irreducible_A",
            Self::LesserSource => "lesser_source",
            Self::Lesser => "lesser",
        }
    }

    fn is_advanced(&self) -> bool {
        matches!(self, Self::ReducibleAdvanced | Self::IrreducibleAdvanced)
    }
}

/// Sample-block self-energy with an optional time-local part and a two-time memory part.
#[derive(Debug, Clone, PartialEq)]
pub struct SelfEnergyKernel {
    pub kind: SelfEnergyKind,
    pub instantaneous: Option<Vec<CMatrix>>,
    memory: TwoTimeKernel,
    energy: f64,
}

impl SelfEnergyKernel {
    pub fn new(kind: SelfEnergyKind, instantaneous: Option<Vec<CMatrix>>, memory: TwoTimeKernel) -> Self {
        Self {
            kind,
            instantaneous,
            memory,
            energy: 0.0,
        }
    }

    /// Same kernel at `z = E`; the memory part picks up `e^{i(s'−s)E}`, `v_HF` is unchanged.
    pub fn with_energy(&self, energy: f64) -> Self {
        Self {
            energy,
            ..self.clone()
        }
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn grid(&self) -> &TimeGrid {
        self.memory.grid()
    }

    pub fn dim(&self) -> usize {
        self.memory.rows()
    }

    pub fn memory(&self) -> TwoTimeKernel {
        self.memory.with_phase(self.energy)
    }

    pub fn memory_stored(&self) -> &TwoTimeKernel {
        &self.memory
    }

    pub fn local(&self) -> Vec<CMatrix> {
        match &self.instantaneous {
            Some(v) => v.clone(),
            None => vec![CMatrix::zeros(self.dim(), self.dim()); self.grid().len()],
        }
    }

    /// Memory part embedded in the full one-particle space; lead rows and columns are zero.
    pub fn memory_full(&self, n_modes: usize) -> TwoTimeKernel {
        self.memory().embedded(n_modes, n_modes, 0, 0)
    }
}

/// `c_y = [W, a_y]` for every sample site.
fn interaction_commutators(sys: &System) -> Vec<ManyBodyOperator> {
    (0..sys.spec.n_sample())
        .map(|y| sys.ham.w.commutator(&sys.basis.annihilator(y)))
        .collect()
}

/// `⟨δ_y|v_HF(s)|δ_x⟩ = ξ⟨τ^s({a_y, [W, a_x*]})⟩`.
pub fn hartree_fock_potential(sys: &System, dynamics: &Dynamics<'_>) -> Result<Vec<CMatrix>> {
    let ns = sys.spec.n_sample();
    let nt = dynamics.times().len();
    let mut out = vec![CMatrix::zeros(ns, ns); nt];
    for y in 0..ns {
        let ay = sys.basis.annihilator(y);
        for x in 0..ns {
            let comm = sys.ham.w.commutator(&sys.basis.creator(x));
            let op = ay.anticommutator(&comm);
            let series = dynamics.expectation_series(&op)?;
            for (t, v) in series.into_iter().enumerate() {
                out[t][(y, x)] = v * sys.ham.xi;
            }
        }
    }
    Ok(out)
}

/// `D_{yx}(s,s') = ⟨{τ^s(c_y), τ^{s'}(c_y'†)}⟩` with `c_y = [W, a_y]`, on the full grid.
pub fn interaction_correlator(sys: &System, dynamics: &Dynamics<'_>, grid: &TimeGrid) -> Result<TwoTimeKernel> {
    let cs = interaction_commutators(sys);
    let lower: Vec<Trajectory> = cs.iter().map(|c| dynamics.heisenberg(c)).collect::<Result<_>>()?;
    let raise: Vec<Trajectory> = cs.iter().map(|c| dynamics.heisenberg(&c.adjoint())).collect::<Result<_>>()?;
    let ns = cs.len();
    let mut d = TwoTimeKernel::zeros(*grid, ns, ns);
    for y in 0..ns {
        for x in 0..ns {
            let first = Trajectory::overlap(&raise[y], &raise[x])?;
            let second = Trajectory::overlap(&lower[x], &lower[y])?;
            for k in 0..grid.len() {
                for kp in 0..grid.len() {
                    d.set(k, kp, y, x, first[(k, kp)] + second[(kp, k)]);
                }
            }
        }
    }
    Ok(d)
}

/// Reducible retarded and advanced self-energies from `v_HF` and `D`:
/// `𝔖^R = −iξ²θ(s−s')D`, `𝔖^A = +iξ²θ(s'−s)D`, scaled by `coupling` in place of `ξ`.
pub fn reducible_from_parts(v_hf_unit: &[CMatrix], d: &TwoTimeKernel, coupling: f64) -> (SelfEnergyKernel, SelfEnergyKernel) {
    let v: Vec<CMatrix> = v_hf_unit.iter().map(|m| m * c(coupling, 0.0)).collect();
    let x2 = c(coupling * coupling, 0.0);
    let ret = d.restricted(|k, kp| kp <= k, 1.0).scale(-I * x2);
    let adv = d.restricted(|k, kp| kp >= k, 1.0).scale(I * x2);
    (
        SelfEnergyKernel::new(SelfEnergyKind::ReducibleRetarded, Some(v.clone()), ret),
        SelfEnergyKernel::new(SelfEnergyKind::ReducibleAdvanced, Some(v), adv),
    )
}

/// Both reducible branches for the system's own coupling.
pub fn reducible_pair(sys: &System, dynamics: &Dynamics<'_>, grid: &TimeGrid) -> Result<(SelfEnergyKernel, SelfEnergyKernel)> {
    let v = hartree_fock_potential(sys, dynamics)?;
    let d = interaction_correlator(sys, dynamics, grid)?;
    let xi = sys.ham.xi;
    let unit: Vec<CMatrix> = if xi == 0.0 {
        vec![CMatrix::zeros(sys.spec.n_sample(), sys.spec.n_sample()); grid.len()]
    } else {
        v.iter().map(|m| m / c(xi, 0.0)).collect()
    };
    Ok(reducible_from_parts(&unit, &d, xi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Retarded,
    Advanced,
}

pub fn reducible_kernel(
    sys: &System,
    dynamics: &Dynamics<'_>,
    grid: &TimeGrid,
    energy: f64,
    branch: Branch,
) -> Result<SelfEnergyKernel> {
    let (r, a) = reducible_pair(sys, dynamics, grid)?;
    Ok(match branch {
        Branch::Retarded => r,
        Branch::Advanced => a,
    }
    .with_energy(energy))
}

/// `max ‖𝔖^R(s,s') − 𝔖^A(s',s)†‖`
pub fn adjoint_pairing_defect(ret: &SelfEnergyKernel, adv: &SelfEnergyKernel) -> Result<f64> {
    ret.memory().max_abs_diff(&adv.memory().adjoint())
}

fn check_branch(g: &GFKernel, expect: Species) -> Result<()> {
    if g.species != expect {
        return Err(NegfError::Precondition(format!(
            "expected a {} kernel, got {}",
            expect.name(),
            g.species.name()
        )));
    }
    Ok(())
}

/// Retarded-form kernels: `(g, g0, v, memory)`, lower triangular, memory one-sided.
struct LowerForm {
    g: TwoTimeKernel,
    g_causal: TwoTimeKernel,
    g0: TwoTimeKernel,
    g0_causal: TwoTimeKernel,
    v: Vec<CMatrix>,
    m: TwoTimeKernel,
}

/// Brings a retarded or advanced problem into retarded form, taking adjoints for the advanced branch.
fn lower_form(g: &GFKernel, g0: &GFKernel, sigma: &SelfEnergyKernel) -> Result<LowerForm> {
    let advanced = sigma.kind.is_advanced();
    let species = if advanced { Species::Advanced } else { Species::Retarded };
    check_branch(g, species)?;
    check_branch(g0, species)?;
    g.grid().same_as(g0.grid())?;
    g.grid().same_as(sigma.grid())?;
    let fix = |k: TwoTimeKernel| if advanced { k.adjoint() } else { k };
    let v = sigma.local().iter().map(|m| if advanced { m.adjoint() } else { m.clone() }).collect();
    Ok(LowerForm {
        g: fix(g.materialize()),
        g_causal: fix(g.causal()?),
        g0: fix(g0.materialize()),
        g0_causal: fix(g0.causal()?),
        v,
        m: fix(sigma.memory()),
    })
}

/// `∫∫ A(s,r) Σ(r,u) B(u,s')` with `Σ = vδ + M`, for lower-triangular `A`, `B`.
fn sandwich_lower(a: &TwoTimeKernel, v: &[CMatrix], m: &TwoTimeKernel, b: &TwoTimeKernel) -> Result<TwoTimeKernel> {
    let local = compose_lower(a, &local_left(v, b)?)?;
    let memory = compose_lower(a, &compose_lower(m, b)?)?;
    local.add(&memory)
}

fn lower_residual(lhs: &TwoTimeKernel, rhs: &TwoTimeKernel) -> Result<f64> {
    Ok(lhs.sub(rhs)?.max_abs_where(|k, kp| kp <= k))
}

/// Residual of `G = G_0 + G_0 Σ̃ G_0` on the sample block.
pub fn reducible_identity_residual(g: &GFKernel, g0: &GFKernel, sigma: &SelfEnergyKernel) -> Result<f64> {
    let f = lower_form(g, g0, sigma)?;
    let rhs = f.g0.add(&sandwich_lower(&f.g0_causal, &f.v, &f.m, &f.g0_causal)?)?;
    lower_residual(&f.g, &rhs)
}

/// Residuals of `G = G_0 + G_0ΣG` and `G = G_0 + GΣG_0`.
pub fn dyson_residuals(g: &GFKernel, g0: &GFKernel, sigma: &SelfEnergyKernel) -> Result<(f64, f64)> {
    let f = lower_form(g, g0, sigma)?;
    let left = f.g0.add(&sandwich_lower(&f.g0_causal, &f.v, &f.m, &f.g_causal)?)?;
    let right = f.g0.add(&sandwich_lower(&f.g_causal, &f.v, &f.m, &f.g0_causal)?)?;
    Ok((lower_residual(&f.g, &left)?, lower_residual(&f.g, &right)?))
}

/// `Σ = Σ̃(I + G_0Σ̃)^{-1}` in retarded form; returns the memory part.
fn irreducible_right(v: &[CMatrix], m: &TwoTimeKernel, g0c: &TwoTimeKernel) -> Result<TwoTimeKernel> {
    let p = local_right(g0c, v)?.restricted(|k, kp| kp <= k, 1.0).add(&compose_lower(g0c, m)?)?;
    let r = kernel_invert(&VolterraKernel::new(p.scale(c(-1.0, 0.0)))?)?.into_kernel();
    m.add(&local_left(v, &r)?)?.add(&compose_lower(m, &r)?)
}

/// `Σ' = (I + Σ̃G_0)^{-1}Σ̃` in retarded form; returns the memory part.
fn irreducible_left(v: &[CMatrix], m: &TwoTimeKernel, g0c: &TwoTimeKernel) -> Result<TwoTimeKernel> {
    let q = local_left(v, g0c)?.restricted(|k, kp| kp <= k, 1.0).add(&compose_lower(m, g0c)?)?;
    let r = kernel_invert(&VolterraKernel::new(q.scale(c(-1.0, 0.0)))?)?.into_kernel();
    m.add(&local_right(&r, v)?)?.add(&compose_lower(&r, m)?)
}

/// `Σ^± = Σ̃^±(I + G_0^±Σ̃^±)^{-1}`. The advanced branch is evaluated through
/// its adjoint, which is a retarded-form Volterra problem.
pub fn irreducible_from_reducible(sigma: &SelfEnergyKernel, g0: &GFKernel) -> Result<SelfEnergyKernel> {
    let advanced = match sigma.kind {
        SelfEnergyKind::ReducibleRetarded => false,
        SelfEnergyKind::ReducibleAdvanced => true,
        other => {
            return Err(NegfError::Precondition(format!("{} is not a reducible self-energy", other.name())));
        }
    };
    check_branch(g0, if advanced { Species::Advanced } else { Species::Retarded })?;
    let v = sigma.local();
    let (memory, kind) = if advanced {
        let x = sigma.memory().adjoint();
        let g0c = g0.causal()?.adjoint();
        let vh: Vec<CMatrix> = v.iter().map(|m| m.adjoint()).collect();
        (irreducible_left(&vh, &x, &g0c)?.adjoint(), SelfEnergyKind::IrreducibleAdvanced)
    } else {
        (irreducible_right(&v, &sigma.memory(), &g0.causal()?)?, SelfEnergyKind::IrreducibleRetarded)
    };
    Ok(SelfEnergyKernel {
        kind,
        instantaneous: sigma.instantaneous.clone(),
        memory: memory.with_phase(-sigma.energy),
        energy: sigma.energy,
    })
}

/// `S^<` from exact dynamics with its first two expansion terms in `ξ`.
#[derive(Debug, Clone)]
pub struct LesserSource {
    pub full: SelfEnergyKernel,
    pub order0: SelfEnergyKernel,
    pub order1: SelfEnergyKernel,
}

fn require_vacuum(sys: &System) -> Result<()> {
    if !sys.state.sample_vacuum {
        return Err(NegfError::Precondition(
            "the lesser source needs a state whose sample factor is the vacuum".into(),
        ));
    }
    Ok(())
}

/// `S^<_{xx'}(s,s') = i⟨T*_{x'}(s')T_x(s)⟩` with `T_x(s) = a(e^{ish_D}h_Tδ_x) + ξτ^s(a_xV_x)`.
pub fn lesser_source_exact(sys: &System, dynamics: &Dynamics<'_>, grid: &TimeGrid) -> Result<TwoTimeKernel> {
    require_vacuum(sys)?;
    let ns = sys.spec.n_sample();
    let ob = &sys.ham.one_body;
    let hd = HermitianSpectrum::new(&ob.h_d);
    let times = grid.times();
    let xi = c(sys.ham.xi, 0.0);
    let mut ts = Vec::with_capacity(ns);
    for x in 0..ns {
        let seed = &ob.h_t * sys.spec.sample_site_full(x);
        let free = dynamics.lowered_initial(&|t| evolve_one_body(&hd, &seed, times[t]))?;
        let op = &sys.basis.annihilator(x) * &interaction_potential(&sys.spec, &sys.basis, x);
        if op.max_norm() == 0.0 {
            ts.push(free);
            continue;
        }
        let inter = dynamics.heisenberg(&op)?;
        let one = |_: usize| c(1.0, 0.0);
        let cx = |_: usize| xi;
        ts.push(Trajectory::combine(&[(&free, &one), (&inter, &cx)])?);
    }
    let mut out = TwoTimeKernel::zeros(*grid, ns, ns);
    for x in 0..ns {
        for xp in 0..ns {
            let o = Trajectory::overlap(&ts[xp], &ts[x])?;
            for k in 0..grid.len() {
                for kp in 0..grid.len() {
                    out.set(k, kp, x, xp, o[(kp, k)] * I);
                }
            }
        }
    }
    Ok(out)
}

/// `S^{<(0)}_{xx'}(s,s') = i Σ_j d_j² ∫dν_j(E) e^{i(s'−s)E}/(1+e^{β_j(E−μ_j)}) ⟨x|φ_j⟩⟨φ_j|x'⟩`.
pub fn lesser_source_order0(sys: &System, grid: &TimeGrid) -> Result<TwoTimeKernel> {
    let spec = &sys.spec;
    let ns = spec.n_sample();
    let measures = spec.leads.iter().map(lead_spectral_measure).collect::<Result<Vec<_>>>()?;
    Ok(TwoTimeKernel::from_fn(*grid, ns, ns, |k, kp| {
        let mut m = CMatrix::zeros(ns, ns);
        for (j, lead) in spec.leads.iter().enumerate() {
            let f = |e: f64| crate::linalg::fermi(lead.beta, lead.mu, e);
            let sum = measures[j].phase_sum(grid.t(kp) - grid.t(k), f);
            m += &lead.phi * lead.phi.adjoint() * (sum * (lead.d * lead.d));
        }
        m * I
    }))
}

/// `S^{<(0)}` as the matrix element `i⟨x|h_T e^{−ish_R} ϱ_R e^{is'h_R} h_T|x'⟩`.
pub fn lesser_source_order0_matrix(sys: &System, grid: &TimeGrid) -> Result<TwoTimeKernel> {
    let ob = &sys.ham.one_body;
    let rho = crate::model::fermi_reservoir_density(&sys.spec)?;
    let hr = HermitianSpectrum::new(&ob.h_r());
    let ns = sys.spec.n_sample();
    let seeds: Vec<CVector> = (0..ns).map(|x| &ob.h_t * sys.spec.sample_site_full(x)).collect();
    let ev: Vec<Vec<CVector>> = seeds.iter().map(|s| grid.times().iter().map(|&t| evolve_one_body(&hr, s, t)).collect()).collect();
    Ok(TwoTimeKernel::from_fn(*grid, ns, ns, |k, kp| {
        CMatrix::from_fn(ns, ns, |x, xp| ev[x][k].dotc(&(&rho * &ev[xp][kp])) * I)
    }))
}

/// First-order term `S^{<(1)}` from the quasi-free expansion of `⟨T*T⟩`:
///
/// `i Σ_y { w(x,y)[X_{xx'} n_y(s) − ρ_{xy}(s) X_{yx'}] + w(x',y)[n_y(s') Y_{xx'} − Y_{xy} ρ_{yx'}(s')] }`
///
/// with `X_{ab} = ⟨a|e^{−ish}ϱe^{is'h_R}h_T|b⟩`, `Y_{ab} = ⟨a|h_T e^{−ish_R}ϱe^{is'h}|b⟩`,
/// `ρ(s) = e^{−ish}ϱe^{ish}` and `n_y = ρ_{yy}`.
pub fn lesser_source_order1(sys: &System, grid: &TimeGrid) -> Result<TwoTimeKernel> {
    let ob = &sys.ham.one_body;
    let rho = crate::model::fermi_reservoir_density(&sys.spec)?;
    let h = HermitianSpectrum::new(&ob.h);
    let hr = HermitianSpectrum::new(&ob.h_r());
    let ns = sys.spec.n_sample();
    let w = &sys.spec.w;
    let sites: Vec<CVector> = (0..ns).map(|x| sys.spec.sample_site_full(x)).collect();
    let seeds: Vec<CVector> = sites.iter().map(|e| &ob.h_t * e).collect();
    let times = grid.times();
    // e^{ish}δ_a and e^{ish_R}h_Tδ_a for each grid time.
    let p: Vec<Vec<CVector>> = sites.iter().map(|e| times.iter().map(|&t| evolve_one_body(&h, e, t)).collect()).collect();
    let u: Vec<Vec<CVector>> = seeds.iter().map(|e| times.iter().map(|&t| evolve_one_body(&hr, e, t)).collect()).collect();
    let rho_of = |k: usize| CMatrix::from_fn(ns, ns, |a, b| p[a][k].dotc(&(&rho * &p[b][k])));
    let dens: Vec<CMatrix> = (0..grid.len()).map(rho_of).collect();
    Ok(TwoTimeKernel::from_fn(*grid, ns, ns, |k, kp| {
        let x_m = CMatrix::from_fn(ns, ns, |a, b| p[a][k].dotc(&(&rho * &u[b][kp])));
        let y_m = CMatrix::from_fn(ns, ns, |a, b| u[a][k].dotc(&(&rho * &p[b][kp])));
        CMatrix::from_fn(ns, ns, |x, xp| {
            let mut acc = C64::new(0.0, 0.0);
            for y in 0..ns {
                acc += (x_m[(x, xp)] * dens[k][(y, y)] - dens[k][(x, y)] * x_m[(y, xp)]) * w[(x, y)];
                acc += (y_m[(x, xp)] * dens[kp][(y, y)] - y_m[(x, y)] * dens[kp][(y, xp)]) * w[(xp, y)];
            }
            acc * I
        })
    }))
}

pub fn lesser_source_kernel(sys: &System, dynamics: &Dynamics<'_>, grid: &TimeGrid) -> Result<LesserSource> {
    let full = lesser_source_exact(sys, dynamics, grid)?;
    let order0 = lesser_source_order0(sys, grid)?;
    let order1 = lesser_source_order1(sys, grid)?;
    let wrap = |k| SelfEnergyKernel::new(SelfEnergyKind::LesserSource, None, k);
    Ok(LesserSource {
        full: wrap(full),
        order0: wrap(order0),
        order1: wrap(order1),
    })
}

/// `∫_0^t ds ∫_0^{t'} ds' R(t,s) K(s,s') A(s',t')`
pub fn keldysh_sandwich(r: &TwoTimeKernel, k: &TwoTimeKernel, a: &TwoTimeKernel) -> Result<TwoTimeKernel> {
    advanced_apply(&retarded_apply(r, k)?, a)
}

/// Residual of `G^< = ∫∫ G_0^R S^< G_0^A` on the sample block.
pub fn keldysh_decoupling_residual(g_less: &GFKernel, g0r: &GFKernel, g0a: &GFKernel, s_less: &SelfEnergyKernel) -> Result<f64> {
    check_branch(g_less, Species::Lesser)?;
    let rhs = keldysh_sandwich(&g0r.causal()?, &s_less.memory(), &g0a.causal()?)?;
    g_less.materialize().max_abs_diff(&rhs)
}

/// `Σ^< = (I − Σ^R G_0^R) S^< (I − G_0^A Σ^A)`.
pub fn lesser_sigma(
    s_less: &SelfEnergyKernel,
    sigma_r: &SelfEnergyKernel,
    sigma_a: &SelfEnergyKernel,
    g0r: &GFKernel,
    g0a: &GFKernel,
) -> Result<SelfEnergyKernel> {
    check_branch(g0r, Species::Retarded)?;
    check_branch(g0a, Species::Advanced)?;
    let g0rc = g0r.causal()?;
    let g0ac = g0a.causal()?;
    // Σ^R G_0^R as a lower-triangular kernel.
    let p = local_left(&sigma_r.local(), &g0rc)?.add(&compose_lower(&sigma_r.memory(), &g0rc)?)?;
    // G_0^A Σ^A as an upper-triangular kernel, via the adjoint of a lower composition.
    let q_lower = local_left(
        &sigma_a.local().iter().map(|m| m.adjoint()).collect::<Vec<_>>(),
        &g0ac.adjoint(),
    )?
    .add(&compose_lower(&sigma_a.memory().adjoint(), &g0ac.adjoint())?)?;
    let q = q_lower.adjoint();
    let s = s_less.memory();
    let left = s.sub(&retarded_apply(&p, &s)?)?;
    let out = left.sub(&advanced_apply(&left, &q)?)?;
    Ok(SelfEnergyKernel::new(SelfEnergyKind::Lesser, None, out))
}

/// Residual of `G^< = ∫∫ G^R Σ^< G^A`.
pub fn keldysh_identity_residual(g_less: &GFKernel, g_r: &GFKernel, g_a: &GFKernel, sigma_less: &SelfEnergyKernel) -> Result<f64> {
    check_branch(g_less, Species::Lesser)?;
    check_branch(g_r, Species::Retarded)?;
    check_branch(g_a, Species::Advanced)?;
    let rhs = keldysh_sandwich(&g_r.causal()?, &sigma_less.memory(), &g_a.causal()?)?;
    g_less.materialize().max_abs_diff(&rhs)
}

/// Trapezoid weights of the half-square `{s' ≤ s}` as a symmetric split of the
/// full square: `w_k w_k'` off the diagonal, `w_k²/2` on it.
fn triangle_weight(w: &[f64], k: usize, kp: usize) -> f64 {
    if k == kp {
        0.5 * w[k] * w[k]
    } else {
        w[k] * w[kp]
    }
}

/// `Re ∬_{s'≤s} e^{−η(s−s')} A_s* A_{s'}` as a Hermitian matrix, for a family sampled on the grid.
pub fn positivity_form(grid: &TimeGrid, family: &[CMatrix], eta: f64) -> Result<CMatrix> {
    if family.len() != grid.len() {
        return Err(NegfError::GridMismatch(format!("{} samples for {} grid points", family.len(), grid.len())));
    }
    let w = grid.weights();
    let n = family[0].ncols();
    let mut acc = CMatrix::zeros(n, n);
    for k in 0..grid.len() {
        let ak = family[k].adjoint();
        for kp in 0..=k {
            let f = triangle_weight(&w, k, kp) * (-eta * (grid.t(k) - grid.t(kp))).exp();
            acc += &ak * &family[kp] * c(f, 0.0);
        }
    }
    Ok((&acc + acc.adjoint()) * c(0.5, 0.0))
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    HermitianSpectrum::new(m).values.first().copied().unwrap_or(0.0)
}

/// `Im ∫_0^T ds ∫_0^s ds' e^{−η(s−s')} ⟨φ(s)|Σ(s,s')|φ(s')⟩ + Im z ∫_0^T ‖φ‖²`, with the
/// local part included. Non-positive for the retarded branch.
pub fn dissipation_form(sigma: &SelfEnergyKernel, phi: &[CVector], eta: f64, im_z: f64) -> Result<f64> {
    let g = *sigma.grid();
    if phi.len() != g.len() {
        return Err(NegfError::GridMismatch(format!("{} samples for {} grid points", phi.len(), g.len())));
    }
    let w = g.weights();
    let m = sigma.memory();
    let v = sigma.local();
    let mut acc = C64::new(0.0, 0.0);
    let mut norm = 0.0;
    for k in 0..g.len() {
        acc += phi[k].dotc(&(&v[k] * &phi[k])) * w[k];
        norm += w[k] * phi[k].norm_squared();
        for kp in 0..=k {
            let f = triangle_weight(&w, k, kp) * (-eta * (g.t(k) - g.t(kp))).exp();
            acc += phi[k].dotc(&(m.matrix(k, kp) * &phi[kp])) * f;
        }
    }
    Ok(acc.im + im_z * norm)
}

/// Solution of `i∂_sφ = (h+z)φ + (Σ^-φ)(s)` by two routes.
#[derive(Debug, Clone)]
pub struct EffectiveEvolution {
    /// Crank-Nicolson march with the memory integral by trapezoid.
    pub march: Vec<CVector>,
    /// `φ = ψ + G_0^-(z)Σ^-φ` with `ψ(s) = e^{−is(h+z)}φ(0)`, solved as a Volterra equation.
    pub integral: Vec<CVector>,
}

impl EffectiveEvolution {
    pub fn norms(&self) -> Vec<f64> {
        self.march.iter().map(|v| v.norm()).collect()
    }

    /// Largest `‖φ(s)‖/‖φ(0)‖ − 1` over the march.
    pub fn growth(&self) -> f64 {
        let n0 = self.march[0].norm();
        self.march.iter().map(|v| v.norm() / n0 - 1.0).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn route_difference(&self) -> f64 {
        self.march
            .iter()
            .zip(&self.integral)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

pub fn effective_propagator(sigma: &SelfEnergyKernel, h: &CMatrix, z: C64, phi0: &CVector) -> Result<EffectiveEvolution> {
    if sigma.kind != SelfEnergyKind::IrreducibleRetarded && sigma.kind != SelfEnergyKind::ReducibleRetarded {
        return Err(NegfError::Precondition("the propagator needs a retarded self-energy".into()));
    }
    if z.im > 0.0 {
        return Err(NegfError::Precondition("the propagator needs Im z <= 0".into()));
    }
    let g = *sigma.grid();
    let n = h.nrows();
    let dt = g.dt();
    let memory = sigma.memory_full(n);
    let local: Vec<CMatrix> = sigma.local().iter().map(|v| {
        let mut full = CMatrix::zeros(n, n);
        full.view_mut((0, 0), (v.nrows(), v.ncols())).copy_from(v);
        full
    }).collect();
    let hz = h + CMatrix::identity(n, n) * z;
    let half = c(0.5 * dt, 0.0);

    let mut march: Vec<CVector> = vec![phi0.clone()];
    let force = |k: usize, states: &[CVector], include_diag: bool| -> CVector {
        let mut f = (&hz + &local[k]) * &states[k];
        for m in 0..k {
            f += memory.matrix(k, m) * &states[m] * c(g.weight(0, k, m), 0.0);
        }
        if include_diag && k > 0 {
            f += memory.matrix(k, k) * &states[k] * half;
        }
        f
    };
    for k in 0..g.n() {
        let fk = force(k, &march, true);
        // Known part of F_{k+1}: history up to k.
        let mut hist = CVector::zeros(n);
        for m in 0..=k {
            hist += memory.matrix(k + 1, m) * &march[m] * c(g.weight(0, k + 1, m), 0.0);
        }
        let a_next = &hz + &local[k + 1] + memory.matrix(k + 1, k + 1) * half;
        let lhs = CMatrix::identity(n, n) + &a_next * (I * half);
        let rhs = &march[k] - (&fk + &hist) * (I * half);
        let sol = lhs.lu().solve(&rhs).ok_or_else(|| NegfError::Numerical {
            op: "effective propagator step".into(),
            detail: format!("singular implicit system at t = {}", g.t(k + 1)),
        })?;
        march.push(sol);
    }

    // Volterra route: B = G_0^-(z) Σ^- on the full space.
    let hs = HermitianSpectrum::new(h);
    let g0 = TwoTimeKernel::from_fn(g, n, n, |k, kp| {
        if kp <= k {
            let tau = g.t(kp) - g.t(k);
            hs.exp_i(tau) * ((I * z * tau).exp() * (-I))
        } else {
            CMatrix::zeros(n, n)
        }
    });
    let b = local_right(&g0, &local)?.restricted(|k, kp| kp <= k, 1.0).add(&compose_lower(&g0, &memory)?)?;
    let psi: Vec<CVector> = (0..g.len())
        .map(|k| hs.exp_i(-g.t(k)) * phi0 * (-I * z * g.t(k)).exp())
        .collect();
    let mut integral: Vec<CVector> = Vec::with_capacity(g.len());
    for k in 0..g.len() {
        let mut rhs = psi[k].clone();
        for m in 0..k {
            rhs += b.matrix(k, m) * &integral[m] * c(g.weight(0, k, m), 0.0);
        }
        let solve = if k == 0 {
            rhs
        } else {
            let lhs = CMatrix::identity(n, n) - b.matrix(k, k) * half;
            lhs.lu().solve(&rhs).ok_or_else(|| NegfError::Numerical {
                op: "effective propagator integral equation".into(),
                detail: format!("singular diagonal at t = {}", g.t(k)),
            })?
        };
        integral.push(solve);
    }
    Ok(EffectiveEvolution { march, integral })
}

#[cfg(test)]
mod tests;
