//! Initial states: finite Gibbs states of the leads, the product state with
//! the sample in its vacuum, quasi-free correlators and the KMS identity.

use crate::error::{dim_check, NegfError, Result};
use crate::fock::{FockBasis, ManyBodyOperator, Propagator};
use crate::linalg::{c, expi, max_abs, CMatrix, CVector, HermitianSpectrum, C64};
use crate::model::{fermi_reservoir_density, LeadSpec, ModelSpec};

/// Grand-canonical Gibbs state `e^{−β(H_j−μN_j)}/Z` on the Fock space of a single lead.
pub fn gibbs_lead_state(lead: &LeadSpec, basis: &FockBasis) -> Result<ManyBodyOperator> {
    dim_check("lead Fock basis", lead.n_sites(), basis.n_modes())?;
    if lead.beta.is_nan() || lead.beta <= 0.0 {
        return Err(NegfError::InvalidModel("beta must be positive".into()));
    }
    let shifted = &lead.h - CMatrix::identity(lead.n_sites(), lead.n_sites()) * c(lead.mu, 0.0);
    let k = basis.second_quantize(&shifted)?;
    let p = Propagator::new(&k, basis)?;
    let e0 = p.ground_energy();
    let unnormalized = p.apply_fn(|e| c((-lead.beta * (e - e0)).exp(), 0.0));
    let z = unnormalized.trace();
    Ok(ManyBodyOperator::new(unnormalized / z))
}

/// Density matrix on the full Fock space with known sample and lead factors.
#[derive(Debug, Clone)]
pub struct InitialState {
    rho: ManyBodyOperator,
    pub description: String,
    pub sample_vacuum: bool,
    /// One-particle density when the state is quasi-free.
    pub varrho: Option<CMatrix>,
}

impl InitialState {
    pub fn rho(&self) -> &ManyBodyOperator {
        &self.rho
    }

    /// `tr(ρA)`
    pub fn expectation(&self, a: &ManyBodyOperator) -> C64 {
        let r = self.rho.matrix();
        let m = a.matrix();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..r.nrows() {
            for j in 0..r.ncols() {
                acc += r[(i, j)] * m[(j, i)];
            }
        }
        acc
    }

    /// Convex decomposition into pure states that each have a definite particle number.
    pub fn ensemble(&self, basis: &FockBasis) -> Result<Vec<PureComponent>> {
        let r = self.rho.matrix();
        let mut out = Vec::new();
        for (n, states) in basis.sectors().into_iter().enumerate() {
            let m = states.len();
            let block = CMatrix::from_fn(m, m, |i, j| r[(states[i], states[j])]);
            if max_abs(&block) == 0.0 {
                continue;
            }
            let spec = HermitianSpectrum::new(&block);
            for k in 0..m {
                let p = spec.values[k];
                if p < -1e-12 {
                    return Err(NegfError::Numerical {
                        op: "state ensemble".into(),
                        detail: format!("density matrix has eigenvalue {p}"),
                    });
                }
                if p <= ENSEMBLE_CUTOFF {
                    continue;
                }
                let mut v = CVector::zeros(basis.dim());
                for (i, &s) in states.iter().enumerate() {
                    v[s] = spec.vectors[(i, k)];
                }
                out.push(PureComponent {
                    weight: p,
                    particles: n,
                    vector: v,
                });
            }
        }
        Ok(out)
    }

    /// `‖[ρ, N]‖`
    pub fn gauge_defect(&self, basis: &FockBasis) -> f64 {
        self.rho.commutator(&basis.total_number()).max_norm()
    }
}

const ENSEMBLE_CUTOFF: f64 = 1e-16;

#[derive(Debug, Clone)]
pub struct PureComponent {
    pub weight: f64,
    pub particles: usize,
    pub vector: CVector,
}

fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Product of the per-lead Gibbs states with the given even sample state.
pub fn product_state(spec: &ModelSpec, basis: &FockBasis, sample: &CMatrix) -> Result<InitialState> {
    spec.validate()?;
    dim_check("Fock basis modes", spec.n_modes(), basis.n_modes())?;
    let ns = spec.n_sample();
    dim_check("sample density matrix", 1 << ns, sample.nrows())?;
    let sample_basis = FockBasis::with_cap(ns, basis.n_modes())?;
    if sample_basis.charge_of(sample) != Some(0) {
        return Err(NegfError::Precondition("sample state must commute with the sample number operator".into()));
    }
    let mut rho = sample.clone();
    for lead in &spec.leads {
        let lb = FockBasis::with_cap(lead.n_sites(), basis.n_modes())?;
        rho = kron(&rho, gibbs_lead_state(lead, &lb)?.matrix());
    }
    let mut vac = CMatrix::zeros(1 << ns, 1 << ns);
    vac[(0, 0)] = c(1.0, 0.0);
    let sample_vacuum = max_abs(&(sample - &vac)) == 0.0;
    let varrho = if sample_vacuum { Some(fermi_reservoir_density(spec)?) } else { None };
    Ok(InitialState {
        rho: ManyBodyOperator::new(rho),
        description: if sample_vacuum {
            "sample vacuum times lead Gibbs states".into()
        } else {
            "given sample state times lead Gibbs states".into()
        },
        sample_vacuum,
        varrho,
    })
}

/// Vacuum on the sample, Gibbs states on every lead.
pub fn initial_product_state(spec: &ModelSpec, basis: &FockBasis) -> Result<InitialState> {
    let ns = spec.n_sample();
    let mut vac = CMatrix::zeros(1 << ns, 1 << ns);
    vac[(0, 0)] = c(1.0, 0.0);
    product_state(spec, basis, &vac)
}

/// `⟨a*(f_1)…a*(f_k) a(g_l)…a(g_1)⟩ = δ_kl det{⟨g_j|ϱ|f_i⟩}` for the gauge-invariant quasi-free state with density `ϱ`.
pub fn quasifree_correlator(varrho: &CMatrix, creators: &[CVector], annihilators: &[CVector]) -> C64 {
    if creators.len() != annihilators.len() {
        return C64::new(0.0, 0.0);
    }
    let k = creators.len();
    if k == 0 {
        return c(1.0, 0.0);
    }
    let m = CMatrix::from_fn(k, k, |j, i| annihilators[j].dotc(&(varrho * &creators[i])));
    m.determinant()
}

/// Brute-force `tr(ρ a*(f_1)…a*(f_k) a(g_l)…a(g_1))`.
pub fn fock_correlator(
    state: &InitialState,
    basis: &FockBasis,
    creators: &[CVector],
    annihilators: &[CVector],
) -> Result<C64> {
    let mut op = ManyBodyOperator::identity(basis.dim());
    for f in creators {
        op = &op * &basis.create(f)?;
    }
    for g in annihilators.iter().rev() {
        op = &op * &basis.annihilate(g)?;
    }
    Ok(state.expectation(&op))
}

/// Both KMS residuals for `f` supported in lead `j`:
/// `|⟨A a*(f)⟩ − ⟨a*(e^{β(h−μ)}f) A⟩|` and `|⟨A a(f)⟩ − ⟨a(e^{−β(h−μ)}f) A⟩|`.
pub fn kms_residual(
    state: &InitialState,
    spec: &ModelSpec,
    basis: &FockBasis,
    a: &ManyBodyOperator,
    j: usize,
    f: &CVector,
) -> Result<KmsResidual> {
    dim_check("KMS vector", spec.n_modes(), f.len())?;
    let range = spec.lead_range(j);
    if f.iter().enumerate().any(|(i, z)| !range.contains(&i) && *z != C64::new(0.0, 0.0)) {
        return Err(NegfError::Precondition(format!("vector is not supported in lead {j}")));
    }
    let lead = &spec.leads[j];
    let n = lead.n_sites();
    let shifted = &lead.h - CMatrix::identity(n, n) * c(lead.mu, 0.0);
    let hs = HermitianSpectrum::new(&shifted);
    let twist = |sign: f64| {
        let m = hs.apply_fn(|e| c((sign * lead.beta * e).exp(), 0.0));
        let mut out = f.clone();
        let block = m * f.rows(range.start, n);
        out.rows_mut(range.start, n).copy_from(&block);
        out
    };
    let create = |v: &CVector| basis.create(v);
    let annihilate = |v: &CVector| basis.annihilate(v);
    let creation = (state.expectation(&(a * &create(f)?)) - state.expectation(&(&create(&twist(1.0))? * a))).norm();
    let annihilation =
        (state.expectation(&(a * &annihilate(f)?)) - state.expectation(&(&annihilate(&twist(-1.0))? * a))).norm();
    Ok(KmsResidual { creation, annihilation })
}

#[derive(Debug, Clone, Copy)]
pub struct KmsResidual {
    pub creation: f64,
    pub annihilation: f64,
}

impl KmsResidual {
    pub fn max(&self) -> f64 {
        self.creation.max(self.annihilation)
    }
}

/// One-body Heisenberg vector `e^{ith} f`.
pub fn evolve_one_body(h: &HermitianSpectrum, f: &CVector, t: f64) -> CVector {
    let coeffs = h.vectors.adjoint() * f;
    let scaled = CVector::from_fn(coeffs.len(), |k, _| coeffs[k] * expi(t * h.values[k]));
    &h.vectors * scaled
}
