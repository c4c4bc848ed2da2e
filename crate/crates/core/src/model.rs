//! One-particle setup: sample, finite leads and tunneling.


use crate::error::{dim_check, NegfError, Result};
use crate::linalg::{c, direct_sum, expi, fermi, is_hermitian, max_abs, CMatrix, CVector, HermitianSpectrum, C64};
use nalgebra::DMatrix;

const HERMITIAN_TOL: f64 = 1e-12;
const NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LeadSpec {
    pub h: CMatrix,
    pub psi: CVector,
    pub phi: CVector,
    pub d: f64,
    pub beta: f64,
    pub mu: f64,
}

impl LeadSpec {
    pub fn n_sites(&self) -> usize {
        self.h.nrows()
    }

    /// Open chain of `n` sites with uniform hopping, contacted at its first site.
    pub fn chain(n: usize, hopping: f64, phi: CVector, d: f64, beta: f64, mu: f64) -> Self {
        Self {
            h: chain_hamiltonian(n, 0.0, hopping),
            psi: crate::linalg::unit_vector(n, 0),
            phi,
            d,
            beta,
            mu,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub sample_sites: Vec<String>,
    pub h_s: CMatrix,
    pub leads: Vec<LeadSpec>,
    pub w: DMatrix<f64>,
    pub xi: f64,
}

/// Tight-binding chain with on-site energy `eps` and nearest-neighbour hopping `t`.
pub fn chain_hamiltonian(n: usize, eps: f64, t: f64) -> CMatrix {
    CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            c(eps, 0.0)
        } else if i.abs_diff(j) == 1 {
            c(t, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

impl ModelSpec {
    /// Two-site sample between two three-site chains; the instance used by the acceptance suite.
    pub fn reference(xi: f64) -> Self {
        let phi = |k| crate::linalg::unit_vector(2, k);
        let mut w = DMatrix::zeros(2, 2);
        w[(0, 1)] = 1.0;
        w[(1, 0)] = 1.0;
        Self {
            sample_sites: vec!["s0".into(), "s1".into()],
            h_s: chain_hamiltonian(2, 0.0, 1.0),
            leads: vec![
                LeadSpec::chain(3, 1.0, phi(0), 0.7, 1.0, 0.4),
                LeadSpec::chain(3, 1.0, phi(1), 0.7, 2.0, -0.4),
            ],
            w,
            xi,
        }
    }

    pub fn n_sample(&self) -> usize {
        self.h_s.nrows()
    }

    pub fn n_modes(&self) -> usize {
        self.n_sample() + self.leads.iter().map(|l| l.n_sites()).sum::<usize>()
    }

    /// Offset of lead `j` in the global mode order.
    pub fn lead_offset(&self, j: usize) -> usize {
        self.n_sample() + self.leads[..j].iter().map(|l| l.n_sites()).sum::<usize>()
    }

    pub fn lead_range(&self, j: usize) -> std::ops::Range<usize> {
        let o = self.lead_offset(j);
        o..o + self.leads[j].n_sites()
    }

    /// `φ_j` embedded in the full one-particle space.
    pub fn phi_full(&self, j: usize) -> CVector {
        let mut v = CVector::zeros(self.n_modes());
        v.rows_mut(0, self.n_sample()).copy_from(&self.leads[j].phi);
        v
    }

    /// `ψ_j` embedded in the full one-particle space.
    pub fn psi_full(&self, j: usize) -> CVector {
        let mut v = CVector::zeros(self.n_modes());
        let o = self.lead_offset(j);
        v.rows_mut(o, self.leads[j].n_sites()).copy_from(&self.leads[j].psi);
        v
    }

    pub fn sample_site_full(&self, x: usize) -> CVector {
        crate::linalg::unit_vector(self.n_modes(), x)
    }

    pub fn with_xi(&self, xi: f64) -> Self {
        Self { xi, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let ns = self.n_sample();
        if self.sample_sites.len() != ns {
            return Err(NegfError::InvalidModel(format!(
                "sample_sites lists {} labels but h_S is {}x{}",
                self.sample_sites.len(),
                ns,
                ns
            )));
        }
        if !self.h_s.is_square() || !is_hermitian(&self.h_s, HERMITIAN_TOL) {
            return Err(NegfError::NotHermitian("h_S".into()));
        }
        dim_check("interaction matrix w rows", ns, self.w.nrows())?;
        dim_check("interaction matrix w cols", ns, self.w.ncols())?;
        for x in 0..ns {
            if self.w[(x, x)] != 0.0 {
                return Err(NegfError::InvalidModel(format!(
                    "w must have zero diagonal, found w({x},{x}) = {}",
                    self.w[(x, x)]
                )));
            }
            for y in 0..ns {
                if self.w[(x, y)] != self.w[(y, x)] {
                    return Err(NegfError::InvalidModel(format!("w must be symmetric, w({x},{y}) != w({y},{x})")));
                }
                if !self.w[(x, y)].is_finite() || self.w[(x, y)].abs() > 1.0 + 1e-12 {
                    return Err(NegfError::InvalidModel(format!(
                        "w must satisfy sup|w| <= 1, found |w({x},{y})| = {}",
                        self.w[(x, y)].abs()
                    )));
                }
            }
        }
        if !self.xi.is_finite() {
            return Err(NegfError::InvalidModel("xi must be finite".into()));
        }
        for (j, lead) in self.leads.iter().enumerate() {
            if !lead.h.is_square() || !is_hermitian(&lead.h, HERMITIAN_TOL) {
                return Err(NegfError::NotHermitian(format!("h of lead {j}")));
            }
            dim_check(&format!("psi of lead {j}"), lead.n_sites(), lead.psi.len())?;
            dim_check(&format!("phi of lead {j}"), ns, lead.phi.len())?;
            for (name, v) in [("psi", &lead.psi), ("phi", &lead.phi)] {
                if (v.norm() - 1.0).abs() > NORM_TOL {
                    return Err(NegfError::InvalidModel(format!(
                        "{name} of lead {j} must be a unit vector, norm is {}",
                        v.norm()
                    )));
                }
            }
            if !(lead.beta > 0.0 && lead.beta.is_finite()) {
                return Err(NegfError::InvalidModel(format!("beta of lead {j} must be positive, found {}", lead.beta)));
            }
            if !lead.mu.is_finite() || !lead.d.is_finite() {
                return Err(NegfError::InvalidModel(format!("mu and d of lead {j} must be finite")));
            }
        }
        Ok(())
    }
}

/// `h_D`, `h_T` and `h = h_D + h_T` on the full one-particle space.
#[derive(Debug, Clone)]
pub struct OneBody {
    pub h_d: CMatrix,
    pub h_t: CMatrix,
    pub h: CMatrix,
    pub n_sample: usize,
}

impl OneBody {
    /// `h_R`, the leads-only block of `h_D`, extended by zero on the sample.
    pub fn h_r(&self) -> CMatrix {
        let mut out = self.h_d.clone();
        for i in 0..out.nrows() {
            for j in 0..out.ncols() {
                if i < self.n_sample || j < self.n_sample {
                    out[(i, j)] = C64::new(0.0, 0.0);
                }
            }
        }
        out
    }

    /// Sample block `h_S` of `h`.
    pub fn h_s(&self) -> CMatrix {
        self.h.view((0, 0), (self.n_sample, self.n_sample)).into_owned()
    }
}

pub fn build_one_body(spec: &ModelSpec) -> Result<OneBody> {
    spec.validate()?;
    let blocks: Vec<&CMatrix> = std::iter::once(&spec.h_s).chain(spec.leads.iter().map(|l| &l.h)).collect();
    let h_d = direct_sum(&blocks);
    let n = h_d.nrows();
    let mut h_t = CMatrix::zeros(n, n);
    for (j, lead) in spec.leads.iter().enumerate() {
        let psi = spec.psi_full(j);
        let phi = spec.phi_full(j);
        let d = c(lead.d, 0.0);
        h_t += (&psi * phi.adjoint() + &phi * psi.adjoint()) * d;
    }
    let h = &h_d + &h_t;
    Ok(OneBody {
        h_d,
        h_t,
        h,
        n_sample: spec.n_sample(),
    })
}

/// `ϱ_R = ⊕_j (I + e^{β_j(h_j−μ_j)})^{-1}`, zero on the sample.
pub fn fermi_reservoir_density(spec: &ModelSpec) -> Result<CMatrix> {
    spec.validate()?;
    let n = spec.n_modes();
    let mut rho = CMatrix::zeros(n, n);
    for (j, lead) in spec.leads.iter().enumerate() {
        let block = lead_density(lead)?;
        rho.view_mut((spec.lead_offset(j), spec.lead_offset(j)), (lead.n_sites(), lead.n_sites()))
            .copy_from(&block);
    }
    Ok(rho)
}

/// Fermi density `(I + e^{β(h−μ)})^{-1}` of a single lead.
pub fn lead_density(lead: &LeadSpec) -> Result<CMatrix> {
    if !is_hermitian(&lead.h, HERMITIAN_TOL) {
        return Err(NegfError::NotHermitian("lead Hamiltonian".into()));
    }
    let spec = HermitianSpectrum::new(&lead.h);
    Ok(spec.apply_fn(|e| c(fermi(lead.beta, lead.mu, e), 0.0)))
}

/// Atomic probability measure `Σ_k w_k δ_{E_k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMeasure {
    pub points: Vec<(f64, f64)>,
}

impl SpectralMeasure {
    pub fn total_weight(&self) -> f64 {
        self.points.iter().map(|p| p.1).sum()
    }

    pub fn moment(&self, m: i32) -> f64 {
        self.points.iter().map(|&(e, w)| w * e.powi(m)).sum()
    }

    /// `∫ dν(E) g(E) e^{iτE}`
    pub fn phase_sum(&self, tau: f64, g: impl Fn(f64) -> f64) -> C64 {
        self.points.iter().map(|&(e, w)| expi(tau * e) * (w * g(e))).sum()
    }
}

/// Spectral measure of `h_j` for `ψ_j`.
pub fn lead_spectral_measure(lead: &LeadSpec) -> Result<SpectralMeasure> {
    if (lead.psi.norm() - 1.0).abs() > NORM_TOL {
        return Err(NegfError::InvalidModel("psi must be a unit vector".into()));
    }
    let s = HermitianSpectrum::new(&lead.h);
    let points = (0..s.dim())
        .map(|k| (s.values[k], s.vectors.column(k).dotc(&lead.psi).norm_sqr()))
        .collect();
    Ok(SpectralMeasure { points })
}

/// Largest absolute entry of `h − h_D − h_T`; zero by construction.
pub fn assembly_defect(ob: &OneBody) -> f64 {
    max_abs(&(&ob.h - &ob.h_d - &ob.h_t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermiticity_defect, unit_vector};

    fn single_site(d: f64) -> ModelSpec {
        ModelSpec {
            sample_sites: vec!["s".into()],
            h_s: CMatrix::zeros(1, 1),
            leads: vec![LeadSpec {
                h: CMatrix::zeros(1, 1),
                psi: unit_vector(1, 0),
                phi: unit_vector(1, 0),
                d,
                beta: 1.0,
                mu: 0.0,
            }],
            w: DMatrix::zeros(1, 1),
            xi: 0.0,
        }
    }

    #[test]
    fn two_site_tunneling() {
        let ob = build_one_body(&single_site(1.0)).unwrap();
        let expected = CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]);
        assert_eq!(ob.h, expected);
    }

    #[test]
    fn zero_coupling_gives_decoupled_h() {
        let mut spec = ModelSpec::reference(0.5);
        for l in &mut spec.leads {
            l.d = 0.0;
        }
        let ob = build_one_body(&spec).unwrap();
        assert_eq!(ob.h, ob.h_d);
    }

    #[test]
    fn reference_assembly() {
        let spec = ModelSpec::reference(0.5);
        let ob = build_one_body(&spec).unwrap();
        assert_eq!(assembly_defect(&ob), 0.0);
        assert_eq!(hermiticity_defect(&ob.h), 0.0);
        for j in 0..2 {
            let r = spec.lead_range(j);
            let block = ob.h_t.view((r.start, 0), (r.len(), 2)).into_owned();
            assert_eq!(block.rank(1e-12), 1);
        }
    }

    #[test]
    fn fermi_at_chemical_potential_is_half() {
        let mut lead = single_site(1.0).leads[0].clone();
        lead.h[(0, 0)] = c(0.3, 0.0);
        lead.mu = 0.3;
        assert_eq!(lead_density(&lead).unwrap()[(0, 0)].re, 0.5);
    }

    #[test]
    fn occupation_decreases_with_beta_above_mu() {
        let mut lead = single_site(1.0).leads[0].clone();
        lead.h[(0, 0)] = c(1.0, 0.0);
        let mut last = 1.0;
        for beta in [1.0, 5.0, 20.0, 100.0, 200.0] {
            lead.beta = beta;
            let n = lead_density(&lead).unwrap()[(0, 0)].re;
            assert!(n < last);
            last = n;
        }
        assert!(last < 1e-80);
    }

    #[test]
    fn chain_density_in_eigenbasis() {
        let lead = LeadSpec::chain(3, 1.0, unit_vector(1, 0), 1.0, 1.0, 0.0);
        let rho = lead_density(&lead).unwrap();
        let s = HermitianSpectrum::new(&lead.h);
        let in_eig = s.vectors.adjoint() * rho * &s.vectors;
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 / (1.0 + s.values[i].exp()) } else { 0.0 };
                assert!((in_eig[(i, j)] - c(expect, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn measure_reproduces_moments() {
        let lead = LeadSpec::chain(3, 1.0, unit_vector(1, 0), 1.0, 1.0, 0.0);
        let nu = lead_spectral_measure(&lead).unwrap();
        assert!((nu.total_weight() - 1.0).abs() < 1e-12);
        let mut hm = CMatrix::identity(3, 3);
        for m in 0..3 {
            let direct = lead.psi.dotc(&(&hm * &lead.psi)).re;
            assert!((nu.moment(m) - direct).abs() < 1e-10);
            hm = &hm * &lead.h;
        }
    }

    #[test]
    fn single_level_measure_is_point_mass() {
        let mut lead = single_site(1.0).leads[0].clone();
        lead.h[(0, 0)] = c(-0.7, 0.0);
        let nu = lead_spectral_measure(&lead).unwrap();
        assert_eq!(nu.points, vec![(-0.7, 1.0)]);
    }

    #[test]
    fn validation_rejects_bad_specs() {
        let mut s = ModelSpec::reference(0.5);
        s.w[(0, 0)] = 0.1;
        assert!(matches!(s.validate(), Err(NegfError::InvalidModel(m)) if m.contains("zero diagonal")));
        let mut s = ModelSpec::reference(0.5);
        s.leads[0].phi = CVector::zeros(3);
        assert!(matches!(s.validate(), Err(NegfError::Dimension { .. })));
        let mut s = ModelSpec::reference(0.5);
        s.leads[1].beta = 0.0;
        assert!(s.validate().is_err());
        let mut s = ModelSpec::reference(0.5);
        s.h_s[(0, 1)] = c(0.0, 1.0);
        assert!(matches!(s.validate(), Err(NegfError::NotHermitian(_))));
    }
}
