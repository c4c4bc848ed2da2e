//! Lead currents by exact evolution, by the JMW formula and by Langreth
//! reconstruction of the mixed lesser function; particle densities.

use crate::error::{NegfError, Result};
use crate::fock::ManyBodyOperator;
use crate::greens::{
    gf_free, gf_free_correlation, gf_lesser_greater, interacting_greens, Dynamics, GFKernel, InteractingGreens, Species,
    System, TimeGrid, Trajectory,
};
use crate::linalg::{c, fermi, CMatrix, CVector, C64, I};
use crate::model::{fermi_reservoir_density, lead_spectral_measure, SpectralMeasure};

#[derive(Debug, Clone, PartialEq)]
pub struct CurrentTrace {
    pub lead: usize,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub method: String,
    /// Largest discarded imaginary part.
    pub max_imag: f64,
}

impl CurrentTrace {
    fn from_complex(lead: usize, times: Vec<f64>, values: &[C64], method: &str) -> Self {
        Self {
            lead,
            times,
            values: values.iter().map(|z| z.re).collect(),
            method: method.into(),
            max_imag: values.iter().map(|z| z.im.abs()).fold(0.0, f64::max),
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// `J_j = i d_j (a*(ψ_j)a(φ_j) − a*(φ_j)a(ψ_j))`
pub fn current_operator(sys: &System, j: usize) -> Result<ManyBodyOperator> {
    let lead = sys
        .spec
        .leads
        .get(j)
        .ok_or_else(|| NegfError::Precondition(format!("no lead {j}")))?;
    let b = &sys.basis;
    let psi = sys.spec.psi_full(j);
    let phi = sys.spec.phi_full(j);
    let hop = &(&b.create(&psi)? * &b.annihilate(&phi)?) - &(&b.create(&phi)? * &b.annihilate(&psi)?);
    Ok(hop.scale(I * lead.d))
}

/// Operator expectation `⟨τ^t(J_j)⟩` and the lesser form `2d_j Re⟨φ_j|G^<(t,t)|ψ_j⟩`.
#[derive(Debug, Clone)]
pub struct DirectCurrent {
    pub operator: CurrentTrace,
    pub lesser: CurrentTrace,
}

pub fn direct_current(sys: &System, dynamics: &Dynamics<'_>, j: usize, grid: &TimeGrid) -> Result<DirectCurrent> {
    let j_op = current_operator(sys, j)?;
    let op_vals = dynamics.expectation_series(&j_op)?;
    let b = &sys.basis;
    let lphi = dynamics.heisenberg(&b.annihilate(&sys.spec.phi_full(j))?)?;
    let lpsi = dynamics.heisenberg(&b.annihilate(&sys.spec.psi_full(j))?)?;
    let d = sys.spec.leads[j].d;
    let g_eq: Vec<C64> = Trajectory::equal_time(&lpsi, &lphi)?.into_iter().map(|z| z * I).collect();
    let lesser_vals: Vec<C64> = g_eq.iter().map(|g| c(2.0 * d * g.re, 0.0)).collect();
    Ok(DirectCurrent {
        operator: CurrentTrace::from_complex(j, grid.times(), &op_vals, "direct"),
        lesser: CurrentTrace::from_complex(j, grid.times(), &lesser_vals, "direct-lesser"),
    })
}

/// `⟨τ^t(N_S)⟩`
pub fn sample_number(sys: &System, dynamics: &Dynamics<'_>) -> Result<Vec<f64>> {
    let n = sys.basis.number_in(0..sys.spec.n_sample());
    Ok(dynamics.expectation_series(&n)?.into_iter().map(|z| z.re).collect())
}

/// Centered differences, second-order one-sided at the ends.
pub fn time_derivative(values: &[f64], dt: f64) -> Vec<f64> {
    let n = values.len();
    if n < 3 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|k| {
            if k == 0 {
                (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * dt)
            } else if k == n - 1 {
                (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * dt)
            } else {
                (values[k + 1] - values[k - 1]) / (2.0 * dt)
            }
        })
        .collect()
}

/// `max_t |Σ_j I_j(t) − d⟨N_S⟩/dt|`
pub fn conservation_residual(currents: &[CurrentTrace], n_sample: &[f64], grid: &TimeGrid) -> f64 {
    let dn = time_derivative(n_sample, grid.dt());
    (0..grid.len())
        .map(|k| (currents.iter().map(|c| c.values[k]).sum::<f64>() - dn[k]).abs())
        .fold(0.0, f64::max)
}

/// `I_j(t) = −2d² ∫_0^t ds Im{ Σ_k w_k e^{i(t−s)E_k} [G^<_φφ(t,s) + G^R_φφ(t,s) f_j(E_k)] }`
#[allow(clippy::too_many_arguments)]
pub fn jmw_current(
    g_less: &GFKernel,
    g_r: &GFKernel,
    nu: &SpectralMeasure,
    beta: f64,
    mu: f64,
    d: f64,
    phi: &CVector,
    lead: usize,
) -> Result<CurrentTrace> {
    if g_less.species != Species::Lesser || g_r.species != Species::Retarded {
        return Err(NegfError::Precondition("JMW needs lesser and retarded sample kernels".into()));
    }
    let grid = *g_less.grid();
    grid.same_as(g_r.grid())?;
    let gl = g_less.materialize().sandwich(phi, phi);
    let gr = g_r.causal()?.sandwich(phi, phi);
    let values: Vec<C64> = (0..grid.len())
        .map(|k| {
            let mut acc = 0.0;
            for m in 0..=k {
                let w = grid.weight(0, k, m);
                if w == 0.0 {
                    continue;
                }
                let tau = grid.t(k) - grid.t(m);
                let c1 = nu.phase_sum(tau, |_| 1.0);
                let c2 = nu.phase_sum(tau, |e| fermi(beta, mu, e));
                acc += w * (c1 * gl.at(k, m) + c2 * gr.at(k, m)).im;
            }
            c(-2.0 * d * d * acc, 0.0)
        })
        .collect();
    Ok(CurrentTrace::from_complex(lead, grid.times(), &values, "jmw"))
}

/// Right side of the Langreth identity,
/// `d[∫_0^t G^R_φφ(t,s) G_D^<_ψψ(s,t') ds + ∫_0^{t'} G^<_φφ(t,s) G_D^A_ψψ(s,t') ds]`.
pub struct LangrethInputs<'a> {
    pub g_r_phi: &'a GFKernel,
    pub g_less_phi: &'a GFKernel,
    pub gd_less_psi: &'a GFKernel,
    pub gd_adv_psi: &'a GFKernel,
    pub d: f64,
}

impl LangrethInputs<'_> {
    pub fn reconstruct(&self, k: usize, kp: usize) -> Result<C64> {
        let grid = *self.g_r_phi.grid();
        let gr = self.g_r_phi.causal()?;
        let ga = self.gd_adv_psi.causal()?;
        let gl = self.g_less_phi.materialize();
        let gdl = self.gd_less_psi.materialize();
        let mut acc = C64::new(0.0, 0.0);
        for m in 0..=k {
            acc += gr.get(k, m, 0, 0) * gdl.get(m, kp, 0, 0) * grid.weight(0, k, m);
        }
        for m in 0..=kp {
            acc += gl.get(k, m, 0, 0) * ga.get(m, kp, 0, 0) * grid.weight(0, kp, m);
        }
        Ok(acc * self.d)
    }

    /// Reconstruction at all pairs `(t_k, t_k')` with `k, k'` from `indices`.
    pub fn reconstruct_on(&self, indices: &[usize]) -> Result<Vec<Vec<C64>>> {
        let grid = *self.g_r_phi.grid();
        let gr = self.g_r_phi.causal()?;
        let ga = self.gd_adv_psi.causal()?;
        let gl = self.g_less_phi.materialize();
        let gdl = self.gd_less_psi.materialize();
        Ok(indices
            .iter()
            .map(|&k| {
                indices
                    .iter()
                    .map(|&kp| {
                        let mut acc = C64::new(0.0, 0.0);
                        for m in 0..=k {
                            acc += gr.get(k, m, 0, 0) * gdl.get(m, kp, 0, 0) * grid.weight(0, k, m);
                        }
                        for m in 0..=kp {
                            acc += gl.get(k, m, 0, 0) * ga.get(m, kp, 0, 0) * grid.weight(0, kp, m);
                        }
                        acc * self.d
                    })
                    .collect()
            })
            .collect())
    }
}

/// `max |⟨φ|G^<(t,t')|ψ⟩ − reconstruction|` over a sub-grid of pairs.
pub fn langreth_residual(g_less_mixed: &GFKernel, inputs: &LangrethInputs<'_>, indices: &[usize]) -> Result<f64> {
    let rec = inputs.reconstruct_on(indices)?;
    let mut worst: f64 = 0.0;
    for (a, &k) in indices.iter().enumerate() {
        for (b, &kp) in indices.iter().enumerate() {
            worst = worst.max((g_less_mixed.stored().get(k, kp, 0, 0) - rec[a][b]).norm());
        }
    }
    Ok(worst)
}

/// `ρ(x,t_k) = Im⟨x|G^<(t_k,t_k)|x⟩`
pub fn particle_density(g_less: &GFKernel, x: usize, k: usize) -> f64 {
    g_less.value(k, k)[(x, x)].im
}

/// Kernels shared by the current estimators.
pub struct TransportContext<'a> {
    pub sys: &'a System,
    pub dynamics: &'a Dynamics<'a>,
    pub grid: TimeGrid,
    pub sample: InteractingGreens,
    lead_data: Vec<LeadKernels>,
}

struct LeadKernels {
    phi_sample: CVector,
    measure: SpectralMeasure,
    mixed_lesser: GFKernel,
    gd_less: GFKernel,
    gd_adv: GFKernel,
}

impl<'a> TransportContext<'a> {
    pub fn new(sys: &'a System, dynamics: &'a Dynamics<'a>, grid: &TimeGrid) -> Result<Self> {
        let sv = sys.sample_vectors();
        let sample = interacting_greens(dynamics, grid, &sv, &sv, "sample")?;
        let h_r = sys.ham.one_body.h_r();
        let rho = fermi_reservoir_density(&sys.spec)?;
        let mut lead_data = Vec::new();
        for (j, lead) in sys.spec.leads.iter().enumerate() {
            let phi = sys.spec.phi_full(j);
            let psi = sys.spec.psi_full(j);
            let (mixed_lesser, _) = gf_lesser_greater(dynamics, grid, &[phi], std::slice::from_ref(&psi), "phi-psi")?;
            let label = format!("lead {j} contact");
            let gd_less = gf_free_correlation(&h_r, &rho, std::slice::from_ref(&psi), std::slice::from_ref(&psi), grid, Species::Lesser, &label)?;
            let gd_adv = gf_free(&h_r, std::slice::from_ref(&psi), std::slice::from_ref(&psi), grid, 0.0, Species::Advanced, &label)?;
            lead_data.push(LeadKernels {
                phi_sample: lead.phi.clone(),
                measure: lead_spectral_measure(lead)?,
                mixed_lesser,
                gd_less,
                gd_adv,
            });
        }
        Ok(Self {
            sys,
            dynamics,
            grid: *grid,
            sample,
            lead_data,
        })
    }

    fn lead(&self, j: usize) -> Result<&LeadKernels> {
        self.lead_data.get(j).ok_or_else(|| NegfError::Precondition(format!("no lead {j}")))
    }

    /// `⟨φ_j|G^<|ψ_j⟩` from exact dynamics.
    pub fn mixed_lesser(&self, j: usize) -> Result<&GFKernel> {
        Ok(&self.lead(j)?.mixed_lesser)
    }

    /// Scalar sample kernels `⟨φ_j|G|φ_j⟩` and lead kernels for the Langreth identity.
    pub fn langreth_kernels(&self, j: usize) -> Result<(GFKernel, GFKernel, &GFKernel, &GFKernel)> {
        let l = self.lead(j)?;
        let project = |g: &GFKernel| {
            let m = g.stored().sandwich(&l.phi_sample, &l.phi_sample);
            let k = crate::greens::TwoTimeKernel::from_fn(self.grid, 1, 1, |a, b| CMatrix::from_element(1, 1, m.at(a, b)));
            GFKernel::new(g.species, "phi", k).with_energy(g.energy())
        };
        Ok((project(&self.sample.retarded), project(&self.sample.lesser), &l.gd_less, &l.gd_adv))
    }

    pub fn langreth_residual(&self, j: usize, indices: &[usize]) -> Result<f64> {
        let (gr, gl, gdl, gda) = self.langreth_kernels(j)?;
        let inputs = LangrethInputs {
            g_r_phi: &gr,
            g_less_phi: &gl,
            gd_less_psi: gdl,
            gd_adv_psi: gda,
            d: self.sys.spec.leads[j].d,
        };
        langreth_residual(self.mixed_lesser(j)?, &inputs, indices)
    }
}

/// A way of computing the current out of one lead.
pub trait CurrentEstimator {
    fn name(&self) -> &'static str;
    fn estimate(&self, ctx: &TransportContext<'_>, lead: usize) -> Result<CurrentTrace>;
}

pub struct DirectEstimator;

impl CurrentEstimator for DirectEstimator {
    fn name(&self) -> &'static str {
        "direct"
    }

    fn estimate(&self, ctx: &TransportContext<'_>, lead: usize) -> Result<CurrentTrace> {
        Ok(direct_current(ctx.sys, ctx.dynamics, lead, &ctx.grid)?.operator)
    }
}

pub struct JmwEstimator;

impl CurrentEstimator for JmwEstimator {
    fn name(&self) -> &'static str {
        "jmw"
    }

    fn estimate(&self, ctx: &TransportContext<'_>, lead: usize) -> Result<CurrentTrace> {
        let l = ctx.lead(lead)?;
        let spec = &ctx.sys.spec.leads[lead];
        jmw_current(
            &ctx.sample.lesser,
            &ctx.sample.retarded,
            &l.measure,
            spec.beta,
            spec.mu,
            spec.d,
            &l.phi_sample,
            lead,
        )
    }
}

/// `2d Re` of the Langreth reconstruction of `⟨φ_j|G^<(t,t)|ψ_j⟩`.
pub struct LangrethEstimator;

impl CurrentEstimator for LangrethEstimator {
    fn name(&self) -> &'static str {
        "langreth-reconstructed"
    }

    fn estimate(&self, ctx: &TransportContext<'_>, lead: usize) -> Result<CurrentTrace> {
        let (gr, gl, gdl, gda) = ctx.langreth_kernels(lead)?;
        let d = ctx.sys.spec.leads[lead].d;
        let inputs = LangrethInputs {
            g_r_phi: &gr,
            g_less_phi: &gl,
            gd_less_psi: gdl,
            gd_adv_psi: gda,
            d,
        };
        let values = (0..ctx.grid.len())
            .map(|k| Ok(c(2.0 * d * inputs.reconstruct(k, k)?.re, 0.0)))
            .collect::<Result<Vec<_>>>()?;
        Ok(CurrentTrace::from_complex(lead, ctx.grid.times(), &values, self.name()))
    }
}

/// Estimators registered by name.
pub struct EstimatorRegistry {
    entries: Vec<Box<dyn CurrentEstimator>>,
}

impl Default for EstimatorRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(DirectEstimator));
        r.register(Box::new(JmwEstimator));
        r.register(Box::new(LangrethEstimator));
        r
    }
}

impl EstimatorRegistry {
    pub fn empty() -> Self {
        Self { entries: Vec::new() }
    }

    /// Adds an estimator, replacing any existing one with the same name.
    pub fn register(&mut self, e: Box<dyn CurrentEstimator>) {
        self.entries.retain(|x| x.name() != e.name());
        self.entries.push(e);
    }

    pub fn get(&self, name: &str) -> Option<&dyn CurrentEstimator> {
        self.entries.iter().find(|e| e.name() == name).map(|b| b.as_ref())
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.name()).collect()
    }
}

#[cfg(test)]
mod tests;
