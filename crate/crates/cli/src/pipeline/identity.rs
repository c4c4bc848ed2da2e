use negf_core::fock::{FockBasis, ManyBodyOperator};
use negf_core::greens::{gf_free, gf_free_correlation, interacting_greens, conjugation_defect, spectral_consistency, Species, System};
use negf_core::model::fermi_reservoir_density;
use negf_core::selfenergy::{
    keldysh_decoupling_residual, lesser_source_exact, lesser_source_order0, lesser_source_order0_matrix, lesser_source_order1,
    SelfEnergyKernel, SelfEnergyKind,
};
use negf_core::states::{fock_correlator, kms_residual, quasifree_correlator};
use negf_core::transport::TransportContext;
use negf_core::{CMatrix, CVector, C64};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{subgrid, Bundle, KernelExport, Pipeline, RunContext};
use crate::error::CliResult;
use crate::report::ResidualEntry;

pub const KMS_TRIPLES: usize = 50;
pub const LANGRETH_POINTS: usize = 20;

pub struct IdentityAuditPipeline;

fn random_complex(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| random_complex(rng))
}

/// Largest CAR defect over all mode pairs.
pub fn car_residual(basis: &FockBasis) -> f64 {
    let n = basis.n_modes();
    let lower: Vec<ManyBodyOperator> = (0..n).map(|i| basis.annihilator(i)).collect();
    let raise: Vec<ManyBodyOperator> = lower.iter().map(|a| a.adjoint()).collect();
    let id = ManyBodyOperator::identity(basis.dim());
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mixed = lower[i].anticommutator(&raise[j]);
            let mixed = if i == j { &mixed - &id } else { mixed };
            worst = worst.max(mixed.max_norm());
            if j >= i {
                worst = worst.max(lower[i].anticommutator(&lower[j]).max_norm());
            }
        }
    }
    worst
}

impl Pipeline for IdentityAuditPipeline {
    fn name(&self) -> &'static str {
        "identity-audit"
    }

    fn describe(&self) -> &'static str {
        "CAR, Wick and KMS exactness, the zero-coupling reduction, Langreth and Keldysh decoupling identities"
    }

    fn run(&self, ctx: &RunContext<'_>) -> CliResult<Bundle> {
        let grid = &ctx.grid;
        let spec = &ctx.spec;
        let sys = System::new(spec)?;
        let dynamics = sys.dynamics(grid)?;
        let mut report = ctx.report(self.name());
        let mut kernels = Vec::new();
        let sv = sys.sample_vectors();
        let h = &sys.ham.one_body.h;

        if !ctx.refined {
            report.push(ResidualEntry::at_most(
                "car",
                "canonical anticommutation relations",
                car_residual(&sys.basis),
                ctx.tolerance("car", 1e-13),
                grid,
            ));

            let varrho = fermi_reservoir_density(spec)?;
            let mut rng = ctx.rng(1);
            let n = spec.n_modes();
            let mut wick: f64 = 0.0;
            for k in 1..=3 {
                for _ in 0..4 {
                    let fs: Vec<CVector> = (0..k).map(|_| random_vector(&mut rng, n)).collect();
                    let gs: Vec<CVector> = (0..k).map(|_| random_vector(&mut rng, n)).collect();
                    let exact = fock_correlator(&sys.state, &sys.basis, &fs, &gs)?;
                    wick = wick.max((quasifree_correlator(&varrho, &fs, &gs) - exact).norm());
                }
            }
            report.push(ResidualEntry::at_most(
                "wick",
                "quasi-free determinant formula against Fock-space traces",
                wick,
                ctx.tolerance("wick", 1e-10),
                grid,
            ));

            let mut rng = ctx.rng(2);
            let d = sys.basis.dim();
            let mut kms: f64 = 0.0;
            for _ in 0..KMS_TRIPLES {
                let a = ManyBodyOperator::new(CMatrix::from_fn(d, d, |_, _| random_complex(&mut rng)));
                let j = rng.random_range(0..spec.leads.len());
                let mut f = CVector::zeros(n);
                for i in spec.lead_range(j) {
                    f[i] = random_complex(&mut rng);
                }
                kms = kms.max(kms_residual(&sys.state, spec, &sys.basis, &a, j, &f)?.max());
            }
            report.push(ResidualEntry::at_most(
                "kms",
                "KMS condition of the lead Gibbs states on random triples",
                kms,
                ctx.tolerance("kms", 1e-10),
                grid,
            ));

            // Zero coupling: every interacting kernel equals its one-body form.
            let free_sys = System::new(&spec.with_xi(0.0))?;
            let free_dyn = free_sys.dynamics(grid)?;
            let g = interacting_greens(&free_dyn, grid, &sv, &sv, "sample")?;
            let oracle = [
                gf_free_correlation(h, &varrho, &sv, &sv, grid, Species::Lesser, "sample")?,
                gf_free_correlation(h, &varrho, &sv, &sv, grid, Species::Greater, "sample")?,
                gf_free(h, &sv, &sv, grid, 0.0, Species::Retarded, "sample")?,
                gf_free(h, &sv, &sv, grid, 0.0, Species::Advanced, "sample")?,
            ];
            let mut red: f64 = 0.0;
            for (a, b) in [&g.lesser, &g.greater, &g.retarded, &g.advanced].iter().zip(&oracle) {
                red = red.max(a.stored().max_abs_diff(b.stored())?);
            }
            report.push(ResidualEntry::at_most(
                "zero-coupling-reduction",
                "interacting kernels at zero coupling against one-body formulas",
                red,
                ctx.tolerance("zero-coupling-reduction", 1e-9),
                grid,
            ));

            let gi = interacting_greens(&dynamics, grid, &sv, &sv, "sample")?;
            report.push(ResidualEntry::at_most(
                "spectral-consistency",
                "spectral function from lesser/greater and from retarded/advanced",
                spectral_consistency(&gi)?,
                ctx.tolerance("spectral-consistency", 1e-9),
                grid,
            ));
            report.push(ResidualEntry::at_most(
                "retarded-advanced-conjugation",
                "advanced kernel is the adjoint of the retarded one",
                conjugation_defect(&gi.retarded, &gi.advanced)?,
                ctx.tolerance("retarded-advanced-conjugation", 1e-11),
                grid,
            ));

            let a = lesser_source_order0(&sys, grid)?;
            let b = lesser_source_order0_matrix(&sys, grid)?;
            report.push(ResidualEntry::at_most(
                "lesser-source-order0-closed-form",
                "zeroth-order lesser source by spectral sum and by matrix element",
                a.max_abs_diff(&b)?,
                ctx.tolerance("lesser-source-order0-closed-form", 1e-10),
                grid,
            ));

            let s1 = lesser_source_order1(&sys, grid)?;
            let mut ratios = Vec::new();
            for &xi in &ctx.config.run.xi_sweep {
                let sx = System::new(&spec.with_xi(xi))?;
                let dx = sx.dynamics(grid)?;
                let full = lesser_source_exact(&sx, &dx, grid)?;
                let rem = full.sub(&a)?.sub(&s1.scale(C64::new(xi, 0.0)))?;
                ratios.push(rem.max_abs() / (xi * xi));
            }
            if ratios.len() >= 2 {
                let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = ratios.iter().cloned().fold(0.0, f64::max);
                report.push(ResidualEntry::at_most(
                    "lesser-source-expansion-spread",
                    "second-order remainder of the lesser source expansion scales as the coupling squared",
                    hi / lo - 1.0,
                    ctx.tolerance("lesser-source-expansion-spread", 0.2),
                    grid,
                ));
            }
        }

        // Discretization-limited identities, tracked under dt → dt/2.
        let tctx = TransportContext::new(&sys, &dynamics, grid)?;
        let idx = subgrid(grid, LANGRETH_POINTS);
        for j in ctx.config.probed_leads()? {
            let name = format!("langreth-lead{j}");
            report.push(
                ResidualEntry::at_most(
                    &name,
                    "Langreth identity for the mixed sample-lead lesser function",
                    tctx.langreth_residual(j, &idx)?,
                    ctx.tolerance(&name, 5e-3),
                    grid,
                )
                .with_order(3.5),
            );
        }

        if !ctx.refined {
            let g0r = gf_free(h, &sv, &sv, grid, 0.0, Species::Retarded, "sample")?;
            let g0a = gf_free(h, &sv, &sv, grid, 0.0, Species::Advanced, "sample")?;
            let s_less = SelfEnergyKernel::new(SelfEnergyKind::LesserSource, None, lesser_source_exact(&sys, &dynamics, grid)?);
            report.push(ResidualEntry::at_most(
                "keldysh-decoupling",
                "lesser function from free causal kernels and the lesser source",
                keldysh_decoupling_residual(&tctx.sample.lesser, &g0r, &g0a, &s_less)?,
                ctx.tolerance("keldysh-decoupling", 1e-2),
                grid,
            ));
            if ctx.config.run.export_kernels {
                let labels = ctx.sample_labels();
                kernels.push(KernelExport {
                    name: "lesser_source".into(),
                    kind: SelfEnergyKind::LesserSource.name().into(),
                    energy: 0.0,
                    row_sites: labels.clone(),
                    col_sites: labels,
                    kernel: s_less.memory(),
                });
            }
        }

        Ok(Bundle {
            report,
            currents: Vec::new(),
            kernels,
        })
    }
}
