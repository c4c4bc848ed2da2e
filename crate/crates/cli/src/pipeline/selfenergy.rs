use nalgebra::DMatrix;
use negf_core::greens::{gf_free, interacting_greens, Species, System, TimeGrid};
use negf_core::linalg::hermiticity_defect;
use negf_core::selfenergy::{
    adjoint_pairing_defect, dissipation_form, dyson_residuals, effective_propagator, hartree_fock_potential,
    interaction_correlator, irreducible_from_reducible, keldysh_identity_residual, lesser_sigma, lesser_source_exact,
    min_eigenvalue, positivity_form, reducible_from_parts, reducible_identity_residual, SelfEnergyKernel, SelfEnergyKind,
};
use negf_core::{CMatrix, CVector, C64};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Bundle, KernelExport, Pipeline, RunContext};
use crate::error::CliResult;
use crate::report::ResidualEntry;

pub const RANDOM_FAMILIES: usize = 50;

pub struct SelfEnergyAuditPipeline;

/// `Σ_p C_p (s/T)^p` with random coefficients of decreasing size.
fn polynomial_family(rng: &mut ChaCha8Rng, grid: &TimeGrid, rows: usize, cols: usize, degree: usize) -> Vec<CMatrix> {
    let coeffs: Vec<CMatrix> = (0..=degree)
        .map(|p| {
            let scale = 1.0 / (p + 1) as f64;
            CMatrix::from_fn(rows, cols, |_, _| {
                C64::new(rng.random_range(-1.0..1.0) * scale, rng.random_range(-1.0..1.0) * scale)
            })
        })
        .collect();
    let t_max = grid.t_max().max(grid.dt());
    (0..grid.len())
        .map(|k| {
            let x = grid.t(k) / t_max;
            coeffs
                .iter()
                .enumerate()
                .fold(CMatrix::zeros(rows, cols), |acc, (p, c)| acc + c * C64::new(x.powi(p as i32), 0.0))
        })
        .collect()
}

/// Largest non-`power` coefficient of the degree-4 interpolant through five samples.
fn off_grade(xs: &[f64], ys: &[C64], power: usize) -> f64 {
    let v = DMatrix::from_fn(xs.len(), xs.len(), |i, j| xs[i].powi(j as i32));
    let lu = v.lu();
    let mut worst: f64 = 0.0;
    for part in [ys.iter().map(|z| z.re).collect::<Vec<_>>(), ys.iter().map(|z| z.im).collect()] {
        if let Some(c) = lu.solve(&nalgebra::DVector::from_vec(part)) {
            for (p, v) in c.iter().enumerate() {
                if p != power {
                    worst = worst.max(v.abs());
                }
            }
        } else {
            worst = f64::INFINITY;
        }
    }
    worst
}

const GRADING_COUPLINGS: [f64; 5] = [-0.6, -0.3, 0.1, 0.4, 0.8];

impl Pipeline for SelfEnergyAuditPipeline {
    fn name(&self) -> &'static str {
        "selfenergy-audit"
    }

    fn describe(&self) -> &'static str {
        "reducible and irreducible self-energies, Dyson and Keldysh identities, dissipativity and positivity"
    }

    fn run(&self, ctx: &RunContext<'_>) -> CliResult<Bundle> {
        let grid = &ctx.grid;
        let sys = System::new(&ctx.spec)?;
        let dynamics = sys.dynamics(grid)?;
        let mut report = ctx.report(self.name());
        let xi = sys.ham.xi;
        let ns = ctx.spec.n_sample();
        let sv = sys.sample_vectors();
        let h = &sys.ham.one_body.h;

        let v_hf = hartree_fock_potential(&sys, &dynamics)?;
        let d = interaction_correlator(&sys, &dynamics, grid)?;
        let unit: Vec<CMatrix> = if xi == 0.0 {
            vec![CMatrix::zeros(ns, ns); grid.len()]
        } else {
            v_hf.iter().map(|m| m / C64::new(xi, 0.0)).collect()
        };
        let (red_r, red_a) = reducible_from_parts(&unit, &d, xi);

        let g = interacting_greens(&dynamics, grid, &sv, &sv, "sample")?;
        let g0r = gf_free(h, &sv, &sv, grid, 0.0, Species::Retarded, "sample")?;
        let g0a = gf_free(h, &sv, &sv, grid, 0.0, Species::Advanced, "sample")?;
        let irr_r = irreducible_from_reducible(&red_r, &g0r)?;
        let irr_a = irreducible_from_reducible(&red_a, &g0a)?;

        let ordered = |report: &mut crate::report::ResidualReport, name: &str, anchor: &str, r: f64| {
            report.push(ResidualEntry::at_most(name, anchor, r, ctx.tolerance(name, 5e-3), grid).with_order(3.5));
        };
        let reducible_anchor = "reducible self-energy identity";
        ordered(&mut report, "reducible-identity-retarded", reducible_anchor, reducible_identity_residual(&g.retarded, &g0r, &red_r)?);
        ordered(&mut report, "reducible-identity-advanced", reducible_anchor, reducible_identity_residual(&g.advanced, &g0a, &red_a)?);
        let mut balance: f64 = 1.0;
        for (label, gk, g0, sigma) in [("retarded", &g.retarded, &g0r, &irr_r), ("advanced", &g.advanced, &g0a, &irr_a)] {
            let (l, r) = dyson_residuals(gk, g0, sigma)?;
            ordered(&mut report, &format!("dyson-{label}-left"), "Dyson equation with the irreducible self-energy on the left", l);
            ordered(&mut report, &format!("dyson-{label}-right"), "Dyson equation with the irreducible self-energy on the right", r);
            balance = balance.max(l / r).max(r / l);
        }
        // Both routes of the effective propagator are second-order schemes.
        let phi0 = {
            let mut v = CVector::zeros(ctx.spec.n_modes());
            for x in 0..ns {
                v[x] = C64::new(1.0, x as f64 * 0.5);
            }
            v.normalize()
        };
        let mut growth = f64::NEG_INFINITY;
        let mut routes: f64 = 0.0;
        for &eta in &ctx.config.run.etas {
            let ev = effective_propagator(&irr_r, h, C64::new(0.0, -eta), &phi0)?;
            growth = growth.max(ev.growth());
            routes = routes.max(ev.route_difference());
        }
        ordered(&mut report, "propagator-routes", "effective propagator as time march and as Volterra equation", routes);

        if !ctx.refined {
            report.push(ResidualEntry::at_most(
                "dyson-ordering-balance",
                "Dyson residuals agree between the two orderings",
                balance,
                ctx.tolerance("dyson-ordering-balance", 2.0),
                grid,
            ));
            report.push(ResidualEntry::at_most(
                "propagator-contractivity",
                "effective propagator with the irreducible self-energy is contractive",
                growth.max(0.0),
                ctx.tolerance("propagator-contractivity", 10.0 * grid.dt()),
                grid,
            ));
            report.push(ResidualEntry::at_most(
                "hartree-fock-hermiticity",
                "Hartree-Fock potential is Hermitian",
                v_hf.iter().map(hermiticity_defect).fold(0.0, f64::max),
                ctx.tolerance("hartree-fock-hermiticity", 1e-11),
                grid,
            ));
            let mut pairing: f64 = 0.0;
            for &e in &ctx.config.run.energies {
                pairing = pairing.max(adjoint_pairing_defect(&red_r.with_energy(e), &red_a.with_energy(e))?);
            }
            report.push(ResidualEntry::at_most(
                "reducible-adjoint-pairing",
                "retarded and advanced reducible self-energies are adjoint",
                pairing,
                ctx.tolerance("reducible-adjoint-pairing", 1e-10),
                grid,
            ));

            let s_less = SelfEnergyKernel::new(SelfEnergyKind::LesserSource, None, lesser_source_exact(&sys, &dynamics, grid)?);
            let sigma_less = lesser_sigma(&s_less, &irr_r, &irr_a, &g0r, &g0a)?;
            report.push(ResidualEntry::at_most(
                "keldysh-identity",
                "Keldysh identity with the lesser self-energy",
                keldysh_identity_residual(&g.lesser, &g.retarded, &g.advanced, &sigma_less)?,
                ctx.tolerance("keldysh-identity", 1e-2),
                grid,
            ));

            let mut rng = ctx.rng(3);
            let mut min_eig = f64::INFINITY;
            for _ in 0..RANDOM_FAMILIES {
                let family = polynomial_family(&mut rng, grid, 3, 2, 3);
                for &eta in &ctx.config.run.etas {
                    min_eig = min_eig.min(min_eigenvalue(&positivity_form(grid, &family, eta)?));
                }
            }
            report.push(ResidualEntry::at_least(
                "positivity-min-eigenvalue",
                "positivity of the damped half-square form",
                min_eig,
                ctx.tolerance("positivity-min-eigenvalue", -1e-8),
                grid,
            ));

            let mut rng = ctx.rng(4);
            let mut worst = f64::NEG_INFINITY;
            for _ in 0..RANDOM_FAMILIES {
                let phi: Vec<CVector> = polynomial_family(&mut rng, grid, ns, 1, 3).into_iter().map(|m| m.column(0).into_owned()).collect();
                for &eta in &ctx.config.run.etas {
                    worst = worst.max(dissipation_form(&red_r, &phi, eta, 0.0)?);
                }
            }
            report.push(ResidualEntry::at_most(
                "dissipation-form",
                "dissipativity of the reducible retarded self-energy",
                worst,
                ctx.tolerance("dissipation-form", 1e-8),
                grid,
            ));

            // At fixed evolution v_HF is linear and the memory part quadratic in the coupling.
            let samples: Vec<SelfEnergyKernel> = GRADING_COUPLINGS.iter().map(|&x| reducible_from_parts(&unit, &d, x).0).collect();
            let mut grading: f64 = 0.0;
            let k = grid.n();
            for a in 0..ns {
                for b in 0..ns {
                    let v: Vec<C64> = samples.iter().map(|s| s.local()[k][(a, b)]).collect();
                    let m: Vec<C64> = samples.iter().map(|s| s.memory().get(k, k / 2, a, b)).collect();
                    grading = grading.max(off_grade(&GRADING_COUPLINGS, &v, 1)).max(off_grade(&GRADING_COUPLINGS, &m, 2));
                }
            }
            report.push(ResidualEntry::at_most(
                "coupling-grading",
                "parity of the self-energy parts in the coupling",
                grading,
                ctx.tolerance("coupling-grading", 1e-6),
                grid,
            ));

            if ctx.config.run.export_kernels {
                let labels = ctx.sample_labels();
                let export = |name: &str, kind: SelfEnergyKind, kernel| KernelExport {
                    name: name.into(),
                    kind: kind.name().into(),
                    energy: 0.0,
                    row_sites: labels.clone(),
                    col_sites: labels.clone(),
                    kernel,
                };
                let exports = vec![
                    export("reducible_retarded", red_r.kind, red_r.memory()),
                    export("irreducible_retarded", irr_r.kind, irr_r.memory()),
                    export("lesser_sigma", sigma_less.kind, sigma_less.memory()),
                ];
                return Ok(Bundle {
                    report,
                    currents: Vec::new(),
                    kernels: exports,
                });
            }
        }
        Ok(Bundle {
            report,
            currents: Vec::new(),
            kernels: Vec::new(),
        })
    }
}
