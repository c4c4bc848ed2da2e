use negf_core::greens::System;
use negf_core::transport::{
    conservation_residual, direct_current, particle_density, sample_number, CurrentTrace, EstimatorRegistry, TransportContext,
};

use super::{Bundle, KernelExport, Pipeline, RunContext};
use crate::error::CliResult;
use crate::report::ResidualEntry;

pub struct CurrentsPipeline;

impl Pipeline for CurrentsPipeline {
    fn name(&self) -> &'static str {
        "currents"
    }

    fn describe(&self) -> &'static str {
        "lead currents by every registered estimator, conservation and densities"
    }

    fn run(&self, ctx: &RunContext<'_>) -> CliResult<Bundle> {
        let grid = &ctx.grid;
        let sys = System::new(&ctx.spec)?;
        let dynamics = sys.dynamics(grid)?;
        let tctx = TransportContext::new(&sys, &dynamics, grid)?;
        let estimators = EstimatorRegistry::default();
        let mut report = ctx.report(self.name());
        let mut traces: Vec<CurrentTrace> = Vec::new();

        for j in ctx.config.probed_leads()? {
            let by_name = |n: &str| estimators.get(n).expect("default estimator").estimate(&tctx, j);
            let direct = by_name("direct")?;
            let mut others = Vec::new();
            for other in ["jmw", "langreth-reconstructed"] {
                let trace = by_name(other)?;
                let name = format!("{other}-vs-direct-lead{j}");
                let anchor = match other {
                    "jmw" => "JMW current formula",
                    _ => "current from the Langreth identity for the mixed lesser function",
                };
                report.push(
                    ResidualEntry::at_most(&name, anchor, direct.max_abs_diff(&trace), ctx.tolerance(&name, 5e-3), grid)
                        .with_order(3.5),
                );
                others.push(trace);
            }
            traces.push(direct);
            traces.extend(others);
            if !ctx.refined {
                let dc = direct_current(&sys, &dynamics, j, grid)?;
                let name = format!("direct-lesser-agreement-lead{j}");
                report.push(ResidualEntry::at_most(
                    &name,
                    "current as expectation and as lesser Green's function",
                    dc.operator.max_abs_diff(&dc.lesser),
                    ctx.tolerance(&name, 1e-10),
                    grid,
                ));
            }
        }

        if !ctx.refined {
            let all: Vec<CurrentTrace> = (0..ctx.spec.leads.len())
                .map(|j| Ok(direct_current(&sys, &dynamics, j, grid)?.operator))
                .collect::<CliResult<_>>()?;
            let n = sample_number(&sys, &dynamics)?;
            let dt2 = grid.dt() * grid.dt();
            report.push(ResidualEntry::at_most(
                "current-conservation",
                "sum of lead currents equals the rate of change of the sample charge",
                conservation_residual(&all, &n, grid),
                ctx.tolerance("current-conservation", 1e-6 + 5.0 * dt2),
                grid,
            ));
            let imag = traces.iter().chain(&all).map(|t| t.max_imag).fold(0.0, f64::max);
            report.push(ResidualEntry::at_most(
                "current-realness",
                "currents are real",
                imag,
                ctx.tolerance("current-realness", 1e-10),
                grid,
            ));

            let mut route: f64 = 0.0;
            let mut range: f64 = 0.0;
            for x in 0..ctx.spec.n_sample() {
                let nx = dynamics.expectation_series(&sys.basis.number(x))?;
                for (k, v) in nx.iter().enumerate() {
                    let rho = particle_density(&tctx.sample.lesser, x, k);
                    route = route.max((rho - v.re).abs());
                    range = range.max(-rho).max(rho - 1.0);
                }
            }
            report.push(ResidualEntry::at_most(
                "density-two-routes",
                "sample density from the lesser function and from the number operator",
                route,
                ctx.tolerance("density-two-routes", 1e-10),
                grid,
            ));
            report.push(ResidualEntry::at_most(
                "density-range",
                "sample density lies in [0, 1]",
                range.max(0.0),
                ctx.tolerance("density-range", 1e-9),
                grid,
            ));
        }

        let mut kernels = Vec::new();
        if !ctx.refined && ctx.config.run.export_kernels && !traces.is_empty() {
            let labels = ctx.sample_labels();
            for g in [&tctx.sample.lesser, &tctx.sample.retarded] {
                kernels.push(KernelExport {
                    name: format!("g_{}_sample", g.species.name()),
                    kind: g.species.name().into(),
                    energy: g.energy(),
                    row_sites: labels.clone(),
                    col_sites: labels.clone(),
                    kernel: g.materialize(),
                });
            }
        }
        Ok(Bundle {
            report,
            currents: if ctx.refined { Vec::new() } else { traces },
            kernels,
        })
    }
}
