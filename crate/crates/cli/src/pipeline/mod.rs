//! Named pipelines. Each one runs a fixed set of computations on a scenario
//! and returns a bundle of current traces, kernel exports and residuals.

mod currents;
mod identity;
mod selfenergy;

use negf_core::greens::{TimeGrid, TwoTimeKernel};
use negf_core::model::ModelSpec;
use negf_core::transport::CurrentTrace;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use currents::CurrentsPipeline;
pub use identity::IdentityAuditPipeline;
pub use selfenergy::SelfEnergyAuditPipeline;

use crate::config::ScenarioConfig;
use crate::error::{CliError, CliResult};
use crate::report::ResidualReport;

/// A two-time kernel with the labels needed to export it.
#[derive(Debug, Clone)]
pub struct KernelExport {
    pub name: String,
    pub kind: String,
    pub energy: f64,
    pub row_sites: Vec<String>,
    pub col_sites: Vec<String>,
    pub kernel: TwoTimeKernel,
}

#[derive(Debug, Clone)]
pub struct Bundle {
    pub report: ResidualReport,
    pub currents: Vec<CurrentTrace>,
    pub kernels: Vec<KernelExport>,
}

pub struct RunContext<'a> {
    pub config: &'a ScenarioConfig,
    pub spec: ModelSpec,
    pub grid: TimeGrid,
    pub seed: u64,
    /// The paired `dt/2` run: only order-tracked residuals, no exports.
    pub refined: bool,
}

impl<'a> RunContext<'a> {
    pub fn new(config: &'a ScenarioConfig) -> CliResult<Self> {
        Ok(Self {
            config,
            spec: config.spec()?,
            grid: config.time_grid()?,
            seed: config.run.seed.unwrap_or(0),
            refined: false,
        })
    }

    pub fn refined(&self) -> Self {
        Self {
            config: self.config,
            spec: self.spec.clone(),
            grid: self.grid.refined(),
            seed: self.seed,
            refined: true,
        }
    }

    /// Independent generator for one randomized suite.
    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(stream);
        r
    }

    pub fn report(&self, pipeline: &str) -> ResidualReport {
        ResidualReport::new(pipeline, &self.config.hash(), &self.grid)
    }

    pub fn tolerance(&self, name: &str, default: f64) -> f64 {
        self.config.tolerance(name, default)
    }

    pub fn sample_labels(&self) -> Vec<String> {
        self.spec.sample_sites.clone()
    }
}

pub trait Pipeline {
    fn name(&self) -> &'static str;
    fn describe(&self) -> &'static str;
    fn run(&self, ctx: &RunContext<'_>) -> CliResult<Bundle>;
}

pub struct PipelineRegistry {
    entries: Vec<Box<dyn Pipeline>>,
}

impl Default for PipelineRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(CurrentsPipeline));
        r.register(Box::new(IdentityAuditPipeline));
        r.register(Box::new(SelfEnergyAuditPipeline));
        r
    }
}

impl PipelineRegistry {
    pub fn empty() -> Self {
        Self { entries: Vec::new() }
    }

    pub fn register(&mut self, p: Box<dyn Pipeline>) {
        self.entries.retain(|x| x.name() != p.name());
        self.entries.push(p);
    }

    pub fn get(&self, name: &str) -> CliResult<&dyn Pipeline> {
        self.entries
            .iter()
            .find(|p| p.name() == name)
            .map(|b| b.as_ref())
            .ok_or_else(|| CliError::UnknownPipeline(name.into()))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|p| p.name()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn Pipeline> {
        self.entries.iter().map(|b| b.as_ref())
    }
}

/// Runs a pipeline, pairing it with a `dt/2` run when the config asks for order checks.
pub fn execute(pipeline: &dyn Pipeline, config: &ScenarioConfig) -> CliResult<Bundle> {
    let ctx = RunContext::new(config)?;
    let mut bundle = pipeline.run(&ctx)?;
    if config.run.order_check {
        let fine = pipeline.run(&ctx.refined())?;
        bundle.report.merge_refined(&fine.report);
    }
    Ok(bundle)
}

/// Evenly strided grid indices, at most `count` of them, starting at 0.
pub(crate) fn subgrid(grid: &TimeGrid, count: usize) -> Vec<usize> {
    let stride = (grid.n() / count).max(1);
    (0..count).map(|i| i * stride).filter(|&k| k <= grid.n()).collect()
}
