//! Scenario runner around `negf-core`: JSON configs, named pipelines,
//! residual reports and CSV/JSON artifact bundles.

pub mod config;
pub mod error;
pub mod output;
pub mod pipeline;
pub mod report;

pub use config::ScenarioConfig;
pub use error::{CliError, CliResult};
pub use pipeline::{execute, Bundle, Pipeline, PipelineRegistry};
pub use report::{ResidualEntry, ResidualReport};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<std::path::PathBuf>,
    pub dt: Option<f64>,
    pub xi: Option<f64>,
    pub seed: Option<u64>,
    pub pipeline: Option<String>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ScenarioConfig) {
        if let Some(dt) = self.dt {
            cfg.grid.dt = dt;
        }
        if let Some(xi) = self.xi {
            cfg.model.xi = xi;
        }
        if let Some(seed) = self.seed {
            cfg.run.seed = Some(seed);
        }
        if let Some(p) = &self.pipeline {
            cfg.run.pipeline = p.clone();
        }
        if let Some(out) = &self.out {
            cfg.run.output = Some(out.to_string_lossy().into_owned());
        }
    }
}

pub struct Outcome {
    pub bundle: Bundle,
    pub written: Vec<std::path::PathBuf>,
}

impl Outcome {
    /// 0 when every residual passes, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.bundle.report.all_passed() {
            0
        } else {
            1
        }
    }
}

/// Loads, overrides, runs and writes one scenario.
pub fn run_scenario(path: &std::path::Path, overrides: &Overrides) -> CliResult<Outcome> {
    let mut cfg = ScenarioConfig::load(path)?;
    overrides.apply(&mut cfg);
    run_config(&cfg)
}

pub fn run_config(cfg: &ScenarioConfig) -> CliResult<Outcome> {
    let registry = PipelineRegistry::default();
    let pipeline = registry.get(&cfg.run.pipeline)?;
    let bundle = execute(pipeline, cfg)?;
    let dir = std::path::PathBuf::from(cfg.run.output.clone().unwrap_or_else(|| "out".into()));
    let written = output::emit_outputs(&bundle, &dir)?;
    Ok(Outcome { bundle, written })
}
