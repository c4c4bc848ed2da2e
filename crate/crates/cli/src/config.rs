//! JSON scenario files. Complex entries are `[re, im]` pairs, matrices are
//! row-major nested arrays.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use negf_core::greens::TimeGrid;
use negf_core::model::{LeadSpec, ModelSpec};
use negf_core::{CMatrix, CVector, C64};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub type Complex = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub model: ModelBlock,
    pub grid: GridBlock,
    #[serde(default)]
    pub run: RunBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub sample_sites: Vec<String>,
    pub h_s: Vec<Vec<Complex>>,
    pub leads: Vec<LeadBlock>,
    pub w: Vec<Vec<f64>>,
    pub xi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeadBlock {
    pub h: Vec<Vec<Complex>>,
    pub psi: Vec<Complex>,
    pub phi: Vec<Complex>,
    pub d: f64,
    pub beta: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub t_max: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunBlock {
    pub pipeline: String,
    /// Leads to probe; all leads when absent.
    pub leads: Option<Vec<usize>>,
    pub xi_sweep: Vec<f64>,
    pub energies: Vec<f64>,
    pub etas: Vec<f64>,
    pub output: Option<String>,
    pub tolerances: BTreeMap<String, f64>,
    pub seed: Option<u64>,
    /// Repeat the run at `dt/2` and report observed orders.
    pub order_check: bool,
    pub export_kernels: bool,
}

impl Default for RunBlock {
    fn default() -> Self {
        Self {
            pipeline: "currents".into(),
            leads: None,
            xi_sweep: vec![0.05, 0.1, 0.2],
            energies: vec![0.0],
            etas: vec![0.0, 0.5, 2.0],
            output: None,
            tolerances: BTreeMap::new(),
            seed: None,
            order_check: false,
            export_kernels: true,
        }
    }
}

fn complex_vector(v: &[Complex]) -> CVector {
    CVector::from_iterator(v.len(), v.iter().map(|z| C64::new(z[0], z[1])))
}

fn complex_matrix(field: &str, rows: &[Vec<Complex>]) -> CliResult<CMatrix> {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != m) {
        return Err(CliError::config(field, format!("row {i} has {} entries, expected {m}", r.len())));
    }
    Ok(CMatrix::from_fn(n, m, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
}

fn square(field: &str, m: &CMatrix, n: usize) -> CliResult<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(CliError::config(field, format!("expected {n}x{n}, found {}x{}", m.nrows(), m.ncols())));
    }
    Ok(())
}

fn to_pairs(m: &CMatrix) -> Vec<Vec<Complex>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::ConfigRead {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::config(field_of(&e), e.to_string()))
    }

    pub fn from_spec(spec: &ModelSpec, grid: GridBlock) -> Self {
        Self {
            model: ModelBlock {
                sample_sites: spec.sample_sites.clone(),
                h_s: to_pairs(&spec.h_s),
                leads: spec
                    .leads
                    .iter()
                    .map(|l| LeadBlock {
                        h: to_pairs(&l.h),
                        psi: l.psi.iter().map(|z| [z.re, z.im]).collect(),
                        phi: l.phi.iter().map(|z| [z.re, z.im]).collect(),
                        d: l.d,
                        beta: l.beta,
                        mu: l.mu,
                    })
                    .collect(),
                w: (0..spec.w.nrows()).map(|i| spec.w.row(i).iter().copied().collect()).collect(),
                xi: spec.xi,
            },
            grid,
            run: RunBlock::default(),
        }
    }

    /// Builds and validates the model; errors name the offending field.
    pub fn spec(&self) -> CliResult<ModelSpec> {
        let m = &self.model;
        let ns = m.sample_sites.len();
        if ns == 0 {
            return Err(CliError::config("model.sample_sites", "at least one sample site is required"));
        }
        let h_s = complex_matrix("model.h_s", &m.h_s)?;
        square("model.h_s", &h_s, ns)?;
        if m.w.len() != ns || m.w.iter().any(|r| r.len() != ns) {
            return Err(CliError::config("model.w", format!("expected {ns}x{ns}")));
        }
        let w = DMatrix::from_fn(ns, ns, |i, j| m.w[i][j]);
        let mut leads = Vec::new();
        for (j, l) in m.leads.iter().enumerate() {
            let field = |f: &str| format!("model.leads[{j}].{f}");
            let h = complex_matrix(&field("h"), &l.h)?;
            let n = h.nrows();
            square(&field("h"), &h, n)?;
            if l.psi.len() != n {
                return Err(CliError::config(field("psi"), format!("expected {n} entries, found {}", l.psi.len())));
            }
            if l.phi.len() != ns {
                return Err(CliError::config(field("phi"), format!("expected {ns} entries, found {}", l.phi.len())));
            }
            leads.push(LeadSpec {
                h,
                psi: complex_vector(&l.psi),
                phi: complex_vector(&l.phi),
                d: l.d,
                beta: l.beta,
                mu: l.mu,
            });
        }
        let spec = ModelSpec {
            sample_sites: m.sample_sites.clone(),
            h_s,
            leads,
            w,
            xi: m.xi,
        };
        spec.validate().map_err(|e| CliError::config(model_field(&e.to_string()), e.to_string()))?;
        Ok(spec)
    }

    pub fn time_grid(&self) -> CliResult<TimeGrid> {
        if self.grid.dt.is_nan() || self.grid.dt <= 0.0 {
            return Err(CliError::config("grid.dt", "must be positive"));
        }
        if self.grid.t_max.is_nan() || self.grid.t_max < 0.0 {
            return Err(CliError::config("grid.t_max", "must be non-negative"));
        }
        TimeGrid::new(self.grid.t_max, self.grid.dt).map_err(|e| CliError::config("grid.dt", e.to_string()))
    }

    pub fn probed_leads(&self) -> CliResult<Vec<usize>> {
        let n = self.model.leads.len();
        match &self.run.leads {
            None => Ok((0..n).collect()),
            Some(v) => {
                if let Some(j) = v.iter().find(|&&j| j >= n) {
                    return Err(CliError::config("run.leads", format!("lead {j} does not exist")));
                }
                Ok(v.clone())
            }
        }
    }

    pub fn tolerance(&self, name: &str, default: f64) -> f64 {
        self.run.tolerances.get(name).copied().unwrap_or(default)
    }

    /// SHA-256 of the canonical JSON form, without the output directory.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut canonical = self.clone();
        canonical.run.output = None;
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

fn field_of(e: &serde_json::Error) -> String {
    let msg = e.to_string();
    for key in ["model", "grid", "run"] {
        if msg.contains(&format!("`{key}`")) {
            return key.into();
        }
    }
    "<document>".into()
}

/// Best guess at the field behind a model validation message.
fn model_field(msg: &str) -> String {
    let lower = msg.to_lowercase();
    if lower.contains("diagonal") || lower.contains("interaction") || lower.contains(" w ") || lower.starts_with('w') {
        "model.w".into()
    } else if lower.contains("xi") {
        "model.xi".into()
    } else if lower.contains("lead") || lower.contains("psi") || lower.contains("phi") || lower.contains("beta") {
        "model.leads".into()
    } else if lower.contains("sample") {
        "model.h_s".into()
    } else {
        "model".into()
    }
}
