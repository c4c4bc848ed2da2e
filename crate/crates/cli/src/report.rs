use serde::{Deserialize, Serialize};

use negf_core::greens::TimeGrid;
use negf_core::volterra::observed_order;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub t_max: f64,
    pub dt: f64,
    pub steps: usize,
}

impl From<&TimeGrid> for GridMeta {
    fn from(g: &TimeGrid) -> Self {
        Self {
            t_max: g.t_max(),
            dt: g.dt(),
            steps: g.n(),
        }
    }
}

/// How a residual is compared with its tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// Pass when `residual <= tolerance`.
    AtMost,
    /// Pass when `residual >= tolerance`.
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualEntry {
    pub name: String,
    pub anchor: String,
    pub residual: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub passed: bool,
    pub grid: GridMeta,
    /// Required error ratio under `dt → dt/2`, for discretization-limited residuals.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refined_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observed_order: Option<f64>,
}

impl ResidualEntry {
    pub fn at_most(name: &str, anchor: &str, residual: f64, tolerance: f64, grid: &TimeGrid) -> Self {
        Self::build(name, anchor, residual, tolerance, Comparison::AtMost, grid)
    }

    pub fn at_least(name: &str, anchor: &str, value: f64, bound: f64, grid: &TimeGrid) -> Self {
        Self::build(name, anchor, value, bound, Comparison::AtLeast, grid)
    }

    fn build(name: &str, anchor: &str, residual: f64, tolerance: f64, comparison: Comparison, grid: &TimeGrid) -> Self {
        let mut e = Self {
            name: name.into(),
            anchor: anchor.into(),
            residual,
            tolerance,
            comparison,
            passed: false,
            grid: grid.into(),
            min_ratio: None,
            refined_residual: None,
            ratio: None,
            observed_order: None,
        };
        e.passed = e.evaluate();
        e
    }

    /// Marks the residual as `O(Δt²)`; an order check then requires the given error ratio.
    pub fn with_order(mut self, min_ratio: f64) -> Self {
        self.min_ratio = Some(min_ratio);
        self
    }

    fn evaluate(&self) -> bool {
        let within = match self.comparison {
            Comparison::AtMost => self.residual <= self.tolerance,
            Comparison::AtLeast => self.residual >= self.tolerance,
        };
        let ordered = match (self.min_ratio, self.ratio) {
            (Some(min), Some(r)) => r >= min,
            _ => true,
        };
        within && ordered && self.residual.is_finite()
    }

    /// Fills the order fields from the same residual on the refined grid.
    pub fn attach_refined(&mut self, fine: f64) {
        self.refined_residual = Some(fine);
        self.ratio = Some(self.residual / fine);
        self.observed_order = Some(observed_order(self.residual, fine));
        self.passed = self.evaluate();
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub pipeline: String,
    pub config_hash: String,
    pub version: String,
    pub grid: GridMeta,
    pub entries: Vec<ResidualEntry>,
}

impl ResidualReport {
    pub fn new(pipeline: &str, config_hash: &str, grid: &TimeGrid) -> Self {
        Self {
            pipeline: pipeline.into(),
            config_hash: config_hash.into(),
            version: crate::VERSION.into(),
            grid: grid.into(),
            entries: Vec::new(),
        }
    }

    /// Adds an entry; a repeated name replaces the earlier one.
    pub fn push(&mut self, e: ResidualEntry) {
        self.entries.retain(|x| x.name != e.name);
        self.entries.push(e);
    }

    pub fn get(&self, name: &str) -> Option<&ResidualEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    pub fn failures(&self) -> Vec<&ResidualEntry> {
        self.entries.iter().filter(|e| !e.passed).collect()
    }

    /// Copies refined residuals from a paired run at `dt/2` into every order-tracked entry.
    pub fn merge_refined(&mut self, fine: &ResidualReport) {
        for e in &mut self.entries {
            if e.min_ratio.is_none() {
                continue;
            }
            if let Some(f) = fine.get(&e.name) {
                e.attach_refined(f.residual);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_requirement_needs_a_refined_run() {
        let g = TimeGrid::new(1.0, 0.1).unwrap();
        let mut e = ResidualEntry::at_most("x", "anchor", 4e-3, 5e-3, &g).with_order(3.5);
        assert!(e.passed);
        e.attach_refined(2e-3);
        assert!(!e.passed);
        assert!((e.observed_order.unwrap() - 1.0).abs() < 1e-12);
        e.attach_refined(1e-3);
        assert!(e.passed);
    }

    #[test]
    fn names_are_unique() {
        let g = TimeGrid::new(1.0, 0.1).unwrap();
        let mut r = ResidualReport::new("p", "h", &g);
        r.push(ResidualEntry::at_most("a", "", 1.0, 0.5, &g));
        r.push(ResidualEntry::at_least("a", "", 1.0, 0.5, &g));
        assert_eq!(r.entries.len(), 1);
        assert!(r.all_passed());
        assert!(!ResidualEntry::at_most("nan", "", f64::NAN, 1.0, &g).passed);
    }
}
