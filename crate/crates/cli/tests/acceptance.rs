//! One PASS/FAIL line per acceptance criterion on the reference instance.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use negf_cli::{execute, output, PipelineRegistry, ResidualReport, ScenarioConfig};

fn config(name: &str) -> ScenarioConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name);
    ScenarioConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn run(cfg: &ScenarioConfig, pipeline: &str, order_check: bool) -> (negf_cli::Bundle, ResidualReport) {
    let mut cfg = cfg.clone();
    cfg.run.pipeline = pipeline.into();
    cfg.run.order_check = order_check;
    let registry = PipelineRegistry::default();
    let bundle = execute(registry.get(pipeline).unwrap(), &cfg).unwrap_or_else(|e| panic!("{pipeline}: {e}"));
    let report = bundle.report.clone();
    (bundle, report)
}

struct Check {
    lines: Vec<String>,
    ok: bool,
}

impl Check {
    fn new() -> Self {
        Self { lines: Vec::new(), ok: true }
    }

    fn at_most(&mut self, report: &ResidualReport, name: &str, tol: f64) -> &mut Self {
        match report.get(name) {
            Some(e) => {
                let pass = e.residual <= tol;
                self.ok &= pass;
                self.lines.push(format!("{name} {:.3e} <= {tol:.0e}", e.residual));
            }
            None => self.missing(name),
        }
        self
    }

    fn at_least(&mut self, report: &ResidualReport, name: &str, bound: f64) -> &mut Self {
        match report.get(name) {
            Some(e) => {
                let pass = e.residual >= bound;
                self.ok &= pass;
                self.lines.push(format!("{name} {:.3e} >= {bound:.0e}", e.residual));
            }
            None => self.missing(name),
        }
        self
    }

    /// Error ratio under `dt → dt/2`.
    fn ratio(&mut self, report: &ResidualReport, name: &str, min: f64) -> &mut Self {
        match report.get(name).and_then(|e| e.ratio) {
            Some(r) => {
                self.ok &= r >= min;
                self.lines.push(format!("{name} ratio {r:.2} >= {min}"));
            }
            None => self.missing(&format!("{name} ratio")),
        }
        self
    }

    fn flag(&mut self, what: String, pass: bool) -> &mut Self {
        self.ok &= pass;
        self.lines.push(what);
        self
    }

    fn missing(&mut self, name: &str) {
        self.ok = false;
        self.lines.push(format!("{name} missing"));
    }

    fn print(&self, label: &str, title: &str) -> bool {
        println!("{} {label} {title}: {}", if self.ok { "PASS" } else { "FAIL" }, self.lines.join("; "));
        self.ok
    }
}

fn csv_bodies(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut v: Vec<(PathBuf, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (PathBuf::from(p.file_name().unwrap()), std::fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

fn main() -> ExitCode {
    let r1 = config("interacting-small.json");
    let leads = r1.model.leads.len();
    let (cur_bundle, cur) = run(&r1, "currents", true);
    let (_, ids) = run(&r1, "identity-audit", true);
    let (_, se) = run(&r1, "selfenergy-audit", true);
    let mut all = true;

    let mut c = Check::new();
    c.at_most(&ids, "car", 1e-13).at_most(&ids, "wick", 1e-10).at_most(&ids, "kms", 1e-10);
    all &= c.print("AC1", "CAR/Wick/KMS exactness");

    let mut c = Check::new();
    c.at_most(&ids, "zero-coupling-reduction", 1e-9);
    all &= c.print("AC2", "zero-coupling reduction");

    let mut c = Check::new();
    for j in 0..leads {
        let n = format!("jmw-vs-direct-lead{j}");
        c.at_most(&cur, &n, 5e-3).ratio(&cur, &n, 3.5);
    }
    all &= c.print("AC3", "JMW current against exact evolution");

    let mut c = Check::new();
    for j in 0..leads {
        let n = format!("langreth-lead{j}");
        c.at_most(&ids, &n, 5e-3).ratio(&ids, &n, 3.5);
    }
    all &= c.print("AC4", "Langreth identity on a 20x20 sub-grid");

    let mut c = Check::new();
    c.at_most(&ids, "keldysh-decoupling", 1e-2)
        .at_most(&ids, "lesser-source-order0-closed-form", 1e-10)
        .at_most(&ids, "lesser-source-expansion-spread", 0.2);
    all &= c.print("AC5", "decoupling Keldysh formula and lesser-source expansion");

    let mut c = Check::new();
    for n in [
        "reducible-identity-retarded",
        "reducible-identity-advanced",
        "dyson-retarded-left",
        "dyson-retarded-right",
        "dyson-advanced-left",
        "dyson-advanced-right",
    ] {
        c.at_most(&se, n, 5e-3).ratio(&se, n, 3.5);
    }
    all &= c.print("AC6", "Dyson and reducible identities");

    let mut c = Check::new();
    c.at_most(&se, "keldysh-identity", 1e-2);
    all &= c.print("AC7", "Keldysh identity");

    let mut c = Check::new();
    let slack = 10.0 * r1.grid.dt;
    c.at_least(&se, "positivity-min-eigenvalue", -1e-8)
        .at_most(&se, "dissipation-form", 1e-8)
        .at_most(&se, "propagator-contractivity", slack);
    all &= c.print("AC8", "dissipativity and positivity");

    let mut c = Check::new();
    c.at_most(&cur, "current-conservation", 1e-6 + 5.0 * r1.grid.dt * r1.grid.dt);
    all &= c.print("AC9", "charge conservation");

    let mut c = Check::new();
    let tmp = tempfile::tempdir().unwrap();
    let registry = PipelineRegistry::default();
    for (name, first) in [("interacting-small.json", Some(cur_bundle)), ("noninteracting.json", None)] {
        let cfg = config(name);
        let bundles = [
            first.unwrap_or_else(|| execute(registry.get(&cfg.run.pipeline).unwrap(), &cfg).unwrap()),
            execute(registry.get(&cfg.run.pipeline).unwrap(), &cfg).unwrap(),
        ];
        let dirs: Vec<PathBuf> = (0..2).map(|i| tmp.path().join(format!("{name}-{i}"))).collect();
        for (b, d) in bundles.iter().zip(&dirs) {
            output::emit_outputs(b, d).unwrap();
        }
        let (a, b) = (csv_bodies(&dirs[0]), csv_bodies(&dirs[1]));
        c.flag(format!("{name} {} CSV files identical", a.len()), !a.is_empty() && a == b);
    }
    all &= c.print("AC10", "deterministic CSV output");

    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
