//! Artifact bundle on disk: `report.json`, `currents.csv` and one CSV per
//! exported kernel, each CSV with a JSON sidecar. Files are written to a
//! temporary in the target directory and renamed into place.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::pipeline::{Bundle, KernelExport};
use crate::report::GridMeta;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Output {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(path))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| CliError::Output {
        path: path.to_path_buf(),
        source: e.error,
    })?;
    Ok(())
}

#[derive(Serialize)]
struct Sidecar<'a> {
    file: &'a str,
    kind: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    energy: Option<f64>,
    grid: GridMeta,
    config_hash: &'a str,
    version: &'a str,
    /// Seconds since the Unix epoch; the only time-dependent field of a bundle.
    created: u64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    columns: Vec<&'a str>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    row_sites: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    col_sites: Vec<String>,
}

fn json_bytes<T: Serialize>(v: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(v).expect("bundle metadata serializes");
    out.push(b'\n');
    out
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn csv_bytes(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let wrap = |e: csv::Error| CliError::Output {
        path: PathBuf::from("<csv buffer>"),
        source: std::io::Error::other(e),
    };
    w.write_record(header).map_err(wrap)?;
    for r in rows {
        w.write_record(&r).map_err(wrap)?;
    }
    w.into_inner().map_err(|e| CliError::Output {
        path: PathBuf::from("<csv buffer>"),
        source: std::io::Error::other(e.to_string()),
    })
}

/// CSV body of a current bundle: `t, I, method, lead`, time ascending.
pub fn currents_csv(bundle: &Bundle) -> CliResult<Vec<u8>> {
    let n = bundle.currents.first().map_or(0, |c| c.times.len());
    let rows = (0..n).flat_map(|k| {
        bundle.currents.iter().map(move |c| {
            vec![
                c.times[k].to_string(),
                c.values[k].to_string(),
                c.method.clone(),
                c.lead.to_string(),
            ]
        })
    });
    csv_bytes(&["t", "I", "method", "lead"], rows)
}

/// CSV body of a kernel: `s, s', row_site, col_site, re, im`, row-major in time then sites.
pub fn kernel_csv(k: &KernelExport) -> CliResult<Vec<u8>> {
    let g = *k.kernel.grid();
    let (r, c) = (k.kernel.rows(), k.kernel.cols());
    let rows = (0..g.len()).flat_map(move |a| {
        (0..g.len()).flat_map(move |b| {
            (0..r).flat_map(move |i| {
                (0..c).map(move |j| {
                    let z = k.kernel.get(a, b, i, j);
                    vec![
                        g.t(a).to_string(),
                        g.t(b).to_string(),
                        k.row_sites[i].clone(),
                        k.col_sites[j].clone(),
                        z.re.to_string(),
                        z.im.to_string(),
                    ]
                })
            })
        })
    });
    csv_bytes(&["s", "s'", "row_site", "col_site", "re", "im"], rows)
}

/// Writes the bundle into `dir` and returns the written paths.
pub fn emit_outputs(bundle: &Bundle, dir: &Path) -> CliResult<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let report = &bundle.report;
    let created = now();
    let mut written = Vec::new();
    let mut put = |name: &str, bytes: &[u8]| -> CliResult<()> {
        let p = dir.join(name);
        write_atomic(&p, bytes)?;
        written.push(p);
        Ok(())
    };
    put("report.json", &json_bytes(report))?;

    if !bundle.currents.is_empty() {
        put("currents.csv", &currents_csv(bundle)?)?;
        let side = Sidecar {
            file: "currents.csv",
            kind: "current",
            energy: None,
            grid: report.grid,
            config_hash: &report.config_hash,
            version: &report.version,
            created,
            columns: vec!["t", "I", "method", "lead"],
            row_sites: Vec::new(),
            col_sites: Vec::new(),
        };
        put("currents.json", &json_bytes(&side))?;
    }

    for k in &bundle.kernels {
        let file = format!("{}.csv", k.name);
        put(&file, &kernel_csv(k)?)?;
        let side = Sidecar {
            file: &file,
            kind: &k.kind,
            energy: Some(k.energy),
            grid: k.kernel.grid().into(),
            config_hash: &report.config_hash,
            version: &report.version,
            created,
            columns: vec!["s", "s'", "row_site", "col_site", "re", "im"],
            row_sites: k.row_sites.clone(),
            col_sites: k.col_sites.clone(),
        };
        put(&format!("{}.json", k.name), &json_bytes(&side))?;
    }
    Ok(written)
}
