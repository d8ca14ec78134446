use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::RunConfig;
use crate::evolution::{StepDiagnostics, Trajectory};
use crate::Error;

pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const MANIFEST_FILE: &str = "manifest.toml";

const DIAG_HEADER: [&str; 8] = [
    "step",
    "t",
    "E",
    "max_entropy_defect",
    "max_el_defect",
    "min_alpha_prime",
    "cavity_radius",
    "newton_iters",
];
const SNAP_HEADER: [&str; 5] = ["rho", "alpha", "beta", "gamma", "v"];

/// SHA-256 over `"blob <len>\0" + content`, the way git names objects.
pub fn content_hash(content: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", content.len()).as_bytes());
    h.update(content);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: RunConfig,
    pub status: String,
    pub steps_completed: usize,
    /// File name to content hash.
    pub outputs: BTreeMap<String, String>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |e| Error::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e.to_string()),
    }
}

fn fmt(x: f64) -> String {
    format!("{x:e}")
}

fn to_csv(
    header: &[&str],
    rows: impl Iterator<Item = Vec<String>>,
    path: &Path,
) -> Result<Vec<u8>, Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_err(path))?;
    for r in rows {
        w.write_record(&r).map_err(csv_err(path))?;
    }
    w.into_inner().map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e.to_string()),
    })
}

fn snapshot_steps(total: usize, every: usize) -> Vec<usize> {
    let mut s: Vec<usize> = if every == 0 {
        vec![0]
    } else {
        (0..=total).step_by(every).collect()
    };
    if *s.last().unwrap() != total {
        s.push(total);
    }
    s
}

pub fn snapshot_name(step: usize) -> String {
    format!("snapshot_{step:06}.csv")
}

/// Writes the diagnostics table, state snapshots and the manifest into `dir`.
pub fn write_outputs(
    traj: &Trajectory,
    config: &RunConfig,
    status: &str,
    dir: &Path,
) -> Result<Manifest, Error> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut files: Vec<(String, Vec<u8>)> = Vec::new();

    let path = dir.join(DIAGNOSTICS_FILE);
    let rows = traj.diagnostics.iter().map(|d| {
        vec![
            d.step.to_string(),
            fmt(d.t),
            fmt(d.energy),
            fmt(d.max_entropy_defect),
            fmt(d.max_el_defect),
            fmt(d.min_alpha_prime),
            fmt(d.cavity_radius),
            d.newton_iters.to_string(),
        ]
    });
    files.push((DIAGNOSTICS_FILE.into(), to_csv(&DIAG_HEADER, rows, &path)?));

    let grid = &traj.grid;
    let done = traj.states.len() - 1;
    for step in snapshot_steps(done, config.output.snapshot_every) {
        let s = &traj.states[step];
        let beta = grid.cells_to_vertices(&s.beta);
        let name = snapshot_name(step);
        let rows = (0..=grid.n).map(|k| {
            vec![
                fmt(grid.x[k]),
                fmt(s.alpha[k]),
                fmt(beta[k]),
                fmt(s.gamma[k]),
                fmt(s.v[k]),
            ]
        });
        files.push((name.clone(), to_csv(&SNAP_HEADER, rows, &dir.join(&name))?));
    }

    let mut outputs = BTreeMap::new();
    for (name, bytes) in &files {
        let p = dir.join(name);
        fs::write(&p, bytes).map_err(io_err(&p))?;
        outputs.insert(name.clone(), content_hash(bytes));
    }
    let manifest = Manifest {
        config: config.clone(),
        status: status.into(),
        steps_completed: done,
        outputs,
    };
    let p = dir.join(MANIFEST_FILE);
    let text = toml::to_string(&manifest).expect("manifest serializes");
    fs::write(&p, text).map_err(io_err(&p))?;
    Ok(manifest)
}

fn read_table(path: &Path) -> Result<Vec<Vec<String>>, Error> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err(path))?;
        rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok(rows)
}

fn num<T: std::str::FromStr>(path: &Path, s: &str) -> Result<T, Error> {
    s.parse().map_err(|_| Error::Io {
        path: path.to_path_buf(),
        source: std::io::Error::new(std::io::ErrorKind::InvalidData, format!("bad number {s:?}")),
    })
}

pub fn read_diagnostics(path: &Path) -> Result<Vec<StepDiagnostics>, Error> {
    read_table(path)?
        .into_iter()
        .map(|r| {
            Ok(StepDiagnostics {
                step: num(path, &r[0])?,
                t: num(path, &r[1])?,
                energy: num(path, &r[2])?,
                max_entropy_defect: num(path, &r[3])?,
                max_el_defect: num(path, &r[4])?,
                min_alpha_prime: num(path, &r[5])?,
                cavity_radius: num(path, &r[6])?,
                newton_iters: num(path, &r[7])?,
            })
        })
        .collect()
}

/// Columns of a snapshot file.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub rho: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub v: Vec<f64>,
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot, Error> {
    let rows = read_table(path)?;
    let mut s = Snapshot {
        rho: vec![],
        alpha: vec![],
        beta: vec![],
        gamma: vec![],
        v: vec![],
    };
    for r in rows {
        s.rho.push(num(path, &r[0])?);
        s.alpha.push(num(path, &r[1])?);
        s.beta.push(num(path, &r[2])?);
        s.gamma.push(num(path, &r[3])?);
        s.v.push(num(path, &r[4])?);
    }
    Ok(s)
}

/// Snapshot files in `dir`, sorted by step.
pub fn list_snapshots(dir: &Path) -> Result<Vec<PathBuf>, Error> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("snapshot_") && n.ends_with(".csv"))
        })
        .collect();
    out.sort();
    Ok(out)
}
