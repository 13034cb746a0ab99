//! Plot scripts for solution fields and iteration histories.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use greenwave_core::picard::SolveReport;
use greenwave_core::potentials::SpaceTimeField;

use crate::commands::{CliError, Result};

pub const FIELD_CSV: &str = "field.csv";
pub const CONTRACTION_CSV: &str = "contraction.csv";

const HEATMAP: &str = r#"import csv
import os

import matplotlib.pyplot as plt
import numpy as np

here = os.path.dirname(os.path.abspath(__file__))
with open(os.path.join(here, "field.csv")) as fh:
    rows = list(csv.DictReader(fh))
xs = np.array(sorted({float(r["x"]) for r in rows}))
ts = np.array(sorted({float(r["t"]) for r in rows}))
u = np.zeros((len(ts), len(xs)))
xi = {x: i for i, x in enumerate(xs)}
ti = {t: j for j, t in enumerate(ts)}
for r in rows:
    u[ti[float(r["t"])], xi[float(r["x"])]] = float(r["u"])
fig, ax = plt.subplots(figsize=(7, 4))
mesh = ax.pcolormesh(xs, ts, u, shading="auto", cmap="viridis")
fig.colorbar(mesh, ax=ax, label="u")
ax.set_xlabel("x")
ax.set_ylabel("t")
ax.set_title("u(x, t)")
fig.tight_layout()
fig.savefig(os.path.join(here, "heatmap.png"), dpi=150)
"#;

const SLICES: &str = r#"import csv
import os

import matplotlib.pyplot as plt
import numpy as np

here = os.path.dirname(os.path.abspath(__file__))
with open(os.path.join(here, "field.csv")) as fh:
    rows = list(csv.DictReader(fh))
ts = sorted({float(r["t"]) for r in rows})
picks = [ts[round(k * (len(ts) - 1) / 4)] for k in range(5)]
fig, ax = plt.subplots(figsize=(7, 4))
for t in dict.fromkeys(picks):
    sel = [r for r in rows if float(r["t"]) == t]
    sel.sort(key=lambda r: float(r["x"]))
    ax.plot([float(r["x"]) for r in sel], [float(r["u"]) for r in sel], label=f"t = {t:g}")
ax.set_xlabel("x")
ax.set_ylabel("u")
ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(here, "slices.png"), dpi=150)
"#;

const CONTRACTION: &str = r#"import csv
import os

import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
with open(os.path.join(here, "contraction.csv")) as fh:
    rows = list(csv.DictReader(fh))
theta = float(rows[0]["theta"]) if rows else 0.5
fig, (left, right) = plt.subplots(1, 2, figsize=(10, 4))
for w in sorted({int(r["window"]) for r in rows}):
    sel = [r for r in rows if int(r["window"]) == w]
    its = [int(r["iteration"]) for r in sel]
    left.semilogy(its, [float(r["difference"]) for r in sel], marker="o", label=f"window {w}")
    ratio = [(int(r["iteration"]), float(r["ratio"])) for r in sel if r["ratio"]]
    if ratio:
        right.plot(*zip(*ratio), marker="o", label=f"window {w}")
right.axhline(theta, color="k", linestyle="--", label="theta")
left.set_xlabel("iteration")
left.set_ylabel("difference of iterates")
right.set_xlabel("iteration")
right.set_ylabel("ratio of successive differences")
left.legend(fontsize="small")
right.legend(fontsize="small")
fig.tight_layout()
fig.savefig(os.path.join(here, "contraction.png"), dpi=150)
"#;

/// Iteration history of every window as CSV text.
pub fn contraction_csv(report: &SolveReport) -> String {
    let mut s = String::from("window,iteration,difference,ratio,theta\n");
    for w in &report.windows {
        for (k, d) in w.differences.iter().enumerate() {
            let ratio = match k {
                0 => String::new(),
                _ => format!("{:?}", w.ratios.get(k - 1).copied().unwrap_or(f64::NAN)),
            };
            let _ = writeln!(s, "{},{},{d:?},{ratio},{:?}", w.index, k + 1, report.theta);
        }
    }
    s
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::create_dir_all(dir)
        .and_then(|_| fs::write(&path, text))
        .map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
    Ok(path)
}

/// Loads a field from CSV or JSON, chosen by extension.
pub fn load_field(path: &Path) -> Result<SpaceTimeField> {
    let text = read(path)?;
    let field = match path.extension().and_then(|e| e.to_str()) {
        Some("json") => SpaceTimeField::from_json(&text)?,
        _ => SpaceTimeField::read_csv(text.as_bytes())?,
    };
    Ok(field)
}

/// Writes the field (and, given a solve report, its iteration history) as
/// CSV next to plotting scripts that read them by relative path.
pub fn emit_plot(field: &Path, report: Option<&Path>, dir: &Path) -> Result<Vec<PathBuf>> {
    let field = load_field(field)?;
    let mut buf = Vec::new();
    field.write_csv(&mut buf)?;
    let mut files = vec![
        write(
            dir,
            FIELD_CSV,
            &String::from_utf8(buf).expect("csv output is utf-8"),
        )?,
        write(dir, "plot_heatmap.py", HEATMAP)?,
        write(dir, "plot_slices.py", SLICES)?,
    ];
    if let Some(path) = report {
        let report: SolveReport = serde_json::from_str(&read(path)?).map_err(|e| {
            CliError::Usage(format!("{} is not a solve report: {e}", path.display()))
        })?;
        files.push(write(dir, CONTRACTION_CSV, &contraction_csv(&report))?);
        files.push(write(dir, "plot_contraction.py", CONTRACTION)?);
    }
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scripts_reference_relative_files() {
        for s in [HEATMAP, SLICES] {
            assert!(s.contains("\"field.csv\""));
        }
        assert!(CONTRACTION.contains("\"contraction.csv\""));
    }

    #[test]
    fn plots_follow_a_solve() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path();
        let text = "[model]\nepsilon = 1\nc = 1.5\na = 1\n[initial]\nf0 = gaussian(0, 1)\nf1 = zero\n\
                    [rhs]\npreset = sine-gordon\nbeta_F = 1\n[grid]\nx_min = -3\nx_max = 3\nnx = 31\nT = 0.5\nnt = 10\n";
        let cfg = crate::config::parse_config(text).unwrap();
        crate::commands::solve(&cfg, 1, &dir.join("run")).unwrap();
        let files = emit_plot(
            &dir.join("run/u.csv"),
            Some(&dir.join("run/solve_report.json")),
            &dir.join("plots"),
        )
        .unwrap();
        assert_eq!(files.len(), 5);
        let original = fs::read_to_string(dir.join("run/u.csv")).unwrap();
        assert_eq!(
            fs::read_to_string(dir.join("plots").join(FIELD_CSV)).unwrap(),
            original
        );
        let history = fs::read_to_string(dir.join("plots").join(CONTRACTION_CSV)).unwrap();
        assert!(history.lines().count() > 2);
        assert_eq!(
            load_field(&dir.join("run/u.json")).unwrap(),
            load_field(&dir.join("run/u.csv")).unwrap()
        );
    }
}
