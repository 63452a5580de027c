//! CSV files and the metadata sidecar.

use std::path::{Path, PathBuf};

use cini_core::decoherence::DecoherenceTrace;
use cini_core::grid::TimeGrid;
use cini_core::invariant::AuxiliaryTrajectory;
use cini_core::linalg::{CMatrix, CVector};
use cini_core::phase::PhaseTrace;
use serde_json::json;

use crate::error::{RunError, RunResult};

/// 17 significant digits, round-trip exact.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Collects CSV files for one run directory.
pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> RunResult<Self> {
        std::fs::create_dir_all(root).map_err(|e| RunError::io(root, e))?;
        Ok(OutputDir { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> &[String] {
        &self.written
    }

    pub fn write_csv<I, R>(&mut self, name: &str, header: &[&str], rows: I) -> RunResult<()>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = String>,
    {
        let path = self.root.join(name);
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_path(&path)
            .map_err(|e| RunError::io(&path, e))?;
        w.write_record(header).map_err(|e| RunError::io(&path, e))?;
        for row in rows {
            let row: Vec<String> = row.into_iter().collect();
            w.write_record(&row).map_err(|e| RunError::io(&path, e))?;
        }
        w.flush().map_err(|e| RunError::io(&path, e))?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> RunResult<()> {
        let path = self.root.join(name);
        std::fs::write(&path, text).map_err(|e| RunError::io(&path, e))?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// `metadata.json`: timestamp and provenance of the files written so far.
    pub fn write_metadata(&self, command: &str, extra: serde_json::Value) -> RunResult<()> {
        let meta = json!({
            "command": command,
            "timestamp": chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            "version": env!("CARGO_PKG_VERSION"),
            "files": self.written,
            "details": extra,
        });
        let path = self.root.join("metadata.json");
        let text = serde_json::to_string_pretty(&meta).expect("metadata serializes");
        std::fs::write(&path, text + "\n").map_err(|e| RunError::io(&path, e))
    }
}

pub fn write_aux(out: &mut OutputDir, name: &str, traj: &AuxiliaryTrajectory) -> RunResult<()> {
    let rows = traj.grid.nodes().enumerate().map(|(i, t)| {
        vec![fmt_f64(t), fmt_f64(traj.lambda[i]), fmt_f64(traj.gamma[i]), fmt_f64(traj.gamma_dot[i])]
    });
    out.write_csv(name, &["t", "lambda", "gamma", "gamma_dot"], rows)
}

pub fn write_phases(out: &mut OutputDir, name: &str, p: &PhaseTrace) -> RunResult<()> {
    let rows = p.grid.nodes().enumerate().map(|(i, t)| {
        vec![fmt_f64(t), fmt_f64(p.dynamical[i]), fmt_f64(p.geometric[i]), fmt_f64(p.total(i))]
    });
    out.write_csv(name, &["t", "phi_dynamical", "phi_geometric", "phi_total"], rows)
}

fn component_header(prefix: &str, n: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    for r in 0..n {
        h.push(format!("re_{prefix}{r}"));
        h.push(format!("im_{prefix}{r}"));
    }
    h
}

/// `t`, then interleaved real and imaginary parts.
pub fn write_states(out: &mut OutputDir, name: &str, grid: &TimeGrid, states: &[CVector]) -> RunResult<()> {
    let dim = states.first().map_or(0, |s| s.len());
    let header = component_header("psi", dim);
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = grid.nodes().zip(states).map(|(t, s)| {
        std::iter::once(fmt_f64(t))
            .chain(s.iter().flat_map(|z| [fmt_f64(z.re), fmt_f64(z.im)]))
            .collect::<Vec<_>>()
    });
    out.write_csv(name, &header, rows)
}

/// Row-major `rho_kl`, real and imaginary parts interleaved.
pub fn write_density(out: &mut OutputDir, name: &str, grid: &TimeGrid, rho: &[CMatrix]) -> RunResult<()> {
    let n = rho.first().map_or(0, |r| r.nrows());
    let mut header = vec!["t".to_string()];
    for k in 0..n {
        for l in 0..n {
            header.push(format!("re_rho{k}{l}"));
            header.push(format!("im_rho{k}{l}"));
        }
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = grid.nodes().zip(rho).map(|(t, r)| {
        let mut row = vec![fmt_f64(t)];
        for k in 0..n {
            for l in 0..n {
                row.push(fmt_f64(r[(k, l)].re));
                row.push(fmt_f64(r[(k, l)].im));
            }
        }
        row
    });
    out.write_csv(name, &header, rows)
}

pub fn write_decoherence(out: &mut OutputDir, name: &str, f: &DecoherenceTrace) -> RunResult<()> {
    let method = f.method.as_str();
    let rows =
        f.grid.nodes().zip(&f.values).map(|(t, z)| {
            vec![fmt_f64(t), fmt_f64(z.re), fmt_f64(z.im), fmt_f64(z.norm()), method.to_string()]
        });
    out.write_csv(name, &["t", "re_F", "im_F", "abs_F", "method"], rows)
}
