//! Diagnostic sinks writing CSV rows and snapshot files.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use mswave_core::diagnostics::{DiagnosticsRecord, NORM_COLUMNS};
use mswave_core::dynamics::DiagnosticSink;
use mswave_core::state::SimState;
use mswave_core::{Error, Result};

use crate::snapshot;

/// Leading CSV columns; the norm columns follow.
pub const BASE_COLUMNS: [&str; 7] = ["t", "mass", "energy", "energy_reg", "divA", "gauss", "divB"];

pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";

/// Header line of the diagnostics CSV.
pub fn header() -> String {
    BASE_COLUMNS.iter().chain(NORM_COLUMNS.iter()).copied().collect::<Vec<_>>().join(",")
}

/// One CSV row. Floats use the shortest representation that parses back
/// to the same bits.
pub fn row(r: &DiagnosticsRecord) -> String {
    let base = [r.t, r.mass, r.energy, r.energy_regularized, r.div_a_residual, r.gauss_residual, r.div_b_residual];
    base.iter().chain(r.norms.iter()).map(|x| format!("{x:e}")).collect::<Vec<_>>().join(",")
}

/// Column map written next to the CSV.
pub fn column_map() -> String {
    let desc = [
        ("t", "simulation time"),
        ("mass", "integral of |u|^2"),
        ("energy", "conserved energy (kinetic weight 1/2)"),
        ("energy_reg", "regularized energy, kinetic weight 1 on the smoothed covariant term"),
        ("divA", "|div A| / |A| (L2)"),
        ("gauss", "|div E - (rho - mean rho)| / |rho| (L2)"),
        ("divB", "|div B| / |B| (L2)"),
        ("u_H0", "Sobolev norm of u, s = 0"),
        ("u_H1", "Sobolev norm of u, s = 1"),
        ("u_H2", "Sobolev norm of u, s = 2"),
        ("A_H0.5", "Sobolev norm of A, s = 1/2"),
        ("A_H1", "Sobolev norm of A, s = 1"),
        ("A_H1.5", "Sobolev norm of A, s = 3/2"),
        ("At_H0.5", "Sobolev norm of dA/dt, s = 1/2"),
    ];
    desc.iter().enumerate().map(|(i, (c, d))| format!("{}\t{c}\t{d}\n", i + 1)).collect()
}

/// Parses a diagnostics CSV into `(header, rows)`.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let f = BufReader::new(File::open(path)?);
    let mut lines = f.lines();
    let head = match lines.next() {
        Some(l) => l?.split(',').map(str::to_string).collect(),
        None => return Err(Error::InvalidParameter(format!("{} is empty", path.display()))),
    };
    let mut rows = Vec::new();
    for l in lines {
        let l = l?;
        if l.is_empty() {
            continue;
        }
        let vals = l
            .split(',')
            .map(|x| x.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::InvalidParameter(format!("{}: {e}", path.display())))?;
        rows.push(vals);
    }
    Ok((head, rows))
}

/// Streams diagnostics records into a CSV file.
pub struct CsvSink {
    out: BufWriter<File>,
}

impl CsvSink {
    /// Creates (or truncates) the file and writes the header.
    pub fn create(path: &Path) -> Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{}", header())?;
        Ok(Self { out })
    }

    /// Reopens an existing CSV for a resumed run: rows with `t >= t_resume`
    /// are dropped, since the resumed run emits them again.
    pub fn resume(path: &Path, t_resume: f64) -> Result<Self> {
        if !path.exists() {
            return Self::create(path);
        }
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines();
        let head = lines.next().unwrap_or_default();
        if head != header() {
            return Err(Error::InvalidParameter(format!("{} has unexpected columns", path.display())));
        }
        let mut kept = vec![head.to_string()];
        for l in lines {
            let t: f64 = l
                .split(',')
                .next()
                .and_then(|x| x.parse().ok())
                .ok_or_else(|| Error::InvalidParameter(format!("bad row in {}: {l}", path.display())))?;
            if t < t_resume {
                kept.push(l.to_string());
            }
        }
        let mut out = BufWriter::new(File::create(path)?);
        for l in kept {
            writeln!(out, "{l}")?;
        }
        Ok(Self { out })
    }

    pub fn flush(&mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

impl DiagnosticSink for CsvSink {
    fn record(&mut self, record: &DiagnosticsRecord) -> Result<()> {
        writeln!(self.out, "{}", row(record))?;
        Ok(())
    }
}

impl Drop for CsvSink {
    fn drop(&mut self) {
        let _ = self.out.flush();
    }
}

/// Writes every state callback to `dir/snap_<step>.bin`.
pub struct SnapshotSink {
    dir: PathBuf,
    step_offset: usize,
    pub written: Vec<PathBuf>,
}

impl SnapshotSink {
    /// `step_offset` is added to the run-local step index (non-zero when
    /// resuming).
    pub fn new(dir: &Path, step_offset: usize) -> Self {
        Self { dir: dir.to_path_buf(), step_offset, written: Vec::new() }
    }
}

impl DiagnosticSink for SnapshotSink {
    fn record(&mut self, _record: &DiagnosticsRecord) -> Result<()> {
        Ok(())
    }

    fn state(&mut self, step: usize, state: &SimState) -> Result<()> {
        let path = self.dir.join(snapshot::file_name(step + self.step_offset));
        snapshot::write(state, &path)?;
        self.written.push(path);
        Ok(())
    }
}

/// Snapshot files in a directory, ordered by step.
pub fn list_snapshots(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("snap_") && n.ends_with(".bin"))
        })
        .collect();
    out.sort();
    Ok(out)
}

/// Writes simple CSV tables.
pub fn write_table(path: &Path, columns: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut out = BufWriter::new(OpenOptions::new().create(true).write(true).truncate(true).open(path)?);
    writeln!(out, "{}", columns.join(","))?;
    for r in rows {
        writeln!(out, "{}", r.join(","))?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_matches_documented_columns() {
        assert_eq!(
            header(),
            "t,mass,energy,energy_reg,divA,gauss,divB,u_H0,u_H1,u_H2,A_H0.5,A_H1,A_H1.5,At_H0.5"
        );
        assert_eq!(column_map().lines().count(), 14);
    }

    #[test]
    fn rows_round_trip_bits() {
        let xs: [f64; 5] = [0.1, 1.0 / 3.0, 1e-300, 12345.678, 0.0];
        for x in xs {
            let s = format!("{x:e}");
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }
}
