//! Delimited reports and run manifests.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clearsky_core::harness::ErrorReport;
use clearsky_core::inversion::{Aerosol, FitResult};

use crate::error::{AppError, AppResult};
use crate::formats::write_atomic;

/// One row of the summary RMSE table.
#[derive(Debug, Clone, PartialEq)]
pub struct RmseRow {
    pub model: String,
    pub rmse_mw: f64,
    /// Directions without a relative error because the reference is zero.
    pub excluded: usize,
}

pub fn rmse_table(rows: &[RmseRow], reference: &str, band: [f64; 2]) -> String {
    let w = rows.iter().map(|r| r.model.len()).max().unwrap_or(0).max(5);
    let mut out = format!("# RMSE against {reference} over {}-{} nm, mW m^-2 sr^-1 nm^-1\n", band[0], band[1]);
    let _ = writeln!(out, "{:<w$}  {:>12}  {:>8}", "model", "rmse", "excluded");
    for r in rows {
        let _ = writeln!(out, "{:<w$}  {:>12.4}  {:>8}", r.model, r.rmse_mw, r.excluded);
    }
    out
}

pub fn rmse_csv(rows: &[RmseRow]) -> String {
    let mut out = String::from("model,rmse_mw,excluded\n");
    for r in rows {
        let _ = writeln!(out, "{},{:e},{}", r.model, r.rmse_mw, r.excluded);
    }
    out
}

/// Per-direction errors of every record; band sums in W m^-2 sr^-1 nm^-1.
pub fn direction_csv(reports: &[ErrorReport]) -> String {
    let mut out = String::from("time,direction,view_zenith_deg,view_azimuth_deg,model,reference,relative_error_pct\n");
    for r in reports {
        for (k, d) in r.directions.iter().enumerate() {
            let rel = d.relative_error_pct.map_or("NA".to_string(), |v| format!("{v:e}"));
            let _ = writeln!(out, "{},{},{},{},{:e},{:e},{rel}", r.time, k, d.zenith_deg, d.azimuth_deg, d.model, d.reference);
        }
    }
    out
}

/// Columns `key` then one per name; `None` cells print as `NA`.
pub fn series_csv(key: &str, names: &[String], rows: &[(String, Vec<Option<f64>>)]) -> String {
    let mut out = String::from(key);
    for n in names {
        let _ = write!(out, ",{n}");
    }
    out.push('\n');
    for (k, vals) in rows {
        out.push_str(k);
        for v in vals {
            match v {
                Some(v) => {
                    let _ = write!(out, ",{v:e}");
                }
                None => out.push_str(",NA"),
            }
        }
        out.push('\n');
    }
    out
}

pub fn inversion_report(grid_best: &FitResult, refined: Option<&FitResult>, evaluations: usize) -> String {
    let line = |a: Aerosol, rmse: f64| format!("alpha = {}\nbeta = {}\ng = {}\nrmse_mw = {rmse:e}\n", a.alpha, a.beta, a.g);
    let mut out = format!("[grid]\npoints = {}\n{}", grid_best.surface.len(), line(grid_best.params, grid_best.rmse));
    if let Some(r) = refined {
        let _ = write!(out, "\n[refined]\nevaluations = {}\n{}", r.surface.len(), line(r.params, r.rmse));
    }
    let _ = write!(out, "\n[total]\nevaluations = {evaluations}\n");
    out
}

pub fn surface_csv(fits: &[&FitResult]) -> String {
    let mut out = String::from("alpha,beta,g,rmse_mw\n");
    for f in fits {
        for (a, r) in &f.surface {
            let _ = writeln!(out, "{},{},{},{r:e}", a.alpha, a.beta, a.g);
        }
    }
    out
}

/// What produced a batch of outputs; enough to run it again.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub command: String,
    pub config: Option<PathBuf>,
    pub models: Vec<String>,
    pub datasets: Vec<String>,
    pub out_dir: PathBuf,
    pub outputs: Vec<String>,
    /// Arguments after the program name.
    pub args: Vec<String>,
}

pub const DETERMINISM_NOTE: &str = "no random numbers are used; the same arguments, inputs and version give bit-identical outputs";

impl Manifest {
    pub fn file_name(&self) -> String {
        format!("manifest-{}.txt", self.command)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("# clearsky run manifest\nversion = {}\ncommand = {}\n", env!("CARGO_PKG_VERSION"), self.command);
        let _ = writeln!(out, "config = {}", self.config.as_ref().map_or("(defaults)".to_string(), |p| p.display().to_string()));
        let _ = writeln!(out, "models = {}", self.models.join(","));
        let _ = writeln!(out, "datasets = {}", self.datasets.join(","));
        let _ = writeln!(out, "out_dir = {}", self.out_dir.display());
        let _ = writeln!(out, "determinism = {DETERMINISM_NOTE}");
        for o in &self.outputs {
            let _ = writeln!(out, "output = {o}");
        }
        for a in &self.args {
            let _ = writeln!(out, "arg = {a}");
        }
        out
    }

    pub fn save(&self) -> AppResult<PathBuf> {
        let p = self.out_dir.join(self.file_name());
        write_atomic(&p, self.to_text().as_bytes())?;
        Ok(p)
    }

    /// Arguments recorded in a manifest file.
    pub fn load_args(path: &Path) -> AppResult<Vec<String>> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        let src = path.display().to_string();
        if !text.starts_with("# clearsky run manifest") {
            return Err(AppError::parse(src, 1, "not a clearsky run manifest"));
        }
        let args: Vec<String> = text.lines().filter_map(|l| l.strip_prefix("arg = ").map(str::to_string)).collect();
        if args.is_empty() {
            return Err(AppError::parse(src, 1, "manifest records no arguments"));
        }
        Ok(args)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trips_its_arguments() {
        let dir = tempfile::tempdir().unwrap();
        let m = Manifest {
            command: "render".into(),
            config: None,
            models: vec!["bruneton".into()],
            datasets: vec![],
            out_dir: dir.path().to_path_buf(),
            outputs: vec!["a.ppm".into()],
            args: vec!["render".into(), "--model".into(), "bruneton".into()],
        };
        let p = m.save().unwrap();
        assert_eq!(Manifest::load_args(&p).unwrap(), m.args);
    }

    #[test]
    fn series_marks_missing_cells() {
        let s = series_csv("time", &["a".into(), "b".into()], &[("t1".into(), vec![Some(1.5), None])]);
        assert_eq!(s, "time,a,b\nt1,1.5e0,NA\n");
    }
}
