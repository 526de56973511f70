use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use koopman_sid::dynamics::{builtin_system, integrate_path, DEFAULT_TOL};

use crate::config::load_system_file;
use crate::out::{fmt, write_csv, write_summary};
use crate::pipeline::sample_times;
use crate::CliError;

#[derive(Serialize)]
struct Summary {
    command: &'static str,
    system: String,
    x0: Vec<f64>,
    t_end: f64,
    fs: f64,
    samples: usize,
    final_state: Vec<f64>,
    csv: String,
}

pub fn run(
    out_dir: &Path,
    system: Option<String>,
    params: Vec<(String, f64)>,
    system_file: Option<PathBuf>,
    x0: Vec<f64>,
    t_end: f64,
    fs: f64,
) -> Result<(), CliError> {
    let sys = match (system, system_file) {
        (Some(name), None) => {
            let map: HashMap<String, f64> = params.into_iter().collect();
            builtin_system(&name, &map)?
        }
        (None, Some(path)) => load_system_file(&path)?,
        _ => {
            return Err(CliError::Config(
                "specify exactly one of --system or --system-file".into(),
            ))
        }
    };
    if x0.len() != sys.dim() {
        return Err(CliError::Config(format!(
            "x0 has {} entries for a {}-dimensional system",
            x0.len(),
            sys.dim()
        )));
    }
    if t_end <= 0.0 || fs <= 0.0 {
        return Err(CliError::Config("t_end and fs must be positive".into()));
    }

    let n = (t_end * fs).round() as usize + 1;
    let times = sample_times(fs, n);
    let path = integrate_path(&sys.as_rhs(), &x0, &times, DEFAULT_TOL, DEFAULT_TOL)?;

    let mut header = String::from("t");
    for k in 1..=sys.dim() {
        header.push_str(&format!(",x{k}"));
    }
    let rows: Vec<String> = times
        .iter()
        .zip(&path)
        .map(|(t, x)| {
            let mut row = fmt(*t);
            for v in x {
                row.push(',');
                row.push_str(&fmt(*v));
            }
            row
        })
        .collect();
    let csv_path = write_csv(out_dir, "trajectory.csv", &header, &rows)?;
    println!(
        "simulate `{}`: {} samples -> {}",
        sys.name(),
        rows.len(),
        csv_path.display()
    );

    let summary = Summary {
        command: "simulate",
        system: sys.name().to_string(),
        x0,
        t_end,
        fs,
        samples: rows.len(),
        final_state: path.last().cloned().unwrap_or_default(),
        csv: csv_path.display().to_string(),
    };
    write_summary(out_dir, &summary)?;
    Ok(())
}
