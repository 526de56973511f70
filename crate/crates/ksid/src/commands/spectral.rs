use std::path::Path;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use koopman_sid::metrics::spectral_error;
use koopman_sid::Error as CoreError;

use crate::config::ExperimentConfig;
use crate::out::{fmt, write_csv, write_summary};
use crate::pipeline::identify_at;
use crate::CliError;

#[derive(Serialize)]
struct Summary {
    command: &'static str,
    system: String,
    seed: u64,
    dictionary: String,
    t_gamma: Option<f64>,
    fs: f64,
    n_samples: usize,
    x0: Vec<f64>,
    failures: Vec<CellFailure>,
    csv: String,
}

#[derive(Serialize)]
struct CellFailure {
    t_s: f64,
    error: String,
}

pub fn run(out_dir: &Path, config_path: &Path, seed_override: Option<u64>) -> Result<(), CliError> {
    let config = ExperimentConfig::load(config_path)?;
    let sys = config.build_system()?;
    let dicts = config.build_dictionaries(sys.dim())?;
    let dict = &dicts[0];
    let grid = config.grid_values()?;
    let seed = seed_override.unwrap_or(config.sampling.seed);
    let t_gamma = config.t_gamma(&sys);
    let x0 = DVector::from_vec(config.prediction.x0.clone());
    let fs = config.prediction.fs;
    let n_samples = config.prediction.n_samples;
    let out_dir = config
        .output
        .dir
        .clone()
        .map(|d| if d.is_absolute() { d } else { out_dir.join(d) })
        .unwrap_or_else(|| out_dir.to_path_buf());

    let cells: Vec<(f64, Result<Vec<f64>, CoreError>)> = grid
        .par_iter()
        .map(|&t_s| {
            let r = identify_at(&sys, dict, &config.sampling, seed, t_s)
                .and_then(|id| spectral_error(&sys, &id.coefficients, &x0, fs, n_samples));
            (t_s, r)
        })
        .collect();

    let mut rows = Vec::with_capacity(cells.len());
    let mut failures = Vec::new();
    for (t_s, outcome) in &cells {
        let marker = match t_gamma {
            Some(tg) => {
                if *t_s >= tg {
                    "1"
                } else {
                    "0"
                }
            }
            None => "",
        };
        match outcome {
            Ok(errs) => {
                let cols: Vec<String> = errs.iter().map(|e| fmt(*e)).collect();
                rows.push(format!("{},{},{marker}", fmt(*t_s), cols.join(",")));
            }
            Err(e) => {
                // divergence of the identified field is plotted as +inf
                let cols = vec!["inf".to_string(); sys.dim()];
                rows.push(format!("{},{},{marker}", fmt(*t_s), cols.join(",")));
                failures.push(CellFailure {
                    t_s: *t_s,
                    error: e.to_string(),
                });
            }
        }
    }

    let mut header = String::from("T_s");
    for k in 1..=sys.dim() {
        header.push_str(&format!(",spectral_error_x{k}"));
    }
    header.push_str(",above_critical");
    let csv_path = write_csv(&out_dir, "spectral.csv", &header, &rows)?;
    println!(
        "spectral: {} periods ({} failures) -> {}",
        rows.len(),
        failures.len(),
        csv_path.display()
    );

    let summary = Summary {
        command: "spectral",
        system: sys.name().to_string(),
        seed,
        dictionary: dict.label().to_string(),
        t_gamma,
        fs,
        n_samples,
        x0: x0.as_slice().to_vec(),
        failures,
        csv: csv_path.display().to_string(),
    };
    write_summary(&out_dir, &summary)?;
    Ok(())
}
