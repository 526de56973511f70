use std::path::Path;

use nalgebra::DVector;
use serde::Serialize;

use koopman_sid::dynamics::integrate_path;
use koopman_sid::dynamics::DEFAULT_TOL;

use crate::config::ExperimentConfig;
use crate::out::{fmt, write_csv, write_summary};
use crate::pipeline::{identify_at, sample_path_partial, sample_times};
use crate::CliError;

#[derive(Serialize)]
struct Summary {
    command: &'static str,
    system: String,
    seed: u64,
    dictionary: String,
    x0: Vec<f64>,
    horizon: f64,
    fs: f64,
    runs: Vec<RunReport>,
}

#[derive(Serialize)]
struct RunReport {
    t_s: f64,
    csv: String,
    residual: f64,
    max_abs_imag: f64,
    diverged: Option<String>,
}

pub fn run(
    out_dir: &Path,
    config_path: &Path,
    seed_override: Option<u64>,
    t_s_flags: Vec<f64>,
    x0_flag: Option<Vec<f64>>,
    horizon_flag: Option<f64>,
) -> Result<(), CliError> {
    let config = ExperimentConfig::load(config_path)?;
    let sys = config.build_system()?;
    let dicts = config.build_dictionaries(sys.dim())?;
    let dict = &dicts[0];
    let seed = seed_override.unwrap_or(config.sampling.seed);
    let periods = if t_s_flags.is_empty() {
        config.grid_values()?
    } else {
        t_s_flags
    };
    let x0 = DVector::from_vec(x0_flag.unwrap_or_else(|| config.prediction.x0.clone()));
    if x0.len() != sys.dim() {
        return Err(CliError::Config(format!(
            "x0 has {} entries for a {}-dimensional system",
            x0.len(),
            sys.dim()
        )));
    }
    let horizon = horizon_flag.unwrap_or(config.prediction.horizon);
    let fs = config.prediction.fs;
    let out_dir = config
        .output
        .dir
        .clone()
        .map(|d| if d.is_absolute() { d } else { out_dir.join(d) })
        .unwrap_or_else(|| out_dir.to_path_buf());

    let n_samples = (horizon * fs).round() as usize + 1;
    let times = sample_times(fs, n_samples);
    let truth = integrate_path(&sys.as_rhs(), x0.as_slice(), &times, DEFAULT_TOL, DEFAULT_TOL)?;

    let mut runs = Vec::new();
    for &t_s in &periods {
        let id = identify_at(&sys, dict, &config.sampling, seed, t_s).map_err(CliError::from)?;
        let rhs = id.coefficients.as_rhs();
        let (pred, failure) = sample_path_partial(&rhs, &x0, &times);

        let mut rows = Vec::with_capacity(times.len());
        for (i, t) in times.iter().enumerate() {
            let mut row = fmt(*t);
            for k in 0..sys.dim() {
                row.push(',');
                row.push_str(&fmt(truth[i][k]));
            }
            for k in 0..sys.dim() {
                row.push(',');
                match pred.get(i) {
                    Some(x) => row.push_str(&fmt(x[k])),
                    None => row.push_str("nan"),
                }
            }
            rows.push(row);
        }

        let mut header = String::from("t");
        for k in 1..=sys.dim() {
            header.push_str(&format!(",true_x{k}"));
        }
        for k in 1..=sys.dim() {
            header.push_str(&format!(",pred_x{k}"));
        }
        let name = format!("predict_ts_{t_s}.csv");
        let path = write_csv(&out_dir, &name, &header, &rows)?;
        println!(
            "predict T_s = {t_s}: residual {:.3e}, max|Im| {:.4} -> {}",
            id.koopman.residual,
            id.generator.spectrum.max_abs_imag(),
            path.display()
        );
        if let Some(e) = &failure {
            println!("  identified field diverged: {e}");
        }
        runs.push(RunReport {
            t_s,
            csv: path.display().to_string(),
            residual: id.koopman.residual,
            max_abs_imag: id.generator.spectrum.max_abs_imag(),
            diverged: failure.map(|e| e.to_string()),
        });
    }

    let summary = Summary {
        command: "predict",
        system: sys.name().to_string(),
        seed,
        dictionary: dict.label().to_string(),
        x0: x0.as_slice().to_vec(),
        horizon,
        fs,
        runs,
    };
    write_summary(&out_dir, &summary)?;
    Ok(())
}
