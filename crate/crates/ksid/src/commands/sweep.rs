use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use koopman_sid::dynamics::sample_snapshots;
use koopman_sid::koopman::field_coefficients;
use koopman_sid::metrics::{nrmse, SweepRow};
use koopman_sid::Error as CoreError;

use crate::config::ExperimentConfig;
use crate::out::{write_csv, write_summary};
use crate::pipeline::identify_snapshots;
use crate::CliError;

#[derive(Serialize)]
struct Summary {
    command: &'static str,
    system: String,
    seed: u64,
    t_gamma: Option<f64>,
    dictionaries: Vec<String>,
    grid: Vec<f64>,
    rows: usize,
    failures: Vec<CellFailure>,
    csv: String,
}

#[derive(Serialize)]
struct CellFailure {
    t_s: f64,
    dictionary: String,
    error: String,
}

pub fn run(out_dir: &Path, config_path: &Path, seed_override: Option<u64>) -> Result<(), CliError> {
    let config = ExperimentConfig::load(config_path)?;
    let sys = config.build_system()?;
    let dicts = config.build_dictionaries(sys.dim())?;
    let grid = config.grid_values()?;
    let seed = seed_override.unwrap_or(config.sampling.seed);
    let t_gamma = config.t_gamma(&sys);
    let out_dir = config
        .output
        .dir
        .clone()
        .map(|d| if d.is_absolute() { d } else { out_dir.join(d) })
        .unwrap_or_else(|| out_dir.to_path_buf());

    // True coefficients per dictionary; a dictionary that cannot express the
    // field makes every NRMSE undefined, which is a configuration problem.
    let truths: Vec<_> = dicts
        .iter()
        .map(|d| {
            field_coefficients(&sys, d).map_err(|e| {
                CliError::Config(format!(
                    "dictionary `{}` cannot express the field of `{}`: {e}",
                    d.label(),
                    sys.name()
                ))
            })
        })
        .collect::<Result<_, _>>()?;

    let init_box: Vec<(f64, f64)> = config.sampling.init_box.iter().map(|b| (b[0], b[1])).collect();

    type Cell = (Vec<(SweepRow, Option<String>)>,);
    let per_ts: Vec<Cell> = grid
        .par_iter()
        .map(|&t_s| {
            let snaps = sample_snapshots(
                &sys,
                config.sampling.n_traj,
                config.sampling.n_snap,
                t_s,
                &init_box,
                seed,
            );
            let mut rows = Vec::with_capacity(dicts.len());
            for (dict, truth) in dicts.iter().zip(&truths) {
                let outcome: Result<SweepRow, CoreError> = snaps
                    .as_ref()
                    .map_err(|e| e.clone())
                    .and_then(|snaps| {
                        let id = identify_snapshots(snaps, dict)?;
                        let err = nrmse(&id.coefficients, truth)?;
                        Ok(SweepRow::new(
                            t_s,
                            err,
                            id.generator.spectrum.max_abs_imag(),
                            id.koopman.residual,
                            dict.label(),
                        ))
                    });
                match outcome {
                    Ok(row) => rows.push((row, None)),
                    Err(e) => rows.push((
                        SweepRow::new(t_s, f64::INFINITY, f64::NAN, f64::NAN, dict.label()),
                        Some(e.to_string()),
                    )),
                }
            }
            (rows,)
        })
        .collect();

    let mut csv_rows = Vec::new();
    let mut failures = Vec::new();
    for (cells,) in &per_ts {
        for (row, err) in cells {
            let marker = match t_gamma {
                Some(tg) => {
                    if row.t_s >= tg {
                        "1"
                    } else {
                        "0"
                    }
                }
                None => "",
            };
            csv_rows.push(format!("{},{}", row.to_csv_row(), marker));
            if let Some(e) = err {
                failures.push(CellFailure {
                    t_s: row.t_s,
                    dictionary: row.dictionary.clone(),
                    error: e.clone(),
                });
            }
        }
    }

    let header = format!("{},above_critical", SweepRow::CSV_HEADER);
    let csv_path = write_csv(&out_dir, "sweep.csv", &header, &csv_rows)?;
    println!(
        "sweep: {} rows ({} failures) -> {}",
        csv_rows.len(),
        failures.len(),
        csv_path.display()
    );

    let summary = Summary {
        command: "sweep",
        system: sys.name().to_string(),
        seed,
        t_gamma,
        dictionaries: dicts.iter().map(|d| d.label().to_string()).collect(),
        grid,
        rows: csv_rows.len(),
        failures,
        csv: csv_path.display().to_string(),
    };
    write_summary(&out_dir, &summary)?;
    Ok(())
}
