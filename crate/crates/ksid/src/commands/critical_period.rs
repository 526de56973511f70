use std::collections::HashMap;
use std::path::{Path, PathBuf};

use num_complex::Complex;
use serde::Serialize;

use koopman_sid::koopman::true_generator_matrix;
use koopman_sid::linalg::Spectrum;
use koopman_sid::observables::build_dictionary;
use koopman_sid::sampling::critical_period;

use crate::config::load_system_file;
use crate::out::write_summary;
use crate::CliError;

#[derive(Serialize)]
struct Summary {
    command: &'static str,
    source: String,
    spectrum: Vec<[f64; 2]>,
    max_abs_imag: f64,
    t_gamma: f64,
    min_frequency_rad_s: f64,
    no_aliasing_at: Option<NoAliasing>,
}

#[derive(Serialize)]
struct NoAliasing {
    t_s: f64,
    no_aliasing: bool,
}

#[allow(clippy::too_many_arguments)]
pub fn run(
    out_dir: &Path,
    system: Option<String>,
    params: Vec<(String, f64)>,
    system_file: Option<PathBuf>,
    spectrum_file: Option<PathBuf>,
    degree: Option<u32>,
    t_s: Option<f64>,
) -> Result<(), CliError> {
    let (spectrum, source) = resolve_spectrum(system, params, system_file, spectrum_file, degree)?;

    let mut verdict = critical_period(&spectrum);
    if let Some(t) = t_s {
        verdict = verdict.check_at(t);
    }

    println!("spectrum source: {source}");
    for l in spectrum.eigenvalues() {
        println!("  lambda = {:+.12e} {:+.12e}i", l.re, l.im);
    }
    println!("max |Im lambda|      = {} rad/s", verdict.max_abs_imag);
    if verdict.t_gamma.is_finite() {
        println!("critical period      = {} s", verdict.t_gamma);
    } else {
        println!("critical period      = unbounded");
    }
    println!("min sampling freq    = {} rad/s", verdict.min_frequency);
    if let Some((t, ok)) = verdict.no_aliasing_at {
        println!(
            "T_s = {t} s: {}",
            if ok { "no aliasing" } else { "aliasing possible" }
        );
    }

    let summary = Summary {
        command: "critical-period",
        source,
        spectrum: spectrum.eigenvalues().iter().map(|l| [l.re, l.im]).collect(),
        max_abs_imag: verdict.max_abs_imag,
        t_gamma: verdict.t_gamma,
        min_frequency_rad_s: verdict.min_frequency,
        no_aliasing_at: verdict.no_aliasing_at.map(|(t_s, no_aliasing)| NoAliasing {
            t_s,
            no_aliasing,
        }),
    };
    write_summary(out_dir, &summary)?;
    Ok(())
}

fn resolve_spectrum(
    system: Option<String>,
    params: Vec<(String, f64)>,
    system_file: Option<PathBuf>,
    spectrum_file: Option<PathBuf>,
    degree: Option<u32>,
) -> Result<(Spectrum, String), CliError> {
    if let Some(path) = spectrum_file {
        let eigs = read_spectrum_file(&path)?;
        return Ok((
            Spectrum::new(eigs),
            format!("spectrum file {}", path.display()),
        ));
    }

    let sys = match (system, system_file) {
        (Some(name), None) => {
            let map: HashMap<String, f64> = params.into_iter().collect();
            koopman_sid::dynamics::builtin_system(&name, &map)?
        }
        (None, Some(path)) => load_system_file(&path)?,
        _ => {
            return Err(CliError::Config(
                "specify --system, --system-file, or --spectrum-file".into(),
            ))
        }
    };

    if let Some(eigs) = sys.known_principal_eigenvalues() {
        return Ok((
            Spectrum::new(eigs.to_vec()),
            format!("principal eigenvalues of `{}`", sys.name()),
        ));
    }
    match degree {
        Some(m) => {
            let dict = build_dictionary(sys.dim(), m, false, None);
            let gen = true_generator_matrix(&sys, &dict)?;
            Ok((
                gen.spectrum,
                format!("generator of `{}` on dictionary m={m}", sys.name()),
            ))
        }
        None => Err(CliError::Config(format!(
            "system `{}` has no recorded principal eigenvalues; pass --degree to build a generator",
            sys.name()
        ))),
    }
}

fn read_spectrum_file(path: &Path) -> Result<Vec<Complex<f64>>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut eigs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|p| !p.is_empty())
            .collect();
        if parts.len() != 2 {
            return Err(CliError::Config(format!(
                "{}:{}: expected `re,im`",
                path.display(),
                lineno + 1
            )));
        }
        let re: f64 = parts[0].parse().map_err(|e| {
            CliError::Config(format!("{}:{}: {e}", path.display(), lineno + 1))
        })?;
        let im: f64 = parts[1].parse().map_err(|e| {
            CliError::Config(format!("{}:{}: {e}", path.display(), lineno + 1))
        })?;
        eigs.push(Complex::new(re, im));
    }
    if eigs.is_empty() {
        return Err(CliError::Config(format!(
            "{}: no eigenvalues found",
            path.display()
        )));
    }
    Ok(eigs)
}
