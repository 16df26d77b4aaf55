//! Scenario execution: single spectra, coupling scans and cap convergence.

use std::path::{Path, PathBuf};

use exciton_spectra::propagation::default_time_step;
use exciton_spectra::pseudomode::{
    converge_caps, pm_correlation, ConvergedCaps, ConvergenceSettings,
};
use exciton_spectra::spectra::{absorption_with_method, overlap};
use exciton_spectra::zofe::propagate_zofe;
use exciton_spectra::{Aggregate64, BasisCaps, Bath64, Config64, Method, Spectrum64, Trace64};
use rayon::prelude::*;

use crate::config::{CapsChoice, MethodChoice, RunSettings, Scenario};
use crate::output;
use crate::CliError;

type CoreResult<T> = exciton_spectra::Result<T>;

/// Trace and spectrum from one propagation route.
#[derive(Debug, Clone)]
pub struct MethodResult {
    pub method: Method,
    pub trace: Trace64,
    pub spectrum: Spectrum64,
    /// Caps actually used, for the pseudomode route.
    pub caps: Option<BasisCaps>,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub results: Vec<MethodResult>,
    /// ZOFE against pseudomode, when both ran.
    pub overlap: Option<f64>,
}

pub fn propagation_config(
    agg: &Aggregate64,
    bath: &Bath64,
    run: &RunSettings,
) -> CoreResult<Config64> {
    let dt = run.dt.unwrap_or_else(|| default_time_step(agg, bath));
    let config = Config64::fitted(dt, run.t_max)?;
    match run.sample_spacing {
        Some(spacing) => config.with_sample_spacing(spacing),
        None => Ok(config),
    }
}

fn settings(run: &RunSettings) -> ConvergenceSettings<f64> {
    ConvergenceSettings {
        tolerance: run.tolerance,
        eta: run.eta,
        nu: run.nu.clone(),
        budget: run.budget,
    }
}

pub fn compute_method(
    agg: &Aggregate64,
    bath: &Bath64,
    run: &RunSettings,
    method: Method,
) -> CoreResult<MethodResult> {
    let config = propagation_config(agg, bath, run)?;
    let (trace, caps) = match method {
        Method::Pseudomode => {
            let caps = match run.caps.expect("validated: pm runs carry caps") {
                CapsChoice::Fixed(c) => c,
                CapsChoice::Heuristic => BasisCaps::heuristic(bath),
                CapsChoice::Auto => {
                    let converged = converge_caps(agg, bath, &config, &settings(run))?;
                    return Ok(MethodResult {
                        method,
                        trace: converged.trace,
                        spectrum: converged.spectrum,
                        caps: Some(converged.caps),
                    });
                }
            };
            (
                pm_correlation(agg, bath, caps, &config, run.budget)?,
                Some(caps),
            )
        }
        _ => (propagate_zofe(agg, bath, &config)?, None),
    };
    let spectrum = absorption_with_method(&trace, run.eta, &run.nu, method)?;
    Ok(MethodResult {
        method,
        trace,
        spectrum,
        caps,
    })
}

pub fn compare(agg: &Aggregate64, bath: &Bath64, run: &RunSettings) -> CoreResult<Comparison> {
    let mut results = Vec::new();
    if run.method.uses_zofe() {
        results.push(compute_method(agg, bath, run, Method::Zofe)?);
    }
    if run.method.uses_pm() {
        results.push(compute_method(agg, bath, run, Method::Pseudomode)?);
    }
    let overlap = match results.as_slice() {
        [a, b] => Some(overlap(&a.spectrum, &b.spectrum)?),
        _ => None,
    };
    Ok(Comparison { results, overlap })
}

fn write_result(
    dir: &Path,
    result: &MethodResult,
    suffix: &str,
    files: &mut Vec<PathBuf>,
) -> Result<(), CliError> {
    let tag = result.method.tag();
    files.push(output::write_spectrum(
        &dir.join(format!("spectrum_{tag}{suffix}.tsv")),
        &result.spectrum,
    )?);
    files.push(output::write_trace(
        &dir.join(format!("trace_{tag}{suffix}.tsv")),
        &result.trace,
    )?);
    Ok(())
}

#[derive(Debug, Clone)]
pub struct SpectrumReport {
    pub comparison: Comparison,
    pub files: Vec<PathBuf>,
}

/// Runs the configured methods at the aggregate's own coupling and writes
/// `spectrum_<method>.tsv` and `trace_<method>.tsv`.
pub fn run_spectrum(scenario: &Scenario, out: &Path) -> Result<SpectrumReport, CliError> {
    let comparison = compare(&scenario.aggregate, &scenario.bath, &scenario.run)?;
    output::ensure_dir(out)?;
    let mut files = Vec::new();
    for result in &comparison.results {
        write_result(out, result, "", &mut files)?;
    }
    Ok(SpectrumReport { comparison, files })
}

#[derive(Debug, Clone)]
pub struct ScanReport {
    /// Ascending `V` with overlap percent, `None` where the point failed.
    pub rows: Vec<(f64, Option<f64>)>,
    pub failures: Vec<(f64, String)>,
    pub files: Vec<PathBuf>,
}

/// Overlap of ZOFE and pseudomode spectra across the scan grid.
///
/// Points run on the current rayon pool; rows are written in ascending `V`
/// by a single writer once all points are in.
pub fn run_vscan(scenario: &Scenario, out: &Path) -> Result<ScanReport, CliError> {
    let scan = scenario
        .scan
        .as_ref()
        .ok_or_else(|| CliError::Config("vscan needs a [scan] block".into()))?;
    if scenario.run.method != MethodChoice::Both {
        return Err(CliError::Config(format!(
            "vscan compares both methods, but method is `{}`",
            scenario.run.method
        )));
    }
    let values = &scan.values;
    let points: Vec<CoreResult<Comparison>> = values
        .par_iter()
        .map(|&v| {
            compare(
                &scenario.aggregate.with_coupling(v),
                &scenario.bath,
                &scenario.run,
            )
        })
        .collect();

    output::ensure_dir(out)?;
    let mut files = Vec::new();
    let mut rows = Vec::with_capacity(values.len());
    let mut failures = Vec::new();
    if scan.keep_spectra {
        output::ensure_dir(&out.join("spectra"))?;
    }
    for (k, (&v, point)) in values.iter().zip(points).enumerate() {
        match point {
            Ok(cmp) => {
                rows.push((v, cmp.overlap));
                if scan.keep_spectra {
                    for result in &cmp.results {
                        write_result(
                            &out.join("spectra"),
                            result,
                            &format!("_{k:04}"),
                            &mut files,
                        )?;
                    }
                }
            }
            Err(e) => {
                rows.push((v, None));
                failures.push((v, e.to_string()));
            }
        }
    }
    files.insert(0, output::write_overlap(&out.join("overlap.tsv"), &rows)?);
    Ok(ScanReport {
        rows,
        failures,
        files,
    })
}

#[derive(Debug, Clone)]
pub struct ConvergeReport {
    pub converged: ConvergedCaps<f64>,
    pub files: Vec<PathBuf>,
}

/// Walks the cap ladder for the aggregate's own coupling and writes
/// `ladder.tsv` plus the converged pseudomode trace and spectrum.
pub fn run_converge(scenario: &Scenario, out: &Path) -> Result<ConvergeReport, CliError> {
    let agg = &scenario.aggregate;
    let bath = &scenario.bath;
    let config = propagation_config(agg, bath, &scenario.run)?;
    let converged = converge_caps(agg, bath, &config, &settings(&scenario.run))?;
    output::ensure_dir(out)?;
    let mut files = vec![output::write_ladder(
        &out.join("ladder.tsv"),
        &converged.ladder,
    )?];
    let result = MethodResult {
        method: Method::Pseudomode,
        trace: converged.trace.clone(),
        spectrum: converged.spectrum.clone(),
        caps: Some(converged.caps),
    };
    write_result(out, &result, "", &mut files)?;
    Ok(ConvergeReport { converged, files })
}
