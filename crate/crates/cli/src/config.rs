//! Scenario files.
//!
//! A scenario is a TOML document with `[aggregate]`, `[bath]`, `[run]` and an
//! optional `[scan]` block. Unknown keys anywhere are rejected.
//!
//! ```toml
//! [aggregate]
//! n = 2
//! epsilon = 0.0
//! coupling_v = -0.41
//! dipoles = "equal-parallel"
//!
//! [[bath.terms]]
//! huang_rhys = 0.64
//! omega = 1.0
//! width = 0.25
//!
//! [run]
//! method = "both"
//! t_max = 150.0
//! eta = 0.01
//! nu_min = -5.0
//! nu_max = 7.0
//! nu_points = 2401
//! caps = 10
//!
//! [scan]
//! v_min = -1.5
//! v_max = 1.5
//! steps = 121
//! ```

use std::fmt;
use std::path::Path;

use exciton_spectra::pseudomode::DEFAULT_BUDGET;
use exciton_spectra::spectra::uniform_grid;
use exciton_spectra::{Aggregate64, BasisCaps, Bath64, BathTerm64};
use serde::Deserialize;

use crate::CliError;

/// Which propagation routes a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MethodChoice {
    Zofe,
    Pm,
    Both,
}

impl MethodChoice {
    pub fn uses_zofe(self) -> bool {
        matches!(self, MethodChoice::Zofe | MethodChoice::Both)
    }

    pub fn uses_pm(self) -> bool {
        matches!(self, MethodChoice::Pm | MethodChoice::Both)
    }
}

impl fmt::Display for MethodChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MethodChoice::Zofe => "zofe",
            MethodChoice::Pm => "pm",
            MethodChoice::Both => "both",
        })
    }
}

/// How the pseudomode basis is truncated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CapsChoice {
    Fixed(BasisCaps),
    /// `ceil(4 + 6 max X)` on every mode.
    Heuristic,
    /// Walk the cap ladder until successive spectra agree.
    Auto,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub method: MethodChoice,
    /// Explicit step; `None` picks the library default per aggregate.
    pub dt: Option<f64>,
    pub t_max: f64,
    pub eta: f64,
    pub nu: Vec<f64>,
    pub sample_spacing: Option<f64>,
    pub caps: Option<CapsChoice>,
    pub budget: usize,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanSettings {
    /// Strictly ascending coupling values.
    pub values: Vec<f64>,
    pub keep_spectra: bool,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub aggregate: Aggregate64,
    pub bath: Bath64,
    pub run: RunSettings,
    pub scan: Option<ScanSettings>,
}

impl Scenario {
    pub fn from_path(path: &Path, method_override: Option<MethodChoice>) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text, method_override)
    }

    pub fn from_toml_str(
        text: &str,
        method_override: Option<MethodChoice>,
    ) -> Result<Self, CliError> {
        let raw: RawScenario =
            toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))?;
        raw.validate(method_override)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    aggregate: RawAggregate,
    #[serde(default)]
    bath: RawBath,
    run: RawRun,
    scan: Option<RawScan>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawDipoles {
    Shorthand(String),
    Explicit(Vec<[f64; 3]>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAggregate {
    n: usize,
    epsilon: Option<OneOrMany>,
    #[serde(default)]
    coupling_v: f64,
    dipoles: Option<RawDipoles>,
    polarization: Option<[f64; 3]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBath {
    #[serde(default)]
    terms: Vec<RawTerm>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTerm {
    huang_rhys: Option<f64>,
    strength: Option<f64>,
    omega: f64,
    width: f64,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawCaps {
    Uniform(u32),
    Keyword(String),
    Table(RawCapsTable),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCapsTable {
    total: u32,
    per_mode: u32,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    method: Option<MethodChoice>,
    dt: Option<f64>,
    t_max: f64,
    #[serde(default = "default_eta")]
    eta: f64,
    nu_min: f64,
    nu_max: f64,
    nu_points: usize,
    sample_spacing: Option<f64>,
    caps: Option<RawCaps>,
    budget: Option<usize>,
    #[serde(default = "default_tolerance")]
    tolerance: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScan {
    v_min: Option<f64>,
    v_max: Option<f64>,
    steps: Option<usize>,
    values: Option<Vec<f64>>,
    #[serde(default)]
    keep_spectra: bool,
}

fn default_eta() -> f64 {
    0.01
}

fn default_tolerance() -> f64 {
    1e-3
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl RawScenario {
    fn validate(self, method_override: Option<MethodChoice>) -> Result<Scenario, CliError> {
        let aggregate = self.aggregate.validate()?;
        let bath = self.bath.validate(aggregate.n_monomers())?;
        let run = self.run.validate(method_override)?;
        let scan = self.scan.map(RawScan::validate).transpose()?;
        Ok(Scenario {
            aggregate,
            bath,
            run,
            scan,
        })
    }
}

impl RawAggregate {
    fn validate(self) -> Result<Aggregate64, CliError> {
        if self.n == 0 {
            return Err(config_err("aggregate.n must be at least 1"));
        }
        let epsilon = match self.epsilon {
            None => vec![0.0; self.n],
            Some(OneOrMany::One(e)) => vec![e; self.n],
            Some(OneOrMany::Many(list)) if list.len() == self.n => list,
            Some(OneOrMany::Many(list)) => {
                return Err(config_err(format!(
                    "aggregate.epsilon has {} entries for n = {}",
                    list.len(),
                    self.n
                )))
            }
        };
        let built = match (self.dipoles, self.polarization) {
            (None, None) => Aggregate64::equal_parallel(epsilon, self.coupling_v),
            (Some(RawDipoles::Shorthand(s)), None) if s == "equal-parallel" => {
                Aggregate64::equal_parallel(epsilon, self.coupling_v)
            }
            (Some(RawDipoles::Shorthand(s)), Some(_)) if s == "equal-parallel" => {
                return Err(config_err("aggregate.polarization is only used with explicit dipoles"))
            }
            (Some(RawDipoles::Shorthand(s)), _) => {
                return Err(config_err(format!(
                    "aggregate.dipoles: unknown shorthand `{s}` (expected \"equal-parallel\" or a list)"
                )))
            }
            (Some(RawDipoles::Explicit(d)), Some(pol)) => Aggregate64::new(epsilon, self.coupling_v, d, pol),
            (Some(RawDipoles::Explicit(_)), None) => {
                return Err(config_err("aggregate.polarization is required with explicit dipoles"))
            }
            (None, Some(_)) => return Err(config_err("aggregate.polarization given without dipoles")),
        };
        built.map_err(|e| config_err(format!("aggregate: {e}")))
    }
}

impl RawBath {
    fn validate(self, n_monomers: usize) -> Result<Bath64, CliError> {
        let mut terms = Vec::with_capacity(self.terms.len());
        for (j, t) in self.terms.into_iter().enumerate() {
            let term = match (t.huang_rhys, t.strength) {
                (Some(x), None) => BathTerm64::from_huang_rhys(x, t.omega, t.width),
                (None, Some(g)) => BathTerm64::new(g, t.omega, t.width),
                _ => {
                    return Err(config_err(format!(
                        "bath.terms[{j}]: give exactly one of huang_rhys and strength"
                    )))
                }
            };
            terms.push(term);
        }
        Bath64::uniform(n_monomers, &terms).map_err(|e| config_err(format!("bath: {e}")))
    }
}

impl RawRun {
    fn validate(self, method_override: Option<MethodChoice>) -> Result<RunSettings, CliError> {
        let method = method_override
            .or(self.method)
            .ok_or_else(|| config_err("run.method is missing and no --method was given"))?;
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(config_err(format!("run.dt must be positive, got {dt}")));
            }
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(config_err(format!(
                "run.t_max must be positive, got {}",
                self.t_max
            )));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(config_err(format!(
                "run.eta must be non-negative, got {}",
                self.eta
            )));
        }
        if let Some(s) = self.sample_spacing {
            if !(s > 0.0 && s.is_finite()) {
                return Err(config_err(format!(
                    "run.sample_spacing must be positive, got {s}"
                )));
            }
        }
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(config_err(format!(
                "run.tolerance must lie in (0, 1), got {}",
                self.tolerance
            )));
        }
        let nu = uniform_grid(self.nu_min, self.nu_max, self.nu_points)
            .map_err(|e| config_err(format!("run: {e}")))?;
        let caps = match self.caps {
            None => None,
            Some(RawCaps::Uniform(c)) => Some(CapsChoice::Fixed(BasisCaps::uniform(c))),
            Some(RawCaps::Table(t)) => Some(CapsChoice::Fixed(BasisCaps {
                total: t.total,
                per_mode: t.per_mode,
            })),
            Some(RawCaps::Keyword(k)) => match k.as_str() {
                "auto" => Some(CapsChoice::Auto),
                "heuristic" => Some(CapsChoice::Heuristic),
                other => {
                    return Err(config_err(format!(
                        "run.caps: unknown keyword `{other}` (expected an integer, a table, \"auto\" or \"heuristic\")"
                    )))
                }
            },
        };
        if method.uses_pm() && caps.is_none() {
            return Err(config_err(format!(
                "method `{method}` needs run.caps (integer, table, \"auto\" or \"heuristic\")"
            )));
        }
        Ok(RunSettings {
            method,
            dt: self.dt,
            t_max: self.t_max,
            eta: self.eta,
            nu,
            sample_spacing: self.sample_spacing,
            caps,
            budget: self.budget.unwrap_or(DEFAULT_BUDGET),
            tolerance: self.tolerance,
        })
    }
}

impl RawScan {
    fn validate(self) -> Result<ScanSettings, CliError> {
        let values = match (self.values, self.v_min, self.v_max, self.steps) {
            (Some(values), None, None, None) => {
                if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
                    return Err(config_err(
                        "scan.values must be a non-empty list of finite numbers",
                    ));
                }
                if values.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(config_err("scan.values must be strictly ascending"));
                }
                values
            }
            (None, Some(v_min), Some(v_max), Some(steps)) => {
                if !(v_min.is_finite() && v_max.is_finite()) {
                    return Err(config_err("scan bounds must be finite"));
                }
                match steps {
                    0 => return Err(config_err("scan.steps must be at least 1")),
                    1 => vec![v_min],
                    _ => uniform_grid(v_min, v_max, steps).map_err(|_| {
                        config_err(format!(
                            "scan.v_max ({v_max}) must exceed scan.v_min ({v_min})"
                        ))
                    })?,
                }
            }
            _ => {
                return Err(config_err(
                    "scan needs either `values` or all of `v_min`, `v_max` and `steps`",
                ))
            }
        };
        Ok(ScanSettings {
            values,
            keep_spectra: self.keep_spectra,
        })
    }
}
