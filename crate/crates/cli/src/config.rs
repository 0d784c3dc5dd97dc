//! Scenario files and their evaluation.
//!
//! A scenario is a TOML document. Parameters carry their units in the key
//! name (`variance`, `noise_variance`), never a standard deviation.
//!
//! ```toml
//! name = "gaussian-gaussian"
//! seed = 7
//!
//! [prior]
//! family = "gaussian"
//! mean = [0.0]
//! variance = 1.0
//!
//! [model]
//! label = "gaussian-location"
//! noise_variance = 1.0
//!
//! [[reference]]
//! kind = "gaussian-standard"
//!
//! [[reference]]
//! kind = "tilted"
//! delta = 1.0
//! ```

use std::path::{Path, PathBuf};

use bcrb::bounds::report::{assemble_report, BoundReport, MonteCarloSettings, OracleToggles, ReferenceChoice, Scenario};
use bcrb::measures::{normalized_from_potential, LogConcavePrior};
use bcrb::models::{from_registry, ModelParams, REGISTRY_LABELS};
use bcrb::quadrature::{Axis, QuadratureSpec, Scheme, SupportBox, MIN_NODES_PER_AXIS};
use serde::{Deserialize, Serialize};

use crate::output::{to_csv, write_atomic, write_json};
use crate::{line_col, potential, CliError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub seed: Option<u64>,
    pub prior: PriorSpec,
    pub model: ModelSpec,
    #[serde(default, rename = "reference")]
    pub references: Vec<ReferenceChoice>,
    #[serde(default)]
    pub quadrature: QuadratureOverrides,
    #[serde(default)]
    pub oracles: OracleConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PriorSpec {
    Gaussian {
        mean: Vec<f64>,
        variance: f64,
    },
    Laplace {
        #[serde(default)]
        location: f64,
        scale: f64,
    },
    Uniform {
        a: f64,
        b: f64,
    },
    Exponential {
        rate: f64,
    },
    Quartic {},
    /// `e^{−V}/Z` on the box `[lower, upper]`, with `Hess V ≥ curvature`.
    Custom {
        potential: String,
        lower: Vec<f64>,
        upper: Vec<f64>,
        #[serde(default)]
        curvature: f64,
    },
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub label: String,
    pub noise_variance: Option<f64>,
    pub scale: Option<f64>,
    #[serde(default = "one")]
    pub repeats: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureOverrides {
    pub nodes_per_axis: Option<usize>,
    pub scheme: Option<Scheme>,
    pub max_panel_width: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    #[serde(default = "yes")]
    pub mutual_information: bool,
    pub monte_carlo_samples: Option<usize>,
    #[serde(default = "yes")]
    pub regularity: bool,
    pub reverse_epi_k: Option<usize>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { mutual_information: true, monte_carlo_samples: None, regularity: true, reverse_epi_k: None }
    }
}

/// File names relative to the output directory.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub json: Option<String>,
    pub csv: Option<String>,
}

/// Command-line overrides applied on top of a scenario file.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub quad_nodes: Option<usize>,
    pub json: bool,
    pub csv: bool,
}

/// Parses a scenario; syntax and schema errors carry a line and column.
pub fn parse_config(text: &str, path: &str) -> Result<ScenarioConfig, CliError> {
    let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((1, 1), |s| line_col(text, s.start));
        CliError::Parse { path: path.into(), line, column, message: e.message().trim().to_string() }
    })?;
    if let PriorSpec::Custom { potential: src, lower, .. } = &cfg.prior {
        if let Err(e) = potential::parse(src, lower.len()) {
            let (line, column) = potential_position(text, e.offset);
            return Err(CliError::Parse { path: path.into(), line, column, message: format!("potential: {}", e.message) });
        }
    }
    Ok(cfg)
}

/// Position of character `offset` of the `potential = "..."` string value.
fn potential_position(text: &str, offset: usize) -> (usize, usize) {
    let mut start = 0;
    for line in text.split_inclusive('\n') {
        let t = line.trim_start();
        if t.starts_with("potential") && t.contains('=') {
            if let Some(q) = line.find(['"', '\'']) {
                let (l, c) = line_col(text, start + q);
                return (l, c + 1 + offset);
            }
        }
        start += line.len();
    }
    (1, 1)
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn positive(v: f64, what: &str) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(format!("{what} must be positive and finite, got {v}")))
    }
}

impl PriorSpec {
    pub fn dim(&self) -> usize {
        match self {
            PriorSpec::Gaussian { mean, .. } => mean.len(),
            PriorSpec::Custom { lower, .. } => lower.len(),
            _ => 1,
        }
    }

    pub fn build(&self, q: &QuadratureSpec<f64>) -> Result<LogConcavePrior<f64>, CliError> {
        let prior = match self {
            PriorSpec::Gaussian { mean, variance } => {
                if mean.is_empty() || mean.iter().any(|m| !m.is_finite()) {
                    return Err(invalid("gaussian prior needs a nonempty finite `mean`"));
                }
                LogConcavePrior::gaussian(mean, positive(*variance, "prior variance")?)
            }
            PriorSpec::Laplace { location, scale } => LogConcavePrior::laplace(*location, positive(*scale, "prior scale")?),
            PriorSpec::Uniform { a, b } => {
                if !(a < b) || !a.is_finite() || !b.is_finite() {
                    return Err(invalid(format!("uniform prior needs finite a < b, got [{a}, {b}]")));
                }
                LogConcavePrior::uniform(*a, *b)
            }
            PriorSpec::Exponential { rate } => LogConcavePrior::exponential(positive(*rate, "prior rate")?),
            PriorSpec::Quartic {} => LogConcavePrior::quartic(),
            PriorSpec::Custom { potential: src, lower, upper, curvature } => {
                if lower.is_empty() || lower.len() != upper.len() {
                    return Err(invalid("custom prior needs `lower` and `upper` of equal nonzero length"));
                }
                if lower.iter().zip(upper).any(|(l, u)| !(l < u) || !l.is_finite() || !u.is_finite()) {
                    return Err(invalid("custom prior needs finite lower < upper on every axis"));
                }
                if !(*curvature >= 0.0) || !curvature.is_finite() {
                    return Err(invalid(format!("curvature must be finite and nonnegative, got {curvature}")));
                }
                let expr = potential::parse(src, lower.len()).map_err(|e| invalid(format!("potential: {e}")))?;
                let support = SupportBox::new(lower.iter().zip(upper).map(|(&l, &u)| Axis::soft(l, u)).collect());
                let (density, _) = normalized_from_potential(support, move |x: &[f64]| expr.eval(x), q)?;
                LogConcavePrior::new(density.with_label(format!("custom({src})")), *curvature, q)
            }
        };
        prior.map_err(CliError::from)
    }
}

impl ScenarioConfig {
    pub fn quadrature(&self, opts: &RunOptions) -> Result<QuadratureSpec<f64>, CliError> {
        let mut q = QuadratureSpec::default();
        if let Some(n) = opts.quad_nodes.or(self.quadrature.nodes_per_axis) {
            if n < MIN_NODES_PER_AXIS {
                return Err(invalid(format!("nodes_per_axis must be at least {MIN_NODES_PER_AXIS}, got {n}")));
            }
            q.nodes_per_axis = Some(n);
        }
        if let Some(s) = self.quadrature.scheme {
            q.scheme = s;
        }
        if let Some(w) = self.quadrature.max_panel_width {
            q.max_panel_width = Some(positive(w, "max_panel_width")?);
        }
        Ok(q)
    }

    /// Checks the scenario and builds the prior, model and references.
    pub fn to_scenario(&self, opts: &RunOptions) -> Result<Scenario, CliError> {
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
            return Err(invalid(format!("name `{}` must be nonempty and use only [A-Za-z0-9-_.]", self.name)));
        }
        if !REGISTRY_LABELS.contains(&self.model.label.as_str()) {
            return Err(invalid(format!(
                "unknown model label `{}`; known labels: {}",
                self.model.label,
                REGISTRY_LABELS.join(", ")
            )));
        }
        if self.model.repeats == 0 {
            return Err(invalid("model repeats must be at least 1"));
        }
        if let Some(v) = self.model.noise_variance {
            positive(v, "noise_variance")?;
        }
        if let Some(v) = self.model.scale {
            positive(v, "model scale")?;
        }
        for r in &self.references {
            match *r {
                ReferenceChoice::BakryEmery { k } => {
                    positive(k, "bakry-emery k")?;
                }
                ReferenceChoice::Tilted { delta } => {
                    positive(delta, "tilted delta")?;
                }
                ReferenceChoice::GaussianStandard => {}
            }
        }
        let seed = opts.seed.or(self.seed);
        let monte_carlo = match self.oracles.monte_carlo_samples {
            Some(samples) => {
                let seed = seed.ok_or_else(|| invalid("a seed is required when the Monte-Carlo oracle is enabled"))?;
                if samples < 2 {
                    return Err(invalid("monte_carlo_samples must be at least 2"));
                }
                Some(MonteCarloSettings { samples, seed })
            }
            None => None,
        };
        let q = self.quadrature(opts)?;
        let dim = self.prior.dim();
        let prior = self.prior.build(&q)?;
        let params = ModelParams {
            noise_variance: self.model.noise_variance,
            scale: self.model.scale,
            dim,
            repeats: self.model.repeats,
        };
        let model = from_registry(&self.model.label, &params)?;
        Ok(Scenario {
            name: self.name.clone(),
            prior,
            model,
            references: self.references.clone(),
            quadrature: q,
            oracles: OracleToggles {
                mutual_information: self.oracles.mutual_information,
                monte_carlo,
                regularity: self.oracles.regularity,
                reverse_epi: self.oracles.reverse_epi_k,
            },
        })
    }
}

/// A finished scenario run.
#[derive(Clone, Debug)]
pub struct ScenarioOutcome {
    pub report: BoundReport,
    pub written: Vec<PathBuf>,
}

impl ScenarioOutcome {
    /// `0` when no asserted inequality failed; `4` when a component hit a
    /// numerical capability limit; `1` on a failed inequality.
    pub fn exit_code(&self) -> i32 {
        if !self.report.passed() {
            crate::EXIT_CHECK_FAILED
        } else if self.report.errors.iter().any(|e| CAPABILITY_KINDS.contains(&e.kind.as_str())) {
            crate::EXIT_CAPABILITY
        } else {
            0
        }
    }
}

const CAPABILITY_KINDS: &[&str] =
    &["capability", "quadrature", "integration-domain", "evaluation", "iteration", "contraction-violation"];

/// Loads, validates and evaluates a scenario file, then writes its outputs.
pub fn run_scenario(path: &Path, opts: &RunOptions) -> Result<ScenarioOutcome, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let cfg = parse_config(&text, &path.display().to_string())?;
    let scenario = cfg.to_scenario(opts)?;
    let report = assemble_report(&scenario);
    let out_dir = opts.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    let mut written = Vec::new();
    let want_csv = opts.csv || cfg.output.csv.is_some();
    let want_json = opts.json || cfg.output.json.is_some() || !want_csv;
    if want_json {
        let p = out_dir.join(cfg.output.json.clone().unwrap_or_else(|| format!("{}.json", cfg.name)));
        write_json(&p, &report)?;
        written.push(p);
    }
    if want_csv {
        let p = out_dir.join(cfg.output.csv.clone().unwrap_or_else(|| format!("{}.csv", cfg.name)));
        write_atomic(&p, to_csv(&BoundReport::csv_header(), [report.csv_row()]).as_bytes())?;
        written.push(p);
    }
    Ok(ScenarioOutcome { report, written })
}
