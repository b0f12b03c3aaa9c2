//! Experiment configuration files.
//!
//! ```toml
//! model = { kind = "stable", alpha = 1.5, scale = 1.0, x0 = 0.0 }
//! h = { kind = "power", gamma = 0.5, center = 0.0 }
//! T = 1.0
//! n_ref = 32768
//! eval_ns = [8, 16, 32, 64, 128, 256, 512]
//! M = 100000
//! master_seed = 1
//! output = "runs/stable"
//! mode = "rates"
//! ```

use std::fmt;
use std::ops::Range;
use std::path::{Path, PathBuf};

use funcrate_core::estimate::check_exponent;
use funcrate_core::{Coefficient, GridSpecF64, HolderFunctionF64, ProcessModelF64};
use serde::{Deserialize, Serialize};
use toml::Spanned;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Rates,
    BoundCheck,
    MomentCheck,
    OracleCompare,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Rates => "rates",
            Mode::BoundCheck => "bound-check",
            Mode::MomentCheck => "moment-check",
            Mode::OracleCompare => "oracle-compare",
        })
    }
}

/// A start point: a number in one dimension, an array otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Point {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl Default for Point {
    fn default() -> Self {
        Point::Scalar(0.0)
    }
}

impl Point {
    fn to_vec(&self) -> Vec<f64> {
        match self {
            Point::Scalar(v) => vec![*v],
            Point::Vector(v) => v.clone(),
        }
    }
}

/// Euler coefficient: a constant, or `{ slope, offset }` for `slope·x + offset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoefficientSpec {
    Constant(f64),
    Affine {
        slope: f64,
        #[serde(default)]
        offset: f64,
    },
}

impl CoefficientSpec {
    fn build(&self) -> Coefficient<f64> {
        match *self {
            CoefficientSpec::Constant(c) => Coefficient::Constant(c),
            CoefficientSpec::Affine { slope, offset } => Coefficient::Affine { slope, offset },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    Brownian {
        #[serde(default = "one")]
        sigma: f64,
        #[serde(default)]
        x0: Point,
    },
    Stable {
        alpha: f64,
        #[serde(default = "one")]
        scale: f64,
        #[serde(default)]
        x0: f64,
    },
    Euler {
        drift: CoefficientSpec,
        diffusion: CoefficientSpec,
        #[serde(default)]
        x0: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FunctionSpec {
    Constant {
        c: f64,
        gamma: Option<f64>,
    },
    Linear {
        #[serde(default = "one")]
        slope: f64,
        #[serde(default)]
        offset: f64,
    },
    Power {
        gamma: f64,
        #[serde(default)]
        center: f64,
    },
    Sine {
        #[serde(default = "one")]
        frequency: f64,
        gamma: f64,
    },
    ClippedPower {
        gamma: f64,
        #[serde(default)]
        center: f64,
        cap: f64,
    },
}

fn one() -> f64 {
    1.0
}

/// The file as written, with source spans for error reporting.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: Spanned<ModelSpec>,
    h: Spanned<FunctionSpec>,
    #[serde(rename = "T")]
    horizon: Spanned<f64>,
    n_ref: Spanned<usize>,
    eval_ns: Spanned<Vec<usize>>,
    #[serde(rename = "M")]
    paths: Spanned<u64>,
    master_seed: u64,
    output: PathBuf,
    mode: Mode,
    n_min: Option<usize>,
    slope_tolerance: Option<f64>,
    deltas: Option<Spanned<Vec<f64>>>,
    dump_paths: Option<u64>,
}

/// A validated experiment, ready to run.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub model_spec: ModelSpec,
    pub h_spec: FunctionSpec,
    pub model: ProcessModelF64,
    pub h: HolderFunctionF64,
    pub grid: GridSpecF64,
    pub paths: u64,
    pub master_seed: u64,
    pub output: PathBuf,
    pub mode: Mode,
    /// Smallest `n` used by the rate fit; defaults to the second-smallest evaluated `n`.
    pub n_min: usize,
    pub slope_tolerance: f64,
    pub deltas: Vec<f64>,
    pub dump_paths: Option<u64>,
}

/// Configuration problem, located in the source when possible.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub source_line: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, &self.source_line) {
            (Some(line), Some(text)) => write!(f, "config error at line {line}: {}\n  {line} | {text}", self.message),
            (Some(line), None) => write!(f, "config error at line {line}: {}", self.message),
            _ => write!(f, "config error: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

struct Source<'a>(&'a str);

impl Source<'_> {
    fn error(&self, span: Option<Range<usize>>, message: impl fmt::Display) -> ConfigError {
        let line = span.map(|s| self.0[..s.start.min(self.0.len())].matches('\n').count() + 1);
        let source_line = line.and_then(|l| self.0.lines().nth(l - 1)).map(|s| s.trim_end().to_string());
        ConfigError { line, source_line, message: message.to_string() }
    }
}

impl ModelSpec {
    pub fn build(&self) -> funcrate_core::Result<ProcessModelF64> {
        match self {
            ModelSpec::Brownian { sigma, x0 } => ProcessModelF64::brownian(*sigma, x0.to_vec()),
            ModelSpec::Stable { alpha, scale, x0 } => ProcessModelF64::stable(*alpha, *scale, *x0),
            ModelSpec::Euler { drift, diffusion, x0 } => ProcessModelF64::euler(drift.build(), diffusion.build(), *x0),
        }
    }
}

impl FunctionSpec {
    pub fn build(&self) -> funcrate_core::Result<HolderFunctionF64> {
        match *self {
            FunctionSpec::Constant { c, gamma } => match gamma {
                Some(g) => HolderFunctionF64::constant_with_exponent(c, g),
                None => HolderFunctionF64::constant(c),
            },
            FunctionSpec::Linear { slope, offset } => HolderFunctionF64::linear(slope, offset),
            FunctionSpec::Power { gamma, center } => HolderFunctionF64::power_abs(gamma, center),
            FunctionSpec::Sine { frequency, gamma } => HolderFunctionF64::sine(frequency, gamma),
            FunctionSpec::ClippedPower { gamma, center, cap } => HolderFunctionF64::clipped_power(gamma, center, cap),
        }
    }
}

/// Default time steps for the moment diagnostic: `T · 2^{-k}`, `k = 2..=10`.
pub fn default_deltas(horizon: f64) -> Vec<f64> {
    (2..=10).map(|k| horizon * 2f64.powi(-k)).collect()
}

impl ExperimentConfig {
    /// Parse and validate; relative `output` paths are kept as written.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let src = Source(text);
        let raw: RawConfig = toml::from_str(text).map_err(|e| {
            let message = e.message().to_string();
            src.error(e.span(), message)
        })?;

        let model = raw.model.get_ref().build().map_err(|e| src.error(Some(raw.model.span()), e))?;
        let h = raw.h.get_ref().build().map_err(|e| src.error(Some(raw.h.span()), e))?;
        check_exponent(&h, model.alpha()).map_err(|e| src.error(Some(raw.h.span()), e))?;
        let grid = GridSpecF64::new(*raw.horizon.get_ref(), *raw.n_ref.get_ref(), raw.eval_ns.get_ref().clone())
            .map_err(|e| {
                let span = match e {
                    funcrate_core::Error::NotNested { .. } => raw.eval_ns.span(),
                    _ if !(*raw.horizon.get_ref() > 0.0) => raw.horizon.span(),
                    _ => raw.n_ref.span(),
                };
                src.error(Some(span), e)
            })?;
        let paths = *raw.paths.get_ref();
        if paths < funcrate_core::estimate::MIN_PATHS {
            return Err(src.error(
                Some(raw.paths.span()),
                format!("M must be at least {}, got {paths}", funcrate_core::estimate::MIN_PATHS),
            ));
        }
        let deltas = match &raw.deltas {
            Some(d) => {
                let values = d.get_ref().clone();
                if values.is_empty() || values.iter().any(|&v| !(v > 0.0) || v > grid.horizon()) {
                    return Err(src.error(Some(d.span()), format!("deltas must be non-empty and lie in (0, T = {}]", grid.horizon())));
                }
                values
            }
            None => default_deltas(grid.horizon()),
        };
        let n_min = raw.n_min.unwrap_or_else(|| {
            let ns = grid.eval_ns();
            if ns.len() > 1 { ns[1] } else { ns[0] }
        });
        let slope_tolerance = raw.slope_tolerance.unwrap_or(if model.alpha() == 2.0 { 0.15 } else { 0.2 });
        if !(slope_tolerance > 0.0) {
            return Err(src.error(None, "slope_tolerance must be positive"));
        }

        let needs_certificate = matches!(raw.mode, Mode::BoundCheck | Mode::MomentCheck);
        if needs_certificate && !model.exact_law() {
            return Err(src.error(
                Some(raw.model.span()),
                format!("mode {} needs a certified model; Euler diffusions are never certified", raw.mode),
            ));
        }
        if raw.mode == Mode::OracleCompare {
            let ok_model = matches!(raw.model.get_ref(), ModelSpec::Brownian { .. }) && model.dimension() == 1;
            if !ok_model {
                return Err(src.error(Some(raw.model.span()), "oracle-compare needs a one-dimensional brownian model"));
            }
            if !matches!(raw.h.get_ref(), FunctionSpec::Linear { .. }) {
                return Err(src.error(Some(raw.h.span()), "oracle-compare needs a linear h"));
            }
        }

        Ok(Self {
            model_spec: raw.model.into_inner(),
            h_spec: raw.h.into_inner(),
            model,
            h,
            grid,
            paths,
            master_seed: raw.master_seed,
            output: raw.output,
            mode: raw.mode,
            n_min,
            slope_tolerance,
            deltas,
            dump_paths: raw.dump_paths,
        })
    }

    /// Read a file; a relative `output` is resolved against the file's directory.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
        let mut cfg = Self::parse(&text)?;
        if cfg.output.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.output = dir.join(&cfg.output);
            }
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
model = { kind = "brownian", sigma = 1.0, x0 = 0.0 }
h = { kind = "linear", slope = 1.0, offset = 0.0 }
T = 1.0
n_ref = 4096
eval_ns = [8, 16, 32, 64]
M = 1000
master_seed = 7
output = "out"
mode = "oracle-compare"
"#;

    #[test]
    fn parses_a_full_config() {
        let cfg = ExperimentConfig::parse(BASE).unwrap();
        assert_eq!(cfg.mode, Mode::OracleCompare);
        assert_eq!(cfg.grid.eval_ns(), &[8, 16, 32, 64]);
        assert_eq!(cfg.n_min, 16);
        assert_eq!(cfg.slope_tolerance, 0.15);
        assert_eq!(cfg.deltas.len(), 9);
    }

    #[test]
    fn stable_descriptor() {
        let text = BASE
            .replace(r#"{ kind = "brownian", sigma = 1.0, x0 = 0.0 }"#, r#"{ kind = "stable", alpha = 1.5, scale = 1.0, x0 = 0.0 }"#)
            .replace(r#"{ kind = "linear", slope = 1.0, offset = 0.0 }"#, r#"{ kind = "power", gamma = 0.5, center = 0.0 }"#)
            .replace("oracle-compare", "rates");
        let cfg = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(cfg.model.alpha(), 1.5);
        assert_eq!(cfg.slope_tolerance, 0.2);
    }

    #[test]
    fn gamma_too_large_points_at_h() {
        let text = BASE
            .replace(r#"{ kind = "brownian", sigma = 1.0, x0 = 0.0 }"#, r#"{ kind = "stable", alpha = 1.5 }"#)
            .replace(r#"{ kind = "linear", slope = 1.0, offset = 0.0 }"#, r#"{ kind = "power", gamma = 0.9 }"#)
            .replace("oracle-compare", "rates");
        let err = ExperimentConfig::parse(&text).unwrap_err();
        assert_eq!(err.line, Some(3));
        assert!(err.message.contains("gamma = 0.9"), "{err}");
        assert!(err.to_string().contains("h = { kind = \"power\""));
    }

    #[test]
    fn syntax_and_unknown_keys_have_lines() {
        let err = ExperimentConfig::parse(&BASE.replace("M = 1000", "M = ")).unwrap_err();
        assert_eq!(err.line, Some(7));
        let err = ExperimentConfig::parse(&format!("{BASE}colour = 3\n")).unwrap_err();
        assert_eq!(err.line, Some(11));
        let err = ExperimentConfig::parse(&BASE.replace("sigma = 1.0", "sigma = 1.0, drift = 2")).unwrap_err();
        assert_eq!(err.line, Some(2));
    }

    #[test]
    fn grid_and_mode_validation() {
        let err = ExperimentConfig::parse(&BASE.replace("[8, 16, 32, 64]", "[8, 10]")).unwrap_err();
        assert_eq!(err.line, Some(6));
        let err = ExperimentConfig::parse(&BASE.replace("[8, 16, 32, 64]", "[8, 128]")).unwrap_err();
        assert!(err.message.contains("64"), "{err}");
        let err = ExperimentConfig::parse(&BASE.replace("M = 1000", "M = 10")).unwrap_err();
        assert_eq!(err.line, Some(7));
        let euler = BASE
            .replace(r#"{ kind = "brownian", sigma = 1.0, x0 = 0.0 }"#, r#"{ kind = "euler", drift = { slope = -1.0 }, diffusion = 1.0 }"#)
            .replace("oracle-compare", "bound-check");
        assert!(ExperimentConfig::parse(&euler).is_err());
        assert!(ExperimentConfig::parse(&euler.replace("bound-check", "rates")).is_ok());
        let power = BASE.replace(r#"{ kind = "linear", slope = 1.0, offset = 0.0 }"#, r#"{ kind = "power", gamma = 0.5 }"#);
        assert!(ExperimentConfig::parse(&power).is_err());
    }

    #[test]
    fn vector_start_point() {
        let text = BASE.replace("x0 = 0.0 }", "x0 = [0.0, 1.0] }").replace("oracle-compare", "rates");
        let cfg = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(cfg.model.dimension(), 2);
    }
}
