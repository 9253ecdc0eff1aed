//! Experiment configuration: a JSON document with every physical quantity
//! in units of `J_2` (or `Omega` for PXP).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hamiltonians::{default_omega, AahParams, Model, PxpParams, XxParams, XxxParams};
use crate::spin_ops::ChainLayout;

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelConfig {
    Aah(AahConfig),
    Xxx(XxxConfig),
    Xx(XxConfig),
    Pxp(PxpConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AahConfig {
    #[serde(default = "one")]
    pub j2: f64,
    pub jzz: f64,
    pub jz: f64,
    #[serde(default = "default_omega")]
    pub omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XxxConfig {
    #[serde(default = "one")]
    pub j2: f64,
    pub jzz: f64,
    pub jz: f64,
    #[serde(default = "default_omega")]
    pub omega: f64,
    pub jxxx: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XxConfig {
    pub jxx: f64,
    pub jyy: f64,
    pub jzz: f64,
    pub jz: f64,
    #[serde(default = "default_omega")]
    pub omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PxpConfig {
    #[serde(default = "one")]
    pub rabi: f64,
}

impl ModelConfig {
    pub fn to_model(&self) -> Model {
        match *self {
            ModelConfig::Aah(c) => Model::Aah(AahParams { j2: c.j2, jzz: c.jzz, jz: c.jz, omega: c.omega }),
            ModelConfig::Xxx(c) => Model::Xxx(XxxParams {
                aah: AahParams { j2: c.j2, jzz: c.jzz, jz: c.jz, omega: c.omega },
                jxxx: c.jxxx,
            }),
            ModelConfig::Xx(c) => {
                Model::Xx(XxParams { jxx: c.jxx, jyy: c.jyy, jzz: c.jzz, jz: c.jz, omega: c.omega })
            }
            ModelConfig::Pxp(c) => Model::Pxp(PxpParams { rabi: c.rabi }),
        }
    }
}

/// Sizes are read as signed integers so that a negative value produces a
/// validation error naming the field rather than a type error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutConfig {
    pub n_s: i64,
    pub n_b: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Analyses {
    pub spectrum: bool,
    pub histogram: bool,
    /// Ground/top/median overlaps, or scar overlaps for the PXP model.
    pub overlaps: bool,
    pub ep: bool,
    pub qmi: bool,
    /// Phase scan over `J_z` (the sweep section) recording `S` and `B + 1`.
    pub imbalance: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: String,
    pub start: f64,
    pub end: f64,
    pub points: i64,
}

impl SweepConfig {
    pub fn values(&self) -> Vec<f64> {
        crate::ep_analysis::linspace(self.start, self.end, self.points.max(0) as usize)
    }
}

/// A named copy of the base model with some parameters replaced, run
/// through the same trajectory analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantConfig {
    pub label: String,
    #[serde(default)]
    pub set: std::collections::BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Realness tolerance along sweeps, relative to the spectral radius.
    pub tol_im_rel: f64,
    pub ep_resolution: f64,
    pub ep_max_iter: usize,
    /// Bracket width reached before the local exponent fit.
    pub fit_resolution: f64,
    /// Number of located EPs (in sweep order) that get an exponent fit.
    pub fit_count: usize,
    pub histogram_bins: usize,
    pub cluster_window: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol_im_rel: 1e-6,
            ep_resolution: 1e-4,
            ep_max_iter: 200,
            fit_resolution: 1e-12,
            fit_count: 3,
            histogram_bins: crate::spectra::DEFAULT_HISTOGRAM_BINS,
            cluster_window: crate::spectra::DEFAULT_CLUSTER_WINDOW,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub layout: LayoutConfig,
    pub t: f64,
    #[serde(default = "default_n_k")]
    pub n_k: i64,
    #[serde(default)]
    pub analyses: Analyses,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub variants: Vec<VariantConfig>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_n_k() -> i64 {
    20
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Line (1-based) of the first occurrence of `"key"` in `text`, for
/// anchoring validation messages.
fn line_of_key(text: &str, key: &str) -> Option<usize> {
    let needle = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&needle)).map(|i| i + 1)
}

fn field_error(text: Option<&str>, path: &str, msg: &str) -> Error {
    let key = path.rsplit('.').next().unwrap_or(path);
    match text.and_then(|t| line_of_key(t, key)) {
        Some(line) => Error::Config(format!("line {line}: {path}: {msg}")),
        None => Error::Config(format!("{path}: {msg}")),
    }
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            Error::Config(format!("line {}, column {}: {path}: {inner}", inner.line(), inner.column()))
        })?;
        cfg.validate_with_source(Some(text))?;
        Ok(cfg)
    }

    pub fn from_value(value: Value) -> Result<Self> {
        let text = serde_json::to_string_pretty(&value)?;
        Self::from_json_str(&text)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_with_source(None)
    }

    fn validate_with_source(&self, text: Option<&str>) -> Result<()> {
        let err = |path: &str, msg: &str| field_error(text, path, msg);
        if self.layout.n_s < 1 {
            return Err(err("layout.n_s", &format!("must be at least 1, got {}", self.layout.n_s)));
        }
        if self.layout.n_b < 1 {
            return Err(err("layout.n_b", &format!("must be at least 1, got {}", self.layout.n_b)));
        }
        if self.layout.n_s + self.layout.n_b > 20 {
            return Err(err("layout", "n_s + n_b above 20 is beyond dense storage"));
        }
        if !(self.t.is_finite()) {
            return Err(err("t", "must be finite"));
        }
        if self.n_k < 0 {
            return Err(err("n_k", &format!("must be non-negative, got {}", self.n_k)));
        }
        let model = self.model.to_model();
        if let Some(s) = &self.sweep {
            if s.points < 3 {
                return Err(err("sweep.points", &format!("need at least 3 points, got {}", s.points)));
            }
            if !(s.start.is_finite() && s.end.is_finite()) || s.start == s.end {
                return Err(err("sweep.start", "start and end must be finite and distinct"));
            }
            if model.param(&s.parameter).is_err() {
                return Err(err(
                    "sweep.parameter",
                    &format!("'{}' is not a parameter of model '{}'", s.parameter, model.name()),
                ));
            }
        }
        if (self.analyses.ep || self.analyses.imbalance) && self.sweep.is_none() {
            return Err(err("sweep", "required by the ep and imbalance analyses"));
        }
        if self.analyses.imbalance {
            if let Some(s) = &self.sweep {
                if s.parameter != "jz" {
                    return Err(err("sweep.parameter", "the imbalance phase scan sweeps 'jz'"));
                }
            }
        }
        if matches!(self.model, ModelConfig::Pxp(_)) && (self.analyses.qmi || self.analyses.imbalance) {
            return Err(err("analyses", "qmi and imbalance need a full-basis model"));
        }
        for v in &self.variants {
            for name in v.set.keys() {
                if model.param(name).is_err() {
                    return Err(err("variants.set", &format!("'{name}' is not a parameter of '{}'", model.name())));
                }
            }
        }
        let tol = &self.tolerances;
        if tol.histogram_bins < 10 {
            return Err(err("tolerances.histogram_bins", "must be at least 10"));
        }
        if !(tol.cluster_window > 0.0 && tol.cluster_window < 0.5) {
            return Err(err("tolerances.cluster_window", "must lie in (0, 0.5)"));
        }
        for (name, v) in
            [("tol_im_rel", tol.tol_im_rel), ("ep_resolution", tol.ep_resolution), ("fit_resolution", tol.fit_resolution)]
        {
            if !(v > 0.0 && v.is_finite()) {
                return Err(err(&format!("tolerances.{name}"), "must be positive"));
            }
        }
        Ok(())
    }

    pub fn layout(&self) -> Result<ChainLayout> {
        ChainLayout::new(self.layout.n_s as usize, self.layout.n_b as usize)
    }

    pub fn model(&self) -> Model {
        self.model.to_model()
    }

    pub fn variant_model(&self, v: &VariantConfig) -> Result<Model> {
        v.set.iter().try_fold(self.model(), |m, (k, &x)| m.with_param(k, x))
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// SHA-256 of the canonical (pretty) JSON serialisation.
    pub fn sha256(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.to_json_pretty()?.as_bytes())))
    }
}

/// Sets `path` (dotted, e.g. `model.jxxx`) in a JSON document. The value is
/// parsed as JSON when possible and kept as a string otherwise.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override '{assignment}' is not key=value")))?;
    let value: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Error::Config(format!("override path '{path}' has an empty component")));
    }
    let mut cur = doc;
    for k in &keys[..keys.len() - 1] {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("override path '{path}' crosses a non-object")))?;
        cur = obj.entry(k.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    let obj = cur
        .as_object_mut()
        .ok_or_else(|| Error::Config(format!("override path '{path}' crosses a non-object")))?;
    obj.insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}
