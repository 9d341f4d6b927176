//! Run configuration: a JSON document with strict keys.
//!
//! Parsing happens in two passes. A schema walk over the raw JSON collects
//! every unknown key and type error (with line numbers and nearest-key
//! suggestions); the typed [`RunConfig`] is then checked field by field so
//! that all violations are reported together.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::fitting::{FitModel, DRESSED_PARAMS};
use crate::lineshape::{Damping, DEFAULT_STRAIN_NODES};
use crate::oracle::OracleRates;
use crate::sensitivity::{GeneratorKind, GridSpec, NoiseBudget, SweepAxis, SweepConfig, AXIS_WHITELIST};
use crate::spectrum::SCHEMA_VERSION;
use crate::spin::{DriveConfig, PhysicalEnvironment};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Simulate,
    Fit,
    Sensitivity,
    Sweep,
    OracleCheck,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::Fit => "fit",
            Mode::Sensitivity => "sensitivity",
            Mode::Sweep => "sweep",
            Mode::OracleCheck => "oracle-check",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StrainSection {
    pub sigma_ex: f64,
    pub nodes: usize,
}

impl Default for StrainSection {
    fn default() -> Self {
        Self {
            sigma_ex: 0.0,
            nodes: DEFAULT_STRAIN_NODES,
        }
    }
}

/// Shot noise added to simulated spectra.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    /// Integration time per point (s); counts = photon_rate·dwell_s.
    pub dwell_s: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitSection {
    pub starts: usize,
}

impl Default for FitSection {
    fn default() -> Self {
        Self { starts: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axes: Vec<SweepAxis>,
    #[serde(default = "unit")]
    pub rabi_mw_at_0dbm: f64,
}

fn unit() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSection {
    /// Defaults to radiative rates matching `damping`.
    pub rates: Option<OracleRates>,
    /// Pass threshold on the relative RMS of (1 − signal).
    pub tolerance: f64,
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            rates: None,
            tolerance: 0.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSection {
    /// Fit result JSON recorded at the reference temperature.
    pub fit: PathBuf,
    pub temperature: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub environment: PhysicalEnvironment,
    #[serde(default)]
    pub drive: DriveConfig,
    #[serde(default)]
    pub damping: Damping,
    #[serde(default)]
    pub strain: StrainSection,
    #[serde(default = "default_grid")]
    pub grid: GridSpec,
    #[serde(default)]
    pub generator: GeneratorKind,
    #[serde(default)]
    pub budget: NoiseBudget,
    #[serde(default)]
    pub noise: Option<NoiseSection>,
    #[serde(default)]
    pub laser_power_mw: Option<f64>,
    #[serde(default = "default_fit_model")]
    pub fit_model: FitModel,
    #[serde(default)]
    pub fit: FitSection,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub oracle: OracleSection,
    /// Spectrum CSV for `fit` and `sensitivity`.
    #[serde(default)]
    pub input: Option<PathBuf>,
    #[serde(default)]
    pub calibration: Option<CalibrationSection>,
    /// Free-form notes carried into artifacts.
    #[serde(default)]
    pub metadata: Map<String, Value>,
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

fn default_grid() -> GridSpec {
    SweepConfig::default().grid
}

fn default_fit_model() -> FitModel {
    FitModel::DressedDip(Default::default())
}

impl RunConfig {
    /// Dressed fits take the RF frequency from the drive unless set.
    pub fn effective_fit_model(&self) -> FitModel {
        let mut model = self.fit_model.clone();
        if let FitModel::DressedDip(m) = &mut model {
            if m.omega_rf == 0.0 {
                m.omega_rf = self.drive.omega_rf;
            }
            if self.drive.rabi_mw_y == 0.0 {
                m.dark_branch = false;
            }
        }
        model
    }

    pub fn sweep_config(&self) -> Result<SweepConfig> {
        let section = self
            .sweep
            .as_ref()
            .ok_or_else(|| Error::param("sweep", "sweep mode needs a `sweep` section"))?;
        Ok(SweepConfig {
            axes: section.axes.clone(),
            environment: self.environment,
            drive: self.drive,
            damping: self.damping,
            sigma_ex: self.strain.sigma_ex,
            strain_nodes: self.strain.nodes,
            grid: self.grid,
            generator: self.generator,
            fit_model: self.effective_fit_model(),
            starts: self.fit.starts,
            dwell_s: self.noise.map_or(1.0, |n| n.dwell_s),
            laser_power_mw: self.laser_power_mw,
            rabi_mw_at_0dbm: section.rabi_mw_at_0dbm,
            seed: self.seed,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub key: String,
    /// 1-based line in the config file, when the key appears in it.
    pub line: Option<usize>,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suggestion: Option<String>,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "{} (line {line}): {}", self.key, self.message)?,
            None => write!(f, "{}: {}", self.key, self.message)?,
        }
        if let Some(s) = &self.suggestion {
            write!(f, "; did you mean `{s}`?")?;
        }
        Ok(())
    }
}

impl Diagnostic {
    pub fn into_error(self) -> Error {
        let message = match &self.suggestion {
            Some(s) => format!("{}; did you mean `{s}`?", self.message),
            None => self.message,
        };
        Error::Config {
            key: self.key,
            line: self.line.unwrap_or(0),
            message,
        }
    }
}

enum Shape {
    Num,
    Int,
    Bool,
    Str,
    Choice(&'static [&'static str]),
    Obj(Vec<(&'static str, Shape)>),
    List(Box<Shape>),
    Opt(Box<Shape>),
    /// Object whose keys depend on its `kind` field.
    Tagged(Vec<(&'static str, Vec<(&'static str, Shape)>)>),
    AnyObj,
}

fn opt(s: Shape) -> Shape {
    Shape::Opt(Box::new(s))
}

fn schema() -> Shape {
    use Shape::*;
    let rates = || {
        Obj(vec![
            ("pump_b", Num),
            ("pump_d", Num),
            ("dephase_b", Num),
            ("dephase_d", Num),
        ])
    };
    Obj(vec![
        ("schema_version", Int),
        (
            "mode",
            Choice(&["simulate", "fit", "sensitivity", "sweep", "oracle-check"]),
        ),
        ("seed", Int),
        (
            "environment",
            Obj(vec![
                ("d0", Num),
                ("t0", Num),
                ("dd_dt", Num),
                ("ex", Num),
                ("ey", Num),
                ("b_transverse", Num),
                ("b_parallel", Num),
                ("temperature", Num),
            ]),
        ),
        (
            "drive",
            Obj(vec![
                ("omega_mw", Num),
                ("rabi_mw", Num),
                ("rabi_mw_y", Num),
                ("omega_rf", Num),
                ("rabi_rf", Num),
            ]),
        ),
        ("damping", Obj(vec![("gamma_b", Num), ("gamma_d", Num)])),
        ("strain", Obj(vec![("sigma_ex", Num), ("nodes", Int)])),
        ("grid", Obj(vec![("start", Num), ("stop", Num), ("points", Int)])),
        ("generator", Choice(&["closed_form", "lindblad"])),
        (
            "budget",
            Obj(vec![
                ("photon_rate", Num),
                ("alpha", Num),
                (
                    "laser",
                    opt(Obj(vec![
                        ("rate_per_mw", Num),
                        ("pump_per_mw", Num),
                        ("gamma_sat", Num),
                    ])),
                ),
            ]),
        ),
        ("noise", opt(Obj(vec![("dwell_s", Num)]))),
        ("laser_power_mw", opt(Num)),
        (
            "fit_model",
            Tagged(vec![
                ("multi_lorentzian", vec![("peaks", Int)]),
                (
                    "dressed_dip",
                    vec![
                        ("omega_rf", Num),
                        ("dark_branch", Bool),
                        ("fixed", List(Box::new(Choice(&DRESSED_PARAMS)))),
                        ("strain_nodes", Int),
                        ("alpha", Num),
                        ("sigma_ex", Num),
                    ],
                ),
            ]),
        ),
        ("fit", Obj(vec![("starts", Int)])),
        (
            "sweep",
            opt(Obj(vec![
                (
                    "axes",
                    List(Box::new(Obj(vec![
                        ("name", Choice(&AXIS_WHITELIST)),
                        ("values", List(Box::new(Num))),
                    ]))),
                ),
                ("rabi_mw_at_0dbm", Num),
            ])),
        ),
        ("oracle", Obj(vec![("rates", opt(rates())), ("tolerance", Num)])),
        ("input", opt(Str)),
        ("calibration", opt(Obj(vec![("fit", Str), ("temperature", Num)]))),
        ("metadata", AnyObj),
    ])
}

/// Every known key path, for suggestions across sections.
fn known_paths(shape: &Shape, prefix: &str, out: &mut Vec<String>) {
    let join = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match shape {
        Shape::Obj(fields) => {
            for (k, s) in fields {
                out.push(join(k));
                known_paths(s, &join(k), out);
            }
        }
        Shape::Tagged(variants) => {
            for (_, fields) in variants {
                for (k, s) in fields {
                    out.push(join(k));
                    known_paths(s, &join(k), out);
                }
            }
        }
        Shape::Opt(inner) => known_paths(inner, prefix, out),
        _ => {}
    }
}

fn nearest<'a>(key: &str, candidates: impl IntoIterator<Item = &'a str>) -> Option<String> {
    candidates
        .into_iter()
        .map(|c| (strsim::levenshtein(key, c), c))
        .filter(|(d, c)| *d <= (c.len().max(key.len()) / 3).max(2))
        .min_by_key(|(d, _)| *d)
        .map(|(_, c)| c.to_string())
}

/// Finds the line of a dotted key path in the raw text.
fn locate(text: &str, path: &str) -> Option<usize> {
    let mut pos = 0;
    let mut found = false;
    for seg in path.split('.') {
        let seg = seg.split('[').next().unwrap_or(seg);
        if seg.is_empty() {
            continue;
        }
        let needle = format!("\"{seg}\"");
        let rest = &text[pos..];
        let mut hit = None;
        let mut from = 0;
        while let Some(i) = rest[from..].find(&needle) {
            let at = from + i;
            let after = rest[at + needle.len()..].trim_start();
            if after.starts_with(':') {
                hit = Some(at);
                break;
            }
            from = at + needle.len();
        }
        let at = hit?;
        pos += at + needle.len();
        found = true;
    }
    found.then(|| text[..pos].matches('\n').count() + 1)
}

struct Walker<'a> {
    text: Option<&'a str>,
    all_paths: Vec<String>,
    diags: Vec<Diagnostic>,
}

impl Walker<'_> {
    fn push(&mut self, key: &str, message: String, suggestion: Option<String>) {
        let line = self.text.and_then(|t| locate(t, key));
        self.diags.push(Diagnostic {
            key: key.to_string(),
            line,
            message,
            suggestion,
        });
    }

    fn fields(&mut self, map: &Map<String, Value>, fields: &[(&'static str, Shape)], path: &str) {
        let join = |k: &str| {
            if path.is_empty() {
                k.to_string()
            } else {
                format!("{path}.{k}")
            }
        };
        for (k, v) in map {
            match fields.iter().find(|(name, _)| name == k) {
                Some((_, shape)) => self.walk(v, shape, &join(k)),
                None => {
                    let local = nearest(k, fields.iter().map(|(n, _)| *n));
                    let suggestion = local.map(|s| join(&s)).or_else(|| {
                        let leaf_matches: Vec<&str> = self.all_paths.iter().map(String::as_str).collect();
                        nearest(&join(k), leaf_matches.iter().copied()).or_else(|| {
                            self.all_paths
                                .iter()
                                .filter(|p| {
                                    p.rsplit('.')
                                        .next()
                                        .is_some_and(|leaf| strsim::levenshtein(leaf, k) <= 2)
                                })
                                .min_by_key(|p| strsim::levenshtein(p.rsplit('.').next().unwrap_or(p), k))
                                .cloned()
                        })
                    });
                    self.push(&join(k), "unknown key".into(), suggestion);
                }
            }
        }
    }

    fn walk(&mut self, v: &Value, shape: &Shape, path: &str) {
        let type_err =
            |w: &mut Self, expected: &str| w.push(path, format!("expected {expected}, found {}", kind(v)), None);
        match shape {
            Shape::Num => {
                if !v.is_number() {
                    type_err(self, "a number");
                }
            }
            Shape::Int => {
                if !v.is_u64() {
                    type_err(self, "a non-negative integer");
                }
            }
            Shape::Bool => {
                if !v.is_boolean() {
                    type_err(self, "true or false");
                }
            }
            Shape::Str => {
                if !v.is_string() {
                    type_err(self, "a string");
                }
            }
            Shape::Choice(options) => match v.as_str() {
                Some(s) if options.contains(&s) => {}
                Some(s) => {
                    let suggestion = nearest(s, options.iter().copied());
                    self.push(path, format!("`{s}` is not one of {}", options.join(", ")), suggestion);
                }
                None => type_err(self, "a string"),
            },
            Shape::Obj(fields) => match v.as_object() {
                Some(map) => self.fields(map, fields, path),
                None => type_err(self, "an object"),
            },
            Shape::List(inner) => match v.as_array() {
                Some(items) => {
                    for (i, item) in items.iter().enumerate() {
                        self.walk(item, inner, &format!("{path}[{i}]"));
                    }
                }
                None => type_err(self, "an array"),
            },
            Shape::Opt(inner) => {
                if !v.is_null() {
                    self.walk(v, inner, path);
                }
            }
            Shape::Tagged(variants) => {
                let Some(map) = v.as_object() else {
                    return type_err(self, "an object");
                };
                let kinds: Vec<&str> = variants.iter().map(|(k, _)| *k).collect();
                let Some(tag) = map.get("kind").and_then(Value::as_str) else {
                    return self.push(
                        &format!("{path}.kind"),
                        format!("missing; one of {}", kinds.join(", ")),
                        None,
                    );
                };
                match variants.iter().find(|(k, _)| *k == tag) {
                    Some((_, fields)) => {
                        let mut rest = map.clone();
                        rest.remove("kind");
                        self.fields(&rest, fields, path);
                    }
                    None => {
                        let suggestion = nearest(tag, kinds.iter().copied());
                        self.push(
                            &format!("{path}.kind"),
                            format!("`{tag}` is not one of {}", kinds.join(", ")),
                            suggestion,
                        );
                    }
                }
            }
            Shape::AnyObj => {
                if !v.is_object() {
                    type_err(self, "an object");
                }
            }
        }
    }
}

fn kind(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(n) if n.is_u64() => "an integer",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "an array",
        Value::Object(_) => "an object",
    }
}

fn remove_path(doc: &mut Value, path: &str) {
    let pointer: String = path
        .split('.')
        .flat_map(|seg| seg.split(['[', ']']))
        .filter(|s| !s.is_empty())
        .map(|s| format!("/{s}"))
        .collect();
    let Some((parent, leaf)) = pointer.rsplit_once('/') else {
        return;
    };
    match doc.pointer_mut(parent) {
        Some(Value::Object(map)) => {
            map.remove(leaf);
        }
        Some(Value::Array(items)) => {
            if let Ok(i) = leaf.parse::<usize>() {
                if i < items.len() {
                    items.remove(i);
                }
            }
        }
        _ => {}
    }
}

/// Applies a dotted-path override; the value is parsed as JSON when it can
/// be, otherwise taken as a string.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment.split_once('=').ok_or_else(|| Error::Config {
        key: assignment.to_string(),
        line: 0,
        message: "override must look like key.path=value".into(),
    })?;
    let value: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cursor = doc;
    let segments: Vec<&str> = path.split('.').collect();
    for (i, seg) in segments.iter().enumerate() {
        if seg.is_empty() {
            return Err(Error::Config {
                key: path.to_string(),
                line: 0,
                message: "empty path segment".into(),
            });
        }
        if !cursor.is_object() {
            *cursor = Value::Object(Map::new());
        }
        let map = cursor.as_object_mut().expect("object ensured above");
        if i + 1 == segments.len() {
            map.insert(seg.to_string(), value);
            return Ok(());
        }
        cursor = map.entry(seg.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    Ok(())
}

/// Parsed document plus the raw text used for line lookups.
pub struct ConfigSource {
    pub text: Option<String>,
    pub doc: Value,
    pub path: Option<PathBuf>,
}

impl ConfigSource {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let doc = serde_json::from_str(&text).map_err(|e| Error::Config {
            key: "<document>".into(),
            line: e.line(),
            message: e.to_string(),
        })?;
        Ok(Self {
            text: Some(text),
            doc,
            path: Some(path.to_path_buf()),
        })
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let doc = serde_json::from_str(text).map_err(|e| Error::Config {
            key: "<document>".into(),
            line: e.line(),
            message: e.to_string(),
        })?;
        Ok(Self {
            text: Some(text.to_string()),
            doc,
            path: None,
        })
    }

    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<()> {
        for o in overrides {
            apply_override(&mut self.doc, o)?;
        }
        Ok(())
    }

    /// Every violation in the document; empty means it will run.
    pub fn diagnose(&self) -> (Option<RunConfig>, Vec<Diagnostic>) {
        let shape = schema();
        let mut all_paths = Vec::new();
        known_paths(&shape, "", &mut all_paths);
        let mut walker = Walker {
            text: self.text.as_deref(),
            all_paths,
            diags: Vec::new(),
        };
        walker.walk(&self.doc, &shape, "");
        if self.doc.get("mode").is_none() && self.doc.is_object() {
            walker.push("mode", "missing required key".into(), None);
        }
        // Drop the offending entries so value checks can still run.
        let schema_errors = !walker.diags.is_empty();
        let mut cleaned = self.doc.clone();
        for d in &walker.diags {
            remove_path(&mut cleaned, &d.key);
        }
        let config: RunConfig = match serde_json::from_value(cleaned) {
            Ok(c) => c,
            Err(e) => {
                if !schema_errors {
                    walker.push("<document>", e.to_string(), None);
                }
                walker.diags.sort_by_key(|d| d.line.unwrap_or(usize::MAX));
                return (None, walker.diags);
            }
        };
        check_values(&config, &mut walker);
        walker.diags.dedup_by(|a, b| a.key == b.key && a.message == b.message);
        if schema_errors {
            walker.diags.sort_by_key(|d| d.line.unwrap_or(usize::MAX));
            return (None, walker.diags);
        }
        walker.diags.sort_by_key(|d| d.line.unwrap_or(usize::MAX));
        if walker.diags.is_empty() {
            (Some(config), Vec::new())
        } else {
            (Some(config), walker.diags)
        }
    }

    pub fn into_config(self) -> Result<RunConfig> {
        match self.diagnose() {
            (Some(c), d) if d.is_empty() => Ok(c),
            (_, mut d) => Err(d.remove(0).into_error()),
        }
    }
}

/// Field-level constraints on a well-typed config.
fn check_values(c: &RunConfig, w: &mut Walker<'_>) {
    let mut rule = |ok: bool, key: &str, message: &str| {
        if !ok {
            w.push(key, message.to_string(), None);
        }
    };
    rule(
        c.schema_version == SCHEMA_VERSION,
        "schema_version",
        "unsupported schema version",
    );
    let e = &c.environment;
    rule(e.d0 > 0.0, "environment.d0", "must be > 0");
    rule(e.t0 > 0.0, "environment.t0", "must be > 0 (kelvin)");
    rule(e.temperature > 0.0, "environment.temperature", "must be > 0 (kelvin)");
    rule(e.dd_dt != 0.0, "environment.dd_dt", "must be nonzero");
    rule(
        e.b_transverse == 0.0 || e.b_parallel == 0.0,
        "environment.b_parallel",
        "only one of b_transverse and b_parallel may be nonzero",
    );
    let d = &c.drive;
    rule(d.rabi_mw >= 0.0, "drive.rabi_mw", "must be >= 0");
    rule(d.rabi_mw_y >= 0.0, "drive.rabi_mw_y", "must be >= 0");
    rule(d.omega_rf >= 0.0, "drive.omega_rf", "must be >= 0");
    rule(d.rabi_rf >= 0.0, "drive.rabi_rf", "must be >= 0");
    rule(c.damping.gamma_b > 0.0, "damping.gamma_b", "must be > 0");
    rule(c.damping.gamma_d > 0.0, "damping.gamma_d", "must be > 0");
    rule(c.strain.sigma_ex >= 0.0, "strain.sigma_ex", "must be >= 0");
    rule(c.strain.nodes % 2 == 1, "strain.nodes", "must be odd and >= 1");
    rule(c.grid.stop > c.grid.start, "grid.stop", "must exceed grid.start");
    rule(c.grid.points >= 10, "grid.points", "must be >= 10");
    rule(c.budget.photon_rate > 0.0, "budget.photon_rate", "must be > 0");
    rule(c.budget.alpha >= 0.0, "budget.alpha", "must be >= 0");
    if let Some(l) = &c.budget.laser {
        rule(l.rate_per_mw > 0.0, "budget.laser.rate_per_mw", "must be > 0");
        rule(l.pump_per_mw >= 0.0, "budget.laser.pump_per_mw", "must be >= 0");
        rule(l.gamma_sat > 0.0, "budget.laser.gamma_sat", "must be > 0");
    }
    if let Some(n) = &c.noise {
        rule(n.dwell_s > 0.0, "noise.dwell_s", "must be > 0");
    }
    if let Some(p) = c.laser_power_mw {
        rule(p > 0.0, "laser_power_mw", "must be > 0");
        rule(c.budget.laser.is_some(), "laser_power_mw", "needs budget.laser");
    }
    rule(c.fit.starts >= 1, "fit.starts", "must be >= 1");
    match &c.fit_model {
        FitModel::MultiLorentzian { peaks } => rule(*peaks >= 1, "fit_model.peaks", "must be >= 1"),
        FitModel::DressedDip(m) => {
            rule(m.omega_rf >= 0.0, "fit_model.omega_rf", "must be >= 0");
            rule(
                m.strain_nodes % 2 == 1,
                "fit_model.strain_nodes",
                "must be odd and >= 1",
            );
            rule(m.alpha > 0.0, "fit_model.alpha", "must be > 0");
            rule(m.sigma_ex >= 0.0, "fit_model.sigma_ex", "must be >= 0");
        }
    }
    rule(c.oracle.tolerance > 0.0, "oracle.tolerance", "must be > 0");
    if let Some(r) = &c.oracle.rates {
        rule(
            r.check().is_ok(),
            "oracle.rates",
            "rates must be non-negative with one positive",
        );
    }
    if let Some(s) = &c.sweep {
        rule(
            !s.axes.is_empty() && s.axes.len() <= 2,
            "sweep.axes",
            "needs one or two axes",
        );
        for (i, a) in s.axes.iter().enumerate() {
            rule(
                !a.values.is_empty(),
                &format!("sweep.axes[{i}].values"),
                "must not be empty",
            );
            rule(
                a.name != "laser_power_mw" || c.budget.laser.is_some(),
                &format!("sweep.axes[{i}].name"),
                "laser_power_mw needs budget.laser",
            );
            rule(
                s.axes[..i].iter().all(|b| b.name != a.name),
                &format!("sweep.axes[{i}].name"),
                "axis appears twice",
            );
        }
        rule(s.rabi_mw_at_0dbm > 0.0, "sweep.rabi_mw_at_0dbm", "must be > 0");
    }
    match c.mode {
        Mode::Fit => rule(c.input.is_some(), "input", "fit mode needs an input spectrum"),
        Mode::Sweep => rule(c.sweep.is_some(), "sweep", "sweep mode needs a sweep section"),
        _ => {}
    }
    if let Some(p) = &c.input {
        rule(p.is_file(), "input", "file does not exist");
    }
    if let Some(cal) = &c.calibration {
        rule(cal.fit.is_file(), "calibration.fit", "file does not exist");
        rule(cal.temperature > 0.0, "calibration.temperature", "must be > 0 (kelvin)");
    }
}
