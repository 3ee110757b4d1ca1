//! Experiment configuration documents.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize};

use crate::chain::ChainParams;
use crate::error::{Error, Result};
use crate::generic::{MatrixDoc, ModelDocument};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Classify,
    Sweep,
    Stability,
    Traveltime,
    Crosscheck,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::Classify,
        ExperimentKind::Sweep,
        ExperimentKind::Stability,
        ExperimentKind::Traveltime,
        ExperimentKind::Crosscheck,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Classify => "classify",
            ExperimentKind::Sweep => "sweep",
            ExperimentKind::Stability => "stability",
            ExperimentKind::Traveltime => "traveltime",
            ExperimentKind::Crosscheck => "crosscheck",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::config("experiment", format!("unknown experiment {s:?}")))
    }
}

/// A real number written either as a JSON number or as a multiple of π:
/// `"pi/2"`, `"3*pi/8"`, `"3pi/8"`, `"-pi/4"`, `"0.25*pi"`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Real(pub f64, #[serde(skip)] pub Option<f64>);

impl Real {
    pub fn parse(text: &str) -> Option<f64> {
        Self::parse_parts(text).map(|(v, _)| v)
    }

    /// The value and, for π-expressions, its coefficient of π.
    fn parse_parts(text: &str) -> Option<(f64, Option<f64>)> {
        let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        if let Ok(v) = s.parse::<f64>() {
            return Some((v, None));
        }
        let pos = s.find("pi").or_else(|| s.find('π'))?;
        let token_len = if s[pos..].starts_with("pi") { 2 } else { 'π'.len_utf8() };
        let (head, tail) = (&s[..pos], &s[pos + token_len..]);
        let factor = match head.trim_end_matches('*') {
            "" | "+" => 1.0,
            "-" => -1.0,
            h => h.parse::<f64>().ok()?,
        };
        let divisor = match tail {
            "" => 1.0,
            t => t.strip_prefix('/')?.parse::<f64>().ok()?,
        };
        let v = factor * std::f64::consts::PI / divisor;
        v.is_finite().then_some((v, Some(factor / divisor)))
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Real(v, None)),
            Raw::Text(t) => Real::parse_parts(&t)
                .map(|(v, c)| Real(v, c))
                .ok_or_else(|| serde::de::Error::custom(format!("cannot read {t:?} as a number or multiple of pi"))),
        }
    }
}

/// Rounds away the drift of `start + i * step` (0.1 + 0.2 and friends).
fn snap(v: f64) -> f64 {
    format!("{v:.11e}").parse().unwrap_or(v)
}

/// Either an explicit list or an inclusive `start..=stop` grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RangeSpec<T> {
    List(Vec<T>),
    Span { start: T, stop: T, step: T },
}

impl RangeSpec<usize> {
    pub fn values(&self, field: &str) -> Result<Vec<usize>> {
        let v = match self {
            RangeSpec::List(v) => v.clone(),
            RangeSpec::Span { start, stop, step } => {
                if *step == 0 {
                    return Err(Error::config(field, "step must be positive"));
                }
                (*start..=*stop).step_by(*step).collect()
            }
        };
        if v.is_empty() {
            return Err(Error::config(field, "range is empty"));
        }
        Ok(v)
    }
}

impl RangeSpec<Real> {
    pub fn values(&self, field: &str) -> Result<Vec<f64>> {
        let v: Vec<f64> = match self {
            RangeSpec::List(v) => v.iter().map(|r| r.0).collect(),
            RangeSpec::Span { start, stop, step } => {
                // grids of π-multiples are laid out in the coefficient of π
                let (a, b, h, unit) = match (start.1, stop.1, step.1) {
                    (Some(a), Some(b), Some(h)) => (a, b, h, std::f64::consts::PI),
                    _ => (start.0, stop.0, step.0, 1.0),
                };
                if h.is_nan() || h <= 0.0 {
                    return Err(Error::config(field, "step must be positive"));
                }
                if b < a {
                    Vec::new()
                } else {
                    // stop is included when it lies on the grid up to rounding
                    let count = ((b - a) / h + 1e-9).floor() as usize;
                    (0..=count).map(|i| snap(a + i as f64 * h) * unit).collect()
                }
            }
        };
        if v.is_empty() {
            return Err(Error::config(field, "range is empty"));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::config(field, "values must be finite"));
        }
        Ok(v)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    #[serde(rename = "L")]
    pub l: usize,
    pub m: Real,
    #[serde(rename = "J")]
    pub j: Real,
}

impl ChainSpec {
    pub fn params(&self) -> Result<ChainParams> {
        ChainParams::new(self.l, self.m.0, self.j.0)
    }
}

/// A model to classify: a chain, an inline generic model, or `"demo"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSpec {
    Chain(ChainSpec),
    Generic(Box<ModelDocument>),
    Named(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ranges {
    #[serde(rename = "L")]
    pub l: RangeSpec<usize>,
    pub m: RangeSpec<Real>,
    #[serde(rename = "J")]
    pub j: RangeSpec<Real>,
}

/// Every `(L, m, J)` combination, `m` outermost and `L` innermost.
pub struct Grid {
    pub l: Vec<usize>,
    pub m: Vec<f64>,
    pub j: Vec<f64>,
}

impl Grid {
    pub fn points(&self) -> Result<Vec<ChainParams>> {
        let mut out = Vec::with_capacity(self.l.len() * self.m.len() * self.j.len());
        for &m in &self.m {
            for &j in &self.j {
                for &l in &self.l {
                    out.push(ChainParams::new(l, m, j).map_err(|e| Error::config("ranges", e.to_string()))?);
                }
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// `eta` at or below which an instrument counts as ideal
    pub ideal: f64,
    /// `eta` at or below which an instrument counts as normal
    pub eta_threshold: f64,
    /// closed form against dense simulation
    pub crosscheck: f64,
    /// relative error of a fitted slope against the analytic rate
    pub slope: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { ideal: 1e-12, eta_threshold: 0.5, crosscheck: 1e-12, slope: 0.01 }
    }
}

impl Tolerances {
    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("tolerances.ideal", self.ideal),
            ("tolerances.eta_threshold", self.eta_threshold),
            ("tolerances.crosscheck", self.crosscheck),
            ("tolerances.slope", self.slope),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(name, format!("tolerance must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplacementKind {
    Unperturbed,
    MaximallyMixed,
    Flipped,
    Random,
    Matrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    /// 1-based site numbers
    pub sites: Vec<usize>,
    pub state: ReplacementKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<MatrixDoc>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PotentialShape {
    Rectangle,
    Bump,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitalSpec {
    pub potential_support: [f64; 2],
    pub wavepacket_support: [f64; 2],
    #[serde(default = "default_shape")]
    pub shape: PotentialShape,
    /// Explicit samples on `[a, b]`; overrides `shape`, and `J` is then
    /// taken from the table's integral.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<Vec<f64>>,
    #[serde(default = "default_intervals")]
    pub intervals: usize,
}

fn default_shape() -> PotentialShape {
    PotentialShape::Rectangle
}

fn default_intervals() -> usize {
    256
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub models: Vec<ModelSpec>,
    /// evaluation time for generic models
    #[serde(default)]
    pub time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranges: Option<Ranges>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub perturbations: Vec<PerturbationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orbital: Option<OrbitalSpec>,
    /// compare against the dense simulation where the chain is short enough
    #[serde(default = "default_true")]
    pub dense_check: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

fn default_true() -> bool {
    true
}

impl ExperimentConfig {
    /// Parses a config; errors name the offending field and, for syntax
    /// errors, the line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let field = if path.is_empty() || path == "." { "config".to_string() } else { path };
            Error::config(field, e.into_inner().to_string())
        })?;
        config.tolerances.validate()?;
        if !config.time.is_finite() {
            return Err(Error::config("time", "must be finite"));
        }
        Ok(config)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// The experiment to run: `requested` when given, which must then agree
    /// with any `experiment` field in the document.
    pub fn resolve_kind(&self, requested: Option<ExperimentKind>) -> Result<ExperimentKind> {
        match (requested, self.experiment) {
            (Some(r), Some(c)) if r != c => Err(Error::config(
                "experiment",
                format!("config is for {c}, but {r} was requested"),
            )),
            (Some(r), _) => Ok(r),
            (None, Some(c)) => Ok(c),
            (None, None) => Err(Error::config("experiment", "no experiment given")),
        }
    }

    /// `model` followed by `models`.
    pub fn all_models(&self) -> Vec<&ModelSpec> {
        self.model.iter().chain(self.models.iter()).collect()
    }

    /// The `(L, m, J)` grid from `ranges`, or the single chain `model`.
    pub fn grid(&self) -> Result<Grid> {
        if let Some(r) = &self.ranges {
            return Ok(Grid {
                l: r.l.values("ranges.L")?,
                m: r.m.values("ranges.m")?,
                j: r.j.values("ranges.J")?,
            });
        }
        let chains: Vec<&ChainSpec> = self
            .all_models()
            .into_iter()
            .filter_map(|m| match m {
                ModelSpec::Chain(c) => Some(c),
                _ => None,
            })
            .collect();
        match chains.as_slice() {
            [c] => Ok(Grid { l: vec![c.l], m: vec![c.m.0], j: vec![c.j.0] }),
            [] => Err(Error::config("ranges", "need ranges or a chain model")),
            _ => Err(Error::config("model", "give one chain model or use ranges")),
        }
    }
}
