//! TOML run configuration for the `density` command.
//!
//! Complex numbers are written as strings such as `"1+1i"`, `"-0.5i"` or
//! `"2"` (bare TOML numbers are accepted too). Diagonals are run-length
//! lists of `[value, multiplicity]` pairs. Value checks run while the file is
//! deserialized, so errors carry the line and column of the offending key.

use std::fmt;
use std::path::PathBuf;

use num_complex::Complex64;
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::{RankOneNonNormalEnsemble, ScanGeometry, StructuredEnsemble};
use crate::montecarlo::{Ensemble, Model};

/// Parses `a`, `bi`, `a+bi` or `a-bi`; `j` is accepted for `i`.
pub fn parse_complex(text: &str) -> Option<Complex64> {
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return None;
    }
    let Some(body) = t.strip_suffix('i').or_else(|| t.strip_suffix('j')) else {
        return t.parse::<f64>().ok().filter(|re| re.is_finite()).map(|re| Complex64::new(re, 0.0));
    };
    // Split before the last sign that is not an exponent sign.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        s => s.parse::<f64>().ok()?,
    };
    let re = re.parse::<f64>().ok()?;
    let z = Complex64::new(re, im);
    (z.re.is_finite() && z.im.is_finite()).then_some(z)
}

/// Inverse of [`parse_complex`]; exact, since `f64` display round-trips.
pub fn format_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else if z.re == 0.0 {
        format!("{}i", z.im)
    } else {
        let sign = if z.im.is_sign_negative() { '-' } else { '+' };
        format!("{}{}{}i", z.re, sign, z.im.abs())
    }
}

/// A complex number in config form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CNum(pub Complex64);

impl Serialize for CNum {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_complex(self.0))
    }
}

impl<'de> Deserialize<'de> for CNum {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl de::Visitor<'_> for V {
            type Value = CNum;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a complex number such as \"1+2i\" or a number")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<CNum, E> {
                parse_complex(v).map(CNum).ok_or_else(|| E::custom(format!("cannot read {v:?} as a complex number (expected a+bi)")))
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<CNum, E> {
                Ok(CNum(Complex64::new(v, 0.0)))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<CNum, E> {
                Ok(CNum(Complex64::new(v as f64, 0.0)))
            }
        }
        d.deserialize_any(V)
    }
}

/// Strictly positive finite real.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Positive(pub f64);

impl<'de> Deserialize<'de> for Positive {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        if v > 0.0 && v.is_finite() {
            Ok(Positive(v))
        } else {
            Err(de::Error::custom(format!("must be a positive number, got {v}")))
        }
    }
}

/// Multiplicity of a run, at least 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Mult(pub usize);

impl<'de> Deserialize<'de> for Mult {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = i64::deserialize(d)?;
        if v >= 1 {
            Ok(Mult(v as usize))
        } else {
            Err(de::Error::custom(format!("multiplicity must be at least 1, got {v}")))
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Analytic,
    Montecarlo,
    Compare,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Analytic => "analytic",
            Mode::Montecarlo => "montecarlo",
            Mode::Compare => "compare",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Normal,
    Nonnormal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub name: String,
    pub kind: ModelKind,
    /// Inverse variance `n` of the noise.
    pub n_inv_var: Positive,
    #[serde(default)]
    pub invert: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<Vec<(CNum, Mult)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<Vec<(Positive, Mult)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Vec<(Positive, Mult)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<CNum>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ket: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bra: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanKindConfig {
    Line,
    Grid,
}

fn default_points() -> usize {
    60
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub name: String,
    pub kind: ScanKindConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<CNum>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<CNum>,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<CNum>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<CNum>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nx: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ny: Option<usize>,
    /// Overrides the Monte Carlo strip half-width for this scan.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strip_half_width: Option<Positive>,
}

fn default_trials() -> u64 {
    100_000
}
fn default_seed() -> u64 {
    1
}
fn default_strip() -> Positive {
    Positive(ScanGeometry::DEFAULT_STRIP)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_strip")]
    pub strip_half_width: Positive,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig { trials: default_trials(), seed: default_seed(), strip_half_width: default_strip() }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
}

fn default_out() -> PathBuf {
    PathBuf::from("density-out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Directory receiving the profiles and the report.
    #[serde(default = "default_out")]
    pub path: PathBuf,
    #[serde(default)]
    pub format: OutputFormat,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { path: default_out(), format: OutputFormat::Csv }
    }
}

/// A complete run: one or more models, one or more scans.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub mode: Mode,
    #[serde(rename = "model")]
    pub models: Vec<ModelConfig>,
    #[serde(rename = "scan")]
    pub scans: Vec<ScanConfig>,
    #[serde(default)]
    pub mc: McConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn field_err<T>(path: String, msg: impl fmt::Display) -> Result<T> {
    Err(Error::Config(format!("{path}: {msg}")))
}

fn require<T: Copy>(v: Option<T>, path: String) -> Result<T> {
    match v {
        Some(v) => Ok(v),
        None => field_err(path, "missing field"),
    }
}

fn check_name(name: &str, path: String) -> Result<()> {
    let ok = !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
    if ok {
        Ok(())
    } else {
        field_err(path, format!("{name:?} must be non-empty and use only letters, digits, '-' and '_'"))
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// The configuration as TOML, after any overrides.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Cross-field checks that cannot run during deserialization.
    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            return field_err("model".into(), "at least one [[model]] is required");
        }
        if self.scans.is_empty() {
            return field_err("scan".into(), "at least one [[scan]] is required");
        }
        if self.mode != Mode::Analytic && self.mc.trials < 100 {
            return field_err("mc.trials".into(), format!("must be at least 100, got {}", self.mc.trials));
        }
        for (k, m) in self.models.iter().enumerate() {
            check_name(&m.name, format!("model[{k}].name"))?;
            if self.models[..k].iter().any(|o| o.name == m.name) {
                return field_err(format!("model[{k}].name"), format!("duplicate name {:?}", m.name));
            }
            m.model(k)?;
        }
        for (k, s) in self.scans.iter().enumerate() {
            check_name(&s.name, format!("scan[{k}].name"))?;
            if self.scans[..k].iter().any(|o| o.name == s.name) {
                return field_err(format!("scan[{k}].name"), format!("duplicate name {:?}", s.name));
            }
            s.geometry(k, self.mc.strip_half_width.0)?;
        }
        Ok(())
    }
}

impl ModelConfig {
    /// Builds the model; `index` only labels error messages.
    pub fn model(&self, index: usize) -> Result<Model> {
        let p = |f: &str| format!("model[{index}].{f}");
        let n = self.n_inv_var.0;
        let wrap = |e: Error| match e {
            Error::InvalidInput(m) => Error::Config(format!("model[{index}]: {m}")),
            other => other,
        };
        let ensemble = match self.kind {
            ModelKind::Normal => {
                for f in ["alpha", "ket", "bra", "dim"] {
                    let set = match f {
                        "alpha" => self.alpha.is_some(),
                        "ket" => self.ket.is_some(),
                        "bra" => self.bra.is_some(),
                        _ => self.dim.is_some(),
                    };
                    if set {
                        return field_err(p(f), "only valid for kind = \"nonnormal\"");
                    }
                }
                let Some(s) = &self.s else {
                    return field_err(p("s"), "missing field (run-length list of [value, multiplicity])");
                };
                let s: Vec<(Complex64, usize)> = s.iter().map(|(z, m)| (z.0, m.0)).collect();
                let total: usize = s.iter().map(|r| r.1).sum();
                let runs = |v: &Option<Vec<(Positive, Mult)>>, f: &str| -> Result<Vec<(f64, usize)>> {
                    match v {
                        None => Ok(vec![(1.0, total)]),
                        Some(v) => {
                            let r: Vec<(f64, usize)> = v.iter().map(|(x, m)| (x.0, m.0)).collect();
                            let len: usize = r.iter().map(|x| x.1).sum();
                            if len != total {
                                return field_err(p(f), format!("multiplicities sum to {len}, but s has N = {total}"));
                            }
                            Ok(r)
                        }
                    }
                };
                let (l, r) = (runs(&self.l, "l")?, runs(&self.r, "r")?);
                Ensemble::Normal(StructuredEnsemble::from_runs(&s, &l, &r, Some(n)).map_err(wrap)?)
            }
            ModelKind::Nonnormal => {
                for (f, set) in [("s", self.s.is_some()), ("l", self.l.is_some()), ("r", self.r.is_some())] {
                    if set {
                        return field_err(p(f), "only valid for kind = \"normal\"");
                    }
                }
                let alpha = require(self.alpha, p("alpha"))?.0;
                let dim = require(self.dim, p("dim"))?;
                let ket = require(self.ket, p("ket"))?;
                let bra = require(self.bra, p("bra"))?;
                Ensemble::NonNormal(RankOneNonNormalEnsemble::new(alpha, ket, bra, dim, Some(n)).map_err(wrap)?)
            }
        };
        if self.invert && matches!(ensemble, Ensemble::NonNormal(_)) {
            return field_err(p("invert"), "the inverse is only available for normal sources");
        }
        Model::new(ensemble, self.invert).map_err(|e| match e {
            Error::InvalidInput(m) => Error::Config(format!("{}: {m}", p("invert"))),
            other => other,
        })
    }
}

impl ScanConfig {
    pub fn geometry(&self, index: usize, default_strip: f64) -> Result<ScanGeometry> {
        let p = |f: &str| format!("scan[{index}].{f}");
        let wrap = |e: Error| match e {
            Error::InvalidInput(m) => Error::Config(format!("scan[{index}]: {m}")),
            other => other,
        };
        let g = match self.kind {
            ScanKindConfig::Line => {
                for (f, set) in [("lower", self.lower.is_some()), ("upper", self.upper.is_some()), ("nx", self.nx.is_some()), ("ny", self.ny.is_some())] {
                    if set {
                        return field_err(p(f), "only valid for kind = \"grid\"");
                    }
                }
                let start = require(self.start, p("start"))?.0;
                let end = require(self.end, p("end"))?.0;
                ScanGeometry::line(start, end, self.points).map_err(wrap)?
            }
            ScanKindConfig::Grid => {
                for (f, set) in [("start", self.start.is_some()), ("end", self.end.is_some())] {
                    if set {
                        return field_err(p(f), "only valid for kind = \"line\"");
                    }
                }
                let lower = require(self.lower, p("lower"))?.0;
                let upper = require(self.upper, p("upper"))?.0;
                let nx = require(self.nx, p("nx"))?;
                let ny = require(self.ny, p("ny"))?;
                ScanGeometry::grid(lower, upper, nx, ny).map_err(wrap)?
            }
        };
        g.with_strip(self.strip_half_width.map_or(default_strip, |s| s.0)).map_err(wrap)
    }
}
