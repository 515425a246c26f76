//! Model definition files (TOML) and sample files.
//!
//! ```toml
//! alphabet = 2
//! incidence = [[0, 1], [1, 1]]      # optional, full shift by default
//! theta = [0.4]                     # optional parameter for simulation
//! box = [[-4.0, 4.0]]               # optional per-coordinate bounds
//!
//! [family]
//! kind = "custom"                   # "bernoulli", "markov" or "custom"
//!
//! [base]                            # optional, zero by default
//! depth = 1
//! values = [0.0, 0.0]
//!
//! [[direction]]
//! depth = 2
//! values = [1.0, 0.0, 0.0]          # one entry per admissible word, lex order
//! ```
//!
//! Markov models may give `transition = [[…]]` instead of `theta`. Sample
//! files hold whitespace-separated 1-based symbols; `#` starts a comment.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{bernoulli_family, markov_family, markov_to_theta, theta_to_markov};
use crate::shift::{LocallyConstantFn, ParameterPoint, PotentialFamily, SubshiftSpec, Word};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Bernoulli,
    Markov,
    #[default]
    Custom,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilySection {
    #[serde(default)]
    kind: FamilyKind,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableSection {
    depth: usize,
    values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    alphabet: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    incidence: Option<Vec<Vec<u8>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    theta: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    transition: Option<Vec<Vec<f64>>>,
    #[serde(default, rename = "box", skip_serializing_if = "Option::is_none")]
    bounds: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    family: Option<FamilySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    base: Option<TableSection>,
    #[serde(default, rename = "direction", skip_serializing_if = "Vec::is_empty")]
    directions: Vec<TableSection>,
}

/// A parsed model definition.
#[derive(Debug, Clone)]
pub struct ModelFile {
    pub kind: FamilyKind,
    pub spec: SubshiftSpec,
    pub family: PotentialFamily,
    pub theta: Option<ParameterPoint>,
    pub bounds: Option<Vec<(f64, f64)>>,
}

fn model_err(msg: impl Into<String>) -> Error {
    Error::ModelFile(msg.into())
}

fn table(spec: &SubshiftSpec, t: &TableSection, what: &str) -> Result<LocallyConstantFn> {
    LocallyConstantFn::from_table(spec, t.depth, &t.values)
        .map_err(|e| model_err(format!("{what}: {e}")))
}

impl ModelFile {
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawModel = toml::from_str(text).map_err(|e| model_err(e.to_string()))?;
        let kind = raw.family.as_ref().map(|f| f.kind).unwrap_or_default();
        let incidence = raw
            .incidence
            .clone()
            .unwrap_or_else(|| vec![vec![1; raw.alphabet]; raw.alphabet]);
        let spec =
            SubshiftSpec::new(raw.alphabet, &incidence).map_err(|e| model_err(e.to_string()))?;
        let family = match kind {
            FamilyKind::Bernoulli | FamilyKind::Markov
                if raw.base.is_some() || !raw.directions.is_empty() =>
            {
                return Err(model_err(
                    "built-in families take no [base] or [[direction]] tables",
                ));
            }
            FamilyKind::Bernoulli => {
                if raw.incidence.is_some() && spec != SubshiftSpec::full_shift(raw.alphabet)? {
                    return Err(model_err("the Bernoulli family lives on the full shift"));
                }
                bernoulli_family(raw.alphabet)?.1
            }
            FamilyKind::Markov => markov_family(&spec)?,
            FamilyKind::Custom => {
                if raw.directions.is_empty() {
                    return Err(model_err("at least one [[direction]] table is required"));
                }
                let base = match &raw.base {
                    Some(t) => table(&spec, t, "base")?,
                    None => LocallyConstantFn::zero(&spec),
                };
                let dirs = raw
                    .directions
                    .iter()
                    .enumerate()
                    .map(|(i, t)| table(&spec, t, &format!("direction {}", i + 1)))
                    .collect::<Result<Vec<_>>>()?;
                PotentialFamily::new(&spec, base, dirs)?
            }
        };
        let d = family.dim();
        let theta = match (&raw.theta, &raw.transition) {
            (Some(_), Some(_)) => return Err(model_err("give either theta or transition")),
            (Some(t), None) => {
                if t.len() != d {
                    return Err(model_err(format!(
                        "theta has {} entries, family has {d}",
                        t.len()
                    )));
                }
                Some(ParameterPoint::new(t.clone())?)
            }
            (None, Some(p)) => {
                if kind != FamilyKind::Markov {
                    return Err(model_err("transition is only valid for the Markov family"));
                }
                Some(markov_to_theta(&spec, p)?)
            }
            (None, None) => None,
        };
        let bounds = match &raw.bounds {
            None => None,
            Some(b) => {
                if b.len() != d {
                    return Err(model_err(format!(
                        "box has {} entries, family has {d}",
                        b.len()
                    )));
                }
                if b.iter()
                    .any(|[lo, hi]| !(lo < hi) || !lo.is_finite() || !hi.is_finite())
                {
                    return Err(model_err("box bounds must be finite with lo < hi"));
                }
                Some(b.iter().map(|[lo, hi]| (*lo, *hi)).collect())
            }
        };
        Ok(ModelFile {
            kind,
            spec,
            family,
            theta,
            bounds,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| model_err(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// The parameter of the file, or an error naming what is missing.
    pub fn require_theta(&self) -> Result<&ParameterPoint> {
        self.theta
            .as_ref()
            .ok_or_else(|| model_err("the model file sets no theta"))
    }

    /// Serialises back to the TOML schema. Built-in families are written by
    /// kind, custom ones with full tables.
    pub fn to_toml(&self) -> Result<String> {
        let a = self.spec.alphabet_size();
        let custom = self.kind == FamilyKind::Custom;
        let tab = |f: &LocallyConstantFn| TableSection {
            depth: f.depth(),
            values: f.table(&self.spec),
        };
        let raw = RawModel {
            alphabet: a,
            incidence: Some(self.spec.incidence_rows()),
            theta: self.theta.as_ref().map(|t| t.to_vec()),
            transition: None,
            bounds: self
                .bounds
                .as_ref()
                .map(|b| b.iter().map(|(lo, hi)| [*lo, *hi]).collect()),
            family: Some(FamilySection { kind: self.kind }),
            base: custom.then(|| tab(self.family.base())),
            directions: if custom {
                self.family.directions().iter().map(tab).collect()
            } else {
                Vec::new()
            },
        };
        toml::to_string(&raw).map_err(|e| Error::Internal(e.to_string()))
    }

    /// Transition matrix of a Markov model at its parameter.
    pub fn transition_matrix(&self) -> Result<Option<Vec<Vec<f64>>>> {
        match (&self.kind, &self.theta) {
            (FamilyKind::Markov, Some(t)) => Ok(Some(theta_to_markov(&self.spec, t)?)),
            _ => Ok(None),
        }
    }
}

/// Parses 1-based symbols and checks admissibility.
pub fn parse_sample(text: &str, spec: &SubshiftSpec) -> Result<Word> {
    let mut symbols = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let content = line.split('#').next().unwrap_or("");
        for tok in content.split_whitespace() {
            let s: usize = tok.parse().map_err(|_| {
                Error::SampleFile(format!("line {}: `{tok}` is not a symbol", line_no + 1))
            })?;
            symbols.push(s);
        }
    }
    if symbols.is_empty() {
        return Err(Error::SampleFile("no symbols found".into()));
    }
    Word::from_one_based(spec, &symbols)
}

pub fn read_sample(path: impl AsRef<Path>, spec: &SubshiftSpec) -> Result<Word> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::SampleFile(format!("{}: {e}", path.display())))?;
    parse_sample(&text, spec)
}

/// 1-based symbols, 64 per line, after optional `#` header lines.
pub fn format_sample(w: &Word, header: &[String]) -> String {
    let mut out = String::new();
    for h in header {
        let _ = writeln!(out, "# {h}");
    }
    for chunk in w.to_one_based().chunks(64) {
        let line: Vec<String> = chunk.iter().map(|s| s.to_string()).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    out
}
