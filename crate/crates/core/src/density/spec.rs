//! Textual and JSON descriptions of densities.
//!
//! JSON forms:
//!
//! ```text
//! {"family": "gaussian", "params": [0, 1]}
//! {"unnormalized": "exp(-x^4/12)", "support": ["-inf", "inf"], "closed": [false, false]}
//! {"pearson": {"s": [0, 1, 0], "tau": [-1, 2], "support": [0, "inf"]}}
//! {"samples": "draws.txt", "bandwidth": 0.1, "support": [0, "inf"], "closed": [true, false]}
//! ```
//!
//! Pearson coefficients are listed from the highest degree down, matching the
//! command-line grammar `pearson:S2,S1,S0|T1,T0|A,B`. Infinite bounds are
//! written as the strings `"inf"`/`"-inf"` or as `null`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::de::{self, Deserializer, Visitor};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use super::expr::Expr;
use super::kde::{Bandwidth, Kde};
use super::pearson::PearsonSpec;
use super::{Density, Family};
use crate::error::{Result, SteinError};
use crate::support::Support;

/// An interval endpoint that may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bound(pub f64);

impl Serialize for Bound {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0 == f64::INFINITY {
            s.serialize_str("inf")
        } else if self.0 == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Bound {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = Bound;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number, \"inf\", \"-inf\" or null")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Bound, E> {
                Ok(Bound(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Bound, E> {
                Ok(Bound(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Bound, E> {
                Ok(Bound(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Bound, E> {
                parse_bound(v).map_err(|e| E::custom(e.to_string()))
            }
            fn visit_unit<E: de::Error>(self) -> std::result::Result<Bound, E> {
                Ok(Bound(f64::NAN))
            }
        }
        d.deserialize_any(V)
    }
}

fn parse_bound(s: &str) -> Result<Bound> {
    let t = s.trim();
    match t.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" | "+infinity" => Ok(Bound(f64::INFINITY)),
        "-inf" | "-infinity" => Ok(Bound(f64::NEG_INFINITY)),
        _ => t
            .parse::<f64>()
            .map(Bound)
            .map_err(|_| SteinError::Parse(format!("bad interval bound `{t}`"))),
    }
}

/// `null` stands for the infinite end on its side.
fn interval(bounds: [Bound; 2]) -> (f64, f64) {
    let a = if bounds[0].0.is_nan() {
        f64::NEG_INFINITY
    } else {
        bounds[0].0
    };
    let b = if bounds[1].0.is_nan() {
        f64::INFINITY
    } else {
        bounds[1].0
    };
    (a, b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PearsonCoeffs {
    /// `[s2, s1, s0]`
    pub s: [f64; 3],
    /// `[t1, t0]`
    pub tau: [f64; 2],
    pub support: [Bound; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BandwidthSpec {
    Fixed(f64),
    Named(BandwidthName),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthName {
    Silverman,
}

impl From<BandwidthSpec> for Bandwidth {
    fn from(b: BandwidthSpec) -> Self {
        match b {
            BandwidthSpec::Fixed(h) => Bandwidth::Fixed(h),
            BandwidthSpec::Named(BandwidthName::Silverman) => Bandwidth::Silverman,
        }
    }
}

fn default_closed() -> [bool; 2] {
    [false, false]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DensitySpec {
    Builtin {
        family: Family,
        #[serde(default)]
        params: Vec<f64>,
    },
    Unnormalized {
        unnormalized: String,
        support: [Bound; 2],
        #[serde(default = "default_closed")]
        closed: [bool; 2],
    },
    Pearson {
        pearson: PearsonCoeffs,
    },
    Samples {
        samples: PathBuf,
        #[serde(default)]
        bandwidth: Option<BandwidthSpec>,
        #[serde(default)]
        support: Option<[Bound; 2]>,
        #[serde(default = "default_closed")]
        closed: [bool; 2],
    },
}

impl DensitySpec {
    /// Build the density. Relative sample paths resolve against `base_dir`.
    pub fn build_in(&self, base_dir: Option<&Path>) -> Result<Density> {
        match self {
            DensitySpec::Builtin { family, params } => Density::builtin(*family, params),
            DensitySpec::Unnormalized {
                unnormalized,
                support,
                closed,
            } => {
                let (a, b) = interval(*support);
                let support = Support::new(a, b, closed[0], closed[1])?;
                let expr = Arc::new(Expr::parse(unnormalized)?);
                let e = Arc::clone(&expr);
                Density::from_unnormalized(move |x| e.eval(x), support, None, unnormalized)
            }
            DensitySpec::Pearson { pearson } => {
                let (a, b) = interval(pearson.support);
                let [s2, s1, s0] = pearson.s;
                let [t1, t0] = pearson.tau;
                let spec = PearsonSpec::with_inferred_closure(&[s0, s1, s2], &[t0, t1], a, b)?;
                Density::pearson(&spec)
            }
            DensitySpec::Samples {
                samples,
                bandwidth,
                support,
                closed,
            } => {
                let path = match base_dir {
                    Some(dir) if samples.is_relative() => dir.join(samples),
                    _ => samples.clone(),
                };
                let hint = match support {
                    Some(s) => {
                        let (a, b) = interval(*s);
                        Some(Support::new(a, b, closed[0], closed[1])?)
                    }
                    None => None,
                };
                let bw = bandwidth.map(Bandwidth::from).unwrap_or(Bandwidth::Silverman);
                ingest_samples(&path, bw, hint)
            }
        }
    }

    pub fn build(&self) -> Result<Density> {
        self.build_in(None)
    }
}

impl FromStr for DensitySpec {
    type Err = SteinError;

    /// Command-line grammar: `exp:RATE`, `gauss:MU,SIGMA`, `unif`,
    /// `semicircle`, `arcsine`, `quartic[:MU[,SCALE]]`,
    /// `pearson:S2,S1,S0|T1,T0|A,B`, `file:PATH`. A full family name works in
    /// place of the short one.
    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        let (head, rest) = match text.split_once(':') {
            Some((h, r)) => (h.trim(), Some(r.trim())),
            None => (text, None),
        };
        let numbers = |s: &str| -> Result<Vec<f64>> {
            s.split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| SteinError::Parse(format!("bad number `{}` in `{text}`", v.trim())))
                })
                .collect()
        };
        match head.to_ascii_lowercase().as_str() {
            "file" => {
                let path = rest
                    .filter(|p| !p.is_empty())
                    .ok_or_else(|| SteinError::Parse("`file:` needs a path".into()))?;
                Ok(DensitySpec::Samples {
                    samples: PathBuf::from(path),
                    bandwidth: None,
                    support: None,
                    closed: default_closed(),
                })
            }
            "pearson" => {
                let body = rest.ok_or_else(|| SteinError::Parse("`pearson:` needs coefficients".into()))?;
                let parts: Vec<&str> = body.split('|').collect();
                if parts.len() != 3 {
                    return Err(SteinError::Parse(format!(
                        "expected pearson:S2,S1,S0|T1,T0|A,B, got `{text}`"
                    )));
                }
                let s = numbers(parts[0])?;
                let tau = numbers(parts[1])?;
                let ends: Vec<&str> = parts[2].split(',').collect();
                if s.len() != 3 || tau.len() != 2 || ends.len() != 2 {
                    return Err(SteinError::Parse(format!(
                        "expected pearson:S2,S1,S0|T1,T0|A,B, got `{text}`"
                    )));
                }
                Ok(DensitySpec::Pearson {
                    pearson: PearsonCoeffs {
                        s: [s[0], s[1], s[2]],
                        tau: [tau[0], tau[1]],
                        support: [parse_bound(ends[0])?, parse_bound(ends[1])?],
                    },
                })
            }
            _ => {
                let family: Family = head.parse()?;
                let params = match rest {
                    Some(r) if !r.is_empty() => numbers(r)?,
                    _ => Vec::new(),
                };
                Ok(DensitySpec::Builtin { family, params })
            }
        }
    }
}

/// One value per line; blank lines and lines starting with `#` are skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub values: Vec<f64>,
    pub source_path: String,
}

impl SampleSet {
    pub fn parse(text: &str, source_path: &str) -> Result<Self> {
        let mut values = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let v: f64 = t.parse().map_err(|_| SteinError::ParseLine {
                line: i + 1,
                message: format!("{source_path}: not a number: `{t}`"),
            })?;
            if !v.is_finite() {
                return Err(SteinError::ParseLine {
                    line: i + 1,
                    message: format!("{source_path}: non-finite value `{t}`"),
                });
            }
            values.push(v);
        }
        if values.is_empty() {
            return Err(SteinError::TooFewSamples { got: 0, need: 1 });
        }
        Ok(Self {
            values,
            source_path: source_path.to_string(),
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SteinError::Parse(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }
}

/// Kernel density estimate from a sample file. Without a support hint the
/// estimate lives on the whole line.
pub fn ingest_samples(path: &Path, bandwidth: Bandwidth, support_hint: Option<Support>) -> Result<Density> {
    let set = SampleSet::read(path)?;
    density_from_samples(&set, bandwidth, support_hint)
}

pub fn density_from_samples(set: &SampleSet, bandwidth: Bandwidth, support_hint: Option<Support>) -> Result<Density> {
    let support = support_hint.unwrap_or_else(Support::real_line);
    let kde = Kde::new(&set.values, bandwidth, support)?;
    Density::from_kde(kde, &format!("kde({})", set.source_path))
}
