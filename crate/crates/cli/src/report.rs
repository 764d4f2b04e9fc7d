//! The JSON run report and its canonical serialization.
//!
//! Reports are written compactly in struct field order, with every float as
//! `{:.16e}` (17 significant digits) and non-finite floats as `null`, so a
//! parsed report re-serializes to the same bytes.

use std::io;

use serde::ser::Serialize;
use serde::{Deserialize, Serialize as SerializeDerive};
use serde_json::ser::Formatter;

use idm_core::{Interval, IntervalKind};

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub method: String,
    pub input: InputEcho,
    pub units: String,
    pub intervals: Vec<NamedInterval>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub witnesses: Vec<Witness>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub monte_carlo: Vec<McPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub credible: Option<CredibleSection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<Check>,
    pub diagnostics: Diagnostics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct InputEcho {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<Vec<u64>>>,
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct NamedInterval {
    pub name: String,
    pub kind: String,
    /// `None` for an unbounded end.
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

impl NamedInterval {
    pub fn new(name: &str, iv: &Interval, scale: f64) -> Self {
        Self::from_bounds(name, iv.kind(), iv.lower() * scale, iv.upper() * scale)
    }

    pub fn from_bounds(name: &str, kind: IntervalKind, lower: f64, upper: f64) -> Self {
        Self {
            name: name.to_string(),
            kind: kind.as_str().to_string(),
            lower: lower.is_finite().then_some(lower),
            upper: upper.is_finite().then_some(upper),
        }
    }
}

/// A point of the posterior-mean set where a reported value is attained.
#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct Witness {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertex: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell: Option<[usize; 2]>,
    pub t: Vec<f64>,
    pub u: Vec<f64>,
    pub value: f64,
}

/// Monte-Carlo estimate at one prior weight next to its closed form.
#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct McPoint {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertex: Option<usize>,
    pub t: Vec<f64>,
    pub mean: f64,
    pub std_err: f64,
    pub closed_form: f64,
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct CredibleSection {
    pub stat: String,
    pub alpha: f64,
    pub mode: String,
    pub gaussian_approx: bool,
    pub kappa: f64,
    pub sigma_star: f64,
    pub per_prior: Vec<PriorEntry>,
    pub caveat: String,
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct PriorEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertex: Option<usize>,
    pub t: Vec<f64>,
    pub mean: f64,
    pub std_dev: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    /// Fraction of this prior's samples inside the robust interval.
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct Diagnostics {
    pub n: u64,
    pub d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cols: Option<usize>,
    pub sigma: f64,
    pub n_plus_s: f64,
    pub s_in_recommended_range: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rng: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Compact JSON with fixed-precision floats.
#[derive(Debug, Clone, Copy, Default)]
pub struct CanonicalFormatter;

impl Formatter for CanonicalFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.write_f64(writer, f64::from(value))
    }
}

/// Serializes any value with [`CanonicalFormatter`].
pub fn to_canonical_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, CanonicalFormatter);
    value.serialize(&mut ser).expect("report types always serialize");
    String::from_utf8(out).expect("serde_json writes UTF-8")
}

impl RunReport {
    pub fn to_json(&self) -> String {
        to_canonical_json(self)
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    /// Human-readable summary, one interval per line.
    pub fn summary(&self) -> String {
        let fmt = |x: Option<f64>, inf: &str| x.map_or_else(|| inf.to_string(), |v| format!("{v:.6}"));
        let mut out = format!("{} ({}, {})\n", self.command, self.method, self.units);
        for iv in &self.intervals {
            out.push_str(&format!(
                "  {:<22} [{}, {}]  {}\n",
                iv.name,
                fmt(iv.lower, "-inf"),
                fmt(iv.upper, "+inf"),
                iv.kind
            ));
        }
        if let Some(c) = &self.credible {
            out.push_str(&format!("  alpha = {}, kappa = {:.3}\n", c.alpha, c.kappa));
        }
        for check in &self.checks {
            let status = if check.passed { "yes" } else { "no" };
            out.push_str(&format!("  check {:<32} {status}\n", check.name));
        }
        out
    }
}
