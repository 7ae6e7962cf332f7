//! Versioned JSON documents: constellations and evaluation reports.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use phasecon_core::capacity::{CapacityResult, Method, Objective};
use phasecon_core::model::Constellation;
use phasecon_core::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::value::RawValue;

use crate::error::{CliError, CliResult};

pub const FORMAT_VERSION: &str = "phasecon-v1";

mod objective_tag {
    use super::*;

    pub fn serialize<S: Serializer>(value: &Option<Objective>, s: S) -> Result<S::Ok, S::Error> {
        value.map(Objective::as_str).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Objective>, D::Error> {
        let raw: Option<String> = Option::deserialize(d)?;
        raw.map(|s| s.parse().map_err(serde::de::Error::custom)).transpose()
    }
}

/// Provenance stored next to the points.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    #[serde(with = "objective_tag", default)]
    pub objective: Option<Objective>,
    #[serde(default)]
    pub snr_db: Option<f64>,
    #[serde(default)]
    pub pnsd_deg: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Any further inputs (annealing schedule, quadrature degree, ...).
    #[serde(flatten)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

#[derive(Serialize)]
struct DocOut<'a> {
    version: &'a str,
    m: u32,
    points: Vec<[Box<RawValue>; 2]>,
    labels: &'a [u32],
    meta: &'a Meta,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DocIn {
    version: String,
    m: u32,
    points: Vec<[f64; 2]>,
    labels: Vec<u32>,
    #[serde(default)]
    meta: Meta,
}

/// 17 significant digits, enough to round-trip any `f64`.
fn number(x: f64) -> Box<RawValue> {
    // `{:e}` of a finite float is a valid JSON number.
    RawValue::from_string(format!("{x:.16e}")).expect("finite float")
}

pub fn constellation_to_json(c: &Constellation, meta: &Meta) -> String {
    let doc = DocOut {
        version: FORMAT_VERSION,
        m: c.bits_per_symbol(),
        points: c.points().iter().map(|p| [number(p.re), number(p.im)]).collect(),
        labels: c.labels(),
        meta,
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
    s.push('\n');
    s
}

pub fn constellation_from_json(text: &str) -> Result<(Constellation, Meta), String> {
    let doc: DocIn = serde_json::from_str(text).map_err(|e| e.to_string())?;
    if doc.version != FORMAT_VERSION {
        return Err(format!("unsupported version {:?}, expected {FORMAT_VERSION:?}", doc.version));
    }
    let points: Vec<Complex64> = doc.points.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
    let c = Constellation::new(points, doc.labels).map_err(|e| e.to_string())?;
    if c.bits_per_symbol() != doc.m {
        return Err(format!("m = {} but {} points were given", doc.m, c.len()));
    }
    Ok((c, doc.meta))
}

pub fn read_constellation(path: &Path) -> CliResult<(Constellation, Meta)> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    constellation_from_json(&text).map_err(|e| CliError::format_in(path, e))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_constellation(path: &Path, c: &Constellation, meta: &Meta) -> CliResult<()> {
    write_text(path, &constellation_to_json(c, meta))
}

/// Machine-readable form of a [`CapacityResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub bits: f64,
    pub raw_bits: f64,
    pub out_of_range: bool,
    pub objective: String,
    pub method: String,
    pub stderr: f64,
    pub snr_db: f64,
    pub pnsd_deg: f64,
    pub k_n: f64,
    /// `null` without phase noise.
    pub k_phi: Option<f64>,
    pub fingerprint: String,
    /// Quadrature degree or Monte Carlo sample count.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub quad_degree: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub phase_rule: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
}

impl EvaluationReport {
    pub fn new(r: &CapacityResult) -> Self {
        let k_phi = r.params.k_phi();
        Self {
            bits: r.bits,
            raw_bits: r.raw_bits,
            out_of_range: r.out_of_range,
            objective: r.objective.as_str().to_owned(),
            method: match r.method {
                Method::Quadrature => "quadrature",
                Method::MonteCarlo => "monte_carlo",
            }
            .to_owned(),
            stderr: r.stderr,
            snr_db: r.params.snr_db(),
            pnsd_deg: r.params.pnsd_deg(),
            k_n: r.params.k_n(),
            k_phi: k_phi.is_finite().then_some(k_phi),
            fingerprint: r.fingerprint.clone(),
            quad_degree: None,
            phase_rule: None,
            samples: None,
            seed: None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable");
        s.push('\n');
        s
    }
}
