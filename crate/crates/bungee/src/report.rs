//! JSON report emitted by every CLI command.

use crate::complex::ExtComplex;
use crate::orbit::{OrbitClass, OrbitConfig, Word};
use crate::verify::{AgreementReport, FixedPointRecord, PropertyVerdict};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const SCHEMA_VERSION: u32 = 1;

/// Top-level report. Deterministic for a fixed seed and config except
/// for `timings_ms`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool: String,
    pub version: String,
    pub generators: Vec<String>,
    pub config: OrbitConfig,
    pub seed: u64,
    pub payload: Payload,
    pub timings_ms: BTreeMap<String, u64>,
}

impl Report {
    pub fn new(generators: Vec<String>, config: OrbitConfig, seed: u64, payload: Payload) -> Report {
        Report {
            schema_version: SCHEMA_VERSION,
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            generators,
            config,
            seed,
            payload,
            timings_ms: BTreeMap::new(),
        }
    }

    pub fn timing(&mut self, label: &str, ms: u64) {
        self.timings_ms.insert(label.to_string(), ms);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }

    /// Serialization with timings stripped, for byte-determinism checks.
    pub fn to_deterministic_json(&self) -> String {
        let mut clone = self.clone();
        clone.timings_ms.clear();
        serde_json::to_string_pretty(&clone).expect("report serialization")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    Classification { points: Vec<PointReport> },
    Render { raster: RasterMeta },
    Verify { verdicts: Vec<PropertyVerdict>, fixed_points: Vec<FixedPointRecord>, all_pass: bool },
    Examples { example: String, outputs: Vec<String>, verdicts: Vec<PropertyVerdict>, agreement: Option<AgreementReport>, raster: Option<RasterMeta>, all_pass: bool },
}

/// One classified input point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointReport {
    pub input: ExtComplex,
    pub class: OrbitClass,
    pub depths_explored: usize,
    pub escape_witness: Option<Word>,
    pub bounded_witness: Option<Word>,
    pub escape_events: u64,
    pub max_modulus: f64,
}

/// Raster sidecar metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RasterMeta {
    pub width_px: u32,
    pub height_px: u32,
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
    pub config_hash: String,
    pub ppm_sha256: String,
    pub class_counts: BTreeMap<String, usize>,
    pub output_path: Option<String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_json_excludes_timings() {
        let mut a = Report::new(vec!["z^2".into()], OrbitConfig::default(), 7, Payload::Classification { points: vec![] });
        let mut b = a.clone();
        a.timing("total", 120);
        b.timing("total", 480);
        assert_ne!(a.to_json(), b.to_json());
        assert_eq!(a.to_deterministic_json(), b.to_deterministic_json());
    }

    #[test]
    fn report_roundtrips_through_json() {
        let r = Report::new(vec!["exp(z)".into()], OrbitConfig::default(), 1, Payload::Classification { points: vec![] });
        let parsed: Report = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(parsed.schema_version, SCHEMA_VERSION);
        assert_eq!(parsed.generators, vec!["exp(z)".to_string()]);
    }
}
