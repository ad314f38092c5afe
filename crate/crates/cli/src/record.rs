//! Result records and their content-addressed keys.

use crate::config::RunConfig;
use jjline::analysis::{BandStructure, DualityMap, MobilityFit, SpectralFunction};
use jjline::circuit::{BathModes, ChargeGaugeBath};
use jjline::verify::CheckOutcome;
use jjline::{Boundary, CircuitSpec, Cutoffs};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModesTable {
    pub spec: CircuitSpec,
    pub bath: BathModes,
    /// Only defined for the open-ended line.
    pub charge_gauge: Option<ChargeGaugeBath>,
    pub spacing: f64,
    pub sum_rule_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub bands: BandStructure,
    pub fit: MobilityFit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    /// Impedance of the charge circuit; the flux circuit sits at the inverse.
    pub z_ratio: f64,
    pub n_modes: usize,
    pub charge_fits: Vec<(f64, MobilityFit)>,
    pub flux_fits: Vec<(f64, MobilityFit)>,
    pub map: DualityMap,
    /// Direct fit of the charge circuit at the interpolated `E_J*`.
    pub self_dual_fit: Option<MobilityFit>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatmapCell {
    pub z_ratio: f64,
    pub e_j: f64,
    pub fit: MobilityFit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatmapReport {
    pub boundary: Boundary,
    pub n_modes: usize,
    /// Row-major in the configured `z_ratio` order, then `e_j`.
    pub cells: Vec<HeatmapCell>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "kebab-case")]
pub enum Payload {
    Modes(ModesTable),
    Bands(BandStructure),
    Fit(FitReport),
    Duality(DualityReport),
    Spectroscopy(Vec<SpectralFunction>),
    Heatmap(HeatmapReport),
    Verify(Vec<CheckOutcome>),
}

/// Change of the lowest levels at zero bias when the cutoffs are enlarged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub label: String,
    pub base: Cutoffs,
    pub enlarged: Cutoffs,
    pub max_abs_change: f64,
    pub max_rel_change: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub cache_hit: bool,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub audit: Option<Vec<AuditEntry>>,
    /// Wall-clock seconds per named step.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub timings: Vec<(String, f64)>,
}

impl Provenance {
    pub fn now(warnings: Vec<String>) -> Self {
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Provenance { version: env!("CARGO_PKG_VERSION").to_string(), timestamp, warnings, ..Default::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub schema_version: u32,
    pub key: String,
    pub command: String,
    pub config: RunConfig,
    pub payload: Payload,
    pub provenance: Provenance,
}

/// Hex SHA-256 over newline-joined parts.
pub fn content_key(parts: &[&str]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

/// Key of a command's payload under `config`.
pub fn record_key(command: &str, config: &RunConfig) -> String {
    content_key(&[&SCHEMA_VERSION.to_string(), command, &config.payload_subset()])
}
