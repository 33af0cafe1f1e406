//! On-disk scenario format: a TOML document with `shell`, `ada` and `sim`
//! sections, ground-station and user lists, and the mechanism selection.
//! Optional fields default to the values the presets use, and the resolved
//! form (every default materialized) is written back into each run
//! directory so results are reproducible from the artifact alone.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub shell: ShellSection,
    #[serde(default)]
    pub ada: AdaSection,
    pub sim: SimSection,
    #[serde(default)]
    pub mechanisms: Option<Vec<String>>,
    #[serde(default)]
    pub gs: Vec<GsEntry>,
    #[serde(default)]
    pub users: Vec<UserEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShellSection {
    pub num_orbits: u32,
    pub sats_per_orbit: u32,
    pub altitude_km: f64,
    pub inclination_deg: f64,
    #[serde(default = "default_phase_offset")]
    pub phase_offset: f64,
    #[serde(default = "default_min_elevation")]
    pub min_elevation_deg: f64,
}

fn default_phase_offset() -> f64 {
    0.5
}

fn default_min_elevation() -> f64 {
    25.0
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaSection {
    /// Detour budget in hops; floor((X + Y) / 2) when omitted.
    pub h: Option<u32>,
    /// Slots of reference visibility feeding pattern discovery; one orbital
    /// period when omitted.
    pub discovery_window_slots: Option<usize>,
    #[serde(default = "default_reference_lat")]
    pub reference_lat: f64,
    #[serde(default)]
    pub reference_lon: f64,
}

fn default_reference_lat() -> f64 {
    40.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub horizon_slots: usize,
    #[serde(default = "default_slot_seconds")]
    pub slot_seconds: f64,
    #[serde(default = "default_latency_model")]
    pub latency_model: String,
    #[serde(default = "default_per_hop_ms")]
    pub per_hop_ms: f64,
    #[serde(default = "default_convergence_slots")]
    pub convergence_slots: u32,
    #[serde(default)]
    pub rng_seed: u64,
    /// Default terrestrial server adder for stations that do not set one.
    #[serde(default = "default_server_adder")]
    pub server_adder_ms: f64,
}

fn default_slot_seconds() -> f64 {
    1.0
}

fn default_latency_model() -> String {
    "per_hop".to_string()
}

fn default_per_hop_ms() -> f64 {
    4.0
}

fn default_convergence_slots() -> u32 {
    10
}

fn default_server_adder() -> f64 {
    5.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GsEntry {
    pub id: String,
    pub lat: f64,
    pub lon: f64,
    #[serde(default)]
    pub server_adder_ms: Option<f64>,
}

/// A user is either a moving node backed by a trace file or a static node
/// with an explicit position.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserEntry {
    pub id: String,
    /// Trace path, resolved relative to the scenario file.
    #[serde(default)]
    pub trace: Option<String>,
    #[serde(default)]
    pub lat: Option<f64>,
    #[serde(default)]
    pub lon: Option<f64>,
    #[serde(default)]
    pub alt_m: Option<f64>,
    #[serde(default)]
    pub dest_gs: Option<String>,
}
