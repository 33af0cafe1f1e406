//! Small assignment instances for the `oracle assign` command: a JSON file
//! naming a torus, a division (explicit or pattern-derived) and per-slot
//! visible satellite sets; the command runs the greedy assignment against
//! the exhaustive oracle and reports whether the objectives agree.

use std::path::Path;

use serde::Deserialize;

use skycastle_core::ada::{
    assign_bruteforce, assign_greedy, check_delay_constraint, deploy_anchors, objective_value,
    pattern_discovery, AssignmentTimeline, ClusterDivision,
};
use skycastle_core::constellation::{SatelliteId, Shell, ShellConfig, VisibilityTimeline};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub num_orbits: u32,
    pub sats_per_orbit: u32,
    /// Detour budget for pattern-derived divisions; floor((X+Y)/2) default.
    #[serde(default)]
    pub h: Option<u32>,
    /// Explicit anchor per satellite; a pattern over the full torus is
    /// discovered when omitted.
    #[serde(default)]
    pub anchor_of: Option<Vec<u32>>,
    /// Visible satellite ids per time slot.
    pub slots: Vec<Vec<u32>>,
}

#[derive(Debug)]
pub struct OracleOutcome {
    pub division: ClusterDivision,
    pub greedy: AssignmentTimeline,
    pub bruteforce: AssignmentTimeline,
    pub greedy_objective: u64,
    pub bruteforce_objective: u64,
    pub delay_constraint_pass: bool,
}

impl OracleOutcome {
    pub fn matches(&self) -> bool {
        self.greedy_objective == self.bruteforce_objective
    }
}

pub fn run_oracle_instance(path: &Path) -> anyhow::Result<OracleOutcome> {
    let text = std::fs::read_to_string(path)?;
    let file: InstanceFile = serde_json::from_str(&text)?;
    let shell = Shell::new(ShellConfig {
        num_orbits: file.num_orbits,
        sats_per_orbit: file.sats_per_orbit,
        altitude_km: 540.0,
        inclination_deg: 53.0,
        phase_offset: 0.5,
        min_elevation_deg: 25.0,
    })?;
    let h = file
        .h
        .unwrap_or((file.num_orbits + file.sats_per_orbit) / 2);
    let division = match file.anchor_of {
        Some(map) => ClusterDivision::new(
            map.into_iter().map(SatelliteId).collect(),
            shell.num_sats(),
        )?,
        None => {
            let union: Vec<SatelliteId> = shell.all_sats().collect();
            deploy_anchors(&shell, &pattern_discovery(&union, h, &shell)?)
        }
    };
    let timeline = VisibilityTimeline {
        node: "instance".into(),
        slots: file
            .slots
            .into_iter()
            .map(|mut v| {
                v.sort_unstable();
                v.dedup();
                v.into_iter().map(SatelliteId).collect()
            })
            .collect(),
    };
    let greedy = assign_greedy(&timeline, &division);
    let bruteforce = assign_bruteforce(&timeline, &division)?;
    let greedy_objective = objective_value(std::slice::from_ref(&greedy), &division)?;
    let bruteforce_objective = objective_value(std::slice::from_ref(&bruteforce), &division)?;
    let delay_constraint_pass = check_delay_constraint(&division, h, &shell).pass;
    Ok(OracleOutcome {
        division,
        greedy,
        bruteforce,
        greedy_objective,
        bruteforce_objective,
        delay_constraint_pass,
    })
}
