//! Time-slotted simulation engine.
//!
//! A run advances the constellation slot by slot, moves users along their
//! traces, lets the selected mobility-management mechanism update
//! attachments and bindings, and probes end-to-end connectivity in both
//! directions. Everything geometric (visibility, ground-station attachment,
//! nearest ground stations) is precomputed once per scenario in
//! [`Prepared`], shared read-only by every mechanism run, which keeps runs
//! deterministic and cheap to repeat across mechanisms and seeds.

pub mod fixed_sat;
pub mod ground_anchor;
pub mod mechanism;
pub mod skycastle;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::ada::{AdaError, AdaParams, ClusterDivision};
use crate::constellation::{
    ConstellationError, GroundPoint, SatelliteId, Shell, ShellConfig, Trajectory, Vec3,
    VisibilityTimeline, SPEED_OF_LIGHT_KM_S,
};
use crate::mobility::{IslPath, MmMessage, MobilityError};

pub use mechanism::{Mechanism, MechanismRegistry, SlotSink};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("unknown mechanism '{0}'")]
    UnknownMechanism(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Constellation(#[from] ConstellationError),
    #[error(transparent)]
    Ada(#[from] AdaError),
    #[error(transparent)]
    Mobility(#[from] MobilityError),
}

/// How path latency is estimated from a slot's routes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LatencyModel {
    /// Fixed milliseconds per inter-satellite hop plus nadir-approximated
    /// ground-satellite crossings.
    PerHop,
    /// Propagation over the actual inter-satellite and ground-satellite
    /// segment geometry at the probe instant.
    Geometric,
}

#[derive(Debug, Clone)]
pub struct GsSpec {
    pub id: String,
    pub point: GroundPoint,
    /// Terrestrial round-trip addition between this station and its server (ms).
    pub server_adder_ms: f64,
}

#[derive(Debug, Clone)]
pub struct UserSpec {
    pub id: String,
    pub trajectory: Trajectory,
    /// Ground station whose server this user talks to; nearest to the trace
    /// start when unset.
    pub dest_gs: Option<String>,
}

/// A fully resolved scenario: every default materialized, every trace loaded.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub shell: ShellConfig,
    pub ada: AdaParams,
    pub reference_point: GroundPoint,
    pub horizon_slots: usize,
    pub slot_seconds: f64,
    pub latency_model: LatencyModel,
    pub per_hop_ms: f64,
    /// Slots a ground station's routes stay unconverged after it switches
    /// satellites; applies to the baseline mechanisms only.
    pub convergence_slots: u32,
    pub rng_seed: u64,
    pub gs: Vec<GsSpec>,
    pub users: Vec<UserSpec>,
    pub mechanisms: Vec<String>,
}

impl Scenario {
    /// Collects every validation problem instead of stopping at the first.
    pub fn validate(&self, registry: &MechanismRegistry) -> Vec<String> {
        let mut errors = Vec::new();
        if let Err(e) = self.shell.validate() {
            errors.push(format!("shell: {e}"));
        }
        if let Err(e) = self.ada.validate() {
            errors.push(format!("ada: {e}"));
        }
        if self.horizon_slots < 2 {
            errors.push(format!(
                "sim.horizon_slots: must be >= 2, got {}",
                self.horizon_slots
            ));
        }
        if !(self.slot_seconds > 0.0) {
            errors.push(format!(
                "sim.slot_seconds: must be positive, got {}",
                self.slot_seconds
            ));
        }
        if !(self.per_hop_ms > 0.0) {
            errors.push(format!(
                "sim.per_hop_ms: must be positive, got {}",
                self.per_hop_ms
            ));
        }
        if self.gs.is_empty() {
            errors.push("gs: at least one ground station is required".into());
        }
        let mut seen = std::collections::BTreeSet::new();
        for g in &self.gs {
            if !seen.insert(&g.id) {
                errors.push(format!("gs.{}: duplicate id", g.id));
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        let horizon_s = (self.horizon_slots.saturating_sub(1)) as f64 * self.slot_seconds;
        for u in &self.users {
            if !seen.insert(&u.id) {
                errors.push(format!("users.{}: duplicate id", u.id));
            }
            if let Some(dest) = &u.dest_gs {
                if !self.gs.iter().any(|g| &g.id == dest) {
                    errors.push(format!("users.{}: unknown dest_gs '{dest}'", u.id));
                }
            }
            if u.trajectory.end_seconds() < horizon_s {
                errors.push(format!(
                    "users.{}: trace ends at {:.0}s but the horizon needs {:.0}s",
                    u.id,
                    u.trajectory.end_seconds(),
                    horizon_s
                ));
            }
        }
        for m in &self.mechanisms {
            if !registry.contains(m) {
                errors.push(format!(
                    "mechanisms: unknown '{m}' (available: {})",
                    registry.names().collect::<Vec<_>>().join(", ")
                ));
            }
        }
        errors
    }
}

/// Anchor identity in a slot record: a satellite for the satellite-anchored
/// mechanisms, a ground station for the ground-anchored baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AnchorNode {
    Sat(SatelliteId),
    Gs(u32),
}

impl std::fmt::Display for AnchorNode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AnchorNode::Sat(s) => write!(f, "s{}", s.0),
            AnchorNode::Gs(g) => write!(f, "g{g}"),
        }
    }
}

/// Per-user sample for one slot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UserSlot {
    pub connected_up: bool,
    pub connected_down: bool,
    pub rtt_ms: Option<f64>,
    pub ingress: Option<SatelliteId>,
    pub anchor: Option<AnchorNode>,
    pub address_changed: bool,
    pub handover: bool,
}

impl UserSlot {
    pub fn disconnected() -> Self {
        Self {
            connected_up: false,
            connected_down: false,
            rtt_ms: None,
            ingress: None,
            anchor: None,
            address_changed: false,
            handover: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RouteFlood {
    pub gs: u32,
    pub hops: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotRecord {
    pub t: u32,
    pub users: Vec<UserSlot>,
    /// Message-hops spent on location management this slot.
    pub location_hops: u64,
    /// Message-hops spent on route recomputation this slot (baselines only).
    pub route_hops: u64,
}

impl SlotRecord {
    pub fn control_message_hops(&self) -> u64 {
        self.location_hops + self.route_hops
    }
}

/// Complete log of one mechanism run.
#[derive(Debug, Clone)]
pub struct RunLog {
    pub mechanism: String,
    pub seed: u64,
    pub slots: Vec<SlotRecord>,
    /// Every mobility-management message, tagged with its slot.
    pub messages: Vec<(u32, MmMessage)>,
    /// Every route-recomputation charge, tagged with its slot.
    pub route_floods: Vec<(u32, RouteFlood)>,
    pub division: Option<ClusterDivision>,
}

/// Geometry shared by every mechanism run of a scenario: visibility
/// timelines, ground-station attachment and convergence bookkeeping, user
/// positions and nearest stations, and the reference visible union seeding
/// pattern discovery.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub scenario: Scenario,
    pub shell: Shell,
    pub gs_timelines: Vec<VisibilityTimeline>,
    /// Highest-elevation visible satellite per ground station per slot.
    pub gs_best: Vec<Vec<Option<SatelliteId>>>,
    /// Attachment per ground station per slot: keep the current satellite
    /// while visible, otherwise switch to the highest-elevation one.
    pub gs_attach: Vec<Vec<Option<SatelliteId>>>,
    /// True in the slot a ground station switches satellites.
    pub gs_handover: Vec<Vec<bool>>,
    /// True while the station's routes are inside a convergence window.
    pub gs_converging: Vec<Vec<bool>>,
    pub user_timelines: Vec<VisibilityTimeline>,
    pub user_best: Vec<Vec<Option<SatelliteId>>>,
    pub user_positions: Vec<Vec<GroundPoint>>,
    pub user_nearest_gs: Vec<Vec<usize>>,
    pub user_dest_gs: Vec<usize>,
    /// Union of satellites visible from the reference point over the
    /// discovery window.
    pub reference_union: Vec<SatelliteId>,
    /// Hop cost of one route flood; the torus is vertex-transitive so the
    /// eccentricity sum is the same from every satellite.
    pub flood_hops: u64,
}

/// Attachment policy shared by ground stations and baseline users: keep the
/// current satellite while it stays visible, otherwise take the
/// highest-elevation visible one.
pub fn attach_sequence(
    timeline: &VisibilityTimeline,
    best: &[Option<SatelliteId>],
) -> Vec<Option<SatelliteId>> {
    let mut out = Vec::with_capacity(timeline.horizon());
    let mut cur: Option<SatelliteId> = None;
    for t in 0..timeline.horizon() {
        if let Some(c) = cur {
            if !timeline.is_visible(c, t) {
                cur = None;
            }
        }
        if cur.is_none() {
            cur = best[t];
        }
        out.push(cur);
    }
    out
}

/// Handover slots of an attachment sequence: the node is attached and its
/// satellite differs from the last one it was attached to.
pub fn handover_slots(attach: &[Option<SatelliteId>]) -> Vec<bool> {
    let mut out = vec![false; attach.len()];
    let mut last: Option<SatelliteId> = None;
    for (t, &a) in attach.iter().enumerate() {
        if let Some(sat) = a {
            if last.is_some() && last != Some(sat) {
                out[t] = true;
            }
            last = Some(sat);
        }
    }
    out
}

fn convergence_windows(handover: &[bool], window: u32) -> Vec<bool> {
    let mut out = vec![false; handover.len()];
    for (t, &h) in handover.iter().enumerate() {
        if h {
            for k in t..(t + window as usize).min(handover.len()) {
                out[k] = true;
            }
        }
    }
    out
}

fn eccentricity_sum(shell: &Shell) -> u64 {
    let origin = SatelliteId(0);
    shell.all_sats().map(|s| shell.distance(origin, s) as u64).sum()
}

struct NodeVisibility {
    slots: Vec<Vec<SatelliteId>>,
    best: Vec<Option<SatelliteId>>,
}

/// Computes visibility for many ground nodes over a horizon with one
/// satellite-position evaluation per slot, shared across nodes.
fn bulk_visibility(
    shell: &Shell,
    positions: &[Vec<GroundPoint>], // [node][slot]
    horizon: usize,
    slot_seconds: f64,
) -> Vec<NodeVisibility> {
    let per_slot: Vec<Vec<(Vec<SatelliteId>, Option<SatelliteId>)>> = (0..horizon)
        .into_par_iter()
        .map(|t| {
            let t_s = t as f64 * slot_seconds;
            let sat_pos: Vec<Vec3> = shell
                .all_sats()
                .map(|s| shell.position_ecef_km(s, t_s))
                .collect();
            let inv_a = 1.0 / shell.config().semi_major_axis_km();
            positions
                .iter()
                .map(|node_pos| {
                    let g = node_pos[t].ecef_km();
                    let g_norm = g.norm();
                    let g_unit = g.scale(1.0 / g_norm);
                    let cos_max = shell.cos_max_central_angle(g_norm);
                    let mut vis = Vec::new();
                    let mut best: Option<(f64, SatelliteId)> = None;
                    for (i, sp) in sat_pos.iter().enumerate() {
                        let c = sp.dot(&g_unit) * inv_a;
                        if c >= cos_max {
                            let sat = SatelliteId(i as u32);
                            vis.push(sat);
                            if best.map_or(true, |(bc, _)| c > bc) {
                                best = Some((c, sat));
                            }
                        }
                    }
                    (vis, best.map(|(_, s)| s))
                })
                .collect()
        })
        .collect();

    (0..positions.len())
        .map(|n| NodeVisibility {
            slots: per_slot.iter().map(|row| row[n].0.clone()).collect(),
            best: per_slot.iter().map(|row| row[n].1).collect(),
        })
        .collect()
}

/// Union of the satellites visible from one point over a window of slots;
/// the seed set for pattern discovery.
pub fn reference_union(
    shell: &Shell,
    point: &GroundPoint,
    window_slots: usize,
    slot_seconds: f64,
) -> Vec<SatelliteId> {
    let positions = vec![vec![*point; window_slots]];
    let vis = bulk_visibility(shell, &positions, window_slots, slot_seconds);
    let mut union: Vec<SatelliteId> = vis[0].slots.iter().flatten().copied().collect();
    union.sort_unstable();
    union.dedup();
    union
}

impl Prepared {
    pub fn build(scenario: Scenario) -> Result<Self, SimError> {
        let registry = MechanismRegistry::with_builtins();
        let errors = scenario.validate(&registry);
        if !errors.is_empty() {
            return Err(SimError::InvalidScenario(errors.join("; ")));
        }
        let shell = Shell::new(scenario.shell)?;
        let horizon = scenario.horizon_slots;
        let slot_s = scenario.slot_seconds;

        let gs_positions: Vec<Vec<GroundPoint>> = scenario
            .gs
            .iter()
            .map(|g| vec![g.point; horizon])
            .collect();
        let user_positions: Vec<Vec<GroundPoint>> = scenario
            .users
            .iter()
            .map(|u| {
                (0..horizon)
                    .map(|t| u.trajectory.position_at(t as f64 * slot_s))
                    .collect()
            })
            .collect();

        let gs_vis = bulk_visibility(&shell, &gs_positions, horizon, slot_s);
        let user_vis = bulk_visibility(&shell, &user_positions, horizon, slot_s);

        let gs_timelines: Vec<VisibilityTimeline> = gs_vis
            .iter()
            .zip(&scenario.gs)
            .map(|(v, g)| VisibilityTimeline {
                node: g.id.clone(),
                slots: v.slots.clone(),
            })
            .collect();
        let gs_best: Vec<Vec<Option<SatelliteId>>> = gs_vis.into_iter().map(|v| v.best).collect();
        let user_timelines: Vec<VisibilityTimeline> = user_vis
            .iter()
            .zip(&scenario.users)
            .map(|(v, u)| VisibilityTimeline {
                node: u.id.clone(),
                slots: v.slots.clone(),
            })
            .collect();
        let user_best: Vec<Vec<Option<SatelliteId>>> =
            user_vis.into_iter().map(|v| v.best).collect();

        // Seed for pattern discovery: the reference point watched over its
        // own window, independent of the scenario horizon.
        let union = reference_union(
            &shell,
            &scenario.reference_point,
            scenario.ada.discovery_window,
            slot_s,
        );

        Ok(Self::assemble(
            scenario,
            shell,
            gs_timelines,
            gs_best,
            user_timelines,
            user_best,
            user_positions,
            union,
        ))
    }

    /// Assembles the derived state (attachments, handovers, convergence
    /// windows, nearest and destination stations) from raw visibility data.
    /// Tests use this to drive the engine with synthetic geometry.
    #[allow(clippy::too_many_arguments)]
    pub fn assemble(
        scenario: Scenario,
        shell: Shell,
        gs_timelines: Vec<VisibilityTimeline>,
        gs_best: Vec<Vec<Option<SatelliteId>>>,
        user_timelines: Vec<VisibilityTimeline>,
        user_best: Vec<Vec<Option<SatelliteId>>>,
        user_positions: Vec<Vec<GroundPoint>>,
        reference_union: Vec<SatelliteId>,
    ) -> Self {
        let horizon = scenario.horizon_slots;
        let gs_attach: Vec<Vec<Option<SatelliteId>>> = gs_timelines
            .iter()
            .zip(&gs_best)
            .map(|(tl, best)| attach_sequence(tl, best))
            .collect();
        let gs_handover: Vec<Vec<bool>> = gs_attach.iter().map(|a| handover_slots(a)).collect();
        let gs_converging: Vec<Vec<bool>> = gs_handover
            .iter()
            .map(|h| convergence_windows(h, scenario.convergence_slots))
            .collect();

        let user_nearest_gs: Vec<Vec<usize>> = user_positions
            .iter()
            .map(|pos| {
                (0..horizon)
                    .map(|t| {
                        let mut best = 0usize;
                        let mut best_d = f64::INFINITY;
                        for (i, g) in scenario.gs.iter().enumerate() {
                            let d = crate::constellation::great_circle_km(&pos[t], &g.point);
                            if d < best_d {
                                best_d = d;
                                best = i;
                            }
                        }
                        best
                    })
                    .collect()
            })
            .collect();

        let user_dest_gs: Vec<usize> = scenario
            .users
            .iter()
            .enumerate()
            .map(|(u, spec)| match &spec.dest_gs {
                Some(id) => scenario.gs.iter().position(|g| &g.id == id).unwrap_or(0),
                None => user_nearest_gs[u].first().copied().unwrap_or(0),
            })
            .collect();

        let flood_hops = eccentricity_sum(&shell);

        Self {
            scenario,
            shell,
            gs_timelines,
            gs_best,
            gs_attach,
            gs_handover,
            gs_converging,
            user_timelines,
            user_best,
            user_positions,
            user_nearest_gs,
            user_dest_gs,
            reference_union,
            flood_hops,
        }
    }

    pub fn horizon(&self) -> usize {
        self.scenario.horizon_slots
    }

    pub fn num_users(&self) -> usize {
        self.scenario.users.len()
    }

    pub fn num_gs(&self) -> usize {
        self.scenario.gs.len()
    }

    /// Total ground-station handover events over the horizon.
    pub fn total_gs_handovers(&self) -> usize {
        self.gs_handover
            .iter()
            .map(|h| h.iter().filter(|&&b| b).count())
            .sum()
    }
}

/// One-way latency of a single ground-satellite crossing at nadir (ms).
pub fn gsl_one_way_ms(altitude_km: f64) -> f64 {
    altitude_km / SPEED_OF_LIGHT_KM_S * 1000.0
}

/// Round-trip estimate in per-hop mode: every inter-satellite hop costs
/// `per_hop_ms`, the four ground-satellite crossings cost the nadir
/// propagation each, and the terrestrial server adder is applied once.
pub fn rtt_per_hop_mode(
    hops_down: u32,
    hops_up: u32,
    per_hop_ms: f64,
    gsl_one_way_ms: f64,
    server_adder_ms: f64,
) -> f64 {
    (hops_down + hops_up) as f64 * per_hop_ms + 4.0 * gsl_one_way_ms + server_adder_ms
}

/// Round-trip estimate from actual segment geometry at the probe instant:
/// inter-satellite segment lengths along both paths plus the four
/// ground-satellite slant ranges, over the speed of light, plus the server
/// adder.
pub fn rtt_geometric(
    path_down: &IslPath,
    path_up: &IslPath,
    gs_point: &GroundPoint,
    user_point: &GroundPoint,
    shell: &Shell,
    t_seconds: f64,
    server_adder_ms: f64,
) -> f64 {
    let pos = |s: SatelliteId| shell.position_ecef_km(s, t_seconds);
    let mut km = 0.0;
    for path in [path_down, path_up] {
        for w in path.nodes.windows(2) {
            km += pos(w[0]).sub(&pos(w[1])).norm();
        }
    }
    let gs = gs_point.ecef_km();
    let user = user_point.ecef_km();
    // Down: gs -> first sat ... last sat -> user; up mirrors it.
    km += gs.sub(&pos(*path_down.nodes.first().unwrap())).norm();
    km += user.sub(&pos(*path_down.nodes.last().unwrap())).norm();
    km += user.sub(&pos(*path_up.nodes.first().unwrap())).norm();
    km += gs.sub(&pos(*path_up.nodes.last().unwrap())).norm();
    km / SPEED_OF_LIGHT_KM_S * 1000.0 + server_adder_ms
}

/// Dispatches on the scenario's latency model.
pub fn probe_rtt(
    prep: &Prepared,
    path_down: &IslPath,
    path_up: &IslPath,
    gs_idx: usize,
    user_idx: usize,
    t: usize,
) -> f64 {
    let sc = &prep.scenario;
    let adder = sc.gs[gs_idx].server_adder_ms;
    match sc.latency_model {
        LatencyModel::PerHop => rtt_per_hop_mode(
            path_down.hops(),
            path_up.hops(),
            sc.per_hop_ms,
            gsl_one_way_ms(sc.shell.altitude_km),
            adder,
        ),
        LatencyModel::Geometric => rtt_geometric(
            path_down,
            path_up,
            &sc.gs[gs_idx].point,
            &prep.user_positions[user_idx][t],
            &prep.shell,
            t as f64 * sc.slot_seconds,
            adder,
        ),
    }
}

/// Runs one mechanism over a prepared scenario. Deterministic: identical
/// inputs produce identical logs.
pub fn run(
    prep: &Prepared,
    mechanism_name: &str,
    registry: &MechanismRegistry,
) -> Result<RunLog, SimError> {
    let mech = registry.build(mechanism_name, prep)?;
    Ok(run_with(prep, mech))
}

/// Runs an already-constructed mechanism; the escape hatch for strategies
/// built outside the registry.
pub fn run_with(prep: &Prepared, mut mech: Box<dyn Mechanism>) -> RunLog {
    let mut slots = Vec::with_capacity(prep.horizon());
    let mut messages = Vec::new();
    let mut route_floods = Vec::new();
    for t in 0..prep.horizon() {
        let mut sink = SlotSink::new(prep.num_users());
        mech.step(t, prep, &mut sink);
        debug_assert_eq!(sink.users.len(), prep.num_users());
        let location_hops = sink.messages.iter().map(|m| m.hop_cost as u64).sum();
        let route_hops = sink.route_floods.iter().map(|f| f.hops).sum();
        slots.push(SlotRecord {
            t: t as u32,
            users: sink.users,
            location_hops,
            route_hops,
        });
        messages.extend(sink.messages.into_iter().map(|m| (t as u32, m)));
        route_floods.extend(sink.route_floods.into_iter().map(|f| (t as u32, f)));
    }
    RunLog {
        mechanism: mech.name().to_string(),
        seed: prep.scenario.rng_seed,
        slots,
        messages,
        route_floods,
        division: mech.division().cloned(),
    }
}

/// Runs several mechanisms against the same prepared scenario.
pub fn run_all(
    prep: &Prepared,
    mechanisms: &[String],
    registry: &MechanismRegistry,
) -> Result<BTreeMap<String, RunLog>, SimError> {
    let logs: Result<Vec<_>, SimError> = mechanisms
        .par_iter()
        .map(|m| run(prep, m, registry).map(|log| (m.clone(), log)))
        .collect();
    Ok(logs?.into_iter().collect())
}


#[cfg(test)]
mod tests {
    use super::testkit::*;
    use super::*;

    #[test]
    fn gsl_latency_at_starlink_altitude() {
        // 540 km at the speed of light: 1.801 ms one way.
        let expected = 540.0 / 299792.458 * 1000.0;
        assert!((gsl_one_way_ms(540.0) - expected).abs() < 1e-12);
        assert!((gsl_one_way_ms(540.0) - 1.8) < 0.01);
    }

    #[test]
    fn per_hop_rtt_zero_hop_paths() {
        assert_eq!(rtt_per_hop_mode(0, 0, 4.0, 2.0, 0.0), 8.0);
        assert_eq!(rtt_per_hop_mode(3, 2, 4.0, 2.0, 5.0), 33.0);
    }

    #[test]
    fn attach_sequence_keeps_current_while_visible() {
        let tl = timeline("g", vec![vec![5, 9], vec![5, 9], vec![9], vec![9], vec![2]]);
        let best = vec![
            Some(SatelliteId(5)),
            Some(SatelliteId(9)),
            Some(SatelliteId(9)),
            Some(SatelliteId(9)),
            Some(SatelliteId(2)),
        ];
        let attach = attach_sequence(&tl, &best);
        assert_eq!(
            attach,
            vec![
                Some(SatelliteId(5)),
                Some(SatelliteId(5)),
                Some(SatelliteId(9)),
                Some(SatelliteId(9)),
                Some(SatelliteId(2)),
            ]
        );
        let handovers = handover_slots(&attach);
        assert_eq!(handovers, vec![false, false, true, false, true]);
    }

    #[test]
    fn convergence_window_covers_the_configured_slots() {
        let handover = vec![false, true, false, false, false, false];
        assert_eq!(
            convergence_windows(&handover, 3),
            vec![false, true, true, true, false, false]
        );
        assert_eq!(convergence_windows(&handover, 0), vec![false; 6]);
    }

    #[test]
    fn flood_cost_is_position_independent() {
        let shell = Shell::new(scenario(2, 1, 0, 0).shell).unwrap();
        let sum0: u64 = shell
            .all_sats()
            .map(|s| shell.distance(SatelliteId(7), s) as u64)
            .sum();
        assert_eq!(eccentricity_sum(&shell), sum0);
    }

    #[test]
    fn scenario_validation_collects_all_errors() {
        let registry = MechanismRegistry::with_builtins();
        let mut sc = scenario(10, 1, 1, 0);
        sc.shell.num_orbits = 2;
        sc.horizon_slots = 1;
        sc.mechanisms = vec!["nope".into()];
        sc.users[0].dest_gs = Some("ghost".into());
        let errors = sc.validate(&registry);
        assert!(errors.len() >= 4, "{errors:?}");
        assert!(errors.iter().any(|e| e.contains("num_orbits")));
        assert!(errors.iter().any(|e| e.contains("horizon")));
        assert!(errors.iter().any(|e| e.contains("unknown 'nope'")));
        assert!(errors.iter().any(|e| e.contains("ghost")));
    }

    #[test]
    fn unknown_mechanism_is_an_error() {
        let prep = prepared(scenario(3, 1, 0, 0), vec![vec![vec![0]; 3]], vec![], vec![0]);
        let registry = MechanismRegistry::with_builtins();
        assert!(matches!(
            run(&prep, "carrier_pigeon", &registry),
            Err(SimError::UnknownMechanism(_))
        ));
    }

    /// Static user under one satellite: connected both ways in every slot
    /// after the registration slot, and never marked as handing over.
    #[test]
    fn skycastle_static_user_stays_connected() {
        let prep = prepared(
            scenario(10, 1, 1, 0),
            vec![vec![vec![7]; 10]],
            vec![vec![vec![7]; 10]],
            vec![7],
        );
        let registry = MechanismRegistry::with_builtins();
        let log = run(&prep, "skycastle", &registry).unwrap();
        let u = |t: usize| &log.slots[t].users[0];
        assert!(!u(0).connected_down, "registration slot is conservative");
        for t in 1..10 {
            assert!(u(t).connected_down && u(t).connected_up, "slot {t}");
            assert!(!u(t).handover && !u(t).address_changed);
            assert_eq!(u(t).ingress, Some(SatelliteId(7)));
        }
        // Zero-hop paths in per-hop mode: 4 crossings at 540 km plus the
        // 5 ms server adder.
        let expected = 4.0 * gsl_one_way_ms(540.0) + 5.0;
        assert!((u(3).rtt_ms.unwrap() - expected).abs() < 1e-9);
    }

    /// A ground-station handover leaves connectivity untouched and charges
    /// exactly the broadcast hops to every anchor.
    #[test]
    fn skycastle_gs_handover_is_convergence_free() {
        let mut gs_slots = vec![vec![7u32]; 5];
        gs_slots.extend(vec![vec![8u32]; 5]);
        let prep = prepared(
            scenario(10, 1, 1, 5),
            vec![gs_slots],
            vec![vec![vec![7]; 10]],
            vec![7],
        );
        // Singleton pattern: every satellite is an anchor.
        let registry = MechanismRegistry::with_builtins();
        let log = run(&prep, "skycastle", &registry).unwrap();
        assert!(prep.gs_handover[0][5], "handover happens at slot 5");
        for t in 1..10 {
            let u = &log.slots[t].users[0];
            assert!(u.connected_down && u.connected_up, "slot {t}");
        }
        // Slot 5 carries only the broadcast; the user emitted nothing.
        let shell = &prep.shell;
        let expected: u64 = shell
            .all_sats()
            .map(|a| shell.distance(SatelliteId(8), a) as u64)
            .sum();
        assert_eq!(log.slots[5].location_hops, expected);
        assert_eq!(log.slots[5].route_hops, 0);
    }

    /// Crossing clusters changes the address exactly once and interrupts
    /// exactly that slot.
    #[test]
    fn skycastle_inter_cluster_handover_changes_address_once() {
        let mut user_slots = vec![vec![1u32]; 5];
        user_slots.extend(vec![vec![19u32]; 5]);
        let prep = prepared(
            scenario(10, 1, 1, 0),
            vec![vec![vec![0]; 10]],
            vec![user_slots],
            vec![0],
        );
        // Two clusters: planes 0-2 on anchor 0, planes 3-5 on anchor 18.
        let shell = &prep.shell;
        let anchor_of: Vec<SatelliteId> = shell
            .all_sats()
            .map(|s| {
                if shell.coord(s).x < 3 {
                    SatelliteId(0)
                } else {
                    SatelliteId(18)
                }
            })
            .collect();
        let division = crate::ada::ClusterDivision::new(anchor_of, 36).unwrap();
        let mech = Box::new(skycastle::SkyCastle::with_division(&prep, division));
        let log = run_with(&prep, mech);
        let changes: Vec<usize> = (0..10)
            .filter(|&t| log.slots[t].users[0].address_changed)
            .collect();
        assert_eq!(changes, vec![5]);
        assert!(!log.slots[5].users[0].connected_down);
        for t in [1, 2, 3, 4, 6, 7, 8, 9] {
            let u = &log.slots[t].users[0];
            assert!(u.connected_down && u.connected_up, "slot {t}");
            // Detour never exceeds the budget, restated in milliseconds.
            let shortest = prep.shell.distance(
                prep.gs_attach[0][t].unwrap(),
                u.ingress.unwrap(),
            );
            let bound = (2 * shortest + 2 * prep.scenario.ada.h) as f64
                * prep.scenario.per_hop_ms
                + 4.0 * gsl_one_way_ms(540.0)
                + 5.0;
            assert!(u.rtt_ms.unwrap() <= bound + 1e-9);
        }
    }

    /// The slot where the user switches satellites loses the down direction
    /// until the next successful location update takes effect.
    #[test]
    fn ground_anchor_handover_slot_is_stale() {
        let mut user_slots = vec![vec![5u32]; 5];
        user_slots.extend(vec![vec![6u32]; 5]);
        let prep = prepared(
            scenario(10, 1, 1, 0),
            vec![vec![vec![0]; 10]],
            vec![user_slots],
            vec![0],
        );
        let registry = MechanismRegistry::with_builtins();
        let log = run(&prep, "ground_anchor", &registry).unwrap();
        let u = |t: usize| &log.slots[t].users[0];
        assert!(!u(0).connected_down, "registration slot");
        for t in 1..5 {
            assert!(u(t).connected_down && u(t).connected_up, "slot {t}");
        }
        assert!(u(5).handover);
        assert!(!u(5).connected_down, "stale binding in the handover slot");
        assert!(u(5).connected_up, "upstream does not need the binding");
        for t in 6..10 {
            assert!(u(t).connected_down, "slot {t}");
        }
        assert_eq!((0..10).filter(|&t| u(t).address_changed).count(), 0);
    }

    /// Anchor-station convergence windows black out both directions; with a
    /// zero-length window the same run has no convergence losses at all.
    #[test]
    fn ground_anchor_convergence_window_blocks_traffic() {
        let mut gs_slots = vec![vec![0u32]; 3];
        gs_slots.extend(vec![vec![2u32]; 7]);
        let build_prep = |w: u32| {
            prepared(
                scenario(10, 1, 1, w),
                vec![gs_slots.clone()],
                vec![vec![vec![5]; 10]],
                vec![0],
            )
        };
        let registry = MechanismRegistry::with_builtins();

        let prep = build_prep(3);
        let log = run(&prep, "ground_anchor", &registry).unwrap();
        assert!(prep.gs_handover[0][3]);
        for t in 3..6 {
            let u = &log.slots[t].users[0];
            assert!(!u.connected_up && !u.connected_down, "window slot {t}");
        }
        assert!(log.slots[6].users[0].connected_up);
        assert!(log.slots[6].users[0].connected_down);

        // Convergence model off: only the registration slot stays dark.
        let prep = build_prep(0);
        let log = run(&prep, "ground_anchor", &registry).unwrap();
        for t in 1..10 {
            let u = &log.slots[t].users[0];
            assert!(u.connected_up && u.connected_down, "slot {t}");
        }
    }

    /// Re-anchoring waits out the hysteresis window, then changes the address.
    #[test]
    fn ground_anchor_reanchors_after_hysteresis() {
        let horizon = 80;
        let mut sc = scenario(horizon, 2, 1, 0);
        sc.gs[0].point = GroundPoint::new(0.0, 0.0, 0.0).unwrap();
        sc.gs[1].point = GroundPoint::new(0.0, 10.0, 0.0).unwrap();
        let shell = Shell::new(sc.shell).unwrap();
        let gs_tl: Vec<VisibilityTimeline> = (0..2)
            .map(|i| timeline(&format!("gs{i}"), vec![vec![0]; horizon]))
            .collect();
        let gs_best: Vec<_> = gs_tl.iter().map(best_of).collect();
        let user_tl = vec![timeline("u0", vec![vec![5]; horizon])];
        let user_best = vec![best_of(&user_tl[0])];
        let near0 = GroundPoint::new(0.0, 1.0, 0.0).unwrap();
        let near1 = GroundPoint::new(0.0, 9.0, 0.0).unwrap();
        let mut positions = vec![near0; 10];
        positions.extend(vec![near1; horizon - 10]);
        let prep = Prepared::assemble(
            sc,
            shell,
            gs_tl,
            gs_best,
            user_tl,
            user_best,
            vec![positions],
            vec![SatelliteId(0)],
        );
        let registry = MechanismRegistry::with_builtins();
        let log = run(&prep, "ground_anchor", &registry).unwrap();
        let changes: Vec<usize> = (0..horizon)
            .filter(|&t| log.slots[t].users[0].address_changed)
            .collect();
        assert_eq!(changes, vec![69], "60 consecutive nearest slots from t=10");
        assert!(matches!(
            log.slots[69].users[0].anchor,
            Some(AnchorNode::Gs(1))
        ));
    }

    /// The anchor never moves and the address never changes; only handover
    /// slots lose the down direction.
    #[test]
    fn fixed_sat_anchor_keeps_initial_anchor() {
        let mut user_slots = vec![vec![5u32]; 5];
        user_slots.extend(vec![vec![6u32]; 5]);
        let prep = prepared(
            scenario(10, 1, 1, 0),
            vec![vec![vec![0]; 10]],
            vec![user_slots],
            vec![0],
        );
        let registry = MechanismRegistry::with_builtins();
        let log = run(&prep, "fixed_sat_anchor", &registry).unwrap();
        let u = |t: usize| &log.slots[t].users[0];
        for t in 0..10 {
            assert!(!u(t).address_changed);
            if t > 0 {
                assert_eq!(u(t).anchor, Some(AnchorNode::Sat(SatelliteId(5))));
            }
        }
        assert!(!u(5).connected_down && u(5).connected_up);
        assert!(u(6).connected_down);
    }

    /// Per-slot conservation: the logged totals equal the sums of the logged
    /// messages and floods; runs are bit-identical when repeated.
    #[test]
    fn conservation_and_determinism() {
        let mut gs_slots = vec![vec![7u32]; 4];
        gs_slots.extend(vec![vec![8u32]; 6]);
        let mut user_slots = vec![vec![1u32]; 3];
        user_slots.extend(vec![vec![2u32]; 4]);
        user_slots.extend(vec![vec![19u32]; 3]);
        let prep = prepared(
            scenario(10, 1, 1, 2),
            vec![gs_slots],
            vec![user_slots],
            vec![0, 1, 2],
        );
        let registry = MechanismRegistry::with_builtins();
        for name in ["skycastle", "ground_anchor", "fixed_sat_anchor"] {
            let log = run(&prep, name, &registry).unwrap();
            for slot in &log.slots {
                let msg_sum: u64 = log
                    .messages
                    .iter()
                    .filter(|(t, _)| *t == slot.t)
                    .map(|(_, m)| m.hop_cost as u64)
                    .sum();
                let flood_sum: u64 = log
                    .route_floods
                    .iter()
                    .filter(|(t, _)| *t == slot.t)
                    .map(|(_, f)| f.hops)
                    .sum();
                assert_eq!(slot.location_hops, msg_sum, "{name} slot {}", slot.t);
                assert_eq!(slot.route_hops, flood_sum, "{name} slot {}", slot.t);
                assert_eq!(
                    slot.control_message_hops(),
                    msg_sum + flood_sum,
                    "{name} slot {}",
                    slot.t
                );
            }
            let again = run(&prep, name, &registry).unwrap();
            assert_eq!(log.slots, again.slots, "{name} is deterministic");
        }
    }

    /// Route recomputation overhead: zero for the cluster mechanism, charged
    /// on every ground-station handover for the baselines.
    #[test]
    fn route_overhead_split_by_mechanism() {
        let mut gs_slots = vec![vec![7u32]; 4];
        gs_slots.extend(vec![vec![8u32]; 6]);
        let prep = prepared(
            scenario(10, 1, 1, 2),
            vec![gs_slots],
            vec![vec![vec![7]; 10]],
            vec![7],
        );
        let registry = MechanismRegistry::with_builtins();
        let sky = run(&prep, "skycastle", &registry).unwrap();
        assert!(sky.slots.iter().all(|s| s.route_hops == 0));
        for name in ["ground_anchor", "fixed_sat_anchor"] {
            let log = run(&prep, name, &registry).unwrap();
            assert!(log.slots[4].route_hops > 0, "{name}");
            assert_eq!(
                log.slots[4].route_hops,
                prep.flood_hops,
                "one flood per handover"
            );
        }
    }
}
