//! Fixed-satellite-anchor mobility management baseline.
//!
//! Each user keeps its first ingress satellite as its anchor for the whole
//! run, so its address never changes. Location updates travel over stable
//! inter-satellite links and always arrive, but take effect for probes from
//! the following slot: the anchor drifts ever farther away, and the update
//! transits an unmanaged multi-hop path. Downstream traffic enters at the
//! destination's ground station through whatever satellite it currently has;
//! upstream traffic must route to that station and stalls inside its
//! convergence windows.

use crate::constellation::SatelliteId;
use crate::mobility::{shortest_segment, IslPath, MessageKind, MmMessage};

use super::mechanism::{Mechanism, SlotSink};
use super::{attach_sequence, probe_rtt, AnchorNode, Prepared, RouteFlood, SimError, UserSlot};

pub(super) fn build(prep: &Prepared) -> Result<Box<dyn Mechanism>, SimError> {
    let attach = prep
        .user_timelines
        .iter()
        .zip(&prep.user_best)
        .map(|(tl, best)| attach_sequence(tl, best))
        .collect();
    Ok(Box::new(FixedSatAnchor {
        attach,
        users: vec![
            UserState {
                anchor: None,
                committed: None,
                pending: None,
                last_ingress: None,
            };
            prep.num_users()
        ],
    }))
}

#[derive(Clone)]
struct UserState {
    /// The first ingress satellite, fixed forever.
    anchor: Option<SatelliteId>,
    committed: Option<SatelliteId>,
    pending: Option<SatelliteId>,
    last_ingress: Option<SatelliteId>,
}

pub struct FixedSatAnchor {
    attach: Vec<Vec<Option<SatelliteId>>>,
    users: Vec<UserState>,
}

impl Mechanism for FixedSatAnchor {
    fn name(&self) -> &'static str {
        "fixed_sat_anchor"
    }

    fn step(&mut self, t: usize, prep: &Prepared, sink: &mut SlotSink) {
        // The baseline still runs a routing protocol; ground-station
        // handovers flood route updates exactly as in the ground-anchor case.
        for g in 0..prep.num_gs() {
            if prep.gs_handover[g][t] {
                sink.route_floods.push(RouteFlood {
                    gs: g as u32,
                    hops: prep.flood_hops,
                });
            }
        }
        for u in 0..prep.num_users() {
            let slot = self.step_user(u, t, prep, sink);
            sink.users.push(slot);
        }
    }
}

impl FixedSatAnchor {
    fn step_user(&mut self, u: usize, t: usize, prep: &Prepared, sink: &mut SlotSink) -> UserSlot {
        let shell = &prep.shell;
        let ingress = self.attach[u][t];
        let state = &mut self.users[u];

        let handover = matches!((state.last_ingress, ingress), (Some(p), Some(c)) if p != c);
        if ingress.is_some() {
            state.last_ingress = ingress;
        }

        let Some(ingress) = ingress else {
            return UserSlot::disconnected();
        };

        let mut registration_slot = false;
        if state.anchor.is_none() {
            state.anchor = Some(ingress);
            registration_slot = true;
        }
        let anchor = state.anchor.expect("assigned above");

        // Location update over stable inter-satellite links; effective for
        // probes from the next slot.
        let effective = state.pending.or(state.committed);
        if effective != Some(ingress) {
            sink.messages.push(MmMessage {
                kind: if registration_slot {
                    MessageKind::UserRegister
                } else {
                    MessageKind::UserLocationUpdate
                },
                subject: prep.scenario.users[u].id.clone(),
                ingress,
                destination_anchor: anchor,
                hop_cost: shell.distance(ingress, anchor),
            });
            state.pending = Some(ingress);
        }

        let mut slot = UserSlot {
            connected_up: false,
            connected_down: false,
            rtt_ms: None,
            ingress: Some(ingress),
            anchor: Some(AnchorNode::Sat(anchor)),
            address_changed: false,
            handover,
        };

        let committed = state.committed;
        if state.pending.is_some() {
            state.committed = state.pending;
        }

        if registration_slot {
            return slot;
        }

        let gs_idx = prep.user_dest_gs[u];
        let Some(gin) = prep.gs_attach[gs_idx][t] else {
            return slot;
        };

        // Down: station -> its current satellite -> anchor -> bound ingress.
        slot.connected_down = committed == Some(ingress);
        // Up: routes toward the station; stalls during its convergence.
        slot.connected_up = !prep.gs_converging[gs_idx][t];
        if slot.connected_up && slot.connected_down {
            let mut down_nodes = shortest_segment(gin, anchor, shell);
            down_nodes.extend_from_slice(&shortest_segment(anchor, ingress, shell)[1..]);
            let down = IslPath { nodes: down_nodes };
            let up = IslPath {
                nodes: shortest_segment(ingress, gin, shell),
            };
            slot.rtt_ms = Some(probe_rtt(prep, &down, &up, gs_idx, u, t));
        }
        slot
    }
}
