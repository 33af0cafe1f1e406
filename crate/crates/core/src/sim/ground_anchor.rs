//! Ground-anchored mobility management baseline.
//!
//! Every user registers with a nearby ground station, which holds the user's
//! binding and relays both traffic directions. Location updates and data
//! paths between the satellite mesh and a ground station depend on routes
//! the routing protocol recomputes after each of that station's satellite
//! handovers, so anything touching a station inside its convergence window
//! fails. Updates that do arrive take effect for probes from the following
//! slot, standing in for the update's multi-hop transit and route
//! installation time.

use crate::constellation::SatelliteId;
use crate::mobility::{IslPath, MessageKind, MmMessage};

use super::mechanism::{Mechanism, SlotSink};
use super::{attach_sequence, probe_rtt, AnchorNode, Prepared, RouteFlood, SimError, UserSlot};

/// Re-anchor only after another station has been nearest this many
/// consecutive slots; stops anchor flapping at cell edges.
const REANCHOR_HYSTERESIS_SLOTS: u32 = 60;

pub(super) fn build(prep: &Prepared) -> Result<Box<dyn Mechanism>, SimError> {
    let attach = prep
        .user_timelines
        .iter()
        .zip(&prep.user_best)
        .map(|(tl, best)| attach_sequence(tl, best))
        .collect();
    Ok(Box::new(GroundAnchor {
        attach,
        users: vec![
            UserState {
                anchor_gs: None,
                committed: None,
                pending: None,
                streak: None,
                last_ingress: None,
            };
            prep.num_users()
        ],
    }))
}

#[derive(Clone)]
struct UserState {
    anchor_gs: Option<usize>,
    /// Binding the anchor station acts on this slot (end of previous slot).
    committed: Option<SatelliteId>,
    /// Binding updated this slot; commits when the slot ends.
    pending: Option<SatelliteId>,
    /// (candidate station, consecutive slots it has been nearest).
    streak: Option<(usize, u32)>,
    last_ingress: Option<SatelliteId>,
}

pub struct GroundAnchor {
    attach: Vec<Vec<Option<SatelliteId>>>,
    users: Vec<UserState>,
}

impl Mechanism for GroundAnchor {
    fn name(&self) -> &'static str {
        "ground_anchor"
    }

    fn step(&mut self, t: usize, prep: &Prepared, sink: &mut SlotSink) {
        // Each ground-station handover triggers a routing-protocol flood.
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

impl GroundAnchor {
    fn step_user(&mut self, u: usize, t: usize, prep: &Prepared, sink: &mut SlotSink) -> UserSlot {
        let shell = &prep.shell;
        let ingress = self.attach[u][t];
        let state = &mut self.users[u];

        let handover = match (state.last_ingress, ingress) {
            (Some(prev), Some(cur)) if prev != cur => true,
            _ => false,
        };
        if ingress.is_some() {
            state.last_ingress = ingress;
        }

        let Some(ingress) = ingress else {
            return UserSlot::disconnected();
        };

        let nearest = prep.user_nearest_gs[u][t];
        let mut registration_slot = false;
        let mut address_changed = false;

        match state.anchor_gs {
            None => {
                state.anchor_gs = Some(nearest);
                state.committed = None;
                state.pending = None;
                registration_slot = true;
            }
            Some(current) if current != nearest => {
                let streak = match state.streak {
                    Some((gs, n)) if gs == nearest => (gs, n + 1),
                    _ => (nearest, 1),
                };
                state.streak = Some(streak);
                if streak.1 >= REANCHOR_HYSTERESIS_SLOTS {
                    state.anchor_gs = Some(nearest);
                    state.streak = None;
                    state.committed = None;
                    state.pending = None;
                    registration_slot = true;
                    address_changed = true;
                }
            }
            Some(_) => {
                state.streak = None;
            }
        }

        let anchor_gs = state.anchor_gs.expect("assigned above");
        let gs_ingress = prep.gs_attach[anchor_gs][t];
        let converging = prep.gs_converging[anchor_gs][t];

        // Location update: the ingress satellite (re-)notifies the anchor
        // station until the binding matches. The attempt is charged whether
        // or not it survives the convergence window.
        let effective = state.pending.or(state.committed);
        if effective != Some(ingress) {
            if let Some(gin) = gs_ingress {
                sink.messages.push(MmMessage {
                    kind: if registration_slot {
                        MessageKind::UserRegister
                    } else {
                        MessageKind::UserLocationUpdate
                    },
                    subject: prep.scenario.users[u].id.clone(),
                    ingress,
                    destination_anchor: gin,
                    hop_cost: shell.distance(ingress, gin),
                });
                if !converging {
                    state.pending = Some(ingress);
                }
            }
        }

        let mut slot = UserSlot {
            connected_up: false,
            connected_down: false,
            rtt_ms: None,
            ingress: Some(ingress),
            anchor: Some(AnchorNode::Gs(anchor_gs as u32)),
            address_changed,
            handover,
        };

        let committed = state.committed;
        // Commit this slot's accepted update for the next slot's probes.
        if state.pending.is_some() {
            state.committed = state.pending;
        }

        if registration_slot {
            return slot;
        }
        let Some(gin) = gs_ingress else {
            return slot;
        };

        slot.connected_up = !converging;
        slot.connected_down = !converging && committed == Some(ingress);
        if slot.connected_up && slot.connected_down {
            let down = IslPath {
                nodes: crate::mobility::shortest_segment(gin, ingress, shell),
            };
            let up = IslPath {
                nodes: crate::mobility::shortest_segment(ingress, gin, shell),
            };
            slot.rtt_ms = Some(probe_rtt(prep, &down, &up, anchor_gs, u, t));
        }
        slot
    }
}
