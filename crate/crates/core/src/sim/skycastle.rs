//! Satellite-cluster mobility management.
//!
//! Anchors live on satellites chosen by pattern discovery and greedy
//! deployment; users follow the greedy anchor assignment. Location updates
//! travel over stable inter-satellite links and commit within their slot, so
//! intra-cluster handovers never interrupt traffic; ground-station moves are
//! broadcast to every anchor, which is what removes route convergence from
//! both traffic directions.

use std::collections::BTreeMap;

use crate::ada::{
    assign_greedy, deploy_anchors, pattern_discovery, AssignmentTimeline, ClusterDivision,
};
use crate::constellation::SatelliteId;
use crate::mobility::{
    inter_cluster_handover, register_user, route_gs_to_user, route_user_to_gs,
    update_gs_location, update_user_location, AnchorState, NodeAddress,
};

use super::mechanism::{Mechanism, SlotSink};
use super::{probe_rtt, AnchorNode, Prepared, SimError, UserSlot};

pub(super) fn build(prep: &Prepared) -> Result<Box<dyn Mechanism>, SimError> {
    let pattern = pattern_discovery(&prep.reference_union, prep.scenario.ada.h, &prep.shell)?;
    let division = deploy_anchors(&prep.shell, &pattern);
    Ok(Box::new(SkyCastle::with_division(prep, division)))
}

#[derive(Clone)]
struct UserState {
    address: Option<NodeAddress>,
    registered_anchor: Option<SatelliteId>,
    last_ingress: Option<SatelliteId>,
}

pub struct SkyCastle {
    division: ClusterDivision,
    assignments: Vec<AssignmentTimeline>,
    anchors: BTreeMap<SatelliteId, AnchorState>,
    users: Vec<UserState>,
    /// Last ingress broadcast per ground station; a differing attachment
    /// triggers the all-anchors update.
    gs_known_ingress: Vec<Option<SatelliteId>>,
}

impl SkyCastle {
    /// Builds the mechanism over an explicit division instead of the
    /// discovered one.
    pub fn with_division(prep: &Prepared, division: ClusterDivision) -> Self {
        let assignments: Vec<AssignmentTimeline> = prep
            .user_timelines
            .iter()
            .map(|tl| assign_greedy(tl, &division))
            .collect();
        let anchors: BTreeMap<SatelliteId, AnchorState> = division
            .anchors()
            .map(|a| (a, AnchorState::new(a)))
            .collect();
        let users = vec![
            UserState {
                address: None,
                registered_anchor: None,
                last_ingress: None,
            };
            prep.num_users()
        ];
        SkyCastle {
            division,
            assignments,
            anchors,
            users,
            gs_known_ingress: vec![None; prep.num_gs()],
        }
    }
}

impl Mechanism for SkyCastle {
    fn name(&self) -> &'static str {
        "skycastle"
    }

    fn division(&self) -> Option<&ClusterDivision> {
        Some(&self.division)
    }

    fn step(&mut self, t: usize, prep: &Prepared, sink: &mut SlotSink) {
        let shell = &prep.shell;

        // Ground-station location management: broadcast on first attachment
        // and on every ingress change.
        for g in 0..prep.num_gs() {
            if let Some(ingress) = prep.gs_attach[g][t] {
                if self.gs_known_ingress[g] != Some(ingress) {
                    let msgs = update_gs_location(
                        &mut self.anchors,
                        &prep.scenario.gs[g].id,
                        NodeAddress::gs(g as u32),
                        ingress,
                        t as u32,
                        shell,
                    )
                    .expect("gs addresses are operator-assigned");
                    sink.messages.extend(msgs);
                    self.gs_known_ingress[g] = Some(ingress);
                }
            }
        }

        for u in 0..prep.num_users() {
            let slot = self.step_user(u, t, prep, sink);
            sink.users.push(slot);
        }
    }
}

impl SkyCastle {
    fn step_user(&mut self, u: usize, t: usize, prep: &Prepared, sink: &mut SlotSink) -> UserSlot {
        let shell = &prep.shell;
        let user_id = &prep.scenario.users[u].id;

        let Some((ingress, anchor)) = self.assignments[u].slots[t] else {
            return UserSlot::disconnected();
        };

        let handover =
            self.users[u].last_ingress.is_some() && self.users[u].last_ingress != Some(ingress);
        self.users[u].last_ingress = Some(ingress);

        let mut registration_slot = false;
        let mut address_changed = false;

        match (self.users[u].address, self.users[u].registered_anchor) {
            (None, _) => {
                let state = self.anchors.get_mut(&anchor).expect("anchor deployed");
                let (address, msgs) =
                    register_user(state, &self.division, user_id, ingress, t as u32, shell)
                        .expect("assignment stays within the division");
                sink.messages.extend(msgs);
                registration_slot = true;
                self.users[u].address = Some(address);
                self.users[u].registered_anchor = Some(anchor);
            }
            (Some(address), Some(current)) if current == anchor => {
                let state = self.anchors.get_mut(&anchor).expect("anchor deployed");
                let msg = update_user_location(
                    state,
                    &self.division,
                    address,
                    user_id,
                    ingress,
                    t as u32,
                    shell,
                )
                .expect("assignment stays within the division");
                sink.messages.extend(msg);
            }
            (Some(address), Some(old)) => {
                let mut old_state = self.anchors.remove(&old).expect("anchor deployed");
                let new_state = self.anchors.get_mut(&anchor).expect("anchor deployed");
                let (new_address, msgs) = inter_cluster_handover(
                    &mut old_state,
                    new_state,
                    &self.division,
                    user_id,
                    address,
                    ingress,
                    t as u32,
                    shell,
                )
                .expect("distinct anchors by construction");
                self.anchors.insert(old, old_state);
                sink.messages.extend(msgs);
                self.users[u].address = Some(new_address);
                self.users[u].registered_anchor = Some(anchor);
                registration_slot = true;
                address_changed = true;
            }
            (Some(_), None) => unreachable!("address implies a registered anchor"),
        }

        let mut slot = UserSlot {
            connected_up: false,
            connected_down: false,
            rtt_ms: None,
            ingress: Some(ingress),
            anchor: Some(AnchorNode::Sat(anchor)),
            address_changed,
            handover,
        };
        if registration_slot {
            // Conservative accounting: the slot that (re-)registers a user
            // counts as interrupted.
            return slot;
        }

        let gs_idx = prep.user_dest_gs[u];
        let gs_ingress = prep.gs_attach[gs_idx][t];
        let address = self.users[u].address.expect("registered above");
        let down = gs_ingress.and_then(|gin| route_gs_to_user(gin, address, &self.anchors, shell));
        let up = if gs_ingress.is_some() {
            route_user_to_gs(
                ingress,
                NodeAddress::gs(gs_idx as u32),
                &self.division,
                &self.anchors,
                shell,
            )
        } else {
            None
        };
        slot.connected_down = down.is_some();
        slot.connected_up = up.is_some();
        if let (Some(down), Some(up)) = (down, up) {
            slot.rtt_ms = Some(probe_rtt(prep, &down, &up, gs_idx, u, t));
        }
        slot
    }
}
