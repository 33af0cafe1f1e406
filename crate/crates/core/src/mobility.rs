//! The protocol core: per-anchor address allocation, location registration
//! and updates for users and ground stations, inter-cluster handover
//! processing, and passing-anchor route computation.
//!
//! Addresses are abstract `(prefix, suffix)` pairs. A user address carries
//! the prefix of exactly the anchor that allocated it, which is what lets an
//! ingress satellite route a packet without waiting for any route
//! recalculation: the prefix names the anchor, the anchor's binding names the
//! destination's current ingress satellite.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ada::ClusterDivision;
use crate::constellation::{SatelliteId, Shell};

#[derive(Debug, Error, PartialEq)]
pub enum MobilityError {
    #[error("ingress {ingress} is outside anchor {anchor}'s cluster")]
    OutsideCluster {
        anchor: SatelliteId,
        ingress: SatelliteId,
    },
    #[error("address {0} is not registered at this anchor")]
    UnknownAddress(NodeAddress),
    #[error("unknown ground station {0}")]
    UnknownGs(String),
    #[error("old and new anchor coincide ({0}); intra-cluster moves are location updates")]
    SameAnchorHandover(SatelliteId),
}

/// Address prefix: the allocating satellite anchor for users, or the
/// operator-assigned block for ground stations (fixed for the whole run).
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum AddressPrefix {
    Anchor(SatelliteId),
    Operator,
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct NodeAddress {
    pub prefix: AddressPrefix,
    pub suffix: u32,
}

impl NodeAddress {
    pub fn gs(index: u32) -> Self {
        Self {
            prefix: AddressPrefix::Operator,
            suffix: index,
        }
    }
}

impl std::fmt::Display for NodeAddress {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.prefix {
            AddressPrefix::Anchor(a) => write!(f, "s{}:{}", a.0, self.suffix),
            AddressPrefix::Operator => write!(f, "op:{}", self.suffix),
        }
    }
}

/// One location record: where a node currently enters the constellation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocationBinding {
    pub node_address: NodeAddress,
    pub ingress: SatelliteId,
    pub updated_at: u32,
}

/// Mobility state held by one satellite anchor: bindings for the users it
/// manages, plus bindings for every ground station in the network.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorState {
    pub anchor: SatelliteId,
    pub user_bindings: BTreeMap<NodeAddress, LocationBinding>,
    pub gs_bindings: BTreeMap<NodeAddress, LocationBinding>,
    next_suffix: u32,
}

impl AnchorState {
    pub fn new(anchor: SatelliteId) -> Self {
        Self {
            anchor,
            user_bindings: BTreeMap::new(),
            gs_bindings: BTreeMap::new(),
            next_suffix: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MessageKind {
    UserRegister,
    UserLocationUpdate,
    GsLocationUpdate,
    AddressGrant,
}

/// A mobility-management control message, delivered over inter-satellite
/// links within the slot it is emitted in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MmMessage {
    pub kind: MessageKind,
    pub subject: String,
    pub ingress: SatelliteId,
    pub destination_anchor: SatelliteId,
    /// Grid distance covered by the message on delivery.
    pub hop_cost: u32,
}

fn in_cluster(division: &ClusterDivision, anchor: SatelliteId, ingress: SatelliteId) -> bool {
    division.anchor_of(ingress) == anchor
}

/// Registers a user at an anchor: allocates a fresh address with the anchor's
/// prefix and records the binding. Emits the registration message and the
/// address grant, each charged the ingress-to-anchor distance.
pub fn register_user(
    state: &mut AnchorState,
    division: &ClusterDivision,
    user: &str,
    ingress: SatelliteId,
    t: u32,
    shell: &Shell,
) -> Result<(NodeAddress, Vec<MmMessage>), MobilityError> {
    if !in_cluster(division, state.anchor, ingress) {
        return Err(MobilityError::OutsideCluster {
            anchor: state.anchor,
            ingress,
        });
    }
    let address = NodeAddress {
        prefix: AddressPrefix::Anchor(state.anchor),
        suffix: state.next_suffix,
    };
    state.next_suffix += 1;
    state.user_bindings.insert(
        address,
        LocationBinding {
            node_address: address,
            ingress,
            updated_at: t,
        },
    );
    let hops = shell.distance(ingress, state.anchor);
    let messages = vec![
        MmMessage {
            kind: MessageKind::UserRegister,
            subject: user.to_string(),
            ingress,
            destination_anchor: state.anchor,
            hop_cost: hops,
        },
        MmMessage {
            kind: MessageKind::AddressGrant,
            subject: user.to_string(),
            ingress,
            destination_anchor: state.anchor,
            hop_cost: hops,
        },
    ];
    Ok((address, messages))
}

/// Intra-cluster location update: replaces the binding's ingress satellite.
/// A no-op update (same ingress) emits no message.
pub fn update_user_location(
    state: &mut AnchorState,
    division: &ClusterDivision,
    address: NodeAddress,
    user: &str,
    new_ingress: SatelliteId,
    t: u32,
    shell: &Shell,
) -> Result<Option<MmMessage>, MobilityError> {
    if !in_cluster(division, state.anchor, new_ingress) {
        return Err(MobilityError::OutsideCluster {
            anchor: state.anchor,
            ingress: new_ingress,
        });
    }
    let binding = state
        .user_bindings
        .get_mut(&address)
        .ok_or(MobilityError::UnknownAddress(address))?;
    if binding.ingress == new_ingress {
        return Ok(None);
    }
    binding.ingress = new_ingress;
    binding.updated_at = t;
    Ok(Some(MmMessage {
        kind: MessageKind::UserLocationUpdate,
        subject: user.to_string(),
        ingress: new_ingress,
        destination_anchor: state.anchor,
        hop_cost: shell.distance(new_ingress, state.anchor),
    }))
}

/// Ground-station location update: every anchor in the network learns the
/// new ingress satellite, one message per anchor.
pub fn update_gs_location(
    anchors: &mut BTreeMap<SatelliteId, AnchorState>,
    gs: &str,
    gs_address: NodeAddress,
    new_ingress: SatelliteId,
    t: u32,
    shell: &Shell,
) -> Result<Vec<MmMessage>, MobilityError> {
    if gs_address.prefix != AddressPrefix::Operator {
        return Err(MobilityError::UnknownGs(gs.to_string()));
    }
    let mut messages = Vec::with_capacity(anchors.len());
    for (anchor, state) in anchors.iter_mut() {
        state.gs_bindings.insert(
            gs_address,
            LocationBinding {
                node_address: gs_address,
                ingress: new_ingress,
                updated_at: t,
            },
        );
        messages.push(MmMessage {
            kind: MessageKind::GsLocationUpdate,
            subject: gs.to_string(),
            ingress: new_ingress,
            destination_anchor: *anchor,
            hop_cost: shell.distance(new_ingress, *anchor),
        });
    }
    Ok(messages)
}

/// Inter-cluster handover: the old binding is removed (deregistration is
/// local and free), the user re-registers at the new anchor and receives a
/// fresh address with the new anchor's prefix.
pub fn inter_cluster_handover(
    old_state: &mut AnchorState,
    new_state: &mut AnchorState,
    division: &ClusterDivision,
    user: &str,
    old_address: NodeAddress,
    new_ingress: SatelliteId,
    t: u32,
    shell: &Shell,
) -> Result<(NodeAddress, Vec<MmMessage>), MobilityError> {
    if old_state.anchor == new_state.anchor {
        return Err(MobilityError::SameAnchorHandover(old_state.anchor));
    }
    if old_state.user_bindings.remove(&old_address).is_none() {
        return Err(MobilityError::UnknownAddress(old_address));
    }
    register_user(new_state, division, user, new_ingress, t, shell)
}

/// An ordered satellite path assembled from two shortest torus segments.
#[derive(Debug, Clone, PartialEq)]
pub struct IslPath {
    pub nodes: Vec<SatelliteId>,
}

impl IslPath {
    pub fn hops(&self) -> u32 {
        (self.nodes.len() - 1) as u32
    }
}

/// One shortest torus walk from `from` to `to`: x steps first, then y, each
/// dimension along its shorter wrap (increasing index on exact ties).
pub fn shortest_segment(from: SatelliteId, to: SatelliteId, shell: &Shell) -> Vec<SatelliteId> {
    let (x_n, y_n) = (shell.num_orbits(), shell.sats_per_orbit());
    let (a, b) = (shell.coord(from), shell.coord(to));
    let mut nodes = vec![from];
    let mut cur = a;
    let step = |cur: u32, tgt: u32, n: u32| -> u32 {
        let fwd = (tgt + n - cur) % n;
        if fwd != 0 && fwd <= n - fwd {
            (cur + 1) % n
        } else {
            (cur + n - 1) % n
        }
    };
    while cur.x != b.x {
        cur.x = step(cur.x, b.x, x_n);
        nodes.push(shell.sat(cur));
    }
    while cur.y != b.y {
        cur.y = step(cur.y, b.y, y_n);
        nodes.push(shell.sat(cur));
    }
    nodes
}

fn concat_segments(first: Vec<SatelliteId>, second: Vec<SatelliteId>) -> IslPath {
    let mut nodes = first;
    nodes.extend_from_slice(&second[1..]);
    IslPath { nodes }
}

/// Downstream passing-anchor route: the ground station's ingress satellite
/// tunnels to the anchor named by the destination address prefix; the anchor
/// tunnels to the ingress satellite in its binding for the user. `None` when
/// the prefix names no anchor or the user has no binding there.
pub fn route_gs_to_user(
    gs_ingress: SatelliteId,
    user_address: NodeAddress,
    anchors: &BTreeMap<SatelliteId, AnchorState>,
    shell: &Shell,
) -> Option<IslPath> {
    let anchor = match user_address.prefix {
        AddressPrefix::Anchor(a) => a,
        AddressPrefix::Operator => return None,
    };
    let state = anchors.get(&anchor)?;
    let binding = state.user_bindings.get(&user_address)?;
    Some(concat_segments(
        shortest_segment(gs_ingress, anchor, shell),
        shortest_segment(anchor, binding.ingress, shell),
    ))
}

/// Upstream passing-anchor route: the user's ingress satellite forwards any
/// non-anchor-allocated destination to its own cluster anchor; that anchor
/// resolves the ground station's current ingress from its bindings. `None`
/// when the destination is not a ground-station address or the binding is
/// missing.
pub fn route_user_to_gs(
    user_ingress: SatelliteId,
    dest_gs_address: NodeAddress,
    division: &ClusterDivision,
    anchors: &BTreeMap<SatelliteId, AnchorState>,
    shell: &Shell,
) -> Option<IslPath> {
    if dest_gs_address.prefix != AddressPrefix::Operator {
        return None;
    }
    let anchor = division.anchor_of(user_ingress);
    let state = anchors.get(&anchor)?;
    let binding = state.gs_bindings.get(&dest_gs_address)?;
    Some(concat_segments(
        shortest_segment(user_ingress, anchor, shell),
        shortest_segment(anchor, binding.ingress, shell),
    ))
}
