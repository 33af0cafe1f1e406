//! Satellite-anchor mobility management for LEO mega-constellations.
//!
//! The crate is organized around the pipeline a scenario run goes through:
//!
//! - [`constellation`]: Walker shell generation, +Grid torus distances,
//!   orbit propagation and ground-to-satellite visibility.
//! - [`ada`]: anchor deployment and assignment — cluster pattern discovery,
//!   greedy anchor deployment, per-user anchor assignment, and the
//!   brute-force oracles that certify them on small instances.
//! - [`mobility`]: the protocol core — per-anchor address allocation,
//!   location registration and updates, handover processing, and
//!   passing-anchor route computation.
//! - [`sim`]: the time-slotted engine plus the mobility-management
//!   strategies (satellite clusters, ground anchor, fixed satellite anchor)
//!   behind a common trait, selected by name through a registry.
//! - [`metrics`]: connection uninterrupted ratio, RTT statistics,
//!   IP-change/handover rates and control-overhead decomposition.

pub mod ada;
pub mod constellation;
pub mod metrics;
pub mod mobility;
pub mod sim;
