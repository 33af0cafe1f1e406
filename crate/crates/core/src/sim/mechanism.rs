//! Mobility-management strategies behind a common trait.
//!
//! Each mechanism owns its protocol state and is driven one slot at a time by
//! the engine. New mechanisms are registered by name in a
//! [`MechanismRegistry`] and selected at runtime from the scenario file or
//! the command line.

use std::collections::BTreeMap;

use crate::ada::ClusterDivision;
use crate::mobility::MmMessage;

use super::{Prepared, RouteFlood, SimError, UserSlot};

/// Everything a mechanism reports for one slot: per-user connectivity plus
/// the control messages it emitted.
#[derive(Debug, Default)]
pub struct SlotSink {
    pub users: Vec<UserSlot>,
    pub messages: Vec<MmMessage>,
    pub route_floods: Vec<RouteFlood>,
}

impl SlotSink {
    pub fn new(num_users: usize) -> Self {
        Self {
            users: Vec::with_capacity(num_users),
            messages: Vec::new(),
            route_floods: Vec::new(),
        }
    }
}

pub trait Mechanism {
    fn name(&self) -> &'static str;

    /// Advances one slot: updates attachments, anchors and bindings, emits
    /// control messages, probes both traffic directions per user.
    fn step(&mut self, t: usize, prep: &Prepared, sink: &mut SlotSink);

    /// The cluster division in force, for mechanisms that have one.
    fn division(&self) -> Option<&ClusterDivision> {
        None
    }
}

pub type MechanismFactory = fn(&Prepared) -> Result<Box<dyn Mechanism>, SimError>;

/// Name-indexed factory table for the available mechanisms.
pub struct MechanismRegistry {
    entries: BTreeMap<&'static str, MechanismFactory>,
}

impl MechanismRegistry {
    pub fn empty() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    /// The registry with the three built-in mechanisms.
    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register("skycastle", super::skycastle::build);
        r.register("ground_anchor", super::ground_anchor::build);
        r.register("fixed_sat_anchor", super::fixed_sat::build);
        r
    }

    pub fn register(&mut self, name: &'static str, factory: MechanismFactory) {
        self.entries.insert(name, factory);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn build(&self, name: &str, prep: &Prepared) -> Result<Box<dyn Mechanism>, SimError> {
        let factory = self
            .entries
            .get(name)
            .ok_or_else(|| SimError::UnknownMechanism(name.to_string()))?;
        factory(prep)
    }
}

impl Default for MechanismRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}
