//! Anchor deployment and assignment.
//!
//! Deciding which satellites carry anchor functionality and which anchor a
//! user follows over time is driven by one objective: maximize the number of
//! consecutive time-slot pairs in which a user stays under the same anchor,
//! subject to a detour budget of `H` extra hops for passing-anchor routes.
//!
//! The pieces:
//!
//! - [`pattern_discovery`]: find a cluster pattern (relative torus offsets)
//!   from the satellites visible to a reference point over a window, keeping
//!   every member within the `2 * D(anchor, member) <= H` detour budget.
//! - [`deploy_anchors`]: greedily tile the whole torus with instances of the
//!   pattern, producing a full partition of satellites into clusters.
//! - [`assign_greedy`]: per-user anchor sequence — keep the current satellite
//!   and cluster as long as possible, otherwise pick the cluster that stays
//!   visible longest. Optimal for a fixed division; certified against
//!   [`assign_bruteforce`] on small instances.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constellation::{GridCoord, SatelliteId, Shell, VisibilityTimeline};

#[derive(Debug, Error, PartialEq)]
pub enum AdaError {
    #[error("assignment timelines have mismatched horizons: {0} vs {1}")]
    MismatchedHorizons(usize, usize),
    #[error("visible union is empty")]
    EmptyVisibleUnion,
    #[error("instance too large for oracle: {0}")]
    OracleBudget(String),
    #[error("invalid cluster division: {0}")]
    InvalidDivision(String),
    #[error("invalid cluster pattern: {0}")]
    InvalidPattern(String),
}

/// Parameters of the anchor manager.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaParams {
    /// Maximum extra hops a passing-anchor route may add over the shortest path.
    pub h: u32,
    /// Number of time slots whose visible-satellite union seeds pattern discovery.
    pub discovery_window: usize,
}

impl AdaParams {
    pub fn validate(&self) -> Result<(), AdaError> {
        if self.discovery_window == 0 {
            return Err(AdaError::InvalidPattern(
                "discovery_window must be >= 1".into(),
            ));
        }
        Ok(())
    }

    /// The default detour budget for a shell: floor((X + Y) / 2).
    pub fn default_h(shell: &Shell) -> u32 {
        (shell.num_orbits() + shell.sats_per_orbit()) / 2
    }
}

/// Reduces a raw coordinate difference to the signed representative with the
/// smallest magnitude on a ring of size `n`, preferring the positive end on
/// an exact half-ring tie.
fn canonical_offset(raw: i64, n: u32) -> i32 {
    let m = raw.rem_euclid(n as i64);
    if 2 * m > n as i64 {
        (m - n as i64) as i32
    } else {
        m as i32
    }
}

/// A cluster shape as relative torus offsets from its anchor.
///
/// Offsets are canonical (`|dx| <= X/2`, `|dy| <= Y/2`, positive on ties),
/// sorted, and always include `(0, 0)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterPattern {
    offsets: Vec<(i32, i32)>,
    built_with_h: u32,
}

impl ClusterPattern {
    pub fn new(mut offsets: Vec<(i32, i32)>, built_with_h: u32) -> Result<Self, AdaError> {
        offsets.sort_unstable();
        offsets.dedup();
        if !offsets.contains(&(0, 0)) {
            return Err(AdaError::InvalidPattern("missing (0, 0) offset".into()));
        }
        for &(dx, dy) in &offsets {
            let d = dx.unsigned_abs() + dy.unsigned_abs();
            if 2 * d > built_with_h {
                return Err(AdaError::InvalidPattern(format!(
                    "offset ({dx}, {dy}) breaks the detour budget H = {built_with_h}"
                )));
            }
        }
        Ok(Self {
            offsets,
            built_with_h,
        })
    }

    pub fn singleton(h: u32) -> Self {
        Self {
            offsets: vec![(0, 0)],
            built_with_h: h,
        }
    }

    pub fn offsets(&self) -> &[(i32, i32)] {
        &self.offsets
    }

    pub fn built_with_h(&self) -> u32 {
        self.built_with_h
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    /// The members of the pattern instance anchored at `anchor`.
    pub fn instance(&self, anchor: GridCoord, shell: &Shell) -> Vec<SatelliteId> {
        let (x_n, y_n) = (shell.num_orbits() as i64, shell.sats_per_orbit() as i64);
        let mut out: Vec<SatelliteId> = self
            .offsets
            .iter()
            .map(|&(dx, dy)| {
                let x = (anchor.x as i64 + dx as i64).rem_euclid(x_n) as u32;
                let y = (anchor.y as i64 + dy as i64).rem_euclid(y_n) as u32;
                shell.sat(GridCoord::new(x, y))
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// A full partition of the shell into anchor-managed clusters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterDivision {
    /// Anchor of each satellite, indexed by satellite id.
    anchor_of: Vec<SatelliteId>,
    /// Members per anchor; the inverse of `anchor_of`.
    clusters: BTreeMap<SatelliteId, Vec<SatelliteId>>,
}

impl ClusterDivision {
    /// Builds and validates a division from the per-satellite anchor map.
    pub fn new(anchor_of: Vec<SatelliteId>, num_sats: u32) -> Result<Self, AdaError> {
        if anchor_of.len() != num_sats as usize {
            return Err(AdaError::InvalidDivision(format!(
                "anchor map covers {} of {num_sats} satellites",
                anchor_of.len()
            )));
        }
        let mut clusters: BTreeMap<SatelliteId, Vec<SatelliteId>> = BTreeMap::new();
        for (i, &a) in anchor_of.iter().enumerate() {
            if a.0 >= num_sats {
                return Err(AdaError::InvalidDivision(format!(
                    "anchor {a} out of range"
                )));
            }
            clusters.entry(a).or_default().push(SatelliteId(i as u32));
        }
        for anchor in clusters.keys() {
            if anchor_of[anchor.0 as usize] != *anchor {
                return Err(AdaError::InvalidDivision(format!(
                    "anchor {anchor} is not a member of its own cluster"
                )));
            }
        }
        Ok(Self { anchor_of, clusters })
    }

    /// Every satellite its own anchor.
    pub fn singletons(num_sats: u32) -> Self {
        Self::new((0..num_sats).map(SatelliteId).collect(), num_sats).unwrap()
    }

    pub fn anchor_of(&self, sat: SatelliteId) -> SatelliteId {
        self.anchor_of[sat.0 as usize]
    }

    pub fn num_sats(&self) -> u32 {
        self.anchor_of.len() as u32
    }

    pub fn anchors(&self) -> impl Iterator<Item = SatelliteId> + '_ {
        self.clusters.keys().copied()
    }

    pub fn num_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn members(&self, anchor: SatelliteId) -> &[SatelliteId] {
        self.clusters
            .get(&anchor)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn clusters(&self) -> &BTreeMap<SatelliteId, Vec<SatelliteId>> {
        &self.clusters
    }
}

/// Per-slot `(ingress, anchor)` choices for one user; `None` while the user
/// has no connection.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentTimeline {
    pub slots: Vec<Option<(SatelliteId, SatelliteId)>>,
}

impl AssignmentTimeline {
    pub fn horizon(&self) -> usize {
        self.slots.len()
    }

    pub fn ingress(&self, k: usize) -> Option<SatelliteId> {
        self.slots[k].map(|(i, _)| i)
    }

    pub fn anchor(&self, k: usize) -> Option<SatelliteId> {
        self.slots[k].map(|(_, a)| a)
    }
}

/// The objective: the number of `(user, slot)` pairs `k >= 1` where the user
/// is connected in both `k-1` and `k` and both ingress satellites are managed
/// by the same anchor.
pub fn objective_value(
    assignments: &[AssignmentTimeline],
    division: &ClusterDivision,
) -> Result<u64, AdaError> {
    let mut total = 0u64;
    let horizon = assignments.first().map_or(0, |a| a.horizon());
    for tl in assignments {
        if tl.horizon() != horizon {
            return Err(AdaError::MismatchedHorizons(horizon, tl.horizon()));
        }
        for k in 1..tl.horizon() {
            if let (Some((prev, _)), Some((cur, _))) = (tl.slots[k - 1], tl.slots[k]) {
                if division.anchor_of(prev) == division.anchor_of(cur) {
                    total += 1;
                }
            }
        }
    }
    Ok(total)
}

/// Worst-case extra hops when any satellite routes to `member` through
/// `anchor`: `2 * D(anchor, member)`.
pub fn detour_bound(member: GridCoord, anchor: GridCoord, shell: &Shell) -> u32 {
    2 * crate::constellation::grid_distance(
        member,
        anchor,
        shell.num_orbits(),
        shell.sats_per_orbit(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DelayWitness {
    pub member: SatelliteId,
    pub anchor: SatelliteId,
    /// `H - 2 * D(anchor, member)`; negative when the constraint is violated.
    pub slack: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DelayAudit {
    pub pass: bool,
    /// The member with the least slack (the binding or violating case).
    pub worst: Option<DelayWitness>,
}

/// Checks the detour constraint for a division: routing to any member through
/// its anchor must cost at most `H` hops over the shortest path. The
/// worst-case over source satellites is exactly `2 * D(anchor, member)`, so
/// only anchor-to-member distances need checking.
pub fn check_delay_constraint(division: &ClusterDivision, h: u32, shell: &Shell) -> DelayAudit {
    let mut worst: Option<DelayWitness> = None;
    for sat in shell.all_sats() {
        let anchor = division.anchor_of(sat);
        let slack = h as i64 - detour_bound(shell.coord(sat), shell.coord(anchor), shell) as i64;
        if worst.map_or(true, |w| slack < w.slack) {
            worst = Some(DelayWitness {
                member: sat,
                anchor,
                slack,
            });
        }
    }
    DelayAudit {
        pass: worst.map_or(true, |w| w.slack >= 0),
        worst,
    }
}

/// Pattern discovery: scans every candidate anchor in the visible union,
/// collects the union members within the detour budget, and keeps the
/// largest candidate cluster, returned as offsets from its anchor.
///
/// Size ties are broken by the lexicographically smallest canonical offset
/// set, which keeps the result invariant under torus translation of the
/// union; among candidates with identical offsets the lowest satellite id
/// wins.
pub fn pattern_discovery(
    visible_union: &[SatelliteId],
    h: u32,
    shell: &Shell,
) -> Result<ClusterPattern, AdaError> {
    pattern_discovery_with_anchor(visible_union, h, shell).map(|(p, _)| p)
}

/// Like [`pattern_discovery`], also reporting the winning anchor.
pub fn pattern_discovery_with_anchor(
    visible_union: &[SatelliteId],
    h: u32,
    shell: &Shell,
) -> Result<(ClusterPattern, SatelliteId), AdaError> {
    let mut union: Vec<SatelliteId> = visible_union.to_vec();
    union.sort_unstable();
    union.dedup();
    if union.is_empty() {
        return Err(AdaError::EmptyVisibleUnion);
    }
    let (x_n, y_n) = (shell.num_orbits(), shell.sats_per_orbit());
    let mut best: Option<(Vec<(i32, i32)>, SatelliteId)> = None;
    for &cand in &union {
        let c = shell.coord(cand);
        let mut offsets: Vec<(i32, i32)> = union
            .iter()
            .filter(|&&s| 2 * shell.distance(s, cand) <= h)
            .map(|&s| {
                let m = shell.coord(s);
                (
                    canonical_offset(m.x as i64 - c.x as i64, x_n),
                    canonical_offset(m.y as i64 - c.y as i64, y_n),
                )
            })
            .collect();
        offsets.sort_unstable();
        let better = match &best {
            None => true,
            Some((b, _)) => offsets.len() > b.len() || (offsets.len() == b.len() && offsets < *b),
        };
        if better {
            best = Some((offsets, cand));
        }
    }
    let (offsets, anchor) = best.expect("non-empty union");
    Ok((ClusterPattern::new(offsets, h)?, anchor))
}

/// Greedy anchor deployment: repeatedly pick the still-uncovered satellite
/// whose pattern instance contains the most uncovered satellites (lowest id
/// on ties) and assign those uncovered satellites to it, until the whole
/// shell is partitioned. Only uncovered satellites are assigned, so earlier
/// clusters are never broken up.
pub fn deploy_anchors(shell: &Shell, pattern: &ClusterPattern) -> ClusterDivision {
    let n = shell.num_sats();
    let mut anchor_of: Vec<Option<SatelliteId>> = vec![None; n as usize];
    let mut remaining = n;
    while remaining > 0 {
        let mut best: Option<(u32, SatelliteId)> = None;
        for cand in shell.all_sats() {
            if anchor_of[cand.0 as usize].is_some() {
                continue;
            }
            let overlap = pattern
                .instance(shell.coord(cand), shell)
                .iter()
                .filter(|s| anchor_of[s.0 as usize].is_none())
                .count() as u32;
            if best.map_or(true, |(b, _)| overlap > b) {
                best = Some((overlap, cand));
            }
        }
        let (_, anchor) = best.expect("uncovered satellites remain");
        for member in pattern.instance(shell.coord(anchor), shell) {
            let slot = &mut anchor_of[member.0 as usize];
            if slot.is_none() {
                *slot = Some(anchor);
                remaining -= 1;
            }
        }
    }
    let anchor_of: Vec<SatelliteId> = anchor_of.into_iter().map(Option::unwrap).collect();
    ClusterDivision::new(anchor_of, n).expect("greedy cover yields a valid partition")
}

/// Length of the run of consecutive slots, starting at `k`, in which `sat`
/// stays visible.
fn sat_run(timeline: &VisibilityTimeline, sat: SatelliteId, k: usize) -> usize {
    let mut len = 0;
    while k + len < timeline.horizon() && timeline.is_visible(sat, k + len) {
        len += 1;
    }
    len
}

fn cluster_visible_at(
    timeline: &VisibilityTimeline,
    division: &ClusterDivision,
    anchor: SatelliteId,
    k: usize,
) -> bool {
    timeline
        .visible_at(k)
        .iter()
        .any(|&s| division.anchor_of(s) == anchor)
}

/// Length of the run of consecutive slots, starting at `k`, in which at
/// least one member of `anchor`'s cluster stays visible.
fn cluster_run(
    timeline: &VisibilityTimeline,
    division: &ClusterDivision,
    anchor: SatelliteId,
    k: usize,
) -> usize {
    let mut len = 0;
    while k + len < timeline.horizon() && cluster_visible_at(timeline, division, anchor, k + len) {
        len += 1;
    }
    len
}

/// Among the cluster members visible at `k`, the one that stays visible
/// longest; lowest id on ties.
fn choose_member(
    timeline: &VisibilityTimeline,
    division: &ClusterDivision,
    anchor: SatelliteId,
    k: usize,
) -> SatelliteId {
    let mut best: Option<(usize, SatelliteId)> = None;
    for &s in timeline.visible_at(k) {
        if division.anchor_of(s) != anchor {
            continue;
        }
        let run = sat_run(timeline, s, k);
        if best.map_or(true, |(b, _)| run > b) {
            best = Some((run, s));
        }
    }
    best.expect("cluster member visible").1
}

/// Greedy anchor assignment for one user:
///
/// 1. keep the current ingress satellite while it stays visible;
/// 2. otherwise stay in the current cluster, moving to the member that will
///    remain visible longest;
/// 3. otherwise (including the first slot and after coverage gaps) pick the
///    cluster that stays visible for the most consecutive slots from here,
///    lowest anchor id on ties;
/// 4. with nothing visible, record no connection.
pub fn assign_greedy(
    timeline: &VisibilityTimeline,
    division: &ClusterDivision,
) -> AssignmentTimeline {
    let mut slots = Vec::with_capacity(timeline.horizon());
    let mut current: Option<(SatelliteId, SatelliteId)> = None;
    for k in 0..timeline.horizon() {
        if timeline.visible_at(k).is_empty() {
            current = None;
            slots.push(None);
            continue;
        }
        current = match current {
            Some((ingress, anchor)) if timeline.is_visible(ingress, k) => {
                Some((ingress, anchor))
            }
            Some((_, anchor)) if cluster_visible_at(timeline, division, anchor, k) => {
                Some((choose_member(timeline, division, anchor, k), anchor))
            }
            _ => {
                // Pick a fresh cluster by longest contiguous visibility.
                let mut anchors: Vec<SatelliteId> = timeline
                    .visible_at(k)
                    .iter()
                    .map(|&s| division.anchor_of(s))
                    .collect();
                anchors.sort_unstable();
                anchors.dedup();
                let mut best: Option<(usize, SatelliteId)> = None;
                for a in anchors {
                    let run = cluster_run(timeline, division, a, k);
                    if best.map_or(true, |(b, _)| run > b) {
                        best = Some((run, a));
                    }
                }
                let anchor = best.expect("non-empty visibility").1;
                Some((choose_member(timeline, division, anchor, k), anchor))
            }
        };
        slots.push(current);
    }
    AssignmentTimeline { slots }
}

/// Exhaustive single-user assignment oracle: maximizes the objective over
/// every feasible `(ingress, anchor)` sequence by memoized search over the
/// previous slot's anchor. Exact but budget-limited; used in tests to certify
/// [`assign_greedy`].
pub fn assign_bruteforce(
    timeline: &VisibilityTimeline,
    division: &ClusterDivision,
) -> Result<AssignmentTimeline, AdaError> {
    const MAX_SLOTS: usize = 12;
    const MAX_VISIBLE: usize = 6;
    if timeline.horizon() > MAX_SLOTS {
        return Err(AdaError::OracleBudget(format!(
            "{} slots exceeds the {MAX_SLOTS}-slot budget",
            timeline.horizon()
        )));
    }
    if let Some(worst) = timeline.slots.iter().map(Vec::len).max() {
        if worst > MAX_VISIBLE {
            return Err(AdaError::OracleBudget(format!(
                "{worst} visible satellites exceeds the {MAX_VISIBLE}-satellite budget"
            )));
        }
    }

    // Choices per slot: one anchor per visible cluster, or stay disconnected.
    let choices: Vec<Vec<Option<SatelliteId>>> = timeline
        .slots
        .iter()
        .map(|vis| {
            let mut anchors: Vec<Option<SatelliteId>> =
                vis.iter().map(|&s| Some(division.anchor_of(s))).collect();
            anchors.sort_unstable();
            anchors.dedup();
            anchors.push(None);
            anchors
        })
        .collect();

    type Memo = BTreeMap<(usize, Option<SatelliteId>), u64>;
    fn search(
        k: usize,
        prev: Option<SatelliteId>,
        choices: &[Vec<Option<SatelliteId>>],
        memo: &mut Memo,
    ) -> u64 {
        if k == choices.len() {
            return 0;
        }
        if let Some(&v) = memo.get(&(k, prev)) {
            return v;
        }
        let mut best = 0;
        for &choice in &choices[k] {
            let pair = u64::from(choice.is_some() && choice == prev);
            best = best.max(pair + search(k + 1, choice, choices, memo));
        }
        memo.insert((k, prev), best);
        best
    }

    let mut memo = Memo::new();
    let mut slots = Vec::with_capacity(timeline.horizon());
    let mut prev: Option<SatelliteId> = None;
    for k in 0..timeline.horizon() {
        // Reconstruct one optimal sequence choice by choice.
        let mut best: Option<(u64, Option<SatelliteId>)> = None;
        for &choice in &choices[k] {
            let pair = u64::from(choice.is_some() && choice == prev);
            let total = pair + search(k + 1, choice, &choices, &mut memo);
            if best.map_or(true, |(b, _)| total > b) {
                best = Some((total, choice));
            }
        }
        let choice = best.expect("at least the disconnected choice exists").1;
        slots.push(choice.map(|anchor| {
            let ingress = timeline
                .visible_at(k)
                .iter()
                .copied()
                .find(|&s| division.anchor_of(s) == anchor)
                .expect("anchor choice came from the visible set");
            (ingress, anchor)
        }));
        prev = choice;
    }
    Ok(AssignmentTimeline { slots })
}

/// The weight of a candidate cluster: total visible `(user, member, slot)`
/// triples, minus one.
pub fn candidate_cluster_weight(
    candidate: &[SatelliteId],
    timelines: &[VisibilityTimeline],
) -> i64 {
    let mut total: i64 = 0;
    for tl in timelines {
        for k in 0..tl.horizon() {
            for &p in candidate {
                if tl.is_visible(p, k) {
                    total += 1;
                }
            }
        }
    }
    total - 1
}
