//! Evaluation quantities computed from run logs: connection uninterrupted
//! ratio per direction, RTT statistics, IP-change and handover rates, and
//! control-overhead decomposition.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::sim::SlotRecord;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("empty run log")]
    EmptyLog,
    #[error("summaries come from mismatched scenarios: {0}")]
    MismatchedScenarios(String),
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SummarizeOptions {
    /// Skip each user's slots before its first fully connected slot, so
    /// registration warm-up does not count against the ratios.
    pub exclude_warmup: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RttStats {
    pub mean: f64,
    pub p50: f64,
    pub p95: f64,
    pub max: f64,
    /// Per-slot mean over connected users; `None` where nothing was connected.
    pub timeseries: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UserMetrics {
    pub user: String,
    pub cur_up: f64,
    pub cur_down: f64,
    pub ip_changes_per_hour: f64,
    pub handovers_per_hour: f64,
    pub rtt_mean: f64,
    pub rtt_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverheadSummary {
    pub location_hops_per_sec: f64,
    pub route_hops_per_sec: f64,
}

impl OverheadSummary {
    pub fn total_hops_per_sec(&self) -> f64 {
        self.location_hops_per_sec + self.route_hops_per_sec
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsSummary {
    pub horizon_slots: usize,
    pub slot_seconds: f64,
    pub cur_up: f64,
    pub cur_down: f64,
    pub rtt: RttStats,
    /// Address changes per hour, totaled across users.
    pub ip_changes_per_hour: f64,
    /// Ingress-satellite switches per hour, totaled across users.
    pub handovers_per_hour: f64,
    pub overhead: OverheadSummary,
    pub per_user: Vec<UserMetrics>,
}

/// Index into a sorted sample for quantile `q`: the smallest value with at
/// least a `q` fraction of the sample at or below it.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

pub fn summarize(
    slots: &[SlotRecord],
    slot_seconds: f64,
    user_ids: &[String],
    opts: SummarizeOptions,
) -> Result<MetricsSummary, MetricsError> {
    if slots.is_empty() {
        return Err(MetricsError::EmptyLog);
    }
    let horizon = slots.len();
    let num_users = user_ids.len();
    let hours = horizon as f64 * slot_seconds / 3600.0;

    let mut per_user = Vec::with_capacity(num_users);
    let mut all_rtts: Vec<f64> = Vec::new();
    let mut total_ip_changes = 0u64;
    let mut total_handovers = 0u64;
    for (u, id) in user_ids.iter().enumerate() {
        let start = if opts.exclude_warmup {
            slots
                .iter()
                .position(|s| s.users[u].connected_up && s.users[u].connected_down)
                .unwrap_or(horizon)
        } else {
            0
        };
        let denom = (horizon - start).max(1) as f64;
        let mut up = 0u64;
        let mut down = 0u64;
        let mut ip_changes = 0u64;
        let mut handovers = 0u64;
        let mut rtts: Vec<f64> = Vec::new();
        for s in &slots[start..] {
            let rec = &s.users[u];
            up += u64::from(rec.connected_up);
            down += u64::from(rec.connected_down);
            ip_changes += u64::from(rec.address_changed);
            handovers += u64::from(rec.handover);
            if let Some(r) = rec.rtt_ms {
                rtts.push(r);
            }
        }
        total_ip_changes += ip_changes;
        total_handovers += handovers;
        let (mean, max) = if rtts.is_empty() {
            (f64::NAN, f64::NAN)
        } else {
            (
                rtts.iter().sum::<f64>() / rtts.len() as f64,
                rtts.iter().fold(f64::MIN, |a, &b| a.max(b)),
            )
        };
        per_user.push(UserMetrics {
            user: id.clone(),
            cur_up: up as f64 / denom,
            cur_down: down as f64 / denom,
            ip_changes_per_hour: ip_changes as f64 / hours,
            handovers_per_hour: handovers as f64 / hours,
            rtt_mean: mean,
            rtt_max: max,
        });
        all_rtts.extend(rtts);
    }

    let cur_up = if per_user.is_empty() {
        0.0
    } else {
        per_user.iter().map(|m| m.cur_up).sum::<f64>() / per_user.len() as f64
    };
    let cur_down = if per_user.is_empty() {
        0.0
    } else {
        per_user.iter().map(|m| m.cur_down).sum::<f64>() / per_user.len() as f64
    };

    let timeseries: Vec<Option<f64>> = slots
        .iter()
        .map(|s| {
            let vals: Vec<f64> = s.users.iter().filter_map(|r| r.rtt_ms).collect();
            if vals.is_empty() {
                None
            } else {
                Some(vals.iter().sum::<f64>() / vals.len() as f64)
            }
        })
        .collect();
    all_rtts.sort_by(f64::total_cmp);
    let rtt = RttStats {
        mean: if all_rtts.is_empty() {
            f64::NAN
        } else {
            all_rtts.iter().sum::<f64>() / all_rtts.len() as f64
        },
        p50: percentile(&all_rtts, 0.50),
        p95: percentile(&all_rtts, 0.95),
        max: all_rtts.last().copied().unwrap_or(f64::NAN),
        timeseries,
    };

    let secs = horizon as f64 * slot_seconds;
    let overhead = OverheadSummary {
        location_hops_per_sec: slots.iter().map(|s| s.location_hops).sum::<u64>() as f64 / secs,
        route_hops_per_sec: slots.iter().map(|s| s.route_hops).sum::<u64>() as f64 / secs,
    };

    Ok(MetricsSummary {
        horizon_slots: horizon,
        slot_seconds,
        cur_up,
        cur_down,
        rtt,
        ip_changes_per_hour: total_ip_changes as f64 / hours,
        handovers_per_hour: total_handovers as f64 / hours,
        overhead,
        per_user,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRow {
    pub metric: String,
    pub values: BTreeMap<String, f64>,
    /// Value minus the cluster mechanism's value, per mechanism.
    pub delta_vs_skycastle: BTreeMap<String, f64>,
    /// Value over the cluster mechanism's value, per mechanism.
    pub ratio_vs_skycastle: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    /// Violated qualitative-ordering expectations, empty when all hold.
    pub violations: Vec<String>,
}

fn row(metric: &str, values: BTreeMap<String, f64>) -> ComparisonRow {
    let base = values.get("skycastle").copied();
    let delta_vs_skycastle = values
        .iter()
        .map(|(k, v)| (k.clone(), base.map_or(f64::NAN, |b| v - b)))
        .collect();
    let ratio_vs_skycastle = values
        .iter()
        .map(|(k, v)| (k.clone(), base.map_or(f64::NAN, |b| v / b)))
        .collect();
    ComparisonRow {
        metric: metric.to_string(),
        values,
        delta_vs_skycastle,
        ratio_vs_skycastle,
    }
}

/// Cross-mechanism comparison over one scenario, with the qualitative
/// orderings the cluster mechanism is expected to win checked explicitly.
pub fn compare(
    summaries: &BTreeMap<String, MetricsSummary>,
) -> Result<Comparison, MetricsError> {
    let mut it = summaries.values();
    if let Some(first) = it.next() {
        for s in it {
            if s.horizon_slots != first.horizon_slots || s.slot_seconds != first.slot_seconds {
                return Err(MetricsError::MismatchedScenarios(format!(
                    "horizon {}x{}s vs {}x{}s",
                    first.horizon_slots, first.slot_seconds, s.horizon_slots, s.slot_seconds
                )));
            }
        }
    }
    let pick = |f: fn(&MetricsSummary) -> f64| -> BTreeMap<String, f64> {
        summaries.iter().map(|(k, s)| (k.clone(), f(s))).collect()
    };
    let rows = vec![
        row("cur_up", pick(|s| s.cur_up)),
        row("cur_down", pick(|s| s.cur_down)),
        row("rtt_mean_ms", pick(|s| s.rtt.mean)),
        row("rtt_p50_ms", pick(|s| s.rtt.p50)),
        row("rtt_p95_ms", pick(|s| s.rtt.p95)),
        row("rtt_max_ms", pick(|s| s.rtt.max)),
        row("ip_changes_per_hour", pick(|s| s.ip_changes_per_hour)),
        row("handovers_per_hour", pick(|s| s.handovers_per_hour)),
        row(
            "location_overhead_hops_per_sec",
            pick(|s| s.overhead.location_hops_per_sec),
        ),
        row(
            "route_overhead_hops_per_sec",
            pick(|s| s.overhead.route_hops_per_sec),
        ),
    ];

    let mut violations = Vec::new();
    let sky = summaries.get("skycastle");
    let ground = summaries.get("ground_anchor");
    let fixed = summaries.get("fixed_sat_anchor");
    if let (Some(sky), Some(fixed)) = (sky, fixed) {
        if !(sky.cur_down > fixed.cur_down) {
            violations.push(format!(
                "cur_down: skycastle {:.6} not above fixed_sat_anchor {:.6}",
                sky.cur_down, fixed.cur_down
            ));
        }
    }
    if let (Some(fixed), Some(ground)) = (fixed, ground) {
        if !(fixed.cur_down >= ground.cur_down) {
            violations.push(format!(
                "cur_down: fixed_sat_anchor {:.6} below ground_anchor {:.6}",
                fixed.cur_down, ground.cur_down
            ));
        }
    }
    if let (Some(sky), Some(ground)) = (sky, ground) {
        if !(sky.cur_up > ground.cur_up) {
            violations.push(format!(
                "cur_up: skycastle {:.6} not above ground_anchor {:.6}",
                sky.cur_up, ground.cur_up
            ));
        }
        if !(sky.ip_changes_per_hour <= 0.5 * ground.ip_changes_per_hour) {
            violations.push(format!(
                "ip_changes_per_hour: skycastle {:.6} above half of ground_anchor {:.6}",
                sky.ip_changes_per_hour, ground.ip_changes_per_hour
            ));
        }
        if !(sky.handovers_per_hour < ground.handovers_per_hour) {
            violations.push(format!(
                "handovers_per_hour: skycastle {:.6} not below ground_anchor {:.6}",
                sky.handovers_per_hour, ground.handovers_per_hour
            ));
        }
    }
    if let Some(fixed) = fixed {
        if fixed.ip_changes_per_hour != 0.0 {
            violations.push(format!(
                "ip_changes_per_hour: fixed_sat_anchor {:.6} expected exactly 0",
                fixed.ip_changes_per_hour
            ));
        }
    }
    if let Some(sky) = sky {
        if sky.overhead.route_hops_per_sec != 0.0 {
            violations.push(format!(
                "route_overhead: skycastle {:.6} expected exactly 0",
                sky.overhead.route_hops_per_sec
            ));
        }
    }
    Ok(Comparison { rows, violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::SatelliteId;
    use crate::sim::{AnchorNode, UserSlot};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn slot(t: u32, users: Vec<UserSlot>, location: u64, route: u64) -> SlotRecord {
        SlotRecord {
            t,
            users,
            location_hops: location,
            route_hops: route,
        }
    }

    fn connected(rtt: f64) -> UserSlot {
        UserSlot {
            connected_up: true,
            connected_down: true,
            rtt_ms: Some(rtt),
            ingress: Some(SatelliteId(1)),
            anchor: Some(AnchorNode::Sat(SatelliteId(1))),
            address_changed: false,
            handover: false,
        }
    }

    #[test]
    fn all_connected_log_has_unit_cur() {
        let slots: Vec<SlotRecord> = (0..10)
            .map(|t| slot(t, vec![connected(20.0)], 0, 0))
            .collect();
        let s = summarize(&slots, 1.0, &["u".into()], SummarizeOptions::default()).unwrap();
        assert_eq!(s.cur_up, 1.0);
        assert_eq!(s.cur_down, 1.0);
        assert_eq!(s.rtt.mean, 20.0);
        assert_eq!(s.rtt.p50, 20.0);
    }

    #[test]
    fn two_address_changes_in_an_hour_is_two_per_hour() {
        let mut slots: Vec<SlotRecord> = (0..3600)
            .map(|t| slot(t, vec![connected(20.0)], 0, 0))
            .collect();
        slots[100].users[0].address_changed = true;
        slots[2000].users[0].address_changed = true;
        let s = summarize(&slots, 1.0, &["u".into()], SummarizeOptions::default()).unwrap();
        assert!((s.ip_changes_per_hour - 2.0).abs() < 1e-12);
    }

    #[test]
    fn empty_log_is_an_error() {
        assert_eq!(
            summarize(&[], 1.0, &[], SummarizeOptions::default()).unwrap_err(),
            MetricsError::EmptyLog
        );
    }

    #[test]
    fn warmup_exclusion_skips_leading_disconnection() {
        let mut slots: Vec<SlotRecord> = (0..10)
            .map(|t| slot(t, vec![connected(20.0)], 0, 0))
            .collect();
        slots[0].users[0] = UserSlot::disconnected();
        let plain = summarize(&slots, 1.0, &["u".into()], SummarizeOptions::default()).unwrap();
        assert!((plain.cur_down - 0.9).abs() < 1e-12);
        let warm = summarize(
            &slots,
            1.0,
            &["u".into()],
            SummarizeOptions {
                exclude_warmup: true,
            },
        )
        .unwrap();
        assert_eq!(warm.cur_down, 1.0);
    }

    /// A second, from-scratch streaming implementation of the summary; the
    /// dual-implementation oracle for `summarize`.
    fn summarize_streaming(
        slots: &[SlotRecord],
        slot_seconds: f64,
        num_users: usize,
    ) -> (f64, f64, f64, f64, f64, f64, f64) {
        let mut up = vec![0u64; num_users];
        let mut down = vec![0u64; num_users];
        let mut changes = 0u64;
        let mut handovers = 0u64;
        let mut rtts = Vec::new();
        let mut loc = 0u64;
        let mut route = 0u64;
        for s in slots {
            loc += s.location_hops;
            route += s.route_hops;
            for (u, rec) in s.users.iter().enumerate() {
                if rec.connected_up {
                    up[u] += 1;
                }
                if rec.connected_down {
                    down[u] += 1;
                }
                if rec.address_changed {
                    changes += 1;
                }
                if rec.handover {
                    handovers += 1;
                }
                if let Some(r) = rec.rtt_ms {
                    rtts.push(r);
                }
            }
        }
        let t = slots.len() as f64;
        let hours = t * slot_seconds / 3600.0;
        let cur_up = up.iter().map(|&c| c as f64 / t).sum::<f64>() / num_users as f64;
        let cur_down = down.iter().map(|&c| c as f64 / t).sum::<f64>() / num_users as f64;
        rtts.sort_by(f64::total_cmp);
        let mean = rtts.iter().sum::<f64>() / rtts.len().max(1) as f64;
        (
            cur_up,
            cur_down,
            mean,
            changes as f64 / hours,
            handovers as f64 / hours,
            loc as f64 / (t * slot_seconds),
            route as f64 / (t * slot_seconds),
        )
    }

    #[test]
    fn summary_matches_streaming_oracle_on_random_logs() {
        let mut rng = StdRng::seed_from_u64(19);
        for _ in 0..25 {
            let num_users = rng.random_range(1..4usize);
            let horizon = rng.random_range(5..60usize);
            let slots: Vec<SlotRecord> = (0..horizon)
                .map(|t| {
                    let users = (0..num_users)
                        .map(|_| {
                            let up = rng.random_bool(0.8);
                            let down = rng.random_bool(0.8);
                            UserSlot {
                                connected_up: up,
                                connected_down: down,
                                rtt_ms: (up && down).then(|| rng.random_range(10.0..200.0)),
                                ingress: Some(SatelliteId(rng.random_range(0..30))),
                                anchor: None,
                                address_changed: rng.random_bool(0.05),
                                handover: rng.random_bool(0.1),
                            }
                        })
                        .collect();
                    slot(
                        t as u32,
                        users,
                        rng.random_range(0..500),
                        rng.random_range(0..500),
                    )
                })
                .collect();
            let ids: Vec<String> = (0..num_users).map(|u| format!("u{u}")).collect();
            let s = summarize(&slots, 2.0, &ids, SummarizeOptions::default()).unwrap();
            let (up, down, mean, ip, ho, loc, route) =
                summarize_streaming(&slots, 2.0, num_users);
            assert!((s.cur_up - up).abs() < 1e-12);
            assert!((s.cur_down - down).abs() < 1e-12);
            assert!((s.rtt.mean - mean).abs() < 1e-9);
            assert!((s.ip_changes_per_hour - ip).abs() < 1e-9);
            assert!((s.handovers_per_hour - ho).abs() < 1e-9);
            assert!((s.overhead.location_hops_per_sec - loc).abs() < 1e-12);
            assert!((s.overhead.route_hops_per_sec - route).abs() < 1e-12);
            assert!(
                (s.overhead.total_hops_per_sec() - (loc + route)).abs() < 1e-12,
                "decomposition sums to the total"
            );
            // Quantiles are ordered.
            if !s.rtt.p50.is_nan() {
                assert!(s.rtt.p50 <= s.rtt.p95 && s.rtt.p95 <= s.rtt.max);
            }
        }
    }

    #[test]
    fn summary_is_user_permutation_insensitive() {
        let mut rng = StdRng::seed_from_u64(29);
        let slots: Vec<SlotRecord> = (0..40)
            .map(|t| {
                let users = (0..3)
                    .map(|_| {
                        let up = rng.random_bool(0.7);
                        let down = rng.random_bool(0.7);
                        UserSlot {
                            connected_up: up,
                            connected_down: down,
                            rtt_ms: (up && down).then(|| rng.random_range(10.0..200.0)),
                            ingress: None,
                            anchor: None,
                            address_changed: false,
                            handover: false,
                        }
                    })
                    .collect();
                slot(t as u32, users, 0, 0)
            })
            .collect();
        let ids: Vec<String> = (0..3).map(|u| format!("u{u}")).collect();
        let base = summarize(&slots, 1.0, &ids, SummarizeOptions::default()).unwrap();
        let permuted: Vec<SlotRecord> = slots
            .iter()
            .map(|s| {
                let mut users = s.users.clone();
                users.rotate_left(1);
                slot(s.t, users, s.location_hops, s.route_hops)
            })
            .collect();
        let mut pids = ids.clone();
        pids.rotate_left(1);
        let rotated = summarize(&permuted, 1.0, &pids, SummarizeOptions::default()).unwrap();
        assert!((base.cur_up - rotated.cur_up).abs() < 1e-12);
        assert!((base.cur_down - rotated.cur_down).abs() < 1e-12);
        assert!((base.rtt.mean - rotated.rtt.mean).abs() < 1e-9);
    }

    #[test]
    fn identical_summaries_compare_with_zero_deltas() {
        let slots: Vec<SlotRecord> = (0..10)
            .map(|t| slot(t, vec![connected(20.0)], 3, 0))
            .collect();
        let s = summarize(&slots, 1.0, &["u".into()], SummarizeOptions::default()).unwrap();
        let mut map = BTreeMap::new();
        map.insert("skycastle".to_string(), s.clone());
        map.insert("fixed_sat_anchor".to_string(), s.clone());
        let cmp = compare(&map).unwrap();
        for r in &cmp.rows {
            for (_, d) in &r.delta_vs_skycastle {
                assert!(d.abs() < 1e-12 || d.is_nan(), "{}: {d}", r.metric);
            }
        }
        // Equal CURs violate the strict cluster-wins expectation.
        assert!(cmp
            .violations
            .iter()
            .any(|v| v.contains("cur_down")));
    }

    #[test]
    fn compare_rejects_mismatched_scenarios() {
        let slots: Vec<SlotRecord> = (0..10)
            .map(|t| slot(t, vec![connected(20.0)], 0, 0))
            .collect();
        let a = summarize(&slots, 1.0, &["u".into()], SummarizeOptions::default()).unwrap();
        let b = summarize(&slots[..5], 1.0, &["u".into()], SummarizeOptions::default()).unwrap();
        let mut map = BTreeMap::new();
        map.insert("skycastle".to_string(), a);
        map.insert("ground_anchor".to_string(), b);
        assert!(matches!(
            compare(&map),
            Err(MetricsError::MismatchedScenarios(_))
        ));
    }
}
