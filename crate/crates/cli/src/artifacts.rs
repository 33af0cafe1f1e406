//! Run-directory artifact writers. All numeric output uses fixed six-decimal
//! formatting so reruns diff cleanly.

use std::io::Write;
use std::path::Path;

use skycastle_core::metrics::{Comparison, MetricsSummary};
use skycastle_core::sim::{AnchorNode, LatencyModel, Prepared, RunLog};

use crate::fmt6;

fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(contents.as_bytes())
}

fn fmt_bool(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

fn fmt_anchor(a: &Option<AnchorNode>) -> String {
    match a {
        Some(n) => n.to_string(),
        None => String::new(),
    }
}

/// One row per slot per user. `msg_hops` is the slot's total control-message
/// hop count, repeated on every user row of that slot.
pub fn slots_csv(log: &RunLog, user_ids: &[String]) -> String {
    let mut out = String::from(
        "t,user,connected_up,connected_down,rtt_ms,ingress,anchor,address_changed,handover,msg_hops\n",
    );
    for slot in &log.slots {
        for (u, id) in user_ids.iter().enumerate() {
            let rec = &slot.users[u];
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                slot.t,
                id,
                fmt_bool(rec.connected_up),
                fmt_bool(rec.connected_down),
                rec.rtt_ms.map(fmt6).unwrap_or_default(),
                rec.ingress.map(|s| s.0.to_string()).unwrap_or_default(),
                fmt_anchor(&rec.anchor),
                fmt_bool(rec.address_changed),
                fmt_bool(rec.handover),
                slot.control_message_hops(),
            ));
        }
    }
    out
}

/// Per-user rows plus an `ALL` aggregate row.
pub fn summary_csv(summary: &MetricsSummary) -> String {
    let mut out = String::from(
        "user,cur_up,cur_down,rtt_mean_ms,rtt_p50_ms,rtt_p95_ms,rtt_max_ms,\
         ip_changes_per_hour,handovers_per_hour,location_overhead_hops_per_sec,\
         route_overhead_hops_per_sec\n",
    );
    for m in &summary.per_user {
        out.push_str(&format!(
            "{},{},{},{},,,{},{},{},,\n",
            m.user,
            fmt6(m.cur_up),
            fmt6(m.cur_down),
            fmt6(m.rtt_mean),
            fmt6(m.rtt_max),
            fmt6(m.ip_changes_per_hour),
            fmt6(m.handovers_per_hour),
        ));
    }
    out.push_str(&format!(
        "ALL,{},{},{},{},{},{},{},{},{},{}\n",
        fmt6(summary.cur_up),
        fmt6(summary.cur_down),
        fmt6(summary.rtt.mean),
        fmt6(summary.rtt.p50),
        fmt6(summary.rtt.p95),
        fmt6(summary.rtt.max),
        fmt6(summary.ip_changes_per_hour),
        fmt6(summary.handovers_per_hour),
        fmt6(summary.overhead.location_hops_per_sec),
        fmt6(summary.overhead.route_hops_per_sec),
    ));
    out
}

pub fn timeseries_csv(summary: &MetricsSummary, log: &RunLog) -> String {
    let mut out = String::from("t,rtt_ms,connected_up_frac,connected_down_frac,msg_hops\n");
    for (t, slot) in log.slots.iter().enumerate() {
        let n = slot.users.len().max(1) as f64;
        let up = slot.users.iter().filter(|u| u.connected_up).count() as f64 / n;
        let down = slot.users.iter().filter(|u| u.connected_down).count() as f64 / n;
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            t,
            summary.rtt.timeseries[t].map(fmt6).unwrap_or_default(),
            fmt6(up),
            fmt6(down),
            slot.control_message_hops(),
        ));
    }
    out
}

/// The resolved scenario, every default materialized, as TOML.
pub fn resolved_scenario_toml(prep: &Prepared, mechanism: &str) -> String {
    let sc = &prep.scenario;
    let mut out = String::new();
    out.push_str(&format!(
        "# resolved scenario for mechanism '{mechanism}'\n\n[shell]\nnum_orbits = {}\nsats_per_orbit = {}\naltitude_km = {}\ninclination_deg = {}\nphase_offset = {}\nmin_elevation_deg = {}\n\n",
        sc.shell.num_orbits,
        sc.shell.sats_per_orbit,
        sc.shell.altitude_km,
        sc.shell.inclination_deg,
        sc.shell.phase_offset,
        sc.shell.min_elevation_deg,
    ));
    out.push_str(&format!(
        "[ada]\nh = {}\ndiscovery_window_slots = {}\nreference_lat = {}\nreference_lon = {}\n\n",
        sc.ada.h,
        sc.ada.discovery_window,
        sc.reference_point.latitude_deg,
        sc.reference_point.longitude_deg,
    ));
    let latency = match sc.latency_model {
        LatencyModel::PerHop => "per_hop",
        LatencyModel::Geometric => "geometric",
    };
    out.push_str(&format!(
        "[sim]\nhorizon_slots = {}\nslot_seconds = {}\nlatency_model = \"{latency}\"\nper_hop_ms = {}\nconvergence_slots = {}\nrng_seed = {}\n\nmechanisms = [\"{mechanism}\"]\n\n",
        sc.horizon_slots, sc.slot_seconds, sc.per_hop_ms, sc.convergence_slots, sc.rng_seed,
    ));
    for g in &sc.gs {
        out.push_str(&format!(
            "[[gs]]\nid = \"{}\"\nlat = {}\nlon = {}\nserver_adder_ms = {}\n\n",
            g.id, g.point.latitude_deg, g.point.longitude_deg, g.server_adder_ms,
        ));
    }
    for (u, spec) in sc.users.iter().enumerate() {
        // Positions are re-emitted per slot next to this file, so the run
        // reproduces from the artifact directory alone.
        out.push_str(&format!(
            "[[users]]\nid = \"{}\"\ntrace = \"traces/{}.csv\"\ndest_gs = \"{}\"\n\n",
            spec.id,
            spec.id,
            sc.gs[prep.user_dest_gs[u]].id,
        ));
    }
    out
}

/// Per-slot waypoint dump of one user's resolved positions.
pub fn user_trace_csv(prep: &Prepared, user: usize) -> String {
    let mut out = String::from("epoch_seconds,lat_deg,lon_deg,alt_m\n");
    for (t, p) in prep.user_positions[user].iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            t as f64 * prep.scenario.slot_seconds,
            p.latitude_deg,
            p.longitude_deg,
            p.altitude_m
        ));
    }
    out
}

pub fn comparison_csv(cmp: &Comparison) -> String {
    let mechanisms: Vec<String> = cmp
        .rows
        .first()
        .map(|r| r.values.keys().cloned().collect())
        .unwrap_or_default();
    let mut out = String::from("metric");
    for m in &mechanisms {
        out.push_str(&format!(",{m},{m}_delta_vs_skycastle,{m}_ratio_vs_skycastle"));
    }
    out.push('\n');
    for row in &cmp.rows {
        out.push_str(&row.metric);
        for m in &mechanisms {
            out.push_str(&format!(
                ",{},{},{}",
                fmt6(row.values[m]),
                fmt6(row.delta_vs_skycastle[m]),
                fmt6(row.ratio_vs_skycastle[m]),
            ));
        }
        out.push('\n');
    }
    if !cmp.violations.is_empty() {
        out.push_str("\n# ordering violations\n");
        for v in &cmp.violations {
            out.push_str(&format!("# {v}\n"));
        }
    }
    out
}

pub fn write_cell(
    dir: &Path,
    prep: &Prepared,
    log: &RunLog,
    summary: &MetricsSummary,
    user_ids: &[String],
) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    write_atomic(&dir.join("slots.csv"), &slots_csv(log, user_ids))?;
    write_atomic(&dir.join("summary.csv"), &summary_csv(summary))?;
    write_atomic(&dir.join("timeseries.csv"), &timeseries_csv(summary, log))?;
    write_atomic(
        &dir.join("resolved_scenario.toml"),
        &resolved_scenario_toml(prep, &log.mechanism),
    )?;
    if !prep.scenario.users.is_empty() {
        std::fs::create_dir_all(dir.join("traces"))?;
        for (u, spec) in prep.scenario.users.iter().enumerate() {
            write_atomic(
                &dir.join("traces").join(format!("{}.csv", spec.id)),
                &user_trace_csv(prep, u),
            )?;
        }
    }
    if let Some(division) = &log.division {
        let f = std::fs::File::create(dir.join("division.json"))?;
        serde_json::to_writer_pretty(f, division)?;
    }
    Ok(())
}

pub fn write_comparison(path: &Path, cmp: &Comparison) -> std::io::Result<()> {
    write_atomic(path, &comparison_csv(cmp))
}
