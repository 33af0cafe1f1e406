//! Temporary diagnostics for the 25-minute geometric run.

use skycastle_core::sim::{run, LatencyModel, MechanismRegistry, Prepared};

#[allow(dead_code)]
mod common {
    include!("calibrate.rs");
}

#[test]
#[ignore]
fn probe_fixed_anchor_drift() {
    let prep = Prepared::build(common::starlink_scenario(1500, LatencyModel::Geometric)).unwrap();
    let registry = MechanismRegistry::with_builtins();
    let shell = &prep.shell;

    for name in ["fixed_sat_anchor", "skycastle"] {
        let log = run(&prep, name, &registry).unwrap();
        println!("==== {name}");
        for u in 0..2 {
            println!("user {u} ({})", prep.scenario.users[u].id);
            let gs_idx = prep.user_dest_gs[u];
            for t in (60..1500).step_by(120) {
                let rec = &log.slots[t].users[u];
                let (ing, anchor) = (rec.ingress, rec.anchor);
                let gs_in = prep.gs_attach[gs_idx][t];
                let (d_ga, d_au, d_direct) = match (ing, anchor, gs_in) {
                    (Some(i), Some(skycastle_core::sim::AnchorNode::Sat(a)), Some(g)) => (
                        shell.distance(g, a),
                        shell.distance(a, i),
                        shell.distance(g, i),
                    ),
                    _ => (999, 999, 999),
                };
                println!(
                    "  t {t:4}: rtt {:7.1}  D(gs,A) {d_ga:2} D(A,u) {d_au:2} D(gs,u) {d_direct:2} ing {:?} gsin {:?}",
                    rec.rtt_ms.unwrap_or(f64::NAN),
                    ing.map(|s| (s.0 / 22, s.0 % 22)),
                    gs_in.map(|s| (s.0 / 22, s.0 % 22)),
                );
            }
        }
    }
}

#[test]
#[ignore]
fn probe_equatorial_trend() {
    use skycastle_core::constellation::GroundPoint;
    use skycastle_core::sim::UserSpec;
    let mut sc = common::starlink_scenario(1500, LatencyModel::Geometric);
    // Equatorial flight: Singapore -> Male-like great circle, ~0-5 N.
    sc.users = vec![UserSpec {
        id: "equatorial".into(),
        trajectory: common::great_circle_trace((1.36, 103.99), (4.19, 73.53), 900.0, 10500.0, 60.0),
        dest_gs: None,
    }];
    let prep = Prepared::build(sc).unwrap();
    let registry = MechanismRegistry::with_builtins();
    let shell = &prep.shell;
    for name in ["fixed_sat_anchor", "skycastle"] {
        let log = run(&prep, name, &registry).unwrap();
        println!("==== {name}");
        let gs_idx = prep.user_dest_gs[0];
        println!("dest gs {} at {:?}", gs_idx, prep.scenario.gs[gs_idx].point);
        let samples: Vec<(usize, f64)> = log.slots.iter().enumerate()
            .filter_map(|(t, sl)| sl.users[0].rtt_ms.map(|r| (t, r))).collect();
        let mean_of = |lo: usize, hi: usize| {
            let v: Vec<f64> = samples.iter().filter(|(t, _)| *t >= lo && *t < hi).map(|(_, r)| *r).collect();
            v.iter().sum::<f64>() / v.len().max(1) as f64
        };
        let min = samples.iter().map(|(_, r)| *r).fold(f64::MAX, f64::min);
        let max = samples.iter().map(|(_, r)| *r).fold(f64::MIN, f64::max);
        println!("  first5 {:.1} last5 {:.1} delta {:+.1}  spread {:.1} (min {:.1} max {:.1})",
            mean_of(0, 300), mean_of(1200, 1500), mean_of(1200, 1500) - mean_of(0, 300), max - min, min, max);
        for t in (60..1500).step_by(180) {
            let rec = &log.slots[t].users[0];
            let gs_in = prep.gs_attach[gs_idx][t];
            if let (Some(i), Some(skycastle_core::sim::AnchorNode::Sat(a)), Some(g)) = (rec.ingress, rec.anchor, gs_in) {
                println!("  t {t:4}: rtt {:7.1} D(gs,A) {:2} D(A,u) {:2} D(gs,u) {:2}",
                    rec.rtt_ms.unwrap_or(f64::NAN), shell.distance(g, a), shell.distance(a, i), shell.distance(g, i));
            }
        }
    }
}

#[test]
#[ignore]
fn probe_apex_trend() {
    use skycastle_core::constellation::{GroundPoint, Trajectory};
    use skycastle_core::sim::{GsSpec, UserSpec};
    let mut sc = common::starlink_scenario(1500, LatencyModel::Geometric);
    // Cruise eastward along the 52.5 N parallel at 900 km/h from 10 E.
    let lat: f64 = 52.5;
    let wps: Vec<(f64, GroundPoint)> = (0..=120)
        .map(|i| {
            let t = i as f64 * 60.0;
            let lon = 10.0 + 900.0 / (111.32 * lat.to_radians().cos()) * t / 3600.0;
            (t, GroundPoint::new(lat, lon, 10500.0).unwrap())
        })
        .collect();
    sc.gs = vec![GsSpec {
        id: "gs-trend".into(),
        point: GroundPoint::new(52.5, 10.0, 0.0).unwrap(),
        server_adder_ms: 5.0,
    }];
    sc.users = vec![UserSpec {
        id: "apex".into(),
        trajectory: Trajectory::new(wps).unwrap(),
        dest_gs: Some("gs-trend".into()),
    }];
    let prep = Prepared::build(sc).unwrap();
    let registry = MechanismRegistry::with_builtins();
    let shell = &prep.shell;
    for name in ["fixed_sat_anchor", "skycastle"] {
        let log = run(&prep, name, &registry).unwrap();
        println!("==== {name}");
        let samples: Vec<(usize, f64)> = log.slots.iter().enumerate()
            .filter_map(|(t, sl)| sl.users[0].rtt_ms.map(|r| (t, r))).collect();
        let mean_of = |lo: usize, hi: usize| {
            let v: Vec<f64> = samples.iter().filter(|(t, _)| *t >= lo && *t < hi).map(|(_, r)| *r).collect();
            v.iter().sum::<f64>() / v.len().max(1) as f64
        };
        let min = samples.iter().map(|(_, r)| *r).fold(f64::MAX, f64::min);
        let max = samples.iter().map(|(_, r)| *r).fold(f64::MIN, f64::max);
        println!("  samples {} first5 {:.1} last5 {:.1} delta {:+.1} spread {:.1}",
            samples.len(), mean_of(0, 300), mean_of(1200, 1500), mean_of(1200, 1500) - mean_of(0, 300), max - min);
        for t in (30..1500).step_by(120) {
            let rec = &log.slots[t].users[0];
            let gs_in = prep.gs_attach[0][t];
            if let (Some(i), Some(skycastle_core::sim::AnchorNode::Sat(a)), Some(g)) = (rec.ingress, rec.anchor, gs_in) {
                println!("  t {t:4}: rtt {:7.1} D(gs,A) {:2} D(A,u) {:2} D(gs,u) {:2}",
                    rec.rtt_ms.unwrap_or(f64::NAN), shell.distance(g, a), shell.distance(a, i), shell.distance(g, i));
            }
        }
    }
}
