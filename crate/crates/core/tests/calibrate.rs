// Full-scale calibration probe; run explicitly with
// `cargo test -p skycastle-core --test calibrate -- --ignored --nocapture`.

use std::time::Instant;

use skycastle_core::ada::AdaParams;
use skycastle_core::constellation::{GroundPoint, ShellConfig, Trajectory, Vec3};
use skycastle_core::metrics::{summarize, SummarizeOptions};
use skycastle_core::sim::{
    run, GsSpec, LatencyModel, MechanismRegistry, Prepared, Scenario, UserSpec,
};

struct Lcg(u64);
impl Lcg {
    fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }
    fn jitter(&mut self, spread: f64) -> f64 {
        (self.next_f64() * 2.0 - 1.0) * spread
    }
}

pub fn gs_list() -> Vec<(f64, f64)> {
    let regions: &[(f64, f64, usize, f64)] = &[
        (40.0, -80.0, 14, 8.0),
        (40.0, -115.0, 12, 7.0),
        (38.0, -95.0, 10, 8.0),
        (50.0, -100.0, 6, 10.0),
        (20.0, -100.0, 6, 8.0),
        (-15.0, -50.0, 8, 10.0),
        (-33.0, -65.0, 6, 8.0),
        (0.0, -75.0, 4, 6.0),
        (53.0, -2.0, 6, 3.0),
        (48.0, 5.0, 11, 6.0),
        (40.0, -4.0, 6, 4.0),
        (43.0, 12.0, 6, 4.0),
        (50.0, 20.0, 8, 7.0),
        (60.0, 15.0, 5, 5.0),
        (38.0, 35.0, 6, 6.0),
        (32.0, 5.0, 5, 8.0),
        (10.0, 0.0, 6, 8.0),
        (0.0, 37.0, 5, 7.0),
        (-28.0, 25.0, 6, 6.0),
        (25.0, 48.0, 6, 7.0),
        (22.0, 78.0, 10, 8.0),
        (10.0, 105.0, 8, 8.0),
        (-5.0, 115.0, 6, 8.0),
        (33.0, 115.0, 12, 8.0),
        (36.0, 135.0, 8, 5.0),
        (-30.0, 140.0, 8, 10.0),
        (-41.0, 173.0, 3, 3.0),
        (21.0, -157.0, 2, 1.0),
        (61.0, -150.0, 2, 3.0),
    ];
    let mut rng = Lcg(0x5eed5eed);
    let mut out = Vec::new();
    for &(lat, lon, count, spread) in regions {
        for _ in 0..count {
            let glat = (lat + rng.jitter(spread)).clamp(-56.0, 56.0);
            let glon = lon + rng.jitter(spread);
            out.push((glat, glon));
        }
    }
    out
}

pub fn great_circle_trace(
    from: (f64, f64),
    to: (f64, f64),
    speed_kmh: f64,
    alt_m: f64,
    step_s: f64,
) -> Trajectory {
    let unit = |lat: f64, lon: f64| {
        let (la, lo) = (lat.to_radians(), lon.to_radians());
        Vec3 {
            x: la.cos() * lo.cos(),
            y: la.cos() * lo.sin(),
            z: la.sin(),
        }
    };
    let a = unit(from.0, from.1);
    let b = unit(to.0, to.1);
    let omega = a.dot(&b).clamp(-1.0, 1.0).acos();
    let dist_km = 6371.0 * omega;
    let total_s = dist_km / speed_kmh * 3600.0;
    let n = (total_s / step_s).ceil() as usize;
    let mut wps = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let f = i as f64 / n as f64;
        let (sa, sb) = (
            ((1.0 - f) * omega).sin() / omega.sin(),
            (f * omega).sin() / omega.sin(),
        );
        let p = Vec3 {
            x: sa * a.x + sb * b.x,
            y: sa * a.y + sb * b.y,
            z: sa * a.z + sb * b.z,
        };
        let lat = p.z.asin().to_degrees();
        let lon = p.y.atan2(p.x).to_degrees();
        wps.push((
            i as f64 * step_s,
            GroundPoint::new(lat, lon, alt_m).unwrap(),
        ));
    }
    Trajectory::new(wps).unwrap()
}

pub fn starlink_scenario(horizon: usize, latency: LatencyModel) -> Scenario {
    let gs: Vec<GsSpec> = gs_list()
        .into_iter()
        .enumerate()
        .map(|(i, (lat, lon))| GsSpec {
            id: format!("gs-{i:03}"),
            point: GroundPoint::new(lat, lon, 0.0).unwrap(),
            server_adder_ms: 5.0,
        })
        .collect();
    let transpacific = great_circle_trace((37.619, -122.375), (35.765, 140.386), 900.0, 10500.0, 60.0);
    let transatlantic = great_circle_trace((51.470, -0.454), (40.640, -73.779), 900.0, 10500.0, 60.0);
    Scenario {
        shell: ShellConfig {
            num_orbits: 72,
            sats_per_orbit: 22,
            altitude_km: 540.0,
            inclination_deg: 53.0,
            phase_offset: 0.5,
            min_elevation_deg: 25.0,
        },
        ada: AdaParams {
            h: 47,
            discovery_window: 5718,
        },
        reference_point: GroundPoint::new(40.0, 0.0, 0.0).unwrap(),
        horizon_slots: horizon,
        slot_seconds: 1.0,
        latency_model: latency,
        per_hop_ms: 4.0,
        convergence_slots: 10,
        rng_seed: 1,
        gs,
        users: vec![
            UserSpec {
                id: "transpacific".into(),
                trajectory: transpacific,
                dest_gs: None,
            },
            UserSpec {
                id: "transatlantic".into(),
                trajectory: transatlantic,
                dest_gs: None,
            },
        ],
        mechanisms: vec![
            "skycastle".into(),
            "ground_anchor".into(),
            "fixed_sat_anchor".into(),
        ],
    }
}

#[test]
#[ignore]
fn calibrate_starlink_hour() {
    let t0 = Instant::now();
    let prep = Prepared::build(starlink_scenario(3600, LatencyModel::PerHop)).unwrap();
    println!("prepare: {:?}", t0.elapsed());
    println!("union size: {}", prep.reference_union.len());
    println!("gs handovers total: {}", prep.total_gs_handovers());

    let registry = MechanismRegistry::with_builtins();
    let ids: Vec<String> = prep.scenario.users.iter().map(|u| u.id.clone()).collect();
    for name in ["skycastle", "ground_anchor", "fixed_sat_anchor"] {
        let t1 = Instant::now();
        let log = run(&prep, name, &registry).unwrap();
        let s = summarize(&log.slots, 1.0, &ids, SummarizeOptions::default()).unwrap();
        println!(
            "{name}: run {:?}; clusters {:?}",
            t1.elapsed(),
            log.division.as_ref().map(|d| d.num_clusters())
        );
        for m in &s.per_user {
            println!(
                "  {}: up {:.4} down {:.4} ip/hr {:.2} ho/hr {:.2} rtt mean {:.1} max {:.1}",
                m.user, m.cur_up, m.cur_down, m.ip_changes_per_hour, m.handovers_per_hour,
                m.rtt_mean, m.rtt_max
            );
        }
        println!(
            "  overhead: loc {:.2} route {:.2} hops/s",
            s.overhead.location_hops_per_sec, s.overhead.route_hops_per_sec
        );
    }
}

#[test]
#[ignore]
fn calibrate_rtt_trend() {
    let t0 = Instant::now();
    let prep = Prepared::build(starlink_scenario(1500, LatencyModel::Geometric)).unwrap();
    println!("prepare: {:?}", t0.elapsed());
    let registry = MechanismRegistry::with_builtins();
    let ids: Vec<String> = prep.scenario.users.iter().map(|u| u.id.clone()).collect();
    for name in ["skycastle", "fixed_sat_anchor"] {
        let log = run(&prep, name, &registry).unwrap();
        let s = summarize(&log.slots, 1.0, &ids, SummarizeOptions::default()).unwrap();
        let ts = &s.rtt.timeseries;
        let mean_of = |range: std::ops::Range<usize>| {
            let vals: Vec<f64> = ts[range].iter().filter_map(|v| *v).collect();
            vals.iter().sum::<f64>() / vals.len().max(1) as f64
        };
        let first = mean_of(0..300);
        let last = mean_of(1200..1500);
        println!(
            "{name}: first5 {:.1} last5 {:.1} delta {:.1}; spread per user:",
            first,
            last,
            last - first
        );
        for (u, _) in ids.iter().enumerate() {
            let samples: Vec<f64> = log
                .slots
                .iter()
                .filter_map(|sl| sl.users[u].rtt_ms)
                .collect();
            if samples.is_empty() {
                println!("  {}: no samples", ids[u]);
                continue;
            }
            let min = samples.iter().cloned().fold(f64::MAX, f64::min);
            let max = samples.iter().cloned().fold(f64::MIN, f64::max);
            println!("  {}: min {:.1} max {:.1} spread {:.1}", ids[u], min, max, max - min);
        }
    }
}
