//! Synthetic scenario assets.
//!
//! The ground-station lists are placed by a deterministic
//! population-weighted region table (real deployment maps are third-party
//! data this repository does not redistribute), and the flight traces are
//! synthetic great-circle routes at cruise speed. `gen-presets` rewrites all
//! of them from code.

use std::io::Write;
use std::path::Path;

use skycastle_core::constellation::Vec3;

/// Deterministic 64-bit mixer; keeps the preset coordinates stable across
/// platforms.
struct Lcg(u64);

impl Lcg {
    fn next_f64(&mut self) -> f64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }

    fn jitter(&mut self, spread: f64) -> f64 {
        (self.next_f64() * 2.0 - 1.0) * spread
    }
}

/// `(center_lat, center_lon, stations, spread_deg)` per region.
type RegionTable = &'static [(f64, f64, usize, f64)];

/// 201 stations, densest over North America, Europe and East Asia.
const STARLINK_REGIONS: RegionTable = &[
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

/// 117 stations, mirroring a cloud provider's ground-station and
/// availability-zone footprint.
const KUIPER_REGIONS: RegionTable = &[
    (40.0, -80.0, 10, 8.0),
    (40.0, -118.0, 8, 6.0),
    (46.0, -120.0, 4, 3.0),
    (20.0, -100.0, 4, 7.0),
    (-15.0, -50.0, 6, 9.0),
    (-34.0, -60.0, 3, 5.0),
    (52.0, 0.0, 6, 3.0),
    (48.0, 7.0, 8, 5.0),
    (40.0, -4.0, 3, 3.0),
    (45.0, 15.0, 5, 6.0),
    (59.0, 17.0, 4, 4.0),
    (30.0, 32.0, 3, 4.0),
    (-1.0, 37.0, 3, 4.0),
    (-29.0, 25.0, 4, 5.0),
    (25.0, 50.0, 5, 5.0),
    (19.0, 76.0, 8, 6.0),
    (1.5, 103.5, 6, 4.0),
    (35.0, 127.0, 6, 4.0),
    (36.0, 138.0, 7, 4.0),
    (-33.0, 148.0, 6, 7.0),
    (-40.0, 175.0, 2, 2.0),
    (21.0, -158.0, 2, 1.0),
    (64.0, -21.0, 2, 2.0),
    (13.0, 101.0, 2, 3.0),
];

pub fn gs_list(regions: RegionTable, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = Lcg(seed);
    let mut out = Vec::new();
    for &(lat, lon, count, spread) in regions {
        for _ in 0..count {
            let glat = (lat + rng.jitter(spread)).clamp(-56.0, 56.0);
            let mut glon = lon + rng.jitter(spread);
            if glon > 180.0 {
                glon -= 360.0;
            }
            if glon <= -180.0 {
                glon += 360.0;
            }
            out.push((glat, glon));
        }
    }
    out
}

pub fn starlink_gs() -> Vec<(f64, f64)> {
    gs_list(STARLINK_REGIONS, 0x5eed_5eed)
}

pub fn kuiper_gs() -> Vec<(f64, f64)> {
    gs_list(KUIPER_REGIONS, 0xcafe_f00d)
}

/// Great-circle waypoints between two airports at a constant cruise speed,
/// one row per `step_s` seconds.
pub fn great_circle_waypoints(
    from: (f64, f64),
    to: (f64, f64),
    speed_kmh: f64,
    alt_m: f64,
    step_s: f64,
) -> Vec<(f64, f64, f64, f64)> {
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
    (0..=n)
        .map(|i| {
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
            (
                i as f64 * step_s,
                p.z.asin().to_degrees(),
                p.y.atan2(p.x).to_degrees(),
                alt_m,
            )
        })
        .collect()
}

/// Constant-latitude cruise starting at `(lat, start_lon)`, heading east.
pub fn parallel_waypoints(
    lat: f64,
    start_lon: f64,
    speed_kmh: f64,
    alt_m: f64,
    hours: f64,
    step_s: f64,
) -> Vec<(f64, f64, f64, f64)> {
    let n = (hours * 3600.0 / step_s).ceil() as usize;
    let deg_per_s = speed_kmh / (111.32 * lat.to_radians().cos()) / 3600.0;
    (0..=n)
        .map(|i| {
            let t = i as f64 * step_s;
            let mut lon = start_lon + deg_per_s * t;
            while lon > 180.0 {
                lon -= 360.0;
            }
            (t, lat, lon, alt_m)
        })
        .collect()
}

fn trace_csv(rows: &[(f64, f64, f64, f64)]) -> String {
    let mut out = String::from("epoch_seconds,lat_deg,lon_deg,alt_m\n");
    for (t, lat, lon, alt) in rows {
        out.push_str(&format!("{t},{lat:.6},{lon:.6},{alt}\n"));
    }
    out
}

fn gs_toml(list: &[(f64, f64)]) -> String {
    let mut out = String::new();
    for (i, (lat, lon)) in list.iter().enumerate() {
        out.push_str(&format!(
            "[[gs]]\nid = \"gs-{i:03}\"\nlat = {lat:.4}\nlon = {lon:.4}\n\n"
        ));
    }
    out
}

fn write(path: &Path, contents: &str) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(contents.as_bytes())
}

/// Rewrites every scenario asset under `dir`.
pub fn write_presets(dir: &Path) -> std::io::Result<()> {
    // Flight traces: trans-Pacific and trans-Atlantic great circles at
    // 900 km/h, plus an apex-latitude cruise for the latency-trend scenario.
    write(
        &dir.join("traces/transpacific.csv"),
        &trace_csv(&great_circle_waypoints(
            (37.619, -122.375),
            (35.765, 140.386),
            900.0,
            10500.0,
            60.0,
        )),
    )?;
    write(
        &dir.join("traces/transatlantic.csv"),
        &trace_csv(&great_circle_waypoints(
            (51.470, -0.454),
            (40.640, -73.779),
            900.0,
            10500.0,
            60.0,
        )),
    )?;
    write(
        &dir.join("traces/apex_cruise.csv"),
        &trace_csv(&parallel_waypoints(52.5, 10.0, 900.0, 10500.0, 2.0, 60.0)),
    )?;

    let starlink = format!(
        r#"# Starlink-like first shell: 1584 satellites in 72 orbits at 540 km.
# Ground stations are synthetic, population-weighted (about 200 sites).

[shell]
num_orbits = 72
sats_per_orbit = 22
altitude_km = 540.0
inclination_deg = 53.0
phase_offset = 0.5
min_elevation_deg = 25.0

[ada]
h = 47                       # floor((72 + 22) / 2)
discovery_window_slots = 5718  # one orbital period at 1 s slots
reference_lat = 40.0
reference_lon = 0.0

[sim]
horizon_slots = 3600
slot_seconds = 1.0
latency_model = "per_hop"
per_hop_ms = 4.0
convergence_slots = 10
rng_seed = 1
server_adder_ms = 5.0

mechanisms = ["skycastle", "ground_anchor", "fixed_sat_anchor"]

[[users]]
id = "transpacific"
trace = "traces/transpacific.csv"

[[users]]
id = "transatlantic"
trace = "traces/transatlantic.csv"

{}"#,
        gs_toml(&starlink_gs())
    );
    write(&dir.join("starlink.toml"), &starlink)?;

    let kuiper = format!(
        r#"# Kuiper-like shell: 1296 satellites in 36 orbits at 610 km.

[shell]
num_orbits = 36
sats_per_orbit = 36
altitude_km = 610.0
inclination_deg = 51.9
phase_offset = 0.5
min_elevation_deg = 25.0

[ada]
h = 36                       # floor((36 + 36) / 2)
discovery_window_slots = 5806  # one orbital period at 1 s slots
reference_lat = 40.0
reference_lon = 0.0

[sim]
horizon_slots = 3600
slot_seconds = 1.0
latency_model = "per_hop"
per_hop_ms = 4.0
convergence_slots = 10
rng_seed = 1
server_adder_ms = 5.0

mechanisms = ["skycastle", "ground_anchor", "fixed_sat_anchor"]

[[users]]
id = "transpacific"
trace = "traces/transpacific.csv"

[[users]]
id = "transatlantic"
trace = "traces/transatlantic.csv"

{}"#,
        gs_toml(&kuiper_gs())
    );
    write(&dir.join("kuiper.toml"), &kuiper)?;

    let trend = r#"# Latency-trend scenario: a 25-minute cruise along the inclination apex
# latitude, where ascending and descending passes nearly coincide, so the
# fixed-anchor drift is visible without pass-family noise. Geometric latency.

[shell]
num_orbits = 72
sats_per_orbit = 22
altitude_km = 540.0
inclination_deg = 53.0
phase_offset = 0.5
min_elevation_deg = 25.0

[ada]
h = 47
discovery_window_slots = 5718
reference_lat = 52.5
reference_lon = 10.0

[sim]
horizon_slots = 1500
slot_seconds = 1.0
latency_model = "geometric"
per_hop_ms = 4.0
convergence_slots = 10
rng_seed = 1
server_adder_ms = 5.0

mechanisms = ["skycastle", "fixed_sat_anchor"]

[[gs]]
id = "gs-route"
lat = 52.5
lon = 10.0

[[users]]
id = "apex_cruise"
trace = "traces/apex_cruise.csv"
dest_gs = "gs-route"
"#;
    write(&dir.join("trend.toml"), trend)?;

    let minimal = r#"# Small demo scenario: a sparse shell with a widened elevation cone so a
# couple of ground nodes stay covered; runs in well under a second.

[shell]
num_orbits = 24
sats_per_orbit = 12
altitude_km = 540.0
inclination_deg = 53.0
min_elevation_deg = 10.0

[sim]
horizon_slots = 300
slot_seconds = 1.0
rng_seed = 1

mechanisms = ["skycastle", "ground_anchor", "fixed_sat_anchor"]

[[gs]]
id = "gs-a"
lat = 40.0
lon = -3.7

[[gs]]
id = "gs-b"
lat = 48.9
lon = 2.3

[[users]]
id = "static-madrid"
lat = 40.4
lon = -3.7
"#;
    write(&dir.join("minimal.toml"), minimal)?;

    let instance = r#"{
  "num_orbits": 6,
  "sats_per_orbit": 6,
  "h": 4,
  "slots": [
    [1, 7],
    [1, 7, 8],
    [7, 8],
    [8, 14],
    [],
    [14, 20],
    [14, 20],
    [20]
  ]
}
"#;
    write(&dir.join("instances/small.json"), instance)?;
    Ok(())
}
