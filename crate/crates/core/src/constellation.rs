//! Walker shell generation, +Grid torus distances, circular-orbit
//! propagation and ground-to-satellite visibility.
//!
//! Satellites live on an `X x Y` torus: `X` orbital planes, `Y` slots per
//! plane, each satellite linked to its two in-orbit neighbors and one
//! neighbor in each adjacent plane. All hop distances in the crate are
//! distances on this grid.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Mean Earth radius, spherical model (km).
pub const EARTH_RADIUS_KM: f64 = 6371.0;
/// Standard gravitational parameter of Earth (km^3/s^2).
pub const MU_KM3_S2: f64 = 398600.4418;
/// Sidereal day (s); Earth rotation period in the inertial frame.
pub const SIDEREAL_DAY_S: f64 = 86164.0905;
/// Speed of light (km/s).
pub const SPEED_OF_LIGHT_KM_S: f64 = 299792.458;

#[derive(Debug, Error, PartialEq)]
pub enum ConstellationError {
    #[error("num_orbits must be >= 3, got {0}")]
    TooFewOrbits(u32),
    #[error("sats_per_orbit must be >= 3, got {0}")]
    TooFewSlots(u32),
    #[error("altitude_km must be positive, got {0}")]
    BadAltitude(f64),
    #[error("min_elevation_deg must be in (0, 90), got {0}")]
    BadElevation(f64),
    #[error("phase_offset must be in [0, 1), got {0}")]
    BadPhaseOffset(f64),
    #[error("latitude must be in [-90, 90], got {0}")]
    BadLatitude(f64),
    #[error("no waypoints")]
    NoWaypoints,
}

/// One Walker shell plus the visibility threshold used against it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShellConfig {
    /// Number of orbital planes (X).
    pub num_orbits: u32,
    /// Satellites per plane (Y).
    pub sats_per_orbit: u32,
    pub altitude_km: f64,
    pub inclination_deg: f64,
    /// Inter-plane phasing as a fraction of the in-plane slot spacing, in [0, 1).
    pub phase_offset: f64,
    pub min_elevation_deg: f64,
}

impl ShellConfig {
    pub fn validate(&self) -> Result<(), ConstellationError> {
        if self.num_orbits < 3 {
            return Err(ConstellationError::TooFewOrbits(self.num_orbits));
        }
        if self.sats_per_orbit < 3 {
            return Err(ConstellationError::TooFewSlots(self.sats_per_orbit));
        }
        if !(self.altitude_km > 0.0) {
            return Err(ConstellationError::BadAltitude(self.altitude_km));
        }
        if !(self.min_elevation_deg > 0.0 && self.min_elevation_deg < 90.0) {
            return Err(ConstellationError::BadElevation(self.min_elevation_deg));
        }
        if !(0.0..1.0).contains(&self.phase_offset) {
            return Err(ConstellationError::BadPhaseOffset(self.phase_offset));
        }
        Ok(())
    }

    pub fn num_sats(&self) -> u32 {
        self.num_orbits * self.sats_per_orbit
    }

    /// Orbital radius (km).
    pub fn semi_major_axis_km(&self) -> f64 {
        EARTH_RADIUS_KM + self.altitude_km
    }

    /// Keplerian orbital period (s).
    pub fn orbital_period_s(&self) -> f64 {
        let a = self.semi_major_axis_km();
        2.0 * std::f64::consts::PI * (a.powi(3) / MU_KM3_S2).sqrt()
    }
}

/// Linear satellite identity; bijective with [`GridCoord`] via `x * Y + y`.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct SatelliteId(pub u32);

impl std::fmt::Display for SatelliteId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Position on the orbit/slot torus: `x` is the plane index in `[0, X)`,
/// `y` the in-plane slot index in `[0, Y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridCoord {
    pub x: u32,
    pub y: u32,
}

impl GridCoord {
    pub fn new(x: u32, y: u32) -> Self {
        Self { x, y }
    }
}

/// Minimum hop count between two torus coordinates: wrap-aware Manhattan
/// distance, `min(|dx|, X-|dx|) + min(|dy|, Y-|dy|)`.
#[inline]
pub fn grid_distance(a: GridCoord, b: GridCoord, num_orbits: u32, sats_per_orbit: u32) -> u32 {
    let dx = a.x.abs_diff(b.x);
    let dy = a.y.abs_diff(b.y);
    dx.min(num_orbits - dx) + dy.min(sats_per_orbit - dy)
}

/// A point on (or above) the spherical Earth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundPoint {
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    /// 0 for ground stations; cruise altitude for aircraft waypoints.
    pub altitude_m: f64,
}

impl GroundPoint {
    /// Builds a point, normalizing longitude to `(-180, 180]`.
    pub fn new(latitude_deg: f64, longitude_deg: f64, altitude_m: f64) -> Result<Self, ConstellationError> {
        if !(latitude_deg.abs() <= 90.0) {
            return Err(ConstellationError::BadLatitude(latitude_deg));
        }
        Ok(Self {
            latitude_deg,
            longitude_deg: normalize_lon(longitude_deg),
            altitude_m,
        })
    }

    /// Radius from Earth center (km).
    pub fn radius_km(&self) -> f64 {
        EARTH_RADIUS_KM + self.altitude_m / 1000.0
    }

    /// Earth-fixed Cartesian position (km).
    pub fn ecef_km(&self) -> Vec3 {
        let lat = self.latitude_deg.to_radians();
        let lon = self.longitude_deg.to_radians();
        let r = self.radius_km();
        Vec3 {
            x: r * lat.cos() * lon.cos(),
            y: r * lat.cos() * lon.sin(),
            z: r * lat.sin(),
        }
    }
}

/// Normalizes a longitude in degrees to `(-180, 180]`.
pub fn normalize_lon(lon: f64) -> f64 {
    let mut l = (lon + 180.0).rem_euclid(360.0) - 180.0;
    if l == -180.0 {
        l = 180.0;
    }
    l
}

/// Great-circle distance between two ground points (km), ignoring altitude.
pub fn great_circle_km(a: &GroundPoint, b: &GroundPoint) -> f64 {
    let (la, lb) = (a.latitude_deg.to_radians(), b.latitude_deg.to_radians());
    let dlon = (b.longitude_deg - a.longitude_deg).to_radians();
    // Vincenty formula for the central angle; stable for antipodal points.
    let num = ((lb.cos() * dlon.sin()).powi(2)
        + (la.cos() * lb.sin() - la.sin() * lb.cos() * dlon.cos()).powi(2))
    .sqrt();
    let den = la.sin() * lb.sin() + la.cos() * lb.cos() * dlon.cos();
    EARTH_RADIUS_KM * num.atan2(den)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub fn dot(&self, o: &Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn sub(&self, o: &Vec3) -> Vec3 {
        Vec3 {
            x: self.x - o.x,
            y: self.y - o.y,
            z: self.z - o.z,
        }
    }

    pub fn scale(&self, s: f64) -> Vec3 {
        Vec3 {
            x: self.x * s,
            y: self.y * s,
            z: self.z * s,
        }
    }
}

/// A validated shell with the derived quantities the simulator needs.
#[derive(Debug, Clone)]
pub struct Shell {
    cfg: ShellConfig,
    mean_motion_rad_s: f64,
}

impl Shell {
    pub fn new(cfg: ShellConfig) -> Result<Self, ConstellationError> {
        cfg.validate()?;
        let a = cfg.semi_major_axis_km();
        Ok(Self {
            cfg,
            mean_motion_rad_s: (MU_KM3_S2 / a.powi(3)).sqrt(),
        })
    }

    pub fn config(&self) -> &ShellConfig {
        &self.cfg
    }

    pub fn num_orbits(&self) -> u32 {
        self.cfg.num_orbits
    }

    pub fn sats_per_orbit(&self) -> u32 {
        self.cfg.sats_per_orbit
    }

    pub fn num_sats(&self) -> u32 {
        self.cfg.num_sats()
    }

    pub fn orbital_period_s(&self) -> f64 {
        self.cfg.orbital_period_s()
    }

    pub fn coord(&self, sat: SatelliteId) -> GridCoord {
        GridCoord {
            x: sat.0 / self.cfg.sats_per_orbit,
            y: sat.0 % self.cfg.sats_per_orbit,
        }
    }

    pub fn sat(&self, c: GridCoord) -> SatelliteId {
        debug_assert!(c.x < self.cfg.num_orbits && c.y < self.cfg.sats_per_orbit);
        SatelliteId(c.x * self.cfg.sats_per_orbit + c.y)
    }

    pub fn all_sats(&self) -> impl Iterator<Item = SatelliteId> {
        (0..self.num_sats()).map(SatelliteId)
    }

    pub fn distance(&self, a: SatelliteId, b: SatelliteId) -> u32 {
        grid_distance(
            self.coord(a),
            self.coord(b),
            self.cfg.num_orbits,
            self.cfg.sats_per_orbit,
        )
    }

    /// The four +Grid neighbors: in-plane front/rear, adjacent plane left/right.
    pub fn neighbors(&self, sat: SatelliteId) -> [SatelliteId; 4] {
        let (x_n, y_n) = (self.cfg.num_orbits, self.cfg.sats_per_orbit);
        let c = self.coord(sat);
        [
            self.sat(GridCoord::new((c.x + 1) % x_n, c.y)),
            self.sat(GridCoord::new((c.x + x_n - 1) % x_n, c.y)),
            self.sat(GridCoord::new(c.x, (c.y + 1) % y_n)),
            self.sat(GridCoord::new(c.x, (c.y + y_n - 1) % y_n)),
        ]
    }

    /// Earth-fixed position at `t_seconds` after epoch (km).
    ///
    /// Planes are evenly spaced in right ascension; in-plane slots evenly
    /// spaced in mean anomaly with `phase_offset * (360/Y)` degrees added per
    /// plane index. Circular orbits, no perturbations.
    pub fn position_ecef_km(&self, sat: SatelliteId, t_seconds: f64) -> Vec3 {
        let c = self.coord(sat);
        let two_pi = 2.0 * std::f64::consts::PI;
        let raan = two_pi * c.x as f64 / self.cfg.num_orbits as f64;
        let u0 = two_pi * (c.y as f64 + self.cfg.phase_offset * c.x as f64)
            / self.cfg.sats_per_orbit as f64;
        let u = u0 + self.mean_motion_rad_s * t_seconds;
        let inc = self.cfg.inclination_deg.to_radians();
        let a = self.cfg.semi_major_axis_km();

        let (sin_u, cos_u) = u.sin_cos();
        let (sin_o, cos_o) = raan.sin_cos();
        let (sin_i, cos_i) = inc.sin_cos();
        // Inertial position of a circular orbit, then rotate into the
        // Earth-fixed frame by the elapsed rotation angle.
        let xi = a * (cos_o * cos_u - sin_o * sin_u * cos_i);
        let yi = a * (sin_o * cos_u + cos_o * sin_u * cos_i);
        let zi = a * sin_u * sin_i;
        let theta = two_pi * t_seconds / SIDEREAL_DAY_S;
        let (sin_t, cos_t) = theta.sin_cos();
        Vec3 {
            x: xi * cos_t + yi * sin_t,
            y: -xi * sin_t + yi * cos_t,
            z: zi,
        }
    }

    /// Elevation of `sat` above the local horizon of `p`, in degrees.
    pub fn elevation_deg(&self, p: &GroundPoint, sat: SatelliteId, t_seconds: f64) -> f64 {
        let g = p.ecef_km();
        let s = self.position_ecef_km(sat, t_seconds);
        let range = s.sub(&g);
        let up = g.scale(1.0 / g.norm());
        (range.dot(&up) / range.norm()).clamp(-1.0, 1.0).asin().to_degrees()
    }

    /// Cosine of the maximum Earth-central angle at which a satellite of
    /// this shell clears `min_elevation_deg` for an observer at radius
    /// `observer_radius_km`. For same-altitude satellites, elevation order
    /// matches central-angle order, so this one threshold decides visibility.
    pub fn cos_max_central_angle(&self, observer_radius_km: f64) -> f64 {
        let eps = self.cfg.min_elevation_deg.to_radians();
        let theta_max = (observer_radius_km * eps.cos() / self.semi_major()).acos() - eps;
        theta_max.cos()
    }

    fn semi_major(&self) -> f64 {
        self.cfg.semi_major_axis_km()
    }

    /// All satellites whose elevation above `p`'s horizon is at least the
    /// shell threshold at `t_seconds`, ascending by id.
    pub fn visible_satellites(&self, p: &GroundPoint, t_seconds: f64) -> Vec<SatelliteId> {
        let g = p.ecef_km();
        let g_norm = g.norm();
        let g_unit = g.scale(1.0 / g_norm);
        let cos_max = self.cos_max_central_angle(g_norm);
        let inv_a = 1.0 / self.semi_major();
        let mut out = Vec::new();
        for sat in self.all_sats() {
            let s = self.position_ecef_km(sat, t_seconds);
            if s.dot(&g_unit) * inv_a >= cos_max {
                out.push(sat);
            }
        }
        out
    }

    /// Like [`Shell::visible_satellites`] but also reports the satellite with
    /// the highest elevation (largest central-angle cosine), if any.
    pub fn visible_with_best(
        &self,
        p: &GroundPoint,
        t_seconds: f64,
    ) -> (Vec<SatelliteId>, Option<SatelliteId>) {
        let g = p.ecef_km();
        let g_norm = g.norm();
        let g_unit = g.scale(1.0 / g_norm);
        let cos_max = self.cos_max_central_angle(g_norm);
        let inv_a = 1.0 / self.semi_major();
        let mut out = Vec::new();
        let mut best: Option<(f64, SatelliteId)> = None;
        for sat in self.all_sats() {
            let s = self.position_ecef_km(sat, t_seconds);
            let c = s.dot(&g_unit) * inv_a;
            if c >= cos_max {
                out.push(sat);
                if best.map_or(true, |(bc, _)| c > bc) {
                    best = Some((c, sat));
                }
            }
        }
        (out, best.map(|(_, s)| s))
    }
}

/// Materialized per-slot visibility for one ground node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisibilityTimeline {
    pub node: String,
    /// One entry per time slot; satellite ids ascending.
    pub slots: Vec<Vec<SatelliteId>>,
}

impl VisibilityTimeline {
    pub fn horizon(&self) -> usize {
        self.slots.len()
    }

    pub fn visible_at(&self, slot: usize) -> &[SatelliteId] {
        &self.slots[slot]
    }

    pub fn is_visible(&self, sat: SatelliteId, slot: usize) -> bool {
        self.slots[slot].binary_search(&sat).is_ok()
    }
}

/// A waypoint trajectory pinned to time slots. Positions between waypoints
/// are interpolated linearly in latitude/longitude (shortest wrap in
/// longitude); before the first and after the last waypoint the position is
/// held constant. A single waypoint means a stationary node.
#[derive(Debug, Clone)]
pub struct Trajectory {
    waypoints: Vec<(f64, GroundPoint)>,
}

impl Trajectory {
    pub fn new(mut waypoints: Vec<(f64, GroundPoint)>) -> Result<Self, ConstellationError> {
        if waypoints.is_empty() {
            return Err(ConstellationError::NoWaypoints);
        }
        waypoints.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self { waypoints })
    }

    pub fn stationary(p: GroundPoint) -> Self {
        Self {
            waypoints: vec![(0.0, p)],
        }
    }

    pub fn start_seconds(&self) -> f64 {
        self.waypoints[0].0
    }

    pub fn end_seconds(&self) -> f64 {
        self.waypoints[self.waypoints.len() - 1].0
    }

    pub fn position_at(&self, t_seconds: f64) -> GroundPoint {
        let wps = &self.waypoints;
        if t_seconds <= wps[0].0 {
            return wps[0].1;
        }
        if t_seconds >= wps[wps.len() - 1].0 {
            return wps[wps.len() - 1].1;
        }
        let idx = wps.partition_point(|(ts, _)| *ts <= t_seconds);
        let (t0, p0) = wps[idx - 1];
        let (t1, p1) = wps[idx];
        let f = if t1 > t0 { (t_seconds - t0) / (t1 - t0) } else { 0.0 };
        let lat = p0.latitude_deg + f * (p1.latitude_deg - p0.latitude_deg);
        let mut dlon = p1.longitude_deg - p0.longitude_deg;
        if dlon > 180.0 {
            dlon -= 360.0;
        } else if dlon < -180.0 {
            dlon += 360.0;
        }
        let lon = normalize_lon(p0.longitude_deg + f * dlon);
        let alt = p0.altitude_m + f * (p1.altitude_m - p0.altitude_m);
        GroundPoint {
            latitude_deg: lat,
            longitude_deg: lon,
            altitude_m: alt,
        }
    }
}

/// Builds the per-slot visibility timeline for a moving (or stationary) node.
pub fn build_visibility_timeline(
    node: &str,
    trajectory: &Trajectory,
    shell: &Shell,
    horizon_slots: usize,
    slot_seconds: f64,
) -> VisibilityTimeline {
    use rayon::prelude::*;
    let slots: Vec<Vec<SatelliteId>> = (0..horizon_slots)
        .into_par_iter()
        .map(|k| {
            let t = k as f64 * slot_seconds;
            shell.visible_satellites(&trajectory.position_at(t), t)
        })
        .collect();
    VisibilityTimeline {
        node: node.to_string(),
        slots,
    }
}
