//! Scenario loading, run orchestration and artifact emission.

pub mod artifacts;
pub mod instance;
pub mod presets;
pub mod schema;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use skycastle_core::ada::AdaParams;
use skycastle_core::constellation::{GroundPoint, Shell, ShellConfig, Trajectory};
use skycastle_core::metrics::{compare, summarize, Comparison, MetricsSummary, SummarizeOptions};
use skycastle_core::sim::{
    run, GsSpec, LatencyModel, MechanismRegistry, Prepared, RunLog, Scenario, UserSpec,
};

use schema::ScenarioFile;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    /// Semantic problems, all of them, with field paths.
    #[error("{}", errors.join("\n"))]
    Invalid { errors: Vec<String> },
}

/// Parses one trace file: comma-separated `epoch_seconds,lat_deg,lon_deg,alt_m`
/// rows with strictly increasing timestamps. A leading header row is allowed.
pub fn load_trace(path: &Path) -> Result<Trajectory, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut waypoints = Vec::new();
    let mut last_t = f64::NEG_INFINITY;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if lineno == 0 && fields.first().is_some_and(|f| f.parse::<f64>().is_err()) {
            continue; // header
        }
        let parse = |idx: usize, name: &str| -> Result<f64, LoadError> {
            fields
                .get(idx)
                .and_then(|f| f.parse::<f64>().ok())
                .ok_or_else(|| LoadError::Parse {
                    path: path.to_path_buf(),
                    message: format!("line {}: bad {name} field", lineno + 1),
                })
        };
        let t = parse(0, "epoch_seconds")?;
        let lat = parse(1, "lat_deg")?;
        let lon = parse(2, "lon_deg")?;
        let alt = parse(3, "alt_m")?;
        if t <= last_t {
            return Err(LoadError::Parse {
                path: path.to_path_buf(),
                message: format!("line {}: timestamps must be strictly increasing", lineno + 1),
            });
        }
        last_t = t;
        let point = GroundPoint::new(lat, lon, alt).map_err(|e| LoadError::Parse {
            path: path.to_path_buf(),
            message: format!("line {}: {e}", lineno + 1),
        })?;
        waypoints.push((t, point));
    }
    Trajectory::new(waypoints).map_err(|e| LoadError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Reads, resolves and validates a scenario file. Every semantic problem is
/// reported, not just the first one.
pub fn validate_and_load(path: &Path) -> Result<Scenario, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let file: ScenarioFile = toml::from_str(&text).map_err(|e| LoadError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    resolve(path, file)
}

fn resolve(path: &Path, file: ScenarioFile) -> Result<Scenario, LoadError> {
    let mut errors = Vec::new();
    let base = path.parent().unwrap_or(Path::new("."));

    let shell_cfg = ShellConfig {
        num_orbits: file.shell.num_orbits,
        sats_per_orbit: file.shell.sats_per_orbit,
        altitude_km: file.shell.altitude_km,
        inclination_deg: file.shell.inclination_deg,
        phase_offset: file.shell.phase_offset,
        min_elevation_deg: file.shell.min_elevation_deg,
    };

    let slot_seconds = file.sim.slot_seconds;
    let h = file.ada.h.unwrap_or_else(|| {
        (file.shell.num_orbits + file.shell.sats_per_orbit) / 2
    });
    let discovery_window = file.ada.discovery_window_slots.unwrap_or_else(|| {
        if slot_seconds > 0.0 {
            (shell_cfg.orbital_period_s() / slot_seconds).ceil() as usize
        } else {
            1
        }
        .max(1)
    });
    let reference_point = GroundPoint::new(file.ada.reference_lat, file.ada.reference_lon, 0.0)
        .unwrap_or_else(|e| {
            errors.push(format!("ada.reference_lat: {e}"));
            GroundPoint::new(0.0, 0.0, 0.0).unwrap()
        });

    let latency_model = match file.sim.latency_model.as_str() {
        "per_hop" => LatencyModel::PerHop,
        "geometric" => LatencyModel::Geometric,
        other => {
            errors.push(format!(
                "sim.latency_model: expected 'per_hop' or 'geometric', got '{other}'"
            ));
            LatencyModel::PerHop
        }
    };

    let gs: Vec<GsSpec> = file
        .gs
        .iter()
        .filter_map(|g| match GroundPoint::new(g.lat, g.lon, 0.0) {
            Ok(point) => Some(GsSpec {
                id: g.id.clone(),
                point,
                server_adder_ms: g.server_adder_ms.unwrap_or(file.sim.server_adder_ms),
            }),
            Err(e) => {
                errors.push(format!("gs.{}: {e}", g.id));
                None
            }
        })
        .collect();

    let mut users = Vec::new();
    for u in &file.users {
        let trajectory = match (&u.trace, u.lat, u.lon) {
            (Some(trace), None, None) => match load_trace(&base.join(trace)) {
                Ok(t) => Some(t),
                Err(e) => {
                    errors.push(format!("users.{}: {e}", u.id));
                    None
                }
            },
            (None, Some(lat), Some(lon)) => match GroundPoint::new(lat, lon, u.alt_m.unwrap_or(0.0))
            {
                Ok(p) => Some(Trajectory::stationary(p)),
                Err(e) => {
                    errors.push(format!("users.{}: {e}", u.id));
                    None
                }
            },
            _ => {
                errors.push(format!(
                    "users.{}: set either trace or lat/lon, not both or neither",
                    u.id
                ));
                None
            }
        };
        if let Some(trajectory) = trajectory {
            users.push(UserSpec {
                id: u.id.clone(),
                trajectory,
                dest_gs: u.dest_gs.clone(),
            });
        }
    }

    let registry = MechanismRegistry::with_builtins();
    let mechanisms = file
        .mechanisms
        .clone()
        .unwrap_or_else(|| registry.names().map(str::to_string).collect());

    let scenario = Scenario {
        shell: shell_cfg,
        ada: AdaParams {
            h,
            discovery_window,
        },
        reference_point,
        horizon_slots: file.sim.horizon_slots,
        slot_seconds,
        latency_model,
        per_hop_ms: file.sim.per_hop_ms,
        convergence_slots: file.sim.convergence_slots,
        rng_seed: file.sim.rng_seed,
        gs,
        users,
        mechanisms,
    };
    errors.extend(scenario.validate(&registry));
    if errors.is_empty() {
        Ok(scenario)
    } else {
        Err(LoadError::Invalid { errors })
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub assert_orderings: bool,
    pub exclude_warmup: bool,
}

#[derive(Debug)]
pub struct MatrixReport {
    pub out_dir: PathBuf,
    pub cell_dirs: Vec<PathBuf>,
    /// Summaries of the first seed, keyed by mechanism.
    pub summaries: BTreeMap<String, MetricsSummary>,
    pub comparison: Option<Comparison>,
}

#[derive(Debug, Error)]
pub enum MatrixError {
    #[error(transparent)]
    Sim(#[from] skycastle_core::sim::SimError),
    #[error(transparent)]
    Metrics(#[from] skycastle_core::metrics::MetricsError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("qualitative-ordering assertions failed:\n{}", violations.join("\n"))]
    OrderingViolated { violations: Vec<String> },
}

/// Runs every `(mechanism, seed)` cell of a scenario, writing one artifact
/// directory per cell plus a cross-mechanism comparison table.
pub fn run_matrix(
    scenario: &Scenario,
    mechanisms: &[String],
    seeds: &[u64],
    out_dir: &Path,
    opts: RunOptions,
) -> Result<MatrixReport, MatrixError> {
    let registry = MechanismRegistry::with_builtins();
    let prep = Prepared::build(scenario.clone())?;
    let user_ids: Vec<String> = scenario.users.iter().map(|u| u.id.clone()).collect();
    let sum_opts = SummarizeOptions {
        exclude_warmup: opts.exclude_warmup,
    };

    std::fs::create_dir_all(out_dir)?;
    let mut cell_dirs = Vec::new();
    let mut summaries: BTreeMap<String, MetricsSummary> = BTreeMap::new();
    for (i, &seed) in seeds.iter().enumerate() {
        let mut cell_prep: Option<Prepared> = None;
        for mech in mechanisms {
            // The seed does not perturb the dynamics; it is recorded in the
            // artifacts and kept for future stochastic extensions.
            let prep_for_seed = if seed == scenario.rng_seed {
                &prep
            } else {
                if cell_prep.is_none() {
                    let mut sc = scenario.clone();
                    sc.rng_seed = seed;
                    cell_prep = Some(reseed(&prep, sc));
                }
                cell_prep.as_ref().unwrap()
            };
            let log = run(prep_for_seed, mech, &registry)?;
            let summary = summarize(&log.slots, scenario.slot_seconds, &user_ids, sum_opts)?;
            let dir = out_dir.join(format!("{mech}-seed{seed}"));
            artifacts::write_cell(&dir, prep_for_seed, &log, &summary, &user_ids)?;
            cell_dirs.push(dir);
            if i == 0 {
                summaries.insert(mech.clone(), summary);
            }
        }
    }

    let comparison = if summaries.len() >= 2 {
        let cmp = compare(&summaries)?;
        artifacts::write_comparison(&out_dir.join("comparison.csv"), &cmp)?;
        Some(cmp)
    } else {
        None
    };

    if opts.assert_orderings {
        if let Some(cmp) = &comparison {
            if !cmp.violations.is_empty() {
                return Err(MatrixError::OrderingViolated {
                    violations: cmp.violations.clone(),
                });
            }
        }
    }

    Ok(MatrixReport {
        out_dir: out_dir.to_path_buf(),
        cell_dirs,
        summaries,
        comparison,
    })
}

/// Clones prepared geometry under a different recorded seed.
fn reseed(prep: &Prepared, scenario: Scenario) -> Prepared {
    let mut p = prep.clone();
    p.scenario = scenario;
    p
}

/// The `ada plan` report: discovered pattern, division shape and the
/// detour-budget audit.
pub struct PlanReport {
    pub union_size: usize,
    pub pattern_offsets: Vec<(i32, i32)>,
    pub pattern_anchor: skycastle_core::constellation::SatelliteId,
    pub division: skycastle_core::ada::ClusterDivision,
    pub audit: skycastle_core::ada::DelayAudit,
}

pub fn plan(scenario: &Scenario) -> Result<PlanReport, skycastle_core::sim::SimError> {
    let shell = Shell::new(scenario.shell)?;
    let union = skycastle_core::sim::reference_union(
        &shell,
        &scenario.reference_point,
        scenario.ada.discovery_window,
        scenario.slot_seconds,
    );
    let (pattern, anchor) =
        skycastle_core::ada::pattern_discovery_with_anchor(&union, scenario.ada.h, &shell)?;
    let division = skycastle_core::ada::deploy_anchors(&shell, &pattern);
    let audit = skycastle_core::ada::check_delay_constraint(&division, scenario.ada.h, &shell);
    Ok(PlanReport {
        union_size: union.len(),
        pattern_offsets: pattern.offsets().to_vec(),
        pattern_anchor: anchor,
        division,
        audit,
    })
}

pub use instance::{run_oracle_instance, OracleOutcome};

/// Formats a float with the fixed six decimals every artifact uses.
pub fn fmt6(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.6}")
    } else {
        String::new()
    }
}
