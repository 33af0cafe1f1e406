use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use skycastle_cli::{plan, presets, run_matrix, run_oracle_instance, validate_and_load, RunOptions};

#[derive(Parser)]
#[command(
    name = "skycastle",
    about = "Trace-driven simulator for satellite-anchor mobility management in LEO mega-constellations",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario file and report every problem found.
    Validate { scenario: PathBuf },
    /// Run the scenario across mechanisms and seeds, writing one artifact
    /// directory per cell plus a cross-mechanism comparison.
    Run {
        scenario: PathBuf,
        /// Mechanism to run (repeatable); the scenario's list by default.
        #[arg(long = "mechanism")]
        mechanisms: Vec<String>,
        /// Seed to record (repeatable); the scenario's seed by default.
        #[arg(long = "seed")]
        seeds: Vec<u64>,
        /// Output directory; `runs/<scenario-stem>` by default.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Exit nonzero if the expected qualitative orderings are violated.
        #[arg(long)]
        assert_orderings: bool,
        /// Exclude each user's pre-registration warm-up from the ratios.
        #[arg(long)]
        exclude_warmup: bool,
    },
    /// Anchor-manager inspection.
    Ada {
        #[command(subcommand)]
        command: AdaCommand,
    },
    /// Algorithm oracles on hand-written instances.
    Oracle {
        #[command(subcommand)]
        command: OracleCommand,
    },
    /// Regenerate the synthetic scenario assets (ground-station lists,
    /// flight traces, sample instances) under a directory.
    GenPresets { dir: PathBuf },
}

#[derive(Subcommand)]
enum AdaCommand {
    /// Print the discovered cluster pattern, the anchor deployment and the
    /// detour-budget audit for a scenario.
    Plan { scenario: PathBuf },
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Run the greedy anchor assignment against the exhaustive oracle on a
    /// small instance file.
    Assign { instance: PathBuf },
}

fn main() -> ExitCode {
    match run_cli() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run_cli() -> anyhow::Result<ExitCode> {
    match Cli::parse().command {
        Command::Validate { scenario } => match validate_and_load(&scenario) {
            Ok(sc) => {
                println!(
                    "ok: {} satellites ({}x{}), {} ground stations, {} users, {} slots x {}s, H = {}",
                    sc.shell.num_sats(),
                    sc.shell.num_orbits,
                    sc.shell.sats_per_orbit,
                    sc.gs.len(),
                    sc.users.len(),
                    sc.horizon_slots,
                    sc.slot_seconds,
                    sc.ada.h,
                );
                Ok(ExitCode::SUCCESS)
            }
            Err(e) => {
                eprintln!("{e}");
                Ok(ExitCode::FAILURE)
            }
        },
        Command::Run {
            scenario,
            mechanisms,
            seeds,
            out,
            assert_orderings,
            exclude_warmup,
        } => {
            let sc = validate_and_load(&scenario)?;
            let mechanisms = if mechanisms.is_empty() {
                sc.mechanisms.clone()
            } else {
                mechanisms
            };
            let seeds = if seeds.is_empty() {
                vec![sc.rng_seed]
            } else {
                seeds
            };
            let out = out.unwrap_or_else(|| {
                PathBuf::from("runs").join(
                    scenario
                        .file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_else(|| "scenario".into()),
                )
            });
            let report = run_matrix(
                &sc,
                &mechanisms,
                &seeds,
                &out,
                RunOptions {
                    assert_orderings,
                    exclude_warmup,
                },
            )?;
            for dir in &report.cell_dirs {
                println!("wrote {}", dir.display());
            }
            for (mech, s) in &report.summaries {
                println!(
                    "{mech}: cur_up {:.4} cur_down {:.4} rtt_mean {:.1}ms ip/hr {:.2} ho/hr {:.2}",
                    s.cur_up, s.cur_down, s.rtt.mean, s.ip_changes_per_hour, s.handovers_per_hour
                );
            }
            if let Some(cmp) = &report.comparison {
                println!("comparison: {}", out.join("comparison.csv").display());
                for v in &cmp.violations {
                    println!("ordering violation: {v}");
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Ada {
            command: AdaCommand::Plan { scenario },
        } => {
            let sc = validate_and_load(&scenario)?;
            let report = plan(&sc).context("pattern discovery failed")?;
            println!(
                "visible union: {} satellites over {} slots from ({}, {})",
                report.union_size,
                sc.ada.discovery_window,
                sc.reference_point.latitude_deg,
                sc.reference_point.longitude_deg
            );
            println!(
                "pattern: {} offsets (discovered at anchor {}), H = {}",
                report.pattern_offsets.len(),
                report.pattern_anchor,
                sc.ada.h
            );
            println!("offsets: {:?}", report.pattern_offsets);
            println!("clusters: {}", report.division.num_clusters());
            for (anchor, members) in report.division.clusters() {
                println!("  anchor {anchor}: {} members", members.len());
            }
            match report.audit.worst {
                Some(w) => println!(
                    "detour audit: {} (worst member {} via anchor {}, slack {} hops)",
                    if report.audit.pass { "pass" } else { "FAIL" },
                    w.member,
                    w.anchor,
                    w.slack
                ),
                None => println!("detour audit: pass (empty shell)"),
            }
            Ok(if report.audit.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Oracle {
            command: OracleCommand::Assign { instance },
        } => {
            let outcome = run_oracle_instance(&instance)?;
            println!(
                "division: {} clusters over {} satellites (detour audit: {})",
                outcome.division.num_clusters(),
                outcome.division.num_sats(),
                if outcome.delay_constraint_pass {
                    "pass"
                } else {
                    "fail"
                }
            );
            let fmt = |tl: &skycastle_core::ada::AssignmentTimeline| -> String {
                tl.slots
                    .iter()
                    .map(|s| match s {
                        Some((ing, anc)) => format!("{ing}@{anc}"),
                        None => "-".to_string(),
                    })
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            println!("greedy    ({}): {}", outcome.greedy_objective, fmt(&outcome.greedy));
            println!(
                "bruteforce({}): {}",
                outcome.bruteforce_objective,
                fmt(&outcome.bruteforce)
            );
            if outcome.matches() {
                println!("objectives match");
                Ok(ExitCode::SUCCESS)
            } else {
                println!("objectives DIFFER");
                Ok(ExitCode::FAILURE)
            }
        }
        Command::GenPresets { dir } => {
            presets::write_presets(&dir)?;
            println!("presets written under {}", dir.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}
