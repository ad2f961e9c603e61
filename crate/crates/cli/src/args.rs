//! Command-line surface of `ksim`.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{parse_config, Scenario};
use crate::error::CliError;
use crate::runner::{build_mesh, indicator_report, mesh_report, run_scenario, sweep, SweepSummary};

#[derive(Debug, Parser)]
#[command(
    name = "ksim",
    version,
    about = "Keller-Segel P1 finite element experiments"
)]
pub struct Cli {
    /// Log level filter (error, warn, info, debug, trace).
    #[arg(long, global = true, default_value = "info")]
    pub log: String,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and write diagnostics and snapshots.
    Run(ScenarioArgs),
    /// Run the non-blowup scenario for several C0 values.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Comma-separated C0 values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Build a mesh, print its statistics and optionally save it.
    Mesh {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Where to write the mesh file.
        #[arg(long)]
        save: Option<PathBuf>,
    },
    /// Print restriction indicators for the scenario's initial data.
    Indicators {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Report the (delta, eps) grid point whose B2 is nearest this value.
        #[arg(long)]
        b2_target: Option<f64>,
    },
}

/// Configuration file plus per-key overrides.
#[derive(Debug, Clone, Default, Args)]
pub struct ScenarioArgs {
    /// `key = value` configuration file; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// nonblowup, blowup or custom.
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long)]
    pub nsquare: Option<String>,
    /// acute, nonacute or external.
    #[arg(long = "macro")]
    pub macro_kind: Option<String>,
    /// Time step.
    #[arg(long)]
    pub k: Option<String>,
    #[arg(long)]
    pub steps: Option<String>,
    #[arg(long)]
    pub c0: Option<String>,
    #[arg(long)]
    pub cu: Option<String>,
    #[arg(long)]
    pub cv: Option<String>,
    /// Output directory; each run writes into its own subdirectory.
    #[arg(long)]
    pub out: Option<String>,
    /// Comma-separated step indices for VTK snapshots.
    #[arg(long)]
    pub snapshots: Option<String>,
    /// direct or iterative.
    #[arg(long)]
    pub solver: Option<String>,
    /// Mesh file replacing the generated macroelement mesh.
    #[arg(long)]
    pub mesh: Option<String>,
    #[arg(long)]
    pub run_id: Option<String>,
}

impl ScenarioArgs {
    pub fn resolve(&self) -> Result<Scenario, CliError> {
        let mut pairs = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| {
                    CliError::Config(format!("cannot read `{}`: {e}", path.display()))
                })?;
                parse_config(&text)?
            }
            None => BTreeMap::new(),
        };
        let flags = [
            ("scenario", &self.scenario),
            ("nsquare", &self.nsquare),
            ("macro", &self.macro_kind),
            ("k", &self.k),
            ("steps", &self.steps),
            ("c0", &self.c0),
            ("cu", &self.cu),
            ("cv", &self.cv),
            ("out", &self.out),
            ("snapshots", &self.snapshots),
            ("solver", &self.solver),
            ("mesh", &self.mesh),
            ("run_id", &self.run_id),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                pairs.insert(key.to_string(), v.clone());
            }
        }
        Scenario::from_pairs(&pairs)
    }
}

/// Executes a parsed command, returning the text to print on success.
pub fn execute(command: &Command) -> Result<String, CliError> {
    match command {
        Command::Run(args) => {
            let sc = args.resolve()?;
            let summary = run_scenario(&sc)?;
            let last = summary.records.last().expect("at least the initial record");
            let negative = summary
                .first_negative_step()
                .map_or("never".to_string(), |n| format!("step {n}"));
            Ok(format!(
                "wrote {}\nsteps {}, min u {:.6e}, final max u {:.6e}, first negative u: {negative}\n",
                summary.dir.display(),
                last.n,
                summary.min_u(),
                last.max_u,
            ))
        }
        Command::Sweep { scenario, values } => {
            let sc = scenario.resolve()?;
            let SweepSummary { table, runs } = sweep(&sc, values)?;
            let mut out = format!("wrote {}\n", table.display());
            let mut failed = 0;
            for (c0, r) in &runs {
                match r {
                    Ok(s) => out.push_str(&format!("C0 = {c0}: min u {:.6e}\n", s.min_u())),
                    Err(e) => {
                        failed += 1;
                        out.push_str(&format!("C0 = {c0}: {e}\n"));
                    }
                }
            }
            if failed > 0 {
                eprint!("{out}");
                return Err(CliError::Sweep {
                    failed,
                    total: runs.len(),
                });
            }
            Ok(out)
        }
        Command::Mesh { scenario, save } => {
            let sc = scenario.resolve()?;
            let mesh = build_mesh(&sc)?;
            mesh.check_conformity()?;
            let mut out = mesh_report(&mesh)?;
            if let Some(path) = save {
                ks_core::save_mesh(&mesh, path).map_err(|source| CliError::Output {
                    path: path.clone(),
                    source,
                })?;
                out.push_str(&format!("wrote {}\n", path.display()));
            }
            Ok(out)
        }
        Command::Indicators {
            scenario,
            b2_target,
        } => indicator_report(&scenario.resolve()?, *b2_target),
    }
}
