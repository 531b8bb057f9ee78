//! capsweep command line.
//!
//! Exit codes: 0 success, 2 bad input (scenario, network or report files),
//! 3 load flow did not converge, 1 anything else.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use capsweep::report::{self, RunError, RunReport};
use capsweep::scenario::Scenario;
use capsweep::search::Algorithm;

#[derive(Parser)]
#[command(name = "capsweep", version, about = "Radial feeder load flow and capacitor placement")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Suppress the summary on stdout.
    #[arg(long, short, global = true)]
    quiet: bool,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Scenario file. Bare names are looked up in CAPSWEEP_SCENARIO_DIR.
    #[arg(long, short)]
    scenario: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short, default_value = "out")]
    out: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "CAPSWEEP_SCENARIO_DIR", hide_env_values = true)]
    scenario_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Load flow of the feeder without capacitors.
    Base(RunArgs),
    /// Search for the capacitor plan with the lowest cost.
    Optimize {
        #[command(flatten)]
        args: RunArgs,
        /// Overrides the scenario optimizer.
        #[arg(long)]
        optimizer: Option<Algorithm>,
    },
    /// Tabulate saved reports next to the cited reference rows.
    Compare {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        /// Also write the table as CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Leave out the cited reference rows.
        #[arg(long)]
        no_cited: bool,
    },
}

fn resolve_scenario(args: &RunArgs) -> Result<Scenario, RunError> {
    let mut scenario = match &args.scenario {
        None => Scenario::default(),
        Some(path) => {
            let candidate = match &args.scenario_dir {
                Some(dir) if !path.exists() && path.components().count() == 1 => {
                    let p = dir.join(path);
                    if p.extension().is_none() { p.with_extension("scenario") } else { p }
                }
                _ => path.clone(),
            };
            Scenario::load(&candidate)?
        }
    };
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    Ok(scenario)
}

fn print_summary(report: &RunReport) {
    let f = &report.flow;
    println!("{} ({})", report.label, report.scenario.name);
    println!("  P loss        {:.4} kW", f.totals.p_loss_kw);
    println!("  Q loss        {:.4} kvar", f.totals.q_loss_kvar);
    println!("  min voltage   {:.5} p.u. at bus {}", f.min_voltage.v_pu, f.min_voltage.bus);
    println!("  VD            {:.4} p.u.", f.voltage_deviation);
    println!("  min VSI       {:.4} at bus {}", f.min_vsi, f.min_vsi_bus);
    println!("  iterations    {}", f.iterations);
    for p in &report.plan {
        println!("  capacitor     {:.4} Mvar at bus {}", p.size_mvar, p.bus);
    }
    println!("  cost          {:.6}", report.cost);
    if let Some(r) = &report.reductions {
        println!(
            "  reduction     P {:.2}%  Q {:.2}%  VD {:.2}%",
            r.p_loss_pct, r.q_loss_pct, r.voltage_deviation_pct
        );
    }
}

fn written(paths: &[PathBuf], quiet: bool) {
    if !quiet {
        for p in paths {
            println!("wrote {}", p.display());
        }
    }
}

fn run(cli: Cli) -> Result<(), RunError> {
    match cli.command {
        Command::Base(args) => {
            let scenario = resolve_scenario(&args)?;
            let mut rep = report::run_base(&scenario)?;
            let paths = report::write_outputs(&args.out, &mut rep, None)?;
            if !cli.quiet {
                print_summary(&rep);
            }
            written(&paths, cli.quiet);
        }
        Command::Optimize { args, optimizer } => {
            let scenario = resolve_scenario(&args)?;
            let mut run = report::run_optimized(&scenario, optimizer)?;
            let history = run.run.history.clone();
            let paths = report::write_outputs(&args.out, &mut run.report, Some(&history))?;
            if !cli.quiet {
                print_summary(&run.report);
            }
            written(&paths, cli.quiet);
        }
        Command::Compare { reports, csv, no_cited } => {
            let loaded = reports.iter().map(|p| RunReport::read(p)).collect::<Result<Vec<_>, _>>()?;
            let cited = if no_cited { Vec::new() } else { report::default_cited_rows() };
            let table = report::compare_runs(&loaded, &cited)?;
            if let Some(path) = csv {
                write_csv(&path, &table.to_csv())?;
            }
            if !cli.quiet {
                print!("{}", table.to_text());
            }
        }
    }
    Ok(())
}

fn write_csv(path: &Path, text: &str) -> Result<(), RunError> {
    std::fs::write(path, text).map_err(|source| RunError::Io { path: path.into(), source })
}

fn exit_code(err: &RunError) -> u8 {
    match err {
        RunError::NotConverged { .. } => 3,
        RunError::Scenario(_) | RunError::Json { .. } | RunError::Compare(_) => 2,
        RunError::LoadFlow(_) | RunError::Optimizer(_) | RunError::Io { .. } => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("capsweep: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
