use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use keynes_abm::config::{apply_seed_override, load_scenario, parse_values, scenario_grid, Scenario, SweepAxis};
use keynes_abm::harness::{default_replications, emit_csv, run_sweep, write_table, SweepResult, UDenominator};

#[derive(Parser)]
#[command(name = "keynes-abm", version, about = "Sequential agent-based macro simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a single scenario.
    Run(Common),
    /// Simulate every point of a one-dimensional grid.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Field to vary: r0, rho_mean or eta_c_mean.
        #[arg(long)]
        axis: SweepAxis,
        /// Comma-separated values or an inclusive start:stop:step range.
        #[arg(long)]
        values: String,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario file (flat key = value); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Monte Carlo replications per scenario (default 1 homogeneous, 200 otherwise).
    #[arg(long)]
    replications: Option<usize>,
    /// Base seed; overrides the file and the environment.
    #[arg(long)]
    seed: Option<u64>,
    /// Table destination; a `.full.csv` companion is written alongside.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the per-agent money ledger of every run.
    #[arg(long)]
    ledger: bool,
    /// Denominator of the reported unemployment rate.
    #[arg(long, default_value_t = UDenominator::All)]
    u_denominator: UDenominator,
}

fn base_scenario(common: &Common) -> Result<Scenario, String> {
    let text = match &common.config {
        Some(path) => fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?,
        None => String::new(),
    };
    let mut scenario = load_scenario(&text).map_err(|e| e.to_string())?;
    apply_seed_override(&mut scenario).map_err(|e| e.to_string())?;
    if let Some(seed) = common.seed {
        scenario.seed = seed;
    }
    Ok(scenario)
}

fn ledger_path(out: Option<&Path>) -> PathBuf {
    match out {
        Some(p) => {
            let stem = p
                .file_stem()
                .map_or_else(|| "results".into(), |s| s.to_string_lossy().into_owned());
            p.with_file_name(format!("{stem}.ledger.csv"))
        }
        None => PathBuf::from("ledger.csv"),
    }
}

fn write_ledgers(result: &SweepResult, path: &Path) -> io::Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "grid_index,replication,step,agent,account,amount")?;
    for log in &result.audit {
        for e in &log.entries {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                log.index, log.replication, e.step, e.agent, e.account, e.amount
            )?;
        }
    }
    w.flush()
}

fn execute(common: &Common, grid: Vec<Scenario>, axis: Option<SweepAxis>, base: &Scenario) -> Result<(), String> {
    let replications = common.replications.unwrap_or_else(|| default_replications(base));
    let result = run_sweep(&grid, replications, axis, base.seed, common.ledger).map_err(|e| e.to_string())?;
    match &common.out {
        Some(path) => emit_csv(&result, path, common.u_denominator).map_err(|e| e.to_string())?,
        None => write_table(&result, common.u_denominator, io::stdout().lock()).map_err(|e| e.to_string())?,
    }
    if common.ledger {
        let path = ledger_path(common.out.as_deref());
        write_ledgers(&result, &path).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(common) => base_scenario(common).and_then(|s| execute(common, vec![s.clone()], None, &s)),
        Command::Sweep { common, axis, values } => base_scenario(common).and_then(|base| {
            let values = parse_values(values).map_err(|e| e.to_string())?;
            let grid = scenario_grid(&base, *axis, &values).map_err(|e| e.to_string())?;
            execute(common, grid, Some(*axis), &base)
        }),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
