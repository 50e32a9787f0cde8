use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::{error, info};

use nearfield::cli::{run_scenario, validate_config, ConfigError, RunOptions};
use nearfield::{DielectricModel, MaterialDb};

#[derive(Parser)]
#[command(name = "nearfield", version, about = "Collective atom-surface radiative couplings")]
struct Args {
    /// Worker threads for parameter sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Relative tolerance of the Sommerfeld quadrature, overriding the scenario.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    #[arg(long, global = true, default_value = "results")]
    output_dir: PathBuf,
    /// Also write a JSON mirror of every table.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write its result tables.
    Run { config: PathBuf },
    /// Check a scenario file without computing anything.
    Validate { config: PathBuf },
    /// Print the bundled material database, optionally merged with a file.
    ListMaterials {
        #[arg(long)]
        file: Option<PathBuf>,
    },
}

fn model_kind(m: &DielectricModel) -> &'static str {
    match m {
        DielectricModel::Drude(_) => "drude",
        DielectricModel::DrudeLorentz(_) => "drude-lorentz",
        DielectricModel::ModifiedLorentz(_) => "modified-lorentz",
        DielectricModel::Constant { .. } => "constant",
        DielectricModel::PerfectConductor => "perfect-conductor",
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            error!("cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match args.command {
        Command::Validate { config } => match validate_config(&config) {
            Ok(_) => {
                println!("ok");
                ExitCode::SUCCESS
            }
            Err(ConfigError::Invalid(diags)) => {
                for d in diags {
                    println!("{d}");
                }
                ExitCode::from(2)
            }
            Err(e) => {
                println!("{e}");
                ExitCode::from(4)
            }
        },
        Command::Run { config } => {
            let opts = RunOptions { output_dir: args.output_dir, json: args.json, tolerance: args.tolerance };
            match run_scenario(&config, &opts) {
                Ok(report) => {
                    info!("{} rows", report.rows);
                    for p in report.written {
                        println!("{}", p.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    if let nearfield::cli::RunError::Config(ConfigError::Invalid(diags)) = &e {
                        for d in diags {
                            eprintln!("{d}");
                        }
                    } else {
                        eprintln!("{e}");
                    }
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
        Command::ListMaterials { file } => {
            let mut db = MaterialDb::bundled();
            if let Some(f) = file {
                match MaterialDb::load(&f) {
                    Ok(extra) => db.merge(extra),
                    Err(e) => {
                        eprintln!("{}: {e}", f.display());
                        return ExitCode::from(2);
                    }
                }
            }
            println!("data_version: {}", db.data_version().unwrap_or("unversioned"));
            for m in db.iter() {
                let wp = m.model.plasma_energy().map_or("-".to_string(), |w| format!("{w} eV"));
                println!("{}\t{}\tplasma={}\t{}", m.name, model_kind(&m.model), wp, m.source);
            }
            ExitCode::SUCCESS
        }
    }
}
