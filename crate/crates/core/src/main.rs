use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{error, info, warn};

use dotcavity::experiment::{
    cmd_run, cmd_sweep, cmd_truth_table, gnuplot_script, points_csv, record_path_for, write_file, ExperimentError,
    RunConfig, RunRecord,
};

#[derive(Parser)]
#[command(name = "dotcavity", version, about = "Photon-exchange entanglement of two quantum dots in a cavity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the entangling protocol once at the configured noise.
    Run(CommonArgs),
    /// Check the noiseless protocol on the four computational inputs.
    TruthTable(CommonArgs),
    /// Sweep the noise rate for each noise kind and write a CSV.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Worker threads for independent sweep points.
        #[arg(long)]
        workers: Option<usize>,
        /// Also write a gnuplot script next to the CSV.
        #[arg(long)]
        plot: bool,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// JSON config file; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output path (run record for run/truth-table, CSV for sweep).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Integrator step in units of 1/g, overriding the config.
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    quiet: bool,
}

impl CommonArgs {
    fn resolve(&self) -> Result<RunConfig, ExperimentError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(dt) = self.dt {
            cfg.integrator.dt = dt;
        }
        if let Some(out) = &self.output {
            cfg.output_path = Some(out.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_points(record: &RunRecord) {
    for p in &record.points {
        println!(
            "{:<16} gamma/g={:<10.4e} concurrence={:.6} eof={:.6} leakage={:.3e} trace_error={:.2e}{}",
            p.noise_kind,
            p.gamma_over_g,
            p.concurrence,
            p.eof,
            p.leakage,
            p.max_trace_drift,
            if p.failed { "  FAILED" } else { "" }
        );
    }
}

fn execute(command: Command) -> Result<RunRecord, ExperimentError> {
    match command {
        Command::Run(args) => {
            let cfg = args.resolve()?;
            let record = cmd_run(&cfg)?;
            if !args.quiet {
                print_points(&record);
            }
            if let Some(path) = &cfg.output_path {
                record.write(path)?;
                info!("wrote {}", path.display());
            }
            Ok(record)
        }
        Command::TruthTable(args) => {
            let cfg = args.resolve()?;
            let record = cmd_truth_table(&cfg)?;
            if !args.quiet {
                let table = record.truth_table.as_ref().expect("truth table present");
                for row in &table.rows {
                    println!(
                        "|{}{}0> -> {}|{}{}0>  fidelity={:.6} phase={:+.5} error={:.2e}  {}",
                        row.input[0],
                        row.input[1],
                        if row.expected_sign < 0 { "-" } else { "+" },
                        row.input[0],
                        row.input[1],
                        row.fidelity,
                        row.relative_phase,
                        row.phase_error,
                        if row.pass { "pass" } else { "FAIL" }
                    );
                }
                if table.local_phases_factored {
                    println!("(analytic local detuning phases factored out)");
                }
            }
            if let Some(path) = &cfg.output_path {
                record.write(path)?;
            }
            Ok(record)
        }
        Command::Sweep { common, workers, plot } => {
            let cfg = common.resolve()?;
            let mut pool = rayon::ThreadPoolBuilder::new();
            if let Some(n) = workers {
                pool = pool.num_threads(n.max(1));
            }
            let pool = pool
                .build()
                .map_err(|e| ExperimentError::Config { path: "--workers".into(), message: e.to_string() })?;
            let record = pool.install(|| cmd_sweep(&cfg))?;
            let csv = points_csv(&record.points);
            match &cfg.output_path {
                Some(path) => {
                    write_file(path, &csv)?;
                    record.write(&record_path_for(path))?;
                    if plot {
                        let kinds = &cfg.sweep.as_ref().expect("validated").kinds;
                        write_file(&path.with_extension("gp"), &gnuplot_script(path, kinds))?;
                    }
                    if !common.quiet {
                        print_points(&record);
                    }
                    info!("wrote {} ({} rows)", path.display(), record.points.len());
                }
                None => print!("{csv}"),
            }
            Ok(record)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let quiet = match &cli.command {
        Command::Run(a) | Command::TruthTable(a) => a.quiet,
        Command::Sweep { common, .. } => common.quiet,
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(if quiet { "error" } else { "info" }))
        .init();

    match execute(cli.command) {
        Ok(record) if record.failed() => {
            for p in record.points.iter().filter(|p| p.failed) {
                warn!("{} at gamma/g={:e}: {}", p.noise_kind, p.gamma_over_g, p.breaches.join("; "));
            }
            error!("diagnostic tolerances breached");
            ExitCode::from(2)
        }
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
