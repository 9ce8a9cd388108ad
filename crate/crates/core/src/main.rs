use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rcac_beam::beam_model::{build_beam, build_state_space, modal_summary};
use rcac_beam::experiments::output::{emit_outputs, results_csv};
use rcac_beam::experiments::sweep::{displacement_amplitude, run_sweep, CellOutcome, SweepSpec};
use rcac_beam::experiments::{Case, ExperimentConfig};
use rcac_beam::simulation::{run_simulation, LoopMode};
use rcac_beam::{Error, Result};

#[derive(Parser)]
#[command(
    name = "rcac-beam",
    about = "Adaptive vibration suppression of a cantilever beam"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Source {
    /// Configuration file; overrides --case.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Bundled preset.
    #[arg(long, default_value = "disp")]
    case: Case,
}

impl Source {
    fn load(&self) -> Result<ExperimentConfig> {
        match &self.config {
            Some(p) => ExperimentConfig::load(p),
            None => Ok(self.case.preset()),
        }
    }
}

#[derive(clap::Args)]
struct CellArgs {
    /// Control input element.
    #[arg(long)]
    iu: Option<usize>,
    /// Disturbance frequency [Hz].
    #[arg(long)]
    fdist: Option<f64>,
    /// Target-model delay.
    #[arg(long)]
    df: Option<usize>,
    /// Control weight.
    #[arg(long)]
    ru: Option<f64>,
    /// Simulation length [s].
    #[arg(long)]
    t_end: Option<f64>,
    /// Output directory for CSVs and the manifest.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Only run the uncontrolled beam.
    #[arg(long)]
    open_loop: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one cell: an open-loop and a closed-loop simulation.
    Simulate {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        cell: CellArgs,
    },
    /// Run the full input-location × frequency grid.
    Sweep {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Worker threads; defaults to the available parallelism.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Print natural frequencies and damping ratios.
    Modal {
        #[command(flatten)]
        source: Source,
    },
    Version,
}

fn simulate(mut cfg: ExperimentConfig, args: &CellArgs) -> Result<()> {
    let f = args.fdist.unwrap_or(cfg.simulation.f_dist);
    let i = args.iu.unwrap_or(cfg.simulation.i_u);
    cfg = cfg.cell(f, i);
    if let Some(d) = args.df {
        cfg.controller.d_f = d;
    }
    if let Some(r) = args.ru {
        cfg.controller.r_u = r;
    }
    if let Some(t) = args.t_end {
        cfg.simulation.t_end = t;
    }
    cfg.sweep.f_dist = vec![f];
    cfg.sweep.i_u = vec![i];
    cfg.sweep.cells.clear();

    let out = args.out.as_deref();
    if args.open_loop {
        cfg.simulation.mode = LoopMode::OpenLoop;
        let rec = run_simulation(&cfg.sim_config()?)?;
        println!(
            "open loop: f_dist = {f} Hz, steady-state amplitude {:.6e} m",
            displacement_amplitude(&rec)?
        );
        if let Some(dir) = out {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            let path = dir.join(format!("{}_f{f}_open_loop.csv", cfg.sweep.case));
            std::fs::write(&path, rec.to_csv()).map_err(|e| Error::io(&path, e))?;
        }
        return Ok(());
    }

    let output = run_sweep(&SweepSpec::new(cfg)?, 1)?;
    let row = &output.table.rows[0];
    match &row.outcome {
        CellOutcome::Done {
            metric,
            saturation_fraction,
        } => println!(
            "{} f_dist = {} Hz, i_u = {}, d_f = {}, R_u = {}: y_ol {:.6e} m, y_cl {:.6e} m, {:.2} dB, saturated {:.1}%",
            row.case,
            row.f_dist,
            row.i_u,
            row.d_f,
            row.r_u,
            metric.y_ol,
            metric.y_cl,
            metric.attenuation_db,
            100.0 * saturation_fraction
        ),
        CellOutcome::Failed(msg) => return Err(Error::Config(format!("cell failed: {msg}"))),
    }
    if let Some(dir) = out {
        emit_outputs(&output, dir)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { source, cell } => simulate(source.load()?, &cell),
        Command::Sweep {
            source,
            out,
            workers,
        } => {
            let workers = workers
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            let spec = SweepSpec::new(source.load()?)?;
            let output = run_sweep(&spec, workers)?;
            emit_outputs(&output, &out)?;
            print!("{}", results_csv(&output.table));
            let failed = output.table.failed().count();
            if failed > 0 {
                log::warn!("{failed} cell(s) failed");
            }
            Ok(())
        }
        Command::Modal { source } => {
            let cfg = source.load()?;
            let (_, model) = build_beam(&cfg.beam)?;
            let ss = build_state_space(&model, cfg.simulation.i_u, cfg.simulation.i_d)?;
            let summary = modal_summary(&ss)?;
            println!("{:>4} {:>14} {:>12}", "mode", "frequency_hz", "damping");
            for (k, m) in summary.modes.iter().enumerate() {
                println!(
                    "{:>4} {:>14.4} {:>12.6}",
                    k + 1,
                    m.frequency_hz,
                    m.damping_ratio
                );
            }
            if let Some(xi) = summary.min_damping_ratio() {
                println!("minimum damping ratio: {xi:.6}");
            }
            Ok(())
        }
        Command::Version => {
            println!("rcac-beam {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
