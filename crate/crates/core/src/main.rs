use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use microbot_capture::analytics::{derive_coefficients, PhysicalParams};
use microbot_capture::config::{load_config, render_config};
use microbot_capture::output::{self, RunManifest};
use microbot_capture::{Engine, Error};

#[derive(Parser)]
#[command(name = "microbot-capture", version, about = "Active-particle capture-efficiency simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; does not affect results.
        #[arg(long, env = "MICROBOT_CAPTURE_THREADS")]
        threads: Option<usize>,
    },
    /// Re-run the config recorded in a manifest.
    Replay {
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, env = "MICROBOT_CAPTURE_THREADS")]
        threads: Option<usize>,
    },
    /// Parse and validate a config, printing the resolved parameters.
    Validate { config: PathBuf },
    /// Print diffusion coefficients and persistence scales for a sphere.
    DeriveCoeffs {
        /// Particle radius, μm.
        #[arg(long, default_value_t = 0.5)]
        radius: f64,
        /// Temperature, K.
        #[arg(long, default_value_t = 293.0)]
        temp: f64,
        /// Viscosity, Pa·s.
        #[arg(long, default_value_t = 1.0016e-3)]
        viscosity: f64,
        /// Propulsion speed, μm/s.
        #[arg(long, default_value_t = 10.0)]
        speed: f64,
    },
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            threads,
        } => {
            let mut cfg = load_config(&config)?;
            if let Some(seed) = seed {
                cfg.master_seed = seed;
            }
            run(&cfg, &out, threads)
        }
        Command::Replay {
            manifest,
            out,
            threads,
        } => {
            let cfg = RunManifest::read(&manifest)?.config()?;
            run(&cfg, &out, threads)
        }
        Command::Validate { config } => {
            let cfg = load_config(&config)?;
            let c = cfg.coefficients()?;
            print!("{}", render_config(&cfg));
            println!("# D_T = {} um^2/s", c.translational_diffusion);
            println!("# D_R = {} rad^2/s", c.rotational_diffusion);
            println!("# P_l = {} um", c.persistence_length);
            println!("# tau_R = {} s", c.persistence_time);
            Ok(())
        }
        Command::DeriveCoeffs {
            radius,
            temp,
            viscosity,
            speed,
        } => {
            let p = PhysicalParams {
                particle_radius: radius,
                temperature: temp,
                viscosity,
                speed,
                ..PhysicalParams::default()
            };
            let c = derive_coefficients(&p)?;
            println!("translational_diffusion_um2_s = {}", c.translational_diffusion);
            println!("rotational_diffusion_rad2_s = {}", c.rotational_diffusion);
            println!("persistence_length_um = {}", c.persistence_length);
            println!("persistence_time_s = {}", c.persistence_time);
            Ok(())
        }
    }
}

fn run(cfg: &microbot_capture::ExperimentConfig, out: &std::path::Path, threads: Option<usize>) -> Result<(), Error> {
    let engine = Engine::new(threads)?;
    info!("running {} on {} threads", cfg.experiment.name(), engine.threads());
    let manifest = output::run(cfg, out, &engine)?;
    for path in &manifest.outputs {
        println!("{}", path.display());
    }
    println!("{}", out.join(output::MANIFEST_FILE).display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
