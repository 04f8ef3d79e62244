//! `umbra`: optimize shadow-art sculptures from target shadow images.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use config::{parse_config, Pipeline, RunConfig};

#[derive(Parser)]
#[command(name = "umbra", version, about = "Shadow-art sculptures via differentiable silhouette rendering")]
struct Cli {
    /// Worker threads; 1 gives bit-reproducible runs.
    #[arg(long, global = true, env = "UMBRA_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's output directory.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    pipeline: Option<Pipeline>,
}

impl RunArgs {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg = parse_config(&self.config)?;
        if let Some(out) = &self.output {
            cfg.output = out.clone();
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(p) = self.pipeline {
            cfg.pipeline = p;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Optimize a sculpture and write all artifacts.
    Optimize(RunArgs),
    /// Carve the visual hull of the configured views.
    Carve(RunArgs),
    /// Render an existing OBJ or grid file from the configured views.
    Render {
        #[command(flatten)]
        run: RunArgs,
        /// `.obj` mesh or grid file.
        #[arg(long)]
        input: PathBuf,
    },
    /// Compare two image sets (directories of same-named PNGs, or two files).
    Metrics {
        rendered: PathBuf,
        target: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Extract a surface from a grid file.
    Export {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        iso: f64,
        /// Voxel-face surface instead of the smooth isosurface.
        #[arg(long)]
        blocky: bool,
        #[arg(long)]
        output: PathBuf,
    },
}

fn execute(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .context("configuring the thread pool")?;
    }
    match cli.command {
        Command::Optimize(args) => {
            let out = run::optimize(&args.load()?)?;
            println!("{}", out.display());
        }
        Command::Carve(args) => {
            let out = run::carve(&args.load()?)?;
            println!("{}", out.display());
        }
        Command::Render { run: args, input } => {
            let out = run::render(&args.load()?, &input)?;
            println!("{}", out.display());
        }
        Command::Metrics {
            rendered,
            target,
            threshold,
            output,
        } => {
            let json = run::metrics(&rendered, &target, threshold)?.to_json()?;
            match output {
                Some(path) => std::fs::write(&path, json + "\n").with_context(|| format!("writing {}", path.display()))?,
                None => println!("{json}"),
            }
        }
        Command::Export {
            grid,
            iso,
            blocky,
            output,
        } => run::export(&grid, iso, blocky, &output)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
