use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use pixcomm::{Algorithm, GridParams};
use pixcomm_cli::*;

#[derive(Parser)]
#[command(
    name = "pixcomm",
    version,
    about = "Superpixels from community detection on pixel grids"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Segment one image and write its label map.
    Segment {
        image: PathBuf,
        #[command(flatten)]
        opts: Opts,
        /// Output label map.
        #[arg(long)]
        out: PathBuf,
        /// Also write the image with region borders painted red (PPM).
        #[arg(long)]
        overlay: Option<PathBuf>,
    },
    /// Score every image of a dataset directory for each K.
    Evaluate {
        dataset: PathBuf,
        #[command(flatten)]
        opts: Opts,
        /// CSV report; failures go to `<out>.failures`.
        #[arg(long, default_value = "evaluation.csv")]
        out: PathBuf,
    },
    /// Mean grid sizes over a dataset. Sweeps r in {1,2,5} and rho in
    /// {0,0.98} unless --radius or --rho is given.
    GridStats {
        dataset: PathBuf,
        #[command(flatten)]
        opts: Opts,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Community statistics before merging. Runs every algorithm unless
    /// --algo is given, over the same sweep as grid-stats.
    CommunityStats {
        dataset: PathBuf,
        #[command(flatten)]
        opts: Opts,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Opts {
    #[arg(long)]
    radius: Option<usize>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long, default_value_t = GridParams::DEFAULT_SIGMA)]
    sigma: f64,
    /// Target region count; repeat for several.
    #[arg(long = "k")]
    ks: Vec<usize>,
    /// label-propagation, louvain or infomap.
    #[arg(long)]
    algo: Option<Algorithm>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Boundary recall tolerance in pixels (default: 0.25% of the diagonal).
    #[arg(long)]
    tolerance: Option<usize>,
}

impl Opts {
    fn config(&self) -> Result<RunConfig> {
        let mut ks = self.ks.clone();
        if ks.is_empty() {
            ks = DEFAULT_KS.to_vec();
        }
        let config = RunConfig {
            grid: GridParams::new(
                self.radius.unwrap_or(GridParams::DEFAULT_RADIUS),
                self.rho.unwrap_or(GridParams::DEFAULT_RHO),
                self.sigma,
            )?,
            algorithm: self.algo.unwrap_or(Algorithm::Infomap),
            ks,
            seed: self.seed,
            tolerance: self.tolerance,
        };
        config.validate()?;
        Ok(config)
    }

    fn sweep(&self) -> Vec<(usize, f64)> {
        if self.radius.is_none() && self.rho.is_none() {
            return DEFAULT_SWEEP.to_vec();
        }
        let radii = self.radius.map_or(vec![1, 2, 5], |r| vec![r]);
        let rhos = self.rho.map_or(vec![0.0, 0.98], |r| vec![r]);
        rhos.iter()
            .flat_map(|&rho| radii.iter().map(move |&r| (r, rho)))
            .collect()
    }
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Segment {
            image,
            opts,
            out,
            overlay,
        } => {
            let config = opts.config()?;
            anyhow::ensure!(config.ks.len() == 1, "segment takes exactly one --k");
            let summary = cmd_segment(&config, config.ks[0], &image, &out, overlay.as_deref())?;
            println!("k_actual {}", summary.k_actual);
            if summary.shortfall {
                eprintln!(
                    "warning: only {} regions before merging, fewer than the {} requested",
                    summary.initial_regions, summary.k_requested
                );
            }
            Ok(true)
        }
        Command::Evaluate { dataset, opts, out } => {
            let eval = cmd_evaluate(&opts.config()?, &dataset)?;
            write_scores(&eval.rows, sink(Some(&out))?)?;
            let mut sidecar = out.into_os_string();
            sidecar.push(".failures");
            write_failures(&eval.failures, sink(Some(Path::new(&sidecar)))?)?;
            for (stem, message) in &eval.failures {
                log::error!("{stem}: {message}");
            }
            Ok(eval.failures.is_empty())
        }
        Command::GridStats { dataset, opts, out } => {
            let rows = cmd_grid_stats(&dataset, &opts.sweep(), opts.sigma)?;
            write_grid_stats(&rows, sink(out.as_deref())?)?;
            Ok(true)
        }
        Command::CommunityStats { dataset, opts, out } => {
            let config = opts.config()?;
            let algorithms = opts.algo.map_or(Algorithm::ALL.to_vec(), |a| vec![a]);
            let rows = cmd_community_stats(&config, &dataset, &algorithms, &opts.sweep())?;
            write_community_stats(&rows, sink(out.as_deref())?)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
