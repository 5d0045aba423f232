//! Command-line front end: estimates disparity maps for one stereo pair.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use lexstereo::config::Settings;
use lexstereo::run::{run, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "lexstereo", version, about = "Stereo matching with local expansion moves on disparity planes")]
struct Cli {
    /// Left image (8-bit PNG).
    #[arg(long, required_unless_present = "print_config")]
    left: Option<PathBuf>,
    /// Right image (8-bit PNG).
    #[arg(long, required_unless_present = "print_config")]
    right: Option<PathBuf>,
    /// Number of disparity levels; disparities range over [0, ndisp - 1].
    #[arg(long, required_unless_present = "print_config")]
    ndisp: Option<u32>,
    /// Left-view ground truth disparity (PFM).
    #[arg(long)]
    gt: Option<PathBuf>,
    /// Non-occlusion mask for the ground truth; 255 marks evaluated pixels.
    #[arg(long, requires = "gt")]
    nonocc: Option<PathBuf>,
    /// Parameter file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Skip the consistency check, fill and median filter.
    #[arg(long)]
    no_post: bool,
    /// Enable the RANSAC plane proposer.
    #[arg(long)]
    ransac: bool,
    /// Random seed (overrides the parameter file).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; the result does not depend on this.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, required_unless_present = "print_config")]
    out: Option<PathBuf>,
    /// Print the effective parameter file and exit.
    #[arg(long)]
    print_config: bool,
}

fn settings(cli: &Cli) -> lexstereo::Result<Settings> {
    let mut s = match &cli.config {
        Some(path) => Settings::from_file(path)?,
        None => Settings::default(),
    };
    if cli.no_post {
        s.postprocess = false;
    }
    if cli.ransac {
        s.apply_text("ransac = true")?;
    }
    if let Some(seed) = cli.seed {
        s.optimizer.seed = seed;
    }
    if let Some(w) = cli.workers {
        s.optimizer.workers = w;
    }
    s.validate()?;
    Ok(s)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let settings = match settings(&cli) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if cli.print_config {
        print!("{}", settings.to_config_string());
        return ExitCode::SUCCESS;
    }
    let ndisp = cli.ndisp.expect("required by clap");
    if ndisp < 2 {
        eprintln!("error: --ndisp must be at least 2");
        return ExitCode::from(2);
    }
    let cfg = RunConfig {
        left: cli.left.expect("required by clap"),
        right: cli.right.expect("required by clap"),
        gt: cli.gt,
        nonocc: cli.nonocc,
        out: cli.out.expect("required by clap"),
        disp_max: (ndisp - 1) as f64,
        settings,
    };
    match run(&cfg) {
        Ok(est) => {
            let secs = |s: &lexstereo::localexp::OptimizerState| s.trace.last().map_or(0.0, |r| r.seconds);
            log::info!("done in {:.1} s", secs(&est.left) + secs(&est.right));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
