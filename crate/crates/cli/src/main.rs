//! `fgo`: figure-ground organization from the command line.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "fgo", version, about = "Border-ownership figure-ground organization")]
struct Cli {
    /// Flat key=value config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Config override, applied after the file; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,

    /// Worker threads (parallel builds only).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct WeightArgs {
    /// reference, with-sa, with-tj or with-both.
    #[arg(long)]
    preset: Option<String>,

    /// Cue weights alphaRef,alphaSA,alphaTJ.
    #[arg(long, value_name = "REF,SA,TJ")]
    weights: Option<String>,

    /// Apply local cues only at this many finest levels.
    #[arg(long)]
    top_layers: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the model on one image and write final maps and visualizations.
    Run {
        #[arg(long)]
        image: Option<PathBuf>,
        #[arg(long)]
        contours: Option<PathBuf>,
        #[arg(long)]
        segments: Option<PathBuf>,
        /// Signed ground-truth map (SM1); repeatable.
        #[arg(long = "gt")]
        gt: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        weights: WeightArgs,
    },
    /// Score a dataset manifest.
    Eval {
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Two presets; reports whether the second beats the first.
        #[arg(long, value_name = "A,B")]
        compare: Option<String>,
        /// all, train or test (split by seed).
        #[arg(long, default_value = "all")]
        split: commands::Split,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        weights: WeightArgs,
    },
    /// Grid-search cue weights on a dataset manifest.
    Tune {
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Free weights, e.g. alphaRef,alphaSA; the rest stay at 0.
        #[arg(long = "weights", value_name = "NAMES", default_value = "alphaRef,alphaSA,alphaTJ")]
        free: String,
        #[arg(long, default_value = "train")]
        split: commands::Split,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        top_layers: Option<usize>,
    },
    /// Render a synthetic stimulus with its annotations.
    Synth {
        /// isolated-square, overlapping-squares, shaded-edge or annulus.
        kind: String,
        #[arg(long)]
        size: Option<usize>,
        #[arg(long)]
        square: Option<usize>,
        #[arg(long)]
        gradient: Option<f64>,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long)]
        inner_radius: Option<f64>,
        #[arg(long)]
        figure: Option<f64>,
        #[arg(long)]
        ground: Option<f64>,
        /// Mirror left-right and top-bottom.
        #[arg(long)]
        flip: bool,
        /// File name stem; defaults to the kind.
        #[arg(long)]
        name: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

impl WeightArgs {
    fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        if let Some(p) = &self.preset {
            cfg.set("preset", p)?;
        }
        if let Some(w) = &self.weights {
            cfg.set("weights", w)?;
        }
        if let Some(k) = self.top_layers {
            cfg.set("topLayersOnly", &k.to_string())?;
        }
        Ok(())
    }
}

fn set_path(cfg: &mut RunConfig, key: &str, p: &Option<PathBuf>) -> Result<()> {
    if let Some(p) = p {
        cfg.set(key, &p.to_string_lossy())?;
    }
    Ok(())
}

fn build_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        cfg.apply_file(path)?;
    }
    for pair in &cli.set {
        cfg.apply_pair(pair)?;
    }
    match &cli.command {
        Command::Run {
            image,
            contours,
            segments,
            gt,
            out,
            weights,
        } => {
            set_path(&mut cfg, "image", image)?;
            set_path(&mut cfg, "contours", contours)?;
            set_path(&mut cfg, "segments", segments)?;
            set_path(&mut cfg, "out", out)?;
            if !gt.is_empty() {
                cfg.ground_truth = gt.clone();
            }
            weights.apply(&mut cfg)?;
        }
        Command::Eval { manifest, out, weights, .. } => {
            set_path(&mut cfg, "manifest", manifest)?;
            set_path(&mut cfg, "out", out)?;
            weights.apply(&mut cfg)?;
        }
        Command::Tune {
            manifest,
            out,
            top_layers,
            ..
        } => {
            set_path(&mut cfg, "manifest", manifest)?;
            set_path(&mut cfg, "out", out)?;
            if let Some(k) = top_layers {
                cfg.set("topLayersOnly", &k.to_string())?;
            }
        }
        Command::Synth { out, .. } => set_path(&mut cfg, "out", out)?,
    }
    cfg.apply_env()?;
    cfg.validate()?;
    Ok(cfg)
}

fn dispatch(cli: Cli) -> Result<()> {
    if let Some(n) = cli.jobs {
        if !fgo_core::exec::configure_threads(n.max(1)) {
            log::warn!("worker pool already initialised; --jobs ignored");
        }
    }
    let cfg = build_config(&cli)?;
    match cli.command {
        Command::Run { .. } => commands::run(&cfg),
        Command::Eval { compare, split, .. } => commands::eval(&cfg, compare.as_deref(), split),
        Command::Tune { free, split, .. } => commands::tune(&cfg, &free, split),
        Command::Synth {
            kind,
            size,
            square,
            gradient,
            radius,
            inner_radius,
            figure,
            ground,
            flip,
            name,
            ..
        } => {
            let mut p = fgo_core::eval::SynthParams::default();
            p.size = size.unwrap_or(p.size);
            p.square = square.unwrap_or(p.square);
            p.gradient = gradient.unwrap_or(p.gradient);
            p.radius = radius.unwrap_or(p.radius);
            p.inner_radius = inner_radius.or(p.inner_radius);
            p.figure = figure.unwrap_or(p.figure);
            p.ground = ground.unwrap_or(p.ground);
            p.flip = flip;
            commands::synth(&cfg, &kind, &p, name.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
