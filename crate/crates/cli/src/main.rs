//! `proxlb`: run static and dynamic load-balancing experiments and write
//! their results as CSV.

mod args;
mod config;
mod experiments;
mod output;
mod presets;

use std::fs;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::Parser;

use args::{Cli, Command, RunArgs};
use config::{short_hash, ExperimentConfig, Mode, Settings};
use output::{Manifest, Output};

fn settings_from(args: &RunArgs) -> Result<Settings> {
    let mut settings = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Settings::parse(&text).with_context(|| format!("in {}", path.display()))?
        }
        None => Settings::default(),
    };
    for (key, value) in args.given() {
        settings.set(key, value);
    }
    Ok(settings)
}

fn run_mode(mode: Mode, args: &RunArgs) -> Result<()> {
    let start = Instant::now();
    let settings = settings_from(args)?;
    let cfg = ExperimentConfig::from_settings(mode, &settings)?;
    let mut out = Output::create(&cfg.out, cfg.seed, &cfg.hash)?;
    let config = settings.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    let mut manifest = Manifest::new(mode.name(), &cfg.hash, config, cfg.seed_list());
    experiments::run(&cfg, &mut manifest, &mut out)?;
    manifest.write(&out, start.elapsed())?;
    log::info!("wrote {} files to {}", out.files().len(), out.dir().display());
    Ok(())
}

fn run_preset(args: &args::PresetArgs) -> Result<()> {
    let start = Instant::now();
    let preset = presets::find(&args.name)?;
    let canonical = format!("preset={}\nscale={}\nseed={}\n", preset.name, args.scale.name(), args.seed);
    let hash = short_hash(&canonical);
    let mut out = Output::create(&args.out.join(preset.name), args.seed, &hash)?;
    let config = [("preset", preset.name), ("scale", args.scale.name()), ("seed", &args.seed.to_string())]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    let mut manifest = Manifest::new(format!("preset {}", preset.name), &hash, config, vec![args.seed]);
    manifest.notes.push(format!("reproduces: {}", preset.reproduces));
    manifest.notes.push(format!("desk budget: {}", preset.desk_budget));
    println!("preset {} ({} scale): {}", preset.name, args.scale.name(), preset.reproduces);
    let mut ctx = presets::Ctx {
        scale: args.scale,
        seed: args.seed,
        out: &mut out,
        manifest: &mut manifest,
    };
    presets::run(preset, &mut ctx).with_context(|| format!("preset {}", preset.name))?;
    manifest.write(&out, start.elapsed())?;
    println!("wrote {} files to {} in {:.1}s", out.files().len(), out.dir().display(), start.elapsed().as_secs_f64());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if !proxlb::batch::init_workers(threads) {
            log::warn!("worker pool already initialised or sequential build; --threads ignored");
        }
    }
    let result = match &cli.command {
        Command::Static(a) => run_mode(Mode::Static, a),
        Command::Dynamic(a) => run_mode(Mode::Dynamic, a),
        Command::GraphStats(a) => run_mode(Mode::GraphStats, a),
        Command::Sweep(a) => run_mode(Mode::Sweep, a),
        Command::Preset(a) => run_preset(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
