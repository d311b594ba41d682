//! Command-line surface. Every run flag is kept as a raw string so flags and
//! config-file entries go through the same typed parser.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "proxlb", version, about = "Proximity-aware power-of-two-choices experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Worker threads for independent runs (default: one per core).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Balls-and-bins allocation: m jobs that never leave.
    Static(RunArgs),
    /// Queueing simulation with Poisson arrivals and exponential service.
    Dynamic(RunArgs),
    /// Density, average path length and diameter of generated graphs.
    GraphStats(RunArgs),
    /// Static runs over a list of system sizes (`--n 100,1000,...`).
    Sweep(RunArgs),
    /// A named experiment reproducing one figure or table.
    Preset(PresetArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scale {
    /// Parameters as published (slow).
    Paper,
    /// Reduced sizes that finish in minutes.
    Desk,
}

impl Scale {
    pub fn name(self) -> &'static str {
        match self {
            Scale::Paper => "paper",
            Scale::Desk => "desk",
        }
    }
}

#[derive(Debug, Args)]
pub struct PresetArgs {
    /// One of: tradeoff, deterministic-pdf, tv-vs-n, rd-vs-n, random-graphs,
    /// spatial-graphs, tv-evolution, dynamic-pdfs, dynamic-tables.
    pub name: String,
    #[arg(long, value_enum, default_value_t = Scale::Desk)]
    pub scale: Scale,
    /// Base seed; run r uses seed + r.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
}

#[derive(Debug, Default, Args)]
pub struct RunArgs {
    /// Flat `key = value` file; flags given on the command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// line, ring, ba, rr, er, rgg, spatial-line, spatial-ring
    #[arg(long)]
    pub topology: Option<String>,
    /// Server count (a comma list for `sweep`).
    #[arg(long)]
    pub n: Option<String>,
    /// Jobs per static run (default: n).
    #[arg(long)]
    pub m: Option<String>,
    /// Comma list of pot, unif, invsq.
    #[arg(long)]
    pub policy: Option<String>,
    /// Comma list of hop limits: integers, `logn` (max(1, round(ln n))) or `n`.
    #[arg(long)]
    pub k: Option<String>,
    #[arg(long)]
    pub lambda: Option<String>,
    #[arg(long)]
    pub mu: Option<String>,
    /// Total arrivals per dynamic run (default: n * 10^5).
    #[arg(long)]
    pub arrivals: Option<String>,
    /// Number of seeds; run r uses seed + r.
    #[arg(long)]
    pub seeds: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
    /// Barabasi-Albert edges per new vertex (integer or e.g. `logn`).
    #[arg(long)]
    pub alpha: Option<String>,
    /// Random-regular degree (integer or e.g. `2logn`).
    #[arg(long)]
    pub beta: Option<String>,
    /// Erdos-Renyi edge probability (number or e.g. `2logn/n`).
    #[arg(long)]
    pub gamma: Option<String>,
    /// Geometric radius (number or a multiple of the threshold, e.g. `1.5rgg`).
    #[arg(long)]
    pub r: Option<String>,
    /// Spatial-line length (default: n).
    #[arg(long)]
    pub l_max: Option<String>,
    /// Spatial-ring radius (default: 1).
    #[arg(long)]
    pub radius: Option<String>,
    /// `uniform` or `nearest` (spatial graphs).
    #[arg(long)]
    pub arrival_model: Option<String>,
    /// Fraction of arrivals discarded as warm-up.
    #[arg(long)]
    pub warmup: Option<String>,
    /// Tracked server pairs, e.g. `0-1,0-2,0-8`.
    #[arg(long)]
    pub pairs: Option<String>,
}

impl RunArgs {
    /// Flag values that were actually given, keyed like the config file.
    pub fn given(&self) -> Vec<(&'static str, &str)> {
        let all = [
            ("topology", &self.topology),
            ("n", &self.n),
            ("m", &self.m),
            ("policy", &self.policy),
            ("k", &self.k),
            ("lambda", &self.lambda),
            ("mu", &self.mu),
            ("arrivals", &self.arrivals),
            ("seeds", &self.seeds),
            ("seed", &self.seed),
            ("out", &self.out),
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("gamma", &self.gamma),
            ("r", &self.r),
            ("l_max", &self.l_max),
            ("radius", &self.radius),
            ("arrival_model", &self.arrival_model),
            ("warmup", &self.warmup),
            ("pairs", &self.pairs),
        ];
        all.into_iter()
            .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
            .collect()
    }
}
