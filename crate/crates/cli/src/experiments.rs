//! Batches of independent runs and the `static`, `dynamic`, `graph-stats`
//! and `sweep` subcommands built on them.

use std::collections::BTreeMap;
use std::time::Instant;

use anyhow::{Context, Result};
use proxlb::batch::par_map;
use proxlb::distribution::{total_variation, JointDistribution, LoadDistribution};
use proxlb::dynamic_sim::{run_dynamic, DynamicConfig, DynamicResult};
use proxlb::mean_field::mean_field_pot_pdf;
use proxlb::static_sim::{run_static_with, ArrivalModel, Snapshots};
use proxlb::{Graph, PolicyKind, SamplingTable, TopologySpec};

use crate::config::{expand_policies, ExperimentConfig, Mode};
use crate::output::{fmt, write_rows, Manifest, Output};

/// Hop limit as a CSV field; empty for POT.
pub fn k_field(p: PolicyKind) -> String {
    p.k().map_or_else(String::new, |k| k.to_string())
}

/// File-name fragment such as `pot` or `invsq_k7`.
pub fn policy_tag(p: PolicyKind) -> String {
    match p.k() {
        Some(k) => format!("{}_k{k}", p.name()),
        None => p.name().to_string(),
    }
}

pub fn build_graph(spec: &TopologySpec, seed: u64) -> Result<Graph> {
    spec.build(seed).with_context(|| format!("generating {spec}"))
}

pub struct StaticOutcome {
    pub seed: u64,
    pub max_load: u64,
    pub request_distance: f64,
    pub distribution: LoadDistribution,
    pub snapshots: Vec<(u64, LoadDistribution)>,
}

/// Per-policy aggregate over seeds.
pub struct StaticStats {
    pub policy: PolicyKind,
    pub runs: Vec<StaticOutcome>,
    pub avg_max_load: f64,
    pub avg_request_distance: f64,
    pub distribution: LoadDistribution,
    /// Mean over seeds of TV to an independently seeded POT run.
    pub tv_vs_pot: Option<f64>,
    /// Mean TV to POT after every arrival.
    pub evolution: Option<Vec<(u64, f64)>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Compare {
    None,
    Final,
    EveryArrival,
}

pub struct StaticPlan<'a> {
    pub graph: &'a Graph,
    pub m: u64,
    pub arrivals: ArrivalModel,
    pub seeds: &'a [u64],
    pub compare: Compare,
}

fn static_runs(plan: &StaticPlan<'_>, policy: PolicyKind, seeds: &[u64], manifest: &mut Manifest, label: &str) -> Result<Vec<StaticOutcome>> {
    let table = SamplingTable::new(plan.graph, policy)?;
    let snapshots = if plan.compare == Compare::EveryArrival {
        Snapshots::EveryArrival
    } else {
        Snapshots::None
    };
    let results = par_map(seeds.to_vec(), |seed| {
        let start = Instant::now();
        let run = run_static_with(&table, plan.m, plan.arrivals, seed, snapshots)?;
        let outcome = StaticOutcome {
            seed,
            max_load: run.max_load(),
            request_distance: run.average_request_distance()?,
            distribution: run.load_distribution(),
            snapshots: run.snapshots,
        };
        Ok::<_, proxlb::Error>((outcome, start.elapsed()))
    });
    let mut out = Vec::with_capacity(results.len());
    for r in results {
        let (o, wall) = r.with_context(|| format!("{label} {policy}"))?;
        manifest.record(format!("{label} {policy}"), o.seed, wall);
        out.push(o);
    }
    Ok(out)
}

/// Runs every policy over the seeds; POT comparisons use seeds shifted past
/// the run seeds so the reference is independent.
pub fn static_study(plan: &StaticPlan<'_>, policies: &[PolicyKind], manifest: &mut Manifest, label: &str) -> Result<Vec<StaticStats>> {
    let reference = if plan.compare == Compare::None {
        None
    } else {
        let shift = plan.seeds.len() as u64;
        let ref_seeds: Vec<u64> = plan.seeds.iter().map(|s| s + shift).collect();
        Some(static_runs(plan, PolicyKind::Pot, &ref_seeds, manifest, &format!("{label} reference"))?)
    };
    let mut stats = Vec::new();
    for &policy in policies {
        let runs = static_runs(plan, policy, plan.seeds, manifest, label)?;
        let count = runs.len() as f64;
        let tv_vs_pot = reference.as_ref().map(|r| {
            runs.iter()
                .zip(r)
                .map(|(a, b)| total_variation(&a.distribution, &b.distribution))
                .sum::<f64>()
                / count
        });
        let evolution = match (&reference, plan.compare) {
            (Some(r), Compare::EveryArrival) => Some(
                (0..plan.m as usize)
                    .map(|i| {
                        let tv = runs
                            .iter()
                            .zip(r)
                            .map(|(a, b)| total_variation(&a.snapshots[i].1, &b.snapshots[i].1))
                            .sum::<f64>()
                            / count;
                        (runs[0].snapshots[i].0, tv)
                    })
                    .collect(),
            ),
            _ => None,
        };
        let dists: Vec<LoadDistribution> = runs.iter().map(|r| r.distribution.clone()).collect();
        stats.push(StaticStats {
            policy,
            avg_max_load: runs.iter().map(|r| r.max_load as f64).sum::<f64>() / count,
            avg_request_distance: runs.iter().map(|r| r.request_distance).sum::<f64>() / count,
            distribution: LoadDistribution::average(&dists),
            tv_vs_pot,
            evolution,
            runs,
        });
    }
    Ok(stats)
}

pub const RUN_HEADER: [&str; 9] = ["seed", "topology", "params", "policy", "k", "m", "n", "max_load", "avg_request_distance"];

pub fn run_rows(spec: &TopologySpec, m: u64, stats: &[StaticStats]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for s in stats {
        for r in &s.runs {
            rows.push(vec![
                r.seed.to_string(),
                spec.name().to_string(),
                spec.params(),
                s.policy.name().to_string(),
                k_field(s.policy),
                m.to_string(),
                spec.n().to_string(),
                r.max_load.to_string(),
                fmt(r.request_distance),
            ]);
        }
    }
    rows
}

pub fn write_distribution(out: &mut Output, name: &str, d: &LoadDistribution) -> Result<()> {
    let rows: Vec<Vec<String>> = d.fractions().iter().enumerate().map(|(i, p)| vec![i.to_string(), fmt(*p)]).collect();
    write_rows(out, name, &["load", "fraction"], &rows)
}

pub fn write_occupancy(out: &mut Output, name: &str, d: &LoadDistribution) -> Result<()> {
    let rows: Vec<Vec<String>> = d.fractions().iter().enumerate().map(|(i, p)| vec![i.to_string(), fmt(*p)]).collect();
    write_rows(out, name, &["count", "probability"], &rows)
}

pub fn write_joint(out: &mut Output, name: &str, j: &JointDistribution) -> Result<()> {
    let rows: Vec<Vec<String>> = j
        .cells()
        .filter(|&(_, _, p)| p > 0.0)
        .map(|(a, b, p)| vec![a.to_string(), b.to_string(), fmt(p)])
        .collect();
    write_rows(out, name, &["qi", "qj", "probability"], &rows)
}

pub fn write_evolution(out: &mut Output, name: &str, evolution: &[(u64, f64)]) -> Result<()> {
    let rows: Vec<Vec<String>> = evolution.iter().map(|&(t, tv)| vec![t.to_string(), fmt(tv)]).collect();
    write_rows(out, name, &["t", "tv_distance"], &rows)
}

pub struct DynamicStats {
    pub policy: PolicyKind,
    pub n: usize,
    pub results: Vec<DynamicResult>,
    pub occupancy: LoadDistribution,
    pub mean_sojourn: f64,
    pub mean_request_distance: f64,
    pub arrivals: u64,
    pub departures: u64,
}

impl DynamicStats {
    /// Seed-averaged joint PDF of a tracked pair.
    pub fn joint(&self, pair: (usize, usize)) -> Result<JointDistribution> {
        let mut acc: Vec<Vec<f64>> = Vec::new();
        for r in &self.results {
            let j = r.joint_pdf(pair)?;
            for (a, b, p) in j.cells() {
                if acc.len() <= a {
                    acc.resize(a + 1, Vec::new());
                }
                if acc[a].len() <= b {
                    acc[a].resize(b + 1, 0.0);
                }
                acc[a][b] += p;
            }
        }
        Ok(JointDistribution::from_weights(&acc)?)
    }
}

/// One dynamic run per (policy, seed) on `graph`, fanned out together.
pub fn dynamic_study(
    graph: &Graph,
    base: &DynamicConfig,
    policies: &[PolicyKind],
    seeds: &[u64],
    manifest: &mut Manifest,
    label: &str,
) -> Result<Vec<DynamicStats>> {
    let jobs: Vec<(PolicyKind, u64)> = policies.iter().flat_map(|&p| seeds.iter().map(move |&s| (p, s))).collect();
    let results = par_map(jobs.clone(), |(policy, seed)| {
        let start = Instant::now();
        let cfg = DynamicConfig {
            policy,
            seed,
            ..base.clone()
        };
        run_dynamic(graph, cfg).map(|r| (r, start.elapsed()))
    });
    let mut grouped: BTreeMap<usize, Vec<DynamicResult>> = BTreeMap::new();
    for (i, ((policy, seed), r)) in jobs.iter().zip(results).enumerate() {
        let (r, wall) = r.with_context(|| format!("{label} {policy} n={} seed={seed}", graph.n()))?;
        manifest.record(format!("{label} {policy} n={}", graph.n()), *seed, wall);
        grouped.entry(i / seeds.len()).or_default().push(r);
    }
    let mut stats = Vec::new();
    for (i, results) in grouped {
        let count = results.len() as f64;
        let pdfs = results.iter().map(|r| r.occupancy_pdf()).collect::<Result<Vec<_>, _>>()?;
        let mut sojourn = 0.0;
        let mut rd = 0.0;
        for r in &results {
            sojourn += r.mean_sojourn_time()?;
            rd += r.mean_request_distance()?;
        }
        stats.push(DynamicStats {
            policy: policies[i],
            n: graph.n(),
            occupancy: LoadDistribution::average(&pdfs),
            mean_sojourn: sojourn / count,
            mean_request_distance: rd / count,
            arrivals: results.iter().map(|r| r.jobs.arrivals).sum(),
            departures: results.iter().map(|r| r.jobs.departures).sum(),
            results,
        });
    }
    Ok(stats)
}

pub const SUMMARY_HEADER: [&str; 8] = ["policy", "k", "n", "lambda", "mean_sojourn", "mean_request_distance", "arrivals", "departures"];

pub fn summary_row(s: &DynamicStats, lambda: f64) -> Vec<String> {
    vec![
        s.policy.name().to_string(),
        k_field(s.policy),
        s.n.to_string(),
        fmt(lambda),
        fmt(s.mean_sojourn),
        fmt(s.mean_request_distance),
        s.arrivals.to_string(),
        s.departures.to_string(),
    ]
}

pub const SOJOURN_NOTE: &str =
    "jobs still in the system at the horizon are excluded from mean_sojourn (bias O(1/horizon))";

pub fn write_mean_field(out: &mut Output, lambda: f64, mu: f64) -> Result<()> {
    let pdf = mean_field_pot_pdf(lambda, mu, 2, 64)?;
    write_occupancy(out, "mean_field.csv", &pdf)
}

/// Executes a `static`, `dynamic`, `graph-stats` or `sweep` configuration.
pub fn run(cfg: &ExperimentConfig, manifest: &mut Manifest, out: &mut Output) -> Result<()> {
    match cfg.mode {
        Mode::Static => run_static_mode(cfg, manifest, out),
        Mode::Sweep => run_sweep_mode(cfg, manifest, out),
        Mode::Dynamic => run_dynamic_mode(cfg, manifest, out),
        Mode::GraphStats => run_graph_stats(cfg, manifest, out),
    }
}

fn run_static_mode(cfg: &ExperimentConfig, manifest: &mut Manifest, out: &mut Output) -> Result<()> {
    let n = cfg.ns[0];
    let spec = cfg.topology.instantiate(n)?;
    let graph = build_graph(&spec, cfg.seed)?;
    let policies = expand_policies(&cfg.policies, &cfg.ks, n)?;
    let m = cfg.m.unwrap_or(n as u64);
    let seeds = cfg.seed_list();
    let plan = StaticPlan {
        graph: &graph,
        m,
        arrivals: cfg.arrival_model,
        seeds: &seeds,
        compare: Compare::Final,
    };
    let stats = static_study(&plan, &policies, manifest, "static")?;
    write_rows(out, "runs.csv", &RUN_HEADER, &run_rows(&spec, m, &stats))?;
    let mut summary = Vec::new();
    for s in &stats {
        write_distribution(out, &format!("distribution_{}.csv", policy_tag(s.policy)), &s.distribution)?;
        summary.push(vec![
            s.policy.name().to_string(),
            k_field(s.policy),
            n.to_string(),
            m.to_string(),
            fmt(s.avg_max_load),
            fmt(s.avg_request_distance),
            s.tv_vs_pot.map_or_else(String::new, fmt),
        ]);
        println!(
            "{:<16} max_load={:.2} request_distance={:.4} tv_vs_pot={:.4}",
            s.policy.to_string(),
            s.avg_max_load,
            s.avg_request_distance,
            s.tv_vs_pot.unwrap_or(f64::NAN)
        );
    }
    write_rows(
        out,
        "summary.csv",
        &["policy", "k", "n", "m", "avg_max_load", "avg_request_distance", "tv_vs_pot"],
        &summary,
    )
}

fn run_sweep_mode(cfg: &ExperimentConfig, manifest: &mut Manifest, out: &mut Output) -> Result<()> {
    let mut runs = Vec::new();
    let mut rows = Vec::new();
    let seeds = cfg.seed_list();
    for &n in &cfg.ns {
        let spec = cfg.topology.instantiate(n)?;
        let graph = build_graph(&spec, cfg.seed)?;
        let apl = graph.average_path_length()?;
        let policies = expand_policies(&cfg.policies, &cfg.ks, n)?;
        let m = cfg.m.unwrap_or(n as u64);
        let plan = StaticPlan {
            graph: &graph,
            m,
            arrivals: cfg.arrival_model,
            seeds: &seeds,
            compare: Compare::Final,
        };
        let stats = static_study(&plan, &policies, manifest, &format!("sweep n={n}"))?;
        runs.extend(run_rows(&spec, m, &stats));
        for s in &stats {
            rows.push(vec![
                n.to_string(),
                spec.name().to_string(),
                spec.params(),
                s.policy.name().to_string(),
                k_field(s.policy),
                fmt(s.avg_max_load),
                fmt(s.avg_request_distance),
                s.tv_vs_pot.map_or_else(String::new, fmt),
                fmt(apl),
            ]);
        }
        println!("n={n}: {} policies x {} seeds", policies.len(), seeds.len());
    }
    write_rows(out, "runs.csv", &RUN_HEADER, &runs)?;
    write_rows(
        out,
        "sweep.csv",
        &["n", "topology", "params", "policy", "k", "avg_max_load", "avg_request_distance", "tv_vs_pot", "avg_path_length"],
        &rows,
    )
}

fn run_dynamic_mode(cfg: &ExperimentConfig, manifest: &mut Manifest, out: &mut Output) -> Result<()> {
    let n = cfg.ns[0];
    let spec = cfg.topology.instantiate(n)?;
    let graph = build_graph(&spec, cfg.seed)?;
    let policies = expand_policies(&cfg.policies, &cfg.ks, n)?;
    let (lambda, mu) = (cfg.lambda.unwrap(), cfg.mu.unwrap());
    let base = DynamicConfig {
        warmup_fraction: cfg.warmup,
        joint_pairs: cfg.pairs.iter().copied().filter(|&(a, b)| a < n && b < n).collect(),
        ..DynamicConfig::new(lambda, mu, PolicyKind::Pot, cfg.arrivals.unwrap_or(n as u64 * 100_000), cfg.seed)
    };
    let stats = dynamic_study(&graph, &base, &policies, &cfg.seed_list(), manifest, "dynamic")?;
    let mut summary = Vec::new();
    for s in &stats {
        let tag = policy_tag(s.policy);
        write_occupancy(out, &format!("occupancy_{tag}.csv"), &s.occupancy)?;
        for &(a, b) in &base.joint_pairs {
            write_joint(out, &format!("joint_{tag}_{a}_{b}.csv"), &s.joint((a, b))?)?;
        }
        summary.push(summary_row(s, lambda));
        println!(
            "{:<16} sojourn={:.4} request_distance={:.4}",
            s.policy.to_string(),
            s.mean_sojourn,
            s.mean_request_distance
        );
    }
    write_rows(out, "summary.csv", &SUMMARY_HEADER, &summary)?;
    write_mean_field(out, lambda, mu)?;
    manifest.notes.push(SOJOURN_NOTE.into());
    Ok(())
}

fn run_graph_stats(cfg: &ExperimentConfig, manifest: &mut Manifest, out: &mut Output) -> Result<()> {
    let mut rows = Vec::new();
    for &n in &cfg.ns {
        let spec = cfg.topology.instantiate(n)?;
        for seed in cfg.seed_list() {
            let start = Instant::now();
            let g = build_graph(&spec, seed)?;
            let apl = g.average_path_length()?;
            let diameter = g.diameter()?;
            manifest.record(format!("graph-stats {spec}"), seed, start.elapsed());
            println!(
                "{spec} seed={seed} edges={} density={:.4} avg_path_length={:.4} diameter={diameter}",
                g.edge_count(),
                g.density(),
                apl
            );
            rows.push(vec![
                seed.to_string(),
                spec.name().to_string(),
                spec.params(),
                n.to_string(),
                g.edge_count().to_string(),
                fmt(g.density()),
                fmt(apl),
                diameter.to_string(),
            ]);
        }
    }
    write_rows(
        out,
        "graph_stats.csv",
        &["seed", "topology", "params", "n", "edges", "density", "avg_path_length", "diameter"],
        &rows,
    )
}
