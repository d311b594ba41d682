//! Named experiments, each reproducing one figure or table at paper scale
//! or at a reduced desk scale. Every preset needs only a seed.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use anyhow::Result;
use proxlb::distribution::joint_distance;
use proxlb::dynamic_sim::{DynamicConfig, DEFAULT_JOINT_PAIRS};
use proxlb::static_sim::ArrivalModel;
use proxlb::{PolicyKind, TopologySpec};

use crate::args::Scale;
use crate::config::{resolve_k, ConfigError, KSpec};
use crate::experiments::{
    build_graph, dynamic_study, k_field, policy_tag, run_rows, static_study, summary_row, write_distribution, write_evolution,
    write_mean_field, write_occupancy, Compare, DynamicStats, StaticPlan, RUN_HEADER, SOJOURN_NOTE, SUMMARY_HEADER,
};
use crate::output::{fmt, write_rows, Manifest, Output};

pub struct Preset {
    pub name: &'static str,
    pub reproduces: &'static str,
    /// Rough single-core wall time of the desk variant.
    pub desk_budget: &'static str,
    run: fn(&mut Ctx<'_>) -> Result<()>,
}

pub const CATALOG: &[Preset] = &[
    Preset {
        name: "tradeoff",
        reproduces: "max load vs request distance over k on a line (n = m = 1000)",
        desk_budget: "< 1 min",
        run: tradeoff,
    },
    Preset {
        name: "deterministic-pdf",
        reproduces: "load PDFs on line and ring for POT, Unif(log n), InvSq(log n), InvSq(n)",
        desk_budget: "< 1 min",
        run: deterministic_pdf,
    },
    Preset {
        name: "tv-vs-n",
        reproduces: "TV to POT vs n on line and ring",
        desk_budget: "< 2 min",
        run: tv_vs_n,
    },
    Preset {
        name: "rd-vs-n",
        reproduces: "average request distance vs n on line and ring",
        desk_budget: "< 2 min",
        run: rd_vs_n,
    },
    Preset {
        name: "random-graphs",
        reproduces: "ER / RR / BA parameter sweeps and size scaling, k in {2, log n, n}",
        desk_budget: "< 3 min",
        run: random_graphs,
    },
    Preset {
        name: "spatial-graphs",
        reproduces: "RGG radius sweep and spatial line / ring size sweeps, k in {log n, n}",
        desk_budget: "< 3 min",
        run: spatial_graphs,
    },
    Preset {
        name: "tv-evolution",
        reproduces: "TV to POT after every arrival for InvSq(n), m = 2n",
        desk_budget: "< 3 min",
        run: tv_evolution,
    },
    Preset {
        name: "dynamic-pdfs",
        reproduces: "stationary occupancy PDFs on the ring against POT and the mean-field limit",
        desk_budget: "< 10 min",
        run: dynamic_pdfs,
    },
    Preset {
        name: "dynamic-tables",
        reproduces: "mean sojourn, request distance and joint-PDF distance tables on the ring",
        desk_budget: "< 6 min",
        run: dynamic_tables,
    },
];

pub fn find(name: &str) -> Result<&'static Preset, ConfigError> {
    CATALOG
        .iter()
        .find(|p| p.name == name)
        .ok_or_else(|| ConfigError::UnknownPreset(name.to_string()))
}

pub struct Ctx<'a> {
    pub scale: Scale,
    pub seed: u64,
    pub out: &'a mut Output,
    pub manifest: &'a mut Manifest,
}

impl Ctx<'_> {
    fn pick<T>(&self, paper: T, desk: T) -> T {
        match self.scale {
            Scale::Paper => paper,
            Scale::Desk => desk,
        }
    }

    fn seeds(&self, count: u64) -> Vec<u64> {
        (0..count).map(|r| self.seed + r).collect()
    }
}

pub fn run(preset: &Preset, ctx: &mut Ctx<'_>) -> Result<()> {
    (preset.run)(ctx)
}

const STATIC_SEEDS: u64 = 10;
const LAMBDA: f64 = 0.95;
const MU: f64 = 1.0;

fn kinds(choices: &[(&str, KSpec)], n: usize) -> Result<Vec<PolicyKind>> {
    choices
        .iter()
        .map(|&(name, k)| {
            Ok(match name {
                "pot" => PolicyKind::Pot,
                "unif" => PolicyKind::UnifPot { k: resolve_k(k, n)? },
                _ => PolicyKind::InvSqPot { k: resolve_k(k, n)? },
            })
        })
        .collect()
}

fn log_n(n: usize) -> f64 {
    (n as f64).ln()
}

fn rgg_threshold(n: usize) -> f64 {
    (log_n(n) / (PI * n as f64)).sqrt()
}

fn tradeoff(ctx: &mut Ctx<'_>) -> Result<()> {
    let n = 1000;
    let spec = TopologySpec::Line { n };
    let graph = build_graph(&spec, ctx.seed)?;
    let mut ks: Vec<u32> = (0..10).map(|e| 1 << e).collect();
    ks.push(n as u32);
    let policies: Vec<PolicyKind> = ks
        .iter()
        .map(|&k| PolicyKind::UnifPot { k })
        .chain(ks.iter().map(|&k| PolicyKind::InvSqPot { k }))
        .collect();
    let seeds = ctx.seeds(STATIC_SEEDS);
    let plan = StaticPlan {
        graph: &graph,
        m: n as u64,
        arrivals: ArrivalModel::UniformOrigin,
        seeds: &seeds,
        compare: Compare::None,
    };
    let stats = static_study(&plan, &policies, ctx.manifest, "tradeoff")?;
    let rows: Vec<Vec<String>> = stats
        .iter()
        .map(|s| vec![s.policy.name().into(), k_field(s.policy), fmt(s.avg_max_load), fmt(s.avg_request_distance)])
        .collect();
    write_rows(ctx.out, "runs.csv", &RUN_HEADER, &run_rows(&spec, n as u64, &stats))?;
    write_rows(ctx.out, "tradeoff.csv", &["policy", "k", "avg_max_load", "avg_request_distance"], &rows)
}

fn deterministic_pdf(ctx: &mut Ctx<'_>) -> Result<()> {
    let n = ctx.pick(10_000, 1000);
    let seeds = ctx.seeds(STATIC_SEEDS);
    let mut runs = Vec::new();
    let mut summary = Vec::new();
    for spec in [TopologySpec::Line { n }, TopologySpec::Ring { n }] {
        let graph = build_graph(&spec, ctx.seed)?;
        let policies = kinds(&[("pot", KSpec::N), ("unif", KSpec::LogN), ("invsq", KSpec::LogN), ("invsq", KSpec::N)], n)?;
        let plan = StaticPlan {
            graph: &graph,
            m: n as u64,
            arrivals: ArrivalModel::UniformOrigin,
            seeds: &seeds,
            compare: Compare::Final,
        };
        let stats = static_study(&plan, &policies, ctx.manifest, &spec.to_string())?;
        for s in &stats {
            write_distribution(ctx.out, &format!("distribution_{}_{}.csv", spec.name(), policy_tag(s.policy)), &s.distribution)?;
            summary.push(vec![
                spec.name().into(),
                s.policy.name().into(),
                k_field(s.policy),
                fmt(s.avg_max_load),
                fmt(s.avg_request_distance),
                s.tv_vs_pot.map_or_else(String::new, fmt),
            ]);
        }
        runs.extend(run_rows(&spec, n as u64, &stats));
    }
    write_rows(ctx.out, "runs.csv", &RUN_HEADER, &runs)?;
    write_rows(
        ctx.out,
        "summary.csv",
        &["topology", "policy", "k", "avg_max_load", "avg_request_distance", "tv_vs_pot"],
        &summary,
    )
}

/// Line and ring over a list of sizes; returns (tv rows, rd rows, run rows).
type SweepRows = (Vec<Vec<String>>, Vec<Vec<String>>, Vec<Vec<String>>);

fn deterministic_sweep(ctx: &mut Ctx<'_>) -> Result<SweepRows> {
    let ns: Vec<usize> = ctx.pick((1..=10).map(|i| i * 1000).collect(), vec![100, 250, 500, 1000, 2000]);
    let seeds = ctx.seeds(STATIC_SEEDS);
    let (mut tv, mut rd, mut runs) = (Vec::new(), Vec::new(), Vec::new());
    for &n in &ns {
        for spec in [TopologySpec::Line { n }, TopologySpec::Ring { n }] {
            let graph = build_graph(&spec, ctx.seed)?;
            let apl = graph.average_path_length()?;
            let policies = kinds(
                &[
                    ("pot", KSpec::N),
                    ("unif", KSpec::LogN),
                    ("invsq", KSpec::LogN),
                    ("invsq", KSpec::N),
                    ("invsq", KSpec::Literal(1)),
                ],
                n,
            )?;
            let plan = StaticPlan {
                graph: &graph,
                m: n as u64,
                arrivals: ArrivalModel::UniformOrigin,
                seeds: &seeds,
                compare: Compare::Final,
            };
            let stats = static_study(&plan, &policies, ctx.manifest, &spec.to_string())?;
            for s in &stats {
                let head = vec![spec.name().to_string(), n.to_string(), s.policy.name().into(), k_field(s.policy)];
                if s.policy != PolicyKind::Pot {
                    tv.push([head.clone(), vec![fmt(s.tv_vs_pot.unwrap())]].concat());
                }
                rd.push([head, vec![fmt(s.avg_request_distance), fmt(apl)]].concat());
            }
            runs.extend(run_rows(&spec, n as u64, &stats));
        }
    }
    Ok((tv, rd, runs))
}

fn tv_vs_n(ctx: &mut Ctx<'_>) -> Result<()> {
    let (tv, _, runs) = deterministic_sweep(ctx)?;
    write_rows(ctx.out, "runs.csv", &RUN_HEADER, &runs)?;
    write_rows(ctx.out, "tv_vs_n.csv", &["topology", "n", "policy", "k", "tv_distance"], &tv)
}

fn rd_vs_n(ctx: &mut Ctx<'_>) -> Result<()> {
    let (_, rd, runs) = deterministic_sweep(ctx)?;
    write_rows(ctx.out, "runs.csv", &RUN_HEADER, &runs)?;
    write_rows(
        ctx.out,
        "rd_vs_n.csv",
        &["topology", "n", "policy", "k", "avg_request_distance", "avg_path_length"],
        &rd,
    )
}

fn sweep_policies(n: usize, ks: &[KSpec]) -> Result<Vec<PolicyKind>> {
    let mut choices = vec![("pot", KSpec::N)];
    for &k in ks {
        choices.push(("unif", k));
        choices.push(("invsq", k));
    }
    kinds(&choices, n)
}

fn random_graphs(ctx: &mut Ctx<'_>) -> Result<()> {
    let n = ctx.pick(10_000, 1000);
    let ks = [KSpec::Literal(2), KSpec::LogN, KSpec::N];
    let seeds = ctx.seeds(STATIC_SEEDS);
    let mut specs = Vec::new();
    for i in 0..5 {
        let gamma = log_n(n) / n as f64 * (1.0 + i as f64 / 4.0);
        specs.push(TopologySpec::ErdosRenyi { n, gamma });
    }
    specs.extend((5..=11).map(|beta| TopologySpec::RandomRegular { n: n + (n * beta) % 2, beta }));
    specs.extend((1..=7).map(|alpha| TopologySpec::BarabasiAlbert { n, alpha }));

    let (mut rows, mut runs) = (Vec::new(), Vec::new());
    for spec in specs {
        let graph = build_graph(&spec, ctx.seed)?;
        let plan = StaticPlan {
            graph: &graph,
            m: n as u64,
            arrivals: ArrivalModel::UniformOrigin,
            seeds: &seeds,
            compare: Compare::Final,
        };
        let stats = static_study(&plan, &sweep_policies(n, &ks)?, ctx.manifest, &spec.to_string())?;
        for s in &stats {
            rows.push(vec![
                spec.name().into(),
                spec.params(),
                s.policy.name().into(),
                k_field(s.policy),
                fmt(s.tv_vs_pot.unwrap()),
                fmt(s.avg_request_distance),
            ]);
        }
        runs.extend(run_rows(&spec, n as u64, &stats));
    }

    let ns: Vec<usize> = ctx.pick(vec![1000, 2500, 5000, 7500, 10_000], vec![250, 500, 1000]);
    let mut by_n = Vec::new();
    for &n in &ns {
        let specs = [
            TopologySpec::ErdosRenyi { n, gamma: 2.0 * log_n(n) / n as f64 },
            TopologySpec::RandomRegular { n, beta: 6 },
            TopologySpec::BarabasiAlbert { n, alpha: 3 },
        ];
        for spec in specs {
            let graph = build_graph(&spec, ctx.seed)?;
            let plan = StaticPlan {
                graph: &graph,
                m: n as u64,
                arrivals: ArrivalModel::UniformOrigin,
                seeds: &seeds,
                compare: Compare::None,
            };
            let stats = static_study(&plan, &sweep_policies(n, &ks)?, ctx.manifest, &spec.to_string())?;
            for s in &stats {
                by_n.push(vec![
                    spec.name().into(),
                    n.to_string(),
                    spec.params(),
                    s.policy.name().into(),
                    k_field(s.policy),
                    fmt(s.avg_request_distance),
                ]);
            }
            runs.extend(run_rows(&spec, n as u64, &stats));
        }
    }
    write_rows(ctx.out, "runs.csv", &RUN_HEADER, &runs)?;
    write_rows(
        ctx.out,
        "random_graphs.csv",
        &["topology", "params", "policy", "k", "tv_distance", "avg_request_distance"],
        &rows,
    )?;
    write_rows(
        ctx.out,
        "random_graphs_vs_n.csv",
        &["topology", "n", "params", "policy", "k", "avg_request_distance"],
        &by_n,
    )
}

fn spatial_graphs(ctx: &mut Ctx<'_>) -> Result<()> {
    let n = ctx.pick(10_000, 1000);
    let ks = [KSpec::LogN, KSpec::N];
    let seeds = ctx.seeds(STATIC_SEEDS);
    let (mut rgg_rows, mut size_rows, mut runs) = (Vec::new(), Vec::new(), Vec::new());

    // the exact threshold is rarely connected on the unit square, so the
    // sweep starts a little above it
    let lo = 1.25 * rgg_threshold(n);
    let hi = ((n as f64).sqrt() / (PI * n as f64)).sqrt();
    for i in 0..5 {
        let r = lo + (hi - lo) * i as f64 / 4.0;
        let spec = TopologySpec::RandomGeometric { n, r };
        let graph = build_graph(&spec, ctx.seed)?;
        let plan = StaticPlan {
            graph: &graph,
            m: n as u64,
            arrivals: ArrivalModel::UniformOrigin,
            seeds: &seeds,
            compare: Compare::Final,
        };
        let stats = static_study(&plan, &sweep_policies(n, &ks)?, ctx.manifest, &spec.to_string())?;
        for s in &stats {
            rgg_rows.push(vec![
                format!("{r:.6}"),
                s.policy.name().into(),
                k_field(s.policy),
                fmt(s.tv_vs_pot.unwrap()),
                fmt(s.avg_request_distance),
            ]);
        }
        runs.extend(run_rows(&spec, n as u64, &stats));
    }

    let ns: Vec<usize> = ctx.pick((1..=7).map(|i| i * 1000).collect(), vec![500, 1000, 2000]);
    for &n in &ns {
        for spec in [
            TopologySpec::SpatialLine { n, l_max: n as f64 },
            TopologySpec::SpatialRing { n, radius: 1.0 },
        ] {
            let graph = build_graph(&spec, ctx.seed)?;
            let plan = StaticPlan {
                graph: &graph,
                m: n as u64,
                arrivals: ArrivalModel::SpatialNearest,
                seeds: &seeds,
                compare: Compare::Final,
            };
            let stats = static_study(&plan, &sweep_policies(n, &ks)?, ctx.manifest, &spec.to_string())?;
            for s in &stats {
                size_rows.push(vec![
                    spec.name().into(),
                    n.to_string(),
                    s.policy.name().into(),
                    k_field(s.policy),
                    fmt(s.tv_vs_pot.unwrap()),
                    fmt(s.avg_request_distance),
                ]);
            }
            runs.extend(run_rows(&spec, n as u64, &stats));
        }
    }
    write_rows(ctx.out, "runs.csv", &RUN_HEADER, &runs)?;
    write_rows(
        ctx.out,
        "spatial_rgg.csv",
        &["r", "policy", "k", "tv_distance", "avg_request_distance"],
        &rgg_rows,
    )?;
    write_rows(
        ctx.out,
        "spatial_sizes.csv",
        &["topology", "n", "policy", "k", "tv_distance", "avg_request_distance"],
        &size_rows,
    )
}

fn tv_evolution(ctx: &mut Ctx<'_>) -> Result<()> {
    let n = ctx.pick(5000, 1000);
    let ln = log_n(n).round() as usize;
    let seeds = ctx.seeds(STATIC_SEEDS);
    let specs = [
        (TopologySpec::ErdosRenyi { n, gamma: 2.0 * log_n(n) / n as f64 }, ArrivalModel::UniformOrigin),
        (TopologySpec::BarabasiAlbert { n, alpha: ln }, ArrivalModel::UniformOrigin),
        (TopologySpec::RandomRegular { n, beta: 2 * ln }, ArrivalModel::UniformOrigin),
        (TopologySpec::Line { n }, ArrivalModel::UniformOrigin),
        (TopologySpec::Ring { n }, ArrivalModel::UniformOrigin),
        (TopologySpec::RandomGeometric { n, r: 1.5 * rgg_threshold(n) }, ArrivalModel::UniformOrigin),
        (TopologySpec::SpatialLine { n, l_max: n as f64 }, ArrivalModel::SpatialNearest),
        (TopologySpec::SpatialRing { n, radius: 1.0 }, ArrivalModel::SpatialNearest),
    ];
    for (spec, arrivals) in specs {
        let graph = build_graph(&spec, ctx.seed)?;
        let plan = StaticPlan {
            graph: &graph,
            m: 2 * n as u64,
            arrivals,
            seeds: &seeds,
            compare: Compare::EveryArrival,
        };
        let stats = static_study(&plan, &[PolicyKind::InvSqPot { k: n as u32 }], ctx.manifest, &spec.to_string())?;
        write_evolution(ctx.out, &format!("tv_evolution_{}.csv", spec.name()), stats[0].evolution.as_ref().unwrap())?;
    }
    Ok(())
}

/// Dynamic runs keyed by (n, policy), each computed once.
fn dynamic_runs(ctx: &mut Ctx<'_>, wanted: &[(usize, PolicyKind)], arrivals: impl Fn(usize) -> u64) -> Result<BTreeMap<(usize, String), DynamicStats>> {
    let mut by_n: BTreeMap<usize, Vec<PolicyKind>> = BTreeMap::new();
    for &(n, p) in wanted {
        let list = by_n.entry(n).or_default();
        if !list.contains(&p) {
            list.push(p);
        }
    }
    let mut out = BTreeMap::new();
    for (n, policies) in by_n {
        let graph = build_graph(&TopologySpec::Ring { n }, ctx.seed)?;
        let base = DynamicConfig {
            joint_pairs: DEFAULT_JOINT_PAIRS.iter().copied().filter(|&(a, b)| a < n && b < n).collect(),
            ..DynamicConfig::new(LAMBDA, MU, PolicyKind::Pot, arrivals(n), ctx.seed)
        };
        for s in dynamic_study(&graph, &base, &policies, &[ctx.seed], ctx.manifest, "ring")? {
            out.insert((n, s.policy.to_string()), s);
        }
    }
    ctx.manifest.notes.push(SOJOURN_NOTE.into());
    Ok(out)
}

fn both(ks: &[u32]) -> Vec<PolicyKind> {
    ks.iter()
        .flat_map(|&k| [PolicyKind::UnifPot { k }, PolicyKind::InvSqPot { k }])
        .collect()
}

fn dynamic_pdfs(ctx: &mut Ctx<'_>) -> Result<()> {
    let main_n = ctx.pick(1001, 101);
    let main_ks: Vec<u32> = ctx.pick(vec![2, 3, 5, 10, 500], vec![2, 3, 5, 10, 50]);
    let (small, large) = ctx.pick((250, 1001), (101, 250));
    let n_ks: Vec<u32> = ctx.pick(vec![2, 3, 5, 10], vec![2, 5]);
    let growth: Vec<usize> = ctx.pick(vec![10, 100, 1000, 2000], vec![10, 101, 250]);

    let mut wanted: Vec<(usize, PolicyKind)> = both(&main_ks).into_iter().map(|p| (main_n, p)).collect();
    wanted.push((21, PolicyKind::Pot));
    for &n in &[small, large] {
        wanted.extend(both(&n_ks).into_iter().map(|p| (n, p)));
    }
    for &n in &growth {
        wanted.extend(both(&[2]).into_iter().map(|p| (n, p)));
    }
    let scale = ctx.scale;
    let runs = dynamic_runs(ctx, &wanted, |n| match scale {
        Scale::Paper => n as u64 * 100_000,
        Scale::Desk => 10_000_000,
    })?;
    for ((n, _), s) in &runs {
        write_occupancy(ctx.out, &format!("occupancy_n{n}_{}.csv", policy_tag(s.policy)), &s.occupancy)?;
    }
    write_mean_field(ctx.out, LAMBDA, MU)
}

fn dynamic_tables(ctx: &mut Ctx<'_>) -> Result<()> {
    let n = ctx.pick(1001, 101);
    let ks: Vec<u32> = ctx.pick(vec![2, 3, 5, 10, 15, 20, 125, 500], vec![2, 3, 5, 10, 15, 20, 50]);
    let joint_ns: Vec<usize> = ctx.pick(vec![10, 1000, 2000], vec![10, 100]);
    let mut wanted: Vec<(usize, PolicyKind)> = both(&ks).into_iter().map(|p| (n, p)).collect();
    for &jn in &joint_ns {
        wanted.extend(both(&[2]).into_iter().map(|p| (jn, p)));
    }
    let scale = ctx.scale;
    let runs = dynamic_runs(ctx, &wanted, |n| match scale {
        Scale::Paper => n as u64 * 100_000,
        Scale::Desk => 10_000_000,
    })?;

    let mut summary = Vec::new();
    for p in both(&ks) {
        summary.push(summary_row(&runs[&(n, p.to_string())], LAMBDA));
    }
    write_rows(ctx.out, "summary.csv", &SUMMARY_HEADER, &summary)?;

    let mut joint_rows = Vec::new();
    for &jn in &joint_ns {
        for p in both(&[2]) {
            let s = &runs[&(jn, p.to_string())];
            let [a12, a13, a19] = [(0, 1), (0, 2), (0, 8)].map(|pair| s.joint(pair));
            let (a12, a13, a19) = (a12?, a13?, a19?);
            joint_rows.push(vec![
                p.name().into(),
                k_field(p),
                jn.to_string(),
                fmt(joint_distance(&a12, &a13)),
                fmt(joint_distance(&a12, &a19)),
                fmt(joint_distance(&a13, &a19)),
            ]);
        }
    }
    write_rows(
        ctx.out,
        "joint_distances.csv",
        &["policy", "k", "n", "d_q1q2_q1q3", "d_q1q2_q1q9", "d_q1q3_q1q9"],
        &joint_rows,
    )
}
