//! Acceptance gate: runs every criterion at its stated tolerance and prints
//! one PASS/FAIL line each. Exits non-zero if any criterion fails.
//!
//! `cargo test -p proxlb --test acceptance`

use std::collections::{BTreeMap, HashMap};
use std::time::{Duration, Instant};

use proxlb::batch::par_map;
use proxlb::distribution::{joint_distance, total_variation, LoadDistribution};
use proxlb::dynamic_sim::{run_dynamic, DynamicConfig, DynamicResult, DynamicSim};
use proxlb::rng::{self, Stream};
use proxlb::static_sim::{run_static_with, ArrivalModel, Snapshots};
use proxlb::{Graph, PolicyKind, SamplingTable, TopologySpec};
use rand::Rng;

const LAMBDA: f64 = 0.95;
const MU: f64 = 1.0;
const RING_N: usize = 1001;
const ARRIVALS: u64 = 10_000_000;

struct Outcome {
    pass: bool,
    details: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self { pass: true, details: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: String) {
        self.pass &= ok;
        self.details.push(if ok { what } else { format!("{what} [X]") });
    }
}

fn harmonic(k: u32) -> f64 {
    (1..=k).map(|j| 1.0 / j as f64).sum()
}

fn harmonic2(k: u32) -> f64 {
    (1..=k).map(|j| 1.0 / (j as f64 * j as f64)).sum()
}

/// Power-of-two mean-field system time: sum of tails (lambda/mu)^(2^i - 1), over lambda.
fn mean_field_sojourn(lambda: f64, mu: f64) -> f64 {
    let rho = lambda / mu;
    let mut sum = 0.0;
    let mut exp = 1.0f64;
    while exp < 1e6 {
        sum += rho.powf(exp);
        exp = 2.0 * exp + 1.0;
    }
    sum / lambda
}

type Key = (usize, PolicyKind);

struct Runs {
    results: HashMap<Key, DynamicResult>,
    wall: HashMap<Key, Duration>,
}

impl std::ops::Index<&Key> for Runs {
    type Output = DynamicResult;

    fn index(&self, key: &Key) -> &DynamicResult {
        &self.results[key]
    }
}

/// The dynamic runs shared between criteria, computed once as a batch.
fn dynamic_runs() -> Runs {
    let mut keys: Vec<Key> = Vec::new();
    for k in [2, 3, 5, 10, 20, 500] {
        keys.push((RING_N, PolicyKind::UnifPot { k }));
    }
    for k in [2, 3, 5, 500] {
        keys.push((RING_N, PolicyKind::InvSqPot { k }));
    }
    for k in [2, 5] {
        keys.push((250, PolicyKind::UnifPot { k }));
        keys.push((250, PolicyKind::InvSqPot { k }));
    }
    let results = par_map(keys.clone(), |(n, policy)| {
        let g = TopologySpec::Ring { n }.build(0).unwrap();
        let seed = 1000 + n as u64 * 7 + policy.k().unwrap() as u64 * 31 + (policy.name() == "invsq") as u64;
        let t = Instant::now();
        let r = run_dynamic(&g, DynamicConfig::new(LAMBDA, MU, policy, ARRIVALS, seed)).unwrap();
        (r, t.elapsed())
    });
    let mut runs = Runs { results: HashMap::new(), wall: HashMap::new() };
    for (key, (r, wall)) in keys.into_iter().zip(results) {
        runs.results.insert(key, r);
        runs.wall.insert(key, wall);
    }
    runs
}

fn criterion_1(runs: &Runs) -> Outcome {
    let mut o = Outcome::new();
    let ks = [2, 3, 5, 10, 20];
    let wall: Duration = ks.iter().map(|&k| runs.wall[&(RING_N, PolicyKind::UnifPot { k })]).sum();
    o.check(wall <= Duration::from_secs(180), format!("runtime {:.1}s", wall.as_secs_f64()));
    for k in ks {
        let rd = runs[&(RING_N, PolicyKind::UnifPot { k })].mean_request_distance().unwrap();
        let target = (k + 1) as f64 / 4.0;
        o.check((rd - target).abs() <= 0.015 * target, format!("k={k}: {rd:.4} vs {target:.4}"));
        if k == 2 {
            o.check((rd - 0.7499).abs() <= 0.01, format!("k=2 vs 0.7499: {rd:.4}"));
        }
    }
    o
}

fn criterion_2(runs: &Runs) -> Outcome {
    let mut o = Outcome::new();
    for (k, reported) in [(2, 0.6), (3, 0.6736), (5, 0.7801)] {
        let rd = runs[&(RING_N, PolicyKind::InvSqPot { k })].mean_request_distance().unwrap();
        let target = harmonic(k) / (2.0 * harmonic2(k));
        o.check((rd - target).abs() <= 0.015 * target, format!("k={k}: {rd:.4} vs {target:.4}"));
        o.check((rd - reported).abs() <= 0.01, format!("k={k} vs {reported}"));
    }
    o
}

fn criterion_3(runs: &Runs) -> Outcome {
    let mut o = Outcome::new();
    let unif = runs[&(RING_N, PolicyKind::UnifPot { k: 500 })].mean_sojourn_time().unwrap();
    let invsq = runs[&(RING_N, PolicyKind::InvSqPot { k: 500 })].mean_sojourn_time().unwrap();
    let oracle = mean_field_sojourn(LAMBDA, MU);
    o.check((unif - oracle).abs() <= 0.02 * oracle, format!("Unif(500) {unif:.4} vs {oracle:.4}"));
    let ratio = invsq / unif;
    o.check((ratio - 1.134).abs() <= 0.02, format!("InvSq/Unif {ratio:.4}"));
    o
}

fn criterion_4() -> Outcome {
    let mut o = Outcome::new();
    let g = TopologySpec::Ring { n: 10 }.build(0).unwrap();
    let mut cfg = DynamicConfig::new(LAMBDA, MU, PolicyKind::UnifPot { k: 2 }, 2 * ARRIVALS, 4);
    cfg.joint_pairs = vec![(0, 1), (0, 2), (0, 8)];
    let r = run_dynamic(&g, cfg).unwrap();
    let a12 = r.joint_pdf((0, 1)).unwrap();
    let a13 = r.joint_pdf((0, 2)).unwrap();
    let a19 = r.joint_pdf((0, 8)).unwrap();
    let (d12_13, d12_19, d13_19) = (joint_distance(&a12, &a13), joint_distance(&a12, &a19), joint_distance(&a13, &a19));
    o.check(d13_19 <= 0.01, format!("|a13-a19|={d13_19:.4}"));
    o.check(d12_13 > d13_19 && d12_19 > d13_19, format!("|a12-a13|={d12_13:.4} |a12-a19|={d12_19:.4}"));
    o
}

fn criterion_5(runs: &Runs) -> Outcome {
    let mut o = Outcome::new();
    for k in [2, 5] {
        for policy in [PolicyKind::UnifPot { k }, PolicyKind::InvSqPot { k }] {
            let small = runs[&(250, policy)].occupancy_pdf().unwrap();
            let large = runs[&(RING_N, policy)].occupancy_pdf().unwrap();
            let tv = total_variation(&small, &large);
            o.check(tv <= 0.02, format!("{policy}: {tv:.4}"));
        }
    }
    o
}

struct StaticSummary {
    mean_tv: f64,
    mean_rd: f64,
}

/// Ten seeds of `policy` against ten independently seeded POT runs on Ring(n), m = n.
fn static_vs_pot(g: &Graph, policy: PolicyKind, pot: &[(LoadDistribution, f64)]) -> StaticSummary {
    let table = SamplingTable::new(g, policy).unwrap();
    let m = g.n() as u64;
    let mut tv = 0.0;
    let mut rd = 0.0;
    for (seed, (pot_dist, _)) in pot.iter().enumerate() {
        let run = run_static_with(&table, m, ArrivalModel::UniformOrigin, seed as u64, Snapshots::None).unwrap();
        tv += total_variation(&run.load_distribution(), pot_dist);
        rd += run.average_request_distance().unwrap();
    }
    StaticSummary { mean_tv: tv / pot.len() as f64, mean_rd: rd / pot.len() as f64 }
}

fn pot_runs(g: &Graph) -> Vec<(LoadDistribution, f64)> {
    let table = SamplingTable::new(g, PolicyKind::Pot).unwrap();
    (0..10)
        .map(|s| {
            let run = run_static_with(&table, g.n() as u64, ArrivalModel::UniformOrigin, 5000 + s, Snapshots::None).unwrap();
            (run.load_distribution(), run.average_request_distance().unwrap())
        })
        .collect()
}

fn log_k(n: usize) -> u32 {
    ((n as f64).ln().round() as u32).max(1)
}

fn criteria_6_and_7() -> (Outcome, Outcome) {
    let start = Instant::now();
    let n = 1000;
    let g = TopologySpec::Ring { n }.build(0).unwrap();
    let k = log_k(n);
    let pot = pot_runs(&g);
    let unif = static_vs_pot(&g, PolicyKind::UnifPot { k }, &pot);
    let invsq = static_vs_pot(&g, PolicyKind::InvSqPot { k }, &pot);
    let elapsed = start.elapsed();

    let mut six = Outcome::new();
    six.check(unif.mean_tv <= 0.05, format!("TV(Unif({k}),POT)={:.4}", unif.mean_tv));
    six.check(invsq.mean_tv <= 0.08, format!("TV(InvSq({k}),POT)={:.4}", invsq.mean_tv));
    six.check(elapsed <= Duration::from_secs(60), format!("{:.1}s", elapsed.as_secs_f64()));

    let mut seven = Outcome::new();
    let pot_rd = pot.iter().map(|p| p.1).sum::<f64>() / pot.len() as f64;
    let ratio = invsq.mean_rd / pot_rd;
    seven.check(ratio <= 0.05, format!("InvSq({k}) {:.4} / POT {pot_rd:.2} = {:.4}", invsq.mean_rd, ratio));
    (six, seven)
}

fn criterion_8() -> Outcome {
    let mut o = Outcome::new();
    let mut rng = rng::stream(8, Stream::Graph);
    let mut mismatches = 0;
    for i in 0..20 {
        let n = rng.random_range(10..=200usize);
        let spec = match i % 4 {
            0 => TopologySpec::ErdosRenyi { n, gamma: (3.0 * (n as f64).ln() / n as f64).min(1.0) },
            1 => TopologySpec::BarabasiAlbert { n, alpha: 1 + i % 4 },
            2 => TopologySpec::RandomRegular { n: n + n % 2, beta: 3 + 2 * (i % 2) },
            _ => TopologySpec::RandomGeometric { n, r: 1.5 * ((n as f64).ln() / (std::f64::consts::PI * n as f64)).sqrt() },
        };
        let g = spec.build(rng.random()).unwrap();
        let diam = g.diameter().unwrap();
        let u1 = SamplingTable::new(&g, PolicyKind::UnifPot { k: 1 }).unwrap();
        let i1 = SamplingTable::new(&g, PolicyKind::InvSqPot { k: 1 }).unwrap();
        let ud = SamplingTable::new(&g, PolicyKind::UnifPot { k: diam }).unwrap();
        let pot = SamplingTable::new(&g, PolicyKind::Pot).unwrap();
        for u in 0..g.n() {
            for v in 0..g.n() {
                if u1.probability(u, v) != i1.probability(u, v) || ud.probability(u, v) != pot.probability(u, v) {
                    mismatches += 1;
                }
            }
        }
    }
    o.check(mismatches == 0, format!("20 graphs, {mismatches} mismatched entries"));
    o
}

fn exact_static_law(g: &Graph, policy: PolicyKind, m: u64) -> LoadDistribution {
    fn walk(p: &[Vec<f64>], loads: &mut Vec<u64>, steps: u64, prob: f64, acc: &mut BTreeMap<u64, f64>) {
        let n = loads.len();
        if steps == 0 {
            for &l in loads.iter() {
                *acc.entry(l).or_default() += prob / n as f64;
            }
            return;
        }
        for u in 0..n {
            for v in 0..n {
                let q = prob / n as f64 * p[u][v];
                if q == 0.0 {
                    continue;
                }
                let targets: &[(usize, f64)] = match loads[u].cmp(&loads[v]) {
                    std::cmp::Ordering::Less => &[(u, 1.0)],
                    std::cmp::Ordering::Greater => &[(v, 1.0)],
                    std::cmp::Ordering::Equal => &[(u, 0.5), (v, 0.5)],
                };
                for &(dest, share) in targets {
                    loads[dest] += 1;
                    walk(p, loads, steps - 1, q * share, acc);
                    loads[dest] -= 1;
                }
            }
        }
    }
    let n = g.n();
    let p: Vec<Vec<f64>> = (0..n)
        .map(|u| {
            let d = g.bfs(u);
            let w: Vec<f64> = (0..n)
                .map(|v| match policy {
                    PolicyKind::InvSqPot { k } if v != u && d[v] <= k => 1.0 / (d[v] as f64).powi(2),
                    PolicyKind::UnifPot { k } if v != u && d[v] <= k => 1.0,
                    PolicyKind::Pot if v != u => 1.0,
                    _ => 0.0,
                })
                .collect();
            let t: f64 = w.iter().sum();
            w.into_iter().map(|x| x / t).collect()
        })
        .collect();
    let mut acc = BTreeMap::new();
    walk(&p, &mut vec![0; n], m, 1.0, &mut acc);
    let len = *acc.keys().max().unwrap() as usize + 1;
    let mut w = vec![0.0; len];
    for (l, p) in acc {
        w[l as usize] = p;
    }
    LoadDistribution::from_weights(&w).unwrap()
}

fn criterion_9() -> Outcome {
    let mut o = Outcome::new();
    let g = TopologySpec::Line { n: 5 }.build(0).unwrap();
    let policy = PolicyKind::InvSqPot { k: 2 };
    let exact = exact_static_law(&g, policy, 3);
    let table = SamplingTable::new(&g, policy).unwrap();
    let mut counts = vec![0u64; 4];
    for seed in 0..1_000_000 {
        let run = run_static_with(&table, 3, ArrivalModel::UniformOrigin, seed, Snapshots::None).unwrap();
        for &l in run.state.loads() {
            counts[l as usize] += 1;
        }
    }
    let tv = total_variation(&exact, &LoadDistribution::from_counts(&counts));
    o.check(tv <= 0.005, format!("static exact vs MC TV={tv:.5}"));

    let mut cfg = DynamicConfig::new(0.5, 1.0, PolicyKind::Pot, 1_000_000, 9);
    cfg.joint_pairs.clear();
    let r = run_dynamic(&Graph::singleton(), cfg).unwrap();
    let geo: Vec<f64> = (0..80).map(|i| 0.5 * 0.5f64.powi(i)).collect();
    let tv = total_variation(&r.occupancy_pdf().unwrap(), &LoadDistribution::from_weights(&geo).unwrap());
    o.check(tv <= 0.01, format!("M/M/1 TV={tv:.5}"));
    o
}

fn criterion_10(runs: &Runs) -> Outcome {
    let mut o = Outcome::new();

    // Little's law on a shared run
    let r = &runs[&(RING_N, PolicyKind::UnifPot { k: 2 })];
    let l_over_lambda = r.occupancy_pdf().unwrap().mean() / LAMBDA;
    let w = r.mean_sojourn_time().unwrap();
    o.check((l_over_lambda - w).abs() <= 0.02 * w, format!("Little L/lambda={l_over_lambda:.4} W={w:.4}"));

    // event-time monotonicity, job and work conservation
    let g = TopologySpec::Ring { n: 64 }.build(0).unwrap();
    let mut sim = DynamicSim::new(&g, DynamicConfig::new(LAMBDA, MU, PolicyKind::InvSqPot { k: 3 }, 100_000, 10)).unwrap();
    let (mut last, mut events_ok) = (0.0, true);
    while let Some(ev) = sim.step() {
        events_ok &= ev.time() >= last && sim.arrivals() == sim.departures() + sim.jobs_in_system();
        events_ok &= (0..64).all(|s| sim.has_departure(s) == (sim.counts()[s] >= 1));
        last = ev.time();
    }
    o.check(events_ok, "event monotonicity + conservation".into());

    // static conservation
    let table = SamplingTable::new(&g, PolicyKind::UnifPot { k: 4 }).unwrap();
    let run = run_static_with(&table, 5000, ArrivalModel::UniformOrigin, 10, Snapshots::EveryArrival).unwrap();
    let conserved = run.snapshots.iter().all(|(t, d)| (d.mean() * 64.0 - *t as f64).abs() < 1e-9);
    o.check(conserved, "static conservation".into());

    // sampler chi-square at significance 0.001
    let table = SamplingTable::new(&g, PolicyKind::InvSqPot { k: 10 }).unwrap();
    let row = table.origin(0).into_owned();
    let mut counts = vec![0u64; 64];
    let mut rng = rng::stream(10, Stream::Peers);
    let draws = 1_000_000;
    for _ in 0..draws {
        counts[table.sample_peer(0, &mut rng).unwrap().vertex] += 1;
    }
    let chi2: f64 = row
        .vertices
        .iter()
        .zip(&row.probs)
        .map(|(&v, &p)| (counts[v] as f64 - p * draws as f64).powi(2) / (p * draws as f64))
        .sum();
    let df = (row.len() - 1) as f64;
    let a = 2.0 / (9.0 * df);
    let critical = df * (1.0 - a + 3.090_232 * a.sqrt()).powi(3);
    o.check(chi2 < critical, format!("chi2={chi2:.1} < {critical:.1}"));

    // TV metric axioms on random triples
    let mut rng = rng::stream(10, Stream::Ties);
    let mut metric_ok = true;
    for _ in 0..1000 {
        let mut draw = || {
            let w: Vec<f64> = (0..rng.random_range(1..8)).map(|_| rng.random::<f64>()).collect();
            LoadDistribution::from_weights(&w).unwrap_or_else(|_| LoadDistribution::point_mass(0))
        };
        let (a, b, c) = (draw(), draw(), draw());
        metric_ok &= (total_variation(&a, &b) - total_variation(&b, &a)).abs() < 1e-15;
        metric_ok &= total_variation(&a, &a) == 0.0;
        metric_ok &= total_variation(&a, &c) <= total_variation(&a, &b) + total_variation(&b, &c) + 1e-12;
    }
    o.check(metric_ok, "TV metric axioms".into());
    o
}

fn main() {
    let start = Instant::now();
    let mut report: Vec<(u32, &str, Outcome)> = Vec::new();

    let t = Instant::now();
    let runs = dynamic_runs();
    let shared = t.elapsed();
    println!("shared dynamic runs: {} runs x {ARRIVALS} arrivals in {:.1}s", runs.results.len(), shared.as_secs_f64());

    report.push((1, "ring dynamic request distance, Unif-POT", criterion_1(&runs)));
    report.push((2, "ring dynamic request distance, InvSq-POT", criterion_2(&runs)));
    report.push((3, "sojourn vs mean field, InvSq/Unif ratio", criterion_3(&runs)));
    report.push((4, "joint PDF symmetry and ordering, n=10", criterion_4()));
    report.push((5, "occupancy PDF n=250 vs n=1001", criterion_5(&runs)));
    let (six, seven) = criteria_6_and_7();
    report.push((6, "static TV vs POT, ring n=m=1000", six));
    report.push((7, "static request distance reduction", seven));
    report.push((8, "policy table equivalences", criterion_8()));
    report.push((9, "tiny-instance oracles", criterion_9()));
    report.push((10, "property checks", criterion_10(&runs)));

    let mut failed = 0;
    for (id, name, outcome) in &report {
        println!(
            "{} criterion {id:>2}: {name} | {}",
            if outcome.pass { "PASS" } else { "FAIL" },
            outcome.details.join("; ")
        );
        failed += !outcome.pass as u32;
    }
    println!("acceptance: {}/{} passed in {:.1}s", report.len() as u32 - failed, report.len(), start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
