//! Static balls-and-bins allocation: `m` jobs arrive one at a time and never
//! leave. Each job probes its origin and one sampled peer and joins the less
//! loaded of the two.

use std::f64::consts::PI;

use rand::Rng;

use crate::distribution::LoadDistribution;
use crate::error::{Error, Result};
use crate::graph::{Embedding, Graph};
use crate::policy::{allocate, Destination, PolicyKind, SamplingTable};
use crate::rng::{self, SimRng, Stream};

/// How a job picks its origin server.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ArrivalModel {
    /// Origin uniform over the servers.
    #[default]
    UniformOrigin,
    /// User position uniform over the embedding's support; origin is the
    /// nearest server (arc length on a circle).
    SpatialNearest,
}

/// When to record the load distribution during a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Snapshots {
    #[default]
    None,
    EveryArrival,
    /// After every `stride`-th arrival.
    Every(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaticState {
    loads: Vec<u64>,
    t: u64,
}

impl StaticState {
    pub fn new(n: usize) -> Self {
        Self { loads: vec![0; n], t: 0 }
    }

    pub fn loads(&self) -> &[u64] {
        &self.loads
    }

    /// Jobs placed so far.
    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn load_distribution(&self) -> LoadDistribution {
        LoadDistribution::from_loads(&self.loads)
    }

    pub fn max_load(&self) -> u64 {
        self.loads.iter().copied().max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JobRecord {
    pub origin: usize,
    /// `None` when the origin had no candidate peer.
    pub peer: Option<usize>,
    pub destination: usize,
    /// Hops from origin to destination, 0 when the job stayed.
    pub hops: u32,
    /// Loads of origin and peer when the job was placed.
    pub origin_load: u64,
    pub peer_load: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AllocationTrace {
    pub jobs: Vec<JobRecord>,
}

#[derive(Debug, Clone)]
pub struct StaticRun {
    pub state: StaticState,
    pub trace: AllocationTrace,
    /// `(t, distribution after the t-th arrival)`.
    pub snapshots: Vec<(u64, LoadDistribution)>,
}

impl StaticRun {
    pub fn load_distribution(&self) -> LoadDistribution {
        self.state.load_distribution()
    }

    pub fn max_load(&self) -> u64 {
        self.state.max_load()
    }

    pub fn average_request_distance(&self) -> Result<f64> {
        average_request_distance(&self.trace)
    }
}

/// Runs one static experiment. Builds a fresh sampling table; use
/// [`run_static_with`] to reuse one across seeds.
pub fn run_static(
    graph: &Graph,
    policy: PolicyKind,
    m: u64,
    arrivals: ArrivalModel,
    seed: u64,
    snapshots: Snapshots,
) -> Result<StaticRun> {
    let table = SamplingTable::new(graph, policy)?;
    run_static_with(&table, m, arrivals, seed, snapshots)
}

pub fn run_static_with(
    table: &SamplingTable<'_>,
    m: u64,
    arrivals: ArrivalModel,
    seed: u64,
    snapshots: Snapshots,
) -> Result<StaticRun> {
    let graph = table.graph();
    let n = graph.n();
    if m == 0 {
        return Err(Error::InvalidConfig("m must be at least 1".into()));
    }
    if let Snapshots::Every(0) = snapshots {
        return Err(Error::InvalidConfig("snapshot stride must be positive".into()));
    }
    let mut origins = OriginSampler::new(graph, arrivals)?;
    let mut origin_rng = rng::stream(seed, Stream::Origins);
    let mut peer_rng = rng::stream(seed, Stream::Peers);
    let mut tie_rng = rng::stream(seed, Stream::Ties);

    let mut state = StaticState::new(n);
    // servers_at[i] = number of servers holding exactly i jobs
    let mut servers_at: Vec<u64> = vec![n as u64];
    let mut jobs = Vec::with_capacity(m as usize);
    let mut shots = Vec::new();
    let mut unresolved = Vec::new();

    for t in 1..=m {
        let origin = origins.sample(&mut origin_rng);
        let peer = table.sample_peer(origin, &mut peer_rng);
        let origin_load = state.loads[origin];
        let (destination, hops, peer_load) = match peer {
            None => (origin, Some(0), None),
            Some(p) => {
                let peer_load = state.loads[p.vertex];
                match allocate(origin_load, peer_load, &mut tie_rng) {
                    Destination::Origin => (origin, Some(0), Some(peer_load)),
                    Destination::Peer => (p.vertex, p.hops, Some(peer_load)),
                }
            }
        };
        if hops.is_none() {
            unresolved.push(jobs.len());
        }
        jobs.push(JobRecord {
            origin,
            peer: peer.map(|p| p.vertex),
            destination,
            hops: hops.unwrap_or(0),
            origin_load,
            peer_load,
        });

        let l = state.loads[destination] as usize;
        state.loads[destination] += 1;
        state.t = t;
        servers_at[l] -= 1;
        if servers_at.len() == l + 1 {
            servers_at.push(0);
        }
        servers_at[l + 1] += 1;

        let take = match snapshots {
            Snapshots::None => false,
            Snapshots::EveryArrival => true,
            Snapshots::Every(s) => t % s == 0,
        };
        if take {
            shots.push((t, LoadDistribution::from_counts(&servers_at)));
        }
    }

    if !unresolved.is_empty() {
        let pairs: Vec<_> = unresolved
            .iter()
            .map(|&j| (jobs[j].origin, jobs[j].destination))
            .collect();
        for (j, d) in unresolved.into_iter().zip(graph.hop_distances(&pairs)) {
            jobs[j].hops = d;
        }
    }

    Ok(StaticRun {
        state,
        trace: AllocationTrace { jobs },
        snapshots: shots,
    })
}

/// Mean hop distance from origin to destination over all jobs.
pub fn average_request_distance(trace: &AllocationTrace) -> Result<f64> {
    if trace.jobs.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let total: u64 = trace.jobs.iter().map(|j| j.hops as u64).sum();
    Ok(total as f64 / trace.jobs.len() as f64)
}

/// Per-arrival total variation between two runs' snapshot series, matched on
/// the arrival index.
pub fn tv_evolution(a: &[(u64, LoadDistribution)], b: &[(u64, LoadDistribution)]) -> Vec<(u64, f64)> {
    let mut out = Vec::with_capacity(a.len().min(b.len()));
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push((a[i].0, crate::distribution::total_variation(&a[i].1, &b[j].1)));
                i += 1;
                j += 1;
            }
        }
    }
    out
}

enum OriginSampler {
    Uniform(usize),
    Line { sorted: Vec<(f64, usize)>, lo: f64, hi: f64 },
    Circle { sorted: Vec<(f64, usize)> },
    Plane(Vec<[f64; 2]>),
}

impl OriginSampler {
    fn new(graph: &Graph, model: ArrivalModel) -> Result<Self> {
        if model == ArrivalModel::UniformOrigin {
            return Ok(OriginSampler::Uniform(graph.n()));
        }
        let sorted_by = |xs: &[f64]| {
            let mut v: Vec<(f64, usize)> = xs.iter().copied().zip(0..).collect();
            v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            v
        };
        match graph.embedding() {
            None => Err(Error::InvalidArrival),
            Some(Embedding::Line(pos)) => {
                let (lo, hi) = match graph.topology() {
                    Some(crate::graph::TopologySpec::SpatialLine { l_max, .. }) => (0.0, *l_max),
                    _ => (
                        pos.iter().copied().fold(f64::INFINITY, f64::min),
                        pos.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                    ),
                };
                Ok(OriginSampler::Line { sorted: sorted_by(pos), lo, hi })
            }
            Some(Embedding::Circle { angles, .. }) => Ok(OriginSampler::Circle { sorted: sorted_by(angles) }),
            Some(Embedding::Plane(pts)) => Ok(OriginSampler::Plane(pts.clone())),
        }
    }

    fn sample(&mut self, rng: &mut SimRng) -> usize {
        match self {
            OriginSampler::Uniform(n) => rng.random_range(0..*n),
            OriginSampler::Line { sorted, lo, hi } => {
                let x = *lo + rng.random::<f64>() * (*hi - *lo);
                let i = sorted.partition_point(|p| p.0 < x);
                let mut best = None::<(f64, usize)>;
                for c in [i.wrapping_sub(1), i] {
                    if let Some(&(p, v)) = sorted.get(c) {
                        let d = (p - x).abs();
                        if best.is_none_or(|b| d < b.0) {
                            best = Some((d, v));
                        }
                    }
                }
                best.expect("non-empty").1
            }
            OriginSampler::Circle { sorted } => {
                let x = rng.random::<f64>() * 2.0 * PI;
                let len = sorted.len();
                let i = sorted.partition_point(|p| p.0 < x);
                let arc = |a: f64| {
                    let d = (a - x).abs();
                    d.min(2.0 * PI - d)
                };
                let (before, after) = (sorted[(i + len - 1) % len], sorted[i % len]);
                if arc(after.0) < arc(before.0) {
                    after.1
                } else {
                    before.1
                }
            }
            OriginSampler::Plane(pts) => {
                let (x, y): (f64, f64) = (rng.random(), rng.random());
                let d2 = |p: &[f64; 2]| (p[0] - x).powi(2) + (p[1] - y).powi(2);
                (0..pts.len())
                    .min_by(|&a, &b| d2(&pts[a]).total_cmp(&d2(&pts[b])))
                    .expect("non-empty")
            }
        }
    }
}
