//! Peer sampling distributions and the two-choice allocation rule.
//!
//! For an origin server `u`, the policies sample one peer `v != u`:
//!
//! - POT: uniform over all other servers.
//! - Unif-POT(k): uniform over the k-hop neighbourhood `N_k(u)`.
//! - InvSq-POT(k): over `N_k(u)` with weight `1 / hops(u, v)^2`.
//!
//! The job then goes to whichever of `u`, `v` holds fewer jobs, with a fair
//! coin on ties.

use std::borrow::Cow;
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::OnceLock;

use rand::Rng;

use crate::batch;
use crate::error::{Error, Result};
use crate::graph::{Graph, UNREACHABLE};

/// Upper bound on cached candidate entries per table (about 48 MiB). Origins
/// touched after the budget is spent get their table rebuilt on every draw.
pub const DEFAULT_CACHE_ENTRIES: usize = 1 << 21;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolicyKind {
    Pot,
    UnifPot { k: u32 },
    InvSqPot { k: u32 },
}

impl PolicyKind {
    pub fn k(&self) -> Option<u32> {
        match *self {
            PolicyKind::Pot => None,
            PolicyKind::UnifPot { k } | PolicyKind::InvSqPot { k } => Some(k),
        }
    }

    /// `pot`, `unif` or `invsq`.
    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::Pot => "pot",
            PolicyKind::UnifPot { .. } => "unif",
            PolicyKind::InvSqPot { .. } => "invsq",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyKind::Pot => write!(f, "POT"),
            PolicyKind::UnifPot { k } => write!(f, "Unif-POT({k})"),
            PolicyKind::InvSqPot { k } => write!(f, "InvSq-POT({k})"),
        }
    }
}

/// Candidate peers of one origin, ordered by (hops, vertex id).
#[derive(Debug, Clone, PartialEq)]
pub struct OriginTable {
    pub vertices: Vec<usize>,
    pub hops: Vec<u32>,
    pub probs: Vec<f64>,
    pub cumulative: Vec<f64>,
}

impl OriginTable {
    fn build(graph: &Graph, origin: usize, policy: PolicyKind) -> Self {
        let (vertices, hops): (Vec<usize>, Vec<u32>) = match policy.k() {
            Some(k) => graph.distances_up_to_k(origin, k).entries.into_iter().unzip(),
            None => {
                let row = graph.bfs(origin);
                let mut all: Vec<(usize, u32)> = row
                    .into_iter()
                    .enumerate()
                    .filter(|&(v, d)| v != origin && d != UNREACHABLE)
                    .collect();
                all.sort_unstable_by_key(|&(v, d)| (d, v));
                all.into_iter().unzip()
            }
        };
        let weights: Vec<f64> = match policy {
            PolicyKind::InvSqPot { .. } => hops.iter().map(|&d| 1.0 / (d as f64 * d as f64)).collect(),
            _ => vec![1.0; hops.len()],
        };
        // hops are non-decreasing, so reverse order adds the smallest weights first
        let total: f64 = weights.iter().rev().sum();
        let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let cumulative = probs
            .iter()
            .scan(0.0, |acc, p| {
                *acc += p;
                Some(*acc)
            })
            .collect();
        Self {
            vertices,
            hops,
            probs,
            cumulative,
        }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn probability(&self, v: usize) -> f64 {
        self.vertices
            .iter()
            .position(|&w| w == v)
            .map_or(0.0, |i| self.probs[i])
    }

    /// Index of the candidate selected by a uniform variate in `[0, 1)`.
    pub fn index_for(&self, x: f64) -> usize {
        self.cumulative
            .partition_point(|&c| c <= x)
            .min(self.len() - 1)
    }
}

/// The peer a job probes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Peer {
    pub vertex: usize,
    /// Hop distance from the origin; `None` under POT, where it is not needed
    /// to sample and is resolved afterwards when required.
    pub hops: Option<u32>,
}

/// Per-origin sampling distributions `P_u` for one policy on one graph.
///
/// Tables for the proximity policies are built on first use and cached;
/// POT needs no table. Safe to share across threads.
pub struct SamplingTable<'g> {
    graph: &'g Graph,
    policy: PolicyKind,
    cache: Vec<OnceLock<OriginTable>>,
    cached_entries: AtomicUsize,
    budget: usize,
}

impl<'g> SamplingTable<'g> {
    pub fn new(graph: &'g Graph, policy: PolicyKind) -> Result<Self> {
        Self::with_cache_budget(graph, policy, DEFAULT_CACHE_ENTRIES)
    }

    pub fn with_cache_budget(graph: &'g Graph, policy: PolicyKind, budget: usize) -> Result<Self> {
        if policy.k() == Some(0) {
            return Err(Error::InvalidConfig("hop radius k must be at least 1".into()));
        }
        let cache = match policy {
            PolicyKind::Pot => Vec::new(),
            _ => (0..graph.n()).map(|_| OnceLock::new()).collect(),
        };
        Ok(Self {
            graph,
            policy,
            cache,
            cached_entries: AtomicUsize::new(0),
            budget,
        })
    }

    /// Builds every origin table up front (in parallel when enabled).
    pub fn eager(graph: &'g Graph, policy: PolicyKind) -> Result<Self> {
        let table = Self::with_cache_budget(graph, policy, usize::MAX)?;
        if policy != PolicyKind::Pot {
            let built = batch::par_map((0..graph.n()).collect(), |u| OriginTable::build(graph, u, policy));
            for (slot, t) in table.cache.iter().zip(built) {
                table.cached_entries.fetch_add(t.len(), Ordering::Relaxed);
                let _ = slot.set(t);
            }
        }
        Ok(table)
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    pub fn policy(&self) -> PolicyKind {
        self.policy
    }

    /// Candidate table of origin `u`. Under POT this is built on demand and
    /// covers every other reachable vertex.
    pub fn origin(&self, u: usize) -> Cow<'_, OriginTable> {
        if self.policy == PolicyKind::Pot {
            return Cow::Owned(OriginTable::build(self.graph, u, self.policy));
        }
        let slot = &self.cache[u];
        if let Some(t) = slot.get() {
            return Cow::Borrowed(t);
        }
        if self.cached_entries.load(Ordering::Relaxed) >= self.budget {
            return Cow::Owned(OriginTable::build(self.graph, u, self.policy));
        }
        let t = slot.get_or_init(|| {
            let t = OriginTable::build(self.graph, u, self.policy);
            self.cached_entries.fetch_add(t.len(), Ordering::Relaxed);
            t
        });
        Cow::Borrowed(t)
    }

    /// `p_{uv}`; zero for `v == u` and outside the support.
    pub fn probability(&self, u: usize, v: usize) -> f64 {
        let n = self.graph.n();
        assert!(u < n && v < n, "vertex out of range");
        if u == v {
            return 0.0;
        }
        match self.policy {
            PolicyKind::Pot => 1.0 / (n - 1) as f64,
            _ => self.origin(u).probability(v),
        }
    }

    /// Draws the peer probed by a job arriving at `u`. `None` only when `u`
    /// has no candidate at all (the one-server system).
    pub fn sample_peer<R: Rng + ?Sized>(&self, u: usize, rng: &mut R) -> Option<Peer> {
        let n = self.graph.n();
        match self.policy {
            PolicyKind::Pot => {
                if n < 2 {
                    return None;
                }
                let r = rng.random_range(0..n - 1);
                let vertex = if r >= u { r + 1 } else { r };
                Some(Peer { vertex, hops: None })
            }
            _ => {
                let table = self.origin(u);
                if table.is_empty() {
                    return None;
                }
                let i = table.index_for(rng.random::<f64>());
                Some(Peer {
                    vertex: table.vertices[i],
                    hops: Some(table.hops[i]),
                })
            }
        }
    }
}

/// Where a job ends up.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Destination {
    Origin,
    Peer,
}

/// Less-loaded of the two probed servers; fair coin on a tie.
pub fn allocate<R: Rng + ?Sized>(load_origin: u64, load_peer: u64, ties: &mut R) -> Destination {
    match load_origin.cmp(&load_peer) {
        std::cmp::Ordering::Less => Destination::Origin,
        std::cmp::Ordering::Greater => Destination::Peer,
        std::cmp::Ordering::Equal => {
            if ties.random::<bool>() {
                Destination::Origin
            } else {
                Destination::Peer
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::TopologySpec;
    use crate::rng::{self, Stream};

    fn ring(n: usize) -> Graph {
        TopologySpec::Ring { n }.build(0).unwrap()
    }

    fn probs_of(table: &SamplingTable<'_>, u: usize) -> Vec<(usize, f64)> {
        let mut v: Vec<_> = (0..table.graph().n())
            .map(|v| (v, table.probability(u, v)))
            .filter(|&(_, p)| p > 0.0)
            .collect();
        v.sort_by_key(|e| e.0);
        v
    }

    #[test]
    fn inverse_square_on_ring() {
        let g = ring(10);
        let t = SamplingTable::new(&g, PolicyKind::InvSqPot { k: 2 }).unwrap();
        let got = probs_of(&t, 0);
        let want = [(1, 0.4), (2, 0.1), (8, 0.1), (9, 0.4)];
        assert_eq!(got.len(), 4);
        for ((v, p), (wv, wp)) in got.iter().zip(want) {
            assert_eq!(*v, wv);
            assert!((p - wp).abs() < 1e-15);
        }
    }

    #[test]
    fn uniform_on_ring() {
        let g = ring(10);
        let t = SamplingTable::new(&g, PolicyKind::UnifPot { k: 2 }).unwrap();
        assert_eq!(probs_of(&t, 0), vec![(1, 0.25), (2, 0.25), (8, 0.25), (9, 0.25)]);
        assert_eq!(t.probability(0, 5), 0.0);
        assert_eq!(t.probability(3, 3), 0.0);
    }

    #[test]
    fn pot_probability() {
        let g = ring(101);
        let t = SamplingTable::new(&g, PolicyKind::Pot).unwrap();
        assert_eq!(t.probability(4, 70), 1.0 / 100.0);
        assert_eq!(t.probability(4, 4), 0.0);
    }

    #[test]
    fn single_candidate_always_drawn() {
        let g = TopologySpec::Line { n: 2 }.build(0).unwrap();
        for policy in [PolicyKind::Pot, PolicyKind::UnifPot { k: 1 }, PolicyKind::InvSqPot { k: 3 }] {
            let t = SamplingTable::new(&g, policy).unwrap();
            let mut r = rng::stream(1, Stream::Peers);
            for _ in 0..100 {
                assert_eq!(t.sample_peer(0, &mut r).unwrap().vertex, 1);
            }
        }
    }

    #[test]
    fn singleton_has_no_peer() {
        let g = Graph::singleton();
        let t = SamplingTable::new(&g, PolicyKind::Pot).unwrap();
        assert!(t.sample_peer(0, &mut rng::stream(1, Stream::Peers)).is_none());
    }

    #[test]
    fn allocation_rule() {
        let mut r = rng::stream(3, Stream::Ties);
        assert_eq!(allocate(3, 5, &mut r), Destination::Origin);
        assert_eq!(allocate(5, 3, &mut r), Destination::Peer);
    }

    #[test]
    fn tie_coin_is_fair() {
        let mut r = rng::stream(3, Stream::Ties);
        let trials = 1_000_000;
        let origin = (0..trials)
            .filter(|_| allocate(4, 4, &mut r) == Destination::Origin)
            .count();
        assert!((origin as f64 / trials as f64 - 0.5).abs() < 0.002);
    }

    #[test]
    fn zero_radius_rejected() {
        let g = ring(5);
        assert!(SamplingTable::new(&g, PolicyKind::UnifPot { k: 0 }).is_err());
    }

    #[test]
    fn over_budget_tables_match_cached_ones() {
        let g = ring(200);
        let policy = PolicyKind::InvSqPot { k: 30 };
        let cached = SamplingTable::eager(&g, policy).unwrap();
        let uncached = SamplingTable::with_cache_budget(&g, policy, 0).unwrap();
        for u in [0, 17, 199] {
            assert_eq!(cached.origin(u).as_ref(), uncached.origin(u).as_ref());
            assert!(matches!(uncached.origin(u), Cow::Owned(_)));
        }
    }
}
