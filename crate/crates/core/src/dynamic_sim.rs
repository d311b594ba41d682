//! Event-driven simulation of the dynamic system.
//!
//! Jobs arrive at every server as a Poisson process of rate `lambda` (one
//! superposed stream of rate `n * lambda` with a uniform origin), probe one
//! peer drawn from the policy, join the shorter of the two queues and are
//! served FCFS with exponential(`mu`) service. Exponential service makes the
//! per-server job count a sufficient state; FIFO arrival timestamps are kept
//! only to measure sojourn times.
//!
//! The first `warmup_fraction` of the arrivals (equivalently, that fraction
//! of simulated time in expectation) is excluded from every estimator.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, VecDeque};

use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::distribution::{JointDistribution, LoadDistribution};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::policy::{allocate, Destination, PolicyKind, SamplingTable};
use crate::rng::{self, SimRng, Stream};

pub const DEFAULT_WARMUP_FRACTION: f64 = 0.1;

/// Server pairs whose joint queue lengths are tracked by default.
pub const DEFAULT_JOINT_PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (0, 8)];

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicConfig {
    /// Arrival rate per server.
    pub lambda: f64,
    /// Service rate.
    pub mu: f64,
    pub policy: PolicyKind,
    /// Total arrivals simulated, warm-up included.
    pub horizon_arrivals: u64,
    pub warmup_fraction: f64,
    pub joint_pairs: Vec<(usize, usize)>,
    pub seed: u64,
    /// Keep a [`JobRecord`] per measured job (memory grows with the horizon).
    pub keep_records: bool,
}

impl DynamicConfig {
    pub fn new(lambda: f64, mu: f64, policy: PolicyKind, horizon_arrivals: u64, seed: u64) -> Self {
        Self {
            lambda,
            mu,
            policy,
            horizon_arrivals,
            warmup_fraction: DEFAULT_WARMUP_FRACTION,
            joint_pairs: DEFAULT_JOINT_PAIRS.to_vec(),
            seed,
            keep_records: false,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.lambda > 0.0 && self.lambda.is_finite() && self.mu.is_finite()) {
            return bad(format!("lambda must be positive and finite, got {}", self.lambda));
        }
        if self.lambda >= self.mu {
            log::warn!(
                "unstable system: lambda={} >= mu={}; refusing to run",
                self.lambda,
                self.mu
            );
            return bad(format!("unstable: lambda={} must be below mu={}", self.lambda, self.mu));
        }
        if self.horizon_arrivals == 0 {
            return bad("horizon_arrivals must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return bad(format!("warmup_fraction must lie in [0, 1), got {}", self.warmup_fraction));
        }
        if let Some(&(a, b)) = self.joint_pairs.iter().find(|&&(a, b)| a >= n || b >= n || a == b) {
            return bad(format!("joint pair ({a}, {b}) invalid for n={n}"));
        }
        Ok(())
    }

    fn warmup_arrivals(&self) -> u64 {
        (self.warmup_fraction * self.horizon_arrivals as f64).floor() as u64
    }
}

/// Time-weighted occupancy per server: `area[s][c]` is the measured time
/// server `s` spent holding exactly `c` jobs.
#[derive(Debug, Clone)]
pub struct OccupancyEstimator {
    start: f64,
    end: f64,
    last: Vec<f64>,
    area: Vec<Vec<f64>>,
}

impl OccupancyEstimator {
    pub fn new(n: usize, start: f64) -> Self {
        Self {
            start,
            end: start,
            last: vec![start; n],
            area: vec![Vec::new(); n],
        }
    }

    /// Server `s` leaves count `old` at time `t`.
    pub fn record_change(&mut self, s: usize, old: u32, t: f64) {
        let a = &mut self.area[s];
        let old = old as usize;
        if a.len() <= old {
            a.resize(old + 1, 0.0);
        }
        a[old] += t - self.last[s];
        self.last[s] = t;
    }

    /// Closes the window at `t` with the servers' current counts.
    pub fn close(&mut self, counts: &[u32], t: f64) {
        for (s, &c) in counts.iter().enumerate() {
            self.record_change(s, c, t);
        }
        self.end = t;
    }

    pub fn measured_time(&self) -> f64 {
        self.end - self.start
    }

    /// Fraction of server-time at each count, over all servers.
    pub fn occupancy_pdf(&self) -> Result<LoadDistribution> {
        if self.measured_time().is_nan() || self.measured_time() <= 0.0 {
            return Err(Error::NoMeasurement);
        }
        let len = self.area.iter().map(Vec::len).max().unwrap_or(0);
        let mut total = vec![0.0; len];
        for a in &self.area {
            for (t, x) in total.iter_mut().zip(a) {
                *t += x;
            }
        }
        LoadDistribution::from_weights(&total)
    }

    /// Time-averaged occupancy of one server.
    pub fn server_pdf(&self, s: usize) -> Result<LoadDistribution> {
        if self.measured_time().is_nan() || self.measured_time() <= 0.0 {
            return Err(Error::NoMeasurement);
        }
        LoadDistribution::from_weights(&self.area[s])
    }
}

#[derive(Debug, Clone)]
struct PairAccumulator {
    pair: (usize, usize),
    last: f64,
    area: Vec<Vec<f64>>,
}

impl PairAccumulator {
    fn add(&mut self, qa: u32, qb: u32, t: f64) {
        let (qa, qb) = (qa as usize, qb as usize);
        if self.area.len() <= qa {
            self.area.resize(qa + 1, Vec::new());
        }
        let row = &mut self.area[qa];
        if row.len() <= qb {
            row.resize(qb + 1, 0.0);
        }
        row[qb] += t - self.last;
        self.last = t;
    }
}

/// Time-weighted joint histograms of `(Q_a, Q_b)` for the tracked pairs.
#[derive(Debug, Clone)]
pub struct JointEstimator {
    pairs: Vec<PairAccumulator>,
    // server -> indices into `pairs`
    by_server: Vec<Vec<usize>>,
}

impl JointEstimator {
    pub fn new(n: usize, pairs: &[(usize, usize)], start: f64) -> Self {
        let mut by_server = vec![Vec::new(); n];
        for (i, &(a, b)) in pairs.iter().enumerate() {
            by_server[a].push(i);
            by_server[b].push(i);
        }
        Self {
            pairs: pairs
                .iter()
                .map(|&pair| PairAccumulator {
                    pair,
                    last: start,
                    area: Vec::new(),
                })
                .collect(),
            by_server,
        }
    }

    /// Server `s` is about to change at `t`; `counts` still holds the old state.
    pub fn before_change(&mut self, s: usize, counts: &[u32], t: f64) {
        for &i in &self.by_server[s] {
            let p = &mut self.pairs[i];
            let (a, b) = p.pair;
            p.add(counts[a], counts[b], t);
        }
    }

    pub fn close(&mut self, counts: &[u32], t: f64) {
        for p in &mut self.pairs {
            let (a, b) = p.pair;
            p.add(counts[a], counts[b], t);
        }
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs.iter().map(|p| p.pair)
    }

    /// Normalised joint PDF of `(Q_a, Q_b)` for a tracked pair.
    pub fn joint_pdf(&self, pair: (usize, usize)) -> Result<JointDistribution> {
        let p = self
            .pairs
            .iter()
            .find(|p| p.pair == pair)
            .ok_or(Error::UntrackedPair(pair.0, pair.1))?;
        JointDistribution::from_weights(&p.area)
    }
}

/// A measured job.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JobRecord {
    pub arrival: f64,
    pub origin: usize,
    pub destination: usize,
    pub hops: u32,
    /// `None` if the job was still in the system at the horizon.
    pub departure: Option<f64>,
}

/// Streaming job statistics over the measured window, plus the individual
/// records when requested.
#[derive(Debug, Clone, Default)]
pub struct JobRecords {
    /// All arrivals, warm-up included.
    pub arrivals: u64,
    /// All departures, warm-up included.
    pub departures: u64,
    pub measured_arrivals: u64,
    pub measured_departures: u64,
    sojourn_sum: f64,
    hop_sum: u64,
    pub records: Vec<JobRecord>,
}

impl JobRecords {
    /// Measured jobs still queued at the horizon; excluded from the sojourn
    /// mean.
    pub fn measured_in_system(&self) -> u64 {
        self.measured_arrivals - self.measured_departures
    }
}

/// Mean arrival-to-departure time of the measured jobs that departed.
pub fn mean_sojourn_time(records: &JobRecords) -> Result<f64> {
    if records.measured_departures == 0 {
        return Err(Error::NoDepartures);
    }
    Ok(records.sojourn_sum / records.measured_departures as f64)
}

/// Mean origin-to-destination hop count of the measured jobs.
pub fn mean_request_distance_dynamic(records: &JobRecords) -> Result<f64> {
    if records.measured_arrivals == 0 {
        return Err(Error::EmptyRecords);
    }
    Ok(records.hop_sum as f64 / records.measured_arrivals as f64)
}

#[derive(Debug, Clone)]
pub struct DynamicResult {
    pub occupancy: OccupancyEstimator,
    pub joint: JointEstimator,
    pub jobs: JobRecords,
    pub measure_start: f64,
    pub end_time: f64,
    pub final_counts: Vec<u32>,
}

impl DynamicResult {
    pub fn occupancy_pdf(&self) -> Result<LoadDistribution> {
        self.occupancy.occupancy_pdf()
    }

    pub fn joint_pdf(&self, pair: (usize, usize)) -> Result<JointDistribution> {
        self.joint.joint_pdf(pair)
    }

    pub fn mean_sojourn_time(&self) -> Result<f64> {
        mean_sojourn_time(&self.jobs)
    }

    pub fn mean_request_distance(&self) -> Result<f64> {
        mean_request_distance_dynamic(&self.jobs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Arrival,
    Departure(usize),
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (time, seq)
        other
            .time
            .total_cmp(&self.time)
            .then(other.seq.cmp(&self.seq))
    }
}

/// What one [`DynamicSim::step`] processed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Processed {
    Arrival {
        time: f64,
        origin: usize,
        peer: Option<usize>,
        destination: usize,
        /// Queue lengths of origin and peer seen by the routing decision.
        origin_count: u32,
        peer_count: Option<u32>,
    },
    Departure {
        time: f64,
        server: usize,
    },
}

impl Processed {
    pub fn time(&self) -> f64 {
        match *self {
            Processed::Arrival { time, .. } | Processed::Departure { time, .. } => time,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Ticket {
    arrival: f64,
    measured: bool,
    record: Option<usize>,
}

/// Resumable simulation state. [`run_dynamic`] drives it to the horizon;
/// tests can step it event by event.
pub struct DynamicSim<'g> {
    table: SamplingTable<'g>,
    cfg: DynamicConfig,
    now: f64,
    counts: Vec<u32>,
    queues: Vec<VecDeque<Ticket>>,
    has_departure: Vec<bool>,
    events: BinaryHeap<Event>,
    seq: u64,
    warmup_arrivals: u64,
    measuring: bool,
    measure_start: f64,
    interarrival: Exp<f64>,
    service: Exp<f64>,
    arrival_rng: SimRng,
    origin_rng: SimRng,
    peer_rng: SimRng,
    tie_rng: SimRng,
    service_rng: SimRng,
    occupancy: OccupancyEstimator,
    joint: JointEstimator,
    jobs: JobRecords,
    // POT does not know hop counts while sampling: (origin, destination) -> jobs
    pending_hops: HashMap<(usize, usize), u64>,
}

impl<'g> DynamicSim<'g> {
    pub fn new(graph: &'g Graph, cfg: DynamicConfig) -> Result<Self> {
        let n = graph.n();
        cfg.validate(n)?;
        let table = SamplingTable::eager(graph, cfg.policy)?;
        let seed = cfg.seed;
        let warmup_arrivals = cfg.warmup_arrivals();
        let mut sim = Self {
            table,
            now: 0.0,
            counts: vec![0; n],
            queues: vec![VecDeque::new(); n],
            has_departure: vec![false; n],
            events: BinaryHeap::with_capacity(n + 1),
            seq: 0,
            warmup_arrivals,
            measuring: warmup_arrivals == 0,
            measure_start: 0.0,
            interarrival: Exp::new(n as f64 * cfg.lambda).map_err(|e| Error::InvalidConfig(e.to_string()))?,
            service: Exp::new(cfg.mu).map_err(|e| Error::InvalidConfig(e.to_string()))?,
            arrival_rng: rng::stream(seed, Stream::Arrivals),
            origin_rng: rng::stream(seed, Stream::Origins),
            peer_rng: rng::stream(seed, Stream::Peers),
            tie_rng: rng::stream(seed, Stream::Ties),
            service_rng: rng::stream(seed, Stream::Service),
            occupancy: OccupancyEstimator::new(n, 0.0),
            joint: JointEstimator::new(n, &cfg.joint_pairs, 0.0),
            jobs: JobRecords::default(),
            pending_hops: HashMap::new(),
            cfg,
        };
        let first = sim.interarrival.sample(&mut sim.arrival_rng);
        sim.push(first, EventKind::Arrival);
        Ok(sim)
    }

    fn push(&mut self, time: f64, kind: EventKind) {
        self.seq += 1;
        self.events.push(Event {
            time,
            seq: self.seq,
            kind,
        });
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Whether server `s` has a departure event scheduled.
    pub fn has_departure(&self, s: usize) -> bool {
        self.has_departure[s]
    }

    pub fn scheduled_departures(&self) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e.kind, EventKind::Departure(_)))
            .count()
    }

    pub fn arrivals(&self) -> u64 {
        self.jobs.arrivals
    }

    pub fn departures(&self) -> u64 {
        self.jobs.departures
    }

    pub fn jobs_in_system(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    pub fn is_finished(&self) -> bool {
        self.jobs.arrivals >= self.cfg.horizon_arrivals
    }

    fn set_count(&mut self, s: usize, new: u32) {
        if self.measuring {
            self.occupancy.record_change(s, self.counts[s], self.now);
            self.joint.before_change(s, &self.counts, self.now);
        }
        self.counts[s] = new;
    }

    fn start_measuring(&mut self) {
        let n = self.counts.len();
        self.measuring = true;
        self.measure_start = self.now;
        self.occupancy = OccupancyEstimator::new(n, self.now);
        self.joint = JointEstimator::new(n, &self.cfg.joint_pairs, self.now);
    }

    /// Processes the next event. Returns `None` once the horizon is reached.
    pub fn step(&mut self) -> Option<Processed> {
        if self.is_finished() {
            return None;
        }
        let ev = self.events.pop().expect("an arrival is always pending before the horizon");
        debug_assert!(ev.time >= self.now);
        self.now = ev.time;
        Some(match ev.kind {
            EventKind::Arrival => self.arrive(),
            EventKind::Departure(s) => self.depart(s),
        })
    }

    fn arrive(&mut self) -> Processed {
        if !self.measuring && self.jobs.arrivals == self.warmup_arrivals {
            self.start_measuring();
        }
        self.jobs.arrivals += 1;
        let n = self.counts.len();
        let origin = self.origin_rng.random_range(0..n);
        let peer = self.table.sample_peer(origin, &mut self.peer_rng);
        let origin_count = self.counts[origin];
        let (destination, hops) = match peer {
            None => (origin, Some(0)),
            Some(p) => match allocate(origin_count as u64, self.counts[p.vertex] as u64, &mut self.tie_rng) {
                Destination::Origin => (origin, Some(0)),
                Destination::Peer => (p.vertex, p.hops),
            },
        };
        let peer_count = peer.map(|p| self.counts[p.vertex]);

        let measured = self.measuring;
        let mut record = None;
        if measured {
            self.jobs.measured_arrivals += 1;
            match hops {
                Some(h) => self.jobs.hop_sum += h as u64,
                None => *self.pending_hops.entry((origin, destination)).or_default() += 1,
            }
            if self.cfg.keep_records {
                record = Some(self.jobs.records.len());
                self.jobs.records.push(JobRecord {
                    arrival: self.now,
                    origin,
                    destination,
                    hops: hops.unwrap_or(u32::MAX),
                    departure: None,
                });
            }
        }
        self.queues[destination].push_back(Ticket {
            arrival: self.now,
            measured,
            record,
        });
        let new = self.counts[destination] + 1;
        self.set_count(destination, new);
        if new == 1 {
            self.schedule_departure(destination);
        }
        if self.jobs.arrivals < self.cfg.horizon_arrivals {
            let next = self.now + self.interarrival.sample(&mut self.arrival_rng);
            self.push(next, EventKind::Arrival);
        }
        Processed::Arrival {
            time: self.now,
            origin,
            peer: peer.map(|p| p.vertex),
            destination,
            origin_count,
            peer_count,
        }
    }

    fn schedule_departure(&mut self, s: usize) {
        debug_assert!(!self.has_departure[s]);
        self.has_departure[s] = true;
        let at = self.now + self.service.sample(&mut self.service_rng);
        self.push(at, EventKind::Departure(s));
    }

    fn depart(&mut self, s: usize) -> Processed {
        self.has_departure[s] = false;
        self.jobs.departures += 1;
        let ticket = self.queues[s].pop_front().expect("departure from a busy server");
        if ticket.measured {
            self.jobs.measured_departures += 1;
            self.jobs.sojourn_sum += self.now - ticket.arrival;
            if let Some(i) = ticket.record {
                self.jobs.records[i].departure = Some(self.now);
            }
        }
        let new = self.counts[s] - 1;
        self.set_count(s, new);
        if new > 0 {
            self.schedule_departure(s);
        }
        Processed::Departure { time: self.now, server: s }
    }

    /// Runs to the horizon and closes the estimators.
    pub fn run(mut self) -> DynamicResult {
        while self.step().is_some() {}
        self.finish()
    }

    /// Closes the estimators at the current time.
    pub fn finish(mut self) -> DynamicResult {
        if !self.measuring {
            self.start_measuring();
        }
        self.occupancy.close(&self.counts, self.now);
        self.joint.close(&self.counts, self.now);
        if !self.pending_hops.is_empty() {
            let mut pairs: Vec<(usize, usize)> = self.pending_hops.keys().copied().collect();
            pairs.sort_unstable();
            let dists = self.table.graph().hop_distances(&pairs);
            let lookup: HashMap<(usize, usize), u32> = pairs.iter().copied().zip(dists).collect();
            for (pair, &jobs) in &self.pending_hops {
                self.jobs.hop_sum += lookup[pair] as u64 * jobs;
            }
            for r in &mut self.jobs.records {
                if r.hops == u32::MAX {
                    r.hops = lookup[&(r.origin, r.destination)];
                }
            }
        }
        DynamicResult {
            occupancy: self.occupancy,
            joint: self.joint,
            jobs: self.jobs,
            measure_start: self.measure_start,
            end_time: self.now,
            final_counts: self.counts,
        }
    }
}

/// Simulates `cfg.horizon_arrivals` arrivals on `graph`.
pub fn run_dynamic(graph: &Graph, cfg: DynamicConfig) -> Result<DynamicResult> {
    Ok(DynamicSim::new(graph, cfg)?.run())
}
