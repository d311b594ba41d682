//! Topology generators.

use std::collections::{BTreeMap, HashSet};
use std::f64::consts::PI;
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{Embedding, Graph};
use crate::error::{Error, Result};
use crate::rng::{self, SimRng, Stream};

/// Regenerations allowed for the random models before giving up.
pub const MAX_ATTEMPTS: usize = 100;

// Relative slack when checking the threshold parameters, so that a value
// computed as exactly ln(n)/n is accepted.
const THRESHOLD_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TopologySpec {
    Line { n: usize },
    Ring { n: usize },
    /// Preferential attachment, `alpha` edges per new vertex.
    BarabasiAlbert { n: usize, alpha: usize },
    /// Uniform-ish `beta`-regular graph.
    RandomRegular { n: usize, beta: usize },
    /// G(n, gamma).
    ErdosRenyi { n: usize, gamma: f64 },
    /// Unit-square geometric graph, edges at Euclidean distance `< r`.
    RandomGeometric { n: usize, r: f64 },
    /// Servers uniform on `[0, l_max)`, joined in position order.
    SpatialLine { n: usize, l_max: f64 },
    /// Servers uniform on a circle of radius `radius`, joined in angular order.
    SpatialRing { n: usize, radius: f64 },
}

impl TopologySpec {
    pub fn n(&self) -> usize {
        match *self {
            TopologySpec::Line { n }
            | TopologySpec::Ring { n }
            | TopologySpec::BarabasiAlbert { n, .. }
            | TopologySpec::RandomRegular { n, .. }
            | TopologySpec::ErdosRenyi { n, .. }
            | TopologySpec::RandomGeometric { n, .. }
            | TopologySpec::SpatialLine { n, .. }
            | TopologySpec::SpatialRing { n, .. } => n,
        }
    }

    /// Short name used in CSV output and on the command line.
    pub fn name(&self) -> &'static str {
        match self {
            TopologySpec::Line { .. } => "line",
            TopologySpec::Ring { .. } => "ring",
            TopologySpec::BarabasiAlbert { .. } => "ba",
            TopologySpec::RandomRegular { .. } => "rr",
            TopologySpec::ErdosRenyi { .. } => "er",
            TopologySpec::RandomGeometric { .. } => "rgg",
            TopologySpec::SpatialLine { .. } => "spatial-line",
            TopologySpec::SpatialRing { .. } => "spatial-ring",
        }
    }

    /// The model parameter besides `n`, formatted for CSV (`-` when none).
    pub fn params(&self) -> String {
        match *self {
            TopologySpec::Line { .. } | TopologySpec::Ring { .. } => "-".into(),
            TopologySpec::BarabasiAlbert { alpha, .. } => format!("alpha={alpha}"),
            TopologySpec::RandomRegular { beta, .. } => format!("beta={beta}"),
            TopologySpec::ErdosRenyi { gamma, .. } => format!("gamma={gamma}"),
            TopologySpec::RandomGeometric { r, .. } => format!("r={r}"),
            TopologySpec::SpatialLine { l_max, .. } => format!("l_max={l_max}"),
            TopologySpec::SpatialRing { radius, .. } => format!("radius={radius}"),
        }
    }

    pub fn is_random(&self) -> bool {
        !matches!(self, TopologySpec::Line { .. } | TopologySpec::Ring { .. })
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if n < 2 {
            return bad(format!("n must be at least 2, got {n}"));
        }
        let ln_n = (n as f64).ln();
        match *self {
            TopologySpec::Line { .. } | TopologySpec::Ring { .. } => Ok(()),
            TopologySpec::BarabasiAlbert { alpha, .. } => {
                if alpha < 1 {
                    bad("alpha must be at least 1".into())
                } else if alpha + 1 > n {
                    bad(format!("alpha={alpha} needs n >= {}", alpha + 1))
                } else {
                    Ok(())
                }
            }
            TopologySpec::RandomRegular { beta, .. } => {
                if beta < 3 {
                    bad(format!("beta must be at least 3, got {beta}"))
                } else if beta >= n {
                    bad(format!("beta={beta} must be below n={n}"))
                } else if !(n * beta).is_multiple_of(2) {
                    bad(format!("n*beta must be even, got {n}*{beta}"))
                } else {
                    Ok(())
                }
            }
            TopologySpec::ErdosRenyi { gamma, .. } => {
                let floor = ln_n / n as f64;
                if !(gamma <= 1.0 && gamma >= floor * (1.0 - THRESHOLD_SLACK)) {
                    bad(format!("gamma must lie in [ln(n)/n, 1] = [{floor}, 1], got {gamma}"))
                } else {
                    Ok(())
                }
            }
            TopologySpec::RandomGeometric { r, .. } => {
                let floor = (ln_n / (PI * n as f64)).sqrt();
                if r.is_nan() || r < floor * (1.0 - THRESHOLD_SLACK) {
                    bad(format!("r must be at least sqrt(ln(n)/(pi n)) = {floor}, got {r}"))
                } else {
                    Ok(())
                }
            }
            TopologySpec::SpatialLine { l_max, .. } => {
                if l_max > 0.0 && l_max.is_finite() {
                    Ok(())
                } else {
                    bad(format!("l_max must be positive, got {l_max}"))
                }
            }
            TopologySpec::SpatialRing { radius, .. } => {
                if radius > 0.0 && radius.is_finite() {
                    Ok(())
                } else {
                    bad(format!("radius must be positive, got {radius}"))
                }
            }
        }
    }

    /// Draws a connected graph from the model. Deterministic in `(self, seed)`.
    pub fn build(&self, seed: u64) -> Result<Graph> {
        self.validate()?;
        let g = match *self {
            TopologySpec::Line { n } => {
                let edges: Vec<_> = (1..n).map(|v| (v - 1, v)).collect();
                Graph::from_edges(n, &edges)?
            }
            TopologySpec::Ring { n } => Graph::from_edges(n, &cycle_edges(&(0..n).collect::<Vec<_>>()))?,
            TopologySpec::BarabasiAlbert { n, alpha } => {
                barabasi_albert(n, alpha, &mut rng::stream(seed, Stream::Graph))?
            }
            TopologySpec::RandomRegular { n, beta } => {
                retry_until_connected("random regular", seed, |rng| random_regular(n, beta, rng))?
            }
            TopologySpec::ErdosRenyi { n, gamma } => {
                retry_until_connected("Erdos-Renyi", seed, |rng| erdos_renyi(n, gamma, rng))?
            }
            TopologySpec::RandomGeometric { n, r } => {
                retry_until_connected("random geometric", seed, |rng| random_geometric(n, r, rng))?
            }
            TopologySpec::SpatialLine { n, l_max } => {
                let mut rng = rng::stream(seed, Stream::Graph);
                let pos: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * l_max).collect();
                let order = position_order(&pos);
                let edges: Vec<_> = order.windows(2).map(|w| (w[0], w[1])).collect();
                Graph::from_edges(n, &edges)?.with_embedding(Embedding::Line(pos))?
            }
            TopologySpec::SpatialRing { n, radius } => {
                let mut rng = rng::stream(seed, Stream::Graph);
                let angles: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 * PI).collect();
                let order = position_order(&angles);
                Graph::from_edges(n, &cycle_edges(&order))?
                    .with_embedding(Embedding::Circle { radius, angles })?
            }
        };
        Ok(g.with_topology(*self))
    }
}

impl fmt::Display for TopologySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(n={}", self.name(), self.n())?;
        match self {
            TopologySpec::Line { .. } | TopologySpec::Ring { .. } => write!(f, ")"),
            _ => write!(f, ", {})", self.params()),
        }
    }
}

/// Cycle through `order`; degenerates to a single edge for two vertices.
fn cycle_edges(order: &[usize]) -> Vec<(usize, usize)> {
    let mut edges: Vec<_> = order.windows(2).map(|w| (w[0], w[1])).collect();
    if order.len() > 2 {
        edges.push((order[order.len() - 1], order[0]));
    }
    edges
}

/// Vertex ids sorted by coordinate, ties by id.
fn position_order(pos: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..pos.len()).collect();
    order.sort_by(|&a, &b| pos[a].total_cmp(&pos[b]).then(a.cmp(&b)));
    order
}

fn retry_until_connected<F>(model: &'static str, seed: u64, mut attempt: F) -> Result<Graph>
where
    F: FnMut(&mut SimRng) -> Option<Graph>,
{
    for i in 0..MAX_ATTEMPTS {
        let s = if i == 0 { seed } else { rng::retry_seed(seed, i as u64) };
        let mut rng = rng::stream(s, Stream::Graph);
        if let Some(g) = attempt(&mut rng) {
            if g.is_connected() {
                return Ok(g);
            }
        }
    }
    Err(Error::ConnectivityFailure {
        model,
        attempts: MAX_ATTEMPTS,
    })
}

/// Star on `alpha + 1` vertices, then each new vertex picks `alpha` distinct
/// targets with probability proportional to degree.
fn barabasi_albert(n: usize, alpha: usize, rng: &mut SimRng) -> Result<Graph> {
    let mut edges = Vec::with_capacity(alpha * (n - alpha));
    // every edge endpoint once: sampling uniformly from it is degree-proportional
    let mut endpoints = Vec::with_capacity(2 * alpha * (n - alpha));
    for leaf in 1..=alpha {
        edges.push((0, leaf));
        endpoints.extend([0, leaf]);
    }
    let mut targets = Vec::with_capacity(alpha);
    for v in alpha + 1..n {
        targets.clear();
        while targets.len() < alpha {
            let t = endpoints[rng.random_range(0..endpoints.len())];
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for &t in &targets {
            edges.push((t, v));
            endpoints.extend([t, v]);
        }
    }
    Graph::from_edges(n, &edges)
}

/// One Steger–Wormald pass: pair shuffled stubs, keep the admissible pairs,
/// re-pair the leftovers. `None` when the leftovers cannot be completed.
fn random_regular(n: usize, beta: usize, rng: &mut SimRng) -> Option<Graph> {
    let mut edges: HashSet<(usize, usize)> = HashSet::with_capacity(n * beta / 2);
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, beta)).collect();
    while !stubs.is_empty() {
        let mut leftover: BTreeMap<usize, usize> = BTreeMap::new();
        stubs.shuffle(rng);
        for pair in stubs.chunks_exact(2) {
            let (a, b) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if a != b && edges.insert((a, b)) {
                continue;
            }
            *leftover.entry(a).or_default() += 1;
            *leftover.entry(b).or_default() += 1;
        }
        if !leftover.is_empty() && !completable(&leftover, &edges) {
            return None;
        }
        stubs = leftover
            .into_iter()
            .flat_map(|(v, c)| std::iter::repeat_n(v, c))
            .collect();
    }
    let mut list: Vec<_> = edges.into_iter().collect();
    list.sort_unstable();
    Graph::from_edges(n, &list).ok()
}

fn completable(leftover: &BTreeMap<usize, usize>, edges: &HashSet<(usize, usize)>) -> bool {
    let vs: Vec<usize> = leftover.keys().copied().collect();
    vs.iter()
        .enumerate()
        .any(|(i, &a)| vs[i + 1..].iter().any(|&b| !edges.contains(&(a, b))))
}

/// G(n, p) by geometric edge skipping.
fn erdos_renyi(n: usize, p: f64, rng: &mut SimRng) -> Option<Graph> {
    let mut edges = Vec::new();
    if p >= 1.0 {
        for v in 1..n {
            edges.extend((0..v).map(|w| (w, v)));
        }
        return Graph::from_edges(n, &edges).ok();
    }
    let log_q = (1.0 - p).ln();
    let (mut v, mut w) = (1usize, -1i64);
    while v < n {
        let r: f64 = rng.random();
        w += 1 + ((1.0 - r).ln() / log_q).floor() as i64;
        while w >= v as i64 && v < n {
            w -= v as i64;
            v += 1;
        }
        if v < n {
            edges.push((w as usize, v));
        }
    }
    Graph::from_edges(n, &edges).ok()
}

fn random_geometric(n: usize, r: f64, rng: &mut SimRng) -> Option<Graph> {
    let pts: Vec<[f64; 2]> = (0..n).map(|_| [rng.random(), rng.random()]).collect();
    let cells = ((1.0 / r).floor() as usize).clamp(1, 4096);
    let cell_of = |x: f64| ((x * cells as f64) as usize).min(cells - 1);
    let mut grid: Vec<Vec<usize>> = vec![Vec::new(); cells * cells];
    for (i, p) in pts.iter().enumerate() {
        grid[cell_of(p[1]) * cells + cell_of(p[0])].push(i);
    }
    let r2 = r * r;
    let mut edges = Vec::new();
    for (i, p) in pts.iter().enumerate() {
        let (cx, cy) = (cell_of(p[0]), cell_of(p[1]));
        for gy in cy.saturating_sub(1)..=(cy + 1).min(cells - 1) {
            for gx in cx.saturating_sub(1)..=(cx + 1).min(cells - 1) {
                for &j in &grid[gy * cells + gx] {
                    if j > i {
                        let (dx, dy) = (pts[j][0] - p[0], pts[j][1] - p[1]);
                        if dx * dx + dy * dy < r2 {
                            edges.push((i, j));
                        }
                    }
                }
            }
        }
    }
    Graph::from_edges(n, &edges).ok()?.with_embedding(Embedding::Plane(pts)).ok()
}
