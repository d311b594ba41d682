use proxlb::graph::UNREACHABLE;
use proxlb::rng::{self, Stream};
use proxlb::{Graph, TopologySpec};
use rand::Rng;

fn sample_specs() -> Vec<TopologySpec> {
    vec![
        TopologySpec::Line { n: 30 },
        TopologySpec::Ring { n: 31 },
        TopologySpec::BarabasiAlbert { n: 40, alpha: 2 },
        TopologySpec::RandomRegular { n: 40, beta: 4 },
        TopologySpec::ErdosRenyi { n: 45, gamma: 0.15 },
        TopologySpec::RandomGeometric { n: 50, r: 0.3 },
        TopologySpec::SpatialLine { n: 25, l_max: 10.0 },
        TopologySpec::SpatialRing { n: 25, radius: 3.0 },
    ]
}

/// All-pairs shortest paths by Floyd-Warshall on the edge list.
fn floyd_warshall(g: &Graph) -> Vec<Vec<u32>> {
    let n = g.n();
    let inf = u32::MAX / 2;
    let mut d = vec![vec![inf; n]; n];
    for (u, row) in d.iter_mut().enumerate() {
        row[u] = 0;
    }
    for (u, v) in g.edges() {
        d[u][v] = 1;
        d[v][u] = 1;
    }
    for w in 0..n {
        for u in 0..n {
            for v in 0..n {
                let via = d[u][w] + d[w][v];
                if via < d[u][v] {
                    d[u][v] = via;
                }
            }
        }
    }
    d
}

#[test]
fn adjacency_symmetric_without_self_loops() {
    for spec in sample_specs() {
        for seed in 0..5 {
            let g = spec.build(seed).unwrap();
            assert!(g.is_connected(), "{spec}");
            for u in 0..g.n() {
                assert!(!g.neighbors(u).contains(&u), "{spec}: self-loop at {u}");
                for &v in g.neighbors(u) {
                    assert!(g.neighbors(v).contains(&u), "{spec}: {u}->{v} not mirrored");
                }
                let mut sorted = g.neighbors(u).to_vec();
                sorted.sort_unstable();
                sorted.dedup();
                assert_eq!(sorted.len(), g.degree(u), "{spec}: multi-edge at {u}");
            }
            let degree_sum: usize = (0..g.n()).map(|u| g.degree(u)).sum();
            assert_eq!(degree_sum, 2 * g.edge_count());
        }
    }
}

#[test]
fn truncated_bfs_matches_all_pairs_oracle() {
    for spec in sample_specs() {
        let g = spec.build(11).unwrap();
        let d = floyd_warshall(&g);
        for (u, row) in d.iter().enumerate() {
            assert_eq!(&g.bfs(u), row);
            for k in [1, 2, 3, 7] {
                let field = g.distances_up_to_k(u, k);
                let expected: Vec<(usize, u32)> = row
                    .iter()
                    .enumerate()
                    .filter(|&(v, &dv)| v != u && dv <= k)
                    .map(|(v, &dv)| (v, dv))
                    .collect();
                let mut got = field.entries.clone();
                got.sort_unstable();
                assert_eq!(got, expected, "{spec} u={u} k={k}");
            }
        }
    }
}

#[test]
fn k_hop_neighbourhoods_are_symmetric() {
    let mut rng = rng::stream(2024, Stream::Graph);
    for spec in sample_specs() {
        let g = spec.build(rng.random()).unwrap();
        for _ in 0..200 {
            let u = rng.random_range(0..g.n());
            let v = rng.random_range(0..g.n());
            let k = rng.random_range(1..6);
            let uv = g.distances_up_to_k(u, k).get(v).is_some();
            let vu = g.distances_up_to_k(v, k).get(u).is_some();
            assert_eq!(uv, vu, "{spec} u={u} v={v} k={k}");
        }
    }
}

#[test]
fn ring_neighbourhood_size_is_min_2k_n_minus_1() {
    for n in [3, 4, 10, 11, 50] {
        let g = TopologySpec::Ring { n }.build(0).unwrap();
        for k in 1..=n as u32 {
            for u in 0..n {
                assert_eq!(g.distances_up_to_k(u, k).len(), (2 * k as usize).min(n - 1));
            }
        }
    }
}

#[test]
fn random_regular_thousand_cubic() {
    let g = TopologySpec::RandomRegular { n: 1000, beta: 3 }.build(9).unwrap();
    assert!((0..1000).all(|u| g.degree(u) == 3));
    assert!(g.bfs(0).iter().all(|&d| d != UNREACHABLE));
}

#[test]
fn barabasi_albert_edge_count_matches_growth_rule() {
    for (n, alpha) in [(10, 1), (100, 3), (500, 5)] {
        let g = TopologySpec::BarabasiAlbert { n, alpha }.build(4).unwrap();
        // star on alpha+1 vertices, then alpha edges per later vertex
        assert_eq!(g.edge_count(), alpha + (n - alpha - 1) * alpha);
    }
}

#[test]
fn same_seed_same_edges() {
    for spec in sample_specs() {
        let a: Vec<_> = spec.build(123).unwrap().edges().collect();
        let b: Vec<_> = spec.build(123).unwrap().edges().collect();
        assert_eq!(a, b, "{spec}");
    }
}
