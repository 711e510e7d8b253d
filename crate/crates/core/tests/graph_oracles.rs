//! Graph builders checked against union-find components and closed-form
//! distances.

use std::collections::HashSet;

use exmix_core::graph::{self, OutAdjacency};

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    let mut y = x;
    while parent[y] != r {
        let next = parent[y];
        parent[y] = r;
        y = next;
    }
    r
}

/// Component sizes of `n` vertices joined by `edges`, largest first.
fn component_sizes(n: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let mut parent: Vec<usize> = (0..n).collect();
    for &(u, v) in edges {
        let (a, b) = (find(&mut parent, u), find(&mut parent, v));
        if a != b {
            parent[a] = b;
        }
    }
    let mut sizes = vec![0; n];
    for v in 0..n {
        let r = find(&mut parent, v);
        sizes[r] += 1;
    }
    sizes.retain(|&s| s > 0);
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes
}

#[test]
fn percolation_giant_is_the_largest_union_find_component() {
    for (side, dim, p, seed) in [(8, 2, 0.7, 1), (10, 2, 0.6, 2), (5, 3, 0.5, 3)] {
        let s = graph::percolation_giant(side, dim, p, seed).unwrap();
        let n = side.pow(dim as u32);
        let sizes = component_sizes(n, &s.open_edges);
        assert_eq!(s.graph.n(), sizes[0]);
        assert!(2 * s.graph.n() >= n);
        assert!(s.graph.is_connected());
        // Every giant edge is an open torus edge between the mapped vertices.
        let open: HashSet<(usize, usize)> = s.open_edges.iter().flat_map(|&(u, v)| [(u, v), (v, u)]).collect();
        for &(u, v) in s.graph.edges() {
            assert!(open.contains(&(s.torus_vertex[u], s.torus_vertex[v])));
        }
        let internal = s
            .open_edges
            .iter()
            .filter(|&&(u, v)| s.torus_vertex.binary_search(&u).is_ok() && s.torus_vertex.binary_search(&v).is_ok())
            .count();
        assert_eq!(internal, s.graph.num_edges());
    }
}

#[test]
fn hypercube_distances_are_hamming() {
    let g = graph::hypercube(5).unwrap();
    let dist = g.distance_matrix();
    for u in 0..g.n() {
        for v in 0..g.n() {
            assert_eq!(dist[u][v], (u ^ v).count_ones() as usize);
        }
    }
    assert_eq!(g.num_edges(), 5 * 16);
}

#[test]
fn torus_distances_are_cyclic_l1() {
    let (side, dim) = (5, 3);
    let g = graph::torus(side, dim).unwrap();
    let coords = |mut v: usize| -> Vec<usize> {
        (0..dim)
            .map(|_| {
                let c = v % side;
                v /= side;
                c
            })
            .collect()
    };
    let dist = g.distance_matrix();
    for u in 0..g.n() {
        for v in 0..g.n() {
            let want: usize = coords(u).iter().zip(coords(v)).map(|(&a, b)| a.abs_diff(b).min(side - a.abs_diff(b))).sum();
            assert_eq!(dist[u][v], want);
        }
    }
    assert!(g.is_regular() && g.d() == 2 * dim);
}

#[test]
fn random_regular_graphs_are_simple_and_regular() {
    for seed in 0..5 {
        let g = graph::random_regular(20, 3, seed).unwrap();
        assert!(g.is_regular() && g.d() == 3);
        let set: HashSet<(usize, usize)> = g.edges().iter().map(|&(u, v)| (u.min(v), u.max(v))).collect();
        assert_eq!(set.len(), g.num_edges());
        assert!(g.edges().iter().all(|&(u, v)| u != v));
    }
}

#[test]
fn inflation_pads_out_degree_without_duplicating_edges() {
    for (g, d_hat) in [(graph::cycle(8).unwrap(), 4), (graph::hypercube(3).unwrap(), 5), (graph::torus(4, 2).unwrap(), 6)] {
        let mg = graph::degree_inflate(&g, d_hat).unwrap();
        let mut in_deg = vec![0; g.n()];
        for v in 0..g.n() {
            let out = mg.out_of(v);
            assert_eq!(out.len(), d_hat);
            let distinct: HashSet<usize> = out.iter().copied().collect();
            assert_eq!(distinct.len(), d_hat);
            assert!(!distinct.contains(&v));
            for &u in mg.dummy_out(v) {
                assert!(!g.has_edge(v, u));
            }
            for u in out {
                in_deg[u] += 1;
            }
        }
        assert_eq!(mg.max_in_degree(), *in_deg.iter().max().unwrap());
    }
}

#[test]
fn text_format_round_trips() {
    let g = graph::torus(3, 2).unwrap();
    let back = graph::Graph::from_text(&g.to_text()).unwrap();
    assert_eq!(back.n(), g.n());
    assert_eq!(back.edges(), g.edges());
    assert_eq!(back.rate_per_edge(), g.rate_per_edge());
}
