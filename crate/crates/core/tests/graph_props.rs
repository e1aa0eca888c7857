mod common;

use std::collections::VecDeque;

use aicert::linalg::{metzler_hurwitz_oracle, Matrix};
use aicert::sgraph::{graph_of, Digraph, Sign, SignMatrix};
use common::{all_metzler_patterns, closure, random_metzler};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Kahn's algorithm; `true` when every vertex gets removed.
fn kahn_acyclic(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut indeg = vec![0; n];
    for &(_, b) in edges {
        indeg[b] += 1;
    }
    let mut queue: VecDeque<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut removed = 0;
    while let Some(v) = queue.pop_front() {
        removed += 1;
        for &(a, b) in edges {
            if a == v {
                indeg[b] -= 1;
                if indeg[b] == 0 {
                    queue.push_back(b);
                }
            }
        }
    }
    removed == n
}

fn digraph() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (2usize..10).prop_flat_map(|n| {
        // skip the diagonal by shifting the head past the tail
        let edge = (0..n, 0..n - 1).prop_map(|(a, b)| (a, if b >= a { b + 1 } else { b }));
        (Just(n), prop::collection::vec(edge, 0..(n * 2)))
    })
}

fn build(n: usize, edges: &[(usize, usize)]) -> Digraph {
    let mut g = Digraph::new(n);
    for &(a, b) in edges {
        g.add_edge(a, b).unwrap();
    }
    g
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn dfs_matches_kahn((n, edges) in digraph()) {
        let g = build(n, &edges);
        prop_assert_eq!(g.is_acyclic(), kahn_acyclic(n, &edges));
        match g.acyclicity() {
            Ok(order) => {
                let mut pos = vec![0; n];
                for (k, &v) in order.iter().enumerate() {
                    pos[v] = k;
                }
                prop_assert_eq!(order.len(), n);
                for (a, b) in g.edges() {
                    prop_assert!(pos[a] < pos[b]);
                }
            }
            Err(cycle) => {
                prop_assert!(cycle.len() >= 3);
                prop_assert_eq!(cycle.first(), cycle.last());
                for w in cycle.windows(2) {
                    prop_assert!(g.has_edge(w[0], w[1]));
                }
            }
        }
    }

    #[test]
    fn shortest_paths_match_closure((n, edges) in digraph(), x in 0usize..1000, y in 0usize..1000) {
        let from = x % n;
        let to = (from + 1 + y % (n - 1)) % n;
        let g = build(n, &edges);
        let reach = closure(n, &edges);
        let path = g.shortest_path(from, to).unwrap();
        prop_assert_eq!(path.is_some(), reach[from][to]);
        if let Some(p) = path {
            prop_assert_eq!(p[0], from);
            prop_assert_eq!(*p.last().unwrap(), to);
            for w in p.windows(2) {
                prop_assert!(g.has_edge(w[0], w[1]));
            }
            // length equals the breadth-first distance
            let mut dist = vec![usize::MAX; n];
            dist[from] = 0;
            let mut q = VecDeque::from([from]);
            while let Some(v) = q.pop_front() {
                for u in g.successors(v) {
                    if dist[u] == usize::MAX {
                        dist[u] = dist[v] + 1;
                        q.push_back(u);
                    }
                }
            }
            prop_assert_eq!(p.len() - 1, dist[to]);
        }
    }

    #[test]
    fn point_and_sign_graphs_coincide(seed in any::<u64>(), d in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_metzler(&mut rng, d, 0.5);
        let s = SignMatrix::sign_pattern(&a);
        let ga: Vec<_> = graph_of(&a).edges().collect();
        let gs: Vec<_> = graph_of(&s).edges().collect();
        prop_assert_eq!(ga, gs);
    }
}

/// Acyclic graph of a negative-diagonal Metzler pattern iff sgn of it is Hurwitz.
fn acyclic_iff_hurwitz(s: &SignMatrix) {
    let sgn: Matrix<f64> = s.sgn();
    assert_eq!(graph_of(s).is_acyclic(), metzler_hurwitz_oracle(&sgn).unwrap(), "{s}");
}

#[test]
fn sign_stability_exhaustive_up_to_three() {
    let mut count = 0;
    for d in 1..=3 {
        for s in all_metzler_patterns(d, &[Sign::Minus]) {
            acyclic_iff_hurwitz(&s);
            count += 1;
        }
    }
    assert_eq!(count, 1 + 4 + 64);
}

#[test]
fn sign_stability_exhaustive_at_four() {
    // 2^12 patterns once the diagonal is fixed to minus
    let all = all_metzler_patterns(4, &[Sign::Minus]);
    assert_eq!(all.len(), 4096);
    all.iter().for_each(acyclic_iff_hurwitz);
}

#[test]
fn sign_stability_sampled_at_five_and_six() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for n in 0..4000 {
        let d = 5 + n % 2;
        let s = Matrix::from_fn(d, d, |i, j| {
            if i == j {
                Sign::Minus
            } else if rng.random_bool(0.25) {
                Sign::Plus
            } else {
                Sign::Zero
            }
        });
        acyclic_iff_hurwitz(&s);
    }
}
