use hdxgeo_core::complex::{build_two_complex, graph_link, one_skeleton, sample_geo_graph, ComplexRecord, WeightedGraph};
use hdxgeo_core::rng::{split_seed, stream};
use hdxgeo_core::shell::{build_shell_matrices, ShellVector};
use hdxgeo_core::spectral::{normalized_adjacency, second_abs_eigenvalue_with, trickle_down_check, Method};
use hdxgeo_core::sphere::{shifted_threshold, tail_sandwich, tau_of, BetaDist, UnitVector};
use hdxgeo_core::walks::{canonical_form, decompose};
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tail_is_a_decreasing_symmetric_probability(d in 2usize..600, t in -0.99f64..0.99, dt in 0.0f64..0.5) {
        let dist = BetaDist::new(d).unwrap();
        let a = dist.tail(t).unwrap();
        let b = dist.tail((t + dt).min(1.0)).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!(b <= a + 1e-14);
        let mirror = dist.tail(-t).unwrap();
        prop_assert!((a + mirror - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn tail_lies_in_its_sandwich(d in 3usize..600, t in 0.01f64..0.95) {
        let tail = BetaDist::new(d).unwrap().tail(t).unwrap();
        let (lower, upper) = tail_sandwich(d, t).unwrap();
        prop_assert!(tail <= upper * (1.0 + 1e-10));
        prop_assert!(lower <= tail * (1.0 + 1e-10));
    }

    #[test]
    fn inversion_round_trips(d in 2usize..600, lp in -9.0f64..-0.01) {
        let p = lp.exp();
        let th = tau_of(p, d).unwrap();
        let back = BetaDist::new(d).unwrap().tail(th.tau).unwrap();
        prop_assert!((back - p).abs() <= 1e-10 * p.max(1e-3), "p={p} back={back}");
    }

    #[test]
    fn shifted_threshold_is_symmetric(x in -0.99f64..0.99, y in -0.99f64..0.99, tau in 0.01f64..0.99) {
        prop_assert_eq!(shifted_threshold(x, y, tau).unwrap(), shifted_threshold(y, x, tau).unwrap());
    }

    #[test]
    fn normalized_vectors_have_unit_norm(v in prop::collection::vec(-10.0f64..10.0, 2..50)) {
        prop_assume!(v.iter().any(|x| x.abs() > 1e-3));
        let u = UnitVector::normalize(v).unwrap();
        let n: f64 = u.coords().iter().map(|x| x * x).sum();
        prop_assert!((n - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn seed_splitting_is_a_function_of_its_inputs(master: u64, i in 0u64..1000) {
        prop_assert_eq!(split_seed(master, "a", i), split_seed(master, "a", i));
        prop_assert_ne!(split_seed(master, "a", i), split_seed(master, "b", i));
        prop_assert_ne!(split_seed(master, "a", i), split_seed(master, "a", i + 1));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn complexes_are_consistent(n in 20usize..120, d in 3usize..12, p in 0.1f64..0.6, seed: u64) {
        let g = sample_geo_graph(n, d, p, seed).unwrap();
        let c = build_two_complex(&g);
        prop_assert!(c.is_downward_closed());
        for &[a, b, x] in c.triangles() {
            prop_assert!(a < b && b < x);
            prop_assert!(g.has_edge(a as usize, b as usize) && g.has_edge(b as usize, x as usize) && g.has_edge(a as usize, x as usize));
        }
        // the link of v has one edge per triangle at v; the skeleton degree counts each twice
        for v in 0..n {
            let link = graph_link(&g, v);
            prop_assert_eq!(2 * link.edge_count() as u64, c.vertex_weights()[v]);
        }
        let sk = one_skeleton(&c);
        // each triangle adds 1 to three edges, each stored in both directions
        prop_assert_eq!(sk.graph.total_weight(), 6.0 * c.triangles().len() as f64);

        let rec = ComplexRecord::from_parts(&g, &c);
        let back = ComplexRecord::parse(rec.to_text().as_bytes()).unwrap();
        prop_assert_eq!(back, rec);
    }

    #[test]
    fn solvers_agree_and_trickle_down_holds(n in 3usize..80, seed: u64) {
        let mut rng = stream(seed, "prop-graph", 0);
        let mut edges = Vec::new();
        for i in 1..n {
            edges.push(((i - 1) as u32, i as u32, rng.random_range(0.1..3.0)));
        }
        for _ in 0..2 * n {
            let (a, b) = (rng.random_range(0..n as u32), rng.random_range(0..n as u32));
            if a != b {
                edges.push((a, b, rng.random_range(0.1..3.0)));
            }
        }
        let g = WeightedGraph::from_edges(n, &edges);
        let op = normalized_adjacency(&g).unwrap();
        let dense = second_abs_eigenvalue_with(&op, 1e-10, Method::Dense).unwrap();
        let iter = second_abs_eigenvalue_with(&op, 1e-10, Method::Iterative).unwrap();
        prop_assert!(dense.second_abs_eigenvalue <= 1.0 + 1e-12);
        prop_assert!((dense.top_eigenvalue - 1.0).abs() < 1e-10);
        prop_assert!((dense.second_abs_eigenvalue - iter.second_abs_eigenvalue).abs() < 1e-8);
    }

    #[test]
    fn complexes_satisfy_trickle_down(n in 20usize..80, d in 3usize..8, p in 0.8f64..0.98, seed: u64) {
        // dense complexes, so links are connected and usually expand
        let g = sample_geo_graph(n, d, p, seed).unwrap();
        let c = build_two_complex(&g);
        let sk = one_skeleton(&c);
        if !sk.connected || sk.graph.n() < 3 {
            return Ok(());
        }
        let mut link_max: f64 = 0.0;
        for &v in &sk.vertices {
            let link = graph_link(&g, v as usize);
            if link.graph.n() < 2 {
                return Ok(());
            }
            let op = normalized_adjacency(&link.graph).unwrap();
            link_max = link_max.max(second_abs_eigenvalue_with(&op, 1e-10, Method::Dense).unwrap().second_abs_eigenvalue);
        }
        if link_max >= 0.5 {
            return Ok(());
        }
        let op = normalized_adjacency(&sk.graph).unwrap();
        let sk_lambda = second_abs_eigenvalue_with(&op, 1e-10, Method::Dense).unwrap().second_abs_eigenvalue;
        let t = trickle_down_check(sk_lambda, link_max, 1e-9).unwrap();
        prop_assert!(t.slack >= 0.0, "skeleton {sk_lambda} links {link_max}");
    }

    #[test]
    fn shell_matrices_are_reversible_chains(
        kappas in prop::collection::vec(0.0f64..1.0, 3..60),
        tau in 0.05f64..0.8,
        d in 5usize..300,
    ) {
        let kappas: Vec<f64> = kappas.into_iter().map(|u| tau + u * (0.95 - tau).max(0.0)).collect();
        let sv = ShellVector::new(kappas, tau, d).unwrap();
        let mats = match build_shell_matrices(&sv) {
            Ok(m) => m,
            Err(_) => return Ok(()), // rows with zero degree are a reported error, not a chain
        };
        let e = mats.invariant_errors();
        prop_assert!(e.row_sum <= 1e-12);
        prop_assert!(e.stationarity <= 1e-12);
        prop_assert!(e.detailed_balance <= 1e-12);
        let total: f64 = mats.stationary().iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn walk_decomposition_invariants(steps in prop::collection::vec(1u32..5, 2..9), start in 0u32..5) {
        // build a closed walk on labels 0..5 without self-loops
        let mut walk = vec![start];
        for s in steps {
            let prev = *walk.last().unwrap();
            walk.push((prev + s) % 5);
        }
        let first = walk[0];
        if *walk.last().unwrap() != first {
            walk.push(first);
        }
        prop_assume!(walk.windows(2).all(|w| w[0] != w[1]));
        let shape = decompose(&walk).unwrap();
        prop_assert!(shape.violations().is_empty(), "{:?}", shape.violations());
        let relabeled: Vec<u32> = walk.iter().map(|&x| (x * 3 + 1) % 5 + 10).collect();
        prop_assert_eq!(canonical_form(&walk), canonical_form(&relabeled));
        prop_assert_eq!(decompose(&relabeled).unwrap().stats, shape.stats);
    }
}
