use std::collections::BTreeMap;

use proptest::prelude::*;

use rcquad::events::CrossingEvent;
use rcquad::exact::enumerate;
use rcquad::lattice::{build_induced_region, build_region, Lattice, Rect, Region};
use rcquad::measure::{
    bc_dominates, cluster_count, dual_params, heat_bath_prob, BoundaryCondition, Configuration, ModelParams, NamedBc,
};

fn region(w: i32, h: i32) -> Region {
    build_region(&Lattice::square(), Rect { a: 0, b: w, c: 0, d: h }).unwrap()
}

fn partition(region: &Region, labels: &[u8]) -> BoundaryCondition {
    let mut groups: BTreeMap<u8, Vec<u32>> = BTreeMap::new();
    for (i, &v) in region.boundary().iter().enumerate() {
        groups.entry(labels[i % labels.len()]).or_default().push(v);
    }
    BoundaryCondition::from_blocks(region, groups.into_values().collect()).unwrap()
}

fn config(bits: &[bool], m: usize) -> Configuration {
    Configuration::from_bools(&(0..m).map(|e| bits[e % bits.len()]).collect::<Vec<_>>())
}

const NAMED: [NamedBc; 6] =
    [NamedBc::Free, NamedBc::Wired, NamedBc::Dobrushin, NamedBc::Mix, NamedBc::StarMix, NamedBc::WiredExceptBottom];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn domination_is_a_partial_order(
        a in prop::collection::vec(0u8..3, 1..12),
        b in prop::collection::vec(0u8..3, 1..12),
        c in prop::collection::vec(0u8..3, 1..12),
    ) {
        let g = region(1, 1);
        let (x, y, z) = (partition(&g, &a), partition(&g, &b), partition(&g, &c));
        prop_assert!(bc_dominates(&x, &x).unwrap());
        if bc_dominates(&x, &y).unwrap() && bc_dominates(&y, &x).unwrap() {
            prop_assert_eq!(&x, &y);
        }
        if bc_dominates(&x, &y).unwrap() && bc_dominates(&y, &z).unwrap() {
            prop_assert!(bc_dominates(&x, &z).unwrap());
        }
        let free = BoundaryCondition::free(&g);
        let wired = BoundaryCondition::wired(&g);
        prop_assert!(bc_dominates(&free, &x).unwrap() && bc_dominates(&x, &wired).unwrap());
    }

    #[test]
    fn dual_params_is_an_involution(p in 0.0f64..=1.0, q in 0.05f64..50.0) {
        let theta = ModelParams { p, q };
        let back = dual_params(dual_params(theta).unwrap()).unwrap();
        prop_assert!((back.p - p).abs() < 1e-12 && back.q == q);
    }

    #[test]
    fn opening_an_edge_merges_at_most_two_clusters(
        bits in prop::collection::vec(any::<bool>(), 1..40),
        labels in prop::collection::vec(0u8..4, 1..12),
        which in 0usize..6,
        e in 0usize..1000,
    ) {
        let g = region(2, 2);
        let m = g.num_edges();
        let e = (e % m) as u32;
        let bcs = [NAMED[which].build(&g).unwrap(), partition(&g, &labels)];
        let mut c = config(&bits, m);
        for bc in &bcs {
            c.set(e, false);
            let closed = cluster_count(&g, bc, &c).unwrap() as i64;
            c.set(e, true);
            let open = cluster_count(&g, bc, &c).unwrap() as i64;
            prop_assert!(open - closed == 0 || open - closed == -1);
        }
    }

    #[test]
    fn cluster_counts_are_ordered_by_boundary_condition(
        bits in prop::collection::vec(any::<bool>(), 1..40),
        labels in prop::collection::vec(0u8..4, 1..12),
    ) {
        let g = region(2, 2);
        let c = config(&bits, g.num_edges());
        let k = |bc: &BoundaryCondition| cluster_count(&g, bc, &c).unwrap();
        let xi = partition(&g, &labels);
        let free = k(&BoundaryCondition::free(&g));
        let wired = k(&BoundaryCondition::wired(&g));
        prop_assert!(free >= k(&xi) && k(&xi) >= wired);
    }

    #[test]
    fn heat_bath_is_the_exact_conditional(
        bits in prop::collection::vec(any::<bool>(), 1..10),
        which in 0usize..6,
        e in 0usize..100,
        p in 0.05f64..0.95,
        q in 0.5f64..6.0,
    ) {
        // Induced [0,2]x[0,1] has 7 edges.
        let g = build_induced_region(&Lattice::square(), Rect { a: 0, b: 2, c: 0, d: 1 }).unwrap();
        let m = g.num_edges();
        let e = (e % m) as u32;
        let bc = NAMED[which].build(&g).unwrap();
        let params = ModelParams { p, q };
        let dist = enumerate(&g, &bc, params).unwrap();
        let c = config(&bits, m);
        let mask = c.to_mask() & !(1u64 << e);
        let (closed, open) = (dist.prob(mask), dist.prob(mask | 1 << e));
        let want = open / (open + closed);
        let got = heat_bath_prob(params, &g, &bc, &c, e).unwrap();
        prop_assert!((got - want).abs() < 1e-12, "{} vs {}", got, want);
    }

    #[test]
    fn partition_function_ignores_edge_order(
        perm_seed in prop::collection::vec(any::<u32>(), 7),
        p in 0.05f64..0.95,
        q in 0.5f64..6.0,
    ) {
        let g = build_induced_region(&Lattice::square(), Rect { a: 0, b: 2, c: 0, d: 1 }).unwrap();
        let m = g.num_edges();
        let dist = enumerate(&g, &BoundaryCondition::free(&g), ModelParams { p, q }).unwrap();
        let mut perm: Vec<usize> = (0..m).collect();
        perm.sort_by_key(|&i| perm_seed[i]);
        let weights: Vec<f64> = (0..1u64 << m)
            .map(|mask| {
                let permuted = (0..m).filter(|&i| mask >> i & 1 == 1).fold(0u64, |acc, i| acc | 1 << perm[i]);
                dist.log_weight(permuted)
            })
            .collect();
        let max = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_z = max + weights.iter().map(|w| (w - max).exp()).sum::<f64>().ln();
        prop_assert!((log_z - dist.log_partition()).abs() < 1e-12);
    }

    #[test]
    fn crossings_have_their_declared_monotonicity(
        bits in prop::collection::vec(any::<bool>(), 1..80),
        e in 0usize..1000,
    ) {
        let g = region(4, 3);
        let rect = Rect { a: 0, b: 4, c: 0, d: 3 };
        let m = g.num_edges();
        let h = CrossingEvent::horizontal(rect).compile(&g).unwrap();
        let vc = CrossingEvent::v_complement(rect).compile(&g).unwrap();
        let mut c = config(&bits, m);
        let e = (e % m) as u32;
        c.set(e, false);
        let (h0, v0) = (h.holds(&c), vc.holds(&c));
        c.set(e, true);
        prop_assert!(!h0 || h.holds(&c));
        prop_assert!(v0 || !vc.holds(&c));
    }
}
