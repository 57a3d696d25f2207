use incprune::oracle::{brute_force_neighbors, grid_covering_check};
use incprune::vectorset::same_vectors;
use incprune::{AlphaVector, CspVariant, DenseSimplex, LpMode, Pruner, SupportKind, VectorSet};
use proptest::prelude::*;

fn raw_set(n: usize, max_len: usize) -> impl Strategy<Value = VectorSet> {
    prop::collection::vec(prop::collection::vec(-1.0f64..1.0, n), 1..max_len).prop_map(
        move |rows| {
            VectorSet::canonical(n, rows.into_iter().map(AlphaVector::new).collect()).unwrap()
        },
    )
}

/// Two raw sets over a shared dimension drawn from 2..=4.
fn raw_pair() -> impl Strategy<Value = (VectorSet, VectorSet)> {
    (2usize..=4).prop_flat_map(|n| (raw_set(n, 10), raw_set(n, 10)))
}

const VARIANTS: [CspVariant; 5] = [
    CspVariant::Plain,
    CspVariant::RestrictedRegion,
    CspVariant::Neighbor(LpMode::Full),
    CspVariant::Neighbor(LpMode::Reduced),
    CspVariant::Neighbor(LpMode::Reformulated),
];

fn with_exact_graph(set: VectorSet, pruner: &Pruner<'_>) -> VectorSet {
    let g = brute_force_neighbors(&set, pruner).unwrap();
    set.with_graph(g)
}

#[test]
fn lark_example_sets() {
    let lp = DenseSimplex::default();
    let p = Pruner::new(&lp);
    let set = |vs: &[&[f64]]| {
        VectorSet::canonical(2, vs.iter().map(|v| AlphaVector::new(v.to_vec())).collect()).unwrap()
    };
    let (out, _) = p
        .lark_prune(&set(&[&[1.0, 0.0], &[0.0, 1.0], &[0.4, 0.4]]))
        .unwrap();
    assert_eq!(out.len(), 2);
    let (out, _) = p
        .lark_prune(&set(&[&[1.0, 0.0], &[0.0, 1.0], &[0.6, 0.6]]))
        .unwrap();
    assert_eq!(out.len(), 3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn lark_is_parsimonious_covering_with_valid_support(w in (2usize..=4).prop_flat_map(|n| raw_set(n, 14))) {
        let lp = DenseSimplex::default();
        let p = Pruner::new(&lp);
        let (pc, stats) = p.lark_prune(&w).unwrap();
        prop_assert!(!pc.is_empty());
        prop_assert!(pc.len() <= w.len());
        prop_assert_eq!(stats.vectors_out, pc.len());
        for m in pc.iter() {
            prop_assert!(w.iter().any(|x| x.max_abs_diff(m) == 0.0));
            let sp = m.support.as_ref().expect("support point");
            let b = sp.belief.as_slice();
            prop_assert!(m.dot(b) >= pc.max_value(b) - 1e-7);
            prop_assert!(m.dot(b) >= w.max_value(b) - 1e-7);
            if sp.kind == SupportKind::Witness {
                for o in pc.iter().filter(|o| o.max_abs_diff(m) > 0.0) {
                    prop_assert!(m.dot(b) > o.dot(b) - 1e-9);
                }
            }
        }
        prop_assert!(grid_covering_check(&w, &pc, 20, 1e-6));
        let (again, _) = p.lark_prune(&pc).unwrap();
        prop_assert_eq!(again.len(), pc.len());
    }

    #[test]
    fn every_cross_sum_strategy_matches_exhaustive((w, x) in raw_pair()) {
        let lp = DenseSimplex::default();
        let p = Pruner::new(&lp);
        let w = with_exact_graph(p.lark_prune(&w).unwrap().0, &p);
        let x = with_exact_graph(p.lark_prune(&x).unwrap().0, &p);
        let (reference, _) = p.lark_prune(&w.cross_sum(&x).unwrap()).unwrap();
        for variant in VARIANTS {
            let out = p.cross_sum_prune(&w, &x, variant).unwrap();
            prop_assert!(same_vectors(&reference, &out.set, 1e-9), "{:?}", variant);
            prop_assert_eq!(out.pairs.len(), out.set.len());
            for (k, &(i, j)) in out.pairs.iter().enumerate() {
                let sum: Vec<f64> = w.get(i).values.iter().zip(&x.get(j).values).map(|(a, b)| a + b).collect();
                prop_assert!(AlphaVector::new(sum).max_abs_diff(out.set.get(k)) < 1e-12);
            }
            if let CspVariant::Neighbor(mode) = variant {
                if mode != LpMode::Full {
                    if let Some(mean) = out.record.mean_rows() {
                        prop_assert!(mean <= out.record.plain_row_bound() as f64);
                    }
                }
            }
        }
    }

    #[test]
    fn neighbor_strategy_works_without_graphs((w, x) in raw_pair()) {
        let lp = DenseSimplex::default();
        let p = Pruner::new(&lp);
        let w = p.lark_prune(&w).unwrap().0;
        let x = p.lark_prune(&x).unwrap().0;
        let reference = p.cross_sum_prune(&w, &x, CspVariant::Plain).unwrap();
        let out = p.cross_sum_prune(&w, &x, CspVariant::Neighbor(LpMode::Reformulated)).unwrap();
        prop_assert!(same_vectors(&reference.set, &out.set, 1e-9));
    }

    #[test]
    fn harvested_members_are_in_plain_output((w, x) in raw_pair()) {
        let lp = DenseSimplex::default();
        let p = Pruner::new(&lp);
        let w = with_exact_graph(p.lark_prune(&w).unwrap().0, &p);
        let x = with_exact_graph(p.lark_prune(&x).unwrap().0, &p);
        let plain = p.cross_sum_prune(&w, &x, CspVariant::Plain).unwrap();
        let out = p.cross_sum_prune(&w, &x, CspVariant::Neighbor(LpMode::Reformulated)).unwrap();
        prop_assert_eq!(out.harvested.len(), out.stats.harvested_without_lp);
        for &k in &out.harvested {
            let m = out.set.get(k);
            prop_assert!(plain.set.iter().any(|y| y.max_abs_diff(m) < 1e-9));
        }
    }

    #[test]
    fn cross_sum_graph_marks_are_sound((w, x) in raw_pair()) {
        let lp = DenseSimplex::default();
        let p = Pruner::new(&lp);
        let w = with_exact_graph(p.lark_prune(&w).unwrap().0, &p);
        let x = with_exact_graph(p.lark_prune(&x).unwrap().0, &p);
        for mode in [LpMode::Full, LpMode::Reduced, LpMode::Reformulated] {
            let out = p.cross_sum_prune(&w, &x, CspVariant::Neighbor(mode)).unwrap();
            let truth = brute_force_neighbors(&out.set, &p).unwrap();
            let g = out.set.graph_or_complete();
            for (i, j) in g.non_neighbor_pairs() {
                prop_assert!(truth.is_non_neighbor(i, j), "{:?} marks ({}, {})", mode, i, j);
            }
        }
    }

    #[test]
    fn incremental_pruning_equals_one_shot(sets in (2usize..=3).prop_flat_map(|n| prop::collection::vec(raw_set(n, 5), 2..5))) {
        let lp = DenseSimplex::default();
        let p = Pruner::new(&lp);
        let pruned: Vec<VectorSet> = sets.iter().map(|s| p.lark_prune(s).unwrap().0).collect();
        let mut full = pruned[0].clone();
        for s in &pruned[1..] {
            full = full.cross_sum(s).unwrap();
        }
        let (reference, _) = p.lark_prune(&full).unwrap();
        for variant in VARIANTS {
            let (out, stats, records) = p.incremental_prune(&pruned, variant).unwrap();
            prop_assert!(same_vectors(&reference, &out, 1e-9), "{:?}", variant);
            prop_assert_eq!(records.len(), pruned.len() - 1);
            prop_assert_eq!(records.iter().map(|r| r.lp_count).sum::<usize>(), stats.lp_count);
            let mut shuffled = pruned.clone();
            shuffled.rotate_left(1);
            shuffled.reverse();
            let (again, _, _) = p.incremental_prune(&shuffled, variant).unwrap();
            prop_assert!(same_vectors(&out, &again, 1e-9), "{:?} fold order", variant);
        }
    }
}
