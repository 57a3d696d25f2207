mod common;

use incprune::dp_update::DpConfig;
use incprune::neighbors::{collinear, inherit_affine, inherit_cross_sum, inherit_scaling};
use incprune::oracle::{brute_force_neighbors, brute_force_neighbors_above, random_pomdp};
use incprune::{dp_update, AlphaVector, DenseSimplex, NeighborGraph, Pruner, VectorSet};

fn set(vs: &[&[f64]]) -> VectorSet {
    VectorSet::from_members(
        vs[0].len(),
        vs.iter().map(|v| AlphaVector::new(v.to_vec())).collect(),
    )
    .unwrap()
}

#[test]
fn brute_force_examples() {
    let lp = DenseSimplex::default();
    let p = Pruner::new(&lp);
    let g = brute_force_neighbors(&set(&[&[1.0, 0.0], &[0.0, 1.0]]), &p).unwrap();
    assert!(g.are_neighbors(0, 1));
    let g = brute_force_neighbors(&set(&[&[1.0, 0.0], &[0.6, 0.6], &[0.0, 1.0]]), &p).unwrap();
    assert!(g.are_neighbors(0, 1));
    assert!(g.are_neighbors(1, 2));
    assert!(g.is_non_neighbor(0, 2));
    let g = brute_force_neighbors(&set(&[&[1.0, 2.0]]), &p).unwrap();
    assert_eq!(g.size(), 1);
    assert!(g.non_neighbor_pairs().is_empty());
}

#[test]
fn graph_symmetry_and_remap() {
    let mut g = NeighborGraph::new(4);
    g.mark_non_neighbor(2, 0);
    assert!(g.is_non_neighbor(0, 2));
    assert!(g.is_non_neighbor(2, 0));
    assert_eq!(g.neighbors_of(0), vec![1, 3]);
    // Merged members are non-neighbors only if every source pair is.
    let merged = g.remap(&[vec![0], vec![1, 2], vec![3]]);
    assert!(merged.are_neighbors(0, 1));
    let merged = inherit_scaling(&g, &[vec![0], vec![2]]);
    assert!(merged.is_non_neighbor(0, 1));
    let affine = inherit_affine(&g, &[vec![2], vec![0], vec![1]]);
    assert!(affine.is_non_neighbor(0, 1));
    assert!(affine.are_neighbors(1, 2));
}

#[test]
fn point_contacts_are_not_neighbors() {
    let lp = DenseSimplex::default();
    let p = Pruner::new(&lp);
    // Four cells meet at one point; members 0 and 1 touch only there.
    let w = set(&[
        &[1.0, 0.0, 0.5],
        &[0.0, 1.0, 0.5],
        &[1.0, 1.0, 0.0],
        &[0.0, 0.0, 1.0],
    ]);
    let strict = brute_force_neighbors(&w, &p).unwrap();
    let lenient = brute_force_neighbors_above(&w, &p, -1e-7).unwrap();
    assert!(strict.is_non_neighbor(0, 1));
    assert!(lenient.are_neighbors(0, 1));
}

#[test]
fn collinearity() {
    assert!(collinear(&[1.0, 2.0], &[2.0, 4.0], 1e-7));
    assert!(collinear(&[1.0, 2.0], &[-0.5, -1.0], 1e-7));
    assert!(!collinear(&[1.0, 2.0], &[1.0, 3.0], 1e-7));
}

#[test]
fn cross_sum_inheritance_keeps_only_sound_marks() {
    let lp = DenseSimplex::default();
    let p = Pruner::new(&lp);
    let w = set(&[&[1.0, 0.0], &[0.6, 0.6], &[0.0, 1.0]]);
    let w = w.clone().with_graph(brute_force_neighbors(&w, &p).unwrap());
    let x = set(&[&[0.5, 0.0], &[0.0, 0.5]]);
    let x = x.clone().with_graph(brute_force_neighbors(&x, &p).unwrap());
    let pairs = vec![(0, 0), (1, 0), (1, 1), (2, 1)];
    let g = inherit_cross_sum(&w, &x, &pairs, 1e-7);
    let sums: Vec<AlphaVector> = pairs
        .iter()
        .map(|&(i, j)| {
            AlphaVector::new(
                w.get(i)
                    .values
                    .iter()
                    .zip(&x.get(j).values)
                    .map(|(a, b)| a + b)
                    .collect(),
            )
        })
        .collect();
    let out = VectorSet::from_members(2, sums).unwrap();
    let truth = brute_force_neighbors(&out, &p).unwrap();
    for (a, b) in g.non_neighbor_pairs() {
        assert!(truth.is_non_neighbor(a, b), "({a}, {b})");
    }
    assert!(g.is_non_neighbor(0, 3));
}

/// Every inherited non-neighbor mark is a true non-neighbor, and detection
/// on the union reproduces the brute-force graph.
#[test]
fn inherited_marks_and_detection_on_random_models() {
    let lp = DenseSimplex::default();
    let p = Pruner::new(&lp);
    let mut instances = 0;
    let mut seed = 0u64;
    while instances < 50 {
        let spec = common::sweep_spec(seed);
        seed += 1;
        let model = random_pomdp(&spec).unwrap();
        let cfg = DpConfig {
            trace: true,
            ..Default::default()
        };
        let mut v = VectorSet::zero(spec.states);
        for _ in 0..3 {
            let (next, stats) = dp_update(&v, &model, &cfg, &lp).unwrap();
            if next.len() > 15 {
                break;
            }
            let k = next.len();
            assert!(stats.detection.step1_lps <= k * (k.saturating_sub(1)) / 2);
            let trace = stats.trace.unwrap();
            let mut inherited: Vec<&VectorSet> = trace.scaled_sets.iter().map(|s| &s.set).collect();
            inherited.extend(trace.csp_calls.iter().map(|c| &c.output.set));
            inherited.extend(trace.action_sets.iter().flatten());
            for s in inherited {
                let truth = brute_force_neighbors(s, &p).unwrap();
                for (i, j) in s.graph_or_complete().non_neighbor_pairs() {
                    assert!(
                        truth.is_non_neighbor(i, j),
                        "seed {} marks ({i}, {j})",
                        spec.seed
                    );
                }
            }
            let detected = next.graph().expect("detected graph");
            let oracle = brute_force_neighbors(&next, &p).unwrap();
            for i in 0..k {
                for j in i + 1..k {
                    assert_eq!(
                        detected.are_neighbors(i, j),
                        oracle.are_neighbors(i, j),
                        "seed {} pair ({i}, {j})",
                        spec.seed
                    );
                }
            }
            instances += 1;
            v = next;
        }
    }
}
