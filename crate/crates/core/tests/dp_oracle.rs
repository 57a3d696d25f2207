mod common;

use common::{fast_configs, sweep_model, tiger, tiger_golden_counts};
use incprune::dp_update::{
    build_voa_prime, group_actions_by_observation_model, seed_support_points, DpConfig,
};
use incprune::oracle::{exhaustive_dp_update, grid_covering_check, random_pomdp, RandomModelSpec};
use incprune::vectorset::same_vectors;
use incprune::{
    dp_update, AlphaVector, DenseSimplex, PomdpModel, Pruner, SolveError, Variant, VectorSet,
};

fn oracle_chain(model: &PomdpModel, iterations: usize) -> Vec<VectorSet> {
    let lp = DenseSimplex::default();
    let p = Pruner::new(&lp);
    let mut v = VectorSet::zero(model.num_states());
    (0..iterations)
        .map(|_| {
            v = exhaustive_dp_update(&v, model, 20_000, &p).unwrap().0;
            v.clone()
        })
        .collect()
}

fn assert_variants_match_oracle(model: &PomdpModel, iterations: usize, label: &str) {
    let lp = DenseSimplex::default();
    let truth = oracle_chain(model, iterations);
    for (name, cfg) in fast_configs() {
        let mut v = VectorSet::zero(model.num_states());
        for (t, expected) in truth.iter().enumerate() {
            let (next, stats) = dp_update(&v, model, &cfg, &lp).unwrap();
            assert!(
                same_vectors(expected, &next, 1e-6),
                "{label} {name} iteration {}: oracle {} vectors, got {}",
                t + 1,
                expected.len(),
                next.len()
            );
            assert_eq!(stats.vectors_out, next.len());
            assert!(next
                .iter()
                .all(|m| m.action.is_some() && m.support.is_some()));
            v = next;
        }
    }
}

#[test]
fn first_step_from_zero_matches_oracle() {
    let model = tiger();
    let lp = DenseSimplex::default();
    let p = Pruner::new(&lp);
    let zero = VectorSet::zero(2);
    let (truth, _) = exhaustive_dp_update(&zero, &model, 100, &p).unwrap();
    for (name, cfg) in fast_configs() {
        let (out, _) = dp_update(&zero, &model, &cfg, &lp).unwrap();
        assert!(same_vectors(&truth, &out, 1e-9), "{name}");
    }
    let (out, _) = dp_update(
        &zero,
        &model,
        &DpConfig::for_variant(Variant::ExhaustiveOracle),
        &lp,
    )
    .unwrap();
    assert!(same_vectors(&truth, &out, 0.0));
}

#[test]
fn oracle_is_parsimonious_and_covering() {
    let lp = DenseSimplex::default();
    let p = Pruner::new(&lp);
    for seed in 0..6 {
        let model = sweep_model(seed);
        let v = oracle_chain(&model, 2).pop().unwrap();
        let (pc, _) = exhaustive_dp_update(&v, &model, 20_000, &p).unwrap();
        let (again, _) = p.lark_prune(&pc).unwrap();
        assert_eq!(again.len(), pc.len(), "seed {seed}");
        // Unpruned backup for the covering check.
        let mut full = Vec::new();
        for a in 0..model.num_actions() {
            let mut acc = VectorSet::from_members(
                model.num_states(),
                vec![AlphaVector::new(model.reward_vector(a).to_vec())],
            )
            .unwrap();
            for o in 0..model.num_observations() {
                acc = acc
                    .cross_sum(&incprune::dp_update::build_voa(&v, &model, a, o).unwrap())
                    .unwrap();
            }
            full.extend(acc.into_members());
        }
        let full = VectorSet::from_members(model.num_states(), full).unwrap();
        let resolution = if model.num_states() <= 3 { 50 } else { 20 };
        assert!(
            grid_covering_check(&full, &pc, resolution, 1e-6),
            "seed {seed}"
        );
    }
}

#[test]
fn oracle_cap_is_enforced() {
    let model = tiger();
    let lp = DenseSimplex::default();
    let p = Pruner::new(&lp);
    let v = oracle_chain(&model, 6).pop().unwrap();
    let err = exhaustive_dp_update(&v, &model, 10, &p).unwrap_err();
    assert!(matches!(err, SolveError::CapExceeded { cap: 10, .. }));
}

#[test]
fn random_models_match_oracle() {
    for seed in (0..100).step_by(4) {
        assert_variants_match_oracle(&sweep_model(seed), 3, &format!("seed {seed}"));
    }
}

#[test]
fn tiger_matches_oracle_and_golden_counts() {
    let model = tiger();
    let golden = tiger_golden_counts();
    assert_eq!(golden.len(), 20);
    let truth = oracle_chain(&model, 20);
    assert_eq!(truth.iter().map(|s| s.len()).collect::<Vec<_>>(), golden);
    assert_variants_match_oracle(&model, 20, "tiger");
}

fn shared_table_model(seed: u64) -> PomdpModel {
    random_pomdp(&RandomModelSpec {
        states: 3,
        actions: 3,
        observations: 2,
        share_observation_table: true,
        seed,
        ..Default::default()
    })
    .unwrap()
}

#[test]
fn ip_reduction_shares_runs() {
    let lp = DenseSimplex::default();
    for seed in 0..10 {
        let model = shared_table_model(seed);
        let groups = group_actions_by_observation_model(&model, 1e-12);
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0], vec![0, 1]);
        assert_variants_match_oracle(&model, 3, &format!("shared seed {seed}"));

        let v = oracle_chain(&model, 2).pop().unwrap();
        let (reduced, stats) = dp_update(&v, &model, &DpConfig::default(), &lp).unwrap();
        assert_eq!(stats.ip_call_count, groups.len());
        assert!(stats.ip_call_count < model.num_actions());
        let cfg = DpConfig {
            use_ip_reduction: false,
            ..Default::default()
        };
        let (full, stats) = dp_update(&v, &model, &cfg, &lp).unwrap();
        assert_eq!(stats.ip_call_count, model.num_actions());
        assert!(same_vectors(&reduced, &full, 1e-9));
    }
}

#[test]
fn pointwise_preprune_changes_nothing() {
    let lp = DenseSimplex::default();
    let cfg = DpConfig {
        use_pointwise_preprune: true,
        ..Default::default()
    };
    for seed in 0..10 {
        let model = sweep_model(seed);
        let mut a = VectorSet::zero(model.num_states());
        let mut b = a.clone();
        for _ in 0..3 {
            a = dp_update(&a, &model, &cfg, &lp).unwrap().0;
            b = dp_update(&b, &model, &DpConfig::default(), &lp).unwrap().0;
            assert!(same_vectors(&a, &b, 1e-9), "seed {seed}");
        }
    }
}

/// Checks seeding of every scaled set built from `v`; returns how many
/// scaled members the restricted program removed.
fn check_seeding(v: &VectorSet, model: &PomdpModel) -> usize {
    let lp = DenseSimplex::default();
    let p = Pruner::new(&lp);
    let mut removed = 0;
    for a in 0..model.num_actions() {
        for o in 0..model.num_observations() {
            let (vp, sources) = build_voa_prime(v, model, a, o).unwrap();
            let column = model.observation_column(a, o);
            let (seeded, _, _) = seed_support_points(v, &vp, &sources, &column, &p).unwrap();
            for m in seeded.iter() {
                let b = m.support.as_ref().unwrap().belief.as_slice();
                assert!(m.dot(b) >= vp.max_value(b) - 1e-9);
            }
            let (pc, _) = p.lark_prune(&vp).unwrap();
            for m in vp.iter() {
                if seeded.iter().any(|s| s.max_abs_diff(m) == 0.0) {
                    continue;
                }
                removed += 1;
                assert!(column.contains(&0.0));
                assert!(!pc.iter().any(|k| k.max_abs_diff(m) < 1e-9));
            }
        }
    }
    removed
}

#[test]
fn seeding_with_positive_observations() {
    let lp = DenseSimplex::default();
    for seed in 0..10 {
        let model = sweep_model(seed);
        let mut v = VectorSet::zero(model.num_states());
        for _ in 0..3 {
            v = dp_update(&v, &model, &DpConfig::default(), &lp).unwrap().0;
            assert_eq!(check_seeding(&v, &model), 0);
        }
    }
}

/// Three states where each observation rules out one state.
fn zero_column_model() -> PomdpModel {
    let text = "discount: 0.9\nvalues: reward\nstates: 3\nactions: 2\nobservations: 2\n\
                T: 0\n0.6 0.3 0.1\n0.2 0.5 0.3\n0.1 0.2 0.7\n\
                T: 1\n0.3 0.3 0.4\n0.5 0.4 0.1\n0.2 0.2 0.6\n\
                O: *\n1.0 0.0\n0.5 0.5\n0.0 1.0\n\
                R: 0 : 0 : * : * 1.0\nR: 0 : 1 : * : * -0.4\nR: 0 : 2 : * : * 0.2\n\
                R: 1 : 0 : * : * -0.7\nR: 1 : 1 : * : * 0.9\nR: 1 : 2 : * : * 0.1\n";
    incprune::parse_pomdp(text).unwrap()
}

#[test]
fn seeding_with_zero_observation_columns() {
    let model = zero_column_model();
    let lp = DenseSimplex::default();
    let mut v = VectorSet::zero(3);
    let mut removed = 0;
    for _ in 0..6 {
        v = dp_update(&v, &model, &DpConfig::default(), &lp).unwrap().0;
        removed += check_seeding(&v, &model);
    }
    assert!(removed > 0, "the restricted program never removed a vector");
    assert_variants_match_oracle(&model, 6, "zero column");
}

#[test]
fn detection_bound_holds_on_tiger() {
    let model = tiger();
    let lp = DenseSimplex::default();
    let mut v = VectorSet::zero(2);
    for _ in 0..20 {
        let (next, stats) = dp_update(&v, &model, &DpConfig::default(), &lp).unwrap();
        let k = next.len();
        assert!(stats.detection.step1_lps <= k * (k - 1) / 2);
        v = next;
    }
}

/// Past iteration 20 the scaled tiger sets contain members whose margins
/// fall below the positive tolerance; every variant must stay within
/// tolerance of the oracle regardless.
#[test]
fn tiger_values_track_oracle_past_golden_horizon() {
    let model = tiger();
    let lp = DenseSimplex::default();
    let truth = oracle_chain(&model, 45);
    for (name, cfg) in fast_configs() {
        let mut v = VectorSet::zero(2);
        for (t, expected) in truth.iter().enumerate() {
            let next = dp_update(&v, &model, &cfg, &lp).unwrap().0;
            let worst = (0..=20_000)
                .map(|i| {
                    let p = i as f64 / 20_000.0;
                    let b = [p, 1.0 - p];
                    (expected.max_value(&b) - next.max_value(&b)).abs()
                })
                .fold(0.0, f64::max);
            assert!(worst < 1e-6, "{name} iteration {}: {worst:e}", t + 1);
            v = next;
        }
    }
}
