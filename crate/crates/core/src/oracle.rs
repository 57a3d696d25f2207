//! Reference computations used to check the pruning algorithms: exhaustive
//! cross sums, grid checks, brute-force neighbor detection, random models.

use rand::distributions::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::dp_update::build_voa;
use crate::error::{Result, SolveError};
use crate::model::PomdpModel;
use crate::neighbors::{tie_program, NeighborGraph};
use crate::pruning::{PruneStats, Pruner};
use crate::vectorset::{AlphaVector, VectorSet};

/// `PC(∪_a {r_a} ⊕ V_{a,o₁} ⊕ … ⊕ V_{a,o_m})` by full enumeration and one
/// final filter. Fails with [`SolveError::CapExceeded`] before building a
/// set larger than `cap`.
pub fn exhaustive_dp_update(
    v: &VectorSet,
    model: &PomdpModel,
    cap: usize,
    pruner: &Pruner<'_>,
) -> Result<(VectorSet, PruneStats)> {
    let n = model.num_states();
    let mut union = Vec::new();
    for a in 0..model.num_actions() {
        let reward = AlphaVector::new(model.reward_vector(a).to_vec()).with_action(a);
        let mut acc = VectorSet::from_members(n, vec![reward])?;
        for o in 0..model.num_observations() {
            let voa = build_voa(v, model, a, o)?;
            let requested = acc.len() * voa.len();
            if requested > cap {
                return Err(SolveError::CapExceeded { cap, requested });
            }
            acc = acc.cross_sum(&voa)?;
        }
        union.extend(acc.into_members().into_iter().map(|m| m.with_action(a)));
    }
    if union.len() > cap {
        return Err(SolveError::CapExceeded {
            cap,
            requested: union.len(),
        });
    }
    let union = VectorSet::canonical(n, union)?;
    pruner.lark_prune(&union)
}

/// Every point of the regular simplex grid with `resolution` steps per axis.
pub fn simplex_grid(n: usize, resolution: usize) -> Vec<Vec<f64>> {
    fn rec(n: usize, left: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n - 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in 0..=left {
            prefix.push(k);
            rec(n, left - k, prefix, out);
            prefix.pop();
        }
    }
    let mut raw = Vec::new();
    rec(n, resolution, &mut Vec::new(), &mut raw);
    raw.into_iter()
        .map(|p| {
            p.into_iter()
                .map(|k| k as f64 / resolution as f64)
                .collect()
        })
        .collect()
}

/// Sampled covering test: at every grid point `candidate` reaches the value
/// of `full` up to `tol`.
pub fn grid_covering_check(
    full: &VectorSet,
    candidate: &VectorSet,
    resolution: usize,
    tol: f64,
) -> bool {
    simplex_grid(full.dim(), resolution)
        .iter()
        .all(|b| candidate.max_value(b) >= full.max_value(b) - tol)
}

/// Exact neighbor relation of a parsimonious set by one LP per pair: a pair
/// are neighbors when some tie point beats every other member by more than
/// the neighbor tolerance. Pairs touching only in a lower-dimensional contact
/// have optimum zero and are non-neighbors.
pub fn brute_force_neighbors(w: &VectorSet, pruner: &Pruner<'_>) -> Result<NeighborGraph> {
    brute_force_neighbors_above(w, pruner, pruner.tolerances().neighbor)
}

/// Neighbor relation where a pair counts as neighbors when its tie-program
/// optimum exceeds `threshold`. A negative threshold also admits contacts
/// and near-ties within that margin.
pub fn brute_force_neighbors_above(
    w: &VectorSet,
    pruner: &Pruner<'_>,
    threshold: f64,
) -> Result<NeighborGraph> {
    let k = w.len();
    let mut g = NeighborGraph::new(k);
    for i in 0..k {
        for j in i + 1..k {
            let others: Vec<&AlphaVector> = (0..k)
                .filter(|&l| l != i && l != j)
                .map(|l| w.get(l))
                .collect();
            let lp = tie_program(w.get(i), w.get(j), &others);
            if pruner.solve_raw(&lp)?.positive_point(threshold).is_none() {
                g.mark_non_neighbor(i, j);
            }
        }
    }
    g.set_exact(true);
    Ok(g)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomModelSpec {
    pub states: usize,
    pub actions: usize,
    pub observations: usize,
    pub reward_range: (f64, f64),
    /// Probability that an entry of a transition or observation row is zeroed.
    pub sparsity: f64,
    /// Make action 1 use action 0's observation table.
    pub share_observation_table: bool,
    /// Uniform perturbation added to each reward.
    pub reward_jitter: f64,
    pub discount: f64,
    pub seed: u64,
}

impl Default for RandomModelSpec {
    fn default() -> Self {
        RandomModelSpec {
            states: 3,
            actions: 2,
            observations: 2,
            reward_range: (-1.0, 1.0),
            sparsity: 0.0,
            share_observation_table: false,
            reward_jitter: 1e-6,
            discount: 0.9,
            seed: 0,
        }
    }
}

fn random_row(len: usize, sparsity: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut row: Vec<f64> = (0..len).map(|_| Exp1.sample(rng)).collect();
    if sparsity > 0.0 {
        let keep = (0..len)
            .max_by(|&i, &j| row[i].total_cmp(&row[j]))
            .expect("nonempty row");
        for (i, x) in row.iter_mut().enumerate() {
            if i != keep && rng.gen_bool(sparsity.clamp(0.0, 1.0)) {
                *x = 0.0;
            }
        }
    }
    let total: f64 = row.iter().sum();
    row.iter().map(|x| x / total).collect()
}

/// A reproducible random model with Dirichlet(1) rows.
pub fn random_pomdp(spec: &RandomModelSpec) -> Result<PomdpModel> {
    let (n, na, m) = (spec.states, spec.actions, spec.observations);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut transition = Vec::with_capacity(na * n * n);
    for _ in 0..na * n {
        transition.extend(random_row(n, spec.sparsity, &mut rng));
    }
    let mut observation = Vec::with_capacity(na * n * m);
    for _ in 0..na * n {
        observation.extend(random_row(m, spec.sparsity, &mut rng));
    }
    if spec.share_observation_table && na >= 2 {
        let table: Vec<f64> = observation[..n * m].to_vec();
        observation[n * m..2 * n * m].copy_from_slice(&table);
    }
    let (lo, hi) = spec.reward_range;
    let range = Uniform::new_inclusive(lo, hi);
    let jitter = spec.reward_jitter;
    let reward: Vec<f64> = (0..na * n)
        .map(|_| {
            let r: f64 = range.sample(&mut rng);
            if jitter > 0.0 {
                r + rng.gen_range(-jitter..=jitter)
            } else {
                r
            }
        })
        .collect();
    let names = |prefix: &str, k: usize| (0..k).map(|i| format!("{prefix}{i}")).collect();
    Ok(PomdpModel::new(
        names("s", n),
        names("a", na),
        names("o", m),
        transition,
        observation,
        reward,
        spec.discount,
        None,
    )?)
}
