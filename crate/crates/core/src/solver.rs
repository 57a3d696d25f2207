//! Value iteration to a Bellman-residual threshold, policy lookup and simulation.

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dp_update::{dp_update, DpConfig, DpStats};
use crate::error::{Result, SolveError};
use crate::lp::{LinearProgram, LpSolver};
use crate::model::{Belief, PomdpModel};
use crate::pruning::Pruner;
use crate::vectorset::VectorSet;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    /// Stop once the residual between successive value functions drops below this.
    pub epsilon: f64,
    pub max_iterations: usize,
    pub dp: DpConfig,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            epsilon: 0.01,
            max_iterations: 1000,
            dp: DpConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub value_function: VectorSet,
    pub iterations_run: usize,
    pub residual_history: Vec<f64>,
    pub per_iteration_stats: Vec<DpStats>,
    /// Whether the residual dropped below epsilon before the iteration cap.
    pub converged: bool,
}

/// `max_b |max_{α∈A} α·b − max_{β∈B} β·b|`, exact up to LP tolerance.
pub fn bellman_residual(a: &VectorSet, b: &VectorSet, lp: &dyn LpSolver) -> Result<f64> {
    Ok(one_sided_gap(a, b, lp)?.max(one_sided_gap(b, a, lp)?))
}

/// `max_b (max_A − max_B)`, clipped below at zero.
fn one_sided_gap(a: &VectorSet, b: &VectorSet, lp: &dyn LpSolver) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(SolveError::Dimension {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    if a.is_empty() || b.is_empty() {
        return Err(SolveError::Precondition(
            "residual of an empty vector set".into(),
        ));
    }
    let pruner = Pruner::new(lp);
    let mut gap = 0.0f64;
    for alpha in a.iter() {
        let mut prog = LinearProgram::maximize_slack(a.dim());
        for beta in b.iter() {
            prog.push_dominance(&alpha.values, &beta.values, true);
        }
        if let Some(v) = pruner.solve_raw(&prog)?.value() {
            gap = gap.max(v);
        }
    }
    Ok(gap)
}

/// Exact value iteration from `V₀ = {0}`.
pub fn value_iterate(
    model: &PomdpModel,
    cfg: &SolveConfig,
    lp: &dyn LpSolver,
) -> Result<SolveResult> {
    let mut v = VectorSet::zero(model.num_states());
    let mut history = Vec::new();
    let mut per_iteration = Vec::new();
    let mut converged = false;
    while per_iteration.len() < cfg.max_iterations {
        let (next, stats) = dp_update(&v, model, &cfg.dp, lp)?;
        let residual = bellman_residual(&next, &v, lp)?;
        history.push(residual);
        per_iteration.push(stats);
        v = next;
        if residual < cfg.epsilon {
            converged = true;
            break;
        }
    }
    Ok(SolveResult {
        value_function: v,
        iterations_run: per_iteration.len(),
        residual_history: history,
        per_iteration_stats: per_iteration,
        converged,
    })
}

/// `r(b,a) + λ Σ_o P(o|b,a) V(b^{a,o})`.
pub fn lookahead_value(v: &VectorSet, model: &PomdpModel, b: &Belief, a: usize) -> f64 {
    let mut total = model.expected_reward(b, a);
    for o in 0..model.num_observations() {
        let p = model.observation_prob(b, a, o);
        if p <= 0.0 {
            continue;
        }
        if let Some(next) = model.belief_update(b, a, o) {
            total += model.discount() * p * v.max_value(next.as_slice());
        }
    }
    total
}

/// Greedy one-step lookahead action; ties go to the lowest index.
pub fn extract_policy_action(v: &VectorSet, model: &PomdpModel, b: &Belief) -> usize {
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for a in 0..model.num_actions() {
        let q = lookahead_value(v, model, b, a);
        if q > best_value + 1e-12 {
            best = a;
            best_value = q;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub state: usize,
    pub action: usize,
    pub observation: usize,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub steps: Vec<Step>,
    pub discounted_return: f64,
}

/// Runs the greedy policy for `horizon` steps from a state drawn from `b0`.
/// Identical seeds give identical episodes.
pub fn simulate(
    model: &PomdpModel,
    v: &VectorSet,
    b0: &Belief,
    horizon: usize,
    seed: u64,
) -> Result<Episode> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |weights: &[f64], rng: &mut ChaCha8Rng| -> Result<usize> {
        let dist = WeightedIndex::new(weights)
            .map_err(|e| SolveError::Internal(format!("sampling: {e}")))?;
        Ok(dist.sample(rng))
    };
    let mut state = draw(b0.as_slice(), &mut rng)?;
    let mut belief = b0.clone();
    let mut steps = Vec::with_capacity(horizon);
    let mut discounted = 0.0;
    let mut factor = 1.0;
    for _ in 0..horizon {
        let action = extract_policy_action(v, model, &belief);
        let reward = model.reward(action, state);
        let next = draw(model.transition_row(action, state), &mut rng)?;
        let obs_weights: Vec<f64> = (0..model.num_observations())
            .map(|o| model.observation(action, next, o))
            .collect();
        let observation = draw(&obs_weights, &mut rng)?;
        steps.push(Step {
            state,
            action,
            observation,
            reward,
        });
        discounted += factor * reward;
        factor *= model.discount();
        belief = model
            .belief_update(&belief, action, observation)
            .ok_or_else(|| {
                SolveError::Internal("sampled an observation of probability zero".into())
            })?;
        state = next;
    }
    Ok(Episode {
        steps,
        discounted_return: discounted,
    })
}
