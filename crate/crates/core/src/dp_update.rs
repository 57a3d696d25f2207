//! One step of exact value iteration: `V ↦ PC(∪_a W_a)`.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::error::{Result, SolveError};
use crate::lp::{LinearProgram, LpSolver};
use crate::model::{Belief, PomdpModel};
use crate::neighbors::{
    detect_neighbors_in_union, inherit_affine, inherit_scaling, ActionSource, DetectionStats,
};
use crate::oracle::exhaustive_dp_update;
use crate::pruning::{CspCallRecord, CspOutput, CspVariant, LpMode, PruneStats, Pruner};
use crate::tolerance::Tolerances;
use crate::vectorset::{AlphaVector, SupportPoint, VectorSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Full cross sums, then one final filter. Reference only.
    ExhaustiveOracle,
    PlainIp,
    RestrictedRegionIp,
    Improved,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::ExhaustiveOracle,
        Variant::PlainIp,
        Variant::RestrictedRegionIp,
        Variant::Improved,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::ExhaustiveOracle => "exhaustive",
            Variant::PlainIp => "plain",
            Variant::RestrictedRegionIp => "rr",
            Variant::Improved => "improved",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "exhaustive" | "oracle" => Ok(Variant::ExhaustiveOracle),
            "plain" | "ip" => Ok(Variant::PlainIp),
            "rr" | "restricted-region" => Ok(Variant::RestrictedRegionIp),
            "improved" => Ok(Variant::Improved),
            other => Err(format!(
                "unknown variant `{other}` (exhaustive, plain, rr, improved)"
            )),
        }
    }
}

impl fmt::Display for LpMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LpMode::Full => "full",
            LpMode::Reduced => "reduced",
            LpMode::Reformulated => "reformulated",
        })
    }
}

impl FromStr for LpMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "full" => Ok(LpMode::Full),
            "reduced" => Ok(LpMode::Reduced),
            "reformulated" => Ok(LpMode::Reformulated),
            other => Err(format!(
                "unknown LP mode `{other}` (full, reduced, reformulated)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DpConfig {
    pub variant: Variant,
    /// LP shape inside the neighbor-restricted cross sum (improved variant only).
    pub lp_mode: LpMode,
    /// Share one incremental-pruning run among actions with equal observation tables.
    pub use_ip_reduction: bool,
    /// Drop componentwise-dominated vectors before any LP work.
    pub use_pointwise_preprune: bool,
    pub tolerances: Tolerances,
    /// Largest intermediate set the exhaustive variant may build.
    pub exhaustive_cap: usize,
    /// Keep intermediate sets in [`DpStats::trace`].
    pub trace: bool,
}

impl Default for DpConfig {
    fn default() -> Self {
        DpConfig {
            variant: Variant::Improved,
            lp_mode: LpMode::Reformulated,
            use_ip_reduction: true,
            use_pointwise_preprune: false,
            tolerances: Tolerances::default(),
            exhaustive_cap: 20_000,
            trace: false,
        }
    }
}

impl DpConfig {
    pub fn for_variant(variant: Variant) -> Self {
        DpConfig {
            variant,
            ..Default::default()
        }
    }
}

/// One scaled set `V'_{a,o}` after seeding.
#[derive(Debug, Clone)]
pub struct ScaledSetTrace {
    pub action: usize,
    pub observation: usize,
    pub set: VectorSet,
}

/// Inputs and output of one cross-sum call.
#[derive(Debug, Clone)]
pub struct CspTrace {
    pub w: VectorSet,
    pub x: VectorSet,
    pub output: CspOutput,
}

#[derive(Debug, Clone, Default)]
pub struct DpTrace {
    pub scaled_sets: Vec<ScaledSetTrace>,
    pub csp_calls: Vec<CspTrace>,
    /// `W_a` with the graph handed to neighbor detection (absent for actions not built).
    pub action_sets: Vec<Option<VectorSet>>,
    pub union_sources: Vec<Vec<ActionSource>>,
}

#[derive(Debug, Clone, Default)]
pub struct DpStats {
    /// Support-point LPs for scaled sets (and filtering `V` if it arrived without support points).
    pub seeding: PruneStats,
    /// Filtering each `V_{a,o}` before the baseline cross sums.
    pub set_prune: PruneStats,
    pub csp: PruneStats,
    /// Filtering the union of the `W_a`.
    pub union_prune: PruneStats,
    pub detection: DetectionStats,
    pub exhaustive: PruneStats,
    pub csp_calls: Vec<CspCallRecord>,
    /// Number of incremental-pruning runs.
    pub ip_call_count: usize,
    pub vectors_in: usize,
    pub union_size: usize,
    pub vectors_out: usize,
    pub wall_time: Duration,
    pub trace: Option<DpTrace>,
}

impl DpStats {
    pub fn total_lps(&self) -> usize {
        self.seeding.lp_count
            + self.set_prune.lp_count
            + self.csp.lp_count
            + self.union_prune.lp_count
            + self.detection.lp_count()
            + self.exhaustive.lp_count
    }

    pub fn total_rows(&self) -> usize {
        self.seeding.total_constraint_rows
            + self.set_prune.total_constraint_rows
            + self.csp.total_constraint_rows
            + self.union_prune.total_constraint_rows
            + self.detection.total_rows
            + self.exhaustive.total_constraint_rows
    }
}

fn transform(v: &VectorSet, f: impl Fn(&AlphaVector) -> Vec<f64>) -> Vec<AlphaVector> {
    v.iter()
        .enumerate()
        .map(|(idx, m)| AlphaVector {
            values: f(m),
            action: None,
            parents: vec![idx],
            support: None,
        })
        .collect()
}

/// `V_{a,o} = { β(s) = λ Σ_{s₊} α(s₊) P(o|s₊,a) P(s₊|s,a) }`.
pub fn build_voa(v: &VectorSet, model: &PomdpModel, a: usize, o: usize) -> Result<VectorSet> {
    let n = model.num_states();
    check_dim(v, n)?;
    let lambda = model.discount();
    let members = transform(v, |m| {
        (0..n)
            .map(|s| {
                lambda
                    * (0..n)
                        .map(|t| {
                            m.values[t] * model.observation(a, t, o) * model.transition(a, s, t)
                        })
                        .sum::<f64>()
            })
            .collect()
    });
    VectorSet::canonical(n, members)
}

/// `V'_{a,o} = { α'(s₊) = α(s₊) P(o|s₊,a) }` with, for each member, the
/// indices of `V` mapped onto it.
pub fn build_voa_prime(
    v: &VectorSet,
    model: &PomdpModel,
    a: usize,
    o: usize,
) -> Result<(VectorSet, Vec<Vec<usize>>)> {
    let n = model.num_states();
    check_dim(v, n)?;
    let members = transform(v, |m| {
        (0..n)
            .map(|t| m.values[t] * model.observation(a, t, o))
            .collect()
    });
    VectorSet::canonical_with_sources(n, members)
}

fn check_dim(v: &VectorSet, n: usize) -> Result<()> {
    if v.dim() != n {
        return Err(SolveError::Dimension {
            expected: n,
            found: v.dim(),
        });
    }
    Ok(())
}

fn all_zero(set: &VectorSet) -> bool {
    set.iter().all(|m| m.values.iter().all(|x| *x == 0.0))
}

/// Support points and neighbor graph for `V'_{a,o}`, derived from those of
/// `V`. Members whose witness margin is not above the positive tolerance
/// are removed, so the result is parsimonious at that tolerance; the
/// returned `sources` are filtered to match.
///
/// A belief maps as `b' ∝ b / P(o|·,a)` on the face where `P(o|s,a) > 0`.
/// The mapped point is kept where the member beats every other by more
/// than the positive tolerance; the rest are settled by an LP on that face
/// against surviving neighbors.
pub fn seed_support_points(
    v: &VectorSet,
    vprime: &VectorSet,
    sources: &[Vec<usize>],
    column: &[f64],
    pruner: &Pruner<'_>,
) -> Result<(VectorSet, Vec<Vec<usize>>, PruneStats)> {
    let n = v.dim();
    let tol = pruner.tolerances();
    let mut stats = PruneStats {
        vectors_in: vprime.len(),
        ..Default::default()
    };
    let g = inherit_scaling(&v.graph_or_complete(), sources);
    let positive = column.iter().all(|c| *c > 0.0);
    let mut supports: Vec<Option<SupportPoint>> = Vec::with_capacity(vprime.len());

    for (k, src) in sources.iter().enumerate() {
        let origin = v.get(src[0]);
        let sp = origin.support.as_ref().ok_or_else(|| {
            SolveError::Precondition(format!(
                "value-function vector {} has no support point",
                src[0]
            ))
        })?;
        let weights: Vec<f64> = sp
            .belief
            .as_slice()
            .iter()
            .zip(column)
            .map(|(b, c)| if *c > 0.0 { b / c } else { 0.0 })
            .collect();
        let mapped = Belief::from_weights(&weights);
        let seeded = match mapped {
            Some(b) => {
                let mine = vprime.get(k).dot(b.as_slice());
                let clear = (0..vprime.len())
                    .filter(|&j| j != k)
                    .all(|j| mine > vprime.get(j).dot(b.as_slice()) + tol.positive);
                match (clear, positive) {
                    (true, true) => Some(SupportPoint {
                        belief: b,
                        kind: sp.kind,
                    }),
                    (true, false) => Some(SupportPoint::witness(b)),
                    (false, _) => None,
                }
            }
            None => None,
        };
        supports.push(seeded);
    }

    let mut g = g;
    let mut keep = vec![true; vprime.len()];
    for k in 0..vprime.len() {
        if supports[k].is_some() {
            continue;
        }
        let mut lp = LinearProgram::maximize_slack(n);
        for (s, c) in column.iter().enumerate() {
            if *c <= 0.0 {
                lp.fix_zero(s);
            }
        }
        let around: Vec<usize> = g.neighbors_of(k).into_iter().filter(|&j| keep[j]).collect();
        for &j in &around {
            lp.push_dominance(&vprime.get(k).values, &vprime.get(j).values, true);
        }
        let point = if lp.slack_row_count() == 0 {
            Belief::from_weights(
                &column
                    .iter()
                    .map(|c| if *c > 0.0 { 1.0 } else { 0.0 })
                    .collect::<Vec<_>>(),
            )
        } else {
            stats.lp_count += 1;
            stats.total_constraint_rows += lp.row_count();
            pruner.solve_raw(&lp)?.positive_point(tol.positive).cloned()
        };
        match point {
            Some(b) => supports[k] = Some(SupportPoint::witness(b)),
            None => {
                // Removing a cell can make its neighbors adjacent.
                keep[k] = false;
                for (i, &p) in around.iter().enumerate() {
                    for &q in &around[i + 1..] {
                        g.clear_mark(p, q);
                    }
                }
            }
        }
    }

    let kept: Vec<usize> = (0..vprime.len()).filter(|&k| keep[k]).collect();
    let members = kept
        .iter()
        .map(|&k| {
            let mut m = vprime.get(k).clone();
            m.support = supports[k].clone();
            m
        })
        .collect();
    let graph = g.remap(&kept.iter().map(|&k| vec![k]).collect::<Vec<_>>());
    let out = VectorSet::from_members(n, members)?.with_graph(graph);
    let out_sources = kept.iter().map(|&k| sources[k].clone()).collect();
    stats.vectors_out = out.len();
    Ok((out, out_sources, stats))
}

/// Partition of actions into groups with equal observation tables
/// (entrywise within `tol`), in order of first appearance.
pub fn group_actions_by_observation_model(model: &PomdpModel, tol: f64) -> Vec<Vec<usize>> {
    let n = model.num_states();
    let m = model.num_observations();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for a in 0..model.num_actions() {
        let same = |rep: usize| {
            (0..n).all(|s| {
                (0..m).all(|o| {
                    (model.observation(a, s, o) - model.observation(rep, s, o)).abs() <= tol
                })
            })
        };
        match groups.iter_mut().find(|g| same(g[0])) {
            Some(g) => g.push(a),
            None => groups.push(vec![a]),
        }
    }
    groups
}

/// One value-iteration step. `v` must be a parsimonious set; the improved
/// variant uses its support points and graph when present and recomputes
/// them otherwise. The output is parsimonious and canonical, each member
/// tagged with its action and carrying a support point; the improved
/// variant also attaches the exact neighbor graph.
pub fn dp_update(
    v: &VectorSet,
    model: &PomdpModel,
    cfg: &DpConfig,
    lp: &dyn LpSolver,
) -> Result<(VectorSet, DpStats)> {
    let start = Instant::now();
    check_dim(v, model.num_states())?;
    if v.is_empty() {
        return Err(SolveError::Precondition(
            "value function has no vectors".into(),
        ));
    }
    let pruner = Pruner::with_tolerances(lp, cfg.tolerances);
    let mut stats = DpStats {
        vectors_in: v.len(),
        trace: cfg.trace.then(DpTrace::default),
        ..Default::default()
    };
    let out = match cfg.variant {
        Variant::ExhaustiveOracle => {
            let (set, ps) = exhaustive_dp_update(v, model, cfg.exhaustive_cap, &pruner)?;
            stats.exhaustive = ps;
            stats.union_size = set.len();
            set
        }
        Variant::PlainIp | Variant::RestrictedRegionIp => {
            baseline_update(v, model, cfg, &pruner, &mut stats)?
        }
        Variant::Improved => improved_update(v, model, cfg, &pruner, &mut stats)?,
    };
    stats.vectors_out = out.len();
    stats.wall_time = start.elapsed();
    Ok((out, stats))
}

fn baseline_update(
    v: &VectorSet,
    model: &PomdpModel,
    cfg: &DpConfig,
    pruner: &Pruner<'_>,
    stats: &mut DpStats,
) -> Result<VectorSet> {
    let n = model.num_states();
    let variant = if cfg.variant == Variant::PlainIp {
        CspVariant::Plain
    } else {
        CspVariant::RestrictedRegion
    };
    let mut action_sets = Vec::with_capacity(model.num_actions());
    for a in 0..model.num_actions() {
        let mut sets = Vec::new();
        for o in 0..model.num_observations() {
            let mut voa = build_voa(v, model, a, o)?;
            if all_zero(&voa) {
                continue;
            }
            if cfg.use_pointwise_preprune {
                voa = voa.pointwise_dominance_prune();
            }
            let (pruned, ps) = pruner.lark_prune(&voa)?;
            stats.set_prune += &ps;
            sets.push(pruned);
        }
        let y = fold(&sets, n, variant, pruner, stats)?;
        action_sets.push(add_reward(&y, model, a, false)?.0);
    }
    let (pc, _, _) = union_cover(&action_sets, pruner, stats)?;
    Ok(pc)
}

fn improved_update(
    v: &VectorSet,
    model: &PomdpModel,
    cfg: &DpConfig,
    pruner: &Pruner<'_>,
    stats: &mut DpStats,
) -> Result<VectorSet> {
    let n = model.num_states();
    let mut owned;
    let mut v = v;
    if v.iter().any(|m| m.support.is_none()) {
        let (pruned, ps) = pruner.lark_prune(v)?;
        stats.seeding += &ps;
        owned = pruned;
        if let Some(g) = v.graph().filter(|_| owned.len() == v.len()) {
            owned.set_graph(g.clone());
        }
        v = &owned;
    }

    let groups = if cfg.use_ip_reduction {
        group_actions_by_observation_model(model, cfg.tolerances.table_equality)
    } else {
        (0..model.num_actions()).map(|a| vec![a]).collect()
    };
    let mut action_sets: Vec<Option<VectorSet>> = vec![None; model.num_actions()];
    for group in &groups {
        let rep = group[0];
        let mut sets = Vec::new();
        for o in 0..model.num_observations() {
            let (vp, sources) = build_voa_prime(v, model, rep, o)?;
            if all_zero(&vp) {
                continue;
            }
            let (vp, sources) = if cfg.use_pointwise_preprune {
                dominance_filter(vp, sources)?
            } else {
                (vp, sources)
            };
            let column = model.observation_column(rep, o);
            let (seeded, _, ps) = seed_support_points(v, &vp, &sources, &column, pruner)?;
            stats.seeding += &ps;
            if let Some(t) = stats.trace.as_mut() {
                t.scaled_sets.push(ScaledSetTrace {
                    action: rep,
                    observation: o,
                    set: seeded.clone(),
                });
            }
            sets.push(seeded);
        }
        let y = fold(&sets, n, CspVariant::Neighbor(cfg.lp_mode), pruner, stats)?;
        for &a in group {
            let (w, sources) = add_reward(&y, model, a, true)?;
            let w = w.with_graph(inherit_affine(&y.graph_or_complete(), &sources));
            action_sets[a] = Some(w);
        }
    }
    let sets: Vec<VectorSet> = action_sets
        .iter()
        .map(|s| s.clone().expect("every action built"))
        .collect();
    let (mut pc, sources, slivers) = union_cover(&sets, pruner, stats)?;
    // A dropped sliver may have been the only thing separating two members
    // of its W_a; those marks no longer hold in the union.
    let mut sets = sets;
    for src in slivers {
        let set = &mut sets[src.action];
        let mut g = set.graph_or_complete();
        let mut around = g.neighbors_of(src.index);
        around.push(src.index);
        for (k, &p) in around.iter().enumerate() {
            for &q in &around[k + 1..] {
                g.clear_mark(p, q);
            }
        }
        set.set_graph(g);
    }
    let (graph, det) = detect_neighbors_in_union(&pc, &sets, &sources, pruner)?;
    stats.detection = det;
    pc.set_graph(graph);
    if let Some(t) = stats.trace.as_mut() {
        t.action_sets = sets.into_iter().map(Some).collect();
        t.union_sources = sources;
    }
    Ok(pc)
}

/// Removes componentwise-dominated members, keeping `sources` aligned.
fn dominance_filter(
    vp: VectorSet,
    sources: Vec<Vec<usize>>,
) -> Result<(VectorSet, Vec<Vec<usize>>)> {
    let n = vp.dim();
    let keep: Vec<usize> = (0..vp.len())
        .filter(|&i| {
            !(0..vp.len()).any(|j| {
                j != i
                    && vp.get(j).dominates(vp.get(i))
                    && (vp.get(i).max_abs_diff(vp.get(j)) > 0.0 || j < i)
            })
        })
        .collect();
    let members = keep.iter().map(|&i| vp.get(i).clone()).collect();
    Ok((
        VectorSet::from_members(n, members)?,
        keep.iter().map(|&i| sources[i].clone()).collect(),
    ))
}

fn fold(
    sets: &[VectorSet],
    n: usize,
    variant: CspVariant,
    pruner: &Pruner<'_>,
    stats: &mut DpStats,
) -> Result<VectorSet> {
    stats.ip_call_count += 1;
    let Some((first, rest)) = sets.split_first() else {
        return Ok(VectorSet::zero(n));
    };
    let mut y = first.clone();
    for x in rest {
        let out = pruner.cross_sum_prune(&y, x, variant)?;
        stats.csp += &out.stats;
        stats.csp_calls.push(out.record);
        if let Some(t) = stats.trace.as_mut() {
            t.csp_calls.push(CspTrace {
                w: y.clone(),
                x: x.clone(),
                output: out.clone(),
            });
        }
        y = out.set;
    }
    Ok(y)
}

/// `W_a = {r_a} ⊕ Y`, where `Y` is first mapped through `λ·P(s₊|s,a)` when
/// it lives in the scaled space. Returns the canonical set and the members
/// of `Y` behind each output member.
fn add_reward(
    y: &VectorSet,
    model: &PomdpModel,
    a: usize,
    project: bool,
) -> Result<(VectorSet, Vec<Vec<usize>>)> {
    let n = model.num_states();
    let r = model.reward_vector(a);
    let lambda = model.discount();
    let members = y
        .iter()
        .map(|m| {
            let values = (0..n)
                .map(|s| {
                    let future = if project {
                        lambda
                            * (0..n)
                                .map(|t| m.values[t] * model.transition(a, s, t))
                                .sum::<f64>()
                    } else {
                        m.values[s]
                    };
                    r[s] + future
                })
                .collect();
            AlphaVector {
                values,
                action: Some(a),
                parents: m.parents.clone(),
                support: None,
            }
        })
        .collect();
    VectorSet::canonical_with_sources(n, members)
}

/// `PC(∪_a W_a)` with support points, where each member came from, and
/// where the near-miss rejections came from.
fn union_cover(
    sets: &[VectorSet],
    pruner: &Pruner<'_>,
    stats: &mut DpStats,
) -> Result<(VectorSet, Vec<Vec<ActionSource>>, Vec<ActionSource>)> {
    let n = sets[0].dim();
    let mut flat = Vec::new();
    let mut origin = Vec::new();
    for (a, set) in sets.iter().enumerate() {
        for (index, m) in set.iter().enumerate() {
            let mut m = m.clone();
            m.support = None;
            flat.push(m);
            origin.push(ActionSource { action: a, index });
        }
    }
    let (union, usrc) = VectorSet::canonical_with_sources(n, flat)?;
    stats.union_size = union.len();
    let lark = pruner.lark_indexed(&union)?;
    stats.union_prune += &lark.stats;
    let kept = lark.kept;
    let mut members = Vec::with_capacity(kept.len());
    let mut sources = Vec::with_capacity(kept.len());
    for (i, sp) in kept {
        let mut m = union.get(i).clone();
        m.support = Some(sp);
        members.push(m);
        sources.push(usrc[i].iter().map(|&f| origin[f]).collect());
    }
    let slivers = lark
        .near_misses
        .iter()
        .flat_map(|&i| usrc[i].iter().map(|&f| origin[f]))
        .collect();
    Ok((VectorSet::from_members(n, members)?, sources, slivers))
}
