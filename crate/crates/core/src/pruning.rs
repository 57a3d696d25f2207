//! Parsimonious coverings: Lark filtering and cross-sum pruning.
//!
//! Three cross-sum strategies share one interface:
//!
//! * [`CspVariant::Plain`] tests every pair `(α, β)` with an LP over all of
//!   `W` and `X`.
//! * [`CspVariant::RestrictedRegion`] tests one `α` at a time, restricting
//!   `β` to the part of the simplex where `α` is best and accepting the
//!   winner at each certified point.
//! * [`CspVariant::Neighbor`] walks the neighbor graph of `X` from the `β`
//!   that wins at `α`'s support point, and only builds LP rows for neighbors.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::ops::AddAssign;

use crate::error::{Result, SolveError};
use crate::lp::{LinearProgram, LpOutcome, LpSolver};
use crate::model::Belief;
use crate::neighbors::{inherit_cross_sum, release_near_misses};
use crate::tolerance::Tolerances;
use crate::vectorset::{
    lex_cmp, max_abs_diff, AlphaVector, SupportKind, SupportPoint, VectorSet, DUPLICATE_TOLERANCE,
};

/// How the intersection LP of the neighbor-restricted cross sum is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LpMode {
    /// Rows against every other member of both sets.
    Full,
    /// Rows against graph neighbors only, slack on both sides.
    Reduced,
    /// Rows against graph neighbors, slack only on the `W` side.
    #[default]
    Reformulated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CspVariant {
    Plain,
    RestrictedRegion,
    Neighbor(LpMode),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PruneStats {
    pub lp_count: usize,
    pub total_constraint_rows: usize,
    pub vectors_in: usize,
    pub vectors_out: usize,
    pub lps_saved_by_shortcut: usize,
    pub harvested_without_lp: usize,
}

impl AddAssign<&PruneStats> for PruneStats {
    fn add_assign(&mut self, rhs: &PruneStats) {
        self.lp_count += rhs.lp_count;
        self.total_constraint_rows += rhs.total_constraint_rows;
        self.vectors_in += rhs.vectors_in;
        self.vectors_out += rhs.vectors_out;
        self.lps_saved_by_shortcut += rhs.lps_saved_by_shortcut;
        self.harvested_without_lp += rhs.harvested_without_lp;
    }
}

/// Size and LP load of one cross-sum call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CspCallRecord {
    pub w_len: usize,
    pub x_len: usize,
    pub dim: usize,
    pub lp_count: usize,
    pub total_rows: usize,
}

impl CspCallRecord {
    /// Rows of the pairwise program over complete sets: `|W| + |X| + n - 1`.
    pub fn plain_row_bound(&self) -> usize {
        self.w_len + self.x_len + self.dim - 1
    }

    pub fn mean_rows(&self) -> Option<f64> {
        (self.lp_count > 0).then(|| self.total_rows as f64 / self.lp_count as f64)
    }
}

#[derive(Debug, Clone)]
pub struct CspOutput {
    /// `PC(W ⊕ X)` in canonical order, each member with a support point.
    pub set: VectorSet,
    /// `(i, j)` for each member: it is `W[i] + X[j]`.
    pub pairs: Vec<(usize, usize)>,
    /// Members accepted without their own LP.
    pub harvested: Vec<usize>,
    /// Members of `X` found to have an empty witness region.
    pub pruned_from_x: Vec<usize>,
    pub stats: PruneStats,
    pub record: CspCallRecord,
}

#[derive(Debug, Clone)]
pub struct LarkResult {
    /// Kept indices in ascending order, with support points.
    pub kept: Vec<(usize, SupportPoint)>,
    /// Rejected indices whose margin was within the neighbor tolerance of
    /// zero: slivers whose removal can make other vectors adjacent.
    pub near_misses: Vec<usize>,
    pub stats: PruneStats,
}

/// LP access plus the shared tolerances.
#[derive(Clone, Copy)]
pub struct Pruner<'a> {
    lp: &'a dyn LpSolver,
    tol: Tolerances,
}

impl<'a> Pruner<'a> {
    pub fn new(lp: &'a dyn LpSolver) -> Self {
        Pruner {
            lp,
            tol: Tolerances::default(),
        }
    }

    pub fn with_tolerances(lp: &'a dyn LpSolver, tol: Tolerances) -> Self {
        Pruner { lp, tol }
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tol
    }

    pub fn solver(&self) -> &'a dyn LpSolver {
        self.lp
    }

    /// Solves without touching any statistics.
    pub fn solve_raw(&self, lp: &LinearProgram) -> Result<LpOutcome> {
        Ok(self.lp.solve(lp)?)
    }

    fn solve(&self, lp: &LinearProgram, stats: &mut PruneStats) -> Result<LpOutcome> {
        stats.lp_count += 1;
        stats.total_constraint_rows += lp.row_count();
        self.solve_raw(lp)
    }

    /// `PC(W)` by Lark's filtering. Each kept member gets a support point:
    /// a witness point when it is strictly best there within the output.
    pub fn lark_prune(&self, w: &VectorSet) -> Result<(VectorSet, PruneStats)> {
        let canon = VectorSet::canonical(w.dim(), w.members().to_vec())?;
        let LarkResult { kept, stats, .. } = self.lark_indexed(&canon)?;
        let members = kept
            .into_iter()
            .map(|(i, sp)| {
                let mut m = canon.get(i).clone();
                m.support = Some(sp);
                m
            })
            .collect();
        Ok((VectorSet::from_members(w.dim(), members)?, stats))
    }

    /// Lark's filtering on a canonical, duplicate-free set.
    pub fn lark_indexed(&self, w: &VectorSet) -> Result<LarkResult> {
        let k = w.len();
        if k == 0 {
            return Err(SolveError::Precondition(
                "cannot prune an empty vector set".into(),
            ));
        }
        let n = w.dim();
        let mut stats = PruneStats {
            vectors_in: k,
            ..Default::default()
        };
        #[derive(Clone, Copy, PartialEq)]
        enum State {
            Undecided,
            Accepted,
            Rejected,
        }
        let mut state = vec![State::Undecided; k];
        let mut near_misses = Vec::new();
        let mut accepted: Vec<usize> = Vec::new();
        let mut points: BTreeMap<usize, Belief> = BTreeMap::new();

        let seed_point = Belief::corner(n, 0);
        let all: Vec<usize> = (0..k).collect();
        let seed = best_at(w.members(), &all, seed_point.as_slice(), self.tol.tie);
        state[seed] = State::Accepted;
        accepted.push(seed);
        points.insert(seed, seed_point);

        for i in 0..k {
            while state[i] == State::Undecided {
                let mut lp = LinearProgram::maximize_slack(n);
                for &a in &accepted {
                    lp.push_dominance(&w.get(i).values, &w.get(a).values, true);
                }
                let outcome = self.solve(&lp, &mut stats)?;
                match outcome.positive_point(self.tol.positive) {
                    Some(b) => {
                        let pool: Vec<usize> =
                            (0..k).filter(|&j| state[j] == State::Undecided).collect();
                        let best = best_at(w.members(), &pool, b.as_slice(), self.tol.tie);
                        state[best] = State::Accepted;
                        accepted.push(best);
                        points.insert(best, b.clone());
                    }
                    None => {
                        if outcome.value().is_some_and(|v| v > -self.tol.neighbor) {
                            near_misses.push(i);
                        }
                        state[i] = State::Rejected;
                    }
                }
            }
        }

        accepted.sort_unstable();
        // Acceptance above was judged against a growing subset. Re-check each
        // member against the final set so borderline vectors do not depend on
        // the order of discovery; the new maximizers become support points.
        if accepted.len() > 1 {
            let mut keep = vec![true; accepted.len()];
            for p in 0..accepted.len() {
                let i = accepted[p];
                let mut lp = LinearProgram::maximize_slack(n);
                for (q, &j) in accepted.iter().enumerate() {
                    if q != p && keep[q] {
                        lp.push_dominance(&w.get(i).values, &w.get(j).values, true);
                    }
                }
                if lp.slack_row_count() == 0 {
                    continue;
                }
                match self
                    .solve(&lp, &mut stats)?
                    .positive_point(self.tol.positive)
                {
                    Some(b) => {
                        points.insert(i, b.clone());
                    }
                    None => {
                        keep[p] = false;
                        near_misses.push(i);
                    }
                }
            }
            let mut q = 0;
            accepted.retain(|_| {
                q += 1;
                keep[q - 1]
            });
        }
        let kept: Vec<&AlphaVector> = accepted.iter().map(|&i| w.get(i)).collect();
        let out = accepted
            .iter()
            .map(|&i| {
                let b = points
                    .remove(&i)
                    .expect("every accepted vector has a point");
                let kind = classify(w.get(i), &kept, b.as_slice(), self.tol.tie);
                (i, SupportPoint { belief: b, kind })
            })
            .collect::<Vec<_>>();
        stats.vectors_out = out.len();
        near_misses.sort_unstable();
        Ok(LarkResult {
            kept: out,
            near_misses,
            stats,
        })
    }

    /// Pairwise cross-sum pruning. `W` and `X` must be parsimonious; the
    /// restricted-region and neighbor strategies also need support points
    /// on `W`, and the neighbor strategy uses the graphs of both.
    pub fn cross_sum_prune(
        &self,
        w: &VectorSet,
        x: &VectorSet,
        variant: CspVariant,
    ) -> Result<CspOutput> {
        if w.dim() != x.dim() {
            return Err(SolveError::Dimension {
                expected: w.dim(),
                found: x.dim(),
            });
        }
        if w.is_empty() || x.is_empty() {
            return Err(SolveError::Precondition("cross sum of an empty set".into()));
        }
        let mut out = match variant {
            CspVariant::Plain => self.csp_plain(w, x)?,
            CspVariant::RestrictedRegion => self.csp_restricted_region(w, x)?,
            CspVariant::Neighbor(mode) => self.csp_neighbor(w, x, mode)?,
        };
        out.stats.vectors_in = w.len() * x.len();
        out.stats.vectors_out = out.set.len();
        out.record = CspCallRecord {
            w_len: w.len(),
            x_len: x.len(),
            dim: w.dim(),
            lp_count: out.stats.lp_count,
            total_rows: out.stats.total_constraint_rows,
        };
        Ok(out)
    }

    fn csp_plain(&self, w: &VectorSet, x: &VectorSet) -> Result<CspOutput> {
        let n = w.dim();
        let mut stats = PruneStats::default();
        let mut accepted = Accepted::new();
        for i in 0..w.len() {
            for j in 0..x.len() {
                let mut lp = LinearProgram::maximize_slack(n);
                for k in (0..w.len()).filter(|&k| k != i) {
                    lp.push_dominance(&w.get(i).values, &w.get(k).values, true);
                }
                for l in (0..x.len()).filter(|&l| l != j) {
                    lp.push_dominance(&x.get(j).values, &x.get(l).values, true);
                }
                if lp.slack_row_count() == 0 {
                    accepted.insert((i, j), default_support(w.get(i)), false);
                    continue;
                }
                let outcome = self.solve(&lp, &mut stats)?;
                if let Some(b) = outcome.positive_point(self.tol.positive) {
                    accepted.insert((i, j), SupportPoint::witness(b.clone()), false);
                }
            }
        }
        accepted.finish(w, x, stats, Vec::new(), None, self.tol.collinear)
    }

    fn csp_restricted_region(&self, w: &VectorSet, x: &VectorSet) -> Result<CspOutput> {
        let n = w.dim();
        let mut stats = PruneStats::default();
        let mut accepted = Accepted::new();
        let all_x: Vec<usize> = (0..x.len()).collect();
        for i in 0..w.len() {
            let alpha = w.get(i);
            let mut decided = vec![false; x.len()];
            let mut chosen: Vec<usize> = Vec::new();

            if let Some(sp) = alpha.support.as_ref().filter(|sp| sp.is_witness()) {
                let b = sp.belief.as_slice();
                let ties = ties_at(x.members(), &all_x, b, self.tol.tie);
                if ties.len() == 1 {
                    let j = ties[0];
                    decided[j] = true;
                    chosen.push(j);
                    accepted.insert((i, j), sp.clone(), false);
                    stats.lps_saved_by_shortcut += 1;
                }
            }

            for j in 0..x.len() {
                while !decided[j] {
                    let mut lp = LinearProgram::maximize_slack(n);
                    for k in (0..w.len()).filter(|&k| k != i) {
                        lp.push_dominance(&alpha.values, &w.get(k).values, true);
                    }
                    for &c in &chosen {
                        lp.push_dominance(&x.get(j).values, &x.get(c).values, true);
                    }
                    let point = if lp.slack_row_count() == 0 {
                        Some(default_support(alpha).belief)
                    } else {
                        let outcome = self.solve(&lp, &mut stats)?;
                        outcome.positive_point(self.tol.positive).cloned()
                    };
                    match point {
                        Some(b) => {
                            let ties = ties_at(x.members(), &all_x, b.as_slice(), self.tol.tie);
                            let open: Vec<usize> =
                                ties.iter().copied().filter(|&t| !decided[t]).collect();
                            let pick = if open.is_empty() {
                                j
                            } else {
                                lex_max(x.members(), &open)
                            };
                            let kind = if ties.len() == 1 {
                                SupportKind::Witness
                            } else {
                                SupportKind::Boundary
                            };
                            decided[pick] = true;
                            chosen.push(pick);
                            accepted.insert((i, pick), SupportPoint { belief: b, kind }, false);
                        }
                        None => decided[j] = true,
                    }
                }
            }
        }
        accepted.finish(w, x, stats, Vec::new(), None, self.tol.collinear)
    }

    fn csp_neighbor(&self, w: &VectorSet, x: &VectorSet, mode: LpMode) -> Result<CspOutput> {
        let n = w.dim();
        let tol = self.tol;
        if let Some(i) = w.iter().position(|m| m.support.is_none()) {
            return Err(SolveError::Precondition(format!(
                "neighbor cross sum needs support points on W (member {i} has none)"
            )));
        }
        let gw = w.graph_or_complete();
        let gx = x.graph_or_complete();
        let mut stats = PruneStats::default();
        let mut accepted = Accepted::new();
        let mut alive = vec![true; x.len()];
        let mut pruned_from_x = Vec::new();
        let mut pre_accepted: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); w.len()];
        let mut near_misses = Vec::new();

        for i in 0..w.len() {
            let alpha = w.get(i);
            let support = alpha.support.clone().expect("checked above");
            let live: Vec<usize> = (0..x.len()).filter(|&j| alive[j]).collect();
            let mut queue: VecDeque<usize> =
                ties_at(x.members(), &live, support.belief.as_slice(), tol.tie).into();
            queue.extend(pre_accepted[i].iter().copied());
            let mut visited: BTreeSet<usize> = queue.iter().copied().collect();

            while let Some(j) = queue.pop_front() {
                if !alive[j] {
                    continue;
                }
                let expand = if accepted.contains(i, j) {
                    true
                } else {
                    let beta = x.get(j);
                    let alpha_rows: Vec<usize> = match mode {
                        LpMode::Full => (0..w.len()).filter(|&k| k != i).collect(),
                        _ => gw.neighbors_of(i),
                    };
                    let beta_rows: Vec<usize> = match mode {
                        LpMode::Full => (0..x.len()).filter(|&l| l != j && alive[l]).collect(),
                        _ => gx
                            .neighbors_of(j)
                            .into_iter()
                            .filter(|&l| alive[l])
                            .collect(),
                    };
                    let mut lp = LinearProgram::maximize_slack(n);
                    for &k in &alpha_rows {
                        lp.push_dominance(&alpha.values, &w.get(k).values, true);
                    }
                    let beta_slack = mode != LpMode::Reformulated;
                    for &l in &beta_rows {
                        lp.push_dominance(&beta.values, &x.get(l).values, beta_slack);
                    }
                    if lp.inequality_rows().is_empty() {
                        accepted.insert((i, j), support.clone(), false);
                        true
                    } else {
                        let outcome = self.solve(&lp, &mut stats)?;
                        match outcome {
                            LpOutcome::Infeasible if mode == LpMode::Reformulated => {
                                alive[j] = false;
                                pruned_from_x.push(j);
                                false
                            }
                            LpOutcome::Infeasible => false,
                            _ => {
                                let b = outcome.point().expect("feasible").clone();
                                if let Some(b) = outcome.positive_point(tol.positive).cloned() {
                                    let mut kind = SupportKind::Witness;
                                    if mode == LpMode::Reformulated {
                                        let bv = beta.dot(b.as_slice());
                                        for l in beta_rows.iter().copied() {
                                            if (bv - x.get(l).dot(b.as_slice())).abs() > tol.tie {
                                                continue;
                                            }
                                            kind = SupportKind::Boundary;
                                            if !accepted.contains(i, l) {
                                                accepted.insert(
                                                    (i, l),
                                                    SupportPoint::boundary(b.clone()),
                                                    true,
                                                );
                                                stats.harvested_without_lp += 1;
                                                if visited.insert(l) {
                                                    queue.push_back(l);
                                                }
                                            }
                                        }
                                    }
                                    accepted.insert(
                                        (i, j),
                                        SupportPoint { belief: b, kind },
                                        false,
                                    );
                                    true
                                } else {
                                    if mode == LpMode::Reformulated {
                                        self.harvest_elsewhere(
                                            w,
                                            x,
                                            j,
                                            &beta_rows,
                                            &b,
                                            i,
                                            &mut accepted,
                                            &mut pre_accepted,
                                            &mut stats,
                                        );
                                    }
                                    // Touching regions still connect the walk.
                                    let near = outcome.value().is_some_and(|v| v > -tol.neighbor);
                                    if near {
                                        near_misses.push((i, j));
                                    }
                                    near
                                }
                            }
                        }
                    }
                };
                if expand {
                    for l in gx.neighbors_of(j) {
                        if alive[l] && visited.insert(l) {
                            queue.push_back(l);
                        }
                    }
                }
            }
        }
        accepted.finish(
            w,
            x,
            stats,
            pruned_from_x,
            Some(&near_misses),
            tol.collinear,
        )
    }

    /// A non-positive reformulated LP still returns a point `b` on the
    /// closed region of `β_j`. If another `α'` is strictly best in `W` at
    /// `b`, then `α' + β_j` (and `α' + γ` for every neighbor `γ` tied with
    /// `β_j` at `b`) belongs to the covering.
    #[allow(clippy::too_many_arguments)]
    fn harvest_elsewhere(
        &self,
        w: &VectorSet,
        x: &VectorSet,
        j: usize,
        beta_rows: &[usize],
        b: &Belief,
        current: usize,
        accepted: &mut Accepted,
        pre_accepted: &mut [BTreeSet<usize>],
        stats: &mut PruneStats,
    ) {
        let tol = self.tol;
        let bs = b.as_slice();
        let beta_value = x.get(j).dot(bs);
        if beta_rows
            .iter()
            .any(|&l| x.get(l).dot(bs) > beta_value + tol.tie)
        {
            return;
        }
        let scores: Vec<f64> = w.iter().map(|m| m.dot(bs)).collect();
        let best = (0..w.len())
            .max_by(|&p, &q| scores[p].total_cmp(&scores[q]))
            .expect("W nonempty");
        if best == current {
            return;
        }
        let margin_ok = (0..w.len()).all(|k| k == best || scores[best] > scores[k] + tol.positive);
        if !margin_ok {
            return;
        }
        let mut targets = vec![j];
        targets.extend(
            beta_rows
                .iter()
                .copied()
                .filter(|&l| (x.get(l).dot(bs) - beta_value).abs() <= tol.tie),
        );
        for t in targets {
            if !accepted.contains(best, t) {
                accepted.insert((best, t), SupportPoint::boundary(b.clone()), true);
                stats.harvested_without_lp += 1;
                pre_accepted[best].insert(t);
            }
        }
    }

    /// Left fold of cross-sum pruning over `sets` in order. A single set is
    /// simply Lark-pruned.
    pub fn incremental_prune(
        &self,
        sets: &[VectorSet],
        variant: CspVariant,
    ) -> Result<(VectorSet, PruneStats, Vec<CspCallRecord>)> {
        match sets {
            [] => Err(SolveError::Precondition(
                "incremental pruning of zero sets".into(),
            )),
            [only] => {
                let (set, stats) = self.lark_prune(only)?;
                Ok((set, stats, Vec::new()))
            }
            [first, rest @ ..] => {
                let mut y = first.clone();
                let mut stats = PruneStats::default();
                let mut records = Vec::new();
                for v in rest {
                    let out = self.cross_sum_prune(&y, v, variant)?;
                    stats += &out.stats;
                    records.push(out.record);
                    y = out.set;
                }
                Ok((y, stats, records))
            }
        }
    }
}

/// Pairs accepted into a cross-sum covering, keyed by `(i, j)`.
struct Accepted {
    map: BTreeMap<(usize, usize), (SupportPoint, bool)>,
}

impl Accepted {
    fn new() -> Self {
        Accepted {
            map: BTreeMap::new(),
        }
    }

    fn contains(&self, i: usize, j: usize) -> bool {
        self.map.contains_key(&(i, j))
    }

    fn insert(&mut self, key: (usize, usize), sp: SupportPoint, harvested: bool) {
        self.map.entry(key).or_insert((sp, harvested));
    }

    fn finish(
        self,
        w: &VectorSet,
        x: &VectorSet,
        stats: PruneStats,
        pruned_from_x: Vec<usize>,
        near_misses: Option<&[(usize, usize)]>,
        collinear_tol: f64,
    ) -> Result<CspOutput> {
        let mut members = Vec::with_capacity(self.map.len());
        let mut keys = Vec::with_capacity(self.map.len());
        let mut flags = Vec::with_capacity(self.map.len());
        for ((i, j), (sp, harvested)) in self.map {
            let a = w.get(i);
            let b = x.get(j);
            let mut parents = a.parents.clone();
            parents.extend_from_slice(&b.parents);
            members.push(AlphaVector {
                values: a.values.iter().zip(&b.values).map(|(p, q)| p + q).collect(),
                action: a.action.or(b.action),
                parents,
                support: Some(sp),
            });
            keys.push((i, j));
            flags.push(harvested);
        }
        let (mut set, sources) = VectorSet::canonical_with_sources(w.dim(), members)?;
        let pairs: Vec<(usize, usize)> = sources.iter().map(|s| keys[s[0]]).collect();
        let harvested = sources
            .iter()
            .enumerate()
            .filter(|(_, s)| s.iter().all(|&k| flags[k]))
            .map(|(p, _)| p)
            .collect();
        if let Some(near_misses) = near_misses {
            let mut g = inherit_cross_sum(w, x, &pairs, collinear_tol);
            release_near_misses(
                &mut g,
                &pairs,
                near_misses,
                &w.graph_or_complete(),
                &x.graph_or_complete(),
            );
            set.set_graph(g);
        }
        Ok(CspOutput {
            set,
            pairs,
            harvested,
            pruned_from_x,
            stats,
            record: CspCallRecord {
                w_len: 0,
                x_len: 0,
                dim: w.dim(),
                lp_count: 0,
                total_rows: 0,
            },
        })
    }
}

/// Support point to use when a vector is unconstrained.
fn default_support(alpha: &AlphaVector) -> SupportPoint {
    alpha
        .support
        .clone()
        .unwrap_or_else(|| SupportPoint::witness(Belief::uniform(alpha.dim())))
}

/// Indices among `pool` whose value at `b` is within `tie` of the best.
fn ties_at(members: &[AlphaVector], pool: &[usize], b: &[f64], tie: f64) -> Vec<usize> {
    let best = pool
        .iter()
        .map(|&i| members[i].dot(b))
        .fold(f64::NEG_INFINITY, f64::max);
    pool.iter()
        .copied()
        .filter(|&i| members[i].dot(b) >= best - tie)
        .collect()
}

fn lex_max(members: &[AlphaVector], idx: &[usize]) -> usize {
    *idx.iter()
        .max_by(|&&p, &&q| lex_cmp(&members[p].values, &members[q].values))
        .expect("nonempty")
}

/// The lexicographically largest of the vectors best at `b`.
fn best_at(members: &[AlphaVector], pool: &[usize], b: &[f64], tie: f64) -> usize {
    lex_max(members, &ties_at(members, pool, b, tie))
}

fn classify(alpha: &AlphaVector, set: &[&AlphaVector], b: &[f64], tie: f64) -> SupportKind {
    let v = alpha.dot(b);
    let strict = set
        .iter()
        .filter(|m| max_abs_diff(&m.values, &alpha.values) > DUPLICATE_TOLERANCE)
        .all(|m| v > m.dot(b) + tie);
    if strict {
        SupportKind::Witness
    } else {
        SupportKind::Boundary
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::DenseSimplex;

    fn set(vs: &[&[f64]]) -> VectorSet {
        VectorSet::from_members(
            vs[0].len(),
            vs.iter().map(|v| AlphaVector::new(v.to_vec())).collect(),
        )
        .unwrap()
    }

    #[test]
    fn lark_keeps_crossing_lines() {
        let solver = DenseSimplex::default();
        let p = Pruner::new(&solver);
        let (out, _) = p
            .lark_prune(&set(&[&[1.0, 0.0], &[0.0, 1.0], &[0.4, 0.4]]))
            .unwrap();
        assert_eq!(out.values(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert!(out.iter().all(|m| m.support.as_ref().unwrap().is_witness()));
    }

    #[test]
    fn lark_keeps_tangent_middle_vector() {
        let solver = DenseSimplex::default();
        let p = Pruner::new(&solver);
        let (out, _) = p
            .lark_prune(&set(&[&[1.0, 0.0], &[0.0, 1.0], &[0.6, 0.6]]))
            .unwrap();
        assert_eq!(out.len(), 3);
    }

    #[test]
    fn lark_drops_weakly_dominated() {
        let solver = DenseSimplex::default();
        let p = Pruner::new(&solver);
        let (out, _) = p
            .lark_prune(&set(&[&[1.0, 0.0], &[0.0, 1.0], &[0.5, 0.5]]))
            .unwrap();
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn all_variants_agree_on_small_cross_sum() {
        let solver = DenseSimplex::default();
        let p = Pruner::new(&solver);
        let (w, _) = p.lark_prune(&set(&[&[1.0, 0.0], &[0.0, 1.0]])).unwrap();
        let (x, _) = p.lark_prune(&set(&[&[0.5, 0.0], &[0.0, 0.5]])).unwrap();
        let plain = p.cross_sum_prune(&w, &x, CspVariant::Plain).unwrap();
        assert_eq!(plain.set.values(), vec![vec![0.0, 1.5], vec![1.5, 0.0]]);
        for v in [
            CspVariant::RestrictedRegion,
            CspVariant::Neighbor(LpMode::Full),
            CspVariant::Neighbor(LpMode::Reduced),
            CspVariant::Neighbor(LpMode::Reformulated),
        ] {
            let out = p.cross_sum_prune(&w, &x, v).unwrap();
            assert_eq!(out.set.values(), plain.set.values(), "{v:?}");
        }
    }

    #[test]
    fn singleton_cross_sum_needs_no_lp() {
        let solver = DenseSimplex::default();
        let p = Pruner::new(&solver);
        let (w, _) = p.lark_prune(&set(&[&[1.0, 2.0]])).unwrap();
        let x = set(&[&[3.0, 4.0]]);
        let out = p.cross_sum_prune(&w, &x, CspVariant::Plain).unwrap();
        assert_eq!(out.set.values(), vec![vec![4.0, 6.0]]);
        assert_eq!(out.stats.lp_count, 0);
    }
}
