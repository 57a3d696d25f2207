//! Neighbor relations between witness regions.
//!
//! Two vectors of a set are neighbors when their closed witness regions meet
//! in a face of dimension `n - 2`. A [`NeighborGraph`] records only pairs
//! known *not* to be neighbors; every unmarked pair is treated as a possible
//! neighbor, so an over-approximated graph is always safe to use.
//!
//! Non-neighbor marks propagate through the set transformations of a
//! dynamic-programming update ([`NeighborGraph::remap`], [`inherit_cross_sum`]),
//! and [`detect_neighbors_in_union`] recovers the exact relation on the final
//! parsimonious covering.

use std::fmt::Write as _;

use crate::error::{Result, SolveError};
use crate::lp::LinearProgram;
use crate::pruning::Pruner;
use crate::vectorset::{max_abs_diff, AlphaVector, VectorSet, DUPLICATE_TOLERANCE};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborGraph {
    size: usize,
    /// Symmetric `size x size` matrix of non-neighbor marks.
    non_neighbor: Vec<bool>,
    exact: bool,
}

impl NeighborGraph {
    /// Every pair a possible neighbor.
    pub fn new(size: usize) -> Self {
        NeighborGraph {
            size,
            non_neighbor: vec![false; size * size],
            exact: false,
        }
    }

    /// Graph of a set with at most one member, which is trivially exact.
    pub fn exact_empty(size: usize) -> Self {
        let mut g = Self::new(size);
        g.exact = size <= 1;
        g
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn set_exact(&mut self, exact: bool) {
        self.exact = exact;
    }

    pub fn mark_non_neighbor(&mut self, i: usize, j: usize) {
        assert!(i != j, "no self-pairs");
        self.non_neighbor[i * self.size + j] = true;
        self.non_neighbor[j * self.size + i] = true;
    }

    pub fn clear_mark(&mut self, i: usize, j: usize) {
        self.non_neighbor[i * self.size + j] = false;
        self.non_neighbor[j * self.size + i] = false;
    }

    pub fn is_non_neighbor(&self, i: usize, j: usize) -> bool {
        i != j && self.non_neighbor[i * self.size + j]
    }

    pub fn are_neighbors(&self, i: usize, j: usize) -> bool {
        i != j && !self.non_neighbor[i * self.size + j]
    }

    /// All `j ≠ i` not marked as non-neighbors of `i`.
    pub fn neighbors_of(&self, i: usize) -> Vec<usize> {
        (0..self.size)
            .filter(|&j| self.are_neighbors(i, j))
            .collect()
    }

    /// Marked pairs with `i < j`.
    pub fn non_neighbor_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.size {
            for j in i + 1..self.size {
                if self.non_neighbor[i * self.size + j] {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Carries marks through a many-to-one correspondence: `sources[p]` lists
    /// the members of this graph that became member `p` of the new set. A
    /// new pair is marked only when every underlying source pair is marked.
    /// This realizes both the scaling rule (`V` to `V'_{a,o}`) and the affine
    /// rule (`PC(V'_a)` to `W_a`).
    pub fn remap(&self, sources: &[Vec<usize>]) -> NeighborGraph {
        let mut g = NeighborGraph::new(sources.len());
        for p in 0..sources.len() {
            for q in p + 1..sources.len() {
                let all_marked = sources[p].iter().all(|&s| {
                    sources[q]
                        .iter()
                        .all(|&t| s != t && self.is_non_neighbor(s, t))
                });
                if all_marked && !sources[p].is_empty() && !sources[q].is_empty() {
                    g.mark_non_neighbor(p, q);
                }
            }
        }
        g
    }

    /// One line per vector: `i: j k l`.
    pub fn to_adjacency_text(&self) -> String {
        let mut out = String::new();
        for i in 0..self.size {
            let nb: Vec<String> = self.neighbors_of(i).iter().map(|j| j.to_string()).collect();
            let _ = writeln!(out, "{i}: {}", nb.join(" "));
        }
        out
    }
}

/// Graph of `V'_{a,o}` from the graph of `V`; `sources[p]` are the members
/// of `V` whose scaled image is member `p` (dropped members have no entry).
pub fn inherit_scaling(g_v: &NeighborGraph, sources: &[Vec<usize>]) -> NeighborGraph {
    g_v.remap(sources)
}

/// Graph of `W_a = {r_a} ⊕ PC(V'_a) * P(s₊|s,a)` from the graph of `PC(V'_a)`.
pub fn inherit_affine(g: &NeighborGraph, sources: &[Vec<usize>]) -> NeighborGraph {
    g.remap(sources)
}

/// Whether `u = c·v` for some scalar `c`, within the collinearity tolerance.
/// Degenerate (near-zero) differences are reported as collinear, which keeps
/// the pair unmarked.
pub fn collinear(u: &[f64], v: &[f64], tol: f64) -> bool {
    let norm_u = u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let vv: f64 = v.iter().map(|x| x * x).sum();
    if vv <= 1e-24 || norm_u <= 1e-12 {
        return true;
    }
    let c = u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() / vv;
    let residual = u
        .iter()
        .zip(v)
        .fold(0.0f64, |m, (a, b)| m.max((a - c * b).abs()));
    residual <= tol * (1.0 + norm_u)
}

/// Graph of a cross-sum covering whose member `p` is `W[pairs[p].0] + X[pairs[p].1]`.
pub fn inherit_cross_sum(
    w: &VectorSet,
    x: &VectorSet,
    pairs: &[(usize, usize)],
    collinear_tol: f64,
) -> NeighborGraph {
    let gw = w.graph_or_complete();
    let gx = x.graph_or_complete();
    let mut g = NeighborGraph::new(pairs.len());
    for p in 0..pairs.len() {
        for q in p + 1..pairs.len() {
            let (i, j) = pairs[p];
            let (k, l) = pairs[q];
            let marked = (i != k && gw.is_non_neighbor(i, k))
                || (j != l && gx.is_non_neighbor(j, l))
                || (i != k && j != l && {
                    let u: Vec<f64> = w
                        .get(i)
                        .values
                        .iter()
                        .zip(&w.get(k).values)
                        .map(|(a, b)| a - b)
                        .collect();
                    let v: Vec<f64> = x
                        .get(j)
                        .values
                        .iter()
                        .zip(&x.get(l).values)
                        .map(|(a, b)| a - b)
                        .collect();
                    !collinear(&u, &v, collinear_tol)
                });
            if marked {
                g.mark_non_neighbor(p, q);
            }
        }
    }
    g
}

/// Clears marks that a tolerance-rejected pair may have invalidated.
///
/// If `W[i] + X[j]` was rejected with a margin too small to trust, its true
/// witness region may be a sliver that separated some output vectors; once
/// it is dropped those vectors can become neighbors. Only members built
/// from `i` or a neighbor of `i`, and `j` or a neighbor of `j`, can touch
/// that sliver, so marks among them are removed.
pub fn release_near_misses(
    g: &mut NeighborGraph,
    pairs: &[(usize, usize)],
    near_misses: &[(usize, usize)],
    gw: &NeighborGraph,
    gx: &NeighborGraph,
) {
    for &(i, j) in near_misses {
        let touching: Vec<usize> = pairs
            .iter()
            .enumerate()
            .filter(|(_, &(p, q))| {
                (p == i || gw.are_neighbors(p, i)) && (q == j || gx.are_neighbors(q, j))
            })
            .map(|(k, _)| k)
            .collect();
        for (a, &p) in touching.iter().enumerate() {
            for &q in &touching[a + 1..] {
                g.clear_mark(p, q);
            }
        }
    }
}

/// Location of a union member inside the per-action set `W_a` it came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActionSource {
    pub action: usize,
    pub index: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DetectionStats {
    /// Potential-neighbor programs (first step).
    pub step1_lps: usize,
    /// Confirmation programs (second step).
    pub confirm_lps: usize,
    pub total_rows: usize,
    /// Pairs settled as non-neighbors because they are non-neighbors in a shared `W_a`.
    pub same_action_shortcuts: usize,
    /// Pairs settled as neighbors from a witness point of one side.
    pub witness_shortcuts: usize,
    /// Potential neighbors confirmed from their first-step point alone.
    pub strict_separation_confirms: usize,
}

impl DetectionStats {
    pub fn lp_count(&self) -> usize {
        self.step1_lps + self.confirm_lps
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Relation {
    Unknown,
    Neighbor,
    NonNeighbor,
}

/// Exact neighbor relation on `PC(U)`.
///
/// `action_sets[a]` is `W_a` with its (sound) graph, and `sources[i]` lists
/// where member `i` of `pc` sits in those sets. Every member of `pc` must
/// carry a support point.
pub fn detect_neighbors_in_union(
    pc: &VectorSet,
    action_sets: &[VectorSet],
    sources: &[Vec<ActionSource>],
    pruner: &Pruner<'_>,
) -> Result<(NeighborGraph, DetectionStats)> {
    let k = pc.len();
    if sources.len() != k {
        return Err(SolveError::Precondition(
            "one source list per union member".into(),
        ));
    }
    if let Some(i) = pc.iter().position(|m| m.support.is_none()) {
        return Err(SolveError::Precondition(format!(
            "union member {i} has no support point"
        )));
    }
    let tol = pruner.tolerances();
    let graphs: Vec<_> = action_sets.iter().map(|s| s.graph_or_complete()).collect();
    let mut rel = vec![Relation::Unknown; k * k];
    let mut stats = DetectionStats::default();
    let set_rel = |rel: &mut Vec<Relation>, i: usize, j: usize, r: Relation| {
        rel[i * k + j] = r;
        rel[j * k + i] = r;
    };

    let same_action_non_neighbors = |i: usize, j: usize| {
        sources[i].iter().any(|si| {
            sources[j].iter().any(|sj| {
                si.action == sj.action
                    && si.index != sj.index
                    && graphs[si.action].is_non_neighbor(si.index, sj.index)
            })
        })
    };

    for a in 0..k {
        let alpha = pc.get(a);
        let support = alpha.support.as_ref().expect("checked above");

        // Constraint vectors from alpha's own W_a: its possible neighbors there.
        let local: Vec<&AlphaVector> = match sources[a].first() {
            Some(src) => {
                let set = &action_sets[src.action];
                graphs[src.action]
                    .neighbors_of(src.index)
                    .into_iter()
                    .map(|j| set.get(j))
                    .collect()
            }
            None => Vec::new(),
        };

        let mut potential: Vec<usize> = (0..k)
            .filter(|&j| j != a && rel[a * k + j] == Relation::Neighbor)
            .collect();

        // A witness point of alpha: whatever is best among the rest there is a neighbor.
        if support.is_witness() && k > 1 {
            let b = support.belief.as_slice();
            let best = (0..k)
                .filter(|&j| j != a)
                .map(|j| pc.get(j).dot(b))
                .fold(f64::NEG_INFINITY, f64::max);
            for j in (0..k).filter(|&j| j != a) {
                if pc.get(j).dot(b) >= best - tol.tie && rel[a * k + j] == Relation::Unknown {
                    set_rel(&mut rel, a, j, Relation::Neighbor);
                    stats.witness_shortcuts += 1;
                    potential.push(j);
                }
            }
        }

        // First step: collect potential neighbors.
        let mut candidates: Vec<(usize, Option<Vec<f64>>)> = Vec::new();
        for b_idx in 0..k {
            if b_idx == a || rel[a * k + b_idx] != Relation::Unknown {
                continue;
            }
            if same_action_non_neighbors(a, b_idx) {
                set_rel(&mut rel, a, b_idx, Relation::NonNeighbor);
                stats.same_action_shortcuts += 1;
                continue;
            }
            let beta = pc.get(b_idx);
            let mut constraints: Vec<&AlphaVector> = local.clone();
            constraints.extend(potential.iter().map(|&j| pc.get(j)));
            let lp = tie_program(alpha, beta, &constraints);
            stats.step1_lps += 1;
            stats.total_rows += lp.row_count();
            let outcome = pruner.solve_raw(&lp)?;
            match outcome.positive_point(-tol.neighbor) {
                Some(point) => {
                    potential.push(b_idx);
                    candidates.push((b_idx, Some(point.as_slice().to_vec())));
                }
                None => set_rel(&mut rel, a, b_idx, Relation::NonNeighbor),
            }
        }
        if stats.step1_lps > k * k.saturating_sub(1) / 2 {
            return Err(SolveError::Internal(format!(
                "neighbor detection used {} first-step programs for {k} vectors",
                stats.step1_lps
            )));
        }

        // Second step: confirm each potential neighbor.
        for (b_idx, point) in candidates {
            let beta = pc.get(b_idx);
            let others: Vec<usize> = potential.iter().copied().filter(|&j| j != b_idx).collect();
            let separated = point.as_ref().is_some_and(|b| {
                let vb = beta.dot(b);
                others.iter().all(|&j| vb > pc.get(j).dot(b) + tol.tie)
            });
            if separated {
                set_rel(&mut rel, a, b_idx, Relation::Neighbor);
                stats.strict_separation_confirms += 1;
                continue;
            }
            let constraints: Vec<&AlphaVector> = others.iter().map(|&j| pc.get(j)).collect();
            let lp = tie_program(alpha, beta, &constraints);
            stats.confirm_lps += 1;
            stats.total_rows += lp.row_count();
            let outcome = pruner.solve_raw(&lp)?;
            if outcome.positive_point(-tol.neighbor).is_some() {
                set_rel(&mut rel, a, b_idx, Relation::Neighbor);
            } else {
                set_rel(&mut rel, a, b_idx, Relation::NonNeighbor);
                potential.retain(|&j| j != b_idx);
            }
        }
    }

    let mut g = NeighborGraph::new(k);
    for i in 0..k {
        for j in i + 1..k {
            if rel[i * k + j] != Relation::Neighbor {
                g.mark_non_neighbor(i, j);
            }
        }
    }
    g.set_exact(true);
    Ok((g, stats))
}

/// Maximize `x` subject to `α·b = β·b` and `α·b ≥ x + γ·b` for each
/// constraint vector `γ` that is not a copy of `α` or `β`.
pub(crate) fn tie_program(
    alpha: &AlphaVector,
    beta: &AlphaVector,
    constraints: &[&AlphaVector],
) -> LinearProgram {
    let n = alpha.dim();
    let mut lp = LinearProgram::maximize_slack(n);
    let diff: Vec<f64> = alpha
        .values
        .iter()
        .zip(&beta.values)
        .map(|(x, y)| x - y)
        .collect();
    lp.push_equality(diff, 0.0);
    let mut seen: Vec<&[f64]> = Vec::new();
    for g in constraints {
        if max_abs_diff(&g.values, &alpha.values) <= DUPLICATE_TOLERANCE
            || max_abs_diff(&g.values, &beta.values) <= DUPLICATE_TOLERANCE
            || seen
                .iter()
                .any(|s| max_abs_diff(s, &g.values) <= DUPLICATE_TOLERANCE)
        {
            continue;
        }
        seen.push(&g.values);
        lp.push_dominance(&alpha.values, &g.values, true);
    }
    lp
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::DenseSimplex;
    use crate::model::Belief;
    use crate::vectorset::SupportPoint;

    #[test]
    fn neighbors_of_cases() {
        let g = NeighborGraph::new(3);
        assert_eq!(g.neighbors_of(0), vec![1, 2]);
        let mut g = NeighborGraph::new(3);
        g.mark_non_neighbor(0, 1);
        assert_eq!(g.neighbors_of(0), vec![2]);
        assert!(g.is_non_neighbor(1, 0));
        assert!(NeighborGraph::new(1).neighbors_of(0).is_empty());
    }

    #[test]
    fn remap_cases() {
        let g = NeighborGraph::new(3);
        assert_eq!(
            g.remap(&[vec![0], vec![1], vec![2]]).non_neighbor_pairs(),
            vec![]
        );
        let mut g = NeighborGraph::new(3);
        g.mark_non_neighbor(0, 2);
        let h = g.remap(&[vec![0], vec![1], vec![2]]);
        assert_eq!(h.non_neighbor_pairs(), vec![(0, 2)]);
        assert!(!h.is_exact());
        // Source 1 dropped: the image has two members and keeps the mark.
        let h = g.remap(&[vec![0], vec![2]]);
        assert_eq!(h.size(), 2);
        assert_eq!(h.non_neighbor_pairs(), vec![(0, 1)]);
        // A merged member is marked only if all its sources are.
        let h = g.remap(&[vec![0, 1], vec![2]]);
        assert!(h.non_neighbor_pairs().is_empty());
    }

    #[test]
    fn collinearity_rule() {
        assert!(collinear(&[1.0, -1.0], &[2.0, -2.0], 1e-7));
        assert!(!collinear(&[1.0, -1.0], &[1.0, 0.0], 1e-7));
    }

    #[test]
    fn cross_sum_rule_marks() {
        let mk = |vs: &[[f64; 2]]| {
            VectorSet::from_members(2, vs.iter().map(|v| AlphaVector::new(v.to_vec())).collect())
                .unwrap()
        };
        let w = mk(&[[1.0, 0.0], [0.0, 1.0]]);
        let x_col = mk(&[[2.0, 0.0], [0.0, 2.0]]);
        let g = inherit_cross_sum(&w, &x_col, &[(0, 0), (1, 1)], 1e-7);
        assert!(g.non_neighbor_pairs().is_empty());
        let x_bad = mk(&[[1.0, 0.0], [0.0, 0.0]]);
        let g = inherit_cross_sum(&w, &x_bad, &[(0, 0), (1, 1)], 1e-7);
        assert_eq!(g.non_neighbor_pairs(), vec![(0, 1)]);
        let mut w2 = w.clone();
        let mut gw = NeighborGraph::new(2);
        gw.mark_non_neighbor(0, 1);
        w2.set_graph(gw);
        let g = inherit_cross_sum(&w2, &x_col, &[(0, 0), (1, 1)], 1e-7);
        assert_eq!(g.non_neighbor_pairs(), vec![(0, 1)]);
    }

    #[test]
    fn two_vector_union_is_one_neighbor_pair() {
        let members = vec![
            AlphaVector::new(vec![0.0, 1.0])
                .with_support(SupportPoint::witness(Belief::corner(2, 1))),
            AlphaVector::new(vec![1.0, 0.0])
                .with_support(SupportPoint::witness(Belief::corner(2, 0))),
        ];
        let pc = VectorSet::from_members(2, members).unwrap();
        let w0 = pc.clone();
        let sources = vec![
            vec![ActionSource {
                action: 0,
                index: 0,
            }],
            vec![ActionSource {
                action: 0,
                index: 1,
            }],
        ];
        let solver = DenseSimplex::default();
        let pruner = Pruner::new(&solver);
        let (g, stats) = detect_neighbors_in_union(&pc, &[w0], &sources, &pruner).unwrap();
        assert!(g.are_neighbors(0, 1));
        assert!(g.is_exact());
        assert!(stats.step1_lps <= 1);
    }

    #[test]
    fn same_action_non_neighbors_skip_lps() {
        let members = vec![
            AlphaVector::new(vec![0.0, 1.0])
                .with_support(SupportPoint::boundary(Belief::corner(2, 1))),
            AlphaVector::new(vec![1.0, 0.0])
                .with_support(SupportPoint::boundary(Belief::corner(2, 0))),
        ];
        let pc = VectorSet::from_members(2, members).unwrap();
        let mut gw = NeighborGraph::new(2);
        gw.mark_non_neighbor(0, 1);
        let w0 = pc.clone().with_graph(gw);
        let sources = vec![
            vec![ActionSource {
                action: 0,
                index: 0,
            }],
            vec![ActionSource {
                action: 0,
                index: 1,
            }],
        ];
        let solver = DenseSimplex::default();
        let pruner = Pruner::new(&solver);
        let (g, stats) = detect_neighbors_in_union(&pc, &[w0], &sources, &pruner).unwrap();
        assert!(g.is_non_neighbor(0, 1));
        assert_eq!(stats.lp_count(), 0);
        assert_eq!(stats.same_action_shortcuts, 1);
    }
}
