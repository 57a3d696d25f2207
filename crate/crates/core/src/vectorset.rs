//! Alpha vectors and the set algebra used by dynamic-programming updates:
//! cross sums, matrix multiplication, scaling, evaluation at a belief, and
//! pointwise-dominance pruning.
//!
//! Every set-producing operation returns members in canonical order
//! (lexicographic by value) with duplicates merged, so counters and outputs
//! downstream are deterministic.

use std::cmp::Ordering;
use std::fmt::Write as _;

use crate::error::{Result, SolveError};
use crate::model::{dot, Belief};
use crate::neighbors::NeighborGraph;

/// Max-norm distance under which two vectors are merged.
pub const DUPLICATE_TOLERANCE: f64 = 1e-9;
/// Default tie tolerance for [`VectorSet::value_at`].
pub const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupportKind {
    /// The vector is strictly best at the point.
    Witness,
    /// The vector is best at the point but tied with another.
    Boundary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupportPoint {
    pub belief: Belief,
    pub kind: SupportKind,
}

impl SupportPoint {
    pub fn witness(belief: Belief) -> Self {
        SupportPoint {
            belief,
            kind: SupportKind::Witness,
        }
    }

    pub fn boundary(belief: Belief) -> Self {
        SupportPoint {
            belief,
            kind: SupportKind::Boundary,
        }
    }

    pub fn is_witness(&self) -> bool {
        self.kind == SupportKind::Witness
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaVector {
    pub values: Vec<f64>,
    /// Action whose one-step lookahead this vector belongs to.
    pub action: Option<usize>,
    /// Source indices, one per set folded into this vector by cross sums.
    pub parents: Vec<usize>,
    pub support: Option<SupportPoint>,
}

impl AlphaVector {
    pub fn new(values: Vec<f64>) -> Self {
        AlphaVector {
            values,
            action: None,
            parents: Vec::new(),
            support: None,
        }
    }

    pub fn with_action(mut self, action: usize) -> Self {
        self.action = Some(action);
        self
    }

    pub fn with_support(mut self, support: SupportPoint) -> Self {
        self.support = Some(support);
        self
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn dot(&self, b: &[f64]) -> f64 {
        dot(&self.values, b)
    }

    pub fn max_abs_diff(&self, other: &AlphaVector) -> f64 {
        max_abs_diff(&self.values, &other.values)
    }

    /// Componentwise `self >= other`.
    pub fn dominates(&self, other: &AlphaVector) -> bool {
        self.values.iter().zip(&other.values).all(|(a, b)| a >= b)
    }
}

pub(crate) fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

pub(crate) fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}

/// An ordered collection of alpha vectors over a common state space, with an
/// optional neighbor graph indexed like `members`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorSet {
    dim: usize,
    members: Vec<AlphaVector>,
    graph: Option<NeighborGraph>,
}

impl VectorSet {
    /// Wraps members as given, without reordering or deduplication.
    pub fn from_members(dim: usize, members: Vec<AlphaVector>) -> Result<Self> {
        if let Some(bad) = members.iter().find(|m| m.dim() != dim) {
            return Err(SolveError::Dimension {
                expected: dim,
                found: bad.dim(),
            });
        }
        Ok(VectorSet {
            dim,
            members,
            graph: None,
        })
    }

    /// Canonical order, duplicates merged.
    pub fn canonical(dim: usize, members: Vec<AlphaVector>) -> Result<Self> {
        Ok(Self::canonical_with_sources(dim, members)?.0)
    }

    /// Canonicalizes and reports, for each output member, the input indices
    /// merged into it (first is the representative).
    pub fn canonical_with_sources(
        dim: usize,
        members: Vec<AlphaVector>,
    ) -> Result<(Self, Vec<Vec<usize>>)> {
        let set = Self::from_members(dim, members)?;
        let mut order: Vec<usize> = (0..set.members.len()).collect();
        order.sort_by(|&i, &j| {
            lex_cmp(&set.members[i].values, &set.members[j].values).then(i.cmp(&j))
        });
        let mut members = set.members;
        let mut kept: Vec<AlphaVector> = Vec::with_capacity(order.len());
        let mut sources: Vec<Vec<usize>> = Vec::with_capacity(order.len());
        let mut taken: Vec<Option<AlphaVector>> = members.drain(..).map(Some).collect();
        for idx in order {
            let v = taken[idx].take().expect("each index visited once");
            let mut merged = None;
            for k in (0..kept.len()).rev() {
                if kept[k].values[0] < v.values[0] - DUPLICATE_TOLERANCE {
                    break;
                }
                if kept[k].max_abs_diff(&v) <= DUPLICATE_TOLERANCE {
                    merged = Some(k);
                    break;
                }
            }
            match merged {
                Some(k) => {
                    sources[k].push(idx);
                    let keep = &mut kept[k];
                    if keep.support.is_none() {
                        keep.support = v.support;
                    }
                    if keep.action.is_none() {
                        keep.action = v.action;
                    }
                }
                None => {
                    kept.push(v);
                    sources.push(vec![idx]);
                }
            }
        }
        // Representative is the lowest original index among merged members.
        for src in &mut sources {
            src.sort_unstable();
        }
        Ok((
            VectorSet {
                dim,
                members: kept,
                graph: None,
            },
            sources,
        ))
    }

    /// The set `{0}` with any belief as witness.
    pub fn zero(dim: usize) -> Self {
        let v = AlphaVector::new(vec![0.0; dim])
            .with_support(SupportPoint::witness(Belief::uniform(dim)));
        VectorSet {
            dim,
            members: vec![v],
            graph: Some(NeighborGraph::exact_empty(1)),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[AlphaVector] {
        &self.members
    }

    pub fn members_mut(&mut self) -> &mut [AlphaVector] {
        &mut self.members
    }

    pub fn into_members(self) -> Vec<AlphaVector> {
        self.members
    }

    pub fn get(&self, i: usize) -> &AlphaVector {
        &self.members[i]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, AlphaVector> {
        self.members.iter()
    }

    pub fn graph(&self) -> Option<&NeighborGraph> {
        self.graph.as_ref()
    }

    pub fn set_graph(&mut self, graph: NeighborGraph) {
        assert_eq!(
            graph.size(),
            self.members.len(),
            "graph size must match member count"
        );
        self.graph = Some(graph);
    }

    pub fn take_graph(&mut self) -> Option<NeighborGraph> {
        self.graph.take()
    }

    pub fn with_graph(mut self, graph: NeighborGraph) -> Self {
        self.set_graph(graph);
        self
    }

    /// The neighbor graph, or the all-neighbors graph when none is attached.
    pub fn graph_or_complete(&self) -> NeighborGraph {
        self.graph
            .clone()
            .unwrap_or_else(|| NeighborGraph::new(self.len()))
    }

    pub fn values(&self) -> Vec<Vec<f64>> {
        self.members.iter().map(|m| m.values.clone()).collect()
    }

    fn check_dim(&self, other: usize) -> Result<()> {
        if self.dim != other {
            return Err(SolveError::Dimension {
                expected: self.dim,
                found: other,
            });
        }
        Ok(())
    }

    /// `W ⊕ X`: every pairwise sum, with parent indices concatenated.
    pub fn cross_sum(&self, other: &VectorSet) -> Result<VectorSet> {
        self.check_dim(other.dim)?;
        let mut out = Vec::with_capacity(self.len() * other.len());
        for a in &self.members {
            for b in &other.members {
                let values = a.values.iter().zip(&b.values).map(|(x, y)| x + y).collect();
                let mut parents = a.parents.clone();
                parents.extend_from_slice(&b.parents);
                out.push(AlphaVector {
                    values,
                    action: a.action.or(b.action),
                    parents,
                    support: None,
                });
            }
        }
        VectorSet::canonical(self.dim, out)
    }

    /// `W * f` with `f[s₊ * n + s]`: each output is `β(s) = Σ_{s₊} α(s₊) f(s₊, s)`.
    pub fn matrix_multiply(&self, f: &[f64]) -> Result<VectorSet> {
        let n = self.dim;
        if f.len() != n * n {
            return Err(SolveError::Dimension {
                expected: n * n,
                found: f.len(),
            });
        }
        let out = self
            .members
            .iter()
            .map(|a| {
                let values = (0..n)
                    .map(|s| (0..n).map(|t| a.values[t] * f[t * n + s]).sum())
                    .collect();
                AlphaVector {
                    values,
                    action: a.action,
                    parents: a.parents.clone(),
                    support: None,
                }
            })
            .collect();
        VectorSet::canonical(n, out)
    }

    /// `λW`
    pub fn scale(&self, factor: f64) -> VectorSet {
        let out = self
            .members
            .iter()
            .map(|a| AlphaVector {
                values: a.values.iter().map(|v| v * factor).collect(),
                action: a.action,
                parents: a.parents.clone(),
                support: None,
            })
            .collect();
        VectorSet::canonical(self.dim, out).expect("scaling preserves dimension")
    }

    /// Maximum inner product at `b` and every index within [`TIE_TOLERANCE`] of it.
    pub fn value_at(&self, b: &[f64]) -> Result<(f64, Vec<usize>)> {
        self.value_at_within(b, TIE_TOLERANCE)
    }

    pub fn value_at_within(&self, b: &[f64], tie: f64) -> Result<(f64, Vec<usize>)> {
        if self.members.is_empty() {
            return Err(SolveError::Precondition(
                "value_at on an empty vector set".into(),
            ));
        }
        self.check_dim(b.len())?;
        let scores: Vec<f64> = self.members.iter().map(|m| m.dot(b)).collect();
        let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let ties = (0..scores.len())
            .filter(|&i| scores[i] >= best - tie)
            .collect();
        Ok((best, ties))
    }

    /// The represented function `max_α α·b`.
    pub fn max_value(&self, b: &[f64]) -> f64 {
        self.members
            .iter()
            .map(|m| m.dot(b))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Removes every vector componentwise dominated by another (the earlier
    /// one survives among exact duplicates). The neighbor graph is dropped.
    pub fn pointwise_dominance_prune(&self) -> VectorSet {
        let keep: Vec<bool> = (0..self.len())
            .map(|i| {
                let a = &self.members[i];
                !self
                    .members
                    .iter()
                    .enumerate()
                    .any(|(j, b)| j != i && b.dominates(a) && (j < i || !a.dominates(b)))
            })
            .collect();
        let members = self
            .members
            .iter()
            .zip(&keep)
            .filter(|(_, &k)| k)
            .map(|(m, _)| m.clone())
            .collect();
        VectorSet::canonical(self.dim, members).expect("same dimension")
    }

    /// Writes the alpha-vector file format: action index (or -1), the values,
    /// and a blank line, per vector.
    pub fn to_alpha_string(&self) -> String {
        let mut out = String::new();
        for m in &self.members {
            let action = m.action.map_or(-1, |a| a as i64);
            let values: Vec<String> = m.values.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{action}\n{}\n", values.join(" "));
        }
        out
    }

    /// Reads the alpha-vector file format.
    pub fn parse_alpha(text: &str) -> Result<VectorSet> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let mut members = Vec::new();
        while let Some((ln, action_line)) = lines.next() {
            let action: i64 = action_line.trim().parse().map_err(|_| {
                SolveError::Precondition(format!("alpha file line {}: bad action index", ln + 1))
            })?;
            let (vl, values_line) = lines.next().ok_or_else(|| {
                SolveError::Precondition(format!("alpha file line {}: missing values", ln + 1))
            })?;
            let values = values_line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| {
                    SolveError::Precondition(format!("alpha file line {}: bad number", vl + 1))
                })?;
            let mut v = AlphaVector::new(values);
            if action >= 0 {
                v.action = Some(action as usize);
            }
            members.push(v);
        }
        let dim = members
            .first()
            .map(|m| m.dim())
            .ok_or_else(|| SolveError::Precondition("alpha file holds no vectors".into()))?;
        VectorSet::from_members(dim, members)
    }
}

impl<'a> IntoIterator for &'a VectorSet {
    type Item = &'a AlphaVector;
    type IntoIter = std::slice::Iter<'a, AlphaVector>;
    fn into_iter(self) -> Self::IntoIter {
        self.members.iter()
    }
}

/// Sorted value lists, for comparing sets produced by different routes.
pub fn sorted_values(set: &VectorSet) -> Vec<Vec<f64>> {
    let mut vals = set.values();
    vals.sort_by(|a, b| lex_cmp(a, b));
    vals
}

/// Whether two sets hold the same vectors within `tol` per entry.
pub fn same_vectors(a: &VectorSet, b: &VectorSet, tol: f64) -> bool {
    let (x, y) = (sorted_values(a), sorted_values(b));
    if x.len() != y.len() {
        return false;
    }
    // Sorting can interleave near-equal vectors differently; fall back to a
    // matching when the positional comparison fails.
    if x.iter().zip(&y).all(|(p, q)| max_abs_diff(p, q) <= tol) {
        return true;
    }
    let mut used = vec![false; y.len()];
    x.iter().all(
        |p| match (0..y.len()).find(|&j| !used[j] && max_abs_diff(p, &y[j]) <= tol) {
            Some(j) => {
                used[j] = true;
                true
            }
            None => false,
        },
    )
}
