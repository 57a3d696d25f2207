//! POMDP problem instances: the index-level model, a reader and writer for
//! the `.POMDP` text format, and the elementary belief-space operations.
//!
//! Observations are conditioned on the state arrived at and the action just
//! executed, `P(o₊ | s₊, a)`. Rewards are kept in the `r(s, a)` form; any
//! `R: a : s : s' : o` entries in a file are reduced to it by taking the
//! expectation over `P(s' | s, a) P(o | s', a)`.

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use thiserror::Error;

/// Tolerance on probability row sums.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown {kind} `{name}`")]
    UnknownIdentifier {
        line: usize,
        kind: &'static str,
        name: String,
    },
    #[error("{table} row for action `{action}`, state `{state}` sums to {sum} (expected 1)")]
    Stochasticity {
        table: &'static str,
        action: String,
        state: String,
        sum: f64,
    },
    #[error("{table} entry for action `{action}`, state `{state}` is {value}, outside [0, 1]")]
    ProbabilityRange {
        table: &'static str,
        action: String,
        state: String,
        value: f64,
    },
    #[error("discount {0} must lie strictly between 0 and 1")]
    Discount(f64),
    #[error("start distribution is not a probability vector")]
    Start,
    #[error("missing `{0}` declaration")]
    MissingHeader(&'static str),
    #[error("index out of range: {0}")]
    Index(String),
}

/// A probability distribution over states.
#[derive(Debug, Clone, PartialEq)]
pub struct Belief(Vec<f64>);

impl Belief {
    /// Checked constructor: entries non-negative, summing to one within 1e-9.
    pub fn new(probabilities: Vec<f64>) -> Result<Self, ModelError> {
        let sum: f64 = probabilities.iter().sum();
        if probabilities.is_empty()
            || probabilities.iter().any(|&p| p.is_nan() || p < 0.0)
            || (sum - 1.0).abs() > ROW_SUM_TOLERANCE
        {
            return Err(ModelError::Start);
        }
        Ok(Belief(probabilities))
    }

    /// Builds a belief from non-negative weights, clamping tiny negative noise
    /// and renormalizing. Returns `None` when the total mass is not positive.
    pub fn from_weights(weights: &[f64]) -> Option<Self> {
        let clamped: Vec<f64> = weights.iter().map(|&w| w.max(0.0)).collect();
        let total: f64 = clamped.iter().sum();
        if total.is_nan() || total <= 0.0 || !total.is_finite() {
            return None;
        }
        Some(Belief(clamped.into_iter().map(|w| w / total).collect()))
    }

    pub fn uniform(n: usize) -> Self {
        Belief(vec![1.0 / n as f64; n])
    }

    pub fn corner(n: usize, state: usize) -> Self {
        let mut p = vec![0.0; n];
        p[state] = 1.0;
        Belief(p)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for Belief {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// A finite POMDP with dense tables.
#[derive(Debug, Clone, PartialEq)]
pub struct PomdpModel {
    state_names: Vec<String>,
    action_names: Vec<String>,
    observation_names: Vec<String>,
    /// `transition[(a * n + s) * n + s₊] = P(s₊ | s, a)`
    transition: Vec<f64>,
    /// `observation[(a * n + s₊) * m + o] = P(o | s₊, a)`
    observation: Vec<f64>,
    /// `reward[a * n + s] = r(s, a)`
    reward: Vec<f64>,
    discount: f64,
    start: Option<Vec<f64>>,
}

impl PomdpModel {
    /// Builds a model from dense tables and validates every invariant.
    /// Rows within tolerance of one are renormalized.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        state_names: Vec<String>,
        action_names: Vec<String>,
        observation_names: Vec<String>,
        transition: Vec<f64>,
        observation: Vec<f64>,
        reward: Vec<f64>,
        discount: f64,
        start: Option<Vec<f64>>,
    ) -> Result<Self, ModelError> {
        let model = Self::new_unchecked(
            state_names,
            action_names,
            observation_names,
            transition,
            observation,
            reward,
            discount,
            start,
        )?;
        match model.violations().into_iter().next() {
            Some(err) => Err(err),
            None => Ok(model.renormalized()),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn new_unchecked(
        state_names: Vec<String>,
        action_names: Vec<String>,
        observation_names: Vec<String>,
        transition: Vec<f64>,
        observation: Vec<f64>,
        reward: Vec<f64>,
        discount: f64,
        start: Option<Vec<f64>>,
    ) -> Result<Self, ModelError> {
        let (n, k, m) = (
            state_names.len(),
            action_names.len(),
            observation_names.len(),
        );
        if n == 0 {
            return Err(ModelError::MissingHeader("states"));
        }
        if k == 0 {
            return Err(ModelError::MissingHeader("actions"));
        }
        if m == 0 {
            return Err(ModelError::MissingHeader("observations"));
        }
        if transition.len() != k * n * n || observation.len() != k * n * m || reward.len() != k * n
        {
            return Err(ModelError::Index(
                "table sizes do not match the declared spaces".into(),
            ));
        }
        if let Some(s) = &start {
            if s.len() != n {
                return Err(ModelError::Start);
            }
        }
        Ok(PomdpModel {
            state_names,
            action_names,
            observation_names,
            transition,
            observation,
            reward,
            discount,
            start,
        })
    }

    /// Every invariant violation, in a fixed order.
    pub fn violations(&self) -> Vec<ModelError> {
        let (n, m) = (self.num_states(), self.num_observations());
        let mut out = Vec::new();
        if !(self.discount > 0.0 && self.discount < 1.0) {
            out.push(ModelError::Discount(self.discount));
        }
        for a in 0..self.num_actions() {
            for s in 0..n {
                let row = &self.transition[(a * n + s) * n..(a * n + s + 1) * n];
                check_row(
                    &mut out,
                    "transition",
                    &self.action_names[a],
                    &self.state_names[s],
                    row,
                );
            }
            for s in 0..n {
                let row = &self.observation[(a * n + s) * m..(a * n + s + 1) * m];
                check_row(
                    &mut out,
                    "observation",
                    &self.action_names[a],
                    &self.state_names[s],
                    row,
                );
            }
        }
        if let Some(start) = &self.start {
            let sum: f64 = start.iter().sum();
            if start.iter().any(|&p| !(0.0..=1.0).contains(&p))
                || (sum - 1.0).abs() > ROW_SUM_TOLERANCE
            {
                out.push(ModelError::Start);
            }
        }
        out
    }

    fn renormalized(mut self) -> Self {
        let (n, m) = (self.num_states(), self.num_observations());
        for row in self.transition.chunks_mut(n) {
            normalize(row);
        }
        for row in self.observation.chunks_mut(m) {
            normalize(row);
        }
        if let Some(start) = self.start.as_mut() {
            normalize(start);
        }
        self
    }

    pub fn num_states(&self) -> usize {
        self.state_names.len()
    }

    pub fn num_actions(&self) -> usize {
        self.action_names.len()
    }

    pub fn num_observations(&self) -> usize {
        self.observation_names.len()
    }

    pub fn state_names(&self) -> &[String] {
        &self.state_names
    }

    pub fn action_names(&self) -> &[String] {
        &self.action_names
    }

    pub fn observation_names(&self) -> &[String] {
        &self.observation_names
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    /// The declared start distribution, if the file had one.
    pub fn start(&self) -> Option<&[f64]> {
        self.start.as_deref()
    }

    /// `P(s₊ | s, a)`
    #[inline]
    pub fn transition(&self, a: usize, s: usize, next: usize) -> f64 {
        let n = self.num_states();
        self.transition[(a * n + s) * n + next]
    }

    /// Row `P(· | s, a)`.
    pub fn transition_row(&self, a: usize, s: usize) -> &[f64] {
        let n = self.num_states();
        &self.transition[(a * n + s) * n..(a * n + s + 1) * n]
    }

    /// `P(o₊ | s₊, a)`
    #[inline]
    pub fn observation(&self, a: usize, next: usize, o: usize) -> f64 {
        let (n, m) = (self.num_states(), self.num_observations());
        self.observation[(a * n + next) * m + o]
    }

    /// `r(s, a)`
    #[inline]
    pub fn reward(&self, a: usize, s: usize) -> f64 {
        self.reward[a * self.num_states() + s]
    }

    /// The reward vector `r(·, a)`.
    pub fn reward_vector(&self, a: usize) -> &[f64] {
        let n = self.num_states();
        &self.reward[a * n..(a + 1) * n]
    }

    /// Column `P(o | ·, a)` over arrival states.
    pub fn observation_column(&self, a: usize, o: usize) -> Vec<f64> {
        (0..self.num_states())
            .map(|s| self.observation(a, s, o))
            .collect()
    }

    /// `P(s₊, o₊ | s, a) = P(o₊ | s₊, a) P(s₊ | s, a)`.
    pub fn joint_prob(&self, a: usize, s: usize, next: usize, o: usize) -> f64 {
        self.observation(a, next, o) * self.transition(a, s, next)
    }

    /// Expected immediate reward `r(b, a)`.
    pub fn expected_reward(&self, b: &Belief, a: usize) -> f64 {
        dot(self.reward_vector(a), b.as_slice())
    }

    /// Probability of observing `o` after executing `a` in belief `b`.
    pub fn observation_prob(&self, b: &Belief, a: usize, o: usize) -> f64 {
        self.unnormalized_update(b, a, o).iter().sum()
    }

    /// Bayesian belief update. `None` when the observation cannot occur.
    pub fn belief_update(&self, b: &Belief, a: usize, o: usize) -> Option<Belief> {
        let weights = self.unnormalized_update(b, a, o);
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return None;
        }
        Some(Belief(weights.into_iter().map(|w| w / total).collect()))
    }

    fn unnormalized_update(&self, b: &Belief, a: usize, o: usize) -> Vec<f64> {
        let n = self.num_states();
        (0..n)
            .map(|next| {
                let inflow: f64 = (0..n).map(|s| self.transition(a, s, next) * b[s]).sum();
                self.observation(a, next, o) * inflow
            })
            .collect()
    }

    /// Resolves a state name to its index.
    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.state_names.iter().position(|x| x == name)
    }

    pub fn action_index(&self, name: &str) -> Option<usize> {
        self.action_names.iter().position(|x| x == name)
    }

    /// Writes the model in `.POMDP` format. Probabilities and rewards are
    /// printed in shortest round-trip form, so parsing the output yields the
    /// same index-level model.
    pub fn to_pomdp_string(&self) -> String {
        let (n, m) = (self.num_states(), self.num_observations());
        let mut out = String::new();
        let _ = writeln!(out, "discount: {}", self.discount);
        let _ = writeln!(out, "values: reward");
        let _ = writeln!(out, "states: {}", self.state_names.join(" "));
        let _ = writeln!(out, "actions: {}", self.action_names.join(" "));
        let _ = writeln!(out, "observations: {}", self.observation_names.join(" "));
        if let Some(start) = &self.start {
            let _ = writeln!(out, "start: {}", join_numbers(start));
        }
        for (a, name) in self.action_names.iter().enumerate() {
            let _ = writeln!(out, "\nT: {name}");
            for s in 0..n {
                let _ = writeln!(out, "{}", join_numbers(self.transition_row(a, s)));
            }
        }
        for (a, name) in self.action_names.iter().enumerate() {
            let _ = writeln!(out, "\nO: {name}");
            for s in 0..n {
                let row = &self.observation[(a * n + s) * m..(a * n + s + 1) * m];
                let _ = writeln!(out, "{}", join_numbers(row));
            }
        }
        out.push('\n');
        for (a, name) in self.action_names.iter().enumerate() {
            for (s, sname) in self.state_names.iter().enumerate() {
                let _ = writeln!(out, "R: {name} : {sname} : * : * {}", self.reward(a, s));
            }
        }
        out
    }
}

impl fmt::Display for PomdpModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "POMDP({} states, {} actions, {} observations, discount {})",
            self.num_states(),
            self.num_actions(),
            self.num_observations(),
            self.discount
        )
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn join_numbers(xs: &[f64]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn check_row(
    out: &mut Vec<ModelError>,
    table: &'static str,
    action: &str,
    state: &str,
    row: &[f64],
) {
    if let Some(&bad) = row.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        out.push(ModelError::ProbabilityRange {
            table,
            action: action.to_string(),
            state: state.to_string(),
            value: bad,
        });
        return;
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
        out.push(ModelError::Stochasticity {
            table,
            action: action.to_string(),
            state: state.to_string(),
            sum,
        });
    }
}

fn normalize(row: &mut [f64]) {
    let sum: f64 = row.iter().sum();
    if sum > 0.0 {
        row.iter_mut().for_each(|p| *p /= sum);
    }
}

// ---------------------------------------------------------------------------
// .POMDP reader
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
struct Token {
    text: String,
    line: usize,
}

fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        for word in line.replace(':', " : ").split_whitespace() {
            tokens.push(Token {
                text: word.to_string(),
                line: i + 1,
            });
        }
    }
    tokens
}

const KEYWORDS: [&str; 9] = [
    "discount",
    "values",
    "states",
    "actions",
    "observations",
    "start",
    "T",
    "O",
    "R",
];

struct Space {
    names: Vec<String>,
    by_name: HashMap<String, usize>,
}

impl Space {
    fn from_names(names: Vec<String>) -> Self {
        let by_name = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        Space { names, by_name }
    }

    fn len(&self) -> usize {
        self.names.len()
    }

    /// `None` stands for the `*` wildcard.
    fn resolve(&self, tok: &Token, kind: &'static str) -> Result<Option<usize>, ModelError> {
        if tok.text == "*" {
            return Ok(None);
        }
        if let Some(&i) = self.by_name.get(&tok.text) {
            return Ok(Some(i));
        }
        match tok.text.parse::<usize>() {
            Ok(i) if i < self.len() => Ok(Some(i)),
            _ => Err(ModelError::UnknownIdentifier {
                line: tok.line,
                kind,
                name: tok.text.clone(),
            }),
        }
    }

    fn expand(&self, sel: Option<usize>) -> Vec<usize> {
        match sel {
            Some(i) => vec![i],
            None => (0..self.len()).collect(),
        }
    }
}

struct Reader {
    tokens: Vec<Token>,
    pos: usize,
    last_line: usize,
}

impl Reader {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, offset: usize) -> Option<&Token> {
        self.tokens.get(self.pos + offset)
    }

    fn next(&mut self) -> Result<Token, ModelError> {
        let tok = self
            .tokens
            .get(self.pos)
            .cloned()
            .ok_or_else(|| ModelError::Syntax {
                line: self.last_line,
                message: "unexpected end of file".into(),
            })?;
        self.pos += 1;
        Ok(tok)
    }

    fn expect_colon(&mut self) -> Result<(), ModelError> {
        let tok = self.next()?;
        if tok.text != ":" {
            return Err(ModelError::Syntax {
                line: tok.line,
                message: format!("expected `:`, found `{}`", tok.text),
            });
        }
        Ok(())
    }

    fn number(&mut self) -> Result<f64, ModelError> {
        let tok = self.next()?;
        tok.text.parse::<f64>().map_err(|_| ModelError::Syntax {
            line: tok.line,
            message: format!("expected a number, found `{}`", tok.text),
        })
    }

    fn numbers(&mut self, count: usize) -> Result<Vec<f64>, ModelError> {
        (0..count).map(|_| self.number()).collect()
    }

    /// Identifiers separated by `:` after a `T`, `O` or `R` keyword.
    fn selectors(&mut self, max: usize) -> Result<Vec<Token>, ModelError> {
        let mut out = vec![self.next()?];
        while out.len() < max && self.peek().map(|t| t.text.as_str()) == Some(":") {
            self.pos += 1;
            out.push(self.next()?);
        }
        Ok(out)
    }

    /// Tokens up to the end of the line of `line`.
    fn rest_of_line(&mut self, line: usize) -> Vec<Token> {
        let mut out = Vec::new();
        while let Some(tok) = self.peek() {
            if tok.line != line {
                break;
            }
            out.push(tok.clone());
            self.pos += 1;
        }
        out
    }

    fn at_keyword(&self) -> bool {
        matches!(
            (self.peek(), self.peek_at(1)),
            (Some(k), Some(c)) if KEYWORDS.contains(&k.text.as_str()) && c.text == ":"
        )
    }
}

fn space_decl(tokens: Vec<Token>, line: usize, what: &'static str) -> Result<Space, ModelError> {
    match tokens.as_slice() {
        [] => Err(ModelError::Syntax {
            line,
            message: format!("`{what}` needs a count or a list of names"),
        }),
        [single] if single.text.parse::<usize>().is_ok() => {
            let count: usize = single.text.parse().unwrap_or(0);
            if count == 0 {
                return Err(ModelError::Syntax {
                    line,
                    message: format!("`{what}` count must be positive"),
                });
            }
            Ok(Space::from_names(
                (0..count).map(|i| i.to_string()).collect(),
            ))
        }
        names => {
            let names: Vec<String> = names.iter().map(|t| t.text.clone()).collect();
            let mut seen = std::collections::HashSet::new();
            if let Some(dup) = names.iter().find(|n| !seen.insert(n.as_str())) {
                return Err(ModelError::Syntax {
                    line,
                    message: format!("duplicate {what} name `{dup}`"),
                });
            }
            Ok(Space::from_names(names))
        }
    }
}

/// Parses the `.POMDP` text format and validates the result.
pub fn parse_pomdp(text: &str) -> Result<PomdpModel, ModelError> {
    let model = parse_pomdp_unchecked(text)?;
    match model.violations().into_iter().next() {
        Some(err) => Err(err),
        None => Ok(model.renormalized()),
    }
}

/// Parses without the stochasticity and discount checks, so that callers can
/// report every violation at once via [`PomdpModel::violations`].
pub fn parse_pomdp_unchecked(text: &str) -> Result<PomdpModel, ModelError> {
    let tokens = tokenize(text);
    let last_line = tokens.last().map_or(1, |t| t.line);
    let mut rd = Reader {
        tokens,
        pos: 0,
        last_line,
    };

    let mut discount = None;
    let mut cost = false;
    let mut states: Option<Space> = None;
    let mut actions: Option<Space> = None;
    let mut observations: Option<Space> = None;
    let mut start_tokens: Option<(usize, Vec<Token>)> = None;
    let mut body_start = None;

    // Preamble: header declarations until the first T/O/R statement.
    while rd.peek().is_some() {
        if !rd.at_keyword() {
            let tok = rd.next()?;
            return Err(ModelError::Syntax {
                line: tok.line,
                message: format!("unexpected `{}`", tok.text),
            });
        }
        let kw = rd
            .peek()
            .cloned()
            .ok_or(ModelError::MissingHeader("states"))?;
        if matches!(kw.text.as_str(), "T" | "O" | "R") {
            body_start = Some(rd.pos);
            break;
        }
        rd.pos += 2;
        match kw.text.as_str() {
            "discount" => discount = Some(rd.number()?),
            "values" => {
                let tok = rd.next()?;
                cost = match tok.text.as_str() {
                    "reward" => false,
                    "cost" => true,
                    other => {
                        return Err(ModelError::Syntax {
                            line: tok.line,
                            message: format!(
                                "`values` must be `reward` or `cost`, found `{other}`"
                            ),
                        })
                    }
                }
            }
            "states" => states = Some(space_decl(rd.rest_of_line(kw.line), kw.line, "states")?),
            "actions" => actions = Some(space_decl(rd.rest_of_line(kw.line), kw.line, "actions")?),
            "observations" => {
                observations = Some(space_decl(
                    rd.rest_of_line(kw.line),
                    kw.line,
                    "observations",
                )?)
            }
            "start" => {
                // Read lazily once the state count is known.
                let mut toks = Vec::new();
                while rd.peek().is_some() && !rd.at_keyword() {
                    toks.push(rd.next()?);
                }
                start_tokens = Some((kw.line, toks));
            }
            _ => unreachable!("keyword list is closed"),
        }
    }

    let states = states.ok_or(ModelError::MissingHeader("states"))?;
    let actions = actions.ok_or(ModelError::MissingHeader("actions"))?;
    let observations = observations.ok_or(ModelError::MissingHeader("observations"))?;
    let discount = discount.ok_or(ModelError::MissingHeader("discount"))?;
    let (n, k, m) = (states.len(), actions.len(), observations.len());

    let start = match start_tokens {
        None => None,
        Some((line, toks)) => Some(parse_start(&toks, line, n)?),
    };

    let mut transition = vec![0.0; k * n * n];
    let mut observation = vec![0.0; k * n * m];
    // Full R(a, s, s', o) table, reduced to r(s, a) at the end.
    let mut full_reward = vec![0.0; k * n * n * m];

    if let Some(p) = body_start {
        rd.pos = p;
    }
    while rd.peek().is_some() {
        if !rd.at_keyword() {
            let tok = rd.next()?;
            return Err(ModelError::Syntax {
                line: tok.line,
                message: format!("unexpected `{}`", tok.text),
            });
        }
        let kw = rd.next()?;
        rd.expect_colon()?;
        match kw.text.as_str() {
            "T" => {
                let sel = rd.selectors(3)?;
                let a = actions.resolve(&sel[0], "action")?;
                match sel.len() {
                    3 => {
                        let s = states.resolve(&sel[1], "state")?;
                        let t = states.resolve(&sel[2], "state")?;
                        let p = rd.number()?;
                        for a in actions.expand(a) {
                            for s in states.expand(s) {
                                for t in states.expand(t) {
                                    transition[(a * n + s) * n + t] = p;
                                }
                            }
                        }
                    }
                    2 => {
                        let s = states.resolve(&sel[1], "state")?;
                        let row = row_or_uniform(&mut rd, n)?;
                        for a in actions.expand(a) {
                            for s in states.expand(s) {
                                transition[(a * n + s) * n..(a * n + s + 1) * n]
                                    .copy_from_slice(&row);
                            }
                        }
                    }
                    _ => {
                        let mat = matrix_or_keyword(&mut rd, n, n, true)?;
                        for a in actions.expand(a) {
                            transition[a * n * n..(a + 1) * n * n].copy_from_slice(&mat);
                        }
                    }
                }
            }
            "O" => {
                let sel = rd.selectors(3)?;
                let a = actions.resolve(&sel[0], "action")?;
                match sel.len() {
                    3 => {
                        let t = states.resolve(&sel[1], "state")?;
                        let o = observations.resolve(&sel[2], "observation")?;
                        let p = rd.number()?;
                        for a in actions.expand(a) {
                            for t in states.expand(t) {
                                for o in observations.expand(o) {
                                    observation[(a * n + t) * m + o] = p;
                                }
                            }
                        }
                    }
                    2 => {
                        let t = states.resolve(&sel[1], "state")?;
                        let row = row_or_uniform(&mut rd, m)?;
                        for a in actions.expand(a) {
                            for t in states.expand(t) {
                                observation[(a * n + t) * m..(a * n + t + 1) * m]
                                    .copy_from_slice(&row);
                            }
                        }
                    }
                    _ => {
                        let mat = matrix_or_keyword(&mut rd, n, m, n == m)?;
                        for a in actions.expand(a) {
                            observation[a * n * m..(a + 1) * n * m].copy_from_slice(&mat);
                        }
                    }
                }
            }
            "R" => {
                let sel = rd.selectors(4)?;
                if sel.len() < 2 {
                    return Err(ModelError::Syntax {
                        line: kw.line,
                        message: "`R` needs at least an action and a start state".into(),
                    });
                }
                let a = actions.resolve(&sel[0], "action")?;
                let s = states.resolve(&sel[1], "state")?;
                let t = match sel.get(2) {
                    Some(tok) => Some(states.resolve(tok, "state")?),
                    None => None,
                };
                let o = match sel.get(3) {
                    Some(tok) => Some(observations.resolve(tok, "observation")?),
                    None => None,
                };
                // Values indexed over the unspecified trailing positions.
                let values = match sel.len() {
                    4 => vec![rd.number()?],
                    3 => rd.numbers(m)?,
                    _ => rd.numbers(n * m)?,
                };
                for a in actions.expand(a) {
                    for s in states.expand(s) {
                        for tt in 0..n {
                            if matches!(t, Some(Some(x)) if x != tt) {
                                continue;
                            }
                            for oo in 0..m {
                                if matches!(o, Some(Some(x)) if x != oo) {
                                    continue;
                                }
                                let v = match sel.len() {
                                    4 => values[0],
                                    3 => values[oo],
                                    _ => values[tt * m + oo],
                                };
                                full_reward[((a * n + s) * n + tt) * m + oo] =
                                    if cost { -v } else { v };
                            }
                        }
                    }
                }
            }
            other => {
                return Err(ModelError::Syntax {
                    line: kw.line,
                    message: format!("`{other}` must appear before the first T/O/R statement"),
                })
            }
        }
    }

    let mut reward = vec![0.0; k * n];
    for a in 0..k {
        for s in 0..n {
            let mut r = 0.0;
            for t in 0..n {
                let pt = transition[(a * n + s) * n + t];
                for o in 0..m {
                    r += pt
                        * observation[(a * n + t) * m + o]
                        * full_reward[((a * n + s) * n + t) * m + o];
                }
            }
            reward[a * n + s] = r;
        }
    }

    PomdpModel::new_unchecked(
        states.names,
        actions.names,
        observations.names,
        transition,
        observation,
        reward,
        discount,
        start,
    )
}

fn parse_start(toks: &[Token], line: usize, n: usize) -> Result<Vec<f64>, ModelError> {
    if toks.len() == 1 && toks[0].text == "uniform" {
        return Ok(vec![1.0 / n as f64; n]);
    }
    if toks.len() != n {
        return Err(ModelError::Syntax {
            line,
            message: format!("`start` needs `uniform` or {n} probabilities"),
        });
    }
    toks.iter()
        .map(|t| {
            t.text.parse::<f64>().map_err(|_| ModelError::Syntax {
                line: t.line,
                message: format!("expected a number, found `{}`", t.text),
            })
        })
        .collect()
}

fn row_or_uniform(rd: &mut Reader, len: usize) -> Result<Vec<f64>, ModelError> {
    if rd.peek().map(|t| t.text.as_str()) == Some("uniform") {
        rd.pos += 1;
        return Ok(vec![1.0 / len as f64; len]);
    }
    rd.numbers(len)
}

fn matrix_or_keyword(
    rd: &mut Reader,
    rows: usize,
    cols: usize,
    identity_ok: bool,
) -> Result<Vec<f64>, ModelError> {
    match rd.peek().map(|t| (t.text.clone(), t.line)) {
        Some((kw, _)) if kw == "uniform" => {
            rd.pos += 1;
            Ok(vec![1.0 / cols as f64; rows * cols])
        }
        Some((kw, line)) if kw == "identity" => {
            rd.pos += 1;
            if !identity_ok {
                return Err(ModelError::Syntax {
                    line,
                    message: "`identity` needs a square matrix".into(),
                });
            }
            let mut mat = vec![0.0; rows * cols];
            for i in 0..rows {
                mat[i * cols + i] = 1.0;
            }
            Ok(mat)
        }
        _ => rd.numbers(rows * cols),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const TINY: &str = "discount: 0.5\nvalues: reward\nstates: 1\nactions: 1\nobservations: 1\nT: 0\nidentity\nO: 0\nuniform\nR: * : * : * : * 0\n";

    #[test]
    fn singleton_model() {
        let m = parse_pomdp(TINY).unwrap();
        assert_eq!(
            (m.num_states(), m.num_actions(), m.num_observations()),
            (1, 1, 1)
        );
        assert_eq!(m.transition(0, 0, 0), 1.0);
        assert_eq!(m.observation(0, 0, 0), 1.0);
        assert_eq!(m.reward(0, 0), 0.0);
        assert_eq!(m.discount(), 0.5);
    }

    #[test]
    fn row_sum_violation_names_row() {
        let text = "discount: 0.9\nstates: a b\nactions: go\nobservations: x\nT: go : a\n0.5 0.4\nT: go : b\n0 1\nO: go\nuniform\n";
        match parse_pomdp(text) {
            Err(ModelError::Stochasticity {
                table,
                action,
                state,
                sum,
            }) => {
                assert_eq!(table, "transition");
                assert_eq!(action, "go");
                assert_eq!(state, "a");
                assert!((sum - 0.9).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_identifier_has_line() {
        let text = "discount: 0.9\nstates: a b\nactions: go\nobservations: x\nT: go\nidentity\nO: stay\nuniform\n";
        match parse_pomdp(text) {
            Err(ModelError::UnknownIdentifier { line, name, .. }) => {
                assert_eq!(line, 7);
                assert_eq!(name, "stay");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn syntax_error_has_line() {
        let text =
            "discount: 0.9\nstates: a b\nactions: go\nobservations: x\nT: go\n1 0\n0 banana\n";
        match parse_pomdp(text) {
            Err(ModelError::Syntax { line, .. }) => assert_eq!(line, 7),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rewards_are_marginalized() {
        let text = "discount: 0.9\nstates: a b\nactions: go\nobservations: x y\nT: go\n0.5 0.5\n0 1\nO: go\n1 0\n0 1\nR: go : a : a : * 4\nR: go : a : b : y 2\nR: go : b : * : * -1\n";
        let m = parse_pomdp(text).unwrap();
        assert!((m.reward(0, 0) - 3.0).abs() < 1e-12);
        assert!((m.reward(0, 1) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn cost_values_are_negated() {
        let text = "discount: 0.9\nvalues: cost\nstates: 2\nactions: 1\nobservations: 1\nT: 0\nidentity\nO: 0\nuniform\nR: 0 : 1 : * : * 3\n";
        let m = parse_pomdp(text).unwrap();
        assert_eq!(m.reward(0, 1), -3.0);
    }

    #[test]
    fn belief_update_deterministic() {
        let text = "discount: 0.9\nstates: 2\nactions: 1\nobservations: 2\nT: 0\n0 1\n1 0\nO: 0\nidentity\n";
        let m = parse_pomdp(text).unwrap();
        let b = Belief::corner(2, 0);
        let next = m.belief_update(&b, 0, 1).unwrap();
        assert_eq!(next.as_slice(), &[0.0, 1.0]);
        assert!(m.belief_update(&b, 0, 0).is_none());
        assert_eq!(m.observation_prob(&b, 0, 0), 0.0);
    }

    #[test]
    fn belief_new_rejects_bad_input() {
        assert!(Belief::new(vec![0.5, 0.6]).is_err());
        assert!(Belief::new(vec![-0.1, 1.1]).is_err());
        assert!(Belief::new(vec![0.25, 0.75]).is_ok());
    }
}
