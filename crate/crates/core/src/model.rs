//! Problem instance, performance vectors and validation.

use std::fmt;

use crate::error::{Error, Result};
use crate::tolerance;
use crate::ExtReal;

/// An action label with an optional real coordinate (used by discretized
/// models to report policies in original units).
#[derive(Clone, Debug, PartialEq)]
pub struct Action {
    pub label: String,
    pub coord: Option<f64>,
}

impl Action {
    pub fn new(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            coord: None,
        }
    }

    pub fn with_coord(label: impl Into<String>, coord: f64) -> Self {
        Self {
            label: label.into(),
            coord: Some(coord),
        }
    }
}

/// Raw components of a [`FiniteCmdp`]. Feasible pairs `(s, a)` are numbered
/// state-major: pair `k` of state `s` is `offset(s) + a`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParts {
    pub n_states: usize,
    pub actions: Vec<Vec<Action>>,
    /// Sparse successor distribution per feasible pair: `(next_state, prob)`.
    pub transitions: Vec<Vec<(usize, f64)>>,
    /// `rewards[i][k]`: criterion `i` on pair `k`; criterion 0 is maximized.
    pub rewards: Vec<Vec<ExtReal>>,
    pub beta: f64,
    pub mu: Vec<f64>,
    /// Constraint levels `d_1..d_m` for criteria `1..=m`.
    pub bounds: Vec<f64>,
}

/// Constrained discounted MDP on a finite state space.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteCmdp {
    parts: ModelParts,
    offsets: Vec<usize>,
}

impl FiniteCmdp {
    /// Assembles a model without validating it; see [`validate_model`].
    pub fn from_parts(parts: ModelParts) -> Self {
        let mut offsets = Vec::with_capacity(parts.actions.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for acts in &parts.actions {
            acc += acts.len();
            offsets.push(acc);
        }
        Self { parts, offsets }
    }

    pub fn parts(&self) -> &ModelParts {
        &self.parts
    }

    pub fn into_parts(self) -> ModelParts {
        self.parts
    }

    pub fn n_states(&self) -> usize {
        self.parts.n_states
    }

    pub fn n_pairs(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    /// Number of criteria, `m + 1`.
    pub fn n_criteria(&self) -> usize {
        self.parts.rewards.len()
    }

    /// Number of constraints, `m`.
    pub fn n_constraints(&self) -> usize {
        self.parts.bounds.len()
    }

    pub fn beta(&self) -> f64 {
        self.parts.beta
    }

    pub fn mu(&self) -> &[f64] {
        &self.parts.mu
    }

    pub fn bounds(&self) -> &[f64] {
        &self.parts.bounds
    }

    pub fn actions(&self, s: usize) -> &[Action] {
        &self.parts.actions[s]
    }

    pub fn n_actions(&self, s: usize) -> usize {
        self.parts.actions[s].len()
    }

    pub fn pair_index(&self, s: usize, a: usize) -> usize {
        debug_assert!(a < self.n_actions(s));
        self.offsets[s] + a
    }

    /// Pair indices of state `s`.
    pub fn pairs_of(&self, s: usize) -> std::ops::Range<usize> {
        self.offsets[s]..self.offsets[s + 1]
    }

    /// `(state, action)` of pair `k`.
    pub fn pair(&self, k: usize) -> (usize, usize) {
        let s = self.offsets.partition_point(|&o| o <= k) - 1;
        (s, k - self.offsets[s])
    }

    pub fn transition(&self, k: usize) -> &[(usize, f64)] {
        &self.parts.transitions[k]
    }

    pub fn reward(&self, criterion: usize, k: usize) -> ExtReal {
        self.parts.rewards[criterion][k]
    }

    pub fn rewards(&self, criterion: usize) -> &[ExtReal] {
        &self.parts.rewards[criterion]
    }

    /// Largest `|r_i(s,a)|` over finite rewards of every criterion.
    pub fn max_abs_finite_reward(&self) -> f64 {
        self.parts
            .rewards
            .iter()
            .flatten()
            .filter_map(|r| r.finite())
            .fold(0.0, |acc, r| acc.max(r.abs()))
    }

    /// Returns the model unchanged, or [`Error::InvalidModel`] when validation
    /// reports any error.
    pub fn ensure_valid(&self) -> Result<()> {
        let report = validate_model(self);
        if report.has_errors() {
            Err(Error::InvalidModel(report))
        } else {
            Ok(())
        }
    }
}

/// `(J_0, J_1, …, J_m)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PerformanceVector(pub Vec<ExtReal>);

impl PerformanceVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn objective(&self) -> ExtReal {
        self.0[0]
    }

    pub fn get(&self, i: usize) -> ExtReal {
        self.0[i]
    }

    /// Coordinate-wise `max |self_i - other_i|` with `-∞` matching `-∞`.
    pub fn max_abs_diff(&self, other: &PerformanceVector) -> f64 {
        assert_eq!(
            self.len(),
            other.len(),
            "performance vectors differ in length"
        );
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.abs_diff(*b))
            .fold(0.0, f64::max)
    }

    /// `J_i ≥ d_i - tol` for every constraint.
    pub fn satisfies(&self, bounds: &[f64], tol: f64) -> bool {
        bounds
            .iter()
            .enumerate()
            .all(|(i, &d)| matches!(self.0[i + 1].finite(), Some(j) if j >= d - tol))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationIssue {
    pub severity: Severity,
    pub location: String,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn has_errors(&self) -> bool {
        self.issues.iter().any(|i| i.severity == Severity::Error)
    }

    fn error(&mut self, location: impl Into<String>, message: impl Into<String>) {
        self.issues.push(ValidationIssue {
            severity: Severity::Error,
            location: location.into(),
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev} at {}: {}", self.location, self.message)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for issue in &self.issues {
            writeln!(f, "{issue}")?;
        }
        Ok(())
    }
}

/// Checks every structural invariant of the instance and reports one record
/// per violation.
pub fn validate_model(model: &FiniteCmdp) -> ValidationReport {
    let p = model.parts();
    let mut report = ValidationReport::default();

    if p.n_states == 0 {
        report.error("n_states", "state space is empty");
    }
    if p.actions.len() != p.n_states {
        report.error(
            "actions",
            format!("{} action lists for {} states", p.actions.len(), p.n_states),
        );
    }
    for (s, acts) in p.actions.iter().enumerate() {
        if acts.is_empty() {
            report.error(format!("actions[{s}]"), "action set is empty");
        }
        for (a, act) in acts.iter().enumerate() {
            if act.coord.is_some_and(|c| !c.is_finite()) {
                report.error(format!("actions[{s}][{a}]"), "coordinate is not finite");
            }
        }
    }

    let n_pairs = model.n_pairs();
    if p.transitions.len() != n_pairs {
        report.error(
            "transition",
            format!(
                "{} transition rows for {} feasible pairs",
                p.transitions.len(),
                n_pairs
            ),
        );
    } else {
        for (k, row) in p.transitions.iter().enumerate() {
            let (s, a) = model.pair(k);
            let loc = format!("transition[s={s}, a={a}]");
            let mut sum = 0.0;
            let mut well_formed = true;
            for &(next, prob) in row {
                if next >= p.n_states {
                    report.error(&loc, format!("successor {next} out of range"));
                    well_formed = false;
                }
                if !prob.is_finite() || prob < 0.0 {
                    report.error(&loc, format!("invalid probability {prob}"));
                    well_formed = false;
                }
                sum += prob;
            }
            if well_formed && (sum - 1.0).abs() > tolerance::STRUCTURAL {
                report.error(&loc, format!("row sums to {sum}, expected 1"));
            }
        }
    }

    if p.rewards.is_empty() {
        report.error("rewards", "at least the objective criterion is required");
    }
    for (i, table) in p.rewards.iter().enumerate() {
        if table.len() != n_pairs {
            report.error(
                format!("rewards[{i}]"),
                format!("{} entries for {} feasible pairs", table.len(), n_pairs),
            );
        }
    }
    if !p.rewards.is_empty() && p.bounds.len() + 1 != p.rewards.len() {
        report.error(
            "bounds",
            format!(
                "{} bounds for {} constrained criteria",
                p.bounds.len(),
                p.rewards.len() - 1
            ),
        );
    }
    for (i, d) in p.bounds.iter().enumerate() {
        if !d.is_finite() {
            report.error(
                format!("bounds[{}]", i + 1),
                "constraint level is not finite",
            );
        }
    }

    if !(p.beta > 0.0 && p.beta < 1.0) {
        report.error("beta", format!("discount factor {} outside (0, 1)", p.beta));
    }

    if p.mu.len() != p.n_states {
        report.error(
            "mu",
            format!("{} entries for {} states", p.mu.len(), p.n_states),
        );
    } else {
        if let Some(s) = p.mu.iter().position(|&x| !x.is_finite() || x < 0.0) {
            report.error(format!("mu[{s}]"), format!("invalid mass {}", p.mu[s]));
        } else {
            let total: f64 = p.mu.iter().sum();
            if (total - 1.0).abs() > tolerance::STRUCTURAL {
                report.error("mu", format!("initial distribution sums to {total}"));
            }
        }
    }

    report
}
