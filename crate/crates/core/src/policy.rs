//! Stationary policies and occupancy measures.

use crate::error::{Error, Result};
use crate::model::FiniteCmdp;
use crate::tolerance;

/// Selector `f` with `f(s) ∈ A(s)`, stored as action indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DeterministicPolicy(pub Vec<usize>);

impl DeterministicPolicy {
    pub fn action(&self, s: usize) -> usize {
        self.0[s]
    }

    /// Lowest-indexed action everywhere.
    pub fn first_actions(model: &FiniteCmdp) -> Self {
        Self(vec![0; model.n_states()])
    }

    pub fn to_randomized(&self, model: &FiniteCmdp) -> RandomizedStationaryPolicy {
        let probs = (0..model.n_states())
            .map(|s| {
                let mut row = vec![0.0; model.n_actions(s)];
                row[self.0[s]] = 1.0;
                row
            })
            .collect();
        RandomizedStationaryPolicy { probs }
    }

    pub fn check(&self, model: &FiniteCmdp) -> Result<()> {
        if self.0.len() != model.n_states() {
            return Err(Error::Dimension(format!(
                "policy covers {} states, model has {}",
                self.0.len(),
                model.n_states()
            )));
        }
        if let Some(s) = (0..model.n_states()).find(|&s| self.0[s] >= model.n_actions(s)) {
            return Err(Error::Dimension(format!(
                "action {} not available in state {s}",
                self.0[s]
            )));
        }
        Ok(())
    }
}

/// Per-state distribution `φ(·|s)` over `A(s)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomizedStationaryPolicy {
    pub probs: Vec<Vec<f64>>,
}

impl RandomizedStationaryPolicy {
    pub fn uniform(model: &FiniteCmdp) -> Self {
        let probs = (0..model.n_states())
            .map(|s| {
                let k = model.n_actions(s);
                vec![1.0 / k as f64; k]
            })
            .collect();
        Self { probs }
    }

    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs[s][a]
    }

    /// Action of state `s` when the row is a point mass.
    pub fn point_mass(&self, s: usize) -> Option<usize> {
        let row = &self.probs[s];
        let a = row.iter().position(|&p| p > 0.0)?;
        (row[a] >= 1.0 - tolerance::STRUCTURAL).then_some(a)
    }

    /// Shape, nonnegativity and unit-sum checks against `model`.
    pub fn check(&self, model: &FiniteCmdp) -> Result<()> {
        if self.probs.len() != model.n_states() {
            return Err(Error::Dimension(format!(
                "policy covers {} states, model has {}",
                self.probs.len(),
                model.n_states()
            )));
        }
        for (s, row) in self.probs.iter().enumerate() {
            if row.len() != model.n_actions(s) {
                return Err(Error::Dimension(format!(
                    "state {s}: {} probabilities for {} actions",
                    row.len(),
                    model.n_actions(s)
                )));
            }
            if row.iter().any(|&p| !p.is_finite() || p < 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "state {s}: negative probability"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > tolerance::STRUCTURAL {
                return Err(Error::InvalidArgument(format!(
                    "state {s}: probabilities sum to {sum}"
                )));
            }
        }
        Ok(())
    }
}

/// Discounted state-action visitation measure, one entry per feasible pair.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupancyMeasure {
    pub values: Vec<f64>,
}

impl OccupancyMeasure {
    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum()
    }

    /// State marginal `q(s) = Σ_a Q(s,a)`.
    pub fn marginal(&self, model: &FiniteCmdp) -> Vec<f64> {
        (0..model.n_states())
            .map(|s| model.pairs_of(s).map(|k| self.values[k]).sum())
            .collect()
    }

    /// Largest violation of the flow identity
    /// `q(s) - β Σ p(s|s',a') Q(s',a') = μ(s)`.
    pub fn flow_residual(&self, model: &FiniteCmdp) -> f64 {
        let mut lhs = self.marginal(model);
        let beta = model.beta();
        for (k, &mass) in self.values.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            for &(next, p) in model.transition(k) {
                lhs[next] -= beta * p * mass;
            }
        }
        lhs.iter()
            .zip(model.mu())
            .map(|(l, m)| (l - m).abs())
            .fold(0.0, f64::max)
    }

    /// `|total mass - 1/(1-β)|`.
    pub fn mass_residual(&self, model: &FiniteCmdp) -> f64 {
        (self.total_mass() - 1.0 / (1.0 - model.beta())).abs()
    }

    /// Pointwise `Σ_j w_j Q_j`.
    pub fn mixture(parts: &[(f64, &OccupancyMeasure)]) -> OccupancyMeasure {
        let len = parts.first().map_or(0, |(_, q)| q.values.len());
        let mut values = vec![0.0; len];
        for (w, q) in parts {
            for (v, x) in values.iter_mut().zip(&q.values) {
                *v += w * x;
            }
        }
        OccupancyMeasure { values }
    }

    pub fn max_abs_diff(&self, other: &OccupancyMeasure) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}
