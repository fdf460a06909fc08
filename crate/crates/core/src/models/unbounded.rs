//! Truncated countable-state model with unbounded rewards.
//!
//! State order: `0*` (index 0), `0` (index 1), `0**` (index 2), then
//! `n = 1..=N` at index `2 + n`. At `0*` action `0` leads to `0`; action
//! `1/n` (index `n`) leads to `n` with probability `q_n` and to `0`
//! otherwise. Every other state has the single action `a0` leading to the
//! absorbing `0**`. Rewards are `r(0) = 1`, `r(n) = n`, zero elsewhere.

use super::BuiltModel;
use crate::assumptions::WeightSpec;
use crate::error::{Error, Result};
use crate::ext::Extended::Finite;
use crate::model::{Action, FiniteCmdp, ModelParts};
use crate::policy::DeterministicPolicy;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnboundedVariant {
    /// `q_n = 1/n`: values `β(2 - 1/n)` approach `2β` without attaining it.
    I,
    /// `q_n = 2^{-n}`: the supremum `5β/4` is attained at `n = 2` and `n = 3`.
    II,
}

impl UnboundedVariant {
    pub fn q(self, n: usize) -> f64 {
        match self {
            Self::I => 1.0 / n as f64,
            Self::II => 0.5f64.powi(n as i32),
        }
    }
}

/// Builds the model truncated at `n_trunc ≥ 3`, with `μ = δ_{0*}` and weight
/// `w(n) = n`, `w = 1` on the three special states.
pub fn unbounded_model(variant: UnboundedVariant, n_trunc: usize, beta: f64) -> Result<BuiltModel> {
    if n_trunc < 3 {
        return Err(Error::InvalidArgument(format!(
            "truncation {n_trunc} must be at least 3"
        )));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "discount factor {beta} outside (0, 1)"
        )));
    }
    let n_states = n_trunc + 3;
    let mut actions = vec![vec![Action::with_coord("0", 0.0)]];
    let mut transitions = vec![vec![(1, 1.0)]];
    for n in 1..=n_trunc {
        actions[0].push(Action::with_coord(format!("1/{n}"), 1.0 / n as f64));
        let q = variant.q(n);
        let mut row = vec![(1, 1.0 - q), (2 + n, q)];
        row.retain(|e| e.1 > 0.0);
        transitions.push(row);
    }
    let mut reward = vec![Finite(0.0); n_trunc + 1];
    for s in 1..n_states {
        actions.push(vec![Action::new("a0")]);
        transitions.push(vec![(2, 1.0)]);
        reward.push(Finite(match s {
            1 => 1.0,
            2 => 0.0,
            _ => (s - 2) as f64,
        }));
    }
    let mut mu = vec![0.0; n_states];
    mu[0] = 1.0;
    let model = FiniteCmdp::from_parts(ModelParts {
        n_states,
        actions,
        transitions,
        rewards: vec![reward],
        beta,
        mu,
        bounds: vec![],
    });
    let w = (0..n_states)
        .map(|s| if s >= 3 { (s - 2) as f64 } else { 1.0 })
        .collect();
    Ok(BuiltModel {
        model,
        weight: WeightSpec { w, c: None },
        warnings: Vec::new(),
    })
}

/// The policy choosing action `1/n` at `0*` (`n = 0` selects action `0`).
pub fn unbounded_policy(model: &FiniteCmdp, n: usize) -> DeterministicPolicy {
    let mut f = vec![0; model.n_states()];
    f[0] = n;
    DeterministicPolicy(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::evaluate_stationary;
    use crate::model::validate_model;

    #[test]
    fn policy_values_match_closed_form() {
        for variant in [UnboundedVariant::I, UnboundedVariant::II] {
            let b = unbounded_model(variant, 8, 0.8).unwrap();
            assert!(validate_model(&b.model).is_empty());
            for n in 1..=8 {
                let f = unbounded_policy(&b.model, n);
                let j = evaluate_stationary(&b.model, &f.to_randomized(&b.model))
                    .unwrap()
                    .objective()
                    .to_float();
                let q = variant.q(n);
                assert!((j - 0.8 * (1.0 - q + n as f64 * q)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn truncation_must_be_at_least_three() {
        assert!(unbounded_model(UnboundedVariant::II, 2, 0.5).is_err());
    }
}
