//! Unconstrained discounted dynamic programming by policy iteration.

use crate::error::{Error, Result};
use crate::eval::state_values;
use crate::model::FiniteCmdp;
use crate::policy::DeterministicPolicy;

/// Pairs from which some policy avoids `-∞` rewards forever: finite reward
/// and every successor (with positive probability) is itself safe.
pub fn safe_pairs(model: &FiniteCmdp, reward: &[f64]) -> Vec<bool> {
    let mut pair_ok: Vec<bool> = reward.iter().map(|r| r.is_finite()).collect();
    let mut state_ok = vec![true; model.n_states()];
    loop {
        let mut changed = false;
        for s in 0..model.n_states() {
            if !state_ok[s] {
                continue;
            }
            for k in model.pairs_of(s) {
                if pair_ok[k]
                    && model
                        .transition(k)
                        .iter()
                        .any(|&(t, p)| p > 0.0 && !state_ok[t])
                {
                    pair_ok[k] = false;
                    changed = true;
                }
            }
            if !model.pairs_of(s).any(|k| pair_ok[k]) {
                state_ok[s] = false;
                changed = true;
            }
        }
        if !changed {
            return pair_ok;
        }
    }
}

/// Optimal deterministic policy and state values for a single per-pair
/// reward, which may contain `f64::NEG_INFINITY`. States that cannot avoid
/// `-∞` get value `-∞` and their lowest action.
pub fn policy_iteration(
    model: &FiniteCmdp,
    reward: &[f64],
) -> Result<(DeterministicPolicy, Vec<f64>)> {
    if reward.len() != model.n_pairs() {
        return Err(Error::Dimension(
            "reward vector length differs from the pair count".into(),
        ));
    }
    let safe = safe_pairs(model, reward);
    let n = model.n_states();
    let doomed: Vec<bool> = (0..n)
        .map(|s| !model.pairs_of(s).any(|k| safe[k]))
        .collect();
    let mut policy = DeterministicPolicy(
        (0..n)
            .map(|s| model.pairs_of(s).position(|k| safe[k]).unwrap_or(0))
            .collect(),
    );
    let eval_reward: Vec<f64> = reward
        .iter()
        .map(|&r| if r.is_finite() { r } else { 0.0 })
        .collect();
    let scale = 1.0 + eval_reward.iter().fold(0.0f64, |a, r| a.max(r.abs())) / (1.0 - model.beta());
    let beta = model.beta();

    for _ in 0..10_000 {
        let mut v = state_values(model, &policy.to_randomized(model), &eval_reward)?;
        for s in 0..n {
            if doomed[s] {
                v[s] = f64::NEG_INFINITY;
            }
        }
        let mut changed = false;
        for s in (0..n).filter(|&s| !doomed[s]) {
            let q = |k: usize| {
                reward[k]
                    + beta
                        * model
                            .transition(k)
                            .iter()
                            .map(|&(t, p)| p * v[t])
                            .sum::<f64>()
            };
            let current = q(model.pair_index(s, policy.0[s]));
            let (best_a, best_q) = model
                .pairs_of(s)
                .enumerate()
                .filter(|&(_, k)| safe[k])
                .map(|(a, k)| (a, q(k)))
                .fold((policy.0[s], current), |best, cur| {
                    if cur.1 > best.1 {
                        cur
                    } else {
                        best
                    }
                });
            if best_a != policy.0[s] && best_q > current + 1e-12 * scale {
                policy.0[s] = best_a;
                changed = true;
            }
        }
        if !changed {
            return Ok((policy, v));
        }
    }
    Err(Error::Numerical("policy iteration did not converge".into()))
}
