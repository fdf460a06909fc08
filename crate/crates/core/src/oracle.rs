//! Brute-force ground truth for tiny models: every deterministic stationary
//! policy is evaluated, and the constrained problem is solved as an LP over
//! mixture weights on the resulting performance vectors.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::eval::evaluate_stationary;
use crate::ext::Extended;
use crate::lp::LpStatus;
use crate::model::{FiniteCmdp, PerformanceVector};
use crate::policy::DeterministicPolicy;
use crate::simplex::{self, SparseColumn, StandardLp, Status};
use crate::tolerance;

/// Largest number of deterministic policies the oracle will enumerate.
pub const ENUMERATION_LIMIT: u128 = 1_000_000;

pub fn count_deterministic(model: &FiniteCmdp) -> u128 {
    (0..model.n_states())
        .map(|s| model.n_actions(s) as u128)
        .try_fold(1u128, |acc, n| acc.checked_mul(n))
        .unwrap_or(u128::MAX)
}

/// Policy number `index` in mixed-radix order, state 0 varying fastest.
pub fn deterministic_policy(model: &FiniteCmdp, mut index: u128) -> DeterministicPolicy {
    DeterministicPolicy(
        (0..model.n_states())
            .map(|s| {
                let n = model.n_actions(s) as u128;
                let a = index % n;
                index /= n;
                a as usize
            })
            .collect(),
    )
}

/// All deterministic stationary policies with their performance vectors, in
/// index order.
pub fn enumerate_deterministic(
    model: &FiniteCmdp,
) -> Result<Vec<(DeterministicPolicy, PerformanceVector)>> {
    model.ensure_valid()?;
    let count = count_deterministic(model);
    if count > ENUMERATION_LIMIT {
        return Err(Error::EnumerationGuard {
            count,
            limit: ENUMERATION_LIMIT,
        });
    }
    (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let f = deterministic_policy(model, i as u128);
            let v = evaluate_stationary(model, &f.to_randomized(model))?;
            Ok((f, v))
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct OracleResult {
    pub status: LpStatus,
    /// Optimal mixed `J_0`; `-∞` for `MinusInfinityObjective`, `None` when infeasible.
    pub value: Option<Extended<f64>>,
    /// `(policy index, weight)` pairs with positive weight.
    pub witness: Vec<(usize, f64)>,
    pub policies: Vec<(DeterministicPolicy, PerformanceVector)>,
}

impl OracleResult {
    pub fn witness_performance(&self) -> PerformanceVector {
        let n = self.policies.first().map_or(0, |p| p.1.len());
        PerformanceVector(
            (0..n)
                .map(|i| {
                    self.witness
                        .iter()
                        .fold(Extended::Finite(0.0), |acc, &(j, a)| {
                            acc.add(self.policies[j].1.get(i).weighted(a))
                        })
                })
                .collect(),
        )
    }
}

/// Mixture LP over the policies in `allowed`: `Σα = 1`, `Σ α_j J_i(f_j) ≥ d_i`,
/// maximizing `Σ α_j J_0(f_j)` when `with_objective`.
fn mixture_lp(
    model: &FiniteCmdp,
    perf: &[(DeterministicPolicy, PerformanceVector)],
    allowed: &[usize],
    with_objective: bool,
) -> Result<simplex::Solution<f64>> {
    let m = model.n_constraints();
    let mut columns = Vec::with_capacity(allowed.len() + m);
    let mut cost = Vec::with_capacity(allowed.len() + m);
    for &j in allowed {
        let v = &perf[j].1;
        let mut entries = vec![(0, 1.0)];
        for i in 1..=m {
            let x = v.get(i).finite().expect("excluded");
            if x != 0.0 {
                entries.push((i, x));
            }
        }
        columns.push(SparseColumn::new(entries));
        cost.push(if with_objective {
            v.objective().finite().expect("excluded")
        } else {
            0.0
        });
    }
    for i in 1..=m {
        columns.push(SparseColumn::new(vec![(i, -1.0)]));
        cost.push(0.0);
    }
    let mut rhs = vec![1.0];
    rhs.extend_from_slice(model.bounds());
    simplex::solve(&StandardLp {
        n_rows: m + 1,
        columns,
        rhs,
        cost,
    })
}

/// Constrained optimum over the convex hull of deterministic performance
/// vectors, with the same `-∞` conventions as the occupancy LP.
pub fn brute_force_cp(model: &FiniteCmdp) -> Result<OracleResult> {
    let policies = enumerate_deterministic(model)?;
    let m = model.n_constraints();
    let constraint_ok: Vec<usize> = (0..policies.len())
        .filter(|&j| (1..=m).all(|i| !policies[j].1.get(i).is_neg_inf()))
        .collect();
    let finite: Vec<usize> = constraint_ok
        .iter()
        .copied()
        .filter(|&j| !policies[j].1.objective().is_neg_inf())
        .collect();

    let collect_witness = |allowed: &[usize], x: &[f64]| -> Vec<(usize, f64)> {
        allowed
            .iter()
            .zip(x)
            .filter(|(_, &a)| a > tolerance::SUPPORT)
            .map(|(&j, &a)| (j, a))
            .collect()
    };

    let sol = mixture_lp(model, &policies, &finite, true)?;
    match sol.status {
        Status::Optimal => {
            let witness = collect_witness(&finite, &sol.x);
            Ok(OracleResult {
                status: LpStatus::Optimal,
                value: Some(Extended::Finite(sol.objective)),
                witness,
                policies,
            })
        }
        Status::Unbounded => Err(Error::Numerical("mixture LP reported unbounded".into())),
        Status::Infeasible => {
            if constraint_ok.len() > finite.len() {
                let feas = mixture_lp(model, &policies, &constraint_ok, false)?;
                if feas.status == Status::Optimal {
                    let witness = collect_witness(&constraint_ok, &feas.x);
                    return Ok(OracleResult {
                        status: LpStatus::MinusInfinityObjective,
                        value: Some(Extended::NegInfinity),
                        witness,
                        policies,
                    });
                }
            }
            Ok(OracleResult {
                status: LpStatus::Infeasible,
                value: None,
                witness: Vec::new(),
                policies,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::solve_cp;

    #[test]
    fn counts_and_decoding() {
        let m = crate::model::tests::two_state();
        assert_eq!(count_deterministic(&m), 2);
        assert_eq!(deterministic_policy(&m, 1).0, vec![1, 0]);
        let all = enumerate_deterministic(&m).unwrap();
        assert_eq!(all.len(), 2);
    }

    #[test]
    fn agrees_with_lp_on_two_state_model() {
        let m = crate::model::tests::two_state();
        let oracle = brute_force_cp(&m).unwrap();
        let lp = solve_cp(&m).unwrap();
        assert_eq!(oracle.status, lp.status);
        let a = oracle.value.unwrap().to_float();
        let b = lp.value().unwrap().to_float();
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        assert!(oracle.witness.len() <= m.n_constraints() + 1);
        let w = oracle.witness_performance();
        assert!(w.satisfies(m.bounds(), 1e-9));
    }

    #[test]
    fn unconstrained_value_is_best_vertex() {
        let mut parts = crate::model::tests::two_state().into_parts();
        parts.rewards.truncate(1);
        parts.bounds.clear();
        let m = FiniteCmdp::from_parts(parts);
        let oracle = brute_force_cp(&m).unwrap();
        let best = oracle
            .policies
            .iter()
            .map(|p| p.1.objective().to_float())
            .fold(f64::MIN, f64::max);
        assert!((oracle.value.unwrap().to_float() - best).abs() < 1e-12);
        assert_eq!(oracle.witness.len(), 1);
    }
}
