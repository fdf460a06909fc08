//! Exact evaluation of stationary policies through their occupancy measures.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::ext::Extended;
use crate::model::{FiniteCmdp, PerformanceVector};
use crate::policy::{OccupancyMeasure, RandomizedStationaryPolicy};
use crate::tolerance;
use crate::ExtReal;

/// Dense `I - β P_φ` (or its transpose) for a stationary policy.
fn discounted_system(
    model: &FiniteCmdp,
    phi: &RandomizedStationaryPolicy,
    transpose: bool,
) -> DMatrix<f64> {
    let n = model.n_states();
    let beta = model.beta();
    let mut a = DMatrix::<f64>::identity(n, n);
    for s in 0..n {
        for (act, k) in model.pairs_of(s).enumerate() {
            let w = phi.prob(s, act);
            if w == 0.0 {
                continue;
            }
            for &(next, p) in model.transition(k) {
                if transpose {
                    a[(next, s)] -= beta * w * p;
                } else {
                    a[(s, next)] -= beta * w * p;
                }
            }
        }
    }
    a
}

fn solve_checked(a: DMatrix<f64>, rhs: DVector<f64>) -> Result<DVector<f64>> {
    let x = a
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("discounted system is singular".into()))?;
    let residual = (&a * &x - &rhs).amax();
    let scale = 1.0 + x.amax();
    if residual > tolerance::LINEAR_RESIDUAL * scale {
        return Err(Error::Numerical(format!(
            "linear solve residual {residual:e} exceeds tolerance"
        )));
    }
    Ok(x)
}

/// Occupancy measure of `phi` from the state-marginal system
/// `q = μ + β P_φᵀ q`, then `Q(s,a) = q(s) φ(a|s)`.
pub fn occupancy_of_stationary(
    model: &FiniteCmdp,
    phi: &RandomizedStationaryPolicy,
) -> Result<OccupancyMeasure> {
    phi.check(model)?;
    let a = discounted_system(model, phi, true);
    let q = solve_checked(a, DVector::from_column_slice(model.mu()))?;
    let mut values = vec![0.0; model.n_pairs()];
    for s in 0..model.n_states() {
        let qs = q[s].max(0.0);
        for (act, k) in model.pairs_of(s).enumerate() {
            values[k] = qs * phi.prob(s, act);
        }
    }
    Ok(OccupancyMeasure { values })
}

/// `J_i = Σ r_i(s,a) Q(s,a)`, `-∞` as soon as `Q` puts mass above
/// [`tolerance::NEG_INF_MASS`] on a `-∞` reward.
pub fn evaluate_from_occupancy(
    model: &FiniteCmdp,
    q: &OccupancyMeasure,
) -> Result<PerformanceVector> {
    if q.values.len() != model.n_pairs() {
        return Err(Error::Dimension(format!(
            "occupancy has {} entries, model has {} feasible pairs",
            q.values.len(),
            model.n_pairs()
        )));
    }
    let values = (0..model.n_criteria())
        .map(|i| criterion_value(model.rewards(i), &q.values))
        .collect();
    Ok(PerformanceVector(values))
}

fn criterion_value(rewards: &[ExtReal], mass: &[f64]) -> ExtReal {
    let mut total = 0.0;
    for (r, &x) in rewards.iter().zip(mass) {
        match r {
            Extended::Finite(v) => total += v * x,
            Extended::NegInfinity if x > tolerance::NEG_INF_MASS => return Extended::NegInfinity,
            Extended::NegInfinity => {}
        }
    }
    Extended::Finite(total)
}

/// Performance vector of a randomized stationary policy.
pub fn evaluate_stationary(
    model: &FiniteCmdp,
    phi: &RandomizedStationaryPolicy,
) -> Result<PerformanceVector> {
    let q = occupancy_of_stationary(model, phi)?;
    evaluate_from_occupancy(model, &q)
}

/// Disintegration `φ(a|s) = Q(s,a) / q(s)`; states with zero marginal get a
/// point mass on their lowest-indexed action.
pub fn extract_policy(model: &FiniteCmdp, q: &OccupancyMeasure) -> RandomizedStationaryPolicy {
    let probs = (0..model.n_states())
        .map(|s| {
            let range = model.pairs_of(s);
            let masses: Vec<f64> = q.values[range].iter().map(|&x| x.max(0.0)).collect();
            let total: f64 = masses.iter().sum();
            if total > 0.0 {
                masses.iter().map(|x| x / total).collect()
            } else {
                let mut row = vec![0.0; masses.len()];
                row[0] = 1.0;
                row
            }
        })
        .collect();
    RandomizedStationaryPolicy { probs }
}

/// State values `v = (I - β P_φ)⁻¹ r_φ` for a finite per-pair reward vector.
pub fn state_values(
    model: &FiniteCmdp,
    phi: &RandomizedStationaryPolicy,
    reward: &[f64],
) -> Result<Vec<f64>> {
    let n = model.n_states();
    let mut r_phi = DVector::<f64>::zeros(n);
    for s in 0..n {
        for (act, k) in model.pairs_of(s).enumerate() {
            let w = phi.prob(s, act);
            if w > 0.0 {
                r_phi[s] += w * reward[k];
            }
        }
    }
    let a = discounted_system(model, phi, false);
    Ok(solve_checked(a, r_phi)?.iter().copied().collect())
}
