//! Repair model on `[0, 1]`: state 0 is perfect condition, 1 is broken, and
//! the action `a ∈ [0, 1]` is the repair intensity. Costs are minimized, so
//! they enter with a negative sign: `r_0 = -c_0(s, a)`, `r_1 = -s`, and the
//! bound `Σ β^{n-1} s_n ≤ d_1` becomes `J_1 ≥ -d_1`.

use statrs::function::gamma::ln_gamma;

use super::{tanh_sinh, BuiltModel, DiscretizationSpec};
use crate::assumptions::WeightSpec;
use crate::error::{Error, Result};
use crate::ext::Extended::Finite;
use crate::model::{Action, FiniteCmdp, ModelParts};

/// Successor density `Beta(1 + 2(1 - a), 1 + 2a)` in `t`. Full repair
/// (`a = 1`) gives `3(1 - t)²`, concentrated near the perfect state.
pub fn default_repair_density(t: f64, _s: f64, a: f64) -> f64 {
    let (p, q) = (1.0 + 2.0 * (1.0 - a), 1.0 + 2.0 * a);
    let ln_b = ln_gamma(p) + ln_gamma(q) - ln_gamma(p + q);
    ((p - 1.0) * t.ln() + (q - 1.0) * (1.0 - t).ln() - ln_b).exp()
}

/// `c_0(s, a) = a + a²/2`.
pub fn default_repair_cost(_s: f64, a: f64) -> f64 {
    a + 0.5 * a * a
}

pub fn repair_model_default(spec: &DiscretizationSpec, beta: f64, d1: f64) -> Result<BuiltModel> {
    repair_model(
        spec,
        beta,
        d1,
        &default_repair_density,
        &default_repair_cost,
    )
}

/// Builds the repair model on a uniform grid of `[0, 1]` (`spec.s_max` is
/// not used). Each grid state owns the cell of points nearest to it; cell
/// probabilities are the integral of `density(t, s, a)` over the cell.
/// Fails if some row integrates to a total farther than `1e-8` from one.
pub fn repair_model(
    spec: &DiscretizationSpec,
    beta: f64,
    d1: f64,
    density: &dyn Fn(f64, f64, f64) -> f64,
    cost: &dyn Fn(f64, f64) -> f64,
) -> Result<BuiltModel> {
    spec.check()?;
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "discount factor {beta} outside (0, 1)"
        )));
    }
    let n = spec.n_states;
    let h = spec.step(1.0);
    let cells: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let s = k as f64 * h;
            ((s - 0.5 * h).max(0.0), (s + 0.5 * h).min(1.0))
        })
        .collect();
    let acts: Vec<f64> = (0..spec.n_actions)
        .map(|j| j as f64 / (spec.n_actions - 1) as f64)
        .collect();

    let mut transitions = Vec::with_capacity(n * acts.len());
    let mut rewards = vec![
        Vec::with_capacity(n * acts.len()),
        Vec::with_capacity(n * acts.len()),
    ];
    let mut max_abs: f64 = 1.0;
    for k in 0..n {
        let s = k as f64 * h;
        for &a in &acts {
            let masses: Vec<f64> = cells
                .iter()
                .map(|&(lo, hi)| tanh_sinh(|t| density(t, s, a), lo, hi, spec.quad_nodes))
                .collect();
            let total: f64 = masses.iter().sum();
            if !((total - 1.0).abs() <= 1e-8) {
                return Err(Error::InvalidArgument(format!(
                    "density at s = {s}, a = {a} integrates to {total}, not 1 within 1e-8"
                )));
            }
            if masses.iter().any(|&m| m < 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "density at s = {s}, a = {a} is negative"
                )));
            }
            transitions.push(
                masses
                    .iter()
                    .enumerate()
                    .filter(|(_, &m)| m > 0.0)
                    .map(|(t, &m)| (t, m / total))
                    .collect(),
            );
            let c0 = cost(s, a);
            max_abs = max_abs.max(c0.abs()).max(s);
            rewards[0].push(Finite(-c0));
            rewards[1].push(Finite(-s));
        }
    }
    let model = FiniteCmdp::from_parts(ModelParts {
        n_states: n,
        actions: (0..n)
            .map(|_| {
                acts.iter()
                    .map(|&a| Action::with_coord(format!("{a}"), a))
                    .collect()
            })
            .collect(),
        transitions,
        rewards,
        beta,
        mu: vec![1.0 / n as f64; n],
        bounds: vec![-d1],
    });
    Ok(BuiltModel {
        model,
        weight: WeightSpec {
            w: vec![max_abs; n],
            c: None,
        },
        warnings: Vec::new(),
    })
}
