//! Resource-growth models on `[0, s_max]`: deterministic square-root
//! regrowth (`growth_model`) and regrowth with additive noise (`noisy_growth_model`).

use super::{thin_indices, BuiltModel, DiscretizationSpec};
use crate::assumptions::WeightSpec;
use crate::error::{Error, Result};
use crate::ext::Extended::{self, Finite, NegInfinity};
use crate::model::{Action, FiniteCmdp, ModelParts};

/// How a successor that falls between grid points is placed on the grid.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SuccessorMapping {
    /// All mass on the nearest grid state.
    #[default]
    Nearest,
    /// Split between the two neighbouring grid states, preserving the mean.
    Interpolate,
}

/// Analytic drift bound `1 + 1/(4 + 4c)` stated for the deterministic model.
pub fn growth_delta_bound(c: f64) -> f64 {
    1.0 + 1.0 / (4.0 + 4.0 * c)
}

/// Exact `sup_s (√s + c)/(s + c)`, attained at `√s = √(c² + c) − c`.
pub fn growth_delta_sup(c: f64) -> f64 {
    let u = (c * c + c).sqrt() - c;
    1.0 + (u - u * u) / (u * u + c)
}

/// Drift bound `1 + ½ / (√(m̄² + c) − m̄)` for the noisy model.
pub fn noisy_growth_delta_bound(c: f64, m_bar: f64) -> f64 {
    1.0 + 0.5 / ((m_bar * m_bar + c).sqrt() - m_bar)
}

fn check_common(c: f64, spec: &DiscretizationSpec, beta: f64) -> Result<()> {
    spec.check()?;
    if !(c >= 1.0 && c.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "weight constant c = {c} must be ≥ 1"
        )));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "discount factor {beta} outside (0, 1)"
        )));
    }
    Ok(())
}

/// Action grid at state `k`: state-grid points in `[0, s_k]`, thinned.
fn actions_at(k: usize, h: f64, spec: &DiscretizationSpec) -> Vec<(usize, Action)> {
    thin_indices(k, spec.n_actions)
        .into_iter()
        .map(|j| {
            let a = j as f64 * h;
            (j, Action::with_coord(format!("{a}"), a))
        })
        .collect()
}

/// Places mass `p` at position `y` on the grid; returns the clipped part.
fn bin(
    row: &mut Vec<(usize, f64)>,
    y: f64,
    p: f64,
    h: f64,
    n: usize,
    mapping: SuccessorMapping,
) -> f64 {
    let pos = y / h;
    let top = (n - 1) as f64;
    if pos >= top {
        row.push((n - 1, p));
        return if pos > top * (1.0 + 1e-12) { p } else { 0.0 };
    }
    match mapping {
        SuccessorMapping::Nearest => row.push((pos.round() as usize, p)),
        SuccessorMapping::Interpolate => {
            let k = pos.floor();
            let theta = pos - k;
            row.push((k as usize, p * (1.0 - theta)));
            if theta > 0.0 {
                row.push((k as usize + 1, p * theta));
            }
        }
    }
    0.0
}

fn merge(mut row: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    row.sort_by_key(|e| e.0);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(row.len());
    for (t, p) in row {
        match out.last_mut() {
            Some(last) if last.0 == t => last.1 += p,
            _ => out.push((t, p)),
        }
    }
    out.retain(|e| e.1 > 0.0);
    out
}

fn assemble(
    spec: &DiscretizationSpec,
    c: f64,
    beta: f64,
    d1: f64,
    mu: Vec<f64>,
    mut pair: impl FnMut(f64, f64) -> (Vec<(usize, f64)>, [Extended<f64>; 2]),
) -> BuiltModel {
    let n = spec.n_states;
    let h = spec.step(spec.s_max);
    let mut actions = Vec::with_capacity(n);
    let mut transitions = Vec::new();
    let mut rewards = vec![Vec::new(), Vec::new()];
    for k in 0..n {
        let s = k as f64 * h;
        let acts = actions_at(k, h, spec);
        for (j, _) in &acts {
            let (row, r) = pair(s, *j as f64 * h);
            transitions.push(row);
            rewards[0].push(r[0]);
            rewards[1].push(r[1]);
        }
        actions.push(acts.into_iter().map(|(_, a)| a).collect());
    }
    let model = FiniteCmdp::from_parts(ModelParts {
        n_states: n,
        actions,
        transitions,
        rewards,
        beta,
        mu,
        bounds: vec![d1],
    });
    let w = (0..n).map(|k| k as f64 * h + c).collect();
    BuiltModel {
        model,
        weight: WeightSpec { w, c: Some(c) },
        warnings: Vec::new(),
    }
}

/// Deterministic growth model `s' = √(s − a)` with `r_0 = a − 1/a`,
/// `r_1 = ln s` and weight `w(s) = s + c`.
///
/// `r_0(s, 0)` and `r_1(0, ·)` are `-∞`. The initial distribution is uniform
/// over the grid states with `s ≥ 1` (the top state if there are none).
pub fn growth_model(
    c: f64,
    spec: &DiscretizationSpec,
    beta: f64,
    d1: f64,
    mapping: SuccessorMapping,
) -> Result<BuiltModel> {
    check_common(c, spec, beta)?;
    let n = spec.n_states;
    let h = spec.step(spec.s_max);
    let mut mu: Vec<f64> = (0..n)
        .map(|k| if k as f64 * h >= 1.0 { 1.0 } else { 0.0 })
        .collect();
    if mu.iter().all(|&x| x == 0.0) {
        mu[n - 1] = 1.0;
    }
    let total: f64 = mu.iter().sum();
    mu.iter_mut().for_each(|x| *x /= total);
    Ok(assemble(spec, c, beta, d1, mu, |s, a| {
        let mut row = Vec::with_capacity(2);
        bin(&mut row, (s - a).max(0.0).sqrt(), 1.0, h, n, mapping);
        let r0 = if a == 0.0 {
            NegInfinity
        } else {
            Finite(a - 1.0 / a)
        };
        let r1 = if s == 0.0 {
            NegInfinity
        } else {
            Finite(s.ln())
        };
        (merge(row), [r0, r1])
    }))
}

/// Equal-probability cells of the exponential law with mean `m_bar`,
/// truncated at its `1 − 1e-8` quantile; nodes are the cell conditional means.
fn exponential_nodes(m_bar: f64, k: usize) -> Vec<f64> {
    let z = 1.0 - 1e-8;
    let edge = |j: usize| -m_bar * (1.0 - z * j as f64 / k as f64).ln();
    let tail = |x: f64| (x + m_bar) * (-x / m_bar).exp();
    let surv = |x: f64| (-x / m_bar).exp();
    (0..k)
        .map(|j| {
            let (x1, x2) = (edge(j), edge(j + 1));
            (tail(x1) - tail(x2)) / (surv(x1) - surv(x2))
        })
        .collect()
}

/// Noisy growth model `s' = s − a + √(s − a) + ξ` with `r_0 = √a`,
/// `r_1 = ln(s + 1)`, weight `w(s) = s + c` and a uniform initial law.
///
/// `ξ` is exponential with mean `m_bar`, truncated and renormalized, and
/// integrated by `quad_nodes` equal-probability cells (`m_bar = 0` gives
/// `ξ ≡ 0`). Successor mass is split linearly between neighbouring grid
/// states; mass beyond `s_max` is clipped to the top state and reported.
pub fn noisy_growth_model(
    c: f64,
    m_bar: f64,
    spec: &DiscretizationSpec,
    beta: f64,
    d1: f64,
) -> Result<BuiltModel> {
    check_common(c, spec, beta)?;
    if !(m_bar >= 0.0 && m_bar.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "noise mean {m_bar} must be nonnegative"
        )));
    }
    let n = spec.n_states;
    let h = spec.step(spec.s_max);
    let nodes = if m_bar == 0.0 {
        vec![0.0]
    } else {
        exponential_nodes(m_bar, spec.quad_nodes)
    };
    let p = 1.0 / nodes.len() as f64;
    let mut clipped: f64 = 0.0;
    let mut built = assemble(spec, c, beta, d1, vec![1.0 / n as f64; n], |s, a| {
        let x = (s - a).max(0.0);
        let mut row = Vec::with_capacity(2 * nodes.len());
        let mut lost = 0.0;
        for &xi in &nodes {
            lost += bin(
                &mut row,
                x + x.sqrt() + xi,
                p,
                h,
                n,
                SuccessorMapping::Interpolate,
            );
        }
        clipped = clipped.max(lost);
        (merge(row), [Finite(a.sqrt()), Finite((s + 1.0).ln())])
    });
    if clipped > 1e-3 {
        built.warnings.push(format!(
            "up to {clipped:.3e} of a transition's mass lies beyond s_max = {} and was clipped; widen the grid range",
            spec.s_max
        ));
    }
    Ok(built)
}
