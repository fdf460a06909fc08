//! Numerical checks of weight-function conditions on a finite model.
//!
//! A weight `w ≥ 1` dominates the rewards (`r_i ≤ w`, or `|r_i| ≤ w` in the
//! two-sided form) and controls the drift `Σ_t w(t) p(t|s,a) ≤ δ w(s)`. The
//! operator `(Mv)(s) = max_a Σ_t v(t) p(t|s,a)` realizes the per-step
//! supremum over policies, so `⟨μ, M^{n-1} v⟩ = sup_π E[v(s_n)]` on a finite
//! model; the tail and uniform-integrability checks are built on its iterates.

use crate::error::{Error, Result};
use crate::ext::Extended;
use crate::model::FiniteCmdp;
use crate::policy::RandomizedStationaryPolicy;

#[derive(Clone, Debug, PartialEq)]
pub struct WeightSpec {
    pub w: Vec<f64>,
    /// Additive constant when the weight is of the form `w_0 + c`.
    pub c: Option<f64>,
}

impl WeightSpec {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if let Some(s) = w.iter().position(|&x| !(x >= 1.0) || !x.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "weight w({s}) = {} is not a finite value ≥ 1",
                w[s]
            )));
        }
        Ok(Self { w, c: None })
    }

    pub fn with_c(mut self, c: f64) -> Self {
        self.c = Some(c);
        self
    }

    pub fn constant(n_states: usize) -> Self {
        Self {
            w: vec![1.0; n_states],
            c: None,
        }
    }

    fn check(&self, model: &FiniteCmdp) -> Result<()> {
        if self.w.len() != model.n_states() {
            return Err(Error::Dimension(format!(
                "weight has {} entries, model has {} states",
                self.w.len(),
                model.n_states()
            )));
        }
        Ok(())
    }

    pub fn max(&self) -> f64 {
        self.w.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WorstPair {
    pub state: usize,
    pub action: usize,
    pub criterion: usize,
    /// `r_i(s,a) - w(s)` (or `|r_i(s,a)| - w(s)`); `+∞` for a `-∞` reward in
    /// the two-sided check.
    pub excess: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundCheck {
    pub holds: bool,
    pub worst: Option<WorstPair>,
}

/// `r_i(s,a) ≤ w(s)` for every pair and criterion, or `|r_i(s,a)| ≤ w(s)`
/// with `two_sided`. A `-∞` reward satisfies the one-sided bound and violates
/// the two-sided one.
pub fn check_bound(model: &FiniteCmdp, w: &WeightSpec, two_sided: bool) -> Result<BoundCheck> {
    w.check(model)?;
    let mut worst: Option<WorstPair> = None;
    for s in 0..model.n_states() {
        for (a, k) in model.pairs_of(s).enumerate() {
            for i in 0..model.n_criteria() {
                let excess = match model.reward(i, k) {
                    Extended::Finite(r) if two_sided => r.abs() - w.w[s],
                    Extended::Finite(r) => r - w.w[s],
                    Extended::NegInfinity if two_sided => f64::INFINITY,
                    Extended::NegInfinity => f64::NEG_INFINITY,
                };
                if worst.is_none_or(|p| excess > p.excess) {
                    worst = Some(WorstPair {
                        state: s,
                        action: a,
                        criterion: i,
                        excess,
                    });
                }
            }
        }
    }
    Ok(BoundCheck {
        holds: worst.is_none_or(|p| p.excess <= 0.0),
        worst,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeltaReport {
    pub delta: f64,
    pub beta_delta: f64,
    /// Pair attaining the maximal ratio.
    pub argmax: (usize, usize),
}

/// Tightest drift constant `δ = max_{(s,a)} Σ_t w(t) p(t|s,a) / w(s)`.
pub fn compute_delta(model: &FiniteCmdp, w: &WeightSpec) -> Result<DeltaReport> {
    w.check(model)?;
    let mut best = (f64::NEG_INFINITY, (0, 0));
    for s in 0..model.n_states() {
        for (a, k) in model.pairs_of(s).enumerate() {
            let ratio = model
                .transition(k)
                .iter()
                .map(|&(t, p)| w.w[t] * p)
                .sum::<f64>()
                / w.w[s];
            if ratio > best.0 {
                best = (ratio, (s, a));
            }
        }
    }
    Ok(DeltaReport {
        delta: best.0,
        beta_delta: model.beta() * best.0,
        argmax: best.1,
    })
}

/// `(Mv)(s) = max_{a ∈ A(s)} Σ_t v(t) p(t|s,a)`.
pub fn apply_m(model: &FiniteCmdp, v: &[f64]) -> Vec<f64> {
    (0..model.n_states())
        .map(|s| {
            model
                .pairs_of(s)
                .map(|k| {
                    model
                        .transition(k)
                        .iter()
                        .map(|&(t, p)| v[t] * p)
                        .sum::<f64>()
                })
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TailStatus {
    /// The bound at `n_max` is below `1e-6 ⟨μ, w⟩`.
    Verified,
    /// `βδ < 1` but the bound has not yet fallen below the threshold.
    Decaying,
    /// `βδ ≥ 1`: the tail cannot be closed analytically.
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TailReport {
    pub status: TailStatus,
    pub delta: f64,
    pub beta_delta: f64,
    pub mu_w: f64,
    /// `bounds[n-1]` bounds `sup_π E[Σ_{k≥n} β^{k-1} w(s_k)]`, `n = 1..=n_max`.
    /// Empty when inconclusive.
    pub bounds: Vec<f64>,
}

/// Upper bounds on the discounted weight tail.
///
/// Terms `t_k = β^{k-1} ⟨μ, M^{k-1} w⟩` are summed exactly up to `n_max`;
/// beyond it `M w ≤ δ w` gives `t_{k+1} ≤ βδ t_k`, so the remainder is closed
/// by `t_{n_max} βδ / (1 - βδ)`.
pub fn check_tail_bound(model: &FiniteCmdp, w: &WeightSpec, n_max: usize) -> Result<TailReport> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be positive".into()));
    }
    let d = compute_delta(model, w)?;
    let mu_w = dot(model.mu(), &w.w);
    if d.beta_delta >= 1.0 {
        return Ok(TailReport {
            status: TailStatus::Inconclusive,
            delta: d.delta,
            beta_delta: d.beta_delta,
            mu_w,
            bounds: Vec::new(),
        });
    }
    let beta = model.beta();
    let mut terms = Vec::with_capacity(n_max);
    let mut v = w.w.clone();
    let mut disc = 1.0;
    for k in 0..n_max {
        if k > 0 {
            v = apply_m(model, &v);
            disc *= beta;
        }
        terms.push(disc * dot(model.mu(), &v));
    }
    let closure = terms[n_max - 1] * d.beta_delta / (1.0 - d.beta_delta);
    let mut bounds = vec![0.0; n_max];
    let mut acc = closure;
    for n in (0..n_max).rev() {
        acc += terms[n];
        bounds[n] = acc;
    }
    let status = if bounds[n_max - 1] < 1e-6 * mu_w {
        TailStatus::Verified
    } else {
        TailStatus::Decaying
    };
    Ok(TailReport {
        status,
        delta: d.delta,
        beta_delta: d.beta_delta,
        mu_w,
        bounds,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct UiProfile {
    pub levels: Vec<f64>,
    /// `values[j] = sup E[w(s_n) 1{w(s_n) ≥ levels[j]}]` over the family.
    pub values: Vec<f64>,
    /// Family member attaining each supremum (`None` for the all-policy bound).
    pub argmax: Vec<Option<usize>>,
    pub step: usize,
}

/// Distribution of `s_n` (1-based) under a stationary policy.
pub fn state_distribution(
    model: &FiniteCmdp,
    phi: &RandomizedStationaryPolicy,
    n: usize,
) -> Vec<f64> {
    let mut d = model.mu().to_vec();
    for _ in 1..n {
        let mut next = vec![0.0; model.n_states()];
        for s in 0..model.n_states() {
            if d[s] == 0.0 {
                continue;
            }
            for (a, k) in model.pairs_of(s).enumerate() {
                let mass = d[s] * phi.prob(s, a);
                if mass == 0.0 {
                    continue;
                }
                for &(t, p) in model.transition(k) {
                    next[t] += mass * p;
                }
            }
        }
        d = next;
    }
    d
}

fn truncated_weight(w: &WeightSpec, level: f64) -> Vec<f64> {
    w.w.iter()
        .map(|&x| if x >= level { x } else { 0.0 })
        .collect()
}

/// Uniform-integrability profile over a declared policy family: for each
/// level `l`, the largest `E[w(s_n) 1{w(s_n) ≥ l}]` among the family members.
pub fn check_uniform_integrability(
    model: &FiniteCmdp,
    family: &[RandomizedStationaryPolicy],
    w: &WeightSpec,
    levels: &[f64],
    n: usize,
) -> Result<UiProfile> {
    w.check(model)?;
    if family.is_empty() || n == 0 {
        return Err(Error::InvalidArgument(
            "need a nonempty family and a step n ≥ 1".into(),
        ));
    }
    for phi in family {
        phi.check(model)?;
    }
    let dists: Vec<Vec<f64>> = family
        .iter()
        .map(|phi| state_distribution(model, phi, n))
        .collect();
    let mut values = Vec::with_capacity(levels.len());
    let mut argmax = Vec::with_capacity(levels.len());
    for &l in levels {
        let v = truncated_weight(w, l);
        let (idx, best) = dists
            .iter()
            .map(|d| dot(d, &v))
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |b, c| if c.1 > b.1 { c } else { b });
        values.push(best);
        argmax.push(Some(idx));
    }
    Ok(UiProfile {
        levels: levels.to_vec(),
        values,
        argmax,
        step: n,
    })
}

/// Same profile with the supremum over all policies, `⟨μ, M^{n-1} v^l⟩`.
pub fn ui_profile_all_policies(
    model: &FiniteCmdp,
    w: &WeightSpec,
    levels: &[f64],
    n: usize,
) -> Result<UiProfile> {
    w.check(model)?;
    if n == 0 {
        return Err(Error::InvalidArgument("step n must be ≥ 1".into()));
    }
    let values = levels
        .iter()
        .map(|&l| {
            let mut v = truncated_weight(w, l);
            for _ in 1..n {
                v = apply_m(model, &v);
            }
            dot(model.mu(), &v)
        })
        .collect();
    Ok(UiProfile {
        levels: levels.to_vec(),
        values,
        argmax: vec![None; levels.len()],
        step: n,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerReport {
    pub layer_forward: bool,
    /// First few `(state, action, successor)` transitions that skip a layer.
    pub violations: Vec<(usize, usize, usize)>,
    /// `m_k = max_{X_k} w`, `k = 1..=K`.
    pub layer_sup: Vec<f64>,
    pub partial_sum: f64,
    pub last_term: f64,
    /// `m_K / m_{K-1}` (1 for a single layer).
    pub growth: f64,
    /// `β · max(growth, 1)`; the clip treats a saturated weight as constant.
    pub ratio: f64,
    /// `m_K β^{K-1} / (1 - ratio)`, `+∞` when `ratio ≥ 1`.
    pub tail_estimate: f64,
    pub holds: bool,
}

/// Layered-growth condition. `layers[s]` is the first (1-based) layer
/// containing `s`, so `X_k = {s : layers[s] ≤ k}`.
///
/// Holds when every transition from `X_k` stays in `X_{k+1}` and the series
/// `Σ m_k β^{k-1}` converges: either the weight has saturated on the last
/// layer (`m_K = m_{K-1}`, so the remainder is geometric) or the extrapolated
/// tail is below `1e-9`.
pub fn check_layered_growth(
    model: &FiniteCmdp,
    layers: &[usize],
    w: &WeightSpec,
    beta: f64,
) -> Result<LayerReport> {
    w.check(model)?;
    if layers.len() != model.n_states() {
        return Err(Error::Layers(format!(
            "{} layer labels for {} states",
            layers.len(),
            model.n_states()
        )));
    }
    if layers.contains(&0) {
        return Err(Error::Layers("layers are numbered from 1".into()));
    }
    if !layers.contains(&1) {
        return Err(Error::Layers("the first layer is empty".into()));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "discount factor {beta} outside (0, 1)"
        )));
    }
    let k_max = *layers.iter().max().expect("nonempty");
    let mut violations = Vec::new();
    for s in 0..model.n_states() {
        for (a, k) in model.pairs_of(s).enumerate() {
            for &(t, p) in model.transition(k) {
                if p > 0.0 && layers[t] > layers[s] + 1 {
                    violations.push((s, a, t));
                }
            }
        }
    }
    let mut layer_sup = vec![f64::NEG_INFINITY; k_max];
    for (s, &l) in layers.iter().enumerate() {
        layer_sup[l - 1] = layer_sup[l - 1].max(w.w[s]);
    }
    for k in 1..k_max {
        layer_sup[k] = layer_sup[k].max(layer_sup[k - 1]);
    }
    let mut partial_sum = 0.0;
    let mut disc = 1.0;
    for &m in &layer_sup {
        partial_sum += m * disc;
        disc *= beta;
    }
    let m_last = layer_sup[k_max - 1];
    let last_term = m_last * beta.powi(k_max as i32 - 1);
    let growth = if k_max >= 2 {
        m_last / layer_sup[k_max - 2]
    } else {
        1.0
    };
    let ratio = beta * growth.max(1.0);
    let tail_estimate = if ratio < 1.0 {
        last_term / (1.0 - ratio)
    } else {
        f64::INFINITY
    };
    let layer_forward = violations.is_empty();
    let converges = ratio < 1.0 && (growth <= 1.0 || tail_estimate < 1e-9);
    violations.truncate(16);
    Ok(LayerReport {
        layer_forward,
        violations,
        layer_sup,
        partial_sum,
        last_term,
        growth,
        ratio,
        tail_estimate,
        holds: layer_forward && converges,
    })
}
