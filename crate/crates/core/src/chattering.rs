//! Decomposition of an optimal occupancy measure into deterministic selectors
//! and synthesis of the equivalent chattering policy.
//!
//! Given the optimal occupancy `Q*`, the candidate selectors choose one
//! supported action at every randomized state. The target performance vector
//! is written as a convex combination `Σ α_j 𝒱(f_j)` by a small feasibility
//! LP, pruned to an affinely independent support, and the per-state weights
//! are `γ_j(s) = α_j q^{f_j}(s) / Σ_k α_k q^{f_k}(s)`. The randomized policy
//! `φ(a|s) = Σ_j γ_j(s) 1{f_j(s) = a}` then has occupancy `Σ α_j Q^{f_j}`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::dp::policy_iteration;
use crate::error::{Error, Result};
use crate::eval::{evaluate_from_occupancy, evaluate_stationary, occupancy_of_stationary};
use crate::ext::Extended;
use crate::lp::{LpStatus, SolveReport};
use crate::model::{FiniteCmdp, PerformanceVector};
use crate::policy::{DeterministicPolicy, OccupancyMeasure, RandomizedStationaryPolicy};
use crate::simplex::{self, StandardLp, Status};
use crate::tolerance;

/// `N` deterministic selectors mixed with state-dependent weights.
#[derive(Clone, Debug, PartialEq)]
pub struct ChatteringPolicy {
    pub selectors: Vec<DeterministicPolicy>,
    /// `weights[s][j] = γ_j(s)`.
    pub weights: Vec<Vec<f64>>,
}

impl ChatteringPolicy {
    pub fn n_selectors(&self) -> usize {
        self.selectors.len()
    }

    /// `φ(a|s) = Σ_j γ_j(s) 1{f_j(s) = a}`.
    pub fn to_randomized(&self, model: &FiniteCmdp) -> RandomizedStationaryPolicy {
        let probs = (0..model.n_states())
            .map(|s| {
                let mut row = vec![0.0; model.n_actions(s)];
                for (f, g) in self.selectors.iter().zip(&self.weights[s]) {
                    row[f.action(s)] += g;
                }
                row
            })
            .collect();
        RandomizedStationaryPolicy { probs }
    }
}

#[derive(Clone, Debug)]
pub struct Decomposition {
    pub selectors: Vec<DeterministicPolicy>,
    /// Mixture coefficients, all strictly positive, summing to one.
    pub alphas: Vec<f64>,
    pub occupancies: Vec<OccupancyMeasure>,
    pub marginals: Vec<Vec<f64>>,
    pub performances: Vec<PerformanceVector>,
}

impl Decomposition {
    pub fn len(&self) -> usize {
        self.selectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selectors.is_empty()
    }

    /// `Σ α_j 𝒱(f_j)`.
    pub fn mixed_performance(&self) -> PerformanceVector {
        let dim = self.performances[0].len();
        let values = (0..dim)
            .map(|i| {
                self.alphas
                    .iter()
                    .zip(&self.performances)
                    .fold(Extended::Finite(0.0), |acc, (&a, v)| {
                        acc.add(v.get(i).weighted(a))
                    })
            })
            .collect();
        PerformanceVector(values)
    }

    /// `Σ α_j Q^{f_j}`.
    pub fn mixed_occupancy(&self) -> OccupancyMeasure {
        let parts: Vec<(f64, &OccupancyMeasure)> =
            self.alphas.iter().copied().zip(&self.occupancies).collect();
        OccupancyMeasure::mixture(&parts)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ChatteringOptions {
    /// Abort support-product enumeration above this many selectors.
    pub max_candidates: usize,
    /// Cap on extra selectors produced by the Lagrangian fallback.
    pub fallback_cap: usize,
    /// Relative step for perturbing the constraint multipliers.
    pub perturbation: f64,
}

impl Default for ChatteringOptions {
    fn default() -> Self {
        Self {
            max_candidates: 4096,
            fallback_cap: 64,
            perturbation: 1e-6,
        }
    }
}

/// Supported action indices per state (`Q(s,a) > tolerance::SUPPORT`);
/// zero-marginal states map to their lowest action.
fn supported_actions(model: &FiniteCmdp, q: &OccupancyMeasure) -> Vec<Vec<usize>> {
    (0..model.n_states())
        .map(|s| {
            let acts: Vec<usize> = model
                .pairs_of(s)
                .enumerate()
                .filter(|&(_, k)| q.values[k] > tolerance::SUPPORT)
                .map(|(a, _)| a)
                .collect();
            if acts.is_empty() {
                let total: f64 = model.pairs_of(s).map(|k| q.values[k].max(0.0)).sum();
                if total > 0.0 {
                    // mass below the support threshold: keep the heaviest action
                    let best = model
                        .pairs_of(s)
                        .enumerate()
                        .max_by(|x, y| q.values[x.1].total_cmp(&q.values[y.1]))
                        .map_or(0, |(a, _)| a);
                    vec![best]
                } else {
                    vec![0]
                }
            } else {
                acts
            }
        })
        .collect()
}

/// All selectors that pick one supported action of `q_star` per state.
pub fn candidate_policies(
    model: &FiniteCmdp,
    q_star: &OccupancyMeasure,
) -> Result<Vec<DeterministicPolicy>> {
    candidate_policies_with(model, q_star, ChatteringOptions::default().max_candidates)
}

pub fn candidate_policies_with(
    model: &FiniteCmdp,
    q_star: &OccupancyMeasure,
    limit: usize,
) -> Result<Vec<DeterministicPolicy>> {
    let support = supported_actions(model, q_star);
    let count = support
        .iter()
        .fold(1u128, |acc, a| acc.saturating_mul(a.len() as u128));
    if count > limit as u128 {
        return Err(Error::CandidateExplosion { count, limit });
    }
    let randomized: Vec<usize> = (0..support.len())
        .filter(|&s| support[s].len() > 1)
        .collect();
    let base: Vec<usize> = support.iter().map(|a| a[0]).collect();
    let mut out = Vec::with_capacity(count as usize);
    let mut digits = vec![0usize; randomized.len()];
    loop {
        let mut choice = base.clone();
        for (d, &s) in digits.iter().zip(&randomized) {
            choice[s] = support[s][*d];
        }
        out.push(DeterministicPolicy(choice));
        // mixed-radix increment
        let mut pos = 0;
        loop {
            if pos == digits.len() {
                return Ok(out);
            }
            digits[pos] += 1;
            if digits[pos] < support[randomized[pos]].len() {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
    }
}

/// Selectors maximizing the Lagrangian reward `r_0 + Σ λ_i r_i` for the LP
/// multipliers and small perturbations of them.
pub fn lagrangian_candidates(
    model: &FiniteCmdp,
    multipliers: &[f64],
    opts: ChatteringOptions,
) -> Result<Vec<DeterministicPolicy>> {
    let m = model.n_constraints();
    if multipliers.len() != m {
        return Err(Error::Dimension(format!(
            "{} multipliers for {m} constraints",
            multipliers.len()
        )));
    }
    let mut weight_sets = vec![multipliers.to_vec()];
    for step in [1.0, 10.0, 100.0, 1000.0] {
        for i in 0..m {
            for sign in [1.0, -1.0] {
                let mut w = multipliers.to_vec();
                w[i] = (w[i] + sign * opts.perturbation * step * w[i].abs().max(1.0)).max(0.0);
                weight_sets.push(w);
            }
        }
    }
    let mut out: Vec<DeterministicPolicy> = Vec::new();
    for w in weight_sets {
        let reward: Vec<f64> = (0..model.n_pairs())
            .map(|k| {
                (0..model.n_criteria()).fold(0.0, |acc, i| {
                    let coef = if i == 0 { 1.0 } else { w[i - 1] };
                    match model.reward(i, k) {
                        Extended::NegInfinity => f64::NEG_INFINITY,
                        Extended::Finite(r) => acc + coef * r,
                    }
                })
            })
            .collect();
        let (f, _) = policy_iteration(model, &reward)?;
        if !out.contains(&f) {
            out.push(f);
        }
        if out.len() >= opts.fallback_cap {
            break;
        }
    }
    Ok(out)
}

/// Null vector `λ ≠ 0` of the column set, if the columns are linearly
/// dependent at relative tolerance `tol`.
fn null_vector(cols: &[Vec<f64>], tol: f64) -> Option<Vec<f64>> {
    let k = cols.len();
    let r = cols.first().map_or(0, Vec::len);
    let mut a: Vec<Vec<f64>> = (0..r)
        .map(|i| (0..k).map(|j| cols[j][i]).collect())
        .collect();
    let scale: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().fold(1.0f64, |m, x| m.max(x.abs())))
        .collect();
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut row = 0;
    for c in 0..k {
        let best = (row..r).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs()));
        match best {
            Some(p) if a[p][c].abs() > tol * scale[c] => {
                a.swap(row, p);
                let piv = a[row][c];
                a[row].iter_mut().for_each(|v| *v /= piv);
                for i in 0..r {
                    if i != row && a[i][c] != 0.0 {
                        let f = a[i][c];
                        for j in 0..k {
                            a[i][j] -= f * a[row][j];
                        }
                    }
                }
                pivots.push((row, c));
                row += 1;
            }
            _ => {
                let mut lambda = vec![0.0; k];
                lambda[c] = 1.0;
                for &(pr, pc) in &pivots {
                    lambda[pc] = -a[pr][c];
                }
                return Some(lambda);
            }
        }
    }
    None
}

/// Prunes a convex combination to an affinely independent support while
/// keeping `Σ α_j p_j` fixed.
fn caratheodory_reduce(points: &mut Vec<Vec<f64>>, alphas: &mut Vec<f64>, tol: f64) -> Vec<usize> {
    let mut index: Vec<usize> = (0..points.len()).collect();
    loop {
        let cols: Vec<Vec<f64>> = points
            .iter()
            .map(|p| p.iter().copied().chain(std::iter::once(1.0)).collect())
            .collect();
        let Some(mut lambda) = null_vector(&cols, tol) else {
            return index;
        };
        if !lambda.iter().any(|&l| l > 0.0) {
            lambda.iter_mut().for_each(|l| *l = -*l);
        }
        let (drop, t) = lambda
            .iter()
            .zip(alphas.iter())
            .enumerate()
            .filter(|(_, (&l, _))| l > 0.0)
            .map(|(j, (&l, &a))| (j, a / l))
            .fold((usize::MAX, f64::INFINITY), |best, cur| {
                if cur.1 < best.1 {
                    cur
                } else {
                    best
                }
            });
        for (a, l) in alphas.iter_mut().zip(&lambda) {
            *a = (*a - t * l).max(0.0);
        }
        alphas[drop] = 0.0;
        let keep: Vec<bool> = alphas.iter().map(|&a| a > 0.0).collect();
        let mut j = 0;
        points.retain(|_| {
            j += 1;
            keep[j - 1]
        });
        let mut j = 0;
        index.retain(|_| {
            j += 1;
            keep[j - 1]
        });
        alphas.retain(|&a| a > 0.0);
        let total: f64 = alphas.iter().sum();
        alphas.iter_mut().for_each(|a| *a /= total);
    }
}

/// Writes `target` as a convex combination of candidate performance vectors,
/// using at most `m + 2` selectors (at most `m + 1` when the candidates lie on
/// a common supporting hyperplane, as they do at an LP optimum).
pub fn decompose_performance(
    model: &FiniteCmdp,
    target: &PerformanceVector,
    candidates: &[DeterministicPolicy],
) -> Result<Decomposition> {
    if candidates.is_empty() {
        return Err(Error::DecompositionInfeasible);
    }
    if target.len() != model.n_criteria() {
        return Err(Error::Dimension(format!(
            "target has {} coordinates, model has {} criteria",
            target.len(),
            model.n_criteria()
        )));
    }
    let evaluated: Vec<(OccupancyMeasure, PerformanceVector)> = candidates
        .par_iter()
        .map(|f| {
            f.check(model)?;
            let q = occupancy_of_stationary(model, &f.to_randomized(model))?;
            let v = evaluate_from_occupancy(model, &q)?;
            Ok((q, v))
        })
        .collect::<Result<_>>()?;

    let finite: Vec<usize> = (0..target.len())
        .filter(|&i| !target.get(i).is_neg_inf())
        .collect();
    let usable: Vec<usize> = (0..candidates.len())
        .filter(|&j| finite.iter().all(|&i| !evaluated[j].1.get(i).is_neg_inf()))
        .collect();
    if usable.is_empty() {
        return Err(Error::DecompositionInfeasible);
    }

    // feasibility LP: Σ α_j J_i(f_j) = target_i (finite i), Σ α_j = 1
    let mut rows: Vec<Vec<f64>> = finite
        .iter()
        .map(|&i| {
            usable
                .iter()
                .map(|&j| evaluated[j].1.get(i).finite().unwrap())
                .collect()
        })
        .collect();
    rows.push(vec![1.0; usable.len()]);
    let mut rhs: Vec<f64> = finite
        .iter()
        .map(|&i| target.get(i).finite().unwrap())
        .collect();
    rhs.push(1.0);
    let small = StandardLp::from_dense_rows(&rows, rhs.clone(), vec![0.0; usable.len()]);
    let sol = simplex::solve(&small)?;
    if sol.status != Status::Optimal {
        return Err(Error::DecompositionInfeasible);
    }

    let mut picked: Vec<usize> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    for (col, &j) in usable.iter().enumerate() {
        if sol.x[col] > 0.0 {
            picked.push(j);
            alphas.push(sol.x[col]);
        }
    }
    let total: f64 = alphas.iter().sum();
    alphas.iter_mut().for_each(|a| *a /= total);

    let mut points: Vec<Vec<f64>> = picked
        .iter()
        .map(|&j| {
            finite
                .iter()
                .map(|&i| evaluated[j].1.get(i).finite().unwrap())
                .collect()
        })
        .collect();
    let kept = caratheodory_reduce(&mut points, &mut alphas, tolerance::LP);
    let picked: Vec<usize> = kept.iter().map(|&p| picked[p]).collect();
    refit(&points, &mut alphas, &rhs);

    let dec = Decomposition {
        selectors: picked.iter().map(|&j| candidates[j].clone()).collect(),
        alphas,
        marginals: picked
            .iter()
            .map(|&j| evaluated[j].0.marginal(model))
            .collect(),
        occupancies: picked.iter().map(|&j| evaluated[j].0.clone()).collect(),
        performances: picked.iter().map(|&j| evaluated[j].1.clone()).collect(),
    };
    if dec.mixed_performance().max_abs_diff(target) > tolerance::CROSS_CHECK {
        return Err(Error::DecompositionInfeasible);
    }
    Ok(dec)
}

/// Least-squares polish of the weights on a fixed support; kept only if it
/// stays nonnegative and lowers the residual.
fn refit(points: &[Vec<f64>], alphas: &mut [f64], rhs: &[f64]) {
    let k = points.len();
    let r = rhs.len();
    let a = DMatrix::from_fn(r, k, |i, j| if i + 1 == r { 1.0 } else { points[j][i] });
    let b = DVector::from_column_slice(rhs);
    let residual = |x: &DVector<f64>| (&a * x - &b).amax();
    let current = DVector::from_column_slice(alphas);
    let Ok(candidate) = a.clone().svd(true, true).solve(&b, 1e-13) else {
        return;
    };
    if candidate.iter().all(|&x| x > 0.0) && residual(&candidate) < residual(&current) {
        let total: f64 = candidate.iter().sum();
        for (dst, src) in alphas.iter_mut().zip(candidate.iter()) {
            *dst = src / total;
        }
    }
}

/// Per-state weights `γ_j(s) = α_j q^{f_j}(s) / q^mix(s)`; states never
/// reached by the mixture put all weight on the first selector.
pub fn build_chattering(model: &FiniteCmdp, dec: &Decomposition) -> ChatteringPolicy {
    let n_sel = dec.len();
    let weights = (0..model.n_states())
        .map(|s| {
            let raw: Vec<f64> = dec
                .alphas
                .iter()
                .zip(&dec.marginals)
                .map(|(a, q)| a * q[s].max(0.0))
                .collect();
            let mix: f64 = raw.iter().sum();
            if mix > 0.0 {
                raw.iter().map(|x| x / mix).collect()
            } else {
                let mut g = vec![0.0; n_sel];
                g[0] = 1.0;
                g
            }
        })
        .collect();
    ChatteringPolicy {
        selectors: dec.selectors.clone(),
        weights,
    }
}

#[derive(Clone, Debug)]
pub struct ChatteringVerification {
    /// Largest `|Σ_j γ_j(s) - 1|`.
    pub weight_sum_error: f64,
    pub weights_in_unit_interval: bool,
    /// `max_i |J_i(φ) - target_i|`; `None` when the weights are malformed.
    pub deviation: Option<f64>,
    pub issues: Vec<String>,
    pub passed: bool,
}

/// Re-evaluates the chattering policy and compares with `target`.
pub fn verify_chattering(
    model: &FiniteCmdp,
    chat: &ChatteringPolicy,
    target: &PerformanceVector,
) -> ChatteringVerification {
    let mut issues = Vec::new();
    if chat.weights.len() != model.n_states() {
        issues.push(format!(
            "{} weight rows for {} states",
            chat.weights.len(),
            model.n_states()
        ));
    }
    if let Some(bad) = chat.selectors.iter().position(|f| f.check(model).is_err()) {
        issues.push(format!(
            "selector {bad} is not a valid deterministic policy"
        ));
    }
    let mut weight_sum_error: f64 = 0.0;
    let mut in_range = true;
    for (s, g) in chat.weights.iter().enumerate() {
        if g.len() != chat.n_selectors() {
            issues.push(format!(
                "state {s}: {} weights for {} selectors",
                g.len(),
                chat.n_selectors()
            ));
            continue;
        }
        let sum: f64 = g.iter().sum();
        weight_sum_error = weight_sum_error.max((sum - 1.0).abs());
        if g.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
            in_range = false;
            issues.push(format!("state {s}: weight outside [0, 1]"));
        }
        if (sum - 1.0).abs() > tolerance::STRUCTURAL {
            issues.push(format!("state {s}: weights sum to {sum}"));
        }
    }
    let deviation = if issues.is_empty() {
        match evaluate_stationary(model, &chat.to_randomized(model)) {
            Ok(v) => Some(v.max_abs_diff(target)),
            Err(e) => {
                issues.push(format!("evaluation failed: {e}"));
                None
            }
        }
    } else {
        None
    };
    let passed = issues.is_empty() && deviation.is_some_and(|d| d <= tolerance::CHATTERING_VERIFY);
    if let Some(d) = deviation.filter(|&d| d > tolerance::CHATTERING_VERIFY) {
        issues.push(format!("performance deviation {d:e} exceeds tolerance"));
    }
    ChatteringVerification {
        weight_sum_error,
        weights_in_unit_interval: in_range,
        deviation,
        issues,
        passed,
    }
}

#[derive(Clone, Debug)]
pub struct ChatteringResult {
    pub decomposition: Decomposition,
    pub policy: ChatteringPolicy,
    pub verification: ChatteringVerification,
    /// Whether the Lagrangian candidate generator was needed.
    pub used_fallback: bool,
}

/// Full pipeline from an optimal [`SolveReport`]: candidates, decomposition,
/// chattering weights and verification.
pub fn decompose_optimal(
    model: &FiniteCmdp,
    report: &SolveReport,
    opts: ChatteringOptions,
) -> Result<ChatteringResult> {
    if report.status != LpStatus::Optimal {
        return Err(Error::InvalidArgument(
            "chattering decomposition needs an optimal solution".into(),
        ));
    }
    let q_star = report
        .occupancy
        .as_ref()
        .expect("optimal report carries an occupancy");
    let target = report
        .performance
        .as_ref()
        .expect("optimal report carries a performance vector");

    let (decomposition, used_fallback) =
        match candidate_policies_with(model, q_star, opts.max_candidates)
            .and_then(|c| decompose_performance(model, target, &c))
        {
            Ok(dec) => (dec, false),
            Err(Error::CandidateExplosion { .. } | Error::DecompositionInfeasible) => {
                let mut cands = lagrangian_candidates(model, &report.duals, opts)?;
                if let Ok(support) = candidate_policies_with(model, q_star, opts.max_candidates) {
                    for f in support {
                        if !cands.contains(&f) {
                            cands.push(f);
                        }
                    }
                }
                (decompose_performance(model, target, &cands)?, true)
            }
            Err(e) => return Err(e),
        };
    let policy = build_chattering(model, &decomposition);
    let verification = verify_chattering(model, &policy, target);
    Ok(ChatteringResult {
        decomposition,
        policy,
        verification,
        used_fallback,
    })
}
