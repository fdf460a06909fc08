//! Monte-Carlo estimation of `J_i` by fixed-horizon trajectory sampling.
//!
//! Episode `k` draws from a ChaCha8 stream keyed by `(seed, k)`, so the
//! per-episode returns do not depend on how episodes are scheduled across
//! threads; they are summed in episode order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::chattering::ChatteringPolicy;
use crate::error::{Error, Result};
use crate::ext::Extended;
use crate::model::{FiniteCmdp, PerformanceVector};
use crate::policy::RandomizedStationaryPolicy;

#[derive(Clone, Copy, Debug)]
pub enum SimPolicy<'a> {
    Stationary(&'a RandomizedStationaryPolicy),
    /// A selector is drawn from `γ(s)` independently at every visit.
    Chattering(&'a ChatteringPolicy),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimOptions {
    pub seed: u64,
    pub episodes: usize,
    /// Target bound on the truncation bias.
    pub epsilon: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimResult {
    pub estimates: PerformanceVector,
    /// Standard error of each estimate; NaN where the estimate is `-∞`.
    pub std_errors: Vec<f64>,
    /// Criteria for which some episode met a `-∞` reward.
    pub neg_inf: Vec<bool>,
    pub horizon: usize,
    pub episodes: usize,
}

/// Smallest `T ≥ 1` with `β^T max|r| / (1 - β) < epsilon`.
pub fn horizon(beta: f64, max_abs_reward: f64, epsilon: f64) -> usize {
    let mut t = 1;
    let mut tail = beta * max_abs_reward / (1.0 - beta);
    while tail >= epsilon {
        tail *= beta;
        t += 1;
    }
    t
}

fn sample_index(rng: &mut ChaCha8Rng, weights: impl Iterator<Item = f64>, last: usize) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, w) in weights.enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    // rounding left the cumulative sum just below u
    last
}

fn run_episode(
    model: &FiniteCmdp,
    policy: SimPolicy<'_>,
    seed: u64,
    episode: u64,
    horizon: usize,
) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(episode);
    let n_crit = model.n_criteria();
    let mut returns = vec![0.0; n_crit];
    let mut s = sample_index(&mut rng, model.mu().iter().copied(), model.n_states() - 1);
    let mut disc = 1.0;
    for _ in 0..horizon {
        let a = match policy {
            SimPolicy::Stationary(phi) => sample_index(
                &mut rng,
                phi.probs[s].iter().copied(),
                model.n_actions(s) - 1,
            ),
            SimPolicy::Chattering(chi) => {
                let j = sample_index(
                    &mut rng,
                    chi.weights[s].iter().copied(),
                    chi.n_selectors() - 1,
                );
                chi.selectors[j].action(s)
            }
        };
        let k = model.pair_index(s, a);
        for (i, ret) in returns.iter_mut().enumerate() {
            match model.reward(i, k) {
                Extended::Finite(r) => *ret += disc * r,
                Extended::NegInfinity => *ret = f64::NEG_INFINITY,
            }
        }
        let row = model.transition(k);
        s = row[sample_index(&mut rng, row.iter().map(|&(_, p)| p), row.len() - 1)].0;
        disc *= model.beta();
    }
    returns
}

/// Sample-mean estimate of every `J_i` under `policy`.
pub fn simulate(model: &FiniteCmdp, policy: SimPolicy<'_>, opts: SimOptions) -> Result<SimResult> {
    model.ensure_valid()?;
    if opts.episodes == 0 || !(opts.epsilon > 0.0) {
        return Err(Error::InvalidArgument(
            "episodes must be ≥ 1 and epsilon > 0".into(),
        ));
    }
    match policy {
        SimPolicy::Stationary(phi) => phi.check(model)?,
        SimPolicy::Chattering(chi) => {
            chi.to_randomized(model).check(model)?;
            for f in &chi.selectors {
                f.check(model)?;
            }
        }
    }
    let horizon = horizon(model.beta(), model.max_abs_finite_reward(), opts.epsilon);
    let returns: Vec<Vec<f64>> = (0..opts.episodes as u64)
        .into_par_iter()
        .map(|e| run_episode(model, policy, opts.seed, e, horizon))
        .collect();

    let n = opts.episodes as f64;
    let n_crit = model.n_criteria();
    let mut estimates = Vec::with_capacity(n_crit);
    let mut std_errors = Vec::with_capacity(n_crit);
    let mut neg_inf = Vec::with_capacity(n_crit);
    for i in 0..n_crit {
        if returns.iter().any(|r| r[i] == f64::NEG_INFINITY) {
            estimates.push(Extended::NegInfinity);
            std_errors.push(f64::NAN);
            neg_inf.push(true);
            continue;
        }
        let mean = returns.iter().map(|r| r[i]).sum::<f64>() / n;
        let se = if opts.episodes > 1 {
            let var = returns.iter().map(|r| (r[i] - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        estimates.push(Extended::Finite(mean));
        std_errors.push(se);
        neg_inf.push(false);
    }
    Ok(SimResult {
        estimates: PerformanceVector(estimates),
        std_errors,
        neg_inf,
        horizon,
        episodes: opts.episodes,
    })
}
