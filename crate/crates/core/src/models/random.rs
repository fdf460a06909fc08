use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::eval::evaluate_stationary;
use crate::ext::Extended::Finite;
use crate::model::{Action, FiniteCmdp, ModelParts};
use crate::policy::DeterministicPolicy;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RandomCmdpSpec {
    pub n_states: usize,
    /// Actions per state; with `vary_actions` this is the maximum.
    pub n_actions: usize,
    pub vary_actions: bool,
    /// Number of constraints.
    pub m: usize,
    pub reward_range: (f64, f64),
    pub beta_range: (f64, f64),
    /// `d_i = J_i(f) - margin` for a random deterministic `f`; a negative
    /// margin can make the instance infeasible.
    pub margin: f64,
}

impl Default for RandomCmdpSpec {
    fn default() -> Self {
        Self {
            n_states: 4,
            n_actions: 3,
            vary_actions: false,
            m: 1,
            reward_range: (-1.0, 1.0),
            beta_range: (0.5, 0.95),
            margin: 0.1,
        }
    }
}

/// Seeded random instance: transition rows are flat-Dirichlet samples,
/// rewards are uniform on `reward_range`, `μ` is uniform.
pub fn random_cmdp(seed: u64, spec: &RandomCmdpSpec) -> Result<FiniteCmdp> {
    let (lo, hi) = spec.reward_range;
    let (b_lo, b_hi) = spec.beta_range;
    if spec.n_states == 0
        || spec.n_actions == 0
        || !(lo < hi)
        || !(0.0 < b_lo && b_lo <= b_hi && b_hi < 1.0)
    {
        return Err(Error::InvalidArgument(
            "degenerate random instance specification".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.n_states;
    let actions: Vec<Vec<Action>> = (0..n)
        .map(|_| {
            let k = if spec.vary_actions {
                rng.random_range(1..=spec.n_actions)
            } else {
                spec.n_actions
            };
            (0..k).map(|a| Action::new(format!("a{a}"))).collect()
        })
        .collect();
    let n_pairs: usize = actions.iter().map(Vec::len).sum();
    let transitions = (0..n_pairs)
        .map(|_| {
            let raw: Vec<f64> = (0..n).map(|_| Exp1.sample(&mut rng)).collect();
            let total: f64 = raw.iter().sum();
            raw.into_iter()
                .enumerate()
                .map(|(t, x)| (t, x / total))
                .collect()
        })
        .collect();
    let rewards = (0..=spec.m)
        .map(|_| {
            (0..n_pairs)
                .map(|_| Finite(rng.random_range(lo..hi)))
                .collect()
        })
        .collect();
    let beta = if b_lo == b_hi {
        b_lo
    } else {
        rng.random_range(b_lo..b_hi)
    };
    let f = DeterministicPolicy(
        actions
            .iter()
            .map(|a| rng.random_range(0..a.len()))
            .collect(),
    );
    let mut model = FiniteCmdp::from_parts(ModelParts {
        n_states: n,
        actions,
        transitions,
        rewards,
        beta,
        mu: vec![1.0 / n as f64; n],
        bounds: vec![0.0; spec.m],
    });
    if spec.m > 0 {
        let v = evaluate_stationary(&model, &f.to_randomized(&model))?;
        let mut parts = model.into_parts();
        parts.bounds = (1..=spec.m)
            .map(|i| v.get(i).to_float() - spec.margin)
            .collect();
        model = FiniteCmdp::from_parts(parts);
    }
    Ok(model)
}
