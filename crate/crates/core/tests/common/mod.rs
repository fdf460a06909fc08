#![allow(dead_code)]

use occulp::ext::Extended::Finite;
use occulp::model::{Action, ModelParts};
use occulp::models::{random_cmdp, RandomCmdpSpec};
use occulp::{FiniteCmdp, RandomizedStationaryPolicy};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

/// Random instance with `n_states` states, up to `max_actions` actions and `m` constraints.
pub fn random_model(seed: u64, n_states: usize, max_actions: usize, m: usize) -> FiniteCmdp {
    let spec = RandomCmdpSpec {
        n_states,
        n_actions: max_actions,
        vary_actions: true,
        m,
        ..RandomCmdpSpec::default()
    };
    random_cmdp(seed, &spec).unwrap()
}

/// Flat-Dirichlet randomized policy.
pub fn random_policy(model: &FiniteCmdp, seed: u64) -> RandomizedStationaryPolicy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let probs = (0..model.n_states())
        .map(|s| {
            let raw: Vec<f64> = (0..model.n_actions(s))
                .map(|_| Exp1.sample(&mut rng))
                .collect();
            let total: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / total).collect()
        })
        .collect();
    RandomizedStationaryPolicy { probs }
}

/// One state, one absorbing action per entry of `rewards` (single criterion).
pub fn one_state(rewards: &[f64], beta: f64) -> FiniteCmdp {
    let k = rewards.len();
    FiniteCmdp::from_parts(ModelParts {
        n_states: 1,
        actions: vec![(0..k).map(|a| Action::new(format!("a{a}"))).collect()],
        transitions: vec![vec![(0, 1.0)]; k],
        rewards: vec![rewards.iter().map(|&r| Finite(r)).collect()],
        beta,
        mu: vec![1.0],
        bounds: vec![],
    })
}

/// Direct policy evaluation `(I - β P_φ) v = r_φ`, averaged under `μ`, by
/// Gaussian elimination written out independently of the library.
pub fn direct_value(model: &FiniteCmdp, phi: &RandomizedStationaryPolicy, criterion: usize) -> f64 {
    let n = model.n_states();
    let mut a = vec![vec![0.0; n + 1]; n];
    for s in 0..n {
        a[s][s] += 1.0;
        for (act, k) in model.pairs_of(s).enumerate() {
            let p = phi.prob(s, act);
            a[s][n] += p * model.reward(criterion, k).to_float();
            for &(t, q) in model.transition(k) {
                a[s][t] -= model.beta() * p * q;
            }
        }
    }
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        a.swap(col, piv);
        for row in 0..n {
            if row != col {
                let f = a[row][col] / a[col][col];
                for j in col..=n {
                    a[row][j] -= f * a[col][j];
                }
            }
        }
    }
    (0..n).map(|s| model.mu()[s] * a[s][n] / a[s][s]).sum()
}

/// Unconstrained optimum of criterion 0 by value iteration.
pub fn value_iteration(model: &FiniteCmdp) -> f64 {
    let n = model.n_states();
    let mut v = vec![0.0; n];
    loop {
        let next: Vec<f64> = (0..n)
            .map(|s| {
                model
                    .pairs_of(s)
                    .map(|k| {
                        let cont: f64 = model.transition(k).iter().map(|&(t, p)| p * v[t]).sum();
                        model.reward(0, k).to_float() + model.beta() * cont
                    })
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        let diff = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        v = next;
        if diff < 1e-13 {
            break;
        }
    }
    v.iter().zip(model.mu()).map(|(x, m)| x * m).sum()
}
