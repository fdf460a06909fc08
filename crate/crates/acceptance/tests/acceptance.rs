//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use occulp::assumptions::{
    check_tail_bound, check_uniform_integrability, compute_delta, ui_profile_all_policies,
    TailStatus, WeightSpec,
};
use occulp::chattering::{decompose_optimal, ChatteringOptions};
use occulp::eval::{evaluate_stationary, extract_policy, occupancy_of_stationary};
use occulp::ext::Extended;
use occulp::lp::{randomized_states, solve_cp, LpStatus};
use occulp::model::{Action, ModelParts};
use occulp::models::{
    growth_delta_bound, growth_delta_sup, growth_model, noisy_growth_delta_bound,
    noisy_growth_model, random_cmdp, repair_model_default, unbounded_model, unbounded_policy,
    DiscretizationSpec, RandomCmdpSpec, SuccessorMapping, UnboundedVariant,
};
use occulp::oracle::brute_force_cp;
use occulp::sim::{simulate, SimOptions, SimPolicy};
use occulp::{validate_model, FiniteCmdp, RandomizedStationaryPolicy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

const VALUE_TOL: f64 = 1e-9;
const ORACLE_TOL: f64 = 1e-8;
const OCCUPANCY_TOL: f64 = 1e-9;
const ROUND_TRIP_TOL: f64 = 1e-7;
const GAMMA_SUM_TOL: f64 = 1e-12;
const CHATTERING_TOL: f64 = 1e-6;
const DELTA_SLACK: f64 = 1e-6;
const RATIO_SLACK: f64 = 1e-12;
const UI_TOL: f64 = 1e-12;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn random_policy(model: &FiniteCmdp, rng: &mut ChaCha8Rng) -> RandomizedStationaryPolicy {
    let probs = (0..model.n_states())
        .map(|s| {
            let raw: Vec<f64> = (0..model.n_actions(s)).map(|_| Exp1.sample(rng)).collect();
            let total: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / total).collect()
        })
        .collect();
    RandomizedStationaryPolicy { probs }
}

fn value(model: &FiniteCmdp) -> (LpStatus, f64, RandomizedStationaryPolicy) {
    let rep = solve_cp(model).expect("solve");
    let v = rep.value().map_or(f64::NAN, Extended::to_float);
    (
        rep.status,
        v,
        rep.policy
            .unwrap_or(RandomizedStationaryPolicy { probs: Vec::new() }),
    )
}

fn criterion_1() -> Outcome {
    let mut failures = Vec::new();
    let mut elapsed = Duration::ZERO;
    let mut worst: f64 = 0.0;
    for beta in [0.5, 0.8, 0.95] {
        for n in [5, 50] {
            let start = Instant::now();
            let built = unbounded_model(UnboundedVariant::II, n, beta).unwrap();
            let (status, v, phi) = value(&built.model);
            elapsed += start.elapsed();
            let err = (v - 1.25 * beta).abs();
            worst = worst.max(err);
            let on_best = phi.probs.first().map_or(0.0, |p| p[2] + p[3]);
            if status != LpStatus::Optimal || !(err <= VALUE_TOL) || !(on_best >= 1.0 - VALUE_TOL) {
                failures.push(format!(
                    "β={beta} N={n}: J0={v} mass on 1/2,1/3 = {on_best}"
                ));
            }
        }
    }
    let fast = elapsed < Duration::from_secs(1);
    if !fast {
        failures.push(format!("runtime {elapsed:?} ≥ 1 s"));
    }
    Outcome::new(
        failures.is_empty(),
        format!(
            "max |J0 - 5β/4| = {worst:.2e}, total solve time {elapsed:.2?} {}",
            failures.join("; ")
        ),
    )
}

fn criterion_2() -> Outcome {
    let beta = 0.8;
    let mut failures = Vec::new();
    let mut values = Vec::new();
    let mut big = Duration::ZERO;
    for n in [10, 100, 1000] {
        let start = Instant::now();
        let built = unbounded_model(UnboundedVariant::I, n, beta).unwrap();
        let (status, v, _) = value(&built.model);
        if n == 1000 {
            big = start.elapsed();
        }
        let target = beta * (2.0 - 1.0 / n as f64);
        if status != LpStatus::Optimal || !((v - target).abs() <= VALUE_TOL) || !(v < 2.0 * beta) {
            failures.push(format!("N={n}: J0={v}, expected {target}"));
        }
        values.push(v);
    }
    if !values.windows(2).all(|w| w[0] < w[1]) {
        failures.push("values not strictly increasing in N".into());
    }
    if big >= Duration::from_secs(5) {
        failures.push(format!("N=1000 took {big:?}"));
    }
    Outcome::new(
        failures.is_empty(),
        format!(
            "J0 = {values:?}, N=1000 in {big:.2?} {}",
            failures.join("; ")
        ),
    )
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut infeasible = 0;
    let mut worst: f64 = 0.0;
    for seed in 0..200u64 {
        let spec = RandomCmdpSpec {
            n_states: 1 + (seed % 5) as usize,
            n_actions: 3,
            vary_actions: true,
            m: (seed % 3) as usize,
            margin: if (seed / 3) % 4 == 3 { -0.5 } else { 0.1 },
            ..RandomCmdpSpec::default()
        };
        let model = random_cmdp(seed, &spec).unwrap();
        let lp = solve_cp(&model).unwrap();
        let oracle = brute_force_cp(&model).unwrap();
        if lp.status != oracle.status {
            failures.push(format!(
                "seed {seed}: LP {:?} vs oracle {:?}",
                lp.status, oracle.status
            ));
            continue;
        }
        match lp.status {
            LpStatus::Optimal => {
                let d = (lp.value().unwrap().to_float() - oracle.value.unwrap().to_float()).abs();
                worst = worst.max(d);
                if !(d <= ORACLE_TOL) {
                    failures.push(format!("seed {seed}: |LP - oracle| = {d:e}"));
                }
            }
            _ => infeasible += 1,
        }
    }
    let elapsed = start.elapsed();
    if elapsed >= Duration::from_secs(60) {
        failures.push(format!("runtime {elapsed:?}"));
    }
    Outcome::new(
        failures.is_empty(),
        format!(
            "200 instances, {infeasible} infeasible (verdicts agree), max |Δ| = {worst:.2e}, {elapsed:.2?} {}",
            failures.join("; ")
        ),
    )
}

fn criterion_4() -> Outcome {
    let mut failures = Vec::new();
    let (mut mass_err, mut flow_err, mut rt_err): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for seed in 0..500u64 {
        let spec = RandomCmdpSpec {
            n_states: 2 + (seed % 5) as usize,
            n_actions: 3,
            vary_actions: true,
            ..RandomCmdpSpec::default()
        };
        let model = random_cmdp(seed, &spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let phi = if seed % 3 == 0 {
            let f: Vec<usize> = (0..model.n_states())
                .map(|s| rng.random_range(0..model.n_actions(s)))
                .collect();
            occulp::DeterministicPolicy(f).to_randomized(&model)
        } else {
            random_policy(&model, &mut rng)
        };
        let q = occupancy_of_stationary(&model, &phi).unwrap();
        let m = (q.total_mass() - 1.0 / (1.0 - model.beta())).abs();
        let f = q.flow_residual(&model);
        let back = extract_policy(&model, &q);
        let q2 = occupancy_of_stationary(&model, &back).unwrap();
        let marg = q.marginal(&model);
        let mut rt = q.max_abs_diff(&q2);
        for s in 0..model.n_states() {
            if marg[s] > 1e-10 {
                for a in 0..model.n_actions(s) {
                    rt = rt.max((back.prob(s, a) - phi.prob(s, a)).abs());
                }
            }
        }
        mass_err = mass_err.max(m);
        flow_err = flow_err.max(f);
        rt_err = rt_err.max(rt);
        if !(m <= OCCUPANCY_TOL && f <= OCCUPANCY_TOL && rt <= ROUND_TRIP_TOL) {
            failures.push(format!(
                "seed {seed}: mass {m:e} flow {f:e} round-trip {rt:e}"
            ));
        }
    }
    Outcome::new(
        failures.is_empty(),
        format!(
            "500 pairs: max mass error {mass_err:.1e}, flow residual {flow_err:.1e}, round-trip {rt_err:.1e} {}",
            failures.join("; ")
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut failures = Vec::new();
    let (mut max_dev, mut max_sum): (f64, f64) = (0.0, 0.0);
    let mut fallback = 0;
    for seed in 0..100u64 {
        let m = 1 + (seed % 2) as usize;
        let spec = RandomCmdpSpec {
            n_states: 3 + (seed % 4) as usize,
            n_actions: 3,
            vary_actions: true,
            m,
            ..RandomCmdpSpec::default()
        };
        let model = random_cmdp(1000 + seed, &spec).unwrap();
        let rep = solve_cp(&model).unwrap();
        if rep.status != LpStatus::Optimal {
            failures.push(format!("seed {seed}: status {:?}", rep.status));
            continue;
        }
        let rand_states = randomized_states(&model, rep.occupancy.as_ref().unwrap()).len();
        let res = match decompose_optimal(&model, &rep, ChatteringOptions::default()) {
            Ok(r) => r,
            Err(e) => {
                failures.push(format!("seed {seed}: {e}"));
                continue;
            }
        };
        fallback += usize::from(res.used_fallback);
        let n_sel = res.policy.n_selectors();
        let sum_err = res
            .policy
            .weights
            .iter()
            .map(|g| (g.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max);
        let dev = res.verification.deviation.unwrap_or(f64::INFINITY);
        max_dev = max_dev.max(dev);
        max_sum = max_sum.max(sum_err);
        if n_sel > m + 1 || sum_err > GAMMA_SUM_TOL || !(dev <= CHATTERING_TOL) || rand_states > m {
            failures.push(format!(
                "seed {seed}: m={m} selectors {n_sel}, Σγ error {sum_err:e}, deviation {dev:e}, randomized states {rand_states}"
            ));
        }
    }
    Outcome::new(
        failures.is_empty(),
        format!(
            "100 instances: max deviation {max_dev:.1e}, max |Σγ - 1| {max_sum:.1e}, fallback used {fallback}× {}",
            failures.join("; ")
        ),
    )
}

fn criterion_6() -> Outcome {
    let spec = DiscretizationSpec::default();
    let mut failures = Vec::new();
    let mut lines = Vec::new();
    for c in [1.0, 4.0, 9.0] {
        let b = growth_model(c, &spec, 0.9, 0.0, SuccessorMapping::Nearest).unwrap();
        let d = compute_delta(&b.model, &b.weight).unwrap();
        let bound = growth_delta_bound(c);
        let (s, _) = d.argmax;
        let s_val = b.weight.w[s] - c;
        lines.push(format!(
            "growth c={c}: δ={:.6} vs {bound:.6} at s={s_val:.4}",
            d.delta
        ));
        if !(d.delta <= bound + DELTA_SLACK) {
            failures.push(format!(
                "growth c={c}: grid δ {:.6} exceeds 1+1/(4+4c) = {bound:.6}; exact sup of (√s+c)/(s+c) is {:.6}",
                d.delta,
                growth_delta_sup(c)
            ));
        }
    }
    for (m_bar, c) in [(1.0, 25.0), (2.0, 100.0)] {
        let b = noisy_growth_model(c, m_bar, &spec, 0.9, 0.0).unwrap();
        let d = compute_delta(&b.model, &b.weight).unwrap();
        let bound = noisy_growth_delta_bound(c, m_bar);
        lines.push(format!(
            "noisy m̄={m_bar} c={c}: δ={:.6} vs {bound:.6}",
            d.delta
        ));
        if !(d.delta <= bound + DELTA_SLACK) {
            failures.push(format!(
                "noisy m̄={m_bar} c={c}: δ {:.6} > {bound:.6}",
                d.delta
            ));
        }
    }
    Outcome::new(
        failures.is_empty(),
        format!("{}; {}", lines.join(", "), failures.join("; ")),
    )
}

/// Deterministic shift `s -> s + 1` (top state absorbing) with `w = 2^s`.
fn doubling_chain(n: usize, beta: f64) -> (FiniteCmdp, WeightSpec) {
    let model = FiniteCmdp::from_parts(ModelParts {
        n_states: n,
        actions: vec![vec![Action::new("next")]; n],
        transitions: (0..n).map(|s| vec![((s + 1).min(n - 1), 1.0)]).collect(),
        rewards: vec![vec![Extended::Finite(1.0); n]],
        beta,
        mu: (0..n).map(|s| if s == 0 { 1.0 } else { 0.0 }).collect(),
        bounds: vec![],
    });
    let w = WeightSpec::new((0..n).map(|s| 2f64.powi(s as i32)).collect()).unwrap();
    (model, w)
}

fn criterion_7() -> Outcome {
    let mut failures = Vec::new();
    let mut geometric = 0;
    let mut inconclusive = 0;
    let mut worst_excess = f64::NEG_INFINITY;
    let mut cases: Vec<(String, FiniteCmdp, WeightSpec)> = Vec::new();

    let spec = DiscretizationSpec {
        n_states: 101,
        ..DiscretizationSpec::default()
    };
    let b = noisy_growth_model(25.0, 1.0, &spec, 0.88, 0.0).unwrap();
    cases.push(("noisy growth β=0.88".into(), b.model, b.weight));
    let b = growth_model(4.0, &spec, 0.85, 0.0, SuccessorMapping::Nearest).unwrap();
    cases.push(("growth c=4 β=0.85".into(), b.model, b.weight));
    let b = unbounded_model(UnboundedVariant::I, 10, 0.8).unwrap();
    cases.push(("unbounded I β=0.8".into(), b.model, b.weight));
    let (m, w) = doubling_chain(12, 0.6);
    cases.push(("doubling chain β=0.6".into(), m, w));
    for seed in 0..30u64 {
        let model = random_cmdp(
            seed,
            &RandomCmdpSpec {
                n_states: 5,
                m: 0,
                ..RandomCmdpSpec::default()
            },
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = WeightSpec::new((0..5).map(|_| rng.random_range(1.0..4.0)).collect()).unwrap();
        cases.push((format!("random seed {seed}"), model, w));
    }

    for (name, model, w) in &cases {
        let r = check_tail_bound(model, w, 300).unwrap();
        if r.beta_delta < 1.0 {
            geometric += 1;
            for n in 1..r.bounds.len() {
                let excess = r.bounds[n] - (r.beta_delta + RATIO_SLACK) * r.bounds[n - 1];
                worst_excess = worst_excess.max(r.bounds[n] / r.bounds[n - 1] - r.beta_delta);
                if excess > 0.0 {
                    failures.push(format!(
                        "{name}: ratio at n={} exceeds βδ={}",
                        n + 1,
                        r.beta_delta
                    ));
                    break;
                }
            }
        } else {
            inconclusive += 1;
            if r.status != TailStatus::Inconclusive || !r.bounds.is_empty() {
                failures.push(format!(
                    "{name}: βδ={} but status {:?}",
                    r.beta_delta, r.status
                ));
            }
        }
    }
    if inconclusive < 2 {
        failures.push("constructed βδ ≥ 1 regimes missing".into());
    }
    Outcome::new(
        failures.is_empty(),
        format!(
            "{geometric} geometric cases (max ratio - βδ = {worst_excess:.1e}), {inconclusive} inconclusive cases {}",
            failures.join("; ")
        ),
    )
}

fn criterion_8() -> Outcome {
    let n_trunc = 20;
    let levels: Vec<f64> = (2..=n_trunc).map(|l| l as f64).collect();
    let mut failures = Vec::new();

    let b = unbounded_model(UnboundedVariant::I, n_trunc, 0.8).unwrap();
    let family: Vec<_> = (1..=n_trunc)
        .map(|n| unbounded_policy(&b.model, n).to_randomized(&b.model))
        .collect();
    let p1 = check_uniform_integrability(&b.model, &family, &b.weight, &levels, 2).unwrap();
    let all1 = ui_profile_all_policies(&b.model, &b.weight, &levels, 2).unwrap();
    let at_one = check_uniform_integrability(&b.model, &family, &b.weight, &[1.0], 2)
        .unwrap()
        .values[0];
    for (j, &v) in p1.values.iter().enumerate() {
        if (v - 1.0).abs() > UI_TOL || (all1.values[j] - v).abs() > UI_TOL {
            failures.push(format!("case I l={}: {v}", levels[j]));
        }
    }

    let b = unbounded_model(UnboundedVariant::II, n_trunc, 0.8).unwrap();
    let family: Vec<_> = (1..=n_trunc)
        .map(|n| unbounded_policy(&b.model, n).to_randomized(&b.model))
        .collect();
    let p2 = check_uniform_integrability(&b.model, &family, &b.weight, &levels, 2).unwrap();
    let all2 = ui_profile_all_policies(&b.model, &b.weight, &levels, 2).unwrap();
    for (j, &v) in p2.values.iter().enumerate() {
        let l = levels[j];
        let exact = l / 2f64.powf(l);
        if (v - exact).abs() > UI_TOL
            || v > l / 2f64.powf(l - 1.0)
            || (all2.values[j] - v).abs() > UI_TOL
        {
            failures.push(format!("case II l={l}: {v} vs l/2^l = {exact}"));
        }
    }
    if !p2.values.windows(2).all(|w| w[1] <= w[0]) {
        failures.push("case II profile not nonincreasing".into());
    }
    let tail = *p2.values.last().unwrap();
    Outcome::new(
        failures.is_empty(),
        format!(
            "levels 2..={n_trunc}, step 2: case I ≡ 1, case II = l/2^l down to {tail:.2e} (at l=1 the indicator admits state 0: case I gives {at_one}) {}",
            failures.join("; ")
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut within = 0;
    let mut misses = Vec::new();
    let mut reproducible = true;
    for seed in 0..20u64 {
        let spec = RandomCmdpSpec {
            n_states: 3 + (seed % 3) as usize,
            n_actions: 3,
            vary_actions: true,
            beta_range: (0.5, 0.9),
            ..RandomCmdpSpec::default()
        };
        let model = random_cmdp(500 + seed, &spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = random_policy(&model, &mut rng);
        let exact = evaluate_stationary(&model, &phi).unwrap();
        let opts = SimOptions {
            seed: 77 + seed,
            episodes: 100_000,
            epsilon: 1e-6,
        };
        let est = simulate(&model, SimPolicy::Stationary(&phi), opts).unwrap();
        let ok = (0..model.n_criteria()).all(|i| {
            (est.estimates.get(i).to_float() - exact.get(i).to_float()).abs()
                <= 3.0 * est.std_errors[i]
        });
        if ok {
            within += 1;
        } else {
            misses.push(seed);
        }
        if seed == 0 {
            let again = simulate(&model, SimPolicy::Stationary(&phi), opts).unwrap();
            reproducible = est
                .estimates
                .0
                .iter()
                .zip(&again.estimates.0)
                .all(|(a, b)| a.to_float().to_bits() == b.to_float().to_bits())
                && est
                    .std_errors
                    .iter()
                    .zip(&again.std_errors)
                    .all(|(a, b)| a.to_bits() == b.to_bits());
        }
    }
    Outcome::new(
        within >= 19 && reproducible,
        format!("{within}/20 instances within 3 SE (misses {misses:?}), bit-identical rerun: {reproducible}"),
    )
}

type Builder = Box<dyn Fn(f64) -> FiniteCmdp>;

fn criterion_10(delta_conformance: bool) -> Outcome {
    let mut failures = Vec::new();
    let mut notes = Vec::new();
    let grid = DiscretizationSpec {
        n_states: 41,
        s_max: 10.0,
        n_actions: 41,
        quad_nodes: 16,
    };
    let repair_grid = DiscretizationSpec {
        n_states: 21,
        s_max: 1.0,
        n_actions: 11,
        quad_nodes: 24,
    };
    let beta = 0.85;
    // (name, loose bound, impossible bound, builder)
    let cases: Vec<(&str, f64, f64, Builder)> = vec![
        (
            "growth",
            -1e3,
            1e3,
            Box::new(move |d1| {
                growth_model(4.0, &grid, beta, d1, SuccessorMapping::Nearest)
                    .unwrap()
                    .model
            }),
        ),
        (
            "noisy growth",
            -1e3,
            1e3,
            Box::new(move |d1| {
                noisy_growth_model(25.0, 1.0, &grid, beta, d1)
                    .unwrap()
                    .model
            }),
        ),
        (
            "repair",
            1e3,
            0.0,
            Box::new(move |d1| repair_model_default(&repair_grid, beta, d1).unwrap().model),
        ),
    ];
    for (name, loose, impossible, build) in &cases {
        let model = build(*loose);
        let report = validate_model(&model);
        if report.has_errors() {
            failures.push(format!("{name}: validation errors"));
        }
        let rep = solve_cp(&model).unwrap();
        if rep.status != LpStatus::Optimal {
            failures.push(format!("{name}: loose bound gave {:?}", rep.status));
        } else {
            let r = randomized_states(&model, rep.occupancy.as_ref().unwrap()).len();
            notes.push(format!(
                "{name} optimal J0={:.4} ({r} randomized states)",
                rep.value().unwrap().to_float()
            ));
        }
        let rep = solve_cp(&build(*impossible)).unwrap();
        if rep.status != LpStatus::Infeasible {
            failures.push(format!("{name}: impossible bound gave {:?}", rep.status));
        }
    }
    if !delta_conformance {
        failures.push("δ-bound conformance fails (criterion 6)".into());
    }
    Outcome::new(
        failures.is_empty(),
        format!("{}; {}", notes.join(", "), failures.join("; ")),
    )
}

fn run(f: impl FnOnce() -> Outcome) -> Outcome {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(o) => o,
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::new(false, format!("panicked: {msg}"))
        }
    }
}

fn main() {
    let names = [
        "unbounded model, case II value 5β/4 attained by π_2 or π_3",
        "unbounded model, case I value β(2 - 1/N) below 2β",
        "occupancy LP agrees with brute-force oracle",
        "occupancy mass, flow identity and disintegration round-trip",
        "chattering decomposition at the optimum",
        "closed-form drift constants bound the grid δ",
        "tail bounds decay geometrically or are inconclusive",
        "uniform-integrability dichotomy on the unbounded model",
        "Monte-Carlo estimates within 3 standard errors",
        "growth and repair models: validation, feasibility, δ conformance",
    ];
    let mut results: Vec<Outcome> = Vec::new();
    let mut failed = 0;
    for (i, name) in names.iter().enumerate() {
        let start = Instant::now();
        let out = match i {
            0 => run(criterion_1),
            1 => run(criterion_2),
            2 => run(criterion_3),
            3 => run(criterion_4),
            4 => run(criterion_5),
            5 => run(criterion_6),
            6 => run(criterion_7),
            7 => run(criterion_8),
            8 => run(criterion_9),
            _ => {
                let delta_ok = results[5].pass;
                run(move || criterion_10(delta_ok))
            }
        };
        let verdict = if out.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!out.pass);
        println!(
            "criterion {:>2} {verdict} [{:.2?}] {name}: {}",
            i + 1,
            start.elapsed(),
            out.detail.trim_end_matches("; ").trim_end()
        );
        results.push(out);
    }
    println!(
        "acceptance: {}/{} criteria passed",
        names.len() - failed,
        names.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
