//! Command-line front end: argument parsing, command dispatch and JSON reports.

pub mod format;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use occulp::assumptions::{self, TailStatus};
use occulp::chattering::{decompose_optimal, ChatteringOptions};
use occulp::lp::{randomized_states, solve_cp, LpStatus, SolveReport};
use occulp::models::{
    self, DiscretizationSpec, RandomCmdpSpec, SuccessorMapping, UnboundedVariant,
};
use occulp::oracle::brute_force_cp;
use occulp::sim::{simulate, SimOptions, SimPolicy};
use occulp::{validate_model, Error, FiniteCmdp, PerformanceVector};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::format::{
    ext_to_json, parse_model, parse_policy, parse_weight, serialize_model, LoadedPolicy,
    PolicyJson, WeightJson,
};

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_MINUS_INFINITY: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "occulp", version, about = "Constrained discounted MDP solver")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the occupancy LP and write the optimal policy and values.
    Solve(IoArgs),
    /// Solve, then split the optimum into a chattering policy over deterministic selectors.
    Decompose(IoArgs),
    /// Check weight-function conditions against a weight file.
    Check(CheckArgs),
    /// Estimate policy values by Monte-Carlo simulation.
    Simulate(SimulateArgs),
    /// Brute-force optimum over all deterministic policies (tiny models only).
    Oracle(IoArgs),
    /// Write one of the built-in models as a model file.
    Build(BuildArgs),
}

#[derive(Debug, Args)]
pub struct IoArgs {
    /// Model file (JSON).
    #[arg(long)]
    pub model: PathBuf,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub io: IoArgs,
    /// Weight file (JSON with `w` and optional `c`, `layers`, `ui`).
    #[arg(long)]
    pub w: PathBuf,
    /// Number of exactly summed terms in the tail bound.
    #[arg(long, default_value_t = 500)]
    pub n_max: usize,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub io: IoArgs,
    /// Policy file, or a solve/decompose report containing a policy.
    #[arg(long)]
    pub policy: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10_000)]
    pub episodes: usize,
    /// Bound on the truncation bias of each return.
    #[arg(long, default_value_t = 1e-8)]
    pub epsilon: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelName {
    /// Deterministic growth model.
    Growth,
    /// Growth model with exponential noise.
    NoisyGrowth,
    /// Repair model on [0, 1].
    Repair,
    /// Countable model with unbounded rewards, truncated.
    Unbounded,
    /// Seeded random instance.
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    I,
    Ii,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct BuildArgs {
    #[arg(value_enum)]
    pub name: ModelName,
    /// Model output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the model's weight function here.
    #[arg(long)]
    pub weight_out: Option<PathBuf>,
    #[arg(long, default_value_t = 0.9)]
    pub beta: f64,
    /// Constraint level.
    #[arg(long, default_value_t = 0.0)]
    pub d1: f64,
    /// Weight constant for the growth models.
    #[arg(long, default_value_t = 4.0)]
    pub c: f64,
    /// Noise mean for the noisy growth model.
    #[arg(long, default_value_t = 1.0)]
    pub m_bar: f64,
    #[arg(long, default_value_t = 201)]
    pub n_states: usize,
    #[arg(long, default_value_t = 10.0)]
    pub s_max: f64,
    #[arg(long, default_value_t = 41)]
    pub n_actions: usize,
    #[arg(long, default_value_t = 32)]
    pub quad_nodes: usize,
    /// Split deterministic successors between neighbouring grid states.
    #[arg(long)]
    pub interpolate: bool,
    #[arg(long, value_enum, default_value_t = VariantArg::Ii)]
    pub variant: VariantArg,
    #[arg(long, default_value_t = 50)]
    pub n_trunc: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of constraints of a random instance.
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    #[arg(long, default_value_t = 0.1)]
    pub margin: f64,
}

/// Maps a solver status to the process exit code.
pub fn status_code(status: LpStatus) -> i32 {
    match status {
        LpStatus::Optimal => EXIT_OK,
        LpStatus::Infeasible => EXIT_INFEASIBLE,
        LpStatus::MinusInfinityObjective => EXIT_MINUS_INFINITY,
    }
}

pub fn status_name(status: LpStatus) -> &'static str {
    match status {
        LpStatus::Optimal => "optimal",
        LpStatus::Infeasible => "infeasible",
        LpStatus::MinusInfinityObjective => "minus_infinity_objective",
    }
}

/// Caps the global worker pool from `OCCULP_THREADS`.
pub fn configure_threads() -> Result<()> {
    match std::env::var("OCCULP_THREADS") {
        Ok(v) => {
            let n: usize =
                v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
                    anyhow!("OCCULP_THREADS must be a positive integer, got {v:?}")
                })?;
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .context("configuring the worker pool")?;
            Ok(())
        }
        Err(std::env::VarError::NotPresent) => Ok(()),
        Err(e) => Err(anyhow!("OCCULP_THREADS: {e}")),
    }
}

/// Runs one command and returns the exit code. Errors map to [`EXIT_ERROR`].
pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Solve(io) => cmd_solve(&io),
        Command::Decompose(io) => cmd_decompose(&io),
        Command::Check(args) => cmd_check(&args),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Oracle(io) => cmd_oracle(&io),
        Command::Build(args) => cmd_build(&args),
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

struct Loaded {
    model: FiniteCmdp,
    sha256: String,
}

fn load_model(path: &Path) -> Result<Loaded> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let text = std::str::from_utf8(&bytes).context("model file is not UTF-8")?;
    let model = parse_model(text).with_context(|| format!("parsing {}", path.display()))?;
    let report = validate_model(&model);
    if report.has_errors() {
        return Err(Error::InvalidModel(report).into());
    }
    eprint!("{report}");
    Ok(Loaded {
        model,
        sha256: sha256_hex(&bytes),
    })
}

fn envelope(command: &str, sha256: &str, parameters: Value) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("schema_version".into(), json!(SCHEMA_VERSION));
    m.insert(
        "tool".into(),
        json!({ "name": "occulp", "version": env!("CARGO_PKG_VERSION") }),
    );
    m.insert("command".into(), json!(command));
    m.insert("model_sha256".into(), json!(sha256));
    m.insert("parameters".into(), parameters);
    m
}

fn write_output(out: Option<&Path>, doc: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(doc)?;
    text.push('\n');
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn perf_json(v: &PerformanceVector) -> Value {
    Value::Array(v.0.iter().map(|&x| ext_to_json(x)).collect())
}

fn per_state(model: &FiniteCmdp, values: &[f64]) -> Value {
    json!((0..model.n_states())
        .map(|s| model.pairs_of(s).map(|k| values[k]).collect::<Vec<_>>())
        .collect::<Vec<_>>())
}

fn solve_fields(model: &FiniteCmdp, rep: &SolveReport, doc: &mut Map<String, Value>) {
    doc.insert("status".into(), json!(status_name(rep.status)));
    doc.insert("value".into(), rep.value().map_or(Value::Null, ext_to_json));
    doc.insert(
        "performance".into(),
        rep.performance.as_ref().map_or(Value::Null, perf_json),
    );
    doc.insert("duals".into(), json!(rep.duals));
    doc.insert("iterations".into(), json!(rep.iterations));
    doc.insert(
        "certificate".into(),
        rep.certificate.as_ref().map_or(Value::Null, |c| {
            json!({
                "dual_objective": c.dual_objective,
                "duality_gap": c.duality_gap,
                "dual_infeasibility": c.dual_infeasibility,
                "complementary_slackness": c.complementary_slackness,
                "primal_residual": c.primal_residual,
            })
        }),
    );
    match &rep.occupancy {
        Some(q) => {
            doc.insert(
                "randomized_states".into(),
                json!(randomized_states(model, q)),
            );
            doc.insert("occupancy".into(), per_state(model, &q.values));
        }
        None => {
            doc.insert("randomized_states".into(), Value::Null);
            doc.insert("occupancy".into(), Value::Null);
        }
    }
    doc.insert(
        "policy".into(),
        rep.policy.as_ref().map_or(Value::Null, |p| {
            serde_json::to_value(PolicyJson::randomized(p)).unwrap()
        }),
    );
}

fn cmd_solve(io: &IoArgs) -> Result<i32> {
    let loaded = load_model(&io.model)?;
    let rep = solve_cp(&loaded.model)?;
    let mut doc = envelope("solve", &loaded.sha256, json!({ "model": io.model }));
    solve_fields(&loaded.model, &rep, &mut doc);
    write_output(io.out.as_deref(), &Value::Object(doc))?;
    Ok(status_code(rep.status))
}

fn cmd_decompose(io: &IoArgs) -> Result<i32> {
    let loaded = load_model(&io.model)?;
    let model = &loaded.model;
    let rep = solve_cp(model)?;
    let opts = ChatteringOptions::default();
    let mut doc = envelope(
        "decompose",
        &loaded.sha256,
        json!({
            "model": io.model,
            "max_candidates": opts.max_candidates,
            "fallback_cap": opts.fallback_cap,
            "perturbation": opts.perturbation,
        }),
    );
    solve_fields(model, &rep, &mut doc);
    if rep.status == LpStatus::Optimal {
        let res = decompose_optimal(model, &rep, opts)?;
        let dec = &res.decomposition;
        doc.insert("n_selectors".into(), json!(dec.len()));
        doc.insert(
            "selectors".into(),
            json!(dec.selectors.iter().map(|f| &f.0).collect::<Vec<_>>()),
        );
        doc.insert("alphas".into(), json!(dec.alphas));
        doc.insert(
            "selector_performance".into(),
            Value::Array(dec.performances.iter().map(perf_json).collect()),
        );
        doc.insert("gamma".into(), json!(res.policy.weights));
        doc.insert("used_fallback".into(), json!(res.used_fallback));
        let v = &res.verification;
        doc.insert(
            "verification".into(),
            json!({
                "deviation": v.deviation,
                "weight_sum_error": v.weight_sum_error,
                "weights_in_unit_interval": v.weights_in_unit_interval,
                "issues": v.issues,
                "passed": v.passed,
            }),
        );
        doc.insert(
            "policy".into(),
            serde_json::to_value(PolicyJson::chattering(&res.policy))?,
        );
        if !v.passed {
            eprintln!(
                "warning: chattering verification failed: {}",
                v.issues.join("; ")
            );
        }
    }
    write_output(io.out.as_deref(), &Value::Object(doc))?;
    Ok(status_code(rep.status))
}

fn bound_json(b: &assumptions::BoundCheck) -> Value {
    json!({
        "holds": b.holds,
        "worst": b.worst.map(|p| json!({
            "state": p.state,
            "action": p.action,
            "criterion": p.criterion,
            "excess": if p.excess.is_finite() { json!(p.excess) } else if p.excess > 0.0 { json!("inf") } else { json!("-inf") },
        })),
    })
}

fn cmd_check(args: &CheckArgs) -> Result<i32> {
    let loaded = load_model(&args.io.model)?;
    let model = &loaded.model;
    let wtext =
        fs::read_to_string(&args.w).with_context(|| format!("reading {}", args.w.display()))?;
    let wfile: WeightJson = parse_weight(&wtext)?;
    let w = wfile.spec()?;

    let a1 = assumptions::check_bound(model, &w, false)?;
    let a1p = assumptions::check_bound(model, &w, true)?;
    let delta = assumptions::compute_delta(model, &w)?;
    let tail = assumptions::check_tail_bound(model, &w, args.n_max)?;
    let mut doc = envelope(
        "check",
        &loaded.sha256,
        json!({ "model": args.io.model, "w": args.w, "w_sha256": sha256_hex(wtext.as_bytes()), "n_max": args.n_max }),
    );
    doc.insert("bound".into(), bound_json(&a1));
    doc.insert("bound_two_sided".into(), bound_json(&a1p));
    doc.insert(
        "delta".into(),
        json!({ "delta": delta.delta, "beta_delta": delta.beta_delta, "argmax": [delta.argmax.0, delta.argmax.1] }),
    );
    doc.insert(
        "tail".into(),
        json!({
            "status": match tail.status {
                TailStatus::Verified => "verified",
                TailStatus::Decaying => "decaying",
                TailStatus::Inconclusive => "inconclusive",
            },
            "mu_w": tail.mu_w,
            "bounds": tail.bounds,
        }),
    );
    if let Some(layers) = &wfile.layers {
        let r = assumptions::check_layered_growth(model, layers, &w, model.beta())?;
        doc.insert(
            "layers".into(),
            json!({
                "holds": r.holds,
                "layer_forward": r.layer_forward,
                "violations": r.violations,
                "layer_sup": r.layer_sup,
                "partial_sum": r.partial_sum,
                "growth": r.growth,
                "ratio": r.ratio,
                "tail_estimate": if r.tail_estimate.is_finite() { json!(r.tail_estimate) } else { json!("inf") },
            }),
        );
    }
    if let Some(ui) = &wfile.ui {
        let p = assumptions::ui_profile_all_policies(model, &w, &ui.levels, ui.step)?;
        doc.insert(
            "uniform_integrability".into(),
            json!({ "step": p.step, "levels": p.levels, "values": p.values }),
        );
    }
    write_output(args.io.out.as_deref(), &Value::Object(doc))?;
    Ok(EXIT_OK)
}

fn cmd_simulate(args: &SimulateArgs) -> Result<i32> {
    let loaded = load_model(&args.io.model)?;
    let ptext = fs::read_to_string(&args.policy)
        .with_context(|| format!("reading {}", args.policy.display()))?;
    let policy = parse_policy(&ptext)?.load();
    let opts = SimOptions {
        seed: args.seed,
        episodes: args.episodes,
        epsilon: args.epsilon,
    };
    let res = match &policy {
        LoadedPolicy::Randomized(p) => simulate(&loaded.model, SimPolicy::Stationary(p), opts)?,
        LoadedPolicy::Chattering(c) => simulate(&loaded.model, SimPolicy::Chattering(c), opts)?,
    };
    let mut doc = envelope(
        "simulate",
        &loaded.sha256,
        json!({
            "model": args.io.model,
            "policy": args.policy,
            "policy_sha256": sha256_hex(ptext.as_bytes()),
            "seed": args.seed,
            "episodes": args.episodes,
            "epsilon": args.epsilon,
        }),
    );
    doc.insert("estimates".into(), perf_json(&res.estimates));
    doc.insert("std_errors".into(), json!(res.std_errors));
    doc.insert("neg_inf".into(), json!(res.neg_inf));
    doc.insert("horizon".into(), json!(res.horizon));
    write_output(args.io.out.as_deref(), &Value::Object(doc))?;
    Ok(EXIT_OK)
}

fn cmd_oracle(io: &IoArgs) -> Result<i32> {
    let loaded = load_model(&io.model)?;
    let res = brute_force_cp(&loaded.model)?;
    let mut doc = envelope("oracle", &loaded.sha256, json!({ "model": io.model }));
    doc.insert("status".into(), json!(status_name(res.status)));
    doc.insert("value".into(), res.value.map_or(Value::Null, ext_to_json));
    doc.insert("n_policies".into(), json!(res.policies.len()));
    doc.insert(
        "witness".into(),
        Value::Array(
            res.witness
                .iter()
                .map(|&(j, a)| {
                    json!({ "index": j, "weight": a, "policy": res.policies[j].0 .0, "performance": perf_json(&res.policies[j].1) })
                })
                .collect(),
        ),
    );
    doc.insert(
        "witness_performance".into(),
        if res.witness.is_empty() {
            Value::Null
        } else {
            perf_json(&res.witness_performance())
        },
    );
    write_output(io.out.as_deref(), &Value::Object(doc))?;
    Ok(status_code(res.status))
}

fn cmd_build(args: &BuildArgs) -> Result<i32> {
    let spec = DiscretizationSpec {
        n_states: args.n_states,
        s_max: args.s_max,
        n_actions: args.n_actions,
        quad_nodes: args.quad_nodes,
    };
    let built = match args.name {
        ModelName::Growth => {
            let mapping = if args.interpolate {
                SuccessorMapping::Interpolate
            } else {
                SuccessorMapping::Nearest
            };
            models::growth_model(args.c, &spec, args.beta, args.d1, mapping)?
        }
        ModelName::NoisyGrowth => {
            models::noisy_growth_model(args.c, args.m_bar, &spec, args.beta, args.d1)?
        }
        ModelName::Repair => models::repair_model_default(&spec, args.beta, args.d1)?,
        ModelName::Unbounded => {
            let variant = match args.variant {
                VariantArg::I => UnboundedVariant::I,
                VariantArg::Ii => UnboundedVariant::II,
            };
            models::unbounded_model(variant, args.n_trunc, args.beta)?
        }
        ModelName::Random => {
            let spec = RandomCmdpSpec {
                n_states: args.n_states,
                n_actions: args.n_actions,
                m: args.m,
                margin: args.margin,
                beta_range: (args.beta, args.beta),
                ..RandomCmdpSpec::default()
            };
            let model = models::random_cmdp(args.seed, &spec)?;
            let w =
                occulp::assumptions::WeightSpec::new(vec![
                    model.max_abs_finite_reward().max(1.0);
                    model.n_states()
                ])?;
            models::BuiltModel {
                model,
                weight: w,
                warnings: Vec::new(),
            }
        }
    };
    for w in &built.warnings {
        eprintln!("warning: {w}");
    }
    let text = serialize_model(&built.model);
    match &args.out {
        Some(p) => fs::write(p, &text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    if let Some(p) = &args.weight_out {
        let mut text = serde_json::to_string_pretty(&WeightJson::from_spec(&built.weight))?;
        text.push('\n');
        fs::write(p, text).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(EXIT_OK)
}
