//! JSON file formats: models, policies and weight files.

use std::fmt::Write as _;

use anyhow::{anyhow, bail, ensure, Context, Result};
use occulp::assumptions::WeightSpec;
use occulp::chattering::ChatteringPolicy;
use occulp::ext::Extended;
use occulp::model::{Action, FiniteCmdp, ModelParts};
use occulp::{DeterministicPolicy, ExtReal, RandomizedStationaryPolicy};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const NEG_INF: &str = "-inf";

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct ActionJson {
    label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coord: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelJson {
    n_states: usize,
    actions: Vec<Vec<ActionJson>>,
    transition: Vec<(usize, usize, usize, f64)>,
    rewards: Vec<Vec<(usize, usize, Value)>>,
    beta: f64,
    mu: Vec<f64>,
    #[serde(default)]
    bounds: Vec<f64>,
}

pub fn ext_to_json(x: ExtReal) -> Value {
    match x {
        Extended::Finite(v) => Value::from(v),
        Extended::NegInfinity => Value::from(NEG_INF),
    }
}

fn ext_from_json(v: &Value) -> Result<ExtReal> {
    match v {
        Value::String(s) if s == NEG_INF => Ok(Extended::NegInfinity),
        Value::Number(n) => {
            let x = n
                .as_f64()
                .ok_or_else(|| anyhow!("reward {n} is not representable"))?;
            Ok(Extended::Finite(x))
        }
        other => bail!("reward must be a number or \"{NEG_INF}\", found {other}"),
    }
}

/// Parses a model document. Transition and reward triplets may come in any
/// order; zero probabilities are dropped and missing rewards are zero.
pub fn parse_model(text: &str) -> Result<FiniteCmdp> {
    let raw: ModelJson =
        serde_json::from_str(text).context("model file is not valid model JSON")?;
    ensure!(
        raw.actions.len() == raw.n_states,
        "actions lists {} states, n_states is {}",
        raw.actions.len(),
        raw.n_states
    );
    let mut offsets = Vec::with_capacity(raw.n_states + 1);
    offsets.push(0);
    for a in &raw.actions {
        offsets.push(offsets.last().unwrap() + a.len());
    }
    let n_pairs = *offsets.last().unwrap();
    let pair = |s: usize, a: usize, what: &str| -> Result<usize> {
        ensure!(s < raw.n_states, "{what}: state {s} out of range");
        ensure!(
            a < raw.actions[s].len(),
            "{what}: action {a} not available in state {s}"
        );
        Ok(offsets[s] + a)
    };

    let mut transitions: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_pairs];
    for &(s, a, t, p) in &raw.transition {
        let k = pair(s, a, "transition")?;
        ensure!(t < raw.n_states, "transition: successor {t} out of range");
        ensure!(
            !transitions[k].iter().any(|e| e.0 == t),
            "transition: duplicate entry [{s}, {a}, {t}]"
        );
        if p != 0.0 {
            transitions[k].push((t, p));
        }
    }
    for row in &mut transitions {
        row.sort_by_key(|e| e.0);
    }

    let mut rewards = Vec::with_capacity(raw.rewards.len());
    for (i, triplets) in raw.rewards.iter().enumerate() {
        let mut r = vec![Extended::Finite(0.0); n_pairs];
        let mut seen = vec![false; n_pairs];
        for (s, a, v) in triplets {
            let k = pair(*s, *a, &format!("rewards[{i}]"))?;
            ensure!(
                !seen[k],
                "rewards[{i}]: duplicate entry for state {s}, action {a}"
            );
            seen[k] = true;
            r[k] = ext_from_json(v)
                .with_context(|| format!("rewards[{i}] at state {s}, action {a}"))?;
        }
        rewards.push(r);
    }

    Ok(FiniteCmdp::from_parts(ModelParts {
        n_states: raw.n_states,
        actions: raw
            .actions
            .into_iter()
            .map(|a| {
                a.into_iter()
                    .map(|x| Action {
                        label: x.label,
                        coord: x.coord,
                    })
                    .collect()
            })
            .collect(),
        transitions,
        rewards,
        beta: raw.beta,
        mu: raw.mu,
        bounds: raw.bounds,
    }))
}

fn num(x: f64) -> String {
    serde_json::to_string(&x).expect("finite numbers serialize")
}

fn list(xs: &[f64]) -> String {
    let items: Vec<String> = xs.iter().map(|&x| num(x)).collect();
    format!("[{}]", items.join(", "))
}

/// Canonical model document: fixed key order, one triplet per line, zero
/// rewards omitted, shortest round-trip decimal floats.
pub fn serialize_model(model: &FiniteCmdp) -> String {
    let mut out = String::from("{\n");
    let _ = writeln!(out, "  \"n_states\": {},", model.n_states());

    out.push_str("  \"actions\": [\n");
    for s in 0..model.n_states() {
        let items: Vec<String> = model
            .actions(s)
            .iter()
            .map(|a| {
                serde_json::to_string(&ActionJson {
                    label: a.label.clone(),
                    coord: a.coord,
                })
                .unwrap()
            })
            .collect();
        let sep = if s + 1 < model.n_states() { "," } else { "" };
        let _ = writeln!(out, "    [{}]{sep}", items.join(", "));
    }
    out.push_str("  ],\n");

    let mut lines = Vec::new();
    for k in 0..model.n_pairs() {
        let (s, a) = model.pair(k);
        for &(t, p) in model.transition(k) {
            lines.push(format!("    [{s}, {a}, {t}, {}]", num(p)));
        }
    }
    let _ = writeln!(out, "  \"transition\": [\n{}\n  ],", lines.join(",\n"));

    out.push_str("  \"rewards\": [");
    for i in 0..model.n_criteria() {
        let mut lines = Vec::new();
        for k in 0..model.n_pairs() {
            let (s, a) = model.pair(k);
            match model.reward(i, k) {
                Extended::Finite(0.0) => {}
                Extended::Finite(v) => lines.push(format!("      [{s}, {a}, {}]", num(v))),
                Extended::NegInfinity => lines.push(format!("      [{s}, {a}, \"{NEG_INF}\"]")),
            }
        }
        let sep = if i + 1 < model.n_criteria() { "," } else { "" };
        if lines.is_empty() {
            let _ = write!(out, "\n    []{sep}");
        } else {
            let _ = write!(out, "\n    [\n{}\n    ]{sep}", lines.join(",\n"));
        }
    }
    out.push_str("\n  ],\n");
    let _ = writeln!(out, "  \"beta\": {},", num(model.beta()));
    let _ = writeln!(out, "  \"mu\": {},", list(model.mu()));
    let _ = writeln!(out, "  \"bounds\": {}", list(model.bounds()));
    out.push_str("}\n");
    out
}

/// Stationary policies as stored in policy files and reports.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PolicyJson {
    Randomized {
        probs: Vec<Vec<f64>>,
    },
    Chattering {
        selectors: Vec<Vec<usize>>,
        weights: Vec<Vec<f64>>,
    },
}

pub enum LoadedPolicy {
    Randomized(RandomizedStationaryPolicy),
    Chattering(ChatteringPolicy),
}

impl PolicyJson {
    pub fn randomized(phi: &RandomizedStationaryPolicy) -> Self {
        Self::Randomized {
            probs: phi.probs.clone(),
        }
    }

    pub fn chattering(chi: &ChatteringPolicy) -> Self {
        Self::Chattering {
            selectors: chi.selectors.iter().map(|f| f.0.clone()).collect(),
            weights: chi.weights.clone(),
        }
    }

    pub fn load(self) -> LoadedPolicy {
        match self {
            Self::Randomized { probs } => {
                LoadedPolicy::Randomized(RandomizedStationaryPolicy { probs })
            }
            Self::Chattering { selectors, weights } => LoadedPolicy::Chattering(ChatteringPolicy {
                selectors: selectors.into_iter().map(DeterministicPolicy).collect(),
                weights,
            }),
        }
    }
}

/// Reads a policy document, or the `policy` field of a solve/decompose report.
pub fn parse_policy(text: &str) -> Result<PolicyJson> {
    let v: Value = serde_json::from_str(text).context("policy file is not valid JSON")?;
    let inner = if v.get("kind").is_some() {
        v
    } else {
        v.get("policy").cloned().unwrap_or(Value::Null)
    };
    serde_json::from_value(inner)
        .context("expected a policy object with \"kind\": \"randomized\" or \"chattering\"")
}

/// Optional uniform-integrability request in a weight file.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct UiRequest {
    pub step: usize,
    pub levels: Vec<f64>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct WeightJson {
    pub w: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    /// First layer (1-based) containing each state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layers: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ui: Option<UiRequest>,
}

impl WeightJson {
    pub fn from_spec(w: &WeightSpec) -> Self {
        Self {
            w: w.w.clone(),
            c: w.c,
            layers: None,
            ui: None,
        }
    }

    pub fn spec(&self) -> Result<WeightSpec> {
        let mut w = WeightSpec::new(self.w.clone())?;
        w.c = self.c;
        Ok(w)
    }
}

pub fn parse_weight(text: &str) -> Result<WeightJson> {
    serde_json::from_str(text).context("weight file is not valid weight JSON")
}
