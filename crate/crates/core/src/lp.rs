//! Linear program over occupancy measures.
//!
//! One variable `Q(s,a) ≥ 0` per feasible pair, one flow equality per state
//!
//! ```text
//! Σ_a Q(s,a) - β Σ_{(s',a')} p(s|s',a') Q(s',a') = μ(s)
//! ```
//!
//! and one row `Σ r_i(s,a) Q(s,a) ≥ d_i` per constraint; the objective
//! `Σ r_0(s,a) Q(s,a)` is maximized. The total mass `1/(1-β)` follows from the
//! flow rows, so the feasible set is compact.

use crate::error::{Error, Result};
use crate::eval::{evaluate_from_occupancy, extract_policy};
use crate::ext::Extended;
use crate::model::{FiniteCmdp, PerformanceVector};
use crate::policy::{OccupancyMeasure, RandomizedStationaryPolicy};
use crate::scalar::Scalar;
use crate::simplex::{self, Certificate, SimplexOptions, SparseColumn, StandardLp, Status};
use crate::tolerance;

#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram<T> {
    pub n_states: usize,
    /// `(state, action)` of each variable.
    pub pairs: Vec<(usize, usize)>,
    pub objective: Vec<Extended<T>>,
    /// Flow-row coefficients of each variable.
    pub flow: Vec<SparseColumn<T>>,
    pub flow_rhs: Vec<T>,
    /// `constraints[i][k]`: coefficient of variable `k` in the `(i+1)`-th reward row.
    pub constraints: Vec<Vec<Extended<T>>>,
    pub constraint_rhs: Vec<T>,
}

impl<T: Scalar> LinearProgram<T> {
    pub fn n_vars(&self) -> usize {
        self.pairs.len()
    }

    pub fn n_equalities(&self) -> usize {
        self.n_states
    }

    pub fn n_inequalities(&self) -> usize {
        self.constraints.len()
    }

    /// Variables with a `-∞` coefficient in some constraint row; positive mass
    /// there violates that constraint, so they are fixed at zero.
    fn forced_zero(&self) -> Vec<bool> {
        (0..self.n_vars())
            .map(|k| self.constraints.iter().any(|row| row[k].is_neg_inf()))
            .collect()
    }

    /// Standard form over the variables in `allowed` plus one surplus column
    /// per constraint row. Returns the problem and the kept variable indices.
    fn standard_form(&self, allowed: &[bool], with_objective: bool) -> (StandardLp<T>, Vec<usize>) {
        let n = self.n_states;
        let kept: Vec<usize> = (0..self.n_vars()).filter(|&k| allowed[k]).collect();
        let mut columns = Vec::with_capacity(kept.len() + self.n_inequalities());
        let mut cost = Vec::with_capacity(columns.capacity());
        for &k in &kept {
            let mut entries = self.flow[k].entries.clone();
            for (i, row) in self.constraints.iter().enumerate() {
                let v = row[k].finite().expect("forced-zero variables are excluded");
                if v != T::zero() {
                    entries.push((n + i, v));
                }
            }
            columns.push(SparseColumn::new(entries));
            cost.push(if with_objective {
                self.objective[k].finite().unwrap_or(T::zero())
            } else {
                T::zero()
            });
        }
        for i in 0..self.n_inequalities() {
            columns.push(SparseColumn::new(vec![(n + i, -T::one())]));
            cost.push(T::zero());
        }
        let mut rhs = self.flow_rhs.clone();
        rhs.extend_from_slice(&self.constraint_rhs);
        (
            StandardLp {
                n_rows: n + self.n_inequalities(),
                columns,
                rhs,
                cost,
            },
            kept,
        )
    }
}

/// Assembles the occupancy LP of `model`. All pairs become variables,
/// including those carrying `-∞` rewards; [`solve_lp`] handles the sentinel.
pub fn build_lp(model: &FiniteCmdp) -> LinearProgram<f64> {
    let beta = model.beta();
    let mut pairs = Vec::with_capacity(model.n_pairs());
    let mut flow = Vec::with_capacity(model.n_pairs());
    for s in 0..model.n_states() {
        for (a, k) in model.pairs_of(s).enumerate() {
            pairs.push((s, a));
            let mut entries: Vec<(usize, f64)> = vec![(s, 1.0)];
            for &(next, p) in model.transition(k) {
                if p == 0.0 {
                    continue;
                }
                match entries.iter_mut().find(|(i, _)| *i == next) {
                    Some(e) => e.1 -= beta * p,
                    None => entries.push((next, -beta * p)),
                }
            }
            flow.push(SparseColumn::new(entries));
        }
    }
    LinearProgram {
        n_states: model.n_states(),
        pairs,
        objective: model.rewards(0).to_vec(),
        flow,
        flow_rhs: model.mu().to_vec(),
        constraints: (1..model.n_criteria())
            .map(|i| model.rewards(i).to_vec())
            .collect(),
        constraint_rhs: model.bounds().to_vec(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    /// No occupancy measure satisfies the reward constraints.
    Infeasible,
    /// Feasible, but every feasible point puts mass on a `-∞` objective pair.
    MinusInfinityObjective,
}

#[derive(Clone, Debug)]
pub struct LpSolution<T> {
    pub status: LpStatus,
    /// Occupancy values per variable; a feasible point for
    /// `MinusInfinityObjective`, empty when infeasible.
    pub primal: Vec<T>,
    /// Duals of the flow rows.
    pub flow_duals: Vec<T>,
    /// Nonnegative multipliers `λ_i` of the reward constraints
    /// (`∂ optimum / ∂ d_i = -λ_i`).
    pub constraint_duals: Vec<T>,
    pub objective: Extended<T>,
    pub iterations: usize,
    pub certificate: Option<Certificate<T>>,
}

/// Solves the occupancy LP.
///
/// Pairs with a `-∞` constraint reward are fixed at zero. The objective is
/// first maximized with `-∞` objective pairs also fixed at zero; if that
/// restricted problem is infeasible but the unrestricted one is feasible, the
/// optimum is `-∞`.
pub fn solve_lp<T: Scalar>(lp: &LinearProgram<T>) -> Result<LpSolution<T>> {
    solve_lp_with(lp, SimplexOptions::default())
}

pub fn solve_lp_with<T: Scalar>(
    lp: &LinearProgram<T>,
    opts: SimplexOptions<T>,
) -> Result<LpSolution<T>> {
    let forced = lp.forced_zero();
    let finite_objective: Vec<bool> = (0..lp.n_vars())
        .map(|k| !forced[k] && !lp.objective[k].is_neg_inf())
        .collect();

    let (std_lp, kept) = lp.standard_form(&finite_objective, true);
    let sol = simplex::solve_with(&std_lp, opts)?;
    let mut iterations = sol.iterations;
    match sol.status {
        Status::Optimal => {
            let certificate = std_lp.certificate(&sol);
            let mut primal = vec![T::zero(); lp.n_vars()];
            for (col, &k) in kept.iter().enumerate() {
                primal[k] = sol.x[col];
            }
            let n = lp.n_states;
            Ok(LpSolution {
                status: LpStatus::Optimal,
                primal,
                flow_duals: sol.duals[..n].to_vec(),
                constraint_duals: sol.duals[n..].iter().map(|&y| -y).collect(),
                objective: Extended::Finite(sol.objective),
                iterations,
                certificate: Some(certificate),
            })
        }
        Status::Unbounded => Err(Error::Numerical(
            "occupancy LP reported unbounded; the flow rows fix the total mass".into(),
        )),
        Status::Infeasible => {
            let allowed: Vec<bool> = forced.iter().map(|f| !f).collect();
            let has_neg_inf = allowed
                .iter()
                .zip(&finite_objective)
                .any(|(&a, &f)| a && !f);
            if has_neg_inf {
                let (feas_lp, kept) = lp.standard_form(&allowed, false);
                let feas = simplex::solve_with(&feas_lp, opts)?;
                iterations += feas.iterations;
                if feas.status == Status::Optimal {
                    let mut primal = vec![T::zero(); lp.n_vars()];
                    for (col, &k) in kept.iter().enumerate() {
                        primal[k] = feas.x[col];
                    }
                    return Ok(LpSolution {
                        status: LpStatus::MinusInfinityObjective,
                        primal,
                        flow_duals: Vec::new(),
                        constraint_duals: Vec::new(),
                        objective: Extended::NegInfinity,
                        iterations,
                        certificate: None,
                    });
                }
            }
            Ok(LpSolution {
                status: LpStatus::Infeasible,
                primal: Vec::new(),
                flow_duals: Vec::new(),
                constraint_duals: Vec::new(),
                objective: Extended::NegInfinity,
                iterations,
                certificate: None,
            })
        }
    }
}

/// Output of [`solve_cp`].
#[derive(Clone, Debug)]
pub struct SolveReport {
    pub status: LpStatus,
    pub occupancy: Option<OccupancyMeasure>,
    pub policy: Option<RandomizedStationaryPolicy>,
    pub performance: Option<PerformanceVector>,
    /// Constraint multipliers `λ_i ≥ 0` (empty unless optimal).
    pub duals: Vec<f64>,
    pub iterations: usize,
    pub certificate: Option<Certificate<f64>>,
}

impl SolveReport {
    /// Optimal `J_0`, `-∞` for `MinusInfinityObjective`, `None` when infeasible.
    pub fn value(&self) -> Option<crate::ExtReal> {
        self.performance.as_ref().map(|v| v.objective())
    }
}

/// Solves the constrained problem: LP, disintegration into a stationary policy
/// and evaluation of the optimal occupancy measure.
pub fn solve_cp(model: &FiniteCmdp) -> Result<SolveReport> {
    model.ensure_valid()?;
    let lp = build_lp(model);
    let sol = solve_lp(&lp)?;
    if sol.status == LpStatus::Infeasible {
        return Ok(SolveReport {
            status: sol.status,
            occupancy: None,
            policy: None,
            performance: None,
            duals: Vec::new(),
            iterations: sol.iterations,
            certificate: None,
        });
    }
    let occupancy = OccupancyMeasure {
        values: sol.primal.iter().map(|&x| x.max(0.0)).collect(),
    };
    let policy = extract_policy(model, &occupancy);
    let performance = evaluate_from_occupancy(model, &occupancy)?;
    Ok(SolveReport {
        status: sol.status,
        occupancy: Some(occupancy),
        policy: Some(policy),
        performance: Some(performance),
        duals: sol.constraint_duals,
        iterations: sol.iterations,
        certificate: sol.certificate,
    })
}

/// States where `Q` puts more than [`tolerance::SUPPORT`] on two or more actions.
pub fn randomized_states(model: &FiniteCmdp, q: &OccupancyMeasure) -> Vec<usize> {
    (0..model.n_states())
        .filter(|&s| {
            model
                .pairs_of(s)
                .filter(|&k| q.values[k] > tolerance::SUPPORT)
                .count()
                >= 2
        })
        .collect()
}
