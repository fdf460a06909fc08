//! Dense-vector revised simplex method for `maximize cᵀx  s.t.  Ax = b, x ≥ 0`.
//!
//! The basis inverse is kept in product form: a list of eta matrices applied
//! on top of the identity basis formed by one artificial column per row. The
//! factorization is rebuilt from scratch every `refactor_interval` pivots and
//! before the final solution is read off.
//!
//! Phase one minimizes the sum of artificials; artificials left basic at zero
//! level are pivoted out where possible, otherwise their row is redundant and
//! they stay basic (pinned at zero) through phase two.
//!
//! Pricing is either pure Bland (lowest-index entering column, lowest-index
//! leaving variable on ties) or Dantzig's largest reduced cost that falls back
//! to Bland after every degenerate pivot until the objective strictly moves
//! again. Cycling can only happen along degenerate pivots, where Bland's rule
//! is active, so both variants terminate.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseColumn<T> {
    pub entries: Vec<(usize, T)>,
}

impl<T: Scalar> SparseColumn<T> {
    pub fn new(entries: Vec<(usize, T)>) -> Self {
        Self { entries }
    }

    pub fn dot(&self, y: &[T]) -> T {
        self.entries
            .iter()
            .fold(T::zero(), |acc, &(i, v)| acc + v * y[i])
    }
}

/// Problem in equality standard form; the objective is maximized.
#[derive(Clone, Debug, PartialEq)]
pub struct StandardLp<T> {
    pub n_rows: usize,
    pub columns: Vec<SparseColumn<T>>,
    pub rhs: Vec<T>,
    pub cost: Vec<T>,
}

impl<T: Scalar> StandardLp<T> {
    /// Builds the column-sparse form from dense rows.
    pub fn from_dense_rows(rows: &[Vec<T>], rhs: Vec<T>, cost: Vec<T>) -> Self {
        let n_cols = cost.len();
        let mut columns = vec![SparseColumn::new(Vec::new()); n_cols];
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n_cols, "row {i} has the wrong width");
            for (j, &v) in row.iter().enumerate() {
                if v != T::zero() {
                    columns[j].entries.push((i, v));
                }
            }
        }
        Self {
            n_rows: rows.len(),
            columns,
            rhs,
            cost,
        }
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    /// Optimality certificate for a solution with duals.
    pub fn certificate(&self, sol: &Solution<T>) -> Certificate<T> {
        let mut dual_infeasibility = T::zero();
        let mut complementary_slackness = T::zero();
        for (j, col) in self.columns.iter().enumerate() {
            let d = self.cost[j] - col.dot(&sol.duals);
            dual_infeasibility = dual_infeasibility.max(d);
            complementary_slackness = complementary_slackness.max((d * sol.x[j]).abs());
        }
        let mut primal_residual = T::zero();
        let mut ax = vec![T::zero(); self.n_rows];
        for (j, col) in self.columns.iter().enumerate() {
            for &(i, v) in &col.entries {
                ax[i] += v * sol.x[j];
            }
        }
        for (i, v) in ax.iter().enumerate() {
            primal_residual = primal_residual.max((*v - self.rhs[i]).abs());
        }
        let dual_objective = self
            .rhs
            .iter()
            .zip(&sol.duals)
            .fold(T::zero(), |acc, (&b, &y)| acc + b * y);
        Certificate {
            dual_objective,
            duality_gap: (dual_objective - sol.objective).abs(),
            dual_infeasibility,
            complementary_slackness,
            primal_residual,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pricing {
    /// Lowest-index improving column throughout.
    Bland,
    /// Largest reduced cost; Bland while pivots are degenerate.
    DantzigBland,
}

#[derive(Clone, Copy, Debug)]
pub struct SimplexOptions<T> {
    pub pricing: Pricing,
    pub tolerance: T,
    pub refactor_interval: usize,
    /// `None` picks `max(10_000, 50 (rows + cols))`.
    pub max_iterations: Option<usize>,
}

impl<T: Scalar> Default for SimplexOptions<T> {
    fn default() -> Self {
        Self {
            pricing: Pricing::DantzigBland,
            tolerance: T::pivot_tolerance(),
            refactor_interval: 100,
            max_iterations: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct Solution<T> {
    pub status: Status,
    /// Primal values of the structural columns (meaningful when optimal).
    pub x: Vec<T>,
    /// Row duals `y` with `Aᵀy ≥ c` at optimality; empty unless optimal.
    pub duals: Vec<T>,
    pub objective: T,
    pub iterations: usize,
    /// Basic column per row; `n_cols + i` denotes the artificial of row `i`.
    pub basis: Vec<usize>,
}

#[derive(Clone, Copy, Debug)]
pub struct Certificate<T> {
    pub dual_objective: T,
    pub duality_gap: T,
    /// `max_j (c_j - a_jᵀ y)`; nonpositive up to tolerance at a dual-feasible point.
    pub dual_infeasibility: T,
    /// `max_j |x_j (c_j - a_jᵀ y)|`.
    pub complementary_slackness: T,
    pub primal_residual: T,
}

struct Eta<T> {
    row: usize,
    pivot: T,
    entries: Vec<(usize, T)>,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
}

struct Solver<'a, T> {
    lp: &'a StandardLp<T>,
    opts: SimplexOptions<T>,
    sign: Vec<T>,
    b: Vec<T>,
    basis: Vec<usize>,
    position: Vec<Option<usize>>,
    x_b: Vec<T>,
    etas: Vec<Eta<T>>,
    iterations: usize,
    since_refactor: usize,
    max_iterations: usize,
}

/// Solves `lp` with default options.
pub fn solve<T: Scalar>(lp: &StandardLp<T>) -> Result<Solution<T>> {
    solve_with(lp, SimplexOptions::default())
}

pub fn solve_with<T: Scalar>(lp: &StandardLp<T>, opts: SimplexOptions<T>) -> Result<Solution<T>> {
    if lp.rhs.len() != lp.n_rows || lp.cost.len() != lp.columns.len() {
        return Err(Error::Dimension("standard LP shape is inconsistent".into()));
    }
    if let Some(bad) = lp
        .columns
        .iter()
        .flat_map(|c| &c.entries)
        .find(|(i, _)| *i >= lp.n_rows)
    {
        return Err(Error::Dimension(format!(
            "column entry in row {} out of range",
            bad.0
        )));
    }
    let mut solver = Solver::new(lp, opts);
    solver.run()
}

impl<'a, T: Scalar> Solver<'a, T> {
    fn new(lp: &'a StandardLp<T>, opts: SimplexOptions<T>) -> Self {
        let m = lp.n_rows;
        let n = lp.columns.len();
        let sign: Vec<T> = lp
            .rhs
            .iter()
            .map(|&b| if b < T::zero() { -T::one() } else { T::one() })
            .collect();
        let b: Vec<T> = lp.rhs.iter().zip(&sign).map(|(&b, &s)| b * s).collect();
        let mut position = vec![None; n + m];
        for (i, p) in position.iter_mut().skip(n).enumerate() {
            *p = Some(i);
        }
        Self {
            lp,
            opts,
            sign,
            x_b: b.clone(),
            b,
            basis: (n..n + m).collect(),
            position,
            etas: Vec::new(),
            iterations: 0,
            since_refactor: 0,
            max_iterations: opts.max_iterations.unwrap_or((50 * (m + n)).max(10_000)),
        }
    }

    fn n_struct(&self) -> usize {
        self.lp.columns.len()
    }

    fn is_artificial(&self, j: usize) -> bool {
        j >= self.n_struct()
    }

    /// Dense copy of column `j` (row signs applied) into `out`.
    fn load_column(&self, j: usize, out: &mut [T]) {
        out.iter_mut().for_each(|v| *v = T::zero());
        if j < self.n_struct() {
            for &(i, v) in &self.lp.columns[j].entries {
                out[i] = v * self.sign[i];
            }
        } else {
            out[j - self.n_struct()] = T::one();
        }
    }

    /// `yᵀ a_j` for the row-signed column.
    fn column_dot(&self, j: usize, y: &[T]) -> T {
        if j < self.n_struct() {
            self.lp.columns[j]
                .entries
                .iter()
                .fold(T::zero(), |acc, &(i, v)| acc + v * self.sign[i] * y[i])
        } else {
            y[j - self.n_struct()]
        }
    }

    fn ftran(&self, v: &mut [T]) {
        for eta in &self.etas {
            let t = v[eta.row];
            if t == T::zero() {
                continue;
            }
            let t = t / eta.pivot;
            v[eta.row] = t;
            for &(i, w) in &eta.entries {
                v[i] -= w * t;
            }
        }
    }

    fn btran(&self, v: &mut [T]) {
        for eta in self.etas.iter().rev() {
            let s = eta
                .entries
                .iter()
                .fold(T::zero(), |acc, &(i, w)| acc + w * v[i]);
            v[eta.row] = (v[eta.row] - s) / eta.pivot;
        }
    }

    fn push_eta(&mut self, row: usize, w: &[T]) {
        let drop = T::drop_tolerance();
        let entries = w
            .iter()
            .enumerate()
            .filter(|&(i, &v)| i != row && v.abs() > drop)
            .map(|(i, &v)| (i, v))
            .collect();
        self.etas.push(Eta {
            row,
            pivot: w[row],
            entries,
        });
    }

    /// Rebuilds the product-form inverse of the current basis and recomputes
    /// the basic values.
    fn refactor(&mut self) -> Result<()> {
        let m = self.lp.n_rows;
        let n = self.n_struct();
        self.etas.clear();
        self.since_refactor = 0;
        let mut free = vec![true; m];
        let mut structural = Vec::new();
        for &j in &self.basis {
            if j >= n {
                free[j - n] = false;
            } else {
                structural.push(j);
            }
        }
        structural.sort_by_key(|&j| (self.lp.columns[j].entries.len(), j));
        let mut new_basis: Vec<Option<usize>> = vec![None; m];
        for i in 0..m {
            if !free[i] {
                new_basis[i] = Some(n + i);
            }
        }
        let mut w = vec![T::zero(); m];
        for j in structural {
            self.load_column(j, &mut w);
            self.ftran(&mut w);
            let (row, mag) = (0..m).filter(|&i| free[i]).map(|i| (i, w[i].abs())).fold(
                (usize::MAX, T::zero()),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            );
            if row == usize::MAX || mag <= T::drop_tolerance() {
                return Err(Error::Numerical(
                    "basis became singular during refactorization".into(),
                ));
            }
            self.push_eta(row, &w);
            free[row] = false;
            new_basis[row] = Some(j);
        }
        self.basis = new_basis
            .into_iter()
            .map(|j| j.expect("every row assigned"))
            .collect();
        for p in self.position.iter_mut() {
            *p = None;
        }
        for (i, &j) in self.basis.iter().enumerate() {
            self.position[j] = Some(i);
        }
        let mut x = self.b.clone();
        self.ftran(&mut x);
        self.x_b = x;
        Ok(())
    }

    fn duals(&self, cost: &[T]) -> Vec<T> {
        let mut y: Vec<T> = self.basis.iter().map(|&j| cost[j]).collect();
        self.btran(&mut y);
        y
    }

    /// Pivots column `q` into row `r` given `w = B⁻¹ a_q`.
    fn pivot(&mut self, q: usize, r: usize, w: &[T]) {
        let theta = self.x_b[r] / w[r];
        for (i, x) in self.x_b.iter_mut().enumerate() {
            if i != r {
                *x -= theta * w[i];
            }
        }
        self.x_b[r] = theta;
        self.push_eta(r, w);
        let leaving = self.basis[r];
        self.position[leaving] = None;
        self.position[q] = Some(r);
        self.basis[r] = q;
        self.iterations += 1;
    }

    fn maybe_refactor(&mut self) -> Result<()> {
        self.since_refactor += 1;
        if self.since_refactor >= self.opts.refactor_interval {
            self.refactor()?;
        }
        Ok(())
    }

    fn optimize(&mut self, cost: &[T], eligible: &[bool]) -> Result<PhaseEnd> {
        let tol = self.opts.tolerance;
        let m = self.lp.n_rows;
        let mut bland = self.opts.pricing == Pricing::Bland;
        let mut w = vec![T::zero(); m];
        loop {
            if self.iterations >= self.max_iterations {
                return Err(Error::IterationLimit(self.max_iterations));
            }
            let y = self.duals(cost);
            let mut entering: Option<(usize, T)> = None;
            for j in 0..cost.len() {
                if !eligible[j] || self.position[j].is_some() {
                    continue;
                }
                let d = cost[j] - self.column_dot(j, &y);
                if d <= tol {
                    continue;
                }
                if bland {
                    entering = Some((j, d));
                    break;
                }
                if entering.is_none_or(|(_, best)| d > best) {
                    entering = Some((j, d));
                }
            }
            let Some((q, _)) = entering else {
                return Ok(PhaseEnd::Optimal);
            };

            self.load_column(q, &mut w);
            self.ftran(&mut w);

            let mut theta_min = T::infinity();
            for i in 0..m {
                if w[i] > tol {
                    theta_min = theta_min.min(self.x_b[i].max(T::zero()) / w[i]);
                }
            }
            if theta_min == T::infinity() {
                return Ok(PhaseEnd::Unbounded);
            }
            let tie = T::lit(1e-12) * (T::one() + theta_min);
            let mut leave: Option<usize> = None;
            for i in 0..m {
                if w[i] <= tol || self.x_b[i].max(T::zero()) / w[i] > theta_min + tie {
                    continue;
                }
                leave = match leave {
                    None => Some(i),
                    Some(l) if bland && self.basis[i] < self.basis[l] => Some(i),
                    Some(l) if !bland && w[i] > w[l] => Some(i),
                    keep => keep,
                };
            }
            let r = leave.expect("ratio test found a row");
            let degenerate = self.x_b[r].max(T::zero()) / w[r] <= tol;
            self.pivot(q, r, &w);
            self.x_b[r] = self.x_b[r].max(T::zero());
            bland = self.opts.pricing == Pricing::Bland || degenerate;
            self.maybe_refactor()?;
        }
    }

    /// After phase one, replaces zero-level basic artificials by structural
    /// columns where the row allows it.
    fn drive_out_artificials(&mut self) -> Result<()> {
        let m = self.lp.n_rows;
        let n = self.n_struct();
        let mut w = vec![T::zero(); m];
        for r in 0..m {
            if !self.is_artificial(self.basis[r]) {
                continue;
            }
            let mut rho = vec![T::zero(); m];
            rho[r] = T::one();
            self.btran(&mut rho);
            let mut best: Option<(usize, T)> = None;
            for j in 0..n {
                if self.position[j].is_some() {
                    continue;
                }
                let alpha = self.column_dot(j, &rho).abs();
                if alpha > self.opts.tolerance && best.is_none_or(|(_, b)| alpha > b) {
                    best = Some((j, alpha));
                }
            }
            if let Some((q, _)) = best {
                self.load_column(q, &mut w);
                self.ftran(&mut w);
                self.pivot(q, r, &w);
                self.maybe_refactor()?;
            }
        }
        Ok(())
    }

    fn run(&mut self) -> Result<Solution<T>> {
        let m = self.lp.n_rows;
        let n = self.n_struct();

        // phase one: maximize -Σ artificials
        let mut cost1 = vec![T::zero(); n + m];
        cost1[n..].iter_mut().for_each(|c| *c = -T::one());
        let all = vec![true; n + m];
        if let PhaseEnd::Unbounded = self.optimize(&cost1, &all)? {
            return Err(Error::Numerical(
                "phase one reported an unbounded ray".into(),
            ));
        }
        self.refactor()?;
        let infeasibility = self
            .basis
            .iter()
            .zip(&self.x_b)
            .filter(|(&j, _)| j >= n)
            .fold(T::zero(), |acc, (_, &x)| acc + x.abs());
        let scale = self.b.iter().fold(T::one(), |acc, &b| acc.max(b.abs()));
        if infeasibility > T::feasibility_tolerance() * scale {
            let mut x = vec![T::zero(); n];
            for (i, &j) in self.basis.iter().enumerate() {
                if j < n {
                    x[j] = self.x_b[i];
                }
            }
            return Ok(Solution {
                status: Status::Infeasible,
                x,
                duals: Vec::new(),
                objective: T::nan(),
                iterations: self.iterations,
                basis: self.basis.clone(),
            });
        }
        self.drive_out_artificials()?;

        // phase two
        let mut cost2 = vec![T::zero(); n + m];
        cost2[..n].copy_from_slice(&self.lp.cost);
        let mut eligible = vec![true; n + m];
        eligible[n..].iter_mut().for_each(|e| *e = false);
        let end = self.optimize(&cost2, &eligible)?;
        self.refactor()?;

        let mut x = vec![T::zero(); n];
        for (i, &j) in self.basis.iter().enumerate() {
            if j < n {
                x[j] = self.x_b[i].max(T::zero());
            }
        }
        let objective = x
            .iter()
            .zip(&self.lp.cost)
            .fold(T::zero(), |acc, (&x, &c)| acc + x * c);
        let status = match end {
            PhaseEnd::Optimal => Status::Optimal,
            PhaseEnd::Unbounded => Status::Unbounded,
        };
        let duals = if status == Status::Optimal {
            self.duals(&cost2)
                .iter()
                .zip(&self.sign)
                .map(|(&y, &s)| y * s)
                .collect()
        } else {
            Vec::new()
        };
        Ok(Solution {
            status,
            x,
            duals,
            objective,
            iterations: self.iterations,
            basis: self.basis.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(rows: &[&[f64]], rhs: &[f64], cost: &[f64]) -> StandardLp<f64> {
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        StandardLp::from_dense_rows(&rows, rhs.to_vec(), cost.to_vec())
    }

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18  ->  (2, 6), value 36
        let p = lp(
            &[
                &[1.0, 0.0, 1.0, 0.0, 0.0],
                &[0.0, 2.0, 0.0, 1.0, 0.0],
                &[3.0, 2.0, 0.0, 0.0, 1.0],
            ],
            &[4.0, 12.0, 18.0],
            &[3.0, 5.0, 0.0, 0.0, 0.0],
        );
        for pricing in [Pricing::Bland, Pricing::DantzigBland] {
            let s = solve_with(
                &p,
                SimplexOptions {
                    pricing,
                    ..Default::default()
                },
            )
            .unwrap();
            assert_eq!(s.status, Status::Optimal);
            assert!((s.objective - 36.0).abs() < 1e-12);
            assert!((s.x[0] - 2.0).abs() < 1e-12 && (s.x[1] - 6.0).abs() < 1e-12);
            let cert = p.certificate(&s);
            assert!(cert.duality_gap < 1e-9 && cert.dual_infeasibility < 1e-9);
            // shadow prices of the three resources: (0, 3/2, 1)
            assert!((s.duals[1] - 1.5).abs() < 1e-12 && (s.duals[2] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn detects_infeasibility() {
        // x + y = 1, x + y = 2
        let p = lp(&[&[1.0, 1.0], &[1.0, 1.0]], &[1.0, 2.0], &[1.0, 0.0]);
        assert_eq!(solve(&p).unwrap().status, Status::Infeasible);
    }

    #[test]
    fn detects_unboundedness() {
        // max x, x - y = 1
        let p = lp(&[&[1.0, -1.0]], &[1.0], &[1.0, 0.0]);
        assert_eq!(solve(&p).unwrap().status, Status::Unbounded);
    }

    #[test]
    fn redundant_row_keeps_artificial() {
        // x + y = 1 twice, max x
        let p = lp(&[&[1.0, 1.0], &[1.0, 1.0]], &[1.0, 1.0], &[1.0, 0.0]);
        let s = solve(&p).unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert!((s.objective - 1.0).abs() < 1e-12);
        assert!(s.basis.iter().any(|&j| j >= 2));
    }

    #[test]
    fn negative_rhs_rows_are_flipped() {
        // -x - y = -2, max -x + 0y  -> x = 0, y = 2; dual of the row is 0? no: y enters with 0 cost
        let p = lp(&[&[-1.0, -1.0]], &[-2.0], &[-1.0, 0.0]);
        let s = solve(&p).unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert!(s.objective.abs() < 1e-12 && (s.x[1] - 2.0).abs() < 1e-12);
        let cert = p.certificate(&s);
        assert!(cert.dual_infeasibility < 1e-12 && cert.primal_residual < 1e-12);
    }

    #[test]
    fn beale_cycling_example_terminates() {
        // Beale's classical cycling LP (as maximization of its negation), slacks explicit.
        let p = lp(
            &[
                &[0.25, -8.0, -1.0, 9.0, 1.0, 0.0, 0.0],
                &[0.5, -12.0, -0.5, 3.0, 0.0, 1.0, 0.0],
                &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
            ],
            &[0.0, 0.0, 1.0],
            &[0.75, -20.0, 0.5, -6.0, 0.0, 0.0, 0.0],
        );
        for pricing in [Pricing::Bland, Pricing::DantzigBland] {
            let s = solve_with(
                &p,
                SimplexOptions {
                    pricing,
                    ..Default::default()
                },
            )
            .unwrap();
            assert_eq!(s.status, Status::Optimal);
            assert!((s.objective - 1.25).abs() < 1e-12, "{}", s.objective);
        }
    }

    #[test]
    fn single_precision_instantiation() {
        let rows = vec![vec![1.0f32, 1.0, 1.0]];
        let p = StandardLp::from_dense_rows(&rows, vec![1.0], vec![1.0, 2.0, 0.5]);
        let s = solve(&p).unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert!((s.objective - 2.0).abs() < 1e-6);
    }

    #[test]
    fn frequent_refactorization_matches() {
        let p = lp(
            &[
                &[1.0, 0.0, 1.0, 0.0, 0.0],
                &[0.0, 2.0, 0.0, 1.0, 0.0],
                &[3.0, 2.0, 0.0, 0.0, 1.0],
            ],
            &[4.0, 12.0, 18.0],
            &[3.0, 5.0, 0.0, 0.0, 0.0],
        );
        let s = solve_with(
            &p,
            SimplexOptions {
                refactor_interval: 1,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((s.objective - 36.0).abs() < 1e-12);
    }
}
