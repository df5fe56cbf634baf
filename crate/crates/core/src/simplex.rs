//! Dense two-phase simplex solver for the small linear programs built by
//! the membership tester and the hull optimizers.
//!
//! Problems are stated as: minimize c·x subject to mixed ==/<=/>= rows and
//! x >= 0. Phase 1 minimizes the sum of artificial variables; phase 2 the
//! caller's objective. Entering columns are chosen by Bland's rule, which
//! rules out cycling, and every pivot is a plain dense row elimination so
//! runs are bit-for-bit reproducible.
//!
//! When phase 1 terminates above the feasibility tolerance the solver
//! returns the dual vector at termination. That vector is a certificate of
//! infeasibility: y·rhs > 0 while y·column <= 0 (within tolerance) for every
//! column, which is what the membership tester serializes as a witness.

use crate::error::{Error, Result};

/// Row sense of one constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Eq,
    Le,
    Ge,
}

/// One constraint row over the structural variables.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// minimize `objective · x` subject to `constraints`, `x >= 0`.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

/// Solver knobs; the defaults match the crate-wide tolerances.
#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    /// Pivot cap across both phases.
    pub max_iterations: u64,
    /// Reduced-cost and pivot-element tolerance.
    pub epsilon: f64,
    /// Phase-1 objective value below which the program counts as feasible.
    pub feasibility_tol: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_iterations: 1_000_000,
            epsilon: 1e-9,
            feasibility_tol: 1e-9,
        }
    }
}

/// Outcome of a solve.
#[derive(Debug, Clone)]
pub enum LpSolution {
    Optimal {
        x: Vec<f64>,
        objective: f64,
    },
    /// `farkas[i]` is the dual multiplier of original row `i`; it satisfies
    /// farkas·rhs = `infeasibility` > 0 and farkas·column <= epsilon for
    /// every structural column.
    Infeasible {
        farkas: Vec<f64>,
        infeasibility: f64,
    },
    Unbounded,
}

pub fn solve(lp: &LinearProgram) -> Result<LpSolution> {
    solve_with(lp, SimplexOptions::default())
}

pub fn solve_with(lp: &LinearProgram, options: SimplexOptions) -> Result<LpSolution> {
    Tableau::build(lp, options).run(lp)
}

struct Tableau {
    options: SimplexOptions,
    /// m active constraint rows then the reduced-cost row.
    rows: Vec<Vec<f64>>,
    /// Basic variable of each constraint row.
    basis: Vec<usize>,
    /// Rows found linearly dependent after phase 1 are deactivated.
    active: Vec<bool>,
    /// −1 where the original row was negated to make the rhs nonnegative.
    row_sign: Vec<f64>,
    num_structural: usize,
    /// Column index of the slack of each row, if any.
    slack_col: Vec<Option<usize>>,
    /// Column index of the artificial of each row, if any.
    art_col: Vec<Option<usize>>,
    first_art: usize,
    total_cols: usize,
    pivots: u64,
}

impl Tableau {
    fn build(lp: &LinearProgram, options: SimplexOptions) -> Self {
        let m = lp.constraints.len();
        let n = lp.num_vars;

        let mut row_sign = vec![1.0; m];
        let mut relations = Vec::with_capacity(m);
        for (i, c) in lp.constraints.iter().enumerate() {
            debug_assert_eq!(c.coeffs.len(), n);
            let mut rel = c.relation;
            if c.rhs < 0.0 {
                row_sign[i] = -1.0;
                rel = match rel {
                    Relation::Eq => Relation::Eq,
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                };
            }
            relations.push(rel);
        }

        let num_slacks = relations
            .iter()
            .filter(|r| matches!(r, Relation::Le | Relation::Ge))
            .count();
        let first_slack = n;
        let first_art = n + num_slacks;

        let mut slack_col = vec![None; m];
        let mut art_col = vec![None; m];
        let mut next_slack = first_slack;
        let mut next_art = first_art;
        for (i, rel) in relations.iter().enumerate() {
            match rel {
                Relation::Le => {
                    slack_col[i] = Some(next_slack);
                    next_slack += 1;
                }
                Relation::Ge => {
                    slack_col[i] = Some(next_slack);
                    next_slack += 1;
                    art_col[i] = Some(next_art);
                    next_art += 1;
                }
                Relation::Eq => {
                    art_col[i] = Some(next_art);
                    next_art += 1;
                }
            }
        }
        let total_cols = next_art;
        let rhs = total_cols; // rhs column index

        let mut rows = vec![vec![0.0; total_cols + 1]; m + 1];
        let mut basis = vec![0usize; m];
        for i in 0..m {
            let sign = row_sign[i];
            for j in 0..n {
                rows[i][j] = sign * lp.constraints[i].coeffs[j];
            }
            rows[i][rhs] = sign * lp.constraints[i].rhs;
            if let Some(sc) = slack_col[i] {
                rows[i][sc] = match relations[i] {
                    Relation::Le => 1.0,
                    Relation::Ge => -1.0,
                    Relation::Eq => unreachable!(),
                };
            }
            if let Some(ac) = art_col[i] {
                rows[i][ac] = 1.0;
                basis[i] = ac;
            } else {
                basis[i] = slack_col[i].expect("row without artificial has a slack");
            }
        }

        // Phase-1 reduced costs: cost 1 on artificials, canonicalized for
        // the starting basis by subtracting every artificial-basic row.
        for i in 0..m {
            if art_col[i].is_none() {
                continue;
            }
            for j in 0..=total_cols {
                let v = rows[i][j];
                rows[m][j] -= v;
            }
        }
        for i in 0..m {
            if let Some(ac) = art_col[i] {
                rows[m][ac] = 0.0;
            }
        }

        Self {
            options,
            rows,
            basis,
            active: vec![true; m],
            row_sign,
            num_structural: n,
            slack_col,
            art_col,
            first_art,
            total_cols,
            pivots: 0,
        }
    }

    fn num_rows(&self) -> usize {
        self.basis.len()
    }

    fn rhs_col(&self) -> usize {
        self.total_cols
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let rhs = self.rhs_col();
        let pivot_val = self.rows[row][col];
        for j in 0..=rhs {
            self.rows[row][j] /= pivot_val;
        }
        let m = self.num_rows();
        for r in 0..=m {
            if r == row {
                continue;
            }
            let factor = self.rows[r][col];
            if factor == 0.0 {
                continue;
            }
            for j in 0..=rhs {
                let v = self.rows[row][j];
                self.rows[r][j] -= factor * v;
            }
            self.rows[r][col] = 0.0;
            // Elimination noise below feasibility scale reads as a negative
            // basic value; snap it so later ratio tests see a clean zero.
            if r < m && self.rows[r][rhs] < 0.0 && self.rows[r][rhs] > -1e-11 {
                self.rows[r][rhs] = 0.0;
            }
        }
        self.basis[row] = col;
    }

    /// Bland's rule iteration until optimality; `allowed` filters entering
    /// columns. Returns false if the objective is unbounded below.
    fn iterate(&mut self, allowed: impl Fn(usize) -> bool) -> Result<bool> {
        let m = self.num_rows();
        let rhs = self.rhs_col();
        let eps = self.options.epsilon;
        loop {
            if self.pivots >= self.options.max_iterations {
                return Err(Error::SolverStall(self.pivots));
            }
            let mut entering = None;
            for j in 0..self.total_cols {
                if allowed(j) && self.rows[m][j] < -eps {
                    entering = Some(j);
                    break;
                }
            }
            let Some(entering) = entering else {
                return Ok(true);
            };

            // Minimum-ratio test. Residual rhs noise is clamped so that
            // degenerate rows tie at exactly zero, where the Bland
            // tie-break (smallest basic variable) applies verbatim.
            let mut leaving: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for i in 0..m {
                if !self.active[i] {
                    continue;
                }
                let a = self.rows[i][entering];
                if a > eps {
                    let ratio = self.rows[i][rhs].max(0.0) / a;
                    let replace = match leaving {
                        None => true,
                        Some(cur) => {
                            ratio < best_ratio
                                || (ratio == best_ratio && self.basis[i] < self.basis[cur])
                        }
                    };
                    if replace {
                        best_ratio = ratio;
                        leaving = Some(i);
                    }
                }
            }
            let Some(leaving) = leaving else {
                return Ok(false);
            };
            self.pivot(leaving, entering);
            self.pivots += 1;
        }
    }

    fn objective_value(&self) -> f64 {
        -self.rows[self.num_rows()][self.rhs_col()]
    }

    /// Dual vector of the current phase read off the slack and artificial
    /// reduced costs, mapped back to the original row orientation.
    fn dual(&self, art_cost: f64) -> Vec<f64> {
        let m = self.num_rows();
        let mut y = vec![0.0; m];
        for i in 0..m {
            let raw = if let Some(ac) = self.art_col[i] {
                art_cost - self.rows[m][ac]
            } else {
                // Only Le rows lack an artificial; their slack has cost 0
                // and column +e_i, so the reduced cost there is -y_i.
                let sc = self.slack_col[i].expect("row has slack or artificial");
                -self.rows[m][sc]
            };
            y[i] = self.row_sign[i] * raw;
        }
        y
    }

    fn run(mut self, lp: &LinearProgram) -> Result<LpSolution> {
        let m = self.num_rows();

        // Phase 1.
        let bounded = self.iterate(|_| true)?;
        debug_assert!(bounded, "phase-1 objective is bounded below by zero");
        let infeasibility = self.objective_value();
        if infeasibility > self.options.feasibility_tol {
            return Ok(LpSolution::Infeasible {
                farkas: self.dual(1.0),
                infeasibility,
            });
        }

        // Drive artificials out of the basis; rows that cannot pivot are
        // linearly dependent and drop out.
        for i in 0..m {
            if self.basis[i] < self.first_art || !self.active[i] {
                continue;
            }
            let mut pivot_col = None;
            for j in 0..self.first_art {
                if self.rows[i][j].abs() > self.options.epsilon {
                    pivot_col = Some(j);
                    break;
                }
            }
            match pivot_col {
                Some(j) => self.pivot(i, j),
                None => self.active[i] = false,
            }
        }

        // Phase 2: rebuild the reduced-cost row for the real objective.
        let rhs = self.rhs_col();
        for j in 0..=rhs {
            self.rows[m][j] = if j < self.num_structural {
                lp.objective[j]
            } else {
                0.0
            };
        }
        for i in 0..m {
            if !self.active[i] {
                continue;
            }
            let basic = self.basis[i];
            let cost = if basic < self.num_structural {
                lp.objective[basic]
            } else {
                0.0
            };
            if cost == 0.0 {
                continue;
            }
            for j in 0..=rhs {
                let v = self.rows[i][j];
                self.rows[m][j] -= cost * v;
            }
        }
        for i in 0..m {
            if self.active[i] {
                self.rows[m][self.basis[i]] = 0.0;
            }
        }

        let first_art = self.first_art;
        let bounded = self.iterate(|j| j < first_art)?;
        if !bounded {
            return Ok(LpSolution::Unbounded);
        }

        let mut x = vec![0.0; self.num_structural];
        for i in 0..m {
            if self.active[i] && self.basis[i] < self.num_structural {
                x[self.basis[i]] = self.rows[i][rhs];
            }
        }
        let objective = lp
            .objective
            .iter()
            .zip(&x)
            .map(|(c, v)| c * v)
            .sum::<f64>();
        Ok(LpSolution::Optimal { x, objective })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eq(coeffs: Vec<f64>, rhs: f64) -> Constraint {
        Constraint {
            coeffs,
            relation: Relation::Eq,
            rhs,
        }
    }

    fn le(coeffs: Vec<f64>, rhs: f64) -> Constraint {
        Constraint {
            coeffs,
            relation: Relation::Le,
            rhs,
        }
    }

    fn ge(coeffs: Vec<f64>, rhs: f64) -> Constraint {
        Constraint {
            coeffs,
            relation: Relation::Ge,
            rhs,
        }
    }

    #[test]
    fn maximizes_over_a_triangle() {
        // min -(x + y) s.t. x + y <= 1 → objective -1 on the edge.
        let lp = LinearProgram {
            num_vars: 2,
            objective: vec![-1.0, -1.0],
            constraints: vec![le(vec![1.0, 1.0], 1.0)],
        };
        match solve(&lp).unwrap() {
            LpSolution::Optimal { objective, x } => {
                assert!((objective + 1.0).abs() < 1e-12);
                assert!((x[0] + x[1] - 1.0).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn solves_with_equality_and_bound() {
        // min x0 s.t. x0 + x1 = 2, x1 <= 1 → x = (1, 1).
        let lp = LinearProgram {
            num_vars: 2,
            objective: vec![1.0, 0.0],
            constraints: vec![eq(vec![1.0, 1.0], 2.0), le(vec![0.0, 1.0], 1.0)],
        };
        match solve(&lp).unwrap() {
            LpSolution::Optimal { objective, x } => {
                assert!((objective - 1.0).abs() < 1e-12);
                assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn detects_unbounded_direction() {
        // min -x s.t. x >= 1: unbounded below.
        let lp = LinearProgram {
            num_vars: 1,
            objective: vec![-1.0],
            constraints: vec![ge(vec![1.0], 1.0)],
        };
        assert!(matches!(solve(&lp).unwrap(), LpSolution::Unbounded));
    }

    #[test]
    fn infeasible_system_yields_valid_farkas_certificate() {
        // x0 + x1 = 1 and x0 + x1 = 2 cannot both hold.
        let lp = LinearProgram {
            num_vars: 2,
            objective: vec![0.0, 0.0],
            constraints: vec![eq(vec![1.0, 1.0], 1.0), eq(vec![1.0, 1.0], 2.0)],
        };
        match solve(&lp).unwrap() {
            LpSolution::Infeasible {
                farkas,
                infeasibility,
            } => {
                assert!(infeasibility > 1e-9);
                let y_dot_b = farkas[0] * 1.0 + farkas[1] * 2.0;
                assert!(y_dot_b > 1e-9);
                for col in 0..2 {
                    let y_dot_col = farkas[0] * lp.constraints[0].coeffs[col]
                        + farkas[1] * lp.constraints[1].coeffs[col];
                    assert!(y_dot_col <= 1e-9);
                }
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn infeasible_with_negative_rhs_row() {
        // -x0 = 1 with x0 >= 0 is infeasible; exercises the row flip.
        let lp = LinearProgram {
            num_vars: 1,
            objective: vec![0.0],
            constraints: vec![eq(vec![-1.0], 1.0)],
        };
        match solve(&lp).unwrap() {
            LpSolution::Infeasible { farkas, .. } => {
                assert!(farkas[0] > 1e-9);
                assert!(-farkas[0] <= 1e-9);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn degenerate_program_terminates_under_blands_rule() {
        // A classic cycling-prone instance (Beale); Bland's rule must exit.
        let lp = LinearProgram {
            num_vars: 4,
            objective: vec![-0.75, 150.0, -0.02, 6.0],
            constraints: vec![
                le(vec![0.25, -60.0, -0.04, 9.0], 0.0),
                le(vec![0.5, -90.0, -0.02, 3.0], 0.0),
                le(vec![0.0, 0.0, 1.0, 0.0], 1.0),
            ],
        };
        match solve(&lp).unwrap() {
            LpSolution::Optimal { objective, .. } => {
                assert!((objective + 0.05).abs() < 1e-9);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn redundant_equality_rows_are_tolerated() {
        let lp = LinearProgram {
            num_vars: 2,
            objective: vec![1.0, 2.0],
            constraints: vec![
                eq(vec![1.0, 1.0], 1.0),
                eq(vec![2.0, 2.0], 2.0),
                ge(vec![1.0, 0.0], 0.25),
            ],
        };
        match solve(&lp).unwrap() {
            LpSolution::Optimal { objective, x } => {
                assert!((x[0] + x[1] - 1.0).abs() < 1e-9);
                assert!(x[0] >= 0.25 - 1e-9);
                assert!((objective - (x[0] + 2.0 * x[1])).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
