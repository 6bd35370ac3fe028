//! Dense two-phase primal simplex for small linear programs.
//!
//! Solves `min c.x  s.t.  A x <= b,  x >= 0` on a dense tableau. Pivoting
//! follows Bland's rule (smallest eligible index enters, smallest basis
//! index breaks ratio ties), which rules out cycling on the degenerate
//! optima these fits routinely produce. Problem sizes here are at most a
//! few hundred constraints, so no sparsity or factorization machinery.

use ndarray::Array2;

const PIVOT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpError {
    Infeasible,
    Unbounded,
}

impl std::fmt::Display for LpError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LpError::Infeasible => write!(f, "linear program is infeasible"),
            LpError::Unbounded => write!(f, "linear program is unbounded"),
        }
    }
}

impl std::error::Error for LpError {}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

struct Tableau {
    rows: Array2<f64>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    artificial_start: usize,
}

impl Tableau {
    fn reduced_cost(&self, cost: &[f64], col: usize) -> f64 {
        let mut rc = cost[col];
        for (row, &basic) in self.basis.iter().enumerate() {
            let cb = cost[basic];
            if cb != 0.0 {
                rc -= cb * self.rows[[row, col]];
            }
        }
        rc
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let ncols = self.rows.ncols();
        let pivot = self.rows[[row, col]];
        for j in 0..ncols {
            self.rows[[row, j]] /= pivot;
        }
        self.rhs[row] /= pivot;
        for r in 0..self.rows.nrows() {
            if r == row {
                continue;
            }
            let factor = self.rows[[r, col]];
            if factor == 0.0 {
                continue;
            }
            for j in 0..ncols {
                self.rows[[r, j]] -= factor * self.rows[[row, j]];
            }
            self.rhs[r] -= factor * self.rhs[row];
            // clip round-off negatives so the basis stays feasible
            if self.rhs[r] < 0.0 && self.rhs[r] > -1e-13 {
                self.rhs[r] = 0.0;
            }
        }
        self.basis[row] = col;
    }

    /// Run simplex to optimality for the given cost vector. Columns at or
    /// beyond `col_limit` are never chosen to enter.
    fn optimize(&mut self, cost: &[f64], col_limit: usize) -> Result<(), LpError> {
        loop {
            // Bland: smallest index with negative reduced cost enters.
            let mut entering = None;
            for col in 0..col_limit {
                if self.basis.contains(&col) {
                    continue;
                }
                if self.reduced_cost(cost, col) < -PIVOT_TOL {
                    entering = Some(col);
                    break;
                }
            }
            let Some(col) = entering else {
                return Ok(());
            };
            // ratio test, ties broken by smallest basis index
            let mut leaving: Option<(usize, f64)> = None;
            for row in 0..self.rows.nrows() {
                let coeff = self.rows[[row, col]];
                if coeff > PIVOT_TOL {
                    let ratio = self.rhs[row] / coeff;
                    match leaving {
                        None => leaving = Some((row, ratio)),
                        Some((best_row, best_ratio)) => {
                            if ratio < best_ratio - 1e-12
                                || ((ratio - best_ratio).abs() <= 1e-12
                                    && self.basis[row] < self.basis[best_row])
                            {
                                leaving = Some((row, ratio));
                            }
                        }
                    }
                }
            }
            let Some((row, _)) = leaving else {
                return Err(LpError::Unbounded);
            };
            self.pivot(row, col);
        }
    }
}

/// Minimize `c.x` subject to `row.x <= rhs` for every `(row, rhs)` pair
/// and `x >= 0`.
pub fn solve_min(c: &[f64], constraints: &[(Vec<f64>, f64)]) -> Result<LpSolution, LpError> {
    let num_structural = c.len();
    let num_rows = constraints.len();
    // columns: structural | slack (one per row) | artificial (flipped rows)
    let flipped: Vec<bool> = constraints.iter().map(|(_, rhs)| *rhs < 0.0).collect();
    let num_artificial = flipped.iter().filter(|f| **f).count();
    let artificial_start = num_structural + num_rows;
    let ncols = artificial_start + num_artificial;

    let mut rows = Array2::<f64>::zeros((num_rows, ncols));
    let mut rhs = vec![0.0; num_rows];
    let mut basis = vec![0usize; num_rows];
    let mut next_artificial = artificial_start;
    for (i, (coeffs, b)) in constraints.iter().enumerate() {
        assert_eq!(coeffs.len(), num_structural, "constraint arity mismatch");
        let sign = if flipped[i] { -1.0 } else { 1.0 };
        for (j, &a) in coeffs.iter().enumerate() {
            rows[[i, j]] = sign * a;
        }
        rows[[i, num_structural + i]] = sign; // slack / surplus
        rhs[i] = sign * b;
        if flipped[i] {
            rows[[i, next_artificial]] = 1.0;
            basis[i] = next_artificial;
            next_artificial += 1;
        } else {
            basis[i] = num_structural + i;
        }
    }

    let mut tableau = Tableau {
        rows,
        rhs,
        basis,
        artificial_start,
    };

    // Phase 1: drive the artificial variables to zero.
    if num_artificial > 0 {
        let mut phase1_cost = vec![0.0; ncols];
        phase1_cost[artificial_start..].fill(1.0);
        tableau.optimize(&phase1_cost, ncols)?;
        let infeasibility: f64 = tableau
            .basis
            .iter()
            .zip(&tableau.rhs)
            .filter(|(b, _)| **b >= artificial_start)
            .map(|(_, v)| v)
            .sum();
        if infeasibility > FEAS_TOL {
            return Err(LpError::Infeasible);
        }
        // pivot any artificial still basic (at zero) out of the basis
        for row in 0..tableau.rows.nrows() {
            if tableau.basis[row] < artificial_start {
                continue;
            }
            let pivot_col = (0..artificial_start)
                .find(|&col| tableau.rows[[row, col]].abs() > PIVOT_TOL);
            if let Some(col) = pivot_col {
                tableau.pivot(row, col);
            }
            // otherwise the row is redundant; the artificial stays basic
            // at value zero and is excluded from entering in phase 2
        }
    }

    // Phase 2: original objective over structural and slack columns.
    let mut phase2_cost = vec![0.0; ncols];
    phase2_cost[..num_structural].copy_from_slice(c);
    tableau.optimize(&phase2_cost, tableau.artificial_start)?;

    let mut x = vec![0.0; num_structural];
    for (row, &basic) in tableau.basis.iter().enumerate() {
        if basic < num_structural {
            x[basic] = tableau.rhs[row];
        }
    }
    let objective = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    Ok(LpSolution { x, objective })
}
