//! Small dense linear-algebra helpers: LU determinants, tiny linear solves
//! and least-squares line fits. Everything here is for desk-scale matrices.

use ndarray::Array2;

/// Determinant by LU factorization with partial pivoting.
pub fn det_lu(a: &Array2<f64>) -> f64 {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "determinant requires a square matrix");
    if n == 0 {
        return 1.0;
    }
    let mut lu = a.clone();
    let mut sign = 1.0;
    for col in 0..n {
        // pivot: largest absolute entry in this column at or below the diagonal
        let mut pivot_row = col;
        let mut pivot_abs = lu[[col, col]].abs();
        for row in col + 1..n {
            let v = lu[[row, col]].abs();
            if v > pivot_abs {
                pivot_abs = v;
                pivot_row = row;
            }
        }
        if pivot_abs == 0.0 {
            return 0.0;
        }
        if pivot_row != col {
            for k in 0..n {
                lu.swap([col, k], [pivot_row, k]);
            }
            sign = -sign;
        }
        let pivot = lu[[col, col]];
        for row in col + 1..n {
            let factor = lu[[row, col]] / pivot;
            lu[[row, col]] = factor;
            for k in col + 1..n {
                lu[[row, k]] -= factor * lu[[col, k]];
            }
        }
    }
    let mut det = sign;
    for i in 0..n {
        det *= lu[[i, i]];
    }
    det
}

/// Solve `a x = b` in place by Gaussian elimination with partial pivoting.
/// Panics if the system is singular to working precision.
pub fn solve_dense(a: &Array2<f64>, b: &[f64]) -> Vec<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    assert_eq!(n, b.len());
    let mut m = a.clone();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_abs = m[[col, col]].abs();
        for row in col + 1..n {
            let v = m[[row, col]].abs();
            if v > pivot_abs {
                pivot_abs = v;
                pivot_row = row;
            }
        }
        assert!(pivot_abs > 0.0, "singular system in solve_dense");
        if pivot_row != col {
            for k in 0..n {
                m.swap([col, k], [pivot_row, k]);
            }
            rhs.swap(col, pivot_row);
        }
        let pivot = m[[col, col]];
        for row in col + 1..n {
            let factor = m[[row, col]] / pivot;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                m[[row, k]] -= factor * m[[col, k]];
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for k in row + 1..n {
            acc -= m[[row, k]] * x[k];
        }
        x[row] = acc / m[[row, row]];
    }
    x
}

/// Ordinary least-squares fit of `y = slope * x + intercept`.
pub fn ols_line_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "line fit needs at least two points");
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    assert!(sxx > 0.0, "degenerate abscissae in line fit");
    let slope = sxy / sxx;
    (slope, mean_y - slope * mean_x)
}

/// Least-squares polynomial fit of the given degree; returns coefficients
/// lowest order first. Solved through the normal equations, which is fine
/// for the handful of well-separated abscissae used here.
pub fn polyfit(xs: &[f64], ys: &[f64], degree: usize) -> Vec<f64> {
    assert!(xs.len() == ys.len() && xs.len() > degree);
    let terms = degree + 1;
    let mut ata = Array2::<f64>::zeros((terms, terms));
    let mut atb = vec![0.0; terms];
    for (&x, &y) in xs.iter().zip(ys) {
        let mut powers = vec![1.0; terms];
        for t in 1..terms {
            powers[t] = powers[t - 1] * x;
        }
        for r in 0..terms {
            atb[r] += powers[r] * y;
            for c in 0..terms {
                ata[[r, c]] += powers[r] * powers[c];
            }
        }
    }
    solve_dense(&ata, &atb)
}
