//! Nash equilibrium solvers for two-player bimatrix stage games:
//! exhaustive support enumeration (reference solver) and Lemke-Howson
//! complementary pivoting (fast path used inside rollouts).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::StagePayoffs;

/// A (possibly mixed) equilibrium of one stage game. Payoffs are expected
/// values under the joint strategy, always measured against the original
/// (unshifted, unperturbed) matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub row_strategy: Vec<f64>,
    pub col_strategy: Vec<f64>,
    pub row_payoff: f64,
    pub col_payoff: f64,
}

impl Equilibrium {
    pub fn total(&self) -> f64 {
        self.row_payoff + self.col_payoff
    }
}

/// Result of one Lemke-Howson run with numerical diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemkeHowsonSolution {
    pub equilibrium: Equilibrium,
    /// True when the base matrices were degenerate and a deterministic
    /// perturbation was required to terminate.
    pub perturbed: bool,
    pub pivots: usize,
}

const MAX_PIVOTS: usize = 1000;
const STRATEGY_DEDUP_TOL: f64 = 1e-8;

fn expected_payoffs(a: &[Vec<f64>], b: &[Vec<f64>], x: &[f64], y: &[f64]) -> (f64, f64) {
    let mut u_row = 0.0;
    let mut u_col = 0.0;
    for (i, xi) in x.iter().enumerate() {
        for (j, yj) in y.iter().enumerate() {
            u_row += xi * a[i][j] * yj;
            u_col += xi * b[i][j] * yj;
        }
    }
    (u_row, u_col)
}

fn matrix_scale(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let max_abs = a
        .iter()
        .chain(b.iter())
        .flatten()
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    1.0 + max_abs
}

/// Check that (x, y) is an approximate Nash equilibrium: no unilateral pure
/// deviation gains more than `tol`.
pub fn is_nash(game: &StagePayoffs, x: &[f64], y: &[f64], tol: f64) -> bool {
    let a = game.row_matrix();
    let b = game.col_matrix();
    let (u_row, u_col) = expected_payoffs(&a, &b, x, y);
    for row in &a {
        let dev: f64 = row.iter().zip(y).map(|(v, yj)| v * yj).sum();
        if dev > u_row + tol {
            return false;
        }
    }
    let mut col_devs = vec![0.0; game.n_cols()];
    for (xi, row) in x.iter().zip(&b) {
        for (dev, v) in col_devs.iter_mut().zip(row) {
            *dev += xi * v;
        }
    }
    col_devs.iter().all(|dev| *dev <= u_col + tol)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn recurse(start: usize, n: usize, k: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for i in start..n {
            current.push(i);
            recurse(i + 1, n, k, current, out);
            current.pop();
        }
    }
    recurse(0, n, k, &mut current, &mut out);
    out
}

/// Solve the indifference system for one support: returns the mixed
/// strategy that equalizes the opponent's supported payoffs, together with
/// that common payoff value.
fn indifference_solution(payoff_rows: &[Vec<f64>], scale: f64) -> Option<(Vec<f64>, f64)> {
    let k = payoff_rows.len();
    let mut m = DMatrix::<f64>::zeros(k + 1, k + 1);
    let mut rhs = DVector::<f64>::zeros(k + 1);
    for (r, row) in payoff_rows.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            m[(r, c)] = v;
        }
        m[(r, k)] = -1.0;
    }
    for c in 0..k {
        m[(k, c)] = 1.0;
    }
    rhs[k] = 1.0;

    let solution = m.clone().lu().solve(&rhs)?;
    // Reject near-singular systems via the residual.
    let residual = (&m * &solution) - &rhs;
    if residual.amax() > 1e-7 * scale || solution.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let mut probs: Vec<f64> = solution.iter().take(k).copied().collect();
    if probs.iter().any(|&p| p < -1e-9) {
        return None;
    }
    for p in &mut probs {
        *p = p.max(0.0);
    }
    let sum: f64 = probs.iter().sum();
    if sum <= 1e-12 {
        return None;
    }
    for p in &mut probs {
        *p /= sum;
    }
    Some((probs, solution[k]))
}

/// Enumerate all Nash equilibria on equal-size supports, from pure
/// strategies up to full support. Reference solver: exhaustive and slow,
/// used to validate the pivoting solver.
pub fn solve_nash_enumeration(game: &StagePayoffs) -> Result<Vec<Equilibrium>> {
    let m = game.n_rows();
    let n = game.n_cols();
    if m == 0 || n == 0 {
        return Err(Error::InvalidGame("empty payoff matrix".into()));
    }
    let a = game.row_matrix();
    let b = game.col_matrix();
    let scale = matrix_scale(&a, &b);
    let tol_dev = 1e-9 * scale;

    let mut found: Vec<Equilibrium> = Vec::new();
    for k in 1..=m.min(n) {
        for rows in combinations(m, k) {
            for cols in combinations(n, k) {
                // Column player's mix makes supported rows indifferent.
                let sub_a: Vec<Vec<f64>> = rows
                    .iter()
                    .map(|&i| cols.iter().map(|&j| a[i][j]).collect())
                    .collect();
                let Some((y_sub, v_row)) = indifference_solution(&sub_a, scale) else {
                    continue;
                };
                // Row player's mix makes supported columns indifferent
                // (transpose so each system row is one supported column).
                let sub_bt: Vec<Vec<f64>> = cols
                    .iter()
                    .map(|&j| rows.iter().map(|&i| b[i][j]).collect())
                    .collect();
                let Some((x_sub, v_col)) = indifference_solution(&sub_bt, scale) else {
                    continue;
                };

                let mut x = vec![0.0; m];
                for (idx, &i) in rows.iter().enumerate() {
                    x[i] = x_sub[idx];
                }
                let mut y = vec![0.0; n];
                for (idx, &j) in cols.iter().enumerate() {
                    y[j] = y_sub[idx];
                }

                // No profitable deviation outside the supports.
                let row_dev_ok = (0..m).all(|i| {
                    let dev: f64 = (0..n).map(|j| a[i][j] * y[j]).sum();
                    dev <= v_row + tol_dev
                });
                let col_dev_ok = (0..n).all(|j| {
                    let dev: f64 = (0..m).map(|i| x[i] * b[i][j]).sum();
                    dev <= v_col + tol_dev
                });
                if !row_dev_ok || !col_dev_ok {
                    continue;
                }

                let duplicate = found.iter().any(|e| {
                    strategy_distance(&e.row_strategy, &x) < STRATEGY_DEDUP_TOL
                        && strategy_distance(&e.col_strategy, &y) < STRATEGY_DEDUP_TOL
                });
                if duplicate {
                    continue;
                }
                let (u_row, u_col) = expected_payoffs(&a, &b, &x, &y);
                found.push(Equilibrium {
                    row_strategy: x,
                    col_strategy: y,
                    row_payoff: u_row,
                    col_payoff: u_col,
                });
            }
        }
    }
    Ok(found)
}

fn strategy_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()))
}

/// One complementary-pivoting tableau. Variable ids double as labels:
/// ids 0..m are the row player's strategies (x_i, complementary slack s_i),
/// ids m..m+n the column player's (y_j, complementary slack r_j).
struct Tableau {
    coeffs: DMatrix<f64>,
    rhs: DVector<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    /// Bring variable `entering` into the basis via a minimum-ratio pivot.
    /// Returns the id of the leaving variable.
    fn pivot(&mut self, entering: usize) -> Result<usize> {
        let col = entering;
        let mut pivot_row: Option<usize> = None;
        let mut best_ratio = f64::INFINITY;
        for r in 0..self.coeffs.nrows() {
            let coef = self.coeffs[(r, col)];
            if coef > 1e-11 {
                let ratio = self.rhs[r] / coef;
                let better = match pivot_row {
                    None => true,
                    Some(cur) => {
                        ratio < best_ratio - 1e-12 * (1.0 + best_ratio.abs())
                            || (ratio <= best_ratio + 1e-12 * (1.0 + best_ratio.abs())
                                && self.basis[r] < self.basis[cur])
                    }
                };
                if better {
                    pivot_row = Some(r);
                    best_ratio = ratio;
                }
            }
        }
        let r = pivot_row.ok_or_else(|| {
            Error::NumericalError("complementary pivoting hit a ray (unbounded direction)".into())
        })?;
        let pivot = self.coeffs[(r, col)];
        for c in 0..self.coeffs.ncols() {
            self.coeffs[(r, c)] /= pivot;
        }
        self.rhs[r] /= pivot;
        for rr in 0..self.coeffs.nrows() {
            if rr == r {
                continue;
            }
            let factor = self.coeffs[(rr, col)];
            if factor != 0.0 {
                for c in 0..self.coeffs.ncols() {
                    self.coeffs[(rr, c)] -= factor * self.coeffs[(r, c)];
                }
                self.rhs[rr] -= factor * self.rhs[r];
            }
        }
        let leaving = self.basis[r];
        self.basis[r] = entering;
        Ok(leaving)
    }

    /// Basic value of variable `id`, zero if nonbasic.
    fn value(&self, id: usize) -> f64 {
        self.basis
            .iter()
            .position(|&b| b == id)
            .map_or(0.0, |row| self.rhs[row])
    }
}

/// Core Lemke-Howson run on strictly positive matrices, starting by
/// dropping `initial_label`. Returns normalized strategies and pivot count.
fn lemke_howson_core(
    a_pos: &[Vec<f64>],
    b_pos: &[Vec<f64>],
    initial_label: usize,
) -> Result<(Vec<f64>, Vec<f64>, usize)> {
    let m = a_pos.len();
    let n = a_pos[0].len();
    let total = m + n;

    // Column player's polytope: B^T x + r = 1 (n rows).
    let mut t1 = Tableau {
        coeffs: DMatrix::zeros(n, total),
        rhs: DVector::from_element(n, 1.0),
        basis: (0..n).map(|j| m + j).collect(),
    };
    for (i, row) in b_pos.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            t1.coeffs[(j, i)] = v;
        }
    }
    for j in 0..n {
        t1.coeffs[(j, m + j)] = 1.0;
    }
    // Row player's polytope: A y + s = 1 (m rows).
    let mut t2 = Tableau {
        coeffs: DMatrix::zeros(m, total),
        rhs: DVector::from_element(m, 1.0),
        basis: (0..m).collect(),
    };
    for (i, row) in a_pos.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            t2.coeffs[(i, m + j)] = v;
        }
        t2.coeffs[(i, i)] = 1.0;
    }

    // x-variables live in tableau 1, y-variables in tableau 2. The leaving
    // variable's complement shares its id and lives in the other tableau,
    // so the walk simply alternates tableaus entering the last-left id.
    let mut in_t1 = initial_label < m;
    let mut entering = initial_label;
    let mut pivots = 0;
    loop {
        if pivots >= MAX_PIVOTS {
            return Err(Error::NumericalError(format!(
                "complementary pivoting did not terminate within {MAX_PIVOTS} pivots"
            )));
        }
        let leaving = if in_t1 {
            t1.pivot(entering)?
        } else {
            t2.pivot(entering)?
        };
        pivots += 1;
        if leaving == initial_label {
            break;
        }
        entering = leaving;
        in_t1 = !in_t1;
    }

    let mut x: Vec<f64> = (0..m).map(|i| t1.value(i).max(0.0)).collect();
    let mut y: Vec<f64> = (0..n).map(|j| t2.value(m + j).max(0.0)).collect();
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    if sx <= 1e-12 || sy <= 1e-12 {
        return Err(Error::NumericalError(
            "complementary pivoting terminated at the artificial origin".into(),
        ));
    }
    for v in &mut x {
        *v /= sx;
    }
    for v in &mut y {
        *v /= sy;
    }
    Ok((x, y, pivots))
}

fn shift_positive(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let min = m
        .iter()
        .flatten()
        .fold(f64::INFINITY, |acc, &v| acc.min(v));
    m.iter()
        .map(|row| row.iter().map(|v| v - min + 1.0).collect())
        .collect()
}

/// Solve one stage game by Lemke-Howson, dropping `initial_label`
/// (0..n_rows+n_cols). Degenerate games that stall the pivot walk are
/// retried under deterministic lexicographic perturbations of increasing
/// size; the result is flagged and payoffs are always reported against the
/// original matrices.
pub fn solve_nash_lemke_howson(
    game: &StagePayoffs,
    initial_label: usize,
) -> Result<LemkeHowsonSolution> {
    let m = game.n_rows();
    let n = game.n_cols();
    if m == 0 || n == 0 {
        return Err(Error::InvalidGame("empty payoff matrix".into()));
    }
    if initial_label >= m + n {
        return Err(Error::InvalidGame(format!(
            "initial label {initial_label} out of range for a {m}x{n} game"
        )));
    }
    let a = game.row_matrix();
    let b = game.col_matrix();

    let mut last_err = None;
    for (attempt, eps) in [0.0, 1e-9, 1e-7, 1e-5].into_iter().enumerate() {
        let scale = matrix_scale(&a, &b);
        let mut a_try = a.clone();
        let mut b_try = b.clone();
        if eps > 0.0 {
            for i in 0..m {
                for j in 0..n {
                    a_try[i][j] += eps * scale * (1.0 + (i * n + j) as f64);
                    b_try[i][j] += eps * scale * (1.0 + (j * m + i) as f64);
                }
            }
        }
        let a_pos = shift_positive(&a_try);
        let b_pos = shift_positive(&b_try);
        match lemke_howson_core(&a_pos, &b_pos, initial_label) {
            Ok((x, y, pivots)) => {
                let (u_row, u_col) = expected_payoffs(&a, &b, &x, &y);
                return Ok(LemkeHowsonSolution {
                    equilibrium: Equilibrium {
                        row_strategy: x,
                        col_strategy: y,
                        row_payoff: u_row,
                        col_payoff: u_col,
                    },
                    perturbed: attempt > 0,
                    pivots,
                });
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap_or_else(|| Error::NumericalError("pivoting failed".into())))
}

/// Run Lemke-Howson from every initial label and deduplicate, approximating
/// the full equilibrium set reachable by pivoting.
pub fn lemke_howson_all(game: &StagePayoffs) -> Result<Vec<LemkeHowsonSolution>> {
    let labels = game.n_rows() + game.n_cols();
    let mut out: Vec<LemkeHowsonSolution> = Vec::new();
    let mut last_err = None;
    for label in 0..labels {
        match solve_nash_lemke_howson(game, label) {
            Ok(sol) => {
                let duplicate = out.iter().any(|s| {
                    strategy_distance(&s.equilibrium.row_strategy, &sol.equilibrium.row_strategy)
                        < STRATEGY_DEDUP_TOL
                        && strategy_distance(
                            &s.equilibrium.col_strategy,
                            &sol.equilibrium.col_strategy,
                        ) < STRATEGY_DEDUP_TOL
                });
                if !duplicate {
                    out.push(sol);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    if out.is_empty() {
        return Err(last_err.unwrap_or_else(|| Error::NumericalError("no equilibrium found".into())));
    }
    Ok(out)
}

/// Pick the equilibrium with the highest payoff sum; exact ties resolve
/// lexicographically on the concatenated strategy vectors.
pub fn select_equilibrium(eqs: &[Equilibrium]) -> Option<&Equilibrium> {
    eqs.iter().reduce(|best, e| {
        let d = e.total() - best.total();
        if d > 1e-12 {
            e
        } else if d < -1e-12 {
            best
        } else {
            let key = |eq: &Equilibrium| {
                eq.row_strategy
                    .iter()
                    .chain(&eq.col_strategy)
                    .copied()
                    .collect::<Vec<f64>>()
            };
            let (ke, kb) = (key(e), key(best));
            for (ve, vb) in ke.iter().zip(&kb) {
                match ve.total_cmp(vb) {
                    std::cmp::Ordering::Greater => return e,
                    std::cmp::Ordering::Less => return best,
                    std::cmp::Ordering::Equal => {}
                }
            }
            best
        }
    })
}
