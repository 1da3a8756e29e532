//! Steady-state distribution of a row-stochastic transition matrix.
//!
//! Uniqueness is decided structurally before any arithmetic: the chain has a
//! unique stationary distribution iff its positive-entry graph has exactly
//! one closed communicating class. Transient states get probability zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ProbabilityVector, StochasticMatrix, DEFAULT_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StationaryMethod {
    /// Solve (Pᵀ − I)π = 0 with one equation replaced by Σπ = 1.
    #[default]
    Linear,
    /// Iterate π ← π(P + I)/2. The lazy chain has the same fixed point and
    /// is aperiodic, so periodic chains converge as well.
    Power,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryConfig {
    pub method: StationaryMethod,
    pub max_iter: usize,
    pub residual_tol: f64,
}

impl Default for StationaryConfig {
    fn default() -> Self {
        Self {
            method: StationaryMethod::Linear,
            max_iter: 100_000,
            residual_tol: 1e-10,
        }
    }
}

/// ‖πP − π‖₁.
pub fn stationary_residual(pi: &[f64], transition: &StochasticMatrix) -> f64 {
    let n = pi.len();
    (0..n)
        .map(|j| {
            let flow: f64 = (0..n).map(|i| pi[i] * transition.get(i, j)).sum();
            (flow - pi[j]).abs()
        })
        .sum()
}

/// Communicating classes that no edge leaves, each sorted, ordered by their
/// smallest member.
pub fn closed_classes(transition: &StochasticMatrix) -> Vec<Vec<usize>> {
    let n = transition.n_rows();
    let reach: Vec<Vec<bool>> = (0..n).map(|s| reachable_from(transition, s)).collect();
    let mut assigned = vec![false; n];
    let mut classes = Vec::new();
    for i in 0..n {
        if assigned[i] {
            continue;
        }
        let class: Vec<usize> = (0..n).filter(|&j| reach[i][j] && reach[j][i]).collect();
        for &j in &class {
            assigned[j] = true;
        }
        let closed = class
            .iter()
            .all(|&s| (0..n).all(|t| !reach[s][t] || class.contains(&t)));
        if closed {
            classes.push(class);
        }
    }
    classes
}

fn reachable_from(transition: &StochasticMatrix, start: usize) -> Vec<bool> {
    let n = transition.n_rows();
    let mut seen = vec![false; n];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(s) = stack.pop() {
        for (t, &p) in transition.row(s).iter().enumerate() {
            if p > 0.0 && !seen[t] {
                seen[t] = true;
                stack.push(t);
            }
        }
    }
    seen
}

pub fn stationary_distribution(
    transition: &StochasticMatrix,
    config: &StationaryConfig,
) -> Result<ProbabilityVector> {
    check_square_stochastic(transition)?;
    let classes = closed_classes(transition);
    if classes.len() != 1 {
        return Err(Error::NonUniqueStationary { classes });
    }
    let (pi, iterations) = match config.method {
        StationaryMethod::Linear => (solve_linear(transition)?, 0),
        StationaryMethod::Power => power_iteration(transition, config)?,
    };
    let residual = stationary_residual(&pi, transition);
    if residual.is_nan() || residual > config.residual_tol {
        return Err(Error::NotConverged {
            iterations,
            residual,
        });
    }
    Ok(ProbabilityVector::new(pi))
}

fn check_square_stochastic(transition: &StochasticMatrix) -> Result<()> {
    let n = transition.n_rows();
    if n == 0 || transition.rows().iter().any(|r| r.len() != n) {
        return Err(Error::Dimension(format!(
            "transition matrix must be square and non-empty, got {n} rows"
        )));
    }
    for (i, row) in transition.rows().iter().enumerate() {
        if let Some((j, &value)) = row
            .iter()
            .enumerate()
            .find(|(_, &p)| !(0.0..=1.0).contains(&p))
        {
            return Err(Error::NegativeEntry {
                row: i,
                col: j,
                value,
            });
        }
        let sum: f64 = row.iter().sum();
        let off = (sum - 1.0).abs();
        if off.is_nan() || off > DEFAULT_TOLERANCE {
            return Err(Error::Validation(vec![crate::model::Violation::RowSum {
                component: crate::model::Component::Transition,
                row: i,
                sum,
            }]));
        }
    }
    Ok(())
}

fn solve_linear(transition: &StochasticMatrix) -> Result<Vec<f64>> {
    let n = transition.n_rows();
    // Augmented system [Pᵀ − I | 0] with the last equation swapped for Σπ = 1.
    let mut a = vec![vec![0.0; n + 1]; n];
    for (r, eq) in a.iter_mut().enumerate().take(n - 1) {
        for (c, coef) in eq.iter_mut().enumerate().take(n) {
            *coef = transition.get(c, r) - if r == c { 1.0 } else { 0.0 };
        }
    }
    a[n - 1].iter_mut().for_each(|x| *x = 1.0);

    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .expect("non-empty range");
        if a[pivot][col].abs() < 1e-14 {
            return Err(Error::NonUniqueStationary {
                classes: closed_classes(transition),
            });
        }
        a.swap(col, pivot);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..=n {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let tail: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (a[r][n] - tail) / a[r][r];
    }
    Ok(clean(x))
}

const POLISH_FACTOR: f64 = 1e-4;

fn power_iteration(
    transition: &StochasticMatrix,
    config: &StationaryConfig,
) -> Result<(Vec<f64>, usize)> {
    let n = transition.n_rows();
    let mut pi = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for iter in 1..=config.max_iter {
        for (j, slot) in next.iter_mut().enumerate() {
            let flow: f64 = (0..n).map(|i| pi[i] * transition.get(i, j)).sum();
            *slot = 0.5 * (flow + pi[j]);
        }
        let s: f64 = next.iter().sum();
        next.iter_mut().for_each(|p| *p /= s);
        std::mem::swap(&mut pi, &mut next);
        residual = stationary_residual(&pi, transition);
        // a small residual can still hide a larger error in π on
        // ill-conditioned chains, so iterate past the tolerance while cheap
        if residual <= config.residual_tol * POLISH_FACTOR {
            return Ok((clean(pi), iter));
        }
    }
    if residual <= config.residual_tol {
        return Ok((clean(pi), config.max_iter));
    }
    Err(Error::NotConverged {
        iterations: config.max_iter,
        residual,
    })
}

/// Zeroes round-off negatives and rescales to unit sum.
fn clean(mut pi: Vec<f64>) -> Vec<f64> {
    pi.iter_mut().for_each(|p| *p = p.max(0.0));
    let s: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|p| *p /= s);
    pi
}
