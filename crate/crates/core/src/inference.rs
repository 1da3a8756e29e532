//! Evaluation, decoding and learning for discrete HMMs.
//!
//! Forward and backward passes use per-step scaling: the scaled forward
//! vector α̂_t sums to one and `scales[t]` holds the normalizer c_t, so
//! log P(O | λ) = Σ_t ln c_t. The backward pass reuses the same c_t, which
//! makes Σ_i α̂_t(i) β̂_t(i) = 1 at every step. Viterbi runs in log space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{HmmModel, DEFAULT_TOLERANCE};
use crate::sequence::{check_symbols, StateSequence};

/// Natural-log probability; `-inf` for impossible events.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LogLikelihood(pub f64);

impl LogLikelihood {
    pub const IMPOSSIBLE: Self = Self(f64::NEG_INFINITY);

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn probability(self) -> f64 {
        self.0.exp()
    }

    pub fn is_impossible(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }
}

#[derive(Debug, Clone)]
pub struct ForwardPass {
    /// Scaled forward variables, one row per step; every row sums to 1.
    pub alpha: Vec<Vec<f64>>,
    pub scales: Vec<f64>,
    pub log_likelihood: LogLikelihood,
}

#[derive(Debug, Clone)]
pub struct BackwardPass {
    /// Backward variables scaled by the forward normalizers.
    pub beta: Vec<Vec<f64>>,
    pub scales: Vec<f64>,
}

impl BackwardPass {
    /// β_t(i) before scaling: β̂_t(i) · ∏_{s>t} c_s.
    pub fn unscaled(&self, t: usize) -> Vec<f64> {
        let factor: f64 = self.scales[t + 1..].iter().product();
        self.beta[t].iter().map(|b| b * factor).collect()
    }
}

fn prepare(model: &HmmModel, obs: &[usize]) -> Result<()> {
    model.ensure_valid(DEFAULT_TOLERANCE)?;
    check_symbols(obs, model.n_symbols())
}

/// Scaled forward recursion. Stops early with `-inf` likelihood (and
/// truncated `alpha`/`scales`) as soon as the prefix becomes impossible.
pub fn forward(model: &HmmModel, obs: &[usize]) -> Result<ForwardPass> {
    prepare(model, obs)?;
    Ok(forward_unchecked(model, obs))
}

fn forward_unchecked(model: &HmmModel, obs: &[usize]) -> ForwardPass {
    let n = model.n_states();
    let a = model.transition();
    let b = model.emission();
    let mut alpha = Vec::with_capacity(obs.len());
    let mut scales = Vec::with_capacity(obs.len());
    let mut log_likelihood = 0.0;

    let mut current: Vec<f64> = (0..n)
        .map(|i| model.initial().entries()[i] * b.get(i, obs[0]))
        .collect();
    for t in 0..obs.len() {
        if t > 0 {
            let prev: &Vec<f64> = alpha.last().expect("previous step");
            current = (0..n)
                .map(|j| {
                    let inflow: f64 = (0..n).map(|i| prev[i] * a.get(i, j)).sum();
                    inflow * b.get(j, obs[t])
                })
                .collect();
        }
        let c: f64 = current.iter().sum();
        scales.push(c);
        if c == 0.0 {
            return ForwardPass {
                alpha,
                scales,
                log_likelihood: LogLikelihood::IMPOSSIBLE,
            };
        }
        current.iter_mut().for_each(|x| *x /= c);
        log_likelihood += c.ln();
        alpha.push(std::mem::take(&mut current));
    }
    ForwardPass {
        alpha,
        scales,
        log_likelihood: LogLikelihood(log_likelihood),
    }
}

/// log P(O | λ).
pub fn forward_likelihood(model: &HmmModel, obs: &[usize]) -> Result<LogLikelihood> {
    Ok(forward(model, obs)?.log_likelihood)
}

/// Backward variables scaled with the forward normalizers. Fails with
/// [`Error::ImpossibleSequence`] when P(O | λ) = 0, since the scaling is
/// undefined there.
pub fn backward_pass(model: &HmmModel, obs: &[usize]) -> Result<BackwardPass> {
    let fwd = forward(model, obs)?;
    if fwd.log_likelihood.is_impossible() {
        return Err(Error::ImpossibleSequence);
    }
    Ok(backward_unchecked(model, obs, &fwd.scales))
}

fn backward_unchecked(model: &HmmModel, obs: &[usize], scales: &[f64]) -> BackwardPass {
    let n = model.n_states();
    let big_t = obs.len();
    let a = model.transition();
    let b = model.emission();
    let mut beta = vec![vec![1.0; n]; big_t];
    for t in (0..big_t - 1).rev() {
        let (head, tail) = beta.split_at_mut(t + 1);
        let next = &tail[0];
        let c = scales[t + 1];
        for (i, slot) in head[t].iter_mut().enumerate() {
            let s: f64 = (0..n)
                .map(|j| a.get(i, j) * b.get(j, obs[t + 1]) * next[j])
                .sum();
            *slot = s / c;
        }
    }
    BackwardPass {
        beta,
        scales: scales.to_vec(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViterbiPath {
    pub states: StateSequence,
    /// Joint log-probability ln P(states, O | λ) of the returned path.
    pub log_probability: LogLikelihood,
}

/// Most probable state path. Ties go to the lowest state index, both for the
/// final state and at every backtrack step.
pub fn viterbi_decode(model: &HmmModel, obs: &[usize]) -> Result<ViterbiPath> {
    prepare(model, obs)?;
    let n = model.n_states();
    let ln = |p: f64| p.ln();
    let log_a: Vec<Vec<f64>> = model
        .transition()
        .rows()
        .iter()
        .map(|r| r.iter().copied().map(ln).collect())
        .collect();
    let log_b: Vec<Vec<f64>> = model
        .emission()
        .rows()
        .iter()
        .map(|r| r.iter().copied().map(ln).collect())
        .collect();

    let mut delta: Vec<f64> = (0..n)
        .map(|i| ln(model.initial().entries()[i]) + log_b[i][obs[0]])
        .collect();
    let mut backptr: Vec<Vec<usize>> = Vec::with_capacity(obs.len().saturating_sub(1));
    for &o in &obs[1..] {
        let mut next = vec![f64::NEG_INFINITY; n];
        let mut ptr = vec![0usize; n];
        for j in 0..n {
            let mut best = f64::NEG_INFINITY;
            let mut arg = 0;
            for i in 0..n {
                let score = delta[i] + log_a[i][j];
                if score > best {
                    best = score;
                    arg = i;
                }
            }
            next[j] = best + log_b[j][o];
            ptr[j] = arg;
        }
        backptr.push(ptr);
        delta = next;
    }

    let mut last = 0;
    for i in 1..n {
        if delta[i] > delta[last] {
            last = i;
        }
    }
    let best = delta[last];
    if best == f64::NEG_INFINITY {
        return Err(Error::NoFeasiblePath);
    }
    let mut path = vec![last; obs.len()];
    for t in (0..backptr.len()).rev() {
        path[t] = backptr[t][path[t + 1]];
    }
    Ok(ViterbiPath {
        states: StateSequence::new(path),
        log_probability: LogLikelihood(best),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub max_iter: usize,
    /// Stop once an iteration improves the log-likelihood by less than this.
    pub loglik_delta_tol: f64,
    /// Added to every emission count before row normalization.
    pub floor: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            max_iter: 100,
            loglik_delta_tol: 1e-9,
            floor: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainingResult {
    pub model: HmmModel,
    /// Log-likelihood of the initial model followed by that of each
    /// re-estimated model.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn check_training_input(model: &HmmModel, obs: &[usize]) -> Result<()> {
    model.ensure_shape()?;
    for (matrix, m) in [
        ("transition", model.transition()),
        ("emission", model.emission()),
    ] {
        if let Some(row) = m.rows().iter().position(|r| r.iter().all(|&p| p == 0.0)) {
            return Err(Error::DegenerateRow { matrix, row });
        }
    }
    prepare(model, obs)?;
    if obs.len() < 2 {
        return Err(Error::SequenceTooShort {
            needed: 2,
            got: obs.len(),
        });
    }
    Ok(())
}

/// One EM re-estimation of (A, B, π). Returns the new model together with
/// the log-likelihood of the input model.
///
/// States with zero expected occupancy keep their previous rows.
pub fn baum_welch_step(model: &HmmModel, obs: &[usize], floor: f64) -> Result<(HmmModel, f64)> {
    check_training_input(model, obs)?;
    if floor.is_nan() || floor < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "floor must be >= 0, got {floor}"
        )));
    }
    reestimate(model, obs, floor)
}

fn reestimate(model: &HmmModel, obs: &[usize], floor: f64) -> Result<(HmmModel, f64)> {
    let n = model.n_states();
    let m = model.n_symbols();
    let big_t = obs.len();
    let a = model.transition();
    let b = model.emission();

    let fwd = forward_unchecked(model, obs);
    if fwd.log_likelihood.is_impossible() {
        return Err(Error::ImpossibleSequence);
    }
    let bwd = backward_unchecked(model, obs, &fwd.scales);

    let mut trans_num = vec![vec![0.0; n]; n];
    let mut trans_den = vec![0.0; n];
    let mut emit_num = vec![vec![0.0; m]; n];
    let mut emit_den = vec![0.0; n];
    let mut gamma = vec![0.0; n];
    let mut initial = vec![0.0; n];

    for t in 0..big_t {
        for i in 0..n {
            gamma[i] = fwd.alpha[t][i] * bwd.beta[t][i];
        }
        let g: f64 = gamma.iter().sum();
        gamma.iter_mut().for_each(|x| *x /= g);
        if t == 0 {
            initial.copy_from_slice(&gamma);
        }
        for i in 0..n {
            emit_num[i][obs[t]] += gamma[i];
            emit_den[i] += gamma[i];
        }
        if t + 1 < big_t {
            let c = fwd.scales[t + 1];
            for i in 0..n {
                if fwd.alpha[t][i] == 0.0 {
                    continue;
                }
                trans_den[i] += gamma[i];
                for j in 0..n {
                    trans_num[i][j] +=
                        fwd.alpha[t][i] * a.get(i, j) * b.get(j, obs[t + 1]) * bwd.beta[t + 1][j]
                            / c;
                }
            }
        }
    }

    let transition = (0..n)
        .map(|i| normalized_or(&trans_num[i], 0.0, trans_den[i], a.row(i)))
        .collect();
    let emission = (0..n)
        .map(|i| normalized_or(&emit_num[i], floor, emit_den[i], b.row(i)))
        .collect();
    let next = HmmModel::unchecked(
        model.states().clone(),
        model.alphabet().clone(),
        transition,
        emission,
        initial,
    );
    let next = match model.meta() {
        Some(meta) => next.with_meta(meta.clone()),
        None => next,
    };
    Ok((next, fwd.log_likelihood.0))
}

fn normalized_or(num: &[f64], floor: f64, den: f64, previous: &[f64]) -> Vec<f64> {
    if den <= 0.0 {
        return previous.to_vec();
    }
    let row: Vec<f64> = num.iter().map(|x| x + floor).collect();
    let s: f64 = row.iter().sum();
    row.into_iter().map(|x| x / s).collect()
}

/// Runs [`baum_welch_step`] until `max_iter` re-estimations or until the
/// improvement drops below `loglik_delta_tol`.
pub fn baum_welch_train(
    model: &HmmModel,
    obs: &[usize],
    config: &TrainingConfig,
) -> Result<TrainingResult> {
    check_training_input(model, obs)?;
    if config.floor.is_nan() || config.floor < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "floor must be >= 0, got {}",
            config.floor
        )));
    }
    let (mut next, mut ll) = reestimate(model, obs, config.floor)?;
    let mut current = model.clone();
    let mut trace = vec![ll];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iter {
        current = next;
        iterations += 1;
        let (candidate, ll_current) = reestimate(&current, obs, config.floor)?;
        trace.push(ll_current);
        next = candidate;
        if ll_current - ll < config.loglik_delta_tol {
            converged = true;
            break;
        }
        ll = ll_current;
    }
    Ok(TrainingResult {
        model: current,
        trace,
        iterations,
        converged,
    })
}
