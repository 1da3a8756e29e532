//! Candidate state-sequence ranking, best-of-N path search and steady-state
//! trend reports.
//!
//! `compare(a, b)` is the share of positions where two equal-length state
//! sequences agree. A candidate's fitness is `1 / Σ_{j≠i} compare(i, j)`, so
//! the highest-fitness candidate is the one that agrees least with the rest.
//! It says nothing about likelihood.

use std::fmt::Write as _;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::generator::{generate_stream, path_log_probability, GeneratedPath, RngSpec};
use crate::inference::LogLikelihood;
use crate::model::{HmmModel, DEFAULT_TOLERANCE};
use crate::sequence::StateSequence;
use crate::stationary::{stationary_distribution, StationaryConfig};

/// Positional agreement in [0, 1]; equals 1 − normalized Hamming distance.
pub fn compare_sequences(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::EmptySequence);
    }
    let matches = a.iter().zip(b).filter(|(x, y)| x == y).count();
    Ok(matches as f64 / a.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    labels: Vec<String>,
    sequences: Vec<StateSequence>,
}

impl CandidateSet {
    pub fn new(candidates: Vec<(String, StateSequence)>) -> Result<Self> {
        if candidates.len() < 2 {
            return Err(Error::TooFewCandidates {
                needed: 2,
                got: candidates.len(),
            });
        }
        let (labels, sequences): (Vec<_>, Vec<_>) = candidates.into_iter().unzip();
        let len = sequences[0].len();
        if len == 0 {
            return Err(Error::EmptySequence);
        }
        if let Some(s) = sequences.iter().find(|s| s.len() != len) {
            return Err(Error::LengthMismatch {
                left: len,
                right: s.len(),
            });
        }
        Ok(Self { labels, sequences })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn sequences(&self) -> &[StateSequence] {
        &self.sequences
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

fn serialize_fitness<S: Serializer>(value: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if value.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitnessRow {
    pub label: String,
    pub compare_sum: f64,
    /// `1 / compare_sum`; `+inf` when the candidate matches nothing.
    #[serde(serialize_with = "serialize_fitness")]
    pub fitness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitnessResult {
    pub rows: Vec<FitnessRow>,
    /// Labels by descending fitness; equal fitness keeps input order.
    pub ranking: Vec<String>,
}

/// A computed compare sum that disagrees with a reference value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Divergence {
    pub label: String,
    pub reference: f64,
    pub computed: f64,
}

pub fn fitness_table(set: &CandidateSet) -> Result<FitnessResult> {
    let k = set.len();
    let mut pair = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            if i != j {
                pair[i][j] = compare_sequences(&set.sequences[i], &set.sequences[j])?;
            }
        }
    }
    let sums: Vec<f64> = pair.iter().map(|r| r.iter().sum()).collect();
    let upper: f64 = (0..k)
        .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
        .map(|(i, j)| pair[i][j])
        .sum();
    let total: f64 = sums.iter().sum();
    assert!(
        (total - 2.0 * upper).abs() <= 1e-9 * (1.0 + total),
        "compare sums are not symmetric: {total} vs 2 x {upper}"
    );

    let rows: Vec<FitnessRow> = set
        .labels
        .iter()
        .zip(&sums)
        .map(|(label, &s)| FitnessRow {
            label: label.clone(),
            compare_sum: s,
            fitness: if s > 0.0 { 1.0 / s } else { f64::INFINITY },
        })
        .collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| rows[b].fitness.total_cmp(&rows[a].fitness));
    let ranking = order.into_iter().map(|i| rows[i].label.clone()).collect();
    Ok(FitnessResult { rows, ranking })
}

impl FitnessResult {
    /// Rows whose compare sum differs from `reference` by more than
    /// `tolerance`. `reference` is matched to rows by position.
    pub fn divergences(&self, reference: &[f64], tolerance: f64) -> Vec<Divergence> {
        self.rows
            .iter()
            .zip(reference)
            .filter(|(row, &r)| (row.compare_sum - r).abs() > tolerance)
            .map(|(row, &r)| Divergence {
                label: row.label.clone(),
                reference: r,
                computed: row.compare_sum,
            })
            .collect()
    }

    /// Aligned table: label, compare sum and fitness, two decimals.
    pub fn render_text(&self, divergences: &[Divergence]) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| r.label.chars().count())
            .max()
            .unwrap_or(0)
            .max("candidate".len());
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$}  {:>11}  {:>7}",
            "candidate", "compare sum", "fitness"
        );
        for row in &self.rows {
            let fitness = if row.fitness.is_infinite() {
                "inf".to_string()
            } else {
                format!("{:.2}", row.fitness)
            };
            let flag = if divergences.iter().any(|d| d.label == row.label) {
                "  *"
            } else {
                ""
            };
            let _ = writeln!(
                out,
                "{:<width$}  {:>11.2}  {:>7}{flag}",
                row.label, row.compare_sum, fitness
            );
        }
        let _ = writeln!(
            out,
            "ranking (highest fitness first): {}",
            self.ranking.join(", ")
        );
        let _ = writeln!(
            out,
            "note: higher fitness means less agreement with the other candidates, not higher likelihood"
        );
        for d in divergences {
            let _ = writeln!(
                out,
                "* {}: computed compare sum {:.2} differs from reference {:.2}",
                d.label, d.computed, d.reference
            );
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SearchConfig {
    pub length: usize,
    pub trials: usize,
    pub include_start: bool,
    /// Trials per entry of [`OptimumSearch::block_best`].
    pub block_size: usize,
}

impl SearchConfig {
    pub fn new(length: usize, trials: usize, include_start: bool) -> Self {
        Self {
            length,
            trials,
            include_start,
            block_size: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimumSearch {
    pub path: GeneratedPath,
    pub log_probability: LogLikelihood,
    /// Zero-based trial that produced `path`.
    pub trial: usize,
    /// Best log-probability seen after each block of trials.
    pub block_best: Vec<f64>,
}

/// Best of one block: (log-probability, trial). Earliest trial wins ties.
type BlockBest = (f64, usize);

fn search_block(
    model: &HmmModel,
    config: &SearchConfig,
    rng: &RngSpec,
    block: usize,
) -> Result<BlockBest> {
    let start = block * config.block_size;
    let end = (start + config.block_size).min(config.trials);
    let mut best: Option<BlockBest> = None;
    for trial in start..end {
        let path = generate_stream(
            model,
            config.length,
            rng,
            config.include_start,
            trial as u64,
        )?;
        let lp = path_log_probability(model, &path)?.0;
        if best.is_none_or(|(b, _)| lp > b) {
            best = Some((lp, trial));
        }
    }
    Ok(best.expect("blocks are non-empty"))
}

fn check_search(model: &HmmModel, config: &SearchConfig) -> Result<usize> {
    model.ensure_valid(DEFAULT_TOLERANCE)?;
    if config.trials == 0 || config.block_size == 0 {
        return Err(Error::InvalidArgument(
            "trials and block size must be at least 1".into(),
        ));
    }
    if config.length == 0 {
        return Err(Error::ZeroLength);
    }
    Ok(config.trials.div_ceil(config.block_size))
}

fn finish(
    model: &HmmModel,
    config: &SearchConfig,
    rng: &RngSpec,
    blocks: Vec<BlockBest>,
) -> Result<OptimumSearch> {
    let mut best: Option<BlockBest> = None;
    let mut block_best = Vec::with_capacity(blocks.len());
    for candidate in blocks {
        if best.is_none_or(|(b, _)| candidate.0 > b) {
            best = Some(candidate);
        }
        block_best.push(best.expect("set above").0);
    }
    let (lp, trial) = best.expect("at least one block");
    let path = generate_stream(
        model,
        config.length,
        rng,
        config.include_start,
        trial as u64,
    )?;
    Ok(OptimumSearch {
        path,
        log_probability: LogLikelihood(lp),
        trial,
        block_best,
    })
}

/// Trial `i` samples stream `i` of `rng`, so trial 0 equals
/// [`generate`](crate::generate) with the same seed. Runs on the rayon pool
/// when the `parallel` feature is enabled; the result does not depend on it.
pub fn find_optimum_sequence(
    model: &HmmModel,
    config: &SearchConfig,
    rng: &RngSpec,
) -> Result<OptimumSearch> {
    #[cfg(feature = "parallel")]
    {
        find_optimum_sequence_parallel(model, config, rng)
    }
    #[cfg(not(feature = "parallel"))]
    {
        find_optimum_sequence_sequential(model, config, rng)
    }
}

pub fn find_optimum_sequence_sequential(
    model: &HmmModel,
    config: &SearchConfig,
    rng: &RngSpec,
) -> Result<OptimumSearch> {
    let n_blocks = check_search(model, config)?;
    let blocks = (0..n_blocks)
        .map(|b| search_block(model, config, rng, b))
        .collect::<Result<Vec<_>>>()?;
    finish(model, config, rng, blocks)
}

#[cfg(feature = "parallel")]
pub fn find_optimum_sequence_parallel(
    model: &HmmModel,
    config: &SearchConfig,
    rng: &RngSpec,
) -> Result<OptimumSearch> {
    use rayon::prelude::*;

    let n_blocks = check_search(model, config)?;
    let blocks = (0..n_blocks)
        .into_par_iter()
        .map(|b| search_block(model, config, rng, b))
        .collect::<Result<Vec<_>>>()?;
    finish(model, config, rng, blocks)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendRow {
    pub state: String,
    pub probability: f64,
    pub percentage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendReport {
    pub label: String,
    pub rows: Vec<TrendRow>,
    /// State with the largest steady-state probability (lowest index on ties).
    pub dominant: String,
    /// State names by descending probability.
    pub ordering: Vec<String>,
}

pub fn trend_report(
    model: &HmmModel,
    label: &str,
    config: &StationaryConfig,
) -> Result<TrendReport> {
    model.ensure_shape()?;
    let pi = stationary_distribution(model.transition(), config)?;
    let names = model.states().names();
    let rows: Vec<TrendRow> = names
        .iter()
        .zip(pi.entries())
        .map(|(name, &p)| TrendRow {
            state: name.clone(),
            probability: p,
            percentage: 100.0 * p,
        })
        .collect();
    let dominant = names[pi.argmax().expect("non-empty state space")].clone();
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| rows[b].probability.total_cmp(&rows[a].probability));
    Ok(TrendReport {
        label: label.to_string(),
        rows,
        dominant,
        ordering: order.into_iter().map(|i| names[i].clone()).collect(),
    })
}

impl TrendReport {
    pub fn render_text(&self) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| r.state.chars().count())
            .max()
            .unwrap_or(0)
            .max("state".len());
        let mut out = String::new();
        let _ = writeln!(out, "trend report: {}", self.label);
        let _ = writeln!(out, "{:<width$}  {:>6}  {:>7}", "state", "pi", "percent");
        for row in &self.rows {
            let _ = writeln!(
                out,
                "{:<width$}  {:>6.2}  {:>6.2}%",
                row.state, row.probability, row.percentage
            );
        }
        let dominant = self
            .rows
            .iter()
            .find(|r| r.state == self.dominant)
            .expect("dominant state is a row");
        let _ = writeln!(
            out,
            "dominant trend: {} ({:.2}%)",
            self.dominant, dominant.percentage
        );
        out
    }
}
