//! Seeded sampling of (state, symbol) paths.
//!
//! Two start conventions are supported:
//!
//! * canonical (`include_start = false`): the chain sits in state 0 before
//!   step 1 and moves before it first emits, so `states[0]` is drawn from
//!   transition row 0. `states[t]` emits `symbols[t]`; both have length L.
//! * start-marked (`include_start = true`): state 0 is the first recorded
//!   state and emits the first symbol. L states and L − 1 symbols are
//!   produced; `states[t]` emits `symbols[t]` and the last state emits
//!   nothing. Rendered, the symbol track gets a leading `ε`, giving the
//!   `ε → D → I …` layout with both tracks of length L.
//!
//! Every path is a deterministic function of (model, L, seed, convention).
//! The RNG is ChaCha8; independent paths come from distinct streams of one
//! seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::LogLikelihood;
use crate::model::{HmmModel, DEFAULT_TOLERANCE};
use crate::sequence::{check_states, ObservationSequence, StateSequence};

pub const START_MARKER: &str = "ε";
pub const CHACHA8: &str = "chacha8";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSpec {
    pub seed: u64,
    pub algorithm: String,
}

impl RngSpec {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            algorithm: CHACHA8.to_string(),
        }
    }

    /// Seed drawn from OS entropy. Callers should report `seed` so the run
    /// can be repeated.
    pub fn from_entropy() -> Self {
        Self::new(rand::rng().random())
    }

    pub(crate) fn stream(&self, stream: u64) -> Result<ChaCha8Rng> {
        if self.algorithm != CHACHA8 {
            return Err(Error::UnsupportedRng(self.algorithm.clone()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        Ok(rng)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedPath {
    pub states: StateSequence,
    pub symbols: ObservationSequence,
    pub seed: u64,
    pub algorithm: String,
    pub include_start: bool,
}

impl GeneratedPath {
    /// L, the length of the rendered tracks.
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Inverse-CDF draw that never lands on a zero-probability entry.
fn sample_index(row: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in row.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        last_positive = i;
        acc += p;
        if u < acc {
            return i;
        }
    }
    last_positive
}

pub fn generate(
    model: &HmmModel,
    length: usize,
    rng: &RngSpec,
    include_start: bool,
) -> Result<GeneratedPath> {
    model.ensure_valid(DEFAULT_TOLERANCE)?;
    generate_stream(model, length, rng, include_start, 0)
}

/// Like [`generate`] but on an explicit stream of the seed; stream 0 is what
/// [`generate`] uses. The model must already be valid.
pub(crate) fn generate_stream(
    model: &HmmModel,
    length: usize,
    rng: &RngSpec,
    include_start: bool,
    stream: u64,
) -> Result<GeneratedPath> {
    if length == 0 {
        return Err(Error::ZeroLength);
    }
    let mut draw = rng.stream(stream)?;
    let a = model.transition();
    let b = model.emission();
    let mut states = Vec::with_capacity(length);
    let mut symbols = Vec::with_capacity(length);
    let mut state = 0usize;
    if include_start {
        states.push(state);
        for _ in 1..length {
            symbols.push(sample_index(b.row(state), draw.random()));
            state = sample_index(a.row(state), draw.random());
            states.push(state);
        }
    } else {
        for _ in 0..length {
            state = sample_index(a.row(state), draw.random());
            states.push(state);
            symbols.push(sample_index(b.row(state), draw.random()));
        }
    }
    Ok(GeneratedPath {
        states: states.into(),
        symbols: symbols.into(),
        seed: rng.seed,
        algorithm: rng.algorithm.clone(),
        include_start,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FactorKind {
    /// Probability that the path starts where it does.
    Start {
        state: usize,
    },
    Transition {
        from: usize,
        to: usize,
    },
    Emission {
        state: usize,
        symbol: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathFactor {
    #[serde(flatten)]
    pub kind: FactorKind,
    pub probability: f64,
}

/// Every probability factor of a path, in path order: start, then for each
/// step the emission followed by the outgoing transition.
pub fn path_factors(model: &HmmModel, path: &GeneratedPath) -> Result<Vec<PathFactor>> {
    model.ensure_shape()?;
    let states = path.states.as_slice();
    let symbols = path.symbols.as_slice();
    let expected_symbols = if path.include_start {
        states.len().saturating_sub(1)
    } else {
        states.len()
    };
    if states.is_empty() || symbols.len() != expected_symbols {
        return Err(Error::Dimension(format!(
            "path has {} states and {} symbols; expected {} symbols",
            states.len(),
            symbols.len(),
            expected_symbols
        )));
    }
    check_states(states, model.n_states())?;
    crate::sequence::check_symbols(symbols, model.n_symbols()).or_else(|e| match e {
        Error::EmptySequence => Ok(()),
        e => Err(e),
    })?;

    let a = model.transition();
    let b = model.emission();
    let start = if path.include_start {
        if states[0] == 0 {
            1.0
        } else {
            0.0
        }
    } else {
        a.get(0, states[0])
    };
    let mut factors = vec![PathFactor {
        kind: FactorKind::Start { state: states[0] },
        probability: start,
    }];
    for t in 0..states.len() {
        if let Some(&symbol) = symbols.get(t) {
            factors.push(PathFactor {
                kind: FactorKind::Emission {
                    state: states[t],
                    symbol,
                },
                probability: b.get(states[t], symbol),
            });
        }
        if let Some(&to) = states.get(t + 1) {
            factors.push(PathFactor {
                kind: FactorKind::Transition {
                    from: states[t],
                    to,
                },
                probability: a.get(states[t], to),
            });
        }
    }
    Ok(factors)
}

/// ln of the product of [`path_factors`]; `-inf` if any factor is zero.
pub fn path_log_probability(model: &HmmModel, path: &GeneratedPath) -> Result<LogLikelihood> {
    let total = path_factors(model, path)?
        .iter()
        .map(|f| f.probability.ln())
        .sum::<f64>();
    Ok(LogLikelihood(if total.is_nan() {
        f64::NEG_INFINITY
    } else {
        total
    }))
}

/// On-disk form of a [`GeneratedPath`], with state and symbol labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathDocument {
    pub seed: u64,
    pub algorithm: String,
    pub include_start: bool,
    pub states: Vec<String>,
    pub symbols: Vec<String>,
}

impl PathDocument {
    pub fn from_path(path: &GeneratedPath, model: &HmmModel) -> Self {
        let mut symbols: Vec<String> = Vec::with_capacity(path.len());
        if path.include_start {
            symbols.push(START_MARKER.to_string());
        }
        symbols.extend(
            path.symbols
                .iter()
                .map(|&o| model.alphabet().symbol(o).to_string()),
        );
        Self {
            seed: path.seed,
            algorithm: path.algorithm.clone(),
            include_start: path.include_start,
            states: path
                .states
                .iter()
                .map(|&s| model.states().name(s).to_string())
                .collect(),
            symbols,
        }
    }

    pub fn to_path(&self, model: &HmmModel) -> Result<GeneratedPath> {
        let states = self
            .states
            .iter()
            .map(|s| {
                model
                    .states()
                    .index_of(s)
                    .ok_or_else(|| Error::UnknownLabel(s.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut labels = self.symbols.as_slice();
        if self.include_start {
            match labels.split_first() {
                Some((first, rest)) if first == START_MARKER => labels = rest,
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "start-marked path must begin with {START_MARKER:?}"
                    )))
                }
            }
        }
        let symbols = labels
            .iter()
            .map(|s| {
                model
                    .alphabet()
                    .index_of(s)
                    .ok_or_else(|| Error::UnknownLabel(s.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(GeneratedPath {
            states: states.into(),
            symbols: symbols.into(),
            seed: self.seed,
            algorithm: self.algorithm.clone(),
            include_start: self.include_start,
        })
    }
}
