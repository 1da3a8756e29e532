//! Discrete hidden Markov models for stock-trend analysis.
//!
//! Daily close values are differenced over a lag of `k` days, turned into an
//! Increase/Decrease symbol stream and binned into six ordinal trend states
//! (very low … very high). Counting transitions and emissions gives a model
//! λ = (S, O, A, B, π) whose steady-state distribution is read as long-run
//! trend percentages. The crate also samples, decodes and trains such
//! models, and ranks candidate state sequences by positional agreement.
//!
//! ```
//! use trendhmm::{estimate, ingest_closes, label, BinningSpec, EstimateConfig, StateSpace,
//!     SymbolAlphabet};
//!
//! let prices = ingest_closes(b"10\n11\n10.5\n12\n11\n13\n12.5\n14\n").unwrap();
//! let labeled = label(&prices, 1, &BinningSpec::default()).unwrap();
//! let est = estimate(
//!     &labeled.states,
//!     &labeled.symbols,
//!     &StateSpace::trend_levels(),
//!     &SymbolAlphabet::increase_decrease(),
//!     &EstimateConfig::default(),
//! )
//! .unwrap();
//! assert_eq!(est.model.n_states(), 6);
//! ```
//!
//! With the default `parallel` feature, best-of-N path search runs on the
//! rayon thread pool. Results are identical with the feature disabled.

#![allow(clippy::needless_range_loop)]

mod error;
pub mod generator;
pub mod inference;
pub mod market;
pub mod model;
mod sequence;
pub mod stationary;
pub mod trend;

pub use error::{Error, Result};
pub use generator::{
    generate, path_factors, path_log_probability, GeneratedPath, PathDocument, RngSpec,
    START_MARKER,
};
pub use inference::{
    backward_pass, baum_welch_step, baum_welch_train, forward, forward_likelihood, viterbi_decode,
    LogLikelihood, TrainingConfig, TrainingResult, ViterbiPath,
};
pub use market::{
    assign_states, difference, estimate, ingest_closes, ingest_csv, joint_transition_table, label,
    read_labeled_csv, symbolize, BinningMode, BinningSpec, CountedEstimate, DiffSeries,
    EmissionPairing, Estimate, EstimateConfig, LabeledSeries, PriceSeries, ZeroPolicy,
};
pub use model::{
    load_model, normalize_rows, save_model, validate_model, HmmModel, ProbabilityVector,
    StateSpace, StochasticMatrix, SymbolAlphabet, Violation, DEFAULT_TOLERANCE, ROUNDED_TOLERANCE,
};
pub use sequence::{ObservationSequence, StateSequence};
pub use stationary::{
    closed_classes, stationary_distribution, stationary_residual, StationaryConfig,
    StationaryMethod,
};
pub use trend::{
    compare_sequences, find_optimum_sequence, find_optimum_sequence_sequential, fitness_table,
    trend_report, CandidateSet, FitnessResult, OptimumSearch, SearchConfig, TrendReport,
};

#[cfg(feature = "parallel")]
pub use trend::find_optimum_sequence_parallel;
