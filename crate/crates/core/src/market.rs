//! Daily close prices to labelled observation/state sequences, and counted
//! estimates of transition and emission matrices.
//!
//! The chain is: [`ingest_csv`] → [`difference`] → [`symbolize`] and
//! [`assign_states`] → [`estimate`]. [`label`] runs the middle steps.

use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{HmmModel, StateSpace, SymbolAlphabet};
use crate::sequence::{check_states, check_symbols, ObservationSequence, StateSequence};

/// Number of trend states the binning produces.
pub const TREND_STATES: usize = 6;

/// Position of a price on the calendar, or its 1-based row number when the
/// input carries no dates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Day {
    Index(usize),
    Date(NaiveDate),
}

impl fmt::Display for Day {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Day::Index(i) => write!(f, "{i}"),
            Day::Date(d) => write!(f, "{}", d.format("%Y-%m-%d")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricePoint {
    pub day: Day,
    pub close: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    points: Vec<PricePoint>,
}

impl PriceSeries {
    /// Sorts by day and rejects duplicates and non-positive closes.
    pub fn new(mut points: Vec<PricePoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::NoData);
        }
        for (i, p) in points.iter().enumerate() {
            if !(p.close > 0.0 && p.close.is_finite()) {
                return Err(Error::NonPositiveClose {
                    line: i + 1,
                    value: p.close,
                });
            }
        }
        points.sort_by_key(|p| p.day);
        if let Some(w) = points.windows(2).find(|w| w[0].day == w[1].day) {
            return Err(Error::DuplicateDate(w[0].day.to_string()));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[PricePoint] {
        &self.points
    }

    pub fn closes(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.close)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn strip_bom(bytes: &[u8]) -> &[u8] {
    bytes.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(bytes)
}

/// Parses `date,close` CSV (ISO dates, header required). Rows may come in
/// any order.
pub fn ingest_csv(bytes: &[u8]) -> Result<PriceSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(strip_bom(bytes));
    let header = reader.headers().map_err(|e| Error::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    let names: Vec<String> = header.iter().map(str::to_ascii_lowercase).collect();
    if names.is_empty() || (names.len() == 1 && names[0].is_empty()) {
        return Err(Error::NoData);
    }
    if names != ["date", "close"] {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `date,close`, found `{}`", names.join(",")),
        });
    }

    let mut points = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let date = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d").map_err(|e| Error::Parse {
            line,
            message: format!("bad date {:?}: {e}", &record[0]),
        })?;
        let close: f64 = record[1].parse().map_err(|_| Error::Parse {
            line,
            message: format!("bad close value {:?}", &record[1]),
        })?;
        if !(close > 0.0 && close.is_finite()) {
            return Err(Error::NonPositiveClose { line, value: close });
        }
        points.push(PricePoint {
            day: Day::Date(date),
            close,
        });
    }
    PriceSeries::new(points)
}

/// Parses a headerless file with one close value per line; the day is the
/// 1-based row number. Blank lines are skipped.
pub fn ingest_closes(bytes: &[u8]) -> Result<PriceSeries> {
    let text = std::str::from_utf8(strip_bom(bytes)).map_err(|e| Error::Parse {
        line: 0,
        message: e.to_string(),
    })?;
    let mut points = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let field = raw.trim().trim_end_matches(',');
        if field.is_empty() {
            continue;
        }
        let close: f64 = field.parse().map_err(|_| Error::Parse {
            line: i + 1,
            message: format!("bad close value {field:?}"),
        })?;
        if !(close > 0.0 && close.is_finite()) {
            return Err(Error::NonPositiveClose {
                line: i + 1,
                value: close,
            });
        }
        points.push(PricePoint {
            day: Day::Index(points.len() + 1),
            close,
        });
    }
    PriceSeries::new(points)
}

/// k-day differences, dated by the later day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffSeries {
    pub k: usize,
    pub values: Vec<(Day, f64)>,
}

impl DiffSeries {
    pub fn diffs(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().map(|&(_, d)| d)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `close[t] - close[t - k]` for every t ≥ k.
pub fn difference(series: &PriceSeries, k: usize) -> Result<DiffSeries> {
    if k == 0 {
        return Err(Error::InvalidArgument("lag must be at least 1".into()));
    }
    let pts = series.points();
    if k >= pts.len() {
        return Err(Error::LagTooLarge { k, len: pts.len() });
    }
    let values = pts
        .iter()
        .zip(&pts[k..])
        .map(|(before, now)| (now.day, now.close - before.close))
        .collect();
    Ok(DiffSeries { k, values })
}

/// What a difference of exactly zero becomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroPolicy {
    #[default]
    Decrease,
    Increase,
    Reject,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Symbolized {
    pub symbols: ObservationSequence,
    /// How many zero differences were mapped by the policy.
    pub zero_count: usize,
}

/// Positive → `I`, negative → `D`, zero per `policy`. Indices refer to
/// [`SymbolAlphabet::increase_decrease`].
pub fn symbolize(diffs: &DiffSeries, policy: ZeroPolicy) -> Result<Symbolized> {
    let mut zero_count = 0;
    let symbols = diffs
        .diffs()
        .enumerate()
        .map(|(position, d)| {
            if d > 0.0 {
                Ok(SymbolAlphabet::INCREASE)
            } else if d < 0.0 {
                Ok(SymbolAlphabet::DECREASE)
            } else {
                zero_count += 1;
                match policy {
                    ZeroPolicy::Decrease => Ok(SymbolAlphabet::DECREASE),
                    ZeroPolicy::Increase => Ok(SymbolAlphabet::INCREASE),
                    ZeroPolicy::Reject => Err(Error::ZeroDifference { position }),
                }
            }
        })
        .collect::<Result<_>>()?;
    Ok(Symbolized {
        symbols,
        zero_count,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", content = "thresholds", rename_all = "snake_case")]
pub enum BinningMode {
    /// Six equal-width bins spanning [min, max] of the differences.
    #[default]
    EqualWidth,
    /// Cut points at the 1/6 … 5/6 sample quantiles (linear interpolation).
    Quantile,
    /// Five strictly ascending cut points, in price units.
    Explicit([f64; 5]),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BinningSpec {
    pub mode: BinningMode,
    pub zero_policy: ZeroPolicy,
}

/// The five cut points separating S1..S6 for these differences.
pub fn bin_thresholds(diffs: &DiffSeries, mode: &BinningMode) -> Result<[f64; 5]> {
    let mut sorted: Vec<f64> = diffs.diffs().collect();
    sorted.sort_by(f64::total_cmp);
    let automatic = !matches!(mode, BinningMode::Explicit(_));
    if automatic && (sorted.is_empty() || sorted[0] == sorted[sorted.len() - 1]) {
        return Err(Error::ConstantDiffs);
    }
    Ok(match *mode {
        BinningMode::EqualWidth => {
            let lo = sorted[0];
            let width = (sorted[sorted.len() - 1] - lo) / TREND_STATES as f64;
            std::array::from_fn(|k| lo + width * (k + 1) as f64)
        }
        BinningMode::Quantile => std::array::from_fn(|k| {
            let h = (sorted.len() - 1) as f64 * (k + 1) as f64 / TREND_STATES as f64;
            let below = h.floor() as usize;
            let above = (below + 1).min(sorted.len() - 1);
            sorted[below] + (h - below as f64) * (sorted[above] - sorted[below])
        }),
        BinningMode::Explicit(t) => {
            if t.iter().any(|x| !x.is_finite()) || t.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidThresholds(t.to_vec()));
            }
            t
        }
    })
}

/// Bin index for one value: the number of cut points at or below it. Bins
/// are closed on the left, and the top bin is closed above.
pub fn bin_of(value: f64, thresholds: &[f64; 5]) -> usize {
    thresholds.iter().filter(|&&c| c <= value).count()
}

pub fn assign_states(diffs: &DiffSeries, spec: &BinningSpec) -> Result<StateSequence> {
    let cuts = bin_thresholds(diffs, &spec.mode)?;
    Ok(diffs.diffs().map(|d| bin_of(d, &cuts)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSeries {
    pub diffs: DiffSeries,
    pub symbols: ObservationSequence,
    pub states: StateSequence,
    pub binning: BinningSpec,
    pub thresholds: [f64; 5],
    pub zero_count: usize,
}

/// Differences, symbols and states for lag `k`.
pub fn label(series: &PriceSeries, k: usize, binning: &BinningSpec) -> Result<LabeledSeries> {
    let diffs = difference(series, k)?;
    let Symbolized {
        symbols,
        zero_count,
    } = symbolize(&diffs, binning.zero_policy)?;
    let thresholds = bin_thresholds(&diffs, &binning.mode)?;
    let states = diffs.diffs().map(|d| bin_of(d, &thresholds)).collect();
    Ok(LabeledSeries {
        diffs,
        symbols,
        states,
        binning: *binning,
        thresholds,
        zero_count,
    })
}

impl LabeledSeries {
    /// `date,diff,symbol,state` with full-precision diffs.
    pub fn to_csv(&self, space: &StateSpace, alphabet: &SymbolAlphabet) -> String {
        let mut out = String::from("date,diff,symbol,state\n");
        for (t, &(day, diff)) in self.diffs.values.iter().enumerate() {
            out.push_str(&format!(
                "{day},{diff},{},{}\n",
                alphabet.symbol(self.symbols[t]),
                space.name(self.states[t])
            ));
        }
        out
    }
}

/// Reads the `date,diff,symbol,state` layout back into state and symbol
/// sequences. States may be given by name or as `S<k>`.
pub fn read_labeled_csv(
    bytes: &[u8],
    space: &StateSpace,
    alphabet: &SymbolAlphabet,
) -> Result<(StateSequence, ObservationSequence)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(strip_bom(bytes));
    let header = reader.headers().map_err(|e| Error::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse {
                line: 1,
                message: format!("missing column {name:?}"),
            })
    };
    let (symbol_col, state_col) = (col("symbol")?, col("state")?);
    let mut states = Vec::new();
    let mut symbols = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let lookup_err = |what: &str, v: &str| Error::Parse {
            line,
            message: format!("unknown {what} {v:?}"),
        };
        let sym = &record[symbol_col];
        let st = &record[state_col];
        symbols.push(
            alphabet
                .index_of(sym)
                .ok_or_else(|| lookup_err("symbol", sym))?,
        );
        states.push(space.index_of(st).ok_or_else(|| lookup_err("state", st))?);
    }
    if states.is_empty() {
        return Err(Error::NoData);
    }
    Ok((states.into(), symbols.into()))
}

/// Which symbol a state's emission count is credited with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmissionPairing {
    /// (state_t, symbol_t)
    #[default]
    SameStep,
    /// (state_t, symbol_{t+1})
    NextStep,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EstimateConfig {
    /// Additive (Laplace) smoothing constant α ≥ 0.
    pub smoothing: f64,
    pub pairing: EmissionPairing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountedEstimate {
    pub transition_counts: Vec<Vec<u64>>,
    pub emission_counts: Vec<Vec<u64>>,
    /// State occupancy over the whole sequence.
    pub initial_counts: Vec<u64>,
    /// `joint_counts[i][j][m]`: moves i → j where the next step emits m.
    pub joint_counts: Vec<Vec<Vec<u64>>>,
    pub smoothing: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EstimateWarning {
    /// A row had no counts and no smoothing; it was set to uniform.
    UnvisitedState { matrix: String, state: usize },
}

impl fmt::Display for EstimateWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimateWarning::UnvisitedState { matrix, state } => write!(
                f,
                "state {} has no {matrix} counts; row set to uniform",
                state + 1
            ),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Estimate {
    pub counts: CountedEstimate,
    pub model: HmmModel,
    pub warnings: Vec<EstimateWarning>,
}

/// Maximum-likelihood (α = 0) or additively smoothed matrices from counts.
/// The initial distribution is the state-occupancy frequency.
pub fn estimate(
    states: &[usize],
    symbols: &[usize],
    space: &StateSpace,
    alphabet: &SymbolAlphabet,
    config: &EstimateConfig,
) -> Result<Estimate> {
    if states.is_empty() || symbols.is_empty() {
        return Err(Error::EmptySequence);
    }
    if states.len() != symbols.len() {
        return Err(Error::LengthMismatch {
            left: states.len(),
            right: symbols.len(),
        });
    }
    if states.len() < 2 {
        return Err(Error::SequenceTooShort {
            needed: 2,
            got: states.len(),
        });
    }
    if !(config.smoothing >= 0.0 && config.smoothing.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "smoothing must be finite and >= 0, got {}",
            config.smoothing
        )));
    }
    let n = space.len();
    let m = alphabet.len();
    check_states(states, n)?;
    check_symbols(symbols, m)?;

    let mut transition_counts = vec![vec![0u64; n]; n];
    let mut emission_counts = vec![vec![0u64; m]; n];
    let mut initial_counts = vec![0u64; n];
    let mut joint_counts = vec![vec![vec![0u64; m]; n]; n];
    for t in 0..states.len() {
        initial_counts[states[t]] += 1;
        if t + 1 < states.len() {
            transition_counts[states[t]][states[t + 1]] += 1;
            joint_counts[states[t]][states[t + 1]][symbols[t + 1]] += 1;
        }
        match config.pairing {
            EmissionPairing::SameStep => emission_counts[states[t]][symbols[t]] += 1,
            EmissionPairing::NextStep => {
                if t + 1 < states.len() {
                    emission_counts[states[t]][symbols[t + 1]] += 1;
                }
            }
        }
    }

    let mut warnings = Vec::new();
    let alpha = config.smoothing;
    let mut rows_from = |counts: &[Vec<u64>], matrix: &str| -> Vec<Vec<f64>> {
        counts
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let total: u64 = row.iter().sum();
                if total == 0 && alpha == 0.0 {
                    warnings.push(EstimateWarning::UnvisitedState {
                        matrix: matrix.to_string(),
                        state: i,
                    });
                    return vec![1.0 / row.len() as f64; row.len()];
                }
                let den = total as f64 + alpha * row.len() as f64;
                row.iter().map(|&c| (c as f64 + alpha) / den).collect()
            })
            .collect()
    };
    let transition = rows_from(&transition_counts, "transition");
    let emission = rows_from(&emission_counts, "emission");
    let initial = initial_counts
        .iter()
        .map(|&c| c as f64 / states.len() as f64)
        .collect();

    let model = HmmModel::new(
        space.clone(),
        alphabet.clone(),
        transition,
        emission,
        initial,
    )?;
    Ok(Estimate {
        counts: CountedEstimate {
            transition_counts,
            emission_counts,
            initial_counts,
            joint_counts,
            smoothing: alpha,
        },
        model,
        warnings,
    })
}

/// N × (N·M) table; column `j * M + m` holds the probability of moving from
/// row state i to state j with j emitting m. Observed moves are split by
/// their counted next symbols; moves that only carry smoothing (or uniform)
/// mass are split by the emission row of j. Rows sum to the transition rows.
pub fn joint_transition_table(model: &HmmModel, counts: &CountedEstimate) -> Result<Vec<Vec<f64>>> {
    let n = model.n_states();
    let m = model.n_symbols();
    let dims_ok = counts.transition_counts.len() == n
        && counts.transition_counts.iter().all(|r| r.len() == n)
        && counts.joint_counts.len() == n
        && counts
            .joint_counts
            .iter()
            .all(|r| r.len() == n && r.iter().all(|c| c.len() == m));
    if !dims_ok {
        return Err(Error::Dimension(format!(
            "counts do not match a model with {n} states and {m} symbols"
        )));
    }
    let a = model.transition();
    let b = model.emission();
    Ok((0..n)
        .map(|i| {
            let mut row = Vec::with_capacity(n * m);
            for j in 0..n {
                let moves = counts.transition_counts[i][j];
                for k in 0..m {
                    let split = if moves > 0 {
                        counts.joint_counts[i][j][k] as f64 / moves as f64
                    } else {
                        b.get(j, k)
                    };
                    row.push(a.get(i, j) * split);
                }
            }
            row
        })
        .collect())
}
