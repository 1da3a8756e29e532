//! Model types for discrete hidden Markov models: λ = (S, O, A, B, π).
//!
//! Matrices are row-major with the row indexing the source state. State and
//! symbol order is significant: index `i` of every matrix refers to
//! `states[i]` / `symbols[i]`.
//!
//! A [`HmmModel`] built through [`HmmModel::new`] or [`load_model`] is always
//! valid. [`HmmModel::unchecked`] exists for candidates that are to be
//! inspected with [`validate_model`].

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-sum tolerance for matrices produced by computation.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Row-sum tolerance suited to matrices transcribed with 2–3 decimals.
pub const ROUNDED_TOLERANCE: f64 = 0.01;

/// Ordered, unique, non-empty state labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateSpace(Vec<String>);

impl StateSpace {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        check_labels("state", &names).map_err(|v| Error::Validation(vec![v]))?;
        Ok(Self(names))
    }

    /// The six ordinal trend levels, S1 ("very low") through S6 ("very high").
    pub fn trend_levels() -> Self {
        Self(
            [
                "very low",
                "low",
                "moderate low",
                "moderate high",
                "high",
                "very high",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        )
    }

    /// `n` states labelled `S1..Sn`.
    pub fn numbered(n: usize) -> Self {
        Self((1..=n).map(|i| format!("S{i}")).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.0
    }

    pub fn name(&self, index: usize) -> &str {
        &self.0[index]
    }

    /// Resolves a state either by its name or by `S<k>` (1-based) notation.
    pub fn index_of(&self, label: &str) -> Option<usize> {
        if let Some(i) = self.0.iter().position(|n| n == label) {
            return Some(i);
        }
        let k: usize = label.strip_prefix('S')?.parse().ok()?;
        (1..=self.0.len()).contains(&k).then(|| k - 1)
    }
}

/// Ordered, unique observation symbols.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SymbolAlphabet(Vec<String>);

impl SymbolAlphabet {
    pub const INCREASE: usize = 0;
    pub const DECREASE: usize = 1;

    pub fn new<S: Into<String>>(symbols: impl IntoIterator<Item = S>) -> Result<Self> {
        let symbols: Vec<String> = symbols.into_iter().map(Into::into).collect();
        check_labels("symbol", &symbols).map_err(|v| Error::Validation(vec![v]))?;
        Ok(Self(symbols))
    }

    /// `["I", "D"]`.
    pub fn increase_decrease() -> Self {
        Self(vec!["I".into(), "D".into()])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[String] {
        &self.0
    }

    pub fn symbol(&self, index: usize) -> &str {
        &self.0[index]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.0.iter().position(|s| s == label)
    }
}

fn check_labels(kind: &'static str, labels: &[String]) -> std::result::Result<(), Violation> {
    if labels.is_empty() {
        return Err(Violation::Labels {
            kind,
            message: "at least one label is required".into(),
        });
    }
    let mut seen = HashSet::new();
    for label in labels {
        if label.is_empty() {
            return Err(Violation::Labels {
                kind,
                message: "labels must be non-empty".into(),
            });
        }
        if !seen.insert(label.as_str()) {
            return Err(Violation::Labels {
                kind,
                message: format!("duplicate label {label:?}"),
            });
        }
    }
    Ok(())
}

/// A grid of probabilities whose rows are meant to sum to one.
///
/// Construction does not enforce the row constraint; validation does.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StochasticMatrix(Vec<Vec<f64>>);

impl StochasticMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        Self(rows)
    }

    pub fn n_rows(&self) -> usize {
        self.0.len()
    }

    /// Width of the first row (0 for an empty matrix).
    pub fn n_cols(&self) -> usize {
        self.0.first().map_or(0, Vec::len)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.0[i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[i][j]
    }

    pub fn into_rows(self) -> Vec<Vec<f64>> {
        self.0
    }

    fn violations(&self, which: Component, tolerance: f64, out: &mut Vec<Violation>) {
        for (i, row) in self.0.iter().enumerate() {
            for (j, &p) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&p) {
                    out.push(Violation::Entry {
                        component: which,
                        row: i,
                        col: j,
                        value: p,
                    });
                }
            }
            let sum: f64 = row.iter().sum();
            // a few ulps of slack so that e.g. 0.33 + 0.33 + 0.33 passes at 0.01
            let slack = f64::EPSILON * (row.len() as f64 + 1.0);
            let off = (sum - 1.0).abs();
            if off.is_nan() || off > tolerance + slack {
                out.push(Violation::RowSum {
                    component: which,
                    row: i,
                    sum,
                });
            }
        }
    }
}

/// Non-negative entries summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub fn new(entries: Vec<f64>) -> Self {
        Self(entries)
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn entries(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Index of the largest entry; ties go to the lowest index.
    pub fn argmax(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, &p) in self.0.iter().enumerate() {
            if best.is_none_or(|b| p > self.0[b]) {
                best = Some(i);
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    Transition,
    Emission,
    Initial,
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Component::Transition => "transition",
            Component::Emission => "emission",
            Component::Initial => "initial",
        })
    }
}

/// One broken model invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Labels {
        kind: &'static str,
        message: String,
    },
    Dimension {
        component: Component,
        expected: (usize, usize),
        found: (usize, usize),
    },
    Entry {
        component: Component,
        row: usize,
        col: usize,
        value: f64,
    },
    RowSum {
        component: Component,
        row: usize,
        sum: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Labels { kind, message } => write!(f, "{kind} labels: {message}"),
            Violation::Dimension {
                component,
                expected,
                found,
            } => write!(
                f,
                "{component} is {}x{}, expected {}x{}",
                found.0, found.1, expected.0, expected.1
            ),
            Violation::Entry {
                component,
                row,
                col,
                value,
            } => write!(f, "{component}[{row}][{col}] = {value} is outside [0, 1]"),
            Violation::RowSum {
                component,
                row,
                sum,
            } => write!(f, "{component} row {row} sums to {sum}"),
        }
    }
}

/// λ = (S, O, A, B, π).
#[derive(Debug, Clone, PartialEq)]
pub struct HmmModel {
    states: StateSpace,
    alphabet: SymbolAlphabet,
    transition: StochasticMatrix,
    emission: StochasticMatrix,
    initial: ProbabilityVector,
    meta: Option<serde_json::Value>,
}

impl HmmModel {
    /// Builds a model that validates at [`DEFAULT_TOLERANCE`]. Entries are
    /// stored as given.
    pub fn new(
        states: StateSpace,
        alphabet: SymbolAlphabet,
        transition: Vec<Vec<f64>>,
        emission: Vec<Vec<f64>>,
        initial: Vec<f64>,
    ) -> Result<Self> {
        let model = Self::unchecked(states, alphabet, transition, emission, initial);
        model.ensure_valid(DEFAULT_TOLERANCE)?;
        Ok(model)
    }

    /// Accepts rows that sum to one within `tolerance`, then re-normalizes
    /// every row and the initial vector so the stored model is exact.
    pub fn from_rounded(
        states: StateSpace,
        alphabet: SymbolAlphabet,
        transition: Vec<Vec<f64>>,
        emission: Vec<Vec<f64>>,
        initial: Vec<f64>,
        tolerance: f64,
    ) -> Result<Self> {
        let model = Self::unchecked(states, alphabet, transition, emission, initial);
        model.ensure_valid(tolerance)?;
        Ok(model.renormalized())
    }

    /// No checks at all. Use [`validate_model`] on the result.
    pub fn unchecked(
        states: StateSpace,
        alphabet: SymbolAlphabet,
        transition: Vec<Vec<f64>>,
        emission: Vec<Vec<f64>>,
        initial: Vec<f64>,
    ) -> Self {
        Self {
            states,
            alphabet,
            transition: StochasticMatrix(transition),
            emission: StochasticMatrix(emission),
            initial: ProbabilityVector(initial),
            meta: None,
        }
    }

    pub fn with_meta(mut self, meta: serde_json::Value) -> Self {
        self.meta = Some(meta);
        self
    }

    pub fn states(&self) -> &StateSpace {
        &self.states
    }

    pub fn alphabet(&self) -> &SymbolAlphabet {
        &self.alphabet
    }

    pub fn transition(&self) -> &StochasticMatrix {
        &self.transition
    }

    pub fn emission(&self) -> &StochasticMatrix {
        &self.emission
    }

    pub fn initial(&self) -> &ProbabilityVector {
        &self.initial
    }

    pub fn meta(&self) -> Option<&serde_json::Value> {
        self.meta.as_ref()
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn n_symbols(&self) -> usize {
        self.alphabet.len()
    }

    pub(crate) fn ensure_valid(&self, tolerance: f64) -> Result<()> {
        let violations = validate_model(self, tolerance);
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(violations))
        }
    }

    /// Checks dimensions only; used where row sums were already established.
    pub(crate) fn ensure_shape(&self) -> Result<()> {
        let violations = shape_violations(self);
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::Dimension(
                violations
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join("; "),
            ))
        }
    }

    /// Rows already within [`EXACT_SUM_SLACK`] of one are left bit-for-bit
    /// untouched so that save/load round trips are exact.
    fn renormalized(self) -> Self {
        let scale_rows =
            |m: StochasticMatrix| StochasticMatrix(m.0.into_iter().map(rescale).collect());
        Self {
            transition: scale_rows(self.transition),
            emission: scale_rows(self.emission),
            initial: ProbabilityVector(rescale(self.initial.0)),
            ..self
        }
    }
}

const EXACT_SUM_SLACK: f64 = 1e-12;

fn rescale(row: Vec<f64>) -> Vec<f64> {
    let s: f64 = row.iter().sum();
    if (s - 1.0).abs() <= EXACT_SUM_SLACK {
        row
    } else {
        row.into_iter().map(|p| p / s).collect()
    }
}

fn shape_violations(model: &HmmModel) -> Vec<Violation> {
    let n = model.states.len();
    let m = model.alphabet.len();
    let mut out = Vec::new();
    let mut check = |component, rows: &[Vec<f64>], cols: usize| {
        let widest = rows
            .iter()
            .map(Vec::len)
            .find(|&w| w != cols)
            .unwrap_or(cols);
        if rows.len() != n || widest != cols {
            out.push(Violation::Dimension {
                component,
                expected: (n, cols),
                found: (rows.len(), widest),
            });
        }
    };
    check(Component::Transition, &model.transition.0, n);
    check(Component::Emission, &model.emission.0, m);
    if model.initial.len() != n {
        out.push(Violation::Dimension {
            component: Component::Initial,
            expected: (1, n),
            found: (1, model.initial.len()),
        });
    }
    out
}

/// Every broken invariant of `model`; an empty list means the model is valid.
///
/// Row sums are accepted when within `tolerance` of one. Dimension problems
/// suppress the entry-level checks for the affected component.
pub fn validate_model(model: &HmmModel, tolerance: f64) -> Vec<Violation> {
    let mut out = Vec::new();
    for (kind, labels) in [
        ("state", model.states.names()),
        ("symbol", model.alphabet.symbols()),
    ] {
        if let Err(v) = check_labels(kind, labels) {
            out.push(v);
        }
    }
    let shape = shape_violations(model);
    let bad = |c: Component| {
        shape
            .iter()
            .any(|v| matches!(v, Violation::Dimension { component, .. } if *component == c))
    };
    if !bad(Component::Transition) {
        model
            .transition
            .violations(Component::Transition, tolerance, &mut out);
    }
    if !bad(Component::Emission) {
        model
            .emission
            .violations(Component::Emission, tolerance, &mut out);
    }
    if !bad(Component::Initial) {
        let initial = StochasticMatrix(vec![model.initial.0.clone()]);
        initial.violations(Component::Initial, tolerance, &mut out);
    }
    out.extend(shape);
    out
}

/// Divides each row by its sum.
pub fn normalize_rows(rows: &[Vec<f64>]) -> Result<StochasticMatrix> {
    let mut out = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        if let Some((j, &value)) = row.iter().enumerate().find(|(_, &p)| p < 0.0 || p.is_nan()) {
            return Err(Error::NegativeEntry {
                row: i,
                col: j,
                value,
            });
        }
        let sum: f64 = row.iter().sum();
        if !sum.is_finite() || sum <= 0.0 {
            return Err(Error::ZeroRow { row: i });
        }
        out.push(row.iter().map(|p| p / sum).collect());
    }
    Ok(StochasticMatrix(out))
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    states: Vec<String>,
    symbols: Vec<String>,
    transition: Vec<Vec<f64>>,
    emission: Vec<Vec<f64>>,
    initial: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    meta: Option<serde_json::Value>,
}

/// Parses the JSON model document, checks dimensions, then validates with
/// `tolerance` and re-normalizes.
pub fn load_model(bytes: &[u8], tolerance: f64) -> Result<HmmModel> {
    let doc: ModelDocument = serde_json::from_slice(bytes)?;
    let model = HmmModel {
        states: StateSpace(doc.states),
        alphabet: SymbolAlphabet(doc.symbols),
        transition: StochasticMatrix(doc.transition),
        emission: StochasticMatrix(doc.emission),
        initial: ProbabilityVector(doc.initial),
        meta: doc.meta,
    };
    model.ensure_shape()?;
    model.ensure_valid(tolerance)?;
    Ok(model.renormalized())
}

pub fn save_model(model: &HmmModel) -> Vec<u8> {
    let doc = ModelDocument {
        states: model.states.0.clone(),
        symbols: model.alphabet.0.clone(),
        transition: model.transition.0.clone(),
        emission: model.emission.0.clone(),
        initial: model.initial.0.clone(),
        meta: model.meta.clone(),
    };
    let mut bytes = serde_json::to_vec_pretty(&doc).expect("model document serializes");
    bytes.push(b'\n');
    bytes
}
