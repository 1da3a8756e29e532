#![allow(dead_code)]

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trendhmm::{load_model, HmmModel, StateSpace, SymbolAlphabet, ROUNDED_TOLERANCE};

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub fn closes_20d() -> Vec<u8> {
    std::fs::read(data_dir().join("closes_20d.csv")).unwrap()
}

/// The six transcribed models, by lag in trading days.
pub fn lag_model(lag: usize) -> HmmModel {
    let name = match lag {
        1 => "one_day",
        2 => "two_day",
        3 => "three_day",
        4 => "four_day",
        5 => "five_day",
        6 => "six_day",
        _ => panic!("no model for lag {lag}"),
    };
    let bytes = std::fs::read(data_dir().join("models").join(format!("{name}.json"))).unwrap();
    load_model(&bytes, ROUNDED_TOLERANCE).unwrap()
}

/// Printed (difference, symbol) columns of the close-value table, k = 1..6.
pub const CLOSE_DIFFS: [&[(f64, char)]; 6] = [
    &[
        (-0.52, 'D'),
        (-0.89, 'D'),
        (-0.64, 'D'),
        (1.59, 'I'),
        (1.88, 'I'),
        (0.18, 'I'),
        (-0.36, 'D'),
        (0.8, 'I'),
        (-1.39, 'D'),
        (0.51, 'I'),
        (-1.67, 'D'),
        (-0.12, 'D'),
        (0.67, 'I'),
        (-0.62, 'D'),
        (-0.63, 'D'),
        (1.03, 'I'),
        (-0.66, 'D'),
        (0.83, 'I'),
        (-2.2, 'D'),
    ],
    &[
        (-1.41, 'D'),
        (-1.53, 'D'),
        (0.95, 'I'),
        (3.47, 'I'),
        (2.06, 'I'),
        (-0.18, 'D'),
        (0.44, 'I'),
        (-0.59, 'D'),
        (-0.88, 'D'),
        (-1.16, 'D'),
        (-1.79, 'D'),
        (0.55, 'I'),
        (0.05, 'I'),
        (-1.25, 'D'),
        (0.4, 'I'),
        (0.37, 'I'),
        (0.17, 'I'),
        (-1.37, 'D'),
    ],
    &[
        (-2.05, 'D'),
        (0.06, 'I'),
        (2.83, 'I'),
        (3.65, 'I'),
        (1.7, 'I'),
        (0.62, 'I'),
        (-0.95, 'D'),
        (-0.08, 'D'),
        (-2.55, 'D'),
        (-1.28, 'D'),
        (-1.12, 'D'),
        (-0.07, 'D'),
        (-0.58, 'D'),
        (-0.22, 'D'),
        (-0.26, 'D'),
        (1.2, 'I'),
        (-2.03, 'D'),
    ],
    &[
        (-0.46, 'D'),
        (1.94, 'I'),
        (3.01, 'I'),
        (3.29, 'I'),
        (2.5, 'I'),
        (-0.77, 'D'),
        (-0.44, 'D'),
        (-1.75, 'D'),
        (-2.67, 'D'),
        (-0.61, 'D'),
        (-1.74, 'D'),
        (-0.7, 'D'),
        (0.45, 'I'),
        (-0.88, 'D'),
        (0.57, 'I'),
        (-1.0, 'D'),
    ],
    &[
        (1.42, 'I'),
        (2.12, 'I'),
        (2.65, 'I'),
        (4.09, 'I'),
        (1.11, 'I'),
        (-0.26, 'D'),
        (-2.11, 'D'),
        (-1.87, 'D'),
        (-2.0, 'D'),
        (-1.23, 'D'),
        (-2.37, 'D'),
        (0.33, 'I'),
        (-0.21, 'D'),
        (-0.05, 'D'),
        (-1.63, 'D'),
    ],
    &[
        (1.6, 'I'),
        (1.76, 'I'),
        (3.45, 'I'),
        (2.7, 'I'),
        (1.62, 'I'),
        (-1.93, 'D'),
        (-2.23, 'D'),
        (-1.2, 'D'),
        (-2.62, 'D'),
        (-1.86, 'D'),
        (-1.34, 'D'),
        (-0.33, 'D'),
        (0.62, 'I'),
        (-2.25, 'D'),
    ],
];

/// Printed steady-state vectors, by lag. Lag 4's vector sums to 0.36.
pub const REFERENCE_PI: [[f64; 6]; 6] = [
    [0.06, 0.11, 0.39, 0.11, 0.22, 0.11],
    [0.29, 0.18, 0.35, 0.06, 0.06, 0.06],
    [0.13, 0.25, 0.31, 0.13, 0.06, 0.13],
    [0.04, 0.04, 0.04, 0.13, 0.07, 0.04],
    [0.29, 0.14, 0.21, 0.14, 0.14, 0.07],
    [0.31, 0.15, 0.08, 0.08, 0.23, 0.15],
];

/// The six candidate state sequences (1-based state numbers) and the
/// symbols listed after the start marker.
pub const OPTIMUM_SEQUENCES: [([usize; 7], &str); 6] = [
    ([1, 3, 5, 3, 5, 3, 5], "DIDIDI"),
    ([1, 3, 1, 1, 3, 1, 1], "IDDIDD"),
    ([1, 2, 3, 4, 1, 3, 4], "DDIDII"),
    ([1, 2, 4, 2, 4, 2, 3], "DIDIDD"),
    ([1, 2, 1, 1, 1, 2, 1], "DDIIDD"),
    ([1, 2, 3, 4, 1, 2, 3], "DDIDDD"),
];

pub const REFERENCE_COMPARE_SUMS: [f64; 6] = [1.0, 1.29, 1.86, 1.43, 2.14, 2.14];
pub const REFERENCE_FITNESS: [f64; 6] = [1.0, 0.76, 0.54, 0.70, 0.47, 0.47];

/// Random row-stochastic row; with probability `zero_p` each entry is a
/// structural zero (at least one entry stays positive).
pub fn random_row(rng: &mut ChaCha8Rng, len: usize, zero_p: f64) -> Vec<f64> {
    loop {
        let raw: Vec<f64> = (0..len)
            .map(|_| {
                if rng.random::<f64>() < zero_p {
                    0.0
                } else {
                    rng.random::<f64>() + 1e-3
                }
            })
            .collect();
        let s: f64 = raw.iter().sum();
        if s > 0.0 {
            return raw.into_iter().map(|x| x / s).collect();
        }
    }
}

pub fn random_model(rng: &mut ChaCha8Rng, n: usize, m: usize, zero_p: f64) -> HmmModel {
    HmmModel::new(
        StateSpace::numbered(n),
        SymbolAlphabet::new((0..m).map(|k| format!("o{k}"))).unwrap(),
        (0..n).map(|_| random_row(rng, n, zero_p)).collect(),
        (0..n).map(|_| random_row(rng, m, zero_p)).collect(),
        random_row(rng, n, zero_p),
    )
    .unwrap()
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Draws an observation sequence from `model` with an independent sampler
/// (first state drawn from the initial distribution).
pub fn sample_observations(rng: &mut ChaCha8Rng, model: &HmmModel, len: usize) -> Vec<usize> {
    let pick = |rng: &mut ChaCha8Rng, row: &[f64]| {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, &p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        row.iter().rposition(|&p| p > 0.0).unwrap()
    };
    let mut state = pick(rng, model.initial().entries());
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push(pick(rng, model.emission().row(state)));
        state = pick(rng, model.transition().row(state));
    }
    out
}

/// Every state path of length `t` over `n` states.
pub fn all_paths(n: usize, t: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = n.pow(t as u32);
    (0..total).map(move |mut code| {
        let mut path = vec![0; t];
        for slot in path.iter_mut().rev() {
            *slot = code % n;
            code /= n;
        }
        path
    })
}

/// P(path, obs | λ) by direct multiplication.
pub fn joint_probability(model: &HmmModel, path: &[usize], obs: &[usize]) -> f64 {
    let mut p = model.initial().entries()[path[0]] * model.emission().get(path[0], obs[0]);
    for t in 1..path.len() {
        p *= model.transition().get(path[t - 1], path[t]) * model.emission().get(path[t], obs[t]);
    }
    p
}

/// Σ over all paths of the joint probability.
pub fn brute_force_likelihood(model: &HmmModel, obs: &[usize]) -> f64 {
    all_paths(model.n_states(), obs.len())
        .map(|path| joint_probability(model, &path, obs))
        .sum()
}

/// Highest-probability path by enumeration; first in lexicographic order on
/// ties. `None` if every path is impossible.
pub fn brute_force_argmax(model: &HmmModel, obs: &[usize]) -> Option<(Vec<usize>, f64)> {
    let mut best: Option<(Vec<usize>, f64)> = None;
    for path in all_paths(model.n_states(), obs.len()) {
        let p = joint_probability(model, &path, obs);
        if p > 0.0 && best.as_ref().is_none_or(|(_, b)| p > *b) {
            best = Some((path, p));
        }
    }
    best
}

/// π from the full augmented system [Pᵀ − I; 1ᵀ] π = [0; 1] via SVD least
/// squares.
pub fn stationary_oracle(transition: &[Vec<f64>]) -> Vec<f64> {
    let n = transition.len();
    let a = nalgebra::DMatrix::from_fn(n + 1, n, |r, c| {
        if r == n {
            1.0
        } else {
            transition[c][r] - if r == c { 1.0 } else { 0.0 }
        }
    });
    let mut b = nalgebra::DVector::zeros(n + 1);
    b[n] = 1.0;
    let svd = a.svd(true, true);
    svd.solve(&b, 1e-14).unwrap().iter().copied().collect()
}

/// Every path whose joint probability is within `rel` of the maximum. Paths
/// built from the same multiset of factors tie exactly, and which of them
/// wins a floating-point comparison is round-off.
pub fn brute_force_argmax_set(model: &HmmModel, obs: &[usize], rel: f64) -> Vec<Vec<usize>> {
    let Some((_, best)) = brute_force_argmax(model, obs) else {
        return Vec::new();
    };
    all_paths(model.n_states(), obs.len())
        .filter(|path| joint_probability(model, path, obs) >= best * (1.0 - rel))
        .collect()
}
