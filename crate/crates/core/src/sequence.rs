use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symbol indices into a [`SymbolAlphabet`](crate::SymbolAlphabet).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObservationSequence(Vec<usize>);

/// State indices into a [`StateSpace`](crate::StateSpace).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateSequence(Vec<usize>);

macro_rules! index_sequence {
    ($ty:ident) => {
        impl $ty {
            pub fn new(indices: Vec<usize>) -> Self {
                Self(indices)
            }

            pub fn as_slice(&self) -> &[usize] {
                &self.0
            }

            pub fn into_vec(self) -> Vec<usize> {
                self.0
            }
        }

        impl Deref for $ty {
            type Target = [usize];

            fn deref(&self) -> &[usize] {
                &self.0
            }
        }

        impl From<Vec<usize>> for $ty {
            fn from(v: Vec<usize>) -> Self {
                Self(v)
            }
        }

        impl FromIterator<usize> for $ty {
            fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
                Self(iter.into_iter().collect())
            }
        }
    };
}

index_sequence!(ObservationSequence);
index_sequence!(StateSequence);

pub(crate) fn check_symbols(obs: &[usize], alphabet: usize) -> Result<()> {
    if obs.is_empty() {
        return Err(Error::EmptySequence);
    }
    match obs.iter().position(|&o| o >= alphabet) {
        Some(position) => Err(Error::SymbolOutOfRange {
            index: obs[position],
            position,
            alphabet,
        }),
        None => Ok(()),
    }
}

pub(crate) fn check_states(states: &[usize], n: usize) -> Result<()> {
    match states.iter().position(|&s| s >= n) {
        Some(position) => Err(Error::StateOutOfRange {
            index: states[position],
            position,
            states: n,
        }),
        None => Ok(()),
    }
}
