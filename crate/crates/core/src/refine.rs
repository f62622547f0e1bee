//! EEFG refinement: removing a language of non-executable sequences.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eefg::{Eefg, EefgError, EventSequence};
use crate::nfa::{efg_to_nfa, factor_automaton, prefix_automaton, NfaError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RefineError {
    #[error("cannot refine with the empty sequence")]
    EmptySequence,
    #[error("sequence {0} is not possible in the graph")]
    NotPossible(EventSequence),
    #[error(transparent)]
    Graph(#[from] EefgError),
    #[error(transparent)]
    Automaton(#[from] NfaError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RefineMode {
    /// Remove every sequence that starts with the given one.
    #[default]
    Prefix,
    /// Remove every sequence that contains the given one. Heuristic: may
    /// also drop executable sequences.
    Factor,
}

impl std::str::FromStr for RefineMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "prefix" => Ok(RefineMode::Prefix),
            "factor" => Ok(RefineMode::Factor),
            other => Err(format!("unknown refinement mode {other}")),
        }
    }
}

impl std::fmt::Display for RefineMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RefineMode::Prefix => "prefix",
            RefineMode::Factor => "factor",
        })
    }
}

/// Graph whose possible sequences are those of `g` minus `s.Σ*`
/// (or minus `Σ*.s.Σ*` in factor mode).
pub fn refine_efg(g: &Eefg, s: &EventSequence, mode: RefineMode) -> Result<Eefg, RefineError> {
    if s.is_empty() {
        return Err(RefineError::EmptySequence);
    }
    if !g.is_possible(s)? {
        return Err(RefineError::NotPossible(s.clone()));
    }
    let excluded = match mode {
        RefineMode::Prefix => prefix_automaton(s, g.alphabet())?,
        RefineMode::Factor => factor_automaton(s, g.alphabet())?,
    };
    let product = efg_to_nfa(g).intersect(&excluded.complement()).trim();
    Ok(product.to_efg()?)
}
