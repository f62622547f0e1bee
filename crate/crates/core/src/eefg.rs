//! Extended event flow graphs.
//!
//! Locations are labeled with events and several locations may carry the
//! same event. A sequence of events is *possible* when it is the labeling
//! of a path that starts in an initial location. The empty sequence is
//! always possible.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::app::EventId;

pub type LocationId = String;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EefgError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("duplicate location {0}")]
    DuplicateLocation(String),
    #[error("initial location {0} is not a location")]
    UnknownInitial(String),
    #[error("edge ({0}, {1}) names an unknown location")]
    UnknownEdgeEndpoint(String, String),
    #[error("location {location} is labeled with {event}, which is not in the alphabet")]
    LabelOutsideAlphabet { location: String, event: String },
    #[error("unknown event {0}")]
    UnknownEvent(String),
}

/// A finite sequence of events.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EventSequence(pub Vec<EventId>);

impl EventSequence {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn events(&self) -> &[EventId] {
        &self.0
    }

    pub fn starts_with(&self, prefix: &EventSequence) -> bool {
        self.0.starts_with(&prefix.0)
    }

    /// True when `factor` occurs contiguously somewhere in `self`.
    pub fn contains_factor(&self, factor: &EventSequence) -> bool {
        factor.is_empty()
            || self
                .0
                .windows(factor.len())
                .any(|w| w == factor.0.as_slice())
    }

    pub fn prefix(&self, len: usize) -> EventSequence {
        EventSequence(self.0[..len].to_vec())
    }

    pub fn push(&mut self, event: impl Into<EventId>) {
        self.0.push(event.into());
    }

    pub fn with(&self, event: impl Into<EventId>) -> EventSequence {
        let mut next = self.clone();
        next.push(event);
        next
    }

    /// Parse a comma separated list such as `e1,e2,e3`.
    pub fn parse_list(text: &str) -> EventSequence {
        EventSequence(
            text.split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect(),
        )
    }
}

impl<S: Into<EventId>> FromIterator<S> for EventSequence {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        EventSequence(iter.into_iter().map(Into::into).collect())
    }
}

impl fmt::Display for EventSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "ε");
        }
        write!(f, "{}", self.0.join(","))
    }
}

/// Shorthand used throughout the tests: `seq(&["e1", "e2"])`.
pub fn seq(events: &[&str]) -> EventSequence {
    events.iter().copied().collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EefgFile {
    #[serde(default)]
    locations: Vec<LocationFile>,
    #[serde(default)]
    initial: Vec<String>,
    #[serde(default)]
    edges: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alphabet: Option<Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LocationFile {
    id: String,
    event: String,
}

/// Extended event flow graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Eefg {
    locations: BTreeMap<LocationId, EventId>,
    initial: BTreeSet<LocationId>,
    edges: BTreeSet<(LocationId, LocationId)>,
    alphabet: BTreeSet<EventId>,
}

impl Eefg {
    /// Build a graph, validating its invariants. When `alphabet` is `None`
    /// it is taken to be the set of labels in use.
    pub fn new(
        locations: BTreeMap<LocationId, EventId>,
        initial: BTreeSet<LocationId>,
        edges: BTreeSet<(LocationId, LocationId)>,
        alphabet: Option<BTreeSet<EventId>>,
    ) -> Result<Self, EefgError> {
        for l in &initial {
            if !locations.contains_key(l) {
                return Err(EefgError::UnknownInitial(l.clone()));
            }
        }
        for (a, b) in &edges {
            if !locations.contains_key(a) || !locations.contains_key(b) {
                return Err(EefgError::UnknownEdgeEndpoint(a.clone(), b.clone()));
            }
        }
        let alphabet = match alphabet {
            Some(alphabet) => {
                for (l, e) in &locations {
                    if !alphabet.contains(e) {
                        return Err(EefgError::LabelOutsideAlphabet {
                            location: l.clone(),
                            event: e.clone(),
                        });
                    }
                }
                alphabet
            }
            None => locations.values().cloned().collect(),
        };
        Ok(Self {
            locations,
            initial,
            edges,
            alphabet,
        })
    }

    pub fn empty() -> Self {
        Self {
            locations: BTreeMap::new(),
            initial: BTreeSet::new(),
            edges: BTreeSet::new(),
            alphabet: BTreeSet::new(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, EefgError> {
        let file: EefgFile = serde_json::from_str(text).map_err(|e| EefgError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let mut locations = BTreeMap::new();
        for l in file.locations {
            if locations.insert(l.id.clone(), l.event).is_some() {
                return Err(EefgError::DuplicateLocation(l.id));
            }
        }
        Self::new(
            locations,
            file.initial.into_iter().collect(),
            file.edges.into_iter().collect(),
            file.alphabet.map(|a| a.into_iter().collect()),
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_value()).expect("graph serializes")
    }

    pub fn to_value(&self) -> serde_json::Value {
        let labels: BTreeSet<&EventId> = self.locations.values().collect();
        let alphabet =
            (labels.len() != self.alphabet.len()).then(|| self.alphabet.iter().cloned().collect());
        let file = EefgFile {
            locations: self
                .locations
                .iter()
                .map(|(id, event)| LocationFile {
                    id: id.clone(),
                    event: event.clone(),
                })
                .collect(),
            initial: self.initial.iter().cloned().collect(),
            edges: self.edges.iter().cloned().collect(),
            alphabet,
        };
        serde_json::to_value(file).expect("graph serializes")
    }

    /// Same graph over a larger alphabet.
    pub fn with_alphabet(mut self, alphabet: BTreeSet<EventId>) -> Result<Self, EefgError> {
        for (l, e) in &self.locations {
            if !alphabet.contains(e) {
                return Err(EefgError::LabelOutsideAlphabet {
                    location: l.clone(),
                    event: e.clone(),
                });
            }
        }
        self.alphabet = alphabet;
        Ok(self)
    }

    pub fn locations(&self) -> &BTreeMap<LocationId, EventId> {
        &self.locations
    }

    pub fn initial(&self) -> &BTreeSet<LocationId> {
        &self.initial
    }

    pub fn edges(&self) -> &BTreeSet<(LocationId, LocationId)> {
        &self.edges
    }

    pub fn alphabet(&self) -> &BTreeSet<EventId> {
        &self.alphabet
    }

    pub fn label(&self, location: &str) -> Option<&EventId> {
        self.locations.get(location)
    }

    pub fn successors<'a>(
        &'a self,
        location: &'a str,
    ) -> impl Iterator<Item = &'a LocationId> + 'a {
        self.edges
            .range((location.to_string(), String::new())..)
            .take_while(move |(a, _)| a == location)
            .map(|(_, b)| b)
    }

    /// True iff `s` is the labeling of some path from an initial location.
    pub fn is_possible(&self, s: &EventSequence) -> Result<bool, EefgError> {
        for e in s.events() {
            if !self.alphabet.contains(e) {
                return Err(EefgError::UnknownEvent(e.clone()));
            }
        }
        let mut current: BTreeSet<&LocationId> = BTreeSet::new();
        for (i, e) in s.events().iter().enumerate() {
            let candidates: Vec<&LocationId> = if i == 0 {
                self.initial.iter().collect()
            } else {
                current.iter().flat_map(|l| self.successors(l)).collect()
            };
            current = candidates
                .into_iter()
                .filter(|l| &self.locations[*l] == e)
                .collect();
            if current.is_empty() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// All possible sequences of length at most `k`.
    pub fn enumerate_possible(&self, k: usize) -> BTreeSet<EventSequence> {
        let mut out = BTreeSet::new();
        out.insert(EventSequence::empty());
        let start: Vec<&LocationId> = self.initial.iter().collect();
        self.extend(&mut EventSequence::empty(), &start, k, &mut out);
        out
    }

    fn extend(
        &self,
        word: &mut EventSequence,
        candidates: &[&LocationId],
        k: usize,
        out: &mut BTreeSet<EventSequence>,
    ) {
        if word.len() == k {
            return;
        }
        let mut by_label: BTreeMap<&EventId, BTreeSet<&LocationId>> = BTreeMap::new();
        for l in candidates {
            by_label.entry(&self.locations[*l]).or_default().insert(l);
        }
        for (event, locs) in by_label {
            word.push(event.clone());
            out.insert(word.clone());
            let next: BTreeSet<&LocationId> =
                locs.iter().flat_map(|l| self.successors(l)).collect();
            let next: Vec<&LocationId> = next.into_iter().collect();
            self.extend(word, &next, k, out);
            word.0.pop();
        }
    }

    /// Graphviz rendering; initial locations get an arrow from a point node.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph efg {\n");
        if !self.locations.is_empty() {
            out.push_str("  rankdir=LR;\n  node [shape=box, style=rounded];\n");
        }
        if !self.initial.is_empty() {
            out.push_str("  __start [shape=point];\n");
        }
        for (id, event) in &self.locations {
            let label = if id == event {
                event.clone()
            } else {
                format!("{event}\\n{id}")
            };
            out.push_str(&format!("  {} [label={}];\n", quote(id), quote(&label)));
        }
        for id in &self.initial {
            out.push_str(&format!("  __start -> {};\n", quote(id)));
        }
        for (a, b) in &self.edges {
            out.push_str(&format!("  {} -> {};\n", quote(a), quote(b)));
        }
        out.push_str("}\n");
        out
    }

    /// Label- and initial-preserving graph isomorphism (backtracking).
    pub fn is_isomorphic(&self, other: &Eefg) -> bool {
        if self.locations.len() != other.locations.len()
            || self.initial.len() != other.initial.len()
            || self.edges.len() != other.edges.len()
        {
            return false;
        }
        let sig = |g: &Eefg| {
            let mut s: Vec<_> = g.locations.keys().map(|l| g.signature(l)).collect();
            s.sort();
            s
        };
        if sig(self) != sig(other) {
            return false;
        }
        let order: Vec<&LocationId> = self.locations.keys().collect();
        let mut map: BTreeMap<&LocationId, &LocationId> = BTreeMap::new();
        let mut used: BTreeSet<&LocationId> = BTreeSet::new();
        self.match_from(other, &order, 0, &mut map, &mut used)
    }

    fn signature(&self, l: &str) -> (EventId, bool, usize, usize, bool) {
        let out = self.successors(l).count();
        let inn = self.edges.iter().filter(|(_, b)| b == l).count();
        (
            self.locations[l].clone(),
            self.initial.contains(l),
            out,
            inn,
            self.edges.contains(&(l.to_string(), l.to_string())),
        )
    }

    fn match_from<'a>(
        &'a self,
        other: &'a Eefg,
        order: &[&'a LocationId],
        i: usize,
        map: &mut BTreeMap<&'a LocationId, &'a LocationId>,
        used: &mut BTreeSet<&'a LocationId>,
    ) -> bool {
        let Some(l) = order.get(i) else {
            return true;
        };
        let sig = self.signature(l);
        for cand in other.locations.keys() {
            if used.contains(cand) || other.signature(cand) != sig {
                continue;
            }
            // Edges between l and already-mapped locations must agree.
            let consistent = map.iter().all(|(a, b)| {
                self.edges.contains(&((*l).clone(), (*a).clone()))
                    == other.edges.contains(&(cand.clone(), (*b).clone()))
                    && self.edges.contains(&((*a).clone(), (*l).clone()))
                        == other.edges.contains(&((*b).clone(), cand.clone()))
            });
            if !consistent {
                continue;
            }
            map.insert(l, cand);
            used.insert(cand);
            if self.match_from(other, order, i + 1, map, used) {
                return true;
            }
            map.remove(l);
            used.remove(cand);
        }
        false
    }
}

pub(crate) fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}
