//! Finite automata over event alphabets and the language operations used
//! to refine an EEFG.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use crate::app::EventId;
use crate::eefg::{Eefg, EventSequence};

pub type StateId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NfaError {
    #[error("symbol {0} is not in the alphabet")]
    SymbolOutsideAlphabet(String),
    #[error("cannot exclude the empty sequence")]
    EmptySequence,
    #[error("state {state} has incoming transitions on both {first} and {second}")]
    IncomingLabelConflict {
        state: String,
        first: String,
        second: String,
    },
    #[error("automaton has no graph form: {0}")]
    NotRepresentable(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Nfa {
    alphabet: BTreeSet<EventId>,
    names: Vec<String>,
    accepting: Vec<bool>,
    delta: Vec<BTreeMap<EventId, BTreeSet<StateId>>>,
    initial: StateId,
}

impl Nfa {
    /// An automaton with a single (initial) state.
    pub fn new(alphabet: BTreeSet<EventId>, initial_name: &str, initial_accepting: bool) -> Self {
        Self {
            alphabet,
            names: vec![initial_name.to_string()],
            accepting: vec![initial_accepting],
            delta: vec![BTreeMap::new()],
            initial: 0,
        }
    }

    pub fn add_state(&mut self, name: impl Into<String>, accepting: bool) -> StateId {
        self.names.push(name.into());
        self.accepting.push(accepting);
        self.delta.push(BTreeMap::new());
        self.names.len() - 1
    }

    pub fn add_transition(
        &mut self,
        from: StateId,
        symbol: &str,
        to: StateId,
    ) -> Result<(), NfaError> {
        if !self.alphabet.contains(symbol) {
            return Err(NfaError::SymbolOutsideAlphabet(symbol.to_string()));
        }
        assert!(
            from < self.names.len() && to < self.names.len(),
            "state out of range"
        );
        self.delta[from]
            .entry(symbol.to_string())
            .or_default()
            .insert(to);
        Ok(())
    }

    pub fn alphabet(&self) -> &BTreeSet<EventId> {
        &self.alphabet
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn num_states(&self) -> usize {
        self.names.len()
    }

    pub fn name(&self, q: StateId) -> &str {
        &self.names[q]
    }

    pub fn is_accepting(&self, q: StateId) -> bool {
        self.accepting[q]
    }

    pub fn num_transitions(&self) -> usize {
        self.delta
            .iter()
            .flat_map(|m| m.values())
            .map(BTreeSet::len)
            .sum()
    }

    pub fn transitions(&self) -> impl Iterator<Item = (StateId, &EventId, StateId)> + '_ {
        self.delta.iter().enumerate().flat_map(|(q, m)| {
            m.iter()
                .flat_map(move |(sym, ts)| ts.iter().map(move |t| (q, sym, *t)))
        })
    }

    fn targets(&self, q: StateId, symbol: &str) -> impl Iterator<Item = StateId> + '_ {
        self.delta[q].get(symbol).into_iter().flatten().copied()
    }

    fn step_set(&self, set: &BTreeSet<StateId>, symbol: &str) -> BTreeSet<StateId> {
        set.iter().flat_map(|q| self.targets(*q, symbol)).collect()
    }

    pub fn is_deterministic(&self) -> bool {
        self.delta
            .iter()
            .all(|m| m.values().all(|ts| ts.len() <= 1))
    }

    pub fn is_complete(&self) -> bool {
        self.delta.iter().all(|m| {
            self.alphabet
                .iter()
                .all(|a| m.get(a).is_some_and(|ts| !ts.is_empty()))
        })
    }

    pub fn accepts(&self, s: &EventSequence) -> bool {
        let mut current = BTreeSet::from([self.initial]);
        for e in s.events() {
            current = self.step_set(&current, e);
            if current.is_empty() {
                return false;
            }
        }
        current.iter().any(|q| self.accepting[*q])
    }

    /// All accepted words of length at most `k`.
    pub fn enumerate_words(&self, k: usize) -> BTreeSet<EventSequence> {
        let mut out = BTreeSet::new();
        let mut stack = vec![(EventSequence::empty(), BTreeSet::from([self.initial]))];
        while let Some((word, set)) = stack.pop() {
            if set.iter().any(|q| self.accepting[*q]) {
                out.insert(word.clone());
            }
            if word.len() == k {
                continue;
            }
            for a in &self.alphabet {
                let next = self.step_set(&set, a);
                if !next.is_empty() {
                    stack.push((word.with(a.clone()), next));
                }
            }
        }
        out
    }

    /// Subset construction; the result is deterministic and complete.
    pub fn determinize(&self) -> Nfa {
        let start = BTreeSet::from([self.initial]);
        let subset_name = |set: &BTreeSet<StateId>| {
            let parts: Vec<&str> = set.iter().map(|q| self.names[*q].as_str()).collect();
            format!("{{{}}}", parts.join(","))
        };
        let mut out = Nfa::new(
            self.alphabet.clone(),
            &subset_name(&start),
            start.iter().any(|q| self.accepting[*q]),
        );
        let mut index: BTreeMap<BTreeSet<StateId>, StateId> = BTreeMap::from([(start.clone(), 0)]);
        let mut queue = VecDeque::from([start]);
        while let Some(set) = queue.pop_front() {
            let from = index[&set];
            for a in &self.alphabet {
                let next = self.step_set(&set, a);
                let to = match index.get(&next) {
                    Some(&t) => t,
                    None => {
                        let t = out
                            .add_state(subset_name(&next), next.iter().any(|q| self.accepting[*q]));
                        index.insert(next.clone(), t);
                        queue.push_back(next);
                        t
                    }
                };
                out.delta[from].entry(a.clone()).or_default().insert(to);
            }
        }
        out
    }

    /// Complement with respect to this automaton's alphabet.
    pub fn complement(&self) -> Nfa {
        let mut d = self.determinize();
        for acc in &mut d.accepting {
            *acc = !*acc;
        }
        d
    }

    /// Product automaton restricted to states reachable from the initial pair.
    pub fn intersect(&self, other: &Nfa) -> Nfa {
        let alphabet: BTreeSet<EventId> = self.alphabet.union(&other.alphabet).cloned().collect();
        let pair_name =
            |(a, b): (StateId, StateId)| format!("{}|{}", self.names[a], other.names[b]);
        let start = (self.initial, other.initial);
        let mut out = Nfa::new(
            alphabet,
            &pair_name(start),
            self.accepting[start.0] && other.accepting[start.1],
        );
        let mut index: BTreeMap<(StateId, StateId), StateId> = BTreeMap::from([(start, 0)]);
        let mut queue = VecDeque::from([start]);
        while let Some(pair) = queue.pop_front() {
            let from = index[&pair];
            for (sym, targets) in &self.delta[pair.0] {
                for t1 in targets {
                    for t2 in other.targets(pair.1, sym) {
                        let next = (*t1, t2);
                        let to = match index.get(&next) {
                            Some(&t) => t,
                            None => {
                                let t = out.add_state(
                                    pair_name(next),
                                    self.accepting[next.0] && other.accepting[next.1],
                                );
                                index.insert(next, t);
                                queue.push_back(next);
                                t
                            }
                        };
                        out.delta[from].entry(sym.clone()).or_default().insert(to);
                    }
                }
            }
        }
        out
    }

    /// Drop states that are unreachable or cannot reach an accepting state.
    /// The initial state is always kept.
    pub fn trim(&self) -> Nfa {
        let n = self.num_states();
        let mut reach = vec![false; n];
        let mut stack = vec![self.initial];
        reach[self.initial] = true;
        while let Some(q) = stack.pop() {
            for ts in self.delta[q].values() {
                for &t in ts {
                    if !reach[t] {
                        reach[t] = true;
                        stack.push(t);
                    }
                }
            }
        }
        let mut preds: Vec<Vec<StateId>> = vec![Vec::new(); n];
        for (q, _, t) in self.transitions() {
            preds[t].push(q);
        }
        let mut coreach = self.accepting.clone();
        let mut stack: Vec<StateId> = (0..n).filter(|q| coreach[*q]).collect();
        while let Some(q) = stack.pop() {
            for &p in &preds[q] {
                if !coreach[p] {
                    coreach[p] = true;
                    stack.push(p);
                }
            }
        }
        let keep: Vec<bool> = (0..n)
            .map(|q| q == self.initial || (reach[q] && coreach[q]))
            .collect();
        let mut renumber = vec![usize::MAX; n];
        let mut out = Nfa::new(
            self.alphabet.clone(),
            &self.names[self.initial],
            self.accepting[self.initial],
        );
        renumber[self.initial] = 0;
        for q in 0..n {
            if keep[q] && q != self.initial {
                renumber[q] = out.add_state(self.names[q].clone(), self.accepting[q]);
            }
        }
        for (q, sym, t) in self.transitions() {
            if keep[q] && keep[t] {
                out.delta[renumber[q]]
                    .entry(sym.clone())
                    .or_default()
                    .insert(renumber[t]);
            }
        }
        out
    }

    /// True when all transitions entering any one state carry the same symbol.
    pub fn has_unique_incoming_labels(&self) -> bool {
        self.incoming_labels().is_ok()
    }

    fn incoming_labels(&self) -> Result<Vec<Option<&EventId>>, NfaError> {
        let mut label: Vec<Option<&EventId>> = vec![None; self.num_states()];
        for (_, sym, t) in self.transitions() {
            match label[t] {
                Some(prev) if prev != sym => {
                    let (first, second) = if prev < sym { (prev, sym) } else { (sym, prev) };
                    return Err(NfaError::IncomingLabelConflict {
                        state: self.names[t].clone(),
                        first: first.clone(),
                        second: second.clone(),
                    });
                }
                _ => label[t] = Some(sym),
            }
        }
        Ok(label)
    }

    /// Read the automaton back as an EEFG: one location per non-initial
    /// state, labeled with its incoming symbol. Locations get fresh ids
    /// (`e`, `e#1`, `e#2`, ... per event) in breadth-first order.
    pub fn to_efg(&self) -> Result<Eefg, NfaError> {
        let labels = self.incoming_labels()?;
        if !self.accepting[self.initial] {
            return Err(NfaError::NotRepresentable(
                "the empty sequence is not accepted".into(),
            ));
        }
        if labels[self.initial].is_some() {
            return Err(NfaError::NotRepresentable(
                "the initial state has incoming transitions".into(),
            ));
        }
        for (q, label) in labels.iter().enumerate() {
            if q == self.initial {
                continue;
            }
            if label.is_none() {
                return Err(NfaError::NotRepresentable(format!(
                    "state {} is unreachable",
                    self.names[q]
                )));
            }
            if !self.accepting[q] {
                return Err(NfaError::NotRepresentable(format!(
                    "state {} is not accepting",
                    self.names[q]
                )));
            }
        }

        // Fresh, deterministic location ids.
        let mut order = Vec::new();
        let mut seen = vec![false; self.num_states()];
        seen[self.initial] = true;
        let mut queue = VecDeque::from([self.initial]);
        while let Some(q) = queue.pop_front() {
            for ts in self.delta[q].values() {
                for &t in ts {
                    if !seen[t] {
                        seen[t] = true;
                        order.push(t);
                        queue.push_back(t);
                    }
                }
            }
        }
        let mut used: BTreeSet<String> = BTreeSet::new();
        let mut counters: BTreeMap<&EventId, usize> = BTreeMap::new();
        let mut loc_name: Vec<Option<String>> = vec![None; self.num_states()];
        for &q in &order {
            let event = labels[q].expect("checked above");
            let counter = counters.entry(event).or_insert(0);
            let name = loop {
                let candidate = if *counter == 0 {
                    event.clone()
                } else {
                    format!("{event}#{counter}")
                };
                *counter += 1;
                if !used.contains(&candidate) {
                    break candidate;
                }
            };
            used.insert(name.clone());
            loc_name[q] = Some(name);
        }

        let name = |q: StateId| loc_name[q].clone().expect("reachable state");
        let locations = order
            .iter()
            .map(|&q| (name(q), labels[q].expect("checked above").clone()))
            .collect();
        let mut initial = BTreeSet::new();
        let mut edges = BTreeSet::new();
        for (q, _, t) in self.transitions() {
            if q == self.initial {
                initial.insert(name(t));
            } else {
                edges.insert((name(q), name(t)));
            }
        }
        Eefg::new(locations, initial, edges, Some(self.alphabet.clone()))
            .map_err(|e| NfaError::NotRepresentable(e.to_string()))
    }
}

/// Automaton of an EEFG's possible sequences: a fresh initial state plus
/// one state per location, entered on the location's label. Every state is
/// accepting, including the initial one (the empty sequence is possible).
pub fn efg_to_nfa(g: &Eefg) -> Nfa {
    let mut a = Nfa::new(g.alphabet().clone(), "q0", true);
    let mut state: BTreeMap<&String, StateId> = BTreeMap::new();
    for loc in g.locations().keys() {
        state.insert(loc, a.add_state(loc.clone(), true));
    }
    for l in g.initial() {
        a.add_transition(0, &g.locations()[l], state[l])
            .expect("labels are in the alphabet");
    }
    for (from, to) in g.edges() {
        a.add_transition(state[from], &g.locations()[to], state[to])
            .expect("labels are in the alphabet");
    }
    a
}

fn check_word(s: &EventSequence, alphabet: &BTreeSet<EventId>) -> Result<(), NfaError> {
    if s.is_empty() {
        return Err(NfaError::EmptySequence);
    }
    for e in s.events() {
        if !alphabet.contains(e) {
            return Err(NfaError::SymbolOutsideAlphabet(e.clone()));
        }
    }
    Ok(())
}

/// Complete DFA for `s.Σ*`: a chain of `|s| + 1` states and a dead sink.
pub fn prefix_automaton(s: &EventSequence, alphabet: &BTreeSet<EventId>) -> Result<Nfa, NfaError> {
    check_word(s, alphabet)?;
    let n = s.len();
    let mut a = Nfa::new(alphabet.clone(), "p0", false);
    for i in 1..=n {
        a.add_state(format!("p{i}"), i == n);
    }
    let dead = a.add_state("dead", false);
    for (i, e) in s.events().iter().enumerate() {
        for sym in alphabet {
            a.add_transition(i, sym, if sym == e { i + 1 } else { dead })?;
        }
    }
    for sym in alphabet {
        a.add_transition(n, sym, n)?;
        a.add_transition(dead, sym, dead)?;
    }
    Ok(a)
}

/// Nondeterministic automaton for `Σ*.s.Σ*`.
pub fn factor_automaton(s: &EventSequence, alphabet: &BTreeSet<EventId>) -> Result<Nfa, NfaError> {
    check_word(s, alphabet)?;
    let n = s.len();
    let mut a = Nfa::new(alphabet.clone(), "f0", false);
    for i in 1..=n {
        a.add_state(format!("f{i}"), i == n);
    }
    for (i, e) in s.events().iter().enumerate() {
        a.add_transition(i, e, i + 1)?;
    }
    for sym in alphabet {
        a.add_transition(0, sym, 0)?;
        a.add_transition(n, sym, n)?;
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eefg::seq;

    fn sigma(events: &[&str]) -> BTreeSet<EventId> {
        events.iter().map(|e| e.to_string()).collect()
    }

    fn example() -> Eefg {
        Eefg::parse(include_str!("../../../models/example_efg.json")).unwrap()
    }

    #[test]
    fn example_graph_automaton_size() {
        let a = efg_to_nfa(&example());
        assert_eq!(a.num_states(), 5);
        assert_eq!(a.num_transitions(), 13);
        assert!(a.is_accepting(a.initial()));
        assert!(a.has_unique_incoming_labels());
        let refined =
            Eefg::parse(include_str!("../../../models/example_refined_efg.json")).unwrap();
        assert_eq!(efg_to_nfa(&refined).num_states(), 8);
    }

    #[test]
    fn empty_graph_automaton_accepts_only_empty_word() {
        let a = efg_to_nfa(&Eefg::empty());
        assert_eq!(a.num_states(), 1);
        assert_eq!(
            a.enumerate_words(3),
            BTreeSet::from([EventSequence::empty()])
        );
    }

    #[test]
    fn prefix_automaton_shape_and_language() {
        let s = seq(&["e1", "e2", "e2", "e2", "e3"]);
        let a = prefix_automaton(&s, &sigma(&["e1", "e2", "e3", "e4"])).unwrap();
        assert_eq!(a.num_states(), 7);
        assert!(a.is_deterministic() && a.is_complete());
        assert!(a.accepts(&s));
        assert!(a.accepts(&seq(&["e1", "e2", "e2", "e2", "e3", "e4"])));
        assert!(!a.accepts(&seq(&["e1", "e2", "e2", "e2"])));

        let one = prefix_automaton(&seq(&["e1"]), &sigma(&["e1"])).unwrap();
        assert!(one.accepts(&seq(&["e1"])) && one.accepts(&seq(&["e1", "e1"])));
        assert!(!one.accepts(&EventSequence::empty()));
    }

    #[test]
    fn prefix_automaton_rejects_bad_input() {
        assert_eq!(
            prefix_automaton(&EventSequence::empty(), &sigma(&["a"])),
            Err(NfaError::EmptySequence)
        );
        assert_eq!(
            prefix_automaton(&seq(&["b"]), &sigma(&["a"])),
            Err(NfaError::SymbolOutsideAlphabet("b".into()))
        );
    }

    #[test]
    fn complement_of_prefix_language() {
        let c = prefix_automaton(&seq(&["e1"]), &sigma(&["e1", "e2"]))
            .unwrap()
            .complement();
        assert!(c.accepts(&EventSequence::empty()));
        assert!(c.accepts(&seq(&["e2", "e1"])));
        assert!(!c.accepts(&seq(&["e1"])));
        assert!(!c.accepts(&seq(&["e1", "e2"])));
    }

    #[test]
    fn intersection_removes_words_with_the_prefix() {
        let g = example();
        let s = seq(&["e1", "e2", "e2", "e2", "e3"]);
        let a = efg_to_nfa(&g);
        let r = a.intersect(&prefix_automaton(&s, g.alphabet()).unwrap().complement());
        for w in g.enumerate_possible(7) {
            assert_eq!(r.accepts(&w), !w.starts_with(&s), "{w}");
        }
    }

    #[test]
    fn words_agree_with_graph_enumeration() {
        let g = example();
        let a = efg_to_nfa(&g);
        for k in 0..6 {
            assert_eq!(a.enumerate_words(k), g.enumerate_possible(k));
        }
    }

    #[test]
    fn round_trip_through_automaton() {
        let g = example();
        let back = efg_to_nfa(&g).to_efg().unwrap();
        assert!(back.is_isomorphic(&g));
    }

    #[test]
    fn conflicting_incoming_labels_are_rejected() {
        let mut a = Nfa::new(sigma(&["a", "b"]), "q0", true);
        let x = a.add_state("x", true);
        a.add_transition(0, "a", x).unwrap();
        a.add_transition(x, "b", x).unwrap();
        assert_eq!(
            a.to_efg(),
            Err(NfaError::IncomingLabelConflict {
                state: "x".into(),
                first: "a".into(),
                second: "b".into()
            })
        );
    }

    #[test]
    fn unrepresentable_automata_are_rejected() {
        let mut a = Nfa::new(sigma(&["a"]), "q0", true);
        let x = a.add_state("x", false);
        a.add_transition(0, "a", x).unwrap();
        assert!(matches!(a.to_efg(), Err(NfaError::NotRepresentable(_))));
        let b = Nfa::new(sigma(&["a"]), "q0", false);
        assert!(matches!(b.to_efg(), Err(NfaError::NotRepresentable(_))));
    }

    #[test]
    fn trim_keeps_only_useful_states() {
        let mut a = Nfa::new(sigma(&["a"]), "q0", false);
        let live = a.add_state("live", true);
        let dead = a.add_state("dead", false);
        let _orphan = a.add_state("orphan", true);
        a.add_transition(0, "a", live).unwrap();
        a.add_transition(0, "a", dead).unwrap();
        a.add_transition(dead, "a", dead).unwrap();
        let t = a.trim();
        assert_eq!(t.num_states(), 2);
        assert_eq!(t.enumerate_words(4), a.enumerate_words(4));
    }

    #[test]
    fn factor_automaton_language() {
        let f = factor_automaton(&seq(&["a", "b"]), &sigma(&["a", "b"])).unwrap();
        assert!(f.accepts(&seq(&["b", "a", "b", "b"])));
        assert!(!f.accepts(&seq(&["b", "b", "a"])));
        let d = f.determinize();
        assert!(d.is_deterministic() && d.is_complete());
        assert_eq!(d.enumerate_words(5), f.enumerate_words(5));
    }
}
