//! Black-box inference of a classical event flow graph.
//!
//! Breadth-first exploration of the simulated application's concrete states,
//! firing every executable event. States are deduplicated, except that the
//! pre-interaction root is kept apart from later states equal to it: the root
//! only determines the initial events. States at distance `< depth` from the
//! root are expanded. An edge `(e, e')` is recorded when a transition fired by
//! `e` lands in an expanded state from which `e'` fires.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use crate::app::{AppSpec, ConcreteState, EventId};
use crate::eefg::{Eefg, EventSequence};
use crate::replay::step;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RipOutput {
    pub efg: Eefg,
    /// A concrete execution ending in `e, e'` for every recorded edge.
    pub witnesses: BTreeMap<(EventId, EventId), EventSequence>,
    pub states_explored: usize,
}

pub fn rip_efg(app: &AppSpec, depth: usize) -> Eefg {
    rip_with_witnesses(app, depth).efg
}

struct Node {
    state: ConcreteState,
    level: usize,
    access: EventSequence,
    expanded: bool,
    fired: Vec<(EventId, usize)>,
}

pub fn rip_with_witnesses(app: &AppSpec, depth: usize) -> RipOutput {
    let alphabet: Vec<EventId> = app.alphabet().into_iter().collect();
    let mut nodes = vec![Node {
        state: app.initial_state(),
        level: 0,
        access: EventSequence::empty(),
        expanded: false,
        fired: Vec::new(),
    }];
    let mut index: HashMap<ConcreteState, usize> = HashMap::new();
    let mut queue = VecDeque::from([0usize]);

    while let Some(n) = queue.pop_front() {
        if nodes[n].level >= depth {
            continue;
        }
        nodes[n].expanded = true;
        for event in &alphabet {
            let state = nodes[n].state.clone();
            // Transitions that stack modal windows are not explorable.
            let Ok(Some(next)) = step(app, &state, event, nodes[n].access.len() + 1) else {
                continue;
            };
            let target = match index.get(&next) {
                Some(&t) => t,
                None => {
                    let t = nodes.len();
                    nodes.push(Node {
                        state: next.clone(),
                        level: nodes[n].level + 1,
                        access: nodes[n].access.with(event.clone()),
                        expanded: false,
                        fired: Vec::new(),
                    });
                    index.insert(next, t);
                    queue.push_back(t);
                    t
                }
            };
            nodes[n].fired.push((event.clone(), target));
        }
    }

    let initial: BTreeSet<String> = nodes[0].fired.iter().map(|(e, _)| e.clone()).collect();
    let mut witnesses: BTreeMap<(EventId, EventId), EventSequence> = BTreeMap::new();
    for source in &nodes {
        for (event, target) in &source.fired {
            let target = &nodes[*target];
            if !target.expanded {
                continue;
            }
            for (next_event, _) in &target.fired {
                let witness = source.access.with(event.clone()).with(next_event.clone());
                witnesses
                    .entry((event.clone(), next_event.clone()))
                    .and_modify(|w| {
                        if (witness.len(), &witness) < (w.len(), &*w) {
                            *w = witness.clone();
                        }
                    })
                    .or_insert(witness);
            }
        }
    }

    let locations = alphabet.iter().map(|e| (e.clone(), e.clone())).collect();
    let edges = witnesses.keys().cloned().collect();
    let efg = Eefg::new(
        locations,
        initial,
        edges,
        Some(alphabet.iter().cloned().collect()),
    )
    .expect("ripped graph is well formed");
    RipOutput {
        efg,
        witnesses,
        states_explored: nodes.len(),
    }
}
