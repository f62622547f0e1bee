//! Assertion reachability in a [`LoopProgram`].
//!
//! Explicit-state breadth-first search over `(block, valuation)` pairs. A
//! transition runs one handler block (GUI effects off); the state after it
//! is a cut point where the assertions are checked. Variable domains are
//! finite because assignments saturate, so the search always terminates
//! unless a limit is hit first.
//!
//! The search is level-synchronous. Within one level, states are ordered by
//! the event sequence that reaches them and then by the location sequence,
//! so the first violating state found gives the shortest counterexample,
//! least in that order among all of the shortest ones.

use std::collections::{HashMap, HashSet};

use serde::Serialize;
use thiserror::Error;

use crate::app::{AppSpec, Stmt, Valuation};
use crate::eefg::EventSequence;
use crate::program::{BlockId, LoopProgram, ProgramTrace, TraceStep, EXIT, START};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("program does not match application: event {0} has no handler")]
    StructuralMismatch(String),
    #[error("analysis limits must be positive")]
    BadLimits,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AnalysisLimits {
    pub max_states: usize,
    /// Maximum number of events per explored sequence.
    pub max_depth: usize,
}

impl AnalysisLimits {
    pub fn new(max_states: usize, max_depth: usize) -> Result<Self, AnalysisError> {
        if max_states == 0 || max_depth == 0 {
            return Err(AnalysisError::BadLimits);
        }
        Ok(Self {
            max_states,
            max_depth,
        })
    }
}

impl Default for AnalysisLimits {
    fn default() -> Self {
        Self {
            max_states: 1_000_000,
            max_depth: 256,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnknownReason {
    StateLimit,
    DepthLimit,
    /// The program trace violates an assertion but the executable replay of
    /// the same sequence does not.
    DomainAnomaly,
}

impl std::fmt::Display for UnknownReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            UnknownReason::StateLimit => "state-limit",
            UnknownReason::DepthLimit => "depth-limit",
            UnknownReason::DomainAnomaly => "domain-anomaly",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub sequence: EventSequence,
    pub trace: ProgramTrace,
    pub violated: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Safe,
    Unsafe(Counterexample),
    Unknown {
        reason: UnknownReason,
        detail: String,
    },
}

impl Verdict {
    pub fn kind(&self) -> &'static str {
        match self {
            Verdict::Safe => "safe",
            Verdict::Unsafe(_) => "unsafe",
            Verdict::Unknown { .. } => "unknown",
        }
    }

    pub fn counterexample(&self) -> Option<&Counterexample> {
        match self {
            Verdict::Unsafe(c) => Some(c),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct AnalysisMetrics {
    pub states_explored: usize,
    pub frontier_peak: usize,
    /// Deepest level reached, in events.
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Analysis {
    pub verdict: Verdict,
    pub metrics: AnalysisMetrics,
}

impl Analysis {
    pub fn to_json(&self, p: &LoopProgram, app: &AppSpec) -> serde_json::Value {
        let mut v = serde_json::json!({
            "verdict": self.verdict.kind(),
            "metrics": self.metrics,
        });
        match &self.verdict {
            Verdict::Safe => {}
            Verdict::Unsafe(c) => {
                v["sequence"] = serde_json::to_value(&c.sequence).expect("sequence serializes");
                v["violated"] = serde_json::to_value(&c.violated).expect("ids serialize");
                v["trace"] = c.trace.to_json(p, app);
            }
            Verdict::Unknown { reason, detail } => {
                v["reason"] = serde_json::Value::String(reason.to_string());
                v["detail"] = serde_json::Value::String(detail.clone());
            }
        }
        v
    }
}

struct Node {
    block: BlockId,
    valuation: Valuation,
    parent: Option<usize>,
}

/// A frontier entry: node index plus the dense rank of its event sequence
/// within the level. Its position in the level is its full rank.
#[derive(Clone, Copy)]
struct Slot {
    node: usize,
    event_rank: usize,
}

pub fn run_static_analysis(
    p: &LoopProgram,
    app: &AppSpec,
    limits: AnalysisLimits,
) -> Result<Analysis, AnalysisError> {
    let mut handlers: Vec<Option<&[Stmt]>> = vec![None; p.blocks().len()];
    let mut event_rank: Vec<usize> = vec![0; p.blocks().len()];
    let alphabet: Vec<&String> = p.alphabet().iter().collect();
    for (b, block) in p.handler_blocks() {
        let event = block.event().expect("handler block");
        handlers[b] = Some(
            app.handler(event)
                .ok_or_else(|| AnalysisError::StructuralMismatch(event.clone()))?,
        );
        event_rank[b] = alphabet.binary_search(&event).expect("label in alphabet");
    }

    let mut metrics = AnalysisMetrics::default();
    let init = app.initial_valuation();
    let mut nodes = vec![Node {
        block: START,
        valuation: init.clone(),
        parent: None,
    }];
    let mut visited: HashSet<(BlockId, Valuation)> = HashSet::new();
    visited.insert((START, init.clone()));
    metrics.states_explored = 1;
    metrics.frontier_peak = 1;

    let violated = app.violated(&init);
    if !violated.is_empty() {
        return Ok(Analysis {
            verdict: Verdict::Unsafe(counterexample(p, &nodes, 0, violated)),
            metrics,
        });
    }

    let mut frontier = vec![Slot {
        node: 0,
        event_rank: 0,
    }];
    loop {
        // key: (parent event rank, event rank, parent position, block)
        type Key = (usize, usize, usize, BlockId);
        let mut candidates: HashMap<(BlockId, Valuation), (Key, usize)> = HashMap::new();
        for (pos, slot) in frontier.iter().enumerate() {
            let node = &nodes[slot.node];
            for &b in &p.block(node.block).successors {
                if b == EXIT {
                    continue;
                }
                let mut v = node.valuation.clone();
                app.exec_on_valuation(handlers[b].expect("handler block"), &mut v);
                let state = (b, v);
                if visited.contains(&state) {
                    continue;
                }
                let key = (slot.event_rank, event_rank[b], pos, b);
                candidates
                    .entry(state)
                    .and_modify(|c| {
                        if key < c.0 {
                            *c = (key, slot.node);
                        }
                    })
                    .or_insert((key, slot.node));
            }
        }
        if candidates.is_empty() {
            return Ok(Analysis {
                verdict: Verdict::Safe,
                metrics,
            });
        }
        if metrics.depth + 1 > limits.max_depth {
            return Ok(Analysis {
                verdict: Verdict::Unknown {
                    reason: UnknownReason::DepthLimit,
                    detail: format!(
                        "{} unexplored states beyond depth {}",
                        candidates.len(),
                        limits.max_depth
                    ),
                },
                metrics,
            });
        }
        if metrics.states_explored + candidates.len() > limits.max_states {
            return Ok(Analysis {
                verdict: Verdict::Unknown {
                    reason: UnknownReason::StateLimit,
                    detail: format!(
                        "state limit {} reached at depth {}",
                        limits.max_states,
                        metrics.depth + 1
                    ),
                },
                metrics,
            });
        }

        let mut level: Vec<((BlockId, Valuation), (Key, usize))> = candidates.into_iter().collect();
        level.sort_by_key(|(_, (key, _))| *key);
        let mut next = Vec::with_capacity(level.len());
        let mut rank = 0;
        let mut prev_events: Option<(usize, usize)> = None;
        for ((block, valuation), (key, parent)) in level {
            let events = (key.0, key.1);
            if prev_events.is_some_and(|p| p != events) {
                rank += 1;
            }
            prev_events = Some(events);
            visited.insert((block, valuation.clone()));
            next.push(Slot {
                node: nodes.len(),
                event_rank: rank,
            });
            nodes.push(Node {
                block,
                valuation,
                parent: Some(parent),
            });
        }
        metrics.states_explored += next.len();
        metrics.frontier_peak = metrics.frontier_peak.max(next.len());
        metrics.depth += 1;

        for slot in &next {
            let violated = app.violated(&nodes[slot.node].valuation);
            if !violated.is_empty() {
                return Ok(Analysis {
                    verdict: Verdict::Unsafe(counterexample(p, &nodes, slot.node, violated)),
                    metrics,
                });
            }
        }
        frontier = next;
    }
}

fn counterexample(
    p: &LoopProgram,
    nodes: &[Node],
    last: usize,
    violated: Vec<String>,
) -> Counterexample {
    let mut chain = Vec::new();
    let mut cur = Some(last);
    while let Some(n) = cur {
        chain.push(n);
        cur = nodes[n].parent;
    }
    chain.reverse();
    let mut steps: Vec<TraceStep> = chain
        .iter()
        .map(|&n| TraceStep {
            block: nodes[n].block,
            valuation: nodes[n].valuation.clone(),
        })
        .collect();
    steps.push(TraceStep {
        block: EXIT,
        valuation: nodes[last].valuation.clone(),
    });
    let trace = ProgramTrace { steps };
    let sequence = p
        .trace_to_event_sequence(&trace)
        .expect("search only follows program jumps");
    Counterexample {
        sequence,
        trace,
        violated,
    }
}

pub fn trace_to_event_sequence(
    t: &ProgramTrace,
    p: &LoopProgram,
) -> Result<EventSequence, crate::program::ProgramError> {
    p.trace_to_event_sequence(t)
}
