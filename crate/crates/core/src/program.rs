//! The mock message-loop program built from an application and an EEFG.
//!
//! One block per EEFG location runs that location's event handler and then
//! jumps nondeterministically to the blocks of its successor locations or
//! to `EXIT`, where the assertions are checked. `START` (after the inlined
//! initialization) jumps to the blocks of the initial locations. GUI effects
//! compile to no-ops: control flow comes from the graph alone.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::app::{AppSpec, BoolExpr, EventId, IntExpr, Stmt, Valuation};
use crate::eefg::{quote, Eefg, EventSequence, LocationId};

pub type BlockId = usize;

pub const START: BlockId = 0;
pub const EXIT: BlockId = 1;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProgramError {
    #[error("event {0} of the graph has no handler in the application")]
    AlphabetMismatch(String),
    #[error("unknown event {0}")]
    UnknownEvent(String),
    #[error("trace does not belong to this program: {0}")]
    ForeignTrace(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BlockBody {
    Start,
    Exit,
    Handler {
        location: LocationId,
        event: EventId,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub name: String,
    pub body: BlockBody,
    /// Ordered by (event, location); `EXIT` last.
    pub successors: Vec<BlockId>,
}

impl Block {
    pub fn event(&self) -> Option<&EventId> {
        match &self.body {
            BlockBody::Handler { event, .. } => Some(event),
            _ => None,
        }
    }

    pub fn location(&self) -> Option<&LocationId> {
        match &self.body {
            BlockBody::Handler { location, .. } => Some(location),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoopProgram {
    blocks: Vec<Block>,
    loc_block: BTreeMap<LocationId, BlockId>,
    alphabet: BTreeSet<EventId>,
}

/// One step of a program trace: the block just executed and the valuation
/// after it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub block: BlockId,
    pub valuation: Valuation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgramTrace {
    pub steps: Vec<TraceStep>,
}

impl ProgramTrace {
    pub fn final_valuation(&self) -> &Valuation {
        &self.steps.last().expect("traces are never empty").valuation
    }

    pub fn to_json(&self, p: &LoopProgram, app: &AppSpec) -> serde_json::Value {
        #[derive(Serialize)]
        struct Step<'a> {
            block: &'a str,
            valuation: BTreeMap<&'a str, i64>,
        }
        let steps: Vec<Step<'_>> = self
            .steps
            .iter()
            .map(|s| Step {
                block: &p.blocks[s.block].name,
                valuation: app
                    .variables()
                    .iter()
                    .zip(&s.valuation)
                    .map(|(d, v)| (d.name.as_str(), *v))
                    .collect(),
            })
            .collect();
        serde_json::to_value(steps).expect("trace serializes")
    }
}

impl LoopProgram {
    pub fn build(app: &AppSpec, g: &Eefg) -> Result<Self, ProgramError> {
        for e in g.alphabet() {
            if !app.has_event(e) {
                return Err(ProgramError::AlphabetMismatch(e.clone()));
            }
        }
        let mut blocks = vec![
            Block {
                name: "START".into(),
                body: BlockBody::Start,
                successors: Vec::new(),
            },
            Block {
                name: "EXIT".into(),
                body: BlockBody::Exit,
                successors: Vec::new(),
            },
        ];
        let mut loc_block = BTreeMap::new();
        for (loc, event) in g.locations() {
            loc_block.insert(loc.clone(), blocks.len());
            blocks.push(Block {
                name: loc.clone(),
                body: BlockBody::Handler {
                    location: loc.clone(),
                    event: event.clone(),
                },
                successors: Vec::new(),
            });
        }
        let order = |locs: &mut Vec<&LocationId>| {
            locs.sort_by(|a, b| (g.label(a), *a).cmp(&(g.label(b), *b)));
        };
        let mut init: Vec<&LocationId> = g.initial().iter().collect();
        order(&mut init);
        blocks[START].successors = init.iter().map(|l| loc_block[*l]).collect();
        for loc in g.locations().keys() {
            let mut succ: Vec<&LocationId> = g.successors(loc).collect();
            order(&mut succ);
            let mut ids: Vec<BlockId> = succ.iter().map(|l| loc_block[*l]).collect();
            ids.push(EXIT);
            blocks[loc_block[loc]].successors = ids;
        }
        Ok(Self {
            blocks,
            loc_block,
            alphabet: g.alphabet().clone(),
        })
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block(&self, id: BlockId) -> &Block {
        &self.blocks[id]
    }

    pub fn block_of_location(&self, location: &str) -> Option<BlockId> {
        self.loc_block.get(location).copied()
    }

    pub fn alphabet(&self) -> &BTreeSet<EventId> {
        &self.alphabet
    }

    /// Handler blocks only.
    pub fn handler_blocks(&self) -> impl Iterator<Item = (BlockId, &Block)> {
        self.blocks.iter().enumerate().skip(2)
    }

    /// The feasible trace of a possible sequence, or `None` when `s` is not
    /// the labeling of any program path. Among several location paths the
    /// lexicographically least one (by location id) is used.
    pub fn trace_of_sequence(
        &self,
        app: &AppSpec,
        s: &EventSequence,
    ) -> Result<Option<ProgramTrace>, ProgramError> {
        for e in s.events() {
            if !self.alphabet.contains(e) || !app.has_event(e) {
                return Err(ProgramError::UnknownEvent(e.clone()));
            }
        }
        let Some(path) = self.least_path(s) else {
            return Ok(None);
        };
        let mut valuation = app.initial_valuation();
        let mut steps = vec![TraceStep {
            block: START,
            valuation: valuation.clone(),
        }];
        for b in path {
            let event = self.blocks[b].event().expect("handler block");
            app.exec_on_valuation(app.handler(event).expect("checked above"), &mut valuation);
            steps.push(TraceStep {
                block: b,
                valuation: valuation.clone(),
            });
        }
        steps.push(TraceStep {
            block: EXIT,
            valuation,
        });
        Ok(Some(ProgramTrace { steps }))
    }

    fn least_path(&self, s: &EventSequence) -> Option<Vec<BlockId>> {
        let n = s.len();
        if n == 0 {
            return Some(Vec::new());
        }
        let labeled = |b: BlockId, i: usize| self.blocks[b].event() == Some(&s.events()[i]);
        // alive[i]: blocks at position i from which the rest of s can be read.
        let mut alive: Vec<BTreeSet<BlockId>> = vec![BTreeSet::new(); n];
        alive[n - 1] = (2..self.blocks.len())
            .filter(|&b| labeled(b, n - 1))
            .collect();
        for i in (0..n - 1).rev() {
            alive[i] = (2..self.blocks.len())
                .filter(|&b| {
                    labeled(b, i)
                        && self.blocks[b]
                            .successors
                            .iter()
                            .any(|t| alive[i + 1].contains(t))
                })
                .collect();
        }
        let by_name = |c: &BlockId| self.blocks[*c].name.clone();
        let mut path = Vec::with_capacity(n);
        let mut current = START;
        for layer in &alive {
            let next = self.blocks[current]
                .successors
                .iter()
                .filter(|b| layer.contains(b))
                .min_by_key(|b| by_name(b))?;
            path.push(*next);
            current = *next;
        }
        Some(path)
    }

    /// Label sequence of a trace's handler blocks.
    pub fn trace_to_event_sequence(&self, t: &ProgramTrace) -> Result<EventSequence, ProgramError> {
        let mut prev: Option<BlockId> = None;
        let mut out = EventSequence::empty();
        for step in &t.steps {
            let block = self
                .blocks
                .get(step.block)
                .ok_or_else(|| ProgramError::ForeignTrace(format!("no block {}", step.block)))?;
            match prev {
                None if step.block != START => {
                    return Err(ProgramError::ForeignTrace(
                        "trace does not start at START".into(),
                    ))
                }
                // START -> EXIT is the degenerate path of the empty sequence.
                Some(p)
                    if !self.blocks[p].successors.contains(&step.block)
                        && !(p == START && step.block == EXIT) =>
                {
                    return Err(ProgramError::ForeignTrace(format!(
                        "no jump from {} to {}",
                        self.blocks[p].name, block.name
                    )))
                }
                _ => {}
            }
            if let Some(e) = block.event() {
                out.push(e.clone());
            }
            prev = Some(step.block);
        }
        Ok(out)
    }

    /// Event sequences of all complete control paths with at most `k` handler
    /// blocks. The empty sequence is always included.
    pub fn program_sequences(&self, k: usize) -> BTreeSet<EventSequence> {
        let mut out = BTreeSet::new();
        out.insert(EventSequence::empty());
        let mut frontier: BTreeMap<EventSequence, BTreeSet<BlockId>> = BTreeMap::new();
        frontier.insert(EventSequence::empty(), BTreeSet::from([START]));
        for _ in 0..k {
            let mut next: BTreeMap<EventSequence, BTreeSet<BlockId>> = BTreeMap::new();
            for (word, blocks) in &frontier {
                for b in blocks {
                    for &t in &self.blocks[*b].successors {
                        if let Some(e) = self.blocks[t].event() {
                            next.entry(word.with(e.clone())).or_default().insert(t);
                        }
                    }
                }
            }
            // Every handler block may jump to EXIT, so each prefix completes.
            out.extend(next.keys().cloned());
            frontier = next;
        }
        out
    }

    /// Human-readable listing in the style of an intermediate verification
    /// language. Debug output only.
    pub fn dump(&self, app: &AppSpec) -> String {
        let mut out = String::from("procedure EFG_Procedure()\n{\n");
        let names: Vec<String> = app.variables().iter().map(|v| v.name.clone()).collect();
        let targets = |ids: &[BlockId]| -> String {
            ids.iter()
                .map(|b| self.blocks[*b].name.clone())
                .collect::<Vec<_>>()
                .join(", ")
        };
        let _ = writeln!(out, "  START:");
        for v in app.variables() {
            let _ = writeln!(
                out,
                "    {} := {};  // domain [{}, {}]",
                v.name, v.init, v.lo, v.hi
            );
        }
        if self.blocks[START].successors.is_empty() {
            let _ = writeln!(out, "    return;");
        } else {
            let _ = writeln!(out, "    goto {};", targets(&self.blocks[START].successors));
        }
        for (_, block) in self.handler_blocks() {
            let event = block.event().expect("handler block");
            let _ = writeln!(out, "\n  {}: // handler of event {}", block.name, event);
            print_stmts(&mut out, app, &names, app.handler(event).unwrap_or(&[]), 4);
            let _ = writeln!(out, "    goto {};", targets(&block.successors));
        }
        let _ = writeln!(out, "\n  EXIT:");
        for a in app.assertions() {
            let _ = writeln!(
                out,
                "    assert ({});  // {}",
                show_bool(&a.expr, &names),
                a.id
            );
        }
        let _ = writeln!(out, "    return;\n}}");
        out
    }

    /// Control flow graph in Graphviz form; jumps to EXIT are dashed.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph program {\n  node [shape=box];\n");
        for block in &self.blocks {
            let label = match &block.body {
                BlockBody::Handler { location, event } if location != event => {
                    format!("{event}\\n{location}")
                }
                BlockBody::Handler { event, .. } => event.clone(),
                _ => block.name.clone(),
            };
            let _ = writeln!(out, "  {} [label={}];", quote(&block.name), quote(&label));
        }
        for block in &self.blocks {
            for &t in &block.successors {
                let style = if t == EXIT { " [style=dashed]" } else { "" };
                let _ = writeln!(
                    out,
                    "  {} -> {}{};",
                    quote(&block.name),
                    quote(&self.blocks[t].name),
                    style
                );
            }
        }
        out.push_str("}\n");
        out
    }
}

pub fn build_message_loop(app: &AppSpec, g: &Eefg) -> Result<LoopProgram, ProgramError> {
    LoopProgram::build(app, g)
}

fn print_stmts(out: &mut String, app: &AppSpec, names: &[String], body: &[Stmt], indent: usize) {
    let pad = " ".repeat(indent);
    for s in body {
        match s {
            Stmt::Assign { var, expr } => {
                let _ = writeln!(out, "{pad}{} := {};", names[*var], show_int(expr, names));
            }
            Stmt::If {
                cond,
                then,
                otherwise,
            } => {
                let _ = writeln!(out, "{pad}if ({}) {{", show_bool(cond, names));
                print_stmts(out, app, names, then, indent + 2);
                if !otherwise.is_empty() {
                    let _ = writeln!(out, "{pad}}} else {{");
                    print_stmts(out, app, names, otherwise, indent + 2);
                }
                let _ = writeln!(out, "{pad}}}");
            }
            Stmt::SetEnabled { widget, value } => {
                let _ = writeln!(
                    out,
                    "{pad}call {}$setEnabled({value}); // no-op",
                    app.widgets()[*widget].id
                );
            }
            Stmt::SetVisible { window, value } => {
                let _ = writeln!(
                    out,
                    "{pad}call {}$setVisible({value}); // no-op",
                    app.windows()[*window].id
                );
            }
        }
    }
}

fn show_int(e: &IntExpr, names: &[String]) -> String {
    let list = |es: &[IntExpr], sep: &str| {
        es.iter()
            .map(|e| show_int(e, names))
            .collect::<Vec<_>>()
            .join(sep)
    };
    match e {
        IntExpr::Const(c) => c.to_string(),
        IntExpr::Var(i) => names[*i].clone(),
        IntExpr::Neg(a) => format!("-({})", show_int(a, names)),
        IntExpr::Add(es) => format!("({})", list(es, " + ")),
        IntExpr::Sub(a, b) => format!("({} - {})", show_int(a, names), show_int(b, names)),
        IntExpr::Mul(es) => format!("({})", list(es, " * ")),
    }
}

fn show_bool(e: &BoolExpr, names: &[String]) -> String {
    let list = |es: &[BoolExpr], sep: &str| {
        es.iter()
            .map(|e| show_bool(e, names))
            .collect::<Vec<_>>()
            .join(sep)
    };
    match e {
        BoolExpr::Cmp(op, a, b) => format!(
            "{} {} {}",
            show_int(a, names),
            op.symbol(),
            show_int(b, names)
        ),
        BoolExpr::And(es) => format!("({})", list(es, " && ")),
        BoolExpr::Or(es) => format!("({})", list(es, " || ")),
        BoolExpr::Not(a) => format!("!({})", show_bool(a, names)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::app::GuiEffects;
    use crate::eefg::seq;

    fn app() -> AppSpec {
        AppSpec::parse(include_str!("../../../models/example_app.json")).unwrap()
    }

    fn efg() -> Eefg {
        Eefg::parse(include_str!("../../../models/example_efg.json")).unwrap()
    }

    fn refined() -> Eefg {
        Eefg::parse(include_str!("../../../models/example_refined_efg.json")).unwrap()
    }

    fn succ_names(p: &LoopProgram, b: BlockId) -> Vec<&str> {
        p.block(b)
            .successors
            .iter()
            .map(|t| p.block(*t).name.as_str())
            .collect()
    }

    #[test]
    fn example_program_shape() {
        let p = build_message_loop(&app(), &efg()).unwrap();
        assert_eq!(p.blocks().len(), 6);
        assert_eq!(succ_names(&p, START), ["e1", "e2", "e3"]);
        assert!(p.block(EXIT).successors.is_empty());
        let e3 = p.block_of_location("e3").unwrap();
        assert_eq!(succ_names(&p, e3), ["e4", "EXIT"]);
        let e4 = p.block_of_location("e4").unwrap();
        assert_eq!(succ_names(&p, e4), ["e1", "e2", "e3", "EXIT"]);
    }

    #[test]
    fn empty_graph_gives_degenerate_program() {
        let p = build_message_loop(&app(), &Eefg::empty()).unwrap();
        assert_eq!(p.blocks().len(), 2);
        assert!(p.block(START).successors.is_empty());
        assert_eq!(
            p.program_sequences(4),
            BTreeSet::from([EventSequence::empty()])
        );
    }

    #[test]
    fn refined_graph_program_has_four_e2_blocks() {
        let p = build_message_loop(&app(), &refined()).unwrap();
        assert_eq!(p.blocks().len(), 9);
        let e2_blocks = p
            .handler_blocks()
            .filter(|(_, b)| b.event().map(String::as_str) == Some("e2"))
            .count();
        assert_eq!(e2_blocks, 4);
    }

    #[test]
    fn alphabet_mismatch_is_rejected() {
        let g = Eefg::parse(r#"{"locations":[{"id":"l","event":"zz"}],"initial":["l"]}"#).unwrap();
        assert_eq!(
            build_message_loop(&app(), &g),
            Err(ProgramError::AlphabetMismatch("zz".into()))
        );
    }

    #[test]
    fn trace_of_worked_counterexample() {
        let a = app();
        let p = build_message_loop(&a, &efg()).unwrap();
        let t = p
            .trace_of_sequence(&a, &seq(&["e1", "e2", "e2", "e2", "e3"]))
            .unwrap()
            .unwrap();
        assert_eq!(t.final_valuation(), &vec![7]);
        assert_eq!(t.steps.first().unwrap().block, START);
        assert_eq!(t.steps.last().unwrap().block, EXIT);
        assert_eq!(
            p.trace_to_event_sequence(&t).unwrap(),
            seq(&["e1", "e2", "e2", "e2", "e3"])
        );
        let vals: Vec<i64> = t.steps.iter().map(|s| s.valuation[0]).collect();
        assert_eq!(vals, [0, 1, 2, 4, 8, 7, 7]);
    }

    #[test]
    fn trace_of_empty_and_impossible_sequences() {
        let a = app();
        let p = build_message_loop(&a, &efg()).unwrap();
        let t = p
            .trace_of_sequence(&a, &EventSequence::empty())
            .unwrap()
            .unwrap();
        assert_eq!(
            t.steps.iter().map(|s| s.block).collect::<Vec<_>>(),
            [START, EXIT]
        );
        assert_eq!(t.final_valuation(), &vec![0]);
        assert_eq!(
            p.trace_to_event_sequence(&t).unwrap(),
            EventSequence::empty()
        );
        assert_eq!(p.trace_of_sequence(&a, &seq(&["e4"])).unwrap(), None);
        assert_eq!(
            p.trace_of_sequence(&a, &seq(&["e7"])),
            Err(ProgramError::UnknownEvent("e7".into()))
        );
    }

    #[test]
    fn trace_through_unrolled_copies_maps_to_labels() {
        let a = app();
        let p = build_message_loop(&a, &refined()).unwrap();
        let s = seq(&["e1", "e2", "e2", "e2", "e1"]);
        let t = p.trace_of_sequence(&a, &s).unwrap().unwrap();
        let names: Vec<&str> = t
            .steps
            .iter()
            .map(|st| p.block(st.block).name.as_str())
            .collect();
        assert_eq!(names, ["START", "e1", "e21", "e22", "e23", "e1", "EXIT"]);
        assert_eq!(p.trace_to_event_sequence(&t).unwrap(), s);
    }

    #[test]
    fn foreign_traces_are_rejected() {
        let a = app();
        let p = build_message_loop(&a, &efg()).unwrap();
        let bogus = ProgramTrace {
            steps: vec![
                TraceStep {
                    block: START,
                    valuation: vec![0],
                },
                TraceStep {
                    block: p.block_of_location("e4").unwrap(),
                    valuation: vec![1],
                },
            ],
        };
        assert!(matches!(
            p.trace_to_event_sequence(&bogus),
            Err(ProgramError::ForeignTrace(_))
        ));
        let out_of_range = ProgramTrace {
            steps: vec![TraceStep {
                block: 99,
                valuation: vec![0],
            }],
        };
        assert!(p.trace_to_event_sequence(&out_of_range).is_err());
    }

    #[test]
    fn program_sequences_match_graph_enumeration() {
        let p = build_message_loop(&app(), &efg()).unwrap();
        let one: BTreeSet<_> = [seq(&[]), seq(&["e1"]), seq(&["e2"]), seq(&["e3"])].into();
        assert_eq!(p.program_sequences(1), one);
        for k in 0..6 {
            assert_eq!(p.program_sequences(k), efg().enumerate_possible(k));
        }
        let q = build_message_loop(&app(), &refined()).unwrap();
        assert!(!q
            .program_sequences(5)
            .contains(&seq(&["e1", "e2", "e2", "e2", "e3"])));
    }

    #[test]
    fn trace_valuations_fold_handlers_without_gui() {
        let a = app();
        let g = efg();
        let p = build_message_loop(&a, &g).unwrap();
        for s in g.enumerate_possible(5) {
            let t = p.trace_of_sequence(&a, &s).unwrap().unwrap();
            let mut state = a.initial_state();
            for (i, e) in s.events().iter().enumerate() {
                state = a.exec_handler(e, &state, GuiEffects::Off).unwrap();
                assert_eq!(t.steps[i + 1].valuation, state.valuation);
            }
        }
    }

    #[test]
    fn dump_and_dot_mention_every_block() {
        let a = app();
        let p = build_message_loop(&a, &efg()).unwrap();
        let text = p.dump(&a);
        assert!(text.contains("goto e1, e2, e3;"));
        assert!(text.contains("x := (x * 2);"));
        assert!(text.contains("assert (x != 7);"));
        assert!(text.contains("call b3$setEnabled(false); // no-op"));
        let dot = p.to_dot();
        assert_eq!(dot.matches("[label=").count(), 6);
        assert_eq!(dot.matches("style=dashed").count(), 4);
    }
}
