//! Model checking of GUI applications over extended event flow graphs.
//!
//! An application model ([`AppSpec`]) and an event flow graph ([`Eefg`]) are
//! compiled into a message-loop program ([`LoopProgram`]). A breadth-first
//! explicit-state analysis finds the shortest assertion-violating event
//! sequence, which is replayed on the simulated GUI. Non-executable
//! counterexamples are removed from the graph by automata-based refinement
//! and the loop repeats ([`verify`]).

pub mod analysis;
pub mod app;
pub mod eefg;
pub mod nfa;
pub mod program;
pub mod refine;
pub mod replay;
pub mod rip;
pub mod verify;

pub use analysis::{
    run_static_analysis, Analysis, AnalysisError, AnalysisLimits, AnalysisMetrics, Counterexample,
    UnknownReason, Verdict,
};
pub use app::{AppError, AppSpec, ConcreteState, EventId, GuiEffects, Valuation};
pub use eefg::{Eefg, EefgError, EventSequence, LocationId};
pub use nfa::{efg_to_nfa, factor_automaton, prefix_automaton, Nfa, NfaError};
pub use program::{build_message_loop, LoopProgram, ProgramError, ProgramTrace, EXIT, START};
pub use refine::{refine_efg, RefineError, RefineMode};
pub use replay::{replay, ReplayError, ReplayResult};
pub use rip::{rip_efg, rip_with_witnesses, RipOutput};
pub use verify::{verify, Outcome, StopReason, VerifyConfig, VerifyError, VerifyReport};
