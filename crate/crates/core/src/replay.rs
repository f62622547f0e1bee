//! Concrete replay of event sequences against the simulated GUI.
//!
//! An event is executable when its widget is enabled, the widget's window
//! is visible and no *other* modal window is visible. Only one modal window
//! may be visible at a time.

use serde::Serialize;
use thiserror::Error;

use crate::app::{AppError, AppSpec, ConcreteState, GuiEffects, StateView};
use crate::eefg::EventSequence;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReplayError {
    #[error("unknown event {0}")]
    UnknownEvent(String),
    #[error("step {step} ({event}) leaves more than one modal window visible")]
    ModalStacking { step: usize, event: String },
}

impl From<AppError> for ReplayError {
    fn from(e: AppError) -> Self {
        match e {
            AppError::UnknownEvent(ev) => ReplayError::UnknownEvent(ev),
            other => unreachable!("handler execution only fails on unknown events: {other}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayResult {
    pub executable: bool,
    /// Prefix ending in the first event that could not fire.
    pub infeasible_prefix: Option<EventSequence>,
    /// `(step, assertion ids)`; step 0 is the initial state, step `i` the
    /// state after the `i`-th event.
    pub violated: Vec<(usize, Vec<String>)>,
    pub final_state: ConcreteState,
}

impl ReplayResult {
    pub fn violates(&self) -> bool {
        !self.violated.is_empty()
    }

    pub fn to_json(&self, app: &AppSpec) -> serde_json::Value {
        #[derive(Serialize)]
        struct Out<'a> {
            executable: bool,
            infeasible_prefix: Option<&'a EventSequence>,
            violated: Vec<Violation<'a>>,
            final_state: StateView,
        }
        #[derive(Serialize)]
        struct Violation<'a> {
            step: usize,
            assertions: &'a [String],
        }
        serde_json::to_value(Out {
            executable: self.executable,
            infeasible_prefix: self.infeasible_prefix.as_ref(),
            violated: self
                .violated
                .iter()
                .map(|(step, ids)| Violation {
                    step: *step,
                    assertions: ids,
                })
                .collect(),
            final_state: app.view(&self.final_state),
        })
        .expect("replay result serializes")
    }
}

pub fn is_executable(
    app: &AppSpec,
    state: &ConcreteState,
    event: &str,
) -> Result<bool, ReplayError> {
    let index = app
        .widget_index(event)
        .ok_or_else(|| ReplayError::UnknownEvent(event.to_string()))?;
    let window = app.widgets()[index].window;
    let blocked_by_modal = app
        .windows()
        .iter()
        .enumerate()
        .any(|(i, w)| i != window && w.modal && state.visible[i]);
    Ok(state.enabled[index] && state.visible[window] && !blocked_by_modal)
}

/// Fire one event with GUI effects on. Returns `None` when the event is not
/// executable in `state`.
pub fn step(
    app: &AppSpec,
    state: &ConcreteState,
    event: &str,
    index: usize,
) -> Result<Option<ConcreteState>, ReplayError> {
    if !is_executable(app, state, event)? {
        return Ok(None);
    }
    let next = app.exec_handler(event, state, GuiEffects::On)?;
    let modal_open = app
        .windows()
        .iter()
        .zip(&next.visible)
        .filter(|(w, v)| w.modal && **v)
        .count();
    if modal_open > 1 {
        return Err(ReplayError::ModalStacking {
            step: index,
            event: event.to_string(),
        });
    }
    Ok(Some(next))
}

/// Replay `s` from a fresh initial state.
pub fn replay(app: &AppSpec, s: &EventSequence) -> Result<ReplayResult, ReplayError> {
    for e in s.events() {
        if !app.has_event(e) {
            return Err(ReplayError::UnknownEvent(e.clone()));
        }
    }
    let mut state = app.initial_state();
    let mut violated = Vec::new();
    let initial = app.violated(&state.valuation);
    if !initial.is_empty() {
        violated.push((0, initial));
    }
    for (i, e) in s.events().iter().enumerate() {
        match step(app, &state, e, i + 1)? {
            Some(next) => state = next,
            None => {
                return Ok(ReplayResult {
                    executable: false,
                    infeasible_prefix: Some(s.prefix(i + 1)),
                    violated,
                    final_state: state,
                })
            }
        }
        let ids = app.violated(&state.valuation);
        if !ids.is_empty() {
            violated.push((i + 1, ids));
        }
    }
    Ok(ReplayResult {
        executable: true,
        infeasible_prefix: None,
        violated,
        final_state: state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eefg::seq;

    fn example() -> AppSpec {
        AppSpec::parse(include_str!("../../../models/example_app.json")).unwrap()
    }

    fn run(app: &AppSpec, events: &[&str]) -> ConcreteState {
        replay(app, &seq(events)).unwrap().final_state
    }

    #[test]
    fn executability_follows_dialog_modality() {
        let app = example();
        let init = app.initial_state();
        assert!(!is_executable(&app, &init, "e4").unwrap());
        assert!(is_executable(&app, &init, "e1").unwrap());
        let dialog = run(&app, &["e3"]);
        assert!(!is_executable(&app, &dialog, "e1").unwrap());
        assert!(is_executable(&app, &dialog, "e4").unwrap());
        let closed = run(&app, &["e3", "e4"]);
        assert!(is_executable(&app, &closed, "e1").unwrap());
        assert_eq!(
            is_executable(&app, &init, "nope"),
            Err(ReplayError::UnknownEvent("nope".into()))
        );
    }

    #[test]
    fn third_doubling_blocks_e3() {
        let app = example().restrict_assertions(&["not7"]).unwrap();
        let s = seq(&["e1", "e2", "e2", "e2", "e3"]);
        let r = replay(&app, &s).unwrap();
        assert!(!r.executable);
        assert_eq!(r.infeasible_prefix, Some(s));
        assert!(r.violated.is_empty());
        assert_eq!(app.value(&r.final_state, "x"), Some(8));
    }

    #[test]
    fn short_doubling_sequence_reaches_three() {
        let app = example().restrict_assertions(&["not3"]).unwrap();
        let r = replay(&app, &seq(&["e1", "e2", "e2", "e3"])).unwrap();
        assert!(r.executable);
        assert_eq!(r.infeasible_prefix, None);
        assert_eq!(r.violated, vec![(4, vec!["not3".to_string()])]);
        assert_eq!(app.value(&r.final_state, "x"), Some(3));
        assert!(app.view(&r.final_state).visible["Dialog"]);
    }

    #[test]
    fn empty_sequence_replays_to_initial_state() {
        let app = example();
        let r = replay(&app, &EventSequence::empty()).unwrap();
        assert!(r.executable && r.violated.is_empty());
        assert_eq!(r.final_state, app.initial_state());
    }

    #[test]
    fn prefix_stops_at_first_blocked_event() {
        let app = example();
        let r = replay(&app, &seq(&["e4", "e1", "e2"])).unwrap();
        assert_eq!(r.infeasible_prefix, Some(seq(&["e4"])));
        let r = replay(&app, &seq(&["e3", "e1", "e4"])).unwrap();
        assert_eq!(r.infeasible_prefix, Some(seq(&["e3", "e1"])));
    }

    #[test]
    fn replays_are_independent() {
        let app = example();
        let s = seq(&["e1", "e2", "e2", "e3", "e4"]);
        let first = replay(&app, &s).unwrap();
        let _ = replay(&app, &seq(&["e2", "e2", "e2"])).unwrap();
        assert_eq!(replay(&app, &s).unwrap(), first);
    }

    #[test]
    fn opening_a_second_modal_window_is_an_error() {
        let app = AppSpec::parse(
            r#"{"windows":[
                {"id":"A","modal":true,"initially_visible":true,"widgets":[{"id":"a","event":"ea"}]},
                {"id":"B","modal":true,"initially_visible":false,"widgets":[{"id":"b","event":"eb"}]}],
              "handlers":{"ea":[{"gui":{"op":"set_visible","target":"B","value":true}}],"eb":[]}}"#,
        )
        .unwrap();
        assert_eq!(
            replay(&app, &seq(&["ea"])),
            Err(ReplayError::ModalStacking {
                step: 1,
                event: "ea".into()
            })
        );
    }

    #[test]
    fn json_shape() {
        let app = example();
        let r = replay(&app, &seq(&["e1", "e2", "e2", "e3"])).unwrap();
        let v = r.to_json(&app);
        assert_eq!(v["executable"], true);
        assert_eq!(v["infeasible_prefix"], serde_json::Value::Null);
        assert_eq!(v["final_state"]["valuation"]["x"], 3);
        assert_eq!(v["violated"][0]["step"], 4);
    }
}
