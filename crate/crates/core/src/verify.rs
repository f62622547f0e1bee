//! The counterexample-guided verification loop: analyze the message-loop
//! program, replay counterexamples on the application, and refine the graph
//! until a verdict is reached.

use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::analysis::{run_static_analysis, AnalysisError, AnalysisLimits, UnknownReason, Verdict};
use crate::app::AppSpec;
use crate::eefg::{Eefg, EventSequence};
use crate::program::{build_message_loop, ProgramError};
use crate::refine::{refine_efg, RefineError, RefineMode};
use crate::replay::{replay, ReplayError, ReplayResult};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("iteration cap must be at least 1")]
    BadIterationCap,
    #[error("iteration {iteration}: building the program: {source}")]
    Program {
        iteration: usize,
        source: ProgramError,
    },
    #[error("iteration {iteration}: analysis: {source}")]
    Analysis {
        iteration: usize,
        source: AnalysisError,
    },
    #[error("iteration {iteration}: replaying {sequence}: {source}")]
    Replay {
        iteration: usize,
        sequence: EventSequence,
        source: ReplayError,
    },
    #[error("iteration {iteration}: refining with {sequence}: {source}")]
    Refine {
        iteration: usize,
        sequence: EventSequence,
        source: RefineError,
    },
    #[error("writing {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyConfig {
    pub max_iterations: usize,
    pub limits: AnalysisLimits,
    pub mode: RefineMode,
    /// Directory for per-iteration DOT dumps of the graph and program.
    pub dot_dir: Option<PathBuf>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            max_iterations: 10,
            limits: AnalysisLimits::default(),
            mode: RefineMode::Prefix,
            dot_dir: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    StateLimit,
    DepthLimit,
    DomainAnomaly,
    IterationCap,
}

impl From<UnknownReason> for StopReason {
    fn from(r: UnknownReason) -> Self {
        match r {
            UnknownReason::StateLimit => StopReason::StateLimit,
            UnknownReason::DepthLimit => StopReason::DepthLimit,
            UnknownReason::DomainAnomaly => StopReason::DomainAnomaly,
        }
    }
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StopReason::StateLimit => "state-limit",
            StopReason::DepthLimit => "depth-limit",
            StopReason::DomainAnomaly => "domain-anomaly",
            StopReason::IterationCap => "iteration-cap",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Success,
    Fail(EventSequence),
    Unknown(StopReason),
}

impl Outcome {
    pub fn kind(&self) -> &'static str {
        match self {
            Outcome::Success => "success",
            Outcome::Fail(_) => "fail",
            Outcome::Unknown(_) => "unknown",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IterationRecord {
    /// The graph analyzed in this iteration.
    pub efg: Eefg,
    pub verdict: &'static str,
    pub counterexample: Option<EventSequence>,
    pub replay: Option<ReplayResult>,
    pub states_explored: usize,
    pub elapsed_ms: u128,
}

impl IterationRecord {
    pub fn executable(&self) -> Option<bool> {
        self.replay.as_ref().map(|r| r.executable)
    }

    pub fn infeasible_prefix(&self) -> Option<&EventSequence> {
        self.replay
            .as_ref()
            .and_then(|r| r.infeasible_prefix.as_ref())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyReport {
    pub outcome: Outcome,
    pub iterations: Vec<IterationRecord>,
    pub final_efg: Eefg,
}

impl VerifyReport {
    /// Number of graph refinements performed.
    pub fn refinements(&self) -> usize {
        self.iterations
            .iter()
            .filter(|it| it.executable() == Some(false))
            .count()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let iterations: Vec<_> = self
            .iterations
            .iter()
            .map(|it| {
                json!({
                    "verdict": it.verdict,
                    "counterexample": it.counterexample,
                    "executable": it.executable(),
                    "infeasible_prefix": it.infeasible_prefix(),
                    "states_explored": it.states_explored,
                    "elapsed_ms": it.elapsed_ms,
                })
            })
            .collect();
        let (sequence, reason) = match &self.outcome {
            Outcome::Fail(s) => (Some(s), None),
            Outcome::Unknown(r) => (None, Some(r.to_string())),
            Outcome::Success => (None, None),
        };
        json!({
            "outcome": self.outcome.kind(),
            "sequence": sequence,
            "reason": reason,
            "refinements": self.refinements(),
            "iterations": iterations,
            "final_efg": self.final_efg.to_value(),
        })
    }
}

pub fn verify(app: &AppSpec, g: &Eefg, cfg: &VerifyConfig) -> Result<VerifyReport, VerifyError> {
    if cfg.max_iterations == 0 {
        return Err(VerifyError::BadIterationCap);
    }
    if let Some(dir) = &cfg.dot_dir {
        std::fs::create_dir_all(dir).map_err(|source| VerifyError::Io {
            path: dir.clone(),
            source,
        })?;
    }
    let mut efg = g.clone();
    let mut iterations = Vec::new();
    for iteration in 1..=cfg.max_iterations {
        let started = Instant::now();
        let program = build_message_loop(app, &efg)
            .map_err(|source| VerifyError::Program { iteration, source })?;
        if let Some(dir) = &cfg.dot_dir {
            write(dir.join(format!("iter{iteration}_efg.dot")), &efg.to_dot())?;
            write(
                dir.join(format!("iter{iteration}_program.dot")),
                &program.to_dot(),
            )?;
        }
        let analysis = run_static_analysis(&program, app, cfg.limits)
            .map_err(|source| VerifyError::Analysis { iteration, source })?;
        let mut record = IterationRecord {
            efg: efg.clone(),
            verdict: analysis.verdict.kind(),
            counterexample: None,
            replay: None,
            states_explored: analysis.metrics.states_explored,
            elapsed_ms: 0,
        };
        let outcome = match &analysis.verdict {
            Verdict::Safe => Some(Outcome::Success),
            Verdict::Unknown { reason, .. } => Some(Outcome::Unknown((*reason).into())),
            Verdict::Unsafe(cex) => {
                let sigma = cex.sequence.clone();
                let result = replay(app, &sigma).map_err(|source| VerifyError::Replay {
                    iteration,
                    sequence: sigma.clone(),
                    source,
                })?;
                record.counterexample = Some(sigma.clone());
                let outcome = if !result.executable {
                    let prefix = result
                        .infeasible_prefix
                        .clone()
                        .expect("non-executable replay has a prefix");
                    efg = refine_efg(&efg, &prefix, cfg.mode).map_err(|source| {
                        VerifyError::Refine {
                            iteration,
                            sequence: prefix,
                            source,
                        }
                    })?;
                    None
                } else if result.violates() {
                    Some(Outcome::Fail(sigma))
                } else {
                    // Executable but concretely safe: an artifact of the
                    // saturating abstraction of the domain.
                    Some(Outcome::Unknown(StopReason::DomainAnomaly))
                };
                record.replay = Some(result);
                outcome
            }
        };
        record.elapsed_ms = started.elapsed().as_millis();
        iterations.push(record);
        if let Some(outcome) = outcome {
            return Ok(VerifyReport {
                outcome,
                iterations,
                final_efg: efg,
            });
        }
    }
    Ok(VerifyReport {
        outcome: Outcome::Unknown(StopReason::IterationCap),
        iterations,
        final_efg: efg,
    })
}

fn write(path: PathBuf, contents: &str) -> Result<(), VerifyError> {
    std::fs::write(&path, contents).map_err(|source| VerifyError::Io { path, source })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eefg::seq;

    fn app(assertion: &str) -> AppSpec {
        AppSpec::parse(include_str!("../../../models/example_app.json"))
            .unwrap()
            .restrict_assertions(&[assertion])
            .unwrap()
    }

    fn graph() -> Eefg {
        Eefg::parse(include_str!("../../../models/example_efg.json")).unwrap()
    }

    #[test]
    fn executable_counterexample_fails_immediately() {
        let report = verify(&app("not3"), &graph(), &VerifyConfig::default()).unwrap();
        assert_eq!(
            report.outcome,
            Outcome::Fail(seq(&["e1", "e2", "e2", "e3"]))
        );
        assert_eq!(report.iterations.len(), 1);
        assert_eq!(report.refinements(), 0);
    }

    #[test]
    fn unreachable_value_is_safe() {
        let report = verify(&app("not5"), &graph(), &VerifyConfig::default()).unwrap();
        assert_eq!(report.outcome, Outcome::Success);
        assert_eq!(report.iterations.len(), 1);
    }

    #[test]
    fn seven_refines_until_the_cap() {
        let report = verify(&app("not7"), &graph(), &VerifyConfig::default()).unwrap();
        assert_eq!(report.outcome, Outcome::Unknown(StopReason::IterationCap));
        assert_eq!(report.iterations.len(), 10);
        let first = &report.iterations[0];
        assert_eq!(
            first.counterexample,
            Some(seq(&["e1", "e2", "e2", "e2", "e3"]))
        );
        assert_eq!(first.infeasible_prefix(), first.counterexample.as_ref());
        assert!(report
            .iterations
            .iter()
            .all(|it| it.executable() == Some(false)));
        assert_eq!(
            report.iterations[1].counterexample,
            Some(seq(&["e1", "e1", "e2", "e2", "e2", "e3"]))
        );
    }

    #[test]
    fn zero_cap_is_rejected() {
        let cfg = VerifyConfig {
            max_iterations: 0,
            ..VerifyConfig::default()
        };
        assert!(matches!(
            verify(&app("not3"), &graph(), &cfg),
            Err(VerifyError::BadIterationCap)
        ));
    }

    #[test]
    fn report_json_shape() {
        let report = verify(&app("not3"), &graph(), &VerifyConfig::default()).unwrap();
        let v = report.to_json();
        assert_eq!(v["outcome"], "fail");
        assert_eq!(v["sequence"], json!(["e1", "e2", "e2", "e3"]));
        assert_eq!(v["iterations"][0]["executable"], true);
        assert_eq!(
            v["iterations"][0]["infeasible_prefix"],
            serde_json::Value::Null
        );
        assert!(v["final_efg"]["locations"].is_array());
    }

    #[test]
    fn dot_files_are_written_per_iteration() {
        let dir = std::env::temp_dir().join(format!("efgcheck-dot-{}", std::process::id()));
        let cfg = VerifyConfig {
            max_iterations: 2,
            dot_dir: Some(dir.clone()),
            ..VerifyConfig::default()
        };
        verify(&app("not7"), &graph(), &cfg).unwrap();
        for name in ["iter1_efg.dot", "iter1_program.dot", "iter2_efg.dot"] {
            assert!(dir.join(name).exists(), "{name}");
        }
        std::fs::remove_dir_all(dir).unwrap();
    }
}
