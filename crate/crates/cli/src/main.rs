use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use efgcheck::{
    build_message_loop, refine_efg, replay, rip_efg, run_static_analysis, verify, AnalysisLimits,
    AppSpec, Eefg, EventSequence, Outcome, RefineMode, Verdict, VerifyConfig,
};

const SUCCESS: u8 = 0;
const FAIL: u8 = 1;
const UNKNOWN: u8 = 2;
const INPUT_ERROR: u8 = 3;

#[derive(Parser)]
#[command(
    name = "efgcheck",
    version,
    about = "Verify GUI application models against event flow graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Infer an event flow graph by exploring the application.
    Rip {
        #[arg(long)]
        app: PathBuf,
        /// Exploration depth.
        #[arg(long, default_value_t = 2)]
        max_depth: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Print the message-loop program for an application and graph.
    Build {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        out: Output,
    },
    /// Run the static analysis once.
    Analyze {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        limits: Limits,
        #[command(flatten)]
        out: Output,
    },
    /// Replay an event sequence on the application.
    Replay {
        #[arg(long)]
        app: PathBuf,
        #[arg(long = "assert-id", num_args = 1..)]
        assert_ids: Vec<String>,
        /// Comma-separated events; empty for the empty sequence.
        #[arg(long = "seq", allow_hyphen_values = true)]
        sequence: String,
        #[command(flatten)]
        out: Output,
    },
    /// Remove a sequence from a graph.
    Refine {
        #[arg(long)]
        efg: PathBuf,
        #[arg(long = "seq")]
        sequence: String,
        #[arg(long, default_value = "prefix")]
        mode: RefineMode,
        #[command(flatten)]
        out: Output,
    },
    /// Run the full analyze, replay and refine loop.
    Verify {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        limits: Limits,
        #[arg(long, default_value_t = 10)]
        max_iters: usize,
        #[arg(long, default_value = "prefix")]
        mode: RefineMode,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Args)]
struct Input {
    #[arg(long)]
    app: PathBuf,
    #[arg(long)]
    efg: PathBuf,
    /// Check only these assertions.
    #[arg(long = "assert-id", num_args = 1..)]
    assert_ids: Vec<String>,
}

#[derive(Args)]
struct Limits {
    #[arg(long, default_value_t = AnalysisLimits::default().max_states)]
    max_states: usize,
    #[arg(long, default_value_t = AnalysisLimits::default().max_depth)]
    max_depth: usize,
}

impl Limits {
    fn get(&self) -> Result<AnalysisLimits> {
        Ok(AnalysisLimits::new(self.max_states, self.max_depth)?)
    }
}

#[derive(Args)]
struct Output {
    /// Also write the JSON result to this file.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Directory for Graphviz dumps.
    #[arg(long)]
    dot: Option<PathBuf>,
}

impl Output {
    fn emit(&self, text: &str) -> Result<()> {
        let mut stdout = std::io::stdout().lock();
        match writeln!(stdout, "{text}") {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e.into()),
            _ => {}
        }
        if let Some(path) = &self.report {
            write(path, &format!("{text}\n"))?;
        }
        Ok(())
    }

    fn emit_json(&self, value: &serde_json::Value) -> Result<()> {
        self.emit(&serde_json::to_string_pretty(value)?)
    }

    fn dot(&self, name: &str, contents: &str) -> Result<()> {
        if let Some(dir) = &self.dot {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            write(&dir.join(name), contents)?;
        }
        Ok(())
    }
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_app(path: &Path, assert_ids: &[String]) -> Result<AppSpec> {
    let app = AppSpec::parse(&read(path)?).with_context(|| format!("in {}", path.display()))?;
    if assert_ids.is_empty() {
        return Ok(app);
    }
    Ok(app.restrict_assertions(assert_ids)?)
}

fn load_efg(path: &Path) -> Result<Eefg> {
    Eefg::parse(&read(path)?).with_context(|| format!("in {}", path.display()))
}

fn load_inputs(input: &Input) -> Result<(AppSpec, Eefg)> {
    Ok((
        load_app(&input.app, &input.assert_ids)?,
        load_efg(&input.efg)?,
    ))
}

fn run(command: Command) -> Result<u8> {
    match command {
        Command::Rip {
            app,
            max_depth,
            out,
        } => {
            if max_depth == 0 {
                bail!("--max-depth must be positive");
            }
            let g = rip_efg(&load_app(&app, &[])?, max_depth);
            out.dot("efg.dot", &g.to_dot())?;
            out.emit(&g.to_json())?;
            Ok(SUCCESS)
        }
        Command::Build { input, out } => {
            let (app, g) = load_inputs(&input)?;
            let p = build_message_loop(&app, &g)?;
            out.dot("efg.dot", &g.to_dot())?;
            out.dot("program.dot", &p.to_dot())?;
            out.emit(p.dump(&app).trim_end())?;
            Ok(SUCCESS)
        }
        Command::Analyze { input, limits, out } => {
            let (app, g) = load_inputs(&input)?;
            let p = build_message_loop(&app, &g)?;
            out.dot("efg.dot", &g.to_dot())?;
            out.dot("program.dot", &p.to_dot())?;
            let analysis = run_static_analysis(&p, &app, limits.get()?)?;
            out.emit_json(&analysis.to_json(&p, &app))?;
            Ok(match analysis.verdict {
                Verdict::Safe => SUCCESS,
                Verdict::Unsafe(_) => FAIL,
                Verdict::Unknown { .. } => UNKNOWN,
            })
        }
        Command::Replay {
            app,
            assert_ids,
            sequence,
            out,
        } => {
            let app = load_app(&app, &assert_ids)?;
            let result = replay(&app, &EventSequence::parse_list(&sequence))?;
            out.emit_json(&result.to_json(&app))?;
            Ok(match (result.executable, result.violates()) {
                (false, _) => UNKNOWN,
                (true, true) => FAIL,
                (true, false) => SUCCESS,
            })
        }
        Command::Refine {
            efg,
            sequence,
            mode,
            out,
        } => {
            let g = load_efg(&efg)?;
            let refined = refine_efg(&g, &EventSequence::parse_list(&sequence), mode)?;
            out.dot("efg.dot", &refined.to_dot())?;
            out.emit(&refined.to_json())?;
            Ok(SUCCESS)
        }
        Command::Verify {
            input,
            limits,
            max_iters,
            mode,
            out,
        } => {
            let (app, g) = load_inputs(&input)?;
            let cfg = VerifyConfig {
                max_iterations: max_iters,
                limits: limits.get()?,
                mode,
                dot_dir: out.dot.clone(),
            };
            let report = verify(&app, &g, &cfg)?;
            out.emit_json(&report.to_json())?;
            Ok(match report.outcome {
                Outcome::Success => SUCCESS,
                Outcome::Fail(_) => FAIL,
                Outcome::Unknown(_) => UNKNOWN,
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { INPUT_ERROR } else { SUCCESS };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(INPUT_ERROR)
        }
    }
}
