//! Seeded random instances and brute-force oracles shared by the
//! integration tests.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use efgcheck::app::{
    AppFile, AssertionFile, ExprFile, GuiOp, StmtFile, VarFile, WidgetFile, WindowFile,
};
use efgcheck::{AppSpec, Eefg, EventId, EventSequence, Valuation};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const EVENTS: [&str; 4] = ["a", "b", "c", "d"];
pub const VARS: [&str; 2] = ["x", "y"];
pub const DOMAIN: [i64; 2] = [-16, 16];
const CMPS: [&str; 6] = ["<", "<=", ">", ">=", "==", "!="];

pub struct Instance {
    pub seed: u64,
    pub app: AppSpec,
    pub efg: Eefg,
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn instance(seed: u64) -> Instance {
    let mut rng = rng(seed);
    let app = random_app(&mut rng);
    let efg = random_efg(&mut rng, &app.alphabet());
    Instance { seed, app, efg }
}

/// Up to four events on a main window, optionally with the last one on a
/// modal dialog; one or two variables over [-16, 16]; one assertion.
pub fn random_app(rng: &mut ChaCha8Rng) -> AppSpec {
    let n_events = rng.gen_range(1..=4);
    let n_vars = rng.gen_range(1..=2);
    let vars = &VARS[..n_vars];
    let dialog = n_events >= 2 && rng.gen_bool(0.5);

    let widget = |i: usize, rng: &mut ChaCha8Rng| WidgetFile {
        id: format!("w{i}"),
        event: EVENTS[i].to_string(),
        initially_enabled: rng.gen_bool(0.85),
    };
    let on_main = if dialog { n_events - 1 } else { n_events };
    let mut windows = vec![WindowFile {
        id: "Main".into(),
        modal: false,
        initially_visible: true,
        widgets: (0..on_main).map(|i| widget(i, rng)).collect(),
    }];
    if dialog {
        windows.push(WindowFile {
            id: "Dialog".into(),
            modal: true,
            initially_visible: false,
            widgets: vec![widget(n_events - 1, rng)],
        });
    }
    let widgets: Vec<String> = (0..n_events).map(|i| format!("w{i}")).collect();
    let window_ids: Vec<String> = windows.iter().map(|w| w.id.clone()).collect();

    let mut handlers = BTreeMap::new();
    for (i, event) in EVENTS[..n_events].iter().enumerate() {
        let n_stmts = rng.gen_range(1..=3);
        let mut body: Vec<StmtFile> = (0..n_stmts)
            .map(|_| random_stmt(rng, vars, &widgets, &window_ids, true))
            .collect();
        if dialog && i == n_events - 1 && rng.gen_bool(0.7) {
            body.push(gui(GuiOp::SetVisible, "Dialog", false));
        }
        if dialog && i + 2 == n_events && rng.gen_bool(0.7) {
            body.push(gui(GuiOp::SetVisible, "Dialog", true));
        }
        handlers.insert(event.to_string(), body);
    }

    let variables: Vec<VarFile> = vars
        .iter()
        .map(|v| VarFile {
            name: v.to_string(),
            init: rng.gen_range(-3..=3),
            domain: DOMAIN,
        })
        .collect();
    let mut file = AppFile {
        windows,
        variables,
        handlers,
        assertions: vec![],
    };
    let assertion = if rng.gen_bool(0.6) {
        reachable_disequality(rng, &file)
    } else {
        None
    };
    let assertion = assertion.unwrap_or_else(|| random_assertion(rng, &file.variables));
    file.assertions.push(assertion);
    AppSpec::from_file(file).expect("generated app is valid")
}

/// `v != c` where `c` is the value of `v` after a short random run of
/// handlers, provided it differs from the initial value.
fn reachable_disequality(rng: &mut ChaCha8Rng, file: &AppFile) -> Option<AssertionFile> {
    let app = AppSpec::from_file(file.clone()).expect("generated app is valid");
    let events: Vec<EventId> = app.alphabet().into_iter().collect();
    let len = rng.gen_range(1..=4);
    let run: EventSequence = (0..len)
        .map(|_| events.choose(rng).unwrap().clone())
        .collect();
    let vals = fold(&app, &run);
    let init = app.initial_valuation();
    let i = rng.gen_range(0..vals.len());
    (vals[i] != init[i]).then(|| AssertionFile {
        id: "prop".into(),
        expr: ExprFile::op(
            "!=",
            vec![
                ExprFile::var(&file.variables[i].name),
                ExprFile::constant(vals[i]),
            ],
        ),
    })
}

/// A `var op const` assertion, preferring ones that hold initially so that
/// counterexamples are not trivially empty.
fn random_assertion(rng: &mut ChaCha8Rng, variables: &[VarFile]) -> AssertionFile {
    let pick = |rng: &mut ChaCha8Rng| {
        let var = variables.choose(rng).unwrap();
        let op = if rng.gen_bool(0.5) {
            "!="
        } else {
            *CMPS.choose(rng).unwrap()
        };
        let c = rng.gen_range(-8..=8);
        let holds = match op {
            "<" => var.init < c,
            "<=" => var.init <= c,
            ">" => var.init > c,
            ">=" => var.init >= c,
            "==" => var.init == c,
            _ => var.init != c,
        };
        let expr = ExprFile::op(op, vec![ExprFile::var(&var.name), ExprFile::constant(c)]);
        (holds, expr)
    };
    let mut attempt = pick(rng);
    for _ in 0..20 {
        if attempt.0 {
            break;
        }
        attempt = pick(rng);
    }
    AssertionFile {
        id: "prop".into(),
        expr: attempt.1,
    }
}

fn gui(op: GuiOp, target: &str, value: bool) -> StmtFile {
    StmtFile::Gui {
        op,
        target: target.into(),
        value,
    }
}

fn random_stmt(
    rng: &mut ChaCha8Rng,
    vars: &[&str],
    widgets: &[String],
    windows: &[String],
    allow_if: bool,
) -> StmtFile {
    let roll = rng.gen_range(0..10);
    if allow_if && roll < 2 {
        let cond = ExprFile::op(
            CMPS.choose(rng).unwrap(),
            vec![
                ExprFile::var(*vars.choose(rng).unwrap()),
                ExprFile::constant(rng.gen_range(-6..=6)),
            ],
        );
        return StmtFile::If {
            cond,
            then: vec![random_stmt(rng, vars, widgets, windows, false)],
            otherwise: if rng.gen_bool(0.5) {
                vec![random_stmt(rng, vars, widgets, windows, false)]
            } else {
                vec![]
            },
        };
    }
    if roll < 4 {
        return if windows.len() > 1 && rng.gen_bool(0.5) {
            gui(GuiOp::SetVisible, &windows[1], rng.gen_bool(0.5))
        } else {
            gui(
                GuiOp::SetEnabled,
                widgets.choose(rng).unwrap(),
                rng.gen_bool(0.6),
            )
        };
    }
    StmtFile::Assign {
        var: vars.choose(rng).unwrap().to_string(),
        expr: random_int_expr(rng, vars),
    }
}

fn random_int_expr(rng: &mut ChaCha8Rng, vars: &[&str]) -> ExprFile {
    let var = |rng: &mut ChaCha8Rng| ExprFile::var(*vars.choose(rng).unwrap());
    match rng.gen_range(0..6) {
        0 => ExprFile::constant(rng.gen_range(-4..=4)),
        1 => {
            let a = var(rng);
            ExprFile::op("+", vec![a, ExprFile::constant(rng.gen_range(-3..=3))])
        }
        2 => {
            let a = var(rng);
            ExprFile::op("*", vec![a, ExprFile::constant(rng.gen_range(-2..=3))])
        }
        3 => {
            let (a, b) = (var(rng), var(rng));
            ExprFile::op("-", vec![a, b])
        }
        4 => {
            let (a, b) = (var(rng), var(rng));
            ExprFile::op("+", vec![a, b])
        }
        _ => var(rng),
    }
}

/// Up to six locations labeled with events of `alphabet`.
pub fn random_efg(rng: &mut ChaCha8Rng, alphabet: &BTreeSet<EventId>) -> Eefg {
    let events: Vec<&EventId> = alphabet.iter().collect();
    let n = rng.gen_range(1..=6);
    let locations: BTreeMap<String, EventId> = (0..n)
        .map(|i| (format!("l{i}"), events.choose(rng).unwrap().to_string()))
        .collect();
    let ids: Vec<String> = locations.keys().cloned().collect();
    let initial = ids.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect();
    let mut edges = BTreeSet::new();
    for a in &ids {
        for b in &ids {
            if rng.gen_bool(0.35) {
                edges.insert((a.clone(), b.clone()));
            }
        }
    }
    Eefg::new(locations, initial, edges, Some(alphabet.clone())).expect("generated graph is valid")
}

/// Valuation after running the handlers of `s` with GUI effects off.
pub fn fold(app: &AppSpec, s: &EventSequence) -> Valuation {
    let mut vals = app.initial_valuation();
    for e in s.events() {
        app.exec_on_valuation(app.handler(e).unwrap(), &mut vals);
    }
    vals
}

pub fn violates(app: &AppSpec, s: &EventSequence) -> bool {
    !app.violated(&fold(app, s)).is_empty()
}

/// Possible sequences of length at most `k` that violate an assertion.
pub fn violating(app: &AppSpec, g: &Eefg, k: usize) -> BTreeSet<EventSequence> {
    g.enumerate_possible(k)
        .into_iter()
        .filter(|s| violates(app, s))
        .collect()
}

/// Shortest violating possible sequence within length `k`, least in
/// lexicographic order among those of that length.
pub fn shortest_violation(app: &AppSpec, g: &Eefg, k: usize) -> Option<EventSequence> {
    violating(app, g, k)
        .into_iter()
        .min_by(|a, b| (a.len(), a).cmp(&(b.len(), b)))
}
