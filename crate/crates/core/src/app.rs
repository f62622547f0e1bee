//! Declarative GUI application model.
//!
//! An application is a set of windows holding widgets, a set of bounded
//! integer variables, one handler per event and a set of global assertions.
//! Handlers are written in a tiny imperative language (assignment, if/else
//! and two GUI effects). The concrete semantics defined here are shared by
//! the replayer, the ripper and the static analyzer.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type EventId = String;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AppError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("undeclared variable {0}")]
    UndeclaredVariable(String),
    #[error("unknown widget {0}")]
    UnknownWidget(String),
    #[error("unknown window {0}")]
    UnknownWindow(String),
    #[error("unknown event {0}")]
    UnknownEvent(String),
    #[error("unknown assertion {0}")]
    UnknownAssertion(String),
    #[error("duplicate {kind} id {id}")]
    Duplicate { kind: &'static str, id: String },
    #[error("event {event} is bound to widgets {first} and {second}")]
    EventBoundTwice {
        event: String,
        first: String,
        second: String,
    },
    #[error("handler for event {0} has no widget")]
    HandlerWithoutWidget(String),
    #[error("event {0} has no handler entry")]
    MissingHandler(String),
    #[error("variable {name}: domain [{lo}, {hi}] is empty or does not contain init {init}")]
    BadDomain {
        name: String,
        init: i64,
        lo: i64,
        hi: i64,
    },
    #[error("type error: {0}")]
    Type(String),
    #[error("more than one modal window is initially visible")]
    ModalStacking,
}

// ---------------------------------------------------------------------------
// File schema

/// JSON form of an application model, as read from disk.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct AppFile {
    #[serde(default)]
    pub windows: Vec<WindowFile>,
    #[serde(default)]
    pub variables: Vec<VarFile>,
    #[serde(default)]
    pub handlers: BTreeMap<String, Vec<StmtFile>>,
    #[serde(default)]
    pub assertions: Vec<AssertionFile>,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct WindowFile {
    pub id: String,
    #[serde(default)]
    pub modal: bool,
    #[serde(default = "default_true")]
    pub initially_visible: bool,
    #[serde(default)]
    pub widgets: Vec<WidgetFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct WidgetFile {
    pub id: String,
    pub event: String,
    #[serde(default = "default_true")]
    pub initially_enabled: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct VarFile {
    pub name: String,
    pub init: i64,
    /// Closed interval `[lo, hi]`.
    pub domain: [i64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct AssertionFile {
    pub id: String,
    pub expr: ExprFile,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum StmtFile {
    Assign {
        var: String,
        expr: ExprFile,
    },
    If {
        cond: ExprFile,
        #[serde(default)]
        then: Vec<StmtFile>,
        #[serde(default, rename = "else")]
        otherwise: Vec<StmtFile>,
    },
    Gui {
        op: GuiOp,
        target: String,
        value: bool,
    },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum GuiOp {
    SetEnabled,
    SetVisible,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(untagged)]
pub enum ExprFile {
    Const {
        #[serde(rename = "const")]
        value: i64,
    },
    Var {
        var: String,
    },
    Op {
        op: String,
        args: Vec<ExprFile>,
    },
}

impl ExprFile {
    pub fn constant(value: i64) -> Self {
        ExprFile::Const { value }
    }

    pub fn var(name: impl Into<String>) -> Self {
        ExprFile::Var { var: name.into() }
    }

    pub fn op(op: &str, args: Vec<ExprFile>) -> Self {
        ExprFile::Op {
            op: op.to_string(),
            args,
        }
    }
}

// ---------------------------------------------------------------------------
// Typed model

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    fn apply(self, a: i64, b: i64) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
        }
    }
}

/// Integer-valued expression. Variables are referenced by declaration index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IntExpr {
    Const(i64),
    Var(usize),
    Neg(Box<IntExpr>),
    Add(Vec<IntExpr>),
    Sub(Box<IntExpr>, Box<IntExpr>),
    Mul(Vec<IntExpr>),
}

/// Boolean-valued expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoolExpr {
    Cmp(CmpOp, Box<IntExpr>, Box<IntExpr>),
    And(Vec<BoolExpr>),
    Or(Vec<BoolExpr>),
    Not(Box<BoolExpr>),
}

impl IntExpr {
    /// Intermediate arithmetic saturates at the `i64` bounds; clamping into a
    /// variable's domain happens on assignment.
    pub fn eval(&self, vals: &[i64]) -> i64 {
        match self {
            IntExpr::Const(c) => *c,
            IntExpr::Var(i) => vals[*i],
            IntExpr::Neg(e) => e.eval(vals).saturating_neg(),
            IntExpr::Add(es) => es
                .iter()
                .fold(0i64, |acc, e| acc.saturating_add(e.eval(vals))),
            IntExpr::Sub(a, b) => a.eval(vals).saturating_sub(b.eval(vals)),
            IntExpr::Mul(es) => es
                .iter()
                .fold(1i64, |acc, e| acc.saturating_mul(e.eval(vals))),
        }
    }
}

impl BoolExpr {
    pub fn eval(&self, vals: &[i64]) -> bool {
        match self {
            BoolExpr::Cmp(op, a, b) => op.apply(a.eval(vals), b.eval(vals)),
            BoolExpr::And(es) => es.iter().all(|e| e.eval(vals)),
            BoolExpr::Or(es) => es.iter().any(|e| e.eval(vals)),
            BoolExpr::Not(e) => !e.eval(vals),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stmt {
    Assign {
        var: usize,
        expr: IntExpr,
    },
    If {
        cond: BoolExpr,
        then: Vec<Stmt>,
        otherwise: Vec<Stmt>,
    },
    SetEnabled {
        widget: usize,
        value: bool,
    },
    SetVisible {
        window: usize,
        value: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowSpec {
    pub id: String,
    pub modal: bool,
    pub initially_visible: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WidgetSpec {
    pub id: String,
    pub event: EventId,
    pub window: usize,
    pub initially_enabled: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarDecl {
    pub name: String,
    pub init: i64,
    pub lo: i64,
    pub hi: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assertion {
    pub id: String,
    pub expr: BoolExpr,
}

/// Whether GUI-effect statements take effect while a handler runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuiEffects {
    On,
    Off,
}

/// A validated application model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AppSpec {
    windows: Vec<WindowSpec>,
    widgets: Vec<WidgetSpec>,
    variables: Vec<VarDecl>,
    /// event -> (widget index, handler body)
    events: BTreeMap<EventId, (usize, Vec<Stmt>)>,
    assertions: Vec<Assertion>,
    file: AppFile,
}

/// Variable valuation, indexed by declaration order.
pub type Valuation = Vec<i64>;

/// Concrete state of the simulated application: valuation plus GUI state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConcreteState {
    pub valuation: Valuation,
    /// Indexed like [`AppSpec::widgets`].
    pub enabled: Vec<bool>,
    /// Indexed like [`AppSpec::windows`].
    pub visible: Vec<bool>,
}

/// Name-keyed view of a [`ConcreteState`], used for JSON output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateView {
    pub valuation: BTreeMap<String, i64>,
    pub enabled: BTreeMap<String, bool>,
    pub visible: BTreeMap<String, bool>,
}

impl AppSpec {
    pub fn parse(text: &str) -> Result<Self, AppError> {
        let file: AppFile = serde_json::from_str(text).map_err(|e| AppError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        Self::from_file(file)
    }

    pub fn from_file(file: AppFile) -> Result<Self, AppError> {
        Builder::default().build(file)
    }

    pub fn file(&self) -> &AppFile {
        &self.file
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.file).expect("app file serializes")
    }

    pub fn windows(&self) -> &[WindowSpec] {
        &self.windows
    }

    pub fn widgets(&self) -> &[WidgetSpec] {
        &self.widgets
    }

    pub fn variables(&self) -> &[VarDecl] {
        &self.variables
    }

    pub fn assertions(&self) -> &[Assertion] {
        &self.assertions
    }

    pub fn alphabet(&self) -> BTreeSet<EventId> {
        self.events.keys().cloned().collect()
    }

    pub fn has_event(&self, event: &str) -> bool {
        self.events.contains_key(event)
    }

    pub fn handler(&self, event: &str) -> Option<&[Stmt]> {
        self.events.get(event).map(|(_, body)| body.as_slice())
    }

    pub fn widget_index(&self, event: &str) -> Option<usize> {
        self.events.get(event).map(|(w, _)| *w)
    }

    pub fn widget_of(&self, event: &str) -> Option<&WidgetSpec> {
        self.events.get(event).map(|(w, _)| &self.widgets[*w])
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    /// Keep only the named assertions.
    pub fn restrict_assertions<S: AsRef<str>>(&self, ids: &[S]) -> Result<AppSpec, AppError> {
        for id in ids {
            if !self.assertions.iter().any(|a| a.id == id.as_ref()) {
                return Err(AppError::UnknownAssertion(id.as_ref().to_string()));
            }
        }
        let keep = |id: &str| ids.iter().any(|k| k.as_ref() == id);
        let mut out = self.clone();
        out.assertions.retain(|a| keep(&a.id));
        out.file.assertions.retain(|a| keep(&a.id));
        Ok(out)
    }

    pub fn initial_valuation(&self) -> Valuation {
        self.variables.iter().map(|v| v.init).collect()
    }

    pub fn initial_state(&self) -> ConcreteState {
        ConcreteState {
            valuation: self.initial_valuation(),
            enabled: self.widgets.iter().map(|w| w.initially_enabled).collect(),
            visible: self.windows.iter().map(|w| w.initially_visible).collect(),
        }
    }

    /// Execute the handler of `event` on `state`.
    pub fn exec_handler(
        &self,
        event: &str,
        state: &ConcreteState,
        gui: GuiEffects,
    ) -> Result<ConcreteState, AppError> {
        let body = self
            .handler(event)
            .ok_or_else(|| AppError::UnknownEvent(event.to_string()))?;
        let mut next = state.clone();
        match gui {
            GuiEffects::On => {
                let ConcreteState {
                    valuation,
                    enabled,
                    visible,
                } = &mut next;
                self.run(body, valuation, &mut Some((enabled, visible)));
            }
            GuiEffects::Off => self.run(body, &mut next.valuation, &mut None),
        }
        Ok(next)
    }

    /// Run a handler body on a bare valuation, ignoring GUI effects.
    pub fn exec_on_valuation(&self, body: &[Stmt], vals: &mut Valuation) {
        self.run(body, vals, &mut None);
    }

    fn run(
        &self,
        body: &[Stmt],
        vals: &mut Valuation,
        gui: &mut Option<(&mut Vec<bool>, &mut Vec<bool>)>,
    ) {
        for stmt in body {
            match stmt {
                Stmt::Assign { var, expr } => {
                    let decl = &self.variables[*var];
                    vals[*var] = expr.eval(vals).clamp(decl.lo, decl.hi);
                }
                Stmt::If {
                    cond,
                    then,
                    otherwise,
                } => {
                    if cond.eval(vals) {
                        self.run(then, vals, gui);
                    } else {
                        self.run(otherwise, vals, gui);
                    }
                }
                Stmt::SetEnabled { widget, value } => {
                    if let Some((enabled, _)) = gui {
                        enabled[*widget] = *value;
                    }
                }
                Stmt::SetVisible { window, value } => {
                    if let Some((_, visible)) = gui {
                        visible[*window] = *value;
                    }
                }
            }
        }
    }

    /// Ids of the assertions that evaluate to false under `vals`.
    pub fn violated(&self, vals: &[i64]) -> Vec<String> {
        self.assertions
            .iter()
            .filter(|a| !a.expr.eval(vals))
            .map(|a| a.id.clone())
            .collect()
    }

    pub fn check_assertions(&self, state: &ConcreteState) -> BTreeSet<String> {
        self.violated(&state.valuation).into_iter().collect()
    }

    pub fn view(&self, state: &ConcreteState) -> StateView {
        StateView {
            valuation: self
                .variables
                .iter()
                .zip(&state.valuation)
                .map(|(d, v)| (d.name.clone(), *v))
                .collect(),
            enabled: self
                .widgets
                .iter()
                .zip(&state.enabled)
                .map(|(w, e)| (w.id.clone(), *e))
                .collect(),
            visible: self
                .windows
                .iter()
                .zip(&state.visible)
                .map(|(w, v)| (w.id.clone(), *v))
                .collect(),
        }
    }

    /// Value of variable `name` in `state`, if declared.
    pub fn value(&self, state: &ConcreteState, name: &str) -> Option<i64> {
        self.var_index(name).map(|i| state.valuation[i])
    }
}

impl fmt::Display for IntExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |f: &mut fmt::Formatter<'_>, es: &[IntExpr], sep: &str| {
            write!(f, "(")?;
            for (i, e) in es.iter().enumerate() {
                if i > 0 {
                    write!(f, " {sep} ")?;
                }
                write!(f, "{e}")?;
            }
            write!(f, ")")
        };
        match self {
            IntExpr::Const(c) => write!(f, "{c}"),
            IntExpr::Var(i) => write!(f, "v{i}"),
            IntExpr::Neg(e) => write!(f, "-({e})"),
            IntExpr::Add(es) => join(f, es, "+"),
            IntExpr::Sub(a, b) => write!(f, "({a} - {b})"),
            IntExpr::Mul(es) => join(f, es, "*"),
        }
    }
}

// ---------------------------------------------------------------------------
// Validation

#[derive(Default)]
struct Builder {
    var_index: BTreeMap<String, usize>,
    widget_index: BTreeMap<String, usize>,
    window_index: BTreeMap<String, usize>,
}

fn check_unique<'a>(
    kind: &'static str,
    ids: impl Iterator<Item = &'a str>,
) -> Result<(), AppError> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(AppError::Duplicate {
                kind,
                id: id.to_string(),
            });
        }
    }
    Ok(())
}

impl Builder {
    fn build(mut self, file: AppFile) -> Result<AppSpec, AppError> {
        check_unique("window", file.windows.iter().map(|w| w.id.as_str()))?;
        check_unique(
            "widget",
            file.windows
                .iter()
                .flat_map(|w| w.widgets.iter().map(|x| x.id.as_str())),
        )?;
        check_unique("variable", file.variables.iter().map(|v| v.name.as_str()))?;
        check_unique("assertion", file.assertions.iter().map(|a| a.id.as_str()))?;

        let mut windows = Vec::new();
        let mut widgets: Vec<WidgetSpec> = Vec::new();
        for (wi, w) in file.windows.iter().enumerate() {
            self.window_index.insert(w.id.clone(), wi);
            windows.push(WindowSpec {
                id: w.id.clone(),
                modal: w.modal,
                initially_visible: w.initially_visible,
            });
            for x in &w.widgets {
                self.widget_index.insert(x.id.clone(), widgets.len());
                widgets.push(WidgetSpec {
                    id: x.id.clone(),
                    event: x.event.clone(),
                    window: wi,
                    initially_enabled: x.initially_enabled,
                });
            }
        }
        if windows
            .iter()
            .filter(|w| w.modal && w.initially_visible)
            .count()
            > 1
        {
            return Err(AppError::ModalStacking);
        }

        let mut variables = Vec::new();
        for (i, v) in file.variables.iter().enumerate() {
            let [lo, hi] = v.domain;
            if lo > hi || v.init < lo || v.init > hi {
                return Err(AppError::BadDomain {
                    name: v.name.clone(),
                    init: v.init,
                    lo,
                    hi,
                });
            }
            self.var_index.insert(v.name.clone(), i);
            variables.push(VarDecl {
                name: v.name.clone(),
                init: v.init,
                lo,
                hi,
            });
        }

        let mut widget_of_event: BTreeMap<&str, &WidgetSpec> = BTreeMap::new();
        for w in &widgets {
            if let Some(prev) = widget_of_event.insert(&w.event, w) {
                return Err(AppError::EventBoundTwice {
                    event: w.event.clone(),
                    first: prev.id.clone(),
                    second: w.id.clone(),
                });
            }
        }
        for event in file.handlers.keys() {
            if !widget_of_event.contains_key(event.as_str()) {
                return Err(AppError::HandlerWithoutWidget(event.clone()));
            }
        }

        let mut events = BTreeMap::new();
        for (wi, w) in widgets.iter().enumerate() {
            let body = file
                .handlers
                .get(&w.event)
                .ok_or_else(|| AppError::MissingHandler(w.event.clone()))?;
            events.insert(w.event.clone(), (wi, self.stmts(body)?));
        }

        let assertions = file
            .assertions
            .iter()
            .map(|a| {
                Ok(Assertion {
                    id: a.id.clone(),
                    expr: self.bool_expr(&a.expr)?,
                })
            })
            .collect::<Result<Vec<_>, AppError>>()?;

        Ok(AppSpec {
            windows,
            widgets,
            variables,
            events,
            assertions,
            file,
        })
    }

    fn stmts(&self, body: &[StmtFile]) -> Result<Vec<Stmt>, AppError> {
        body.iter().map(|s| self.stmt(s)).collect()
    }

    fn stmt(&self, s: &StmtFile) -> Result<Stmt, AppError> {
        Ok(match s {
            StmtFile::Assign { var, expr } => Stmt::Assign {
                var: self.var(var)?,
                expr: self.int_expr(expr)?,
            },
            StmtFile::If {
                cond,
                then,
                otherwise,
            } => Stmt::If {
                cond: self.bool_expr(cond)?,
                then: self.stmts(then)?,
                otherwise: self.stmts(otherwise)?,
            },
            StmtFile::Gui {
                op: GuiOp::SetEnabled,
                target,
                value,
            } => Stmt::SetEnabled {
                widget: *self
                    .widget_index
                    .get(target)
                    .ok_or_else(|| AppError::UnknownWidget(target.clone()))?,
                value: *value,
            },
            StmtFile::Gui {
                op: GuiOp::SetVisible,
                target,
                value,
            } => Stmt::SetVisible {
                window: *self
                    .window_index
                    .get(target)
                    .ok_or_else(|| AppError::UnknownWindow(target.clone()))?,
                value: *value,
            },
        })
    }

    fn var(&self, name: &str) -> Result<usize, AppError> {
        self.var_index
            .get(name)
            .copied()
            .ok_or_else(|| AppError::UndeclaredVariable(name.to_string()))
    }

    fn arity(op: &str, args: &[ExprFile], ok: impl Fn(usize) -> bool) -> Result<(), AppError> {
        if ok(args.len()) {
            Ok(())
        } else {
            Err(AppError::Type(format!(
                "operator {op} applied to {} operand(s)",
                args.len()
            )))
        }
    }

    fn int_expr(&self, e: &ExprFile) -> Result<IntExpr, AppError> {
        match e {
            ExprFile::Const { value } => Ok(IntExpr::Const(*value)),
            ExprFile::Var { var } => Ok(IntExpr::Var(self.var(var)?)),
            ExprFile::Op { op, args } => {
                let ints = |s: &Self| {
                    args.iter()
                        .map(|a| s.int_expr(a))
                        .collect::<Result<Vec<_>, _>>()
                };
                match op.as_str() {
                    "+" => {
                        Self::arity(op, args, |n| n >= 2)?;
                        Ok(IntExpr::Add(ints(self)?))
                    }
                    "*" => {
                        Self::arity(op, args, |n| n >= 2)?;
                        Ok(IntExpr::Mul(ints(self)?))
                    }
                    "-" => {
                        Self::arity(op, args, |n| n == 2)?;
                        let mut v = ints(self)?;
                        let b = v.pop().expect("two operands");
                        let a = v.pop().expect("two operands");
                        Ok(IntExpr::Sub(Box::new(a), Box::new(b)))
                    }
                    "neg" => {
                        Self::arity(op, args, |n| n == 1)?;
                        Ok(IntExpr::Neg(Box::new(self.int_expr(&args[0])?)))
                    }
                    "<" | "<=" | ">" | ">=" | "==" | "!=" | "and" | "or" | "not" => {
                        Err(AppError::Type(format!(
                            "expected integer expression, found boolean operator {op}"
                        )))
                    }
                    other => Err(AppError::Type(format!("unknown operator {other}"))),
                }
            }
        }
    }

    fn bool_expr(&self, e: &ExprFile) -> Result<BoolExpr, AppError> {
        match e {
            ExprFile::Const { .. } | ExprFile::Var { .. } => Err(AppError::Type(
                "expected boolean expression, found integer operand".to_string(),
            )),
            ExprFile::Op { op, args } => {
                let cmp = match op.as_str() {
                    "<" => Some(CmpOp::Lt),
                    "<=" => Some(CmpOp::Le),
                    ">" => Some(CmpOp::Gt),
                    ">=" => Some(CmpOp::Ge),
                    "==" => Some(CmpOp::Eq),
                    "!=" => Some(CmpOp::Ne),
                    _ => None,
                };
                if let Some(cmp) = cmp {
                    Self::arity(op, args, |n| n == 2)?;
                    return Ok(BoolExpr::Cmp(
                        cmp,
                        Box::new(self.int_expr(&args[0])?),
                        Box::new(self.int_expr(&args[1])?),
                    ));
                }
                let bools = || {
                    args.iter()
                        .map(|a| self.bool_expr(a))
                        .collect::<Result<Vec<_>, _>>()
                };
                match op.as_str() {
                    "and" => {
                        Self::arity(op, args, |n| n >= 1)?;
                        Ok(BoolExpr::And(bools()?))
                    }
                    "or" => {
                        Self::arity(op, args, |n| n >= 1)?;
                        Ok(BoolExpr::Or(bools()?))
                    }
                    "not" => {
                        Self::arity(op, args, |n| n == 1)?;
                        Ok(BoolExpr::Not(Box::new(self.bool_expr(&args[0])?)))
                    }
                    "+" | "-" | "*" | "neg" => Err(AppError::Type(format!(
                        "expected boolean expression, found arithmetic operator {op}"
                    ))),
                    other => Err(AppError::Type(format!("unknown operator {other}"))),
                }
            }
        }
    }
}

impl fmt::Display for BoolExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoolExpr::Cmp(op, a, b) => write!(f, "{a} {} {b}", op.symbol()),
            BoolExpr::And(es) | BoolExpr::Or(es) => {
                let sep = if matches!(self, BoolExpr::And(_)) {
                    "&&"
                } else {
                    "||"
                };
                write!(f, "(")?;
                for (i, e) in es.iter().enumerate() {
                    if i > 0 {
                        write!(f, " {sep} ")?;
                    }
                    write!(f, "{e}")?;
                }
                write!(f, ")")
            }
            BoolExpr::Not(e) => write!(f, "!({e})"),
        }
    }
}
