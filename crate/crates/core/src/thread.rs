//! Regular threads given by finite linear recursive specifications.
//!
//! A [`ThreadSpec`] is a list of equations `X_i = S`, `X_i = D` or
//! `X_i = X_j <| a |> X_k` together with an initial state. Two specs denote
//! the same thread iff their initial states are bisimilar, which
//! [`bisimilar`] decides by partition refinement over the disjoint union.
//! [`projections_agree`] compares depth-bounded approximations directly and
//! serves as an independent check of that decision.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::syntax::BasicInstruction;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Equation {
    Stop,
    Deadlock,
    /// Perform `action`; continue in `then_state` on reply true, `else_state`
    /// on reply false.
    Post {
        action: BasicInstruction,
        then_state: usize,
        else_state: usize,
    },
}

impl Equation {
    pub fn post(action: BasicInstruction, then_state: usize, else_state: usize) -> Self {
        Equation::Post {
            action,
            then_state,
            else_state,
        }
    }

    fn successors(&self) -> Option<(usize, usize)> {
        match self {
            Equation::Post {
                then_state,
                else_state,
                ..
            } => Some((*then_state, *else_state)),
            _ => None,
        }
    }

    fn shifted(&self, offset: usize) -> Self {
        match self {
            Equation::Post {
                action,
                then_state,
                else_state,
            } => Equation::post(action.clone(), then_state + offset, else_state + offset),
            other => other.clone(),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ThreadSpecError {
    #[error("a thread specification needs at least one state")]
    Empty,
    #[error("initial state X{0} is out of range")]
    InitialOutOfRange(usize),
    #[error("state X{state} refers to undefined state X{target}")]
    SuccessorOutOfRange { state: usize, target: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ThreadSpec {
    states: Vec<Equation>,
    initial: usize,
}

impl ThreadSpec {
    pub fn new(states: Vec<Equation>, initial: usize) -> Result<Self, ThreadSpecError> {
        if states.is_empty() {
            return Err(ThreadSpecError::Empty);
        }
        if initial >= states.len() {
            return Err(ThreadSpecError::InitialOutOfRange(initial));
        }
        for (state, eq) in states.iter().enumerate() {
            if let Some((t, e)) = eq.successors() {
                for target in [t, e] {
                    if target >= states.len() {
                        return Err(ThreadSpecError::SuccessorOutOfRange { state, target });
                    }
                }
            }
        }
        Ok(Self { states, initial })
    }

    pub fn stop() -> Self {
        Self {
            states: vec![Equation::Stop],
            initial: 0,
        }
    }

    pub fn deadlock() -> Self {
        Self {
            states: vec![Equation::Deadlock],
            initial: 0,
        }
    }

    /// `then <| action |> otherwise` built from two existing threads.
    pub fn post(action: BasicInstruction, then: &ThreadSpec, otherwise: &ThreadSpec) -> Self {
        let mut states = vec![Equation::Deadlock];
        let then_offset = states.len();
        states.extend(then.states.iter().map(|e| e.shifted(then_offset)));
        let else_offset = states.len();
        states.extend(otherwise.states.iter().map(|e| e.shifted(else_offset)));
        states[0] = Equation::post(
            action,
            then.initial + then_offset,
            otherwise.initial + else_offset,
        );
        Self { states, initial: 0 }
    }

    /// `action o thread`: perform `action` and continue regardless of reply.
    pub fn prefix(action: BasicInstruction, thread: &ThreadSpec) -> Self {
        let mut states = vec![Equation::Deadlock];
        states.extend(thread.states.iter().map(|e| e.shifted(1)));
        states[0] = Equation::post(action, thread.initial + 1, thread.initial + 1);
        Self { states, initial: 0 }
    }

    pub fn states(&self) -> &[Equation] {
        &self.states
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// The same equations with a different initial state.
    pub fn with_initial(&self, initial: usize) -> Result<Self, ThreadSpecError> {
        Self::new(self.states.clone(), initial)
    }

    /// Every basic action occurring in some equation.
    pub fn actions(&self) -> BTreeSet<&BasicInstruction> {
        self.states
            .iter()
            .filter_map(|e| match e {
                Equation::Post { action, .. } => Some(action),
                _ => None,
            })
            .collect()
    }

    pub fn is_deadlock(&self) -> bool {
        bisimilar(self, &ThreadSpec::deadlock())
    }
}

/// The residual threads reachable from `from`.
pub fn residuals(spec: &ThreadSpec, from: usize) -> BTreeSet<usize> {
    let mut seen = BTreeSet::new();
    let mut stack = vec![from];
    while let Some(s) = stack.pop() {
        if !seen.insert(s) {
            continue;
        }
        if let Some((t, e)) = spec.states[s].successors() {
            stack.push(e);
            stack.push(t);
        }
    }
    seen
}

/// A finite approximation. `CutOff` is the deadlock introduced by truncation
/// and compares equal to `Deadlock`.
#[derive(Debug, Clone, Eq)]
pub enum FiniteThread {
    CutOff,
    Stop,
    Deadlock,
    Post {
        action: BasicInstruction,
        then: Box<FiniteThread>,
        otherwise: Box<FiniteThread>,
    },
}

impl PartialEq for FiniteThread {
    fn eq(&self, other: &Self) -> bool {
        use FiniteThread::*;
        match (self, other) {
            (CutOff | Deadlock, CutOff | Deadlock) => true,
            (Stop, Stop) => true,
            (
                Post {
                    action: a,
                    then: t1,
                    otherwise: e1,
                },
                Post {
                    action: b,
                    then: t2,
                    otherwise: e2,
                },
            ) => a == b && t1 == t2 && e1 == e2,
            _ => false,
        }
    }
}

impl FiniteThread {
    pub fn depth(&self) -> usize {
        match self {
            FiniteThread::Post {
                then, otherwise, ..
            } => 1 + then.depth().max(otherwise.depth()),
            _ => 0,
        }
    }
}

impl fmt::Display for FiniteThread {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FiniteThread::CutOff | FiniteThread::Deadlock => f.write_str("D"),
            FiniteThread::Stop => f.write_str("S"),
            FiniteThread::Post {
                action,
                then,
                otherwise,
            } => write!(f, "({then} <| {action} |> {otherwise})"),
        }
    }
}

/// The depth-`n` approximation of the thread at `spec`'s initial state.
///
/// The tree has up to `2^n` leaves; use [`projections_agree`] to compare
/// approximations of large depth.
pub fn project(spec: &ThreadSpec, n: usize) -> FiniteThread {
    project_state(spec, spec.initial, n)
}

fn project_state(spec: &ThreadSpec, state: usize, n: usize) -> FiniteThread {
    if n == 0 {
        return FiniteThread::CutOff;
    }
    match &spec.states[state] {
        Equation::Stop => FiniteThread::Stop,
        Equation::Deadlock => FiniteThread::Deadlock,
        Equation::Post {
            action,
            then_state,
            else_state,
        } => FiniteThread::Post {
            action: action.clone(),
            then: Box::new(project_state(spec, *then_state, n - 1)),
            otherwise: Box::new(project_state(spec, *else_state, n - 1)),
        },
    }
}

/// Depth-indexed comparison of approximations, one layer per depth, over all
/// state pairs. `agree[i][j]` after layer `n` says the depth-`n`
/// approximations of `s1` at `i` and `s2` at `j` coincide.
struct ProjectionTable<'a> {
    s1: &'a ThreadSpec,
    s2: &'a ThreadSpec,
    agree: Vec<Vec<bool>>,
    depth: usize,
}

impl<'a> ProjectionTable<'a> {
    fn new(s1: &'a ThreadSpec, s2: &'a ThreadSpec) -> Self {
        // every pair of approximations agrees at depth 0
        Self {
            s1,
            s2,
            agree: vec![vec![true; s2.len()]; s1.len()],
            depth: 0,
        }
    }

    fn step(&mut self) {
        let prev = &self.agree;
        let next = self
            .s1
            .states
            .iter()
            .map(|e1| {
                self.s2
                    .states
                    .iter()
                    .map(|e2| match (e1, e2) {
                        (Equation::Stop, Equation::Stop) => true,
                        (Equation::Deadlock, Equation::Deadlock) => true,
                        (
                            Equation::Post {
                                action: a,
                                then_state: t1,
                                else_state: f1,
                            },
                            Equation::Post {
                                action: b,
                                then_state: t2,
                                else_state: f2,
                            },
                        ) => a == b && prev[*t1][*t2] && prev[*f1][*f2],
                        _ => false,
                    })
                    .collect()
            })
            .collect();
        self.agree = next;
        self.depth += 1;
    }

    fn initial_agree(&self) -> bool {
        self.agree[self.s1.initial][self.s2.initial]
    }
}

/// True iff the depth-`n` approximations of both threads are equal.
pub fn projections_agree(s1: &ThreadSpec, s2: &ThreadSpec, n: usize) -> bool {
    let mut table = ProjectionTable::new(s1, s2);
    for _ in 0..n {
        table.step();
    }
    table.initial_agree()
}

/// The least depth `n <= max_depth` whose approximations differ.
pub fn first_projection_difference(
    s1: &ThreadSpec,
    s2: &ThreadSpec,
    max_depth: usize,
) -> Option<usize> {
    let mut table = ProjectionTable::new(s1, s2);
    while table.depth < max_depth {
        table.step();
        if !table.initial_agree() {
            return Some(table.depth);
        }
    }
    None
}

/// A depth past which differing regular threads must have differing
/// approximations: `|S1| * |S2| + 1`.
pub fn projection_depth_bound(s1: &ThreadSpec, s2: &ThreadSpec) -> usize {
    s1.len() * s2.len() + 1
}

/// Coarsest stable partition of `states` into bisimulation classes.
/// Returns one class id per state.
fn bisimulation_classes(states: &[Equation]) -> Vec<usize> {
    #[derive(Hash, PartialEq, Eq)]
    enum Kind<'a> {
        Stop,
        Deadlock,
        Post(&'a BasicInstruction),
    }

    let mut ids: HashMap<Kind<'_>, usize> = HashMap::new();
    let mut class: Vec<usize> = states
        .iter()
        .map(|e| {
            let kind = match e {
                Equation::Stop => Kind::Stop,
                Equation::Deadlock => Kind::Deadlock,
                Equation::Post { action, .. } => Kind::Post(action),
            };
            let next = ids.len();
            *ids.entry(kind).or_insert(next)
        })
        .collect();
    let mut count = ids.len();

    loop {
        let mut sigs: HashMap<(usize, usize, usize), usize> = HashMap::new();
        let refined: Vec<usize> = states
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let sig = match e.successors() {
                    Some((t, f)) => (class[i], class[t], class[f]),
                    None => (class[i], usize::MAX, usize::MAX),
                };
                let next = sigs.len();
                *sigs.entry(sig).or_insert(next)
            })
            .collect();
        let refined_count = sigs.len();
        class = refined;
        if refined_count == count {
            return class;
        }
        count = refined_count;
    }
}

fn disjoint_union(s1: &ThreadSpec, s2: &ThreadSpec) -> Vec<Equation> {
    let offset = s1.len();
    s1.states
        .iter()
        .cloned()
        .chain(s2.states.iter().map(|e| e.shifted(offset)))
        .collect()
}

/// Decides whether two specs denote the same thread.
pub fn bisimilar(s1: &ThreadSpec, s2: &ThreadSpec) -> bool {
    let union = disjoint_union(s1, s2);
    let class = bisimulation_classes(&union);
    class[s1.initial] == class[s2.initial + s1.len()]
}

/// The canonical minimal spec: reachable states only, no two bisimilar,
/// numbered in breadth-first order (then-branch first) from state 0.
pub fn minimize(spec: &ThreadSpec) -> ThreadSpec {
    minimize_with_map(spec).0
}

/// [`minimize`] together with the state each original state maps to
/// (`None` for unreachable states).
pub fn minimize_with_map(spec: &ThreadSpec) -> (ThreadSpec, Vec<Option<usize>>) {
    let class = bisimulation_classes(&spec.states);
    let reachable = residuals(spec, spec.initial);

    // a representative per class, among reachable states
    let mut rep: HashMap<usize, usize> = HashMap::new();
    for &s in &reachable {
        rep.entry(class[s]).or_insert(s);
    }

    let mut number: HashMap<usize, usize> = HashMap::new();
    let mut order = Vec::new();
    let mut queue = VecDeque::from([class[spec.initial]]);
    number.insert(class[spec.initial], 0);
    while let Some(c) = queue.pop_front() {
        order.push(c);
        if let Some((t, f)) = spec.states[rep[&c]].successors() {
            for next in [class[t], class[f]] {
                if !number.contains_key(&next) {
                    number.insert(next, number.len());
                    queue.push_back(next);
                }
            }
        }
    }

    let states = order
        .iter()
        .map(|c| match &spec.states[rep[c]] {
            Equation::Post {
                action,
                then_state,
                else_state,
            } => Equation::post(
                action.clone(),
                number[&class[*then_state]],
                number[&class[*else_state]],
            ),
            other => other.clone(),
        })
        .collect();
    let map = (0..spec.len())
        .map(|s| reachable.contains(&s).then(|| number[&class[s]]))
        .collect();
    (ThreadSpec { states, initial: 0 }, map)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Terminated,
    Deadlocked,
    /// Ran out of replies while in this state.
    RepliesExhausted(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub actions: Vec<(BasicInstruction, bool)>,
    pub outcome: Outcome,
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (action, reply) in &self.actions {
            writeln!(f, "{action} -> {}", if *reply { "T" } else { "F" })?;
        }
        match self.outcome {
            Outcome::Terminated => write!(f, "terminated"),
            Outcome::Deadlocked => write!(f, "deadlocked"),
            Outcome::RepliesExhausted(s) => write!(f, "replies exhausted in X{s}"),
        }
    }
}

/// Runs the thread against a fixed sequence of replies.
pub fn simulate(spec: &ThreadSpec, replies: &[bool]) -> Trace {
    let mut state = spec.initial;
    let mut actions = Vec::new();
    let mut replies = replies.iter();
    let outcome = loop {
        match &spec.states[state] {
            Equation::Stop => break Outcome::Terminated,
            Equation::Deadlock => break Outcome::Deadlocked,
            Equation::Post {
                action,
                then_state,
                else_state,
            } => match replies.next() {
                None => break Outcome::RepliesExhausted(state),
                Some(&reply) => {
                    actions.push((action.clone(), reply));
                    state = if reply { *then_state } else { *else_state };
                }
            },
        }
    };
    Trace { actions, outcome }
}

/// Text format: one line per state, `Xi = S`, `Xi = D` or
/// `Xi = a ? Xj : Xk`, initial state first.
impl fmt::Display for ThreadSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let order =
            std::iter::once(self.initial).chain((0..self.len()).filter(|&i| i != self.initial));
        for (n, i) in order.enumerate() {
            if n > 0 {
                writeln!(f)?;
            }
            match &self.states[i] {
                Equation::Stop => write!(f, "X{i} = S")?,
                Equation::Deadlock => write!(f, "X{i} = D")?,
                Equation::Post {
                    action,
                    then_state,
                    else_state,
                } => write!(f, "X{i} = {action} ? X{then_state} : X{else_state}")?,
            }
        }
        Ok(())
    }
}

/// Parses the text format. State names are kept as indices when they are
/// exactly `X0 .. X(n-1)`; otherwise they are renumbered in ascending order.
impl FromStr for ThreadSpec {
    type Err = ThreadSpecError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        enum Rhs {
            Stop,
            Deadlock,
            Post(BasicInstruction, usize, usize),
        }

        let err = |line: usize, message: String| ThreadSpecError::Parse { line, message };
        let state_name = |line: usize, s: &str| -> Result<usize, ThreadSpecError> {
            s.trim()
                .strip_prefix('X')
                .and_then(|n| n.parse().ok())
                .ok_or_else(|| {
                    err(
                        line,
                        format!("expected a state name like X0, found `{}`", s.trim()),
                    )
                })
        };

        let mut defs: Vec<(usize, usize, Rhs)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let raw = raw.trim();
            if raw.is_empty() || raw.starts_with("//") {
                continue;
            }
            let (lhs, rhs) = raw
                .split_once('=')
                .ok_or_else(|| err(line, "expected `Xi = ...`".into()))?;
            let name = state_name(line, lhs)?;
            let rhs = rhs.trim();
            let rhs = match rhs {
                "S" => Rhs::Stop,
                "D" => Rhs::Deadlock,
                _ => {
                    let (action, rest) = rhs.split_once('?').ok_or_else(|| {
                        err(
                            line,
                            format!("expected S, D or `a ? Xj : Xk`, found `{rhs}`"),
                        )
                    })?;
                    let (then, other) = rest
                        .split_once(':')
                        .ok_or_else(|| err(line, "expected `? Xj : Xk`".into()))?;
                    let action: BasicInstruction =
                        action.trim().parse().map_err(|e| err(line, e))?;
                    Rhs::Post(action, state_name(line, then)?, state_name(line, other)?)
                }
            };
            if defs.iter().any(|(_, n, _)| *n == name) {
                return Err(err(line, format!("state X{name} defined twice")));
            }
            defs.push((line, name, rhs));
        }
        if defs.is_empty() {
            return Err(ThreadSpecError::Empty);
        }

        let mut names: Vec<usize> = defs.iter().map(|(_, n, _)| *n).collect();
        names.sort_unstable();
        let index: HashMap<usize, usize> = names.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        let lookup = |line: usize, n: usize| {
            index
                .get(&n)
                .copied()
                .ok_or_else(|| err(line, format!("state X{n} is not defined")))
        };

        let mut states = vec![Equation::Deadlock; defs.len()];
        for (line, name, rhs) in &defs {
            states[index[name]] = match rhs {
                Rhs::Stop => Equation::Stop,
                Rhs::Deadlock => Equation::Deadlock,
                Rhs::Post(a, t, e) => {
                    Equation::post(a.clone(), lookup(*line, *t)?, lookup(*line, *e)?)
                }
            };
        }
        ThreadSpec::new(states, index[&defs[0].1])
    }
}
