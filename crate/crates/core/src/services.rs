//! Finite-state services and the use operator.
//!
//! A service processes methods: in each state a method has an effect (the
//! next state) and a yield (`T`, `F` or blocked). Once a request is blocked
//! the service stays blocked. [`apply_use`] lets a thread's `f.m` actions be
//! answered by a service named `f`, removing those actions from the thread;
//! blocked requests and endless runs of answered actions become deadlock.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::syntax::is_identifier;
use crate::thread::{bisimilar, minimize, Equation, ThreadSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Reply {
    True,
    False,
    Blocked,
}

impl fmt::Display for Reply {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Reply::True => "T",
            Reply::False => "F",
            Reply::Blocked => "B",
        })
    }
}

impl FromStr for Reply {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "T" | "true" => Ok(Reply::True),
            "F" | "false" => Ok(Reply::False),
            "B" | "blocked" => Ok(Reply::Blocked),
            _ => Err(format!("unknown reply `{s}` (expected T, F or B)")),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ServiceError {
    #[error("service has no states")]
    NoStates,
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("unknown method `{0}`")]
    UnknownMethod(String),
    #[error("`{method}` in state `{state}` is blocked but leads to `{next}`, where `{other}` is not blocked")]
    BlockedNotAbsorbing {
        method: String,
        state: String,
        next: String,
        other: String,
    },
    #[error("duplicate focus `{0}` in register bank")]
    DuplicateFocus(String),
    #[error("unknown built-in service `{0}` (expected br:true, br:false or br:blocked)")]
    UnknownBuiltin(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// A finite-state service. Methods outside the declared domain, and
/// declared methods with no transition, yield blocked and move to a sink
/// state that blocks everything.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceTable {
    states: Vec<String>,
    methods: Vec<String>,
    /// `table[method][state]`
    table: Vec<Vec<(usize, Reply)>>,
    initial: usize,
    sink: usize,
}

impl ServiceTable {
    /// Builds a service from explicit transitions `(method, state, next, reply)`.
    ///
    /// A sink state named `blocked` is added unless some declared state
    /// already blocks every method and stays put.
    pub fn new(
        states: &[&str],
        methods: &[&str],
        transitions: &[(&str, &str, &str, Reply)],
        initial: &str,
    ) -> Result<Self, ServiceError> {
        if states.is_empty() {
            return Err(ServiceError::NoStates);
        }
        let mut names: Vec<String> = states.iter().map(|s| s.to_string()).collect();
        let methods: Vec<String> = methods.iter().map(|m| m.to_string()).collect();
        let state_ix = |s: &str| {
            states
                .iter()
                .position(|x| *x == s)
                .ok_or_else(|| ServiceError::UnknownState(s.to_string()))
        };
        let method_ix = |m: &str| {
            methods
                .iter()
                .position(|x| x == m)
                .ok_or_else(|| ServiceError::UnknownMethod(m.to_string()))
        };

        let mut defined: Vec<Vec<Option<(usize, Reply)>>> =
            vec![vec![None; states.len()]; methods.len()];
        for (m, s, next, reply) in transitions {
            defined[method_ix(m)?][state_ix(s)?] = Some((state_ix(next)?, *reply));
        }

        let absorbing = |s: usize| {
            defined
                .iter()
                .all(|row| row[s] == Some((s, Reply::Blocked)))
        };
        let sink = match (0..states.len()).find(|&s| absorbing(s)) {
            Some(s) => s,
            None => {
                let mut name = "blocked".to_string();
                while names.contains(&name) {
                    name.push('_');
                }
                names.push(name);
                names.len() - 1
            }
        };

        let table = defined
            .into_iter()
            .map(|row| {
                let mut row: Vec<(usize, Reply)> = row
                    .into_iter()
                    .map(|t| t.unwrap_or((sink, Reply::Blocked)))
                    .collect();
                row.resize(names.len(), (sink, Reply::Blocked));
                row
            })
            .collect();

        let svc = Self {
            states: names,
            methods,
            table,
            initial: state_ix(initial)?,
            sink,
        };
        svc.check_blocked_absorbing()?;
        Ok(svc)
    }

    fn check_blocked_absorbing(&self) -> Result<(), ServiceError> {
        for (mi, row) in self.table.iter().enumerate() {
            for (s, &(next, reply)) in row.iter().enumerate() {
                if reply != Reply::Blocked {
                    continue;
                }
                if let Some(other) =
                    (0..self.methods.len()).find(|&m2| self.table[m2][next].1 != Reply::Blocked)
                {
                    return Err(ServiceError::BlockedNotAbsorbing {
                        method: self.methods[mi].clone(),
                        state: self.states[s].clone(),
                        next: self.states[next].clone(),
                        other: self.methods[other].clone(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn state_names(&self) -> &[String] {
        &self.states
    }

    pub fn methods(&self) -> &[String] {
        &self.methods
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn initial_name(&self) -> &str {
        &self.states[self.initial]
    }

    fn lookup(&self, method: &str, state: usize) -> (usize, Reply) {
        match self.methods.iter().position(|m| m == method) {
            Some(mi) => self.table[mi][state],
            None => (self.sink, Reply::Blocked),
        }
    }

    pub fn effect(&self, method: &str, state: usize) -> usize {
        self.lookup(method, state).0
    }

    pub fn yield_of(&self, method: &str, state: usize) -> Reply {
        self.lookup(method, state).1
    }

    /// The service after processing `method` from its initial state.
    pub fn derive(&self, method: &str) -> ServiceTable {
        ServiceTable {
            initial: self.effect(method, self.initial),
            ..self.clone()
        }
    }

    /// The reply to `method` in the initial state.
    pub fn reply(&self, method: &str) -> Reply {
        self.yield_of(method, self.initial)
    }

    /// Same tables, another initial state (by name).
    pub fn with_initial(&self, state: &str) -> Result<ServiceTable, ServiceError> {
        let initial = self
            .states
            .iter()
            .position(|s| s == state)
            .ok_or_else(|| ServiceError::UnknownState(state.to_string()))?;
        Ok(ServiceTable {
            initial,
            ..self.clone()
        })
    }

    /// `br:true`, `br:false` or `br:blocked`.
    pub fn builtin(name: &str) -> Result<ServiceTable, ServiceError> {
        match name {
            "br:true" => Ok(boolean_register(Reply::True)),
            "br:false" => Ok(boolean_register(Reply::False)),
            "br:blocked" => Ok(boolean_register(Reply::Blocked)),
            _ => Err(ServiceError::UnknownBuiltin(name.to_string())),
        }
    }
}

pub const SET_TRUE: &str = "set:true";
pub const SET_FALSE: &str = "set:false";
pub const GET: &str = "get";

/// A Boolean register with the given initial content. States are named
/// `T`, `F` and `B`; effect and yield coincide.
pub fn boolean_register(initial: Reply) -> ServiceTable {
    let mut transitions = Vec::new();
    for (s, r) in [("T", Reply::True), ("F", Reply::False)] {
        transitions.push((SET_TRUE, s, "T", Reply::True));
        transitions.push((SET_FALSE, s, "F", Reply::False));
        transitions.push((GET, s, s, r));
    }
    for m in [SET_TRUE, SET_FALSE, GET] {
        transitions.push((m, "B", "B", Reply::Blocked));
    }
    let initial = match initial {
        Reply::True => "T",
        Reply::False => "F",
        Reply::Blocked => "B",
    };
    ServiceTable::new(
        &["T", "F", "B"],
        &[SET_TRUE, SET_FALSE, GET],
        &transitions,
        initial,
    )
    .expect("the Boolean register table is well formed")
}

/// Text format:
///
/// ```text
/// states: s1 s2
/// initial: s1
/// methods: m1 m2
/// m1, s1 -> s2, T
/// ```
impl FromStr for ServiceTable {
    type Err = ServiceError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let err = |line: usize, message: String| ServiceError::Parse { line, message };
        let mut states: Option<Vec<String>> = None;
        let mut methods: Option<Vec<String>> = None;
        let mut initial: Option<String> = None;
        let mut transitions: Vec<(String, String, String, Reply)> = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let raw = raw.trim();
            if raw.is_empty() || raw.starts_with("//") {
                continue;
            }
            let words = |rest: &str| {
                rest.split_whitespace()
                    .map(str::to_string)
                    .collect::<Vec<_>>()
            };
            if let Some(rest) = raw.strip_prefix("states:") {
                states = Some(words(rest));
            } else if let Some(rest) = raw.strip_prefix("methods:") {
                let ms = words(rest);
                if let Some(bad) = ms.iter().find(|m| !is_identifier(m)) {
                    return Err(err(line, format!("malformed method `{bad}`")));
                }
                methods = Some(ms);
            } else if let Some(rest) = raw.strip_prefix("initial:") {
                initial = Some(rest.trim().to_string());
            } else {
                let (lhs, rhs) = raw
                    .split_once("->")
                    .ok_or_else(|| err(line, "expected `method, state -> state, reply`".into()))?;
                let (m, s) = lhs
                    .split_once(',')
                    .ok_or_else(|| err(line, "expected `method, state` before `->`".into()))?;
                let (next, reply) = rhs
                    .split_once(',')
                    .ok_or_else(|| err(line, "expected `state, reply` after `->`".into()))?;
                let reply = reply.trim().parse().map_err(|e| err(line, e))?;
                transitions.push((
                    m.trim().to_string(),
                    s.trim().to_string(),
                    next.trim().to_string(),
                    reply,
                ));
            }
        }

        let states = states.ok_or_else(|| err(0, "missing `states:` header".into()))?;
        let methods = methods.ok_or_else(|| err(0, "missing `methods:` header".into()))?;
        let initial = initial.ok_or_else(|| err(0, "missing `initial:` header".into()))?;
        let states: Vec<&str> = states.iter().map(String::as_str).collect();
        let methods: Vec<&str> = methods.iter().map(String::as_str).collect();
        let transitions: Vec<(&str, &str, &str, Reply)> = transitions
            .iter()
            .map(|(m, s, n, r)| (m.as_str(), s.as_str(), n.as_str(), *r))
            .collect();
        ServiceTable::new(&states, &methods, &transitions, &initial)
    }
}

/// Services bound to distinct foci, applied in list order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RegisterBank {
    entries: Vec<(String, ServiceTable)>,
}

impl RegisterBank {
    pub fn new(entries: Vec<(String, ServiceTable)>) -> Result<Self, ServiceError> {
        let mut seen = BTreeSet::new();
        for (focus, _) in &entries {
            if !seen.insert(focus.as_str()) {
                return Err(ServiceError::DuplicateFocus(focus.clone()));
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[(String, ServiceTable)] {
        &self.entries
    }

    pub fn foci(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(f, _)| f.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn push(
        &mut self,
        focus: impl Into<String>,
        svc: ServiceTable,
    ) -> Result<(), ServiceError> {
        let focus = focus.into();
        if self.entries.iter().any(|(f, _)| *f == focus) {
            return Err(ServiceError::DuplicateFocus(focus));
        }
        self.entries.push((focus, svc));
        Ok(())
    }
}

/// Builds the thread of a product exploration. `step` maps a product key to
/// its behaviour with successors expressed as keys. Chains of internal steps
/// are collapsed; an internal cycle is deadlock. Also returns the keys of
/// every product state visited.
fn product_thread<K, F>(start: K, mut step: F) -> (ThreadSpec, Vec<K>)
where
    K: Clone + Eq + std::hash::Hash,
    F: FnMut(&K) -> ProductStep<K>,
{
    let mut index: HashMap<K, usize> = HashMap::new();
    let mut keys: Vec<K> = Vec::new();
    let mut intern = |k: K, keys: &mut Vec<K>| -> usize {
        *index.entry(k.clone()).or_insert_with(|| {
            keys.push(k);
            keys.len() - 1
        })
    };
    intern(start, &mut keys);

    let mut raw: Vec<ProductStep<usize>> = Vec::new();
    while raw.len() < keys.len() {
        let k = keys[raw.len()].clone();
        let s = match step(&k) {
            ProductStep::Stop => ProductStep::Stop,
            ProductStep::Deadlock => ProductStep::Deadlock,
            ProductStep::Post(a, t, f) => {
                let t = intern(t, &mut keys);
                let f = intern(f, &mut keys);
                ProductStep::Post(a, t, f)
            }
            ProductStep::Internal(t) => ProductStep::Internal(intern(t, &mut keys)),
        };
        raw.push(s);
    }

    // collapse internal chains; `deadlock` is an extra state
    let n = raw.len();
    let deadlock = n;
    let mut resolved: Vec<Option<usize>> = vec![None; n];
    let mut visiting = vec![usize::MAX; n];
    for start in 0..n {
        let mut path = Vec::new();
        let mut cur = start;
        let target = loop {
            if let Some(r) = resolved[cur] {
                break r;
            }
            match raw[cur] {
                ProductStep::Internal(_) if visiting[cur] == start => break deadlock,
                ProductStep::Internal(t) => {
                    visiting[cur] = start;
                    path.push(cur);
                    cur = t;
                }
                _ => {
                    resolved[cur] = Some(cur);
                    break cur;
                }
            }
        };
        for p in path {
            resolved[p] = Some(target);
        }
    }

    let land = |s: usize| resolved[s].expect("all states resolved");
    let mut states: Vec<Equation> = raw
        .iter()
        .map(|s| match s {
            ProductStep::Stop => Equation::Stop,
            ProductStep::Deadlock | ProductStep::Internal(_) => Equation::Deadlock,
            ProductStep::Post(a, t, f) => Equation::post(a.clone(), land(*t), land(*f)),
        })
        .collect();
    states.push(Equation::Deadlock);
    let spec = ThreadSpec::new(states, land(0)).expect("product states are in range");
    (minimize(&spec), keys)
}

/// One step of a product state, successors given as product keys.
pub(crate) enum ProductStep<K> {
    Stop,
    Deadlock,
    Post(crate::syntax::BasicInstruction, K, K),
    Internal(K),
}

/// The thread `spec /focus svc`.
pub fn apply_use(spec: &ThreadSpec, focus: &str, svc: &ServiceTable) -> ThreadSpec {
    let (thread, _) = product_thread((spec.initial(), svc.initial()), |&(t, s)| {
        match &spec.states()[t] {
            Equation::Stop => ProductStep::Stop,
            Equation::Deadlock => ProductStep::Deadlock,
            Equation::Post {
                action,
                then_state,
                else_state,
            } => {
                if action.has_focus(focus) {
                    let next = svc.effect(action.method(), s);
                    match svc.yield_of(action.method(), s) {
                        Reply::True => ProductStep::Internal((*then_state, next)),
                        Reply::False => ProductStep::Internal((*else_state, next)),
                        Reply::Blocked => ProductStep::Deadlock,
                    }
                } else {
                    ProductStep::Post(action.clone(), (*then_state, s), (*else_state, s))
                }
            }
        }
    });
    thread
}

/// Applies every service of the bank, first entry innermost. Computed as a
/// single joint product, which agrees with [`apply_bank_fold`].
pub fn apply_bank(spec: &ThreadSpec, bank: &RegisterBank) -> ThreadSpec {
    apply_bank_joint(spec, bank).0
}

/// [`apply_use`] applied entry by entry.
pub fn apply_bank_fold(spec: &ThreadSpec, bank: &RegisterBank) -> ThreadSpec {
    bank.entries
        .iter()
        .fold(minimize(spec), |acc, (focus, svc)| {
            apply_use(&acc, focus, svc)
        })
}

/// Applies all services of the bank in one product exploration over the
/// thread state and every service state at once. Returns the resulting
/// thread and every product state visited, as `(thread state, service
/// states in bank order)`.
pub fn apply_bank_joint(
    spec: &ThreadSpec,
    bank: &RegisterBank,
) -> (ThreadSpec, Vec<(usize, Vec<usize>)>) {
    let start = (
        spec.initial(),
        bank.entries
            .iter()
            .map(|(_, s)| s.initial())
            .collect::<Vec<_>>(),
    );
    product_thread(start, |(t, svc_states)| match &spec.states()[*t] {
        Equation::Stop => ProductStep::Stop,
        Equation::Deadlock => ProductStep::Deadlock,
        Equation::Post {
            action,
            then_state,
            else_state,
        } => {
            let served = action
                .focus()
                .and_then(|f| bank.entries.iter().position(|(focus, _)| focus == f));
            match served {
                None => ProductStep::Post(
                    action.clone(),
                    (*then_state, svc_states.clone()),
                    (*else_state, svc_states.clone()),
                ),
                Some(i) => {
                    let svc = &bank.entries[i].1;
                    let mut next = svc_states.clone();
                    next[i] = svc.effect(action.method(), svc_states[i]);
                    match svc.yield_of(action.method(), svc_states[i]) {
                        Reply::True => ProductStep::Internal((*then_state, next)),
                        Reply::False => ProductStep::Internal((*else_state, next)),
                        Reply::Blocked => ProductStep::Deadlock,
                    }
                }
            }
        }
    })
}

/// The one-step laws of the use operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UseLaw {
    /// `S /f H = S`
    Stop,
    /// `D /f H = D`
    Deadlock,
    /// `(x <| g.m |> y) /f H = (x /f H) <| g.m |> (y /f H)` for `g != f`
    OtherFocus,
    /// `(x <| f.m |> y) /f H = x /f dH/dm` when `H(m) = T`
    ReplyTrue,
    /// `(x <| f.m |> y) /f H = y /f dH/dm` when `H(m) = F`
    ReplyFalse,
    /// `(x <| f.m |> y) /f H = D` when `H(m) = B`
    ReplyBlocked,
}

/// Checks the law matching the initial equation of `spec`, comparing
/// `spec /focus svc` with the right-hand side built from the successors.
pub fn check_use_law(spec: &ThreadSpec, focus: &str, svc: &ServiceTable) -> (UseLaw, bool) {
    let lhs = apply_use(spec, focus, svc);
    let at = |state: usize| spec.with_initial(state).expect("successor in range");
    match &spec.states()[spec.initial()] {
        Equation::Stop => (UseLaw::Stop, bisimilar(&lhs, &ThreadSpec::stop())),
        Equation::Deadlock => (UseLaw::Deadlock, bisimilar(&lhs, &ThreadSpec::deadlock())),
        Equation::Post {
            action,
            then_state,
            else_state,
        } if !action.has_focus(focus) => {
            let rhs = ThreadSpec::post(
                action.clone(),
                &apply_use(&at(*then_state), focus, svc),
                &apply_use(&at(*else_state), focus, svc),
            );
            (UseLaw::OtherFocus, bisimilar(&lhs, &rhs))
        }
        Equation::Post {
            action,
            then_state,
            else_state,
        } => {
            let derived = svc.derive(action.method());
            match svc.reply(action.method()) {
                Reply::True => (
                    UseLaw::ReplyTrue,
                    bisimilar(&lhs, &apply_use(&at(*then_state), focus, &derived)),
                ),
                Reply::False => (
                    UseLaw::ReplyFalse,
                    bisimilar(&lhs, &apply_use(&at(*else_state), focus, &derived)),
                ),
                Reply::Blocked => (
                    UseLaw::ReplyBlocked,
                    bisimilar(&lhs, &ThreadSpec::deadlock()),
                ),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extraction::extract;
    use crate::syntax::{parse, Dialect};
    use crate::thread::bisimilar;

    fn spec(s: &str) -> ThreadSpec {
        s.parse().unwrap()
    }

    fn ix(svc: &ServiceTable, name: &str) -> usize {
        svc.state_names().iter().position(|s| s == name).unwrap()
    }

    #[test]
    fn register_get_and_set() {
        let br = boolean_register(Reply::False);
        assert_eq!(br.yield_of(GET, br.initial()), Reply::False);
        let after = br.effect(SET_TRUE, br.initial());
        assert_eq!(br.yield_of(GET, after), Reply::True);
    }

    #[test]
    fn register_unknown_method_blocks_forever() {
        let br = boolean_register(Reply::True);
        assert_eq!(br.reply("unknown:m"), Reply::Blocked);
        let b = br.derive("unknown:m");
        for m in [SET_TRUE, SET_FALSE, GET, "other"] {
            assert_eq!(b.reply(m), Reply::Blocked);
            assert_eq!(b.derive(m).initial(), b.initial());
        }
    }

    #[test]
    fn derive_and_reply() {
        assert_eq!(
            boolean_register(Reply::False).derive(SET_TRUE),
            boolean_register(Reply::True)
        );
        assert_eq!(
            boolean_register(Reply::True).derive(GET),
            boolean_register(Reply::True)
        );
        assert_eq!(boolean_register(Reply::False).reply(GET), Reply::False);
        assert_eq!(boolean_register(Reply::False).reply(SET_TRUE), Reply::True);
        assert_eq!(boolean_register(Reply::Blocked).reply(GET), Reply::Blocked);

        let br = boolean_register(Reply::True);
        let twice = br.derive(SET_FALSE).derive(GET);
        assert_eq!(
            twice.initial(),
            br.effect(GET, br.effect(SET_FALSE, br.initial()))
        );
    }

    #[test]
    fn register_state_names() {
        let br = boolean_register(Reply::Blocked);
        assert_eq!(br.initial_name(), "B");
        assert_eq!(br.state_names().len(), 3);
        assert_eq!(ix(&br, "T"), br.effect(SET_TRUE, ix(&br, "F")));
    }

    #[test]
    fn use_examples() {
        let br_false = boolean_register(Reply::False);
        assert_eq!(apply_use(&spec("X0 = S"), "f", &br_false), spec("X0 = S"));
        assert_eq!(
            apply_use(
                &spec("X0 = f.get ? X1 : X2\nX1 = S\nX2 = D"),
                "f",
                &boolean_register(Reply::True)
            ),
            spec("X0 = S")
        );
        let looping = extract(&parse("(f.get)*", Dialect::Pga).unwrap()).unwrap();
        assert_eq!(apply_use(&looping, "f", &br_false), spec("X0 = D"));
        let other = spec("X0 = g.m ? X1 : X1\nX1 = S");
        assert_eq!(apply_use(&other, "f", &br_false), other);
    }

    #[test]
    fn blocked_request_deadlocks() {
        let s = spec("X0 = f.get ? X1 : X1\nX1 = S");
        assert_eq!(
            apply_use(&s, "f", &boolean_register(Reply::Blocked)),
            spec("X0 = D")
        );
        assert_eq!(
            apply_use(
                &spec("X0 = f.nope ? X1 : X1\nX1 = S"),
                "f",
                &boolean_register(Reply::True)
            ),
            spec("X0 = D")
        );
    }

    #[test]
    fn register_drives_branches() {
        // set then read back
        let s = spec("X0 = f.set:true ? X1 : X1\nX1 = f.get ? X2 : X3\nX2 = a ? X4 : X4\nX3 = b ? X4 : X4\nX4 = S");
        let used = apply_use(&s, "f", &boolean_register(Reply::False));
        assert_eq!(used, spec("X0 = a ? X1 : X1\nX1 = S"));
    }

    #[test]
    fn bank_fold_and_joint_agree() {
        let s = spec("X0 = f.set:true ? X1 : X1\nX1 = g.get ? X2 : X3\nX2 = f.get ? X4 : X3\nX3 = D\nX4 = a ? X0 : X4");
        let bank = RegisterBank::new(vec![
            ("f".into(), boolean_register(Reply::False)),
            ("g".into(), boolean_register(Reply::True)),
        ])
        .unwrap();
        let folded = apply_bank_fold(&s, &bank);
        let (joint, visited) = apply_bank_joint(&s, &bank);
        assert!(bisimilar(&folded, &joint));
        assert_eq!(folded, joint);
        assert!(!visited.is_empty());
    }

    #[test]
    fn bank_rejects_duplicate_focus() {
        let br = boolean_register(Reply::False);
        assert_eq!(
            RegisterBank::new(vec![("f".into(), br.clone()), ("f".into(), br.clone())]),
            Err(ServiceError::DuplicateFocus("f".into()))
        );
        let mut bank = RegisterBank::default();
        bank.push("f", br.clone()).unwrap();
        assert!(bank.push("f", br).is_err());
    }

    #[test]
    fn empty_bank_is_identity() {
        let s = spec("X0 = a ? X0 : X1\nX1 = S");
        assert_eq!(apply_bank(&s, &RegisterBank::default()), s);
    }

    #[test]
    fn use_laws() {
        let br = boolean_register(Reply::False);
        assert_eq!(
            check_use_law(&ThreadSpec::stop(), "f", &br),
            (UseLaw::Stop, true)
        );
        assert_eq!(
            check_use_law(&ThreadSpec::deadlock(), "f", &br),
            (UseLaw::Deadlock, true)
        );
        let s = spec("X0 = g.m ? X1 : X0\nX1 = f.get ? X2 : X0\nX2 = S");
        assert_eq!(check_use_law(&s, "f", &br), (UseLaw::OtherFocus, true));
        let s = spec("X0 = f.set:true ? X1 : X2\nX1 = f.get ? X2 : X3\nX2 = S\nX3 = a ? X3 : X3");
        assert_eq!(check_use_law(&s, "f", &br), (UseLaw::ReplyTrue, true));
        let s = spec("X0 = f.get ? X1 : X2\nX1 = S\nX2 = a ? X0 : X1");
        assert_eq!(check_use_law(&s, "f", &br), (UseLaw::ReplyFalse, true));
        assert_eq!(
            check_use_law(&s, "f", &boolean_register(Reply::Blocked)),
            (UseLaw::ReplyBlocked, true)
        );
    }

    #[test]
    fn service_text_format() {
        let svc: ServiceTable = "states: idle busy\ninitial: idle\nmethods: go stop\n\
             go, idle -> busy, T\nstop, busy -> idle, F\n"
            .parse()
            .unwrap();
        assert_eq!(svc.reply("go"), Reply::True);
        assert_eq!(svc.reply("stop"), Reply::Blocked);
        assert_eq!(svc.derive("go").reply("stop"), Reply::False);
        assert_eq!(svc.derive("stop").initial_name(), "blocked");
        assert!("states: a\nmethods: m\n".parse::<ServiceTable>().is_err());
        assert!("states: a\ninitial: a\nmethods: m\nm, a -> b, T"
            .parse::<ServiceTable>()
            .is_err());
    }

    #[test]
    fn blocked_must_absorb() {
        let bad = ServiceTable::new(
            &["a", "b"],
            &["m"],
            &[
                ("m", "a", "b", Reply::Blocked),
                ("m", "b", "b", Reply::True),
            ],
            "a",
        );
        assert!(matches!(bad, Err(ServiceError::BlockedNotAbsorbing { .. })));
    }

    #[test]
    fn builtins() {
        assert_eq!(
            ServiceTable::builtin("br:false").unwrap(),
            boolean_register(Reply::False)
        );
        assert!(ServiceTable::builtin("br:maybe").is_err());
    }
}
