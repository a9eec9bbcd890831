//! Breadth-first explicit-state checking of component state machines.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use serde_json::json;
use workbench_core::StateMachine;

use crate::expr::{compile, EvalError, IExpr, Ty};
use crate::finding::{Finding, Phase, Severity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BehaviorPolicy {
    /// Longest path explored from the initial configuration.
    pub depth_bound: usize,
    /// Most configurations kept before giving up.
    pub state_cap: usize,
}

impl Default for BehaviorPolicy {
    fn default() -> Self {
        BehaviorPolicy {
            depth_bound: 10_000,
            state_cap: 100_000,
        }
    }
}

/// A state plus variable values in name order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Config {
    pub state: usize,
    pub vars: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub state: String,
    pub vars: BTreeMap<String, i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    /// Index into the machine's transition list.
    pub transition: usize,
    pub event: String,
    pub to: Snapshot,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub initial: Snapshot,
    pub steps: Vec<TraceStep>,
}

/// A machine with its expressions compiled against variable slots.
pub struct Compiled<'a> {
    pub sm: &'a StateMachine,
    pub var_names: Vec<String>,
    pub bounds: Vec<(i64, i64)>,
    pub guards: Vec<Option<IExpr>>,
    pub assigns: Vec<Vec<(usize, IExpr)>>,
    /// State index (or None for every state) and the compiled expression.
    pub invariants: Vec<(Option<usize>, IExpr)>,
    state_index: BTreeMap<&'a str, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    Next(Config),
    OutOfRange { var: String, value: i64 },
    Failed(EvalError),
}

impl<'a> Compiled<'a> {
    pub fn new(sm: &'a StateMachine) -> Result<Self, String> {
        sm.check_structure()?;
        let var_names: Vec<String> = sm.variables.keys().cloned().collect();
        let slots: BTreeMap<String, usize> = var_names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        let bounds = sm.variables.values().map(|v| (v.min, v.max)).collect();
        let state_index: BTreeMap<&str, usize> = sm.states.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let mut guards = Vec::new();
        let mut assigns = Vec::new();
        for t in &sm.transitions {
            let g = match &t.guard {
                Some(src) => Some(compile(src, &slots, Ty::Bool).map_err(|e| format!("guard of `{}`: {e}", t.event))?),
                None => None,
            };
            guards.push(g);
            let mut a = Vec::new();
            for asg in &t.assigns {
                let e = compile(&asg.expr, &slots, Ty::Int).map_err(|e| format!("assignment in `{}`: {e}", t.event))?;
                a.push((slots[&asg.var], e));
            }
            assigns.push(a);
        }
        let mut invariants = Vec::new();
        for inv in &sm.invariants {
            let at = (inv.state != "*").then(|| state_index[inv.state.as_str()]);
            let e = compile(&inv.expr, &slots, Ty::Bool).map_err(|e| format!("invariant `{}`: {e}", inv.expr))?;
            invariants.push((at, e));
        }
        Ok(Compiled {
            sm,
            var_names,
            bounds,
            guards,
            assigns,
            invariants,
            state_index,
        })
    }

    pub fn initial(&self) -> Config {
        Config {
            state: self.state_index[self.sm.initial.as_str()],
            vars: self.sm.variables.values().map(|v| v.init).collect(),
        }
    }

    pub fn state_of(&self, name: &str) -> Option<usize> {
        self.state_index.get(name).copied()
    }

    pub fn snapshot(&self, c: &Config) -> Snapshot {
        Snapshot {
            state: self.sm.states[c.state].clone(),
            vars: self.var_names.iter().cloned().zip(c.vars.iter().copied()).collect(),
        }
    }

    /// Transitions leaving `c` whose guard holds (or fails to evaluate), with
    /// the outcome of taking each.
    pub fn enabled(&self, c: &Config) -> Vec<(usize, Step)> {
        let mut out = Vec::new();
        for (i, t) in self.sm.transitions.iter().enumerate() {
            if self.state_index[t.from.as_str()] != c.state {
                continue;
            }
            match self.guards[i].as_ref().map(|g| g.eval_bool(&c.vars)) {
                None | Some(Ok(true)) => {}
                Some(Ok(false)) => continue,
                Some(Err(e)) => {
                    out.push((i, Step::Failed(e)));
                    continue;
                }
            }
            out.push((i, self.take(i, c)));
        }
        out
    }

    /// Assignments are simultaneous: every right-hand side sees the old values.
    fn take(&self, i: usize, c: &Config) -> Step {
        let mut vars = c.vars.clone();
        for (slot, e) in &self.assigns[i] {
            match e.eval_int(&c.vars) {
                Ok(v) => {
                    let (lo, hi) = self.bounds[*slot];
                    if v < lo || v > hi {
                        return Step::OutOfRange {
                            var: self.var_names[*slot].clone(),
                            value: v,
                        };
                    }
                    vars[*slot] = v;
                }
                Err(e) => return Step::Failed(e),
            }
        }
        Step::Next(Config {
            state: self.state_index[self.sm.transitions[i].to.as_str()],
            vars,
        })
    }

    /// Indices of invariants that fail (or cannot be evaluated) in `c`.
    pub fn violated(&self, c: &Config) -> Vec<usize> {
        self.invariants
            .iter()
            .enumerate()
            .filter(|(_, (at, e))| at.is_none_or(|s| s == c.state) && !matches!(e.eval_bool(&c.vars), Ok(true)))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn is_final(&self, c: &Config) -> bool {
        self.sm
            .final_states
            .iter()
            .any(|s| self.state_index[s.as_str()] == c.state)
    }
}

/// Re-runs a trace from the initial configuration, checking each step is a
/// legal move that lands where the trace says. Returns the final configuration.
pub fn replay_trace(sm: &StateMachine, trace: &Trace) -> Result<Config, String> {
    let c = Compiled::new(sm)?;
    let mut at = c.initial();
    if c.snapshot(&at) != trace.initial {
        return Err("trace does not start at the initial configuration".into());
    }
    for (n, step) in trace.steps.iter().enumerate() {
        let t = sm
            .transitions
            .get(step.transition)
            .ok_or_else(|| format!("step {n}: no transition {}", step.transition))?;
        if t.event != step.event {
            return Err(format!("step {n}: transition {} is `{}`", step.transition, t.event));
        }
        let next = c
            .enabled(&at)
            .into_iter()
            .find(|(i, _)| *i == step.transition)
            .ok_or_else(|| format!("step {n}: `{}` is not enabled", step.event))?;
        match next.1 {
            Step::Next(cfg) => {
                if c.snapshot(&cfg) != step.to {
                    return Err(format!(
                        "step {n}: lands in {:?}, trace says {:?}",
                        c.snapshot(&cfg),
                        step.to
                    ));
                }
                at = cfg;
            }
            other => {
                // a trace may end on the step that failed
                if n + 1 != trace.steps.len() {
                    return Err(format!("step {n}: {other:?}"));
                }
            }
        }
    }
    Ok(at)
}

pub const RULE_MALFORMED: &str = "sm.malformed";
pub const RULE_INVARIANT: &str = "sm.invariant";
pub const RULE_RANGE: &str = "sm.range";
pub const RULE_EVAL: &str = "sm.eval-error";
pub const RULE_DEADLOCK: &str = "sm.deadlock";
pub const RULE_UNREACHABLE: &str = "sm.unreachable";
pub const RULE_INCOMPLETE: &str = "sm.incomplete";

/// Explores every configuration reachable within the policy's bounds.
pub fn check_state_machine(sm: &StateMachine, policy: &BehaviorPolicy) -> Vec<Finding> {
    let subjects = vec![sm.uid.clone(), sm.owner.clone()];
    let finding = |sev, rule, msg: String| Finding::new(Phase::Phase2Behavior, sev, rule, subjects.clone(), msg);
    let c = match Compiled::new(sm) {
        Ok(c) => c,
        Err(e) => return vec![finding(Severity::Error, RULE_MALFORMED, e)],
    };

    let start = c.initial();
    // parent links give shortest traces because the search is breadth-first
    let mut parent: HashMap<Config, Option<(Config, usize)>> = HashMap::from([(start.clone(), None)]);
    let mut queue = VecDeque::from([(start.clone(), 0usize)]);
    let mut visited_states = BTreeSet::new();
    let mut reported_inv = BTreeSet::new();
    let mut reported_tr = BTreeSet::new();
    let mut reported_dead = BTreeSet::new();
    let mut truncated = false;
    let mut overflow = false;
    let mut out = Vec::new();

    let trace_to = |parent: &HashMap<Config, Option<(Config, usize)>>, end: &Config| -> Trace {
        let mut steps = Vec::new();
        let mut at = end.clone();
        while let Some(Some((prev, t))) = parent.get(&at) {
            steps.push(TraceStep {
                transition: *t,
                event: sm.transitions[*t].event.clone(),
                to: c.snapshot(&at),
            });
            at = prev.clone();
        }
        steps.reverse();
        Trace {
            initial: c.snapshot(&at),
            steps,
        }
    };

    while let Some((cfg, depth)) = queue.pop_front() {
        visited_states.insert(cfg.state);
        for i in c.violated(&cfg) {
            if reported_inv.insert(i) {
                let inv = &sm.invariants[i];
                let trace = trace_to(&parent, &cfg);
                out.push(
                    finding(
                        Severity::Error,
                        RULE_INVARIANT,
                        format!(
                            "invariant `{}` (state {}) fails after {} steps",
                            inv.expr,
                            inv.state,
                            trace.steps.len()
                        ),
                    )
                    .with_evidence(json!({"invariant": i, "trace": trace})),
                );
            }
        }
        let moves = c.enabled(&cfg);
        if moves.is_empty() && !c.is_final(&cfg) && reported_dead.insert(cfg.state) {
            let trace = trace_to(&parent, &cfg);
            out.push(
                finding(
                    Severity::Warning,
                    RULE_DEADLOCK,
                    format!("no transition leaves {} and it is not final", sm.states[cfg.state]),
                )
                .with_evidence(json!({"state": sm.states[cfg.state], "trace": trace})),
            );
        }
        for (t, step) in moves {
            match step {
                Step::Next(next) => {
                    if parent.contains_key(&next) {
                        continue;
                    }
                    if depth >= policy.depth_bound {
                        truncated = true;
                        continue;
                    }
                    if parent.len() >= policy.state_cap {
                        overflow = true;
                        continue;
                    }
                    parent.insert(next.clone(), Some((cfg.clone(), t)));
                    queue.push_back((next, depth + 1));
                }
                Step::OutOfRange { var, value } => {
                    if reported_tr.insert((RULE_RANGE, t)) {
                        let mut trace = trace_to(&parent, &cfg);
                        trace.steps.push(TraceStep {
                            transition: t,
                            event: sm.transitions[t].event.clone(),
                            to: c.snapshot(&cfg),
                        });
                        out.push(
                            finding(
                                Severity::Error,
                                RULE_RANGE,
                                format!(
                                    "`{}` sets {var} to {value}, outside its declared range",
                                    sm.transitions[t].event
                                ),
                            )
                            .with_evidence(json!({"transition": t, "var": var, "value": value, "trace": trace})),
                        );
                    }
                }
                Step::Failed(e) => {
                    if reported_tr.insert((RULE_EVAL, t)) {
                        let trace = trace_to(&parent, &cfg);
                        out.push(
                            finding(
                                Severity::Error,
                                RULE_EVAL,
                                format!("`{}` cannot be evaluated: {e}", sm.transitions[t].event),
                            )
                            .with_evidence(json!({"transition": t, "trace": trace})),
                        );
                    }
                }
            }
        }
    }

    if truncated || overflow {
        let reason = if overflow { "state cap" } else { "depth bound" };
        out.push(
            finding(
                Severity::Warning,
                RULE_INCOMPLETE,
                format!("exploration stopped at the {reason}; results are partial"),
            )
            .with_evidence(json!({"explored": parent.len(), "reason": reason, "partial": true})),
        );
    } else {
        for (i, s) in sm.states.iter().enumerate() {
            if !visited_states.contains(&i) {
                out.push(
                    finding(
                        Severity::Warning,
                        RULE_UNREACHABLE,
                        format!("state {s} is never reached"),
                    )
                    .with_evidence(json!({"state": s})),
                );
            }
        }
    }
    out
}
