//! Brute-force enumerator for state-machine findings. Shared with the
//! acceptance suite.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use workbench_core::{Assignment, StateInvariant, StateMachine, Transition, Uid, VarDecl};
use workbench_verify::behavior::{Trace, RULE_DEADLOCK, RULE_INVARIANT, RULE_RANGE, RULE_UNREACHABLE};
use workbench_verify::{check_state_machine, replay_trace, BehaviorPolicy, Severity};

/// Guard `var < k` or `var >= k`.
#[derive(Clone, Debug)]
struct Guard {
    var: usize,
    less: bool,
    k: i64,
}

/// `var := var + d` or `var := k`.
#[derive(Clone, Debug)]
enum Asg {
    Add(usize, i64),
    Set(usize, i64),
}

#[derive(Clone, Debug)]
struct Tr {
    from: usize,
    to: usize,
    guard: Option<Guard>,
    assigns: Vec<Asg>,
}

/// The same machine as plain data, evaluated directly by the oracle.
#[derive(Clone, Debug)]
struct Shadow {
    states: usize,
    finals: BTreeSet<usize>,
    ranges: Vec<(i64, i64)>,
    init: Vec<i64>,
    trs: Vec<Tr>,
    /// (state or None for all, var, bound): invariant `var <= bound`.
    invs: Vec<(Option<usize>, usize, i64)>,
}

const VARS: [&str; 2] = ["a", "b"];

fn random_shadow(rng: &mut ChaCha8Rng) -> Shadow {
    let states = rng.gen_range(1..=10);
    let nvars = rng.gen_range(0..=2);
    let mut ranges = Vec::new();
    let mut budget = 1000 / states;
    for _ in 0..nvars {
        let width = rng.gen_range(1..=budget.clamp(1, 12) as i64);
        let lo = rng.gen_range(-3..=3);
        ranges.push((lo, lo + width - 1));
        budget /= width as usize;
    }
    let init = ranges.iter().map(|(lo, hi)| rng.gen_range(*lo..=*hi)).collect();
    let mut trs = Vec::new();
    for _ in 0..rng.gen_range(0..states * 2 + 2) {
        let guard = (nvars > 0 && rng.gen_bool(0.5)).then(|| {
            let var = rng.gen_range(0..nvars);
            Guard {
                var,
                less: rng.gen_bool(0.5),
                k: rng.gen_range(ranges[var].0 - 1..=ranges[var].1 + 1),
            }
        });
        let mut assigns = Vec::new();
        for (v, &(lo, hi)) in ranges.iter().enumerate() {
            match rng.gen_range(0..4) {
                0 => assigns.push(Asg::Add(v, rng.gen_range(-2..=2))),
                1 => assigns.push(Asg::Set(v, rng.gen_range(lo..=hi))),
                _ => {}
            }
        }
        trs.push(Tr {
            from: rng.gen_range(0..states),
            to: rng.gen_range(0..states),
            guard,
            assigns,
        });
    }
    let finals = (0..states).filter(|_| rng.gen_bool(0.2)).collect();
    let mut invs = Vec::new();
    for _ in 0..rng.gen_range(0..3) {
        if nvars == 0 {
            break;
        }
        let var = rng.gen_range(0..nvars);
        let at = rng.gen_bool(0.5).then(|| rng.gen_range(0..states));
        invs.push((at, var, rng.gen_range(ranges[var].0..=ranges[var].1)));
    }
    Shadow {
        states,
        finals,
        ranges,
        init,
        trs,
        invs,
    }
}

fn to_machine(s: &Shadow) -> StateMachine {
    let name = |i: usize| format!("S{i}");
    StateMachine {
        uid: Uid::new("sm", 0).unwrap(),
        owner: Uid::new("cmp", 0).unwrap(),
        states: (0..s.states).map(name).collect(),
        initial: name(0),
        final_states: s.finals.iter().map(|&i| name(i)).collect(),
        transitions: s
            .trs
            .iter()
            .enumerate()
            .map(|(n, t)| Transition {
                from: name(t.from),
                event: format!("e{n}"),
                guard: t
                    .guard
                    .as_ref()
                    .map(|g| format!("{} {} {}", VARS[g.var], if g.less { "<" } else { ">=" }, g.k)),
                assigns: t
                    .assigns
                    .iter()
                    .map(|a| match a {
                        Asg::Add(v, d) => Assignment {
                            var: VARS[*v].into(),
                            expr: format!("{} + ({d})", VARS[*v]),
                        },
                        Asg::Set(v, k) => Assignment {
                            var: VARS[*v].into(),
                            expr: format!("{k}"),
                        },
                    })
                    .collect(),
                to: name(t.to),
            })
            .collect(),
        variables: s
            .ranges
            .iter()
            .enumerate()
            .map(|(i, (lo, hi))| {
                (
                    VARS[i].to_string(),
                    VarDecl {
                        init: s.init[i],
                        min: *lo,
                        max: *hi,
                    },
                )
            })
            .collect(),
        invariants: s
            .invs
            .iter()
            .map(|(at, v, k)| StateInvariant {
                state: at.map_or("*".into(), name),
                expr: format!("{} <= {k}", VARS[*v]),
            })
            .collect(),
    }
}

type Cfg = (usize, Vec<i64>);

enum Out {
    Next(Cfg),
    Range,
}

fn oracle_moves(s: &Shadow, c: &Cfg) -> Vec<(usize, Out)> {
    let mut out = Vec::new();
    for (n, t) in s.trs.iter().enumerate() {
        if t.from != c.0 {
            continue;
        }
        if let Some(g) = &t.guard {
            let v = c.1[g.var];
            if (v < g.k) != g.less {
                continue;
            }
        }
        let mut vars = c.1.clone();
        let mut bad = false;
        for a in &t.assigns {
            let (v, x) = match a {
                Asg::Add(v, d) => (*v, c.1[*v] + d),
                Asg::Set(v, k) => (*v, *k),
            };
            if x < s.ranges[v].0 || x > s.ranges[v].1 {
                bad = true;
            }
            vars[v] = x;
        }
        out.push((n, if bad { Out::Range } else { Out::Next((t.to, vars)) }));
    }
    out
}

fn all_configs(s: &Shadow) -> Vec<Cfg> {
    let mut vals: Vec<Vec<i64>> = vec![vec![]];
    for (lo, hi) in &s.ranges {
        vals = vals
            .into_iter()
            .flat_map(|p| (*lo..=*hi).map(move |x| [p.clone(), vec![x]].concat()))
            .collect();
    }
    (0..s.states)
        .flat_map(|st| vals.iter().map(move |v| (st, v.clone())))
        .collect()
}

/// Expected (rule, key) -> shortest trace length, by exhaustive relaxation.
fn oracle(s: &Shadow) -> BTreeMap<(String, String), Option<usize>> {
    let configs = all_configs(s);
    let mut dist: BTreeMap<Cfg, usize> = BTreeMap::from([((0, s.init.clone()), 0)]);
    loop {
        let mut changed = false;
        for c in &configs {
            let Some(&d) = dist.get(c) else { continue };
            for (_, o) in oracle_moves(s, c) {
                if let Out::Next(n) = o {
                    if dist.get(&n).is_none_or(|&old| old > d + 1) {
                        dist.insert(n, d + 1);
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut want: BTreeMap<(String, String), Option<usize>> = BTreeMap::new();
    let mut keep_min = |rule: &str, key: String, len: Option<usize>| {
        let e = want.entry((rule.to_string(), key)).or_insert(len);
        if let (Some(old), Some(new)) = (*e, len) {
            *e = Some(old.min(new));
        }
    };
    for (c, &d) in &dist {
        for (i, (at, v, k)) in s.invs.iter().enumerate() {
            if at.is_none_or(|a| a == c.0) && c.1[*v] > *k {
                keep_min(RULE_INVARIANT, i.to_string(), Some(d));
            }
        }
        let moves = oracle_moves(s, c);
        if moves.is_empty() && !s.finals.contains(&c.0) {
            keep_min(RULE_DEADLOCK, format!("S{}", c.0), Some(d));
        }
        for (n, o) in moves {
            if matches!(o, Out::Range) {
                keep_min(RULE_RANGE, n.to_string(), Some(d + 1));
            }
        }
    }
    let reached: BTreeSet<usize> = dist.keys().map(|c| c.0).collect();
    for st in 0..s.states {
        if !reached.contains(&st) {
            keep_min(RULE_UNREACHABLE, format!("S{st}"), None);
        }
    }
    want
}

fn key_of(f: &workbench_verify::Finding) -> String {
    let e = &f.evidence;
    match f.rule.as_str() {
        RULE_INVARIANT => e["invariant"].to_string(),
        RULE_RANGE => e["transition"].to_string(),
        _ => e["state"].as_str().unwrap().to_string(),
    }
}

/// `rounds` random machines of at most 10 states and 1000 configurations.
/// Findings must match the enumerator by (rule, subject) and shortest trace
/// length, and every trace must replay.
pub fn check_machines(seed: u64, rounds: usize) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut with_errors = 0;
    for round in 0..rounds {
        let s = random_shadow(&mut rng);
        let configs = all_configs(&s).len();
        if configs > 1000 {
            return Err(format!("round {round}: generator produced {configs} configurations"));
        }
        let sm = to_machine(&s);
        let found = check_state_machine(&sm, &BehaviorPolicy::default());
        let mut got = BTreeMap::new();
        for f in &found {
            let len = if f.evidence.get("trace").is_some() {
                let trace: Trace = serde_json::from_value(f.evidence["trace"].clone()).map_err(|e| e.to_string())?;
                replay_trace(&sm, &trace).map_err(|e| format!("round {round}: trace does not replay: {e}"))?;
                Some(trace.steps.len())
            } else {
                None
            };
            if got.insert((f.rule.clone(), key_of(f)), len).is_some() {
                return Err(format!("round {round}: duplicate finding {} {}", f.rule, key_of(f)));
            }
        }
        let want = oracle(&s);
        if got != want {
            return Err(format!("round {round}: checker {got:?} but enumerator {want:?}"));
        }
        with_errors += usize::from(found.iter().any(|f| f.severity == Severity::Error));
    }
    if with_errors * 10 < rounds {
        return Err(format!(
            "generator too tame: {with_errors} of {rounds} machines have Errors"
        ));
    }
    Ok(())
}
