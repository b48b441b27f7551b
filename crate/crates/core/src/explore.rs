//! Bounded exhaustive exploration of scheduler nondeterminism.
//!
//! Depth-first enumeration of every schedule: at each configuration the
//! explorer branches over the runnable set in ordinal order. Leaves are
//! terminal, deadlocked, faulted, or depth-cut configurations. The trace
//! set collected at the leaves is, for an un-truncated exploration, exactly
//! the set of observable traces the most abstract model admits at this
//! bound. Deterministic: identical inputs give identical results including
//! every count.
//!
//! Exploration keeps runs slim (schedule, verdict, observables); property
//! checkers that need event logs replay the schedule, which also proves
//! every recorded schedule is replayable.

use std::collections::BTreeSet;
use std::rc::Rc;

use crate::checks::PropertyVerdict;
use crate::exec::{Configuration, StepError};
use crate::ir::{Diagnostic, ProgramDef};
use crate::sched::{finalize_terminal, Verdict};
use crate::value::{InstanceId, Value};

/// One explored schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub schedule: Vec<InstanceId>,
    pub verdict: Verdict,
    pub observable: Vec<Value>,
    /// True when the depth bound cut this run short.
    pub cut: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplorationResult {
    pub program: Rc<ProgramDef>,
    pub depth: usize,
    /// Deduplicated observable traces over all leaves.
    pub traces: BTreeSet<Vec<Value>>,
    pub runs: Vec<RunRecord>,
    /// Complete (not depth-cut) runs.
    pub full_runs: usize,
    /// Configurations visited, including leaves.
    pub states_visited: usize,
    /// True when any schedule hit the depth bound.
    pub truncated: bool,
    /// Filled in by the standard property checks when requested.
    pub verdicts: Vec<PropertyVerdict>,
}

impl ExplorationResult {
    /// Runs exhibiting a verdict other than `Finished`.
    pub fn abnormal_runs(&self) -> impl Iterator<Item = &RunRecord> {
        self.runs.iter().filter(|r| !matches!(r.verdict, Verdict::Finished(_)))
    }
}

/// Explore every schedule of `program` up to `depth` total steps.
pub fn explore(
    program: &ProgramDef,
    depth: usize,
    strict_oo: bool,
) -> Result<ExplorationResult, Vec<Diagnostic>> {
    explore_bounded(program, depth, strict_oo, usize::MAX)
}

/// `explore` with a cap on visited configurations. Exhausting the budget
/// is not an error: the result comes back truncated with partial counts.
pub fn explore_bounded(
    program: &ProgramDef,
    depth: usize,
    strict_oo: bool,
    max_states: usize,
) -> Result<ExplorationResult, Vec<Diagnostic>> {
    let root = Configuration::init(program, strict_oo)?;
    let mut out = ExplorationResult {
        program: Rc::new(program.clone()),
        depth,
        traces: BTreeSet::new(),
        runs: Vec::new(),
        full_runs: 0,
        states_visited: 0,
        truncated: false,
        verdicts: Vec::new(),
    };
    let mut path: Vec<InstanceId> = Vec::new();
    dfs(root, depth, max_states, &mut path, &mut out);
    Ok(out)
}

fn leaf(out: &mut ExplorationResult, path: &[InstanceId], cfg: &Configuration, verdict: Verdict, cut: bool) {
    let observable = cfg.observable_trace();
    out.traces.insert(observable.clone());
    if cut {
        out.truncated = true;
    } else {
        out.full_runs += 1;
    }
    out.runs.push(RunRecord { schedule: path.to_vec(), verdict, observable, cut });
}

fn dfs(
    cfg: Configuration,
    depth: usize,
    max_states: usize,
    path: &mut Vec<InstanceId>,
    out: &mut ExplorationResult,
) {
    if out.states_visited >= max_states {
        out.truncated = true;
        return;
    }
    out.states_visited += 1;
    let runnable = cfg.runnable();
    if runnable.is_empty() {
        let mut terminal = cfg;
        let verdict = finalize_terminal(&mut terminal);
        leaf(out, path, &terminal, verdict, false);
        return;
    }
    if path.len() >= depth {
        leaf(out, path, &cfg, Verdict::StepLimit, true);
        return;
    }
    for id in runnable {
        match cfg.step(id) {
            Ok(next) => {
                path.push(id);
                dfs(next, depth, max_states, path, out);
                path.pop();
            }
            Err(StepError::Fault { kind, .. }) => {
                path.push(id);
                leaf(out, path, &cfg, Verdict::Fault(kind), false);
                path.pop();
            }
            Err(StepError::NotRunnable { .. }) => {
                unreachable!("runnable ids step");
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_program;

    fn explored(src: &str, depth: usize) -> ExplorationResult {
        explore(&parse_program(src).unwrap(), depth, false).unwrap()
    }

    #[test]
    fn single_instance_has_one_trace() {
        let r = explored("fn main() { emit 1 \n emit 2 \n return }", 16);
        assert_eq!(r.full_runs, 1);
        assert!(!r.truncated);
        assert_eq!(r.traces.len(), 1);
        assert!(r.traces.contains(&vec![Value::Int(1), Value::Int(2)]));
    }

    #[test]
    fn two_spawned_emitters_interleave_both_ways() {
        let src = "fn main() { spawn a f \n spawn b g \n return }\n\
                   fn f() { emit 1 \n return }\n\
                   fn g() { emit 2 \n return }";
        let r = explored(src, 16);
        assert!(!r.truncated);
        assert_eq!(r.traces.len(), 2);
        assert!(r.traces.contains(&vec![Value::Int(1), Value::Int(2)]));
        assert!(r.traces.contains(&vec![Value::Int(2), Value::Int(1)]));
    }

    #[test]
    fn depth_cut_marks_truncation() {
        let src = "fn main() { const i 0 \nloop: add i i 1 \n jmp loop \n}";
        let r = explored(src, 8);
        assert!(r.truncated);
        assert_eq!(r.full_runs, 0);
        assert!(r.runs.iter().all(|run| run.cut));
    }

    #[test]
    fn exploration_is_deterministic() {
        let src = "fn main() { spawn a f \n spawn b f \n return }\n\
                   fn f() { emit 1 \n return }";
        let a = explored(src, 16);
        let b = explored(src, 16);
        assert_eq!(a.states_visited, b.states_visited);
        assert_eq!(a.full_runs, b.full_runs);
        assert_eq!(a.traces, b.traces);
        assert_eq!(a.runs, b.runs);
    }

    #[test]
    fn states_visited_monotone_in_depth() {
        let src = "fn main() { spawn a f \n spawn b f \n return }\n\
                   fn f() { emit 1 \n emit 2 \n return }";
        let mut prev = 0;
        for depth in [1usize, 2, 4, 8, 16, 32] {
            let r = explored(src, depth);
            assert!(r.states_visited >= prev);
            prev = r.states_visited;
        }
    }
}
