//! Scheduling policies and whole-program runs.
//!
//! A policy is a deterministic decision function over the configuration
//! and its own private state. Replays are exact: the realized choice list
//! of any run, fed back through [`SchedulerPolicy::Script`], reproduces
//! the same trace and final configuration bit for bit.
//!
//! The random policy uses SplitMix64, fixed here so independent
//! implementations replay identically:
//!
//! ```text
//! state += 0x9E3779B97F4A7C15
//! z = state
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! z = z ^ (z >> 31)
//! ```
//!
//! and the choice index is `z mod |runnable|`.

use std::collections::VecDeque;

use crate::exec::{BlockReason, Configuration, EventKind, Status, StepError, ENTRY_ID};
use crate::ir::{Diagnostic, ProgramDef};
use crate::value::{InstanceId, Value};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SchedulerPolicy {
    /// Stack discipline: `call`, `spawn` and requests run the new work to
    /// completion at the creation point. A `recv` on an empty mailbox is an
    /// immediate deadlock, since nothing else would ever run first.
    Inline,
    /// Cycle ordinals ascending, giving each chosen id up to `quantum`
    /// consecutive steps while it stays runnable.
    RoundRobin { quantum: u32 },
    /// Uniform draws from the runnable set via SplitMix64.
    Random { seed: u64 },
    /// Replay a fixed choice list; fails loudly on a non-runnable choice.
    Script { choices: Vec<InstanceId> },
}

impl SchedulerPolicy {
    pub fn rr(quantum: u32) -> Self {
        SchedulerPolicy::RoundRobin { quantum: quantum.max(1) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Finished(Value),
    Deadlock,
    Fault(crate::exec::FaultKind),
    StepLimit,
}

impl Verdict {
    pub fn text(&self) -> String {
        match self {
            Verdict::Finished(_) => "finished".to_string(),
            Verdict::Deadlock => "deadlock".to_string(),
            Verdict::Fault(k) => format!("fault:{}", k.as_str()),
            Verdict::StepLimit => "step-limit".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub verdict: Verdict,
    pub final_config: Configuration,
    /// The realized choice list; replayable via `Script`.
    pub schedule: Vec<InstanceId>,
}

impl RunResult {
    pub fn observable(&self) -> Vec<Value> {
        self.final_config.observable_trace()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RunError {
    #[error("program failed validation ({} diagnostic(s))", .0.len())]
    InvalidProgram(Vec<Diagnostic>),
    #[error("SCRIPT_CHOICE_NOT_RUNNABLE: step {step} chose {chosen}")]
    ScriptChoiceNotRunnable { step: usize, chosen: InstanceId },
}

/// SplitMix64; the documented scheduler PRNG.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }
}

enum PolicyState {
    Inline { stack: Vec<InstanceId> },
    RoundRobin { quantum: u32, last: Option<InstanceId>, used: u32 },
    Random(SplitMix64),
    Script { choices: VecDeque<InstanceId> },
}

enum Decision {
    Choose(InstanceId),
    /// Script exhausted with work remaining.
    OutOfScript,
    /// Inline stack drained: the run is over from the policy's view.
    InlineDone,
    /// Inline hit a blocked frame it can never unblock.
    InlineDeadlock,
}

/// Run `program` under `policy` for at most `step_limit` steps.
pub fn run(
    program: &ProgramDef,
    policy: &SchedulerPolicy,
    step_limit: usize,
    strict_oo: bool,
) -> Result<RunResult, RunError> {
    let cfg = Configuration::init(program, strict_oo).map_err(RunError::InvalidProgram)?;
    drive(cfg, policy, step_limit)
}

/// Replay a schedule obtained from a previous run of the same program.
pub fn replay(program: &ProgramDef, schedule: &[InstanceId]) -> Result<RunResult, RunError> {
    run(
        program,
        &SchedulerPolicy::Script { choices: schedule.to_vec() },
        schedule.len().max(1),
        false,
    )
}

/// Compute the terminal verdict of a configuration with an empty runnable
/// set, appending the deadlock event when something is still waiting.
/// Shared by the run loop and the explorer so their leaves agree.
pub(crate) fn finalize_terminal(cfg: &mut Configuration) -> Verdict {
    if cfg.is_deadlocked() {
        let step = cfg.step_count();
        cfg.push_event(EventKind::Deadlock, step);
        Verdict::Deadlock
    } else {
        match cfg.entry_result() {
            Some(v) => Verdict::Finished(v),
            // Entry not finished yet nothing is blocked or queued: the
            // entry instance itself must be runnable, which contradicts an
            // empty runnable set. Unreachable for initialized programs.
            None => Verdict::Deadlock,
        }
    }
}

fn drive(
    mut cfg: Configuration,
    policy: &SchedulerPolicy,
    step_limit: usize,
) -> Result<RunResult, RunError> {
    let mut state = match policy {
        SchedulerPolicy::Inline => PolicyState::Inline { stack: vec![ENTRY_ID] },
        SchedulerPolicy::RoundRobin { quantum } => {
            PolicyState::RoundRobin { quantum: (*quantum).max(1), last: None, used: 0 }
        }
        SchedulerPolicy::Random { seed } => PolicyState::Random(SplitMix64::new(*seed)),
        SchedulerPolicy::Script { choices } => {
            PolicyState::Script { choices: choices.iter().copied().collect() }
        }
    };
    let mut schedule: Vec<InstanceId> = Vec::new();

    loop {
        let runnable = cfg.runnable();
        if runnable.is_empty() {
            let verdict = finalize_terminal(&mut cfg);
            return Ok(RunResult { verdict, final_config: cfg, schedule });
        }
        if schedule.len() >= step_limit {
            return Ok(RunResult { verdict: Verdict::StepLimit, final_config: cfg, schedule });
        }
        let choice = match choose(&mut state, &cfg, &runnable) {
            Decision::Choose(id) => id,
            Decision::OutOfScript => {
                return Ok(RunResult { verdict: Verdict::StepLimit, final_config: cfg, schedule });
            }
            Decision::InlineDone => {
                let verdict = match cfg.entry_result() {
                    Some(v) => Verdict::Finished(v),
                    None => Verdict::Deadlock,
                };
                return Ok(RunResult { verdict, final_config: cfg, schedule });
            }
            Decision::InlineDeadlock => {
                return Ok(RunResult { verdict: Verdict::Deadlock, final_config: cfg, schedule });
            }
        };
        if !runnable.contains(&choice) {
            return Err(RunError::ScriptChoiceNotRunnable { step: schedule.len(), chosen: choice });
        }
        schedule.push(choice);
        let before_next_id = cfg.next_id();
        let queue_lens: Option<Vec<(InstanceId, usize)>> = match &state {
            PolicyState::Inline { .. } => {
                Some(cfg.objects().iter().map(|(id, o)| (*id, o.queue.len())).collect())
            }
            _ => None,
        };
        match cfg.step_in_place(choice) {
            Ok(()) => {}
            Err(StepError::Fault { kind, .. }) => {
                return Ok(RunResult { verdict: Verdict::Fault(kind), final_config: cfg, schedule });
            }
            Err(StepError::NotRunnable { chosen }) => {
                return Err(RunError::ScriptChoiceNotRunnable {
                    step: schedule.len() - 1,
                    chosen,
                });
            }
        }
        if let PolicyState::Inline { stack } = &mut state {
            inline_after_step(stack, &cfg, before_next_id, &queue_lens.expect("inline"), choice);
        }
    }
}

fn choose(state: &mut PolicyState, cfg: &Configuration, runnable: &[InstanceId]) -> Decision {
    match state {
        PolicyState::Inline { stack } => inline_choose(stack, cfg),
        PolicyState::RoundRobin { quantum, last, used } => {
            if let Some(l) = *last {
                if *used < *quantum && runnable.contains(&l) {
                    *used += 1;
                    return Decision::Choose(l);
                }
                let next = runnable
                    .iter()
                    .copied()
                    .find(|id| *id > l)
                    .unwrap_or(runnable[0]);
                *last = Some(next);
                *used = 1;
                Decision::Choose(next)
            } else {
                *last = Some(runnable[0]);
                *used = 1;
                Decision::Choose(runnable[0])
            }
        }
        PolicyState::Random(rng) => {
            let idx = (rng.next_u64() % runnable.len() as u64) as usize;
            Decision::Choose(runnable[idx])
        }
        PolicyState::Script { choices } => match choices.pop_front() {
            Some(id) => Decision::Choose(id),
            None => Decision::OutOfScript,
        },
    }
}

/// The inline stack rule: run the top frame; pop frames whose work is
/// done; report deadlock when the top can never proceed.
fn inline_choose(stack: &mut Vec<InstanceId>, cfg: &Configuration) -> Decision {
    loop {
        let Some(&top) = stack.last() else {
            return Decision::InlineDone;
        };
        if let Some(inst) = cfg.instances().get(&top) {
            return match inst.status {
                Status::Runnable => Decision::Choose(top),
                Status::Finished(_) => {
                    stack.pop();
                    continue;
                }
                Status::Blocked(BlockReason::Recv) => Decision::InlineDeadlock,
                // Waiting on a callee or a request: the frame above will
                // run it. If nothing is above, the nested work vanished
                // without unblocking us, which cannot happen.
                Status::Blocked(_) => Decision::InlineDeadlock,
            };
        }
        if let Some(obj) = cfg.objects().get(&top) {
            let policy = cfg.program().objects[obj.def_index].policy;
            if obj.has_enabled_step(policy) {
                return Decision::Choose(top);
            }
            if obj.activations.is_empty() && obj.queue.is_empty() {
                // This request frame is fully drained.
                stack.pop();
                continue;
            }
            // Blocked activations (or unstartable queued work) that only
            // this frame could run: stuck for good.
            return Decision::InlineDeadlock;
        }
        // Mechanisms are never pushed; a stale id would be a bug.
        return Decision::InlineDeadlock;
    }
}

/// After a step under inline scheduling, push newly created function
/// instances and newly requested objects so they run to completion at
/// their creation point.
fn inline_after_step(
    stack: &mut Vec<InstanceId>,
    cfg: &Configuration,
    before_next_id: u64,
    queue_lens_before: &[(InstanceId, usize)],
    _chosen: InstanceId,
) {
    for ord in before_next_id..cfg.next_id() {
        let id = InstanceId(ord);
        if cfg.instances().contains_key(&id) {
            stack.push(id);
        }
    }
    for (oid, before_len) in queue_lens_before {
        if let Some(obj) = cfg.objects().get(oid) {
            if obj.queue.len() > *before_len {
                stack.push(*oid);
            }
        }
    }
    // Objects created this step start with empty queues; nothing to push.
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_program;

    fn prog(src: &str) -> ProgramDef {
        parse_program(src).unwrap()
    }

    const P1: &str = "fn main() { emit 1 \n emit 2 \n return }";

    #[test]
    fn inline_runs_single_function() {
        let p = prog(P1);
        let r = run(&p, &SchedulerPolicy::Inline, 100, false).unwrap();
        assert_eq!(r.verdict, Verdict::Finished(Value::Unit));
        assert_eq!(r.observable(), vec![Value::Int(1), Value::Int(2)]);
    }

    #[test]
    fn inline_runs_spawn_to_completion() {
        let src = "fn main() { spawn a f \n spawn b g \n return }\n\
                   fn f() { emit 1 \n return }\n\
                   fn g() { emit 2 \n return }";
        let p = prog(src);
        let r = run(&p, &SchedulerPolicy::Inline, 100, false).unwrap();
        assert_eq!(r.verdict, Verdict::Finished(Value::Unit));
        assert_eq!(r.observable(), vec![Value::Int(1), Value::Int(2)]);
    }

    #[test]
    fn inline_recv_on_empty_mailbox_deadlocks() {
        let src = "fn main() { self me \n spawn p partner me \n send p 1 \n recv x \n emit x \n return }\n\
                   fn partner(parent) { recv v \n add v v 1 \n send parent v \n return }";
        let p = prog(src);
        let r = run(&p, &SchedulerPolicy::Inline, 100, false).unwrap();
        assert_eq!(r.verdict, Verdict::Deadlock);
    }

    #[test]
    fn round_robin_single_instance_is_straight_line() {
        let p = prog(P1);
        let r = run(&p, &SchedulerPolicy::rr(1), 100, false).unwrap();
        assert_eq!(r.verdict, Verdict::Finished(Value::Unit));
        assert_eq!(r.observable(), vec![Value::Int(1), Value::Int(2)]);
        let inline = run(&p, &SchedulerPolicy::Inline, 100, false).unwrap();
        assert_eq!(r.observable(), inline.observable());
    }

    #[test]
    fn random_runs_replay_identically() {
        let src = "fn main() { spawn a f \n spawn b g \n return }\n\
                   fn f() { emit 1 \n return }\n\
                   fn g() { emit 2 \n return }";
        let p = prog(src);
        let a = run(&p, &SchedulerPolicy::Random { seed: 42 }, 100, false).unwrap();
        let b = run(&p, &SchedulerPolicy::Random { seed: 42 }, 100, false).unwrap();
        assert_eq!(a, b);
        let c = replay(&p, &a.schedule).unwrap();
        assert_eq!(a.final_config, c.final_config);
        assert_eq!(a.verdict, c.verdict);
    }

    #[test]
    fn truncated_replay_hits_step_limit() {
        let p = prog(P1);
        let full = run(&p, &SchedulerPolicy::rr(1), 100, false).unwrap();
        assert!(full.schedule.len() >= 2);
        let r = replay(&p, &full.schedule[..full.schedule.len() - 1]).unwrap();
        assert_eq!(r.verdict, Verdict::StepLimit);
    }

    #[test]
    fn replay_against_wrong_program_fails_loudly() {
        let p1 = prog(P1);
        let p2 = prog("fn main() { spawn a f \n recv x \n return }\nfn f() { emit 1 \n return }");
        let r = run(&p2, &SchedulerPolicy::rr(1), 100, false).unwrap();
        let err = replay(&p1, &r.schedule).unwrap_err();
        assert!(matches!(err, RunError::ScriptChoiceNotRunnable { .. }));
    }

    #[test]
    fn step_limit_is_a_verdict_not_an_error() {
        let src = "fn main() { const i 0 \nloop: add i i 1 \n jmp loop \n}";
        let p = prog(src);
        let r = run(&p, &SchedulerPolicy::rr(1), 10, false).unwrap();
        assert_eq!(r.verdict, Verdict::StepLimit);
        assert_eq!(r.schedule.len(), 10);
    }

    #[test]
    fn splitmix_matches_reference_outputs() {
        let mut zero = SplitMix64::new(0);
        assert_eq!(zero.next_u64(), 0xE220A8397B1DCDAF);
        assert_eq!(zero.next_u64(), 0x6E789E6AA1B965F4);
        assert_eq!(zero.next_u64(), 0x06C45D188009454F);
        let mut seven = SplitMix64::new(7);
        assert_eq!(seven.next_u64(), 0x63CBE1E459320DD7);
        assert_eq!(seven.next_u64(), 0x044C3CD7F43C661C);
    }
}
