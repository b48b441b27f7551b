//! Object instances and two-level scheduling. The global scheduler picks
//! an object; the object then either starts a queued request or steps one
//! of its live method activations, according to its own policy.

use std::collections::{BTreeMap, VecDeque};

use crate::exec::{Configuration, FaultKind, Instance, Status, StepError};
use crate::ir::MethodPolicy;
use crate::value::{InstanceId, Value};

/// A queued method request. `reply_to` is present for synchronous `req`
/// and names where the reply value lands in the requester's frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Request {
    pub method: String,
    pub args: Vec<Value>,
    pub reply_to: Option<(InstanceId, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectInstance {
    pub id: InstanceId,
    /// Index into the program's object definitions.
    pub def_index: usize,
    /// State variables; persist for the lifetime of the object.
    pub state: BTreeMap<String, i64>,
    /// Requests dequeue FIFO.
    pub queue: VecDeque<Request>,
    /// Live method activations in creation order.
    pub activations: Vec<Instance>,
    /// Next activation position to try when stepping round-robin.
    pub rr_cursor: usize,
}

impl ObjectInstance {
    pub fn new(id: InstanceId, def_index: usize, statevars: &[(String, i64)]) -> Self {
        ObjectInstance {
            id,
            def_index,
            state: statevars.iter().cloned().collect(),
            queue: VecDeque::new(),
            activations: Vec::new(),
            rr_cursor: 0,
        }
    }

    /// Whether the object's policy allows starting a queued request now.
    pub fn can_start(&self, policy: MethodPolicy) -> bool {
        !self.queue.is_empty()
            && (policy == MethodPolicy::Interleaved || self.activations.is_empty())
    }

    /// Whether the object has any enabled step (start or activation step).
    pub fn has_enabled_step(&self, policy: MethodPolicy) -> bool {
        self.can_start(policy) || self.activations.iter().any(Instance::is_runnable)
    }
}

/// One object step: start a queued request if the policy permits, otherwise
/// step one live activation. Fixed priority: starting beats stepping.
pub(crate) fn object_step(cfg: &mut Configuration, oid: InstanceId) -> Result<(), StepError> {
    let (def_index, policy) = {
        let obj = cfg.objects().get(&oid).expect("object step on object id");
        let def_index = obj.def_index;
        (def_index, cfg.program().objects[def_index].policy)
    };

    let can_start = cfg.objects().get(&oid).expect("object").can_start(policy);
    if can_start {
        return start_request(cfg, oid, def_index);
    }

    // Pick the next runnable activation at or after the cursor.
    let idx = {
        let obj = cfg.objects().get(&oid).expect("object");
        let len = obj.activations.len();
        let mut found = None;
        for i in 0..len {
            let pos = (obj.rr_cursor + i) % len.max(1);
            if obj.activations[pos].is_runnable() {
                found = Some(pos);
                break;
            }
        }
        found.ok_or(StepError::NotRunnable { chosen: oid })?
    };

    let mut act = cfg
        .objects_mut()
        .get_mut(&oid)
        .expect("object")
        .activations
        .remove(idx);
    let res = crate::exec::step::exec_instr(cfg, &mut act, Some(oid));
    let finished = matches!(act.status, Status::Finished(_));
    let obj = cfg.objects_mut().get_mut(&oid).expect("object");
    match &res {
        Ok(()) if finished => {
            // Retire. Positions after idx shifted down by the removal.
            if obj.rr_cursor > idx {
                obj.rr_cursor -= 1;
            }
            if obj.activations.is_empty() {
                obj.rr_cursor = 0;
            } else {
                obj.rr_cursor %= obj.activations.len();
            }
        }
        Ok(()) => {
            obj.activations.insert(idx, act);
            obj.rr_cursor = (idx + 1) % obj.activations.len();
        }
        Err(_) => {
            // Faults leave the configuration untouched; restore the
            // activation exactly where it was.
            obj.activations.insert(idx, act);
        }
    }
    res
}

fn start_request(
    cfg: &mut Configuration,
    oid: InstanceId,
    def_index: usize,
) -> Result<(), StepError> {
    let program = cfg.program_rc();
    let def = &program.objects[def_index];
    let (method_index, mdef, req_ok) = {
        let obj = cfg.objects().get(&oid).expect("object");
        let req = obj.queue.front().expect("can_start checked queue");
        match def.method(&req.method) {
            Some((mi, mdef)) if mdef.params.len() == req.args.len() => (mi, mdef, true),
            _ => (0, &def.methods[0], false),
        }
    };
    // Requests are checked at issue time; a mismatch here means a scripted
    // replay drove an unvalidated program.
    if !req_ok {
        let obj = cfg.objects().get(&oid).expect("object");
        let req = obj.queue.front().expect("nonempty");
        return Err(StepError::Fault {
            kind: FaultKind::ObjProtocol,
            detail: format!("object {oid} cannot service request `{}`", req.method),
        });
    }
    let id = cfg.alloc_id();
    let req = cfg
        .objects_mut()
        .get_mut(&oid)
        .expect("object")
        .queue
        .pop_front()
        .expect("nonempty");
    let locals: BTreeMap<String, Value> =
        mdef.params.iter().cloned().zip(req.args.into_iter()).collect();
    let mut act = Instance::new(
        id,
        crate::exec::FnRef::Method { object_def: def_index, method: method_index },
        locals,
    );
    act.waiting_caller = req.reply_to;
    cfg.objects_mut().get_mut(&oid).expect("object").activations.push(act);
    Ok(())
}
