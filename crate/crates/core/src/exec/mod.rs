//! Configurations and the single-step transition relation every scheduler
//! drives.
//!
//! A [`Configuration`] is one complete simulation state: instances, raw
//! cells, mechanisms, objects, the identity counter, the event trace and
//! the step counter. `step` is a pure function of `(configuration, chosen
//! id)`; the runnable set is a pure function of the configuration. The
//! simulator is single threaded; concurrency exists only as the choice of
//! which id steps next.

mod event;
mod instance;
pub(crate) mod step;

use std::collections::BTreeMap;
use std::fmt;
use std::rc::Rc;

pub use event::{CellOpKind, Event, EventKind};
pub use instance::{BlockReason, FnRef, Instance, Status};

use crate::ir::{validate, Diagnostic, ProgramDef};
use crate::mech::MechanismInstance;
use crate::object::ObjectInstance;
use crate::value::{InstanceId, Value};

/// Why a run ended abnormally. Faults terminate the run with a verdict;
/// they are never silently ignored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultKind {
    /// Operating on a value of the wrong shape (arithmetic on refs,
    /// sending to something that is not an instance, a bad cell id).
    Type,
    /// A message addressed to a finished or retired instance.
    SendToFinished,
    /// Lock release by a non-holder.
    LockProtocol,
    /// Malformed or out-of-protocol mechanism request.
    MechProtocol,
    /// Bad object request: unknown method, wrong arity, or a request
    /// aimed at something that is not an object.
    ObjProtocol,
}

impl FaultKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FaultKind::Type => "TYPE_FAULT",
            FaultKind::SendToFinished => "SEND_TO_FINISHED",
            FaultKind::LockProtocol => "LOCK_PROTOCOL",
            FaultKind::MechProtocol => "MECH_PROTOCOL",
            FaultKind::ObjProtocol => "OBJ_PROTOCOL",
        }
    }
}

impl fmt::Display for FaultKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StepError {
    #[error("STEP_NOT_RUNNABLE: {chosen} is not in the runnable set")]
    NotRunnable { chosen: InstanceId },
    #[error("{kind}: {detail}")]
    Fault { kind: FaultKind, detail: String },
}

impl StepError {
    pub(crate) fn fault(kind: FaultKind, detail: impl Into<String>) -> Self {
        StepError::Fault { kind, detail: detail.into() }
    }
}

/// Complete simulation state. Configurations are value-like: they can be
/// cloned freely and compared structurally (the trace is part of the
/// state).
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    program: Rc<ProgramDef>,
    instances: BTreeMap<InstanceId, Instance>,
    /// Raw shared integer cells, keyed by allocation order.
    cells: BTreeMap<u64, i64>,
    mechanisms: BTreeMap<InstanceId, MechanismInstance>,
    objects: BTreeMap<InstanceId, ObjectInstance>,
    next_id: u64,
    trace: Vec<Event>,
    step_count: usize,
}

/// The entry instance always has ordinal 0.
pub const ENTRY_ID: InstanceId = InstanceId(0);

impl Configuration {
    /// Instantiate the entry function. The program must validate first;
    /// unvalidated programs are rejected with their diagnostics.
    pub fn init(program: &ProgramDef, strict_oo: bool) -> Result<Configuration, Vec<Diagnostic>> {
        let diags = validate(program, strict_oo);
        if !diags.is_empty() {
            return Err(diags);
        }
        let (entry_index, _) = program.function(&program.entry).expect("validated entry");
        let entry = Instance::new(ENTRY_ID, FnRef::Free(entry_index), BTreeMap::new());
        let mut instances = BTreeMap::new();
        instances.insert(ENTRY_ID, entry);
        Ok(Configuration {
            program: Rc::new(program.clone()),
            instances,
            cells: BTreeMap::new(),
            mechanisms: BTreeMap::new(),
            objects: BTreeMap::new(),
            next_id: 1,
            trace: Vec::new(),
            step_count: 0,
        })
    }

    pub fn program(&self) -> &ProgramDef {
        &self.program
    }

    pub(crate) fn program_rc(&self) -> Rc<ProgramDef> {
        Rc::clone(&self.program)
    }

    pub fn instances(&self) -> &BTreeMap<InstanceId, Instance> {
        &self.instances
    }

    pub fn cells(&self) -> &BTreeMap<u64, i64> {
        &self.cells
    }

    pub(crate) fn cells_mut(&mut self) -> &mut BTreeMap<u64, i64> {
        &mut self.cells
    }

    pub fn mechanisms(&self) -> &BTreeMap<InstanceId, MechanismInstance> {
        &self.mechanisms
    }

    pub fn objects(&self) -> &BTreeMap<InstanceId, ObjectInstance> {
        &self.objects
    }

    pub(crate) fn objects_mut(&mut self) -> &mut BTreeMap<InstanceId, ObjectInstance> {
        &mut self.objects
    }

    pub fn next_id(&self) -> u64 {
        self.next_id
    }

    pub fn trace(&self) -> &[Event] {
        &self.trace
    }

    pub fn step_count(&self) -> usize {
        self.step_count
    }

    pub(crate) fn alloc_id(&mut self) -> InstanceId {
        let id = InstanceId(self.next_id);
        self.next_id += 1;
        id
    }

    pub(crate) fn push_event(&mut self, kind: EventKind, step: usize) {
        self.trace.push(Event { step, kind });
    }

    pub(crate) fn insert_instance(&mut self, inst: Instance) {
        self.instances.insert(inst.id, inst);
    }

    pub(crate) fn insert_mechanism(&mut self, mech: MechanismInstance) {
        self.mechanisms.insert(mech.id, mech);
    }

    pub(crate) fn insert_object(&mut self, obj: ObjectInstance) {
        self.objects.insert(obj.id, obj);
    }

    /// Find any instance by id: free instances first, then method
    /// activations inside objects.
    pub fn find_instance(&self, id: InstanceId) -> Option<&Instance> {
        self.instances.get(&id).or_else(|| {
            self.objects
                .values()
                .flat_map(|o| o.activations.iter())
                .find(|a| a.id == id)
        })
    }

    pub(crate) fn find_instance_mut(&mut self, id: InstanceId) -> Option<&mut Instance> {
        if self.instances.contains_key(&id) {
            return self.instances.get_mut(&id);
        }
        self.objects
            .values_mut()
            .flat_map(|o| o.activations.iter_mut())
            .find(|a| a.id == id)
    }

    /// The scheduler's choice set: every runnable free instance, every
    /// mechanism with an enabled internal action, and every object that can
    /// start a request or step an activation. Ordered by ordinal. Pure.
    pub fn runnable(&self) -> Vec<InstanceId> {
        let mut out: Vec<InstanceId> = Vec::new();
        for (id, inst) in &self.instances {
            if inst.is_runnable() {
                out.push(*id);
            }
        }
        for (id, mech) in &self.mechanisms {
            if mech.has_enabled_step() {
                out.push(*id);
            }
        }
        for (id, obj) in &self.objects {
            let policy = self.program.objects[obj.def_index].policy;
            if obj.has_enabled_step(policy) {
                out.push(*id);
            }
        }
        out.sort();
        out
    }

    /// True when nothing can ever run again and something is still waiting.
    pub fn is_deadlocked(&self) -> bool {
        self.runnable().is_empty() && self.has_blocked_work()
    }

    fn has_blocked_work(&self) -> bool {
        let blocked_free = self
            .instances
            .values()
            .any(|i| matches!(i.status, Status::Blocked(_)));
        let blocked_act = self
            .objects
            .values()
            .flat_map(|o| o.activations.iter())
            .any(|a| matches!(a.status, Status::Blocked(_)));
        let queued = self.objects.values().any(|o| !o.queue.is_empty());
        blocked_free || blocked_act || queued
    }

    /// The entry instance's result, once finished.
    pub fn entry_result(&self) -> Option<Value> {
        match &self.instances.get(&ENTRY_ID)?.status {
            Status::Finished(v) => Some(v.clone()),
            _ => None,
        }
    }

    /// The ordered `emit` payloads: the observable behaviour of the run.
    pub fn observable_trace(&self) -> Vec<Value> {
        self.trace
            .iter()
            .filter_map(|e| match &e.kind {
                EventKind::Emit { value } => Some(value.clone()),
                _ => None,
            })
            .collect()
    }

    /// Execute exactly one step of `chosen`. Pure: the receiver is left
    /// untouched and the successor is returned. Faults carry a verdict kind
    /// and leave no partial effects.
    pub fn step(&self, chosen: InstanceId) -> Result<Configuration, StepError> {
        let mut next = self.clone();
        next.step_in_place(chosen)?;
        Ok(next)
    }

    /// In-place variant used by the run loop and the explorer. On `Err`
    /// the configuration is unchanged.
    pub(crate) fn step_in_place(&mut self, chosen: InstanceId) -> Result<(), StepError> {
        if !self.runnable().contains(&chosen) {
            return Err(StepError::NotRunnable { chosen });
        }
        let res = if self.instances.contains_key(&chosen) {
            let mut inst = self.instances.remove(&chosen).expect("checked");
            let r = step::exec_instr(self, &mut inst, None);
            self.instances.insert(chosen, inst);
            r
        } else if self.mechanisms.contains_key(&chosen) {
            let mut mech = self.mechanisms.remove(&chosen).expect("checked");
            let r = crate::mech::service_step(self, &mut mech);
            self.mechanisms.insert(chosen, mech);
            r
        } else {
            crate::object::object_step(self, chosen)
        };
        if res.is_ok() {
            self.step_count += 1;
        }
        res
    }

    /// Deliverability check for a direct send; run before any state is
    /// mutated so faults leave the step effect-free. `detached` is the
    /// currently executing instance when it has been taken out of the maps.
    pub(crate) fn check_send_target(
        &self,
        detached: Option<&Instance>,
        dst: InstanceId,
    ) -> Result<(), StepError> {
        if let Some(d) = detached {
            if d.id == dst {
                return if d.is_finished() {
                    Err(StepError::fault(
                        FaultKind::SendToFinished,
                        format!("send to finished instance {dst}"),
                    ))
                } else {
                    Ok(())
                };
            }
        }
        if let Some(inst) = self.find_instance(dst) {
            return if inst.is_finished() {
                Err(StepError::fault(
                    FaultKind::SendToFinished,
                    format!("send to finished instance {dst}"),
                ))
            } else {
                Ok(())
            };
        }
        if self.mechanisms.contains_key(&dst) {
            return Ok(());
        }
        if self.objects.contains_key(&dst) {
            return Err(StepError::fault(
                FaultKind::Type,
                format!("object {dst} accepts requests, not sends"),
            ));
        }
        Err(StepError::fault(
            FaultKind::SendToFinished,
            format!("no live instance {dst}"),
        ))
    }

    /// Deliver a message. Infallible: callers must have passed
    /// `check_send_target`. Appends the `Send` event, enqueues the value,
    /// and wakes a receiver blocked on `recv`.
    pub(crate) fn deliver(
        &mut self,
        detached: Option<&mut Instance>,
        src: InstanceId,
        dst: InstanceId,
        value: Value,
    ) {
        let step = self.step_count;
        self.push_event(EventKind::Send { src, dst, value: value.clone() }, step);
        if let Some(d) = detached {
            if d.id == dst {
                d.mailbox.push_back(value);
                if d.status == Status::Blocked(BlockReason::Recv) {
                    d.status = Status::Runnable;
                }
                return;
            }
        }
        if let Some(mech) = self.mechanisms.get_mut(&dst) {
            mech.inbox.push_back(value);
            return;
        }
        let inst = self.find_instance_mut(dst).expect("checked target");
        inst.mailbox.push_back(value);
        if inst.status == Status::Blocked(BlockReason::Recv) {
            inst.status = Status::Runnable;
        }
    }
}
