//! Trace events. `Emit` events form the observable trace; every other kind
//! is a debug event, excluded from observational equivalence but available
//! to the property checkers.

use crate::value::{InstanceId, Symbol, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellOpKind {
    New,
    Read,
    Write,
}

impl CellOpKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CellOpKind::New => "new",
            CellOpKind::Read => "read",
            CellOpKind::Write => "write",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventKind {
    /// Observable effect on the environment.
    Emit { value: Value },
    /// A new function instance created by `spawn` or `call`.
    Spawn { parent: InstanceId, child: InstanceId, fname: Symbol },
    /// Direct message into a mailbox (or a mechanism's request queue).
    Send { src: InstanceId, dst: InstanceId, value: Value },
    /// A mailbox dequeue completing a `recv`.
    Recv { dst: InstanceId, value: Value },
    /// One mechanism service action. `op` is the request symbol serviced
    /// (ACQ, REL, WRITE, READ, ATTACH) or DEFER when the request was moved
    /// to a wait queue. `value` carries the datum for WRITE/READ services.
    MechOp { mech: InstanceId, op: Symbol, party: InstanceId, value: Option<Value> },
    /// A request enqueued on an object.
    ObjReq { obj: InstanceId, method: Symbol, requester: InstanceId },
    /// Raw shared-cell access by a guest instruction.
    CellOp { actor: InstanceId, cell: u64, op: CellOpKind, value: i64 },
    /// Appended when the runnable set empties while something is blocked.
    Deadlock,
    /// Appended when the entry instance returns.
    Halt { result: Value },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    /// Index of the step that produced this event (0-based).
    pub step: usize,
    pub kind: EventKind,
}
