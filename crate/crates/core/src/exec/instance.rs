//! Function instances: the unit every scheduler chooses between. Method
//! activations inside objects are instances too; they live in their
//! object's activation list rather than the global map.

use std::collections::{BTreeMap, VecDeque};

use crate::value::{InstanceId, Value};

/// Which function definition an instance executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FnRef {
    /// Index into the program's free function list.
    Free(usize),
    /// Method `method` of object definition `object_def`.
    Method { object_def: usize, method: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockReason {
    /// Waiting on `recv` with an empty mailbox.
    Recv,
    /// Waiting for a synchronous `call` to return.
    Call,
    /// Waiting for a synchronous `req` reply.
    Req,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Status {
    Runnable,
    Blocked(BlockReason),
    Finished(Value),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub id: InstanceId,
    pub fn_ref: FnRef,
    /// Local state; persists across steps for the lifetime of the instance.
    pub locals: BTreeMap<String, Value>,
    /// Instruction pointer into the function body.
    pub ip: usize,
    pub status: Status,
    /// FIFO mailbox in global arrival order.
    pub mailbox: VecDeque<Value>,
    /// Reply destination for a synchronous `call` (set on the callee) or a
    /// synchronous `req` (set on the activation).
    pub waiting_caller: Option<(InstanceId, String)>,
}

impl Instance {
    pub fn new(id: InstanceId, fn_ref: FnRef, locals: BTreeMap<String, Value>) -> Self {
        Instance {
            id,
            fn_ref,
            locals,
            ip: 0,
            status: Status::Runnable,
            mailbox: VecDeque::new(),
            waiting_caller: None,
        }
    }

    pub fn is_runnable(&self) -> bool {
        self.status == Status::Runnable
    }

    pub fn is_finished(&self) -> bool {
        matches!(self.status, Status::Finished(_))
    }
}
