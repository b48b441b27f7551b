//! Native communication mechanisms. A mechanism is a scheduler-visible
//! instance: it takes steps only when chosen, exactly when it has an
//! enabled internal action, and it talks to clients purely through direct
//! sends. Replies always go to the reference embedded in the request, so a
//! mechanism never needs to know who physically delivered a message.
//!
//! Request shapes (fixed; corpus programs and golden traces depend on
//! them):
//!
//! * lock:       `(:ACQ, ref)`, `(:REL, ref)`; replies `:GRANT`, `:OK`.
//! * basiccomm:  `(:WRITE, (ref, v))`, `(:READ, ref)`; replies `:OK`, `v`.
//! * statuschan: same shapes as basiccomm, with blocking by deferral.
//! * bidirchan:  `(:ATTACH, ref)` plus the basiccomm shapes; attach
//!   replies `:A` to the first party and `:B` to the second.
//!
//! One service action per step. Deferred requests are serviced before new
//! inbox traffic, FIFO per role, which keeps grant and delivery order equal
//! to arrival order.

use std::collections::VecDeque;
use std::str::FromStr;

use crate::exec::{Configuration, EventKind, FaultKind, StepError};
use crate::value::{InstanceId, Symbol, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum MechKind {
    Lock,
    BasicComm,
    StatusChan,
    BidirChan,
}

impl MechKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MechKind::Lock => "lock",
            MechKind::BasicComm => "basiccomm",
            MechKind::StatusChan => "statuschan",
            MechKind::BidirChan => "bidirchan",
        }
    }
}

impl FromStr for MechKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "lock" => Ok(MechKind::Lock),
            "basiccomm" => Ok(MechKind::BasicComm),
            "statuschan" => Ok(MechKind::StatusChan),
            "bidirchan" => Ok(MechKind::BidirChan),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BidirSlot {
    Empty,
    /// Written by the first-attached party, readable by the second.
    FullAb,
    /// Written by the second-attached party, readable by the first.
    FullBa,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MechState {
    Lock {
        holder: Option<InstanceId>,
        waiters: VecDeque<InstanceId>,
    },
    /// Bare shared location. Reads return the current value whatever it is;
    /// loss and staleness are possible by design.
    BasicComm { location: Value },
    StatusChan {
        full: bool,
        slot: Value,
        pending_writers: VecDeque<(InstanceId, Value)>,
        pending_readers: VecDeque<InstanceId>,
    },
    BidirChan {
        party_a: Option<InstanceId>,
        party_b: Option<InstanceId>,
        state: BidirSlot,
        slot: Value,
        pending_writes_a: VecDeque<(InstanceId, Value)>,
        pending_writes_b: VecDeque<(InstanceId, Value)>,
        pending_reads_a: VecDeque<InstanceId>,
        pending_reads_b: VecDeque<InstanceId>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MechanismInstance {
    pub id: InstanceId,
    /// Requests in arrival order, not yet examined.
    pub inbox: VecDeque<Value>,
    pub state: MechState,
}

impl MechanismInstance {
    pub fn new(id: InstanceId, kind: MechKind) -> Self {
        let state = match kind {
            MechKind::Lock => MechState::Lock { holder: None, waiters: VecDeque::new() },
            MechKind::BasicComm => MechState::BasicComm { location: Value::Int(0) },
            MechKind::StatusChan => MechState::StatusChan {
                full: false,
                slot: Value::Unit,
                pending_writers: VecDeque::new(),
                pending_readers: VecDeque::new(),
            },
            MechKind::BidirChan => MechState::BidirChan {
                party_a: None,
                party_b: None,
                state: BidirSlot::Empty,
                slot: Value::Unit,
                pending_writes_a: VecDeque::new(),
                pending_writes_b: VecDeque::new(),
                pending_reads_a: VecDeque::new(),
                pending_reads_b: VecDeque::new(),
            },
        };
        MechanismInstance { id, inbox: VecDeque::new(), state }
    }

    pub fn kind(&self) -> MechKind {
        match self.state {
            MechState::Lock { .. } => MechKind::Lock,
            MechState::BasicComm { .. } => MechKind::BasicComm,
            MechState::StatusChan { .. } => MechKind::StatusChan,
            MechState::BidirChan { .. } => MechKind::BidirChan,
        }
    }

    /// True exactly when the mechanism has an enabled internal step, i.e.
    /// when the scheduler may pick it.
    pub fn has_enabled_step(&self) -> bool {
        if !self.inbox.is_empty() {
            return true;
        }
        match &self.state {
            MechState::Lock { holder, waiters } => holder.is_none() && !waiters.is_empty(),
            MechState::BasicComm { .. } => false,
            MechState::StatusChan { full, pending_writers, pending_readers, .. } => {
                (!full && !pending_writers.is_empty()) || (*full && !pending_readers.is_empty())
            }
            MechState::BidirChan {
                state,
                pending_writes_a,
                pending_writes_b,
                pending_reads_a,
                pending_reads_b,
                ..
            } => match state {
                BidirSlot::Empty => !pending_writes_a.is_empty() || !pending_writes_b.is_empty(),
                BidirSlot::FullAb => !pending_reads_b.is_empty(),
                BidirSlot::FullBa => !pending_reads_a.is_empty(),
            },
        }
    }
}

fn sym(name: &str) -> Symbol {
    Symbol::new(name)
}

fn protocol_fault(mech: &MechanismInstance, detail: &str) -> StepError {
    StepError::Fault {
        kind: FaultKind::MechProtocol,
        detail: format!("{} {}: {detail}", mech.kind().as_str(), mech.id),
    }
}

/// Decoded request, shared by all kinds.
enum Request {
    Acq(InstanceId),
    Rel(InstanceId),
    Write(InstanceId, Value),
    Read(InstanceId),
    Attach(InstanceId),
}

fn decode(mech: &MechanismInstance, req: &Value) -> Result<Request, StepError> {
    let (op, body) = req
        .as_pair()
        .ok_or_else(|| protocol_fault(mech, &format!("malformed request {req}")))?;
    let op = op
        .as_sym()
        .ok_or_else(|| protocol_fault(mech, &format!("malformed request {req}")))?;
    match op.as_str() {
        "ACQ" | "REL" | "READ" | "ATTACH" => {
            let r = body
                .as_ref_id()
                .ok_or_else(|| protocol_fault(mech, &format!("{op} needs a requester ref")))?;
            Ok(match op.as_str() {
                "ACQ" => Request::Acq(r),
                "REL" => Request::Rel(r),
                "READ" => Request::Read(r),
                _ => Request::Attach(r),
            })
        }
        "WRITE" => {
            let (r, v) = body
                .as_pair()
                .ok_or_else(|| protocol_fault(mech, "WRITE needs (ref, value)"))?;
            let r = r
                .as_ref_id()
                .ok_or_else(|| protocol_fault(mech, "WRITE needs (ref, value)"))?;
            Ok(Request::Write(r, v.clone()))
        }
        other => Err(protocol_fault(mech, &format!("unknown request op :{other}"))),
    }
}

/// Check that a reply can be delivered before mutating any state. Replying
/// into the mechanism's own inbox is allowed (the mechanism is detached
/// from the map while it steps).
fn check_reply_target(
    cfg: &Configuration,
    mech: &MechanismInstance,
    dst: InstanceId,
) -> Result<(), StepError> {
    if dst == mech.id {
        return Ok(());
    }
    cfg.check_send_target(None, dst)
}

fn reply(cfg: &mut Configuration, mech: &mut MechanismInstance, dst: InstanceId, value: Value) {
    if dst == mech.id {
        let step = cfg.step_count();
        cfg.push_event(EventKind::Send { src: mech.id, dst, value: value.clone() }, step);
        mech.inbox.push_back(value);
    } else {
        cfg.deliver(None, mech.id, dst, value);
    }
}

fn mech_op(
    cfg: &mut Configuration,
    mech: &MechanismInstance,
    op: &str,
    party: InstanceId,
    value: Option<Value>,
) {
    let step = cfg.step_count();
    cfg.push_event(
        EventKind::MechOp { mech: mech.id, op: sym(op), party, value },
        step,
    );
}

/// Perform exactly one service action. The caller has removed `mech` from
/// the configuration and reinserts it afterwards. Faults leave both the
/// configuration and the mechanism untouched.
pub(crate) fn service_step(
    cfg: &mut Configuration,
    mech: &mut MechanismInstance,
) -> Result<(), StepError> {
    // Deferred work first.
    match &mech.state {
        MechState::Lock { holder, waiters } => {
            if holder.is_none() && !waiters.is_empty() {
                let w = *waiters.front().expect("nonempty");
                check_reply_target(cfg, mech, w)?;
                let MechState::Lock { holder, waiters } = &mut mech.state else { unreachable!() };
                waiters.pop_front();
                *holder = Some(w);
                mech_op(cfg, mech, "ACQ", w, None);
                reply(cfg, mech, w, Value::sym("GRANT"));
                return Ok(());
            }
        }
        MechState::StatusChan { full, slot, pending_writers, pending_readers } => {
            if !*full && !pending_writers.is_empty() {
                let (w, v) = pending_writers.front().cloned().expect("nonempty");
                check_reply_target(cfg, mech, w)?;
                let MechState::StatusChan { full, slot, pending_writers, .. } = &mut mech.state
                else {
                    unreachable!()
                };
                pending_writers.pop_front();
                *slot = v.clone();
                *full = true;
                mech_op(cfg, mech, "WRITE", w, Some(v));
                reply(cfg, mech, w, Value::sym("OK"));
                return Ok(());
            }
            if *full && !pending_readers.is_empty() {
                let r = *pending_readers.front().expect("nonempty");
                let v = slot.clone();
                check_reply_target(cfg, mech, r)?;
                let MechState::StatusChan { full, pending_readers, .. } = &mut mech.state else {
                    unreachable!()
                };
                pending_readers.pop_front();
                *full = false;
                mech_op(cfg, mech, "READ", r, Some(v.clone()));
                reply(cfg, mech, r, v);
                return Ok(());
            }
        }
        MechState::BidirChan {
            state,
            slot,
            pending_writes_a,
            pending_writes_b,
            pending_reads_a,
            pending_reads_b,
            ..
        } => {
            enum Deferred {
                WriteA(InstanceId, Value),
                WriteB(InstanceId, Value),
                ReadA(InstanceId),
                ReadB(InstanceId),
            }
            let deferred = match state {
                BidirSlot::Empty => pending_writes_a
                    .front()
                    .map(|(r, v)| Deferred::WriteA(*r, v.clone()))
                    .or_else(|| {
                        pending_writes_b.front().map(|(r, v)| Deferred::WriteB(*r, v.clone()))
                    }),
                BidirSlot::FullAb => pending_reads_b.front().map(|r| Deferred::ReadB(*r)),
                BidirSlot::FullBa => pending_reads_a.front().map(|r| Deferred::ReadA(*r)),
            };
            if let Some(action) = deferred {
                let read_val = slot.clone();
                let who = match &action {
                    Deferred::WriteA(r, _)
                    | Deferred::WriteB(r, _)
                    | Deferred::ReadA(r)
                    | Deferred::ReadB(r) => *r,
                };
                check_reply_target(cfg, mech, who)?;
                let MechState::BidirChan {
                    state,
                    slot,
                    pending_writes_a,
                    pending_writes_b,
                    pending_reads_a,
                    pending_reads_b,
                    ..
                } = &mut mech.state
                else {
                    unreachable!()
                };
                match action {
                    Deferred::WriteA(r, v) => {
                        pending_writes_a.pop_front();
                        *slot = v.clone();
                        *state = BidirSlot::FullAb;
                        mech_op(cfg, mech, "WRITE", r, Some(v));
                        reply(cfg, mech, r, Value::sym("OK"));
                    }
                    Deferred::WriteB(r, v) => {
                        pending_writes_b.pop_front();
                        *slot = v.clone();
                        *state = BidirSlot::FullBa;
                        mech_op(cfg, mech, "WRITE", r, Some(v));
                        reply(cfg, mech, r, Value::sym("OK"));
                    }
                    Deferred::ReadA(r) => {
                        pending_reads_a.pop_front();
                        *state = BidirSlot::Empty;
                        mech_op(cfg, mech, "READ", r, Some(read_val.clone()));
                        reply(cfg, mech, r, read_val);
                    }
                    Deferred::ReadB(r) => {
                        pending_reads_b.pop_front();
                        *state = BidirSlot::Empty;
                        mech_op(cfg, mech, "READ", r, Some(read_val.clone()));
                        reply(cfg, mech, r, read_val);
                    }
                }
                return Ok(());
            }
        }
        MechState::BasicComm { .. } => {}
    }

    // No deferred action applies: examine the inbox head.
    let Some(raw) = mech.inbox.front().cloned() else {
        return Err(StepError::NotRunnable { chosen: mech.id });
    };
    let req = decode(mech, &raw)?;
    match (&mech.state, req) {
        (MechState::Lock { holder, .. }, Request::Acq(r)) => {
            if holder.is_none() {
                check_reply_target(cfg, mech, r)?;
                mech.inbox.pop_front();
                let MechState::Lock { holder, .. } = &mut mech.state else { unreachable!() };
                *holder = Some(r);
                mech_op(cfg, mech, "ACQ", r, None);
                reply(cfg, mech, r, Value::sym("GRANT"));
            } else {
                mech.inbox.pop_front();
                let MechState::Lock { waiters, .. } = &mut mech.state else { unreachable!() };
                waiters.push_back(r);
                mech_op(cfg, mech, "DEFER", r, None);
            }
            Ok(())
        }
        (MechState::Lock { holder, .. }, Request::Rel(r)) => {
            if *holder != Some(r) {
                return Err(StepError::Fault {
                    kind: FaultKind::LockProtocol,
                    detail: format!("release by {r}, holder is {:?}", holder.map(|h| h.0)),
                });
            }
            check_reply_target(cfg, mech, r)?;
            mech.inbox.pop_front();
            let MechState::Lock { holder, .. } = &mut mech.state else { unreachable!() };
            *holder = None;
            mech_op(cfg, mech, "REL", r, None);
            reply(cfg, mech, r, Value::sym("OK"));
            Ok(())
        }
        (MechState::BasicComm { .. }, Request::Write(r, v)) => {
            check_reply_target(cfg, mech, r)?;
            mech.inbox.pop_front();
            let MechState::BasicComm { location } = &mut mech.state else { unreachable!() };
            *location = v.clone();
            mech_op(cfg, mech, "WRITE", r, Some(v));
            reply(cfg, mech, r, Value::sym("OK"));
            Ok(())
        }
        (MechState::BasicComm { location }, Request::Read(r)) => {
            let v = location.clone();
            check_reply_target(cfg, mech, r)?;
            mech.inbox.pop_front();
            mech_op(cfg, mech, "READ", r, Some(v.clone()));
            reply(cfg, mech, r, v);
            Ok(())
        }
        (MechState::StatusChan { full, .. }, Request::Write(r, v)) => {
            if !*full {
                check_reply_target(cfg, mech, r)?;
                mech.inbox.pop_front();
                let MechState::StatusChan { full, slot, .. } = &mut mech.state else {
                    unreachable!()
                };
                *slot = v.clone();
                *full = true;
                mech_op(cfg, mech, "WRITE", r, Some(v));
                reply(cfg, mech, r, Value::sym("OK"));
            } else {
                mech.inbox.pop_front();
                let MechState::StatusChan { pending_writers, .. } = &mut mech.state else {
                    unreachable!()
                };
                pending_writers.push_back((r, v));
                mech_op(cfg, mech, "DEFER", r, None);
            }
            Ok(())
        }
        (MechState::StatusChan { full, slot, .. }, Request::Read(r)) => {
            if *full {
                let v = slot.clone();
                check_reply_target(cfg, mech, r)?;
                mech.inbox.pop_front();
                let MechState::StatusChan { full, .. } = &mut mech.state else { unreachable!() };
                *full = false;
                mech_op(cfg, mech, "READ", r, Some(v.clone()));
                reply(cfg, mech, r, v);
            } else {
                mech.inbox.pop_front();
                let MechState::StatusChan { pending_readers, .. } = &mut mech.state else {
                    unreachable!()
                };
                pending_readers.push_back(r);
                mech_op(cfg, mech, "DEFER", r, None);
            }
            Ok(())
        }
        (MechState::BidirChan { party_a, party_b, .. }, Request::Attach(r)) => {
            if party_a.is_none() {
                check_reply_target(cfg, mech, r)?;
                mech.inbox.pop_front();
                let MechState::BidirChan { party_a, .. } = &mut mech.state else { unreachable!() };
                *party_a = Some(r);
                mech_op(cfg, mech, "ATTACH", r, None);
                reply(cfg, mech, r, Value::sym("A"));
            } else if party_b.is_none() {
                check_reply_target(cfg, mech, r)?;
                mech.inbox.pop_front();
                let MechState::BidirChan { party_b, .. } = &mut mech.state else { unreachable!() };
                *party_b = Some(r);
                mech_op(cfg, mech, "ATTACH", r, None);
                reply(cfg, mech, r, Value::sym("B"));
            } else {
                return Err(protocol_fault(mech, &format!("third attach by {r}")));
            }
            Ok(())
        }
        (MechState::BidirChan { party_a, party_b, state, .. }, Request::Write(r, v)) => {
            let is_a = *party_a == Some(r);
            let is_b = *party_b == Some(r);
            if !is_a && !is_b {
                return Err(protocol_fault(mech, &format!("write by unattached {r}")));
            }
            if *state == BidirSlot::Empty {
                check_reply_target(cfg, mech, r)?;
                mech.inbox.pop_front();
                let MechState::BidirChan { state, slot, .. } = &mut mech.state else {
                    unreachable!()
                };
                *slot = v.clone();
                *state = if is_a { BidirSlot::FullAb } else { BidirSlot::FullBa };
                mech_op(cfg, mech, "WRITE", r, Some(v));
                reply(cfg, mech, r, Value::sym("OK"));
            } else {
                mech.inbox.pop_front();
                let MechState::BidirChan { pending_writes_a, pending_writes_b, .. } =
                    &mut mech.state
                else {
                    unreachable!()
                };
                if is_a {
                    pending_writes_a.push_back((r, v));
                } else {
                    pending_writes_b.push_back((r, v));
                }
                mech_op(cfg, mech, "DEFER", r, None);
            }
            Ok(())
        }
        (MechState::BidirChan { party_a, party_b, state, slot, .. }, Request::Read(r)) => {
            let is_a = *party_a == Some(r);
            let is_b = *party_b == Some(r);
            if !is_a && !is_b {
                return Err(protocol_fault(mech, &format!("read by unattached {r}")));
            }
            let serviceable = (*state == BidirSlot::FullAb && is_b)
                || (*state == BidirSlot::FullBa && is_a);
            if serviceable {
                let v = slot.clone();
                check_reply_target(cfg, mech, r)?;
                mech.inbox.pop_front();
                let MechState::BidirChan { state, .. } = &mut mech.state else { unreachable!() };
                *state = BidirSlot::Empty;
                mech_op(cfg, mech, "READ", r, Some(v.clone()));
                reply(cfg, mech, r, v);
            } else {
                mech.inbox.pop_front();
                let MechState::BidirChan { pending_reads_a, pending_reads_b, .. } =
                    &mut mech.state
                else {
                    unreachable!()
                };
                if is_a {
                    pending_reads_a.push_back(r);
                } else {
                    pending_reads_b.push_back(r);
                }
                mech_op(cfg, mech, "DEFER", r, None);
            }
            Ok(())
        }
        (MechState::Lock { .. }, _) => Err(protocol_fault(mech, "lock accepts ACQ/REL only")),
        (MechState::BasicComm { .. }, _) => {
            Err(protocol_fault(mech, "basiccomm accepts WRITE/READ only"))
        }
        (MechState::StatusChan { .. }, _) => {
            Err(protocol_fault(mech, "statuschan accepts WRITE/READ only"))
        }
        (MechState::BidirChan { .. }, _) => {
            Err(protocol_fault(mech, "bidirchan accepts ATTACH/WRITE/READ only"))
        }
    }
}
