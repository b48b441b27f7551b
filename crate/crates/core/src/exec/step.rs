//! The instruction executor shared by free instances and method
//! activations. Each call executes exactly one instruction of `actor`,
//! which the dispatcher has detached from its map; faults leave both the
//! configuration and the actor untouched.

use std::collections::BTreeMap;

use super::{
    BlockReason, CellOpKind, Configuration, EventKind, FaultKind, FnRef, Instance, Status,
    StepError, ENTRY_ID,
};
use crate::ir::{FunctionDef, Instr, Literal, Operand, ProgramDef};
use crate::mech::{MechKind, MechanismInstance};
use crate::object::{ObjectInstance, Request};
use crate::value::{InstanceId, Symbol, Value};

fn fault(kind: FaultKind, detail: impl Into<String>) -> StepError {
    StepError::fault(kind, detail)
}

fn fn_def(program: &ProgramDef, r: FnRef) -> &FunctionDef {
    match r {
        FnRef::Free(i) => &program.functions[i],
        FnRef::Method { object_def, method } => &program.objects[object_def].methods[method],
    }
}

/// Does `name` resolve to a state variable in this execution context?
fn statevar_owner(cfg: &Configuration, obj: Option<InstanceId>, name: &str) -> Option<InstanceId> {
    let oid = obj?;
    let o = cfg.objects().get(&oid)?;
    cfg.program().objects[o.def_index].has_statevar(name).then_some(oid)
}

fn eval(
    cfg: &Configuration,
    actor: &Instance,
    obj: Option<InstanceId>,
    op: &Operand,
) -> Result<Value, StepError> {
    match op {
        Operand::Int(n) => Ok(Value::Int(*n)),
        Operand::Sym(s) => Ok(Value::Sym(s.clone())),
        Operand::Local(name) => {
            if let Some(oid) = statevar_owner(cfg, obj, name) {
                let o = cfg.objects().get(&oid).expect("owner exists");
                return Ok(Value::Int(*o.state.get(name).expect("statevar initialized")));
            }
            actor.locals.get(name).cloned().ok_or_else(|| {
                fault(FaultKind::Type, format!("read of unbound local `{name}`"))
            })
        }
    }
}

/// Would writing `value` into `name` fault? State variables hold integers
/// only. Run before side effects.
fn check_write(
    cfg: &Configuration,
    obj: Option<InstanceId>,
    name: &str,
    value: &Value,
) -> Result<(), StepError> {
    if statevar_owner(cfg, obj, name).is_some() && value.as_int().is_none() {
        return Err(fault(
            FaultKind::Type,
            format!("state variable `{name}` holds integers, got {value}"),
        ));
    }
    Ok(())
}

fn write_local(
    cfg: &mut Configuration,
    actor: &mut Instance,
    obj: Option<InstanceId>,
    name: &str,
    value: Value,
) {
    if let Some(oid) = statevar_owner(cfg, obj, name) {
        let n = value.as_int().expect("checked by check_write");
        cfg.objects_mut()
            .get_mut(&oid)
            .expect("owner exists")
            .state
            .insert(name.to_string(), n);
        return;
    }
    actor.locals.insert(name.to_string(), value);
}

fn eval_int(
    cfg: &Configuration,
    actor: &Instance,
    obj: Option<InstanceId>,
    op: &Operand,
    what: &str,
) -> Result<i64, StepError> {
    let v = eval(cfg, actor, obj, op)?;
    v.as_int()
        .ok_or_else(|| fault(FaultKind::Type, format!("{what} must be an integer, got {v}")))
}

fn eval_ref(
    cfg: &Configuration,
    actor: &Instance,
    obj: Option<InstanceId>,
    op: &Operand,
    what: &str,
) -> Result<InstanceId, StepError> {
    let v = eval(cfg, actor, obj, op)?;
    v.as_ref_id()
        .ok_or_else(|| fault(FaultKind::Type, format!("{what} must be a reference, got {v}")))
}

/// Execute one instruction of `actor` within `cfg`. `obj` is the owning
/// object when the actor is a method activation; its state variables are
/// then in scope.
pub(crate) fn exec_instr(
    cfg: &mut Configuration,
    actor: &mut Instance,
    obj: Option<InstanceId>,
) -> Result<(), StepError> {
    let program = cfg.program_rc();
    let fdef = fn_def(&program, actor.fn_ref);
    debug_assert!(actor.ip < fdef.body.len(), "ip within body");
    let instr = &fdef.body[actor.ip];
    let step = cfg.step_count();

    match instr {
        Instr::Const { dst, lit } => {
            let v = match lit {
                Literal::Int(n) => Value::Int(*n),
                Literal::Sym(s) => Value::Sym(s.clone()),
            };
            check_write(cfg, obj, dst, &v)?;
            write_local(cfg, actor, obj, dst, v);
            actor.ip += 1;
        }
        Instr::Move { dst, src } => {
            let v = eval(cfg, actor, obj, src)?;
            check_write(cfg, obj, dst, &v)?;
            write_local(cfg, actor, obj, dst, v);
            actor.ip += 1;
        }
        Instr::Add { dst, a, b } => {
            let x = eval_int(cfg, actor, obj, a, "add operand")?;
            let y = eval_int(cfg, actor, obj, b, "add operand")?;
            let v = Value::Int(x.wrapping_add(y));
            check_write(cfg, obj, dst, &v)?;
            write_local(cfg, actor, obj, dst, v);
            actor.ip += 1;
        }
        Instr::Pair { dst, a, b } => {
            let x = eval(cfg, actor, obj, a)?;
            let y = eval(cfg, actor, obj, b)?;
            let v = Value::pair(x, y);
            check_write(cfg, obj, dst, &v)?;
            write_local(cfg, actor, obj, dst, v);
            actor.ip += 1;
        }
        Instr::Fst { dst, pair } | Instr::Snd { dst, pair } => {
            let v = eval(cfg, actor, obj, pair)?;
            let (a, b) = v
                .as_pair()
                .ok_or_else(|| fault(FaultKind::Type, format!("expected a pair, got {v}")))?;
            let picked = if matches!(instr, Instr::Fst { .. }) { a.clone() } else { b.clone() };
            check_write(cfg, obj, dst, &picked)?;
            write_local(cfg, actor, obj, dst, picked);
            actor.ip += 1;
        }
        Instr::Jmp { target, .. } => {
            actor.ip = *target;
        }
        Instr::BrEq { a, b, target, .. } => {
            let x = eval(cfg, actor, obj, a)?;
            let y = eval(cfg, actor, obj, b)?;
            if x == y {
                actor.ip = *target;
            } else {
                actor.ip += 1;
            }
        }
        Instr::Spawn { dst, fname, args } | Instr::Call { dst, fname, args } => {
            let is_call = matches!(instr, Instr::Call { .. });
            let (findex, callee) = program
                .function(fname)
                .ok_or_else(|| fault(FaultKind::Type, format!("unknown function `{fname}`")))?;
            if callee.params.len() != args.len() {
                return Err(fault(
                    FaultKind::Type,
                    format!(
                        "`{fname}` takes {} argument(s), {} given",
                        callee.params.len(),
                        args.len()
                    ),
                ));
            }
            let mut argv = Vec::with_capacity(args.len());
            for a in args {
                argv.push(eval(cfg, actor, obj, a)?);
            }
            let child_ref = Value::Ref(InstanceId(cfg.next_id()));
            if !is_call {
                check_write(cfg, obj, dst, &child_ref)?;
            }
            // All checks passed: commit.
            let child_id = cfg.alloc_id();
            let locals: BTreeMap<String, Value> =
                callee.params.iter().cloned().zip(argv).collect();
            let mut child = Instance::new(child_id, FnRef::Free(findex), locals);
            if is_call {
                child.waiting_caller = Some((actor.id, dst.clone()));
                actor.status = Status::Blocked(BlockReason::Call);
            } else {
                write_local(cfg, actor, obj, dst, child_ref);
            }
            cfg.insert_instance(child);
            cfg.push_event(
                EventKind::Spawn { parent: actor.id, child: child_id, fname: Symbol::new(fname.clone()) },
                step,
            );
            actor.ip += 1;
        }
        Instr::SelfRef { dst } => {
            let v = Value::Ref(actor.id);
            check_write(cfg, obj, dst, &v)?;
            write_local(cfg, actor, obj, dst, v);
            actor.ip += 1;
        }
        Instr::Send { target, msg } => {
            let dst = eval_ref(cfg, actor, obj, target, "send target")?;
            let v = eval(cfg, actor, obj, msg)?;
            cfg.check_send_target(Some(actor), dst)?;
            let src = actor.id;
            cfg.deliver(Some(actor), src, dst, v);
            actor.ip += 1;
        }
        Instr::Recv { dst } => {
            match actor.mailbox.front() {
                Some(head) => {
                    let v = head.clone();
                    check_write(cfg, obj, dst, &v)?;
                    actor.mailbox.pop_front();
                    write_local(cfg, actor, obj, dst, v.clone());
                    cfg.push_event(EventKind::Recv { dst: actor.id, value: v }, step);
                    actor.ip += 1;
                }
                None => {
                    // Retries the same instruction when rescheduled.
                    actor.status = Status::Blocked(BlockReason::Recv);
                }
            }
        }
        Instr::NewCell { dst } => {
            let cell = cfg.cells().len() as u64;
            let v = Value::Int(cell as i64);
            check_write(cfg, obj, dst, &v)?;
            write_local(cfg, actor, obj, dst, v);
            cfg.cells_mut().insert(cell, 0);
            cfg.push_event(
                EventKind::CellOp { actor: actor.id, cell, op: CellOpKind::New, value: 0 },
                step,
            );
            actor.ip += 1;
        }
        Instr::CellRead { dst, cell } => {
            let cid = eval_int(cfg, actor, obj, cell, "cell id")?;
            let value = *cfg
                .cells()
                .get(&(cid as u64))
                .filter(|_| cid >= 0)
                .ok_or_else(|| fault(FaultKind::Type, format!("no cell {cid}")))?;
            let v = Value::Int(value);
            check_write(cfg, obj, dst, &v)?;
            write_local(cfg, actor, obj, dst, v);
            cfg.push_event(
                EventKind::CellOp { actor: actor.id, cell: cid as u64, op: CellOpKind::Read, value },
                step,
            );
            actor.ip += 1;
        }
        Instr::CellWrite { cell, value } => {
            let cid = eval_int(cfg, actor, obj, cell, "cell id")?;
            let v = eval_int(cfg, actor, obj, value, "cell value")?;
            if cid < 0 || !cfg.cells().contains_key(&(cid as u64)) {
                return Err(fault(FaultKind::Type, format!("no cell {cid}")));
            }
            cfg.cells_mut().insert(cid as u64, v);
            cfg.push_event(
                EventKind::CellOp { actor: actor.id, cell: cid as u64, op: CellOpKind::Write, value: v },
                step,
            );
            actor.ip += 1;
        }
        Instr::Mech { dst, kind, params } => {
            let mk: MechKind = kind
                .parse()
                .map_err(|_| fault(FaultKind::Type, format!("unknown mechanism kind `{kind}`")))?;
            // Parameters are accepted and evaluated; current kinds take none.
            for p in params {
                eval(cfg, actor, obj, p)?;
            }
            let mech_ref = Value::Ref(InstanceId(cfg.next_id()));
            check_write(cfg, obj, dst, &mech_ref)?;
            let id = cfg.alloc_id();
            write_local(cfg, actor, obj, dst, mech_ref);
            cfg.insert_mechanism(MechanismInstance::new(id, mk));
            actor.ip += 1;
        }
        Instr::NewObj { dst, obj: obj_name } => {
            let (def_index, odef) = program
                .object(obj_name)
                .ok_or_else(|| fault(FaultKind::Type, format!("unknown object `{obj_name}`")))?;
            let obj_ref = Value::Ref(InstanceId(cfg.next_id()));
            check_write(cfg, obj, dst, &obj_ref)?;
            let id = cfg.alloc_id();
            write_local(cfg, actor, obj, dst, obj_ref);
            cfg.insert_object(ObjectInstance::new(id, def_index, &odef.statevars));
            actor.ip += 1;
        }
        Instr::Req { dst, obj: target, method, args } => {
            let (oid, argv) = issue_checks(cfg, actor, obj, target, method, args, &program)?;
            let req = Request {
                method: method.clone(),
                args: argv,
                reply_to: Some((actor.id, dst.clone())),
            };
            cfg.objects_mut().get_mut(&oid).expect("checked").queue.push_back(req);
            cfg.push_event(
                EventKind::ObjReq { obj: oid, method: Symbol::new(method.clone()), requester: actor.id },
                step,
            );
            actor.status = Status::Blocked(BlockReason::Req);
            actor.ip += 1;
        }
        Instr::ReqAsync { obj: target, method, args } => {
            let (oid, argv) = issue_checks(cfg, actor, obj, target, method, args, &program)?;
            let req = Request { method: method.clone(), args: argv, reply_to: None };
            cfg.objects_mut().get_mut(&oid).expect("checked").queue.push_back(req);
            cfg.push_event(
                EventKind::ObjReq { obj: oid, method: Symbol::new(method.clone()), requester: actor.id },
                step,
            );
            actor.ip += 1;
        }
        Instr::Emit { value } => {
            let v = eval(cfg, actor, obj, value)?;
            cfg.push_event(EventKind::Emit { value: v }, step);
            actor.ip += 1;
        }
        Instr::Return { value } => {
            let v = match value {
                Some(op) => eval(cfg, actor, obj, op)?,
                None => Value::Unit,
            };
            if let Some((caller, dst)) = actor.waiting_caller.clone() {
                deliver_reply(cfg, caller, &dst, v.clone())?;
            }
            actor.waiting_caller = None;
            actor.status = Status::Finished(v.clone());
            if actor.id == ENTRY_ID {
                cfg.push_event(EventKind::Halt { result: v }, step);
            }
        }
    }
    Ok(())
}

/// Shared checks for `req`/`reqasync`: target must be an object, the
/// method must exist there with matching arity. Returns the object id and
/// evaluated arguments without mutating anything.
fn issue_checks(
    cfg: &Configuration,
    actor: &Instance,
    obj: Option<InstanceId>,
    target: &Operand,
    method: &str,
    args: &[Operand],
    program: &ProgramDef,
) -> Result<(InstanceId, Vec<Value>), StepError> {
    let tv = eval(cfg, actor, obj, target)?;
    let oid = tv.as_ref_id().ok_or_else(|| {
        fault(FaultKind::ObjProtocol, format!("request target must be an object ref, got {tv}"))
    })?;
    let o = cfg.objects().get(&oid).ok_or_else(|| {
        fault(FaultKind::ObjProtocol, format!("{oid} is not an object"))
    })?;
    let odef = &program.objects[o.def_index];
    let (_, mdef) = odef.method(method).ok_or_else(|| {
        fault(
            FaultKind::ObjProtocol,
            format!("object `{}` has no method `{method}`", odef.name),
        )
    })?;
    if mdef.params.len() != args.len() {
        return Err(fault(
            FaultKind::ObjProtocol,
            format!("`{method}` takes {} argument(s), {} given", mdef.params.len(), args.len()),
        ));
    }
    let mut argv = Vec::with_capacity(args.len());
    for a in args {
        argv.push(eval(cfg, actor, obj, a)?);
    }
    Ok((oid, argv))
}

/// Write a reply value into the requester's frame and wake it. The
/// destination may be a state variable when the requester is itself a
/// method activation.
fn deliver_reply(
    cfg: &mut Configuration,
    caller: InstanceId,
    dst: &str,
    v: Value,
) -> Result<(), StepError> {
    // Locate the caller's object context, if it is an activation.
    let caller_obj: Option<InstanceId> = if cfg.instances().contains_key(&caller) {
        None
    } else {
        cfg.objects()
            .iter()
            .find(|(_, o)| o.activations.iter().any(|a| a.id == caller))
            .map(|(id, _)| *id)
    };
    if caller_obj.is_none() && !cfg.instances().contains_key(&caller) {
        // The caller vanished; with blocking callers this cannot happen.
        return Err(fault(FaultKind::SendToFinished, format!("reply to missing instance {caller}")));
    }
    check_write(cfg, caller_obj, dst, &v)?;
    if statevar_owner(cfg, caller_obj, dst).is_some() {
        let n = v.as_int().expect("checked");
        cfg.objects_mut()
            .get_mut(&caller_obj.expect("statevar owner"))
            .expect("object")
            .state
            .insert(dst.to_string(), n);
    } else {
        let inst = cfg.find_instance_mut(caller).expect("caller located");
        inst.locals.insert(dst.to_string(), v);
    }
    let inst = cfg.find_instance_mut(caller).expect("caller located");
    if matches!(inst.status, Status::Blocked(BlockReason::Call) | Status::Blocked(BlockReason::Req))
    {
        inst.status = Status::Runnable;
    }
    Ok(())
}
