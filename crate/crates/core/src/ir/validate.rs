//! Static validation: name resolution, arities, definite assignment of
//! locals, state variable scoping, and the strict mode that rejects raw
//! shared-memory instructions.

use std::collections::BTreeSet;

use super::ast::{FunctionDef, Instr, Operand, ProgramDef};
use super::diag::{DiagCode, Diagnostic};

pub const KNOWN_MECH_KINDS: &[&str] = &["lock", "basiccomm", "statuschan", "bidirchan"];

/// Validate a parsed program. Returns the (order-stable) list of
/// diagnostics; the empty list means the program is executable. With
/// `strict_oo` set, every raw-cell instruction additionally yields a
/// `STRICT_OO_RAW_MEMORY` diagnostic naming the function and instruction
/// index.
pub fn validate(p: &ProgramDef, strict_oo: bool) -> Vec<Diagnostic> {
    let mut diags = Vec::new();

    match p.function(&p.entry) {
        None => diags.push(Diagnostic::general(
            DiagCode::EntryMissing,
            format!("entry function `{}` is not defined", p.entry),
        )),
        Some((_, f)) if !f.params.is_empty() => diags.push(Diagnostic::general(
            DiagCode::EntryParams,
            format!("entry function `{}` must take no parameters", p.entry),
        )),
        _ => {}
    }

    // Every statevar name, across all objects, with its owner.
    let statevar_owners: Vec<(&str, &str)> = p
        .objects
        .iter()
        .flat_map(|o| o.statevars.iter().map(move |(n, _)| (n.as_str(), o.name.as_str())))
        .collect();

    for f in &p.functions {
        check_function(p, f, None, &statevar_owners, strict_oo, &mut diags);
    }
    for o in &p.objects {
        for m in &o.methods {
            for param in &m.params {
                if o.has_statevar(param) {
                    diags.push(Diagnostic::at_instr(
                        DiagCode::StatevarShadow,
                        &m.name,
                        0,
                        format!("parameter `{param}` shadows state variable of `{}`", o.name),
                    ));
                }
            }
            check_function(p, m, Some(o.name.as_str()), &statevar_owners, strict_oo, &mut diags);
        }
    }
    diags
}

fn check_function(
    p: &ProgramDef,
    f: &FunctionDef,
    owner: Option<&str>,
    statevar_owners: &[(&str, &str)],
    strict_oo: bool,
    diags: &mut Vec<Diagnostic>,
) {
    for (idx, instr) in f.body.iter().enumerate() {
        if strict_oo && instr.touches_cells() {
            diags.push(Diagnostic::at_instr(
                DiagCode::StrictOoRawMemory,
                &f.name,
                idx,
                format!("`{}` bypasses message passing", instr.mnemonic()),
            ));
        }
        match instr {
            Instr::Call { fname, args, .. } | Instr::Spawn { fname, args, .. } => {
                match p.function(fname) {
                    None => diags.push(Diagnostic::at_instr(
                        DiagCode::UnknownFunction,
                        &f.name,
                        idx,
                        format!("unknown function `{fname}`"),
                    )),
                    Some((_, callee)) if callee.params.len() != args.len() => {
                        diags.push(Diagnostic::at_instr(
                            DiagCode::ArityMismatch,
                            &f.name,
                            idx,
                            format!(
                                "`{fname}` takes {} argument(s), {} given",
                                callee.params.len(),
                                args.len()
                            ),
                        ));
                    }
                    _ => {}
                }
            }
            Instr::NewObj { obj, .. } => {
                if p.object(obj).is_none() {
                    diags.push(Diagnostic::at_instr(
                        DiagCode::UnknownObject,
                        &f.name,
                        idx,
                        format!("unknown object `{obj}`"),
                    ));
                }
            }
            Instr::Req { method, .. } | Instr::ReqAsync { method, .. } => {
                if !p.any_object_with_method(method) {
                    diags.push(Diagnostic::at_instr(
                        DiagCode::UnknownMethod,
                        &f.name,
                        idx,
                        format!("no object declares method `{method}`"),
                    ));
                }
            }
            Instr::Mech { kind, .. } => {
                if !KNOWN_MECH_KINDS.contains(&kind.as_str()) {
                    diags.push(Diagnostic::at_instr(
                        DiagCode::UnknownMechKind,
                        &f.name,
                        idx,
                        format!("unknown mechanism kind `{kind}`"),
                    ));
                }
            }
            _ => {}
        }
        // State variable scoping: names owned by other objects (or by any
        // object, for free functions) are off limits.
        for name in referenced_names(instr) {
            for (sv, sv_owner) in statevar_owners {
                if name == *sv && owner != Some(*sv_owner) {
                    diags.push(Diagnostic::at_instr(
                        DiagCode::StatevarScope,
                        &f.name,
                        idx,
                        format!("`{name}` is a state variable of object `{sv_owner}`"),
                    ));
                }
            }
        }
    }
    definite_assignment(p, f, owner, diags);
}

/// Every local name an instruction mentions, reads and writes alike.
fn referenced_names(instr: &Instr) -> Vec<&str> {
    let mut names: Vec<&str> = reads(instr);
    if let Some(d) = write_target(instr) {
        names.push(d);
    }
    names
}

fn operand_local(op: &Operand) -> Option<&str> {
    match op {
        Operand::Local(n) => Some(n),
        _ => None,
    }
}

/// Locals read by an instruction, in operand order.
fn reads(instr: &Instr) -> Vec<&str> {
    let mut out = Vec::new();
    macro_rules! rd {
        ($($op:expr),*) => {{
            $(if let Some(n) = operand_local($op) { out.push(n); })*
        }};
    }
    match instr {
        Instr::Const { .. }
        | Instr::SelfRef { .. }
        | Instr::Recv { .. }
        | Instr::NewCell { .. }
        | Instr::NewObj { .. }
        | Instr::Jmp { .. } => {}
        Instr::Move { src, .. } => rd!(src),
        Instr::Add { a, b, .. } | Instr::Pair { a, b, .. } => rd!(a, b),
        Instr::Fst { pair, .. } | Instr::Snd { pair, .. } => rd!(pair),
        Instr::BrEq { a, b, .. } => rd!(a, b),
        Instr::Call { args, .. } | Instr::Spawn { args, .. } => {
            for a in args {
                rd!(a);
            }
        }
        Instr::Send { target, msg } => rd!(target, msg),
        Instr::CellRead { cell, .. } => rd!(cell),
        Instr::CellWrite { cell, value } => rd!(cell, value),
        Instr::Mech { params, .. } => {
            for a in params {
                rd!(a);
            }
        }
        Instr::Req { obj, args, .. } | Instr::ReqAsync { obj, args, .. } => {
            rd!(obj);
            for a in args {
                rd!(a);
            }
        }
        Instr::Emit { value } => rd!(value),
        Instr::Return { value } => {
            if let Some(v) = value {
                rd!(v);
            }
        }
    }
    out
}

/// The local an instruction assigns, if any. `call`/`req` destinations are
/// assigned when the reply arrives, which for assignment analysis is the
/// same program point.
fn write_target(instr: &Instr) -> Option<&str> {
    match instr {
        Instr::Const { dst, .. }
        | Instr::Move { dst, .. }
        | Instr::Add { dst, .. }
        | Instr::Pair { dst, .. }
        | Instr::Fst { dst, .. }
        | Instr::Snd { dst, .. }
        | Instr::Call { dst, .. }
        | Instr::Spawn { dst, .. }
        | Instr::SelfRef { dst }
        | Instr::Recv { dst }
        | Instr::NewCell { dst }
        | Instr::CellRead { dst, .. }
        | Instr::Mech { dst, .. }
        | Instr::NewObj { dst, .. }
        | Instr::Req { dst, .. } => Some(dst),
        _ => None,
    }
}

fn successors(instr: &Instr, idx: usize, len: usize) -> Vec<usize> {
    match instr {
        Instr::Return { .. } => vec![],
        Instr::Jmp { target, .. } => vec![*target],
        Instr::BrEq { target, .. } => {
            let mut s = vec![*target];
            if idx + 1 < len {
                s.push(idx + 1);
            }
            s
        }
        _ => {
            if idx + 1 < len {
                vec![idx + 1]
            } else {
                vec![]
            }
        }
    }
}

/// Definite-assignment analysis over the function's control-flow graph. A
/// local must be assigned on every path before it is read; parameters and
/// (for methods) the owning object's state variables start assigned. The
/// result guarantees a validated program never reads an unbound local at
/// runtime.
fn definite_assignment(
    p: &ProgramDef,
    f: &FunctionDef,
    owner: Option<&str>,
    diags: &mut Vec<Diagnostic>,
) {
    let len = f.body.len();
    if len == 0 {
        return;
    }
    let mut initial: BTreeSet<String> = f.params.iter().cloned().collect();
    if let Some(owner_name) = owner {
        if let Some((_, obj)) = p.object(owner_name) {
            for (sv, _) in &obj.statevars {
                initial.insert(sv.clone());
            }
        }
    }
    // IN[i] = intersection of OUT over predecessors; None means "not yet
    // reached", the analysis top.
    let mut ins: Vec<Option<BTreeSet<String>>> = vec![None; len];
    ins[0] = Some(initial);
    let mut changed = true;
    while changed {
        changed = false;
        for idx in 0..len {
            let Some(in_set) = ins[idx].clone() else { continue };
            let mut out_set = in_set;
            if let Some(w) = write_target(&f.body[idx]) {
                out_set.insert(w.to_string());
            }
            for succ in successors(&f.body[idx], idx, len) {
                let merged = match &ins[succ] {
                    None => Some(out_set.clone()),
                    Some(existing) => {
                        let inter: BTreeSet<String> =
                            existing.intersection(&out_set).cloned().collect();
                        if inter != *existing {
                            Some(inter)
                        } else {
                            None
                        }
                    }
                };
                if let Some(m) = merged {
                    ins[succ] = Some(m);
                    changed = true;
                }
            }
        }
    }
    for (idx, instr) in f.body.iter().enumerate() {
        let Some(in_set) = &ins[idx] else { continue };
        for name in reads(instr) {
            if !in_set.contains(name) {
                diags.push(Diagnostic::at_instr(
                    DiagCode::UndeclaredLocal,
                    &f.name,
                    idx,
                    format!("`{name}` may be read before assignment"),
                ));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parser::parse_program;

    fn parse(src: &str) -> ProgramDef {
        parse_program(src).unwrap()
    }

    #[test]
    fn clean_program_validates() {
        let p = parse("fn main() { const x 1 \n emit x \n return }");
        assert!(validate(&p, false).is_empty());
        assert!(validate(&p, true).is_empty());
    }

    #[test]
    fn read_before_write_rejected() {
        let p = parse("fn main() { emit x \n return }");
        let d = validate(&p, false);
        assert!(d.iter().any(|d| d.code == DiagCode::UndeclaredLocal));
    }

    #[test]
    fn jump_over_assignment_rejected() {
        let p = parse("fn main() {\n jmp skip\n const x 1\nskip: emit x\n return\n}");
        let d = validate(&p, false);
        assert!(d.iter().any(|d| d.code == DiagCode::UndeclaredLocal));
    }

    #[test]
    fn loop_with_preassigned_counter_accepted() {
        let p = parse(
            "fn main() {\n const i 0\nloop: add i i 1\n br_eq i 3 done\n jmp loop\ndone: emit i\n return\n}",
        );
        assert!(validate(&p, false).is_empty());
    }

    #[test]
    fn strict_mode_flags_each_cell_instruction() {
        let p = parse("fn main() { newcell c \n cellwrite c 1 \n cellread x c \n emit x \n return }");
        assert!(validate(&p, false).is_empty());
        let d = validate(&p, true);
        let strict: Vec<String> = d
            .iter()
            .filter(|d| d.code == DiagCode::StrictOoRawMemory)
            .map(|d| d.to_string())
            .collect();
        assert_eq!(strict.len(), 3);
        assert!(strict[0].starts_with("STRICT_OO_RAW_MEMORY@main:0"));
        assert!(strict[1].starts_with("STRICT_OO_RAW_MEMORY@main:1"));
        assert!(strict[2].starts_with("STRICT_OO_RAW_MEMORY@main:2"));
    }

    #[test]
    fn validate_is_deterministic() {
        let p = parse("fn main() { emit x \n call y nosuch 1 \n return }");
        assert_eq!(validate(&p, true), validate(&p, true));
    }

    #[test]
    fn unknown_names_rejected() {
        let p = parse("fn main() { call x f 1 \n newobj o t \n req r o m \n mech m2 chan \n return }");
        let d = validate(&p, false);
        assert!(d.iter().any(|d| d.code == DiagCode::UnknownFunction));
        assert!(d.iter().any(|d| d.code == DiagCode::UnknownObject));
        assert!(d.iter().any(|d| d.code == DiagCode::UnknownMethod));
        assert!(d.iter().any(|d| d.code == DiagCode::UnknownMechKind));
    }

    #[test]
    fn arity_mismatch_rejected() {
        let p = parse("fn main() { call x f 1 2 \n return }\nfn f(a) { return a }");
        let d = validate(&p, false);
        assert!(d.iter().any(|d| d.code == DiagCode::ArityMismatch));
    }

    #[test]
    fn entry_must_exist_with_zero_params() {
        let p = parse("fn start() { return }");
        assert!(validate(&p, false).iter().any(|d| d.code == DiagCode::EntryMissing));
        let p2 = parse("fn main(x) { return x }");
        assert!(validate(&p2, false).iter().any(|d| d.code == DiagCode::EntryParams));
    }

    #[test]
    fn statevars_are_fenced_to_their_object() {
        let src = "obj c [serialized] {\n state n = 0\n fn get() { return n }\n}\n\
                   fn main() { const n 5 \n emit n \n return }";
        let p = parse(src);
        let d = validate(&p, false);
        assert!(d.iter().any(|d| d.code == DiagCode::StatevarScope));
    }

    #[test]
    fn method_reads_own_statevar() {
        let src = "obj c [serialized] {\n state n = 0\n fn get() { return n }\n}\n\
                   fn main() { newobj o c \n req v o get \n emit v \n return }";
        let p = parse(src);
        assert!(validate(&p, false).is_empty());
    }
}
