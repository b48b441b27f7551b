//! Canonical text form of a program. `parse(print(parse(t))) == parse(t)`
//! holds for any text the parser accepts.

use std::collections::BTreeMap;
use std::fmt::Write;

use super::ast::{FunctionDef, Instr, Literal, ObjectDef, Operand, ProgramDef};

fn operand(op: &Operand) -> String {
    match op {
        Operand::Local(n) => n.clone(),
        Operand::Int(n) => n.to_string(),
        Operand::Sym(s) => format!(":{s}"),
    }
}

fn operands(ops: &[Operand]) -> String {
    ops.iter().map(operand).fold(String::new(), |mut acc, o| {
        acc.push(' ');
        acc.push_str(&o);
        acc
    })
}

fn instr(i: &Instr) -> String {
    match i {
        Instr::Const { dst, lit } => match lit {
            Literal::Int(n) => format!("const {dst} {n}"),
            Literal::Sym(s) => format!("const {dst} :{s}"),
        },
        Instr::Move { dst, src } => format!("move {dst} {}", operand(src)),
        Instr::Add { dst, a, b } => format!("add {dst} {} {}", operand(a), operand(b)),
        Instr::Pair { dst, a, b } => format!("pair {dst} {} {}", operand(a), operand(b)),
        Instr::Fst { dst, pair } => format!("fst {dst} {}", operand(pair)),
        Instr::Snd { dst, pair } => format!("snd {dst} {}", operand(pair)),
        Instr::Jmp { label, .. } => format!("jmp {label}"),
        Instr::BrEq { a, b, label, .. } => {
            format!("br_eq {} {} {label}", operand(a), operand(b))
        }
        Instr::Call { dst, fname, args } => format!("call {dst} {fname}{}", operands(args)),
        Instr::Spawn { dst, fname, args } => format!("spawn {dst} {fname}{}", operands(args)),
        Instr::SelfRef { dst } => format!("self {dst}"),
        Instr::Send { target, msg } => format!("send {} {}", operand(target), operand(msg)),
        Instr::Recv { dst } => format!("recv {dst}"),
        Instr::NewCell { dst } => format!("newcell {dst}"),
        Instr::CellRead { dst, cell } => format!("cellread {dst} {}", operand(cell)),
        Instr::CellWrite { cell, value } => {
            format!("cellwrite {} {}", operand(cell), operand(value))
        }
        Instr::Mech { dst, kind, params } => format!("mech {dst} {kind}{}", operands(params)),
        Instr::NewObj { dst, obj } => format!("newobj {dst} {obj}"),
        Instr::Req { dst, obj, method, args } => {
            format!("req {dst} {} {method}{}", operand(obj), operands(args))
        }
        Instr::ReqAsync { obj, method, args } => {
            format!("reqasync {} {method}{}", operand(obj), operands(args))
        }
        Instr::Emit { value } => format!("emit {}", operand(value)),
        Instr::Return { value } => match value {
            Some(v) => format!("return {}", operand(v)),
            None => "return".to_string(),
        },
    }
}

fn function(out: &mut String, f: &FunctionDef, indent: &str) {
    let params = f.params.join(", ");
    let _ = writeln!(out, "{indent}fn {}({params}) {{", f.name);
    // Invert the label map so each index lists its labels in name order.
    let mut by_index: BTreeMap<usize, Vec<&str>> = BTreeMap::new();
    for (name, &idx) in &f.labels {
        by_index.entry(idx).or_default().push(name);
    }
    for (idx, i) in f.body.iter().enumerate() {
        if let Some(names) = by_index.get(&idx) {
            for name in names {
                let _ = writeln!(out, "{indent}{name}:");
            }
        }
        let _ = writeln!(out, "{indent}  {}", instr(i));
    }
    let _ = writeln!(out, "{indent}}}");
}

fn object(out: &mut String, o: &ObjectDef) {
    let _ = writeln!(out, "obj {} [{}] {{", o.name, o.policy.as_str());
    for (name, init) in &o.statevars {
        let _ = writeln!(out, "  state {name} = {init}");
    }
    for m in &o.methods {
        function(out, m, "  ");
    }
    let _ = writeln!(out, "}}");
}

/// Render the program in canonical form.
pub fn print_program(p: &ProgramDef) -> String {
    let mut out = String::new();
    for f in &p.functions {
        function(&mut out, f, "");
        out.push('\n');
    }
    for o in &p.objects {
        object(&mut out, o);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parser::parse_program;

    #[test]
    fn roundtrip_is_stable() {
        let src = "fn main() {\n\
                   loop: emit 1\n\
                   br_eq 1 2 loop\n\
                   spawn a f 1 :GO\n\
                   return\n\
                   }\n\
                   fn f(x, tag) { emit x \n return }\n\
                   obj c [interleaved] {\n state n = 3\n fn get() { return n }\n}";
        let p1 = parse_program(src).unwrap();
        let printed = print_program(&p1);
        let p2 = parse_program(&printed).unwrap();
        assert_eq!(p1, p2);
        assert_eq!(print_program(&p2), printed);
    }
}
