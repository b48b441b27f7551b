//! Recursive-descent parser for guest program text.
//!
//! Parsing is total: all failures are collected as diagnostics and the
//! parser recovers at the next line or definition. Jump targets are
//! resolved here so a structurally valid `ProgramDef` never carries an
//! unknown label.

use std::collections::BTreeMap;

use super::ast::{FunctionDef, Instr, Literal, MethodPolicy, ObjectDef, Operand, ProgramDef};
use super::diag::{DiagCode, Diagnostic};
use super::lexer::{lex, Lexed, Tok};
use crate::value::Symbol;

/// Parse guest source text into a program, or a list of diagnostics with
/// source positions when the text is not well formed.
pub fn parse_program(text: &str) -> Result<ProgramDef, Vec<Diagnostic>> {
    let (toks, mut diags) = lex(text);
    let mut p = Parser { toks, pos: 0, diags: Vec::new() };
    let program = p.program();
    diags.append(&mut p.diags);
    if diags.is_empty() {
        Ok(program)
    } else {
        Err(diags)
    }
}

struct Parser {
    toks: Vec<Lexed>,
    pos: usize,
    diags: Vec<Diagnostic>,
}

/// Unresolved jump recorded during body parsing.
struct PendingJump {
    instr_index: usize,
    label: String,
    line: usize,
    col: usize,
}

impl Parser {
    fn peek(&self) -> &Lexed {
        &self.toks[self.pos.min(self.toks.len() - 1)]
    }

    fn next(&mut self) -> Lexed {
        let t = self.toks[self.pos.min(self.toks.len() - 1)].clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn skip_newlines(&mut self) {
        while self.peek().tok == Tok::Newline {
            self.next();
        }
    }

    fn error_at(&mut self, t: &Lexed, msg: String) {
        self.diags.push(Diagnostic::at_source(DiagCode::Syntax, t.line, t.col, msg));
    }

    fn expect_ident(&mut self, what: &str) -> Option<String> {
        let t = self.next();
        match t.tok {
            Tok::Ident(s) => Some(s),
            ref other => {
                self.error_at(&t, format!("expected {what}, found {}", other.describe()));
                None
            }
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> bool {
        let t = self.next();
        if t.tok == tok {
            true
        } else {
            let found = t.tok.describe();
            self.error_at(&t, format!("expected {what}, found {found}"));
            false
        }
    }

    /// Skip ahead to the next top-level definition start (`fn`/`obj` after a
    /// newline) or end of input.
    fn recover_top_level(&mut self) {
        loop {
            match &self.peek().tok {
                Tok::Eof => return,
                Tok::Ident(s) if s == "fn" || s == "obj" => return,
                _ => {
                    self.next();
                }
            }
        }
    }

    /// Skip to the end of the current line (or closing brace).
    fn recover_line(&mut self) {
        loop {
            match &self.peek().tok {
                Tok::Newline => {
                    self.next();
                    return;
                }
                Tok::RBrace | Tok::Eof => return,
                _ => {
                    self.next();
                }
            }
        }
    }

    fn program(&mut self) -> ProgramDef {
        let mut functions: Vec<FunctionDef> = Vec::new();
        let mut objects: Vec<ObjectDef> = Vec::new();
        loop {
            self.skip_newlines();
            let t = self.peek().clone();
            match &t.tok {
                Tok::Eof => break,
                Tok::Ident(s) if s == "fn" => {
                    self.next();
                    if let Some(f) = self.fndef() {
                        self.check_dup_name(&functions, &objects, &f.name, t.line, t.col);
                        functions.push(f);
                    } else {
                        self.recover_top_level();
                    }
                }
                Tok::Ident(s) if s == "obj" => {
                    self.next();
                    if let Some(o) = self.objdef() {
                        self.check_dup_name(&functions, &objects, &o.name, t.line, t.col);
                        objects.push(o);
                    } else {
                        self.recover_top_level();
                    }
                }
                other => {
                    let found = other.describe();
                    self.error_at(&t, format!("expected `fn` or `obj`, found {found}"));
                    self.next();
                    self.recover_top_level();
                }
            }
        }
        if functions.is_empty() && objects.is_empty() && self.diags.is_empty() {
            self.diags.push(Diagnostic::general(DiagCode::EmptyProgram, "no definitions"));
        }
        ProgramDef { functions, objects, entry: "main".to_string() }
    }

    fn check_dup_name(
        &mut self,
        functions: &[FunctionDef],
        objects: &[ObjectDef],
        name: &str,
        line: usize,
        col: usize,
    ) {
        if functions.iter().any(|f| f.name == name) || objects.iter().any(|o| o.name == name) {
            self.diags.push(Diagnostic::at_source(
                DiagCode::DupName,
                line,
                col,
                format!("duplicate definition of `{name}`"),
            ));
        }
    }

    fn fndef(&mut self) -> Option<FunctionDef> {
        let name = self.expect_ident("function name")?;
        if !self.expect(Tok::LParen, "`(`") {
            return None;
        }
        let mut params = Vec::new();
        loop {
            match self.peek().tok.clone() {
                Tok::RParen => {
                    self.next();
                    break;
                }
                Tok::Ident(p) => {
                    let t = self.next();
                    if params.contains(&p) {
                        self.error_at(&t, format!("duplicate parameter `{p}`"));
                    } else {
                        params.push(p);
                    }
                    if self.peek().tok == Tok::Comma {
                        self.next();
                    }
                }
                other => {
                    let t = self.next();
                    self.error_at(&t, format!("expected parameter or `)`, found {}", other.describe()));
                    return None;
                }
            }
        }
        if !self.expect(Tok::LBrace, "`{`") {
            return None;
        }
        let (body, labels) = self.body(&name);
        Some(FunctionDef { name, params, body, labels })
    }

    fn objdef(&mut self) -> Option<ObjectDef> {
        let name = self.expect_ident("object name")?;
        if !self.expect(Tok::LBracket, "`[`") {
            return None;
        }
        let pol_tok = self.next();
        let policy = match &pol_tok.tok {
            Tok::Ident(s) if s == "serialized" => MethodPolicy::Serialized,
            Tok::Ident(s) if s == "interleaved" => MethodPolicy::Interleaved,
            other => {
                let found = other.describe();
                self.error_at(&pol_tok, format!("expected `serialized` or `interleaved`, found {found}"));
                return None;
            }
        };
        if !self.expect(Tok::RBracket, "`]`") {
            return None;
        }
        if !self.expect(Tok::LBrace, "`{`") {
            return None;
        }
        let mut statevars: Vec<(String, i64)> = Vec::new();
        let mut methods: Vec<FunctionDef> = Vec::new();
        loop {
            self.skip_newlines();
            let t = self.peek().clone();
            match &t.tok {
                Tok::RBrace => {
                    self.next();
                    break;
                }
                Tok::Eof => {
                    self.error_at(&t, "unterminated object definition".to_string());
                    break;
                }
                Tok::Ident(s) if s == "state" => {
                    self.next();
                    if let Some((n, v)) = self.statevar() {
                        if statevars.iter().any(|(sn, _)| *sn == n) {
                            self.diags.push(Diagnostic::at_source(
                                DiagCode::DupName,
                                t.line,
                                t.col,
                                format!("duplicate state variable `{n}`"),
                            ));
                        } else {
                            statevars.push((n, v));
                        }
                    } else {
                        self.recover_line();
                    }
                }
                Tok::Ident(s) if s == "fn" => {
                    self.next();
                    if let Some(m) = self.fndef() {
                        if methods.iter().any(|f| f.name == m.name) {
                            self.diags.push(Diagnostic::at_source(
                                DiagCode::DupName,
                                t.line,
                                t.col,
                                format!("duplicate method `{}`", m.name),
                            ));
                        } else {
                            methods.push(m);
                        }
                    } else {
                        return None;
                    }
                }
                other => {
                    let found = other.describe();
                    self.error_at(&t, format!("expected `state`, `fn` or `}}`, found {found}"));
                    self.next();
                    self.recover_line();
                }
            }
        }
        Some(ObjectDef { name, policy, statevars, methods })
    }

    fn statevar(&mut self) -> Option<(String, i64)> {
        let name = self.expect_ident("state variable name")?;
        if !self.expect(Tok::Eq, "`=`") {
            return None;
        }
        let t = self.next();
        match t.tok {
            Tok::Int(v) => Some((name, v)),
            ref other => {
                self.error_at(&t, format!("expected integer initializer, found {}", other.describe()));
                None
            }
        }
    }

    /// Parse a `{`-opened body up to the matching `}`. One instruction per
    /// line; a leading `NAME:` binds a label to the next instruction.
    fn body(&mut self, fname: &str) -> (Vec<Instr>, BTreeMap<String, usize>) {
        let mut body: Vec<Instr> = Vec::new();
        let mut labels: BTreeMap<String, usize> = BTreeMap::new();
        let mut pending: Vec<PendingJump> = Vec::new();
        loop {
            self.skip_newlines();
            let t = self.peek().clone();
            match &t.tok {
                Tok::RBrace => {
                    self.next();
                    break;
                }
                Tok::Eof => {
                    self.error_at(&t, format!("unterminated body of `{fname}`"));
                    break;
                }
                Tok::Ident(_) => {
                    // Label prefix: IDENT ':' not followed by nothing useful.
                    if let (Tok::Ident(lbl), Tok::Colon) =
                        (&self.toks[self.pos].tok, &self.toks[self.pos + 1].tok)
                    {
                        let lbl = lbl.clone();
                        self.next();
                        self.next();
                        if labels.contains_key(&lbl) {
                            self.diags.push(Diagnostic::at_source(
                                DiagCode::DupName,
                                t.line,
                                t.col,
                                format!("duplicate label `{lbl}`"),
                            ));
                        } else {
                            labels.insert(lbl, body.len());
                        }
                        continue;
                    }
                    if let Some(instr) = self.instruction(&mut pending, body.len()) {
                        body.push(instr);
                    } else {
                        self.recover_line();
                    }
                }
                other => {
                    let found = other.describe();
                    self.error_at(&t, format!("expected instruction or `}}`, found {found}"));
                    self.next();
                    self.recover_line();
                }
            }
        }
        // Fall-through paths get an implicit `return` (unit result). A
        // trailing label also needs a landing instruction.
        let needs_return = body.is_empty()
            || labels.values().any(|&i| i == body.len())
            || !matches!(body.last(), Some(Instr::Return { .. }) | Some(Instr::Jmp { .. }));
        if needs_return {
            body.push(Instr::Return { value: None });
        }
        // Resolve jumps now that all labels are known.
        for pj in pending {
            match labels.get(&pj.label) {
                Some(&target) => match &mut body[pj.instr_index] {
                    Instr::Jmp { target: t, .. } => *t = target,
                    Instr::BrEq { target: t, .. } => *t = target,
                    _ => unreachable!("pending jump points at a non-jump"),
                },
                None => {
                    self.diags.push(Diagnostic::at_source(
                        DiagCode::UnknownLabel,
                        pj.line,
                        pj.col,
                        format!("unknown label {}", pj.label),
                    ));
                }
            }
        }
        (body, labels)
    }

    /// Operands up to end of line / closing brace.
    fn operands(&mut self) -> Vec<(Operand, Lexed)> {
        let mut ops = Vec::new();
        loop {
            let t = self.peek().clone();
            match &t.tok {
                Tok::Newline | Tok::RBrace | Tok::Eof => break,
                Tok::Ident(s) => {
                    ops.push((Operand::Local(s.clone()), t));
                    self.next();
                }
                Tok::Int(n) => {
                    ops.push((Operand::Int(*n), t));
                    self.next();
                }
                Tok::Sym(s) => {
                    ops.push((Operand::Sym(Symbol::new(s.clone())), t));
                    self.next();
                }
                other => {
                    let found = other.describe();
                    self.error_at(&t, format!("expected operand, found {found}"));
                    self.next();
                }
            }
        }
        ops
    }

    fn instruction(&mut self, pending: &mut Vec<PendingJump>, index: usize) -> Option<Instr> {
        let mtok = self.next();
        let mnemonic = match &mtok.tok {
            Tok::Ident(s) => s.clone(),
            _ => unreachable!("instruction called on non-ident"),
        };
        let ops = self.operands();

        let take_name = |p: &mut Parser, i: usize, what: &str| -> Option<String> {
            match ops.get(i) {
                Some((Operand::Local(s), _)) => Some(s.clone()),
                Some((_, t)) => {
                    let t = t.clone();
                    p.error_at(&t, format!("{mnemonic}: expected {what}"));
                    None
                }
                None => {
                    p.error_at(&mtok, format!("{mnemonic}: missing {what}"));
                    None
                }
            }
        };
        let take_op = |p: &mut Parser, i: usize, what: &str| -> Option<Operand> {
            match ops.get(i) {
                Some((op, _)) => Some(op.clone()),
                None => {
                    p.error_at(&mtok, format!("{mnemonic}: missing {what}"));
                    None
                }
            }
        };
        let exactly = |p: &mut Parser, n: usize| -> bool {
            if ops.len() > n {
                let t = ops[n].1.clone();
                p.error_at(&t, format!("{mnemonic}: unexpected extra operand"));
                false
            } else {
                true
            }
        };
        let rest_ops = |from: usize| -> Vec<Operand> {
            ops.iter().skip(from).map(|(o, _)| o.clone()).collect()
        };

        match mnemonic.as_str() {
            "const" => {
                let dst = take_name(self, 0, "destination local")?;
                let lit = match ops.get(1) {
                    Some((Operand::Int(n), _)) => Literal::Int(*n),
                    Some((Operand::Sym(s), _)) => Literal::Sym(s.clone()),
                    Some((_, t)) => {
                        let t = t.clone();
                        self.error_at(&t, "const: expected integer or symbol literal".into());
                        return None;
                    }
                    None => {
                        self.error_at(&mtok, "const: missing literal".into());
                        return None;
                    }
                };
                exactly(self, 2).then_some(Instr::Const { dst, lit })
            }
            "move" => {
                let dst = take_name(self, 0, "destination local")?;
                let src = take_op(self, 1, "source operand")?;
                exactly(self, 2).then_some(Instr::Move { dst, src })
            }
            "add" => {
                let dst = take_name(self, 0, "destination local")?;
                let a = take_op(self, 1, "first operand")?;
                let b = take_op(self, 2, "second operand")?;
                exactly(self, 3).then_some(Instr::Add { dst, a, b })
            }
            "pair" => {
                let dst = take_name(self, 0, "destination local")?;
                let a = take_op(self, 1, "first operand")?;
                let b = take_op(self, 2, "second operand")?;
                exactly(self, 3).then_some(Instr::Pair { dst, a, b })
            }
            "fst" => {
                let dst = take_name(self, 0, "destination local")?;
                let pair = take_op(self, 1, "pair operand")?;
                exactly(self, 2).then_some(Instr::Fst { dst, pair })
            }
            "snd" => {
                let dst = take_name(self, 0, "destination local")?;
                let pair = take_op(self, 1, "pair operand")?;
                exactly(self, 2).then_some(Instr::Snd { dst, pair })
            }
            "jmp" => {
                let label = take_name(self, 0, "label")?;
                if !exactly(self, 1) {
                    return None;
                }
                pending.push(PendingJump { instr_index: index, label: label.clone(), line: mtok.line, col: mtok.col });
                Some(Instr::Jmp { target: usize::MAX, label })
            }
            "br_eq" => {
                let a = take_op(self, 0, "first operand")?;
                let b = take_op(self, 1, "second operand")?;
                let label = take_name(self, 2, "label")?;
                if !exactly(self, 3) {
                    return None;
                }
                pending.push(PendingJump { instr_index: index, label: label.clone(), line: mtok.line, col: mtok.col });
                Some(Instr::BrEq { a, b, target: usize::MAX, label })
            }
            "call" => {
                let dst = take_name(self, 0, "destination local")?;
                let fname = take_name(self, 1, "function name")?;
                Some(Instr::Call { dst, fname, args: rest_ops(2) })
            }
            "spawn" => {
                let dst = take_name(self, 0, "destination local")?;
                let fname = take_name(self, 1, "function name")?;
                Some(Instr::Spawn { dst, fname, args: rest_ops(2) })
            }
            "self" => {
                let dst = take_name(self, 0, "destination local")?;
                exactly(self, 1).then_some(Instr::SelfRef { dst })
            }
            "send" => {
                let target = take_op(self, 0, "target operand")?;
                let msg = take_op(self, 1, "message operand")?;
                exactly(self, 2).then_some(Instr::Send { target, msg })
            }
            "recv" => {
                let dst = take_name(self, 0, "destination local")?;
                exactly(self, 1).then_some(Instr::Recv { dst })
            }
            "newcell" => {
                let dst = take_name(self, 0, "destination local")?;
                exactly(self, 1).then_some(Instr::NewCell { dst })
            }
            "cellread" => {
                let dst = take_name(self, 0, "destination local")?;
                let cell = take_op(self, 1, "cell operand")?;
                exactly(self, 2).then_some(Instr::CellRead { dst, cell })
            }
            "cellwrite" => {
                let cell = take_op(self, 0, "cell operand")?;
                let value = take_op(self, 1, "value operand")?;
                exactly(self, 2).then_some(Instr::CellWrite { cell, value })
            }
            "mech" => {
                let dst = take_name(self, 0, "destination local")?;
                let kind = take_name(self, 1, "mechanism kind")?;
                Some(Instr::Mech { dst, kind, params: rest_ops(2) })
            }
            "newobj" => {
                let dst = take_name(self, 0, "destination local")?;
                let obj = take_name(self, 1, "object name")?;
                exactly(self, 2).then_some(Instr::NewObj { dst, obj })
            }
            "req" => {
                let dst = take_name(self, 0, "destination local")?;
                let obj = take_op(self, 1, "object operand")?;
                let method = take_name(self, 2, "method name")?;
                Some(Instr::Req { dst, obj, method, args: rest_ops(3) })
            }
            "reqasync" => {
                let obj = take_op(self, 0, "object operand")?;
                let method = take_name(self, 1, "method name")?;
                Some(Instr::ReqAsync { obj, method, args: rest_ops(2) })
            }
            "emit" => {
                let value = take_op(self, 0, "value operand")?;
                exactly(self, 1).then_some(Instr::Emit { value })
            }
            "return" => {
                let value = ops.first().map(|(o, _)| o.clone());
                exactly(self, if value.is_some() { 1 } else { 0 })
                    .then_some(Instr::Return { value })
            }
            _ => {
                self.error_at(&mtok, format!("unknown instruction `{mnemonic}`"));
                None
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_program() {
        let p = parse_program("fn main() { emit 1 \n return }").unwrap();
        assert_eq!(p.functions.len(), 1);
        let f = &p.functions[0];
        assert_eq!(f.name, "main");
        assert!(f.params.is_empty());
        assert_eq!(
            f.body,
            vec![
                Instr::Emit { value: Operand::Int(1) },
                Instr::Return { value: None },
            ]
        );
    }

    #[test]
    fn unknown_label_is_reported() {
        let errs = parse_program("fn main() { jmp L }").unwrap_err();
        assert!(errs.iter().any(|d| d.code == DiagCode::UnknownLabel
            && d.message.contains("unknown label L")));
    }

    #[test]
    fn implicit_return_appended() {
        let p = parse_program("fn main() { emit 1 }").unwrap();
        assert_eq!(p.functions[0].body.last(), Some(&Instr::Return { value: None }));
    }

    #[test]
    fn labels_resolve_to_indices() {
        let p = parse_program("fn main() {\n top: emit 1\n jmp top\n}").unwrap();
        let f = &p.functions[0];
        assert_eq!(f.labels.get("top"), Some(&0));
        assert_eq!(f.body[1], Instr::Jmp { target: 0, label: "top".into() });
    }

    #[test]
    fn trailing_label_lands_on_implicit_return() {
        let p = parse_program("fn main() {\n br_eq 1 1 done\n emit 5\n done:\n}").unwrap();
        let f = &p.functions[0];
        assert_eq!(f.labels.get("done"), Some(&2));
        assert_eq!(f.body.len(), 3);
        assert_eq!(f.body[2], Instr::Return { value: None });
    }

    #[test]
    fn object_definition_parses() {
        let src = "obj counter [serialized] {\n state n = 0\n fn incr() { add n n 1 \n return n }\n}";
        let p = parse_program(src).unwrap();
        assert_eq!(p.objects.len(), 1);
        let o = &p.objects[0];
        assert_eq!(o.policy, MethodPolicy::Serialized);
        assert_eq!(o.statevars, vec![("n".to_string(), 0)]);
        assert_eq!(o.methods.len(), 1);
    }

    #[test]
    fn duplicate_names_are_reported() {
        let errs = parse_program("fn f() { return }\nfn f() { return }").unwrap_err();
        assert!(errs.iter().any(|d| d.code == DiagCode::DupName));
    }

    #[test]
    fn syntax_error_has_position() {
        let errs = parse_program("fn main( { emit 1 }").unwrap_err();
        assert!(errs
            .iter()
            .any(|d| matches!(d.loc, super::super::diag::DiagLoc::Source { line: 1, .. })));
    }

    #[test]
    fn parse_is_total_on_garbage() {
        let _ = parse_program("}} fn 12 obj [ :::");
    }
}
