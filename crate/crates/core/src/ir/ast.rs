//! Guest program structure: functions, objects, and the instruction set.

use std::collections::BTreeMap;

use crate::value::Symbol;

/// A value-position operand in guest source: a local name, an integer
/// literal, or a symbol literal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operand {
    Local(String),
    Int(i64),
    Sym(Symbol),
}

/// Literal argument of `const`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Literal {
    Int(i64),
    Sym(Symbol),
}

/// One guest instruction. Jump targets are resolved to instruction indices
/// at parse time; the original label name is kept for printing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instr {
    Const { dst: String, lit: Literal },
    Move { dst: String, src: Operand },
    Add { dst: String, a: Operand, b: Operand },
    Pair { dst: String, a: Operand, b: Operand },
    Fst { dst: String, pair: Operand },
    Snd { dst: String, pair: Operand },
    Jmp { target: usize, label: String },
    BrEq { a: Operand, b: Operand, target: usize, label: String },
    Call { dst: String, fname: String, args: Vec<Operand> },
    Spawn { dst: String, fname: String, args: Vec<Operand> },
    SelfRef { dst: String },
    Send { target: Operand, msg: Operand },
    Recv { dst: String },
    NewCell { dst: String },
    CellRead { dst: String, cell: Operand },
    CellWrite { cell: Operand, value: Operand },
    Mech { dst: String, kind: String, params: Vec<Operand> },
    NewObj { dst: String, obj: String },
    Req { dst: String, obj: Operand, method: String, args: Vec<Operand> },
    ReqAsync { obj: Operand, method: String, args: Vec<Operand> },
    Emit { value: Operand },
    Return { value: Option<Operand> },
}

impl Instr {
    /// Mnemonic as written in guest source.
    pub fn mnemonic(&self) -> &'static str {
        match self {
            Instr::Const { .. } => "const",
            Instr::Move { .. } => "move",
            Instr::Add { .. } => "add",
            Instr::Pair { .. } => "pair",
            Instr::Fst { .. } => "fst",
            Instr::Snd { .. } => "snd",
            Instr::Jmp { .. } => "jmp",
            Instr::BrEq { .. } => "br_eq",
            Instr::Call { .. } => "call",
            Instr::Spawn { .. } => "spawn",
            Instr::SelfRef { .. } => "self",
            Instr::Send { .. } => "send",
            Instr::Recv { .. } => "recv",
            Instr::NewCell { .. } => "newcell",
            Instr::CellRead { .. } => "cellread",
            Instr::CellWrite { .. } => "cellwrite",
            Instr::Mech { .. } => "mech",
            Instr::NewObj { .. } => "newobj",
            Instr::Req { .. } => "req",
            Instr::ReqAsync { .. } => "reqasync",
            Instr::Emit { .. } => "emit",
            Instr::Return { .. } => "return",
        }
    }

    /// True for the raw shared-memory instructions flagged by strict mode.
    pub fn touches_cells(&self) -> bool {
        matches!(
            self,
            Instr::NewCell { .. } | Instr::CellRead { .. } | Instr::CellWrite { .. }
        )
    }
}

/// A function definition: shared by free functions and object methods.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionDef {
    pub name: String,
    pub params: Vec<String>,
    pub body: Vec<Instr>,
    /// Label name to instruction index, per function.
    pub labels: BTreeMap<String, usize>,
}

/// How an object schedules its own method activations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodPolicy {
    /// At most one live activation at a time.
    Serialized,
    /// Activations step round-robin in creation order.
    Interleaved,
}

impl MethodPolicy {
    pub fn as_str(&self) -> &'static str {
        match self {
            MethodPolicy::Serialized => "serialized",
            MethodPolicy::Interleaved => "interleaved",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectDef {
    pub name: String,
    pub policy: MethodPolicy,
    /// Ordered state variable names with integer initializers.
    pub statevars: Vec<(String, i64)>,
    pub methods: Vec<FunctionDef>,
}

impl ObjectDef {
    pub fn method(&self, name: &str) -> Option<(usize, &FunctionDef)> {
        self.methods.iter().enumerate().find(|(_, m)| m.name == name)
    }

    pub fn has_statevar(&self, name: &str) -> bool {
        self.statevars.iter().any(|(n, _)| n == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgramDef {
    pub functions: Vec<FunctionDef>,
    pub objects: Vec<ObjectDef>,
    /// Entry function name, "main" by default.
    pub entry: String,
}

impl ProgramDef {
    pub fn function(&self, name: &str) -> Option<(usize, &FunctionDef)> {
        self.functions.iter().enumerate().find(|(_, f)| f.name == name)
    }

    pub fn object(&self, name: &str) -> Option<(usize, &ObjectDef)> {
        self.objects.iter().enumerate().find(|(_, o)| o.name == name)
    }

    /// Any object declaring a method with this name.
    pub fn any_object_with_method(&self, method: &str) -> bool {
        self.objects.iter().any(|o| o.method(method).is_some())
    }
}

/// The symbol used for unnamed things in traces.
pub fn sym(name: &str) -> Symbol {
    Symbol::new(name)
}
