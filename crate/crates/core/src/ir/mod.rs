//! The guest instruction set: program structure, parsing, printing, and
//! static validation.

pub mod ast;
pub mod diag;
mod lexer;
pub mod parser;
pub mod printer;
pub mod validate;

pub use ast::{
    FunctionDef, Instr, Literal, MethodPolicy, ObjectDef, Operand, ProgramDef,
};
pub use diag::{DiagCode, DiagLoc, Diagnostic};
pub use parser::parse_program;
pub use printer::print_program;
pub use validate::validate;
