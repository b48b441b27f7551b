//! Diagnostics produced by parsing and validation.

use std::fmt;

/// Machine-readable diagnostic code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagCode {
    Syntax,
    DupName,
    UnknownLabel,
    UndeclaredLocal,
    UnknownFunction,
    UnknownObject,
    UnknownMethod,
    UnknownMechKind,
    ArityMismatch,
    EntryMissing,
    EntryParams,
    StatevarScope,
    StatevarShadow,
    EmptyProgram,
    StrictOoRawMemory,
}

impl DiagCode {
    pub fn as_str(&self) -> &'static str {
        match self {
            DiagCode::Syntax => "SYNTAX",
            DiagCode::DupName => "DUP_NAME",
            DiagCode::UnknownLabel => "UNKNOWN_LABEL",
            DiagCode::UndeclaredLocal => "UNDECLARED_LOCAL",
            DiagCode::UnknownFunction => "UNKNOWN_FUNCTION",
            DiagCode::UnknownObject => "UNKNOWN_OBJECT",
            DiagCode::UnknownMethod => "UNKNOWN_METHOD",
            DiagCode::UnknownMechKind => "UNKNOWN_MECH_KIND",
            DiagCode::ArityMismatch => "ARITY_MISMATCH",
            DiagCode::EntryMissing => "ENTRY_MISSING",
            DiagCode::EntryParams => "ENTRY_PARAMS",
            DiagCode::StatevarScope => "STATEVAR_SCOPE",
            DiagCode::StatevarShadow => "STATEVAR_SHADOW",
            DiagCode::EmptyProgram => "EMPTY_PROGRAM",
            DiagCode::StrictOoRawMemory => "STRICT_OO_RAW_MEMORY",
        }
    }
}

/// Where a diagnostic points: a source position, an instruction slot, or
/// nothing (whole-program conditions).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DiagLoc {
    /// 1-based line and column in the source text.
    Source { line: usize, col: usize },
    /// Function (or method) name and instruction index.
    Instr { function: String, index: usize },
    None,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub code: DiagCode,
    pub loc: DiagLoc,
    pub message: String,
}

impl Diagnostic {
    pub fn at_source(code: DiagCode, line: usize, col: usize, message: impl Into<String>) -> Self {
        Diagnostic { code, loc: DiagLoc::Source { line, col }, message: message.into() }
    }

    pub fn at_instr(code: DiagCode, function: &str, index: usize, message: impl Into<String>) -> Self {
        Diagnostic {
            code,
            loc: DiagLoc::Instr { function: function.to_string(), index },
            message: message.into(),
        }
    }

    pub fn general(code: DiagCode, message: impl Into<String>) -> Self {
        Diagnostic { code, loc: DiagLoc::None, message: message.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.loc {
            DiagLoc::Source { line, col } => {
                write!(f, "{}:{}: {}: {}", line, col, self.code.as_str(), self.message)
            }
            DiagLoc::Instr { function, index } => {
                write!(f, "{}@{}:{}: {}", self.code.as_str(), function, index, self.message)
            }
            DiagLoc::None => write!(f, "{}: {}", self.code.as_str(), self.message),
        }
    }
}
