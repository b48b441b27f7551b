//! Line-oriented lexer for guest program text. Newlines are significant:
//! they terminate instructions. `#` starts a comment running to end of line.

use super::diag::{DiagCode, Diagnostic};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    /// `:NAME`
    Sym(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Colon,
    Comma,
    Eq,
    Newline,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(n) => format!("integer `{n}`"),
            Tok::Sym(s) => format!("symbol `:{s}`"),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Newline => "end of line".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Lexed {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Tokenize the whole input. Lexing never aborts: unknown characters become
/// diagnostics and are skipped.
pub fn lex(text: &str) -> (Vec<Lexed>, Vec<Diagnostic>) {
    let mut toks = Vec::new();
    let mut diags = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut chars = text.chars().peekable();

    macro_rules! push {
        ($tok:expr, $l:expr, $c:expr) => {
            toks.push(Lexed { tok: $tok, line: $l, col: $c })
        };
    }

    while let Some(&c) = chars.peek() {
        let (tl, tc) = (line, col);
        match c {
            '\n' => {
                chars.next();
                push!(Tok::Newline, tl, tc);
                line += 1;
                col = 1;
            }
            ' ' | '\t' | '\r' => {
                chars.next();
                col += 1;
            }
            '#' => {
                while let Some(&c2) = chars.peek() {
                    if c2 == '\n' {
                        break;
                    }
                    chars.next();
                    col += 1;
                }
            }
            '{' => {
                chars.next();
                col += 1;
                push!(Tok::LBrace, tl, tc);
            }
            '}' => {
                chars.next();
                col += 1;
                push!(Tok::RBrace, tl, tc);
            }
            '(' => {
                chars.next();
                col += 1;
                push!(Tok::LParen, tl, tc);
            }
            ')' => {
                chars.next();
                col += 1;
                push!(Tok::RParen, tl, tc);
            }
            '[' => {
                chars.next();
                col += 1;
                push!(Tok::LBracket, tl, tc);
            }
            ']' => {
                chars.next();
                col += 1;
                push!(Tok::RBracket, tl, tc);
            }
            ',' => {
                chars.next();
                col += 1;
                push!(Tok::Comma, tl, tc);
            }
            '=' => {
                chars.next();
                col += 1;
                push!(Tok::Eq, tl, tc);
            }
            ':' => {
                chars.next();
                col += 1;
                // `:name` lexes as a symbol; a bare `:` is the label marker.
                if chars.peek().copied().is_some_and(is_ident_start) {
                    let mut s = String::new();
                    while let Some(&c2) = chars.peek() {
                        if is_ident_continue(c2) {
                            s.push(c2);
                            chars.next();
                            col += 1;
                        } else {
                            break;
                        }
                    }
                    push!(Tok::Sym(s), tl, tc);
                } else {
                    push!(Tok::Colon, tl, tc);
                }
            }
            '-' => {
                chars.next();
                col += 1;
                if chars.peek().copied().is_some_and(|c2| c2.is_ascii_digit()) {
                    let mut s = String::from("-");
                    while let Some(&c2) = chars.peek() {
                        if c2.is_ascii_digit() {
                            s.push(c2);
                            chars.next();
                            col += 1;
                        } else {
                            break;
                        }
                    }
                    match s.parse::<i64>() {
                        Ok(n) => push!(Tok::Int(n), tl, tc),
                        Err(_) => diags.push(Diagnostic::at_source(
                            DiagCode::Syntax,
                            tl,
                            tc,
                            format!("integer literal out of range: {s}"),
                        )),
                    }
                } else {
                    diags.push(Diagnostic::at_source(
                        DiagCode::Syntax,
                        tl,
                        tc,
                        "stray `-` (expected digits)",
                    ));
                }
            }
            c2 if c2.is_ascii_digit() => {
                let mut s = String::new();
                while let Some(&c3) = chars.peek() {
                    if c3.is_ascii_digit() {
                        s.push(c3);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                match s.parse::<i64>() {
                    Ok(n) => push!(Tok::Int(n), tl, tc),
                    Err(_) => diags.push(Diagnostic::at_source(
                        DiagCode::Syntax,
                        tl,
                        tc,
                        format!("integer literal out of range: {s}"),
                    )),
                }
            }
            c2 if is_ident_start(c2) => {
                let mut s = String::new();
                while let Some(&c3) = chars.peek() {
                    if is_ident_continue(c3) {
                        s.push(c3);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                push!(Tok::Ident(s), tl, tc);
            }
            other => {
                diags.push(Diagnostic::at_source(
                    DiagCode::Syntax,
                    tl,
                    tc,
                    format!("unexpected character `{other}`"),
                ));
                chars.next();
                col += 1;
            }
        }
    }
    toks.push(Lexed { tok: Tok::Eof, line, col });
    (toks, diags)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexes_symbols_and_labels() {
        let (toks, diags) = lex("loop: send ch :ACQ\n");
        assert!(diags.is_empty());
        let kinds: Vec<&Tok> = toks.iter().map(|t| &t.tok).collect();
        assert_eq!(
            kinds,
            vec![
                &Tok::Ident("loop".into()),
                &Tok::Colon,
                &Tok::Ident("send".into()),
                &Tok::Ident("ch".into()),
                &Tok::Sym("ACQ".into()),
                &Tok::Newline,
                &Tok::Eof,
            ]
        );
    }

    #[test]
    fn lexes_negative_ints_and_comments() {
        let (toks, diags) = lex("const x -42 # a comment\n");
        assert!(diags.is_empty());
        assert!(toks.iter().any(|t| t.tok == Tok::Int(-42)));
        assert!(!toks.iter().any(|t| matches!(&t.tok, Tok::Ident(s) if s == "comment")));
    }

    #[test]
    fn reports_unknown_character() {
        let (_, diags) = lex("emit 1 $\n");
        assert_eq!(diags.len(), 1);
        assert!(diags[0].message.contains('$'));
    }
}
