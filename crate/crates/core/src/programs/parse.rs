//! Line-oriented parser for the pulse-program text format.
//!
//! The grammar, one instruction per line with `#` comments:
//!
//! ```text
//! atom <id> init=<e|g|i>
//! modes [n_max=<int>]
//! rabi <atom> <C1|C2> angle=<expr>
//! ramsey <atom> <R1|R2> transition=<e-g|g-i> angle=<expr> phase=<expr>
//! delay <expr>
//! measure <atom>
//! postselect <atom> <e|g|i>
//! param <name>[=<expr>]
//! ```
//!
//! Expressions contain no whitespace. Every malformed line produces a
//! diagnostic carrying its line and column; parsing continues so that one
//! pass reports all problems.

use std::fmt;

use crate::dynamics::Transition;
use crate::hilbert::{AtomLevel, ModeId};

use super::expr::Expr;
use super::{Instruction, Zone};

/// A single parse or validation problem, 1-based line and column.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, col {}: {}", self.line, self.column, self.message)
    }
}

/// Parse failure carrying every diagnostic found in the source.
#[derive(Clone, Debug)]
pub struct ParseError {
    pub diagnostics: Vec<Diagnostic>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.diagnostics.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}

struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let body = match line.find('#') {
        Some(pos) => &line[..pos],
        None => line,
    };
    let mut tokens = Vec::new();
    let mut start = None;
    for (i, ch) in body.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                tokens.push(Token {
                    text: &body[s..i],
                    column: s + 1,
                });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        tokens.push(Token {
            text: &body[s..],
            column: s + 1,
        });
    }
    tokens
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Split `key=value`, checking the key name.
fn keyed<'a>(tok: &Token<'a>, key: &str, diags: &mut Vec<Diagnostic>, line: usize) -> Option<(&'a str, usize)> {
    match tok.text.split_once('=') {
        Some((k, v)) if k == key => Some((v, tok.column + key.len() + 1)),
        Some((k, _)) => {
            diags.push(Diagnostic {
                line,
                column: tok.column,
                message: format!("expected `{key}=...`, found `{k}=...`"),
            });
            None
        }
        None => {
            diags.push(Diagnostic {
                line,
                column: tok.column,
                message: format!("expected `{key}=...`, found `{}`", tok.text),
            });
            None
        }
    }
}

// Recursive-descent expression parser over a single whitespace-free token.
struct ExprParser<'a> {
    src: &'a [u8],
    pos: usize,
    base_col: usize,
}

type ExprResult = Result<Expr, (usize, String)>;

impl<'a> ExprParser<'a> {
    fn new(src: &'a str, base_col: usize) -> Self {
        Self {
            src: src.as_bytes(),
            pos: 0,
            base_col,
        }
    }

    fn col(&self) -> usize {
        self.base_col + self.pos
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek();
        if c.is_some() {
            self.pos += 1;
        }
        c
    }

    fn parse(mut self) -> ExprResult {
        let e = self.expr()?;
        if self.pos != self.src.len() {
            return Err((self.col(), format!("unexpected `{}`", self.rest())));
        }
        Ok(e)
    }

    fn rest(&self) -> String {
        String::from_utf8_lossy(&self.src[self.pos..]).into_owned()
    }

    fn expr(&mut self) -> ExprResult {
        let mut lhs = self.term()?;
        while let Some(op) = self.peek() {
            match op {
                b'+' => {
                    self.bump();
                    lhs = Expr::add(lhs, self.term()?);
                }
                b'-' => {
                    self.bump();
                    lhs = Expr::sub(lhs, self.term()?);
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn term(&mut self) -> ExprResult {
        let mut lhs = self.unary()?;
        while let Some(op) = self.peek() {
            match op {
                b'*' => {
                    self.bump();
                    lhs = Expr::mul(lhs, self.unary()?);
                }
                b'/' => {
                    self.bump();
                    lhs = Expr::div(lhs, self.unary()?);
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> ExprResult {
        if self.peek() == Some(b'-') {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> ExprResult {
        match self.peek() {
            Some(b'(') => {
                self.bump();
                let inner = self.expr()?;
                if self.bump() != Some(b')') {
                    return Err((self.col(), "expected `)`".into()));
                }
                Ok(inner)
            }
            Some(b'$') => {
                self.bump();
                let start = self.pos;
                while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
                    self.bump();
                }
                if self.pos == start {
                    return Err((self.col(), "expected parameter name after `$`".into()));
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                if !is_ident(name) {
                    return Err((self.base_col + start, format!("invalid parameter name `{name}`")));
                }
                Ok(Expr::param(name))
            }
            Some(c) if c.is_ascii_digit() => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
                    self.bump();
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                match name {
                    "pi" => Ok(Expr::Pi),
                    "sqrt" | "acos" => {
                        if self.bump() != Some(b'(') {
                            return Err((self.col(), format!("expected `(` after `{name}`")));
                        }
                        let inner = self.expr()?;
                        if self.bump() != Some(b')') {
                            return Err((self.col(), format!("unclosed `{name}(`")));
                        }
                        Ok(if name == "sqrt" {
                            Expr::sqrt(inner)
                        } else {
                            Expr::acos(inner)
                        })
                    }
                    _ => Err((
                        self.base_col + start,
                        format!("unknown name `{name}` (parameters are written `${name}`)"),
                    )),
                }
            }
            Some(c) => Err((self.col(), format!("unexpected `{}`", c as char))),
            None => Err((self.col(), "unexpected end of expression".into())),
        }
    }

    fn number(&mut self) -> ExprResult {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.bump();
        }
        if self.peek() == Some(b'.') {
            self.bump();
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                self.bump();
            }
        }
        if matches!(self.peek(), Some(b'e') | Some(b'E')) {
            let mark = self.pos;
            self.bump();
            if matches!(self.peek(), Some(b'+') | Some(b'-')) {
                self.bump();
            }
            if matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    self.bump();
                }
            } else {
                self.pos = mark; // `e` belongs to something else; let caller fail
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse::<f64>()
            .map(Expr::Number)
            .map_err(|_| (self.base_col + start, format!("invalid number `{text}`")))
    }
}

fn parse_expr(text: &str, column: usize, line: usize, diags: &mut Vec<Diagnostic>) -> Option<Expr> {
    match ExprParser::new(text, column).parse() {
        Ok(e) => Some(e),
        Err((col, message)) => {
            diags.push(Diagnostic {
                line,
                column: col,
                message,
            });
            None
        }
    }
}

fn expect_len(
    tokens: &[Token<'_>],
    expected: std::ops::RangeInclusive<usize>,
    usage: &str,
    line: usize,
    diags: &mut Vec<Diagnostic>,
) -> bool {
    if expected.contains(&tokens.len()) {
        true
    } else {
        diags.push(Diagnostic {
            line,
            column: tokens[0].column,
            message: format!("usage: {usage}"),
        });
        false
    }
}

/// Parse program text into instructions plus their source lines.
pub(super) fn parse_instructions(
    source: &str,
) -> Result<(Vec<Instruction>, Vec<usize>), ParseError> {
    let mut instructions = Vec::new();
    let mut lines = Vec::new();
    let mut diags: Vec<Diagnostic> = Vec::new();

    for (i, raw) in source.lines().enumerate() {
        let line = i + 1;
        let tokens = tokenize(raw);
        if tokens.is_empty() {
            continue;
        }
        let head = &tokens[0];
        let before = diags.len();
        let instr: Option<Instruction> = match head.text {
            "atom" => {
                if expect_len(&tokens, 3..=3, "atom <id> init=<e|g|i>", line, &mut diags) {
                    let id = tokens[1].text;
                    if !is_ident(id) {
                        diags.push(Diagnostic {
                            line,
                            column: tokens[1].column,
                            message: format!("invalid atom id `{id}`"),
                        });
                    }
                    keyed(&tokens[2], "init", &mut diags, line).and_then(|(v, col)| {
                        match AtomLevel::parse(v) {
                            Some(level) => Some(Instruction::DeclareAtom {
                                id: id.to_string(),
                                init: level,
                            }),
                            None => {
                                diags.push(Diagnostic {
                                    line,
                                    column: col,
                                    message: format!("`{v}` is not a level (e, g, or i)"),
                                });
                                None
                            }
                        }
                    })
                } else {
                    None
                }
            }
            "modes" => {
                if expect_len(&tokens, 1..=2, "modes [n_max=<int>]", line, &mut diags) {
                    if tokens.len() == 1 {
                        Some(Instruction::DeclareModes { n_max: None })
                    } else {
                        keyed(&tokens[1], "n_max", &mut diags, line).and_then(|(v, col)| {
                            match v.parse::<u32>() {
                                Ok(n) if n >= 1 => {
                                    Some(Instruction::DeclareModes { n_max: Some(n) })
                                }
                                _ => {
                                    diags.push(Diagnostic {
                                        line,
                                        column: col,
                                        message: format!("`{v}` is not a valid n_max (integer >= 1)"),
                                    });
                                    None
                                }
                            }
                        })
                    }
                } else {
                    None
                }
            }
            "rabi" => {
                if expect_len(&tokens, 4..=4, "rabi <atom> <C1|C2> angle=<expr>", line, &mut diags)
                {
                    let atom = tokens[1].text.to_string();
                    let mode = ModeId::parse(tokens[2].text);
                    if mode.is_none() {
                        diags.push(Diagnostic {
                            line,
                            column: tokens[2].column,
                            message: format!("`{}` is not a cavity mode (C1 or C2)", tokens[2].text),
                        });
                    }
                    let angle = keyed(&tokens[3], "angle", &mut diags, line)
                        .and_then(|(v, col)| parse_expr(v, col, line, &mut diags));
                    match (mode, angle) {
                        (Some(mode), Some(angle)) => Some(Instruction::Rabi { atom, mode, angle }),
                        _ => None,
                    }
                } else {
                    None
                }
            }
            "ramsey" => {
                if expect_len(
                    &tokens,
                    6..=6,
                    "ramsey <atom> <R1|R2> transition=<e-g|g-i> angle=<expr> phase=<expr>",
                    line,
                    &mut diags,
                ) {
                    let atom = tokens[1].text.to_string();
                    let zone = match tokens[2].text {
                        "R1" | "r1" => Some(Zone::R1),
                        "R2" | "r2" => Some(Zone::R2),
                        other => {
                            diags.push(Diagnostic {
                                line,
                                column: tokens[2].column,
                                message: format!("`{other}` is not a Ramsey zone (R1 or R2)"),
                            });
                            None
                        }
                    };
                    let transition = keyed(&tokens[3], "transition", &mut diags, line).and_then(
                        |(v, col)| match Transition::parse(v) {
                            Some(t) => Some(t),
                            None => {
                                diags.push(Diagnostic {
                                    line,
                                    column: col,
                                    message: format!("`{v}` is not a transition (e-g or g-i)"),
                                });
                                None
                            }
                        },
                    );
                    let angle = keyed(&tokens[4], "angle", &mut diags, line)
                        .and_then(|(v, col)| parse_expr(v, col, line, &mut diags));
                    let phase = keyed(&tokens[5], "phase", &mut diags, line)
                        .and_then(|(v, col)| parse_expr(v, col, line, &mut diags));
                    match (zone, transition, angle, phase) {
                        (Some(zone), Some(transition), Some(angle), Some(phase)) => {
                            Some(Instruction::Ramsey {
                                atom,
                                zone,
                                transition,
                                angle,
                                phase,
                            })
                        }
                        _ => None,
                    }
                } else {
                    None
                }
            }
            "delay" => {
                if expect_len(&tokens, 2..=2, "delay <expr>", line, &mut diags) {
                    parse_expr(tokens[1].text, tokens[1].column, line, &mut diags)
                        .map(|duration| Instruction::Delay { duration })
                } else {
                    None
                }
            }
            "measure" => {
                if expect_len(&tokens, 2..=2, "measure <atom>", line, &mut diags) {
                    Some(Instruction::Measure {
                        atom: tokens[1].text.to_string(),
                    })
                } else {
                    None
                }
            }
            "postselect" => {
                if expect_len(&tokens, 3..=3, "postselect <atom> <e|g|i>", line, &mut diags) {
                    match AtomLevel::parse(tokens[2].text) {
                        Some(level) => Some(Instruction::Postselect {
                            atom: tokens[1].text.to_string(),
                            level,
                        }),
                        None => {
                            diags.push(Diagnostic {
                                line,
                                column: tokens[2].column,
                                message: format!("`{}` is not a level (e, g, or i)", tokens[2].text),
                            });
                            None
                        }
                    }
                } else {
                    None
                }
            }
            "param" => {
                if expect_len(&tokens, 2..=2, "param <name>[=<expr>]", line, &mut diags) {
                    let (name, default) = match tokens[1].text.split_once('=') {
                        Some((name, expr_text)) => {
                            let col = tokens[1].column + name.len() + 1;
                            let default = parse_expr(expr_text, col, line, &mut diags);
                            (name, default.map(Some))
                        }
                        None => (tokens[1].text, Some(None)),
                    };
                    if !is_ident(name) {
                        diags.push(Diagnostic {
                            line,
                            column: tokens[1].column,
                            message: format!("invalid parameter name `{name}`"),
                        });
                        None
                    } else {
                        default.map(|d| Instruction::Param {
                            name: name.to_string(),
                            default: d,
                        })
                    }
                } else {
                    None
                }
            }
            other => {
                diags.push(Diagnostic {
                    line,
                    column: head.column,
                    message: format!("unknown instruction `{other}`"),
                });
                None
            }
        };
        match instr {
            Some(instr) if diags.len() == before => {
                instructions.push(instr);
                lines.push(line);
            }
            _ => {}
        }
    }

    if diags.is_empty() {
        Ok((instructions, lines))
    } else {
        Err(ParseError { diagnostics: diags })
    }
}

/// Structural validation shared by `parse` and programmatic construction.
pub(super) fn validate_instructions(
    instructions: &[Instruction],
    lines: &[usize],
) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let mut atoms: Vec<&str> = Vec::new();
    let mut params: Vec<&str> = Vec::new();
    let mut measured: Vec<&str> = Vec::new();
    let mut modes_seen = false;
    let line_of = |i: usize| lines.get(i).copied().unwrap_or(0);

    let check_atom = |atom: &str, what: &str, i: usize, atoms: &[&str], diags: &mut Vec<Diagnostic>| {
        if !atoms.contains(&atom) {
            diags.push(Diagnostic {
                line: line_of(i),
                column: 1,
                message: format!("{what} references undeclared atom `{atom}`"),
            });
        }
    };

    for (i, instr) in instructions.iter().enumerate() {
        match instr {
            Instruction::DeclareAtom { id, .. } => {
                if atoms.contains(&id.as_str()) {
                    diags.push(Diagnostic {
                        line: line_of(i),
                        column: 1,
                        message: format!("atom `{id}` declared twice"),
                    });
                } else {
                    atoms.push(id);
                }
            }
            Instruction::DeclareModes { .. } => {
                if modes_seen {
                    diags.push(Diagnostic {
                        line: line_of(i),
                        column: 1,
                        message: "duplicate modes line".into(),
                    });
                }
                modes_seen = true;
            }
            Instruction::Param { name, .. } => {
                if params.contains(&name.as_str()) {
                    diags.push(Diagnostic {
                        line: line_of(i),
                        column: 1,
                        message: format!("parameter `{name}` declared twice"),
                    });
                } else {
                    params.push(name);
                }
            }
            Instruction::Rabi { atom, .. } => {
                check_atom(atom, "rabi", i, &atoms, &mut diags);
                if measured.contains(&atom.as_str()) {
                    diags.push(Diagnostic {
                        line: line_of(i),
                        column: 1,
                        message: format!("atom `{atom}` is pulsed after being measured"),
                    });
                }
            }
            Instruction::Ramsey { atom, .. } => {
                check_atom(atom, "ramsey", i, &atoms, &mut diags);
                if measured.contains(&atom.as_str()) {
                    diags.push(Diagnostic {
                        line: line_of(i),
                        column: 1,
                        message: format!("atom `{atom}` is pulsed after being measured"),
                    });
                }
            }
            Instruction::Delay { .. } => {}
            Instruction::Measure { atom } => {
                check_atom(atom, "measure", i, &atoms, &mut diags);
                if !measured.contains(&atom.as_str()) {
                    measured.push(atom);
                }
            }
            Instruction::Postselect { atom, .. } => {
                check_atom(atom, "postselect", i, &atoms, &mut diags);
                if !measured.contains(&atom.as_str()) {
                    diags.push(Diagnostic {
                        line: line_of(i),
                        column: 1,
                        message: format!("postselect on `{atom}` before it is measured"),
                    });
                }
            }
        }
    }

    if atoms.is_empty() {
        diags.push(Diagnostic {
            line: 0,
            column: 1,
            message: "program declares no atoms".into(),
        });
    }
    diags
}

/// Render instructions back to the text format.
pub(super) fn serialize_instructions(instructions: &[Instruction]) -> String {
    let mut out = String::new();
    for instr in instructions {
        match instr {
            Instruction::DeclareAtom { id, init } => {
                out.push_str(&format!("atom {id} init={init}\n"));
            }
            Instruction::DeclareModes { n_max } => match n_max {
                Some(n) => out.push_str(&format!("modes n_max={n}\n")),
                None => out.push_str("modes\n"),
            },
            Instruction::Rabi { atom, mode, angle } => {
                out.push_str(&format!("rabi {atom} {mode} angle={angle}\n"));
            }
            Instruction::Ramsey {
                atom,
                zone,
                transition,
                angle,
                phase,
            } => {
                out.push_str(&format!(
                    "ramsey {atom} {zone} transition={transition} angle={angle} phase={phase}\n"
                ));
            }
            Instruction::Delay { duration } => {
                out.push_str(&format!("delay {duration}\n"));
            }
            Instruction::Measure { atom } => {
                out.push_str(&format!("measure {atom}\n"));
            }
            Instruction::Postselect { atom, level } => {
                out.push_str(&format!("postselect {atom} {level}\n"));
            }
            Instruction::Param { name, default } => match default {
                Some(expr) => out.push_str(&format!("param {name}={expr}\n")),
                None => out.push_str(&format!("param {name}\n")),
            },
        }
    }
    out
}
