//! OpenQASM 2.0 subset: a single `qreg`, an optional `creg`, the gate
//! vocabulary of [`GateKind`], terminal `measure`, and `barrier`.

use std::fmt::Write as _;

use thiserror::Error;

use crate::circuit::{Circuit, CircuitError, Gate, GateKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QasmError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: unsupported gate `{name}`")]
    UnsupportedGate { line: usize, col: usize, name: String },
    #[error("{line}:{col}: register `{name}` redeclared")]
    Redeclaration { line: usize, col: usize, name: String },
    #[error("{line}:{col}: index {index} out of range for register `{register}` of size {size}")]
    IndexOutOfRange {
        line: usize,
        col: usize,
        register: String,
        index: usize,
        size: usize,
    },
    #[error("{line}:{col}: {source}")]
    Invalid {
        line: usize,
        col: usize,
        source: CircuitError,
    },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    Str(String),
    Sym(char),
    Arrow,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, QasmError> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let advance = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
        } else if c.is_whitespace() {
            advance(1, &mut i, &mut col);
        } else if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                advance(1, &mut i, &mut col);
            }
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                line: tl,
                col: tc,
            });
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                advance(1, &mut i, &mut col);
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    let n = j - i;
                    advance(n, &mut i, &mut col);
                }
            }
            let s: String = chars[start..i].iter().collect();
            let v = s.parse::<f64>().map_err(|_| QasmError::Syntax {
                line: tl,
                col: tc,
                msg: format!("bad number `{s}`"),
            })?;
            out.push(Token {
                tok: Tok::Num(v),
                line: tl,
                col: tc,
            });
        } else if c == '"' {
            let start = i + 1;
            advance(1, &mut i, &mut col);
            while i < chars.len() && chars[i] != '"' && chars[i] != '\n' {
                advance(1, &mut i, &mut col);
            }
            if chars.get(i) != Some(&'"') {
                return Err(QasmError::Syntax {
                    line: tl,
                    col: tc,
                    msg: "unterminated string".into(),
                });
            }
            let s = chars[start..i].iter().collect();
            advance(1, &mut i, &mut col);
            out.push(Token {
                tok: Tok::Str(s),
                line: tl,
                col: tc,
            });
        } else if c == '-' && chars.get(i + 1) == Some(&'>') {
            advance(2, &mut i, &mut col);
            out.push(Token {
                tok: Tok::Arrow,
                line: tl,
                col: tc,
            });
        } else if "[](),;+-*/^{}".contains(c) {
            advance(1, &mut i, &mut col);
            out.push(Token {
                tok: Tok::Sym(c),
                line: tl,
                col: tc,
            });
        } else {
            return Err(QasmError::Syntax {
                line: tl,
                col: tc,
                msg: format!("unexpected character `{c}`"),
            });
        }
    }
    Ok(out)
}

struct Register {
    name: String,
    size: usize,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    eof: (usize, usize),
    qreg: Option<Register>,
    creg: Option<Register>,
    /// classical bit -> measured qubit
    clbits: Vec<Option<usize>>,
    circuit: Option<Circuit>,
}

enum Operand {
    Bit(usize),
    Whole,
}

impl Parser {
    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .map(|t| (t.line, t.col))
            .unwrap_or(self.eof)
    }

    fn syntax(&self, msg: impl Into<String>) -> QasmError {
        let (line, col) = self.here();
        QasmError::Syntax {
            line,
            col,
            msg: msg.into(),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.tok.clone());
        self.pos += 1;
        t
    }

    fn expect_sym(&mut self, c: char) -> Result<(), QasmError> {
        match self.peek() {
            Some(Tok::Sym(s)) if *s == c => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.syntax(format!("expected `{c}`"))),
        }
    }

    fn eat_sym(&mut self, c: char) -> bool {
        if matches!(self.peek(), Some(Tok::Sym(s)) if *s == c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Result<String, QasmError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.syntax("expected identifier")),
        }
    }

    fn uint(&mut self) -> Result<usize, QasmError> {
        match self.peek() {
            Some(Tok::Num(v)) if v.fract() == 0.0 && *v >= 0.0 => {
                let v = *v as usize;
                self.pos += 1;
                Ok(v)
            }
            _ => Err(self.syntax("expected non-negative integer")),
        }
    }

    // expr := term (('+'|'-') term)*
    fn expr(&mut self) -> Result<f64, QasmError> {
        let mut v = self.term()?;
        loop {
            if self.eat_sym('+') {
                v += self.term()?;
            } else if self.eat_sym('-') {
                v -= self.term()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn term(&mut self) -> Result<f64, QasmError> {
        let mut v = self.unary()?;
        loop {
            if self.eat_sym('*') {
                v *= self.unary()?;
            } else if self.eat_sym('/') {
                v /= self.unary()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn unary(&mut self) -> Result<f64, QasmError> {
        if self.eat_sym('-') {
            return Ok(-self.unary()?);
        }
        if self.eat_sym('+') {
            return self.unary();
        }
        let base = self.atom()?;
        if self.eat_sym('^') {
            return Ok(base.powf(self.unary()?));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<f64, QasmError> {
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(v)
            }
            Some(Tok::Ident(name)) if name == "pi" => {
                self.pos += 1;
                Ok(std::f64::consts::PI)
            }
            Some(Tok::Sym('(')) => {
                self.pos += 1;
                let v = self.expr()?;
                self.expect_sym(')')?;
                Ok(v)
            }
            _ => Err(self.syntax("expected expression")),
        }
    }

    fn operand(&mut self, want_quantum: bool) -> Result<(Operand, (usize, usize)), QasmError> {
        let at = self.here();
        let name = self.ident()?;
        let reg = if want_quantum { &self.qreg } else { &self.creg };
        let Some(reg) = reg else {
            return Err(QasmError::Syntax {
                line: at.0,
                col: at.1,
                msg: format!("undeclared register `{name}`"),
            });
        };
        if reg.name != name {
            return Err(QasmError::Syntax {
                line: at.0,
                col: at.1,
                msg: format!("unknown register `{name}`"),
            });
        }
        let size = reg.size;
        if self.eat_sym('[') {
            let idx_at = self.here();
            let idx = self.uint()?;
            self.expect_sym(']')?;
            if idx >= size {
                return Err(QasmError::IndexOutOfRange {
                    line: idx_at.0,
                    col: idx_at.1,
                    register: name,
                    index: idx,
                    size,
                });
            }
            Ok((Operand::Bit(idx), at))
        } else {
            Ok((Operand::Whole, at))
        }
    }

    fn declare(&mut self, quantum: bool) -> Result<(), QasmError> {
        let at = self.here();
        let name = self.ident()?;
        self.expect_sym('[')?;
        let size = self.uint()?;
        self.expect_sym(']')?;
        self.expect_sym(';')?;
        let taken = [&self.qreg, &self.creg]
            .iter()
            .any(|r| r.as_ref().is_some_and(|r| r.name == name));
        let slot = if quantum { &self.qreg } else { &self.creg };
        if slot.is_some() || taken {
            return Err(QasmError::Redeclaration {
                line: at.0,
                col: at.1,
                name,
            });
        }
        if size == 0 {
            return Err(QasmError::Syntax {
                line: at.0,
                col: at.1,
                msg: "register of size zero".into(),
            });
        }
        let reg = Some(Register { name, size });
        if quantum {
            self.circuit = Some(Circuit::new("circuit", size));
            self.qreg = reg;
        } else {
            self.clbits = vec![None; size];
            self.creg = reg;
        }
        Ok(())
    }

    fn push(&mut self, gate: Gate, at: (usize, usize)) -> Result<(), QasmError> {
        let circuit = self.circuit.as_mut().ok_or(QasmError::Syntax {
            line: at.0,
            col: at.1,
            msg: "gate before qreg declaration".into(),
        })?;
        circuit.push(gate).map_err(|source| QasmError::Invalid {
            line: at.0,
            col: at.1,
            source,
        })
    }

    fn measure(&mut self, at: (usize, usize)) -> Result<(), QasmError> {
        let (q, _) = self.operand(true)?;
        if !matches!(self.next(), Some(Tok::Arrow)) {
            self.pos -= 1;
            return Err(self.syntax("expected `->`"));
        }
        let (c, c_at) = self.operand(false)?;
        self.expect_sym(';')?;
        let qsize = self.qreg.as_ref().map_or(0, |r| r.size);
        let csize = self.creg.as_ref().map_or(0, |r| r.size);
        let pairs: Vec<(usize, usize)> = match (q, c) {
            (Operand::Bit(q), Operand::Bit(c)) => vec![(q, c)],
            (Operand::Whole, Operand::Whole) if qsize == csize => (0..qsize).map(|i| (i, i)).collect(),
            _ => {
                return Err(QasmError::Syntax {
                    line: c_at.0,
                    col: c_at.1,
                    msg: "measure operands must both be bits or equal-size registers".into(),
                })
            }
        };
        for (q, c) in pairs {
            if self.clbits[c].is_some() {
                return Err(QasmError::Syntax {
                    line: c_at.0,
                    col: c_at.1,
                    msg: format!("classical bit {c} written twice"),
                });
            }
            self.clbits[c] = Some(q);
            self.push(Gate::measure(q), at)?;
        }
        Ok(())
    }

    fn gate(&mut self, name: String, at: (usize, usize)) -> Result<(), QasmError> {
        let kind: GateKind = name.parse().map_err(|_| QasmError::UnsupportedGate {
            line: at.0,
            col: at.1,
            name: name.clone(),
        })?;
        let mut params = Vec::new();
        if self.eat_sym('(') {
            if !self.eat_sym(')') {
                loop {
                    params.push(self.expr()?);
                    if self.eat_sym(')') {
                        break;
                    }
                    self.expect_sym(',')?;
                }
            }
        }
        let mut operands = vec![self.operand(true)?.0];
        while self.eat_sym(',') {
            operands.push(self.operand(true)?.0);
        }
        self.expect_sym(';')?;
        let size = self.qreg.as_ref().map_or(0, |r| r.size);
        let invalid = |source| QasmError::Invalid {
            line: at.0,
            col: at.1,
            source,
        };
        let all_bits: Option<Vec<usize>> = operands
            .iter()
            .map(|o| match o {
                Operand::Bit(b) => Some(*b),
                Operand::Whole => None,
            })
            .collect();
        match (kind, all_bits) {
            (_, Some(qubits)) => {
                let g = Gate::new(kind, qubits, params).map_err(invalid)?;
                self.push(g, at)
            }
            (GateKind::Barrier, None) => {
                let g = Gate::new(kind, (0..size).collect(), params).map_err(invalid)?;
                self.push(g, at)
            }
            (_, None) if operands.len() == 1 && kind.arity() == Some(1) => {
                for q in 0..size {
                    let g = Gate::new(kind, vec![q], params.clone()).map_err(invalid)?;
                    self.push(g, at)?;
                }
                Ok(())
            }
            _ => Err(QasmError::Syntax {
                line: at.0,
                col: at.1,
                msg: "register broadcast is only supported for single-qubit gates".into(),
            }),
        }
    }

    fn statement(&mut self) -> Result<(), QasmError> {
        let at = self.here();
        let word = self.ident()?;
        match word.as_str() {
            "OPENQASM" => {
                match self.next() {
                    Some(Tok::Num(v)) if (v - 2.0).abs() < 1e-9 => {}
                    _ => {
                        self.pos -= 1;
                        return Err(self.syntax("only OPENQASM 2.0 is supported"));
                    }
                }
                self.expect_sym(';')
            }
            "include" => {
                if !matches!(self.next(), Some(Tok::Str(_))) {
                    self.pos -= 1;
                    return Err(self.syntax("expected file name"));
                }
                self.expect_sym(';')
            }
            "qreg" => self.declare(true),
            "creg" => self.declare(false),
            "measure" => self.measure(at),
            "gate" | "opaque" | "if" | "reset" => Err(QasmError::Syntax {
                line: at.0,
                col: at.1,
                msg: format!("`{word}` is outside the supported subset"),
            }),
            _ => self.gate(word, at),
        }
    }
}

/// Parses an OpenQASM 2.0 program in the supported subset.
pub fn parse_qasm(text: &str) -> Result<Circuit, QasmError> {
    let toks = lex(text)?;
    let eof = toks.last().map_or((1, 1), |t| (t.line, t.col + 1));
    let mut p = Parser {
        toks,
        pos: 0,
        eof,
        qreg: None,
        creg: None,
        clbits: Vec::new(),
        circuit: None,
    };
    while p.pos < p.toks.len() {
        p.statement()?;
    }
    let mut circuit = p.circuit.ok_or(QasmError::Syntax {
        line: eof.0,
        col: eof.1,
        msg: "missing qreg declaration".into(),
    })?;
    // classical bit order defines the bitstring order
    circuit.measured_qubits = p.clbits.iter().filter_map(|q| *q).collect();
    Ok(circuit)
}

/// Renders an angle with at least 12 significant digits; the shortest
/// round-trip form is padded with zeros so parsing it back is exact.
pub fn format_angle(x: f64) -> String {
    let mut s = format!("{x}");
    if !s.contains('.') {
        s.push('.');
    }
    let sig = s
        .chars()
        .filter(|c| c.is_ascii_digit())
        .skip_while(|&c| c == '0')
        .count();
    let sig = if x == 0.0 { 1 } else { sig };
    for _ in sig..12 {
        s.push('0');
    }
    s
}

fn write_gate(out: &mut String, g: &Gate) {
    out.push_str(g.kind.name());
    if !g.params.is_empty() {
        let ps: Vec<String> = g.params.iter().map(|&p| format_angle(p)).collect();
        let _ = write!(out, "({})", ps.join(","));
    }
    let qs: Vec<String> = g.qubits.iter().map(|q| format!("q[{q}]")).collect();
    let _ = writeln!(out, " {};", qs.join(","));
}

/// Emits OpenQASM 2.0 text that parses back to a structurally equal circuit.
pub fn emit_qasm(c: &Circuit) -> String {
    emit_with_header(c, &[])
}

pub(crate) fn emit_with_header(c: &Circuit, comments: &[String]) -> String {
    let mut out = String::new();
    out.push_str("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    for line in comments {
        let _ = writeln!(out, "// {line}");
    }
    let _ = writeln!(out, "qreg q[{}];", c.num_qubits);
    if !c.measured_qubits.is_empty() {
        let _ = writeln!(out, "creg c[{}];", c.measured_qubits.len());
    }
    for g in &c.gates {
        if g.kind == GateKind::Measure {
            let q = g.qubits[0];
            let bit = c
                .measured_qubits
                .iter()
                .position(|&m| m == q)
                .expect("measured qubit is listed");
            let _ = writeln!(out, "measure q[{q}] -> c[{bit}];");
        } else {
            write_gate(&mut out, g);
        }
    }
    out
}
