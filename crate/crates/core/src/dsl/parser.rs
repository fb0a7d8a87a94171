use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{BodyAtom, BridgeSource, Clause, ParseError, Program};
use crate::symbol::{is_valid_symbol, NodeId, SymbolId};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Number(u32),
    LParen,
    RParen,
    Comma,
    Dot,
    Neck,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Number(n) => format!("number `{n}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Neck => "`:-`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn syntax(line: usize, col: usize, expected: &str, found: String) -> ParseError {
    ParseError::Syntax { line, col, expected: expected.to_string(), found }
}

fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut col) = (1usize, 1usize);
    while let Some(&c) = chars.peek() {
        let (start_line, start_col) = (line, col);
        let mut bump = |chars: &mut core::iter::Peekable<core::str::Chars<'_>>| {
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            c
        };
        let tok = match c {
            c if c.is_whitespace() => {
                bump(&mut chars);
                continue;
            }
            '%' => {
                while chars.peek().is_some_and(|&c| c != '\n') {
                    bump(&mut chars);
                }
                continue;
            }
            '(' => {
                bump(&mut chars);
                Tok::LParen
            }
            ')' => {
                bump(&mut chars);
                Tok::RParen
            }
            ',' => {
                bump(&mut chars);
                Tok::Comma
            }
            '.' => {
                bump(&mut chars);
                Tok::Dot
            }
            ':' => {
                bump(&mut chars);
                if chars.peek() == Some(&'-') {
                    bump(&mut chars);
                    Tok::Neck
                } else {
                    return Err(syntax(start_line, start_col, "`:-`", "`:`".into()));
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        s.push(c);
                        bump(&mut chars);
                    } else {
                        break;
                    }
                }
                Tok::Ident(s)
            }
            c if c.is_ascii_digit() => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_digit() {
                        s.push(c);
                        bump(&mut chars);
                    } else {
                        break;
                    }
                }
                match s.parse() {
                    Ok(n) => Tok::Number(n),
                    Err(_) => {
                        return Err(syntax(
                            start_line,
                            start_col,
                            "a node number",
                            format!("number `{s}` out of range"),
                        ))
                    }
                }
            }
            other => {
                return Err(syntax(start_line, start_col, "a token", format!("character `{other}`")))
            }
        };
        out.push(Token { tok, line: start_line, col: start_col });
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, expected: &str) -> ParseError {
        let t = self.peek();
        syntax(t.line, t.col, expected, t.tok.describe())
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if self.peek().tok == tok {
            self.next();
            Ok(())
        } else {
            Err(self.error_here(&tok.describe()))
        }
    }

    fn ident(&mut self, expected: &str) -> Result<String, ParseError> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let s = s.clone();
                self.next();
                Ok(s)
            }
            _ => Err(self.error_here(expected)),
        }
    }

    fn symbol(&mut self) -> Result<SymbolId, ParseError> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::Ident(s) if is_valid_symbol(s) => {
                self.next();
                Ok(SymbolId::new(s).expect("validated"))
            }
            Tok::Ident(s) if s == "X" => {
                Err(syntax(t.line, t.col, "a symbol name", "reserved variable `X`".into()))
            }
            _ => Err(self.error_here("a symbol name")),
        }
    }

    // `name(symbol)`
    fn atom(&mut self, allowed: &[&str]) -> Result<(String, SymbolId), ParseError> {
        let expected = match allowed {
            [a, b] => format!("`{a}` or `{b}`"),
            _ => format!("one of {}", allowed.join(", ")),
        };
        let t = self.peek().clone();
        let name = self.ident(&expected)?;
        if !allowed.contains(&name.as_str()) {
            return Err(syntax(t.line, t.col, &expected, t.tok.describe()));
        }
        self.expect(Tok::LParen)?;
        let arg = self.symbol()?;
        self.expect(Tok::RParen)?;
        Ok((name, arg))
    }

    fn body(&mut self, allowed: &[&str]) -> Result<Vec<BodyAtom>, ParseError> {
        let mut atoms = Vec::new();
        loop {
            let (name, arg) = self.atom(allowed)?;
            atoms.push(match name.as_str() {
                "justificationIsPresent" => BodyAtom::JustificationIsPresent(arg),
                "generated" => BodyAtom::Generated(arg),
                "datum" => BodyAtom::Datum(arg),
                _ => BodyAtom::DatumIsInternal(arg),
            });
            match self.peek().tok {
                Tok::Comma => {
                    self.next();
                }
                Tok::Dot => {
                    self.next();
                    return Ok(atoms);
                }
                _ => return Err(self.error_here("`,` or `.`")),
            }
        }
    }

    fn bridge(&mut self) -> Result<BridgeSource, ParseError> {
        self.expect(Tok::LParen)?;
        self.variable()?;
        self.expect(Tok::RParen)?;
        self.expect(Tok::Neck)?;
        let t = self.peek().clone();
        let source = match self.ident("`generated` or `received`")?.as_str() {
            "generated" => BridgeSource::Generated,
            "received" => BridgeSource::Received,
            _ => return Err(syntax(t.line, t.col, "`generated` or `received`", t.tok.describe())),
        };
        self.expect(Tok::LParen)?;
        self.variable()?;
        self.expect(Tok::RParen)?;
        self.expect(Tok::Dot)?;
        Ok(source)
    }

    fn variable(&mut self) -> Result<(), ParseError> {
        match &self.peek().tok {
            Tok::Ident(s) if s == "X" => {
                self.next();
                Ok(())
            }
            _ => Err(self.error_here("variable `X`")),
        }
    }

    fn clause(&mut self) -> Result<(Clause, usize), ParseError> {
        const HEADS: &str = "a clause head (justification, generated, received, \
                             justificationIsPresent, datum or datumIsInternal)";
        let t = self.peek().clone();
        let head = self.ident(HEADS)?;
        let clause = match head.as_str() {
            "justificationIsPresent" => Clause::PresenceBridge(self.bridge()?),
            "justification" | "generated" | "received" => {
                self.expect(Tok::LParen)?;
                let id = self.symbol()?;
                let mut source = None;
                if head == "received" && self.peek().tok == Tok::Comma {
                    self.next();
                    match self.peek().tok {
                        Tok::Number(n) => {
                            self.next();
                            source = Some(NodeId(n));
                        }
                        _ => return Err(self.error_here("a node number")),
                    }
                }
                self.expect(Tok::RParen)?;
                self.expect(Tok::Dot)?;
                match head.as_str() {
                    "justification" => Clause::JustificationDecl(id),
                    "generated" => Clause::GeneratedFact(id),
                    _ => Clause::ReceivedFact { id, source },
                }
            }
            "datum" => {
                self.expect(Tok::LParen)?;
                let id = self.symbol()?;
                self.expect(Tok::RParen)?;
                self.expect(Tok::Neck)?;
                let body = self.body(&["justificationIsPresent", "datum"])?;
                Clause::DatumRule { id, body }
            }
            "datumIsInternal" => {
                self.expect(Tok::LParen)?;
                let id = self.symbol()?;
                self.expect(Tok::RParen)?;
                self.expect(Tok::Neck)?;
                let body = self.body(&["generated", "datumIsInternal"])?;
                Clause::DatumInternalRule { id, body }
            }
            _ => return Err(syntax(t.line, t.col, HEADS, t.tok.describe())),
        };
        Ok((clause, t.line))
    }
}

/// Parses `.jkb` text into a [`Program`].
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let mut parser = Parser { tokens: tokenize(text)?, pos: 0 };
    let mut clauses = Vec::new();
    let mut lines = Vec::new();
    while parser.peek().tok != Tok::Eof {
        let (clause, line) = parser.clause()?;
        clauses.push(clause);
        lines.push(line);
    }
    check_rule_pairs(&clauses, &lines)?;
    Ok(Program { clauses })
}

type AntecedentSet<'a> = BTreeSet<(bool, &'a SymbolId)>;

fn antecedent_set(body: &[BodyAtom]) -> AntecedentSet<'_> {
    body.iter()
        .map(|atom| match atom {
            BodyAtom::Datum(s) | BodyAtom::DatumIsInternal(s) => (true, s),
            BodyAtom::JustificationIsPresent(s) | BodyAtom::Generated(s) => (false, s),
        })
        .collect()
}

// Every datumIsInternal rule needs a datum rule over the same antecedents.
fn check_rule_pairs(clauses: &[Clause], lines: &[usize]) -> Result<(), ParseError> {
    let mut datum_rules: BTreeMap<&SymbolId, AntecedentSet<'_>> = BTreeMap::new();
    for clause in clauses {
        if let Clause::DatumRule { id, body } = clause {
            datum_rules.entry(id).or_insert_with(|| antecedent_set(body));
        }
    }
    for (clause, &line) in clauses.iter().zip(lines) {
        if let Clause::DatumInternalRule { id, body } = clause {
            if datum_rules.get(id) != Some(&antecedent_set(body)) {
                return Err(ParseError::IncoherentRulePair { line, datum: id.clone() });
            }
        }
    }
    Ok(())
}
