use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use super::graph::{AmrGraph, Child};
use super::normalize_role;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnbalancedParens,
    MissingConcept,
    DuplicateVariable(String),
    UnexpectedToken(String),
    UnexpectedEnd,
    TrailingInput,
    Empty,
}

/// PENMAN syntax error with a 1-based source position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match &self.kind {
            ParseErrorKind::UnbalancedParens => "unbalanced parentheses".to_string(),
            ParseErrorKind::MissingConcept => "missing `/ concept` on first variable mention".to_string(),
            ParseErrorKind::DuplicateVariable(v) => alloc::format!("duplicate variable definition `{v}`"),
            ParseErrorKind::UnexpectedToken(t) => alloc::format!("unexpected token `{t}`"),
            ParseErrorKind::UnexpectedEnd => "unexpected end of input".to_string(),
            ParseErrorKind::TrailingInput => "trailing input after graph".to_string(),
            ParseErrorKind::Empty => "no graph found".to_string(),
        };
        write!(f, "{}:{}: {}", self.line, self.column, what)
    }
}

impl core::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open,
    Close,
    Slash,
    Role(String),
    Str(String),
    Sym(String),
}

#[derive(Debug, Clone, Copy)]
struct Pos {
    line: usize,
    column: usize,
}

fn tokenize(text: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let mut out = Vec::new();
    for (li, line) in text.lines().enumerate() {
        if line.trim_start().starts_with('#') {
            continue;
        }
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let pos = Pos { line: li + 1, column: i + 1 };
            match c {
                c if c.is_whitespace() => i += 1,
                '(' => {
                    out.push((Tok::Open, pos));
                    i += 1;
                }
                ')' => {
                    out.push((Tok::Close, pos));
                    i += 1;
                }
                '/' => {
                    out.push((Tok::Slash, pos));
                    i += 1;
                }
                '"' => {
                    let mut s = String::new();
                    let mut j = i + 1;
                    let mut closed = false;
                    while j < chars.len() {
                        match chars[j] {
                            '\\' if j + 1 < chars.len() => {
                                s.push(chars[j + 1]);
                                j += 2;
                            }
                            '"' => {
                                closed = true;
                                j += 1;
                                break;
                            }
                            ch => {
                                s.push(ch);
                                j += 1;
                            }
                        }
                    }
                    if !closed {
                        return Err(ParseError {
                            line: pos.line,
                            column: pos.column,
                            kind: ParseErrorKind::UnexpectedEnd,
                        });
                    }
                    out.push((Tok::Str(s), pos));
                    i = j;
                }
                _ => {
                    let start = i;
                    while i < chars.len() && !chars[i].is_whitespace() && !matches!(chars[i], '(' | ')' | '"' | '/') {
                        i += 1;
                    }
                    let word: String = chars[start..i].iter().collect();
                    if let Some(role) = word.strip_prefix(':') {
                        out.push((Tok::Role(role.to_string()), pos));
                    } else {
                        out.push((Tok::Sym(word), pos));
                    }
                }
            }
        }
    }
    Ok(out)
}

enum Value {
    Node(RawNode),
    Str(String),
    Sym(String),
}

struct RawNode {
    var: String,
    concept: String,
    children: Vec<(String, Value)>,
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    defined: BTreeSet<String>,
    end: Pos,
}

impl Parser {
    fn err(&self, pos: Pos, kind: ParseErrorKind) -> ParseError {
        ParseError { line: pos.line, column: pos.column, kind }
    }

    fn peek(&self) -> Option<&(Tok, Pos)> {
        self.toks.get(self.at)
    }

    fn next(&mut self) -> Result<(Tok, Pos), ParseError> {
        let t = self
            .toks
            .get(self.at)
            .cloned()
            .ok_or_else(|| self.err(self.end, ParseErrorKind::UnbalancedParens))?;
        self.at += 1;
        Ok(t)
    }

    fn node(&mut self) -> Result<RawNode, ParseError> {
        let (open, pos) = self.next()?;
        if open != Tok::Open {
            return Err(self.err(pos, ParseErrorKind::UnexpectedToken(describe(&open))));
        }
        let (var_tok, vpos) = self.next()?;
        let var = match var_tok {
            Tok::Sym(v) => v,
            other => return Err(self.err(vpos, ParseErrorKind::UnexpectedToken(describe(&other)))),
        };
        match self.peek() {
            Some((Tok::Slash, _)) => {
                self.at += 1;
            }
            _ => return Err(self.err(vpos, ParseErrorKind::MissingConcept)),
        }
        let (concept_tok, cpos) = self.next()?;
        let concept = match concept_tok {
            Tok::Sym(c) | Tok::Str(c) if !c.is_empty() => c,
            _ => return Err(self.err(cpos, ParseErrorKind::MissingConcept)),
        };
        if !self.defined.insert(var.clone()) {
            return Err(self.err(vpos, ParseErrorKind::DuplicateVariable(var)));
        }
        let mut children = Vec::new();
        loop {
            let (tok, pos) = self.next()?;
            match tok {
                Tok::Close => break,
                Tok::Role(role) => {
                    let value = match self.peek() {
                        Some((Tok::Open, _)) => Value::Node(self.node()?),
                        Some((Tok::Str(_), _)) | Some((Tok::Sym(_), _)) => match self.next()? {
                            (Tok::Str(s), _) => Value::Str(s),
                            (Tok::Sym(s), _) => Value::Sym(s),
                            _ => unreachable!(),
                        },
                        Some((t, p)) => {
                            return Err(self.err(*p, ParseErrorKind::UnexpectedToken(describe(t))));
                        }
                        None => return Err(self.err(self.end, ParseErrorKind::UnbalancedParens)),
                    };
                    children.push((role, value));
                }
                other => return Err(self.err(pos, ParseErrorKind::UnexpectedToken(describe(&other)))),
            }
        }
        Ok(RawNode { var, concept, children })
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Open => "(".into(),
        Tok::Close => ")".into(),
        Tok::Slash => "/".into(),
        Tok::Role(r) => alloc::format!(":{r}"),
        Tok::Str(s) => alloc::format!("\"{s}\""),
        Tok::Sym(s) => s.clone(),
    }
}

/// Parse one PENMAN graph. Lines starting with `#` are ignored.
pub fn parse_penman(text: &str) -> Result<AmrGraph, ParseError> {
    let toks = tokenize(text)?;
    let line_count = text.lines().count().max(1);
    let end = Pos {
        line: line_count,
        column: text.lines().last().map_or(1, |l| l.chars().count() + 1),
    };
    if toks.is_empty() {
        return Err(ParseError { line: 1, column: 1, kind: ParseErrorKind::Empty });
    }
    let mut p = Parser { toks, at: 0, defined: BTreeSet::new(), end };
    let root = p.node()?;
    if let Some((t, pos)) = p.peek() {
        let kind = if *t == Tok::Close {
            ParseErrorKind::UnbalancedParens
        } else {
            ParseErrorKind::TrailingInput
        };
        return Err(ParseError { line: pos.line, column: pos.column, kind });
    }

    let mut g = AmrGraph::new(root.var.clone(), root.concept.clone())
        .map_err(|_| ParseError { line: 1, column: 1, kind: ParseErrorKind::MissingConcept })?;
    // nodes first, so bare symbols referring to later definitions resolve
    let mut stack = alloc::vec![&root];
    let mut order = Vec::new();
    while let Some(n) = stack.pop() {
        order.push(n);
        for (_, v) in n.children.iter().rev() {
            if let Value::Node(c) = v {
                stack.push(c);
            }
        }
    }
    for n in order.iter().skip(1) {
        g.add_node(n.var.clone(), n.concept.clone())
            .map_err(|_| ParseError { line: 1, column: 1, kind: ParseErrorKind::DuplicateVariable(n.var.clone()) })?;
    }
    attach(&mut g, &root, &p.defined);
    Ok(g)
}

fn attach(g: &mut AmrGraph, n: &RawNode, defined: &BTreeSet<String>) {
    for (role, value) in &n.children {
        let (label, inverted) = normalize_role(role);
        match value {
            Value::Node(c) => {
                link(g, &n.var, label, inverted, &c.var);
                attach(g, c, defined);
            }
            Value::Sym(s) if defined.contains(s) => link(g, &n.var, label, inverted, s),
            Value::Sym(s) => {
                g.add_attribute(&n.var, role, s, false).expect("parent defined");
            }
            Value::Str(s) => {
                g.add_attribute(&n.var, role, s, true).expect("parent defined");
            }
        }
    }
}

fn link(g: &mut AmrGraph, parent: &str, label: &str, inverted: bool, child: &str) {
    let res = if inverted {
        g.add_inverse_edge(child, label, parent)
    } else {
        g.add_edge(parent, label, child)
    };
    res.expect("endpoints defined");
}

/// Deterministic PENMAN text for `g`. Re-entrant mentions are written as
/// bare variables.
pub fn serialize_penman(g: &AmrGraph) -> String {
    let mut out = String::new();
    let mut seen = BTreeSet::new();
    write_node(g, g.root(), 0, &mut seen, &mut out);
    out
}

fn write_node(g: &AmrGraph, var: &str, depth: usize, seen: &mut BTreeSet<String>, out: &mut String) {
    seen.insert(var.to_string());
    out.push('(');
    out.push_str(var);
    out.push_str(" / ");
    push_symbol(g.concept(var).unwrap_or("?"), out);
    for child in g.children(var) {
        out.push('\n');
        for _ in 0..=depth {
            out.push_str("    ");
        }
        match child {
            Child::Edge(e) => {
                out.push_str(&e.surface_label());
                out.push(' ');
                let target = e.surface_child();
                if seen.contains(target) {
                    out.push_str(target);
                } else {
                    write_node(g, target, depth + 1, seen, out);
                }
            }
            Child::Attr(a) => {
                out.push(':');
                out.push_str(&a.relation);
                out.push(' ');
                if a.quoted {
                    push_quoted(&a.value, out);
                } else {
                    push_symbol(&a.value, out);
                }
            }
        }
    }
    out.push(')');
}

fn push_symbol(s: &str, out: &mut String) {
    if s.is_empty() || s.chars().any(|c| c.is_whitespace() || matches!(c, '(' | ')' | '"' | ':')) || s == "/" {
        push_quoted(s, out);
    } else {
        out.push_str(s);
    }
}

fn push_quoted(s: &str, out: &mut String) {
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
}
