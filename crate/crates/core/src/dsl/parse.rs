//! Lexer and recursive-descent parser for `.metric` files.

use super::expr::{Constant, Expr, Func};
use super::MetricSpec;
use crate::domain::Domain;
use crate::error::ParseError;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Number { value: f64, integer: bool },
    Sym(char),
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start_col = col;
        if c.is_ascii_alphabetic() || c == '_' {
            let s = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - s;
            out.push(Token { tok: Tok::Ident(chars[s..i].iter().collect()), line, col: start_col });
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let s = i;
            let mut integer = true;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                integer = false;
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    integer = false;
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[s..i].iter().collect();
            let value = text
                .parse::<f64>()
                .map_err(|_| ParseError::new(line, start_col, format!("malformed number '{text}'")))?;
            col += i - s;
            out.push(Token { tok: Tok::Number { value, integer }, line, col: start_col });
            continue;
        }
        if "+-*/^()[],;=".contains(c) {
            out.push(Token { tok: Tok::Sym(c), line, col: start_col });
            i += 1;
            col += 1;
            continue;
        }
        return Err(ParseError::new(line, col, format!("unexpected character '{c}'")));
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    coords: Vec<String>,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err_at(t: &Token, msg: impl Into<String>) -> ParseError {
        ParseError::new(t.line, t.col, msg)
    }

    fn describe(t: &Tok) -> String {
        match t {
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Number { value, .. } => format!("number {value}"),
            Tok::Sym(c) => format!("'{c}'"),
            Tok::Eof => "end of input".into(),
        }
    }

    fn expect_sym(&mut self, c: char) -> Result<Token, ParseError> {
        let t = self.next();
        if t.tok == Tok::Sym(c) {
            Ok(t)
        } else {
            Err(Self::err_at(&t, format!("expected '{c}', found {}", Self::describe(&t.tok))))
        }
    }

    fn expect_int(&mut self) -> Result<(usize, Token), ParseError> {
        let t = self.next();
        match t.tok {
            Tok::Number { value, integer: true } if value >= 0.0 && value <= u32::MAX as f64 => {
                Ok((value as usize, t))
            }
            _ => Err(Self::err_at(&t, format!("expected an integer, found {}", Self::describe(&t.tok)))),
        }
    }

    fn at_sym(&self, c: char) -> bool {
        self.peek().tok == Tok::Sym(c)
    }

    // expr := term (('+' | '-') term)*
    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.at_sym('+') {
                self.next();
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.at_sym('-') {
                self.next();
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    // term := unary (('*' | '/') unary)*
    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            if self.at_sym('*') {
                self.next();
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.at_sym('/') {
                self.next();
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    // unary := '-' unary | power
    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.at_sym('-') {
            self.next();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    // power := atom ('^' '-'? INT)?
    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if !self.at_sym('^') {
            return Ok(base);
        }
        self.next();
        let negative = if self.at_sym('-') {
            self.next();
            true
        } else {
            false
        };
        let t = self.next();
        let k = match t.tok {
            Tok::Number { value, integer: true } if value <= i32::MAX as f64 => value as i32,
            _ => return Err(Self::err_at(&t, "exponent must be an integer literal")),
        };
        Ok(Expr::Pow(Box::new(base), if negative { -k } else { k }))
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let t = self.next();
        match &t.tok {
            Tok::Number { value, .. } => Ok(Expr::Num(*value)),
            Tok::Sym('(') => {
                let e = self.expr()?;
                self.expect_sym(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if let Some(f) = Func::from_name(name) {
                    self.expect_sym('(')?;
                    let arg = self.expr()?;
                    self.expect_sym(')')?;
                    return Ok(Expr::Call(f, Box::new(arg)));
                }
                if let Some(i) = self.coords.iter().position(|c| c == name) {
                    return Ok(Expr::Coord(i));
                }
                if let Some(c) = Constant::from_name(name) {
                    return Ok(Expr::Const(c));
                }
                Err(Self::err_at(&t, format!("unknown identifier '{name}'")))
            }
            other => Err(Self::err_at(&t, format!("expected an expression, found {}", Self::describe(other)))),
        }
    }

    fn bound(&mut self) -> Result<f64, ParseError> {
        let start = self.peek().clone();
        let negative = if self.at_sym('-') {
            self.next();
            true
        } else {
            false
        };
        if let Tok::Ident(s) = &self.peek().tok {
            if s == "inf" {
                self.next();
                return Ok(if negative { f64::NEG_INFINITY } else { f64::INFINITY });
            }
        }
        let e = self.expr()?;
        if e.uses_coords() {
            return Err(Self::err_at(&start, "domain bounds may not reference coordinates"));
        }
        let v = e.eval_constant().map_err(|err| Self::err_at(&start, err.to_string()))?;
        Ok(if negative { -v } else { v })
    }
}

fn reserved(name: &str) -> bool {
    Func::from_name(name).is_some()
        || Constant::from_name(name).is_some()
        || matches!(name, "inf" | "dim" | "coords" | "domain" | "g")
}

pub fn parse_metric(src: &str) -> Result<MetricSpec, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0, coords: Vec::new() };
    let mut dim: Option<(usize, Token)> = None;
    let mut coords_tok: Option<Token> = None;
    let mut domain_entries: Vec<(String, f64, f64, Token)> = Vec::new();
    let mut entries: Vec<(usize, usize, Expr, Token)> = Vec::new();

    loop {
        let t = p.next();
        let kw = match &t.tok {
            Tok::Eof => break,
            Tok::Ident(s) => s.clone(),
            other => return Err(Parser::err_at(&t, format!("expected a statement, found {}", Parser::describe(other)))),
        };
        match kw.as_str() {
            "dim" => {
                if dim.is_some() {
                    return Err(Parser::err_at(&t, "duplicate 'dim' statement"));
                }
                let (n, nt) = p.expect_int()?;
                if n == 0 {
                    return Err(Parser::err_at(&nt, "dimension must be at least 1"));
                }
                dim = Some((n, t));
            }
            "coords" => {
                if coords_tok.is_some() {
                    return Err(Parser::err_at(&t, "duplicate 'coords' statement"));
                }
                while let Tok::Ident(name) = &p.peek().tok {
                    let name = name.clone();
                    let nt = p.next();
                    if reserved(&name) {
                        return Err(Parser::err_at(&nt, format!("'{name}' is reserved and cannot name a coordinate")));
                    }
                    if p.coords.contains(&name) {
                        return Err(Parser::err_at(&nt, format!("coordinate '{name}' declared twice")));
                    }
                    p.coords.push(name);
                }
                if p.coords.is_empty() {
                    return Err(Parser::err_at(p.peek(), "expected at least one coordinate name"));
                }
                coords_tok = Some(t);
            }
            "domain" => {
                loop {
                    let nt = p.next();
                    let name = match &nt.tok {
                        Tok::Ident(s) => s.clone(),
                        other => return Err(Parser::err_at(&nt, format!("expected a coordinate name, found {}", Parser::describe(other)))),
                    };
                    p.expect_sym('(')?;
                    let lo = p.bound()?;
                    p.expect_sym(',')?;
                    let hi = p.bound()?;
                    p.expect_sym(')')?;
                    domain_entries.push((name, lo, hi, nt));
                    if p.at_sym(';') {
                        break;
                    }
                }
            }
            "g" => {
                p.expect_sym('[')?;
                let (i, it) = p.expect_int()?;
                p.expect_sym(']')?;
                p.expect_sym('[')?;
                let (j, _) = p.expect_int()?;
                p.expect_sym(']')?;
                p.expect_sym('=')?;
                let e = p.expr()?;
                entries.push((i, j, e, it));
            }
            other => return Err(Parser::err_at(&t, format!("unknown statement '{other}'"))),
        }
        p.expect_sym(';')?;
    }

    let eof = p.peek().clone();
    let (n, dim_tok) = dim.ok_or_else(|| Parser::err_at(&eof, "missing 'dim' statement"))?;
    let coords_tok = coords_tok.ok_or_else(|| Parser::err_at(&eof, "missing 'coords' statement"))?;
    if p.coords.len() != n {
        return Err(Parser::err_at(
            &coords_tok,
            format!("dimension mismatch: dim {n} but {} coordinates declared", p.coords.len()),
        ));
    }
    let _ = dim_tok;

    let mut bounds = vec![(f64::NEG_INFINITY, f64::INFINITY); n];
    let mut seen = vec![false; n];
    for (name, lo, hi, t) in domain_entries {
        let idx = p
            .coords
            .iter()
            .position(|c| *c == name)
            .ok_or_else(|| Parser::err_at(&t, format!("unknown identifier '{name}' in domain")))?;
        if seen[idx] {
            return Err(Parser::err_at(&t, format!("domain of '{name}' given twice")));
        }
        if !(lo < hi) {
            return Err(Parser::err_at(&t, format!("empty domain interval for '{name}'")));
        }
        seen[idx] = true;
        bounds[idx] = (lo, hi);
    }

    let mut table: Vec<Option<Expr>> = vec![None; n * (n + 1) / 2];
    for (i, j, e, t) in entries {
        if i >= n || j >= n {
            return Err(Parser::err_at(&t, format!("dimension mismatch: g[{i}][{j}] out of range for dim {n}")));
        }
        if j > i {
            return Err(Parser::err_at(&t, format!("g[{i}][{j}] is above the diagonal; give g[{j}][{i}] instead")));
        }
        let slot = &mut table[MetricSpec::tri_index(i, j)];
        if slot.is_some() {
            return Err(Parser::err_at(&t, format!("g[{i}][{j}] defined twice")));
        }
        *slot = Some(e);
    }
    let missing: Vec<String> = (0..n)
        .flat_map(|i| (0..=i).map(move |j| (i, j)))
        .filter(|&(i, j)| table[MetricSpec::tri_index(i, j)].is_none())
        .map(|(i, j)| format!("g[{i}][{j}]"))
        .collect();
    if !missing.is_empty() {
        return Err(Parser::err_at(&eof, format!("missing metric entries: {}", missing.join(", "))));
    }

    Ok(MetricSpec {
        dim: n,
        coords: p.coords,
        domain: Domain::new(bounds),
        entries: table.into_iter().map(|e| e.expect("checked above")).collect(),
    })
}
