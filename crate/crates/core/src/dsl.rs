//! Input language for systems, Pfaffian systems, maps and points.
//!
//! ```text
//! system L { base x,y; fiber u; order 2; eq: u[2,0] + u[0,2]; }
//! system R { base x; fiber u; order 1; solve u[1] = u^2; }
//! pfaffian D { coords x,y,z; form: d(y) - z*d(x); }
//! map M { base: x -> x; fiber: u -> 2*u; inverse: x -> x, u -> u/2; }
//! point P { x = 0, u = 1/2; }
//! ```
//!
//! Jet coordinates are written `u[α]` with comma separated exponents; `u`
//! alone is the order zero coordinate. Division is only allowed by nonzero
//! constants. `#` starts a comment.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use num_bigint::BigInt;

use crate::algebra::{Field, Poly, RatFunc, Rational};
use crate::equivalence::FiberedMap;
use crate::error::Result;
use crate::forms::DiffForm;
use crate::jet::{JetChart, MultiIndex, PolyMap};
use crate::pde::PdeSystem;
use crate::pfaffian::PfaffSystem;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(BigInt),
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(n) => write!(f, "`{n}`"),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

const SYMBOLS: [&str; 16] = ["->", "{", "}", ";", ":", ",", "[", "]", "(", ")", "+", "-", "*", "/", "^", "="];

fn lex(text: &str) -> std::result::Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
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
        let start = (line, col);
        if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                s.push(chars[i]);
                i += 1;
                col += 1;
            }
            out.push(Token { tok: Tok::Ident(s), line: start.0, col: start.1 });
            continue;
        }
        if c.is_ascii_digit() {
            let mut s = String::new();
            while i < chars.len() && chars[i].is_ascii_digit() {
                s.push(chars[i]);
                i += 1;
                col += 1;
            }
            let n: BigInt = s.parse().expect("digits");
            out.push(Token { tok: Tok::Int(n), line: start.0, col: start.1 });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                i += s.len();
                col += s.len();
                out.push(Token { tok: Tok::Sym(s), line: start.0, col: start.1 });
            }
            None => {
                return Err(ParseError { line, col, message: format!("unexpected character `{c}`") });
            }
        }
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

/// A system declaration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SystemDecl {
    pub name: String,
    pub chart: JetChart,
    /// `eq:` lines.
    pub equations: Vec<Poly>,
    /// `solve` lines as `(leading coordinate, expression)`.
    pub solved: Vec<(usize, Poly)>,
}

impl SystemDecl {
    /// Solved declarations give explicit systems; mixing `eq:` and `solve`
    /// gives a plain system with both kinds of equations.
    pub fn to_system(&self) -> Result<PdeSystem> {
        if self.equations.is_empty() {
            if self.solved.is_empty() {
                return Ok(PdeSystem::free(self.chart.clone()));
            }
            return PdeSystem::explicit(self.chart.clone(), self.solved.clone());
        }
        let mut eqs = self.equations.clone();
        eqs.extend(self.solved.iter().map(|(l, e)| &Poly::var(*l) - e));
        PdeSystem::new(self.chart.clone(), eqs)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PfaffDecl {
    pub name: String,
    pub coords: Vec<String>,
    pub forms: Vec<DiffForm>,
}

impl PfaffDecl {
    pub fn to_system(&self) -> Result<PfaffSystem> {
        PfaffSystem::new(self.coords.clone(), self.forms.clone())
    }
}

/// A map `(x, u) ↦ (base(x), fiber(x, u))` with its inverse. The fiber
/// part may be empty, giving a map of the base alone.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MapDecl {
    pub name: String,
    pub base_vars: Vec<String>,
    pub fiber_vars: Vec<String>,
    pub base: Vec<Poly>,
    pub fiber: Vec<Poly>,
    pub inverse_base: Vec<Poly>,
    pub inverse_fiber: Vec<Poly>,
}

impl MapDecl {
    pub fn to_fibered(&self) -> Result<FiberedMap> {
        FiberedMap::new(
            self.base_vars.len(),
            self.fiber_vars.len(),
            self.base.clone(),
            self.fiber.clone(),
            self.inverse_base.clone(),
            self.inverse_fiber.clone(),
        )
    }

    pub fn base_map(&self) -> PolyMap {
        PolyMap::new(self.base.clone())
    }

    fn var_name(&self, v: usize) -> String {
        let n = self.base_vars.len();
        if v < n {
            self.base_vars[v].clone()
        } else {
            self.fiber_vars.get(v - n).cloned().unwrap_or_else(|| format!("#{v}"))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PointDecl {
    pub name: String,
    pub values: Vec<(String, Rational)>,
}

impl PointDecl {
    pub fn as_map(&self) -> BTreeMap<String, Rational> {
        self.values.iter().cloned().collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decl {
    System(SystemDecl),
    Pfaffian(PfaffDecl),
    Map(MapDecl),
    Point(PointDecl),
}

impl Decl {
    pub fn name(&self) -> &str {
        match self {
            Decl::System(d) => &d.name,
            Decl::Pfaffian(d) => &d.name,
            Decl::Map(d) => &d.name,
            Decl::Point(d) => &d.name,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Decl::System(_) => "system",
            Decl::Pfaffian(_) => "pfaffian",
            Decl::Map(_) => "map",
            Decl::Point(_) => "point",
        }
    }
}

/// A parsed input file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceFile {
    pub path: Option<String>,
    pub text: String,
    pub decls: Vec<Decl>,
}

impl SourceFile {
    pub fn get(&self, name: &str) -> Option<&Decl> {
        self.decls.iter().find(|d| d.name() == name)
    }

    pub fn systems(&self) -> impl Iterator<Item = &SystemDecl> {
        self.decls.iter().filter_map(|d| match d {
            Decl::System(s) => Some(s),
            _ => None,
        })
    }

    pub fn pfaffians(&self) -> impl Iterator<Item = &PfaffDecl> {
        self.decls.iter().filter_map(|d| match d {
            Decl::Pfaffian(s) => Some(s),
            _ => None,
        })
    }

    pub fn maps(&self) -> impl Iterator<Item = &MapDecl> {
        self.decls.iter().filter_map(|d| match d {
            Decl::Map(s) => Some(s),
            _ => None,
        })
    }

    pub fn points(&self) -> impl Iterator<Item = &PointDecl> {
        self.decls.iter().filter_map(|d| match d {
            Decl::Point(s) => Some(s),
            _ => None,
        })
    }
}

/// Value of an expression: a polynomial or a 1-form with polynomial coefficients.
enum Val {
    P(Poly),
    F(BTreeMap<usize, Poly>),
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

/// `(variable, image, location)`
type Rule = (String, Poly, (usize, usize));

type Resolver<'a> = &'a dyn Fn(&str, Option<&[u32]>) -> std::result::Result<usize, String>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    fn err<T>(&self, message: impl Into<String>) -> std::result::Result<T, ParseError> {
        let (line, col) = self.here();
        Err(ParseError { line, col, message: message.into() })
    }

    fn err_at<T>(&self, at: (usize, usize), message: impl Into<String>) -> std::result::Result<T, ParseError> {
        Err(ParseError { line: at.0, col: at.1, message: message.into() })
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(t) if *t == s)
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Ident(t) if t == w)
    }

    fn expect_sym(&mut self, s: &str) -> std::result::Result<(), ParseError> {
        if self.is_sym(s) {
            self.next();
            Ok(())
        } else {
            self.err(format!("expected `{s}`, found {}", self.peek()))
        }
    }

    fn expect_word(&mut self, w: &str) -> std::result::Result<(), ParseError> {
        if self.is_word(w) {
            self.next();
            Ok(())
        } else {
            self.err(format!("expected `{w}`, found {}", self.peek()))
        }
    }

    fn ident(&mut self) -> std::result::Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.next();
                Ok(s)
            }
            t => self.err(format!("expected a name, found {t}")),
        }
    }

    fn small_int(&mut self) -> std::result::Result<u32, ParseError> {
        match self.peek().clone() {
            Tok::Int(n) => match u32::try_from(&n) {
                Ok(v) => {
                    self.next();
                    Ok(v)
                }
                Err(_) => self.err(format!("integer {n} is too large")),
            },
            t => self.err(format!("expected an integer, found {t}")),
        }
    }

    /// `name` or `name[i,j,…]`
    fn reference(&mut self) -> std::result::Result<(String, Option<Vec<u32>>), ParseError> {
        let name = self.ident()?;
        if !self.is_sym("[") {
            return Ok((name, None));
        }
        self.next();
        let mut idx = vec![self.small_int()?];
        while self.is_sym(",") {
            self.next();
            idx.push(self.small_int()?);
        }
        self.expect_sym("]")?;
        Ok((name, Some(idx)))
    }

    fn ids(&mut self) -> std::result::Result<Vec<String>, ParseError> {
        let mut out = vec![self.ident()?];
        while self.is_sym(",") {
            self.next();
            out.push(self.ident()?);
        }
        Ok(out)
    }

    /// Coordinate names, allowing the `u[α]` spelling.
    fn coord_names(&mut self) -> std::result::Result<Vec<String>, ParseError> {
        let mut out = Vec::new();
        loop {
            let (name, idx) = self.reference()?;
            out.push(match idx {
                None => name,
                Some(i) => format!("{name}[{}]", i.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(",")),
            });
            if !self.is_sym(",") {
                return Ok(out);
            }
            self.next();
        }
    }

    fn expr(&mut self, res: Resolver, forms: bool) -> std::result::Result<Val, ParseError> {
        let mut acc = self.term(res, forms)?;
        loop {
            let neg = if self.is_sym("+") {
                false
            } else if self.is_sym("-") {
                true
            } else {
                return Ok(acc);
            };
            let at = self.here();
            self.next();
            let rhs = self.term(res, forms)?;
            let rhs = if neg { negate(rhs) } else { rhs };
            acc = match (acc, rhs) {
                (Val::P(a), Val::P(b)) => Val::P(a + b),
                (Val::F(mut a), Val::F(b)) => {
                    for (k, v) in b {
                        let e = a.remove(&k).unwrap_or_else(Poly::zero) + v;
                        if !e.is_zero() {
                            a.insert(k, e);
                        }
                    }
                    Val::F(a)
                }
                (Val::P(p), f) | (f, Val::P(p)) if p.is_zero() => f,
                _ => return self.err_at(at, "cannot add a function and a form"),
            };
        }
    }

    fn term(&mut self, res: Resolver, forms: bool) -> std::result::Result<Val, ParseError> {
        let mut acc = self.unary(res, forms)?;
        loop {
            let at = self.here();
            if self.is_sym("*") {
                self.next();
                let rhs = self.unary(res, forms)?;
                acc = match (acc, rhs) {
                    (Val::P(a), Val::P(b)) => Val::P(a * b),
                    (Val::P(a), Val::F(f)) | (Val::F(f), Val::P(a)) => {
                        Val::F(f.into_iter().map(|(k, v)| (k, &v * &a)).filter(|(_, v)| !v.is_zero()).collect())
                    }
                    (Val::F(_), Val::F(_)) => return self.err_at(at, "products of 1-forms are not supported"),
                };
            } else if self.is_sym("/") {
                self.next();
                let rhs = self.unary(res, forms)?;
                let c = match rhs {
                    Val::P(p) => match p.as_constant() {
                        Some(c) if !Field::is_zero(&c) => c,
                        _ => return self.err_at(at, "division is only allowed by nonzero constants"),
                    },
                    Val::F(_) => return self.err_at(at, "division by a form"),
                };
                let inv = Rational::from_integer(1.into()) / c;
                acc = match acc {
                    Val::P(p) => Val::P(p.scale(&inv)),
                    Val::F(f) => Val::F(f.into_iter().map(|(k, v)| (k, v.scale(&inv))).collect()),
                };
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self, res: Resolver, forms: bool) -> std::result::Result<Val, ParseError> {
        if self.is_sym("-") {
            self.next();
            return Ok(negate(self.unary(res, forms)?));
        }
        self.power(res, forms)
    }

    fn power(&mut self, res: Resolver, forms: bool) -> std::result::Result<Val, ParseError> {
        let base = self.atom(res, forms)?;
        if !self.is_sym("^") {
            return Ok(base);
        }
        let at = self.here();
        self.next();
        let e = self.small_int()?;
        match base {
            Val::P(p) => Ok(Val::P(p.pow(e))),
            Val::F(_) => self.err_at(at, "cannot raise a form to a power"),
        }
    }

    fn atom(&mut self, res: Resolver, forms: bool) -> std::result::Result<Val, ParseError> {
        let at = self.here();
        match self.peek().clone() {
            Tok::Int(n) => {
                self.next();
                Ok(Val::P(Poly::constant(Rational::from_integer(n))))
            }
            Tok::Sym("(") => {
                self.next();
                let v = self.expr(res, forms)?;
                self.expect_sym(")")?;
                Ok(v)
            }
            Tok::Ident(s) if s == "d" && forms && matches!(self.peek_at(1), Tok::Sym("(")) => {
                self.next();
                self.next();
                let at = self.here();
                let (name, idx) = self.reference()?;
                let v = res(&name, idx.as_deref()).or_else(|m| self.err_at(at, m))?;
                self.expect_sym(")")?;
                Ok(Val::F(BTreeMap::from([(v, Poly::one())])))
            }
            Tok::Ident(_) => {
                let (name, idx) = self.reference()?;
                let v = res(&name, idx.as_deref()).or_else(|m| self.err_at(at, m))?;
                Ok(Val::P(Poly::var(v)))
            }
            t => self.err(format!("expected an expression, found {t}")),
        }
    }

    fn poly(&mut self, res: Resolver) -> std::result::Result<Poly, ParseError> {
        let at = self.here();
        match self.expr(res, false)? {
            Val::P(p) => Ok(p),
            Val::F(_) => self.err_at(at, "expected a function, found a form"),
        }
    }

    fn constant(&mut self) -> std::result::Result<Rational, ParseError> {
        let at = self.here();
        let none = |name: &str, _: Option<&[u32]>| Err(format!("`{name}` is not a constant"));
        let p = self.poly(&none)?;
        match p.as_constant() {
            Some(c) => Ok(c),
            None => self.err_at(at, "expected a constant"),
        }
    }

    fn decl(&mut self) -> std::result::Result<Decl, ParseError> {
        let at = self.here();
        let kw = self.ident()?;
        match kw.as_str() {
            "system" => self.system().map(Decl::System),
            "pfaffian" => self.pfaffian().map(Decl::Pfaffian),
            "map" => self.map().map(Decl::Map),
            "point" => self.point().map(Decl::Point),
            other => self.err_at(at, format!("unknown declaration `{other}`")),
        }
    }

    fn system(&mut self) -> std::result::Result<SystemDecl, ParseError> {
        let name = self.ident()?;
        let open = self.here();
        self.expect_sym("{")?;
        let mut base = None;
        let mut fiber = None;
        let mut order = None;
        // statements before the chart is complete are rejected
        while !self.is_sym("}") && (base.is_none() || fiber.is_none() || order.is_none()) {
            let at = self.here();
            let kw = self.ident()?;
            match kw.as_str() {
                "base" if base.is_none() => base = Some(self.ids()?),
                "fiber" if fiber.is_none() => fiber = Some(self.ids()?),
                "order" if order.is_none() => order = Some(self.small_int()? as usize),
                "base" | "fiber" | "order" => return self.err_at(at, format!("duplicate `{kw}` declaration")),
                "eq" | "solve" => {
                    let missing = [("base", base.is_none()), ("fiber", fiber.is_none()), ("order", order.is_none())]
                        .iter()
                        .filter(|(_, m)| *m)
                        .map(|(n, _)| *n)
                        .collect::<Vec<_>>()
                        .join(", ");
                    return self.err_at(at, format!("missing {missing} declaration before equations"));
                }
                other => return self.err_at(at, format!("unexpected `{other}` in system")),
            }
            self.expect_sym(";")?;
        }
        let (Some(base), Some(fiber), Some(order)) = (base.clone(), fiber.clone(), order) else {
            let missing = [("base", base.is_none()), ("fiber", fiber.is_none()), ("order", order.is_none())]
                .iter()
                .filter(|(_, m)| *m)
                .map(|(n, _)| format!("missing {n} declaration"))
                .collect::<Vec<_>>()
                .join(", ");
            return self.err_at(open, missing);
        };
        let chart = JetChart::new(base.clone(), fiber.clone(), order).or_else(|e| self.err_at(open, e.to_string()))?;
        let mut seen = HashSet::new();
        for n in base.iter().chain(&fiber) {
            if !seen.insert(n.clone()) || n == "d" {
                return self.err_at(open, format!("invalid or duplicate variable name `{n}`"));
            }
        }
        let resolve = |name: &str, idx: Option<&[u32]>| -> std::result::Result<usize, String> {
            if let Some(i) = base.iter().position(|b| b == name) {
                return match idx {
                    None => Ok(chart.x(i)),
                    Some(_) => Err(format!("base variable `{name}` takes no index")),
                };
            }
            let a = fiber.iter().position(|f| f == name).ok_or_else(|| format!("unknown identifier `{name}`"))?;
            let alpha = match idx {
                None => MultiIndex::zero(base.len()),
                Some(e) if e.len() == base.len() => MultiIndex::new(e.to_vec()),
                Some(e) => return Err(format!("`{name}` needs {} indices, got {}", base.len(), e.len())),
            };
            if alpha.order() as usize > order {
                return Err(format!("derivative of order {} exceeds the system order {order}", alpha.order()));
            }
            Ok(chart.u(a, &alpha))
        };
        let mut equations = Vec::new();
        let mut solved = Vec::new();
        while !self.is_sym("}") {
            let at = self.here();
            let kw = self.ident()?;
            match kw.as_str() {
                "eq" => {
                    self.expect_sym(":")?;
                    let p = self.poly(&resolve)?;
                    if p.is_zero() {
                        return self.err_at(at, "equation is identically zero");
                    }
                    equations.push(p);
                }
                "solve" => {
                    let lat = self.here();
                    let (n, idx) = self.reference()?;
                    let lead = resolve(&n, idx.as_deref()).or_else(|m| self.err_at(lat, m))?;
                    if lead < chart.n() {
                        return self.err_at(lat, "only jet coordinates can be solved for");
                    }
                    if solved.iter().any(|(l, _)| *l == lead) {
                        return self.err_at(lat, format!("`{}` is solved for twice", chart.coord_name(lead)));
                    }
                    self.expect_sym("=")?;
                    let p = self.poly(&resolve)?;
                    solved.push((lead, p));
                }
                "base" | "fiber" | "order" => return self.err_at(at, format!("duplicate `{kw}` declaration")),
                other => return self.err_at(at, format!("unexpected `{other}` in system")),
            }
            self.expect_sym(";")?;
        }
        self.expect_sym("}")?;
        let decl = SystemDecl { name, chart, equations, solved };
        decl.to_system().or_else(|e| self.err_at(open, e.to_string()))?;
        Ok(decl)
    }

    fn pfaffian(&mut self) -> std::result::Result<PfaffDecl, ParseError> {
        let name = self.ident()?;
        let open = self.here();
        self.expect_sym("{")?;
        self.expect_word("coords")?;
        let coords = self.coord_names()?;
        self.expect_sym(";")?;
        let mut seen = HashSet::new();
        for c in &coords {
            if !seen.insert(c.clone()) || c == "d" {
                return self.err_at(open, format!("invalid or duplicate coordinate `{c}`"));
            }
        }
        let resolve = |name: &str, idx: Option<&[u32]>| -> std::result::Result<usize, String> {
            let full = match idx {
                None => name.to_string(),
                Some(i) => format!("{name}[{}]", i.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(",")),
            };
            coords.iter().position(|c| *c == full).ok_or_else(|| format!("unknown identifier `{full}`"))
        };
        let mut forms = Vec::new();
        while !self.is_sym("}") {
            self.expect_word("form")?;
            self.expect_sym(":")?;
            let at = self.here();
            let v = self.expr(&resolve, true)?;
            let Val::F(f) = v else {
                return self.err_at(at, "expected a 1-form");
            };
            if f.is_empty() {
                return self.err_at(at, "form is identically zero");
            }
            let mut w = DiffForm::zero(1);
            for (k, c) in f {
                w.add_term(vec![k], RatFunc::from_poly(c));
            }
            forms.push(w);
            self.expect_sym(";")?;
        }
        self.expect_sym("}")?;
        if forms.is_empty() {
            return self.err_at(open, "pfaffian needs at least one form");
        }
        Ok(PfaffDecl { name, coords, forms })
    }

    /// `name -> expr, name -> expr`
    fn rules(&mut self, res: Resolver) -> std::result::Result<Vec<Rule>, ParseError> {
        let mut out = Vec::new();
        loop {
            let at = self.here();
            let v = self.ident()?;
            self.expect_sym("->")?;
            let p = self.poly(res)?;
            out.push((v, p, at));
            if !self.is_sym(",") {
                return Ok(out);
            }
            self.next();
        }
    }

    fn map(&mut self) -> std::result::Result<MapDecl, ParseError> {
        let name = self.ident()?;
        let open = self.here();
        self.expect_sym("{")?;
        // the variable names are the left-hand sides; parse with a
        // deferred resolver by scanning ahead for them
        let save = self.pos;
        let mut base_vars = Vec::new();
        let mut fiber_vars = Vec::new();
        let scan = |p: &mut Parser, into: &mut Vec<String>| -> std::result::Result<(), ParseError> {
            loop {
                into.push(p.ident()?);
                p.expect_sym("->")?;
                while !p.is_sym(",") && !p.is_sym(";") && !matches!(p.peek(), Tok::Eof) {
                    if p.is_sym("(") {
                        let mut depth = 0;
                        loop {
                            match p.next() {
                                Tok::Sym("(") => depth += 1,
                                Tok::Sym(")") => {
                                    depth -= 1;
                                    if depth == 0 {
                                        break;
                                    }
                                }
                                Tok::Eof => return p.err("unbalanced parenthesis"),
                                _ => {}
                            }
                        }
                    } else {
                        p.next();
                    }
                }
                if !p.is_sym(",") {
                    return Ok(());
                }
                p.next();
            }
        };
        self.expect_word("base")?;
        self.expect_sym(":")?;
        scan(self, &mut base_vars)?;
        self.expect_sym(";")?;
        if self.is_word("fiber") {
            self.next();
            self.expect_sym(":")?;
            scan(self, &mut fiber_vars)?;
            self.expect_sym(";")?;
        }
        self.pos = save;
        let all: Vec<String> = base_vars.iter().chain(&fiber_vars).cloned().collect();
        let mut seen = HashSet::new();
        for v in &all {
            if !seen.insert(v.clone()) {
                return self.err_at(open, format!("variable `{v}` is mapped twice"));
            }
        }
        let nb = base_vars.len();
        let res_base = |nm: &str, idx: Option<&[u32]>| -> std::result::Result<usize, String> {
            if idx.is_some() {
                return Err(format!("`{nm}` takes no index"));
            }
            base_vars.iter().position(|v| v == nm).ok_or_else(|| format!("unknown base variable `{nm}`"))
        };
        let res_all = |nm: &str, idx: Option<&[u32]>| -> std::result::Result<usize, String> {
            if idx.is_some() {
                return Err(format!("`{nm}` takes no index"));
            }
            all.iter().position(|v| v == nm).ok_or_else(|| format!("unknown identifier `{nm}`"))
        };
        self.expect_word("base")?;
        self.expect_sym(":")?;
        let base: Vec<Poly> = self.rules(&res_base)?.into_iter().map(|(_, p, _)| p).collect();
        self.expect_sym(";")?;
        let mut fiber = Vec::new();
        if self.is_word("fiber") {
            self.next();
            self.expect_sym(":")?;
            fiber = self.rules(&res_all)?.into_iter().map(|(_, p, _)| p).collect();
            self.expect_sym(";")?;
        }
        self.expect_word("inverse")?;
        self.expect_sym(":")?;
        let inv = self.rules(&res_all)?;
        self.expect_sym(";")?;
        self.expect_sym("}")?;
        let mut inverse_base = vec![None; nb];
        let mut inverse_fiber = vec![None; fiber_vars.len()];
        for (v, p, at) in inv {
            let i = res_all(&v, None).or_else(|m| self.err_at(at, m))?;
            let slot = if i < nb { &mut inverse_base[i] } else { &mut inverse_fiber[i - nb] };
            if slot.is_some() {
                return self.err_at(at, format!("inverse of `{v}` given twice"));
            }
            if i < nb && p.max_var().is_some_and(|w| w >= nb) {
                return self.err_at(at, "inverse base components may only use base variables");
            }
            *slot = Some(p);
        }
        let missing: Vec<&String> =
            all.iter().enumerate().filter(|(i, _)| if *i < nb { inverse_base[*i].is_none() } else { inverse_fiber[*i - nb].is_none() }).map(|(_, v)| v).collect();
        if let Some(v) = missing.first() {
            return self.err_at(open, format!("inverse of `{v}` is missing"));
        }
        let decl = MapDecl {
            name,
            base_vars,
            fiber_vars,
            base,
            fiber,
            inverse_base: inverse_base.into_iter().map(Option::unwrap).collect(),
            inverse_fiber: inverse_fiber.into_iter().map(Option::unwrap).collect(),
        };
        decl.to_fibered().or_else(|e| self.err_at(open, e.to_string()))?;
        Ok(decl)
    }

    fn point(&mut self) -> std::result::Result<PointDecl, ParseError> {
        let name = self.ident()?;
        self.expect_sym("{")?;
        let mut values: Vec<(String, Rational)> = Vec::new();
        loop {
            let at = self.here();
            let names = self.coord_names()?;
            let [v] = names.as_slice() else { unreachable!() };
            let v = v.clone();
            self.expect_sym("=")?;
            let c = self.constant()?;
            if values.iter().any(|(w, _)| *w == v) {
                return self.err_at(at, format!("`{v}` assigned twice"));
            }
            values.push((v, c));
            if !self.is_sym(",") {
                break;
            }
            self.next();
        }
        self.expect_sym(";")?;
        self.expect_sym("}")?;
        Ok(PointDecl { name, values })
    }
}

fn negate(v: Val) -> Val {
    match v {
        Val::P(p) => Val::P(-p),
        Val::F(f) => Val::F(f.into_iter().map(|(k, v)| (k, -v)).collect()),
    }
}

/// Parses a whole file.
pub fn parse(text: &str) -> std::result::Result<SourceFile, ParseError> {
    parse_named(text, None)
}

pub fn parse_named(text: &str, path: Option<&str>) -> std::result::Result<SourceFile, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0 };
    let mut decls: Vec<Decl> = Vec::new();
    while !matches!(p.peek(), Tok::Eof) {
        let at = p.here();
        let d = p.decl()?;
        if decls.iter().any(|e| e.name() == d.name()) {
            return p.err_at(at, format!("duplicate declaration `{}`", d.name()));
        }
        decls.push(d);
    }
    Ok(SourceFile { path: path.map(str::to_string), text: text.to_string(), decls })
}

fn join_rules(names: &[String], polys: &[Poly], name: &dyn Fn(usize) -> String) -> String {
    names.iter().zip(polys).map(|(v, p)| format!("{v} -> {}", p.display_with(name))).collect::<Vec<_>>().join(", ")
}

/// Canonical text of a declaration; parsing it gives back the same value.
pub fn print_decl(d: &Decl) -> String {
    match d {
        Decl::System(s) => {
            let c = &s.chart;
            let mut out = format!(
                "system {} {{\n  base {};\n  fiber {};\n  order {};\n",
                s.name,
                c.base_names().join(", "),
                c.fiber_names().join(", "),
                c.order()
            );
            for e in &s.equations {
                out.push_str(&format!("  eq: {};\n", c.display(e)));
            }
            for (l, e) in &s.solved {
                out.push_str(&format!("  solve {} = {};\n", c.coord_name(*l), c.display(e)));
            }
            out.push('}');
            out
        }
        Decl::Pfaffian(p) => {
            let mut out = format!("pfaffian {} {{\n  coords {};\n", p.name, p.coords.join(", "));
            for w in &p.forms {
                out.push_str(&format!("  form: {};\n", w.display_with(&|v| p.coords[v].clone())));
            }
            out.push('}');
            out
        }
        Decl::Map(m) => {
            let name = |v: usize| m.var_name(v);
            let mut out = format!("map {} {{\n  base: {};\n", m.name, join_rules(&m.base_vars, &m.base, &name));
            if !m.fiber_vars.is_empty() {
                out.push_str(&format!("  fiber: {};\n", join_rules(&m.fiber_vars, &m.fiber, &name)));
            }
            let mut inv = join_rules(&m.base_vars, &m.inverse_base, &name);
            if !m.fiber_vars.is_empty() {
                inv.push_str(", ");
                inv.push_str(&join_rules(&m.fiber_vars, &m.inverse_fiber, &name));
            }
            out.push_str(&format!("  inverse: {inv};\n}}"));
            out
        }
        Decl::Point(p) => {
            let vals = p.values.iter().map(|(n, v)| format!("{n} = {v}")).collect::<Vec<_>>().join(", ");
            format!("point {} {{ {vals}; }}", p.name)
        }
    }
}

pub fn print_file(f: &SourceFile) -> String {
    f.decls.iter().map(print_decl).collect::<Vec<_>>().join("\n\n") + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::rat;

    #[test]
    fn laplace_declaration() {
        let f = parse("system L { base x,y; fiber u; order 2; eq: u[2,0] + u[0,2]; }").unwrap();
        let Decl::System(s) = &f.decls[0] else { panic!() };
        let c = JetChart::standard(2, 1, 2);
        let _ = c;
        assert_eq!(s.chart.display(&s.equations[0]), "u[2,0] + u[0,2]");
        assert_eq!(s.to_system().unwrap().equations().len(), 1);
    }

    #[test]
    fn darboux_declaration() {
        let f = parse("pfaffian D { coords x,y,z; form: d(y) - z*d(x); }").unwrap();
        let Decl::Pfaffian(p) = &f.decls[0] else { panic!() };
        assert_eq!(p.to_system().unwrap(), crate::pfaffian::PfaffSystem::new(
            vec!["x".into(), "y".into(), "z".into()],
            vec![DiffForm::d_coord(1).sub(&DiffForm::d_coord(0).scale(&RatFunc::from_poly(Poly::var(2))))],
        ).unwrap());
    }

    #[test]
    fn missing_fiber() {
        let e = parse("system bad { base x; order 1; }").unwrap_err();
        assert!(e.message.contains("fiber"), "{e}");
        assert_eq!((e.line, e.col), (1, 12));
    }

    #[test]
    fn errors_carry_locations() {
        let e = parse("system S {\n  base x; fiber u; order 1;\n  eq: u[1] - v;\n}").unwrap_err();
        assert_eq!((e.line, e.col), (3, 14));
        assert!(e.message.contains("unknown identifier"));
        let e = parse("system S { base x; fiber u; order 1; eq: u[2]; }").unwrap_err();
        assert!(e.message.contains("exceeds"));
        let e = parse("system S { base x; fiber u; order 1; eq: u/x; }").unwrap_err();
        assert!(e.message.contains("division"));
    }

    #[test]
    fn maps_and_points() {
        let f = parse("map M { base: x -> x; fiber: u -> 2*u; inverse: x -> x, u -> u/2; }\npoint P { x = 0, u = -1/2; }").unwrap();
        let Decl::Map(m) = &f.decls[0] else { panic!() };
        assert!(m.to_fibered().is_ok());
        let Decl::Point(p) = &f.decls[1] else { panic!() };
        assert_eq!(p.values[1], ("u".to_string(), rat(-1, 2)));
        let e = parse("map M { base: x -> x; fiber: u -> 2*u; inverse: x -> x, u -> u; }").unwrap_err();
        assert!(e.message.contains("inverse"));
    }

    #[test]
    fn round_trip() {
        let text = "system R { base x; fiber u; order 1; solve u[1] = 1/2*u^2 - x; }\n\
                    system W { base t, s; fiber v, w; order 2; eq: v[2,0] - (t + 1)*w[0,2]; eq: v[1,0]*w - 3; }\n\
                    pfaffian G { coords x, y0, y1, y2; form: d(y0) - y1*d(x); form: d(y1) - (y2 + x^2)*d(x); }\n\
                    map M { base: x -> x + 1; fiber: u -> u - x^2; inverse: x -> x - 1, u -> u + x^2 - 2*x + 1; }\n\
                    point P { x = 3/4, u[1] = -2; }";
        let f = parse(text).unwrap();
        let printed = print_file(&f);
        let g = parse(&printed).unwrap();
        assert_eq!(f.decls, g.decls);
        assert_eq!(print_file(&g), printed);
    }
}
