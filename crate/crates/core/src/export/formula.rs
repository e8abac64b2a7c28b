use std::collections::BTreeMap;
use std::fmt::Write;

use super::node_names;
use crate::error::{Error, Result};
use crate::genome::{conn_col, node_col, AttributeSchema, GenomeTensors};
use crate::inference::{transform, Activation, Aggregation};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(String),
    Neg(Box<Expr>),
    Sum(Vec<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    /// Function application; an empty name is a plain parenthesized group.
    Call(String, Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub name: String,
    pub expr: Expr,
}

/// Executable formula: assignments in evaluation order.
#[derive(Debug, Clone, PartialEq)]
pub struct FormulaTree {
    pub num_inputs: usize,
    pub num_outputs: usize,
    pub assignments: Vec<Assignment>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormulaStyle {
    Plain,
    Typeset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    /// Three decimals, for reading.
    Display,
    /// Shortest text that parses back to the same `f64`.
    Exact,
}

fn call(name: &str, arg: Expr) -> Expr {
    Expr::Call(name.to_string(), vec![arg])
}

/// One assignment per non-input node in topological order.
pub fn build_formula(g: &GenomeTensors, schema: &AttributeSchema) -> Result<FormulaTree> {
    let t = transform(g)?;
    let names = node_names(g);
    let mut incoming: BTreeMap<u64, Vec<(u64, f64)>> = BTreeMap::new();
    for r in g.conn_rows().filter(|&r| g.conn_enabled(r)) {
        let (a, b) = g.conn_pair(r);
        incoming.entry(b).or_default().push((a, g.conns[[r, conn_col::WEIGHT]]));
    }
    let mut assignments = Vec::new();
    for &row in t.order_rows() {
        let k = g.node_key(row);
        if g.is_input(k) {
            continue;
        }
        let mut ins = incoming.remove(&k).unwrap_or_default();
        ins.sort_by_key(|e| e.0);
        let terms: Vec<Expr> = ins
            .iter()
            .map(|&(src, w)| Expr::Mul(Box::new(Expr::Num(w)), Box::new(Expr::Var(names[&src].clone()))))
            .collect();
        let agg = schema.aggregation(g.nodes[[row, node_col::AGGREGATION]] as usize)?;
        let act = schema.activation(g.nodes[[row, node_col::ACTIVATION]] as usize)?;
        let agg_expr = if terms.is_empty() {
            Expr::Num(0.0)
        } else if agg == Aggregation::Sum {
            if terms.len() == 1 {
                terms.into_iter().next().expect("one term")
            } else {
                Expr::Sum(terms)
            }
        } else {
            Expr::Call(agg.name().to_string(), terms)
        };
        let response = g.nodes[[row, node_col::RESPONSE]];
        let scaled = if response == 1.0 {
            agg_expr
        } else {
            Expr::Mul(Box::new(Expr::Num(response)), Box::new(agg_expr))
        };
        let mut parts = match scaled {
            Expr::Sum(v) => v,
            other => vec![other],
        };
        parts.push(Expr::Num(g.nodes[[row, node_col::BIAS]]));
        let inner = Expr::Sum(parts);
        let expr = match act {
            Activation::Identity => call("", inner),
            other => call(other.name(), inner),
        };
        assignments.push(Assignment { name: names[&k].clone(), expr });
    }
    Ok(FormulaTree { num_inputs: g.num_inputs, num_outputs: g.num_outputs, assignments })
}

fn apply(name: &str, args: &[f64]) -> Result<f64> {
    let one = || -> Result<f64> {
        match args {
            [x] => Ok(*x),
            _ => Err(Error::ShapeMismatch(format!("`{name}` takes one argument, got {}", args.len()))),
        }
    };
    if name.is_empty() {
        return one();
    }
    if let Ok(a) = name.parse::<Activation>() {
        return Ok(a.apply(one()?));
    }
    name.parse::<Aggregation>()?.apply(args)
}

impl Expr {
    pub fn eval(&self, env: &BTreeMap<String, f64>) -> Result<f64> {
        Ok(match self {
            Expr::Num(x) => *x,
            Expr::Var(v) => *env.get(v).ok_or_else(|| Error::KeyNotFound(format!("symbol {v}")))?,
            Expr::Neg(e) => -e.eval(env)?,
            Expr::Sum(terms) => {
                let mut acc = 0.0;
                for t in terms {
                    acc += t.eval(env)?;
                }
                acc
            }
            Expr::Mul(a, b) => a.eval(env)? * b.eval(env)?,
            Expr::Call(name, args) => {
                let xs = args.iter().map(|a| a.eval(env)).collect::<Result<Vec<_>>>()?;
                apply(name, &xs)?
            }
        })
    }
}

impl FormulaTree {
    /// Output values `o0…` for the given inputs `i0…`.
    pub fn evaluate(&self, inputs: &[f64]) -> Result<Vec<f64>> {
        if inputs.len() != self.num_inputs {
            return Err(Error::ShapeMismatch(format!("expected {} inputs", self.num_inputs)));
        }
        let mut env: BTreeMap<String, f64> = inputs.iter().enumerate().map(|(i, &x)| (format!("i{i}"), x)).collect();
        for a in &self.assignments {
            let v = a.expr.eval(&env)?;
            env.insert(a.name.clone(), v);
        }
        (0..self.num_outputs)
            .map(|o| env.get(&format!("o{o}")).copied().ok_or_else(|| Error::KeyNotFound(format!("output o{o}"))))
            .collect()
    }

    pub fn render(&self, style: FormulaStyle, precision: Precision) -> String {
        let mut out = String::new();
        match style {
            FormulaStyle::Plain => {
                for a in &self.assignments {
                    let _ = writeln!(out, "{} = {}", a.name, plain(&a.expr, precision));
                }
            }
            FormulaStyle::Typeset => {
                out.push_str("\\begin{aligned}\n");
                for a in &self.assignments {
                    let _ = writeln!(out, "{} &= {} \\\\", tex_symbol(&a.name), tex(&a.expr, precision));
                }
                out.push_str("\\end{aligned}\n");
            }
        }
        out
    }
}

/// Formula text: plain infix or math markup, three decimals.
pub fn to_formula(g: &GenomeTensors, schema: &AttributeSchema, style: FormulaStyle) -> Result<String> {
    Ok(build_formula(g, schema)?.render(style, Precision::Display))
}

fn num(x: f64, p: Precision) -> String {
    match p {
        Precision::Display => format!("{x:.3}"),
        Precision::Exact => format!("{x:?}"),
    }
}

/// Negative literal or literal product, returned as its absolute form so
/// a sum can print ` - ` instead of ` + -`.
fn negated(e: &Expr) -> Option<Expr> {
    match e {
        Expr::Num(x) if x.is_sign_negative() && *x != 0.0 => Some(Expr::Num(-x)),
        Expr::Mul(a, b) => match **a {
            Expr::Num(x) if x.is_sign_negative() && x != 0.0 => Some(Expr::Mul(Box::new(Expr::Num(-x)), b.clone())),
            _ => None,
        },
        Expr::Neg(inner) => Some((**inner).clone()),
        _ => None,
    }
}

fn plain(e: &Expr, p: Precision) -> String {
    match e {
        Expr::Num(x) => num(*x, p),
        Expr::Var(v) => v.clone(),
        Expr::Neg(inner) => format!("-{}", plain_factor(inner, p)),
        Expr::Sum(terms) => {
            let mut s = String::new();
            for (i, t) in terms.iter().enumerate() {
                match (i, negated(t)) {
                    (0, _) => s.push_str(&plain(t, p)),
                    (_, Some(abs)) => {
                        s.push_str(" - ");
                        s.push_str(&plain(&abs, p));
                    }
                    (_, None) => {
                        s.push_str(" + ");
                        s.push_str(&plain(t, p));
                    }
                }
            }
            s
        }
        Expr::Mul(a, b) => format!("{} * {}", plain_factor(a, p), plain_factor(b, p)),
        Expr::Call(name, args) => {
            let inner: Vec<String> = args.iter().map(|a| plain(a, p)).collect();
            format!("{name}({})", inner.join(", "))
        }
    }
}

fn plain_factor(e: &Expr, p: Precision) -> String {
    match e {
        Expr::Sum(_) => format!("({})", plain(e, p)),
        _ => plain(e, p),
    }
}

fn tex_symbol(name: &str) -> String {
    let (head, idx) = name.split_at(1);
    format!("{head}_{{{idx}}}")
}

fn tex(e: &Expr, p: Precision) -> String {
    match e {
        Expr::Num(x) => num(*x, p),
        Expr::Var(v) => tex_symbol(v),
        Expr::Neg(inner) => format!("-{}", tex(inner, p)),
        Expr::Sum(terms) => {
            let mut s = String::new();
            for (i, t) in terms.iter().enumerate() {
                match (i, negated(t)) {
                    (0, _) => s.push_str(&tex(t, p)),
                    (_, Some(abs)) => s.push_str(&format!(" - {}", tex(&abs, p))),
                    (_, None) => s.push_str(&format!(" + {}", tex(t, p))),
                }
            }
            s
        }
        Expr::Mul(a, b) => {
            let f = |x: &Expr| match x {
                Expr::Sum(_) => format!("\\left({}\\right)", tex(x, p)),
                _ => tex(x, p),
            };
            format!("{} \\cdot {}", f(a), f(b))
        }
        Expr::Call(name, args) => {
            let inner: Vec<String> = args.iter().map(|a| tex(a, p)).collect();
            let head = match name.as_str() {
                "" => "",
                "tanh" => "\\tanh",
                "sin" => "\\sin",
                "max" => "\\max",
                "sigmoid" => "\\sigma",
                other => return format!("\\mathrm{{{other}}}\\left({}\\right)", inner.join(", ")),
            };
            format!("{head}\\left({}\\right)", inner.join(", "))
        }
    }
}

// ---------------------------------------------------------------------------
// Plain-text parser
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
}

fn lex(line: &str, lineno: usize) -> Result<Vec<(Tok, usize)>> {
    let err = |col: usize, msg: String| Error::Parse { line: lineno, column: col + 1, message: msg };
    let bytes: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == '.' || bytes[i] == '_') {
                // exponent sign
                if (bytes[i] == 'e' || bytes[i] == 'E') && i + 1 < bytes.len() && (bytes[i + 1] == '-' || bytes[i + 1] == '+') {
                    i += 1;
                }
                i += 1;
            }
            let text: String = bytes[start..i].iter().collect();
            let v = text.parse::<f64>().map_err(|_| err(start, format!("bad number `{text}`")))?;
            out.push((Tok::Num(v), start));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(bytes[start..i].iter().collect()), start));
        } else if "+-*(),=".contains(c) {
            out.push((Tok::Sym(c), i));
            i += 1;
        } else {
            return Err(err(i, format!("unexpected character `{c}`")));
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    line: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn err(&self, msg: &str) -> Error {
        let column = self.toks.get(self.pos).map_or(0, |t| t.1 + 1);
        Error::Parse { line: self.line, column, message: msg.to_string() }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut terms = vec![self.term()?];
        loop {
            if self.eat('+') {
                terms.push(self.term()?);
            } else if self.eat('-') {
                terms.push(Expr::Neg(Box::new(self.term()?)));
            } else {
                break;
            }
        }
        Ok(if terms.len() == 1 { terms.pop().expect("one") } else { Expr::Sum(terms) })
    }

    fn term(&mut self) -> Result<Expr> {
        let mut e = self.unary()?;
        while self.eat('*') {
            e = Expr::Mul(Box::new(e), Box::new(self.unary()?));
        }
        Ok(e)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if self.eat('(') {
                    let args = self.args()?;
                    Ok(Expr::Call(name, args))
                } else {
                    Ok(Expr::Var(name))
                }
            }
            Some(Tok::Sym('(')) => {
                self.pos += 1;
                let args = self.args()?;
                Ok(Expr::Call(String::new(), args))
            }
            _ => Err(self.err("expected a number, symbol or `(`")),
        }
    }

    /// Comma-separated expressions up to and including `)`.
    fn args(&mut self) -> Result<Vec<Expr>> {
        let mut args = vec![self.expr()?];
        while self.eat(',') {
            args.push(self.expr()?);
        }
        if !self.eat(')') {
            return Err(self.err("expected `)`"));
        }
        Ok(args)
    }
}

/// Parses plain-style text (one `name = expr` per line) back into a tree.
pub fn parse_formula(text: &str, num_inputs: usize, num_outputs: usize) -> Result<FormulaTree> {
    let mut assignments = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut p = Parser { toks: lex(line, i + 1)?, pos: 0, line: i + 1 };
        let name = match p.peek().cloned() {
            Some(Tok::Ident(n)) => n,
            _ => return Err(p.err("expected an assignment target")),
        };
        p.pos += 1;
        if !p.eat('=') {
            return Err(p.err("expected `=`"));
        }
        let expr = p.expr()?;
        if p.pos != p.toks.len() {
            return Err(p.err("trailing input"));
        }
        assignments.push(Assignment { name, expr });
    }
    Ok(FormulaTree { num_inputs, num_outputs, assignments })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::{pad_genes, ConnGene, GenomeLimits, NodeGene};

    fn schema() -> AttributeSchema {
        AttributeSchema::new(vec![Activation::Identity, Activation::Tanh], vec![Aggregation::Sum, Aggregation::Max])
    }

    fn n(key: u64, bias: f64, act: Activation) -> NodeGene {
        NodeGene { key, bias, response: 1.0, aggregation: Aggregation::Sum, activation: act }
    }

    #[test]
    fn identity_network_text() {
        let g = pad_genes(
            &[n(0, 0.0, Activation::Identity), n(1, 0.0, Activation::Identity)],
            &[ConnGene { input: 0, output: 1, enabled: true, weight: 1.0 }],
            1,
            1,
            GenomeLimits::new(3, 3),
            &schema(),
        )
        .unwrap();
        assert_eq!(to_formula(&g, &schema(), FormulaStyle::Plain).unwrap(), "o0 = (1.000 * i0 + 0.000)\n");
        let tex = to_formula(&g, &schema(), FormulaStyle::Typeset).unwrap();
        assert!(tex.contains("o_{0} &= \\left(1.000 \\cdot i_{0} + 0.000\\right)"));
    }

    #[test]
    fn unused_hidden_and_roundtrip() {
        let mut max_node = n(3, -0.25, Activation::Tanh);
        max_node.aggregation = Aggregation::Max;
        max_node.response = 2.0;
        let g = pad_genes(
            &[n(0, 0.0, Activation::Identity), n(1, 0.5, Activation::Tanh), n(2, 0.1, Activation::Tanh), max_node],
            &[
                ConnGene { input: 0, output: 3, enabled: true, weight: -0.75 },
                ConnGene { input: 3, output: 1, enabled: true, weight: 1.5 },
                ConnGene { input: 0, output: 1, enabled: true, weight: 0.3 },
            ],
            1,
            1,
            GenomeLimits::new(5, 5),
            &schema(),
        )
        .unwrap();
        let tree = build_formula(&g, &schema()).unwrap();
        assert_eq!(tree.assignments.len(), 3);
        let text = tree.render(FormulaStyle::Plain, Precision::Exact);
        let parsed = parse_formula(&text, 1, 1).unwrap();
        let net = transform(&g).unwrap();
        for x in [-1.0, 0.0, 0.7] {
            let want = net.forward(&[x], &schema()).unwrap()[0];
            assert!((tree.evaluate(&[x]).unwrap()[0] - want).abs() < 1e-12);
            assert!((parsed.evaluate(&[x]).unwrap()[0] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn cycle_and_parse_errors() {
        let g = pad_genes(
            &[n(0, 0.0, Activation::Identity), n(1, 0.0, Activation::Identity), n(2, 0.0, Activation::Tanh)],
            &[
                ConnGene { input: 1, output: 2, enabled: true, weight: 1.0 },
                ConnGene { input: 2, output: 1, enabled: true, weight: 1.0 },
            ],
            1,
            1,
            GenomeLimits::new(3, 3),
            &schema(),
        )
        .unwrap();
        assert!(matches!(to_formula(&g, &schema(), FormulaStyle::Plain), Err(Error::CycleDetected(_))));
        assert!(matches!(parse_formula("o0 = (1 +", 1, 1), Err(Error::Parse { line: 1, .. })));
        let t = parse_formula("o0 = tanh(2 * i0 - 1.5e-1) * -1", 1, 1).unwrap();
        assert!((t.evaluate(&[0.5]).unwrap()[0] + (0.85f64).tanh()).abs() < 1e-15);
    }
}
