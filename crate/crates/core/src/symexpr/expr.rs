use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use super::chart::Chart;

/// One node of an expression DAG. Children are shared through [`Expr`].
#[derive(Debug)]
pub enum Node {
    Const(f64),
    /// Index of a coordinate in the ambient chart.
    Var(usize),
    Neg(Expr),
    Sin(Expr),
    Cos(Expr),
    Exp(Expr),
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    Pow(Expr, u32),
}

/// Immutable scalar-field expression over the coordinates of a chart.
///
/// Cloning is cheap; subtrees are reference counted and freely shared, so
/// derivatives and symbolic solves build DAGs rather than trees. The smart
/// constructors fold constants and drop additive zeros and multiplicative
/// ones; there is no other simplification.
#[derive(Clone, Debug)]
pub struct Expr(Arc<Node>);

impl Expr {
    pub fn num(value: f64) -> Expr {
        Expr(Arc::new(Node::Const(value)))
    }

    pub fn zero() -> Expr {
        Expr::num(0.0)
    }

    pub fn one() -> Expr {
        Expr::num(1.0)
    }

    /// Coordinate reference by chart index. Prefer [`Chart::var`] which
    /// checks the name.
    pub fn var(index: usize) -> Expr {
        Expr(Arc::new(Node::Var(index)))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub(crate) fn id(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    pub fn ptr_eq(&self, other: &Expr) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    pub fn as_const(&self) -> Option<f64> {
        match *self.0 {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    pub fn sin(&self) -> Expr {
        match self.as_const() {
            Some(c) => Expr::num(c.sin()),
            None => Expr(Arc::new(Node::Sin(self.clone()))),
        }
    }

    pub fn cos(&self) -> Expr {
        match self.as_const() {
            Some(c) => Expr::num(c.cos()),
            None => Expr(Arc::new(Node::Cos(self.clone()))),
        }
    }

    pub fn exp(&self) -> Expr {
        match self.as_const() {
            Some(c) => Expr::num(c.exp()),
            None => Expr(Arc::new(Node::Exp(self.clone()))),
        }
    }

    pub fn powi(&self, exponent: u32) -> Expr {
        match (self.as_const(), exponent) {
            (_, 0) => Expr::one(),
            (_, 1) => self.clone(),
            (Some(c), n) => Expr::num(c.powi(n as i32)),
            (None, n) => Expr(Arc::new(Node::Pow(self.clone(), n))),
        }
    }

    pub fn scale(&self, factor: f64) -> Expr {
        Expr::num(factor) * self
    }

    /// Sum of an iterator of expressions; the empty sum is zero.
    pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
        terms.into_iter().fold(Expr::zero(), |acc, t| &acc + &t)
    }

    /// Number of distinct nodes in the DAG.
    pub fn node_count(&self) -> usize {
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![self.clone()];
        while let Some(e) = stack.pop() {
            if !seen.insert(e.id()) {
                continue;
            }
            for child in e.children() {
                stack.push(child.clone());
            }
        }
        seen.len()
    }

    /// Size of the expression when written out as a tree, saturating at
    /// `limit`. Shared subtrees are counted once per occurrence.
    pub fn tree_size(&self, limit: usize) -> usize {
        fn go(e: &Expr, limit: usize, acc: &mut usize) {
            if *acc >= limit {
                return;
            }
            *acc += 1;
            for child in e.children() {
                go(child, limit, acc);
            }
        }
        let mut acc = 0;
        go(self, limit, &mut acc);
        acc.min(limit)
    }

    pub(crate) fn children(&self) -> impl Iterator<Item = &Expr> {
        let (a, b) = match self.node() {
            Node::Const(_) | Node::Var(_) => (None, None),
            Node::Neg(a) | Node::Sin(a) | Node::Cos(a) | Node::Exp(a) | Node::Pow(a, _) => {
                (Some(a), None)
            }
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                (Some(a), Some(b))
            }
        };
        a.into_iter().chain(b)
    }

    /// Highest coordinate index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        let mut seen = std::collections::HashSet::new();
        let mut best = None;
        let mut stack = vec![self.clone()];
        while let Some(e) = stack.pop() {
            if !seen.insert(e.id()) {
                continue;
            }
            if let Node::Var(i) = e.node() {
                best = Some(best.map_or(*i, |b: usize| b.max(*i)));
            }
            for child in e.children() {
                stack.push(child.clone());
            }
        }
        best
    }

    /// Renders the expression in the parser's grammar using the chart's
    /// coordinate names.
    pub fn display<'a>(&'a self, chart: &'a Chart) -> ExprDisplay<'a> {
        ExprDisplay { expr: self, chart }
    }
}

/// Structural equality. Shared subtrees short-circuit.
impl PartialEq for Expr {
    fn eq(&self, other: &Expr) -> bool {
        if self.ptr_eq(other) {
            return true;
        }
        match (self.node(), other.node()) {
            (Node::Const(a), Node::Const(b)) => a.to_bits() == b.to_bits(),
            (Node::Var(a), Node::Var(b)) => a == b,
            (Node::Neg(a), Node::Neg(b))
            | (Node::Sin(a), Node::Sin(b))
            | (Node::Cos(a), Node::Cos(b))
            | (Node::Exp(a), Node::Exp(b)) => a == b,
            (Node::Pow(a, m), Node::Pow(b, n)) => m == n && a == b,
            (Node::Add(a, b), Node::Add(c, d))
            | (Node::Sub(a, b), Node::Sub(c, d))
            | (Node::Mul(a, b), Node::Mul(c, d))
            | (Node::Div(a, b), Node::Div(c, d)) => a == c && b == d,
            _ => false,
        }
    }
}

impl From<f64> for Expr {
    fn from(v: f64) -> Expr {
        Expr::num(v)
    }
}

/// Operands this small are compared structurally when folding `a - a`.
const CANCEL_SIZE: usize = 32;

fn same(a: &Expr, b: &Expr) -> bool {
    a.ptr_eq(b) || (a.tree_size(CANCEL_SIZE) < CANCEL_SIZE && a == b)
}

fn add(a: &Expr, b: &Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => return Expr::num(x + y),
        (Some(x), _) if x == 0.0 => return b.clone(),
        (_, Some(y)) if y == 0.0 => return a.clone(),
        _ => {}
    }
    match (a.node(), b.node()) {
        (_, Node::Neg(nb)) => sub(a, nb),
        (Node::Neg(na), _) => sub(b, na),
        _ => Expr(Arc::new(Node::Add(a.clone(), b.clone()))),
    }
}

fn sub(a: &Expr, b: &Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => return Expr::num(x - y),
        (Some(x), _) if x == 0.0 => return -b,
        (_, Some(y)) if y == 0.0 => return a.clone(),
        _ => {}
    }
    if same(a, b) {
        return Expr::zero();
    }
    match b.node() {
        Node::Neg(nb) => add(a, nb),
        _ => Expr(Arc::new(Node::Sub(a.clone(), b.clone()))),
    }
}

fn mul(a: &Expr, b: &Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => Expr::num(x * y),
        (Some(x), _) | (_, Some(x)) if x == 0.0 => Expr::zero(),
        (Some(x), _) if x == 1.0 => b.clone(),
        (_, Some(y)) if y == 1.0 => a.clone(),
        (Some(x), _) if x == -1.0 => -b,
        (_, Some(y)) if y == -1.0 => -a,
        _ => Expr(Arc::new(Node::Mul(a.clone(), b.clone()))),
    }
}

fn div(a: &Expr, b: &Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        // A literal zero divisor is kept so evaluation reports the guard.
        (Some(x), Some(y)) if y != 0.0 => Expr::num(x / y),
        (Some(x), _) if x == 0.0 => Expr::zero(),
        (_, Some(y)) if y == 1.0 => a.clone(),
        _ => Expr(Arc::new(Node::Div(a.clone(), b.clone()))),
    }
}

fn neg(a: &Expr) -> Expr {
    match a.node() {
        Node::Const(c) => Expr::num(-c),
        Node::Neg(inner) => inner.clone(),
        _ => Expr(Arc::new(Node::Neg(a.clone()))),
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $f:ident) => {
        impl $tr<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                $f(self, rhs)
            }
        }
        impl $tr<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $f(&self, &rhs)
            }
        }
        impl $tr<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                $f(&self, rhs)
            }
        }
        impl $tr<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $f(self, &rhs)
            }
        }
        impl $tr<f64> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                $f(self, &Expr::num(rhs))
            }
        }
        impl $tr<f64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                $f(&self, &Expr::num(rhs))
            }
        }
        impl $tr<&Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                $f(&Expr::num(self), rhs)
            }
        }
        impl $tr<Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $f(&Expr::num(self), &rhs)
            }
        }
    };
}

binop!(Add, add, add);
binop!(Sub, sub, sub);
binop!(Mul, mul, mul);
binop!(Div, div, div);

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        neg(self)
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        neg(&self)
    }
}

pub struct ExprDisplay<'a> {
    expr: &'a Expr,
    chart: &'a Chart,
}

// Binding strength used to decide parenthesization.
const PREC_SUM: u8 = 1;
const PREC_PRODUCT: u8 = 2;
const PREC_POWER: u8 = 4;
const PREC_ATOM: u8 = 5;

fn precedence(e: &Expr) -> u8 {
    match e.node() {
        Node::Add(..) | Node::Sub(..) => PREC_SUM,
        Node::Mul(..) | Node::Div(..) => PREC_PRODUCT,
        // Negation and negative literals are always parenthesized when they
        // appear as an operand.
        Node::Neg(_) => 0,
        Node::Const(c) if *c < 0.0 || c.is_sign_negative() => 0,
        Node::Pow(..) => PREC_POWER,
        _ => PREC_ATOM,
    }
}

fn write_number(f: &mut fmt::Formatter<'_>, c: f64) -> fmt::Result {
    if c.is_finite() {
        write!(f, "{}", c)
    } else {
        // Not representable in the grammar; only reachable from hand-built trees.
        write!(f, "({}/0)", if c.is_nan() { 0.0 } else { c.signum() })
    }
}

impl ExprDisplay<'_> {
    fn operand(&self, f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
        if precedence(e) < min {
            write!(f, "(")?;
            self.write(f, e)?;
            write!(f, ")")
        } else {
            self.write(f, e)
        }
    }

    fn write(&self, f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
        match e.node() {
            Node::Const(c) => write_number(f, *c),
            Node::Var(i) => match self.chart.names().get(*i) {
                Some(name) => write!(f, "{}", name),
                None => write!(f, "_{}", i),
            },
            Node::Neg(a) => {
                write!(f, "-")?;
                self.operand(f, a, PREC_POWER)
            }
            Node::Sin(a) => self.call(f, "sin", a),
            Node::Cos(a) => self.call(f, "cos", a),
            Node::Exp(a) => self.call(f, "exp", a),
            Node::Add(a, b) => {
                self.operand(f, a, PREC_SUM)?;
                write!(f, " + ")?;
                self.operand(f, b, PREC_PRODUCT)
            }
            Node::Sub(a, b) => {
                self.operand(f, a, PREC_SUM)?;
                write!(f, " - ")?;
                self.operand(f, b, PREC_PRODUCT)
            }
            Node::Mul(a, b) => {
                self.operand(f, a, PREC_PRODUCT)?;
                write!(f, "*")?;
                self.operand(f, b, PREC_POWER)
            }
            Node::Div(a, b) => {
                self.operand(f, a, PREC_PRODUCT)?;
                write!(f, "/")?;
                self.operand(f, b, PREC_POWER)
            }
            Node::Pow(a, n) => {
                self.operand(f, a, PREC_ATOM)?;
                write!(f, "^{}", n)
            }
        }
    }

    fn call(&self, f: &mut fmt::Formatter<'_>, name: &str, arg: &Expr) -> fmt::Result {
        write!(f, "{}(", name)?;
        self.write(f, arg)?;
        write!(f, ")")
    }
}

impl fmt::Display for ExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // A bare negative literal at the top level does not need parentheses.
        if let Node::Const(c) = self.expr.node() {
            return write_number(f, *c);
        }
        self.write(f, self.expr)
    }
}
