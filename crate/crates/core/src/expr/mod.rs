//! Symbolic scalar expressions over chart coordinates.
//!
//! An [`Expr`] is an immutable, reference-counted tree. Every geometric
//! quantity in the crate (metric entries, Christoffel symbols, operator
//! coefficients) is an `Expr`. Structural simplification is best effort;
//! identities are decided by [`equivalent`], which compares numerical values
//! at seeded random points of a [`Domain`].

mod diff;
mod display;
mod equiv;
mod eval;
mod number;
mod parse;
mod simplify;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

pub use equiv::{equivalent, Domain, DomainError, Equivalence, Interval, EQUIV_POINTS, EQUIV_RETRIES};
pub use eval::{Bindings, EvalError};
pub use number::{Number, Real};
pub use parse::{parse, ParseError};

/// Elementary functions understood by the parser, differentiator and evaluator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Exp,
    Ln,
    Sqrt,
    Abs,
}

impl Func {
    pub const ALL: [Func; 9] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Sinh,
        Func::Cosh,
        Func::Exp,
        Func::Ln,
        Func::Sqrt,
        Func::Abs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.iter().copied().find(|f| f.name() == name)
    }
}

/// Node of an expression tree.
#[derive(Clone, Debug)]
pub enum Node {
    Const(Number),
    Sym(Arc<str>),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Pow(Expr, Expr),
    Div(Expr, Expr),
    Neg(Expr),
    Func(Func, Expr),
}

/// Immutable symbolic expression. Cloning is cheap.
#[derive(Clone)]
pub struct Expr(Arc<Node>);

impl Expr {
    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn from_node(node: Node) -> Self {
        Expr(Arc::new(node))
    }

    pub fn num(n: Number) -> Self {
        Expr::from_node(Node::Const(n))
    }

    pub fn int(n: i64) -> Self {
        Expr::num(Number::int(n))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Expr::num(Number::ratio(num, den))
    }

    pub fn real(v: f64) -> Self {
        Expr::num(Number::from_f64(v))
    }

    pub fn zero() -> Self {
        Expr::int(0)
    }

    pub fn one() -> Self {
        Expr::int(1)
    }

    /// The imaginary unit.
    pub fn i() -> Self {
        Expr::num(Number::imaginary_unit())
    }

    pub fn sym(name: &str) -> Self {
        Expr::from_node(Node::Sym(Arc::from(name)))
    }

    pub fn add(terms: Vec<Expr>) -> Self {
        match terms.len() {
            0 => Expr::zero(),
            1 => terms.into_iter().next().unwrap(),
            _ => Expr::from_node(Node::Add(terms)),
        }
    }

    pub fn mul(factors: Vec<Expr>) -> Self {
        match factors.len() {
            0 => Expr::one(),
            1 => factors.into_iter().next().unwrap(),
            _ => Expr::from_node(Node::Mul(factors)),
        }
    }

    pub fn pow(base: Expr, exponent: Expr) -> Self {
        Expr::from_node(Node::Pow(base, exponent))
    }

    pub fn powi(base: Expr, n: i64) -> Self {
        Expr::pow(base, Expr::int(n))
    }

    pub fn div(num: Expr, den: Expr) -> Self {
        Expr::from_node(Node::Div(num, den))
    }

    pub fn apply(f: Func, arg: Expr) -> Self {
        Expr::from_node(Node::Func(f, arg))
    }

    pub fn sqrt(self) -> Self {
        Expr::apply(Func::Sqrt, self)
    }

    pub fn recip(self) -> Self {
        Expr::powi(self, -1)
    }

    pub fn as_const(&self) -> Option<Number> {
        match self.node() {
            Node::Const(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_symbol(&self) -> Option<&str> {
        match self.node() {
            Node::Sym(s) => Some(s),
            _ => None,
        }
    }

    /// Structural zero (a constant equal to zero). Use [`equivalent`] for
    /// semantic checks.
    pub fn is_zero(&self) -> bool {
        self.as_const().is_some_and(|n| n.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self.as_const().is_some_and(|n| n.is_one())
    }

    pub fn simplify(&self) -> Expr {
        simplify::simplify(self)
    }

    /// Exact partial derivative with respect to `var`, simplified.
    ///
    /// The derivative of `abs(u)` is `u/abs(u)·u'`, which faults on
    /// evaluation where `u = 0` instead of silently returning zero there.
    pub fn diff(&self, var: &str) -> Expr {
        diff::differentiate(self, var).simplify()
    }

    pub fn eval(&self, bindings: &Bindings) -> Result<num_complex::Complex64, EvalError> {
        eval::evaluate(self, bindings)
    }

    pub fn free_symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut BTreeSet<String>) {
        match self.node() {
            Node::Const(_) => {}
            Node::Sym(s) => {
                out.insert(s.to_string());
            }
            Node::Add(xs) | Node::Mul(xs) => xs.iter().for_each(|x| x.collect_symbols(out)),
            Node::Pow(a, b) | Node::Div(a, b) => {
                a.collect_symbols(out);
                b.collect_symbols(out);
            }
            Node::Neg(a) | Node::Func(_, a) => a.collect_symbols(out),
        }
    }

    pub fn depends_on(&self, var: &str) -> bool {
        match self.node() {
            Node::Const(_) => false,
            Node::Sym(s) => &**s == var,
            Node::Add(xs) | Node::Mul(xs) => xs.iter().any(|x| x.depends_on(var)),
            Node::Pow(a, b) | Node::Div(a, b) => a.depends_on(var) || b.depends_on(var),
            Node::Neg(a) | Node::Func(_, a) => a.depends_on(var),
        }
    }

    /// Replaces every occurrence of the given symbols.
    pub fn substitute(&self, map: &BTreeMap<String, Expr>) -> Expr {
        self.map_symbols(&|s| map.get(s).cloned())
    }

    pub fn substitute_one(&self, var: &str, value: &Expr) -> Expr {
        self.map_symbols(&|s| (s == var).then(|| value.clone()))
    }

    fn map_symbols(&self, f: &dyn Fn(&str) -> Option<Expr>) -> Expr {
        match self.node() {
            Node::Const(_) => self.clone(),
            Node::Sym(s) => f(s).unwrap_or_else(|| self.clone()),
            Node::Add(xs) => Expr::add(xs.iter().map(|x| x.map_symbols(f)).collect()),
            Node::Mul(xs) => Expr::mul(xs.iter().map(|x| x.map_symbols(f)).collect()),
            Node::Pow(a, b) => Expr::pow(a.map_symbols(f), b.map_symbols(f)),
            Node::Div(a, b) => Expr::div(a.map_symbols(f), b.map_symbols(f)),
            Node::Neg(a) => -a.map_symbols(f),
            Node::Func(g, a) => Expr::apply(*g, a.map_symbols(f)),
        }
    }

    /// Complex conjugate. Symbols denote real coordinates and parameters,
    /// and every supported function commutes with conjugation.
    pub fn conj(&self) -> Expr {
        match self.node() {
            Node::Const(n) => Expr::num(n.conj()),
            Node::Sym(_) => self.clone(),
            Node::Add(xs) => Expr::add(xs.iter().map(Expr::conj).collect()),
            Node::Mul(xs) => Expr::mul(xs.iter().map(Expr::conj).collect()),
            Node::Pow(a, b) => Expr::pow(a.conj(), b.conj()),
            Node::Div(a, b) => Expr::div(a.conj(), b.conj()),
            Node::Neg(a) => -a.conj(),
            Node::Func(g, a) => Expr::apply(*g, a.conj()),
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self.node() {
            Node::Const(_) | Node::Sym(_) => 1,
            Node::Add(xs) | Node::Mul(xs) => 1 + xs.iter().map(Expr::size).sum::<usize>(),
            Node::Pow(a, b) | Node::Div(a, b) => 1 + a.size() + b.size(),
            Node::Neg(a) | Node::Func(_, a) => 1 + a.size(),
        }
    }

    fn rank(&self) -> u8 {
        match self.node() {
            Node::Const(_) => 0,
            Node::Sym(_) => 1,
            Node::Func(..) => 2,
            Node::Pow(..) => 3,
            Node::Mul(_) => 4,
            Node::Add(_) => 5,
            Node::Div(..) => 6,
            Node::Neg(_) => 7,
        }
    }
}

fn cmp_slices(a: &[Expr], b: &[Expr]) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| {
        a.iter().zip(b).map(|(x, y)| x.cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
    })
}

impl Ord for Expr {
    fn cmp(&self, other: &Self) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            return Ordering::Equal;
        }
        self.rank().cmp(&other.rank()).then_with(|| match (self.node(), other.node()) {
            (Node::Const(a), Node::Const(b)) => a.total_cmp(b),
            (Node::Sym(a), Node::Sym(b)) => a.cmp(b),
            (Node::Add(a), Node::Add(b)) | (Node::Mul(a), Node::Mul(b)) => cmp_slices(a, b),
            (Node::Pow(a1, b1), Node::Pow(a2, b2)) | (Node::Div(a1, b1), Node::Div(a2, b2)) => {
                a1.cmp(a2).then_with(|| b1.cmp(b2))
            }
            (Node::Neg(a), Node::Neg(b)) => a.cmp(b),
            (Node::Func(f, a), Node::Func(g, b)) => f.cmp(g).then_with(|| a.cmp(b)),
            _ => unreachable!("ranks differ"),
        })
    }
}

impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Expr {}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({})", self)
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Self {
        Expr::int(n)
    }
}

impl From<Number> for Expr {
    fn from(n: Number) -> Self {
        Expr::num(n)
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl std::ops::$tr<Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, rhs)
            }
        }
        impl std::ops::$tr<&Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), rhs.clone())
            }
        }
        impl std::ops::$tr<Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), rhs)
            }
        }
        impl std::ops::$tr<&Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, rhs.clone())
            }
        }
    };
}

binop!(Add, add, |a, b| Expr::add(vec![a, b]));
binop!(Sub, sub, |a, b| Expr::add(vec![a, -b]));
binop!(Mul, mul, |a, b| Expr::mul(vec![a, b]));
binop!(Div, div, Expr::div);

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::from_node(Node::Neg(self))
    }
}

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -self.clone()
    }
}

/// Sum of an iterator of expressions (unsimplified).
pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
    Expr::add(terms.into_iter().collect())
}
