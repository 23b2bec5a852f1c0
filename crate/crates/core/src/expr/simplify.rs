//! Best-effort structural simplification.
//!
//! Canonical shapes produced here: sums are flat with the constant first and
//! like terms collected; products are flat, sorted, with a single leading
//! numeric coefficient and repeated bases merged into powers; `sqrt(u)` is
//! rewritten as `u^(1/2)`; `a - b` and `a / b` become sums and products with
//! negative coefficients and exponents. Semantic equality is not decided here.

use std::collections::BTreeMap;

use num_integer::Roots;
use num_rational::Rational64;
use num_traits::Signed;

use super::number::{Number, Real};
use super::{Expr, Func, Node};

const MAX_PASSES: usize = 8;
const MAX_EXACT_EXPONENT: i64 = 64;

pub(super) fn simplify(e: &Expr) -> Expr {
    let mut cur = pass(e);
    for _ in 0..MAX_PASSES {
        let next = pass(&cur);
        if next == cur {
            return cur;
        }
        cur = next;
    }
    cur
}

fn pass(e: &Expr) -> Expr {
    match e.node() {
        Node::Const(_) | Node::Sym(_) => e.clone(),
        Node::Neg(a) => make_mul(vec![Expr::int(-1), pass(a)], 0),
        Node::Div(a, b) => make_mul(vec![pass(a), make_pow(pass(b), Expr::int(-1))], 0),
        Node::Add(xs) => make_add(xs.iter().map(pass).collect()),
        Node::Mul(xs) => make_mul(xs.iter().map(pass).collect(), 0),
        Node::Pow(a, b) => make_pow(pass(a), pass(b)),
        Node::Func(f, a) => make_func(*f, pass(a)),
    }
}

/// Splits a canonical term into numeric coefficient and the remaining factor.
fn split_coeff(t: &Expr) -> (Number, Option<Expr>) {
    match t.node() {
        Node::Const(n) => (*n, None),
        Node::Mul(fs) => match fs[0].as_const() {
            Some(c) => (c, Some(Expr::mul(fs[1..].to_vec()))),
            None => (Number::one(), Some(t.clone())),
        },
        _ => (Number::one(), Some(t.clone())),
    }
}

fn with_coeff(c: Number, rest: Expr) -> Expr {
    if c.is_one() {
        return rest;
    }
    match rest.node() {
        Node::Mul(fs) => {
            let mut v = Vec::with_capacity(fs.len() + 1);
            v.push(Expr::num(c));
            v.extend(fs.iter().cloned());
            Expr::mul(v)
        }
        _ => Expr::mul(vec![Expr::num(c), rest]),
    }
}

fn make_add(terms: Vec<Expr>) -> Expr {
    let mut flat = Vec::with_capacity(terms.len());
    for t in terms {
        match t.node() {
            Node::Add(inner) => flat.extend(inner.iter().cloned()),
            _ => flat.push(t),
        }
    }
    let mut constant = Number::zero();
    let mut collected: BTreeMap<Expr, Number> = BTreeMap::new();
    for t in &flat {
        match split_coeff(t) {
            (c, None) => constant = constant.add(c),
            (c, Some(rest)) => {
                let slot = collected.entry(rest).or_insert_with(Number::zero);
                *slot = slot.add(c);
            }
        }
    }
    let mut out = Vec::with_capacity(collected.len() + 1);
    if !constant.is_zero() {
        out.push(Expr::num(constant));
    }
    for (rest, c) in collected {
        if !c.is_zero() {
            out.push(with_coeff(c, rest));
        }
    }
    match out.len() {
        0 => Expr::zero(),
        1 => out.pop().unwrap(),
        _ => Expr::add(out),
    }
}

/// Base and exponent of a canonical factor.
fn base_exp(f: &Expr) -> (Expr, Expr) {
    match f.node() {
        Node::Pow(b, e) => (b.clone(), e.clone()),
        _ => (f.clone(), Expr::one()),
    }
}

fn make_mul(factors: Vec<Expr>, depth: usize) -> Expr {
    let mut flat = Vec::with_capacity(factors.len());
    for f in factors {
        match f.node() {
            Node::Mul(inner) => flat.extend(inner.iter().cloned()),
            _ => flat.push(f),
        }
    }
    let mut coeff = Number::one();
    let mut powers: BTreeMap<Expr, Vec<Expr>> = BTreeMap::new();
    let mut exp_args: Vec<Expr> = Vec::new();
    for f in flat {
        if let Some(c) = f.as_const() {
            coeff = coeff.mul(c);
            continue;
        }
        let (base, exponent) = base_exp(&f);
        // exp(a)^n · exp(b) = exp(n·a + b) for integer n.
        if let Node::Func(Func::Exp, arg) = base.node() {
            if exponent.as_const().and_then(|n| n.as_integer()).is_some() {
                exp_args.push(make_mul(vec![exponent, arg.clone()], depth + 1));
                continue;
            }
        }
        powers.entry(base).or_default().push(exponent);
    }
    if coeff.is_zero() {
        return Expr::num(coeff);
    }
    let mut rebuilt = Vec::with_capacity(powers.len() + 1);
    let mut needs_again = false;
    for (base, exps) in powers {
        let exponent = if exps.len() == 1 { exps.into_iter().next().unwrap() } else { make_add(exps) };
        let f = make_pow(base, exponent);
        needs_again |= matches!(f.node(), Node::Const(_) | Node::Mul(_));
        rebuilt.push(f);
    }
    if !exp_args.is_empty() {
        let f = make_func(Func::Exp, make_add(exp_args));
        needs_again |= matches!(f.node(), Node::Const(_) | Node::Mul(_));
        rebuilt.push(f);
    }
    if needs_again && depth < 4 {
        rebuilt.push(Expr::num(coeff));
        return make_mul(rebuilt, depth + 1);
    }
    rebuilt.sort();
    if rebuilt.is_empty() {
        return Expr::num(coeff);
    }
    if rebuilt.len() == 1 {
        let only = rebuilt.pop().unwrap();
        if coeff.is_one() {
            return only;
        }
        // Numeric coefficients distribute over sums so like terms can meet.
        if let Node::Add(terms) = only.node() {
            return make_add(terms.iter().map(|t| make_mul(vec![Expr::num(coeff), t.clone()], depth + 1)).collect());
        }
        return Expr::mul(vec![Expr::num(coeff), only]);
    }
    if !coeff.is_one() {
        rebuilt.insert(0, Expr::num(coeff));
    }
    Expr::mul(rebuilt)
}

/// Exact `q`-th root of a non-negative rational, if one exists.
fn exact_root(r: Rational64, q: u32) -> Option<Rational64> {
    if r.is_negative() {
        return None;
    }
    let root = |n: i64| {
        let k = n.nth_root(q);
        (k.checked_pow(q) == Some(n)).then_some(k)
    };
    Some(Rational64::new(root(*r.numer())?, root(*r.denom())?))
}

fn fold_const_pow(b: Number, e: Number) -> Option<Number> {
    if let Some(n) = e.as_integer() {
        if n.abs() <= MAX_EXACT_EXPONENT {
            return b.powi(n);
        }
        return None;
    }
    let (base, exp) = (b.as_real_rational()?, e.as_real_rational()?);
    let q = u32::try_from(*exp.denom()).ok().filter(|q| *q <= 4)?;
    let root = exact_root(base, q)?;
    Number::from_rational(root).powi(*exp.numer())
}

fn make_pow(b: Expr, e: Expr) -> Expr {
    if let Some(ec) = e.as_const() {
        if ec.is_zero() {
            return Expr::one();
        }
        if ec.is_one() {
            return b;
        }
    }
    if b.is_one() {
        return Expr::one();
    }
    if let (Some(bc), Some(ec)) = (b.as_const(), e.as_const()) {
        if bc.is_zero() {
            if ec.is_real() && ec.re.to_f64() > 0.0 {
                return Expr::zero();
            }
            return Expr::pow(b, e);
        }
        if let Some(v) = fold_const_pow(bc, ec) {
            return Expr::num(v);
        }
        return Expr::pow(b, e);
    }
    let int_exp = e.as_const().and_then(|n| n.as_integer());
    if let Some(n) = int_exp {
        match b.node() {
            Node::Pow(inner, e1) => {
                return make_pow(inner.clone(), make_mul(vec![e1.clone(), Expr::int(n)], 0));
            }
            Node::Mul(fs) => {
                return make_mul(fs.iter().map(|f| make_pow(f.clone(), Expr::int(n))).collect(), 0);
            }
            Node::Func(Func::Exp, arg) => {
                return make_func(Func::Exp, make_mul(vec![Expr::int(n), arg.clone()], 0));
            }
            _ => {}
        }
    }
    Expr::pow(b, e)
}

/// If `a = c·rest` with a negative real coefficient, returns `-a`.
fn negated(a: &Expr) -> Option<Expr> {
    let (c, rest) = split_coeff(a);
    if !c.is_negative_real() {
        return None;
    }
    Some(match rest {
        Some(r) => with_coeff(c.neg(), r),
        None => Expr::num(c.neg()),
    })
}

fn make_func(f: Func, a: Expr) -> Expr {
    if f == Func::Sqrt {
        return make_pow(a, Expr::ratio(1, 2));
    }
    if let Some(c) = a.as_const() {
        if c.is_zero() {
            match f {
                Func::Sin | Func::Tan | Func::Sinh | Func::Abs => return Expr::zero(),
                Func::Cos | Func::Cosh | Func::Exp => return Expr::one(),
                Func::Ln | Func::Sqrt => {}
            }
        }
        if f == Func::Ln && c.is_one() {
            return Expr::zero();
        }
        if f == Func::Abs && c.is_real() && c.re.is_exact() {
            return Expr::num(if c.is_negative_real() { c.neg() } else { c });
        }
        // Inexact constants fold numerically; exact ones stay symbolic.
        if !c.re.is_exact() || !c.im.is_exact() {
            if let Ok(v) = Expr::apply(f, a.clone()).eval(&Default::default()) {
                return Expr::num(Number { re: Real::Float(v.re), im: Real::from_f64(v.im) });
            }
        }
    }
    if let Some(pos) = negated(&a) {
        match f {
            Func::Sin | Func::Tan | Func::Sinh => {
                return make_mul(vec![Expr::int(-1), Expr::apply(f, pos)], 0);
            }
            Func::Cos | Func::Cosh | Func::Abs => return Expr::apply(f, pos),
            _ => {}
        }
    }
    Expr::apply(f, a)
}
