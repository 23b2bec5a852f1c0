use super::{Expr, Func, Node};

pub(super) fn differentiate(e: &Expr, v: &str) -> Expr {
    if !e.depends_on(v) {
        return Expr::zero();
    }
    match e.node() {
        Node::Const(_) => Expr::zero(),
        Node::Sym(s) => {
            if &**s == v {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Node::Add(xs) => Expr::add(xs.iter().map(|x| differentiate(x, v)).collect()),
        Node::Mul(xs) => {
            let mut terms = Vec::new();
            for (i, x) in xs.iter().enumerate() {
                if !x.depends_on(v) {
                    continue;
                }
                let mut factors = xs.clone();
                factors[i] = differentiate(x, v);
                terms.push(Expr::mul(factors));
            }
            Expr::add(terms)
        }
        Node::Neg(a) => -differentiate(a, v),
        Node::Div(n, d) => {
            let dn = differentiate(n, v);
            let dd = differentiate(d, v);
            (dn * d - n * dd) / Expr::powi(d.clone(), 2)
        }
        Node::Pow(b, x) => {
            let db = differentiate(b, v);
            if !x.depends_on(v) {
                // d(b^x) = x·b^(x-1)·b'
                return Expr::mul(vec![x.clone(), Expr::pow(b.clone(), x - Expr::one()), db]);
            }
            let dx = differentiate(x, v);
            // d(b^x) = b^x·(x'·ln b + x·b'/b)
            e * (dx * Expr::apply(Func::Ln, b.clone()) + x * db / b)
        }
        Node::Func(f, a) => {
            let da = differentiate(a, v);
            let outer = match f {
                Func::Sin => Expr::apply(Func::Cos, a.clone()),
                Func::Cos => -Expr::apply(Func::Sin, a.clone()),
                Func::Tan => Expr::one() + Expr::powi(Expr::apply(Func::Tan, a.clone()), 2),
                Func::Sinh => Expr::apply(Func::Cosh, a.clone()),
                Func::Cosh => Expr::apply(Func::Sinh, a.clone()),
                Func::Exp => e.clone(),
                Func::Ln => Expr::powi(a.clone(), -1),
                Func::Sqrt => Expr::ratio(1, 2) * Expr::pow(a.clone(), Expr::ratio(-1, 2)),
                // a/|a| is undefined at a = 0 and faults on evaluation there.
                Func::Abs => a / Expr::apply(Func::Abs, a.clone()),
            };
            outer * da
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::{equivalent, parse, Domain, Equivalence, Expr, Interval};

    fn dom() -> Domain {
        Domain::new()
            .with("theta", Interval::open(0.1, 3.0))
            .with("x", Interval::open(-2.0, 2.0))
            .with("c", Interval::open(-2.0, 2.0))
    }

    fn assert_equiv(a: &Expr, b: &str) {
        let b = parse(b).unwrap();
        let r = equivalent(a, &b, &dom(), 7).unwrap();
        assert_eq!(r, Equivalence::Equivalent, "{a} vs {b}");
    }

    #[test]
    fn square_of_sine() {
        let d = parse("sin(theta)^2").unwrap().diff("theta");
        assert_equiv(&d, "2*sin(theta)*cos(theta)");
    }

    #[test]
    fn constant_symbol_has_zero_derivative() {
        assert!(parse("c").unwrap().diff("x").is_zero());
        assert!(parse("c^3*sin(c)").unwrap().diff("x").is_zero());
    }

    #[test]
    fn chain_rule_through_log() {
        let d = parse("ln(sin(theta))").unwrap().diff("theta");
        assert_equiv(&d, "cos(theta)/sin(theta)");
    }

    #[test]
    fn variable_exponent() {
        let d = parse("x^x").unwrap().diff("x");
        let dom = Domain::new().with("x", Interval::open(0.2, 2.0));
        let r = equivalent(&d, &parse("x^x*(ln(x) + 1)").unwrap(), &dom, 1).unwrap();
        assert!(r.is_equivalent());
    }

    #[test]
    fn abs_derivative_faults_at_zero() {
        let d = parse("abs(x)").unwrap().diff("x");
        let at_zero = crate::expr::Bindings::from([("x".to_string(), 0.0.into())]);
        assert!(d.eval(&at_zero).is_err());
        let at_one = crate::expr::Bindings::from([("x".to_string(), (-1.5).into())]);
        assert_eq!(d.eval(&at_one).unwrap().re, -1.0);
    }
}
