//! Printing in the parser's own grammar, so output strings parse back.

use std::fmt;

use super::{Expr, Node};

const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_UNARY: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_ATOM: u8 = 5;

fn precedence(e: &Expr) -> u8 {
    match e.node() {
        Node::Const(n) => {
            let s = n.to_string();
            if !n.is_real() && !n.re.is_zero() {
                PREC_ADD
            } else if s.starts_with('-') {
                PREC_UNARY
            } else if s.contains('/') || s.contains('*') {
                PREC_MUL
            } else {
                PREC_ATOM
            }
        }
        Node::Sym(_) | Node::Func(..) => PREC_ATOM,
        Node::Add(_) => PREC_ADD,
        Node::Mul(_) | Node::Div(..) => PREC_MUL,
        Node::Neg(_) => PREC_UNARY,
        Node::Pow(..) => PREC_POW,
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    if precedence(e) < min {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Const(n) => write!(f, "{n}"),
            Node::Sym(s) => write!(f, "{s}"),
            Node::Add(xs) => {
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        write!(f, " + ")?;
                    }
                    // Terms that begin with a unary minus still parse inside a sum.
                    write_child(f, x, PREC_UNARY.min(PREC_ADD + 1))?;
                }
                Ok(())
            }
            Node::Mul(xs) => {
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        write!(f, "*")?;
                    }
                    // Left operand may be a bare product/quotient; later ones are
                    // wrapped when they are quotients, since `a*b/c*d` is ambiguous.
                    let min = if i == 0 { PREC_MUL } else { PREC_MUL + 1 };
                    write_child(f, x, min)?;
                }
                Ok(())
            }
            Node::Div(a, b) => {
                write_child(f, a, PREC_MUL)?;
                write!(f, "/")?;
                write_child(f, b, PREC_MUL + 1)
            }
            Node::Neg(a) => {
                write!(f, "-")?;
                write_child(f, a, PREC_POW)
            }
            Node::Pow(a, b) => {
                write_child(f, a, PREC_ATOM)?;
                write!(f, "^")?;
                write_child(f, b, PREC_ATOM)
            }
            Node::Func(g, a) => write!(f, "{}({})", g.name(), a),
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::{equivalent, parse, Domain, Expr, Interval};

    #[test]
    fn prints_in_parseable_form() {
        for text in [
            "x^(1/2)*sin(theta)^2",
            "-(a + b)*c",
            "1/(x*y)",
            "(2 + 3*i)*x - 1/3",
            "x^(-1) + x^2^3",
            "a - (b - c)",
            "exp(-x)*1e-7",
        ] {
            let e = parse(text).unwrap();
            let again = parse(&e.to_string()).unwrap();
            let s = e.simplify();
            let again_s = parse(&s.to_string()).unwrap();
            let dom = Domain::new()
                .with("x", Interval::open(0.5, 2.0))
                .with("y", Interval::open(0.5, 2.0))
                .with("theta", Interval::open(0.5, 2.0))
                .with("a", Interval::open(0.5, 2.0))
                .with("b", Interval::open(0.5, 2.0))
                .with("c", Interval::open(0.5, 2.0));
            assert!(equivalent(&e, &again, &dom, 0).unwrap().is_equivalent(), "{text} -> {e}");
            assert!(equivalent(&e, &again_s, &dom, 0).unwrap().is_equivalent(), "{text} -> {s}");
        }
    }

    #[test]
    fn rational_constants_are_parenthesized_in_powers() {
        let e = Expr::pow(Expr::sym("x"), Expr::ratio(1, 4));
        assert_eq!(e.to_string(), "x^(1/4)");
        let m = Expr::mul(vec![Expr::ratio(-1, 2), Expr::sym("x")]);
        assert_eq!(m.to_string(), "-1/2*x");
    }
}
