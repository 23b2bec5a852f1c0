use std::collections::BTreeMap;

use num_complex::Complex64;
use thiserror::Error;

use super::{Expr, Func, Node};

/// Values of free symbols.
pub type Bindings = BTreeMap<String, Complex64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound symbol `{0}`")]
    Unbound(String),
    #[error("singular evaluation: {0}")]
    Singular(String),
}

fn singular(msg: impl Into<String>) -> EvalError {
    EvalError::Singular(msg.into())
}

fn finite(z: Complex64, what: &str) -> Result<Complex64, EvalError> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(singular(format!("{what} is not finite")))
    }
}

fn is_nonpositive_real(z: Complex64) -> bool {
    z.im == 0.0 && z.re <= 0.0
}

fn power(base: Complex64, exp: Complex64, exact_int: Option<i64>) -> Result<Complex64, EvalError> {
    if base == Complex64::new(0.0, 0.0) {
        return if exp.im == 0.0 && exp.re > 0.0 {
            Ok(Complex64::new(0.0, 0.0))
        } else if exp == Complex64::new(0.0, 0.0) {
            Ok(Complex64::new(1.0, 0.0))
        } else {
            Err(singular("zero raised to a non-positive power"))
        };
    }
    if let Some(n) = exact_int {
        if let Ok(n) = i32::try_from(n) {
            return Ok(base.powi(n));
        }
    }
    if base.im == 0.0 && base.re > 0.0 && exp.im == 0.0 {
        return Ok(Complex64::new(base.re.powf(exp.re), 0.0));
    }
    Ok(base.powc(exp))
}

pub(super) fn evaluate(e: &Expr, b: &Bindings) -> Result<Complex64, EvalError> {
    let v = match e.node() {
        Node::Const(n) => n.to_c64(),
        Node::Sym(s) => *b.get(&**s).ok_or_else(|| EvalError::Unbound(s.to_string()))?,
        Node::Add(xs) => {
            let mut acc = Complex64::new(0.0, 0.0);
            for x in xs {
                acc += evaluate(x, b)?;
            }
            acc
        }
        Node::Mul(xs) => {
            let mut acc = Complex64::new(1.0, 0.0);
            for x in xs {
                acc *= evaluate(x, b)?;
            }
            acc
        }
        Node::Neg(a) => -evaluate(a, b)?,
        Node::Div(n, d) => {
            let d = evaluate(d, b)?;
            if d == Complex64::new(0.0, 0.0) {
                return Err(singular("division by zero"));
            }
            evaluate(n, b)? / d
        }
        Node::Pow(base, exp) => {
            let exact_int = exp.as_const().and_then(|n| n.as_integer());
            power(evaluate(base, b)?, evaluate(exp, b)?, exact_int)?
        }
        Node::Func(f, a) => {
            let x = evaluate(a, b)?;
            match f {
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Tan => {
                    if x.cos() == Complex64::new(0.0, 0.0) {
                        return Err(singular("tan at a pole"));
                    }
                    x.tan()
                }
                Func::Sinh => x.sinh(),
                Func::Cosh => x.cosh(),
                Func::Exp => x.exp(),
                Func::Ln => {
                    if is_nonpositive_real(x) {
                        return Err(singular(format!("ln of non-positive real {}", x.re)));
                    }
                    x.ln()
                }
                Func::Sqrt => {
                    if x.im == 0.0 && x.re >= 0.0 {
                        Complex64::new(x.re.sqrt(), 0.0)
                    } else {
                        x.sqrt()
                    }
                }
                Func::Abs => Complex64::new(x.norm(), 0.0),
            }
        }
    };
    finite(v, "result")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn at(pairs: &[(&str, f64)]) -> Bindings {
        pairs.iter().map(|(k, v)| (k.to_string(), Complex64::new(*v, 0.0))).collect()
    }

    #[test]
    fn pythagorean_identity_numerically() {
        let e = parse("sin(theta)^2+cos(theta)^2").unwrap();
        let v = e.eval(&at(&[("theta", 0.7)])).unwrap();
        assert!((v.re - 1.0).abs() <= 1e-15);
        assert_eq!(v.im, 0.0);
    }

    #[test]
    fn reciprocal_at_zero_faults() {
        let e = parse("1/x").unwrap();
        assert!(matches!(e.eval(&at(&[("x", 0.0)])), Err(EvalError::Singular(_))));
        let p = parse("x^(-1)").unwrap();
        assert!(matches!(p.eval(&at(&[("x", 0.0)])), Err(EvalError::Singular(_))));
    }

    #[test]
    fn imaginary_unit_squared() {
        let v = parse("i*i").unwrap().eval(&Bindings::new()).unwrap();
        assert_eq!(v, Complex64::new(-1.0, 0.0));
    }

    #[test]
    fn log_of_nonpositive_faults() {
        let e = parse("ln(x)").unwrap();
        assert!(e.eval(&at(&[("x", -1.0)])).is_err());
        assert!(e.eval(&at(&[("x", 0.0)])).is_err());
        assert!(e.eval(&at(&[("x", 2.0)])).is_ok());
    }

    #[test]
    fn unbound_symbol_is_reported() {
        let e = parse("x + y").unwrap();
        assert_eq!(e.eval(&at(&[("x", 1.0)])), Err(EvalError::Unbound("y".into())));
    }

    #[test]
    fn evaluation_is_bit_stable() {
        let e = parse("exp(sin(x)*cosh(y)) / sqrt(1 + x^2) + tan(y)^(1/3)").unwrap();
        let b = at(&[("x", 0.3), ("y", 0.4)]);
        let first = e.eval(&b).unwrap();
        for _ in 0..10 {
            assert_eq!(e.eval(&b).unwrap(), first);
        }
    }
}
