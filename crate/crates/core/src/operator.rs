//! Linear differential operators of order at most two with symbolic
//! coefficients, acting on wave-function coefficients:
//! `ψ ↦ c0·ψ + c1^i ∂_iψ + c2^{ij} ∂_i∂_jψ`.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::expr::{equivalent, Domain, DomainError, Equivalence, Expr};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OperatorError {
    #[error("composition of orders {left} and {right} exceeds order two")]
    UnsupportedComposition { left: usize, right: usize },
    #[error("operators act on different coordinates: {0:?} vs {1:?}")]
    CoordinateMismatch(Vec<String>, Vec<String>),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

#[derive(Clone, PartialEq)]
pub struct DiffOperator {
    coords: Arc<[String]>,
    c0: Expr,
    c1: Vec<Expr>,
    c2: Vec<Vec<Expr>>,
}

/// Coefficient-wise comparison result with the name of the first mismatch.
#[derive(Clone, Debug, PartialEq)]
pub enum OperatorComparison {
    Equal,
    Different { coefficient: String, witness: String },
    Inconclusive { coefficient: String, reason: String },
}

impl OperatorComparison {
    pub fn is_equal(&self) -> bool {
        matches!(self, OperatorComparison::Equal)
    }
}

impl DiffOperator {
    /// Builds an operator; the second-order block is symmetrized.
    pub fn new(coords: Arc<[String]>, c0: Expr, c1: Vec<Expr>, c2: Vec<Vec<Expr>>) -> Self {
        let n = coords.len();
        assert_eq!(c1.len(), n, "first-order block has wrong length");
        assert!(c2.len() == n && c2.iter().all(|r| r.len() == n), "second-order block has wrong shape");
        let mut sym = c2.clone();
        for i in 0..n {
            sym[i][i] = c2[i][i].simplify();
            for j in (i + 1)..n {
                let (a, b) = (c2[i][j].simplify(), c2[j][i].simplify());
                let s = if a == b { a } else { (Expr::ratio(1, 2) * (a + b)).simplify() };
                sym[i][j] = s.clone();
                sym[j][i] = s;
            }
        }
        DiffOperator { coords, c0: c0.simplify(), c1: c1.iter().map(Expr::simplify).collect(), c2: sym }
    }

    pub fn zero(coords: Arc<[String]>) -> Self {
        let n = coords.len();
        DiffOperator { coords, c0: Expr::zero(), c1: vec![Expr::zero(); n], c2: vec![vec![Expr::zero(); n]; n] }
    }

    /// Multiplication by `f`.
    pub fn multiplication(coords: Arc<[String]>, f: Expr) -> Self {
        let mut op = DiffOperator::zero(coords);
        op.c0 = f.simplify();
        op
    }

    pub fn identity(coords: Arc<[String]>) -> Self {
        DiffOperator::multiplication(coords, Expr::one())
    }

    /// The derivation `ψ ↦ v^i ∂_iψ`.
    pub fn derivation(coords: Arc<[String]>, v: &[Expr]) -> Self {
        let n = coords.len();
        DiffOperator::new(coords, Expr::zero(), v.to_vec(), vec![vec![Expr::zero(); n]; n])
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &Arc<[String]> {
        &self.coords
    }

    pub fn c0(&self) -> &Expr {
        &self.c0
    }

    pub fn c1(&self) -> &[Expr] {
        &self.c1
    }

    pub fn c2(&self) -> &[Vec<Expr>] {
        &self.c2
    }

    /// Highest order whose coefficient block is not structurally zero.
    pub fn order(&self) -> usize {
        if self.c2.iter().flatten().any(|e| !e.is_zero()) {
            2
        } else if self.c1.iter().any(|e| !e.is_zero()) {
            1
        } else {
            0
        }
    }

    fn check_coords(&self, other: &Self) -> Result<(), OperatorError> {
        if self.coords == other.coords {
            Ok(())
        } else {
            Err(OperatorError::CoordinateMismatch(self.coords.to_vec(), other.coords.to_vec()))
        }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&Expr, &Expr) -> Expr) -> Self {
        assert_eq!(self.coords, other.coords, "operators on different charts");
        DiffOperator {
            coords: self.coords.clone(),
            c0: f(&self.c0, &other.c0).simplify(),
            c1: self.c1.iter().zip(&other.c1).map(|(a, b)| f(a, b).simplify()).collect(),
            c2: self
                .c2
                .iter()
                .zip(&other.c2)
                .map(|(ra, rb)| ra.iter().zip(rb).map(|(a, b)| f(a, b).simplify()).collect())
                .collect(),
        }
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> Self {
        DiffOperator {
            coords: self.coords.clone(),
            c0: f(&self.c0).simplify(),
            c1: self.c1.iter().map(|a| f(a).simplify()).collect(),
            c2: self.c2.iter().map(|r| r.iter().map(|a| f(a).simplify()).collect()).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    /// Left multiplication by a function (or constant).
    pub fn scale(&self, s: &Expr) -> Self {
        self.map(|a| s * a)
    }

    /// Adjusts the zeroth-order coefficient by `f`.
    pub fn plus_multiplication(&self, f: &Expr) -> Self {
        let mut out = self.clone();
        out.c0 = (&self.c0 + f).simplify();
        out
    }

    fn d(&self, e: &Expr, i: usize) -> Expr {
        e.diff(&self.coords[i])
    }

    /// Symbolic action on a function.
    pub fn apply(&self, psi: &Expr) -> Expr {
        let n = self.dim();
        let mut terms = vec![&self.c0 * psi];
        for i in 0..n {
            let di = self.d(psi, i);
            if !self.c1[i].is_zero() {
                terms.push(&self.c1[i] * &di);
            }
            for j in 0..n {
                if !self.c2[i][j].is_zero() {
                    terms.push(&self.c2[i][j] * self.d(&di, j));
                }
            }
        }
        Expr::add(terms).simplify()
    }

    /// `self ∘ other` by Leibniz expansion, restricted to total order ≤ 2.
    pub fn compose(&self, other: &Self) -> Result<Self, OperatorError> {
        self.check_coords(other)?;
        let (lo, ro) = (self.order(), other.order());
        if lo + ro > 2 {
            return Err(OperatorError::UnsupportedComposition { left: lo, right: ro });
        }
        let n = self.dim();
        let (p0, p1, p2) = (&self.c0, &self.c1, &self.c2);
        let (q0, q1, q2) = (&other.c0, &other.c1, &other.c2);

        // Zeroth order: p acting on the function q0.
        let mut c0 = vec![p0 * q0];
        for i in 0..n {
            let dq0 = self.d(q0, i);
            c0.push(&p1[i] * &dq0);
            for j in 0..n {
                if !p2[i][j].is_zero() {
                    c0.push(&p2[i][j] * self.d(&dq0, j));
                }
            }
        }

        let mut c1 = Vec::with_capacity(n);
        for k in 0..n {
            let mut t = vec![p0 * &q1[k], &p1[k] * q0];
            for i in 0..n {
                if !p1[i].is_zero() {
                    t.push(&p1[i] * self.d(&q1[k], i));
                }
                if !p2[i][k].is_zero() {
                    t.push(Expr::int(2) * &p2[i][k] * self.d(q0, i));
                }
            }
            c1.push(Expr::add(t));
        }

        let mut c2 = vec![vec![Expr::zero(); n]; n];
        for k in 0..n {
            for l in 0..n {
                c2[k][l] = Expr::add(vec![
                    p0 * &q2[k][l],
                    &p2[k][l] * q0,
                    Expr::ratio(1, 2) * (&p1[k] * &q1[l] + &p1[l] * &q1[k]),
                ]);
            }
        }
        Ok(DiffOperator::new(self.coords.clone(), Expr::add(c0), c1, c2))
    }

    /// `[self, other] = self∘other − other∘self`.
    pub fn commutator(&self, other: &Self) -> Result<Self, OperatorError> {
        Ok(self.compose(other)?.sub(&other.compose(self)?))
    }

    /// Coefficient-wise equivalence using the randomized oracle.
    pub fn compare(&self, other: &Self, dom: &Domain, seed: u64) -> Result<OperatorComparison, OperatorError> {
        self.check_coords(other)?;
        for (name, a, b) in self.labelled().into_iter().zip(other.labelled()).map(|((n, a), (_, b))| (n, a, b)) {
            match equivalent(a, b, dom, seed)? {
                Equivalence::Equivalent => {}
                r @ Equivalence::Different { .. } => {
                    return Ok(OperatorComparison::Different {
                        coefficient: name,
                        witness: format!("{a} vs {b} {}", r.witness().unwrap_or_default()),
                    })
                }
                Equivalence::Inconclusive { reason } => {
                    return Ok(OperatorComparison::Inconclusive { coefficient: name, reason })
                }
            }
        }
        Ok(OperatorComparison::Equal)
    }

    /// Every coefficient with a label such as `c1[theta]`.
    pub fn labelled(&self) -> Vec<(String, &Expr)> {
        let mut out = vec![("c0".to_string(), &self.c0)];
        for (i, c) in self.c1.iter().enumerate() {
            out.push((format!("c1[{}]", self.coords[i]), c));
        }
        for (i, row) in self.c2.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                if j >= i {
                    out.push((format!("c2[{},{}]", self.coords[i], self.coords[j]), c));
                }
            }
        }
        out
    }

    pub fn to_record(&self) -> OperatorRecord {
        OperatorRecord {
            coordinates: self.coords.to_vec(),
            order: self.order(),
            c0: self.c0.to_string(),
            c1: self.c1.iter().map(|e| e.to_string()).collect(),
            c2: self.c2.iter().map(|r| r.iter().map(|e| e.to_string()).collect()).collect(),
        }
    }
}

impl fmt::Debug for DiffOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiffOperator")
            .field("coords", &self.coords)
            .field("c0", &self.c0)
            .field("c1", &self.c1)
            .field("c2", &self.c2)
            .finish()
    }
}

/// Human-readable form such as `(-i)*d[x] + (x)`.
impl fmt::Display for DiffOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (i, row) in self.c2.iter().enumerate() {
            for (j, c) in row.iter().enumerate().skip(i) {
                if !c.is_zero() {
                    let k = if i == j { c.clone() } else { (Expr::int(2) * c).simplify() };
                    parts.push(format!("({k})*d[{}]d[{}]", self.coords[i], self.coords[j]));
                }
            }
        }
        for (i, c) in self.c1.iter().enumerate() {
            if !c.is_zero() {
                parts.push(format!("({c})*d[{}]", self.coords[i]));
            }
        }
        if !self.c0.is_zero() || parts.is_empty() {
            parts.push(format!("({})", self.c0));
        }
        write!(f, "{}", parts.join(" + "))
    }
}

/// Serialized form of an operator: coefficients as expression strings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperatorRecord {
    pub coordinates: Vec<String>,
    pub order: usize,
    pub c0: String,
    pub c1: Vec<String>,
    pub c2: Vec<Vec<String>>,
}
