//! Tensor calculus on a coordinate chart.
//!
//! A [`MetricChart`] owns a symmetric metric matrix of expressions and lazily
//! derives the inverse metric, the volume density `√|g|`, the Christoffel
//! symbols of the Levi-Civita connection and the scalar curvature. Half-forms
//! are handled through their scalar coefficient relative to either the flat
//! basis `√(dx¹∧…∧dxⁿ)` or the metric half-form `√ν_g = |g|^{1/4}√(dx¹∧…∧dxⁿ)`.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{equivalent, Bindings, Domain, DomainError, Expr, Interval};
use crate::operator::DiffOperator;

/// Distance kept from coordinate singularities (poles) when sampling.
pub const POLE_MARGIN: f64 = 1e-3;
/// Sample points used to certify positive-definiteness.
pub const PD_SAMPLES: usize = 32;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("metric must be a non-empty square matrix matching {coords} coordinates")]
    Shape { coords: usize },
    #[error("metric is not symmetric at ({row}, {col})")]
    Asymmetric { row: usize, col: usize },
    #[error("metric is not positive-definite at {point}")]
    NotPositiveDefinite { point: String },
    #[error("metric entry ({row}, {col}) is not real at {point}")]
    NotReal { row: usize, col: usize, point: String },
    #[error("metric could not be evaluated: {0}")]
    Evaluation(String),
    #[error("duplicate or reserved coordinate name `{0}`")]
    BadCoordinate(String),
    #[error("expression mentions unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("vector field has {got} components, chart has dimension {want}")]
    Dimension { got: usize, want: usize },
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// How an axis behaves at the ends of its interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Open interval; discretized with homogeneous Dirichlet conditions.
    Open,
    /// The interval is one period.
    Periodic,
    /// Both ends are coordinate singularities (e.g. the poles of a sphere).
    Polar,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coordinate {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub boundary: Boundary,
}

impl Coordinate {
    pub fn new(name: &str, lo: f64, hi: f64, boundary: Boundary) -> Self {
        Coordinate { name: name.to_string(), lo, hi, boundary }
    }

    fn sampling_interval(&self) -> Interval {
        match self.boundary {
            Boundary::Open => Interval::open(self.lo, self.hi),
            Boundary::Periodic => Interval::periodic(self.lo, self.hi),
            Boundary::Polar => Interval::open(self.lo + POLE_MARGIN, self.hi - POLE_MARGIN),
        }
    }
}

/// Christoffel symbols `Γ^k_{ij}` indexed as `[k][i][j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    data: Vec<Vec<Vec<Expr>>>,
}

impl Christoffel {
    pub fn get(&self, k: usize, i: usize, j: usize) -> &Expr {
        &self.data[k][i][j]
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    /// Contraction `Γ^β_{αβ}`.
    pub fn trace(&self, alpha: usize) -> Expr {
        Expr::add((0..self.dim()).map(|b| self.data[b][alpha][b].clone()).collect()).simplify()
    }
}

#[derive(Default)]
struct Cache {
    determinant: OnceLock<Expr>,
    inverse: OnceLock<Vec<Vec<Expr>>>,
    volume: OnceLock<Expr>,
    halfform: OnceLock<Expr>,
    christoffel: OnceLock<Christoffel>,
    scalar_curvature: OnceLock<Expr>,
}

/// A coordinate chart with a Riemannian metric.
pub struct MetricChart {
    coords: Vec<Coordinate>,
    names: Arc<[String]>,
    metric: Vec<Vec<Expr>>,
    parameters: BTreeMap<String, f64>,
    domain: Domain,
    cache: Cache,
}

impl std::fmt::Debug for MetricChart {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MetricChart")
            .field("coords", &self.coords)
            .field("metric", &self.metric)
            .field("parameters", &self.parameters)
            .finish()
    }
}

/// Sampling interval for a parameter kept symbolic.
pub fn parameter_interval(value: f64) -> Interval {
    if value > 0.0 {
        Interval::open(0.5 * value, 1.5 * value)
    } else {
        Interval::open(value - 1.0, value + 1.0)
    }
}

fn leading_minors_positive(m: &[Vec<f64>]) -> bool {
    let n = m.len();
    // Gaussian elimination without pivoting: all pivots positive iff all
    // leading principal minors are positive.
    let mut a = m.to_vec();
    for k in 0..n {
        if !(a[k][k] > 0.0) {
            return false;
        }
        for i in (k + 1)..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
        }
    }
    true
}

fn symbolic_det(m: &[Vec<Expr>]) -> Expr {
    let n = m.len();
    match n {
        1 => m[0][0].clone(),
        2 => (&m[0][0] * &m[1][1] - &m[0][1] * &m[1][0]).simplify(),
        _ => {
            let mut terms = Vec::new();
            for j in 0..n {
                if m[0][j].is_zero() {
                    continue;
                }
                let minor: Vec<Vec<Expr>> = m[1..]
                    .iter()
                    .map(|row| row.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, e)| e.clone()).collect())
                    .collect();
                let sign = if j % 2 == 0 { Expr::one() } else { Expr::int(-1) };
                terms.push(sign * &m[0][j] * symbolic_det(&minor));
            }
            Expr::add(terms).simplify()
        }
    }
}

fn cofactor(m: &[Vec<Expr>], r: usize, c: usize) -> Expr {
    let minor: Vec<Vec<Expr>> = m
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != r)
        .map(|(_, row)| row.iter().enumerate().filter(|(j, _)| *j != c).map(|(_, e)| e.clone()).collect())
        .collect();
    let det = if minor.is_empty() { Expr::one() } else { symbolic_det(&minor) };
    if (r + c) % 2 == 0 {
        det
    } else {
        (-det).simplify()
    }
}

impl MetricChart {
    pub fn new(coords: Vec<Coordinate>, metric: Vec<Vec<Expr>>) -> Result<Self, GeometryError> {
        Self::with_parameters(coords, metric, BTreeMap::new())
    }

    /// `parameters` are symbols that stay symbolic in expressions; their
    /// values are used for numerical work and their sampling intervals
    /// surround those values.
    pub fn with_parameters(
        coords: Vec<Coordinate>,
        metric: Vec<Vec<Expr>>,
        parameters: BTreeMap<String, f64>,
    ) -> Result<Self, GeometryError> {
        let n = coords.len();
        if n == 0 || metric.len() != n || metric.iter().any(|r| r.len() != n) {
            return Err(GeometryError::Shape { coords: n });
        }
        let mut seen = BTreeSet::new();
        for c in &coords {
            if matches!(c.name.as_str(), "i" | "pi") || !seen.insert(c.name.clone()) {
                return Err(GeometryError::BadCoordinate(c.name.clone()));
            }
        }
        let metric: Vec<Vec<Expr>> = metric.iter().map(|r| r.iter().map(Expr::simplify).collect()).collect();
        for i in 0..n {
            for j in (i + 1)..n {
                if metric[i][j] != metric[j][i] {
                    return Err(GeometryError::Asymmetric { row: i, col: j });
                }
            }
        }
        let mut domain = Domain::new();
        for c in &coords {
            domain.insert(&c.name, c.sampling_interval());
        }
        for (p, v) in &parameters {
            domain.insert(p, parameter_interval(*v));
        }
        domain.validate()?;
        for e in metric.iter().flatten() {
            domain.covers(e).map_err(|err| match err {
                DomainError::Uncovered(s) => GeometryError::UnknownSymbol(s),
                other => other.into(),
            })?;
        }
        let names: Arc<[String]> = coords.iter().map(|c| c.name.clone()).collect::<Vec<_>>().into();
        let chart = MetricChart { coords, names, metric, parameters, domain, cache: Cache::default() };
        chart.check_positive_definite()?;
        Ok(chart)
    }

    fn check_positive_definite(&self) -> Result<(), GeometryError> {
        let n = self.dim();
        let mut rng = Domain::rng(0x5eed_ca11);
        for _ in 0..PD_SAMPLES {
            let point = self.domain.sample(&mut rng);
            let mut m = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in 0..n {
                    let v = self.metric[i][j].eval(&point).map_err(|e| GeometryError::Evaluation(e.to_string()))?;
                    if v.im.abs() > 1e-12 * (1.0 + v.re.abs()) {
                        return Err(GeometryError::NotReal { row: i, col: j, point: describe(&point) });
                    }
                    m[i][j] = v.re;
                }
            }
            if !leading_minors_positive(&m) {
                return Err(GeometryError::NotPositiveDefinite { point: describe(&point) });
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coordinates(&self) -> &[Coordinate] {
        &self.coords
    }

    pub fn names(&self) -> &Arc<[String]> {
        &self.names
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn metric(&self) -> &[Vec<Expr>] {
        &self.metric
    }

    pub fn parameters(&self) -> &BTreeMap<String, f64> {
        &self.parameters
    }

    /// Sampling domain for the equivalence oracle (coordinates and parameters).
    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// Numeric values of the chart parameters.
    pub fn parameter_bindings(&self) -> Bindings {
        self.parameters.iter().map(|(k, v)| (k.clone(), Complex64::new(*v, 0.0))).collect()
    }

    /// Bindings for a coordinate point plus all parameters.
    pub fn bindings_at(&self, point: &[f64]) -> Bindings {
        let mut b = self.parameter_bindings();
        for (c, x) in self.coords.iter().zip(point) {
            b.insert(c.name.clone(), Complex64::new(*x, 0.0));
        }
        b
    }

    pub fn d(&self, e: &Expr, i: usize) -> Expr {
        e.diff(&self.names[i])
    }

    /// `det g`.
    pub fn determinant(&self) -> &Expr {
        self.cache.determinant.get_or_init(|| symbolic_det(&self.metric))
    }

    /// `g^{ij}`.
    pub fn inverse_metric(&self) -> &[Vec<Expr>] {
        self.cache.inverse.get_or_init(|| {
            let n = self.dim();
            let inv_det = self.determinant().clone().recip();
            (0..n)
                .map(|i| (0..n).map(|j| (&inv_det * cofactor(&self.metric, j, i)).simplify()).collect())
                .collect()
        })
    }

    /// Volume density `√|g|`, the coefficient of `ν_g` in `dx¹∧…∧dxⁿ`.
    pub fn volume_density(&self) -> &Expr {
        self.cache
            .volume
            .get_or_init(|| Expr::pow(self.determinant().clone(), Expr::ratio(1, 2)).simplify())
    }

    /// `|g|^{1/4}`, the coefficient of `√ν_g` in the flat half-form basis.
    pub fn halfform_density(&self) -> &Expr {
        self.cache
            .halfform
            .get_or_init(|| Expr::pow(self.determinant().clone(), Expr::ratio(1, 4)).simplify())
    }

    /// Levi-Civita Christoffel symbols
    /// `Γ^k_{ij} = ½ g^{kl}(∂_i g_{jl} + ∂_j g_{il} − ∂_l g_{ij})`.
    pub fn christoffel(&self) -> &Christoffel {
        self.cache.christoffel.get_or_init(|| {
            let n = self.dim();
            let dg: Vec<Vec<Vec<Expr>>> = (0..n)
                .map(|l| (0..n).map(|i| (0..n).map(|j| self.d(&self.metric[i][j], l)).collect()).collect())
                .collect();
            let ginv = self.inverse_metric();
            let mut data = vec![vec![vec![Expr::zero(); n]; n]; n];
            for k in 0..n {
                for i in 0..n {
                    for j in i..n {
                        let mut terms = Vec::new();
                        for l in 0..n {
                            if ginv[k][l].is_zero() {
                                continue;
                            }
                            let bracket = &dg[i][j][l] + &dg[j][i][l] - &dg[l][i][j];
                            terms.push(&ginv[k][l] * bracket);
                        }
                        let g = (Expr::ratio(1, 2) * Expr::add(terms)).simplify();
                        data[k][i][j] = g.clone();
                        data[k][j][i] = g;
                    }
                }
            }
            Christoffel { data }
        })
    }

    /// Scalar curvature
    /// `r_g = g^{ij}(∂_k Γ^k_{ij} − ∂_i Γ^k_{kj} + Γ^k_{kl}Γ^l_{ij} − Γ^k_{il}Γ^l_{kj})`,
    /// positive on the round sphere.
    pub fn scalar_curvature(&self) -> &Expr {
        self.cache.scalar_curvature.get_or_init(|| {
            let n = self.dim();
            let gam = self.christoffel();
            let ginv = self.inverse_metric();
            let mut terms = Vec::new();
            for i in 0..n {
                for j in 0..n {
                    if ginv[i][j].is_zero() {
                        continue;
                    }
                    let mut ricci = Vec::new();
                    for k in 0..n {
                        ricci.push(self.d(gam.get(k, i, j), k));
                        ricci.push(-self.d(gam.get(k, k, j), i));
                        for l in 0..n {
                            ricci.push(gam.get(k, k, l) * gam.get(l, i, j));
                            ricci.push(-(gam.get(k, i, l) * gam.get(l, k, j)));
                        }
                    }
                    terms.push(&ginv[i][j] * Expr::add(ricci).simplify());
                }
            }
            Expr::add(terms).simplify()
        })
    }

    /// Checks that every symbol in `e` is a coordinate or parameter.
    pub fn check_symbols(&self, e: &Expr) -> Result<(), GeometryError> {
        self.domain.covers(e).map_err(|err| match err {
            DomainError::Uncovered(s) => GeometryError::UnknownSymbol(s),
            other => other.into(),
        })
    }

    /// Whether `a ≡ b` on the chart domain.
    pub fn same(&self, a: &Expr, b: &Expr, seed: u64) -> bool {
        equivalent(a, b, &self.domain, seed).is_ok_and(|r| r.is_equivalent())
    }
}

fn describe(b: &Bindings) -> String {
    let parts: Vec<String> = b.iter().map(|(k, v)| format!("{k}={:.6}", v.re)).collect();
    parts.join(", ")
}

/// A vector field `X = X^i ∂_i` on the chart.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub components: Vec<Expr>,
}

impl VectorField {
    pub fn new(components: Vec<Expr>) -> Self {
        VectorField { components: components.iter().map(Expr::simplify).collect() }
    }

    pub fn zero(n: usize) -> Self {
        VectorField { components: vec![Expr::zero(); n] }
    }

    /// Coordinate field `∂_i`.
    pub fn coordinate(n: usize, i: usize) -> Self {
        let mut v = VectorField::zero(n);
        v.components[i] = Expr::one();
        v
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(Expr::is_zero)
    }

    pub fn check(&self, chart: &MetricChart) -> Result<(), GeometryError> {
        if self.dim() != chart.dim() {
            return Err(GeometryError::Dimension { got: self.dim(), want: chart.dim() });
        }
        self.components.iter().try_for_each(|c| chart.check_symbols(c))
    }

    /// Directional derivative `X(f) = X^i ∂_i f`.
    pub fn apply(&self, chart: &MetricChart, f: &Expr) -> Expr {
        let terms = self
            .components
            .iter()
            .enumerate()
            .filter(|(_, x)| !x.is_zero())
            .map(|(i, x)| x * chart.d(f, i))
            .collect();
        Expr::add(terms).simplify()
    }

    /// Lie bracket `[X, Y]^i = X(Y^i) − Y(X^i)`.
    pub fn bracket(&self, other: &Self, chart: &MetricChart) -> Self {
        VectorField::new(
            (0..self.dim())
                .map(|i| self.apply(chart, &other.components[i]) - other.apply(chart, &self.components[i]))
                .collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        VectorField::new(self.components.iter().zip(&other.components).map(|(a, b)| a + b).collect())
    }

    pub fn scale(&self, s: &Expr) -> Self {
        VectorField::new(self.components.iter().map(|a| s * a).collect())
    }

    pub fn neg(&self) -> Self {
        self.scale(&Expr::int(-1))
    }
}

/// A 1-form `A = A_i dx^i`.
#[derive(Debug, Clone, PartialEq)]
pub struct OneForm {
    pub components: Vec<Expr>,
}

impl OneForm {
    pub fn new(components: Vec<Expr>) -> Self {
        OneForm { components: components.iter().map(Expr::simplify).collect() }
    }

    pub fn zero(n: usize) -> Self {
        OneForm { components: vec![Expr::zero(); n] }
    }

    /// Exact form `dχ`.
    pub fn exact(chart: &MetricChart, chi: &Expr) -> Self {
        OneForm::new((0..chart.dim()).map(|i| chart.d(chi, i)).collect())
    }

    /// `A(X) = A_i X^i`.
    pub fn contract(&self, x: &VectorField) -> Expr {
        Expr::add(self.components.iter().zip(&x.components).map(|(a, b)| a * b).collect()).simplify()
    }

    /// Components `(dA)_{ij} = ∂_i A_j − ∂_j A_i`.
    pub fn exterior_derivative(&self, chart: &MetricChart) -> TwoForm {
        let n = chart.dim();
        let mut m = vec![vec![Expr::zero(); n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = (chart.d(&self.components[j], i) - chart.d(&self.components[i], j)).simplify();
                m[j][i] = (-&v).simplify();
                m[i][j] = v;
            }
        }
        TwoForm { components: m }
    }

    pub fn add(&self, other: &Self) -> Self {
        OneForm::new(self.components.iter().zip(&other.components).map(|(a, b)| a + b).collect())
    }
}

/// An antisymmetric 2-form `B_{ij}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoForm {
    pub components: Vec<Vec<Expr>>,
}

impl TwoForm {
    /// `B(X, Y) = B_{ij} X^i Y^j`.
    pub fn eval(&self, x: &VectorField, y: &VectorField) -> Expr {
        let mut terms = Vec::new();
        for (i, row) in self.components.iter().enumerate() {
            for (j, b) in row.iter().enumerate() {
                if !b.is_zero() {
                    terms.push(b * &x.components[i] * &y.components[j]);
                }
            }
        }
        Expr::add(terms).simplify()
    }

    /// Whether `dB = 0` on the chart (always true in dimension ≤ 2).
    pub fn is_closed(&self, chart: &MetricChart, seed: u64) -> bool {
        let n = chart.dim();
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    let db = chart.d(&self.components[j][k], i) + chart.d(&self.components[k][i], j)
                        + chart.d(&self.components[i][j], k);
                    if !chart.same(&db, &Expr::zero(), seed) {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// Reference basis of a half-form coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum HalfFormBasis {
    /// `√(dx¹∧…∧dxⁿ)`.
    Flat,
    /// `√ν_g`.
    Metric,
}

/// A half-form `f·√b` stored as its coefficient and declared basis.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfFormCoeff {
    pub coeff: Expr,
    pub basis: HalfFormBasis,
}

impl HalfFormCoeff {
    pub fn flat(coeff: Expr) -> Self {
        HalfFormCoeff { coeff: coeff.simplify(), basis: HalfFormBasis::Flat }
    }

    pub fn metric(coeff: Expr) -> Self {
        HalfFormCoeff { coeff: coeff.simplify(), basis: HalfFormBasis::Metric }
    }

    /// The distinguished half-form `√ν_g`.
    pub fn metric_halfform() -> Self {
        HalfFormCoeff::metric(Expr::one())
    }

    pub fn to_flat(&self, chart: &MetricChart) -> Self {
        match self.basis {
            HalfFormBasis::Flat => self.clone(),
            HalfFormBasis::Metric => HalfFormCoeff::flat(&self.coeff * chart.halfform_density()),
        }
    }

    pub fn to_metric(&self, chart: &MetricChart) -> Self {
        match self.basis {
            HalfFormBasis::Metric => self.clone(),
            HalfFormBasis::Flat => HalfFormCoeff::metric(&self.coeff / chart.halfform_density()),
        }
    }

    pub fn in_basis(&self, chart: &MetricChart, basis: HalfFormBasis) -> Self {
        match basis {
            HalfFormBasis::Flat => self.to_flat(chart),
            HalfFormBasis::Metric => self.to_metric(chart),
        }
    }
}

/// Riemannian divergence `div_g X = ∂_i(X^i√|g|)/√|g|`.
pub fn divergence(chart: &MetricChart, x: &VectorField) -> Expr {
    let vol = chart.volume_density();
    let flux: Vec<Expr> = x
        .components
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(i, c)| chart.d(&(c * vol).simplify(), i))
        .collect();
    (Expr::add(flux) / vol).simplify()
}

/// Flat-coordinate divergence `∂_i X^i`, the factor in `L_X(dx¹∧…∧dxⁿ)`.
fn coordinate_divergence(chart: &MetricChart, x: &VectorField) -> Expr {
    Expr::add(x.components.iter().enumerate().map(|(i, c)| chart.d(c, i)).collect()).simplify()
}

/// Lie derivative of a half-form along `X`: `L_X(f√b) = (X f + ½(L_X b)_0 f)√b`
/// with `(L_X b)_0 = ∂_i X^i` for the flat basis and `div_g X` for `b = ν_g`.
/// The result is expressed in the basis of the input.
pub fn halfform_lie(chart: &MetricChart, x: &VectorField, nu: &HalfFormCoeff) -> HalfFormCoeff {
    let density_rate = match nu.basis {
        HalfFormBasis::Flat => coordinate_divergence(chart, x),
        HalfFormBasis::Metric => divergence(chart, x),
    };
    let coeff = x.apply(chart, &nu.coeff) + Expr::ratio(1, 2) * density_rate * &nu.coeff;
    HalfFormCoeff { coeff: coeff.simplify(), basis: nu.basis }
}

/// Levi-Civita covariant derivative of a half-form,
/// `∇_X(f√dx) = (X f − ½ X^α Γ^β_{αβ} f)√dx`, returned in the input's basis.
pub fn halfform_covderiv(chart: &MetricChart, x: &VectorField, nu: &HalfFormCoeff) -> HalfFormCoeff {
    let flat = nu.to_flat(chart);
    let gam = chart.christoffel();
    let trace: Vec<Expr> = x
        .components
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(a, c)| c * gam.trace(a))
        .collect();
    let coeff = x.apply(chart, &flat.coeff) - Expr::ratio(1, 2) * Expr::add(trace) * &flat.coeff;
    HalfFormCoeff::flat(coeff).in_basis(chart, nu.basis)
}

/// Laplace–Beltrami operator, or the Bochner Laplacian of `∇ = d − (i/ħ)A`
/// when a potential is given: `g^{ij}(∇_i∇_j − Γ^k_{ij}∇_k)`.
pub fn laplace_beltrami(chart: &MetricChart, potential: Option<&OneForm>, hbar: f64) -> DiffOperator {
    let n = chart.dim();
    let ginv = chart.inverse_metric();
    let gam = chart.christoffel();
    let c2: Vec<Vec<Expr>> = ginv.to_vec();
    let Some(a) = potential else {
        // Divergence form (1/√|g|)∂_i(√|g| g^{ij}∂_j).
        let vol = chart.volume_density();
        let c1 = (0..n)
            .map(|j| {
                let flux: Vec<Expr> = (0..n)
                    .filter(|i| !ginv[*i][j].is_zero())
                    .map(|i| chart.d(&(vol * &ginv[i][j]).simplify(), i))
                    .collect();
                (Expr::add(flux) / vol).simplify()
            })
            .collect();
        return DiffOperator::new(chart.names().clone(), Expr::zero(), c1, c2);
    };
    let i_over_hbar = Expr::i() / Expr::real(hbar);
    let mut c1 = Vec::with_capacity(n);
    for k in 0..n {
        let mut t = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if !ginv[i][j].is_zero() {
                    t.push(-(&ginv[i][j] * gam.get(k, i, j)));
                }
            }
            if !ginv[i][k].is_zero() {
                t.push(Expr::int(-2) * &i_over_hbar * &ginv[i][k] * &a.components[i]);
            }
        }
        c1.push(Expr::add(t));
    }
    let mut c0 = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if ginv[i][j].is_zero() {
                continue;
            }
            let gamma_a: Vec<Expr> = (0..n).map(|k| gam.get(k, i, j) * &a.components[k]).collect();
            c0.push(
                &ginv[i][j]
                    * (-(&i_over_hbar * chart.d(&a.components[j], i))
                        - &a.components[i] * &a.components[j] / Expr::real(hbar * hbar)
                        + &i_over_hbar * Expr::add(gamma_a)),
            );
        }
    }
    DiffOperator::new(chart.names().clone(), Expr::add(c0), c1, c2)
}
