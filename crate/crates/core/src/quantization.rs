//! Quantizable observables on `T*Q` and their quantum operators.
//!
//! An observable affine in the momenta, `f′ = f(q) + X^i(q) p_i`, is stored as
//! the pair `(f, X)`. Operators act on the coefficient `ψ⁰` of a wave function
//! `ψ = ψ⁰·√ν_g` on a trivial line bundle with connection `∇ = d − (i/ħ)A`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_rational::Rational64;
use num_traits::ToPrimitive;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::expr::{parse, Domain, Expr, Interval, Number, ParseError};
use crate::geometry::{
    divergence, halfform_covderiv, halfform_lie, laplace_beltrami, GeometryError, HalfFormCoeff, MetricChart,
    OneForm, TwoForm, VectorField,
};
use crate::operator::DiffOperator;

/// Sampling interval for momentum symbols when testing affinity.
pub const MOMENTUM_RANGE: (f64, f64) = (-2.0, 2.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantizationError {
    #[error("cannot parse observable: {0}")]
    Parse(#[from] ParseError),
    #[error("observable is not quantizable: it is not affine in the momenta ({witness})")]
    NotQuantizable { witness: String },
    #[error("observable mentions unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("observable could not be classified: {0}")]
    Inconclusive(String),
    #[error("invalid scheme `{0}`: expected std, mod or k=<rational>")]
    Scheme(String),
    #[error("hbar must be a positive finite number, got {0}")]
    Hbar(f64),
    #[error("magnetic potential has {got} components, chart has dimension {want}")]
    PotentialDimension { got: usize, want: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// `f′ = f + X^i p_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    pub base: Expr,
    pub field: VectorField,
}

impl Observable {
    pub fn new(base: Expr, field: VectorField) -> Self {
        Observable { base: base.simplify(), field }
    }

    /// A function of position only.
    pub fn function(n: usize, f: Expr) -> Self {
        Observable::new(f, VectorField::zero(n))
    }

    /// `X^i p_i` for a vector field `X`.
    pub fn momentum(field: VectorField) -> Self {
        Observable::new(Expr::zero(), field)
    }

    pub fn add(&self, other: &Self) -> Self {
        Observable::new(&self.base + &other.base, self.field.add(&other.field))
    }

    pub fn scale(&self, s: &Expr) -> Self {
        Observable::new(s * &self.base, self.field.scale(s))
    }

    /// The phase-space function `f + X^i p_i` with the chart's momentum symbols.
    pub fn to_expr(&self, chart: &MetricChart) -> Expr {
        let moms = momentum_symbols(chart);
        let mut terms = vec![self.base.clone()];
        for (x, p) in self.field.components.iter().zip(&moms) {
            terms.push(x * Expr::sym(p));
        }
        Expr::add(terms).simplify()
    }
}

/// Momentum symbol conjugate to each coordinate: `p_<name>`, or `p<k>` when
/// the coordinate is named `q<k>`.
pub fn momentum_symbols(chart: &MetricChart) -> Vec<String> {
    chart
        .names()
        .iter()
        .map(|c| match c.strip_prefix('q') {
            Some(k) if !k.is_empty() && k.bytes().all(|b| b.is_ascii_digit()) => format!("p{k}"),
            _ => format!("p_{c}"),
        })
        .collect()
}

/// Splits an expression in positions and momenta into `(f, X)`.
///
/// The expression is accepted iff every second momentum derivative vanishes
/// identically on the chart domain with momenta in [`MOMENTUM_RANGE`].
pub fn parse_observable(text: &str, chart: &MetricChart) -> Result<Observable, QuantizationError> {
    let e = parse(text)?.simplify();
    observable_from_expr(&e, chart)
}

pub fn observable_from_expr(e: &Expr, chart: &MetricChart) -> Result<Observable, QuantizationError> {
    let moms = momentum_symbols(chart);
    let mut dom = chart.domain().clone();
    for p in &moms {
        dom.insert(p, Interval::open(MOMENTUM_RANGE.0, MOMENTUM_RANGE.1));
    }
    if let Some(s) = e.free_symbols().into_iter().find(|s| dom.get(s).is_none()) {
        return Err(QuantizationError::UnknownSymbol(s));
    }
    let zero = Expr::zero();
    for (a, pa) in moms.iter().enumerate() {
        let da = e.diff(pa);
        for pb in &moms[a..] {
            let dab = da.diff(pb);
            match crate::expr::equivalent(&dab, &zero, &dom, 0x0b5e).map_err(GeometryError::from)? {
                crate::expr::Equivalence::Equivalent => {}
                crate::expr::Equivalence::Different { .. } => {
                    return Err(QuantizationError::NotQuantizable {
                        witness: format!("d^2/d{pa}d{pb} = {dab}"),
                    })
                }
                crate::expr::Equivalence::Inconclusive { reason } => {
                    return Err(QuantizationError::Inconclusive(reason))
                }
            }
        }
    }
    let at_zero: BTreeMap<String, Expr> = moms.iter().map(|p| (p.clone(), Expr::zero())).collect();
    let base = e.substitute(&at_zero).simplify();
    let field = VectorField::new(moms.iter().map(|p| e.diff(p).substitute(&at_zero)).collect());
    Ok(Observable::new(base, field))
}

/// Quantization scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Half-forms transported by the Lie derivative; energy factor `k = 1/12`.
    Standard,
    /// Half-forms transported by the Levi-Civita connection; `k = 0`.
    Modified,
    /// Energy operator with an arbitrary factor `k`; observables are
    /// quantized as in the modified scheme.
    K(Rational64),
}

impl Scheme {
    /// Factor in front of `ħ² r_g` in the energy operator.
    pub fn k(&self) -> Rational64 {
        match self {
            Scheme::Standard => Rational64::new(1, 12),
            Scheme::Modified => Rational64::new(0, 1),
            Scheme::K(k) => *k,
        }
    }

    pub fn uses_lie_derivative(&self) -> bool {
        matches!(self, Scheme::Standard)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Standard => write!(f, "std"),
            Scheme::Modified => write!(f, "mod"),
            Scheme::K(k) => write!(f, "k={k}"),
        }
    }
}

impl FromStr for Scheme {
    type Err = QuantizationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || QuantizationError::Scheme(s.to_string());
        match s.trim() {
            "std" | "standard" => Ok(Scheme::Standard),
            "mod" | "modified" => Ok(Scheme::Modified),
            other => {
                let value = other.strip_prefix("k=").ok_or_else(bad)?.trim();
                let r = match value.split_once('/') {
                    Some((n, d)) => {
                        let n: i64 = n.trim().parse().map_err(|_| bad())?;
                        let d: i64 = d.trim().parse().map_err(|_| bad())?;
                        if d == 0 {
                            return Err(bad());
                        }
                        Rational64::new(n, d)
                    }
                    None => Rational64::from_integer(value.parse().map_err(|_| bad())?),
                };
                Ok(Scheme::K(r))
            }
        }
    }
}

/// Named values of the curvature factor `k` found in the literature, for a
/// configuration space of dimension `n`.
pub fn k_catalogue(n: usize) -> Vec<(&'static str, Rational64)> {
    let mut v = vec![
        ("modified", Rational64::new(0, 1)),
        ("geometric", Rational64::new(1, 12)),
        ("path-integral", Rational64::new(1, 6)),
        ("ordering-eighth", Rational64::new(1, 8)),
        ("negative-twelfth", Rational64::new(-1, 12)),
        ("ordering-quarter", Rational64::new(1, 4)),
    ];
    if n >= 2 {
        let n = n as i64;
        v.push(("conformal", Rational64::new(n - 2, 8 * (n - 1))));
    }
    v
}

/// Everything needed to quantize: chart, ħ, optional magnetic potential `A`,
/// scalar potential `V` and the scheme.
#[derive(Debug, Clone)]
pub struct QuantizationSetup {
    pub chart: Arc<MetricChart>,
    pub hbar: f64,
    pub magnetic: Option<OneForm>,
    pub potential: Expr,
    pub scheme: Scheme,
    /// Extra term `ω(X)` added to the half-form connection; `None` keeps it flat.
    pub perturbation: Option<OneForm>,
}

impl QuantizationSetup {
    pub fn new(chart: Arc<MetricChart>) -> Self {
        QuantizationSetup {
            chart,
            hbar: 1.0,
            magnetic: None,
            potential: Expr::zero(),
            scheme: Scheme::Standard,
            perturbation: None,
        }
    }

    pub fn with_hbar(mut self, hbar: f64) -> Result<Self, QuantizationError> {
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(QuantizationError::Hbar(hbar));
        }
        self.hbar = hbar;
        Ok(self)
    }

    pub fn with_magnetic(mut self, a: OneForm) -> Result<Self, QuantizationError> {
        if a.components.len() != self.chart.dim() {
            return Err(QuantizationError::PotentialDimension { got: a.components.len(), want: self.chart.dim() });
        }
        a.components.iter().try_for_each(|c| self.chart.check_symbols(c))?;
        self.magnetic = if a.components.iter().all(Expr::is_zero) { None } else { Some(a) };
        Ok(self)
    }

    pub fn with_potential(mut self, v: Expr) -> Result<Self, QuantizationError> {
        self.chart.check_symbols(&v)?;
        self.potential = v.simplify();
        Ok(self)
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_perturbation(mut self, omega: Option<OneForm>) -> Self {
        self.perturbation = omega;
        self
    }

    pub fn hbar_expr(&self) -> Expr {
        Expr::real(self.hbar)
    }

    /// `B = dA`, or zero without a magnetic potential.
    pub fn charge_form(&self) -> TwoForm {
        match &self.magnetic {
            Some(a) => a.exterior_derivative(&self.chart),
            None => OneForm::zero(self.chart.dim()).exterior_derivative(&self.chart),
        }
    }

    fn a_of(&self, x: &VectorField) -> Expr {
        self.magnetic.as_ref().map(|a| a.contract(x)).unwrap_or_else(Expr::zero)
    }
}

/// Bracket on observables compatible with `[f̂₁, f̂₂] = iħ·{f₁, f₂}^`:
/// `{(f₁,X₁),(f₂,X₂)} = (X₂f₁ − X₁f₂ + B(X₁,X₂), [X₂,X₁])`.
/// On `T*Q` this is `∂_qF ∂_pG − ∂_pF ∂_qG` plus the magnetic term, so
/// `{q, p} = 1`.
pub fn poisson_bracket(f1: &Observable, f2: &Observable, setup: &QuantizationSetup) -> Observable {
    let chart = &setup.chart;
    let b = setup.charge_form();
    let base = f2.field.apply(chart, &f1.base) - f1.field.apply(chart, &f2.base) + b.eval(&f1.field, &f2.field);
    Observable::new(base, f2.field.bracket(&f1.field, chart))
}

/// The Lie-algebra bracket with the opposite overall sign,
/// `(X₁f₂ − X₂f₁ − B(X₁,X₂), [X₁,X₂])`.
pub fn lie_algebra_bracket(f1: &Observable, f2: &Observable, setup: &QuantizationSetup) -> Observable {
    let pb = poisson_bracket(f1, f2, setup);
    pb.scale(&Expr::int(-1))
}

/// The half-form contribution `c` in `f̂ψ⁰ = … + c·ψ⁰`, i.e.
/// `−iħ·(D_X√ν_g)/√ν_g` for the scheme's derivative `D`.
pub fn halfform_term(x: &VectorField, setup: &QuantizationSetup) -> Expr {
    let chart = &setup.chart;
    if x.is_zero() {
        return Expr::zero();
    }
    let nu = HalfFormCoeff::metric_halfform();
    let rate = if setup.scheme.uses_lie_derivative() {
        halfform_lie(chart, x, &nu).coeff
    } else {
        let c = halfform_covderiv(chart, x, &nu).coeff;
        if chart.same(&c, &Expr::zero(), 0x7a11) {
            Expr::zero()
        } else {
            c
        }
    };
    let rate = match &setup.perturbation {
        Some(omega) => rate + omega.contract(x),
        None => rate,
    };
    (-(Expr::i() * setup.hbar_expr()) * rate).simplify()
}

/// Quantum operator of `(f, X)`:
/// `f̂ψ⁰ = −iħ X^i∂_iψ⁰ + (f − A(X))ψ⁰ + halfform_term·ψ⁰`.
pub fn quantize(obs: &Observable, setup: &QuantizationSetup) -> DiffOperator {
    let n = setup.chart.dim();
    let minus_i_hbar = -(Expr::i() * setup.hbar_expr());
    let c1 = obs.field.components.iter().map(|x| &minus_i_hbar * x).collect();
    let c0 = &obs.base - setup.a_of(&obs.field) + halfform_term(&obs.field, setup);
    DiffOperator::new(setup.chart.names().clone(), c0, c1, vec![vec![Expr::zero(); n]; n])
}

fn rational_expr(r: Rational64) -> Expr {
    Expr::num(Number::from_rational(r))
}

/// `Ĥ_k = −(ħ²/2)Δ_A + ħ²·k·r_g + V`.
pub fn energy_operator(setup: &QuantizationSetup, k: Rational64) -> DiffOperator {
    let chart = &setup.chart;
    let h = setup.hbar_expr();
    let lap = laplace_beltrami(chart, setup.magnetic.as_ref(), setup.hbar);
    let kinetic = lap.scale(&(Expr::ratio(-1, 2) * &h * &h));
    let shift = if k.to_f64() == Some(0.0) {
        Expr::zero()
    } else {
        &h * &h * rational_expr(k) * chart.scalar_curvature()
    };
    kinetic.plus_multiplication(&(shift + &setup.potential))
}

/// Energy operator for the setup's own scheme.
pub fn scheme_energy_operator(setup: &QuantizationSetup) -> DiffOperator {
    energy_operator(setup, setup.scheme.k())
}

/// The standard-minus-modified gap expected for `(f, X)`: `−iħ·½div_g X`.
pub fn expected_scheme_gap(obs: &Observable, setup: &QuantizationSetup) -> Expr {
    (-(Expr::i() * setup.hbar_expr()) * Expr::ratio(1, 2) * divergence(&setup.chart, &obs.field)).simplify()
}

/// A random coefficient: a small polynomial in the coordinates, possibly
/// multiplied by a trigonometric factor.
pub fn random_coefficient(names: &[String], rng: &mut ChaCha8Rng) -> Expr {
    let terms = rng.gen_range(1..=3);
    let mut out = Vec::new();
    for _ in 0..terms {
        let mut factors = vec![Expr::ratio(rng.gen_range(-4..=4), rng.gen_range(1..=3))];
        for name in names {
            let deg = rng.gen_range(0..=2);
            if deg > 0 {
                factors.push(Expr::powi(Expr::sym(name), deg));
            }
        }
        if rng.gen_bool(0.3) {
            let name = &names[rng.gen_range(0..names.len())];
            let f = if rng.gen_bool(0.5) { crate::expr::Func::Sin } else { crate::expr::Func::Cos };
            factors.push(Expr::apply(f, Expr::sym(name)));
        }
        out.push(Expr::mul(factors));
    }
    Expr::add(out).simplify()
}

pub fn random_vector_field(chart: &MetricChart, rng: &mut ChaCha8Rng) -> VectorField {
    VectorField::new((0..chart.dim()).map(|_| random_coefficient(chart.names(), rng)).collect())
}

pub fn random_observable(chart: &MetricChart, rng: &mut ChaCha8Rng) -> Observable {
    Observable::new(random_coefficient(chart.names(), rng), random_vector_field(chart, rng))
}

/// Seeded RNG for the random generators above.
pub fn rng(seed: u64) -> ChaCha8Rng {
    Domain::rng(seed)
}

/// Serialized observable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservableRecord {
    pub function: String,
    pub field: Vec<String>,
}

impl From<&Observable> for ObservableRecord {
    fn from(o: &Observable) -> Self {
        ObservableRecord {
            function: o.base.to_string(),
            field: o.field.components.iter().map(|e| e.to_string()).collect(),
        }
    }
}
