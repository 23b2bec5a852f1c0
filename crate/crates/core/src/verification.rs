//! Symbolic checks of the structural identities: commutators against the
//! bracket, the divergence-free symmetry criterion, flatness of the metric
//! half-form, and the curvature shift between the two energy operators.

use num_rational::Rational64;
use serde::Serialize;

use crate::expr::{equivalent, Equivalence, Expr};
use crate::geometry::{divergence, halfform_covderiv, HalfFormCoeff, OneForm, VectorField};
use crate::operator::{DiffOperator, OperatorComparison};
use crate::quantization::{
    energy_operator, expected_scheme_gap, poisson_bracket, quantize, random_vector_field, rng, Observable,
    QuantizationSetup, Scheme,
};

/// Vector fields sampled by the flatness check.
pub const FLATNESS_FIELDS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Inconclusive => "INCONCLUSIVE",
        }
    }
}

/// Outcome of one claim. A failing report always carries a witness.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub claim: String,
    pub status: Status,
    pub witness: Option<String>,
    pub seeds: Vec<u64>,
    pub detail: String,
}

impl VerificationReport {
    fn pass(claim: &str, seeds: Vec<u64>, detail: impl Into<String>) -> Self {
        VerificationReport { claim: claim.into(), status: Status::Pass, witness: None, seeds, detail: detail.into() }
    }

    fn with_status(claim: &str, status: Status, witness: String, seeds: Vec<u64>, detail: impl Into<String>) -> Self {
        VerificationReport { claim: claim.into(), status, witness: Some(witness), seeds, detail: detail.into() }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

enum Mismatch {
    Different(String),
    Inconclusive(String),
}

fn compare_ops(a: &DiffOperator, b: &DiffOperator, setup: &QuantizationSetup, seed: u64) -> Result<(), Mismatch> {
    match a.compare(b, setup.chart.domain(), seed) {
        Ok(OperatorComparison::Equal) => Ok(()),
        Ok(OperatorComparison::Different { coefficient, witness }) => {
            Err(Mismatch::Different(format!("{coefficient}: {witness}")))
        }
        Ok(OperatorComparison::Inconclusive { coefficient, reason }) => {
            Err(Mismatch::Inconclusive(format!("{coefficient}: {reason}")))
        }
        Err(e) => Err(Mismatch::Inconclusive(e.to_string())),
    }
}

fn commutation_in_scheme(
    f1: &Observable,
    f2: &Observable,
    setup: &QuantizationSetup,
    seed: u64,
) -> Result<(), Mismatch> {
    let a = quantize(f1, setup);
    let b = quantize(f2, setup);
    let lhs = a.commutator(&b).map_err(|e| Mismatch::Inconclusive(e.to_string()))?;
    let bracket = poisson_bracket(f1, f2, setup);
    let rhs = quantize(&bracket, setup).scale(&(Expr::i() * setup.hbar_expr()));
    compare_ops(&lhs, &rhs, setup, seed)
}

/// `[f̂₁, f̂₂] = iħ·{f₁, f₂}^` coefficient-wise, in both the standard and the
/// modified scheme. Passes only if both schemes pass.
pub fn check_commutation(f1: &Observable, f2: &Observable, setup: &QuantizationSetup, seed: u64) -> VerificationReport {
    const CLAIM: &str = "commutation";
    let mut inconclusive = None;
    for scheme in [Scheme::Standard, Scheme::Modified] {
        let s = setup.clone().with_scheme(scheme);
        match commutation_in_scheme(f1, f2, &s, seed) {
            Ok(()) => {}
            Err(Mismatch::Different(w)) => {
                return VerificationReport::with_status(
                    CLAIM,
                    Status::Fail,
                    format!("scheme {scheme}: {w}"),
                    vec![seed],
                    "commutator differs from i*hbar times the quantized bracket",
                )
            }
            Err(Mismatch::Inconclusive(w)) => inconclusive = Some(format!("scheme {scheme}: {w}")),
        }
    }
    match inconclusive {
        Some(w) => VerificationReport::with_status(CLAIM, Status::Inconclusive, w, vec![seed], "oracle could not sample"),
        None => VerificationReport::pass(CLAIM, vec![seed], "commutator equals i*hbar times the quantized bracket in schemes std and mod"),
    }
}

/// Formal symmetry of the modified operator of `(f, X)`: holds iff
/// `div_g X ≡ 0`. The defect expression is reported either way.
pub fn check_symmetry(obs: &Observable, setup: &QuantizationSetup, seed: u64) -> VerificationReport {
    const CLAIM: &str = "symmetry";
    let div = divergence(&setup.chart, &obs.field);
    let detail = format!("defect div_g X = {div}; formal symmetry only, self-adjointness not assessed");
    match equivalent(&div, &Expr::zero(), setup.chart.domain(), seed) {
        Ok(Equivalence::Equivalent) => VerificationReport::pass(CLAIM, vec![seed], detail),
        Ok(r @ Equivalence::Different { .. }) => VerificationReport::with_status(
            CLAIM,
            Status::Fail,
            format!("div_g X = {div} {}", r.witness().unwrap_or_default()),
            vec![seed],
            detail,
        ),
        Ok(Equivalence::Inconclusive { reason }) => {
            VerificationReport::with_status(CLAIM, Status::Inconclusive, reason, vec![seed], detail)
        }
        Err(e) => VerificationReport::with_status(CLAIM, Status::Inconclusive, e.to_string(), vec![seed], detail),
    }
}

/// `∇_X√ν_g ≡ 0` for the coordinate fields and [`FLATNESS_FIELDS`] random fields.
pub fn check_flat_halfform(setup: &QuantizationSetup, seed: u64) -> VerificationReport {
    const CLAIM: &str = "flat-halfform";
    let chart = &setup.chart;
    let n = chart.dim();
    let mut r = rng(seed);
    let mut fields: Vec<VectorField> = (0..n).map(|i| VectorField::coordinate(n, i)).collect();
    fields.extend((0..FLATNESS_FIELDS).map(|_| random_vector_field(chart, &mut r)));
    for x in &fields {
        let d = halfform_covderiv(chart, x, &HalfFormCoeff::metric_halfform());
        match equivalent(&d.coeff, &Expr::zero(), chart.domain(), seed) {
            Ok(Equivalence::Equivalent) => {}
            Ok(Equivalence::Different { .. }) => {
                return VerificationReport::with_status(
                    CLAIM,
                    Status::Fail,
                    format!("X = {:?}: covariant derivative {}", display_field(x), d.coeff),
                    vec![seed],
                    "metric half-form is not parallel",
                )
            }
            Ok(Equivalence::Inconclusive { reason }) => {
                return VerificationReport::with_status(CLAIM, Status::Inconclusive, reason, vec![seed], "")
            }
            Err(e) => {
                return VerificationReport::with_status(CLAIM, Status::Inconclusive, e.to_string(), vec![seed], "")
            }
        }
    }
    VerificationReport::pass(
        CLAIM,
        vec![seed],
        format!("covariant derivative of sqrt(nu_g) vanishes for {} vector fields", fields.len()),
    )
}

fn display_field(x: &VectorField) -> Vec<String> {
    x.components.iter().map(|c| c.to_string()).collect()
}

/// `[q̂^i, p̂_j] = iħδ^i_j` in both schemes.
pub fn check_canonical_pairs(setup: &QuantizationSetup, seed: u64) -> VerificationReport {
    const CLAIM: &str = "canonical-pair";
    let chart = &setup.chart;
    let n = chart.dim();
    for scheme in [Scheme::Standard, Scheme::Modified] {
        let s = setup.clone().with_scheme(scheme);
        for i in 0..n {
            let q = quantize(&Observable::function(n, Expr::sym(chart.name(i))), &s);
            for j in 0..n {
                let p = quantize(&Observable::momentum(VectorField::coordinate(n, j)), &s);
                let lhs = match q.commutator(&p) {
                    Ok(c) => c,
                    Err(e) => {
                        return VerificationReport::with_status(CLAIM, Status::Inconclusive, e.to_string(), vec![seed], "")
                    }
                };
                let delta = if i == j { Expr::i() * s.hbar_expr() } else { Expr::zero() };
                let rhs = DiffOperator::multiplication(chart.names().clone(), delta);
                if let Err(m) = compare_ops(&lhs, &rhs, &s, seed) {
                    let (status, w) = match m {
                        Mismatch::Different(w) => (Status::Fail, w),
                        Mismatch::Inconclusive(w) => (Status::Inconclusive, w),
                    };
                    return VerificationReport::with_status(
                        CLAIM,
                        status,
                        format!("scheme {scheme}, [q^{i}, p_{j}]: {w}"),
                        vec![seed],
                        "",
                    );
                }
            }
        }
    }
    VerificationReport::pass(CLAIM, vec![seed], format!("[q^i, p_j] = i*hbar*delta for {n} coordinate(s) in schemes std and mod"))
}

/// `quantize_std(f′) − quantize_mod(f′) ≡ −iħ·½div_g X` for every observable.
pub fn check_scheme_gap(observables: &[Observable], setup: &QuantizationSetup, seed: u64) -> VerificationReport {
    const CLAIM: &str = "scheme-gap";
    let std = setup.clone().with_scheme(Scheme::Standard);
    let modified = setup.clone().with_scheme(Scheme::Modified);
    for obs in observables {
        let gap = quantize(obs, &std).sub(&quantize(obs, &modified));
        let want = DiffOperator::multiplication(setup.chart.names().clone(), expected_scheme_gap(obs, setup));
        if let Err(m) = compare_ops(&gap, &want, setup, seed) {
            let (status, w) = match m {
                Mismatch::Different(w) => (Status::Fail, w),
                Mismatch::Inconclusive(w) => (Status::Inconclusive, w),
            };
            return VerificationReport::with_status(CLAIM, status, w, vec![seed], "");
        }
    }
    VerificationReport::pass(
        CLAIM,
        vec![seed],
        format!("std minus mod equals -i*hbar/2*div_g X for {} observable(s)", observables.len()),
    )
}

/// `Ĥ_{1/12} − Ĥ_0` together with its verification record.
#[derive(Debug, Clone)]
pub struct CurvatureShift {
    pub shift: Expr,
    pub report: VerificationReport,
}

/// Computes `Ĥ_{1/12} − Ĥ_0`, asserting it is multiplication by `(ħ²/12)r_g`
/// and that the metric half-form is parallel along the coordinate fields.
pub fn curvature_shift(setup: &QuantizationSetup, seed: u64) -> CurvatureShift {
    const CLAIM: &str = "curvature-shift";
    let chart = &setup.chart;
    let h = setup.hbar_expr();
    let gap = energy_operator(setup, Rational64::new(1, 12)).sub(&energy_operator(setup, Rational64::new(0, 1)));
    let shift = gap.c0().simplify();
    let expected = (&h * &h * Expr::ratio(1, 12) * chart.scalar_curvature()).simplify();
    let want = DiffOperator::multiplication(chart.names().clone(), expected.clone());
    let fail = |status: Status, w: String| CurvatureShift {
        shift: shift.clone(),
        report: VerificationReport::with_status(CLAIM, status, w, vec![seed], ""),
    };
    if let Err(m) = compare_ops(&gap, &want, setup, seed) {
        return match m {
            Mismatch::Different(w) => fail(Status::Fail, w),
            Mismatch::Inconclusive(w) => fail(Status::Inconclusive, w),
        };
    }
    let n = chart.dim();
    for i in 0..n {
        let d = halfform_covderiv(chart, &VectorField::coordinate(n, i), &HalfFormCoeff::metric_halfform());
        if !chart.same(&d.coeff, &Expr::zero(), seed) {
            return fail(Status::Fail, format!("covariant derivative of sqrt(nu_g) along {}: {}", chart.name(i), d.coeff));
        }
    }
    let report = VerificationReport::pass(
        CLAIM,
        vec![seed],
        format!("H_1/12 - H_0 = {expected} (hbar^2*r_g/12), a pure multiplication operator"),
    );
    CurvatureShift { shift: expected, report }
}

/// Negative control: with the non-flat perturbation `ω = x dy` injected into
/// the half-form connection, the commutation identity must fail. The report
/// passes when the expected failure is observed. This demonstrates the
/// necessity of flatness on one example only.
pub fn check_nonflat_control(setup: &QuantizationSetup, seed: u64) -> Option<VerificationReport> {
    const CLAIM: &str = "nonflat-control";
    let chart = &setup.chart;
    let n = chart.dim();
    if n < 2 {
        return None;
    }
    let mut omega = vec![Expr::zero(); n];
    omega[1] = Expr::sym(chart.name(0));
    let perturbed = setup.clone().with_perturbation(Some(OneForm::new(omega)));
    let f1 = Observable::momentum(VectorField::coordinate(n, 0));
    let f2 = Observable::momentum(VectorField::coordinate(n, 1));
    let r = check_commutation(&f1, &f2, &perturbed, seed);
    let detail = format!(
        "omega = {} d{} injected into the half-form connection; necessity of flatness shown on this example only",
        chart.name(0),
        chart.name(1)
    );
    Some(match r.status {
        Status::Fail => VerificationReport {
            claim: CLAIM.into(),
            status: Status::Pass,
            witness: r.witness,
            seeds: vec![seed],
            detail,
        },
        Status::Pass => VerificationReport::with_status(
            CLAIM,
            Status::Fail,
            "commutation identity held despite the non-flat connection".into(),
            vec![seed],
            detail,
        ),
        Status::Inconclusive => VerificationReport::with_status(
            CLAIM,
            Status::Inconclusive,
            r.witness.unwrap_or_default(),
            vec![seed],
            detail,
        ),
    })
}

/// Jacobi identity of [`poisson_bracket`] on one triple.
pub fn check_jacobi(a: &Observable, b: &Observable, c: &Observable, setup: &QuantizationSetup, seed: u64) -> VerificationReport {
    const CLAIM: &str = "jacobi";
    let pb = |x: &Observable, y: &Observable| poisson_bracket(x, y, setup);
    // Comparing one term against minus the other two keeps the oracle's
    // relative tolerance meaningful despite cancellation.
    let lhs = pb(a, &pb(b, c));
    let rhs = pb(b, &pb(c, a)).add(&pb(c, &pb(a, b))).scale(&Expr::int(-1));
    let dom = setup.chart.domain();
    let names = std::iter::once("function".to_string())
        .chain((0..setup.chart.dim()).map(|i| format!("field[{}]", setup.chart.name(i))));
    let lhs_parts = std::iter::once(&lhs.base).chain(lhs.field.components.iter());
    let rhs_parts = std::iter::once(&rhs.base).chain(rhs.field.components.iter());
    for ((name, l), r) in names.zip(lhs_parts).zip(rhs_parts) {
        match equivalent(l, r, dom, seed) {
            Ok(Equivalence::Equivalent) => {}
            Ok(r @ Equivalence::Different { .. }) => {
                return VerificationReport::with_status(
                    CLAIM,
                    Status::Fail,
                    format!("{name}: {}", r.witness().unwrap_or_default()),
                    vec![seed],
                    "",
                )
            }
            Ok(Equivalence::Inconclusive { reason }) => {
                return VerificationReport::with_status(CLAIM, Status::Inconclusive, reason, vec![seed], "")
            }
            Err(e) => return VerificationReport::with_status(CLAIM, Status::Inconclusive, e.to_string(), vec![seed], ""),
        }
    }
    VerificationReport::pass(CLAIM, vec![seed], "cyclic sum of nested brackets vanishes")
}
