use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use curvquant::expr::{parse, Bindings, Domain, Expr};
use curvquant::geometry::{
    divergence, halfform_covderiv, halfform_lie, laplace_beltrami, Boundary, Coordinate, HalfFormBasis, HalfFormCoeff,
    MetricChart, OneForm,
};
use curvquant::operator::DiffOperator;
use curvquant::quantization::{random_coefficient, random_vector_field, rng};

fn metric(rows: &[&[&str]]) -> Vec<Vec<Expr>> {
    rows.iter().map(|r| r.iter().map(|s| parse(s).unwrap()).collect()).collect()
}

fn sphere() -> MetricChart {
    MetricChart::new(
        vec![Coordinate::new("theta", 0.0, PI, Boundary::Polar), Coordinate::new("phi", 0.0, 2.0 * PI, Boundary::Periodic)],
        metric(&[&["1", "0"], &["0", "sin(theta)^2"]]),
    )
    .unwrap()
}

fn sphere_radius() -> MetricChart {
    MetricChart::with_parameters(
        vec![Coordinate::new("theta", 0.0, PI, Boundary::Polar), Coordinate::new("phi", 0.0, 2.0 * PI, Boundary::Periodic)],
        metric(&[&["R^2", "0"], &["0", "R^2*sin(theta)^2"]]),
        BTreeMap::from([("R".to_string(), 2.0)]),
    )
    .unwrap()
}

fn polar() -> MetricChart {
    MetricChart::new(
        vec![Coordinate::new("q1", 0.5, 2.0, Boundary::Open), Coordinate::new("q2", 0.0, 2.0 * PI, Boundary::Periodic)],
        metric(&[&["1", "0"], &["0", "q1^2"]]),
    )
    .unwrap()
}

/// A non-diagonal, non-flat metric.
fn skew() -> MetricChart {
    MetricChart::new(
        vec![Coordinate::new("x", -1.0, 1.0, Boundary::Open), Coordinate::new("y", -1.0, 1.0, Boundary::Open)],
        metric(&[&["1 + x^2", "x*y/2"], &["x*y/2", "1 + y^2"]]),
    )
    .unwrap()
}

fn flat2() -> MetricChart {
    MetricChart::new(
        vec![Coordinate::new("x", -1.0, 1.0, Boundary::Open), Coordinate::new("y", -1.0, 1.0, Boundary::Open)],
        metric(&[&["1", "0"], &["0", "1"]]),
    )
    .unwrap()
}

fn charts() -> Vec<(&'static str, MetricChart)> {
    vec![("sphere", sphere()), ("polar", polar()), ("skew", skew()), ("radius-2 sphere", sphere_radius())]
}

fn eval(chart: &MetricChart, e: &Expr, b: &Bindings) -> f64 {
    let mut b = b.clone();
    for (k, v) in chart.parameters() {
        b.entry(k.clone()).or_insert(Complex64::new(*v, 0.0));
    }
    e.eval(&b).unwrap().re
}

fn numeric_metric(chart: &MetricChart, b: &Bindings) -> Vec<Vec<f64>> {
    chart.metric().iter().map(|r| r.iter().map(|e| eval(chart, e, b)).collect()).collect()
}

fn inverse2(g: &[Vec<f64>]) -> [[f64; 2]; 2] {
    let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    [[g[1][1] / det, -g[0][1] / det], [-g[1][0] / det, g[0][0] / det]]
}

/// `∂_l g_ij` by central differences with step `1e−5`.
fn metric_derivatives(chart: &MetricChart, b: &Bindings) -> Vec<Vec<Vec<f64>>> {
    let h = 1e-5;
    (0..2)
        .map(|l| {
            let name = chart.name(l).to_string();
            let shift = |s: f64| {
                let mut p = b.clone();
                *p.get_mut(&name).unwrap() += s;
                numeric_metric(chart, &p)
            };
            let (up, down) = (shift(h), shift(-h));
            (0..2).map(|i| (0..2).map(|j| (up[i][j] - down[i][j]) / (2.0 * h)).collect()).collect()
        })
        .collect()
}

#[test]
fn christoffel_symbols_match_finite_differences() {
    for (name, chart) in charts() {
        let mut r = Domain::rng(11);
        for _ in 0..8 {
            let b = chart.domain().sample(&mut r);
            let dg = metric_derivatives(&chart, &b);
            let ginv = inverse2(&numeric_metric(&chart, &b));
            for k in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        let fd: f64 = (0..2)
                            .map(|l| 0.5 * ginv[k][l] * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]))
                            .sum();
                        let sym = eval(&chart, chart.christoffel().get(k, i, j), &b);
                        assert!((fd - sym).abs() <= 1e-6 * (1.0 + sym.abs()), "{name} Γ^{k}_{i}{j}: {sym} vs {fd}");
                    }
                }
            }
        }
    }
}

#[test]
fn levi_civita_connection_is_metric_compatible() {
    for (name, chart) in charts() {
        let g = chart.metric();
        let gam = chart.christoffel();
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    let nabla = chart.d(&g[i][j], k)
                        - Expr::add((0..2).map(|l| gam.get(l, k, i) * &g[l][j]).collect())
                        - Expr::add((0..2).map(|l| gam.get(l, k, j) * &g[i][l]).collect());
                    assert!(chart.same(&nabla, &Expr::zero(), 3), "{name}: ∇_{k} g_{i}{j} = {}", nabla.simplify());
                }
            }
        }
    }
}

/// `g^{σν} R^ρ_{σρν}` from the full Riemann tensor.
fn riemann_scalar(chart: &MetricChart) -> Expr {
    let n = chart.dim();
    let gam = chart.christoffel();
    let ginv = chart.inverse_metric();
    let riemann = |rho: usize, sigma: usize, mu: usize, nu: usize| {
        let mut t = chart.d(gam.get(rho, nu, sigma), mu) - chart.d(gam.get(rho, mu, sigma), nu);
        for l in 0..n {
            t = t + gam.get(rho, mu, l) * gam.get(l, nu, sigma) - gam.get(rho, nu, l) * gam.get(l, mu, sigma);
        }
        t
    };
    let mut terms = Vec::new();
    for sigma in 0..n {
        for nu in 0..n {
            let ricci = Expr::add((0..n).map(|rho| riemann(rho, sigma, rho, nu)).collect());
            terms.push(&ginv[sigma][nu] * ricci);
        }
    }
    Expr::add(terms)
}

#[test]
fn scalar_curvature_matches_riemann_contraction() {
    let s = sphere();
    assert!(s.same(&riemann_scalar(&s), &Expr::int(2), 1));
    let r = sphere_radius();
    assert!(r.same(&riemann_scalar(&r), &parse("2/R^2").unwrap(), 1));
    for (name, chart) in charts() {
        assert!(chart.same(chart.scalar_curvature(), &riemann_scalar(&chart), 2), "{name}");
    }
    assert!(polar().same(polar().scalar_curvature(), &Expr::zero(), 1));
}

#[test]
fn laplace_beltrami_examples() {
    let names = |c: &MetricChart| c.names().clone();
    let f = flat2();
    let want = DiffOperator::new(names(&f), Expr::zero(), vec![Expr::zero(); 2], metric(&[&["1", "0"], &["0", "1"]]));
    assert!(laplace_beltrami(&f, None, 1.0).compare(&want, f.domain(), 1).unwrap().is_equal());

    let p = polar();
    let want = DiffOperator::new(
        names(&p),
        Expr::zero(),
        vec![parse("1/q1").unwrap(), Expr::zero()],
        metric(&[&["1", "0"], &["0", "1/q1^2"]]),
    );
    assert!(laplace_beltrami(&p, None, 1.0).compare(&want, p.domain(), 1).unwrap().is_equal());

    let s = sphere();
    let want = DiffOperator::new(
        names(&s),
        Expr::zero(),
        vec![parse("cos(theta)/sin(theta)").unwrap(), Expr::zero()],
        metric(&[&["1", "0"], &["0", "1/sin(theta)^2"]]),
    );
    assert!(laplace_beltrami(&s, None, 1.0).compare(&want, s.domain(), 1).unwrap().is_equal());
}

#[test]
fn magnetic_laplacian_is_square_of_covariant_derivative() {
    let line = MetricChart::new(vec![Coordinate::new("x", -1.0, 1.0, Boundary::Open)], metric(&[&["1"]])).unwrap();
    let hbar = 0.7;
    let a = parse("x^2 + sin(x)").unwrap();
    let d = DiffOperator::derivation(line.names().clone(), &[Expr::one()])
        .plus_multiplication(&(-(Expr::i() / Expr::real(hbar)) * &a));
    let square = d.compose(&d).unwrap();
    let lap = laplace_beltrami(&line, Some(&OneForm::new(vec![a])), hbar);
    assert!(lap.compare(&square, line.domain(), 1).unwrap().is_equal());
}

#[test]
fn bochner_laplacian_is_gauge_covariant() {
    for (name, chart) in [("polar", polar()), ("sphere", sphere()), ("skew", skew())] {
        let hbar = 0.8;
        let names: Vec<String> = chart.names().to_vec();
        let mut g = rng(5);
        let a = OneForm::new(vec![random_coefficient(&names, &mut g), random_coefficient(&names, &mut g)]);
        let chi = random_coefficient(&names, &mut g);
        let phase = |s: i64| {
            let e = (Expr::int(s) * Expr::i() / Expr::real(hbar) * &chi).simplify();
            DiffOperator::multiplication(chart.names().clone(), Expr::apply(curvquant::expr::Func::Exp, e))
        };
        let shifted = laplace_beltrami(&chart, Some(&a.add(&OneForm::exact(&chart, &chi))), hbar);
        let conjugated = phase(-1).compose(&shifted).unwrap().compose(&phase(1)).unwrap();
        let lap = laplace_beltrami(&chart, Some(&a), hbar);
        assert!(lap.compare(&conjugated, chart.domain(), 2).unwrap().is_equal(), "{name}");
    }
}

#[test]
fn bochner_laplacian_reduces_to_laplace_beltrami_without_field() {
    for (name, chart) in charts() {
        let zero = OneForm::zero(chart.dim());
        let a = laplace_beltrami(&chart, Some(&zero), 1.0);
        let b = laplace_beltrami(&chart, None, 1.0);
        assert!(a.compare(&b, chart.domain(), 4).unwrap().is_equal(), "{name}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn divergence_obeys_product_rule(seed in 0u64..10_000, which in 0usize..4) {
        let (name, chart) = charts().swap_remove(which);
        let mut g = rng(seed);
        let x = random_vector_field(&chart, &mut g);
        let f = random_coefficient(&chart.names().to_vec(), &mut g);
        let lhs = divergence(&chart, &x.scale(&f));
        let rhs = &f * divergence(&chart, &x) + x.apply(&chart, &f);
        prop_assert!(chart.same(&lhs, &rhs, seed), "{}", name);
    }

    #[test]
    fn lie_minus_covariant_derivative_is_half_divergence(seed in 0u64..10_000, which in 0usize..4) {
        let (name, chart) = charts().swap_remove(which);
        let mut g = rng(seed);
        let x = random_vector_field(&chart, &mut g);
        let f = random_coefficient(&chart.names().to_vec(), &mut g);
        for nu in [HalfFormCoeff::flat(f.clone()), HalfFormCoeff::metric(f.clone())] {
            let lie = halfform_lie(&chart, &x, &nu).to_flat(&chart);
            let cov = halfform_covderiv(&chart, &x, &nu).to_flat(&chart);
            let want = Expr::ratio(1, 2) * divergence(&chart, &x) * nu.to_flat(&chart).coeff;
            prop_assert!(chart.same(&(lie.coeff - cov.coeff), &want, seed), "{}", name);
        }
    }

    #[test]
    fn halfform_rate_is_half_the_density_rate(seed in 0u64..10_000, which in 0usize..4) {
        // Leibniz: L_X(√ν ⊗ √ν) = 2 √ν ⊗ L_X√ν, and L_X ν_g = div_g X · ν_g.
        let (name, chart) = charts().swap_remove(which);
        let mut g = rng(seed);
        let x = random_vector_field(&chart, &mut g);
        let vol = chart.volume_density();
        let density_rate = (x.apply(&chart, vol)
            + vol * Expr::add((0..chart.dim()).map(|i| chart.d(&x.components[i], i)).collect()))
            / vol;
        let half = halfform_lie(&chart, &x, &HalfFormCoeff::metric_halfform());
        prop_assert_eq!(half.basis, HalfFormBasis::Metric);
        prop_assert!(chart.same(&(Expr::int(2) * half.coeff), &density_rate, seed), "{}", name);
    }
}
