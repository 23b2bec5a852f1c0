//! Acceptance suite. Every criterion prints one PASS/FAIL line; the binary
//! exits non-zero if any criterion fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;

use num_rational::Rational64;
use rand::Rng;

use curvquant::expr::{parse, Domain, Expr};
use curvquant::geometry::{Boundary, Coordinate, MetricChart, OneForm, VectorField};
use curvquant::io::{load_manifest, Loaded};
use curvquant::operator::DiffOperator;
use curvquant::quantization::{
    energy_operator, parse_observable, quantize, random_observable, rng, Observable, QuantizationSetup, Scheme,
};
use curvquant::spectral::{adjoint_defect, discretize, discretize_energy, eigen_spectrum, shift_check, Grid};
use curvquant::verification::{
    check_canonical_pairs, check_commutation, check_flat_halfform, check_nonflat_control, check_symmetry, curvature_shift,
};

const SEED: u64 = 42;
const CORPUS: [&str; 4] = ["euclidean1", "euclidean2", "polar", "sphere"];

struct Outcome {
    ok: bool,
    lines: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome { ok: true, lines: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: impl Into<String>) {
        self.ok &= ok;
        self.lines.push(format!("    {} {}", if ok { "ok  " } else { "FAIL" }, what.into()));
    }
}

fn manifest_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("manifests").join(format!("{name}.json"))
}

fn load(name: &str) -> Loaded {
    load_manifest(&manifest_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn op_equal(a: &DiffOperator, b: &DiffOperator, dom: &Domain) -> bool {
    a.compare(b, dom, SEED).map(|c| c.is_equal()).unwrap_or(false)
}

/// `(1/√|g|)∂_i(√|g| X^i)` with the determinant expanded by hand.
fn divergence_oracle(chart: &MetricChart, x: &VectorField) -> Expr {
    let g = chart.metric();
    let det = match chart.dim() {
        1 => g[0][0].clone(),
        2 => &g[0][0] * &g[1][1] - &g[0][1] * &g[1][0],
        n => panic!("no determinant oracle for dimension {n}"),
    };
    let w = det.sqrt();
    let flux: Vec<Expr> = (0..chart.dim()).map(|i| (&w * &x.components[i]).diff(chart.name(i))).collect();
    Expr::add(flux) / w
}

fn criterion_1() -> Outcome {
    let mut o = Outcome::new();
    let sphere = load("sphere");
    o.check(sphere.chart.same(sphere.chart.scalar_curvature(), &Expr::int(2), SEED), "unit sphere r_g = 2");
    let r2 = load("sphere_r2");
    let want = parse("2/R^2").unwrap();
    let r = r2.chart.scalar_curvature();
    o.check(r2.chart.same(r, &want, SEED), format!("radius-R sphere r_g = {r}, expected 2/R^2"));
    for name in ["euclidean1", "euclidean2", "polar", "landau"] {
        let l = load(name);
        o.check(l.chart.same(l.chart.scalar_curvature(), &Expr::zero(), SEED), format!("{name} r_g = 0"));
    }
    o
}

fn criterion_2() -> Outcome {
    let mut o = Outcome::new();
    for name in CORPUS {
        let l = load(name);
        let r = check_flat_halfform(&l.setup, SEED);
        o.check(r.passed(), format!("{name}: {}", r.detail));
    }
    o
}

fn criterion_3() -> Outcome {
    let mut o = Outcome::new();
    for name in CORPUS.iter().copied().chain(["landau"]) {
        let l = load(name);
        let r = check_canonical_pairs(&l.setup, SEED);
        o.check(r.passed(), format!("{name}: {}", r.detail));
    }
    o
}

fn criterion_4() -> Outcome {
    let mut o = Outcome::new();
    let l = load("sphere");
    let mut g = rng(SEED);
    let mut passed = 0;
    for k in 0..50 {
        let a = random_observable(&l.chart, &mut g);
        let b = random_observable(&l.chart, &mut g);
        let r = check_commutation(&a, &b, &l.setup, SEED + k);
        if r.passed() {
            passed += 1;
        } else {
            o.check(false, format!("pair {k}: {:?}", r.witness));
        }
    }
    o.check(passed == 50, format!("{passed}/50 random pairs commute on the sphere"));
    let control = check_nonflat_control(&l.setup, SEED).expect("sphere is two-dimensional");
    o.check(
        control.passed() && control.witness.is_some(),
        format!("non-flat control fails commutation with witness {:?}", control.witness.unwrap_or_default()),
    );
    o
}

fn open_interval_chart() -> MetricChart {
    MetricChart::new(vec![Coordinate::new("x", 0.5, 1.5, Boundary::Open)], vec![vec![Expr::one()]]).unwrap()
}

fn criterion_5() -> Outcome {
    let mut o = Outcome::new();
    let labelled: [(&str, &str, bool); 9] = [
        ("euclidean1", "p_x", true),
        ("euclidean2", "p1", true),
        ("euclidean2", "p2", true),
        ("euclidean2", "q2*p1 - q1*p2", true),
        ("polar", "p2", true),
        ("sphere", "p_phi", true),
        ("euclidean1", "x*p_x", false),
        ("polar", "p1", false),
        ("sphere", "p_theta", false),
    ];
    for (name, text, symmetric) in labelled {
        let l = load(name);
        let obs = parse_observable(text, &l.chart).unwrap();
        let r = check_symmetry(&obs, &l.setup, SEED);
        let div_zero = l.chart.same(&divergence_oracle(&l.chart, &obs.field), &Expr::zero(), SEED);
        o.check(
            r.passed() == symmetric && div_zero == symmetric,
            format!("{name} {text}: {} (expected symmetric = {symmetric})", r.status.label()),
        );
    }
    let numeric: [(&str, &str, &[usize]); 5] = [
        ("euclidean1", "p_x", &[48]),
        ("euclidean2", "p1", &[16, 16]),
        ("euclidean2", "q2*p1 - q1*p2", &[16, 16]),
        ("polar", "p2", &[12, 24]),
        ("sphere", "p_phi", &[12, 24]),
    ];
    for (name, text, sizes) in numeric {
        let l = load(name);
        let setup = l.setup.clone().with_scheme(Scheme::Modified);
        let obs = parse_observable(text, &l.chart).unwrap();
        let grid = Arc::new(Grid::new(&l.chart, sizes).unwrap());
        let d = discretize(&quantize(&obs, &setup), &l.chart, &grid).unwrap();
        let defect = adjoint_defect(&d, 4, SEED);
        o.check(defect <= 1e-8, format!("{name} {text}: adjoint defect {defect:.2e} <= 1e-8"));
    }
    let chart = Arc::new(open_interval_chart());
    let setup = QuantizationSetup::new(chart.clone()).with_scheme(Scheme::Modified);
    let obs = parse_observable("x*p_x", &chart).unwrap();
    let grid = Arc::new(Grid::new(&chart, &[48]).unwrap());
    let d = discretize(&quantize(&obs, &setup), &chart, &grid).unwrap();
    let defect = adjoint_defect(&d, 4, SEED);
    o.check(defect >= 1e-7, format!("x*p_x on Dirichlet [0.5, 1.5]: adjoint defect {defect:.2e} >= 1e-7"));
    o
}

fn corpus_observables(l: &Loaded) -> Vec<Observable> {
    let n = l.chart.dim();
    let mut obs: Vec<Observable> = (0..n).map(|i| Observable::momentum(VectorField::coordinate(n, i))).collect();
    let mut g = rng(SEED);
    obs.extend((0..5).map(|_| random_observable(&l.chart, &mut g)));
    obs
}

fn criterion_6() -> Outcome {
    let mut o = Outcome::new();
    for name in CORPUS.iter().copied().chain(["landau"]) {
        let l = load(name);
        let std = l.setup.clone().with_scheme(Scheme::Standard);
        let modified = l.setup.clone().with_scheme(Scheme::Modified);
        let observables = corpus_observables(&l);
        let mut all = true;
        for obs in &observables {
            let gap = quantize(obs, &std).sub(&quantize(obs, &modified));
            let h = Expr::real(l.setup.hbar);
            let want = parse("-i/2").unwrap() * h * divergence_oracle(&l.chart, &obs.field);
            let want = DiffOperator::multiplication(l.chart.names().clone(), want);
            all &= op_equal(&gap, &want, l.chart.domain());
        }
        o.check(all, format!("{name}: std - mod = -i*hbar/2*div_g X for {} observables", observables.len()));
    }
    o
}

fn criterion_7() -> Outcome {
    let mut o = Outcome::new();
    for name in CORPUS.iter().copied().chain(["sphere_r2", "landau"]) {
        let l = load(name);
        let gap = energy_operator(&l.setup, Rational64::new(1, 12)).sub(&energy_operator(&l.setup, Rational64::new(0, 1)));
        let h2 = l.setup.hbar * l.setup.hbar;
        let want = Expr::real(h2) * Expr::ratio(1, 12) * l.chart.scalar_curvature();
        let want = DiffOperator::multiplication(l.chart.names().clone(), want);
        let report = curvature_shift(&l.setup, SEED).report;
        o.check(
            op_equal(&gap, &want, l.chart.domain()) && report.passed(),
            format!("{name}: H_1/12 - H_0 = hbar^2*r_g/12"),
        );
    }
    for hbar in [1.0, 0.5] {
        let l = load("sphere");
        let setup = l.setup.clone().with_hbar(hbar).unwrap();
        let gap = energy_operator(&setup, Rational64::new(1, 12)).sub(&energy_operator(&setup, Rational64::new(0, 1)));
        let want = DiffOperator::multiplication(l.chart.names().clone(), Expr::real(hbar * hbar / 6.0));
        o.check(op_equal(&gap, &want, l.chart.domain()), format!("unit sphere, hbar = {hbar}: gap = hbar^2/6"));
    }
    o
}

fn criterion_8() -> Outcome {
    let mut o = Outcome::new();
    let l = load("sphere");
    let grid = Arc::new(Grid::new(&l.chart, &[32, 64]).unwrap());
    let lap = energy_operator(&l.setup, Rational64::new(0, 1)).scale(&Expr::int(2));
    let ev = eigen_spectrum(&discretize(&lap, &l.chart, &grid).unwrap(), 9).unwrap();
    let exact = [0.0, 2.0, 2.0, 2.0, 6.0, 6.0, 6.0, 6.0, 6.0];
    let worst = ev.iter().zip(exact).map(|(a, b)| (a - b).abs() / b.max(1.0)).fold(0.0, f64::max);
    o.check(worst <= 0.02, format!("sphere 32x64 eigenvalues {ev:.4?}: worst relative error {worst:.2e} <= 2e-2"));

    let circle = MetricChart::new(
        vec![Coordinate::new("x", 0.0, 2.0 * std::f64::consts::PI, Boundary::Periodic)],
        vec![vec![Expr::one()]],
    )
    .unwrap();
    let minus_dxx = DiffOperator::new(circle.names().clone(), Expr::zero(), vec![Expr::zero()], vec![vec![Expr::int(-1)]]);
    let grid = Arc::new(Grid::new(&circle, &[64]).unwrap());
    let ev = eigen_spectrum(&discretize(&minus_dxx, &circle, &grid).unwrap(), 5).unwrap();
    let exact = [0.0, 1.0, 1.0, 4.0, 4.0];
    let worst = ev.iter().zip(exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    o.check(worst <= 1e-3, format!("circle N = 64 eigenvalues {ev:.6?}: worst error {worst:.2e} <= 1e-3"));

    for (name, sizes) in [("sphere", [32, 64]), ("sphere_r2", [16, 32])] {
        let l = load(name);
        let grid = Arc::new(Grid::new(&l.chart, &sizes).unwrap());
        let r = shift_check(&l.setup, &grid, 9, SEED).unwrap();
        o.check(
            r.passed == Some(true),
            format!("{name} shift deltas {:.6?} vs {:.6}", r.deltas.unwrap_or_default(), r.expected_delta.unwrap_or(f64::NAN)),
        );
    }
    o
}

fn gauge_function(seed: u64) -> Expr {
    let mut g = rng(seed);
    let mut c = || format!("{:.6}", g.gen_range(-1.0..1.0));
    parse(&format!(
        "({})*sin(({})*q1 + ({})*q2) + ({})*q1*q2 + ({})*q2^2/10",
        c(),
        c(),
        c(),
        c(),
        c()
    ))
    .unwrap()
}

fn criterion_9() -> Outcome {
    let mut o = Outcome::new();
    let l = load("landau");
    let grid = Arc::new(Grid::new(&l.chart, &[30, 30]).unwrap());
    let count = 8;
    let base = eigen_spectrum(&discretize_energy(&l.setup, Rational64::new(0, 1), &grid).unwrap(), count).unwrap();
    let a = l.setup.magnetic.clone().expect("landau has a potential");
    for seed in [1, 2, 3] {
        let chi = gauge_function(seed);
        let setup = l.setup.clone().with_magnetic(a.add(&OneForm::exact(&l.chart, &chi))).unwrap();
        let ev = eigen_spectrum(&discretize_energy(&setup, Rational64::new(0, 1), &grid).unwrap(), count).unwrap();
        let worst = base.iter().zip(&ev).map(|(x, y)| (x - y).abs() / (1.0 + x.abs())).fold(0.0, f64::max);
        o.check(worst <= 1e-6, format!("chi = {chi}: worst spectral change {worst:.2e} <= 1e-6"));
    }
    o
}

fn criterion_10() -> Outcome {
    let mut o = Outcome::new();
    let bin = env!("CARGO_BIN_EXE_curvquant");
    let invocations: [(&str, &str, &[&str]); 7] = [
        ("curvature", "sphere", &[]),
        ("quantize", "euclidean2", &["--observable", "q2*p1 - q1*p2"]),
        ("verify", "sphere", &["--observable", "p_phi"]),
        ("verify", "landau", &[]),
        ("spectrum", "polar", &["--grid", "12,24", "--eigs", "6"]),
        ("shift", "sphere", &["--grid", "16,32", "--eigs", "6"]),
        ("spectrum", "landau", &["--grid", "12", "--eigs", "4"]),
    ];
    for (cmd, name, extra) in invocations {
        let runs: Vec<Vec<u8>> = (0..2)
            .map(|_| {
                let out = Command::new(bin)
                    .arg(cmd)
                    .arg("--manifest")
                    .arg(manifest_path(name))
                    .args(["--seed", "7"])
                    .args(extra)
                    .output()
                    .expect("binary runs");
                out.stdout
            })
            .collect();
        o.check(!runs[0].is_empty() && runs[0] == runs[1], format!("{cmd} {name}: {} identical bytes", runs[0].len()));
    }
    o
}

fn main() {
    faer::set_global_parallelism(faer::Parallelism::None);
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("curvature oracle", criterion_1),
        ("flat half-form connection", criterion_2),
        ("canonical commutators", criterion_3),
        ("commutation identity", criterion_4),
        ("symmetry criterion", criterion_5),
        ("scheme gap", criterion_6),
        ("energy-operator gap", criterion_7),
        ("spectral reproduction", criterion_8),
        ("gauge covariance", criterion_9),
        ("determinism", criterion_10),
    ];
    let outcomes: Vec<Outcome> = std::thread::scope(|s| {
        let handles: Vec<_> = criteria.iter().map(|(_, f)| s.spawn(*f)).collect();
        handles.into_iter().map(|h| h.join().expect("criterion panicked")).collect()
    });
    let mut failed = 0;
    for (i, ((title, _), o)) in criteria.iter().zip(&outcomes).enumerate() {
        println!("{} criterion {}: {title}", if o.ok { "PASS" } else { "FAIL" }, i + 1);
        for line in &o.lines {
            println!("{line}");
        }
        failed += usize::from(!o.ok);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
