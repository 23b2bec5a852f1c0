//! Command dispatch shared by the binary and the tests.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use serde_json::{json, Value};
use thiserror::Error;

use super::manifest::{load_manifest, Loaded, ManifestError};
use super::report::{ManifestInfo, Report, REPORT_SCHEMA};
use crate::expr::Expr;
use crate::geometry::{Boundary, VectorField};
use crate::quantization::{
    energy_operator, halfform_term, parse_observable, quantize, random_observable, rng, Observable,
    ObservableRecord, QuantizationError, Scheme,
};
use crate::spectral::{discretize, discretize_energy, shift_check, spectrum_report, Grid, SpectralError};
use crate::verification::{
    check_canonical_pairs, check_commutation, check_flat_halfform, check_jacobi, check_nonflat_control,
    check_scheme_gap, check_symmetry, curvature_shift, Status, VerificationReport,
};

/// Random observable pairs checked by `verify`.
pub const COMMUTATION_PAIRS: usize = 10;
/// Random observable triples checked for the Jacobi identity by `verify`.
pub const JACOBI_TRIPLES: usize = 5;
/// Default seed.
pub const DEFAULT_SEED: u64 = 42;
/// Default number of eigenvalues.
pub const DEFAULT_EIGS: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Curvature,
    Quantize,
    Verify,
    Spectrum,
    Shift,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Curvature => "curvature",
            Command::Quantize => "quantize",
            Command::Verify => "verify",
            Command::Spectrum => "spectrum",
            Command::Shift => "shift",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub command: Command,
    pub manifest: PathBuf,
    pub scheme: Scheme,
    pub observable: Option<String>,
    pub hbar: Option<f64>,
    pub grid: Option<Vec<usize>>,
    pub eigs: usize,
    pub seed: u64,
    pub timing: bool,
}

impl RunOptions {
    pub fn new(command: Command, manifest: impl Into<PathBuf>) -> Self {
        RunOptions {
            command,
            manifest: manifest.into(),
            scheme: Scheme::Standard,
            observable: None,
            hbar: None,
            grid: None,
            eigs: DEFAULT_EIGS,
            seed: DEFAULT_SEED,
            timing: false,
        }
    }
}

/// Errors that prevent a report from being produced (exit code 2).
#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error(transparent)]
    Quantization(#[from] QuantizationError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("{0}")]
    Usage(String),
}

/// Parses `N` or `N,M,…`.
pub fn parse_grid(text: &str) -> Result<Vec<usize>, String> {
    text.split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|_| format!("invalid grid size `{s}`")))
        .collect()
}

fn grid_sizes(loaded: &Loaded, requested: Option<&[usize]>) -> Result<Vec<usize>, RunError> {
    let coords = loaded.chart.coordinates();
    match requested {
        None => Ok(coords
            .iter()
            .map(|c| match c.boundary {
                Boundary::Periodic if coords.iter().any(|d| d.boundary == Boundary::Polar) => 64,
                Boundary::Periodic => 64,
                Boundary::Polar | Boundary::Open => 32,
            })
            .collect()),
        Some([n]) => Ok(vec![*n; coords.len()]),
        Some(sizes) if sizes.len() == coords.len() => Ok(sizes.to_vec()),
        Some(sizes) => Err(RunError::Usage(format!(
            "--grid has {} sizes but the chart has {} coordinates",
            sizes.len(),
            coords.len()
        ))),
    }
}

fn claim_line(r: &VerificationReport) -> String {
    let mut line = format!("{} {}", r.status.label(), r.claim);
    if !r.detail.is_empty() {
        line.push_str(&format!(": {}", r.detail));
    }
    if let Some(w) = &r.witness {
        line.push_str(&format!(" (witness: {w})"));
    }
    line
}

fn status_word(passed: bool) -> String {
    if passed { "pass" } else { "fail" }.to_string()
}

/// Executes one command. A returned report may still carry a failing status.
pub fn run(opts: &RunOptions) -> Result<Report, RunError> {
    let start = Instant::now();
    let mut loaded = load_manifest(&opts.manifest)?;
    if let Some(h) = opts.hbar {
        loaded.setup = loaded.setup.clone().with_hbar(h)?;
    }
    loaded.setup = loaded.setup.clone().with_scheme(opts.scheme);
    let (result, summary, passed) = match opts.command {
        Command::Curvature => curvature(&loaded),
        Command::Quantize => quantize_cmd(&loaded, opts)?,
        Command::Verify => verify(&loaded, opts)?,
        Command::Spectrum => spectrum(&loaded, opts)?,
        Command::Shift => shift(&loaded, opts)?,
    };
    let options = json!({
        "scheme": opts.scheme.to_string(),
        "observable": opts.observable,
        "hbar": loaded.setup.hbar,
        "grid": opts.grid,
        "eigs": opts.eigs,
    });
    Ok(Report {
        schema: REPORT_SCHEMA.into(),
        tool: "curvquant".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: opts.command.name().into(),
        manifest: ManifestInfo { name: loaded.manifest.name.clone(), digest: loaded.digest.clone() },
        seed: opts.seed,
        options,
        result,
        status: status_word(passed),
        wall_clock_seconds: opts.timing.then(|| start.elapsed().as_secs_f64()),
        summary,
    })
}

fn curvature(loaded: &Loaded) -> (Value, Vec<String>, bool) {
    let chart = &loaded.chart;
    let n = chart.dim();
    let gam = chart.christoffel();
    let mut symbols = Vec::new();
    for k in 0..n {
        for i in 0..n {
            for j in i..n {
                let g = gam.get(k, i, j);
                if !g.is_zero() {
                    symbols.push(json!({
                        "upper": chart.name(k),
                        "lower": [chart.name(i), chart.name(j)],
                        "value": g.to_string(),
                    }));
                }
            }
        }
    }
    let r = chart.scalar_curvature();
    let constant = crate::spectral::constant_curvature(chart).ok();
    let strings = |m: &[Vec<Expr>]| -> Vec<Vec<String>> { m.iter().map(|r| r.iter().map(|e| e.to_string()).collect()).collect() };
    let result = json!({
        "coordinates": chart.names().to_vec(),
        "metric": strings(chart.metric()),
        "inverse_metric": strings(chart.inverse_metric()),
        "determinant": chart.determinant().to_string(),
        "volume_density": chart.volume_density().to_string(),
        "halfform_density": chart.halfform_density().to_string(),
        "christoffel": symbols,
        "scalar_curvature": r.to_string(),
        "scalar_curvature_constant": constant,
        "charge_form_closed": loaded.charge_closed,
    });
    let mut summary = vec![
        format!("scalar curvature r_g = {r}"),
        format!("volume density sqrt|g| = {}", chart.volume_density()),
    ];
    if let Some(c) = constant {
        summary.push(format!("r_g is constant: {c:.12}"));
    }
    summary.push(format!("{} nonzero Christoffel symbols", symbols_len(&result)));
    (result, summary, true)
}

fn symbols_len(v: &Value) -> usize {
    v["christoffel"].as_array().map_or(0, Vec::len)
}

fn quantize_cmd(loaded: &Loaded, opts: &RunOptions) -> Result<(Value, Vec<String>, bool), RunError> {
    let setup = &loaded.setup;
    match &opts.observable {
        Some(text) => {
            let obs = parse_observable(text, &loaded.chart)?;
            let op = quantize(&obs, setup);
            let term = halfform_term(&obs.field, setup);
            let div = crate::geometry::divergence(&loaded.chart, &obs.field);
            let result = json!({
                "observable": ObservableRecord::from(&obs),
                "scheme": opts.scheme.to_string(),
                "operator": op.to_record(),
                "halfform_term": term.to_string(),
                "divergence": div.to_string(),
            });
            let summary = vec![
                format!("observable f = {}, X = [{}]", obs.base, join(&obs.field.components)),
                format!("operator: {op}"),
                format!("half-form term: {term}"),
                format!("divergence of X: {div}"),
            ];
            Ok((result, summary, true))
        }
        None => {
            let k = opts.scheme.k();
            let op = energy_operator(setup, k);
            let result = json!({
                "energy_operator": op.to_record(),
                "k": k.to_string(),
                "scheme": opts.scheme.to_string(),
            });
            Ok((result, vec![format!("energy operator (k = {k}): {op}")], true))
        }
    }
}

fn join(xs: &[Expr]) -> String {
    xs.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(", ")
}

fn aggregate(claim: &str, reports: Vec<VerificationReport>, detail: String) -> VerificationReport {
    let seeds = reports.iter().flat_map(|r| r.seeds.clone()).collect();
    let bad = reports.iter().find(|r| r.status == Status::Fail).or_else(|| reports.iter().find(|r| r.status != Status::Pass));
    match bad {
        Some(r) => VerificationReport {
            claim: claim.into(),
            status: r.status,
            witness: r.witness.clone(),
            seeds,
            detail,
        },
        None => VerificationReport { claim: claim.into(), status: Status::Pass, witness: None, seeds, detail },
    }
}

fn verify(loaded: &Loaded, opts: &RunOptions) -> Result<(Value, Vec<String>, bool), RunError> {
    let setup = &loaded.setup;
    let chart = &loaded.chart;
    let n = chart.dim();
    let seed = opts.seed;
    let observable = opts.observable.as_deref().map(|t| parse_observable(t, chart)).transpose()?;

    let mut claims = vec![check_flat_halfform(setup, seed), check_canonical_pairs(setup, seed)];

    let pairs: Vec<VerificationReport> = (0..COMMUTATION_PAIRS as u64)
        .map(|i| {
            let s = seed.wrapping_add(1 + i);
            let mut r = rng(s);
            let a = random_observable(chart, &mut r);
            let b = random_observable(chart, &mut r);
            check_commutation(&a, &b, setup, s)
        })
        .collect();
    let mut commutation = aggregate(
        "commutation",
        pairs,
        format!("{COMMUTATION_PAIRS} random observable pairs in schemes std and mod"),
    );
    if let Some(obs) = &observable {
        for i in 0..n {
            let q = Observable::function(n, Expr::sym(chart.name(i)));
            let p = Observable::momentum(VectorField::coordinate(n, i));
            for other in [q, p] {
                let r = check_commutation(obs, &other, setup, seed);
                if r.status != Status::Pass && commutation.status == Status::Pass {
                    commutation = aggregate("commutation", vec![r], commutation.detail.clone());
                }
            }
        }
    }
    claims.push(commutation);

    let triples: Vec<VerificationReport> = (0..JACOBI_TRIPLES as u64)
        .map(|i| {
            let s = seed.wrapping_add(1000 + i);
            let mut r = rng(s);
            let (a, b, c) = (random_observable(chart, &mut r), random_observable(chart, &mut r), random_observable(chart, &mut r));
            check_jacobi(&a, &b, &c, setup, s)
        })
        .collect();
    claims.push(aggregate("jacobi", triples, format!("{JACOBI_TRIPLES} random observable triples")));

    if let Some(obs) = &observable {
        claims.push(check_symmetry(obs, setup, seed));
    }

    let mut gap_set: Vec<Observable> = (0..n).map(|i| Observable::momentum(VectorField::coordinate(n, i))).collect();
    let mut r = rng(seed.wrapping_add(2000));
    gap_set.extend((0..3).map(|_| random_observable(chart, &mut r)));
    gap_set.extend(observable.clone());
    claims.push(check_scheme_gap(&gap_set, setup, seed));

    claims.push(curvature_shift(setup, seed).report);
    if let Some(c) = check_nonflat_control(setup, seed) {
        claims.push(c);
    }

    let passed = claims.iter().all(VerificationReport::passed);
    let summary = claims.iter().map(claim_line).collect();
    let notes = vec![
        "symmetry is formal symmetry; essential self-adjointness is out of scope",
        "nonflat-control demonstrates necessity of flatness on a single example",
    ];
    let result = json!({ "claims": claims, "notes": notes });
    Ok((result, summary, passed))
}

fn spectrum(loaded: &Loaded, opts: &RunOptions) -> Result<(Value, Vec<String>, bool), RunError> {
    let setup = &loaded.setup;
    let sizes = grid_sizes(loaded, opts.grid.as_deref())?;
    let grid = Arc::new(Grid::new(&loaded.chart, &sizes)?);
    let (label, matrix) = match &opts.observable {
        Some(text) => {
            let obs = parse_observable(text, &loaded.chart)?;
            ("observable".to_string(), discretize(&quantize(&obs, setup), &loaded.chart, &grid)?)
        }
        None => (format!("energy k={}", opts.scheme.k()), discretize_energy(setup, opts.scheme.k(), &grid)?),
    };
    let report = spectrum_report(&matrix, opts.eigs, opts.seed)?;
    let summary = vec![
        format!("{label} on grid {:?} ({} unknowns)", sizes, grid.len()),
        format!("eigenvalues: {}", fmt_list(&report.eigenvalues)),
        format!("adjoint defect {:.3e}, hermitian defect {:.3e}", report.adjoint_defect, report.hermitian_defect),
    ];
    let result = json!({ "operator": label, "spectrum": report });
    Ok((result, summary, true))
}

fn fmt_list(xs: &[f64]) -> String {
    xs.iter().map(|v| format!("{:.6}", if v.abs() < 5e-7 { 0.0 } else { *v })).collect::<Vec<_>>().join(", ")
}

fn shift(loaded: &Loaded, opts: &RunOptions) -> Result<(Value, Vec<String>, bool), RunError> {
    let sizes = grid_sizes(loaded, opts.grid.as_deref())?;
    let grid = Arc::new(Grid::new(&loaded.chart, &sizes)?);
    let report = shift_check(&loaded.setup, &grid, opts.eigs, opts.seed)?;
    let passed = report.passed == Some(true);
    let summary = vec![
        format!("grid {:?} ({} unknowns)", sizes, grid.len()),
        format!("eigenvalues k=1/12: {}", fmt_list(&report.eigenvalues)),
        format!("eigenvalues k=0:    {}", fmt_list(report.reference.as_deref().unwrap_or(&[]))),
        format!("deltas: {}", fmt_list(report.deltas.as_deref().unwrap_or(&[]))),
        format!(
            "{} shift: deltas equal hbar^2*r_g/12 = {:.12} within 1e-3*(1+|lambda|)",
            if passed { "PASS" } else { "FAIL" },
            report.expected_delta.unwrap_or(f64::NAN)
        ),
    ];
    let result = json!({ "shift": report });
    Ok((result, summary, passed))
}
