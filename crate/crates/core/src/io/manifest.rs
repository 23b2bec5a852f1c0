//! JSON manifests describing a chart, potentials and constants.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::expr::{parse, Bindings, Expr, ParseError};
use crate::geometry::{Boundary, Coordinate, GeometryError, MetricChart, OneForm};
use crate::quantization::{QuantizationError, QuantizationSetup};

/// Schema identifier accepted by [`load_manifest`].
pub const MANIFEST_SCHEMA: &str = "curvquant.manifest/1";

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("schema violation at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("cannot parse expression at `{field}` (offset {offset}): {message}")]
    Expression { field: String, offset: usize, message: String },
    #[error("invalid manifest: {0}")]
    Invalid(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Quantization(#[from] QuantizationError),
}

/// An interval endpoint: a number or a constant expression such as `pi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Bound {
    Number(f64),
    Expr(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoordinateSpec {
    pub name: String,
    pub min: Bound,
    pub max: Bound,
    #[serde(default = "default_boundary")]
    pub boundary: Boundary,
}

fn default_boundary() -> Boundary {
    Boundary::Open
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub schema: String,
    pub name: String,
    pub coordinates: Vec<CoordinateSpec>,
    pub metric: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub magnetic_potential: Option<Vec<String>>,
    /// `hbar` (default 1) and named numeric parameters.
    #[serde(default)]
    pub constants: BTreeMap<String, f64>,
    /// Keep parameters as symbols instead of substituting their values.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub symbolic_parameters: bool,
}

/// A validated manifest together with the objects built from it.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub manifest: Manifest,
    pub chart: Arc<MetricChart>,
    pub setup: QuantizationSetup,
    /// `sha256:` digest of the manifest file bytes.
    pub digest: String,
    /// Whether the charge form `B = dA` is closed; always true for a global potential.
    pub charge_closed: bool,
}

fn parse_field(text: &str, field: &str) -> Result<Expr, ManifestError> {
    parse(text).map_err(|e: ParseError| ManifestError::Expression {
        field: field.to_string(),
        offset: e.offset(),
        message: e.to_string(),
    })
}

fn digest_bytes(bytes: &[u8]) -> String {
    let hash = Sha256::digest(bytes);
    let hex: String = hash.iter().map(|b| format!("{b:02x}")).collect();
    format!("sha256:{hex}")
}

/// Reads and validates a manifest file.
pub fn load_manifest(path: &Path) -> Result<Loaded, ManifestError> {
    let bytes = std::fs::read(path).map_err(|source| ManifestError::Io { path: path.display().to_string(), source })?;
    load_manifest_bytes(&bytes)
}

pub fn load_manifest_bytes(bytes: &[u8]) -> Result<Loaded, ManifestError> {
    let mut de = serde_json::Deserializer::from_slice(bytes);
    let manifest: Manifest = serde_path_to_error::deserialize(&mut de).map_err(|e| ManifestError::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    de.end().map_err(|e| ManifestError::Schema { path: ".".into(), message: e.to_string() })?;
    let mut loaded = build(&manifest)?;
    loaded.digest = digest_bytes(bytes);
    Ok(loaded)
}

/// Builds chart and setup from an already deserialized manifest.
pub fn build(manifest: &Manifest) -> Result<Loaded, ManifestError> {
    if manifest.schema != MANIFEST_SCHEMA {
        return Err(ManifestError::Schema {
            path: "schema".into(),
            message: format!("expected `{MANIFEST_SCHEMA}`, found `{}`", manifest.schema),
        });
    }
    let n = manifest.coordinates.len();
    if n == 0 {
        return Err(ManifestError::Schema { path: "coordinates".into(), message: "at least one coordinate is required".into() });
    }
    if manifest.metric.len() != n {
        return Err(ManifestError::Schema {
            path: "metric".into(),
            message: format!("expected {n} rows, found {}", manifest.metric.len()),
        });
    }
    for (r, row) in manifest.metric.iter().enumerate() {
        if row.len() != n {
            return Err(ManifestError::Schema {
                path: format!("metric[{r}]"),
                message: format!("expected {n} entries, found {}", row.len()),
            });
        }
    }
    let hbar = manifest.constants.get("hbar").copied().unwrap_or(1.0);
    let params: BTreeMap<String, f64> =
        manifest.constants.iter().filter(|(k, _)| k.as_str() != "hbar").map(|(k, v)| (k.clone(), *v)).collect();
    for (k, v) in &params {
        if !v.is_finite() {
            return Err(ManifestError::Schema { path: format!("constants.{k}"), message: "value must be finite".into() });
        }
    }
    let substitution: BTreeMap<String, Expr> = params.iter().map(|(k, v)| (k.clone(), Expr::real(*v))).collect();
    let bind = |e: Expr| if manifest.symbolic_parameters { e } else { e.substitute(&substitution).simplify() };
    let numeric: Bindings = params.iter().map(|(k, v)| (k.clone(), num_complex::Complex64::new(*v, 0.0))).collect();

    let mut coords = Vec::with_capacity(n);
    for (i, c) in manifest.coordinates.iter().enumerate() {
        let bound = |b: &Bound, which: &str| -> Result<f64, ManifestError> {
            let field = format!("coordinates[{i}].{which}");
            match b {
                Bound::Number(v) => Ok(*v),
                Bound::Expr(s) => {
                    let e = parse_field(s, &field)?;
                    let v = e.eval(&numeric).map_err(|err| ManifestError::Schema { path: field.clone(), message: err.to_string() })?;
                    if v.im != 0.0 {
                        return Err(ManifestError::Schema { path: field, message: "bound must be real".into() });
                    }
                    Ok(v.re)
                }
            }
        };
        let (lo, hi) = (bound(&c.min, "min")?, bound(&c.max, "max")?);
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(ManifestError::Schema {
                path: format!("coordinates[{i}]"),
                message: format!("empty interval [{lo}, {hi}]"),
            });
        }
        coords.push(Coordinate::new(&c.name, lo, hi, c.boundary));
    }
    let mut metric = Vec::with_capacity(n);
    for (r, row) in manifest.metric.iter().enumerate() {
        let mut out = Vec::with_capacity(n);
        for (c, text) in row.iter().enumerate() {
            out.push(bind(parse_field(text, &format!("metric[{r}][{c}]"))?));
        }
        metric.push(out);
    }
    let chart_params = if manifest.symbolic_parameters { params.clone() } else { BTreeMap::new() };
    let chart = Arc::new(MetricChart::with_parameters(coords, metric, chart_params)?);
    let mut setup = QuantizationSetup::new(chart.clone()).with_hbar(hbar)?;
    if let Some(v) = &manifest.potential {
        setup = setup.with_potential(bind(parse_field(v, "potential")?))?;
    }
    if let Some(a) = &manifest.magnetic_potential {
        if a.len() != n {
            return Err(ManifestError::Schema {
                path: "magnetic_potential".into(),
                message: format!("expected {n} components, found {}", a.len()),
            });
        }
        let comps = a
            .iter()
            .enumerate()
            .map(|(i, s)| parse_field(s, &format!("magnetic_potential[{i}]")).map(bind))
            .collect::<Result<Vec<_>, _>>()?;
        setup = setup.with_magnetic(OneForm::new(comps))?;
    }
    let charge_closed = setup.charge_form().is_closed(&chart, 0xb);
    if !charge_closed {
        return Err(ManifestError::Invalid("charge form dA is not closed".into()));
    }
    Ok(Loaded { manifest: manifest.clone(), chart, setup, digest: String::new(), charge_closed })
}

/// Digest of the chart content: coordinates, simplified metric and parameters.
pub fn chart_digest(chart: &MetricChart) -> String {
    let mut text = String::new();
    for c in chart.coordinates() {
        text.push_str(&format!("{}:{:?}:{:?}:{:?};", c.name, c.lo, c.hi, c.boundary));
    }
    for row in chart.metric() {
        for e in row {
            text.push_str(&e.to_string());
            text.push(';');
        }
    }
    for (k, v) in chart.parameters() {
        text.push_str(&format!("{k}={v:?};"));
    }
    digest_bytes(text.as_bytes())
}

impl Manifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPHERE: &str = r#"{
        "schema": "curvquant.manifest/1",
        "name": "sphere",
        "coordinates": [
            {"name": "theta", "min": 0, "max": "pi", "boundary": "polar"},
            {"name": "phi", "min": 0, "max": "2*pi", "boundary": "periodic"}
        ],
        "metric": [["R^2", "0"], ["0", "R^2*sin(theta)^2"]],
        "constants": {"R": 2}
    }"#;

    #[test]
    fn loads_sphere_with_parameter() {
        let l = load_manifest_bytes(SPHERE.as_bytes()).unwrap();
        assert!(l.chart.same(l.chart.scalar_curvature(), &Expr::ratio(1, 2), 1));
        assert!(l.digest.starts_with("sha256:"));
        assert!(l.charge_closed);
    }

    #[test]
    fn symbolic_parameter_is_kept() {
        let text = SPHERE.replace("\"constants\"", "\"symbolic_parameters\": true, \"constants\"");
        let l = load_manifest_bytes(text.as_bytes()).unwrap();
        assert!(l.chart.scalar_curvature().depends_on("R"));
        let want = parse("2/R^2").unwrap();
        assert!(l.chart.same(l.chart.scalar_curvature(), &want, 2));
    }

    #[test]
    fn bad_metric_entry_cites_position() {
        let text = SPHERE.replace("R^2*sin(theta)^2", "sin(");
        match load_manifest_bytes(text.as_bytes()) {
            Err(ManifestError::Expression { field, .. }) => assert_eq!(field, "metric[1][1]"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_field_reports_path() {
        let text = SPHERE.replace("\"boundary\": \"polar\"", "\"boundary\": \"polar\", \"colour\": 1");
        match load_manifest_bytes(text.as_bytes()) {
            Err(ManifestError::Schema { path, .. }) => assert_eq!(path, "coordinates[0].colour"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn undeclared_parameter_rejected() {
        let text = SPHERE.replace("\"constants\": {\"R\": 2}", "\"constants\": {}");
        assert!(matches!(
            load_manifest_bytes(text.as_bytes()),
            Err(ManifestError::Geometry(GeometryError::UnknownSymbol(s))) if s == "R"
        ));
    }

    #[test]
    fn round_trip_keeps_chart_digest() {
        let l = load_manifest_bytes(SPHERE.as_bytes()).unwrap();
        let again = load_manifest_bytes(l.manifest.to_json().as_bytes()).unwrap();
        assert_eq!(chart_digest(&l.chart), chart_digest(&again.chart));
    }
}
