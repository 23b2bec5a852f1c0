//! Reports and their bit-stable serialization.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

/// Report schema identifier.
pub const REPORT_SCHEMA: &str = "curvquant.report/1";
/// Significant digits kept for every floating-point number in a report.
pub const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifestInfo {
    pub name: String,
    pub digest: String,
}

/// Everything a command produces. `summary` feeds the text format only.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema: String,
    pub tool: String,
    pub version: String,
    pub command: String,
    pub manifest: ManifestInfo,
    pub seed: u64,
    pub options: Value,
    pub result: Value,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_clock_seconds: Option<f64>,
    #[serde(skip)]
    pub summary: Vec<String>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.status == "pass"
    }

    /// Canonical JSON: sorted keys, floats rounded to [`SIGNIFICANT_DIGITS`].
    pub fn to_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        round_floats(&mut v);
        let mut s = serde_json::to_string_pretty(&v).expect("value serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "curvquant {} {}: {} [{}]\n",
            self.version, self.command, self.manifest.name, self.status
        );
        out.push_str(&format!("manifest {} seed {}\n", self.manifest.digest, self.seed));
        for line in &self.summary {
            out.push_str(line);
            out.push('\n');
        }
        if let Some(t) = self.wall_clock_seconds {
            out.push_str(&format!("wall clock {t:.3} s\n"));
        }
        out
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.to_json(),
            Format::Text => self.to_text(),
        }
    }
}

/// Rounds `v` to [`SIGNIFICANT_DIGITS`] significant digits; `-0` becomes `0`.
pub fn round_sig(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return if v == 0.0 { 0.0 } else { v };
    }
    let r: f64 = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v).parse().expect("formatted float parses");
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let r = round_sig(n.as_f64().expect("f64 number"));
            *v = serde_json::Number::from_f64(r).map(Value::Number).unwrap_or(Value::Null);
        }
        Value::Array(xs) => xs.iter_mut().for_each(round_floats),
        Value::Object(m) => m.values_mut().for_each(round_floats),
        _ => {}
    }
}

/// Writes the rendered report to `path`, or to standard output for `-`.
pub fn write_report(report: &Report, path: &Path, format: Format) -> std::io::Result<()> {
    let text = report.render(format);
    if path.as_os_str() == "-" {
        let mut out = std::io::stdout().lock();
        out.write_all(text.as_bytes())?;
        out.flush()
    } else {
        std::fs::write(path, text)
    }
}
