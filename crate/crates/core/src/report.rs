//! Experiment reports: rows of measured values, theory references, fitted
//! slopes and verdicts, persisted as JSON and CSV.

use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// Informational row that does not enter the overall verdict.
    Info,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Info => "info",
        }
    }
}

/// Finite values as JSON numbers, others as the strings `inf`, `-inf`, `nan`.
mod lenient {
    use super::*;

    pub fn ser<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&fmt(*v))
        }
    }

    pub fn de<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(f64),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::N(v) => Ok(v),
            Raw::S(s) => {
                parse(&s).ok_or_else(|| serde::de::Error::custom(format!("bad number {s}")))
            }
        }
    }

    pub fn ser_opt<S: Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match v {
            Some(v) => ser(v, s),
            None => s.serialize_none(),
        }
    }

    pub fn de_opt<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<f64>, D::Error> {
        #[derive(Deserialize)]
        struct W(#[serde(deserialize_with = "de")] f64);
        Ok(Option::<W>::deserialize(d)?.map(|w| w.0))
    }
}

pub fn fmt(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else if v != 0.0 && !(1e-4..1e15).contains(&v.abs()) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

fn parse(s: &str) -> Option<f64> {
    match s {
        "nan" => Some(f64::NAN),
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => s.parse().ok(),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReportRow {
    pub case: String,
    /// Operation that produced the measurement.
    pub operation: String,
    /// The estimate being instantiated, written out as a formula.
    pub reference: String,
    pub inputs: String,
    #[serde(serialize_with = "lenient::ser", deserialize_with = "lenient::de")]
    pub measured: f64,
    #[serde(
        serialize_with = "lenient::ser_opt",
        deserialize_with = "lenient::de_opt",
        default
    )]
    pub theory: Option<f64>,
    #[serde(
        serialize_with = "lenient::ser_opt",
        deserialize_with = "lenient::de_opt",
        default
    )]
    pub slope: Option<f64>,
    #[serde(
        serialize_with = "lenient::ser_opt",
        deserialize_with = "lenient::de_opt",
        default
    )]
    pub stderr: Option<f64>,
    #[serde(
        serialize_with = "lenient::ser_opt",
        deserialize_with = "lenient::de_opt",
        default
    )]
    pub tolerance: Option<f64>,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ReportRow {
    pub fn new(case: impl Into<String>, operation: &str, reference: &str) -> Self {
        Self {
            case: case.into(),
            operation: operation.into(),
            reference: reference.into(),
            inputs: String::new(),
            measured: f64::NAN,
            theory: None,
            slope: None,
            stderr: None,
            tolerance: None,
            verdict: Verdict::Info,
            note: None,
        }
    }

    pub fn inputs(mut self, s: impl Into<String>) -> Self {
        self.inputs = s.into();
        self
    }

    pub fn measured(mut self, v: f64) -> Self {
        self.measured = v;
        self
    }

    pub fn theory(mut self, v: f64) -> Self {
        self.theory = Some(v);
        self
    }

    pub fn fit(mut self, slope: f64, stderr: f64) -> Self {
        self.slope = Some(slope);
        self.stderr = Some(stderr);
        self
    }

    pub fn tolerance(mut self, v: f64) -> Self {
        self.tolerance = Some(v);
        self
    }

    pub fn verdict(mut self, v: Verdict) -> Self {
        self.verdict = v;
        self
    }

    pub fn pass_if(self, ok: bool) -> Self {
        self.verdict(Verdict::from_bool(ok))
    }

    pub fn note(mut self, s: impl Into<String>) -> Self {
        self.note = Some(s.into());
        self
    }

    /// Pass when the fitted slope is within `tol` of `theory`.
    pub fn slope_check(self, slope: f64, stderr: f64, theory: f64, tol: f64) -> Self {
        let ok = slope.is_finite() && (slope - theory).abs() <= tol;
        self.measured(slope)
            .fit(slope, stderr)
            .theory(theory)
            .tolerance(tol)
            .pass_if(ok)
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Metadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub runtime_seconds: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EstimateReport {
    pub scenario: String,
    pub rows: Vec<ReportRow>,
    #[serde(default)]
    pub metadata: Metadata,
}

pub const CSV_HEADER: [&str; 8] = [
    "scenario",
    "case",
    "input_params",
    "measured",
    "theory",
    "slope",
    "stderr",
    "verdict",
];

impl EstimateReport {
    pub fn new(scenario: impl Into<String>) -> Self {
        Self {
            scenario: scenario.into(),
            rows: Vec::new(),
            metadata: Metadata::default(),
        }
    }

    pub fn push(&mut self, row: ReportRow) {
        self.rows.push(row);
    }

    pub fn extend(&mut self, other: EstimateReport) {
        self.rows.extend(other.rows);
        self.metadata.notes.extend(other.metadata.notes);
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.metadata.notes.push(s.into());
    }

    /// No row failed.
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.verdict != Verdict::Fail)
    }

    pub fn row(&self, case: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.case == case)
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER)?;
        let opt = |v: Option<f64>| v.map(fmt).unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                self.scenario.clone(),
                r.case.clone(),
                r.inputs.clone(),
                fmt(r.measured),
                opt(r.theory),
                opt(r.slope),
                opt(r.stderr),
                r.verdict.as_str().to_string(),
            ])?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| std::io::Error::other(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()?)?;
        Ok(())
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    /// Writes `report.json` and `report.csv` into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.write_json(&dir.join("report.json"))?;
        self.write_csv(&dir.join("report.csv"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_header_and_nonfinite_values() {
        let mut r = EstimateReport::new("demo");
        r.push(
            ReportRow::new("a", "op", "x ≤ N")
                .measured(f64::INFINITY)
                .theory(1.0)
                .verdict(Verdict::Fail),
        );
        let csv = r.to_csv_string().unwrap();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "scenario,case,input_params,measured,theory,slope,stderr,verdict"
        );
        assert_eq!(lines.next().unwrap(), "demo,a,,inf,1,,,fail");
        let j = serde_json::to_string(&r).unwrap();
        assert!(j.contains("\"inf\""));
        let back: EstimateReport = serde_json::from_str(&j).unwrap();
        assert!(back.rows[0].measured.is_infinite());
        assert!(!back.all_pass());
    }
}
