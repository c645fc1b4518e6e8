//! Report document shared by all subcommands.

use serde::Serialize;

use crate::args::Format;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Meta {
    pub version: &'static str,
    pub command: &'static str,
    /// Subcommand flags; thread count and output options are excluded so
    /// the document does not depend on them.
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    /// Seconds since the Unix epoch.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

/// One reported number with its uncertainty and formula id.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultItem {
    pub name: String,
    /// `null` when the quantity is infinite or unavailable.
    pub value: Option<f64>,
    /// Error radius or standard error; `null` when exact or unknown.
    pub error: Option<f64>,
    pub units: &'static str,
    /// Formula or estimator the number comes from.
    pub paper_anchor: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl ResultItem {
    pub fn new(name: impl Into<String>, value: f64, error: Option<f64>, units: &'static str, anchor: &'static str) -> Self {
        Self {
            name: name.into(),
            value: finite(value),
            error: error.and_then(finite),
            units,
            paper_anchor: anchor,
            exact: None,
        }
    }

    pub fn missing(name: impl Into<String>, units: &'static str, anchor: &'static str) -> Self {
        Self {
            name: name.into(),
            value: None,
            error: None,
            units,
            paper_anchor: anchor,
            exact: None,
        }
    }

    pub fn interval(name: impl Into<String>, i: erw_core::Interval, units: &'static str, anchor: &'static str) -> Self {
        Self::new(name, i.mid(), Some(i.radius()), units, anchor)
    }

    pub fn with_exact(mut self, exact: impl ToString) -> Self {
        self.exact = Some(exact.to_string());
        self
    }
}

/// Flat table used for CSV output of grid-shaped results.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub meta: Meta,
    pub results: Vec<ResultItem>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(skip)]
    pub table: Option<Table>,
}

fn cell(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl Report {
    pub fn render(&self, format: Format) -> Result<String, String> {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(self).map_err(|e| e.to_string())?;
                s.push('\n');
                Ok(s)
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                let io = |e: csv::Error| e.to_string();
                match &self.table {
                    Some(t) => {
                        w.write_record(&t.header).map_err(io)?;
                        for row in &t.rows {
                            w.write_record(row).map_err(io)?;
                        }
                    }
                    None => {
                        w.write_record(["name", "value", "error", "units", "paper_anchor", "exact"])
                            .map_err(io)?;
                        for r in &self.results {
                            w.write_record([
                                r.name.as_str(),
                                &cell(r.value),
                                &cell(r.error),
                                r.units,
                                r.paper_anchor,
                                r.exact.as_deref().unwrap_or(""),
                            ])
                            .map_err(io)?;
                        }
                    }
                }
                let bytes = w.into_inner().map_err(|e| e.to_string())?;
                String::from_utf8(bytes).map_err(|e| e.to_string())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        Report {
            meta: Meta {
                version: "0",
                command: "greens",
                config: serde_json::json!({"d": 8}),
                seed: None,
                timestamp: None,
            },
            results: vec![
                ResultItem::new("x", 1.5, Some(0.25), "u", "a"),
                ResultItem::new("inf", f64::INFINITY, None, "u", "a"),
            ],
            verdict: None,
            notes: vec![],
            table: None,
        }
    }

    #[test]
    fn json_shape() {
        let v: serde_json::Value = serde_json::from_str(&sample().render(Format::Json).unwrap()).unwrap();
        assert!(v["meta"].get("timestamp").is_none());
        assert_eq!(v["results"][0]["value"], 1.5);
        assert!(v["results"][1]["value"].is_null());
        assert!(v.get("verdict").is_none());
    }

    #[test]
    fn csv_projection() {
        let s = sample().render(Format::Csv).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "name,value,error,units,paper_anchor,exact");
        assert_eq!(lines[1], "x,1.5,0.25,u,a,");
        assert_eq!(lines[2], "inf,,,u,a,");
    }
}
