//! Text and JSON rendering.

use std::fmt::Write as _;

use serde_json::{Map, Value};

/// `%.12g`: 12 significant digits, trailing zeros dropped, exponent form
/// outside `[1e-4, 1e12)`.
pub fn fmt_g(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0" } else { "0" }.into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..12).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        trim_zeros(&format!("{x:.*}", (11 - exp) as usize)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn join_labels(labels: &[usize]) -> String {
    labels
        .iter()
        .map(|l| l.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

/// One command's result: a table, `# key value` summary lines and the same
/// data as a JSON object.
#[derive(Default)]
pub struct Report {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
    summary: Vec<(String, String)>,
    json: Map<String, Value>,
}

impl Report {
    pub fn new(header: Vec<&'static str>) -> Self {
        Report {
            header,
            ..Report::default()
        }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        self.rows.push(cells);
    }

    pub fn summary(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.summary.push((key.into(), value.into()));
    }

    pub fn json(&mut self, key: &str, value: Value) {
        self.json.insert(key.to_string(), value);
    }

    pub fn render_tsv(&self) -> String {
        let mut out = String::new();
        if !self.header.is_empty() {
            out.push_str(&self.header.join("\t"));
            out.push('\n');
        }
        for r in &self.rows {
            out.push_str(&r.join("\t"));
            out.push('\n');
        }
        for (k, v) in &self.summary {
            let _ = writeln!(out, "# {k}\t{v}");
        }
        out
    }

    pub fn render_json(&self) -> String {
        let mut s =
            serde_json::to_string_pretty(&Value::Object(self.json.clone())).expect("serializable");
        s.push('\n');
        s
    }
}
