use std::io::{self, Write};
use std::process;
use std::time::Instant;

use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

pub const SCHEMA: &str = "omegadist/1";

#[derive(Serialize)]
pub struct Row {
    pub m: i64,
    pub value: f64,
}

#[derive(Serialize, Default)]
pub struct ErrorBudget {
    pub prime_tail: Option<f64>,
    pub powerful_tail: Option<f64>,
    pub mass_beyond_m_max: Option<f64>,
}

#[derive(Serialize)]
pub struct VerifyRow {
    pub m: i64,
    pub count: u64,
    pub empirical: f64,
    pub reference: f64,
    pub abs_dev: f64,
    pub c_hat: f64,
}

#[derive(Serialize)]
pub struct VerifyBlock {
    pub c_hat_threshold: f64,
    pub report_only: bool,
    pub passed: bool,
    pub rows: Vec<VerifyRow>,
}

/// The versioned JSON document; field order is part of the format.
#[derive(Serialize)]
struct Document<'a> {
    schema: &'static str,
    command: &'static str,
    params: &'a Map<String, Value>,
    results: &'a [Row],
    error_budget: &'a ErrorBudget,
    prime_limit: Option<u64>,
    precision_digits: u32,
    runtime_ms: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    verify: &'a Option<VerifyBlock>,
}

/// Everything a command produces; rendering picks what each format needs.
pub struct Emission {
    pub command: &'static str,
    pub params: Map<String, Value>,
    pub results: Vec<Row>,
    pub budget: ErrorBudget,
    pub prime_limit: Option<u64>,
    pub precision_digits: u32,
    pub table: String,
    pub verify: Option<VerifyBlock>,
}

pub fn emit(e: &Emission, format: Format, started: Instant) {
    match format {
        Format::Table => write_stdout(&e.table),
        Format::Csv => {
            let mut out = String::from("m,value\n");
            for r in &e.results {
                out.push_str(&format!("{},{:e}\n", r.m, r.value));
            }
            write_stdout(&out);
        }
        Format::Json => {
            let doc = Document {
                schema: SCHEMA,
                command: e.command,
                params: &e.params,
                results: &e.results,
                error_budget: &e.budget,
                prime_limit: e.prime_limit,
                precision_digits: e.precision_digits,
                runtime_ms: started.elapsed().as_millis() as u64,
                verify: &e.verify,
            };
            let mut text = serde_json::to_string_pretty(&doc).expect("document serializes");
            text.push('\n');
            write_stdout(&text);
        }
    }
}

/// Writes to stdout, treating a closed pipe as a normal early exit so the
/// tool composes with head and friends.
fn write_stdout(s: &str) {
    let mut out = io::stdout().lock();
    if let Err(err) = out.write_all(s.as_bytes()).and_then(|()| out.flush()) {
        if err.kind() == io::ErrorKind::BrokenPipe {
            process::exit(0);
        }
        eprintln!("error: cannot write to stdout: {err}");
        process::exit(1);
    }
}

/// Density-style value for tables: fixed point down to 1e-9, scientific
/// below that so deep coefficients stay legible.
pub fn fmt_value(v: f64) -> String {
    if v == 0.0 || v.abs() >= 1e-9 {
        format!("{v:.9}")
    } else {
        format!("{v:.6e}")
    }
}

pub fn budget_lines(out: &mut String, e: &Emission) {
    if let Some(limit) = e.prime_limit {
        out.push_str(&format!("prime_limit        {limit}\n"));
    }
    out.push_str(&format!("precision_digits   {}\n", e.precision_digits));
    if let Some(t) = e.budget.prime_tail {
        out.push_str(&format!("prime_tail         {t:.3e}\n"));
    }
    if let Some(t) = e.budget.powerful_tail {
        out.push_str(&format!("powerful_tail      {t:.3e}\n"));
    }
    if let Some(t) = e.budget.mass_beyond_m_max {
        out.push_str(&format!("mass_beyond_m_max  {t:.3e}\n"));
    }
}
