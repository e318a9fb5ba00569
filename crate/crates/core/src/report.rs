//! Bit-stable JSON, CSV and text output.
//!
//! Floats are rounded to 12 significant digits before printing and object
//! keys are written in sorted order, so identical results give identical
//! bytes. Non-finite numbers become `null`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde_json::Value;

use crate::bundle::{FiberSeries, ObstructionReport};
use crate::cauchy::ChartField;
use crate::cone::SolutionReport;
use crate::cp1::{BundleForm, BundleSection};
use crate::error::{Error, Result};
use crate::scalar::{Real, C};

/// `x` rounded to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// Fixed 12-digit scientific rendering used in CSV and text output.
pub fn fmt12(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.11e}")
    } else {
        format!("{x}")
    }
}

pub fn num<T: Real>(x: T) -> Value {
    let x = round12(x.to_f64_lossy());
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
}

/// `[re, im]`.
pub fn complex<T: Real>(z: C<T>) -> Value {
    Value::Array(vec![num(z.re), num(z.im)])
}

pub fn complex_list<T: Real>(zs: &[C<T>]) -> Value {
    Value::Array(zs.iter().map(|&z| complex(z)).collect())
}

/// Object with keys in sorted order.
pub fn object<K: Into<String>>(entries: impl IntoIterator<Item = (K, Value)>) -> Value {
    let map: BTreeMap<String, Value> = entries.into_iter().map(|(k, v)| (k.into(), v)).collect();
    Value::Object(map.into_iter().collect())
}

/// Pretty JSON with sorted keys and two-space indent, newline terminated.
pub fn to_json(v: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, v, 0);
    out.push('\n');
    out
}

fn write_value(out: &mut String, v: &Value, depth: usize) {
    let pad = |d: usize| "  ".repeat(d);
    match v {
        Value::Null | Value::Bool(_) | Value::String(_) => out.push_str(&v.to_string()),
        Value::Number(n) => match n.as_f64() {
            Some(x) if !(n.is_i64() || n.is_u64()) => {
                let _ = write!(out, "{}", Value::from(round12(x)));
            }
            _ => out.push_str(&n.to_string()),
        },
        Value::Array(items) => {
            if items.iter().all(|x| !x.is_array() && !x.is_object()) {
                out.push('[');
                for (i, x) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_value(out, x, depth);
                }
                out.push(']');
                return;
            }
            out.push_str("[\n");
            for (i, x) in items.iter().enumerate() {
                out.push_str(&pad(depth + 1));
                write_value(out, x, depth + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(depth));
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let sorted: BTreeMap<&String, &Value> = map.iter().collect();
            out.push_str("{\n");
            for (i, (k, x)) in sorted.iter().enumerate() {
                out.push_str(&pad(depth + 1));
                out.push_str(&Value::String((*k).clone()).to_string());
                out.push_str(": ");
                write_value(out, x, depth + 1);
                out.push_str(if i + 1 < sorted.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(depth));
            out.push('}');
        }
    }
}

/// Comma-separated table with a header row.
pub fn csv_table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(headers).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

/// Right-aligned columns separated by two spaces.
pub fn text_table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cells: &mut dyn Iterator<Item = &str>| {
        let parts: Vec<String> = cells.zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
        parts.join("  ") + "\n"
    };
    let mut out = line(&mut headers.iter().copied());
    for r in rows {
        out.push_str(&line(&mut r.iter().map(String::as_str)));
    }
    out
}

fn field_rows<T: Real>(chart: &str, f: &ChartField<T>, rows: &mut Vec<Vec<String>>) {
    let g = f.grid;
    for i in 0..g.n_r() {
        for j in 0..g.n_theta() {
            let v = f.values[g.index(i, j)];
            rows.push(vec![
                chart.to_string(),
                i.to_string(),
                j.to_string(),
                fmt12(v.re.to_f64_lossy()),
                fmt12(v.im.to_f64_lossy()),
            ]);
        }
    }
}

fn two_chart_csv<T: Real>(m: i64, a: &ChartField<T>, b: &ChartField<T>) -> String {
    let g = a.grid;
    let header = object([
        ("R", num(g.radius())),
        ("m", Value::from(m)),
        ("n_r", Value::from(g.n_r())),
        ("n_theta", Value::from(g.n_theta())),
    ]);
    let mut rows = Vec::new();
    field_rows("A", a, &mut rows);
    field_rows("B", b, &mut rows);
    format!("# {}\n{}", serde_json::to_string(&header).expect("plain json"), csv_table(&["chart", "i", "j", "re", "im"], &rows))
}

/// Node values of both charts, after a `# {json}` grid header.
pub fn bundle_form_csv<T: Real>(form: &BundleForm<T>) -> String {
    two_chart_csv(form.m, &form.g_a, &form.g_b)
}

pub fn bundle_section_csv<T: Real>(section: &BundleSection<T>) -> String {
    two_chart_csv(section.m, &section.f_a, &section.f_b)
}

/// File name of the `μ` coefficient in a series directory.
pub fn coefficient_file(mu: i64) -> String {
    if mu < 0 {
        format!("coeff_m{}.csv", -mu)
    } else {
        format!("coeff_{mu}.csv")
    }
}

/// Index of a [`FiberSeries`]; the coefficients go to [`coefficient_file`].
pub fn fiber_series_index<T: Real>(series: &FiberSeries<T>) -> Value {
    let files = object(series.mus().map(|mu| (mu.to_string(), Value::from(coefficient_file(mu)))));
    object([
        ("e", Value::from(series.e)),
        ("k", Value::from(series.k)),
        ("mu_max", Value::from(series.mu_max)),
        ("tail_bound", num(series.tail_bound)),
        ("coefficients", files),
    ])
}

/// Writes `index.json` and one CSV per coefficient into `dir`.
pub fn write_fiber_series<T: Real>(series: &FiberSeries<T>, dir: &Path) -> Result<()> {
    write_file(&dir.join("index.json"), &to_json(&fiber_series_index(series)))?;
    for (mu, c) in series.mus().zip(&series.coeffs) {
        write_file(&dir.join(coefficient_file(mu)), &bundle_form_csv(c))?;
    }
    Ok(())
}

/// `{"entries": {μ: [[re, im], …]}, "clean", "tolerance", "max_abs"}`.
pub fn obstruction_json<T: Real>(report: &ObstructionReport<T>) -> Value {
    let entries = object(report.entries.iter().map(|(mu, c)| (mu.to_string(), complex_list(&c.values))));
    object([
        ("entries", entries),
        ("clean", Value::from(report.clean)),
        ("tolerance", num(report.tolerance)),
        ("max_abs", num(report.max_abs())),
    ])
}

/// Numbers of a [`SolutionReport`]; the solution itself is not serialized.
pub fn solution_json<T: Real>(report: &SolutionReport<T>) -> Value {
    let osc = Value::Array(report.oscillation.iter().map(|&(d, o)| Value::Array(vec![num(d), num(o)])).collect());
    object([
        ("l2_in", num(report.l2_in)),
        ("l2_out", num(report.l2_out)),
        ("sup_in", num(report.sup_in)),
        ("sup_out", num(report.sup_out)),
        ("holder_quotient", num(report.holder_quotient)),
        ("residual", num(report.residual)),
        ("weak_residual", num(report.weak_residual)),
        ("tolerance", num(report.tolerance)),
        ("constant_estimate", num(report.constant_estimate)),
        ("tail_bound", num(report.tail_bound)),
        ("obstruction", obstruction_json(&report.obstruction)),
        ("oscillation", osc),
        ("oscillation_exponent", report.oscillation_exponent.map(num).unwrap_or(Value::Null)),
        ("accepted", Value::from(report.accepted())),
    ])
}

/// Creates parent directories as needed.
pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    let io = |e: std::io::Error| Error::Io { path: path.display().to_string(), message: e.to_string() };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io)?;
    }
    std::fs::write(path, contents).map_err(io)
}

pub fn obstruction_table_json(table: &crate::obstruction::ObstructionTable) -> Value {
    serde_json::to_value(table).expect("table serializes")
}
