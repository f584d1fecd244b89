//! Serialization helpers shared by the command-line front end and the C API.
//!
//! Every floating-point number is written with 17 significant digits
//! (`{:.16e}`), so a summary read back parses to the identical `f64`.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::error::Result;
use crate::report::CheckReport;

/// Environment variable naming the default artifact directory.
pub const OUT_ENV: &str = "BERNOULLI_LAB_OUT";

/// Formats one float with 17 significant digits. Non-finite values have no
/// JSON spelling and become `null`.
pub fn format_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".to_owned()
    }
}

/// Compact JSON text with every float at full precision.
pub fn to_json(value: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, value, None, 0);
    out
}

/// Indented JSON text with every float at full precision.
pub fn to_json_pretty(value: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, value, Some(2), 0);
    out
}

fn newline(out: &mut String, indent: Option<usize>, depth: usize) {
    if let Some(w) = indent {
        out.push('\n');
        out.extend(std::iter::repeat(' ').take(w * depth));
    }
}

fn write_value(out: &mut String, value: &Value, indent: Option<usize>, depth: usize) {
    match value {
        Value::Null | Value::Bool(_) | Value::String(_) => out.push_str(&value.to_string()),
        Value::Number(n) => {
            if n.is_f64() {
                out.push_str(&format_f64(n.as_f64().unwrap_or(f64::NAN)));
            } else {
                let _ = write!(out, "{n}");
            }
        }
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                newline(out, indent, depth + 1);
                write_value(out, item, indent, depth + 1);
            }
            newline(out, indent, depth);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push('{');
            for (i, (k, v)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                newline(out, indent, depth + 1);
                out.push_str(&Value::String(k.clone()).to_string());
                out.push(':');
                if indent.is_some() {
                    out.push(' ');
                }
                write_value(out, v, indent, depth + 1);
            }
            newline(out, indent, depth);
            out.push('}');
        }
    }
}

/// Output directory: the explicit flag, else `$BERNOULLI_LAB_OUT`, else none.
pub fn resolve_out_dir(flag: Option<&Path>) -> Option<PathBuf> {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
}

/// Creates `dir/name` (and `dir`) and hands a buffered writer to `body`.
pub fn write_artifact<F>(dir: &Path, name: &str, body: F) -> Result<PathBuf>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<()>,
{
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut w = BufWriter::new(File::create(&path)?);
    body(&mut w)?;
    w.flush()?;
    Ok(path)
}

fn csv_cell(v: &Value) -> String {
    let raw = match v {
        Value::Number(n) if n.is_f64() => return format_f64(n.as_f64().unwrap_or(f64::NAN)),
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => to_json(other),
    };
    if raw.contains([',', '"', '\n']) {
        format!("\"{}\"", raw.replace('"', "\"\""))
    } else {
        raw
    }
}

/// Margins of one report as CSV: `margin,value,tolerance,rule,pass`.
pub fn write_margins_csv<W: Write>(report: &CheckReport, mut w: W) -> Result<()> {
    writeln!(w, "margin,value,tolerance,rule,pass")?;
    for m in &report.margins {
        let rule = serde_json::to_value(m.rule)?;
        writeln!(
            w,
            "{},{},{},{},{}",
            m.name,
            format_f64(m.value),
            format_f64(m.tolerance),
            rule.as_str().unwrap_or_default(),
            m.pass
        )?;
    }
    Ok(())
}

/// The report's table rows as CSV; the header is the key set of the first
/// row, in its order. Returns `false` without writing when there are no rows.
pub fn write_table_csv<W: Write>(report: &CheckReport, mut w: W) -> Result<bool> {
    let Some(Value::Object(first)) = report.table.first() else {
        return Ok(false);
    };
    let keys: Vec<&String> = first.keys().collect();
    writeln!(w, "{}", keys.iter().map(|k| k.as_str()).collect::<Vec<_>>().join(","))?;
    for row in &report.table {
        let cells: Vec<String> = keys
            .iter()
            .map(|k| csv_cell(row.get(k.as_str()).unwrap_or(&Value::Null)))
            .collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(true)
}

/// Writes `<index>_<name>.csv` (margins) and, for reports that carry a
/// table, `<index>_<name>_table.csv` into `dir`. Returns the paths written.
pub fn write_report_csvs(dir: &Path, reports: &[CheckReport]) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for (i, r) in reports.iter().enumerate() {
        let stem = format!("{i:03}_{}", r.name);
        paths.push(write_artifact(dir, &format!("{stem}.csv"), |w| write_margins_csv(r, w))?);
        if !r.table.is_empty() {
            paths.push(write_artifact(dir, &format!("{stem}_table.csv"), |w| {
                write_table_csv(r, w).map(|_| ())
            })?);
        }
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::Rule;
    use serde_json::json;

    #[test]
    fn floats_round_trip_with_seventeen_digits() {
        let e = std::f64::consts::E;
        assert_eq!(format_f64(e), "2.7182818284590451e0");
        let text = to_json(&json!({"lambda": e, "n": 3, "tag": "a,b", "v": [0.1, f64::NAN]}));
        assert_eq!(text, r#"{"lambda":2.7182818284590451e0,"n":3,"tag":"a,b","v":[1.0000000000000001e-1,null]}"#);
        let back: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["lambda"].as_f64().unwrap(), e);
        let pretty = to_json_pretty(&json!({"a": {"b": []}}));
        assert_eq!(pretty, "{\n  \"a\": {\n    \"b\": []\n  }\n}");
    }

    #[test]
    fn report_csvs() {
        let r = CheckReport::builder("demo", json!({}))
            .margin("m", 0.5, 1e-3, Rule::NonNegative)
            .row(json!({"n": 1, "label": "x,y", "v": 0.25}))
            .finish();
        let mut buf = Vec::new();
        write_margins_csv(&r, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "margin,value,tolerance,rule,pass\nm,5.0000000000000000e-1,1.0000000000000000e-3,non_negative,true\n"
        );
        let mut buf = Vec::new();
        assert!(write_table_csv(&r, &mut buf).unwrap());
        assert_eq!(String::from_utf8(buf).unwrap(), "label,n,v\n\"x,y\",1,2.5000000000000000e-1\n");
        let dir = tempfile::tempdir().unwrap();
        let paths = write_report_csvs(dir.path(), &[r]).unwrap();
        assert_eq!(paths.len(), 2);
        assert!(paths[1].ends_with("000_demo_table.csv"));
    }
}
