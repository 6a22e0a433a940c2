//! Deterministic report writers: JSON with stable key order and all floats
//! rounded to 9 significant digits, and the PR-curve CSV.

use std::path::Path;

use maprast::metrics::ApReport;

use crate::config::round_sig9;
use crate::error::CliError;

/// Rounds every float in the tree to 9 significant digits in place.
fn round_value(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Number(n) => {
            // Integers (counts) pass through untouched.
            if n.is_f64() {
                if let Some(x) = n.as_f64() {
                    if let Some(r) = serde_json::Number::from_f64(round_sig9(x)) {
                        *n = r;
                    }
                }
            }
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(round_value),
        serde_json::Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Serializes any value as deterministic pretty JSON (struct key order,
/// 9-significant-digit floats, trailing newline).
pub fn to_deterministic_json<T: serde::Serialize>(value: &T) -> Result<String, CliError> {
    let mut tree = serde_json::to_value(value).map_err(|e| CliError::runtime(e.to_string()))?;
    round_value(&mut tree);
    let mut text =
        serde_json::to_string_pretty(&tree).map_err(|e| CliError::runtime(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    std::fs::write(path, to_deterministic_json(value)?)?;
    Ok(())
}

/// Formats a float for CSV output: 9 significant digits, shortest
/// representation.
pub fn format_float(x: f64) -> String {
    format!("{}", round_sig9(x))
}

/// PR curves as CSV with columns `class,threshold,recall,precision`.
pub fn pr_curves_csv(report: &ApReport) -> String {
    let mut out = String::from("class,threshold,recall,precision\n");
    for class in &report.per_class {
        for t in &class.per_threshold {
            for pt in &t.pr {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    class.class,
                    format_float(t.threshold),
                    format_float(pt.recall),
                    format_float(pt.precision)
                ));
            }
        }
    }
    out
}

pub fn write_pr_csv(path: &Path, report: &ApReport) -> Result<(), CliError> {
    std::fs::write(path, pr_curves_csv(report))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_only_touches_floats() {
        #[derive(serde::Serialize)]
        struct Doc {
            count: usize,
            value: f64,
        }
        let text = to_deterministic_json(&Doc {
            count: 7,
            value: 1.0 / 3.0,
        })
        .unwrap();
        assert!(text.contains("\"count\": 7"));
        assert!(text.contains("0.333333333"));
        assert!(!text.contains("0.3333333333"));
    }

    #[test]
    fn float_formatting_is_shortest() {
        assert_eq!(format_float(1.0), "1");
        assert_eq!(format_float(0.5), "0.5");
        assert_eq!(format_float(2.0 / 3.0), "0.666666667");
    }
}
