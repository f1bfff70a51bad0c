//! Deterministic CSV and JSON rendering of reports.
//!
//! CSV output carries a header row, '.' decimal separator and 17
//! significant digits; identical inputs produce byte-identical files.

use std::fmt::Write as _;

/// A float with 17 significant digits, enough to round-trip any f64.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        return String::new();
    }
    format!("{x:.16e}")
}

pub fn fmt_optional(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

/// Assemble rows into CSV text.
pub struct CsvWriter {
    out: String,
    columns: usize,
}

impl CsvWriter {
    pub fn new(header: &[&str]) -> Self {
        let mut out = String::new();
        let _ = writeln!(out, "{}", header.join(","));
        Self {
            out,
            columns: header.len(),
        }
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut count = 0;
        let mut first = true;
        for field in fields {
            if !first {
                self.out.push(',');
            }
            first = false;
            self.out.push_str(field.as_ref());
            count += 1;
        }
        debug_assert_eq!(count, self.columns, "row width must match the header");
        self.out.push('\n');
    }

    pub fn finish(self) -> String {
        self.out
    }
}

/// Pretty JSON with a trailing newline, the fixed on-disk form.
pub fn to_json_text(value: &serde_json::Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("JSON rendering cannot fail");
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_round_trips() {
        for &x in &[0.15163266492815836, 1.0 / 3.0, 2.0_f64.sqrt(), 1e-300] {
            let parsed: f64 = fmt_float(x).parse().unwrap();
            assert_eq!(parsed, x);
        }
    }

    #[test]
    fn csv_rows_are_joined_with_header() {
        let mut w = CsvWriter::new(&["a", "b"]);
        w.row(["1", "2"]);
        w.row([fmt_float(0.5), fmt_float(0.25)]);
        let text = w.finish();
        assert!(text.starts_with("a,b\n1,2\n"));
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn nan_renders_as_empty_field() {
        assert_eq!(fmt_float(f64::NAN), "");
        assert_eq!(fmt_optional(None), "");
    }
}
