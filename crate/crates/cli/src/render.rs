//! Fixed-format numbers for CSV and JSON output.

use num_complex::Complex64;
use serde_json::{Number, Value};

/// Seventeen significant digits in scientific notation with a signed exponent.
pub fn float(x: f64) -> String {
    // Fold -0 into 0 so equal values print equally.
    let x = if x == 0.0 { 0.0 } else { x };
    let s = format!("{x:.16e}");
    match s.split_once('e') {
        Some((mantissa, exp)) if !exp.starts_with('-') => format!("{mantissa}e+{exp}"),
        _ => s,
    }
}

/// A JSON number carrying exactly the digits of [`float`]; `null` if not finite.
pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let n: Number = float(x).parse().expect("formatted float is valid JSON");
    Value::Number(n)
}

/// `[re, im]`.
pub fn complex(z: Complex64) -> Value {
    Value::Array(vec![num(z.re), num(z.im)])
}

/// Comma-joined row with a trailing newline.
pub fn csv_row<I, S>(fields: I) -> String
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut line = fields
        .into_iter()
        .map(|s| s.as_ref().to_owned())
        .collect::<Vec<_>>()
        .join(",");
    line.push('\n');
    line
}

pub fn json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digits() {
        assert_eq!(
            float(std::f64::consts::FRAC_1_SQRT_2),
            "7.0710678118654757e-1"
        );
        assert_eq!(float(-0.0), float(0.0));
        assert_eq!(float(12.0), "1.2000000000000000e+1");
        assert_eq!(num(1.5).to_string(), "1.5000000000000000e+0");
        assert_eq!(num(f64::NAN), Value::Null);
    }

    #[test]
    fn rows() {
        assert_eq!(csv_row(["a", "b"]), "a,b\n");
    }
}
