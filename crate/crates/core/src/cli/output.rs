use serde::Serialize;
use serde_json::{Number, Value};

use crate::error::Result;

/// Significant digits kept for floats in JSON output.
pub const JSON_SIG_DIGITS: usize = 9;

pub fn round_sig(x: f64, digits: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", digits.saturating_sub(1), x).parse().unwrap_or(x)
}

fn canonicalize(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().unwrap_or(0.0), JSON_SIG_DIGITS);
            if let Some(m) = Number::from_f64(x) {
                *n = m;
            }
        }
        Value::Array(a) => a.iter_mut().for_each(canonicalize),
        Value::Object(o) => o.values_mut().for_each(canonicalize),
        _ => {}
    }
}

/// Pretty JSON with sorted keys and floats rounded to nine significant digits.
pub fn canonical_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value)?;
    canonicalize(&mut v);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounds_and_sorts() {
        let v = serde_json::json!({"b": 0.123456789123, "a": [1, 2.0000000001]});
        assert_eq!(
            canonical_json(&v).unwrap(),
            "{\n  \"a\": [\n    1,\n    2.0\n  ],\n  \"b\": 0.123456789\n}\n"
        );
    }

    #[test]
    fn round_sig_examples() {
        assert_eq!(round_sig(0.080467354, 3), 0.0805);
        assert_eq!(round_sig(-1234.5678, 2), -1200.0);
        assert_eq!(round_sig(0.0, 9), 0.0);
    }
}
