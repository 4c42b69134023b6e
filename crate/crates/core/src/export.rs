//! Plain-text emission helpers: 17 significant digits everywhere, so every
//! `f64` survives a write/read round trip bit-for-bit.

use std::fmt::Write;

/// Formats `v` with 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Renders a CSV table from a header and numeric rows.
pub fn csv_table<'a>(header: &str, rows: impl IntoIterator<Item = &'a [f64]>) -> String {
    let mut out = String::with_capacity(64);
    out.push_str(header);
    out.push('\n');
    for row in rows {
        for (k, v) in row.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            // writing into a String cannot fail
            let _ = write!(out, "{v:.16e}");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, std::f64::consts::PI, -2.5e-300, 7.0e12] {
            let s = fmt17(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn table_layout() {
        let rows = [[0.0, 1.0], [0.5, -2.0]];
        let s = csv_table("a,b", rows.iter().map(|r| r.as_slice()));
        let lines: Vec<_> = s.lines().collect();
        assert_eq!(lines[0], "a,b");
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[2], "5.0000000000000000e-1,-2.0000000000000000e0");
    }
}
