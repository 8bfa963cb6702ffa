//! Pinned number formatting for machine-readable output: shortest
//! round-trip representation capped at 10 significant digits, plain decimal
//! notation, '.' separator. Keeps golden files byte-stable.

/// Formats an `f64` for CSV/report output.
pub fn fmt_f64(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let shortest = format!("{v}");
    if significant_digits(&shortest) <= 10 {
        return shortest;
    }
    let exponent = v.abs().log10().floor() as i32;
    let decimals = (9 - exponent).max(0) as usize;
    trim_trailing_zeros(format!("{v:.decimals$}"))
}

fn significant_digits(s: &str) -> usize {
    let mut seen_nonzero = false;
    let mut count = 0;
    for c in s.chars() {
        if c.is_ascii_digit() {
            if c != '0' {
                seen_nonzero = true;
            }
            if seen_nonzero {
                count += 1;
            }
        }
    }
    count
}

fn trim_trailing_zeros(mut s: String) -> String {
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        return "0".to_string();
    }
    s
}
