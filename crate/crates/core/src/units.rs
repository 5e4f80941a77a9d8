//! Unit helpers shared by the file formats and the CLI boundary.

use num_complex::Complex64;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Free-space wave impedance √(μ0/ε0).
pub const ETA0: f64 = 376.730_313_668;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * (watts / 1e-3).log10()
}

/// Parses a number with an optional SPICE scale suffix
/// (`f p n u m k meg g t`, case-insensitive).
pub fn parse_si(text: &str) -> Option<f64> {
    let s = text.trim();
    if s.is_empty() {
        return None;
    }
    if let Ok(v) = s.parse::<f64>() {
        return Some(v);
    }
    let lower = s.to_ascii_lowercase();
    let (number, scale) = if let Some(n) = lower.strip_suffix("meg") {
        (n, 1e6)
    } else {
        let (idx, c) = lower.char_indices().last()?;
        let scale = match c {
            'f' => 1e-15,
            'p' => 1e-12,
            'n' => 1e-9,
            'u' | 'µ' => 1e-6,
            'm' => 1e-3,
            'k' => 1e3,
            'g' => 1e9,
            't' => 1e12,
            _ => return None,
        };
        (&lower[..idx], scale)
    };
    number.parse::<f64>().ok().map(|v| v * scale)
}

/// Parses an impedance written as `R+jX`, `R-jX`, `R`, `jX` or `R+Xj`.
pub fn parse_complex(text: &str) -> Option<Complex64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return None;
    }
    if !s.contains(['j', 'J', 'i']) {
        return s.parse::<f64>().ok().map(|r| Complex64::new(r, 0.0));
    }
    // split at the last sign that is not part of an exponent
    let bytes = s.as_bytes();
    let mut split = 0;
    for k in (1..bytes.len()).rev() {
        let c = bytes[k];
        if (c == b'+' || c == b'-') && !matches!(bytes[k - 1], b'e' | b'E') {
            split = k;
            break;
        }
    }
    let (re_part, im_part) = s.split_at(split);
    let re = if re_part.is_empty() {
        0.0
    } else {
        re_part.parse::<f64>().ok()?
    };
    let (sign, body) = match im_part.as_bytes().first() {
        Some(b'-') => (-1.0, &im_part[1..]),
        Some(b'+') => (1.0, &im_part[1..]),
        _ => (1.0, im_part),
    };
    let body = body
        .strip_prefix(['j', 'J', 'i'])
        .or_else(|| body.strip_suffix(['j', 'J', 'i']))?;
    let im = if body.is_empty() {
        1.0
    } else {
        body.parse::<f64>().ok()?
    };
    Some(Complex64::new(re, sign * im))
}
