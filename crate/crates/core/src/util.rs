//! Deterministic float formatting shared by every serializer.

/// Format at 12 significant digits, without exponent notation for the
/// magnitudes this toolkit produces. `-0` collapses to `0`.
pub fn fmt_sig(v: f64) -> String {
    let v = round_sig(v);
    if v == 0.0 {
        return "0".to_string();
    }
    // 12 significant digits: print enough decimals, then strip.
    let mag = v.abs().log10().floor() as i32;
    let decimals = (11 - mag).max(0) as usize;
    let s = format!("{v:.decimals$}");
    if s.contains('.') {
        let t = s.trim_end_matches('0').trim_end_matches('.');
        t.to_string()
    } else {
        s
    }
}

/// Round to 12 significant digits (used before JSON serialization so that
/// serde_json output is byte-stable across runs and platforms).
pub fn round_sig(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    let mag = v.abs().log10().floor() as i32;
    let shift = 10f64.powi(11 - mag);
    (v * shift).round() / shift
}
