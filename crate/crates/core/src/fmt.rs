//! Number formatting shared by the CSV writers.

/// Formats `v` with 17 significant digits, which round-trips every `f64`.
pub fn f17(v: f64) -> String {
    if v == 0.0 {
        // keep the sign of -0.0 out of the output
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    format!("{v:.16e}")
}
