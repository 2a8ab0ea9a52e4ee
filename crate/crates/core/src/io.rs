//! Shared text-output helpers.

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// Comma-joined [`fmt`] of a slice.
pub fn join(values: &[f64]) -> String {
    values.iter().map(|x| fmt(*x)).collect::<Vec<_>>().join(",")
}
