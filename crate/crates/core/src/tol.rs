//! Uniform comparison policy for times, speeds and energies.

/// Relative tolerance used for all equality comparisons.
pub const REL: f64 = 1e-9;
/// Absolute floor below which differences are treated as zero.
pub const ABS: f64 = 1e-12;

/// Allowed slack around `x`.
#[inline]
pub fn slack(x: f64) -> f64 {
    (REL * x.abs()).max(ABS)
}

#[inline]
pub fn approx_eq(a: f64, b: f64) -> bool {
    if a == b {
        return true;
    }
    (a - b).abs() <= (REL * a.abs().max(b.abs())).max(ABS)
}

/// `a < b` by more than the tolerance. Infinite `b` compares exactly.
#[inline]
pub fn definitely_less(a: f64, b: f64) -> bool {
    if b.is_infinite() {
        return a < b;
    }
    a < b - slack(b)
}

/// Relative difference with an absolute floor of one.
#[inline]
pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn approx_eq_is_relative() {
        assert!(approx_eq(1e6, 1e6 + 1e-4));
        assert!(!approx_eq(1.0, 1.0 + 1e-6));
        assert!(approx_eq(0.0, 1e-13));
    }

    #[test]
    fn infinite_comparisons() {
        assert!(definitely_less(3.0, f64::INFINITY));
        assert!(!definitely_less(f64::INFINITY, f64::INFINITY));
    }
}
