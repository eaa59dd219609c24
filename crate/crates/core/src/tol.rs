//! Floating-point comparison helpers shared by the solvers.

/// Relative tolerance for distance and deadline comparisons.
pub const REL_TOL: f64 = 1e-9;

/// `a <= b` up to relative tolerance.
#[inline]
pub fn le(a: f64, b: f64) -> bool {
    a <= b + REL_TOL * a.abs().max(b.abs())
}

/// Strict improvement used by the exact searches: `a` beats `b` only when it
/// is smaller by more than rounding noise.
#[inline]
pub fn improves(a: f64, b: f64) -> bool {
    if b.is_finite() {
        a < b - 1e-12 * b.abs()
    } else {
        a < b
    }
}

/// Rounds to 12 significant digits.
pub fn round_sig12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let exp = x.abs().log10().floor() as i32;
    let scale = 10f64.powi(11 - exp);
    (x * scale).round() / scale
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_collapses_noise() {
        assert_eq!(round_sig12(0.1 + 0.2), round_sig12(0.3));
        assert_eq!(round_sig12(0.0), 0.0);
        assert_eq!(round_sig12(123456.0), 123456.0);
    }

    #[test]
    fn le_tolerates_noise() {
        assert!(le(1.0 + 1e-12, 1.0));
        assert!(!le(1.0 + 1e-6, 1.0));
        assert!(le(0.0, 0.0));
    }
}
