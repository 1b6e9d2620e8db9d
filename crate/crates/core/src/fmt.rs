//! Numeric output formatting shared by reports and the CLI.
//!
//! Free-form floating output uses 6 significant digits; report tables mirror
//! the two fixed-decimal styles used in the emitted tables (2 decimals for
//! condition/accuracy tables, 4 decimals for model summaries).

/// Format with `digits` significant digits, plain decimal notation where
/// reasonable, scientific for very large or very small magnitudes.
pub fn sig(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let digits = digits.max(1);
    // Round in scientific notation first so the decimal count is derived
    // from the exponent *after* rounding (0.9999995 must render like 1.0).
    let sci = format!("{:.*e}", digits - 1, x);
    let (_, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp >= digits as i32 + 6 || exp < -6 {
        return sci;
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    let rounded: f64 = sci.parse().expect("round trip");
    format!("{rounded:.decimals$}")
}

/// Default report formatting: 6 significant digits.
pub fn sig6(x: f64) -> String {
    sig(x, 6)
}

/// Condition/accuracy table style: 2 decimals.
pub fn dec2(x: f64) -> String {
    format!("{x:.2}")
}

/// Model summary style: 4 decimals.
pub fn dec4(x: f64) -> String {
    format!("{x:.4}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig6_plain_range() {
        assert_eq!(sig6(0.974631846), "0.974632");
        assert_eq!(sig6(1.0), "1.00000");
        assert_eq!(sig6(123456.0), "123456");
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(-0.5), "-0.500000");
    }

    #[test]
    fn sig6_extremes_go_scientific() {
        assert_eq!(sig6(1.5e-9), "1.50000e-9");
        assert!(sig6(2.0e14).contains('e'));
    }

    #[test]
    fn fixed_decimals() {
        assert_eq!(dec2(71.146), "71.15");
        assert_eq!(dec4(0.52161), "0.5216");
    }
}
