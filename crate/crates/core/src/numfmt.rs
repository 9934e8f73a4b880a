//! Locale-independent number formatting for all text output.

/// Formats `x` with 12 significant digits.
///
/// Fixed notation for `1e-6 <= |x| < 1e15`, scientific otherwise; zero is
/// `0`, non-finite values are `inf`, `-inf` and `nan`.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let ax = x.abs();
    if (1e-6..1e15).contains(&ax) {
        // Round first so that the exponent accounts for carries like 9.99…→10.
        let sci = format!("{:.11e}", x);
        let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
        let decimals = (11 - exp).max(0) as usize;
        format!("{:.*}", decimals, x)
    } else {
        format!("{:.11e}", x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_num(1.0), "1.00000000000");
        assert_eq!(fmt_num(-0.25), "-0.250000000000");
        assert_eq!(fmt_num(143.10835055998654), "143.108350560");
        assert_eq!(fmt_num(9.999999999999996), "10.0000000000");
        assert_eq!(fmt_num(1e-9), "1.00000000000e-9");
        assert_eq!(fmt_num(f64::INFINITY), "inf");
        assert_eq!(fmt_num(0.0), "0");
    }

    #[test]
    fn round_trip_within_twelve_digits() {
        for &x in &[std::f64::consts::PI, 1.0 / 3.0, -2.5e-4, 7.0e20] {
            let y: f64 = fmt_num(x).parse().unwrap();
            assert!(((x - y) / x).abs() < 1e-11);
        }
    }
}
