//! Deterministic number formatting for tabular output.

/// C `printf("%.10g")` formatting.
pub fn fmt_g(x: f64) -> String {
    fmt_g_precision(x, 10)
}

/// C `printf("%.<precision>g")`: `precision` significant digits, trailing
/// zeros removed, scientific notation when the exponent is below -4 or at
/// least `precision`.
pub fn fmt_g_precision(x: f64, precision: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let p = precision.max(1);
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    // Exponent after rounding to p significant digits.
    let sci = format!("{:.*e}", p - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= p as i32 {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (p as i32 - 1 - exp) as usize;
        strip_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf() {
        let cases: &[(f64, &str)] = &[
            (0.0, "0"),
            (1.0, "1"),
            (-2.5, "-2.5"),
            (4.98690, "4.9869"),
            (1.0 / 3.0, "0.3333333333"),
            (123456789.0, "123456789"),
            (1234567890.0, "1234567890"),
            (12345678901.0, "1.23456789e+10"),
            (1e-4, "0.0001"),
            (1.5e-5, "1.5e-05"),
            (-3.2724e-7, "-3.2724e-07"),
            (1e100, "1e+100"),
            (9.9999999999, "10"),
            (0.99999999996, "1"),
            (1000.0, "1000"),
            (-0.346573590279972, "-0.3465735903"),
        ];
        for &(x, want) in cases {
            assert_eq!(fmt_g(x), want, "{x:e}");
        }
        assert_eq!(fmt_g(f64::NAN), "nan");
        assert_eq!(fmt_g(f64::NEG_INFINITY), "-inf");
        assert_eq!(fmt_g_precision(2.34567, 3), "2.35");
    }

    #[test]
    fn round_trips_at_ten_digits() {
        for &x in &[0.123456789012345, 98765.4321098, -1.0e-12 * 7.123456789] {
            let back: f64 = fmt_g(x).parse().unwrap();
            assert!(((back - x) / x).abs() < 1e-9);
        }
    }
}
