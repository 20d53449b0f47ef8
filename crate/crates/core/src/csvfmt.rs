//! Fixed-precision number formatting shared by every CSV writer.

/// Plain decimal rendering with 12 significant digits (no exponent).
pub fn fmt_num(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0.00000000000".to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (11 - magnitude).clamp(0, 40) as usize;
    let s = format!("{x:.decimals$}");
    // rounding can carry into a new leading digit (9.99… -> 10.0…)
    let digits = s.chars().filter(|c| c.is_ascii_digit()).count();
    let leading_zeros = s
        .trim_start_matches('-')
        .chars()
        .take_while(|c| *c == '0' || *c == '.')
        .filter(|c| *c == '0')
        .count();
    if digits - leading_zeros > 12 && decimals > 0 {
        let decimals = decimals - 1;
        format!("{x:.decimals$}")
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::fmt_num;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_num(0.0), "0.00000000000");
        assert_eq!(fmt_num(1.0), "1.00000000000");
        assert_eq!(fmt_num(0.72), "0.720000000000");
        assert_eq!(fmt_num(65.52), "65.5200000000");
        assert_eq!(fmt_num(-2.5), "-2.50000000000");
        assert_eq!(fmt_num(123456789012345.0), "123456789012345");
        assert_eq!(fmt_num(9.9999999999999), "10.0000000000");
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333333333");
    }
}
