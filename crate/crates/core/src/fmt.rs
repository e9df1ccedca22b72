//! Number formatting shared by every text artifact.

/// Formats `x` with 12 significant digits, trailing zeros trimmed, in the
/// style of C's `%.12g`.
pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    // rounding may carry into the next decade; let the e-format decide
    let e_form = format!("{:.11e}", x);
    let (mantissa, e) = e_form.split_once('e').expect("e-format");
    let e: i32 = e.parse().expect("exponent");
    if (-5..12).contains(&e) {
        let decimals = (11 - e).max(0) as usize;
        trim(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim(mantissa.to_string()), e)
    }
}

fn trim(s: String) -> String {
    if s.contains('.') {
        let t = s.trim_end_matches('0').trim_end_matches('.');
        t.to_string()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::sig12;

    #[test]
    fn formats() {
        assert_eq!(sig12(0.5), "0.5");
        assert_eq!(sig12(1.0), "1");
        assert_eq!(sig12(1.0 / 3.0), "0.333333333333");
        assert_eq!(sig12(0.5351837584879964), "0.535183758488");
        assert_eq!(sig12(-2.5e-7), "-2.5e-7");
        assert_eq!(sig12(123456.0), "123456");
        assert_eq!(sig12(0.9999999999999), "1");
        assert_eq!(sig12(1e-3), "0.001");
    }
}
