//! JSON output with fixed field order and 17 significant digits.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::ser::Formatter;

/// Format `v` like C's `%.17g`.
pub fn g17(v: f64) -> String {
    if v == 0.0 {
        return if v.is_sign_negative() {
            "-0.0".into()
        } else {
            "0.0".into()
        };
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..17).contains(&exp) {
        let digits = (16 - exp).max(0) as usize;
        let s = format!("{v:.digits$}");
        trim(&s, true)
    } else {
        format!("{}e{exp}", trim(mantissa, false))
    }
}

fn trim(s: &str, keep_point: bool) -> String {
    if !s.contains('.') {
        return if keep_point { format!("{s}.0") } else { s.to_string() };
    }
    let t = s.trim_end_matches('0');
    if t.ends_with('.') {
        if keep_point {
            format!("{t}0")
        } else {
            t.trim_end_matches('.').to_string()
        }
    } else {
        t.to_string()
    }
}

struct G17;

impl Formatter for G17 {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        if v.is_finite() {
            w.write_all(g17(v).as_bytes())
        } else {
            w.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        self.write_f64(w, v as f64)
    }
}

pub fn to_string<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, G17);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(g17(0.1), "0.10000000000000001");
        assert_eq!(g17(1.0), "1.0");
        assert_eq!(g17(-2.5), "-2.5");
        assert_eq!(g17(1e-10), "1e-10");
        assert_eq!(g17(6.02e23), "6.02e23");
        assert_eq!(g17(1.0 / 3.0), "0.33333333333333331");
        assert_eq!(g17(100.0), "100.0");
    }

    #[test]
    fn round_trips() {
        for v in [
            std::f64::consts::PI,
            1.0 / 3.0,
            2.220446049250313e-16,
            1.7976931348623157e308,
            4.9e-324,
        ] {
            let s = g17(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
    }

    #[test]
    fn non_finite_is_null() {
        assert_eq!(to_string(&vec![1.0, f64::NAN]).unwrap(), "[1.0,null]");
    }
}
