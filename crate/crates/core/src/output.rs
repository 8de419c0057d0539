//! Number formatting and CSV emission shared by the runners and the CLI.

use std::fmt::Write as _;

/// Significant digits in every CSV float.
pub const SIG_DIGITS: usize = 9;

/// Formats `x` with [`SIG_DIGITS`] significant digits, `%g` style:
/// fixed notation for moderate exponents, scientific otherwise, trailing
/// zeros trimmed.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let p = SIG_DIGITS as i32;
    // Round first so that e.g. 9.9999999996 picks the right exponent.
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-5..p).contains(&exp) {
        let decimals = (p - 1 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim_zeros(mantissa.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        let t = s.trim_end_matches('0').trim_end_matches('.');
        if t == "-0" {
            "0".to_string()
        } else {
            t.to_string()
        }
    } else {
        s
    }
}

/// Minimal CSV table builder; all fields are pre-formatted strings.
#[derive(Debug, Clone, Default)]
pub struct CsvTable {
    buf: String,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        let mut buf = header.join(",");
        buf.push('\n');
        Self { buf }
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut first = true;
        for f in fields {
            if !first {
                self.buf.push(',');
            }
            first = false;
            let _ = write!(self.buf, "{}", f.as_ref());
        }
        self.buf.push('\n');
    }

    pub fn finish(self) -> String {
        self.buf
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(-200.0), "-200");
        assert_eq!(fmt_sig(0.5), "0.5");
        assert_eq!(fmt_sig(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_sig(25.641139715), "25.6411397");
        assert_eq!(fmt_sig(123456789.0), "123456789");
        assert_eq!(fmt_sig(1234567890.0), "1.23456789e9");
        assert_eq!(fmt_sig(1.5e-7), "1.5e-7");
        assert_eq!(fmt_sig(9.9999999996), "10");
        assert_eq!(fmt_sig(-1e-20), "-1e-20");
        assert_eq!(fmt_sig(0.000123), "0.000123");
    }

    #[test]
    fn csv_rows() {
        let mut t = CsvTable::new(&["a", "b"]);
        t.row(["1", "2"]);
        t.row(vec![fmt_sig(0.25), fmt_sig(3.0)]);
        assert_eq!(t.finish(), "a,b\n1,2\n0.25,3\n");
    }
}
