//! Number formatting for machine-readable output.
//!
//! Every float is written with 17 significant digits in the style of C's
//! `%.17g`, which round-trips any `f64`. Non-finite values use the tokens
//! `inf`, `-inf` and `nan`.

use std::io;

/// Formats `x` like `%.17g`.
pub fn g17(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0" } else { "0" }.to_string();
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific notation");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        let fixed = format!("{:.*}", decimals, x);
        strip_zeros(&fixed)
    } else {
        format!("{}e{}", strip_zeros(mantissa), exp)
    }
}

fn strip_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Parses a float accepting the `inf` / `-inf` tokens written by [`g17`].
pub fn parse_ext(s: &str) -> Option<f64> {
    match s.trim() {
        "inf" | "+inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        t => t.parse::<f64>().ok(),
    }
}

/// A `serde_json` formatter that writes floats with [`g17`].
///
/// Non-finite floats cannot appear in JSON; fields that may hold them are
/// serialized through [`ext_real`] as strings before reaching the formatter.
#[derive(Debug, Default, Clone, Copy)]
pub struct G17Formatter;

impl serde_json::ser::Formatter for G17Formatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            writer.write_all(g17(value).as_bytes())
        } else {
            writer.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Pretty-printed JSON with 17-significant-digit floats.
pub fn to_json_string<T: serde::Serialize>(value: &T) -> serde_json::Result<String> {
    let mut out = Vec::new();
    {
        let mut ser = serde_json::Serializer::with_formatter(&mut out, PrettyG17::default());
        value.serialize(&mut ser)?;
    }
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("json is utf-8"))
}

/// Single-line JSON with 17-significant-digit floats.
pub fn to_json_line<T: serde::Serialize>(value: &T) -> serde_json::Result<String> {
    let mut out = Vec::new();
    value.serialize(&mut serde_json::Serializer::with_formatter(&mut out, G17Formatter))?;
    Ok(String::from_utf8(out).expect("json is utf-8"))
}

/// Pretty printer that defers float formatting to [`G17Formatter`].
#[derive(Default)]
struct PrettyG17 {
    pretty: serde_json::ser::PrettyFormatter<'static>,
}

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*);)*) => {
        $(fn $name<W: ?Sized + io::Write>(&mut self, writer: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.pretty.$name(writer $(, $arg)*)
        })*
    };
}

impl serde_json::ser::Formatter for PrettyG17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        G17Formatter.write_f64(writer, value)
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        G17Formatter.write_f64(writer, value as f64)
    }

    delegate! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        end_object_key();
        begin_object_value();
        end_object_value();
    }
}

/// Serde adapter for extended reals: finite values as numbers, infinities as
/// the strings `"inf"` / `"-inf"`.
pub mod ext_real {
    use serde::de::{self, Deserializer, Visitor};
    use serde::Serializer;
    use std::fmt;

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_str(&super::g17(*x))
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = f64;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or an inf/-inf token")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
                Ok(v)
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
                Ok(v as f64)
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
                Ok(v as f64)
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
                super::parse_ext(v).ok_or_else(|| E::custom(format!("bad extended real {v:?}")))
            }
        }
        d.deserialize_any(V)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g17_matches_printf_style() {
        assert_eq!(g17(4.0), "4");
        assert_eq!(g17(0.1), "0.10000000000000001");
        assert_eq!(g17(-2.5), "-2.5");
        assert_eq!(g17(1e-7), "9.9999999999999995e-8");
        assert_eq!(g17(1.5e20), "1.5e20");
        assert_eq!(g17(f64::INFINITY), "inf");
        assert_eq!(g17(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn g17_round_trips() {
        for &x in &[0.1, 1.0 / 3.0, 2f64.sqrt(), 1e-300, 6.02e23, -7.25e-5, 123456.789] {
            assert_eq!(parse_ext(&g17(x)).unwrap(), x);
        }
    }

    #[test]
    fn json_floats_use_seventeen_digits() {
        let s = to_json_string(&serde_json::json!({ "x": 0.1 })).unwrap();
        assert!(s.contains("0.10000000000000001"), "{s}");
    }
}
