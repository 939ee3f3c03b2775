//! JSON helpers: fixed 17-significant-digit float output and field access
//! with errors that name the offending field.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

/// Pretty-printing formatter that writes every float as `{:.16e}`.
struct FullPrecision<'a>(PrettyFormatter<'a>);

macro_rules! forward {
    ($($name:ident($($arg:ident: $ty:ty),*);)*) => {
        $(
            #[inline]
            fn $name<W: ?Sized + io::Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
                self.0.$name(w $(, $arg)*)
            }
        )*
    };
}

impl Formatter for FullPrecision<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{}", format_float(value))
    }

    forward! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        begin_object_value();
        end_object_value();
    }
}

/// `{:.16e}`: 17 significant digits, loss-free for every finite `f64`.
pub fn format_float(value: f64) -> String {
    format!("{value:.16e}")
}

/// Serializes `value` as pretty JSON with 17-digit floats and a trailing newline.
pub fn to_string_full<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FullPrecision(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("serde_json emits UTF-8"))
}

pub(crate) fn object<'a>(value: &'a Value, field: &str) -> Result<&'a Map<String, Value>> {
    value
        .as_object()
        .ok_or_else(|| Error::parse(field, "expected a JSON object"))
}

pub(crate) fn get<'a>(obj: &'a Map<String, Value>, field: &str) -> Result<&'a Value> {
    obj.get(field)
        .ok_or_else(|| Error::parse(field, "missing field"))
}

pub(crate) fn get_f64(obj: &Map<String, Value>, field: &str) -> Result<f64> {
    let v = get(obj, field)?
        .as_f64()
        .ok_or_else(|| Error::parse(field, "expected a number"))?;
    if !v.is_finite() {
        return Err(Error::parse(field, "expected a finite number"));
    }
    Ok(v)
}

pub(crate) fn get_str<'a>(obj: &'a Map<String, Value>, field: &str) -> Result<&'a str> {
    get(obj, field)?
        .as_str()
        .ok_or_else(|| Error::parse(field, "expected a string"))
}

pub(crate) fn get_f64_list(obj: &Map<String, Value>, field: &str) -> Result<Vec<f64>> {
    f64_list(get(obj, field)?, field)
}

pub(crate) fn f64_list(value: &Value, field: &str) -> Result<Vec<f64>> {
    let arr = value
        .as_array()
        .ok_or_else(|| Error::parse(field, "expected an array of numbers"))?;
    arr.iter()
        .enumerate()
        .map(|(i, v)| {
            v.as_f64()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::parse(format!("{field}[{i}]"), "expected a finite number"))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_through_17_digits() {
        let xs = vec![0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0];
        let s = to_string_full(&xs).unwrap();
        assert!(s.contains("3.3333333333333331e-1"));
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, xs);
    }
}
