use std::io::{self, Write};

use serde::Serialize;
use serde_json::ser::Formatter;
use torusforge::flow::fmt17;

use crate::error::ErrorObject;

pub const TOOL: &str = "torusforge";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Pretty JSON with every float written to 17 significant digits.
struct Fixed17<'a> {
    inner: serde_json::ser::PrettyFormatter<'a>,
}

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*)),* $(,)?) => {
        $(fn $name<W: ?Sized + Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.inner.$name(w $(, $arg)*)
        })*
    };
}

impl Formatter for Fixed17<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        w.write_all(fmt17(v).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        self.write_f64(w, v as f64)
    }

    delegate!(
        begin_array(),
        end_array(),
        begin_array_value(first: bool),
        end_array_value(),
        begin_object(),
        end_object(),
        begin_object_key(first: bool),
        begin_object_value(),
        end_object_value(),
    );
}

pub fn to_json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut out = Vec::new();
    let fmt = Fixed17 {
        inner: serde_json::ser::PrettyFormatter::with_indent(b"  "),
    };
    let mut ser = serde_json::Serializer::with_formatter(&mut out, fmt);
    v.serialize(&mut ser).expect("in-memory JSON serialization");
    out.push(b'\n');
    out
}

/// Flags that shaped a run, echoed into every report.
#[derive(Debug, Clone, Default, Serialize)]
pub struct RunEcho {
    pub mu: Option<f64>,
    pub eps: Option<f64>,
    pub grid: Option<usize>,
    pub tol: Option<f64>,
    pub seed: u64,
    pub simple: bool,
}

#[derive(Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub input_sha256: Option<&'a str>,
    pub run: &'a RunEcho,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub artifacts: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorObject>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_carry_seventeen_digits() {
        let s = String::from_utf8(to_json(&[0.1f64, 2.0, 0.0, f64::NAN])).unwrap();
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        assert!(s.contains("2.0000000000000000e0"), "{s}");
        assert!(s.contains("null"));
        let back: Vec<Option<f64>> = serde_json::from_str(&s).unwrap();
        assert_eq!(back[0], Some(0.1));
    }

    #[test]
    fn field_order_is_declaration_order() {
        #[derive(Serialize)]
        struct S {
            z: u8,
            a: u8,
        }
        let s = String::from_utf8(to_json(&S { z: 1, a: 2 })).unwrap();
        assert!(s.find("\"z\"").unwrap() < s.find("\"a\"").unwrap());
    }
}
