//! Serde helpers for numeric KPM fields that may carry the `"NaN"` marker.
//!
//! JSON has no NaN literal, so a NaN is written as the string `"NaN"`.
//! Readers accept numbers, numeric strings and `"NaN"`; CSV fields go
//! through the same path.

use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserializer, Serializer};

pub const NAN_TOKEN: &str = "NaN";

struct LenientF64;

impl<'de> Visitor<'de> for LenientF64 {
    type Value = f64;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a number or the string \"NaN\"")
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
        v.trim()
            .parse::<f64>()
            .map_err(|_| E::invalid_value(de::Unexpected::Str(v), &self))
    }

    fn visit_unit<E: de::Error>(self) -> Result<f64, E> {
        Ok(f64::NAN)
    }

    fn visit_none<E: de::Error>(self) -> Result<f64, E> {
        Ok(f64::NAN)
    }
}

pub mod nan_f64 {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_nan() {
            s.serialize_str(NAN_TOKEN)
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        d.deserialize_any(LenientF64)
    }
}

pub mod nan_opt_f64 {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            None => s.serialize_none(),
            Some(x) if x.is_nan() => s.serialize_str(NAN_TOKEN),
            Some(x) => s.serialize_f64(*x),
        }
    }

    struct OptVisitor;

    impl<'de> Visitor<'de> for OptVisitor {
        type Value = Option<f64>;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("an optional number or \"NaN\"")
        }

        fn visit_none<E: de::Error>(self) -> Result<Self::Value, E> {
            Ok(None)
        }

        fn visit_unit<E: de::Error>(self) -> Result<Self::Value, E> {
            Ok(None)
        }

        fn visit_some<D: Deserializer<'de>>(self, d: D) -> Result<Self::Value, D::Error> {
            d.deserialize_any(OptInner)
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<Self::Value, E> {
            Ok(Some(v))
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<Self::Value, E> {
            Ok(Some(v as f64))
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<Self::Value, E> {
            Ok(Some(v as f64))
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<Self::Value, E> {
            if v.trim().is_empty() {
                return Ok(None);
            }
            LenientF64.visit_str(v).map(Some)
        }
    }

    struct OptInner;

    impl<'de> Visitor<'de> for OptInner {
        type Value = Option<f64>;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a number, empty field or \"NaN\"")
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<Self::Value, E> {
            Ok(Some(v))
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<Self::Value, E> {
            Ok(Some(v as f64))
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<Self::Value, E> {
            Ok(Some(v as f64))
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<Self::Value, E> {
            OptVisitor.visit_str(v)
        }

        fn visit_unit<E: de::Error>(self) -> Result<Self::Value, E> {
            Ok(None)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        d.deserialize_option(OptVisitor)
    }
}

#[cfg(test)]
mod tests {
    use serde::{Deserialize, Serialize};

    #[derive(Debug, Serialize, Deserialize)]
    struct Row {
        #[serde(with = "super::nan_f64")]
        a: f64,
        #[serde(with = "super::nan_opt_f64", default)]
        b: Option<f64>,
    }

    #[test]
    fn json_nan_marker() {
        let s = serde_json::to_string(&Row { a: f64::NAN, b: Some(f64::NAN) }).unwrap();
        assert_eq!(s, r#"{"a":"NaN","b":"NaN"}"#);
        let r: Row = serde_json::from_str(&s).unwrap();
        assert!(r.a.is_nan() && r.b.unwrap().is_nan());
        let r: Row = serde_json::from_str(r#"{"a":3,"b":null}"#).unwrap();
        assert_eq!(r.a, 3.0);
        assert_eq!(r.b, None);
    }

    #[test]
    fn csv_fields() {
        let mut w = csv::Writer::from_writer(vec![]);
        w.serialize(Row { a: 1.5, b: None }).unwrap();
        w.serialize(Row { a: f64::NAN, b: Some(-2.25) }).unwrap();
        let text = String::from_utf8(w.into_inner().unwrap()).unwrap();
        assert_eq!(text, "a,b\n1.5,\nNaN,-2.25\n");
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let rows: Vec<Row> = r.deserialize().collect::<Result<_, _>>().unwrap();
        assert_eq!(rows[0].a, 1.5);
        assert_eq!(rows[0].b, None);
        assert!(rows[1].a.is_nan());
        assert_eq!(rows[1].b, Some(-2.25));
    }
}
