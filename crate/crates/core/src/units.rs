//! Engineering-notation quantities.
//!
//! Flags and parameter files accept values such as `10pF`, `1MΩ`, `5MHz`,
//! `3.33M` or `4cm`. Everything is normalized to SI before it reaches the
//! model.

use crate::error::{Error, Result};

/// Physical unit a quantity is expected to carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    Farad,
    Ohm,
    Hertz,
    BitsPerSecond,
    Meter,
    Watt,
    WattPerHertz,
    Volt,
    Siemens,
    FaradPerMeter,
    Dimensionless,
}

impl Unit {
    fn symbols(self) -> &'static [&'static str] {
        match self {
            Unit::Farad => &["F"],
            Unit::Ohm => &["Ω", "ohms", "ohm", "Ohm"],
            Unit::Hertz => &["Hz"],
            Unit::BitsPerSecond => &["bps", "b/s"],
            Unit::Meter => &["m"],
            Unit::Watt => &["W"],
            Unit::WattPerHertz => &["W/Hz"],
            Unit::Volt => &["V"],
            Unit::Siemens => &["S"],
            Unit::FaradPerMeter => &["F/m"],
            Unit::Dimensionless => &[],
        }
    }
}

fn prefix_scale(p: &str) -> Option<f64> {
    Some(match p {
        "" => 1.0,
        "f" => 1e-15,
        "p" => 1e-12,
        "n" => 1e-9,
        "u" | "µ" | "μ" => 1e-6,
        "m" => 1e-3,
        "c" => 1e-2,
        "k" | "K" => 1e3,
        "M" | "meg" => 1e6,
        "G" => 1e9,
        "T" => 1e12,
        _ => return None,
    })
}

/// Parses a quantity with an optional SI prefix and an optional unit symbol.
///
/// A bare number is taken as already being in SI. `m` on its own means milli
/// except for lengths, where it is the metre symbol.
pub fn parse_quantity(text: &str, unit: Unit) -> Result<f64> {
    let s = text.trim();
    let split = s
        .char_indices()
        .find(|&(i, c)| {
            !(c.is_ascii_digit()
                || c == '.'
                || c == '+'
                || c == '-'
                || ((c == 'e' || c == 'E')
                    && s[i + 1..]
                        .chars()
                        .next()
                        .is_some_and(|n| n.is_ascii_digit() || n == '-' || n == '+')))
        })
        .map(|(i, _)| i)
        .unwrap_or(s.len());
    let (num, rest) = s.split_at(split);
    let value: f64 = num
        .parse()
        .map_err(|_| Error::Parse(format!("`{text}` is not a number")))?;
    let rest = rest.trim();

    let mut prefix = rest;
    for sym in unit.symbols() {
        if let Some(p) = rest.strip_suffix(sym) {
            prefix = p;
            break;
        }
    }
    let scale = prefix_scale(prefix)
        .ok_or_else(|| Error::Parse(format!("`{text}`: unknown unit or prefix `{rest}`")))?;
    let v = value * scale;
    if !v.is_finite() {
        return Err(Error::Parse(format!("`{text}` is not finite")));
    }
    Ok(v)
}

/// Comma-separated list of quantities, e.g. `1M,3.33M,5M`.
pub fn parse_list(text: &str, unit: Unit) -> Result<Vec<f64>> {
    text.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| parse_quantity(t, unit))
        .collect()
}

macro_rules! serde_unit {
    ($name:ident, $unit:expr) => {
        /// Serde adapter: accepts a number (SI) or an engineering string.
        pub mod $name {
            use serde::{Deserialize, Deserializer, Serializer};

            #[derive(Deserialize)]
            #[serde(untagged)]
            enum Raw {
                Num(f64),
                Text(String),
            }

            pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
                match Raw::deserialize(d)? {
                    Raw::Num(v) => Ok(v),
                    Raw::Text(t) => {
                        super::parse_quantity(&t, $unit).map_err(serde::de::Error::custom)
                    }
                }
            }

            pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_f64(*v)
            }
        }
    };
}

serde_unit!(farad, super::Unit::Farad);
serde_unit!(ohm, super::Unit::Ohm);
serde_unit!(hertz, super::Unit::Hertz);
serde_unit!(bps, super::Unit::BitsPerSecond);
serde_unit!(meter, super::Unit::Meter);
serde_unit!(watt_per_hertz, super::Unit::WattPerHertz);
serde_unit!(volt, super::Unit::Volt);
serde_unit!(farad_per_meter, super::Unit::FaradPerMeter);

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs().max(1e-30)
    }

    #[test]
    fn prefixes_and_symbols() {
        assert!(close(parse_quantity("10pF", Unit::Farad).unwrap(), 10e-12));
        assert!(close(parse_quantity("1MΩ", Unit::Ohm).unwrap(), 1e6));
        assert!(close(parse_quantity("50 ohm", Unit::Ohm).unwrap(), 50.0));
        assert!(close(parse_quantity("5MHz", Unit::Hertz).unwrap(), 5e6));
        assert!(close(
            parse_quantity("3.33M", Unit::BitsPerSecond).unwrap(),
            3.33e6
        ));
        assert!(close(parse_quantity("4cm", Unit::Meter).unwrap(), 0.04));
        assert!(close(parse_quantity("0.18m", Unit::Meter).unwrap(), 0.18));
        assert!(close(
            parse_quantity("2.5e-3", Unit::Meter).unwrap(),
            2.5e-3
        ));
        assert!(close(
            parse_quantity("4e-21W/Hz", Unit::WattPerHertz).unwrap(),
            4e-21
        ));
        assert!(close(parse_quantity("1m", Unit::Volt).unwrap(), 1e-3));
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_quantity("abc", Unit::Farad).is_err());
        assert!(parse_quantity("10qF", Unit::Farad).is_err());
        assert!(parse_quantity("", Unit::Farad).is_err());
    }

    #[test]
    fn lists() {
        let v = parse_list("1M,3.33M,5M", Unit::BitsPerSecond).unwrap();
        assert_eq!(v.len(), 3);
        assert!(close(v[1], 3.33e6));
    }
}
