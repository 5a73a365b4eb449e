//! Serde helpers: big integers and rationals travel as decimal strings so
//! every file format stays human-readable and round-trips exactly.

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{de::Error as DeError, Deserialize, Deserializer, Serializer};
use std::str::FromStr;

pub mod bigint_str {
    use super::*;

    pub fn serialize<S: Serializer>(v: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        let raw = String::deserialize(d)?;
        BigInt::from_str(raw.trim()).map_err(|e| D::Error::custom(format!("bad integer: {e}")))
    }
}

pub mod bigint_opt_str {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<BigInt>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => s.serialize_some(&x.to_string()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<BigInt>, D::Error> {
        let raw: Option<String> = Option::deserialize(d)?;
        raw.map(|r| BigInt::from_str(r.trim()).map_err(|e| D::Error::custom(format!("bad integer: {e}"))))
            .transpose()
    }
}

pub mod bigint_vec_str {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[BigInt], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|x| x.to_string()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigInt>, D::Error> {
        let raw: Vec<String> = Vec::deserialize(d)?;
        raw.iter()
            .map(|r| BigInt::from_str(r.trim()).map_err(|e| D::Error::custom(format!("bad integer: {e}"))))
            .collect()
    }
}

pub mod rational_pair_str {
    use super::*;

    pub fn serialize<S: Serializer>(v: &(BigRational, BigRational), s: S) -> Result<S::Ok, S::Error> {
        let fmt = |r: &BigRational| {
            if r.is_integer() {
                r.numer().to_string()
            } else {
                format!("{}/{}", r.numer(), r.denom())
            }
        };
        s.collect_seq([fmt(&v.0), fmt(&v.1)])
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(BigRational, BigRational), D::Error> {
        let raw: Vec<String> = Vec::deserialize(d)?;
        if raw.len() != 2 {
            return Err(D::Error::custom("expected a pair"));
        }
        Ok((
            parse_rational(&raw[0]).map_err(D::Error::custom)?,
            parse_rational(&raw[1]).map_err(D::Error::custom)?,
        ))
    }
}

pub mod rational_vec_str {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[BigRational], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|r| {
            if r.is_integer() {
                r.numer().to_string()
            } else {
                format!("{}/{}", r.numer(), r.denom())
            }
        }))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigRational>, D::Error> {
        let raw: Vec<String> = Vec::deserialize(d)?;
        raw.iter()
            .map(|r| parse_rational(r).map_err(D::Error::custom))
            .collect()
    }
}

fn parse_rational(raw: &str) -> Result<BigRational, String> {
    let raw = raw.trim();
    let (n, d) = match raw.split_once('/') {
        Some((n, d)) => (n, d),
        None => (raw, "1"),
    };
    let numer = BigInt::from_str(n.trim()).map_err(|e| format!("bad rational numerator: {e}"))?;
    let denom = BigInt::from_str(d.trim()).map_err(|e| format!("bad rational denominator: {e}"))?;
    if denom == BigInt::from(0) {
        return Err("zero denominator".into());
    }
    Ok(BigRational::new(numer, denom))
}
