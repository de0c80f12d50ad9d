//! Scalar regimes shared by the exact and floating-point code paths.
//!
//! Everything that only needs field arithmetic (the lattice steps, LR
//! products, characteristic polynomial recursions) is written against
//! [`Scalar`], so the same code runs on [`Rational`] for exact verification
//! and on `f64`/`f32` inside the iterative solvers.

use std::fmt::Debug;
use std::str::FromStr;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::{FromPrimitive, Num, Signed, ToPrimitive};
use num::{One, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision rational used on every verification path.
pub type Rational = BigRational;

/// Field element usable by the generic lattice and matrix code.
pub trait Scalar:
    Num + Signed + Clone + Debug + PartialOrd + FromPrimitive + ToPrimitive
{
    fn from_rational(r: &Rational) -> Self;
}

impl Scalar for Rational {
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
}

impl Scalar for f64 {
    fn from_rational(r: &Rational) -> Self {
        rational_to_f64(r)
    }
}

impl Scalar for f32 {
    fn from_rational(r: &Rational) -> Self {
        rational_to_f64(r) as f32
    }
}

/// Converts `p/q` with correct rounding for the common case and graceful
/// behaviour for huge numerators/denominators.
pub fn rational_to_f64(r: &Rational) -> f64 {
    if let Some(v) = r.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    let n = r.numer().to_f64().unwrap_or(f64::NAN);
    let d = r.denom().to_f64().unwrap_or(f64::NAN);
    n / d
}

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn ratio(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

/// Parses `"p/q"`, `"p"`, or a plain decimal such as `"0.25"` or `"1e-3"`
/// into an exact rational. Decimals are read digit-for-digit, not through
/// binary floating point.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let text = text.trim();
    if text.is_empty() {
        return Err(Error::Parse("empty numeric literal".into()));
    }
    if let Some((p, q)) = text.split_once('/') {
        let p = BigInt::from_str(p.trim())
            .map_err(|_| Error::Parse(format!("bad numerator in {text:?}")))?;
        let q = BigInt::from_str(q.trim())
            .map_err(|_| Error::Parse(format!("bad denominator in {text:?}")))?;
        if q.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {text:?}")));
        }
        return Ok(Rational::new(p, q));
    }
    parse_decimal(text)
}

fn parse_decimal(text: &str) -> Result<Rational> {
    let bad = || Error::Parse(format!("not a number: {text:?}"));
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(pos) => {
            let exp: i64 = text[pos + 1..].parse().map_err(|_| bad())?;
            (&text[..pos], exp)
        }
        None => (text, 0),
    };
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{whole}{frac}");
    let numer = BigInt::from_str_radix(&digits, 10).map_err(|_| bad())?;
    let scale = exponent - frac.len() as i64;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        Rational::from_integer(numer * num::pow(ten, scale as usize))
    } else {
        Rational::new(numer, num::pow(ten, (-scale) as usize))
    };
    Ok(if sign < 0 { -value } else { value })
}

/// Canonical text form: `"p"` for integers, `"p/q"` otherwise.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Serde adapters that keep rationals exact across JSON boundaries.
///
/// Reading accepts JSON numbers (integers or decimals, read exactly) and
/// `"p/q"` strings; writing always emits strings.
pub mod serde_rational {
    use serde::de::{self, Deserializer, SeqAccess, Visitor};
    use serde::ser::{SerializeSeq, Serializer};
    use std::fmt;

    use super::{format_rational, parse_rational, Rational};

    struct RationalVisitor;

    impl<'de> Visitor<'de> for RationalVisitor {
        type Value = Rational;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a number or a \"p/q\" string")
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<Rational, E> {
            parse_rational(v).map_err(E::custom)
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<Rational, E> {
            Ok(super::int(v))
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<Rational, E> {
            Ok(Rational::from_integer(v.into()))
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<Rational, E> {
            // Shortest round-trip text of the parsed double, read exactly.
            parse_rational(&format!("{v:e}")).map_err(E::custom)
        }
    }

    struct RationalSeqVisitor;

    impl<'de> Visitor<'de> for RationalSeqVisitor {
        type Value = Vec<Rational>;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a list of numbers or \"p/q\" strings")
        }

        fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Vec<Rational>, A::Error> {
            let mut out = Vec::new();
            while let Some(Exact(r)) = seq.next_element()? {
                out.push(r);
            }
            Ok(out)
        }
    }

    struct Exact(Rational);

    impl<'de> serde::Deserialize<'de> for Exact {
        fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
            d.deserialize_any(RationalVisitor).map(Exact)
        }
    }

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        d.deserialize_any(RationalVisitor)
    }

    pub mod vec {
        use super::*;

        pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for r in v {
                seq.serialize_element(&format_rational(r))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
            d.deserialize_seq(RationalSeqVisitor)
        }
    }
}
