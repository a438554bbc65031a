//! Exact rationals, seeded random streams and binomial intervals.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A probability-like parameter kept both exactly and as a float.
#[derive(Clone, Debug, PartialEq)]
pub struct Ratio {
    exact: BigRational,
    approx: f64,
}

impl Ratio {
    pub fn new(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::InvalidArgument("zero denominator".into()));
        }
        Ok(Ratio::from_exact(BigRational::new(num.into(), den.into())))
    }

    pub fn from_exact(exact: BigRational) -> Self {
        let approx = to_f64(&exact);
        Ratio { exact, approx }
    }

    /// Parses `"p/q"`, a decimal literal such as `"0.9"`, or an integer.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidArgument(format!("not a rational number: {s:?}"));
        if let Some((p, q)) = s.split_once('/') {
            let p: BigInt = p.trim().parse().map_err(|_| bad())?;
            let q: BigInt = q.trim().parse().map_err(|_| bad())?;
            if q.is_zero() {
                return Err(bad());
            }
            return Ok(Ratio::from_exact(BigRational::new(p, q)));
        }
        let (mantissa, exp) = match s.split_once(['e', 'E']) {
            Some((m, e)) => (m, e.parse::<i32>().map_err(|_| bad())?),
            None => (s, 0),
        };
        let (neg, mantissa) = match mantissa.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, mantissa),
        };
        let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
        if int.is_empty() && frac.is_empty() {
            return Err(bad());
        }
        if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let digits: BigInt = format!("{int}{frac}").parse().unwrap_or_else(|_| BigInt::zero());
        let scale = exp - frac.len() as i32;
        let ten = BigInt::from(10u32);
        let mut value = if scale >= 0 {
            BigRational::from_integer(digits * num_traits::pow(ten, scale as usize))
        } else {
            BigRational::new(digits, num_traits::pow(ten, (-scale) as usize))
        };
        if neg {
            value = -value;
        }
        Ok(Ratio::from_exact(value))
    }

    /// Exact value of a float via its shortest decimal representation.
    pub fn from_f64(x: f64) -> Result<Self> {
        if !x.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite value {x}")));
        }
        Ratio::parse(&format!("{x}"))
    }

    pub fn exact(&self) -> &BigRational {
        &self.exact
    }

    pub fn as_f64(&self) -> f64 {
        self.approx
    }

    pub fn in_unit_interval(&self) -> bool {
        !self.exact.is_negative() && self.exact <= BigRational::one()
    }
}

impl std::fmt::Display for Ratio {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.exact)
    }
}

impl Serialize for Ratio {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.exact.to_string())
    }
}

impl<'de> Deserialize<'de> for Ratio {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Wire {
            Num(f64),
            Str(String),
        }
        match Wire::deserialize(d)? {
            Wire::Num(x) => Ratio::from_f64(x),
            Wire::Str(s) => Ratio::parse(&s),
        }
        .map_err(serde::de::Error::custom)
    }
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // fall back on scaled integer division for very large operands
        let n = r.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = r.denom().to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

pub fn pow_rational(base: &BigRational, exp: u64) -> BigRational {
    num_traits::pow(base.clone(), exp as usize)
}

pub fn pow_biguint(base: u64, exp: u64) -> BigUint {
    num_traits::pow(BigUint::from(base), exp as usize)
}

/// Natural log of a big unsigned integer.
pub fn ln_biguint(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().map(f64::ln).unwrap_or(f64::INFINITY);
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().unwrap_or(f64::INFINITY);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Serializes a rational as `"p/q"` plus its float value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExactValue {
    pub exact: String,
    pub approx: f64,
}

impl From<&BigRational> for ExactValue {
    fn from(r: &BigRational) -> Self {
        ExactValue {
            exact: r.to_string(),
            approx: to_f64(r),
        }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent stream for `(seed, purpose, index)`: the key is derived from
/// the seed and purpose, the ChaCha stream id is the index.
pub fn stream_rng(seed: u64, purpose: u64, index: u64) -> ChaCha8Rng {
    let mut state = seed ^ purpose.rotate_left(32) ^ 0x5EED_5EED_0000_0000;
    let mut key = [0u8; 32];
    for chunk in key.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Stream purposes, so different experiments never share randomness.
pub mod purpose {
    pub const FORBIDDEN_SET: u64 = 1;
    pub const GN_SAMPLE: u64 = 2;
    pub const UNIQUENESS: u64 = 3;
    pub const EMBED_INPUT: u64 = 4;
    pub const MARKER_PROBE: u64 = 5;
    pub const LIPSCHITZ_PROBE: u64 = 6;
}

/// Two-sided 99% normal quantile.
pub const Z99: f64 = 2.575_829_303_548_900_4;

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn parses_rationals() {
        assert_eq!(Ratio::parse("3/4").unwrap(), Ratio::new(3, 4).unwrap());
        assert_eq!(Ratio::parse("0.9").unwrap(), Ratio::new(9, 10).unwrap());
        assert_eq!(Ratio::parse("1").unwrap(), Ratio::new(1, 1).unwrap());
        assert_eq!(Ratio::parse("2.5e-1").unwrap(), Ratio::new(1, 4).unwrap());
        assert_eq!(Ratio::from_f64(0.1).unwrap(), Ratio::new(1, 10).unwrap());
        assert!(Ratio::parse("1/0").is_err());
        assert!(Ratio::parse("abc").is_err());
        let r: Ratio = serde_json::from_str("0.75").unwrap();
        assert_eq!(r, Ratio::new(3, 4).unwrap());
        let r: Ratio = serde_json::from_str("\"9/10\"").unwrap();
        assert_eq!(serde_json::to_string(&r).unwrap(), "\"9/10\"");
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map(|_| 0).scan(stream_rng(7, 1, 3), |r, _: u64| Some(r.gen())).collect();
        let b: Vec<u64> = (0..4).map(|_| 0).scan(stream_rng(7, 1, 3), |r, _: u64| Some(r.gen())).collect();
        let c: Vec<u64> = (0..4).map(|_| 0).scan(stream_rng(7, 1, 4), |r, _: u64| Some(r.gen())).collect();
        let d: Vec<u64> = (0..4).map(|_| 0).scan(stream_rng(7, 2, 3), |r, _: u64| Some(r.gen())).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn wilson_contains_truth() {
        let (lo, hi) = wilson_interval(0, 10_000, Z99);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 1e-3);
        let (lo, hi) = wilson_interval(5_000, 10_000, Z99);
        assert!(lo < 0.5 && 0.5 < hi);
    }

    #[test]
    fn big_logs() {
        let x = pow_biguint(2, 5000);
        assert!((ln_biguint(&x) - 5000.0 * std::f64::consts::LN_2).abs() < 1e-9);
        assert_eq!(ln_biguint(&BigUint::from(1u32)), 0.0);
    }
}
