//! Exact rational scalar type and conversions.
//!
//! All gear-train reductions, characteristic matrices and mode dedup run on
//! arbitrary-precision rationals so that equal dynamics compare bit-equal.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

/// Exact rational scalar used throughout the kinematic core.
pub type Frac = BigRational;

/// Builds a rational from an integer numerator/denominator pair.
pub fn frac(num: i64, den: i64) -> Frac {
    Frac::new(BigInt::from(num), BigInt::from(den))
}

/// Builds a rational from an integer.
pub fn frac_int(n: i64) -> Frac {
    Frac::from_integer(BigInt::from(n))
}

/// Parses `"p/q"`, plain integers and decimal literals (`"0.22"` -> 11/50).
pub fn parse_frac(s: &str) -> Result<Frac, String> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num
            .trim()
            .parse()
            .map_err(|_| format!("bad numerator in `{s}`"))?;
        let d: BigInt = den
            .trim()
            .parse()
            .map_err(|_| format!("bad denominator in `{s}`"))?;
        if d.is_zero() {
            return Err(format!("zero denominator in `{s}`"));
        }
        return Ok(Frac::new(n, d));
    }
    if let Some((int_part, dec_part)) = s.split_once('.') {
        let digits = dec_part.trim();
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(format!("bad decimal literal `{s}`"));
        }
        let negative = int_part.trim_start().starts_with('-');
        let int_val: BigInt = if int_part.trim() == "-" || int_part.trim().is_empty() {
            BigInt::zero()
        } else {
            int_part
                .trim()
                .parse()
                .map_err(|_| format!("bad integer part in `{s}`"))?
        };
        let scale = BigInt::from(10u32).pow(digits.len() as u32);
        let frac_val: BigInt = digits.parse().map_err(|_| format!("bad decimal `{s}`"))?;
        let mut num = int_val.abs() * &scale + frac_val;
        if negative {
            num = -num;
        }
        return Ok(Frac::new(num, scale));
    }
    let n: BigInt = s.parse().map_err(|_| format!("bad rational `{s}`"))?;
    Ok(Frac::from_integer(n))
}

/// Canonical text form: `"0"`, `"-3"`, `"7/2"`. Used for dedup signatures.
pub fn frac_str(f: &Frac) -> String {
    if f.is_integer() {
        f.numer().to_string()
    } else {
        format!("{}/{}", f.numer(), f.denom())
    }
}

/// Lossy conversion for the floating-point plant/energy layers.
pub fn frac_f64(f: &Frac) -> f64 {
    f.to_f64().unwrap_or_else(|| {
        // Fall back to a quotient of approximations for extreme magnitudes.
        let n = f.numer().to_f64().unwrap_or(f64::MAX);
        let d = f.denom().to_f64().unwrap_or(f64::MAX);
        n / d
    })
}
