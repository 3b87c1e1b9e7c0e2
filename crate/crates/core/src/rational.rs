//! Exact rational endpoints and grid coordinates.
//!
//! Interval membership of grid nodes must be decided without floating error,
//! so piece endpoints and node coordinates are kept as reduced fractions.

use num_rational::Ratio;
use num_traits::ToPrimitive;
use thiserror::Error;

/// A reduced fraction over i128. Wide enough that grid-node arithmetic
/// (denominators up to 2·M·10⁹) never overflows on comparison.
pub type Rational = Ratio<i128>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RationalError {
    #[error("empty rational literal")]
    Empty,
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
    #[error("cannot parse `{0}` as a rational (`p/q`, integer, or decimal with <= 12 fractional digits)")]
    Malformed(String),
    #[error("`{0}` has more than 12 fractional digits")]
    TooManyDigits(String),
}

/// Parses `p/q`, an integer, or a decimal with at most 12 fractional digits,
/// into an exact fraction. Whitespace around the literal is ignored.
pub fn parse_rational(text: &str) -> Result<Rational, RationalError> {
    let s = text.trim();
    if s.is_empty() {
        return Err(RationalError::Empty);
    }
    if let Some((num, den)) = s.split_once('/') {
        let n: i128 = num
            .trim()
            .parse()
            .map_err(|_| RationalError::Malformed(text.to_string()))?;
        let d: i128 = den
            .trim()
            .parse()
            .map_err(|_| RationalError::Malformed(text.to_string()))?;
        if d == 0 {
            return Err(RationalError::ZeroDenominator(text.to_string()));
        }
        return Ok(Rational::new(n, d));
    }
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1i128, rest),
        None => (1i128, s.strip_prefix('+').unwrap_or(s)),
    };
    let parse_digits = |d: &str| -> Result<i128, RationalError> {
        if d.is_empty() || !d.bytes().all(|b| b.is_ascii_digit()) {
            return Err(RationalError::Malformed(text.to_string()));
        }
        d.parse().map_err(|_| RationalError::Malformed(text.to_string()))
    };
    match body.split_once('.') {
        None => Ok(Rational::from_integer(sign * parse_digits(body)?)),
        Some((int_part, frac_part)) => {
            if frac_part.len() > 12 {
                return Err(RationalError::TooManyDigits(text.to_string()));
            }
            let int = parse_digits(int_part)?;
            let frac = parse_digits(frac_part)?;
            let scale = 10i128.pow(frac_part.len() as u32);
            Ok(Rational::new(sign * (int * scale + frac), scale))
        }
    }
}

/// Exact f64 rendering for reports; exact for dyadic grid nodes, nearest
/// double otherwise.
pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().expect("rational within f64 range")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_integers_decimals() {
        assert_eq!(parse_rational("5/2").unwrap(), Rational::new(5, 2));
        assert_eq!(parse_rational("-7/3").unwrap(), Rational::new(-7, 3));
        assert_eq!(parse_rational("3").unwrap(), Rational::from_integer(3));
        assert_eq!(parse_rational(" 2.5 ").unwrap(), Rational::new(5, 2));
        assert_eq!(parse_rational("0.1").unwrap(), Rational::new(1, 10));
        assert_eq!(parse_rational("-0.125").unwrap(), Rational::new(-1, 8));
        assert_eq!(
            parse_rational("0.000000000001").unwrap(),
            Rational::new(1, 1_000_000_000_000)
        );
    }

    #[test]
    fn rejects_malformed_literals() {
        assert!(matches!(parse_rational(""), Err(RationalError::Empty)));
        assert!(matches!(parse_rational("1/0"), Err(RationalError::ZeroDenominator(_))));
        assert!(matches!(parse_rational("0.0000000000001"), Err(RationalError::TooManyDigits(_))));
        assert!(parse_rational("2.").is_err());
        assert!(parse_rational(".5").is_err());
        assert!(parse_rational("1e3").is_err());
        assert!(parse_rational("inf").is_err());
    }

    #[test]
    fn dyadic_to_f64_is_exact() {
        let node = Rational::new(7, 1024);
        assert_eq!(to_f64(&node), 7.0 / 1024.0);
    }
}
