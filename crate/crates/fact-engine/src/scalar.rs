//! Scalar abstraction for the matrix kernel.

use std::fmt::{Debug, Display};

use num_traits::Num;

/// Field-like scalar for exact linear algebra: ring operations with division,
/// exact equality, and a printable form. `num_rational::BigRational` is the
/// instantiation used throughout the engine; any exact field works.
///
/// Equality must be honest (no tolerance): the law checkers compare matrices
/// entrywise and report any mismatch as a violation.
pub trait Scalar: Num + Clone + Debug + Display {}

impl<T: Num + Clone + Debug + Display> Scalar for T {}

/// Parses a scalar written as `p/q` or a bare integer `p`.
pub fn parse_rational(s: &str) -> Result<crate::Rat, String> {
    use num_bigint::BigInt;
    use std::str::FromStr;
    let mk = |n: &str| BigInt::from_str(n.trim()).map_err(|e| format!("bad integer {n:?}: {e}"));
    match s.split_once('/') {
        Some((p, q)) => {
            let (p, q) = (mk(p)?, mk(q)?);
            if num_traits::Zero::is_zero(&q) {
                return Err(format!("zero denominator in {s:?}"));
            }
            Ok(crate::Rat::new(p, q))
        }
        None => Ok(crate::Rat::from_integer(mk(s)?)),
    }
}

/// Renders a scalar in the form accepted by [`parse_rational`].
pub fn render_rational(r: &crate::Rat) -> String {
    r.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    #[test]
    fn parse_and_render_round_trip() {
        for s in ["0", "1", "-3", "2/3", "-7/5", "10/4"] {
            let r = parse_rational(s).unwrap();
            let back = parse_rational(&render_rational(&r)).unwrap();
            assert_eq!(r, back);
        }
        // normalization: 10/4 prints as 5/2
        assert_eq!(render_rational(&parse_rational("10/4").unwrap()), "5/2");
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("a/b").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn one_renders_as_bare_integer() {
        assert_eq!(render_rational(&crate::Rat::one()), "1");
    }
}
