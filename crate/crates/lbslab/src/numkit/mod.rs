//! Exact arbitrary-precision arithmetic, seeded randomness, factoring, and a
//! small exact linear solver.
//!
//! Everything downstream (protocol, attacks) works over [`BigInt`] so the
//! algebra is exact: no overflow, no rounding. Rationals appear only in the
//! attack solvers; protocol arithmetic stays in integers.

mod factor;
mod rng;
mod solve;

pub use factor::{divisors_up_to, factorize, is_prime, next_prime};
pub use rng::SeededRng;
pub use solve::{solve_linear_exact, SolveError};

pub use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed};
use thiserror::Error;

/// Exact rational, always in lowest terms with positive denominator.
pub type Rational = num_rational::BigRational;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NumError {
    #[error("input must be nonzero")]
    ZeroInput,
    #[error("input must be positive, got a negative value")]
    NegativeInput,
}

/// 2^l.
pub fn pow2(l: u32) -> BigInt {
    BigInt::one() << l
}

/// x mod 2^l, always in [0, 2^l). Works for negative x.
pub fn mod_reduce(x: &BigInt, l: u32) -> BigInt {
    debug_assert!(l >= 1);
    x.mod_floor(&pow2(l))
}

/// Bit i of a non-negative integer.
pub fn bit(x: &BigInt, i: u32) -> bool {
    debug_assert!(!x.is_negative());
    !(x >> i).is_even()
}

/// Number of bits in |x|; 0 for x = 0.
pub fn bit_length(x: &BigInt) -> u64 {
    x.bits()
}

/// Smallest l with 2^l >= x, for x >= 1. Equals ceil(log2(x)).
pub fn ceil_log2(x: &BigInt) -> u32 {
    assert!(x.is_positive());
    let b = x.bits() as u32;
    if x == &pow2(b - 1) {
        b - 1
    } else {
        b
    }
}

/// True if x is k^2 for some integer k.
pub fn is_perfect_square(x: &BigInt) -> bool {
    if x.is_negative() {
        return false;
    }
    let r = x.sqrt();
    &(&r * &r) == x
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;
    use proptest::prelude::*;

    #[test]
    fn mod_reduce_worked_values() {
        // w = 34 folds to 2 and rho = 31 folds to 3 at l = 2.
        assert_eq!(mod_reduce(&BigInt::from(34), 2), BigInt::from(2));
        assert_eq!(mod_reduce(&BigInt::from(31), 2), BigInt::from(3));
        assert_eq!(mod_reduce(&BigInt::from(0), 7), BigInt::from(0));
    }

    #[test]
    fn mod_reduce_negative_operand() {
        assert_eq!(mod_reduce(&BigInt::from(-1), 4), BigInt::from(15));
        assert_eq!(mod_reduce(&BigInt::from(-16), 4), BigInt::from(0));
    }

    #[test]
    fn bigint_string_round_trips() {
        let v: BigInt = "-123456789012345678901234567890".parse().unwrap();
        assert_eq!(v.to_string().parse::<BigInt>().unwrap(), v);
        let hex = format!("{v:x}");
        let back = BigInt::parse_bytes(hex.as_bytes(), 16).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn ceil_log2_boundaries() {
        assert_eq!(ceil_log2(&BigInt::from(1)), 0);
        assert_eq!(ceil_log2(&BigInt::from(2)), 1);
        assert_eq!(ceil_log2(&BigInt::from(3)), 2);
        assert_eq!(ceil_log2(&BigInt::from(16)), 4);
        assert_eq!(ceil_log2(&BigInt::from(17)), 5);
    }

    proptest! {
        #[test]
        fn mod_reduce_in_range(x in any::<i128>(), l in 1u32..64) {
            let r = mod_reduce(&BigInt::from(x), l);
            prop_assert!(!r.is_negative());
            prop_assert!(r < pow2(l));
            // The reduction is a congruence.
            prop_assert!(((BigInt::from(x) - &r) % pow2(l)).is_zero());
        }

        #[test]
        fn bits_match_shifting(x in 0u128..u128::MAX, i in 0u32..127) {
            let b = bit(&BigInt::from(x), i);
            prop_assert_eq!(b, (x >> i) & 1 == 1);
        }
    }
}
