//! Factoring: trial division over a sieve of small primes, then Brent's
//! variant of Pollard rho, with a Miller-Rabin primality test. Sized for
//! desk-scale inputs (up to ~96-bit composites), not for records.

use super::NumError;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::sync::OnceLock;

const TRIAL_LIMIT: u64 = 1_000_000;

/// Miller-Rabin witnesses. Deterministic for every n < 3.3 * 10^24, which
/// covers the sieve-and-rho range; above that the fixed set still gives the
/// same answer on every run.
const MR_BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
const MR_BASES_WIDE: [u64; 13] = [41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97];

fn small_primes() -> &'static [u64] {
    static PRIMES: OnceLock<Vec<u64>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let limit = TRIAL_LIMIT as usize;
        let mut composite = vec![false; limit + 1];
        let mut primes = Vec::with_capacity(80_000);
        for p in 2..=limit {
            if !composite[p] {
                primes.push(p as u64);
                let mut q = p * p;
                while q <= limit {
                    composite[q] = true;
                    q += p;
                }
            }
        }
        primes
    })
}

fn mulmod_u64(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn powmod_u64(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mulmod_u64(acc, base, m);
        }
        base = mulmod_u64(base, base, m);
        exp >>= 1;
    }
    acc
}

fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n.is_multiple_of(p) {
            return false;
        }
    }
    let d = n - 1;
    let s = d.trailing_zeros();
    let d = d >> s;
    'witness: for &a in &MR_BASES {
        let mut x = powmod_u64(a % n, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod_u64(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn is_prime_bigint(n: &BigInt) -> bool {
    if let Some(v) = n.to_u64() {
        return is_prime_u64(v);
    }
    if n.is_negative() || n.is_even() {
        return false;
    }
    // Cheap prescreen: n is far above any small prime here, so divisibility
    // means composite.
    for &p in &small_primes()[..168] {
        if (n % p).is_zero() {
            return false;
        }
    }
    let one = BigInt::one();
    let n_minus_1 = n - &one;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;
    let wide = n.bits() > 81;
    let bases = MR_BASES
        .iter()
        .chain(if wide { MR_BASES_WIDE.iter() } else { [].iter() });
    'witness: for &a in bases {
        let a = BigInt::from(a);
        if &a >= n {
            continue;
        }
        let mut x = a.modpow(&d, n);
        if x == one || x == n_minus_1 {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&BigInt::from(2), n);
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Primality check used both inside `factorize` and as an oracle in tests.
pub fn is_prime(n: &BigInt) -> bool {
    is_prime_bigint(n)
}

/// Smallest prime strictly greater than n.
pub fn next_prime(n: &BigInt) -> BigInt {
    let mut cand = n + BigInt::one();
    if cand <= BigInt::from(2) {
        return BigInt::from(2);
    }
    if cand.is_even() {
        cand += BigInt::one();
    }
    while !is_prime(&cand) {
        cand += BigInt::from(2);
    }
    cand
}

/// Brent's cycle-finding rho. `n` must be odd, composite, and free of
/// factors below the trial limit.
fn brent_u64(n: u64) -> u64 {
    for c in 1u64.. {
        let f = |x: u64| (mulmod_u64(x, x, n) + c) % n;
        let mut y = 2u64;
        let mut r = 1u64;
        let mut q = 1u64;
        let mut g = 1u64;
        let mut x = 0u64;
        let mut ys = 0u64;
        let m = 128u64;
        while g == 1 {
            x = y;
            for _ in 0..r {
                y = f(y);
            }
            let mut k = 0u64;
            while k < r && g == 1 {
                ys = y;
                for _ in 0..m.min(r - k) {
                    y = f(y);
                    q = mulmod_u64(q, x.abs_diff(y), n);
                }
                g = gcd_u64(q, n);
                k += m;
            }
            r *= 2;
        }
        if g == n {
            // Backtrack one step at a time.
            g = 1;
            while g == 1 {
                ys = f(ys);
                g = gcd_u64(x.abs_diff(ys), n);
            }
        }
        if g != n {
            return g;
        }
        // Cycle degenerated for this c; retry with the next increment.
    }
    unreachable!()
}

fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn brent_bigint(n: &BigInt) -> BigInt {
    let one = BigInt::one();
    for c in 1u64.. {
        let c = BigInt::from(c);
        let f = |x: &BigInt| (x * x + &c) % n;
        let mut y = BigInt::from(2);
        let mut r = 1u64;
        let mut q = BigInt::one();
        let mut g = BigInt::one();
        let mut x = BigInt::zero();
        let mut ys = BigInt::zero();
        let m = 128u64;
        while g.is_one() {
            x = y.clone();
            for _ in 0..r {
                y = f(&y);
            }
            let mut k = 0u64;
            while k < r && g.is_one() {
                ys = y.clone();
                for _ in 0..m.min(r - k) {
                    y = f(&y);
                    q = (&q * (&x - &y).abs()) % n;
                }
                g = q.gcd(n);
                k += m;
            }
            r *= 2;
        }
        if &g == n {
            g = one.clone();
            while g.is_one() {
                ys = f(&ys);
                g = (&x - &ys).abs().gcd(n);
            }
        }
        if &g != n {
            return g;
        }
    }
    unreachable!()
}

fn factor_u64_into(n: u64, out: &mut Vec<u64>) {
    if n == 1 {
        return;
    }
    if is_prime_u64(n) {
        out.push(n);
        return;
    }
    let d = brent_u64(n);
    factor_u64_into(d, out);
    factor_u64_into(n / d, out);
}

fn factor_bigint_into(n: BigInt, out: &mut Vec<BigInt>) {
    if n.is_one() {
        return;
    }
    if let Some(v) = n.to_u64() {
        let mut small = Vec::new();
        factor_u64_into(v, &mut small);
        out.extend(small.into_iter().map(BigInt::from));
        return;
    }
    if is_prime_bigint(&n) {
        out.push(n);
        return;
    }
    let d = brent_bigint(&n);
    let q = &n / &d;
    factor_bigint_into(d, out);
    factor_bigint_into(q, out);
}

/// Prime factors of n with multiplicity, ascending. n = 1 gives the empty
/// multiset; n = 0 and negative n are rejected.
pub fn factorize(n: &BigInt) -> Result<Vec<BigInt>, NumError> {
    if n.is_zero() {
        return Err(NumError::ZeroInput);
    }
    if n.is_negative() {
        return Err(NumError::NegativeInput);
    }
    let mut out: Vec<BigInt> = Vec::new();

    // Trial division first, so rho only ever sees rough composites.
    if let Some(mut v) = n.to_u64() {
        for &p in small_primes() {
            if p * p > v {
                break;
            }
            while v % p == 0 {
                out.push(BigInt::from(p));
                v /= p;
            }
        }
        let mut rest = Vec::new();
        factor_u64_into(v, &mut rest);
        out.extend(rest.into_iter().map(BigInt::from));
    } else {
        let mut rem = n.clone();
        for &p in small_primes() {
            let p_big = BigInt::from(p);
            if &p_big * &p_big > rem {
                break;
            }
            loop {
                let (q, r) = rem.div_rem(&p_big);
                if !r.is_zero() {
                    break;
                }
                out.push(p_big.clone());
                rem = q;
            }
            if rem.to_u64().is_some() {
                break;
            }
        }
        factor_bigint_into(rem, &mut out);
    }

    out.sort();
    Ok(out)
}

/// All divisors d of n with 1 <= d <= bound, ascending, no duplicates.
pub fn divisors_up_to(n: &BigInt, bound: &BigInt) -> Result<Vec<BigInt>, NumError> {
    let factors = factorize(n)?;
    if bound < &BigInt::one() {
        return Ok(Vec::new());
    }

    // Group into (prime, exponent).
    let mut grouped: Vec<(BigInt, u32)> = Vec::new();
    for f in factors {
        match grouped.last_mut() {
            Some((p, e)) if *p == f => *e += 1,
            _ => grouped.push((f, 1)),
        }
    }

    let mut divisors = vec![BigInt::one()];
    for (p, e) in &grouped {
        let mut extended = Vec::with_capacity(divisors.len() * (*e as usize + 1));
        for d in &divisors {
            let mut cur = d.clone();
            extended.push(cur.clone());
            for _ in 0..*e {
                cur = &cur * p;
                if &cur > bound {
                    break;
                }
                extended.push(cur.clone());
            }
        }
        divisors = extended;
    }
    divisors.retain(|d| d <= bound);
    divisors.sort();
    divisors.dedup();
    Ok(divisors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::{is_perfect_square, SeededRng};
    use num_traits::One;

    fn product(factors: &[BigInt]) -> BigInt {
        factors.iter().fold(BigInt::one(), |acc, f| acc * f)
    }

    #[test]
    fn one_has_empty_factorization() {
        assert!(factorize(&BigInt::one()).unwrap().is_empty());
    }

    #[test]
    fn rejects_zero() {
        assert_eq!(factorize(&BigInt::zero()), Err(NumError::ZeroInput));
        assert_eq!(
            divisors_up_to(&BigInt::zero(), &BigInt::from(5)),
            Err(NumError::ZeroInput)
        );
    }

    #[test]
    fn factors_of_210() {
        let fs = factorize(&BigInt::from(210)).unwrap();
        assert_eq!(fs, vec![2, 3, 5, 7].into_iter().map(BigInt::from).collect::<Vec<_>>());
        assert_eq!(product(&fs), BigInt::from(210));
        // Verify by trial division, independently of the factorizer.
        for f in &fs {
            let f = u64::try_from(f).unwrap();
            assert!((2..f).all(|d| f % d != 0));
        }
    }

    #[test]
    fn mersenne_31_is_prime() {
        let m31 = BigInt::from(2_147_483_647u64);
        assert_eq!(factorize(&m31).unwrap(), vec![m31.clone()]);
        assert!(is_prime(&m31));
        // Independent oracle: trial division to the square root.
        let v = 2_147_483_647u64;
        assert!(!v.is_multiple_of(2));
        assert!((3..=46_341).step_by(2).all(|d| !v.is_multiple_of(d)));
    }

    #[test]
    fn rho_path_past_the_trial_limit() {
        // Both primes exceed the trial-division limit.
        let p = BigInt::from(1_000_003u64);
        let q = BigInt::from(1_000_033u64);
        let fs = factorize(&(&p * &q)).unwrap();
        assert_eq!(fs, vec![p, q]);
    }

    #[test]
    fn bigint_rho_path() {
        // ~2^72 semiprime exercises the non-u64 code path.
        let p = next_prime(&(BigInt::one() << 36));
        let q = next_prime(&((BigInt::one() << 36) + BigInt::from(9999)));
        let n = &p * &q;
        assert!(n.to_u64().is_none());
        assert_eq!(factorize(&n).unwrap(), vec![p, q]);
    }

    #[test]
    fn random_products_round_trip() {
        let mut rng = SeededRng::new(41);
        for _ in 0..1000 {
            let n = rng.rand_bits(40) + BigInt::one();
            let fs = factorize(&n).unwrap();
            assert_eq!(product(&fs), n);
            for f in &fs {
                assert!(is_prime(f), "non-prime factor {f} of {n}");
            }
        }
    }

    #[test]
    fn divisor_enumeration() {
        let all = divisors_up_to(&BigInt::from(12), &BigInt::from(12)).unwrap();
        assert_eq!(all, [1, 2, 3, 4, 6, 12].map(BigInt::from).to_vec());

        let bounded = divisors_up_to(&BigInt::from(210), &BigInt::from(100)).unwrap();
        let expected = [1u64, 2, 3, 5, 6, 7, 10, 14, 15, 21, 30, 35, 42, 70]
            .map(BigInt::from)
            .to_vec();
        assert_eq!(bounded, expected);
        // Brute-force scan oracle over 1..=100.
        let brute: Vec<BigInt> = (1u64..=100)
            .filter(|d| 210u64.is_multiple_of(*d))
            .map(BigInt::from)
            .collect();
        assert_eq!(bounded, brute);

        let prime_above = divisors_up_to(&BigInt::from(17), &BigInt::from(16)).unwrap();
        assert_eq!(prime_above, vec![BigInt::one()]);
    }

    #[test]
    fn divisor_count_parity() {
        let mut rng = SeededRng::new(9);
        for _ in 0..200 {
            let n = rng.rand_bits(24) + BigInt::one();
            let ds = divisors_up_to(&n, &n).unwrap();
            let even = ds.len().is_multiple_of(2);
            assert_eq!(even, !is_perfect_square(&n), "n = {n}");
        }
    }

    #[test]
    fn next_prime_steps() {
        assert_eq!(next_prime(&BigInt::from(0)), BigInt::from(2));
        assert_eq!(next_prime(&BigInt::from(2)), BigInt::from(3));
        assert_eq!(next_prime(&BigInt::from(99)), BigInt::from(101));
        assert_eq!(next_prime(&BigInt::from(100)), BigInt::from(101));
    }
}
