//! Textbook ring-LWE leveled backend over Z_q[X]/(X^n + 1) with q a power of
//! two. Ciphertexts are polynomials in the secret key; multiplication grows
//! the component vector instead of relinearizing, which is fine at toy ring
//! dimensions. Noise is tracked as a sound infinity-norm upper bound on the
//! underlying integer payload, so the backend can refuse an operation before
//! a decryption could ever be wrong.

use crate::numkit::{BigInt, SeededRng};
use num_integer::Integer;
use num_traits::{One, Zero};

const ERR_BOUND: u64 = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RingParams {
    pub n: usize,
    pub q: BigInt,
    pub q_bits: u32,
}

impl RingParams {
    /// Parameters sized so that a circuit of `max_depth` worst-case
    /// multiplication levels stays decryptable, capped at 1024-bit q (past
    /// the cap the tracked noise bound raises the error instead).
    pub fn for_scheme(p: &BigInt, n: usize, max_depth: u32) -> RingParams {
        debug_assert!(n.is_power_of_two());
        let fresh = fresh_noise_bound(p, n);
        let per_level = fresh.bits() as u32 + (n as u64).ilog2() + 2;
        let q_bits = ((1u32 << max_depth.min(8)) * per_level + 16).min(1024);
        RingParams {
            n,
            q: BigInt::one() << q_bits,
            q_bits,
        }
    }

    /// True while a payload with this infinity-norm bound still decrypts
    /// unambiguously (bound < q/2).
    pub fn bound_ok(&self, bound: &BigInt) -> bool {
        bound * 2u32 < self.q
    }

    fn reduce(&self, v: BigInt) -> BigInt {
        v.mod_floor(&self.q)
    }

    fn center(&self, v: &BigInt) -> BigInt {
        let half = &self.q >> 1;
        if v > &half {
            v - &self.q
        } else {
            v.clone()
        }
    }
}

/// Sound bound on |m + p*(e*u + e1 + e2*s)| for ternary u, s and errors
/// bounded by ERR_BOUND.
pub fn fresh_noise_bound(p: &BigInt, n: usize) -> BigInt {
    p * BigInt::from(2 * n as u64 * ERR_BOUND + ERR_BOUND + 1)
}

/// Polynomial in Z_q[X]/(X^n + 1), coefficients in [0, q).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RingElem(Vec<BigInt>);

impl RingElem {
    fn zero(n: usize) -> RingElem {
        RingElem(vec![BigInt::zero(); n])
    }

    pub fn to_hex(&self) -> String {
        let parts: Vec<String> = self.0.iter().map(|c| c.to_str_radix(16)).collect();
        parts.join(".")
    }

    fn add(&self, other: &RingElem, ring: &RingParams) -> RingElem {
        RingElem(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| ring.reduce(a + b))
                .collect(),
        )
    }

    fn sub(&self, other: &RingElem, ring: &RingParams) -> RingElem {
        RingElem(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| ring.reduce(a - b))
                .collect(),
        )
    }

    fn neg(&self, ring: &RingParams) -> RingElem {
        RingElem(self.0.iter().map(|a| ring.reduce(-a)).collect())
    }

    fn scale(&self, k: &BigInt, ring: &RingParams) -> RingElem {
        RingElem(self.0.iter().map(|a| ring.reduce(a * k)).collect())
    }

    /// Negacyclic schoolbook product: X^n = -1.
    fn mul(&self, other: &RingElem, ring: &RingParams) -> RingElem {
        let n = ring.n;
        let mut acc = vec![BigInt::zero(); n];
        for (i, a) in self.0.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.0.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                let prod = a * b;
                let k = i + j;
                if k < n {
                    acc[k] += prod;
                } else {
                    acc[k - n] -= prod;
                }
            }
        }
        RingElem(acc.into_iter().map(|c| ring.reduce(c)).collect())
    }
}

#[derive(Debug, Clone)]
pub struct PublicKey {
    a: RingElem,
    b: RingElem,
}

impl PublicKey {
    pub fn hash_into(&self, h: &mut super::Fnv) {
        for elem in [&self.a, &self.b] {
            for c in &elem.0 {
                h.write(&c.to_signed_bytes_be());
            }
        }
    }

    pub fn to_hex(&self) -> String {
        format!("{}:{}", self.a.to_hex(), self.b.to_hex())
    }
}

#[derive(Debug, Clone)]
pub struct SecretKey {
    s: RingElem,
}

fn sample_uniform(ring: &RingParams, rng: &mut SeededRng) -> RingElem {
    RingElem((0..ring.n).map(|_| rng.rand_bits(ring.q_bits)).collect())
}

fn sample_ternary(ring: &RingParams, rng: &mut SeededRng) -> RingElem {
    RingElem(
        (0..ring.n)
            .map(|_| match rng.rand_u64_below(3) {
                0 => ring.reduce(BigInt::from(-1)),
                1 => BigInt::zero(),
                _ => BigInt::one(),
            })
            .collect(),
    )
}

fn sample_error(ring: &RingParams, rng: &mut SeededRng) -> RingElem {
    RingElem(
        (0..ring.n)
            .map(|_| {
                let v = rng.rand_u64_below(2 * ERR_BOUND + 1) as i64 - ERR_BOUND as i64;
                ring.reduce(BigInt::from(v))
            })
            .collect(),
    )
}

pub fn keygen(
    ring: &RingParams,
    p: &BigInt,
    rng: &mut SeededRng,
) -> (PublicKey, SecretKey, BigInt) {
    let s = sample_ternary(ring, rng);
    let a = sample_uniform(ring, rng);
    let e = sample_error(ring, rng);
    // b = -(a*s) + p*e
    let b = a.mul(&s, ring).neg(ring).add(&e.scale(p, ring), ring);
    (PublicKey { a, b }, SecretKey { s }, fresh_noise_bound(p, ring.n))
}

pub fn encrypt(
    ring: &RingParams,
    pk: &PublicKey,
    p: &BigInt,
    m: &BigInt,
    rng: &mut SeededRng,
) -> Vec<RingElem> {
    let u = sample_ternary(ring, rng);
    let e1 = sample_error(ring, rng);
    let e2 = sample_error(ring, rng);
    // c0 = b*u + p*e1 + m ; c1 = a*u + p*e2
    // so that c0 + c1*s = m + p*(e*u + e1 + e2*s).
    let mut m_poly = RingElem::zero(ring.n);
    m_poly.0[0] = ring.reduce(m.clone());
    let c0 = pk
        .b
        .mul(&u, ring)
        .add(&e1.scale(p, ring), ring)
        .add(&m_poly, ring);
    let c1 = pk.a.mul(&u, ring).add(&e2.scale(p, ring), ring);
    vec![c0, c1]
}

pub fn decrypt(ring: &RingParams, sk: &SecretKey, p: &BigInt, comps: &[RingElem]) -> BigInt {
    // Evaluate the component polynomial at the secret key.
    let mut acc = comps[0].clone();
    let mut s_pow = sk.s.clone();
    for comp in &comps[1..] {
        acc = acc.add(&comp.mul(&s_pow, ring), ring);
        s_pow = s_pow.mul(&sk.s, ring);
    }
    let constant = ring.center(&acc.0[0]);
    constant.mod_floor(p)
}

pub fn add_components(ring: &RingParams, a: &[RingElem], b: &[RingElem]) -> Vec<RingElem> {
    merge(ring, a, b, false)
}

pub fn sub_components(ring: &RingParams, a: &[RingElem], b: &[RingElem]) -> Vec<RingElem> {
    merge(ring, a, b, true)
}

fn merge(ring: &RingParams, a: &[RingElem], b: &[RingElem], sub: bool) -> Vec<RingElem> {
    let len = a.len().max(b.len());
    let zero = RingElem::zero(ring.n);
    (0..len)
        .map(|i| {
            let x = a.get(i).unwrap_or(&zero);
            let y = b.get(i).unwrap_or(&zero);
            if sub {
                x.sub(y, ring)
            } else {
                x.add(y, ring)
            }
        })
        .collect()
}

pub fn add_constant(ring: &RingParams, comps: &[RingElem], m: &BigInt) -> Vec<RingElem> {
    let mut out = comps.to_vec();
    out[0].0[0] = ring.reduce(&out[0].0[0] + m);
    out
}

pub fn scale_components(ring: &RingParams, comps: &[RingElem], k: &BigInt) -> Vec<RingElem> {
    comps.iter().map(|c| c.scale(k, ring)).collect()
}

pub fn mul_components(ring: &RingParams, a: &[RingElem], b: &[RingElem]) -> Vec<RingElem> {
    let mut out = vec![RingElem::zero(ring.n); a.len() + b.len() - 1];
    for (i, ca) in a.iter().enumerate() {
        for (j, cb) in b.iter().enumerate() {
            out[i + j] = out[i + j].add(&ca.mul(cb, ring), ring);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negacyclic_wraparound() {
        // (X^(n-1)) * X = X^n = -1.
        let ring = RingParams::for_scheme(&BigInt::from(257), 16, 2);
        let mut xn1 = RingElem::zero(16);
        xn1.0[15] = BigInt::one();
        let mut x = RingElem::zero(16);
        x.0[1] = BigInt::one();
        let prod = xn1.mul(&x, &ring);
        assert_eq!(prod.0[0], &ring.q - 1u32);
        assert!(prod.0[1..].iter().all(|c| c.is_zero()));
    }

    #[test]
    fn eval_at_secret_recovers_payload() {
        let p = BigInt::from(65_537u64);
        let ring = RingParams::for_scheme(&p, 16, 2);
        let mut rng = SeededRng::new(8);
        let (pk, sk, _) = keygen(&ring, &p, &mut rng);
        for m in [0u64, 1, 2, 65_536] {
            let comps = encrypt(&ring, &pk, &p, &BigInt::from(m), &mut rng);
            assert_eq!(decrypt(&ring, &sk, &p, &comps), BigInt::from(m));
        }
    }
}
