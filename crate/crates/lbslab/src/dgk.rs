//! DGK-style additively homomorphic encryption over a small plaintext space
//! Z_u, with an efficient decryption-time zero test.
//!
//! A ciphertext is g^m * h^r mod n for an RSA-type modulus n = p*q with
//! u | p-1 and u | q-1. The order of h mod p is a secret prime v_p, so
//! c^v_p mod p equals 1 exactly when u divides m. That zero test is the only
//! decryption this scheme exposes, which is all the bitwise comparison step
//! needs: multiplying ciphertexts adds plaintexts, exponentiating by a scalar
//! coprime to u preserves zero-ness exactly, and everything else stays
//! hidden.

use crate::numkit::{self, BigInt, SeededRng};
use crate::she::Fnv;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DgkError {
    #[error("invalid plaintext space: {0}")]
    InvalidPlaintextSpace(String),
    #[error("modulus must be at least 256 bits")]
    ModulusTooSmall,
    #[error("plaintext out of range [0, u)")]
    PlaintextOutOfRange,
    #[error("ciphertexts belong to different keypairs")]
    KeyMismatch,
    #[error("scaling by zero would destroy the plaintext")]
    ZeroScale,
    #[error("scale factor must be positive")]
    NegativeScale,
}

#[derive(Debug, PartialEq, Eq)]
struct Ctx {
    key_id: u64,
    n: BigInt,
    u: BigInt,
}

#[derive(Debug, Clone)]
pub struct DgkPublicKey {
    ctx: Arc<Ctx>,
    g: BigInt,
    h: BigInt,
    r_bits: u32,
}

impl DgkPublicKey {
    pub fn key_id(&self) -> u64 {
        self.ctx.key_id
    }

    pub fn plaintext_space(&self) -> &BigInt {
        &self.ctx.u
    }

    pub fn modulus(&self) -> &BigInt {
        &self.ctx.n
    }

    pub fn fingerprint(&self) -> String {
        let mut f = Fnv::new();
        f.write(&self.ctx.key_id.to_be_bytes());
        for v in [&self.ctx.n, &self.g, &self.h, &self.ctx.u] {
            f.write(&v.to_signed_bytes_be());
        }
        format!("{:016x}", f.finish())
    }

    /// Opaque, versioned hex blob of the public key, as embedded in
    /// transcripts.
    pub fn to_hex_blob(&self) -> String {
        format!(
            "dgk-pk1:{:016x}:{}:{}:{}:{}",
            self.ctx.key_id,
            self.ctx.n.to_str_radix(16),
            self.g.to_str_radix(16),
            self.h.to_str_radix(16),
            self.ctx.u.to_str_radix(16)
        )
    }
}

#[derive(Debug, Clone)]
pub struct DgkSecretKey {
    ctx: Arc<Ctx>,
    p: BigInt,
    v_p: BigInt,
}

#[derive(Debug, Clone)]
pub struct DgkKeypair {
    pub public: DgkPublicKey,
    pub secret: DgkSecretKey,
}

#[derive(Debug, Clone)]
pub struct DgkCiphertext {
    ctx: Arc<Ctx>,
    value: BigInt,
}

impl DgkCiphertext {
    pub fn key_id(&self) -> u64 {
        self.ctx.key_id
    }

    pub fn to_hex_blob(&self) -> String {
        format!("dgk1:{:016x}:{}", self.ctx.key_id, self.value.to_str_radix(16))
    }
}

fn random_prime(bits: u32, rng: &mut SeededRng) -> BigInt {
    loop {
        let cand = rng.rand_bits(bits) | numkit::pow2(bits - 1) | BigInt::one();
        if numkit::is_prime(&cand) {
            return cand;
        }
    }
}

/// Prime p = 2*u*v*f + 1 with f coprime to u and v, so the subgroup orders
/// we need are embedded exactly once.
fn prime_with_orders(p_bits: u32, u: &BigInt, v: &BigInt, rng: &mut SeededRng) -> BigInt {
    let fixed = 1 + numkit::bit_length(u) as u32 + numkit::bit_length(v) as u32;
    let f_bits = p_bits.saturating_sub(fixed).max(8);
    loop {
        let f = rng.rand_bits(f_bits) | numkit::pow2(f_bits - 1) | BigInt::one();
        if (&f % u).is_zero() || (&f % v).is_zero() {
            continue;
        }
        let p = BigInt::from(2) * u * v * &f + BigInt::one();
        if numkit::is_prime(&p) {
            return p;
        }
    }
}

/// Element of order exactly ord = prod(order_primes) in Z_p^*, where
/// (p-1)/ord is integral.
fn element_of_order(p: &BigInt, ord: &BigInt, order_primes: &[&BigInt], rng: &mut SeededRng) -> BigInt {
    let cofactor = (p - BigInt::one()) / ord;
    let one = BigInt::one();
    loop {
        let x = rng.rand_range_inclusive(&BigInt::from(2), &(p - BigInt::from(2)));
        let g = x.modpow(&cofactor, p);
        if g == one {
            continue;
        }
        let full_order = order_primes
            .iter()
            .all(|w| g.modpow(&(ord / *w), p) != one);
        if full_order {
            return g;
        }
    }
}

fn crt(a_p: &BigInt, p: &BigInt, a_q: &BigInt, q: &BigInt) -> BigInt {
    let egcd = p.extended_gcd(q);
    debug_assert!(egcd.gcd.is_one());
    let p_inv_mod_q = egcd.x.mod_floor(q);
    let diff = (a_q - a_p).mod_floor(q);
    a_p + p * ((diff * p_inv_mod_q).mod_floor(q))
}

/// Generate a keypair with an n-bit modulus (>= 256; 512 is the toy
/// default) and plaintext space u, a small prime.
pub fn keygen(bits: u32, u: &BigInt, rng: &mut SeededRng) -> Result<DgkKeypair, DgkError> {
    if bits < 256 {
        return Err(DgkError::ModulusTooSmall);
    }
    if u < &BigInt::from(3) {
        return Err(DgkError::InvalidPlaintextSpace("u must be at least 3".into()));
    }
    if u.bits() > 24 {
        return Err(DgkError::InvalidPlaintextSpace("u must be a small prime".into()));
    }
    if !numkit::is_prime(u) {
        return Err(DgkError::InvalidPlaintextSpace("u must be prime".into()));
    }

    let p_bits = bits / 2;
    let v_bits = (bits / 4).min(160);
    let key_id = rng.next_u64();

    let v_p = random_prime(v_bits, rng);
    let v_q = loop {
        let cand = random_prime(v_bits, rng);
        if cand != v_p {
            break cand;
        }
    };
    let p = prime_with_orders(p_bits, u, &v_p, rng);
    let q = loop {
        let cand = prime_with_orders(p_bits, u, &v_q, rng);
        if cand != p {
            break cand;
        }
    };
    let n = &p * &q;

    // g has order u*v_p mod p and u*v_q mod q; h has order v_p mod p and
    // v_q mod q.
    let g_p = element_of_order(&p, &(u * &v_p), &[u, &v_p], rng);
    let g_q = element_of_order(&q, &(u * &v_q), &[u, &v_q], rng);
    let h_p = element_of_order(&p, &v_p, &[&v_p], rng);
    let h_q = element_of_order(&q, &v_q, &[&v_q], rng);
    let g = crt(&g_p, &p, &g_q, &q);
    let h = crt(&h_p, &p, &h_q, &q);

    let ctx = Arc::new(Ctx {
        key_id,
        n,
        u: u.clone(),
    });
    Ok(DgkKeypair {
        public: DgkPublicKey {
            ctx: ctx.clone(),
            g,
            h,
            r_bits: v_bits * 5 / 2,
        },
        secret: DgkSecretKey { ctx, p, v_p },
    })
}

/// Randomized encryption of m in [0, u).
pub fn encrypt(pk: &DgkPublicKey, m: &BigInt, rng: &mut SeededRng) -> Result<DgkCiphertext, DgkError> {
    if m.is_negative() || m >= &pk.ctx.u {
        return Err(DgkError::PlaintextOutOfRange);
    }
    let r = rng.rand_bits(pk.r_bits);
    let value = (pk.g.modpow(m, &pk.ctx.n) * pk.h.modpow(&r, &pk.ctx.n)).mod_floor(&pk.ctx.n);
    Ok(DgkCiphertext {
        ctx: pk.ctx.clone(),
        value,
    })
}

/// Encrypt a signed value as its residue mod u.
pub fn encrypt_signed(pk: &DgkPublicKey, m: &BigInt, rng: &mut SeededRng) -> Result<DgkCiphertext, DgkError> {
    encrypt(pk, &m.mod_floor(&pk.ctx.u), rng)
}

/// Plaintext addition mod u.
pub fn combine(a: &DgkCiphertext, b: &DgkCiphertext) -> Result<DgkCiphertext, DgkError> {
    if a.ctx.key_id != b.ctx.key_id {
        return Err(DgkError::KeyMismatch);
    }
    Ok(DgkCiphertext {
        ctx: a.ctx.clone(),
        value: (&a.value * &b.value).mod_floor(&a.ctx.n),
    })
}

/// Plaintext multiplication by a known positive scalar. Zero-ness is
/// preserved exactly whenever gcd(s, u) = 1; s = 0 is rejected because it
/// would erase the plaintext.
pub fn scale(ct: &DgkCiphertext, s: &BigInt) -> Result<DgkCiphertext, DgkError> {
    if s.is_zero() {
        return Err(DgkError::ZeroScale);
    }
    if s.is_negative() {
        return Err(DgkError::NegativeScale);
    }
    Ok(DgkCiphertext {
        ctx: ct.ctx.clone(),
        value: ct.value.modpow(s, &ct.ctx.n),
    })
}

/// Plaintext negation (scale by u - 1).
pub fn negate(ct: &DgkCiphertext) -> Result<DgkCiphertext, DgkError> {
    let s = &ct.ctx.u - BigInt::one();
    scale(ct, &s)
}

/// XOR an encrypted bit with a known plaintext bit: identity for 0, and
/// enc(1) * negate(ct) for 1.
pub fn xor_plain_bit(
    pk: &DgkPublicKey,
    ct_bit: &DgkCiphertext,
    plain_bit: u8,
    rng: &mut SeededRng,
) -> Result<DgkCiphertext, DgkError> {
    match plain_bit {
        0 => Ok(ct_bit.clone()),
        1 => {
            let one = encrypt(pk, &BigInt::one(), rng)?;
            combine(&one, &negate(ct_bit)?)
        }
        _ => Err(DgkError::PlaintextOutOfRange),
    }
}

/// True exactly when the plaintext is 0 mod u.
pub fn is_zero(sk: &DgkSecretKey, ct: &DgkCiphertext) -> Result<bool, DgkError> {
    if sk.ctx.key_id != ct.ctx.key_id {
        return Err(DgkError::KeyMismatch);
    }
    let reduced = ct.value.mod_floor(&sk.p);
    Ok(reduced.modpow(&sk.v_p, &sk.p).is_one())
}
