//! Leveled somewhat-homomorphic encryption over a prime plaintext modulus.
//!
//! Two interchangeable backends sit behind one ciphertext type:
//!
//! * `Transparent`: the payload literally records the plaintext residue plus
//!   an operation count and a synthetic depth/noise counter. This is the
//!   default for protocol and attack runs: the analysis lives in the protocol
//!   algebra, and a transparent payload keeps every transcript cheap and
//!   deterministic while enforcing the same contracts (range checks, key
//!   binding, depth limits).
//! * `Rlwe`: a textbook ring-LWE leveled scheme at toy parameters:
//!   ciphertexts are polynomials in the secret key, multiplication grows the
//!   degree instead of relinearizing, and a tracked noise bound turns into an
//!   explicit error before any decryption could go wrong.
//!
//! Plaintexts are residues mod p. Signed quantities are represented as
//! p - x and decoded through the centered representative.

mod rlwe;

use crate::numkit::{self, BigInt, SeededRng};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rlwe::{RingElem, RingParams};
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SheError {
    #[error("invalid plaintext modulus: {0}")]
    InvalidModulus(String),
    #[error("plaintext out of range [0, p)")]
    PlaintextOutOfRange,
    #[error("ciphertexts belong to different keypairs")]
    KeyMismatch,
    #[error("multiplicative depth exhausted (depth {depth}, max {max})")]
    DepthExhausted { depth: u32, max: u32 },
    #[error("noise budget exhausted")]
    NoiseExhausted,
}

/// Ring-dimension presets for the `Rlwe` backend. Neither is secure; both
/// are labelled accordingly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SecurityLevel {
    Toy,
    Small,
}

impl SecurityLevel {
    fn ring_dim(self) -> usize {
        match self {
            SecurityLevel::Toy => 16,
            SecurityLevel::Small => 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Transparent,
    Rlwe,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SheParams {
    #[serde(with = "crate::serde_util::bigint_str")]
    pub plaintext_modulus: BigInt,
    pub security_level: SecurityLevel,
    pub max_depth: u32,
    pub seed: u64,
    pub backend: BackendKind,
}

impl SheParams {
    pub fn validate(&self) -> Result<(), SheError> {
        if self.plaintext_modulus < BigInt::from(2) {
            return Err(SheError::InvalidModulus("modulus must be >= 2".into()));
        }
        if !numkit::is_prime(&self.plaintext_modulus) {
            return Err(SheError::InvalidModulus("modulus must be prime".into()));
        }
        if self.max_depth < 2 {
            return Err(SheError::InvalidModulus(
                "max_depth must be at least 2".into(),
            ));
        }
        Ok(())
    }
}

/// Shared, immutable context every ciphertext carries so the binary
/// operations can run without a key handle.
#[derive(Debug, PartialEq, Eq)]
struct Context {
    key_id: u64,
    plaintext_modulus: BigInt,
    max_depth: u32,
    backend: BackendKind,
    ring: Option<RingParams>,
    fresh_noise_bound: BigInt,
}

#[derive(Debug, Clone)]
pub struct ShePublicKey {
    ctx: Arc<Context>,
    rlwe: Option<rlwe::PublicKey>,
}

#[derive(Debug, Clone)]
pub struct SheSecretKey {
    ctx: Arc<Context>,
    rlwe: Option<rlwe::SecretKey>,
}

#[derive(Debug, Clone)]
pub struct SheKeypair {
    pub public: ShePublicKey,
    pub secret: SheSecretKey,
}

impl SheKeypair {
    /// Stable identifier binding ciphertexts to this keypair.
    pub fn key_id(&self) -> u64 {
        self.public.ctx.key_id
    }
}

impl ShePublicKey {
    pub fn key_id(&self) -> u64 {
        self.ctx.key_id
    }

    pub fn plaintext_modulus(&self) -> &BigInt {
        &self.ctx.plaintext_modulus
    }

    /// Short hex fingerprint of the public key material.
    pub fn fingerprint(&self) -> String {
        let mut h = Fnv::new();
        h.write(&self.ctx.key_id.to_be_bytes());
        h.write(&self.ctx.plaintext_modulus.to_signed_bytes_be());
        if let Some(pk) = &self.rlwe {
            pk.hash_into(&mut h);
        }
        format!("{:016x}", h.finish())
    }

    /// Opaque, versioned hex blob of the public key, as embedded in
    /// transcripts.
    pub fn to_hex_blob(&self) -> String {
        match &self.rlwe {
            None => format!(
                "she-pk-t1:{:016x}:{}",
                self.ctx.key_id,
                self.ctx.plaintext_modulus.to_str_radix(16)
            ),
            Some(pk) => format!(
                "she-pk-r1:{:016x}:{}:{}",
                self.ctx.key_id,
                self.ctx.plaintext_modulus.to_str_radix(16),
                pk.to_hex()
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Payload {
    Transparent {
        value: BigInt,
        nonce: u64,
        op_count: u64,
    },
    Rlwe {
        components: Vec<RingElem>,
        noise_bound: BigInt,
    },
}

#[derive(Debug, Clone)]
pub struct SheCiphertext {
    ctx: Arc<Context>,
    depth_used: u32,
    payload: Payload,
}

impl SheCiphertext {
    pub fn depth_used(&self) -> u32 {
        self.depth_used
    }

    pub fn key_id(&self) -> u64 {
        self.ctx.key_id
    }

    /// Remaining noise headroom in bits. The transparent backend keeps a
    /// synthetic counter that shrinks with depth exactly like the real one
    /// shrinks with accumulated noise.
    pub fn noise_budget_bits(&self) -> u32 {
        match &self.payload {
            Payload::Transparent { .. } => {
                let spent = 40 * self.depth_used;
                120u32.saturating_sub(spent)
            }
            Payload::Rlwe { noise_bound, .. } => {
                let ring = self.ctx.ring.as_ref().expect("rlwe payload without ring");
                let cap = ring.q_bits.saturating_sub(1) as u64;
                let used = numkit::bit_length(noise_bound);
                cap.saturating_sub(used) as u32
            }
        }
    }

    /// Opaque, versioned hex blob for embedding in transcripts.
    pub fn to_hex_blob(&self) -> String {
        match &self.payload {
            Payload::Transparent { value, nonce, op_count } => {
                format!(
                    "she-t1:{:016x}:{:x}:{:x}:{}",
                    self.ctx.key_id,
                    nonce,
                    op_count,
                    value.to_str_radix(16)
                )
            }
            Payload::Rlwe { components, .. } => {
                let mut blob = format!("she-r1:{:016x}:{}", self.ctx.key_id, self.depth_used);
                for comp in components {
                    blob.push(':');
                    blob.push_str(&comp.to_hex());
                }
                blob
            }
        }
    }
}

/// Tiny FNV-1a accumulator for key fingerprints; not cryptographic.
pub(crate) struct Fnv(u64);

impl Fnv {
    pub fn new() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }
    pub fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    pub fn finish(&self) -> u64 {
        self.0
    }
}

pub fn keygen(params: &SheParams, rng: &mut SeededRng) -> Result<SheKeypair, SheError> {
    params.validate()?;
    let key_id = rng.next_u64();
    match params.backend {
        BackendKind::Transparent => {
            let ctx = Arc::new(Context {
                key_id,
                plaintext_modulus: params.plaintext_modulus.clone(),
                max_depth: params.max_depth,
                backend: BackendKind::Transparent,
                ring: None,
                fresh_noise_bound: BigInt::zero(),
            });
            Ok(SheKeypair {
                public: ShePublicKey { ctx: ctx.clone(), rlwe: None },
                secret: SheSecretKey { ctx, rlwe: None },
            })
        }
        BackendKind::Rlwe => {
            let ring = RingParams::for_scheme(
                &params.plaintext_modulus,
                params.security_level.ring_dim(),
                params.max_depth,
            );
            let (pk, sk, fresh_bound) = rlwe::keygen(&ring, &params.plaintext_modulus, rng);
            let ctx = Arc::new(Context {
                key_id,
                plaintext_modulus: params.plaintext_modulus.clone(),
                max_depth: params.max_depth,
                backend: BackendKind::Rlwe,
                ring: Some(ring),
                fresh_noise_bound: fresh_bound,
            });
            Ok(SheKeypair {
                public: ShePublicKey { ctx: ctx.clone(), rlwe: Some(pk) },
                secret: SheSecretKey { ctx, rlwe: Some(sk) },
            })
        }
    }
}

pub fn encrypt(pk: &ShePublicKey, m: &BigInt, rng: &mut SeededRng) -> Result<SheCiphertext, SheError> {
    if m.is_negative() || m >= &pk.ctx.plaintext_modulus {
        return Err(SheError::PlaintextOutOfRange);
    }
    let payload = match pk.ctx.backend {
        BackendKind::Transparent => Payload::Transparent {
            value: m.clone(),
            nonce: rng.next_u64(),
            op_count: 0,
        },
        BackendKind::Rlwe => {
            let ring = pk.ctx.ring.as_ref().unwrap();
            let components = rlwe::encrypt(ring, pk.rlwe.as_ref().unwrap(), &pk.ctx.plaintext_modulus, m, rng);
            Payload::Rlwe {
                components,
                noise_bound: pk.ctx.fresh_noise_bound.clone(),
            }
        }
    };
    Ok(SheCiphertext {
        ctx: pk.ctx.clone(),
        depth_used: 0,
        payload,
    })
}

/// Encrypt a signed integer as its residue mod p.
pub fn encrypt_signed(pk: &ShePublicKey, m: &BigInt, rng: &mut SeededRng) -> Result<SheCiphertext, SheError> {
    let reduced = m.mod_floor(&pk.ctx.plaintext_modulus);
    encrypt(pk, &reduced, rng)
}

pub fn decrypt(sk: &SheSecretKey, ct: &SheCiphertext) -> Result<BigInt, SheError> {
    if sk.ctx.key_id != ct.ctx.key_id {
        return Err(SheError::KeyMismatch);
    }
    match &ct.payload {
        Payload::Transparent { value, .. } => Ok(value.clone()),
        Payload::Rlwe { components, noise_bound } => {
            let ring = ct.ctx.ring.as_ref().unwrap();
            if !ring.bound_ok(noise_bound) {
                return Err(SheError::NoiseExhausted);
            }
            Ok(rlwe::decrypt(
                ring,
                sk.rlwe.as_ref().unwrap(),
                &ct.ctx.plaintext_modulus,
                components,
            ))
        }
    }
}

/// Decrypt to the centered representative in (-p/2, p/2].
pub fn decrypt_signed(sk: &SheSecretKey, ct: &SheCiphertext) -> Result<BigInt, SheError> {
    let v = decrypt(sk, ct)?;
    Ok(decode_signed(&v, &ct.ctx.plaintext_modulus))
}

/// Centered representative of a residue mod p.
pub fn decode_signed(v: &BigInt, p: &BigInt) -> BigInt {
    let half = p >> 1;
    if v > &half {
        v - p
    } else {
        v.clone()
    }
}

fn check_same_key(a: &SheCiphertext, b: &SheCiphertext) -> Result<(), SheError> {
    if a.ctx.key_id != b.ctx.key_id {
        return Err(SheError::KeyMismatch);
    }
    Ok(())
}

fn binary_op(
    a: &SheCiphertext,
    b: &SheCiphertext,
    sub: bool,
) -> Result<SheCiphertext, SheError> {
    check_same_key(a, b)?;
    let depth = a.depth_used.max(b.depth_used);
    let payload = match (&a.payload, &b.payload) {
        (
            Payload::Transparent { value: va, op_count: oa, .. },
            Payload::Transparent { value: vb, op_count: ob, .. },
        ) => {
            let p = &a.ctx.plaintext_modulus;
            let value = if sub { (va - vb).mod_floor(p) } else { (va + vb).mod_floor(p) };
            Payload::Transparent {
                value,
                nonce: 0,
                op_count: oa + ob + 1,
            }
        }
        (
            Payload::Rlwe { components: ca, noise_bound: na },
            Payload::Rlwe { components: cb, noise_bound: nb },
        ) => {
            let ring = a.ctx.ring.as_ref().unwrap();
            let noise_bound = na + nb;
            if !ring.bound_ok(&noise_bound) {
                return Err(SheError::NoiseExhausted);
            }
            let components = if sub {
                rlwe::sub_components(ring, ca, cb)
            } else {
                rlwe::add_components(ring, ca, cb)
            };
            Payload::Rlwe { components, noise_bound }
        }
        _ => return Err(SheError::KeyMismatch),
    };
    Ok(SheCiphertext {
        ctx: a.ctx.clone(),
        depth_used: depth,
        payload,
    })
}

/// Homomorphic addition; decrypts to (m_a + m_b) mod p.
pub fn add(a: &SheCiphertext, b: &SheCiphertext) -> Result<SheCiphertext, SheError> {
    binary_op(a, b, false)
}

/// Homomorphic subtraction; decrypts to (m_a - m_b) mod p.
pub fn sub(a: &SheCiphertext, b: &SheCiphertext) -> Result<SheCiphertext, SheError> {
    binary_op(a, b, true)
}

/// Add a plaintext constant.
pub fn add_plain(a: &SheCiphertext, m: &BigInt) -> Result<SheCiphertext, SheError> {
    let p = &a.ctx.plaintext_modulus;
    let m = m.mod_floor(p);
    let payload = match &a.payload {
        Payload::Transparent { value, op_count, .. } => Payload::Transparent {
            value: (value + &m).mod_floor(p),
            nonce: 0,
            op_count: op_count + 1,
        },
        Payload::Rlwe { components, noise_bound } => {
            let ring = a.ctx.ring.as_ref().unwrap();
            let noise_bound = noise_bound + p;
            if !ring.bound_ok(&noise_bound) {
                return Err(SheError::NoiseExhausted);
            }
            Payload::Rlwe {
                components: rlwe::add_constant(ring, components, &m),
                noise_bound,
            }
        }
    };
    Ok(SheCiphertext {
        ctx: a.ctx.clone(),
        depth_used: a.depth_used,
        payload,
    })
}

/// Multiply by a plaintext constant (applied through the centered
/// representative so noise scales with |m| rather than p).
pub fn mul_plain(a: &SheCiphertext, m: &BigInt) -> Result<SheCiphertext, SheError> {
    let p = &a.ctx.plaintext_modulus;
    let m = m.mod_floor(p);
    let payload = match &a.payload {
        Payload::Transparent { value, op_count, .. } => Payload::Transparent {
            value: (value * &m).mod_floor(p),
            nonce: 0,
            op_count: op_count + 1,
        },
        Payload::Rlwe { components, noise_bound } => {
            let ring = a.ctx.ring.as_ref().unwrap();
            let centered = decode_signed(&m, p);
            let scale = centered.abs().max(BigInt::one());
            let noise_bound = noise_bound * &scale;
            if !ring.bound_ok(&noise_bound) {
                return Err(SheError::NoiseExhausted);
            }
            Payload::Rlwe {
                components: rlwe::scale_components(ring, components, &centered),
                noise_bound,
            }
        }
    };
    Ok(SheCiphertext {
        ctx: a.ctx.clone(),
        depth_used: a.depth_used,
        payload,
    })
}

/// Ciphertext-ciphertext multiplication. Costs one depth level; fails
/// explicitly when the level or noise budget is out.
pub fn mul(a: &SheCiphertext, b: &SheCiphertext) -> Result<SheCiphertext, SheError> {
    check_same_key(a, b)?;
    let depth = a.depth_used.max(b.depth_used) + 1;
    if depth > a.ctx.max_depth {
        return Err(SheError::DepthExhausted {
            depth,
            max: a.ctx.max_depth,
        });
    }
    let payload = match (&a.payload, &b.payload) {
        (
            Payload::Transparent { value: va, op_count: oa, .. },
            Payload::Transparent { value: vb, op_count: ob, .. },
        ) => Payload::Transparent {
            value: (va * vb).mod_floor(&a.ctx.plaintext_modulus),
            nonce: 0,
            op_count: oa + ob + 1,
        },
        (
            Payload::Rlwe { components: ca, noise_bound: na },
            Payload::Rlwe { components: cb, noise_bound: nb },
        ) => {
            let ring = a.ctx.ring.as_ref().unwrap();
            let noise_bound = BigInt::from(ring.n as u64) * na * nb;
            if !ring.bound_ok(&noise_bound) {
                return Err(SheError::NoiseExhausted);
            }
            Payload::Rlwe {
                components: rlwe::mul_components(ring, ca, cb),
                noise_bound,
            }
        }
        _ => return Err(SheError::KeyMismatch),
    };
    Ok(SheCiphertext {
        ctx: a.ctx.clone(),
        depth_used: depth,
        payload,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;

    fn toy_params(backend: BackendKind) -> SheParams {
        SheParams {
            plaintext_modulus: BigInt::from(1_000_003u64),
            security_level: SecurityLevel::Toy,
            max_depth: 2,
            seed: 1,
            backend,
        }
    }

    fn both_backends() -> Vec<SheParams> {
        vec![toy_params(BackendKind::Transparent), toy_params(BackendKind::Rlwe)]
    }

    #[test]
    fn roundtrip_zero_and_boundary() {
        for params in both_backends() {
            let mut rng = SeededRng::new(params.seed);
            let kp = keygen(&params, &mut rng).unwrap();
            for m in [BigInt::zero(), &params.plaintext_modulus - 1u32] {
                let ct = encrypt(&kp.public, &m, &mut rng).unwrap();
                assert_eq!(ct.depth_used(), 0);
                assert_eq!(decrypt(&kp.secret, &ct).unwrap(), m);
            }
        }
    }

    #[test]
    fn keygen_is_deterministic() {
        for params in both_backends() {
            let kp1 = keygen(&params, &mut SeededRng::new(1)).unwrap();
            let kp2 = keygen(&params, &mut SeededRng::new(1)).unwrap();
            let kp3 = keygen(&params, &mut SeededRng::new(2)).unwrap();
            assert_eq!(kp1.public.fingerprint(), kp2.public.fingerprint());
            assert_ne!(kp1.public.fingerprint(), kp3.public.fingerprint());
        }
    }

    #[test]
    fn random_roundtrips() {
        for params in both_backends() {
            let mut rng = SeededRng::new(7);
            let kp = keygen(&params, &mut rng).unwrap();
            for _ in 0..1000 {
                let m = rng.rand_below(&params.plaintext_modulus);
                let ct = encrypt(&kp.public, &m, &mut rng).unwrap();
                assert_eq!(decrypt(&kp.secret, &ct).unwrap(), m);
            }
        }
    }

    #[test]
    fn encryption_is_randomized() {
        for params in both_backends() {
            let mut rng = SeededRng::new(3);
            let kp = keygen(&params, &mut rng).unwrap();
            let m = BigInt::from(42);
            let c1 = encrypt(&kp.public, &m, &mut rng).unwrap();
            let c2 = encrypt(&kp.public, &m, &mut rng).unwrap();
            assert_ne!(c1.to_hex_blob(), c2.to_hex_blob());
        }
    }

    #[test]
    fn out_of_range_plaintext_rejected() {
        let params = toy_params(BackendKind::Transparent);
        let mut rng = SeededRng::new(1);
        let kp = keygen(&params, &mut rng).unwrap();
        assert!(matches!(
            encrypt(&kp.public, &params.plaintext_modulus, &mut rng),
            Err(SheError::PlaintextOutOfRange)
        ));
        assert!(matches!(
            encrypt(&kp.public, &BigInt::from(-1), &mut rng),
            Err(SheError::PlaintextOutOfRange)
        ));
    }

    #[test]
    fn add_sub_match_plain_arithmetic() {
        for params in both_backends() {
            let mut rng = SeededRng::new(11);
            let kp = keygen(&params, &mut rng).unwrap();
            let p = &params.plaintext_modulus;
            let two = encrypt(&kp.public, &BigInt::from(2), &mut rng).unwrap();
            let three = encrypt(&kp.public, &BigInt::from(3), &mut rng).unwrap();
            assert_eq!(decrypt(&kp.secret, &add(&two, &three).unwrap()).unwrap(), BigInt::from(5));
            let x = encrypt(&kp.public, &BigInt::from(99), &mut rng).unwrap();
            assert_eq!(decrypt(&kp.secret, &sub(&x, &x).unwrap()).unwrap(), BigInt::zero());
            for _ in 0..1000 {
                let ma = rng.rand_below(p);
                let mb = rng.rand_below(p);
                let ca = encrypt(&kp.public, &ma, &mut rng).unwrap();
                let cb = encrypt(&kp.public, &mb, &mut rng).unwrap();
                assert_eq!(
                    decrypt(&kp.secret, &add(&ca, &cb).unwrap()).unwrap(),
                    (&ma + &mb).mod_floor(p)
                );
                assert_eq!(
                    decrypt(&kp.secret, &sub(&ca, &cb).unwrap()).unwrap(),
                    (&ma - &mb).mod_floor(p)
                );
            }
        }
    }

    #[test]
    fn mul_matches_plain_arithmetic_and_tracks_depth() {
        for params in both_backends() {
            let mut rng = SeededRng::new(13);
            let kp = keygen(&params, &mut rng).unwrap();
            let p = &params.plaintext_modulus;
            let zero = encrypt(&kp.public, &BigInt::zero(), &mut rng).unwrap();
            let x = encrypt(&kp.public, &BigInt::from(1234), &mut rng).unwrap();
            assert_eq!(decrypt(&kp.secret, &mul(&zero, &x).unwrap()).unwrap(), BigInt::zero());

            // The squared-difference kernel used for distances.
            for _ in 0..1000 {
                let ma = rng.rand_below(p);
                let mb = rng.rand_below(p);
                let ca = encrypt(&kp.public, &ma, &mut rng).unwrap();
                let cb = encrypt(&kp.public, &mb, &mut rng).unwrap();
                let diff = sub(&ca, &cb).unwrap();
                let sq = mul(&diff, &diff).unwrap();
                assert_eq!(sq.depth_used(), 1);
                let want = ((&ma - &mb) * (&ma - &mb)).mod_floor(p);
                assert_eq!(decrypt(&kp.secret, &sq).unwrap(), want);
            }
        }
    }

    #[test]
    fn depth_exhaustion_is_an_error() {
        for params in both_backends() {
            let mut rng = SeededRng::new(17);
            let kp = keygen(&params, &mut rng).unwrap();
            let x = encrypt(&kp.public, &BigInt::from(2), &mut rng).unwrap();
            let d1 = mul(&x, &x).unwrap();
            let d2 = mul(&d1, &d1).unwrap();
            assert_eq!(d2.depth_used(), 2);
            assert!(matches!(
                mul(&d2, &d2),
                Err(SheError::DepthExhausted { depth: 3, max: 2 })
            ));
        }
    }

    #[test]
    fn key_mismatch_rejected() {
        let params = toy_params(BackendKind::Transparent);
        let kp1 = keygen(&params, &mut SeededRng::new(1)).unwrap();
        let kp2 = keygen(&params, &mut SeededRng::new(2)).unwrap();
        let mut rng = SeededRng::new(3);
        let a = encrypt(&kp1.public, &BigInt::from(1), &mut rng).unwrap();
        let b = encrypt(&kp2.public, &BigInt::from(1), &mut rng).unwrap();
        assert!(matches!(add(&a, &b), Err(SheError::KeyMismatch)));
        assert!(matches!(decrypt(&kp2.secret, &a), Err(SheError::KeyMismatch)));
    }

    #[test]
    fn signed_encoding_round_trips() {
        for params in both_backends() {
            let mut rng = SeededRng::new(19);
            let kp = keygen(&params, &mut rng).unwrap();
            for v in [-5i64, -1, 0, 1, 12345] {
                let ct = encrypt_signed(&kp.public, &BigInt::from(v), &mut rng).unwrap();
                assert_eq!(decrypt_signed(&kp.secret, &ct).unwrap(), BigInt::from(v));
            }
        }
    }

    #[test]
    fn transparent_and_rlwe_agree_on_random_circuits() {
        let pt = toy_params(BackendKind::Transparent);
        let pr = toy_params(BackendKind::Rlwe);
        let p = pt.plaintext_modulus.clone();
        for trial in 0..20 {
            let mut rng_t = SeededRng::new(100 + trial);
            let mut rng_r = SeededRng::new(100 + trial);
            let kt = keygen(&pt, &mut rng_t).unwrap();
            let kr = keygen(&pr, &mut rng_r).unwrap();
            let mut drive = SeededRng::new(500 + trial);

            let mut cts_t = Vec::new();
            let mut cts_r = Vec::new();
            for _ in 0..4 {
                let m = drive.rand_below(&p);
                cts_t.push(encrypt(&kt.public, &m, &mut rng_t).unwrap());
                cts_r.push(encrypt(&kr.public, &m, &mut rng_r).unwrap());
            }
            for _ in 0..12 {
                let op = drive.rand_u64_below(4);
                let i = drive.rand_u64_below(cts_t.len() as u64) as usize;
                let j = drive.rand_u64_below(cts_t.len() as u64) as usize;
                let k = drive.rand_below(&p);
                let (nt, nr) = match op {
                    0 => (add(&cts_t[i], &cts_t[j]), add(&cts_r[i], &cts_r[j])),
                    1 => (sub(&cts_t[i], &cts_t[j]), sub(&cts_r[i], &cts_r[j])),
                    2 => (add_plain(&cts_t[i], &k), add_plain(&cts_r[i], &k)),
                    _ => (mul(&cts_t[i], &cts_t[j]), mul(&cts_r[i], &cts_r[j])),
                };
                match (nt, nr) {
                    (Ok(nt), Ok(nr)) => {
                        cts_t.push(nt);
                        cts_r.push(nr);
                    }
                    (Err(SheError::DepthExhausted { .. }), Err(SheError::DepthExhausted { .. })) => {}
                    (t, r) => panic!("backends diverged: {t:?} vs {r:?}"),
                }
            }
            for (ct_t, ct_r) in cts_t.iter().zip(&cts_r) {
                assert_eq!(
                    decrypt(&kt.secret, ct_t).unwrap(),
                    decrypt(&kr.secret, ct_r).unwrap()
                );
            }
        }
    }

    #[test]
    fn noise_budget_strictly_decreases_and_errors_cleanly() {
        // Deep-ish circuit on the real backend: the budget must shrink on
        // every multiplication and the chain must end in NoiseExhausted or
        // DepthExhausted, never in a wrong decryption.
        let params = SheParams {
            plaintext_modulus: BigInt::from(65_537u64),
            security_level: SecurityLevel::Toy,
            max_depth: 8,
            seed: 1,
            backend: BackendKind::Rlwe,
        };
        let mut rng = SeededRng::new(23);
        let kp = keygen(&params, &mut rng).unwrap();
        let mut ct = encrypt(&kp.public, &BigInt::from(3), &mut rng).unwrap();
        let mut plain = BigInt::from(3);
        let mut budget = ct.noise_budget_bits();
        loop {
            match mul(&ct, &ct) {
                Ok(next) => {
                    assert!(next.noise_budget_bits() < budget, "budget must shrink");
                    budget = next.noise_budget_bits();
                    plain = (&plain * &plain).mod_floor(&params.plaintext_modulus);
                    assert_eq!(decrypt(&kp.secret, &next).unwrap(), plain);
                    ct = next;
                }
                Err(SheError::NoiseExhausted) => break,
                Err(SheError::DepthExhausted { .. }) => break,
                Err(e) => panic!("unexpected error {e}"),
            }
        }
    }

    #[test]
    fn invalid_modulus_rejected() {
        for bad in [BigInt::from(1), BigInt::from(10)] {
            let params = SheParams {
                plaintext_modulus: bad,
                security_level: SecurityLevel::Toy,
                max_depth: 2,
                seed: 1,
                backend: BackendKind::Transparent,
            };
            assert!(keygen(&params, &mut SeededRng::new(1)).is_err());
        }
    }

    #[test]
    fn transparent_blob_records_plaintext() {
        let params = toy_params(BackendKind::Transparent);
        let mut rng = SeededRng::new(29);
        let kp = keygen(&params, &mut rng).unwrap();
        let ct = encrypt(&kp.public, &BigInt::from(255), &mut rng).unwrap();
        assert!(ct.to_hex_blob().starts_with("she-t1:"));
        assert!(ct.to_hex_blob().ends_with(":ff"));
        assert_eq!(decrypt(&kp.secret, &ct).unwrap().to_u64(), Some(255));
    }
}
