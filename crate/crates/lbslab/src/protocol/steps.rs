//! The individual protocol operations, in message order: key setup, the
//! user query, the edge node's averaging and distance circuit, the pairwise
//! comparison subprotocol, ranking, and the masked-difference variant.
//!
//! A plaintext mirror of the comparison chain lives at the bottom; the
//! faithful DGK path and the plaintext path must always agree (the DGK layer
//! adds blinding, not semantics), and tests hold them together.

use super::config::{GridPoint, ScenarioConfig};
use super::seal::{seal_envelope, SealKey};
use super::ProtocolError;
use crate::dgk::{self, DgkCiphertext, DgkKeypair, DgkPublicKey, DgkSecretKey};
use crate::numkit::{self, BigInt, SeededRng};
use crate::she::{self, Fnv, BackendKind, SecurityLevel, SheCiphertext, SheKeypair, SheParams, ShePublicKey};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

const DGK_MODULUS_BITS: u32 = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Entity {
    User,
    EdgeNode,
    Lbs,
    Ca,
}

/// Who holds which key half. One SHE keypair serves all location math, with
/// the secret at LBS: the comparison step has LBS decrypt blinded values, so
/// no other distribution makes the flow executable.
#[derive(Debug, Clone)]
pub struct HolderMap {
    pub she_public: Vec<Entity>,
    pub she_secret: Entity,
    pub dgk_public: Vec<Entity>,
    pub dgk_secret: Entity,
    pub seal_key: Vec<Entity>,
}

impl HolderMap {
    fn standard() -> HolderMap {
        HolderMap {
            she_public: vec![Entity::User, Entity::EdgeNode, Entity::Lbs],
            she_secret: Entity::Lbs,
            dgk_public: vec![Entity::EdgeNode, Entity::Lbs],
            dgk_secret: Entity::Lbs,
            seal_key: vec![Entity::User, Entity::Lbs],
        }
    }
}

#[derive(Debug, Clone)]
pub struct KeyRing {
    pub she: SheKeypair,
    pub she_params: SheParams,
    pub dgk: DgkKeypair,
    pub seal: SealKey,
    pub holders: HolderMap,
}

impl KeyRing {
    pub fn fingerprint(&self) -> String {
        let mut f = Fnv::new();
        f.write(self.she.public.fingerprint().as_bytes());
        f.write(self.dgk.public.fingerprint().as_bytes());
        f.write(&self.seal.fingerprint().to_be_bytes());
        format!("{:016x}", f.finish())
    }
}

/// CA: derive parameters from the scenario and generate every keypair.
pub fn ca_setup(config: &ScenarioConfig, rng: &mut SeededRng) -> Result<KeyRing, ProtocolError> {
    let derived = config.validate()?;

    // The SHE plaintext modulus must keep w = z + rho below p, and in masked
    // mode the signed product (d_a - d_b) * R must stay inside the centered
    // range.
    let mut lower = numkit::pow2(derived.k_sec + derived.l + 4);
    if let Some(mr) = &config.mask_range {
        let masked_bound = BigInt::from(4) * &derived.m * mr;
        if masked_bound > lower {
            lower = masked_bound;
        }
    }
    let p = numkit::next_prime(&(lower + rng.rand_bits(16)));

    let she_params = SheParams {
        plaintext_modulus: p,
        security_level: SecurityLevel::Toy,
        max_depth: 2,
        seed: config.seed,
        backend: BackendKind::Transparent,
    };
    let she = she::keygen(&she_params, rng)?;
    let dgk = dgk::keygen(DGK_MODULUS_BITS, &derived.u, rng)?;
    let seal = SealKey::from_rng(rng);

    Ok(KeyRing {
        she,
        she_params,
        dgk,
        seal,
        holders: HolderMap::standard(),
    })
}

#[derive(Debug, Clone)]
pub struct UserQuery {
    pub sealed_query: String,
    pub enc_x: SheCiphertext,
    pub enc_y: SheCiphertext,
}

/// User: encrypt their own location under the SHE public key and seal the
/// textual query for LBS.
pub fn user_create_query(
    location: &GridPoint,
    query_text: &str,
    keys: &KeyRing,
    world_bound: &BigInt,
    rng: &mut SeededRng,
) -> Result<UserQuery, ProtocolError> {
    if location.x.abs() > *world_bound || location.y.abs() > *world_bound {
        return Err(ProtocolError::Config {
            field: "user_location",
            msg: format!("{location} outside the world bound"),
        });
    }
    let sealed_query = seal_envelope(&keys.seal, query_text.as_bytes(), rng);
    let enc_x = she::encrypt_signed(&keys.she.public, &location.x, rng)?;
    let enc_y = she::encrypt_signed(&keys.she.public, &location.y, rng)?;
    Ok(UserQuery {
        sealed_query,
        enc_x,
        enc_y,
    })
}

/// EN: T = current location plus the t - 1 historical ones, all under
/// encryption. T is the t-scaled virtual location; keeping the factor t
/// avoids any encrypted division and never changes a comparison.
pub fn en_virtual_location(
    enc_x: &SheCiphertext,
    enc_y: &SheCiphertext,
    history: &[(SheCiphertext, SheCiphertext)],
    t: u32,
) -> Result<(SheCiphertext, SheCiphertext), ProtocolError> {
    if t < 2 || history.len() != (t - 1) as usize {
        return Err(ProtocolError::HistoryLength {
            got: history.len(),
            want: t.saturating_sub(1) as usize,
        });
    }
    let mut tx = enc_x.clone();
    let mut ty = enc_y.clone();
    for (hx, hy) in history {
        tx = she::add(&tx, hx)?;
        ty = she::add(&ty, hy)?;
    }
    Ok((tx, ty))
}

/// EN: encrypted squared Euclidean distances from the scaled virtual
/// location to every scaled POI. One multiplication level.
pub fn en_compute_distances(
    tx: &SheCiphertext,
    ty: &SheCiphertext,
    scaled_pois: &[(SheCiphertext, SheCiphertext)],
) -> Result<Vec<SheCiphertext>, ProtocolError> {
    let mut out = Vec::with_capacity(scaled_pois.len());
    for (px, py) in scaled_pois {
        let dx = she::sub(tx, px)?;
        let dy = she::sub(ty, py)?;
        let d = she::add(&she::mul(&dx, &dx)?, &she::mul(&dy, &dy)?)?;
        out.push(d);
    }
    Ok(out)
}

/// EN: encryption of z = 2^l + d_a - d_b. Bit l of z is 1 exactly when
/// d_a >= d_b.
pub fn en_encrypt_z(
    d_a: &SheCiphertext,
    d_b: &SheCiphertext,
    l: u32,
    pk: &ShePublicKey,
    rng: &mut SeededRng,
) -> Result<SheCiphertext, ProtocolError> {
    let enc_2l = she::encrypt(pk, &numkit::pow2(l), rng)?;
    Ok(she::add(&enc_2l, &she::sub(d_a, d_b)?)?)
}

/// EN: blind z with a fresh rho of k + l + 1 bits and hand enc(w) = enc(z + rho)
/// to LBS. rho never leaves EN.
pub fn en_compare_prepare(
    d_a: &SheCiphertext,
    d_b: &SheCiphertext,
    l: u32,
    k_sec: u32,
    pk: &ShePublicKey,
    rng: &mut SeededRng,
) -> Result<(SheCiphertext, BigInt), ProtocolError> {
    let z_ct = en_encrypt_z(d_a, d_b, l, pk, rng)?;
    let rho = rng.rand_bits(k_sec + l + 1);
    let enc_rho = she::encrypt(pk, &rho, rng)?;
    let w_ct = she::add(&z_ct, &enc_rho)?;
    Ok((w_ct, rho))
}

#[derive(Debug, Clone)]
pub struct ReducedW {
    pub w: BigInt,
    pub w_bar: BigInt,
    /// DGK encryptions of the bits of w_bar, least significant first.
    pub bits: Vec<DgkCiphertext>,
}

/// LBS: decrypt enc(w), fold to w_bar = w mod 2^l, and encrypt each bit under
/// its own DGK key for EN.
pub fn lbs_reduce_w(
    w_ct: &SheCiphertext,
    keys: &KeyRing,
    l: u32,
    rng: &mut SeededRng,
) -> Result<ReducedW, ProtocolError> {
    let w = she::decrypt(&keys.she.secret, w_ct)?;
    let w_bar = numkit::mod_reduce(&w, l);
    let bits = bits_lsb(&w_bar, l)
        .into_iter()
        .map(|b| dgk::encrypt(&keys.dgk.public, &BigInt::from(b), rng))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ReducedW { w, w_bar, bits })
}

#[derive(Debug, Clone)]
pub struct CombineOutcome {
    /// Blinded chain values enc(c_bar_j) in shuffled order.
    pub blinded: Vec<DgkCiphertext>,
    /// Blinding factors, indexed by original position j.
    pub xis: Vec<BigInt>,
    /// `permutation[k]` = original index of the k-th output element.
    pub permutation: Vec<usize>,
}

/// EN: the bitwise comparison chain. For each position j,
///
///   c_j = w_bar_j - rho_bar_j + eps + 3 * sum_{v > j} (w_bar_v XOR rho_bar_v)   (mod u)
///
/// computed homomorphically from the DGK bit encryptions of w_bar and EN's own
/// plaintext rho_bar bits, then blinded by xi_j coprime to u and shuffled. epsilon is
/// EN's coin: the c_j values need rho_bar in plaintext, so the whole chain,
/// including the epsilon choice, has to live at EN; LBS only zero-tests.
pub fn en_dgk_combine(
    wbar_bits: &[DgkCiphertext],
    rho_bar: &BigInt,
    l: u32,
    epsilon: i8,
    pk: &DgkPublicKey,
    rng: &mut SeededRng,
) -> Result<CombineOutcome, ProtocolError> {
    if wbar_bits.len() != l as usize {
        return Err(ProtocolError::BitLengthMismatch(l));
    }
    if epsilon != 1 && epsilon != -1 {
        return Err(ProtocolError::Invariant("epsilon must be +1 or -1".into()));
    }
    let rho_bits = bits_lsb(rho_bar, l);
    let u = pk.plaintext_space().clone();

    let enc_eps = dgk::encrypt_signed(pk, &BigInt::from(epsilon), rng)?;

    // Running suffix sum of xor bits, as a ciphertext: after handling index
    // j it holds sum_{v >= j} (w_bar_v XOR rho_bar_v).
    let mut suffix = dgk::encrypt(pk, &BigInt::zero(), rng)?;
    let mut chain: Vec<Option<DgkCiphertext>> = vec![None; l as usize];
    for j in (0..l as usize).rev() {
        let neg_rho_bit = dgk::encrypt_signed(pk, &BigInt::from(-i64::from(rho_bits[j])), rng)?;
        let tripled = dgk::scale(&suffix, &BigInt::from(3))?;
        let mut c = dgk::combine(&wbar_bits[j], &neg_rho_bit)?;
        c = dgk::combine(&c, &enc_eps)?;
        c = dgk::combine(&c, &tripled)?;
        chain[j] = Some(c);

        let xor_j = dgk::xor_plain_bit(pk, &wbar_bits[j], rho_bits[j], rng)?;
        suffix = dgk::combine(&suffix, &xor_j)?;
    }

    // Blind each c_j by a unit of Z_u, then shuffle.
    let mut xis = Vec::with_capacity(l as usize);
    let mut blinded = Vec::with_capacity(l as usize);
    for c in chain.into_iter().flatten() {
        let xi = BigInt::one() + rng.rand_below(&(&u - BigInt::one()));
        blinded.push(dgk::scale(&c, &xi)?);
        xis.push(xi);
    }
    let mut permutation: Vec<usize> = (0..l as usize).collect();
    rng.shuffle(&mut permutation);
    let blinded = permutation.iter().map(|&k| blinded[k].clone()).collect();

    Ok(CombineOutcome {
        blinded,
        xis,
        permutation,
    })
}

/// LBS: the decision rule as specified: a zero anywhere in the blinded
/// list is read as "w_bar > rho_bar, hence d_a >= d_b". (The rule disregards epsilon,
/// which is half of why the comparison is broken; it is implemented
/// verbatim because demonstrating that is the point.)
pub fn lbs_decide(
    blinded: &[DgkCiphertext],
    sk: &DgkSecretKey,
) -> Result<bool, ProtocolError> {
    for ct in blinded {
        if dgk::is_zero(sk, ct)? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Pairwise decision matrix over n POIs; pair (a, b) with a < b maps to the
/// protocol's claim "d_a >= d_b".
#[derive(Debug, Clone)]
pub struct PairwiseDecisions {
    n: usize,
    map: BTreeMap<(usize, usize), bool>,
}

impl PairwiseDecisions {
    pub fn new(n: usize) -> Self {
        PairwiseDecisions {
            n,
            map: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, a: usize, b: usize, decision: bool) {
        assert!(a < b && b < self.n, "pair ({a}, {b}) out of range");
        self.map.insert((a, b), decision);
    }

    pub fn get(&self, a: usize, b: usize) -> Option<bool> {
        self.map.get(&(a, b)).copied()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(usize, usize), &bool)> {
        self.map.iter()
    }

    fn first_missing(&self) -> Option<(usize, usize)> {
        for a in 0..self.n {
            for b in (a + 1)..self.n {
                if !self.map.contains_key(&(a, b)) {
                    return Some((a, b));
                }
            }
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseEntry {
    pub index: usize,
    pub location: GridPoint,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QueryResponse {
    /// k_nn POIs, protocol's nearest first.
    pub entries: Vec<ResponseEntry>,
    /// The same entries sealed for the user.
    pub sealed: String,
}

/// LBS: rank POIs by wins ("decided smaller") across all pairwise
/// decisions, ties by ascending index, and seal the top k_nn for the user.
/// Win counting terminates deterministically even when the faithful mode
/// produces a non-transitive decision matrix.
pub fn lbs_rank_and_respond(
    decisions: &PairwiseDecisions,
    pois: &[GridPoint],
    k_nn: usize,
    seal: &SealKey,
    rng: &mut SeededRng,
) -> Result<QueryResponse, ProtocolError> {
    if decisions.n() != pois.len() {
        return Err(ProtocolError::Invariant(format!(
            "decision matrix over {} POIs, scene has {}",
            decisions.n(),
            pois.len()
        )));
    }
    if let Some((a, b)) = decisions.first_missing() {
        return Err(ProtocolError::MissingPair(a, b));
    }
    let mut wins = vec![0usize; pois.len()];
    for (&(a, b), &dec) in decisions.iter() {
        // decision true: "d_a >= d_b", so b is the (weakly) closer one.
        if dec {
            wins[b] += 1;
        } else {
            wins[a] += 1;
        }
    }
    let mut order: Vec<usize> = (0..pois.len()).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(wins[i]), i));

    let entries: Vec<ResponseEntry> = order
        .into_iter()
        .take(k_nn)
        .map(|index| ResponseEntry {
            index,
            location: pois[index].clone(),
        })
        .collect();
    let body = serde_json::to_vec(&entries)
        .map_err(|e| ProtocolError::Invariant(format!("response serialization: {e}")))?;
    let sealed = seal_envelope(seal, &body, rng);
    Ok(QueryResponse { entries, sealed })
}

/// EN: the masked variant enc(z) = (enc(d_a) - enc(d_b)) * enc(R) for a fresh R.
/// Returns the ciphertext and the mask (which EN immediately forgets; it is
/// surfaced only for the ground-truth sidecar).
pub fn en_mask_difference(
    d_a: &SheCiphertext,
    d_b: &SheCiphertext,
    pk: &ShePublicKey,
    mask_range: &BigInt,
    signed_mask: bool,
    rng: &mut SeededRng,
) -> Result<(SheCiphertext, BigInt), ProtocolError> {
    let mut r = rng.rand_range_inclusive(&BigInt::one(), mask_range);
    if signed_mask && rng.rand_sign() < 0 {
        r = -r;
    }
    let enc_r = she::encrypt_signed(pk, &r, rng)?;
    let diff = she::sub(d_a, d_b)?;
    let z_ct = she::mul(&diff, &enc_r)?;
    Ok((z_ct, r))
}

// ---------------------------------------------------------------------------
// Plaintext mirror of the comparison chain.

/// Bits of x (which must fit), least significant first, padded to length l.
pub fn bits_lsb(x: &BigInt, l: u32) -> Vec<u8> {
    debug_assert!(!x.is_negative() && x.bits() <= l as u64);
    (0..l).map(|i| u8::from(numkit::bit(x, i))).collect()
}

/// The c_j values of the comparison chain, as plaintext residues mod u.
pub fn comparison_chain_plain(
    w_bar: &BigInt,
    rho_bar: &BigInt,
    l: u32,
    epsilon: i8,
    u: &BigInt,
) -> Vec<BigInt> {
    let wb = bits_lsb(w_bar, l);
    let rb = bits_lsb(rho_bar, l);
    let mut out = vec![BigInt::zero(); l as usize];
    let mut suffix = 0i64; // sum_{v > j} (w_bar_v XOR rho_bar_v), small by construction
    for j in (0..l as usize).rev() {
        let c = i64::from(wb[j]) - i64::from(rb[j]) + i64::from(epsilon) + 3 * suffix;
        out[j] = BigInt::from(c).mod_floor(u);
        suffix += i64::from(wb[j] ^ rb[j]);
    }
    out
}

/// Zero presence, read per the decision rule as "d_a >= d_b".
pub fn decision_from_chain(c_values: &[BigInt]) -> bool {
    c_values.iter().any(|c| c.is_zero())
}

/// Every intermediate of one plaintext comparison.
#[derive(Debug, Clone)]
pub struct PlainComparison {
    pub z: BigInt,
    pub w: BigInt,
    pub w_bar: BigInt,
    pub rho_bar: BigInt,
    pub c_values: Vec<BigInt>,
    pub decision: bool,
}

/// Run the whole comparison chain in plaintext for given randomness. This
/// is the same algebra the encrypted path computes; the DGK layer only adds
/// blinding.
pub fn compare_plain(
    d_a: &BigInt,
    d_b: &BigInt,
    l: u32,
    u: &BigInt,
    rho: &BigInt,
    epsilon: i8,
) -> PlainComparison {
    let z = numkit::pow2(l) + d_a - d_b;
    let w = &z + rho;
    let w_bar = numkit::mod_reduce(&w, l);
    let rho_bar = numkit::mod_reduce(rho, l);
    let c_values = comparison_chain_plain(&w_bar, &rho_bar, l, epsilon, u);
    let decision = decision_from_chain(&c_values);
    PlainComparison {
        z,
        w,
        w_bar,
        rho_bar,
        c_values,
        decision,
    }
}
