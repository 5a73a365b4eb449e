//! Opaque authenticated envelope for the textual user query and the final
//! response. This stands in for the conventional public-key channel of the
//! original design, which carries no math the analysis touches. It is a
//! keyed stream cipher with a checksum tag, NOT a real AEAD, and must not be
//! reused outside the simulator.

use super::ProtocolError;
use crate::numkit::SeededRng;
use crate::she::Fnv;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SealKey([u8; 32]);

impl SealKey {
    pub fn from_rng(rng: &mut SeededRng) -> SealKey {
        let mut key = [0u8; 32];
        rng.fill_bytes(&mut key);
        SealKey(key)
    }

    pub fn fingerprint(&self) -> u64 {
        let mut f = Fnv::new();
        f.write(&self.0);
        f.finish()
    }

    fn stream(&self, nonce: u64) -> ChaCha20Rng {
        let mut seed = self.0;
        for (i, b) in nonce.to_be_bytes().iter().enumerate() {
            seed[i] ^= b;
        }
        ChaCha20Rng::from_seed(seed)
    }

    fn tag(&self, nonce: u64, body: &[u8]) -> u64 {
        let mut f = Fnv::new();
        f.write(&self.0);
        f.write(&nonce.to_be_bytes());
        f.write(body);
        f.finish()
    }
}

/// Seal bytes into an opaque hex envelope.
pub fn seal_envelope(key: &SealKey, plaintext: &[u8], rng: &mut SeededRng) -> String {
    let nonce = rng.next_u64();
    let mut body = plaintext.to_vec();
    let mut stream = key.stream(nonce);
    for b in &mut body {
        *b ^= (stream.next_u32() & 0xFF) as u8;
    }
    let tag = key.tag(nonce, &body);
    format!("seal1:{nonce:016x}:{}:{tag:016x}", hex(&body))
}

/// Open an envelope produced by [`seal_envelope`].
pub fn open_envelope(key: &SealKey, blob: &str) -> Result<Vec<u8>, ProtocolError> {
    let parts: Vec<&str> = blob.split(':').collect();
    if parts.len() != 4 || parts[0] != "seal1" {
        return Err(ProtocolError::Seal("unrecognized envelope format".into()));
    }
    let nonce = u64::from_str_radix(parts[1], 16)
        .map_err(|_| ProtocolError::Seal("bad nonce".into()))?;
    let mut body = unhex(parts[2]).ok_or_else(|| ProtocolError::Seal("bad body hex".into()))?;
    let tag = u64::from_str_radix(parts[3], 16)
        .map_err(|_| ProtocolError::Seal("bad tag".into()))?;
    if key.tag(nonce, &body) != tag {
        return Err(ProtocolError::Seal("authentication tag mismatch".into()));
    }
    let mut stream = key.stream(nonce);
    for b in &mut body {
        *b ^= (stream.next_u32() & 0xFF) as u8;
    }
    Ok(body)
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn unhex(s: &str) -> Option<Vec<u8>> {
    if !s.len().is_multiple_of(2) {
        return None;
    }
    (0..s.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(&s[i..i + 2], 16).ok())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seal_round_trip() {
        let mut rng = SeededRng::new(1);
        let key = SealKey::from_rng(&mut rng);
        let blob = seal_envelope(&key, b"where is the nearest tea house", &mut rng);
        let opened = open_envelope(&key, &blob).unwrap();
        assert_eq!(opened, b"where is the nearest tea house");
    }

    #[test]
    fn tamper_is_detected() {
        let mut rng = SeededRng::new(2);
        let key = SealKey::from_rng(&mut rng);
        let blob = seal_envelope(&key, b"payload", &mut rng);
        let mut bad = blob.clone();
        // Flip one hex digit of the body.
        let idx = "seal1:0000000000000000:".len();
        let replacement = if &bad[idx..idx + 1] == "0" { "1" } else { "0" };
        bad.replace_range(idx..idx + 1, replacement);
        assert!(open_envelope(&key, &bad).is_err());
    }

    #[test]
    fn wrong_key_rejected() {
        let mut rng = SeededRng::new(3);
        let key = SealKey::from_rng(&mut rng);
        let other = SealKey::from_rng(&mut rng);
        let blob = seal_envelope(&key, b"payload", &mut rng);
        assert!(open_envelope(&other, &blob).is_err());
    }
}
