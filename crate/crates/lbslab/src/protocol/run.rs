//! End-to-end query runner. Drives all four entities through one query,
//! records every message and per-pair comparison intermediate, and keeps a
//! ground-truth sidecar (the simulator's omniscient view) so attacks can be
//! validated against what really happened.

use super::config::{DerivedParams, GridPoint, Mode, ScenarioConfig};
use super::seal::open_envelope;
use super::steps::*;
use super::ProtocolError;
use crate::numkit::{self, BigInt, SeededRng};
use crate::she;
use num_traits::Signed;
use serde::{Deserialize, Serialize};

pub const TRANSCRIPT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MessageRecord {
    pub seq: u32,
    pub from: Entity,
    pub to: Entity,
    pub payload: MessagePayload,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MessagePayload {
    UserQuery {
        sealed_query: String,
        enc_x: String,
        enc_y: String,
    },
    RelayQuery {
        sealed_query: String,
    },
    PoiBatch {
        entries: Vec<PoiCiphertexts>,
    },
    CompareW {
        pair: (usize, usize),
        w: String,
    },
    WbarBits {
        pair: (usize, usize),
        bits: Vec<String>,
    },
    BlindedScores {
        pair: (usize, usize),
        scores: Vec<String>,
    },
    ZDisclosure {
        pair: (usize, usize),
        z: String,
    },
    MaskedDifference {
        pair: (usize, usize),
        z: String,
    },
    Response {
        sealed: String,
    },
    RelayResponse {
        sealed: String,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoiCiphertexts {
    pub x: String,
    pub y: String,
}

/// Every intermediate of one pairwise comparison. Fields that a mode does
/// not produce stay empty; `d_a`, `d_b`, and `truth` come from the
/// simulator's ground-truth view, not from any party.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonTranscript {
    pub pair: (usize, usize),
    #[serde(with = "crate::serde_util::bigint_str")]
    pub d_a: BigInt,
    #[serde(with = "crate::serde_util::bigint_str")]
    pub d_b: BigInt,
    #[serde(default, with = "crate::serde_util::bigint_opt_str")]
    pub z: Option<BigInt>,
    #[serde(default, with = "crate::serde_util::bigint_opt_str")]
    pub rho: Option<BigInt>,
    #[serde(default, with = "crate::serde_util::bigint_opt_str")]
    pub w: Option<BigInt>,
    #[serde(default, with = "crate::serde_util::bigint_opt_str")]
    pub w_bar: Option<BigInt>,
    #[serde(default, with = "crate::serde_util::bigint_opt_str")]
    pub rho_bar: Option<BigInt>,
    #[serde(default)]
    pub epsilon: Option<i8>,
    #[serde(default, with = "crate::serde_util::bigint_vec_str", skip_serializing_if = "Vec::is_empty")]
    pub xi: Vec<BigInt>,
    /// Plaintext chain values, recorded for debugging while the transparent
    /// backend is in play.
    #[serde(default, with = "crate::serde_util::bigint_vec_str", skip_serializing_if = "Vec::is_empty")]
    pub c_values: Vec<BigInt>,
    /// The protocol's claim "d_a >= d_b".
    pub decision: bool,
    /// Ground truth for the same claim.
    pub truth: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairDelta {
    pub pair: (usize, usize),
    #[serde(with = "crate::serde_util::bigint_str")]
    pub delta: BigInt,
}

/// The simulator's omniscient record: everything secret, kept solely so
/// attacks can be scored. No protocol party ever sees this.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub user_location: GridPoint,
    /// Plaintext history; an attacker is granted it only when
    /// `history_known_to_attacker` is set (the realistic assumption that
    /// LBS tracked prior queries).
    pub history: Vec<GridPoint>,
    pub history_known_to_attacker: bool,
    /// T = t-scaled virtual location.
    #[serde(with = "crate::serde_util::bigint_str")]
    pub t_x: BigInt,
    #[serde(with = "crate::serde_util::bigint_str")]
    pub t_y: BigInt,
    pub scaled_pois: Vec<GridPoint>,
    /// Scaled squared distances d_i.
    #[serde(with = "crate::serde_util::bigint_vec_str")]
    pub distances: Vec<BigInt>,
    /// d_i - d_j for every pair i < j.
    pub differences: Vec<PairDelta>,
    /// Indices sorted by true distance (ties by index).
    pub ranking: Vec<usize>,
    /// First k_nn of `ranking`.
    pub knn: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub sealed: String,
    /// The response as the user decodes it.
    pub opened: Vec<ResponseEntry>,
}

/// Serialized public key material, as any observer of the wire would see
/// it. Secret halves never leave the key ring.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PublicKeyRecord {
    pub she: String,
    pub dgk: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DerivedSummary {
    pub n: usize,
    #[serde(with = "crate::serde_util::bigint_str")]
    pub m: BigInt,
    pub l: u32,
    #[serde(with = "crate::serde_util::bigint_str")]
    pub u: BigInt,
    #[serde(with = "crate::serde_util::bigint_str")]
    pub she_plaintext_modulus: BigInt,
}

/// Complete deterministic record of one simulated query.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FullTranscript {
    pub format_version: u32,
    pub config: ScenarioConfig,
    pub derived: DerivedSummary,
    pub keyring_fingerprint: String,
    pub public_keys: PublicKeyRecord,
    pub messages: Vec<MessageRecord>,
    pub comparisons: Vec<ComparisonTranscript>,
    pub response: ResponseRecord,
    pub sidecar: GroundTruth,
}

struct MessageLog {
    seq: u32,
    records: Vec<MessageRecord>,
}

impl MessageLog {
    fn new() -> Self {
        MessageLog {
            seq: 0,
            records: Vec::new(),
        }
    }

    fn push(&mut self, from: Entity, to: Entity, payload: MessagePayload) {
        self.records.push(MessageRecord {
            seq: self.seq,
            from,
            to,
            payload,
        });
        self.seq += 1;
    }
}

fn ground_truth(config: &ScenarioConfig, derived: &DerivedParams) -> Result<GroundTruth, ProtocolError> {
    let t_x: BigInt = std::iter::once(&config.user_location.x)
        .chain(config.history.iter().map(|h| &h.x))
        .sum();
    let t_y: BigInt = std::iter::once(&config.user_location.y)
        .chain(config.history.iter().map(|h| &h.y))
        .sum();
    let scaled_pois: Vec<GridPoint> = config.pois.iter().map(|p| p.scaled(config.t)).collect();
    let t_point = GridPoint {
        x: t_x.clone(),
        y: t_y.clone(),
    };
    let distances: Vec<BigInt> = scaled_pois.iter().map(|p| t_point.sq_dist(p)).collect();
    for d in &distances {
        if d > &derived.m {
            return Err(ProtocolError::Invariant(format!(
                "scaled squared distance {d} exceeds the derived bound m = {}",
                derived.m
            )));
        }
    }
    let mut differences = Vec::new();
    for i in 0..distances.len() {
        for j in (i + 1)..distances.len() {
            differences.push(PairDelta {
                pair: (i, j),
                delta: &distances[i] - &distances[j],
            });
        }
    }
    let mut ranking: Vec<usize> = (0..distances.len()).collect();
    ranking.sort_by(|&a, &b| distances[a].cmp(&distances[b]).then(a.cmp(&b)));
    let knn = ranking[..config.k_nn].to_vec();
    Ok(GroundTruth {
        user_location: config.user_location.clone(),
        history: config.history.clone(),
        history_known_to_attacker: !config.random_history,
        t_x,
        t_y,
        scaled_pois,
        distances,
        differences,
        ranking,
        knn,
    })
}

/// Run one query end to end. Deterministic: identical configs (including
/// the seed) give identical transcripts, byte for byte once serialized.
pub fn run_full_query(config: &ScenarioConfig) -> Result<FullTranscript, ProtocolError> {
    let derived = config.validate()?;
    let mut rng = SeededRng::new(config.seed);
    let keys = ca_setup(config, &mut rng)?;
    let she_pk = &keys.she.public;
    let truth = ground_truth(config, &derived)?;
    let mut log = MessageLog::new();

    // User -> EN: sealed query plus encrypted own coordinates.
    let query = user_create_query(
        &config.user_location,
        "k nearest services",
        &keys,
        &config.world_diameter,
        &mut rng,
    )?;
    log.push(
        Entity::User,
        Entity::EdgeNode,
        MessagePayload::UserQuery {
            sealed_query: query.sealed_query.clone(),
            enc_x: query.enc_x.to_hex_blob(),
            enc_y: query.enc_y.to_hex_blob(),
        },
    );

    // EN -> LBS: relay the sealed query.
    log.push(
        Entity::EdgeNode,
        Entity::Lbs,
        MessagePayload::RelayQuery {
            sealed_query: query.sealed_query.clone(),
        },
    );

    // EN side: encrypted history feeds the moving average.
    let history_cts: Vec<_> = config
        .history
        .iter()
        .map(|h| {
            Ok((
                she::encrypt_signed(she_pk, &h.x, &mut rng)?,
                she::encrypt_signed(she_pk, &h.y, &mut rng)?,
            ))
        })
        .collect::<Result<Vec<_>, ProtocolError>>()?;
    let (t_x_ct, t_y_ct) = en_virtual_location(&query.enc_x, &query.enc_y, &history_cts, config.t)?;

    // LBS -> EN: t-scaled POI coordinates, encrypted.
    let poi_cts: Vec<_> = truth
        .scaled_pois
        .iter()
        .map(|p| {
            Ok((
                she::encrypt_signed(she_pk, &p.x, &mut rng)?,
                she::encrypt_signed(she_pk, &p.y, &mut rng)?,
            ))
        })
        .collect::<Result<Vec<_>, ProtocolError>>()?;
    log.push(
        Entity::Lbs,
        Entity::EdgeNode,
        MessagePayload::PoiBatch {
            entries: poi_cts
                .iter()
                .map(|(x, y)| PoiCiphertexts {
                    x: x.to_hex_blob(),
                    y: y.to_hex_blob(),
                })
                .collect(),
        },
    );

    // EN: encrypted squared distances.
    let d_cts = en_compute_distances(&t_x_ct, &t_y_ct, &poi_cts)?;

    // Pairwise comparisons.
    let n = derived.n;
    let mut decisions = PairwiseDecisions::new(n);
    let mut comparisons = Vec::with_capacity(n * (n - 1) / 2);
    for a in 0..n {
        for b in (a + 1)..n {
            let pair_truth = truth.distances[a] >= truth.distances[b];
            let mut ct = ComparisonTranscript {
                pair: (a, b),
                d_a: truth.distances[a].clone(),
                d_b: truth.distances[b].clone(),
                z: None,
                rho: None,
                w: None,
                w_bar: None,
                rho_bar: None,
                epsilon: None,
                xi: Vec::new(),
                c_values: Vec::new(),
                decision: false,
                truth: pair_truth,
            };
            let decision = match config.mode {
                Mode::Oracle => pair_truth,
                Mode::Faithful if config.leak_z => {
                    // The "just give out z" repair: EN ships enc(z), LBS
                    // decrypts and reads bit l. Comparisons become correct.
                    let z_ct = en_encrypt_z(&d_cts[a], &d_cts[b], derived.l, she_pk, &mut rng)?;
                    log.push(
                        Entity::EdgeNode,
                        Entity::Lbs,
                        MessagePayload::ZDisclosure {
                            pair: (a, b),
                            z: z_ct.to_hex_blob(),
                        },
                    );
                    let z = she::decrypt(&keys.she.secret, &z_ct)?;
                    let dec = numkit::bit(&z, derived.l);
                    ct.z = Some(z);
                    dec
                }
                Mode::Faithful => {
                    let (w_ct, rho) = en_compare_prepare(
                        &d_cts[a],
                        &d_cts[b],
                        derived.l,
                        derived.k_sec,
                        she_pk,
                        &mut rng,
                    )?;
                    log.push(
                        Entity::EdgeNode,
                        Entity::Lbs,
                        MessagePayload::CompareW {
                            pair: (a, b),
                            w: w_ct.to_hex_blob(),
                        },
                    );
                    let reduced = lbs_reduce_w(&w_ct, &keys, derived.l, &mut rng)?;
                    log.push(
                        Entity::Lbs,
                        Entity::EdgeNode,
                        MessagePayload::WbarBits {
                            pair: (a, b),
                            bits: reduced.bits.iter().map(|b| b.to_hex_blob()).collect(),
                        },
                    );
                    let rho_bar = numkit::mod_reduce(&rho, derived.l);
                    let epsilon = rng.rand_sign();
                    let combined = en_dgk_combine(
                        &reduced.bits,
                        &rho_bar,
                        derived.l,
                        epsilon,
                        &keys.dgk.public,
                        &mut rng,
                    )?;
                    log.push(
                        Entity::EdgeNode,
                        Entity::Lbs,
                        MessagePayload::BlindedScores {
                            pair: (a, b),
                            scores: combined.blinded.iter().map(|c| c.to_hex_blob()).collect(),
                        },
                    );
                    let dec = lbs_decide(&combined.blinded, &keys.dgk.secret)?;

                    ct.z = Some(&reduced.w - &rho);
                    ct.w = Some(reduced.w.clone());
                    ct.w_bar = Some(reduced.w_bar.clone());
                    ct.rho = Some(rho);
                    ct.rho_bar = Some(rho_bar.clone());
                    ct.epsilon = Some(epsilon);
                    ct.xi = combined.xis.clone();
                    ct.c_values = comparison_chain_plain(
                        &reduced.w_bar,
                        &rho_bar,
                        derived.l,
                        epsilon,
                        keys.dgk.public.plaintext_space(),
                    );
                    dec
                }
                Mode::Masked => {
                    let mask_range = config.mask_range.as_ref().expect("validated");
                    let (z_ct, _r) = en_mask_difference(
                        &d_cts[a],
                        &d_cts[b],
                        she_pk,
                        mask_range,
                        config.signed_mask,
                        &mut rng,
                    )?;
                    log.push(
                        Entity::EdgeNode,
                        Entity::Lbs,
                        MessagePayload::MaskedDifference {
                            pair: (a, b),
                            z: z_ct.to_hex_blob(),
                        },
                    );
                    let z = she::decrypt_signed(&keys.she.secret, &z_ct)?;
                    let dec = !z.is_negative();
                    ct.z = Some(z);
                    dec
                }
            };
            ct.decision = decision;
            decisions.insert(a, b, decision);
            comparisons.push(ct);
        }
    }

    // LBS -> EN -> User: ranked response, sealed.
    let response = lbs_rank_and_respond(&decisions, &config.pois, config.k_nn, &keys.seal, &mut rng)?;
    log.push(
        Entity::Lbs,
        Entity::EdgeNode,
        MessagePayload::Response {
            sealed: response.sealed.clone(),
        },
    );
    log.push(
        Entity::EdgeNode,
        Entity::User,
        MessagePayload::RelayResponse {
            sealed: response.sealed.clone(),
        },
    );

    // The user opens the envelope; the transcript records what they see.
    let opened_bytes = open_envelope(&keys.seal, &response.sealed)?;
    let opened: Vec<ResponseEntry> = serde_json::from_slice(&opened_bytes)
        .map_err(|e| ProtocolError::Invariant(format!("response decode: {e}")))?;
    if opened != response.entries {
        return Err(ProtocolError::Invariant(
            "opened response differs from the ranked entries".into(),
        ));
    }

    Ok(FullTranscript {
        format_version: TRANSCRIPT_FORMAT_VERSION,
        config: config.clone(),
        derived: DerivedSummary {
            n,
            m: derived.m.clone(),
            l: derived.l,
            u: derived.u.clone(),
            she_plaintext_modulus: keys.she_params.plaintext_modulus.clone(),
        },
        keyring_fingerprint: keys.fingerprint(),
        public_keys: PublicKeyRecord {
            she: keys.she.public.to_hex_blob(),
            dgk: keys.dgk.public.to_hex_blob(),
        },
        messages: log.records,
        comparisons,
        response: ResponseRecord {
            sealed: response.sealed,
            opened,
        },
        sidecar: truth,
    })
}

impl FullTranscript {
    /// Canonical on-disk form (pretty JSON plus trailing newline).
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("transcript serializes");
        s.push('\n');
        s
    }

    pub fn from_json(raw: &str) -> Result<FullTranscript, serde_json::Error> {
        serde_json::from_str(raw)
    }
}
