//! The correctness flaw itself: bit l of z is statistically independent of
//! the pair (w mod 2^l, rho mod 2^l) the decision rule actually looks at, so
//! the faithful comparison cannot beat guessing. `build_msb_collision`
//! constructs explicit witnesses; `demonstrate_flaw` measures the agreement
//! rate against ground truth over seeded trials.

use super::{stage, AttackError};
use crate::numkit::{self, BigInt, SeededRng};
use crate::protocol::{compare_plain, comparison_chain_plain, decision_from_chain, Mode, ScenarioConfig};
use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

/// Two comparison values z with identical (w_bar, rho_bar) but opposite
/// top bit: everything the decision rule sees is the same, the answer it is
/// supposed to produce is not.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MsbCollision {
    pub l: u32,
    #[serde(with = "crate::serde_util::bigint_str")]
    pub rho: BigInt,
    /// z with bit l = 0 (reads "d_a < d_b").
    #[serde(with = "crate::serde_util::bigint_str")]
    pub z_low: BigInt,
    /// z_low + 2^l, bit l = 1 (reads "d_a >= d_b").
    #[serde(with = "crate::serde_util::bigint_str")]
    pub z_high: BigInt,
    #[serde(with = "crate::serde_util::bigint_str")]
    pub w_low: BigInt,
    #[serde(with = "crate::serde_util::bigint_str")]
    pub w_high: BigInt,
    #[serde(with = "crate::serde_util::bigint_str")]
    pub w_bar: BigInt,
    #[serde(with = "crate::serde_util::bigint_str")]
    pub rho_bar: BigInt,
    /// The chain decision agrees between the two z values for either
    /// epsilon; always true, which is the whole problem.
    pub decisions_match: bool,
}

/// Construct the collision (z_low, z_low + 2^l) for a given rho.
pub fn build_msb_collision(
    l: u32,
    rho: &BigInt,
    z_low: &BigInt,
) -> Result<MsbCollision, AttackError> {
    if l < 1 {
        return Err(AttackError::InvalidInput("l must be at least 1".into()));
    }
    if rho.is_negative() {
        return Err(AttackError::InvalidInput("rho must be non-negative".into()));
    }
    if z_low.is_negative() || z_low >= &numkit::pow2(l) {
        return Err(AttackError::InvalidInput(format!(
            "z_low must lie in [0, 2^{l})"
        )));
    }
    let z_high = z_low + numkit::pow2(l);
    let w_low = z_low + rho;
    let w_high = &z_high + rho;
    let w_bar = numkit::mod_reduce(&w_low, l);
    debug_assert_eq!(w_bar, numkit::mod_reduce(&w_high, l));
    let rho_bar = numkit::mod_reduce(rho, l);

    let u = numkit::next_prime(&BigInt::from(3 * l + 3));
    let decisions_match = [-1i8, 1].iter().all(|&eps| {
        let chain = comparison_chain_plain(&w_bar, &rho_bar, l, eps, &u);
        // Identical (w_bar, rho_bar) means an identical chain; the check is
        // that nothing else sneaks in.
        let again = comparison_chain_plain(
            &numkit::mod_reduce(&w_high, l),
            &rho_bar,
            l,
            eps,
            &u,
        );
        decision_from_chain(&chain) == decision_from_chain(&again)
    });

    Ok(MsbCollision {
        l,
        rho: rho.clone(),
        z_low: z_low.clone(),
        z_high,
        w_low,
        w_high,
        w_bar,
        rho_bar,
        decisions_match,
    })
}

/// The two published toy collisions: (z = 3, z = 7) at l = 2, rho = 31.
pub fn worked_example_collision() -> MsbCollision {
    build_msb_collision(2, &BigInt::from(31), &BigInt::from(3)).expect("fixed inputs are valid")
}

/// Outcome of a flaw measurement.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlawReport {
    pub format_version: u32,
    pub mode: Mode,
    pub trials: u64,
    pub agreements: u64,
    /// agreements / trials.
    pub agreement_rate: f64,
    pub l: u32,
    pub k_sec: u32,
    #[serde(with = "crate::serde_util::bigint_str")]
    pub m: BigInt,
    /// Explicit witnesses, always including the published pair at l = 2.
    pub counterexamples: Vec<MsbCollision>,
    pub notes: Vec<String>,
}

pub const FLAW_REPORT_FORMAT_VERSION: u32 = 1;

/// Run `trials` independent comparisons with fresh d_a, d_b, rho, epsilon
/// per trial and score the configured mode's decision against ground truth.
///
/// Trials use per-index forks of the provided generator, so the measured
/// rate is independent of evaluation order. The faithful arm evaluates the
/// comparison chain at the plaintext level, which the DGK layer provably
/// mirrors (blinding preserves zero-ness exactly; see the protocol tests
/// that hold the encrypted and plaintext chains together).
pub fn demonstrate_flaw(
    config: &ScenarioConfig,
    trials: u64,
    rng: &mut SeededRng,
) -> Result<FlawReport, AttackError> {
    if trials < 1 {
        return Err(AttackError::InvalidInput("need at least one trial".into()));
    }
    let derived = config
        .validate()
        .map_err(|e| stage("flaw-setup", e.to_string()))?;
    let m = derived.m.clone();
    let l = derived.l;
    let u = derived.u.clone();
    let bound = &m + BigInt::one();

    let mut agreements = 0u64;
    for trial in 0..trials {
        let mut tr = rng.fork(trial);
        let d_a = tr.rand_below(&bound);
        let d_b = tr.rand_below(&bound);
        let rho = tr.rand_bits(derived.k_sec + l + 1);
        let epsilon = tr.rand_sign();
        let truth = d_a >= d_b;
        let decision = match config.mode {
            Mode::Faithful => compare_plain(&d_a, &d_b, l, &u, &rho, epsilon).decision,
            // Control arm: ground-truth comparisons.
            Mode::Oracle => truth,
            // Masked arm decides from the sign of (d_a - d_b) * R, which
            // equals truth exactly when R > 0.
            Mode::Masked => {
                let range = config
                    .mask_range
                    .as_ref()
                    .expect("validated masked config has a range");
                let mut r = tr.rand_range_inclusive(&BigInt::one(), range);
                if config.signed_mask && tr.rand_sign() < 0 {
                    r = -r;
                }
                !((&d_a - &d_b) * r).is_negative()
            }
        };
        if decision == truth {
            agreements += 1;
        }
    }

    // Witnesses: the published pair, plus fresh collisions at this run's l.
    let mut counterexamples = vec![worked_example_collision()];
    let mut wit_rng = rng.fork(trials);
    for _ in 0..3 {
        let rho = wit_rng.rand_bits(derived.k_sec + l + 1);
        let z_low = wit_rng.rand_below(&numkit::pow2(l));
        counterexamples.push(build_msb_collision(l, &rho, &z_low)?);
    }

    Ok(FlawReport {
        format_version: FLAW_REPORT_FORMAT_VERSION,
        mode: config.mode,
        trials,
        agreements,
        agreement_rate: agreements as f64 / trials as f64,
        l,
        k_sec: derived.k_sec,
        m,
        counterexamples,
        notes: vec![
            "bit l of z is independent of (w mod 2^l, rho mod 2^l), so the decision rule has no signal".into(),
            "the zero-presence rule also ignores epsilon: a zero means w_bar > rho_bar under epsilon = -1 but rho_bar > w_bar under epsilon = +1".into(),
        ],
    })
}
