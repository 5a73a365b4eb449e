//! Scenario configuration and the parameters derived from it.

use super::ProtocolError;
use crate::numkit::{self, BigInt};
use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Integer-scaled planar coordinate pair (one unit = one grid cell).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridPoint {
    #[serde(with = "crate::serde_util::bigint_str")]
    pub x: BigInt,
    #[serde(with = "crate::serde_util::bigint_str")]
    pub y: BigInt,
}

impl GridPoint {
    pub fn new(x: impl Into<BigInt>, y: impl Into<BigInt>) -> Self {
        GridPoint {
            x: x.into(),
            y: y.into(),
        }
    }

    /// Squared Euclidean distance to another point.
    pub fn sq_dist(&self, other: &GridPoint) -> BigInt {
        let dx = &self.x - &other.x;
        let dy = &self.y - &other.y;
        &dx * &dx + &dy * &dy
    }

    /// Coordinates multiplied by t (the integer stand-in for averaging).
    pub fn scaled(&self, t: u32) -> GridPoint {
        GridPoint {
            x: &self.x * t,
            y: &self.y * t,
        }
    }
}

impl fmt::Display for GridPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Comparison mode for a protocol run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Ground-truth comparisons; correct baseline.
    #[default]
    Oracle,
    /// The comparison subprotocol as designed, flaw included.
    Faithful,
    /// Signed differences disclosed under a fresh multiplicative mask.
    Masked,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Oracle => write!(f, "oracle"),
            Mode::Faithful => write!(f, "faithful"),
            Mode::Masked => write!(f, "masked"),
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "oracle" => Ok(Mode::Oracle),
            "faithful" => Ok(Mode::Faithful),
            "masked" => Ok(Mode::Masked),
            other => Err(format!("unknown mode `{other}` (oracle|faithful|masked)")),
        }
    }
}

fn default_k_sec() -> u32 {
    40
}

/// One simulated query: geometry, protocol parameters, mode, seed.
///
/// Unknown fields in a scenario file are rejected, so a typo fails loudly
/// instead of silently running defaults.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub user_location: GridPoint,
    /// Historical locations feeding the moving average; length t - 1.
    pub history: Vec<GridPoint>,
    /// Points of interest held as plaintext by LBS; at least 3.
    pub pois: Vec<GridPoint>,
    /// Moving-average window (current location plus t - 1 historical ones).
    pub t: u32,
    /// Security parameter in bits for the blinding value rho.
    #[serde(default = "default_k_sec")]
    pub k_sec: u32,
    /// Upper bound on the Euclidean distance between any two scene points.
    #[serde(with = "crate::serde_util::bigint_str")]
    pub world_diameter: BigInt,
    /// How many nearest POIs the response carries.
    pub k_nn: usize,
    pub seed: u64,
    #[serde(default)]
    pub mode: Mode,
    /// Masked mode only: masks R are drawn from [1, mask_range].
    #[serde(default, with = "crate::serde_util::bigint_opt_str")]
    pub mask_range: Option<BigInt>,
    /// When set, the history entries are synthetic bootstrap values unknown
    /// to the attacker; location recovery then stops at the virtual location.
    #[serde(default)]
    pub random_history: bool,
    /// Faithful mode only: EN discloses the encrypted comparison value z to
    /// LBS (the "just give out z" repair).
    #[serde(default)]
    pub leak_z: bool,
    /// Masked mode only: masks may be negative (sign no longer leaks).
    #[serde(default)]
    pub signed_mask: bool,
}

/// Parameters derived from a validated config.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivedParams {
    /// Number of POIs.
    pub n: usize,
    /// Bound on every scaled squared distance: (t * D)^2.
    pub m: BigInt,
    /// Comparison bit width: smallest l with 2^l >= m (strictly > m here,
    /// so z = 2^l + d_a - d_b always fits in l + 1 bits).
    pub l: u32,
    /// DGK plaintext space: the smallest prime above 3l + 3, so no nonzero
    /// chain value can wrap to zero.
    pub u: BigInt,
    pub k_sec: u32,
}

impl ScenarioConfig {
    fn fail(field: &'static str, msg: impl Into<String>) -> ProtocolError {
        ProtocolError::Config {
            field,
            msg: msg.into(),
        }
    }

    pub fn validate(&self) -> Result<DerivedParams, ProtocolError> {
        if self.t < 2 {
            return Err(Self::fail("t", "moving-average window must be at least 2"));
        }
        if self.history.len() != (self.t - 1) as usize {
            return Err(Self::fail(
                "history",
                format!(
                    "expected t - 1 = {} entries, got {}",
                    self.t - 1,
                    self.history.len()
                ),
            ));
        }
        let n = self.pois.len();
        if n < 3 {
            return Err(Self::fail("pois", "need at least 3 points of interest"));
        }
        if self.k_nn < 1 || self.k_nn > n {
            return Err(Self::fail("k_nn", format!("must be in [1, {n}]")));
        }
        if self.k_sec < 1 {
            return Err(Self::fail("k_sec", "must be at least 1"));
        }
        if self.world_diameter < BigInt::one() {
            return Err(Self::fail("world_diameter", "must be at least 1"));
        }

        let bound_check = |field: &'static str, pts: &[&GridPoint]| {
            for p in pts {
                if p.x.abs() > self.world_diameter || p.y.abs() > self.world_diameter {
                    return Err(Self::fail(field, format!("{p} outside the world bound")));
                }
            }
            Ok(())
        };
        bound_check("user_location", &[&self.user_location])?;
        bound_check("history", &self.history.iter().collect::<Vec<_>>())?;
        bound_check("pois", &self.pois.iter().collect::<Vec<_>>())?;

        // The diameter promise must actually hold for the scene, otherwise
        // the derived bound m would not cap the scaled squared distances.
        let all_points: Vec<&GridPoint> = std::iter::once(&self.user_location)
            .chain(self.history.iter())
            .chain(self.pois.iter())
            .collect();
        let d_sq = &self.world_diameter * &self.world_diameter;
        for (i, a) in all_points.iter().enumerate() {
            for b in &all_points[i + 1..] {
                if a.sq_dist(b) > d_sq {
                    return Err(Self::fail(
                        "world_diameter",
                        format!("points {a} and {b} are farther apart than the diameter"),
                    ));
                }
            }
        }

        match self.mode {
            Mode::Masked => {
                let mr = self
                    .mask_range
                    .as_ref()
                    .ok_or_else(|| Self::fail("mask_range", "required in masked mode"))?;
                if mr < &BigInt::one() {
                    return Err(Self::fail("mask_range", "must be at least 1"));
                }
            }
            _ => {
                if self.mask_range.is_some() {
                    return Err(Self::fail("mask_range", "only valid in masked mode"));
                }
                if self.signed_mask {
                    return Err(Self::fail("signed_mask", "only valid in masked mode"));
                }
            }
        }
        if self.leak_z && self.mode != Mode::Faithful {
            return Err(Self::fail("leak_z", "only valid in faithful mode"));
        }

        let td = &self.world_diameter * self.t;
        let m = &td * &td;
        let l = numkit::ceil_log2(&(&m + BigInt::one()));
        debug_assert!(numkit::pow2(l) >= m);
        let u = numkit::next_prime(&BigInt::from(3 * l + 3));
        Ok(DerivedParams {
            n,
            m,
            l,
            u,
            k_sec: self.k_sec,
        })
    }
}
