//! Location recovery from disclosed distance differences.
//!
//! Each difference delta_ij = d_i - d_j between squared distances to two
//! known POIs is a radical-axis equation: subtracting the circle equations
//! at POI i and POI j leaves a LINE in the unknown center (T_x, T_y). Two
//! independent lines pin the point; every further difference is a
//! consistency check. With the virtual location in hand, absolute distances
//! come from the circle equation, and the moving average inverts to the
//! exact user location whenever the history is known.

use super::{stage, AttackError};
use crate::numkit::{self, BigInt, Rational, SolveError};
use crate::protocol::{GridPoint, PairDelta};
use num_traits::Zero;

/// The z-disclosure route: each z is 2^l + d_i - d_j, so the signed
/// difference is z - 2^l.
pub fn recover_differences_from_z(zs: &[((usize, usize), BigInt)], l: u32) -> Vec<PairDelta> {
    let offset = numkit::pow2(l);
    zs.iter()
        .map(|(pair, z)| PairDelta {
            pair: *pair,
            delta: z - &offset,
        })
        .collect()
}

fn radical_rows(
    deltas: &[PairDelta],
    scaled_pois: &[GridPoint],
) -> Result<Vec<(BigInt, BigInt, BigInt)>, AttackError> {
    let mut rows = Vec::with_capacity(deltas.len());
    for PairDelta { pair: (i, j), delta } in deltas {
        let pi = scaled_pois
            .get(*i)
            .ok_or_else(|| AttackError::InvalidInput(format!("POI index {i} out of range")))?;
        let pj = scaled_pois
            .get(*j)
            .ok_or_else(|| AttackError::InvalidInput(format!("POI index {j} out of range")))?;
        let a = BigInt::from(2) * (&pj.x - &pi.x);
        let b = BigInt::from(2) * (&pj.y - &pi.y);
        let c = delta + (&pj.x * &pj.x + &pj.y * &pj.y) - (&pi.x * &pi.x + &pi.y * &pi.y);
        rows.push((a, b, c));
    }
    Ok(rows)
}

/// Solve the radical-axis system for the scaled virtual location, exactly.
pub fn recover_virtual_location(
    deltas: &[PairDelta],
    scaled_pois: &[GridPoint],
) -> Result<(Rational, Rational), AttackError> {
    if deltas.len() < 2 {
        return Err(AttackError::InvalidInput(
            "need at least two pairwise differences".into(),
        ));
    }
    if scaled_pois.len() < 3 {
        return Err(AttackError::InvalidInput(
            "need at least three POIs".into(),
        ));
    }
    let rows = radical_rows(deltas, scaled_pois)?;
    match numkit::solve_linear_exact(&rows) {
        Ok(solution) => Ok(solution),
        Err(SolveError::Underdetermined) => Err(AttackError::UnderdeterminedGeometry),
        Err(SolveError::Inconsistent) => Err(AttackError::InconsistentDifferences),
        Err(SolveError::TooFewRows) => Err(AttackError::InvalidInput(
            "need at least two pairwise differences".into(),
        )),
    }
}

/// Pin absolute squared distances: d_1 from the circle equation at POI 1,
/// the rest through the differences, cross-checked against every
/// provided delta.
pub fn recover_distances(
    deltas: &[PairDelta],
    t_loc: &(Rational, Rational),
    scaled_pois: &[GridPoint],
) -> Result<Vec<Rational>, AttackError> {
    let n = scaled_pois.len();
    if n == 0 {
        return Err(AttackError::InvalidInput("no POIs".into()));
    }
    let circle = |p: &GridPoint| -> Rational {
        let dx = &t_loc.0 - Rational::from(p.x.clone());
        let dy = &t_loc.1 - Rational::from(p.y.clone());
        &dx * &dx + &dy * &dy
    };
    let d0 = circle(&scaled_pois[0]);

    let mut distances: Vec<Option<Rational>> = vec![None; n];
    distances[0] = Some(d0.clone());
    for PairDelta { pair: (i, j), delta } in deltas {
        let delta = Rational::from(delta.clone());
        if *i == 0 {
            distances[*j] = Some(&d0 - &delta);
        } else if *j == 0 {
            distances[*i] = Some(&d0 + &delta);
        }
    }
    // Any POI not connected to POI 1 through a delta still has its circle
    // value; the cross-checks below keep everyone honest.
    let distances: Vec<Rational> = distances
        .into_iter()
        .enumerate()
        .map(|(i, d)| d.unwrap_or_else(|| circle(&scaled_pois[i])))
        .collect();

    // Each claimed distance must be non-negative, must reproduce the circle
    // equation at its POI, and must respect every provided delta.
    for (i, d) in distances.iter().enumerate() {
        if d < &Rational::zero() || d != &circle(&scaled_pois[i]) {
            return Err(AttackError::InconsistentDifferences);
        }
    }
    for PairDelta { pair: (i, j), delta } in deltas {
        if &distances[*i] - &distances[*j] != Rational::from(delta.clone()) {
            return Err(AttackError::InconsistentDifferences);
        }
    }
    Ok(distances)
}

/// Undo the moving average: X_a = T_x - sum of historical x (and likewise
/// for y). Exact, provided the recovered virtual location is integral.
pub fn invert_moving_average(
    t_loc: &(Rational, Rational),
    history: &[GridPoint],
    t: u32,
) -> Result<GridPoint, AttackError> {
    if t < 2 || history.len() != (t - 1) as usize {
        return Err(stage(
            "invert",
            format!(
                "history length {} does not match t - 1 = {}",
                history.len(),
                t.saturating_sub(1)
            ),
        ));
    }
    if !t_loc.0.is_integer() || !t_loc.1.is_integer() {
        return Err(stage(
            "invert",
            "virtual location is not integral; cannot invert exactly",
        ));
    }
    let hx: BigInt = history.iter().map(|h| &h.x).sum();
    let hy: BigInt = history.iter().map(|h| &h.y).sum();
    Ok(GridPoint {
        x: t_loc.0.numer() - hx,
        y: t_loc.1.numer() - hy,
    })
}
