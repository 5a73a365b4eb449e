//! Exact solver for small overdetermined 2-unknown linear systems. Used by
//! the location-recovery attack, where the answer must be exact or the
//! failure mode must be named.

use super::Rational;
use num_bigint::BigInt;
use num_traits::Zero;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SolveError {
    #[error("need at least two equations")]
    TooFewRows,
    #[error("system is underdetermined (coefficient rank < 2)")]
    Underdetermined,
    #[error("system is inconsistent (no common solution)")]
    Inconsistent,
}

/// Solve a*X + b*Y = c over all rows, exactly.
///
/// Returns the unique rational (X, Y) satisfying every row, or reports the
/// system as underdetermined (rank < 2) or inconsistent (no common
/// solution), two distinct failures the caller treats differently.
pub fn solve_linear_exact(
    rows: &[(BigInt, BigInt, BigInt)],
) -> Result<(Rational, Rational), SolveError> {
    if rows.len() < 2 {
        return Err(SolveError::TooFewRows);
    }

    // Find one independent pair of rows.
    let mut pivot: Option<(usize, usize)> = None;
    'outer: for i in 0..rows.len() {
        for j in (i + 1)..rows.len() {
            let det = &rows[i].0 * &rows[j].1 - &rows[j].0 * &rows[i].1;
            if !det.is_zero() {
                pivot = Some((i, j));
                break 'outer;
            }
        }
    }

    match pivot {
        Some((i, j)) => {
            let (a1, b1, c1) = &rows[i];
            let (a2, b2, c2) = &rows[j];
            let det = a1 * b2 - a2 * b1;
            let x = Rational::new(c1 * b2 - c2 * b1, det.clone());
            let y = Rational::new(a1 * c2 - a2 * c1, det);
            // Every remaining row must agree exactly.
            for (a, b, c) in rows {
                let lhs = Rational::from(a.clone()) * &x + Rational::from(b.clone()) * &y;
                if lhs != Rational::from(c.clone()) {
                    return Err(SolveError::Inconsistent);
                }
            }
            Ok((x, y))
        }
        None => {
            // Coefficient rank <= 1: either every row is proportional to a
            // reference row (underdetermined) or some pair contradicts
            // (inconsistent).
            let reference = rows.iter().find(|(a, b, _)| !a.is_zero() || !b.is_zero());
            match reference {
                None => {
                    // All-zero coefficients: rows read 0 = c.
                    if rows.iter().all(|(_, _, c)| c.is_zero()) {
                        Err(SolveError::Underdetermined)
                    } else {
                        Err(SolveError::Inconsistent)
                    }
                }
                Some((ar, br, cr)) => {
                    for (a, b, c) in rows {
                        if a.is_zero() && b.is_zero() {
                            if !c.is_zero() {
                                return Err(SolveError::Inconsistent);
                            }
                            continue;
                        }
                        if ar * c != a * cr || br * c != b * cr {
                            return Err(SolveError::Inconsistent);
                        }
                    }
                    Err(SolveError::Underdetermined)
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::SeededRng;
    use num_traits::One;

    fn row(a: i64, b: i64, c: i64) -> (BigInt, BigInt, BigInt) {
        (BigInt::from(a), BigInt::from(b), BigInt::from(c))
    }

    #[test]
    fn identity_system() {
        let (x, y) = solve_linear_exact(&[row(1, 0, 3), row(0, 1, 4)]).unwrap();
        assert_eq!(x, Rational::from(BigInt::from(3)));
        assert_eq!(y, Rational::from(BigInt::from(4)));
    }

    #[test]
    fn parallel_rows_are_inconsistent() {
        let err = solve_linear_exact(&[row(1, 1, 1), row(2, 2, 3)]).unwrap_err();
        assert_eq!(err, SolveError::Inconsistent);
    }

    #[test]
    fn proportional_rows_are_underdetermined() {
        let err = solve_linear_exact(&[row(1, 1, 1), row(2, 2, 2)]).unwrap_err();
        assert_eq!(err, SolveError::Underdetermined);
    }

    #[test]
    fn too_few_rows() {
        assert_eq!(
            solve_linear_exact(&[row(1, 1, 1)]).unwrap_err(),
            SolveError::TooFewRows
        );
    }

    #[test]
    fn third_row_contradiction_detected() {
        let err = solve_linear_exact(&[row(1, 0, 3), row(0, 1, 4), row(1, 1, 8)]).unwrap_err();
        assert_eq!(err, SolveError::Inconsistent);
    }

    #[test]
    fn rational_solution() {
        // 2X = 1, 2Y = 3 -> (1/2, 3/2)
        let (x, y) = solve_linear_exact(&[row(2, 0, 1), row(0, 2, 3)]).unwrap();
        assert_eq!(x, Rational::new(BigInt::one(), BigInt::from(2)));
        assert_eq!(y, Rational::new(BigInt::from(3), BigInt::from(2)));
    }

    #[test]
    fn random_systems_substitute_back() {
        let mut rng = SeededRng::new(12);
        for _ in 0..200 {
            // Plant a solution, generate consistent rows, then check that
            // the solver's answer satisfies every row exactly.
            let xs = rng.rand_bits(24) - rng.rand_bits(24);
            let ys = rng.rand_bits(24) - rng.rand_bits(24);
            let mut rows = Vec::new();
            for _ in 0..5 {
                let a = rng.rand_bits(16) - rng.rand_bits(16);
                let b = rng.rand_bits(16) - rng.rand_bits(16);
                let c = &a * &xs + &b * &ys;
                rows.push((a, b, c));
            }
            match solve_linear_exact(&rows) {
                Ok((x, y)) => {
                    for (a, b, c) in &rows {
                        let lhs =
                            Rational::from(a.clone()) * &x + Rational::from(b.clone()) * &y;
                        assert_eq!(lhs, Rational::from(c.clone()));
                    }
                }
                Err(SolveError::Underdetermined) => {
                    // Possible when the random rows happen to be collinear.
                }
                Err(e) => panic!("planted system reported {e}"),
            }
        }
    }
}
