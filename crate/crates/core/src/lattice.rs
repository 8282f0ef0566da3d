//! Integer wavevectors on `Z^d` and the symmetry operations used to reduce
//! kernel computations to a fundamental domain.
//!
//! Points are stored as three coordinates regardless of dimension; in `d = 2`
//! the third coordinate is identically zero. This keeps the hot enumeration
//! loops monomorphic while the public constructors enforce the dimension.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A point of the integer lattice `Z^d`, `d ∈ {2, 3}`.
///
/// Ordering is lexicographic on the coordinates; this is the deterministic
/// iteration order used by every summation in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticePoint {
    c: [i64; 3],
}

impl LatticePoint {
    /// Three-dimensional constructor.
    pub fn new3(k1: i64, k2: i64, k3: i64) -> Self {
        LatticePoint { c: [k1, k2, k3] }
    }

    /// Two-dimensional constructor; the third coordinate is fixed to zero.
    pub fn new2(k1: i64, k2: i64) -> Self {
        LatticePoint { c: [k1, k2, 0] }
    }

    /// Builds a point from a `d`-component slice, validating the length and,
    /// for `d = 2`, the absence of a third component.
    pub fn from_coords(coords: &[i64], d: usize) -> Result<Self> {
        if coords.len() != d {
            return Err(Error::InvalidLatticePoint {
                context: format!("expected {d} components, got {}", coords.len()),
            });
        }
        match d {
            2 => Ok(Self::new2(coords[0], coords[1])),
            3 => Ok(Self::new3(coords[0], coords[1], coords[2])),
            _ => Err(Error::UnsupportedDimension { d }),
        }
    }

    pub fn coords(&self) -> [i64; 3] {
        self.c
    }

    /// The first `d` coordinates, for serialization.
    pub fn coords_vec(&self, d: usize) -> Vec<i64> {
        self.c[..d].to_vec()
    }

    pub fn is_zero(&self) -> bool {
        self.c == [0, 0, 0]
    }

    /// Squared Euclidean norm `|k|^2` (exact integer).
    pub fn norm_sq(&self) -> i64 {
        self.c[0] * self.c[0] + self.c[1] * self.c[1] + self.c[2] * self.c[2]
    }

    pub fn norm(&self) -> f64 {
        (self.norm_sq() as f64).sqrt()
    }

    pub fn dot(&self, other: &LatticePoint) -> i64 {
        self.c[0] * other.c[0] + self.c[1] * other.c[1] + self.c[2] * other.c[2]
    }

    pub fn add(&self, other: &LatticePoint) -> LatticePoint {
        LatticePoint {
            c: [
                self.c[0] + other.c[0],
                self.c[1] + other.c[1],
                self.c[2] + other.c[2],
            ],
        }
    }

    pub fn sub(&self, other: &LatticePoint) -> LatticePoint {
        LatticePoint {
            c: [
                self.c[0] - other.c[0],
                self.c[1] - other.c[1],
                self.c[2] - other.c[2],
            ],
        }
    }

    pub fn neg(&self) -> LatticePoint {
        LatticePoint {
            c: [-self.c[0], -self.c[1], -self.c[2]],
        }
    }

    /// True if the first nonzero coordinate is positive. Exactly one of `k`,
    /// `-k` is positive for every `k ≠ 0`, which is how reality-symmetric maps
    /// are generated from a half-space.
    pub fn is_lex_positive(&self) -> bool {
        for &x in &self.c {
            if x != 0 {
                return x > 0;
            }
        }
        false
    }

    /// Reflection `R_r`: negates coordinate `axis` (0-based).
    pub fn reflect(&self, axis: usize) -> Result<LatticePoint> {
        if axis >= 3 {
            return Err(Error::InvalidLatticePoint {
                context: format!("reflection axis {axis} out of range"),
            });
        }
        let mut c = self.c;
        c[axis] = -c[axis];
        Ok(LatticePoint { c })
    }

    /// Coordinate permutation `P_σ`: component `i` of the result is component
    /// `perm[i]` of the input. `perm` must be a permutation of `0..3`.
    pub fn permute(&self, perm: &[usize; 3]) -> Result<LatticePoint> {
        let mut seen = [false; 3];
        for &p in perm {
            if p >= 3 || seen[p] {
                return Err(Error::InvalidLatticePoint {
                    context: format!("{perm:?} is not a permutation of 0..3"),
                });
            }
            seen[p] = true;
        }
        Ok(LatticePoint {
            c: [self.c[perm[0]], self.c[perm[1]], self.c[perm[2]]],
        })
    }

    /// Canonical representative under the symmetry group generated by
    /// reflections and permutations: absolute values sorted increasingly.
    pub fn canonical(&self) -> LatticePoint {
        let mut c = [self.c[0].abs(), self.c[1].abs(), self.c[2].abs()];
        c.sort_unstable();
        LatticePoint { c }
    }
}

impl std::fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {})", self.c[0], self.c[1], self.c[2])
    }
}

/// Exact integer square root: the largest `r ≥ 0` with `r² ≤ n`.
pub fn isqrt(n: i64) -> i64 {
    debug_assert!(n >= 0);
    if n < 2 {
        return n.max(0);
    }
    // f64 sqrt is within one ulp; fix up both directions.
    let mut r = (n as f64).sqrt() as i64;
    while r > 0 && r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// All nonzero lattice points with `|k| ≤ m` (closed Euclidean ball),
/// in lexicographic order.
pub fn ball(d: usize, m: u32) -> Vec<LatticePoint> {
    let m = m as i64;
    let m_sq = m * m;
    let mut out = Vec::new();
    for k1 in -m..=m {
        let r1 = m_sq - k1 * k1;
        if r1 < 0 {
            continue;
        }
        let b2 = isqrt(r1);
        for k2 in -b2..=b2 {
            if d == 2 {
                let p = LatticePoint::new2(k1, k2);
                if !p.is_zero() {
                    out.push(p);
                }
            } else {
                let r2 = r1 - k2 * k2;
                let b3 = isqrt(r2);
                for k3 in -b3..=b3 {
                    let p = LatticePoint::new3(k1, k2, k3);
                    if !p.is_zero() {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}

/// Exact square root if `n` is a perfect square. One f64 sqrt plus a
/// constant number of integer checks; hot path of the shell enumeration.
#[inline]
pub(crate) fn exact_sqrt(n: i64) -> Option<i64> {
    debug_assert!(n >= 0);
    let r = (n as f64).sqrt().round() as i64;
    // The rounded f64 sqrt is within 1 of the true root for n < 2^53.
    if r * r == n {
        Some(r)
    } else if r > 0 && (r - 1) * (r - 1) == n {
        Some(r - 1)
    } else if (r + 1) * (r + 1) == n {
        Some(r + 1)
    } else {
        None
    }
}

/// Visits every lattice point with `|h|² = s` in lexicographic order,
/// passing the three coordinates (third is 0 for `d = 2`).
#[inline]
pub(crate) fn for_each_shell_point(d: usize, s: i64, mut f: impl FnMut(i64, i64, i64)) {
    debug_assert!(s >= 1);
    let b1 = isqrt(s);
    for h1 in -b1..=b1 {
        let r1 = s - h1 * h1;
        if d == 2 {
            if let Some(h2) = exact_sqrt(r1) {
                if h2 == 0 {
                    f(h1, 0, 0);
                } else {
                    f(h1, -h2, 0);
                    f(h1, h2, 0);
                }
            }
        } else {
            let b2 = isqrt(r1);
            for h2 in -b2..=b2 {
                let r2 = r1 - h2 * h2;
                if let Some(h3) = exact_sqrt(r2) {
                    if h3 == 0 {
                        f(h1, h2, 0);
                    } else {
                        f(h1, h2, -h3);
                        f(h1, h2, h3);
                    }
                }
            }
        }
    }
}

/// All lattice points with `|h|² = s` exactly, in lexicographic order.
/// `s ≥ 1`. Used by the shell-major kernel summation.
pub fn shell(d: usize, s: i64) -> Vec<LatticePoint> {
    let mut out = Vec::new();
    for_each_shell_point(d, s, |h1, h2, h3| {
        out.push(if d == 2 {
            LatticePoint::new2(h1, h2)
        } else {
            LatticePoint::new3(h1, h2, h3)
        });
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflection_negates_one_coordinate() {
        let k = LatticePoint::new3(1, 2, 3);
        assert_eq!(k.reflect(2).unwrap(), LatticePoint::new3(1, 2, -3));
        assert_eq!(k.reflect(0).unwrap(), LatticePoint::new3(-1, 2, 3));
        assert!(k.reflect(3).is_err());
    }

    #[test]
    fn permutation_swaps_coordinates() {
        let k = LatticePoint::new3(1, 2, 3);
        // (k2, k1, k3)
        assert_eq!(k.permute(&[1, 0, 2]).unwrap(), LatticePoint::new3(2, 1, 3));
        assert!(k.permute(&[0, 0, 2]).is_err());
    }

    #[test]
    fn canonical_sorts_absolute_values() {
        let k = LatticePoint::new3(-2, 0, 1);
        assert_eq!(k.canonical(), LatticePoint::new3(0, 1, 2));
        // Canonicalization is invariant under the group action.
        let g = k.reflect(0).unwrap().permute(&[2, 0, 1]).unwrap();
        assert_eq!(g.canonical(), k.canonical());
    }

    #[test]
    fn exact_sqrt_detects_squares_only() {
        for n in 0..5000i64 {
            let r = exact_sqrt(n);
            let t = isqrt(n);
            if t * t == n {
                assert_eq!(r, Some(t), "n = {n}");
            } else {
                assert_eq!(r, None, "n = {n}");
            }
        }
        assert_eq!(exact_sqrt(1_000_003 * 1_000_003), Some(1_000_003));
        assert_eq!(exact_sqrt(1_000_003 * 1_000_003 + 1), None);
    }

    #[test]
    fn isqrt_exact_on_squares_and_neighbors() {
        for r in 0..2000i64 {
            let s = r * r;
            assert_eq!(isqrt(s), r);
            if s > 0 {
                assert_eq!(isqrt(s - 1), r - 1);
            }
            assert_eq!(isqrt(s + 1), if (r + 1) * (r + 1) <= s + 1 { r + 1 } else { r });
        }
    }

    #[test]
    fn ball_counts_match_direct_enumeration() {
        // d = 3, |k| <= 1: the 6 unit vectors.
        assert_eq!(ball(3, 1).len(), 6);
        // d = 2, |k| <= 2: integer points in the closed disk of radius 2,
        // minus the origin: 13 - 1 = 12.
        assert_eq!(ball(2, 2).len(), 12);
        // Lexicographic order and no duplicates.
        let b = ball(3, 4);
        for w in b.windows(2) {
            assert!(w[0] < w[1]);
        }
    }

    #[test]
    fn shells_partition_the_ball() {
        for d in [2usize, 3] {
            let m = 6u32;
            let mut from_shells: Vec<LatticePoint> = Vec::new();
            for s in 1..=((m * m) as i64) {
                from_shells.extend(shell(d, s));
            }
            from_shells.sort();
            let mut direct = ball(d, m);
            direct.sort();
            assert_eq!(from_shells, direct);
        }
    }

    #[test]
    fn shell_points_have_the_right_norm() {
        for s in 1..200i64 {
            for p in shell(3, s) {
                assert_eq!(p.norm_sq(), s);
            }
            for p in shell(2, s) {
                assert_eq!(p.norm_sq(), s);
            }
        }
    }

    #[test]
    fn lex_positivity_splits_pairs() {
        for p in ball(3, 3) {
            assert_ne!(p.is_lex_positive(), p.neg().is_lex_positive());
        }
    }
}
