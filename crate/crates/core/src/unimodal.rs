//! Even/unimodal structure of lattice functions and its preservation under
//! exact discrete convolution.
//!
//! A function `f : Z → [0,∞)` is *even* if `f(-k) = f(k)` and *unimodal* if it
//! is nondecreasing on `{…,-2,-1,0}` and nonincreasing on `{0,1,2,…}` — the
//! peak sits at the origin. On `Z^d` both notions are applied one variable at
//! a time (freeze all other coordinates, look at the resulting line), and `f`
//! is *symmetric* if invariant under coordinate permutations. All three
//! classes are closed under convolution of nonnegative functions; this is the
//! combinatorial backbone of the kernel sup certificate's monotonicity
//! argument, and the randomized property suite exercises it directly through
//! the exact convolutions and predicate checks in this module.
//!
//! The predicates compare floating-point values with a tiny relative slack:
//! convolution sums depend on accumulation order at the last-ulp level, and
//! demanding bitwise equality would make mathematically exact symmetries flap.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Relative slack used by all structure predicates. Genuine violations in the
/// property suite are many orders of magnitude larger.
pub const CHECK_REL_TOL: f64 = 1e-12;

fn close_ge(a: f64, b: f64) -> bool {
    // a ≥ b up to relative slack.
    a >= b - CHECK_REL_TOL * a.abs().max(b.abs()).max(1.0)
}

fn close_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= CHECK_REL_TOL * a.abs().max(b.abs()).max(1.0)
}

/// A finitely supported function `Z → R`, stored as the values on
/// `[min, min + len)`; zero outside.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence1 {
    min: i64,
    values: Vec<f64>,
}

impl Sequence1 {
    /// Builds a sequence from its values on `min, min+1, …`. Values must be
    /// finite; signs are unrestricted here (the convolution operations insist
    /// on nonnegativity separately, the checks do not need it).
    pub fn new(min: i64, values: Vec<f64>) -> Result<Self> {
        for &v in &values {
            if !v.is_finite() {
                return Err(Error::NotFinite {
                    name: "sequence value",
                    value: v,
                });
            }
        }
        Ok(Sequence1 { min, values })
    }

    /// The identity element for convolution: 1 at the origin.
    pub fn delta() -> Self {
        Sequence1 {
            min: 0,
            values: vec![1.0],
        }
    }

    pub fn min_index(&self) -> i64 {
        self.min
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at `i`, zero outside the stored window.
    pub fn value(&self, i: i64) -> f64 {
        if i < self.min || i >= self.min + self.values.len() as i64 {
            0.0
        } else {
            self.values[(i - self.min) as usize]
        }
    }

    fn max_index(&self) -> i64 {
        self.min + self.values.len() as i64 - 1
    }

    /// `f(-k) = f(k)` for all `k`.
    pub fn is_even(&self) -> bool {
        let b = self.max_index().abs().max(self.min.abs());
        (0..=b).all(|i| close_eq(self.value(i), self.value(-i)))
    }

    /// Nondecreasing up to the origin, nonincreasing after it (the implicit
    /// zeros outside the window participate, so negative values or an
    /// off-origin peak both fail).
    pub fn is_unimodal(&self) -> bool {
        let b = self.max_index().abs().max(self.min.abs()) + 1;
        for i in 0..b {
            if !close_ge(self.value(i), self.value(i + 1)) {
                return false;
            }
            if !close_ge(self.value(-i), self.value(-i - 1)) {
                return false;
            }
        }
        true
    }
}

/// Exact convolution `(p ∗ q)(k) = Σ_h p(h) q(k-h)` of finitely supported
/// nonnegative sequences.
pub fn convolve_1d(p: &Sequence1, q: &Sequence1) -> Result<Sequence1> {
    for (name, s) in [("p", p), ("q", q)] {
        if let Some(&v) = s.values.iter().find(|v| **v < 0.0) {
            return Err(Error::Negative {
                name: if name == "p" {
                    "convolution input p"
                } else {
                    "convolution input q"
                },
                value: v,
            });
        }
    }
    if p.is_empty() || q.is_empty() {
        return Ok(Sequence1 {
            min: 0,
            values: Vec::new(),
        });
    }
    let mut values = vec![0.0; p.len() + q.len() - 1];
    for (i, &a) in p.values.iter().enumerate() {
        for (j, &b) in q.values.iter().enumerate() {
            values[i + j] += a * b;
        }
    }
    Ok(Sequence1 {
        min: p.min + q.min,
        values,
    })
}

/// Values of a function on the box `[-m, m]^d` (zero outside), `d ∈ {2, 3}`.
/// For `d = 2` the third coordinate is frozen to 0, as everywhere in the
/// crate.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    d: usize,
    m: i64,
    values: Vec<f64>,
}

impl Grid {
    /// Fills the box by evaluating `f` at every point.
    pub fn from_fn(d: usize, m: u32, mut f: impl FnMut([i64; 3]) -> f64) -> Result<Self> {
        if d != 2 && d != 3 {
            return Err(Error::UnsupportedDimension { d });
        }
        let m = m as i64;
        let side = (2 * m + 1) as usize;
        let mut values = Vec::with_capacity(side.pow(d as u32));
        let r3 = |d: usize| if d == 2 { 0..=0 } else { -m..=m };
        for k1 in -m..=m {
            for k2 in -m..=m {
                for k3 in r3(d) {
                    let v = f([k1, k2, k3]);
                    if !v.is_finite() {
                        return Err(Error::NotFinite {
                            name: "grid value",
                            value: v,
                        });
                    }
                    values.push(v);
                }
            }
        }
        Ok(Grid { d, m, values })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Box half-width.
    pub fn half_width(&self) -> i64 {
        self.m
    }

    fn index(&self, k: [i64; 3]) -> usize {
        let side = (2 * self.m + 1) as usize;
        let mut idx = (k[0] + self.m) as usize * side + (k[1] + self.m) as usize;
        if self.d == 3 {
            idx = idx * side + (k[2] + self.m) as usize;
        }
        idx
    }

    fn in_box(&self, k: [i64; 3]) -> bool {
        let inside =
            k[0].abs() <= self.m && k[1].abs() <= self.m && (self.d == 3 || k[2] == 0);
        inside && (self.d == 2 || k[2].abs() <= self.m)
    }

    /// Value at `k`; zero outside the box.
    pub fn value(&self, k: [i64; 3]) -> f64 {
        if self.in_box(k) {
            self.values[self.index(k)]
        } else {
            0.0
        }
    }

    /// Overwrites one entry (used by tests to break a symmetry deliberately).
    pub fn set(&mut self, k: [i64; 3], v: f64) -> Result<()> {
        if !self.in_box(k) {
            return Err(Error::InvalidLatticePoint {
                context: format!("({}, {}, {}) outside the grid box", k[0], k[1], k[2]),
            });
        }
        let idx = self.index(k);
        self.values[idx] = v;
        Ok(())
    }

    fn for_each_point(&self, mut f: impl FnMut([i64; 3])) {
        let m = self.m;
        for k1 in -m..=m {
            for k2 in -m..=m {
                if self.d == 2 {
                    f([k1, k2, 0]);
                } else {
                    for k3 in -m..=m {
                        f([k1, k2, k3]);
                    }
                }
            }
        }
    }
}

/// Exact convolution of two grids over a common dimension; the output box is
/// the sum of the input boxes, so no product mass is lost.
pub fn convolve_grid(p: &Grid, q: &Grid) -> Result<Grid> {
    if p.d != q.d {
        return Err(Error::Incompatible {
            context: format!("grid dimensions {} vs {}", p.d, q.d),
        });
    }
    for (name, g) in [("p", p), ("q", q)] {
        if let Some(&v) = g.values.iter().find(|v| **v < 0.0) {
            return Err(Error::Negative {
                name: if name == "p" {
                    "convolution input p"
                } else {
                    "convolution input q"
                },
                value: v,
            });
        }
    }
    let m_out = (p.m + q.m) as u32;
    Grid::from_fn(p.d, m_out, |k| {
        let mut s = 0.0;
        p.for_each_point(|h| {
            let ph = p.value(h);
            if ph != 0.0 {
                s += ph * q.value([k[0] - h[0], k[1] - h[1], k[2] - h[2]]);
            }
        });
        s
    })
}

/// True if `f` is even in each variable *and* unimodal in each variable:
/// every axis-parallel line through the grid rises to the origin plane and
/// falls after it, and reflections of single coordinates leave `f` unchanged.
pub fn check_even_unimodal(f: &Grid) -> bool {
    let axes = f.d;
    let mut ok = true;
    f.for_each_point(|k| {
        for r in 0..axes {
            let mut img = k;
            img[r] = -img[r];
            if !close_eq(f.value(k), f.value(img)) {
                ok = false;
            }
            // Unimodality along axis r: compare with the neighbor one step
            // away from the origin; the implicit zero beyond the edge is
            // covered by letting value() vanish outside the box.
            let mut next = k;
            next[r] += if k[r] >= 0 { 1 } else { -1 };
            if !close_ge(f.value(k), f.value(next)) {
                ok = false;
            }
            // Edge toward the origin from outside on the negative side.
            if k[r] == -f.half_width() && !close_ge(f.value(k), 0.0) {
                ok = false;
            }
        }
    });
    ok
}

/// True if `f` is invariant under all coordinate permutations (checked on the
/// generating transpositions).
pub fn check_symmetric(f: &Grid) -> bool {
    let mut ok = true;
    f.for_each_point(|k| {
        let swap01 = [k[1], k[0], k[2]];
        if !close_eq(f.value(k), f.value(swap01)) {
            ok = false;
        }
        if f.d == 3 {
            let swap12 = [k[0], k[2], k[1]];
            if !close_eq(f.value(k), f.value(swap12)) {
                ok = false;
            }
        }
    });
    ok
}

/// Seeded random even unimodal sequence supported on `[-half_width, half_width]`:
/// nonnegative values, sorted decreasing from the origin outward.
pub fn random_even_unimodal_sequence(seed: u64, half_width: u32) -> Sequence1 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut arm: Vec<f64> = (0..=half_width).map(|_| rng.gen::<f64>()).collect();
    arm.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut values = Vec::with_capacity(2 * half_width as usize + 1);
    for i in (1..=half_width as usize).rev() {
        values.push(arm[i]);
    }
    values.extend_from_slice(&arm);
    Sequence1 {
        min: -(half_width as i64),
        values,
    }
}

/// Seeded random grid that is even and unimodal in each variable; with
/// `symmetric`, also permutation-invariant. Built by drawing positive noise
/// on the nonnegative corner, enforcing coordinatewise monotonicity with a
/// running maximum toward the origin, optionally maximizing over coordinate
/// permutations, and reflecting evenly.
pub fn random_even_unimodal_grid(seed: u64, d: usize, m: u32, symmetric: bool) -> Result<Grid> {
    if d != 2 && d != 3 {
        return Err(Error::UnsupportedDimension { d });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mi = m as i64;
    let side = (m + 1) as usize;
    let cells = side.pow(d as u32);
    let mut g: Vec<f64> = (0..cells).map(|_| rng.gen::<f64>()).collect();
    let idx = |k: [i64; 3]| -> usize {
        let mut i = k[0] as usize * side + k[1] as usize;
        if d == 3 {
            i = i * side + k[2] as usize;
        }
        i
    };
    // Backward running maximum along each axis makes g nonincreasing in
    // every coordinate on the corner [0, m]^d.
    let each = |f: &mut dyn FnMut([i64; 3])| {
        for a in 0..=mi {
            for b in 0..=mi {
                if d == 2 {
                    f([a, b, 0]);
                } else {
                    for c in 0..=mi {
                        f([a, b, c]);
                    }
                }
            }
        }
    };
    for r in 0..d {
        for step in (0..mi).rev() {
            each(&mut |k: [i64; 3]| {
                if k[r] == step {
                    let mut up = k;
                    up[r] += 1;
                    let v = g[idx(up)];
                    let i = idx(k);
                    if g[i] < v {
                        g[i] = v;
                    }
                }
            });
        }
    }
    if symmetric {
        let mut sym = g.clone();
        each(&mut |k: [i64; 3]| {
            let perms: &[[usize; 3]] = if d == 2 {
                &[[0, 1, 2], [1, 0, 2]]
            } else {
                &[
                    [0, 1, 2],
                    [0, 2, 1],
                    [1, 0, 2],
                    [1, 2, 0],
                    [2, 0, 1],
                    [2, 1, 0],
                ]
            };
            let mut best = f64::NEG_INFINITY;
            for p in perms {
                best = best.max(g[idx([k[p[0]], k[p[1]], k[p[2]]])]);
            }
            sym[idx(k)] = best;
        });
        g = sym;
    }
    Grid::from_fn(d, m, |k| g[idx([k[0].abs(), k[1].abs(), k[2].abs()])])
}
