//! Truncated Fourier representations of zero-mean fields on the torus.
//!
//! A vector field is a finite map `k ↦ v_k ∈ C^d` over nonzero lattice modes
//! `0 < |k| ≤ M` (Euclidean cutoff) subject to
//!
//! * zero mean — no `k = 0` entry,
//! * reality — `v_{-k} = conj(v_k)` for every stored mode,
//! * optionally divergence-freeness — `k · v_k = 0`.
//!
//! Both signs of every mode are stored; the validator enforces the pairing.
//! Construction helpers that build a field from its lexicographically positive
//! half mirror the conjugate modes explicitly, which keeps the reality
//! invariant *exact* in floating point (conjugation commutes bitwise with the
//! arithmetic used here).
//!
//! Coefficients are held in a `BTreeMap` ordered lexicographically by
//! wavevector, so every sum over modes has a deterministic order regardless of
//! thread count or insertion history.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::lattice::LatticePoint;
use crate::params::SpaceParams;
use crate::sum::NeumaierSum;
use crate::{Error, Result};

/// Schema version of the field JSON documents.
pub const FIELD_SCHEMA_VERSION: u32 = 1;

/// Relative tolerance for the reality check when validating external data.
/// Fields built by this crate satisfy the pairing exactly.
const REALITY_REL_TOL: f64 = 1e-12;

/// Relative tolerance (against `|k||v_k|`) for the divergence-free check.
const DIV_REL_TOL: f64 = 1e-10;

/// Coefficient vector of one mode. The third component is zero when `d = 2`.
pub type CoeffVector = [Complex64; 3];

fn coeff_norm_sq(c: &CoeffVector) -> f64 {
    c[0].norm_sqr() + c[1].norm_sqr() + c[2].norm_sqr()
}

fn coeff_conj(c: &CoeffVector) -> CoeffVector {
    [c[0].conj(), c[1].conj(), c[2].conj()]
}

/// `|k|^{2n}` as a function of the exact integer `s = |k|²`. Integer exponents
/// use exact integer powers; everything else goes through `powf`.
pub(crate) fn shell_weight(s: i64, n: f64) -> f64 {
    if n == 0.0 {
        1.0
    } else if n.fract() == 0.0 && n.abs() <= 128.0 {
        (s as f64).powi(n as i32)
    } else {
        (s as f64).powf(n)
    }
}

/// A zero-mean vector field given by finitely many Fourier coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierVectorField {
    params: SpaceParams,
    cutoff: u32,
    divergence_free: bool,
    coeffs: BTreeMap<LatticePoint, CoeffVector>,
}

impl FourierVectorField {
    /// The zero field (vacuously divergence-free).
    pub fn zero(params: SpaceParams, cutoff: u32) -> Self {
        FourierVectorField {
            params,
            cutoff,
            divergence_free: true,
            coeffs: BTreeMap::new(),
        }
    }

    /// Builds a field from explicit modes (both signs present) and validates
    /// every structural invariant.
    pub fn from_modes(
        params: SpaceParams,
        cutoff: u32,
        divergence_free: bool,
        modes: impl IntoIterator<Item = (LatticePoint, CoeffVector)>,
    ) -> Result<Self> {
        let mut coeffs = BTreeMap::new();
        for (k, c) in modes {
            if coeffs.insert(k, c).is_some() {
                return Err(Error::InvalidField {
                    context: format!("duplicate mode at k = {k}"),
                });
            }
        }
        let field = FourierVectorField {
            params,
            cutoff,
            divergence_free,
            coeffs,
        };
        field.validate()?;
        Ok(field)
    }

    /// Builds a field from its lexicographically positive half; conjugate
    /// modes are mirrored exactly. Callers guarantee cutoff and (if flagged)
    /// divergence-freeness; both are still checked in debug builds.
    pub(crate) fn from_half_modes(
        params: SpaceParams,
        cutoff: u32,
        divergence_free: bool,
        half: impl IntoIterator<Item = (LatticePoint, CoeffVector)>,
    ) -> Self {
        let mut coeffs = BTreeMap::new();
        for (k, c) in half {
            debug_assert!(k.is_lex_positive());
            coeffs.insert(k, c);
            coeffs.insert(k.neg(), coeff_conj(&c));
        }
        let field = FourierVectorField {
            params,
            cutoff,
            divergence_free,
            coeffs,
        };
        debug_assert!(
            field.validate().is_ok(),
            "from_half_modes invariant: {:?}",
            field.validate().err()
        );
        field
    }

    fn validate(&self) -> Result<()> {
        let d = self.params.d();
        let m_sq = (self.cutoff as i64) * (self.cutoff as i64);
        for (k, c) in &self.coeffs {
            if k.is_zero() {
                return Err(Error::InvalidField {
                    context: "mode at k = 0 violates the zero-mean invariant".to_string(),
                });
            }
            if d == 2 && (k.coords()[2] != 0 || c[2] != Complex64::new(0.0, 0.0)) {
                return Err(Error::InvalidField {
                    context: format!("mode at k = {k} has a third component but d = 2"),
                });
            }
            if k.norm_sq() > m_sq {
                return Err(Error::InvalidField {
                    context: format!(
                        "mode at k = {k} lies outside the cutoff ball |k| <= {}",
                        self.cutoff
                    ),
                });
            }
            for z in c {
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(Error::InvalidField {
                        context: format!("non-finite coefficient at k = {k}"),
                    });
                }
            }
            let conj = coeff_conj(c);
            match self.coeffs.get(&k.neg()) {
                None => {
                    return Err(Error::InvalidField {
                        context: format!("mode at k = {k} has no conjugate partner at -k"),
                    });
                }
                Some(cm) => {
                    let scale = coeff_norm_sq(c).sqrt().max(1.0);
                    let dev = (0..3)
                        .map(|i| (cm[i] - conj[i]).norm())
                        .fold(0.0f64, f64::max);
                    if dev > REALITY_REL_TOL * scale {
                        return Err(Error::InvalidField {
                            context: format!(
                                "reality violated at k = {k}: |v(-k) - conj(v(k))| = {dev:e}"
                            ),
                        });
                    }
                }
            }
            if self.divergence_free {
                let kc = k.coords();
                let dot = c[0] * kc[0] as f64 + c[1] * kc[1] as f64 + c[2] * kc[2] as f64;
                let scale = k.norm() * coeff_norm_sq(c).sqrt();
                if dot.norm() > DIV_REL_TOL * scale {
                    return Err(Error::InvalidField {
                        context: format!(
                            "divergence-free flag violated at k = {k}: |k.v| = {:e}, scale = {scale:e}",
                            dot.norm()
                        ),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn params(&self) -> SpaceParams {
        self.params
    }

    pub fn cutoff(&self) -> u32 {
        self.cutoff
    }

    pub fn is_divergence_free(&self) -> bool {
        self.divergence_free
    }

    /// Number of stored modes (both signs counted).
    pub fn num_modes(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.values().all(|c| coeff_norm_sq(c) == 0.0)
    }

    /// Coefficient at `k`; absent modes are zero.
    pub fn coeff(&self, k: &LatticePoint) -> CoeffVector {
        self.coeffs
            .get(k)
            .copied()
            .unwrap_or([Complex64::new(0.0, 0.0); 3])
    }

    /// Iterates stored modes in lexicographic wavevector order.
    pub fn modes(&self) -> impl Iterator<Item = (&LatticePoint, &CoeffVector)> {
        self.coeffs.iter()
    }

    /// Zero-mean Sobolev norm `‖v‖_n = sqrt(Σ |k|^{2n} |v_k|²)`.
    ///
    /// The Parseval sum runs over stored modes in lexicographic order with
    /// compensated accumulation, so the value is deterministic.
    pub fn sobolev_norm(&self, n: f64) -> f64 {
        let mut acc = NeumaierSum::new();
        for (k, c) in &self.coeffs {
            acc.add(shell_weight(k.norm_sq(), n) * coeff_norm_sq(c));
        }
        acc.value().max(0.0).sqrt()
    }

    /// `L²` norm, i.e. `sobolev_norm(0)`.
    pub fn l2_norm(&self) -> f64 {
        self.sobolev_norm(0.0)
    }

    /// `L²` inner product `Σ_k v_k · conj(w_k)`.
    pub fn l2_inner(&self, other: &Self) -> Result<Complex64> {
        self.check_compatible(other)?;
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, c) in &self.coeffs {
            let o = other.coeff(k);
            acc += c[0] * o[0].conj() + c[1] * o[1].conj() + c[2] * o[2].conj();
        }
        Ok(acc)
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.params != other.params {
            return Err(Error::Incompatible {
                context: format!(
                    "space parameters differ: (d={}, omega={}) vs (d={}, omega={})",
                    self.params.d(),
                    self.params.omega(),
                    other.params.d(),
                    other.params.omega()
                ),
            });
        }
        Ok(())
    }

    /// Applies a real mode-wise multiplier depending only on `s = |k|²`.
    /// The equal factors at `±k` preserve the reality pairing exactly.
    pub fn scale_by_shell(&self, f: impl Fn(i64) -> f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .map(|(k, c)| {
                let w = f(k.norm_sq());
                (*k, [c[0] * w, c[1] * w, c[2] * w])
            })
            .collect();
        FourierVectorField {
            params: self.params,
            cutoff: self.cutoff,
            divergence_free: self.divergence_free,
            coeffs,
        }
    }

    /// `√(−Δ)^n v`: coefficient-wise multiplication by `|k|^n`.
    pub fn fractional_laplacian(&self, n: f64) -> Self {
        self.scale_by_shell(|s| shell_weight(s, n / 2.0))
    }

    /// Scalar multiple `alpha · v`.
    pub fn scaled(&self, alpha: f64) -> Self {
        self.scale_by_shell(|_| alpha)
    }

    /// `v + alpha · w`. The result's cutoff is the larger of the two; it is
    /// flagged divergence-free only if both inputs are.
    pub fn add_scaled(&self, other: &Self, alpha: f64) -> Result<Self> {
        self.check_compatible(other)?;
        let mut coeffs = self.coeffs.clone();
        for (k, c) in &other.coeffs {
            let e = coeffs.entry(*k).or_insert([Complex64::new(0.0, 0.0); 3]);
            for i in 0..3 {
                e[i] += c[i] * alpha;
            }
        }
        Ok(FourierVectorField {
            params: self.params,
            cutoff: self.cutoff.max(other.cutoff),
            divergence_free: self.divergence_free && other.divergence_free,
            coeffs,
        })
    }

    /// Pointwise difference `v − w`.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add_scaled(other, -1.0)
    }

    /// Leray projection: `(𝔏v)_k = v_k − (k·v_k / |k|²) k`, the orthogonal
    /// projection of each coefficient onto the plane normal to `k`.
    pub fn leray_project(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .map(|(k, c)| (*k, leray_coeff(k, c)))
            .collect();
        FourierVectorField {
            params: self.params,
            cutoff: self.cutoff,
            divergence_free: true,
            coeffs,
        }
    }

    /// The divergence `div v = i Σ (k·v_k) e_k` as a scalar coefficient map.
    pub fn divergence(&self) -> FourierScalarField {
        let coeffs = self
            .coeffs
            .iter()
            .map(|(k, c)| {
                let kc = k.coords();
                let dot = c[0] * kc[0] as f64 + c[1] * kc[1] as f64 + c[2] * kc[2] as f64;
                (*k, Complex64::new(0.0, 1.0) * dot)
            })
            .collect();
        FourierScalarField {
            params: self.params,
            cutoff: self.cutoff,
            coeffs,
        }
    }

    /// Largest divergence coefficient `max_k |k·v_k|`; a diagnostic for the
    /// divergence-free invariant.
    pub fn divergence_defect(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|(k, c)| {
                let kc = k.coords();
                (c[0] * kc[0] as f64 + c[1] * kc[1] as f64 + c[2] * kc[2] as f64).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Curl `(curl v)_k = i k ∧ v_k`; only defined for `d = 3`.
    pub fn curl(&self) -> Result<Self> {
        if self.params.d() != 3 {
            return Err(Error::UnsupportedDimension { d: self.params.d() });
        }
        let i = Complex64::new(0.0, 1.0);
        let coeffs = self
            .coeffs
            .iter()
            .map(|(k, c)| {
                let [k1, k2, k3] = k.coords().map(|x| x as f64);
                let w = [
                    i * (c[2] * k2 - c[1] * k3),
                    i * (c[0] * k3 - c[2] * k1),
                    i * (c[1] * k1 - c[0] * k2),
                ];
                (*k, w)
            })
            .collect();
        Ok(FourierVectorField {
            params: self.params,
            cutoff: self.cutoff,
            // k · (k ∧ v_k) = 0, so the curl is always divergence-free.
            divergence_free: true,
            coeffs,
        })
    }

    /// Galerkin projection `π_m`: drops all modes with `|k| > m`.
    pub fn truncate(&self, m: u32) -> Self {
        let m_sq = (m as i64) * (m as i64);
        let coeffs = self
            .coeffs
            .iter()
            .filter(|(k, _)| k.norm_sq() <= m_sq)
            .map(|(k, c)| (*k, *c))
            .collect();
        FourierVectorField {
            params: self.params,
            cutoff: m,
            divergence_free: self.divergence_free,
            coeffs,
        }
    }

    /// Complement of the Galerkin projection: modes with `|k| > m` only.
    pub fn tail_beyond(&self, m: u32) -> Self {
        let m_sq = (m as i64) * (m as i64);
        let coeffs = self
            .coeffs
            .iter()
            .filter(|(k, _)| k.norm_sq() > m_sq)
            .map(|(k, c)| (*k, *c))
            .collect();
        FourierVectorField {
            params: self.params,
            cutoff: self.cutoff,
            divergence_free: self.divergence_free,
            coeffs,
        }
    }

    /// Drops modes whose coefficient magnitude is at most
    /// `rel_tol · ‖v‖_{L²}`. The threshold depends on `|v_k|`, which is equal
    /// at `±k`, so conjugate pairs are kept or dropped together and reality is
    /// preserved. `rel_tol = 0` keeps everything.
    pub fn pruned(&self, rel_tol: f64) -> Self {
        if rel_tol <= 0.0 {
            return self.clone();
        }
        let thr_sq = (rel_tol * self.l2_norm()).powi(2);
        let coeffs = self
            .coeffs
            .iter()
            .filter(|(_, c)| coeff_norm_sq(c) > thr_sq)
            .map(|(k, c)| (*k, *c))
            .collect();
        FourierVectorField {
            params: self.params,
            cutoff: self.cutoff,
            divergence_free: self.divergence_free,
            coeffs,
        }
    }

    /// Re-labels the field with a larger cutoff (e.g. to use an `M = 4` datum
    /// in an `M = 16` solve). The modes are unchanged.
    pub fn embedded(&self, cutoff: u32) -> Result<Self> {
        if cutoff < self.cutoff {
            return Err(Error::Incompatible {
                context: format!(
                    "cannot embed a cutoff-{} field into the smaller ball {}",
                    self.cutoff, cutoff
                ),
            });
        }
        let mut f = self.clone();
        f.cutoff = cutoff;
        Ok(f)
    }

    /// Reproducible pseudo-random divergence-free field with
    /// `‖·‖₁ = target_h1_norm` (up to one floating-point scaling).
    ///
    /// Per lexicographically positive mode, `2d` standard normal draws form a
    /// complex vector, damped by `1/|k|²` for a mildly decaying spectrum, then
    /// Leray-projected; the conjugate mode is mirrored. A fixed draw order
    /// (lexicographic) and a counter-based generator make the output a pure
    /// function of the seed.
    pub fn random(
        params: SpaceParams,
        cutoff: u32,
        seed: u64,
        target_h1_norm: f64,
    ) -> Result<Self> {
        if cutoff < 1 {
            return Err(Error::NotPositive {
                name: "cutoff",
                value: cutoff as f64,
            });
        }
        if !(target_h1_norm >= 0.0) {
            return Err(Error::NotPositive {
                name: "target_h1_norm",
                value: target_h1_norm,
            });
        }
        let d = params.d();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut half = Vec::new();
        for k in crate::lattice::ball(d, cutoff) {
            if !k.is_lex_positive() {
                continue;
            }
            let damp = 1.0 / k.norm_sq() as f64;
            let mut c = [Complex64::new(0.0, 0.0); 3];
            for ci in c.iter_mut().take(d) {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                *ci = Complex64::new(re * damp, im * damp);
            }
            half.push((k, leray_coeff(&k, &c)));
        }
        let raw = Self::from_half_modes(params, cutoff, true, half);
        let h1 = raw.sobolev_norm(1.0);
        if target_h1_norm == 0.0 {
            return Ok(Self::zero(params, cutoff));
        }
        if h1 == 0.0 {
            return Err(Error::Degenerate {
                context: "random field degenerated to zero before rescaling".to_string(),
            });
        }
        Ok(raw.scaled(target_h1_norm / h1))
    }

    /// Serializes to the versioned JSON document format.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("field serialization cannot fail")
    }

    /// Loads and validates a field from its JSON document.
    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let doc: FieldDoc = serde_json::from_value(value.clone())?;
        Self::from_doc(doc)
    }

    fn from_doc(doc: FieldDoc) -> Result<Self> {
        if doc.version != FIELD_SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "unsupported field schema version {} (expected {FIELD_SCHEMA_VERSION})",
                doc.version
            )));
        }
        let params = SpaceParams::new(doc.d, doc.omega)?;
        let mut modes = Vec::with_capacity(doc.modes.len());
        for m in &doc.modes {
            let k = LatticePoint::from_coords(&m.k, doc.d)
                .map_err(|e| Error::Schema(format!("bad mode wavevector: {e}")))?;
            if m.re.len() != doc.d || m.im.len() != doc.d {
                return Err(Error::Schema(format!(
                    "mode at k = {k}: expected {} components, got re: {}, im: {}",
                    doc.d,
                    m.re.len(),
                    m.im.len()
                )));
            }
            let mut c = [Complex64::new(0.0, 0.0); 3];
            for i in 0..doc.d {
                c[i] = Complex64::new(m.re[i], m.im[i]);
            }
            modes.push((k, c));
        }
        Self::from_modes(params, doc.m, doc.divergence_free, modes)
    }

    fn to_doc(&self) -> FieldDoc {
        let d = self.params.d();
        FieldDoc {
            version: FIELD_SCHEMA_VERSION,
            d,
            omega: self.params.omega(),
            m: self.cutoff,
            divergence_free: self.divergence_free,
            modes: self
                .coeffs
                .iter()
                .map(|(k, c)| ModeDoc {
                    k: k.coords_vec(d),
                    re: c[..d].iter().map(|z| z.re).collect(),
                    im: c[..d].iter().map(|z| z.im).collect(),
                })
                .collect(),
        }
    }
}

impl Serialize for FourierVectorField {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_doc().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for FourierVectorField {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let doc = FieldDoc::deserialize(deserializer)?;
        Self::from_doc(doc).map_err(D::Error::custom)
    }
}

/// One Leray-projected coefficient: `c − (k·c/|k|²) k`.
///
/// The projection is applied twice (one step of iterative refinement). A
/// single pass leaves a residual `k·b ≈ ε |k| ‖c‖`, which is fine for generic
/// coefficients but fails the *relative* divergence check when the projected
/// value is itself at rounding level — e.g. a symmetric convolution output
/// that cancels exactly. The second pass orthogonalizes the noise too.
pub(crate) fn leray_coeff(k: &LatticePoint, c: &CoeffVector) -> CoeffVector {
    let kc = k.coords();
    let n = [kc[0] as f64, kc[1] as f64, kc[2] as f64];
    let inv_sq = 1.0 / k.norm_sq() as f64;
    let mut b = *c;
    for _ in 0..2 {
        let f = (b[0] * n[0] + b[1] * n[1] + b[2] * n[2]) * inv_sq;
        b = [b[0] - f * n[0], b[1] - f * n[1], b[2] - f * n[2]];
    }
    b
}

#[derive(Serialize, Deserialize)]
struct FieldDoc {
    version: u32,
    d: usize,
    omega: f64,
    m: u32,
    divergence_free: bool,
    modes: Vec<ModeDoc>,
}

#[derive(Serialize, Deserialize)]
struct ModeDoc {
    k: Vec<i64>,
    re: Vec<f64>,
    im: Vec<f64>,
}

/// A zero-mean scalar field: finite map `k ↦ z_k ∈ C` with the same reality
/// and cutoff conventions as the vector case. Used for divergences and for
/// the scalar multiplication estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierScalarField {
    params: SpaceParams,
    cutoff: u32,
    coeffs: BTreeMap<LatticePoint, Complex64>,
}

impl FourierScalarField {
    pub fn zero(params: SpaceParams, cutoff: u32) -> Self {
        FourierScalarField {
            params,
            cutoff,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn from_modes(
        params: SpaceParams,
        cutoff: u32,
        modes: impl IntoIterator<Item = (LatticePoint, Complex64)>,
    ) -> Result<Self> {
        let mut coeffs = BTreeMap::new();
        for (k, z) in modes {
            if coeffs.insert(k, z).is_some() {
                return Err(Error::InvalidField {
                    context: format!("duplicate mode at k = {k}"),
                });
            }
        }
        let f = FourierScalarField {
            params,
            cutoff,
            coeffs,
        };
        f.validate()?;
        Ok(f)
    }

    fn validate(&self) -> Result<()> {
        let m_sq = (self.cutoff as i64) * (self.cutoff as i64);
        for (k, z) in &self.coeffs {
            if k.is_zero() {
                return Err(Error::InvalidField {
                    context: "scalar mode at k = 0 violates the zero-mean invariant".to_string(),
                });
            }
            if self.params.d() == 2 && k.coords()[2] != 0 {
                return Err(Error::InvalidField {
                    context: format!("scalar mode at k = {k} has a third component but d = 2"),
                });
            }
            if k.norm_sq() > m_sq {
                return Err(Error::InvalidField {
                    context: format!("scalar mode at k = {k} outside cutoff {}", self.cutoff),
                });
            }
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::InvalidField {
                    context: format!("non-finite scalar coefficient at k = {k}"),
                });
            }
            match self.coeffs.get(&k.neg()) {
                None => {
                    return Err(Error::InvalidField {
                        context: format!("scalar mode at k = {k} has no conjugate partner"),
                    });
                }
                Some(zm) => {
                    if (zm - z.conj()).norm() > REALITY_REL_TOL * z.norm().max(1.0) {
                        return Err(Error::InvalidField {
                            context: format!("scalar reality violated at k = {k}"),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn params(&self) -> SpaceParams {
        self.params
    }

    pub fn cutoff(&self) -> u32 {
        self.cutoff
    }

    pub fn num_modes(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeff(&self, k: &LatticePoint) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn modes(&self) -> impl Iterator<Item = (&LatticePoint, &Complex64)> {
        self.coeffs.iter()
    }

    /// `‖z‖_n` by the same deterministic Parseval sum as the vector case.
    pub fn sobolev_norm(&self, n: f64) -> f64 {
        let mut acc = NeumaierSum::new();
        for (k, z) in &self.coeffs {
            acc.add(shell_weight(k.norm_sq(), n) * z.norm_sqr());
        }
        acc.value().max(0.0).sqrt()
    }

    /// Largest coefficient modulus; diagnostic used by divergence checks.
    pub fn max_modulus(&self) -> f64 {
        self.coeffs.values().map(|z| z.norm()).fold(0.0, f64::max)
    }
}
