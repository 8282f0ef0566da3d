//! Compensated (Neumaier) summation.
//!
//! Every certified sum in the crate accumulates through this type: the
//! improved Kahan–Babuška scheme keeps the accumulated rounding error of `n`
//! terms at `O(ε · Σ|tᵢ|)` independently of `n`, instead of the `O(nε)` of
//! naive summation. It also tracks `Σ|tᵢ|`, which is what the rounding-slack
//! bounds in the kernel module are proportional to.

/// Running Neumaier-compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct NeumaierSum {
    sum: f64,
    comp: f64,
    abs: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
        self.abs += x.abs();
    }

    /// The compensated value `sum + comp`.
    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }

    /// Accumulated `Σ|tᵢ|`, for rounding-error bounds.
    #[inline]
    pub fn abs_sum(&self) -> f64 {
        self.abs
    }

    /// Merges another compensated sum into this one (used when combining
    /// per-shell partial sums in a fixed order).
    #[inline]
    pub fn merge(&mut self, other: &NeumaierSum) {
        self.add(other.sum);
        self.add(other.comp);
        self.abs += other.abs - other.sum.abs() - other.comp.abs();
    }
}
