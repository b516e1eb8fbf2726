//! Weighted Hardy spaces on the disk and their diagonal multipliers.
//!
//! A weight sequence `a_0 = 1, a_n > 0` defines the kernel
//! `k(z, w) = sum_n a_n (z conj(w))^n`, in which the monomial `z^n` has
//! squared norm `1 / a_n`. Multiplication by a monomial acts diagonally on
//! the orthonormal basis, so norms of monomial columns and rows reduce to
//! closed-form suprema over the weight ratios. This makes the family a
//! sharp testbed: for weights that are not of complete Pick type the row
//! norm of a monomial tuple can exceed its column norm by a factor
//! approaching `sqrt(2)`.
//!
//! All computations are over an explicit truncation of the weight
//! sequence; the caller supplies enough coefficients for the suprema and
//! series tests to stabilize (the provided constructors do).

use crate::error::{Error, Result};

/// Tolerance for the complete Pick positivity test on the inverse-kernel
/// coefficients.
pub const PICK_COEFF_TOL: f64 = 1e-12;

/// A truncated weight sequence `a_0 = 1, a_1, ..., a_M` with `a_n > 0`,
/// interpreted as kernel Taylor coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedHardySpace {
    coeffs: Vec<f64>,
}

impl WeightedHardySpace {
    /// Validates and stores the truncated coefficient sequence.
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() < 2 {
            return Err(Error::InvalidInput(
                "need at least two kernel coefficients".into(),
            ));
        }
        if coeffs[0] != 1.0 {
            return Err(Error::InvalidInput(format!(
                "the constant coefficient must be 1, got {}",
                coeffs[0]
            )));
        }
        if coeffs.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
            return Err(Error::InvalidInput(
                "kernel coefficients must be positive and finite".into(),
            ));
        }
        Ok(Self { coeffs })
    }

    /// The Szego (Hardy space) weights: all coefficients one.
    pub fn szego(len: usize) -> Result<Self> {
        Self::new(vec![1.0; len.max(2)])
    }

    /// Dirichlet-type weights `a_n = 1 / (n + 1)`.
    pub fn dirichlet(len: usize) -> Result<Self> {
        Self::new((0..len.max(2)).map(|n| 1.0 / (n as f64 + 1.0)).collect())
    }

    /// The one-parameter family with `a_2 = 1 / alpha` and all other
    /// coefficients one. For `alpha > 1` it is not of complete Pick type
    /// and separates monomial row from column norms.
    pub fn alpha_family(alpha: f64, len: usize) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidInput("alpha must be positive".into()));
        }
        let mut coeffs = vec![1.0; len.max(3)];
        coeffs[2] = 1.0 / alpha;
        Self::new(coeffs)
    }

    /// The stored coefficients.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Truncation length (number of stored coefficients).
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    /// True when only the mandatory constant coefficient is stored.
    pub fn is_empty(&self) -> bool {
        false
    }

    fn validate_exponents(&self, exponents: &[usize]) -> Result<()> {
        if exponents.is_empty() {
            return Err(Error::InvalidInput("need at least one exponent".into()));
        }
        if exponents.iter().any(|&k| k == 0) {
            return Err(Error::InvalidInput(
                "monomial exponents must be at least 1".into(),
            ));
        }
        let mut seen = exponents.to_vec();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput("monomial exponents must be distinct".into()));
        }
        let kmax = *seen.last().expect("nonempty");
        if kmax + 1 >= self.coeffs.len() {
            return Err(Error::InvalidInput(format!(
                "exponent {} needs more than the {} stored coefficients",
                kmax,
                self.coeffs.len()
            )));
        }
        Ok(())
    }

    /// Squared norm of the monomial column `(z^{k_1}, ..., z^{k_J})^T`:
    /// `max_n sum_j a_n / a_{n + k_j}` over the representable range.
    ///
    /// Multiplication by `z^k` maps the orthonormal basis vector `e_n` to
    /// `sqrt(a_n / a_{n+k}) e_{n+k}`, so the column's Gram is diagonal with
    /// exactly these row sums.
    pub fn column_norm_sq(&self, exponents: &[usize]) -> Result<f64> {
        self.validate_exponents(exponents)?;
        let kmax = *exponents.iter().max().expect("nonempty");
        let mut best: f64 = 0.0;
        for n in 0..self.coeffs.len() - kmax {
            let total: f64 = exponents
                .iter()
                .map(|&k| self.coeffs[n] / self.coeffs[n + k])
                .sum();
            best = best.max(total);
        }
        Ok(best)
    }

    /// Squared norm of the monomial row `(z^{k_1}, ..., z^{k_J})`:
    /// `max_n sum_{k_j <= n} a_{n - k_j} / a_n` over the representable
    /// range.
    ///
    /// The row times its adjoint is diagonal on the orthonormal basis with
    /// these entries, because each cross term `z^{k_i} (z^{k_j})^*` shifts
    /// down by `k_j` and back up by `k_i`.
    pub fn row_norm_sq(&self, exponents: &[usize]) -> Result<f64> {
        self.validate_exponents(exponents)?;
        let mut best: f64 = 0.0;
        for n in 0..self.coeffs.len() {
            let total: f64 = exponents
                .iter()
                .filter(|&&k| k <= n)
                .map(|&k| self.coeffs[n - k] / self.coeffs[n])
                .sum();
            best = best.max(total);
        }
        Ok(best)
    }

    /// Coefficients `b_1, b_2, ...` of `1 - 1/k` as a power series in
    /// `z conj(w)`, up to the truncation order.
    ///
    /// The reciprocal series `r` solves the convolution `a * r = (1, 0,
    /// 0, ...)`; then `b_n = -r_n` for `n >= 1`.
    pub fn pick_coefficients(&self) -> Vec<f64> {
        let m = self.coeffs.len();
        let mut r = vec![0.0f64; m];
        r[0] = 1.0;
        for n in 1..m {
            let mut acc = 0.0;
            for k in 1..=n {
                acc += self.coeffs[k] * r[n - k];
            }
            r[n] = -acc;
        }
        r.iter().skip(1).map(|&x| -x).collect()
    }

    /// Runs the truncated complete Pick test: the space is of complete
    /// Pick type up to the truncation order when every inverse-kernel
    /// coefficient satisfies `b_n >= -tol`.
    ///
    /// The report carries the first violating coefficient, if any, with
    /// its index (`n` starts at 1).
    pub fn complete_pick_test(&self, tol: f64) -> Result<PickTestReport> {
        if !(tol.is_finite() && tol >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "pick-test tolerance must be nonnegative and finite, got {tol}"
            )));
        }
        let first_violation = self
            .pick_coefficients()
            .iter()
            .enumerate()
            .find(|(_, &b)| b < -tol)
            .map(|(i, &b)| (i + 1, b));
        Ok(PickTestReport {
            verdict: first_violation.is_none(),
            first_violation,
        })
    }

    /// True when all computed inverse-kernel coefficients are nonnegative
    /// within [`PICK_COEFF_TOL`]; this is the complete Pick property up to
    /// the truncation order.
    pub fn is_complete_pick(&self) -> bool {
        self.complete_pick_test(PICK_COEFF_TOL)
            .expect("constant tolerance is valid")
            .verdict
    }
}

/// Outcome of the truncated complete Pick coefficient test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PickTestReport {
    /// Whether every computed `b_n` is nonnegative at the tolerance.
    pub verdict: bool,
    /// The first `(n, b_n)` with `b_n < -tol`, starting at `n = 1`.
    pub first_violation: Option<(usize, f64)>,
}
