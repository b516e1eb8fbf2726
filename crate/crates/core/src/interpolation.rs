//! Interpolating-sequence constants and extreme-point experiments.
//!
//! For a finite subset of a kernel space this module computes the Carleson
//! (Gram) constant, the weak separation constant, the norm of the canonical
//! weighted interpolant built from squares of interpolating multipliers,
//! quadratic perturbation norms `|b +/- a^2 / 2|`, and bisection witnesses
//! for non-extremality of a scalar multiplier in the unit ball.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernels::FiniteKernelSpace;
use crate::linalg::{hermitian_eigen, is_psd, CMatrix, HermitianMatrix};
use crate::multipliers::{
    multiplier_norm, pick_matrix, MultiplierTable, BISECTION_PSD_TOL, DEFAULT_BISECTION_TOL,
    MAX_BISECTION_STEPS, MAX_BRACKET_DOUBLINGS,
};

/// Amplitudes below this threshold count as "no witness found".
pub const WITNESS_THRESHOLD: f64 = 1e-6;

/// Largest eigenvalue of the normalized Gram matrix
/// `K_ij / sqrt(K_ii K_jj)`.
///
/// This is the norm of the Gram operator of normalized kernel functions; a
/// uniform bound over subsets is the Carleson condition for the measure
/// `sum 1/K_ii delta_{p_i}`.
pub fn carleson_constant(space: &FiniteKernelSpace) -> Result<f64> {
    let n = space.n_points();
    let g = CMatrix::from_fn(n, n, |i, j| {
        space.k(i, j) / (space.k(i, i).re * space.k(j, j).re).sqrt()
    });
    let eig = hermitian_eigen(&HermitianMatrix::new(g)?)?;
    Ok(eig.eigenvalues[n - 1])
}

/// `sqrt(1 - |K_nm|^2 / (K_nn K_mm))` for a pair of indices: the largest
/// value at `p_n` of a contractive multiplier vanishing at `p_m`.
fn pairwise_separation(space: &FiniteKernelSpace, n: usize, m: usize) -> f64 {
    let knm = space.k(n, m).norm_sqr();
    let knn = space.k(n, n).re;
    let kmm = space.k(m, m).re;
    (1.0 - knm / (knn * kmm)).max(0.0).sqrt()
}

/// Weak separation constant: the smallest pairwise separation over all
/// ordered pairs of distinct points.
pub fn weak_separation_constant(space: &FiniteKernelSpace) -> Result<f64> {
    let n = space.n_points();
    if n < 2 {
        return Err(Error::InvalidInput(
            "weak separation needs at least two points".into(),
        ));
    }
    let mut best = f64::INFINITY;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                best = best.min(pairwise_separation(space, i, j));
            }
        }
    }
    Ok(best)
}

/// Data produced by [`interpolation_operator`].
#[derive(Debug, Clone)]
pub struct InterpolationData {
    /// Column `Phi` of interpolating multipliers, `Phi(p_m) = e_m`.
    pub basis_column: MultiplierTable,
    /// The weighted interpolant `f = Phi^T diag(w) Phi`, a scalar table
    /// with `f(p_m) = w_m`.
    pub interpolant: MultiplierTable,
    /// Computed multiplier norm of the interpolant.
    pub interpolant_norm: f64,
    /// Column norm of `Phi`.
    pub column_norm: f64,
    /// Row norm of `Phi^T`.
    pub row_norm: f64,
    /// The a-priori bound `column * row * max |w|`.
    pub bound: f64,
}

/// Builds the canonical weighted interpolant from squares of
/// interpolating multipliers and certifies its norm bound.
///
/// The basis column `Phi` takes the value `e_m` at `p_m`, so the scalar
/// function `f = Phi^T diag(w) Phi = sum_n w_n phi_n^2` satisfies
/// `f(p_m) = w_m` exactly. Its norm is at most
/// `|Phi^T| |diag(w)| |Phi| = column * row * max |w|` by
/// submultiplicativity, which the returned data exhibits.
pub fn interpolation_operator(
    space: &FiniteKernelSpace,
    weights: &[Complex64],
) -> Result<InterpolationData> {
    let n = space.n_points();
    if weights.len() != n {
        return Err(Error::InvalidInput(format!(
            "expected {} weights, got {}",
            n,
            weights.len()
        )));
    }
    let basis_column = MultiplierTable::new(
        (0..n)
            .map(|m| {
                CMatrix::from_fn(n, 1, |i, _| {
                    Complex64::new(if i == m { 1.0 } else { 0.0 }, 0.0)
                })
            })
            .collect(),
    )?;
    // Sanity: the defining property Phi(p_m) = e_m holds by construction;
    // keep the check so refactors cannot silently break it.
    for m in 0..n {
        for i in 0..n {
            let expect = if i == m { 1.0 } else { 0.0 };
            let got = basis_column.value(m)[(i, 0)];
            if (got - Complex64::new(expect, 0.0)).norm() > 1e-10 {
                return Err(Error::Numeric("interpolating basis failed validation".into()));
            }
        }
    }
    let interpolant = MultiplierTable::new(
        (0..n)
            .map(|m| CMatrix::from_fn(1, 1, |_, _| weights[m]))
            .collect(),
    )?;
    let column_norm = multiplier_norm(space, space, &basis_column, DEFAULT_BISECTION_TOL)?;
    let row = basis_column.transpose();
    let row_norm = multiplier_norm(space, space, &row, DEFAULT_BISECTION_TOL)?;
    let interpolant_norm = multiplier_norm(space, space, &interpolant, DEFAULT_BISECTION_TOL)?;
    let wmax = weights.iter().map(|w| w.norm()).fold(0.0, f64::max);
    Ok(InterpolationData {
        basis_column,
        interpolant,
        interpolant_norm,
        column_norm,
        row_norm,
        bound: column_norm * row_norm * wmax,
    })
}

/// Stacks two scalar tables into the column `[b; a]`.
fn stack_column(b: &MultiplierTable, a: &MultiplierTable) -> Result<MultiplierTable> {
    if b.out_dim() != 1 || b.in_dim() != 1 || a.out_dim() != 1 || a.in_dim() != 1 {
        return Err(Error::InvalidInput("expected scalar tables".into()));
    }
    MultiplierTable::new(
        b.values()
            .iter()
            .zip(a.values())
            .map(|(vb, va)| CMatrix::from_fn(2, 1, |i, _| if i == 0 { vb[(0, 0)] } else { va[(0, 0)] }))
            .collect(),
    )
}

/// Norms of the quadratic perturbations `b + a^2/2` and `b - a^2/2`.
///
/// Requires the column `[b; a]` and the row `[b a]` to be contractive
/// within `1 + 1e-8`; under the column-row property with constant one the
/// perturbed functions then stay in the closed unit multiplier ball.
pub fn quadratic_perturbation_norms(
    space: &FiniteKernelSpace,
    b: &MultiplierTable,
    a: &MultiplierTable,
) -> Result<(f64, f64)> {
    let column = stack_column(b, a)?;
    let column_norm = multiplier_norm(space, space, &column, DEFAULT_BISECTION_TOL)?;
    if column_norm > 1.0 + 1e-8 {
        return Err(Error::Domain(format!(
            "the column [b; a] is not contractive (norm {column_norm:.12})"
        )));
    }
    let row_norm = multiplier_norm(space, space, &column.transpose(), DEFAULT_BISECTION_TOL)?;
    if row_norm > 1.0 + 1e-8 {
        return Err(Error::Domain(format!(
            "the row [b a] is not contractive (norm {row_norm:.12})"
        )));
    }
    let mut plus = Vec::with_capacity(space.n_points());
    let mut minus = Vec::with_capacity(space.n_points());
    for m in 0..space.n_points() {
        let bv = b.value(m)[(0, 0)];
        let av = a.value(m)[(0, 0)];
        let half_sq = av * av * Complex64::new(0.5, 0.0);
        plus.push(CMatrix::from_fn(1, 1, |_, _| bv + half_sq));
        minus.push(CMatrix::from_fn(1, 1, |_, _| bv - half_sq));
    }
    let plus = MultiplierTable::new(plus)?;
    let minus = MultiplierTable::new(minus)?;
    Ok((
        multiplier_norm(space, space, &plus, DEFAULT_BISECTION_TOL)?,
        multiplier_norm(space, space, &minus, DEFAULT_BISECTION_TOL)?,
    ))
}

/// Result of the extreme-point witness search.
#[derive(Debug, Clone)]
pub struct ExtremeWitness {
    /// Largest contractivity-preserving amplitude per coordinate
    /// direction (a supported at a single point).
    pub amplitudes: Vec<f64>,
    /// Index attaining the largest amplitude.
    pub best_index: usize,
    /// The witness table: the best amplitude at the best point, zero
    /// elsewhere.
    pub witness: MultiplierTable,
    /// True when every amplitude is below [`WITNESS_THRESHOLD`]: no
    /// direction admits a nonzero perturbation, so `b` is an extreme point
    /// of the restricted unit ball as far as the search can tell.
    pub numerically_extreme: bool,
}

/// Searches for a nonzero `a` with `[b; a]` contractive by bisecting the
/// amplitude of a multiplier supported at a single point.
///
/// For `a = c delta_i` the column `[b; a]` is contractive exactly when
/// `Pick(b) - c^2 K_ii E_ii >= 0`, which is monotone in `c`; the largest
/// feasible `c` per point is found by bracketed bisection. A scalar `b` in
/// the closed unit ball fails to be an extreme point of the restriction
/// precisely when some amplitude is positive.
pub fn extreme_witness(space: &FiniteKernelSpace, b: &MultiplierTable) -> Result<ExtremeWitness> {
    if b.out_dim() != 1 || b.in_dim() != 1 {
        return Err(Error::InvalidInput("extreme_witness expects a scalar table".into()));
    }
    let n = space.n_points();
    let pick = pick_matrix(space, space, b, 1.0)?;
    let base = pick.matrix.as_matrix().clone();
    let feasible = |i: usize, c: f64| -> Result<bool> {
        let mut m = base.clone();
        m[(i, i)] -= Complex64::new(c * c * space.k(i, i).re, 0.0);
        Ok(is_psd(&HermitianMatrix::new(m)?, BISECTION_PSD_TOL)?.verdict)
    };
    let mut amplitudes = Vec::with_capacity(n);
    for i in 0..n {
        if !feasible(i, 0.0)? {
            return Err(Error::Domain(
                "b is not a contractive multiplier on the restriction".into(),
            ));
        }
        // Bracket: grow until infeasible (the amplitude is bounded by 1,
        // but the doubling keeps this self-contained).
        let mut lo = 0.0f64;
        let mut hi = 1e-6f64;
        let mut bracketed = false;
        for _ in 0..MAX_BRACKET_DOUBLINGS {
            if feasible(i, hi)? {
                lo = hi;
                hi *= 2.0;
            } else {
                bracketed = true;
                break;
            }
        }
        if !bracketed {
            return Err(Error::Numeric(
                "witness amplitude failed to bracket; b is far from the unit sphere".into(),
            ));
        }
        for _ in 0..MAX_BISECTION_STEPS {
            if hi - lo <= DEFAULT_BISECTION_TOL {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if feasible(i, mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        amplitudes.push(lo);
    }
    let best_index = amplitudes
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let best = amplitudes[best_index];
    let witness = MultiplierTable::new(
        (0..n)
            .map(|m| {
                CMatrix::from_fn(1, 1, |_, _| {
                    Complex64::new(if m == best_index { best } else { 0.0 }, 0.0)
                })
            })
            .collect(),
    )?;
    Ok(ExtremeWitness {
        numerically_extreme: best <= WITNESS_THRESHOLD,
        amplitudes,
        best_index,
        witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{sample_ball_points, BallPoint, KernelModel};
    use crate::multipliers::pick_feasible;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn szego_pair(w: f64) -> FiniteKernelSpace {
        FiniteKernelSpace::new(
            KernelModel::DruryArveson { dim: 1 },
            vec![
                BallPoint::origin(1),
                BallPoint::from_reals(&[w]).unwrap(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn carleson_constant_of_a_szego_pair() {
        // Normalized Gram [[1, s], [s, 1]] with s = sqrt(1 - w^2) has top
        // eigenvalue 1 + s.
        let w = 0.6f64;
        let space = szego_pair(w);
        let expected = 1.0 + (1.0 - w * w).sqrt();
        let got = carleson_constant(&space).unwrap();
        assert!((got - expected).abs() <= 1e-12, "{got} vs {expected}");
    }

    #[test]
    fn carleson_constant_bounds() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(111);
        for _ in 0..10 {
            let d = rng.gen_range(1..=3);
            let n = rng.gen_range(2..=6);
            let pts = sample_ball_points(d, n, 0.8, 0.1, &mut rng).unwrap();
            let space =
                FiniteKernelSpace::new(KernelModel::DruryArveson { dim: d }, pts).unwrap();
            let g = carleson_constant(&space).unwrap();
            assert!(g >= 1.0 - 1e-12);
            assert!(g <= n as f64 + 1e-12);
        }
    }

    #[test]
    fn weak_separation_of_a_ball_pair() {
        // For {0, w} in the Drury-Arveson space the constant is |w|.
        let w = 0.37f64;
        let space = szego_pair(w);
        let got = weak_separation_constant(&space).unwrap();
        assert!((got - w).abs() <= 1e-12, "{got} vs {w}");
    }

    #[test]
    fn weak_separation_matches_the_bisection_oracle() {
        // Independent route: the largest |phi(p_n)| over contractive
        // multipliers vanishing at p_m, found by bisection on the two-point
        // Pick matrix.
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(113);
        let pts = sample_ball_points(2, 4, 0.7, 0.2, &mut rng).unwrap();
        let space = FiniteKernelSpace::new(KernelModel::DruryArveson { dim: 2 }, pts).unwrap();
        let mut oracle = f64::INFINITY;
        for n in 0..4 {
            for m in 0..4 {
                if n == m {
                    continue;
                }
                let sub = space.restrict(&[m, n]).unwrap();
                let feasible = |cv: f64| {
                    let table = MultiplierTable::scalar(&[c(0.0, 0.0), c(cv, 0.0)]).unwrap();
                    pick_feasible(&sub, &sub, &table, 1.0).unwrap()
                };
                let (mut lo, mut hi) = (0.0f64, 1.0f64);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if feasible(mid) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                oracle = oracle.min(lo);
            }
        }
        let closed = weak_separation_constant(&space).unwrap();
        assert!((closed - oracle).abs() <= 1e-8, "{closed} vs {oracle}");
    }

    #[test]
    fn interpolation_operator_norm_bound() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(127);
        let pts = sample_ball_points(2, 4, 0.6, 0.25, &mut rng).unwrap();
        let space = FiniteKernelSpace::new(KernelModel::DruryArveson { dim: 2 }, pts).unwrap();
        let weights: Vec<Complex64> = (0..4)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let data = interpolation_operator(&space, &weights).unwrap();
        for (m, w) in weights.iter().enumerate() {
            assert!((data.interpolant.value(m)[(0, 0)] - w).norm() <= 1e-15);
        }
        assert!(
            data.interpolant_norm <= data.bound + 1e-7,
            "norm {} exceeds bound {}",
            data.interpolant_norm,
            data.bound
        );
        assert!(data.column_norm >= 1.0 - 1e-9);
        assert!(data.row_norm >= 1.0 - 1e-9);
    }

    #[test]
    fn quadratic_perturbations_stay_in_the_ball() {
        // b constant, a the bisection witness: the column and row
        // hypotheses hold, and both perturbed functions stay contractive.
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(131);
        let pts = sample_ball_points(1, 3, 0.6, 0.2, &mut rng).unwrap();
        let space = FiniteKernelSpace::new(KernelModel::DruryArveson { dim: 1 }, pts).unwrap();
        let b = MultiplierTable::constant(3, CMatrix::from_fn(1, 1, |_, _| c(0.55, 0.2))).unwrap();
        let witness = extreme_witness(&space, &b).unwrap();
        assert!(!witness.numerically_extreme);
        let (plus, minus) = quadratic_perturbation_norms(&space, &b, &witness.witness).unwrap();
        assert!(plus <= 1.0 + 1e-7, "plus norm {plus}");
        assert!(minus <= 1.0 + 1e-7, "minus norm {minus}");
        assert!(plus > 0.5 && minus > 0.5);
    }

    #[test]
    fn quadratic_perturbation_rejects_expansive_columns() {
        let space = szego_pair(0.4);
        let b = MultiplierTable::constant(2, CMatrix::from_fn(1, 1, |_, _| c(0.9, 0.0))).unwrap();
        let a = MultiplierTable::constant(2, CMatrix::from_fn(1, 1, |_, _| c(0.9, 0.0))).unwrap();
        assert!(matches!(
            quadratic_perturbation_norms(&space, &b, &a),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn unimodular_constants_are_extreme() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(137);
        let pts = sample_ball_points(2, 3, 0.5, 0.2, &mut rng).unwrap();
        let space = FiniteKernelSpace::new(KernelModel::DruryArveson { dim: 2 }, pts).unwrap();
        let b = MultiplierTable::constant(3, CMatrix::from_fn(1, 1, |_, _| c(1.0, 0.0))).unwrap();
        let witness = extreme_witness(&space, &b).unwrap();
        assert!(witness.numerically_extreme, "amplitudes {:?}", witness.amplitudes);
    }

    #[test]
    fn strict_contractions_admit_witnesses() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(139);
        let pts = sample_ball_points(1, 4, 0.6, 0.15, &mut rng).unwrap();
        let space = FiniteKernelSpace::new(KernelModel::DruryArveson { dim: 1 }, pts).unwrap();
        let b = MultiplierTable::constant(4, CMatrix::from_fn(1, 1, |_, _| c(0.5, 0.0))).unwrap();
        let witness = extreme_witness(&space, &b).unwrap();
        assert!(!witness.numerically_extreme);
        // The witness column really is contractive.
        let column = MultiplierTable::new(
            (0..4)
                .map(|m| {
                    CMatrix::from_fn(2, 1, |i, _| {
                        if i == 0 {
                            b.value(m)[(0, 0)]
                        } else {
                            witness.witness.value(m)[(0, 0)]
                        }
                    })
                })
                .collect(),
        )
        .unwrap();
        assert!(pick_feasible(&space, &space, &column, 1.0 + 1e-7).unwrap());
        // And slightly above the found amplitude it no longer is.
        let bumped = MultiplierTable::new(
            (0..4)
                .map(|m| {
                    CMatrix::from_fn(2, 1, |i, _| {
                        if i == 0 {
                            b.value(m)[(0, 0)]
                        } else if m == witness.best_index {
                            c(witness.amplitudes[witness.best_index] + 1e-6, 0.0)
                        } else {
                            c(0.0, 0.0)
                        }
                    })
                })
                .collect(),
        )
        .unwrap();
        assert!(!pick_feasible(&space, &space, &bumped, 1.0).unwrap());
    }
}
