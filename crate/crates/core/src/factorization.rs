//! Constructive multiplier factorization on ball models.
//!
//! Given tables `T` (out N, in p) and `F` (out N, in e) on a finite subset
//! of the ball with
//!
//! ```text
//!   [ K(p_i, p_j) ( T_i T_j* - F_i F_j* ) ]_{i,j}  >= 0,
//! ```
//!
//! Leech's theorem provides a contractive multiplier `S` with `F = T S`
//! pointwise. The construction here is the classical lurking isometry:
//! Gram-factor the hypothesis matrix, match the resulting source and
//! target vectors by a contraction, and read the factor off as the
//! transfer function of the colligation.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernels::{BallPoint, FiniteKernelSpace, KernelModel};
use crate::linalg::{
    extend_partial_isometry, gram_factor, is_psd, max_abs_entry, operator_norm, CMatrix, CVector,
    HermitianMatrix,
};
use crate::moebius::{apply_range_automorphism, pull_back_domain, BallAutomorphism};
use crate::multipliers::{
    multiplier_norm, multiply, pick_feasible, reshape_column_to_matrix, MultiplierTable,
    DEFAULT_BISECTION_TOL,
};

/// Entrywise budget for the factorization identity `F = T S`.
pub const FACTOR_RESIDUAL_TOL: f64 = 1e-8;
/// Slack used when certifying contractivity of produced factors.
pub const CONTRACTIVITY_SLACK: f64 = 1e-7;
/// Gram-match tolerance handed to the isometry extension.
const LURKING_GRAM_TOL: f64 = 1e-8;
/// Relative eigenvalue cutoff for the hypothesis Gram factor, pinned at the
/// eigensolver's noise floor rather than at the positivity gate: every unit
/// of positive mass truncated here reappears as a source/target Gram
/// mismatch in the lurking isometry and, amplified by the inverse smallest
/// kept singular value, as transfer-function residual. Near-tight
/// hypotheses (a factorization problem whose optimal factor has norm one,
/// as in [`factor_at_origin`]) carry genuine eigenvalues far below the
/// positivity gate, so those must be kept, not dropped.
const GRAM_TRUNCATION_TOL: f64 = 1e-14;
/// Relative shrink applied when normalizing a column to norm one before
/// factoring. This absorbs the bisection's upward rounding of the norm, so
/// the factorization hypothesis stays positive semidefinite with margin
/// instead of straddling zero.
const NORMALIZATION_SHRINK: f64 = 1e-7;

/// A contractive colligation `[[alpha, beta], [gamma, delta]]` together
/// with the dimensions needed to evaluate its transfer function on the
/// ball of C^d.
#[derive(Debug, Clone)]
pub struct Colligation {
    /// `in_dim x out_dim_adjoint` block, maps C^p -> C^e.
    pub alpha: CMatrix,
    /// Maps C^{d r} -> C^e.
    pub beta: CMatrix,
    /// Maps C^p -> C^r.
    pub gamma: CMatrix,
    /// Maps C^{d r} -> C^r.
    pub delta: CMatrix,
    /// Ball dimension d.
    pub ball_dim: usize,
    /// Internal rank r of the lurking-isometry state space.
    pub internal_rank: usize,
}

impl Colligation {
    /// Validates block shapes and finiteness.
    pub fn new(
        alpha: CMatrix,
        beta: CMatrix,
        gamma: CMatrix,
        delta: CMatrix,
        ball_dim: usize,
        internal_rank: usize,
    ) -> Result<Self> {
        if ball_dim == 0 {
            return Err(Error::InvalidInput("colligation needs a positive ball dimension".into()));
        }
        let e = alpha.nrows();
        let p = alpha.ncols();
        let r = internal_rank;
        let dr = ball_dim * r;
        if beta.nrows() != e || beta.ncols() != dr {
            return Err(Error::InvalidInput(format!(
                "beta must be {e}x{dr}, got {}x{}",
                beta.nrows(),
                beta.ncols()
            )));
        }
        if gamma.nrows() != r || gamma.ncols() != p {
            return Err(Error::InvalidInput(format!(
                "gamma must be {r}x{p}, got {}x{}",
                gamma.nrows(),
                gamma.ncols()
            )));
        }
        if delta.nrows() != r || delta.ncols() != dr {
            return Err(Error::InvalidInput(format!(
                "delta must be {r}x{dr}, got {}x{}",
                delta.nrows(),
                delta.ncols()
            )));
        }
        for (m, what) in [
            (&alpha, "alpha"),
            (&beta, "beta"),
            (&gamma, "gamma"),
            (&delta, "delta"),
        ] {
            crate::linalg::check_finite(m, what)?;
        }
        Ok(Self {
            alpha,
            beta,
            gamma,
            delta,
            ball_dim,
            internal_rank,
        })
    }

    /// The full block matrix `[[alpha, beta], [gamma, delta]]`.
    pub fn block_matrix(&self) -> CMatrix {
        let e = self.alpha.nrows();
        let p = self.alpha.ncols();
        let r = self.internal_rank;
        let dr = self.ball_dim * r;
        let mut v = CMatrix::zeros(e + r, p + dr);
        v.view_mut((0, 0), (e, p)).copy_from(&self.alpha);
        v.view_mut((0, p), (e, dr)).copy_from(&self.beta);
        v.view_mut((e, 0), (r, p)).copy_from(&self.gamma);
        v.view_mut((e, p), (r, dr)).copy_from(&self.delta);
        v
    }

    /// Operator norm of the block matrix (at most 1 + 1e-9 by construction).
    pub fn contraction_norm(&self) -> Result<f64> {
        operator_norm(&self.block_matrix())
    }

    /// `conj(w) (x) I_r`: stacks `conj(w_k) I_r` for k = 1..d.
    fn embed(&self, w: &BallPoint) -> CMatrix {
        let r = self.internal_rank;
        let d = self.ball_dim;
        let mut e = CMatrix::zeros(d * r, r);
        for (k, &wk) in w.coords().iter().enumerate() {
            for s in 0..r {
                e[(k * r + s, s)] = wk.conj();
            }
        }
        e
    }

    /// Adjoint value `S(w)* = alpha + beta E(w) (I - delta E(w))^{-1} gamma`
    /// with `E(w) = conj(w) (x) I_r`.
    pub fn eval_adjoint(&self, w: &BallPoint) -> Result<CMatrix> {
        if w.dim() != self.ball_dim {
            return Err(Error::InvalidInput("transfer function: point dimension mismatch".into()));
        }
        let r = self.internal_rank;
        if r == 0 {
            return Ok(self.alpha.clone());
        }
        let e = self.embed(w);
        let m = CMatrix::identity(r, r) - &self.delta * &e;
        let x = m
            .lu()
            .solve(&self.gamma)
            .ok_or_else(|| Error::Numeric("transfer-function resolvent is singular".into()))?;
        Ok(&self.alpha + &self.beta * e * x)
    }

    /// Value `S(w)` (p x e matrix) of the transfer multiplier.
    pub fn eval(&self, w: &BallPoint) -> Result<CMatrix> {
        Ok(self.eval_adjoint(w)?.adjoint())
    }

    /// The table of transfer-function values on the points of a space.
    pub fn table_on(&self, space: &FiniteKernelSpace) -> Result<MultiplierTable> {
        MultiplierTable::new(
            space
                .points()
                .iter()
                .map(|p| self.eval(p))
                .collect::<Result<_>>()?,
        )
    }
}

/// Output of [`leech_factor`].
#[derive(Debug, Clone)]
pub struct LeechFactorization {
    /// The factor table `S` (out `p`, in `e`) with `F = T S` pointwise.
    pub psi: MultiplierTable,
    /// The colligation realizing `S` as a transfer function.
    pub colligation: Colligation,
    /// Largest entrywise deviation in `F - T S` over the points.
    pub residual: f64,
}

fn require_plain_ball_space(space: &FiniteKernelSpace) -> Result<()> {
    match space.model() {
        KernelModel::DruryArveson { .. } if space.normalized_at().is_none() => Ok(()),
        _ => Err(Error::InvalidInput(
            "factorization requires a plain (unrescaled) standard ball model".into(),
        )),
    }
}

/// Constructive Leech factorization on a finite restriction.
///
/// Requires the hypothesis block matrix
/// `[K_ij (T_i T_j* - F_i F_j*)]` to be positive semidefinite at relative
/// tolerance `tol`; returns a factor `S` with `F = T S` pointwise
/// (entrywise residual at most [`FACTOR_RESIDUAL_TOL`] on well-posed
/// instances) whose Pick assembly at `1 + 1e-7` is positive semidefinite.
pub fn leech_factor(
    space: &FiniteKernelSpace,
    theta: &MultiplierTable,
    phi: &MultiplierTable,
    tol: f64,
) -> Result<LeechFactorization> {
    require_plain_ball_space(space)?;
    let n = space.n_points();
    if theta.n_points() != n || phi.n_points() != n {
        return Err(Error::InvalidInput("tables and space disagree on the point count".into()));
    }
    let big_n = theta.out_dim();
    if phi.out_dim() != big_n {
        return Err(Error::InvalidInput(format!(
            "theta and phi must share the output dimension ({} vs {})",
            big_n,
            phi.out_dim()
        )));
    }
    let p = theta.in_dim();
    let e = phi.in_dim();
    let d = space.dim();

    // Hypothesis matrix L_ij = K_ij (T_i T_j* - F_i F_j*).
    let mut l = CMatrix::zeros(n * big_n, n * big_n);
    for i in 0..n {
        for j in 0..n {
            let kij = space.k(i, j);
            let block = (theta.value(i) * theta.value(j).adjoint()
                - phi.value(i) * phi.value(j).adjoint())
            .map(|z| z * kij);
            l.view_mut((i * big_n, j * big_n), (big_n, big_n)).copy_from(&block);
        }
    }
    let l = HermitianMatrix::new(l)?;
    let report = is_psd(&l, tol)?;
    if !report.verdict {
        return Err(Error::NotPsd {
            context: "leech hypothesis",
            report,
        });
    }
    // Gate at the caller's tolerance, truncate at the noise floor: the PSD
    // check must stay consistent with the verdict above, while the factor
    // must keep all genuine (possibly tiny) positive mass.
    let gf = gram_factor(&l, tol, GRAM_TRUNCATION_TOL)?;
    let r = gf.rank;

    // Lurking isometry: sources [T_j* xi ; (conj(p_j) (x) I_r) H_j* xi],
    // targets [F_j* xi ; H_j* xi] for xi over the standard basis of C^N.
    let mut sources: Vec<CVector> = Vec::with_capacity(n * big_n);
    let mut targets: Vec<CVector> = Vec::with_capacity(n * big_n);
    for j in 0..n {
        let hj = gf.factor.view((j * big_n, 0), (big_n, r)).clone_owned();
        let theta_adj = theta.value(j).adjoint();
        let phi_adj = phi.value(j).adjoint();
        let hj_adj = hj.adjoint();
        for b in 0..big_n {
            let xi = CMatrix::from_fn(big_n, 1, |i, _| {
                Complex64::new(if i == b { 1.0 } else { 0.0 }, 0.0)
            });
            let top_s = &theta_adj * &xi; // p x 1
            let h_xi = &hj_adj * &xi; // r x 1
            let mut s = CVector::zeros(p + d * r);
            for i in 0..p {
                s[i] = top_s[(i, 0)];
            }
            for (k, &wk) in space.point(j).coords().iter().enumerate() {
                for t in 0..r {
                    s[p + k * r + t] = wk.conj() * h_xi[(t, 0)];
                }
            }
            let top_t = &phi_adj * &xi; // e x 1
            let mut tv = CVector::zeros(e + r);
            for i in 0..e {
                tv[i] = top_t[(i, 0)];
            }
            for t in 0..r {
                tv[e + t] = h_xi[(t, 0)];
            }
            sources.push(s);
            targets.push(tv);
        }
    }
    let v = extend_partial_isometry(&sources, &targets, LURKING_GRAM_TOL)?;

    let colligation = Colligation {
        alpha: v.view((0, 0), (e, p)).clone_owned(),
        beta: v.view((0, p), (e, d * r)).clone_owned(),
        gamma: v.view((e, 0), (r, p)).clone_owned(),
        delta: v.view((e, p), (r, d * r)).clone_owned(),
        ball_dim: d,
        internal_rank: r,
    };
    let psi = colligation.table_on(space)?;

    let mut residual = 0.0f64;
    for j in 0..n {
        let recon = theta.value(j) * psi.value(j);
        residual = residual.max(max_abs_entry(&(phi.value(j) - recon)));
    }
    Ok(LeechFactorization {
        psi,
        colligation,
        residual,
    })
}

/// The coordinate row `z = (z_1, ..., z_d)` as a 1 x d table.
pub fn coordinate_row_table(space: &FiniteKernelSpace) -> Result<MultiplierTable> {
    let d = space.dim();
    MultiplierTable::new(
        space
            .points()
            .iter()
            .map(|p| CMatrix::from_fn(1, d, |_, k| p.coords()[k]))
            .collect(),
    )
}

/// The block-diagonal table `diag(z, ..., z)` (n copies of the coordinate
/// row), i.e. `I_n (x) z`, of shape `n x (d n)`.
pub fn block_coordinate_table(
    space: &FiniteKernelSpace,
    copies: usize,
) -> Result<MultiplierTable> {
    let d = space.dim();
    MultiplierTable::new(
        space
            .points()
            .iter()
            .map(|p| {
                CMatrix::from_fn(copies, d * copies, |i, j| {
                    if j / d == i {
                        p.coords()[j % d]
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
            })
            .collect(),
    )
}

/// Output of [`factor_at_origin`].
#[derive(Debug, Clone)]
pub struct OriginFactorization {
    /// Column factor (out `d * N`, in 1) with `F = diag(z,..,z) psi`.
    pub psi: MultiplierTable,
    /// The block-coordinate table the factorization goes through.
    pub theta: MultiplierTable,
    /// Column norm of the input.
    pub column_norm: f64,
    /// Column norm of the factor (equal to `column_norm` up to numerics).
    pub factor_norm: f64,
    /// Largest entrywise deviation in the factor identity.
    pub residual: f64,
}

/// Factors a column multiplier vanishing at the origin through the
/// coordinate row: `F = diag(z, ..., z) psi` with `|psi| = |F|`.
///
/// The space must contain the origin and `F` must vanish there. The factor
/// is produced by [`leech_factor`] applied to the normalized column, so its
/// norm matches the input's (the block-coordinate table is itself
/// contractive, which forces equality from both sides).
pub fn factor_at_origin(
    space: &FiniteKernelSpace,
    phi: &MultiplierTable,
    tol: f64,
) -> Result<OriginFactorization> {
    require_plain_ball_space(space)?;
    if phi.in_dim() != 1 {
        return Err(Error::InvalidInput("factor_at_origin expects a column table".into()));
    }
    if phi.n_points() != space.n_points() {
        return Err(Error::InvalidInput("table and space disagree on the point count".into()));
    }
    let Some(origin) = space.index_of_origin() else {
        return Err(Error::InvalidInput("the space must contain the origin".into()));
    };
    if max_abs_entry(phi.value(origin)) > 1e-12 {
        return Err(Error::InvalidInput(
            "the column must vanish at the origin to factor through the coordinates".into(),
        ));
    }
    let big_n = phi.out_dim();
    let d = space.dim();
    let theta = block_coordinate_table(space, big_n)?;

    let column_norm = multiplier_norm(space, space, phi, DEFAULT_BISECTION_TOL)?;
    if column_norm <= 1e-12 {
        let psi = MultiplierTable::zeros(space.n_points(), d * big_n, 1)?;
        return Ok(OriginFactorization {
            psi,
            theta,
            column_norm: 0.0,
            factor_norm: 0.0,
            residual: 0.0,
        });
    }
    // Normalize with a relative shrink so the hypothesis is PSD with
    // margin rather than straddling zero at the bisection's resolution.
    let scale = column_norm * (1.0 + NORMALIZATION_SHRINK);
    let normalized = phi.scale(Complex64::new(1.0 / scale, 0.0));
    let factored = leech_factor(space, &theta, &normalized, tol)?;
    let psi = factored.psi.scale(Complex64::new(scale, 0.0));

    let mut residual = 0.0f64;
    for j in 0..space.n_points() {
        let recon = theta.value(j) * psi.value(j);
        residual = residual.max(max_abs_entry(&(phi.value(j) - recon)));
    }
    let factor_norm = multiplier_norm(space, space, &psi, DEFAULT_BISECTION_TOL)?;
    Ok(OriginFactorization {
        psi,
        theta,
        column_norm,
        factor_norm,
        residual,
    })
}

/// The reduced positivity matrix for columns vanishing at the origin:
/// blocks `K_ij (I - F_i F_j*) - I` over the points other than the origin.
///
/// It is positive semidefinite exactly when the column is a contractive
/// multiplier on the full point set; compared to the full Pick matrix the
/// origin block has been eliminated as a Schur complement.
pub fn schur_reduce(space: &FiniteKernelSpace, phi: &MultiplierTable) -> Result<HermitianMatrix> {
    require_plain_ball_space(space)?;
    if phi.in_dim() != 1 {
        return Err(Error::InvalidInput("schur_reduce expects a column table".into()));
    }
    if phi.n_points() != space.n_points() {
        return Err(Error::InvalidInput("table and space disagree on the point count".into()));
    }
    let Some(origin) = space.index_of_origin() else {
        return Err(Error::InvalidInput("the space must contain the origin".into()));
    };
    if max_abs_entry(phi.value(origin)) > 1e-12 {
        return Err(Error::InvalidInput("the column must vanish at the origin".into()));
    }
    let rest: Vec<usize> = (0..space.n_points()).filter(|&i| i != origin).collect();
    let q = phi.out_dim();
    let m = rest.len();
    let mut out = CMatrix::zeros(m * q, m * q);
    let id = CMatrix::identity(q, q);
    for (a, &i) in rest.iter().enumerate() {
        for (b, &j) in rest.iter().enumerate() {
            let kij = space.k(i, j);
            let block = (&id - phi.value(i) * phi.value(j).adjoint()).map(|z| z * kij) - &id;
            out.view_mut((a * q, b * q), (q, q)).copy_from(&block);
        }
    }
    HermitianMatrix::new(out)
}

/// Multiplies a `d x e` table by the coordinate row, producing the row
/// table `z S` (out 1, in e).
///
/// Requires the restriction of `S` to the points other than the origin to
/// be contractive; the product is then contractive on the whole set, which
/// is certified before returning.
pub fn z_row_lift(space: &FiniteKernelSpace, psi: &MultiplierTable) -> Result<MultiplierTable> {
    require_plain_ball_space(space)?;
    let Some(origin) = space.index_of_origin() else {
        return Err(Error::InvalidInput("the space must contain the origin".into()));
    };
    if psi.out_dim() != space.dim() {
        return Err(Error::InvalidInput(
            "table's output dimension must equal the ball dimension".into(),
        ));
    }
    let rest: Vec<usize> = (0..space.n_points()).filter(|&i| i != origin).collect();
    if !rest.is_empty() {
        let sub_space = space.restrict(&rest)?;
        let sub_psi = psi.restrict(&rest)?;
        if !pick_feasible(&sub_space, &sub_space, &sub_psi, 1.0 + CONTRACTIVITY_SLACK)? {
            return Err(Error::Domain(
                "the table is not contractive away from the origin".into(),
            ));
        }
    }
    let z_row = coordinate_row_table(space)?;
    let lifted = multiply(&z_row, psi)?;
    if !pick_feasible(space, space, &lifted, 1.0 + CONTRACTIVITY_SLACK)? {
        return Err(Error::Numeric(
            "lifted row failed the contractivity certificate".into(),
        ));
    }
    Ok(lifted)
}

/// Output of [`schur_step`].
#[derive(Debug, Clone)]
pub struct SchurStep {
    /// Space over the preimage points (first point moved to the origin).
    pub pulled_space: FiniteKernelSpace,
    /// The range-adjusted column, vanishing at the origin.
    pub adjusted_column: MultiplierTable,
    /// The `d x N` matrix table M with `adjusted^T = z M` pointwise.
    pub matrix_table: MultiplierTable,
    /// The transposed (row) table of the adjusted column.
    pub row_table: MultiplierTable,
    /// Largest entrywise deviation in `adjusted^T - z M`.
    pub transpose_residual: f64,
    /// Column norm of the adjusted column.
    pub column_norm: f64,
    /// Column norm of the origin factor.
    pub factor_norm: f64,
}

/// One step of the Schur-type reduction behind the column-row property:
/// move the first point to the origin, adjust the range so the column
/// vanishes there, factor through the coordinates and reshape the factor
/// into a `d x N` matrix whose coordinate-row product recovers the
/// transposed column.
pub fn schur_step(
    space: &FiniteKernelSpace,
    phi: &MultiplierTable,
    tol: f64,
) -> Result<SchurStep> {
    require_plain_ball_space(space)?;
    if phi.in_dim() != 1 {
        return Err(Error::InvalidInput("schur_step expects a column table".into()));
    }
    let theta = BallAutomorphism::involution(space.point(0).clone());
    let (pulled_space, pulled_column) = pull_back_domain(space, phi, &theta)?;
    let origin = pulled_space
        .index_of_origin()
        .ok_or_else(|| Error::Numeric("pull-back failed to move the first point to 0".into()))?;

    let base_value = pulled_column.value(origin).clone();
    if operator_norm(&base_value)? >= 1.0 {
        return Err(Error::Domain(
            "column value at the base point lies outside the open unit ball".into(),
        ));
    }
    let adjusted = apply_range_automorphism(&pulled_column, &base_value)?;
    let factored = factor_at_origin(&pulled_space, &adjusted, tol)?;

    let d = pulled_space.dim();
    let big_n = adjusted.out_dim();
    let matrix_table = reshape_column_to_matrix(&factored.psi, d, big_n)?;
    let row_table = adjusted.transpose();

    // Pointwise certificate: adjusted^T = z M.
    let z_row = coordinate_row_table(&pulled_space)?;
    let product = multiply(&z_row, &matrix_table)?;
    let mut transpose_residual = 0.0f64;
    for j in 0..pulled_space.n_points() {
        transpose_residual =
            transpose_residual.max(max_abs_entry(&(row_table.value(j) - product.value(j))));
    }
    Ok(SchurStep {
        pulled_space,
        adjusted_column: adjusted,
        matrix_table,
        row_table,
        transpose_residual,
        column_norm: factored.column_norm,
        factor_norm: factored.factor_norm,
    })
}

/// Output of [`pair_factor`].
#[derive(Debug, Clone)]
pub struct PairFactorization {
    /// Factor through the ratio rows: `F = (G (x) I_N) psi`.
    pub psi: MultiplierTable,
    /// Largest entrywise deviation in the factor identity.
    pub residual: f64,
    /// Norm of the input as a source-to-target multiplier.
    pub column_norm: f64,
    /// Norm of the factor as a source-space multiplier.
    pub factor_norm: f64,
}

fn as_plain_ball_space(space: &FiniteKernelSpace) -> Result<FiniteKernelSpace> {
    match space.model() {
        KernelModel::DruryArveson { .. } => Ok(space.clone()),
        KernelModel::PowerKernel { dim, exponent } if *exponent == 1.0 => FiniteKernelSpace::new(
            KernelModel::DruryArveson { dim: *dim },
            space.points().to_vec(),
        ),
        KernelModel::NormalizedCp { .. } => space.embed_to_ball(),
        _ => Err(Error::InvalidInput(
            "pair source must be a standard ball kernel (possibly after embedding)".into(),
        )),
    }
}

/// Factors a contractive source-to-target column through the rows of the
/// ratio factorization `target/source = G G*`.
///
/// For a pair space with source `S` and target `K`, a column `F` with
/// source-to-target norm `c` satisfies `F = (G (x) I_N) psi` where `psi` is
/// a source-space multiplier of norm at most `c`.
pub fn pair_factor(
    pair_space: &FiniteKernelSpace,
    phi: &MultiplierTable,
    tol: f64,
) -> Result<PairFactorization> {
    let Some(pd) = pair_space.pair_data() else {
        return Err(Error::InvalidInput("pair_factor expects a pair-model space".into()));
    };
    if phi.in_dim() != 1 {
        return Err(Error::InvalidInput("pair_factor expects a column table".into()));
    }
    let src = crate::kernels::pair_source_space(pair_space)?;
    let n = pair_space.n_points();
    if phi.n_points() != n {
        return Err(Error::InvalidInput("table and space disagree on the point count".into()));
    }
    let big_n = phi.out_dim();
    let g = pd.factor.ncols();

    // Theta = G (x) I_N, of shape N x (g N).
    let theta = MultiplierTable::new(
        (0..n)
            .map(|i| {
                CMatrix::from_fn(big_n, g * big_n, |r, c| {
                    if c % big_n == r {
                        pd.factor[(i, c / big_n)]
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
            })
            .collect(),
    )?;

    let column_norm = multiplier_norm(&src, pair_space, phi, DEFAULT_BISECTION_TOL)?;
    if column_norm <= 1e-12 {
        let psi = MultiplierTable::zeros(n, g * big_n, 1)?;
        return Ok(PairFactorization {
            psi,
            residual: 0.0,
            column_norm: 0.0,
            factor_norm: 0.0,
        });
    }
    let scale = column_norm * (1.0 + NORMALIZATION_SHRINK);
    let normalized = phi.scale(Complex64::new(1.0 / scale, 0.0));
    let ball_src = as_plain_ball_space(&src)?;
    let factored = leech_factor(&ball_src, &theta, &normalized, tol)?;
    let psi = factored.psi.scale(Complex64::new(scale, 0.0));

    let mut residual = 0.0f64;
    for j in 0..n {
        let recon = theta.value(j) * psi.value(j);
        residual = residual.max(max_abs_entry(&(phi.value(j) - recon)));
    }
    let factor_norm = multiplier_norm(&src, &src, &psi, DEFAULT_BISECTION_TOL)?;
    Ok(PairFactorization {
        psi,
        residual,
        column_norm,
        factor_norm,
    })
}

/// Certifies the two Leech postconditions for a factor `S` of `(T, F)`:
/// the identity residual and contractivity at `1 + 1e-7`.
pub fn verify_leech_postconditions(
    space: &FiniteKernelSpace,
    theta: &MultiplierTable,
    phi: &MultiplierTable,
    factorization: &LeechFactorization,
) -> Result<(f64, bool)> {
    let mut residual = 0.0f64;
    for j in 0..space.n_points() {
        let recon = theta.value(j) * factorization.psi.value(j);
        residual = residual.max(max_abs_entry(&(phi.value(j) - recon)));
    }
    let contractive = pick_feasible(
        space,
        space,
        &factorization.psi,
        1.0 + CONTRACTIVITY_SLACK,
    )?;
    Ok((residual, contractive))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::sample_ball_points;
    use crate::linalg::DEFAULT_PSD_TOL;
    use crate::multipliers::{pick_matrix, random_contractive_column};
    use rand::{Rng, SeedableRng};
    use rand_distr::StandardNormal;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn da_space_with_origin<R: Rng>(d: usize, n: usize, rng: &mut R) -> FiniteKernelSpace {
        let mut pts = vec![BallPoint::origin(d)];
        pts.extend(sample_ball_points(d, n - 1, 0.75, 0.2, rng).unwrap());
        FiniteKernelSpace::new(KernelModel::DruryArveson { dim: d }, pts).unwrap()
    }

    fn random_table<R: Rng>(n: usize, q: usize, p: usize, scale: f64, rng: &mut R) -> MultiplierTable {
        MultiplierTable::new(
            (0..n)
                .map(|_| {
                    CMatrix::from_fn(q, p, |_, _| {
                        c(
                            scale * rng.sample::<f64, _>(StandardNormal),
                            scale * rng.sample::<f64, _>(StandardNormal),
                        )
                    })
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn leech_factor_reconstructs_engineered_products() {
        // Phi = Theta Psi0 with Psi0 a contractive column makes the
        // hypothesis hold exactly; the factor must reproduce Phi and be
        // contractive.
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(71);
        for trial in 0..30 {
            let d = rng.gen_range(1..=3);
            let n = rng.gen_range(1..=5);
            let big_n = rng.gen_range(1..=3);
            let p = rng.gen_range(1..=3);
            let pts = sample_ball_points(d, n, 0.75, 0.2, &mut rng).unwrap();
            let space =
                FiniteKernelSpace::new(KernelModel::DruryArveson { dim: d }, pts).unwrap();
            let theta = random_table(n, big_n, p, 0.8, &mut rng);
            let psi0 = random_contractive_column(&space, p, 0.9, &mut rng).unwrap();
            let phi = multiply(&theta, &psi0).unwrap();
            let out = leech_factor(&space, &theta, &phi, DEFAULT_PSD_TOL).unwrap();
            let (residual, contractive) =
                verify_leech_postconditions(&space, &theta, &phi, &out).unwrap();
            assert!(
                residual <= FACTOR_RESIDUAL_TOL,
                "trial {trial}: residual {residual:.3e}"
            );
            assert!(contractive, "trial {trial}: factor not contractive");
            assert!(out.colligation.contraction_norm().unwrap() <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn leech_rejects_indefinite_hypotheses() {
        // Theta = 0 but Phi nonzero: the hypothesis matrix is negative.
        let space = FiniteKernelSpace::new(
            KernelModel::DruryArveson { dim: 1 },
            vec![BallPoint::from_reals(&[0.3]).unwrap()],
        )
        .unwrap();
        let theta = MultiplierTable::zeros(1, 1, 1).unwrap();
        let phi = MultiplierTable::scalar(&[c(0.5, 0.0)]).unwrap();
        assert!(matches!(
            leech_factor(&space, &theta, &phi, DEFAULT_PSD_TOL),
            Err(Error::NotPsd { .. })
        ));
    }

    #[test]
    fn factor_at_origin_on_the_coordinate_column() {
        // F = (z1, z2)^T / sqrt(2) on a set containing 0. The constant
        // column (1/sqrt(2), 0, 0, 1/sqrt(2))^T is an exact factor; the
        // computed factor must match the norm of F.
        let pts = vec![
            BallPoint::origin(2),
            BallPoint::new(vec![c(0.4, 0.1), c(0.2, -0.3)]).unwrap(),
            BallPoint::new(vec![c(-0.3, 0.2), c(0.1, 0.4)]).unwrap(),
            BallPoint::new(vec![c(0.1, -0.5), c(-0.2, 0.1)]).unwrap(),
        ];
        let space = FiniteKernelSpace::new(KernelModel::DruryArveson { dim: 2 }, pts).unwrap();
        let inv_sqrt2 = 1.0 / 2.0_f64.sqrt();
        let phi = MultiplierTable::new(
            space
                .points()
                .iter()
                .map(|p| CMatrix::from_fn(2, 1, |i, _| p.coords()[i] * inv_sqrt2))
                .collect(),
        )
        .unwrap();
        let out = factor_at_origin(&space, &phi, DEFAULT_PSD_TOL).unwrap();
        assert!(out.residual <= FACTOR_RESIDUAL_TOL);
        assert!(
            (out.factor_norm - out.column_norm).abs() <= 1e-6,
            "norms {} vs {}",
            out.factor_norm,
            out.column_norm
        );
        // The closed-form factor reproduces the column exactly.
        let explicit = MultiplierTable::constant(
            4,
            CMatrix::from_fn(4, 1, |i, _| {
                if i == 0 || i == 3 {
                    c(inv_sqrt2, 0.0)
                } else {
                    c(0.0, 0.0)
                }
            }),
        )
        .unwrap();
        let recon = multiply(&out.theta, &explicit).unwrap();
        for j in 0..4 {
            assert!(max_abs_entry(&(phi.value(j) - recon.value(j))) <= 1e-15);
        }
        // On a finite restriction the column norm cannot exceed 1.
        assert!(out.column_norm <= 1.0 + 1e-9);
    }

    #[test]
    fn factor_at_origin_norm_equality_random() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(73);
        for trial in 0..20 {
            let d = rng.gen_range(1..=3);
            let n = rng.gen_range(2..=5);
            let big_n = rng.gen_range(1..=3);
            let space = da_space_with_origin(d, n, &mut rng);
            let raw = random_contractive_column(&space, big_n, 1.0, &mut rng).unwrap();
            // Zero out the value at the origin, then the norm changes; the
            // factorization works for any contractive column vanishing at 0.
            let origin = space.index_of_origin().unwrap();
            let mut values = raw.values().to_vec();
            values[origin] = CMatrix::zeros(big_n, 1);
            let phi = MultiplierTable::new(values).unwrap();
            let out = factor_at_origin(&space, &phi, DEFAULT_PSD_TOL).unwrap();
            assert!(out.residual <= FACTOR_RESIDUAL_TOL, "trial {trial}");
            assert!(
                (out.factor_norm - out.column_norm).abs() <= 1e-6,
                "trial {trial}: {} vs {}",
                out.factor_norm,
                out.column_norm
            );
        }
    }

    #[test]
    fn factor_at_origin_structured_regression() {
        // The instance behind `eigen_repairs_structured_gram_regression` in
        // linalg: one variable, origin plus two points at radii ~0.73 and
        // ~0.18, a 3x1 column vanishing at the origin and normalized to sit
        // 1e-7 inside the ball. The iterative eigensolver previously used
        // here broke the lurking isometry on its source Gram and drove the
        // transfer residual to 1.06e-2; the full pipeline is pinned end to
        // end so the defect cannot silently return.
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(787);
        let d = rng.gen_range(1..=3);
        let n = rng.gen_range(2..=5);
        let big_n = rng.gen_range(1..=3);
        let mut pts = vec![BallPoint::origin(d)];
        pts.extend(sample_ball_points(d, n - 1, 0.75, 0.1, &mut rng).unwrap());
        let space = FiniteKernelSpace::new(KernelModel::DruryArveson { dim: d }, pts).unwrap();
        let raw = random_contractive_column(&space, big_n, 1.0, &mut rng).unwrap();
        let mut values = raw.values().to_vec();
        values[0] = CMatrix::zeros(big_n, 1);
        let phi = MultiplierTable::new(values).unwrap();
        let out = factor_at_origin(&space, &phi, DEFAULT_PSD_TOL).unwrap();
        assert!(
            out.residual <= FACTOR_RESIDUAL_TOL,
            "residual {:.3e}",
            out.residual
        );
        assert!(
            (out.factor_norm - out.column_norm).abs() <= 1e-6,
            "{} vs {}",
            out.factor_norm,
            out.column_norm
        );
    }

    #[test]
    fn factor_at_origin_requires_vanishing_value() {
        let space = FiniteKernelSpace::new(
            KernelModel::DruryArveson { dim: 1 },
            vec![
                BallPoint::origin(1),
                BallPoint::from_reals(&[0.5]).unwrap(),
            ],
        )
        .unwrap();
        let phi = MultiplierTable::scalar(&[c(0.3, 0.0), c(0.2, 0.0)]).unwrap();
        assert!(factor_at_origin(&space, &phi, DEFAULT_PSD_TOL).is_err());
    }

    #[test]
    fn factor_of_zero_column_is_zero() {
        let space = FiniteKernelSpace::new(
            KernelModel::DruryArveson { dim: 2 },
            vec![
                BallPoint::origin(2),
                BallPoint::new(vec![c(0.3, 0.0), c(0.0, 0.4)]).unwrap(),
            ],
        )
        .unwrap();
        let phi = MultiplierTable::zeros(2, 2, 1).unwrap();
        let out = factor_at_origin(&space, &phi, DEFAULT_PSD_TOL).unwrap();
        assert_eq!(out.factor_norm, 0.0);
        assert!(out.psi.values().iter().all(|v| max_abs_entry(v) == 0.0));
    }

    #[test]
    fn schur_reduce_matches_the_full_pick_test() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(79);
        for trial in 0..20 {
            let d = rng.gen_range(1..=3);
            let n = rng.gen_range(2..=5);
            let big_n = rng.gen_range(1..=3);
            let space = da_space_with_origin(d, n, &mut rng);
            let origin = space.index_of_origin().unwrap();
            let margin = if trial % 2 == 0 { 0.9 } else { 1.25 };
            let raw = random_contractive_column(&space, big_n, margin, &mut rng).unwrap();
            let mut values = raw.values().to_vec();
            values[origin] = CMatrix::zeros(big_n, 1);
            let phi = MultiplierTable::new(values).unwrap();
            let reduced = schur_reduce(&space, &phi).unwrap();
            let direct = pick_feasible(&space, &space, &phi, 1.0).unwrap();
            let via_schur = is_psd(&reduced, 1e-9).unwrap().verdict;
            assert_eq!(direct, via_schur, "trial {trial} (margin {margin})");
        }
    }

    #[test]
    fn schur_reduce_agrees_with_generic_schur_complement() {
        // With the origin stored last, eliminating the origin block of the
        // Pick matrix via the generic Schur complement gives the same
        // reduced matrix.
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(83);
        let mut pts = sample_ball_points(2, 3, 0.7, 0.2, &mut rng).unwrap();
        pts.push(BallPoint::origin(2));
        let space = FiniteKernelSpace::new(KernelModel::DruryArveson { dim: 2 }, pts).unwrap();
        let big_n = 2;
        let raw = random_contractive_column(&space, big_n, 0.9, &mut rng).unwrap();
        let mut values = raw.values().to_vec();
        values[3] = CMatrix::zeros(big_n, 1);
        let phi = MultiplierTable::new(values).unwrap();

        let reduced = schur_reduce(&space, &phi).unwrap();
        let full = pick_matrix(&space, &space, &phi, 1.0).unwrap();
        let complement = crate::linalg::schur_complement(&full.matrix, big_n).unwrap();
        assert!(
            max_abs_entry(&(reduced.as_matrix() - complement.as_matrix())) <= 1e-12
        );
    }

    #[test]
    fn z_row_lift_of_the_constant_diagonal() {
        // psi = diag(1/sqrt(2), 1/sqrt(2)) lifts to the row (z1, z2)/sqrt(2),
        // whose norm on any restriction is at most 1/sqrt(2).
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(89);
        let space = da_space_with_origin(2, 4, &mut rng);
        let inv_sqrt2 = 1.0 / 2.0_f64.sqrt();
        let psi = MultiplierTable::constant(
            4,
            CMatrix::from_fn(2, 2, |i, j| {
                if i == j {
                    c(inv_sqrt2, 0.0)
                } else {
                    c(0.0, 0.0)
                }
            }),
        )
        .unwrap();
        let row = z_row_lift(&space, &psi).unwrap();
        assert_eq!(row.out_dim(), 1);
        assert_eq!(row.in_dim(), 2);
        for (j, p) in space.points().iter().enumerate() {
            for k in 0..2 {
                let expected = p.coords()[k] * inv_sqrt2;
                assert!((row.value(j)[(0, k)] - expected).norm() <= 1e-15);
            }
        }
        let norm = multiplier_norm(&space, &space, &row, 1e-10).unwrap();
        assert!(norm <= inv_sqrt2 + 1e-7, "row norm {norm}");
    }

    #[test]
    fn schur_step_recovers_the_transpose() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(97);
        for trial in 0..10 {
            let d = rng.gen_range(1..=3);
            let n = rng.gen_range(2..=4);
            let big_n = rng.gen_range(1..=3);
            let pts = sample_ball_points(d, n, 0.7, 0.2, &mut rng).unwrap();
            let space =
                FiniteKernelSpace::new(KernelModel::DruryArveson { dim: d }, pts).unwrap();
            let phi = random_contractive_column(&space, big_n, 1.0, &mut rng).unwrap();
            let step = schur_step(&space, &phi, DEFAULT_PSD_TOL).unwrap();
            assert!(
                step.transpose_residual <= FACTOR_RESIDUAL_TOL,
                "trial {trial}: residual {:.3e}",
                step.transpose_residual
            );
            assert_eq!(step.pulled_space.index_of_origin(), Some(0));
            assert!(max_abs_entry(step.adjusted_column.value(0)) <= 1e-12);
            assert!((step.factor_norm - step.column_norm).abs() <= 1e-6);
            // The row table is contractive: this is the column-row property
            // realized through the constructive factorization.
            assert!(pick_feasible(
                &step.pulled_space,
                &step.pulled_space,
                &step.row_table,
                1.0 + CONTRACTIVITY_SLACK
            )
            .unwrap());
        }
    }

    #[test]
    fn pair_factor_through_the_ratio_rows() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(101);
        let pts = vec![
            BallPoint::from_reals(&[0.0]).unwrap(),
            BallPoint::from_reals(&[0.45]).unwrap(),
            BallPoint::from_reals(&[-0.3]).unwrap(),
        ];
        let pair = FiniteKernelSpace::new(
            KernelModel::Pair {
                source: Box::new(KernelModel::DruryArveson { dim: 1 }),
                target: Box::new(KernelModel::PowerKernel { dim: 1, exponent: 2.0 }),
            },
            pts,
        )
        .unwrap();
        let src = crate::kernels::pair_source_space(&pair).unwrap();
        for trial in 0..5 {
            let big_n = 1 + trial % 3;
            let phi = crate::multipliers::random_contractive_column_pair(
                &src, &pair, big_n, 0.9, &mut rng,
            )
            .unwrap();
            let out = pair_factor(&pair, &phi, DEFAULT_PSD_TOL).unwrap();
            assert!(out.residual <= FACTOR_RESIDUAL_TOL, "trial {trial}");
            assert!(
                out.factor_norm <= out.column_norm + 1e-6,
                "trial {trial}: {} vs {}",
                out.factor_norm,
                out.column_norm
            );
        }
    }
}
