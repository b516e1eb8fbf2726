//! Automorphisms of the unit ball and their matrix-ball analogues.
//!
//! Every automorphism of the ball is an involution composed with a
//! unitary; the stored normal form is `theta = theta_a . U*` where
//! `theta_a` swaps `0` and `a`. Domain pull-backs along automorphisms
//! leave multiplier norms invariant, and the column Moebius form moves
//! the values of a column multiplier inside the operator ball.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernels::{BallPoint, FiniteKernelSpace, KernelModel};
use crate::linalg::{hermitian_eigen, max_abs_entry, CMatrix, HermitianMatrix};
use crate::multipliers::MultiplierTable;

/// Largest allowed deviation of the stored unitary from unitarity.
pub const UNITARY_TOL: f64 = 1e-10;

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

/// The involution `theta_a` of the ball swapping `0` and `a`:
/// `theta_a(z) = (a - P_a z - s_a Q_a z) / (1 - <z, a>)` with `P_a` the
/// projection onto the span of `a` and `s_a = sqrt(1 - |a|^2)`. For
/// `a = 0` this is `z -> -z`.
pub fn involution_eval(a: &BallPoint, z: &BallPoint) -> Result<BallPoint> {
    if a.dim() != z.dim() {
        return Err(Error::InvalidInput("involution point dimensions differ".into()));
    }
    let na2: f64 = a.coords().iter().map(|c| c.norm_sqr()).sum();
    if na2 == 0.0 {
        return BallPoint::new(z.coords().iter().map(|c| -c).collect());
    }
    let s = (1.0 - na2).sqrt();
    let ip = z.inner(a); // <z, a>
    let coeff = ip / na2;
    let coords: Vec<Complex64> = a
        .coords()
        .iter()
        .zip(z.coords())
        .map(|(&ak, &zk)| {
            let p = coeff * ak; // (P_a z)_k
            let q = zk - p; // (Q_a z)_k
            (ak - p - s * q) / (one() - ip)
        })
        .collect();
    BallPoint::new(coords)
}

/// An automorphism of the ball in the normal form `theta = theta_a . U*`,
/// so `theta(0) = a` and `theta^{-1} = U . theta_a`.
#[derive(Debug, Clone)]
pub struct BallAutomorphism {
    a: BallPoint,
    unitary: CMatrix,
}

impl BallAutomorphism {
    /// Validates dimensions and unitarity (within [`UNITARY_TOL`]).
    pub fn new(a: BallPoint, unitary: CMatrix) -> Result<Self> {
        let d = a.dim();
        if unitary.nrows() != d || unitary.ncols() != d {
            return Err(Error::InvalidInput(format!(
                "unitary must be {d}x{d} to match the base point"
            )));
        }
        crate::linalg::check_finite(&unitary, "automorphism unitary")?;
        let defect = unitary.adjoint() * &unitary - CMatrix::identity(d, d);
        let dev = max_abs_entry(&defect);
        if dev > UNITARY_TOL {
            return Err(Error::InvalidInput(format!(
                "matrix is not unitary (deviation {dev:.3e})"
            )));
        }
        Ok(Self { a, unitary })
    }

    /// The involution `theta_a` (unitary part = identity).
    pub fn involution(a: BallPoint) -> Self {
        let d = a.dim();
        Self {
            a,
            unitary: CMatrix::identity(d, d),
        }
    }

    /// The identity automorphism of the ball of C^d.
    pub fn identity(d: usize) -> Self {
        Self::involution(BallPoint::origin(d))
            .compose_unitary_unchecked(-CMatrix::identity(d, d))
    }

    fn compose_unitary_unchecked(mut self, u: CMatrix) -> Self {
        self.unitary = u;
        self
    }

    /// The image of the origin.
    pub fn image_of_zero(&self) -> &BallPoint {
        &self.a
    }

    pub fn unitary(&self) -> &CMatrix {
        &self.unitary
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    /// `theta(z) = theta_a(U* z)`.
    pub fn eval(&self, z: &BallPoint) -> Result<BallPoint> {
        let uz = self.apply_matrix(&self.unitary.adjoint(), z)?;
        involution_eval(&self.a, &uz)
    }

    /// `theta^{-1}(z) = U theta_a(z)`.
    pub fn inverse_eval(&self, z: &BallPoint) -> Result<BallPoint> {
        let tz = involution_eval(&self.a, z)?;
        self.apply_matrix(&self.unitary, &tz)
    }

    fn apply_matrix(&self, m: &CMatrix, z: &BallPoint) -> Result<BallPoint> {
        if z.dim() != self.dim() {
            return Err(Error::InvalidInput("point dimension mismatch".into()));
        }
        let v = CMatrix::from_fn(self.dim(), 1, |i, _| z.coords()[i]);
        let w = m * v;
        BallPoint::new((0..self.dim()).map(|i| w[(i, 0)]).collect())
    }
}

/// Hermitian square root of a positive semidefinite matrix; eigenvalues
/// below zero (rounding noise) are clamped to zero.
pub fn psd_sqrt(h: &HermitianMatrix) -> Result<CMatrix> {
    let eig = hermitian_eigen(h)?;
    let n = h.dim();
    let mut scaled = eig.eigenvectors.clone();
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        let root = Complex64::new(lambda.max(0.0).sqrt(), 0.0);
        for i in 0..n {
            scaled[(i, k)] *= root;
        }
    }
    Ok(scaled * eig.eigenvectors.adjoint())
}

/// Column Moebius form: for columns `a`, `z` in the unit ball of C^{N x 1},
///
/// `theta_a(z) = (I - a a*)^{1/2} (I - z a*)^{-1} (a - z) (1 - a* a)^{-1/2}`.
///
/// This is the matrix-ball involution swapping the zero column and `a`.
pub fn column_mobius_eval(a: &CMatrix, z: &CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    if a.ncols() != 1 || z.ncols() != 1 || z.nrows() != n {
        return Err(Error::InvalidInput("column moebius form expects N x 1 columns".into()));
    }
    let na = a.norm();
    let nz = z.norm();
    if na >= 1.0 || nz >= 1.0 {
        return Err(Error::Domain(format!(
            "column moebius form needs |a| < 1 and |Z| < 1 (got {na}, {nz})"
        )));
    }
    let id = CMatrix::identity(n, n);
    let sqrt = psd_sqrt(&HermitianMatrix::new(&id - a * a.adjoint())?)?;
    let m = &id - z * a.adjoint();
    let rhs = a - z;
    let solved = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Domain("I - Z a* is singular".into()))?;
    let scale = Complex64::new(1.0 / (1.0 - na * na).sqrt(), 0.0);
    Ok(sqrt * solved * scale)
}

/// Pulls a space and a multiplier table back along an automorphism: the
/// returned space lives over `theta^{-1}(F)` and the returned table is
/// `F . theta`, whose value at `theta^{-1}(p)` is the original value at
/// `p`. Multiplier norms are invariant under this operation.
///
/// Defined for ball models (standard and power kernels), whose Grams
/// transform by a diagonal congruence under automorphisms.
pub fn pull_back_domain(
    space: &FiniteKernelSpace,
    table: &MultiplierTable,
    theta: &BallAutomorphism,
) -> Result<(FiniteKernelSpace, MultiplierTable)> {
    match space.model() {
        KernelModel::DruryArveson { .. } | KernelModel::PowerKernel { .. } => {}
        _ => {
            return Err(Error::InvalidInput(
                "domain pull-back requires a ball model (standard or power kernel)".into(),
            ))
        }
    }
    if theta.dim() != space.dim() {
        return Err(Error::InvalidInput("automorphism dimension does not match the space".into()));
    }
    if table.n_points() != space.n_points() {
        return Err(Error::InvalidInput("table and space disagree on the point count".into()));
    }
    let preimages: Vec<BallPoint> = space
        .points()
        .iter()
        .map(|p| theta.inverse_eval(p))
        .collect::<Result<_>>()?;
    let pulled_space = FiniteKernelSpace::new(space.model().clone(), preimages)?;
    Ok((pulled_space, table.clone()))
}

/// Applies the column involution `theta_a` to every value of a column
/// multiplier table: the result has values `theta_a(F(p))`.
///
/// With `a = F(p0)` this makes the new column vanish at `p0`; column
/// multiplier norms at most 1 are preserved (matrix-ball automorphisms act
/// on the closed multiplier ball).
pub fn apply_range_automorphism(table: &MultiplierTable, a: &CMatrix) -> Result<MultiplierTable> {
    if table.in_dim() != 1 {
        return Err(Error::InvalidInput("range automorphisms act on column tables".into()));
    }
    if a.ncols() != 1 || a.nrows() != table.out_dim() {
        return Err(Error::InvalidInput(
            "automorphism parameter must be a column matching the table's output dimension".into(),
        ));
    }
    MultiplierTable::new(
        table
            .values()
            .iter()
            .map(|v| column_mobius_eval(a, v))
            .collect::<Result<_>>()?,
    )
}
