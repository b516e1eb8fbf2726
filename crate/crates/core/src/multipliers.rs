//! Multiplier tables, Pick assemblies and the bisection norm.
//!
//! A multiplier between finite restrictions is just its table of matrix
//! values, one `out_dim x in_dim` matrix per point. Its norm as a
//! multiplier from the source space into the target space is the smallest
//! `t >= 0` making the block matrix
//!
//! ```text
//!   [ t^2 K_dst(p_i, p_j) I  -  K_src(p_i, p_j) F(p_i) F(p_j)* ]_{i,j}
//! ```
//!
//! positive semidefinite. Feasibility is monotone in `t`, so the norm is
//! computed by bracketing followed by bisection.

use num_complex::Complex64;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::kernels::FiniteKernelSpace;
use crate::linalg::{is_psd, operator_norm, CMatrix, HermitianMatrix};

/// Absolute tolerance the bisection narrows the norm bracket to by default.
pub const DEFAULT_BISECTION_TOL: f64 = 1e-10;

/// Relative PSD tolerance used for feasibility tests *inside* the
/// bisection loop.
///
/// This is deliberately much tighter than the default verdict tolerance: a
/// lenient feasibility test biases the computed norm downward by roughly
/// `tolerance x condition(Gram)`, which would eat the error budgets of the
/// verification suites on ill-conditioned point sets. 1e-12 still leaves
/// three orders of magnitude of headroom above eigensolver noise.
pub const BISECTION_PSD_TOL: f64 = 1e-12;

pub(crate) const MAX_BISECTION_STEPS: usize = 200;
pub(crate) const MAX_BRACKET_DOUBLINGS: usize = 60;

/// The values of a (matrix-valued) multiplier on a finite point list.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierTable {
    out_dim: usize,
    in_dim: usize,
    values: Vec<CMatrix>,
}

impl MultiplierTable {
    /// Validates a non-empty list of equally shaped, finite matrices.
    pub fn new(values: Vec<CMatrix>) -> Result<Self> {
        let Some(first) = values.first() else {
            return Err(Error::InvalidInput("multiplier table needs at least one value".into()));
        };
        let (q, p) = (first.nrows(), first.ncols());
        if q == 0 || p == 0 {
            return Err(Error::InvalidInput("multiplier values must be non-empty matrices".into()));
        }
        for (i, v) in values.iter().enumerate() {
            if v.nrows() != q || v.ncols() != p {
                return Err(Error::InvalidInput(format!(
                    "value {i} has shape {}x{}, expected {q}x{p}",
                    v.nrows(),
                    v.ncols()
                )));
            }
            crate::linalg::check_finite(v, "multiplier value")?;
        }
        Ok(Self {
            out_dim: q,
            in_dim: p,
            values,
        })
    }

    /// A scalar-valued table from one complex number per point.
    pub fn scalar(values: &[Complex64]) -> Result<Self> {
        Self::new(
            values
                .iter()
                .map(|&z| CMatrix::from_element(1, 1, z))
                .collect(),
        )
    }

    /// The same matrix at every point.
    pub fn constant(n_points: usize, value: CMatrix) -> Result<Self> {
        if n_points == 0 {
            return Err(Error::InvalidInput("multiplier table needs at least one value".into()));
        }
        Self::new(vec![value; n_points])
    }

    /// The zero table of the given shape.
    pub fn zeros(n_points: usize, out_dim: usize, in_dim: usize) -> Result<Self> {
        Self::constant(n_points, CMatrix::zeros(out_dim, in_dim))
    }

    pub fn n_points(&self) -> usize {
        self.values.len()
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn value(&self, i: usize) -> &CMatrix {
        &self.values[i]
    }

    pub fn values(&self) -> &[CMatrix] {
        &self.values
    }

    /// Entrywise (unconjugated) transpose at every point.
    pub fn transpose(&self) -> Self {
        Self {
            out_dim: self.in_dim,
            in_dim: self.out_dim,
            values: self.values.iter().map(CMatrix::transpose).collect(),
        }
    }

    /// Pointwise scaling.
    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            out_dim: self.out_dim,
            in_dim: self.in_dim,
            values: self.values.iter().map(|v| v.map(|z| z * c)).collect(),
        }
    }

    /// Restriction to a subset of points (same index checks as spaces).
    pub fn restrict(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidInput("restriction to the empty set".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for &i in indices {
            if i >= self.values.len() {
                return Err(Error::InvalidInput(format!("restriction index {i} out of range")));
            }
            if !seen.insert(i) {
                return Err(Error::InvalidInput(format!("restriction index {i} repeated")));
            }
        }
        Ok(Self {
            out_dim: self.out_dim,
            in_dim: self.in_dim,
            values: indices.iter().map(|&i| self.values[i].clone()).collect(),
        })
    }
}

/// Pointwise product `(lhs * rhs)(p) = lhs(p) rhs(p)`.
pub fn multiply(lhs: &MultiplierTable, rhs: &MultiplierTable) -> Result<MultiplierTable> {
    if lhs.n_points() != rhs.n_points() {
        return Err(Error::InvalidInput("tables have different point counts".into()));
    }
    if lhs.in_dim() != rhs.out_dim() {
        return Err(Error::InvalidInput(format!(
            "inner dimensions do not match: {} vs {}",
            lhs.in_dim(),
            rhs.out_dim()
        )));
    }
    MultiplierTable::new(
        lhs.values
            .iter()
            .zip(&rhs.values)
            .map(|(a, b)| a * b)
            .collect(),
    )
}

/// Reinterprets a column of `rows * cols` scalar components as a
/// `rows x cols` matrix multiplier.
///
/// The fixed vectorization order is column-major: matrix entry `(i, j)`
/// (0-based) is read from column component `j * rows + i`. This is also
/// the order used by the JSON schema for reshaped tables.
pub fn reshape_column_to_matrix(
    column: &MultiplierTable,
    rows: usize,
    cols: usize,
) -> Result<MultiplierTable> {
    if column.in_dim() != 1 {
        return Err(Error::InvalidInput("reshape expects a column (in_dim 1)".into()));
    }
    if rows * cols != column.out_dim() {
        return Err(Error::InvalidInput(format!(
            "cannot reshape a column of {} components into {rows}x{cols}",
            column.out_dim()
        )));
    }
    MultiplierTable::new(
        column
            .values
            .iter()
            .map(|v| CMatrix::from_fn(rows, cols, |i, j| v[(j * rows + i, 0)]))
            .collect(),
    )
}

/// A Pick block matrix at threshold `t`.
#[derive(Debug, Clone)]
pub struct PickAssembly {
    /// The symmetrized `n*q x n*q` block matrix.
    pub matrix: HermitianMatrix,
    /// Threshold the assembly was built at.
    pub t: f64,
}

fn check_shared_points(src: &FiniteKernelSpace, dst: &FiniteKernelSpace) -> Result<()> {
    if src.n_points() != dst.n_points() || src.points() != dst.points() {
        return Err(Error::InvalidInput(
            "source and target spaces must share the same point list".into(),
        ));
    }
    Ok(())
}

/// Builds the Pick assembly `[t^2 K_dst_ij I - K_src_ij F_i F_j*]_{i,j}`.
///
/// Block `(i, j)` occupies rows `i*q..(i+1)*q` and columns `j*q..(j+1)*q`
/// where `q` is the table's output dimension.
pub fn pick_matrix(
    src: &FiniteKernelSpace,
    dst: &FiniteKernelSpace,
    table: &MultiplierTable,
    t: f64,
) -> Result<PickAssembly> {
    check_shared_points(src, dst)?;
    if table.n_points() != src.n_points() {
        return Err(Error::InvalidInput(format!(
            "table has {} values but the spaces have {} points",
            table.n_points(),
            src.n_points()
        )));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidInput("threshold t must be finite and >= 0".into()));
    }
    let n = src.n_points();
    let q = table.out_dim();
    let ks = src.gram().as_matrix();
    let kd = dst.gram().as_matrix();
    let t2 = Complex64::new(t * t, 0.0);
    let mut m = CMatrix::zeros(n * q, n * q);
    for i in 0..n {
        for j in 0..n {
            let outer = table.value(i) * table.value(j).adjoint();
            let kdij = kd[(i, j)] * t2;
            let ksij = ks[(i, j)];
            for a in 0..q {
                for b in 0..q {
                    let mut entry = -ksij * outer[(a, b)];
                    if a == b {
                        entry += kdij;
                    }
                    m[(i * q + a, j * q + b)] = entry;
                }
            }
        }
    }
    Ok(PickAssembly {
        matrix: HermitianMatrix::new(m)?,
        t,
    })
}

/// Whether the Pick assembly at `t` is positive semidefinite (the
/// feasibility test driving the bisection).
pub fn pick_feasible(
    src: &FiniteKernelSpace,
    dst: &FiniteKernelSpace,
    table: &MultiplierTable,
    t: f64,
) -> Result<bool> {
    let assembly = pick_matrix(src, dst, table, t)?;
    Ok(is_psd(&assembly.matrix, BISECTION_PSD_TOL)?.verdict)
}

/// Multiplier norm of `table` from `src` into `dst ⊗ C^q`, by bisection.
///
/// The lower bracket is the necessary diagonal-block bound
/// `max_p ||F(p)|| sqrt(K_src(p,p) / K_dst(p,p))`, which reduces to the
/// largest pointwise operator norm when `src` and `dst` coincide; the
/// upper bracket doubles until feasible. The returned value is the
/// feasible endpoint of the final bracket, so the Pick assembly at the
/// returned threshold is positive semidefinite.
pub fn multiplier_norm(
    src: &FiniteKernelSpace,
    dst: &FiniteKernelSpace,
    table: &MultiplierTable,
    tol: f64,
) -> Result<f64> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidInput("bisection tolerance must be positive".into()));
    }
    check_shared_points(src, dst)?;
    let n = src.n_points();
    if table.n_points() != n {
        return Err(Error::InvalidInput("table and spaces disagree on the point count".into()));
    }
    let mut lo = 0.0f64;
    for i in 0..n {
        let ks = src.k(i, i).re;
        let kd = dst.k(i, i).re;
        if !(kd > 0.0) {
            return Err(Error::Domain(format!(
                "target Gram has non-positive diagonal entry at point {i}"
            )));
        }
        let bound = operator_norm(table.value(i))? * (ks.max(0.0) / kd).sqrt();
        lo = lo.max(bound);
    }
    if pick_feasible(src, dst, table, lo)? {
        return Ok(lo);
    }
    let mut hi = lo.max(1.0) * 2.0;
    let mut doublings = 0;
    while !pick_feasible(src, dst, table, hi)? {
        hi *= 2.0;
        doublings += 1;
        if doublings > MAX_BRACKET_DOUBLINGS {
            return Err(Error::Numeric(
                "could not bracket the multiplier norm; Gram may be degenerate".into(),
            ));
        }
    }
    let mut steps = 0;
    while hi - lo > tol {
        steps += 1;
        if steps > MAX_BISECTION_STEPS {
            return Err(Error::Numeric("bisection exceeded the step limit".into()));
        }
        let mid = 0.5 * (lo + hi);
        if pick_feasible(src, dst, table, mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Draws a random column multiplier (out dim `n_out`, in dim 1) with
/// prescribed column norm `margin` between the given spaces.
///
/// Entries are iid complex standard Gaussians which are then rescaled by
/// `margin / computed norm`; by homogeneity the resulting table's norm is
/// `margin` up to bisection tolerance.
pub fn random_contractive_column_pair<R: rand::Rng>(
    src: &FiniteKernelSpace,
    dst: &FiniteKernelSpace,
    n_out: usize,
    margin: f64,
    rng: &mut R,
) -> Result<MultiplierTable> {
    if !(margin.is_finite() && margin > 0.0) {
        return Err(Error::InvalidInput("margin must be positive".into()));
    }
    if n_out == 0 {
        return Err(Error::InvalidInput("column needs at least one component".into()));
    }
    for _ in 0..16 {
        let values: Vec<CMatrix> = (0..src.n_points())
            .map(|_| {
                CMatrix::from_fn(n_out, 1, |_, _| {
                    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
                })
            })
            .collect();
        let raw = MultiplierTable::new(values)?;
        let norm = multiplier_norm(src, dst, &raw, DEFAULT_BISECTION_TOL)?;
        if norm > 1e-9 {
            return Ok(raw.scale(Complex64::new(margin / norm, 0.0)));
        }
    }
    Err(Error::Numeric("random column kept collapsing to norm zero".into()))
}

/// Single-space version of [`random_contractive_column_pair`].
pub fn random_contractive_column<R: rand::Rng>(
    space: &FiniteKernelSpace,
    n_out: usize,
    margin: f64,
    rng: &mut R,
) -> Result<MultiplierTable> {
    random_contractive_column_pair(space, space, n_out, margin, rng)
}

/// Lower bound for the norm of a matrix multiplier `psi` obtained by
/// testing it against sampled contractive columns: the norm of `psi * F`
/// over columns `F` of norm one never exceeds the norm of `psi`.
pub fn column_product_lower_bound<R: rand::Rng>(
    space: &FiniteKernelSpace,
    psi: &MultiplierTable,
    trials: usize,
    rng: &mut R,
) -> Result<f64> {
    if trials == 0 {
        return Err(Error::InvalidInput("need at least one trial".into()));
    }
    let mut best = 0.0f64;
    for _ in 0..trials {
        let column = random_contractive_column(space, psi.in_dim(), 1.0, rng)?;
        let product = multiply(psi, &column)?;
        let norm = multiplier_norm(space, space, &product, DEFAULT_BISECTION_TOL)?;
        best = best.max(norm);
    }
    Ok(best)
}
