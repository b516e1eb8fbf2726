//! Kernel models and their finite-point restrictions.
//!
//! A [`FiniteKernelSpace`] is a kernel model together with a finite list of
//! pairwise-distinct points and the cached Gram matrix of kernel values.
//! Every downstream operation (Pick assemblies, norms, factorizations)
//! consumes the cached Gram, so rescaling a space at a base point simply
//! replaces the Gram while keeping model and points for bookkeeping.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    gram_factor, is_psd, CMatrix, HermitianMatrix, DEFAULT_PSD_TOL, DEFAULT_RANK_TOL,
};

/// A point of the open unit ball of C^d.
#[derive(Debug, Clone, PartialEq)]
pub struct BallPoint {
    coords: Vec<Complex64>,
}

impl BallPoint {
    /// Validates finiteness and `|z| < 1`.
    pub fn new(coords: Vec<Complex64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidInput("ball point needs at least one coordinate".into()));
        }
        if coords.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidInput("ball point has a non-finite coordinate".into()));
        }
        let norm_sq: f64 = coords.iter().map(|z| z.norm_sqr()).sum();
        if norm_sq >= 1.0 {
            return Err(Error::InvalidInput(format!(
                "point lies outside the open unit ball (|z|^2 = {norm_sq})"
            )));
        }
        Ok(Self { coords })
    }

    /// Convenience constructor for real coordinates.
    pub fn from_reals(coords: &[f64]) -> Result<Self> {
        Self::new(coords.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// The origin of C^d.
    pub fn origin(dim: usize) -> Self {
        Self {
            coords: vec![Complex64::new(0.0, 0.0); dim.max(1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Complex64] {
        &self.coords
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        self.coords.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Hermitian inner product `<z, w>`, linear in `self`.
    pub fn inner(&self, other: &BallPoint) -> Complex64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a * b.conj())
            .sum()
    }
}

/// The kernel families the laboratory works with.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelModel {
    /// `1 / (1 - <z, w>)` on the ball of C^dim.
    DruryArveson { dim: usize },
    /// `(1 - <z, w>)^(-exponent)` (principal branch), exponent > 0.
    PowerKernel { dim: usize, exponent: f64 },
    /// A kernel given through a normalized embedding: abstract points
    /// `ids[i]` carry embedding values `b(x_i)` in a ball, and the kernel is
    /// `1 / (1 - <b(z), b(w)>)`.
    NormalizedCp {
        ids: Vec<String>,
        embedding: Vec<BallPoint>,
        basepoint: usize,
    },
    /// A source/target pair over a shared point set, used for two-kernel
    /// multiplier problems. The Gram of a pair space is the target Gram;
    /// positivity of the entrywise ratio target/source is certified when a
    /// point set is attached.
    Pair {
        source: Box<KernelModel>,
        target: Box<KernelModel>,
    },
}

impl KernelModel {
    /// Ambient ball dimension of the points this model evaluates on.
    pub fn dim(&self) -> usize {
        match self {
            KernelModel::DruryArveson { dim } | KernelModel::PowerKernel { dim, .. } => *dim,
            KernelModel::NormalizedCp { embedding, .. } => {
                embedding.first().map_or(0, BallPoint::dim)
            }
            KernelModel::Pair { target, .. } => target.dim(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            KernelModel::DruryArveson { dim } => {
                if *dim == 0 {
                    return Err(Error::InvalidInput("ball dimension must be >= 1".into()));
                }
            }
            KernelModel::PowerKernel { dim, exponent } => {
                if *dim == 0 {
                    return Err(Error::InvalidInput("ball dimension must be >= 1".into()));
                }
                if !(exponent.is_finite() && *exponent > 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "power-kernel exponent must be positive and finite, got {exponent}"
                    )));
                }
            }
            KernelModel::NormalizedCp {
                ids,
                embedding,
                basepoint,
            } => {
                if ids.is_empty() || ids.len() != embedding.len() {
                    return Err(Error::InvalidInput(
                        "normalized-cp model needs matching non-empty ids and embedding".into(),
                    ));
                }
                let mut seen = std::collections::HashSet::new();
                if !ids.iter().all(|id| seen.insert(id.as_str())) {
                    return Err(Error::InvalidInput("duplicate ids in normalized-cp model".into()));
                }
                if *basepoint >= ids.len() {
                    return Err(Error::InvalidInput(format!(
                        "basepoint index {basepoint} out of range"
                    )));
                }
                let d = embedding[0].dim();
                if embedding.iter().any(|b| b.dim() != d) {
                    return Err(Error::InvalidInput(
                        "embedding values must share one ball dimension".into(),
                    ));
                }
            }
            KernelModel::Pair { source, target } => {
                if matches!(**source, KernelModel::Pair { .. })
                    || matches!(**target, KernelModel::Pair { .. })
                {
                    return Err(Error::InvalidInput("pair models cannot nest".into()));
                }
                source.validate()?;
                target.validate()?;
                if source.dim() != target.dim() {
                    return Err(Error::InvalidInput(
                        "pair source and target must share the ball dimension".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Evaluates the kernel at a pair of ball points.
///
/// For `NormalizedCp` the arguments are the embedding values themselves
/// (the model's kernel is the standard one on the embedded points).
pub fn kernel_eval(model: &KernelModel, z: &BallPoint, w: &BallPoint) -> Result<Complex64> {
    let d = model.dim();
    if z.dim() != d || w.dim() != d {
        return Err(Error::InvalidInput(format!(
            "point dimension {}/{} does not match model dimension {d}",
            z.dim(),
            w.dim()
        )));
    }
    let s = z.inner(w);
    if s.norm() >= 1.0 {
        return Err(Error::Domain(format!(
            "|<z,w>| = {} >= 1, kernel undefined",
            s.norm()
        )));
    }
    let one = Complex64::new(1.0, 0.0);
    match model {
        KernelModel::DruryArveson { .. } | KernelModel::NormalizedCp { .. } => Ok(one / (one - s)),
        KernelModel::PowerKernel { exponent, .. } => Ok((one - s).powf(-exponent)),
        KernelModel::Pair { target, .. } => kernel_eval(target, z, w),
    }
}

/// Extra data carried by spaces over a [`KernelModel::Pair`].
#[derive(Debug, Clone)]
pub struct PairData {
    /// Gram of the source kernel on the same points.
    pub source_gram: HermitianMatrix,
    /// Rows `G(p_i)` of a factorization `target/source = G G*` (n x g).
    pub factor: CMatrix,
}

/// A kernel model restricted to finitely many pairwise-distinct points,
/// together with its cached Gram matrix.
#[derive(Debug, Clone)]
pub struct FiniteKernelSpace {
    model: KernelModel,
    points: Vec<BallPoint>,
    labels: Option<Vec<String>>,
    gram: HermitianMatrix,
    normalized_at: Option<usize>,
    pair_data: Option<PairData>,
}

fn gram_of(model: &KernelModel, points: &[BallPoint]) -> Result<HermitianMatrix> {
    let n = points.len();
    let mut m = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = kernel_eval(model, &points[i], &points[j])?;
        }
    }
    HermitianMatrix::new(m)
}

impl FiniteKernelSpace {
    /// Builds a space over explicit ball points.
    ///
    /// For `NormalizedCp` models pass an empty point list: the embedding
    /// values of the model become the points and the ids become labels.
    /// For `Pair` models the entrywise ratio target/source is certified
    /// positive semidefinite on the given points and Gram-factored.
    pub fn new(model: KernelModel, points: Vec<BallPoint>) -> Result<Self> {
        model.validate()?;
        let (points, labels) = match &model {
            KernelModel::NormalizedCp { ids, embedding, .. } => {
                if !points.is_empty() && points != *embedding {
                    return Err(Error::InvalidInput(
                        "normalized-cp spaces take their points from the embedding table".into(),
                    ));
                }
                (embedding.clone(), Some(ids.clone()))
            }
            _ => (points, None),
        };
        if points.is_empty() {
            return Err(Error::InvalidInput("a kernel space needs at least one point".into()));
        }
        let d = model.dim();
        if points.iter().any(|p| p.dim() != d) {
            return Err(Error::InvalidInput(format!(
                "every point must lie in the model's ball C^{d}"
            )));
        }
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                if points[i] == points[j] {
                    return Err(Error::InvalidInput(format!(
                        "points {i} and {j} coincide; points must be pairwise distinct"
                    )));
                }
            }
        }
        let gram = gram_of(&model, &points)?;
        let pair_data = match &model {
            KernelModel::Pair { source, .. } => {
                let source_gram = gram_of(source, &points)?;
                Some(make_pair_data(source_gram, &gram)?)
            }
            _ => None,
        };
        Ok(Self {
            model,
            points,
            labels,
            gram,
            normalized_at: None,
            pair_data,
        })
    }

    pub fn model(&self) -> &KernelModel {
        &self.model
    }

    pub fn n_points(&self) -> usize {
        self.points.len()
    }

    /// Ambient ball dimension of the stored points.
    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn points(&self) -> &[BallPoint] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &BallPoint {
        &self.points[i]
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// The cached Gram matrix of kernel values (rescaled if the space was
    /// normalized at a base point).
    pub fn gram(&self) -> &HermitianMatrix {
        &self.gram
    }

    /// Kernel value `K(p_i, p_j)` from the cached Gram.
    pub fn k(&self, i: usize, j: usize) -> Complex64 {
        self.gram.as_matrix()[(i, j)]
    }

    /// Index the space was normalized at, if any.
    pub fn normalized_at(&self) -> Option<usize> {
        self.normalized_at
    }

    /// Pair data (source Gram and ratio factor) for pair-model spaces.
    pub fn pair_data(&self) -> Option<&PairData> {
        self.pair_data.as_ref()
    }

    /// Index of the origin among the points, if present.
    pub fn index_of_origin(&self) -> Option<usize> {
        self.points
            .iter()
            .position(|p| p.coords().iter().all(|z| z.re == 0.0 && z.im == 0.0))
    }

    /// Rescales the Gram so that row and column `index` become all ones:
    /// `L(z,w) = K(z,w) K(z0,z0) / (K(z,z0) K(z0,w))`.
    ///
    /// Multiplier norms are invariant under this rescaling; the operation
    /// is idempotent at a fixed base point. Fails if some `K(p_i, z0)`
    /// vanishes.
    pub fn normalize_at(&self, index: usize) -> Result<Self> {
        let n = self.n_points();
        if index >= n {
            return Err(Error::InvalidInput(format!(
                "normalization index {index} out of range for {n} points"
            )));
        }
        let k = self.gram.as_matrix();
        let kbb = k[(index, index)];
        let mut l = CMatrix::zeros(n, n);
        for i in 0..n {
            let kib = k[(i, index)];
            if kib.norm() <= 1e-14 * kbb.norm().max(1.0) {
                return Err(Error::Domain(format!(
                    "kernel vanishes between point {i} and the base point; cannot normalize"
                )));
            }
            for j in 0..n {
                let kbj = k[(index, j)];
                l[(i, j)] = k[(i, j)] * kbb / (kib * kbj);
            }
        }
        let gram = HermitianMatrix::new(l)?;
        let pair_data = match &self.pair_data {
            Some(pd) => Some(make_pair_data(pd.source_gram.clone(), &gram)?),
            None => None,
        };
        Ok(Self {
            model: self.model.clone(),
            points: self.points.clone(),
            labels: self.labels.clone(),
            gram,
            normalized_at: Some(index),
            pair_data,
        })
    }

    /// Restriction to a subset of points (indices must be non-empty,
    /// unique and in range). The Gram is sliced from the cached matrix, so
    /// normalization survives restriction.
    pub fn restrict(&self, indices: &[usize]) -> Result<Self> {
        let n = self.n_points();
        if indices.is_empty() {
            return Err(Error::InvalidInput("restriction to the empty set is not a space".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for &i in indices {
            if i >= n {
                return Err(Error::InvalidInput(format!("restriction index {i} out of range")));
            }
            if !seen.insert(i) {
                return Err(Error::InvalidInput(format!("restriction index {i} repeated")));
            }
        }
        let m = indices.len();
        let slice = |h: &HermitianMatrix| -> Result<HermitianMatrix> {
            HermitianMatrix::new(CMatrix::from_fn(m, m, |a, b| {
                h.as_matrix()[(indices[a], indices[b])]
            }))
        };
        let gram = slice(&self.gram)?;
        let pair_data = match &self.pair_data {
            Some(pd) => Some(make_pair_data(slice(&pd.source_gram)?, &gram)?),
            None => None,
        };
        Ok(Self {
            model: self.model.clone(),
            points: indices.iter().map(|&i| self.points[i].clone()).collect(),
            labels: self
                .labels
                .as_ref()
                .map(|ls| indices.iter().map(|&i| ls[i].clone()).collect()),
            gram,
            normalized_at: self
                .normalized_at
                .and_then(|b| indices.iter().position(|&i| i == b)),
            pair_data,
        })
    }

    /// Re-coordinatizes a `NormalizedCp` space as a genuine ball-model
    /// space: the embedding Gram `<b_i, b_j>` is factored and its rows
    /// become points of a ball of dimension `rank`. The kernel Gram is
    /// unchanged (up to factorization error).
    pub fn embed_to_ball(&self) -> Result<Self> {
        let KernelModel::NormalizedCp { .. } = &self.model else {
            return Err(Error::InvalidInput(
                "embed_to_ball expects a normalized-cp model".into(),
            ));
        };
        let n = self.n_points();
        let b = HermitianMatrix::new(CMatrix::from_fn(n, n, |i, j| {
            self.points[i].inner(&self.points[j])
        }))?;
        let gf = gram_factor(&b, DEFAULT_RANK_TOL, DEFAULT_RANK_TOL)?;
        let dim = gf.rank.max(1);
        let new_points: Vec<BallPoint> = (0..n)
            .map(|i| {
                let mut coords: Vec<Complex64> =
                    (0..gf.rank).map(|k| gf.factor[(i, k)]).collect();
                if coords.is_empty() {
                    coords.push(Complex64::new(0.0, 0.0));
                }
                BallPoint::new(coords)
            })
            .collect::<Result<_>>()?;
        FiniteKernelSpace::new(KernelModel::DruryArveson { dim }, new_points)
    }
}

fn make_pair_data(source_gram: HermitianMatrix, target_gram: &HermitianMatrix) -> Result<PairData> {
    let n = source_gram.dim();
    let s = source_gram.as_matrix();
    let k = target_gram.as_matrix();
    let mut ratio = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let sij = s[(i, j)];
            if sij.norm() <= f64::MIN_POSITIVE {
                return Err(Error::Domain(
                    "source kernel vanishes; target/source ratio undefined".into(),
                ));
            }
            ratio[(i, j)] = k[(i, j)] / sij;
        }
    }
    let ratio = HermitianMatrix::new(ratio)?;
    let report = is_psd(&ratio, DEFAULT_PSD_TOL)?;
    if !report.verdict {
        return Err(Error::NotPsd {
            context: "pair ratio target/source",
            report,
        });
    }
    let gf = gram_factor(&ratio, DEFAULT_PSD_TOL, DEFAULT_RANK_TOL)?;
    Ok(PairData {
        source_gram,
        factor: gf.factor,
    })
}

/// The source-kernel space of a pair space (same points, source model).
pub fn pair_source_space(space: &FiniteKernelSpace) -> Result<FiniteKernelSpace> {
    let KernelModel::Pair { source, .. } = space.model() else {
        return Err(Error::InvalidInput("not a pair-model space".into()));
    };
    FiniteKernelSpace::new((**source).clone(), space.points().to_vec())
}

/// Draws `n` pairwise well-separated points in the ball of C^d.
///
/// Radii are capped by `max_radius` and points closer than `min_separation`
/// to an earlier point are re-drawn, keeping the Gram matrices of test
/// instances reasonably conditioned. Deterministic given the RNG state.
pub fn sample_ball_points<R: rand::Rng>(
    d: usize,
    n: usize,
    max_radius: f64,
    min_separation: f64,
    rng: &mut R,
) -> Result<Vec<BallPoint>> {
    use rand_distr::StandardNormal;
    if d == 0 || n == 0 {
        return Err(Error::InvalidInput("need d >= 1 and n >= 1".into()));
    }
    let mut points: Vec<BallPoint> = Vec::with_capacity(n);
    let mut attempts = 0usize;
    while points.len() < n {
        attempts += 1;
        if attempts > 1000 * n {
            return Err(Error::Numeric(
                "could not place separated points; relax the separation".into(),
            ));
        }
        let dir: Vec<Complex64> = (0..d)
            .map(|_| {
                Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
            })
            .collect();
        let norm = dir.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-9 {
            continue;
        }
        let u: f64 = rng.gen_range(0.0f64..1.0);
        let radius = max_radius * u.powf(1.0 / (2.0 * d as f64));
        let candidate = BallPoint::new(dir.into_iter().map(|z| z / norm * radius).collect())?;
        let ok = points.iter().all(|p| {
            let dist: f64 = p
                .coords()
                .iter()
                .zip(candidate.coords())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            dist >= min_separation
        });
        if ok {
            points.push(candidate);
        }
    }
    Ok(points)
}
