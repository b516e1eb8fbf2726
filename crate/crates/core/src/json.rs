//! JSON wire formats for spaces, tables, automorphisms, and colligations.
//!
//! The wire structs mirror the in-memory types but are plain data; every
//! parse funnels through the validating constructors, so untrusted input
//! cannot produce a value the rest of the crate would reject. Complex
//! numbers travel as `[re, im]` pairs and matrices as row-major nested
//! arrays.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factorization::Colligation;
use crate::kernels::{BallPoint, FiniteKernelSpace, KernelModel};
use crate::linalg::{matrix_from_rows, CMatrix};
use crate::moebius::BallAutomorphism;
use crate::multipliers::MultiplierTable;

/// Wire form of a kernel model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    /// `1 / (1 - <z, w>)`.
    DruryArveson { dim: usize },
    /// `(1 - <z, w>)^(-exponent)`.
    PowerKernel { dim: usize, exponent: f64 },
    /// Normalized complete-Pick data: abstract ids with ball embeddings.
    NormalizedCp {
        ids: Vec<String>,
        embedding: Vec<Vec<Complex64>>,
        basepoint: usize,
    },
    /// Source/target pair sharing a point set.
    Pair {
        source: Box<ModelSpec>,
        target: Box<ModelSpec>,
    },
}

/// Wire form of a finite kernel space: a model plus point coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    pub model: ModelSpec,
    pub points: Vec<Vec<Complex64>>,
}

/// Wire form of a multiplier table: per-point `q x p` matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableSpec {
    pub q: usize,
    pub p: usize,
    pub values: Vec<Vec<Vec<Complex64>>>,
}

/// Wire form of a ball automorphism.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutomorphismSpec {
    pub a: Vec<Complex64>,
    pub unitary: Vec<Vec<Complex64>>,
}

/// Wire form of a transfer-function colligation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColligationSpec {
    pub alpha: Vec<Vec<Complex64>>,
    pub beta: Vec<Vec<Complex64>>,
    pub gamma: Vec<Vec<Complex64>>,
    pub delta: Vec<Vec<Complex64>>,
    pub ball_dim: usize,
    pub internal_rank: usize,
}

fn json_err(e: serde_json::Error) -> Error {
    Error::InvalidInput(format!("json: {e}"))
}

fn matrix_to_rows(m: &CMatrix) -> Vec<Vec<Complex64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn rows_to_matrix(rows: &[Vec<Complex64>], what: &str) -> Result<CMatrix> {
    matrix_from_rows(rows).map_err(|e| Error::InvalidInput(format!("{what}: {e}")))
}

fn model_to_spec(model: &KernelModel) -> ModelSpec {
    match model {
        KernelModel::DruryArveson { dim } => ModelSpec::DruryArveson { dim: *dim },
        KernelModel::PowerKernel { dim, exponent } => ModelSpec::PowerKernel {
            dim: *dim,
            exponent: *exponent,
        },
        KernelModel::NormalizedCp {
            ids,
            embedding,
            basepoint,
        } => ModelSpec::NormalizedCp {
            ids: ids.clone(),
            embedding: embedding.iter().map(|p| p.coords().to_vec()).collect(),
            basepoint: *basepoint,
        },
        KernelModel::Pair { source, target } => ModelSpec::Pair {
            source: Box::new(model_to_spec(source)),
            target: Box::new(model_to_spec(target)),
        },
    }
}

fn spec_to_model(spec: &ModelSpec) -> Result<KernelModel> {
    Ok(match spec {
        ModelSpec::DruryArveson { dim } => KernelModel::DruryArveson { dim: *dim },
        ModelSpec::PowerKernel { dim, exponent } => KernelModel::PowerKernel {
            dim: *dim,
            exponent: *exponent,
        },
        ModelSpec::NormalizedCp {
            ids,
            embedding,
            basepoint,
        } => KernelModel::NormalizedCp {
            ids: ids.clone(),
            embedding: embedding
                .iter()
                .map(|c| BallPoint::new(c.clone()))
                .collect::<Result<_>>()?,
            basepoint: *basepoint,
        },
        ModelSpec::Pair { source, target } => KernelModel::Pair {
            source: Box::new(spec_to_model(source)?),
            target: Box::new(spec_to_model(target)?),
        },
    })
}

/// Serializes a space (model plus points) to JSON.
pub fn space_to_json(space: &FiniteKernelSpace) -> Result<String> {
    let points = match space.model() {
        // Normalized-CP spaces carry their points inside the model.
        KernelModel::NormalizedCp { .. } => vec![],
        _ => space.points().iter().map(|p| p.coords().to_vec()).collect(),
    };
    let spec = SpaceSpec {
        model: model_to_spec(space.model()),
        points,
    };
    serde_json::to_string_pretty(&spec).map_err(json_err)
}

/// Parses and fully validates a space from JSON text.
pub fn parse_space(text: &str) -> Result<FiniteKernelSpace> {
    let spec: SpaceSpec = serde_json::from_str(text).map_err(json_err)?;
    let model = spec_to_model(&spec.model)?;
    let points = spec
        .points
        .iter()
        .map(|c| BallPoint::new(c.clone()))
        .collect::<Result<Vec<_>>>()?;
    FiniteKernelSpace::new(model, points)
}

/// Byte-slice entry point for [`parse_space`] (used by the fuzzers).
pub fn parse_space_bytes(bytes: &[u8]) -> Result<FiniteKernelSpace> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| Error::InvalidInput(format!("utf-8: {e}")))?;
    parse_space(text)
}

/// Serializes a multiplier table to JSON.
pub fn table_to_json(table: &MultiplierTable) -> Result<String> {
    let spec = TableSpec {
        q: table.out_dim(),
        p: table.in_dim(),
        values: table.values().iter().map(matrix_to_rows).collect(),
    };
    serde_json::to_string_pretty(&spec).map_err(json_err)
}

/// Parses and fully validates a multiplier table from JSON text.
pub fn parse_table(text: &str) -> Result<MultiplierTable> {
    let spec: TableSpec = serde_json::from_str(text).map_err(json_err)?;
    let values = spec
        .values
        .iter()
        .map(|rows| {
            let m = rows_to_matrix(rows, "table value")?;
            if m.nrows() != spec.q || m.ncols() != spec.p {
                return Err(Error::InvalidInput(format!(
                    "table value must be {}x{}, got {}x{}",
                    spec.q,
                    spec.p,
                    m.nrows(),
                    m.ncols()
                )));
            }
            Ok(m)
        })
        .collect::<Result<Vec<_>>>()?;
    MultiplierTable::new(values)
}

/// Byte-slice entry point for [`parse_table`] (used by the fuzzers).
pub fn parse_table_bytes(bytes: &[u8]) -> Result<MultiplierTable> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| Error::InvalidInput(format!("utf-8: {e}")))?;
    parse_table(text)
}

/// Serializes a ball automorphism to JSON.
pub fn automorphism_to_json(theta: &BallAutomorphism) -> Result<String> {
    let spec = AutomorphismSpec {
        a: theta.image_of_zero().coords().to_vec(),
        unitary: matrix_to_rows(theta.unitary()),
    };
    serde_json::to_string_pretty(&spec).map_err(json_err)
}

/// Parses and fully validates a ball automorphism from JSON text
/// (unitarity included).
pub fn parse_automorphism(text: &str) -> Result<BallAutomorphism> {
    let spec: AutomorphismSpec = serde_json::from_str(text).map_err(json_err)?;
    let a = BallPoint::new(spec.a.clone())?;
    let unitary = rows_to_matrix(&spec.unitary, "automorphism unitary")?;
    BallAutomorphism::new(a, unitary)
}

/// Byte-slice entry point for [`parse_automorphism`] (used by the fuzzers).
pub fn parse_automorphism_bytes(bytes: &[u8]) -> Result<BallAutomorphism> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| Error::InvalidInput(format!("utf-8: {e}")))?;
    parse_automorphism(text)
}

/// Serializes a colligation to JSON.
pub fn colligation_to_json(c: &Colligation) -> Result<String> {
    let spec = ColligationSpec {
        alpha: matrix_to_rows(&c.alpha),
        beta: matrix_to_rows(&c.beta),
        gamma: matrix_to_rows(&c.gamma),
        delta: matrix_to_rows(&c.delta),
        ball_dim: c.ball_dim,
        internal_rank: c.internal_rank,
    };
    serde_json::to_string_pretty(&spec).map_err(json_err)
}

/// Parses and fully validates a colligation from JSON text.
pub fn parse_colligation(text: &str) -> Result<Colligation> {
    let spec: ColligationSpec = serde_json::from_str(text).map_err(json_err)?;
    Colligation::new(
        rows_to_matrix(&spec.alpha, "alpha")?,
        rows_to_matrix(&spec.beta, "beta")?,
        rows_to_matrix(&spec.gamma, "gamma")?,
        rows_to_matrix(&spec.delta, "delta")?,
        spec.ball_dim,
        spec.internal_rank,
    )
}

/// Byte-slice entry point for [`parse_colligation`] (used by the fuzzers).
pub fn parse_colligation_bytes(bytes: &[u8]) -> Result<Colligation> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| Error::InvalidInput(format!("utf-8: {e}")))?;
    parse_colligation(text)
}
