//! Orthogonal projectors over the input space of a layer.
//!
//! A [`Projector`] stores the recursive-least-squares form
//! `P = (A Aᵀ + α I)⁻¹ = α⁻¹ [I − A (α I + AᵀA)⁻¹ Aᵀ]`, where the columns of
//! `A` are the (mean) inputs the layer has been trained on. It starts at
//! `I / α` and absorbs one input at a time through the rank-one RLS recursion,
//! so the inputs themselves never need to be kept.
//!
//! `α P` is the normalized projector: its eigenvalues lie in `(0, 1]`, it is
//! close to the identity on directions no trained input touches and close to
//! zero on the span of trained inputs. Rank and idempotence diagnostics, and
//! the gradient projection used during training, go through `α P`.

use serde::{Deserialize, Serialize};

use crate::codec::{ByteReader, ByteWriter};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

pub const DEFAULT_ALPHA: f64 = 1e-3;

const SNAPSHOT_MAGIC: &[u8; 4] = b"OWMP";
const SNAPSHOT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Projector {
    p: Matrix,
    alpha: f64,
    forgetting: f64,
    updates: u64,
}

/// Result of [`Projector::capacity`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapacityReport {
    /// Eigenvalues of `α P` above the tolerance: directions still free.
    pub effective_rank: usize,
    pub dim: usize,
}

impl Projector {
    /// `P = I / α`.
    pub fn new(dim: usize, alpha: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param(
                "dim",
                "projector dimension must be at least 1",
            ));
        }
        check_alpha(alpha)?;
        Ok(Projector {
            p: Matrix::scaled_identity(dim, 1.0 / alpha),
            alpha,
            forgetting: 1.0,
            updates: 0,
        })
    }

    /// Sets the RLS forgetting factor `λ ∈ (0, 1]`. With `λ < 1` old inputs are
    /// gradually released, which restores capacity at the cost of protection.
    pub fn with_forgetting(mut self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::param(
                "forgetting",
                format!("must be in (0, 1], got {lambda}"),
            ));
        }
        self.forgetting = lambda;
        Ok(self)
    }

    /// Closed-form projector over the columns of `inputs`:
    /// `α⁻¹ [I − A (α I + AᵀA)⁻¹ Aᵀ]`. Ignores forgetting.
    pub fn direct(inputs: &InputRecord, alpha: f64, dim: usize) -> Result<Self> {
        check_alpha(alpha)?;
        if inputs.dim() != dim {
            return Err(Error::shape(
                "Projector::direct",
                format!(
                    "record holds {}-dim inputs, projector dim is {dim}",
                    inputs.dim()
                ),
            ));
        }
        let mut proj = Projector::new(dim, alpha)?;
        if inputs.is_empty() {
            return Ok(proj);
        }
        let a = inputs.to_matrix();
        let n = a.cols();
        let mut gram = linalg::matmul_tn(&a, &a)?;
        for i in 0..n {
            gram[(i, i)] += alpha;
        }
        let x = linalg::solve_sym(&gram, &a.transpose())?;
        let ax = linalg::matmul(&a, &x)?;
        let mut p = Matrix::identity(dim).sub(&ax)?;
        p.scale_in_place(1.0 / alpha);
        p.symmetrize();
        proj.p = p;
        proj.updates = n as u64;
        Ok(proj)
    }

    pub fn dim(&self) -> usize {
        self.p.rows()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn forgetting(&self) -> f64 {
        self.forgetting
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    /// The stored (RLS-scaled) matrix.
    pub fn matrix(&self) -> &Matrix {
        &self.p
    }

    /// `α P`, the projector with eigenvalues in `(0, 1]`.
    pub fn normalized(&self) -> Matrix {
        self.p.scale(self.alpha)
    }

    fn check_len(&self, x: &[f64], op: &'static str) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::shape(
                op,
                format!(
                    "vector of length {} for a {}-dim projector",
                    x.len(),
                    self.dim()
                ),
            ));
        }
        Ok(())
    }

    /// Absorbs one (mean) input through the RLS recursion
    /// `k = P x / (λ + xᵀ P x)`, `P ← (P − k xᵀ P) / λ`, then re-symmetrizes.
    pub fn update(&mut self, x_mean: &[f64]) -> Result<()> {
        self.check_len(x_mean, "Projector::update")?;
        if x_mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Projector::update input"));
        }
        let n = self.dim();
        let px = linalg::matvec(&self.p, x_mean)?;
        let denom = self.forgetting + linalg::dot(x_mean, &px);
        let inv_lambda = 1.0 / self.forgetting;
        let data = self.p.as_mut_slice();
        // P is symmetric, so xᵀP = (P x)ᵀ.
        for i in 0..n {
            let ki = px[i] / denom;
            let row = &mut data[i * n..(i + 1) * n];
            for (pij, pxj) in row.iter_mut().zip(&px) {
                *pij = (*pij - ki * pxj) * inv_lambda;
            }
        }
        self.p.symmetrize();
        self.updates += 1;
        Ok(())
    }

    /// `P · grad`. Leaves the projector untouched.
    pub fn project(&self, grad: &Matrix) -> Result<Matrix> {
        self.check_rows(grad, "Projector::project")?;
        linalg::matmul(&self.p, grad)
    }

    /// `α P · grad`.
    pub fn project_normalized(&self, grad: &Matrix) -> Result<Matrix> {
        self.check_rows(grad, "Projector::project_normalized")?;
        let mut out = Matrix::zeros(grad.rows(), grad.cols());
        linalg::gemm(
            self.alpha,
            &self.p,
            linalg::Op::N,
            grad,
            linalg::Op::N,
            0.0,
            &mut out,
        )?;
        Ok(out)
    }

    fn check_rows(&self, grad: &Matrix, op: &'static str) -> Result<()> {
        if grad.rows() != self.dim() {
            return Err(Error::shape(
                op,
                format!(
                    "{} gradient rows for a {}-dim projector",
                    grad.rows(),
                    self.dim()
                ),
            ));
        }
        Ok(())
    }

    /// Enhanced-backprop step size `1 / (1 + xᵀ P x)`, in `(0, 1]`.
    pub fn ebp_learning_rate(&self, x: &[f64]) -> Result<f64> {
        self.check_len(x, "Projector::ebp_learning_rate")?;
        let px = linalg::matvec(&self.p, x)?;
        Ok(1.0 / (1.0 + linalg::dot(x, &px)))
    }

    /// Counts eigenvalues of `α P` above `tol`.
    pub fn capacity(&self, tol: f64) -> Result<CapacityReport> {
        Ok(CapacityReport {
            effective_rank: linalg::sym_eig_count_above(&self.normalized(), tol)?,
            dim: self.dim(),
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        self.write(&mut w);
        w.finish()
    }

    pub(crate) fn write(&self, w: &mut ByteWriter) {
        w.bytes(SNAPSHOT_MAGIC);
        w.u32(SNAPSHOT_VERSION);
        w.u64(self.dim() as u64);
        w.f64(self.alpha);
        w.f64(self.forgetting);
        w.u64(self.updates);
        for &v in self.p.as_slice() {
            w.f64(v);
        }
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes, "projector snapshot");
        let p = Self::read(&mut r)?;
        r.finish()?;
        Ok(p)
    }

    pub(crate) fn read(r: &mut ByteReader<'_>) -> Result<Self> {
        r.expect(SNAPSHOT_MAGIC, "magic")?;
        let version = r.u32("version")?;
        if version != SNAPSHOT_VERSION {
            return Err(Error::Format {
                path: "projector snapshot".into(),
                field: "version",
                reason: format!("unsupported version {version}"),
            });
        }
        let dim = r.usize("dim")?;
        let alpha = r.f64("alpha")?;
        let forgetting = r.f64("forgetting")?;
        let updates = r.u64("updates")?;
        let bytes = r.take(dim.saturating_mul(dim).saturating_mul(8), "p")?;
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_bits(u64::from_le_bytes(c.try_into().expect("8 bytes"))))
            .collect();
        let p = Matrix::from_vec(dim, dim, data)?;
        check_alpha(alpha)?;
        Ok(Projector {
            p,
            alpha,
            forgetting,
            updates,
        })
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::param(
            "alpha",
            format!("must be positive and finite, got {alpha}"),
        ));
    }
    Ok(())
}

/// The trained (mean) inputs of one layer, kept only when a closed-form
/// cross-check is wanted.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct InputRecord {
    dim: usize,
    columns: Vec<Vec<f64>>,
}

impl InputRecord {
    pub fn new(dim: usize) -> Self {
        InputRecord {
            dim,
            columns: Vec::new(),
        }
    }

    pub fn push(&mut self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::shape(
                "InputRecord::push",
                format!("vector of length {} for a {}-dim record", x.len(), self.dim),
            ));
        }
        self.columns.push(x.to_vec());
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    /// `dim x len` matrix with one column per recorded input.
    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_columns(self.dim, &self.columns).expect("columns have record dim")
    }
}
