//! A fixed random expansion layer gated by a per-task context vector.
//!
//! Features `F` (length `k`) are projected onto `m` frozen unit-norm
//! directions, rectified, then multiplied element-wise by the context
//! `C ∈ (0,1)^m`:
//!
//! ```text
//! y_i = c_i · max(0, w_iᵀ F)
//! ```
//!
//! Because each `w_i` has unit norm, `y_i = c_i · max(0, cos θ_i) · ‖F‖`: the
//! context reweights the rectified direction cosines and leaves the magnitude
//! of `F` factored out. Different contexts therefore present the same input to
//! the readout along different directions, which is what lets a single readout
//! learn conflicting mappings for identical inputs.

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::rng::SeedStream;

#[derive(Clone, Debug, PartialEq)]
pub struct ContextLayer {
    /// `k x m`; column `i` is the unit direction of hidden unit `i`.
    w_in: Matrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContextVector {
    pub task_id: u64,
    values: Vec<f64>,
}

impl ContextVector {
    /// Wraps explicit gate values. Entries must lie strictly inside `(0, 1)`,
    /// except that an all-ones gate is accepted as the context-blind control.
    pub fn new(task_id: u64, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::param("context", "context vector must be nonempty"));
        }
        let all_ones = values.iter().all(|&v| v == 1.0);
        if !all_ones && values.iter().any(|&v| !(v > 0.0 && v < 1.0)) {
            return Err(Error::param("context", "entries must lie in (0, 1)"));
        }
        Ok(ContextVector { task_id, values })
    }

    /// `C ≡ 1`: no modulation.
    pub fn ones(task_id: u64, m: usize) -> Self {
        ContextVector {
            task_id,
            values: vec![1.0; m],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Draws a context of width `m` with i.i.d. Uniform(0,1) entries. The stream is
/// keyed by `(seed, task_id)`.
pub fn make_context(m: usize, task_id: u64, seed: u64) -> Result<ContextVector> {
    if m == 0 {
        return Err(Error::param("m", "context width must be at least 1"));
    }
    let mut rng = SeedStream::new(seed).rng(&format!("context/{task_id}"));
    let values = (0..m)
        .map(|_| loop {
            // `random` draws from [0, 1); reject the zero endpoint.
            let v: f64 = rng.random();
            if v > 0.0 {
                break v;
            }
        })
        .collect();
    Ok(ContextVector { task_id, values })
}

impl ContextLayer {
    /// `m` random unit directions in `R^k`: standard normal draws, normalized.
    pub fn new(k: usize, m: usize, seed: u64) -> Result<Self> {
        if k == 0 || m == 0 {
            return Err(Error::param(
                "k/m",
                "context layer dimensions must be at least 1",
            ));
        }
        let mut rng = SeedStream::new(seed).rng("context-layer");
        let mut w_in = Matrix::zeros(k, m);
        for i in 0..m {
            let mut col: Vec<f64> = (0..k).map(|_| StandardNormal.sample(&mut rng)).collect();
            let mut n = linalg::norm(&col);
            while n == 0.0 {
                col = (0..k).map(|_| StandardNormal.sample(&mut rng)).collect();
                n = linalg::norm(&col);
            }
            for (r, v) in col.iter().enumerate() {
                w_in[(r, i)] = v / n;
            }
        }
        Ok(ContextLayer { w_in })
    }

    /// Uses the given directions as-is after checking each column has unit norm.
    pub fn from_weights(w_in: Matrix) -> Result<Self> {
        for i in 0..w_in.cols() {
            let n = linalg::norm(&w_in.col(i));
            if (n - 1.0).abs() > 1e-12 {
                return Err(Error::param(
                    "w_in",
                    format!("column {i} has norm {n}, expected 1"),
                ));
            }
        }
        Ok(ContextLayer { w_in })
    }

    pub fn k(&self) -> usize {
        self.w_in.rows()
    }

    pub fn m(&self) -> usize {
        self.w_in.cols()
    }

    pub fn weights(&self) -> &Matrix {
        &self.w_in
    }

    fn check(&self, f_len: usize, ctx: &ContextVector) -> Result<()> {
        if f_len != self.k() || ctx.len() != self.m() {
            return Err(Error::shape(
                "context",
                format!(
                    "features {f_len} / context {} for a {}x{} layer",
                    ctx.len(),
                    self.k(),
                    self.m()
                ),
            ));
        }
        Ok(())
    }

    /// Pre-activations `w_iᵀ f`.
    pub fn net(&self, f: &[f64]) -> Result<Vec<f64>> {
        if f.len() != self.k() {
            return Err(Error::shape(
                "ContextLayer::net",
                format!("features of length {} for k = {}", f.len(), self.k()),
            ));
        }
        let mut net = vec![0.0; self.m()];
        for (j, &fj) in f.iter().enumerate() {
            for (n, w) in net.iter_mut().zip(self.w_in.row(j)) {
                *n += fj * w;
            }
        }
        Ok(net)
    }

    /// `y = max(0, W_inᵀ f) ⊙ c`.
    pub fn modulate(&self, f: &[f64], ctx: &ContextVector) -> Result<Vec<f64>> {
        self.check(f.len(), ctx)?;
        let net = self.net(f)?;
        Ok(net
            .iter()
            .zip(ctx.values())
            .map(|(&n, &c)| c * n.max(0.0))
            .collect())
    }

    /// Modulates every row of `features` (`n x k`) into an `n x m` matrix.
    pub fn modulate_rows(&self, features: &Matrix, ctx: &ContextVector) -> Result<Matrix> {
        self.check(features.cols(), ctx)?;
        let mut y = linalg::matmul(features, &self.w_in)?;
        for r in 0..y.rows() {
            for (v, &c) in y.row_mut(r).iter_mut().zip(ctx.values()) {
                *v = c * v.max(0.0);
            }
        }
        Ok(y)
    }

    /// Rescales the context by `sqrt(Σ (c_i g(cos θ_i))²)` and reports the
    /// resulting output together with `‖Y‖ / ‖F‖`, which is exactly 1 when the
    /// layer acts as a rotation of `F`.
    pub fn rotation_check(&self, f: &[f64], ctx: &ContextVector) -> Result<RotationCheck> {
        self.check(f.len(), ctx)?;
        let f_norm = linalg::norm(f);
        if f_norm == 0.0 {
            return Err(Error::DegenerateContext("feature vector is zero".into()));
        }
        let net = self.net(f)?;
        let normalizer = net
            .iter()
            .zip(ctx.values())
            .map(|(&n, &c)| {
                let g = (n / f_norm).max(0.0);
                (c * g) * (c * g)
            })
            .sum::<f64>()
            .sqrt();
        if normalizer == 0.0 {
            return Err(Error::DegenerateContext(
                "no hidden unit has a positive pre-activation".into(),
            ));
        }
        let output: Vec<f64> = net
            .iter()
            .zip(ctx.values())
            .map(|(&n, &c)| c / normalizer * n.max(0.0))
            .collect();
        let norm_ratio = linalg::norm(&output) / f_norm;
        Ok(RotationCheck {
            normalized_output: output,
            normalizer,
            norm_ratio,
        })
    }

    /// Scalar readout `w_outᵀ y`. The attribute is predicted present iff the
    /// logit is strictly positive.
    pub fn classify(&self, f: &[f64], ctx: &ContextVector, w_out: &[f64]) -> Result<f64> {
        if w_out.len() != self.m() {
            return Err(Error::shape(
                "ContextLayer::classify",
                format!("readout of length {} for m = {}", w_out.len(), self.m()),
            ));
        }
        let y = self.modulate(f, ctx)?;
        Ok(linalg::dot(&y, w_out))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RotationCheck {
    pub normalized_output: Vec<f64>,
    pub normalizer: f64,
    pub norm_ratio: f64,
}

/// Selectivity class of one hidden unit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selectivity {
    TaskSensitive,
    AttributeSensitive,
    Mixed,
    None,
}

/// Activations of correctly classified samples, grouped by condition:
/// `by_condition[task][attribute]` holds one row per sample, one column per
/// hidden unit.
pub struct ConditionActivations<'a> {
    pub by_condition: Vec<Vec<&'a Matrix>>,
}

/// Assigns each hidden unit a selectivity class.
///
/// The excitation threshold is the mean activity over all units and all
/// samples. A unit is excited in a `(task, attribute)` condition when its mean
/// activity there exceeds the threshold. If the excitation pattern is constant
/// the unit is `None`; if it is a function of the task alone it is
/// task-sensitive; of the attribute alone, attribute-sensitive; otherwise the
/// pattern depends on the combination and the unit is `Mixed`.
pub fn selectivity_analysis(acts: &ConditionActivations<'_>) -> Result<Vec<Selectivity>> {
    let tasks = acts.by_condition.len();
    if tasks < 2 {
        return Err(Error::param(
            "tasks",
            format!("need at least 2 tasks, got {tasks}"),
        ));
    }
    let attrs = acts.by_condition[0].len();
    if attrs < 2 || acts.by_condition.iter().any(|t| t.len() != attrs) {
        return Err(Error::param(
            "attributes",
            "every task needs the same number (at least 2) of attribute values",
        ));
    }
    let m = acts.by_condition[0][0].cols();
    let mut total = 0.0;
    let mut count = 0usize;
    let mut means = vec![vec![vec![0.0; m]; attrs]; tasks];
    for (t, row) in acts.by_condition.iter().enumerate() {
        for (a, mat) in row.iter().enumerate() {
            if mat.cols() != m {
                return Err(Error::shape(
                    "selectivity_analysis",
                    format!("condition ({t},{a}) has {} units, expected {m}", mat.cols()),
                ));
            }
            if mat.rows() == 0 {
                return Err(Error::param(
                    "activations",
                    format!("condition ({t},{a}) is empty"),
                ));
            }
            means[t][a] = mat.row_mean();
            total += mat.as_slice().iter().sum::<f64>();
            count += mat.as_slice().len();
        }
    }
    let threshold = total / count as f64;

    let classes = (0..m)
        .map(|unit| {
            let excited: Vec<Vec<bool>> = means
                .iter()
                .map(|row| row.iter().map(|mu| mu[unit] > threshold).collect())
                .collect();
            let first = excited[0][0];
            if excited.iter().flatten().all(|&e| e == first) {
                return Selectivity::None;
            }
            let task_only = excited.iter().all(|row| row.iter().all(|&e| e == row[0]));
            let attr_only = excited.iter().all(|row| *row == excited[0]);
            match (task_only, attr_only) {
                (true, _) => Selectivity::TaskSensitive,
                (_, true) => Selectivity::AttributeSensitive,
                _ => Selectivity::Mixed,
            }
        })
        .collect();
    Ok(classes)
}
