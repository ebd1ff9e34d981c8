//! Datasets and the sequential task streams built from them.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::context::{make_context, ContextVector};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::network::Loss;
use crate::rng::SeedStream;

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;
/// IDX container for 2-D `f64` feature tables (type code 0x0E, two dims).
pub const F64_TABLE_MAGIC: u32 = 0x0000_0E02;

pub const MNIST_TRAIN_IMAGES: &str = "train-images-idx3-ubyte";
pub const MNIST_TRAIN_LABELS: &str = "train-labels-idx1-ubyte";
pub const MNIST_TEST_IMAGES: &str = "t10k-images-idx3-ubyte";
pub const MNIST_TEST_LABELS: &str = "t10k-labels-idx1-ubyte";

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub features: Matrix,
    pub labels: Vec<usize>,
    pub num_classes: usize,
}

impl Dataset {
    pub fn new(features: Matrix, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if features.rows() == 0 {
            return Err(Error::param(
                "dataset",
                "a dataset needs at least one sample",
            ));
        }
        if features.rows() != labels.len() {
            return Err(Error::shape(
                "Dataset::new",
                format!(
                    "{} feature rows but {} labels",
                    features.rows(),
                    labels.len()
                ),
            ));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::param(
                "labels",
                format!("label {bad} outside [0, {num_classes})"),
            ));
        }
        if features
            .as_slice()
            .iter()
            .any(|&v| !(0.0..=1.0).contains(&v))
        {
            return Err(Error::param(
                "features",
                "feature values must lie in [0, 1]",
            ));
        }
        Ok(Dataset {
            features,
            labels,
            num_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Dataset> {
        if indices.is_empty() {
            return Err(Error::param("dataset", "selection is empty"));
        }
        Ok(Dataset {
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            num_classes: self.num_classes,
        })
    }

    /// Indices of every sample per class.
    pub fn class_indices(&self) -> Vec<Vec<usize>> {
        let mut by_class = vec![Vec::new(); self.num_classes];
        for (i, &l) in self.labels.iter().enumerate() {
            by_class[l].push(i);
        }
        by_class
    }

    pub fn class_counts(&self) -> Vec<usize> {
        self.class_indices().iter().map(Vec::len).collect()
    }

    /// Concatenates datasets with equal dimension and class count.
    pub fn concat(parts: &[&Dataset]) -> Result<Dataset> {
        let first = parts
            .first()
            .ok_or_else(|| Error::param("dataset", "nothing to concatenate"))?;
        let mut data = Vec::new();
        let mut labels = Vec::new();
        for p in parts {
            if p.dim() != first.dim() || p.num_classes != first.num_classes {
                return Err(Error::shape("Dataset::concat", "parts disagree on shape"));
            }
            data.extend_from_slice(p.features.as_slice());
            labels.extend_from_slice(&p.labels);
        }
        Dataset::new(
            Matrix::from_vec(labels.len(), first.dim(), data)?,
            labels,
            first.num_classes,
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Shuffled,
    Disjoint,
    ClassIncremental,
    ContextAttribute,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TaskSpec {
    pub kind: TaskKind,
    pub name: String,
    pub train: Dataset,
    pub test: Dataset,
    /// Output units this task's labels live on.
    pub active_outputs: BTreeSet<usize>,
    pub context: Option<ContextVector>,
    pub loss: Loss,
}

impl TaskSpec {
    /// Checks the task's own invariants against an output layer width.
    pub fn validate(&self, output_dim: usize) -> Result<()> {
        if self.active_outputs.is_empty() {
            return Err(Error::config(&self.name, "active_outputs is empty"));
        }
        let out_units = if output_dim == 1 { 2 } else { output_dim };
        if self.active_outputs.iter().any(|&o| o >= out_units) {
            return Err(Error::config(
                &self.name,
                "active output outside the output layer",
            ));
        }
        if (self.kind == TaskKind::ContextAttribute) != self.context.is_some() {
            return Err(Error::config(
                &self.name,
                "a context vector is required for context tasks and only for them",
            ));
        }
        if self.train.dim() != self.test.dim() {
            return Err(Error::config(
                &self.name,
                "train and test dimensions differ",
            ));
        }
        Ok(())
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn format_err(path: &Path, field: &'static str, reason: impl Into<String>) -> Error {
    Error::Format {
        path: path.display().to_string(),
        field,
        reason: reason.into(),
    }
}

fn be_u32(bytes: &[u8], offset: usize, path: &Path, field: &'static str) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes(b.try_into().expect("4 bytes")))
        .ok_or_else(|| format_err(path, field, "file ends inside the header"))
}

/// Reads an MNIST image/label pair. Pixels are scaled by 1/255.
pub fn load_mnist_idx(
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
) -> Result<Dataset> {
    let (ip, lp) = (images_path.as_ref(), labels_path.as_ref());
    let images = read_file(ip)?;
    let labels = read_file(lp)?;

    let magic = be_u32(&images, 0, ip, "magic")?;
    if magic != IMAGES_MAGIC {
        return Err(format_err(
            ip,
            "magic",
            format!("expected 0x{IMAGES_MAGIC:08x}, found 0x{magic:08x}"),
        ));
    }
    let n = be_u32(&images, 4, ip, "count")? as usize;
    let rows = be_u32(&images, 8, ip, "rows")? as usize;
    let cols = be_u32(&images, 12, ip, "cols")? as usize;
    let d = rows * cols;
    let payload = &images[16..];
    if payload.len() != n * d {
        return Err(format_err(
            ip,
            "payload",
            format!("expected {} pixel bytes, found {}", n * d, payload.len()),
        ));
    }

    let magic = be_u32(&labels, 0, lp, "magic")?;
    if magic != LABELS_MAGIC {
        return Err(format_err(
            lp,
            "magic",
            format!("expected 0x{LABELS_MAGIC:08x}, found 0x{magic:08x}"),
        ));
    }
    let nl = be_u32(&labels, 4, lp, "count")? as usize;
    if nl != n {
        return Err(format_err(
            lp,
            "count",
            format!("{nl} labels for {n} images"),
        ));
    }
    let label_bytes = &labels[8..];
    if label_bytes.len() != n {
        return Err(format_err(
            lp,
            "payload",
            format!("expected {n} label bytes, found {}", label_bytes.len()),
        ));
    }
    let labels: Vec<usize> = label_bytes.iter().map(|&b| b as usize).collect();
    if let Some(bad) = labels.iter().find(|&&l| l >= 10) {
        return Err(format_err(
            lp,
            "payload",
            format!("label {bad} outside 0..=9"),
        ));
    }
    let features = payload.iter().map(|&b| f64::from(b) / 255.0).collect();
    Dataset::new(Matrix::from_vec(n, d, features)?, labels, 10)
}

/// Loads the standard train and test pairs from one directory.
pub fn load_mnist_dir(dir: impl AsRef<Path>) -> Result<(Dataset, Dataset)> {
    let dir = dir.as_ref();
    let train = load_mnist_idx(dir.join(MNIST_TRAIN_IMAGES), dir.join(MNIST_TRAIN_LABELS))?;
    let test = load_mnist_idx(dir.join(MNIST_TEST_IMAGES), dir.join(MNIST_TEST_LABELS))?;
    Ok((train, test))
}

/// Writes `ds` as an MNIST-style IDX pair. Features are quantized to bytes
/// (`round(v · 255)`), so a dataset read by [`load_mnist_idx`] round-trips
/// exactly. `width` is the image width; `ds.dim()` must be a multiple of it.
pub fn write_mnist_idx(
    ds: &Dataset,
    width: usize,
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
) -> Result<()> {
    if width == 0 || ds.dim() % width != 0 {
        return Err(Error::param(
            "width",
            format!("{} features do not tile rows of {width}", ds.dim()),
        ));
    }
    if ds.labels.iter().any(|&l| l > 255) {
        return Err(Error::param("labels", "IDX labels are single bytes"));
    }
    let mut img = Vec::with_capacity(16 + ds.features.as_slice().len());
    img.extend_from_slice(&IMAGES_MAGIC.to_be_bytes());
    img.extend_from_slice(&(ds.len() as u32).to_be_bytes());
    img.extend_from_slice(&((ds.dim() / width) as u32).to_be_bytes());
    img.extend_from_slice(&(width as u32).to_be_bytes());
    img.extend(
        ds.features
            .as_slice()
            .iter()
            .map(|&v| (v * 255.0).round() as u8),
    );
    let mut lab = Vec::with_capacity(8 + ds.len());
    lab.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    lab.extend_from_slice(&(ds.len() as u32).to_be_bytes());
    lab.extend(ds.labels.iter().map(|&l| l as u8));
    let ip = images_path.as_ref();
    let lp = labels_path.as_ref();
    fs::write(ip, img).map_err(|e| Error::io(ip, e))?;
    fs::write(lp, lab).map_err(|e| Error::io(lp, e))
}

/// Writes a feature table in the IDX container with big-endian `f64` entries.
pub fn write_f64_table(features: &Matrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::with_capacity(12 + 8 * features.as_slice().len());
    out.extend_from_slice(&F64_TABLE_MAGIC.to_be_bytes());
    out.extend_from_slice(&(features.rows() as u32).to_be_bytes());
    out.extend_from_slice(&(features.cols() as u32).to_be_bytes());
    for &v in features.as_slice() {
        out.extend_from_slice(&v.to_be_bytes());
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_f64_table(path: impl AsRef<Path>) -> Result<Matrix> {
    let path = path.as_ref();
    let bytes = read_file(path)?;
    let magic = be_u32(&bytes, 0, path, "magic")?;
    if magic != F64_TABLE_MAGIC {
        return Err(format_err(
            path,
            "magic",
            format!("expected 0x{F64_TABLE_MAGIC:08x}, found 0x{magic:08x}"),
        ));
    }
    let n = be_u32(&bytes, 4, path, "count")? as usize;
    let d = be_u32(&bytes, 8, path, "cols")? as usize;
    let payload = &bytes[12..];
    if payload.len() != 8 * n * d {
        return Err(format_err(
            path,
            "payload",
            format!("expected {} bytes, found {}", 8 * n * d, payload.len()),
        ));
    }
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_be_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Matrix::from_vec(n, d, data).map_err(|e| format_err(path, "payload", e.to_string()))
}

/// One pixel permutation per task; the first is the identity.
pub fn pixel_permutations(n_tasks: usize, dim: usize, seed: u64) -> Vec<Vec<usize>> {
    let streams = SeedStream::new(seed);
    (0..n_tasks)
        .map(|t| {
            let mut perm: Vec<usize> = (0..dim).collect();
            if t > 0 {
                perm.shuffle(&mut streams.rng(&format!("permutation/{t}")));
            }
            perm
        })
        .collect()
}

fn permute_columns(ds: &Dataset, perm: &[usize]) -> Dataset {
    let d = ds.dim();
    let mut features = Matrix::zeros(ds.len(), d);
    for r in 0..ds.len() {
        let src = ds.features.row(r);
        for (dst, &p) in features.row_mut(r).iter_mut().zip(perm) {
            *dst = src[p];
        }
    }
    Dataset {
        features,
        labels: ds.labels.clone(),
        num_classes: ds.num_classes,
    }
}

/// Shuffled-pixel task stream: every task classifies the same digits, with
/// one fixed pixel permutation per task applied to train and test alike.
pub fn make_shuffled_tasks(
    train: &Dataset,
    test: &Dataset,
    n_tasks: usize,
    seed: u64,
) -> Result<Vec<TaskSpec>> {
    if n_tasks == 0 {
        return Err(Error::param("n_tasks", "need at least one task"));
    }
    if train.dim() != test.dim() {
        return Err(Error::shape(
            "make_shuffled_tasks",
            "train and test dimensions differ",
        ));
    }
    let perms = pixel_permutations(n_tasks, train.dim(), seed);
    Ok(perms
        .iter()
        .enumerate()
        .map(|(t, perm)| TaskSpec {
            kind: TaskKind::Shuffled,
            name: format!("shuffled-{}", t + 1),
            train: permute_columns(train, perm),
            test: permute_columns(test, perm),
            active_outputs: (0..train.num_classes).collect(),
            context: None,
            loss: Loss::CrossEntropy,
        })
        .collect())
}

/// Sample indices of digits 0-4 and of digits 5-9.
pub fn disjoint_split_indices(labels: &[usize]) -> (Vec<usize>, Vec<usize>) {
    (0..labels.len()).partition(|&i| labels[i] < 5)
}

/// Two tasks: digits 0-4, then digits 5-9.
pub fn make_disjoint_tasks(train: &Dataset, test: &Dataset) -> Result<[TaskSpec; 2]> {
    if train.num_classes != 10 {
        return Err(Error::param(
            "num_classes",
            "the disjoint split needs 10 classes",
        ));
    }
    let (tr_a, tr_b) = disjoint_split_indices(&train.labels);
    let (te_a, te_b) = disjoint_split_indices(&test.labels);
    let task = |name: &str,
                tr: &[usize],
                te: &[usize],
                outs: std::ops::Range<usize>|
     -> Result<TaskSpec> {
        Ok(TaskSpec {
            kind: TaskKind::Disjoint,
            name: name.to_string(),
            train: train.select(tr)?,
            test: test.select(te)?,
            active_outputs: outs.collect(),
            context: None,
            loss: Loss::CrossEntropy,
        })
    };
    Ok([
        task("digits-0-4", &tr_a, &te_a, 0..5)?,
        task("digits-5-9", &tr_b, &te_b, 5..10)?,
    ])
}

/// Seeded random class order used by [`make_class_incremental`].
pub fn class_order(num_classes: usize, order_seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..num_classes).collect();
    order.shuffle(&mut SeedStream::new(order_seed).rng("class-order"));
    order
}

/// One task per class, positive samples only, squared-error loss.
pub fn make_class_incremental(
    train: &Dataset,
    test: &Dataset,
    order_seed: u64,
) -> Result<Vec<TaskSpec>> {
    if train.num_classes < 2 {
        return Err(Error::param("num_classes", "need at least two classes"));
    }
    let tr = train.class_indices();
    let te = test.class_indices();
    class_order(train.num_classes, order_seed)
        .into_iter()
        .map(|c| {
            Ok(TaskSpec {
                kind: TaskKind::ClassIncremental,
                name: format!("class-{c}"),
                train: train.select(&tr[c])?,
                test: test.select(&te[c])?,
                active_outputs: BTreeSet::from([c]),
                context: None,
                loss: Loss::Mse,
            })
        })
        .collect()
}

/// Fraction of the shared feature rows held out for testing context tasks.
pub const CONTEXT_TEST_FRACTION: f64 = 0.2;

/// Synthetic context-dependent attribute tasks over one shared feature set.
#[derive(Clone, Debug)]
pub struct ContextTaskSet {
    /// All `n_samples x k` feature rows, Uniform[0,1]^k.
    pub features: Matrix,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    /// Hyperplane normal per context.
    pub normals: Vec<Vec<f64>>,
    pub tasks: Vec<TaskSpec>,
}

/// Builds `n_contexts` binary tasks that share the same feature rows. Each
/// context labels a sample 1 when it lies on the positive side of its own
/// random hyperplane through the feature centroid, and carries a width-`m`
/// context vector.
pub fn make_context_tasks(
    n_samples: usize,
    k: usize,
    n_contexts: usize,
    m: usize,
    seed: u64,
) -> Result<ContextTaskSet> {
    if k < 2 {
        return Err(Error::param("k", "need at least 2 feature dimensions"));
    }
    if n_contexts < 2 {
        return Err(Error::param("n_contexts", "need at least 2 contexts"));
    }
    if n_samples < 10 {
        return Err(Error::param("n_samples", "need at least 10 samples"));
    }
    let streams = SeedStream::new(seed);
    let mut rng = streams.rng("context-features");
    let features = Matrix::from_fn(n_samples, k, |_, _| rand::Rng::random::<f64>(&mut rng));
    let centroid = features.row_mean();

    let mut order: Vec<usize> = (0..n_samples).collect();
    order.shuffle(&mut streams.rng("context-split"));
    let n_test = ((n_samples as f64) * CONTEXT_TEST_FRACTION).round() as usize;
    let mut test_indices = order[..n_test].to_vec();
    let mut train_indices = order[n_test..].to_vec();
    test_indices.sort_unstable();
    train_indices.sort_unstable();

    let mut normals = Vec::with_capacity(n_contexts);
    let mut tasks = Vec::with_capacity(n_contexts);
    for c in 0..n_contexts {
        let mut rng = streams.rng(&format!("hyperplane/{c}"));
        let (normal, labels) = loop {
            let v: Vec<f64> = (0..k).map(|_| StandardNormal.sample(&mut rng)).collect();
            let labels: Vec<usize> = (0..n_samples)
                .map(|i| {
                    let side: f64 = features
                        .row(i)
                        .iter()
                        .zip(&centroid)
                        .zip(&v)
                        .map(|((f, mu), w)| (f - mu) * w)
                        .sum();
                    usize::from(side > 0.0)
                })
                .collect();
            let pos = labels.iter().sum::<usize>() as f64 / n_samples as f64;
            if (0.4..=0.6).contains(&pos) {
                break (v, labels);
            }
        };
        let ds = Dataset::new(features.clone(), labels, 2)?;
        let context = make_context(m, c as u64, streams.derive("contexts"))?;
        tasks.push(TaskSpec {
            kind: TaskKind::ContextAttribute,
            name: format!("context-{c}"),
            train: ds.select(&train_indices)?,
            test: ds.select(&test_indices)?,
            active_outputs: BTreeSet::from([0, 1]),
            context: Some(context),
            loss: Loss::Mse,
        });
        normals.push(normal);
    }
    Ok(ContextTaskSet {
        features,
        train_indices,
        test_indices,
        normals,
        tasks,
    })
}

/// Sidecar manifest for a synthetic context task set stored next to its
/// feature table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContextManifest {
    pub k: usize,
    pub n_samples: usize,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub contexts: Vec<ContextManifestEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContextManifestEntry {
    pub name: String,
    pub labels: Vec<u8>,
    pub context: ContextVector,
}

pub const CONTEXT_FEATURES_FILE: &str = "features-f64.idx";
pub const CONTEXT_MANIFEST_FILE: &str = "manifest.json";

impl ContextTaskSet {
    /// Writes the features (IDX `f64` table) and the manifest into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_f64_table(&self.features, dir.join(CONTEXT_FEATURES_FILE))?;
        let contexts = self
            .tasks
            .iter()
            .map(|t| {
                let mut labels = vec![0u8; self.features.rows()];
                for (&i, &l) in self.train_indices.iter().zip(&t.train.labels) {
                    labels[i] = l as u8;
                }
                for (&i, &l) in self.test_indices.iter().zip(&t.test.labels) {
                    labels[i] = l as u8;
                }
                ContextManifestEntry {
                    name: t.name.clone(),
                    labels,
                    context: t.context.clone().expect("context task"),
                }
            })
            .collect();
        let manifest = ContextManifest {
            k: self.features.cols(),
            n_samples: self.features.rows(),
            train_indices: self.train_indices.clone(),
            test_indices: self.test_indices.clone(),
            contexts,
        };
        let path = dir.join(CONTEXT_MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(&path, text).map_err(|e| Error::io(path, e))
    }

    /// Reloads a set written by [`ContextTaskSet::save`]. Hyperplane normals
    /// are not stored and come back empty.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let features = read_f64_table(dir.join(CONTEXT_FEATURES_FILE))?;
        let path = dir.join(CONTEXT_MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let manifest: ContextManifest = serde_json::from_str(&text)
            .map_err(|e| format_err(&path, "manifest", e.to_string()))?;
        if manifest.k != features.cols() || manifest.n_samples != features.rows() {
            return Err(format_err(
                &path,
                "k",
                "manifest disagrees with the feature table",
            ));
        }
        let tasks = manifest
            .contexts
            .iter()
            .map(|e| {
                let ds = Dataset::new(
                    features.clone(),
                    e.labels.iter().map(|&l| l as usize).collect(),
                    2,
                )?;
                Ok(TaskSpec {
                    kind: TaskKind::ContextAttribute,
                    name: e.name.clone(),
                    train: ds.select(&manifest.train_indices)?,
                    test: ds.select(&manifest.test_indices)?,
                    active_outputs: BTreeSet::from([0, 1]),
                    context: Some(e.context.clone()),
                    loss: Loss::Mse,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ContextTaskSet {
            features,
            train_indices: manifest.train_indices,
            test_indices: manifest.test_indices,
            normals: Vec::new(),
            tasks,
        })
    }
}

/// Stratified subsample: `min(per_class, available)` samples of each class,
/// kept in their original order.
pub fn subsample(ds: &Dataset, per_class: usize, seed: u64) -> Result<Dataset> {
    if per_class == 0 {
        return Err(Error::param("per_class", "must be at least 1"));
    }
    let streams = SeedStream::new(seed);
    let mut keep = Vec::new();
    for (c, mut idx) in ds.class_indices().into_iter().enumerate() {
        if idx.len() > per_class {
            idx.shuffle(&mut streams.rng(&format!("subsample/{c}")));
            idx.truncate(per_class);
        }
        keep.extend(idx);
    }
    keep.sort_unstable();
    ds.select(&keep)
}

/// Mean of each feature over a dataset; handy for centroid checks.
pub fn feature_mean(ds: &Dataset) -> Vec<f64> {
    ds.features.row_mean()
}

/// Fraction of samples whose labels differ between two tasks on the same rows.
pub fn label_disagreement(a: &Dataset, b: &Dataset) -> f64 {
    let diff = a
        .labels
        .iter()
        .zip(&b.labels)
        .filter(|(x, y)| x != y)
        .count();
    diff as f64 / a.len().max(1) as f64
}

/// Euclidean distance between two feature rows, used in tests and reports.
pub fn row_distance(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    linalg::norm(&d)
}
