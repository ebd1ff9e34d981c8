//! Configured experiment runs, per-epoch metrics, run summaries, comparison
//! tables and sample-size sweeps.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::context::{ContextLayer, ContextVector};
use crate::error::{Error, Result};
use crate::network::{
    evaluate, train_task_at, EarlyStopping, EpochReport, LayerSpec, Mlp, ProjectorInput,
    ProjectorMode, StepRule, TrainConfig,
};
use crate::owm::DEFAULT_ALPHA;
use crate::rng::SeedStream;
use crate::tasks::{self, Dataset, TaskSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    ShuffledMnist,
    DisjointMnist,
    ClassIncremental,
    ContextAttributes,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::ShuffledMnist => "shuffled_mnist",
            ExperimentKind::DisjointMnist => "disjoint_mnist",
            ExperimentKind::ClassIncremental => "class_incremental",
            ExperimentKind::ContextAttributes => "context_attributes",
        }
    }

    pub fn uses_mnist(self) -> bool {
        self != ExperimentKind::ContextAttributes
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkConfig {
    /// Hidden layer widths; input and output widths follow from the experiment.
    pub hidden: Vec<usize>,
    pub alpha: f64,
    /// RLS forgetting factor, 1 for none.
    pub forgetting: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            hidden: vec![800],
            alpha: DEFAULT_ALPHA,
            forgetting: 1.0,
        }
    }
}

/// Training settings; the run seed and the OWM flag live on the experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSettings {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs_per_task: usize,
    pub projector_mode: ProjectorMode,
    pub projector_input: ProjectorInput,
    pub step_rule: StepRule,
    pub early_stopping: bool,
    pub holdout: f64,
    pub patience: usize,
}

impl Default for TrainSettings {
    fn default() -> Self {
        let t = TrainConfig::default();
        let es = EarlyStopping::default();
        TrainSettings {
            learning_rate: t.learning_rate,
            momentum: t.momentum,
            batch_size: t.batch_size,
            epochs_per_task: t.epochs_per_task,
            projector_mode: t.projector_mode,
            projector_input: t.projector_input,
            step_rule: t.step_rule,
            early_stopping: true,
            holdout: es.holdout,
            patience: es.patience,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TaskParams {
    /// Shuffled MNIST: number of permutation tasks.
    pub n_tasks: usize,
    /// Training samples kept per class; all when absent.
    pub per_class: Option<usize>,
    /// Test samples kept per class; all when absent.
    pub test_per_class: Option<usize>,
    /// Class-incremental: seed of the class order; the run seed when absent.
    pub order_seed: Option<u64>,
    /// Context experiment: number of contexts, expansion width, feature width
    /// and number of shared samples.
    pub n_contexts: usize,
    pub m: usize,
    pub k: usize,
    pub n_samples: usize,
    /// Context experiment: replace every context vector by all ones.
    pub context_blind: bool,
}

impl Default for TaskParams {
    fn default() -> Self {
        TaskParams {
            n_tasks: 3,
            per_class: None,
            test_per_class: None,
            order_seed: None,
            n_contexts: 8,
            m: 512,
            k: 64,
            n_samples: 2000,
            context_blind: false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataPaths {
    /// Directory holding the four standard MNIST IDX files.
    pub mnist_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub experiment: ExperimentKind,
    pub seed: u64,
    #[serde(default = "default_true")]
    pub owm_enabled: bool,
    #[serde(default)]
    pub network: NetworkConfig,
    #[serde(default)]
    pub train: TrainSettings,
    #[serde(default)]
    pub tasks: TaskParams,
    #[serde(default)]
    pub data: DataPaths,
    /// Directory for metrics, summary and checkpoint; nothing is written when absent.
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Eigenvalues of `αP` above this count toward a layer's effective rank.
    #[serde(default = "default_capacity_tol")]
    pub capacity_tol: f64,
}

fn default_true() -> bool {
    true
}

fn default_capacity_tol() -> f64 {
    0.5
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let field = e
                .span()
                .map(|s| format!("byte {}..{}", s.start, s.end))
                .unwrap_or_else(|| "config".into());
            Error::config(field, e.message().to_string())
        })?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks values and that every referenced path exists.
    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::config("name", "must not be empty"));
        }
        self.train_config().validate()?;
        if !(self.network.alpha > 0.0 && self.network.alpha.is_finite()) {
            return Err(Error::config(
                "network.alpha",
                "must be positive and finite",
            ));
        }
        if !(self.network.forgetting > 0.0 && self.network.forgetting <= 1.0) {
            return Err(Error::config("network.forgetting", "must lie in (0, 1]"));
        }
        if self.network.hidden.contains(&0) {
            return Err(Error::config(
                "network.hidden",
                "layer widths must be at least 1",
            ));
        }
        if !(self.capacity_tol > 0.0 && self.capacity_tol < 1.0) {
            return Err(Error::config("capacity_tol", "must lie in (0, 1)"));
        }
        let t = &self.tasks;
        if t.per_class == Some(0) || t.test_per_class == Some(0) {
            return Err(Error::config("tasks.per_class", "must be at least 1"));
        }
        match self.experiment {
            ExperimentKind::ShuffledMnist if t.n_tasks == 0 => {
                return Err(Error::config("tasks.n_tasks", "must be at least 1"));
            }
            ExperimentKind::ContextAttributes => {
                if t.n_contexts < 2 {
                    return Err(Error::config("tasks.n_contexts", "must be at least 2"));
                }
                if t.m == 0 || t.k < 2 || t.n_samples < 10 {
                    return Err(Error::config(
                        "tasks",
                        "context experiment needs m >= 1, k >= 2, n_samples >= 10",
                    ));
                }
            }
            _ => {}
        }
        if self.experiment.uses_mnist() {
            let dir =
                self.data.mnist_dir.as_ref().ok_or_else(|| {
                    Error::config("data.mnist_dir", "required for MNIST experiments")
                })?;
            for f in [
                tasks::MNIST_TRAIN_IMAGES,
                tasks::MNIST_TRAIN_LABELS,
                tasks::MNIST_TEST_IMAGES,
                tasks::MNIST_TEST_LABELS,
            ] {
                if !dir.join(f).is_file() {
                    return Err(Error::config(
                        "data.mnist_dir",
                        format!("{} does not exist", dir.join(f).display()),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn train_config(&self) -> TrainConfig {
        let s = &self.train;
        TrainConfig {
            learning_rate: s.learning_rate,
            momentum: s.momentum,
            batch_size: s.batch_size,
            epochs_per_task: s.epochs_per_task,
            projector_mode: s.projector_mode,
            projector_input: s.projector_input,
            step_rule: s.step_rule,
            owm: self.owm_enabled,
            early_stopping: s.early_stopping.then_some(EarlyStopping {
                holdout: s.holdout,
                patience: s.patience,
            }),
            seed: SeedStream::new(self.seed).derive("train"),
        }
    }

    /// SHA-256 over the canonical JSON of the config, output path excluded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = None;
        let json = serde_json::to_string(&c).expect("config serializes");
        hex(&Sha256::digest(json.as_bytes()))
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes
        .iter()
        .fold(String::with_capacity(2 * bytes.len()), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

/// One line of the metrics stream, emitted after every epoch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsRecord {
    pub run_id: String,
    pub config_hash: String,
    pub seed: u64,
    pub task_index: usize,
    pub epoch: usize,
    pub train_loss: f64,
    pub holdout_loss: Option<f64>,
    /// Test accuracy of every task trained so far, the current one included.
    pub accuracies: Vec<f64>,
    /// Effective rank per layer as of the last task boundary.
    pub effective_ranks: Vec<usize>,
    pub wall_ms: u64,
}

impl MetricsRecord {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }

    pub fn from_line(line: &str) -> Result<Self> {
        serde_json::from_str(line).map_err(|e| Error::Format {
            path: "metrics line".into(),
            field: "record",
            reason: e.to_string(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSummary {
    pub name: String,
    pub experiment: ExperimentKind,
    pub owm_enabled: bool,
    pub seed: u64,
    pub config_hash: String,
    pub task_names: Vec<String>,
    /// Accuracy of each task right after its own training.
    pub post_task_accuracies: Vec<f64>,
    /// Accuracy of each task after the whole sequence.
    pub final_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    /// Accuracy over the union of all test sets, classified over every output.
    pub overall_accuracy: f64,
    /// Post-task minus final accuracy, for every task but the last.
    pub forgetting_gaps: Vec<f64>,
    /// Effective rank per layer: initially, then after each task.
    pub capacity: Vec<Vec<usize>>,
    pub epochs_trained: Vec<usize>,
}

impl RunSummary {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Format {
            path: path.display().to_string(),
            field: "summary",
            reason: e.to_string(),
        })
    }
}

pub const METRICS_FILE: &str = "metrics.ndjson";
pub const SUMMARY_JSON: &str = "summary.json";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const CHECKPOINT_FILE: &str = "model.owmc";

/// Tasks plus everything needed to train and score them.
struct Prepared {
    tasks: Vec<TaskSpec>,
    front: Option<ContextLayer>,
    widths: Vec<usize>,
}

fn subsample_opt(ds: &Dataset, per_class: Option<usize>, seed: u64) -> Result<Dataset> {
    match per_class {
        Some(n) => tasks::subsample(ds, n, seed),
        None => Ok(ds.clone()),
    }
}

fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    let streams = SeedStream::new(cfg.seed);
    let t = &cfg.tasks;
    let with_hidden = |input: usize, output: usize| {
        let mut w = vec![input];
        w.extend(&cfg.network.hidden);
        w.push(output);
        w
    };
    if cfg.experiment == ExperimentKind::ContextAttributes {
        let set = tasks::make_context_tasks(
            t.n_samples,
            t.k,
            t.n_contexts,
            t.m,
            streams.derive("context-tasks"),
        )?;
        let front = ContextLayer::new(t.k, t.m, streams.derive("context-layer"))?;
        let mut task_list = set.tasks;
        if t.context_blind {
            for (i, task) in task_list.iter_mut().enumerate() {
                task.context = Some(ContextVector::ones(i as u64, t.m));
            }
        }
        return Ok(Prepared {
            tasks: task_list,
            front: Some(front),
            widths: with_hidden(t.m, 1),
        });
    }

    let dir = cfg.data.mnist_dir.as_ref().expect("validated");
    let (train, test) = tasks::load_mnist_dir(dir)?;
    let train = subsample_opt(&train, t.per_class, streams.derive("subsample/train"))?;
    let test = subsample_opt(&test, t.test_per_class, streams.derive("subsample/test"))?;
    let task_list = match cfg.experiment {
        ExperimentKind::ShuffledMnist => {
            tasks::make_shuffled_tasks(&train, &test, t.n_tasks, streams.derive("permutations"))?
        }
        ExperimentKind::DisjointMnist => tasks::make_disjoint_tasks(&train, &test)?.to_vec(),
        ExperimentKind::ClassIncremental => {
            tasks::make_class_incremental(&train, &test, t.order_seed.unwrap_or(cfg.seed))?
        }
        ExperimentKind::ContextAttributes => unreachable!(),
    };
    Ok(Prepared {
        widths: with_hidden(train.dim(), train.num_classes),
        tasks: task_list,
        front: None,
    })
}

fn front_for<'a>(
    front: &'a Option<ContextLayer>,
    task: &'a TaskSpec,
) -> Option<(&'a ContextLayer, &'a ContextVector)> {
    match (front, &task.context) {
        (Some(layer), Some(ctx)) => Some((layer, ctx)),
        _ => None,
    }
}

fn effective_ranks(mlp: &Mlp, tol: f64) -> Result<Vec<usize>> {
    mlp.projectors()
        .iter()
        .map(|p| Ok(p.capacity(tol)?.effective_rank))
        .collect()
}

/// Runs the configured experiment, writing metrics, summary and checkpoint
/// under `cfg.output` when set.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunSummary> {
    run_experiment_with(cfg, &mut |_| Ok(()))
}

/// As [`run_experiment`], additionally handing every metrics record to `sink`.
pub fn run_experiment_with(
    cfg: &ExperimentConfig,
    sink: &mut dyn FnMut(&MetricsRecord) -> Result<()>,
) -> Result<RunSummary> {
    cfg.validate()?;
    let started = Instant::now();
    let hash = cfg.hash();
    let run_id = format!("{}-{}-s{}", cfg.name, &hash[..12], cfg.seed);
    let mut metrics_file = match &cfg.output {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            let path = dir.join(METRICS_FILE);
            Some((
                fs::File::create(&path).map_err(|e| Error::io(&path, e))?,
                path,
            ))
        }
        None => None,
    };

    let prepared = prepare(cfg)?;
    let specs = LayerSpec::chain(&prepared.widths)?;
    let streams = SeedStream::new(cfg.seed);
    let mut mlp = Mlp::new(&specs, streams.derive("init"))?
        .with_projectors(cfg.network.alpha, cfg.network.forgetting)?;
    let train_cfg = cfg.train_config();

    let mut capacity = vec![effective_ranks(&mlp, cfg.capacity_tol)?];
    let mut post_task = Vec::with_capacity(prepared.tasks.len());
    let mut epochs_trained = Vec::with_capacity(prepared.tasks.len());
    for (j, task) in prepared.tasks.iter().enumerate() {
        let ranks = capacity.last().expect("initial ranks").clone();
        let mut observer = |report: &EpochReport, net: &Mlp| -> Result<()> {
            let accuracies = prepared.tasks[..=j]
                .iter()
                .map(|t| evaluate(net, &t.test, front_for(&prepared.front, t)))
                .collect::<Result<Vec<_>>>()?;
            let record = MetricsRecord {
                run_id: run_id.clone(),
                config_hash: hash.clone(),
                seed: cfg.seed,
                task_index: j,
                epoch: report.epoch,
                train_loss: report.train_loss,
                holdout_loss: report.holdout_loss,
                accuracies,
                effective_ranks: ranks.clone(),
                wall_ms: started.elapsed().as_millis() as u64,
            };
            if let Some((file, path)) = &mut metrics_file {
                writeln!(file, "{}", record.to_line()).map_err(|e| Error::io(path.clone(), e))?;
            }
            sink(&record)
        };
        // Task by task, so the harness can score between tasks.
        let log = train_task_at(
            &mut mlp,
            task,
            j,
            &train_cfg,
            prepared.front.as_ref(),
            &mut observer,
        )?;
        epochs_trained.push(log.epochs.len());
        post_task.push(evaluate(
            &mlp,
            &task.test,
            front_for(&prepared.front, task),
        )?);
        capacity.push(effective_ranks(&mlp, cfg.capacity_tol)?);
    }

    let final_accuracies = prepared
        .tasks
        .iter()
        .map(|t| evaluate(&mlp, &t.test, front_for(&prepared.front, t)))
        .collect::<Result<Vec<_>>>()?;
    let mut correct = 0.0;
    let mut total = 0usize;
    for (t, acc) in prepared.tasks.iter().zip(&final_accuracies) {
        correct += acc * t.test.len() as f64;
        total += t.test.len();
    }
    let n = final_accuracies.len();
    let summary = RunSummary {
        name: cfg.name.clone(),
        experiment: cfg.experiment,
        owm_enabled: cfg.owm_enabled,
        seed: cfg.seed,
        config_hash: hash.clone(),
        task_names: prepared.tasks.iter().map(|t| t.name.clone()).collect(),
        forgetting_gaps: (0..n.saturating_sub(1))
            .map(|i| post_task[i] - final_accuracies[i])
            .collect(),
        mean_accuracy: final_accuracies.iter().sum::<f64>() / n as f64,
        overall_accuracy: correct / total as f64,
        post_task_accuracies: post_task,
        final_accuracies,
        capacity,
        epochs_trained,
    };

    if let Some(dir) = &cfg.output {
        let write = |name: &str, bytes: &[u8]| {
            let path = dir.join(name);
            fs::write(&path, bytes).map_err(|e| Error::io(path, e))
        };
        write(SUMMARY_JSON, summary.to_json().as_bytes())?;
        write(
            SUMMARY_CSV,
            compare_report(std::slice::from_ref(&summary))?
                .csv
                .as_bytes(),
        )?;
        write(CHECKPOINT_FILE, &mlp.to_checkpoint(&hash))?;
        write("config.toml", cfg.to_toml().as_bytes())?;
    }
    Ok(summary)
}

/// Rendered comparison of run summaries.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub csv: String,
    pub table: String,
}

/// Renders summaries as CSV and an aligned text table, rows ordered by name
/// (then OWM runs before plain SGD, then seed).
pub fn compare_report(summaries: &[RunSummary]) -> Result<Report> {
    if summaries.is_empty() {
        return Err(Error::param("summaries", "need at least one summary"));
    }
    let mut rows: Vec<&RunSummary> = summaries.iter().collect();
    rows.sort_by(|a, b| {
        a.name
            .cmp(&b.name)
            .then(b.owm_enabled.cmp(&a.owm_enabled))
            .then(a.seed.cmp(&b.seed))
    });
    let n_tasks = rows
        .iter()
        .map(|s| s.final_accuracies.len())
        .max()
        .unwrap_or(0);
    let mut header = vec![
        "name".to_string(),
        "experiment".into(),
        "owm".into(),
        "seed".into(),
        "config_hash".into(),
        "mean_accuracy".into(),
        "overall_accuracy".into(),
    ];
    header.extend((1..=n_tasks).map(|i| format!("acc_t{i}")));
    header.extend((1..n_tasks).map(|i| format!("gap_t{i}")));

    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|s| {
            let mut r = vec![
                s.name.clone(),
                s.experiment.name().to_string(),
                s.owm_enabled.to_string(),
                s.seed.to_string(),
                s.config_hash.clone(),
                s.mean_accuracy.to_string(),
                s.overall_accuracy.to_string(),
            ];
            r.extend((0..n_tasks).map(|i| {
                s.final_accuracies
                    .get(i)
                    .map_or(String::new(), f64::to_string)
            }));
            r.extend((0..n_tasks.saturating_sub(1)).map(|i| {
                s.forgetting_gaps
                    .get(i)
                    .map_or(String::new(), f64::to_string)
            }));
            r
        })
        .collect();

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).map_err(csv_err)?;
    for r in &cells {
        w.write_record(r).map_err(csv_err)?;
    }
    let csv = String::from_utf8(w.into_inner().map_err(|e| csv_err(e.into_error().into()))?)
        .expect("utf-8");

    // The table abbreviates the hash and rounds to four decimals.
    let display: Vec<Vec<String>> = std::iter::once(header.clone())
        .chain(cells.iter().map(|r| {
            r.iter()
                .enumerate()
                .map(|(i, c)| match i {
                    4 => c.chars().take(12).collect(),
                    i if i >= 5 && !c.is_empty() => {
                        format!("{:.4}", c.parse::<f64>().expect("own number"))
                    }
                    _ => c.clone(),
                })
                .collect()
        }))
        .collect();
    let widths: Vec<usize> = (0..header.len())
        .map(|c| {
            display
                .iter()
                .map(|r| r[c].chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut table = String::new();
    for (i, r) in display.iter().enumerate() {
        let line: Vec<String> = r
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(c, (cell, &w))| {
                if c < 5 {
                    format!("{cell:<w$}")
                } else {
                    format!("{cell:>w$}")
                }
            })
            .collect();
        table.push_str(line.join("  ").trim_end());
        table.push('\n');
        if i == 0 {
            table.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
            table.push('\n');
        }
    }
    Ok(Report { csv, table })
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format {
        path: "report csv".into(),
        field: "row",
        reason: e.to_string(),
    }
}

/// One point of a sample-size sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleSize {
    PerClass(usize),
    Full,
}

impl SampleSize {
    /// Parses `"10"` or `"full"`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("full") {
            return Ok(SampleSize::Full);
        }
        match s.parse::<usize>() {
            Ok(n) if n > 0 => Ok(SampleSize::PerClass(n)),
            _ => Err(Error::param(
                "sizes",
                format!("`{s}` is neither a positive count nor `full`"),
            )),
        }
    }
}

impl std::fmt::Display for SampleSize {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SampleSize::PerClass(n) => write!(f, "{n}"),
            SampleSize::Full => f.write_str("full"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub size: SampleSize,
    pub seed: u64,
    pub mean_accuracy: f64,
    pub overall_accuracy: f64,
    pub summary: RunSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub points: Vec<SweepPoint>,
    /// Sizes (in the given order) where overall accuracy fell relative to the
    /// previous point.
    pub non_monotone: Vec<SampleSize>,
}

/// Runs `cfg` once per training-set size, each with the config's own seed.
/// Outputs of point `s` go to `<output>/size-<s>` when an output is set.
pub fn sample_size_sweep(cfg: &ExperimentConfig, sizes: &[SampleSize]) -> Result<SweepReport> {
    if sizes.is_empty() {
        return Err(Error::param("sizes", "need at least one size"));
    }
    if !cfg.experiment.uses_mnist() {
        return Err(Error::config(
            "experiment",
            "the sweep subsamples MNIST training sets",
        ));
    }
    let mut points = Vec::with_capacity(sizes.len());
    for &size in sizes {
        let mut c = cfg.clone();
        c.tasks.per_class = match size {
            SampleSize::PerClass(n) => Some(n),
            SampleSize::Full => None,
        };
        c.output = cfg.output.as_ref().map(|o| o.join(format!("size-{size}")));
        let summary = run_experiment(&c)?;
        points.push(SweepPoint {
            size,
            seed: c.seed,
            mean_accuracy: summary.mean_accuracy,
            overall_accuracy: summary.overall_accuracy,
            summary,
        });
    }
    let non_monotone = points
        .windows(2)
        .filter(|w| w[1].overall_accuracy < w[0].overall_accuracy)
        .map(|w| w[1].size)
        .collect();
    let report = SweepReport {
        points,
        non_monotone,
    };
    if let Some(dir) = &cfg.output {
        let path = dir.join("sweep.json");
        let text = serde_json::to_string_pretty(&report).expect("sweep serializes");
        fs::write(&path, text).map_err(|e| Error::io(path, e))?;
    }
    Ok(report)
}
