//! End-to-end commands behind the `btgf` binary.
//!
//! A run is described by a TOML file:
//!
//! ```toml
//! seed = 0
//! out = "runs/sbm"
//!
//! [data.sbm]            # or: [data] manifest = "acm/manifest.toml"
//! blocks = [50, 50, 50]
//!
//! [train]
//! epochs = 400
//! d = 10
//!
//! [filter]
//! gamma = 10.0
//! k = 2
//! ```
//!
//! Relative paths in the file resolve against the file's directory.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{check_bounds, trace_bounds, BoundCheckReport};
use crate::data::{
    export_embeddings, export_labels, export_losses, export_metrics, generate_sbm, load_dataset,
    metrics_row, read_labels, save_checkpoint, write_dataset, SbmConfig, METRICS_HEADER,
};
use crate::error::{Error, Result};
use crate::filter::{FilterConfig, FilterKind, GAMMA_GRID, ORDER_GRID};
use crate::graph::MultiRelationalGraph;
use crate::metrics::{silhouette, ClusterEvaluation};
use crate::model::{train, LossTerms, TrainConfig, TrainOutcome};

/// Environment variable capping worker threads when `--workers` is absent.
pub const THREADS_ENV: &str = "BTGF_THREADS";

pub const DEFAULT_TRIALS: usize = 100;
pub const DEFAULT_ABLATION_SEEDS: usize = 5;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sbm: Option<SbmConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    pub data: DataSource,
    #[serde(default)]
    pub train: TrainConfig,
    /// Overrides `train.filter` when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<FilterConfig>,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    /// The default SBM fixture with default training settings.
    pub fn sbm_fixture() -> Self {
        Self {
            seed: 0,
            out: default_out(),
            data: DataSource {
                manifest: None,
                sbm: Some(SbmConfig::default()),
            },
            train: TrainConfig::default(),
            filter: None,
        }
    }

    pub fn from_toml(text: &str, origin: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            line: e.span().map_or(0, |s| text[..s.start].lines().count().max(1)),
            message: e.message().to_string(),
        })?;
        let base = origin.parent().unwrap_or(Path::new(""));
        if let Some(m) = cfg.data.manifest.as_mut() {
            if m.is_relative() {
                *m = base.join(&*m);
            }
        }
        if cfg.out.is_relative() {
            cfg.out = base.join(&cfg.out);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, path)
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.data.manifest, &self.data.sbm) {
            (Some(_), Some(_)) => Err(Error::Config("set exactly one of data.manifest and data.sbm, not both".into())),
            (None, None) => Err(Error::Config("no data source: set data.manifest or data.sbm".into())),
            (_, Some(sbm)) => sbm.validate(),
            _ => Ok(()),
        }?;
        self.train_config().validate()
    }

    /// Training settings with the run seed and filter override applied.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: self.seed,
            filter: self.filter.unwrap_or(self.train.filter),
            ..self.train.clone()
        }
    }

    pub fn load_graph(&self) -> Result<MultiRelationalGraph> {
        match (&self.data.manifest, &self.data.sbm) {
            (Some(path), None) => load_dataset(path),
            (None, Some(sbm)) => generate_sbm(sbm),
            _ => Err(Error::Config("set exactly one of data.manifest and data.sbm".into())),
        }
    }
}

/// Runs `f` on a pool of `workers` threads, falling back to `BTGF_THREADS`
/// and then to rayon's default.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let workers = match workers {
        Some(w) => Some(w),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(
                v.trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?,
            ),
            Err(_) => None,
        },
    };
    if workers == Some(0) {
        return Err(Error::Config("worker count must be >= 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("cannot start thread pool: {e}")))?;
    pool.install(f)
}

fn create_out_dir(out: &Path) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))
}

/// One grid point of a hyperparameter sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub k: usize,
    pub gamma: f64,
    /// ACC when labels exist, silhouette of the embedding otherwise.
    pub score: f64,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out: PathBuf,
    pub evaluation: Option<ClusterEvaluation>,
    pub silhouette: f64,
    pub filter: FilterConfig,
    pub sweep: Vec<SweepPoint>,
    pub decorrelation_omitted: bool,
    pub outcome: TrainOutcome,
}

impl fmt::Display for RunSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.decorrelation_omitted {
            writeln!(f, "note: single relation, feature decorrelation term omitted")?;
        }
        if !self.sweep.is_empty() {
            writeln!(f, "sweep selected k = {}, gamma = {}", self.filter.k, self.filter.gamma)?;
        }
        match &self.evaluation {
            Some(e) => write!(f, "ACC {:.4}  F1 {:.4}  NMI {:.4}  ARI {:.4}", e.acc, e.f1, e.nmi, e.ari)?,
            None => write!(f, "no labels; silhouette {:.4}", self.silhouette)?,
        }
        write!(f, "\nartifacts written to {}", self.out.display())
    }
}

fn score(graph: &MultiRelationalGraph, outcome: &TrainOutcome) -> Result<f64> {
    match graph.labels() {
        Some(truth) => Ok(ClusterEvaluation::evaluate(&outcome.labels, truth)?.acc),
        None => silhouette(&outcome.embedding, &outcome.labels),
    }
}

/// Trains every `(k, gamma)` grid point in parallel. Ties go to the earliest
/// point in grid order.
fn sweep(graph: &MultiRelationalGraph, base: &TrainConfig) -> Result<(Vec<SweepPoint>, FilterConfig, TrainOutcome)> {
    let grid: Vec<(usize, f64)> = ORDER_GRID
        .iter()
        .flat_map(|&k| GAMMA_GRID.iter().map(move |&g| (k, g)))
        .collect();
    let runs = grid
        .par_iter()
        .map(|&(k, gamma)| {
            let cfg = TrainConfig {
                filter: FilterConfig { k, gamma, ..base.filter },
                ..base.clone()
            };
            let outcome = train(graph, &cfg)?;
            let s = score(graph, &outcome)?;
            Ok((SweepPoint { k, gamma, score: s }, cfg.filter, outcome))
        })
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<SweepPoint> = runs.iter().map(|r| r.0.clone()).collect();
    let best = points
        .iter()
        .enumerate()
        .fold(0, |best, (i, p)| if p.score > points[best].score { i } else { best });
    let (_, filter, outcome) = runs.into_iter().nth(best).expect("grid is non-empty");
    Ok((points, filter, outcome))
}

fn write_sweep(points: &[SweepPoint], path: &Path) -> Result<()> {
    let mut text = String::from("k,gamma,score\n");
    for p in points {
        text.push_str(&format!("{},{:?},{:?}\n", p.k, p.gamma, p.score));
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Trains once (or sweeps the filter grid) and writes all artifacts to
/// `cfg.out`: metrics.csv (labeled data only), losses.csv, bounds.csv,
/// embeddings.csv, labels.txt, checkpoint.json and, for sweeps, sweep.csv.
pub fn cmd_run(cfg: &RunConfig, do_sweep: bool) -> Result<RunSummary> {
    cfg.validate()?;
    let graph = cfg.load_graph()?;
    let train_cfg = cfg.train_config();
    let (points, filter, outcome) = if do_sweep {
        sweep(&graph, &train_cfg)?
    } else {
        (Vec::new(), train_cfg.filter, train(&graph, &train_cfg)?)
    };

    let out = &cfg.out;
    create_out_dir(out)?;
    let evaluation = match graph.labels() {
        Some(truth) => {
            let e = ClusterEvaluation::evaluate(&outcome.labels, truth)?;
            export_metrics(&e, &out.join("metrics.csv"))?;
            Some(e)
        }
        None => None,
    };
    let silhouette = silhouette(&outcome.embedding, &outcome.labels)?;
    export_losses(&outcome.history, &out.join("losses.csv"))?;
    trace_bounds(&outcome.history, &outcome.pair_min_eigs)?.save_csv(&out.join("bounds.csv"))?;
    export_embeddings(&outcome.embedding, &out.join("embeddings.csv"))?;
    export_labels(&outcome.labels, &out.join("labels.txt"))?;
    save_checkpoint(&outcome.state, &out.join("checkpoint.json"))?;
    if do_sweep {
        write_sweep(&points, &out.join("sweep.csv"))?;
    }
    Ok(RunSummary {
        out: out.clone(),
        evaluation,
        silhouette,
        filter,
        sweep: points,
        decorrelation_omitted: outcome.decorrelation_omitted,
        outcome,
    })
}

/// Filter and loss variants compared by [`cmd_ablate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AblationVariant {
    /// Learned filter, all loss terms.
    Full,
    LowPass,
    MixPass,
    Identity,
    WithoutDecorrelation,
    WithoutReconstruction,
}

impl AblationVariant {
    pub const ALL: [AblationVariant; 6] = [
        AblationVariant::Full,
        AblationVariant::LowPass,
        AblationVariant::MixPass,
        AblationVariant::Identity,
        AblationVariant::WithoutDecorrelation,
        AblationVariant::WithoutReconstruction,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AblationVariant::Full => "learned",
            AblationVariant::LowPass => "low_pass",
            AblationVariant::MixPass => "mix_pass",
            AblationVariant::Identity => "identity",
            AblationVariant::WithoutDecorrelation => "without_l_fd",
            AblationVariant::WithoutReconstruction => "without_l_msce",
        }
    }

    pub fn apply(self, base: &TrainConfig) -> TrainConfig {
        let mut cfg = base.clone();
        match self {
            AblationVariant::Full => {
                cfg.filter.kind = FilterKind::Learned;
                cfg.terms = LossTerms::FULL;
            }
            AblationVariant::LowPass => cfg.filter.kind = FilterKind::LowPass,
            AblationVariant::MixPass => cfg.filter.kind = FilterKind::MixPass,
            AblationVariant::Identity => cfg.filter.kind = FilterKind::Identity,
            AblationVariant::WithoutDecorrelation => cfg.terms = LossTerms::WITHOUT_DECORRELATION,
            AblationVariant::WithoutReconstruction => cfg.terms = LossTerms::WITHOUT_RECONSTRUCTION,
        }
        cfg
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub variant: AblationVariant,
    /// Metrics averaged over seeds.
    pub mean: ClusterEvaluation,
    pub per_seed: Vec<ClusterEvaluation>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationTable {
    pub seeds: Vec<u64>,
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    pub const CSV_HEADER: &'static str = "variant,acc,f1,nmi,ari";

    pub fn row(&self, variant: AblationVariant) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.variant == variant)
    }

    pub fn to_csv(&self) -> String {
        let mut text = format!("{}\n", Self::CSV_HEADER);
        for r in &self.rows {
            text.push_str(&format!("{},{}\n", r.variant.name(), metrics_row(&r.mean)));
        }
        text
    }
}

impl fmt::Display for AblationTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<16} {:>7} {:>7} {:>7} {:>7}", "variant", "ACC", "F1", "NMI", "ARI")?;
        for r in &self.rows {
            let m = &r.mean;
            writeln!(f, "{:<16} {:>7.4} {:>7.4} {:>7.4} {:>7.4}", r.variant.name(), m.acc, m.f1, m.nmi, m.ari)?;
        }
        write!(f, "averaged over seeds {:?}", self.seeds)
    }
}

fn mean_evaluation(evals: &[ClusterEvaluation]) -> ClusterEvaluation {
    let k = evals.len() as f64;
    let avg = |get: fn(&ClusterEvaluation) -> f64| evals.iter().map(get).sum::<f64>() / k;
    ClusterEvaluation {
        acc: avg(|e| e.acc),
        f1: avg(|e| e.f1),
        nmi: avg(|e| e.nmi),
        ari: avg(|e| e.ari),
        mapping: Vec::new(),
    }
}

/// Trains every variant once per seed and averages the metrics. Needs
/// labeled data.
pub fn ablate(graph: &MultiRelationalGraph, base: &TrainConfig, seeds: &[u64]) -> Result<AblationTable> {
    let truth = graph
        .labels()
        .ok_or_else(|| Error::Config("ablation needs a labeled dataset".into()))?;
    if seeds.is_empty() {
        return Err(Error::Config("ablation needs at least one seed".into()));
    }
    let jobs: Vec<(AblationVariant, u64)> = AblationVariant::ALL
        .iter()
        .flat_map(|&v| seeds.iter().map(move |&s| (v, s)))
        .collect();
    let evals = jobs
        .par_iter()
        .map(|&(variant, seed)| {
            let cfg = TrainConfig {
                seed,
                ..variant.apply(base)
            };
            ClusterEvaluation::evaluate(&train(graph, &cfg)?.labels, truth)
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = AblationVariant::ALL
        .iter()
        .zip(evals.chunks(seeds.len()))
        .map(|(&variant, chunk)| AblationRow {
            variant,
            mean: mean_evaluation(chunk),
            per_seed: chunk.to_vec(),
        })
        .collect();
    Ok(AblationTable {
        seeds: seeds.to_vec(),
        rows,
    })
}

/// Runs [`ablate`] for seeds `cfg.seed .. cfg.seed + repeats` and writes
/// `ablation.csv`.
pub fn cmd_ablate(cfg: &RunConfig, repeats: usize) -> Result<AblationTable> {
    cfg.validate()?;
    let graph = cfg.load_graph()?;
    let seeds: Vec<u64> = (0..repeats as u64).map(|i| cfg.seed + i).collect();
    let table = ablate(&graph, &cfg.train_config(), &seeds)?;
    create_out_dir(&cfg.out)?;
    let path = cfg.out.join("ablation.csv");
    fs::write(&path, table.to_csv()).map_err(|e| Error::io(&path, e))?;
    Ok(table)
}

impl fmt::Display for BoundCheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "lower bound (NSD inputs): {}/{} passed, min gap {:.3e}", self.lower_passed, self.trials, self.min_lower_gap)?;
        write!(f, "upper bound (PSD inputs): {}/{} passed, min gap {:.3e}", self.upper_passed, self.trials, self.min_upper_gap)
    }
}

pub fn cmd_verify_bounds(seed: u64, trials: usize) -> Result<BoundCheckReport> {
    check_bounds(seed, trials)
}

/// Generates an SBM dataset (from `cfg`, or the default fixture) into `out`.
pub fn cmd_generate(cfg: Option<&Path>, seed: Option<u64>, out: &Path) -> Result<PathBuf> {
    let mut sbm = match cfg {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            toml::from_str::<SbmConfig>(&text).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: e.span().map_or(0, |s| text[..s.start].lines().count().max(1)),
                message: e.message().to_string(),
            })?
        }
        None => SbmConfig::default(),
    };
    if let Some(seed) = seed {
        sbm.seed = seed;
    }
    let graph = generate_sbm(&sbm)?;
    write_dataset(&graph, out, "sbm")
}

/// Scores a predicted labeling against ground truth; optionally writes
/// metrics.csv to `out`.
pub fn cmd_evaluate(pred: &Path, truth: &Path, out: Option<&Path>) -> Result<ClusterEvaluation> {
    let truth_labels = read_labels(truth, None)?;
    let pred_labels = read_labels(pred, Some(truth_labels.len()))?;
    let eval = ClusterEvaluation::evaluate(&pred_labels, &truth_labels)?;
    if let Some(out) = out {
        create_out_dir(out)?;
        export_metrics(&eval, &out.join("metrics.csv"))?;
    }
    Ok(eval)
}

pub fn format_metrics(eval: &ClusterEvaluation) -> String {
    format!("{METRICS_HEADER}\n{}", metrics_row(eval))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exactly_one_data_source() {
        let both = "[data]\nmanifest = \"m.toml\"\n[data.sbm]\nblocks = [2, 2]\n";
        assert!(matches!(RunConfig::from_toml(both, Path::new("c.toml")), Err(Error::Config(_))));
        let none = "[data]\n";
        assert!(matches!(RunConfig::from_toml(none, Path::new("c.toml")), Err(Error::Config(_))));
    }

    #[test]
    fn paths_resolve_against_config_dir() {
        let text = "out = \"res\"\n[data]\nmanifest = \"acm/manifest.toml\"\n";
        let cfg = RunConfig::from_toml(text, Path::new("/cfg/run.toml")).unwrap();
        assert_eq!(cfg.data.manifest.unwrap(), PathBuf::from("/cfg/acm/manifest.toml"));
        assert_eq!(cfg.out, PathBuf::from("/cfg/res"));
    }

    #[test]
    fn filter_section_overrides_train_filter() {
        let text = "seed = 4\n[data.sbm]\n[train]\nepochs = 3\n[filter]\ngamma = 100.0\nk = 3\n";
        let cfg = RunConfig::from_toml(text, Path::new("run.toml")).unwrap();
        let t = cfg.train_config();
        assert_eq!((t.seed, t.epochs, t.filter.gamma, t.filter.k), (4, 3, 100.0, 3));
    }

    #[test]
    fn ablation_has_six_distinct_variants() {
        let base = TrainConfig::default();
        let cfgs: Vec<TrainConfig> = AblationVariant::ALL.iter().map(|v| v.apply(&base)).collect();
        for i in 0..cfgs.len() {
            for j in (i + 1)..cfgs.len() {
                assert_ne!(cfgs[i], cfgs[j]);
            }
        }
        assert_eq!(AblationVariant::WithoutDecorrelation.apply(&base).filter.kind, FilterKind::Learned);
    }

    #[test]
    fn zero_workers_rejected() {
        assert!(with_workers(Some(0), || Ok(())).is_err());
        assert_eq!(with_workers(Some(2), || Ok(rayon::current_num_threads())).unwrap(), 2);
    }
}
