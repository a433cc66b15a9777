//! End-to-end orchestration: raw CSV to selected features, cross-validated
//! metrics and a final model, with every intermediate written to disk.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::binarize::{binarize_dataset, write_discretized_csv, BinaryMatrix};
use crate::bits::BitVec;
use crate::config::DatasetConfig;
use crate::dataset::{load_dataset, RawDataset};
use crate::error::{Error, Result};
use crate::eval::{confusion, stratified_kfold, MetricReport};
use crate::gafs::{run_ga, write_history_csv, GaConfig, GaResult};
use crate::miner::{inject_features, mine_frequent_itemsets, write_itemset_table, AugmentedMatrix, Itemset, MinerConfig};
use crate::profiling::{discretize_dataset, DiscretizedRecord};
use crate::svm::{self, Gram, SavedModel, SvmConfig};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineConfig {
    pub dataset: PathBuf,
    pub config: PathBuf,
    pub out_dir: PathBuf,
    pub seed: u64,
    /// Outer cross-validation folds for the reported metrics.
    pub eval_folds: usize,
    /// Run the GA inside each outer fold on training rows only.
    pub nested_cv: bool,
    pub miner: MinerConfig,
    /// `seed` is overridden by the pipeline seed.
    pub ga: GaConfig,
    pub svm: SvmConfig,
}

impl PipelineConfig {
    pub fn new(dataset: impl Into<PathBuf>, config: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            dataset: dataset.into(),
            config: config.into(),
            out_dir: out_dir.into(),
            seed: 0,
            eval_folds: 10,
            nested_cv: true,
            miner: MinerConfig { min_sup: 0.1, max_k: None },
            ga: GaConfig::default(),
            svm: SvmConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.eval_folds < 2 {
            return Err(Error::Param("eval_folds must be at least 2".into()));
        }
        self.miner.validate()?;
        self.ga.validate()?;
        self.svm.validate()
    }

    fn ga_config(&self) -> GaConfig {
        GaConfig { seed: self.seed, ..self.ga.clone() }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineReport {
    pub n_records: usize,
    pub base_features: usize,
    pub extracted_features: usize,
    pub augmented_features: usize,
    pub selected: Vec<String>,
    pub ga: GaResult,
    pub metrics: MetricReport,
    pub manifest: PathBuf,
}

/// Load the config and dataset, then discretize every record.
pub fn load_and_discretize(dataset: &Path, config: &Path) -> Result<(DatasetConfig, RawDataset, Vec<DiscretizedRecord>)> {
    let cfg = DatasetConfig::load(config)?;
    let raw = load_dataset(dataset, &cfg.schema)?;
    let records = discretize_dataset(&raw, &cfg.profiles, &cfg.ranges)?;
    Ok((cfg, raw, records))
}

/// How each outer fold chooses its feature columns.
#[derive(Debug, Clone)]
pub enum Selection<'a> {
    /// Same columns in every fold.
    Fixed(&'a BitVec),
    /// A fresh GA per fold, trained on that fold's training rows.
    Nested(&'a GaConfig),
}

fn fold_seed(seed: u64, fold: usize) -> u64 {
    // splitmix64 step keeps per-fold streams well separated
    let mut z = seed.wrapping_add((fold as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn masked_scores(data: &BinaryMatrix, rows: &[BitVec], mask: &BitVec, folds: &[(Vec<usize>, Vec<usize>)], svm_cfg: &SvmConfig) -> Result<Vec<f64>> {
    let resolved = svm_cfg.resolved(mask.count_ones());
    let masked: Vec<BitVec> = rows.iter().map(|r| r.and(mask)).collect();
    let gram = Gram::new(&masked, &resolved.kernel.resolve(mask.count_ones()))?;
    let labels: Vec<bool> = data.target.iter().collect();
    svm::out_of_fold_scores(&gram, &labels, folds, &resolved)
}

/// Stratified k-fold evaluation. Returns the report and each fold's mask.
pub fn cross_validate(
    data: &BinaryMatrix,
    folds: usize,
    seed: u64,
    svm_cfg: &SvmConfig,
    selection: Selection<'_>,
) -> Result<(MetricReport, Vec<BitVec>)> {
    let labels: Vec<bool> = data.target.iter().collect();
    let splits = stratified_kfold(data.n_records, &labels, folds, seed)?;
    let rows = data.rows();
    let mut scores = vec![f64::NAN; data.n_records];
    let mut per_fold = Vec::with_capacity(splits.len());
    let mut masks = Vec::with_capacity(splits.len());
    for (f, split) in splits.iter().enumerate() {
        let mask = match &selection {
            Selection::Fixed(m) => (*m).clone(),
            Selection::Nested(ga) => {
                let train = data.select_rows(&split.0);
                let ga = GaConfig { seed: fold_seed(ga.seed, f), ..(*ga).clone() };
                let r = run_ga(&train, &ga, svm_cfg)?;
                log::info!("fold {f}: GA picked {} columns, inner fitness {:.4}", r.best.selected(), r.fitness);
                r.best.bits
            }
        };
        if mask.len() != data.n_features() || !mask.any() {
            return Err(Error::Param("selection mask is empty or has the wrong width".into()));
        }
        let s = masked_scores(data, &rows, &mask, std::slice::from_ref(split), svm_cfg)?;
        let test = &split.1;
        for &t in test {
            scores[t] = s[t];
        }
        let predicted: Vec<bool> = test.iter().map(|&t| svm::predict_from_value(s[t])).collect();
        let actual: Vec<bool> = test.iter().map(|&t| labels[t]).collect();
        per_fold.push((confusion(&predicted, &actual)?, Some(mask.count_ones())));
        masks.push(mask);
    }
    Ok((MetricReport::from_folds(per_fold, &scores, &labels)?, masks))
}

/// Train on all rows using the masked columns.
pub fn train_final(data: &BinaryMatrix, mask: &BitVec, svm_cfg: &SvmConfig) -> Result<SavedModel> {
    let idx: Vec<usize> = mask.ones_indices().collect();
    let sub = data.select_columns(&idx);
    let labels: Vec<bool> = sub.target.iter().collect();
    let model = svm::train(&sub.rows(), &labels, svm_cfg)?;
    Ok(SavedModel { feature_names: sub.feature_names, model })
}

/// Score a saved model on a binary matrix, matching columns by name.
pub fn evaluate_model(saved: &SavedModel, data: &BinaryMatrix) -> Result<MetricReport> {
    let idx = saved
        .feature_names
        .iter()
        .map(|n| {
            data.column_index(n)
                .ok_or_else(|| Error::Data(format!("model feature {n:?} missing from test data")))
        })
        .collect::<Result<Vec<_>>>()?;
    let sub = data.select_columns(&idx);
    let scores = sub
        .rows()
        .iter()
        .map(|r| saved.model.decision_value(r))
        .collect::<Result<Vec<_>>>()?;
    let actual: Vec<bool> = sub.target.iter().collect();
    let predicted: Vec<bool> = scores.iter().map(|&s| svm::predict_from_value(s)).collect();
    let cm = confusion(&predicted, &actual)?;
    MetricReport::from_folds(vec![(cm, Some(idx.len()))], &scores, &actual)
}

/// Buffered file writer with the path in any error.
pub fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path).map_err(|e| Error::io(path, e))?))
}

pub fn write_string(path: &Path, s: &str) -> Result<()> {
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

pub fn write_selected(path: &Path, names: &[String]) -> Result<()> {
    let mut s = String::new();
    for n in names {
        s += n;
        s.push('\n');
    }
    write_string(path, &s)
}

/// Itemset table plus augmented CSV.
pub fn write_mining_outputs(dir: &Path, base: &BinaryMatrix, itemsets: &[Itemset], aug: &AugmentedMatrix) -> Result<()> {
    write_itemset_table(create(&dir.join("itemsets.tsv"))?, itemsets, &base.feature_names)?;
    aug.combined().write_csv(create(&dir.join("augmented.csv"))?)
}

pub fn write_metrics(dir: &Path, header: &str, metrics: &MetricReport) -> Result<()> {
    write_string(&dir.join("metrics.txt"), &format!("{header}{}", metrics.to_text()))?;
    write_string(&dir.join("roc.csv"), &metrics.roc_csv())
}

/// `key = value` lines recording the run parameters, for report headers.
pub fn parameter_lines(cfg: &PipelineConfig) -> String {
    let ga = cfg.ga_config();
    let mut s = String::new();
    s += &format!("seed = {}\n", cfg.seed);
    s += &format!("dataset = {}\n", cfg.dataset.display());
    s += &format!("config = {}\n", cfg.config.display());
    s += &format!("eval_folds = {}\nnested_cv = {}\n", cfg.eval_folds, cfg.nested_cv);
    s += &format!("min_sup = {}\n", cfg.miner.min_sup);
    s += &format!("max_k = {}\n", cfg.miner.max_k.map_or("none".into(), |k| k.to_string()));
    s += &format!(
        "ga = population {} crossover {} mutation {} elitism {} generations {} target {} fitness_folds {}\n",
        ga.population_size,
        ga.crossover_rate,
        ga.mutation_rate.map_or("1/len".into(), |r| r.to_string()),
        ga.elitism_count,
        ga.max_generations,
        ga.target_fitness.map_or("none".into(), |t| t.to_string()),
        ga.fitness_folds
    );
    s += &format!("svm = {}\n", svm_label(&cfg.svm));
    s
}

/// One-line description of an SVM configuration.
pub fn svm_label(svm_cfg: &SvmConfig) -> String {
    format!(
        "kernel {} c {} tol {} max_iter {}",
        kernel_label(svm_cfg),
        svm_cfg.c,
        svm_cfg.tol,
        svm_cfg.max_iter
    )
}

fn kernel_label(svm_cfg: &SvmConfig) -> String {
    use crate::svm::KernelSpec::*;
    let g = |g: Option<f64>| g.map_or("1/features".to_string(), |g| g.to_string());
    match svm_cfg.kernel {
        Linear => "linear".into(),
        Polynomial { degree, gamma, coef0 } => format!("polynomial degree={degree} gamma={} coef0={coef0}", g(gamma)),
        Rbf { gamma } => format!("rbf gamma={}", g(gamma)),
        Sigmoid { gamma, coef0 } => format!("sigmoid gamma={} coef0={coef0}", g(gamma)),
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    run: &'a PipelineConfig,
    data: DataSection,
    mining: MiningSection,
    selection: SelectionSection,
    metrics: MetricsSection,
    artifacts: Vec<&'static str>,
}

#[derive(Serialize)]
struct DataSection {
    records: usize,
    positives: usize,
    base_features: usize,
}

#[derive(Serialize)]
struct MiningSection {
    min_count: usize,
    extracted_features: usize,
    aliased_single_items: usize,
    injected_columns: usize,
    augmented_features: usize,
}

#[derive(Serialize)]
struct SelectionSection {
    selected_features: usize,
    ga_fitness: f64,
    generations: usize,
    evaluations: usize,
    per_fold_selected: Vec<usize>,
}

#[derive(Serialize)]
struct MetricsSection {
    accuracy: f64,
    sensitivity: f64,
    specificity: f64,
    fpr: f64,
    tpr: f64,
    auc: f64,
    mean_fold_accuracy: f64,
    f11: usize,
    f10: usize,
    f01: usize,
    f00: usize,
}

const ARTIFACTS: [&str; 10] = [
    "discretized.csv",
    "binary.csv",
    "itemsets.tsv",
    "augmented.csv",
    "selected.txt",
    "history.csv",
    "model.txt",
    "metrics.txt",
    "roc.csv",
    "manifest.toml",
];

/// Run every stage, writing artifacts into `cfg.out_dir` as they are
/// produced. A failing stage is reported by name; earlier artifacts stay.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineReport> {
    cfg.validate()?;
    let dir = cfg.out_dir.as_path();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let t = Instant::now();
    let (dcfg, _raw, records) = load_and_discretize(&cfg.dataset, &cfg.config).map_err(|e| e.in_stage("discretize"))?;
    write_discretized_csv(create(&dir.join("discretized.csv"))?, &records, &dcfg.schema).map_err(|e| e.in_stage("discretize"))?;
    log::info!("discretize: {} records ({:.2?})", records.len(), t.elapsed());

    let t = Instant::now();
    let base = binarize_dataset(&records, &dcfg.schema).map_err(|e| e.in_stage("binarize"))?;
    base.write_csv(create(&dir.join("binary.csv"))?).map_err(|e| e.in_stage("binarize"))?;
    log::info!("binarize: {} feature columns ({:.2?})", base.n_features(), t.elapsed());

    let t = Instant::now();
    let itemsets = mine_frequent_itemsets(&base, &cfg.miner).map_err(|e| e.in_stage("mine"))?;
    log::info!("mine: {} frequent itemsets at min_sup {} ({:.2?})", itemsets.len(), cfg.miner.min_sup, t.elapsed());

    let t = Instant::now();
    let aug = inject_features(&base, &itemsets).map_err(|e| e.in_stage("inject"))?;
    write_mining_outputs(dir, &base, &itemsets, &aug).map_err(|e| e.in_stage("inject"))?;
    let data = aug.combined();
    log::info!("inject: {} columns ({:.2?})", data.n_features(), t.elapsed());

    let t = Instant::now();
    let ga_cfg = cfg.ga_config();
    let ga = run_ga(&data, &ga_cfg, &cfg.svm).map_err(|e| e.in_stage("select"))?;
    let selected: Vec<String> = ga.best.indices().into_iter().map(|i| data.feature_names[i].clone()).collect();
    write_selected(&dir.join("selected.txt"), &selected).map_err(|e| e.in_stage("select"))?;
    write_string(&dir.join("history.csv"), &write_history_csv(&ga.history)).map_err(|e| e.in_stage("select"))?;
    log::info!("select: {} columns, fitness {:.4} ({:.2?})", selected.len(), ga.fitness, t.elapsed());

    let t = Instant::now();
    let selection = if cfg.nested_cv { Selection::Nested(&ga_cfg) } else { Selection::Fixed(&ga.best.bits) };
    let (metrics, masks) =
        cross_validate(&data, cfg.eval_folds, cfg.seed, &cfg.svm, selection).map_err(|e| e.in_stage("evaluate"))?;
    let model = train_final(&data, &ga.best.bits, &cfg.svm).map_err(|e| e.in_stage("evaluate"))?;
    model.write(create(&dir.join("model.txt"))?).map_err(|e| e.in_stage("evaluate"))?;
    write_metrics(dir, &parameter_lines(cfg), &metrics).map_err(|e| e.in_stage("evaluate"))?;
    log::info!("evaluate: pooled accuracy {:.4}, auc {:.4} ({:.2?})", metrics.accuracy, metrics.auc, t.elapsed());

    let c = &metrics.pooled;
    let manifest = Manifest {
        run: cfg,
        data: DataSection {
            records: base.n_records,
            positives: base.target.count_ones(),
            base_features: base.n_features(),
        },
        mining: MiningSection {
            min_count: cfg.miner.min_count(base.n_records),
            extracted_features: aug.extracted_count(),
            aliased_single_items: aug.aliases.len(),
            injected_columns: aug.injected.len(),
            augmented_features: aug.feature_count(),
        },
        selection: SelectionSection {
            selected_features: selected.len(),
            ga_fitness: ga.fitness,
            generations: ga.history.len(),
            evaluations: ga.evaluations,
            per_fold_selected: masks.iter().map(BitVec::count_ones).collect(),
        },
        metrics: MetricsSection {
            accuracy: metrics.accuracy,
            sensitivity: metrics.sensitivity,
            specificity: metrics.specificity,
            fpr: metrics.fpr,
            tpr: metrics.tpr,
            auc: metrics.auc,
            mean_fold_accuracy: metrics.mean_fold_accuracy,
            f11: c.f11,
            f10: c.f10,
            f01: c.f01,
            f00: c.f00,
        },
        artifacts: ARTIFACTS.to_vec(),
    };
    let text = toml::to_string(&manifest).map_err(|e| Error::Data(format!("manifest: {e}")))?;
    let manifest_path = dir.join("manifest.toml");
    write_string(&manifest_path, &text)?;

    Ok(PipelineReport {
        n_records: base.n_records,
        base_features: base.n_features(),
        extracted_features: aug.extracted_count(),
        augmented_features: aug.feature_count(),
        selected,
        ga,
        metrics,
        manifest: manifest_path,
    })
}
