use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cadmine::binarize::{binarize_dataset, read_discretized_csv, write_discretized_csv, BinaryMatrix};
use cadmine::bits::BitVec;
use cadmine::config::DatasetConfig;
use cadmine::eval::rank_features;
use cadmine::gafs::{run_ga, write_history_csv, GaConfig};
use cadmine::miner::{inject_features, mine_frequent_itemsets, sweep_min_sup, write_itemset_table, MinerConfig};
use cadmine::pipeline::{
    self, create, cross_validate, evaluate_model, load_and_discretize, run_pipeline, train_final, write_selected,
    write_string, PipelineConfig, Selection,
};
use cadmine::svm::{KernelSpec, SavedModel, SvmConfig};
use cadmine::{Error, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

/// Profile-based feature extraction and GA/SVM feature selection for
/// tabular clinical data.
#[derive(Parser, Debug)]
#[command(name = "cadmine", version, about)]
struct Cli {
    /// Master random seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Map numeric values to Low/Normal/High using per-profile normal ranges.
    Discretize(DiscretizeArgs),
    /// Turn a discretized CSV into a 0/1 matrix.
    Binarize(BinarizeArgs),
    /// Mine frequent itemsets and append them as columns.
    Mine(MineArgs),
    /// GA feature selection with SVM cross-validated accuracy as fitness.
    Select(SelectArgs),
    /// Score a saved model, or cross-validate a feature list.
    Evaluate(EvaluateArgs),
    /// Rank columns by information gain against the target.
    Rank(RankArgs),
    /// Count frequent itemsets for several support thresholds.
    Sweep(SweepArgs),
    /// Every stage end to end.
    Run(RunArgs),
}

#[derive(Args, Debug)]
struct DiscretizeArgs {
    /// Schema, profile and range config.
    #[arg(long)]
    config: PathBuf,
    /// Raw dataset CSV.
    #[arg(long)]
    data: PathBuf,
    /// Output CSV (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BinarizeArgs {
    #[arg(long)]
    config: PathBuf,
    /// Discretized CSV.
    #[arg(long)]
    input: PathBuf,
    /// Output CSV (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MineArgs {
    /// Binary matrix CSV.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    min_sup: f64,
    /// Largest itemset size.
    #[arg(long)]
    max_k: Option<usize>,
    /// Directory for itemsets.tsv and augmented.csv (default: table on stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SelectArgs {
    /// Binary (usually augmented) matrix CSV.
    #[arg(long)]
    input: PathBuf,
    /// Directory for selected.txt, history.csv and model.txt.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    ga: GaArgs,
    #[command(flatten)]
    svm: SvmArgs,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Binary matrix CSV.
    #[arg(long)]
    input: PathBuf,
    /// Saved model to score on the input.
    #[arg(long, conflicts_with = "selected")]
    model: Option<PathBuf>,
    /// Feature list to cross-validate on the input.
    #[arg(long, required_unless_present = "model")]
    selected: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    /// Directory for metrics.txt and roc.csv (default: metrics on stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    svm: SvmArgs,
}

#[derive(Args, Debug)]
struct RankArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 20)]
    top: usize,
    /// Output CSV (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    input: PathBuf,
    /// Comma-separated thresholds.
    #[arg(long, value_delimiter = ',', required = true)]
    min_sups: Vec<f64>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Directory for all artifacts.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    min_sup: f64,
    #[arg(long)]
    max_k: Option<usize>,
    /// Outer cross-validation folds.
    #[arg(long, default_value_t = 10)]
    folds: usize,
    /// Run the GA inside each outer fold (false: once on all rows).
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    nested_cv: bool,
    #[command(flatten)]
    ga: GaArgs,
    #[command(flatten)]
    svm: SvmArgs,
}

#[derive(Args, Debug)]
struct GaArgs {
    #[arg(long, default_value_t = 50)]
    population: usize,
    #[arg(long, default_value_t = 100)]
    generations: usize,
    /// Per-bit flip probability (default: 1 / number of columns).
    #[arg(long)]
    mutation_rate: Option<f64>,
    #[arg(long, default_value_t = 0.9)]
    crossover_rate: f64,
    #[arg(long, default_value_t = 2)]
    elitism: usize,
    /// Stop once the best fitness reaches this value.
    #[arg(long)]
    target_fitness: Option<f64>,
    #[arg(long, default_value_t = 5)]
    fitness_folds: usize,
}

impl GaArgs {
    fn config(&self, seed: u64) -> GaConfig {
        GaConfig {
            population_size: self.population,
            crossover_rate: self.crossover_rate,
            mutation_rate: self.mutation_rate,
            elitism_count: self.elitism,
            max_generations: self.generations,
            target_fitness: self.target_fitness,
            seed,
            fitness_folds: self.fitness_folds,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum KernelKind {
    Linear,
    Rbf,
    Poly,
    Sigmoid,
}

#[derive(Args, Debug)]
struct SvmArgs {
    #[arg(long, value_enum, default_value_t = KernelKind::Rbf)]
    kernel: KernelKind,
    /// Kernel gamma (default: 1 / number of selected columns).
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = 3)]
    degree: u32,
    #[arg(long, default_value_t = 0.0)]
    coef0: f64,
    /// Soft-margin penalty.
    #[arg(long = "c", default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    #[arg(long, default_value_t = 1_000_000)]
    max_iter: usize,
}

impl SvmArgs {
    fn config(&self) -> SvmConfig {
        let kernel = match self.kernel {
            KernelKind::Linear => KernelSpec::Linear,
            KernelKind::Rbf => KernelSpec::Rbf { gamma: self.gamma },
            KernelKind::Poly => KernelSpec::Polynomial { degree: self.degree, gamma: self.gamma, coef0: self.coef0 },
            KernelKind::Sigmoid => KernelSpec::Sigmoid { gamma: self.gamma, coef0: self.coef0 },
        };
        SvmConfig { kernel, c: self.c, tol: self.tol, max_iter: self.max_iter }
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::Io { path: path.into(), source: e })
}

fn read_matrix(path: &Path) -> Result<BinaryMatrix> {
    BinaryMatrix::read_csv(open(path)?)
}

fn mkdir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::Io { path: path.into(), source: e })
}

fn stdout_err(e: io::Error) -> Error {
    Error::Io { path: "<stdout>".into(), source: e }
}

/// Run `f` against the file at `out`, or stdout when absent.
fn with_output(out: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match out {
        Some(p) => {
            let mut w = create(p)?;
            f(&mut w)?;
            w.flush().map_err(|e| Error::Io { path: p.into(), source: e })
        }
        None => {
            let mut w = io::stdout().lock();
            f(&mut w)?;
            w.flush().map_err(stdout_err)
        }
    }
}

fn read_selected(path: &Path, data: &BinaryMatrix) -> Result<BitVec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io { path: path.into(), source: e })?;
    let mut mask = BitVec::zeros(data.n_features());
    for name in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        let i = data
            .column_index(name)
            .ok_or_else(|| Error::Data(format!("selected feature {name:?} is not a column of the input")))?;
        mask.set(i, true);
    }
    if !mask.any() {
        return Err(Error::Data(format!("{} lists no features", path.display())));
    }
    Ok(mask)
}

fn discretize(a: &DiscretizeArgs) -> Result<()> {
    let (cfg, _, records) = load_and_discretize(&a.data, &a.config)?;
    log::info!("discretized {} records", records.len());
    with_output(a.out.as_deref(), |w| write_discretized_csv(w, &records, &cfg.schema))
}

fn binarize(a: &BinarizeArgs) -> Result<()> {
    let cfg = DatasetConfig::load(&a.config)?;
    let records = read_discretized_csv(open(&a.input)?, &cfg.schema)?;
    let m = binarize_dataset(&records, &cfg.schema)?;
    log::info!("{} records x {} binary columns", m.n_records, m.n_features());
    with_output(a.out.as_deref(), |w| m.write_csv(w))
}

fn mine(a: &MineArgs) -> Result<()> {
    let m = read_matrix(&a.input)?;
    let cfg = MinerConfig::new(a.min_sup, a.max_k)?;
    let sets = mine_frequent_itemsets(&m, &cfg)?;
    log::info!("{} frequent itemsets (support count >= {})", sets.len(), cfg.min_count(m.n_records));
    match &a.out {
        Some(dir) => {
            mkdir(dir)?;
            let aug = inject_features(&m, &sets)?;
            pipeline::write_mining_outputs(dir, &m, &sets, &aug)
        }
        None => with_output(None, |w| write_itemset_table(w, &sets, &m.feature_names)),
    }
}

fn select(a: &SelectArgs, seed: u64) -> Result<()> {
    let data = read_matrix(&a.input)?;
    let svm = a.svm.config();
    let r = run_ga(&data, &a.ga.config(seed), &svm)?;
    let names: Vec<String> = r.best.indices().into_iter().map(|i| data.feature_names[i].clone()).collect();
    log::info!("selected {} of {} columns, fitness {:.4}", names.len(), data.n_features(), r.fitness);
    mkdir(&a.out)?;
    write_selected(&a.out.join("selected.txt"), &names)?;
    write_string(&a.out.join("history.csv"), &write_history_csv(&r.history))?;
    let model = train_final(&data, &r.best.bits, &svm)?;
    let mut w = create(&a.out.join("model.txt"))?;
    model.write(&mut w)?;
    w.flush().map_err(|e| Error::Io { path: a.out.join("model.txt"), source: e })
}

fn evaluate(a: &EvaluateArgs, seed: u64) -> Result<()> {
    let data = read_matrix(&a.input)?;
    let mut header = format!("seed = {seed}\ninput = {}\n", a.input.display());
    let report = if let Some(model_path) = &a.model {
        let saved = SavedModel::read(open(model_path)?)?;
        header += &format!("model = {}\n", model_path.display());
        evaluate_model(&saved, &data)?
    } else {
        let path = a.selected.as_ref().expect("clap requires --selected without --model");
        let mask = read_selected(path, &data)?;
        let svm = a.svm.config();
        header += &format!(
            "selected = {}\nfolds = {}\nsvm = {}\n",
            path.display(),
            a.folds,
            pipeline::svm_label(&svm)
        );
        cross_validate(&data, a.folds, seed, &svm, Selection::Fixed(&mask))?.0
    };
    log::info!("accuracy {:.4}, auc {:.4}", report.accuracy, report.auc);
    match &a.out {
        Some(dir) => {
            mkdir(dir)?;
            pipeline::write_metrics(dir, &header, &report)
        }
        None => with_output(None, |w| {
            w.write_all(format!("{header}{}", report.to_text()).as_bytes()).map_err(stdout_err)
        }),
    }
}

fn rank(a: &RankArgs) -> Result<()> {
    let data = read_matrix(&a.input)?;
    let ranked = rank_features(&data, a.top)?;
    with_output(a.out.as_deref(), |w| {
        let mut s = String::from("feature,information_gain\n");
        for (name, gain) in &ranked {
            let quoted = if name.contains([',', '"']) { format!("\"{}\"", name.replace('"', "\"\"")) } else { name.clone() };
            s += &format!("{quoted},{gain:.6}\n");
        }
        w.write_all(s.as_bytes()).map_err(stdout_err)
    })
}

fn sweep(a: &SweepArgs) -> Result<()> {
    let data = read_matrix(&a.input)?;
    let rows = sweep_min_sup(&data, &a.min_sups)?;
    with_output(None, |w| {
        let mut s = String::from("min_sup,count\n");
        for (m, c) in rows {
            s += &format!("{m},{c}\n");
        }
        w.write_all(s.as_bytes()).map_err(stdout_err)
    })
}

fn run(a: &RunArgs, seed: u64) -> Result<()> {
    let cfg = PipelineConfig {
        dataset: a.data.clone(),
        config: a.config.clone(),
        out_dir: a.out.clone(),
        seed,
        eval_folds: a.folds,
        nested_cv: a.nested_cv,
        miner: MinerConfig::new(a.min_sup, a.max_k)?,
        ga: a.ga.config(seed),
        svm: a.svm.config(),
    };
    let r = run_pipeline(&cfg)?;
    println!(
        "records = {}\nextracted_features = {}\nselected_features = {}\naccuracy = {:.6}\nsensitivity = {:.6}\nspecificity = {:.6}\nauc = {:.6}\nmanifest = {}",
        r.n_records,
        r.extracted_features,
        r.selected.len(),
        r.metrics.accuracy,
        r.metrics.sensitivity,
        r.metrics.specificity,
        r.metrics.auc,
        r.manifest.display()
    );
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Discretize(a) => discretize(a),
        Command::Binarize(a) => binarize(a),
        Command::Mine(a) => mine(a),
        Command::Select(a) => select(a, cli.seed),
        Command::Evaluate(a) => evaluate(a, cli.seed),
        Command::Rank(a) => rank(a),
        Command::Sweep(a) => sweep(a),
        Command::Run(a) => run(a, cli.seed),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();

    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(EXIT_USAGE);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::error!("thread pool: {e}");
            return ExitCode::from(EXIT_INTERNAL);
        }
    }

    match std::panic::catch_unwind(|| dispatch(&cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            log::error!("{e}");
            if e.is_data_error() {
                ExitCode::from(EXIT_DATA)
            } else {
                ExitCode::from(EXIT_INTERNAL)
            }
        }
        Err(_) => ExitCode::from(EXIT_INTERNAL),
    }
}
