//! The `gwm` command line: dataset generation, automata, models, training and
//! the experiment presets.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::gwm::{self, GwmModel};
use crate::languages::{self, parse_size, Dataset, Exclusion, GenerateRequest, Language};
use crate::picture::{Picture, BLACK, WHITE};
use crate::training::{
    self, evaluate_dataset, predict, AdamConfig, Batching, Budget, Control, LossKind, Record, TrainConfig,
    TrainReport,
};
use crate::wpa;

#[derive(Parser, Debug)]
#[command(name = "gwm", version, about = "Graph weighted models over pictures")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a labelled dataset
    Gen(GenArgs),
    /// Weighted picture automata
    #[command(subcommand)]
    Wpa(WpaCommand),
    /// Graph weighted models
    #[command(subcommand)]
    Gwm(GwmCommand),
    /// Train a model on a dataset
    Train(TrainArgs),
    /// Score a model on a dataset
    Eval(EvalArgs),
    /// Run one of the bundled experiments end to end
    Reproduce(ReproduceArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum LanguageArg {
    Bs,
    Sb,
}

impl From<LanguageArg> for Language {
    fn from(l: LanguageArg) -> Self {
        match l {
            LanguageArg::Bs => Language::BarsStripes,
            LanguageArg::Sb => Language::ShiftingBits,
        }
    }
}

fn size_arg(s: &str) -> std::result::Result<(usize, usize), String> {
    parse_size(s).map_err(|e| e.to_string())
}

/// `5..15` (inclusive), `5,7,9` or a single number.
fn range_arg(s: &str) -> std::result::Result<Vec<usize>, String> {
    let num = |t: &str| {
        t.trim()
            .parse::<usize>()
            .ok()
            .filter(|&v| v > 0)
            .ok_or_else(|| format!("expected a positive integer, got {t:?}"))
    };
    let out: Vec<usize> = if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
        if a > b {
            return Err(format!("empty range {s:?}"));
        }
        (a..=b).collect()
    } else {
        s.split(',').map(num).collect::<std::result::Result<_, _>>()?
    };
    Ok(out)
}

#[derive(Args, Debug)]
pub struct GenArgs {
    pub language: LanguageArg,
    /// Picture size MxN; repeat or separate with commas for several sizes
    #[arg(long, value_parser = size_arg, value_delimiter = ',')]
    pub size: Vec<(usize, usize)>,
    /// Heights, combined with --widths (e.g. `2` or `2,3`)
    #[arg(long)]
    pub heights: Option<String>,
    /// Widths, combined with --heights (e.g. `5..15`)
    #[arg(long)]
    pub widths: Option<String>,
    #[arg(short = 'n', long = "count", default_value_t = 1000)]
    pub count: usize,
    #[arg(long, default_value_t = 0.5)]
    pub fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Dataset whose negatives must not reappear
    #[arg(long)]
    pub exclude: Option<PathBuf>,
    /// With --exclude, keep positives disjoint as well
    #[arg(long, requires = "exclude")]
    pub strict: bool,
    #[arg(long, default_value = "train")]
    pub split: String,
    /// Output file (stdout when absent)
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum WpaCommand {
    /// Brute-force value of a picture
    Eval { automaton: PathBuf, picture: PathBuf },
    /// Translate an automaton into an equivalent model
    Compile {
        automaton: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Write the Bars & Stripes automaton
    BarsStripes {
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
pub enum GwmCommand {
    /// Exact value of a picture
    Eval { model: PathBuf, picture: PathBuf },
    /// Write a randomly initialised model
    Init {
        #[arg(long, default_value_t = 6)]
        dim: usize,
        #[arg(long, default_value_t = 0.4)]
        init_std: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum LossArg {
    Mse,
    Ce,
}

impl From<LossArg> for LossKind {
    fn from(l: LossArg) -> Self {
        match l {
            LossArg::Mse => LossKind::Mse,
            LossArg::Ce => LossKind::CrossEntropy,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum BatchingArg {
    Replacement,
    Epochs,
}

fn named_path(s: &str) -> std::result::Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((name, path)) if !name.is_empty() && !path.is_empty() => Ok((name.to_string(), path.into())),
        _ => Err(format!("expected NAME=FILE, got {s:?}")),
    }
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub train: PathBuf,
    /// Held-out set as NAME=FILE; may be repeated
    #[arg(long = "eval", value_parser = named_path)]
    pub evals: Vec<(String, PathBuf)>,
    #[arg(long, default_value_t = 6)]
    pub dim: usize,
    #[arg(long, default_value_t = 0.4)]
    pub init_std: f64,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 100)]
    pub batch: usize,
    #[arg(long, conflicts_with = "epochs")]
    pub iters: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Defaults to shuffled epochs with --epochs and to sampling with replacement otherwise
    #[arg(long)]
    pub batching: Option<BatchingArg>,
    #[arg(long, value_enum, default_value = "mse")]
    pub loss: LossArg,
    /// Global gradient-norm threshold
    #[arg(long)]
    pub clip: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub log_every: usize,
    /// Directory receiving model.gwm and metrics.csv
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum MetricArg {
    Mse,
    Ce,
    Accuracy,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    pub model: PathBuf,
    pub dataset: PathBuf,
    #[arg(long, value_enum, default_value = "mse")]
    pub metric: MetricArg,
    /// For accuracy: classify with the sigmoid rule instead of the 0.5 threshold
    #[arg(long)]
    pub sigmoid: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    #[value(name = "bs-table1")]
    BsTable1,
    #[value(name = "bs-generalize-4")]
    BsGeneralize4,
    #[value(name = "bs-generalize-5")]
    BsGeneralize5,
    #[value(name = "sb-table2")]
    SbTable2,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::BsTable1 => "bs-table1",
            Preset::BsGeneralize4 => "bs-generalize-4",
            Preset::BsGeneralize5 => "bs-generalize-5",
            Preset::SbTable2 => "sb-table2",
        }
    }
}

#[derive(Args, Debug)]
pub struct ReproduceArgs {
    #[arg(value_enum)]
    pub preset: Preset,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Training set size
    #[arg(long)]
    pub n: Option<usize>,
    /// Training picture height (sb-table2)
    #[arg(long, default_value_t = 2)]
    pub height: usize,
    #[arg(long, conflicts_with = "epochs")]
    pub iters: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub log_every: Option<usize>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

/// Overrides applied on top of a preset.
#[derive(Clone, Debug, Default)]
pub struct PresetOptions {
    pub seed: u64,
    pub n: Option<usize>,
    pub height: Option<usize>,
    pub iters: Option<usize>,
    pub epochs: Option<usize>,
    pub log_every: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct EvalSpec {
    pub name: String,
    pub request: GenerateRequest,
    /// Keep positives disjoint from the training set too.
    pub strict: bool,
}

/// A fully specified experiment: data to draw, held-out sets and the training setup.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub name: String,
    pub train: GenerateRequest,
    pub evals: Vec<EvalSpec>,
    pub config: TrainConfig,
}

fn square_sizes(upto: usize) -> Vec<(usize, usize)> {
    (2..=upto).map(|k| (k, k)).collect()
}

/// Expands a preset. The training seed is `opts.seed`; every dataset gets its own
/// seed derived from it.
pub fn preset(which: Preset, opts: &PresetOptions) -> Result<Experiment> {
    let seed = opts.seed;
    let data_seed = |k: u64| seed.wrapping_mul(1_000_003).wrapping_add(k);
    let request = |language, sizes: Vec<(usize, usize)>, count, k, split: &str| GenerateRequest {
        language,
        sizes,
        count,
        positive_fraction: 0.5,
        seed: data_seed(k),
        split: split.to_string(),
    };
    let eval = |name: &str, req: GenerateRequest, strict| EvalSpec {
        name: name.to_string(),
        request: req,
        strict,
    };
    let bs = Language::BarsStripes;
    let mut exp = match which {
        Preset::BsTable1 => Experiment {
            name: which.name().into(),
            train: request(bs, vec![(4, 4)], opts.n.unwrap_or(10_000), 0, "train"),
            evals: vec![
                eval("test", request(bs, vec![(4, 4)], 100, 1, "test"), false),
                eval("test_5x5", request(bs, vec![(5, 5)], 200, 2, "test"), false),
            ],
            config: TrainConfig {
                dim: 6,
                init_std: 0.4,
                learning_rate: 0.01,
                batch_size: 100,
                budget: Budget::Iterations(20_000),
                batching: Batching::WithReplacement,
                loss: LossKind::Mse,
                clip: None,
                log_every: 500,
                ..TrainConfig::default()
            },
        },
        Preset::BsGeneralize4 | Preset::BsGeneralize5 => {
            let m = if which == Preset::BsGeneralize4 { 4 } else { 5 };
            Experiment {
                name: which.name().into(),
                train: request(bs, square_sizes(m), opts.n.unwrap_or(10_000), 0, "train"),
                evals: vec![eval(
                    &format!("test_{0}x{0}", m + 1),
                    request(bs, vec![(m + 1, m + 1)], 200, 1, "test"),
                    false,
                )],
                config: TrainConfig {
                    dim: 6,
                    init_std: 0.4,
                    learning_rate: 0.001,
                    batch_size: 1000,
                    budget: Budget::Iterations(3000),
                    batching: Batching::WithReplacement,
                    loss: LossKind::Mse,
                    clip: None,
                    log_every: 50,
                    ..TrainConfig::default()
                },
            }
        }
        Preset::SbTable2 => {
            let h = opts.height.unwrap_or(2);
            if !(2..=3).contains(&h) {
                return Err(Error::InvalidParameter(format!("sb-table2 trains on height 2 or 3, got {h}")));
            }
            let sb = Language::ShiftingBits;
            let mut evals: Vec<EvalSpec> = [10, 20, 50, 100]
                .iter()
                .enumerate()
                .map(|(k, &w)| eval(&format!("test_{h}x{w}"), request(sb, vec![(h, w)], 200, k as u64 + 1, "test"), true))
                .collect();
            let other = 5 - h;
            evals.push(eval(
                &format!("test_{other}x10"),
                request(sb, vec![(other, 10)], 200, 5, "test"),
                true,
            ));
            Experiment {
                name: which.name().into(),
                train: request(sb, (5..=15).map(|w| (h, w)).collect(), opts.n.unwrap_or(20_000), 0, "train"),
                evals,
                config: TrainConfig {
                    dim: 10,
                    init_std: 0.2,
                    learning_rate: 0.01,
                    batch_size: 128,
                    budget: Budget::Epochs(20),
                    batching: Batching::Epochs,
                    loss: LossKind::CrossEntropy,
                    clip: Some(1.0),
                    log_every: 157,
                    ..TrainConfig::default()
                },
            }
        }
    };
    exp.config.seed = seed;
    if let Some(t) = opts.iters {
        exp.config.budget = Budget::Iterations(t);
    }
    if let Some(e) = opts.epochs {
        exp.config.budget = Budget::Epochs(e);
    }
    if let Some(l) = opts.log_every {
        exp.config.log_every = l;
    }
    Ok(exp)
}

pub struct ExperimentRun {
    pub train: Dataset,
    pub evals: Vec<(String, Dataset)>,
    pub report: TrainReport,
}

/// Draws the datasets of `exp` and trains on them.
pub fn run_experiment(
    exp: &Experiment,
    observer: impl FnMut(&Record, &GwmModel) -> Control,
) -> Result<ExperimentRun> {
    let train = languages::generate_dataset(&exp.train, Exclusion::None)?;
    let mut evals = Vec::new();
    for spec in &exp.evals {
        let exclusion = if spec.strict {
            Exclusion::All(&train)
        } else {
            Exclusion::Negatives(&train)
        };
        evals.push((spec.name.clone(), languages::generate_dataset(&spec.request, exclusion)?));
    }
    let named: Vec<(&str, &Dataset)> = evals.iter().map(|(n, d)| (n.as_str(), d)).collect();
    let report = training::train_with_observer(&exp.config, &train, &named, observer)?;
    Ok(ExperimentRun { train, evals, report })
}

fn sizes_text(sizes: &[(usize, usize)]) -> String {
    sizes
        .iter()
        .map(|(m, n)| format!("{m}x{n}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn config_comments(config: &TrainConfig, n_train: usize) -> String {
    let mut out = String::new();
    let budget = match config.budget {
        Budget::Iterations(t) => format!("{t} iterations"),
        Budget::Epochs(e) => format!("{e} epochs ({} iterations)", config.iterations(n_train)),
    };
    let batching = match config.batching {
        Batching::WithReplacement => "uniform with replacement",
        Batching::Epochs => "shuffled epochs",
    };
    let clip = config.clip.map_or("none".to_string(), |c| c.to_string());
    let AdamConfig { beta1, beta2, eps } = config.adam;
    writeln!(out, "# dim: {}", config.dim).unwrap();
    writeln!(out, "# init_std: {}", config.init_std).unwrap();
    writeln!(out, "# learning_rate: {}", config.learning_rate).unwrap();
    writeln!(out, "# batch_size: {}", config.batch_size).unwrap();
    writeln!(out, "# budget: {budget}").unwrap();
    writeln!(out, "# batching: {batching}").unwrap();
    writeln!(out, "# loss: {}", config.loss.name()).unwrap();
    writeln!(out, "# clip: {clip}").unwrap();
    writeln!(out, "# adam: beta1={beta1} beta2={beta2} eps={eps}").unwrap();
    writeln!(out, "# seed: {}", config.seed).unwrap();
    writeln!(out, "# log_every: {}", config.log_every).unwrap();
    out
}

/// Metrics CSV of an experiment, prefixed by `#` lines recording every setting.
pub fn experiment_csv(exp: &Experiment, report: &TrainReport) -> String {
    let mut out = String::new();
    writeln!(out, "# preset: {}", exp.name).unwrap();
    writeln!(
        out,
        "# train: {} N={} sizes={} positive_fraction={} seed={}",
        exp.train.language,
        exp.train.count,
        sizes_text(&exp.train.sizes),
        exp.train.positive_fraction,
        exp.train.seed
    )
    .unwrap();
    for spec in &exp.evals {
        let r = &spec.request;
        writeln!(
            out,
            "# eval {}: {} N={} sizes={} seed={} disjoint={}",
            spec.name,
            r.language,
            r.count,
            sizes_text(&r.sizes),
            r.seed,
            if spec.strict { "all" } else { "negatives" }
        )
        .unwrap();
    }
    out.push_str(&config_comments(&exp.config, exp.train.count));
    out.push_str(&report.to_csv());
    out
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })
}

fn emit(out: &mut dyn Write, path: Option<&Path>, contents: &str) -> Result<()> {
    match path {
        Some(p) => write_file(p, contents),
        None => Ok(out.write_all(contents.as_bytes())?),
    }
}

fn source_name(path: &Path) -> String {
    path.display().to_string()
}

fn load_dataset(path: &Path) -> Result<Dataset> {
    languages::read_dataset(&read(path)?, &source_name(path))
}

fn load_model(path: &Path) -> Result<GwmModel> {
    gwm::load(&read(path)?, &source_name(path))
}

fn load_picture(path: &Path) -> Result<Picture> {
    Picture::parse(&read(path)?, &source_name(path))
}

fn load_wpa(path: &Path) -> Result<wpa::Wpa> {
    wpa::load(&read(path)?, &source_name(path))
}

/// Executes a parsed command line, writing results to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Gen(args) => cmd_gen(args, out),
        Command::Wpa(cmd) => cmd_wpa(cmd, out),
        Command::Gwm(cmd) => cmd_gwm(cmd, out),
        Command::Train(args) => cmd_train(args, out),
        Command::Eval(args) => cmd_eval(args, out),
        Command::Reproduce(args) => cmd_reproduce(args, out),
    }
}

fn cmd_gen(args: GenArgs, out: &mut dyn Write) -> Result<()> {
    let mut sizes = args.size.clone();
    match (&args.heights, &args.widths) {
        (Some(hs), Some(ws)) => {
            let hs = range_arg(hs).map_err(Error::InvalidParameter)?;
            let ws = range_arg(ws).map_err(Error::InvalidParameter)?;
            for &h in &hs {
                for &w in &ws {
                    sizes.push((h, w));
                }
            }
        }
        (None, None) => {}
        _ => {
            return Err(Error::InvalidParameter("--heights and --widths go together".into()));
        }
    }
    if sizes.is_empty() {
        return Err(Error::InvalidParameter("give --size or --heights with --widths".into()));
    }
    let excluded = args.exclude.as_deref().map(load_dataset).transpose()?;
    let exclusion = match (&excluded, args.strict) {
        (None, _) => Exclusion::None,
        (Some(d), false) => Exclusion::Negatives(d),
        (Some(d), true) => Exclusion::All(d),
    };
    let request = GenerateRequest {
        language: args.language.into(),
        sizes,
        count: args.count,
        positive_fraction: args.fraction,
        seed: args.seed,
        split: args.split,
    };
    let data = languages::generate_dataset(&request, exclusion)?;
    emit(out, args.out.as_deref(), &languages::write_dataset(&data))
}

fn cmd_wpa(cmd: WpaCommand, out: &mut dyn Write) -> Result<()> {
    match cmd {
        WpaCommand::Eval { automaton, picture } => {
            let a = load_wpa(&automaton)?;
            let p = load_picture(&picture)?;
            writeln!(out, "{}", a.evaluate_bruteforce(&p)?)?;
            Ok(())
        }
        WpaCommand::Compile { automaton, out: path } => {
            let model = load_wpa(&automaton)?.compile_to_gwm();
            emit(out, path.as_deref(), &gwm::save(&model))
        }
        WpaCommand::BarsStripes { out: path } => {
            emit(out, path.as_deref(), &wpa::save(&wpa::bars_stripes_automaton()))
        }
    }
}

fn cmd_gwm(cmd: GwmCommand, out: &mut dyn Write) -> Result<()> {
    match cmd {
        GwmCommand::Eval { model, picture } => {
            let m = load_model(&model)?;
            let p = load_picture(&picture)?;
            writeln!(out, "{}", gwm::evaluate(&m, &p)?)?;
            Ok(())
        }
        GwmCommand::Init {
            dim,
            init_std,
            seed,
            out: path,
        } => {
            let m = GwmModel::random_init(dim, &[WHITE, BLACK], init_std, seed)?;
            emit(out, path.as_deref(), &gwm::save(&m))
        }
    }
}

fn cmd_train(args: TrainArgs, out: &mut dyn Write) -> Result<()> {
    let train_set = load_dataset(&args.train)?;
    let mut evals = Vec::new();
    for (name, path) in &args.evals {
        evals.push((name.clone(), load_dataset(path)?));
    }
    let budget = match (args.iters, args.epochs) {
        (_, Some(e)) => Budget::Epochs(e),
        (Some(t), None) => Budget::Iterations(t),
        (None, None) => Budget::Iterations(1000),
    };
    let batching = match (args.batching, args.epochs) {
        (Some(BatchingArg::Replacement), _) => Batching::WithReplacement,
        (Some(BatchingArg::Epochs), _) | (None, Some(_)) => Batching::Epochs,
        (None, None) => Batching::WithReplacement,
    };
    let config = TrainConfig {
        dim: args.dim,
        alphabet: vec![WHITE, BLACK],
        init_std: args.init_std,
        learning_rate: args.lr,
        batch_size: args.batch,
        budget,
        batching,
        loss: args.loss.into(),
        clip: args.clip,
        seed: args.seed,
        adam: AdamConfig::default(),
        log_every: args.log_every,
    };
    let named: Vec<(&str, &Dataset)> = evals.iter().map(|(n, d)| (n.as_str(), d)).collect();
    let report = training::train(&config, &train_set, &named)?;
    fs::create_dir_all(&args.out)?;
    let mut csv = format!("# train: {}\n", args.train.display());
    csv.push_str(&config_comments(&config, train_set.len()));
    csv.push_str(&report.to_csv());
    write_file(&args.out.join("metrics.csv"), &csv)?;
    write_file(&args.out.join("model.gwm"), &gwm::save(&report.model))?;
    summarize(out, &report)
}

fn summarize(out: &mut dyn Write, report: &TrainReport) -> Result<()> {
    if let Some(last) = report.last() {
        write!(out, "iteration {}: train_loss {}", last.iteration, last.train_loss)?;
        for (name, m) in report.eval_names.iter().zip(&last.evals) {
            write!(out, ", {name}_loss {}, {name}_accuracy {}", m.loss, m.accuracy)?;
        }
        writeln!(out)?;
    }
    Ok(())
}

fn cmd_eval(args: EvalArgs, out: &mut dyn Write) -> Result<()> {
    let model = load_model(&args.model)?;
    let data = load_dataset(&args.dataset)?;
    match args.metric {
        MetricArg::Mse => {
            writeln!(out, "mse {}", evaluate_dataset(&model, LossKind::Mse, &data)?.loss)?;
        }
        MetricArg::Ce => {
            writeln!(out, "ce {}", evaluate_dataset(&model, LossKind::CrossEntropy, &data)?.loss)?;
        }
        MetricArg::Accuracy => {
            if data.is_empty() {
                return Err(Error::InvalidParameter("empty dataset".into()));
            }
            let kind = if args.sigmoid {
                LossKind::CrossEntropy
            } else {
                LossKind::Mse
            };
            let values = predict(&model, data.pictures())?;
            let correct = data
                .examples
                .iter()
                .zip(&values)
                .filter(|(e, &v)| training::classify(kind, v) == e.is_positive())
                .count();
            writeln!(out, "accuracy {}", correct as f64 / data.len() as f64)?;
        }
    }
    Ok(())
}

fn cmd_reproduce(args: ReproduceArgs, out: &mut dyn Write) -> Result<()> {
    let opts = PresetOptions {
        seed: args.seed,
        n: args.n,
        height: Some(args.height),
        iters: args.iters,
        epochs: args.epochs,
        log_every: args.log_every,
    };
    let exp = preset(args.preset, &opts)?;
    let run = run_experiment(&exp, |_, _| Control::Continue)?;
    fs::create_dir_all(&args.out)?;
    let stem = &exp.name;
    write_file(&args.out.join(format!("{stem}.csv")), &experiment_csv(&exp, &run.report))?;
    write_file(&args.out.join(format!("{stem}.gwm")), &gwm::save(&run.report.model))?;
    write_file(
        &args.out.join(format!("{stem}-train.txt")),
        &languages::write_dataset(&run.train),
    )?;
    for (name, d) in &run.evals {
        write_file(
            &args.out.join(format!("{stem}-{name}.txt")),
            &languages::write_dataset(d),
        )?;
    }
    summarize(out, &run.report)
}
