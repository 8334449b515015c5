//! Argument parsing and subcommand dispatch for the `murmurforge` binary.

pub mod svg;

use std::ffi::OsString;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use murmurforge::coeffgen::{
    dirichlet_record, ec_record, is_fundamental_discriminant, known_curves, synth_records,
    SynthSpec, WeierstrassCurve,
};
use murmurforge::experiments::{
    lda_one, run_lda, run_nn, standard_subsets, stratified_split, transfer_one, FeatureMode,
    Method, NamedFilter, NnPipeline, NnSettings, ReportTable, SplitRatio,
};
use murmurforge::features::{feature_matrix, MurmurationTable, Normalization};
use murmurforge::io::{read_path_with_warnings, write_for_path};
use murmurforge::nn::{Loss, TrainConfig};
use murmurforge::pca::fit_pca;
use murmurforge::{Dataset, Error, Filter, LFunctionRecord, OriginSet};

use svg::{DrawOrder, Point};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

const FILTER_HELP: &str =
    "Subset filter: comma-separated key=value clauses, all of which must hold.
  d=<n>           degree equals n
  w=<n>           motivic weight equals n
  rmax=<n>        vanishing order at most n
  r=<n>           vanishing order equals n
  origin=A|B      carries any of the origin tags
  origin_all=A+B  carries all of the origin tags
Tags: CMF ECQ ART ECNF BMF HMF DIR G2Q. Example: d=4,w=1,rmax=3,origin=ECNF";

#[derive(Debug, Parser)]
#[command(
    name = "murmurforge",
    version,
    about = "L-function coefficient datasets and vanishing-order learners"
)]
#[command(after_help = "Set MURMURFORGE_THREADS to cap worker threads (0 = automatic).")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print record counts by order, degree, weight and origin.
    Summarize(SummarizeArgs),
    /// Write the records that match a filter.
    Filter(FilterArgs),
    /// Write the mean normalized coefficient per prime and order.
    Murmurate(MurmurateArgs),
    /// Fit PCA and write component weights and an optional scatter plot.
    Pca(PcaArgs),
    /// Split, fit and score LDA on one or more subsets.
    Lda(LdaArgs),
    /// Train a CNN or FNN on a stratified split.
    NnTrain(NnTrainArgs),
    /// Score a saved network on a dataset.
    NnEval(NnEvalArgs),
    /// Train on one subset and test on another, in both directions.
    Transfer(TransferArgs),
    /// Write seeded stratified train/test indices.
    Split(SplitArgs),
    /// Generate elliptic-curve records by point counting.
    GenEc(GenEcArgs),
    /// Generate quadratic Dirichlet character records.
    GenDirichlet(GenDirichletArgs),
    /// Generate Gaussian-mixture records labelled by class.
    GenSynth(GenSynthArgs),
}

#[derive(Debug, Args)]
pub struct Input {
    /// Dataset file (.csv or .json, optionally .gz).
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    #[arg(long, value_name = "FILTER", help = "Subset filter (see --help)", long_help = FILTER_HELP)]
    pub filter: Option<Filter>,
}

#[derive(Debug, Args)]
pub struct SummarizeArgs {
    #[command(flatten)]
    pub input: Input,
    /// Emit JSON instead of a table.
    #[arg(long)]
    pub json: bool,
    /// Write to a file instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    #[command(flatten)]
    pub input: Input,
    /// Output dataset; the format follows the extension.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MurmurateArgs {
    #[command(flatten)]
    pub input: Input,
    #[arg(long, default_value = "atilde")]
    pub normalization: Normalization,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PcaArgs {
    #[command(flatten)]
    pub input: Input,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value = "atilde")]
    pub normalization: Normalization,
    /// Component weights CSV (`p,pc1,...`).
    #[arg(long)]
    pub out: PathBuf,
    /// Fitted model as JSON.
    #[arg(long)]
    pub model_out: Option<PathBuf>,
    /// Scatter of the first two components coloured by order.
    #[arg(long)]
    pub scatter: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = DrawOrder::Ascending)]
    pub draw_order: DrawOrder,
}

#[derive(Debug, Args)]
pub struct SplitOpts {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Train:test proportions.
    #[arg(long, default_value = "80:20")]
    pub ratio: SplitRatio,
}

#[derive(Debug, Args)]
pub struct LdaArgs {
    #[command(flatten)]
    pub input: Input,
    #[command(flatten)]
    pub split: SplitOpts,
    #[arg(long, default_value = "atilde")]
    pub normalization: Normalization,
    /// Run on PRAT* and its BMF, ECNF, G2Q and HMF subsets instead of the
    /// whole (filtered) input.
    #[arg(long)]
    pub standard_subsets: bool,
    /// JSON report; a table is also printed to standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// `NAME=FILTER`, e.g. `G2Q=origin=G2Q`.
fn parse_named(s: &str) -> Result<NamedFilter, String> {
    let (name, filter) = s.split_once('=').ok_or("expected NAME=FILTER")?;
    if name.is_empty() {
        return Err("empty subset name".into());
    }
    let filter: Filter = filter.parse().map_err(|e: Error| e.to_string())?;
    Ok(NamedFilter::new(name, filter))
}

#[derive(Debug, Args)]
pub struct NnOpts {
    #[arg(long, default_value = "cnn")]
    pub arch: Method,
    /// VL for raw normalized vectors, PC_<k> for the first k principal components.
    #[arg(long, default_value = "VL")]
    pub features: FeatureMode,
    #[arg(long, default_value = "atilde")]
    pub normalization: Normalization,
    #[arg(long, default_value = "cross-entropy")]
    pub loss: Loss,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    #[arg(long, default_value_t = 3000)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0.001)]
    pub learning_rate: f64,
    /// FNN hidden layer widths.
    #[arg(long, value_delimiter = ',', default_value = "128,128")]
    pub hidden: Vec<usize>,
    /// Per-epoch accuracy curves as CSV (`epoch,subset,accuracy`).
    #[arg(long)]
    pub curves: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NnTrainArgs {
    #[command(flatten)]
    pub input: Input,
    #[command(flatten)]
    pub split: SplitOpts,
    #[command(flatten)]
    pub nn: NnOpts,
    /// Named test subset to track, as NAME=FILTER. Repeatable.
    #[arg(long = "subset", value_parser = parse_named)]
    pub subsets: Vec<NamedFilter>,
    /// Track the BMF, ECNF, G2Q and HMF subsets.
    #[arg(long)]
    pub standard_subsets: bool,
    /// JSON report.
    #[arg(long)]
    pub out: PathBuf,
    /// Trained pipeline (normalization, projection, network) as JSON.
    #[arg(long)]
    pub model_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NnEvalArgs {
    #[command(flatten)]
    pub input: Input,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TransferArgs {
    #[command(flatten)]
    pub input: Input,
    #[command(flatten)]
    pub nn: NnOpts,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// First side, as NAME=FILTER.
    #[arg(long, value_parser = parse_named, default_value = "ECNF=origin=ECNF")]
    pub a: NamedFilter,
    /// Second side, as NAME=FILTER.
    #[arg(long, value_parser = parse_named, default_value = "G2Q=origin=G2Q")]
    pub b: NamedFilter,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[command(flatten)]
    pub input: Input,
    #[command(flatten)]
    pub split: SplitOpts,
    /// Index lists as JSON.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub train_out: Option<PathBuf>,
    #[arg(long)]
    pub test_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenEcArgs {
    /// Curve as LABEL:a1,a2,a3,a4,a6:CONDUCTOR:RANK. Repeatable; defaults to
    /// the built-in fixture curves.
    #[arg(long = "curve")]
    pub curves: Vec<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenDirichletArgs {
    /// Fundamental discriminants, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub discriminants: Vec<i64>,
    /// Use every fundamental discriminant D != 1 with |D| <= this bound.
    #[arg(long, conflicts_with = "discriminants")]
    pub max_abs: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenSynthArgs {
    #[arg(long, default_value_t = 4)]
    pub classes: usize,
    #[arg(long, default_value_t = 500)]
    pub per_class: usize,
    /// Distance of each class mean from the origin, in normalized units.
    #[arg(long, default_value_t = 0.5)]
    pub separation: f64,
    #[arg(long, default_value_t = 0.05)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Origin sets assigned to records in rotation, comma separated, tags
    /// within a set joined by `;` (e.g. `ECNF,G2Q,ECNF;G2Q`).
    #[arg(long, value_delimiter = ',')]
    pub origins: Vec<OriginSet>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

type CliResult<T = ()> = std::result::Result<T, CliError>;

/// Writes through a temporary file in the destination directory and renames
/// it into place only once `f` succeeds.
pub fn write_atomic<F>(path: &Path, f: F) -> CliResult
where
    F: FnOnce(&mut dyn Write) -> CliResult,
{
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        f(&mut w)?;
        w.flush()?;
    }
    tmp.as_file().sync_all()?;
    // Temporary files are created owner-only; outputs get ordinary permissions.
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file()
            .set_permissions(std::fs::Permissions::from_mode(0o644))?;
    }
    tmp.persist(path)
        .map_err(|e| CliError::Data(e.to_string()))?;
    Ok(())
}

fn write_text(path: &Path, text: &str) -> CliResult {
    write_atomic(path, |w| Ok(w.write_all(text.as_bytes())?))
}

fn write_dataset(ds: &Dataset, path: &Path) -> CliResult {
    write_atomic(path, |w| Ok(write_for_path(ds, path, w)?))
}

fn load(input: &Input) -> CliResult<Dataset> {
    let (ds, warnings) = read_path_with_warnings(&input.input)
        .map_err(|e| CliError::Data(format!("{}: {e}", input.input.display())))?;
    for w in &warnings {
        log::warn!("{}: {w}", input.input.display());
    }
    Ok(match &input.filter {
        Some(f) => ds.filter(f),
        None => ds,
    })
}

/// Writes the table's CSV to `path`.
pub fn emit_murmuration_csv(table: &MurmurationTable, path: &Path) -> CliResult {
    write_atomic(path, |w| Ok(table.write_csv(w)?))
}

fn configure_threads() -> CliResult {
    let Ok(v) = std::env::var("MURMURFORGE_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| {
        CliError::Usage(format!(
            "MURMURFORGE_THREADS must be a non-negative integer, got {v:?}"
        ))
    })?;
    if n > 0 {
        // Fails only if a pool already exists, e.g. when dispatch runs twice in one process.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn dispatch<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = configure_threads().and_then(|_| run(cli.command));
    match result {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            EXIT_USAGE
        }
        Err(CliError::Data(m)) => {
            eprintln!("error: {m}");
            EXIT_DATA
        }
    }
}

fn nn_settings(opts: &NnOpts, seed: u64, ratio: SplitRatio) -> CliResult<NnSettings> {
    if opts.arch == Method::Lda {
        return Err(CliError::Usage("--arch must be cnn or fnn".into()));
    }
    let mut s = NnSettings::new(opts.arch, opts.features);
    s.normalization = opts.normalization;
    s.loss = opts.loss;
    s.ratio = ratio;
    s.fnn_hidden = opts.hidden.clone();
    s.train = TrainConfig {
        batch_size: opts.batch_size,
        learning_rate: opts.learning_rate,
        epochs: opts.epochs,
        seed,
        ..TrainConfig::default()
    };
    s.train
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(s)
}

fn non_empty(ds: &Dataset) -> CliResult {
    if ds.is_empty() {
        return Err(CliError::Data("no records after filtering".into()));
    }
    Ok(())
}

fn json<T: serde::Serialize>(v: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Data(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn run(command: Command) -> CliResult {
    match command {
        Command::Summarize(a) => {
            let summary = load(&a.input)?.summarize();
            let text = if a.json {
                json(&summary)?
            } else {
                summary.to_string()
            };
            match a.out {
                Some(p) => write_text(&p, &text),
                None => Ok(io::stdout().write_all(text.as_bytes())?),
            }
        }
        Command::Filter(a) => {
            let ds = load(&a.input)?;
            eprintln!("{} records", ds.len());
            write_dataset(&ds, &a.out)
        }
        Command::Murmurate(a) => {
            let ds = load(&a.input)?;
            non_empty(&ds)?;
            emit_murmuration_csv(&MurmurationTable::build(&ds, a.normalization)?, &a.out)
        }
        Command::Pca(a) => {
            if a.k == 0 || a.k > murmurforge::NUM_PRIMES {
                return Err(CliError::Usage(format!(
                    "--k must lie in 1..={}",
                    murmurforge::NUM_PRIMES
                )));
            }
            let ds = load(&a.input)?;
            non_empty(&ds)?;
            let x = feature_matrix(&ds, a.normalization);
            let model = fit_pca(&x, a.k)?;
            write_atomic(&a.out, |w| Ok(model.write_weights_csv(w)?))?;
            if let Some(p) = &a.model_out {
                write_text(p, &json(&model)?)?;
            }
            if let Some(p) = &a.scatter {
                if model.k() < 2 {
                    return Err(CliError::Usage("--scatter needs --k of at least 2".into()));
                }
                let z = model.project_rows(&x)?;
                let points: Vec<Point> = (0..z.rows())
                    .map(|i| Point {
                        x: z[(i, 0)],
                        y: z[(i, 1)],
                        class: ds.record(i).order,
                    })
                    .collect();
                write_atomic(p, |w| Ok(svg::emit_scatter_svg(&points, a.draw_order, w)?))?;
            }
            for (i, r) in model.explained_ratio.iter().enumerate() {
                println!("pc{}\t{r:.6}", i + 1);
            }
            Ok(())
        }
        Command::Lda(a) => {
            let ds = load(&a.input)?;
            non_empty(&ds)?;
            let reports = if a.standard_subsets {
                run_lda(
                    &ds,
                    &standard_subsets(),
                    a.normalization,
                    a.split.ratio,
                    a.split.seed,
                )?
            } else {
                let name = a.input.filter.map_or("all".to_string(), |f| f.to_string());
                vec![lda_one(
                    &name,
                    &ds,
                    a.normalization,
                    a.split.ratio,
                    a.split.seed,
                )?]
            };
            print!("{}", ReportTable(&reports));
            if let Some(p) = &a.out {
                write_text(p, &json(&reports)?)?;
            }
            Ok(())
        }
        Command::NnTrain(a) => {
            let ds = load(&a.input)?;
            non_empty(&ds)?;
            let settings = nn_settings(&a.nn, a.split.seed, a.split.ratio)?;
            let mut subsets = a.subsets.clone();
            if a.standard_subsets {
                subsets.extend(standard_subsets().into_iter().skip(1));
            }
            let name = a.input.filter.map_or("all".to_string(), |f| f.to_string());
            let (report, pipeline) = run_nn(&ds, &name, &subsets, &settings)?;
            finish_nn(
                &report,
                Some(&pipeline),
                a.model_out.as_deref(),
                a.nn.curves.as_deref(),
                &a.out,
            )
        }
        Command::NnEval(a) => {
            let text = std::fs::read_to_string(&a.model)?;
            let pipeline = NnPipeline::from_json(&text)?;
            let ds = load(&a.input)?;
            non_empty(&ds)?;
            let e = pipeline.evaluate(&ds)?;
            println!("accuracy\t{:.6}\tn\t{}", e.accuracy, e.n);
            for (c, row) in e.classes.iter().zip(&e.confusion) {
                let cells: Vec<String> = row.iter().map(usize::to_string).collect();
                println!("{c}\t{}", cells.join("\t"));
            }
            if let Some(p) = &a.out {
                write_text(p, &json(&e)?)?;
            }
            Ok(())
        }
        Command::Transfer(a) => {
            let ds = load(&a.input)?;
            non_empty(&ds)?;
            let settings = nn_settings(&a.nn, a.seed, SplitRatio::default())?;
            let mut reports = Vec::new();
            for (from, to) in [(&a.a, &a.b), (&a.b, &a.a)] {
                let (r, _) = transfer_one(&ds, from, to, &settings)?;
                println!(
                    "{}\taccuracy {:.4}\ttrain {}\ttest {}\toverlap removed {}",
                    r.dataset,
                    r.accuracy,
                    r.n_train,
                    r.n_test,
                    r.overlap_removed.unwrap_or(0)
                );
                reports.push(r);
            }
            if let Some(p) = &a.nn.curves {
                write_atomic(p, |w| {
                    writeln!(w, "direction,epoch,subset,accuracy")?;
                    for r in &reports {
                        if let Some(c) = &r.curves {
                            let mut buf = Vec::new();
                            c.write_csv(&mut buf)?;
                            for line in String::from_utf8_lossy(&buf).lines().skip(1) {
                                writeln!(w, "{},{line}", r.dataset)?;
                            }
                        }
                    }
                    Ok(())
                })?;
            }
            write_text(&a.out, &json(&reports)?)
        }
        Command::Split(a) => {
            let ds = load(&a.input)?;
            non_empty(&ds)?;
            let split = stratified_split(&ds.orders(), a.split.ratio, a.split.seed)?;
            write_text(&a.out, &json(&split)?)?;
            if let Some(p) = &a.train_out {
                write_dataset(&ds.select(&split.train), p)?;
            }
            if let Some(p) = &a.test_out {
                write_dataset(&ds.select(&split.test), p)?;
            }
            eprintln!("train {} test {}", split.train.len(), split.test.len());
            Ok(())
        }
        Command::GenEc(a) => {
            let records = if a.curves.is_empty() {
                known_curves()
                    .into_iter()
                    .map(|(c, n, r)| ec_record(&c, n, r))
                    .collect::<Result<Vec<_>, _>>()?
            } else {
                a.curves
                    .iter()
                    .map(|s| parse_curve(s))
                    .collect::<CliResult<Vec<_>>>()?
            };
            write_dataset(&Dataset::new(records)?, &a.out)
        }
        Command::GenDirichlet(a) => {
            let ds: Vec<i64> = match a.max_abs {
                Some(m) => {
                    let m = i64::try_from(m)
                        .map_err(|_| CliError::Usage("--max-abs too large".into()))?;
                    (-m..=m)
                        .filter(|&d| d != 1 && is_fundamental_discriminant(d))
                        .collect()
                }
                None if a.discriminants.is_empty() => {
                    return Err(CliError::Usage("give --discriminants or --max-abs".into()))
                }
                None => a.discriminants.clone(),
            };
            let records = ds
                .iter()
                .map(|&d| dirichlet_record(d, 0).map_err(|e| CliError::Usage(e.to_string())))
                .collect::<CliResult<Vec<_>>>()?;
            write_dataset(&Dataset::new(records)?, &a.out)
        }
        Command::GenSynth(a) => {
            let spec = SynthSpec {
                means: SynthSpec::axis_means(a.classes, murmurforge::NUM_PRIMES, a.separation),
                sigma: a.sigma,
                per_class: a.per_class,
                seed: a.seed,
            };
            write_dataset(&synth_records(&spec, &a.origins)?, &a.out)
        }
    }
}

fn finish_nn(
    report: &murmurforge::experiments::ExperimentReport,
    pipeline: Option<&NnPipeline>,
    model_out: Option<&Path>,
    curves_out: Option<&Path>,
    out: &Path,
) -> CliResult {
    println!(
        "{}\t{}\t{}\taccuracy {:.4}",
        report.dataset, report.method, report.features, report.accuracy
    );
    for s in &report.subset_accuracy {
        match s.accuracy {
            Some(acc) => println!("  {}\t{acc:.4}\t(n = {})", s.name, s.n),
            None => println!("  {}\t-\t(n = 0)", s.name),
        }
    }
    if let (Some(p), Some(pl)) = (model_out, pipeline) {
        write_text(p, &pl.to_json()?)?;
    }
    if let (Some(p), Some(c)) = (curves_out, &report.curves) {
        write_atomic(p, |w| Ok(c.write_csv(w)?))?;
    }
    write_text(out, &json(report)?)
}

/// `LABEL:a1,a2,a3,a4,a6:CONDUCTOR:RANK`
fn parse_curve(s: &str) -> CliResult<LFunctionRecord> {
    let bad = || {
        CliError::Usage(format!(
            "curve {s:?} is not LABEL:a1,a2,a3,a4,a6:CONDUCTOR:RANK"
        ))
    };
    let parts: Vec<&str> = s.split(':').collect();
    let [label, coeffs, conductor, rank] = parts[..] else {
        return Err(bad());
    };
    let a: Vec<i64> = coeffs
        .split(',')
        .map(|c| c.trim().parse())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    let a: [i64; 5] = a.try_into().map_err(|_| bad())?;
    let curve = WeierstrassCurve::new(label, a).map_err(|e| CliError::Usage(e.to_string()))?;
    let conductor = conductor.parse().map_err(|_| bad())?;
    let rank = rank.parse().map_err(|_| bad())?;
    Ok(ec_record(&curve, conductor, rank)?)
}
