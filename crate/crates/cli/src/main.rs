//! `mlrank`: data generation, training, evaluation, oracle verification and
//! learning curves.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 verification failure.
//! `MLRANK_THREADS` sets the number of worker threads.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use mlrank::dataio::{read_sparse, write_sparse, MultilabelDataset};
use mlrank::experiment::{run_curve, summarize, tune, CurveConfig};
use mlrank::learners::MultilabelScorer;
use mlrank::methods::{MethodRegistry, ModelFile, WbrAda};
use mlrank::oracle::verify::{run_suite, Suite};
use mlrank::rng::derive_seed;
use mlrank::synth::{sample_dataset, sample_model, DEFAULT_NOISE_SD};
use mlrank::wbr::evaluate;
use mlrank::WeightSpec;

const THREADS_VAR: &str = "MLRANK_THREADS";

#[derive(Parser, Debug)]
#[command(name = "mlrank", version, about = "Multilabel ranking experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a synthetic model and write train/test files plus a manifest.
    Generate(GenerateArgs),
    /// Tune on a held-out split, refit on all training data, save the model.
    Train(TrainArgs),
    /// Mean rank loss of a saved model on a dataset.
    Eval(EvalArgs),
    /// Run an oracle verification suite.
    Verify(VerifyArgs),
    /// Learning curve on one synthetic model.
    Curve(CurveArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Weight {
    /// `1 / (s (m − s))`, 0 when no or all labels are relevant.
    Normalized,
    Uniform,
}

impl Weight {
    fn spec(self) -> WeightSpec {
        match self {
            Weight::Normalized => WeightSpec::pairwise_normalized(),
            Weight::Uniform => WeightSpec::uniform(),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Weight::Normalized => "normalized",
            Weight::Uniform => "uniform",
        }
    }
}

#[derive(clap::Args, Debug)]
struct GenerateArgs {
    #[arg(long, default_value_t = 5)]
    m: usize,
    #[arg(long, default_value_t = 1000)]
    n_train: usize,
    #[arg(long, default_value_t = 50_000)]
    n_test: usize,
    /// Random mixing matrix instead of the identity.
    #[arg(long)]
    dependent: bool,
    #[arg(long, default_value_t = DEFAULT_NOISE_SD)]
    noise_sd: f64,
    #[arg(long, default_value_t = 0)]
    model_seed: u64,
    #[arg(long, default_value_t = 0)]
    data_seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(clap::Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    method: String,
    #[arg(long, value_enum, default_value_t = Weight::Normalized)]
    weight: Weight,
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    model_out: PathBuf,
    /// Comma-separated grid; defaults to the method's grid.
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
    /// Seed of the tuning split.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cap on stumps per label for wbr-ada.
    #[arg(long)]
    max_stumps: Option<usize>,
    /// Tuning trace CSV; defaults to `<model-out>.tuning.csv`.
    #[arg(long)]
    trace_out: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Weight for the loss; defaults to the one the model was trained with.
    #[arg(long, value_enum)]
    weight: Option<Weight>,
    /// Per-instance CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
struct VerifyArgs {
    #[arg(long)]
    suite: String,
    /// Trials per label count (search budget for `inconsistency`).
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    /// Comma-separated label counts; defaults to 2,3,4,5 (3 for `inconsistency`).
    #[arg(long, value_delimiter = ',')]
    m: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the full report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
struct CurveArgs {
    #[arg(long, value_delimiter = ',', default_value = "wbr-logreg,pairwise-log")]
    methods: Vec<String>,
    #[arg(long, default_value_t = 5)]
    m: usize,
    #[arg(long)]
    dependent: bool,
    #[arg(long, default_value_t = DEFAULT_NOISE_SD)]
    noise_sd: f64,
    #[arg(long, default_value_t = 0)]
    model_seed: u64,
    #[arg(long, default_value_t = 0)]
    data_seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "100,200,400,800,1600,4000,16000")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    #[arg(long, default_value_t = 10_000)]
    n_test: usize,
    #[arg(long, value_enum, default_value_t = Weight::Normalized)]
    weight: Weight,
    #[arg(long, default_value_t = 2_000)]
    bayes_points: usize,
    #[arg(long, default_value_t = 10_000)]
    bayes_reps: usize,
    #[arg(long)]
    max_stumps: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    Usage(String),
    Data(String),
    Verification,
}

impl From<mlrank::Error> for Failure {
    fn from(e: mlrank::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn data_err(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Data(format!("{}: {e}", path.display()))
}

/// CSV writer whose file starts with `#`-prefixed provenance lines.
fn csv_with_provenance(path: &Path, provenance: &[String]) -> Result<csv::Writer<BufWriter<File>>, Failure> {
    let file = File::create(path).map_err(|e| data_err(path, e))?;
    let mut out = BufWriter::new(file);
    for line in provenance {
        writeln!(out, "# {line}").map_err(|e| data_err(path, e))?;
    }
    Ok(csv::Writer::from_writer(out))
}

fn loss6(v: f64) -> String {
    format!("{v:.6}")
}

fn registry(max_stumps: Option<usize>) -> MethodRegistry {
    let mut r = MethodRegistry::with_defaults();
    if max_stumps.is_some() {
        r.register(Box::new(WbrAda { max_stumps }));
    }
    r
}

fn generate(args: &GenerateArgs) -> Outcome {
    if args.m < 2 || args.n_train == 0 || args.n_test == 0 {
        return Err(usage("need --m >= 2 and positive --n-train, --n-test"));
    }
    if !(args.noise_sd >= 0.0) || !args.noise_sd.is_finite() {
        return Err(usage("--noise-sd must be >= 0"));
    }
    let model = sample_model(args.m, args.dependent, args.model_seed)?.with_noise_sd(args.noise_sd)?;
    let provenance = format!(
        " mlrank generate --m {} --n-train {} --n-test {}{} --noise-sd {:?} --model-seed {} --data-seed {}",
        args.m,
        args.n_train,
        args.n_test,
        if args.dependent { " --dependent" } else { "" },
        args.noise_sd,
        args.model_seed,
        args.data_seed
    );
    fs::create_dir_all(&args.out_dir).map_err(|e| data_err(&args.out_dir, e))?;
    for (file, n, tag) in [("train.txt", args.n_train, 1), ("test.txt", args.n_test, 2)] {
        let mut data = sample_dataset(&model, n, derive_seed(args.data_seed, tag))?;
        data.comments.insert(0, provenance.clone());
        let path = args.out_dir.join(file);
        write_sparse(&data, &path).map_err(|e| data_err(&path, e))?;
    }
    let manifest = serde_json::json!({
        "generator": "mlrank generate",
        "m": args.m,
        "n_train": args.n_train,
        "n_test": args.n_test,
        "dependent": args.dependent,
        "mixing": if args.dependent { "random" } else { "identity" },
        "noise_sd": args.noise_sd,
        "model_seed": args.model_seed,
        "data_seed": args.data_seed,
        "train_seed": derive_seed(args.data_seed, 1),
        "test_seed": derive_seed(args.data_seed, 2),
        "model": model,
    });
    let path = args.out_dir.join("model.json");
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| data_err(&path, e))? + "\n";
    fs::write(&path, text).map_err(|e| data_err(&path, e))?;
    println!(
        "wrote {} train and {} test instances to {}",
        args.n_train,
        args.n_test,
        args.out_dir.display()
    );
    Ok(())
}

fn load_data(path: &Path) -> Result<MultilabelDataset, Failure> {
    read_sparse(path).map_err(|e| data_err(path, e))
}

fn train(args: &TrainArgs) -> Outcome {
    let registry = registry(args.max_stumps);
    let method = registry.get(&args.method).map_err(|e| usage(e.to_string()))?;
    if args.max_stumps.is_some() && args.method != "wbr-ada" {
        return Err(usage("--max-stumps only applies to wbr-ada"));
    }
    let data = load_data(&args.train)?;
    let spec = args.weight.spec();
    let mut grid = args.grid.clone().unwrap_or_else(|| method.default_grid(data.m()));
    method.capacity_order(&mut grid);
    if grid.is_empty() {
        return Err(usage("empty grid"));
    }
    for &v in &grid {
        method.check(v, data.m()).map_err(|e| usage(e.to_string()))?;
    }

    let outcome = tune(method, &data, &spec, &grid, args.seed)?;
    let mut model = outcome.model;
    let grid_text = grid.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
    model.provenance = vec![
        format!("train={}", args.train.display()),
        format!("weight={}", args.weight.name()),
        format!("grid={grid_text}"),
        format!("seed={}", args.seed),
    ];
    model.save(&args.model_out).map_err(|e| data_err(&args.model_out, e))?;

    let trace_path = args.trace_out.clone().unwrap_or_else(|| {
        let mut p = args.model_out.clone().into_os_string();
        p.push(".tuning.csv");
        PathBuf::from(p)
    });
    let provenance = vec![format!(
        "mlrank train --method {} --weight {} --train {} --grid {grid_text} --seed {}{}",
        args.method,
        args.weight.name(),
        args.train.display(),
        args.seed,
        args.max_stumps.map(|k| format!(" --max-stumps {k}")).unwrap_or_default()
    )];
    let mut w = csv_with_provenance(&trace_path, &provenance)?;
    w.write_record(["method", "hyperparameter", "value", "holdout_rank_loss", "selected"])?;
    for row in &outcome.rows {
        w.write_record([
            args.method.clone(),
            method.hyperparameter().to_string(),
            row.value.to_string(),
            row.holdout_loss.map(loss6).unwrap_or_default(),
            (row.value == outcome.selected).to_string(),
        ])?;
    }
    w.flush()?;
    println!(
        "method={} {}={} model={} trace={}",
        args.method,
        method.hyperparameter(),
        outcome.selected,
        args.model_out.display(),
        trace_path.display()
    );
    Ok(())
}

fn eval(args: &EvalArgs) -> Outcome {
    let model = ModelFile::load(&args.model).map_err(|e| data_err(&args.model, e))?;
    let data = load_data(&args.data)?;
    if model.m() != data.m() || model.d() != data.d() {
        return Err(Failure::Data(format!(
            "model expects m={} d={}, data has m={} d={}",
            model.m(),
            model.d(),
            data.m(),
            data.d()
        )));
    }
    let spec = args.weight.map(Weight::spec).unwrap_or_else(|| model.weight.clone());
    let result = evaluate(&model, &data, &spec)?;
    if let Some(out) = &args.out {
        let provenance = vec![format!(
            "mlrank eval --model {} --data {} --weight {}",
            args.model.display(),
            args.data.display(),
            args.weight.map(Weight::name).unwrap_or("model")
        )];
        let mut w = csv_with_provenance(out, &provenance)?;
        w.write_record(["index", "rank_loss", "ranking", "tie_broken"])?;
        for (k, (loss, inst)) in result.per_instance.iter().zip(data.instances()).enumerate() {
            let (order, tie_broken) = model.scores(&inst.features)?.ranking();
            let order = order.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ");
            w.write_record([k.to_string(), loss6(*loss), order, tie_broken.to_string()])?;
        }
        w.flush()?;
    }
    println!("n={} mean_rank_loss={}", data.len(), loss6(result.mean));
    Ok(())
}

fn verify(args: &VerifyArgs) -> Outcome {
    let suite = Suite::parse(&args.suite).map_err(|e| usage(e.to_string()))?;
    let ms = args.m.clone().unwrap_or_else(|| match suite {
        Suite::Inconsistency => vec![3],
        _ => vec![2, 3, 4, 5],
    });
    let max_m = if suite == Suite::Inconsistency { 10 } else { 20 };
    if ms.is_empty() || ms.iter().any(|&m| !(2..=max_m).contains(&m)) || args.trials == 0 {
        return Err(usage(format!("need --trials >= 1 and label counts in 2..={max_m}")));
    }
    let report = run_suite(suite, args.trials, &ms, args.seed)?;
    for line in report.lines() {
        println!("{line}");
    }
    if let Some(path) = &args.json {
        let text = serde_json::to_string_pretty(&report).map_err(|e| data_err(path, e))? + "\n";
        fs::write(path, text).map_err(|e| data_err(path, e))?;
    }
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn curve(args: &CurveArgs) -> Outcome {
    let registry = registry(args.max_stumps);
    for name in &args.methods {
        let method = registry.get(name).map_err(|e| usage(e.to_string()))?;
        for v in method.default_grid(args.m) {
            method.check(v, args.m).map_err(|e| usage(e.to_string()))?;
        }
    }
    if args.m < 2 || args.sizes.is_empty() || args.sizes.contains(&0) || args.repeats == 0 || args.n_test == 0 {
        return Err(usage("need --m >= 2, positive sizes, repeats and test size"));
    }
    if args.bayes_points == 0 || args.bayes_reps == 0 {
        return Err(usage("need positive --bayes-points and --bayes-reps"));
    }
    if args.m > mlrank::synth::MAX_MC_LABELS {
        return Err(usage(format!(
            "the Bayes reference needs m <= {}",
            mlrank::synth::MAX_MC_LABELS
        )));
    }
    let cfg = CurveConfig {
        methods: args.methods.clone(),
        m: args.m,
        dependent: args.dependent,
        noise_sd: args.noise_sd,
        model_seed: args.model_seed,
        data_seed: args.data_seed,
        sizes: args.sizes.clone(),
        repeats: args.repeats,
        n_test: args.n_test,
        weight: args.weight.spec(),
        grids: vec![None; args.methods.len()],
        bayes_points: args.bayes_points,
        bayes_reps: args.bayes_reps,
    };
    let report = run_curve(&registry, &cfg)?;
    let join = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
    let provenance = vec![
        format!(
            "mlrank curve --methods {} --m {}{} --noise-sd {:?} --model-seed {} --data-seed {} --sizes {} --repeats {} --n-test {} --weight {} --bayes-points {} --bayes-reps {}{}",
            args.methods.join(","),
            args.m,
            if args.dependent { " --dependent" } else { "" },
            args.noise_sd,
            args.model_seed,
            args.data_seed,
            join(&args.sizes),
            args.repeats,
            args.n_test,
            args.weight.name(),
            args.bayes_points,
            args.bayes_reps,
            args.max_stumps.map(|k| format!(" --max-stumps {k}")).unwrap_or_default()
        ),
        format!("mc_bayes_risk={:.6} se={:.6}", report.bayes.mean, report.bayes.se),
    ];
    let mut w = csv_with_provenance(&args.out, &provenance)?;
    w.write_record(["method", "n", "repeat", "rank_loss", "mc_bayes_risk", "selected"])?;
    for row in &report.rows {
        w.write_record([
            row.method.clone(),
            row.n.to_string(),
            row.repeat.to_string(),
            loss6(row.rank_loss),
            loss6(row.mc_bayes_risk),
            row.selected.to_string(),
        ])?;
    }
    w.flush()?;
    println!("mc_bayes_risk={} se={}", loss6(report.bayes.mean), loss6(report.bayes.se));
    for (method, n, mean, se) in summarize(&report.rows) {
        println!("{method} n={n} mean_rank_loss={} se={}", loss6(mean), loss6(se));
    }
    Ok(())
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| usage(format!("{THREADS_VAR} must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| usage(e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Generate(a) => generate(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Verify(a) => verify(a),
        Command::Curve(a) => curve(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Verification) => {
            eprintln!("verification failed");
            ExitCode::from(3)
        }
    }
}
