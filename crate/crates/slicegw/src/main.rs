use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use slicegw::ablate::{ablate, markdown_table};
use slicegw::bench::{run_bench, to_csv, BenchConfig};
use slicegw::checkpoint::Checkpoint;
use slicegw::checks::standard_suite;
use slicegw::cloud::{read_cloud, write_labeled};
use slicegw::config::{RunSpec, SEED_ENV};
use slicegw::experiment::{load_data, run_on, write_metrics};
use slicegw::format_value;
use slicegw_core::geometry::{pairwise_sq_euclidean, sample_projections};
use slicegw_core::ot::{gw_1d, gw_bruteforce, sgw, sliced_wasserstein};

/// Gromov-Wasserstein distances and SGW domain adaptation.
#[derive(Parser)]
#[command(name = "slicegw", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Distance between two point clouds stored as CSV.
    Dist(DistArgs),
    /// Train one arm and print its summary as JSON.
    Train(TrainArgs),
    /// Train all four arms over several seeds.
    Ablate(AblateArgs),
    /// Time sgw for several cloud sizes and projection counts.
    Bench(BenchArgs),
    /// Run the numerical property checks.
    Selftest(SelftestArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    #[value(name = "gw_bruteforce")]
    GwBruteforce,
    #[value(name = "gw1d")]
    Gw1d,
    Sgw,
    Sw,
}

impl Metric {
    fn name(self) -> &'static str {
        match self {
            Metric::GwBruteforce => "gw_bruteforce",
            Metric::Gw1d => "gw1d",
            Metric::Sgw => "sgw",
            Metric::Sw => "sw",
        }
    }
}

#[derive(Args)]
struct DistArgs {
    cloud_a: PathBuf,
    cloud_b: PathBuf,
    #[arg(long, value_enum, default_value = "sgw")]
    metric: Metric,
    /// Number of projections for sgw and sw.
    #[arg(long = "projections", short = 'L', default_value_t = 200)]
    projections: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Add the elapsed time to the JSON record.
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct RunArgs {
    /// File of `key = value` lines applied on top of the defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = ["gaussians", "mnist-invert"])]
    dataset: Option<String>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    lambda_adv: Option<f64>,
    #[arg(long)]
    lambda_sgw: Option<f64>,
    #[arg(long = "projections", short = 'L')]
    projections: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = ["sgd", "adam"])]
    optimizer: Option<String>,
    /// Cap on training rows per domain.
    #[arg(long)]
    limit: Option<usize>,
    /// Cap on test rows per domain.
    #[arg(long)]
    test_limit: Option<usize>,
    #[arg(long)]
    mnist_dir: Option<PathBuf>,
    /// Any config key, as `key=value`; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Print per-epoch progress on stderr.
    #[arg(long)]
    verbose: bool,
}

impl RunArgs {
    fn spec(&self) -> anyhow::Result<RunSpec> {
        let mut spec = RunSpec::from_env()?;
        if let Some(path) = &self.config {
            spec.apply_config_file(path)?;
        }
        let mut pairs: Vec<(String, String)> = Vec::new();
        let mut push = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                pairs.push((k.to_owned(), v));
            }
        };
        push("dataset", self.dataset.clone());
        push("epochs", self.epochs.map(|v| v.to_string()));
        push("batch_size", self.batch_size.map(|v| v.to_string()));
        push("lr", self.lr.map(|v| v.to_string()));
        push("lambda_adv", self.lambda_adv.map(|v| v.to_string()));
        push("lambda_sgw", self.lambda_sgw.map(|v| v.to_string()));
        push("projections", self.projections.map(|v| v.to_string()));
        push("seed", self.seed.map(|v| v.to_string()));
        push("optimizer", self.optimizer.clone());
        push("train_limit", self.limit.map(|v| v.to_string()));
        push("test_limit", self.test_limit.map(|v| v.to_string()));
        push("mnist_dir", self.mnist_dir.as_ref().map(|p| p.display().to_string()));
        for kv in &self.set {
            let Some((k, v)) = kv.split_once('=') else { bail!("--set expects KEY=VALUE, got {kv:?}") };
            pairs.push((k.trim().to_owned(), v.trim().to_owned()));
        }
        for (k, v) in pairs {
            spec.set(&k, &v).map_err(|m| anyhow::anyhow!("{m}"))?;
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, value_parser = ["source_only", "adv_only", "sgw_only", "adv_plus_sgw"])]
    arm: Option<String>,
    /// Directory for summary.json and epochs.csv.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the trained parameters to this JSON file.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Write the four datasets as labeled CSV into this directory.
    #[arg(long)]
    export_data: Option<PathBuf>,
    /// Include wall-clock times in the JSON on stdout.
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct AblateArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Number of seeds, starting at the configured seed.
    #[arg(long, default_value_t = 1)]
    seeds: usize,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "4096,8192,16384,32768")]
    n_list: Vec<usize>,
    /// Projection counts.
    #[arg(long = "l-list", alias = "L", value_delimiter = ',', default_value = "200")]
    l_list: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SelftestArgs {
    #[arg(long)]
    seed: Option<u64>,
}

fn default_seed(flag: Option<u64>) -> anyhow::Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().with_context(|| format!("{SEED_ENV}={v:?} is not a valid seed")),
        Err(_) => Ok(0),
    }
}

fn print_json(value: &impl serde::Serialize) -> anyhow::Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn dist(args: DistArgs) -> anyhow::Result<()> {
    let seed = default_seed(args.seed)?;
    let a = read_cloud(&args.cloud_a)?;
    let b = read_cloud(&args.cloud_b)?;
    let start = Instant::now();
    let sliced = matches!(args.metric, Metric::Sgw | Metric::Sw);
    let value = match args.metric {
        Metric::GwBruteforce => gw_bruteforce(&pairwise_sq_euclidean(&a)?, &pairwise_sq_euclidean(&b)?)?.value,
        Metric::Gw1d => {
            if a.dim() != 1 || b.dim() != 1 {
                bail!("gw1d needs one-dimensional clouds, got d = {} and d = {}", a.dim(), b.dim());
            }
            gw_1d(&a, &b)?.value
        }
        Metric::Sgw | Metric::Sw => {
            let p = sample_projections(args.projections, a.dim(), seed)?;
            if matches!(args.metric, Metric::Sgw) {
                sgw(&a, &b, &p)?
            } else {
                sliced_wasserstein(&a, &b, &p)?
            }
        }
    };
    let elapsed = start.elapsed().as_secs_f64();
    println!("{}", format_value(value));
    let mut record = json!({
        "metric": args.metric.name(),
        "seed": seed,
        "L": if sliced { json!(args.projections) } else { json!(null) },
        "n": a.len(),
        "d": a.dim(),
        "value": value,
    });
    if args.timing {
        record["elapsed"] = json!(elapsed);
    }
    print_json(&record)
}

fn train(args: TrainArgs) -> anyhow::Result<()> {
    let mut spec = args.run.spec()?;
    if let Some(arm) = &args.arm {
        spec.set("arm", arm).map_err(|m| anyhow::anyhow!("{m}"))?;
    }
    let data = load_data(&spec)?;
    if let Some(dir) = &args.export_data {
        std::fs::create_dir_all(dir).with_context(|| dir.display().to_string())?;
        for (name, ds) in [
            ("source_train", &data.source_train),
            ("target_train", &data.target_train),
            ("source_test", &data.source_test),
            ("target_test", &data.target_test),
        ] {
            write_labeled(dir.join(format!("{name}.csv")), ds)?;
        }
    }
    let verbose = args.run.verbose;
    let (summary, trainer) = run_on(&spec, &data, |line| {
        if verbose {
            eprintln!("{line}");
        }
    })?;
    if let Some(dir) = &args.out {
        write_metrics(dir, &summary)?;
    }
    if let Some(path) = &args.checkpoint {
        Checkpoint::from_bundle(&trainer.bundle).save(path)?;
    }
    eprintln!(
        "{} {} seed {}: source acc {:.4}, target acc {:.4}",
        summary.dataset, summary.arm, summary.seed, summary.final_src_acc, summary.final_tgt_acc
    );
    print_json(&if args.timing { summary } else { summary.without_timing() })
}

fn run_ablate(args: AblateArgs) -> anyhow::Result<()> {
    let spec = args.run.spec()?;
    let verbose = args.run.verbose;
    let report = ablate(&spec, args.seeds, args.jobs, &|line: &str| {
        if verbose {
            eprintln!("{line}");
        }
    })?;
    eprint!("{}", markdown_table(&report));
    print_json(&report)
}

fn bench(args: BenchArgs) -> anyhow::Result<()> {
    let cfg = BenchConfig {
        n_list: args.n_list,
        l_list: args.l_list,
        repeats: args.repeats,
        dim: args.dim,
        seed: default_seed(args.seed)?,
    };
    print!("{}", to_csv(&run_bench(&cfg)?));
    Ok(())
}

fn selftest(args: SelftestArgs) -> anyhow::Result<()> {
    let reports = standard_suite(default_seed(args.seed)?)?;
    for r in &reports {
        eprintln!("{}", r.line());
    }
    print_json(&reports)?;
    let failed = reports.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        bail!("{failed} of {} checks failed", reports.len());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.render().to_string();
            eprintln!("{}", rendered.lines().next().unwrap_or("error: invalid arguments"));
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Dist(a) => dist(a),
        Command::Train(a) => train(a),
        Command::Ablate(a) => run_ablate(a),
        Command::Bench(a) => bench(a),
        Command::Selftest(a) => selftest(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
