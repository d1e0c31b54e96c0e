use std::path::PathBuf;
use std::process::ExitCode;

use adasi_core::Strategy;
use adasi_harness::config::{parse_list, parse_strategy, App, ExperimentConfig, Method};
use adasi_harness::problem::{run_test, ProblemFile};
use adasi_harness::report::{write_csv, write_summary_json};
use adasi_harness::{run_experiment, HarnessError, Result};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "adasi",
    version,
    about = "Adaptively bounded selective inference"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo comparison of p-value methods on synthetic data.
    Experiment(ExperimentArgs),
    /// Run inference once on a problem file and print a JSON report.
    Test(TestArgs),
}

#[derive(clap::Args)]
struct ExperimentArgs {
    #[arg(long, value_parser = parse_app)]
    app: App,
    /// Signal strength; 0 simulates the null.
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Target width of the p-value bounds for `prec`.
    #[arg(long, default_value_t = 0.001)]
    eps: f64,
    /// Comma-separated subset of naive,oc,exhaustive,prec,dec.
    #[arg(long, default_value = "naive,oc,exhaustive,prec,dec")]
    methods: String,
    /// Comma-separated subset of pi1,pi2,pi3.
    #[arg(long, default_value = "pi1,pi2,pi3")]
    strategies: String,
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    p: usize,
    #[arg(long = "K", default_value_t = 5)]
    k: usize,
    /// Image side for dnn-z.
    #[arg(long, default_value_t = 8)]
    d: usize,
    /// Saliency threshold for dnn-z.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    tau: f64,
    #[arg(long, default_value_t = 0)]
    net_seed: u64,
    /// CSV output; the summary goes next to it as `<stem>.summary.json`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct TestArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "dec", value_parser = parse_method)]
    method: Method,
    #[arg(long, default_value = "pi3", value_parser = parse_strat)]
    strategy: Strategy,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 0.001)]
    eps: f64,
    /// Also bracket the selective confidence interval.
    #[arg(long)]
    ci: bool,
}

fn parse_app(s: &str) -> std::result::Result<App, String> {
    s.parse().map_err(|e: HarnessError| e.to_string())
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: HarnessError| e.to_string())
}

fn parse_strat(s: &str) -> std::result::Result<Strategy, String> {
    parse_strategy(s).map_err(|e| e.to_string())
}

fn experiment(args: ExperimentArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::new(args.app);
    cfg.delta = args.delta;
    cfg.trials = args.trials;
    cfg.seed = args.seed;
    cfg.alpha = args.alpha;
    cfg.eps = args.eps;
    cfg.methods = parse_list(&args.methods)?;
    cfg.strategies = parse_list::<Strategy>(&args.strategies)
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    cfg.n = args.n;
    cfg.p = args.p;
    cfg.k = args.k;
    cfg.d = args.d;
    cfg.tau = args.tau;
    cfg.net_seed = args.net_seed;
    cfg.out_path = args.out.clone();
    let res = run_experiment(&cfg)?;
    if let Some(path) = &args.out {
        write_csv(&res.records, path)?;
        write_summary_json(&res.summary, &path.with_extension("summary.json"))?;
    }
    let text = serde_json::to_string_pretty(&res.summary).expect("summary serializes");
    println!("{text}");
    Ok(())
}

fn test(args: TestArgs) -> Result<()> {
    let problem = ProblemFile::load(&args.input)?;
    let report = run_test(
        &problem,
        args.method,
        args.strategy,
        args.alpha,
        args.eps,
        args.ci,
    )?;
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    println!("{text}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Experiment(args) => experiment(args),
        Command::Test(args) => test(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
