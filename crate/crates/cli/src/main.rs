use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use irf_core::debias::{g, g_inv, g_prime, odds_ratio};
use irf_core::experiment::{estimate_v1s, oracle_check, parse_config, run_clt, run_mc, V1sLearner, V1sMethod};
use irf_core::synth::make_model;
use irf_core::theory::{
    clt_var_is, clt_var_sub, clt_var_under, hajek_var_sub, hajek_var_under, is_delta_factor, v10_v11_approx,
    v1s_approx, v_star,
};
use irf_core::{ExperimentConfig, PriorPair, RandomStream, Scenario, Setup};

#[derive(Parser)]
#[command(name = "irf", version, about = "Subsampling, under-sampling and importance-sampling ensembles for imbalanced data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a synthetic dataset and write it as CSV, with a model.txt sidecar.
    Generate(GenerateArgs),
    /// Bias, variance and MISE over the evaluation grid.
    Mc(RunArgs),
    /// Standardized estimates at the probe points, with KS distance and coverage.
    Clt(RunArgs),
    /// Nested Monte Carlo estimate of the first kernel variance of bagged 1-NN.
    V1s(V1sArgs),
    /// Closed forms against enumeration and finite ensembles on tiny instances.
    OracleCheck {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Evaluate one of the closed-form variance or debiasing formulas.
    Theory(TheoryArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 1)]
    setup: u8,
    #[arg(long, default_value_t = 1)]
    scenario: u8,
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output CSV; the sidecar goes to model.txt in the same directory.
    #[arg(long)]
    out: PathBuf,
}

/// Flags shared by `mc` and `clt`. Each one overrides the config file.
#[derive(Args)]
struct RunArgs {
    /// File of key=value lines.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    setup: Option<String>,
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    d: Option<String>,
    /// Comma-separated sample sizes.
    #[arg(long)]
    n: Option<String>,
    /// sqrt, pow08 or fixed:<k>
    #[arg(long = "s-rule")]
    s_rule: Option<String>,
    /// Ensemble size; 0 evaluates the infinite ensemble exactly.
    #[arg(long = "B")]
    b: Option<String>,
    #[arg(long)]
    reps: Option<String>,
    /// Evaluation grid points per axis.
    #[arg(long)]
    grid: Option<String>,
    /// Comma-separated subset of irf_sub,nn_sub,nn_under,nn_is,irf_under,irf_is.
    #[arg(long)]
    estimators: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long, env = "IRF_THREADS")]
    threads: Option<String>,
    /// Probe points as x1:x2;x1:x2
    #[arg(long)]
    probes: Option<String>,
    /// Class-1 share of s for the stratified estimators.
    #[arg(long = "under-split")]
    under_split: Option<String>,
    /// Use a fixed grid partition with this many cells per axis for the forests.
    #[arg(long = "grid-partition")]
    grid_partition: Option<String>,
    #[arg(long = "min-leaf")]
    min_leaf: Option<String>,
    #[arg(long = "max-depth")]
    max_depth: Option<String>,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            cfg = parse_config(&text, cfg)?;
        }
        let flags = [
            ("setup", &self.setup),
            ("scenario", &self.scenario),
            ("d", &self.d),
            ("n", &self.n),
            ("s_rule", &self.s_rule),
            ("b", &self.b),
            ("reps", &self.reps),
            ("grid", &self.grid),
            ("estimators", &self.estimators),
            ("seed", &self.seed),
            ("threads", &self.threads),
            ("probes", &self.probes),
            ("under_split", &self.under_split),
            ("grid_partition", &self.grid_partition),
            ("min_leaf", &self.min_leaf),
            ("max_depth", &self.max_depth),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Plain,
    Localized,
}

#[derive(Args)]
struct V1sArgs {
    #[arg(long, default_value_t = 1)]
    setup: u8,
    #[arg(long, default_value_t = 1)]
    scenario: u8,
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Subsample size.
    #[arg(long, default_value_t = 200)]
    s: usize,
    #[arg(long, default_value_t = 2000)]
    outer: usize,
    #[arg(long, default_value_t = 200)]
    inner: usize,
    /// Comma-separated probe coordinates; the origin when absent.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    probe: Vec<f64>,
    #[arg(long, value_enum, default_value_t = MethodArg::Localized)]
    method: MethodArg,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, env = "IRF_THREADS", default_value_t = 1)]
    threads: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Formula {
    Odds,
    G,
    GInv,
    GPrime,
    VStar,
    IsDeltaFactor,
    CltVarSub,
    CltVarUnder,
    CltVarIs,
    V1sApprox,
    #[value(name = "v10-v11-approx")]
    V10V11Approx,
    HajekVarSub,
    HajekVarUnder,
}

#[derive(Args)]
struct TheoryArgs {
    #[arg(value_enum)]
    formula: Formula,
    /// Regression value (mu, or mu* for the under-sampling forms).
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long = "p-star")]
    p_star: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    s: Option<usize>,
    #[arg(long)]
    n0: Option<usize>,
    #[arg(long)]
    n1: Option<usize>,
    #[arg(long)]
    s0: Option<usize>,
    #[arg(long)]
    s1: Option<usize>,
    #[arg(long)]
    v1s: Option<f64>,
    #[arg(long)]
    v10: Option<f64>,
    #[arg(long)]
    v11: Option<f64>,
}

fn need<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.with_context(|| format!("--{flag} is required for this formula"))
}

impl TheoryArgs {
    fn mu(&self) -> Result<f64> {
        need(self.mu, "mu")
    }

    fn priors(&self) -> Result<PriorPair> {
        Ok(PriorPair::new(need(self.p, "p")?, need(self.p_star, "p-star")?)?)
    }

    fn evaluate(&self) -> Result<Vec<(&'static str, f64)>> {
        let one = |name, v| Ok(vec![(name, v)]);
        match self.formula {
            Formula::Odds => one("odds_ratio", odds_ratio(self.mu()?, need(self.p, "p")?)?),
            Formula::G => one("g", g(self.mu()?, self.priors()?)?),
            Formula::GInv => one("g_inv", g_inv(self.mu()?, self.priors()?)?),
            Formula::GPrime => one("g_prime", g_prime(self.mu()?, self.priors()?)?),
            Formula::VStar => one("v_star", v_star(self.mu()?, self.priors()?)?),
            Formula::IsDeltaFactor => one("is_delta_factor", is_delta_factor(self.mu()?, self.priors()?)),
            Formula::CltVarSub => one("clt_var_sub", clt_var_sub(self.mu()?)),
            Formula::CltVarUnder => one("clt_var_under", clt_var_under(self.mu()?, self.priors()?)),
            Formula::CltVarIs => one("clt_var_is", clt_var_is(self.mu()?, self.priors()?)),
            Formula::V1sApprox => one("v1s_approx", v1s_approx(self.mu()?, need(self.s, "s")?)),
            Formula::V10V11Approx => {
                let (v10, v11) = v10_v11_approx(self.mu()?, need(self.p_star, "p-star")?, need(self.s, "s")?);
                Ok(vec![("v10", v10), ("v11", v11)])
            }
            Formula::HajekVarSub => {
                one("hajek_var_sub", hajek_var_sub(need(self.v1s, "v1s")?, need(self.n, "n")?, need(self.s, "s")?))
            }
            Formula::HajekVarUnder => one(
                "hajek_var_under",
                hajek_var_under(
                    need(self.v10, "v10")?,
                    need(self.v11, "v11")?,
                    need(self.n0, "n0")?,
                    need(self.n1, "n1")?,
                    need(self.s0, "s0")?,
                    need(self.s1, "s1")?,
                ),
            ),
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => Ok(io::stdout().write_all(text.as_bytes())?),
    }
}

fn generate(args: &GenerateArgs) -> Result<()> {
    let model = make_model(Setup::from_index(args.setup)?, Scenario::from_index(args.scenario)?, args.d)?;
    let ds = model.generate(args.n, &mut RandomStream::new(args.seed).derive("generate", 0))?;
    ds.save(&args.out).with_context(|| format!("writing {}", args.out.display()))?;
    let sidecar = args.out.parent().unwrap_or(Path::new(".")).join("model.txt");
    let mut text = model.describe();
    text.push_str(&format!("n={}\nseed={}\nn0={}\nn1={}\n", args.n, args.seed, ds.n0(), ds.n1()));
    fs::write(&sidecar, text).with_context(|| format!("writing {}", sidecar.display()))?;
    eprintln!("wrote {} rows to {} ({} of class 1)", ds.len(), args.out.display(), ds.n1());
    Ok(())
}

fn v1s(args: &V1sArgs) -> Result<()> {
    let model = make_model(Setup::from_index(args.setup)?, Scenario::from_index(args.scenario)?, args.d)?;
    let probe = if args.probe.is_empty() { vec![0.0; args.d] } else { args.probe.clone() };
    let method = match args.method {
        MethodArg::Plain => V1sMethod::Plain,
        MethodArg::Localized => V1sMethod::Localized,
    };
    let rng = RandomStream::new(args.seed).derive("v1s", 0);
    let est = estimate_v1s(&model, args.s, args.outer, args.inner, &probe, method, V1sLearner::OneNn, &rng, args.threads)?;
    let mu = model.mu(&probe);
    println!("mu={mu}");
    println!("v1s={}", est.value);
    println!("se={}", est.se);
    println!("v1s_approx={}", v1s_approx(mu, args.s));
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Generate(args) => generate(&args)?,
        Command::Mc(args) => {
            let summary = run_mc(&args.config()?)?;
            if summary.redraws > 0 {
                eprintln!("redrew {} datasets with an empty class", summary.redraws);
            }
            emit(args.out.as_deref(), &summary.to_csv())?;
        }
        Command::Clt(args) => {
            let report = run_clt(&args.config()?)?;
            if report.redraws > 0 {
                eprintln!("redrew {} datasets with an empty class", report.redraws);
            }
            emit(args.out.as_deref(), &report.to_csv())?;
        }
        Command::V1s(args) => v1s(&args)?,
        Command::OracleCheck { seed } => {
            let report = oracle_check(seed)?;
            for line in &report.lines {
                println!("{line}");
            }
            return Ok(report.all_pass());
        }
        Command::Theory(args) => {
            for (name, value) in args.evaluate()? {
                println!("{name}={value}");
            }
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
