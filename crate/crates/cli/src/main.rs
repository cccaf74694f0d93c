use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use carnot_kit::config::{GroupSpec, OutputFormat, RunConfig, CHECK_COUNTEREXAMPLE, CHECK_DENSITY, CHECK_HARNACK};
use carnot_kit::estimates::{ID_AVERAGED, ID_ENERGY, ID_INFIMUM, ID_LARGE_RADIUS, ID_POWER_MEAN, ID_PRODUCT, ID_WEAK_FORM};
use carnot_kit::liouville::{evaluate_condition, Form, LiouvilleInputs};
use carnot_kit::report::{CheckDetail, ExitStatus, RunReport};
use carnot_kit::runner::run;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "carnot-kit", version, about = "Checks a priori estimates and Liouville conditions for quasilinear systems on Carnot groups")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// TOML run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// overrides the config seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// overrides budget.samples
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// output directory (default from the config, else ./out)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the power condition on (Q, p, q, a, b); exit 3 when it fails
    CheckLiouville(LiouvilleArgs),
    /// Run the estimate checks listed in the config (all of them if none are)
    VerifyEstimates,
    /// Weak Harnack ratios for u and v over the harnack radius grid
    HarnackScan,
    /// Sublevel densities of the field declared with ess inf 0
    DensityScan,
    /// Search for a radial counterexample where the condition fails
    FindCounterexample(SearchArgs),
    /// Run every check listed in the config
    Run,
}

#[derive(Args)]
struct LiouvilleArgs {
    #[arg(long = "Q")]
    hom_dim: String,
    #[arg(long, alias = "p1")]
    p: String,
    #[arg(long, alias = "p2")]
    q: String,
    #[arg(long)]
    a: String,
    #[arg(long)]
    b: String,
    #[arg(long, value_enum, default_value = "max")]
    form: FormArg,
    /// the operators are only known to be coercive
    #[arg(long)]
    general_operators: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormArg {
    Min,
    Max,
    EqualExponents,
    QuadraticEqualExponents,
}

impl From<FormArg> for Form {
    fn from(f: FormArg) -> Form {
        match f {
            FormArg::Min => Form::Min,
            FormArg::Max => Form::Max,
            FormArg::EqualExponents => Form::EqualExponents,
            FormArg::QuadraticEqualExponents => Form::QuadraticEqualExponents,
        }
    }
}

#[derive(Args)]
struct SearchArgs {
    /// euclidean:N, heisenberg:N or engel (ignored with --config)
    #[arg(long)]
    group: Option<String>,
    #[arg(long, alias = "p1")]
    p: Option<f64>,
    #[arg(long, alias = "p2")]
    q: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
}

const ESTIMATE_CHECKS: [&str; 7] = [ID_WEAK_FORM, ID_ENERGY, ID_PRODUCT, ID_AVERAGED, ID_POWER_MEAN, ID_INFIMUM, ID_LARGE_RADIUS];

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(status) => ExitCode::from(status.code() as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(ExitStatus::ConfigError.code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<ExitStatus> {
    let g = &cli.global;
    match &cli.command {
        Command::CheckLiouville(args) => check_liouville(args),
        Command::VerifyEstimates => {
            let mut c = load(g)?;
            let listed: Vec<String> = c.checks.iter().filter(|k| ESTIMATE_CHECKS.contains(&k.as_str())).cloned().collect();
            c.checks = if listed.is_empty() {
                ESTIMATE_CHECKS[..5].iter().map(|s| s.to_string()).collect()
            } else {
                listed
            };
            execute(g, c)
        }
        Command::HarnackScan => {
            let mut c = load(g)?;
            c.checks = vec![CHECK_HARNACK.into()];
            execute(g, c)
        }
        Command::DensityScan => {
            let mut c = load(g)?;
            c.checks = vec![CHECK_DENSITY.into()];
            execute(g, c)
        }
        Command::FindCounterexample(args) => {
            let mut c = match &g.config {
                Some(_) => load(g)?,
                None => search_config(args)?,
            };
            c.checks = vec![CHECK_COUNTEREXAMPLE.into()];
            for (slot, v) in [
                (&mut c.liouville.p, args.p),
                (&mut c.liouville.q, args.q),
                (&mut c.liouville.a, args.a),
                (&mut c.liouville.b, args.b),
            ] {
                if let Some(v) = v {
                    *slot = Some(carnot_kit::config::Numeral::Float(v));
                }
            }
            execute(g, c)
        }
        Command::Run => execute(g, load(g)?),
    }
}

fn load(g: &Global) -> anyhow::Result<RunConfig> {
    let Some(path) = &g.config else {
        bail!("--config PATH is required for this subcommand");
    };
    let mut c = RunConfig::load(path).with_context(|| format!("reading {}", path.display()))?;
    apply_overrides(g, &mut c);
    Ok(c)
}

fn apply_overrides(g: &Global, c: &mut RunConfig) {
    if let Some(s) = g.seed {
        c.seed = s;
    }
    if let Some(n) = g.samples {
        c.budget.samples = n;
    }
    if let Some(j) = g.jobs {
        c.jobs = j;
    }
    if let Some(o) = &g.out {
        c.output.dir = o.clone();
    }
    if let Some(f) = g.format {
        c.output.format = match f {
            Format::Json => OutputFormat::Json,
            Format::Csv => OutputFormat::Csv,
        };
    }
}

fn search_config(args: &SearchArgs) -> anyhow::Result<RunConfig> {
    let group = match args.group.as_deref() {
        None => bail!("find-counterexample needs --config or --group"),
        Some(s) => parse_group(s)?,
    };
    let mut c = RunConfig::from_toml("seed = 0\nchecks = []\n[group]\nkind = \"euclidean\"\ndim = 1\n")?;
    c.group = group;
    Ok(c)
}

fn parse_group(s: &str) -> anyhow::Result<GroupSpec> {
    let (kind, n) = s.split_once(':').unwrap_or((s, ""));
    let dim = || n.parse::<usize>().with_context(|| format!("group {s:?} needs a dimension, e.g. {kind}:3"));
    Ok(match kind {
        "euclidean" => GroupSpec::Euclidean { dim: dim()? },
        "heisenberg" => GroupSpec::Heisenberg { n: dim()? },
        "engel" => GroupSpec::Custom { plugin: "engel".into() },
        other => bail!("unknown group {other:?}"),
    })
}

fn check_liouville(args: &LiouvilleArgs) -> anyhow::Result<ExitStatus> {
    let inputs = LiouvilleInputs::parse(&args.hom_dim, &args.p, &args.q, &args.a, &args.b)?.with_general_operators(args.general_operators);
    let v = evaluate_condition(&inputs, args.form.into())?;
    println!("{}", serde_json::to_string_pretty(&v)?);
    Ok(match v.condition_holds {
        Some(false) => ExitStatus::ConditionFails,
        _ => ExitStatus::Pass,
    })
}

fn execute(g: &Global, mut c: RunConfig) -> anyhow::Result<ExitStatus> {
    apply_overrides(g, &mut c);
    let report = run(&c)?;
    let written = report.write(&c.output.dir, c.output.format)?;
    summarise(&report);
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(report.status)
}

fn summarise(r: &RunReport) {
    for c in &r.checks {
        let extra = match &c.detail {
            CheckDetail::Estimate(e) => format!("min margin {:.4e} over {} records", e.min_margin(), e.records.len()),
            CheckDetail::Harnack { u, v } => format!("c_H(u) = {:.4}, c_H(v) = {:.4}", u.empirical_c_h, v.empirical_c_h),
            CheckDetail::Density(d) => format!("final ball fraction {:.4}", d.ball_fractions.last().copied().unwrap_or(f64::NAN)),
            CheckDetail::Liouville(v) => format!("{:?} ({:?})", v.condition_holds, v.conclusion),
            CheckDetail::Classify(k) => format!("{:?} via {:?}", k.conclusion, k.route),
            CheckDetail::Counterexample(s) => format!("found = {}", s.found),
        };
        println!("{:<18} {:<12} {extra}", c.check, format!("{:?}", c.verdict));
    }
    println!("status: {:?} (exit {})", r.status, r.exit_code);
}

