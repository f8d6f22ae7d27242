//! Command-line front end. The `condwalk` binary is a thin wrapper around [`dispatch`].

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::continuum;
use crate::env::{Environment, EnvironmentParams};
use crate::error::{Error, Result};
use crate::network::{self, ReductionKind};
use crate::rng;
use crate::stats::{self, SuiteConfig, Thresholds, VerificationReport};
use crate::walk::{self, CrossingSampler, MeanderSampler};

/// Default output directory when `--out-dir` is not given.
pub const OUT_DIR_VAR: &str = "CONDWALK_OUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "condwalk", version, about = "Conditioned random walks among random conductances")]
struct Cli {
    /// JSON file supplying any flag by its long name; flags on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Master seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Directory that relative output paths resolve against.
    #[arg(long, global = true, env = OUT_DIR_VAR)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate or validate environments.
    #[command(subcommand)]
    Env(EnvCmd),
    /// Simulate, condition and sample the walk.
    #[command(subcommand)]
    Walk(WalkCmd),
    /// Network reductions and exact solves.
    #[command(subcommand)]
    Net(NetCmd),
    /// Continuum reference processes.
    #[command(subcommand)]
    Continuum(ContinuumCmd),
    /// Verification suites.
    #[command(subcommand)]
    Verify(VerifyCmd),
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum EnvKind {
    Srw,
    Iid,
    Markov,
}

#[derive(Subcommand, Debug)]
enum EnvCmd {
    Gen {
        #[arg(long, value_enum, default_value_t = EnvKind::Iid)]
        kind: EnvKind,
        /// Inclusive site range.
        #[arg(long, num_args = 2, allow_hyphen_values = true, value_names = ["X_MIN", "X_MAX"], required = true)]
        window: Vec<i64>,
        #[arg(long, default_value_t = 0.5)]
        kappa: f64,
        #[arg(long, default_value_t = 2.0)]
        k_bound: f64,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, default_value_t = 3)]
        r_max: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    Validate {
        file: PathBuf,
    },
}

#[derive(Args, Debug)]
struct EnvArg {
    /// Environment JSON file.
    #[arg(long)]
    env: PathBuf,
}

#[derive(Subcommand, Debug)]
enum WalkCmd {
    Simulate {
        #[command(flatten)]
        env: EnvArg,
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        start: i64,
        #[arg(long)]
        steps: usize,
        /// Diffusive scale recorded in the header.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    Survival {
        #[command(flatten)]
        env: EnvArg,
        #[arg(long)]
        n: usize,
        /// Truncation window; doubled from the default until converged when absent.
        #[arg(long)]
        window: Option<usize>,
        /// Write the binary survival table here.
        #[arg(long)]
        table: Option<PathBuf>,
        /// Write the result as JSON here.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    SampleMeander {
        #[command(flatten)]
        env: EnvArg,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    SampleCrossing {
        #[command(flatten)]
        env: EnvArg,
        #[arg(long)]
        level: i64,
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    Sigma {
        #[command(flatten)]
        env: EnvArg,
        #[arg(long, default_value_t = stats::SIGMA_FIT_STEPS)]
        n_fit: usize,
        #[arg(long, default_value_t = stats::SIGMA_FIT_RUNS)]
        runs: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct LevelArgs {
    #[command(flatten)]
    env: EnvArg,
    /// Crossing level `N`.
    #[arg(long)]
    level: i64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum NetCmd {
    Reduce {
        #[command(flatten)]
        args: LevelArgs,
        #[arg(long, default_value = "omega3")]
        kind: ReductionKind,
    },
    Ceff(LevelArgs),
    Hitprob(LevelArgs),
    Exittime(LevelArgs),
    LittleBound(LevelArgs),
    Reversibility {
        #[command(flatten)]
        args: LevelArgs,
        #[arg(long, default_value_t = 3)]
        max_particles: u32,
    },
    Queue {
        #[command(flatten)]
        args: LevelArgs,
        #[arg(long, default_value_t = 2e5)]
        horizon: f64,
    },
}

#[derive(Subcommand, Debug)]
enum ContinuumCmd {
    Meander {
        #[arg(long, default_value_t = 1.0 / 1024.0)]
        dt: f64,
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    Bessel {
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 1.0)]
        horizon: f64,
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    Rho1 {
        #[arg(long, default_value_t = 1e-5)]
        dt: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    Qdensity {
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 5.0)]
        y_max: f64,
        #[arg(long, default_value_t = 101)]
        points: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct VerifyOut {
    /// Report JSON.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Directory for `(x, empirical, target)` CSV files.
    #[arg(long)]
    plots: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MeanderArgs {
    #[command(flatten)]
    env: EnvArg,
    #[arg(long, default_value_t = 4096)]
    n: usize,
    #[arg(long, default_value_t = 20_000)]
    m: usize,
    /// Diffusivity; estimated when absent (1 for srw).
    #[arg(long)]
    sigma: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum VerifyCmd {
    Rayleigh {
        #[command(flatten)]
        args: MeanderArgs,
        #[command(flatten)]
        out: VerifyOut,
    },
    Marginal {
        #[command(flatten)]
        args: MeanderArgs,
        #[arg(long, default_value_t = 0.5)]
        t: f64,
        #[command(flatten)]
        out: VerifyOut,
    },
    Ratio {
        #[command(flatten)]
        env: EnvArg,
        #[arg(long, default_value_t = 4096)]
        n: usize,
        #[arg(long, num_args = 1.., default_values_t = [0.25, 0.5])]
        t: Vec<f64>,
        #[command(flatten)]
        out: VerifyOut,
    },
    Overshoot {
        #[command(flatten)]
        env: EnvArg,
        #[arg(long, num_args = 1.., default_values_t = [32, 64, 128])]
        levels: Vec<i64>,
        /// Allowance `M`; taken from the first level when absent.
        #[arg(long)]
        allowance: Option<i64>,
        #[arg(long, default_value_t = 10_000)]
        m: usize,
        #[command(flatten)]
        out: VerifyOut,
    },
    Lemmas {
        #[command(flatten)]
        env: EnvArg,
        #[arg(long, num_args = 1.., default_values_t = [8, 16, 32, 64, 128, 256])]
        levels: Vec<i64>,
        #[command(flatten)]
        out: VerifyOut,
    },
    Corollary {
        #[command(flatten)]
        env: EnvArg,
        #[arg(long, default_value_t = 64)]
        n: usize,
        #[arg(long, default_value_t = 10_000)]
        m: usize,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long, default_value_t = 1e-5)]
        rho_dt: f64,
        #[command(flatten)]
        out: VerifyOut,
    },
    Tightness {
        #[command(flatten)]
        env: EnvArg,
        #[arg(long, num_args = 1.., default_values_t = [1024, 4096])]
        n: Vec<usize>,
        #[arg(long, default_value_t = 0.5)]
        t: f64,
        #[arg(long, num_args = 1.., default_values_t = [0.5, 0.2, 0.05])]
        h: Vec<f64>,
        #[arg(long, default_value_t = 20_000)]
        m: usize,
        #[arg(long)]
        sigma: Option<f64>,
        #[command(flatten)]
        out: VerifyOut,
    },
    Particles {
        #[command(flatten)]
        env: EnvArg,
        #[arg(long, default_value_t = 4)]
        level: i64,
        #[arg(long, default_value_t = 3)]
        max_particles: u32,
        #[arg(long, default_value_t = 2e5)]
        horizon: f64,
        #[command(flatten)]
        out: VerifyOut,
    },
    Continuum {
        #[arg(long, default_value_t = 20_000)]
        m: usize,
        #[arg(long, default_value_t = 1.0 / 1024.0)]
        dt: f64,
        #[command(flatten)]
        out: VerifyOut,
    },
    /// Fair-walk calibration, then every suite on `--env`.
    All {
        #[command(flatten)]
        env: EnvArg,
        /// Overrides the suite's horizon `n`.
        #[arg(long)]
        n: Option<usize>,
        /// Overrides the suite's sample count `m`.
        #[arg(long)]
        m: Option<usize>,
        #[command(flatten)]
        out: VerifyOut,
    },
}

/// Settings shared by every subcommand.
struct Ctx {
    seed: u64,
    out_dir: Option<PathBuf>,
    thresholds: Thresholds,
    suite: SuiteConfig,
}

impl Ctx {
    fn resolve(&self, path: &Path) -> PathBuf {
        match &self.out_dir {
            Some(dir) if path.is_relative() => dir.join(path),
            _ => path.to_path_buf(),
        }
    }

    /// Buffered writer on the resolved path, or stdout.
    fn writer(&self, path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
        Ok(match path {
            Some(p) => {
                let p = self.resolve(p);
                if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                    std::fs::create_dir_all(parent)?;
                }
                Box::new(BufWriter::new(File::create(p)?))
            }
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }

    fn emit_json(&self, value: &Value, path: Option<&PathBuf>) -> Result<()> {
        let mut w = self.writer(path)?;
        writeln!(w, "{}", serde_json::to_string_pretty(value)?)?;
        w.flush()?;
        Ok(())
    }
}

/// Config keys that are not flags.
const STRUCTURED_KEYS: [&str; 2] = ["thresholds", "suite"];

/// Append config-file values for every long flag absent from `argv`.
fn merge_config(argv: &[String], config: &serde_json::Map<String, Value>) -> Result<Vec<String>> {
    let mut merged = argv.to_vec();
    for (key, value) in config {
        if STRUCTURED_KEYS.contains(&key.as_str()) || key == "config" {
            continue;
        }
        let flag = format!("--{}", key.replace('_', "-"));
        let present = argv.iter().any(|a| a == &flag || a.starts_with(&format!("{flag}=")));
        if present {
            continue;
        }
        let scalar = |v: &Value| -> Result<String> {
            match v {
                Value::String(s) => Ok(s.clone()),
                Value::Number(n) => Ok(n.to_string()),
                _ => Err(Error::InvalidParams(format!("config key {key:?} has an unsupported value"))),
            }
        };
        match value {
            Value::Bool(true) => merged.push(flag),
            Value::Bool(false) | Value::Null => {}
            Value::Array(items) => {
                merged.push(flag);
                for item in items {
                    merged.push(scalar(item)?);
                }
            }
            other => {
                merged.push(flag);
                merged.push(scalar(other)?);
            }
        }
    }
    Ok(merged)
}

/// Pull `--config` out of `argv` without a full parse, so its values can be merged first.
fn config_path(argv: &[String]) -> Option<PathBuf> {
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidParams(_) => EXIT_USAGE,
        _ => EXIT_FAIL,
    }
}

/// Run the command line `argv` (program name first) and return the exit code.
pub fn dispatch<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let mut config = serde_json::Map::new();
    if let Some(path) = config_path(&argv) {
        match std::fs::read_to_string(&path).map_err(Error::from).and_then(|t| Ok(serde_json::from_str::<Value>(&t)?)) {
            Ok(Value::Object(map)) => config = map,
            Ok(_) => {
                eprintln!("error: config {} must hold a JSON object", path.display());
                return EXIT_USAGE;
            }
            Err(e) => {
                eprintln!("error: cannot read config {}: {e}", path.display());
                return EXIT_USAGE;
            }
        }
    }
    let merged = match merge_config(&argv, &config) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let cli = match Cli::try_parse_from(&merged) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if let Some(jobs) = cli.jobs {
        // a pool built by an earlier call in the same process is kept
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global();
    }
    fn structured<T: serde::de::DeserializeOwned>(
        config: &serde_json::Map<String, Value>,
        key: &str,
    ) -> std::result::Result<Option<T>, serde_json::Error> {
        config.get(key).cloned().map(serde_json::from_value).transpose()
    }
    let (thresholds, suite) = match (structured::<Thresholds>(&config, "thresholds"), structured::<SuiteConfig>(&config, "suite")) {
        (Ok(t), Ok(s)) => (t.unwrap_or_default(), s.unwrap_or_default()),
        (Err(e), _) | (_, Err(e)) => {
            eprintln!("error: bad config block: {e}");
            return EXIT_USAGE;
        }
    };
    let ctx = Ctx { seed: cli.seed, out_dir: cli.out_dir, thresholds, suite };
    match run(&ctx, cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn load_env(arg: &EnvArg) -> Result<Environment> {
    Environment::read_from(&arg.env)
}

fn run(ctx: &Ctx, command: Command) -> Result<i32> {
    match command {
        Command::Env(c) => run_env(ctx, c),
        Command::Walk(c) => run_walk(ctx, c),
        Command::Net(c) => run_net(ctx, c),
        Command::Continuum(c) => run_continuum(ctx, c),
        Command::Verify(c) => run_verify(ctx, c),
    }
}

fn run_env(ctx: &Ctx, cmd: EnvCmd) -> Result<i32> {
    match cmd {
        EnvCmd::Gen { kind, window, kappa, k_bound, beta, r_max, output } => {
            let w = (window[0], window[1]);
            let params = match kind {
                EnvKind::Srw => EnvironmentParams::srw(w.0, w.1),
                EnvKind::Iid => EnvironmentParams::iid(kappa, k_bound, beta, r_max, w, ctx.seed),
                EnvKind::Markov => EnvironmentParams::markov(kappa, k_bound, beta, r_max, w, ctx.seed),
            };
            let env = Environment::generate(params)?;
            match output {
                Some(p) => {
                    let p = ctx.resolve(&p);
                    env.write_to(&p)?;
                    println!("{}", env.env_id());
                }
                None => println!("{}", env.to_json()?),
            }
            Ok(EXIT_OK)
        }
        EnvCmd::Validate { file } => {
            let env = Environment::read_from(&file)?;
            let report = env.validate();
            ctx.emit_json(&json!({ "env_id": env.env_id(), "report": report }), None)?;
            Ok(if report.pass { EXIT_OK } else { EXIT_FAIL })
        }
    }
}

fn write_paths(ctx: &Ctx, output: Option<&PathBuf>, header: Value, paths: &[Vec<i64>]) -> Result<()> {
    let mut w = ctx.writer(output)?;
    writeln!(w, "# {}", serde_json::to_string(&header)?)?;
    writeln!(w, "sample,k,x")?;
    for (i, p) in paths.iter().enumerate() {
        for (k, x) in p.iter().enumerate() {
            writeln!(w, "{i},{k},{x}")?;
        }
    }
    w.flush()?;
    Ok(())
}

fn run_walk(ctx: &Ctx, cmd: WalkCmd) -> Result<i32> {
    match cmd {
        WalkCmd::Simulate { env, start, steps, n, sigma, output } => {
            let env = load_env(&env)?;
            let path = walk::simulate(&env, start, steps, ctx.seed)?;
            let mut w = ctx.writer(output.as_ref())?;
            path.write_csv(&mut w, n.unwrap_or(steps.max(1)), sigma)?;
            w.flush()?;
        }
        WalkCmd::Survival { env, n, window, table, output } => {
            let env = load_env(&env)?;
            let s = match window {
                Some(w) => walk::survival_probability(&env, n, w)?,
                None => walk::survival_auto(&env, n)?,
            };
            println!("{}", s.value());
            if let Some(p) = table {
                s.table.write_to(BufWriter::new(File::create(ctx.resolve(&p))?))?;
            }
            if output.is_some() {
                let v = json!({
                    "env_id": env.env_id(), "n": n, "window": s.table.window(),
                    "value": s.value(), "lower": s.lower, "upper": s.upper,
                });
                ctx.emit_json(&v, output.as_ref())?;
            }
        }
        WalkCmd::SampleMeander { env, n, m, output } => {
            let env = load_env(&env)?;
            let s = walk::survival_auto(&env, n)?;
            let kernel = env.kernel();
            let sampler = MeanderSampler::new(&kernel, &s.table)?;
            let paths = (0..m)
                .into_par_iter()
                .map(|i| sampler.sample(&mut rng::stream(ctx.seed, i as u64)))
                .collect::<Result<Vec<_>>>()?;
            let header = json!({ "env_id": env.env_id(), "seed": ctx.seed, "n": n, "survival": s.value() });
            write_paths(ctx, output.as_ref(), header, &paths)?;
        }
        WalkCmd::SampleCrossing { env, level, m, output } => {
            let env = load_env(&env)?;
            let table = walk::harmonic_hit(&env, level)?;
            let kernel = env.kernel();
            let sampler = CrossingSampler::new(&kernel, &table)?;
            let paths = (0..m)
                .into_par_iter()
                .map(|i| sampler.sample(&mut rng::stream(ctx.seed, i as u64)))
                .collect::<Result<Vec<_>>>()?;
            let header = json!({
                "env_id": env.env_id(), "seed": ctx.seed, "N": level,
                "crossing_probability": table.crossing_probability,
            });
            write_paths(ctx, output.as_ref(), header, &paths)?;
        }
        WalkCmd::Sigma { env, n_fit, runs, output } => {
            let env = load_env(&env)?;
            let est = walk::estimate_sigma(&env, n_fit, runs, ctx.seed)?;
            ctx.emit_json(&json!({ "env_id": env.env_id(), "seed": ctx.seed, "estimate": est }), output.as_ref())?;
        }
    }
    Ok(EXIT_OK)
}

fn run_net(ctx: &Ctx, cmd: NetCmd) -> Result<i32> {
    let (args, value, code) = match cmd {
        NetCmd::Reduce { args, kind } => {
            let env = load_env(&args.env)?;
            let red = network::reduce(&env, args.level, kind)?;
            (args, serde_json::to_value(&red)?, EXIT_OK)
        }
        NetCmd::Ceff(args) => {
            let env = load_env(&args.env)?;
            let red = network::reduce(&env, args.level, ReductionKind::Omega3)?;
            let v = json!({
                "N": args.level,
                "c_eff": network::effective_conductance(&red)?,
                "escape_conductance_0": network::escape_conductance(&red, 0)?,
                "series_conductance": network::series_conductance(&red)?,
            });
            (args, v, EXIT_OK)
        }
        NetCmd::Hitprob(args) => {
            let env = load_env(&args.env)?;
            let p = network::crossing_probability_exact(&env, args.level)?;
            let v = json!({ "N": args.level, "value": p.value(), "routes": p, "max_discrepancy": p.max_discrepancy() });
            (args, v, EXIT_OK)
        }
        NetCmd::Exittime(args) => {
            let env = load_env(&args.env)?;
            let red = network::reduce(&env, args.level, ReductionKind::Omega3)?;
            let v = json!({
                "N": args.level,
                "expected_exit_time": network::expected_exit_time_exact(&env, args.level)?,
                "reduced_exit_time": network::reduced_exit_time_exact(&red)?,
                "exit_distribution": network::exit_distribution(&env, args.level)?,
            });
            (args, v, EXIT_OK)
        }
        NetCmd::LittleBound(args) => {
            let env = load_env(&args.env)?;
            let red = network::reduce(&env, args.level, ReductionKind::Omega3)?;
            let bound = network::little_bound(&red)?;
            let exact = network::expected_exit_time_exact(&env, args.level)?;
            let reduced = network::reduced_exit_time_exact(&red)?;
            let holds = reduced <= bound && exact <= bound;
            let v = json!({
                "N": args.level, "little_bound": bound, "expected_exit_time": exact,
                "reduced_exit_time": reduced, "holds": holds,
            });
            (args, v, if holds { EXIT_OK } else { EXIT_FAIL })
        }
        NetCmd::Reversibility { args, max_particles } => {
            let env = load_env(&args.env)?;
            let red = network::reduce(&env, args.level, ReductionKind::Omega3)?;
            let spec = network::ParticleSystemSpec::from_reduction(&red)?;
            let rep = network::check_reversibility(&spec, max_particles, ctx.thresholds.reversibility)?;
            let code = if rep.pass { EXIT_OK } else { EXIT_FAIL };
            (args, serde_json::to_value(&rep)?, code)
        }
        NetCmd::Queue { args, horizon } => {
            let env = load_env(&args.env)?;
            let red = network::reduce(&env, args.level, ReductionKind::Omega3)?;
            let spec = network::ParticleSystemSpec::from_reduction(&red)?;
            let rep = network::simulate_queue(&spec, horizon, ctx.seed)?;
            let v = json!({ "seed": ctx.seed, "report": rep, "reduced_exit_time": network::reduced_exit_time_exact(&red)? });
            (args, v, EXIT_OK)
        }
    };
    ctx.emit_json(&value, args.output.as_ref())?;
    Ok(code)
}

fn run_continuum(ctx: &Ctx, cmd: ContinuumCmd) -> Result<i32> {
    let seed = ctx.seed;
    match cmd {
        ContinuumCmd::Meander { dt, m, output } => {
            let paths = (0..m)
                .into_par_iter()
                .map(|i| continuum::sample_meander(dt, rng::derive_seed(seed, i as u64)).map(|s| s.path))
                .collect::<Result<Vec<_>>>()?;
            write_continuum(ctx, output.as_ref(), json!({ "kind": "meander", "dt": dt, "seed": seed }), &paths)?;
        }
        ContinuumCmd::Bessel { dt, horizon, m, output } => {
            let paths = (0..m)
                .into_par_iter()
                .map(|i| continuum::sample_bessel3(dt, horizon, rng::derive_seed(seed, i as u64)))
                .collect::<Result<Vec<_>>>()?;
            write_continuum(ctx, output.as_ref(), json!({ "kind": "bessel3", "dt": dt, "seed": seed }), &paths)?;
        }
        ContinuumCmd::Rho1 { dt, sigma, m, output } => {
            let rho = (0..m)
                .into_par_iter()
                .map(|i| continuum::sample_rho1(dt, sigma, rng::derive_seed(seed, i as u64), false).map(|s| s.rho))
                .collect::<Result<Vec<_>>>()?;
            let mut w = ctx.writer(output.as_ref())?;
            writeln!(w, "# {}", json!({ "dt": dt, "sigma": sigma, "seed": seed }))?;
            writeln!(w, "sample,rho")?;
            for (i, r) in rho.iter().enumerate() {
                writeln!(w, "{i},{r}")?;
            }
            w.flush()?;
        }
        ContinuumCmd::Qdensity { t, y_max, points, output } => {
            let rows = continuum::q_table(t, y_max, points)?;
            let mut w = ctx.writer(output.as_ref())?;
            writeln!(w, "y,q")?;
            for (y, q) in rows {
                writeln!(w, "{y},{q}")?;
            }
            w.flush()?;
        }
    }
    Ok(EXIT_OK)
}

fn write_continuum(ctx: &Ctx, output: Option<&PathBuf>, header: Value, paths: &[continuum::ContinuumPath]) -> Result<()> {
    let mut w = ctx.writer(output)?;
    writeln!(w, "# {header}")?;
    writeln!(w, "sample,t,value")?;
    for (i, p) in paths.iter().enumerate() {
        for (k, v) in p.values.iter().enumerate() {
            writeln!(w, "{i},{},{v}", p.time(k))?;
        }
    }
    w.flush()?;
    Ok(())
}

fn publish(ctx: &Ctx, rep: &VerificationReport, out: &VerifyOut) -> Result<i32> {
    print!("{}", rep.summary());
    if let Some(p) = &out.out {
        let mut w = ctx.writer(Some(p))?;
        writeln!(w, "{}", rep.to_json()?)?;
        w.flush()?;
    }
    if let Some(dir) = &out.plots {
        let dir = ctx.resolve(dir);
        std::fs::create_dir_all(&dir)?;
        let mut names: Vec<&(String, Vec<(f64, f64, f64)>)> = rep.plots.iter().collect();
        names.sort_by(|a, b| a.0.cmp(&b.0));
        for (name, rows) in names {
            stats::write_plot_csv(BufWriter::new(File::create(dir.join(format!("{name}.csv")))?), rows)?;
        }
    }
    Ok(if rep.pass { EXIT_OK } else { EXIT_FAIL })
}

fn run_verify(ctx: &Ctx, cmd: VerifyCmd) -> Result<i32> {
    let th = &ctx.thresholds;
    let seed = ctx.seed;
    let (rep, out) = match cmd {
        VerifyCmd::Rayleigh { args, out } => {
            let env = load_env(&args.env)?;
            (stats::verify_rayleigh(&env, args.n, args.m, args.sigma, seed, th)?, out)
        }
        VerifyCmd::Marginal { args, t, out } => {
            let env = load_env(&args.env)?;
            (stats::verify_marginal(&env, args.n, t, args.m, args.sigma, seed, th)?, out)
        }
        VerifyCmd::Ratio { env, n, t, out } => (stats::verify_ratio(&load_env(&env)?, n, &t, th)?, out),
        VerifyCmd::Overshoot { env, levels, allowance, m, out } => {
            (stats::verify_overshoot(&load_env(&env)?, &levels, allowance, m, seed, th)?, out)
        }
        VerifyCmd::Lemmas { env, levels, out } => (stats::verify_crossing_lemmas(&load_env(&env)?, &levels, th)?, out),
        VerifyCmd::Corollary { env, n, m, sigma, rho_dt, out } => {
            (stats::verify_corollary(&load_env(&env)?, n, m, sigma, rho_dt, seed, th)?, out)
        }
        VerifyCmd::Tightness { env, n, t, h, m, sigma, out } => {
            (stats::verify_tightness_probe(&load_env(&env)?, &n, t, &h, m, sigma, seed, th)?, out)
        }
        VerifyCmd::Particles { env, level, max_particles, horizon, out } => {
            (stats::verify_particles(&load_env(&env)?, level, max_particles, horizon, seed, th)?, out)
        }
        VerifyCmd::Continuum { m, dt, out } => (stats::verify_continuum(m, dt, seed, th)?, out),
        VerifyCmd::All { env, n, m, out } => {
            let mut suite = ctx.suite.clone();
            suite.thresholds = th.clone();
            if let Some(n) = n {
                suite.n = n;
            }
            if let Some(m) = m {
                suite.m = m;
            }
            (stats::verify_all(&load_env(&env)?, &suite, seed)?, out)
        }
    };
    publish(ctx, &rep, &out)
}
