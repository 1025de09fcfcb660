use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use uniapprox::certify::slope_fit;
use uniapprox::lift::tensor_approx;
use uniapprox::ridge2d::{certify_riemann, profile_by_name, radial_f, RidgeProfile};
use uniapprox::separation::{least_squares_baseline, one_layer_lower_bound, ridge_directions, vanishing_residual};
use uniapprox::wedge::{compile_two_layer, wedge_identity_residual, WedgeFunction};
use uniapprox::{Activation, Error, Network};

#[derive(Parser, Debug)]
#[command(name = "uniapprox", version, about = "Certified neural-network approximation on the whole space")]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Worker thread cap (falls back to UNIAPPROX_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Network utilities.
    #[command(subcommand)]
    Net(NetCmd),
    /// Ridge-sum approximants in the plane.
    #[command(subcommand)]
    Ridge(RidgeCmd),
    /// Lifted approximants of tensor bumps.
    #[command(subcommand)]
    Lift(LiftCmd),
    /// Wedge functions and the two-layer compiler.
    #[command(subcommand)]
    Wedge(WedgeCmd),
    /// One-layer separation and the vanishing identity.
    #[command(subcommand)]
    Sep(SepCmd),
    /// Run a command described by a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum NetCmd {
    /// Evaluate a serialized network at one point.
    Eval {
        #[arg(long)]
        model: PathBuf,
        /// Comma-separated coordinates.
        #[arg(long)]
        point: String,
    },
}

#[derive(Subcommand, Debug)]
enum RidgeCmd {
    /// Certified sup error of the Riemann approximants for N = 2^m.
    Converge {
        #[arg(long, default_value = "standard")]
        profile: String,
        #[arg(long, default_value_t = 4)]
        m_min: u32,
        #[arg(long, default_value_t = 9)]
        m_max: u32,
        #[command(flatten)]
        out: Out,
    },
    /// |f| along a radius grid with the fitted log-log slope.
    Decay {
        #[arg(long, default_value = "standard")]
        profile: String,
        /// lo:hi:log or lo:hi:log:count
        #[arg(long, default_value = "10:1000:log")]
        radii: String,
        #[command(flatten)]
        out: Out,
    },
}

#[derive(Subcommand, Debug)]
enum LiftCmd {
    /// Approximate a tensor product of ridge profiles.
    Tensor {
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value = "standard")]
        profile: String,
        #[arg(long, default_value = "relu")]
        activation: String,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long)]
        emit: Option<PathBuf>,
        #[command(flatten)]
        out: Out,
    },
}

#[derive(Subcommand, Debug)]
enum WedgeCmd {
    /// Compile a wedge function into a two-layer network.
    Compile {
        /// Wedge JSON file, or "mollified-and".
        #[arg(long = "in")]
        input: String,
        #[arg(long, default_value = "tanh")]
        activation: String,
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
        #[arg(long)]
        emit: Option<PathBuf>,
        #[command(flatten)]
        out: Out,
    },
    /// Check the inclusion-exclusion identity at random points.
    Verify {
        #[arg(long = "in")]
        input: String,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        /// Sampling box half-width.
        #[arg(long, default_value_t = 4.0)]
        radius: f64,
        #[command(flatten)]
        out: Out,
    },
}

#[derive(Subcommand, Debug)]
enum SepCmd {
    /// Certified lower bound on the distance from a one-layer candidate to the target.
    Certify {
        /// Network JSON file, or "baseline".
        #[arg(long)]
        candidate: String,
        #[arg(long, default_value = "mollified-and")]
        target: String,
        /// Units in the least-squares baseline.
        #[arg(long, default_value_t = 32)]
        units: usize,
        /// Number of probed directions.
        #[arg(long, default_value_t = 256)]
        directions: usize,
        /// Report path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Vanishing identity residuals for a one-layer model.
    Vanish {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[command(flatten)]
        out: Out,
    },
}

#[derive(Args, Debug, Clone)]
struct Out {
    /// CSV destination; "csv", "-" or absent mean stdout.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Debug)]
enum CliError {
    Lib(Error),
    Config(String),
    Io(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

struct Csv {
    body: String,
}

impl Csv {
    fn new(title: &str, seed: u64, header: &str) -> Csv {
        let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        Csv { body: format!("# uniapprox {title} seed={seed} generated={stamp}\n{header}\n") }
    }

    fn row(&mut self, cells: &[String]) {
        let _ = writeln!(self.body, "{}", cells.join(","));
    }

    fn finish(self, out: &Out) -> CliResult<()> {
        match out.out.as_deref() {
            None | Some("csv") | Some("-") => {
                print!("{}", self.body);
                Ok(())
            }
            Some(path) => write_file(Path::new(path), &self.body),
        }
    }
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn read_file(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

fn activation(arg: &str) -> CliResult<Activation> {
    let s = arg.trim();
    if s.starts_with('{') {
        return serde_json::from_str(s).map_err(|e| CliError::Config(format!("activation: {e}")));
    }
    if s.ends_with(".json") {
        let text = read_file(Path::new(s))?;
        return serde_json::from_str(&text).map_err(|e| CliError::Config(format!("activation {s}: {e}")));
    }
    Activation::from_name(s).map_err(|e| CliError::Config(format!("activation: {e}")))
}

fn profile(name: &str) -> CliResult<RidgeProfile> {
    profile_by_name(name).map_err(|e| CliError::Config(format!("profile: {e}")))
}

fn wedge_input(input: &str) -> CliResult<WedgeFunction> {
    if input == "mollified-and" {
        return Ok(WedgeFunction::mollified_and());
    }
    Ok(WedgeFunction::from_json(&read_file(Path::new(input))?)?)
}

fn load_network(path: &Path) -> CliResult<Network> {
    Ok(Network::from_json(&read_file(path)?)?)
}

fn cert_path(model: &Path) -> PathBuf {
    let stem = model.file_stem().and_then(|s| s.to_str()).unwrap_or("model");
    model.with_file_name(format!("{stem}.cert.json"))
}

fn parse_radii(arg: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = arg.split(':').collect();
    let bad = || CliError::Config(format!("radii: expected lo:hi:log[:count], got {arg:?}"));
    if parts.len() < 3 || parts[2] != "log" {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let count: usize = match parts.get(3) {
        Some(c) => c.parse().map_err(|_| bad())?,
        None => 13,
    };
    if !(lo > 0.0 && hi > lo && count >= 2) {
        return Err(bad());
    }
    Ok((0..count).map(|i| lo * (hi / lo).powf(i as f64 / (count - 1) as f64)).collect())
}

fn run(cli: Cli) -> CliResult<()> {
    let seed = cli.seed;
    match cli.command {
        Command::Net(NetCmd::Eval { model, point }) => {
            let net = load_network(&model)?;
            let x: Vec<f64> = point
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| CliError::Config(format!("point: cannot parse {point:?}")))?;
            println!("{}", num(net.evaluate(&x)?));
        }
        Command::Ridge(RidgeCmd::Converge { profile: name, m_min, m_max, out }) => {
            let g = profile(&name)?;
            if m_min > m_max || m_max > 20 {
                return Err(CliError::Config(format!("m range {m_min}..{m_max} is invalid")));
            }
            let mut csv = Csv::new("ridge converge", seed, "m,certified_sup_error");
            for m in m_min..=m_max {
                let c = certify_riemann(&g, 1 << m)?;
                csv.row(&[m.to_string(), num(c.total)]);
            }
            csv.finish(&out)?;
        }
        Command::Ridge(RidgeCmd::Decay { profile: name, radii, out }) => {
            let g = profile(&name)?;
            let rs = parse_radii(&radii)?;
            let vals: Vec<(f64, f64)> = rs.iter().map(|&r| Ok((r, radial_f(&g, r)?.abs()))).collect::<CliResult<_>>()?;
            let logs: Vec<(f64, f64)> = vals.iter().map(|(r, v)| (r.ln(), v.ln())).collect();
            let slope = slope_fit(&logs)?.slope;
            let mut csv = Csv::new("ridge decay", seed, "R,absf,fitted_slope");
            for (r, v) in vals {
                csv.row(&[num(r), num(v), num(slope)]);
            }
            csv.finish(&out)?;
        }
        Command::Lift(LiftCmd::Tensor { n, profile: name, activation: act, eps, emit, out }) => {
            let phi = activation(&act)?;
            let g = profile(&name)?;
            let a = tensor_approx(&vec![g; n], &phi, eps)?;
            if let Some(path) = &emit {
                write_file(path, &a.network.to_json())?;
                write_file(&cert_path(path), &a.certificate.to_json())?;
            }
            let mut csv = Csv::new("lift tensor", seed, "n,activation,eps,units,certified_sup_error");
            csv.row(&[n.to_string(), phi.name(), num(eps), a.network.unit_count().to_string(), num(a.certificate.total)]);
            csv.finish(&out)?;
        }
        Command::Wedge(WedgeCmd::Compile { input, activation: act, eps, emit, out }) => {
            let w = wedge_input(&input)?;
            let phi = activation(&act)?;
            let c = compile_two_layer(&w, &phi, eps)?;
            if let Some(path) = &emit {
                write_file(path, &c.network.to_json())?;
                write_file(&cert_path(path), &c.certificate.to_json())?;
            }
            let mut csv = Csv::new("wedge compile", seed, "activation,eps,depth,units,certified_sup_error");
            csv.row(&[
                phi.name(),
                num(eps),
                c.network.depth().to_string(),
                c.network.unit_count().to_string(),
                num(c.bound),
            ]);
            csv.finish(&out)?;
        }
        Command::Wedge(WedgeCmd::Verify { input, samples, radius, out }) => {
            let w = wedge_input(&input)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut worst: f64 = 0.0;
            for _ in 0..samples {
                let x: Vec<f64> = (0..w.input_dim()).map(|_| rng.gen_range(-radius..radius)).collect();
                worst = worst.max(wedge_identity_residual(&w, &x)?.abs());
            }
            let mut csv = Csv::new("wedge verify", seed, "samples,max_identity_residual");
            csv.row(&[samples.to_string(), num(worst)]);
            csv.finish(&out)?;
        }
        Command::Sep(SepCmd::Certify { candidate, target, units, directions, out }) => {
            if target != "mollified-and" {
                return Err(CliError::Config(format!("target: unknown target {target:?}")));
            }
            let net = if candidate == "baseline" {
                least_squares_baseline(units, seed)
            } else {
                load_network(Path::new(&candidate))?
            };
            let report = one_layer_lower_bound(&net, directions)?;
            let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Io(e.to_string()))?;
            match out {
                Some(path) => write_file(&path, &text)?,
                None => println!("{text}"),
            }
            eprintln!("certified lower bound {:.6}", report.bound);
        }
        Command::Sep(SepCmd::Vanish { model, trials, out }) => {
            let net = load_network(&model)?;
            let dirs = ridge_directions(&net)?;
            let n = net.input_dim();
            let f = |x: &[f64]| net.eval_unchecked(x);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut csv = Csv::new("sep vanish", seed, "trial,t,residual,relative_residual");
            for k in 0..trials {
                let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
                let t = rng.gen_range(-5.0..5.0);
                let v = vanishing_residual(&f, &dirs, &x, t)?;
                csv.row(&[k.to_string(), num(t), num(v.residual), num(v.relative())]);
            }
            csv.finish(&out)?;
        }
        Command::Run { config } => {
            let argv = config_argv(&read_file(&config)?, seed)?;
            let cli = Cli::try_parse_from(&argv).map_err(|e| CliError::Config(e.to_string()))?;
            if matches!(cli.command, Command::Run { .. }) {
                return Err(CliError::Config("command: nested run is not allowed".into()));
            }
            return run(cli);
        }
    }
    Ok(())
}

/// Flattens `command = "ridge converge"` plus scalar keys into an argument vector.
fn config_argv(text: &str, seed: u64) -> CliResult<Vec<String>> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
    let command = table
        .get("command")
        .and_then(|v| v.as_str())
        .ok_or_else(|| CliError::Config("field `command`: missing or not a string".into()))?;
    let mut argv = vec!["uniapprox".to_string()];
    if !table.contains_key("seed") {
        argv.push("--seed".into());
        argv.push(seed.to_string());
    }
    argv.extend(command.split_whitespace().map(String::from));
    for (key, value) in &table {
        if key == "command" {
            continue;
        }
        let v = match value {
            toml::Value::String(s) => s.clone(),
            toml::Value::Integer(i) => i.to_string(),
            toml::Value::Float(f) => f.to_string(),
            toml::Value::Boolean(b) => b.to_string(),
            _ => return Err(CliError::Config(format!("field `{key}`: expected a scalar"))),
        };
        argv.push(format!("--{}", key.replace('_', "-")));
        argv.push(v);
    }
    Ok(argv)
}

fn configure_threads(flag: Option<usize>) -> CliResult<()> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var("UNIAPPROX_THREADS") {
            Ok(v) => Some(v.trim().parse().map_err(|_| CliError::Config(format!("UNIAPPROX_THREADS: bad value {v:?}")))?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("threads: {e}")))?;
    }
    Ok(())
}

/// 2 for "built but ε missed", 1 for everything else.
fn exit_code(e: &CliError) -> u8 {
    match e {
        CliError::Lib(Error::TargetNotMet { .. }) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads(cli.threads).and_then(|_| run(cli));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
