use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kernel_rv::anm::{AnmConfig, EstimatorMode, PairedSample};
use kernel_rv::dsl::{evaluate, Environment, EvalPolicy, Expr, OutputKernel};
use kernel_rv::io::{self, Loaded};
use kernel_rv::reduce::reduce_random;
use kernel_rv::{
    embed_sample, mmd_sq, Bandwidth, KernelConfig, KernelKind, PointSet, Ridge, WeightedExpansion,
};
use krv_cli::pairs::{ingest_pair_file, run_pairs, write_curve_csv, write_reports_csv};
use krv_cli::suite::{synthetic_suite, write_suite};
use krv_cli::synth::{
    read_runs_csv, run_synth, summarize, write_runs_csv, write_summary_csv, InputLaw, Operation,
    SynthConfig,
};
use krv_cli::{CliError, Result};

#[derive(Parser)]
#[command(
    name = "krv",
    version,
    about = "Kernel mean embeddings of random variables"
)]
struct Cli {
    /// Base random seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Kernel for raw samples and outputs.
    #[arg(long, global = true, value_enum, default_value = "gaussian")]
    kernel: KernelArg,
    /// Gaussian bandwidth: a number or `median`.
    #[arg(long, global = true, default_value = "median")]
    sigma: Bandwidth,
    /// Polynomial kernel degree.
    #[arg(long, global = true, default_value_t = 2)]
    degree: u32,
    /// Polynomial kernel offset.
    #[arg(long, global = true, default_value_t = 1.0)]
    offset: f64,
    /// Output file (standard output when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: FormatArg,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Gaussian,
    Linear,
    Poly,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Rff,
}

#[derive(Clone, Copy, ValueEnum)]
enum OperationArg {
    Add,
    Mul,
    Div,
    Pow,
}

#[derive(Subcommand)]
enum Command {
    /// Synthetic convergence study of the three propagation estimators.
    Synth {
        #[arg(long, value_enum, default_value = "mul")]
        op: OperationArg,
        /// Sample sizes, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "10,20,30,40,50")]
        m: Vec<usize>,
        /// Per-variable sample size of the proxy embedding.
        #[arg(long, default_value_t = 100)]
        proxy: usize,
        #[arg(long, default_value_t = 30)]
        reps: usize,
        /// Reduced-set size as a fraction of m.
        #[arg(long, default_value_t = 0.4)]
        fraction: f64,
        /// Ridge of the reduced-set refit: `default` (1e-8 of the mean
        /// Gram diagonal) or a nonnegative number.
        #[arg(long, default_value = "0.01", value_parser = parse_ridge)]
        ridge: Ridge,
        #[arg(long, default_value_t = 3.0)]
        mean_x: f64,
        #[arg(long, default_value_t = 0.5)]
        var_x: f64,
        #[arg(long, default_value_t = 4.0)]
        mean_y: f64,
        #[arg(long, default_value_t = 0.5)]
        var_y: f64,
        /// Append a wall-time column (output is then not reproducible).
        #[arg(long)]
        timing: bool,
    },
    /// Mean and standard deviation of the loss per estimator and m.
    PlotData {
        /// Output of `synth`.
        #[arg(long)]
        input: PathBuf,
    },
    /// Infer the direction of every pair listed in a metadata file.
    Pairs {
        #[arg(long)]
        dir: PathBuf,
        /// CSV with columns `pair_id,ground_truth`.
        #[arg(long)]
        meta: PathBuf,
        /// Accuracy curve output; defaults to `<out stem>_curve.csv` next to `--out`.
        #[arg(long)]
        curve_out: Option<PathBuf>,
        #[command(flatten)]
        anm: AnmArgs,
    },
    /// Infer the direction of a single pair file.
    Anm {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        anm: AnmArgs,
    },
    /// Write the bundled synthetic pair suite to a directory.
    Suite {
        #[arg(long)]
        dir: PathBuf,
        /// Observations per pair.
        #[arg(long, default_value_t = 300)]
        size: usize,
    },
    /// Evaluate an expression over independent random variables.
    Eval {
        #[arg(long)]
        expr: String,
        /// Variable binding `NAME=path` to a sample or expansion file.
        #[arg(long = "var", value_parser = parse_binding)]
        vars: Vec<(String, PathBuf)>,
        /// Largest intermediate expansion; 0 disables compression.
        #[arg(long, default_value_t = 100)]
        budget: usize,
        #[arg(long, default_value = "default", value_parser = parse_ridge)]
        ridge: Ridge,
    },
    /// Compress an expansion to a random subset of its points.
    Reduce {
        #[arg(long)]
        input: PathBuf,
        /// Point count, or a fraction in (0, 1) of the input size.
        #[arg(long, value_parser = parse_target)]
        target: Target,
        #[arg(long, default_value = "default", value_parser = parse_ridge)]
        ridge: Ridge,
    },
    /// Squared RKHS distance between two samples or expansions.
    Mmd {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
    },
}

#[derive(Args)]
struct AnmArgs {
    #[arg(long, value_enum, default_value = "rff")]
    mode: ModeArg,
    /// Random Fourier features in rff mode.
    #[arg(long, default_value_t = 100)]
    features: usize,
    #[arg(long, default_value_t = 4)]
    fit_degree: usize,
    #[arg(long, default_value_t = 0.0)]
    fit_ridge: f64,
    /// Abstain when the two scores differ by less than this.
    #[arg(long, default_value_t = 0.0)]
    abstain_margin: f64,
    /// Fit on even rows and score on odd rows.
    #[arg(long)]
    split_fit: bool,
}

#[derive(Clone, Copy)]
enum Target {
    Count(usize),
    Fraction(f64),
}

fn parse_ridge(s: &str) -> std::result::Result<Ridge, String> {
    if s == "default" {
        return Ok(Ridge::Default);
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 => Ok(Ridge::Value(v)),
        _ => Err(format!(
            "`{s}` is neither `default` nor a nonnegative number"
        )),
    }
}

fn parse_target(s: &str) -> std::result::Result<Target, String> {
    if let Ok(n) = s.parse::<usize>() {
        return Ok(Target::Count(n));
    }
    match s.parse::<f64>() {
        Ok(f) if f > 0.0 && f < 1.0 => Ok(Target::Fraction(f)),
        _ => Err(format!("`{s}` is neither a count nor a fraction in (0, 1)")),
    }
}

fn parse_binding(s: &str) -> std::result::Result<(String, PathBuf), String> {
    let (name, path) = s
        .split_once('=')
        .ok_or_else(|| format!("`{s}` is not of the form NAME=path"))?;
    if name.is_empty() || path.is_empty() {
        return Err(format!("`{s}` is not of the form NAME=path"));
    }
    Ok((name.to_string(), PathBuf::from(path)))
}

impl Cli {
    fn kernel_config(&self) -> KernelConfig {
        KernelConfig {
            kernel: match self.kernel {
                KernelArg::Gaussian => KernelKind::Gaussian,
                KernelArg::Linear => KernelKind::Linear,
                KernelArg::Poly => KernelKind::Poly,
            },
            sigma: self.sigma,
            degree: self.degree,
            offset: self.offset,
        }
    }

    fn emit(&self, bytes: &[u8]) -> Result<()> {
        write_output(self.out.as_deref(), bytes)
    }
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(path) => fs::write(path, bytes).map_err(|e| CliError::io(path, e)),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| CliError::io("<stdout>", e)),
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Input(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn anm_config(args: &AnmArgs, seed: u64, sigma: Bandwidth) -> AnmConfig {
    AnmConfig {
        degree: args.fit_degree,
        fit_ridge: args.fit_ridge,
        bandwidth: sigma,
        mode: match args.mode {
            ModeArg::Exact => EstimatorMode::Exact,
            ModeArg::Rff => EstimatorMode::Rff {
                features: args.features,
            },
        },
        abstain_margin: args.abstain_margin,
        split_fit: args.split_fit,
        seed,
    }
}

fn expansion_bytes(mu: &WeightedExpansion, format: FormatArg) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    match format {
        FormatArg::Csv => io::write_expansion_csv(mu, &mut bytes)?,
        FormatArg::Json => {
            io::write_expansion_json(mu, &mut bytes)?;
            bytes.push(b'\n');
        }
    }
    Ok(bytes)
}

fn embed_loaded(loaded: Loaded, config: &KernelConfig) -> Result<WeightedExpansion> {
    match loaded {
        Loaded::Expansion(mu) => Ok(mu),
        Loaded::Sample(points) => Ok(embed_sample(&points, config.resolve(&points)?)?),
    }
}

fn run(cli: &Cli) -> Result<()> {
    let kernel = cli.kernel_config();
    match &cli.command {
        Command::Synth {
            op,
            m,
            proxy,
            reps,
            fraction,
            ridge,
            mean_x,
            var_x,
            mean_y,
            var_y,
            timing,
        } => {
            let config = SynthConfig {
                operation: match op {
                    OperationArg::Add => Operation::Add,
                    OperationArg::Mul => Operation::Mul,
                    OperationArg::Div => Operation::Div,
                    OperationArg::Pow => Operation::Pow,
                },
                inputs: InputLaw {
                    mean_x: *mean_x,
                    var_x: *var_x,
                    mean_y: *mean_y,
                    var_y: *var_y,
                },
                m_values: m.clone(),
                proxy_size: *proxy,
                repetitions: *reps,
                reduced_fraction: *fraction,
                ridge: *ridge,
                seed: cli.seed,
            };
            let records = run_synth(&config)?;
            let bytes = match cli.format {
                FormatArg::Csv => {
                    let mut bytes = Vec::new();
                    write_runs_csv(&records, &mut bytes, *timing)?;
                    bytes
                }
                FormatArg::Json => to_json(&records)?,
            };
            cli.emit(&bytes)
        }
        Command::PlotData { input } => {
            let file = fs::File::open(input).map_err(|e| CliError::io(input, e))?;
            let summary = summarize(&read_runs_csv(file)?);
            let bytes = match cli.format {
                FormatArg::Csv => {
                    let mut bytes = Vec::new();
                    write_summary_csv(&summary, &mut bytes)?;
                    bytes
                }
                FormatArg::Json => to_json(&summary)?,
            };
            cli.emit(&bytes)
        }
        Command::Pairs {
            dir,
            meta,
            curve_out,
            anm,
        } => {
            let outcome = run_pairs(dir, meta, &anm_config(anm, cli.seed, cli.sigma))?;
            let mut curve = Vec::new();
            write_curve_csv(&outcome.curve, &mut curve)?;
            match cli.format {
                FormatArg::Csv => {
                    let mut bytes = Vec::new();
                    write_reports_csv(&outcome.reports, &mut bytes)?;
                    cli.emit(&bytes)?;
                }
                FormatArg::Json => cli.emit(&to_json(&outcome.reports)?)?,
            }
            let curve_path = curve_out.clone().or_else(|| {
                cli.out.as_ref().map(|out| {
                    let stem = out
                        .file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_default();
                    out.with_file_name(format!("{stem}_curve.csv"))
                })
            });
            match curve_path {
                Some(path) => write_output(Some(&path), &curve),
                None => Ok(()),
            }
        }
        Command::Anm { input, anm } => {
            let sample: PairedSample = ingest_pair_file(input)?;
            let report = kernel_rv::infer_pair(&sample, &anm_config(anm, cli.seed, cli.sigma))?;
            match cli.format {
                FormatArg::Json => cli.emit(&to_json(&report)?),
                FormatArg::Csv => {
                    let mut bytes = Vec::new();
                    write_reports_csv(&[report], &mut bytes)?;
                    cli.emit(&bytes)
                }
            }
        }
        Command::Suite { dir, size } => write_suite(dir, &synthetic_suite(cli.seed, *size)?),
        Command::Eval {
            expr,
            vars,
            budget,
            ridge,
        } => {
            let expr: Expr = expr.parse()?;
            let mut env = Environment::new();
            for (name, path) in vars {
                env.insert(name.clone(), embed_loaded(io::load(path)?, &kernel)?);
            }
            let output_kernel = match (kernel.kernel, kernel.sigma) {
                (KernelKind::Gaussian, Bandwidth::Rule(_)) => OutputKernel::Median,
                _ => OutputKernel::Fixed(kernel.resolve(&PointSet::empty(1))?),
            };
            let policy = EvalPolicy {
                budget: (*budget > 0).then_some(*budget),
                output_kernel,
                ridge: *ridge,
                seed: cli.seed,
            };
            cli.emit(&expansion_bytes(
                &evaluate(&expr, &env, &policy)?,
                cli.format,
            )?)
        }
        Command::Reduce {
            input,
            target,
            ridge,
        } => {
            let mu = embed_loaded(io::load(input)?, &kernel)?;
            let count = match *target {
                Target::Count(n) => n,
                Target::Fraction(f) => ((f * mu.len() as f64).ceil() as usize).max(1),
            };
            let result = reduce_random(&mu, count, *ridge, cli.seed)?;
            eprintln!(
                "kept {} of {} points, squared error {:e}, solve {:?}",
                result.reduced.len(),
                mu.len(),
                result.achieved_error_sq,
                result.solve_path
            );
            match cli.format {
                FormatArg::Csv => cli.emit(&expansion_bytes(&result.reduced, FormatArg::Csv)?),
                FormatArg::Json => cli.emit(&to_json(&result)?),
            }
        }
        Command::Mmd { left, right } => {
            let (left, right) = (io::load(left)?, io::load(right)?);
            // a raw sample takes the other side's kernel, or both share one
            // resolved on their union
            let sample_spec = match (&left, &right) {
                (Loaded::Expansion(mu), _) | (_, Loaded::Expansion(mu)) => Some(*mu.spec()),
                (Loaded::Sample(a), Loaded::Sample(b)) => {
                    let mut union: Vec<&[f64]> = a.iter().collect();
                    union.extend(b.iter());
                    Some(kernel.resolve(&PointSet::from_rows(&union)?)?)
                }
            };
            let embed = |l: Loaded| -> Result<WeightedExpansion> {
                match l {
                    Loaded::Expansion(mu) => Ok(mu),
                    Loaded::Sample(p) => Ok(embed_sample(
                        &p,
                        sample_spec.expect("raw input has a kernel"),
                    )?),
                }
            };
            let value = mmd_sq(&embed(left)?, &embed(right)?)?;
            let bytes = match cli.format {
                FormatArg::Csv => format!("mmd_sq\n{}\n", io::format_float(value)).into_bytes(),
                FormatArg::Json => to_json(&serde_json::json!({ "mmd_sq": value }))?,
            };
            cli.emit(&bytes)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
