use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use stableport::correlation::Centering;
use stableport::experiments::{run_experiment, ExperimentFile, QUANTILE_PROBS};
use stableport::io::{format_json_lines, format_table, ingest, Column, SeriesFile, Transform};
use stableport::models::{default_burn_in, diagnostic_projection, ArModel, ArmaModel, FitMethod};
use stableport::montecarlo::{
    asymptotic_test_diagnostic, asymptotic_test_randomness, mc_test_diagnostic, mc_test_randomness,
    McConfig,
};
use stableport::portmanteau::{
    simulate_reference, PMethod, PortmanteauReport, ReferenceKind, Statistic, TestKind,
    DEFAULT_SIM_COUNT,
};
use stableport::rng::rng_from_seed;
use stableport::stable::{estimate_mcculloch, sample_stable, StableParams};
use stableport::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_COMPUTE: u8 = 3;

#[derive(Parser)]
#[command(name = "stableport", version, about = "Portmanteau tests for heavy-tailed time series")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Master seed; a generated seed is printed to stderr when omitted
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte-Carlo replications
    #[arg(long = "B", global = true, default_value_t = 1000)]
    b: usize,
    /// Comma-separated lags
    #[arg(long, global = true, value_delimiter = ',', default_value = "5,10,20")]
    lags: Vec<usize>,
    #[arg(long, global = true, value_enum, default_value_t = StatArg::Dhat)]
    stat: StatArg,
    /// Stability index; overrides the estimate in tests
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// p-value method
    #[arg(long, global = true, value_enum, default_value_t = MethodArg::Mc)]
    method: MethodArg,
    /// Draws for simulated limit distributions
    #[arg(long, global = true, default_value_t = DEFAULT_SIM_COUNT)]
    sims: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum StatArg {
    Qbp,
    Dhat,
    Qlb,
}

impl From<StatArg> for Statistic {
    fn from(s: StatArg) -> Self {
        match s {
            StatArg::Qbp => Statistic::QBp,
            StatArg::Dhat => Statistic::DHat,
            StatArg::Qlb => Statistic::QLb,
        }
    }
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Table,
    JsonLines,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Mc,
    Asymptotic,
    Chi2,
}

#[derive(Clone, Copy, ValueEnum)]
enum FitArg {
    Burg,
    Ls,
    Css,
}

impl From<FitArg> for FitMethod {
    fn from(f: FitArg) -> Self {
        match f {
            FitArg::Burg => FitMethod::Burg,
            FitArg::Ls => FitMethod::LeastSquares,
            FitArg::Css => FitMethod::Css,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CenteringArg {
    Auto,
    Raw,
    Mean,
}

#[derive(Args)]
struct Input {
    /// Delimited text file, or `-` for stdin
    file: PathBuf,
    /// Column index (0-based) or header name
    #[arg(long, default_value = "0")]
    column: String,
    /// Test log returns of the column instead of the raw values
    #[arg(long)]
    log_returns: bool,
}

impl Input {
    fn load(&self) -> Result<Vec<f64>, Error> {
        ingest(&SeriesFile {
            path: self.file.clone(),
            column: self.column.parse::<Column>()?,
            transform: if self.log_returns {
                Transform::LogReturns
            } else {
                Transform::None
            },
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a stable series, optionally filtered through an ARMA model
    Simulate {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        beta: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        mu: f64,
        /// AR coefficients
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        phi: Vec<f64>,
        /// MA coefficients, sign convention 1 - theta_1 B - ...
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        theta: Vec<f64>,
        /// Write to a file instead of stdout
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Quantile estimate of the stability index and skewness
    EstimateStable {
        #[command(flatten)]
        input: Input,
    },
    /// Randomness test of a series
    TestRandomness {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum, default_value_t = CenteringArg::Auto)]
        centering: CenteringArg,
    },
    /// Diagnostic check of a fitted AR or ARMA model
    Diagnose {
        #[command(flatten)]
        input: Input,
        /// Model order as p or p,q
        #[arg(long, value_delimiter = ',', num_args = 1..=2, required = true)]
        order: Vec<usize>,
        #[arg(long, value_enum, default_value_t = FitArg::Burg)]
        fit: FitArg,
    },
    /// Run a simulation study from a TOML config
    Experiment {
        config: PathBuf,
        /// Output directory; overrides the config's `output`
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Quantiles of a simulated limit distribution
    Reference {
        /// AR coefficients of a fitted model; selects the diagnostic form
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        phi: Vec<f64>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: usage: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Lib(e)) => {
            let (code, family) = if e.is_data_error() {
                (EXIT_DATA, "data")
            } else {
                (EXIT_COMPUTE, "computation")
            };
            eprintln!("error: {family}: {}: {}", e.kind(), e.to_string().replace('\n', " "));
            ExitCode::from(code)
        }
        Err(Failure::Output(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(Failure::Output(e)) => {
            eprintln!("error: data: io: {e}");
            ExitCode::from(EXIT_DATA)
        }
    }
}

enum Failure {
    Usage(String),
    Lib(Error),
    Output(io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Output(e)
    }
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let seed = rand::random::<u64>();
        eprintln!("seed: {seed}");
        seed
    })
}

fn require_alpha(global: &Global, command: &str) -> Result<f64, Failure> {
    global
        .alpha
        .ok_or_else(|| Failure::Usage(format!("{command} requires --alpha")))
}

fn mc_config(global: &Global, seed: u64) -> McConfig {
    McConfig {
        replications: global.b,
        master_seed: seed,
        statistic: global.stat.into(),
        lags: global.lags.clone(),
        alpha_override: global.alpha,
        ..McConfig::default()
    }
}

fn emit_reports(reports: &[PortmanteauReport], format: Format) -> Result<(), Failure> {
    let text = match format {
        Format::Table => format_table(reports),
        Format::JsonLines => format_json_lines(reports),
    };
    io::stdout().lock().write_all(text.as_bytes())?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let g = &cli.global;
    match &cli.command {
        Command::Simulate {
            n,
            sigma,
            beta,
            mu,
            phi,
            theta,
            output,
        } => {
            let alpha = require_alpha(g, "simulate")?;
            let seed = resolve_seed(g.seed);
            let params = StableParams::new(alpha, *sigma, *beta, *mu)?;
            let model = ArmaModel::new(phi.clone(), theta.clone())?;
            let burn_in = if phi.is_empty() && theta.is_empty() {
                0
            } else {
                default_burn_in(phi.len(), theta.len())
            };
            let z = sample_stable(&params, n + burn_in, &mut rng_from_seed(seed));
            let x = stableport::models::simulate_arma(&model, &z, burn_in)?;
            let sink: Box<dyn Write> = match output {
                Some(path) => Box::new(File::create(path).map_err(|source| Error::Io {
                    path: path.display().to_string(),
                    source,
                })?),
                None => Box::new(io::stdout().lock()),
            };
            let mut sink = BufWriter::new(sink);
            for v in x {
                writeln!(sink, "{v}")?;
            }
            sink.flush()?;
        }
        Command::EstimateStable { input } => {
            let est = estimate_mcculloch(&input.load()?)?;
            let mut out = io::stdout().lock();
            match g.format {
                Format::JsonLines => {
                    writeln!(out, "{}", serde_json::to_string(&est).expect("estimate serializes"))?
                }
                Format::Table => {
                    writeln!(out, "alpha_hat  {:.4}", est.alpha_hat)?;
                    writeln!(out, "beta_hat   {:.4}", est.beta_hat)?;
                    writeln!(out, "nu_alpha   {:.4}", est.nu_alpha)?;
                    writeln!(out, "nu_beta    {:.4}", est.nu_beta)?;
                }
            }
        }
        Command::TestRandomness { input, centering } => {
            let series = input.load()?;
            let seed = resolve_seed(g.seed);
            let cfg = McConfig {
                centering: match centering {
                    CenteringArg::Auto => Centering::Auto,
                    CenteringArg::Raw => Centering::Raw,
                    CenteringArg::Mean => Centering::MeanCorrected,
                },
                ..mc_config(g, seed)
            };
            let reports = match g.method {
                MethodArg::Mc => mc_test_randomness(&series, &cfg)?,
                MethodArg::Asymptotic => {
                    asymptotic_test_randomness(&series, &cfg, g.sims, PMethod::SimulatedAsymptotic)?
                }
                MethodArg::Chi2 => asymptotic_test_randomness(&series, &cfg, 0, PMethod::ChiSquare)?,
            };
            emit_reports(&reports, g.format)?;
        }
        Command::Diagnose { input, order, fit } => {
            let series = input.load()?;
            let (p, q) = (order[0], order.get(1).copied().unwrap_or(0));
            let seed = resolve_seed(g.seed);
            let cfg = McConfig {
                fit_method: (*fit).into(),
                ..mc_config(g, seed)
            };
            let reports = match g.method {
                MethodArg::Mc => mc_test_diagnostic(&series, p, q, &cfg)?,
                MethodArg::Asymptotic => asymptotic_test_diagnostic(
                    &series,
                    p,
                    q,
                    &cfg,
                    g.sims,
                    PMethod::SimulatedAsymptotic,
                )?,
                MethodArg::Chi2 => asymptotic_test_diagnostic(&series, p, q, &cfg, 0, PMethod::ChiSquare)?,
            };
            emit_reports(&reports, g.format)?;
        }
        Command::Experiment { config, output } => {
            let file = ExperimentFile::load(config)?;
            let result = run_experiment(&file.config)?;
            match output.as_ref().or(file.output.as_ref()) {
                Some(dir) => {
                    let (csv, manifest) = result.write_to(dir)?;
                    eprintln!("wrote {} and {}", csv.display(), manifest.display());
                }
                None => io::stdout().lock().write_all(result.to_csv().as_bytes())?,
            }
        }
        Command::Reference { phi } => {
            let alpha = require_alpha(g, "reference")?;
            let seed = resolve_seed(g.seed);
            let test = if phi.is_empty() {
                TestKind::Randomness
            } else {
                TestKind::Diagnostic
            };
            let kind = ReferenceKind::for_test(g.stat.into(), test)?;
            let model = ArModel::new(phi.clone())?;
            let mut out = io::stdout().lock();
            if g.format == Format::Table {
                write!(out, "{:>4}", "m")?;
                for prob in QUANTILE_PROBS {
                    write!(out, " {:>10}", format!("q{}", prob * 100.0))?;
                }
                writeln!(out)?;
            }
            for &m in &g.lags {
                let projection = match test {
                    TestKind::Diagnostic => Some(diagnostic_projection(&model, m)?),
                    TestKind::Randomness => None,
                };
                let reference = simulate_reference(kind, alpha, m, projection.as_ref(), g.sims, seed)?;
                let quantiles: Vec<f64> = QUANTILE_PROBS.iter().map(|&p| reference.quantile(p)).collect();
                match g.format {
                    Format::Table => {
                        write!(out, "{m:>4}")?;
                        for q in &quantiles {
                            write!(out, " {q:>10.4}")?;
                        }
                        writeln!(out)?;
                    }
                    Format::JsonLines => {
                        let row = serde_json::json!({
                            "kind": kind,
                            "alpha": alpha,
                            "m": m,
                            "sims": g.sims,
                            "seed": seed,
                            "probs": QUANTILE_PROBS,
                            "quantiles": quantiles,
                        });
                        writeln!(out, "{row}")?;
                    }
                }
            }
        }
    }
    Ok(())
}
