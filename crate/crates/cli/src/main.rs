use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use randpur::suites::{run_suite, summary_rows, ExperimentRecord, Suite, SuiteConfig, RECORD_FORMAT, VERSION};
use randpur::tomography::SamplerMethod;
use randpur::Error;
use serde_json::{Map, Value};

const EXIT_CRITERIA: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_BUDGET: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "randpur", version = version_string(), about = "Random purification channel verification suites")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

const fn version_string() -> &'static str {
    concat!(env!("CARGO_PKG_VERSION"), " (record format 1)")
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one verification suite.
    Run(RunArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SuiteArg {
    Algebra,
    Purify,
    Fermion,
    Tomo,
    Test,
    LowerBound,
    Boson,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Algebra => Suite::Algebra,
            SuiteArg::Purify => Suite::Purify,
            SuiteArg::Fermion => Suite::Fermion,
            SuiteArg::Tomo => Suite::Tomo,
            SuiteArg::Test => Suite::Test,
            SuiteArg::LowerBound => Suite::LowerBound,
            SuiteArg::Boson => Suite::Boson,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SamplerArg {
    Rejection,
    Metropolis,
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    suite: SuiteArg,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    trials: Option<usize>,
    /// Tolerance for exact identities.
    #[arg(long)]
    tol: Option<f64>,
    /// Monte-Carlo twirl samples.
    #[arg(long)]
    samples: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Worker threads for independent trials.
    #[arg(long)]
    jobs: Option<usize>,
    /// JSON config file; its keys override flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    m: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<usize>>,
    #[arg(long)]
    eps: Option<f64>,
    /// Fixture names, or `all`.
    #[arg(long, value_delimiter = ',')]
    fixtures: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    betas: Option<Vec<f64>>,
    /// Boson particle-number cutoff K.
    #[arg(long)]
    cutoff: Option<usize>,
    /// Largest n tried by the lower-bound sweep.
    #[arg(long)]
    max_n: Option<usize>,
    #[arg(long, value_enum)]
    sampler: Option<SamplerArg>,
}

struct Settings {
    suite: Suite,
    cfg: SuiteConfig,
    out: Option<PathBuf>,
    format: Format,
    jobs: Option<usize>,
}

fn config_error(msg: impl std::fmt::Display) -> (u8, String) {
    (EXIT_CONFIG, format!("config error: {msg}"))
}

impl RunArgs {
    fn suite_config(&self) -> SuiteConfig {
        SuiteConfig {
            seed: self.seed,
            trials: self.trials,
            samples: self.samples,
            tol: self.tol,
            m: self.m.clone(),
            n: self.n.clone(),
            k: self.k.clone(),
            eps: self.eps,
            fixtures: self.fixtures.clone(),
            betas: self.betas.clone(),
            cutoff: self.cutoff,
            max_n: self.max_n,
            sampler: self.sampler.map(|s| match s {
                SamplerArg::Rejection => SamplerMethod::Rejection,
                SamplerArg::Metropolis => SamplerMethod::Metropolis,
            }),
        }
    }

    /// Flags first, then every key present in the config file on top.
    fn settings(&self) -> Result<Settings, (u8, String)> {
        let mut settings = Settings {
            suite: self.suite.into(),
            cfg: self.suite_config(),
            out: self.out.clone(),
            format: self.format,
            jobs: self.jobs,
        };
        let Some(path) = &self.config else {
            return Ok(settings);
        };
        let text = std::fs::read_to_string(path).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
        let mut file: Map<String, Value> = serde_json::from_str(&text).map_err(config_error)?;
        if let Some(v) = file.remove("suite") {
            let name = v.as_str().ok_or_else(|| config_error("suite must be a string"))?;
            settings.suite = name.parse().map_err(config_error)?;
        }
        if let Some(v) = file.remove("out") {
            settings.out = Some(PathBuf::from(v.as_str().ok_or_else(|| config_error("out must be a string"))?));
        }
        if let Some(v) = file.remove("format") {
            settings.format = match v.as_str() {
                Some("json") => Format::Json,
                Some("csv") => Format::Csv,
                _ => return Err(config_error("format must be \"json\" or \"csv\"")),
            };
        }
        if let Some(v) = file.remove("jobs") {
            settings.jobs = Some(v.as_u64().ok_or_else(|| config_error("jobs must be a positive integer"))? as usize);
        }
        let mut merged = match serde_json::to_value(&settings.cfg).map_err(config_error)? {
            Value::Object(map) => map,
            _ => unreachable!("config serializes to an object"),
        };
        merged.extend(file);
        settings.cfg = serde_json::from_value(Value::Object(merged)).map_err(config_error)?;
        Ok(settings)
    }
}

fn write_records(records: &[ExperimentRecord], format: Format, sink: &mut dyn Write) -> io::Result<()> {
    match format {
        Format::Json => {
            for r in records {
                writeln!(sink, "{}", r.to_json_line())?;
            }
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(sink);
            for row in summary_rows(records) {
                w.serialize(row).map_err(io::Error::other)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn emit(records: &[ExperimentRecord], format: Format, out: Option<&Path>) -> io::Result<()> {
    match out {
        Some(path) => {
            let mut file = BufWriter::new(File::create(path)?);
            write_records(records, format, &mut file)?;
            file.flush()
        }
        None => write_records(records, format, &mut io::stdout().lock()),
    }
}

fn run(args: &RunArgs) -> Result<(), (u8, String)> {
    let settings = args.settings()?;
    if let Some(jobs) = settings.jobs {
        if jobs == 0 {
            return Err(config_error("jobs must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| config_error(format!("thread pool: {e}")))?;
    }
    log::info!("suite {} seed {} (randpur {VERSION}, record format {RECORD_FORMAT})", settings.suite, settings.cfg.seed);
    let records = run_suite(settings.suite, &settings.cfg).map_err(|e| match e {
        Error::InvalidArgument(_) | Error::Parse(_) => config_error(e),
        Error::BudgetExceeded(_) => (EXIT_BUDGET, e.to_string()),
        other => (EXIT_CRITERIA, format!("suite aborted: {other}")),
    })?;
    emit(&records, settings.format, settings.out.as_deref())
        .map_err(|e| (EXIT_CRITERIA, format!("cannot write report: {e}")))?;
    let mut failed = 0;
    for r in &records {
        for c in r.checks.iter().filter(|c| !c.pass) {
            failed += 1;
            eprintln!("FAIL {} {}: {} = {} (target {}, tolerance {})", r.suite, r.case, c.quantity, c.value, c.target, c.tolerance);
        }
    }
    eprintln!("{} records, {} failed checks", records.len(), failed);
    if failed > 0 {
        return Err((EXIT_CRITERIA, format!("{failed} checks failed")));
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("{msg}");
            ExitCode::from(code)
        }
    }
}
