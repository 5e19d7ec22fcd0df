use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use longmem::arfima::{simulate, ArfimaParams};
use longmem::baselines::diagnostics;
use longmem::harness::report::write_report;
use longmem::harness::{
    estimate, ingest_csv, run_study, transform, ColumnSelector, Config, EstimateReport, Format, HeaderMode,
    Method, Report, Transform,
};
use longmem::spectral::{periodogram, TimeSeries};
use longmem::{Error, Result};

/// Long-memory time series: ARFIMA simulation and estimation of the memory parameter d.
#[derive(Parser)]
#[command(name = "longmem", version)]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Print the effective configuration and exit.
    #[arg(long)]
    print_config: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args)]
struct Output {
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct Input {
    /// CSV file with one observation per row.
    #[arg(long)]
    input: PathBuf,

    /// Column name, or zero-based column index.
    #[arg(long, default_value = "0")]
    column: ColumnSelector,

    /// The first row is a header.
    #[arg(long, conflicts_with = "no_header")]
    header: bool,

    /// The first row is data.
    #[arg(long)]
    no_header: bool,

    #[arg(long, value_enum, default_value_t = Transform::None)]
    transform: Transform,
}

impl Input {
    fn load(&self) -> Result<TimeSeries> {
        let mode = match (self.header, self.no_header) {
            (true, _) => HeaderMode::Present,
            (_, true) => HeaderMode::Absent,
            _ => HeaderMode::Auto,
        };
        let raw = ingest_csv(&self.input, &self.column, mode)?;
        TimeSeries::new(transform(raw.values(), self.transform)?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate an ARFIMA(1,d,1) series.
    Simulate {
        #[arg(long, allow_hyphen_values = true)]
        d: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        phi: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        theta: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma2: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Periodogram at the Fourier frequencies.
    Periodogram {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        output: Output,
    },
    /// Estimate d.
    Estimate {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum, default_value_t = Method::Semiparametric)]
        method: Method,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// R/S Hurst exponents and DFA2.
    Diagnostics {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        output: Output,
    },
    /// Replicated simulation study.
    Study {
        /// Base seed; overrides the configuration.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; overrides the configuration.
        #[arg(long)]
        workers: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
}

fn write_to(out: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    match out {
        Some(path) => {
            let io_err = |source| Error::Io { path: path.to_path_buf(), source };
            let mut file = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err)?);
            body(&mut file).map_err(io_err)?;
            file.flush().map_err(io_err)
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            body(&mut lock).map_err(|source| Error::Io { path: PathBuf::from("<stdout>"), source })
        }
    }
}

fn emit(report: &Report, output: &Output) -> Result<()> {
    write_to(output.out.as_deref(), |w| write_report(report, output.format, w))
}

fn columns(output: &Output, names: [&str; 2], a: &[f64], b: Option<&[f64]>, meta: serde_json::Value) -> Result<()> {
    write_to(output.out.as_deref(), |w| match output.format {
        Format::Csv => {
            match b {
                Some(_) => writeln!(w, "{},{}", names[0], names[1])?,
                None => writeln!(w, "{}", names[0])?,
            }
            for (i, x) in a.iter().enumerate() {
                match b {
                    Some(b) => writeln!(w, "{x},{}", b[i])?,
                    None => writeln!(w, "{x}")?,
                }
            }
            Ok(())
        }
        Format::Json => {
            let mut v = meta;
            v[names[0]] = a.into();
            if let Some(b) = b {
                v[names[1]] = b.into();
            }
            serde_json::to_writer_pretty(&mut *w, &v)?;
            writeln!(w)
        }
    })
}

fn run(cli: Cli) -> Result<()> {
    let config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if cli.print_config {
        print!("{}", config.to_toml());
        return Ok(());
    }
    let Some(command) = cli.command else {
        return Err(Error::InvalidInput("no command given; see --help".into()));
    };
    match command {
        Command::Simulate { d, phi, theta, sigma2, n, seed, output } => {
            let params = ArfimaParams::new(d, phi, theta, sigma2)?;
            let series = simulate(&params, n, seed)?;
            let meta = serde_json::json!({
                "schema_version": "1", "d": d, "phi": phi, "theta": theta, "sigma2": sigma2, "n": n, "seed": seed,
            });
            columns(&output, ["value", ""], series.values(), None, meta)
        }
        Command::Periodogram { input, output } => {
            let series = input.load()?;
            let pg = periodogram(&series);
            let meta = serde_json::json!({ "schema_version": "1", "n": series.len() });
            columns(&output, ["frequency", "ordinate"], pg.frequencies(), Some(pg.ordinates()), meta)
        }
        Command::Estimate { input, method, seed, output } => {
            let series = input.load()?;
            let start = Instant::now();
            let est = estimate(&series, method, &config.estimate_settings(), seed)?;
            let report = EstimateReport::new(&est, series.len(), start.elapsed().as_secs_f64());
            emit(&Report::Estimate(&report), &output)
        }
        Command::Diagnostics { input, output } => {
            let series = input.load()?;
            let start = Instant::now();
            let report = diagnostics(&series)?;
            let runtime_seconds = start.elapsed().as_secs_f64();
            emit(&Report::Diagnostics { report: &report, n: series.len(), runtime_seconds }, &output)
        }
        Command::Study { seed, workers, output } => {
            let mut spec = config.study_spec();
            if let Some(s) = seed {
                spec.base_seed = s;
            }
            if let Some(w) = workers {
                spec.workers = w;
            }
            let result = run_study(&spec)?;
            emit(&Report::Study(&result), &output)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
