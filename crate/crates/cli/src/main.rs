mod error;
mod hist;
mod moments;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kingman_core::stats::summary_line;
use kingman_core::suite::{exact_suite, statistical_suite};
use kingman_core::{simulate, StatisticKind, StatisticSpec, Suite, TestReport};
use serde_json::{json, Value};

use crate::error::{usage, CliError, CliResult};
use crate::moments::{IndexSpec, MomentsRequest, Quantity};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "kingman", version, about = "Simulation, exact moments and verification for Kingman coalescent external branches")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a statistic, one CSV row per replicate.
    Simulate {
        #[command(flatten)]
        stat: StatArgs,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Print exact moments and laws.
    Moments {
        #[arg(long)]
        quantity: Quantity,
        #[arg(long)]
        n: usize,
        /// K or LO..HI (inclusive); defaults to every valid index.
        #[arg(long)]
        k: Option<IndexSpec>,
        /// Second index, same syntax as --k.
        #[arg(long)]
        l: Option<IndexSpec>,
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run the verification suites; exits 1 if any report fails.
    Verify {
        #[arg(long, default_value = "all", value_parser = parse_suite)]
        suite: Suite,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Histogram of a simulated statistic as CSV or SVG.
    Hist {
        #[command(flatten)]
        stat: StatArgs,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 50)]
        bins: usize,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Debug, Args)]
struct StatArgs {
    #[arg(long, default_value = "L")]
    statistic: StatisticKind,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 10_000)]
    reps: usize,
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    #[arg(long, default_value_t = 2.0)]
    b: f64,
    #[arg(long, default_value_t = 1)]
    k: usize,
}

impl StatArgs {
    fn spec(&self) -> StatisticSpec {
        StatisticSpec::new(self.statistic, self.n)
            .window(self.alpha, self.beta)
            .interval(self.a, self.b)
            .level(self.k)
    }

    fn config(&self) -> Value {
        json!({
            "statistic": self.statistic,
            "n": self.n,
            "reps": self.reps,
            "alpha": self.alpha,
            "beta": self.beta,
            "a": self.a,
            "b": self.b,
            "k": self.k,
        })
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; results do not depend on it.
    #[arg(long, env = "KINGMAN_THREADS", value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,
}

impl RunArgs {
    fn threads(&self) -> usize {
        match self.threads {
            Some(t) => t as usize,
            None => std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

#[derive(Debug, Args)]
struct OutArgs {
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Svg,
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse().map_err(|_| format!("unknown suite {s:?}; expected exact, statistical or all"))
}

fn open(out: &Option<PathBuf>) -> CliResult<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn metadata(command: &str, seed: Option<u64>, config: Value) -> Value {
    json!({ "version": VERSION, "command": command, "seed": seed, "config": config })
}

fn write_csv_metadata(out: &mut dyn Write, seed: Option<u64>, config: &Value) -> io::Result<()> {
    writeln!(out, "# version: {VERSION}")?;
    if let Some(seed) = seed {
        writeln!(out, "# seed: {seed}")?;
    }
    writeln!(out, "# config: {config}")
}

fn format_value(kind: StatisticKind, x: f64) -> String {
    if kind.is_integral() {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

fn json_value(kind: StatisticKind, x: f64) -> Value {
    if kind.is_integral() {
        json!(x as i64)
    } else {
        json!(x)
    }
}

fn run_simulate(stat: &StatArgs, run: &RunArgs, out: &OutArgs) -> CliResult<()> {
    let spec = stat.spec();
    spec.validate()?;
    let format = out.format.unwrap_or(Format::Csv);
    if format == Format::Svg {
        return usage("simulate writes csv or json; use hist for svg");
    }
    let mut w = open(&out.out)?;
    let values = simulate(&spec, stat.reps, run.seed, run.threads())?;
    let config = stat.config();
    match format {
        Format::Csv => {
            write_csv_metadata(&mut w, Some(run.seed), &config)?;
            writeln!(w, "rep,n,statistic,value")?;
            let name = stat.statistic.name();
            for (rep, &x) in values.iter().enumerate() {
                writeln!(w, "{rep},{},{name},{}", stat.n, format_value(stat.statistic, x))?;
            }
        }
        _ => {
            let mut doc = metadata("simulate", Some(run.seed), config);
            doc["values"] = values.iter().map(|&x| json_value(stat.statistic, x)).collect();
            writeln!(w, "{doc}")?;
        }
    }
    w.flush()?;
    Ok(())
}

fn run_moments(req: &MomentsRequest, out: &OutArgs) -> CliResult<()> {
    let rows = moments::evaluate(req)?;
    let mut w = open(&out.out)?;
    match out.format {
        None => moments::write_text(&rows, &mut w)?,
        Some(Format::Csv) => {
            let config = json!({ "quantity": req.quantity.name(), "n": req.n, "alpha": req.alpha, "beta": req.beta });
            write_csv_metadata(&mut w, None, &config)?;
            moments::write_csv(req, &rows, &mut w)?;
        }
        Some(Format::Json) => {
            let config = json!({ "quantity": req.quantity.name(), "n": req.n, "alpha": req.alpha, "beta": req.beta });
            let mut doc = metadata("moments", None, config);
            doc["values"] = rows.iter().map(moments::row_json).collect();
            writeln!(w, "{doc}")?;
        }
        Some(Format::Svg) => return usage("moments writes text, csv or json"),
    }
    w.flush()?;
    Ok(())
}

fn suite_name(suite: Suite) -> &'static str {
    match suite {
        Suite::Exact => "exact",
        Suite::Statistical => "statistical",
        Suite::All => "all",
    }
}

fn run_verify(suite: Suite, run: &RunArgs, out: &Option<PathBuf>) -> CliResult<()> {
    let mut w = open(out)?;
    writeln!(w, "{}", metadata("verify", Some(run.seed), json!({ "suite": suite_name(suite) })))?;
    w.flush()?;
    let mut all: Vec<TestReport> = Vec::new();
    let mut emit = |reports: Vec<TestReport>, w: &mut dyn Write| -> io::Result<()> {
        for r in &reports {
            writeln!(w, "{}", r.to_json())?;
        }
        w.flush()?;
        all.extend(reports);
        Ok(())
    };
    if matches!(suite, Suite::Exact | Suite::All) {
        emit(exact_suite()?, &mut w)?;
    }
    if matches!(suite, Suite::Statistical | Suite::All) {
        emit(statistical_suite(run.seed, run.threads())?, &mut w)?;
    }
    let summary = summary_line(&all);
    writeln!(w, "{summary}")?;
    w.flush()?;
    if all.iter().all(|r| r.pass) {
        Ok(())
    } else {
        Err(CliError::Failed(summary))
    }
}

fn run_hist(stat: &StatArgs, run: &RunArgs, bins: usize, out: &OutArgs) -> CliResult<()> {
    if bins < 2 {
        return usage(format!("--bins must be at least 2, got {bins}"));
    }
    if stat.reps == 0 {
        return usage("cannot histogram 0 values (--reps 0)");
    }
    let spec = stat.spec();
    spec.validate()?;
    let mut w = open(&out.out)?;
    let values = simulate(&spec, stat.reps, run.seed, run.threads())?;
    let bins = hist::histogram(&values, bins);
    let mut config = stat.config();
    config["bins"] = json!(bins.len());
    match out.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            write_csv_metadata(&mut w, Some(run.seed), &config)?;
            writeln!(w, "bin_lo,bin_hi,count")?;
            for b in &bins {
                writeln!(w, "{},{},{}", b.lo, b.hi, b.count)?;
            }
        }
        Format::Json => {
            let mut doc = metadata("hist", Some(run.seed), config);
            doc["bins"] = json!(bins);
            writeln!(w, "{doc}")?;
        }
        Format::Svg => {
            writeln!(w, "<!-- kingman {VERSION} seed={} config={} -->", run.seed, config)?;
            let title = format!("{} values of {} at n = {}", stat.reps, stat.statistic.name(), stat.n);
            w.write_all(hist::render_svg(&bins, stat.statistic.name(), &title).as_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate { stat, run, out } => run_simulate(&stat, &run, &out),
        Command::Moments { quantity, n, k, l, alpha, beta, out } => {
            run_moments(&MomentsRequest { quantity, n, k, l, alpha, beta }, &out)
        }
        Command::Verify { suite, run, out } => run_verify(suite, &run, &out),
        Command::Hist { stat, run, bins, out } => run_hist(&stat, &run, bins, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Failed(summary)) => {
            eprintln!("kingman: verification failed ({summary})");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("kingman: {e}");
            e.exit_code()
        }
    }
}
