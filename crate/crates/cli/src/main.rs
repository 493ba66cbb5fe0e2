//! `vbpso`: generate knapsack instances, solve them exactly, run swarm
//! experiments and summarize their outputs.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use vbpso::harness::{self, HarnessError};
use vbpso::knapsack::{self, InstanceType, KnapsackInstance};

#[derive(Debug, Parser)]
#[command(name = "vbpso", version, about = "V-shaped binary PSO knapsack experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GenType {
    Uci,
    Wci,
    Sci,
}

impl From<GenType> for InstanceType {
    fn from(t: GenType) -> Self {
        match t {
            GenType::Uci => InstanceType::Uci,
            GenType::Wci => InstanceType::Wci,
            GenType::Sci => InstanceType::Sci,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a random knapsack instance.
    Gen {
        #[arg(long = "type", value_enum)]
        instance_type: GenType,
        /// Number of items.
        #[arg(long)]
        n: usize,
        /// Weights are drawn from 1..=R.
        #[arg(long, default_value_t = 1000)]
        r: u64,
        /// Capacity as a fraction of the total weight.
        #[arg(long, default_value_t = 0.5)]
        s: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve an instance exactly and write the optimal selection.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        /// Selection file (profit line, then one 0/1 digit per item);
        /// defaults to `<instance>.solution`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compute exploration metrics for a stored trace.
    Metrics {
        #[arg(long)]
        trace: PathBuf,
        /// First iteration of the range (default 1).
        #[arg(long)]
        from: Option<usize>,
        /// Last iteration of the range (default: end of trace).
        #[arg(long)]
        to: Option<usize>,
        /// Directory for the CSV files; defaults to the trace's directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Consolidate `aggregate.csv` of a results directory into `report.csv`.
    Report {
        #[arg(long)]
        results_dir: PathBuf,
    },
}

/// Errors the user should fix in their input; reported with exit code 2.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Gen {
            instance_type,
            n,
            r,
            s,
            seed,
            out,
        } => gen(instance_type.into(), n, r, s, seed, out.as_deref()),
        Command::Solve { instance, out } => solve(&instance, out),
        Command::Run { config } => run(&config),
        Command::Metrics {
            trace,
            from,
            to,
            out_dir,
        } => metrics(&trace, from, to, out_dir),
        Command::Report { results_dir } => report(&results_dir),
    }
}

fn gen(instance_type: InstanceType, n: usize, r: u64, s: f64, seed: u64, out: Option<&Path>) -> Result<()> {
    let instance = knapsack::generate(instance_type, n, r, s, seed).map_err(|e| UsageError(e.to_string()))?;
    match out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
            instance.write_to(&mut w)?;
            w.flush().with_context(|| format!("writing {}", path.display()))?;
        }
        None => {
            let stdout = std::io::stdout();
            instance.write_to(stdout.lock())?;
        }
    }
    Ok(())
}

fn solve(path: &Path, out: Option<PathBuf>) -> Result<()> {
    let text = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let instance = KnapsackInstance::read_from(&text[..]).with_context(|| format!("parsing {}", path.display()))?;
    let solution = harness::solve_optimum(&instance)?;
    let out = out.unwrap_or_else(|| {
        let mut name = path.as_os_str().to_owned();
        name.push(".solution");
        PathBuf::from(name)
    });
    let bits: String = solution.selection.iter().map(|b| if b { '1' } else { '0' }).collect();
    fs::write(&out, format!("{}\n{bits}\n", solution.profit)).with_context(|| format!("writing {}", out.display()))?;
    println!("{}", solution.profit);
    Ok(())
}

fn run(config: &Path) -> Result<()> {
    let spec = harness::load_config(config).map_err(usage_if_input)?;
    let result = harness::run_experiment(&spec)?;
    println!("optimum {}", result.optimum);
    for a in &result.aggregates {
        println!("{} ratio {:.6} pujv {:.1}", a.label, a.ratio, a.mean_pujv);
    }
    println!("results in {}", spec.output_dir.display());
    Ok(())
}

fn usage_if_input(err: HarnessError) -> anyhow::Error {
    if err.is_usage() {
        UsageError(err.to_string()).into()
    } else {
        err.into()
    }
}

fn metrics(path: &Path, from: Option<usize>, to: Option<usize>, out_dir: Option<PathBuf>) -> Result<()> {
    let trace = harness::load_trace(path)?;
    let last = trace.last_iteration();
    if last == 0 {
        bail!("{} holds no iterations after the initial swarm", path.display());
    }
    let from = from.unwrap_or(1);
    let to = to.unwrap_or(last);
    if from < 1 || from > to || to > last {
        return Err(UsageError(format!("range [{from}, {to}] is outside 1..={last}")).into());
    }
    let out_dir = out_dir.unwrap_or_else(|| path.parent().unwrap_or(Path::new(".")).to_path_buf());
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let base = name.strip_suffix(".gz").unwrap_or(&name);
    let stem = base.strip_suffix(".trace").unwrap_or(base);
    let written = harness::write_trace_metrics(&trace, from, to, &out_dir, stem)?;
    println!("pujv {}", written.pujv);
    println!("wrote {}", written.per_particle.display());
    println!("wrote {}", written.summary.display());
    Ok(())
}

fn report(results_dir: &Path) -> Result<()> {
    let rows = harness::read_aggregate(results_dir)?;
    let path = results_dir.join("report.csv");
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    harness::write_report(&rows, BufWriter::new(file)).with_context(|| format!("writing {}", path.display()))?;
    harness::write_report(&rows, std::io::stdout().lock())?;
    Ok(())
}
