//! Repeated runs, aggregation and CSV outputs.
//!
//! Files written to the output directory:
//!
//! | file                     | columns                                                  |
//! |--------------------------|----------------------------------------------------------|
//! | `instance.txt`           | the instance actually solved                             |
//! | `runs.csv`               | one row per (variant, repetition)                        |
//! | `aggregate.csv`          | one row per variant, means over repetitions              |
//! | `curve_<label>.csv`      | `iteration,mean_gbest`                                   |
//! | `metrics_<label>.csv`    | `iteration,mean_dist,mean_dist_eff,cum_pujv`             |
//! | `traces/<label>_rep<r>.trace[.gz]` | full trace, when enabled                      |

use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::engine::run;
use crate::knapsack::{self, dp_memory_bytes, dp_optimal, KnapsackInstance, KnapsackObjective};
use crate::metrics::{convergence_round, first_discovery_round, MetricSeries};
use crate::rng::derive_seed;

use super::config::{ExperimentSpec, InstanceSource, TraceMode, Variant};
use super::trace_file::save_trace;
use super::HarnessError;

/// Largest DP table [`run_experiment`] will allocate.
pub const DP_MEMORY_BUDGET: u128 = 1 << 30;

/// Outcome of one (variant, repetition) run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub variant: usize,
    pub repetition: usize,
    pub seed: u64,
    pub best_profit: f64,
    pub convergence_round: usize,
    pub first_discovery_round: usize,
    pub pujv: u64,
    /// `gbest` after each record, starting with the initial swarm.
    pub gbest_curve: Vec<f64>,
    /// Swarm-mean `dist` / `dist_eff` for iterations `1..`.
    pub dist_curve: Vec<f64>,
    pub dist_eff_curve: Vec<f64>,
    /// Running total of this run's useless jump volume for iterations `1..`.
    pub cum_pujv: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateResult {
    pub label: String,
    pub variant: Variant,
    pub repetitions: usize,
    pub optimum: u64,
    pub mean_best_profit: f64,
    /// `mean_best_profit / optimum`
    pub ratio: f64,
    pub mean_convergence_round: f64,
    pub mean_first_discovery_round: f64,
    pub mean_pujv: f64,
    pub gbest_curve: Vec<f64>,
    pub dist_curve: Vec<f64>,
    pub dist_eff_curve: Vec<f64>,
    pub cum_pujv_curve: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub instance: KnapsackInstance,
    pub optimum: u64,
    pub runs: Vec<RunSummary>,
    pub aggregates: Vec<AggregateResult>,
}

pub fn load_instance(source: &InstanceSource) -> Result<KnapsackInstance, HarnessError> {
    match source {
        InstanceSource::Generate {
            instance_type,
            n,
            r,
            s,
            seed,
        } => Ok(knapsack::generate(*instance_type, *n, *r, *s, *seed)?),
        InstanceSource::File(path) => {
            let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
            KnapsackInstance::read_from(BufReader::new(file)).map_err(|e| HarnessError::Instance {
                path: path.clone(),
                source: e,
            })
        }
    }
}

/// DP optimum, refusing tables larger than [`DP_MEMORY_BUDGET`].
pub fn solve_optimum(instance: &KnapsackInstance) -> Result<knapsack::DpSolution, HarnessError> {
    let required = dp_memory_bytes(instance);
    if required > DP_MEMORY_BUDGET {
        return Err(HarnessError::Resource {
            required_bytes: required,
            budget_bytes: DP_MEMORY_BUDGET,
        });
    }
    Ok(dp_optimal(instance))
}

/// Runs every variant `spec.repetitions` times, writes all outputs and
/// returns the aggregates in variant order.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult, HarnessError> {
    let result = compute_experiment(spec)?;
    write_outputs(spec, &result)?;
    Ok(result)
}

/// Same as [`run_experiment`] but only traces touch the disk (when enabled).
pub fn compute_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult, HarnessError> {
    let instance = load_instance(&spec.instance)?;
    let optimum = solve_optimum(&instance)?.profit;
    if optimum == 0 {
        return Err(HarnessError::Config(
            "instance optimum is 0; ratios are undefined".into(),
        ));
    }
    let trace_dir = spec.output_dir.join("traces");
    if spec.traces != TraceMode::Off {
        fs::create_dir_all(&trace_dir).map_err(|e| HarnessError::io(&trace_dir, e))?;
    }
    let objective = KnapsackObjective::new(instance.clone());
    let jobs: Vec<(usize, usize)> = (0..spec.variants.len())
        .flat_map(|v| (0..spec.repetitions).map(move |r| (v, r)))
        .collect();
    let runs = jobs
        .par_iter()
        .map(|&(v, r)| {
            let trace_path = spec
                .traces
                .extension()
                .map(|ext| trace_dir.join(format!("{}_rep{r}.{ext}", spec.variants[v].label())));
            run_one(spec, &objective, v, r, trace_path.as_deref())
        })
        .collect::<Result<Vec<_>, _>>()?;

    let aggregates = spec
        .variants
        .iter()
        .enumerate()
        .map(|(v, variant)| {
            let rows: Vec<&RunSummary> = runs.iter().filter(|s| s.variant == v).collect();
            aggregate(variant, &rows, optimum)
        })
        .collect();
    Ok(ExperimentResult {
        instance,
        optimum,
        runs,
        aggregates,
    })
}

fn run_one(
    spec: &ExperimentSpec,
    objective: &KnapsackObjective,
    variant: usize,
    repetition: usize,
    trace_path: Option<&Path>,
) -> Result<RunSummary, HarnessError> {
    let seed = derive_seed(spec.base_seed, variant as u64, repetition as u64);
    let config = spec.variants[variant].run_config(spec, objective.instance().len(), seed);
    let trace = run(&config, objective)?;
    if let Some(path) = trace_path {
        save_trace(&trace, path)?;
    }
    let series = MetricSeries::compute(&trace);
    let steps = series.iterations();
    let mut dist_curve = Vec::with_capacity(steps);
    let mut dist_eff_curve = Vec::with_capacity(steps);
    let mut cum_pujv = Vec::with_capacity(steps);
    let mut running = 0u64;
    for k in 1..=steps {
        let (d, e) = series.means_at(k);
        dist_curve.push(d);
        dist_eff_curve.push(e);
        running += series.pujv(k, k).expect("k within trace");
        cum_pujv.push(running);
    }
    Ok(RunSummary {
        variant,
        repetition,
        seed,
        best_profit: trace.final_gbest().unwrap_or(0.0),
        convergence_round: convergence_round(&trace),
        first_discovery_round: first_discovery_round(&trace),
        pujv: running,
        gbest_curve: trace.records.iter().map(|r| r.gbest_fitness).collect(),
        dist_curve,
        dist_eff_curve,
        cum_pujv,
    })
}

fn mean(values: impl Iterator<Item = f64>, n: usize) -> f64 {
    values.sum::<f64>() / n as f64
}

fn mean_curve<'a>(curves: impl Iterator<Item = &'a [f64]>, n: usize) -> Vec<f64> {
    let mut total: Vec<f64> = Vec::new();
    for c in curves {
        if total.is_empty() {
            total = vec![0.0; c.len()];
        }
        for (t, x) in total.iter_mut().zip(c) {
            *t += x;
        }
    }
    total.iter().map(|t| t / n as f64).collect()
}

fn aggregate(variant: &Variant, rows: &[&RunSummary], optimum: u64) -> AggregateResult {
    let n = rows.len();
    let mean_best_profit = mean(rows.iter().map(|r| r.best_profit), n);
    let cum: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| r.cum_pujv.iter().map(|&x| x as f64).collect())
        .collect();
    AggregateResult {
        label: variant.label(),
        variant: variant.clone(),
        repetitions: n,
        optimum,
        mean_best_profit,
        ratio: mean_best_profit / optimum as f64,
        mean_convergence_round: mean(rows.iter().map(|r| r.convergence_round as f64), n),
        mean_first_discovery_round: mean(rows.iter().map(|r| r.first_discovery_round as f64), n),
        mean_pujv: mean(rows.iter().map(|r| r.pujv as f64), n),
        gbest_curve: mean_curve(rows.iter().map(|r| r.gbest_curve.as_slice()), n),
        dist_curve: mean_curve(rows.iter().map(|r| r.dist_curve.as_slice()), n),
        dist_eff_curve: mean_curve(rows.iter().map(|r| r.dist_eff_curve.as_slice()), n),
        cum_pujv_curve: mean_curve(cum.iter().map(Vec::as_slice), n),
    }
}

struct CsvOut {
    path: PathBuf,
    inner: csv::Writer<File>,
}

impl CsvOut {
    fn create(path: PathBuf) -> Result<Self, HarnessError> {
        let inner = csv::Writer::from_path(&path).map_err(|e| HarnessError::csv(&path, e))?;
        Ok(Self { path, inner })
    }

    fn row<I, T>(&mut self, record: I) -> Result<(), HarnessError>
    where
        I: IntoIterator<Item = T>,
        T: AsRef<[u8]>,
    {
        self.inner
            .write_record(record)
            .map_err(|e| HarnessError::csv(&self.path, e))
    }

    fn finish(mut self) -> Result<(), HarnessError> {
        self.inner.flush().map_err(|e| HarnessError::io(&self.path, e))
    }
}

/// Writes every CSV artifact (and `instance.txt`) for a finished experiment.
pub fn write_outputs(spec: &ExperimentSpec, result: &ExperimentResult) -> Result<(), HarnessError> {
    let dir = &spec.output_dir;
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;

    let instance_path = dir.join("instance.txt");
    let file = File::create(&instance_path).map_err(|e| HarnessError::io(&instance_path, e))?;
    let mut out = std::io::BufWriter::new(file);
    result
        .instance
        .write_to(&mut out)
        .and_then(|_| out.flush())
        .map_err(|e| HarnessError::io(&instance_path, e))?;

    let mut runs = CsvOut::create(dir.join("runs.csv"))?;
    runs.row(RUN_COLUMNS)?;
    for r in &result.runs {
        runs.row([
            spec.variants[r.variant].label(),
            r.repetition.to_string(),
            r.seed.to_string(),
            r.best_profit.to_string(),
            (r.best_profit / result.optimum as f64).to_string(),
            r.convergence_round.to_string(),
            r.first_discovery_round.to_string(),
            r.pujv.to_string(),
        ])?;
    }
    runs.finish()?;

    let mut agg = CsvOut::create(dir.join("aggregate.csv"))?;
    agg.row(AGGREGATE_COLUMNS)?;
    for a in &result.aggregates {
        agg.row([
            a.label.clone(),
            a.variant.kind.to_string(),
            if a.variant.correction { "on" } else { "off" }.to_string(),
            a.variant.w.to_string(),
            a.variant.vmax.map_or("none".to_string(), |v| v.to_string()),
            a.repetitions.to_string(),
            a.optimum.to_string(),
            a.mean_best_profit.to_string(),
            a.ratio.to_string(),
            a.mean_convergence_round.to_string(),
            a.mean_first_discovery_round.to_string(),
            a.mean_pujv.to_string(),
        ])?;
    }
    agg.finish()?;

    for a in &result.aggregates {
        let mut curve = CsvOut::create(dir.join(format!("curve_{}.csv", a.label)))?;
        curve.row(["iteration", "mean_gbest"])?;
        for (k, g) in a.gbest_curve.iter().enumerate() {
            curve.row([k.to_string(), g.to_string()])?;
        }
        curve.finish()?;

        let mut metrics = CsvOut::create(dir.join(format!("metrics_{}.csv", a.label)))?;
        metrics.row(["iteration", "mean_dist", "mean_dist_eff", "cum_pujv"])?;
        for k in 0..a.dist_curve.len() {
            metrics.row([
                (k + 1).to_string(),
                a.dist_curve[k].to_string(),
                a.dist_eff_curve[k].to_string(),
                a.cum_pujv_curve[k].to_string(),
            ])?;
        }
        metrics.finish()?;
    }
    Ok(())
}

pub const RUN_COLUMNS: [&str; 8] = [
    "variant",
    "repetition",
    "seed",
    "best_profit",
    "ratio",
    "convergence_round",
    "first_discovery_round",
    "pujv",
];

pub const AGGREGATE_COLUMNS: [&str; 12] = [
    "variant",
    "kind",
    "correction",
    "w",
    "vmax",
    "repetitions",
    "optimum",
    "mean_best_profit",
    "ratio",
    "mean_convergence_round",
    "mean_first_discovery_round",
    "mean_pujv",
];
