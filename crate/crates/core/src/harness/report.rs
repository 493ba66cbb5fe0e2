//! Consolidated variant table built from `aggregate.csv`, and metric CSVs
//! for a single stored trace.

use std::path::{Path, PathBuf};

use crate::metrics::{MetricSeries, RunTrace};

use super::experiment::AGGREGATE_COLUMNS;
use super::HarnessError;

pub const REPORT_COLUMNS: [&str; 5] = [
    "variant",
    "ratio",
    "mean_convergence_round",
    "mean_first_discovery_round",
    "mean_pujv",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub variant: String,
    pub ratio: f64,
    pub mean_convergence_round: f64,
    pub mean_first_discovery_round: f64,
    pub mean_pujv: f64,
}

/// Reads `aggregate.csv` from a results directory.
pub fn read_aggregate(results_dir: &Path) -> Result<Vec<ReportRow>, HarnessError> {
    let path = results_dir.join("aggregate.csv");
    let mut reader = csv::Reader::from_path(&path).map_err(|e| HarnessError::csv(&path, e))?;
    let headers = reader.headers().map_err(|e| HarnessError::csv(&path, e))?.clone();
    if headers.iter().ne(AGGREGATE_COLUMNS) {
        return Err(HarnessError::Format {
            line: 1,
            message: format!("{}: unexpected header {:?}", path.display(), headers),
        });
    }
    let col = |name: &str| AGGREGATE_COLUMNS.iter().position(|c| *c == name).unwrap();
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| HarnessError::csv(&path, e))?;
        let num = |name: &str| -> Result<f64, HarnessError> {
            record[col(name)].parse().map_err(|_| HarnessError::Format {
                line: i + 2,
                message: format!("{}: bad {name} {:?}", path.display(), &record[col(name)]),
            })
        };
        rows.push(ReportRow {
            variant: record[col("variant")].to_string(),
            ratio: num("ratio")?,
            mean_convergence_round: num("mean_convergence_round")?,
            mean_first_discovery_round: num("mean_first_discovery_round")?,
            mean_pujv: num("mean_pujv")?,
        });
    }
    Ok(rows)
}

/// Writes the report table as CSV.
pub fn write_report<W: std::io::Write>(rows: &[ReportRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.variant.clone(),
            r.ratio.to_string(),
            r.mean_convergence_round.to_string(),
            r.mean_first_discovery_round.to_string(),
            r.mean_pujv.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Files written by [`write_trace_metrics`] and the range's useless jump volume.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceMetricsOutput {
    pub per_particle: PathBuf,
    pub summary: PathBuf,
    pub pujv: u64,
}

/// Writes `<stem>_dist.csv` (`iteration,particle,dist,dist_eff`) and
/// `<stem>_metrics.csv` (`iteration,mean_dist,mean_dist_eff,cum_pujv`) for
/// iterations `from..=to`. `cum_pujv` restarts at `from`.
pub fn write_trace_metrics(
    trace: &RunTrace,
    from: usize,
    to: usize,
    out_dir: &Path,
    stem: &str,
) -> Result<TraceMetricsOutput, HarnessError> {
    let series = MetricSeries::compute(trace);
    let pujv = series.pujv(from, to).map_err(|e| HarnessError::Config(e.to_string()))?;
    std::fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;

    let per_particle = out_dir.join(format!("{stem}_dist.csv"));
    let mut w = csv::Writer::from_path(&per_particle).map_err(|e| HarnessError::csv(&per_particle, e))?;
    let result: csv::Result<()> = (|| {
        w.write_record(["iteration", "particle", "dist", "dist_eff"])?;
        for k in from..=to {
            for p in 0..series.swarm_size {
                w.write_record([
                    k.to_string(),
                    p.to_string(),
                    series.dist[p][k - 1].to_string(),
                    series.dist_eff[p][k - 1].to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    })();
    result.map_err(|e| HarnessError::csv(&per_particle, e))?;

    let summary = out_dir.join(format!("{stem}_metrics.csv"));
    let mut w = csv::Writer::from_path(&summary).map_err(|e| HarnessError::csv(&summary, e))?;
    let result: csv::Result<()> = (|| {
        w.write_record(["iteration", "mean_dist", "mean_dist_eff", "cum_pujv"])?;
        let mut cum = 0u64;
        for k in from..=to {
            let (d, e) = series.means_at(k);
            cum += series.pujv(k, k).expect("k within range");
            w.write_record([k.to_string(), d.to_string(), e.to_string(), cum.to_string()])?;
        }
        w.flush()?;
        Ok(())
    })();
    result.map_err(|e| HarnessError::csv(&summary, e))?;

    Ok(TraceMetricsOutput {
        per_particle,
        summary,
        pujv,
    })
}
