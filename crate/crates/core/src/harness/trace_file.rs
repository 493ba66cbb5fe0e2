//! Plain-text run traces.
//!
//! ```text
//! vbpso-trace 1 <swarm_size> <dimensions>
//! <iteration> <gbest_fitness> <flips,...> <hex,...>
//! ...
//! best <hex>
//! ```
//!
//! One line per record. Positions are [`BitString::to_hex`] encodings, one
//! per particle in particle order. Files whose name ends in `.gz` are
//! gzip-compressed.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

use crate::bits::BitString;
use crate::metrics::{IterationRecord, RunTrace};

use super::HarnessError;

const MAGIC: &str = "vbpso-trace";
const VERSION: &str = "1";

pub fn write_trace<W: Write>(trace: &RunTrace, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{MAGIC} {VERSION} {} {}", trace.swarm_size, trace.dimensions)?;
    for rec in &trace.records {
        write!(out, "{} {} ", rec.iteration, rec.gbest_fitness)?;
        for (i, f) in rec.flips.iter().enumerate() {
            if i > 0 {
                out.write_all(b",")?;
            }
            write!(out, "{f}")?;
        }
        out.write_all(b" ")?;
        for (i, p) in rec.positions.iter().enumerate() {
            if i > 0 {
                out.write_all(b",")?;
            }
            out.write_all(p.to_hex().as_bytes())?;
        }
        out.write_all(b"\n")?;
    }
    writeln!(out, "best {}", trace.best_position.to_hex())
}

fn is_gzip(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "gz")
}

pub fn save_trace(trace: &RunTrace, path: &Path) -> Result<(), HarnessError> {
    let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let out = BufWriter::new(file);
    let result = if is_gzip(path) {
        let mut gz = GzEncoder::new(out, Compression::default());
        write_trace(trace, &mut gz).and_then(|_| gz.finish()?.flush())
    } else {
        let mut out = out;
        write_trace(trace, &mut out).and_then(|_| out.flush())
    };
    result.map_err(|e| HarnessError::io(path, e))
}

pub fn read_trace<R: BufRead>(input: R) -> Result<RunTrace, HarnessError> {
    let bad = |line: usize, msg: String| HarnessError::Format { line, message: msg };
    let mut lines = input.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| bad(1, "empty trace".into()))?;
    let header = header.map_err(|e| bad(1, e.to_string()))?;
    let fields: Vec<&str> = header.split(' ').collect();
    let [MAGIC, VERSION, swarm, dims] = fields[..] else {
        return Err(bad(1, format!("not a version {VERSION} trace header: {header:?}")));
    };
    let swarm_size: usize = swarm.parse().map_err(|_| bad(1, format!("bad swarm size {swarm:?}")))?;
    let dimensions: usize = dims.parse().map_err(|_| bad(1, format!("bad dimensions {dims:?}")))?;

    let mut records = Vec::new();
    let mut best_position = None;
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line.map_err(|e| bad(lineno, e.to_string()))?;
        if best_position.is_some() {
            if line.is_empty() {
                continue;
            }
            return Err(bad(lineno, "content after the best line".into()));
        }
        if let Some(hex) = line.strip_prefix("best ") {
            best_position = Some(BitString::from_hex(hex, dimensions).map_err(|e| bad(lineno, e.to_string()))?);
            continue;
        }
        let parts: Vec<&str> = line.split(' ').collect();
        let [iteration, gbest, flips, positions] = parts[..] else {
            return Err(bad(lineno, "expected 4 space-separated fields".into()));
        };
        let iteration: usize = iteration
            .parse()
            .map_err(|_| bad(lineno, format!("bad iteration {iteration:?}")))?;
        if iteration != records.len() {
            return Err(bad(
                lineno,
                format!("expected iteration {}, got {iteration}", records.len()),
            ));
        }
        let gbest_fitness: f64 = gbest
            .parse()
            .map_err(|_| bad(lineno, format!("bad fitness {gbest:?}")))?;
        let flips = flips
            .split(',')
            .map(|f| {
                f.parse::<u32>()
                    .map_err(|_| bad(lineno, format!("bad flip count {f:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let positions = positions
            .split(',')
            .map(|h| BitString::from_hex(h, dimensions).map_err(|e| bad(lineno, e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        if flips.len() != swarm_size || positions.len() != swarm_size {
            return Err(bad(lineno, format!("expected {swarm_size} particles")));
        }
        records.push(IterationRecord {
            iteration,
            gbest_fitness,
            positions,
            flips,
        });
    }
    if records.is_empty() {
        return Err(bad(2, "trace has no records".into()));
    }
    let best_position = best_position.ok_or_else(|| bad(records.len() + 2, "missing best line".into()))?;
    Ok(RunTrace {
        swarm_size,
        dimensions,
        records,
        best_position,
    })
}

pub fn load_trace(path: &Path) -> Result<RunTrace, HarnessError> {
    let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    if is_gzip(path) {
        read_trace(BufReader::new(GzDecoder::new(file)))
    } else {
        read_trace(BufReader::new(file))
    }
}
