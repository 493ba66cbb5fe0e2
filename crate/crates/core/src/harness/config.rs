//! Experiment config files.
//!
//! Line-oriented `key = value` pairs; `#` starts a comment, blank lines are
//! ignored and values may be wrapped in double quotes. Keys:
//!
//! ```text
//! instance.type = uci            # uci | wci | sci
//! instance.n = 100
//! instance.r = 1000
//! instance.s = 0.5
//! instance.seed = 42
//! instance.path = items.txt      # instead of the generation keys
//! swarm.size = 20
//! swarm.c1 = 2
//! swarm.c2 = 2
//! run.iterations = 1000
//! run.repetitions = 20
//! run.base_seed = 7
//! variants = vt1,off,0.6,5; vc1,on,1.0,none
//! output.dir = results
//! output.traces = on           # on | off | gzip
//! ```
//!
//! `variants` holds `kind,correction,w,vmax` tuples separated by `;` and may
//! be repeated to append more. `w` is `a` (constant) or `a-b` (linear ramp).

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use crate::engine::{RunConfig, WSchedule};
use crate::knapsack::InstanceType;
use crate::transfer::TransferKind;

use super::HarnessError;

#[derive(Debug, Clone, PartialEq)]
pub enum InstanceSource {
    Generate {
        instance_type: InstanceType,
        n: usize,
        r: u64,
        s: f64,
        seed: u64,
    },
    File(PathBuf),
}

/// One algorithm setting of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Variant {
    pub kind: TransferKind,
    pub correction: bool,
    pub w: WSchedule,
    pub vmax: Option<f64>,
}

impl Variant {
    /// File-safe name such as `vc3_w1.2-0.99` or `vt1_w0.6_vmax5`.
    pub fn label(&self) -> String {
        let family = if self.correction { "vc" } else { "vt" };
        let mut label = format!("{family}{}_w{}", self.kind.index(), self.w);
        if let Some(v) = self.vmax {
            label.push_str(&format!("_vmax{v}"));
        }
        label
    }

    pub fn run_config(&self, spec: &ExperimentSpec, dimensions: usize, seed: u64) -> RunConfig {
        RunConfig {
            kind: self.kind,
            correction_enabled: self.correction,
            w: self.w,
            vmax: self.vmax,
            c1: spec.c1,
            c2: spec.c2,
            swarm_size: spec.swarm_size,
            dimensions,
            max_iterations: spec.iterations,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub instance: InstanceSource,
    pub swarm_size: usize,
    pub c1: f64,
    pub c2: f64,
    pub iterations: usize,
    pub repetitions: usize,
    pub base_seed: u64,
    pub variants: Vec<Variant>,
    pub output_dir: PathBuf,
    pub traces: TraceMode,
}

/// Whether and how per-run traces are written under `output_dir/traces`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceMode {
    Off,
    Plain,
    Gzip,
}

impl TraceMode {
    fn parse(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("gzip") {
            return Ok(Self::Gzip);
        }
        match parse_bool(s) {
            Ok(true) => Ok(Self::Plain),
            Ok(false) => Ok(Self::Off),
            Err(_) => Err(format!("expected on/off/gzip, got {s:?}")),
        }
    }

    /// File extension for trace files, `None` when traces are off.
    pub fn extension(self) -> Option<&'static str> {
        match self {
            Self::Off => None,
            Self::Plain => Some("trace"),
            Self::Gzip => Some("trace.gz"),
        }
    }
}

impl ExperimentSpec {
    /// Resolves relative paths against `base` (normally the config file's directory).
    pub fn resolve_paths(&mut self, base: &Path) {
        if let InstanceSource::File(p) = &mut self.instance {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if self.output_dir.is_relative() {
            self.output_dir = base.join(&self.output_dir);
        }
    }
}

/// Parses `a` or `a-b` inertia weight notation.
pub fn parse_w(text: &str) -> Result<WSchedule, String> {
    let text = unquote(text.trim());
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| format!("bad inertia weight {s:?}"));
    let w = match text.split_once('-') {
        Some((a, b)) => WSchedule::ramp(num(a)?, num(b)?),
        None => WSchedule::constant(num(text)?),
    };
    w.validate().map_err(|e| e.to_string())?;
    Ok(w)
}

fn unquote(s: &str) -> &str {
    s.strip_prefix('"').and_then(|s| s.strip_suffix('"')).unwrap_or(s)
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s.to_ascii_lowercase().as_str() {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        _ => Err(format!("expected on/off, got {s:?}")),
    }
}

fn parse_variant(text: &str) -> Result<Variant, String> {
    let fields: Vec<&str> = text.split(',').map(|f| unquote(f.trim())).collect();
    let [kind, correction, w, vmax] = fields[..] else {
        return Err(format!("variant {text:?} is not a `kind,correction,w,vmax` tuple"));
    };
    let kind: TransferKind = kind.parse().map_err(|e| format!("{e}"))?;
    let correction = parse_bool(correction)?;
    let w = parse_w(w)?;
    let vmax = match vmax.to_ascii_lowercase().as_str() {
        "none" | "-" => None,
        v => Some(v.parse::<f64>().map_err(|_| format!("bad vmax {v:?}"))?),
    };
    let variant = Variant {
        kind,
        correction,
        w,
        vmax,
    };
    variant
        .run_config_check()
        .map_err(|e| format!("variant {text:?}: {e}"))?;
    Ok(variant)
}

impl Variant {
    fn run_config_check(&self) -> Result<(), String> {
        let mut c = RunConfig::standard(self.kind, self.correction, self.w, 1);
        c.vmax = self.vmax;
        c.max_iterations = 2;
        c.validate().map_err(|e| e.to_string())
    }
}

#[derive(Default)]
struct Raw {
    instance_type: Option<(usize, InstanceType)>,
    n: Option<usize>,
    r: Option<u64>,
    s: Option<f64>,
    seed: Option<u64>,
    path: Option<PathBuf>,
    swarm_size: Option<usize>,
    c1: Option<f64>,
    c2: Option<f64>,
    iterations: Option<usize>,
    repetitions: Option<usize>,
    base_seed: Option<u64>,
    variants: Vec<Variant>,
    output_dir: Option<PathBuf>,
    traces: Option<TraceMode>,
}

/// Parses and validates a config document.
pub fn parse_config(text: &str) -> Result<ExperimentSpec, HarnessError> {
    let mut raw = Raw::default();
    let mut seen = HashSet::new();
    let mut variants_line = 0;

    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(HarnessError::parse(
                lineno,
                "",
                format!("expected `key = value`, got {content:?}"),
            ));
        };
        let key = key.trim();
        let value = unquote(value.trim());
        let fail = |msg: String| HarnessError::parse(lineno, key, msg);
        if key != "variants" && !seen.insert(key.to_string()) {
            return Err(fail("duplicate key".into()));
        }
        fn num<T: std::str::FromStr>(v: &str) -> Result<T, String> {
            v.parse::<T>().map_err(|_| format!("malformed value {v:?}"))
        }
        match key {
            "instance.type" => {
                let t: InstanceType = value.parse().map_err(|e| fail(format!("{e}")))?;
                if t == InstanceType::External {
                    return Err(fail("use instance.path for external instances".into()));
                }
                raw.instance_type = Some((lineno, t));
            }
            "instance.n" => raw.n = Some(num(value).map_err(fail)?),
            "instance.r" => raw.r = Some(num(value).map_err(fail)?),
            "instance.s" => raw.s = Some(num(value).map_err(fail)?),
            "instance.seed" => raw.seed = Some(num(value).map_err(fail)?),
            "instance.path" => raw.path = Some(PathBuf::from(value)),
            "swarm.size" => raw.swarm_size = Some(num(value).map_err(fail)?),
            "swarm.c1" => raw.c1 = Some(num(value).map_err(fail)?),
            "swarm.c2" => raw.c2 = Some(num(value).map_err(fail)?),
            "run.iterations" => raw.iterations = Some(num(value).map_err(fail)?),
            "run.repetitions" => raw.repetitions = Some(num(value).map_err(fail)?),
            "run.base_seed" => raw.base_seed = Some(num(value).map_err(fail)?),
            "variants" => {
                variants_line = lineno;
                for tuple in value.split(';').map(str::trim).filter(|t| !t.is_empty()) {
                    raw.variants.push(parse_variant(tuple).map_err(fail)?);
                }
            }
            "output.dir" => raw.output_dir = Some(PathBuf::from(value)),
            "output.traces" => raw.traces = Some(TraceMode::parse(value).map_err(fail)?),
            _ => return Err(fail("unknown key".into())),
        }
    }

    let instance = match (raw.path, raw.instance_type) {
        (Some(_), Some((line, _))) => {
            return Err(HarnessError::parse(
                line,
                "instance.type",
                "conflicts with instance.path".into(),
            ))
        }
        (Some(path), None) => {
            if raw.n.is_some() || raw.r.is_some() || raw.s.is_some() || raw.seed.is_some() {
                return Err(HarnessError::parse(
                    0,
                    "instance.path",
                    "generation keys given alongside a file".into(),
                ));
            }
            InstanceSource::File(path)
        }
        (None, Some((line, instance_type))) => {
            let n = raw
                .n
                .ok_or_else(|| HarnessError::parse(line, "instance.n", "required when generating".into()))?;
            InstanceSource::Generate {
                instance_type,
                n,
                r: raw.r.unwrap_or(1000),
                s: raw.s.unwrap_or(0.5),
                seed: raw.seed.unwrap_or(0),
            }
        }
        (None, None) => {
            return Err(HarnessError::parse(
                0,
                "instance.type",
                "either instance.type or instance.path is required".into(),
            ))
        }
    };

    let spec = ExperimentSpec {
        instance,
        swarm_size: raw.swarm_size.unwrap_or(20),
        c1: raw.c1.unwrap_or(2.0),
        c2: raw.c2.unwrap_or(2.0),
        iterations: raw.iterations.unwrap_or(1000),
        repetitions: raw.repetitions.unwrap_or(20),
        base_seed: raw.base_seed.unwrap_or(0),
        variants: raw.variants,
        output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from("results")),
        traces: raw.traces.unwrap_or(TraceMode::Plain),
    };
    validate(&spec, variants_line)?;
    Ok(spec)
}

fn validate(spec: &ExperimentSpec, variants_line: usize) -> Result<(), HarnessError> {
    if spec.variants.is_empty() {
        return Err(HarnessError::parse(
            variants_line,
            "variants",
            "no variants given".into(),
        ));
    }
    if spec.repetitions == 0 {
        return Err(HarnessError::parse(0, "run.repetitions", "must be at least 1".into()));
    }
    if spec.swarm_size == 0 {
        return Err(HarnessError::parse(0, "swarm.size", "must be at least 1".into()));
    }
    for (key, c) in [("swarm.c1", spec.c1), ("swarm.c2", spec.c2)] {
        if !(c.is_finite() && c >= 0.0) {
            return Err(HarnessError::parse(0, key, format!("must be >= 0, got {c}")));
        }
    }
    let mut labels = HashSet::new();
    for v in &spec.variants {
        if !labels.insert(v.label()) {
            return Err(HarnessError::parse(
                variants_line,
                "variants",
                format!("duplicate variant {}", v.label()),
            ));
        }
        if !v.w.is_constant() && spec.iterations == 1 {
            return Err(HarnessError::parse(
                0,
                "run.iterations",
                format!("ramp {} needs at least 2 iterations", v.w),
            ));
        }
    }
    Ok(())
}
