//! Run orchestration: function-spec files, the JSON report envelope, and
//! one runner per CLI command. Every report echoes its configuration so a
//! re-run with the same echo reproduces the result fields bit for bit.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::constants::{block_size, lp_ball_volume, morrey_weight, LogReal};
use crate::error::{Error, Result};
use crate::function::{
    CosineSeries, FiniteGridFunction, GeometricTail, TorusFunction,
};
use crate::geometry::{DualExponent, SubtorusSpec, TorusPoint};
use crate::morrey::{chain_statistics, check_morrey, CheckOptions, MorreyMode};
use crate::rng::RandomStream;
use crate::search::{find_subtorus, spectrum_iterate, SearchOptions};

/// On-disk description of a function family.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum FunctionSpec {
    Cosine {
        coeffs: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        phases: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        offset: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tail: Option<TailSpec>,
    },
    Grid {
        resolution: Vec<usize>,
        values_file: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum TailSpec {
    Geometric { ratio: f64, from: u32 },
}

impl FunctionSpec {
    pub fn load(path: &Path) -> Result<FunctionSpec> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Build the function. `base_dir` resolves relative `values_file`
    /// paths (normally the spec file's directory).
    pub fn build(&self, base_dir: &Path) -> Result<Arc<dyn TorusFunction>> {
        match self {
            FunctionSpec::Cosine {
                coeffs,
                phases,
                offset,
                tail,
            } => {
                let mut f = match phases {
                    Some(ph) => CosineSeries::with_phases(coeffs.clone(), ph.clone())?,
                    None => CosineSeries::new(coeffs.clone()),
                };
                if let Some(off) = offset {
                    f = f.with_offset(*off);
                }
                if let Some(TailSpec::Geometric { ratio, from }) = tail {
                    f = f.with_geometric_tail(GeometricTail {
                        ratio: *ratio,
                        from: *from,
                    })?;
                }
                Ok(Arc::new(f))
            }
            FunctionSpec::Grid {
                resolution,
                values_file,
            } => {
                let path = if values_file.is_absolute() {
                    values_file.clone()
                } else {
                    base_dir.join(values_file)
                };
                let values = read_values_file(&path)?;
                Ok(Arc::new(FiniteGridFunction::new(
                    resolution.clone(),
                    values,
                )?))
            }
        }
    }
}

/// Row-major grid values: `.bin`/`.f64` files hold little-endian doubles,
/// anything else is parsed as CSV/whitespace-separated text.
fn read_values_file(path: &Path) -> Result<Vec<f64>> {
    let binary = matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("bin") | Some("f64")
    );
    if binary {
        let bytes = std::fs::read(path)?;
        if bytes.len() % 8 != 0 {
            return Err(Error::FunctionSpec(format!(
                "binary values file length {} is not a multiple of 8",
                bytes.len()
            )));
        }
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect())
    } else {
        let text = std::fs::read_to_string(path)?;
        text.split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<f64>().map_err(|_| {
                    Error::FunctionSpec(format!("bad value {t:?} in values file"))
                })
            })
            .collect()
    }
}

/// Loaded function together with its on-disk spec (for the config echo).
pub struct LoadedFunction {
    pub spec: FunctionSpec,
    pub function: Arc<dyn TorusFunction>,
}

pub fn load_function(path: &Path) -> Result<LoadedFunction> {
    let spec = FunctionSpec::load(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let function = spec.build(base)?;
    Ok(LoadedFunction { spec, function })
}

/// The report envelope every command emits on standard output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub config: Value,
    pub results: Value,
    pub wall_time_seconds: f64,
    pub version: String,
}

/// Run a command body and wrap its results with timing and version.
pub fn with_envelope(
    config: Value,
    body: impl FnOnce() -> Result<Value>,
) -> Result<Report> {
    let clock = Instant::now();
    let results = body()?;
    Ok(Report {
        config,
        results,
        wall_time_seconds: clock.elapsed().as_secs_f64(),
        version: env!("CARGO_PKG_VERSION").to_string(),
    })
}

fn indexed_entry(index: u32, v: LogReal) -> Value {
    json!({
        "index": index,
        "value": v.value(),
        "log10_value": v.log10_abs(),
    })
}

/// Ball volumes ω_{0,p}..ω_{n,p} as {index, value, log10_value}.
pub fn volumes_table(n: u32, d: &DualExponent) -> Value {
    Value::Array(
        (0..=n)
            .map(|k| indexed_entry(k, lp_ball_volume(k, d)))
            .collect(),
    )
}

/// Weights c_{ε,p,1}..c_{ε,p,count}.
pub fn weights_table(count: u32, eps: f64, d: &DualExponent) -> Result<Value> {
    Ok(Value::Array(
        (1..=count)
            .map(|i| Ok(indexed_entry(i, morrey_weight(i, eps, d)?)))
            .collect::<Result<_>>()?,
    ))
}

/// Block sizes #(B_1)..#(B_count).
pub fn blocks_table(count: u32, eps: f64, d: &DualExponent) -> Result<Value> {
    Ok(Value::Array(
        (1..=count)
            .map(|n| {
                let size = block_size(n, eps, d)?;
                Ok(json!({ "index": n, "size": size }))
            })
            .collect::<Result<_>>()?,
    ))
}

pub struct MorreyCheckArgs {
    pub n: u32,
    pub eps: f64,
    pub mode: MorreyMode,
    pub samples: u64,
    pub grid_resolution: u32,
}

pub fn run_morrey_check(
    f: &dyn TorusFunction,
    d: &DualExponent,
    args: &MorreyCheckArgs,
    rng: &RandomStream,
) -> Result<Value> {
    let opts = CheckOptions {
        samples: args.samples,
        grid_resolution: args.grid_resolution,
    };
    let cert = check_morrey(f, args.n, args.eps, d, args.mode, &opts, rng)?;
    Ok(serde_json::to_value(cert)?)
}

pub struct ChainArgs {
    pub n: u32,
    pub eps: f64,
    pub chains: u64,
    /// coordinates of the fixed start point (defaults to the origin)
    pub start: Option<Vec<f64>>,
    /// where to write the end-point CSV, if requested
    pub endpoints_csv: Option<PathBuf>,
}

pub fn run_chain_command(
    f: &dyn TorusFunction,
    d: &DualExponent,
    args: &ChainArgs,
    rng: &RandomStream,
) -> Result<Value> {
    let mut start = TorusPoint::origin(args.n);
    if let Some(coords) = &args.start {
        if coords.len() != args.n as usize {
            return Err(Error::DimensionMismatch(args.n, coords.len() as u32));
        }
        for (k, &v) in coords.iter().enumerate() {
            start.set(k as u32 + 1, crate::geometry::TorusCoordinate::new(v));
        }
    }
    let report = chain_statistics(f, args.n, args.eps, d, &start, args.chains, rng)?;
    if let Some(path) = &args.endpoints_csv {
        write_endpoints_csv(f, args, d, &start, path, rng)?;
    }
    Ok(serde_json::to_value(report)?)
}

/// End points of a fresh batch of chains as CSV: trial, coordinates, value.
fn write_endpoints_csv(
    f: &dyn TorusFunction,
    args: &ChainArgs,
    d: &DualExponent,
    start: &TorusPoint,
    path: &Path,
    rng: &RandomStream,
) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    let header: Vec<String> = std::iter::once("trial".to_string())
        .chain((1..=args.n).map(|i| format!("x{i}")))
        .chain(std::iter::once("value".to_string()))
        .collect();
    writeln!(out, "{}", header.join(","))?;
    for trial in 0..args.chains {
        let mut stream = rng.substream(trial);
        let state = crate::morrey::run_chain(f, args.n, args.eps, d, start, &mut stream)?;
        let end = state.end();
        let row: Vec<String> = std::iter::once(trial.to_string())
            .chain((1..=args.n).map(|i| format!("{:.17}", end.coord(i).value())))
            .chain(std::iter::once(format!("{:.17}", state.f_end())))
            .collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

pub struct FindSubtorusArgs {
    pub eps: f64,
    pub blocks: u32,
    pub max_attempts: u64,
    pub samples: u64,
    pub emit_subtorus: Option<PathBuf>,
}

pub fn run_find_subtorus(
    f: &dyn TorusFunction,
    d: &DualExponent,
    args: &FindSubtorusArgs,
    rng: &RandomStream,
) -> Result<Value> {
    let opts = SearchOptions {
        max_attempts: args.max_attempts,
        samples: args.samples,
        ..Default::default()
    };
    let outcome = find_subtorus(f, args.eps, d, args.blocks, &opts, rng)?;
    if let Some(path) = &args.emit_subtorus {
        let text = serde_json::to_string_pretty(&outcome.subtorus)?;
        std::fs::write(path, text)?;
    }
    Ok(serde_json::to_value(outcome)?)
}

pub struct SpectrumArgs {
    pub eps_schedule: Vec<f64>,
    pub block_schedule: Vec<u32>,
    pub max_attempts: u64,
    pub samples: u64,
    pub emit_subtorus: Option<PathBuf>,
}

pub fn run_spectrum(
    f: Arc<dyn TorusFunction>,
    d: &DualExponent,
    args: &SpectrumArgs,
    rng: &RandomStream,
) -> Result<Value> {
    let opts = SearchOptions {
        max_attempts: args.max_attempts,
        samples: args.samples,
        ..Default::default()
    };
    let (trace, value) =
        spectrum_iterate(f, &args.eps_schedule, d, &args.block_schedule, &opts, rng)?;
    if let Some(path) = &args.emit_subtorus {
        let text = serde_json::to_string_pretty(&value.certifying_subtorus)?;
        std::fs::write(path, text)?;
    }
    Ok(json!({ "trace": trace, "value": value }))
}

/// Exact analytic quantities for families that can supply them.
pub fn run_oracle(
    f: &dyn TorusFunction,
    d: &DualExponent,
    subtorus: Option<&SubtorusSpec>,
) -> Result<Value> {
    let horizon = f.support_horizon().max(1);
    let full = SubtorusSpec::full_torus(horizon);
    let sub = subtorus.unwrap_or(&full);
    let qnorms: Vec<Value> = (1..=horizon)
        .map(|i| match f.exact_partial_qnorm(i, d) {
            Some(v) => json!(v),
            None => Value::Null,
        })
        .collect();
    let osc = f.exact_osc_on(sub);
    let mean = f.exact_mean_on(sub);
    if osc.is_none() && mean.is_none() && qnorms.iter().all(Value::is_null) {
        return Err(Error::FunctionSpec(
            "unsupported oracle: this family has no exact quantities".into(),
        ));
    }
    Ok(json!({
        "lipschitz_constant": f.lipschitz_constant(d),
        "support_horizon": horizon,
        "partial_qnorms": qnorms,
        "oscillation": osc,
        "mean": mean,
    }))
}

/// Exit code for an error, per the process contract: 2 for configuration
/// and validation failures, 3 for search exhaustion, 70 for internal
/// invariant breaches (a bug, never user error).
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::SearchExhausted { .. } => 3,
        Error::Invariant(_) => 70,
        _ => 2,
    }
}
