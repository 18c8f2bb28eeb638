//! Benchmark harness: size sweeps, ratio reports and threshold scans.
//!
//! Every timed repetition is validated before its time is kept: a few
//! random lanes of the output are checked against the double-precision lane
//! operator. A failed check aborts the run with [`BenchError::Validation`].

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dense::{Backend, MatrixBuffer};
use crate::element::{ElemKind, Element};
use crate::error::LinalgError;
use crate::oracle::LaneOperator;
use crate::random::{dominant_triangle, seeded, uniform_matrix, Opposite};
use crate::recursion::{rec_trmm, rec_trsm, OpKind, Threshold};
use crate::variants::{Side, TriangularSpec};

pub const SWEEP_HEADER: &str = "op,variant,n,m,threshold,backend,elem,median_time_s,min_time_s,gflops";
pub const RATIO_HEADER: &str = "op,variant,n,m,baseline_s,candidate_s,ratio_percent";

/// Lanes of `B` checked per repetition.
pub const SAMPLED_LANES: usize = 8;
/// Residual tolerance factor: results must satisfy `residual <= factor * n * eps`.
pub const RESIDUAL_FACTOR: f64 = 32.0;
const INPUT_RETRIES: u64 = 10;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Linalg(#[from] LinalgError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("residual check failed for {op} {variant} n={n} m={m}: {residual:.3e} > {tolerance:.3e}")]
    Validation {
        op: OpKind,
        variant: String,
        n: usize,
        m: usize,
        residual: f64,
        tolerance: f64,
    },

    #[error("could not generate a nonsingular input for n={n} after {attempts} attempts")]
    Singular { n: usize, attempts: u64 },

    #[error("baseline and candidate keys differ; missing from candidate: [{}]; missing from baseline: [{}]", .missing_in_candidate.join(", "), .missing_in_baseline.join(", "))]
    Join {
        missing_in_candidate: Vec<String>,
        missing_in_baseline: Vec<String>,
    },
}

impl BenchError {
    /// Process exit code for the CLI: 1 for a failed residual check, 2 for
    /// everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Validation { .. } => 1,
            _ => 2,
        }
    }
}

pub type BenchResult<T> = std::result::Result<T, BenchError>;

/// Width of `B` as a function of `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MMode {
    Fixed(usize),
    Square,
}

impl MMode {
    pub fn m_for(self, n: usize) -> usize {
        match self {
            MMode::Fixed(m) => m,
            MMode::Square => n,
        }
    }
}

impl fmt::Display for MMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MMode::Fixed(m) => write!(f, "fixed:{m}"),
            MMode::Square => f.write_str("square"),
        }
    }
}

impl FromStr for MMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "square" {
            return Ok(MMode::Square);
        }
        let width = s
            .strip_prefix("fixed:")
            .ok_or_else(|| format!("expected fixed:K or square, got `{s}`"))?;
        match width.parse::<usize>() {
            Ok(m) if m >= 1 => Ok(MMode::Fixed(m)),
            _ => Err(format!("fixed width must be a positive integer, got `{width}`")),
        }
    }
}

/// Deliberate output corruption, used to check that validation catches a
/// broken kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fault {
    #[default]
    None,
    /// Add 1 to every entry of `B` after each timed call.
    PerturbOutput,
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub op: OpKind,
    pub spec: TriangularSpec,
    pub sizes: Vec<usize>,
    pub m_mode: MMode,
    pub threshold: Threshold,
    pub backend: Backend,
    pub reps: usize,
    pub warmup: usize,
    pub out: Option<PathBuf>,
    pub elem: ElemKind,
    pub seed: u64,
    pub fault: Fault,
}

impl BenchConfig {
    pub fn new(op: OpKind, spec: TriangularSpec, sizes: Vec<usize>) -> Self {
        BenchConfig {
            op,
            spec,
            sizes,
            m_mode: MMode::Fixed(256),
            threshold: Threshold::default(),
            backend: Backend::parallel(),
            reps: 5,
            warmup: 2,
            out: None,
            elem: ElemKind::F64,
            seed: 0,
            fault: Fault::None,
        }
    }

    pub fn validate(&self) -> BenchResult<()> {
        if self.reps == 0 {
            return Err(BenchError::Config("repetitions must be at least 1".into()));
        }
        if self.sizes.is_empty() {
            return Err(BenchError::Config("size list is empty".into()));
        }
        if self.sizes.contains(&0) || self.m_mode == MMode::Fixed(0) {
            return Err(BenchError::Config("sizes must be at least 1".into()));
        }
        self.spec.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub op: String,
    pub variant: String,
    pub n: usize,
    pub m: usize,
    pub threshold: usize,
    pub backend: String,
    pub elem: String,
    pub median_time_s: f64,
    pub min_time_s: f64,
    pub gflops: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRecord {
    pub op: String,
    pub variant: String,
    pub n: usize,
    pub m: usize,
    pub baseline_s: f64,
    pub candidate_s: f64,
    pub ratio_percent: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossoverRow {
    pub n: usize,
    pub threshold: usize,
    pub median_time_s: f64,
}

/// `n^2 * m`: one multiply and one add per stored entry of the triangle per
/// lane.
pub fn flop_count(n: usize, m: usize) -> f64 {
    (n as f64) * (n as f64) * (m as f64)
}

pub fn percent_ratio(baseline_s: f64, candidate_s: f64) -> f64 {
    // Divide first so equal times give exactly 100.
    100.0 * (baseline_s / candidate_s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timing {
    pub median_s: f64,
    pub min_s: f64,
}

fn summarize(mut samples: Vec<f64>) -> Timing {
    samples.sort_by(f64::total_cmp);
    let len = samples.len();
    let median_s = if len % 2 == 1 {
        samples[len / 2]
    } else {
        0.5 * (samples[len / 2 - 1] + samples[len / 2])
    };
    Timing {
        median_s,
        min_s: samples[0],
    }
}

/// Inputs for one problem size, generated once and reused by every
/// repetition.
struct Problem<T: Element> {
    a: MatrixBuffer<T>,
    b0: MatrixBuffer<T>,
    lane_op: LaneOperator,
    lane_norm: f64,
}

impl<T: Element> Problem<T> {
    fn generate(op: OpKind, spec: &TriangularSpec, n: usize, m: usize, seed: u64) -> BenchResult<Self> {
        let (rows, cols) = match spec.side {
            Side::Left => (n, m),
            Side::Right => (m, n),
        };
        for attempt in 0..INPUT_RETRIES {
            let mut rng = seeded(seed ^ ((n as u64) << 20) ^ attempt);
            let a: MatrixBuffer<T> = dominant_triangle(n, spec.uplo, spec.diag, Opposite::Zero, &mut rng);
            let lane_op = LaneOperator::new(spec, a.as_ref())?;
            if op == OpKind::Trsm && lane_op.first_zero_pivot().is_some() {
                continue;
            }
            let b0 = uniform_matrix(rows, cols, &mut rng);
            let lane_norm = lane_op.norm_inf();
            return Ok(Problem {
                a,
                b0,
                lane_op,
                lane_norm,
            });
        }
        Err(BenchError::Singular {
            n,
            attempts: INPUT_RETRIES,
        })
    }

    fn lane(&self, side: Side, m: &MatrixBuffer<T>, lane: usize) -> Vec<f64> {
        match side {
            Side::Left => (0..m.rows()).map(|i| m.get(i, lane).to_f64()).collect(),
            Side::Right => (0..m.cols()).map(|j| m.get(lane, j).to_f64()).collect(),
        }
    }

    /// Largest relative residual over `lanes` of the output `out`.
    fn residual(&self, op: OpKind, spec: &TriangularSpec, out: &MatrixBuffer<T>, lanes: &[usize]) -> f64 {
        let alpha = spec.alpha;
        let mut worst: f64 = 0.0;
        for &lane in lanes {
            let b = self.lane(spec.side, &self.b0, lane);
            let y = self.lane(spec.side, out, lane);
            let (err, den) = match op {
                OpKind::Trmm => {
                    let expected = self.lane_op.apply(&b);
                    let err = max_abs_diff(y.iter().copied(), expected.iter().map(|v| alpha * v));
                    (err, alpha.abs() * self.lane_norm * max_abs(&b))
                }
                OpKind::Trsm => {
                    let ax = self.lane_op.apply(&y);
                    let err = max_abs_diff(ax.iter().copied(), b.iter().map(|v| alpha * v));
                    (err, self.lane_norm * max_abs(&y))
                }
            };
            let rel = if err == 0.0 {
                0.0
            } else if err.is_nan() || den == 0.0 || !den.is_finite() {
                f64::INFINITY
            } else {
                err / den
            };
            worst = worst.max(rel);
        }
        worst
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter()
        .fold(0.0, |acc: f64, x| if x.is_nan() { f64::NAN } else { acc.max(x.abs()) })
}

fn max_abs_diff(a: impl Iterator<Item = f64>, b: impl Iterator<Item = f64>) -> f64 {
    a.zip(b).fold(0.0, |acc: f64, (x, y)| {
        let d = (x - y).abs();
        if d.is_nan() || acc.is_nan() {
            f64::NAN
        } else {
            acc.max(d)
        }
    })
}

struct Measurement<'c> {
    op: OpKind,
    spec: &'c TriangularSpec,
    backend: &'c Backend,
    reps: usize,
    warmup: usize,
    seed: u64,
    fault: Fault,
}

impl Measurement<'_> {
    fn run_once<T: Element>(
        &self,
        problem: &Problem<T>,
        threshold: Threshold,
        b: &mut MatrixBuffer<T>,
    ) -> BenchResult<f64> {
        b.as_mut_slice().copy_from_slice(problem.b0.as_slice());
        let start = Instant::now();
        match self.op {
            OpKind::Trmm => rec_trmm(self.spec, problem.a.as_ref(), b.as_mut(), threshold, self.backend)?,
            OpKind::Trsm => rec_trsm(self.spec, problem.a.as_ref(), b.as_mut(), threshold, self.backend)?,
        }
        let elapsed = start.elapsed().as_secs_f64();
        if self.fault == Fault::PerturbOutput {
            for v in b.as_mut_slice() {
                *v = *v + T::one();
            }
        }
        Ok(elapsed)
    }

    fn time<T: Element>(&self, problem: &Problem<T>, n: usize, m: usize, threshold: Threshold) -> BenchResult<Timing> {
        let mut b = problem.b0.clone();
        for _ in 0..self.warmup {
            self.run_once(problem, threshold, &mut b)?;
        }
        let tolerance = RESIDUAL_FACTOR * n as f64 * T::KIND.epsilon();
        let mut rng = seeded(self.seed.wrapping_add(n as u64));
        let mut samples = Vec::with_capacity(self.reps);
        for _ in 0..self.reps {
            let elapsed = self.run_once(problem, threshold, &mut b)?;
            let lanes = sample_lanes(&mut rng, m, SAMPLED_LANES);
            let residual = problem.residual(self.op, self.spec, &b, &lanes);
            // NaN residuals must fail too.
            if residual.is_nan() || residual > tolerance {
                return Err(BenchError::Validation {
                    op: self.op,
                    variant: self.spec.variant_name(),
                    n,
                    m,
                    residual,
                    tolerance,
                });
            }
            samples.push(elapsed);
        }
        Ok(summarize(samples))
    }
}

/// Time each size in `config.sizes` and optionally write the CSV.
pub fn run_sweep(config: &BenchConfig) -> BenchResult<Vec<BenchRecord>> {
    config.validate()?;
    let records = match config.elem {
        ElemKind::F32 => sweep_typed::<f32>(config)?,
        ElemKind::F64 => sweep_typed::<f64>(config)?,
    };
    if let Some(path) = &config.out {
        write_csv(path, &records)?;
    }
    Ok(records)
}

fn sweep_typed<T: Element>(config: &BenchConfig) -> BenchResult<Vec<BenchRecord>> {
    let measure = Measurement {
        op: config.op,
        spec: &config.spec,
        backend: &config.backend,
        reps: config.reps,
        warmup: config.warmup,
        seed: config.seed,
        fault: config.fault,
    };
    let mut records = Vec::with_capacity(config.sizes.len());
    for &n in &config.sizes {
        let m = config.m_mode.m_for(n);
        let problem = Problem::<T>::generate(config.op, &config.spec, n, m, config.seed)?;
        let timing = measure.time(&problem, n, m, config.threshold)?;
        records.push(BenchRecord {
            op: config.op.to_string(),
            variant: config.spec.variant_name(),
            n,
            m,
            threshold: config.threshold.get(),
            backend: config.backend.name().to_string(),
            elem: T::KIND.to_string(),
            median_time_s: timing.median_s,
            min_time_s: timing.min_s,
            gflops: flop_count(n, m) / timing.median_s / 1e9,
        });
    }
    Ok(records)
}

/// Median time for every `(n, threshold)` pair. Inputs for each `n` are
/// shared across thresholds; `m` follows `config.m_mode` and
/// `config.threshold` is ignored.
pub fn crossover_scan(config: &BenchConfig, thresholds: &[usize]) -> BenchResult<Vec<CrossoverRow>> {
    config.validate()?;
    let thresholds = thresholds
        .iter()
        .map(|&t| Threshold::new(t))
        .collect::<Result<Vec<_>, _>>()?;
    match config.elem {
        ElemKind::F32 => scan_typed::<f32>(config, &thresholds),
        ElemKind::F64 => scan_typed::<f64>(config, &thresholds),
    }
}

fn scan_typed<T: Element>(config: &BenchConfig, thresholds: &[Threshold]) -> BenchResult<Vec<CrossoverRow>> {
    let measure = Measurement {
        op: config.op,
        spec: &config.spec,
        backend: &config.backend,
        reps: config.reps,
        warmup: config.warmup,
        seed: config.seed,
        fault: config.fault,
    };
    let mut rows = Vec::new();
    for &n in &config.sizes {
        let m = config.m_mode.m_for(n);
        let problem = Problem::<T>::generate(config.op, &config.spec, n, m, config.seed)?;
        for &threshold in thresholds {
            let timing = measure.time(&problem, n, m, threshold)?;
            rows.push(CrossoverRow {
                n,
                threshold: threshold.get(),
                median_time_s: timing.median_s,
            });
        }
    }
    Ok(rows)
}

fn csv_error(path: &Path) -> impl FnOnce(csv::Error) -> BenchError + '_ {
    move |source| BenchError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn write_rows<R: Serialize>(path: &Path, rows: &[R], header: &str) -> BenchResult<()> {
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(csv_error(path))?;
    writer.write_record(header.split(',')).map_err(csv_error(path))?;
    for row in rows {
        writer.serialize(row).map_err(csv_error(path))?;
    }
    writer.flush().map_err(|source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_csv(path: &Path, records: &[BenchRecord]) -> BenchResult<()> {
    write_rows(path, records, SWEEP_HEADER)
}

pub fn write_ratio_csv(path: &Path, records: &[RatioRecord]) -> BenchResult<()> {
    write_rows(path, records, RATIO_HEADER)
}

pub fn read_csv(path: &Path) -> BenchResult<Vec<BenchRecord>> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_error(path))?;
    let header = reader.headers().map_err(csv_error(path))?;
    if header.iter().collect::<Vec<_>>().join(",") != SWEEP_HEADER {
        return Err(BenchError::Config(format!(
            "{}: header is not `{SWEEP_HEADER}`",
            path.display()
        )));
    }
    reader
        .deserialize()
        .collect::<Result<Vec<BenchRecord>, _>>()
        .map_err(csv_error(path))
}

type Key = (String, String, usize, usize);

fn key_name(k: &Key) -> String {
    format!("{}/{}/n={}/m={}", k.0, k.1, k.2, k.3)
}

fn index_by_key(path: &Path, records: Vec<BenchRecord>) -> BenchResult<BTreeMap<Key, f64>> {
    let mut map = BTreeMap::new();
    for r in records {
        let key = (r.op, r.variant, r.n, r.m);
        if map.insert(key.clone(), r.median_time_s).is_some() {
            return Err(BenchError::Config(format!(
                "{}: duplicate key {}",
                path.display(),
                key_name(&key)
            )));
        }
    }
    Ok(map)
}

/// Join two sweep CSVs on `(op, variant, n, m)` and report
/// `100 * baseline / candidate` per key. Writes the ratio CSV when `out` is
/// given.
pub fn ratio_report(baseline: &Path, candidate: &Path, out: Option<&Path>) -> BenchResult<Vec<RatioRecord>> {
    let base = index_by_key(baseline, read_csv(baseline)?)?;
    let cand = index_by_key(candidate, read_csv(candidate)?)?;
    let missing_in_candidate: Vec<String> = base.keys().filter(|k| !cand.contains_key(*k)).map(key_name).collect();
    let missing_in_baseline: Vec<String> = cand.keys().filter(|k| !base.contains_key(*k)).map(key_name).collect();
    if !missing_in_candidate.is_empty() || !missing_in_baseline.is_empty() {
        return Err(BenchError::Join {
            missing_in_candidate,
            missing_in_baseline,
        });
    }
    let records: Vec<RatioRecord> = base
        .into_iter()
        .map(|(key, baseline_s)| {
            let candidate_s = cand[&key];
            RatioRecord {
                op: key.0,
                variant: key.1,
                n: key.2,
                m: key.3,
                baseline_s,
                candidate_s,
                ratio_percent: percent_ratio(baseline_s, candidate_s),
            }
        })
        .collect();
    if let Some(path) = out {
        write_ratio_csv(path, &records)?;
    }
    Ok(records)
}

/// Pick `count` distinct lanes out of `total` (all of them when
/// `count >= total`).
pub fn sample_lanes<R: Rng>(rng: &mut R, total: usize, count: usize) -> Vec<usize> {
    sample(rng, total, count.min(total)).into_vec()
}
