//! Per-modulus experiment records, contiguous and sampled sweeps, and the
//! `V(N)` average with checkpointed resume.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heuristic::{
    average_heuristic, average_heuristic_intercept, average_heuristic_slope, g1, g2, h_of_count,
    least_squares_log_fit, LogFit,
};
use crate::hull::{compute_hull, Algorithm, Selection};
use crate::numtheory::{euler_phi, is_prime, t_ratio, tau, Ratio};
use crate::rng::CounterRng;
use crate::stats::{histogram, Bins, Histogram};

/// Values of `n` processed between two checkpoint writes.
pub const CHECKPOINT_INTERVAL: u64 = 100_000;

pub const RECORD_CSV_HEADER: &str =
    "n,v,tau_nm1,h,M,T_num,T_den,t,g1,g2,diff,diff_mod4_zero,algorithm";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub n: u64,
    pub v: u64,
    pub tau_nm1: u64,
    pub h: f64,
    #[serde(rename = "M")]
    pub max_diff: u64,
    #[serde(rename = "T_num")]
    pub t_num: u64,
    #[serde(rename = "T_den")]
    pub t_den: u64,
    /// `⌊(T(n-1) + 3)/4⌋`.
    pub t: u64,
    pub g1: f64,
    pub g2: f64,
    /// `v - 2(τ(n-1) - 1)`.
    pub diff: i64,
    pub diff_mod4_zero: bool,
    pub algorithm: Algorithm,
}

impl ExperimentRecord {
    pub fn t_ratio(&self) -> Ratio {
        Ratio::new(self.t_num, self.t_den)
    }

    /// One CSV row without the line terminator.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.n,
            self.v,
            self.tau_nm1,
            fmt_real(self.h),
            self.max_diff,
            self.t_num,
            self.t_den,
            self.t,
            fmt_real(self.g1),
            fmt_real(self.g2),
            self.diff,
            self.diff_mod4_zero,
            self.algorithm
        )
    }
}

/// Shortest round-trip decimal, padded to at least six significant digits.
pub fn fmt_real(x: f64) -> String {
    let s = format!("{x}");
    if !x.is_finite() {
        return s;
    }
    let digits = s.trim_start_matches('-').replace('.', "");
    let significant = digits.trim_start_matches('0').len();
    if significant >= 6 {
        return s;
    }
    let magnitude = if x == 0.0 {
        0
    } else {
        x.abs().log10().floor() as i32
    };
    let decimals = (5 - magnitude).max(0) as usize;
    let padded = format!("{x:.decimals$}");
    if padded.parse::<f64>().ok() == Some(x) {
        padded
    } else {
        s
    }
}

pub fn experiment_record(n: u64, selection: Selection) -> Result<ExperimentRecord> {
    let hull = compute_hull(n, selection)?;
    let tau_nm1 = tau(n - 1);
    let t = t_ratio(n - 1);
    let diff = hull.v as i64 - 2 * (tau_nm1 as i64 - 1);
    Ok(ExperimentRecord {
        n,
        v: hull.v as u64,
        tau_nm1,
        h: h_of_count(euler_phi(n) as f64),
        max_diff: hull.max_diff(),
        t_num: t.num,
        t_den: t.den,
        t: Ratio::new(t.num + 3 * t.den, 4 * t.den).floor(),
        g1: g1(n),
        g2: g2(n),
        diff,
        diff_mod4_zero: diff.rem_euclid(4) == 0,
        algorithm: hull.algorithm,
    })
}

/// Runs `f` on a dedicated pool of `workers` threads (`0` means rayon's
/// default).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Domain(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(f))
}

/// Resume state stored next to a sweep's output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub last_n: u64,
    /// `Σ v(n)` over the processed moduli.
    pub partial_sum: u64,
    pub count: u64,
    /// Running sums already captured at `V(N)` checkpoints, as `[N, Σ v]`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reached: Vec<[u64; 2]>,
}

impl Checkpoint {
    pub fn load(path: &Path) -> Result<Option<Checkpoint>> {
        match fs::read_to_string(path) {
            Ok(text) => serde_json::from_str(&text)
                .map(Some)
                .map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display()))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    /// Writes through a temporary file and a rename.
    pub fn store(&self, path: &Path) -> Result<()> {
        let tmp = sidecar(path, "tmp");
        fs::write(&tmp, serde_json::to_string(self)?)?;
        fs::rename(&tmp, path)?;
        Ok(())
    }
}

fn sidecar(path: &Path, ext: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// Checkpoint path of a batch writing to `out`.
pub fn checkpoint_path(out: &Path) -> PathBuf {
    sidecar(out, "ckpt.json")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchConfig {
    pub from: u64,
    pub to: u64,
    pub out: PathBuf,
    pub selection: Selection,
    pub resume: bool,
    pub interval: u64,
}

impl BatchConfig {
    pub fn new(from: u64, to: u64, out: impl Into<PathBuf>) -> Self {
        BatchConfig {
            from,
            to,
            out: out.into(),
            selection: Selection::Auto,
            resume: false,
            interval: CHECKPOINT_INTERVAL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchOutcome {
    pub rows: u64,
    pub resumed_from: Option<u64>,
    pub partial_sum: u64,
}

/// Truncates `out` to the header plus the rows with `n <= last_n` and
/// returns how many rows were kept.
fn truncate_rows(out: &Path, last_n: u64) -> Result<u64> {
    let file = File::open(out)?;
    let mut reader = BufReader::new(file);
    let mut line = String::new();
    let mut keep = 0u64;
    let mut rows = 0u64;
    let mut first = true;
    loop {
        line.clear();
        let read = reader.read_line(&mut line)?;
        if read == 0 || !line.ends_with('\n') {
            break;
        }
        if first {
            if line.trim_end() != RECORD_CSV_HEADER {
                return Err(Error::Checkpoint(format!(
                    "{} has an unexpected header",
                    out.display()
                )));
            }
            first = false;
        } else {
            let n: u64 = line
                .split(',')
                .next()
                .and_then(|f| f.parse().ok())
                .ok_or_else(|| Error::Checkpoint(format!("bad row in {}", out.display())))?;
            if n > last_n {
                break;
            }
            rows += 1;
        }
        keep += read as u64;
    }
    OpenOptions::new().write(true).open(out)?.set_len(keep)?;
    Ok(rows)
}

/// Writes one record per `n` in `[from, to]`, ascending, checkpointing after
/// every `interval` moduli. Output does not depend on the pool size.
pub fn run_batch(cfg: &BatchConfig) -> Result<BatchOutcome> {
    if cfg.from < 2 || cfg.from > cfg.to {
        return Err(Error::Domain(format!(
            "batch range [{}, {}] needs 2 <= from <= to",
            cfg.from, cfg.to
        )));
    }
    let ckpt_path = checkpoint_path(&cfg.out);
    let interval = cfg.interval.max(1);
    let mut state = Checkpoint {
        last_n: cfg.from - 1,
        partial_sum: 0,
        count: 0,
        reached: Vec::new(),
    };
    let mut resumed_from = None;
    let mut writer = match (cfg.resume, Checkpoint::load(&ckpt_path)?) {
        (true, Some(ck)) if cfg.out.exists() => {
            if ck.last_n + 1 < cfg.from
                || ck.last_n > cfg.to
                || ck.count != ck.last_n + 1 - cfg.from
            {
                return Err(Error::Checkpoint(format!(
                    "checkpoint at n = {} does not belong to the range [{}, {}]",
                    ck.last_n, cfg.from, cfg.to
                )));
            }
            let rows = truncate_rows(&cfg.out, ck.last_n)?;
            if rows != ck.count {
                return Err(Error::Checkpoint(format!(
                    "{} holds {rows} rows, checkpoint expects {}",
                    cfg.out.display(),
                    ck.count
                )));
            }
            resumed_from = Some(ck.last_n);
            state = ck;
            let mut f = OpenOptions::new().append(true).open(&cfg.out)?;
            f.seek(SeekFrom::End(0))?;
            BufWriter::new(f)
        }
        _ => {
            let mut w = BufWriter::new(File::create(&cfg.out)?);
            writeln!(w, "{RECORD_CSV_HEADER}")?;
            w.flush()?;
            state.store(&ckpt_path)?;
            w
        }
    };
    while state.last_n < cfg.to {
        let lo = state.last_n + 1;
        let hi = (state.last_n + interval).min(cfg.to);
        let records = (lo..=hi)
            .into_par_iter()
            .map(|n| experiment_record(n, cfg.selection))
            .collect::<Result<Vec<_>>>()?;
        for r in &records {
            writeln!(writer, "{}", r.csv_row())?;
            state.partial_sum += r.v;
        }
        writer.flush()?;
        state.count += records.len() as u64;
        state.last_n = hi;
        state.store(&ckpt_path)?;
    }
    Ok(BatchOutcome {
        rows: state.count,
        resumed_from,
        partial_sum: state.partial_sum,
    })
}

pub fn write_records<W: Write>(records: &[ExperimentRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{RECORD_CSV_HEADER}")?;
    for r in records {
        writeln!(out, "{}", r.csv_row())?;
    }
    out.flush()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleConfig {
    pub count: usize,
    pub min: u64,
    pub max: u64,
    pub seed: u64,
    pub primes_only: bool,
    pub selection: Selection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub seed: u64,
    pub count: usize,
    pub min: u64,
    pub max: u64,
    pub primes_only: bool,
    pub v_below_h: usize,
    pub fraction_v_below_h: f64,
    pub diff_zero: usize,
    pub fraction_diff_zero: f64,
    /// Rows with `diff = 0` and `t ∈ {1, 2}`.
    pub diff_zero_small_t: usize,
    pub diff_mod4_zero: usize,
    pub fraction_diff_mod4_zero: f64,
    /// Moduli whose `diff` is not a multiple of 4.
    pub mod4_failures: Vec<u64>,
    pub histogram_v: Histogram,
    /// Histogram of `(v - h)/h`.
    pub histogram_rel_diff: Histogram,
    pub histogram_diff: Histogram,
}

fn draw_modulus(cfg: &SampleConfig, index: u64) -> u64 {
    let mut rng = CounterRng::for_sample(cfg.seed, index);
    loop {
        let n = rng.random_range(cfg.min..=cfg.max);
        if !cfg.primes_only || is_prime(n) {
            return n;
        }
    }
}

/// Prime gaps below 2⁶⁴ are far shorter than this.
const PRIME_GAP_BOUND: u64 = 2_000;

/// Draws `count` moduli uniformly with replacement from `[min, max]` and
/// computes their records. Draw `i` depends only on `(seed, i)`.
pub fn run_sample(cfg: &SampleConfig) -> Result<(Vec<ExperimentRecord>, SampleSummary)> {
    if cfg.count == 0 {
        return Err(Error::Domain("sample count must be at least 1".into()));
    }
    if cfg.min < 2 || cfg.min > cfg.max {
        return Err(Error::Domain(format!(
            "sample range [{}, {}] needs 2 <= min <= max",
            cfg.min, cfg.max
        )));
    }
    if cfg.primes_only && cfg.max - cfg.min < PRIME_GAP_BOUND && !(cfg.min..=cfg.max).any(is_prime)
    {
        return Err(Error::Domain(format!(
            "no primes in [{}, {}]",
            cfg.min, cfg.max
        )));
    }
    let records = (0..cfg.count as u64)
        .into_par_iter()
        .map(|i| experiment_record(draw_modulus(cfg, i), cfg.selection))
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize_sample(cfg, &records)?;
    Ok((records, summary))
}

fn summarize_sample(cfg: &SampleConfig, records: &[ExperimentRecord]) -> Result<SampleSummary> {
    let m = records.len() as f64;
    let v_below_h = records.iter().filter(|r| (r.v as f64) < r.h).count();
    let diff_zero = records.iter().filter(|r| r.diff == 0).count();
    let diff_zero_small_t = records.iter().filter(|r| r.diff == 0 && r.t <= 2).count();
    let mod4_failures: Vec<u64> = records
        .iter()
        .filter(|r| !r.diff_mod4_zero)
        .map(|r| r.n)
        .collect();
    let diff_mod4_zero = records.len() - mod4_failures.len();
    let vs: Vec<f64> = records.iter().map(|r| r.v as f64).collect();
    let rel: Vec<f64> = records.iter().map(|r| (r.v as f64 - r.h) / r.h).collect();
    let diffs: Vec<f64> = records.iter().map(|r| r.diff as f64).collect();
    Ok(SampleSummary {
        seed: cfg.seed,
        count: records.len(),
        min: cfg.min,
        max: cfg.max,
        primes_only: cfg.primes_only,
        v_below_h,
        fraction_v_below_h: v_below_h as f64 / m,
        diff_zero,
        fraction_diff_zero: diff_zero as f64 / m,
        diff_zero_small_t,
        diff_mod4_zero,
        fraction_diff_mod4_zero: diff_mod4_zero as f64 / m,
        mod4_failures,
        histogram_v: histogram(&vs, &Bins::FreedmanDiaconis)?,
        histogram_rel_diff: histogram(&rel, &Bins::FreedmanDiaconis)?,
        histogram_diff: histogram(&diffs, &Bins::FreedmanDiaconis)?,
    })
}

/// Roughly `per_decade` logarithmically spaced integers in `[from, to]`,
/// always ending at `to`.
pub fn log_spaced_checkpoints(from: u64, to: u64, per_decade: u32) -> Vec<u64> {
    let from = from.max(2);
    if from > to {
        return Vec::new();
    }
    let ratio = 10f64.powf(1.0 / f64::from(per_decade.max(1)));
    let mut out = Vec::new();
    let mut x = from as f64;
    while x < to as f64 {
        let n = x.round() as u64;
        if out.last() != Some(&n) {
            out.push(n);
        }
        x *= ratio;
    }
    if out.last() != Some(&to) {
        out.push(to);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AverageConfig {
    pub to: u64,
    /// Values of `N` at which `V(N)` is reported; sorted and clipped to `[2, to]`.
    pub checkpoints: Vec<u64>,
    pub selection: Selection,
    /// Optional resume file.
    pub state: Option<PathBuf>,
    pub interval: u64,
}

impl AverageConfig {
    /// Eight checkpoints per decade from 10 to `to`.
    pub fn new(to: u64) -> Self {
        AverageConfig {
            to,
            checkpoints: log_spaced_checkpoints(10, to, 8),
            selection: Selection::Auto,
            state: None,
            interval: CHECKPOINT_INTERVAL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AveragePoint {
    pub n: u64,
    pub v_average: f64,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AverageReport {
    pub to: u64,
    pub points: Vec<AveragePoint>,
    /// Least squares of `V(N)` against `ln N` over `points`.
    pub fit: LogFit,
    pub h_slope: f64,
    pub h_intercept: f64,
}

/// Sweeps `v(n)` for `n = 2..=to`, recording `V(N)` at each checkpoint and
/// saving the running sums to `cfg.state` after every `interval` moduli.
pub fn run_average(cfg: &AverageConfig) -> Result<AverageReport> {
    if cfg.to < 10 {
        return Err(Error::Domain(format!(
            "average sweep needs to >= 10, got {}",
            cfg.to
        )));
    }
    let mut marks: Vec<u64> = cfg
        .checkpoints
        .iter()
        .copied()
        .filter(|&c| (2..=cfg.to).contains(&c))
        .collect();
    marks.sort_unstable();
    marks.dedup();
    if marks.len() < 2 {
        return Err(Error::Domain(
            "need at least two checkpoints in [2, to]".into(),
        ));
    }
    let mut state = Checkpoint {
        last_n: 1,
        partial_sum: 0,
        count: 0,
        reached: Vec::new(),
    };
    if let Some(path) = &cfg.state {
        if let Some(ck) = Checkpoint::load(path)? {
            if ck.last_n > cfg.to || ck.count + 1 != ck.last_n {
                return Err(Error::Checkpoint(format!(
                    "{} does not fit a sweep to {}",
                    path.display(),
                    cfg.to
                )));
            }
            state = ck;
        }
    }
    state.reached.retain(|[n, _]| marks.contains(n));
    let missing: Vec<u64> = marks
        .iter()
        .copied()
        .filter(|&c| c <= state.last_n && !state.reached.iter().any(|[n, _]| *n == c))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Checkpoint(format!(
            "state is past checkpoints {missing:?} that it did not record"
        )));
    }
    let interval = cfg.interval.max(1);
    while state.last_n < cfg.to {
        let lo = state.last_n + 1;
        let hi = (state.last_n + interval).min(cfg.to);
        let vs = (lo..=hi)
            .into_par_iter()
            .map(|n| compute_hull(n, cfg.selection).map(|h| h.v as u64))
            .collect::<Result<Vec<_>>>()?;
        for (n, v) in (lo..=hi).zip(vs) {
            state.partial_sum += v;
            state.count += 1;
            if marks.binary_search(&n).is_ok() {
                state.reached.push([n, state.partial_sum]);
            }
        }
        state.last_n = hi;
        if let Some(path) = &cfg.state {
            state.store(path)?;
        }
    }
    let mut reached = state.reached.clone();
    reached.sort_unstable();
    let points: Vec<AveragePoint> = reached
        .iter()
        .map(|&[n, sum]| AveragePoint {
            n,
            v_average: sum as f64 / (n - 1) as f64,
            h: average_heuristic(n),
        })
        .collect();
    let samples: Vec<(f64, f64)> = points.iter().map(|p| (p.n as f64, p.v_average)).collect();
    Ok(AverageReport {
        to: cfg.to,
        fit: least_squares_log_fit(&samples)?,
        points,
        h_slope: average_heuristic_slope(),
        h_intercept: average_heuristic_intercept(),
    })
}
