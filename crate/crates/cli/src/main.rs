use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use invhull::curves::{run_curve_experiment, write_curve_csv, CurveExperiment};
use invhull::experiment::{
    log_spaced_checkpoints, run_average, run_batch, run_sample, with_workers, write_records,
    AverageConfig, BatchConfig, SampleConfig, CHECKPOINT_INTERVAL,
};
use invhull::heuristic::{average_heuristic_intercept, delta_constant, eta, psi_three_quarters};
use invhull::hull::compute_hull;
use invhull::stats::{fit_loglogistic, fit_lognormal};
use invhull::Selection;

const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(
    name = "invhull",
    version,
    about = "Convex hulls of the modular inversion graph and related experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Auto,
    Search,
    Factor,
    Brute,
}

impl From<AlgorithmArg> for Selection {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Auto => Selection::Auto,
            AlgorithmArg::Search => Selection::Search,
            AlgorithmArg::Factor => Selection::Factor,
            AlgorithmArg::Brute => Selection::Brute,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    Lognormal,
    Loglogistic,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Hull of G_n as a JSON record or a vertex CSV.
    Hull {
        #[arg(long)]
        n: u64,
        #[arg(long, value_enum, default_value = "auto")]
        algorithm: AlgorithmArg,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// One record per n in [from, to], resumable.
    Batch {
        #[arg(long)]
        from: u64,
        #[arg(long)]
        to: u64,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Continue from the checkpoint next to the output file.
        #[arg(long)]
        resume: bool,
        #[arg(long, value_enum, default_value = "auto")]
        algorithm: AlgorithmArg,
        /// Moduli between checkpoint writes.
        #[arg(long, default_value_t = CHECKPOINT_INTERVAL)]
        interval: u64,
    },
    /// Seeded uniform sample of moduli, drawn with replacement.
    Sample {
        #[arg(long)]
        count: usize,
        #[arg(long)]
        min: u64,
        #[arg(long)]
        max: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Records CSV; the summary goes to <out>.summary.json.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        primes_only: bool,
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long, value_enum, default_value = "auto")]
        algorithm: AlgorithmArg,
    },
    /// V(N) at log-spaced checkpoints with a least-squares fit in ln N.
    Average {
        #[arg(long)]
        to: u64,
        /// Explicit comma-separated checkpoints; default is log-spaced.
        #[arg(long, value_delimiter = ',')]
        checkpoints: Vec<u64>,
        /// Log-spaced checkpoints per decade, starting at 10.
        #[arg(long, default_value_t = 8)]
        per_decade: u32,
        /// Report path; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Resume file holding the running sums.
        #[arg(long)]
        state: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long, value_enum, default_value = "auto")]
        algorithm: AlgorithmArg,
    },
    /// Prints eta, delta, psi(3/4) and the H(N) intercept.
    Constants,
    /// Hulls of random quadratic or cubic curves y = g(x) mod n.
    Curves {
        #[arg(long, default_value_t = 2)]
        degree: u8,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long)]
        nmin: Option<u64>,
        #[arg(long)]
        nmax: Option<u64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Prime moduli only (default range [7919, 611953]).
        #[arg(long)]
        primes: bool,
        /// Records CSV; the summary goes to <out>.summary.json.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Fits a lognormal and/or loglogistic law to one CSV column.
    Fit {
        #[arg(long)]
        input: PathBuf,
        /// Column name; `rel_diff` is derived as (v - h)/h when absent.
        #[arg(long)]
        column: String,
        #[arg(long, value_enum, default_value = "both")]
        model: ModelArg,
        #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
        shift: f64,
    },
}

/// Marks an error as a usage error regardless of its cause.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<Usage>() {
            return EXIT_USAGE;
        }
        if cause.is::<io::Error>() {
            return EXIT_IO;
        }
        if let Some(e) = cause.downcast_ref::<invhull::Error>() {
            return match e {
                invhull::Error::Io(_) | invhull::Error::Checkpoint(_) => EXIT_IO,
                _ => EXIT_USAGE,
            };
        }
        if let Some(e) = cause.downcast_ref::<csv::Error>() {
            return if e.is_io_error() { EXIT_IO } else { EXIT_USAGE };
        }
    }
    EXIT_USAGE
}

fn summary_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".summary.json");
    PathBuf::from(s)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn cmd_hull(n: u64, algorithm: AlgorithmArg, format: Format) -> Result<()> {
    let hull = compute_hull(n, algorithm.into())?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match format {
        Format::Json => writeln!(out, "{}", serde_json::to_string(&hull.record())?)?,
        Format::Csv => {
            writeln!(out, "a,b")?;
            for p in &hull.vertices {
                writeln!(out, "{},{}", p.x, p.y)?;
            }
        }
    }
    Ok(())
}

fn cmd_constants() -> Result<()> {
    println!("eta={:.6}", eta());
    println!("delta={:.6}", delta_constant());
    println!("psi_3_4={:.6}", psi_three_quarters());
    println!("H_intercept={:.6}", average_heuristic_intercept());
    Ok(())
}

fn cmd_sample(cfg: SampleConfig, out: &Path, workers: usize) -> Result<()> {
    let (records, summary) = with_workers(workers, || run_sample(&cfg))??;
    let mut w = create(out)?;
    write_records(&records, &mut w)?;
    write_json(&summary_path(out), &summary)?;
    eprintln!(
        "seed={} v<h={:.4} diff=0: {} mod4 failures: {}",
        summary.seed,
        summary.fraction_v_below_h,
        summary.diff_zero,
        summary.mod4_failures.len()
    );
    Ok(())
}

fn cmd_curves(cfg: CurveExperiment, out: &Path, workers: usize) -> Result<()> {
    let run = with_workers(workers, || run_curve_experiment(&cfg))??;
    let mut w = create(out)?;
    write_curve_csv(&run.records, &mut w)?;
    write_json(&summary_path(out), &run.summary)?;
    let s = &run.summary;
    eprintln!(
        "seed={} mean={:.4} min={:.4} max={:.4} {}={:.4} ks={}",
        s.seed,
        s.mean,
        s.min,
        s.max,
        s.estimator,
        s.rms,
        s.ks_normal.map_or("n/a".to_string(), |k| format!("{k:.4}"))
    );
    Ok(())
}

fn read_column(input: &Path, column: &str) -> Result<Vec<f64>> {
    let mut reader = csv::Reader::from_path(input)
        .with_context(|| format!("cannot read {}", input.display()))?;
    let headers = reader.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let parse = |rec: &csv::StringRecord, i: usize| -> Result<f64> {
        let field = rec.get(i).unwrap_or("");
        field.parse::<f64>().map_err(|_| {
            Usage(format!(
                "non-numeric value `{field}` in column {}",
                &headers[i]
            ))
            .into()
        })
    };
    let mut values = Vec::new();
    if let Some(i) = find(column) {
        for rec in reader.records() {
            values.push(parse(&rec?, i)?);
        }
    } else if let (true, Some(vi), Some(hi)) = (column == "rel_diff", find("v"), find("h")) {
        for rec in reader.records() {
            let rec = rec?;
            let (v, h) = (parse(&rec, vi)?, parse(&rec, hi)?);
            values.push((v - h) / h);
        }
    } else {
        return Err(Usage(format!("{} has no column `{column}`", input.display())).into());
    }
    Ok(values)
}

fn cmd_fit(input: &Path, column: &str, model: ModelArg, shift: f64) -> Result<()> {
    let data = read_column(input, column)?;
    let mut fits = serde_json::Map::new();
    if model != ModelArg::Loglogistic {
        fits.insert(
            "lognormal".into(),
            serde_json::to_value(fit_lognormal(&data, shift)?)?,
        );
    }
    if model != ModelArg::Lognormal {
        fits.insert(
            "loglogistic".into(),
            serde_json::to_value(fit_loglogistic(&data, shift)?)?,
        );
    }
    let output = if model == ModelArg::Both {
        let ks = |k: &str| fits[k]["gof"].as_f64().unwrap_or(f64::NAN);
        let better = if ks("lognormal") <= ks("loglogistic") {
            "lognormal"
        } else {
            "loglogistic"
        };
        fits.insert("smaller_ks".into(), better.into());
        serde_json::Value::Object(fits)
    } else {
        fits.into_iter().next().map(|(_, v)| v).unwrap_or_default()
    };
    println!("{}", serde_json::to_string_pretty(&output)?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Hull {
            n,
            algorithm,
            format,
        } => cmd_hull(n, algorithm, format),
        Command::Batch {
            from,
            to,
            out,
            workers,
            resume,
            algorithm,
            interval,
        } => {
            let cfg = BatchConfig {
                from,
                to,
                out,
                selection: algorithm.into(),
                resume,
                interval,
            };
            let outcome = with_workers(workers, || run_batch(&cfg))??;
            eprintln!(
                "rows={} resumed_from={:?}",
                outcome.rows, outcome.resumed_from
            );
            Ok(())
        }
        Command::Sample {
            count,
            min,
            max,
            seed,
            out,
            primes_only,
            workers,
            algorithm,
        } => {
            let cfg = SampleConfig {
                count,
                min,
                max,
                seed,
                primes_only,
                selection: algorithm.into(),
            };
            cmd_sample(cfg, &out, workers)
        }
        Command::Average {
            to,
            checkpoints,
            per_decade,
            out,
            state,
            workers,
            algorithm,
        } => {
            let mut cfg = AverageConfig::new(to);
            cfg.selection = algorithm.into();
            cfg.state = state;
            cfg.checkpoints = if checkpoints.is_empty() {
                log_spaced_checkpoints(10, to, per_decade)
            } else {
                checkpoints
            };
            let report = with_workers(workers, || run_average(&cfg))??;
            match out {
                Some(path) => write_json(&path, &report),
                None => {
                    println!("{}", serde_json::to_string_pretty(&report)?);
                    Ok(())
                }
            }
        }
        Command::Constants => cmd_constants(),
        Command::Curves {
            degree,
            count,
            nmin,
            nmax,
            seed,
            primes,
            out,
            workers,
        } => {
            if !(degree == 2 || degree == 3) {
                bail!(Usage(format!("degree must be 2 or 3, got {degree}")));
            }
            let mut cfg = CurveExperiment::new(degree, count, primes, seed);
            cfg.n_min = nmin.unwrap_or(cfg.n_min);
            cfg.n_max = nmax.unwrap_or(cfg.n_max);
            cmd_curves(cfg, &out, workers)
        }
        Command::Fit {
            input,
            column,
            model,
            shift,
        } => cmd_fit(&input, &column, model, shift),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
