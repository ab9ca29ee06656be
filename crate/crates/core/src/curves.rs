//! Hulls of polynomial curves `y ≡ g(x) (mod n)` for quadratic and cubic `g`.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{convex_hull_sorted, Point};
use crate::heuristic::h_of_count;
use crate::numtheory::primes_up_to;
use crate::rng::CounterRng;
use crate::stats::{fit_centered_normal, summarize, MIN_FIT_SAMPLES};

/// Modulus range of the composite-modulus experiment.
pub const DEFAULT_RANGE: (u64, u64) = (10_000, 300_000);

/// Modulus range of the prime-modulus experiment.
pub const DEFAULT_PRIME_RANGE: (u64, u64) = (7_919, 611_953);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurveSpec {
    pub n: u64,
    pub degree: u8,
    /// Leading coefficient first: `a, b, c` or `a, b, c, d`.
    pub coefficients: Vec<u64>,
    pub is_prime_modulus: bool,
}

impl CurveSpec {
    /// Reduces the coefficients mod `n`; the leading one must stay nonzero.
    pub fn new(n: u64, coefficients: &[u64]) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidModulus {
                n,
                reason: "curves need n >= 3",
            });
        }
        let degree = match coefficients.len() {
            3 => 2,
            4 => 3,
            len => {
                return Err(Error::Domain(format!(
                    "expected 3 or 4 coefficients, got {len}"
                )))
            }
        };
        let coefficients: Vec<u64> = coefficients.iter().map(|c| c % n).collect();
        if coefficients[0] == 0 {
            return Err(Error::Domain(format!(
                "leading coefficient vanishes mod {n}"
            )));
        }
        Ok(CurveSpec {
            n,
            degree,
            coefficients,
            is_prime_modulus: crate::numtheory::is_prime(n),
        })
    }

    /// `g(x) mod n`.
    pub fn eval(&self, x: u64) -> u64 {
        let n = self.n as u128;
        let x = x as u128 % n;
        self.coefficients
            .iter()
            .fold(0u128, |acc, &c| (acc * x + c as u128) % n) as u64
    }
}

/// `{(x, g(x) mod n) : 0 <= x < n}`, in increasing `x`.
pub fn curve_points(spec: &CurveSpec) -> Vec<Point> {
    (0..spec.n)
        .map(|x| Point::new(x as i64, spec.eval(x) as i64))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRecord {
    pub spec: CurveSpec,
    pub point_count: u64,
    /// Number of hull vertices, or of extreme points when degenerate.
    pub w: usize,
    pub h: f64,
    pub rel_diff: f64,
    /// All points collinear.
    pub degenerate: bool,
}

pub fn curve_hull_count(spec: &CurveSpec) -> CurveRecord {
    let points = curve_points(spec);
    let hull = convex_hull_sorted(&points);
    let w = hull.vertices.len();
    let h = h_of_count(points.len() as f64);
    CurveRecord {
        spec: spec.clone(),
        point_count: points.len() as u64,
        w,
        h,
        rel_diff: (w as f64 - h) / h,
        degenerate: hull.degenerate,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveExperiment {
    pub degree: u8,
    pub count: usize,
    pub n_min: u64,
    pub n_max: u64,
    /// Draw `n` uniformly from the primes in range instead of all integers.
    pub primes: bool,
    pub seed: u64,
}

impl CurveExperiment {
    pub fn new(degree: u8, count: usize, primes: bool, seed: u64) -> Self {
        let (n_min, n_max) = if primes {
            DEFAULT_PRIME_RANGE
        } else {
            DEFAULT_RANGE
        };
        CurveExperiment {
            degree,
            count,
            n_min,
            n_max,
            primes,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSummary {
    pub seed: u64,
    pub degree: u8,
    pub primes: bool,
    pub n_min: u64,
    pub n_max: u64,
    pub count: usize,
    pub degenerate: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    /// `sigma_F` for composite moduli, `rho_F` for prime moduli.
    pub estimator: String,
    /// Root mean square of `w/h - 1` over non-degenerate samples.
    pub rms: f64,
    /// KS distance to the centred normal with standard deviation `rms`.
    pub ks_normal: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRun {
    pub records: Vec<CurveRecord>,
    pub summary: CurveSummary,
}

fn sample_spec(cfg: &CurveExperiment, primes: &[u64], index: u64) -> Result<CurveSpec> {
    let mut rng = CounterRng::for_sample(cfg.seed, index);
    let n = if cfg.primes {
        primes[rng.random_range(0..primes.len())]
    } else {
        rng.random_range(cfg.n_min..=cfg.n_max)
    };
    let mut coefficients = Vec::with_capacity(cfg.degree as usize + 1);
    coefficients.push(rng.random_range(1..n));
    for _ in 0..cfg.degree {
        coefficients.push(rng.random_range(0..n));
    }
    CurveSpec::new(n, &coefficients)
}

/// Runs the seeded experiment on the current rayon pool. Sample `i` depends
/// only on `(seed, i)`.
pub fn run_curve_experiment(cfg: &CurveExperiment) -> Result<CurveRun> {
    if !(cfg.degree == 2 || cfg.degree == 3) {
        return Err(Error::Domain(format!(
            "degree must be 2 or 3, got {}",
            cfg.degree
        )));
    }
    if cfg.count == 0 {
        return Err(Error::Domain("count must be at least 1".into()));
    }
    if cfg.n_min < 3 || cfg.n_min > cfg.n_max {
        return Err(Error::Domain(format!(
            "modulus range [{}, {}] must satisfy 3 <= min <= max",
            cfg.n_min, cfg.n_max
        )));
    }
    let primes: Vec<u64> = if cfg.primes {
        primes_up_to(cfg.n_max)
            .into_iter()
            .filter(|&p| p >= cfg.n_min)
            .collect()
    } else {
        Vec::new()
    };
    if cfg.primes && primes.is_empty() {
        return Err(Error::Domain(format!(
            "no primes in [{}, {}]",
            cfg.n_min, cfg.n_max
        )));
    }
    let records = (0..cfg.count as u64)
        .into_par_iter()
        .map(|i| sample_spec(cfg, &primes, i).map(|spec| curve_hull_count(&spec)))
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize_run(cfg, &records);
    Ok(CurveRun { records, summary })
}

fn summarize_run(cfg: &CurveExperiment, records: &[CurveRecord]) -> CurveSummary {
    let diffs: Vec<f64> = records
        .iter()
        .filter(|r| !r.degenerate)
        .map(|r| r.rel_diff)
        .collect();
    let s = summarize(&diffs);
    let ks_normal = if diffs.len() >= MIN_FIT_SAMPLES {
        fit_centered_normal(&diffs, 0.0).ok().map(|f| f.gof)
    } else {
        None
    };
    CurveSummary {
        seed: cfg.seed,
        degree: cfg.degree,
        primes: cfg.primes,
        n_min: cfg.n_min,
        n_max: cfg.n_max,
        count: diffs.len(),
        degenerate: records.len() - diffs.len(),
        mean: s.map_or(f64::NAN, |s| s.mean),
        std: s.map_or(f64::NAN, |s| s.std),
        min: s.map_or(f64::NAN, |s| s.min),
        max: s.map_or(f64::NAN, |s| s.max),
        estimator: if cfg.primes { "rho_F" } else { "sigma_F" }.to_string(),
        rms: s.map_or(f64::NAN, |s| s.rms),
        ks_normal,
    }
}

pub const CURVE_CSV_HEADER: &str = "index,n,degree,a,b,c,d,points,w,h,rel_diff";

pub fn write_curve_csv<W: Write>(records: &[CurveRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CURVE_CSV_HEADER}")?;
    for (i, r) in records.iter().enumerate() {
        let c = &r.spec.coefficients;
        let d = c.get(3).map(u64::to_string).unwrap_or_default();
        writeln!(
            out,
            "{i},{},{},{},{},{},{d},{},{},{:.6},{:.6}",
            r.spec.n, r.spec.degree, c[0], c[1], c[2], r.point_count, r.w, r.h, r.rel_diff
        )?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::convex_hull;

    #[test]
    fn square_mod_five() {
        let spec = CurveSpec::new(5, &[1, 0, 0]).unwrap();
        let pts: Vec<(i64, i64)> = curve_points(&spec).iter().map(|p| (p.x, p.y)).collect();
        assert_eq!(pts, vec![(0, 0), (1, 1), (2, 4), (3, 4), (4, 1)]);
        let rec = curve_hull_count(&spec);
        assert_eq!(rec.w, 4);
        assert!(!rec.degenerate);
        assert_eq!(rec.point_count, 5);
        assert!((rec.rel_diff - (rec.w as f64 / rec.h - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn effectively_constant_curve_is_degenerate() {
        // 2x² + 2x = 2x(x + 1) ≡ 0 (mod 4)
        let spec = CurveSpec::new(4, &[2, 2, 1]).unwrap();
        assert!(curve_points(&spec).iter().all(|p| p.y == 1));
        let rec = curve_hull_count(&spec);
        assert!(rec.degenerate);
        assert_eq!(rec.w, 2);
    }

    #[test]
    fn spec_validation() {
        assert!(CurveSpec::new(7, &[7, 1, 1]).is_err());
        assert!(CurveSpec::new(2, &[1, 1, 1]).is_err());
        assert!(CurveSpec::new(7, &[1, 1]).is_err());
        let s = CurveSpec::new(7, &[8, 9, 10, 11]).unwrap();
        assert_eq!(
            (s.degree, s.coefficients.clone(), s.is_prime_modulus),
            (3, vec![1, 2, 3, 4], true)
        );
        assert_eq!(s.eval(2), (8 + 4 * 2 + 3 * 2 + 4) % 7);
    }

    #[test]
    fn hull_matches_generic_oracle() {
        let cfg = CurveExperiment {
            degree: 2,
            count: 100,
            n_min: 3,
            n_max: 2000,
            primes: false,
            seed: 11,
        };
        let cubic = CurveExperiment {
            degree: 3,
            ..cfg.clone()
        };
        for cfg in [cfg, cubic] {
            for rec in run_curve_experiment(&cfg).unwrap().records {
                let pts = curve_points(&rec.spec);
                assert!(pts.iter().all(|p| (0..rec.spec.n as i64).contains(&p.y)));
                let mut shuffled = pts.clone();
                shuffled.reverse();
                let oracle = convex_hull(&shuffled);
                assert_eq!(oracle.vertices.len(), rec.w);
                assert_eq!(oracle.degenerate, rec.degenerate);
                if rec.spec.n >= 5 && !rec.degenerate {
                    assert!(rec.w >= 3);
                }
            }
        }
    }

    #[test]
    fn experiment_is_deterministic_across_pools() {
        let cfg = CurveExperiment {
            degree: 3,
            count: 40,
            n_min: 1_000,
            n_max: 5_000,
            primes: false,
            seed: 3,
        };
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let many = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap();
        let a = one.install(|| run_curve_experiment(&cfg)).unwrap();
        let b = many.install(|| run_curve_experiment(&cfg)).unwrap();
        assert_eq!(a, b);
        let (mut x, mut y) = (Vec::new(), Vec::new());
        write_curve_csv(&a.records, &mut x).unwrap();
        write_curve_csv(&b.records, &mut y).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn prime_mode_and_errors() {
        let mut cfg = CurveExperiment::new(2, 10, true, 1);
        assert_eq!((cfg.n_min, cfg.n_max), DEFAULT_PRIME_RANGE);
        cfg.n_min = 7_919;
        cfg.n_max = 8_000;
        let run = run_curve_experiment(&cfg).unwrap();
        assert!(run
            .records
            .iter()
            .all(|r| r.spec.is_prime_modulus && r.spec.n >= 7_919));
        assert_eq!(run.summary.estimator, "rho_F");
        cfg.n_min = 24;
        cfg.n_max = 28;
        assert!(run_curve_experiment(&cfg).is_err());
        let bad = CurveExperiment {
            degree: 4,
            ..CurveExperiment::new(2, 1, false, 0)
        };
        assert!(run_curve_experiment(&bad).is_err());
    }

    #[test]
    fn csv_format() {
        let quad = curve_hull_count(&CurveSpec::new(5, &[1, 0, 0]).unwrap());
        let cubic = curve_hull_count(&CurveSpec::new(7, &[1, 0, 0, 3]).unwrap());
        let mut buf = Vec::new();
        write_curve_csv(&[quad.clone(), cubic], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.split('\n').collect();
        assert_eq!(lines[0], CURVE_CSV_HEADER);
        assert_eq!(
            lines[1],
            format!("0,5,2,1,0,0,,5,4,{:.6},{:.6}", quad.h, quad.rel_diff)
        );
        assert!(lines[2].starts_with("1,7,3,1,0,0,3,7,"));
        assert_eq!(lines[3], "");
        assert!(!text.contains('\r'));
    }
}
