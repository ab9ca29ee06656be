//! Histograms, lognormal and loglogistic fits, and a Kolmogorov–Smirnov
//! distance.

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;
const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

/// Minimum sample size for a fit.
pub const MIN_FIT_SAMPLES: usize = 10;

/// Newton iteration limit for the loglogistic fit.
pub const MAX_FIT_ITERATIONS: usize = 200;

/// Loglogistic Newton iterations stop once the per-sample gradient norm
/// drops below this.
pub const FIT_GRADIENT_TOL: f64 = 1e-8;

/// Error function. Uses the all-positive series
/// `erf x = 2/√π e^{-x²} Σ 2ⁿ x^{2n+1} / (2n+1)!!` for `|x| <= 3` and the
/// continued fraction for `erfc` beyond.
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x.abs() <= 3.0 {
        erf_series(x)
    } else {
        x.signum() * (1.0 - erfc_fraction(x.abs()))
    }
}

/// Complementary error function, accurate in the tail.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x > 3.0 {
        erfc_fraction(x)
    } else if x < -3.0 {
        2.0 - erfc_fraction(-x)
    } else {
        1.0 - erf_series(x)
    }
}

fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    while term.abs() > 1e-17 * sum.abs() {
        n += 1.0;
        term *= 2.0 * x2 / (2.0 * n + 1.0);
        sum += term;
    }
    2.0 * FRAC_1_SQRT_PI * (-x2).exp() * sum
}

fn erfc_fraction(x: f64) -> f64 {
    // erfc x = e^{-x²}/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + …))))
    let mut t = x;
    for k in (1..=80).rev() {
        t = x + f64::from(k) / 2.0 / t;
    }
    (-x * x).exp() * FRAC_1_SQRT_PI / t
}

/// CDF of the centred normal with standard deviation `sigma`.
pub fn normal_cdf(z: f64, sigma: f64) -> f64 {
    assert!(sigma > 0.0, "sigma must be positive");
    (0.5 * erfc(-z / (sigma * std::f64::consts::SQRT_2))).clamp(0.0, 1.0)
}

fn check_params(x: f64, sigma: f64, shift: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Domain(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    if !x.is_finite() || x <= shift {
        return Err(Error::Domain(format!("x = {x} must exceed shift {shift}")));
    }
    Ok(x - shift)
}

pub fn lognormal_pdf(x: f64, mu: f64, sigma: f64, shift: f64) -> Result<f64> {
    let y = check_params(x, sigma, shift)?;
    let z = (y.ln() - mu) / sigma;
    Ok((-0.5 * z * z).exp() / (SQRT_2PI * sigma * y))
}

pub fn loglogistic_pdf(x: f64, mu: f64, sigma: f64, shift: f64) -> Result<f64> {
    let y = check_params(x, sigma, shift)?;
    let z = (y.ln() - mu) / sigma;
    // e^z / (1 + e^z)² = 1 / (4 cosh²(z/2))
    let c = (0.5 * z).cosh();
    Ok(1.0 / (4.0 * sigma * y * c * c))
}

/// Zero at or below `shift`.
pub fn lognormal_cdf(x: f64, mu: f64, sigma: f64, shift: f64) -> f64 {
    if x <= shift {
        return 0.0;
    }
    normal_cdf((x - shift).ln() - mu, sigma)
}

/// Zero at or below `shift`.
pub fn loglogistic_cdf(x: f64, mu: f64, sigma: f64, shift: f64) -> f64 {
    if x <= shift {
        return 0.0;
    }
    let z = ((x - shift).ln() - mu) / sigma;
    0.5 * (1.0 + (0.5 * z).tanh())
}

/// `sup |F_m - F|` between the empirical CDF of `data` and `cdf`, checked on
/// both sides of every jump.
pub fn ks_statistic(data: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    let mut xs = data.to_vec();
    xs.sort_by(f64::total_cmp);
    let m = xs.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        let mut j = i + 1;
        while j < xs.len() && xs[j] == xs[i] {
            j += 1;
        }
        let f = cdf(xs[i]);
        d = d.max(f - i as f64 / m).max(j as f64 / m - f);
        i = j;
    }
    d.clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Lognormal,
    Loglogistic,
    Normal,
}

impl Model {
    pub fn as_str(self) -> &'static str {
        match self {
            Model::Lognormal => "lognormal",
            Model::Loglogistic => "loglogistic",
            Model::Normal => "normal",
        }
    }
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: Model,
    pub mu: f64,
    pub sigma: f64,
    pub shift: f64,
    /// Kolmogorov–Smirnov distance between the data and the fitted CDF.
    pub gof: f64,
    pub samples: usize,
}

impl FitResult {
    pub fn cdf(&self, x: f64) -> f64 {
        match self.model {
            Model::Lognormal => lognormal_cdf(x, self.mu, self.sigma, self.shift),
            Model::Loglogistic => loglogistic_cdf(x, self.mu, self.sigma, self.shift),
            Model::Normal => normal_cdf(x - self.shift - self.mu, self.sigma),
        }
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        match self.model {
            Model::Lognormal => lognormal_pdf(x, self.mu, self.sigma, self.shift),
            Model::Loglogistic => loglogistic_pdf(x, self.mu, self.sigma, self.shift),
            Model::Normal => {
                let z = (x - self.shift - self.mu) / self.sigma;
                Ok((-0.5 * z * z).exp() / (SQRT_2PI * self.sigma))
            }
        }
    }
}

fn shifted_logs(data: &[f64], shift: f64) -> Result<Vec<f64>> {
    if data.len() < MIN_FIT_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_FIT_SAMPLES,
            got: data.len(),
        });
    }
    data.iter()
        .map(|&x| {
            if x > shift && x.is_finite() {
                Ok((x - shift).ln())
            } else {
                Err(Error::Domain(format!("sample {x} not above shift {shift}")))
            }
        })
        .collect()
}

fn mean_std(ys: &[f64]) -> (f64, f64) {
    let m = ys.len() as f64;
    let mean = ys.iter().sum::<f64>() / m;
    let var = ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / m;
    (mean, var.sqrt())
}

fn check_spread(mean: f64, sd: f64) -> Result<()> {
    if sd <= 1e-12 * mean.abs().max(1.0) {
        return Err(Error::Fit("data has zero spread".into()));
    }
    Ok(())
}

fn finish(model: Model, mu: f64, sigma: f64, shift: f64, data: &[f64]) -> FitResult {
    let mut fit = FitResult {
        model,
        mu,
        sigma,
        shift,
        gof: 0.0,
        samples: data.len(),
    };
    fit.gof = ks_statistic(data, |x| fit.cdf(x));
    fit
}

/// Maximum likelihood lognormal fit of `x - shift`.
pub fn fit_lognormal(data: &[f64], shift: f64) -> Result<FitResult> {
    let ys = shifted_logs(data, shift)?;
    let (mu, sigma) = mean_std(&ys);
    check_spread(mu, sigma)?;
    Ok(finish(Model::Lognormal, mu, sigma, shift, data))
}

fn logistic_loglik(ys: &[f64], mu: f64, s: f64) -> f64 {
    ys.iter()
        .map(|&y| {
            let z = (y - mu) / s;
            // -z - 2 ln(1 + e^{-z}) written symmetrically in |z|
            -z.abs() - 2.0 * (-z.abs()).exp().ln_1p()
        })
        .sum::<f64>()
        - ys.len() as f64 * s.ln()
}

/// Maximum likelihood loglogistic fit of `x - shift`: a logistic fit of the
/// logs by damped Newton iteration.
pub fn fit_loglogistic(data: &[f64], shift: f64) -> Result<FitResult> {
    let ys = shifted_logs(data, shift)?;
    let m = ys.len() as f64;
    let (mean, sd) = mean_std(&ys);
    check_spread(mean, sd)?;
    let mut mu = {
        let mut sorted = ys.clone();
        sorted.sort_by(f64::total_cmp);
        sorted[sorted.len() / 2]
    };
    let mut s = sd * 3f64.sqrt() / std::f64::consts::PI;
    let mut ll = logistic_loglik(&ys, mu, s);
    for _ in 0..MAX_FIT_ITERATIONS {
        let (mut su, mut szu, mut s1u2, mut sz1u2, mut sz21u2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &y in &ys {
            let z = (y - mu) / s;
            let u = (0.5 * z).tanh();
            let w = 1.0 - u * u;
            su += u;
            szu += z * u;
            s1u2 += w;
            sz1u2 += z * w;
            sz21u2 += z * z * w;
        }
        let g_mu = su / s;
        let g_s = (szu - m) / s;
        if (g_mu.hypot(g_s)) / m < FIT_GRADIENT_TOL {
            return Ok(finish(Model::Loglogistic, mu, s, shift, data));
        }
        let s2 = s * s;
        let h_mm = -0.5 * s1u2 / s2;
        let h_ms = -(su + 0.5 * sz1u2) / s2;
        let h_ss = -(szu - m) / s2 - (szu + 0.5 * sz21u2) / s2;
        let det = h_mm * h_ss - h_ms * h_ms;
        let (mut d_mu, mut d_s) = if h_mm < 0.0 && det > 0.0 {
            (
                -(h_ss * g_mu - h_ms * g_s) / det,
                -(h_mm * g_s - h_ms * g_mu) / det,
            )
        } else {
            // not concave here: plain gradient ascent scaled to the data
            (g_mu * s2 / m, g_s * s2 / m)
        };
        let mut accepted = false;
        for _ in 0..60 {
            let (nmu, ns) = (mu + d_mu, s + d_s);
            if ns > 0.0 {
                let nll = logistic_loglik(&ys, nmu, ns);
                if nll >= ll {
                    mu = nmu;
                    s = ns;
                    ll = nll;
                    accepted = true;
                    break;
                }
            }
            d_mu *= 0.5;
            d_s *= 0.5;
        }
        if !accepted {
            // no ascent possible in f64; accept if the gradient is tiny relative to the scale
            if (g_mu.hypot(g_s)) * s / m < 1e-6 {
                return Ok(finish(Model::Loglogistic, mu, s, shift, data));
            }
            break;
        }
    }
    Err(Error::Fit(format!(
        "loglogistic fit did not converge in {MAX_FIT_ITERATIONS} iterations"
    )))
}

/// Centred normal with `σ` the root mean square of `data - shift`.
pub fn fit_centered_normal(data: &[f64], shift: f64) -> Result<FitResult> {
    if data.len() < MIN_FIT_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_FIT_SAMPLES,
            got: data.len(),
        });
    }
    let rms = (data.iter().map(|x| (x - shift).powi(2)).sum::<f64>() / data.len() as f64).sqrt();
    if !(rms > 0.0 && rms.is_finite()) {
        return Err(Error::Fit("root mean square is zero".into()));
    }
    Ok(finish(Model::Normal, 0.0, rms, shift, data))
}

/// Five-number style summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub rms: f64,
}

pub fn summarize(data: &[f64]) -> Option<Summary> {
    if data.is_empty() {
        return None;
    }
    let (mean, std) = mean_std(data);
    let rms = (data.iter().map(|x| x * x).sum::<f64>() / data.len() as f64).sqrt();
    let min = data.iter().copied().fold(f64::INFINITY, f64::min);
    let max = data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Some(Summary {
        count: data.len(),
        mean,
        std,
        min,
        max,
        rms,
    })
}

/// Linear-interpolation quantile of sorted data, `q` in `[0, 1]`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Bins {
    /// Width `2·IQR·m^{-1/3}` over the data range.
    FreedmanDiaconis,
    /// Equal-width bins over the data range.
    Count(usize),
    /// Explicit, strictly increasing edges.
    Edges(Vec<f64>),
}

/// Counts over half-open bins `[e_i, e_{i+1})`; samples outside the edges go
/// to underflow or overflow.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
    pub min: f64,
    pub max: f64,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.underflow + self.overflow
    }

    pub fn omitted(&self) -> u64 {
        self.underflow + self.overflow
    }
}

impl Serialize for Histogram {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct View<'a> {
            edges: &'a [f64],
            counts: &'a [u64],
            underflow: u64,
            overflow: u64,
            min: f64,
            max: f64,
            omitted: u64,
        }
        View {
            edges: &self.edges,
            counts: &self.counts,
            underflow: self.underflow,
            overflow: self.overflow,
            min: self.min,
            max: self.max,
            omitted: self.omitted(),
        }
        .serialize(s)
    }
}

const MAX_AUTO_BINS: usize = 10_000;

fn next_up(x: f64) -> f64 {
    if x == 0.0 {
        return f64::from_bits(1);
    }
    let bits = x.to_bits();
    f64::from_bits(if x > 0.0 { bits + 1 } else { bits - 1 })
}

fn equal_edges(min: f64, max: f64, k: usize) -> Vec<f64> {
    if min == max {
        return vec![min - 0.5, min + 0.5];
    }
    let width = (max - min) / k as f64;
    let mut edges: Vec<f64> = (0..k).map(|i| min + i as f64 * width).collect();
    // keep the maximum inside the last half-open bin
    edges.push(next_up(max));
    edges
}

pub fn histogram(data: &[f64], bins: &Bins) -> Result<Histogram> {
    if data.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    if let Some(bad) = data.iter().find(|x| !x.is_finite()) {
        return Err(Error::Domain(format!("non-finite sample {bad}")));
    }
    let min = data.iter().copied().fold(f64::INFINITY, f64::min);
    let max = data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let edges = match bins {
        Bins::Edges(e) => {
            if e.len() < 2 || e.iter().any(|x| !x.is_finite()) || e.windows(2).any(|w| w[0] >= w[1])
            {
                return Err(Error::Domain(
                    "histogram edges must be finite and strictly increasing".into(),
                ));
            }
            e.clone()
        }
        Bins::Count(0) => return Err(Error::Domain("histogram needs at least one bin".into())),
        Bins::Count(k) => equal_edges(min, max, *k),
        Bins::FreedmanDiaconis => {
            let mut sorted = data.to_vec();
            sorted.sort_by(f64::total_cmp);
            let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
            let m = data.len() as f64;
            let k = if iqr > 0.0 {
                let width = 2.0 * iqr / m.cbrt();
                ((max - min) / width).ceil() as usize
            } else {
                m.log2().ceil() as usize + 1
            };
            equal_edges(min, max, k.clamp(1, MAX_AUTO_BINS))
        }
    };
    let mut counts = vec![0u64; edges.len() - 1];
    let (mut underflow, mut overflow) = (0, 0);
    let last = edges[edges.len() - 1];
    for &x in data {
        if x < edges[0] {
            underflow += 1;
        } else if x >= last {
            overflow += 1;
        } else {
            counts[edges.partition_point(|&e| e <= x) - 1] += 1;
        }
    }
    Ok(Histogram {
        edges,
        counts,
        underflow,
        overflow,
        min,
        max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate;
    use crate::rng::CounterRng;
    use proptest::prelude::*;
    use rand::{Rng, RngCore};

    /// Acklam's rational approximation of the normal quantile, relative
    /// error below 1.2e-9.
    fn probit(p: f64) -> f64 {
        const A: [f64; 6] = [
            -3.969683028665376e1,
            2.209460984245205e2,
            -2.759285104469687e2,
            1.383_577_518_672_69e2,
            -3.066479806614716e1,
            2.506628277459239,
        ];
        const B: [f64; 5] = [
            -5.447609879822406e1,
            1.615858368580409e2,
            -1.556989798598866e2,
            6.680131188771972e1,
            -1.328068155288572e1,
        ];
        const C: [f64; 6] = [
            -7.784894002430293e-3,
            -3.223964580411365e-1,
            -2.400758277161838,
            -2.549732539343734,
            4.374664141464968,
            2.938163982698783,
        ];
        const D: [f64; 4] = [
            7.784695709041462e-3,
            3.224671290700398e-1,
            2.445134137142996,
            3.754408661907416,
        ];
        let pl = 0.02425;
        if p < pl {
            let q = (-2.0 * p.ln()).sqrt();
            (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
                / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
        } else if p <= 1.0 - pl {
            let q = p - 0.5;
            let r = q * q;
            (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
                / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
        } else {
            -probit(1.0 - p)
        }
    }

    fn uniform_open(r: &mut CounterRng) -> f64 {
        (r.next_u64() >> 11) as f64 / (1u64 << 53) as f64 + 0.5 / (1u64 << 53) as f64
    }

    fn lognormal_sample(seed: u64, m: usize, mu: f64, sigma: f64) -> Vec<f64> {
        let mut r = CounterRng::new(seed);
        (0..m)
            .map(|_| (mu + sigma * probit(uniform_open(&mut r))).exp())
            .collect()
    }

    #[test]
    fn erf_reference_values() {
        let cases = [
            (0.5, 0.520_499_877_813_046_5),
            (1.0, 0.842_700_792_949_714_9),
            (2.0, 0.995_322_265_018_952_7),
            (2.9, 0.999_958_902_121_900_8),
        ];
        for (x, v) in cases {
            assert!((erf(x) - v).abs() < 1e-13, "erf({x}) = {}", erf(x));
            assert!((erf(-x) + v).abs() < 1e-13);
        }
        assert!((erfc(3.5) / 7.430_983_723_414_128e-7 - 1.0).abs() < 1e-12);
        assert!((erfc(5.0) / 1.537_459_794_428_035e-12 - 1.0).abs() < 1e-12);
        assert!((erfc(3.0) - 2.209_049_699_858_544e-5).abs() < 1e-15);
        assert!((erf(3.0 + 1e-12) - erf(3.0)).abs() < 1e-12);
    }

    #[test]
    fn normal_cdf_examples() {
        assert_eq!(normal_cdf(0.0, 2.0), 0.5);
        assert!((normal_cdf(1.0, 1.0) - 0.841_344_746_068_543).abs() < 1e-9);
        assert!((normal_cdf(2.5, 2.5) - 0.841_344_746_068_543).abs() < 1e-9);
        for z in [0.1, 0.7, 1.9, 4.4, 8.0] {
            assert!((normal_cdf(-z, 1.3) - (1.0 - normal_cdf(z, 1.3))).abs() < 1e-15);
        }
    }

    #[test]
    fn pdf_peaks() {
        let (mu, sigma, shift): (f64, f64, f64) = (0.4, 0.7, -1.0);
        let x = shift + mu.exp();
        let v = lognormal_pdf(x, mu, sigma, shift).unwrap();
        assert!((v - 1.0 / (SQRT_2PI * sigma * mu.exp())).abs() < 1e-14);
        let v = loglogistic_pdf(x, mu, sigma, shift).unwrap();
        assert!((v - 1.0 / (4.0 * sigma * mu.exp())).abs() < 1e-14);
        assert!((loglogistic_cdf(x, mu, sigma, shift) - 0.5).abs() < 1e-15);
        assert!((lognormal_cdf(x, mu, sigma, shift) - 0.5).abs() < 1e-15);
        let wide = lognormal_pdf(1.0, 0.0, 2.0, 0.0).unwrap();
        let narrow = lognormal_pdf(1.0, 0.0, 1.0, 0.0).unwrap();
        assert!(wide < narrow);
        assert!(lognormal_pdf(-1.0, 0.0, 1.0, -1.0).is_err());
        assert!(loglogistic_pdf(1.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn pdfs_normalize() {
        for &(mu, sigma, shift) in &[(0.0, 1.0, 0.0), (0.3, 0.25, -1.0), (-1.2, 1.8, 5.0)] {
            // substitute x = shift + e^t
            let span = 60.0 * sigma;
            let ln = integrate(
                |t: f64| lognormal_pdf(shift + t.exp(), mu, sigma, shift).unwrap_or(0.0) * t.exp(),
                mu - span,
                mu + span,
                1e-12,
            );
            let ll = integrate(
                |t: f64| {
                    loglogistic_pdf(shift + t.exp(), mu, sigma, shift).unwrap_or(0.0) * t.exp()
                },
                mu - span,
                mu + span,
                1e-12,
            );
            assert!((ln - 1.0).abs() < 1e-6, "lognormal {ln}");
            assert!((ll - 1.0).abs() < 1e-6, "loglogistic {ll}");
        }
    }

    #[test]
    fn ks_examples() {
        assert_eq!(ks_statistic(&[0.0], |x| normal_cdf(x, 1.0)), 0.5);
        let m = 200;
        let data: Vec<f64> = (1..=m).map(|i| probit(i as f64 / (m + 1) as f64)).collect();
        let d = ks_statistic(&data, |x| normal_cdf(x, 1.0));
        assert!(d <= 1.0 / (m + 1) as f64 + 1e-8, "{d}");
        assert_eq!(ks_statistic(&[], |_| 0.5), 0.0);
    }

    proptest! {
        #[test]
        fn ks_bounds(raw in prop::collection::vec(-50.0f64..50.0, 1..60)) {
            let d = ks_statistic(&raw, |x| normal_cdf(x, 3.0));
            prop_assert!((0.0..=1.0).contains(&d));
            let mut sorted = raw.clone();
            sorted.sort_by(f64::total_cmp);
            sorted.dedup();
            let m = sorted.len() as f64;
            let ecdf = |x: f64| sorted.partition_point(|&s| s <= x) as f64 / m;
            prop_assert!(ks_statistic(&sorted, ecdf) <= 1.0 / m + 1e-12);
        }

        #[test]
        fn histogram_mass(raw in prop::collection::vec(-1e3f64..1e3, 1..300), k in 1usize..40) {
            for bins in [Bins::FreedmanDiaconis, Bins::Count(k), Bins::Edges(vec![-10.0, 0.0, 5.0, 7.5])] {
                let h = histogram(&raw, &bins).unwrap();
                prop_assert_eq!(h.total(), raw.len() as u64);
                prop_assert_eq!(h.counts.len(), h.edges.len() - 1);
                prop_assert!(h.edges.windows(2).all(|w| w[0] < w[1]));
                if !matches!(bins, Bins::Edges(_)) {
                    prop_assert_eq!(h.omitted(), 0);
                }
            }
        }
    }

    #[test]
    fn histogram_examples() {
        let h = histogram(&[1.0, 2.0, 3.0], &Bins::Edges(vec![0.0, 2.0, 4.0])).unwrap();
        assert_eq!(h.counts, vec![1, 2]);
        assert_eq!(h.total(), 3);
        let h = histogram(&[-1.0, 1.0, 9.0, 4.0], &Bins::Edges(vec![0.0, 2.0, 4.0])).unwrap();
        assert_eq!((h.underflow, h.overflow, h.omitted()), (1, 2, 3));
        assert_eq!((h.min, h.max), (-1.0, 9.0));
        let json = serde_json::to_string(&h).unwrap();
        assert_eq!(
            json,
            r#"{"edges":[0.0,2.0,4.0],"counts":[1,0],"underflow":1,"overflow":2,"min":-1.0,"max":9.0,"omitted":3}"#
        );
        assert!(histogram(&[1.0], &Bins::Edges(vec![1.0, 1.0])).is_err());
        assert!(histogram(&[1.0], &Bins::Edges(vec![2.0])).is_err());
        assert!(histogram(&[1.0], &Bins::Count(0)).is_err());
        assert!(histogram(&[], &Bins::Count(3)).is_err());
        let h = histogram(&[4.0; 5], &Bins::FreedmanDiaconis).unwrap();
        assert_eq!(h.counts.iter().sum::<u64>(), 5);
    }

    #[test]
    fn lognormal_recovery() {
        let data = lognormal_sample(2024, 100_000, 0.0, 1.0);
        let fit = fit_lognormal(&data, 0.0).unwrap();
        assert!(
            fit.mu.abs() < 0.02 && (fit.sigma - 1.0).abs() < 0.02,
            "{fit:?}"
        );
        assert!(fit.gof < 0.01);
        let ll = fit_loglogistic(&data, 0.0).unwrap();
        assert!(ll.gof > fit.gof);
    }

    #[test]
    fn lognormal_recovery_coverage() {
        let (m, trials) = (2_000usize, 40u64);
        let (mu, sigma) = (0.5, 0.8);
        let se_mu = sigma / (m as f64).sqrt();
        let se_sigma = sigma / (2.0 * m as f64).sqrt();
        let hits = (0..trials)
            .filter(|&t| {
                let fit = fit_lognormal(&lognormal_sample(t, m, mu, sigma), 0.0).unwrap();
                (fit.mu - mu).abs() < 3.0 * se_mu && (fit.sigma - sigma).abs() < 3.0 * se_sigma
            })
            .count();
        assert!(hits as f64 >= 0.95 * trials as f64, "{hits}/{trials}");
    }

    #[test]
    fn loglogistic_recovery() {
        let (mu, s, shift) = (0.3, 0.4, -1.0);
        let mut r = CounterRng::new(99);
        let data: Vec<f64> = (0..100_000)
            .map(|_| {
                let p = uniform_open(&mut r);
                shift + (mu + s * (p / (1.0 - p)).ln()).exp()
            })
            .collect();
        let fit = fit_loglogistic(&data, shift).unwrap();
        assert!(
            (fit.mu - mu).abs() < 0.02 && (fit.sigma - s).abs() < 0.02,
            "{fit:?}"
        );
        let ln = fit_lognormal(&data, shift).unwrap();
        assert!(fit.gof < ln.gof);
    }

    #[test]
    fn loglogistic_hard_start() {
        // heavy outliers push the moment-based start far from the optimum
        let mut data: Vec<f64> = (1..=50).map(|i| 1.0 + i as f64 / 50.0).collect();
        data.extend([1e6, 1e-6, 3e5]);
        let fit = fit_loglogistic(&data, 0.0).unwrap();
        assert!(fit.sigma > 0.0 && fit.gof <= 1.0);
    }

    #[test]
    fn degenerate_fits() {
        assert!(matches!(fit_lognormal(&[2.0; 20], 0.0), Err(Error::Fit(_))));
        assert!(matches!(
            fit_loglogistic(&[2.0; 20], 0.0),
            Err(Error::Fit(_))
        ));
        assert!(matches!(
            fit_lognormal(&[2.0; 5], 0.0),
            Err(Error::TooFewSamples { .. })
        ));
        let mut bad = vec![1.0; 20];
        bad[3] = -2.0;
        assert!(matches!(fit_lognormal(&bad, -1.0), Err(Error::Domain(_))));
        assert!(fit_centered_normal(&[0.0; 12], 0.0).is_err());
    }

    #[test]
    fn centered_normal_fit() {
        let mut r = CounterRng::new(5);
        let data: Vec<f64> = (0..20_000)
            .map(|_| 0.2 * probit(uniform_open(&mut r)))
            .collect();
        let fit = fit_centered_normal(&data, 0.0).unwrap();
        assert!((fit.sigma - 0.2).abs() < 0.005);
        assert!(fit.gof < 0.02);
        assert!((fit.cdf(0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn random_range_reproducible() {
        let a: Vec<u64> = (0..5)
            .map(|i| CounterRng::for_sample(1, i).random_range(0..1000))
            .collect();
        let b: Vec<u64> = (0..5)
            .map(|i| CounterRng::for_sample(1, i).random_range(0..1000))
            .collect();
        assert_eq!(a, b);
    }

    #[test]
    fn summary_values() {
        let s = summarize(&[1.0, -1.0, 3.0, -3.0]).unwrap();
        assert_eq!((s.count, s.mean, s.min, s.max), (4, 0.0, -3.0, 3.0));
        assert!((s.std - 5f64.sqrt()).abs() < 1e-15 && (s.rms - 5f64.sqrt()).abs() < 1e-15);
        assert!(summarize(&[]).is_none());
        assert_eq!(quantile_sorted(&[0.0, 10.0], 0.25), 2.5);
    }
}
