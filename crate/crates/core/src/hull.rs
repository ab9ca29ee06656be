//! The convex closure `C_n` of the modular inversion graph
//! `G_n = {(a, b) : ab ≡ 1 (mod n), 1 <= a, b <= n - 1}`.
//!
//! Three independent routes produce the same vertex set:
//!
//! * [`brute_force_hull`] materializes all `φ(n)` points and runs a monotone chain;
//! * [`search_hull`] scans `a = 2, 3, ...` and keeps a Graham-style stack of the
//!   vertices in the triangle with corners `(0,0), (0,n), (n/2,n/2)`, stopping
//!   once no further vertex can exist there;
//! * [`factor_hull`] only looks at points on the hyperbolas
//!   `x(n - y) = jn - 1` for the levels `j <= m_n`, found through the divisors
//!   of `jn - 1`.
//!
//! The last two rebuild the full hull from the triangle part through the two
//! reflections `(a,b) -> (b,a)` and `(a,b) -> (n-b, n-a)`. Vertices are strictly
//! extreme points; collinear boundary points are never counted.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{convex_hull, convex_hull_sorted, cross, strictly_inside, ConvexHull, Point};
use crate::numtheory::{divisor_profile, divisors, mod_inverse, Ratio};

/// Moduli whose unit group has exponent 2, so `G_n` lies on `y = x`.
pub const DEGENERATE_MODULI: [u64; 7] = [2, 3, 4, 6, 8, 12, 24];

/// `brute_force_hull` refuses moduli above this.
pub const BRUTE_FORCE_LIMIT: u64 = 1_000_000;

/// Relative cost of one factorization against one step of the search scan,
/// used when `factor_hull` decides whether to hand over to `search_hull`.
pub const FACTOR_STEP_COST: f64 = 48.0;

pub type GnPoint = Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Search,
    Factor,
    Brute,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Search => "search",
            Algorithm::Factor => "factor",
            Algorithm::Brute => "brute",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which algorithm [`compute_hull`] runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selection {
    /// `factor_hull` when `T(n-1) <= n^{3/4}`, otherwise `search_hull`.
    #[default]
    Auto,
    Search,
    Factor,
    Brute,
}

impl FromStr for Selection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Selection::Auto),
            "search" => Ok(Selection::Search),
            "factor" => Ok(Selection::Factor),
            "brute" => Ok(Selection::Brute),
            other => Err(Error::Domain(format!("unknown algorithm `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct HullResult {
    pub n: u64,
    /// Counter-clockwise, starting at `(1, 1)`.
    pub vertices: Vec<GnPoint>,
    pub v: usize,
    pub degenerate: bool,
    pub algorithm: Algorithm,
    pub elapsed: Duration,
}

/// Wire form of a hull: `{"n", "v", "degenerate", "algorithm", "vertices": [[a,b],...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HullRecord {
    pub n: u64,
    pub v: usize,
    pub degenerate: bool,
    pub algorithm: Algorithm,
    pub vertices: Vec<[i64; 2]>,
}

impl HullResult {
    fn from_hull(n: u64, hull: ConvexHull, algorithm: Algorithm, started: Instant) -> Self {
        HullResult {
            n,
            v: hull.vertices.len(),
            vertices: hull.vertices,
            degenerate: hull.degenerate,
            algorithm,
            elapsed: started.elapsed(),
        }
    }

    pub fn vertex_set(&self) -> BTreeSet<GnPoint> {
        self.vertices.iter().copied().collect()
    }

    pub fn record(&self) -> HullRecord {
        HullRecord {
            n: self.n,
            v: self.v,
            degenerate: self.degenerate,
            algorithm: self.algorithm,
            vertices: self.vertices.iter().map(|p| [p.x, p.y]).collect(),
        }
    }

    /// Vertices in the triangle `(0,0), (0,n), (n/2,n/2)`, ordered by `a`.
    pub fn triangle_chain(&self) -> TriangleChain {
        let n = self.n as i64;
        let mut points: Vec<GnPoint> = self
            .vertices
            .iter()
            .copied()
            .filter(|p| p.x <= p.y && p.x + p.y <= n)
            .collect();
        points.sort_unstable();
        TriangleChain { n: self.n, points }
    }

    /// `M(n) = max |a - b|` over `G_n`, read off the top of the triangle chain.
    pub fn max_diff(&self) -> u64 {
        if self.degenerate {
            return 0;
        }
        self.triangle_chain()
            .points
            .last()
            .map_or(0, |p| (p.y - p.x) as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriangleChain {
    pub n: u64,
    pub points: Vec<GnPoint>,
}

impl TriangleChain {
    pub fn top(&self) -> GnPoint {
        *self.points.last().expect("chain always holds (1,1)")
    }
}

fn check_modulus(n: u64) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidModulus {
            n,
            reason: "n must be at least 2",
        });
    }
    if n > i64::MAX as u64 / 4 {
        return Err(Error::InvalidModulus {
            n,
            reason: "n exceeds the 61-bit working range",
        });
    }
    Ok(())
}

/// The four images of `p` under the symmetry group generated by the two
/// reflections in `y = x` and `x + y = n`.
pub fn symmetric_orbit(p: GnPoint, n: u64) -> [GnPoint; 4] {
    let n = n as i64;
    [
        p,
        Point::new(p.y, p.x),
        Point::new(n - p.y, n - p.x),
        Point::new(n - p.x, n - p.y),
    ]
}

/// All points of `G_n`, sorted by `a`.
pub fn graph_points(n: u64) -> Result<Vec<GnPoint>> {
    check_modulus(n)?;
    Ok((1..n)
        .filter_map(|a| mod_inverse(a, n).map(|b| Point::new(a as i64, b as i64)))
        .collect())
}

/// `|C_n| = 0`, i.e. every unit is its own inverse.
pub fn is_degenerate(n: u64) -> bool {
    (2..n).all(|a| match mod_inverse(a, n) {
        Some(b) => b == a,
        None => true,
    })
}

pub fn brute_force_hull(n: u64) -> Result<HullResult> {
    check_modulus(n)?;
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::LimitExceeded {
            what: "brute-force modulus",
            value: n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let started = Instant::now();
    let mut pts = graph_points(n)?;
    pts.sort_unstable();
    Ok(HullResult::from_hull(
        n,
        convex_hull_sorted(&pts),
        Algorithm::Brute,
        started,
    ))
}

/// The systematic search: candidate `a` runs upward from `a_i`, subject to
/// `2a <= n + a_i - b_i` and `b_i - a_i < a^{-1} - a`, with reflex vertices
/// popped by an exact orientation test. Returns the stack, which holds every
/// hull vertex of the triangle (and possibly points just past `x + y = n`,
/// which the reflections map back inside).
pub fn search_chain(n: u64) -> Result<Vec<GnPoint>> {
    check_modulus(n)?;
    let ni = n as i64;
    let mut stack = vec![Point::new(1, 1)];
    let mut a: i64 = 1;
    loop {
        let top = stack[stack.len() - 1];
        a += 1;
        if 2 * a > ni + top.x - top.y {
            break;
        }
        let Some(b) = mod_inverse(a as u64, n) else {
            continue;
        };
        let b = b as i64;
        if b - a <= top.y - top.x {
            continue;
        }
        let p = Point::new(a, b);
        // Upper chain, left to right: keep only strict clockwise turns.
        while stack.len() >= 2 && cross(stack[stack.len() - 2], stack[stack.len() - 1], p) >= 0 {
            stack.pop();
        }
        stack.push(p);
    }
    Ok(stack)
}

fn hull_from_triangle_candidates(n: u64, candidates: &[GnPoint]) -> ConvexHull {
    let mut pts: Vec<GnPoint> = candidates
        .iter()
        .flat_map(|&p| symmetric_orbit(p, n))
        .collect();
    pts.sort_unstable();
    pts.dedup();
    convex_hull_sorted(&pts)
}

pub fn search_hull(n: u64) -> Result<HullResult> {
    let started = Instant::now();
    let chain = search_chain(n)?;
    let hull = hull_from_triangle_candidates(n, &chain);
    Ok(HullResult::from_hull(n, hull, Algorithm::Search, started))
}

/// Points of `G_n` on `x(n - y) = jn - 1` with `x <= y`, taken from the
/// divisors `d <= sqrt(jn - 1)` as `(d, n - (jn - 1)/d)`. These are the points
/// of the curve on or below `x + y = n`; the rest of the curve is their image
/// under `(x, y) -> (n - y, n - x)`.
pub fn alpha_points(n: u64, j: u64) -> Vec<GnPoint> {
    let Some(target) = j.checked_mul(n).and_then(|v| v.checked_sub(1)) else {
        return Vec::new();
    };
    if target == 0 {
        return Vec::new();
    }
    divisors(target)
        .into_iter()
        .take_while(|&d| (d as u128) * (d as u128) <= target as u128)
        .filter_map(|d| {
            let q = target / d;
            if q >= n {
                return None;
            }
            let (x, y) = (d, n - q);
            (x <= y && y < n).then(|| Point::new(x as i64, y as i64))
        })
        .collect()
}

/// Whether the upper-left boundary of the divisor hull `D_n` meets the curve
/// at level `m`, decided exactly from the consecutive divisors of `n - 1`:
/// no intersection iff `r + 1/r < 4m - 2 + 4(m-1)/(n-1)` for every ratio `r`.
pub fn gamma_intersects_alpha(n: u64, m: u64) -> bool {
    assert!(
        n >= 3 && m >= 2,
        "gamma_intersects_alpha needs n >= 3 and m >= 2"
    );
    let s = (n - 1) as u128;
    let m = m as u128;
    let rhs_num = (4 * m - 2) * s + 4 * (m - 1);
    divisors(n - 1).windows(2).any(|w| {
        let (lo, hi) = (w[0] as u128, w[1] as u128);
        (hi * hi + lo * lo) * s >= rhs_num * lo * hi
    })
}

fn level_bound_from(t: Ratio, n: u64) -> u64 {
    let m = (t.num as u128 + 3 * t.den as u128) / (4 * t.den as u128);
    (m as u64).clamp(1, n.div_ceil(4).max(1))
}

/// `m_n = floor((T(n-1) + 3) / 4)`, clamped to `ceil(n/4)`.
pub fn level_bound(n: u64) -> u64 {
    assert!(n >= 3, "level_bound needs n >= 3");
    level_bound_from(crate::numtheory::t_ratio(n - 1), n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FactorOptions {
    /// Hand over to `search_hull` when the level count makes the factor
    /// route more expensive than the search scan.
    pub fallback: bool,
    /// Drop candidates strictly inside the divisor hull `D_n` before the
    /// final chain. Points on its boundary are kept.
    pub polygon_filter: bool,
}

impl Default for FactorOptions {
    fn default() -> Self {
        FactorOptions {
            fallback: true,
            polygon_filter: false,
        }
    }
}

/// Upper bound on the number of search steps: with `d = ρ₁(n - 1)` the point
/// `(d, n - (n-1)/d)` caps `n - M(n)` at `(n-1)/d + d`.
fn search_cost(n: u64, divs: &[u64]) -> f64 {
    let s = n - 1;
    let d = divs
        .iter()
        .copied()
        .take_while(|&d| (d as u128) * (d as u128) <= s as u128)
        .last()
        .unwrap_or(1);
    ((s / d + d) as f64) / 2.0
}

fn factor_cost(levels: u64) -> f64 {
    levels as f64 * FACTOR_STEP_COST
}

pub fn factor_hull(n: u64) -> Result<HullResult> {
    factor_hull_with(n, FactorOptions::default())
}

pub fn factor_hull_with(n: u64, opts: FactorOptions) -> Result<HullResult> {
    check_modulus(n)?;
    let started = Instant::now();
    if n == 2 {
        let hull = convex_hull(&[Point::new(1, 1)]);
        return Ok(HullResult::from_hull(n, hull, Algorithm::Factor, started));
    }
    let profile = divisor_profile(n - 1)?;
    let levels = level_bound_from(profile.t_ratio, n);
    if opts.fallback && factor_cost(levels) > search_cost(n, &profile.divisors) {
        return search_hull(n);
    }
    let mut candidates: Vec<GnPoint> = (1..=levels).flat_map(|j| alpha_points(n, j)).collect();
    if opts.polygon_filter {
        let first = alpha_points(n, 1);
        let divisor_hull = hull_from_triangle_candidates(n, &first);
        if !divisor_hull.degenerate {
            candidates.retain(|&p| !strictly_inside(&divisor_hull.vertices, p));
        }
    }
    let hull = hull_from_triangle_candidates(n, &candidates);
    Ok(HullResult::from_hull(n, hull, Algorithm::Factor, started))
}

/// Selects an algorithm per [`Selection`].
pub fn compute_hull(n: u64, selection: Selection) -> Result<HullResult> {
    match selection {
        Selection::Search => search_hull(n),
        Selection::Factor => factor_hull(n),
        Selection::Brute => brute_force_hull(n),
        Selection::Auto => {
            check_modulus(n)?;
            if n < 3 {
                return search_hull(n);
            }
            let t = crate::numtheory::t_ratio(n - 1);
            if t.to_f64() <= (n as f64).powf(0.75) {
                factor_hull(n)
            } else {
                search_hull(n)
            }
        }
    }
}

pub fn triangle_chain(n: u64) -> Result<TriangleChain> {
    check_modulus(n)?;
    if DEGENERATE_MODULI.contains(&n) {
        return Err(Error::DegenerateModulus(n));
    }
    Ok(search_hull(n)?.triangle_chain())
}

/// `M(n) = max |a - b|` over `G_n` (0 for degenerate moduli).
pub fn max_diff(n: u64) -> Result<u64> {
    Ok(search_hull(n)?.max_diff())
}

/// Largest deviation `|area(Ω) - N(Ω, n)/φ(n)|` over the `k × k` grid cells
/// of the unit square, for the scaled points `G_n / n`.
pub fn equidistribution_discrepancy(n: u64, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain("grid subdivision must be at least 1".into()));
    }
    let pts = graph_points(n)?;
    let mut counts = vec![0u64; k * k];
    let k128 = k as u128;
    for p in &pts {
        let i = (p.x as u128 * k128 / n as u128) as usize;
        let j = (p.y as u128 * k128 / n as u128) as usize;
        counts[i * k + j] += 1;
    }
    let area = 1.0 / (k * k) as f64;
    let total = pts.len() as f64;
    Ok(counts
        .iter()
        .map(|&c| (area - c as f64 / total).abs())
        .fold(0.0, f64::max))
}
