//! The limiting operator `S_r` on `L2((0, r) x S^2)`, the constant `U(lambda)`
//! and logarithmic fits of eigenvalue counts near a threshold.
//!
//! The kernel is read as `S(t; y) = C / (5 cosh y + t)` with
//! `C = 25 / (8 pi^2 sqrt 6)`, `t` the inner product of the two unit vectors
//! and `y` the difference of the radial variables. A kernel depending on the
//! inner product splits over spherical harmonics: sector `l` carries the
//! one-dimensional kernel `s_l(y) = 2 pi int P_l(t) S(t; y) dt` with
//! multiplicity `2l + 1`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss::{gauss_legendre, legendre};
use crate::linalg::count_above;

/// Human-readable statement of the kernel interpretation, embedded in reports.
pub const KERNEL_READING: &str = "S(t;y) = 25/(8 pi^2 sqrt 6) / (5 cosh y + t), t = <xi, eta> in [-1, 1]";
/// How angular sectors enter the counts.
pub const SECTOR_CONVENTION: &str = "all sectors l >= 0 with multiplicity 2l+1";

pub fn sobolev_constant() -> f64 {
    25.0 / (8.0 * PI * PI * 6f64.sqrt())
}

pub fn sobolev_kernel(t: f64, y: f64) -> f64 {
    sobolev_constant() / (5.0 * y.cosh() + t)
}

const GL_NODES: usize = 64;

fn gl_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(GL_NODES))
}

/// `s_l(y) = 2 pi int_{-1}^{1} P_l(t) S(t; y) dt`.
pub fn sector_kernel(l: usize, y: f64) -> f64 {
    let (x, w) = gl_rule();
    2.0 * PI
        * x.iter()
            .zip(w)
            .map(|(&t, &wt)| wt * legendre(l, t) * sobolev_kernel(t, y))
            .sum::<f64>()
}

/// Closed form of `s_0`.
pub fn sector_kernel_l0(y: f64) -> f64 {
    let a = 5.0 * y.cosh();
    2.0 * PI * sobolev_constant() * ((a + 1.0) / (a - 1.0)).ln()
}

/// Closed form of `s_1`.
pub fn sector_kernel_l1(y: f64) -> f64 {
    let a = 5.0 * y.cosh();
    2.0 * PI * sobolev_constant() * (2.0 - a * ((a + 1.0) / (a - 1.0)).ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorSpec {
    pub r: f64,
    pub n_x: usize,
    pub l_max: usize,
}

impl SectorSpec {
    /// Eight nodes per unit length and sectors up to 16.
    pub fn new(r: f64) -> Self {
        Self { r, n_x: (8.0 * r).ceil() as usize, l_max: 16 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0) || !self.r.is_finite() {
            return Err(Error::Domain(format!("interval length must be positive, got {}", self.r)));
        }
        if (self.n_x as f64) < 8.0 * self.r {
            return Err(Error::Domain(format!("n_x = {} is below 8 r = {}", self.n_x, 8.0 * self.r)));
        }
        if self.l_max < 8 {
            return Err(Error::Domain(format!("l_max must be >= 8, got {}", self.l_max)));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        self.r / self.n_x as f64
    }
}

/// `s_l` at the node offsets `k h`, `k = 0..n_x`.
fn sector_profile(l: usize, spec: &SectorSpec) -> Vec<f64> {
    let h = spec.step();
    (0..spec.n_x).map(|k| sector_kernel(l, k as f64 * h)).collect()
}

/// Row-sum bound on the norm of the sector matrix.
fn row_sum_bound(profile: &[f64], h: f64) -> f64 {
    h * (profile[0].abs() + 2.0 * profile[1..].iter().map(|v| v.abs()).sum::<f64>())
}

fn sector_matrix(profile: &[f64], h: f64) -> DMatrix<f64> {
    let n = profile.len();
    DMatrix::from_fn(n, n, |i, j| h * profile[i.abs_diff(j)])
}

/// Eigenvalue count of one sector matrix above `lambda`.
pub fn sector_count(l: usize, lambda: f64, spec: &SectorSpec) -> usize {
    let prof = sector_profile(l, spec);
    let h = spec.step();
    if row_sum_bound(&prof, h) <= lambda {
        return 0;
    }
    count_above(&sector_matrix(&prof, h), lambda)
}

/// `n(lambda, S_r) = sum_l (2l + 1) n(lambda, S_r^(l))` over `l <= l_max`.
///
/// Sectors whose row-sum bound is at most `lambda` contribute nothing. The
/// discarded sectors `l > l_max` are certified by the bounds of `l_max + 1`
/// and `l_max + 2`, which dominate all higher ones of the same parity.
pub fn count_s(lambda: f64, spec: &SectorSpec) -> Result<usize> {
    spec.validate()?;
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
    }
    let h = spec.step();
    for l in [spec.l_max + 1, spec.l_max + 2] {
        let norm = row_sum_bound(&sector_profile(l, spec), h);
        if norm >= 0.5 * lambda {
            return Err(Error::Truncation { l, norm, lambda });
        }
    }
    let ls: Vec<usize> = (0..=spec.l_max).collect();
    Ok(par_map(&ls, |&l| (2 * l + 1) * sector_count(l, lambda, spec)).iter().sum())
}

#[cfg(feature = "parallel")]
fn par_map<T: Sync, R: Send, F: Fn(&T) -> R + Sync + Send>(xs: &[T], f: F) -> Vec<R> {
    use rayon::prelude::*;
    xs.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T, R, F: Fn(&T) -> R>(xs: &[T], f: F) -> Vec<R> {
    xs.iter().map(f).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UEstimate {
    pub lambda: f64,
    pub value: f64,
    pub residual: f64,
    pub counts: Vec<(f64, usize)>,
}

/// Ordinary least squares `y = a + b x`; returns `(b, a, rms residual, stderr of b)`.
fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let ss: f64 = x.iter().zip(y).map(|(u, v)| (v - a - b * u).powi(2)).sum();
    let rms = (ss / n).sqrt();
    let stderr = if x.len() > 2 { (ss / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    (b, a, rms, stderr)
}

/// `U(lambda)`: half the least-squares slope of `n(lambda, S_r)` against `r`.
pub fn u_estimate(lambda: f64, r_list: &[f64]) -> Result<UEstimate> {
    if r_list.len() < 3 {
        return Err(Error::InsufficientData(format!("need at least 3 interval lengths, got {}", r_list.len())));
    }
    if r_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("interval lengths must be strictly ascending".into()));
    }
    let mut counts = Vec::with_capacity(r_list.len());
    for &r in r_list {
        counts.push((r, count_s(lambda, &SectorSpec::new(r))?));
    }
    let x: Vec<f64> = counts.iter().map(|c| c.0).collect();
    let y: Vec<f64> = counts.iter().map(|c| c.1 as f64).collect();
    let (slope, _, residual, _) = least_squares(&x, &y);
    Ok(UEstimate { lambda, value: 0.5 * slope, residual, counts })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogFit {
    pub threshold: f64,
    pub samples: Vec<(f64, usize)>,
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
    pub slope_stderr: f64,
    /// Smallest and largest `|z - threshold|` in the fit.
    pub window: (f64, f64),
}

/// Least-squares slope of `N` against `|log|z - threshold||`.
pub fn fit_log_asymptotics(samples: &[(f64, usize)], threshold: f64) -> Result<LogFit> {
    if samples.len() < 4 {
        return Err(Error::InsufficientData(format!("need at least 4 samples, got {}", samples.len())));
    }
    let below = samples[0].0 < threshold;
    if samples.iter().any(|s| (s.0 < threshold) != below || s.0 == threshold) {
        return Err(Error::InsufficientData("samples must all lie strictly on one side of the threshold".into()));
    }
    let mut sorted = samples.to_vec();
    // farthest from the threshold first
    sorted.sort_by(|a, b| (b.0 - threshold).abs().total_cmp(&(a.0 - threshold).abs()));
    if sorted.windows(2).any(|w| (w[0].0 - threshold).abs() == (w[1].0 - threshold).abs()) {
        return Err(Error::InsufficientData("sample distances to the threshold must be distinct".into()));
    }
    if sorted.windows(2).any(|w| w[1].1 < w[0].1) {
        return Err(Error::InsufficientData("counts must be nondecreasing toward the threshold".into()));
    }
    let x: Vec<f64> = sorted.iter().map(|s| (s.0 - threshold).abs().ln().abs()).collect();
    let y: Vec<f64> = sorted.iter().map(|s| s.1 as f64).collect();
    let (slope, intercept, residual, slope_stderr) = least_squares(&x, &y);
    let d: Vec<f64> = sorted.iter().map(|s| (s.0 - threshold).abs()).collect();
    Ok(LogFit {
        threshold,
        samples: sorted,
        slope,
        intercept,
        residual,
        slope_stderr,
        window: (d[d.len() - 1], d[0]),
    })
}

/// `r,count` table with header.
pub fn count_table_csv(counts: &[(f64, usize)]) -> String {
    let mut s = String::from("r,count\n");
    for (r, c) in counts {
        let _ = writeln!(s, "{r},{c}");
    }
    s
}

/// `z,N,log_abs` table with header.
pub fn log_table_csv(samples: &[(f64, usize)], threshold: f64) -> String {
    let mut s = String::from("z,N,log_abs\n");
    for (z, n) in samples {
        let _ = writeln!(s, "{z},{n},{}", (z - threshold).abs().ln().abs());
    }
    s
}
