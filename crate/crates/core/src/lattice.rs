//! Torus geometry, the lattice dispersion and the two fiber functions `w1`, `w2`.
//!
//! Points of the torus are stored by their canonical representative in
//! `(-pi, pi]^3`. The midpoint inside `w2` is the geodesic midpoint on each
//! circle: the half-sum is taken between representatives that lie at most `pi`
//! apart. At exactly antipodal coordinates the two candidate midpoints are
//! averaged, which keeps `w2` symmetric and makes the mirror map
//! `k -> pi_bar + k` send `w2` to `18 - w2` exactly.

use std::f64::consts::PI;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TWO_PI: f64 = 2.0 * PI;

/// Global band edges `min w2` and `max w2` over the torus squared.
pub const BAND_MIN: f64 = 0.0;
pub const BAND_MAX: f64 = 18.0;

/// Two coordinates closer than this to antipodal are treated as a tie.
const TIE_EPS: f64 = 1e-12;

/// Reduce an angle to its representative in `(-pi, pi]`.
pub fn canonical_angle(x: f64) -> f64 {
    let mut y = x - TWO_PI * ((x + PI) / TWO_PI).floor();
    if y <= -PI {
        y += TWO_PI;
    }
    if y > PI {
        y -= TWO_PI;
    }
    y
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "[f64; 3]", from = "[f64; 3]")]
pub struct TorusPoint {
    k: [f64; 3],
}

impl TorusPoint {
    pub fn new(k1: f64, k2: f64, k3: f64) -> Self {
        Self {
            k: [canonical_angle(k1), canonical_angle(k2), canonical_angle(k3)],
        }
    }

    pub fn zero() -> Self {
        Self { k: [0.0; 3] }
    }

    /// The corner `(pi, pi, pi)`.
    pub fn pi() -> Self {
        Self { k: [PI; 3] }
    }

    pub fn coords(&self) -> [f64; 3] {
        self.k
    }

    pub fn mirror(&self) -> Self {
        *self + Self::pi()
    }

    pub fn is_zero(&self) -> bool {
        self.k == [0.0; 3]
    }

    pub fn is_pi(&self) -> bool {
        self.k == [PI; 3]
    }

    /// Geodesic distance on the torus (Euclidean in the flat metric).
    pub fn distance(&self, other: &Self) -> f64 {
        (*self - *other).k.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

impl From<[f64; 3]> for TorusPoint {
    fn from(k: [f64; 3]) -> Self {
        Self::new(k[0], k[1], k[2])
    }
}

impl From<TorusPoint> for [f64; 3] {
    fn from(p: TorusPoint) -> Self {
        p.k
    }
}

impl Add for TorusPoint {
    type Output = TorusPoint;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.k[0] + rhs.k[0], self.k[1] + rhs.k[1], self.k[2] + rhs.k[2])
    }
}

impl Sub for TorusPoint {
    type Output = TorusPoint;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.k[0] - rhs.k[0], self.k[1] - rhs.k[1], self.k[2] - rhs.k[2])
    }
}

impl Neg for TorusPoint {
    type Output = TorusPoint;
    fn neg(self) -> Self {
        Self::new(-self.k[0], -self.k[1], -self.k[2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingParams {
    pub mu: f64,
    pub gamma: f64,
}

impl CouplingParams {
    pub fn new(mu: f64, gamma: f64) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::Domain(format!("coupling mu must be positive, got {mu}")));
        }
        if !gamma.is_finite() {
            return Err(Error::Domain(format!("gamma must be finite, got {gamma}")));
        }
        Ok(Self { mu, gamma })
    }

    pub fn half_mu_sq(&self) -> f64 {
        0.5 * self.mu * self.mu
    }
}

/// `eps(k) = sum_i (1 - cos k_i)`, with range `[0, 6]`.
pub fn dispersion(k: &TorusPoint) -> f64 {
    k.k.iter().map(|x| 1.0 - x.cos()).sum()
}

pub fn w1(k: &TorusPoint, gamma: f64) -> f64 {
    dispersion(k) + gamma
}

/// `1 - cos` of the geodesic midpoint of two angles.
pub fn midpoint_term(a: f64, b: f64) -> f64 {
    let d = canonical_angle(b - a);
    if PI - d.abs() <= TIE_EPS {
        1.0
    } else {
        1.0 - (a + 0.5 * d).cos()
    }
}

/// One coordinate's share of `w2`: `(1 - cos a) + (1 - cos b) + (1 - cos mid(a, b))`.
#[inline]
pub fn pair_term(a: f64, b: f64) -> f64 {
    (1.0 - a.cos()) + (1.0 - b.cos()) + midpoint_term(a, b)
}

/// `w2(k, p) = eps(k) + eps((k + p) / 2) + eps(p)`, range `[0, 18]`.
pub fn w2(k: &TorusPoint, p: &TorusPoint) -> f64 {
    (0..3).map(|i| pair_term(k.k[i], p.k[i])).sum()
}

/// `w2(k, k + d)` restricted to one axis as a function of the offset
/// `d in [-pi, pi]`: `(1 - cos(k + d/2)) + (1 - cos(k + d))`. The endpoints
/// carry the one-sided limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisProfile {
    pub k: f64,
}

impl AxisProfile {
    #[inline]
    pub fn value(&self, d: f64) -> f64 {
        (1.0 - (self.k + 0.5 * d).cos()) + (1.0 - (self.k + d).cos())
    }

    #[inline]
    pub fn slope(&self, d: f64) -> f64 {
        0.5 * (self.k + 0.5 * d).sin() + (self.k + d).sin()
    }

    #[inline]
    pub fn curvature(&self, d: f64) -> f64 {
        0.25 * (self.k + 0.5 * d).cos() + (self.k + d).cos()
    }
}

/// `t -> w2(k, t)` written in offset coordinates `t = k + d`. The function
/// separates: `w2(k, k + d) = eps(k) + sum_i g_i(d_i)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberProfile {
    pub base: f64,
    pub axes: [AxisProfile; 3],
}

impl FiberProfile {
    pub fn new(k: &TorusPoint) -> Self {
        let c = k.coords();
        Self {
            base: dispersion(k),
            axes: [
                AxisProfile { k: c[0] },
                AxisProfile { k: c[1] },
                AxisProfile { k: c[2] },
            ],
        }
    }

    pub fn value(&self, d: [f64; 3]) -> f64 {
        self.base + (0..3).map(|i| self.axes[i].value(d[i])).sum::<f64>()
    }

    /// Samples `g_i` on the shifted midpoint grid `d_j = (2j+1) pi / n - pi`.
    pub fn axis_samples(&self, n: usize) -> [Vec<f64>; 3] {
        let nodes = shifted_nodes(n);
        let sample = |ax: &AxisProfile| nodes.iter().map(|&d| ax.value(d)).collect::<Vec<_>>();
        [
            sample(&self.axes[0]),
            sample(&self.axes[1]),
            sample(&self.axes[2]),
        ]
    }
}

/// The `n` shifted nodes `(2j+1) pi / n - pi` of one axis.
pub fn shifted_nodes(n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| (2 * j + 1) as f64 * PI / n as f64 - PI)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchSpec {
    pub resolution: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SearchSpec {
    fn default() -> Self {
        Self {
            resolution: 24,
            tol: 1e-10,
            max_iter: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisExtremum {
    pub offset: f64,
    pub value: f64,
    /// True when the extremum is the one-sided limit at the antipodal cut.
    pub on_cut: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandEdges {
    pub min: f64,
    pub max: f64,
    pub argmin: [AxisExtremum; 3],
    pub argmax: [AxisExtremum; 3],
}

impl BandEdges {
    /// Lower edge attained at `d = 0` on every axis (a non-degenerate minimum
    /// centred between shifted grid nodes at every resolution).
    pub fn min_at_origin(&self) -> bool {
        self.argmin.iter().all(|e| !e.on_cut && e.offset == 0.0)
    }

    pub fn max_at_origin(&self) -> bool {
        self.argmax.iter().all(|e| !e.on_cut && e.offset == 0.0)
    }

    /// Signed distance of `z` outside `[min, max]`; `None` inside the open band.
    pub fn distance_outside(&self, z: f64) -> Option<f64> {
        if z <= self.min {
            Some(self.min - z)
        } else if z >= self.max {
            Some(z - self.max)
        } else {
            None
        }
    }
}

fn axis_extremum(ax: &AxisProfile, search: &SearchSpec, maximize: bool) -> Result<AxisExtremum> {
    let sgn = if maximize { -1.0 } else { 1.0 };
    let f = |d: f64| sgn * ax.value(d);
    let df = |d: f64| sgn * ax.slope(d);
    let ddf = |d: f64| sgn * ax.curvature(d);

    let res = search.resolution;
    let step = TWO_PI / res as f64;
    let grid: Vec<f64> = (0..=res).map(|j| -PI + j as f64 * step).collect();
    let mut best = 0;
    for (j, &d) in grid.iter().enumerate() {
        if f(d) < f(grid[best]) {
            best = j;
        }
    }

    // Candidates: the cut endpoints plus a refined interior stationary point
    // bracketed around the best grid node.
    let mut cands = vec![
        AxisExtremum { offset: -PI, value: ax.value(-PI), on_cut: true },
        AxisExtremum { offset: PI, value: ax.value(PI), on_cut: true },
    ];

    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(res)];
    let (mut a, mut b) = (lo, hi);
    if df(a) <= 0.0 && df(b) >= 0.0 {
        // symmetric profiles put the minimum exactly on a grid node
        let mut d = grid[best];
        if df(d) == 0.0 {
            cands.push(AxisExtremum { offset: d, value: ax.value(d), on_cut: false });
        } else {
            let mut converged = false;
            for _ in 0..search.max_iter {
                let g = df(d);
                if g.abs() <= search.tol {
                    converged = true;
                    break;
                }
                if g < 0.0 {
                    a = d;
                } else {
                    b = d;
                }
                let h = ddf(d);
                let newton = d - g / h;
                d = if h > 0.0 && newton > a && newton < b {
                    newton
                } else {
                    0.5 * (a + b)
                };
                if b - a < 1e-15 {
                    converged = df(d).abs() <= search.tol.max(1e-13);
                    break;
                }
            }
            if !converged {
                return Err(Error::Convergence(format!(
                    "axis extremum for k = {} did not reach gradient tol {}",
                    ax.k, search.tol
                )));
            }
            cands.push(AxisExtremum { offset: d, value: ax.value(d), on_cut: false });
        }
    }

    let pick = cands
        .into_iter()
        .min_by(|x, y| (sgn * x.value).total_cmp(&(sgn * y.value)))
        .expect("non-empty");
    Ok(pick)
}

/// `m(k) = min_p w2(k, p)` and `M(k) = max_p w2(k, p)`.
///
/// The offset profile separates by axis, so each axis is scanned on a grid
/// of `search.resolution` cells and the best node is polished by safeguarded
/// Newton on the axis derivative. Extrema sitting on the antipodal cut are
/// taken as one-sided limits.
pub fn band_edges_for_k(k: &TorusPoint, search: &SearchSpec) -> Result<BandEdges> {
    if search.resolution < 8 {
        return Err(Error::Domain(format!(
            "search resolution must be >= 8, got {}",
            search.resolution
        )));
    }
    let prof = FiberProfile::new(k);
    let mut argmin = [AxisExtremum { offset: 0.0, value: 0.0, on_cut: false }; 3];
    let mut argmax = argmin;
    for i in 0..3 {
        argmin[i] = axis_extremum(&prof.axes[i], search, false)?;
        argmax[i] = axis_extremum(&prof.axes[i], search, true)?;
    }
    let min = prof.base + argmin.iter().map(|e| e.value).sum::<f64>();
    let max = prof.base + argmax.iter().map(|e| e.value).sum::<f64>();
    Ok(BandEdges { min, max, argmin, argmax })
}

/// Nonnegative grid angles `2 pi j / n`, `j = 0..=n/2`, used for orbit
/// representatives of the unshifted k-grid.
fn reduced_axis(n: usize) -> Vec<f64> {
    (0..=n / 2).map(|j| TWO_PI * j as f64 / n as f64).collect()
}

/// Orbit representatives of the unshifted `n^3` grid `{2 pi j / n}` under the
/// 48 signed coordinate permutations, with orbit sizes (summing to `n^3`).
pub fn reduced_kgrid(n: usize) -> Vec<(TorusPoint, usize)> {
    assert!(n >= 2 && n % 2 == 0, "k-grid resolution must be even");
    let ax = reduced_axis(n);
    let mut out = Vec::new();
    for a in 0..ax.len() {
        for b in a..ax.len() {
            for c in b..ax.len() {
                let k = TorusPoint::new(ax[c], ax[b], ax[a]);
                let size = symmetry_orbit(&k).len();
                out.push((k, size));
            }
        }
    }
    out
}

const PERMS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

/// Orbit of `k` under the 48 signed permutations of the cube.
pub fn symmetry_orbit(k: &TorusPoint) -> Vec<TorusPoint> {
    let c = k.coords();
    let mut out: Vec<TorusPoint> = Vec::with_capacity(48);
    for perm in PERMS {
        for signs in 0..8u8 {
            let s = |i: usize| if signs >> i & 1 == 1 { -1.0 } else { 1.0 };
            let p = TorusPoint::new(s(0) * c[perm[0]], s(1) * c[perm[1]], s(2) * c[perm[2]]);
            if !out.contains(&p) {
                out.push(p);
            }
        }
    }
    out
}

/// Derivative-free compass search on the torus. Returns the best point and value.
pub fn compass_search<F>(
    mut f: F,
    start: TorusPoint,
    step0: f64,
    step_min: f64,
    maximize: bool,
) -> Result<(TorusPoint, f64)>
where
    F: FnMut(&TorusPoint) -> Result<f64>,
{
    let sgn = if maximize { -1.0 } else { 1.0 };
    let mut x = start;
    let mut fx = sgn * f(&x)?;
    let mut step = step0;
    while step > step_min {
        let mut improved = false;
        for axis in 0..3 {
            for dir in [1.0, -1.0] {
                let mut c = x.coords();
                c[axis] += dir * step;
                let y = TorusPoint::from(c);
                let fy = sgn * f(&y)?;
                if fy < fx {
                    x = y;
                    fx = fy;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok((x, sgn * fx))
}

/// `(m, M) = (min w2, max w2)` over the torus squared, from a
/// symmetry-reduced k sweep with local refinement.
pub fn global_band_edges() -> Result<(f64, f64)> {
    let search = SearchSpec::default();
    let grid = reduced_kgrid(16);
    let mut lo = (f64::INFINITY, TorusPoint::zero());
    let mut hi = (f64::NEG_INFINITY, TorusPoint::zero());
    for (k, _) in &grid {
        let e = band_edges_for_k(k, &search)?;
        if e.min < lo.0 {
            lo = (e.min, *k);
        }
        if e.max > hi.0 {
            hi = (e.max, *k);
        }
    }
    let step = TWO_PI / 32.0;
    let (_, m) = compass_search(|k| Ok(band_edges_for_k(k, &search)?.min), lo.1, step, 1e-9, false)?;
    let (_, mm) = compass_search(|k| Ok(band_edges_for_k(k, &search)?.max), hi.1, step, 1e-9, true)?;
    Ok((m.min(lo.0), mm.max(hi.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dispersion_values() {
        assert_eq!(dispersion(&TorusPoint::zero()), 0.0);
        assert_eq!(dispersion(&TorusPoint::pi()), 6.0);
        assert!((dispersion(&TorusPoint::new(PI / 2.0, 0.0, 0.0)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn w1_values() {
        assert_eq!(w1(&TorusPoint::zero(), 6.0), 6.0);
        assert_eq!(w1(&TorusPoint::pi(), 0.0), 6.0);
        assert_eq!(w1(&TorusPoint::pi(), 6.0), 12.0);
    }

    #[test]
    fn w2_corners() {
        assert_eq!(w2(&TorusPoint::zero(), &TorusPoint::zero()), 0.0);
        assert_eq!(w2(&TorusPoint::pi(), &TorusPoint::pi()), 18.0);
    }

    #[test]
    fn canonical_range() {
        assert_eq!(canonical_angle(PI), PI);
        assert_eq!(canonical_angle(-PI), PI);
        assert!((canonical_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        let m = TorusPoint::new(0.3, -2.0, PI).mirror().mirror();
        assert!(m.distance(&TorusPoint::new(0.3, -2.0, PI)) < 1e-15);
    }

    #[test]
    fn tie_is_symmetric() {
        let a = -PI + PI / 8.0;
        let b = a + PI;
        assert_eq!(midpoint_term(a, b), midpoint_term(b, a));
        assert_eq!(midpoint_term(a, b), 1.0);
    }

    #[test]
    fn corner_band_edges() {
        let s = SearchSpec::default();
        let e0 = band_edges_for_k(&TorusPoint::zero(), &s).unwrap();
        assert_eq!(e0.min, 0.0);
        assert!((e0.max - 9.0).abs() < 1e-12);
        assert!(e0.min_at_origin());
        let ep = band_edges_for_k(&TorusPoint::pi(), &s).unwrap();
        assert_eq!(ep.max, 18.0);
        assert!((ep.min - 9.0).abs() < 1e-12);
        assert!(ep.max_at_origin());
    }

    #[test]
    fn coarse_search_rejected() {
        let s = SearchSpec { resolution: 4, ..Default::default() };
        assert!(matches!(
            band_edges_for_k(&TorusPoint::zero(), &s),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn orbit_sizes() {
        assert_eq!(symmetry_orbit(&TorusPoint::zero()).len(), 1);
        assert_eq!(symmetry_orbit(&TorusPoint::new(0.7, 0.0, 0.0)).len(), 6);
        assert_eq!(symmetry_orbit(&TorusPoint::new(0.3, -1.1, 2.5)).len(), 48);
        assert_eq!(symmetry_orbit(&TorusPoint::pi()).len(), 1);
    }

    #[test]
    fn reduced_grid_covers_full_grid() {
        for n in [4, 8, 12] {
            let total: usize = reduced_kgrid(n).iter().map(|(_, s)| s).sum();
            assert_eq!(total, n * n * n);
        }
    }

    #[test]
    fn global_edges() {
        let (m, mm) = global_band_edges().unwrap();
        assert!(m.abs() < 1e-9);
        assert!((mm - 18.0).abs() < 1e-9);
    }
}
