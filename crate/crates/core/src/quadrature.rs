//! Integration over the 3-torus: the shifted uniform rule and the fiber
//! integral `I(k; z) = int dt / (w2(k, t) - z)` with Richardson extrapolation.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{band_edges_for_k, shifted_nodes, w2, FiberProfile, SearchSpec, TorusPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    /// Lebesgue measure on `(-pi, pi]^3`, total mass `(2 pi)^3`.
    #[default]
    Lebesgue,
    /// Probability measure, total mass 1.
    Normalized,
}

impl Measure {
    pub fn total(&self) -> f64 {
        match self {
            Measure::Lebesgue => (2.0 * PI).powi(3),
            Measure::Normalized => 1.0,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Measure::Lebesgue => "lebesgue",
            Measure::Normalized => "normalized",
        }
    }
}

/// The shifted uniform grid with nodes `(2j+1) pi / n - pi` on each axis.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusGrid {
    pub n: usize,
    pub nodes: Vec<f64>,
    pub measure: Measure,
}

impl TorusGrid {
    pub fn new(n: usize) -> Result<Self> {
        Self::with_measure(n, Measure::Lebesgue)
    }

    pub fn with_measure(n: usize, measure: Measure) -> Result<Self> {
        if n < 2 || n % 2 != 0 {
            return Err(Error::Domain(format!("grid size must be even and >= 2, got {n}")));
        }
        Ok(Self { n, nodes: shifted_nodes(n), measure })
    }

    pub fn weight(&self) -> f64 {
        self.measure.total() / (self.n * self.n * self.n) as f64
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn index(&self, a: usize, b: usize, c: usize) -> usize {
        (a * self.n + b) * self.n + c
    }

    pub fn axis_indices(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        [idx / (n * n), (idx / n) % n, idx % n]
    }

    pub fn point(&self, idx: usize) -> TorusPoint {
        let [a, b, c] = self.axis_indices(idx);
        TorusPoint::new(self.nodes[a], self.nodes[b], self.nodes[c])
    }

    pub fn points(&self) -> Vec<TorusPoint> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Index of the node `pi_bar + t` (the grid is invariant under the mirror).
    pub fn mirror_index(&self, idx: usize) -> usize {
        let h = self.n / 2;
        let [a, b, c] = self.axis_indices(idx);
        self.index((a + h) % self.n, (b + h) % self.n, (c + h) % self.n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub n: usize,
    pub richardson_levels: usize,
    pub tol: f64,
    pub measure: Measure,
    /// Finest grid any extrapolation level may use.
    pub max_n: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            n: 64,
            richardson_levels: 2,
            tol: 1e-6,
            measure: Measure::Lebesgue,
            max_n: 512,
        }
    }
}

impl QuadratureSpec {
    pub fn with_n(n: usize) -> Self {
        Self { n, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 4 || self.n % 2 != 0 {
            return Err(Error::Domain(format!("quadrature n must be even and >= 4, got {}", self.n)));
        }
        if self.richardson_levels == 0 {
            return Err(Error::Domain("richardson_levels must be >= 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Domain(format!("tol must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

#[cfg(feature = "parallel")]
fn ordered_rows<F: Fn(usize) -> (f64, f64) + Sync + Send>(n: usize, row: F) -> Vec<(f64, f64)> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(row).collect()
}

#[cfg(not(feature = "parallel"))]
fn ordered_rows<F: Fn(usize) -> (f64, f64)>(n: usize, row: F) -> Vec<(f64, f64)> {
    (0..n).map(row).collect()
}

/// Weighted node sum of `f`. Rows are reduced in index order, so the result
/// does not depend on the thread count.
pub fn integrate_torus<F>(f: F, grid: &TorusGrid) -> f64
where
    F: Fn(&TorusPoint) -> f64 + Sync + Send,
{
    let n = grid.n;
    let rows = ordered_rows(n, |a| {
        let mut s = 0.0;
        for b in 0..n {
            for c in 0..n {
                s += f(&TorusPoint::new(grid.nodes[a], grid.nodes[b], grid.nodes[c]));
            }
        }
        (s, 0.0)
    });
    rows.iter().map(|r| r.0).sum::<f64>() * grid.weight()
}

#[inline]
fn lane_sum<const DERIV: bool>(c: f64, g: &[f64]) -> (f64, f64) {
    let mut acc = [0.0f64; 4];
    let mut acc2 = [0.0f64; 4];
    let chunks = g.chunks_exact(4);
    let rem = chunks.remainder();
    for ch in chunks {
        for l in 0..4 {
            let r = 1.0 / (c + ch[l]);
            acc[l] += r;
            if DERIV {
                acc2[l] += r * r;
            }
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    let mut s2 = (acc2[0] + acc2[1]) + (acc2[2] + acc2[3]);
    for &x in rem {
        let r = 1.0 / (c + x);
        s += r;
        if DERIV {
            s2 += r * r;
        }
    }
    (s, s2)
}

/// Unweighted sums `sum 1/(w2 - z)` and `sum 1/(w2 - z)^2` over the offset
/// grid of size `n^3`.
fn level_sums(prof: &FiberProfile, z: f64, n: usize, deriv: bool) -> (f64, f64) {
    let [g1, g2, g3] = prof.axis_samples(n);
    let shift = prof.base - z;
    let rows = ordered_rows(n, |a| {
        let mut s = 0.0;
        let mut s2 = 0.0;
        for b in 0..n {
            let c = shift + g1[a] + g2[b];
            let (x, y) = if deriv { lane_sum::<true>(c, &g3) } else { lane_sum::<false>(c, &g3) };
            s += x;
            s2 += y;
        }
        (s, s2)
    });
    rows.iter().fold((0.0, 0.0), |acc, r| (acc.0 + r.0, acc.1 + r.1))
}

/// Richardson tableau for values on grids `n, 2n, 4n, ...` with error
/// expansion `sum_j c_j h^{p_j}`. Row `j` holds the `j`-times extrapolated values.
pub fn richardson(values: &[f64], exponents: &[f64]) -> Vec<Vec<f64>> {
    let mut table = vec![values.to_vec()];
    for &p in exponents.iter().take(values.len().saturating_sub(1)) {
        let prev = table.last().unwrap();
        let f = 2f64.powf(p);
        let next = prev.windows(2).map(|w| (f * w[1] - w[0]) / (f - 1.0)).collect();
        table.push(next);
    }
    table
}

fn extrapolate(values: &[f64], exponents: &[f64]) -> (f64, f64) {
    let t = richardson(values, exponents);
    let last = t.last().unwrap();
    let prev = &t[t.len() - 2];
    let v = *last.last().unwrap();
    (v, (v - prev.last().unwrap()).abs())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiberIntegral {
    pub value: f64,
    /// `dI/dz = int dt / (w2 - z)^2`; absent at a band edge, where it diverges.
    pub derivative: Option<f64>,
    pub error: f64,
    pub grids: Vec<usize>,
    pub at_edge: bool,
}

/// `I(k; z)` together with its z-derivative.
///
/// Away from the band the integrand is smooth and periodic; the base grid is
/// refined until its spacing squared is below the distance to the band, then
/// `richardson_levels` doublings are extrapolated with even exponents. At a
/// band edge attained at `d = 0` on every axis the integrand has an
/// integrable `|d|^{-2}` point singularity centred between nodes; the error
/// then expands in all integer powers of `h` and one extra level is used.
pub fn i_integral_full(k: &TorusPoint, z: f64, spec: &QuadratureSpec) -> Result<FiberIntegral> {
    spec.validate()?;
    if !z.is_finite() {
        return Err(Error::Domain(format!("z must be finite, got {z}")));
    }
    let edges = band_edges_for_k(k, &SearchSpec::default())?;
    let dist = edges.distance_outside(z).ok_or(Error::BandInterior {
        z,
        lo: edges.min,
        hi: edges.max,
    })?;
    let at_edge = dist <= 1e-13 * (1.0 + z.abs());
    let prof = FiberProfile::new(k);

    let (n0, levels) = if at_edge {
        let centred = if z <= edges.min { edges.min_at_origin() } else { edges.max_at_origin() };
        if !centred {
            return Err(Error::Convergence(format!(
                "z = {z} is a band edge of k = {:?} whose singularity is off the grid centre",
                k.coords()
            )));
        }
        (spec.n, spec.richardson_levels + 1)
    } else {
        let levels = spec.richardson_levels;
        let mut n0 = spec.n;
        while (2.0 * PI / n0 as f64).powi(2) > dist && n0 << (levels + 1) <= spec.max_n {
            n0 *= 2;
        }
        (n0, levels)
    };
    let exponent = |j: usize| if at_edge { j as f64 } else { 2.0 * j as f64 };
    if n0 << levels > spec.max_n {
        return Err(Error::Convergence(format!(
            "finest grid {} exceeds the limit {}",
            n0 << levels,
            spec.max_n
        )));
    }

    let deriv = !at_edge;
    let mut grids = Vec::new();
    let mut vals = Vec::new();
    let mut dvals = Vec::new();
    let level = |n: usize| {
        let w = spec.measure.total() / (n * n * n) as f64;
        let (s, s2) = level_sums(&prof, z, n, deriv);
        (s * w, s2 * w)
    };
    for j in 0..=levels {
        let (v, d) = level(n0 << j);
        grids.push(n0 << j);
        vals.push(v);
        dvals.push(d);
    }
    // extra levels while the tolerance is missed and the cap allows
    loop {
        let exps: Vec<f64> = (1..grids.len()).map(exponent).collect();
        let (value, error) = extrapolate(&vals, &exps);
        if error <= spec.tol * value.abs().max(1.0) {
            let derivative = deriv.then(|| extrapolate(&dvals, &exps).0);
            return Ok(FiberIntegral { value, derivative, error, grids, at_edge });
        }
        let next = grids.last().unwrap() * 2;
        if next > spec.max_n {
            return Err(Error::Convergence(format!(
                "I(k; z) at k = {:?}, z = {z}: extrapolation error {error:e} above tol {:e} (grids {grids:?})",
                k.coords(),
                spec.tol
            )));
        }
        let (v, d) = level(next);
        grids.push(next);
        vals.push(v);
        dvals.push(d);
    }
}

pub fn i_integral(k: &TorusPoint, z: f64, spec: &QuadratureSpec) -> Result<f64> {
    Ok(i_integral_full(k, z, spec)?.value)
}

/// `I(k; z)` on the fixed nodes of `grid`, without extrapolation: the
/// discretization shared by the Nystrom operators and the direct matrix.
pub fn i_integral_on_grid(k: &TorusPoint, z: f64, grid: &TorusGrid) -> f64 {
    let n = grid.n;
    let mut s = 0.0;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let t = TorusPoint::new(grid.nodes[a], grid.nodes[b], grid.nodes[c]);
                s += 1.0 / (w2(k, &t) - z);
            }
        }
    }
    s * grid.weight()
}

static J0_CACHE: OnceLock<f64> = OnceLock::new();

/// `J0 = I(0; 0)` under the Lebesgue measure, from a 16..512 edge tableau.
pub fn j0_lebesgue() -> f64 {
    *J0_CACHE.get_or_init(|| {
        let spec = QuadratureSpec {
            n: 16,
            richardson_levels: 4,
            tol: 1e-8,
            measure: Measure::Lebesgue,
            max_n: 512,
        };
        i_integral(&TorusPoint::zero(), 0.0, &spec).expect("J0 edge integral converges")
    })
}

pub fn j0(measure: Measure) -> f64 {
    j0_lebesgue() * measure.total() / Measure::Lebesgue.total()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum() {
        let g = TorusGrid::new(8).unwrap();
        assert!((integrate_torus(|_| 1.0, &g) - (2.0 * PI).powi(3)).abs() < 1e-10);
        let g = TorusGrid::with_measure(8, Measure::Normalized).unwrap();
        assert!((integrate_torus(|_| 1.0, &g) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn nodes_avoid_corners() {
        let g = TorusGrid::new(6).unwrap();
        for p in g.points() {
            assert!(!p.is_zero() && !p.is_pi());
        }
    }

    #[test]
    fn mirror_index_involution() {
        let g = TorusGrid::new(6).unwrap();
        for i in 0..g.len() {
            let j = g.mirror_index(i);
            assert_eq!(g.mirror_index(j), i);
            assert!(g.point(j).distance(&g.point(i).mirror()) < 1e-12);
        }
    }

    #[test]
    fn richardson_exact_on_polynomial_error() {
        // v(h) = 3 + h^2 + h^4 with h = 1/n
        let v: Vec<f64> = [8.0, 16.0, 32.0]
            .iter()
            .map(|n: &f64| 3.0 + n.powi(-2) + n.powi(-4))
            .collect();
        let (x, _) = extrapolate(&v, &[2.0, 4.0]);
        assert!((x - 3.0).abs() < 1e-14);
    }

    #[test]
    fn interior_rejected() {
        let r = i_integral(&TorusPoint::zero(), 1.0, &QuadratureSpec::with_n(16));
        assert!(matches!(r, Err(Error::BandInterior { .. })));
    }

    #[test]
    fn far_below_band() {
        let v = i_integral(&TorusPoint::zero(), -1e6, &QuadratureSpec::with_n(16)).unwrap();
        assert!(v > 0.0 && v <= (2.0 * PI).powi(3) / 1e6);
    }
}
