//! Matrix-free `T^_mu(z)` on large grids, restricted to the sector of
//! functions even in every coordinate.
//!
//! `1/a` is written as an exponential sum `sum_q c_q exp(-s_q a)` (trapezoid
//! rule in `u = ln s`), which turns the kernel `1/(w2 - z)` into a sum of
//! Kronecker cubes of one `m x m` matrix, `m = n/2`. A matrix-vector product
//! then costs three small GEMMs per term.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{pair_table, CountSide};
use crate::error::{Error, Result};
use crate::lattice::{dispersion, CouplingParams, TorusPoint};
use crate::quadrature::TorusGrid;

const SUM_EPS: f64 = 1e-13;
const SUM_STEP: f64 = 0.4;

struct EvenKernel {
    m: usize,
    terms: Vec<(f64, DMatrix<f64>)>,
}

impl EvenKernel {
    /// Sum over the full grid of `1/|w2 - z|`, folded onto the positive
    /// octant nodes `x_a > 0`.
    fn new(grid: &TorusGrid, z: f64, side: CountSide) -> Self {
        let n = grid.n;
        let m = n / 2;
        let h = pair_table(grid);
        // per-axis shifted values, nonnegative on the admissible side
        let v = |a: usize, b: usize| match side {
            CountSide::Below => h[a * n + b] - z / 3.0,
            CountSide::Above => z / 3.0 - h[a * n + b],
        };
        let pos = |i: usize| m + i;
        let neg = |i: usize| m - 1 - i;
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for a in 0..n {
            for b in 0..n {
                lo = lo.min(v(a, b));
                hi = hi.max(v(a, b));
            }
        }
        let (a_min, a_max) = (3.0 * lo, 3.0 * hi);
        let u_lo = (SUM_EPS / a_max).ln();
        let u_hi = ((1.0 / SUM_EPS).ln() / a_min).ln();
        let q = ((u_hi - u_lo) / SUM_STEP).ceil() as usize;
        let terms = (0..=q)
            .map(|i| {
                let s = (u_lo + i as f64 * SUM_STEP).exp();
                let e = DMatrix::from_fn(m, m, |i, j| {
                    (-s * v(pos(i), pos(j))).exp() + (-s * v(pos(i), neg(j))).exp()
                });
                (SUM_STEP * s, e)
            })
            .collect();
        Self { m, terms }
    }

    /// `y = K x` on the octant, tensor storage `a + m b + m^2 c`.
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m * m * m];
        let mut buf = vec![0.0; m * m * m];
        for (c, e) in &self.terms {
            let mut t = DMatrix::from_column_slice(m, m * m, x);
            for _ in 0..3 {
                let p = e * &t;
                rotate(p.as_slice(), &mut buf, m);
                t = DMatrix::from_column_slice(m, m * m, &buf);
            }
            for (yi, ti) in y.iter_mut().zip(t.as_slice()) {
                *yi += c * ti;
            }
        }
        y
    }
}

/// Cyclic index rotation `(a, b, c) -> (b, c, a)`.
fn rotate(src: &[f64], dst: &mut [f64], m: usize) {
    for c in 0..m {
        for b in 0..m {
            for a in 0..m {
                dst[b + m * c + m * m * a] = src[a + m * b + m * m * c];
            }
        }
    }
}

fn octant_points(grid: &TorusGrid) -> Vec<TorusPoint> {
    let m = grid.n / 2;
    let x = &grid.nodes[m..];
    let mut out = Vec::with_capacity(m * m * m);
    for c in 0..m {
        for b in 0..m {
            for a in 0..m {
                out.push(TorusPoint::new(x[a], x[b], x[c]));
            }
        }
    }
    out
}

fn octant_delta(params: &CouplingParams, z: f64, side: CountSide, kern: &EvenKernel, grid: &TorusGrid) -> Vec<f64> {
    let ones = vec![1.0; kern.m.pow(3)];
    let s = kern.apply(&ones);
    let sign = match side {
        CountSide::Below => 1.0,
        CountSide::Above => -1.0,
    };
    let c = params.half_mu_sq() * grid.weight();
    octant_points(grid)
        .iter()
        .zip(&s)
        .map(|(p, si)| dispersion(p) + params.gamma - z - sign * c * si)
        .collect()
}

pub(super) fn extreme_delta(params: &CouplingParams, z: f64, side: CountSide, grid: &TorusGrid) -> Result<f64> {
    let kern = EvenKernel::new(grid, z, side);
    let d = octant_delta(params, z, side, &kern, grid);
    Ok(match side {
        CountSide::Below => d.iter().copied().fold(f64::INFINITY, f64::min),
        CountSide::Above => d.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerronBounds {
    pub lower: f64,
    pub upper: f64,
    pub iterations: usize,
}

/// Collatz-Wielandt bounds on the spectral radius of `T^_mu(z)`, iterated
/// until they separate from 1 or agree to `1e-9`.
pub(super) fn perron_bounds(
    params: &CouplingParams,
    z: f64,
    side: CountSide,
    grid: &TorusGrid,
) -> Result<PerronBounds> {
    let kern = EvenKernel::new(grid, z, side);
    let delta = octant_delta(params, z, side, &kern, grid);
    let ok = |d: f64| match side {
        CountSide::Below => d > 0.0,
        CountSide::Above => d < 0.0,
    };
    if let Some((node, &d)) = delta.iter().enumerate().find(|(_, d)| !ok(**d)) {
        return Err(Error::SignCondition { node, delta: d, z });
    }
    let c = params.half_mu_sq() * grid.weight();
    let scale: Vec<f64> = delta.iter().map(|d| 1.0 / d.abs().sqrt()).collect();
    let op = |x: &[f64]| -> Vec<f64> {
        let u: Vec<f64> = x.iter().zip(&scale).map(|(x, s)| x * s).collect();
        kern.apply(&u).iter().zip(&scale).map(|(y, s)| c * y * s).collect()
    };
    let mut x = vec![1.0; delta.len()];
    for it in 1..=500 {
        let y = op(&x);
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for (yi, xi) in y.iter().zip(&x) {
            let r = yi / xi;
            lo = lo.min(r);
            hi = hi.max(r);
        }
        let b = PerronBounds { lower: lo, upper: hi, iterations: it };
        if hi < 1.0 || lo > 1.0 || hi - lo <= 1e-9 * hi {
            return Ok(b);
        }
        let top = y.iter().copied().fold(0.0, f64::max);
        x = y.iter().map(|v| v / top).collect();
    }
    Err(Error::Convergence("power iteration bounds did not separate from 1".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::w2;

    #[test]
    fn even_kernel_matches_direct_sum() {
        let grid = TorusGrid::new(8).unwrap();
        for (z, side) in [(-0.3, CountSide::Below), (19.0, CountSide::Above)] {
            let kern = EvenKernel::new(&grid, z, side);
            let pts = octant_points(&grid);
            let x: Vec<f64> = (0..pts.len()).map(|i| 1.0 + (i % 7) as f64 * 0.1).collect();
            let y = kern.apply(&x);
            // direct: even extension over the full grid
            let m = 4;
            let full = grid.points();
            let octant_index = |p: &TorusPoint| {
                let idx = |v: f64| grid.nodes[m..].iter().position(|u| (u - v.abs()).abs() < 1e-12).unwrap();
                let c = p.coords();
                idx(c[0]) + m * idx(c[1]) + m * m * idx(c[2])
            };
            for (i, p) in pts.iter().enumerate() {
                let direct: f64 = full.iter().map(|q| x[octant_index(q)] / (w2(p, q) - z).abs()).sum();
                assert!((y[i] - direct).abs() <= 1e-10 * direct, "{} vs {}", y[i], direct);
            }
        }
    }
}
