//! Nystrom discretization of the Faddeev operator `T_mu(z)` and of its
//! symmetrized form `T^_mu(z)`; eigenvalue counts outside `sigma_ess`.
//!
//! Everything here lives on the nodes of one `TorusGrid`, so the
//! determinant is the node sum `Delta_n(p; z)` rather than the extrapolated
//! integral. On that discretization the Birman-Schwinger count equals the
//! eigencount of the direct block matrix exactly.

mod tensor;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{pair_term, w1, CouplingParams, TorusPoint, BAND_MAX, BAND_MIN};
use crate::linalg::{count_above, max_asymmetry, sym_eigenvalues};
use crate::quadrature::TorusGrid;

pub use tensor::PerronBounds;

/// Grids up to this many nodes use dense matrices.
pub const DENSE_NODE_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CountSide {
    Below,
    Above,
}

impl CountSide {
    /// Side of the band a real `z` lies on; `None` inside `[0, 18]`.
    pub fn of(z: f64) -> Option<CountSide> {
        if z < BAND_MIN {
            Some(CountSide::Below)
        } else if z > BAND_MAX {
            Some(CountSide::Above)
        } else {
            None
        }
    }
}

impl std::str::FromStr for CountSide {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "below" => Ok(CountSide::Below),
            "above" => Ok(CountSide::Above),
            _ => Err(Error::Domain(format!("side must be below or above, got {s:?}"))),
        }
    }
}

/// Per-axis table `h[a][b]` of `w2` contributions on the grid nodes, so
/// that `w2(x_l, x_m) = sum_i h[a_i][b_i]`.
pub(crate) fn pair_table(grid: &TorusGrid) -> Vec<f64> {
    let n = grid.n;
    let mut h = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..n {
            h[a * n + b] = pair_term(grid.nodes[a], grid.nodes[b]);
        }
    }
    h
}

struct Discrete<'a> {
    grid: &'a TorusGrid,
    h: Vec<f64>,
    idx: Vec<[usize; 3]>,
}

impl<'a> Discrete<'a> {
    fn new(grid: &'a TorusGrid) -> Self {
        let idx = (0..grid.len()).map(|l| grid.axis_indices(l)).collect();
        Self { grid, h: pair_table(grid), idx }
    }

    #[inline]
    fn w2(&self, l: usize, m: usize) -> f64 {
        let n = self.grid.n;
        let (a, b) = (self.idx[l], self.idx[m]);
        self.h[a[0] * n + b[0]] + self.h[a[1] * n + b[1]] + self.h[a[2] * n + b[2]]
    }

    /// `Delta_n(x_l; z)` for every node.
    fn delta(&self, params: &CouplingParams, z: f64) -> Vec<f64> {
        let w = self.grid.weight();
        let c = params.half_mu_sq();
        let len = self.grid.len();
        (0..len)
            .map(|l| {
                let s: f64 = (0..len).map(|m| 1.0 / (self.w2(l, m) - z)).sum();
                w1(&self.grid.point(l), params.gamma) - z - c * w * s
            })
            .collect()
    }
}

fn check_signs(delta: &[f64], z: f64, side: CountSide) -> Result<()> {
    for (node, &d) in delta.iter().enumerate() {
        let ok = match side {
            CountSide::Below => d > 0.0,
            CountSide::Above => d < 0.0,
        };
        if !ok {
            return Err(Error::SignCondition { node, delta: d, z });
        }
    }
    Ok(())
}

fn side_of(z: f64) -> Result<CountSide> {
    CountSide::of(z).ok_or_else(|| Error::Domain(format!("z = {z} lies in the three-particle band [0, 18]")))
}

fn dense_guard(grid: &TorusGrid) -> Result<()> {
    if grid.len() > DENSE_NODE_LIMIT {
        return Err(Error::Capacity(format!(
            "{} nodes exceed the dense limit {DENSE_NODE_LIMIT}",
            grid.len()
        )));
    }
    Ok(())
}

/// A discretized integral operator: nodes, weights and the matrix acting on
/// coefficient vectors (weights already folded in).
#[derive(Debug, Clone, PartialEq)]
pub struct NystromOperator {
    pub nodes: Vec<TorusPoint>,
    pub weights: Vec<f64>,
    pub kernel: DMatrix<f64>,
}

impl NystromOperator {
    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        sym_eigenvalues(&self.kernel)
    }

    /// `max |K_ij - K_ji|`.
    pub fn asymmetry(&self) -> f64 {
        max_asymmetry(&self.kernel)
    }
}

/// `T^_mu(z)`: entries `(mu^2/2) w / (sqrt|Delta_l| sqrt|Delta_m| |w2_lm - z|)`.
///
/// Below the band every `Delta_n(p; z)` must be positive, above it every one
/// must be negative; the two sign choices make the matrix positive in both cases.
pub fn bs_operator(params: &CouplingParams, z: f64, grid: &TorusGrid) -> Result<NystromOperator> {
    dense_guard(grid)?;
    let side = side_of(z)?;
    let disc = Discrete::new(grid);
    let delta = disc.delta(params, z);
    check_signs(&delta, z, side)?;
    let len = grid.len();
    let w = grid.weight();
    let c = params.half_mu_sq();
    let root: Vec<f64> = delta.iter().map(|d| d.abs().sqrt()).collect();
    let mut k = DMatrix::zeros(len, len);
    for l in 0..len {
        for m in l..len {
            let v = c * w / (root[l] * root[m] * (disc.w2(l, m) - z).abs());
            k[(l, m)] = v;
            k[(m, l)] = v;
        }
    }
    Ok(NystromOperator {
        nodes: grid.points(),
        weights: vec![w; len],
        kernel: k,
    })
}

/// `n(lambda, op)`: eigenvalues strictly above `lambda`.
pub fn count_above_threshold(op: &NystromOperator, lambda: f64) -> usize {
    count_above(&op.kernel, lambda)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountResult {
    pub z: f64,
    pub side: CountSide,
    pub count: usize,
    pub grid_n: usize,
}

/// Number of eigenvalues below `z < 0` (or above `z > 18`) of the operator
/// discretized on `grid`, as `n(1, T^_mu(z))`.
///
/// Small grids use a dense eigensolve. Larger grids only certify a zero
/// count: `T^` is entrywise positive, so its largest eigenvalue is the
/// Perron root, attained in the fully even sector, and Collatz-Wielandt
/// bounds from a power iteration there decide whether it is below 1.
pub fn count_discrete(params: &CouplingParams, z: f64, grid: &TorusGrid) -> Result<CountResult> {
    let side = side_of(z)?;
    let count = if grid.len() <= DENSE_NODE_LIMIT {
        count_above_threshold(&bs_operator(params, z, grid)?, 1.0)
    } else {
        let b = tensor::perron_bounds(params, z, side, grid)?;
        if b.upper < 1.0 {
            0
        } else {
            return Err(Error::Capacity(format!(
                "spectral radius bounds [{}, {}] at n = {} do not certify the count",
                b.lower, b.upper, grid.n
            )));
        }
    };
    Ok(CountResult { z, side, count, grid_n: grid.n })
}

/// Bounds on the largest eigenvalue of `T^_mu(z)` for grids of any size.
pub fn spectral_radius_bounds(params: &CouplingParams, z: f64, grid: &TorusGrid) -> Result<PerronBounds> {
    tensor::perron_bounds(params, z, side_of(z)?, grid)
}

/// Smallest `Delta_n(p; z)` (below) or largest (above) over the grid nodes.
pub fn extreme_grid_delta(params: &CouplingParams, z: f64, grid: &TorusGrid) -> Result<f64> {
    let side = side_of(z)?;
    tensor::extreme_delta(params, z, side, grid)
}

/// j-th largest eigenvalue of `T^_mu(z)`, 1-based.
fn lambda_j(params: &CouplingParams, z: f64, grid: &TorusGrid, j: usize) -> Result<f64> {
    let ev = bs_operator(params, z, grid)?.eigenvalues();
    Ok(ev[ev.len() - j])
}

/// Root of a monotone `f` on `[a, b]` with a sign change, by the Illinois
/// variant of regula falsi.
fn illinois<F: FnMut(f64) -> Result<f64>>(mut f: F, mut a: f64, mut b: f64, xtol: f64) -> Result<f64> {
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Convergence(format!("no sign change on [{a}, {b}]")));
    }
    let mut side = 0;
    for _ in 0..200 {
        let c = (a * fb - b * fa) / (fb - fa);
        let fc = f(c)?;
        if fc == 0.0 || (b - a).abs() <= xtol {
            return Ok(c);
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        if (b - a).abs() <= xtol {
            return Ok(0.5 * (a + b));
        }
    }
    Err(Error::Convergence("Illinois iteration did not converge".into()))
}

/// Eigenvalues of the discretized operator inside `window`, ascending. With
/// more than `max_count` present, those farthest from the band are kept.
///
/// The j-th eigenvalue below the band is the root of
/// `lambda_j(T^(z)) = 1`, which is monotone in `z`.
pub fn locate_eigenvalues(
    params: &CouplingParams,
    window: (f64, f64),
    max_count: usize,
    grid: &TorusGrid,
) -> Result<Vec<f64>> {
    let (a, b) = window;
    if !(a < b) {
        return Err(Error::Domain(format!("empty window ({a}, {b})")));
    }
    let side = side_of(a)?;
    if side_of(b)? != side {
        return Err(Error::Domain(format!("window ({a}, {b}) straddles the band")));
    }
    let count = |z: f64| -> Result<usize> { Ok(count_above_threshold(&bs_operator(params, z, grid)?, 1.0)) };
    let (na, nb) = (count(a)?, count(b)?);
    let mut out = Vec::new();
    match side {
        CountSide::Below => {
            // eigenvalues ascending are the crossings of lambda_j, j = na+1..=nb
            for j in (na + 1)..=nb {
                if out.len() == max_count {
                    break;
                }
                out.push(illinois(|z| Ok(lambda_j(params, z, grid, j)? - 1.0), a, b, 1e-12)?);
            }
        }
        CountSide::Above => {
            // count above z decreases with z; the j-th largest eigenvalue is where lambda_j hits 1
            for j in (nb + 1)..=na {
                if out.len() == max_count {
                    break;
                }
                out.push(illinois(|z| Ok(lambda_j(params, z, grid, j)? - 1.0), a, b, 1e-12)?);
            }
        }
    }
    out.sort_by(|x, y| x.total_cmp(y));
    Ok(out)
}

/// Smallest singular value of `1 - T_mu(z)` for the (non-symmetric)
/// Nystrom matrix of `T_mu(z)`; it vanishes exactly when `z` is an eigenvalue.
pub fn verify_faddeev(params: &CouplingParams, z: f64, grid: &TorusGrid) -> Result<f64> {
    dense_guard(grid)?;
    side_of(z)?;
    let disc = Discrete::new(grid);
    let delta = disc.delta(params, z);
    if let Some((node, &d)) = delta.iter().enumerate().find(|(_, d)| **d == 0.0) {
        return Err(Error::SignCondition { node, delta: d, z });
    }
    let len = grid.len();
    let c = params.half_mu_sq() * grid.weight();
    let a = DMatrix::from_fn(len, len, |l, m| {
        let t = c / (delta[l] * (disc.w2(l, m) - z));
        if l == m { 1.0 - t } else { -t }
    });
    a.try_svd(false, false, 1e-14, 10_000)
        .map(|svd| svd.singular_values.min())
        .ok_or_else(|| Error::Convergence("SVD of 1 - T did not converge".into()))
}
