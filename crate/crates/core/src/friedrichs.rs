//! The fiber operators: Fredholm determinant, fiber eigenvalues, the
//! two-particle branch, the essential spectrum and the critical constants.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{
    band_edges_for_k, compass_search, dispersion, reduced_kgrid, w1, BandEdges, CouplingParams,
    SearchSpec, TorusPoint, BAND_MAX, BAND_MIN, TWO_PI,
};
use crate::quadrature::{i_integral, i_integral_full, j0, Measure, QuadratureSpec};

/// Which threshold a critical coupling resonates with: `Left` is the lower
/// edge 0, `Right` the upper edge 18.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl std::str::FromStr for Side {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left" => Ok(Side::Left),
            "right" => Ok(Side::Right),
            _ => Err(Error::Domain(format!("side must be left or right, got {s:?}"))),
        }
    }
}

/// Ordered list of disjoint closed intervals.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BandSet {
    pub intervals: Vec<[f64; 2]>,
}

impl BandSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn three_particle() -> Self {
        Self { intervals: vec![[BAND_MIN, BAND_MAX]] }
    }

    /// Adds `[lo, hi]` and re-merges overlapping or touching intervals.
    pub fn insert(&mut self, lo: f64, hi: f64) {
        assert!(lo <= hi, "interval [{lo}, {hi}] is reversed");
        self.intervals.push([lo, hi]);
        self.intervals.sort_by(|a, b| a[0].total_cmp(&b[0]));
        let mut merged: Vec<[f64; 2]> = Vec::with_capacity(self.intervals.len());
        for iv in self.intervals.drain(..) {
            match merged.last_mut() {
                Some(last) if iv[0] <= last[1] => last[1] = last[1].max(iv[1]),
                _ => merged.push(iv),
            }
        }
        self.intervals = merged;
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, z: f64) -> bool {
        self.intervals.iter().any(|iv| iv[0] <= z && z <= iv[1])
    }

    /// Lowest point of the set.
    pub fn tau_min(&self) -> Option<f64> {
        self.intervals.first().map(|iv| iv[0])
    }

    pub fn tau_max(&self) -> Option<f64> {
        self.intervals.last().map(|iv| iv[1])
    }

    pub fn union(&self, other: &BandSet) -> BandSet {
        let mut out = self.clone();
        for iv in &other.intervals {
            out.insert(iv[0], iv[1]);
        }
        out
    }

    /// Same interval count and every endpoint within `tol`.
    pub fn approx_eq(&self, other: &BandSet, tol: f64) -> bool {
        self.len() == other.len()
            && self
                .intervals
                .iter()
                .zip(&other.intervals)
                .all(|(a, b)| (a[0] - b[0]).abs() <= tol && (a[1] - b[1]).abs() <= tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BranchEndpoints {
    pub e1: Option<f64>,
    pub e2: Option<f64>,
    pub e3: Option<f64>,
    pub e4: Option<f64>,
}

/// `Delta(k; z) = w1(k) - z - (mu^2 / 2) I(k; z)`.
pub fn delta(params: &CouplingParams, k: &TorusPoint, z: f64, spec: &QuadratureSpec) -> Result<f64> {
    Ok(w1(k, params.gamma) - z - params.half_mu_sq() * i_integral(k, z, spec)?)
}

/// `Delta` and `dDelta/dz` (the latter absent at a band edge).
pub fn delta_with_slope(
    params: &CouplingParams,
    k: &TorusPoint,
    z: f64,
    spec: &QuadratureSpec,
) -> Result<(f64, Option<f64>)> {
    let fi = i_integral_full(k, z, spec)?;
    let c = params.half_mu_sq();
    Ok((
        w1(k, params.gamma) - z - c * fi.value,
        fi.derivative.map(|d| -1.0 - c * d),
    ))
}

/// Distance from a band edge inside which roots are not resolved.
fn edge_offset(spec: &QuadratureSpec) -> f64 {
    (TWO_PI / spec.n as f64).powi(2)
}

/// Values of `Delta` this close to zero count as a threshold touch.
fn touch_tol(spec: &QuadratureSpec) -> f64 {
    spec.tol
}

/// Root of a strictly decreasing `f` in `[lo, hi]` with `f(lo) > 0 > f(hi)`:
/// Newton steps kept inside the bracket, bisection otherwise.
fn decreasing_root<F>(mut f: F, mut lo: f64, mut hi: f64, start: f64, xtol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<(f64, Option<f64>)>,
{
    let mut z = start.clamp(lo, hi);
    for _ in 0..200 {
        let (v, slope) = f(z)?;
        if v == 0.0 {
            return Ok(z);
        }
        if v > 0.0 {
            lo = z;
        } else {
            hi = z;
        }
        if hi - lo <= xtol * (1.0 + z.abs()) {
            return Ok(0.5 * (lo + hi));
        }
        let newton = slope.filter(|s| *s < 0.0).map(|s| z - v / s);
        z = match newton {
            Some(x) if x > lo && x < hi => x,
            _ => 0.5 * (lo + hi),
        };
        if (z - lo).min(hi - z) <= 0.25 * xtol {
            // a Newton step landing on the bracket edge confirms the root
            let (v2, _) = f(z)?;
            if v2.abs() <= 1e-13 {
                return Ok(z);
            }
            z = 0.5 * (lo + hi);
        }
    }
    Err(Error::Convergence(format!("root bracket [{lo}, {hi}] did not shrink")))
}

/// The fiber eigenvalue below `hi` given `Delta(k; hi) = d_hi < 0`.
fn root_below(params: &CouplingParams, k: &TorusPoint, spec: &QuadratureSpec, hi: f64, edge: f64) -> Result<f64> {
    let f = |z: f64| delta_with_slope(params, k, z, spec);
    let mut step = 1.0;
    let mut lo = edge - step;
    while lo >= hi || f(lo)?.0 <= 0.0 {
        step *= 2.0;
        lo = edge - step;
        if step > 1e12 {
            return Err(Error::Convergence("no lower bracket for the fiber root".into()));
        }
    }
    decreasing_root(f, lo, hi, 0.5 * (lo + hi), 1e-12)
}

fn root_above(params: &CouplingParams, k: &TorusPoint, spec: &QuadratureSpec, lo: f64, edge: f64) -> Result<f64> {
    let f = |z: f64| delta_with_slope(params, k, z, spec);
    let mut step = 1.0;
    let mut hi = edge + step;
    while hi <= lo || f(hi)?.0 >= 0.0 {
        step *= 2.0;
        hi = edge + step;
        if step > 1e12 {
            return Err(Error::Convergence("no upper bracket for the fiber root".into()));
        }
    }
    decreasing_root(f, lo, hi, 0.5 * (lo + hi), 1e-12)
}

fn edges_of(k: &TorusPoint) -> Result<BandEdges> {
    band_edges_for_k(k, &SearchSpec::default())
}

/// The fiber eigenvalue of `A_mu(k)` below `m(k)`, if one exists strictly
/// inside `(-inf, m(k))`.
///
/// When the lower edge sits at the centre of the quadrature cell (k = 0)
/// the determinant is evaluated on the edge itself. Otherwise existence is
/// probed at `m(k) - (2 pi / n)^2`; roots closer to the edge than that are
/// threshold-bound and reported as none.
pub fn fiber_eigenvalue_below(params: &CouplingParams, k: &TorusPoint, spec: &QuadratureSpec) -> Result<Option<f64>> {
    let e = edges_of(k)?;
    let probe = if e.min_at_origin() { e.min } else { e.min - edge_offset(spec) };
    let d = delta(params, k, probe, spec)?;
    if d >= -touch_tol(spec) {
        return Ok(None);
    }
    root_below(params, k, spec, probe, e.min).map(Some)
}

pub fn fiber_eigenvalue_above(params: &CouplingParams, k: &TorusPoint, spec: &QuadratureSpec) -> Result<Option<f64>> {
    let e = edges_of(k)?;
    let probe = if e.max_at_origin() { e.max } else { e.max + edge_offset(spec) };
    let d = delta(params, k, probe, spec)?;
    if d <= touch_tol(spec) {
        return Ok(None);
    }
    root_above(params, k, spec, probe, e.max).map(Some)
}

#[cfg(feature = "parallel")]
fn map_ordered<T: Sync, R: Send, F: Fn(&T) -> R + Sync + Send>(xs: &[T], f: F) -> Vec<R> {
    use rayon::prelude::*;
    xs.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_ordered<T, R, F: Fn(&T) -> R>(xs: &[T], f: F) -> Vec<R> {
    xs.iter().map(f).collect()
}

fn on_symmetry_plane(k: &TorusPoint) -> bool {
    k.coords()
        .iter()
        .all(|c| c.abs() < 1e-12 || (c.abs() - std::f64::consts::PI).abs() < 1e-12)
}

#[derive(Debug, Clone, Copy)]
struct FiberSample {
    k: TorusPoint,
    d0: f64,
    d18: f64,
}

/// Extreme fiber root over the sample set `ks`, polished by a local search
/// unless the extremizer is a corner of the cube.
fn extreme_root<R>(ks: &[(TorusPoint, f64)], root: R, maximize: bool, kgrid: usize) -> Result<f64>
where
    R: Fn(&TorusPoint) -> Result<f64>,
{
    let best = ks
        .iter()
        .copied()
        .reduce(|a, b| {
            let better = if maximize { b.1 > a.1 } else { b.1 < a.1 };
            if better { b } else { a }
        })
        .expect("non-empty sample set");
    if on_symmetry_plane(&best.0) {
        return Ok(best.1);
    }
    let step = 0.5 * TWO_PI / kgrid as f64;
    let (_, v) = compass_search(&root, best.0, step, 1e-6, maximize)?;
    Ok(if maximize { v.max(best.1) } else { v.min(best.1) })
}

/// `Lambda_mu` from a sweep over orbit representatives of the `kgrid^3` grid.
///
/// A fiber whose determinant is negative at 0 has its eigenvalue below 0;
/// roots falling inside `[0, 18]` are absorbed by the three-particle band
/// and never located. A fiber with `|Delta(k; 0)|` within tolerance touches
/// the threshold. Each side is returned as the hull of its roots.
pub fn two_particle_branch(
    params: &CouplingParams,
    kgrid: usize,
    spec: &QuadratureSpec,
) -> Result<(BandSet, BranchEndpoints)> {
    if kgrid < 12 || kgrid % 2 != 0 {
        return Err(Error::Domain(format!("kgrid must be even and >= 12, got {kgrid}")));
    }
    spec.validate()?;
    let reps: Vec<TorusPoint> = reduced_kgrid(kgrid).into_iter().map(|(k, _)| k).collect();
    let samples: Vec<Result<FiberSample>> = map_ordered(&reps, |k| {
        Ok(FiberSample {
            k: *k,
            d0: delta(params, k, BAND_MIN, spec)?,
            d18: delta(params, k, BAND_MAX, spec)?,
        })
    });
    let samples: Vec<FiberSample> = samples.into_iter().collect::<Result<_>>()?;
    let tau = touch_tol(spec);

    let mut ends = BranchEndpoints::default();

    let below: Vec<TorusPoint> = samples.iter().filter(|s| s.d0 < -tau).map(|s| s.k).collect();
    let touch_lo = samples.iter().any(|s| s.d0.abs() <= tau);
    if !below.is_empty() {
        let root = |k: &TorusPoint| -> Result<f64> {
            let d = delta(params, k, BAND_MIN, spec)?;
            if d >= 0.0 {
                return Ok(BAND_MIN);
            }
            root_below(params, k, spec, BAND_MIN, edges_of(k)?.min)
        };
        let roots: Vec<Result<f64>> = map_ordered(&below, root);
        let ks: Vec<(TorusPoint, f64)> = below
            .iter()
            .copied()
            .zip(roots.into_iter().collect::<Result<Vec<_>>>()?)
            .collect();
        ends.e1 = Some(extreme_root(&ks, root, false, kgrid)?);
        ends.e2 = Some(if below.len() < samples.len() {
            BAND_MIN
        } else {
            extreme_root(&ks, root, true, kgrid)?
        });
    } else if touch_lo {
        ends.e1 = Some(BAND_MIN);
        ends.e2 = Some(BAND_MIN);
    }

    let above: Vec<TorusPoint> = samples.iter().filter(|s| s.d18 > tau).map(|s| s.k).collect();
    let touch_hi = samples.iter().any(|s| s.d18.abs() <= tau);
    if !above.is_empty() {
        let root = |k: &TorusPoint| -> Result<f64> {
            let d = delta(params, k, BAND_MAX, spec)?;
            if d <= 0.0 {
                return Ok(BAND_MAX);
            }
            root_above(params, k, spec, BAND_MAX, edges_of(k)?.max)
        };
        let roots: Vec<Result<f64>> = map_ordered(&above, root);
        let ks: Vec<(TorusPoint, f64)> = above
            .iter()
            .copied()
            .zip(roots.into_iter().collect::<Result<Vec<_>>>()?)
            .collect();
        ends.e4 = Some(extreme_root(&ks, root, true, kgrid)?);
        ends.e3 = Some(if above.len() < samples.len() {
            BAND_MAX
        } else {
            extreme_root(&ks, root, false, kgrid)?
        });
    } else if touch_hi {
        ends.e3 = Some(BAND_MAX);
        ends.e4 = Some(BAND_MAX);
    }

    let mut lambda = BandSet::new();
    if let (Some(a), Some(b)) = (ends.e1, ends.e2) {
        lambda.insert(a, b);
    }
    if let (Some(a), Some(b)) = (ends.e3, ends.e4) {
        lambda.insert(a, b);
    }
    Ok((lambda, ends))
}

/// `sigma_ess = [0, 18] union Lambda_mu`.
pub fn essential_spectrum(params: &CouplingParams, kgrid: usize, spec: &QuadratureSpec) -> Result<BandSet> {
    let (lambda, _) = two_particle_branch(params, kgrid, spec)?;
    Ok(BandSet::three_particle().union(&lambda))
}

/// The coupling at which `Delta` vanishes at the left threshold `(0, 0)`
/// or the right threshold `(pi_bar, 18)`.
pub fn critical_mu(gamma: f64, side: Side) -> Result<f64> {
    critical_mu_with(gamma, side, Measure::Lebesgue)
}

pub fn critical_mu_with(gamma: f64, side: Side, measure: Measure) -> Result<f64> {
    let num = match side {
        Side::Left if gamma > 0.0 => 2.0 * gamma,
        Side::Right if gamma < 12.0 => 24.0 - 2.0 * gamma,
        _ => {
            return Err(Error::Domain(format!(
                "gamma = {gamma} is outside the domain of the {side:?} critical coupling"
            )))
        }
    };
    Ok((num / j0(measure)).sqrt())
}

/// `mu0 = mu_l(6) = mu_r(6)`.
pub fn mu0() -> f64 {
    critical_mu(6.0, Side::Left).expect("6 is in both domains")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalConstants {
    pub gamma0: f64,
    pub gamma1: f64,
    pub k0: TorusPoint,
    pub k1: TorusPoint,
    pub mu0: f64,
    pub j0: f64,
    pub measure: Measure,
}

impl CriticalConstants {
    pub fn mu_left(&self, gamma: f64) -> Result<f64> {
        critical_mu_with(gamma, Side::Left, self.measure)
    }

    pub fn mu_right(&self, gamma: f64) -> Result<f64> {
        critical_mu_with(gamma, Side::Right, self.measure)
    }
}

/// `gamma0`, `gamma1` and the extremizers `k0`, `k1`.
///
/// The extremizer of `Delta(.; 0)` depends on `mu`, which in turn is tied
/// to `gamma` through the critical coupling; the pair is iterated from
/// `gamma = 6` until `gamma` moves by less than `1e-8`.
pub fn critical_constants(kgrid: usize, spec: &QuadratureSpec) -> Result<CriticalConstants> {
    spec.validate()?;
    let j = j0(spec.measure);
    let reps: Vec<TorusPoint> = reduced_kgrid(kgrid).into_iter().map(|(k, _)| k).collect();
    let ints: Vec<Result<(f64, f64)>> = map_ordered(&reps, |k| {
        Ok((i_integral(k, BAND_MIN, spec)?, i_integral(k, BAND_MAX, spec)?))
    });
    let ints: Vec<(f64, f64)> = ints.into_iter().collect::<Result<_>>()?;

    // Delta at mu = mu_r(gamma) and z = 0: eps + gamma - (12 - gamma) I / J0
    let argmax0 = |gamma: f64, i0: &dyn Fn(&TorusPoint) -> Result<f64>, start: TorusPoint| {
        let f = |k: &TorusPoint| Ok(dispersion(k) + gamma - (12.0 - gamma) * i0(k)? / j);
        refine(f, start, kgrid, true)
    };
    let argmin18 = |gamma: f64, i18: &dyn Fn(&TorusPoint) -> Result<f64>, start: TorusPoint| {
        let f = |k: &TorusPoint| Ok(dispersion(k) + gamma - BAND_MAX - gamma * i18(k)? / j);
        refine(f, start, kgrid, false)
    };
    let i0 = |k: &TorusPoint| i_integral(k, BAND_MIN, spec);
    let i18 = |k: &TorusPoint| i_integral(k, BAND_MAX, spec);

    let pick = |gamma: f64, lower: bool| -> TorusPoint {
        let score = |idx: usize| {
            let k = &reps[idx];
            let (a, b) = ints[idx];
            if lower {
                dispersion(k) + gamma - (12.0 - gamma) * a / j
            } else {
                -(dispersion(k) + gamma - BAND_MAX - gamma * b / j)
            }
        };
        let best = (0..reps.len()).max_by(|&x, &y| score(x).total_cmp(&score(y))).unwrap();
        reps[best]
    };

    let mut gamma = 6.0;
    let mut k0 = TorusPoint::zero();
    let mut converged = false;
    for _ in 0..50 {
        k0 = argmax0(gamma, &i0, pick(gamma, true))?.0;
        let rho = i0(&k0)? / j;
        let next = (12.0 * rho - dispersion(&k0)) / (1.0 + rho);
        let done = (next - gamma).abs() <= 1e-8;
        gamma = next;
        if done {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Convergence("gamma0 fixed point did not settle".into()));
    }
    let gamma0 = gamma;

    let mut gamma = 6.0;
    let mut k1 = TorusPoint::zero();
    converged = false;
    for _ in 0..50 {
        k1 = argmin18(gamma, &i18, pick(gamma, false))?.0;
        let rho = i18(&k1)? / j;
        let next = (BAND_MAX - dispersion(&k1)) / (1.0 - rho);
        let done = (next - gamma).abs() <= 1e-8;
        gamma = next;
        if done {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Convergence("gamma1 fixed point did not settle".into()));
    }

    Ok(CriticalConstants {
        gamma0,
        gamma1: gamma,
        k0,
        k1,
        mu0: critical_mu_with(6.0, Side::Left, spec.measure)?,
        j0: j,
        measure: spec.measure,
    })
}

fn refine<F>(f: F, start: TorusPoint, kgrid: usize, maximize: bool) -> Result<(TorusPoint, f64)>
where
    F: Fn(&TorusPoint) -> Result<f64>,
{
    if on_symmetry_plane(&start) {
        return Ok((start, f(&start)?));
    }
    compass_search(f, start, 0.5 * TWO_PI / kgrid as f64, 1e-6, maximize)
}

/// Regime of Theorems on the band structure at a critical coupling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `mu = mu_r(gamma)`, `gamma < gamma0`: `[E1, E2] u [0, 18]`.
    RightGapBelow,
    /// `mu = mu_r(gamma)`, `gamma0 <= gamma < 6`: `[E1, 18]`.
    RightAttachedBelow,
    /// `mu = mu_r(gamma)`, `6 <= gamma < 12`: `[0, 18]`.
    RightBare,
    /// `mu = mu_l(gamma)`, `0 < gamma <= 6`: `[0, 18]`.
    LeftBare,
    /// `mu = mu_l(gamma)`, `6 < gamma <= gamma1`: `[0, E4]`.
    LeftAttachedAbove,
    /// `mu = mu_l(gamma)`, `gamma > gamma1`: `[0, 18] u [E3, E4]`.
    LeftGapAbove,
}

impl Regime {
    pub fn of(gamma: f64, side: Side, c: &CriticalConstants) -> Result<Regime> {
        Ok(match side {
            Side::Right if gamma >= 12.0 => {
                return Err(Error::Domain(format!("right side needs gamma < 12, got {gamma}")))
            }
            Side::Right if gamma < c.gamma0 => Regime::RightGapBelow,
            Side::Right if gamma < 6.0 => Regime::RightAttachedBelow,
            Side::Right => Regime::RightBare,
            Side::Left if gamma <= 0.0 => {
                return Err(Error::Domain(format!("left side needs gamma > 0, got {gamma}")))
            }
            Side::Left if gamma <= 6.0 => Regime::LeftBare,
            Side::Left if gamma <= c.gamma1 => Regime::LeftAttachedAbove,
            Side::Left => Regime::LeftGapAbove,
        })
    }

    pub fn label(&self) -> &'static str {
        match self {
            Regime::RightGapBelow => "gamma < gamma0: [E1;E2] u [0;18]",
            Regime::RightAttachedBelow => "gamma0 <= gamma < 6: [E1;18]",
            Regime::RightBare => "6 <= gamma < 12: [0;18]",
            Regime::LeftBare => "0 < gamma <= 6: [0;18]",
            Regime::LeftAttachedAbove => "6 < gamma <= gamma1: [0;E4]",
            Regime::LeftGapAbove => "gamma > gamma1: [0;18] u [E3;E4]",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub regime: Regime,
    pub label: String,
    pub gamma: f64,
    pub mu: f64,
    pub predicted: BandSet,
    pub computed: BandSet,
    pub endpoints: BranchEndpoints,
}

/// Tolerance on endpoint agreement between theorem and computation.
pub const CLASSIFY_TOL: f64 = 1e-4;

/// Computes `sigma_ess` at the critical coupling of `side` and checks it
/// against the structure predicted for the regime of `gamma`.
pub fn classify_bands(
    gamma: f64,
    side: Side,
    constants: &CriticalConstants,
    kgrid: usize,
    spec: &QuadratureSpec,
) -> Result<Classification> {
    let regime = Regime::of(gamma, side, constants)?;
    let mu = match side {
        Side::Left => constants.mu_left(gamma)?,
        Side::Right => constants.mu_right(gamma)?,
    };
    let params = CouplingParams::new(mu, gamma)?;
    let (lambda, ends) = two_particle_branch(&params, kgrid, spec)?;
    let computed = BandSet::three_particle().union(&lambda);

    let tol = CLASSIFY_TOL;
    let mismatch = |what: &str| Error::Mismatch(format!("{}: {what} (endpoints {ends:?})", regime.label()));
    let lower_gap = matches!(ends.e2, Some(e) if e < -tol);
    let lower_attached = matches!((ends.e1, ends.e2), (Some(a), Some(b)) if a < -tol && b.abs() <= tol);
    let lower_none = ends.e1.map_or(true, |e| e >= -tol);
    let upper_gap = matches!(ends.e3, Some(e) if e > BAND_MAX + tol);
    let upper_attached =
        matches!((ends.e3, ends.e4), (Some(a), Some(b)) if (a - BAND_MAX).abs() <= tol && b > BAND_MAX + tol);
    let upper_none = ends.e4.map_or(true, |e| e <= BAND_MAX + tol);

    let mut predicted = BandSet::new();
    match regime {
        Regime::RightGapBelow => {
            if !(lower_gap && upper_none) {
                return Err(mismatch("expected a branch strictly below 0"));
            }
            predicted.insert(ends.e1.unwrap(), ends.e2.unwrap());
            predicted.insert(BAND_MIN, BAND_MAX);
        }
        Regime::RightAttachedBelow => {
            if !(lower_attached && upper_none) {
                return Err(mismatch("expected a branch attached to 0"));
            }
            predicted.insert(ends.e1.unwrap(), BAND_MAX);
        }
        Regime::RightBare | Regime::LeftBare => {
            if !(lower_none && upper_none) {
                return Err(mismatch("expected no branch outside [0, 18]"));
            }
            predicted.insert(BAND_MIN, BAND_MAX);
        }
        Regime::LeftAttachedAbove => {
            if !(upper_attached && lower_none) {
                return Err(mismatch("expected a branch attached to 18"));
            }
            predicted.insert(BAND_MIN, ends.e4.unwrap());
        }
        Regime::LeftGapAbove => {
            if !(upper_gap && lower_none) {
                return Err(mismatch("expected a branch strictly above 18"));
            }
            predicted.insert(BAND_MIN, BAND_MAX);
            predicted.insert(ends.e3.unwrap(), ends.e4.unwrap());
        }
    }
    if !predicted.approx_eq(&computed, tol) {
        return Err(mismatch("interval structure differs"));
    }
    Ok(Classification {
        regime,
        label: regime.label().to_string(),
        gamma,
        mu,
        predicted,
        computed,
        endpoints: ends,
    })
}
