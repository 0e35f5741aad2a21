//! Fast invariant checks, one or more per library module. Random samples
//! come from a seeded ChaCha stream so a run is reproducible.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use torusspec::asymptotics::{fit_log_asymptotics, sector_kernel, sector_kernel_l0, sector_kernel_l1};
use torusspec::birman_schwinger::{bs_operator, count_discrete, CountSide};
use torusspec::friedrichs::{critical_mu, delta, mu0, Side};
use torusspec::lattice::{band_edges_for_k, global_band_edges, w2, CouplingParams, SearchSpec, TorusPoint};
use torusspec::oracle::{build_direct_matrix, embed_symmetric, inertia_count};
use torusspec::quadrature::{i_integral, j0_lebesgue, QuadratureSpec, TorusGrid};

use crate::report::{Check, Params, SpectralReport};

type Outcome = Result<String, String>;

fn point(rng: &mut ChaCha8Rng) -> TorusPoint {
    TorusPoint::new(rng.random_range(-PI..=PI), rng.random_range(-PI..=PI), rng.random_range(-PI..=PI))
}

fn within(what: &str, err: f64, tol: f64) -> Outcome {
    if err <= tol {
        Ok(format!("{what} {err:.3e} <= {tol:e}"))
    } else {
        Err(format!("{what} {err:.3e} > {tol:e}"))
    }
}

fn lift<T>(r: torusspec::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn band_edges() -> Outcome {
    let (m, big_m) = lift(global_band_edges())?;
    within("|m| + |M - 18|", m.abs() + (big_m - 18.0).abs(), 1e-9)
}

fn w2_mirror(rng: &mut ChaCha8Rng) -> Outcome {
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let (k, p) = (point(rng), point(rng));
        worst = worst.max((w2(&k.mirror(), &p.mirror()) + w2(&k, &p) - 18.0).abs());
        worst = worst.max((w2(&k, &p) - w2(&p, &k)).abs());
    }
    within("max mirror/symmetry residual", worst, 1e-12)
}

fn orbit_invariance(rng: &mut ChaCha8Rng) -> Outcome {
    let s = SearchSpec::default();
    let mut worst = 0.0f64;
    for _ in 0..4 {
        let k = point(rng);
        let e = lift(band_edges_for_k(&k, &s))?;
        for q in torusspec::lattice::symmetry_orbit(&k) {
            let f = lift(band_edges_for_k(&q, &s))?;
            worst = worst.max((f.min - e.min).abs()).max((f.max - e.max).abs());
        }
    }
    within("max edge spread on orbits", worst, 1e-9)
}

fn j0_golden() -> Outcome {
    within("|J0 - 95.4702249|", (j0_lebesgue() - 95.4702249).abs(), 2e-7)
}

fn edge_mirror() -> Outcome {
    let v = lift(i_integral(&TorusPoint::pi(), 18.0, &QuadratureSpec::with_n(16)))?;
    within("|I(pi; 18) + J0| / J0", (v + j0_lebesgue()).abs() / j0_lebesgue(), 1e-6)
}

fn delta_mirror(rng: &mut ChaCha8Rng) -> Outcome {
    let spec = QuadratureSpec::with_n(16);
    let mut worst = 0.0f64;
    for _ in 0..4 {
        let k = point(rng);
        let mu = rng.random_range(0.1..2.0);
        let gamma = rng.random_range(-2.0..14.0);
        let m = lift(band_edges_for_k(&k, &SearchSpec::default()))?.min;
        let z = m - rng.random_range(0.05..3.0);
        let a = lift(delta(&CouplingParams::new(mu, gamma).map_err(|e| e.to_string())?, &k, z, &spec))?;
        let b = lift(delta(
            &CouplingParams::new(mu, 12.0 - gamma).map_err(|e| e.to_string())?,
            &k.mirror(),
            18.0 - z,
            &spec,
        ))?;
        worst = worst.max((a + b).abs());
    }
    within("max |Delta + mirrored Delta|", worst, 1e-6)
}

fn resonance() -> Outcome {
    let p = lift(CouplingParams::new(mu0(), 6.0))?;
    let s = QuadratureSpec::with_n(16);
    let a = lift(delta(&p, &TorusPoint::zero(), 0.0, &s))?;
    let b = lift(delta(&p, &TorusPoint::pi(), 18.0, &s))?;
    within("max(|Delta(0; 0)|, |Delta(pi; 18)|)", a.abs().max(b.abs()), 1e-5)
}

fn critical_mirror() -> Outcome {
    let mut worst = 0.0f64;
    for i in 1..24 {
        let g = 0.5 * i as f64;
        worst = worst.max((lift(critical_mu(g, Side::Right))? - lift(critical_mu(12.0 - g, Side::Left))?).abs());
    }
    within("max |mu_r(g) - mu_l(12 - g)|", worst, 1e-13)
}

fn bs_symmetric() -> Outcome {
    let op = lift(bs_operator(&lift(CouplingParams::new(0.3, 6.0))?, -0.7, &lift(TorusGrid::new(4))?))?;
    within("asymmetry of T^", op.asymmetry(), 1e-13)
}

fn bs_vs_oracle() -> Outcome {
    let p = lift(CouplingParams::new(0.8, 6.0))?;
    let grid = lift(TorusGrid::new(4))?;
    let mat = lift(build_direct_matrix(&p, 4))?;
    let mut tested = 0;
    for i in 0..12 {
        let z = -20.0 + 1.5 * i as f64;
        let bs = match count_discrete(&p, z, &grid) {
            Ok(c) => c.count,
            Err(torusspec::Error::SignCondition { .. }) => continue,
            Err(e) => return Err(e.to_string()),
        };
        let direct = inertia_count(&mat, z, CountSide::Below);
        if bs != direct {
            return Err(format!("z = {z}: Birman-Schwinger {bs} vs direct {direct}"));
        }
        tested += 1;
    }
    Ok(format!("{tested} values of z agree"))
}

fn oracle_structure(rng: &mut ChaCha8Rng) -> Outcome {
    let mat = lift(build_direct_matrix(&lift(CouplingParams::new(0.5, 6.0))?, 4))?;
    let m = lift(mat.dense())?;
    let asym = (&m - m.transpose()).amax();
    let d = mat.dim1;
    let w = lift(TorusGrid::new(4))?.weight();
    let mut f = vec![0.0; d * d];
    for i in 0..d {
        for j in i..d {
            let v: f64 = rng.random_range(-1.0..1.0);
            f[i * d + j] = v;
            f[j * d + i] = v;
        }
    }
    let l2 = w * w * f.iter().map(|v| v * v).sum::<f64>();
    let e: f64 = embed_symmetric(&mat, &f).iter().map(|v| v * v).sum();
    within("transpose + isometry residual", asym + (e - l2).abs() / l2, 1e-13)
}

fn sector_closed_forms() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..20 {
        let y = 0.2 * i as f64;
        worst = worst.max((sector_kernel(0, y) - sector_kernel_l0(y)).abs());
        worst = worst.max((sector_kernel(1, y) - sector_kernel_l1(y)).abs());
    }
    within("max closed-form residual", worst, 1e-10)
}

fn synthetic_fit() -> Outcome {
    let samples: Vec<(f64, usize)> = (2..=9)
        .map(|k| {
            let z = -(10f64.powi(-k));
            (z, (0.7 * z.abs().ln().abs()).round() as usize)
        })
        .collect();
    let fit = lift(fit_log_asymptotics(&samples, 0.0))?;
    within("|slope - 0.7|", (fit.slope - 0.7).abs(), 0.05)
}

fn report_round_trip(seed: u64) -> Outcome {
    let r = SpectralReport::new("selftest", Params::new(mu0(), 6.0, 64, 16, 1e-6, "lebesgue"), seed);
    let a = r.to_json().map_err(|e| e.to_string())?;
    let b = SpectralReport::from_json(&a).map_err(|e| e.to_string())?.to_json().map_err(|e| e.to_string())?;
    if a == b {
        Ok("serialize-parse-serialize is a fixed point".into())
    } else {
        Err("JSON changed on round trip".into())
    }
}

pub fn run(seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut push = |suite: &str, name: &str, r: Outcome| {
        let (passed, detail) = match r {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        out.push(Check { suite: suite.into(), name: name.into(), passed, detail });
    };
    push("lattice", "global band edges", band_edges());
    push("lattice", "w2 mirror and symmetry", w2_mirror(&mut rng));
    push("lattice", "edges constant on orbits", orbit_invariance(&mut rng));
    push("quadrature", "J0 golden value", j0_golden());
    push("quadrature", "I(pi; 18) = -J0", edge_mirror());
    push("friedrichs", "Delta mirror identity", delta_mirror(&mut rng));
    push("friedrichs", "double threshold resonance", resonance());
    push("friedrichs", "critical coupling mirror", critical_mirror());
    push("birman_schwinger", "T^ symmetric", bs_symmetric());
    push("birman_schwinger", "counts match the direct matrix", bs_vs_oracle());
    push("oracle", "adjointness and embedding isometry", oracle_structure(&mut rng));
    push("asymptotics", "sector closed forms", sector_closed_forms());
    push("asymptotics", "synthetic log fit", synthetic_fit());
    push("report", "JSON round trip", report_round_trip(seed));
    out
}
