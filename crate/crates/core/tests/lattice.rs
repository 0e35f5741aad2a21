use std::f64::consts::PI;

use proptest::prelude::*;
use torusspec::lattice::*;

fn angle() -> impl Strategy<Value = f64> {
    -PI..=PI
}

fn point() -> impl Strategy<Value = TorusPoint> {
    (angle(), angle(), angle()).prop_map(|(a, b, c)| TorusPoint::new(a, b, c))
}

// Test-side w2: lift p next to k on each circle, then average.
fn w2_lifted(k: [f64; 3], p: [f64; 3]) -> f64 {
    let e = |x: [f64; 3]| x.iter().map(|v| 1.0 - v.cos()).sum::<f64>();
    let mut mid = [0.0; 3];
    let mut tie = [false; 3];
    for i in 0..3 {
        let mut q = p[i];
        while q - k[i] > PI {
            q -= 2.0 * PI;
        }
        while q - k[i] <= -PI {
            q += 2.0 * PI;
        }
        tie[i] = ((q - k[i]).abs() - PI).abs() < 1e-12;
        mid[i] = 0.5 * (k[i] + q);
    }
    let m: f64 = (0..3).map(|i| if tie[i] { 1.0 } else { 1.0 - mid[i].cos() }).sum();
    e(k) + m + e(p)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn dispersion_even_and_mirrored(k in point()) {
        prop_assert!((dispersion(&-k) - dispersion(&k)).abs() < 1e-12);
        prop_assert!((dispersion(&k.mirror()) - (6.0 - dispersion(&k))).abs() < 1e-12);
    }

    #[test]
    fn w2_symmetric_bounded_mirrored(k in point(), p in point()) {
        let v = w2(&k, &p);
        prop_assert!((v - w2(&p, &k)).abs() < 1e-12);
        prop_assert!((-1e-12..=18.0 + 1e-12).contains(&v));
        prop_assert!((w2(&k.mirror(), &p.mirror()) - (18.0 - v)).abs() < 1e-12);
    }

    #[test]
    fn w2_matches_lifted_reference(k in point(), p in point()) {
        prop_assert!((w2(&k, &p) - w2_lifted(k.coords(), p.coords())).abs() < 1e-12);
    }

    #[test]
    fn mirror_is_involution(k in point()) {
        prop_assert!(k.mirror().mirror().distance(&k) < 1e-12);
        for c in k.mirror().coords() {
            prop_assert!(c > -PI && c <= PI);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn band_edges_constant_on_orbit(k in point()) {
        let s = SearchSpec::default();
        let e = band_edges_for_k(&k, &s).unwrap();
        prop_assert!(e.min <= e.max);
        for q in symmetry_orbit(&k) {
            let f = band_edges_for_k(&q, &s).unwrap();
            prop_assert!((f.min - e.min).abs() < 1e-9);
            prop_assert!((f.max - e.max).abs() < 1e-9);
        }
    }

    #[test]
    fn edge_mirror_identity(k in point()) {
        let s = SearchSpec::default();
        let e = band_edges_for_k(&k, &s).unwrap();
        let f = band_edges_for_k(&k.mirror(), &s).unwrap();
        prop_assert!((f.min - (18.0 - e.max)).abs() < 1e-9);
    }

    #[test]
    fn edges_bracket_sampled_values(k in point(), p in point()) {
        let e = band_edges_for_k(&k, &SearchSpec::default()).unwrap();
        let v = w2(&k, &p);
        prop_assert!(v >= e.min - 1e-12 && v <= e.max + 1e-12);
    }
}

/// Brute-force min/max of `p -> w2(k, p)` on a 64^3 grid followed by a
/// shrinking local grid search around the best node.
fn brute_edges(k: [f64; 3]) -> (f64, f64) {
    let n = 64;
    let node = |j: usize| -PI + 2.0 * PI * j as f64 / n as f64;
    let mut best = [(f64::INFINITY, [0.0; 3]), (f64::NEG_INFINITY, [0.0; 3])];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let p = [node(a), node(b), node(c)];
                let v = w2_lifted(k, p);
                if v < best[0].0 {
                    best[0] = (v, p);
                }
                if v > best[1].0 {
                    best[1] = (v, p);
                }
            }
        }
    }
    let mut out = [0.0; 2];
    for (s, sign) in [(0usize, 1.0), (1, -1.0)] {
        let (mut v, mut p) = best[s];
        let mut h = 2.0 * PI / n as f64;
        while h > 1e-9 {
            let mut moved = false;
            for i in 0..3 {
                for d in [-h, h] {
                    let mut q = p;
                    q[i] += d;
                    let u = w2_lifted(k, q);
                    if sign * u < sign * v {
                        v = u;
                        p = q;
                        moved = true;
                    }
                }
            }
            if !moved {
                h *= 0.5;
            }
        }
        out[s] = v;
    }
    (out[0], out[1])
}

#[test]
fn corner_edges_against_brute_force() {
    let (m0, big_m0) = brute_edges([0.0; 3]);
    let (m_pi, big_m_pi) = brute_edges([PI; 3]);
    assert!(m0.abs() < 1e-12);
    assert!((big_m0 - 9.0).abs() < 1e-9);
    assert!((m_pi - 9.0).abs() < 1e-9);
    assert!((big_m_pi - 18.0).abs() < 1e-12);

    let s = SearchSpec::default();
    let e = band_edges_for_k(&TorusPoint::pi(), &s).unwrap();
    assert!((e.min - m_pi).abs() < 1e-9);
    assert_eq!(e.max, 18.0);
}

#[test]
fn generic_edges_against_brute_force() {
    for k in [[0.4, -1.2, 2.9], [3.0, 0.1, -0.7]] {
        let (lo, hi) = brute_edges(k);
        let e = band_edges_for_k(&TorusPoint::from(k), &SearchSpec::default()).unwrap();
        assert!((e.min - lo).abs() < 1e-8, "{} vs {}", e.min, lo);
        assert!((e.max - hi).abs() < 1e-8, "{} vs {}", e.max, hi);
    }
}

#[test]
fn global_edges_fast() {
    let t = std::time::Instant::now();
    let (m, mm) = global_band_edges().unwrap();
    assert!(m.abs() <= 1e-9 && (mm - 18.0).abs() <= 1e-9);
    assert!(t.elapsed().as_secs_f64() < 1.0);
}

#[test]
fn sampled_extremes_within_range() {
    // 32^3 reduced k-grid against a 32^3 p-grid
    let n = 32;
    let nodes: Vec<f64> = (0..n).map(|j| -PI + 2.0 * PI * j as f64 / n as f64).collect();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (k, _) in reduced_kgrid(n).iter().step_by(7) {
        for &a in &nodes {
            for &b in &nodes {
                for &c in &nodes {
                    let v = w2(k, &TorusPoint::new(a, b, c));
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
        }
    }
    assert!(lo >= 0.0);
    assert!(hi <= 18.0);
}

#[test]
fn orbit_examples() {
    assert_eq!(symmetry_orbit(&TorusPoint::zero()).len(), 1);
    for a in [0.1, 1.0, 3.0] {
        assert_eq!(symmetry_orbit(&TorusPoint::new(a, 0.0, 0.0)).len(), 6);
    }
    assert_eq!(symmetry_orbit(&TorusPoint::new(0.2, 1.3, -2.2)).len(), 48);
}
