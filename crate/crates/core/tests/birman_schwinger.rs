use torusspec::birman_schwinger::*;
use torusspec::friedrichs::mu0;
use torusspec::lattice::CouplingParams;
use torusspec::oracle::{build_direct_matrix, inertia_count};
use torusspec::quadrature::TorusGrid;
use torusspec::Error;

fn params(mu: f64, gamma: f64) -> CouplingParams {
    CouplingParams::new(mu, gamma).unwrap()
}

#[test]
fn operator_symmetric_and_positive() {
    let g = TorusGrid::new(6).unwrap();
    for (p, z) in [(params(0.3, 6.0), -0.7), (params(0.8, 6.0), 22.0), (params(3.0, 0.0), -60.0)] {
        let op = bs_operator(&p, z, &g).unwrap();
        assert_eq!(op.dim(), 216);
        assert!(op.asymmetry() < 1e-13);
        assert!(op.kernel.iter().all(|&v| v > 0.0));
    }
}

#[test]
fn mirrored_operator_has_same_spectrum() {
    let g = TorusGrid::new(6).unwrap();
    for (mu, gamma, z) in [(0.5, 2.0, -4.0), (0.9, 2.0, -12.0), (1.5, 8.0, -20.0)] {
        let a = bs_operator(&params(mu, gamma), z, &g).unwrap().eigenvalues();
        let b = bs_operator(&params(mu, 12.0 - gamma), 18.0 - z, &g).unwrap().eigenvalues();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10 * (1.0 + x.abs()), "{x} {y}");
        }
    }
}

#[test]
fn sign_condition_and_band_reported() {
    let g = TorusGrid::new(4).unwrap();
    // strong coupling makes Delta negative somewhere just below the band
    assert!(matches!(bs_operator(&params(6.0, 0.0), -0.5, &g), Err(Error::SignCondition { .. })));
    assert!(matches!(bs_operator(&params(0.5, 6.0), 3.0, &g), Err(Error::Domain(_))));
    assert!(matches!(count_discrete(&params(0.5, 6.0), 9.0, &g), Err(Error::Domain(_))));
}

#[test]
fn count_zero_at_symmetric_point() {
    let p = params(mu0(), 6.0);
    for n in [6, 8] {
        let g = TorusGrid::new(n).unwrap();
        assert_eq!(count_discrete(&p, -1.0, &g).unwrap().count, 0);
        assert_eq!(count_discrete(&p, 19.0, &g).unwrap().count, 0);
    }
}

/// Counts from the Birman-Schwinger operator and from the inertia of the
/// assembled block matrix, on a sweep of z up to where the sign condition
/// first fails.
#[test]
fn counts_agree_with_direct_matrix() {
    for (mu, gamma) in [(3.0, 0.0), (2.5, -2.0), (4.0, 6.0)] {
        let p = params(mu, gamma);
        let g = TorusGrid::new(6).unwrap();
        let mat = build_direct_matrix(&p, 6).unwrap();
        let mut seen = Vec::new();
        for i in 0..28 {
            let z = -70.0 + 2.5 * i as f64;
            let bs = match count_discrete(&p, z, &g) {
                Ok(c) => c.count,
                Err(Error::SignCondition { .. }) => continue,
                Err(e) => panic!("{e}"),
            };
            let direct = inertia_count(&mat, z, CountSide::Below);
            assert_eq!(bs, direct, "mu {mu} gamma {gamma} z {z}");
            seen.push(bs);
        }
        seen.dedup();
        assert!(seen.len() >= 2, "counts did not vary: {seen:?}");
    }
}

#[test]
fn inertia_matches_at_symmetric_point() {
    let p = params(mu0(), 6.0);
    let mat = build_direct_matrix(&p, 8).unwrap();
    let g = TorusGrid::new(8).unwrap();
    for z in [-1.0, -0.1] {
        assert_eq!(inertia_count(&mat, z, CountSide::Below), count_discrete(&p, z, &g).unwrap().count);
    }
}

#[test]
fn located_eigenvalues_solve_the_faddeev_equation() {
    let p = params(3.0, 0.0);
    let g = TorusGrid::new(6).unwrap();
    let mat = build_direct_matrix(&p, 6).unwrap();
    let ev = locate_eigenvalues(&p, (-60.0, -40.0), 4, &g).unwrap();
    assert!(!ev.is_empty());
    for &e in &ev {
        assert!(verify_faddeev(&p, e, &g).unwrap() < 1e-8, "{e}");
        // the direct count steps across each located eigenvalue
        let below = inertia_count(&mat, e - 1e-7, CountSide::Below);
        let above = inertia_count(&mat, e + 1e-7, CountSide::Below);
        assert!(above > below, "{e}: {below} -> {above}");
    }
    assert!(verify_faddeev(&p, ev[0] - 1.0, &g).unwrap() > 1e-4);
}

#[test]
fn perron_bounds_bracket_dense_radius() {
    let g = TorusGrid::new(8).unwrap();
    for (p, z) in [(params(0.3, 6.0), -0.3), (params(0.8, 6.0), -4.0), (params(1.5, 4.0), 30.0)] {
        let top = *bs_operator(&p, z, &g).unwrap().eigenvalues().last().unwrap();
        let b = spectral_radius_bounds(&p, z, &g).unwrap();
        assert!(b.lower <= top + 1e-12 && top <= b.upper + 1e-12, "{b:?} {top}");
    }
}

#[test]
fn large_grid_certifies_zero() {
    let p = params(mu0(), 6.0);
    let g = TorusGrid::new(32).unwrap();
    assert!(g.len() > DENSE_NODE_LIMIT);
    let below = count_discrete(&p, -0.01, &g).unwrap();
    let above = count_discrete(&p, 18.01, &g).unwrap();
    assert_eq!((below.count, above.count), (0, 0));
    assert!(extreme_grid_delta(&p, -0.01, &g).unwrap() > 0.0);
    assert!(extreme_grid_delta(&p, 18.01, &g).unwrap() < 0.0);
}

#[test]
fn threshold_counting() {
    let g = TorusGrid::new(4).unwrap();
    let op = bs_operator(&params(0.5, 2.0), -4.0, &g).unwrap();
    let ev = op.eigenvalues();
    for lambda in [0.01, 0.1, 0.5] {
        assert_eq!(count_above_threshold(&op, lambda), ev.iter().filter(|&&e| e > lambda).count());
    }
    assert_eq!("below".parse::<CountSide>().unwrap(), CountSide::Below);
    assert_eq!(CountSide::of(9.0), None);
}
