use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use torusspec::birman_schwinger::CountSide;
use torusspec::lattice::{w1, w2, CouplingParams};
use torusspec::oracle::*;
use torusspec::quadrature::TorusGrid;
use torusspec::Error;

fn params(mu: f64, gamma: f64) -> CouplingParams {
    CouplingParams::new(mu, gamma).unwrap()
}

#[test]
fn diagonal_is_the_multiset_of_symbols() {
    let mat = build_direct_matrix(&params(0.4, 2.5), 4).unwrap();
    let m = mat.dense().unwrap();
    let g = TorusGrid::new(4).unwrap();
    let pts = g.points();
    let mut expect: Vec<f64> = pts.iter().map(|p| w1(p, 2.5)).collect();
    for i in 0..pts.len() {
        for j in i..pts.len() {
            expect.push(w2(&pts[i], &pts[j]));
        }
    }
    let mut diag: Vec<f64> = (0..m.nrows()).map(|i| m[(i, i)]).collect();
    expect.sort_by(f64::total_cmp);
    diag.sort_by(f64::total_cmp);
    assert_eq!(diag, expect);
    // off-diagonal entries only couple H1 to H2: one per diagonal pair, two per other pair
    let d1 = mat.dim1;
    let off = m.iter().filter(|v| **v != 0.0).count() - m.nrows();
    assert_eq!(off, 2 * (d1 + 2 * (mat.dim2 - d1)));
    assert!(m.view((0, 0), (d1, d1)).iter().enumerate().all(|(i, v)| *v == 0.0 || i % (d1 + 1) == 0));
}

#[test]
fn symmetric_with_expected_trace() {
    let mat = build_direct_matrix(&params(0.9, 4.0), 4).unwrap();
    let m = mat.dense().unwrap();
    assert_eq!(m, m.transpose());
    let tr: f64 = mat.a11.iter().sum::<f64>() + mat.a22.iter().sum::<f64>();
    assert!((m.trace() - tr).abs() < 1e-9);
}

#[test]
fn spectrum_mirrored_about_nine() {
    let mat = build_direct_matrix(&params(0.7, 6.0), 4).unwrap();
    let ev = direct_spectrum(&mat).unwrap();
    let n = ev.len();
    let worst = (0..n).map(|i| (ev[i] + ev[n - 1 - i] - 18.0).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-9, "{worst}");
}

#[test]
fn embedding_is_an_isometry() {
    let mat = build_direct_matrix(&params(0.5, 6.0), 4).unwrap();
    let d = mat.dim1;
    let w = TorusGrid::new(4).unwrap().weight();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..5 {
        let mut f = vec![0.0; d * d];
        for i in 0..d {
            for j in i..d {
                let v: f64 = rng.random_range(-1.0..1.0);
                f[i * d + j] = v;
                f[j * d + i] = v;
            }
        }
        let l2 = w * w * f.iter().map(|v| v * v).sum::<f64>();
        let c = embed_symmetric(&mat, &f);
        let e: f64 = c.iter().map(|v| v * v).sum();
        assert!((e - l2).abs() < 1e-12 * l2);
    }
}

#[test]
fn guards() {
    let mat = build_direct_matrix(&params(0.5, 6.0), 8).unwrap();
    assert!((mat.band_fuzz - 5.0 * std::f64::consts::PI / 4.0).abs() < 1e-15);
    assert!(matches!(direct_counts(&mat, -2.0, CountSide::Below), Err(Error::Ambiguity { .. })));
    assert!(matches!(direct_counts(&mat, -10.0, CountSide::Above), Err(Error::Domain(_))));
    assert!(matches!(build_direct_matrix(&params(0.5, 6.0), 14), Err(Error::Domain(_))));
    assert_eq!(direct_counts(&mat, -10.0, CountSide::Below).unwrap(), 0);
    assert_eq!(direct_counts(&mat, 28.0, CountSide::Above).unwrap(), 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(3))]

    // Inertia against a dense eigensolve on the smallest section.
    #[test]
    fn inertia_matches_dense_count(mu in 0.5f64..4.0, gamma in -3.0f64..12.0, z in -40.0f64..-0.5) {
        let mat = build_direct_matrix(&params(mu, gamma), 4).unwrap();
        let dense = nalgebra::SymmetricEigen::new(mat.dense().unwrap()).eigenvalues;
        let below = dense.iter().filter(|&&e| e < z).count();
        prop_assume!(dense.iter().all(|e| (e - z).abs() > 1e-8));
        prop_assert_eq!(inertia_count(&mat, z, CountSide::Below), below);
    }
}

#[test]
fn dump_round_trip() {
    let mat = build_direct_matrix(&params(0.3, 1.0), 4).unwrap();
    let mut buf = Vec::new();
    dump(&mat, &mut buf).unwrap();
    let m = mat.dense().unwrap();
    let read = |i: usize| f64::from_le_bytes(buf[16 + 8 * i..24 + 8 * i].try_into().unwrap());
    let d = m.nrows();
    for (i, j) in [(0, 0), (3, 70), (70, 3), (d - 1, d - 1)] {
        assert_eq!(read(i * d + j), m[(i, j)]);
    }
}
