//! Finite section of the full block operator on `H1 (+) H2_sym`.
//!
//! The basis is orthonormal: one-particle coefficients are `sqrt(w) f1(x_l)`,
//! two-particle coefficients `w f2(x_i, x_i)` on the diagonal and
//! `sqrt(2) w f2(x_i, x_j)` for `i < j`. In it the coupling block is
//! `mu sqrt(w)` between `l` and the pair `(l, l)` and `mu sqrt(w/2)` between
//! `l` and each pair `(l, s)`, `s != l`; its adjoint is the transpose.
//!
//! Small sections are diagonalized densely. Eigenvalue counts outside the
//! bands go through Haynsworth inertia additivity,
//! `In(A - z) = In(A22 - z) + In(S(z))`, with the Schur complement `S(z)`
//! assembled pair by pair.

use std::io::Write;

use nalgebra::DMatrix;

use crate::birman_schwinger::CountSide;
use crate::error::{Error, Result};
use crate::lattice::{w1, w2, CouplingParams, BAND_MAX, BAND_MIN};
use crate::linalg::sym_eigenvalues;
use crate::quadrature::TorusGrid;

/// Largest matrix dimension diagonalized densely.
pub const DENSE_DIM_LIMIT: usize = 2200;

#[derive(Debug, Clone, PartialEq)]
pub struct DirectMatrix {
    pub n: usize,
    pub dim1: usize,
    pub dim2: usize,
    pub params: CouplingParams,
    /// `w1` at the grid nodes.
    pub a11: Vec<f64>,
    /// `w2` on pairs `i <= j`, in `pairs` order.
    pub a22: Vec<f64>,
    pub pairs: Vec<(usize, usize)>,
    /// Nonzero coupling entries of each pair column: `(row, value)`.
    pub coupling: Vec<Vec<(usize, f64)>>,
    /// Finite-section blur of the band edges, `5 (2 pi / n)`.
    pub band_fuzz: f64,
}

impl DirectMatrix {
    pub fn dim(&self) -> usize {
        self.dim1 + self.dim2
    }

    /// The assembled symmetric matrix, ordered `H1` then `H2`.
    pub fn dense(&self) -> Result<DMatrix<f64>> {
        self.dense_with_limit(DENSE_DIM_LIMIT)
    }

    pub fn dense_with_limit(&self, limit: usize) -> Result<DMatrix<f64>> {
        let dim = self.dim();
        if dim > limit {
            return Err(Error::Capacity(format!("direct matrix of dimension {dim} exceeds the dense limit {limit}")));
        }
        let mut m = DMatrix::zeros(dim, dim);
        for (l, &v) in self.a11.iter().enumerate() {
            m[(l, l)] = v;
        }
        for (p, &v) in self.a22.iter().enumerate() {
            let col = self.dim1 + p;
            m[(col, col)] = v;
            for &(row, b) in &self.coupling[p] {
                m[(row, col)] = b;
                m[(col, row)] = b;
            }
        }
        Ok(m)
    }

    /// `S(z) = A11 - z - B (A22 - z)^{-1} B^T`.
    pub fn schur_complement(&self, z: f64) -> DMatrix<f64> {
        let mut s = DMatrix::zeros(self.dim1, self.dim1);
        for (l, &v) in self.a11.iter().enumerate() {
            s[(l, l)] = v - z;
        }
        for (p, &v) in self.a22.iter().enumerate() {
            let inv = 1.0 / (v - z);
            let col = &self.coupling[p];
            for &(r1, b1) in col {
                for &(r2, b2) in col {
                    s[(r1, r2)] -= b1 * b2 * inv;
                }
            }
        }
        s
    }
}

/// Builds the section of the operator on the shifted `n^3` grid.
pub fn build_direct_matrix(params: &CouplingParams, n: usize) -> Result<DirectMatrix> {
    if n % 2 != 0 || !(4..=12).contains(&n) {
        return Err(Error::Domain(format!("direct matrix needs even 4 <= n <= 12, got {n}")));
    }
    let grid = TorusGrid::new(n)?;
    let pts = grid.points();
    let dim1 = pts.len();
    let w = grid.weight();
    let a11 = pts.iter().map(|p| w1(p, params.gamma)).collect();
    let mut pairs = Vec::with_capacity(dim1 * (dim1 + 1) / 2);
    let mut a22 = Vec::with_capacity(pairs.capacity());
    let mut coupling = Vec::with_capacity(pairs.capacity());
    let diag = params.mu * w.sqrt();
    let off = params.mu * (0.5 * w).sqrt();
    for i in 0..dim1 {
        for j in i..dim1 {
            pairs.push((i, j));
            a22.push(w2(&pts[i], &pts[j]));
            coupling.push(if i == j { vec![(i, diag)] } else { vec![(i, off), (j, off)] });
        }
    }
    Ok(DirectMatrix {
        n,
        dim1,
        dim2: pairs.len(),
        params: *params,
        a11,
        a22,
        pairs,
        coupling,
        band_fuzz: 5.0 * 2.0 * std::f64::consts::PI / n as f64,
    })
}

/// All eigenvalues, ascending (dense; small sections only).
pub fn direct_spectrum(mat: &DirectMatrix) -> Result<Vec<f64>> {
    Ok(sym_eigenvalues(&mat.dense()?))
}

/// Eigenvalues below `z` (side below) or above `z` (side above), counted
/// by inertia. `z` must clear the fuzzed band `[-fuzz, 18 + fuzz]`.
pub fn direct_counts(mat: &DirectMatrix, z: f64, side: CountSide) -> Result<usize> {
    let (lo, hi) = (BAND_MIN - mat.band_fuzz, BAND_MAX + mat.band_fuzz);
    if z >= lo && z <= hi {
        return Err(Error::Ambiguity { z, lo, hi });
    }
    match (side, z < lo) {
        (CountSide::Below, false) | (CountSide::Above, true) => {
            return Err(Error::Domain(format!("z = {z} is on the other side of the band from {side:?}")))
        }
        _ => {}
    }
    Ok(inertia_count(mat, z, side))
}

/// Eigenvalues below (or above) `z` by inertia, without the band-fuzz guard.
pub fn inertia_count(mat: &DirectMatrix, z: f64, side: CountSide) -> usize {
    let s = sym_eigenvalues(&mat.schur_complement(z));
    match side {
        CountSide::Below => {
            mat.a22.iter().filter(|&&v| v < z).count() + s.iter().filter(|&&e| e < 0.0).count()
        }
        CountSide::Above => {
            mat.a22.iter().filter(|&&v| v > z).count() + s.iter().filter(|&&e| e > 0.0).count()
        }
    }
}

/// Pair coefficients of a symmetric two-particle function sampled as
/// `f[i][j]` (row-major, `dim1 x dim1`) in the orthonormal basis.
pub fn embed_symmetric(mat: &DirectMatrix, f: &[f64]) -> Vec<f64> {
    let w = (2.0 * std::f64::consts::PI / mat.n as f64).powi(3);
    mat.pairs
        .iter()
        .map(|&(i, j)| {
            let v = f[i * mat.dim1 + j];
            if i == j { w * v } else { std::f64::consts::SQRT_2 * w * v }
        })
        .collect()
}

/// Writes the dense matrix: two little-endian `u64` dimensions, then the
/// entries row-major as little-endian `f64`.
pub fn dump<W: Write>(mat: &DirectMatrix, mut sink: W) -> Result<()> {
    let m = mat.dense()?;
    sink.write_all(&(m.nrows() as u64).to_le_bytes())?;
    sink.write_all(&(m.ncols() as u64).to_le_bytes())?;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            sink.write_all(&m[(i, j)].to_le_bytes())?;
        }
    }
    Ok(())
}
