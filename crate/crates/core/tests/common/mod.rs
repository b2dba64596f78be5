#![allow(dead_code)]

use ckballs::matrix::ComplexMatrix;
use ckballs::vnn::{CommutingTuple, Poly, ViolationCertificate};
use ckballs::{c64, HermitianMatrix, Point, C64};
use nalgebra::{DMatrix, Complex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform in the closed disk of radius `r`.
pub fn disk(rng: &mut ChaCha8Rng, r: f64) -> C64 {
    C64::from_polar(r * rng.random::<f64>().sqrt(), std::f64::consts::TAU * rng.random::<f64>())
}

pub fn disk_point(rng: &mut ChaCha8Rng, k: usize, r: f64) -> Point {
    Point::new((0..k).map(|_| disk(rng, r)).collect())
}

pub fn gaussian(rng: &mut ChaCha8Rng) -> C64 {
    use rand_distr::StandardNormal;
    c64(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn to_na(m: &ComplexMatrix) -> DMatrix<Complex<f64>> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| {
        let z = m[(i, j)];
        Complex::new(z.re, z.im)
    })
}

/// Eigenvalues from nalgebra, ascending.
pub fn na_eigenvalues(h: &HermitianMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = to_na(h.as_matrix()).symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

pub fn na_min_eigenvalue(h: &HermitianMatrix) -> f64 {
    na_eigenvalues(h)[0]
}

pub fn na_operator_norm(m: &ComplexMatrix) -> f64 {
    to_na(m).singular_values().max()
}

/// Random PSD matrix `G G* / k + s I`.
pub fn random_psd(rng: &mut ChaCha8Rng, k: usize, shift: f64) -> HermitianMatrix {
    let g = ComplexMatrix::from_fn(k, k, |_, _| gaussian(rng));
    g.gram().scale(1.0 / k as f64).shift(shift)
}

/// `p = sum z_i^2 - 2 sum_{i<j} z_i z_j`, whose torus sup is 5.
pub fn kv_poly() -> Poly {
    let mut p = Poly::zero(3);
    for i in 0..3 {
        let mut e = vec![0; 3];
        e[i] = 2;
        p.add_term(e, c64(1.0, 0.0));
        for j in (i + 1)..3 {
            let mut e = vec![0; 3];
            e[i] = 1;
            e[j] = 1;
            p.add_term(e, c64(-2.0, 0.0));
        }
    }
    p
}

/// Simultaneously diagonalizable contractions close to the 5x5 nilpotent
/// triple `T_i e = e_i`, `T_i e_j = A_ij f` with `A = (2I - J)/sqrt 3`.
///
/// Five points `t y_r` with weights `w_r` satisfying `sum w = 0`,
/// `sum w y = 0`, `sum w y y^T = A` span, as exponentials, a space whose
/// limit is the apolar space of the quadric `A`; the multiplication operators
/// written in the basis `(v, D_1 v, D_2 v, D_3 v, D_1^2 v / A_11)` with
/// `v = 2w / t^2` tend to the nilpotent triple as `t -> 0`.
pub fn kv_certificate(t: f64, grid: usize) -> ViolationCertificate {
    let s3 = 3f64.sqrt();
    let a = |i: usize, j: usize| if i == j { 1.0 / s3 } else { -1.0 / s3 };
    // complex symmetric M with 4 M M^T = A: eigenvalue 2/sqrt3 on (1,1,1)^perp, -1/sqrt3 on (1,1,1)
    let plus = c64((2.0 / s3).sqrt() / 2.0, 0.0);
    let minus = c64(0.0, (1.0 / s3).sqrt() / 2.0);
    let m = |i: usize, j: usize| {
        let proj = 1.0 / 3.0;
        let id = if i == j { 1.0 } else { 0.0 };
        plus * (id - proj) + minus * proj
    };
    let v = [[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]];
    let mut y = vec![[c64(0.0, 0.0); 3]];
    for vr in &v {
        let mut p = [c64(0.0, 0.0); 3];
        for (i, pi) in p.iter_mut().enumerate() {
            *pi = (0..3).map(|j| m(i, j) * vr[j]).sum();
        }
        y.push(p);
    }
    let w = [-4.0, 1.0, 1.0, 1.0, 1.0];
    for i in 0..3 {
        for j in 0..3 {
            let s: C64 = (0..5).map(|r| y[r][i] * y[r][j] * w[r]).sum();
            assert!((s - c64(a(i, j), 0.0)).norm() < 1e-12);
        }
    }
    let d: Vec<Vec<C64>> = (0..3).map(|j| (0..5).map(|r| y[r][j] * t).collect()).collect();
    let vf: Vec<C64> = w.iter().map(|&x| c64(2.0 * x / (t * t), 0.0)).collect();
    let apply = |j: usize, v: &[C64]| -> Vec<C64> { v.iter().zip(&d[j]).map(|(a, b)| a * b).collect() };
    let mut cols = vec![vf.clone()];
    for j in 0..3 {
        cols.push(apply(j, &vf));
    }
    cols.push(apply(0, &apply(0, &vf)).iter().map(|z| z / a(0, 0)).collect());
    let u = ComplexMatrix::from_fn(5, 5, |r, c| cols[c][r]);
    let q = u.inverse().unwrap();
    let diagonals: Vec<Vec<C64>> = d
        .iter()
        .map(|dj| {
            let tj = q.mul_diag_right(dj).matmul(&u).unwrap();
            let s = 1.0 / (ckballs::matrix::operator_norm(&tj).unwrap() + 1e-12);
            dj.iter().map(|z| z * s).collect()
        })
        .collect();
    let tuple = CommutingTuple::diagonalizable(q, diagonals).unwrap();
    let poly = kv_poly();
    let ratio = ckballs::vnn::vnn_ratio(&poly, &tuple, grid).unwrap();
    ViolationCertificate {
        tuple,
        poly,
        ratio,
        grid_used: grid,
    }
}
