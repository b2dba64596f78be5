//! Schur ideals, perps and biperps.
//!
//! For `P = (p_ij)` PSD and `w` in `C^k` the perp condition is positivity of
//! `K(w) * P`, where `K(w)_ij = 1 - conj(w_i) w_j` and `*` is the entrywise
//! product. A finite generator list stands for the Schur ideal it generates:
//! the perp of a set equals the perp of the ideal it generates.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{BallError, Result};
use crate::generated::{generated_ball_sample, hull_membership, BballConfig};
use crate::matrix::{
    hermitian_eig, is_psd, psd_check, schur_product, ComplexMatrix, HermitianMatrix,
    SimilarityRoots,
};
use crate::nonsmooth::{f_ac, CurveParams};
use crate::oracle::{BallOracle, Family, Membership};
use crate::point::{c64, Point, C64};

/// `K(w)_ij = 1 - conj(w_i) w_j`.
pub fn kernel_matrix(w: &Point) -> HermitianMatrix {
    HermitianMatrix::from_fn(w.dim(), |i, j| c64(1.0, 0.0) - w[i].conj() * w[j])
}

/// `((1 - conj(w_i) w_j) p_ij)`.
pub fn perp_matrix(p: &HermitianMatrix, w: &Point) -> Result<HermitianMatrix> {
    w.check_dim(p.dim())?;
    schur_product(&kernel_matrix(w), p)
}

/// On-disk form of a Schur ideal: `{"k": n, "generators": [matrix, ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdealFile {
    pub k: usize,
    pub generators: Vec<HermitianMatrix>,
}

/// A finite generating set of a Schur ideal with its cached invariants.
#[derive(Debug, Clone, Serialize)]
pub struct SchurIdealGens {
    pub k: usize,
    #[serde(rename = "generators")]
    pub gens: Vec<HermitianMatrix>,
    pub delta: f64,
    pub nontrivial: bool,
}

impl SchurIdealGens {
    pub fn to_file(&self) -> IdealFile {
        IdealFile {
            k: self.k,
            generators: self.gens.clone(),
        }
    }
}

/// Validates the generators and computes non-triviality and `delta`.
///
/// `delta^2` is the smallest eigenvalue of `D^{-1/2} P D^{-1/2}` over the
/// generators, with `D = Diag(P)` restricted to the indices where `p_ii > tol`.
pub fn ideal_analyze(gens: Vec<HermitianMatrix>, tol: f64) -> Result<SchurIdealGens> {
    let Some(first) = gens.first() else {
        return Err(BallError::Empty("Schur ideal generators"));
    };
    let k = first.dim();
    let mut covered = vec![false; k];
    let mut delta_sq = f64::INFINITY;
    for g in &gens {
        if g.dim() != k {
            return Err(BallError::DimensionMismatch {
                expected: k,
                found: g.dim(),
            });
        }
        let report = psd_check(g, tol)?;
        if !report.is_psd {
            return Err(BallError::NotPsd {
                min_eigenvalue: report.min_eigenvalue,
            });
        }
        let floor = tol * g.psd_scale();
        let diag = g.diagonal();
        let support: Vec<usize> = (0..k).filter(|&i| diag[i] > floor).collect();
        for &i in &support {
            covered[i] = true;
        }
        if support.is_empty() {
            continue;
        }
        let normalized = HermitianMatrix::from_fn(support.len(), |a, b| {
            let (i, j) = (support[a], support[b]);
            g[(i, j)] / (diag[i] * diag[j]).sqrt()
        });
        delta_sq = delta_sq.min(hermitian_eig(&normalized)?.min());
    }
    let delta = if delta_sq.is_finite() {
        delta_sq.clamp(0.0, 1.0).sqrt()
    } else {
        0.0
    };
    Ok(SchurIdealGens {
        k,
        nontrivial: covered.iter().all(|&c| c),
        gens,
        delta,
    })
}

/// `w` is in the perp iff `K(w) * P >= 0` for every generator.
pub fn perp_membership(ideal: &SchurIdealGens, w: &Point, tol: f64) -> Result<Membership> {
    w.check_dim(ideal.k)?;
    if !w.is_finite() {
        return Err(BallError::NonFinite("perp query point"));
    }
    let kw = kernel_matrix(w);
    for g in &ideal.gens {
        if !is_psd(&schur_product(&kw, g)?, tol)? {
            return Ok(Membership::NonMember);
        }
    }
    Ok(Membership::Member)
}

pub fn perp_oracle(ideal: SchurIdealGens, tol: f64) -> BallOracle {
    let k = ideal.k;
    BallOracle::new(k, Family::SchurPerp, tol, move |w| perp_membership(&ideal, w, tol))
}

/// `[[1, 1, 1], [1, a + 1, 1], [1, 1, c + 1]]`.
pub fn pac_matrix(a: f64, c: f64) -> Result<HermitianMatrix> {
    let params = CurveParams::new(a, c)?;
    let (a, c) = (params.a, params.c);
    HermitianMatrix::from_real_rows(&[&[1.0, 1.0, 1.0], &[1.0, a + 1.0, 1.0], &[1.0, 1.0, c + 1.0]])
}

/// Closed-form perp membership of `(0, x, y)` for the single generator `P_{a,c}`:
/// `x^2 <= a / (a + 1)` and `y^2 <= f_{a,c}(x^2)`.
pub fn pac_slice_membership(a: f64, c: f64, x: f64, y: f64, tol: f64) -> Result<Membership> {
    let params = CurveParams::new(a, c)?;
    if !(x.is_finite() && y.is_finite()) {
        return Err(BallError::NonFinite("slice coordinates"));
    }
    let u = x * x;
    let end = params.right_endpoint();
    if u > end + tol {
        return Ok(Membership::NonMember);
    }
    let bound = f_ac(params, u.min(end))?;
    Ok(Membership::from_bool(y * y <= bound + tol))
}

/// The unit ball of the k-idempotent algebra affiliated with `Q`:
/// `||Q^{1/2} Diag(w) Q^{-1/2}|| <= 1 + tol`.
pub fn idempotent_oracle_from_matrix(q: &HermitianMatrix, tol: f64) -> Result<BallOracle> {
    let roots = SimilarityRoots::new(q)?;
    Ok(BallOracle::new(q.dim(), Family::Idempotent, tol, move |w| {
        Ok(Membership::from_bool(roots.norm(w)? <= 1.0 + tol))
    }))
}

/// A PSD matrix in `D^perp` that excludes `w`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparationCertificate {
    #[serde(rename = "P")]
    pub p: HermitianMatrix,
    pub epsilon: f64,
    pub margin: f64,
}

/// Certificates separating by less than this are reported as unknown.
pub const MARGIN_FLOOR: f64 = 1e-8;

impl SeparationCertificate {
    /// Re-checks every defining property from scratch.
    pub fn verify(&self, d: &[Point], w: &Point, tol: f64) -> Result<bool> {
        let k = self.p.dim();
        w.check_dim(k)?;
        if !(self.margin >= MARGIN_FLOOR && self.epsilon > 0.0) {
            return Ok(false);
        }
        let eig = hermitian_eig(&self.p)?;
        if eig.min() < self.epsilon * (1.0 - 1e-9) - 1e-14 * self.p.psd_scale() {
            return Ok(false);
        }
        for v in d {
            v.check_dim(k)?;
            if !is_psd(&perp_matrix(&self.p, v)?, tol)? {
                return Ok(false);
            }
        }
        let excluded = hermitian_eig(&perp_matrix(&self.p, w)?)?.min();
        Ok(excluded <= -self.margin * (1.0 - 1e-9))
    }
}

/// Search parameters for [`biperp_separation`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparationConfig {
    /// Outer subgradient iterations.
    pub budget: usize,
    pub seed: u64,
    pub tol: f64,
    /// Boundary shrink applied to points of `D` that touch the torus.
    pub eta: f64,
    /// Cap on alternating-projection sweeps per outer iteration.
    pub inner_iters: usize,
}

impl Default for SeparationConfig {
    fn default() -> Self {
        SeparationConfig {
            budget: 2000,
            seed: 0,
            tol: 1e-10,
            eta: 1e-6,
            inner_iters: 200,
        }
    }
}

type Mat = Vec<C64>;

fn to_herm(k: usize, m: &[C64]) -> HermitianMatrix {
    HermitianMatrix::from_fn(k, |i, j| m[i * k + j])
}

fn from_herm(h: &HermitianMatrix) -> Mat {
    h.as_matrix().data().to_vec()
}

fn clamp_below(k: usize, m: &[C64], floor: f64) -> Result<Mat> {
    let eig = hermitian_eig(&to_herm(k, m))?;
    if eig.min() >= floor {
        return Ok(m.to_vec());
    }
    Ok(from_herm(&eig.reconstruct_with(|l| l.max(floor))))
}

fn dist_sq(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum()
}

/// Alternating projections between the affine set
/// `{(P, Y_v) : Y_v = K(v) * P, trace P = k}` and the cone
/// `{P >= eps I, Y_v >= sigma_v I}`, with Dykstra's correction on the cone.
struct LiftedProjector {
    k: usize,
    kernels: Vec<Mat>,
    floors: Vec<f64>,
    inner_iters: usize,
}

impl LiftedProjector {
    fn affine(&self, p0: &[C64], ys: &[Mat]) -> (Mat, Vec<Mat>) {
        let k = self.k;
        let mut p = vec![C64::default(); k * k];
        let mut weights = vec![0.0; k];
        for idx in 0..k * k {
            let mut num = p0[idx];
            let mut den = 1.0;
            for (kv, y) in self.kernels.iter().zip(ys) {
                num += kv[idx].conj() * y[idx];
                den += kv[idx].norm_sqr();
            }
            p[idx] = num / den;
            if idx % (k + 1) == 0 {
                weights[idx / (k + 1)] = den;
            }
        }
        let excess: f64 = k as f64 - (0..k).map(|i| p[i * (k + 1)].re).sum::<f64>();
        let inv_sum: f64 = weights.iter().map(|w| 1.0 / w).sum();
        let mu = excess / inv_sum;
        for i in 0..k {
            p[i * (k + 1)] = c64(p[i * (k + 1)].re + mu / weights[i], 0.0);
        }
        let ys = self
            .kernels
            .iter()
            .map(|kv| kv.iter().zip(&p).map(|(a, b)| a * b).collect())
            .collect();
        (p, ys)
    }

    fn project(&self, p_start: &[C64], eps: f64) -> Result<Mat> {
        let k = self.k;
        let mut p = p_start.to_vec();
        let mut ys: Vec<Mat> = self
            .kernels
            .iter()
            .map(|kv| kv.iter().zip(&p).map(|(a, b)| a * b).collect())
            .collect();
        let mut qp = vec![C64::default(); k * k];
        let mut qy = vec![vec![C64::default(); k * k]; ys.len()];
        for _ in 0..self.inner_iters {
            let (ap, ay) = self.affine(&p, &ys);
            let shifted: Mat = ap.iter().zip(&qp).map(|(a, q)| a + q).collect();
            let bp = clamp_below(k, &shifted, eps)?;
            qp = shifted.iter().zip(&bp).map(|(s, b)| s - b).collect();
            let mut gap = dist_sq(&ap, &bp);
            let mut by = Vec::with_capacity(ay.len());
            for (v, y) in ay.iter().enumerate() {
                let shifted: Mat = y.iter().zip(&qy[v]).map(|(a, q)| a + q).collect();
                let b = clamp_below(k, &shifted, self.floors[v])?;
                qy[v] = shifted.iter().zip(&b).map(|(s, b)| s - b).collect();
                gap += dist_sq(y, &b);
                by.push(b);
            }
            p = bp;
            ys = by;
            if gap.sqrt() <= 1e-12 * k as f64 {
                break;
            }
        }
        Ok(p)
    }
}

fn check_separation_input(d: &[Point], w: &Point, tol: f64) -> Result<usize> {
    if d.is_empty() {
        return Err(BallError::Empty("defining set D"));
    }
    let k = w.dim();
    for v in d {
        v.check_dim(k)?;
        if !v.is_finite() {
            return Err(BallError::NonFinite("defining set D"));
        }
        if v.max_abs() > 1.0 + tol {
            return Err(BallError::Precondition(
                "points of D must lie in the closed polydisk".into(),
            ));
        }
    }
    if !w.is_finite() {
        return Err(BallError::NonFinite("excluded point"));
    }
    Ok(k)
}

/// Searches for `P >= eps I` in `D^perp` with `K(w) * P` indefinite.
///
/// Projected subgradient descent on `lambda_min(K(w) * P)` over the set
/// `{P >= eps I, trace P = k, K(v) * P >= 0 for v in D}`; every iterate with a
/// negative objective is re-verified against the original `D` at `tol / 10`
/// before it is returned. `None` means the budget ran out.
pub fn biperp_separation(
    d: &[Point],
    w: &Point,
    cfg: &SeparationConfig,
) -> Result<Option<SeparationCertificate>> {
    let k = check_separation_input(d, w, cfg.tol)?;
    let shrunk: Vec<Point> = d
        .iter()
        .map(|v| {
            let m = v.max_abs();
            if m > 1.0 - cfg.eta {
                v.scale_real((1.0 - cfg.eta) / m)
            } else {
                v.clone()
            }
        })
        .collect();
    let kernels: Vec<Mat> = shrunk.iter().map(|v| from_herm(&kernel_matrix(v))).collect();
    let floors = shrunk
        .iter()
        .map(|v| 1e-6 * v.coords().iter().map(|z| 1.0 - z.norm_sqr()).fold(f64::INFINITY, f64::min))
        .collect();
    let projector = LiftedProjector {
        k,
        kernels,
        floors,
        inner_iters: cfg.inner_iters,
    };
    let kw = kernel_matrix(w);
    let verify_tol = cfg.tol / 10.0;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = ComplexMatrix::from_fn(k, k, |_, _| {
        c64(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let start = HermitianMatrix::identity(k).add(&noise.gram().scale(0.1 / k as f64))?;
    let mut p = from_herm(&start.scale(k as f64 / start.trace()));

    let mut eps = 1e-4;
    let mut best = f64::INFINITY;
    let mut stall = 0usize;
    for t in 0..cfg.budget {
        p = projector.project(&p, eps)?;
        let ph = to_herm(k, &p);
        let m = schur_product(&kw, &ph)?;
        let eig = hermitian_eig(&m)?;
        let lam = eig.min();
        if lam < -MARGIN_FLOOR {
            let cert = SeparationCertificate {
                p: ph.clone(),
                epsilon: eps,
                margin: -lam,
            };
            if cert.verify(d, w, verify_tol)? {
                return Ok(Some(cert));
            }
        }
        if lam < best - 1e-12 {
            best = lam;
            stall = 0;
        } else {
            stall += 1;
            if stall >= 50 {
                eps = (eps * 0.5).max(1e-12);
                stall = 0;
            }
        }
        let x = eig.vector(0);
        let step = 0.5 / ((t + 1) as f64).sqrt();
        for i in 0..k {
            for j in 0..k {
                let g = x[i] * x[j].conj() * kw[(i, j)].conj();
                p[i * k + j] -= g * step;
            }
        }
    }
    Ok(None)
}

/// Outcome of a biperp membership query.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum BiperpResult {
    Member,
    NonMember { certificate: SeparationCertificate },
    Unknown,
}

impl BiperpResult {
    pub fn membership(&self) -> Membership {
        match self {
            BiperpResult::Member => Membership::Member,
            BiperpResult::NonMember { .. } => Membership::NonMember,
            BiperpResult::Unknown => Membership::Unknown,
        }
    }
}

/// Membership in `D^perp perp`.
///
/// Member when `w` is `e`, `0`, a point of `D`, or lies in the absolutely
/// convex hull of a sampled inner approximation of the generated ball;
/// non-member when a separation certificate verifies; unknown otherwise.
pub fn biperp_membership(d: &[Point], w: &Point, cfg: &SeparationConfig) -> Result<BiperpResult> {
    let k = check_separation_input(d, w, cfg.tol)?;
    let trivial = [Point::unit(k), Point::zero(k)];
    if trivial.iter().chain(d).any(|v| v.dist_max(w) <= cfg.tol) {
        return Ok(BiperpResult::Member);
    }
    if w.max_abs() <= 1.0 + cfg.tol {
        let cloud = generated_ball_sample(
            d,
            &BballConfig {
                rounds: 2,
                per_round: 64,
                seed: cfg.seed,
            },
        )?;
        if hull_membership(&cloud, w, cfg.tol.max(1e-9))? == Membership::Member {
            return Ok(BiperpResult::Member);
        }
    }
    Ok(match biperp_separation(d, w, cfg)? {
        Some(certificate) => BiperpResult::NonMember { certificate },
        None => BiperpResult::Unknown,
    })
}
