//! Inner approximations of generated balls, the exact norm of the ball
//! generated by `{e_1, e_2}`, hyperconvex-hull sampling, and hull membership.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{BallError, Result};
use crate::oracle::{BallOracle, Family, Membership};
use crate::point::{c64, Point, C64};
use crate::vnn::{sup_norm_torus, Poly};

/// Points closer than this (max-coordinate metric) are merged.
pub const DEDUP_RADIUS: f64 = 1e-9;
/// A round that moves the cloud by less than this ends the sampling.
pub const GROWTH_STOP: f64 = 1e-6;
/// Polynomials are divided by their grid sup-norm times this factor.
pub const SUP_SAFETY: f64 = 1.0 + 1e-6;
/// Cap on `grid^m` torus evaluations per polynomial.
pub const HC_GRID_BUDGET: f64 = 1e7;

/// Per-task seed from a master seed and a task index (splitmix64 finalizer).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `min_{w_3} |z_1 - w_3| + |z_2 - w_3| + |w_3|`: the norm whose unit ball is
/// the ball generated by `{e_1, e_2}` (sum of distances to the geometric
/// median of `{z_1, z_2, 0}`).
pub fn example24_norm(z: &Point) -> Result<f64> {
    z.check_dim(2)?;
    if !z.is_finite() {
        return Err(BallError::NonFinite("example24 argument"));
    }
    let anchors = [z[0], z[1], C64::default()];
    let cost = |x: C64| anchors.iter().map(|a| (a - x).norm()).sum::<f64>();
    let scale = anchors.iter().map(|a| a.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(0.0);
    }

    // An anchor is the median when the unit pull of the other anchors is at
    // most its multiplicity.
    for a in anchors {
        let mut pull = C64::default();
        let mut weight = 0.0;
        for b in anchors {
            let d = (a - b).norm();
            if d <= 1e-15 * scale {
                weight += 1.0;
            } else {
                pull += (a - b) / d;
            }
        }
        if pull.norm() <= weight + 1e-12 {
            return Ok(cost(a));
        }
    }

    let vertex_best = anchors.iter().map(|&a| cost(a)).fold(f64::INFINITY, f64::min);
    let mut x = (anchors[0] + anchors[1] + anchors[2]) / 3.0;
    let mut lower = 0.0f64;
    for _ in 0..200_000 {
        let upper = cost(x).min(vertex_best);
        lower = lower.max(median_lower_bound(&anchors, x));
        if upper - lower <= 1e-13 * scale {
            return Ok(upper);
        }
        let mut num = C64::default();
        let mut den = 0.0;
        for a in anchors {
            let d = (a - x).norm().max(1e-300);
            num += a / d;
            den += 1.0 / d;
        }
        let next = num / den;
        let step = (next - x).norm();
        x = next;
        if step <= 1e-15 * scale {
            return Ok(cost(x));
        }
    }
    let upper = cost(x).min(vertex_best);
    if upper - lower <= 1e-10 * scale {
        return Ok(upper);
    }
    Err(BallError::MedianNoConvergence { lower, upper })
}

/// Dual bound `sum Re(conj(u_i) a_i) <= min_x sum |a_i - x|` for unit-disk
/// `u_i` summing to zero, built from the directions at `x`: each `u_j` in turn
/// is replaced by minus the sum of the others and the set is rescaled into
/// the disk.
fn median_lower_bound(anchors: &[C64; 3], x: C64) -> f64 {
    let dirs: Vec<C64> = anchors
        .iter()
        .map(|a| {
            let d = (a - x).norm();
            if d > 0.0 { (a - x) / d } else { C64::default() }
        })
        .collect();
    (0..3)
        .map(|j| {
            let mut u = dirs.clone();
            u[j] = -(0..3).filter(|&i| i != j).map(|i| dirs[i]).sum::<C64>();
            let m = u.iter().map(|z| z.norm()).fold(1.0, f64::max);
            u.iter().zip(anchors).map(|(u, a)| (u.conj() * a).re).sum::<f64>() / m
        })
        .fold(0.0, f64::max)
}

pub fn example24_oracle(tol: f64) -> BallOracle {
    BallOracle::new(2, Family::Generated, tol, move |w| {
        Ok(Membership::from_bool(example24_norm(w)? <= 1.0 + tol))
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerationLog {
    pub method: String,
    pub seed: u64,
    pub rounds_run: usize,
    pub point_count: usize,
    pub params: serde_json::Value,
}

/// A finite inner approximation: points of the closed polydisk, always
/// including `e` and `0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleCloud {
    pub k: usize,
    pub points: Vec<Point>,
    pub generation_log: GenerationLog,
}

impl SampleCloud {
    /// One row per point, columns `re_1, im_1, ..., re_k, im_k`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header: Vec<String> = (1..=self.k)
            .flat_map(|i| [format!("re_{i}"), format!("im_{i}")])
            .collect();
        let csv_err = |e: csv::Error| BallError::InvalidArgument(format!("csv: {e}"));
        w.write_record(&header).map_err(csv_err)?;
        for p in &self.points {
            let row: Vec<String> = p
                .coords()
                .iter()
                .flat_map(|z| [format!("{:.16e}", z.re), format!("{:.16e}", z.im)])
                .collect();
            w.write_record(&row).map_err(csv_err)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| BallError::InvalidArgument(format!("csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| BallError::InvalidArgument(format!("csv: {e}")))
    }

    pub fn from_csv(text: &str) -> Result<Vec<Point>> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let mut out = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| BallError::InvalidArgument(format!("csv: {e}")))?;
            let vals = rec
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| BallError::InvalidArgument(format!("csv: {e}")))?;
            if vals.len() % 2 != 0 {
                return Err(BallError::InvalidArgument("csv row has an odd column count".into()));
            }
            out.push(Point::new(vals.chunks(2).map(|p| c64(p[0], p[1])).collect()));
        }
        Ok(out)
    }
}

fn check_in_polydisk(d: &[Point], k: usize) -> Result<()> {
    for v in d {
        v.check_dim(k)?;
        if !v.is_finite() {
            return Err(BallError::NonFinite("generating set"));
        }
        if v.max_abs() > 1.0 + 1e-9 {
            return Err(BallError::Precondition(
                "generating points must lie in the closed polydisk".into(),
            ));
        }
    }
    Ok(())
}

/// Adds `p` unless it is within [`DEDUP_RADIUS`] of an existing point;
/// returns its distance to the old cloud.
fn insert_dedup(cloud: &mut Vec<Point>, p: Point) -> f64 {
    let d = cloud.iter().map(|q| q.dist_max(&p)).fold(f64::INFINITY, f64::min);
    if d > DEDUP_RADIUS {
        cloud.push(p);
    }
    d
}

fn random_phase(rng: &mut ChaCha8Rng) -> C64 {
    C64::from_polar(1.0, std::f64::consts::TAU * rng.random::<f64>())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BballConfig {
    pub rounds: usize,
    pub per_round: usize,
    pub seed: u64,
}

impl Default for BballConfig {
    fn default() -> Self {
        BballConfig {
            rounds: 3,
            per_round: 64,
            seed: 0,
        }
    }
}

/// Inner approximation of the ball generated by `D`.
///
/// Each round adds `per_round` random absolutely convex combinations (of two
/// or three current points) and `per_round` random pairwise products; it stops
/// early once a round moves the cloud by less than [`GROWTH_STOP`].
pub fn generated_ball_sample(d: &[Point], cfg: &BballConfig) -> Result<SampleCloud> {
    let k = match d.first() {
        Some(v) => v.dim(),
        None => return Err(BallError::Empty("generating set")),
    };
    check_in_polydisk(d, k)?;
    let mut cloud = vec![Point::zero(k), Point::unit(k)];
    for v in d {
        insert_dedup(&mut cloud, v.clone());
    }
    let mut rounds_run = 0;
    for round in 0..cfg.rounds {
        rounds_run += 1;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, round as u64));
        let base = cloud.clone();
        let n = base.len();
        let mut fresh = Vec::with_capacity(2 * cfg.per_round);
        for _ in 0..cfg.per_round {
            let terms = rng.random_range(2..=3);
            let mut weights: Vec<f64> = (0..terms).map(|_| rng.random::<f64>()).collect();
            let total: f64 = weights.iter().sum();
            let mass = if rng.random::<bool>() { 1.0 } else { rng.random::<f64>() };
            for x in &mut weights {
                *x *= mass / total;
            }
            let mut z = Point::zero(k);
            for w in weights {
                let coef = random_phase(&mut rng) * w;
                z = z.add(&base[rng.random_range(0..n)].scale(coef));
            }
            fresh.push(z);
        }
        for _ in 0..cfg.per_round {
            let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
            fresh.push(base[a].hadamard(&base[b]));
        }
        let mut growth: f64 = 0.0;
        for p in fresh {
            let dist = insert_dedup(&mut cloud, p);
            growth = growth.max(dist);
        }
        if growth < GROWTH_STOP {
            break;
        }
    }
    let count = cloud.len();
    Ok(SampleCloud {
        k,
        points: cloud,
        generation_log: GenerationLog {
            method: "bball".into(),
            seed: cfg.seed,
            rounds_run,
            point_count: count,
            params: serde_json::json!({"rounds": cfg.rounds, "per_round": cfg.per_round}),
        },
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HcConfig {
    pub max_degree: u32,
    pub n_polys: usize,
    pub grid: usize,
    pub seed: u64,
}

impl Default for HcConfig {
    fn default() -> Self {
        HcConfig {
            max_degree: 6,
            n_polys: 64,
            grid: 64,
            seed: 0,
        }
    }
}

fn monomial_exponents(m: usize, max_degree: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..m {
        let mut next = Vec::new();
        for e in &out {
            let used: u32 = e.iter().sum();
            for d in 0..=(max_degree - used) {
                let mut f = e.clone();
                f.push(d);
                next.push(f);
            }
        }
        out = next;
    }
    out
}

/// Evaluates `p` coordinatewise at the `m` points of `D` (variable `l` takes
/// the values of `D[l]`).
pub fn eval_at_points(p: &Poly, d: &[Point], k: usize) -> Point {
    Point::new(
        (0..k)
            .map(|j| {
                let z: Vec<C64> = d.iter().map(|v| v[j]).collect();
                p.eval(&z)
            })
            .collect(),
    )
}

/// Inner approximation of the hyperconvex hull of `D`: images `p(D)` of
/// polynomials in `m = |D|` variables with `||p||_inf <= 1`.
///
/// Every monomial of degree `<= max_degree` is included exactly (its sup-norm
/// is 1); `n_polys` random sparse polynomials are divided by their grid
/// sup-norm times [`SUP_SAFETY`].
pub fn hc_hull_sample(d: &[Point], cfg: &HcConfig) -> Result<SampleCloud> {
    let k = match d.first() {
        Some(v) => v.dim(),
        None => return Err(BallError::Empty("generating set")),
    };
    check_in_polydisk(d, k)?;
    let m = d.len();
    let evaluations = (cfg.grid as f64).powi(m as i32);
    if evaluations > HC_GRID_BUDGET {
        return Err(BallError::GridBudget {
            evaluations,
            limit: HC_GRID_BUDGET,
        });
    }
    let exps = monomial_exponents(m, cfg.max_degree);
    let mut cloud = vec![Point::zero(k), Point::unit(k)];
    for e in &exps {
        let mono = Poly::monomial(e.clone(), c64(1.0, 0.0));
        insert_dedup(&mut cloud, eval_at_points(&mono, d, k));
    }
    let randoms: Vec<Point> = (0..cfg.n_polys)
        .into_par_iter()
        .map(|i| -> Result<Option<Point>> {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, i as u64));
            let terms = rng.random_range(1..=6usize);
            let mut p = Poly::zero(m);
            for _ in 0..terms {
                let e = exps[rng.random_range(0..exps.len())].clone();
                let coef = c64(rng.sample(StandardNormal), rng.sample(StandardNormal));
                p.add_term(e, coef);
            }
            let sup = sup_norm_torus(&p, cfg.grid)?;
            if sup < 1e-12 {
                return Ok(None);
            }
            let p = p.scale(c64(1.0 / (sup * SUP_SAFETY), 0.0));
            Ok(Some(eval_at_points(&p, d, k)))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    for p in randoms {
        insert_dedup(&mut cloud, p);
    }
    let count = cloud.len();
    Ok(SampleCloud {
        k,
        points: cloud,
        generation_log: GenerationLog {
            method: "hc".into(),
            seed: cfg.seed,
            rounds_run: 1,
            point_count: count,
            params: serde_json::json!({
                "max_degree": cfg.max_degree,
                "n_polys": cfg.n_polys,
                "grid": cfg.grid,
                "monomials": exps.len(),
            }),
        },
    })
}

/// Euclidean projection onto `{x in C^n : sum |x_i| <= 1}`.
fn project_l1_ball(x: &mut [C64]) {
    let mags: Vec<f64> = x.iter().map(|z| z.norm()).collect();
    if mags.iter().sum::<f64>() <= 1.0 {
        return;
    }
    let mut sorted = mags.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, &s) in sorted.iter().enumerate() {
        cum += s;
        let t = (cum - 1.0) / (i + 1) as f64;
        if s > t {
            theta = t;
        }
    }
    for (z, m) in x.iter_mut().zip(mags) {
        *z = if m > theta { *z * ((m - theta) / m) } else { C64::default() };
    }
}

fn combine(cols: &[&Point], lam: &[C64], k: usize) -> Vec<C64> {
    let mut out = vec![C64::default(); k];
    for (c, l) in cols.iter().zip(lam) {
        for j in 0..k {
            out[j] += c[j] * l;
        }
    }
    out
}

/// Is `w` within `tol` (max-coordinate distance) of the absolutely convex
/// hull of the cloud?
///
/// Fully corrective Frank-Wolfe on `min ||w - sum lambda_i c_i||_2` over
/// `sum |lambda_i| <= 1`: each of at most 200 outer steps adds the best
/// vertex and re-solves on the active set by accelerated projected gradient.
/// Inner approximations cannot exclude, so the answer is member or unknown.
pub fn hull_membership(cloud: &SampleCloud, w: &Point, tol: f64) -> Result<Membership> {
    if cloud.points.is_empty() {
        return Err(BallError::Empty("sample cloud"));
    }
    let k = cloud.k;
    w.check_dim(k)?;
    if !w.is_finite() {
        return Err(BallError::NonFinite("hull query point"));
    }
    if w.max_abs() > 1.0 + tol + DEDUP_RADIUS {
        return Ok(Membership::Unknown);
    }
    if cloud.points.iter().any(|p| p.dist_max(w) <= tol) {
        return Ok(Membership::Member);
    }

    let pts = &cloud.points;
    let mut active: Vec<usize> = Vec::new();
    let mut lam: Vec<C64> = Vec::new();
    let mut residual: Vec<C64> = w.coords().to_vec();
    for _outer in 0..200 {
        let dist = residual.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if dist <= tol {
            return Ok(Membership::Member);
        }
        let (best, score) = pts
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let ip: C64 = c.coords().iter().zip(&residual).map(|(a, r)| a.conj() * r).sum();
                (i, ip.norm())
            })
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty cloud");
        let current: f64 = {
            let approx: Vec<C64> = w.coords().iter().zip(&residual).map(|(a, r)| a - r).collect();
            approx.iter().zip(&residual).map(|(a, r)| (a.conj() * r).re).sum()
        };
        if score - current <= 1e-15 {
            break;
        }
        if !active.contains(&best) {
            active.push(best);
            lam.push(C64::default());
        }

        let cols: Vec<&Point> = active.iter().map(|&i| &pts[i]).collect();
        let lip: f64 = cols
            .iter()
            .map(|c| c.coords().iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            .max(1e-300);
        let mut y = lam.clone();
        let mut x_prev = lam.clone();
        let mut t = 1.0f64;
        for _ in 0..300 {
            let approx = combine(&cols, &y, k);
            let r: Vec<C64> = w.coords().iter().zip(&approx).map(|(a, b)| a - b).collect();
            let mut x: Vec<C64> = cols
                .iter()
                .zip(&y)
                .map(|(c, yi)| {
                    let g: C64 = c.coords().iter().zip(&r).map(|(a, ri)| a.conj() * ri).sum();
                    yi + g / lip
                })
                .collect();
            project_l1_ball(&mut x);
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let beta = (t - 1.0) / t_next;
            y = x.iter().zip(&x_prev).map(|(a, b)| a + (a - b) * beta).collect();
            x_prev = x;
            t = t_next;
        }
        lam = x_prev;
        let keep: Vec<bool> = lam.iter().map(|l| l.norm() > 0.0).collect();
        let mut idx = 0;
        active.retain(|_| {
            idx += 1;
            keep[idx - 1]
        });
        lam.retain(|l| l.norm() > 0.0);
        let cols: Vec<&Point> = active.iter().map(|&i| &pts[i]).collect();
        let approx = combine(&cols, &lam, k);
        residual = w.coords().iter().zip(&approx).map(|(a, b)| a - b).collect();
    }
    let dist = residual.iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(if dist <= tol { Membership::Member } else { Membership::Unknown })
}
