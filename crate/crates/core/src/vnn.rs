//! Multi-variable von Neumann inequality: polynomial sup-norms on the torus,
//! evaluation on commuting tuples, a randomized violation search, and the
//! idempotent-algebra balls `||Q Diag(w) Q^{-1}|| <= 1` built from a violation.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{BallError, Result};
use crate::generated::derive_seed;
use crate::matrix::{operator_norm, ComplexMatrix};
use crate::oracle::{BallOracle, Family, Membership};
use crate::point::{c64, complex_pair, Point, C64};

/// Commutators and contraction norms are allowed this much slack (relative).
pub const TUPLE_TOL: f64 = 1e-10;
/// Cap on `grid^n` torus evaluations.
pub const TORUS_BUDGET: f64 = 1e8;
/// Largest condition number accepted for the similarity `Q`.
pub const MAX_CONDITION: f64 = 1e8;

/// A polynomial in `n` complex variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolyFile", into = "PolyFile")]
pub struct Poly {
    pub n: usize,
    pub terms: BTreeMap<Vec<u32>, C64>,
}

#[derive(Serialize, Deserialize)]
struct PolyTerm {
    exp: Vec<u32>,
    #[serde(with = "complex_pair")]
    coef: C64,
}

#[derive(Serialize, Deserialize)]
struct PolyFile {
    n: usize,
    terms: Vec<PolyTerm>,
}

impl TryFrom<PolyFile> for Poly {
    type Error = BallError;
    fn try_from(f: PolyFile) -> Result<Self> {
        let mut p = Poly::zero(f.n);
        for t in f.terms {
            if t.exp.len() != f.n {
                return Err(BallError::DimensionMismatch {
                    expected: f.n,
                    found: t.exp.len(),
                });
            }
            if !(t.coef.re.is_finite() && t.coef.im.is_finite()) {
                return Err(BallError::NonFinite("polynomial coefficient"));
            }
            p.add_term(t.exp, t.coef);
        }
        Ok(p)
    }
}

impl From<Poly> for PolyFile {
    fn from(p: Poly) -> Self {
        PolyFile {
            n: p.n,
            terms: p
                .terms
                .into_iter()
                .map(|(exp, coef)| PolyTerm { exp, coef })
                .collect(),
        }
    }
}

impl Poly {
    pub fn zero(n: usize) -> Self {
        Poly {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, c: C64) -> Self {
        let mut p = Self::zero(n);
        p.add_term(vec![0; n], c);
        p
    }

    pub fn monomial(exp: Vec<u32>, coef: C64) -> Self {
        let mut p = Self::zero(exp.len());
        p.add_term(exp, coef);
        p
    }

    /// The coordinate function `z_j` (0-based).
    pub fn coordinate(n: usize, j: usize) -> Self {
        let mut e = vec![0; n];
        e[j] = 1;
        Self::monomial(e, c64(1.0, 0.0))
    }

    pub fn add_term(&mut self, exp: Vec<u32>, coef: C64) {
        debug_assert_eq!(exp.len(), self.n);
        let slot = self.terms.entry(exp).or_default();
        *slot += coef;
    }

    pub fn scale(&self, s: C64) -> Poly {
        Poly {
            n: self.n,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c * s)).collect(),
        }
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn eval(&self, z: &[C64]) -> C64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                e.iter()
                    .zip(z)
                    .fold(*c, |acc, (&k, zj)| acc * zj.powu(k))
            })
            .sum()
    }
}

/// Commuting operators, stored either as explicit matrices or as
/// `T_j = Q Diag(w^j) Q^{-1}`.
#[derive(Debug, Clone, PartialEq)]
pub enum CommutingTuple {
    General(Vec<ComplexMatrix>),
    Diagonalizable {
        q: ComplexMatrix,
        q_inv: ComplexMatrix,
        diagonals: Vec<Vec<C64>>,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum TupleFile {
    Diagonalizable {
        n: usize,
        dim: usize,
        #[serde(rename = "Q")]
        q: ComplexMatrix,
        #[serde(with = "diag_rows")]
        diagonals: Vec<Vec<C64>>,
    },
    General {
        matrices: Vec<ComplexMatrix>,
    },
}

mod diag_rows {
    use super::C64;
    use crate::point::{from_pairs, to_pairs};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Vec<C64>], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|r| to_pairs(r)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<C64>>, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        Ok(rows.iter().map(|r| from_pairs(r)).collect())
    }
}

impl Serialize for CommutingTuple {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let file = match self {
            CommutingTuple::General(m) => TupleFile::General { matrices: m.clone() },
            CommutingTuple::Diagonalizable { q, diagonals, .. } => TupleFile::Diagonalizable {
                n: diagonals.len(),
                dim: q.rows(),
                q: q.clone(),
                diagonals: diagonals.clone(),
            },
        };
        file.serialize(s)
    }
}

impl<'de> Deserialize<'de> for CommutingTuple {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let file = TupleFile::deserialize(d)?;
        let t = match file {
            TupleFile::General { matrices } => CommutingTuple::general(matrices),
            TupleFile::Diagonalizable { n, dim, q, diagonals } => {
                if diagonals.len() != n || q.rows() != dim {
                    return Err(serde::de::Error::custom(format!(
                        "tuple header says n = {n}, dim = {dim}; data has {} diagonals and {}x{} Q",
                        diagonals.len(),
                        q.rows(),
                        q.cols()
                    )));
                }
                CommutingTuple::diagonalizable(q, diagonals)
            }
        };
        t.map_err(serde::de::Error::custom)
    }
}

fn check_contraction(t: &ComplexMatrix, j: usize) -> Result<()> {
    let norm = operator_norm(t)?;
    if norm > 1.0 + TUPLE_TOL {
        return Err(BallError::Precondition(format!(
            "operator {j} has norm {norm} > 1 (not a contraction)"
        )));
    }
    Ok(())
}

impl CommutingTuple {
    /// Validates squareness, pairwise commutation and contractivity.
    pub fn general(mats: Vec<ComplexMatrix>) -> Result<Self> {
        let Some(first) = mats.first() else {
            return Err(BallError::Empty("operator tuple"));
        };
        let dim = first.rows();
        for (j, m) in mats.iter().enumerate() {
            if !m.is_square() {
                return Err(BallError::NotSquare {
                    rows: m.rows(),
                    cols: m.cols(),
                });
            }
            if m.rows() != dim {
                return Err(BallError::DimensionMismatch {
                    expected: dim,
                    found: m.rows(),
                });
            }
            if !m.is_finite() {
                return Err(BallError::NonFinite("tuple operator"));
            }
            check_contraction(m, j)?;
        }
        for i in 0..mats.len() {
            for j in (i + 1)..mats.len() {
                let ab = mats[i].matmul(&mats[j])?;
                let ba = mats[j].matmul(&mats[i])?;
                let scale = mats[i].max_abs().max(mats[j].max_abs()).max(1.0);
                let comm = operator_norm(&ab.sub(&ba)?)?;
                if comm > TUPLE_TOL * scale {
                    return Err(BallError::Precondition(format!(
                        "operators {i} and {j} do not commute (commutator norm {comm:e})"
                    )));
                }
            }
        }
        Ok(CommutingTuple::General(mats))
    }

    /// `T_j = Q Diag(diagonals[j]) Q^{-1}`; each must be a contraction.
    pub fn diagonalizable(q: ComplexMatrix, diagonals: Vec<Vec<C64>>) -> Result<Self> {
        if diagonals.is_empty() {
            return Err(BallError::Empty("operator tuple"));
        }
        if !q.is_square() {
            return Err(BallError::NotSquare {
                rows: q.rows(),
                cols: q.cols(),
            });
        }
        for d in &diagonals {
            if d.len() != q.rows() {
                return Err(BallError::DimensionMismatch {
                    expected: q.rows(),
                    found: d.len(),
                });
            }
            if d.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(BallError::NonFinite("tuple diagonal"));
            }
        }
        let q_inv = q.inverse()?;
        let t = CommutingTuple::Diagonalizable { q, q_inv, diagonals };
        for (j, m) in t.matrices()?.iter().enumerate() {
            check_contraction(m, j)?;
        }
        Ok(t)
    }

    pub fn n(&self) -> usize {
        match self {
            CommutingTuple::General(m) => m.len(),
            CommutingTuple::Diagonalizable { diagonals, .. } => diagonals.len(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            CommutingTuple::General(m) => m[0].rows(),
            CommutingTuple::Diagonalizable { q, .. } => q.rows(),
        }
    }

    pub fn matrices(&self) -> Result<Vec<ComplexMatrix>> {
        match self {
            CommutingTuple::General(m) => Ok(m.clone()),
            CommutingTuple::Diagonalizable { q, q_inv, diagonals } => diagonals
                .iter()
                .map(|d| q.mul_diag_right(d).matmul(q_inv))
                .collect(),
        }
    }

    /// The general form of the same operators.
    pub fn to_general(&self) -> Result<CommutingTuple> {
        Ok(CommutingTuple::General(self.matrices()?))
    }

    /// Rows `(w^j_1, ..., w^j_n)` read off the diagonals, one point per
    /// eigenvector; `None` for the general form.
    pub fn diagonal_points(&self) -> Option<Vec<Point>> {
        match self {
            CommutingTuple::General(_) => None,
            CommutingTuple::Diagonalizable { diagonals, .. } => {
                Some(diagonals.iter().map(|d| Point::new(d.clone())).collect())
            }
        }
    }
}

/// `p(T_1, ..., T_n)`.
pub fn poly_eval_matrices(p: &Poly, t: &CommutingTuple) -> Result<ComplexMatrix> {
    if p.n != t.n() {
        return Err(BallError::DimensionMismatch {
            expected: t.n(),
            found: p.n,
        });
    }
    let dim = t.dim();
    match t {
        CommutingTuple::Diagonalizable { q, q_inv, diagonals } => {
            let values: Vec<C64> = (0..dim)
                .map(|r| {
                    let z: Vec<C64> = diagonals.iter().map(|d| d[r]).collect();
                    p.eval(&z)
                })
                .collect();
            q.mul_diag_right(&values).matmul(q_inv)
        }
        CommutingTuple::General(mats) => {
            let mut powers: Vec<Vec<ComplexMatrix>> = mats
                .iter()
                .map(|_| vec![ComplexMatrix::identity(dim)])
                .collect();
            let mut acc = ComplexMatrix::zeros(dim, dim);
            for (exp, coef) in &p.terms {
                let mut term = ComplexMatrix::identity(dim);
                for (j, &e) in exp.iter().enumerate() {
                    while powers[j].len() <= e as usize {
                        let next = powers[j].last().expect("identity present").matmul(&mats[j])?;
                        powers[j].push(next);
                    }
                    term = term.matmul(&powers[j][e as usize])?;
                }
                acc = acc.add(&term.scale(*coef))?;
            }
            Ok(acc)
        }
    }
}

/// `max |p|` over the `grid^n` torus points `exp(2 pi i g / grid)`.
///
/// Angles are `2 pi (g / grid)`, so doubling the grid keeps every old point
/// bit-for-bit and the value is monotone under refinement.
pub fn sup_norm_torus(p: &Poly, grid: usize) -> Result<f64> {
    if grid < 8 {
        return Err(BallError::InvalidArgument(format!("grid {grid} below the minimum of 8")));
    }
    let n = p.n;
    let evaluations = (grid as f64).powi(n as i32);
    if evaluations > TORUS_BUDGET {
        return Err(BallError::GridBudget {
            evaluations,
            limit: TORUS_BUDGET,
        });
    }
    let terms: Vec<(&Vec<u32>, C64)> = p.terms.iter().map(|(e, c)| (e, *c)).collect();
    if n == 0 {
        return Ok(terms.iter().map(|t| t.1).sum::<C64>().norm());
    }
    let max_exp = terms.iter().flat_map(|(e, _)| e.iter().copied()).max().unwrap_or(0) as usize;
    // table[g][e] = exp(i e theta_g)
    let table: Vec<Vec<C64>> = (0..grid)
        .map(|g| {
            let theta = TAU * (g as f64 / grid as f64);
            (0..=max_exp).map(|e| C64::from_polar(1.0, theta * e as f64)).collect()
        })
        .collect();
    let inner = grid.pow((n - 1) as u32);
    let best = (0..grid)
        .into_par_iter()
        .map(|g0| {
            let mut idx = vec![0usize; n];
            idx[0] = g0;
            let mut best: f64 = 0.0;
            for flat in 0..inner {
                let mut f = flat;
                for slot in idx.iter_mut().skip(1) {
                    *slot = f % grid;
                    f /= grid;
                }
                let v: C64 = terms
                    .iter()
                    .map(|(e, c)| {
                        e.iter()
                            .zip(&idx)
                            .fold(*c, |acc, (&k, &g)| acc * table[g][k as usize])
                    })
                    .sum();
                best = best.max(v.norm());
            }
            best
        })
        .reduce(|| 0.0, f64::max);
    Ok(best)
}

/// Rigorous upper bound for the true sup-norm from the grid value.
///
/// For total degree `D`, `|p|^2` restricted to any segment is an exponential
/// sum of type `D`, so Bernstein's inequality bounds its second derivative by
/// `D^2 sup|p|^2`; a maximiser is within `pi / grid` of a grid point in each
/// angle, giving `sup <= M / sqrt(1 - (D pi / grid)^2 / 2)`. Infinite when the
/// grid is too coarse for the bound to apply.
pub fn sup_norm_upper_bound(p: &Poly, grid: usize) -> Result<f64> {
    let m = sup_norm_torus(p, grid)?;
    let h = p.total_degree() as f64 * PI / grid as f64;
    let shrink = 1.0 - 0.5 * h * h;
    if shrink <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(m / shrink.sqrt())
}

/// `||p(T)||`.
pub fn operator_norm_of(p: &Poly, t: &CommutingTuple) -> Result<f64> {
    operator_norm(&poly_eval_matrices(p, t)?)
}

/// `||p(T)|| / sup_grid |p|`.
pub fn vnn_ratio(p: &Poly, t: &CommutingTuple, grid: usize) -> Result<f64> {
    let sup = sup_norm_torus(p, grid)?;
    if sup < 1e-12 {
        return Err(BallError::DegeneratePolynomial(sup));
    }
    Ok(operator_norm(&poly_eval_matrices(p, t)?)? / sup)
}

/// `||p(T)|| / (rigorous upper bound on ||p||_inf)`; above 1 only for a
/// genuine violation.
pub fn vnn_ratio_conservative(p: &Poly, t: &CommutingTuple, grid: usize) -> Result<f64> {
    let sup = sup_norm_upper_bound(p, grid)?;
    if sup < 1e-12 {
        return Err(BallError::DegeneratePolynomial(sup));
    }
    Ok(operator_norm(&poly_eval_matrices(p, t)?)? / sup)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ViolationCertificate {
    pub tuple: CommutingTuple,
    pub poly: Poly,
    pub ratio: f64,
    pub grid_used: usize,
}

/// Result of re-checking a certificate.
#[derive(Debug, Clone, Serialize)]
pub struct Reverification {
    pub ratio_at_grid: f64,
    pub ratio_at_double_grid: f64,
    pub conservative_ratio: f64,
    pub reproduces_stored: bool,
    pub stable_under_refinement: bool,
    pub violation: bool,
}

impl ViolationCertificate {
    /// Recomputes the ratio at `grid_used` and `2 * grid_used`.
    pub fn reverify(&self) -> Result<Reverification> {
        let r1 = vnn_ratio(&self.poly, &self.tuple, self.grid_used)?;
        let r2 = vnn_ratio(&self.poly, &self.tuple, 2 * self.grid_used)?;
        let cons = vnn_ratio_conservative(&self.poly, &self.tuple, 2 * self.grid_used)?;
        let reproduces = (r1 - self.ratio).abs() <= 1e-8 * self.ratio.abs();
        let stable = (r2 - r1).abs() <= 1e-6 * r1.abs();
        Ok(Reverification {
            ratio_at_grid: r1,
            ratio_at_double_grid: r2,
            conservative_ratio: cons,
            reproduces_stored: reproduces,
            stable_under_refinement: stable,
            violation: reproduces && stable && r2 > 1.0 && cons > 1.0,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchConfig {
    pub n: usize,
    pub dim: usize,
    pub seed: u64,
    pub iters: usize,
    pub grid: usize,
    pub restarts: usize,
    pub max_degree: u32,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            n: 3,
            dim: 4,
            seed: 0,
            iters: 500,
            grid: 32,
            restarts: 4,
            max_degree: 3,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchOutcome {
    /// Best `||p(T)|| / (upper bound on ||p||_inf)` found.
    pub best_ratio: f64,
    pub best_tuple: CommutingTuple,
    pub best_poly: Poly,
    /// Present only when the best candidate re-verifies as a violation.
    pub certificate: Option<ViolationCertificate>,
}

#[derive(Clone)]
struct Candidate {
    q: ComplexMatrix,
    diagonals: Vec<Vec<C64>>,
    coefs: Vec<C64>,
}

fn gaussian(rng: &mut ChaCha8Rng) -> C64 {
    c64(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

struct Scored {
    ratio: f64,
    tuple: CommutingTuple,
    poly: Poly,
}

fn score(c: &Candidate, exps: &[Vec<u32>], n: usize, grid: usize) -> Option<Scored> {
    if c.q.condition_number().ok()? > MAX_CONDITION {
        return None;
    }
    let q_inv = c.q.inverse().ok()?;
    let mut diagonals = c.diagonals.clone();
    for d in &mut diagonals {
        let norm = operator_norm(&c.q.mul_diag_right(d).matmul(&q_inv).ok()?).ok()?;
        let s = 1.0 / (norm + 1e-12);
        for z in d.iter_mut() {
            *z *= s;
        }
    }
    let mut poly = Poly::zero(n);
    for (e, &k) in exps.iter().zip(&c.coefs) {
        poly.add_term(e.clone(), k);
    }
    let tuple = CommutingTuple::Diagonalizable {
        q: c.q.clone(),
        q_inv,
        diagonals,
    };
    let ratio = vnn_ratio_conservative(&poly, &tuple, grid).ok()?;
    ratio.is_finite().then_some(Scored { ratio, tuple, poly })
}

fn exponents_up_to(n: usize, max_degree: u32) -> Vec<Vec<u32>> {
    let mut out: Vec<Vec<u32>> = vec![vec![]];
    for _ in 0..n {
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

/// Randomized hill-climb over `(Q, diagonals, coefficients)` for a tuple of
/// simultaneously diagonalizable contractions violating von Neumann's
/// inequality. Diagonals are rescaled after every move so each `T_j` has norm
/// just under 1; the objective uses the rigorous sup-norm bound, so scalar and
/// commuting-normal cases can never score above 1. Restarts run in parallel
/// with derived seeds; output depends only on the config.
pub fn violation_search(cfg: &SearchConfig) -> Result<SearchOutcome> {
    if cfg.iters == 0 || cfg.n == 0 || cfg.dim == 0 {
        return Err(BallError::InvalidArgument("iters, n and dim must be positive".into()));
    }
    let exps = exponents_up_to(cfg.n, cfg.max_degree);
    let restarts = cfg.restarts.max(1);
    let runs: Vec<Option<Scored>> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, r as u64));
            let mut cur = Candidate {
                q: ComplexMatrix::identity(cfg.dim)
                    .add(&ComplexMatrix::from_fn(cfg.dim, cfg.dim, |_, _| gaussian(&mut rng) * 0.5))
                    .ok()?,
                diagonals: (0..cfg.n)
                    .map(|_| (0..cfg.dim).map(|_| gaussian(&mut rng)).collect())
                    .collect(),
                coefs: exps.iter().map(|_| gaussian(&mut rng)).collect(),
            };
            let mut best = score(&cur, &exps, cfg.n, cfg.grid);
            let mut sigma = 0.3;
            for _ in 0..cfg.iters {
                let mut next = cur.clone();
                match rng.random_range(0..3) {
                    0 => {
                        let (i, j) = (rng.random_range(0..cfg.dim), rng.random_range(0..cfg.dim));
                        next.q[(i, j)] += gaussian(&mut rng) * sigma;
                    }
                    1 => {
                        let j = rng.random_range(0..cfg.n);
                        let i = rng.random_range(0..cfg.dim);
                        next.diagonals[j][i] += gaussian(&mut rng) * sigma;
                    }
                    _ => {
                        let i = rng.random_range(0..exps.len());
                        next.coefs[i] += gaussian(&mut rng) * sigma;
                    }
                }
                let s = score(&next, &exps, cfg.n, cfg.grid);
                let improves = match (&s, &best) {
                    (Some(a), Some(b)) => a.ratio > b.ratio,
                    (Some(_), None) => true,
                    _ => false,
                };
                if improves {
                    cur = next;
                    best = s;
                    sigma = (sigma * 1.5).min(2.0);
                } else {
                    sigma = (sigma * 0.95).max(1e-4);
                }
            }
            best
        })
        .collect();

    let mut winner: Option<Scored> = None;
    for s in runs.into_iter().flatten() {
        if winner.as_ref().is_none_or(|w| s.ratio > w.ratio) {
            winner = Some(s);
        }
    }
    let Some(best) = winner else {
        return Err(BallError::InvalidArgument("no admissible candidate found".into()));
    };
    let certificate = if best.ratio > 1.0 {
        let cert = ViolationCertificate {
            ratio: vnn_ratio(&best.poly, &best.tuple, cfg.grid)?,
            tuple: best.tuple.clone(),
            poly: best.poly.clone(),
            grid_used: cfg.grid,
        };
        cert.reverify()?.violation.then_some(cert)
    } else {
        None
    };
    Ok(SearchOutcome {
        best_ratio: best.ratio,
        best_tuple: best.tuple,
        best_poly: best.poly,
        certificate,
    })
}

/// The unit ball of the algebra spanned by `E_i = Q E_ii Q^{-1}`:
/// `||Q Diag(w) Q^{-1}|| <= 1 + tol`.
pub fn example31_ball(q: &ComplexMatrix, tol: f64) -> Result<BallOracle> {
    let cond = q.condition_number()?;
    if !cond.is_finite() {
        return Err(BallError::NotInvertible { min: 0.0 });
    }
    if cond > MAX_CONDITION {
        return Err(BallError::IllConditioned {
            cond,
            limit: MAX_CONDITION,
        });
    }
    let q = q.clone();
    let q_inv = q.inverse()?;
    Ok(BallOracle::new(q.rows(), Family::Idempotent, tol, move |w| {
        let m = q.mul_diag_right(w.coords()).matmul(&q_inv)?;
        Ok(Membership::from_bool(operator_norm(&m)? <= 1.0 + tol))
    }))
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum FalsifyResult {
    /// `witness = p(T_points)` lies outside the ball although `||p|| <= 1`.
    Falsified {
        witness: Point,
        normalization: f64,
    },
    NoViolationFound {
        image: Point,
        normalization: f64,
    },
}

impl FalsifyResult {
    pub fn is_falsified(&self) -> bool {
        matches!(self, FalsifyResult::Falsified { .. })
    }
}

/// Applies `p / U` coordinatewise to member points, with `U` the rigorous
/// sup-norm bound at `grid`, and reports when the image leaves the ball.
///
/// A hyperconvex ball contains `q(T_points)` for every `q` with
/// `||q||_inf <= 1`, so a non-member image (still a non-member after shrinking
/// by `1e-6`) falsifies hyperconvexity.
pub fn hyperconvexity_falsify(
    oracle: &BallOracle,
    t_points: &[Point],
    p: &Poly,
    grid: usize,
) -> Result<FalsifyResult> {
    if t_points.len() != p.n {
        return Err(BallError::DimensionMismatch {
            expected: p.n,
            found: t_points.len(),
        });
    }
    let k = oracle.dim();
    for t in t_points {
        t.check_dim(k)?;
        if oracle.membership(t)? != Membership::Member {
            return Err(BallError::Precondition("every T point must be a member of the ball".into()));
        }
    }
    let bound = sup_norm_upper_bound(p, grid)?;
    if !(bound.is_finite() && bound >= 1e-12) {
        return Err(BallError::DegeneratePolynomial(bound));
    }
    let scaled = p.scale(c64(1.0 / bound, 0.0));
    let image = Point::new(
        (0..k)
            .map(|j| {
                let z: Vec<C64> = t_points.iter().map(|t| t[j]).collect();
                scaled.eval(&z)
            })
            .collect(),
    );
    let outside = oracle.membership(&image)? == Membership::NonMember
        && oracle.membership(&image.scale_real(1.0 - 1e-6))? == Membership::NonMember;
    Ok(if outside {
        FalsifyResult::Falsified {
            witness: image,
            normalization: bound,
        }
    } else {
        FalsifyResult::NoViolationFound {
            image,
            normalization: bound,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(n: usize, terms: &[(&[u32], f64)]) -> Poly {
        let mut p = Poly::zero(n);
        for (e, c) in terms {
            p.add_term(e.to_vec(), c64(*c, 0.0));
        }
        p
    }

    #[test]
    fn sup_norm_examples() {
        assert!((sup_norm_torus(&Poly::coordinate(1, 0), 16).unwrap() - 1.0).abs() < 1e-15);
        let p = poly(2, &[(&[1, 0], 1.0), (&[0, 1], 1.0)]);
        assert!((sup_norm_torus(&p, 16).unwrap() - 2.0).abs() < 1e-15);
        let p = poly(3, &[(&[1, 1, 0], 1.0), (&[0, 0, 1], -1.0)]);
        assert!((sup_norm_torus(&p, 16).unwrap() - 2.0).abs() < 1e-15);
        assert!(sup_norm_torus(&p, 4).is_err());
        assert!(matches!(sup_norm_torus(&p, 1000), Err(BallError::GridBudget { .. })));
    }

    #[test]
    fn upper_bound_dominates_fine_grid() {
        let p = poly(2, &[(&[2, 1], 1.0), (&[0, 1], -0.7), (&[1, 0], 0.3)]);
        let coarse = sup_norm_upper_bound(&p, 16).unwrap();
        let fine = sup_norm_torus(&p, 1024).unwrap();
        assert!(coarse >= fine);
    }

    #[test]
    fn eval_examples() {
        let t = CommutingTuple::diagonalizable(
            ComplexMatrix::identity(2),
            vec![vec![c64(0.5, 0.0), c64(0.0, 0.5)], vec![c64(-0.2, 0.0), c64(0.1, 0.1)]],
        )
        .unwrap();
        let m = poly_eval_matrices(&Poly::coordinate(2, 1), &t).unwrap();
        assert_eq!(m, t.matrices().unwrap()[1]);
        let one = poly_eval_matrices(&Poly::constant(2, c64(1.0, 0.0)), &t).unwrap();
        assert_eq!(one, ComplexMatrix::identity(2));
        let g = t.to_general().unwrap();
        let p = poly(2, &[(&[2, 1], 1.0), (&[0, 3], -0.5)]);
        let a = poly_eval_matrices(&p, &t).unwrap();
        let b = poly_eval_matrices(&p, &g).unwrap();
        assert!(a.sub(&b).unwrap().max_abs() < 1e-14);
        assert!(poly_eval_matrices(&Poly::coordinate(3, 0), &t).is_err());
    }

    #[test]
    fn tuple_validation() {
        let shift = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        let diag = ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]).unwrap();
        assert!(CommutingTuple::general(vec![shift.clone(), diag]).is_err());
        assert!(CommutingTuple::general(vec![shift.scale(c64(2.0, 0.0))]).is_err());
        assert!(CommutingTuple::general(vec![]).is_err());
    }

    #[test]
    fn diagonal_tuples_obey_inequality() {
        let t = CommutingTuple::diagonalizable(
            ComplexMatrix::identity(3),
            vec![
                vec![c64(0.9, 0.1), c64(-0.5, 0.5), c64(0.0, -1.0)],
                vec![c64(0.3, 0.0), c64(0.2, -0.9), c64(0.6, 0.6)],
            ],
        )
        .unwrap();
        let p = poly(2, &[(&[1, 1], 2.0), (&[2, 0], -1.0), (&[0, 0], 0.5)]);
        assert!(vnn_ratio(&p, &t, 64).unwrap() <= 1.0 + 1e-10);
        let zero = Poly::zero(2);
        assert!(matches!(vnn_ratio(&zero, &t, 64), Err(BallError::DegeneratePolynomial(_))));
    }

    #[test]
    fn search_dim_one_never_exceeds_one() {
        let out = violation_search(&SearchConfig {
            dim: 1,
            iters: 100,
            grid: 16,
            restarts: 2,
            ..SearchConfig::default()
        })
        .unwrap();
        assert!(out.best_ratio <= 1.0);
        assert!(out.certificate.is_none());
    }

    #[test]
    fn example31_diagonal_q_is_polydisk() {
        let q = ComplexMatrix::diag(&[c64(2.0, 0.0), c64(0.5, 0.0)]);
        let o = example31_ball(&q, 1e-10).unwrap();
        assert!(o.membership(&Point::from_real(&[1.0, -1.0])).unwrap().is_member());
        assert!(!o.membership(&Point::from_real(&[1.0, -1.01])).unwrap().is_member());
        let singular = ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[1.0, 1.0]]).unwrap();
        assert!(example31_ball(&singular, 1e-10).is_err());
    }

    #[test]
    fn falsify_polydisk_coordinate() {
        let pd = BallOracle::polydisk(2, 1e-12);
        let pts = [Point::from_real(&[0.5, -0.3]), Point::from_real(&[0.9, 0.1])];
        let p = Poly::coordinate(2, 1);
        let r = hyperconvexity_falsify(&pd, &pts, &p, 32).unwrap();
        assert!(!r.is_falsified());
        let bad = [Point::from_real(&[1.5, 0.0]), pts[1].clone()];
        assert!(hyperconvexity_falsify(&pd, &bad, &p, 32).is_err());
    }

    #[test]
    fn poly_json_format() {
        let p = poly(3, &[(&[2, 0, 0], 1.0)]);
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"n":3,"terms":[{"exp":[2,0,0],"coef":[1.0,0.0]}]}"#);
        let back: Poly = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<Poly>(r#"{"n":2,"terms":[{"exp":[1],"coef":[1,0]}]}"#).is_err());
    }
}
