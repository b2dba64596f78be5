//! The curve family `f_{a,c}(u) = (ac - (ac+c) u) / ((ac+a) - (ac+a+c) u)`
//! and the envelope built from an inductive `(a_n, c_n)` sequence.
//!
//! `y^2 <= f_{a,c}(x^2)` is the slice `{(0, x, y)}` of the perp of
//! `P_{a,c} = [[1,1,1],[1,a+1,1],[1,1,c+1]]`; the envelope of a sequence of such
//! curves is the slice of the perp of all the generators together, and every
//! switch of the active curve is a corner.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{BallError, Result};
use crate::schur::{pac_matrix, IdealFile};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveParams {
    pub a: f64,
    pub c: f64,
}

impl CurveParams {
    pub fn new(a: f64, c: f64) -> Result<Self> {
        if !(a > 0.0 && c > 0.0 && a.is_finite() && c.is_finite()) {
            return Err(BallError::InvalidArgument(format!(
                "curve parameters must be positive and finite, got a = {a}, c = {c}"
            )));
        }
        Ok(CurveParams { a, c })
    }

    /// `a / (a + 1)`, where the curve reaches 0.
    pub fn right_endpoint(&self) -> f64 {
        self.a / (self.a + 1.0)
    }

    /// Numerator `N - M u` and denominator `P - R u` coefficients `(N, M, P, R)`.
    fn coefficients(&self) -> (f64, f64, f64, f64) {
        let (a, c) = (self.a, self.c);
        (a * c, a * c + c, a * c + a, a * c + a + c)
    }

    fn check_domain(&self, u: f64) -> Result<f64> {
        let end = self.right_endpoint();
        let slack = 4.0 * f64::EPSILON;
        if !u.is_finite() || u < -slack || u > end * (1.0 + slack) {
            return Err(BallError::InvalidArgument(format!(
                "u = {u} outside the domain [0, {end}]"
            )));
        }
        Ok(u.clamp(0.0, end))
    }
}

/// `f_{a,c}(u)` on `[0, a / (a + 1)]`.
pub fn f_ac(p: CurveParams, u: f64) -> Result<f64> {
    let u = p.check_domain(u)?;
    if u >= p.right_endpoint() {
        return Ok(0.0);
    }
    let (n, m, q, r) = p.coefficients();
    Ok(((n - m * u) / (q - r * u)).max(0.0))
}

/// `f'_{a,c}(u) = -ac / ((ac+a) - (ac+a+c) u)^2`.
pub fn f_ac_prime(p: CurveParams, u: f64) -> Result<f64> {
    let u = p.check_domain(u)?;
    let (n, _, q, r) = p.coefficients();
    let den = q - r * u;
    Ok(-n / (den * den))
}

/// Curve value extended by 0 past the right endpoint.
fn f_ext(p: CurveParams, u: f64) -> f64 {
    if u >= p.right_endpoint() {
        return 0.0;
    }
    let (n, m, q, r) = p.coefficients();
    ((n - m * u) / (q - r * u)).max(0.0)
}

fn bisect_crossing(p1: CurveParams, p2: CurveParams, lo: f64, hi: f64) -> f64 {
    let g = |u: f64| f_ext(p1, u) - f_ext(p2, u);
    let (mut lo, mut hi) = (lo, hi);
    let g_lo = g(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (g(mid) > 0.0) == (g_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Abscissa where `f_{a1,c1}` and `f_{a2,c2}` cross inside `(0, min endpoint)`.
///
/// Solves the quadratic obtained by clearing denominators and falls back to
/// bisection when the leading coefficient is negligible or the root misses
/// the residual target of `1e-12`.
pub fn curve_intersection(p1: CurveParams, p2: CurveParams) -> Result<f64> {
    if p1 == p2 {
        return Err(BallError::CurvesCoincide);
    }
    let end = p1.right_endpoint().min(p2.right_endpoint());
    let g = |u: f64| f_ext(p1, u) - f_ext(p2, u);
    let (g0, g_end) = (g(0.0), g(end));
    if g0 == 0.0 || g_end == 0.0 || (g0 > 0.0) == (g_end > 0.0) {
        return Err(BallError::NoRoot(format!(
            "difference has signs {g0:e} at 0 and {g_end:e} at {end}"
        )));
    }
    let (n1, m1, q1, r1) = p1.coefficients();
    let (n2, m2, q2, r2) = p2.coefficients();
    let qa = m1 * r2 - m2 * r1;
    let qb = -(n1 * r2 + m1 * q2 - n2 * r1 - m2 * q1);
    let qc = n1 * q2 - n2 * q1;
    let scale = qa.abs().max(qb.abs()).max(qc.abs());

    let mut candidates = Vec::new();
    if qa.abs() > 1e-12 * scale {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc >= 0.0 {
            let s = disc.sqrt();
            let t = -0.5 * (qb + qb.signum() * s);
            if t != 0.0 {
                candidates.push(t / qa);
                candidates.push(qc / t);
            }
        }
    } else if qb != 0.0 {
        candidates.push(-qc / qb);
    }
    let root = candidates
        .into_iter()
        .filter(|u| *u > 0.0 && *u < end)
        .min_by(|x, y| g(*x).abs().total_cmp(&g(*y).abs()));
    match root {
        Some(u) if g(u).abs() <= 1e-12 => Ok(u),
        _ => {
            let u = bisect_crossing(p1, p2, 0.0, end);
            if g(u).abs() > 1e-12 {
                return Err(BallError::NoRoot(format!("residual {:e} at {u}", g(u))));
            }
            Ok(u)
        }
    }
}

/// How the next right endpoint is placed inside `(mu_n, a_n / (a_n + 1))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointPolicy {
    /// Midpoint of the gap.
    Bisect,
    /// Uniform fraction of the gap in `[1/4, 1/2]`, drawn from the seed.
    RandomFraction,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SequenceConfig {
    /// Number of curves.
    pub n_curves: usize,
    pub a0: f64,
    pub c0: f64,
    pub jump_min: f64,
    pub seed: u64,
    pub policy: EndpointPolicy,
    /// Cap on the geometric growth of `c` per step.
    pub max_c_doublings: usize,
}

impl Default for SequenceConfig {
    fn default() -> Self {
        SequenceConfig {
            n_curves: 8,
            a0: 1.0,
            c0: 1.0,
            jump_min: 1e-6,
            seed: 0,
            policy: EndpointPolicy::Bisect,
            max_c_doublings: 200,
        }
    }
}

/// Curves, the breakpoints `mu_1 < mu_2 < ...` where the active curve
/// switches, and the derivative jump at each breakpoint.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnvelopeModel {
    pub curves: Vec<CurveParams>,
    /// `breakpoints[n - 1] = mu_n`, the crossing of curves `n - 1` and `n`.
    pub breakpoints: Vec<f64>,
    pub mu_limit: f64,
    pub corner_jumps: Vec<f64>,
    pub jump_min: f64,
}

fn slope_jump(left: CurveParams, right: CurveParams, mu: f64) -> Result<f64> {
    Ok((f_ac_prime(left, mu)? - f_ac_prime(right, mu)?).abs())
}

/// Builds `n_curves` curves inductively.
///
/// Step `n -> n + 1`: the new right endpoint is placed inside
/// `(mu_n, a_n / (a_n + 1))` by the policy, which makes gap-halving automatic
/// once `mu_{n+1} > mu_n`; then `c` doubles from `c_n` until the crossing
/// moves past `mu_n` and the slope jump reaches `jump_min`. If `c` alone
/// cannot get there the fraction is halved and the step retried.
pub fn build_sequence(cfg: &SequenceConfig) -> Result<EnvelopeModel> {
    if cfg.n_curves == 0 {
        return Err(BallError::InvalidArgument("need at least one curve".into()));
    }
    if !(cfg.jump_min >= 0.0 && cfg.jump_min.is_finite()) {
        return Err(BallError::InvalidArgument("jump_min must be finite and nonnegative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut curves = vec![CurveParams::new(cfg.a0, cfg.c0)?];
    let mut breakpoints: Vec<f64> = Vec::new();
    let mut jumps = Vec::new();

    for step in 1..cfg.n_curves {
        let prev = curves[step - 1];
        let mu_prev = breakpoints.last().copied().unwrap_or(0.0);
        let gap = prev.right_endpoint() - mu_prev;
        let mut fraction = match cfg.policy {
            EndpointPolicy::Bisect => 0.5,
            EndpointPolicy::RandomFraction => rng.random_range(0.25..=0.5),
        };
        let mut found = None;
        for _retry in 0..12 {
            let r = mu_prev + fraction * gap;
            let a = r / (1.0 - r);
            if !(a > 0.0 && a < prev.a && r > mu_prev) {
                break;
            }
            let candidates: Vec<f64> = (1..=cfg.max_c_doublings)
                .map(|j| prev.c * 2f64.powi(j as i32))
                .take_while(|c| c.is_finite())
                .collect();
            let accepted = candidates
                .par_iter()
                .map(|&c| -> Option<(CurveParams, f64, f64)> {
                    let next = CurveParams::new(a, c).ok()?;
                    let mu = curve_intersection(prev, next).ok()?;
                    let jump = slope_jump(prev, next, mu).ok()?;
                    (mu > mu_prev && mu < next.right_endpoint() && jump >= cfg.jump_min)
                        .then_some((next, mu, jump))
                })
                .find_first(|x| x.is_some())
                .flatten();
            if accepted.is_some() {
                found = accepted;
                break;
            }
            fraction *= 0.5;
        }
        let Some((next, mu, jump)) = found else {
            return Err(BallError::SequenceStep {
                step,
                diagnostic: format!(
                    "no (a, c) with crossing beyond mu = {mu_prev} and jump >= {} (a_prev = {}, c_prev = {})",
                    cfg.jump_min, prev.a, prev.c
                ),
            });
        };
        curves.push(next);
        breakpoints.push(mu);
        jumps.push(jump);
    }

    let last = curves[curves.len() - 1];
    let mu_limit = match breakpoints.last() {
        Some(&mu) => 0.5 * (mu + last.right_endpoint()),
        None => last.right_endpoint(),
    };
    Ok(EnvelopeModel {
        curves,
        breakpoints,
        mu_limit,
        corner_jumps: jumps,
        jump_min: cfg.jump_min,
    })
}

/// `inf_n f_{a_n,c_n}(u)` with curves counted as 0 past their endpoints, and
/// the index of the curve attaining it (ties go to the later curve).
pub fn envelope_eval(model: &EnvelopeModel, u: f64) -> Result<(f64, usize)> {
    if !u.is_finite() || u < 0.0 {
        return Err(BallError::InvalidArgument(format!("envelope argument {u} must be >= 0")));
    }
    let values: Vec<f64> = model.curves.iter().map(|&p| f_ext(p, u)).collect();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let tie = 1e-15 * min.abs().max(1e-300);
    let active = values.iter().rposition(|&v| v - min <= tie).unwrap_or(0);
    Ok((min, active))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Corner {
    pub mu: f64,
    pub left_slope: f64,
    pub right_slope: f64,
    pub jump: f64,
}

/// Left and right slopes of the envelope at every breakpoint.
pub fn corner_report(model: &EnvelopeModel) -> Result<Vec<Corner>> {
    model
        .breakpoints
        .iter()
        .enumerate()
        .map(|(i, &mu)| {
            let left_slope = f_ac_prime(model.curves[i], mu)?;
            let right_slope = f_ac_prime(model.curves[i + 1], mu)?;
            Ok(Corner {
                mu,
                left_slope,
                right_slope,
                jump: (left_slope - right_slope).abs(),
            })
        })
        .collect()
}

/// One named invariant and whether it held.
#[derive(Debug, Clone, Serialize)]
pub struct InvariantCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl EnvelopeModel {
    /// Re-derives every invariant from the curve list alone: breakpoints are
    /// recomputed by bisection, jumps from the derivative, and the active
    /// curve on each segment by sampling the envelope.
    pub fn verify(&self) -> Vec<InvariantCheck> {
        let mut out = Vec::new();
        let mut push = |name, passed, detail: String| out.push(InvariantCheck { name, passed, detail });
        let cs = &self.curves;
        let ends: Vec<f64> = cs.iter().map(|p| p.right_endpoint()).collect();

        let a_dec = cs.windows(2).all(|w| w[1].a < w[0].a);
        let c_inc = cs.windows(2).all(|w| w[1].c > w[0].c);
        push("a_decreasing", a_dec, format!("{} curves", cs.len()));
        push("c_increasing", c_inc, format!("{} curves", cs.len()));

        let count_ok = self.breakpoints.len() + 1 == cs.len() && self.corner_jumps.len() == self.breakpoints.len();
        push("breakpoint_count", count_ok, format!("{} breakpoints", self.breakpoints.len()));
        if !count_ok {
            return out;
        }

        let recomputed: Vec<f64> = cs
            .windows(2)
            .map(|w| bisect_crossing(w[0], w[1], 0.0, w[0].right_endpoint().min(w[1].right_endpoint())))
            .collect();
        let worst = recomputed
            .iter()
            .zip(&self.breakpoints)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        push("breakpoints_recomputed", worst <= 1e-10, format!("max deviation {worst:e}"));

        let mu_inc = recomputed.windows(2).all(|w| w[1] > w[0]);
        push("mu_increasing", mu_inc, String::new());

        let min_end = ends.iter().copied().fold(f64::INFINITY, f64::min);
        let max_mu = recomputed.iter().copied().fold(0.0, f64::max);
        push(
            "mu_below_all_endpoints",
            max_mu < min_end && self.mu_limit <= min_end,
            format!("max mu {max_mu}, mu_limit {}, min endpoint {min_end}", self.mu_limit),
        );

        let gaps: Vec<f64> = recomputed.iter().enumerate().map(|(i, &mu)| ends[i + 1] - mu).collect();
        let halving = gaps.windows(2).all(|w| w[1] <= 0.5 * w[0]);
        push("gap_halving", halving, format!("gaps {gaps:?}"));

        let jumps_ok = cs
            .windows(2)
            .zip(&recomputed)
            .all(|(w, &mu)| slope_jump(w[0], w[1], mu).map(|j| j >= self.jump_min).unwrap_or(false));
        push("corner_jumps_above_min", jumps_ok, format!("jump_min {:e}", self.jump_min));

        let mut segments_ok = true;
        let mut detail = String::new();
        let mut knots = vec![0.0];
        knots.extend_from_slice(&recomputed);
        knots.push(self.mu_limit);
        for n in 0..cs.len() {
            let (lo, hi) = (knots[n], knots[n + 1]);
            for s in 1..16 {
                let u = lo + (hi - lo) * s as f64 / 16.0;
                let best = cs
                    .iter()
                    .enumerate()
                    .min_by(|x, y| f_ext(*x.1, u).total_cmp(&f_ext(*y.1, u)))
                    .map(|(i, _)| i)
                    .unwrap_or(0);
                if best != n {
                    segments_ok = false;
                    detail = format!("u = {u}: curve {best} active, expected {n}");
                }
            }
        }
        push("active_curve_per_segment", segments_ok, detail);
        out
    }

    pub fn all_invariants_hold(&self) -> bool {
        self.verify().iter().all(|c| c.passed)
    }

    /// `n` evenly spaced samples `(u, f(u), active)` on `[0, mu_limit]`.
    pub fn samples(&self, n: usize) -> Result<Vec<(f64, f64, usize)>> {
        let n = n.max(2);
        (0..n)
            .map(|i| {
                let u = self.mu_limit * i as f64 / (n - 1) as f64;
                let (f, active) = envelope_eval(self, u)?;
                Ok((u, f, active))
            })
            .collect()
    }

    /// The generators `P_{a_n,c_n}` as a Schur ideal file.
    pub fn generators(&self) -> Result<IdealFile> {
        Ok(IdealFile {
            k: 3,
            generators: self
                .curves
                .iter()
                .map(|p| pac_matrix(p.a, p.c))
                .collect::<Result<_>>()?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(a: f64, c: f64) -> CurveParams {
        CurveParams::new(a, c).unwrap()
    }

    #[test]
    fn f_ac_examples() {
        let q = p(2.0, 3.0);
        assert!((f_ac(q, 0.0).unwrap() - 0.75).abs() < 1e-15);
        assert!(f_ac(q, q.right_endpoint()).unwrap().abs() < 1e-15);
        assert!((f_ac(p(1.0, 1.0), 0.25).unwrap() - 0.4).abs() < 1e-15);
        assert!(f_ac(q, -0.1).is_err());
        assert!(f_ac(q, 0.7).is_err());
        assert!(CurveParams::new(0.0, 1.0).is_err());
    }

    #[test]
    fn f_ac_prime_examples() {
        let q = p(1.0, 1.0);
        assert!((f_ac_prime(q, 0.0).unwrap() + 0.25).abs() < 1e-15);
        assert!((f_ac_prime(q, 0.25).unwrap() + 0.64).abs() < 1e-15);
        assert!(f_ac_prime(q, 0.3).unwrap() < f_ac_prime(q, 0.1).unwrap());
    }

    #[test]
    fn intersection_examples() {
        assert_eq!(curve_intersection(p(1.0, 1.0), p(1.0, 1.0)), Err(BallError::CurvesCoincide));
        let (p1, p2) = (p(1.0, 1.0), p(0.5, 4.0));
        let mu = curve_intersection(p1, p2).unwrap();
        assert!(mu > 0.0 && mu < 1.0 / 3.0);
        assert!((f_ac(p1, mu).unwrap() - f_ac(p2, mu).unwrap()).abs() <= 1e-12);
        // same ordering of c as a: no sign change
        assert!(matches!(curve_intersection(p(1.0, 4.0), p(0.5, 1.0)), Err(BallError::NoRoot(_))));
    }

    #[test]
    fn single_curve_model() {
        let m = build_sequence(&SequenceConfig {
            n_curves: 1,
            ..SequenceConfig::default()
        })
        .unwrap();
        assert!(m.breakpoints.is_empty());
        let (v, active) = envelope_eval(&m, 0.25).unwrap();
        assert_eq!(active, 0);
        assert!((v - 0.4).abs() < 1e-15);
        assert!(envelope_eval(&m, -0.1).is_err());
    }

    #[test]
    fn eight_curve_model_holds_invariants() {
        let m = build_sequence(&SequenceConfig::default()).unwrap();
        assert_eq!(m.curves.len(), 8);
        for check in m.verify() {
            assert!(check.passed, "{}: {}", check.name, check.detail);
        }
        let corners = corner_report(&m).unwrap();
        assert_eq!(corners.len(), m.breakpoints.len());
        assert!(corners.iter().all(|c| c.jump >= 1e-6));
    }

    #[test]
    fn random_policy_is_reproducible() {
        let cfg = SequenceConfig {
            policy: EndpointPolicy::RandomFraction,
            seed: 11,
            ..SequenceConfig::default()
        };
        let a = build_sequence(&cfg).unwrap();
        let b = build_sequence(&cfg).unwrap();
        assert_eq!(a.breakpoints, b.breakpoints);
        assert!(a.all_invariants_hold());
    }
}
