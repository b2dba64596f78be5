//! Pick bodies, disk automorphisms and the one-dimension reduction of
//! von Neumann balls.
//!
//! A Pick body `P(alpha_1, ..., alpha_k)` is the set of target tuples
//! `(f(alpha_1), ..., f(alpha_k))` over disk-algebra functions with
//! `||f|| <= 1`; membership is positivity of the Pick matrix. The hat/tilde
//! pair moves between a ball in `C^k` and its slice `{w_1 = 0}` through the
//! Moebius maps `phi_a(z) = (z - a) / (1 - conj(a) z)`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{BallError, Result};
use crate::matrix::{is_psd, HermitianMatrix};
use crate::oracle::{BallOracle, Family, Membership};
use crate::point::{c64, Point, C64};

/// Nodes closer than this are treated as coincident.
pub const NODE_SEPARATION: f64 = 1e-12;
/// Half-width of the band around the unit circle that counts as "on the circle".
pub const CIRCLE_BAND: f64 = 1e-12;
const POLE_TOL: f64 = 1e-14;

/// `phi_a(z) = (z - a) / (1 - conj(a) z)`.
pub fn mobius(a: C64, z: C64) -> Result<C64> {
    let den = c64(1.0, 0.0) - a.conj() * z;
    if den.norm() <= POLE_TOL {
        return Err(BallError::Pole);
    }
    Ok((z - a) / den)
}

/// Pseudo-hyperbolic distance `|z - w| / |1 - conj(w) z|` on the open disk.
pub fn pseudo_hyperbolic(z: C64, w: C64) -> f64 {
    let den = (c64(1.0, 0.0) - w.conj() * z).norm();
    if den == 0.0 {
        return 1.0;
    }
    ((z - w).norm() / den).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeMode {
    OpenDisk,
    Circle,
}

/// Interpolation nodes `alpha_1, ..., alpha_k`, either all in the open disk
/// or all on the unit circle.
#[derive(Debug, Clone, PartialEq)]
pub struct PickNodes {
    alpha: Vec<C64>,
    mode: NodeMode,
}

impl PickNodes {
    pub fn new(alpha: Vec<C64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(BallError::Empty("Pick nodes"));
        }
        if alpha.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(BallError::NonFinite("Pick nodes"));
        }
        let on_circle = |z: &C64| (z.norm() - 1.0).abs() <= CIRCLE_BAND;
        let mode = if alpha.iter().all(on_circle) {
            NodeMode::Circle
        } else if alpha.iter().all(|z| z.norm() < 1.0 && !on_circle(z)) {
            NodeMode::OpenDisk
        } else {
            return Err(BallError::InvalidArgument(
                "Pick nodes must all lie in the open disk or all on the unit circle".into(),
            ));
        };
        for i in 0..alpha.len() {
            for j in (i + 1)..alpha.len() {
                if (alpha[i] - alpha[j]).norm() < NODE_SEPARATION {
                    return Err(BallError::InvalidArgument(format!(
                        "Pick nodes {i} and {j} coincide"
                    )));
                }
            }
        }
        Ok(PickNodes { alpha, mode })
    }

    pub fn k(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self) -> &[C64] {
        &self.alpha
    }

    pub fn mode(&self) -> NodeMode {
        self.mode
    }
}

/// `((1 - conj(w_i) w_j) / (1 - conj(alpha_i) alpha_j))`.
pub fn pick_matrix(nodes: &PickNodes, w: &Point) -> Result<HermitianMatrix> {
    if nodes.mode == NodeMode::Circle {
        return Err(BallError::InvalidArgument(
            "Pick matrix is undefined for nodes on the unit circle".into(),
        ));
    }
    w.check_dim(nodes.k())?;
    if !w.is_finite() {
        return Err(BallError::NonFinite("Pick targets"));
    }
    let a = &nodes.alpha;
    let one = c64(1.0, 0.0);
    Ok(HermitianMatrix::from_fn(nodes.k(), |i, j| {
        (one - w[i].conj() * w[j]) / (one - a[i].conj() * a[j])
    }))
}

/// Membership in the Pick body. On the circle the body is the closed polydisk.
pub fn pick_membership(nodes: &PickNodes, w: &Point, tol: f64) -> Result<Membership> {
    w.check_dim(nodes.k())?;
    match nodes.mode {
        NodeMode::Circle => Ok(Membership::from_bool(w.max_abs() <= 1.0 + tol)),
        NodeMode::OpenDisk => Ok(Membership::from_bool(is_psd(&pick_matrix(nodes, w)?, tol)?)),
    }
}

pub fn pick_oracle(nodes: PickNodes, tol: f64) -> BallOracle {
    let k = nodes.k();
    BallOracle::new(k, Family::Pick, tol, move |w| pick_membership(&nodes, w, tol))
}

/// Minkowski functional `inf { t > 0 : w / t in B }` by bisection.
///
/// The bracket starts at `[max|w_i| / 2, 2k max|w_i|]` and widens as needed;
/// the returned value is the member end of a bracket no wider than
/// `1e-9 * max|w_i|`.
pub fn ball_norm(oracle: &BallOracle, w: &Point) -> Result<f64> {
    w.check_dim(oracle.dim())?;
    if !w.is_finite() {
        return Err(BallError::NonFinite("ball norm argument"));
    }
    let m = w.max_abs();
    if m == 0.0 {
        return Ok(0.0);
    }
    let member_at = |t: f64| -> Result<bool> {
        match oracle.membership(&w.scale_real(1.0 / t))? {
            Membership::Member => Ok(true),
            Membership::NonMember => Ok(false),
            Membership::Unknown => Err(BallError::OracleIncomplete),
        }
    };

    let mut hi = 2.0 * oracle.dim() as f64 * m;
    let mut widen = 0;
    while !member_at(hi)? {
        hi *= 2.0;
        widen += 1;
        if widen > 60 {
            return Err(BallError::InvalidArgument("ball is not absorbing along this ray".into()));
        }
    }
    let mut lo = 0.5 * m;
    let mut shrink = 0;
    while member_at(lo)? {
        hi = lo;
        lo *= 0.5;
        shrink += 1;
        if shrink > 60 {
            return Ok(0.0);
        }
    }
    let width = 1e-9 * m;
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        if member_at(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `hat V = { (v_2, ..., v_k) : (0, v_2, ..., v_k) in V }`.
pub fn hat_section(oracle: &BallOracle) -> Result<BallOracle> {
    let k = oracle.dim();
    if k < 2 {
        return Err(BallError::InvalidArgument("hat section needs k >= 2".into()));
    }
    let inner = oracle.clone();
    Ok(BallOracle::new(k - 1, oracle.family(), oracle.tol(), move |v| {
        inner.membership(&v.prepend(C64::default()))
    }))
}

/// `tilde B = { (a, v_2, ..., v_k) : (phi_a(v_2), ..., phi_a(v_k)) in B }`.
///
/// Points with `|a| > 1` are non-members. On the circle `|a| = 1` the maps
/// degenerate; there only `a e` is decided (member, since every ball contains
/// the unimodular multiples of `e`) and anything else is `Unknown`.
pub fn tilde_lift(section: &BallOracle) -> BallOracle {
    let inner = section.clone();
    let tol = section.tol();
    BallOracle::new(section.dim() + 1, section.family(), tol, move |p| {
        let a = p[0];
        let r = a.norm();
        if r > 1.0 + tol {
            return Ok(Membership::NonMember);
        }
        let rest = p.tail();
        if r >= 1.0 - CIRCLE_BAND {
            let all_a = rest.coords().iter().all(|&v| (v - a).norm() <= tol);
            return Ok(if all_a { Membership::Member } else { Membership::Unknown });
        }
        let images = rest
            .coords()
            .iter()
            .map(|&v| mobius(a, v))
            .collect::<Result<Vec<_>>>()?;
        inner.membership(&Point::new(images))
    })
}

/// Matrix form of "some `f` with `f(0) = 0`, `||f|| <= 1` maps `v` to `w`":
/// `((conj(v_i) v_j - conj(w_i) w_j) / (1 - conj(v_i) v_j)) >= 0`.
pub fn schwarz_pick_dominates(v: &Point, w: &Point, tol: f64) -> Result<bool> {
    w.check_dim(v.dim())?;
    if v.coords().iter().any(|z| z.norm() >= 1.0) {
        return Err(BallError::InvalidArgument(
            "dominance test needs every |v_i| < 1".into(),
        ));
    }
    let m = HermitianMatrix::from_fn(v.dim(), |i, j| {
        let vv = v[i].conj() * v[j];
        (vv - w[i].conj() * w[j]) / (c64(1.0, 0.0) - vv)
    });
    is_psd(&m, tol)
}

/// Trial counts and seed for [`vk_necessary_check`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VkCheckConfig {
    pub combination_trials: usize,
    pub product_trials: usize,
    pub dominance_trials: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for VkCheckConfig {
    fn default() -> Self {
        VkCheckConfig {
            combination_trials: 500,
            product_trials: 500,
            dominance_trials: 500,
            seed: 0,
            tol: 1e-9,
        }
    }
}

/// Tally for one necessary condition.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ConditionTally {
    pub trials: usize,
    pub failures: usize,
    pub undecided: usize,
    /// First offending configuration: inputs followed by the rejected point.
    pub counterexample: Option<Vec<Point>>,
}

impl ConditionTally {
    fn record(&mut self, verdict: Membership, witness: impl FnOnce() -> Vec<Point>) {
        self.trials += 1;
        match verdict {
            Membership::Member => {}
            Membership::Unknown => self.undecided += 1,
            Membership::NonMember => {
                self.failures += 1;
                if self.counterexample.is_none() {
                    self.counterexample = Some(witness());
                }
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Results of the four necessary conditions for `B` to be a hat-section of a
/// von Neumann ball.
#[derive(Debug, Clone, Serialize)]
pub struct VkReport {
    pub in_closed_polydisk: ConditionTally,
    pub absolutely_convex: ConditionTally,
    pub product_closed: ConditionTally,
    pub schwarz_pick_closed: ConditionTally,
}

impl VkReport {
    pub fn passed(&self) -> bool {
        self.in_closed_polydisk.passed()
            && self.absolutely_convex.passed()
            && self.product_closed.passed()
            && self.schwarz_pick_closed.passed()
    }
}

fn random_disk_point(rng: &mut ChaCha8Rng, radius: f64) -> C64 {
    let r = radius * rng.random::<f64>().sqrt();
    C64::from_polar(r, std::f64::consts::TAU * rng.random::<f64>())
}

/// Samples the necessary conditions on member points of a candidate section `B`.
///
/// Condition 4 is exercised through its matrix form: for a member `v` with
/// `|v_i| < 1` and a candidate `w` (another sample, `v` times a sample, or
/// `lambda z phi_b(z)` applied to `v`), whenever `w` is Schwarz-Pick dominated
/// by `v` it must be a member.
pub fn vk_necessary_check(
    section: &BallOracle,
    samples: &[Point],
    cfg: &VkCheckConfig,
) -> Result<VkReport> {
    if samples.is_empty() {
        return Err(BallError::Empty("section samples"));
    }
    for s in samples {
        s.check_dim(section.dim())?;
        if section.membership(s)? == Membership::NonMember {
            return Err(BallError::Precondition("every sample must be a member of B".into()));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = samples.len();

    let mut in_polydisk = ConditionTally::default();
    for s in samples {
        in_polydisk.record(Membership::from_bool(s.max_abs() <= 1.0 + cfg.tol), || vec![s.clone()]);
    }

    let mut convex = ConditionTally::default();
    for _ in 0..cfg.combination_trials {
        let (v, w) = (&samples[rng.random_range(0..n)], &samples[rng.random_range(0..n)]);
        let split = rng.random::<f64>();
        let total = rng.random::<f64>().sqrt();
        let lam = C64::from_polar(split * total, std::f64::consts::TAU * rng.random::<f64>());
        let mu = C64::from_polar((1.0 - split) * total, std::f64::consts::TAU * rng.random::<f64>());
        let z = v.scale(lam).add(&w.scale(mu));
        convex.record(section.membership(&z)?, || vec![v.clone(), w.clone(), z.clone()]);
    }

    let mut products = ConditionTally::default();
    for _ in 0..cfg.product_trials {
        let (v, w) = (&samples[rng.random_range(0..n)], &samples[rng.random_range(0..n)]);
        let z = v.hadamard(w);
        products.record(section.membership(&z)?, || vec![v.clone(), w.clone(), z.clone()]);
    }

    let interior: Vec<&Point> = samples.iter().filter(|s| s.max_abs() < 1.0).collect();
    let mut dominance = ConditionTally::default();
    if !interior.is_empty() {
        for _ in 0..cfg.dominance_trials {
            let v = interior[rng.random_range(0..interior.len())];
            let w = match rng.random_range(0..3) {
                0 => samples[rng.random_range(0..n)].clone(),
                1 => v.hadamard(&samples[rng.random_range(0..n)]),
                _ => {
                    let lam = random_disk_point(&mut rng, 1.0);
                    let b = random_disk_point(&mut rng, 0.95);
                    let coords = v
                        .coords()
                        .iter()
                        .map(|&z| Ok(lam * z * mobius(b, z)?))
                        .collect::<Result<Vec<_>>>()?;
                    Point::new(coords)
                }
            };
            if !schwarz_pick_dominates(v, &w, cfg.tol)? {
                continue;
            }
            dominance.record(section.membership(&w)?, || vec![v.clone(), w.clone()]);
        }
    }

    Ok(VkReport {
        in_closed_polydisk: in_polydisk,
        absolutely_convex: convex,
        product_closed: products,
        schwarz_pick_closed: dominance,
    })
}
