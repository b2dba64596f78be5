mod common;

use ckballs::generated::*;
use ckballs::mobius::{hat_section, pick_membership, PickNodes};
use ckballs::{c64, BallError, Membership, Point, C64};
use common::*;
use proptest::prelude::*;

/// Closed-form Fermat point cost of the triangle `z1, z2, 0`: a vertex with
/// angle at least 120 degrees is the minimiser; otherwise
/// `sqrt((a^2 + b^2 + c^2) / 2 + 2 sqrt(3) area)`.
fn fermat_cost(z: &Point) -> f64 {
    let v = [z[0], z[1], C64::default()];
    let side = |i: usize, j: usize| (v[i] - v[j]).norm();
    let (a, b, c) = (side(1, 2), side(0, 2), side(0, 1));
    let longest = a.max(b).max(c);
    if longest == 0.0 {
        return 0.0;
    }
    if a.min(b).min(c) <= 1e-14 * longest {
        return longest;
    }
    // angle at each vertex opposite the named side
    let cos_at = |opp: f64, s1: f64, s2: f64| (s1 * s1 + s2 * s2 - opp * opp) / (2.0 * s1 * s2);
    let wide = -0.5;
    if cos_at(a, b, c) <= wide {
        return b + c;
    }
    if cos_at(b, a, c) <= wide {
        return a + c;
    }
    if cos_at(c, a, b) <= wide {
        return a + b;
    }
    let area = 0.5 * ((v[1] - v[0]).conj() * (v[2] - v[0])).im.abs();
    ((a * a + b * b + c * c) / 2.0 + 2.0 * 3f64.sqrt() * area).sqrt()
}

#[test]
fn example24_values() {
    assert_eq!(example24_norm(&Point::zero(2)).unwrap(), 0.0);
    assert!((example24_norm(&Point::unit(2)).unwrap() - 1.0).abs() < 1e-12);
    assert!((example24_norm(&Point::from_real(&[1.0, -1.0])).unwrap() - 2.0).abs() < 1e-9);
    assert!((example24_norm(&Point::from_real(&[1.0, 0.0])).unwrap() - 1.0).abs() < 1e-12);
    assert!(example24_norm(&Point::zero(3)).is_err());
    let o = example24_oracle(1e-10);
    let h = hat_section(&o).unwrap();
    let mut g = rng(24);
    for _ in 0..300 {
        let z = disk(&mut g, 1.5);
        if (z.norm() - 1.0).abs() < 1e-8 {
            continue;
        }
        assert_eq!(h.membership(&Point::new(vec![z])).unwrap().is_member(), z.norm() <= 1.0);
    }
}

#[test]
fn bball_examples() {
    let e = generated_ball_sample(&[Point::unit(3)], &BballConfig::default()).unwrap();
    for p in &e.points {
        assert!((p[0] - p[1]).norm() < 1e-12 && (p[1] - p[2]).norm() < 1e-12 && p[0].norm() <= 1.0 + 1e-12);
    }
    let cloud = generated_ball_sample(&[Point::basis(2, 0), Point::basis(2, 1)], &BballConfig::default()).unwrap();
    assert!(cloud.points.len() > 10);
    for p in &cloud.points {
        assert!(example24_norm(p).unwrap() <= 1.0 + 1e-6, "{p:?}");
    }
    let c = c64(0.4, -0.3);
    let flat = generated_ball_sample(&[Point::new(vec![c, c])], &BballConfig::default()).unwrap();
    for p in &flat.points {
        assert!((p[0] - p[1]).norm() < 1e-12);
    }
    assert!(matches!(generated_ball_sample(&[], &BballConfig::default()), Err(BallError::Empty(_))));
    assert!(generated_ball_sample(&[Point::from_real(&[1.5, 0.0])], &BballConfig::default()).is_err());
}

#[test]
fn bball_is_seed_deterministic() {
    let d = [Point::from_real(&[0.5, -0.2, 0.1])];
    let cfg = BballConfig { seed: 4, ..BballConfig::default() };
    let a = generated_ball_sample(&d, &cfg).unwrap().to_csv().unwrap();
    let b = generated_ball_sample(&d, &cfg).unwrap().to_csv().unwrap();
    assert_eq!(a, b);
    let c = generated_ball_sample(&d, &BballConfig { seed: 5, ..cfg }).unwrap().to_csv().unwrap();
    assert_ne!(a, c);
}

#[test]
fn hc_examples() {
    let alpha = vec![c64(0.1, 0.2), c64(-0.5, 0.3), c64(0.6, -0.1)];
    let d = [Point::new(alpha.clone())];
    let cloud = hc_hull_sample(&d, &HcConfig { n_polys: 48, ..HcConfig::default() }).unwrap();
    assert!(cloud.points.iter().any(|p| p.dist_max(&d[0]) < 1e-12), "coordinate polynomial image missing");
    assert!(cloud.points.iter().any(|p| p.dist_max(&Point::unit(3)) < 1e-12));
    let nodes = PickNodes::new(alpha).unwrap();
    for p in &cloud.points {
        assert_eq!(pick_membership(&nodes, p, 1e-9).unwrap(), Membership::Member, "{p:?}");
    }
}

#[test]
fn hull_membership_examples() {
    let d = [Point::from_real(&[0.5, -0.5]), Point::new(vec![c64(0.0, 0.7), c64(0.3, 0.0)])];
    let cloud = generated_ball_sample(&d, &BballConfig { rounds: 2, ..BballConfig::default() }).unwrap();
    let a = &cloud.points[3];
    let b = &cloud.points[cloud.points.len() - 1];
    assert_eq!(hull_membership(&cloud, a, 1e-9).unwrap(), Membership::Member);
    assert_eq!(hull_membership(&cloud, &a.add(b).scale_real(0.5), 1e-9).unwrap(), Membership::Member);
    assert_eq!(hull_membership(&cloud, &Point::unit(2).scale_real(2.0), 1e-9).unwrap(), Membership::Unknown);
}

#[test]
fn csv_round_trip_is_exact() {
    let d = [Point::new(vec![c64(0.1, 1.0 / 3.0), c64(-2.0 / 7.0, 0.0)])];
    let cloud = generated_ball_sample(&d, &BballConfig::default()).unwrap();
    let back = SampleCloud::from_csv(&cloud.to_csv().unwrap()).unwrap();
    assert_eq!(back, cloud.points);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn example24_matches_fermat_formula(a in 0.0f64..1.5, ta in 0.0f64..6.3, b in 0.0f64..1.5, tb in 0.0f64..6.3) {
        let z = Point::new(vec![C64::from_polar(a, ta), C64::from_polar(b, tb)]);
        let n = example24_norm(&z).unwrap();
        prop_assert!((n - fermat_cost(&z)).abs() <= 1e-10 * (1.0 + n));
    }

    #[test]
    fn example24_is_a_submultiplicative_norm(seed in 0u64..100_000) {
        let mut g = rng(seed);
        let x = disk_point(&mut g, 2, 1.5);
        let y = disk_point(&mut g, 2, 1.5);
        let (nx, ny) = (example24_norm(&x).unwrap(), example24_norm(&y).unwrap());
        prop_assert!(example24_norm(&x.hadamard(&y)).unwrap() <= nx * ny * (1.0 + 1e-9) + 1e-12);
        prop_assert!(example24_norm(&x.add(&y)).unwrap() <= (nx + ny) * (1.0 + 1e-9) + 1e-12);
        prop_assert!(nx >= x.max_abs() * (1.0 - 1e-9));
    }
}
