mod common;

use ckballs::generated::example24_oracle;
use ckballs::mobius::*;
use ckballs::oracle::{BallOracle, Family};
use ckballs::{c64, BallError, HermitianMatrix, Membership, Point, C64};
use common::*;
use proptest::prelude::*;

fn two_point(beta: C64) -> BallOracle {
    pick_oracle(PickNodes::new(vec![c64(0.0, 0.0), beta]).unwrap(), 1e-10)
}

/// Disk of radius `r` in `C^1`.
fn disk_oracle(r: f64) -> BallOracle {
    BallOracle::new(1, Family::Custom, 1e-12, move |w| Ok(Membership::from_bool(w[0].norm() <= r + 1e-12)))
}

/// `{ |w_1| + |w_2| <= r }`.
fn l1_oracle(r: f64) -> BallOracle {
    BallOracle::new(2, Family::Custom, 1e-12, move |w| {
        Ok(Membership::from_bool(w[0].norm() + w[1].norm() <= r + 1e-12))
    })
}

#[test]
fn mobius_examples() {
    let a = c64(0.3, -0.2);
    assert!(mobius(a, a).unwrap().norm() < 1e-15);
    let z = c64(-0.4, 0.7);
    assert_eq!(mobius(c64(0.0, 0.0), z).unwrap(), z);
    assert!((mobius(c64(0.5, 0.0), c64(0.0, 0.0)).unwrap() - c64(-0.5, 0.0)).norm() < 1e-15);
    assert!(matches!(mobius(c64(1.0, 0.0), c64(1.0, 0.0)), Err(BallError::Pole)));
}

#[test]
fn pick_matrix_examples() {
    let nodes = PickNodes::new(vec![c64(0.0, 0.0), c64(0.5, 0.0)]).unwrap();
    let m = pick_matrix(&nodes, &Point::from_real(&[0.0, 0.9])).unwrap();
    let want = HermitianMatrix::from_real_rows(&[&[1.0, 1.0], &[1.0, 0.19 / 0.75]]).unwrap();
    assert!(m.sub(&want).unwrap().as_matrix().max_abs() < 1e-14);
    let alpha = Point::new(nodes.alpha().to_vec());
    let j = pick_matrix(&nodes, &alpha).unwrap();
    assert!(j.sub(&HermitianMatrix::ones(2)).unwrap().as_matrix().max_abs() < 1e-14);
    assert_eq!(pick_membership(&nodes, &alpha, 1e-10).unwrap(), Membership::Member);
    assert_eq!(pick_membership(&nodes, &Point::from_real(&[0.0, 0.9]), 1e-10).unwrap(), Membership::NonMember);
    let c = c64(0.3, 0.4);
    let m = pick_matrix(&nodes, &Point::new(vec![c, c])).unwrap();
    assert!((m[(0, 0)].re - (1.0 - c.norm_sqr())).abs() < 1e-14);
    assert!(ckballs::matrix::is_psd(&m, 1e-10).unwrap());
}

#[test]
fn circle_nodes_give_polydisk() {
    let nodes = PickNodes::new(vec![c64(1.0, 0.0), c64(-1.0, 0.0), c64(0.0, 1.0)]).unwrap();
    assert_eq!(nodes.mode(), NodeMode::Circle);
    let o = pick_oracle(nodes.clone(), 1e-10);
    assert!(o.membership(&Point::from_real(&[1.0, -1.0, 0.0])).unwrap().is_member());
    assert!(o.membership(&Point::new(vec![c64(1.0, 0.0), c64(-1.0, 0.0), c64(0.0, 1.0)])).unwrap().is_member());
    assert!(!o.membership(&Point::from_real(&[1.01, 0.0, 0.0])).unwrap().is_member());
    let mixed = PickNodes::new(vec![c64(1.0, 0.0), c64(0.5, 0.0)]);
    assert!(mixed.is_err());
    assert!(PickNodes::new(vec![c64(0.5, 0.0), c64(0.5, 0.0)]).is_err());
}

#[test]
fn ball_norm_examples() {
    let o = two_point(c64(0.5, 0.0));
    assert_eq!(ball_norm(&o, &Point::zero(2)).unwrap(), 0.0);
    let w = Point::from_real(&[0.1, -0.3]);
    let n = ball_norm(&o, &w).unwrap();
    let n3 = ball_norm(&o, &w.scale_real(3.0)).unwrap();
    assert!((n3 - 3.0 * n).abs() < 1e-8 * n3);
    let e24 = example24_oracle(1e-10);
    assert!((ball_norm(&e24, &Point::from_real(&[1.0, -1.0])).unwrap() - 2.0).abs() < 1e-8);
}

#[test]
fn hat_sections() {
    let bidisk = BallOracle::polydisk(2, 1e-12);
    let h = hat_section(&bidisk).unwrap();
    assert!(h.membership(&Point::from_real(&[1.0])).unwrap().is_member());
    assert!(!h.membership(&Point::from_real(&[1.001])).unwrap().is_member());
    let mut g = rng(3);
    let beta = c64(0.3, 0.4);
    let h = hat_section(&two_point(beta)).unwrap();
    for _ in 0..200 {
        let z = disk(&mut g, 1.0);
        if (z.norm() - beta.norm()).abs() < 1e-8 {
            continue;
        }
        assert_eq!(h.membership(&Point::new(vec![z])).unwrap().is_member(), z.norm() <= beta.norm());
    }
    assert!(hat_section(&disk_oracle(1.0)).is_err());
}

#[test]
fn tilde_lift_examples() {
    let r = 0.5;
    let t = tilde_lift(&disk_oracle(r));
    let mut g = rng(9);
    for _ in 0..200 {
        let a = disk(&mut g, 0.95);
        let b = disk(&mut g, 1.0);
        let d = mobius(a, b).unwrap().norm();
        if (d - r).abs() < 1e-9 {
            continue;
        }
        let v = Point::new(vec![a, b, a]);
        // section of disk radius r at (phi_a(b), 0)
        let t2 = tilde_lift(&l1_oracle(r));
        assert_eq!(t2.membership(&v).unwrap().is_member(), d <= r);
    }
    // a = 0 reduces to the section
    let w = Point::from_real(&[0.0, 0.3]);
    assert_eq!(t.membership(&w).unwrap(), Membership::Member);
    let w = Point::from_real(&[0.0, 0.6]);
    assert_eq!(t.membership(&w).unwrap(), Membership::NonMember);
}

#[test]
fn tilde_lift_non_convexity() {
    let t = tilde_lift(&l1_oracle(0.5));
    // phi_{1/4}(-2/7) = -1/2: on the boundary
    let p1 = Point::from_real(&[0.25, -2.0 / 7.0, 0.25]);
    assert_eq!(t.membership(&p1).unwrap(), Membership::Member);
    let mid_real = Point::from_real(&[0.0, -15.0 / 56.0, 11.0 / 24.0]);
    assert_eq!(t.membership(&mid_real).unwrap(), Membership::NonMember);
    // a second endpoint that does lift into the set: phi_{-1/4}(-1/4) = 0, phi_{-1/4}(2/7) = 1/2
    let p2 = Point::from_real(&[-0.25, -0.25, 2.0 / 7.0]);
    assert_eq!(t.membership(&p2).unwrap(), Membership::Member);
    let mid = p1.add(&p2).scale_real(0.5);
    assert_eq!(t.membership(&mid).unwrap(), Membership::NonMember);
}

#[test]
fn schwarz_pick_examples() {
    let v = Point::from_real(&[0.3, -0.6]);
    assert!(schwarz_pick_dominates(&v, &v, 1e-12).unwrap());
    assert!(schwarz_pick_dominates(&v, &Point::zero(2), 1e-12).unwrap());
    assert!(!schwarz_pick_dominates(&Point::from_real(&[0.5]), &Point::from_real(&[0.7]), 1e-12).unwrap());
    assert!(schwarz_pick_dominates(&Point::from_real(&[1.0]), &Point::zero(1), 1e-12).is_err());
}

#[test]
fn vk_check_examples() {
    let mut g = rng(21);
    let samples: Vec<Point> = (0..40).map(|_| disk_point(&mut g, 2, 1.0)).collect();
    let cfg = VkCheckConfig { combination_trials: 200, product_trials: 200, dominance_trials: 200, ..Default::default() };
    assert!(vk_necessary_check(&BallOracle::polydisk(2, 1e-12), &samples, &cfg).unwrap().passed());
    let l1 = l1_oracle(0.5);
    let samples: Vec<Point> = (0..40)
        .map(|_| {
            let p = disk_point(&mut g, 2, 1.0);
            let s = p[0].norm() + p[1].norm();
            p.scale_real(0.5 * g_unit(&mut g) / s.max(1e-12))
        })
        .collect();
    assert!(vk_necessary_check(&l1, &samples, &cfg).unwrap().passed());
}

fn g_unit(g: &mut rand_chacha::ChaCha8Rng) -> f64 {
    use rand::Rng;
    g.random::<f64>()
}

#[test]
fn vk_check_catches_hull_of_two_points() {
    // absolutely convex hull of e and v = (0.9, 0.9i): w = a e + b v with |a| + |b| <= 1
    let v = Point::new(vec![c64(0.9, 0.0), c64(0.0, 0.9)]);
    let hull = BallOracle::new(2, Family::Custom, 1e-12, |w| {
        // solve a + 0.9 b = w1, a + 0.9i b = w2
        let b = (w[0] - w[1]) / (c64(0.9, 0.0) - c64(0.0, 0.9));
        let a = w[0] - b * 0.9;
        Ok(Membership::from_bool(a.norm() + b.norm() <= 1.0 + 1e-12))
    });
    assert!(hull.membership(&v).unwrap().is_member());
    let vv = v.hadamard(&v);
    assert!(!hull.membership(&vv).unwrap().is_member());
    assert!(schwarz_pick_dominates(&v, &vv, 1e-12).unwrap());
    let report = vk_necessary_check(&hull, &[v, Point::unit(2)], &VkCheckConfig::default()).unwrap();
    assert!(!report.passed());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn mobius_inverse_is_mobius_of_negation(ar in 0.0f64..0.95, at in 0.0f64..6.3, zr in 0.0f64..0.99, zt in 0.0f64..6.3) {
        let a = C64::from_polar(ar, at);
        let z = C64::from_polar(zr, zt);
        let w = mobius(a, z).unwrap();
        prop_assert!(w.norm() < 1.0);
        prop_assert!((mobius(-a, w).unwrap() - z).norm() < 1e-10);
        prop_assert!((pseudo_hyperbolic(z, a) - w.norm()).abs() < 1e-12);
    }

    #[test]
    fn two_point_pick_matches_pseudo_hyperbolic(br in 0.05f64..0.95, bt in 0.0f64..6.3, seed in 0u64..10_000) {
        let mut g = rng(seed);
        let beta = C64::from_polar(br, bt);
        let w = disk_point(&mut g, 2, 1.0);
        let rho = pseudo_hyperbolic(w[0], w[1]);
        prop_assume!((rho - br).abs() > 1e-9);
        let m = two_point(beta).membership(&w).unwrap();
        prop_assert_eq!(m.is_member(), rho <= br);
    }

    #[test]
    fn pick_body_closed_under_products(seed in 0u64..10_000) {
        let mut g = rng(seed);
        let nodes = PickNodes::new(vec![c64(0.0, 0.0), c64(0.4, 0.2), c64(-0.5, 0.1)]).unwrap();
        let o = pick_oracle(nodes.clone(), 1e-9);
        // members: values of random Blaschke products of degree 1 times a disk scalar
        let member = |g: &mut rand_chacha::ChaCha8Rng| {
            let a = disk(g, 0.9);
            let s = disk(g, 1.0);
            Point::new(nodes.alpha().iter().map(|&z| s * mobius(a, z).unwrap()).collect())
        };
        let (x, y) = (member(&mut g), member(&mut g));
        prop_assert!(o.membership(&x).unwrap().is_member());
        prop_assert!(o.membership(&x.hadamard(&y)).unwrap().is_member());
        prop_assert!(o.membership(&x.add(&y).scale_real(0.5)).unwrap().is_member());
    }
}
