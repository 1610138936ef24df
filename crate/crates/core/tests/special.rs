use std::f64::consts::PI;

use lattc::lattice::Lattice;
use lattc::special::{epstein_zeta, epstein_zeta_direct, lattice_energy, theta, theta_with_switch, Decay, ThetaSeries};
use proptest::prelude::*;

const GAMMA_THREE_QUARTERS: f64 = 1.225_416_702_465_177_6;
const ZETA_5: f64 = 1.036_927_755_143_369_9;
const CATALAN: f64 = 0.915_965_594_177_219_0;

fn basis_2d() -> impl Strategy<Value = Lattice> {
    (0.6f64..1.6, -0.5f64..0.5, -0.6f64..0.6, 0.6f64..1.6).prop_filter_map("well conditioned", |(a, b, c, d)| {
        let l = Lattice::from_rows(&[vec![a, b], vec![c, d]]).ok()?;
        (l.covolume() > 0.3 && l.condition_number() < 8.0).then_some(l)
    })
}

fn poisson_rhs(l: &Lattice, alpha: f64) -> f64 {
    let d = l.dim() as f64;
    theta(&l.dual(), 1.0 / alpha, 1e-14).unwrap().value / (l.covolume() * alpha.powf(d / 2.0))
}

#[test]
fn theta_of_integers_closed_form() {
    // theta_Z(1) = pi^(1/4) / Gamma(3/4)
    let v = theta(&Lattice::integer(1), 1.0, 1e-13).unwrap().value;
    assert!((v - PI.powf(0.25) / GAMMA_THREE_QUARTERS).abs() < 1e-12);
    assert!((v - 1.086_434_811_2).abs() < 1e-9);
}

#[test]
fn theta_square_below_triangular_comparison() {
    let sq = theta(&Lattice::integer(2), 1.0, 1e-12).unwrap().value;
    let tri = theta(&Lattice::triangular(1.0).unwrap(), 1.0, 1e-12).unwrap().value;
    assert!((sq - 1.180_340_599_0).abs() < 1e-9);
    assert!(tri < sq);
}

#[test]
fn theta_switch_routes_agree() {
    let l = Lattice::from_rows(&[vec![1.0, 0.0], vec![0.45, 1.1]]).unwrap();
    for alpha in [0.02, 0.04, 0.1] {
        let direct = theta_with_switch(&l, alpha, 1e-10, 0.0).unwrap().value;
        let dual = theta_with_switch(&l, alpha, 1e-10, 1.0).unwrap().value;
        assert!(((direct - dual) / direct).abs() < 1e-10, "alpha={alpha}");
    }
}

#[test]
fn theta_series_matches_theta() {
    let l = Lattice::triangular(1.0).unwrap();
    let series = ThetaSeries::new(&l, 0.5, 1e-13).unwrap();
    for alpha in [0.5, 1.0, 3.0] {
        let a = 1.0 + series.minus_one(alpha);
        let b = theta(&l, alpha, 1e-13).unwrap().value;
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn e8_is_self_dual_under_poisson() {
    let e8 = Lattice::e8(1.0).unwrap();
    for alpha in [0.5, 2.0] {
        let lhs = theta(&e8, alpha, 1e-12).unwrap().value;
        let rhs = theta(&e8, 1.0 / alpha, 1e-12).unwrap().value * alpha.powf(-4.0);
        assert!(((lhs - rhs) / lhs).abs() < 1e-8);
    }
}

#[test]
fn zeta_of_integers() {
    let z = epstein_zeta(&Lattice::integer(1), 2.0, 1e-12).unwrap();
    assert!((z.value - PI * PI / 3.0).abs() < 1e-10);
    let z4 = epstein_zeta(&Lattice::integer(1), 4.0, 1e-12).unwrap();
    assert!((z4.value - PI.powi(4) / 45.0).abs() < 1e-10);
}

#[test]
fn zeta_of_square_lattice_brute_force() {
    // box sum to radius R plus the continuum estimate pi / R^2 of the rest
    let r = 400i64;
    let mut total = 0.0;
    for a in -r..=r {
        for b in -r..=r {
            let n = (a * a + b * b) as f64;
            if n > 0.0 && n <= (r * r) as f64 {
                total += 1.0 / (n * n);
            }
        }
    }
    total += PI / (r * r) as f64;
    let z = epstein_zeta(&Lattice::integer(2), 4.0, 1e-12).unwrap().value;
    assert!((z - total).abs() < 1e-6, "{z} vs {total}");
    // zeta_{Z^2}(4) = 4 zeta(2) beta(2)
    assert!((z - 4.0 * PI * PI / 6.0 * CATALAN).abs() < 1e-10);
    assert!((z - 6.026_812_0).abs() < 1e-6);
}

#[test]
fn zeta_of_e8_from_its_theta_series() {
    // theta_E8 = E_4 gives zeta_E8(s) = 240 * 2^(-s/2) zeta(s/2) zeta(s/2 - 3)
    let z = epstein_zeta(&Lattice::e8(1.0).unwrap(), 10.0, 1e-12).unwrap().value;
    let expected = 240.0 * 2f64.powf(-5.0) * ZETA_5 * PI * PI / 6.0;
    assert!(((z - expected) / expected).abs() < 1e-11);
}

#[test]
fn zeta_routes_agree() {
    let l = Lattice::from_rows(&[vec![1.0, 0.0], vec![0.3, 0.9]]).unwrap();
    let fast = epstein_zeta(&l, 6.0, 1e-10).unwrap();
    let slow = epstein_zeta_direct(&l, 6.0, 1e-6).unwrap();
    assert!((fast.value - slow.value).abs() <= fast.tail_bound + slow.tail_bound + 1e-12);
}

#[test]
fn generic_energy_reproduces_theta() {
    let l = Lattice::triangular(1.0).unwrap();
    let e = lattice_energy(&l, |r2| (-PI * r2).exp(), Decay::Gaussian(PI), 1e-12).unwrap();
    let t = theta(&l, 1.0, 1e-13).unwrap().value;
    assert!((1.0 + e.value - t).abs() < 1e-11);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn poisson_identity(l in basis_2d(), alpha in prop::sample::select(vec![0.3, 1.0, 3.0])) {
        let lhs = theta(&l, alpha, 1e-14).unwrap().value;
        prop_assert!(((lhs - poisson_rhs(&l, alpha)) / lhs).abs() < 1e-8);
    }

    #[test]
    fn theta_decreases_in_alpha(l in basis_2d(), a in 0.2f64..3.0) {
        let lo = theta(&l, a, 1e-13).unwrap().value;
        let hi = theta(&l, a * 1.1, 1e-13).unwrap().value;
        prop_assert!(hi < lo);
    }

    #[test]
    fn theta_of_products(alpha in 0.1f64..4.0) {
        let one = theta(&Lattice::integer(1), alpha, 1e-14).unwrap().value;
        for d in 2..=3 {
            let v = theta(&Lattice::integer(d), alpha, 1e-14).unwrap().value;
            prop_assert!((v - one.powi(d as i32)).abs() < 1e-11 * v);
        }
    }

    #[test]
    fn zeta_matches_naive_loop(l in basis_2d()) {
        // naive sum of |p|^-8 over a coordinate box plus its dominated remainder
        let mut total = 0.0;
        for a in -60i64..=60 {
            for b in -60i64..=60 {
                let n = l.norm_sq(&[a, b]);
                if n > 0.0 {
                    total += n.powi(-4);
                }
            }
        }
        let z = epstein_zeta(&l, 8.0, 1e-12).unwrap().value;
        prop_assert!((z - total).abs() < 1e-7 * z, "{} vs {}", z, total);
    }
}
