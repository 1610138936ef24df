use std::f64::consts::{E, PI};

use lattc::lattice::Lattice;
use lattc::llog::{
    exp_kernel, exp_sequence, log_kernel, log_lattice, log_sequence, pair_energy, LogArgument, PairMode, PairPotential,
};
use lattc::sequence::PeriodicSequence;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn arg(x: f64) -> LogArgument {
    LogArgument::new(x).unwrap()
}

fn triangular() -> Lattice {
    Lattice::triangular(1.0).unwrap()
}

/// -(1/2) sum over a coordinate box of (1-x)^|p| / |p|.
fn brute_log(l: &Lattice, x: f64, box_n: i64) -> f64 {
    let mut total = 0.0;
    for a in -box_n..=box_n {
        for b in -box_n..=box_n {
            let n = l.norm_sq(&[a, b]).sqrt();
            if n > 0.0 {
                total += (1.0 - x).powf(n) / n;
            }
        }
    }
    -0.5 * total
}

#[test]
fn logarithm_of_integers() {
    for k in 1..=19 {
        let x = 0.05 * k as f64;
        let v = log_lattice(&Lattice::integer(1), arg(x), 1e-12).unwrap().value;
        assert!((v - x.ln()).abs() < 1e-10, "x={x}");
    }
}

#[test]
fn triangular_beats_square() {
    let sq = log_lattice(&Lattice::integer(2), arg(0.5), 1e-12).unwrap().value;
    let tri = log_lattice(&triangular(), arg(0.5), 1e-12).unwrap().value;
    assert!((sq - brute_log(&Lattice::integer(2), 0.5, 80)).abs() < 1e-10);
    assert!((tri - brute_log(&triangular(), 0.5, 80)).abs() < 1e-10);
    assert!(tri > sq);
}

#[test]
fn logarithm_increases_in_x() {
    for l in [Lattice::integer(1), Lattice::integer(2), triangular(), Lattice::integer(3)] {
        let mut prev = f64::NEG_INFINITY;
        for k in 3..=9 {
            let v = log_lattice(&l, arg(0.1 * k as f64), 1e-9).unwrap().value;
            assert!(v < 0.0);
            assert!(v > prev);
            prev = v;
        }
    }
}

#[test]
fn literal_sequence_log_is_half_the_natural_log() {
    // the double sum gives half of ln x, not ln x
    let eq = log_sequence(&PeriodicSequence::equidistant(1, 0.0), arg(0.25), 1e-13).unwrap().value;
    assert!((eq - 0.5 * 0.25f64.ln()).abs() < 1e-10);
    let shifted = log_sequence(&PeriodicSequence::equidistant(1, 0.3), arg(0.25), 1e-13).unwrap().value;
    assert!((shifted - eq).abs() < 1e-13);
    for x in [0.1, 0.5, 0.9] {
        let s = log_sequence(&PeriodicSequence::equidistant(3, 0.0), arg(x), 1e-13).unwrap().value;
        let l = log_lattice(&Lattice::integer(1), arg(x), 1e-13).unwrap().value;
        assert!((s - 0.5 * l).abs() < 1e-10);
    }
}

#[test]
fn perturbed_pair_is_worse() {
    let s = PeriodicSequence::new(vec![0.0, 0.8]).unwrap();
    let v = log_sequence(&s, arg(0.5), 1e-13).unwrap().value;
    let eq = log_sequence(&PeriodicSequence::equidistant(2, 0.0), arg(0.5), 1e-13).unwrap().value;
    // brute force: -(1/8) sum_i sum_{|j - i| <= 400} phi(|t_j - t_i|)
    let mut brute = 0.0;
    for i in 0..2i64 {
        for j in -400..=401i64 {
            if j != i {
                brute += log_kernel(arg(0.5), (s.at(j) - s.at(i)).abs());
            }
        }
    }
    assert!((v + brute / 8.0).abs() < 1e-12);
    assert!(v < eq);
}

#[test]
fn sequence_exponential() {
    let e = exp_sequence(&PeriodicSequence::equidistant(1, 0.0), 1.0, 1e-14).unwrap().value;
    assert!((e - (E - 1.0)).abs() < 1e-12);
    let shifted = exp_sequence(&PeriodicSequence::equidistant(1, 0.7), 1.0, 1e-14).unwrap().value;
    assert!((shifted - e).abs() < 1e-14);
    let v = exp_sequence(&PeriodicSequence::new(vec![0.0, 0.9]).unwrap(), E, 1e-12).unwrap();
    assert!(v.value.is_finite() && v.value > 0.0);
}

#[test]
fn log_kernel_is_convex() {
    let h = 1e-4;
    for x in [0.1, 0.5, 0.9] {
        for k in 1..=100 {
            let r = 0.1 * k as f64;
            let a = arg(x);
            let second = (log_kernel(a, r - h) - 2.0 * log_kernel(a, r) + log_kernel(a, r + h)) / (h * h);
            assert!(second > 0.0, "x={x} r={r}");
        }
    }
}

#[test]
fn exp_kernel_is_not_monotone_at_e() {
    let (a, b, c) = (exp_kernel(E, 1.0), exp_kernel(E, 2.0), exp_kernel(E, 4.0));
    assert!((a - 2.718_281_8).abs() < 1e-6);
    assert!((b - 3.694_528_0).abs() < 1e-6);
    assert!((c - 2.274_922_9).abs() < 1e-6);
    assert!(a < b && b > c);
}

#[test]
fn pair_energy_forms_agree_on_integers() {
    let z = Lattice::integer(1);
    let f = PairPotential::affine(PI, PI).unwrap();
    let d = pair_energy(&z, &z, &f, PairMode::Direct, 1e-11).unwrap();
    let s = pair_energy(&z, &z, &f, PairMode::Swapped, 1e-11).unwrap();
    assert!((d.value - s.value).abs() <= 2.0 * (d.tail_bound + s.tail_bound) + 1e-14);
    // on Z the inner logarithm is the natural one
    let mut oracle = 0.0;
    for q in -50i64..=50 {
        oracle += (1.0 - (-PI * (1.0 + (q * q) as f64)).exp()).ln();
    }
    assert!((s.value - oracle).abs() < 1e-10);
}

#[test]
fn pair_energy_on_square_lattices() {
    let z2 = Lattice::integer(2);
    let f = PairPotential::affine(PI, PI).unwrap();
    let e = pair_energy(&z2, &z2, &f, PairMode::Swapped, 1e-11).unwrap().value;
    // brute force: -(1/2) sum_{p != 0, |p| <= 10} |p|^-1 sum_{|q| <= 6} exp(-|p| pi (1 + |q|^2))
    let mut brute = 0.0;
    for a in -10i64..=10 {
        for b in -10i64..=10 {
            let p = ((a * a + b * b) as f64).sqrt();
            if p == 0.0 || p > 10.0 {
                continue;
            }
            for c in -6i64..=6 {
                for d in -6i64..=6 {
                    let q2 = (c * c + d * d) as f64;
                    if q2 <= 36.0 {
                        brute += (-p * PI * (1.0 + q2)).exp() / p;
                    }
                }
            }
        }
    }
    brute *= -0.5;
    assert!(e < 0.0);
    assert!((e - brute).abs() < 1e-9, "{e} vs {brute}");
    let tri = pair_energy(&z2, &triangular(), &f, PairMode::Swapped, 1e-11).unwrap().value;
    assert!(tri > e);
}

fn basis_2d() -> impl Strategy<Value = Lattice> {
    (0.7f64..1.4, -0.4f64..0.4, -0.5f64..0.5, 0.7f64..1.4).prop_filter_map("well conditioned", |(a, b, c, d)| {
        let l = Lattice::from_rows(&[vec![a, b], vec![c, d]]).ok()?;
        (l.covolume() > 0.5 && l.condition_number() < 5.0).then_some(l)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn pair_energy_forms_agree(
        l in basis_2d(),
        lam in basis_2d(),
        c0 in 1.0f64..4.0,
        c1 in 1.0f64..4.0,
    ) {
        let f = PairPotential::affine(c0, c1).unwrap();
        let d = pair_energy(&l, &lam, &f, PairMode::Direct, 1e-10).unwrap();
        let s = pair_energy(&l, &lam, &f, PairMode::Swapped, 1e-10).unwrap();
        prop_assert!((d.value - s.value).abs() <= d.tail_bound + s.tail_bound + 1e-13);
    }

    #[test]
    fn logarithm_ignores_basis_change(l in basis_2d(), a in -2i64..=2, phi in 0.0f64..6.3, x in 0.1f64..0.9) {
        let u = DMatrix::from_row_slice(2, 2, &[1.0, a as f64, 0.0, 1.0]);
        let (s, c) = phi.sin_cos();
        let rot = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let moved = l.transformed(&u, &rot).unwrap();
        let v1 = log_lattice(&l, arg(x), 1e-12).unwrap().value;
        let v2 = log_lattice(&moved, arg(x), 1e-12).unwrap().value;
        prop_assert!((v1 - v2).abs() < 1e-10);
    }

    #[test]
    fn logarithm_is_negative(l in basis_2d(), x in 0.01f64..0.99) {
        prop_assert!(log_lattice(&l, arg(x), 1e-10).unwrap().value < 0.0);
    }
}
