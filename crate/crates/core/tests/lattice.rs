use std::collections::HashMap;

use lattc::lattice::Lattice;
use lattc::shells::{coordinate_gcd, enumerate_shells, enumerate_shells_with, primitive_representatives, EnumerationOptions};
use nalgebra::DMatrix;
use proptest::prelude::*;

/// Norms of all nonzero points with |coords| <= box_n, by plain looping.
fn box_norms(l: &Lattice, box_n: i64, radius: f64) -> Vec<f64> {
    let d = l.dim();
    let mut out = Vec::new();
    let mut z = vec![-box_n; d];
    loop {
        if z.iter().any(|&c| c != 0) {
            let n = l.norm_sq(&z);
            if n <= radius * radius {
                out.push(n);
            }
        }
        let mut k = 0;
        loop {
            if k == d {
                out.sort_by(f64::total_cmp);
                return out;
            }
            z[k] += 1;
            if z[k] > box_n {
                z[k] = -box_n;
                k += 1;
            } else {
                break;
            }
        }
    }
}

fn basis_2d() -> impl Strategy<Value = Lattice> {
    (0.6f64..1.6, -0.5f64..0.5, -0.6f64..0.6, 0.6f64..1.6)
        .prop_filter_map("well conditioned", |(a, b, c, d)| {
            let l = Lattice::from_rows(&[vec![a, b], vec![c, d]]).ok()?;
            (l.covolume() > 0.3 && l.condition_number() < 8.0).then_some(l)
        })
}

fn unimodular_2d() -> impl Strategy<Value = DMatrix<f64>> {
    (-2i64..=2, -2i64..=2).prop_map(|(a, b)| {
        // [[1, a], [0, 1]] * [[1, 0], [b, 1]]
        DMatrix::from_row_slice(2, 2, &[(1 + a * b) as f64, a as f64, b as f64, 1.0])
    })
}

fn rotation_2d(phi: f64) -> DMatrix<f64> {
    let (s, c) = phi.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

#[test]
fn sheared_file_has_unit_covolume() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/sheared.json");
    let l = Lattice::read_json(path).unwrap();
    assert!((l.covolume() - 1.0).abs() < 1e-12);
    assert_eq!(l.dim(), 2);
}

#[test]
fn named_lattices_rescale() {
    let t = Lattice::triangular(2.0).unwrap();
    assert!((t.covolume() - 2.0).abs() < 1e-12);
    let z3 = Lattice::integer(3).rescale_to_covolume(5.0).unwrap();
    assert!((z3.covolume() - 5.0).abs() < 1e-12);
}

#[test]
fn e8_second_shell() {
    let e8 = Lattice::e8(1.0).unwrap();
    let s = enumerate_shells(&e8, 2.0001).unwrap();
    assert_eq!(s.shells.len(), 2);
    assert_eq!(s.shells[0].multiplicity, 240);
    assert_eq!(s.shells[1].multiplicity, 2160);
}

#[test]
fn kept_vectors_match_multiplicities() {
    let l = Lattice::from_rows(&[vec![1.0, 0.0], vec![0.3, 1.2]]).unwrap();
    let opts = EnumerationOptions {
        keep_vectors: true,
        ..EnumerationOptions::default()
    };
    let s = enumerate_shells_with(&l, 4.0, opts).unwrap();
    let vectors = s.vectors.as_ref().unwrap();
    for (shell, vs) in s.shells.iter().zip(vectors) {
        assert_eq!(shell.multiplicity, vs.len());
        for v in vs {
            assert!((l.norm_sq(v) - shell.norm_sq).abs() < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn dual_of_dual_is_the_lattice(l in basis_2d()) {
        let back = l.dual().dual();
        prop_assert!((back.basis() - l.basis()).abs().max() < 1e-12);
        prop_assert!((l.covolume() * l.dual().covolume() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shells_match_naive_enumeration(l in basis_2d(), r in 1.0f64..4.0) {
        let series = enumerate_shells(&l, r).unwrap();
        let mut fast: Vec<f64> = series
            .shells
            .iter()
            .flat_map(|s| std::iter::repeat_n(s.norm_sq, s.multiplicity))
            .collect();
        fast.sort_by(f64::total_cmp);
        // coefficients of points in the ball are bounded by r / (smallest singular value)
        let naive = box_norms(&l, 20, r);
        prop_assert_eq!(fast.len(), naive.len());
        for (a, b) in fast.iter().zip(&naive) {
            prop_assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn shells_ignore_basis_change_and_rotation(l in basis_2d(), u in unimodular_2d(), phi in 0.0f64..6.3) {
        let moved = l.transformed(&u, &rotation_2d(phi)).unwrap();
        let a = enumerate_shells(&l, 3.0).unwrap();
        let b = enumerate_shells(&moved, 3.0).unwrap();
        prop_assert_eq!(a.shells.len(), b.shells.len());
        for (x, y) in a.shells.iter().zip(&b.shells) {
            prop_assert_eq!(x.multiplicity, y.multiplicity);
            prop_assert!((x.norm_sq - y.norm_sq).abs() < 1e-9);
        }
    }

    #[test]
    fn nonzero_vectors_factor_through_primitives(l in basis_2d()) {
        // every nonzero u with |u| <= R is n * (+-w) for exactly one primitive representative w
        let radius = 3.5;
        let prims = primitive_representatives(&l, radius).unwrap();
        let opts = EnumerationOptions { keep_vectors: true, ..EnumerationOptions::default() };
        let all = enumerate_shells_with(&l, radius, opts).unwrap();
        let mut hits: HashMap<Vec<i64>, usize> = HashMap::new();
        for w in &prims {
            prop_assert_eq!(coordinate_gcd(&w.coords), 1);
            for sign in [1i64, -1] {
                for n in 1i64.. {
                    let u: Vec<i64> = w.coords.iter().map(|c| sign * n * c).collect();
                    if l.norm_sq(&u) > radius * radius * (1.0 + 1e-10) {
                        break;
                    }
                    *hits.entry(u).or_default() += 1;
                }
            }
        }
        let vectors: Vec<&Vec<i64>> = all.vectors.as_ref().unwrap().iter().flatten().collect();
        prop_assert_eq!(hits.len(), vectors.len());
        for v in vectors {
            prop_assert_eq!(hits.get(v).copied(), Some(1));
        }
    }

    #[test]
    fn json_round_trip(l in basis_2d()) {
        let text = l.to_json().unwrap();
        let back = Lattice::from_json(&text).unwrap();
        prop_assert_eq!(back.basis(), l.basis());
        prop_assert_eq!(back.to_json().unwrap(), text);
    }
}
