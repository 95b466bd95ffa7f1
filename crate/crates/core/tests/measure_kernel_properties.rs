use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use siolab::kernels::{make_ahlfors_beurling, make_cauchy, make_hilbert, make_riesz_generalized, order_check, KernelSpec};
use siolab::measure::generators::{interleaved_grids, lebesgue_grid, random_atoms};
use siolab::measure::{common_atoms, decompose, DiscreteMeasure};

fn mixed(seed: u64, n: usize) -> DiscreteMeasure<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64 / n as f64, rng.gen_range(0.0..1.0)]).collect();
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
    let atomic: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
    DiscreteMeasure::new(2, pts, w, atomic, None).unwrap()
}

proptest! {
    #[test]
    fn decompose_is_idempotent(seed in 0u64..1000, n in 1usize..30) {
        let mu = mixed(seed, n);
        let d = decompose(&mu);
        let again = decompose(&d.continuous_part);
        prop_assert_eq!(&again.continuous_part, &d.continuous_part);
        prop_assert!(again.atomic_part.is_empty());
        let again = decompose(&d.atomic_part);
        prop_assert_eq!(&again.atomic_part, &d.atomic_part);
        prop_assert!(again.continuous_part.is_empty());
    }

    #[test]
    fn common_atoms_symmetric(a in 0u64..1000, b in 0u64..1000, n in 1usize..20) {
        let mu = mixed(a, n);
        let nu = mixed(b, n);
        prop_assert_eq!(common_atoms(&mu, &nu), common_atoms(&nu, &mu));
    }

    #[test]
    fn antisymmetric_catalog(s in proptest::collection::vec(-3.0f64..3.0, 3), t in proptest::collection::vec(-3.0f64..3.0, 3)) {
        prop_assume!(s.iter().zip(&t).map(|(a, b)| (a - b).powi(2)).sum::<f64>() > 1e-6);
        let cases: Vec<(KernelSpec<f64>, usize)> = vec![
            (make_hilbert(), 1),
            (make_cauchy(), 2),
            (make_riesz_generalized(0.5, 3).unwrap(), 3),
            (make_riesz_generalized(1.0, 2).unwrap(), 2),
        ];
        for (k, n) in cases {
            let a = k.evaluate(&s[..n], &t[..n]).unwrap();
            let b = k.evaluate(&t[..n], &s[..n]).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x + y).abs() <= 1e-12 * x.abs().max(1.0));
            }
        }
        let ab = make_ahlfors_beurling::<f64>();
        let a = ab.evaluate(&s[..2], &t[..2]).unwrap();
        let b = ab.evaluate(&t[..2], &s[..2]).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn evaluator_matches_profile(s in proptest::collection::vec(-3.0f64..3.0, 3), t in proptest::collection::vec(-3.0f64..3.0, 3)) {
        prop_assume!(s.iter().zip(&t).map(|(a, b)| (a - b).powi(2)).sum::<f64>() > 1e-6);
        let cases: Vec<(KernelSpec<f64>, usize)> = vec![
            (make_hilbert(), 1),
            (make_cauchy(), 2),
            (make_ahlfors_beurling(), 2),
            (make_riesz_generalized(0.7, 3).unwrap(), 3),
        ];
        for (k, n) in cases {
            let v = k.evaluate(&s[..n], &t[..n]).unwrap();
            let x: Vec<f64> = t[..n].iter().zip(&s[..n]).map(|(a, b)| a - b).collect();
            let mut w = vec![0.0; v.len()];
            k.profile.as_ref().unwrap().eval(&x, &mut w);
            for (a, b) in v.iter().zip(&w) {
                prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300), "{}: {a} vs {b}", k.name);
            }
        }
    }
}

#[test]
fn order_sup_is_stable_down_to_1e_8() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cases: Vec<(KernelSpec<f64>, usize, f64)> = vec![
        (make_hilbert(), 1, 1.0 / std::f64::consts::PI),
        (make_cauchy(), 2, 1.0),
        (make_ahlfors_beurling(), 2, 1.0),
        (make_riesz_generalized(1.0, 2).unwrap(), 2, 1.0),
    ];
    for (k, n, expected) in cases {
        let mut sups = Vec::new();
        for exp in [-1, -4, -8] {
            let samples: Vec<(Vec<f64>, Vec<f64>)> = (0..200)
                .map(|_| {
                    let s: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let dir: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let len = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
                    let r = 10f64.powi(exp) * rng.gen_range(0.5..1.0);
                    let t = s.iter().zip(&dir).map(|(a, d)| a + d / len * r).collect();
                    (s, t)
                })
                .collect();
            let rep = order_check(&k, &samples, 1e6);
            assert!(rep.offending.is_empty());
            sups.push(rep.sup);
        }
        for s in sups {
            assert_relative_eq!(s, expected, max_relative = 1e-6);
        }
    }
}

#[test]
fn generators_examples() {
    let m = lebesgue_grid(1, 0.0, 1.0, 2f64.powi(-6)).unwrap();
    assert_eq!(m.len(), 64);
    assert!(m.weights().iter().all(|&w| w == 2f64.powi(-6)));
    let (a, b) = interleaved_grids(2, 0.0, 1.0, 0.125).unwrap();
    assert!(common_atoms(&a, &b).is_empty());
    assert!(siolab::measure::coincident_pairs(&a, &b).is_empty());
    let x = random_atoms::<f64, _>(10, 2, 0.0, 1.0, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
    let y = random_atoms::<f64, _>(10, 2, 0.0, 1.0, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
    assert_eq!(x.to_json(), y.to_json());
    assert_eq!(DiscreteMeasure::<f64>::from_json(&x.to_json()).unwrap(), x);
}
