use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use siolab::kernels::{make_cauchy, make_hilbert, materialize, KernelSpec};
use siolab::measure::generators::interleaved_grids;
use siolab::mollifiers::{
    gaussian_mollifier, multiplier_power, scale, schur_bound, smooth_annulus_mollifier, sobolev_bound,
};
use siolab::truncation::{annulus_multiplier, psi, psi_part, truncate};

#[test]
fn schur_bound_below_sobolev_bound() {
    for m in [gaussian_mollifier::<f64>(1).unwrap(), smooth_annulus_mollifier(0.25, 1).unwrap()] {
        let w = schur_bound(&m, None).unwrap();
        for k in [1, 2] {
            let s = sobolev_bound(&m, k, None).unwrap();
            assert!(
                w.bound <= s.bound + w.error_estimate + s.error_estimate,
                "{}: {} > {} (k={k})",
                m.name,
                w.bound,
                s.bound
            );
        }
    }
}

#[test]
fn power_bound_is_multiplicative() {
    let g = gaussian_mollifier::<f64>(1).unwrap();
    let b = schur_bound(&g, None).unwrap();
    let g2 = multiplier_power(&g, 2).unwrap();
    let b2 = schur_bound(&g2, None).unwrap();
    assert!(b2.bound <= b.bound * b.bound + 1e-12);
    assert_abs_diff_eq!(b2.bound, 4.0, epsilon = 4e-3);
}

#[test]
fn multipliers_tend_to_one_off_the_diagonal() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pairs: Vec<(f64, f64)> = (0..2000)
        .map(|_| {
            let s: f64 = rng.gen_range(-2.0..2.0);
            let gap: f64 = rng.gen_range(0.1..3.0);
            (s, s + if rng.gen() { gap } else { -gap })
        })
        .collect();
    for m in [gaussian_mollifier::<f64>(1).unwrap(), smooth_annulus_mollifier(0.1, 1).unwrap()] {
        let mut last = f64::INFINITY;
        for eps in [0.2, 0.1, 0.05, 0.02, 0.01] {
            let me = scale(&m, eps).unwrap();
            let worst = pairs.iter().map(|&(s, t)| (me.eval(&[s], &[t]) - 1.0).norm()).fold(0.0, f64::max);
            assert!(worst <= last + 1e-15, "{} at eps {eps}: {worst} > {last}", m.name);
            last = worst;
        }
        assert!(last < 1e-10, "{}: {last}", m.name);
    }
}

proptest! {
    #[test]
    fn psi_supported_on_the_band(x in 0.0f64..3.0, delta in 0.01f64..0.5) {
        let v = psi(x, delta).unwrap();
        let chi = if (1.0 - delta..=1.0).contains(&x) { 1.0 } else { 0.0 };
        prop_assert!(v.abs() <= chi, "psi({x}) = {v}");
    }
}

#[test]
fn split_identity_holds_entrywise() {
    let (mu, nu) = interleaved_grids(1, 0.0, 1.0, 1.0 / 32.0).unwrap();
    let cases: Vec<KernelSpec<f64>> = vec![make_hilbert(), KernelSpec::bounded("wave", 1, |s: &[f64], t: &[f64]| (3.0 * s[0] - t[0]).cos())];
    for k in cases {
        for eps in [0.03, 0.1, 0.25] {
            let delta = 0.1;
            let hard = materialize(&truncate(&k, eps).unwrap(), &mu, &nu, None).unwrap();
            let part = materialize(&psi_part(&k, eps, delta).unwrap(), &mu, &nu, None).unwrap();
            let smooth = materialize(&k, &mu, &nu, Some(&annulus_multiplier(1, eps, delta).unwrap())).unwrap();
            for ((a, b), c) in hard.entries().iter().zip(part.entries()).zip(smooth.entries()) {
                assert_eq!(a + b, *c, "{} eps={eps}", k.name);
            }
        }
    }
    // vector valued case in the plane
    let (mu, nu) = interleaved_grids(2, 0.0, 1.0, 1.0 / 8.0).unwrap();
    let k = make_cauchy::<f64>();
    let hard = materialize(&truncate(&k, 0.2).unwrap(), &mu, &nu, None).unwrap();
    let part = materialize(&psi_part(&k, 0.2, 0.1).unwrap(), &mu, &nu, None).unwrap();
    let smooth = materialize(&k, &mu, &nu, Some(&annulus_multiplier(2, 0.2, 0.1).unwrap())).unwrap();
    for ((a, b), c) in hard.entries().iter().zip(part.entries()).zip(smooth.entries()) {
        assert_eq!(a + b, *c);
    }
}
