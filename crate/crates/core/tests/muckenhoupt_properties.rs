use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use siolab::kernels::KernelSpec;
use siolab::measure::generators::random_atoms;
use siolab::muckenhoupt::{ap_alpha_constant, necessity_experiment, BallScan, NecessityOptions};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scaling_law(seed in 0u64..10_000, c in 0.01f64..100.0, p in 1.1f64..6.0, alpha in 0.2f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mu = random_atoms(12, 2, 0.0, 1.0, &mut rng).unwrap();
        let nu = random_atoms(9, 2, 0.0, 1.0, &mut rng).unwrap();
        let scan = BallScan::default_for(&mu, &nu);
        let a = ap_alpha_constant(&mu, &nu, p, alpha, &scan).unwrap().constant;
        let b = ap_alpha_constant(&mu.scaled(c).unwrap(), &nu.scaled(c).unwrap(), p, alpha, &scan).unwrap().constant;
        prop_assert!((b - c * a).abs() <= 1e-12 * c * a, "{b} vs {}", c * a);
    }

    #[test]
    fn p_independence_for_equal_measures(seed in 0u64..10_000, p in 1.05f64..8.0, q in 1.05f64..8.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mu = random_atoms(15, 1, 0.0, 1.0, &mut rng).unwrap();
        let scan = BallScan::default_for(&mu, &mu);
        let a = ap_alpha_constant(&mu, &mu, p, 1.0, &scan).unwrap();
        let b = ap_alpha_constant(&mu, &mu, q, 1.0, &scan).unwrap();
        prop_assert!((a.constant - b.constant).abs() <= 1e-12 * a.constant);
        prop_assert!((a.reevaluate(&mu, &mu) - a.constant).abs() <= 1e-12 * a.constant);
    }

    #[test]
    fn more_radii_never_decrease(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mu = random_atoms(10, 2, 0.0, 1.0, &mut rng).unwrap();
        let nu = random_atoms(10, 2, 0.0, 1.0, &mut rng).unwrap();
        let full = BallScan::default_for(&mu, &nu);
        let half = BallScan { centers: full.centers.clone(), radii: full.radii.iter().copied().step_by(2).collect() };
        let a = ap_alpha_constant(&mu, &nu, 2.0, 1.0, &half).unwrap().constant;
        let b = ap_alpha_constant(&mu, &nu, 2.0, 1.0, &full).unwrap().constant;
        prop_assert!(b >= a);
    }
}

#[test]
fn bounded_kernel_sanity() {
    // a nonsingular kernel has no homogeneous profile, so the necessity
    // experiment does not apply; the A_p^alpha side stays finite
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mu = random_atoms(20, 2, 0.0, 1.0, &mut rng).unwrap();
    let k = KernelSpec::constant(2, 1.0f64);
    assert!(necessity_experiment(&k, &mu, &mu, 2.0, 2.0, &[0.1], &NecessityOptions::default()).is_err());
    let a = ap_alpha_constant(&mu, &mu, 2.0, 2.0, &BallScan::default_for(&mu, &mu)).unwrap();
    assert!(a.constant.is_finite() && a.constant > 0.0);
}
