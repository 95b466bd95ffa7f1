//! The core is generic over the scalar; spot checks at `f32`.

use siolab::forms::{factor2_check, operator_norm_p2, NormOptions, SolverOptions};
use siolab::kernels::{make_hilbert, materialize, KernelSpec};
use siolab::measure::generators::{interleaved_grids, lebesgue_grid};
use siolab::mollifiers::{gaussian_mollifier, scale};
use siolab::muckenhoupt::{ap_alpha_constant, BallScan};
use siolab::splitter::{build_partition, verify_partition};
use siolab::{Kernel32, Measure32};

#[test]
fn f32_pipeline() {
    let m: Measure32 = lebesgue_grid(1, 0.0f32, 1.0, 1.0 / 64.0).unwrap();
    assert_eq!(m.len(), 64);
    assert!((m.total_mass() - 1.0).abs() < 1e-6);

    let k: Kernel32 = KernelSpec::constant(1, 1.0f32);
    let mat = materialize(&k, &m, &m, None).unwrap();
    let opts = SolverOptions { tol: 1e-5, ..SolverOptions::default() };
    let n = operator_norm_p2(&mat, &m, &m, &opts).unwrap();
    assert!((n.value - 1.0).abs() < 1e-4, "{}", n.value);

    let (mu, nu) = interleaved_grids(1, 0.0f32, 1.0, 1.0 / 4.0).unwrap();
    let h = scale(&gaussian_mollifier::<f32>(1).unwrap(), 0.1).unwrap().apply(&make_hilbert()).unwrap();
    let r = factor2_check(&h, &mu, &nu, 2.0, &NormOptions { solver: opts, ..NormOptions::default() }).unwrap();
    assert!(r.holds);

    let part = build_partition(&m, 1, 0.75).unwrap();
    assert!(verify_partition(&part).passed());

    let a = ap_alpha_constant(&m, &m, 2.0, 1.0, &BallScan::default_for(&m, &m)).unwrap();
    assert!(a.constant >= 0.99 && a.constant < 1.6, "{}", a.constant);
}
