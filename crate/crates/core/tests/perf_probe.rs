use std::time::Instant;

use denmatch_core::densities::Distribution;
use denmatch_core::kde;
use denmatch_core::quadrature::QuadratureGrid;

#[test]
#[ignore]
fn probe_pass_cost() {
    let d = Distribution::gaussian(3.5, 0.12).unwrap();
    let s = d.sample(1, 1_000_000).unwrap();
    let g = QuadratureGrid::trapezoid(0.0, 7.0, 10_000).unwrap();

    for h in [0.02, 1.4] {
        let t0 = Instant::now();
        let mats = kde::build_matrices(s.values(), h, &g).unwrap();
        let t_build = t0.elapsed();
        let u: Vec<f64> = g.nodes().iter().map(|x| x * 0.1).collect();
        let t1 = Instant::now();
        let v = mats.kprime_transpose_mul(&u).unwrap();
        let t_k = t1.elapsed();
        println!(
            "h={h}: density pass {:?}, kprime pass {:?} (q0={}, v0={})",
            t_build,
            t_k,
            mats.density()[5000],
            v[0]
        );
    }
}
