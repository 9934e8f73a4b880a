//! Fixtures shared by the benchmarks.

use abpkit::{build_scene, ClosedSetSample, PointSet, SceneSpec};

/// Spherical cap of radius 1/2 over the unit disc at resolution `rho`.
pub fn sphere_cap(rho: f64) -> ClosedSetSample {
    build_scene(&SceneSpec::SphereCap {
        n: 2,
        rho,
        radius: 0.5,
        center: None,
    })
    .expect("valid cap")
}

/// `count` deterministic query points in `[-1, 1]^2 × [-1, 1]`.
pub fn queries(count: usize) -> PointSet {
    // Weyl sequence; no RNG needed for a fixed workload.
    let g = [0.754_877_666_246_692_7, 0.569_840_290_998_053_2, 0.430_159_709_001_947];
    let rows: Vec<[f64; 3]> = (1..=count)
        .map(|i| {
            let f = |k: usize| 2.0 * (g[k] * i as f64).fract() - 1.0;
            [f(0), f(1), f(2)]
        })
        .collect();
    PointSet::from_rows(3, rows).expect("3-d rows")
}
