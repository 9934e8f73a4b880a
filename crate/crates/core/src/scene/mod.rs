//! Discretized closed subsets of the open cylinder `C_1(0) = U^n(0,1) × R`.
//!
//! A [`ClosedSetSample`] is a finite ρ-net of the intended set together with
//! per-sample `ℋ^m` weights and, for generated scenes, an analytic
//! [`SceneOracle`]. All distance and nearest-point queries go through a k-d
//! tree over the samples and are read-only after construction.

pub mod cantor;
mod io;
mod oracle;


use serde::Deserialize;

pub use io::{dump_points, load_points};
pub use oracle::{GraphFunction, SceneOracle};

use crate::error::{Error, Result};
use crate::geom::{self, horizontal, Lattice, PointSet};
use crate::index::PointIndex;

/// Samples with `|z'|` beyond this are treated as lying on the cylinder wall.
const WALL_EPS: f64 = 1e-12;

/// Generator description for a test scene.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "generator", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SceneSpec {
    /// `z_{n+1} = height + slope · z'` over `U^n(0,1)`.
    Plane {
        n: usize,
        rho: f64,
        #[serde(default)]
        slope: Option<Vec<f64>>,
        #[serde(default)]
        height: f64,
    },
    GraphOfFunction {
        n: usize,
        rho: f64,
        function: GraphFunction,
        /// Overrides the generator's declared mean-curvature bound.
        #[serde(default)]
        h: Option<f64>,
    },
    /// Round sphere of the given radius; `center` defaults to `(0,…,0,-radius)`.
    SphereCap {
        n: usize,
        rho: f64,
        radius: f64,
        #[serde(default)]
        center: Option<Vec<f64>>,
    },
    CantorPrimitiveGraph { rho: f64, depth: u32 },
    /// Horizontal circle in R^3.
    CurveInR3 {
        rho: f64,
        radius: f64,
        #[serde(default)]
        center: Option<Vec<f64>>,
        #[serde(default)]
        height: f64,
    },
    PointUnion {
        points: Vec<Vec<f64>>,
        rho: f64,
        #[serde(default = "default_m")]
        m: usize,
        #[serde(default)]
        h: f64,
    },
}

fn default_m() -> usize {
    1
}

impl SceneSpec {
    pub fn rho(&self) -> f64 {
        match self {
            SceneSpec::Plane { rho, .. }
            | SceneSpec::GraphOfFunction { rho, .. }
            | SceneSpec::SphereCap { rho, .. }
            | SceneSpec::CantorPrimitiveGraph { rho, .. }
            | SceneSpec::CurveInR3 { rho, .. }
            | SceneSpec::PointUnion { rho, .. } => *rho,
        }
    }

    /// Copy of this scene description at another resolution.
    pub fn with_rho(&self, new_rho: f64) -> Self {
        let mut s = self.clone();
        match &mut s {
            SceneSpec::Plane { rho, .. }
            | SceneSpec::GraphOfFunction { rho, .. }
            | SceneSpec::SphereCap { rho, .. }
            | SceneSpec::CantorPrimitiveGraph { rho, .. }
            | SceneSpec::CurveInR3 { rho, .. }
            | SceneSpec::PointUnion { rho, .. } => *rho = new_rho,
        }
        s
    }

    pub fn tag(&self) -> &'static str {
        match self {
            SceneSpec::Plane { .. } => "plane",
            SceneSpec::GraphOfFunction { .. } => "graph-of-function",
            SceneSpec::SphereCap { .. } => "sphere-cap",
            SceneSpec::CantorPrimitiveGraph { .. } => "cantor-primitive-graph",
            SceneSpec::CurveInR3 { .. } => "curve-in-R3",
            SceneSpec::PointUnion { .. } => "point-union",
        }
    }
}

/// Finite ρ-net of a relatively closed `Γ ⊆ C_1(0)`.
#[derive(Debug)]
pub struct ClosedSetSample {
    ambient_dim: usize,
    intrinsic_dim: usize,
    points: PointSet,
    weights: Vec<f64>,
    resolution: f64,
    height_bound: f64,
    mc_bound: f64,
    oracle: Option<SceneOracle>,
    index: PointIndex,
}

impl ClosedSetSample {
    /// Wraps raw samples. Each sample represents `resolution^m` of `ℋ^m` measure.
    pub fn from_points(
        points: PointSet,
        intrinsic_dim: usize,
        resolution: f64,
        mc_bound: f64,
    ) -> Result<Self> {
        let m = intrinsic_dim;
        let w = vec![resolution.powi(m as i32); points.len()];
        Self::assemble(points, w, m, resolution, mc_bound, None)
    }

    fn assemble(
        points: PointSet,
        weights: Vec<f64>,
        intrinsic_dim: usize,
        resolution: f64,
        mc_bound: f64,
        oracle: Option<SceneOracle>,
    ) -> Result<Self> {
        if !(resolution > 0.0) || !resolution.is_finite() {
            return Err(Error::InvalidScene(format!(
                "resolution must be positive, got {resolution}"
            )));
        }
        if points.is_empty() {
            return Err(Error::EmptySet);
        }
        let ambient_dim = points.dim();
        if ambient_dim < 2 {
            return Err(Error::InvalidScene("ambient dimension must be at least 2".into()));
        }
        let n = ambient_dim - 1;
        if intrinsic_dim < 1 || intrinsic_dim > n {
            return Err(Error::InvalidScene(format!(
                "intrinsic dimension {intrinsic_dim} outside 1..={n}"
            )));
        }
        if !(mc_bound >= 0.0) {
            return Err(Error::InvalidScene(format!("mean-curvature bound {mc_bound} < 0")));
        }
        let mut height_bound: f64 = 0.0;
        for p in points.iter() {
            if geom::norm(horizontal(p)) >= 1.0 {
                return Err(Error::EscapesCylinder(format!("sample {p:?} has |z'| >= 1")));
            }
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidScene(format!("non-finite sample {p:?}")));
            }
            height_bound = height_bound.max(geom::height(p).abs());
        }
        let index = PointIndex::build(&points)?;
        Ok(Self {
            ambient_dim,
            intrinsic_dim,
            points,
            weights,
            resolution,
            height_bound,
            mc_bound,
            oracle,
            index,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    /// `n`, the dimension of the horizontal space.
    pub fn n(&self) -> usize {
        self.ambient_dim - 1
    }

    pub fn intrinsic_dim(&self) -> usize {
        self.intrinsic_dim
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        self.points.get(i)
    }

    /// `ℋ^m` measure represented by sample `i`.
    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn height_bound(&self) -> f64 {
        self.height_bound
    }

    pub fn mc_bound(&self) -> f64 {
        self.mc_bound
    }

    pub fn oracle(&self) -> Option<&SceneOracle> {
        self.oracle.as_ref()
    }

    pub fn index(&self) -> &PointIndex {
        &self.index
    }

    /// Largest sample height.
    pub fn max_height(&self) -> f64 {
        self.points
            .iter()
            .map(geom::height)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `δ_Γ(p)`, the distance from `p` to the nearest sample.
    pub fn distance(&self, p: &[f64]) -> Result<f64> {
        self.check_dim(p)?;
        Ok(self.index.nearest(p).1)
    }

    /// Samples realizing `δ_Γ(p)` within `tol`.
    pub fn nearest_points(&self, p: &[f64], tol: f64) -> Result<Vec<usize>> {
        self.check_dim(p)?;
        if !(tol >= 0.0) {
            return Err(Error::Domain(format!("tolerance must be >= 0, got {tol}")));
        }
        let (best, d) = self.index.nearest(p);
        // Inclusive up to rounding in the squared-distance comparison.
        let mut out = self.index.within(p, d + tol + 1e-12 * (1.0 + d));
        if out.is_empty() {
            out.push(best);
        }
        Ok(out)
    }

    fn check_dim(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.ambient_dim {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim,
                got: p.len(),
            });
        }
        Ok(())
    }
}

/// `δ_Γ(p)` as a free function.
pub fn distance(gamma: &ClosedSetSample, p: &[f64]) -> Result<f64> {
    gamma.distance(p)
}

/// `ξ_Γ(p)` up to `tol`, as sample coordinates.
pub fn nearest_points(gamma: &ClosedSetSample, p: &[f64], tol: f64) -> Result<Vec<Vec<f64>>> {
    Ok(gamma
        .nearest_points(p, tol)?
        .into_iter()
        .map(|i| gamma.point(i).to_vec())
        .collect())
}

fn inside_cylinder(x: &[f64]) -> bool {
    geom::norm(x) < 1.0 - WALL_EPS
}

/// Builds the sample for a scene generator.
pub fn build_scene(spec: &SceneSpec) -> Result<ClosedSetSample> {
    let rho = spec.rho();
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::InvalidScene(format!("rho must be positive, got {rho}")));
    }
    match spec {
        SceneSpec::Plane { n, slope, height, .. } => {
            let slope = slope.clone().unwrap_or_else(|| vec![0.0; *n]);
            if slope.len() != *n {
                return Err(Error::DimensionMismatch {
                    expected: *n,
                    got: slope.len(),
                });
            }
            let w = (1.0 + geom::dot(&slope, &slope)).sqrt();
            let f = |x: &[f64]| height + geom::dot(&slope, x);
            let (pts, weights) = graph_samples(*n, rho, f, |_| w)?;
            ClosedSetSample::assemble(
                pts,
                weights,
                *n,
                rho,
                0.0,
                Some(SceneOracle::Plane {
                    slope: slope.clone(),
                    height: *height,
                }),
            )
        }
        SceneSpec::GraphOfFunction { n, function, h, .. } => {
            if !function.supports_dim(*n) {
                return Err(Error::InvalidScene(format!(
                    "graph function {function:?} does not support n = {n}"
                )));
            }
            if let GraphFunction::Scherk { k } = function {
                if !(*k > 0.0 && *k < std::f64::consts::FRAC_PI_2) {
                    return Err(Error::EscapesCylinder(format!(
                        "Scherk graph with k = {k} is unbounded on the unit disk"
                    )));
                }
            }
            if let GraphFunction::Catenoid { neck, shift } = function {
                if geom::norm(shift) - 1.0 <= *neck {
                    return Err(Error::EscapesCylinder(
                        "catenoid neck intersects the unit disk".into(),
                    ));
                }
            }
            let (pts, weights) = graph_samples(*n, rho, |x| function.value(x), |x| {
                let g = function.gradient(x);
                (1.0 + geom::dot(&g, &g)).sqrt()
            })?;
            let bound = h.unwrap_or_else(|| function.declared_bound(*n));
            ClosedSetSample::assemble(
                pts,
                weights,
                *n,
                rho,
                bound,
                Some(SceneOracle::Graph(function.clone())),
            )
        }
        SceneSpec::CantorPrimitiveGraph { depth, .. } => build_scene(&SceneSpec::GraphOfFunction {
            n: 1,
            rho,
            function: GraphFunction::CantorPrimitive { depth: *depth },
            h: Some(0.0),
        }),
        SceneSpec::SphereCap {
            n, radius, center, ..
        } => {
            let center = center.clone().unwrap_or_else(|| {
                let mut c = vec![0.0; n + 1];
                c[*n] = -radius;
                c
            });
            if center.len() != n + 1 {
                return Err(Error::DimensionMismatch {
                    expected: n + 1,
                    got: center.len(),
                });
            }
            if !(*radius > 0.0) {
                return Err(Error::InvalidScene(format!("radius {radius} must be positive")));
            }
            if geom::norm(horizontal(&center)) + radius > 1.0 + WALL_EPS {
                return Err(Error::EscapesCylinder(format!(
                    "sphere of radius {radius} at {center:?} leaves the closed cylinder"
                )));
            }
            let dirs = match n {
                1 => {
                    let count = (std::f64::consts::TAU * radius / rho).ceil().max(8.0) as usize;
                    (0..count)
                        .map(|k| {
                            let t = std::f64::consts::TAU * k as f64 / count as f64;
                            vec![t.cos(), t.sin()]
                        })
                        .collect::<Vec<_>>()
                }
                2 => {
                    let count = (4.0 * std::f64::consts::PI * radius * radius / (rho * rho))
                        .ceil()
                        .max(16.0) as usize;
                    geom::fibonacci_sphere(count)
                }
                _ => {
                    return Err(Error::InvalidScene(format!(
                        "sphere scenes are implemented for n = 1, 2; got {n}"
                    )))
                }
            };
            let area = match n {
                1 => std::f64::consts::TAU * radius,
                _ => 4.0 * std::f64::consts::PI * radius * radius,
            };
            let w = area / dirs.len() as f64;
            let mut pts = PointSet::with_capacity(n + 1, dirs.len());
            for d in &dirs {
                let p = geom::add_scaled(&center, *radius, d);
                if inside_cylinder(horizontal(&p)) {
                    pts.push(&p);
                }
            }
            let weights = vec![w; pts.len()];
            ClosedSetSample::assemble(
                pts,
                weights,
                *n,
                rho,
                *n as f64 / radius,
                Some(SceneOracle::Sphere {
                    center,
                    radius: *radius,
                }),
            )
        }
        SceneSpec::CurveInR3 {
            radius,
            center,
            height,
            ..
        } => {
            let center = center.clone().unwrap_or_else(|| vec![0.0, 0.0]);
            if center.len() != 2 {
                return Err(Error::DimensionMismatch {
                    expected: 2,
                    got: center.len(),
                });
            }
            if !(*radius > 0.0) {
                return Err(Error::InvalidScene(format!("radius {radius} must be positive")));
            }
            if geom::norm(&center) + radius > 1.0 + WALL_EPS {
                return Err(Error::EscapesCylinder(format!(
                    "circle of radius {radius} at {center:?} leaves the closed cylinder"
                )));
            }
            let count = (std::f64::consts::TAU * radius / rho).ceil().max(8.0) as usize;
            let w = std::f64::consts::TAU * radius / count as f64;
            let mut pts = PointSet::with_capacity(3, count);
            for k in 0..count {
                let t = std::f64::consts::TAU * k as f64 / count as f64;
                let p = [center[0] + radius * t.cos(), center[1] + radius * t.sin(), *height];
                if inside_cylinder(&p[..2]) {
                    pts.push(&p);
                }
            }
            let weights = vec![w; pts.len()];
            ClosedSetSample::assemble(
                pts,
                weights,
                1,
                rho,
                1.0 / radius,
                Some(SceneOracle::Circle {
                    center,
                    radius: *radius,
                    height: *height,
                }),
            )
        }
        SceneSpec::PointUnion { points, m, h, .. } => {
            let dim = points.first().map(Vec::len).ok_or(Error::EmptySet)?;
            let set = PointSet::from_rows(dim, points)?;
            let weights = vec![0.0; set.len()];
            ClosedSetSample::assemble(set, weights, *m, rho, *h, Some(SceneOracle::Points))
        }
    }
}

/// Graph samples over the lattice `ρ Z^n ∩ U^n(0,1)` with area weights `ρ^n W`.
fn graph_samples(
    n: usize,
    rho: f64,
    u: impl Fn(&[f64]) -> f64,
    area_factor: impl Fn(&[f64]) -> f64,
) -> Result<(PointSet, Vec<f64>)> {
    if n == 0 {
        return Err(Error::InvalidScene("n must be at least 1".into()));
    }
    let lattice = Lattice::filtered(n, rho, &vec![0.0; n], 1.0, inside_cylinder)?;
    let cell = rho.powi(n as i32);
    let mut pts = PointSet::with_capacity(n + 1, lattice.points.len());
    let mut weights = Vec::with_capacity(lattice.points.len());
    let mut z = vec![0.0; n + 1];
    for x in lattice.points.iter() {
        let h = u(x);
        if !h.is_finite() {
            return Err(Error::EscapesCylinder(format!("graph height not finite at {x:?}")));
        }
        z[..n].copy_from_slice(x);
        z[n] = h;
        pts.push(&z);
        weights.push(cell * area_factor(x));
    }
    Ok((pts, weights))
}
