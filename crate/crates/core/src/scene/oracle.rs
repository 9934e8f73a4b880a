//! Analytic descriptors attached to generated scenes.

use serde::Deserialize;

use super::cantor;
use crate::geom::{self, dot, horizontal, norm};

/// Height functions `u : B^n(0,1) -> R` used by graph scenes.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GraphFunction {
    /// `u(x) = -slope * |x|`: a cone with a corner at the origin.
    Corner {
        #[serde(default = "one")]
        slope: f64,
    },
    /// `u(x) = c |x|^2 / 2`.
    Quadratic { c: f64 },
    /// `u(x) = level + amplitude * exp(-|x|^2 / (2 width^2))`.
    Bump {
        amplitude: f64,
        width: f64,
        #[serde(default)]
        level: f64,
    },
    /// Scherk's minimal graph `u = ln(cos(k x_2) / cos(k x_1)) / k` (n = 2, k < π/2).
    Scherk { k: f64 },
    /// Upper catenoid sheet `u = neck * acosh(|x - shift| / neck)` over a window
    /// that stays outside the neck.
    Catenoid { neck: f64, shift: Vec<f64> },
    /// `u(x) = F_k((x + 1) / 2)`, `F_k` the depth-`k` Cantor primitive (n = 1).
    CantorPrimitive { depth: u32 },
}

fn one() -> f64 {
    1.0
}

impl GraphFunction {
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            GraphFunction::Corner { slope } => -slope * norm(x),
            GraphFunction::Quadratic { c } => 0.5 * c * dot(x, x),
            GraphFunction::Bump {
                amplitude,
                width,
                level,
            } => level + amplitude * (-dot(x, x) / (2.0 * width * width)).exp(),
            GraphFunction::Scherk { k } => ((k * x[1]).cos() / (k * x[0]).cos()).ln() / k,
            GraphFunction::Catenoid { neck, shift } => {
                let r = geom::dist(x, shift);
                neck * (r / neck).acosh()
            }
            GraphFunction::CantorPrimitive { depth } => {
                cantor::cantor_primitive(*depth, 0.5 * (x[0] + 1.0))
            }
        }
    }

    /// Gradient of `u`. At the corner of [`GraphFunction::Corner`] returns 0.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            GraphFunction::Corner { slope } => {
                let r = norm(x);
                if r == 0.0 {
                    vec![0.0; x.len()]
                } else {
                    x.iter().map(|xi| -slope * xi / r).collect()
                }
            }
            GraphFunction::Quadratic { c } => x.iter().map(|xi| c * xi).collect(),
            GraphFunction::Bump { width, .. } => {
                let v = self.value(x);
                x.iter().map(|xi| -v * xi / (width * width)).collect()
            }
            GraphFunction::Scherk { k } => vec![(k * x[0]).tan(), -(k * x[1]).tan()],
            GraphFunction::Catenoid { neck, shift } => {
                let d = geom::sub(x, shift);
                let r = norm(&d);
                let s = neck / (r * (r * r - neck * neck).sqrt());
                d.iter().map(|di| s * di).collect()
            }
            GraphFunction::CantorPrimitive { depth } => {
                vec![0.5 * cantor::cantor_function(*depth, 0.5 * (x[0] + 1.0))]
            }
        }
    }

    /// Hessian of `u` (row-major, n×n).
    pub fn hessian(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let mut h = vec![0.0; n * n];
        match self {
            GraphFunction::Corner { slope } => {
                let r = norm(x);
                if r > 0.0 {
                    for i in 0..n {
                        for j in 0..n {
                            let delta = if i == j { 1.0 } else { 0.0 };
                            h[i * n + j] = -slope * (delta - x[i] * x[j] / (r * r)) / r;
                        }
                    }
                }
            }
            GraphFunction::Quadratic { c } => {
                for i in 0..n {
                    h[i * n + i] = *c;
                }
            }
            GraphFunction::Bump { width, .. } => {
                let v = self.value(x);
                let w2 = width * width;
                for i in 0..n {
                    for j in 0..n {
                        let delta = if i == j { 1.0 } else { 0.0 };
                        h[i * n + j] = v * (x[i] * x[j] / (w2 * w2) - delta / w2);
                    }
                }
            }
            GraphFunction::Scherk { k } => {
                let c0 = (k * x[0]).cos();
                let c1 = (k * x[1]).cos();
                h[0] = k / (c0 * c0);
                h[3] = -k / (c1 * c1);
            }
            GraphFunction::Catenoid { neck, shift } => {
                let d = geom::sub(x, shift);
                let r2 = dot(&d, &d);
                let r = r2.sqrt();
                let q = r2 - neck * neck;
                let s = neck / (r * q.sqrt());
                let t = neck * (q + r2) / (r2 * r * q * q.sqrt());
                for i in 0..n {
                    for j in 0..n {
                        let delta = if i == j { 1.0 } else { 0.0 };
                        h[i * n + j] = s * delta - t * d[i] * d[j];
                    }
                }
            }
            GraphFunction::CantorPrimitive { depth } => {
                h[0] = 0.25 * cantor::cantor_slope(*depth, 0.5 * (x[0] + 1.0));
            }
        }
        h
    }

    /// Scalar mean curvature `div(∇u / W)`, `W = sqrt(1 + |∇u|^2)`
    /// (positive for convex graphs).
    pub fn mean_curvature(&self, x: &[f64]) -> f64 {
        let n = x.len();
        let g = self.gradient(x);
        let h = self.hessian(x);
        let w2 = 1.0 + dot(&g, &g);
        let lap: f64 = (0..n).map(|i| h[i * n + i]).sum();
        let mut ghg = 0.0;
        for i in 0..n {
            for j in 0..n {
                ghg += g[i] * h[i * n + j] * g[j];
            }
        }
        (lap * w2 - ghg) / w2.powf(1.5)
    }

    /// Default mean-curvature bound declared for the generated scene.
    pub fn declared_bound(&self, n: usize) -> f64 {
        match self {
            GraphFunction::Quadratic { c } => n as f64 * c.abs(),
            _ => 0.0,
        }
    }

    pub fn supports_dim(&self, n: usize) -> bool {
        match self {
            GraphFunction::Scherk { .. } => n == 2,
            GraphFunction::CantorPrimitive { .. } => n == 1,
            GraphFunction::Catenoid { shift, .. } => shift.len() == n,
            _ => true,
        }
    }
}

/// Analytic description of a generated scene.
#[derive(Debug, Clone, PartialEq)]
pub enum SceneOracle {
    /// `z_{n+1} = height + slope · z'`.
    Plane { slope: Vec<f64>, height: f64 },
    Graph(GraphFunction),
    /// Round sphere (full, contained in the closed cylinder).
    Sphere { center: Vec<f64>, radius: f64 },
    /// Horizontal circle `|z' - center| = radius`, `z_3 = height` in R^3.
    Circle { center: Vec<f64>, radius: f64, height: f64 },
    /// Finite point configuration.
    Points,
}

impl SceneOracle {
    /// Exact Euclidean distance to the analytic set, where a closed form exists.
    /// Plane distances ignore truncation by the cylinder wall.
    pub fn distance(&self, p: &[f64]) -> Option<f64> {
        match self {
            SceneOracle::Plane { slope, height } => {
                let v = geom::height(p) - height - dot(slope, horizontal(p));
                Some(v.abs() / (1.0 + dot(slope, slope)).sqrt())
            }
            SceneOracle::Sphere { center, radius } => Some((geom::dist(p, center) - radius).abs()),
            SceneOracle::Circle {
                center,
                radius,
                height,
            } => {
                let rh = geom::dist(horizontal(p), center) - radius;
                let v = geom::height(p) - height;
                Some((rh * rh + v * v).sqrt())
            }
            SceneOracle::Graph(_) | SceneOracle::Points => None,
        }
    }

    /// Orthonormal basis of the normal space at a point `z` of the set.
    pub fn normal_space(&self, z: &[f64]) -> Option<Vec<Vec<f64>>> {
        let d = z.len();
        match self {
            SceneOracle::Plane { slope, .. } => {
                let mut v: Vec<f64> = slope.iter().map(|s| -s).collect();
                v.push(1.0);
                Some(vec![geom::normalized(&v)?])
            }
            SceneOracle::Graph(f) => {
                let mut v: Vec<f64> = f.gradient(horizontal(z)).iter().map(|s| -s).collect();
                v.push(1.0);
                Some(vec![geom::normalized(&v)?])
            }
            SceneOracle::Sphere { center, .. } => Some(vec![geom::normalized(&geom::sub(z, center))?]),
            SceneOracle::Circle { center, .. } => {
                let mut radial = geom::sub(horizontal(z), center);
                radial.push(0.0);
                let radial = geom::normalized(&radial)?;
                let mut up = vec![0.0; d];
                up[d - 1] = 1.0;
                Some(vec![radial, up])
            }
            SceneOracle::Points => None,
        }
    }

    /// Mean curvature vector `H(z)` (sum of principal curvatures times the
    /// direction of curving; points towards the centre for spheres).
    pub fn mean_curvature_vector(&self, z: &[f64]) -> Option<Vec<f64>> {
        let d = z.len();
        match self {
            SceneOracle::Plane { .. } => Some(vec![0.0; d]),
            SceneOracle::Graph(f) => {
                let x = horizontal(z);
                let g = f.gradient(x);
                let w = (1.0 + dot(&g, &g)).sqrt();
                let hm = f.mean_curvature(x);
                let mut nu: Vec<f64> = g.iter().map(|s| -s / w).collect();
                nu.push(1.0 / w);
                Some(nu.iter().map(|c| hm * c).collect())
            }
            SceneOracle::Sphere { center, radius } => {
                let n = (d - 1) as f64;
                let out = geom::sub(z, center);
                Some(out.iter().map(|c| -n * c / (radius * radius)).collect())
            }
            SceneOracle::Circle { center, radius, .. } => {
                let mut radial = geom::sub(horizontal(z), center);
                radial.push(0.0);
                let radial = geom::normalized(&radial)?;
                Some(radial.iter().map(|c| -c / radius).collect())
            }
            SceneOracle::Points => None,
        }
    }
}
