//! Small dense-vector helpers, point storage and direction nets.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Largest ambient dimension supported by the spatial index.
pub const MAX_AMBIENT_DIM: usize = 4;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist2(a, b).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add_scaled(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

pub fn normalized(a: &[f64]) -> Option<Vec<f64>> {
    let n = norm(a);
    (n > 0.0 && n.is_finite()).then(|| a.iter().map(|x| x / n).collect())
}

/// Horizontal part `z'` of an ambient point.
#[inline]
pub fn horizontal(z: &[f64]) -> &[f64] {
    &z[..z.len() - 1]
}

/// Vertical coordinate `z_{n+1}`.
#[inline]
pub fn height(z: &[f64]) -> f64 {
    z[z.len() - 1]
}

/// Flat storage of equal-dimension points.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            coords: Vec::new(),
        }
    }

    pub fn with_capacity(dim: usize, cap: usize) -> Self {
        Self {
            dim,
            coords: Vec::with_capacity(dim * cap),
        }
    }

    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 || coords.len() % dim != 0 {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: coords.len(),
            });
        }
        Ok(Self { dim, coords })
    }

    pub fn from_rows<I, P>(dim: usize, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = P>,
        P: AsRef<[f64]>,
    {
        let mut set = Self::new(dim);
        for r in rows {
            set.try_push(r.as_ref())?;
        }
        Ok(set)
    }

    pub fn try_push(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: p.len(),
            });
        }
        self.coords.extend_from_slice(p);
        Ok(())
    }

    /// Panics on a dimension mismatch; for internal use where the dimension is known.
    pub(crate) fn push(&mut self, p: &[f64]) {
        debug_assert_eq!(p.len(), self.dim);
        self.coords.extend_from_slice(p);
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn flat(&self) -> &[f64] {
        &self.coords
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.iter().map(<[f64]>::to_vec).collect()
    }
}

/// Eigenvalues and eigenvectors of a symmetric matrix, ascending.
pub fn sym_eigen(m: &DMatrix<f64>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = order
        .iter()
        .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect();
    (vals, vecs)
}

/// Sum of the `m` smallest eigenvalues of a symmetric matrix.
pub fn trace_lowest(m: &DMatrix<f64>, count: usize) -> f64 {
    let (vals, _) = sym_eigen(m);
    vals.iter().take(count).sum()
}

/// Orthonormal basis of the orthogonal complement of a unit vector.
pub fn complement_basis(u: &[f64]) -> Vec<Vec<f64>> {
    let d = u.len();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(d - 1);
    for k in 0..d {
        let mut v = vec![0.0; d];
        v[k] = 1.0;
        let c = dot(&v, u);
        for (vi, ui) in v.iter_mut().zip(u) {
            *vi -= c * ui;
        }
        for b in &basis {
            let c = dot(&v, b);
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= c * bi;
            }
        }
        let n = norm(&v);
        if n > 1e-8 {
            basis.push(v.iter().map(|x| x / n).collect());
        }
        if basis.len() == d - 1 {
            break;
        }
    }
    basis
}

/// Quasi-uniform net of unit vectors in `R^dim` with the given angular spacing.
///
/// `dim = 2` gives equally spaced angles, `dim = 3` a Fibonacci spiral.
pub fn direction_net(dim: usize, resolution: f64) -> Result<Vec<Vec<f64>>> {
    if !(resolution > 0.0) {
        return Err(Error::Domain(format!(
            "angular resolution must be positive, got {resolution}"
        )));
    }
    match dim {
        1 => Ok(vec![vec![1.0], vec![-1.0]]),
        2 => {
            let count = (std::f64::consts::TAU / resolution).ceil().max(4.0) as usize;
            Ok((0..count)
                .map(|k| {
                    let t = std::f64::consts::TAU * k as f64 / count as f64;
                    vec![t.cos(), t.sin()]
                })
                .collect())
        }
        3 => {
            let count = (4.0 * std::f64::consts::PI / (resolution * resolution))
                .ceil()
                .max(8.0) as usize;
            Ok(fibonacci_sphere(count))
        }
        _ => Err(Error::Domain(format!(
            "direction nets are implemented for ambient dimension 2 and 3, got {dim}"
        ))),
    }
}

/// `count` points of the golden-angle spiral on the unit 2-sphere.
pub fn fibonacci_sphere(count: usize) -> Vec<Vec<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|k| {
            let z = 1.0 - (2.0 * k as f64 + 1.0) / count as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * k as f64;
            vec![r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

/// Volume of the unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(n - 2) * std::f64::consts::TAU / n as f64,
    }
}

/// Regular lattice of centers covering a closed subset of `B^n(0,1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    pub spacing: f64,
    pub points: PointSet,
}

impl Lattice {
    /// Lattice points `spacing * k` (integer `k`) inside the closed ball `B(center, radius)`.
    pub fn ball(n: usize, center: &[f64], radius: f64, spacing: f64) -> Result<Self> {
        Self::filtered(n, spacing, center, radius, |_| true)
    }

    /// Lattice points inside `B(center, radius)` that satisfy `keep`.
    pub fn filtered(
        n: usize,
        spacing: f64,
        center: &[f64],
        radius: f64,
        keep: impl Fn(&[f64]) -> bool,
    ) -> Result<Self> {
        if !(spacing > 0.0) || !(radius >= 0.0) || center.len() != n || n == 0 {
            return Err(Error::Domain(format!(
                "bad lattice: n={n}, spacing={spacing}, radius={radius}"
            )));
        }
        let lo: Vec<i64> = center
            .iter()
            .map(|c| ((c - radius) / spacing).floor() as i64)
            .collect();
        let hi: Vec<i64> = center
            .iter()
            .map(|c| ((c + radius) / spacing).ceil() as i64)
            .collect();
        let mut points = PointSet::new(n);
        let mut idx = lo.clone();
        let r2 = radius * radius * (1.0 + 1e-12) + 1e-300;
        let mut p = vec![0.0; n];
        'outer: loop {
            for (pi, &k) in p.iter_mut().zip(&idx) {
                *pi = k as f64 * spacing;
            }
            if dist2(&p, center) <= r2 && keep(&p) {
                points.push(&p);
            }
            // Odometer increment, last axis fastest.
            let mut axis = n;
            loop {
                if axis == 0 {
                    break 'outer;
                }
                axis -= 1;
                idx[axis] += 1;
                if idx[axis] <= hi[axis] {
                    break;
                }
                idx[axis] = lo[axis];
            }
        }
        Ok(Self { spacing, points })
    }
}
