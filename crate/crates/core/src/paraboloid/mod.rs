//! Paraboloids touching a sampled set from above, their contact pairs, and
//! the vertex map back to centers.

mod envelope;

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::{self, dot, height, horizontal, PointSet};
use crate::numfmt::fmt_num;
use crate::scene::ClosedSetSample;

pub(crate) use envelope::product_grid_field;

/// `P(y) = (a/2)|y - x|^2 + t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Paraboloid {
    pub center: Vec<f64>,
    pub opening: f64,
    pub offset: f64,
}

impl Paraboloid {
    pub fn new(center: Vec<f64>, opening: f64, offset: f64) -> Self {
        Self {
            center,
            opening,
            offset,
        }
    }

    #[inline]
    pub fn eval(&self, y: &[f64]) -> f64 {
        0.5 * self.opening * geom::dist2(y, &self.center) + self.offset
    }
}

pub fn eval_paraboloid(p: &Paraboloid, y: &[f64]) -> f64 {
    p.eval(y)
}

/// A touching point `z`, the upward unit normal `η` of the touching
/// paraboloid there, and the center `x` that generated it.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactPair {
    pub z: Vec<f64>,
    pub eta: Vec<f64>,
    pub center: Vec<f64>,
    pub opening: f64,
    /// Index of `z` in the sample set.
    pub foot: usize,
}

/// Union of contact pairs over a center grid.
#[derive(Debug, Clone)]
pub struct ContactSet {
    pub opening: f64,
    pub centers: PointSet,
    pub pairs: Vec<ContactPair>,
    /// Some contact lies within `2ρ` of the cylinder wall.
    pub boundary_touch: bool,
    /// The center grid was not a lattice; offsets were computed by brute force.
    pub brute_force_fallback: bool,
    pub resolution: f64,
}

impl ContactSet {
    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Serializes as comma-separated rows `z…, eta…, x…, a` with a header.
    pub fn write_table<W: Write>(&self, mut out: W) -> Result<()> {
        let Some(first) = self.pairs.first() else {
            writeln!(out, "z,eta,x,a")?;
            return Ok(());
        };
        let dim = first.z.len();
        let mut header: Vec<String> = Vec::new();
        for prefix in ["z", "eta"] {
            header.extend((0..dim).map(|i| format!("{prefix}{i}")));
        }
        header.extend((0..dim - 1).map(|i| format!("x{i}")));
        header.push("a".into());
        writeln!(out, "{}", header.join(","))?;
        for p in &self.pairs {
            let row: Vec<String> = p
                .z
                .iter()
                .chain(&p.eta)
                .chain(&p.center)
                .chain(std::iter::once(&p.opening))
                .map(|&v| fmt_num(v))
                .collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Touching offsets for a center list, and whether the fast path was used.
#[derive(Debug, Clone, PartialEq)]
pub struct OffsetField {
    pub values: Vec<f64>,
    pub brute_force_fallback: bool,
}

fn check_opening(a: f64) -> Result<()> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::Domain(format!("opening must be positive, got {a}")));
    }
    Ok(())
}

fn check_center(gamma: &ClosedSetSample, x: &[f64]) -> Result<()> {
    if x.len() != gamma.n() {
        return Err(Error::DimensionMismatch {
            expected: gamma.n(),
            got: x.len(),
        });
    }
    Ok(())
}

#[inline]
fn lift(a: f64, x: &[f64], z: &[f64]) -> f64 {
    height(z) - 0.5 * a * geom::dist2(horizontal(z), x)
}

/// `t* = max_z (z_{n+1} - (a/2)|z' - x|^2)` over all samples.
pub fn touching_offset(gamma: &ClosedSetSample, a: f64, x: &[f64]) -> Result<f64> {
    check_opening(a)?;
    check_center(gamma, x)?;
    Ok(gamma
        .points()
        .iter()
        .map(|z| lift(a, x, z))
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Reference implementation of [`touching_offset_field`]: one scan per center.
pub fn touching_offset_field_brute(
    gamma: &ClosedSetSample,
    a: f64,
    centers: &PointSet,
) -> Result<Vec<f64>> {
    check_opening(a)?;
    if centers.dim() != gamma.n() {
        return Err(Error::DimensionMismatch {
            expected: gamma.n(),
            got: centers.dim(),
        });
    }
    let rows: Vec<&[f64]> = centers.iter().collect();
    Ok(rows
        .par_iter()
        .map(|x| {
            gamma
                .points()
                .iter()
                .map(|z| lift(a, x, z))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect())
}

/// Per-axis coordinate lists of a center set that is a subset of a regular
/// lattice, with each center's index into the product grid.
fn lattice_structure(centers: &PointSet) -> Option<(Vec<Vec<f64>>, Vec<usize>)> {
    let n = centers.dim();
    let mut axes: Vec<Vec<f64>> = Vec::with_capacity(n);
    for k in 0..n {
        let mut v: Vec<f64> = centers.iter().map(|c| c[k]).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        if v.len() > 2 {
            let step = v[1] - v[0];
            for w in v.windows(2) {
                let d = w[1] - w[0];
                let m = (d / step).round();
                if m < 1.0 || (d - m * step).abs() > 1e-9 * step {
                    return None;
                }
            }
            // Fill holes so every axis is a full arithmetic progression.
            let count = ((v[v.len() - 1] - v[0]) / step).round() as usize + 1;
            let first = v[0];
            let filled: Vec<f64> = (0..count).map(|i| first + i as f64 * step).collect();
            // Keep the original values where they exist, so lookups are exact.
            let mut merged = filled;
            for &orig in &v {
                let i = ((orig - first) / step).round() as usize;
                merged[i] = orig;
            }
            v = merged;
        }
        axes.push(v);
    }
    let total: usize = axes.iter().map(Vec::len).product();
    if total > 16 * centers.len() + 4096 {
        return None;
    }
    let mut index = Vec::with_capacity(centers.len());
    for c in centers.iter() {
        let mut flat = 0;
        for (k, axis) in axes.iter().enumerate() {
            let i = axis.binary_search_by(|v| v.total_cmp(&c[k])).ok()?;
            flat = flat * axis.len() + i;
        }
        index.push(flat);
    }
    Some((axes, index))
}

/// Touching offsets for every center of a lattice subset.
///
/// Lattice grids use a separable upper-envelope transform over the product
/// grid spanned by the centers; other center lists fall back to
/// [`touching_offset_field_brute`] and set `brute_force_fallback`.
pub fn touching_offset_field(
    gamma: &ClosedSetSample,
    a: f64,
    centers: &PointSet,
) -> Result<OffsetField> {
    check_opening(a)?;
    if centers.dim() != gamma.n() {
        return Err(Error::DimensionMismatch {
            expected: gamma.n(),
            got: centers.dim(),
        });
    }
    if centers.is_empty() {
        return Ok(OffsetField {
            values: Vec::new(),
            brute_force_fallback: false,
        });
    }
    let Some((axes, index)) = lattice_structure(centers) else {
        return Ok(OffsetField {
            values: touching_offset_field_brute(gamma, a, centers)?,
            brute_force_fallback: true,
        });
    };
    let n = gamma.n();
    let mut positions = Vec::with_capacity(gamma.len() * n);
    let mut values = Vec::with_capacity(gamma.len());
    for z in gamma.points().iter() {
        positions.extend_from_slice(horizontal(z));
        values.push(height(z));
    }
    let field = product_grid_field(a, &positions, &values, &axes);
    Ok(OffsetField {
        values: index.into_iter().map(|i| field[i]).collect(),
        brute_force_fallback: false,
    })
}

/// Default contact band `aρ²/2 + 2ρ`.
pub fn default_contact_tolerance(a: f64, rho: f64) -> f64 {
    0.5 * a * rho * rho + 2.0 * rho
}

/// Samples with `z_{n+1} >= P_{a,x}(z') - tol`, as indices (ascending).
/// `tol = None` uses [`default_contact_tolerance`].
pub fn contact_points(
    gamma: &ClosedSetSample,
    a: f64,
    x: &[f64],
    tol: Option<f64>,
) -> Result<Vec<usize>> {
    let t = touching_offset(gamma, a, x)?;
    let tol = tol.unwrap_or_else(|| default_contact_tolerance(a, gamma.resolution()));
    if !(tol >= 0.0) {
        return Err(Error::Domain(format!("tolerance must be >= 0, got {tol}")));
    }
    let floor = t - tol - tie_slack(gamma, a, t);
    Ok((0..gamma.len())
        .filter(|&i| lift(a, x, gamma.point(i)) >= floor)
        .collect())
}

/// Rounding allowance when comparing lifted heights against the offset,
/// relative to the size of the terms involved (`|z'-x| <= 2` bounds the
/// paraboloid part by `2a`), so that very flat paraboloids still separate.
#[inline]
fn tie_slack(gamma: &ClosedSetSample, a: f64, t: f64) -> f64 {
    1e-12 * (t.abs() + gamma.height_bound() + 2.0 * a)
}

/// `η = (-a(z' - x), 1) / sqrt(1 + a^2 |z' - x|^2)`.
pub fn contact_normal(a: f64, x: &[f64], z: &[f64]) -> Vec<f64> {
    let zh = horizontal(z);
    let mut eta: Vec<f64> = zh.iter().zip(x).map(|(zi, xi)| -a * (zi - xi)).collect();
    eta.push(1.0);
    let s = dot(&eta, &eta).sqrt();
    eta.iter_mut().for_each(|e| *e /= s);
    eta
}

/// `Ψ(w, η) = w' + η' / (a η_{n+1})`.
pub fn vertex_map(a: f64, w: &[f64], eta: &[f64]) -> Result<Vec<f64>> {
    check_opening(a)?;
    let top = height(eta);
    if !(top > 0.0) {
        return Err(Error::Domain(format!(
            "vertex map needs an upward normal, got last component {top}"
        )));
    }
    Ok(horizontal(w)
        .iter()
        .zip(horizontal(eta))
        .map(|(wi, ei)| wi + ei / (a * top))
        .collect())
}

/// Horizontal bucket grid with per-cell maximum heights, for exact
/// branch-and-bound retrieval of samples above a downward paraboloid.
struct HeightBuckets {
    n: usize,
    per_axis: usize,
    side: f64,
    cells: Vec<Vec<usize>>,
    max_h: Vec<f64>,
}

impl HeightBuckets {
    fn new(gamma: &ClosedSetSample) -> Self {
        let n = gamma.n();
        let target = (gamma.len() as f64 / 16.0).max(1.0);
        let per_axis = (target.powf(1.0 / n as f64).round() as usize).clamp(1, 256);
        let side = 2.0 / per_axis as f64;
        let total = per_axis.pow(n as u32);
        let mut cells = vec![Vec::new(); total];
        let mut max_h = vec![f64::NEG_INFINITY; total];
        for (i, z) in gamma.points().iter().enumerate() {
            let mut flat = 0;
            for &c in horizontal(z) {
                let k = (((c + 1.0) / side).floor() as isize).clamp(0, per_axis as isize - 1);
                flat = flat * per_axis + k as usize;
            }
            cells[flat].push(i);
            max_h[flat] = max_h[flat].max(height(z));
        }
        Self {
            n,
            per_axis,
            side,
            cells,
            max_h,
        }
    }

    /// Sample indices with `lift(a, x, z) >= floor`, ascending.
    fn above(&self, gamma: &ClosedSetSample, a: f64, x: &[f64], floor: f64, h_max: f64) -> Vec<usize> {
        let reach2 = 2.0 * (h_max - floor) / a;
        if reach2 < 0.0 {
            return Vec::new();
        }
        let reach = reach2.sqrt();
        let lo: Vec<usize> = x
            .iter()
            .map(|&c| (((c - reach + 1.0) / self.side).floor().max(0.0) as usize).min(self.per_axis - 1))
            .collect();
        let hi: Vec<usize> = x
            .iter()
            .map(|&c| (((c + reach + 1.0) / self.side).floor().max(0.0) as usize).min(self.per_axis - 1))
            .collect();
        let mut out = Vec::new();
        let mut idx = lo.clone();
        loop {
            let mut flat = 0;
            let mut d2 = 0.0;
            for k in 0..self.n {
                flat = flat * self.per_axis + idx[k];
                let cell_lo = -1.0 + idx[k] as f64 * self.side;
                let gap = (cell_lo - x[k]).max(x[k] - cell_lo - self.side).max(0.0);
                d2 += gap * gap;
            }
            if self.max_h[flat] - 0.5 * a * d2 >= floor {
                out.extend(
                    self.cells[flat]
                        .iter()
                        .copied()
                        .filter(|&i| lift(a, x, gamma.point(i)) >= floor),
                );
            }
            let mut axis = self.n;
            loop {
                if axis == 0 {
                    out.sort_unstable();
                    return out;
                }
                axis -= 1;
                idx[axis] += 1;
                if idx[axis] <= hi[axis] {
                    break;
                }
                idx[axis] = lo[axis];
            }
        }
    }
}

/// All contact pairs of touching paraboloids with centers in `centers`.
///
/// Contacts are the exact maximizers (up to rounding) of
/// `z_{n+1} - (a/2)|z' - x|^2`; ties all become pairs. Pairs sharing a foot
/// sample are merged when their normals differ by at most `2aρ`.
/// Output order is the center order, then foot index.
pub fn contact_set(gamma: &ClosedSetSample, a: f64, centers: &PointSet) -> Result<ContactSet> {
    let field = touching_offset_field(gamma, a, centers)?;
    let buckets = HeightBuckets::new(gamma);
    let h_max = gamma.max_height();
    let rows: Vec<(&[f64], f64)> = centers.iter().zip(field.values.iter().copied()).collect();
    let per_center: Vec<Vec<ContactPair>> = rows
        .par_iter()
        .map(|&(x, t)| {
            let floor = t - 2.0 * tie_slack(gamma, a, t);
            let cand = buckets.above(gamma, a, x, floor, h_max);
            let best = cand
                .iter()
                .map(|&i| lift(a, x, gamma.point(i)))
                .fold(t, f64::max);
            let floor = best - tie_slack(gamma, a, best);
            cand.into_iter()
                .filter(|&i| lift(a, x, gamma.point(i)) >= floor)
                .map(|i| {
                    let z = gamma.point(i).to_vec();
                    ContactPair {
                        eta: contact_normal(a, x, &z),
                        z,
                        center: x.to_vec(),
                        opening: a,
                        foot: i,
                    }
                })
                .collect()
        })
        .collect();
    let rho = gamma.resolution();
    let pairs = dedup_pairs(per_center.into_iter().flatten().collect(), 2.0 * a * rho);
    let wall = 1.0 - 2.0 * rho;
    let boundary_touch = pairs
        .iter()
        .any(|p| geom::norm(horizontal(&p.z)) >= wall);
    Ok(ContactSet {
        opening: a,
        centers: centers.clone(),
        pairs,
        boundary_touch,
        brute_force_fallback: field.brute_force_fallback,
        resolution: rho,
    })
}

fn dedup_pairs(pairs: Vec<ContactPair>, max_angle: f64) -> Vec<ContactPair> {
    let mut kept_by_foot: std::collections::HashMap<usize, Vec<usize>> = Default::default();
    let mut out: Vec<ContactPair> = Vec::with_capacity(pairs.len());
    for p in pairs {
        let kept = kept_by_foot.entry(p.foot).or_default();
        let close = kept.iter().any(|&k| {
            let c = dot(&out[k].eta, &p.eta).clamp(-1.0, 1.0);
            c.acos() <= max_angle
        });
        if !close {
            kept.push(out.len());
            out.push(p);
        }
    }
    out
}

/// `A'`: horizontal projections of the distinct contact feet, in foot order.
pub fn project_contact_set(set: &ContactSet) -> PointSet {
    let n = set.centers.dim();
    let mut feet: Vec<(usize, &[f64])> = set.pairs.iter().map(|p| (p.foot, &p.z[..n])).collect();
    feet.sort_by_key(|f| f.0);
    feet.dedup_by_key(|f| f.0);
    let mut out = PointSet::with_capacity(n, feet.len());
    for (_, zh) in feet {
        out.push(zh);
    }
    out
}

/// Distinct contact feet as ambient points, in foot order.
pub fn contact_feet(set: &ContactSet) -> PointSet {
    let dim = set.centers.dim() + 1;
    let mut feet: Vec<(usize, &[f64])> = set.pairs.iter().map(|p| (p.foot, &p.z[..])).collect();
    feet.sort_by_key(|f| f.0);
    feet.dedup_by_key(|f| f.0);
    let mut out = PointSet::with_capacity(dim, feet.len());
    for (_, z) in feet {
        out.push(z);
    }
    out
}
