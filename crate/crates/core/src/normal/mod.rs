//! Generalized normal bundle `N_r(Γ) = {(z, η) : δ_Γ(z + rη) = r}`, strata
//! and principal curvatures of sampled sets.
//!
//! Curvatures are read off the distance function: at `p = z + rη` the
//! Hessian of `δ_Γ` restricted to `η^⊥` has eigenvalues `χ_i`, and the
//! principal curvatures at the foot are `κ_i = χ_i / (1 - rχ_i)`. Where
//! `1 - rχ_i` vanishes up to the stencil resolution the curvature is reported
//! as `+∞`.

mod viscosity;

use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;

pub use viscosity::{
    barrier_eigen_check, viscosity_test, BarrierVerdict, TestFunction, ViscosityReport,
    ViscosityWitness,
};

use crate::error::{Error, Result};
use crate::geom::{self, complement_basis, direction_net, sym_eigen};
use crate::numfmt::fmt_num;
use crate::scene::ClosedSetSample;

/// Tolerance multiple of `ρ` for the defining identity `δ(z + rη) = r`.
pub const REACH_TOL_FACTOR: f64 = 3.0;

/// An element `(z, η)` of `N_r(Γ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalSample {
    /// Index of `z` in the sample set.
    pub foot: usize,
    pub z: Vec<f64>,
    pub eta: Vec<f64>,
    pub r: f64,
}

impl NormalSample {
    /// `z + rη`.
    pub fn offset_point(&self) -> Vec<f64> {
        geom::add_scaled(&self.z, self.r, &self.eta)
    }
}

/// Principal curvatures at a normal sample, ascending with `+∞` last.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureRecord {
    pub sample: NormalSample,
    pub step: f64,
    pub tangent_dim: usize,
    pub kappas: Vec<f64>,
    /// Sum of the finite `κ_i` with `i <= tangent_dim`.
    pub finite_trace: f64,
}

impl CurvatureRecord {
    pub fn has_sentinel(&self) -> bool {
        self.kappas.iter().any(|k| k.is_infinite())
    }
}

/// Writes records as rows `z…, eta…, r, tangent_dim, kappa…, finite_trace`.
pub fn write_curvature_table<W: Write>(records: &[CurvatureRecord], mut out: W) -> Result<()> {
    let Some(first) = records.first() else {
        writeln!(out, "z,eta,r,tangent_dim,kappas,finite_trace")?;
        return Ok(());
    };
    let dim = first.sample.z.len();
    let mut header: Vec<String> = Vec::new();
    for prefix in ["z", "eta"] {
        header.extend((0..dim).map(|i| format!("{prefix}{i}")));
    }
    header.push("r".into());
    header.push("tangent_dim".into());
    header.extend((0..dim - 1).map(|i| format!("kappa{i}")));
    header.push("finite_trace".into());
    writeln!(out, "{}", header.join(","))?;
    for rec in records {
        let mut row: Vec<String> = rec
            .sample
            .z
            .iter()
            .chain(&rec.sample.eta)
            .chain(std::iter::once(&rec.sample.r))
            .map(|&v| fmt_num(v))
            .collect();
        row.push(rec.tangent_dim.to_string());
        row.extend(rec.kappas.iter().map(|&k| fmt_num(k)));
        row.push(fmt_num(rec.finite_trace));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

fn reach_tolerance(gamma: &ClosedSetSample) -> f64 {
    REACH_TOL_FACTOR * gamma.resolution()
}

/// Whether `(z, η)` passes `|δ(z + rη) - r| <= 3ρ`.
pub fn in_normal_bundle(gamma: &ClosedSetSample, z: &[f64], eta: &[f64], r: f64) -> Result<bool> {
    let p = geom::add_scaled(z, r, eta);
    Ok((gamma.distance(&p)? - r).abs() <= reach_tolerance(gamma))
}

/// `N_r(Γ)` restricted to the given feet, over a direction net on `S^n`.
/// Output order: foot order as given, then direction-net order.
pub fn sample_normal_bundle_at(
    gamma: &ClosedSetSample,
    feet: &[usize],
    r: f64,
    direction_resolution: f64,
) -> Result<Vec<NormalSample>> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("radius must be positive, got {r}")));
    }
    let dirs = direction_net(gamma.ambient_dim(), direction_resolution)?;
    let tol = reach_tolerance(gamma);
    let per_foot: Vec<Vec<NormalSample>> = feet
        .par_iter()
        .map(|&i| {
            let z = gamma.point(i);
            dirs.iter()
                .filter(|eta| {
                    let p = geom::add_scaled(z, r, eta);
                    (gamma.index().nearest(&p).1 - r).abs() <= tol
                })
                .map(|eta| NormalSample {
                    foot: i,
                    z: z.to_vec(),
                    eta: eta.clone(),
                    r,
                })
                .collect()
        })
        .collect();
    Ok(per_foot.into_iter().flatten().collect())
}

/// `N_r(Γ)` over every sample.
pub fn sample_normal_bundle(
    gamma: &ClosedSetSample,
    r: f64,
    direction_resolution: f64,
) -> Result<Vec<NormalSample>> {
    let all: Vec<usize> = (0..gamma.len()).collect();
    sample_normal_bundle_at(gamma, &all, r, direction_resolution)
}

/// Estimated stratum of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StratumEstimate {
    /// `n + 1 - rank` of the accepted directions.
    pub dim: usize,
    pub accepted: usize,
    /// No direction was accepted.
    pub low_confidence: bool,
}

/// `m̂ = (n+1) - rank{η : (z, η) ∈ N_r}`.
///
/// Singular values of the direction matrix (normalized by the number of
/// directions) count towards the rank above `max(10ρ/r, sqrt(6ρ/r))`. The
/// second term is the half-angle of the cone of directions that the `3ρ`
/// reach tolerance admits around a single smooth normal, so that cone alone
/// never raises the rank.
pub fn stratum_dimension(
    gamma: &ClosedSetSample,
    foot: usize,
    r: f64,
    direction_resolution: f64,
) -> Result<StratumEstimate> {
    let dim = gamma.ambient_dim();
    let accepted = sample_normal_bundle_at(gamma, &[foot], r, direction_resolution)?;
    if accepted.is_empty() {
        return Ok(StratumEstimate {
            dim,
            accepted: 0,
            low_confidence: true,
        });
    }
    let mut m = DMatrix::zeros(dim, dim);
    for s in &accepted {
        for a in 0..dim {
            for b in 0..dim {
                m[(a, b)] += s.eta[a] * s.eta[b];
            }
        }
    }
    m /= accepted.len() as f64;
    let (vals, _) = sym_eigen(&m);
    let rel = gamma.resolution() / r;
    let threshold = (10.0 * rel).max((2.0 * REACH_TOL_FACTOR * rel).sqrt());
    let rank = vals.iter().filter(|&&l| l.max(0.0).sqrt() > threshold).count();
    Ok(StratumEstimate {
        dim: dim - rank,
        accepted: accepted.len(),
        low_confidence: false,
    })
}

/// `κ = χ / (1 - rχ)`, or `+∞` when `|1 - rχ| <= 10·step/r`.
pub fn transfer_curvature(chi: f64, r: f64, step: f64) -> f64 {
    let denom = 1.0 - r * chi;
    if denom.abs() <= 10.0 * step / r {
        f64::INFINITY
    } else {
        chi / denom
    }
}

/// Principal curvatures at `sample` from second differences of `δ_Γ` around
/// `z + rη`, within `η^⊥`.
pub fn principal_curvatures(
    gamma: &ClosedSetSample,
    sample: &NormalSample,
    step: f64,
) -> Result<CurvatureRecord> {
    let rho = gamma.resolution();
    let r = sample.r;
    if !(step >= 2.0 * rho * (1.0 - 1e-9) && step <= 0.25 * r * (1.0 + 1e-9)) {
        return Err(Error::Domain(format!(
            "step {step} outside [2ρ, r/4] = [{}, {}]",
            2.0 * rho,
            0.25 * r
        )));
    }
    let p = sample.offset_point();
    let basis = complement_basis(&sample.eta);
    let k = basis.len();
    let index = gamma.index();
    let (centre_foot, d0) = index.nearest(&p);
    let jump_limit = 4.0 * step + 4.0 * rho;
    let centre_z = gamma.point(centre_foot);
    let probe = |q: &[f64]| -> Result<f64> {
        let (i, d) = index.nearest(q);
        if geom::dist(gamma.point(i), centre_z) > jump_limit {
            return Err(Error::AmbiguousProjection(format!(
                "nearest point jumps by {:.3e} within the stencil at foot {}",
                geom::dist(gamma.point(i), centre_z),
                sample.foot
            )));
        }
        Ok(d)
    };
    let shifted = |coeffs: &[(usize, f64)]| -> Vec<f64> {
        let mut q = p.clone();
        for &(axis, c) in coeffs {
            for (qi, bi) in q.iter_mut().zip(&basis[axis]) {
                *qi += c * step * bi;
            }
        }
        q
    };
    let mut hess = DMatrix::zeros(k, k);
    let h2 = step * step;
    for i in 0..k {
        let plus = probe(&shifted(&[(i, 1.0)]))?;
        let minus = probe(&shifted(&[(i, -1.0)]))?;
        hess[(i, i)] = (plus - 2.0 * d0 + minus) / h2;
        for j in 0..i {
            let pp = probe(&shifted(&[(i, 1.0), (j, 1.0)]))?;
            let pm = probe(&shifted(&[(i, 1.0), (j, -1.0)]))?;
            let mp = probe(&shifted(&[(i, -1.0), (j, 1.0)]))?;
            let mm = probe(&shifted(&[(i, -1.0), (j, -1.0)]))?;
            let v = (pp - pm - mp + mm) / (4.0 * h2);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    let (chis, _) = sym_eigen(&hess);
    let mut kappas: Vec<f64> = chis.iter().map(|&c| transfer_curvature(c, r, step)).collect();
    kappas.sort_by(f64::total_cmp);
    let finite = kappas.iter().filter(|k| k.is_finite()).count();
    let tangent_dim = if gamma.oracle().is_some() {
        gamma.intrinsic_dim()
    } else {
        finite
    };
    let finite_trace = kappas
        .iter()
        .take(tangent_dim)
        .filter(|k| k.is_finite())
        .sum();
    Ok(CurvatureRecord {
        sample: sample.clone(),
        step,
        tangent_dim,
        kappas,
        finite_trace,
    })
}

/// [`principal_curvatures`] over many samples; ambiguous stencils are skipped
/// and counted.
pub fn curvature_records(
    gamma: &ClosedSetSample,
    samples: &[NormalSample],
    step: f64,
) -> Result<(Vec<CurvatureRecord>, usize)> {
    let results: Vec<Result<CurvatureRecord>> = samples
        .par_iter()
        .map(|s| principal_curvatures(gamma, s, step))
        .collect();
    let mut records = Vec::with_capacity(results.len());
    let mut skipped = 0;
    for r in results {
        match r {
            Ok(rec) => records.push(rec),
            Err(Error::AmbiguousProjection(_)) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok((records, skipped))
}

/// Outcome of checking `Σ_{i<=m} κ_i <= h` over curvature records.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceReport {
    pub m: usize,
    pub h: f64,
    /// `h - trace` per record.
    pub margins: Vec<f64>,
    /// Per-record tolerance `5·step/r + 10ρ/r`.
    pub tolerances: Vec<f64>,
    pub violations: usize,
    pub worst_margin: f64,
    /// `|trace + H(z)·η|` per record when the scene has an analytic mean
    /// curvature vector.
    pub equality_residuals: Option<Vec<f64>>,
}

/// Sum of the finite `κ_i` among the first `m`.
pub fn trace_m(rec: &CurvatureRecord, m: usize) -> f64 {
    rec.kappas.iter().take(m).filter(|k| k.is_finite()).sum()
}

pub fn check_trace_bound(
    gamma: &ClosedSetSample,
    m: usize,
    h: f64,
    records: &[CurvatureRecord],
) -> TraceReport {
    let rho = gamma.resolution();
    let mut margins = Vec::with_capacity(records.len());
    let mut tolerances = Vec::with_capacity(records.len());
    let mut violations = 0;
    let mut worst = f64::INFINITY;
    for rec in records {
        let margin = h - trace_m(rec, m);
        let tol = 5.0 * rec.step / rec.sample.r + 10.0 * rho / rec.sample.r;
        if margin < -tol {
            violations += 1;
        }
        worst = worst.min(margin);
        margins.push(margin);
        tolerances.push(tol);
    }
    let equality_residuals = gamma.oracle().and_then(|o| {
        records
            .iter()
            .map(|rec| {
                o.mean_curvature_vector(&rec.sample.z)
                    .map(|hv| (trace_m(rec, m) + geom::dot(&hv, &rec.sample.eta)).abs())
            })
            .collect::<Option<Vec<f64>>>()
    });
    TraceReport {
        m,
        h,
        margins,
        tolerances,
        violations,
        worst_margin: worst,
        equality_residuals,
    }
}

/// Points of the level set `{δ_Γ = r}` straight above (or below) a graph
/// scene, found by bisection on vertical lines over `count` equally spaced
/// abscissae in `(-1, 1)^n` (n = 1), with arc-length weights.
///
/// Each point is returned as the normal sample `(ξ(p), (p - ξ(p))/r, r)`.
pub fn offset_curve_samples(
    gamma: &ClosedSetSample,
    r: f64,
    upward: bool,
    count: usize,
) -> Result<Vec<(NormalSample, f64)>> {
    if gamma.n() != 1 {
        return Err(Error::Domain("offset curves are sampled for n = 1 only".into()));
    }
    if count < 2 || !(r > 0.0) {
        return Err(Error::Domain(format!("need count >= 2 and r > 0 (got {count}, {r})")));
    }
    let sign = if upward { 1.0 } else { -1.0 };
    let extent = gamma.height_bound() + 2.0 * r + 1.0;
    let xs: Vec<f64> = (0..count)
        .map(|i| -1.0 + 2.0 * r + (2.0 - 4.0 * r) * (i as f64 + 0.5) / count as f64)
        .collect();
    let index = gamma.index();
    let rho = gamma.resolution();
    // Samples sorted by abscissa, heights flipped to the sampling side.
    let mut columns: Vec<(f64, f64)> = gamma.points().iter().map(|z| (z[0], sign * z[1])).collect();
    columns.sort_by(|a, b| a.0.total_cmp(&b.0));
    let level_points: Vec<Vec<f64>> = xs
        .par_iter()
        .map(|&x| {
            // Walk from far away towards the set; δ decreases to the first hit.
            let mut far = extent;
            let mut near = -extent;
            // Bracket: at `far` δ > r, at the lowest/highest sample height δ <= r.
            let lo = columns.partition_point(|c| c.0 < x - rho);
            let top_of_set = columns[lo..]
                .iter()
                .take_while(|c| c.0 <= x + rho)
                .map(|c| c.1)
                .fold(f64::NEG_INFINITY, f64::max);
            if top_of_set.is_finite() {
                near = top_of_set;
            }
            for _ in 0..80 {
                let mid = 0.5 * (far + near);
                if index.nearest(&[x, sign * mid]).1 > r {
                    far = mid;
                } else {
                    near = mid;
                }
            }
            vec![x, sign * 0.5 * (far + near)]
        })
        .collect();
    let mut out = Vec::with_capacity(count);
    for (i, p) in level_points.iter().enumerate() {
        let prev = if i > 0 { &level_points[i - 1] } else { p };
        let next = if i + 1 < count { &level_points[i + 1] } else { p };
        let w = 0.5 * (geom::dist(p, prev) + geom::dist(p, next));
        let (foot, d) = index.nearest(p);
        let z = gamma.point(foot).to_vec();
        let eta: Vec<f64> = p.iter().zip(&z).map(|(a, b)| (a - b) / d).collect();
        out.push((
            NormalSample {
                foot,
                z,
                eta,
                r: d,
            },
            w,
        ));
    }
    Ok(out)
}
