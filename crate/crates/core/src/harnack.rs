//! Barrier construction and sliding argument behind the measure-to-point
//! estimate, and the weak-Harnack cascade of projected contact sets.
//!
//! The barrier glues `a r² φ(|x - x₀|/r)` to a touching paraboloid. With the
//! admissible openings (`a <= (16^{γ+1}+2)^{-1}`) the paraboloid part is
//! nearly flat; all vertical quantities scale with `a 16^γ`, so the numbers
//! involved span many decades but stay well inside `f64` range.

use rayon::prelude::*;

use crate::error::{hypothesis, Error, Result};
use crate::geom::{self, height, horizontal, Lattice, PointSet};
use crate::index::PointIndex;
use crate::measure::{box_count_measure, MeasureEstimate};
use crate::paraboloid::{contact_set, project_contact_set, touching_offset, Paraboloid};
use crate::scene::ClosedSetSample;
use crate::verdict::Verdict;

/// `φ(t)`: `-(16^γ - 1)/γ` on `[0, 1/16]`, `-(t^{-γ} - 1)/γ` on `[1/16, 1]`,
/// `0` beyond.
pub fn barrier_phi(gamma_b: f64, t: f64) -> f64 {
    if t <= 1.0 / 16.0 {
        -(16f64.powf(gamma_b) - 1.0) / gamma_b
    } else if t < 1.0 {
        // (1/t)^γ so that t = 1/16 reproduces 16^γ bit for bit.
        -((1.0 / t).powf(gamma_b) - 1.0) / gamma_b
    } else {
        0.0
    }
}

/// Depth of the barrier dent, `a r² (16^γ - 1)/γ`.
pub fn barrier_depth(gamma_b: f64, a: f64, r: f64) -> f64 {
    a * r * r * (16f64.powf(gamma_b) - 1.0) / gamma_b
}

/// Largest opening the barrier argument admits, `(16^{γ+1} + 2)^{-1}`.
pub fn max_barrier_opening(gamma_b: f64) -> f64 {
    1.0 / (16f64.powf(gamma_b + 1.0) + 2.0)
}

/// Largest opening meeting both `a <= (16^{γ+1}+2)^{-1}` and `a (θ+1) <= 1`.
pub fn admissible_opening(gamma_b: f64, theta: f64) -> f64 {
    max_barrier_opening(gamma_b).min(1.0 / (theta + 1.0))
}

/// `ψ = P_{a,x₁} + a r² φ(|x - x₀|/r)`, plus the slide shift and the
/// amplification used for the follow-up paraboloids.
#[derive(Debug, Clone, PartialEq)]
pub struct BarrierSpec {
    pub gamma_b: f64,
    pub opening: f64,
    /// `x₁`, center of the touching paraboloid.
    pub anchor: Vec<f64>,
    /// Vertical offset of `P_{a,x₁}`.
    pub anchor_offset: f64,
    /// `x₀`.
    pub center: Vec<f64>,
    pub radius: f64,
    /// Slide shift `t` (not part of `ψ`).
    pub shift: f64,
    pub theta: f64,
}

impl BarrierSpec {
    pub fn paraboloid(&self) -> Paraboloid {
        Paraboloid::new(self.anchor.clone(), self.opening, self.anchor_offset)
    }

    pub fn depth(&self) -> f64 {
        barrier_depth(self.gamma_b, self.opening, self.radius)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_b > 1.0) {
            return Err(Error::Domain(format!("exponent must exceed 1, got {}", self.gamma_b)));
        }
        if !(self.opening > 0.0) || !(self.radius > 0.0) {
            return Err(Error::Domain("opening and radius must be positive".into()));
        }
        if self.anchor.len() != self.center.len() {
            return Err(Error::DimensionMismatch {
                expected: self.center.len(),
                got: self.anchor.len(),
            });
        }
        if geom::norm(&self.center) + self.radius >= 1.0 {
            return Err(Error::Domain(format!(
                "B(x0, {}) leaves the unit ball",
                self.radius
            )));
        }
        Ok(())
    }
}

pub fn barrier_psi(spec: &BarrierSpec, x: &[f64]) -> f64 {
    let t = geom::dist(x, &spec.center) / spec.radius;
    spec.paraboloid().eval(x)
        + spec.opening * spec.radius * spec.radius * barrier_phi(spec.gamma_b, t)
}

/// Values of a function on the regular grid `origin + step · k`,
/// row-major with the last axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub origin: Vec<f64>,
    pub step: f64,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn sample(
        origin: Vec<f64>,
        step: f64,
        shape: Vec<usize>,
        f: impl Fn(&[f64]) -> f64 + Sync,
    ) -> Self {
        let total: usize = shape.iter().product();
        let mut grid = Self {
            origin,
            step,
            shape,
            values: Vec::new(),
        };
        grid.values = (0..total)
            .into_par_iter()
            .map(|k| f(&grid.point(&grid.unflatten(k))))
            .collect();
        grid
    }

    pub fn point(&self, node: &[usize]) -> Vec<f64> {
        self.origin
            .iter()
            .zip(node)
            .map(|(o, &k)| o + self.step * k as f64)
            .collect()
    }

    fn flatten(&self, node: &[usize]) -> usize {
        node.iter().zip(&self.shape).fold(0, |acc, (&k, &s)| acc * s + k)
    }

    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut node = vec![0; self.shape.len()];
        for (k, &s) in node.iter_mut().zip(&self.shape).rev() {
            *k = flat % s;
            flat /= s;
        }
        node
    }

    fn at_offset(&self, node: &[usize], offsets: &[(usize, isize)]) -> f64 {
        let mut idx = node.to_vec();
        for &(axis, d) in offsets {
            idx[axis] = (idx[axis] as isize + d) as usize;
        }
        self.values[self.flatten(&idx)]
    }
}

/// Normal that `trace Q_{Σ(ψ)}` is paired with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormalPairing {
    /// `(-∇ψ, 1) / sqrt(1 + |∇ψ|²)`.
    Unit,
    /// `(-∇ψ, 1)`.
    Lifted,
}

/// Trace of the second fundamental form of the graph of `ψ` at a grid node,
/// paired with the chosen upward normal, from central differences:
/// `Δψ - ∇ψᵀ D²ψ ∇ψ / (1 + |∇ψ|²)` for the lifted normal.
pub fn graph_trace_q(grid: &GridFunction, node: &[usize], pairing: NormalPairing) -> Result<f64> {
    let n = grid.shape.len();
    if node.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: node.len(),
        });
    }
    if node.iter().zip(&grid.shape).any(|(&k, &s)| k == 0 || k + 1 >= s) {
        return Err(Error::Domain(format!("node {node:?} has no full stencil")));
    }
    let h = grid.step;
    let c = grid.at_offset(node, &[]);
    let mut g = vec![0.0; n];
    let mut hess = vec![vec![0.0; n]; n];
    for i in 0..n {
        let p = grid.at_offset(node, &[(i, 1)]);
        let m = grid.at_offset(node, &[(i, -1)]);
        g[i] = (p - m) / (2.0 * h);
        hess[i][i] = (p - 2.0 * c + m) / (h * h);
        for j in 0..i {
            let pp = grid.at_offset(node, &[(i, 1), (j, 1)]);
            let pm = grid.at_offset(node, &[(i, 1), (j, -1)]);
            let mp = grid.at_offset(node, &[(i, -1), (j, 1)]);
            let mm = grid.at_offset(node, &[(i, -1), (j, -1)]);
            let v = (pp - pm - mp + mm) / (4.0 * h * h);
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }
    let w2 = 1.0 + geom::dot(&g, &g);
    let lap: f64 = (0..n).map(|i| hess[i][i]).sum();
    let ghg: f64 = (0..n)
        .map(|i| (0..n).map(|j| g[i] * hess[i][j] * g[j]).sum::<f64>())
        .sum();
    let lifted = lap - ghg / w2;
    Ok(match pairing {
        NormalPairing::Lifted => lifted,
        NormalPairing::Unit => lifted / w2.sqrt(),
    })
}

/// `n(1 + t^{-γ-2}) - (γ+2) t^{-γ-2} / 8`, the barrier trace bound divided by `a`.
pub fn calibration_expression(n: usize, gamma_b: f64, t: f64) -> f64 {
    let s = t.powf(-gamma_b - 2.0);
    n as f64 + (n as f64 - (gamma_b + 2.0) / 8.0) * s
}

/// Result of the exponent search.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaCalibration {
    pub n: usize,
    pub gamma_b: f64,
    pub safety: f64,
    /// Largest value of the scanned expression over `t ∈ [1/16, 1]`.
    pub worst: f64,
    /// Where it is attained.
    pub binding_t: f64,
    /// `required - worst >= 0`.
    pub margin: f64,
}

const SCAN_POINTS: usize = 1000;

fn scan_expression(n: usize, gamma_b: f64) -> (f64, f64) {
    (0..SCAN_POINTS)
        .map(|k| {
            let t = 1.0 / 16.0 + (1.0 - 1.0 / 16.0) * k as f64 / (SCAN_POINTS - 1) as f64;
            (calibration_expression(n, gamma_b, t), t)
        })
        .fold((f64::NEG_INFINITY, 1.0), |best, cur| if cur.0 > best.0 { cur } else { best })
}

/// Smallest `γ_b = 2^{k/16} > 1` whose expression stays at or below
/// `-(1 + 1/safety)` on a 10³-point scan of `[1/16, 1]`: the trace of the
/// barrier is then below `-a` with room to spare, hence below `-h` for every
/// `h < a`.
pub fn calibrate_gamma(n: usize, safety: f64) -> Result<GammaCalibration> {
    if n == 0 || !(safety > 1.0) {
        return Err(Error::Domain(format!("need n >= 1 and safety > 1, got {n}, {safety}")));
    }
    let required = -(1.0 + 1.0 / safety);
    for k in 1..=160 {
        let gamma_b = 2f64.powf(k as f64 / 16.0);
        let (worst, binding_t) = scan_expression(n, gamma_b);
        if worst <= required {
            return Ok(GammaCalibration {
                n,
                gamma_b,
                safety,
                worst,
                binding_t,
                margin: required - worst,
            });
        }
    }
    Err(Error::SearchExhausted(format!(
        "no exponent up to 1024 calibrates n = {n}"
    )))
}

/// Smallest power of two `θ` with `θ > 1024 (16^γ - 1)/γ`.
///
/// With `|y - z'| <= r/64` and `|x - z'| >= r/16`, `|x - y| >= 3r/64`, and the
/// offset of `Q_y` is at least `-(depth + θ a r²/8192)`; the bound makes
/// `θ a/2 ((3r/64)² - (r/64)²)` exceed the barrier depth.
pub fn calibrate_theta(gamma_b: f64) -> f64 {
    let bound = 1024.0 * (16f64.powf(gamma_b) - 1.0) / gamma_b;
    let mut theta = 2f64.powf(bound.log2().ceil());
    while theta <= bound {
        theta *= 2.0;
    }
    theta
}

/// Worst value of `trace + h sqrt(1 + |∇ψ|²)` over the annulus grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BarrierCertificate {
    pub checked: usize,
    pub worst: f64,
    pub worst_point: Vec<f64>,
    pub passed: bool,
}

/// Checks the strict barrier inequality at every grid node whose stencil lies
/// in the open annulus `r/16 < |x - x₀| < r` (where `ψ` is smooth).
///
/// The paraboloid offset does not enter second differences and is dropped.
pub fn certify_barrier(spec: &BarrierSpec, h: f64, step: f64) -> Result<BarrierCertificate> {
    spec.validate()?;
    let r = spec.radius;
    if step > r / 64.0 * (1.0 + 1e-12) {
        return Err(Error::GridTooCoarse(format!("step {step} exceeds r/64 = {}", r / 64.0)));
    }
    let n = spec.center.len();
    let half = (r / step).ceil() as usize + 2;
    let origin: Vec<f64> = spec.center.iter().map(|c| c - half as f64 * step).collect();
    let shape = vec![2 * half + 1; n];
    let flat = BarrierSpec {
        anchor_offset: 0.0,
        ..spec.clone()
    };
    let grid = GridFunction::sample(origin, step, shape, |x| barrier_psi(&flat, x));
    let reach = step * (n as f64).sqrt();
    let nodes: Vec<usize> = (0..grid.values.len())
        .filter(|&k| {
            let node = grid.unflatten(k);
            let d = geom::dist(&grid.point(&node), &spec.center);
            d - reach > r / 16.0 && d + reach < r
        })
        .collect();
    let values: Vec<(f64, usize)> = nodes
        .par_iter()
        .map(|&k| -> Result<(f64, usize)> {
            let node = grid.unflatten(k);
            let tr = graph_trace_q(&grid, &node, NormalPairing::Lifted)?;
            let g: f64 = (0..n)
                .map(|i| {
                    let d = (grid.at_offset(&node, &[(i, 1)]) - grid.at_offset(&node, &[(i, -1)]))
                        / (2.0 * step);
                    d * d
                })
                .sum();
            Ok((tr + h * (1.0 + g).sqrt(), k))
        })
        .collect::<Result<_>>()?;
    let (worst, at) = values
        .iter()
        .copied()
        .fold((f64::NEG_INFINITY, 0), |b, c| if c.0 > b.0 { c } else { b });
    Ok(BarrierCertificate {
        checked: values.len(),
        worst,
        worst_point: grid.point(&grid.unflatten(at)),
        passed: !values.is_empty() && worst < 0.0,
    })
}

/// Lowest shift `t` with `surface + t` above every sample, and the samples
/// attaining it.
#[derive(Debug, Clone, PartialEq)]
pub struct Slide {
    pub shift: f64,
    /// Sample indices within the band below the maximum, ascending.
    pub contacts: Vec<usize>,
}

/// `t = max_z (z_{n+1} - surface(z'))`; contacts are the samples within `tol`
/// of the maximum (`None`: rounding slack only).
pub fn slide_to_touch(
    gamma: &ClosedSetSample,
    surface: impl Fn(&[f64]) -> f64 + Sync,
    tol: Option<f64>,
) -> Result<Slide> {
    let lifts: Vec<(f64, f64)> = (0..gamma.len())
        .into_par_iter()
        .map(|i| {
            let z = gamma.point(i);
            let s = surface(horizontal(z));
            (height(z) - s, s)
        })
        .collect();
    if let Some(i) = lifts.iter().position(|(l, _)| !l.is_finite()) {
        return Err(Error::Domain(format!(
            "surface is not defined over sample {:?}",
            gamma.point(i)
        )));
    }
    let shift = lifts.iter().map(|l| l.0).fold(f64::NEG_INFINITY, f64::max);
    let scale = lifts.iter().map(|l| l.1.abs()).fold(0.0, f64::max) + gamma.height_bound();
    let band = tol.unwrap_or(0.0) + 1e-12 * (shift.abs() + scale);
    let contacts = (0..lifts.len())
        .filter(|&i| lifts[i].0 >= shift - band)
        .collect();
    Ok(Slide { shift, contacts })
}

/// Inputs of the measure-to-point pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureToPointParams {
    pub h: f64,
    pub a: f64,
    pub center: Vec<f64>,
    pub radius: f64,
    pub gamma_b: f64,
    pub theta: f64,
    /// Spacing of the center lattices; defaults to the sample resolution.
    pub center_spacing: Option<f64>,
    /// Spacing of the `y` sweep over `B(z', r/64)`; defaults to `r/512`.
    pub sweep_spacing: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureToPointReport {
    pub alpha: f64,
    pub gamma_b: f64,
    pub theta: f64,
    pub anchor: Option<Vec<f64>>,
    pub slide_shift: Option<f64>,
    /// `a r² (16^γ - 1)/γ`.
    pub slide_bound: f64,
    pub slide_ok: bool,
    pub localized: bool,
    /// Chosen touching point `z` inside `C̄_{r/16}(x₀)`.
    pub point: Option<Vec<f64>>,
    /// `P_{a,x₁}(z') - z_{n+1}`.
    pub height_gap: Option<f64>,
    /// Smallest `Q_y - P` over `|x - z'| >= r/16` across the sweep.
    pub q_slack: Option<f64>,
    pub sweep_localized: bool,
    pub sweep_feet: usize,
    /// `ℒ^n(A'_{αa} ∩ U(x₀, r/8)) / r^n`.
    pub beta_hat: Option<MeasureEstimate>,
    pub violations: Vec<Error>,
    pub verdict: Verdict,
}

impl MeasureToPointReport {
    fn rejected(alpha: f64, p: &MeasureToPointParams, violations: Vec<Error>) -> Self {
        Self {
            alpha,
            gamma_b: p.gamma_b,
            theta: p.theta,
            anchor: None,
            slide_shift: None,
            slide_bound: barrier_depth(p.gamma_b, p.a, p.radius),
            slide_ok: false,
            localized: false,
            point: None,
            height_gap: None,
            q_slack: None,
            sweep_localized: false,
            sweep_feet: 0,
            beta_hat: None,
            violations,
            verdict: Verdict::HypothesisViolated,
        }
    }
}

/// Measure of the projected points inside `U(center, radius)`, counted in
/// boxes of the lattice spacing (graph samples sit on that lattice).
fn projected_measure_in_ball(
    projected: &PointSet,
    center: &[f64],
    radius: f64,
    spacing: f64,
) -> Result<MeasureEstimate> {
    let mut inside = PointSet::new(projected.dim());
    for x in projected.iter() {
        if geom::dist(x, center) < radius {
            inside.push(x);
        }
    }
    box_count_measure(&inside, projected.dim(), spacing, spacing)
}

/// First lattice center (by distance to `x₀`) whose touching paraboloid has
/// a contact in `C_r(x₀)`, with that contact's horizontal distance.
fn find_anchor(
    gamma: &ClosedSetSample,
    a: f64,
    x0: &[f64],
    r: f64,
    spacing: f64,
) -> Result<Option<Vec<f64>>> {
    let n = gamma.n();
    let near = Lattice::filtered(n, spacing, x0, r, |x| geom::norm(x) <= 1.0)?;
    let far = Lattice::filtered(n, spacing, &vec![0.0; n], 1.0, |x| geom::dist(x, x0) > r)?;
    for batch in [near.points, far.points] {
        if batch.is_empty() {
            continue;
        }
        let set = contact_set(gamma, a, &batch)?;
        let best = set
            .pairs
            .iter()
            .map(|p| (geom::dist(horizontal(&p.z), x0), p))
            .filter(|(d, _)| *d < r)
            .min_by(|a, b| {
                a.0.total_cmp(&b.0)
                    .then(geom::dist(&a.1.center, x0).total_cmp(&geom::dist(&b.1.center, x0)))
            });
        if let Some((_, p)) = best {
            return Ok(Some(p.center.clone()));
        }
    }
    Ok(None)
}

/// Runs the barrier-and-slide argument around `B(x₀, r)` and measures the
/// projected contact set of opening `αa` near `x₀`, `α = θ + 1`.
pub fn measure_to_point(
    gamma: &ClosedSetSample,
    p: &MeasureToPointParams,
) -> Result<MeasureToPointReport> {
    let n = gamma.n();
    if p.center.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: p.center.len(),
        });
    }
    if !(p.a > 0.0) || !(p.radius > 0.0) || !(p.h >= 0.0) || !(p.gamma_b > 1.0) || !(p.theta > 0.0) {
        return Err(Error::Domain("need a, r, θ > 0, h >= 0 and γ > 1".into()));
    }
    let rho = gamma.resolution();
    let spacing = p.center_spacing.unwrap_or(rho);
    let alpha = p.theta + 1.0;
    let (a, r, x0) = (p.a, p.radius, &p.center);
    let mut violations = Vec::new();
    if !(p.h < a) {
        violations.push(hypothesis("h < a", format!("h = {}, a = {a}", p.h)));
    }
    if a * alpha > 1.0 + 1e-9 {
        violations.push(hypothesis("a <= 1/alpha", format!("a·α = {}", a * alpha)));
    }
    if a > max_barrier_opening(p.gamma_b) * (1.0 + 1e-12) {
        violations.push(hypothesis(
            "a <= (16^(γ+1)+2)^-1",
            format!("a = {a}, limit {}", max_barrier_opening(p.gamma_b)),
        ));
    }
    if geom::norm(x0) + r >= 1.0 {
        violations.push(hypothesis("B(x0,r) in U(0,1)", format!("|x0| + r = {}", geom::norm(x0) + r)));
    }
    if !violations.is_empty() {
        return Ok(MeasureToPointReport::rejected(alpha, p, violations));
    }
    let Some(anchor) = find_anchor(gamma, a, x0, r, spacing)? else {
        return Ok(MeasureToPointReport::rejected(
            alpha,
            p,
            vec![hypothesis("A'_a meets U(x0,r)", "no touching paraboloid has a contact there")],
        ));
    };
    let spec = BarrierSpec {
        gamma_b: p.gamma_b,
        opening: a,
        anchor_offset: touching_offset(gamma, a, &anchor)?,
        anchor: anchor.clone(),
        center: x0.clone(),
        radius: r,
        shift: 0.0,
        theta: p.theta,
    };
    spec.validate()?;
    let depth = spec.depth();
    let slide = slide_to_touch(gamma, |x| barrier_psi(&spec, x), None)?;
    let slide_ok = slide.shift > 0.0 && slide.shift <= depth * (1.0 + 1e-9);
    let inner = r / 16.0 + rho;
    let localized = slide
        .contacts
        .iter()
        .all(|&i| geom::dist(horizontal(gamma.point(i)), x0) <= inner);
    let mut report = MeasureToPointReport {
        alpha,
        gamma_b: p.gamma_b,
        theta: p.theta,
        anchor: Some(anchor.clone()),
        slide_shift: Some(slide.shift),
        slide_bound: depth,
        slide_ok,
        localized,
        point: None,
        height_gap: None,
        q_slack: None,
        sweep_localized: false,
        sweep_feet: 0,
        beta_hat: None,
        violations: Vec::new(),
        verdict: Verdict::HypothesisViolated,
    };
    if !localized {
        let stray = slide
            .contacts
            .iter()
            .map(|&i| geom::dist(horizontal(gamma.point(i)), x0))
            .fold(0.0, f64::max);
        report.violations.push(hypothesis(
            "(n,h) set near x0",
            format!("barrier contact at distance {stray} from x0, outside r/16 = {}", r / 16.0),
        ));
        return Ok(report);
    }
    let z_idx = *slide
        .contacts
        .iter()
        .min_by(|&&i, &&j| {
            geom::dist(horizontal(gamma.point(i)), x0)
                .total_cmp(&geom::dist(horizontal(gamma.point(j)), x0))
        })
        .expect("a slide always has a contact");
    let z = gamma.point(z_idx).to_vec();
    let zh = horizontal(&z).to_vec();
    let gap = spec.paraboloid().eval(&zh) - height(&z);
    report.point = Some(z.clone());
    report.height_gap = Some(gap);

    // Follow-up paraboloids Q_y = P + θa/2|x - y|² + c_y over y ∈ B(z', r/64).
    let sweep_spacing = p.sweep_spacing.unwrap_or(r / 512.0);
    let ys = Lattice::ball(n, &zh, r / 64.0, sweep_spacing)?.points;
    let paraboloid = spec.paraboloid();
    let theta_a = p.theta * a;
    let q_slack = ys
        .iter()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|y| {
            let c_y = (0..gamma.len())
                .map(|i| {
                    let w = gamma.point(i);
                    let wh = horizontal(w);
                    height(w) - paraboloid.eval(wh) - 0.5 * theta_a * geom::dist2(wh, y)
                })
                .fold(f64::NEG_INFINITY, f64::max);
            let gap = (r / 16.0 - geom::dist(y, &zh)).max(0.0);
            0.5 * theta_a * gap * gap + c_y
        })
        .reduce(|| f64::INFINITY, f64::min);
    report.q_slack = Some(q_slack);
    let mut q_centers = PointSet::with_capacity(n, ys.len());
    for y in ys.iter() {
        let c: Vec<f64> = y
            .iter()
            .zip(&anchor)
            .map(|(yi, xi)| (p.theta * yi + xi) / (1.0 + p.theta))
            .collect();
        q_centers.push(&c);
    }
    let sweep = contact_set(gamma, alpha * a, &q_centers)?;
    let sweep_proj = project_contact_set(&sweep);
    report.sweep_feet = sweep_proj.len();
    report.sweep_localized = sweep_proj
        .iter()
        .all(|x| geom::dist(x, &zh) <= r / 16.0 + rho);

    let centers = Lattice::ball(n, &vec![0.0; n], 1.0, spacing)?;
    let full = contact_set(gamma, alpha * a, &centers.points)?;
    let measure = projected_measure_in_ball(&project_contact_set(&full), x0, r / 8.0, spacing)?;
    let scale = r.powi(n as i32);
    let beta = MeasureEstimate {
        value: measure.value / scale,
        error_bound: measure.error_bound / scale,
        ..measure
    };
    report.beta_hat = Some(beta);
    let gap_ok = gap >= -1e-12 * (depth + gamma.height_bound()) && gap <= depth * (1.0 + 1e-9);
    report.verdict = if beta.unreliable {
        Verdict::InsufficientResolution
    } else if slide_ok && gap_ok && q_slack > 0.0 && report.sweep_localized && beta.value > 0.0 {
        Verdict::Holds
    } else {
        Verdict::Fails
    };
    Ok(report)
}

/// Weak-Harnack cascade over `B(0, 1/3)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarnackReport {
    pub scene: String,
    pub alpha: f64,
    pub k: u32,
    pub mu: f64,
    pub eps: f64,
    pub h: f64,
    /// Filled in when a measure-to-point run accompanies the cascade.
    pub beta_hat: Option<f64>,
    /// Openings `48 ε α^j`, `j = 0..=k`.
    pub openings: Vec<f64>,
    /// `ℒ^n(F_j)`.
    pub levels: Vec<MeasureEstimate>,
    pub ball: MeasureEstimate,
    pub monotone: bool,
    /// Touching points of the opening-`48ε` paraboloid centered at 0 lie in `C_{1/3}(0)`.
    pub containment: bool,
    pub residual: f64,
    pub residual_error: f64,
    /// `1 - μ^{1/k}`, the per-step gain the cascade needs, when it passes.
    pub beta1_needed: Option<f64>,
    pub violations: Vec<Error>,
    pub verdict: Verdict,
}

/// Checks `ℒ^n(B(0,1/3) ∖ A'_{α^{-1}}) <= μ ℒ^n(B(0,1/3))` and the growth of
/// `F_j = B(0,1/3) ∩ A'_{48εα^j}` with `ε = (48 α^{k+1})^{-1}`.
pub fn weak_harnack_check(
    gamma: &ClosedSetSample,
    h: f64,
    alpha: f64,
    k: u32,
    mu: f64,
    center_spacing: Option<f64>,
) -> Result<HarnackReport> {
    if !(alpha > 1.0) || k == 0 || !(mu > 0.0) || !(h >= 0.0) {
        return Err(Error::Domain("need α > 1, k >= 1, μ > 0, h >= 0".into()));
    }
    let floor = alpha.powi(-(k as i32) - 1);
    if !(floor.is_normal() && (48.0 * floor).is_normal()) || !alpha.powi(k as i32 + 1).is_finite() {
        return Err(Error::Domain(format!(
            "α^(-k-1) underflows for α = {alpha}, k = {k}"
        )));
    }
    let n = gamma.n();
    let rho = gamma.resolution();
    let spacing = center_spacing.unwrap_or(rho);
    let eps = 1.0 / (48.0 * alpha.powi(k as i32 + 1));
    let origin = vec![0.0; n];
    let ball_pts = Lattice::ball(n, &origin, 1.0 / 3.0, spacing)?.points;
    let ball = box_count_measure(&ball_pts, n, spacing, spacing)?;
    let mut report = HarnackReport {
        scene: String::new(),
        alpha,
        k,
        mu,
        eps,
        h,
        beta_hat: None,
        openings: Vec::new(),
        levels: Vec::new(),
        ball,
        monotone: false,
        containment: false,
        residual: f64::NAN,
        residual_error: f64::INFINITY,
        beta1_needed: None,
        violations: Vec::new(),
        verdict: Verdict::HypothesisViolated,
    };
    if !(h < floor) {
        report
            .violations
            .push(hypothesis("h < alpha^(-k-1)", format!("h = {h}, bound {floor}")));
    }
    let top = gamma.max_height();
    if top > 0.0 {
        report
            .violations
            .push(hypothesis("Gamma below x_{n+1} = 0", format!("max height {top}")));
    }
    let slab = gamma.points().iter().any(|z| {
        let zh = height(z);
        geom::norm(horizontal(z)) <= 0.25 && zh <= 0.0 && zh >= -floor / 48.0
    });
    if !slab {
        report.violations.push(hypothesis(
            "Gamma meets the slab",
            format!("no sample with |z'| <= 1/4 and -{} <= z_(n+1) <= 0", floor / 48.0),
        ));
    }
    if !report.violations.is_empty() {
        return Ok(report);
    }
    let first = crate::paraboloid::contact_points(gamma, 48.0 * eps, &origin, Some(0.0))?;
    report.containment = first
        .iter()
        .all(|&i| geom::norm(horizontal(gamma.point(i))) < 1.0 / 3.0);
    let centers = Lattice::ball(n, &origin, 1.0, spacing)?.points;
    for j in 0..=k {
        let opening = 48.0 * eps * alpha.powi(j as i32);
        let set = contact_set(gamma, opening, &centers)?;
        let m = projected_measure_in_ball(
            &project_contact_set(&set),
            &origin,
            1.0 / 3.0 + 1e-12,
            spacing,
        )?;
        report.openings.push(opening);
        report.levels.push(m);
    }
    report.monotone = report
        .levels
        .windows(2)
        .all(|w| w[1].value >= w[0].value - (w[0].error_bound + w[1].error_bound));
    let last = report.levels.last().copied().expect("k >= 1 gives levels");
    if report.levels[0].value == 0.0 {
        report
            .violations
            .push(hypothesis("F_0 nonempty", "no contact projects into B(0,1/3)"));
        return Ok(report);
    }
    report.residual = ((ball.value - last.value) / ball.value).max(0.0);
    report.residual_error = (ball.error_bound + last.error_bound) / ball.value;
    report.verdict = if ball.unreliable || last.unreliable {
        Verdict::InsufficientResolution
    } else if report.residual - report.residual_error <= mu {
        report.beta1_needed = Some(1.0 - mu.powf(1.0 / k as f64));
        Verdict::Holds
    } else {
        Verdict::Fails
    };
    Ok(report)
}

/// How far `A'_a` sits from `A'_{a'}` for `a <= a'`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    pub smaller: f64,
    pub larger: f64,
    pub checked: usize,
    /// Largest distance from a point of `A'_a` to `A'_{a'}`.
    pub max_gap: f64,
    pub tolerance: f64,
    pub holds: bool,
}

/// Checks `A'_a ⊆ A'_{a'}` up to a dilation by `2 max(ρ, spacing) sqrt(n)`.
pub fn opening_monotonicity(
    gamma: &ClosedSetSample,
    a: f64,
    a_larger: f64,
    centers: &Lattice,
) -> Result<MonotonicityReport> {
    if !(a > 0.0 && a <= a_larger) {
        return Err(Error::Domain(format!("need 0 < a <= a', got {a}, {a_larger}")));
    }
    let small = project_contact_set(&contact_set(gamma, a, &centers.points)?);
    let large = project_contact_set(&contact_set(gamma, a_larger, &centers.points)?);
    let tolerance =
        2.0 * gamma.resolution().max(centers.spacing) * (gamma.n() as f64).sqrt();
    let max_gap = if small.is_empty() {
        0.0
    } else if large.is_empty() {
        f64::INFINITY
    } else {
        let index = PointIndex::build(&large)?;
        small
            .iter()
            .map(|x| index.nearest(x).1)
            .fold(0.0, f64::max)
    };
    Ok(MonotonicityReport {
        smaller: a,
        larger: a_larger,
        checked: small.len(),
        max_gap,
        tolerance,
        holds: max_gap <= tolerance,
    })
}

#[cfg(test)]
mod tests;
