//! Both sides of the ABP-type inequalities for sampled sets, with box-counting
//! error bars and a verdict.
//!
//! Codimension one compares `ℋ^n(C)` against the projected contact set `A'`;
//! arbitrary codimension integrates the `ℋ^{n-m}` measure of the normal fibres
//! of the contact set over the feet of stratum `m`.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::{dot, Lattice, PointSet};
use crate::measure::{box_count_measure, MeasureEstimate};
use crate::normal::{stratum_dimension, viscosity_test};
use crate::paraboloid::{contact_feet, contact_set, project_contact_set, ContactSet};
use crate::scene::ClosedSetSample;
pub use crate::verdict::Verdict;

/// `4^{n-m} (2m + 4h)^m`.
pub fn gamma_theorem(n: usize, m: usize, h: f64) -> f64 {
    4f64.powi((n - m) as i32) * (2.0 * m as f64 + 4.0 * h).powi(m as i32)
}

/// `(2n + 4h)^n`.
pub fn gamma_codim1(n: usize, h: f64) -> f64 {
    (2.0 * n as f64 + 4.0 * h).powi(n as i32)
}

/// `(1 + a + 1/a)^{n-m}` and `(1 + a + h/a)^m`.
pub fn theorem_factors(n: usize, m: usize, h: f64, a: f64) -> (f64, f64) {
    (
        (1.0 + a + 1.0 / a).powi((n - m) as i32),
        (1.0 + a + h / a).powi(m as i32),
    )
}

/// `(1 + a + h/a)^n` and `sqrt(1 + 4a²)`.
pub fn codim1_factors(n: usize, h: f64, a: f64) -> (f64, f64) {
    ((1.0 + a + h / a).powi(n as i32), projection_factor(a))
}

/// `sqrt(1 + 4a²)`.
pub fn projection_factor(a: f64) -> f64 {
    (1.0 + 4.0 * a * a).sqrt()
}

/// Knobs shared by the ABP checks.
#[derive(Debug, Clone, PartialEq)]
pub struct AbpOptions {
    /// Admissible viscosity trials run to confirm the declared `(m, h)`;
    /// 0 skips the check.
    pub viscosity_trials: usize,
    pub seed: u64,
    /// Ball radius used to read off the stratum of a foot.
    pub stratum_radius: f64,
    /// Angular spacing of the direction net for strata.
    pub direction_resolution: f64,
}

impl Default for AbpOptions {
    fn default() -> Self {
        Self {
            viscosity_trials: 2000,
            seed: 0,
            stratum_radius: 0.25,
            direction_resolution: 0.1,
        }
    }
}

/// Normal fibre of the contact set over one foot.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberRecord {
    pub foot: usize,
    pub z: Vec<f64>,
    /// `ℋ^m` weight of the foot's cell.
    pub weight: f64,
    pub directions: usize,
    /// `ℋ^{n-m}` of the fibre.
    pub measure: f64,
    pub error: f64,
}

/// Both sides of one ABP inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct AbpReport {
    pub scene: String,
    pub n: usize,
    pub m: usize,
    pub h: f64,
    pub a: f64,
    pub rho: f64,
    pub lhs: MeasureEstimate,
    pub gamma: f64,
    pub factor1: f64,
    pub factor2: f64,
    /// `ℋ^n(A')` in codimension one, the fibre integral otherwise.
    pub measure_term: MeasureEstimate,
    pub rhs: f64,
    pub margin: f64,
    pub flags: Vec<&'static str>,
    pub verdict: Verdict,
    /// Per-foot fibres (arbitrary codimension only).
    pub fibers: Vec<FiberRecord>,
}

impl AbpReport {
    pub fn rhs_constant(&self) -> f64 {
        self.gamma * self.factor1 * self.factor2
    }

    /// Error allowance of the margin: `lhs_err + constant · measure_err`.
    pub fn combined_error(&self) -> f64 {
        self.lhs.error_bound + self.rhs_constant() * self.measure_term.error_bound
    }

    pub fn flags_string(&self) -> String {
        if self.flags.is_empty() {
            "none".into()
        } else {
            self.flags.join(";")
        }
    }
}

fn check_params(gamma: &ClosedSetSample, m: usize, h: f64, a: f64, c: &Lattice) -> Result<()> {
    let n = gamma.n();
    if m == 0 || m > n {
        return Err(Error::Domain(format!("m = {m} out of 1..={n}")));
    }
    if !(h >= 0.0) || !h.is_finite() {
        return Err(Error::Domain(format!("h must be finite and >= 0, got {h}")));
    }
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::Domain(format!("opening must be positive, got {a}")));
    }
    if c.points.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: c.points.dim(),
        });
    }
    if c.points.iter().any(|x| dot(x, x) > 1.0 + 1e-12) {
        return Err(Error::Domain("centers must lie in the closed unit ball".into()));
    }
    Ok(())
}

/// Box side for every measure of one check: four sample spacings, so that
/// oblique sets sampled at spacing `ρ` leave no empty boxes, shared by both
/// sides so their boundary overcounts are alike.
fn box_side(gamma: &ClosedSetSample, c: &Lattice) -> f64 {
    4.0 * gamma.resolution().max(c.spacing)
}

/// `ℋ^n(C)` of a center lattice.
fn lattice_measure(gamma: &ClosedSetSample, c: &Lattice) -> Result<MeasureEstimate> {
    box_count_measure(&c.points, c.points.dim(), box_side(gamma, c), c.spacing)
}

fn violates_mh(gamma: &ClosedSetSample, m: usize, h: f64, opts: &AbpOptions) -> Result<bool> {
    if opts.viscosity_trials == 0 {
        return Ok(false);
    }
    let rep = viscosity_test(gamma, m, h, opts.viscosity_trials, opts.seed)?;
    Ok(rep.failed > 0)
}

struct Sides {
    lhs: MeasureEstimate,
    gamma: f64,
    factor1: f64,
    factor2: f64,
    measure_term: MeasureEstimate,
}

/// Verdict order: missing hypotheses, then resolution, then the one-sided
/// comparison. A comparison that fails while contacts reach the cylinder wall
/// is attributed to the violated containment hypothesis.
fn decide(sides: &Sides, flags: &[&'static str]) -> (f64, f64, Verdict) {
    let constant = sides.gamma * sides.factor1 * sides.factor2;
    let rhs = constant * sides.measure_term.value;
    let margin = rhs - sides.lhs.value;
    let has = |f: &str| flags.contains(&f);
    let verdict = if has("empty_contact_set") || has("not_mh") || has("low_confidence") {
        Verdict::HypothesisViolated
    } else if sides.lhs.unreliable || sides.measure_term.unreliable {
        Verdict::InsufficientResolution
    } else if margin >= -(sides.lhs.error_bound + constant * sides.measure_term.error_bound) {
        Verdict::Holds
    } else if has("boundary_touch") {
        Verdict::HypothesisViolated
    } else {
        Verdict::Fails
    };
    (rhs, margin, verdict)
}

fn contact_flags(set: &ContactSet) -> Vec<&'static str> {
    let mut flags = Vec::new();
    if set.boundary_touch {
        flags.push("boundary_touch");
    }
    if set.is_empty() {
        flags.push("empty_contact_set");
    }
    if set.brute_force_fallback {
        flags.push("brute_force_fallback");
    }
    flags
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    gamma: &ClosedSetSample,
    m: usize,
    h: f64,
    a: f64,
    sides: Sides,
    mut flags: Vec<&'static str>,
    fibers: Vec<FiberRecord>,
) -> AbpReport {
    if sides.lhs.unreliable || sides.measure_term.unreliable {
        flags.push("unreliable_measure");
    }
    let (rhs, margin, verdict) = decide(&sides, &flags);
    AbpReport {
        scene: String::new(),
        n: gamma.n(),
        m,
        h,
        a,
        rho: gamma.resolution(),
        lhs: sides.lhs,
        gamma: sides.gamma,
        factor1: sides.factor1,
        factor2: sides.factor2,
        measure_term: sides.measure_term,
        rhs,
        margin,
        flags,
        verdict,
        fibers,
    }
}

/// `ℋ^n(C) <= (2n+4h)^n (1+a+h/a)^n sqrt(1+4a²) ℋ^n(A'_a(Γ; C))`.
pub fn abp_codim1(
    gamma: &ClosedSetSample,
    h: f64,
    a: f64,
    c: &Lattice,
    opts: &AbpOptions,
) -> Result<AbpReport> {
    let n = gamma.n();
    check_params(gamma, n, h, a, c)?;
    let set = contact_set(gamma, a, &c.points)?;
    let mut flags = contact_flags(&set);
    if violates_mh(gamma, n, h, opts)? {
        flags.push("not_mh");
    }
    let projected = project_contact_set(&set);
    let measure_term =
        box_count_measure(&projected, n, box_side(gamma, c), gamma.resolution())?;
    let (factor1, factor2) = codim1_factors(n, h, a);
    let sides = Sides {
        lhs: lattice_measure(gamma, c)?,
        gamma: gamma_codim1(n, h),
        factor1,
        factor2,
        measure_term,
    };
    Ok(assemble(gamma, n, h, a, sides, flags, Vec::new()))
}

/// Groups the contact normals by foot, feet ascending.
fn normals_by_foot(set: &ContactSet) -> BTreeMap<usize, Vec<&[f64]>> {
    let mut map: BTreeMap<usize, Vec<&[f64]>> = BTreeMap::new();
    for p in &set.pairs {
        map.entry(p.foot).or_default().push(&p.eta);
    }
    map
}

fn angle(u: &[f64], v: &[f64]) -> f64 {
    dot(u, v).clamp(-1.0, 1.0).acos()
}

/// Connected components of `dirs` under single linkage at `link` radians.
fn cluster_count(dirs: &[&[f64]], link: f64) -> usize {
    let mut label: Vec<usize> = (0..dirs.len()).collect();
    fn find(label: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while label[r] != r {
            r = label[r];
        }
        label[i] = r;
        r
    }
    for i in 0..dirs.len() {
        for j in 0..i {
            if angle(dirs[i], dirs[j]) <= link {
                let (ri, rj) = (find(&mut label, i), find(&mut label, j));
                label[ri.max(rj)] = ri.min(rj);
            }
        }
    }
    (0..dirs.len()).filter(|&i| find(&mut label, i) == i).count()
}

/// `ℋ^{n-m}` of one fibre and its error.
///
/// The centers touching at a fixed foot form a convex set (the touching
/// condition is linear in the center), so the fibre is geodesically convex:
/// a point in codimension zero, a great-circle arc in codimension one. Points
/// are counted as clusters linked at the normal spacing the center lattice
/// induces; arcs are measured by their angular diameter.
fn fiber_measure(dirs: &[&[f64]], codim: usize, link: f64) -> Result<(f64, f64)> {
    match codim {
        0 => Ok((cluster_count(dirs, link) as f64, 0.0)),
        1 => {
            let mut diam = 0.0f64;
            for i in 0..dirs.len() {
                for j in 0..i {
                    diam = diam.max(angle(dirs[i], dirs[j]));
                }
            }
            Ok((diam, link))
        }
        _ => Err(Error::Domain(format!(
            "fibre measures are implemented for n - m <= 1, got {codim}"
        ))),
    }
}

/// `ℋ^n(C) <= 4^{n-m}(2m+4h)^m (1+a+1/a)^{n-m} (1+a+h/a)^m
///   ∫_{Γ^(m)} ℋ^{n-m}{η : (z, η) ∈ A_a(Γ; C)} dℋ^m z`.
///
/// Feet enter the integral only when their estimated stratum is `m`.
pub fn abp_general(
    gamma: &ClosedSetSample,
    m: usize,
    h: f64,
    a: f64,
    c: &Lattice,
    opts: &AbpOptions,
) -> Result<AbpReport> {
    let n = gamma.n();
    check_params(gamma, m, h, a, c)?;
    let set = contact_set(gamma, a, &c.points)?;
    let mut flags = contact_flags(&set);
    if violates_mh(gamma, m, h, opts)? {
        flags.push("not_mh");
    }
    // Neighbouring lattice centers move the normal by at most a·spacing·sqrt(n).
    let link = 2.0 * a * c.spacing * (n as f64).sqrt();
    let by_foot: Vec<(usize, Vec<&[f64]>)> = normals_by_foot(&set).into_iter().collect();
    let fibers: Vec<Option<FiberRecord>> = by_foot
        .par_iter()
        .map(|(foot, dirs)| -> Result<Option<FiberRecord>> {
            let stratum =
                stratum_dimension(gamma, *foot, opts.stratum_radius, opts.direction_resolution)?;
            if stratum.low_confidence || stratum.dim != m {
                return Ok(None);
            }
            let (measure, error) = fiber_measure(dirs, n - m, link)?;
            Ok(Some(FiberRecord {
                foot: *foot,
                z: gamma.point(*foot).to_vec(),
                weight: gamma.weight(*foot),
                directions: dirs.len(),
                measure,
                error,
            }))
        })
        .collect::<Result<_>>()?;
    let fibers: Vec<FiberRecord> = fibers.into_iter().flatten().collect();
    if !set.is_empty() && fibers.is_empty() {
        flags.push("low_confidence");
    }
    let value: f64 = fibers.iter().map(|f| f.weight * f.measure).sum();
    let error: f64 = fibers.iter().map(|f| f.weight * f.error).sum();
    let measure_term = MeasureEstimate {
        value,
        dimension: n,
        resolution: gamma.resolution(),
        error_bound: error,
        unreliable: false,
    };
    let (factor1, factor2) = theorem_factors(n, m, h, a);
    let sides = Sides {
        lhs: lattice_measure(gamma, c)?,
        gamma: gamma_theorem(n, m, h),
        factor1,
        factor2,
        measure_term,
    };
    Ok(assemble(gamma, m, h, a, sides, flags, fibers))
}

/// `ℋ^n(B)` of the contact feet against `sqrt(1+4a²) ℋ^n(A')`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionReport {
    pub a: f64,
    pub feet: MeasureEstimate,
    pub projected: MeasureEstimate,
    pub ratio: f64,
    pub ratio_error: f64,
    pub bound: f64,
    pub verdict: Verdict,
}

fn ratio_with_error(num: &MeasureEstimate, den: &MeasureEstimate) -> (f64, f64) {
    let ratio = num.value / den.value;
    let rel = num.error_bound / num.value + den.error_bound / den.value;
    (ratio, ratio.abs() * rel)
}

/// Compares the feet measure against the projected one.
pub fn projection_inequality_check(
    gamma: &ClosedSetSample,
    a: f64,
    c: &Lattice,
) -> Result<ProjectionReport> {
    let n = gamma.n();
    check_params(gamma, n, 0.0, a, c)?;
    let set = contact_set(gamma, a, &c.points)?;
    let side = box_side(gamma, c);
    let feet = box_count_measure(&contact_feet(&set), n, side, gamma.resolution())?;
    let projected = box_count_measure(&project_contact_set(&set), n, side, gamma.resolution())?;
    let bound = projection_factor(a);
    if set.is_empty() || projected.value == 0.0 {
        return Ok(ProjectionReport {
            a,
            feet,
            projected,
            ratio: f64::NAN,
            ratio_error: f64::INFINITY,
            bound,
            verdict: Verdict::HypothesisViolated,
        });
    }
    let (ratio, ratio_error) = ratio_with_error(&feet, &projected);
    let verdict = if feet.unreliable || projected.unreliable {
        Verdict::InsufficientResolution
    } else if ratio <= bound + ratio_error {
        Verdict::Holds
    } else {
        Verdict::Fails
    };
    Ok(ProjectionReport {
        a,
        feet,
        projected,
        ratio,
        ratio_error,
        bound,
        verdict,
    })
}

/// `ℋ^n(A') / ℋ^n(C)` with its error bar.
#[derive(Debug, Clone, PartialEq)]
pub struct SavinReport {
    pub ratio: f64,
    pub ratio_error: f64,
    /// `A'` stays away from the cylinder wall.
    pub containment: bool,
    /// Reciprocal of the codimension-one constant at `h = 0`, an upper bound
    /// for the universal constant.
    pub reference: f64,
}

/// Empirical lower-bound constant of the projected contact measure.
pub fn savin_ratio(gamma: &ClosedSetSample, a: f64, c: &Lattice) -> Result<SavinReport> {
    let n = gamma.n();
    if !(a > 0.0 && a <= 1.0) {
        return Err(Error::Domain(format!("opening must lie in (0, 1], got {a}")));
    }
    check_params(gamma, n, 0.0, a, c)?;
    let set = contact_set(gamma, a, &c.points)?;
    let projected: PointSet = project_contact_set(&set);
    let am = box_count_measure(&projected, n, box_side(gamma, c), gamma.resolution())?;
    let cm = lattice_measure(gamma, c)?;
    let (ratio, ratio_error) = ratio_with_error(&am, &cm);
    let (f1, f2) = codim1_factors(n, 0.0, a);
    Ok(SavinReport {
        ratio,
        ratio_error,
        containment: !set.boundary_touch,
        reference: 1.0 / (gamma_codim1(n, 0.0) * f1 * f2),
    })
}
