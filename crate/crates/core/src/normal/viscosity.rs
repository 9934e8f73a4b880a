//! Quadratic test functions for the `(m, h)` condition
//! `trace_m D²f(x) <= h |∇f(x)|` at local maxima of `f|Γ`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::{self, sym_eigen};
use crate::scene::ClosedSetSample;

/// `f(y) = g·(y - x₀) + ½ (y - x₀)ᵀ H (y - x₀)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    pub base: Vec<f64>,
    pub gradient: Vec<f64>,
    pub hessian: DMatrix<f64>,
}

impl TestFunction {
    pub fn new(base: Vec<f64>, gradient: Vec<f64>, hessian: DMatrix<f64>) -> Result<Self> {
        let d = base.len();
        if gradient.len() != d || hessian.nrows() != d || hessian.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: gradient.len(),
            });
        }
        if geom::norm(&gradient) == 0.0 {
            return Err(Error::Domain("test function needs a nonzero gradient".into()));
        }
        Ok(Self {
            base,
            gradient,
            hessian: 0.5 * (&hessian + hessian.transpose()),
        })
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        let d = geom::sub(y, &self.base);
        let hd = &self.hessian * nalgebra::DVector::from_column_slice(&d);
        geom::dot(&self.gradient, &d) + 0.5 * geom::dot(&d, hd.as_slice())
    }

    pub fn grad_at(&self, y: &[f64]) -> Vec<f64> {
        let d = geom::sub(y, &self.base);
        let hd = &self.hessian * nalgebra::DVector::from_column_slice(&d);
        self.gradient.iter().zip(hd.iter()).map(|(g, h)| g + h).collect()
    }

    /// Sum of the `m` lowest Hessian eigenvalues.
    pub fn trace_m(&self, m: usize) -> f64 {
        geom::trace_lowest(&self.hessian, m)
    }

    /// Spectral norm of the Hessian.
    pub fn hessian_norm(&self) -> f64 {
        let (vals, _) = sym_eigen(&self.hessian);
        vals.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// A test function maximized on the samples at `point` that violates the
/// `(m, h)` inequality beyond tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct ViscosityWitness {
    pub point: Vec<f64>,
    pub gradient: Vec<f64>,
    pub hessian_eigenvalues: Vec<f64>,
    pub trace_m: f64,
    /// `h |∇f| + tol`.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViscosityReport {
    pub m: usize,
    pub h: f64,
    pub requested: usize,
    pub attempts: usize,
    pub admissible: usize,
    /// Attempts whose sampled maximum was not interior to the window.
    pub skipped: usize,
    pub passed: usize,
    pub failed: usize,
    /// Smallest `h|∇f| + tol - trace_m` over admissible trials.
    pub worst_margin: f64,
    /// Up to 16 failing trials, in attempt order.
    pub witnesses: Vec<ViscosityWitness>,
}

impl ViscosityReport {
    pub fn pass_rate(&self) -> f64 {
        if self.admissible == 0 {
            0.0
        } else {
            self.passed as f64 / self.admissible as f64
        }
    }
}

/// Radius of the window in which a test function must attain its sample maximum.
const WINDOW: f64 = 0.2;
/// The maximizer must lie this close to the window center.
const INTERIOR: f64 = 0.1;
const MAX_WITNESSES: usize = 16;
const ATTEMPTS_PER_TRIAL: usize = 50;
const BATCH: usize = 256;

enum Trial {
    Skipped,
    Checked {
        margin: f64,
        witness: Option<ViscosityWitness>,
    },
}

/// Per-attempt seed: one stream per attempt index keeps results independent
/// of scheduling.
fn attempt_rng(seed: u64, attempt: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(attempt as u64);
    rng
}

/// Tolerance `|H|ρ(1 + h)`: the sample maximizer sits within `ρ` of the
/// continuum one, moving `∇f` by at most `|H|ρ`.
fn tolerance(f: &TestFunction, rho: f64, h: f64) -> f64 {
    f.hessian_norm() * rho * (1.0 + h)
}

/// Samples whose whole window stays inside the cylinder, so that a maximum
/// cannot be an artifact of the sampling stopping at the wall.
fn eligible_bases(gamma: &ClosedSetSample) -> Vec<usize> {
    let limit = 1.0 - WINDOW - gamma.resolution();
    (0..gamma.len())
        .filter(|&i| geom::norm(geom::horizontal(gamma.point(i))) <= limit)
        .collect()
}

fn run_attempt(
    gamma: &ClosedSetSample,
    bases: &[usize],
    m: usize,
    h: f64,
    seed: u64,
    attempt: usize,
) -> Trial {
    let mut rng = attempt_rng(seed, attempt);
    let dim = gamma.ambient_dim();
    let c_idx = bases[rng.random_range(0..bases.len())];
    let c = gamma.point(c_idx).to_vec();
    let dir: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let Some(dir) = geom::normalized(&dir) else {
        return Trial::Skipped;
    };
    let g_mag = rng.random_range(0.2..1.0);
    let gradient: Vec<f64> = dir.iter().map(|d| d * g_mag).collect();
    let scale = 10f64.powf(rng.random_range(0.0..1.7));
    let mut hess = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..=i {
            let v = scale * rng.sample::<f64, _>(StandardNormal);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    let Ok(f) = TestFunction::new(c.clone(), gradient, hess) else {
        return Trial::Skipped;
    };
    let window = gamma.index().within(&c, WINDOW);
    let mut best = (f64::NEG_INFINITY, c_idx);
    for &i in &window {
        let v = f.eval(gamma.point(i));
        if v > best.0 {
            best = (v, i);
        }
    }
    let z = gamma.point(best.1);
    if geom::dist(z, &c) > INTERIOR {
        return Trial::Skipped;
    }
    let grad = f.grad_at(z);
    let gnorm = geom::norm(&grad);
    if gnorm < 1e-9 {
        return Trial::Skipped;
    }
    let tr = f.trace_m(m);
    let bound = h * gnorm + tolerance(&f, gamma.resolution(), h);
    let margin = bound - tr;
    let witness = (margin < 0.0).then(|| ViscosityWitness {
        point: z.to_vec(),
        gradient: grad,
        hessian_eigenvalues: sym_eigen(&f.hessian).0,
        trace_m: tr,
        bound,
    });
    Trial::Checked { margin, witness }
}

/// Randomized check of the `(m, h)` condition with quadratic test functions.
///
/// Each attempt draws a base sample `c` whose 0.2-window lies inside the
/// cylinder, a gradient and a Hessian, and finds
/// the maximizer `z` of `f` over the samples within 0.2 of `c`; the attempt is
/// admissible when `|z - c| <= 0.1` and `∇f(z) ≠ 0`. Attempts continue until
/// `trials` admissible ones are found or `50·trials` attempts are spent.
pub fn viscosity_test(
    gamma: &ClosedSetSample,
    m: usize,
    h: f64,
    trials: usize,
    seed: u64,
) -> Result<ViscosityReport> {
    if trials == 0 {
        return Err(Error::Domain("trials must be positive".into()));
    }
    if m == 0 || m > gamma.ambient_dim() {
        return Err(Error::Domain(format!("m = {m} out of range")));
    }
    let mut report = ViscosityReport {
        m,
        h,
        requested: trials,
        attempts: 0,
        admissible: 0,
        skipped: 0,
        passed: 0,
        failed: 0,
        worst_margin: f64::INFINITY,
        witnesses: Vec::new(),
    };
    let bases = eligible_bases(gamma);
    if bases.is_empty() {
        return Err(Error::Domain(
            "no sample is far enough from the cylinder wall for a test window".into(),
        ));
    }
    let cap = ATTEMPTS_PER_TRIAL * trials;
    let mut next = 0;
    'outer: while next < cap {
        let end = (next + BATCH).min(cap);
        let batch: Vec<Trial> = (next..end)
            .into_par_iter()
            .map(|k| run_attempt(gamma, &bases, m, h, seed, k))
            .collect();
        for t in batch {
            report.attempts += 1;
            match t {
                Trial::Skipped => report.skipped += 1,
                Trial::Checked { margin, witness } => {
                    report.admissible += 1;
                    report.worst_margin = report.worst_margin.min(margin);
                    match witness {
                        Some(w) => {
                            report.failed += 1;
                            if report.witnesses.len() < MAX_WITNESSES {
                                report.witnesses.push(w);
                            }
                        }
                        None => report.passed += 1,
                    }
                    if report.admissible == trials {
                        break 'outer;
                    }
                }
            }
        }
        next = end;
    }
    Ok(report)
}

/// Outcome of the barrier eigenvalue principle at the origin.
#[derive(Debug, Clone, PartialEq)]
pub enum BarrierVerdict {
    /// `sum` of the `m` largest eigenvalues of `D²f(0)` is at least `bound = -h - tol`.
    Pass { sum: f64, bound: f64 },
    Fail { sum: f64, bound: f64 },
    /// The quadratic is not above the samples near 0, or 0 is not a sample.
    Inadmissible(String),
}

/// Checks `χ_1 + … + χ_m >= -h` for the quadratic graph `f(x) = ½ xᵀAx`
/// touching the samples from above at the origin.
///
/// Admissibility is checked on samples: one lies within `ρ/2` of the origin,
/// and every sample with `|z'| <= 0.2` satisfies `z_{n+1} <= f(z') + ρ²`.
pub fn barrier_eigen_check(
    hessian: &DMatrix<f64>,
    gamma: &ClosedSetSample,
    m: usize,
    h: f64,
) -> Result<BarrierVerdict> {
    let n = gamma.n();
    if hessian.nrows() != n || hessian.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: hessian.nrows(),
        });
    }
    if m == 0 || m > n {
        return Err(Error::Domain(format!("m = {m} out of 1..={n}")));
    }
    let rho = gamma.resolution();
    let origin = vec![0.0; n + 1];
    if gamma.distance(&origin)? > 0.5 * rho {
        return Ok(BarrierVerdict::Inadmissible(
            "the origin is not a sample point".into(),
        ));
    }
    let a = 0.5 * (hessian + hessian.transpose());
    let f = |x: &[f64]| {
        let v = &a * nalgebra::DVector::from_column_slice(x);
        0.5 * geom::dot(x, v.as_slice())
    };
    for z in gamma.points().iter() {
        let zh = geom::horizontal(z);
        if geom::norm(zh) <= WINDOW && geom::height(z) > f(zh) + rho * rho {
            return Ok(BarrierVerdict::Inadmissible(format!(
                "sample {z:?} lies above the graph"
            )));
        }
    }
    let (vals, _) = sym_eigen(&a);
    let sum: f64 = vals.iter().rev().take(m).sum();
    let norm = vals.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    let bound = -h - norm * rho * (1.0 + h);
    Ok(if sum >= bound {
        BarrierVerdict::Pass { sum, bound }
    } else {
        BarrierVerdict::Fail { sum, bound }
    })
}
