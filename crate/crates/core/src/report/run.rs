//! Executes the selected families over the parameter grids.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use super::config::{Operation, RunConfig};
use super::svg;
use super::table::{emit_table, join_nums, Family, ResultRow, RowBuilder};
use crate::abp::{abp_codim1, abp_general, AbpOptions};
use crate::error::{Error, Result};
use crate::geom::{self, horizontal, Lattice, PointSet};
use crate::harnack::{
    admissible_opening, calibrate_gamma, calibrate_theta, certify_barrier, measure_to_point,
    weak_harnack_check, BarrierSpec, MeasureToPointParams,
};
use crate::measure::box_count_measure;

use crate::normal::{check_trace_bound, curvature_records, sample_normal_bundle_at, viscosity_test};
use crate::numfmt::fmt_num;
use crate::paraboloid::{contact_set, project_contact_set, vertex_map};
use crate::scene::{build_scene, ClosedSetSample};
use crate::verdict::Verdict;

/// Tables and plots of one run, ready to be written.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub rows: Vec<ResultRow>,
    /// `(file name, contents)`, in file-name order.
    pub files: Vec<(String, String)>,
}

impl RunOutcome {
    /// 0 unless some verdict is "fails" (then 1).
    pub fn exit_code(&self) -> i32 {
        if self.rows.iter().any(|r| r.verdict == Verdict::Fails) {
            1
        } else {
            0
        }
    }

    /// Writes every file into `dir` (created if missing).
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, body) in &self.files {
            std::fs::write(dir.join(name), body)?;
        }
        Ok(())
    }
}

pub fn families(op: Operation) -> Vec<Family> {
    match op {
        Operation::Contact => vec![Family::Contact],
        Operation::Curvature => vec![Family::Curvature],
        Operation::Viscosity => vec![Family::Viscosity],
        Operation::Abp => vec![Family::Abp],
        Operation::Harnack => vec![Family::Harnack],
        Operation::All => Family::ALL.to_vec(),
    }
}

/// A built scene at one resolution.
struct SceneJob {
    name: String,
    /// Position in the resolution grid, for file names.
    level: usize,
    gamma: Arc<ClosedSetSample>,
}

struct JobOutput {
    rows: Vec<ResultRow>,
    files: Vec<(String, String)>,
    /// `(scene, a, rho, margin)` for the margin curves.
    margin: Option<(String, f64, f64, f64)>,
}

impl JobOutput {
    fn rows(rows: Vec<ResultRow>) -> Self {
        Self {
            rows,
            files: Vec::new(),
            margin: None,
        }
    }
}

fn build_scenes(cfg: &RunConfig) -> Result<Vec<SceneJob>> {
    let mut specs = Vec::new();
    for (name, spec) in &cfg.scenes {
        if cfg.grid.resolutions.is_empty() {
            specs.push((name.clone(), 0, spec.clone()));
        } else {
            for (level, &rho) in cfg.grid.resolutions.iter().enumerate() {
                specs.push((name.clone(), level, spec.with_rho(rho)));
            }
        }
    }
    specs
        .into_par_iter()
        .map(|(name, level, spec)| {
            let gamma = build_scene(&spec).map_err(|e| scene_error(&name, e))?;
            Ok(SceneJob {
                name,
                level,
                gamma: Arc::new(gamma),
            })
        })
        .collect()
}

fn scene_error(name: &str, e: Error) -> Error {
    Error::Domain(format!("scene `{name}`: {e}"))
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect()
}

/// Runs the families selected by the config's operation.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    run_families(cfg, &families(cfg.run.operation))
}

pub fn run_families(cfg: &RunConfig, selected: &[Family]) -> Result<RunOutcome> {
    let scenes = build_scenes(cfg)?;
    let mut rows = Vec::new();
    let mut files = BTreeMap::new();
    for &family in selected {
        let outputs = run_family(cfg, family, &scenes)?;
        let mut family_rows = Vec::new();
        let mut margins: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
        for out in outputs {
            family_rows.extend(out.rows);
            if cfg.run.emit_svg {
                files.extend(out.files);
            }
            if let Some((scene, a, rho, m)) = out.margin {
                margins
                    .entry(format!("{scene} a={}", fmt_num(a)))
                    .or_default()
                    .push((rho, m));
            }
        }
        let mut buf = Vec::new();
        emit_table(family, &family_rows, &mut buf)?;
        files.insert(
            family.file_name(),
            String::from_utf8(buf).expect("tables are UTF-8"),
        );
        if cfg.run.emit_svg && family == Family::Abp && !margins.is_empty() {
            let series: Vec<(String, Vec<(f64, f64)>)> = margins.into_iter().collect();
            files.insert(
                "abp_margins.svg".into(),
                svg::margin_curves(&series, "ABP margin vs resolution"),
            );
        }
        rows.extend(family_rows);
    }
    Ok(RunOutcome {
        rows,
        files: files.into_iter().collect(),
    })
}

fn run_family(cfg: &RunConfig, family: Family, scenes: &[SceneJob]) -> Result<Vec<JobOutput>> {
    type Task<'a> = (&'a SceneJob, usize, f64);
    let tasks: Vec<Task> = match family {
        Family::Contact | Family::Abp => scenes
            .iter()
            .flat_map(|s| cfg.grid.a.iter().enumerate().map(move |(i, &a)| (s, i, a)))
            .collect(),
        Family::Curvature => scenes
            .iter()
            .flat_map(|s| cfg.grid.r.iter().enumerate().map(move |(i, &r)| (s, i, r)))
            .collect(),
        Family::Viscosity => scenes
            .iter()
            .flat_map(|s| (0..viscosity_seeds(cfg).len()).map(move |i| (s, i, 0.0)))
            .collect(),
        Family::Harnack => scenes.iter().map(|s| (s, 0, 0.0)).collect(),
    };
    tasks
        .into_par_iter()
        .map(|(s, i, p)| {
            let out = match family {
                Family::Contact => contact_job(cfg, s, i, p),
                Family::Curvature => curvature_job(cfg, s, p),
                Family::Viscosity => viscosity_job(cfg, s, viscosity_seeds(cfg)[i]),
                Family::Abp => abp_job(cfg, s, p),
                Family::Harnack => harnack_job(cfg, s),
            };
            out.map_err(|e| scene_error(&s.name, e))
        })
        .collect()
}

fn viscosity_seeds(cfg: &RunConfig) -> Vec<u64> {
    if cfg.grid.seeds.is_empty() {
        vec![cfg.run.seed]
    } else {
        cfg.grid.seeds.clone()
    }
}

fn scene_cells(b: RowBuilder, run_id: &str, s: &SceneJob) -> RowBuilder {
    b.text("run_id", run_id)
        .text("scene", s.name.as_str())
        .int("n", s.gamma.n())
}

/// Vertex-map recovery allowance `3ρ(1+a)/(a (1+4a²)^{-1/2})`.
pub fn vertex_bound(rho: f64, a: f64) -> f64 {
    3.0 * rho * (1.0 + a) * (1.0 + 4.0 * a * a).sqrt() / a
}

fn contact_job(cfg: &RunConfig, s: &SceneJob, a_idx: usize, a: f64) -> Result<JobOutput> {
    let start = Instant::now();
    let g = &s.gamma;
    let n = g.n();
    let rho = g.resolution();
    let spacing = cfg.contact.center_spacing.unwrap_or(rho);
    let centers = Lattice::ball(n, &vec![0.0; n], cfg.contact.center_radius, spacing)?;
    let set = contact_set(g, a, &centers.points)?;
    let proj = project_contact_set(&set);
    let measure = box_count_measure(&proj, n, 4.0 * rho.max(spacing), rho)?;
    let mut worst: f64 = 0.0;
    for p in &set.pairs {
        let v = vertex_map(a, &p.z, &p.eta)?;
        worst = worst.max(geom::dist(&v, &p.center));
    }
    let bound = vertex_bound(rho, a);
    let verdict = if set.pairs.is_empty() {
        Verdict::HypothesisViolated
    } else if worst <= bound {
        Verdict::Holds
    } else {
        Verdict::Fails
    };
    let run_id = cfg.run_id();
    let row = scene_cells(RowBuilder::new(Family::Contact), &run_id, s)
        .num("rho", rho)
        .num("a", a)
        .int("centers", centers.points.len())
        .int("pairs", set.pairs.len())
        .int("feet", proj.len())
        .num("measure", measure.value)
        .num("measure_err", measure.error_bound)
        .int("boundary_touch", set.boundary_touch)
        .num("vertex_max_err", worst)
        .num("vertex_bound", bound)
        .text("verdict", verdict.as_str())
        .finish(&run_id, &s.name, rho, verdict, start.elapsed());
    let mut out = JobOutput::rows(vec![row]);
    if cfg.run.emit_svg && n <= 2 {
        out.files.push((
            format!("contact_{}_r{}_a{}.svg", file_stem(&s.name), s.level, a_idx),
            svg::contact_scatter(&proj, &format!("{} a={}", s.name, fmt_num(a))),
        ));
    }
    Ok(out)
}

fn curvature_job(cfg: &RunConfig, s: &SceneJob, r: f64) -> Result<JobOutput> {
    let start = Instant::now();
    let g = &s.gamma;
    let rho = g.resolution();
    let step = cfg.curvature.step.unwrap_or(2.0 * rho);
    let m = g.intrinsic_dim();
    let h = g.mc_bound();
    let run_id = cfg.run_id();
    let head = || {
        scene_cells(RowBuilder::new(Family::Curvature), &run_id, s)
            .num("rho", rho)
            .num("r", r)
            .num("step", step)
            .int("m", m)
            .num("h", h)
    };
    if step < 2.0 * rho * (1.0 - 1e-12) || step > r / 4.0 {
        // The stencil cannot resolve this radius at this resolution.
        let v = Verdict::InsufficientResolution;
        let row = head()
            .text("records", "0")
            .text("skipped", "0")
            .text("sentinel_fraction", "")
            .text("mean_trace", "")
            .text("violations", "0")
            .text("worst_margin", "")
            .text("verdict", v.as_str())
            .finish(&run_id, &s.name, rho, v, start.elapsed());
        return Ok(JobOutput::rows(vec![row]));
    }
    let eligible: Vec<usize> = (0..g.len())
        .filter(|&i| geom::norm(horizontal(g.point(i))) < 1.0 - 2.0 * r)
        .collect();
    let stride = eligible.len().div_ceil(cfg.curvature.max_feet).max(1);
    let feet: Vec<usize> = eligible.into_iter().step_by(stride).collect();
    let samples = sample_normal_bundle_at(g, &feet, r, cfg.curvature.direction_resolution)?;
    let (records, skipped) = curvature_records(g, &samples, step)?;
    let trace = check_trace_bound(g, m, h, &records);
    let sentinel = records.iter().filter(|r| r.has_sentinel()).count();
    let finite: Vec<f64> = records
        .iter()
        .map(|r| r.finite_trace)
        .filter(|t| t.is_finite())
        .collect();
    let mean = if finite.is_empty() {
        f64::NAN
    } else {
        finite.iter().sum::<f64>() / finite.len() as f64
    };
    let frac = |k: usize| if records.is_empty() { 0.0 } else { k as f64 / records.len() as f64 };
    let verdict = if records.is_empty() {
        Verdict::InsufficientResolution
    } else if frac(trace.violations) <= 0.05 {
        Verdict::Holds
    } else {
        Verdict::Fails
    };
    let row = head()
        .int("records", records.len())
        .int("skipped", skipped)
        .num("sentinel_fraction", frac(sentinel))
        .num("mean_trace", mean)
        .int("violations", trace.violations)
        .num("worst_margin", trace.worst_margin)
        .text("verdict", verdict.as_str())
        .finish(&run_id, &s.name, rho, verdict, start.elapsed());
    Ok(JobOutput::rows(vec![row]))
}

fn viscosity_job(cfg: &RunConfig, s: &SceneJob, seed: u64) -> Result<JobOutput> {
    let start = Instant::now();
    let g = &s.gamma;
    let rho = g.resolution();
    let m = cfg.viscosity.m.unwrap_or(g.intrinsic_dim());
    let h = cfg.viscosity.h.unwrap_or(g.mc_bound());
    let rep = viscosity_test(g, m, h, cfg.viscosity.trials, seed)?;
    let run_id = cfg.run_id();
    let base = |kind: &str| {
        scene_cells(RowBuilder::new(Family::Viscosity), &run_id, s)
            .num("rho", rho)
            .int("m", m)
            .num("h", h)
            .int("seed", seed)
            .text("kind", kind)
            .int("admissible", rep.admissible)
            .int("passed", rep.passed)
            .int("failed", rep.failed)
            .num("worst_margin", rep.worst_margin)
    };
    let summary_verdict = if rep.admissible == 0 {
        Verdict::InsufficientResolution
    } else if rep.failed == 0 {
        Verdict::Holds
    } else {
        Verdict::HypothesisViolated
    };
    let elapsed = start.elapsed();
    let mut rows = vec![base("summary")
        .text("point", "")
        .text("trace_m", "")
        .text("bound", "")
        .text("verdict", summary_verdict.as_str())
        .finish(&run_id, &s.name, rho, summary_verdict, elapsed)];
    for w in &rep.witnesses {
        let v = Verdict::HypothesisViolated;
        rows.push(
            base("witness")
                .text("point", join_nums(&w.point))
                .num("trace_m", w.trace_m)
                .num("bound", w.bound)
                .text("verdict", v.as_str())
                .finish(&run_id, &s.name, rho, v, elapsed),
        );
    }
    Ok(JobOutput::rows(rows))
}

fn abp_job(cfg: &RunConfig, s: &SceneJob, a: f64) -> Result<JobOutput> {
    let start = Instant::now();
    let g = &s.gamma;
    let n = g.n();
    let rho = g.resolution();
    let m = cfg.abp.m.unwrap_or(g.intrinsic_dim());
    let h = cfg.abp.h.unwrap_or(g.mc_bound());
    let spacing = cfg.abp.center_spacing.unwrap_or(rho);
    let centers = Lattice::ball(n, &vec![0.0; n], cfg.abp.center_radius, spacing)?;
    let opts = AbpOptions {
        viscosity_trials: cfg.abp.trials,
        seed: cfg.run.seed,
        stratum_radius: cfg.abp.stratum_radius,
        direction_resolution: cfg.abp.direction_resolution,
    };
    let mut rep = if m == n {
        abp_codim1(g, h, a, &centers, &opts)?
    } else {
        abp_general(g, m, h, a, &centers, &opts)?
    };
    rep.scene = s.name.clone();
    let run_id = cfg.run_id();
    let row = RowBuilder::new(Family::Abp)
        .text("run_id", run_id.as_str())
        .text("scene", s.name.as_str())
        .int("n", n)
        .int("m", rep.m)
        .num("h", rep.h)
        .num("a", a)
        .num("rho", rho)
        .num("lhs", rep.lhs.value)
        .num("lhs_err", rep.lhs.error_bound)
        .num("gamma", rep.gamma)
        .num("factor1", rep.factor1)
        .num("factor2", rep.factor2)
        .num("measure_term", rep.measure_term.value)
        .num("measure_err", rep.measure_term.error_bound)
        .num("rhs", rep.rhs)
        .num("margin", rep.margin)
        .text("flags", rep.flags_string())
        .text("verdict", rep.verdict.as_str())
        .finish(&run_id, &s.name, rho, rep.verdict, start.elapsed());
    Ok(JobOutput {
        rows: vec![row],
        files: Vec::new(),
        margin: Some((s.name.clone(), a, rho, rep.margin)),
    })
}

/// Copy of the samples with every height multiplied by `scale`.
fn rescale_heights(g: &ClosedSetSample, scale: f64) -> Result<ClosedSetSample> {
    let d = g.ambient_dim();
    let mut pts = PointSet::with_capacity(d, g.len());
    let mut p = vec![0.0; d];
    for z in g.points().iter() {
        p.copy_from_slice(z);
        p[d - 1] *= scale;
        pts.push(&p);
    }
    ClosedSetSample::from_points(pts, g.intrinsic_dim(), g.resolution(), g.mc_bound())
}

fn harnack_job(cfg: &RunConfig, s: &SceneJob) -> Result<JobOutput> {
    let start = Instant::now();
    let hc = &cfg.harnack;
    let g = &s.gamma;
    let n = g.n();
    let rho = g.resolution();
    let cal = calibrate_gamma(n, hc.safety)?;
    let theta = calibrate_theta(cal.gamma_b);
    let alpha = theta + 1.0;
    let a = admissible_opening(cal.gamma_b, theta);
    let x0 = hc.center.clone().unwrap_or_else(|| vec![0.0; n]);

    let barrier = BarrierSpec {
        gamma_b: cal.gamma_b,
        opening: a,
        anchor: x0.clone(),
        anchor_offset: 0.0,
        center: x0.clone(),
        radius: hc.radius,
        shift: 0.0,
        theta,
    };
    let cert = certify_barrier(&barrier, hc.h, hc.radius / 64.0)?;
    let mtp = measure_to_point(
        g,
        &MeasureToPointParams {
            h: hc.h,
            a,
            center: x0,
            radius: hc.radius,
            gamma_b: cal.gamma_b,
            theta,
            center_spacing: hc.center_spacing,
            sweep_spacing: None,
        },
    )?;
    let cascade_scene;
    let cascade_gamma = if hc.depth_unit {
        cascade_scene = rescale_heights(g, alpha.powi(-(hc.k as i32) - 1))?;
        &cascade_scene
    } else {
        g.as_ref()
    };
    let mut wh = weak_harnack_check(cascade_gamma, hc.h, alpha, hc.k, hc.mu, hc.center_spacing)?;
    wh.scene = s.name.clone();
    wh.beta_hat = mtp.beta_hat.map(|b| b.value);

    let verdict = if [wh.verdict, mtp.verdict].contains(&Verdict::Fails) || !cert.passed {
        Verdict::Fails
    } else {
        wh.verdict
    };
    let levels: Vec<f64> = wh.levels.iter().map(|m| m.value).collect();
    let run_id = cfg.run_id();
    let row = scene_cells(RowBuilder::new(Family::Harnack), &run_id, s)
        .num("rho", rho)
        .num("alpha", alpha)
        .int("k", hc.k)
        .num("mu", hc.mu)
        .num("eps", wh.eps)
        .num("h", hc.h)
        .num("gamma_b", cal.gamma_b)
        .text("barrier", if cert.passed { "pass" } else { "fail" })
        .opt("beta_hat", wh.beta_hat)
        .text("beta_verdict", mtp.verdict.as_str())
        .text("f_measures", join_nums(&levels))
        .num("residual", wh.residual)
        .num("residual_err", wh.residual_error)
        .opt("beta1_needed", wh.beta1_needed)
        .text("cascade_verdict", wh.verdict.as_str())
        .text("verdict", verdict.as_str())
        .finish(&run_id, &s.name, rho, verdict, start.elapsed());
    let mut out = JobOutput::rows(vec![row]);
    if cfg.run.emit_svg && !levels.is_empty() {
        out.files.push((
            format!("harnack_{}_r{}.svg", file_stem(&s.name), s.level),
            svg::measure_ladder(&levels, wh.ball.value, &format!("{} F_j", s.name)),
        ));
    }
    Ok(out)
}
