//! Run configuration: TOML with one `[scenes.<name>]` table per scene and a
//! section per operation family.

use std::collections::BTreeMap;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::scene::SceneSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operation {
    Contact,
    Curvature,
    Viscosity,
    Abp,
    Harnack,
    All,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub operation: Operation,
    pub seed: u64,
    pub out: Option<String>,
    pub emit_svg: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            operation: Operation::All,
            seed: 0,
            out: None,
            emit_svg: false,
        }
    }
}

/// Parameter grids shared by the families.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    /// Openings for contact and ABP runs.
    pub a: Vec<f64>,
    /// Offset radii for curvature runs.
    pub r: Vec<f64>,
    /// Resolutions overriding each scene's own, strictly decreasing.
    /// Empty: the scene's `rho`.
    pub resolutions: Vec<f64>,
    /// Viscosity seeds. Empty: the run seed.
    pub seeds: Vec<u64>,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            a: vec![1.0],
            r: vec![0.25],
            resolutions: Vec::new(),
            seeds: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContactSection {
    pub center_radius: f64,
    pub center_spacing: Option<f64>,
}

impl Default for ContactSection {
    fn default() -> Self {
        Self {
            center_radius: 1.0,
            center_spacing: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurvatureSection {
    /// Finite-difference step; defaults to `2ρ`.
    pub step: Option<f64>,
    pub max_feet: usize,
    pub direction_resolution: f64,
}

impl Default for CurvatureSection {
    fn default() -> Self {
        Self {
            step: None,
            max_feet: 256,
            direction_resolution: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ViscositySection {
    /// Defaults to the scene's intrinsic dimension.
    pub m: Option<usize>,
    /// Defaults to the scene's mean-curvature bound.
    pub h: Option<f64>,
    pub trials: usize,
}

impl Default for ViscositySection {
    fn default() -> Self {
        Self {
            m: None,
            h: None,
            trials: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AbpSection {
    pub m: Option<usize>,
    pub h: Option<f64>,
    pub center_radius: f64,
    pub center_spacing: Option<f64>,
    /// Viscosity trials confirming the declared `(m, h)`; 0 skips the check.
    pub trials: usize,
    pub stratum_radius: f64,
    pub direction_resolution: f64,
}

impl Default for AbpSection {
    fn default() -> Self {
        Self {
            m: None,
            h: None,
            center_radius: 1.0,
            center_spacing: None,
            trials: 2000,
            stratum_radius: 0.25,
            direction_resolution: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnackSection {
    pub safety: f64,
    pub k: u32,
    pub mu: f64,
    pub h: f64,
    /// Measure-to-point ball `B(center, radius)`.
    pub radius: f64,
    pub center: Option<Vec<f64>>,
    /// Read scene heights in units of `α^{-k-1}` for the cascade.
    pub depth_unit: bool,
    pub center_spacing: Option<f64>,
}

impl Default for HarnackSection {
    fn default() -> Self {
        Self {
            safety: 2.0,
            k: 2,
            mu: 0.1,
            h: 0.0,
            radius: 0.5,
            center: None,
            depth_unit: false,
            center_spacing: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub run: RunSection,
    pub scenes: BTreeMap<String, SceneSpec>,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub contact: ContactSection,
    #[serde(default)]
    pub curvature: CurvatureSection,
    #[serde(default)]
    pub viscosity: ViscositySection,
    #[serde(default)]
    pub abp: AbpSection,
    #[serde(default)]
    pub harnack: HarnackSection,
    /// Hex SHA-256 of the source text.
    #[serde(skip)]
    pub hash: String,
}

impl RunConfig {
    /// `<first 16 hex digits of the config hash>-<seed>`.
    pub fn run_id(&self) -> String {
        format!("{}-{}", &self.hash[..16], self.run.seed)
    }
}

/// 1-based line and column of a byte offset.
fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

/// Location of the first line assigning `key` (falls back to 1:1).
fn key_location(src: &str, key: &str) -> (usize, usize) {
    src.lines()
        .enumerate()
        .find_map(|(i, l)| {
            let t = l.trim_start();
            let rest = t.strip_prefix(key)?;
            rest.trim_start()
                .starts_with('=')
                .then(|| (i + 1, l.len() - t.len() + 1))
        })
        .unwrap_or((1, 1))
}

fn invalid(src: &str, key: &str, message: String) -> Error {
    let (line, column) = key_location(src, key);
    Error::Parse {
        line,
        column,
        message,
    }
}

pub fn parse_config(src: &str) -> Result<RunConfig> {
    let mut cfg: RunConfig = toml::from_str(src).map_err(|e| {
        let (line, column) = e.span().map_or((1, 1), |s| line_col(src, s.start));
        Error::Parse {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    if cfg.scenes.is_empty() {
        return Err(Error::Parse {
            line: 1,
            column: 1,
            message: "no [scenes.<name>] tables".into(),
        });
    }
    let g = &cfg.grid;
    if g.a.is_empty() || g.a.iter().any(|a| !(*a > 0.0)) {
        return Err(invalid(src, "a", "grid.a must be a nonempty list of positive openings".into()));
    }
    if g.r.is_empty() || g.r.iter().any(|r| !(*r > 0.0)) {
        return Err(invalid(src, "r", "grid.r must be a nonempty list of positive radii".into()));
    }
    if g.resolutions.iter().any(|r| !(*r > 0.0)) || g.resolutions.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid(
            src,
            "resolutions",
            "grid.resolutions must be positive and strictly decreasing".into(),
        ));
    }
    let h = &cfg.harnack;
    if h.k == 0 || !(h.mu > 0.0 && h.mu <= 1.0) || !(h.safety > 1.0) || !(h.radius > 0.0) {
        return Err(invalid(
            src,
            "k",
            "harnack needs k >= 1, 0 < mu <= 1, safety > 1 and radius > 0".into(),
        ));
    }
    if cfg.viscosity.trials == 0 || cfg.curvature.max_feet == 0 {
        return Err(invalid(src, "trials", "viscosity.trials and curvature.max_feet must be positive".into()));
    }
    cfg.hash = Sha256::digest(src.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();
    Ok(cfg)
}
