use crate::CliError;
use conerig::geometry::{Angle, ConeGeometry, CrossSection};
use conerig::modes::{circle_cross_section_modes, load_cross_section_modes, sort_blocks, ModeBlock};
use conerig::solver::{SolverSettings, DEFAULT_GAMMA};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum, Default)]
#[serde(rename_all = "snake_case")]
pub enum SectionKind {
    /// Flat circle (n = 3).
    #[default]
    Circle,
    /// Hyperbolic half-plane chart (n = 4).
    HalfPlane,
    /// Known only through an eigendata file.
    Tabulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    pub a: f64,
    pub cross_section: SectionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigendata: Option<PathBuf>,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self { n: 3, alpha: None, beta: None, a: 1.0, cross_section: SectionKind::Circle, length: None, eigendata: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeBounds {
    pub p_max: u32,
    pub q_max: u32,
}

impl Default for ModeBounds {
    fn default() -> Self {
        Self { p_max: 2, q_max: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub points: usize,
    pub gamma: f64,
    pub order: usize,
    pub eigmin_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { points: 512, gamma: DEFAULT_GAMMA, order: 16, eigmin_tol: conerig::solver::EIGMIN_TOL }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    /// Annulus as fractions of the tube radius.
    pub r_bounds: (f64, f64),
    /// Box for the half-plane coordinates `x, y`.
    pub sigma_bounds: (f64, f64),
    /// Quadrature nodes per coordinate; defaults depend on n.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<Vec<usize>>,
    pub samples: usize,
    pub poincare_samples: usize,
    pub seed: u64,
    pub order_tol: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            r_bounds: (0.2, 0.9),
            sigma_bounds: (-0.6, 0.6),
            resolution: None,
            samples: 5,
            poincare_samples: 20,
            seed: 0,
            order_tol: 0.3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum, Default)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
    Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub format: Format,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub geometry: GeometryConfig,
    pub modes: ModeBounds,
    pub solver: SolverConfig,
    pub verify: VerifyConfig,
    pub output: OutputConfig,
}

/// A single block named on the command line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockChoice {
    pub kind: conerig::modes::BlockKind,
    pub p: Option<i64>,
    pub lambda_prime: Option<f64>,
    pub mu_prime: Option<f64>,
}

impl BlockChoice {
    pub fn block(&self) -> Result<ModeBlock<f64>, CliError> {
        use conerig::modes::BlockKind;
        let p = self.p.ok_or_else(|| CliError::Validation("--block needs --p".into()))?;
        let b = match self.kind {
            BlockKind::Coupled3 => ModeBlock::Coupled3 {
                lambda_prime: self.lambda_prime.ok_or_else(|| CliError::Validation("coupled3 needs --lambda-prime".into()))?,
                p,
            },
            BlockKind::Coupled2 => ModeBlock::Coupled2 { p },
            BlockKind::Scalar => ModeBlock::Scalar { mu_prime: self.mu_prime.unwrap_or(0.0), p_prime: p },
        };
        b.validate()?;
        Ok(b)
    }
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))
    }

    /// Fills dimension-dependent defaults and checks the invariants.
    pub fn finalize(mut self) -> Result<Self, CliError> {
        let g = &mut self.geometry;
        match (g.alpha, g.beta) {
            (Some(_), Some(_)) => return Err(CliError::Validation("give exactly one of alpha and beta".into())),
            (None, None) => return Err(CliError::Validation("a cone angle is required (alpha or beta)".into())),
            _ => {}
        }
        if g.n == 3 && g.cross_section == SectionKind::Circle && g.length.is_none() {
            g.length = Some(2.0 * PI);
        }
        if g.n != 3 && g.cross_section == SectionKind::Circle {
            g.cross_section = if g.n == 4 { SectionKind::HalfPlane } else { SectionKind::Tabulated };
        }
        if g.cross_section == SectionKind::HalfPlane && g.n != 4 {
            return Err(CliError::Validation("the half-plane cross-section requires n = 4".into()));
        }
        if g.cross_section == SectionKind::Tabulated && g.eigendata.is_none() {
            return Err(CliError::Validation("a tabulated cross-section needs an eigendata path".into()));
        }
        if let Some(p) = &g.eigendata {
            if !p.is_file() {
                return Err(CliError::Validation(format!("eigendata file {} does not exist", p.display())));
            }
        }
        let v = &mut self.verify;
        if v.resolution.is_none() {
            v.resolution = Some(if self.geometry.n == 3 { vec![12, 8, 6] } else { vec![8, 6, 4, 4] });
        }
        if self.solver.points < conerig::solver::MIN_POINTS {
            return Err(CliError::Validation(format!(
                "solver.points = {} is below the minimum {}",
                self.solver.points,
                conerig::solver::MIN_POINTS
            )));
        }
        Ok(self)
    }

    pub fn geometry(&self) -> Result<ConeGeometry<f64>, CliError> {
        let g = &self.geometry;
        let angle = match (g.alpha, g.beta) {
            (Some(a), None) => Angle::Alpha(a),
            (None, Some(b)) => Angle::Beta(b),
            _ => unreachable!("checked in finalize"),
        };
        let geom = match g.cross_section {
            SectionKind::Circle => {
                ConeGeometry::new(g.n, angle, g.a, CrossSection::Circle { length: g.length.unwrap_or(2.0 * PI) })?
            }
            SectionKind::HalfPlane => ConeGeometry::half_plane(angle, g.a)?,
            SectionKind::Tabulated => ConeGeometry::new(g.n, angle, g.a, CrossSection::Tabulated { source: g.eigendata.clone() })?,
        };
        Ok(geom)
    }

    /// Blocks from the command line, the eigendata file, or the circle generator, sorted.
    pub fn blocks(&self, geom: &ConeGeometry<f64>, choice: Option<BlockChoice>) -> Result<(Vec<ModeBlock<f64>>, Vec<String>), CliError> {
        let (mut blocks, warnings) = if let Some(c) = choice {
            (vec![c.block()?], Vec::new())
        } else if let Some(path) = &self.geometry.eigendata {
            load_cross_section_modes(path)?
        } else if geom.circle_length().is_some() {
            (circle_cross_section_modes(geom, self.modes.p_max, self.modes.q_max)?, Vec::new())
        } else {
            return Err(CliError::Validation("no blocks: name one with --block or give an eigendata file".into()));
        };
        sort_blocks(&mut blocks);
        Ok((blocks, warnings))
    }

    pub fn solver_settings(&self) -> SolverSettings {
        SolverSettings { points: self.solver.points, gamma: self.solver.gamma, order: self.solver.order }
    }
}
