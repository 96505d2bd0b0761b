use super::HarnessError;
use crate::expr::Expr;
use crate::fem::RobinQuadrature;
use crate::geometry::{vec2, BoundaryLabel, PolygonalDomain, Segment, TransversalMode};
use crate::models::{ProblemConfig, ScalarField};
use serde::Deserialize;
use std::path::{Path, PathBuf};

/// One boundary loop: the first is the outer boundary (counter-clockwise),
/// further loops are holes (clockwise). `labels[i]` tags the edge from
/// vertex `i` to vertex `i + 1`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopConfig {
    pub vertices: Vec<[f64; 2]>,
    pub labels: Vec<BoundaryLabel>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    #[serde(rename = "loop")]
    pub loops: Vec<LoopConfig>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "lowercase", deny_unknown_fields)]
pub enum TransversalConfig {
    #[default]
    Normal,
    Star {
        center: [f64; 2],
    },
}

fn one() -> f64 {
    1.0
}

fn zero_expr() -> String {
    "0".into()
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    #[serde(default = "one")]
    pub lambda: f64,
    #[serde(default = "one")]
    pub beta: f64,
    #[serde(default = "one")]
    pub m: f64,
    #[serde(default = "zero_expr")]
    pub f: String,
    #[serde(default = "zero_expr")]
    pub g: String,
    #[serde(default = "zero_expr")]
    pub u_d: String,
    #[serde(default = "zero_expr")]
    pub u_inf: String,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        PhysicsConfig {
            lambda: 1.0,
            beta: 1.0,
            m: 1.0,
            f: zero_expr(),
            g: zero_expr(),
            u_d: zero_expr(),
            u_inf: zero_expr(),
        }
    }
}

/// Insulation profile on the insulated boundary.
#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "lowercase", deny_unknown_fields)]
pub enum DistributionConfig {
    /// `d~ = m / |Gamma_I|`.
    #[default]
    Uniform,
    /// Thickness `d` along the transversal field as an expression in `x`, `y`.
    Function { d: String },
    /// Nodal `d~` in boundary node order.
    Table { d_tilde: Vec<f64> },
    /// Start uniform and run the alternating minimization.
    Optimize,
}

fn default_h() -> f64 {
    0.1
}

fn default_layers() -> usize {
    2
}

fn default_rel_tol() -> f64 {
    1e-10
}

fn default_opt_tol() -> f64 {
    1e-9
}

fn default_max_iter() -> usize {
    100
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum QuadratureConfig {
    #[default]
    Lumped,
    Consistent,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsConfig {
    #[serde(default = "default_h")]
    pub h: f64,
    #[serde(default = "default_layers")]
    pub n_layers: usize,
    #[serde(default)]
    pub epsilons: Vec<f64>,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_opt_tol")]
    pub opt_tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        NumericsConfig {
            h: default_h(),
            n_layers: default_layers(),
            epsilons: Vec::new(),
            rel_tol: default_rel_tol(),
            opt_tol: default_opt_tol(),
            max_iter: default_max_iter(),
            quadrature: QuadratureConfig::Lumped,
        }
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Used when no output directory is given on the command line.
    pub directory: Option<PathBuf>,
    #[serde(default = "default_true")]
    pub vtk: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: None,
            vtk: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainConfig,
    #[serde(default)]
    pub transversal: TransversalConfig,
    #[serde(default)]
    pub physics: PhysicsConfig,
    #[serde(default)]
    pub distribution: DistributionConfig,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn config_error(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

fn field(name: &str, text: &str) -> Result<ScalarField, HarnessError> {
    Expr::parse(text)
        .map(ScalarField)
        .map_err(|e| config_error(format!("physics.{name}: {e}")))
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let config: RunConfig = toml::from_str(text).map_err(|e| config_error(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let n = &self.numerics;
        if !(n.h > 0.0) || !n.h.is_finite() {
            return Err(config_error(format!("numerics.h must be positive, got {}", n.h)));
        }
        if n.n_layers == 0 {
            return Err(config_error("numerics.n_layers must be at least 1"));
        }
        if let Some(e) = n.epsilons.iter().find(|e| !(**e > 0.0) || !e.is_finite()) {
            return Err(config_error(format!("numerics.epsilons must be positive, got {e}")));
        }
        if n.epsilons.windows(2).any(|w| w[1] >= w[0]) {
            return Err(config_error("numerics.epsilons must be strictly decreasing"));
        }
        if self.domain.loops.is_empty() {
            return Err(config_error("domain.loop: at least one loop is required"));
        }
        for (i, l) in self.domain.loops.iter().enumerate() {
            if l.labels.len() != l.vertices.len() {
                return Err(config_error(format!(
                    "domain.loop[{i}].labels: {} labels for {} edges",
                    l.labels.len(),
                    l.vertices.len()
                )));
            }
        }
        if !self
            .domain
            .loops
            .iter()
            .flat_map(|l| &l.labels)
            .any(|l| *l == BoundaryLabel::Insulated)
        {
            return Err(config_error("domain.loop.labels: no edge is labelled insulated"));
        }
        self.problem()?;
        Ok(())
    }

    pub fn domain(&self) -> Result<PolygonalDomain, HarnessError> {
        let mut vertices = Vec::new();
        let mut segments = Vec::new();
        for l in &self.domain.loops {
            let start = vertices.len();
            let n = l.vertices.len();
            vertices.extend(l.vertices.iter().map(|p| vec2(p[0], p[1])));
            segments.extend(l.labels.iter().enumerate().map(|(i, &label)| Segment {
                start: start + i,
                end: start + (i + 1) % n,
                label,
            }));
        }
        PolygonalDomain::new(vertices, segments).map_err(|e| config_error(format!("domain: {e}")))
    }

    pub fn transversal_mode(&self) -> TransversalMode {
        match self.transversal {
            TransversalConfig::Normal => TransversalMode::NormalField,
            TransversalConfig::Star { center } => TransversalMode::StarShaped(vec2(center[0], center[1])),
        }
    }

    pub fn problem(&self) -> Result<ProblemConfig, HarnessError> {
        let p = &self.physics;
        let config = ProblemConfig {
            lambda: p.lambda,
            beta: p.beta,
            m: p.m,
            f: field("f", &p.f)?,
            g: field("g", &p.g)?,
            u_d: field("u_d", &p.u_d)?,
            u_inf: field("u_inf", &p.u_inf)?,
        };
        config.validate().map_err(|e| config_error(format!("physics: {e}")))?;
        Ok(config)
    }

    pub fn quadrature(&self) -> RobinQuadrature {
        match self.numerics.quadrature {
            QuadratureConfig::Lumped => RobinQuadrature::Lumped,
            QuadratureConfig::Consistent => RobinQuadrature::Consistent,
        }
    }
}
