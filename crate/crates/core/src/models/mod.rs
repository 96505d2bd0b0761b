//! The thick-layer and reduced models, energies, and the limit diagnostics.

mod diagnostics;
mod distribution;
mod functional;
mod recovery;

pub use diagnostics::{
    check_lebesgue_limit, check_poincare, check_transformation_formula, equicoercivity_report, EquicoercivityReport,
    EquicoercivityRow, LebesgueReport, LebesgueRow, PoincareReport, RateFit, TransformCheckReport, TransformRow,
};
pub use distribution::DistributionProfile;
pub use functional::{
    reduced_functional, solve_reduced, solve_thick, thick_functional, transmission_flux_jump, DiscreteFunctional,
};
pub use recovery::build_recovery_field;

use crate::expr::{Expr, ExprError};
use crate::fem::{FemError, RobinQuadrature};
use crate::geometry::{GeometryError, Vec2};
use crate::meshing::MeshError;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("negative or non-finite weight {value} at boundary node {index}")]
    NegativeWeight { index: usize, value: f64 },
    #[error("expected {expected} boundary values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("singular system: no Dirichlet data and the Robin weight vanishes")]
    SingularSystem,
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("field {name}: {source}")]
    Field { name: &'static str, source: ExprError },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Fem(#[from] FemError),
}

/// A scalar field of position given by an expression in `x` and `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField(pub Expr);

impl ScalarField {
    pub fn constant(c: f64) -> Self {
        ScalarField(Expr::Num(c))
    }

    pub fn parse(text: &str) -> Result<Self, ExprError> {
        Expr::parse(text).map(ScalarField)
    }

    pub fn eval(&self, p: Vec2) -> Result<f64, ExprError> {
        self.0.eval(p.x, p.y)
    }

    pub fn is_zero(&self) -> bool {
        self.0 == Expr::Num(0.0)
    }
}

/// Physical data of one problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConfig {
    pub lambda: f64,
    pub beta: f64,
    pub m: f64,
    pub f: ScalarField,
    pub g: ScalarField,
    pub u_d: ScalarField,
    pub u_inf: ScalarField,
}

impl ProblemConfig {
    /// Unit coefficients, no sources and zero data.
    pub fn zero() -> Self {
        ProblemConfig {
            lambda: 1.0,
            beta: 1.0,
            m: 1.0,
            f: ScalarField::constant(0.0),
            g: ScalarField::constant(0.0),
            u_d: ScalarField::constant(0.0),
            u_inf: ScalarField::constant(0.0),
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, v) in [("lambda", self.lambda), ("beta", self.beta), ("m", self.m)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(ModelError::InvalidProblem(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub(crate) fn eval(&self, name: &'static str, p: Vec2) -> Result<f64, ModelError> {
        let field = match name {
            "f" => &self.f,
            "g" => &self.g,
            "u_d" => &self.u_d,
            _ => &self.u_inf,
        };
        field.eval(p).map_err(|source| ModelError::Field { name, source })
    }
}

/// Individual terms of the discrete heat-loss functional.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyBreakdown {
    pub grad_body: f64,
    pub grad_layer: f64,
    pub robin_boundary: f64,
    pub source: f64,
    pub neumann: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub rel_tol: f64,
    /// CG iteration cap as a multiple of the number of unknowns.
    pub max_iter_factor: usize,
    pub quadrature: RobinQuadrature,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            rel_tol: 1e-10,
            max_iter_factor: 20,
            quadrature: RobinQuadrature::Lumped,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub u: Vec<f64>,
    pub energy: EnergyBreakdown,
    pub iterations: usize,
    pub residual: f64,
}
