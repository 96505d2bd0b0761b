//! Configuration files, experiment drivers and file output for the
//! command line front end.
//!
//! Exit codes: 0 success, 2 configuration error, 3 solver, geometry or I/O
//! error, 4 degenerate optimization, 5 failed verification.

mod commands;
mod config;

pub use commands::{gamma_sweep, mesh_info, optimize, run, solve_reduced, solve_thick, verify, Command};
pub use config::{
    DistributionConfig, DomainConfig, LoopConfig, NumericsConfig, OutputConfig, PhysicsConfig, QuadratureConfig,
    RunConfig, TransversalConfig,
};

use crate::geometry::{build_transversal, InsulatedBoundary, PolygonalDomain};
use crate::meshing::{mesh_body, TriangleMesh};
use crate::models::{DistributionProfile, ProblemConfig, SolveOptions};
use crate::optimizer::OptimizerOptions;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("degenerate optimization: {0}")]
    DegenerateTrace(String),
    #[error("verification failed: {}", .0.join(", "))]
    Verification(Vec<String>),
    #[error("i/o error: {0}")]
    Io(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Solver(_) | HarnessError::Io(_) => 3,
            HarnessError::DegenerateTrace(_) => 4,
            HarnessError::Verification(_) => 5,
        }
    }
}

pub(crate) fn solver_error(e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Solver(e.to_string())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOptions {
    pub out: PathBuf,
    /// Worker threads for independent sweep entries; results are written in
    /// sweep order regardless.
    pub threads: usize,
    /// Seed of the random fields drawn by `verify`.
    pub seed: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            out: PathBuf::from("out"),
            threads: 1,
            seed: 0,
        }
    }
}

/// What a command produced.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    /// Human-readable summary lines.
    pub lines: Vec<String>,
    pub files: Vec<PathBuf>,
}

/// Geometry, body mesh and problem data shared by all commands.
#[derive(Debug, Clone)]
pub struct Setup {
    pub config: RunConfig,
    pub problem: ProblemConfig,
    pub domain: PolygonalDomain,
    pub body: TriangleMesh,
    pub boundary: InsulatedBoundary,
}

impl Setup {
    pub fn new(config: RunConfig) -> Result<Self, HarnessError> {
        config.validate()?;
        let problem = config.problem()?;
        let domain = config.domain()?;
        let profile = build_transversal(&domain, config.transversal_mode())
            .map_err(|e| HarnessError::Config(format!("transversal: {e}")))?;
        let body = mesh_body(&domain, config.numerics.h).map_err(solver_error)?;
        let boundary = InsulatedBoundary::new(&domain, &profile, &body.insulated).map_err(solver_error)?;
        Ok(Setup {
            config,
            problem,
            domain,
            body,
            boundary,
        })
    }

    /// The configured profile; `optimize` starts from the uniform one.
    pub fn distribution(&self) -> Result<DistributionProfile, HarnessError> {
        let b = &self.boundary;
        let result = match &self.config.distribution {
            DistributionConfig::Uniform | DistributionConfig::Optimize => {
                DistributionProfile::uniform_mass(b, self.problem.m)
            }
            DistributionConfig::Function { d } => {
                let e = crate::expr::Expr::parse(d)
                    .map_err(|e| HarnessError::Config(format!("distribution.d: {e}")))?;
                let values = b
                    .points()
                    .iter()
                    .map(|p| e.eval(p.x, p.y))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| HarnessError::Config(format!("distribution.d: {e}")))?;
                DistributionProfile::from_d(b, values)
            }
            DistributionConfig::Table { d_tilde } => DistributionProfile::from_d_tilde(b, d_tilde.clone()),
        };
        result.map_err(|e| HarnessError::Config(format!("distribution: {e}")))
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            rel_tol: self.config.numerics.rel_tol,
            quadrature: self.config.quadrature(),
            ..SolveOptions::default()
        }
    }

    pub fn optimizer_options(&self) -> OptimizerOptions {
        OptimizerOptions {
            tol: self.config.numerics.opt_tol,
            max_iter: self.config.numerics.max_iter,
            solve: self.solve_options(),
        }
    }
}

/// A CSV table with a fixed header, formatted with shortest round-trip floats.
#[derive(Debug, Clone)]
pub(crate) struct Csv {
    text: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv {
            text: header.join(",") + "\n",
            columns: header.len(),
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        debug_assert_eq!(cells.len(), self.columns);
        let _ = writeln!(self.text, "{}", cells.join(","));
    }

    pub fn write(&self, dir: &Path, name: &str, report: &mut Report) -> Result<(), HarnessError> {
        let path = dir.join(name);
        std::fs::write(&path, &self.text).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        report.files.push(path);
        Ok(())
    }
}

pub(crate) fn cells(values: &[f64]) -> Vec<String> {
    values.iter().map(|v| v.to_string()).collect()
}

/// Maps `f` over `items` on up to `threads` scoped workers, keeping order.
pub(crate) fn par_map<T: Sync, R: Send>(threads: usize, items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let threads = threads.max(1).min(items.len().max(1));
    if threads == 1 {
        return items.iter().map(f).collect();
    }
    let chunk = items.len().div_ceil(threads);
    std::thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|part| {
                let f = &f;
                s.spawn(move || part.iter().map(f).collect::<Vec<R>>())
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker panicked"))
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn par_map_keeps_order() {
        let items: Vec<usize> = (0..17).collect();
        for threads in [1, 2, 4, 32] {
            assert_eq!(par_map(threads, &items, |i| i * i), items.iter().map(|i| i * i).collect::<Vec<_>>());
        }
        assert!(par_map(3, &[] as &[u8], |x| *x).is_empty());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(HarnessError::Config(String::new()).exit_code(), 2);
        assert_eq!(HarnessError::Solver(String::new()).exit_code(), 3);
        assert_eq!(HarnessError::DegenerateTrace(String::new()).exit_code(), 4);
        assert_eq!(HarnessError::Verification(vec![]).exit_code(), 5);
    }

    #[test]
    fn csv_formatting() {
        let mut c = Csv::new(&["a", "b"]);
        c.row(&cells(&[0.1, -2.0]));
        assert_eq!(c.text, "a,b\n0.1,-2\n");
    }
}
