//! Optimal distribution of a fixed amount of insulation.
//!
//! Alternates between the reduced solve for fixed `d~` and the closed-form
//! `d~ = max(0, |u - u_inf| - c) / (beta c)`, where the level `c` is fixed by
//! the mass constraint. The boundary integrals of the `d~`-step use the same
//! trapezoidal weights as the lumped Robin term, so that step is the exact
//! minimizer of the discrete energy and the history is non-increasing.

use crate::fem::{assemble_neumann, assemble_source};
use crate::geometry::InsulatedBoundary;
use crate::meshing::{FacetLabel, Region, TriangleMesh};
use crate::models::{reduced_functional, DistributionProfile, ModelError, ProblemConfig, SolveOptions};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizerError {
    #[error("the trace |u - u_inf| vanishes on the insulated boundary; no insulation level exists")]
    DegenerateTrace,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// `(f, 1)_Omega + <g, 1>_{Gamma_N}`.
pub fn net_heat_input(config: &ProblemConfig, mesh: &TriangleMesh) -> Result<f64, ModelError> {
    let f = assemble_source(mesh, Region::Body, |p| config.eval("f", p))?;
    let g = assemble_neumann(mesh, FacetLabel::Neumann, |p| config.eval("g", p))?;
    Ok(f.iter().sum::<f64>() + g.iter().sum::<f64>())
}

fn level_residual(trace: &[f64], weights: &[f64], mb: f64, c: f64) -> f64 {
    trace
        .iter()
        .zip(weights)
        .map(|(a, w)| w * (a - c).max(0.0))
        .sum::<f64>()
        / mb
        - c
}

/// Unique root `c > 0` of `(1/(m beta)) sum_i w_i max(0, a_i - c) = c`.
///
/// Bisection locates the active set `{a_i > c}`; on it the equation is
/// linear and the root is then taken in closed form.
pub fn solve_c_fixed_point(trace: &[f64], weights: &[f64], m: f64, beta: f64) -> Result<f64, OptimizerError> {
    if trace.len() != weights.len() {
        return Err(ModelError::LengthMismatch {
            expected: weights.len(),
            got: trace.len(),
        }
        .into());
    }
    if !(m > 0.0 && beta > 0.0) {
        return Err(ModelError::InvalidProblem(format!("m and beta must be positive, got {m} and {beta}")).into());
    }
    if let Some((index, &value)) = trace.iter().enumerate().find(|(_, a)| !(**a >= 0.0) || !a.is_finite()) {
        return Err(ModelError::NegativeWeight { index, value }.into());
    }
    let mb = m * beta;
    let top = trace
        .iter()
        .zip(weights)
        .filter(|(_, w)| **w > 0.0)
        .map(|(a, _)| *a)
        .fold(0.0, f64::max);
    if top <= 0.0 {
        return Err(OptimizerError::DegenerateTrace);
    }
    let (mut lo, mut hi) = (0.0, top);
    while hi - lo > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if level_residual(trace, weights, mb, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let c = 0.5 * (lo + hi);
    let (mut wa, mut w) = (0.0, 0.0);
    for (a, wi) in trace.iter().zip(weights) {
        if *a > c {
            wa += wi * a;
            w += wi;
        }
    }
    let exact = wa / (mb + w);
    let same_set = trace
        .iter()
        .all(|a| (*a > c) == (*a > exact) || (a - exact).abs() <= 1e-12 * top);
    Ok(if exact > 0.0 && same_set { exact } else { c })
}

/// Nodal `d~ = max(0, a - c) / (beta c)` with `c` from the fixed point,
/// rescaled onto the exact mass if rounding drifts by more than 1e-10.
pub fn optimal_distribution(
    boundary: &InsulatedBoundary,
    trace: &[f64],
    m: f64,
    beta: f64,
) -> Result<(DistributionProfile, f64), OptimizerError> {
    let weights = boundary.lumped_weights();
    let c = solve_c_fixed_point(trace, &weights, m, beta)?;
    let d_tilde: Vec<f64> = trace.iter().map(|a| (a - c).max(0.0) / (beta * c)).collect();
    let mut dist = DistributionProfile::from_d_tilde(boundary, d_tilde)?;
    if (dist.mass(boundary) - m).abs() > 1e-10 {
        dist.renormalize(boundary, m);
    }
    Ok((dist, c))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerOptions {
    /// Stop when the relative energy change of a full sweep is at most this.
    pub tol: f64,
    pub max_iter: usize,
    pub solve: SolveOptions,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions {
            tol: 1e-9,
            max_iter: 100,
            solve: SolveOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerStatus {
    Converged,
    MaxIterations,
    DegenerateTrace,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub c: f64,
    /// Energy after the solve with the updated distribution.
    pub energy: f64,
    pub mass_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub iterations: usize,
    pub u: Vec<f64>,
    pub distribution: DistributionProfile,
    pub c: f64,
    /// Energies after every half-step, starting with the initial solve.
    pub energy_history: Vec<f64>,
    pub records: Vec<IterationRecord>,
    pub status: OptimizerStatus,
    /// Net heat input; a vanishing value leaves the optimum uncharacterized.
    pub net_heat_input: f64,
}

impl OptimizerState {
    pub fn converged(&self) -> bool {
        self.status == OptimizerStatus::Converged
    }

    pub fn energy(&self) -> f64 {
        self.energy_history.last().copied().unwrap_or(0.0)
    }
}

/// `|u - u_inf|` at the insulated boundary nodes.
pub fn boundary_trace(
    mesh: &TriangleMesh,
    boundary: &InsulatedBoundary,
    config: &ProblemConfig,
    u: &[f64],
) -> Result<Vec<f64>, ModelError> {
    boundary
        .mesh_nodes()
        .iter()
        .map(|&i| Ok((u[i] - config.eval("u_inf", mesh.nodes[i])?).abs()))
        .collect()
}

/// Alternating minimization over `(u, d~)` from the given start.
pub fn alternate_minimize(
    mesh: &TriangleMesh,
    boundary: &InsulatedBoundary,
    config: &ProblemConfig,
    init: DistributionProfile,
    options: &OptimizerOptions,
) -> Result<OptimizerState, OptimizerError> {
    let q = options.solve.quadrature;
    let mut dist = init;
    let first = reduced_functional(mesh, boundary, config, &dist, q)?.solve(&options.solve)?;
    let mut state = OptimizerState {
        iterations: 0,
        u: first.u,
        c: f64::NAN,
        energy_history: vec![first.energy.total],
        records: Vec::new(),
        status: OptimizerStatus::MaxIterations,
        net_heat_input: net_heat_input(config, mesh)?,
        distribution: dist.clone(),
    };
    let mut last = first.energy.total;
    for it in 1..=options.max_iter {
        let trace = boundary_trace(mesh, boundary, config, &state.u)?;
        // A trace at solver roundoff level counts as vanishing.
        let scale = state.u.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if trace.iter().all(|a| *a <= 1e-9 * scale) {
            state.status = OptimizerStatus::DegenerateTrace;
            return Ok(state);
        }
        let (next, c) = match optimal_distribution(boundary, &trace, config.m, config.beta) {
            Ok(v) => v,
            Err(OptimizerError::DegenerateTrace) => {
                state.status = OptimizerStatus::DegenerateTrace;
                return Ok(state);
            }
            Err(e) => return Err(e),
        };
        dist = next;
        let f = reduced_functional(mesh, boundary, config, &dist, q)?;
        state.energy_history.push(f.energy(&state.u).total);
        let sol = f.solve(&options.solve)?;
        state.energy_history.push(sol.energy.total);
        state.records.push(IterationRecord {
            iteration: it,
            c,
            energy: sol.energy.total,
            mass_residual: (dist.mass(boundary) - config.m).abs(),
        });
        state.iterations = it;
        state.u = sol.u;
        state.c = c;
        state.distribution = dist.clone();
        let change = (sol.energy.total - last).abs();
        last = sol.energy.total;
        if change <= options.tol * sol.energy.total.abs() {
            state.status = OptimizerStatus::Converged;
            break;
        }
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_transversal, BoundaryLabel::*, PolygonalDomain, TransversalMode};
    use crate::meshing::mesh_body;
    use crate::models::ScalarField;

    #[test]
    fn constant_trace_closed_form() {
        let w = [0.25, 0.5, 0.25];
        let c = solve_c_fixed_point(&[1.0 / 3.0; 3], &w, 0.5, 1.0).unwrap();
        assert!((c - 2.0 / 9.0).abs() < 1e-14, "{c}");
        for (m, beta, a, l) in [(0.3, 2.0, 0.7, 1.0), (1.5, 0.5, 2.0, 1.0)] {
            let c = solve_c_fixed_point(&[a; 3], &w, m, beta).unwrap();
            assert!((c - l * a / (m * beta + l)).abs() < 1e-12);
            assert!(((a - c) / (beta * c) - m / l).abs() < 1e-10);
        }
    }

    #[test]
    fn two_level_trace() {
        let c = solve_c_fixed_point(&[0.4, 0.1], &[1.0, 1.0], 0.2, 1.0).unwrap();
        assert!((c - 1.0 / 3.0).abs() < 1e-14);
        assert!(level_residual(&[0.4, 0.1], &[1.0, 1.0], 0.2, c).abs() < 1e-12);
    }

    #[test]
    fn vanishing_trace_is_degenerate() {
        assert_eq!(
            solve_c_fixed_point(&[0.0; 4], &[1.0; 4], 1.0, 1.0),
            Err(OptimizerError::DegenerateTrace)
        );
        assert!(solve_c_fixed_point(&[-1.0], &[1.0], 1.0, 1.0).is_err());
    }

    fn unit_square(labels: [crate::geometry::BoundaryLabel; 4], h: f64) -> (TriangleMesh, InsulatedBoundary) {
        let d = PolygonalDomain::unit_square(labels).unwrap();
        let mesh = mesh_body(&d, h).unwrap();
        let p = build_transversal(&d, TransversalMode::NormalField).unwrap();
        let b = InsulatedBoundary::new(&d, &p, &mesh.insulated).unwrap();
        (mesh, b)
    }

    #[test]
    fn net_heat_input_examples() {
        let (mesh, _) = unit_square([Neumann, Insulated, Neumann, Dirichlet], 0.25);
        let mut config = ProblemConfig {
            f: ScalarField::constant(1.0),
            ..ProblemConfig::zero()
        };
        assert!((net_heat_input(&config, &mesh).unwrap() - 1.0).abs() < 1e-12);
        config.f = ScalarField::parse("x").unwrap();
        assert!((net_heat_input(&config, &mesh).unwrap() - 0.5).abs() < 1e-12);
        let (mesh, _) = unit_square([Neumann, Insulated, Dirichlet, Dirichlet], 0.25);
        config.f = ScalarField::constant(0.0);
        config.g = ScalarField::constant(2.0);
        assert!((net_heat_input(&config, &mesh).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_free_boundary() {
        let (_, b) = unit_square([Neumann, Insulated, Neumann, Dirichlet], 0.5);
        let w = b.lumped_weights();
        let trace = [0.1, 0.5, 0.1];
        let (d, c) = optimal_distribution(&b, &trace, 0.1, 1.0).unwrap();
        assert!(c > 0.1);
        assert_eq!(d.d_tilde()[0], 0.0);
        assert_eq!(d.d_tilde()[2], 0.0);
        assert!((w[1] * d.d_tilde()[1] - 0.1).abs() < 1e-14);
    }

    #[test]
    fn slab_converges_to_uniform() {
        let (mesh, b) = unit_square([Neumann, Insulated, Neumann, Dirichlet], 0.1);
        let config = ProblemConfig {
            f: ScalarField::constant(1.0),
            m: 0.5,
            ..ProblemConfig::zero()
        };
        let init = DistributionProfile::uniform_mass(&b, config.m).unwrap();
        let s = alternate_minimize(&mesh, &b, &config, init, &OptimizerOptions::default()).unwrap();
        assert!(s.converged() && s.iterations <= 3, "{:?}", s.records);
        // The discrete trace is constant only up to mesh asymmetry, which
        // the level formula amplifies by 1 / (beta c).
        let trace = boundary_trace(&mesh, &b, &config, &s.u).unwrap();
        let spread = trace.iter().fold(0.0f64, |m, a| m.max((a - trace[0]).abs()));
        for v in s.distribution.d_tilde() {
            assert!((v - 0.5).abs() <= 2.0 * spread / (config.beta * s.c) + 1e-12, "{v}");
        }
    }

    #[test]
    fn complementarity_at_convergence() {
        let (mesh, b) = unit_square([Neumann, Insulated, Neumann, Dirichlet], 0.1);
        let config = ProblemConfig {
            f: ScalarField::parse("4 * y^3").unwrap(),
            m: 0.05,
            ..ProblemConfig::zero()
        };
        let init = DistributionProfile::uniform_mass(&b, config.m).unwrap();
        let s = alternate_minimize(&mesh, &b, &config, init, &OptimizerOptions::default()).unwrap();
        assert!(s.converged());
        let trace = boundary_trace(&mesh, &b, &config, &s.u).unwrap();
        let mut zeros = 0;
        for (a, d) in trace.iter().zip(s.distribution.d_tilde()) {
            if *d > 0.0 {
                assert!(*a > s.c - 1e-8);
            } else {
                zeros += 1;
                assert!(*a <= s.c + 1e-8);
            }
        }
        assert!(zeros > 0, "expected an uninsulated part");
    }
}
