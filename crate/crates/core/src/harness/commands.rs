use super::{cells, par_map, solver_error, Csv, HarnessError, Report, RunConfig, RunOptions, Setup};
use crate::geometry::{check_bilipschitz, BoundaryLabel, InsulatedBoundary, LayerSpec, PolygonalDomain};
use crate::meshing::{mesh_thick, write_vtk, FacetLabel, ThickMesh, TriangleMesh};
use crate::models::{
    build_recovery_field, check_lebesgue_limit, check_poincare, check_transformation_formula, equicoercivity_report,
    reduced_functional, solve_reduced as reduced_solve, thick_functional, transmission_flux_jump, DistributionProfile,
    EnergyBreakdown, EquicoercivityRow, SolveReport,
};
use crate::optimizer::{alternate_minimize, boundary_trace, OptimizerStatus};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    SolveReduced,
    SolveThick,
    Optimize,
    GammaSweep,
    Verify,
    MeshInfo,
}

/// Loads the setup, creates the output directory and runs one command.
pub fn run(command: Command, config: RunConfig, options: &RunOptions) -> Result<Report, HarnessError> {
    std::fs::create_dir_all(&options.out)
        .map_err(|e| HarnessError::Io(format!("{}: {e}", options.out.display())))?;
    let setup = Setup::new(config)?;
    match command {
        Command::SolveReduced => solve_reduced(&setup, options),
        Command::SolveThick => solve_thick(&setup, options),
        Command::Optimize => optimize(&setup, options),
        Command::GammaSweep => gamma_sweep(&setup, options),
        Command::Verify => verify(&setup, options),
        Command::MeshInfo => mesh_info(&setup, options),
    }
}

const ENERGY_COLUMNS: [&str; 6] = ["grad_body", "grad_layer", "robin_boundary", "source", "neumann", "total"];
const DEFAULT_SWEEP: [f64; 4] = [0.1, 0.05, 0.025, 0.0125];

fn energy_cells(e: &EnergyBreakdown) -> [f64; 6] {
    [e.grad_body, e.grad_layer, e.robin_boundary, e.source, e.neumann, e.total]
}

fn vtk(
    setup: &Setup,
    dir: &Path,
    name: &str,
    mesh: &TriangleMesh,
    data: &[(&str, &[f64])],
    report: &mut Report,
) -> Result<(), HarnessError> {
    if !setup.config.output.vtk {
        return Ok(());
    }
    let path = dir.join(name);
    let io = |e: std::io::Error| HarnessError::Io(format!("{}: {e}", path.display()));
    let file = std::fs::File::create(&path).map_err(io)?;
    let mut w = std::io::BufWriter::new(file);
    write_vtk(&mut w, name, mesh, data).map_err(io)?;
    report.files.push(path.clone());
    Ok(())
}

fn boundary_table(boundary: &InsulatedBoundary, dist: &DistributionProfile, u: &[f64]) -> Csv {
    let mut csv = Csv::new(&["node", "x", "y", "arc_length", "d", "d_tilde", "u"]);
    for i in 0..boundary.node_count() {
        let p = boundary.points()[i];
        let mut row = vec![i.to_string()];
        row.extend(cells(&[
            p.x,
            p.y,
            boundary.arc_length()[i],
            dist.d()[i],
            dist.d_tilde()[i],
            u[boundary.mesh_nodes()[i]],
        ]));
        csv.row(&row);
    }
    csv
}

fn thick_solve(
    setup: &Setup,
    dist: &DistributionProfile,
    epsilon: f64,
) -> Result<(ThickMesh, SolveReport), HarnessError> {
    let spec = LayerSpec {
        epsilon,
        boundary: &setup.boundary,
        distribution: dist,
    };
    let thick = mesh_thick(&setup.body, &spec, setup.config.numerics.n_layers).map_err(solver_error)?;
    let sol = thick_functional(&thick, &setup.problem, setup.config.quadrature())
        .and_then(|f| f.solve(&setup.solve_options()))
        .map_err(solver_error)?;
    Ok((thick, sol))
}

fn required_epsilons(setup: &Setup, command: &str) -> Result<Vec<f64>, HarnessError> {
    let eps = setup.config.numerics.epsilons.clone();
    if eps.is_empty() {
        return Err(HarnessError::Config(format!("numerics.epsilons: required by {command}")));
    }
    Ok(eps)
}

/// Reduced solve: `reduced_energy.csv`, `reduced_boundary.csv`, `reduced.vtk`.
pub fn solve_reduced(setup: &Setup, options: &RunOptions) -> Result<Report, HarnessError> {
    let dist = setup.distribution()?;
    let sol = reduced_solve(&setup.body, &setup.boundary, &setup.problem, &dist, &setup.solve_options())
        .map_err(solver_error)?;
    let mut report = Report::default();
    let mut csv = Csv::new(&[&ENERGY_COLUMNS[..], &["mass", "iterations"]].concat());
    let mut row = cells(&energy_cells(&sol.energy));
    row.push(dist.mass(&setup.boundary).to_string());
    row.push(sol.iterations.to_string());
    csv.row(&row);
    csv.write(&options.out, "reduced_energy.csv", &mut report)?;
    boundary_table(&setup.boundary, &dist, &sol.u).write(&options.out, "reduced_boundary.csv", &mut report)?;
    vtk(setup, &options.out, "reduced.vtk", &setup.body, &[("u", &sol.u)], &mut report)?;
    report.lines.push(format!("reduced energy {}", sol.energy.total));
    Ok(report)
}

/// Thick solves over the epsilon list: `thick_energy.csv` and one VTK file per entry.
pub fn solve_thick(setup: &Setup, options: &RunOptions) -> Result<Report, HarnessError> {
    let eps = required_epsilons(setup, "solve-thick")?;
    let dist = setup.distribution()?;
    let results = par_map(options.threads, &eps, |&e| thick_solve(setup, &dist, e));
    let mut report = Report::default();
    let mut csv = Csv::new(&[&["epsilon"][..], &ENERGY_COLUMNS, &["flux_jump"]].concat());
    let mut failure = None;
    for (i, (e, r)) in eps.iter().zip(results).enumerate() {
        let (thick, sol) = match r {
            Ok(v) => v,
            Err(err) => {
                failure = Some(err);
                break;
            }
        };
        let jump = transmission_flux_jump(&thick, &setup.problem, &sol.u);
        let mut row = vec![*e];
        row.extend(energy_cells(&sol.energy));
        row.push(jump);
        csv.row(&cells(&row));
        vtk(setup, &options.out, &format!("thick_{i}.vtk"), &thick.mesh, &[("u", &sol.u)], &mut report)?;
        report.lines.push(format!("epsilon {e}: thick energy {}", sol.energy.total));
    }
    csv.write(&options.out, "thick_energy.csv", &mut report)?;
    failure.map_or(Ok(report), Err)
}

/// Alternating minimization: `optimize_iterations.csv`,
/// `optimal_distribution.csv`, `optimize.vtk`.
pub fn optimize(setup: &Setup, options: &RunOptions) -> Result<Report, HarnessError> {
    let init = setup.distribution()?;
    let state = alternate_minimize(
        &setup.body,
        &setup.boundary,
        &setup.problem,
        init,
        &setup.optimizer_options(),
    )
    .map_err(solver_error)?;
    let mut report = Report::default();
    report.lines.push(format!("net heat input {}", state.net_heat_input));
    if state.net_heat_input.abs() < 1e-12 {
        report
            .lines
            .push("warning: vanishing net heat input, the optimal distribution is not characterized".into());
    }
    let mut csv = Csv::new(&["iteration", "c", "energy", "mass_residual"]);
    for r in &state.records {
        let mut row = vec![r.iteration.to_string()];
        row.extend(cells(&[r.c, r.energy, r.mass_residual]));
        csv.row(&row);
    }
    csv.write(&options.out, "optimize_iterations.csv", &mut report)?;
    if state.status == OptimizerStatus::DegenerateTrace {
        return Err(HarnessError::DegenerateTrace(format!(
            "|u - u_inf| vanishes on the insulated boundary after {} iterations",
            state.iterations
        )));
    }
    let trace = boundary_trace(&setup.body, &setup.boundary, &setup.problem, &state.u).map_err(solver_error)?;
    let b = &setup.boundary;
    let mut table = Csv::new(&["node", "x", "y", "arc_length", "d", "d_tilde", "trace"]);
    for i in 0..b.node_count() {
        let p = b.points()[i];
        let mut row = vec![i.to_string()];
        row.extend(cells(&[
            p.x,
            p.y,
            b.arc_length()[i],
            state.distribution.d()[i],
            state.distribution.d_tilde()[i],
            trace[i],
        ]));
        table.row(&row);
    }
    table.write(&options.out, "optimal_distribution.csv", &mut report)?;
    vtk(setup, &options.out, "optimize.vtk", &setup.body, &[("u", &state.u)], &mut report)?;
    report.lines.push(format!(
        "{} after {} iterations, energy {}, c {}",
        if state.converged() { "converged" } else { "stopped" },
        state.iterations,
        state.energy(),
        state.c
    ));
    Ok(report)
}

struct SweepRow {
    epsilon: f64,
    thick: f64,
    recovery: f64,
    coercivity: EquicoercivityRow,
}

/// Thick energies, recovery slack and coercivity quantities over the epsilon
/// list: `gamma_sweep.csv`. Rows before a failing entry are kept.
pub fn gamma_sweep(setup: &Setup, options: &RunOptions) -> Result<Report, HarnessError> {
    let eps = required_epsilons(setup, "gamma-sweep")?;
    let dist = setup.distribution()?;
    let reduced = reduced_solve(&setup.body, &setup.boundary, &setup.problem, &dist, &setup.solve_options())
        .map_err(solver_error)?;
    let results = par_map(options.threads, &eps, |&epsilon| -> Result<SweepRow, HarnessError> {
        let (thick, sol) = thick_solve(setup, &dist, epsilon)?;
        let spec = LayerSpec {
            epsilon,
            boundary: &setup.boundary,
            distribution: &dist,
        };
        let ve = build_recovery_field(&thick, &setup.problem, &spec, &reduced.u).map_err(solver_error)?;
        let f = thick_functional(&thick, &setup.problem, setup.config.quadrature()).map_err(solver_error)?;
        let coercivity = equicoercivity_report(&[(&thick, &sol.u)]).rows[0];
        Ok(SweepRow {
            epsilon,
            thick: sol.energy.total,
            recovery: f.energy(&ve).total,
            coercivity,
        })
    });
    let mut report = Report::default();
    let mut csv = Csv::new(&[
        "epsilon",
        "thick_energy",
        "reduced_energy",
        "gap",
        "recovery_energy",
        "recovery_slack",
        "l2_body",
        "grad_body",
        "trace_outer",
        "grad_layer",
    ]);
    let e0 = reduced.energy.total;
    let mut gaps = Vec::new();
    let mut failure = None;
    for r in results {
        let r = match r {
            Ok(r) => r,
            Err(e) => {
                failure = Some(e);
                break;
            }
        };
        let gap = (r.thick - e0).abs();
        let slack = r.recovery - e0;
        let c = r.coercivity;
        csv.row(&cells(&[
            r.epsilon,
            r.thick,
            e0,
            gap,
            r.recovery,
            slack,
            c.l2_body,
            c.grad_body,
            c.trace_outer,
            c.grad_layer,
        ]));
        report.lines.push(format!("epsilon {}: gap {gap:e}, recovery slack {slack:e}", r.epsilon));
        gaps.push(gap);
    }
    csv.write(&options.out, "gamma_sweep.csv", &mut report)?;
    if let Some(e) = failure {
        return Err(e);
    }
    let mut failed = Vec::new();
    let tiny = 1e-14 * e0.abs().max(1.0);
    if !gaps.windows(2).all(|w| w[1] < w[0] || w[0].max(w[1]) <= tiny) {
        failed.push("gap_decrease".to_string());
    }
    if failed.is_empty() {
        Ok(report)
    } else {
        Err(HarnessError::Verification(failed))
    }
}

struct Check {
    name: &'static str,
    value: f64,
    threshold: f64,
    passed: bool,
}

fn rate_check(name: &'static str, gaps: &[f64], rate: Option<f64>, min_rate: f64) -> Check {
    // Sweeps that are exact up to roundoff have no rate to measure.
    let exact = gaps.iter().all(|g| *g <= 1e-12);
    let value = rate.unwrap_or(f64::NAN);
    Check {
        name,
        value,
        threshold: min_rate,
        passed: exact || value >= min_rate,
    }
}

fn verify_checks(setup: &Setup, options: &RunOptions, checks: &mut Vec<Check>) -> Result<(), HarnessError> {
    let eps = if setup.config.numerics.epsilons.is_empty() {
        DEFAULT_SWEEP.to_vec()
    } else {
        setup.config.numerics.epsilons.clone()
    };
    let n_layers = setup.config.numerics.n_layers;

    // Flat edge with constant data: both identities hold exactly.
    let flat = PolygonalDomain::unit_square([
        BoundaryLabel::Neumann,
        BoundaryLabel::Insulated,
        BoundaryLabel::Neumann,
        BoundaryLabel::Dirichlet,
    ])
    .map_err(solver_error)?;
    let profile = crate::geometry::build_transversal(&flat, crate::geometry::TransversalMode::NormalField)
        .map_err(solver_error)?;
    let fb = InsulatedBoundary::new(
        &flat,
        &profile,
        &crate::geometry::InsulatedPolyline::uniform(&flat, setup.config.numerics.h),
    )
    .map_err(solver_error)?;
    let fd = DistributionProfile::constant_d(&fb, 1.0).map_err(solver_error)?;
    let r = check_transformation_formula(&fb, &fd, &eps, n_layers, |_| 1.0).map_err(solver_error)?;
    let worst = r.rows.iter().map(|row| row.volume_gap().max(row.boundary_gap())).fold(0.0, f64::max);
    checks.push(Check {
        name: "transform_flat",
        value: worst,
        threshold: 1e-12,
        passed: worst <= 1e-12,
    });

    let dist = setup.distribution()?;
    if let Some(i) = dist.d().iter().position(|d| *d <= 0.0) {
        return Err(HarnessError::Config(format!(
            "distribution: thickness must be positive for layer checks, d = {} at node {i}",
            dist.d()[i]
        )));
    }
    let b = &setup.boundary;
    let smooth = |x: crate::geometry::Vec2| 1.0 + x.x + x.y * x.y;
    let r = check_transformation_formula(b, &dist, &eps, n_layers, smooth).map_err(solver_error)?;
    let gaps: Vec<f64> = r.rows.iter().map(|row| row.volume_gap()).collect();
    checks.push(rate_check("transform_volume_rate", &gaps, r.volume_rate.map(|f| f.rate), 1.8));
    let rem: Vec<f64> = r.rows.iter().map(|row| row.boundary_remainder).collect();
    let bounded = rem.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9) + 1e-12);
    checks.push(Check {
        name: "transform_boundary_remainder",
        value: rem.iter().copied().fold(0.0, f64::max),
        threshold: f64::NAN,
        passed: bounded,
    });

    let r = check_lebesgue_limit(b, &dist, &eps, |_| 1.0, smooth, 2.0).map_err(solver_error)?;
    let gaps: Vec<f64> = r.rows.iter().map(|row| row.gap).collect();
    checks.push(rate_check("lebesgue_rate", &gaps, r.rate.map(|f| f.rate), 0.9));

    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let spec = LayerSpec {
        epsilon: eps[0],
        boundary: b,
        distribution: &dist,
    };
    let thick = mesh_thick(&setup.body, &spec, n_layers).map_err(solver_error)?;
    let mut violations = 0;
    for _ in 0..100 {
        let v: Vec<f64> = (0..thick.mesh.node_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let p = check_poincare(&thick, &spec, &v).map_err(solver_error)?;
        if !p.holds() || !p.trace_holds() {
            violations += 1;
        }
    }
    checks.push(Check {
        name: "poincare_random",
        value: violations as f64,
        threshold: 0.0,
        passed: violations == 0,
    });

    let solves = par_map(options.threads, &eps, |&e| thick_solve(setup, &dist, e));
    let solves = solves.into_iter().collect::<Result<Vec<_>, _>>()?;
    let pairs: Vec<(&ThickMesh, &[f64])> = solves.iter().map(|(t, s)| (t, &s.u[..])).collect();
    let rep = equicoercivity_report(&pairs);
    let spread = rep.spread.iter().copied().fold(1.0, f64::max);
    checks.push(Check {
        name: "equicoercivity_band",
        value: spread,
        threshold: 2.0,
        passed: rep.within_band() && rep.bounded,
    });

    let reduced = reduced_functional(&setup.body, b, &setup.problem, &dist, setup.config.quadrature())
        .and_then(|f| f.solve(&setup.solve_options()))
        .map_err(solver_error)?;
    let gaps: Vec<f64> = solves.iter().map(|(_, s)| (s.energy.total - reduced.energy.total).abs()).collect();
    let tiny = 1e-14 * reduced.energy.total.abs().max(1.0);
    checks.push(Check {
        name: "gamma_gap_decrease",
        value: gaps.last().copied().unwrap_or(0.0),
        threshold: f64::NAN,
        passed: gaps.windows(2).all(|w| w[1] < w[0] || w[0].max(w[1]) <= tiny),
    });
    Ok(())
}

/// Runs the diagnostic suite and writes `verify.csv`.
pub fn verify(setup: &Setup, options: &RunOptions) -> Result<Report, HarnessError> {
    let mut checks = Vec::new();
    let mut failed = Vec::new();
    if let Err(e) = verify_checks(setup, options, &mut checks) {
        failed.push(format!("setup ({e})"));
    }
    let mut report = Report::default();
    let mut csv = Csv::new(&["check", "status", "value", "threshold"]);
    for c in &checks {
        let status = if c.passed { "pass" } else { "fail" };
        csv.row(&[c.name.to_string(), status.into(), c.value.to_string(), c.threshold.to_string()]);
        report.lines.push(format!("{status} {} ({})", c.name, c.value));
        if !c.passed {
            failed.push(c.name.to_string());
        }
    }
    if let Some(f) = failed.first().filter(|f| f.starts_with("setup")) {
        csv.row(&["setup".into(), "fail".into(), "NaN".into(), "NaN".into()]);
        report.lines.push(format!("fail {f}"));
    }
    csv.write(&options.out, "verify.csv", &mut report)?;
    if failed.is_empty() {
        Ok(report)
    } else {
        Err(HarnessError::Verification(failed))
    }
}

/// Mesh statistics and the admissible layer thickness: `mesh_info.csv`, `mesh.vtk`.
pub fn mesh_info(setup: &Setup, options: &RunOptions) -> Result<Report, HarnessError> {
    let m = &setup.body;
    let b = &setup.boundary;
    let dist = setup.distribution()?;
    let eps0 = if dist.d().iter().all(|d| *d > 0.0) {
        check_bilipschitz(b, &dist, 1.0)
    } else {
        0.0
    };
    let rows: [(&str, f64); 10] = [
        ("nodes", m.node_count() as f64),
        ("triangles", m.triangles.len() as f64),
        ("min_angle_deg", m.min_angle_deg()),
        ("max_edge", m.max_edge()),
        ("area", setup.domain.area()),
        ("insulated_nodes", b.node_count() as f64),
        ("insulated_length", b.total_length()),
        ("neumann_length", m.label_length(FacetLabel::Neumann)),
        ("kappa", b.kappa()),
        ("epsilon_max", eps0),
    ];
    let mut report = Report::default();
    let mut csv = Csv::new(&["quantity", "value"]);
    for (k, v) in rows {
        csv.row(&[k.to_string(), v.to_string()]);
        report.lines.push(format!("{k} {v}"));
    }
    csv.write(&options.out, "mesh_info.csv", &mut report)?;
    let mut on_gamma = vec![0.0; m.node_count()];
    for &i in b.mesh_nodes() {
        on_gamma[i] = 1.0;
    }
    vtk(setup, &options.out, "mesh.vtk", m, &[("insulated", &on_gamma)], &mut report)?;
    Ok(report)
}
