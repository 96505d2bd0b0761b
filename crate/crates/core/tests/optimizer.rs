use insulate_core::geometry::{
    build_transversal, BoundaryLabel, BoundaryLabel::*, InsulatedBoundary, PolygonalDomain, TransversalMode,
};
use insulate_core::meshing::{mesh_body, TriangleMesh};
use insulate_core::models::{solve_reduced, DistributionProfile, ProblemConfig, ScalarField, SolveOptions};
use insulate_core::optimizer::{alternate_minimize, OptimizerOptions, OptimizerStatus};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn square(labels: [BoundaryLabel; 4], h: f64) -> (TriangleMesh, InsulatedBoundary) {
    let d = PolygonalDomain::unit_square(labels).unwrap();
    let mesh = mesh_body(&d, h).unwrap();
    let p = build_transversal(&d, TransversalMode::NormalField).unwrap();
    let b = InsulatedBoundary::new(&d, &p, &mesh.insulated).unwrap();
    (mesh, b)
}

/// Minimum reduced energy for a given nodal `d~`.
fn reduced_min(mesh: &TriangleMesh, b: &InsulatedBoundary, config: &ProblemConfig, dt: Vec<f64>) -> f64 {
    let d = DistributionProfile::from_d_tilde(b, dt).unwrap();
    solve_reduced(mesh, b, config, &d, &SolveOptions::default()).unwrap().energy.total
}

#[test]
fn two_segment_brute_force_oracle() {
    let (mesh, b) = square([Neumann, Insulated, Neumann, Dirichlet], 0.5);
    assert_eq!(b.node_count(), 3);
    let w = b.lumped_weights();
    let config = ProblemConfig {
        f: ScalarField::parse("4 * y^3").unwrap(),
        m: 0.2,
        ..ProblemConfig::zero()
    };
    // Grid-zoom search over the two free nodal values; the objective is convex.
    let eval = |x: f64, y: f64| {
        let mid = (config.m - w[0] * x - w[2] * y) / w[1];
        if x < 0.0 || y < 0.0 || mid < 0.0 {
            return f64::INFINITY;
        }
        reduced_min(&mesh, &b, &config, vec![x, mid, y])
    };
    let (mut cx, mut cy, mut span) = (0.4, 0.4, 0.4);
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for _ in 0..8 {
        for i in 0..=20 {
            for j in 0..=20 {
                let x = cx - span + 2.0 * span * i as f64 / 20.0;
                let y = cy - span + 2.0 * span * j as f64 / 20.0;
                let e = eval(x, y);
                if e < best.0 {
                    best = (e, x, y);
                }
            }
        }
        (cx, cy) = (best.1, best.2);
        span *= 0.3;
    }
    let init = DistributionProfile::uniform_mass(&b, config.m).unwrap();
    let s = alternate_minimize(&mesh, &b, &config, init, &OptimizerOptions::default()).unwrap();
    assert!(s.converged());
    assert!((s.energy() - best.0).abs() < 1e-4, "{} vs {}", s.energy(), best.0);
    assert!(s.energy() <= best.0 + 1e-9);
    // More insulation goes where the body is hotter.
    let dt = s.distribution.d_tilde();
    assert!(dt[2] > dt[0] || b.points()[0].y > b.points()[2].y);
}

#[test]
fn randomized_suite_is_monotone_and_mass_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let layouts = [
        [Neumann, Insulated, Neumann, Dirichlet],
        [Insulated, Insulated, Neumann, Dirichlet],
        [Insulated, Insulated, Insulated, Insulated],
        [Dirichlet, Insulated, Insulated, Neumann],
    ];
    for k in 0..20 {
        let labels = layouts[k % layouts.len()];
        let (mesh, b) = square(labels, 0.2);
        let (a, bx, by) = (rng.random_range(0.5..2.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let config = ProblemConfig {
            lambda: rng.random_range(0.5..2.0),
            beta: rng.random_range(0.5..4.0),
            m: rng.random_range(0.05..1.0),
            f: ScalarField::parse(&format!("{a} + {bx} * x + {by} * y * y")).unwrap(),
            g: ScalarField::constant(rng.random_range(0.0..0.5)),
            u_d: ScalarField::constant(0.0),
            u_inf: ScalarField::constant(rng.random_range(-0.5..0.0)),
        };
        let init = DistributionProfile::uniform_mass(&b, config.m).unwrap();
        let s = alternate_minimize(&mesh, &b, &config, init, &OptimizerOptions::default()).unwrap();
        assert_ne!(s.status, OptimizerStatus::DegenerateTrace, "config {k}");
        for pair in s.energy_history.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12 * pair[0].abs().max(1.0), "config {k}: {pair:?}");
        }
        for r in &s.records {
            assert!(r.mass_residual <= 1e-10, "config {k}: {r:?}");
            assert!(r.c > 0.0);
        }
    }
}

#[test]
fn small_mass_approaches_bare_energy() {
    let (mesh, b) = square([Neumann, Insulated, Neumann, Dirichlet], 0.2);
    let base = ProblemConfig {
        f: ScalarField::constant(1.0),
        ..ProblemConfig::zero()
    };
    let bare = reduced_min(&mesh, &b, &base, vec![0.0; b.node_count()]);
    let mut last = f64::INFINITY;
    for m in [1e-1, 1e-2, 1e-3] {
        let config = ProblemConfig { m, ..base.clone() };
        let init = DistributionProfile::uniform_mass(&b, m).unwrap();
        let s = alternate_minimize(&mesh, &b, &config, init, &OptimizerOptions::default()).unwrap();
        let gap = (s.energy() - bare).abs();
        assert!(gap < last);
        last = gap;
    }
    assert!(last < 1e-3);
}

#[test]
fn ambient_equal_to_body_is_degenerate() {
    let (mesh, b) = square([Insulated; 4], 0.25);
    let config = ProblemConfig {
        u_inf: ScalarField::constant(1.0),
        ..ProblemConfig::zero()
    };
    let init = DistributionProfile::uniform_mass(&b, 1.0).unwrap();
    let s = alternate_minimize(&mesh, &b, &config, init, &OptimizerOptions::default()).unwrap();
    assert_eq!(s.status, OptimizerStatus::DegenerateTrace);
    assert_eq!(s.net_heat_input, 0.0);
}
