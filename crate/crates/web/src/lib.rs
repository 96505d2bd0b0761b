//! Browser bindings: solve with uniform insulation, optimize the
//! distribution, and sweep the layer thickness. Flat `f64`/`u32` arrays
//! cross the boundary so the page can draw straight onto a canvas.

use insulate_core::geometry::{build_transversal, vec2, BoundaryLabel::*, InsulatedBoundary, LayerSpec, PolygonalDomain, TransversalMode};
use insulate_core::meshing::{mesh_body, mesh_thick, TriangleMesh};
use insulate_core::models::{solve_reduced, solve_thick, DistributionProfile, ProblemConfig, ScalarField, SolveOptions};
use insulate_core::optimizer::{alternate_minimize, OptimizerOptions, OptimizerStatus};
use wasm_bindgen::prelude::*;

fn shape(name: &str) -> Result<PolygonalDomain, String> {
    let d = match name {
        "slab" => PolygonalDomain::unit_square([Neumann, Insulated, Neumann, Dirichlet]),
        "square" => PolygonalDomain::unit_square([Insulated; 4]),
        "lshape" => PolygonalDomain::polygon(
            vec![
                vec2(0.0, 0.0),
                vec2(2.0, 0.0),
                vec2(2.0, 1.0),
                vec2(1.0, 1.0),
                vec2(1.0, 2.0),
                vec2(0.0, 2.0),
            ],
            &[Dirichlet, Insulated, Insulated, Insulated, Insulated, Neumann],
        ),
        other => return Err(format!("unknown shape `{other}`")),
    };
    d.map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub struct Demo {
    body: TriangleMesh,
    boundary: InsulatedBoundary,
    u: Vec<f64>,
    d: Vec<f64>,
    history: Vec<f64>,
}

#[wasm_bindgen]
impl Demo {
    /// Meshes one of `slab`, `square` or `lshape` at size `h`.
    #[wasm_bindgen(constructor)]
    pub fn new(name: &str, h: f64) -> Result<Demo, String> {
        let domain = shape(name)?;
        let body = mesh_body(&domain, h).map_err(|e| e.to_string())?;
        let profile = build_transversal(&domain, TransversalMode::NormalField).map_err(|e| e.to_string())?;
        let boundary = InsulatedBoundary::new(&domain, &profile, &body.insulated).map_err(|e| e.to_string())?;
        let n = boundary.node_count();
        Ok(Demo {
            u: vec![0.0; body.node_count()],
            d: vec![0.0; n],
            history: Vec::new(),
            body,
            boundary,
        })
    }

    fn problem(source: &str, m: f64, beta: f64) -> Result<ProblemConfig, String> {
        Ok(ProblemConfig {
            beta,
            m,
            f: ScalarField::parse(source).map_err(|e| e.to_string())?,
            ..ProblemConfig::zero()
        })
    }

    /// Uniform insulation of total mass `m`; returns the energy.
    pub fn solve(&mut self, source: &str, m: f64, beta: f64) -> Result<f64, String> {
        let config = Self::problem(source, m, beta)?;
        let dist = DistributionProfile::uniform_mass(&self.boundary, m).map_err(|e| e.to_string())?;
        let r = solve_reduced(&self.body, &self.boundary, &config, &dist, &SolveOptions::default())
            .map_err(|e| e.to_string())?;
        self.u = r.u;
        self.d = dist.d().to_vec();
        self.history = vec![r.energy.total];
        Ok(r.energy.total)
    }

    /// Alternating minimization from the uniform profile; returns the
    /// final energy and keeps the history.
    pub fn optimize(&mut self, source: &str, m: f64, beta: f64) -> Result<f64, String> {
        let config = Self::problem(source, m, beta)?;
        let init = DistributionProfile::uniform_mass(&self.boundary, m).map_err(|e| e.to_string())?;
        let st = alternate_minimize(&self.body, &self.boundary, &config, init, &OptimizerOptions::default())
            .map_err(|e| e.to_string())?;
        if st.status == OptimizerStatus::DegenerateTrace {
            return Err("the boundary trace vanishes; nothing to optimize".into());
        }
        self.d = st.distribution.d().to_vec();
        self.history = st.energy_history.clone();
        self.u = st.u;
        Ok(self.history.last().copied().unwrap_or(f64::NAN))
    }

    /// `|E_eps - E_0|` for each thickness, using the current profile. Fails
    /// if the profile leaves part of the boundary bare.
    pub fn sweep(&self, source: &str, m: f64, beta: f64, epsilons: Vec<f64>) -> Result<Vec<f64>, String> {
        let config = Self::problem(source, m, beta)?;
        let dist = DistributionProfile::from_d(&self.boundary, self.d.clone()).map_err(|e| e.to_string())?;
        let opts = SolveOptions::default();
        let reduced = solve_reduced(&self.body, &self.boundary, &config, &dist, &opts)
            .map_err(|e| e.to_string())?
            .energy
            .total;
        epsilons
            .iter()
            .map(|&epsilon| {
                let spec = LayerSpec {
                    epsilon,
                    boundary: &self.boundary,
                    distribution: &dist,
                };
                let t = mesh_thick(&self.body, &spec, 2).map_err(|e| format!("epsilon = {epsilon}: {e}"))?;
                let e = solve_thick(&t, &config, &opts).map_err(|e| e.to_string())?.energy.total;
                Ok((e - reduced).abs())
            })
            .collect()
    }

    /// Node coordinates as `[x0, y0, x1, y1, ...]`.
    pub fn nodes(&self) -> Vec<f64> {
        self.body.nodes.iter().flat_map(|p| [p.x, p.y]).collect()
    }

    pub fn triangles(&self) -> Vec<u32> {
        self.body.triangles.iter().flatten().map(|&i| i as u32).collect()
    }

    pub fn temperature(&self) -> Vec<f64> {
        self.u.clone()
    }

    /// Insulated boundary nodes followed by their offsets `P + scale d k`,
    /// as `[x, y, ox, oy, ...]`, chain by chain.
    pub fn layer(&self, scale: f64) -> Vec<f64> {
        let (p, k) = (self.boundary.points(), self.boundary.k());
        (0..p.len())
            .flat_map(|i| {
                let o = p[i] + k[i] * (scale * self.d[i]);
                [p[i].x, p[i].y, o.x, o.y]
            })
            .collect()
    }

    /// `(first node, node count, closed)` triples of the insulated chains.
    pub fn chains(&self) -> Vec<u32> {
        self.boundary
            .chains()
            .iter()
            .flat_map(|&(a, b, closed)| [a as u32, b as u32, closed as u32])
            .collect()
    }

    pub fn thickness(&self) -> Vec<f64> {
        self.d.clone()
    }

    pub fn history(&self) -> Vec<f64> {
        self.history.clone()
    }
}
