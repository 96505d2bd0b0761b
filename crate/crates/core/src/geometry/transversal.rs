use super::{GeometryError, InsulatedChain, PolygonalDomain, Vec2};

#[derive(Debug, Clone, PartialEq)]
pub enum TransversalMode {
    /// Segment normal inside segments, normalized angle bisector at chain vertices.
    NormalField,
    /// Radial field `(s - center) / |s - center|` for a body star-shaped about `center`.
    StarShaped(Vec2),
    /// One vector per chain vertex (chain order), interpolated linearly and renormalized.
    UserTable(Vec<Vec<Vec2>>),
}

/// A continuous unit field `k` on the insulated boundary with a certified
/// lower bound `kappa` on `k . n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransversalProfile {
    mode: TransversalMode,
    chains: Vec<InsulatedChain>,
    node_vectors: Vec<Vec<Vec2>>,
    kappa: f64,
}

impl TransversalProfile {
    pub fn mode(&self) -> &TransversalMode {
        &self.mode
    }

    pub fn chains(&self) -> &[InsulatedChain] {
        &self.chains
    }

    /// Unit vectors at the vertices of each insulated chain.
    pub fn node_vectors(&self) -> &[Vec<Vec2>] {
        &self.node_vectors
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// `k` at the point `param` in [0, 1] along the `pos`-th segment of chain `chain`.
    pub fn direction(&self, domain: &PolygonalDomain, chain: usize, pos: usize, param: f64) -> Vec2 {
        let c = &self.chains[chain];
        let seg = c.segments[pos];
        let nodes = &self.node_vectors[chain];
        let next = if c.closed { (pos + 1) % nodes.len() } else { pos + 1 };
        match &self.mode {
            TransversalMode::NormalField => {
                if param <= 0.0 {
                    nodes[pos]
                } else if param >= 1.0 {
                    nodes[next]
                } else {
                    domain.normal(seg)
                }
            }
            TransversalMode::StarShaped(center) => (domain.point_on(seg, param) - center).normalize(),
            TransversalMode::UserTable(_) => (nodes[pos] * (1.0 - param) + nodes[next] * param).normalize(),
        }
    }

    /// Samples of `k . n` at both ends of every insulated segment.
    pub fn endpoint_dots(&self, domain: &PolygonalDomain) -> Vec<f64> {
        let mut out = Vec::new();
        for (ci, c) in self.chains.iter().enumerate() {
            for (pos, &seg) in c.segments.iter().enumerate() {
                let n = domain.normal(seg);
                for param in [0.0, 1.0] {
                    out.push(self.direction(domain, ci, pos, param).dot(&n));
                }
            }
        }
        out
    }
}

fn chain_vertex_count(c: &InsulatedChain) -> usize {
    if c.closed {
        c.segments.len()
    } else {
        c.segments.len() + 1
    }
}

pub fn build_transversal(
    domain: &PolygonalDomain,
    mode: TransversalMode,
) -> Result<TransversalProfile, GeometryError> {
    let chains = domain.insulated_chains();
    let node_vectors: Vec<Vec<Vec2>> = match &mode {
        TransversalMode::NormalField => chains
            .iter()
            .map(|c| {
                let m = c.segments.len();
                (0..chain_vertex_count(c))
                    .map(|v| {
                        let before = if v > 0 {
                            Some(c.segments[v - 1])
                        } else if c.closed {
                            Some(c.segments[m - 1])
                        } else {
                            None
                        };
                        let after = c.segments.get(v).copied();
                        let sum = before.map_or(Vec2::zeros(), |s| domain.normal(s))
                            + after.map_or(Vec2::zeros(), |s| domain.normal(s));
                        if sum.norm() < 1e-12 {
                            return Err(GeometryError::NonTransversal { min_dot: -1.0 });
                        }
                        Ok(sum.normalize())
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<_, _>>()?,
        TransversalMode::StarShaped(center) => {
            if !domain.contains(center) {
                return Err(GeometryError::InvalidDomain(format!(
                    "star center ({}, {}) is not inside the domain",
                    center.x, center.y
                )));
            }
            chains
                .iter()
                .map(|c| {
                    (0..chain_vertex_count(c))
                        .map(|v| {
                            let p = if v < c.segments.len() {
                                domain.point_on(c.segments[v], 0.0)
                            } else {
                                domain.point_on(c.segments[v - 1], 1.0)
                            };
                            (p - center).normalize()
                        })
                        .collect()
                })
                .collect()
        }
        TransversalMode::UserTable(table) => {
            if table.len() != chains.len() {
                return Err(GeometryError::InvalidDomain(format!(
                    "transversal table has {} chains, domain has {}",
                    table.len(),
                    chains.len()
                )));
            }
            let mut out = Vec::with_capacity(table.len());
            for (c, vectors) in chains.iter().zip(table) {
                if vectors.len() != chain_vertex_count(c) {
                    return Err(GeometryError::InvalidDomain(format!(
                        "transversal table row has {} vectors, chain has {} vertices",
                        vectors.len(),
                        chain_vertex_count(c)
                    )));
                }
                if let Some(bad) = vectors.iter().find(|k| (k.norm() - 1.0).abs() > 1e-12) {
                    return Err(GeometryError::InvalidDomain(format!(
                        "transversal vector ({}, {}) is not unit length",
                        bad.x, bad.y
                    )));
                }
                out.push(vectors.clone());
            }
            out
        }
    };

    let mut profile = TransversalProfile {
        mode,
        chains,
        node_vectors,
        kappa: 0.0,
    };
    let min_dot = profile
        .endpoint_dots(domain)
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    if min_dot <= 0.0 {
        return Err(GeometryError::NonTransversal { min_dot });
    }
    profile.kappa = min_dot;
    Ok(profile)
}
