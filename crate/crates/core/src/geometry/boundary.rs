use super::{GeometryError, PolygonalDomain, TransversalProfile, Vec2};

/// A node of the insulated boundary discretization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryNode {
    pub mesh_node: usize,
    /// Index into the owning chain's segment list.
    pub pos: usize,
    /// Parameter in [0, 1] along that segment.
    pub param: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolylineChain {
    pub nodes: Vec<BoundaryNode>,
    pub closed: bool,
}

/// The shared discretization of the insulated boundary: the body mesh and
/// the layer extrusion use exactly these nodes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InsulatedPolyline {
    pub chains: Vec<PolylineChain>,
}

impl InsulatedPolyline {
    /// Splits every chain segment into `divisions[segment]` equal pieces.
    /// `mesh_node(segment, k)` names the k-th split point of a segment
    /// (k = 0 is its start vertex, k = divisions its end vertex).
    pub fn from_divisions(
        domain: &PolygonalDomain,
        divisions: &[usize],
        mut mesh_node: impl FnMut(usize, usize) -> usize,
    ) -> Self {
        let chains = domain
            .insulated_chains()
            .iter()
            .map(|c| {
                let mut nodes = Vec::new();
                for (pos, &seg) in c.segments.iter().enumerate() {
                    let n = divisions[seg].max(1);
                    for k in 0..n {
                        nodes.push(BoundaryNode {
                            mesh_node: mesh_node(seg, k),
                            pos,
                            param: k as f64 / n as f64,
                        });
                    }
                }
                if !c.closed {
                    let last = *c.segments.last().expect("non-empty chain");
                    nodes.push(BoundaryNode {
                        mesh_node: mesh_node(last, divisions[last].max(1)),
                        pos: c.segments.len() - 1,
                        param: 1.0,
                    });
                }
                PolylineChain {
                    nodes,
                    closed: c.closed,
                }
            })
            .collect();
        InsulatedPolyline { chains }
    }

    /// Splits every insulated segment into `ceil(L / h)` pieces with a
    /// standalone consecutive node numbering (no mesh attached).
    pub fn uniform(domain: &PolygonalDomain, h: f64) -> Self {
        let divisions = segment_divisions(domain, h);
        let mut ids = std::collections::BTreeMap::new();
        Self::from_divisions(domain, &divisions, |seg, k| {
            let s = domain.segments()[seg];
            let key = if k == 0 {
                (s.start, usize::MAX)
            } else if k == divisions[seg] {
                (s.end, usize::MAX)
            } else {
                (seg, k)
            };
            let next = ids.len();
            *ids.entry(key).or_insert(next)
        })
    }
}

/// `ceil(L / h)` pieces per domain segment.
pub fn segment_divisions(domain: &PolygonalDomain, h: f64) -> Vec<usize> {
    (0..domain.segments().len())
        .map(|s| ((domain.segment_length(s) / h) - 1e-9).ceil().max(1.0) as usize)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryFacet {
    /// Flattened node indices.
    pub a: usize,
    pub b: usize,
    pub chain: usize,
    pub length: f64,
    pub normal: Vec2,
}

/// Discretized insulated boundary with transversal data at every node.
///
/// Nodes of all chains are flattened into one index space. At chain vertices
/// the nodal normal is the normalized bisector of the adjacent segment
/// normals, so `k . n` and `d~ = (k . n) d` are single-valued per node.
#[derive(Debug, Clone, PartialEq)]
pub struct InsulatedBoundary {
    points: Vec<Vec2>,
    mesh_nodes: Vec<usize>,
    k: Vec<Vec2>,
    normals: Vec<Vec2>,
    arc: Vec<f64>,
    chains: Vec<(usize, usize, bool)>,
    facets: Vec<BoundaryFacet>,
    kappa: f64,
}

impl InsulatedBoundary {
    pub fn new(
        domain: &PolygonalDomain,
        profile: &TransversalProfile,
        polyline: &InsulatedPolyline,
    ) -> Result<Self, GeometryError> {
        if polyline.chains.len() != profile.chains().len() {
            return Err(GeometryError::InvalidLayer(
                "polyline and transversal profile disagree on chains".into(),
            ));
        }
        let mut b = InsulatedBoundary {
            points: Vec::new(),
            mesh_nodes: Vec::new(),
            k: Vec::new(),
            normals: Vec::new(),
            arc: Vec::new(),
            chains: Vec::new(),
            facets: Vec::new(),
            kappa: f64::INFINITY,
        };
        for (ci, chain) in polyline.chains.iter().enumerate() {
            let segs = &profile.chains()[ci].segments;
            let start = b.points.len();
            let count = chain.nodes.len();
            if count < 2 {
                return Err(GeometryError::InvalidLayer(format!("chain {ci} has fewer than 2 nodes")));
            }
            for node in &chain.nodes {
                let seg = segs[node.pos];
                let p = domain.point_on(seg, node.param);
                let n = if node.param > 0.0 && node.param < 1.0 {
                    domain.normal(seg)
                } else {
                    // Chain vertex: average the normals of the insulated segments meeting here.
                    let (prev, next) = if node.param <= 0.0 {
                        let prev = if node.pos > 0 {
                            Some(segs[node.pos - 1])
                        } else if chain.closed {
                            Some(segs[segs.len() - 1])
                        } else {
                            None
                        };
                        (prev, Some(seg))
                    } else {
                        let next = segs.get(node.pos + 1).copied().or(if chain.closed {
                            Some(segs[0])
                        } else {
                            None
                        });
                        (Some(seg), next)
                    };
                    let sum = prev.map_or(Vec2::zeros(), |s| domain.normal(s))
                        + next.map_or(Vec2::zeros(), |s| domain.normal(s));
                    sum.normalize()
                };
                b.points.push(p);
                b.mesh_nodes.push(node.mesh_node);
                b.k.push(profile.direction(domain, ci, node.pos, node.param));
                b.normals.push(n);
            }
            let mut s = 0.0;
            for j in 0..count {
                b.arc.push(s);
                let last = j + 1 == count;
                if last && !chain.closed {
                    break;
                }
                let (a, c) = (start + j, start + (j + 1) % count);
                let (pa, pc) = (b.points[a], b.points[c]);
                let t = pc - pa;
                let length = t.norm();
                if length <= 0.0 {
                    return Err(GeometryError::InvalidLayer(format!("zero-length facet in chain {ci}")));
                }
                let normal = Vec2::new(t.y, -t.x) / length;
                b.kappa = b.kappa.min(b.k[a].dot(&normal)).min(b.k[c].dot(&normal));
                b.facets.push(BoundaryFacet {
                    a,
                    b: c,
                    chain: ci,
                    length,
                    normal,
                });
                s += length;
            }
            b.chains.push((start, count, chain.closed));
        }
        if b.kappa <= 0.0 {
            return Err(GeometryError::NonTransversal { min_dot: b.kappa });
        }
        Ok(b)
    }

    pub fn node_count(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn mesh_nodes(&self) -> &[usize] {
        &self.mesh_nodes
    }

    pub fn k(&self) -> &[Vec2] {
        &self.k
    }

    pub fn normals(&self) -> &[Vec2] {
        &self.normals
    }

    pub fn k_dot_n(&self, node: usize) -> f64 {
        self.k[node].dot(&self.normals[node])
    }

    /// Arc length from the start of the node's chain.
    pub fn arc_length(&self) -> &[f64] {
        &self.arc
    }

    /// `(first node, node count, closed)` per chain.
    pub fn chains(&self) -> &[(usize, usize, bool)] {
        &self.chains
    }

    pub fn facets(&self) -> &[BoundaryFacet] {
        &self.facets
    }

    pub fn total_length(&self) -> f64 {
        self.facets.iter().map(|f| f.length).sum()
    }

    /// Minimum of `k . n` over facet endpoints, with facet normals.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Trapezoidal integral of nodal values (exact for piecewise linear data).
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.facets
            .iter()
            .map(|f| 0.5 * f.length * (values[f.a] + values[f.b]))
            .sum()
    }

    /// Nodal weights of the trapezoidal rule.
    pub fn lumped_weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.node_count()];
        for f in &self.facets {
            w[f.a] += 0.5 * f.length;
            w[f.b] += 0.5 * f.length;
        }
        w
    }
}
