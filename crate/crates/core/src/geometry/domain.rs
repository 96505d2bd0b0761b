use serde::{Deserialize, Serialize};

use super::{cross, vec2, GeometryError, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryLabel {
    Insulated,
    Dirichlet,
    Neumann,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    pub label: BoundaryLabel,
}

/// A maximal run of consecutive insulated segments along one boundary loop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InsulatedChain {
    /// Segment indices in boundary order.
    pub segments: Vec<usize>,
    /// The whole loop is insulated; the last segment connects back to the first.
    pub closed: bool,
}

/// Result of a closest point query against the boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub point: Vec2,
    pub distance: f64,
    pub segment: usize,
    /// Position of the foot along `segment`, in [0, 1].
    pub param: f64,
    /// Another segment reaches a different foot at the same distance
    /// (the query point sits on the medial axis).
    pub multiple: bool,
}

/// A polygonal body with a labelled boundary.
///
/// Outer loops run counter-clockwise and holes clockwise, so the outward
/// normal of every segment is the clockwise rotation of its unit tangent.
#[derive(Debug, Clone, PartialEq)]
pub struct PolygonalDomain {
    vertices: Vec<Vec2>,
    segments: Vec<Segment>,
    loops: Vec<Vec<usize>>,
}

const MULTIPLICITY_TOL: f64 = 1e-12;

impl PolygonalDomain {
    pub fn new(vertices: Vec<Vec2>, segments: Vec<Segment>) -> Result<Self, GeometryError> {
        let invalid = |msg: String| Err(GeometryError::InvalidDomain(msg));
        if vertices.len() < 3 {
            return invalid(format!("need at least 3 vertices, got {}", vertices.len()));
        }
        if let Some(i) = vertices.iter().position(|v| !v.x.is_finite() || !v.y.is_finite()) {
            return invalid(format!("vertex {i} is not finite"));
        }
        for (i, s) in segments.iter().enumerate() {
            if s.start >= vertices.len() || s.end >= vertices.len() {
                return invalid(format!("segment {i} references a missing vertex"));
            }
            if (vertices[s.end] - vertices[s.start]).norm() <= 0.0 {
                return invalid(format!("segment {i} has zero length"));
            }
        }
        if !segments.iter().any(|s| s.label == BoundaryLabel::Insulated) {
            return Err(GeometryError::NoInsulatedBoundary);
        }

        // Every used vertex must have exactly one outgoing and one incoming segment.
        let mut outgoing = vec![None; vertices.len()];
        let mut incoming = vec![0usize; vertices.len()];
        for (i, s) in segments.iter().enumerate() {
            if outgoing[s.start].replace(i).is_some() {
                return invalid(format!("vertex {} starts more than one segment", s.start));
            }
            incoming[s.end] += 1;
        }
        for (v, out) in outgoing.iter().enumerate() {
            if out.is_some() != (incoming[v] == 1) || incoming[v] > 1 {
                return invalid(format!("vertex {v} is not on exactly one closed loop"));
            }
        }

        let mut loops = Vec::new();
        let mut visited = vec![false; segments.len()];
        for first in 0..segments.len() {
            if visited[first] {
                continue;
            }
            let mut lp = Vec::new();
            let mut cur = first;
            while !visited[cur] {
                visited[cur] = true;
                lp.push(cur);
                cur = outgoing[segments[cur].end].expect("checked above");
            }
            if cur != first {
                return invalid("segments do not form closed loops".into());
            }
            if lp.len() < 3 {
                return invalid(format!("loop through segment {first} has fewer than 3 segments"));
            }
            loops.push(lp);
        }

        let domain = PolygonalDomain {
            vertices,
            segments,
            loops,
        };
        domain.check_simple()?;
        domain.check_orientation()?;
        Ok(domain)
    }

    /// Axis-aligned rectangle with labels for the bottom, right, top and left sides.
    pub fn rectangle(min: Vec2, max: Vec2, labels: [BoundaryLabel; 4]) -> Result<Self, GeometryError> {
        let vertices = vec![min, vec2(max.x, min.y), max, vec2(min.x, max.y)];
        let segments = (0..4)
            .map(|i| Segment {
                start: i,
                end: (i + 1) % 4,
                label: labels[i],
            })
            .collect();
        Self::new(vertices, segments)
    }

    pub fn unit_square(labels: [BoundaryLabel; 4]) -> Result<Self, GeometryError> {
        Self::rectangle(vec2(0.0, 0.0), vec2(1.0, 1.0), labels)
    }

    /// Counter-clockwise polygon from a vertex list, one label per edge
    /// (edge `i` runs from vertex `i` to vertex `i + 1`).
    pub fn polygon(vertices: Vec<Vec2>, labels: &[BoundaryLabel]) -> Result<Self, GeometryError> {
        if labels.len() != vertices.len() {
            return Err(GeometryError::InvalidDomain(format!(
                "{} labels for {} edges",
                labels.len(),
                vertices.len()
            )));
        }
        let n = vertices.len();
        let segments = (0..n)
            .map(|i| Segment {
                start: i,
                end: (i + 1) % n,
                label: labels[i],
            })
            .collect();
        Self::new(vertices, segments)
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Segment indices of each boundary loop, in traversal order.
    pub fn loops(&self) -> &[Vec<usize>] {
        &self.loops
    }

    pub fn segment_points(&self, i: usize) -> (Vec2, Vec2) {
        let s = &self.segments[i];
        (self.vertices[s.start], self.vertices[s.end])
    }

    pub fn segment_length(&self, i: usize) -> f64 {
        let (a, b) = self.segment_points(i);
        (b - a).norm()
    }

    pub fn tangent(&self, i: usize) -> Vec2 {
        let (a, b) = self.segment_points(i);
        (b - a).normalize()
    }

    /// Outward unit normal: clockwise rotation of the tangent.
    pub fn normal(&self, i: usize) -> Vec2 {
        let t = self.tangent(i);
        vec2(t.y, -t.x)
    }

    pub fn point_on(&self, segment: usize, param: f64) -> Vec2 {
        let (a, b) = self.segment_points(segment);
        a + (b - a) * param
    }

    pub fn area(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| 0.5 * cross(&self.vertices[s.start], &self.vertices[s.end]))
            .sum()
    }

    pub fn label_length(&self, label: BoundaryLabel) -> f64 {
        (0..self.segments.len())
            .filter(|&i| self.segments[i].label == label)
            .map(|i| self.segment_length(i))
            .sum()
    }

    /// Even-odd containment test for points strictly inside.
    pub fn contains(&self, p: &Vec2) -> bool {
        let mut inside = false;
        for s in &self.segments {
            let a = self.vertices[s.start];
            let b = self.vertices[s.end];
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    pub fn closest_point_projection(&self, p: &Vec2) -> Projection {
        let mut best: Option<Projection> = None;
        let mut feet: Vec<(f64, Vec2)> = Vec::with_capacity(self.segments.len());
        for i in 0..self.segments.len() {
            let (a, b) = self.segment_points(i);
            let ab = b - a;
            let param = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
            let foot = a + ab * param;
            let distance = (p - foot).norm();
            feet.push((distance, foot));
            if best.is_none_or(|b| distance < b.distance) {
                best = Some(Projection {
                    point: foot,
                    distance,
                    segment: i,
                    param,
                    multiple: false,
                });
            }
        }
        let mut best = best.expect("domain has segments");
        let scale = 1.0 + best.distance;
        best.multiple = feet.iter().any(|(d, foot)| {
            (d - best.distance).abs() <= MULTIPLICITY_TOL * scale
                && (foot - best.point).norm() > MULTIPLICITY_TOL * scale
        });
        best
    }

    /// Positive outside, negative inside, zero on the boundary.
    pub fn signed_distance(&self, p: &Vec2) -> f64 {
        let d = self.closest_point_projection(p).distance;
        if d == 0.0 {
            0.0
        } else if self.contains(p) {
            -d
        } else {
            d
        }
    }

    /// Maximal runs of insulated segments, one list per run.
    pub fn insulated_chains(&self) -> Vec<InsulatedChain> {
        let mut chains = Vec::new();
        for lp in &self.loops {
            let is_ins = |k: usize| self.segments[lp[k % lp.len()]].label == BoundaryLabel::Insulated;
            let n = lp.len();
            if (0..n).all(is_ins) {
                chains.push(InsulatedChain {
                    segments: lp.clone(),
                    closed: true,
                });
                continue;
            }
            // Start scanning right after a non-insulated segment so runs do not wrap.
            let start = (0..n).find(|&k| !is_ins(k)).expect("some segment is not insulated") + 1;
            let mut run = Vec::new();
            for k in start..start + n {
                if is_ins(k) {
                    run.push(lp[k % n]);
                } else if !run.is_empty() {
                    chains.push(InsulatedChain {
                        segments: std::mem::take(&mut run),
                        closed: false,
                    });
                }
            }
            if !run.is_empty() {
                chains.push(InsulatedChain {
                    segments: run,
                    closed: false,
                });
            }
        }
        chains
    }

    fn check_simple(&self) -> Result<(), GeometryError> {
        let n = self.segments.len();
        for i in 0..n {
            for j in i + 1..n {
                let (si, sj) = (&self.segments[i], &self.segments[j]);
                let shared = [si.start, si.end]
                    .iter()
                    .filter(|v| **v == sj.start || **v == sj.end)
                    .count();
                let (a, b) = self.segment_points(i);
                let (c, d) = self.segment_points(j);
                let hit = match shared {
                    0 => segments_intersect(a, b, c, d),
                    // Adjacent segments may only touch at the shared vertex.
                    1 => collinear_overlap(a, b, c, d),
                    _ => true,
                };
                if hit {
                    return Err(GeometryError::InvalidDomain(format!(
                        "segments {i} and {j} intersect"
                    )));
                }
            }
        }
        Ok(())
    }

    fn check_orientation(&self) -> Result<(), GeometryError> {
        for i in 0..self.segments.len() {
            let (a, b) = self.segment_points(i);
            let mid = (a + b) * 0.5;
            let delta = 1e-7 * (b - a).norm();
            let n = self.normal(i);
            if !self.contains(&(mid - n * delta)) || self.contains(&(mid + n * delta)) {
                return Err(GeometryError::InvalidDomain(format!(
                    "segment {i} is oriented with the interior on its outward side"
                )));
            }
        }
        Ok(())
    }
}

fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    cross(&(b - a), &(c - a))
}

fn on_segment(a: Vec2, b: Vec2, p: Vec2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

fn segments_intersect(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

/// Adjacent segments overlapping along a common line (a fold back).
fn collinear_overlap(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    if orient(a, b, c).abs() > 0.0 || orient(a, b, d).abs() > 0.0 {
        return false;
    }
    let t = b - a;
    let proj = |p: Vec2| (p - a).dot(&t) / t.norm_squared();
    let (lo, hi) = {
        let (u, v) = (proj(c), proj(d));
        (u.min(v), u.max(v))
    };
    // Overlap of more than a single point.
    hi.min(1.0) - lo.max(0.0) > 1e-12
}
