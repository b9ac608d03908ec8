//! Convex polygons `D = ∩ {x . n^i > b_i}` with constant reflection
//! directions: vertices, minimality, maximal index sets, completely-S
//! tests and the cross-check against the general direction condition.

mod completely_s;
mod dw;

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{ScalarField, VectorField};
use crate::geometry::{BoundingBox, DeclaredCorner, Domain, DomainPiece, GeometryError, Point};
use crate::tolerances::Tolerances;

pub use completely_s::{is_completely_s, s_witness};
pub use dw::{check_dw_assumption, check_minimal_representation, equivalence_test, maximal_sets, Equivalence, Minimality};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolygonError {
    #[error("polygon is unbounded or has empty interior")]
    UnboundedOrEmpty,
    #[error("invalid polygon: {0}")]
    Invalid(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Half-plane data. Normals and directions are unitized on construction,
/// offsets rescaled with the normals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPolygon", into = "RawPolygon")]
pub struct PolygonSpec {
    normals: Vec<Point>,
    offsets: Vec<f64>,
    directions: Vec<Point>,
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPolygon {
    normals: Vec<[f64; 2]>,
    offsets: Vec<f64>,
    directions: Vec<[f64; 2]>,
}

impl TryFrom<RawPolygon> for PolygonSpec {
    type Error = PolygonError;

    fn try_from(r: RawPolygon) -> Result<Self, PolygonError> {
        let v = |a: &[[f64; 2]]| a.iter().map(|p| Point::new(p[0], p[1])).collect::<Vec<_>>();
        PolygonSpec::new(v(&r.normals), r.offsets, v(&r.directions))
    }
}

impl From<PolygonSpec> for RawPolygon {
    fn from(p: PolygonSpec) -> Self {
        let v = |a: &[Point]| a.iter().map(|p| [p.x, p.y]).collect();
        RawPolygon { normals: v(&p.normals), offsets: p.offsets, directions: v(&p.directions) }
    }
}

/// A polygon vertex with the constraints active there (0-based).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Vertex {
    pub point: Point,
    pub active: Vec<usize>,
}

impl PolygonSpec {
    pub fn new(normals: Vec<Point>, offsets: Vec<f64>, directions: Vec<Point>) -> Result<Self, PolygonError> {
        let m = normals.len();
        if m == 0 || offsets.len() != m || directions.len() != m {
            return Err(PolygonError::Invalid(format!(
                "need equally many normals, offsets and directions (got {m}, {}, {})",
                offsets.len(),
                directions.len()
            )));
        }
        let mut n_out = Vec::with_capacity(m);
        let mut b_out = Vec::with_capacity(m);
        for (k, (n, b)) in normals.iter().zip(&offsets).enumerate() {
            let len = n.norm();
            if !(len > 0.0) || !len.is_finite() || !b.is_finite() {
                return Err(PolygonError::Invalid(format!("constraint {} is degenerate", k + 1)));
            }
            let len = unit_or(len);
            n_out.push(n / len);
            b_out.push(b / len);
        }
        let mut g_out = Vec::with_capacity(m);
        for (k, g) in directions.iter().enumerate() {
            let len = g.norm();
            if !(len > 0.0) || !len.is_finite() {
                return Err(PolygonError::Invalid(format!("direction {} is zero", k + 1)));
            }
            g_out.push(g / unit_or(len));
        }
        for a in 0..m {
            for b in a + 1..m {
                if (n_out[a] - n_out[b]).norm() <= 1e-12 {
                    return Err(PolygonError::Invalid(format!("normals {} and {} coincide", a + 1, b + 1)));
                }
            }
        }
        Ok(PolygonSpec { normals: n_out, offsets: b_out, directions: g_out })
    }

    pub fn len(&self) -> usize {
        self.normals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.normals.is_empty()
    }

    pub fn normals(&self) -> &[Point] {
        &self.normals
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn directions(&self) -> &[Point] {
        &self.directions
    }

    /// `x . n^i - b_i`; positive inside.
    #[inline]
    pub fn slack(&self, i: usize, x: Point) -> f64 {
        x.dot(&self.normals[i]) - self.offsets[i]
    }

    /// The same polygon without constraint `j`.
    pub fn without(&self, j: usize) -> Self {
        let keep = |v: &[Point]| v.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, p)| *p).collect();
        PolygonSpec {
            normals: keep(&self.normals),
            offsets: self.offsets.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, b)| *b).collect(),
            directions: keep(&self.directions),
        }
    }

    /// Absolute tie tolerance for slacks.
    pub(crate) fn tie(&self, tol: f64) -> f64 {
        tol * (1.0 + self.offsets.iter().fold(0.0f64, |a, b| a.max(b.abs())))
    }

    /// Intersection of constraint lines `i` and `j`, if not parallel.
    pub(crate) fn line_meet(&self, i: usize, j: usize) -> Option<Point> {
        let (a, b) = (self.normals[i], self.normals[j]);
        let m = Matrix2::new(a.x, a.y, b.x, b.y);
        if m.determinant().abs() <= 1e-14 {
            return None;
        }
        m.lu().solve(&Vector2::new(self.offsets[i], self.offsets[j]))
    }

    /// Vertices in counter-clockwise order, found by clipping a large box
    /// with each half-plane in turn.
    pub fn enumerate_vertices(&self, vertex_tol: f64) -> Result<Vec<Vertex>, PolygonError> {
        let tie = self.tie(vertex_tol);
        let r = 1e6 * (1.0 + self.offsets.iter().fold(0.0f64, |a, b| a.max(b.abs())));
        // vertices with the label of the outgoing edge; None marks a box side
        let mut poly: Vec<(Point, Option<usize>)> =
            vec![(Point::new(-r, -r), None), (Point::new(r, -r), None), (Point::new(r, r), None), (Point::new(-r, r), None)];
        for c in 0..self.len() {
            let mut out = Vec::with_capacity(poly.len() + 1);
            for k in 0..poly.len() {
                let (p, label) = poly[k];
                let q = poly[(k + 1) % poly.len()].0;
                let (sp, sq) = (self.slack(c, p), self.slack(c, q));
                let cross = || p + (sp / (sp - sq)) * (q - p);
                match (sp >= 0.0, sq >= 0.0) {
                    (true, true) => out.push((p, label)),
                    (true, false) => {
                        out.push((p, label));
                        out.push((cross(), Some(c)));
                    }
                    (false, true) => out.push((cross(), label)),
                    (false, false) => {}
                }
            }
            poly = out;
            if poly.len() < 3 {
                return Err(PolygonError::UnboundedOrEmpty);
            }
        }
        let n = poly.len();
        let mut verts: Vec<Vertex> = Vec::with_capacity(n);
        for k in 0..n {
            let incoming = poly[(k + n - 1) % n].1;
            let outgoing = poly[k].1;
            let (Some(a), Some(b)) = (incoming, outgoing) else {
                return Err(PolygonError::UnboundedOrEmpty);
            };
            let point = if a == b { poly[k].0 } else { self.line_meet(a, b).unwrap_or(poly[k].0) };
            if verts.last().is_some_and(|v: &Vertex| (v.point - point).norm() <= tie) {
                continue;
            }
            let active = (0..self.len()).filter(|&i| self.slack(i, point).abs() <= tie).collect();
            verts.push(Vertex { point, active });
        }
        if verts.len() > 1 && (verts[0].point - verts[verts.len() - 1].point).norm() <= tie {
            verts.pop();
        }
        if verts.len() < 3 || shoelace(&verts) <= tie * tie {
            return Err(PolygonError::UnboundedOrEmpty);
        }
        Ok(verts)
    }

    /// The polygon as a general implicit domain: affine `psi^i`, constant
    /// `g^i`, one declared corner per vertex.
    pub fn to_domain(&self, tol: Tolerances) -> Result<Domain, PolygonError> {
        let verts = self.enumerate_vertices(tol.vertex_tol)?;
        let pieces = (0..self.len())
            .map(|i| {
                let (n, b) = (self.normals[i], self.offsets[i]);
                let psi = ScalarField::parse(&format!("({:?})*x1 + ({:?})*x2 - ({:?})", n.x, n.y, b))
                    .expect("affine expression parses");
                DomainPiece::new(format!("h{}", i + 1), psi, VectorField::constant(self.directions[i]))
            })
            .collect();
        let mut corners = Vec::new();
        for v in &verts {
            match v.active.as_slice() {
                [i, j] => corners.push(DeclaredCorner { point: v.point, pair: (*i, *j) }),
                _ => return Err(GeometryError::TooManyActive(v.point).into()),
            }
        }
        let (mut lo, mut hi) = (verts[0].point, verts[0].point);
        for v in &verts {
            lo = lo.inf(&v.point);
            hi = hi.sup(&v.point);
        }
        let pad = 0.25 * (hi - lo).max();
        let bbox = BoundingBox::new(lo.add_scalar(-pad), hi.add_scalar(pad));
        Ok(Domain::new(pieces, corners, bbox, tol)?)
    }
}

/// Leaves already-unit lengths alone so that normalization is idempotent.
fn unit_or(len: f64) -> f64 {
    if (len - 1.0).abs() <= 4.0 * f64::EPSILON {
        1.0
    } else {
        len
    }
}

fn shoelace(v: &[Vertex]) -> f64 {
    let n = v.len();
    0.5 * (0..n).map(|k| v[k].point.perp(&v[(k + 1) % n].point)).sum::<f64>()
}
