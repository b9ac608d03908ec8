//! Implicit piecewise-smooth planar domains `D = D^1 ∩ ... ∩ D^m`.

mod corner;
mod sample;
mod sector;

use nalgebra::Vector2;
use serde::Serialize;
use thiserror::Error;

use crate::expr::{EvalError, MatrixField, ScalarField, VectorField};
use crate::tolerances::Tolerances;

pub use corner::{Corner, CornerKind, CuspLimit};
pub use sample::{newton_project, newton_project_tight};
pub use sector::{angle_of, unit_at, wrap_angle, Sector};

pub type Point = Vector2<f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("point ({}, {}) is not on the boundary", .0.x, .0.y)]
    NotOnBoundary(Point),
    #[error("gradient of piece {piece} degenerate at ({}, {})", .point.x, .point.y)]
    DegenerateGradient { piece: usize, point: Point },
    #[error("no tangent direction at ({}, {}) enters the domain uniquely", .0.x, .0.y)]
    AmbiguousTangent(Point),
    #[error("no boundary point of piece {0} found in the bounding box")]
    EmptyBoundary(usize),
    #[error("invalid declared corner {index}: {reason}")]
    InvalidCorner { index: usize, reason: String },
    #[error("more than two pieces active at ({}, {})", .0.x, .0.y)]
    TooManyActive(Point),
    #[error("invalid domain: {0}")]
    Invalid(String),
    #[error("field evaluation failed at ({}, {}): {source}", .point.x, .point.y)]
    Eval { point: Point, source: EvalError },
}

pub type Result<T> = std::result::Result<T, GeometryError>;

/// One constraint `psi > 0` together with its reflection field.
#[derive(Clone, Debug)]
pub struct DomainPiece {
    pub name: String,
    pub psi: ScalarField,
    pub g: VectorField,
    grad: VectorField,
    hess: MatrixField,
}

impl DomainPiece {
    pub fn new(name: impl Into<String>, psi: ScalarField, g: VectorField) -> Self {
        let grad = psi.gradient();
        let hess = psi.hessian();
        DomainPiece { name: name.into(), psi, g, grad, hess }
    }

    pub fn grad_field(&self) -> &VectorField {
        &self.grad
    }

    pub fn hessian_field(&self) -> &MatrixField {
        &self.hess
    }

    #[inline]
    pub fn psi_at(&self, x: Point) -> Result<f64> {
        self.psi.eval(x).map_err(|source| GeometryError::Eval { point: x, source })
    }

    #[inline]
    pub fn grad_at(&self, x: Point) -> Result<Point> {
        self.grad.eval(x).map_err(|source| GeometryError::Eval { point: x, source })
    }

    /// Gradient, or the average of gradients at nearby points when the
    /// symbolic gradient is undefined at `x` itself (e.g. `sqrt` at 0).
    pub fn grad_or_limit(&self, x: Point) -> Result<Point> {
        match self.grad.eval(x) {
            Ok(v) => Ok(v),
            Err(source) => {
                let h = 1e-9 * (1.0 + x.norm());
                let mut acc = Vector2::zeros();
                let mut hits = 0;
                for k in 0..8 {
                    let d = unit_at(k as f64 * std::f64::consts::FRAC_PI_4);
                    if let Ok(v) = self.grad.eval(x + h * d) {
                        let n = v.norm();
                        if n > 0.0 {
                            acc += v / n;
                            hits += 1;
                        }
                    }
                }
                if hits == 0 {
                    Err(GeometryError::Eval { point: x, source })
                } else {
                    Ok(acc / hits as f64)
                }
            }
        }
    }

    /// Reflection direction, unitized.
    #[inline]
    pub fn g_unit_at(&self, x: Point) -> Result<Point> {
        match self.g.eval_unit(x) {
            Ok(Some(u)) => Ok(u),
            Ok(None) => Err(GeometryError::Invalid(format!("reflection field of `{}` vanishes", self.name))),
            Err(source) => Err(GeometryError::Eval { point: x, source }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundingBox {
    pub lo: Point,
    pub hi: Point,
}

impl BoundingBox {
    pub fn new(lo: Point, hi: Point) -> Self {
        BoundingBox { lo, hi }
    }

    pub fn contains(&self, x: Point) -> bool {
        x.x >= self.lo.x && x.x <= self.hi.x && x.y >= self.lo.y && x.y <= self.hi.y
    }

    pub fn diameter(&self) -> f64 {
        (self.hi - self.lo).norm()
    }

    /// `n x n` grid of cell centers.
    pub fn grid(&self, n: usize) -> impl Iterator<Item = Point> + '_ {
        let d = (self.hi - self.lo) / n as f64;
        (0..n).flat_map(move |i| {
            (0..n).map(move |j| self.lo + Vector2::new((i as f64 + 0.5) * d.x, (j as f64 + 0.5) * d.y))
        })
    }
}

/// Corner as written in a scenario: location and 0-based piece pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DeclaredCorner {
    pub point: Point,
    pub pair: (usize, usize),
}

#[derive(Clone, Debug)]
pub struct Domain {
    pub pieces: Vec<DomainPiece>,
    pub corners: Vec<DeclaredCorner>,
    pub bbox: BoundingBox,
    pub tol: Tolerances,
}

impl Domain {
    /// Validate declared corners (`|psi| <= corner_tol` on the pair and
    /// exactly two active pieces).
    pub fn new(
        pieces: Vec<DomainPiece>,
        corners: Vec<DeclaredCorner>,
        bbox: BoundingBox,
        tol: Tolerances,
    ) -> Result<Self> {
        if pieces.is_empty() {
            return Err(GeometryError::Invalid("at least one piece is required".into()));
        }
        if !(bbox.lo.x < bbox.hi.x && bbox.lo.y < bbox.hi.y) {
            return Err(GeometryError::Invalid("bounding box is empty".into()));
        }
        let d = Domain { pieces, corners, bbox, tol };
        for (k, c) in d.corners.iter().enumerate() {
            let (i, j) = c.pair;
            let bad = |reason: String| GeometryError::InvalidCorner { index: k, reason };
            if i == j || i >= d.pieces.len() || j >= d.pieces.len() {
                return Err(bad(format!("piece pair ({}, {}) is invalid", i + 1, j + 1)));
            }
            for l in [i, j] {
                let v = d.pieces[l].psi_at(c.point)?;
                if v.abs() > tol.corner_tol {
                    return Err(bad(format!("|psi{}| = {v:e} exceeds corner_tol", l + 1)));
                }
            }
            let active = d.index_set(c.point, tol.corner_tol)?;
            if active.len() != 2 {
                return Err(bad(format!("{} pieces active, exactly 2 required", active.len())));
            }
        }
        Ok(d)
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    /// Indices `i` with `|psi^i(x)| <= tol`.
    pub fn index_set(&self, x: Point, tol: f64) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        for (i, p) in self.pieces.iter().enumerate() {
            if p.psi_at(x)?.abs() <= tol {
                out.push(i);
            }
        }
        Ok(out)
    }

    /// `min_i psi^i(x)`; positive inside `D`.
    #[inline]
    pub fn min_psi(&self, x: Point) -> Result<f64> {
        let mut m = f64::INFINITY;
        for p in &self.pieces {
            m = m.min(p.psi_at(x)?);
        }
        Ok(m)
    }

    /// Membership in the closure of `D`, allowing `psi >= -slack`.
    pub fn in_closure(&self, x: Point, slack: f64) -> bool {
        self.min_psi(x).map(|m| m >= -slack).unwrap_or(false)
    }

    /// Unit inward normal of `piece` at a boundary point.
    pub fn unit_normal(&self, piece: usize, x: Point) -> Result<Point> {
        let p = &self.pieces[piece];
        if p.psi_at(x)?.abs() > self.tol.boundary_tol.max(self.tol.corner_tol) {
            return Err(GeometryError::NotOnBoundary(x));
        }
        self.normal_unchecked(piece, x)
    }

    /// `grad psi / |grad psi|` without the on-boundary check.
    pub fn normal_unchecked(&self, piece: usize, x: Point) -> Result<Point> {
        let g = self.pieces[piece].grad_or_limit(x)?;
        let n = g.norm();
        if !(n > self.tol.grad_floor) {
            return Err(GeometryError::DegenerateGradient { piece, point: x });
        }
        Ok(g / n)
    }

    /// Declared corner closest to `x` within `corner_tol`-scaled distance.
    pub fn declared_corner_at(&self, x: Point) -> Option<&DeclaredCorner> {
        let r = 1e-6 * (1.0 + self.bbox.diameter());
        self.corners.iter().find(|c| (c.point - x).norm() <= r)
    }

    fn active_at(&self, x0: Point) -> Result<Vec<usize>> {
        if let Some(c) = self.declared_corner_at(x0) {
            if (c.point - x0).norm() == 0.0 {
                let (i, j) = c.pair;
                return Ok(vec![i.min(j), i.max(j)]);
            }
        }
        let tol = self.tol.boundary_tol.max(self.tol.corner_tol);
        let active = self.index_set(x0, tol)?;
        if active.is_empty() {
            return Err(GeometryError::NotOnBoundary(x0));
        }
        if active.len() > 2 {
            return Err(GeometryError::TooManyActive(x0));
        }
        Ok(active)
    }

    /// Inward normal cone `N(x0)`: a ray at smooth points, the cone of the
    /// two normals at cone points, the half-plane `u . tau >= 0` at cusps.
    pub fn normal_cone(&self, x0: Point) -> Result<Sector> {
        let active = self.active_at(x0)?;
        match active.as_slice() {
            [i] => Ok(Sector::ray(self.normal_unchecked(*i, x0)?)),
            [i, j] => {
                let c = self.classify_pair(x0, *i, *j)?;
                Ok(match c.kind {
                    CornerKind::ConePoint => Sector::spanned(c.normals.0, c.normals.1, self.tol.angle_tol).0,
                    CornerKind::CuspPoint => Sector::half_plane(c.tau.expect("cusp has tau")),
                })
            }
            _ => unreachable!(),
        }
    }

    /// Reflection generators `g^i(x0)` (unitized) for `i ∈ I(x0)`.
    pub fn direction_generators(&self, x0: Point) -> Result<Vec<(usize, Point)>> {
        self.active_at(x0)?
            .into_iter()
            .map(|i| Ok((i, self.pieces[i].g_unit_at(x0)?)))
            .collect()
    }

    /// Direction cone `G(x0)`; the flag marks anti-parallel generators.
    pub fn direction_cone(&self, x0: Point) -> Result<(Sector, bool)> {
        let gens = self.direction_generators(x0)?;
        Ok(match gens.as_slice() {
            [(_, g)] => (Sector::ray(*g), false),
            [(_, a), (_, b)] => Sector::spanned(*a, *b, self.tol.angle_tol),
            _ => unreachable!(),
        })
    }

    /// Classify a declared corner.
    pub fn classify_corner(&self, x0: Point) -> Result<Corner> {
        let c = self
            .declared_corner_at(x0)
            .ok_or_else(|| GeometryError::Invalid(format!("({}, {}) is not a declared corner", x0.x, x0.y)))?;
        self.classify_pair(c.point, c.pair.0, c.pair.1)
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn piece(psi: &str, g1: &str, g2: &str) -> DomainPiece {
        DomainPiece::new(psi, ScalarField::parse(psi).unwrap(), VectorField::parse(g1, g2).unwrap())
    }

    /// Disc of radius 1 about (1, 0) cut by the upper half-plane, with
    /// `g = R n`, `R = [[cos t, sin t], [-sin t, cos t]]`.
    pub fn half_disc(theta: f64) -> Domain {
        let (c, s) = (theta.cos(), theta.sin());
        // n1 = (1 - x1, -x2) on the unit circle about (1, 0)
        let g1 = (format!("{c:?}*(1 - x1) + {s:?}*(-x2)"), format!("-{s:?}*(1 - x1) + {c:?}*(-x2)"));
        let pieces = vec![
            piece("1 - (x1 - 1)^2 - x2^2", &g1.0, &g1.1),
            piece("x2", &format!("{s:?}"), &format!("{c:?}")),
        ];
        let corners = vec![
            DeclaredCorner { point: Vector2::new(0.0, 0.0), pair: (0, 1) },
            DeclaredCorner { point: Vector2::new(2.0, 0.0), pair: (0, 1) },
        ];
        let bbox = BoundingBox::new(Vector2::new(-0.5, -0.5), Vector2::new(2.5, 1.5));
        Domain::new(pieces, corners, bbox, Tolerances::default()).unwrap()
    }

    pub fn abs_cusp() -> Domain {
        let pieces = vec![piece("x2 - x1*abs(x1)", "0", "1"), piece("2*x1*abs(x1) - x2", "0", "-1")];
        let corners = vec![DeclaredCorner { point: Vector2::zeros(), pair: (0, 1) }];
        let bbox = BoundingBox::new(Vector2::new(-1.0, -1.0), Vector2::new(1.0, 2.0));
        Domain::new(pieces, corners, bbox, Tolerances::default()).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use std::f64::consts::PI;

    fn p(x: f64, y: f64) -> Point {
        Vector2::new(x, y)
    }

    #[test]
    fn normals_of_simple_pieces() {
        let d = Domain::new(
            vec![piece("1 - x1^2 - x2^2", "1", "0"), piece("x2 + 5", "0", "1")],
            vec![],
            BoundingBox::new(p(-2.0, -2.0), p(2.0, 2.0)),
            Tolerances::default(),
        )
        .unwrap();
        assert_eq!(d.unit_normal(0, p(1.0, 0.0)).unwrap(), p(-1.0, 0.0));
        assert!(matches!(d.unit_normal(0, p(0.5, 0.0)), Err(GeometryError::NotOnBoundary(_))));
        let h = Domain::new(
            vec![piece("x2", "0", "1")],
            vec![],
            BoundingBox::new(p(-5.0, -1.0), p(5.0, 1.0)),
            Tolerances::default(),
        )
        .unwrap();
        assert_eq!(h.unit_normal(0, p(3.0, 0.0)).unwrap(), p(0.0, 1.0));
    }

    #[test]
    fn index_sets_on_half_disc() {
        let d = half_disc(PI / 4.0);
        assert_eq!(d.index_set(p(0.0, 0.0), 1e-9).unwrap(), vec![0, 1]);
        assert!(d.index_set(p(1.0, 0.5), 1e-9).unwrap().is_empty());
        assert_eq!(d.index_set(p(1.0, 1.0), 1e-9).unwrap(), vec![0]);
    }

    #[test]
    fn half_disc_corners_are_cone_points() {
        let d = half_disc(PI / 4.0);
        let c = d.classify_corner(p(0.0, 0.0)).unwrap();
        assert_eq!(c.kind, CornerKind::ConePoint);
        assert_eq!(c.normals, (p(1.0, 0.0), p(0.0, 1.0)));
        assert!(c.tau.is_none());
        let n = d.normal_cone(p(0.0, 0.0)).unwrap();
        assert!(n.angle_lo.abs() < 1e-15 && (n.angle_hi - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn half_disc_direction_cone_follows_the_rotation_matrix() {
        // R is a clockwise rotation, so g1 = (cos, -sin), g2 = (sin, cos)
        let d = half_disc(PI / 4.0);
        let (g, degenerate) = d.direction_cone(p(0.0, 0.0)).unwrap();
        assert!(!degenerate);
        assert!((g.angle_lo + PI / 4.0).abs() < 1e-12, "{g:?}");
        assert!((g.angle_hi - PI / 4.0).abs() < 1e-12, "{g:?}");
        let (r, _) = d.direction_cone(p(1.0, 1.0)).unwrap();
        assert!(r.is_degenerate_ray());
    }

    #[test]
    fn smooth_point_normal_cone_is_a_ray() {
        let d = half_disc(PI / 4.0);
        let n = d.normal_cone(p(1.5, 0.0)).unwrap();
        assert!(n.is_degenerate_ray());
        assert!((n.angle_lo - PI / 2.0).abs() < 1e-15);
        assert!(matches!(d.normal_cone(p(1.0, 0.5)), Err(GeometryError::NotOnBoundary(_))));
    }

    #[test]
    fn corner_validation() {
        let bad = Domain::new(
            vec![piece("x1", "1", "0"), piece("x2", "0", "1")],
            vec![DeclaredCorner { point: p(0.1, 0.0), pair: (0, 1) }],
            BoundingBox::new(p(-1.0, -1.0), p(1.0, 1.0)),
            Tolerances::default(),
        );
        assert!(matches!(bad, Err(GeometryError::InvalidCorner { index: 0, .. })));
        let triple = Domain::new(
            vec![piece("x1", "1", "0"), piece("x2", "0", "1"), piece("x1 + x2", "1", "1")],
            vec![DeclaredCorner { point: p(0.0, 0.0), pair: (0, 1) }],
            BoundingBox::new(p(-1.0, -1.0), p(1.0, 1.0)),
            Tolerances::default(),
        );
        assert!(matches!(triple, Err(GeometryError::InvalidCorner { .. })));
    }
}
