//! Corner classification: cone points, cusp points, cusp tangent and the
//! cusp limit `L`.

use nalgebra::Vector2;
use serde::Serialize;

use super::{Domain, GeometryError, Point, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CornerKind {
    ConePoint,
    CuspPoint,
}

/// Estimate of the cusp limit from ratios at abscissae `2^-k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CuspLimit {
    /// Last Richardson extrapolant.
    pub value: f64,
    /// `max - min` over the last four extrapolants.
    pub spread: f64,
    pub ratios: Vec<f64>,
    pub extrapolants: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Corner {
    pub location: Point,
    /// 0-based piece indices in the order used for `normals`.
    pub index_set: (usize, usize),
    pub kind: CornerKind,
    pub normals: (Point, Point),
    pub tau: Option<Point>,
    pub cusp_limit: Option<CuspLimit>,
}

pub(crate) const PROBE_LEVELS: std::ops::RangeInclusive<i32> = 6..=20;

fn perp(n: Point) -> Point {
    Vector2::new(-n.y, n.x)
}

/// Position of a piece's zero level along a probe line, in the line
/// coordinate `delta` measured along `n_i`.
#[derive(Clone, Copy, Debug)]
enum Crossing {
    Root(f64),
    /// No sign change: the whole bracket is inside the piece.
    Inside,
    /// No sign change: the whole bracket is outside the piece.
    Outside,
}

impl Domain {
    fn crossing(&self, piece: usize, base: Point, dir: Point, reach: f64) -> Result<Crossing> {
        let p = &self.pieces[piece];
        let f = |d: f64| p.psi_at(base + d * dir);
        let mut b = reach;
        for _ in 0..6 {
            let (fl, fh) = (f(-b)?, f(b)?);
            if (fl > 0.0) != (fh > 0.0) {
                let (mut lo, mut hi) = (-b, b);
                let lo_pos = fl > 0.0;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid == lo || mid == hi {
                        break;
                    }
                    if (f(mid)? > 0.0) == lo_pos {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return Ok(Crossing::Root(0.5 * (lo + hi)));
            }
            if fl > 0.0 && fh > 0.0 && b > reach * 8.0 {
                return Ok(Crossing::Inside);
            }
            if fl <= 0.0 && fh <= 0.0 && b > reach * 8.0 {
                return Ok(Crossing::Outside);
            }
            b *= 4.0;
        }
        let inside = f(0.0)? > 0.0;
        Ok(if inside { Crossing::Inside } else { Crossing::Outside })
    }

    /// Crossings of `psi^i` and `psi^j` on the line through `x0 + s*t`
    /// along `n_i`.
    fn probe(&self, x0: Point, i: usize, j: usize, ni: Point, t: Point, s: f64) -> Result<(Crossing, Crossing)> {
        let base = x0 + s * t;
        Ok((self.crossing(i, base, ni, s)?, self.crossing(j, base, ni, s)?))
    }

    fn enters(&self, x0: Point, i: usize, j: usize, ni: Point, t: Point, s: f64) -> Result<bool> {
        let (ci, cj) = self.probe(x0, i, j, ni, t, s)?;
        // psi^i increases along n_i, psi^j decreases
        let lo = match ci {
            Crossing::Root(d) => d,
            Crossing::Inside => f64::NEG_INFINITY,
            Crossing::Outside => return Ok(false),
        };
        let hi = match cj {
            Crossing::Root(d) => d,
            Crossing::Inside => f64::INFINITY,
            Crossing::Outside => return Ok(false),
        };
        Ok(lo < hi)
    }

    /// Classify the corner `x0` of pieces `i`, `j` (0-based).
    pub fn classify_pair(&self, x0: Point, i: usize, j: usize) -> Result<Corner> {
        let ni = self.normal_unchecked(i, x0)?;
        let nj = self.normal_unchecked(j, x0)?;
        let mut corner = Corner {
            location: x0,
            index_set: (i, j),
            kind: CornerKind::ConePoint,
            normals: (ni, nj),
            tau: None,
            cusp_limit: None,
        };
        if (ni + nj).norm() > self.tol.cusp_tol {
            return Ok(corner);
        }
        corner.kind = CornerKind::CuspPoint;
        let tau = self.cusp_tangent(x0, i, j, ni)?;
        corner.tau = Some(tau);
        corner.cusp_limit = self.cusp_limit(x0, i, j, ni, tau)?;
        Ok(corner)
    }

    /// Tangent candidates `±perp(n_i)` whose probe lines meet `D` at every
    /// abscissa `2^-k`.
    fn entering_tangents(&self, x0: Point, i: usize, j: usize, ni: Point) -> Result<Vec<Point>> {
        let mut entering = Vec::new();
        'cand: for t in [perp(ni), -perp(ni)] {
            for k in PROBE_LEVELS {
                if !self.enters(x0, i, j, ni, t, 2f64.powi(-k))? {
                    continue 'cand;
                }
            }
            entering.push(t);
        }
        Ok(entering)
    }

    /// The unique unit vector orthogonal to `n_i` whose ray enters `D`.
    pub(crate) fn cusp_tangent(&self, x0: Point, i: usize, j: usize, ni: Point) -> Result<Point> {
        match self.entering_tangents(x0, i, j, ni)?.as_slice() {
            [t] => Ok(*t),
            _ => Err(GeometryError::AmbiguousTangent(x0)),
        }
    }

    /// Whether `D` has interior near a corner with anti-parallel normals.
    pub(crate) fn cusp_has_interior(&self, x0: Point, i: usize, j: usize, ni: Point) -> Result<bool> {
        Ok(!self.entering_tangents(x0, i, j, ni)?.is_empty())
    }

    fn cusp_limit(&self, x0: Point, i: usize, j: usize, ni: Point, tau: Point) -> Result<Option<CuspLimit>> {
        let mut ratios = Vec::new();
        for k in PROBE_LEVELS {
            match self.probe(x0, i, j, ni, tau, 2f64.powi(-k))? {
                (Crossing::Root(di), Crossing::Root(dj)) if di != dj => ratios.push(di / (di - dj)),
                _ => return Ok(None),
            }
        }
        let extrapolants: Vec<f64> = ratios.windows(2).map(|w| 2.0 * w[1] - w[0]).collect();
        let tail = &extrapolants[extrapolants.len() - 4..];
        let max = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = tail.iter().cloned().fold(f64::INFINITY, f64::min);
        Ok(Some(CuspLimit { value: *extrapolants.last().unwrap(), spread: max - min, ratios, extrapolants }))
    }
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::super::*;

    #[test]
    fn abs_parabola_cusp() {
        let d = abs_cusp();
        let c = d.classify_corner(Vector2::zeros()).unwrap();
        assert_eq!(c.kind, CornerKind::CuspPoint);
        let tau = c.tau.unwrap();
        assert!((tau - Vector2::new(1.0, 0.0)).norm() <= 1e-9, "{tau:?}");
        let l = c.cusp_limit.unwrap();
        assert!((l.value + 1.0).abs() <= 1e-3, "{l:?}");
        assert!(l.spread < 1e-3);
        let n = d.normal_cone(Vector2::zeros()).unwrap();
        assert!((n.width() - std::f64::consts::PI).abs() < 1e-12);
        assert!(n.contains(Vector2::new(0.0, 1.0), 1e-9) && n.contains(Vector2::new(0.0, -1.0), 1e-9));
    }

    #[test]
    fn relabelling_flips_limit_consistently() {
        let d = abs_cusp();
        let a = d.classify_pair(Vector2::zeros(), 0, 1).unwrap();
        let b = d.classify_pair(Vector2::zeros(), 1, 0).unwrap();
        assert_eq!(a.kind, b.kind);
        assert_eq!(a.tau, b.tau);
        let (la, lb) = (a.cusp_limit.unwrap().value, b.cusp_limit.unwrap().value);
        assert!((lb - (1.0 - la)).abs() < 1e-9, "{la} {lb}");
    }

    #[test]
    fn two_sided_parabola_has_no_unique_tangent() {
        let d = Domain::new(
            vec![piece("x2 - x1^2", "0", "1"), piece("2*x1^2 - x2", "0", "-1")],
            vec![DeclaredCorner { point: Vector2::zeros(), pair: (0, 1) }],
            BoundingBox::new(Vector2::new(-1.0, -1.0), Vector2::new(1.0, 2.0)),
            crate::tolerances::Tolerances::default(),
        )
        .unwrap();
        assert!(matches!(d.classify_corner(Vector2::zeros()), Err(GeometryError::AmbiguousTangent(_))));
    }
}
