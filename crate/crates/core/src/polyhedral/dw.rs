//! Minimal representation, maximal index sets and the Dai-Williams
//! assumption, plus its cross-check against the general condition.

use nalgebra::DMatrix;
use serde::Serialize;

use super::completely_s::s_witness;
use super::{PolygonError, PolygonSpec};
use crate::conditions::{check_g2, CheckReport, ConditionId, Status, Witness};
use crate::geometry::Point;
use crate::tolerances::Tolerances;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Minimality {
    pub minimal: bool,
    /// 0-based indices whose removal leaves the polygon unchanged.
    pub redundant: Vec<usize>,
    pub report: CheckReport,
}

/// Dropping constraint `j` must enlarge the polygon: either the rest is
/// unbounded or one of its vertices strictly violates `j`.
pub fn check_minimal_representation(poly: &PolygonSpec, tol: &Tolerances) -> Result<Minimality, PolygonError> {
    let own = poly.enumerate_vertices(tol.vertex_tol)?;
    let tie = poly.tie(tol.vertex_tol);
    let mut redundant = Vec::new();
    let mut report = CheckReport::new(ConditionId::DwMin, "polygon", Status::Pass).tol("vertex_tol", tol.vertex_tol);
    for j in 0..poly.len() {
        let rest = poly.without(j);
        match rest.enumerate_vertices(tol.vertex_tol) {
            Err(PolygonError::UnboundedOrEmpty) => {
                let at = own.iter().find(|v| v.active.contains(&j)).map_or(own[0].point, |v| v.point);
                report = report.witness(Witness::at("unbounded without it", at).indices([j]));
            }
            Err(e) => return Err(e),
            Ok(verts) => {
                let worst = verts
                    .iter()
                    .map(|v| (poly.slack(j, v.point), v.point))
                    .min_by(|a, b| a.0.total_cmp(&b.0))
                    .expect("polygon has vertices");
                if worst.0 < -tie {
                    report = report.witness(Witness::at("enlarges when dropped", worst.1).indices([j]).value("slack", worst.0));
                } else {
                    redundant.push(j);
                    report.status = Status::Fail;
                    report = report.witness(Witness::at("redundant constraint", worst.1).indices([j]).value("slack", worst.0));
                }
            }
        }
    }
    Ok(Minimality { minimal: redundant.is_empty(), redundant, report })
}

/// Maximal index sets with a boundary point realizing each: vertex active
/// sets at the vertex, singletons of edges of positive length at the edge
/// midpoint.
fn maximal_with_points(poly: &PolygonSpec, tol: &Tolerances) -> Result<Vec<(Vec<usize>, Point)>, PolygonError> {
    let verts = poly.enumerate_vertices(tol.vertex_tol)?;
    let mut out: Vec<(Vec<usize>, Point)> = Vec::new();
    for (k, v) in verts.iter().enumerate() {
        out.push((v.active.clone(), v.point));
        let w = &verts[(k + 1) % verts.len()];
        for &i in v.active.iter().filter(|i| w.active.contains(i)) {
            out.push((vec![i], 0.5 * (v.point + w.point)));
        }
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out.dedup_by(|a, b| a.0 == b.0);
    Ok(out)
}

/// The maximal index sets (0-based, sorted), i.e. the active sets of
/// boundary points.
pub fn maximal_sets(poly: &PolygonSpec, tol: &Tolerances) -> Result<Vec<Vec<usize>>, PolygonError> {
    Ok(maximal_with_points(poly, tol)?.into_iter().map(|(k, _)| k).collect())
}

/// For each maximal `K`, some `e = sum eta_i n^i`, `eta >= 0`, with
/// `e . g^j > 0` for all `j ∈ K`. Decided by the S test on the matrix
/// with rows `g^j` and columns `n^i`.
pub fn check_dw_assumption(poly: &PolygonSpec, tol: &Tolerances) -> Result<CheckReport, PolygonError> {
    let mut report = CheckReport::new(ConditionId::Dw, "polygon", Status::Pass);
    for (k, x) in maximal_with_points(poly, tol)? {
        let a = DMatrix::from_fn(k.len(), k.len(), |r, c| poly.normals()[k[c]].dot(&poly.directions()[k[r]]));
        let w = Witness::at(if k.len() == 1 { "face" } else { "vertex" }, x).indices(k.iter().copied());
        match s_witness(&a) {
            Some(eta) => {
                let e: Point = k.iter().zip(&eta).map(|(&i, t)| *t * poly.normals()[i]).sum();
                let margin = k.iter().map(|&j| e.dot(&poly.directions()[j])).fold(f64::INFINITY, f64::min);
                report = report.witness(w.value("e1", e.x).value("e2", e.y).value("min_e_dot_g", margin));
            }
            None => {
                report.status = Status::Fail;
                let mut w = w.value("infeasible", 1.0);
                for r in 0..a.nrows() {
                    for c in 0..a.ncols() {
                        w = w.value(&format!("m{}{}", r + 1, c + 1), a[(r, c)]);
                    }
                }
                report = report.witness(w);
            }
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Equivalence {
    pub dw: CheckReport,
    /// The general direction condition at every maximal point.
    pub general: Vec<CheckReport>,
    pub general_status: Status,
    pub agree: bool,
}

/// Decide the polygon's direction condition twice: algebraically on the
/// half-plane data, and with the general checker on the same polygon seen
/// as an implicit domain. Both must agree.
pub fn equivalence_test(poly: &PolygonSpec, tol: &Tolerances) -> Result<Equivalence, PolygonError> {
    let dw = check_dw_assumption(poly, tol)?;
    let domain = poly.to_domain(*tol)?;
    let general: Vec<CheckReport> =
        maximal_with_points(poly, tol)?.into_iter().map(|(_, x)| check_g2(&domain, x)).collect();
    let general_status = general.iter().fold(Status::Pass, |s, r| s.worst(r.status));
    let agree = general_status == dw.status;
    Ok(Equivalence { dw, general, general_status, agree })
}
