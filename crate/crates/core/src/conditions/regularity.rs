//! Corner regularity: sampled limsup bounds at cone points, the cusp limit
//! and the second-order cusp test.

use nalgebra::Vector2;

use super::report::{fmt_point, CheckReport, ConditionId, Status, Witness};
use super::ConditionError;
use crate::expr::EvalError;
use crate::geometry::{newton_project_tight, CornerKind, Domain, GeometryError, Point};

const LEVELS: std::ops::RangeInclusive<i32> = 4..=18;
const TAIL: usize = 6;

#[derive(Debug, PartialEq)]
enum Trend {
    Stable,
    Growing,
    Unclear,
}

fn trend(values: &[f64], cap: f64) -> Trend {
    if values.iter().any(|v| !v.is_finite() || *v > cap) {
        return Trend::Growing;
    }
    let tail = &values[values.len().saturating_sub(TAIL)..];
    let max = tail.iter().cloned().fold(0.0, f64::max);
    let min = tail.iter().cloned().fold(f64::INFINITY, f64::min);
    let scale = values.iter().cloned().fold(0.0, f64::max);
    if max <= 1e-9 * scale.max(1.0) {
        return Trend::Stable;
    }
    if tail.windows(2).all(|w| w[1] > 1.1 * w[0]) {
        return Trend::Growing;
    }
    if max <= 2.0 * min || tail.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-6)) {
        return Trend::Stable;
    }
    Trend::Unclear
}

/// Both limsup quotients along `∂D^l` near `x0`, one value per dyadic
/// radius (max over the two tangential sides).
fn limsup_traces(domain: &Domain, l: usize, x0: Point) -> Result<(Vec<f64>, Vec<f64>), GeometryError> {
    let n0 = domain.normal_unchecked(l, x0)?;
    let t = Vector2::new(-n0.y, n0.x);
    let piece = &domain.pieces[l];
    let (mut curv, mut flat) = (Vec::new(), Vec::new());
    for k in LEVELS {
        let r = 2f64.powi(-k);
        let (mut q1, mut q2) = (f64::NAN, f64::NAN);
        for side in [1.0, -1.0] {
            let Some(x) = newton_project_tight(piece, x0 + side * r * t, domain.tol.boundary_tol) else {
                continue;
            };
            let d = x - x0;
            let dist = d.norm();
            if dist == 0.0 {
                continue;
            }
            let Ok(nx) = domain.normal_unchecked(l, x) else { continue };
            let a = (nx - n0).norm() / dist;
            let b = n0.dot(&d).abs() / (dist * dist);
            q1 = if q1.is_nan() { a } else { q1.max(a) };
            q2 = if q2.is_nan() { b } else { q2.max(b) };
        }
        curv.push(q1);
        flat.push(q2);
    }
    Ok((curv, flat))
}

/// Condition on the corner `x0`: bounded sampled limsups at cone points,
/// connectivity and a convergent cusp limit at cusps.
pub fn check_corner_regularity(domain: &Domain, x0: Point) -> CheckReport {
    let tol = domain.tol;
    let subject = format!("corner {}", fmt_point(x0));
    let base = |status| {
        CheckReport::new(ConditionId::Diii, subject.clone(), status)
            .tol("limsup_cap", tol.limsup_cap)
            .tol("cusp_tol", tol.cusp_tol)
            .tol("cusp_limit_spread", tol.cusp_limit_spread)
    };
    let corner = match domain.classify_corner(x0) {
        Ok(c) => c,
        Err(GeometryError::AmbiguousTangent(_)) => {
            return base(Status::Fail)
                .witness(Witness::at("no unique entering tangent", x0))
                .note("the domain near this cusp is not connected on one side");
        }
        Err(e) => return base(Status::Fail).witness(Witness::at("classification failed", x0)).note(e.to_string()),
    };
    let (i, j) = corner.index_set;
    match corner.kind {
        CornerKind::CuspPoint => {
            let tau = corner.tau.expect("cusp tau");
            let Some(l) = corner.cusp_limit else {
                return base(Status::Inconclusive)
                    .witness(Witness::at("cusp limit unavailable", x0).indices([i, j]))
                    .note("probe lines did not cross both boundaries at every level");
            };
            let converged = l.spread < tol.cusp_limit_spread * l.value.abs().max(1.0);
            let w = Witness::at("cusp limit", x0)
                .indices([i, j])
                .value("L", l.value)
                .value("spread", l.spread)
                .value("tau1", tau.x)
                .value("tau2", tau.y)
                .trace(l.extrapolants.clone());
            base(if converged { Status::Pass } else { Status::Inconclusive }).witness(w)
        }
        CornerKind::ConePoint => {
            let mut status = Status::Pass;
            let mut r = base(Status::Pass);
            for l in [i, j] {
                match limsup_traces(domain, l, x0) {
                    Ok((curv, flat)) => {
                        for (name, trace) in [("normal_variation", curv), ("normal_offset", flat)] {
                            let clean: Vec<f64> = trace.iter().cloned().filter(|v| !v.is_nan()).collect();
                            let s = if clean.len() < TAIL {
                                Status::Inconclusive
                            } else {
                                match trend(&clean, tol.limsup_cap) {
                                    Trend::Stable => Status::Pass,
                                    Trend::Growing => Status::Fail,
                                    Trend::Unclear => Status::Inconclusive,
                                }
                            };
                            status = status.worst(s);
                            let last = clean.last().cloned().unwrap_or(f64::NAN);
                            r = r.witness(
                                Witness::at(format!("{name} on piece {}", l + 1), x0)
                                    .indices([l])
                                    .value("last", last)
                                    .trace(trace),
                            );
                        }
                    }
                    Err(e) => {
                        status = status.worst(Status::Inconclusive);
                        r = r.note(format!("piece {}: {e}", l + 1));
                    }
                }
            }
            r.status = status;
            r
        }
    }
}

/// Second-order cusp test
/// `tau . (D^2 psi^j / |grad psi^j| + D^2 psi^i / |grad psi^i|) tau != 0`.
/// Falls back to [`check_corner_regularity`] when a Hessian is undefined
/// exactly at the corner.
pub fn check_cusp_hessian(domain: &Domain, x0: Point) -> Result<CheckReport, ConditionError> {
    let tol = domain.tol;
    let pair = domain
        .declared_corner_at(x0)
        .map(|c| c.pair)
        .ok_or(ConditionError::NotACorner(x0))?;
    let (i, j) = pair;
    let ni = domain.normal_unchecked(i, x0)?;
    let nj = domain.normal_unchecked(j, x0)?;
    if (ni + nj).norm() > tol.cusp_tol {
        return Err(ConditionError::NotACusp(x0));
    }
    let tau = match domain.cusp_tangent(x0, i, j, ni) {
        Ok(t) => t,
        Err(GeometryError::AmbiguousTangent(_)) => {
            if !domain.cusp_has_interior(x0, i, j, ni)? {
                return Err(ConditionError::NotACusp(x0));
            }
            // two-sided: the quadratic form does not depend on the sign
            Vector2::new(-ni.y, ni.x)
        }
        Err(e) => return Err(e.into()),
    };
    let subject = format!("corner {}", fmt_point(x0));
    let form = |l: usize| -> Result<f64, EvalError> {
        let p = &domain.pieces[l];
        let g = p.grad_field().eval_strict(x0)?.norm();
        let h = p.hessian_field().eval_strict(x0)?;
        Ok(tau.dot(&(h * tau)) / g)
    };
    match (form(i), form(j)) {
        (Ok(a), Ok(b)) => {
            let value = a + b;
            let status = if value.abs() > tol.hessian_tol { Status::Pass } else { Status::Fail };
            Ok(CheckReport::new(ConditionId::C2Cusp, subject, status)
                .tol("hessian_tol", tol.hessian_tol)
                .witness(
                    Witness::at("quadratic form", x0)
                        .indices([i, j])
                        .value("form", value)
                        .value("tau1", tau.x)
                        .value("tau2", tau.y),
                ))
        }
        (Err(e), _) | (_, Err(e)) => {
            let mut r = check_corner_regularity(domain, x0);
            r.condition_id = ConditionId::C2Cusp;
            r.subject = subject;
            Ok(r.note(format!("Hessian undefined at the corner ({e}); fell back to the corner regularity check")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::fixtures::{abs_cusp, half_disc, piece};
    use crate::geometry::{BoundingBox, DeclaredCorner};
    use crate::tolerances::Tolerances;
    use std::f64::consts::PI;

    fn p(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    fn two_piece(a: &str, b: &str) -> Domain {
        Domain::new(
            vec![piece(a, "0", "1"), piece(b, "0", "-1")],
            vec![DeclaredCorner { point: p(0.0, 0.0), pair: (0, 1) }],
            BoundingBox::new(p(-1.0, -1.0), p(1.0, 2.0)),
            Tolerances::default(),
        )
        .unwrap()
    }

    #[test]
    fn circle_arc_cone_points_pass() {
        let d = half_disc(PI / 3.0);
        for x0 in [p(0.0, 0.0), p(2.0, 0.0)] {
            let r = check_corner_regularity(&d, x0);
            assert_eq!(r.status, Status::Pass, "{r:#?}");
        }
    }

    #[test]
    fn abs_cusp_limit() {
        let r = check_corner_regularity(&abs_cusp(), p(0.0, 0.0));
        assert_eq!(r.status, Status::Pass);
        assert!((r.witnesses[0].values["L"] + 1.0).abs() < 1e-3);
    }

    #[test]
    fn three_halves_power_grows() {
        let d = Domain::new(
            vec![piece("x2 - sqrt(abs(x1))^3", "0", "1"), piece("x1", "1", "0")],
            vec![DeclaredCorner { point: p(0.0, 0.0), pair: (0, 1) }],
            BoundingBox::new(p(-1.0, -1.0), p(1.0, 2.0)),
            Tolerances::default(),
        )
        .unwrap();
        let r = check_corner_regularity(&d, p(0.0, 0.0));
        assert_ne!(r.status, Status::Pass, "{r:#?}");
        let w = r.witnesses.iter().find(|w| w.label == "normal_variation on piece 1").unwrap();
        let t = &w.trace;
        assert!(t[t.len() - 1] > 10.0 * t[0], "{t:?}");
    }

    #[test]
    fn two_sided_parabola_hessian_form() {
        let d = two_piece("x2 - x1^2", "2*x1^2 - x2");
        let r = check_cusp_hessian(&d, p(0.0, 0.0)).unwrap();
        assert_eq!(r.status, Status::Pass);
        assert!((r.witnesses[0].values["form"] - 2.0).abs() <= 1e-9);
        // the same domain violates one-sided connectivity
        assert_eq!(check_corner_regularity(&d, p(0.0, 0.0)).status, Status::Fail);
    }

    #[test]
    fn osculating_cusp_fails_hessian_test() {
        let d = two_piece("x2 - x1^3", "2*x1^3 - x2");
        let r = check_cusp_hessian(&d, p(0.0, 0.0)).unwrap();
        assert_eq!(r.status, Status::Fail);
        assert!(r.is_well_formed());
    }

    #[test]
    fn affine_pair_is_not_a_cusp() {
        let d = two_piece("x2", "-x2");
        assert!(matches!(check_cusp_hessian(&d, p(0.0, 0.0)), Err(ConditionError::NotACusp(_))));
    }

    #[test]
    fn kink_falls_back_to_regularity() {
        let r = check_cusp_hessian(&abs_cusp(), p(0.0, 0.0)).unwrap();
        assert_eq!(r.condition_id, ConditionId::C2Cusp);
        assert_eq!(r.status, Status::Pass);
        assert!(r.notes.iter().any(|n| n.contains("fell back")));
    }

    #[test]
    fn trend_classifier() {
        assert_eq!(trend(&[1.0; 10], 1e6), Trend::Stable);
        let g: Vec<f64> = (0..10).map(|k| 2f64.powf(k as f64 / 2.0)).collect();
        assert_eq!(trend(&g, 1e6), Trend::Growing);
        assert_eq!(trend(&[1.0, 1e7], 1e6), Trend::Growing);
        assert_eq!(trend(&[1.0, 3.0, 1.0, 3.0, 1.0, 3.1, 1.0], 1e6), Trend::Unclear);
    }
}
