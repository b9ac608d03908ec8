//! Representation checks: minimality, gradient floor, declared corners.

use nalgebra::{Matrix2, Vector2};

use super::report::{fmt_point, CheckReport, ConditionId, Status, Witness};
use crate::geometry::{Domain, Point};

const MIN_GRID: usize = 128;
const MIN_SAMPLES: usize = 256;

/// Look for a point of `∩_{i≠j} D^i` outside `D^j`.
fn point_outside_only(domain: &Domain, j: usize) -> Option<Point> {
    let others_inside = |y: Point| {
        domain.pieces.iter().enumerate().all(|(i, p)| i == j || p.psi.eval(y).map(|v| v > 0.0).unwrap_or(false))
    };
    let outside_j = |y: Point| domain.pieces[j].psi.eval(y).map(|v| v <= 0.0).unwrap_or(false);
    let diam = domain.bbox.diameter();
    if let Ok(samples) = domain.boundary_sample(j, MIN_SAMPLES, true) {
        for x in samples {
            let Ok(n) = domain.normal_unchecked(j, x) else { continue };
            for eps in [1e-3, 1e-5] {
                let y = x - eps * diam * n;
                if outside_j(y) && others_inside(y) {
                    return Some(y);
                }
            }
        }
    }
    domain.bbox.grid(MIN_GRID).find(|&y| outside_j(y) && others_inside(y))
}

/// Condition on the representation: dropping any piece strictly enlarges
/// `D`, and gradients stay away from zero on piece boundaries.
pub fn check_minimality(domain: &Domain) -> CheckReport {
    let mut status = Status::Pass;
    let mut witnesses = Vec::new();
    for j in 0..domain.len() {
        match point_outside_only(domain, j) {
            Some(y) => witnesses.push(
                Witness::at("enlarges when dropped", y)
                    .indices([j])
                    .value("psi_dropped", domain.pieces[j].psi.eval(y).unwrap_or(f64::NAN)),
            ),
            None => {
                status = Status::Fail;
                // closest approach to leaving D^j while inside the others
                let best = domain
                    .bbox
                    .grid(MIN_GRID)
                    .filter(|&y| {
                        domain
                            .pieces
                            .iter()
                            .enumerate()
                            .all(|(i, p)| i == j || p.psi.eval(y).map(|v| v > 0.0).unwrap_or(false))
                    })
                    .filter_map(|y| domain.pieces[j].psi.eval(y).ok().map(|v| (v, y)))
                    .min_by(|a, b| a.0.total_cmp(&b.0));
                let (v, y) = best.unwrap_or((f64::NAN, 0.5 * (domain.bbox.lo + domain.bbox.hi)));
                witnesses.push(Witness::at("redundant piece", y).indices([j]).value("min_psi_dropped", v));
            }
        }
    }

    let mut grad_min = f64::INFINITY;
    for (i, p) in domain.pieces.iter().enumerate() {
        let Ok(samples) = domain.boundary_sample(i, MIN_SAMPLES, false) else { continue };
        let mut worst: Option<(f64, Point)> = None;
        for x in samples {
            let g = p.grad_or_limit(x).map(|v| v.norm()).unwrap_or(0.0);
            if worst.is_none_or(|(w, _)| g < w) {
                worst = Some((g, x));
            }
        }
        if let Some((g, x)) = worst {
            grad_min = grad_min.min(g);
            if !(g > domain.tol.grad_floor) {
                status = Status::Fail;
                witnesses.push(Witness::at("gradient below floor", x).indices([i]).value("grad_norm", g));
            }
        }
    }

    let mut r = CheckReport::new(ConditionId::Di, "representation", status)
        .tol("grad_floor", domain.tol.grad_floor)
        .tol("boundary_tol", domain.tol.boundary_tol);
    r.witnesses = witnesses;
    if grad_min.is_finite() {
        r = r.note(format!("min sampled |grad psi| on piece boundaries: {grad_min:e}"));
    }
    r
}

/// Newton on `(psi^i, psi^j) = 0`.
fn intersect(domain: &Domain, i: usize, j: usize, start: Point) -> Option<Point> {
    let (pi, pj) = (&domain.pieces[i], &domain.pieces[j]);
    let mut y = start;
    for _ in 0..80 {
        let f = Vector2::new(pi.psi.eval(y).ok()?, pj.psi.eval(y).ok()?);
        if f.x.abs() <= 1e-13 && f.y.abs() <= 1e-13 {
            return Some(y);
        }
        let gi = pi.grad_field().eval(y).ok()?;
        let gj = pj.grad_field().eval(y).ok()?;
        let jac = Matrix2::new(gi.x, gi.y, gj.x, gj.y);
        let step = jac.lu().solve(&f)?;
        y -= step;
        if !y.iter().all(|c| c.is_finite()) {
            return None;
        }
    }
    let ok = pi.psi.eval(y).ok()?.abs() <= domain.tol.corner_tol && pj.psi.eval(y).ok()?.abs() <= domain.tol.corner_tol;
    ok.then_some(y)
}

/// Declared corners lie on the boundary of `D` with exactly two active
/// pieces; sampling finds no undeclared corner.
pub fn check_corners_declared(domain: &Domain) -> CheckReport {
    let tol = domain.tol;
    let mut status = Status::Pass;
    let mut witnesses = Vec::new();
    for c in &domain.corners {
        let m = domain.min_psi(c.point).unwrap_or(f64::NAN);
        let w = Witness::at("declared corner", c.point).indices([c.pair.0, c.pair.1]).value("min_psi", m);
        if !(m >= -tol.corner_tol) {
            status = Status::Fail;
            witnesses.push(w.value("outside_closure", 1.0));
        } else {
            witnesses.push(w);
        }
    }
    let diam = domain.bbox.diameter();
    let near = 1e-6 * (1.0 + diam);
    let mut undeclared: Vec<Point> = Vec::new();
    for i in 0..domain.len() {
        let Ok(samples) = domain.boundary_sample(i, MIN_SAMPLES, true) else { continue };
        for j in 0..domain.len() {
            if j == i {
                continue;
            }
            for &x in &samples {
                let pj = &domain.pieces[j];
                let (Ok(v), Ok(g)) = (pj.psi.eval(x), pj.grad_field().eval(x)) else { continue };
                if v.abs() > 0.05 * diam * g.norm() {
                    continue;
                }
                let Some(y) = intersect(domain, i, j, x) else { continue };
                if !domain.bbox.contains(y) || !domain.in_closure(y, tol.corner_tol) {
                    continue;
                }
                let declared = domain.corners.iter().any(|c| (c.point - y).norm() <= near);
                if !declared && !undeclared.iter().any(|u| (u - y).norm() <= near) {
                    undeclared.push(y);
                    witnesses.push(Witness::at("undeclared corner", y).indices([i.min(j), i.max(j)]));
                    status = Status::Fail;
                }
            }
        }
    }
    let mut r = CheckReport::new(ConditionId::Dii, "corners", status).tol("corner_tol", tol.corner_tol);
    r.witnesses = witnesses;
    for u in &undeclared {
        r = r.note(format!("pieces meet at {} but no corner is declared there", fmt_point(*u)));
    }
    r
}
