//! Reflection-direction conditions: the boundary inner-product floor and
//! the existence of a common feasible direction at every boundary point.

use std::f64::consts::{FRAC_PI_2, TAU};

use super::report::{fmt_point, CheckReport, ConditionId, Status, Witness};
use crate::geometry::{angle_of, unit_at, Domain, Point, Sector};

const G1_SAMPLES: usize = 2048;
const G2_SAMPLES: usize = 512;
const WITNESS_SLACK: f64 = 1e-12;

/// Copy of `phi` (mod 2pi) closest to `center`.
fn nearest_copy(phi: f64, center: f64) -> f64 {
    phi + TAU * ((center - phi) / TAU).round()
}

/// A unit `e ∈ n_cone` with `e . g > 0` for every generator, found by
/// intersecting angular intervals. Open arcs are shrunk by `angle_tol`.
/// Returns the midpoint of the feasible arc, or `None` if it is empty.
pub fn feasible_direction(n_cone: &Sector, gens: &[Point], angle_tol: f64) -> Option<Point> {
    let mid = n_cone.mid_angle();
    let (mut lo, mut hi) = (n_cone.angle_lo, n_cone.angle_hi);
    for g in gens {
        let phi = nearest_copy(angle_of(*g), mid);
        lo = lo.max(phi - FRAC_PI_2 + angle_tol);
        hi = hi.min(phi + FRAC_PI_2 - angle_tol);
    }
    (lo <= hi).then(|| unit_at(0.5 * (lo + hi)))
}

/// Inner-product floor `g^i . n^i` on each piece boundary, with an
/// estimated Lipschitz constant of `g^i` reported alongside.
pub fn check_g1(domain: &Domain) -> CheckReport {
    let floor = domain.tol.g_dot_n_floor;
    let mut status = Status::Pass;
    let mut r = CheckReport::new(ConditionId::Gi, "reflection fields", Status::Pass).tol("g_dot_n_floor", floor);
    for (i, p) in domain.pieces.iter().enumerate() {
        let samples = match domain.boundary_sample(i, G1_SAMPLES, false) {
            Ok(s) => s,
            Err(e) => {
                r = r.note(format!("piece {}: {e}", i + 1));
                continue;
            }
        };
        let mut worst: Option<(f64, Point)> = None;
        let mut raw = Vec::with_capacity(samples.len());
        for &x in &samples {
            let (n, g) = (domain.normal_unchecked(i, x), p.g.eval(x));
            let dot = match (n, &g) {
                (Ok(n), Ok(g)) if g.norm() > 0.0 => g.dot(&n) / g.norm(),
                _ => f64::NAN,
            };
            if let Ok(g) = g {
                raw.push((x, g));
            }
            if worst.is_none_or(|(w, _)| !(dot >= w)) {
                worst = Some((dot, x));
            }
        }
        let lip = lipschitz(&raw);
        let Some((m, x)) = worst else { continue };
        let pass = m > floor;
        if !pass {
            status = Status::Fail;
        }
        r = r.witness(
            Witness::at(if pass { "minimum g.n" } else { "g.n below floor" }, x)
                .indices([i])
                .value("min_g_dot_n", m)
                .value("lipschitz_estimate", lip),
        );
    }
    r.status = status;
    r.note("Lipschitz constants are sampled difference quotients, reported but not gated")
}

/// Max difference quotient over all pairs of samples.
pub(crate) fn lipschitz<V>(samples: &[(Point, V)]) -> f64
where
    V: Copy + std::ops::Sub<Output = V> + Norm,
{
    let mut best = 0.0f64;
    for (a, (xa, va)) in samples.iter().enumerate() {
        for (xb, vb) in &samples[a + 1..] {
            let d = (xa - xb).norm();
            if d > 0.0 {
                best = best.max((*va - *vb).norm_of() / d);
            }
        }
    }
    best
}

pub(crate) trait Norm {
    fn norm_of(&self) -> f64;
}

impl Norm for Point {
    fn norm_of(&self) -> f64 {
        self.norm()
    }
}

impl Norm for nalgebra::Matrix2<f64> {
    fn norm_of(&self) -> f64 {
        self.norm()
    }
}

enum G2 {
    Feasible(Point, f64),
    Infeasible(Sector, Vec<Point>),
    Undefined(String),
}

fn g2_at(domain: &Domain, x0: Point) -> G2 {
    let cone = match domain.normal_cone(x0) {
        Ok(c) => c,
        Err(e) => return G2::Undefined(e.to_string()),
    };
    let gens: Vec<Point> = match domain.direction_generators(x0) {
        Ok(g) => g.into_iter().map(|(_, g)| g).collect(),
        Err(e) => return G2::Undefined(e.to_string()),
    };
    match feasible_direction(&cone, &gens, domain.tol.angle_tol) {
        Some(e) => {
            let margin = gens.iter().map(|g| e.dot(g)).fold(f64::INFINITY, f64::min);
            debug_assert!(cone.contains(e, domain.tol.angle_tol));
            if margin > WITNESS_SLACK {
                G2::Feasible(e, margin)
            } else {
                G2::Infeasible(cone, gens)
            }
        }
        None => G2::Infeasible(cone, gens),
    }
}

fn g2_witness(x0: Point, outcome: &G2) -> (Status, Witness) {
    match outcome {
        G2::Feasible(e, margin) => (
            Status::Pass,
            Witness::at("feasible direction", x0).value("e1", e.x).value("e2", e.y).value("min_e_dot_g", *margin),
        ),
        G2::Infeasible(cone, gens) => {
            let mut w = Witness::at("no feasible direction", x0)
                .value("normal_cone_lo", cone.angle_lo)
                .value("normal_cone_hi", cone.angle_hi);
            for (k, g) in gens.iter().enumerate() {
                w = w.value(&format!("g{}_angle", k + 1), angle_of(*g));
            }
            (Status::Fail, w)
        }
        G2::Undefined(_) => (Status::Fail, Witness::at("normal or direction cone undefined", x0)),
    }
}

/// A unit `e` in the normal cone at `x0` with `e . g > 0` for every
/// active reflection direction.
pub fn check_g2(domain: &Domain, x0: Point) -> CheckReport {
    let outcome = g2_at(domain, x0);
    let (status, w) = g2_witness(x0, &outcome);
    let kind = if domain.declared_corner_at(x0).is_some() { "corner" } else { "point" };
    let r = CheckReport::new(ConditionId::Gii, format!("{kind} {}", fmt_point(x0)), status)
        .tol("angle_tol", domain.tol.angle_tol)
        .witness(w);
    match outcome {
        G2::Undefined(msg) => r.note(msg),
        _ => r,
    }
}

/// The feasible-direction condition over sampled boundary points. Points
/// within `1e-6` of a declared corner are left to [`check_g2`].
pub fn check_g2_boundary(domain: &Domain) -> CheckReport {
    let near = 1e-6 * (1.0 + domain.bbox.diameter());
    let mut status = Status::Pass;
    let mut worst: Option<(f64, Point, Point)> = None;
    let mut r = CheckReport::new(ConditionId::Gii, "boundary samples", Status::Pass).tol("angle_tol", domain.tol.angle_tol);
    let mut count = 0usize;
    for i in 0..domain.len() {
        let Ok(samples) = domain.boundary_sample(i, G2_SAMPLES, true) else { continue };
        for x in samples {
            if domain.corners.iter().any(|c| (c.point - x).norm() <= near) {
                continue;
            }
            count += 1;
            let outcome = g2_at(domain, x);
            match &outcome {
                G2::Feasible(e, m) => {
                    if worst.is_none_or(|(w, _, _)| *m < w) {
                        worst = Some((*m, x, *e));
                    }
                }
                _ => {
                    status = Status::Fail;
                    let (_, w) = g2_witness(x, &outcome);
                    r = r.witness(w);
                    if let G2::Undefined(msg) = outcome {
                        r = r.note(msg);
                    }
                }
            }
        }
    }
    if let Some((m, x, e)) = worst {
        r = r.witness(
            Witness::at("smallest margin", x).value("e1", e.x).value("e2", e.y).value("min_e_dot_g", m),
        );
    }
    r.status = status;
    r.note(format!("{count} boundary samples checked"))
}
