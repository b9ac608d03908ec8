//! The direct reflected Euler scheme.

use super::stepper::{at_step, euler_reflect_step_impl, Local};
use super::{step_count, PathRecord, Result, Scheme, SimError, SimOptions, Step, Stepper};
use crate::geometry::Point;
use crate::model::Model;
use crate::rng::{PathStream, StepDraws};

/// One step from `x` with Brownian increment `dw`. Without `bridge`
/// uniforms the push happens only if the proposal leaves the domain.
pub fn euler_reflect_step(model: &Model, x: Point, dt: f64, dw: Point, bridge: Option<&StepDraws>) -> Result<Step> {
    euler_reflect_step_impl(model, SimOptions::default(), x, dt, dw, bridge)
}

pub(crate) fn start(st: &Stepper, x0: Point) -> Result<Local> {
    let here = st.local(x0)?;
    if here.min_psi() < -st.domain.tol.state_slack {
        return Err(SimError::StartOutside(x0));
    }
    Ok(here)
}

/// Steps `1..=n` of `stream` from `x0`. Step `k` reads block `k` of the
/// stream; block 0 is left for initial-state draws. `visit` returns
/// `false` to stop early.
pub(crate) fn drive<F>(st: &Stepper, x0: Point, stream: &mut PathStream, n: usize, dt: f64, mut visit: F) -> Result<()>
where
    F: FnMut(usize, &Step, Point) -> bool,
{
    let mut here = start(st, x0)?;
    let sq = dt.sqrt();
    let bridge = st.opts.scheme == Scheme::Bridge;
    for k in 1..=n {
        let d = stream.step(k as u64);
        let (z1, z2) = d.normals();
        let dw = Point::new(z1, z2) * sq;
        let (step, next) = st.advance(&here, dt, dw, bridge.then_some(&d)).map_err(|e| at_step(e, k))?;
        here = next;
        if !visit(k, &step, dw) {
            break;
        }
    }
    Ok(())
}

/// Full record of one path over `ceil(horizon / dt)` steps.
pub fn simulate_path(st: &Stepper, x0: Point, seed: u64, path_id: u64, horizon: f64, dt: f64) -> Result<PathRecord> {
    let n = step_count(horizon, dt)?;
    let mut rec = PathRecord::new(seed, path_id, dt, x0).with_capacity(n);
    let mut stream = PathStream::new(seed, path_id, 0);
    drive(st, x0, &mut stream, n, dt, |_, s, dw| {
        rec.push(s.x, s.dlambda, s.gamma, s.contact, s.dlambda > 0.0, dw);
        true
    })?;
    Ok(rec)
}

/// Terminal state and local time of the path [`simulate_path`] would
/// record, without storing it.
pub fn direct_terminal(st: &Stepper, x0: Point, seed: u64, path_id: u64, horizon: f64, dt: f64) -> Result<(Point, f64)> {
    let n = step_count(horizon, dt)?;
    let mut stream = PathStream::new(seed, path_id, 0);
    let (mut x, mut lambda) = (x0, 0.0);
    drive(st, x0, &mut stream, n, dt, |_, s, _| {
        x = s.x;
        lambda += s.dlambda;
        true
    })?;
    Ok((x, lambda))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::fixtures::*;
    use std::f64::consts::SQRT_2;

    fn p(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    #[test]
    fn half_plane_projection_step() {
        let m = half_plane();
        let s = euler_reflect_step(&m, p(0.0, 0.1), 1.0, p(0.0, -0.3), None).unwrap();
        assert_eq!(s.x, p(0.0, 0.0));
        assert!((s.dlambda - 0.2).abs() < 1e-15);
        assert_eq!(s.gamma, Some(p(0.0, 1.0)));
        assert_eq!(s.contact, Some(p(0.0, 0.0)));
    }

    #[test]
    fn interior_proposal_is_kept() {
        let m = half_plane();
        let s = euler_reflect_step(&m, p(0.0, 1.0), 1.0, p(0.3, -0.3), None).unwrap();
        assert_eq!(s.x, p(0.3, 0.7));
        assert_eq!((s.dlambda, s.gamma), (0.0, None));
    }

    #[test]
    fn oblique_push_in_a_wedge() {
        let m = wedge([1.0 / SQRT_2, 1.0 / SQRT_2], [0.0, 1.0]);
        let s = euler_reflect_step(&m, p(0.1, 0.05), 1.0, p(-0.2, 0.0), None).unwrap();
        assert!((s.x - p(0.0, 0.15)).norm() < 1e-15, "{:?}", s.x);
        assert!((s.dlambda - 0.1 * SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn corner_push_in_a_wedge() {
        // both constraints violated: normal reflection lands at the corner
        let m = wedge([1.0, 0.0], [0.0, 1.0]);
        let s = euler_reflect_step(&m, p(0.1, 0.1), 1.0, p(-0.3, -0.2), None).unwrap();
        assert!(s.x.norm() < 1e-15, "{:?}", s.x);
        assert!((s.dlambda - (0.2f64.powi(2) + 0.1f64.powi(2)).sqrt()).abs() < 1e-12);
        assert!(s.contact.unwrap().norm() < 1e-12);
    }

    #[test]
    fn oblique_corner_push_uses_the_pair() {
        // g1 tilted towards the x2 face, g2 normal
        let m = wedge([1.0 / SQRT_2, -1.0 / SQRT_2], [0.0, 1.0]);
        let s = euler_reflect_step(&m, p(0.1, 0.1), 1.0, p(-0.3, -0.2), None).unwrap();
        assert!(s.x.x.abs() < 1e-12 && s.x.y >= -1e-12, "{:?}", s.x);
        let g = s.gamma.unwrap();
        assert!(g.x > 0.0 && g.y > 0.0);
    }

    #[test]
    fn bridge_step_pushes_on_crossing_bridges() {
        let m = half_plane();
        // endpoint inside, but a small uniform makes the bridge dip below 0
        let mut u = StepDraws([0.5; 8]);
        u.0[2] = 1e-12;
        let s = euler_reflect_step(&m, p(0.0, 0.05), 0.01, p(0.0, 0.0), Some(&u)).unwrap();
        assert!(s.dlambda > 0.0);
        assert!(s.x.y > 0.05);
        // 1-D reflection: x' - min(0, d + m)
        let (d, v) = (0.05f64, 0.01f64);
        let mn = 0.5 * (0.0 - (0.0 - 2.0 * v * 1e-12f64.ln()).sqrt());
        assert!((s.x.y - (d - (d + mn))).abs() < 1e-15);
        u.0[2] = 1.0;
        let s = euler_reflect_step(&m, p(0.0, 0.05), 0.01, p(0.0, 0.0), Some(&u)).unwrap();
        assert_eq!(s.dlambda, 0.0);
    }

    #[test]
    fn zero_noise_path_is_constant() {
        let m = still(half_plane());
        let st = Stepper::new(&m, SimOptions::default());
        let r = simulate_path(&st, p(0.3, 1.0), 1, 0, 1.0, 0.01).unwrap();
        assert_eq!(r.len(), 101);
        assert!(r.x.iter().all(|x| *x == p(0.3, 1.0)));
        assert!(r.lambda.iter().all(|l| *l == 0.0));
    }

    #[test]
    fn terminal_matches_record() {
        let m = half_plane();
        let st = Stepper::new(&m, SimOptions::default());
        let r = simulate_path(&st, p(0.0, 0.02), 9, 4, 0.5, 0.01).unwrap();
        let (x, l) = direct_terminal(&st, p(0.0, 0.02), 9, 4, 0.5, 0.01).unwrap();
        assert_eq!(x, r.terminal());
        assert_eq!(l, *r.lambda.last().unwrap());
        assert!(r.lambda.last().unwrap() > &0.0);
    }

    #[test]
    fn start_outside_is_rejected() {
        let m = half_plane();
        let st = Stepper::new(&m, SimOptions::default());
        assert!(matches!(simulate_path(&st, p(0.0, -1.0), 0, 0, 1.0, 0.1), Err(SimError::StartOutside(_))));
    }
}
