//! The controlled construction: diffuse on the interior clock while inside,
//! move along a reflection direction on the boundary clock while on the
//! boundary.

use super::direct::start;
use super::stepper::{at_step, Local};
use super::{Scheme, Step};
use super::{step_count, ControlledPathRecord, PathRecord, Result, SimError, Stepper};
use crate::conditions::feasible_direction;
use crate::geometry::{GeometryError, Point, Sector};
use crate::rng::{PathStream, StepDraws};

/// What one control-clock step did.
pub(crate) enum Move {
    Interior { dw: Point },
    Boundary { at: Point, u: Point },
}

/// Controlled dynamics on a fixed control step `ds`.
///
/// The increment of interior step `n` is read from block `n` of the
/// stream. When that increment would carry the state out of the domain
/// (or its Brownian bridge across the boundary), the state is pushed by
/// `ds` along the reflection direction at the contact point instead, and
/// the same increment is tried again on the next control step. The
/// boundary clock then accumulates the mass the pushback needs rather
/// than the vanishing mass of a state stopped exactly on the boundary.
pub(crate) struct Controlled<'s, 'm> {
    st: &'s Stepper<'m>,
    pub here: Local,
    ds: f64,
    sq: f64,
    stream: PathStream,
    n0: u64,
    draw: Option<(u64, StepDraws)>,
    ahead: Option<(Step, Local, Point)>,
    /// Boundary moves still owed to the last pushback: count, direction
    /// and contact point.
    queue: (u64, Point, Point),
}

impl<'s, 'm> Controlled<'s, 'm> {
    pub fn new(st: &'s Stepper<'m>, y0: Point, ds: f64, stream: PathStream) -> Result<Self> {
        Ok(Controlled { st, here: start(st, y0)?, ds, sq: ds.sqrt(), stream, n0: 0, draw: None, ahead: None, queue: (0, Point::zeros(), Point::zeros()) })
    }

    /// Whether the state is off the boundary layer.
    #[inline]
    pub fn interior(&self) -> bool {
        self.here.min_psi() > self.st.domain.tol.boundary_tol
    }

    fn draws(&mut self) -> StepDraws {
        let k = self.n0 + 1;
        match self.draw {
            Some((j, d)) if j == k => d,
            _ => {
                let d = self.stream.step(k);
                self.draw = Some((k, d));
                d
            }
        }
    }

    /// The move the next control step makes, without making it.
    pub fn next_is_interior(&mut self) -> Result<bool> {
        if !self.interior() || self.queue.0 > 0 {
            return Ok(false);
        }
        let (step, _, _) = self.look_ahead()?;
        Ok(step.dlambda == 0.0)
    }

    fn look_ahead(&mut self) -> Result<&(Step, Local, Point)> {
        if self.ahead.is_none() {
            self.ahead = Some(self.compute_ahead()?);
        }
        Ok(self.ahead.as_ref().expect("just filled"))
    }

    fn compute_ahead(&mut self) -> Result<(Step, Local, Point)> {
        let d = self.draws();
        let (z1, z2) = d.normals();
        let dw = Point::new(z1, z2) * self.sq;
        let bridge = self.st.opts.scheme == Scheme::Bridge;
        let (step, next) = self.st.advance(&self.here, self.ds, dw, bridge.then_some(&d))?;
        Ok((step, next, dw))
    }

    pub fn step(&mut self) -> Result<Move> {
        if self.queue.0 > 0 {
            // owed moves stop early when they would run into another piece
            let (_, u, at) = self.queue;
            let target = self.st.local(self.here.x + self.ds * u)?;
            if target.min_psi() >= 0.0 {
                self.queue.0 -= 1;
                self.ahead = None;
                self.here = target;
                return Ok(Move::Boundary { at, u });
            }
            self.queue.0 = 0;
        }
        if !self.interior() {
            let at = self.here.x;
            let u = self.push()?;
            return Ok(Move::Boundary { at, u });
        }
        self.look_ahead()?;
        let (step, next, dw) = self.ahead.take().expect("look-ahead computed");
        if step.dlambda == 0.0 {
            self.here = next;
            self.n0 += 1;
            return Ok(Move::Interior { dw });
        }
        let u = step.gamma.expect("a push has a direction");
        let at = step.contact.unwrap_or(self.here.x);
        let owed = (step.dlambda / self.ds * (1.0 - 1e-12)).ceil().max(1.0) as u64;
        self.queue = (owed - 1, u, at);
        self.move_along(u)?;
        Ok(Move::Boundary { at, u })
    }

    /// Boundary move from a state on the boundary layer.
    fn push(&mut self) -> Result<Point> {
        let tol = self.st.domain.tol.boundary_tol;
        let active: Vec<usize> = (0..self.here.psi.len()).filter(|&i| self.here.psi[i] <= tol).collect();
        let u = self.direction(&active)?;
        self.move_along(u)?;
        Ok(u)
    }

    /// Move by `ds u`, cut short where it would leave the closure.
    fn move_along(&mut self, u: Point) -> Result<()> {
        self.ahead = None;
        let x = self.here.x;
        let target = self.st.local(x + self.ds * u)?;
        self.here = if target.min_psi() >= 0.0 {
            target
        } else {
            let (t, at) = self.last_inside(x, x + self.ds * u)?;
            if t == 0.0 {
                return Err(SimError::ProjectionFailure {
                    step: 0,
                    point: x,
                    reason: "boundary direction does not enter the domain".into(),
                });
            }
            at
        };
        Ok(())
    }

    /// Largest `t` on a dyadic grid with `from + t (to - from)` in the
    /// closure, up to the state slack.
    fn last_inside(&self, from: Point, to: Point) -> Result<(f64, Local)> {
        let slack = self.st.domain.tol.boundary_tol;
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let mut at = self.here.clone();
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let l = self.st.local(from + mid * (to - from))?;
            if l.min_psi() >= -slack {
                lo = mid;
                at = l;
            } else {
                hi = mid;
            }
        }
        Ok((lo, at))
    }

    /// `g^i` on a face. At a corner, a direction of `G` entering both
    /// pieces; at a cusp, where none exists, the direction of `G` that
    /// keeps the state deepest inside after one move.
    fn direction(&self, active: &[usize]) -> Result<Point> {
        let st = self.st;
        let x = self.here.x;
        match *active {
            [i] => st.g_at(i, x),
            [i, j] => {
                let tol = st.domain.tol.angle_tol;
                let (gi, gj) = (st.g_at(i, x)?, st.g_at(j, x)?);
                let (ni, nj) = (self.here.grad[i].normalize(), self.here.grad[j].normalize());
                let (cone, _) = Sector::spanned(gi, gj, tol);
                if let Some(u) = feasible_direction(&cone, &[ni, nj], tol) {
                    return Ok(u);
                }
                let mut best = (f64::NEG_INFINITY, gi);
                for k in 0..=32 {
                    let u = crate::geometry::unit_at(cone.angle_lo + cone.width() * k as f64 / 32.0);
                    let depth = st.local(x + self.ds * u)?.min_psi();
                    if depth > best.0 {
                        best = (depth, u);
                    }
                }
                Ok(best.1)
            }
            _ => Err(GeometryError::TooManyActive(x).into()),
        }
    }
}

/// Full controlled record over `ceil(horizon / ds)` control steps.
pub fn simulate_controlled(
    st: &Stepper,
    y0: Point,
    seed: u64,
    path_id: u64,
    horizon: f64,
    ds: f64,
) -> Result<ControlledPathRecord> {
    let n = step_count(horizon, ds)?;
    let mut ctl = Controlled::new(st, y0, ds, PathStream::new(seed, path_id, 0))?;
    let mut rec = ControlledPathRecord::new(seed, path_id, ds, y0);
    for k in 1..=n {
        match ctl.step().map_err(|e| at_step(e, k))? {
            Move::Interior { dw } => rec.push_interior(ctl.here.x, dw),
            Move::Boundary { at, u } => rec.push_boundary(ctl.here.x, at, Some(u)),
        }
    }
    Ok(rec)
}

/// `X(t) = Y(lambda0^{-1}(t))` and `lambda(t)` for a single `t`, running
/// the controlled dynamics only as long as needed.
pub fn controlled_terminal(st: &Stepper, y0: Point, seed: u64, path_id: u64, t: f64, ds: f64) -> Result<(Point, f64)> {
    step_count(t, ds)?;
    let q = t / ds;
    let level = (q + 1e-9 * q.max(1.0)).floor().max(0.0);
    let frac = if q - level < 1e-9 { 0.0 } else { q - level };
    let level = level as u64;
    let mut ctl = Controlled::new(st, y0, ds, PathStream::new(seed, path_id, 0))?;
    let (mut n1, mut k) = (0u64, 0u64);
    let cap = 64 * level + 1_000_000;
    let advance = |ctl: &mut Controlled, n1: &mut u64, k: &mut u64| -> Result<()> {
        *k += 1;
        if *k > cap {
            let rec = PathRecord::new(seed, path_id, ds, ctl.here.x);
            return Err(SimError::ClockStalled { reached: ctl.n0 as f64 * ds, wanted: t, record: Box::new(rec) });
        }
        if let Move::Boundary { .. } = ctl.step().map_err(|e| at_step(e, *k as usize))? {
            *n1 += 1;
        }
        Ok(())
    };
    while !(ctl.n0 == level && ctl.next_is_interior().map_err(|e| at_step(e, k as usize + 1))?) {
        advance(&mut ctl, &mut n1, &mut k)?;
    }
    let mut x = ctl.here.x;
    if frac > 0.0 {
        let prev = x;
        advance(&mut ctl, &mut n1, &mut k)?;
        x = prev + frac * (ctl.here.x - prev);
    }
    Ok((x, n1 as f64 * ds))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::fixtures::*;
    use crate::sim::SimOptions;
    use std::f64::consts::PI;

    fn p(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    #[test]
    fn face_start_pushes_inward_until_interior() {
        let m = still(wedge([0.6, 0.8], [0.0, 1.0]));
        let st = Stepper::new(&m, SimOptions::default());
        let r = simulate_controlled(&st, p(0.0, 1.0), 0, 0, 0.05, 0.01).unwrap();
        // first step pushes along g1, then the state is interior and still
        assert_eq!(r.n1[1], 1);
        assert!((r.y[1] - p(0.006, 1.008)).norm() < 1e-15);
        assert_eq!(r.atoms.len(), 1);
        assert_eq!(r.atoms[0].direction, Some(p(0.6, 0.8)));
        assert!(r.n0[2..].windows(2).all(|w| w[1] == w[0] + 1));
    }

    #[test]
    fn clocks_partition_the_control_clock() {
        let m = half_disc(PI / 4.0);
        let st = Stepper::new(&m, SimOptions::default());
        let r = simulate_controlled(&st, p(1.0, 0.1), 3, 1, 2.0, 1e-3).unwrap();
        for k in 1..r.len() {
            let (d0, d1) = (r.n0[k] - r.n0[k - 1], r.n1[k] - r.n1[k - 1]);
            assert_eq!(d0 + d1, 1);
            let d = r.lambda0(k) - r.lambda0(k - 1) + r.lambda1(k) - r.lambda1(k - 1);
            assert!((d - r.ds).abs() <= 1e-15);
        }
        assert!(!r.atoms.is_empty());
        let tol = m.domain.tol.boundary_tol;
        for a in &r.atoms {
            assert!(m.domain.min_psi(a.point).unwrap() <= tol);
            let u = a.direction.unwrap();
            let (g, _) = m.domain.direction_cone(a.point).unwrap();
            assert!(g.contains(u, 1e-9), "{a:?}");
        }
        assert!(r.y.iter().all(|y| m.domain.in_closure(*y, 1e-9)));
    }

    #[test]
    fn corner_direction_enters_both_pieces() {
        let m = still(wedge([1.0, -0.2], [-0.2, 1.0]));
        let st = Stepper::new(&m, SimOptions::default());
        let r = simulate_controlled(&st, p(0.0, 0.0), 0, 0, 0.01, 0.01).unwrap();
        let u = r.atoms[0].direction.unwrap();
        assert!(u.x > 0.0 && u.y > 0.0);
        assert!(r.y[1].x > 0.0 && r.y[1].y > 0.0);
    }

    #[test]
    fn terminal_without_boundary_is_plain_euler() {
        let m = with_drift(half_plane(), [0.0, 1.0], 0.0);
        let st = Stepper::new(&m, SimOptions::default());
        let (x, l) = controlled_terminal(&st, p(0.0, 1.0), 0, 0, 1.0, 0.25).unwrap();
        assert_eq!((x, l), (p(0.0, 2.0), 0.0));
        let (x, _) = controlled_terminal(&st, p(0.0, 1.0), 0, 0, 0.6, 0.25).unwrap();
        assert!((x - p(0.0, 1.6)).norm() < 1e-12);
    }
}
