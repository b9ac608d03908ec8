//! Localized simulation: corner balls plus a remainder region, with a
//! fresh stream segment and a paste at every exit.

use serde::Serialize;

use super::direct::drive;
use super::{paste, step_count, PathRecord, Result, SimError, Stepper, StoppedPath};
use crate::geometry::{Domain, Point};
use crate::rng::PathStream;

/// Balls `B(x^k, r0)` around the corners and the remainder
/// `closure(D) \ ∪ closed B(x^k, r0 / 2)`, each intersected with the
/// closure of the domain.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cover {
    corners: Vec<Point>,
    r0: f64,
}

impl Cover {
    /// Requires `r0 > 0` and no corner in the closed ball of another.
    pub fn new(corners: Vec<Point>, r0: f64) -> Result<Self> {
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(SimError::InvalidCover(format!("radius must be positive, got {r0}")));
        }
        for (h, a) in corners.iter().enumerate() {
            for (k, b) in corners.iter().enumerate().skip(h + 1) {
                if (a - b).norm() <= r0 {
                    return Err(SimError::InvalidCover(format!(
                        "corner {} lies in the closed ball of corner {} (distance {} <= {r0})",
                        k + 1,
                        h + 1,
                        (a - b).norm()
                    )));
                }
            }
        }
        Ok(Cover { corners, r0 })
    }

    /// Cover built on the declared corners of `domain`.
    pub fn for_domain(domain: &Domain, r0: f64) -> Result<Self> {
        Self::new(domain.corners.iter().map(|c| c.point).collect(), r0)
    }

    /// Number of elements: one per corner plus the remainder.
    pub fn len(&self) -> usize {
        self.corners.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn radius(&self) -> f64 {
        self.r0
    }

    /// Membership in element `e`, ignoring the domain.
    pub fn contains(&self, e: usize, x: Point) -> bool {
        match self.corners.get(e) {
            Some(c) => (x - c).norm() < self.r0,
            None => self.corners.iter().all(|c| (x - c).norm() > 0.5 * self.r0),
        }
    }

    /// First element containing `x`: a corner ball if any, else the
    /// remainder.
    pub fn element_of(&self, x: Point) -> Option<usize> {
        (0..self.len()).find(|&e| self.contains(e, x))
    }
}

/// Where each segment started (global step index) and in which element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Segment {
    pub start: usize,
    pub element: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Localized {
    pub record: PathRecord,
    pub segments: Vec<Segment>,
}

fn element(st: &Stepper, cover: &Cover, x: Point, step: usize) -> Result<usize> {
    if !st.domain.in_closure(x, st.domain.tol.state_slack) {
        return Err(SimError::CoverGap { step, point: x });
    }
    cover.element_of(x).ok_or(SimError::CoverGap { step, point: x })
}

/// Runs segment after segment: segment `j` uses stream segment `j`, stops
/// at the exit from its element and is pasted onto the path so far.
pub fn localized_simulate(
    st: &Stepper,
    cover: &Cover,
    x0: Point,
    seed: u64,
    path_id: u64,
    horizon: f64,
    dt: f64,
) -> Result<Localized> {
    let n = step_count(horizon, dt)?;
    let mut segments = Vec::new();
    let mut path: Option<PathRecord> = None;
    let (mut k0, mut x) = (0usize, x0);
    loop {
        let e = element(st, cover, x, k0)?;
        segments.push(Segment { start: k0, element: e });
        let mut seg = PathRecord::new(seed, path_id, dt, x);
        let mut stream = PathStream::new(seed, path_id, segments.len() as u64 - 1);
        let mut left = false;
        drive(st, x, &mut stream, n - k0, dt, |_, s, dw| {
            seg.push(s.x, s.dlambda, s.gamma, s.contact, s.dlambda > 0.0, dw);
            left = !cover.contains(e, s.x);
            !left
        })?;
        let used = seg.steps();
        path = Some(match path {
            None => seg,
            Some(head) => {
                let end = head.len() - 1;
                paste(&StoppedPath { tau: head.t(end), record: head, exit: Some(end) }, &seg)?
            }
        });
        k0 += used;
        if !left || k0 == n {
            break;
        }
        x = path.as_ref().expect("segment ran").terminal();
    }
    Ok(Localized { record: path.expect("at least one segment"), segments })
}

/// Terminal state and local time of [`localized_simulate`], streamed.
pub fn localized_terminal(
    st: &Stepper,
    cover: &Cover,
    x0: Point,
    seed: u64,
    path_id: u64,
    horizon: f64,
    dt: f64,
) -> Result<(Point, f64)> {
    let n = step_count(horizon, dt)?;
    let (mut k0, mut x, mut lambda, mut segment) = (0usize, x0, 0.0, 0u64);
    loop {
        let e = element(st, cover, x, k0)?;
        let mut stream = PathStream::new(seed, path_id, segment);
        let (mut used, mut left, mut seg_lambda) = (0usize, false, 0.0);
        drive(st, x, &mut stream, n - k0, dt, |k, s, _| {
            used = k;
            x = s.x;
            seg_lambda += s.dlambda;
            left = !cover.contains(e, s.x);
            !left
        })?;
        lambda += seg_lambda;
        k0 += used;
        if !left || k0 == n {
            return Ok((x, lambda));
        }
        segment += 1;
    }
}
