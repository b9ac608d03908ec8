//! Stopping at the exit from an open region, and pasting at the seam.

use super::records::EventKind;
use super::{ControlledPathRecord, PathRecord, Result, SimError};
use crate::geometry::Point;

/// An open set given by its membership predicate.
pub trait Region: Sync {
    fn contains(&self, x: Point) -> bool;
}

impl<F: Fn(Point) -> bool + Sync> Region for F {
    fn contains(&self, x: Point) -> bool {
        self(x)
    }
}

/// Open ball.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Region for Ball {
    fn contains(&self, x: Point) -> bool {
        (x - self.center).norm() < self.radius
    }
}

/// Records that can be frozen after an index.
pub trait Stoppable: Clone {
    fn states(&self) -> &[Point];
    fn time(&self, k: usize) -> f64;
    fn freeze_after(&mut self, k: usize);
}

impl Stoppable for PathRecord {
    fn states(&self) -> &[Point] {
        &self.x
    }

    fn time(&self, k: usize) -> f64 {
        self.t(k)
    }

    fn freeze_after(&mut self, k: usize) {
        for i in k + 1..self.len() {
            self.x[i] = self.x[k];
            self.lambda[i] = self.lambda[k];
            self.gamma[i] = None;
            self.contact[i] = None;
            self.flag[i] = false;
            self.dw[i] = Point::zeros();
            if let Some(e) = self.events.get_mut(i) {
                *e = EventKind::Hold;
            }
        }
    }
}

impl Stoppable for ControlledPathRecord {
    fn states(&self) -> &[Point] {
        &self.y
    }

    fn time(&self, k: usize) -> f64 {
        self.s(k)
    }

    fn freeze_after(&mut self, k: usize) {
        for i in k + 1..self.len() {
            self.y[i] = self.y[k];
            self.n0[i] = self.n0[k];
            self.n1[i] = self.n1[k];
            self.dw[i] = Point::zeros();
            if let Some(e) = self.events.get_mut(i) {
                *e = EventKind::Hold;
            }
        }
        self.atoms.retain(|a| a.step <= k);
    }
}

/// A record frozen from its exit index on. `tau` is infinite when the
/// path never leaves.
#[derive(Clone, Debug, PartialEq)]
pub struct StoppedPath<R> {
    pub record: R,
    pub exit: Option<usize>,
    pub tau: f64,
}

/// First index `k` with `X(t_k)` outside `u`, or with the previous grid
/// point outside (the discrete left limit).
pub fn exit_index(states: &[Point], u: &dyn Region) -> Option<usize> {
    (0..states.len()).find(|&k| !u.contains(states[k]) || (k > 0 && !u.contains(states[k - 1])))
}

pub fn stop_at_exit<R: Stoppable>(p: &R, u: &dyn Region) -> StoppedPath<R> {
    let mut record = p.clone();
    match exit_index(p.states(), u) {
        Some(k) => {
            record.freeze_after(k);
            let tau = record.time(k);
            StoppedPath { record, exit: Some(k), tau }
        }
        None => StoppedPath { record, exit: None, tau: f64::INFINITY },
    }
}

/// The head up to its exit, followed by `continuation` shifted to start at
/// the exit time. Local time accumulates across the seam:
/// `lambda(tau + s) = lambda_head(tau) + lambda_cont(s)`.
pub fn paste(head: &StoppedPath<PathRecord>, continuation: &PathRecord) -> Result<PathRecord> {
    let h = &head.record;
    let e = head.exit.unwrap_or(h.len() - 1);
    let gap = (continuation.x[0] - h.x[e]).norm();
    if !(gap <= 1e-12) {
        return Err(SimError::SeamMismatch { gap });
    }
    if (continuation.dt - h.dt).abs() > 1e-15 * h.dt {
        return Err(SimError::InvalidRun(format!("grid steps differ: {} and {}", h.dt, continuation.dt)));
    }
    let mut out = PathRecord {
        seed: h.seed,
        path_id: h.path_id,
        dt: h.dt,
        x: h.x[..=e].to_vec(),
        lambda: h.lambda[..=e].to_vec(),
        gamma: h.gamma[..=e].to_vec(),
        contact: h.contact[..=e].to_vec(),
        flag: h.flag[..=e].to_vec(),
        dw: h.dw[..=e].to_vec(),
        events: h.events.get(..=e).map(<[_]>::to_vec).unwrap_or_default(),
    };
    let base = h.lambda[e];
    out.x.extend_from_slice(&continuation.x[1..]);
    out.lambda.extend(continuation.lambda[1..].iter().map(|l| base + l));
    out.gamma.extend_from_slice(&continuation.gamma[1..]);
    out.contact.extend_from_slice(&continuation.contact[1..]);
    out.flag.extend_from_slice(&continuation.flag[1..]);
    out.dw.extend_from_slice(&continuation.dw[1..]);
    if !continuation.events.is_empty() {
        out.events.extend_from_slice(&continuation.events[1..]);
    }
    Ok(out)
}
