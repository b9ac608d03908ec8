//! `X(t) = Y(lambda0^{-1}(t))` with the right-continuous inverse.

use serde::{Deserialize, Serialize};

use super::records::EventKind;
use super::{step_count, ControlledPathRecord, PathRecord, Result, SimError};
use crate::geometry::Point;

/// How boundary atoms between two grid times become one push direction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomAggregation {
    #[default]
    MassWeighted,
    LastAtom,
}

/// Index `k` ending the flat of `lambda0` at level `t`, with the fraction
/// of the following interior step when `t` is not a multiple of `ds`.
/// `None` once `t` exceeds the final interior clock.
fn locate(cp: &ControlledPathRecord, t: f64) -> Option<(usize, f64)> {
    let q = t / cp.ds;
    let c = (q + 1e-9 * q.max(1.0)).floor().max(0.0);
    let frac = if q - c < 1e-9 { 0.0 } else { q - c };
    let c = c as u64;
    let k = cp.n0.partition_point(|&v| v <= c).checked_sub(1)?;
    if cp.n0[k] != c || (frac > 0.0 && k + 1 >= cp.len()) {
        return None;
    }
    Some((k, frac))
}

/// Time-changed path on the grid `t_j = j dt`, `j <= ceil(horizon / dt)`.
/// Boundary mass between consecutive levels becomes that step's local time
/// increment. If the interior clock ends early, the truncated record comes
/// back inside [`SimError::ClockStalled`].
pub fn time_change(cp: &ControlledPathRecord, dt: f64, horizon: f64, agg: AtomAggregation) -> Result<PathRecord> {
    let n = step_count(horizon, dt)?;
    let at = |(k, frac): (usize, f64)| {
        if frac > 0.0 {
            cp.y[k] + frac * (cp.y[k + 1] - cp.y[k])
        } else {
            cp.y[k]
        }
    };
    let stalled = |rec: PathRecord| SimError::ClockStalled {
        reached: *cp.n0.last().expect("record has a start") as f64 * cp.ds,
        wanted: horizon,
        record: Box::new(rec),
    };
    let first = locate(cp, 0.0).expect("level 0 exists");
    let mut rec = PathRecord::new(cp.seed, cp.path_id, dt, at(first));
    if !cp.events.is_empty() {
        rec.events.push(EventKind::Diffuse);
    }
    let mut prev = first.0;
    let mut next_atom = cp.atoms.partition_point(|a| a.step <= prev);
    for j in 1..=n {
        let Some(loc) = locate(cp, j as f64 * dt) else {
            return Err(stalled(rec));
        };
        let k = loc.0;
        let mut sum = Point::zeros();
        let mut last = None;
        let mut contact = None;
        while next_atom < cp.atoms.len() && cp.atoms[next_atom].step <= k {
            let a = &cp.atoms[next_atom];
            if let Some(d) = a.direction {
                sum += a.mass * d;
                last = Some(d);
            }
            contact = Some(a.point);
            next_atom += 1;
        }
        let gamma = match agg {
            AtomAggregation::MassWeighted => (sum.norm() > 0.0).then(|| sum.normalize()),
            AtomAggregation::LastAtom => last,
        };
        let dlambda = (cp.n1[k] - cp.n1[prev]) as f64 * cp.ds;
        let dw = cp.dw[prev + 1..=k].iter().sum();
        rec.push(at(loc), dlambda, gamma, contact, contact.is_some(), dw);
        if !cp.events.is_empty() {
            let jumped = cp.events[prev + 1..=k].contains(&EventKind::Jump);
            rec.events.push(if jumped { EventKind::Jump } else { EventKind::Diffuse });
        }
        prev = k;
    }
    Ok(rec)
}
