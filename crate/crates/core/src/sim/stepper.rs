//! Field evaluation with constant-field shortcuts, and the pushback solver.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use super::{Result, SimError};
use crate::conditions::feasible_direction;
use crate::geometry::{newton_project, Domain, GeometryError, Point, Sector};
use crate::model::Model;
use crate::rng::StepDraws;

pub(crate) type Vals<T> = SmallVec<[T; 4]>;

/// How the direct scheme detects boundary contact within a step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Push only when the Euler proposal leaves the domain.
    Projection,
    /// Also sample the minimum of the Brownian bridge in each piece's
    /// normal coordinate, and push by the amount it undershoots.
    #[default]
    Bridge,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimOptions {
    pub scheme: Scheme,
    pub max_push_iters: usize,
    /// Control-clock steps per grid step in the controlled construction.
    pub substeps: u32,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions { scheme: Scheme::Bridge, max_push_iters: 64, substeps: 2 }
    }
}

/// Result of one direct step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Step {
    pub x: Point,
    pub dlambda: f64,
    pub gamma: Option<Point>,
    pub contact: Option<Point>,
}

/// `psi^i` and `grad psi^i` of every piece at one point.
#[derive(Clone, Debug)]
pub struct Local {
    pub x: Point,
    pub psi: Vals<f64>,
    pub grad: Vals<Point>,
}

impl Local {
    #[inline]
    pub fn min_psi(&self) -> f64 {
        self.psi.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

fn push_failure(point: Point, reason: impl Into<String>) -> SimError {
    SimError::ProjectionFailure { step: 0, point, reason: reason.into() }
}

/// Attach a step index to a pushback failure.
pub(crate) fn at_step(e: SimError, step: usize) -> SimError {
    match e {
        SimError::ProjectionFailure { point, reason, .. } => SimError::ProjectionFailure { step, point, reason },
        other => other,
    }
}

/// A model prepared for stepping: constant coefficients, gradients and
/// reflection fields are evaluated once.
#[derive(Clone, Debug)]
pub struct Stepper<'m> {
    pub(crate) domain: &'m Domain,
    model: &'m Model,
    b: Option<Point>,
    sigma: Option<Matrix2<f64>>,
    grad: Vec<Option<Point>>,
    g: Vec<Option<Point>>,
    pub(crate) opts: SimOptions,
}

impl<'m> Stepper<'m> {
    pub fn new(model: &'m Model, opts: SimOptions) -> Self {
        let domain = &model.domain;
        Stepper {
            domain,
            model,
            b: model.coeffs.b.constant_value(),
            sigma: model.coeffs.sigma.constant_value(),
            grad: domain.pieces.iter().map(|p| p.grad_field().constant_value()).collect(),
            g: domain
                .pieces
                .iter()
                .map(|p| p.g.constant_value().and_then(|v| (v.norm() > 0.0).then(|| v.normalize())))
                .collect(),
            opts,
        }
    }

    pub fn options(&self) -> &SimOptions {
        &self.opts
    }

    #[inline]
    pub(crate) fn drift(&self, x: Point) -> Result<Point> {
        match self.b {
            Some(b) => Ok(b),
            None => self.model.coeffs.drift(x).map_err(|source| GeometryError::Eval { point: x, source }.into()),
        }
    }

    #[inline]
    pub(crate) fn dispersion(&self, x: Point) -> Result<Matrix2<f64>> {
        match self.sigma {
            Some(s) => Ok(s),
            None => self.model.coeffs.dispersion(x).map_err(|source| GeometryError::Eval { point: x, source }.into()),
        }
    }

    pub fn local(&self, x: Point) -> Result<Local> {
        let mut psi = Vals::new();
        let mut grad = Vals::new();
        for (i, p) in self.domain.pieces.iter().enumerate() {
            psi.push(p.psi_at(x)?);
            grad.push(match self.grad[i] {
                Some(g) => g,
                None => p.grad_or_limit(x)?,
            });
        }
        Ok(Local { x, psi, grad })
    }

    /// Unit reflection direction of piece `i` at `p`.
    #[inline]
    pub(crate) fn g_at(&self, i: usize, p: Point) -> Result<Point> {
        match self.g[i] {
            Some(g) => Ok(g),
            None => Ok(self.domain.pieces[i].g_unit_at(p)?),
        }
    }

    fn unit_normals(&self, l: &Local) -> Result<Vals<Point>> {
        let floor = self.domain.tol.grad_floor;
        l.grad
            .iter()
            .enumerate()
            .map(|(i, g)| {
                let n = g.norm();
                if n > floor {
                    Ok(g / n)
                } else {
                    Err(push_failure(l.x, format!("gradient of piece {} degenerate", i + 1)))
                }
            })
            .collect()
    }

    /// One Euler step from `here` with Brownian increment `dw`, followed by
    /// the pushback. `bridge` supplies the uniforms of the bridge test.
    pub fn advance(&self, here: &Local, dt: f64, dw: Point, bridge: Option<&StepDraws>) -> Result<(Step, Local)> {
        let x = here.x;
        let sig = self.dispersion(x)?;
        let inc = self.drift(x)? * dt + sig * dw;
        let there = self.local(x + inc)?;
        let normals = self.unit_normals(&there)?;
        let mut q: Vals<f64> = Vals::new();
        let mut any = false;
        for i in 0..there.psi.len() {
            let mut qi = -there.psi[i] / there.grad[i].norm();
            if let Some(u) = bridge {
                let g0 = here.grad[i];
                let len = g0.norm();
                if len > 0.0 {
                    let n0 = g0 / len;
                    let d = here.psi[i] / len;
                    let xi = n0.dot(&inc);
                    let v = dt * (sig.transpose() * n0).norm_squared();
                    // skip when the crossing probability exp(-2 d d' / v) is below e^-50
                    if v > 0.0 && !(d > 0.0 && d + xi > 0.0 && d * (d + xi) > 25.0 * v) {
                        let m = 0.5 * (xi - (xi * xi - 2.0 * v * u.uniform(2 + i % 6).ln()).sqrt());
                        qi = qi.max(-(d + m));
                    }
                }
            }
            any |= qi > 0.0;
            q.push(qi);
        }
        if !any {
            let step = Step { x: there.x, dlambda: 0.0, gamma: None, contact: None };
            return Ok((step, there));
        }
        self.push_back(there, normals, q)
    }

    /// Push from `start` along reflection generators until every piece
    /// meets its normal-distance requirement `q`, then correct for
    /// curvature by re-linearizing.
    fn push_back(&self, start: Local, mut normals: Vals<Point>, mut q: Vals<f64>) -> Result<(Step, Local)> {
        let m = q.len();
        let slack = self.domain.tol.boundary_tol;
        let mut gens: Vals<Option<Point>> = (0..m).map(|_| None).collect();
        let mut contact = None;
        let mut cur = start;
        let mut total = Point::zeros();
        for _ in 0..self.opts.max_push_iters.max(1) {
            let cand: Vals<usize> = (0..m).filter(|&i| q[i] > 0.0).collect();
            if cand.is_empty() {
                break;
            }
            self.assign_generators(cur.x, &cand, &q, &mut gens, &mut contact)?;
            let push = match self.solve_push(cur.x, &normals, &q, &cand, &gens) {
                Ok(p) => p,
                Err(_) if m > 1 => {
                    // a push along one face would cross another: retry with
                    // the two most binding pieces, generators at their corner
                    let mut order: Vals<usize> = (0..m).collect();
                    order.sort_by(|a, b| q[*b].total_cmp(&q[*a]));
                    order.truncate(2);
                    gens.iter_mut().for_each(|g| *g = None);
                    contact = None;
                    self.assign_generators(cur.x, &order, &q, &mut gens, &mut contact)?;
                    self.solve_push(cur.x, &normals, &q, &order, &gens)?
                }
                Err(e) => return Err(e),
            };
            total += push;
            cur = self.local(cur.x + push)?;
            if cur.min_psi() >= -slack {
                let len = total.norm();
                let step = Step { x: cur.x, dlambda: len, gamma: Some(total / len), contact };
                return Ok((step, cur));
            }
            normals = self.unit_normals(&cur)?;
            q = (0..m).map(|i| -cur.psi[i] / cur.grad[i].norm()).collect();
        }
        Err(push_failure(cur.x, format!("still outside after {} push iterations", self.opts.max_push_iters)))
    }

    /// Evaluate generators for candidate pieces that have none yet, at
    /// their boundary contact: the corner for a violated pair, the Newton
    /// projection for a single piece.
    fn assign_generators(
        &self,
        x: Point,
        cand: &[usize],
        q: &[f64],
        gens: &mut [Option<Point>],
        contact: &mut Option<Point>,
    ) -> Result<()> {
        let tol = self.domain.tol.boundary_tol;
        let mut order: Vals<usize> = cand.iter().copied().collect();
        order.sort_by(|a, b| q[*b].total_cmp(&q[*a]));
        if let [i, j, ..] = order[..] {
            if gens[i].is_none() && gens[j].is_none() {
                if let Some(p) = self.corner_point(x, i, j) {
                    gens[i] = Some(self.g_at(i, p)?);
                    gens[j] = Some(self.g_at(j, p)?);
                    contact.get_or_insert(p);
                }
            }
        }
        for &i in &order {
            if gens[i].is_none() {
                let p = newton_project(&self.domain.pieces[i], x, tol, 60)
                    .ok_or_else(|| push_failure(x, format!("projection onto piece {} did not converge", i + 1)))?;
                gens[i] = Some(self.g_at(i, p)?);
                contact.get_or_insert(p);
            }
        }
        Ok(())
    }

    /// Common zero of `psi^i` and `psi^j` near `x`: Newton on the pair,
    /// falling back to a declared corner of the pair.
    pub(crate) fn corner_point(&self, x: Point, i: usize, j: usize) -> Option<Point> {
        let tol = self.domain.tol.boundary_tol;
        let (pi, pj) = (&self.domain.pieces[i], &self.domain.pieces[j]);
        let mut y = x;
        for _ in 0..40 {
            let f = Vector2::new(pi.psi.eval(y).ok()?, pj.psi.eval(y).ok()?);
            if f.amax() <= tol {
                return Some(y);
            }
            let (a, b) = (pi.grad_field().eval(y).ok()?, pj.grad_field().eval(y).ok()?);
            let jac = Matrix2::new(a.x, a.y, b.x, b.y);
            let dy = jac.try_inverse()? * f;
            if !dy.iter().all(|v| v.is_finite()) {
                break;
            }
            y -= dy;
        }
        self.domain
            .corners
            .iter()
            .filter(|c| c.pair == (i, j) || c.pair == (j, i))
            .min_by(|a, b| (a.point - x).norm().total_cmp(&(b.point - x).norm()))
            .map(|c| c.point)
    }

    /// Minimal `sum eta` with `eta >= 0` supported on one or two candidates
    /// and `n_k . sum eta_l g^l >= q_k` for every piece. Falls back to a
    /// direction of the generator cone pointing into both pieces.
    fn solve_push(&self, x: Point, normals: &[Point], q: &[f64], cand: &[usize], gens: &[Option<Point>]) -> Result<Point> {
        let g = |l: usize| gens[l].expect("generator assigned");
        let ok = |push: Point| (0..q.len()).all(|k| normals[k].dot(&push) >= q[k] - 1e-12 * (1.0 + q[k].abs()));
        let mut best: Option<(f64, Point)> = None;
        let mut offer = |mass: f64, push: Point| {
            if ok(push) && best.is_none_or(|(b, _)| mass < b) {
                best = Some((mass, push));
            }
        };
        for &l in cand {
            let a = normals[l].dot(&g(l));
            if a > 0.0 && q[l] > 0.0 {
                let eta = q[l] / a;
                offer(eta, eta * g(l));
            }
        }
        for (s, &i) in cand.iter().enumerate() {
            for &j in &cand[s + 1..] {
                let a = Matrix2::new(normals[i].dot(&g(i)), normals[i].dot(&g(j)), normals[j].dot(&g(i)), normals[j].dot(&g(j)));
                if let Some(inv) = a.try_inverse() {
                    let eta = inv * Vector2::new(q[i], q[j]);
                    if eta.x >= 0.0 && eta.y >= 0.0 {
                        offer(eta.x + eta.y, eta.x * g(i) + eta.y * g(j));
                    }
                }
            }
        }
        if let Some((_, push)) = best {
            return Ok(push);
        }
        if let [i, j, ..] = cand[..] {
            let tol = self.domain.tol.angle_tol;
            let (cone, _) = Sector::spanned(g(i), g(j), tol);
            if let Some(u) = feasible_direction(&cone, &[normals[i], normals[j]], tol) {
                let mut eta = 0.0f64;
                for &k in cand.iter().filter(|&&k| q[k] > 0.0) {
                    let c = normals[k].dot(&u);
                    if c <= 0.0 {
                        return Err(push_failure(x, "fallback direction does not enter every violated piece"));
                    }
                    eta = eta.max(q[k] / c);
                }
                return Ok(eta * u);
            }
        }
        Err(push_failure(x, "no nonnegative combination of reflection directions restores the state"))
    }

    /// Last point of the segment `from -> to` in the closure, bisected
    /// until it is within `boundary_tol` of the boundary. `from` must be
    /// inside.
    pub(crate) fn land(&self, from: Point, to: Point) -> Result<Local> {
        let tol = self.domain.tol.boundary_tol;
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let mut at = self.local(from)?;
        while at.min_psi() > tol {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let l = self.local(from + mid * (to - from))?;
            if l.min_psi() >= 0.0 {
                lo = mid;
                at = l;
            } else {
                hi = mid;
            }
        }
        Ok(at)
    }
}

/// One direct step from `x`, as used by [`super::simulate_path`]. Without
/// `bridge` uniforms this is the plain projection step.
pub fn euler_reflect_step_impl(
    model: &Model,
    opts: SimOptions,
    x: Point,
    dt: f64,
    dw: Point,
    bridge: Option<&StepDraws>,
) -> Result<Step> {
    let s = Stepper::new(model, opts);
    let here = s.local(x)?;
    Ok(s.advance(&here, dt, dw, bridge)?.0)
}
