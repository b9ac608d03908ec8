//! Diffusion in a smooth domain that, on reaching the boundary, is sent
//! back inside by a jump kernel. The controlled process waits at the exit
//! point for a unit exponential time on the boundary clock; the
//! constrained process jumps at once.

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::conditions::{CheckReport, ConditionId, Status, Witness};
use crate::expr::ScalarField;
use crate::geometry::{Domain, GeometryError, Point};
use crate::model::{Coefficients, Model};
use crate::rng::{PathStream, StepDraws};
use crate::sim::{step_count, ControlledPathRecord, EventKind, PathRecord, Result, SimError, SimOptions, Stepper};

/// Where the process lands after leaving through the boundary.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Kernel {
    /// Uniform over a closed disc.
    Disc { center: [f64; 2], radius: f64 },
    /// Point mass.
    Point { at: [f64; 2] },
}

impl Kernel {
    /// Sample from two uniforms in `(0, 1]`.
    pub fn sample(&self, u1: f64, u2: f64) -> Point {
        match *self {
            Kernel::Disc { center, radius } => {
                let r = radius * u1.sqrt();
                let a = std::f64::consts::TAU * u2;
                Point::new(center[0] + r * a.cos(), center[1] + r * a.sin())
            }
            Kernel::Point { at } => Point::new(at[0], at[1]),
        }
    }

    fn center(&self) -> Point {
        match *self {
            Kernel::Disc { center, .. } => Point::new(center[0], center[1]),
            Kernel::Point { at } => Point::new(at[0], at[1]),
        }
    }
}

// draw slots of the landing step's block
const KERNEL_SLOTS: (usize, usize) = (4, 5);
const HOLD_SLOT: usize = 6;

/// A single smooth piece `E0`, coefficients switched off by a bump
/// outside the `cutoff`-neighbourhood of its closure, and a jump kernel.
#[derive(Clone, Debug)]
pub struct JumpScenario {
    pub model: Model,
    pub kernel: Kernel,
    pub cutoff: f64,
}

impl JumpScenario {
    pub fn new(domain: Domain, coeffs: Coefficients, kernel: Kernel, cutoff: f64) -> Result<Self> {
        if domain.len() != 1 {
            return Err(SimError::InvalidRun(format!("jump domain needs exactly one piece, got {}", domain.len())));
        }
        if !(cutoff > 0.0 && cutoff.is_finite()) {
            return Err(SimError::InvalidRun(format!("cutoff radius must be positive, got {cutoff}")));
        }
        if let Kernel::Disc { radius, .. } = kernel {
            if !(radius >= 0.0 && radius.is_finite()) {
                return Err(SimError::InvalidRun(format!("kernel radius must be nonnegative, got {radius}")));
            }
        }
        let js = JumpScenario { model: Model::new(domain, coeffs), kernel, cutoff };
        // the rim and centre of the kernel support must lie in E0
        let rim = (0..64).map(|k| js.kernel.sample(1.0, k as f64 / 64.0)).chain([js.kernel.center()]);
        for p in rim {
            if js.psi(p)? <= 0.0 {
                return Err(SimError::KernelEscape { step: 0, point: p });
            }
        }
        Ok(js)
    }

    pub fn domain(&self) -> &Domain {
        &self.model.domain
    }

    fn psi(&self, x: Point) -> Result<f64> {
        Ok(self.domain().pieces[0].psi_at(x)?)
    }

    /// Bump factor: 1 on the closure, `exp(1 - 1 / (1 - (d / r)^2))` at
    /// approximate distance `d < r` outside, 0 beyond.
    pub fn cutoff_factor(&self, x: Point) -> Result<f64> {
        let p = &self.domain().pieces[0];
        let psi = p.psi_at(x)?;
        if psi >= 0.0 {
            return Ok(1.0);
        }
        let n = p.grad_at(x)?.norm();
        let s = if n > 0.0 { -psi / n / self.cutoff } else { 1.0 };
        Ok(if s >= 1.0 { 0.0 } else { (1.0 - 1.0 / (1.0 - s * s)).exp() })
    }

    pub fn drift(&self, x: Point) -> Result<Point> {
        let b = self.model.coeffs.drift(x).map_err(|source| GeometryError::Eval { point: x, source })?;
        Ok(self.cutoff_factor(x)? * b)
    }

    pub fn dispersion(&self, x: Point) -> Result<Matrix2<f64>> {
        let s = self.model.coeffs.dispersion(x).map_err(|source| GeometryError::Eval { point: x, source })?;
        Ok(self.cutoff_factor(x)? * s)
    }

    fn target(&self, d: &StepDraws, step: usize) -> Result<Point> {
        let p = self.kernel.sample(d.uniform(KERNEL_SLOTS.0), d.uniform(KERNEL_SLOTS.1));
        if self.psi(p)? > 0.0 {
            Ok(p)
        } else {
            Err(SimError::KernelEscape { step, point: p })
        }
    }
}

/// One diffusion step, stopped where the segment reaches the boundary.
/// Returns the new state and whether it lies on the boundary.
struct Diffusion<'a> {
    js: &'a JumpScenario,
    st: Stepper<'a>,
    sq: f64,
    h: f64,
}

impl<'a> Diffusion<'a> {
    fn new(js: &'a JumpScenario, h: f64) -> Self {
        Diffusion { js, st: Stepper::new(&js.model, SimOptions::default()), sq: h.sqrt(), h }
    }

    fn on_boundary(&self, x: Point) -> Result<bool> {
        Ok(self.js.psi(x)? <= self.js.domain().tol.boundary_tol)
    }

    fn start(&self, x0: Point) -> Result<bool> {
        if self.js.psi(x0)? < -self.js.domain().tol.state_slack {
            return Err(SimError::StartOutside(x0));
        }
        self.on_boundary(x0)
    }

    fn step(&self, x: Point, d: &StepDraws) -> Result<(Point, Point, bool)> {
        let (z1, z2) = d.normals();
        let dw = Point::new(z1, z2) * self.sq;
        let to = x + self.js.drift(x)? * self.h + self.js.dispersion(x)? * dw;
        if !self.on_boundary(to)? {
            return Ok((to, dw, false));
        }
        let at = self.st.land(x, to)?.x;
        Ok((at, dw, true))
    }
}

/// Controlled jump run over `ceil(horizon / ds)` control steps. Interior
/// step `n` reads block `n` of the stream; a step ending on the boundary
/// also supplies the hold time and the jump target. The hold lasts
/// `ceil(H / ds)` boundary steps, the last of which carries the jump.
pub fn simulate_jump_controlled(
    js: &JumpScenario,
    y0: Point,
    seed: u64,
    path_id: u64,
    horizon: f64,
    ds: f64,
) -> Result<ControlledPathRecord> {
    let n = step_count(horizon, ds)?;
    let dif = Diffusion::new(js, ds);
    let mut stream = PathStream::new(seed, path_id, 0);
    let mut rec = ControlledPathRecord::new(seed, path_id, ds, y0);
    rec.events.push(EventKind::Diffuse);
    let mut y = y0;
    let (mut n0, mut hold, mut exit, mut target) = (0u64, 0u64, y0, y0);
    let begin_hold = |d: &StepDraws, step: usize| -> Result<(u64, Point)> {
        let steps = (d.exponential(HOLD_SLOT) / ds).ceil().max(1.0) as u64;
        Ok((steps, js.target(d, step)?))
    };
    if dif.start(y0)? {
        (hold, target) = begin_hold(&stream.step(0), 0)?;
    }
    for k in 1..=n {
        if hold > 0 {
            hold -= 1;
            let kind = if hold == 0 {
                y = target;
                EventKind::Jump
            } else {
                EventKind::Hold
            };
            rec.push_boundary(y, exit, None);
            rec.events.push(kind);
            continue;
        }
        let d = stream.step(n0 + 1);
        n0 += 1;
        let (next, dw, hit) = dif.step(y, &d)?;
        y = next;
        rec.push_interior(y, dw);
        rec.events.push(EventKind::Diffuse);
        if hit {
            exit = y;
            (hold, target) = begin_hold(&d, k)?;
        }
    }
    Ok(rec)
}

/// Constrained jump run on `t_k = k dt`: a state on the boundary is
/// replaced by a kernel sample at the next grid time. The local time
/// grows by the hold time drawn at the hit, at the hitting step, so
/// the record matches the time-changed controlled run.
pub fn simulate_jump_constrained(
    js: &JumpScenario,
    x0: Point,
    seed: u64,
    path_id: u64,
    horizon: f64,
    dt: f64,
) -> Result<PathRecord> {
    let n = step_count(horizon, dt)?;
    let dif = Diffusion::new(js, dt);
    let mut stream = PathStream::new(seed, path_id, 0);
    let mut rec = PathRecord::new(seed, path_id, dt, x0).with_capacity(n);
    rec.events.reserve(n + 1);
    rec.events.push(EventKind::Diffuse);
    let mut x = x0;
    let mut m = 0u64;
    let mut pending = None;
    if dif.start(x0)? {
        rec.flag[0] = true;
        pending = Some(js.target(&stream.step(0), 0)?);
    }
    for k in 1..=n {
        if let Some(p) = pending.take() {
            x = p;
            rec.push(x, 0.0, None, None, false, Point::zeros());
            rec.events.push(EventKind::Jump);
            continue;
        }
        let d = stream.step(m + 1);
        m += 1;
        let (next, dw, hit) = dif.step(x, &d)?;
        x = next;
        if hit {
            pending = Some(js.target(&d, k)?);
            let mass = (d.exponential(HOLD_SLOT) / dt).ceil().max(1.0) * dt;
            rec.push(x, mass, None, Some(x), true, dw);
        } else {
            rec.push(x, 0.0, None, None, false, dw);
        }
        rec.events.push(EventKind::Diffuse);
    }
    Ok(rec)
}

/// A completed boundary visit of a controlled jump record.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hold {
    /// Control time at which the hold began.
    pub start: f64,
    pub duration: f64,
}

/// Completed holds in a controlled jump record. A hold still running at
/// the horizon is left out, so holds that start late are biased short;
/// filter on `start` for an unbiased sample.
pub fn holds(cp: &ControlledPathRecord) -> Vec<Hold> {
    let mut out = Vec::new();
    let mut run = 0u64;
    for k in 1..cp.len() {
        if cp.n1[k] > cp.n1[k - 1] {
            run += 1;
            if cp.events.get(k) == Some(&EventKind::Jump) {
                let start = (k as u64 - run) as f64 * cp.ds;
                out.push(Hold { start, duration: run as f64 * cp.ds });
                run = 0;
            }
        }
    }
    out
}

/// Lengths of the completed holds in a controlled jump record.
pub fn hold_durations(cp: &ControlledPathRecord) -> Vec<f64> {
    holds(cp).into_iter().map(|h| h.duration).collect()
}

/// Region `{phi > 0}` for the exit-set check.
#[derive(Clone, Debug)]
pub struct SmoothRegion {
    pub phi: ScalarField,
}

/// Arclength of `dU ∩ dE0`, estimated on `samples` boundary points of
/// `E0` found along rays from the kernel centre (so `E0` must be star
/// shaped about it). Samples on `dU` that are consecutive form an arc;
/// any sampled arc fails. Isolated crossings are located by sign changes
/// of `phi` and reported with the angle between the two normals; a
/// tangential crossing is inconclusive.
pub fn check_exit_compatibility(js: &JumpScenario, u: &SmoothRegion, samples: usize) -> CheckReport {
    let tol = js.domain().tol;
    let subject = format!("dU = {{{} = 0}} against dE0", u.phi);
    let fail_eval = |e: String| CheckReport::new(ConditionId::JumpExit, subject.clone(), Status::Inconclusive).note(e);
    let c = js.kernel.center();
    let reach = js.domain().bbox.diameter();
    let mut pts = Vec::with_capacity(samples);
    for k in 0..samples {
        let a = std::f64::consts::TAU * k as f64 / samples as f64;
        let dir = Point::new(a.cos(), a.sin());
        match boundary_on_ray(js, c, dir, reach) {
            Some(p) => pts.push(p),
            None => return fail_eval(format!("no boundary point on the ray at angle {a}")),
        }
    }
    let mut phi = Vec::with_capacity(samples);
    for p in &pts {
        match u.phi.eval(*p) {
            Ok(v) => phi.push(v),
            Err(e) => return fail_eval(e.to_string()),
        }
    }
    let on = |k: usize| phi[k].abs() <= tol.boundary_tol;
    let mut arc = 0.0;
    let mut first_arc = None;
    for k in 0..samples {
        let j = (k + 1) % samples;
        if on(k) && on(j) {
            arc += (pts[j] - pts[k]).norm();
            first_arc.get_or_insert(pts[k]);
        }
    }
    let mut report = CheckReport::new(ConditionId::JumpExit, subject.clone(), Status::Pass)
        .tol("samples", samples as f64)
        .tol("boundary_tol", tol.boundary_tol)
        .tol("angle_tol", tol.angle_tol);
    if let Some(p) = first_arc {
        report.status = Status::Fail;
        return report.witness(Witness::at("arc of dU on dE0", p).value("arclength", arc));
    }
    for k in 0..samples {
        let j = (k + 1) % samples;
        if (phi[k] > 0.0) == (phi[j] > 0.0) && !on(k) {
            continue;
        }
        let p = if on(k) { pts[k] } else { pts[k] + phi[k] / (phi[k] - phi[j]) * (pts[j] - pts[k]) };
        let (ga, gb) = match (js.domain().pieces[0].grad_at(p), u.phi.gradient().eval(p)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => continue,
        };
        let sin = (ga.x * gb.y - ga.y * gb.x).abs() / (ga.norm() * gb.norm());
        let w = Witness::at("crossing", p).value("sin_angle", sin);
        if !(sin > tol.angle_tol) {
            report.status = report.status.worst(Status::Inconclusive);
            report = report.witness(w).note("tangential crossing");
        } else {
            report = report.witness(w);
        }
    }
    report
}

fn boundary_on_ray(js: &JumpScenario, c: Point, dir: Point, reach: f64) -> Option<Point> {
    let f = |t: f64| js.psi(c + t * dir).ok();
    let n = 256;
    let h = reach / n as f64;
    let mut lo = 0.0;
    for i in 1..=n {
        let t = i as f64 * h;
        if f(t)? <= 0.0 {
            let mut hi = t;
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if f(mid)? > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Some(c + 0.5 * (lo + hi) * dir);
        }
        lo = t;
    }
    None
}
