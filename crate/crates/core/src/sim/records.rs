use std::io::{self, Write};

use serde::Serialize;

use crate::geometry::Point;

pub const CSV_HEADER: &str = "t,x1,x2,lambda,gamma1,gamma2,boundary_flag";

/// What happened during a step of a jump-boundary run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Diffuse,
    Hold,
    Jump,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Diffuse => "diffuse",
            EventKind::Hold => "hold",
            EventKind::Jump => "jump",
        }
    }
}

/// A path on the uniform grid `t_k = k dt`. Index 0 is the initial state;
/// per-step fields at index `k` describe the step `(t_{k-1}, t_k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PathRecord {
    pub seed: u64,
    pub path_id: u64,
    pub dt: f64,
    pub x: Vec<Point>,
    pub lambda: Vec<f64>,
    /// Unit push direction at boundary steps.
    pub gamma: Vec<Option<Point>>,
    /// Boundary point where the push was applied; `gamma ∈ G(contact)`.
    pub contact: Vec<Option<Point>>,
    /// Boundary contact during the step, decided geometrically.
    pub flag: Vec<bool>,
    pub dw: Vec<Point>,
    /// Filled only by jump-boundary runs.
    pub events: Vec<EventKind>,
}

impl PathRecord {
    pub fn new(seed: u64, path_id: u64, dt: f64, x0: Point) -> Self {
        PathRecord {
            seed,
            path_id,
            dt,
            x: vec![x0],
            lambda: vec![0.0],
            gamma: vec![None],
            contact: vec![None],
            flag: vec![false],
            dw: vec![Point::zeros()],
            events: Vec::new(),
        }
    }

    pub(crate) fn with_capacity(mut self, n: usize) -> Self {
        for v in [&mut self.x, &mut self.dw] {
            v.reserve(n);
        }
        self.lambda.reserve(n);
        self.gamma.reserve(n);
        self.contact.reserve(n);
        self.flag.reserve(n);
        self
    }

    /// Number of grid points, initial state included.
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn steps(&self) -> usize {
        self.x.len() - 1
    }

    #[inline]
    pub fn t(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn terminal(&self) -> Point {
        *self.x.last().expect("record has an initial state")
    }

    pub(crate) fn push(&mut self, x: Point, dlambda: f64, gamma: Option<Point>, contact: Option<Point>, flag: bool, dw: Point) {
        let l = *self.lambda.last().expect("record has an initial state");
        self.x.push(x);
        self.lambda.push(l + dlambda);
        self.gamma.push(gamma);
        self.contact.push(contact);
        self.flag.push(flag);
        self.dw.push(dw);
    }

    /// `sum_k dlambda_k` over steps without boundary contact. Zero on every
    /// well-formed record.
    pub fn interior_local_time(&self) -> f64 {
        (1..self.len()).filter(|&k| !self.flag[k]).map(|k| self.lambda[k] - self.lambda[k - 1]).sum()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> io::Result<()> {
        self.write_csv_every(w, 1)
    }

    /// CSV keeping every `every`-th row plus the last one.
    pub fn write_csv_every<W: Write>(&self, mut w: W, every: usize) -> io::Result<()> {
        let every = every.max(1);
        let jumps = !self.events.is_empty();
        write!(w, "{CSV_HEADER}")?;
        if jumps {
            write!(w, ",kind")?;
        }
        writeln!(w)?;
        for k in (0..self.len()).filter(|&k| k % every == 0 || k + 1 == self.len()) {
            let g = self.gamma[k].unwrap_or_else(Point::zeros);
            write!(
                w,
                "{},{},{},{},{},{},{}",
                self.t(k),
                self.x[k].x,
                self.x[k].y,
                self.lambda[k],
                g.x,
                g.y,
                u8::from(self.flag[k])
            )?;
            if jumps {
                write!(w, ",{}", self.events[k].as_str())?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is ascii")
    }
}

/// Boundary control mass `mass` applied at `point` in `direction` during
/// step `step`. Holds of the jump example carry no direction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Atom {
    pub step: usize,
    pub point: Point,
    pub direction: Option<Point>,
    pub mass: f64,
}

/// A path of the controlled process on the control clock `s_k = k ds`.
/// Clocks are kept as integer tick counts so that `lambda0 + lambda1 = s`
/// holds exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlledPathRecord {
    pub seed: u64,
    pub path_id: u64,
    pub ds: f64,
    pub y: Vec<Point>,
    pub n0: Vec<u64>,
    pub n1: Vec<u64>,
    pub dw: Vec<Point>,
    pub atoms: Vec<Atom>,
    pub events: Vec<EventKind>,
}

impl ControlledPathRecord {
    pub fn new(seed: u64, path_id: u64, ds: f64, y0: Point) -> Self {
        ControlledPathRecord {
            seed,
            path_id,
            ds,
            y: vec![y0],
            n0: vec![0],
            n1: vec![0],
            dw: vec![Point::zeros()],
            atoms: Vec::new(),
            events: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    #[inline]
    pub fn s(&self, k: usize) -> f64 {
        k as f64 * self.ds
    }

    #[inline]
    pub fn lambda0(&self, k: usize) -> f64 {
        self.n0[k] as f64 * self.ds
    }

    #[inline]
    pub fn lambda1(&self, k: usize) -> f64 {
        self.n1[k] as f64 * self.ds
    }

    pub(crate) fn push_interior(&mut self, y: Point, dw: Point) {
        let k = self.len() - 1;
        self.y.push(y);
        self.n0.push(self.n0[k] + 1);
        self.n1.push(self.n1[k]);
        self.dw.push(dw);
    }

    pub(crate) fn push_boundary(&mut self, y: Point, from: Point, direction: Option<Point>) {
        let k = self.len() - 1;
        self.y.push(y);
        self.n0.push(self.n0[k]);
        self.n1.push(self.n1[k] + 1);
        self.dw.push(Point::zeros());
        self.atoms.push(Atom { step: k + 1, point: from, direction, mass: self.ds });
    }
}
