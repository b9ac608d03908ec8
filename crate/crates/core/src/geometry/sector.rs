use std::f64::consts::{PI, TAU};

use nalgebra::Vector2;
use serde::Serialize;

/// Wrap an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(TAU);
    if r > PI {
        r -= TAU;
    }
    r
}

pub fn angle_of(u: Vector2<f64>) -> f64 {
    u.y.atan2(u.x)
}

pub fn unit_at(angle: f64) -> Vector2<f64> {
    Vector2::new(angle.cos(), angle.sin())
}

/// Closed convex cone in the plane, stored as the angular interval
/// `[angle_lo, angle_lo + width]` with `width` in `[0, pi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Sector {
    pub angle_lo: f64,
    pub angle_hi: f64,
}

impl Sector {
    /// `angle_lo` is wrapped into `(-pi, pi]`; `angle_hi` keeps the width.
    pub fn new(angle_lo: f64, width: f64) -> Self {
        assert!((0.0..=PI + 1e-12).contains(&width), "sector width {width} outside [0, pi]");
        let lo = wrap_angle(angle_lo);
        Sector { angle_lo: lo, angle_hi: lo + width.min(PI) }
    }

    pub fn ray(u: Vector2<f64>) -> Self {
        Self::new(angle_of(u), 0.0)
    }

    /// Half-plane `{u : u . c >= 0}`.
    pub fn half_plane(center: Vector2<f64>) -> Self {
        Self::new(angle_of(center) - PI / 2.0, PI)
    }

    /// Cone generated by two vectors. The boolean is true when they are
    /// anti-parallel within `angle_tol`, in which case the width-pi sector
    /// counter-clockwise from `u` is returned.
    pub fn spanned(u: Vector2<f64>, v: Vector2<f64>, angle_tol: f64) -> (Self, bool) {
        let a = angle_of(u);
        let d = wrap_angle(angle_of(v) - a);
        if PI - d.abs() <= angle_tol {
            (Self::new(a, PI), true)
        } else if d >= 0.0 {
            (Self::new(a, d), false)
        } else {
            (Self::new(a + d, -d), false)
        }
    }

    pub fn width(&self) -> f64 {
        self.angle_hi - self.angle_lo
    }

    pub fn is_degenerate_ray(&self) -> bool {
        self.width() == 0.0
    }

    pub fn mid_angle(&self) -> f64 {
        0.5 * (self.angle_lo + self.angle_hi)
    }

    pub fn mid_direction(&self) -> Vector2<f64> {
        unit_at(self.mid_angle())
    }

    pub fn lo_direction(&self) -> Vector2<f64> {
        unit_at(self.angle_lo)
    }

    pub fn hi_direction(&self) -> Vector2<f64> {
        unit_at(self.angle_hi)
    }

    /// Membership of a nonzero vector, exact up to `angle_tol`. The zero
    /// vector belongs to every cone.
    pub fn contains(&self, u: Vector2<f64>, angle_tol: f64) -> bool {
        if u.x == 0.0 && u.y == 0.0 {
            return true;
        }
        let rel = (angle_of(u) - self.angle_lo).rem_euclid(TAU);
        rel <= self.width() + angle_tol || rel >= TAU - angle_tol
    }
}
