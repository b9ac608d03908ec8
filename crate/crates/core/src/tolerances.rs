//! Numerical tolerances shared by geometry, checks and simulation.

use serde::{Deserialize, Serialize};

/// Every knob the checkers and steppers use, with documented defaults.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// `|n^i + n^j|` below this makes a corner a cusp.
    pub cusp_tol: f64,
    /// Declared corners must satisfy `|psi| <= corner_tol` for both pieces.
    pub corner_tol: f64,
    /// `|psi| <= boundary_tol` counts as on the boundary.
    pub boundary_tol: f64,
    /// Slack for sector membership, in radians.
    pub angle_tol: f64,
    /// Minimum admissible `|grad psi|` on a piece boundary.
    pub grad_floor: f64,
    /// The second-order cusp test passes when the quadratic form exceeds this.
    pub hessian_tol: f64,
    /// G1 passes when `min g.n` exceeds this.
    pub g_dot_n_floor: f64,
    /// Minimum `|det sigma|` at corners.
    pub det_floor: f64,
    /// Finite cap for sampled limsup estimates.
    pub limsup_cap: f64,
    /// Relative spread of the last extrapolants for a converged cusp limit.
    pub cusp_limit_spread: f64,
    /// Tie tolerance in polygon vertex enumeration.
    pub vertex_tol: f64,
    /// Allowed negative slack of `psi` on simulated states.
    pub state_slack: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            cusp_tol: 1e-8,
            corner_tol: 1e-9,
            boundary_tol: 1e-10,
            angle_tol: 1e-9,
            grad_floor: 1e-6,
            hessian_tol: 1e-9,
            g_dot_n_floor: 1e-6,
            det_floor: 1e-9,
            limsup_cap: 1e6,
            cusp_limit_spread: 1e-3,
            vertex_tol: 1e-10,
            state_slack: 1e-9,
        }
    }
}

impl Tolerances {
    /// Named preset: `default`, `strict` (tighter by 100x) or `loose`
    /// (looser by 100x).
    pub fn profile(name: &str) -> Option<Self> {
        let d = Self::default();
        let scale = |t: &Self, k: f64| Tolerances {
            cusp_tol: t.cusp_tol * k,
            corner_tol: t.corner_tol * k,
            boundary_tol: t.boundary_tol * k,
            angle_tol: t.angle_tol * k,
            grad_floor: t.grad_floor * k,
            hessian_tol: t.hessian_tol * k,
            g_dot_n_floor: t.g_dot_n_floor * k,
            det_floor: t.det_floor * k,
            cusp_limit_spread: t.cusp_limit_spread * k,
            vertex_tol: t.vertex_tol * k,
            state_slack: t.state_slack * k,
            ..*t
        };
        match name {
            "default" => Some(d),
            "strict" => Some(scale(&d, 0.01)),
            "loose" => Some(scale(&d, 100.0)),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets() {
        assert_eq!(Tolerances::profile("default"), Some(Tolerances::default()));
        let s = Tolerances::profile("strict").unwrap();
        assert!(s.cusp_tol < Tolerances::default().cusp_tol);
        assert_eq!(s.limsup_cap, 1e6);
        assert!(Tolerances::profile("bogus").is_none());
    }

    #[test]
    fn partial_override_keeps_defaults() {
        let t: Tolerances = toml::from_str("angle_tol = 1e-6").unwrap();
        assert_eq!(t.angle_tol, 1e-6);
        assert_eq!(t.cusp_tol, 1e-8);
    }
}
