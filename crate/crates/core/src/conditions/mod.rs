//! Evidence-bearing checks of the well-posedness conditions on a domain,
//! its reflection fields and the diffusion coefficients.

mod coefficients;
mod directions;
mod domain_checks;
mod regularity;
mod report;

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{CornerKind, Domain, GeometryError, Point};
use crate::model::Coefficients;

pub use coefficients::check_coefficients;
pub use directions::{check_g1, check_g2, check_g2_boundary, feasible_direction};
pub use domain_checks::{check_corners_declared, check_minimality};
pub use regularity::{check_corner_regularity, check_cusp_hessian};
pub use report::{fmt_point, CheckReport, ConditionId, Status, Witness};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConditionError {
    #[error("({}, {}) is not a declared corner", .0.x, .0.y)]
    NotACorner(Point),
    #[error("corner ({}, {}) is not a cusp point", .0.x, .0.y)]
    NotACusp(Point),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

type Job<'a> = Box<dyn Fn() -> Vec<CheckReport> + Send + Sync + 'a>;

/// Run every check and return the reports sorted by `(condition, subject)`.
pub fn run_all(domain: &Domain, coeffs: &Coefficients) -> Vec<CheckReport> {
    let mut jobs: Vec<Job> = vec![
        Box::new(|| vec![check_minimality(domain)]),
        Box::new(|| vec![check_corners_declared(domain)]),
        Box::new(|| vec![check_g1(domain)]),
        Box::new(|| vec![check_g2_boundary(domain)]),
        Box::new(|| check_coefficients(domain, coeffs)),
    ];
    for c in &domain.corners {
        let x0 = c.point;
        jobs.push(Box::new(move || vec![check_corner_regularity(domain, x0)]));
        jobs.push(Box::new(move || vec![check_g2(domain, x0)]));
        let is_cusp = domain.classify_corner(x0).map(|k| k.kind == CornerKind::CuspPoint);
        if !matches!(is_cusp, Ok(false)) {
            // cusps and corners whose classification failed both get the Hessian test
            jobs.push(Box::new(move || check_cusp_hessian(domain, x0).into_iter().collect()));
        }
    }
    let mut reports: Vec<CheckReport> = jobs.par_iter().flat_map_iter(|j| j()).collect();
    reports.sort_by_key(|r| r.sort_key());
    reports
}

/// Worst status over a set of reports; `Pass` when empty.
pub fn overall(reports: &[CheckReport]) -> Status {
    reports.iter().fold(Status::Pass, |s, r| s.worst(r.status))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::fixtures::{abs_cusp, half_disc};
    use std::f64::consts::PI;

    #[test]
    fn half_disc_passes_below_tangential_angle() {
        for theta in [PI / 4.0, PI / 3.0, 0.45 * PI] {
            let reports = run_all(&half_disc(theta), &Coefficients::brownian());
            assert_eq!(overall(&reports), Status::Pass, "{reports:#?}");
            assert!(reports.windows(2).all(|w| w[0].sort_key() <= w[1].sort_key()));
        }
        let reports = run_all(&half_disc(PI / 2.0), &Coefficients::brownian());
        let failed: Vec<ConditionId> = reports.iter().filter(|r| !r.passed()).map(|r| r.condition_id).collect();
        assert!(failed.contains(&ConditionId::Gi), "{failed:?}");
        assert!(reports.iter().all(CheckReport::is_well_formed));
    }

    #[test]
    fn cusp_domain_gets_hessian_report() {
        let reports = run_all(&abs_cusp(), &Coefficients::brownian());
        assert!(reports.iter().any(|r| r.condition_id == ConditionId::C2Cusp));
        assert!(reports.iter().all(CheckReport::is_well_formed));
    }

    #[test]
    fn reports_are_deterministic() {
        let d = half_disc(PI / 3.0);
        let a = serde_json::to_string(&run_all(&d, &Coefficients::brownian())).unwrap();
        let b = serde_json::to_string(&run_all(&d, &Coefficients::brownian())).unwrap();
        assert_eq!(a, b);
    }
}
