//! Coefficient conditions: Lipschitz estimates for `b`, `sigma` and
//! non-degeneracy of `sigma` at corners.

use super::directions::lipschitz;
use super::report::{CheckReport, ConditionId, Status, Witness};
use crate::geometry::{Domain, Point};
use crate::model::Coefficients;

const GRID: usize = 24;

fn check_lipschitz(domain: &Domain, coeffs: &Coefficients) -> CheckReport {
    let mut b_samples = Vec::new();
    let mut s_samples = Vec::new();
    let mut r = CheckReport::new(ConditionId::Ai, "coefficients", Status::Pass);
    for x in domain.bbox.grid(GRID) {
        match (coeffs.drift(x), coeffs.dispersion(x)) {
            (Ok(b), Ok(s)) => {
                b_samples.push((x, b));
                s_samples.push((x, s));
            }
            (Err(e), _) | (_, Err(e)) => {
                r.status = Status::Fail;
                r = r.witness(Witness::at("coefficient evaluation failed", x)).note(e.to_string());
            }
        }
    }
    let (lb, ls) = (lipschitz(&b_samples), lipschitz(&s_samples));
    let centre = 0.5 * (domain.bbox.lo + domain.bbox.hi);
    r.witness(Witness::at("difference quotients", centre).value("lipschitz_b", lb).value("lipschitz_sigma", ls))
        .note(format!("Lipschitz constants estimated on a {GRID}x{GRID} grid over the bounding box, not certified"))
}

fn check_nondegenerate(domain: &Domain, coeffs: &Coefficients) -> CheckReport {
    let floor = domain.tol.det_floor;
    let mut r = CheckReport::new(ConditionId::Aii, "coefficients", Status::Pass).tol("det_floor", floor);
    for c in &domain.corners {
        let x: Point = c.point;
        let det = coeffs.dispersion(x).map(|s| s.determinant()).unwrap_or(f64::NAN);
        let ok = det.abs() > floor;
        if !ok {
            r.status = Status::Fail;
        }
        r = r.witness(Witness::at(if ok { "det sigma" } else { "singular sigma" }, x).value("det_sigma", det));
    }
    if domain.corners.is_empty() {
        r = r.note("no declared corners");
    }
    r
}

pub fn check_coefficients(domain: &Domain, coeffs: &Coefficients) -> Vec<CheckReport> {
    vec![check_lipschitz(domain, coeffs), check_nondegenerate(domain, coeffs)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{MatrixField, VectorField};
    use crate::geometry::fixtures::half_disc;
    use crate::geometry::{BoundingBox, DeclaredCorner};
    use crate::tolerances::Tolerances;
    use std::f64::consts::PI;

    fn with_sigma(rows: [[&str; 2]; 2]) -> Coefficients {
        Coefficients::new(VectorField::parse("0", "0").unwrap(), MatrixField::parse(rows).unwrap())
    }

    #[test]
    fn identity_and_shear_pass() {
        let d = half_disc(PI / 4.0);
        for c in [Coefficients::brownian(), with_sigma([["1", "0.5"], ["0", "1"]])] {
            let r = check_coefficients(&d, &c);
            assert!(r.iter().all(|r| r.passed()), "{r:#?}");
            assert!(r[1].witnesses.iter().all(|w| (w.values["det_sigma"] - 1.0).abs() < 1e-15));
        }
    }

    #[test]
    fn singular_at_corner_fails() {
        let d = Domain::new(
            vec![
                crate::geometry::fixtures::piece("x1", "1", "0"),
                crate::geometry::fixtures::piece("x2", "0", "1"),
            ],
            vec![DeclaredCorner { point: Point::new(0.0, 0.0), pair: (0, 1) }],
            BoundingBox::new(Point::new(-1.0, -1.0), Point::new(1.0, 1.0)),
            Tolerances::default(),
        )
        .unwrap();
        let r = check_coefficients(&d, &with_sigma([["x1", "0"], ["0", "1"]]));
        assert_eq!(r[0].status, Status::Pass);
        assert!((r[0].witnesses[0].values["lipschitz_sigma"] - 1.0).abs() < 1e-9);
        assert_eq!(r[1].status, Status::Fail);
        assert!(r[1].is_well_formed());
    }

    #[test]
    fn evaluation_error_fails() {
        let d = half_disc(PI / 4.0);
        let c = Coefficients::new(VectorField::parse("sqrt(x1 - 10)", "0").unwrap(), MatrixField::identity());
        assert_eq!(check_coefficients(&d, &c)[0].status, Status::Fail);
    }
}
