//! Reflected diffusion paths: the direct Euler scheme, the controlled
//! construction with its time change, stopping, pasting and localization.

mod controlled;
mod direct;
mod localized;
mod records;
mod stepper;
mod stop;
mod time_change;

use thiserror::Error;

use crate::geometry::{GeometryError, Point};

pub use controlled::{controlled_terminal, simulate_controlled};
pub use direct::{direct_terminal, euler_reflect_step, simulate_path};
pub use localized::{localized_simulate, localized_terminal, Cover, Localized, Segment};
pub use records::{Atom, ControlledPathRecord, EventKind, PathRecord, CSV_HEADER};
pub use stepper::{Scheme, SimOptions, Step, Stepper};
pub use stop::{exit_index, paste, stop_at_exit, Ball, Region, Stoppable, StoppedPath};
pub use time_change::{time_change, AtomAggregation};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("pushback failed at step {step} from ({}, {}): {reason}", .point.x, .point.y)]
    ProjectionFailure { step: usize, point: Point, reason: String },
    #[error("start point ({}, {}) is outside the closure of the domain", .0.x, .0.y)]
    StartOutside(Point),
    #[error("interior clock stalled at {reached} before reaching {wanted}")]
    ClockStalled { reached: f64, wanted: f64, record: Box<PathRecord> },
    #[error("seam mismatch: continuation starts {gap:e} away from the exit state")]
    SeamMismatch { gap: f64 },
    #[error("state ({}, {}) at step {step} lies in no cover element", .point.x, .point.y)]
    CoverGap { step: usize, point: Point },
    #[error("invalid cover: {0}")]
    InvalidCover(String),
    #[error("jump target ({}, {}) at step {step} is outside the domain", .point.x, .point.y)]
    KernelEscape { step: usize, point: Point },
    #[error("invalid run parameters: {0}")]
    InvalidRun(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

pub type Result<T> = std::result::Result<T, SimError>;

/// Number of grid steps covering `[0, horizon]`.
pub fn step_count(horizon: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) || !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(SimError::InvalidRun(format!("need dt > 0 and horizon >= 0, got dt = {dt}, horizon = {horizon}")));
    }
    let q = horizon / dt;
    let n = (q - 1e-9 * q.max(1.0)).ceil().max(0.0);
    Ok(n as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_counts() {
        assert_eq!(step_count(1.0, 1e-3).unwrap(), 1000);
        assert_eq!(step_count(1.0, 0.3).unwrap(), 4);
        assert_eq!(step_count(0.0, 0.1).unwrap(), 0);
        assert!(step_count(1.0, 0.0).is_err());
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use crate::geometry::{BoundingBox, DeclaredCorner, Domain, DomainPiece, Point};
    use crate::expr::{MatrixField, ScalarField, VectorField};
    use crate::model::{Coefficients, Model};
    use crate::tolerances::Tolerances;

    fn piece(psi: &str, g: [f64; 2]) -> DomainPiece {
        DomainPiece::new(psi, ScalarField::parse(psi).unwrap(), VectorField::constant(Point::new(g[0], g[1])))
    }

    /// `{x2 > 0}` with normal reflection and standard Brownian motion.
    pub fn half_plane() -> Model {
        let d = Domain::new(
            vec![piece("x2", [0.0, 1.0])],
            vec![],
            BoundingBox::new(Point::new(-10.0, -1.0), Point::new(10.0, 10.0)),
            Tolerances::default(),
        )
        .unwrap();
        Model::new(d, Coefficients::brownian())
    }

    /// Quadrant `{x1 > 0, x2 > 0}` with constant reflection directions.
    pub fn wedge(g1: [f64; 2], g2: [f64; 2]) -> Model {
        let d = Domain::new(
            vec![piece("x1", g1), piece("x2", g2)],
            vec![DeclaredCorner { point: Point::zeros(), pair: (0, 1) }],
            BoundingBox::new(Point::new(-1.0, -1.0), Point::new(10.0, 10.0)),
            Tolerances::default(),
        )
        .unwrap();
        Model::new(d, Coefficients::brownian())
    }

    pub fn half_disc(theta: f64) -> Model {
        Model::new(crate::geometry::fixtures::half_disc(theta), Coefficients::brownian())
    }

    pub fn still(m: Model) -> Model {
        let c = Coefficients::new(VectorField::constant(Point::zeros()), MatrixField::constant(nalgebra::Matrix2::zeros()));
        Model::new(m.domain, c)
    }

    pub fn with_drift(m: Model, b: [f64; 2], sigma: f64) -> Model {
        let c = Coefficients::new(
            VectorField::constant(Point::new(b[0], b[1])),
            MatrixField::constant(nalgebra::Matrix2::identity() * sigma),
        );
        Model::new(m.domain, c)
    }
}
