//! Diffusion coefficients paired with a domain.

use nalgebra::{Matrix2, Vector2};

use crate::expr::{EvalError, MatrixField, VectorField};
use crate::geometry::Domain;

/// Drift `b` and dispersion `sigma`.
#[derive(Clone, Debug)]
pub struct Coefficients {
    pub b: VectorField,
    pub sigma: MatrixField,
}

impl Coefficients {
    pub fn new(b: VectorField, sigma: MatrixField) -> Self {
        Coefficients { b, sigma }
    }

    /// Standard Brownian motion: `b = 0`, `sigma = I`.
    pub fn brownian() -> Self {
        Coefficients { b: VectorField::constant(Vector2::zeros()), sigma: MatrixField::identity() }
    }

    pub fn drift(&self, x: Vector2<f64>) -> Result<Vector2<f64>, EvalError> {
        self.b.eval(x)
    }

    pub fn dispersion(&self, x: Vector2<f64>) -> Result<Matrix2<f64>, EvalError> {
        self.sigma.eval(x)
    }
}

/// Domain plus coefficients: everything a stepper needs.
#[derive(Clone, Debug)]
pub struct Model {
    pub domain: Domain,
    pub coeffs: Coefficients,
}

impl Model {
    pub fn new(domain: Domain, coeffs: Coefficients) -> Self {
        Model { domain, coeffs }
    }
}
