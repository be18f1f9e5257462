//! Synthetic ground-truth stiffness fields: mixtures of Gaussian inclusions
//! over a soft background, evaluated on a grid.

use alloc::vec::Vec;
use core::fmt;


use crate::grid::{GridSpec, ScalarGrid, Vec2};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FieldError {
    /// Component covariance is not symmetric positive-definite.
    NotSpd,
    /// Component amplitude or background is not positive.
    NonPositive,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldError::NotSpd => write!(f, "covariance must be symmetric positive-definite"),
            FieldError::NonPositive => write!(f, "background and amplitudes must be positive"),
        }
    }
}

impl core::error::Error for FieldError {}

/// One stiff inclusion: a Gaussian bump added to the background.
///
/// `covariance` is the 2x2 symmetric positive-definite shape matrix in mm^2;
/// `amplitude` is the added stiffness at the center in kPa.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianComponent {
    pub center: Vec2,
    pub covariance: [[f64; 2]; 2],
    pub amplitude: f64,
}

impl GaussianComponent {
    /// Isotropic component with variance `sigma2` mm^2 on both axes.
    pub fn isotropic(center: Vec2, sigma2: f64, amplitude: f64) -> Self {
        GaussianComponent { center, covariance: [[sigma2, 0.0], [0.0, sigma2]], amplitude }
    }

    pub fn validate(&self) -> Result<(), FieldError> {
        let c = &self.covariance;
        let det = c[0][0] * c[1][1] - c[0][1] * c[1][0];
        if c[0][1] != c[1][0] || c[0][0] <= 0.0 || det <= 0.0 {
            return Err(FieldError::NotSpd);
        }
        if self.amplitude <= 0.0 {
            return Err(FieldError::NonPositive);
        }
        Ok(())
    }

    /// Stiffness contribution at `p`: amplitude * exp(-1/2 (p-c)^T S^-1 (p-c)).
    pub fn eval(&self, p: Vec2) -> f64 {
        let c = &self.covariance;
        let det = c[0][0] * c[1][1] - c[0][1] * c[1][0];
        let d = p - self.center;
        // Quadratic form through the explicit 2x2 inverse.
        let q = (c[1][1] * d.x * d.x - 2.0 * c[0][1] * d.x * d.y + c[0][0] * d.y * d.y) / det;
        self.amplitude * (-0.5 * q).exp()
    }
}

/// Ground-truth description: soft background (kPa) plus stiff inclusions.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruthField {
    pub background: f64,
    pub components: Vec<GaussianComponent>,
    pub spec: GridSpec,
}

impl GroundTruthField {
    pub fn new(
        background: f64,
        components: Vec<GaussianComponent>,
        spec: GridSpec,
    ) -> Result<Self, FieldError> {
        if background <= 0.0 {
            return Err(FieldError::NonPositive);
        }
        for c in &components {
            c.validate()?;
        }
        Ok(GroundTruthField { background, components, spec })
    }

    /// Evaluate the field at an arbitrary point (kPa).
    pub fn eval(&self, p: Vec2) -> f64 {
        self.background + self.components.iter().map(|c| c.eval(p)).sum::<f64>()
    }
}

/// Evaluate a Gaussian-mixture stiffness field at every cell center.
pub fn make_ground_truth(
    background: f64,
    components: &[GaussianComponent],
    spec: GridSpec,
) -> Result<ScalarGrid, FieldError> {
    if background <= 0.0 {
        return Err(FieldError::NonPositive);
    }
    for c in components {
        c.validate()?;
    }
    Ok(ScalarGrid::from_fn(spec, |p| {
        background + components.iter().map(|c| c.eval(p)).sum::<f64>()
    }))
}
