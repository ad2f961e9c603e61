//! Gaussian initial data for the two reference experiments.

use crate::error::Result;
use crate::fem::{nodal_interpolate, FeFunction};
use crate::mesh::{Mesh, Point2};

/// `amplitude * exp(-rate * |x - center|^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian {
    pub amplitude: f64,
    pub rate: f64,
    pub center: Point2,
}

impl Gaussian {
    pub fn eval(&self, p: Point2) -> f64 {
        let (dx, dy) = (p.x - self.center.x, p.y - self.center.y);
        self.amplitude * (-self.rate * (dx * dx + dy * dy)).exp()
    }

    pub fn interpolate(&self, mesh: &Mesh) -> Result<FeFunction> {
        nodal_interpolate(|p| self.eval(p), mesh)
    }
}

/// Bounded-solution data: cells centred at the origin, chemoattractant
/// centred at the midpoint of the top edge.
pub fn nonblowup_data(c0: f64) -> (Gaussian, Gaussian) {
    (
        Gaussian {
            amplitude: c0,
            rate: c0,
            center: Point2::new(0.0, 0.0),
        },
        Gaussian {
            amplitude: c0,
            rate: c0,
            center: Point2::new(0.0, 0.5),
        },
    )
}

/// Concentrated data expected to blow up in finite time.
pub fn blowup_data(cu: f64, cv: f64) -> (Gaussian, Gaussian) {
    (
        Gaussian {
            amplitude: cu,
            rate: 0.1 * cu,
            center: Point2::new(0.0, 0.0),
        },
        Gaussian {
            amplitude: cv,
            rate: 0.1 * cv,
            center: Point2::new(0.0, 0.0),
        },
    )
}

/// Nodal interpolants of a `(u0, v0)` pair.
pub fn interpolate_pair(
    mesh: &Mesh,
    data: (Gaussian, Gaussian),
) -> Result<(FeFunction, FeFunction)> {
    Ok((data.0.interpolate(mesh)?, data.1.interpolate(mesh)?))
}
