//! Exact signed distance fields for analytic primitives on `[-1, 1]^3`,
//! centered at the origin. Negative inside, positive outside.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnalyticSdf {
    Sphere { radius: f64 },
    /// Axis-aligned box given by half-extents.
    Box { half_extents: [f64; 3] },
    /// Torus around the y axis: circle of radius `major` in the xz plane,
    /// tube radius `minor`.
    Torus { major: f64, minor: f64 },
}

impl AnalyticSdf {
    pub fn sphere(radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::invalid(format!("sphere radius must be positive, got {radius}")));
        }
        Ok(AnalyticSdf::Sphere { radius })
    }

    pub fn cuboid(half_extents: [f64; 3]) -> Result<Self> {
        if half_extents.iter().any(|&h| !(h > 0.0)) {
            return Err(Error::invalid(format!(
                "box half-extents must be positive, got {half_extents:?}"
            )));
        }
        Ok(AnalyticSdf::Box { half_extents })
    }

    pub fn torus(major: f64, minor: f64) -> Result<Self> {
        if !(major > 0.0 && minor > 0.0 && minor < major) {
            return Err(Error::invalid(format!(
                "torus needs 0 < minor < major, got major {major}, minor {minor}"
            )));
        }
        Ok(AnalyticSdf::Torus { major, minor })
    }

    /// Exact signed distance from `p` to the surface.
    pub fn eval(&self, p: [f64; 3]) -> f64 {
        let [x, y, z] = p;
        match *self {
            AnalyticSdf::Sphere { radius } => (x * x + y * y + z * z).sqrt() - radius,
            AnalyticSdf::Box { half_extents } => {
                let q = [
                    x.abs() - half_extents[0],
                    y.abs() - half_extents[1],
                    z.abs() - half_extents[2],
                ];
                let outside = (q[0].max(0.0).powi(2) + q[1].max(0.0).powi(2) + q[2].max(0.0).powi(2))
                    .sqrt();
                let inside = q[0].max(q[1]).max(q[2]).min(0.0);
                outside + inside
            }
            AnalyticSdf::Torus { major, minor } => {
                let ring = (x * x + z * z).sqrt() - major;
                (ring * ring + y * y).sqrt() - minor
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AnalyticSdf::Sphere { .. } => "sphere",
            AnalyticSdf::Box { .. } => "box",
            AnalyticSdf::Torus { .. } => "torus",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_distances() {
        let s = AnalyticSdf::sphere(0.5).unwrap();
        assert!((s.eval([0.0, 0.0, 0.0]) + 0.5).abs() < 1e-15);
        assert!(s.eval([0.5, 0.0, 0.0]).abs() < 1e-15);
        assert!((s.eval([1.0, 0.0, 0.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn box_inside_and_outside() {
        let b = AnalyticSdf::cuboid([0.3, 0.2, 0.1]).unwrap();
        assert!((b.eval([0.0, 0.0, 0.0]) + 0.1).abs() < 1e-15); // nearest face is z
        assert!((b.eval([0.5, 0.0, 0.0]) - 0.2).abs() < 1e-15);
        // corner distance is Euclidean
        let d = b.eval([0.4, 0.3, 0.2]);
        let expected = (0.1f64 * 0.1 + 0.1 * 0.1 + 0.1 * 0.1).sqrt();
        assert!((d - expected).abs() < 1e-15);
    }

    #[test]
    fn torus_distances() {
        let t = AnalyticSdf::torus(0.4, 0.15).unwrap();
        assert!(t.eval([0.4, 0.15, 0.0]).abs() < 1e-15); // top of the tube
        assert!((t.eval([0.4, 0.0, 0.0]) + 0.15).abs() < 1e-15); // tube center
        assert!((t.eval([0.0, 0.0, 0.0]) - 0.25).abs() < 1e-15); // hole center
    }

    #[test]
    fn validation() {
        assert!(AnalyticSdf::sphere(-1.0).is_err());
        assert!(AnalyticSdf::cuboid([0.1, 0.0, 0.1]).is_err());
        assert!(AnalyticSdf::torus(0.1, 0.2).is_err());
    }
}
