use serde::{Deserialize, Serialize};

use crate::brdf::Vec3;
use crate::error::{Error, Result};
use crate::grid::Rgb;

/// Pinhole camera at the origin looking down −z with +y up. `fov_deg` is
/// the vertical field of view.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub fov_deg: f64,
    pub width: usize,
    pub height: usize,
}

impl Default for Camera {
    fn default() -> Self {
        Self {
            fov_deg: 40.0,
            width: 512,
            height: 512,
        }
    }
}

impl Camera {
    pub fn new(fov_deg: f64, width: usize, height: usize) -> Result<Self> {
        let c = Self {
            fov_deg,
            width,
            height,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn square(fov_deg: f64, resolution: usize) -> Result<Self> {
        Self::new(fov_deg, resolution, resolution)
    }

    pub fn validate(&self) -> Result<()> {
        if !(10.0..=120.0).contains(&self.fov_deg) {
            return Err(Error::Config(format!(
                "camera fov {}° outside [10°, 120°]",
                self.fov_deg
            )));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::Config("camera resolution must be positive".into()));
        }
        Ok(())
    }

    fn tan_half(&self) -> f64 {
        (0.5 * self.fov_deg).to_radians().tan()
    }

    fn aspect(&self) -> f64 {
        self.width as f64 / self.height as f64
    }

    /// Unnormalized ray through the pixel center with `z = −1`.
    pub fn ray(&self, x: usize, y: usize) -> Vec3 {
        self.ray_at(x as f64 + 0.5, y as f64 + 0.5)
    }

    /// Ray through a continuous pixel coordinate, `z = −1`.
    pub fn ray_at(&self, px: f64, py: f64) -> Vec3 {
        let t = self.tan_half();
        let sx = (px / self.width as f64 * 2.0 - 1.0) * t * self.aspect();
        let sy = (1.0 - py / self.height as f64 * 2.0) * t;
        Vec3::new(sx, sy, -1.0)
    }

    /// Camera-space point at `depth` along the pixel's ray.
    pub fn unproject(&self, x: usize, y: usize, depth: f64) -> Vec3 {
        self.ray(x, y) * depth
    }

    /// Continuous pixel coordinates and depth of a camera-space point.
    pub fn project(&self, p: &Vec3) -> (f64, f64, f64) {
        let depth = -p.z;
        let t = self.tan_half();
        let sx = p.x / depth / (t * self.aspect());
        let sy = p.y / depth / t;
        (
            (sx + 1.0) * 0.5 * self.width as f64,
            (1.0 - sy) * 0.5 * self.height as f64,
            depth,
        )
    }

    /// Side length in scene units of one pixel at `depth`.
    pub fn pixel_footprint(&self, depth: f64) -> f64 {
        2.0 * self.tan_half() * depth / self.height as f64
    }

    /// Distance at which a sphere of `radius` just fits the vertical field
    /// of view with the given margin factor (> 1 leaves a border).
    pub fn framing_distance(&self, radius: f64, margin: f64) -> f64 {
        let half = (0.5 * self.fov_deg)
            .to_radians()
            .min((self.tan_half() * self.aspect()).atan());
        radius * margin / half.sin()
    }
}

/// Flash collocated with the camera center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlashLight {
    /// RGB radiant intensity; irradiance falls off with the inverse square
    /// of distance.
    pub intensity: Rgb,
}

impl FlashLight {
    pub fn new(intensity: Rgb) -> Result<Self> {
        let f = Self { intensity };
        f.validate()?;
        Ok(f)
    }

    pub fn white(intensity: f64) -> Self {
        Self {
            intensity: [intensity; 3],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.intensity.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Config(format!(
                "flash intensity {:?} must be positive",
                self.intensity
            )));
        }
        Ok(())
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            intensity: self.intensity.map(|v| v * k),
        }
    }
}

/// Point light at an arbitrary camera-space position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointLight {
    pub position: [f64; 3],
    pub intensity: Rgb,
}

impl PointLight {
    pub fn collocated(flash: &FlashLight) -> Self {
        Self {
            position: [0.0; 3],
            intensity: flash.intensity,
        }
    }

    pub fn position(&self) -> Vec3 {
        Vec3::from(self.position)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn project_inverts_unproject() {
        let cam = Camera::new(40.0, 64, 48).unwrap();
        let p = cam.unproject(10, 33, 2.5);
        let (px, py, d) = cam.project(&p);
        assert_abs_diff_eq!(px, 10.5, epsilon = 1e-12);
        assert_abs_diff_eq!(py, 33.5, epsilon = 1e-12);
        assert_abs_diff_eq!(d, 2.5, epsilon = 1e-12);
    }

    #[test]
    fn fov_bounds() {
        assert!(Camera::new(5.0, 8, 8).is_err());
        assert!(Camera::new(130.0, 8, 8).is_err());
        assert!(FlashLight::new([1.0, 0.0, 1.0]).is_err());
    }
}
