use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::num::Real;
use crate::volume::Volume;

/// Pinhole camera in world space. The volume is centred at the origin.
///
/// `orbit_angle` rotates `eye` and `look_at` about the vertical (+y) axis
/// through the volume centre.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Camera<T> {
    pub eye: Vec3<T>,
    pub look_at: Vec3<T>,
    pub up: Vec3<T>,
    /// Vertical field of view in degrees.
    pub vertical_fov: T,
    /// Radians.
    pub orbit_angle: T,
}

/// Orthonormal view frame derived from a camera.
#[derive(Clone, Copy, Debug)]
pub struct ViewFrame<T> {
    pub eye: Vec3<T>,
    pub forward: Vec3<T>,
    pub right: Vec3<T>,
    pub up: Vec3<T>,
    pub tan_half_fov: T,
}

fn rotate_y<T: Real>(v: Vec3<T>, angle: T) -> Vec3<T> {
    let (s, c) = angle.sin_cos();
    Vec3::new(c * v.x + s * v.z, v.y, c * v.z - s * v.x)
}

impl<T: Real> Camera<T> {
    /// Orbit camera that frames `volume` vertically, looking at its centre.
    ///
    /// `elevation` is the eye height as a fraction of the orbit radius.
    pub fn framing(volume: &Volume, orbit_angle: T, elevation: T) -> Self {
        let dims = volume.dims();
        let spacing = volume.spacing();
        let half_diag = (0..3)
            .map(|a| {
                let e = (dims[a] as f64 - 1.0).max(1.0) * spacing[a] * 0.5;
                e * e
            })
            .sum::<f64>()
            .sqrt();
        let fov = 30.0f64;
        let dist = half_diag / (fov.to_radians() * 0.5).sin();
        let elev = elevation.to_f64_lossy();
        let planar = dist / (1.0 + elev * elev).sqrt();
        Self {
            eye: Vec3::from_f64([0.0, planar * elev, planar]),
            look_at: Vec3::splat(T::zero()),
            up: Vec3::new(T::zero(), T::one(), T::zero()),
            vertical_fov: T::lit(fov),
            orbit_angle,
        }
    }

    pub fn with_angle(mut self, angle: T) -> Self {
        self.orbit_angle = angle;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.frame().map(|_| ())
    }

    /// Resolves the orbit and builds an orthonormal frame.
    pub fn frame(&self) -> Result<ViewFrame<T>> {
        let fov = self.vertical_fov;
        if !(fov > T::zero() && fov < T::lit(180.0)) {
            return Err(Error::InvalidCamera(format!(
                "vertical fov {fov:?} outside (0, 180)"
            )));
        }
        let tau = T::TAU();
        let mut angle = self.orbit_angle % tau;
        if angle < T::zero() {
            angle += tau;
        }
        let eye = rotate_y(self.eye, angle);
        let look_at = rotate_y(self.look_at, angle);
        let forward = (look_at - eye)
            .normalized()
            .ok_or_else(|| Error::InvalidCamera("eye coincides with look_at".into()))?;
        let right = forward
            .cross(self.up)
            .normalized()
            .ok_or_else(|| Error::InvalidCamera("up is parallel to the view direction".into()))?;
        let up = right.cross(forward);
        Ok(ViewFrame {
            eye,
            forward,
            right,
            up,
            tan_half_fov: (fov.to_radians() * T::lit(0.5)).tan(),
        })
    }
}

impl<T: Real> ViewFrame<T> {
    /// Direction through the centre of pixel `(px, py)`; `py = 0` is the top row.
    pub fn pixel_dir(&self, px: usize, py: usize, width: usize, height: usize) -> Vec3<T> {
        let half = T::lit(0.5);
        let two = T::lit(2.0);
        let w = T::from_usize_lossy(width);
        let h = T::from_usize_lossy(height);
        let aspect = w / h;
        let sx = (two * (T::from_usize_lossy(px) + half) / w - T::one()) * aspect * self.tan_half_fov;
        let sy = (T::one() - two * (T::from_usize_lossy(py) + half) / h) * self.tan_half_fov;
        let d = self.forward + self.right * sx + self.up * sy;
        d.normalized().unwrap_or(self.forward)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cam() -> Camera<f64> {
        Camera {
            eye: Vec3::new(0.0, 0.0, 10.0),
            look_at: Vec3::splat(0.0),
            up: Vec3::new(0.0, 1.0, 0.0),
            vertical_fov: 45.0,
            orbit_angle: 0.0,
        }
    }

    #[test]
    fn invalid_cameras() {
        let mut c = cam();
        c.up = Vec3::new(0.0, 0.0, 1.0);
        assert!(c.validate().is_err());
        let mut c = cam();
        c.vertical_fov = 180.0;
        assert!(c.validate().is_err());
        c.vertical_fov = 0.0;
        assert!(c.validate().is_err());
        let mut c = cam();
        c.look_at = c.eye;
        assert!(c.validate().is_err());
    }

    #[test]
    fn orbit_quarter_turn() {
        let f = cam().with_angle(std::f64::consts::FRAC_PI_2).frame().unwrap();
        assert!((f.eye.x - 10.0).abs() < 1e-12 && f.eye.z.abs() < 1e-12);
        assert!((f.forward.x + 1.0).abs() < 1e-12);
    }

    #[test]
    fn full_turn_is_identity() {
        let a = cam().frame().unwrap();
        let b = cam().with_angle(std::f64::consts::TAU).frame().unwrap();
        assert_eq!(a.eye, b.eye);
        assert_eq!(a.forward, b.forward);
    }

    #[test]
    fn centre_pixel_looks_forward() {
        let f = cam().frame().unwrap();
        let d = f.pixel_dir(50, 50, 101, 101);
        assert!((d - f.forward).length() < 1e-12);
        let top = f.pixel_dir(50, 0, 101, 101);
        assert!(top.y > 0.0);
    }
}
