//! Pinhole camera: intrinsics plus a world-to-camera rigid pose.
//!
//! Convention used everywhere in this crate: the camera looks down +z,
//! image x points right, image y points down, and `x_cam = R * x_world + t`.

use nalgebra::{Matrix3, Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_NEAR_PLANE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct Camera {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    /// World-to-camera rotation.
    pub rotation: Matrix3<f64>,
    /// World-to-camera translation.
    pub translation: Vector3<f64>,
}

/// Result of projecting a world point. `valid` is false when the point lies
/// at or behind the near plane; `x`/`y` are meaningless in that case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub x: f64,
    pub y: f64,
    /// Camera-space depth, returned unclamped even when invalid.
    pub z: f64,
    pub valid: bool,
}

impl Camera {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: usize,
        height: usize,
        rotation: Matrix3<f64>,
        translation: Vector3<f64>,
    ) -> Result<Self> {
        let cam = Camera {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
            rotation,
            translation,
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(Error::InvalidCamera(format!(
                "focal lengths must be positive, got fx={} fy={}",
                self.fx, self.fy
            )));
        }
        if !(0.0 <= self.cx && self.cx < self.width as f64)
            || !(0.0 <= self.cy && self.cy < self.height as f64)
        {
            return Err(Error::InvalidCamera(format!(
                "principal point ({}, {}) outside image {}x{}",
                self.cx, self.cy, self.width, self.height
            )));
        }
        let r = &self.rotation;
        let err = (r * r.transpose() - Matrix3::identity()).norm();
        if err > 1e-6 {
            return Err(Error::InvalidCamera(format!(
                "rotation not orthonormal (|R R^T - I| = {err:.2e})"
            )));
        }
        if (r.determinant() - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidCamera(format!(
                "rotation determinant {} != +1",
                r.determinant()
            )));
        }
        Ok(())
    }

    /// Camera position in world coordinates, `-R^T t`.
    pub fn position(&self) -> Point3<f64> {
        Point3::from(-(self.rotation.transpose() * self.translation))
    }

    pub fn to_camera_space(&self, p: Point3<f64>) -> Vector3<f64> {
        self.rotation * p.coords + self.translation
    }

    /// Project a world point: `x = fx X/Z + cx`, `y = fy Y/Z + cy` with
    /// `(X,Y,Z) = R p + t`. Points with `Z <= near` are flagged invalid.
    pub fn project(&self, p: Point3<f64>) -> Projection {
        self.project_with_near(p, DEFAULT_NEAR_PLANE)
    }

    pub fn project_with_near(&self, p: Point3<f64>, near: f64) -> Projection {
        let c = self.to_camera_space(p);
        if c.z <= near {
            return Projection {
                x: 0.0,
                y: 0.0,
                z: c.z,
                valid: false,
            };
        }
        Projection {
            x: self.fx * c.x / c.z + self.cx,
            y: self.fy * c.y / c.z + self.cy,
            z: c.z,
            valid: true,
        }
    }

    /// Camera at `eye` looking at `target`, with `up` fixing the roll.
    /// Camera x is image-right, camera y image-down, camera z the view
    /// direction.
    pub fn look_at(
        eye: Point3<f64>,
        target: Point3<f64>,
        up: Vector3<f64>,
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: usize,
        height: usize,
    ) -> Result<Self> {
        let forward = (target - eye)
            .try_normalize(1e-12)
            .ok_or_else(|| Error::InvalidCamera("eye and target coincide".into()))?;
        let mut up = up;
        if forward.cross(&up).norm() < 1e-9 {
            // Degenerate straight-up/down view; pick another up axis.
            up = Vector3::new(0.0, 0.0, 1.0);
            if forward.cross(&up).norm() < 1e-9 {
                up = Vector3::new(1.0, 0.0, 0.0);
            }
        }
        let right = forward.cross(&up).normalize();
        let down = forward.cross(&right).normalize();
        let rotation = Matrix3::from_rows(&[
            right.transpose(),
            down.transpose(),
            forward.transpose(),
        ]);
        let translation = -(rotation * eye.coords);
        Camera::new(fx, fy, cx, cy, width, height, rotation, translation)
    }
}

/// On-disk camera record: plain JSON object with row-major `R` and `t` such
/// that `x_cam = R x_world + t`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CameraRecord {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    #[serde(rename = "R")]
    pub r: [f64; 9],
    pub t: [f64; 3],
}

impl From<&Camera> for CameraRecord {
    fn from(c: &Camera) -> Self {
        let mut r = [0.0; 9];
        for i in 0..3 {
            for j in 0..3 {
                r[i * 3 + j] = c.rotation[(i, j)];
            }
        }
        CameraRecord {
            fx: c.fx,
            fy: c.fy,
            cx: c.cx,
            cy: c.cy,
            width: c.width,
            height: c.height,
            r,
            t: [c.translation.x, c.translation.y, c.translation.z],
        }
    }
}

impl CameraRecord {
    pub fn into_camera(&self) -> Result<Camera> {
        let rotation = Matrix3::from_fn(|i, j| self.r[i * 3 + j]);
        Camera::new(
            self.fx,
            self.fy,
            self.cx,
            self.cy,
            self.width,
            self.height,
            rotation,
            Vector3::from(self.t),
        )
    }
}

/// Read one camera or a list of cameras from a JSON file.
pub fn load_cameras(path: &std::path::Path) -> Result<Vec<Camera>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let records: Vec<CameraRecord> = match serde_json::from_str::<Vec<CameraRecord>>(&text) {
        Ok(v) => v,
        Err(_) => {
            let one: CameraRecord = serde_json::from_str(&text)
                .map_err(|e| Error::parse(path, format!("line {}", e.line()), e.to_string()))?;
            vec![one]
        }
    };
    records.iter().map(|r| r.into_camera()).collect()
}

pub fn save_cameras(path: &std::path::Path, cameras: &[Camera]) -> Result<()> {
    let records: Vec<CameraRecord> = cameras.iter().map(CameraRecord::from).collect();
    let text = serde_json::to_string_pretty(&records).expect("camera record serializes");
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::Matrix4;

    fn identity_camera() -> Camera {
        Camera::new(
            100.0,
            100.0,
            64.0,
            64.0,
            128,
            128,
            Matrix3::identity(),
            Vector3::zeros(),
        )
        .unwrap()
    }

    #[test]
    fn principal_ray_projects_to_center() {
        let cam = identity_camera();
        let p = cam.project(Point3::new(0.0, 0.0, 2.0));
        assert!(p.valid);
        assert_relative_eq!(p.x, 64.0);
        assert_relative_eq!(p.y, 64.0);
        assert_relative_eq!(p.z, 2.0);
    }

    #[test]
    fn off_axis_point() {
        let cam = identity_camera();
        let p = cam.project(Point3::new(1.0, 0.0, 2.0));
        assert!(p.valid);
        assert_relative_eq!(p.x, 114.0);
        assert_relative_eq!(p.y, 64.0);
        assert_relative_eq!(p.z, 2.0);
    }

    #[test]
    fn behind_near_plane_flagged_invalid() {
        let cam = identity_camera();
        let p = cam.project(Point3::new(0.0, 0.0, -1.0));
        assert!(!p.valid);
        assert_relative_eq!(p.z, -1.0);
    }

    #[test]
    fn matches_homogeneous_matrix_pipeline() {
        // Independent oracle: build the 4x4 [R|t] matrix and the 3x4
        // intrinsic projection, push points through homogeneous coordinates.
        let mut rng_state = 0x12345678u64;
        let mut next = move || {
            rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((rng_state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        for _ in 0..50 {
            let axis = Vector3::new(next(), next(), next());
            let axis = if axis.norm() < 1e-6 {
                Vector3::x()
            } else {
                axis.normalize()
            };
            let angle = next() * std::f64::consts::PI;
            let rotation = nalgebra::Rotation3::from_axis_angle(
                &nalgebra::Unit::new_normalize(axis),
                angle,
            )
            .into_inner();
            let translation = Vector3::new(next(), next(), next() + 5.0);
            let cam = Camera::new(123.0, 141.0, 32.5, 63.5, 128, 128, rotation, translation).unwrap();
            let p = Point3::new(next(), next(), next());

            let mut ext = Matrix4::identity();
            ext.fixed_view_mut::<3, 3>(0, 0).copy_from(&rotation);
            ext.fixed_view_mut::<3, 1>(0, 3).copy_from(&translation);
            let h = ext * p.to_homogeneous();
            let (xh, yh, zh) = (h[0] / h[3], h[1] / h[3], h[2] / h[3]);
            let expected_x = 123.0 * xh / zh + 32.5;
            let expected_y = 141.0 * yh / zh + 63.5;

            let proj = cam.project(p);
            if proj.valid {
                assert_relative_eq!(proj.x, expected_x, epsilon = 1e-9);
                assert_relative_eq!(proj.y, expected_y, epsilon = 1e-9);
                assert_relative_eq!(proj.z, zh, epsilon = 1e-9);
            } else {
                assert!(zh <= DEFAULT_NEAR_PLANE);
            }
        }
    }

    #[test]
    fn rotation_equivariance() {
        // Pre-rotating the world by Q and post-multiplying the camera
        // rotation by Q^T yields identical pixels.
        let q = nalgebra::Rotation3::from_euler_angles(0.3, -0.8, 1.1).into_inner();
        let rotation = nalgebra::Rotation3::from_euler_angles(-0.2, 0.5, 0.9).into_inner();
        let translation = Vector3::new(0.1, -0.3, 4.0);
        let cam = Camera::new(90.0, 80.0, 60.0, 50.0, 120, 100, rotation, translation).unwrap();
        let cam_q = Camera::new(
            90.0,
            80.0,
            60.0,
            50.0,
            120,
            100,
            rotation * q.transpose(),
            translation,
        )
        .unwrap();
        for p in [
            Point3::new(0.3, -0.2, 1.0),
            Point3::new(-1.0, 0.5, 0.2),
            Point3::new(2.0, 2.0, -0.5),
        ] {
            let a = cam.project(p);
            let b = cam_q.project(Point3::from(q * p.coords));
            assert_eq!(a.valid, b.valid);
            if a.valid {
                assert_relative_eq!(a.x, b.x, epsilon = 1e-9);
                assert_relative_eq!(a.y, b.y, epsilon = 1e-9);
                assert_relative_eq!(a.z, b.z, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn camera_record_roundtrip() {
        let cam = Camera::look_at(
            Point3::new(0.0, 1.0, 2.5),
            Point3::origin(),
            Vector3::y(),
            200.0,
            200.0,
            128.0,
            128.0,
            256,
            256,
        )
        .unwrap();
        let rec = CameraRecord::from(&cam);
        let back = rec.into_camera().unwrap();
        assert_relative_eq!(back.rotation, cam.rotation, epsilon = 1e-15);
        assert_relative_eq!(back.translation, cam.translation, epsilon = 1e-15);
    }

    #[test]
    fn non_orthonormal_rotation_rejected() {
        let mut r = Matrix3::identity();
        r[(0, 0)] = 1.1;
        assert!(Camera::new(100.0, 100.0, 1.0, 1.0, 4, 4, r, Vector3::zeros()).is_err());
    }
}
