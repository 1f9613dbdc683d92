//! Indexed triangle mesh with optional per-vertex colors.
//!
//! The mesh is the optimization variable of the carving stage. Faces wind
//! counter-clockwise when seen from outside, so face normals point outward.

use nalgebra::{Point3, Vector3};

use crate::error::{Error, Result};

/// Indexed triangle mesh. Coordinates are scene units; the pipeline
/// normalizes subjects into the [-1,1]^3 box before carving.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Point3<f64>>,
    /// Vertex index triples, counter-clockwise = outward.
    pub faces: Vec<[usize; 3]>,
    /// Optional per-vertex RGB in [0,1], aligned with `vertices`.
    pub colors: Option<Vec<[f64; 3]>>,
}

/// Summary returned by [`TriMesh::stats`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshStats {
    pub vertex_count: usize,
    pub face_count: usize,
    pub edge_count: usize,
    /// V - E + F over unique undirected edges.
    pub euler_characteristic: i64,
    pub total_area: f64,
    pub bbox_min: Point3<f64>,
    pub bbox_max: Point3<f64>,
}

impl TriMesh {
    pub fn new(vertices: Vec<Point3<f64>>, faces: Vec<[usize; 3]>) -> Self {
        TriMesh {
            vertices,
            faces,
            colors: None,
        }
    }

    pub fn with_colors(
        vertices: Vec<Point3<f64>>,
        faces: Vec<[usize; 3]>,
        colors: Vec<[f64; 3]>,
    ) -> Self {
        TriMesh {
            vertices,
            faces,
            colors: Some(colors),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty() || self.faces.is_empty()
    }

    /// Check the structural invariants: in-range face indices, no repeated
    /// vertex within a face, finite coordinates, and color alignment/range.
    pub fn validate(&self) -> Result<()> {
        for (fi, f) in self.faces.iter().enumerate() {
            for &idx in f {
                if idx >= self.vertices.len() {
                    return Err(Error::FaceIndexOutOfRange {
                        face: fi,
                        index: idx,
                        vertex_count: self.vertices.len(),
                    });
                }
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::InvalidMesh(format!(
                    "face {fi} repeats a vertex: {f:?}"
                )));
            }
        }
        for (vi, v) in self.vertices.iter().enumerate() {
            if !v.coords.iter().all(|c| c.is_finite()) {
                return Err(Error::InvalidMesh(format!(
                    "vertex {vi} has non-finite coordinates"
                )));
            }
        }
        if let Some(colors) = &self.colors {
            if colors.len() != self.vertices.len() {
                return Err(Error::InvalidMesh(format!(
                    "color count {} != vertex count {}",
                    colors.len(),
                    self.vertices.len()
                )));
            }
            for (ci, c) in colors.iter().enumerate() {
                if !c.iter().all(|x| x.is_finite() && (0.0..=1.0).contains(x)) {
                    return Err(Error::InvalidMesh(format!(
                        "color {ci} out of [0,1]: {c:?}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Unnormalized face normal `(v1-v0) x (v2-v0)`; its length is twice the
    /// face area and it points outward for CCW winding.
    pub fn face_normal_raw(&self, face: usize) -> Vector3<f64> {
        let [i0, i1, i2] = self.faces[face];
        let a = self.vertices[i1] - self.vertices[i0];
        let b = self.vertices[i2] - self.vertices[i0];
        a.cross(&b)
    }

    pub fn face_area(&self, face: usize) -> f64 {
        0.5 * self.face_normal_raw(face).norm()
    }

    /// Area-weighted vertex normals. Each vertex normal is the normalized
    /// sum of the unnormalized normals of its incident faces; degenerate
    /// faces contribute zero weight. Isolated vertices (or vertices whose
    /// incident normals cancel) get (0,0,1) and a warning.
    pub fn vertex_normals(&self) -> Vec<Vector3<f64>> {
        let mut acc = vec![Vector3::zeros(); self.vertices.len()];
        for fi in 0..self.faces.len() {
            let n = self.face_normal_raw(fi);
            for &vi in &self.faces[fi] {
                acc[vi] += n;
            }
        }
        let mut fallback = 0usize;
        let normals = acc
            .into_iter()
            .map(|n| {
                let len = n.norm();
                if len < 1e-20 {
                    fallback += 1;
                    Vector3::new(0.0, 0.0, 1.0)
                } else {
                    n / len
                }
            })
            .collect();
        if fallback > 0 {
            log::warn!("vertex_normals: {fallback} vertices without a usable normal, set to (0,0,1)");
        }
        normals
    }

    /// Vertex/edge/face counts, Euler characteristic, total area, and bbox.
    pub fn stats(&self) -> MeshStats {
        let mut edges: Vec<(usize, usize)> = Vec::with_capacity(self.faces.len() * 3);
        for f in &self.faces {
            for k in 0..3 {
                let a = f[k];
                let b = f[(k + 1) % 3];
                edges.push((a.min(b), a.max(b)));
            }
        }
        edges.sort_unstable();
        edges.dedup();
        let total_area: f64 = (0..self.faces.len()).map(|f| self.face_area(f)).sum();
        let (mut lo, mut hi) = (
            Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
            Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
        );
        for v in &self.vertices {
            for k in 0..3 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        MeshStats {
            vertex_count: self.vertices.len(),
            face_count: self.faces.len(),
            edge_count: edges.len(),
            euler_characteristic: self.vertices.len() as i64 - edges.len() as i64
                + self.faces.len() as i64,
            total_area,
            bbox_min: lo,
            bbox_max: hi,
        }
    }

    /// True when every edge is shared by exactly two faces.
    pub fn is_watertight(&self) -> bool {
        use std::collections::HashMap;
        let mut count: HashMap<(usize, usize), u32> = HashMap::new();
        for f in &self.faces {
            for k in 0..3 {
                let a = f[k];
                let b = f[(k + 1) % 3];
                *count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        !count.is_empty() && count.values().all(|&c| c == 2)
    }

    /// Signed volume via the divergence theorem; positive for outward
    /// oriented closed meshes.
    pub fn signed_volume(&self) -> f64 {
        self.faces
            .iter()
            .map(|&[i0, i1, i2]| {
                let a = self.vertices[i0].coords;
                let b = self.vertices[i1].coords;
                let c = self.vertices[i2].coords;
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }

    /// Uniformly scale about the origin.
    pub fn scaled(&self, s: f64) -> TriMesh {
        TriMesh {
            vertices: self.vertices.iter().map(|v| Point3::from(v.coords * s)).collect(),
            faces: self.faces.clone(),
            colors: self.colors.clone(),
        }
    }

    /// Translate by `d`.
    pub fn translated(&self, d: Vector3<f64>) -> TriMesh {
        TriMesh {
            vertices: self.vertices.iter().map(|v| v + d).collect(),
            faces: self.faces.clone(),
            colors: self.colors.clone(),
        }
    }
}

/// Recorded similarity `x_norm = scale * (x_world - center)` used to place a
/// subject into the [-1,1]^3 box. Invertible; the inverse restores original
/// units before results are written out.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NormalizeTransform {
    pub scale: f64,
    pub center: [f64; 3],
}

impl NormalizeTransform {
    pub fn identity() -> Self {
        NormalizeTransform {
            scale: 1.0,
            center: [0.0; 3],
        }
    }

    /// Fit `bbox` so its largest half-extent maps to `target_half_extent`.
    pub fn from_bbox(lo: Point3<f64>, hi: Point3<f64>, target_half_extent: f64) -> Self {
        let center = (lo.coords + hi.coords) * 0.5;
        let half = (hi.coords - lo.coords) * 0.5;
        let max_half = half.iter().cloned().fold(0.0_f64, f64::max).max(1e-9);
        NormalizeTransform {
            scale: target_half_extent / max_half,
            center: [center.x, center.y, center.z],
        }
    }

    pub fn apply_point(&self, p: Point3<f64>) -> Point3<f64> {
        Point3::from((p.coords - Vector3::from(self.center)) * self.scale)
    }

    pub fn invert_point(&self, p: Point3<f64>) -> Point3<f64> {
        Point3::from(p.coords / self.scale + Vector3::from(self.center))
    }

    pub fn apply_mesh(&self, mesh: &mut TriMesh) {
        for v in &mut mesh.vertices {
            *v = self.apply_point(*v);
        }
    }

    pub fn invert_mesh(&self, mesh: &mut TriMesh) {
        for v in &mut mesh.vertices {
            *v = self.invert_point(*v);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Axis-aligned cube with side `s` centered at the origin, CCW outward.
    pub fn cube(side: f64) -> TriMesh {
        let h = side * 0.5;
        let vertices = vec![
            Point3::new(-h, -h, -h),
            Point3::new(h, -h, -h),
            Point3::new(h, h, -h),
            Point3::new(-h, h, -h),
            Point3::new(-h, -h, h),
            Point3::new(h, -h, h),
            Point3::new(h, h, h),
            Point3::new(-h, h, h),
        ];
        let faces = vec![
            [0, 2, 1],
            [0, 3, 2],
            [4, 5, 6],
            [4, 6, 7],
            [0, 1, 5],
            [0, 5, 4],
            [2, 3, 7],
            [2, 7, 6],
            [1, 2, 6],
            [1, 6, 5],
            [3, 0, 4],
            [3, 4, 7],
        ];
        TriMesh::new(vertices, faces)
    }

    #[test]
    fn cube_stats() {
        let m = cube(1.0);
        let s = m.stats();
        assert_eq!(s.vertex_count, 8);
        assert_eq!(s.face_count, 12);
        assert_eq!(s.edge_count, 18);
        assert_eq!(s.euler_characteristic, 2);
        assert_relative_eq!(s.total_area, 6.0, epsilon = 1e-12);
        assert!(m.is_watertight());
        assert!(m.signed_volume() > 0.0);
    }

    #[test]
    fn icosahedron_counts() {
        let m = crate::primitives::icosahedron(1.0);
        let s = m.stats();
        assert_eq!((s.vertex_count, s.edge_count, s.face_count), (12, 30, 20));
        assert_eq!(s.euler_characteristic, 2);
    }

    #[test]
    fn torus_euler_characteristic_zero() {
        let m = crate::primitives::make_primitive(crate::primitives::PrimitiveKind::Torus, 3).unwrap();
        assert_eq!(m.stats().euler_characteristic, 0);
    }

    #[test]
    fn validate_catches_bad_face_index() {
        let m = TriMesh::new(
            vec![
                Point3::origin(),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 5]],
        );
        match m.validate() {
            Err(Error::FaceIndexOutOfRange { face, index, vertex_count }) => {
                assert_eq!((face, index, vertex_count), (0, 5, 3));
            }
            other => panic!("expected FaceIndexOutOfRange, got {other:?}"),
        }
    }

    #[test]
    fn flat_square_normals_point_up() {
        let m = TriMesh::new(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(1.0, 1.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        );
        for n in m.vertex_normals() {
            assert_relative_eq!(n, Vector3::new(0.0, 0.0, 1.0), epsilon = 1e-12);
        }
    }

    #[test]
    fn tetrahedron_vertex_normals_match_face_normal_sums() {
        let vertices = vec![
            Point3::new(1.0, 1.0, 1.0),
            Point3::new(1.0, -1.0, -1.0),
            Point3::new(-1.0, 1.0, -1.0),
            Point3::new(-1.0, -1.0, 1.0),
        ];
        let faces = vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]];
        let m = TriMesh::new(vertices, faces);
        let normals = m.vertex_normals();
        // Closed-form: each vertex normal is the normalized sum of its three
        // incident (area-weighted) face normals.
        for (vi, n) in normals.iter().enumerate() {
            let mut sum = Vector3::zeros();
            for fi in 0..4 {
                if m.faces[fi].contains(&vi) {
                    sum += m.face_normal_raw(fi);
                }
            }
            assert_relative_eq!(*n, sum.normalize(), epsilon = 1e-12);
            assert_relative_eq!(n.norm(), 1.0, epsilon = 1e-6);
            // Regular tetrahedron centered at origin: normals are radial.
            assert_relative_eq!(*n, m.vertices[vi].coords.normalize(), epsilon = 1e-12);
        }
    }

    #[test]
    fn icosphere_normals_close_to_analytic() {
        let m = crate::primitives::icosphere(3, 1.0);
        let normals = m.vertex_normals();
        let mut max_angle: f64 = 0.0;
        for (v, n) in m.vertices.iter().zip(&normals) {
            let exact = v.coords.normalize();
            max_angle = max_angle.max(n.dot(&exact).clamp(-1.0, 1.0).acos());
        }
        assert!(max_angle.to_degrees() < 2.0, "max angle {max_angle}");
    }

    #[test]
    fn euler_characteristic_invariant_under_vertex_reorder() {
        let m = cube(1.0);
        let chi = m.stats().euler_characteristic;
        // Reverse vertex order, remap faces.
        let n = m.vertices.len();
        let vertices: Vec<_> = m.vertices.iter().rev().cloned().collect();
        let faces: Vec<[usize; 3]> = m
            .faces
            .iter()
            .map(|f| [n - 1 - f[0], n - 1 - f[1], n - 1 - f[2]])
            .collect();
        let m2 = TriMesh::new(vertices, faces);
        assert_eq!(m2.stats().euler_characteristic, chi);
    }

    #[test]
    fn normalize_roundtrip() {
        let t = NormalizeTransform::from_bbox(
            Point3::new(2.0, 3.0, 4.0),
            Point3::new(6.0, 5.0, 4.5),
            1.0,
        );
        let p = Point3::new(3.3, 4.1, 4.2);
        let q = t.invert_point(t.apply_point(p));
        assert_relative_eq!(p, q, epsilon = 1e-12);
        let lo = t.apply_point(Point3::new(2.0, 3.0, 4.0));
        let hi = t.apply_point(Point3::new(6.0, 5.0, 4.5));
        assert_relative_eq!(lo.x, -1.0, epsilon = 1e-12);
        assert_relative_eq!(hi.x, 1.0, epsilon = 1e-12);
    }
}
