//! Indexed triangle meshes and a few parametric primitives used as
//! fixtures for the variational checks.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::{Rotation3, Vector3};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Vector3<f64>>,
    /// Counter-clockwise about the face normal.
    pub faces: Vec<[usize; 3]>,
    /// Optional per-vertex unit normals supplied by the constructor.
    pub normals: Option<Vec<Vector3<f64>>>,
}

impl TriMesh {
    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len();
        for (k, f) in self.faces.iter().enumerate() {
            if f.iter().any(|&i| i >= n) {
                return Err(invalid(format!("face {k} indexes past {n} vertices")));
            }
        }
        if let Some(normals) = &self.normals {
            if normals.len() != n {
                return Err(invalid("normal count differs from vertex count"));
            }
        }
        Ok(())
    }

    /// `(b - a) x (c - a)`: twice the area times the unit normal.
    pub fn area_vector(&self, f: usize) -> Vector3<f64> {
        let [a, b, c] = self.faces[f];
        let pa = self.vertices[a];
        (self.vertices[b] - pa).cross(&(self.vertices[c] - pa))
    }

    pub fn face_area(&self, f: usize) -> f64 {
        0.5 * self.area_vector(f).norm()
    }

    pub fn face_normal(&self, f: usize) -> Option<Vector3<f64>> {
        let v = self.area_vector(f);
        let n = v.norm();
        (n > 0.0).then(|| v / n)
    }

    pub fn area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Signed enclosed volume, `(1/3) sum <centroid, n> area`.
    pub fn volume(&self) -> f64 {
        self.faces
            .iter()
            .map(|&[a, b, c]| self.vertices[a].dot(&self.vertices[b].cross(&self.vertices[c])))
            .sum::<f64>()
            / 6.0
    }

    /// Area-weighted average of incident face normals, normalized.
    pub fn vertex_normals(&self) -> Vec<Vector3<f64>> {
        let mut acc = vec![Vector3::zeros(); self.vertices.len()];
        for f in 0..self.faces.len() {
            let v = self.area_vector(f);
            for &i in &self.faces[f] {
                acc[i] += v;
            }
        }
        acc.into_iter()
            .map(|v| {
                let n = v.norm();
                if n > 0.0 {
                    v / n
                } else {
                    v
                }
            })
            .collect()
    }

    /// Incident faces of each vertex.
    pub fn vertex_faces(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.vertices.len()];
        for (k, f) in self.faces.iter().enumerate() {
            for &i in f {
                out[i].push(k);
            }
        }
        out
    }

    /// Vertices whose incident faces close up into a full fan: every
    /// edge leaving the vertex is shared by exactly two incident faces.
    pub fn interior_vertices(&self) -> Vec<bool> {
        let incident = self.vertex_faces();
        incident
            .iter()
            .enumerate()
            .map(|(v, faces)| {
                if faces.len() < 3 {
                    return false;
                }
                let mut count: HashMap<usize, u32> = HashMap::new();
                for &f in faces {
                    for &w in &self.faces[f] {
                        if w != v {
                            *count.entry(w).or_default() += 1;
                        }
                    }
                }
                count.values().all(|&c| c == 2)
            })
            .collect()
    }

    pub fn flipped(&self) -> Self {
        Self {
            vertices: self.vertices.clone(),
            faces: self.faces.iter().map(|&[a, b, c]| [a, c, b]).collect(),
            normals: self
                .normals
                .as_ref()
                .map(|ns| ns.iter().map(|n| -n).collect()),
        }
    }

    pub fn translated(&self, t: Vector3<f64>) -> Self {
        Self {
            vertices: self.vertices.iter().map(|v| v + t).collect(),
            ..self.clone()
        }
    }

    pub fn rotated_about_z(&self, angle: f64) -> Self {
        let r = Rotation3::from_axis_angle(&Vector3::z_axis(), angle);
        Self {
            vertices: self.vertices.iter().map(|v| r * v).collect(),
            faces: self.faces.clone(),
            normals: self
                .normals
                .as_ref()
                .map(|ns| ns.iter().map(|n| r * n).collect()),
        }
    }
}

/// Mesh of a parametric patch on a `nu x nv` vertex lattice. Each quad
/// is split along the same diagonal, so interior vertices see a
/// centrally symmetric six-neighbour stencil. Faces are oriented by
/// `X_u x X_v`. Wrapping closes the lattice in that direction.
pub fn grid_surface<F>(nu: usize, nv: usize, wrap_u: bool, wrap_v: bool, f: F) -> TriMesh
where
    F: Fn(usize, usize) -> Vector3<f64>,
{
    let mut vertices = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        for j in 0..nv {
            vertices.push(f(i, j));
        }
    }
    let idx = |i: usize, j: usize| (i % nu) * nv + (j % nv);
    let cells_u = if wrap_u { nu } else { nu.saturating_sub(1) };
    let cells_v = if wrap_v { nv } else { nv.saturating_sub(1) };
    let mut faces = Vec::with_capacity(2 * cells_u * cells_v);
    for i in 0..cells_u {
        for j in 0..cells_v {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    TriMesh {
        vertices,
        faces,
        normals: None,
    }
}

/// Icosahedron refined `level` times, projected onto the sphere.
pub fn icosphere(radius: f64, level: u32) -> TriMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vector3<f64>> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vector3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, vs: &mut Vec<Vector3<f64>>| {
            let key = (a.min(b), a.max(b));
            *mid.entry(key).or_insert_with(|| {
                vs.push(((vs[a] + vs[b]) * 0.5).normalize());
                vs.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    let normals = vertices.clone();
    TriMesh {
        vertices: vertices.into_iter().map(|v| v * radius).collect(),
        faces,
        normals: Some(normals),
    }
}

/// Open vertical cylinder band of radius `r` over `z in [0, height]`,
/// outward oriented.
pub fn cylinder(r: f64, height: f64, n_theta: usize, n_z: usize) -> TriMesh {
    let mut m = grid_surface(n_theta, n_z, true, false, |i, j| {
        let th = 2.0 * PI * i as f64 / n_theta as f64;
        let z = height * j as f64 / (n_z - 1) as f64;
        Vector3::new(r * th.cos(), r * th.sin(), z)
    });
    m.normals = Some(
        (0..n_theta)
            .flat_map(|i| {
                let th = 2.0 * PI * i as f64 / n_theta as f64;
                std::iter::repeat_n(Vector3::new(th.cos(), th.sin(), 0.0), n_z)
            })
            .collect(),
    );
    m
}

/// Classical helicoid `(r cos t, r sin t, pitch t)` with upward normal.
pub fn helicoid(
    pitch: f64,
    r: (f64, f64),
    theta: (f64, f64),
    n_r: usize,
    n_theta: usize,
) -> TriMesh {
    grid_surface(n_r, n_theta, false, false, |i, j| {
        let rr = r.0 + (r.1 - r.0) * i as f64 / (n_r - 1) as f64;
        let t = theta.0 + (theta.1 - theta.0) * j as f64 / (n_theta - 1) as f64;
        Vector3::new(rr * t.cos(), rr * t.sin(), pitch * t)
    })
}

/// Unit square in the plane `z = 0` with upward normal.
pub fn unit_square(n: usize) -> TriMesh {
    grid_surface(n, n, false, false, |i, j| {
        Vector3::new(i as f64 / (n - 1) as f64, j as f64 / (n - 1) as f64, 0.0)
    })
}
