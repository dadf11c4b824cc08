use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;

/// Flat-triangle surface mesh of one resonator boundary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurfaceMesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    owner: usize,
    centroids: Vec<Point>,
    areas: Vec<f64>,
    normals: Vec<Point>,
    diameters: Vec<f64>,
}

impl SurfaceMesh {
    /// Builds a mesh, caching per-triangle geometry. Triangles are expected
    /// to be counter-clockwise when seen from outside.
    pub fn new(vertices: Vec<Point>, triangles: Vec<[usize; 3]>, owner: usize) -> Result<Self> {
        let mut centroids = Vec::with_capacity(triangles.len());
        let mut areas = Vec::with_capacity(triangles.len());
        let mut normals = Vec::with_capacity(triangles.len());
        let mut diameters = Vec::with_capacity(triangles.len());
        for (index, t) in triangles.iter().enumerate() {
            if t.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::invalid(format!("triangle {index} references a missing vertex")));
            }
            let [a, b, c] = t.map(|v| vertices[v]);
            let cross = (b - a).cross(&(c - a));
            let area = 0.5 * cross.norm();
            let diameter = (b - a).norm().max((c - b).norm()).max((a - c).norm());
            if !(area > 1e-14 * diameter * diameter) {
                return Err(Error::DegenerateTriangle { index, area });
            }
            centroids.push((a + b + c) / 3.0);
            areas.push(area);
            normals.push(cross / (2.0 * area));
            diameters.push(diameter);
        }
        Ok(SurfaceMesh {
            vertices,
            triangles,
            owner,
            centroids,
            areas,
            normals,
            diameters,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Index (0-based) of the resonator this mesh discretizes.
    pub fn owner(&self) -> usize {
        self.owner
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn centroids(&self) -> &[Point] {
        &self.centroids
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn normals(&self) -> &[Point] {
        &self.normals
    }

    pub fn diameters(&self) -> &[f64] {
        &self.diameters
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    pub fn triangle(&self, t: usize) -> [Point; 3] {
        self.triangles[t].map(|v| self.vertices[v])
    }

    /// Wavefront OBJ text (1-based face indices).
    pub fn to_obj(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# resonator {}", self.owner + 1);
        for v in &self.vertices {
            let _ = writeln!(out, "v {:.17e} {:.17e} {:.17e}", v.x, v.y, v.z);
        }
        for t in &self.triangles {
            let _ = writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
        }
        out
    }
}

/// Icosahedron subdivided `refinement` times, vertices pushed onto the
/// sphere. Produces `20 * 4^refinement` outward-oriented triangles.
pub fn mesh_sphere(center: Point, radius: f64, refinement: u32, owner: usize) -> Result<SurfaceMesh> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::invalid(format!("sphere radius must be > 0, got {radius}")));
    }
    if refinement > 7 {
        return Err(Error::invalid(format!("refinement {refinement} is too large (max 7)")));
    }
    let (mut unit, mut triangles) = icosahedron();
    for _ in 0..refinement {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(triangles.len() * 4);
        for &[a, b, c] in &triangles {
            let mut midpoint = |i: usize, j: usize| -> usize {
                let key = (i.min(j), i.max(j));
                *midpoints.entry(key).or_insert_with(|| {
                    unit.push((unit[i] + unit[j]).normalize());
                    unit.len() - 1
                })
            };
            let ab = midpoint(a, b);
            let bc = midpoint(b, c);
            let ca = midpoint(c, a);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        triangles = next;
    }
    let vertices = unit.iter().map(|u| center + u * radius).collect();
    SurfaceMesh::new(vertices, triangles, owner)
}

fn icosahedron() -> (Vec<Point>, Vec<[usize; 3]>) {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ];
    let vertices = raw
        .iter()
        .map(|&(x, y, z)| Point::new(x, y, z).normalize())
        .collect::<Vec<_>>();
    let mut faces = vec![
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
    for f in &mut faces {
        let [a, b, c] = f.map(|i| vertices[i]);
        if (b - a).cross(&(c - a)).dot(&(a + b + c)) < 0.0 {
            f.swap(1, 2);
        }
    }
    (vertices, faces)
}
