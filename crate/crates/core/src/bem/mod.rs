//! Boundary-element capacitance matrices.
//!
//! Each resonator boundary is an icosphere. The static single layer operator
//! (kernel `-1/(4π|x-y|)`) is discretized by piecewise-constant collocation
//! at triangle centroids: self and near-field entries use the exact
//! flat-triangle potential, the rest use one-point centroid quadrature. One
//! dense LU factorization serves all `N` right-hand sides `χ_{∂D_j}`.

mod mesh;
mod potential;

use std::f64::consts::PI;

use faer::linalg::solvers::Solve;
use faer::{Mat, MatRef};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Point, ResonatorArray};

pub use mesh::{mesh_sphere, SurfaceMesh};
pub use potential::triangle_inverse_distance_integral;

/// Collocation points closer than this many triangle diameters to a
/// triangle's centroid use the exact triangle potential.
pub const NEAR_FIELD_DIAMETERS: f64 = 2.0;

/// Largest pivot ratio accepted from the LU factorization.
const MAX_PIVOT_RATIO: f64 = 1e13;

/// Largest number of triangles (unknowns) accepted for one dense system,
/// about 2 GB of matrix storage.
pub const MAX_UNKNOWNS: usize = 16_384;

/// Dense collocation matrix of the static single layer operator, stored
/// column-major. Entry `(p, q)` is `∫_{T_q} -1/(4π|x_p - y|) dS(y)` with
/// `x_p` the centroid of triangle `p`.
#[derive(Debug, Clone)]
pub struct SingleLayerMatrix {
    n: usize,
    data: Vec<f64>,
    areas: Vec<f64>,
}

impl SingleLayerMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, p: usize, q: usize) -> f64 {
        self.data[q * self.n + p]
    }

    pub fn as_faer(&self) -> MatRef<'_, f64> {
        MatRef::from_column_major_slice(&self.data, self.n, self.n)
    }

    /// Relative Frobenius asymmetry of the area-weighted matrix
    /// `area_p * S_pq`, which approximates the symmetric Galerkin form of
    /// the operator. Tends to zero under refinement.
    pub fn weighted_asymmetry(&self) -> f64 {
        let mut diff = 0.0;
        let mut norm = 0.0;
        for q in 0..self.n {
            for p in 0..self.n {
                let a = self.areas[p] * self.get(p, q);
                let b = self.areas[q] * self.get(q, p);
                diff += (a - b).powi(2);
                norm += a * a;
            }
        }
        (diff / norm).sqrt()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for (q, &xq) in x.iter().enumerate() {
            let col = &self.data[q * self.n..(q + 1) * self.n];
            for (yp, s) in y.iter_mut().zip(col) {
                *yp += s * xq;
            }
        }
        y
    }
}

/// Flattened view of every triangle across a mesh collection.
struct Panels<'a> {
    meshes: &'a [SurfaceMesh],
    /// (mesh index, triangle index) for each global triangle
    index: Vec<(usize, usize)>,
}

impl<'a> Panels<'a> {
    fn new(meshes: &'a [SurfaceMesh]) -> Self {
        let index = meshes
            .iter()
            .enumerate()
            .flat_map(|(m, mesh)| (0..mesh.len()).map(move |t| (m, t)))
            .collect();
        Panels { meshes, index }
    }

    fn len(&self) -> usize {
        self.index.len()
    }

    fn centroid(&self, g: usize) -> Point {
        let (m, t) = self.index[g];
        self.meshes[m].centroids()[t]
    }

    fn area(&self, g: usize) -> f64 {
        let (m, t) = self.index[g];
        self.meshes[m].areas()[t]
    }

    fn diameter(&self, g: usize) -> f64 {
        let (m, t) = self.index[g];
        self.meshes[m].diameters()[t]
    }

    fn triangle(&self, g: usize) -> [Point; 3] {
        let (m, t) = self.index[g];
        self.meshes[m].triangle(t)
    }

    fn owner(&self, g: usize) -> usize {
        self.meshes[self.index[g].0].owner()
    }

    /// `∫_{T_q} -1/(4π|x - y|) dS(y)`
    fn kernel_integral(&self, x: &Point, q: usize) -> f64 {
        let centroid = self.centroid(q);
        let distance = (x - centroid).norm();
        if distance < NEAR_FIELD_DIAMETERS * self.diameter(q) {
            -triangle_inverse_distance_integral(x, &self.triangle(q)) / (4.0 * PI)
        } else {
            -self.area(q) / (4.0 * PI * distance)
        }
    }
}

/// Meshes every resonator of the array at the given refinement level.
pub fn mesh_array(array: &ResonatorArray, refinement: u32) -> Result<Vec<SurfaceMesh>> {
    let unknowns = array.len().saturating_mul(20usize << (2 * refinement.min(15)));
    if unknowns > MAX_UNKNOWNS {
        return Err(Error::invalid(format!(
            "{} resonators at refinement {refinement} give {unknowns} unknowns (limit {MAX_UNKNOWNS}); lower the refinement",
            array.len()
        )));
    }
    array
        .resonators()
        .iter()
        .enumerate()
        .map(|(i, s)| mesh_sphere(s.center, s.radius, refinement, i))
        .collect()
}

/// Assembles the collocation matrix over all triangles of `meshes`.
/// Columns are filled in parallel.
pub fn assemble_single_layer(meshes: &[SurfaceMesh]) -> Result<SingleLayerMatrix> {
    check_disjoint(meshes)?;
    let panels = Panels::new(meshes);
    let n = panels.len();
    let mut data = vec![0.0; n * n];
    data.par_chunks_mut(n.max(1)).enumerate().for_each(|(q, column)| {
        for (p, entry) in column.iter_mut().enumerate() {
            *entry = panels.kernel_integral(&panels.centroid(p), q);
        }
    });
    let areas = (0..n).map(|g| panels.area(g)).collect();
    Ok(SingleLayerMatrix { n, data, areas })
}

fn check_disjoint(meshes: &[SurfaceMesh]) -> Result<()> {
    let bounds: Vec<(Point, f64)> = meshes
        .iter()
        .map(|m| {
            let c = m.vertices().iter().sum::<Point>() / m.vertices().len() as f64;
            let r = m.vertices().iter().map(|v| (v - c).norm()).fold(0.0, f64::max);
            (c, r)
        })
        .collect();
    for i in 0..bounds.len() {
        for j in (i + 1)..bounds.len() {
            let distance = (bounds[i].0 - bounds[j].0).norm();
            let radius_sum = bounds[i].1 + bounds[j].1;
            if distance <= radius_sum {
                return Err(Error::Overlap {
                    first: i + 1,
                    second: j + 1,
                    distance,
                    radius_sum,
                });
            }
        }
    }
    Ok(())
}

/// Layer densities `ψ_j = S^{-1}[χ_{∂D_j}]` over the whole mesh collection.
#[derive(Debug, Clone)]
pub struct DensitySet {
    psi: Vec<Vec<f64>>,
    meshes: Vec<SurfaceMesh>,
    residual: f64,
}

impl DensitySet {
    /// `psi()[j][g]` is the density of `ψ_j` on global triangle `g`.
    pub fn psi(&self) -> &[Vec<f64>] {
        &self.psi
    }

    pub fn meshes(&self) -> &[SurfaceMesh] {
        &self.meshes
    }

    /// Largest `‖Sψ_j - χ_j‖∞` over `j`.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn resonator_count(&self) -> usize {
        self.psi.len()
    }
}

/// Solves `S ψ_j = χ_{∂D_j}` for every resonator with one LU factorization.
pub fn solve_densities(matrix: &SingleLayerMatrix, meshes: &[SurfaceMesh]) -> Result<DensitySet> {
    let panels = Panels::new(meshes);
    let n = panels.len();
    if n != matrix.dim() {
        return Err(Error::DimensionMismatch {
            expected: matrix.dim(),
            actual: n,
        });
    }
    let resonators = meshes.iter().map(|m| m.owner() + 1).max().unwrap_or(0);
    let indicator = Mat::<f64>::from_fn(n, resonators, |g, j| if panels.owner(g) == j { 1.0 } else { 0.0 });

    let lu = matrix.as_faer().partial_piv_lu();
    let pivots = lu.U().diagonal();
    let (mut largest, mut smallest) = (0.0f64, f64::INFINITY);
    for k in 0..n {
        let p = pivots[k].abs();
        largest = largest.max(p);
        smallest = smallest.min(p);
    }
    let condition = largest / smallest;
    if !(condition.is_finite() && condition < MAX_PIVOT_RATIO) {
        return Err(Error::IllConditioned { condition });
    }
    let solution = lu.solve(&indicator);

    let mut psi = Vec::with_capacity(resonators);
    let mut residual = 0.0f64;
    for j in 0..resonators {
        let column: Vec<f64> = (0..n).map(|g| solution[(g, j)]).collect();
        if column.iter().any(|x| !x.is_finite()) {
            return Err(Error::IllConditioned { condition });
        }
        let applied = matrix.matvec(&column);
        for (g, value) in applied.iter().enumerate() {
            residual = residual.max((value - indicator[(g, j)]).abs());
        }
        psi.push(column);
    }
    Ok(DensitySet {
        psi,
        meshes: meshes.to_vec(),
        residual,
    })
}

/// Boundary-element capacitance matrix and its diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct BemCapacitance {
    /// Symmetrized capacitance matrix `(C + Cᵀ)/2`.
    pub matrix: DMatrix<f64>,
    /// Capacitance matrix before symmetrization.
    pub raw: DMatrix<f64>,
    /// `‖C - Cᵀ‖_F / ‖C‖_F` of the raw matrix.
    pub asymmetry: f64,
    pub refinement: u32,
    pub triangles: usize,
    /// Largest solver residual `‖Sψ_j - χ_j‖∞`.
    pub residual: f64,
    #[serde(skip)]
    pub densities: DensitySet,
}

/// `C_ij = -Σ_{t ⊂ ∂D_i} area(t) ψ_j(t)`, symmetrized.
pub fn capacitance_from_densities(densities: &DensitySet) -> (DMatrix<f64>, DMatrix<f64>, f64) {
    let panels = Panels::new(&densities.meshes);
    let n = densities.resonator_count();
    let mut raw = DMatrix::zeros(n, n);
    for (j, psi_j) in densities.psi.iter().enumerate() {
        for (g, value) in psi_j.iter().enumerate() {
            raw[(panels.owner(g), j)] -= panels.area(g) * value;
        }
    }
    let asymmetry = (&raw - raw.transpose()).norm() / raw.norm();
    let symmetric = (&raw + raw.transpose()) * 0.5;
    (symmetric, raw, asymmetry)
}

pub fn capacitance_matrix_bem(array: &ResonatorArray, refinement: u32) -> Result<BemCapacitance> {
    let meshes = mesh_array(array, refinement)?;
    let matrix = assemble_single_layer(&meshes)?;
    let densities = solve_densities(&matrix, &meshes)?;
    let (symmetric, raw, asymmetry) = capacitance_from_densities(&densities);
    Ok(BemCapacitance {
        matrix: symmetric,
        raw,
        asymmetry,
        refinement,
        triangles: matrix.dim(),
        residual: densities.residual(),
        densities,
    })
}

/// Richardson-extrapolated capacitance from refinements `r - 1` and `r`.
///
/// The flat-panel error is `O(h²)` and `h` halves per refinement level, so
/// `(4 C_r - C_{r-1}) / 3` cancels the leading discretization term.
pub fn capacitance_matrix_bem_extrapolated(array: &ResonatorArray, refinement: u32) -> Result<DMatrix<f64>> {
    if refinement == 0 {
        return Err(Error::invalid("extrapolation needs refinement >= 1"));
    }
    let coarse = capacitance_matrix_bem(array, refinement - 1)?;
    let fine = capacitance_matrix_bem(array, refinement)?;
    Ok((fine.matrix * 4.0 - coarse.matrix) / 3.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PotentialSample {
    pub value: f64,
    /// The point lies within one triangle diameter of the surface, where
    /// centroid quadrature is inaccurate.
    pub near_surface: bool,
}

/// `Σ_i w_i S[ψ_i](x)` using centroid quadrature on every triangle.
pub fn evaluate_potential(densities: &DensitySet, weights: &[f64], point: &Point) -> Result<PotentialSample> {
    if weights.len() != densities.resonator_count() {
        return Err(Error::DimensionMismatch {
            expected: densities.resonator_count(),
            actual: weights.len(),
        });
    }
    let panels = Panels::new(&densities.meshes);
    let mut value = 0.0;
    let mut near_surface = false;
    for g in 0..panels.len() {
        let distance = (point - panels.centroid(g)).norm();
        if distance < panels.diameter(g) {
            near_surface = true;
        }
        let density: f64 = weights.iter().zip(&densities.psi).map(|(w, psi)| w * psi[g]).sum();
        value -= panels.area(g) * density / (4.0 * PI * distance);
    }
    Ok(PotentialSample { value, near_surface })
}
