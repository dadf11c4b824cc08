//! Eigenpairs of the generalized capacitance matrix and the resulting
//! subwavelength resonant frequencies
//! `ω_n = √(δ v² λ_n) - i δ τ_n`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::capacitance::GeneralizedCapacitanceMatrix;
use crate::error::{Error, Result};
use crate::geometry::Material;

/// Relative tolerance under which two eigenvector components count as a tie
/// for the sign convention.
const SIGN_TIE_TOL: f64 = 1e-10;

/// Ascending eigenvalues with orthonormal eigenvectors as columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eigenpairs {
    pub lambdas: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

/// Symmetric eigendecomposition, sorted ascending. Each eigenvector is
/// signed so that its largest-magnitude component is positive (the lowest
/// index wins near-ties).
pub fn eigendecompose(matrix: &DMatrix<f64>) -> Result<Eigenpairs> {
    let n = matrix.nrows();
    if matrix.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: matrix.ncols(),
        });
    }
    if matrix.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    let scale = matrix.amax().max(f64::MIN_POSITIVE);
    if (matrix - matrix.transpose()).amax() > 1e-12 * scale {
        return Err(Error::invalid("matrix is not symmetric"));
    }
    let eig = SymmetricEigen::new(matrix.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));

    let lambdas = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(k).into_owned();
        canonical_sign(&mut v);
        vectors.set_column(col, &v);
    }
    Ok(Eigenpairs { lambdas, vectors })
}

fn canonical_sign(v: &mut DVector<f64>) {
    let largest = v.amax();
    if let Some(pivot) = v.iter().position(|x| x.abs() >= largest * (1.0 - SIGN_TIE_TOL)) {
        if v[pivot] < 0.0 {
            v.neg_mut();
        }
    }
}

/// Leading-order resonant spectrum of an array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// Eigenvalues `λ_n` of `𝒞`, ascending (1/m²).
    pub lambdas: Vec<f64>,
    /// Orthonormal eigenvectors `v_n` as columns.
    pub vectors: DMatrix<f64>,
    /// Radiative coefficients `τ_n` (1/s).
    pub taus: Vec<f64>,
    /// Complex resonant frequencies `ω_n` (rad/s).
    pub omegas: Vec<Complex64>,
    pub material: Material,
    /// Smallest gap between adjacent eigenvalues (0 for a single resonator).
    pub gap: f64,
    pub labels: Vec<usize>,
    volume_scaling: DVector<f64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    /// `Re(ω_n) / 2π` in Hz.
    pub fn frequencies_hz(&self) -> Vec<f64> {
        self.omegas.iter().map(|w| w.re / (2.0 * PI)).collect()
    }

    pub fn volume_scaling(&self) -> &DVector<f64> {
        &self.volume_scaling
    }

    /// Label of the resonator carrying the largest `|(v_n)_i|`, per mode.
    /// Ties go to the lower position.
    pub fn dominant_labels(&self) -> Vec<usize> {
        self.vectors
            .column_iter()
            .map(|v| {
                let mut best = 0;
                for i in 1..v.len() {
                    if v[i].abs() > v[best].abs() {
                        best = i;
                    }
                }
                self.labels[best]
            })
            .collect()
    }
}

/// Converts eigenpairs of `gcm` into resonant frequencies.
///
/// `τ_n = v²/(8π v₀) · v_nᵀ VCJCV v_n / ‖v_n‖²`.
pub fn resonant_frequencies(
    eig: &Eigenpairs,
    gcm: &GeneralizedCapacitanceMatrix,
    material: &Material,
) -> Result<Spectrum> {
    material.validate()?;
    let n = eig.lambdas.len();
    if gcm.dim() != n || eig.vectors.nrows() != n || eig.vectors.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: gcm.dim(),
            actual: n,
        });
    }
    if let Some(index) = eig.lambdas.iter().position(|&l| !(l > 0.0)) {
        return Err(Error::NonPositiveEigenvalue {
            index: index + 1,
            value: eig.lambdas[index],
        });
    }
    let interaction = gcm.ones_interaction();
    let prefactor = material.v * material.v / (8.0 * PI * material.v0);
    let mut taus = Vec::with_capacity(n);
    let mut omegas = Vec::with_capacity(n);
    for (k, &lambda) in eig.lambdas.iter().enumerate() {
        let v = eig.vectors.column(k);
        let quadratic = v.dot(&(&interaction * v)) / v.norm_squared();
        let tau = prefactor * quadratic;
        let re = (material.delta * material.v * material.v * lambda).sqrt();
        taus.push(tau);
        omegas.push(Complex64::new(re, -material.delta * tau));
    }
    let gap = eig
        .lambdas
        .as_slice()
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    Ok(Spectrum {
        lambdas: eig.lambdas.iter().copied().collect(),
        vectors: eig.vectors.clone(),
        taus,
        omegas,
        material: *material,
        gap: if gap.is_finite() { gap } else { 0.0 },
        labels: gcm.labels().to_vec(),
        volume_scaling: gcm.volume_scaling().clone(),
    })
}

/// Eigendecomposition followed by [`resonant_frequencies`].
pub fn spectrum(gcm: &GeneralizedCapacitanceMatrix, material: &Material) -> Result<Spectrum> {
    let eig = eigendecompose(gcm.values())?;
    resonant_frequencies(&eig, gcm, material)
}

/// Weights `V v_n` of the per-resonator potentials `S_D[ψ_i]` making up
/// mode `n` (1-based) at leading order.
pub fn mode_weights(spectrum: &Spectrum, n: usize) -> Result<DVector<f64>> {
    if n == 0 || n > spectrum.len() {
        return Err(Error::invalid(format!("mode index {n} outside 1..={}", spectrum.len())));
    }
    Ok(spectrum.volume_scaling.component_mul(&spectrum.vectors.column(n - 1)))
}
