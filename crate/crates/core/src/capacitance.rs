//! Generalized capacitance matrices `𝒞 = VCV`.
//!
//! `C` is the capacitance matrix (meters) and `V = diag(1/√|D_i|)` the
//! volume scaling. `C` comes either from the boundary-element solver or from
//! the dilute closed form; both are stored next to `𝒞` because the radiative
//! coefficients need `C` and `V` separately.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bem;
use crate::error::{Error, Result};
use crate::geometry::{Point, ResonatorArray};

/// Capacitance of a sphere, `4πr`.
pub fn sphere_capacitance(radius: f64) -> Result<f64> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::invalid(format!("radius must be > 0, got {radius}")));
    }
    Ok(4.0 * PI * radius)
}

pub fn sphere_volume(radius: f64) -> f64 {
    4.0 / 3.0 * PI * radius.powi(3)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum GcmSource {
    Bem {
        refinement: u32,
    },
    /// Richardson extrapolation of refinements `refinement - 1` and `refinement`.
    BemExtrapolated {
        refinement: u32,
    },
    Dilute {
        epsilon: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedCapacitanceMatrix {
    values: DMatrix<f64>,
    source: GcmSource,
    labels: Vec<usize>,
    capacitance: DMatrix<f64>,
    volume_scaling: DVector<f64>,
}

impl GeneralizedCapacitanceMatrix {
    /// Builds `VCV` from a capacitance matrix and the diagonal of `V`. The
    /// result is made exactly symmetric.
    pub fn from_parts(
        capacitance: DMatrix<f64>,
        volume_scaling: DVector<f64>,
        source: GcmSource,
        labels: Vec<usize>,
    ) -> Result<Self> {
        let n = capacitance.nrows();
        if capacitance.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: capacitance.ncols(),
            });
        }
        for len in [volume_scaling.len(), labels.len()] {
            if len != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: len,
                });
            }
        }
        let mut values = DMatrix::from_fn(n, n, |i, j| volume_scaling[i] * capacitance[(i, j)] * volume_scaling[j]);
        for i in 0..n {
            for j in (i + 1)..n {
                let mean = 0.5 * (values[(i, j)] + values[(j, i)]);
                values[(i, j)] = mean;
                values[(j, i)] = mean;
            }
        }
        if let Some(i) = (0..n).find(|&i| !(values[(i, i)] > 0.0)) {
            return Err(Error::invalid(format!(
                "generalized capacitance diagonal {} is not positive ({})",
                i + 1,
                values[(i, i)]
            )));
        }
        Ok(GeneralizedCapacitanceMatrix {
            values,
            source,
            labels,
            capacitance,
            volume_scaling,
        })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn source(&self) -> GcmSource {
        self.source
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// The underlying capacitance matrix `C`.
    pub fn capacitance(&self) -> &DMatrix<f64> {
        &self.capacitance
    }

    /// Diagonal of the volume scaling matrix `V`.
    pub fn volume_scaling(&self) -> &DVector<f64> {
        &self.volume_scaling
    }

    pub fn volume_scaling_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.volume_scaling)
    }

    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    /// `V C J C V`.
    pub fn ones_interaction(&self) -> DMatrix<f64> {
        ones_interaction(&self.capacitance, &self.volume_scaling)
    }

    /// The asymmetric form `V²C`, similar to `VCV`.
    pub fn asymmetric_form(&self) -> DMatrix<f64> {
        let v2 = self.volume_scaling.map(|v| v * v);
        DMatrix::from_diagonal(&v2) * &self.capacitance
    }

    /// Deletes the rows and columns at the given 1-based positions.
    pub fn principal_submatrix(&self, removed: &[usize]) -> Result<Self> {
        let n = self.dim();
        if removed.is_empty() {
            return Err(Error::invalid("removal set must be nonempty"));
        }
        if let Some(&bad) = removed.iter().find(|&&i| i == 0 || i > n) {
            return Err(Error::invalid(format!("removal index {bad} outside 1..={n}")));
        }
        let keep: Vec<usize> = (0..n).filter(|i| !removed.contains(&(i + 1))).collect();
        if keep.is_empty() {
            return Err(Error::invalid("cannot remove every resonator"));
        }
        let pick = |m: &DMatrix<f64>| DMatrix::from_fn(keep.len(), keep.len(), |a, b| m[(keep[a], keep[b])]);
        Ok(GeneralizedCapacitanceMatrix {
            values: pick(&self.values),
            source: self.source,
            labels: keep.iter().map(|&i| self.labels[i]).collect(),
            capacitance: pick(&self.capacitance),
            volume_scaling: DVector::from_iterator(keep.len(), keep.iter().map(|&i| self.volume_scaling[i])),
        })
    }
}

/// `V C J C V` with `J` the all-ones matrix and `V` given by its diagonal.
pub fn ones_interaction(capacitance: &DMatrix<f64>, volume_scaling: &DVector<f64>) -> DMatrix<f64> {
    let n = capacitance.nrows();
    let v = DMatrix::from_diagonal(volume_scaling);
    let ones = DMatrix::from_element(n, n, 1.0);
    &v * capacitance * ones * capacitance * &v
}

fn volume_scaling_of(array: &ResonatorArray) -> DVector<f64> {
    volume_scaling_for(&array.radii())
}

/// Dilute capacitance matrix in the array's dilute frame: diagonal
/// `Cap_{B_i}`, off-diagonal `-ε Cap_{B_i} Cap_{B_j} / (4π|z_i - z_j|)`.
pub fn dilute_capacitance(array: &ResonatorArray) -> Result<DMatrix<f64>> {
    let (epsilon, anchors) = array.dilute_frame();
    dilute_capacitance_from(epsilon, &anchors, &[], &array.radii())
}

/// Dilute capacitance matrix for anchors `z_i + β_i` (`offsets` may be
/// empty). Anchor differences are formed as `(z_i - z_j) + (β_i - β_j)` so a
/// common offset cancels exactly.
pub(crate) fn dilute_capacitance_from(
    epsilon: f64,
    anchors: &[Point],
    offsets: &[Point],
    radii: &[f64],
) -> Result<DMatrix<f64>> {
    let n = anchors.len();
    if radii.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: radii.len(),
        });
    }
    if !offsets.is_empty() && offsets.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: offsets.len(),
        });
    }
    let caps = radii
        .iter()
        .map(|&r| sphere_capacitance(r))
        .collect::<Result<Vec<_>>>()?;
    let mut c = DMatrix::zeros(n, n);
    for i in 0..n {
        c[(i, i)] = caps[i];
        for j in (i + 1)..n {
            let mut difference = anchors[i] - anchors[j];
            if !offsets.is_empty() {
                difference += offsets[i] - offsets[j];
            }
            let distance = difference.norm();
            if !(distance > 0.0) {
                return Err(Error::invalid(format!("anchors {} and {} coincide", i + 1, j + 1)));
            }
            let value = -epsilon * caps[i] * caps[j] / (4.0 * PI * distance);
            c[(i, j)] = value;
            c[(j, i)] = value;
        }
    }
    Ok(c)
}

pub(crate) fn volume_scaling_for(radii: &[f64]) -> DVector<f64> {
    DVector::from_iterator(radii.len(), radii.iter().map(|&r| 1.0 / sphere_volume(r).sqrt()))
}

/// Dilute generalized capacitance matrix `𝒞^ε`.
pub fn dilute_gcm(array: &ResonatorArray) -> Result<GeneralizedCapacitanceMatrix> {
    let (epsilon, _) = array.dilute_frame();
    GeneralizedCapacitanceMatrix::from_parts(
        dilute_capacitance(array)?,
        volume_scaling_of(array),
        GcmSource::Dilute { epsilon },
        array.labels().to_vec(),
    )
}

/// Boundary-element generalized capacitance matrix.
pub fn gcm_from_bem(array: &ResonatorArray, refinement: u32) -> Result<GeneralizedCapacitanceMatrix> {
    let bem = bem::capacitance_matrix_bem(array, refinement)?;
    GeneralizedCapacitanceMatrix::from_parts(
        bem.matrix,
        volume_scaling_of(array),
        GcmSource::Bem { refinement },
        array.labels().to_vec(),
    )
}

/// Boundary-element generalized capacitance matrix with Richardson
/// extrapolation over refinements `refinement - 1` and `refinement`.
pub fn gcm_from_bem_extrapolated(array: &ResonatorArray, refinement: u32) -> Result<GeneralizedCapacitanceMatrix> {
    let c = bem::capacitance_matrix_bem_extrapolated(array, refinement)?;
    GeneralizedCapacitanceMatrix::from_parts(
        c,
        volume_scaling_of(array),
        GcmSource::BemExtrapolated { refinement },
        array.labels().to_vec(),
    )
}
