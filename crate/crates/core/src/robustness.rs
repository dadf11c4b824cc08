//! Robustness of the resonant spectrum: perturbed dilute matrices and their
//! first-order corrections, eigenvalue perturbation bounds, removal and
//! interlacing, large-array localization and a Monte Carlo driver.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacitance::{
    dilute_capacitance_from, dilute_gcm, gcm_from_bem, sphere_capacitance, sphere_volume, GeneralizedCapacitanceMatrix,
};
use crate::error::{Error, Result};
use crate::geometry::{
    apply_perturbation, random_perturbation_with, Material, PerturbationKind, PerturbationSpec, Point, ResonatorArray,
};
use crate::spectral::{eigendecompose, spectrum, Spectrum};

/// Floating-point slack (relative to the matrix scale) granted to the exact
/// eigenvalue inequalities.
pub const EIGEN_SLACK: f64 = 1e-12;

/// Relative gap below which the first-order eigenvector formula is refused.
pub const GAP_TOL: f64 = 1e-8;

/// Exact perturbed dilute matrix together with the correction and its
/// first-order prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbedGcm {
    pub before: GeneralizedCapacitanceMatrix,
    pub after: GeneralizedCapacitanceMatrix,
    /// `after - before`.
    pub correction: DMatrix<f64>,
    pub first_order: DMatrix<f64>,
}

/// Dilute matrix of the array with radii `(1 + α_i) r_i`.
///
/// Diagonal entries scale by `(1 + α_i)^-2` and off-diagonal entries by
/// `((1 + α_i)(1 + α_j))^-1/2`. The first-order prediction is `-2α_i 𝒞_ii`
/// on the diagonal and `-(α_i + α_j) 𝒞_ij / 2` off it.
pub fn perturbed_gcm_size(array: &ResonatorArray, alphas: &[f64]) -> Result<PerturbedGcm> {
    let n = array.len();
    if alphas.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: alphas.len(),
        });
    }
    if let Some(i) = alphas.iter().position(|&a| !(a.is_finite() && a > -1.0)) {
        return Err(Error::invalid(format!("alpha_{} = {} must be > -1", i + 1, alphas[i])));
    }
    let before = dilute_gcm(array)?;
    let c = before.capacitance();
    let capacitance = DMatrix::from_fn(n, n, |i, j| {
        c[(i, j)] * (1.0 + alphas[i]) * if i == j { 1.0 } else { 1.0 + alphas[j] }
    });
    let volume_scaling = before
        .volume_scaling()
        .zip_map(&nalgebra::DVector::from_column_slice(alphas), |v, a| {
            v * (1.0 + a).powf(-1.5)
        });
    let after = GeneralizedCapacitanceMatrix::from_parts(
        capacitance,
        volume_scaling,
        before.source(),
        before.labels().to_vec(),
    )?;
    let g = before.values();
    let first_order = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            -2.0 * alphas[i] * g[(i, i)]
        } else {
            -0.5 * (alphas[i] + alphas[j]) * g[(i, j)]
        }
    });
    Ok(PerturbedGcm {
        correction: after.values() - before.values(),
        before,
        after,
        first_order,
    })
}

/// Dilute matrix with anchors moved to `z_i + β_i` (radii unchanged).
///
/// The first-order prediction of the off-diagonal change is
/// `ε (β_i - β_j)·(z_i - z_j) Cap_i Cap_j / (4π |z_i - z_j|³ √(|B_i||B_j|))`.
pub fn perturbed_gcm_position(array: &ResonatorArray, betas: &[Point]) -> Result<PerturbedGcm> {
    let n = array.len();
    if betas.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: betas.len(),
        });
    }
    if betas.iter().any(|b| b.iter().any(|x| !x.is_finite())) {
        return Err(Error::invalid("position perturbations must be finite"));
    }
    let before = dilute_gcm(array)?;
    let (epsilon, anchors) = array.dilute_frame();
    let radii = array.radii();
    let capacitance = dilute_capacitance_from(epsilon, &anchors, betas, &radii)?;
    let after = GeneralizedCapacitanceMatrix::from_parts(
        capacitance,
        before.volume_scaling().clone(),
        before.source(),
        before.labels().to_vec(),
    )?;
    let caps = radii
        .iter()
        .map(|&r| sphere_capacitance(r))
        .collect::<Result<Vec<_>>>()?;
    let v = before.volume_scaling();
    let first_order = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            return 0.0;
        }
        let z = anchors[i] - anchors[j];
        let d = z.norm();
        epsilon * (betas[i] - betas[j]).dot(&z) * caps[i] * caps[j] * v[i] * v[j] / (4.0 * PI * d.powi(3))
    });
    Ok(PerturbedGcm {
        correction: after.values() - before.values(),
        before,
        after,
        first_order,
    })
}

/// Ascending eigenvalues of two symmetric matrices compared against the
/// Wielandt–Hoffman and Weyl bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenvalueComparison {
    pub lambda_pairs: Vec<(f64, f64)>,
    /// `‖after - before‖_F`.
    pub frobenius: f64,
    /// `Σ (λ_n(after) - λ_n(before))²`.
    pub wh_lhs: f64,
    pub bound_ok: bool,
    /// `λ_n + λ_min(Δ) ≤ λ_n' ≤ λ_n + λ_max(Δ)` for every `n`.
    pub weyl_ok: bool,
    /// Absolute slack used by both checks.
    pub slack: f64,
}

/// Compares the spectra of `before` and `after`, pairing eigenvalues in
/// ascending order.
///
/// The inequalities are tested with slack `1e-12 · s²` (Wielandt–Hoffman)
/// and `1e-12 · s` (Weyl), where `s = max(‖before‖₂, ‖after‖₂)`, on top of a
/// relative `1e-12` on the Frobenius bound.
pub fn compare_eigenvalues(before: &DMatrix<f64>, after: &DMatrix<f64>) -> Result<EigenvalueComparison> {
    if before.shape() != after.shape() {
        return Err(Error::DimensionMismatch {
            expected: before.nrows(),
            actual: after.nrows(),
        });
    }
    let correction = after - before;
    let lb = eigendecompose(before)?.lambdas;
    let la = eigendecompose(after)?.lambdas;
    let lc = eigendecompose(&correction)?.lambdas;
    let scale = lb.amax().max(la.amax()).max(f64::MIN_POSITIVE);

    let lambda_pairs: Vec<(f64, f64)> = lb.iter().copied().zip(la.iter().copied()).collect();
    let frobenius = correction.norm();
    let wh_lhs = lambda_pairs.iter().map(|(b, a)| (a - b).powi(2)).sum::<f64>();
    let bound_ok = wh_lhs <= frobenius * frobenius * (1.0 + EIGEN_SLACK) + EIGEN_SLACK * scale * scale;

    let (cmin, cmax) = match lc.len() {
        0 => (0.0, 0.0),
        n => (lc[0], lc[n - 1]),
    };
    let weyl_slack = EIGEN_SLACK * scale;
    let weyl_ok = lambda_pairs
        .iter()
        .all(|&(b, a)| b + cmin - weyl_slack <= a && a <= b + cmax + weyl_slack);
    Ok(EigenvalueComparison {
        lambda_pairs,
        frobenius,
        wh_lhs,
        bound_ok,
        weyl_ok,
        slack: EIGEN_SLACK * scale * scale,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationReport {
    pub gcm_before: GeneralizedCapacitanceMatrix,
    pub gcm_after: GeneralizedCapacitanceMatrix,
    pub correction: DMatrix<f64>,
    pub lambda_pairs: Vec<(f64, f64)>,
    pub frobenius: f64,
    pub wh_lhs: f64,
    pub bound_ok: bool,
    pub weyl_ok: bool,
    pub omega_pairs: Vec<(Complex64, Complex64)>,
}

/// Wielandt–Hoffman and Weyl checks for a perturbation of `before`, plus the
/// paired resonant frequencies.
pub fn wielandt_hoffman_check(
    before: &GeneralizedCapacitanceMatrix,
    after: &GeneralizedCapacitanceMatrix,
    material: &Material,
) -> Result<PerturbationReport> {
    let comparison = compare_eigenvalues(before.values(), after.values())?;
    let sb = spectrum(before, material)?;
    let sa = spectrum(after, material)?;
    Ok(PerturbationReport {
        gcm_before: before.clone(),
        gcm_after: after.clone(),
        correction: after.values() - before.values(),
        lambda_pairs: comparison.lambda_pairs,
        frobenius: comparison.frobenius,
        wh_lhs: comparison.wh_lhs,
        bound_ok: comparison.bound_ok,
        weyl_ok: comparison.weyl_ok,
        omega_pairs: sb.omegas.into_iter().zip(sa.omegas).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyShifts {
    /// `|ω_n(D) - ω_n(D')|`.
    pub shifts: Vec<f64>,
    /// `Re ω_n(D') - Re ω_n(D)`.
    pub re_shifts: Vec<f64>,
    /// `√(δ (size + ε²))`.
    pub scale: f64,
    /// `shifts / scale` (infinite or NaN when the scale is zero).
    pub ratios: Vec<f64>,
}

/// Per-mode frequency shifts between two spectra and their ratio to
/// `√(δ(size + ε²))`, where `size` is the perturbation magnitude.
pub fn frequency_shift_bound(before: &Spectrum, after: &Spectrum, size: f64, epsilon: f64) -> Result<FrequencyShifts> {
    if before.len() != after.len() {
        return Err(Error::DimensionMismatch {
            expected: before.len(),
            actual: after.len(),
        });
    }
    let shifts: Vec<f64> = before
        .omegas
        .iter()
        .zip(&after.omegas)
        .map(|(b, a)| (a - b).norm())
        .collect();
    let re_shifts = before
        .omegas
        .iter()
        .zip(&after.omegas)
        .map(|(b, a)| a.re - b.re)
        .collect();
    let scale = (before.material.delta * (size.abs() + epsilon * epsilon)).sqrt();
    Ok(FrequencyShifts {
        ratios: shifts.iter().map(|s| s / scale).collect(),
        shifts,
        re_shifts,
        scale,
    })
}

/// First-order eigenvectors of `before + gamma` and their distance to the
/// exact ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigvecApproximation {
    /// `v_n + Σ_{k≠n} ⟨Γv_n, v_k⟩/(λ_n - λ_k) v_k` as columns (not renormalized).
    pub approx: DMatrix<f64>,
    /// Exact eigenvectors, each signed so that `⟨approx, exact⟩ ≥ 0`.
    pub exact: DMatrix<f64>,
    /// `‖approx_n - exact_n‖`.
    pub errors: Vec<f64>,
}

pub fn eigvec_first_order(before: &DMatrix<f64>, gamma: &DMatrix<f64>) -> Result<EigvecApproximation> {
    if before.shape() != gamma.shape() {
        return Err(Error::DimensionMismatch {
            expected: before.nrows(),
            actual: gamma.nrows(),
        });
    }
    let eig = eigendecompose(before)?;
    let n = eig.lambdas.len();
    let tolerance = GAP_TOL * eig.lambdas.amax();
    let gap = eig
        .lambdas
        .as_slice()
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    if gap < tolerance {
        return Err(Error::NearDegenerate { gap, tolerance });
    }
    let projected = eig.vectors.transpose() * gamma * &eig.vectors;
    let mut approx = eig.vectors.clone();
    for m in 0..n {
        for k in (0..n).filter(|&k| k != m) {
            let coefficient = projected[(k, m)] / (eig.lambdas[m] - eig.lambdas[k]);
            let column = eig.vectors.column(k) * coefficient;
            approx.column_mut(m).axpy(1.0, &column, 1.0);
        }
    }
    let mut exact = eigendecompose(&(before + gamma))?.vectors;
    let mut errors = Vec::with_capacity(n);
    for m in 0..n {
        if exact.column(m).dot(&approx.column(m)) < 0.0 {
            exact.column_mut(m).neg_mut();
        }
        errors.push((approx.column(m) - exact.column(m)).norm());
    }
    Ok(EigvecApproximation { approx, exact, errors })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterlacingViolation {
    /// Removal step (1-based) at which the inequality failed.
    pub step: usize,
    /// Eigenvalue index `j` (1-based) of the reduced matrix.
    pub j: usize,
    pub lower: f64,
    pub value: f64,
    pub upper: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterlacingReport {
    /// Removed positions (1-based, ascending) in the input matrix.
    pub removed: Vec<usize>,
    pub removed_labels: Vec<usize>,
    pub remaining_labels: Vec<usize>,
    pub lambda_full: Vec<f64>,
    pub lambda_reduced: Vec<f64>,
    pub interlaced: bool,
    pub violations: Vec<InterlacingViolation>,
    pub omega_real_full: Vec<f64>,
    pub omega_real_reduced: Vec<f64>,
    /// `Re ω_j(D) ≤ Re ω_j(D') ≤ Re ω_{j+k}(D)` up to `omega_slack`.
    pub omega_interlaced: bool,
    /// `δ · max τ` over both spectra.
    pub omega_slack: f64,
}

/// Removes resonators one at a time (highest position first) and checks that
/// each principal submatrix interlaces its parent.
pub fn removal_analysis(
    gcm: &GeneralizedCapacitanceMatrix,
    removed: &[usize],
    material: &Material,
) -> Result<InterlacingReport> {
    let n = gcm.dim();
    let mut sorted = removed.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != removed.len() {
        return Err(Error::invalid("removal indices must be distinct"));
    }
    if sorted.is_empty() {
        return Err(Error::invalid("removal set must be nonempty"));
    }
    if let Some(&bad) = sorted.iter().find(|&&i| i == 0 || i > n) {
        return Err(Error::invalid(format!("removal index {bad} outside 1..={n}")));
    }
    if sorted.len() == n {
        return Err(Error::invalid("cannot remove every resonator"));
    }

    let full = spectrum(gcm, material)?;
    let mut current = gcm.clone();
    let mut parent = full.lambdas.clone();
    let mut violations = Vec::new();
    for (step, &position) in sorted.iter().rev().enumerate() {
        current = current.principal_submatrix(&[position])?;
        let child = eigendecompose(current.values())?.lambdas;
        let slack = EIGEN_SLACK * parent.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        for (j, &mu) in child.iter().enumerate() {
            let (lower, upper) = (parent[j], parent[j + 1]);
            if mu < lower - slack || mu > upper + slack {
                violations.push(InterlacingViolation {
                    step: step + 1,
                    j: j + 1,
                    lower,
                    value: mu,
                    upper: Some(upper),
                });
            }
        }
        parent = child.iter().copied().collect();
    }
    let reduced = spectrum(&current, material)?;

    let k = sorted.len();
    let omega_slack = material.delta * full.taus.iter().chain(&reduced.taus).fold(0.0_f64, |m, &t| m.max(t));
    let omega_interlaced = reduced
        .omegas
        .iter()
        .enumerate()
        .all(|(j, w)| full.omegas[j].re <= w.re + omega_slack && w.re <= full.omegas[j + k].re + omega_slack);
    Ok(InterlacingReport {
        removed_labels: sorted.iter().map(|&i| gcm.labels()[i - 1]).collect(),
        remaining_labels: current.labels().to_vec(),
        removed: sorted,
        lambda_full: full.lambdas.clone(),
        lambda_reduced: reduced.lambdas.clone(),
        interlaced: violations.is_empty(),
        violations,
        omega_real_full: full.omegas.iter().map(|w| w.re).collect(),
        omega_real_reduced: reduced.omegas.iter().map(|w| w.re).collect(),
        omega_interlaced,
        omega_slack,
    })
}

/// Removal analysis for boundary-element matrices, where the capacitance of
/// the reduced geometry is not exactly a submatrix of the full one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BemRemovalReport {
    /// Analysis of the principal submatrix of the full matrix.
    pub submatrix: InterlacingReport,
    /// Eigenvalues of the matrix recomputed on the reduced geometry.
    pub recomputed_lambdas: Vec<f64>,
    /// Whether the recomputed eigenvalues also interlace the full ones.
    pub recomputed_interlaced: bool,
    /// `‖𝒞(D') - principal submatrix‖_F`.
    pub discrepancy: f64,
    pub relative_discrepancy: f64,
}

pub fn removal_analysis_bem(array: &ResonatorArray, removed: &[usize], refinement: u32) -> Result<BemRemovalReport> {
    let material = *array.material();
    let full = gcm_from_bem(array, refinement)?;
    let submatrix = removal_analysis(&full, removed, &material)?;
    let spec = PerturbationSpec::Removal(removed.iter().copied().collect());
    let reduced_array = apply_perturbation(array, &spec)?;
    let recomputed = gcm_from_bem(&reduced_array, refinement)?;
    let principal = full.principal_submatrix(&submatrix.removed)?;
    let difference = recomputed.values() - principal.values();
    let recomputed_lambdas: Vec<f64> = eigendecompose(recomputed.values())?.lambdas.iter().copied().collect();
    let k = submatrix.removed.len();
    let lambda = &submatrix.lambda_full;
    let recomputed_interlaced = recomputed_lambdas
        .iter()
        .enumerate()
        .all(|(j, &mu)| lambda[j] <= mu && mu <= lambda[j + k]);
    Ok(BemRemovalReport {
        discrepancy: difference.norm(),
        relative_discrepancy: difference.norm() / principal.values().norm(),
        submatrix,
        recomputed_lambdas,
        recomputed_interlaced,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GershgorinReport {
    pub n: usize,
    pub c: f64,
    pub epsilon: f64,
    pub base_radius: f64,
    /// `ε (N-1) (Cap_B/4π) sup_{i≠j} |z_i - z_j|^-1`, required to be < 1.
    pub admissibility: f64,
    /// `2 Cap_B / |B|`.
    pub bound: f64,
    pub eigenvalues: Vec<f64>,
    /// Smallest left end and largest right end of the Gershgorin discs.
    pub disc_min: f64,
    pub disc_max: f64,
    pub violations: usize,
    pub all_inside: bool,
}

/// Anchors `z_j = (j · spacing, 0, 0)`, `j = 1..=n`.
pub fn equispaced_anchors(n: usize, spacing: f64) -> Vec<Point> {
    (1..=n).map(|j| Point::new(j as f64 * spacing, 0.0, 0.0)).collect()
}

/// Eigenvalues of the dilute matrix of identical spheres at `z_j / ε` with
/// `ε = c/N`, checked against `(0, 2 Cap_B / |B|)`.
pub fn gershgorin_large_array_check(base_radius: f64, anchors: &[Point], c: f64) -> Result<GershgorinReport> {
    let n = anchors.len();
    if n == 0 {
        return Err(Error::invalid("at least one anchor is required"));
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::invalid(format!("c must be > 0, got {c}")));
    }
    let cap = sphere_capacitance(base_radius)?;
    let volume = sphere_volume(base_radius);
    let epsilon = c / n as f64;
    let mut min_distance = f64::INFINITY;
    for i in 0..n {
        for j in (i + 1)..n {
            min_distance = min_distance.min((anchors[i] - anchors[j]).norm());
        }
    }
    if !(min_distance > 0.0) {
        return Err(Error::invalid("anchors must be distinct"));
    }
    let admissibility = if n == 1 {
        0.0
    } else {
        epsilon * (n - 1) as f64 * cap / (4.0 * PI) / min_distance
    };
    if admissibility >= 1.0 {
        return Err(Error::Inadmissible { value: admissibility });
    }
    let matrix = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            cap / volume
        } else {
            -epsilon * cap * cap / (4.0 * PI * volume * (anchors[i] - anchors[j]).norm())
        }
    });
    let (mut disc_min, mut disc_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n {
        let radius: f64 = (0..n).filter(|&j| j != i).map(|j| matrix[(i, j)].abs()).sum();
        disc_min = disc_min.min(matrix[(i, i)] - radius);
        disc_max = disc_max.max(matrix[(i, i)] + radius);
    }
    let bound = 2.0 * cap / volume;
    let eigenvalues: Vec<f64> = eigendecompose(&matrix)?.lambdas.iter().copied().collect();
    let violations = eigenvalues.iter().filter(|&&l| !(l > 0.0 && l < bound)).count();
    Ok(GershgorinReport {
        n,
        c,
        epsilon,
        base_radius,
        admissibility,
        bound,
        eigenvalues,
        disc_min,
        disc_max,
        violations,
        all_inside: violations == 0,
    })
}

/// Statistics for one `(σ, n)` cell of a size or position sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub sigma: f64,
    /// Mode index (1-based, ascending eigenvalue).
    pub n: usize,
    /// Mean of `|ω_n(D') - ω_n(D)|`.
    pub mean_shift: f64,
    /// Sample standard deviation of `|ω_n(D') - ω_n(D)|`.
    pub std_shift: f64,
    /// Sample standard deviation of `Re ω_n(D') - Re ω_n(D)`.
    pub std_re_shift: f64,
    pub wh_pass_rate: f64,
    pub weyl_pass_rate: f64,
    /// Mean and max of `‖approx - exact‖` for the first-order eigenvector
    /// (NaN when the unperturbed spectrum is near-degenerate).
    pub eigvec_error_mean: f64,
    pub eigvec_error_max: f64,
    pub valid_trials: usize,
    pub discarded_trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemovalTrial {
    pub trial: usize,
    pub removed: usize,
    pub interlaced: bool,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloTable {
    pub kind: PerturbationKind,
    pub trials: usize,
    pub seed: u64,
    pub rows: Vec<SweepRow>,
    /// One entry per trial for removal sweeps, empty otherwise.
    pub removals: Vec<RemovalTrial>,
}

impl MonteCarloTable {
    /// Fraction of removal trials with no interlacing violation.
    pub fn interlacing_pass_rate(&self) -> Option<f64> {
        if self.removals.is_empty() {
            return None;
        }
        Some(self.removals.iter().filter(|r| r.interlaced).count() as f64 / self.removals.len() as f64)
    }
}

/// Random-number stream of one trial. The stream depends only on the seed
/// and trial index, so every σ reuses the same standard normals.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

struct TrialOutcome {
    shifts: Vec<f64>,
    re_shifts: Vec<f64>,
    wh_ok: bool,
    weyl_ok: bool,
    eigvec_errors: Option<Vec<f64>>,
}

/// Seeded Monte Carlo sweep on the dilute model.
///
/// Size and position sweeps draw `σ·N(0,1)` perturbations; trials whose
/// perturbed array is invalid (overlap, non-positive radius) or whose matrix
/// is no longer positive definite are discarded and counted. Removal sweeps
/// ignore `sigmas` and delete one uniformly chosen resonator per trial.
pub fn monte_carlo_robustness(
    array: &ResonatorArray,
    kind: PerturbationKind,
    sigmas: &[f64],
    trials: usize,
    seed: u64,
) -> Result<MonteCarloTable> {
    if trials == 0 {
        return Err(Error::invalid("trials must be >= 1"));
    }
    let material = *array.material();
    let before = dilute_gcm(array)?;
    let base = spectrum(&before, &material)?;
    let n = array.len();

    if kind == PerturbationKind::Removal {
        if n < 2 {
            return Err(Error::invalid("removal needs at least two resonators"));
        }
        let removals = (0..trials)
            .into_par_iter()
            .map(|trial| {
                let removed = trial_rng(seed, trial).random_range(1..=n);
                let report = removal_analysis(&before, &[removed], &material)?;
                Ok(RemovalTrial {
                    trial,
                    removed,
                    interlaced: report.interlaced,
                    violations: report.violations.len(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        return Ok(MonteCarloTable {
            kind,
            trials,
            seed,
            rows: Vec::new(),
            removals,
        });
    }

    if sigmas.is_empty() {
        return Err(Error::invalid("at least one sigma is required"));
    }
    if let Some(s) = sigmas.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
        return Err(Error::invalid(format!("sigma must be >= 0, got {s}")));
    }
    let mut rows = Vec::with_capacity(sigmas.len() * n);
    for &sigma in sigmas {
        let outcomes = (0..trials)
            .into_par_iter()
            .map(|trial| {
                let mut rng = trial_rng(seed, trial);
                let spec = random_perturbation_with(kind, n, sigma, &mut rng)?;
                Ok(run_trial(array, &before, &base, &spec))
            })
            .collect::<Result<Vec<_>>>()?;
        let valid: Vec<&TrialOutcome> = outcomes.iter().flatten().collect();
        let discarded = trials - valid.len();
        let count = valid.len() as f64;
        let wh = valid.iter().filter(|o| o.wh_ok).count() as f64 / count;
        let weyl = valid.iter().filter(|o| o.weyl_ok).count() as f64 / count;
        for m in 0..n {
            let shifts: Vec<f64> = valid.iter().map(|o| o.shifts[m]).collect();
            let re_shifts: Vec<f64> = valid.iter().map(|o| o.re_shifts[m]).collect();
            let errors: Vec<f64> = valid
                .iter()
                .filter_map(|o| o.eigvec_errors.as_ref().map(|e| e[m]))
                .collect();
            rows.push(SweepRow {
                sigma,
                n: m + 1,
                mean_shift: mean(&shifts),
                std_shift: sample_std(&shifts),
                std_re_shift: sample_std(&re_shifts),
                wh_pass_rate: wh,
                weyl_pass_rate: weyl,
                eigvec_error_mean: mean(&errors),
                eigvec_error_max: errors.iter().copied().fold(f64::NAN, f64::max),
                valid_trials: valid.len(),
                discarded_trials: discarded,
            });
        }
    }
    Ok(MonteCarloTable {
        kind,
        trials,
        seed,
        rows,
        removals: Vec::new(),
    })
}

fn run_trial(
    array: &ResonatorArray,
    before: &GeneralizedCapacitanceMatrix,
    base: &Spectrum,
    spec: &PerturbationSpec,
) -> Option<TrialOutcome> {
    let perturbed = apply_perturbation(array, spec).ok()?;
    let after = dilute_gcm(&perturbed).ok()?;
    let shifted = spectrum(&after, array.material()).ok()?;
    let comparison = compare_eigenvalues(before.values(), after.values()).ok()?;
    let correction = after.values() - before.values();
    let eigvec_errors = eigvec_first_order(before.values(), &correction).ok().map(|e| e.errors);
    Some(TrialOutcome {
        shifts: base
            .omegas
            .iter()
            .zip(&shifted.omegas)
            .map(|(a, b)| (b - a).norm())
            .collect(),
        re_shifts: base
            .omegas
            .iter()
            .zip(&shifted.omegas)
            .map(|(a, b)| b.re - a.re)
            .collect(),
        wh_ok: comparison.bound_ok,
        weyl_ok: comparison.weyl_ok,
        eigvec_errors,
    })
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_std(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => f64::NAN,
        1 => 0.0,
        len => {
            let m = mean(xs);
            (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (len - 1) as f64).sqrt()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_dilute_array;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn unit() -> Material {
        Material::nondimensional(1e-3)
    }

    /// Two unit spheres with `𝒞 = [[3, -0.03], [-0.03, 3]]`.
    fn pair() -> ResonatorArray {
        make_dilute_array(&[Point::zeros(), Point::new(10.0, 0.0, 0.0)], &[1.0, 1.0], 0.1, unit()).unwrap()
    }

    /// Three collinear unit spheres, off-diagonals -0.03, -0.03, -0.015.
    fn triple() -> ResonatorArray {
        let anchors = [Point::zeros(), Point::new(10.0, 0.0, 0.0), Point::new(20.0, 0.0, 0.0)];
        make_dilute_array(&anchors, &[1.0; 3], 0.1, unit()).unwrap()
    }

    fn graded(n: usize) -> ResonatorArray {
        let anchors: Vec<Point> = (0..n).map(|i| Point::new(i as f64, 0.0, 0.0)).collect();
        let radii: Vec<f64> = (0..n).map(|i| 1.0 + 0.08 * i as f64).collect();
        make_dilute_array(&anchors, &radii, 0.05, unit()).unwrap()
    }

    fn sym(values: &[f64], n: usize) -> DMatrix<f64> {
        DMatrix::from_row_slice(n, n, values)
    }

    #[test]
    fn size_exact_scaling_example() {
        let p = perturbed_gcm_size(&pair(), &[0.01, 0.01]).unwrap();
        assert_relative_eq!(p.before.values()[(0, 0)], 3.0, max_relative = 1e-14);
        assert_relative_eq!(p.before.values()[(0, 1)], -0.03, max_relative = 1e-14);
        assert_relative_eq!(p.after.values()[(0, 0)], 3.0 / (1.01 * 1.01), max_relative = 1e-14);
        assert_relative_eq!(p.after.values()[(1, 1)], 2.940888148220763, max_relative = 1e-14);
        assert_relative_eq!(p.after.values()[(0, 1)], -0.03 / 1.01, max_relative = 1e-14);
    }

    #[test]
    fn size_zero_alpha_gives_zero_correction() {
        let p = perturbed_gcm_size(&graded(5), &[0.0; 5]).unwrap();
        assert_eq!(p.correction, DMatrix::zeros(5, 5));
        assert_eq!(p.first_order, DMatrix::zeros(5, 5));
    }

    #[test]
    fn size_rejects_collapsed_radius() {
        assert!(perturbed_gcm_size(&pair(), &[-1.0, 0.0]).is_err());
        assert!(perturbed_gcm_size(&pair(), &[0.1]).is_err());
    }

    #[test]
    fn size_matches_rebuilt_array() {
        let array = graded(6);
        let alphas = [0.03, -0.02, 0.05, 0.0, -0.04, 0.01];
        let p = perturbed_gcm_size(&array, &alphas).unwrap();
        let rebuilt =
            dilute_gcm(&apply_perturbation(&array, &PerturbationSpec::Size(alphas.to_vec())).unwrap()).unwrap();
        assert!((p.after.values() - rebuilt.values()).amax() < 1e-12 * rebuilt.values().amax());
    }

    #[test]
    fn size_first_order_residual_is_quadratic() {
        let array = graded(6);
        let pattern = [0.3, -0.7, 1.0, 0.2, -0.4, 0.9];
        let residual = |scale: f64| {
            let alphas: Vec<f64> = pattern.iter().map(|p| p * scale).collect();
            let p = perturbed_gcm_size(&array, &alphas).unwrap();
            (&p.correction - &p.first_order).norm() / (scale * scale)
        };
        let r = [residual(1e-1), residual(1e-2), residual(1e-3)];
        assert!((r[1] / r[2] - 1.0).abs() < 0.05, "{r:?}");
        assert!((r[0] / r[1] - 1.0).abs() < 0.5, "{r:?}");
    }

    #[test]
    fn equal_dilation_scales_diagonal_exactly() {
        let array = graded(4);
        let p = perturbed_gcm_size(&array, &[0.1; 4]).unwrap();
        for i in 0..4 {
            assert_relative_eq!(
                p.after.values()[(i, i)],
                p.before.values()[(i, i)] / 1.21,
                max_relative = 1e-14
            );
            for j in 0..4 {
                if i != j {
                    assert_relative_eq!(
                        p.after.values()[(i, j)],
                        p.before.values()[(i, j)] / 1.1,
                        max_relative = 1e-14
                    );
                }
            }
        }
    }

    #[test]
    fn position_example() {
        let b = [Point::zeros(), Point::new(0.1, 0.0, 0.0)];
        let p = perturbed_gcm_position(&pair(), &b).unwrap();
        assert_relative_eq!(p.after.values()[(0, 1)], -3.0 / 101.0, max_relative = 1e-14);
        assert_eq!(p.after.values()[(0, 0)], p.before.values()[(0, 0)]);
    }

    #[test]
    fn rigid_translation_is_exactly_zero() {
        let shift = Point::new(0.123, -4.56, 7.89);
        let p = perturbed_gcm_position(&graded(7), &[shift; 7]).unwrap();
        assert_eq!(p.correction, DMatrix::zeros(7, 7));
        assert_eq!(p.first_order, DMatrix::zeros(7, 7));
    }

    #[test]
    fn orthogonal_displacement_has_no_first_order_term() {
        let b = [Point::zeros(), Point::new(0.0, 0.3, -0.2)];
        let p = perturbed_gcm_position(&pair(), &b).unwrap();
        assert_eq!(p.first_order[(0, 1)], 0.0);
        assert!(p.correction[(0, 1)] != 0.0);
    }

    #[test]
    fn position_coincident_anchor_rejected() {
        let b = [Point::zeros(), Point::new(-10.0, 0.0, 0.0)];
        assert!(perturbed_gcm_position(&pair(), &b).is_err());
    }

    #[test]
    fn position_first_order_residual_is_quadratic() {
        let array = graded(5);
        let dirs = [
            Point::new(0.3, -0.1, 0.2),
            Point::new(-0.5, 0.4, 0.0),
            Point::new(0.1, 0.1, -0.6),
            Point::new(0.7, 0.0, 0.3),
            Point::new(-0.2, -0.3, 0.1),
        ];
        let residual = |scale: f64| {
            let b: Vec<Point> = dirs.iter().map(|d| d * scale).collect();
            let p = perturbed_gcm_position(&array, &b).unwrap();
            (&p.correction - &p.first_order).norm() / (scale * scale)
        };
        let (a, b, c) = (residual(1e-2), residual(1e-3), residual(1e-4));
        assert!((b / c - 1.0).abs() < 0.05 && (a / b - 1.0).abs() < 0.5, "{a} {b} {c}");
    }

    #[test]
    fn wielandt_hoffman_identity() {
        let m = sym(&[3.0, -0.03, -0.03, 3.0], 2);
        let c = compare_eigenvalues(&m, &m).unwrap();
        assert_eq!(c.wh_lhs, 0.0);
        assert_eq!(c.frobenius, 0.0);
        assert!(c.bound_ok && c.weyl_ok);
    }

    #[test]
    fn diagonal_correction_is_equality_case() {
        let before = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0, 3.0]));
        let d = [0.05, -0.02, 0.01];
        let after = &before + DMatrix::from_diagonal(&nalgebra::DVector::from_vec(d.to_vec()));
        let c = compare_eigenvalues(&before, &after).unwrap();
        for ((b, a), di) in c.lambda_pairs.iter().zip(d) {
            assert_relative_eq!(a - b, di, epsilon = 1e-15);
        }
        assert_relative_eq!(c.wh_lhs, c.frobenius * c.frobenius, max_relative = 1e-12);
        assert!(c.bound_ok);
    }

    #[test]
    fn wielandt_hoffman_random_size_trials() {
        let array = graded(10);
        let before = dilute_gcm(&array).unwrap();
        for trial in 0..100 {
            let spec = random_perturbation_with(PerturbationKind::Size, 10, 0.02, &mut trial_rng(7, trial)).unwrap();
            let PerturbationSpec::Size(alphas) = spec else {
                unreachable!()
            };
            let p = perturbed_gcm_size(&array, &alphas).unwrap();
            let report = wielandt_hoffman_check(&before, &p.after, &unit()).unwrap();
            assert!(report.bound_ok && report.weyl_ok, "trial {trial}");
            assert_eq!(report.omega_pairs.len(), 10);
        }
    }

    #[test]
    fn wielandt_hoffman_size_mismatch() {
        assert!(compare_eigenvalues(&DMatrix::identity(2, 2), &DMatrix::identity(3, 3)).is_err());
    }

    #[test]
    fn frequency_shifts_zero_for_same_array() {
        let s = spectrum(&dilute_gcm(&graded(4)).unwrap(), &unit()).unwrap();
        let f = frequency_shift_bound(&s, &s, 0.0, 0.05).unwrap();
        assert!(f.shifts.iter().all(|&x| x == 0.0));
        assert_relative_eq!(f.scale, (1e-3 * 0.0025f64).sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn frequency_shift_scaling() {
        // Re ω ∝ √λ and λ shifts linearly in α, so the Re shift itself is
        // linear in α and the ratio to √(δα) halves when α is quartered.
        let array = graded(5);
        let re_shift = |alpha: f64, delta: f64| {
            let material = Material::nondimensional(delta);
            let before = spectrum(&dilute_gcm(&array).unwrap(), &material).unwrap();
            let p = perturbed_gcm_size(&array, &[alpha; 5]).unwrap();
            let after = spectrum(&p.after, &material).unwrap();
            let f = frequency_shift_bound(&before, &after, alpha, 0.05).unwrap();
            f.re_shifts[0].abs()
        };
        let ratio_alpha = re_shift(0.04, 1e-3) / re_shift(0.01, 1e-3);
        assert!((ratio_alpha / 4.0 - 1.0).abs() < 0.5, "{ratio_alpha}");
        let ratio_delta = re_shift(0.01, 1e-3) / re_shift(0.01, 2.5e-4);
        assert_relative_eq!(ratio_delta, 2.0, max_relative = 1e-10);
    }

    #[test]
    fn eigvec_zero_and_commuting_perturbations() {
        let m = sym(&[3.0, -0.03, -0.015, -0.03, 3.0, -0.03, -0.015, -0.03, 3.0], 3);
        let e0 = eigvec_first_order(&m, &DMatrix::zeros(3, 3)).unwrap();
        let base = eigendecompose(&m).unwrap().vectors;
        assert!((&e0.approx - &base).amax() < 1e-15);
        let e1 = eigvec_first_order(&m, &(&m * 0.01)).unwrap();
        assert!((&e1.approx - &base).amax() < 1e-14);
        assert!(e1.errors.iter().all(|&e| e < 1e-12));
    }

    #[test]
    fn eigvec_two_by_two_coefficient() {
        let m = sym(&[3.0, -0.03, -0.03, 3.0], 2);
        let gamma = sym(&[0.001, 0.0, 0.0, 0.0], 2);
        let e = eigvec_first_order(&m, &gamma).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let c = 5e-4 / -0.06;
        assert_relative_eq!(c, -8.333333333333333e-3, max_relative = 1e-14);
        assert_relative_eq!(e.approx[(0, 0)], s + c * s, max_relative = 1e-13);
        assert_relative_eq!(e.approx[(1, 0)], s - c * s, max_relative = 1e-13);
    }

    #[test]
    fn eigvec_error_is_quadratic() {
        let m = sym(&[3.0, -0.03, -0.015, -0.03, 3.0, -0.03, -0.015, -0.03, 3.0], 3);
        let pattern = sym(&[0.4, 0.1, -0.2, 0.1, -0.3, 0.5, -0.2, 0.5, 0.2], 3);
        let err = |g: f64| eigvec_first_order(&m, &(&pattern * g)).unwrap().errors;
        let (a, b) = (err(1e-3), err(5e-4));
        for n in 0..3 {
            let ratio = a[n] / b[n];
            assert!((ratio / 4.0 - 1.0).abs() < 0.5, "mode {n}: {ratio}");
        }
    }

    #[test]
    fn eigvec_refuses_degenerate_spectrum() {
        let m = DMatrix::identity(3, 3) * 3.0;
        let err = eigvec_first_order(&m, &DMatrix::zeros(3, 3)).unwrap_err();
        assert!(matches!(err, Error::NearDegenerate { .. }));
    }

    #[test]
    fn removal_two_by_two() {
        let gcm = dilute_gcm(&pair()).unwrap();
        let r = removal_analysis(&gcm, &[2], &unit()).unwrap();
        assert_eq!(r.lambda_reduced.len(), 1);
        assert_relative_eq!(r.lambda_reduced[0], 3.0, max_relative = 1e-14);
        assert_relative_eq!(r.lambda_full[0], 2.97, max_relative = 1e-13);
        assert_relative_eq!(r.lambda_full[1], 3.03, max_relative = 1e-13);
        assert!(r.interlaced && r.omega_interlaced);
        assert_eq!(r.removed_labels, vec![2]);
        assert_eq!(r.remaining_labels, vec![1]);
    }

    #[test]
    fn removal_three_by_three() {
        let gcm = dilute_gcm(&triple()).unwrap();
        let r = removal_analysis(&gcm, &[2], &unit()).unwrap();
        assert_relative_eq!(r.lambda_reduced[0], 2.985, max_relative = 1e-13);
        assert_relative_eq!(r.lambda_reduced[1], 3.015, max_relative = 1e-13);
        assert_relative_eq!(r.lambda_full[0], 2.949415780150965, max_relative = 1e-12);
        assert!(r.lambda_full[0] <= 2.985 && 2.985 <= r.lambda_full[1]);
        assert!(r.lambda_full[1] <= 3.015 && 3.015 <= r.lambda_full[2]);
        assert!(r.interlaced);
    }

    #[test]
    fn removal_errors() {
        let gcm = dilute_gcm(&triple()).unwrap();
        assert!(removal_analysis(&gcm, &[], &unit()).is_err());
        assert!(removal_analysis(&gcm, &[4], &unit()).is_err());
        assert!(removal_analysis(&gcm, &[1, 1], &unit()).is_err());
        assert!(removal_analysis(&gcm, &[1, 2, 3], &unit()).is_err());
    }

    #[test]
    fn iterated_removal_keeps_labels() {
        let gcm = dilute_gcm(&graded(8)).unwrap();
        let r = removal_analysis(&gcm, &[6, 2, 4], &unit()).unwrap();
        assert_eq!(r.removed, vec![2, 4, 6]);
        assert_eq!(r.remaining_labels, vec![1, 3, 5, 7, 8]);
        assert!(r.interlaced && r.omega_interlaced);
        for (j, mu) in r.lambda_reduced.iter().enumerate() {
            assert!(r.lambda_full[j] <= *mu && *mu <= r.lambda_full[j + 3]);
        }
    }

    #[test]
    fn bem_removal_discrepancy_shrinks_with_separation() {
        let discrepancy = |spacing: f64| {
            let anchors = [
                Point::zeros(),
                Point::new(spacing, 0.0, 0.0),
                Point::new(2.0 * spacing, 0.0, 0.0),
            ];
            let array = make_dilute_array(&anchors, &[1.0, 1.2, 1.4], 1.0, unit()).unwrap();
            let r = removal_analysis_bem(&array, &[2], 1).unwrap();
            assert!(r.submatrix.interlaced);
            assert_eq!(r.recomputed_lambdas.len(), 2);
            r.relative_discrepancy
        };
        let (near, far) = (discrepancy(4.0), discrepancy(8.0));
        assert!(near > 0.0 && far < near, "{near} {far}");
    }

    #[test]
    fn gershgorin_single_sphere() {
        let r = gershgorin_large_array_check(1.0, &equispaced_anchors(1, 1.0), 0.5).unwrap();
        assert_relative_eq!(r.bound, 6.0, max_relative = 1e-15);
        assert_relative_eq!(r.eigenvalues[0], 3.0, max_relative = 1e-15);
        assert!(r.all_inside);
    }

    #[test]
    fn gershgorin_sweep() {
        for n in [10, 50, 100] {
            let r = gershgorin_large_array_check(1.0, &equispaced_anchors(n, 1.0), 0.5).unwrap();
            assert!(r.admissibility < 1.0);
            assert!(r.all_inside, "N = {n}");
            assert!(r.disc_min > 0.0 && r.disc_max < r.bound);
        }
    }

    #[test]
    fn gershgorin_matches_dilute_gcm() {
        let anchors = equispaced_anchors(6, 1.0);
        let r = gershgorin_large_array_check(1.0, &anchors, 0.5).unwrap();
        let array = make_dilute_array(&anchors, &[1.0; 6], 0.5 / 6.0, unit()).unwrap();
        let expected = eigendecompose(dilute_gcm(&array).unwrap().values()).unwrap().lambdas;
        for (a, b) in r.eigenvalues.iter().zip(expected.iter()) {
            assert_relative_eq!(a, b, max_relative = 1e-13);
        }
    }

    #[test]
    fn gershgorin_inadmissible() {
        let err = gershgorin_large_array_check(1.0, &equispaced_anchors(10, 1.0), 2.0).unwrap_err();
        let Error::Inadmissible { value } = err else {
            panic!("{err}")
        };
        assert_relative_eq!(value, 0.2 * 9.0, max_relative = 1e-14);
    }

    #[test]
    fn monte_carlo_zero_sigma() {
        let t = monte_carlo_robustness(&graded(5), PerturbationKind::Size, &[0.0], 10, 3).unwrap();
        assert_eq!(t.rows.len(), 5);
        for row in &t.rows {
            assert_eq!(row.mean_shift, 0.0);
            assert_eq!(row.std_shift, 0.0);
            assert_eq!(row.wh_pass_rate, 1.0);
            assert_eq!(row.weyl_pass_rate, 1.0);
            assert_eq!(row.valid_trials, 10);
        }
    }

    #[test]
    fn monte_carlo_std_grows_with_sigma() {
        for kind in [PerturbationKind::Size, PerturbationKind::Position] {
            let t = monte_carlo_robustness(&graded(10), kind, &[0.005, 0.01, 0.02], 100, 11).unwrap();
            for n in 1..=10 {
                let stds: Vec<f64> = t.rows.iter().filter(|r| r.n == n).map(|r| r.std_re_shift).collect();
                assert!(stds[0] < stds[1] && stds[1] < stds[2], "{kind:?} mode {n}: {stds:?}");
            }
            assert!(t.rows.iter().all(|r| r.wh_pass_rate == 1.0 && r.weyl_pass_rate == 1.0));
        }
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let a = monte_carlo_robustness(&graded(6), PerturbationKind::Position, &[0.01, 0.02], 20, 5).unwrap();
        let b = monte_carlo_robustness(&graded(6), PerturbationKind::Position, &[0.01, 0.02], 20, 5).unwrap();
        assert_eq!(a, b);
        let c = monte_carlo_robustness(&graded(6), PerturbationKind::Position, &[0.01, 0.02], 20, 6).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn monte_carlo_discards_overlaps() {
        // spheres of radius 0.1 at unit spacing: large sigma causes overlaps
        let anchors: Vec<Point> = (0..6).map(|i| Point::new(i as f64, 0.0, 0.0)).collect();
        let array = make_dilute_array(&anchors, &[0.1; 6], 1.0, unit()).unwrap();
        let t = monte_carlo_robustness(&array, PerturbationKind::Position, &[0.3], 50, 2).unwrap();
        assert!(t.rows[0].discarded_trials > 0);
        assert_eq!(t.rows[0].valid_trials + t.rows[0].discarded_trials, 50);
    }

    #[test]
    fn monte_carlo_removal_always_interlaces() {
        let t = monte_carlo_robustness(&graded(9), PerturbationKind::Removal, &[], 40, 1).unwrap();
        assert_eq!(t.removals.len(), 40);
        assert_eq!(t.interlacing_pass_rate(), Some(1.0));
        assert!(t.removals.iter().all(|r| (1..=9).contains(&r.removed)));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn interlacing_holds_for_random_arrays(
            radii in prop::collection::vec(0.5f64..2.0, 2..12),
            eps in 0.01f64..0.05,
            remove in 0usize..100,
        ) {
            let n = radii.len();
            let anchors: Vec<Point> = (0..n).map(|i| Point::new(i as f64, 0.0, 0.0)).collect();
            let array = make_dilute_array(&anchors, &radii, eps, unit()).unwrap();
            let gcm = dilute_gcm(&array).unwrap();
            let r = removal_analysis(&gcm, &[remove % n + 1], &unit()).unwrap();
            prop_assert!(r.interlaced);
            prop_assert!(r.omega_interlaced);
        }

        #[test]
        fn weyl_and_wielandt_hoffman_for_random_symmetric(
            entries in prop::collection::vec(-1.0f64..1.0, 36),
            delta in prop::collection::vec(-0.1f64..0.1, 36),
        ) {
            let a = DMatrix::from_row_slice(6, 6, &entries);
            let d = DMatrix::from_row_slice(6, 6, &delta);
            let before = &a + a.transpose();
            let after = &before + &d + d.transpose();
            let c = compare_eigenvalues(&before, &after).unwrap();
            prop_assert!(c.bound_ok);
            prop_assert!(c.weyl_ok);
        }
    }
}
