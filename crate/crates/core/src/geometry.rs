//! Resonator arrays: explicit, graded and dilute layouts, plus the size,
//! position and removal perturbations applied to them.
//!
//! Every resonator is a sphere. A dilute array additionally carries its
//! anchor points `z_i` and the diluteness parameter `epsilon`, with centers
//! placed at `z_i / epsilon`. Arrays built without an explicit dilute frame
//! are treated as having `epsilon = 1` and anchors equal to their centers.

use nalgebra::Vector3;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use crate::error::{Error, Result};

pub type Point = Vector3<f64>;

/// Material constants shared by every resonator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Material {
    /// Density contrast rho / rho_0 (dimensionless).
    pub delta: f64,
    /// Wave speed inside the resonators (m/s).
    pub v: f64,
    /// Wave speed in the background medium (m/s).
    pub v0: f64,
}

impl Material {
    pub fn new(delta: f64, v: f64, v0: f64) -> Result<Self> {
        let m = Material { delta, v, v0 };
        m.validate()?;
        Ok(m)
    }

    /// Air bubbles in water, with contrast 1e-3.
    pub fn air_in_water() -> Self {
        Material {
            delta: 1e-3,
            v: 343.0,
            v0: 1480.0,
        }
    }

    /// Unit wave speeds, used for nondimensional studies.
    pub fn nondimensional(delta: f64) -> Self {
        Material { delta, v: 1.0, v0: 1.0 }
    }

    pub fn with_delta(self, delta: f64) -> Self {
        Material { delta, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [("delta", self.delta), ("v", self.v), ("v0", self.v0)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::invalid(format!("material.{name} must be > 0, got {value}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sphere {
    pub center: Point,
    pub radius: f64,
}

impl Sphere {
    pub fn volume(&self) -> f64 {
        4.0 / 3.0 * std::f64::consts::PI * self.radius.powi(3)
    }
}

/// An ordered collection of disjoint spherical resonators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonatorArray {
    resonators: Vec<Sphere>,
    epsilon: Option<f64>,
    reference_centers: Option<Vec<Point>>,
    material: Material,
    labels: Vec<usize>,
}

impl ResonatorArray {
    /// Builds an array from explicit spheres, labelled `1..=n`.
    pub fn from_spheres(resonators: Vec<Sphere>, material: Material) -> Result<Self> {
        let labels = (1..=resonators.len()).collect();
        let array = ResonatorArray {
            resonators,
            epsilon: None,
            reference_centers: None,
            material,
            labels,
        };
        array.validate()?;
        Ok(array)
    }

    pub fn len(&self) -> usize {
        self.resonators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.resonators.is_empty()
    }

    pub fn resonators(&self) -> &[Sphere] {
        &self.resonators
    }

    pub fn radii(&self) -> Vec<f64> {
        self.resonators.iter().map(|s| s.radius).collect()
    }

    pub fn centers(&self) -> Vec<Point> {
        self.resonators.iter().map(|s| s.center).collect()
    }

    pub fn epsilon(&self) -> Option<f64> {
        self.epsilon
    }

    pub fn reference_centers(&self) -> Option<&[Point]> {
        self.reference_centers.as_deref()
    }

    pub fn material(&self) -> &Material {
        &self.material
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn with_material(mut self, material: Material) -> Result<Self> {
        material.validate()?;
        self.material = material;
        Ok(self)
    }

    /// The dilute frame `(epsilon, anchors)`. Arrays without an explicit
    /// frame report `epsilon = 1` with anchors at the centers, for which the
    /// dilute formulas reduce to their physical-coordinate form.
    pub fn dilute_frame(&self) -> (f64, Vec<Point>) {
        match (self.epsilon, &self.reference_centers) {
            (Some(eps), Some(z)) => (eps, z.clone()),
            _ => (1.0, self.centers()),
        }
    }

    /// Re-expresses the array in a dilute frame with the given `epsilon`,
    /// keeping the physical geometry fixed (anchors become `epsilon * center`).
    pub fn with_dilute_frame(mut self, epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::invalid(format!("epsilon must be > 0, got {epsilon}")));
        }
        self.reference_centers = Some(self.resonators.iter().map(|s| s.center * epsilon).collect());
        self.epsilon = Some(epsilon);
        Ok(self)
    }

    /// Uniformly scales every length (centers and radii) by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::invalid(format!("scale factor must be > 0, got {factor}")));
        }
        let mut out = self.clone();
        for s in &mut out.resonators {
            s.center *= factor;
            s.radius *= factor;
        }
        if let (Some(eps), Some(z)) = (out.epsilon, out.reference_centers.as_mut()) {
            for (zi, s) in z.iter_mut().zip(&out.resonators) {
                *zi = s.center * eps;
            }
        }
        Ok(out)
    }

    fn validate(&self) -> Result<()> {
        self.material.validate()?;
        if self.resonators.is_empty() {
            return Err(Error::invalid("array must contain at least one resonator"));
        }
        if self.labels.len() != self.resonators.len() {
            return Err(Error::DimensionMismatch {
                expected: self.resonators.len(),
                actual: self.labels.len(),
            });
        }
        if self.labels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("labels must be strictly increasing"));
        }
        for (i, s) in self.resonators.iter().enumerate() {
            if !(s.radius.is_finite() && s.radius > 0.0) {
                return Err(Error::invalid(format!(
                    "resonator {} radius must be > 0, got {}",
                    i + 1,
                    s.radius
                )));
            }
            if !s.center.iter().all(|c| c.is_finite()) {
                return Err(Error::invalid(format!("resonator {} center is not finite", i + 1)));
            }
        }
        for i in 0..self.len() {
            for j in (i + 1)..self.len() {
                let a = &self.resonators[i];
                let b = &self.resonators[j];
                let distance = (a.center - b.center).norm();
                let radius_sum = a.radius + b.radius;
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
}

/// Collinear graded array along the x-axis.
///
/// Radius `i` (1-based) is `first_radius * growth^(i-1)` and the gap between
/// resonator `i` and `i+1` is `spacing * r_i`. The first center sits at the
/// origin.
pub fn make_graded_array(
    n: usize,
    first_radius: f64,
    growth: f64,
    spacing: f64,
    material: Material,
) -> Result<ResonatorArray> {
    if n == 0 {
        return Err(Error::invalid("graded.n must be >= 1"));
    }
    if !(first_radius.is_finite() && first_radius > 0.0) {
        return Err(Error::invalid(format!(
            "graded.first_radius must be > 0, got {first_radius}"
        )));
    }
    if !(growth.is_finite() && growth >= 1.0) {
        return Err(Error::invalid(format!("graded.growth must be >= 1, got {growth}")));
    }
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(Error::invalid(format!("graded.spacing must be > 0, got {spacing}")));
    }
    let mut spheres = Vec::with_capacity(n);
    let mut x = 0.0;
    let mut radius = first_radius;
    for i in 0..n {
        if i > 0 {
            let prev = radius;
            radius = prev * growth;
            x += prev + spacing * prev + radius;
        }
        spheres.push(Sphere {
            center: Point::new(x, 0.0, 0.0),
            radius,
        });
    }
    ResonatorArray::from_spheres(spheres, material)
}

/// First radius giving a graded array of the requested end-to-end length
/// (leftmost surface to rightmost surface).
pub fn graded_first_radius_for_length(n: usize, growth: f64, spacing: f64, length: f64) -> Result<f64> {
    if n == 0 || !(growth >= 1.0) || !(spacing > 0.0) || !(length > 0.0) {
        return Err(Error::invalid(
            "graded length solve needs n >= 1, growth >= 1, spacing > 0, length > 0",
        ));
    }
    // length = r0 * (2 * sum_{i<n} g^i + spacing * sum_{i<n-1} g^i)
    let mut diameters = 0.0;
    let mut gaps = 0.0;
    let mut g = 1.0;
    for i in 0..n {
        diameters += 2.0 * g;
        if i + 1 < n {
            gaps += spacing * g;
        }
        g *= growth;
    }
    Ok(length / (diameters + gaps))
}

/// Dilute array `D_i = B_i + z_i / epsilon` with spherical `B_i`.
pub fn make_dilute_array(
    anchors: &[Point],
    base_radii: &[f64],
    epsilon: f64,
    material: Material,
) -> Result<ResonatorArray> {
    if anchors.len() != base_radii.len() {
        return Err(Error::DimensionMismatch {
            expected: anchors.len(),
            actual: base_radii.len(),
        });
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::invalid(format!("dilute.epsilon must be > 0, got {epsilon}")));
    }
    for i in 0..anchors.len() {
        for j in (i + 1)..anchors.len() {
            if anchors[i] == anchors[j] {
                return Err(Error::invalid(format!(
                    "dilute.anchors {} and {} coincide",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    let spheres = anchors
        .iter()
        .zip(base_radii)
        .map(|(z, &r)| Sphere {
            center: z / epsilon,
            radius: r,
        })
        .collect::<Vec<_>>();
    let labels = (1..=spheres.len()).collect();
    let array = ResonatorArray {
        resonators: spheres,
        epsilon: Some(epsilon),
        reference_centers: Some(anchors.to_vec()),
        material,
        labels,
    };
    array.validate()?;
    Ok(array)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerturbationKind {
    Size,
    Position,
    Removal,
}

impl std::str::FromStr for PerturbationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "size" => Ok(Self::Size),
            "position" => Ok(Self::Position),
            "removal" => Ok(Self::Removal),
            other => Err(Error::invalid(format!("unknown perturbation kind '{other}'"))),
        }
    }
}

/// One perturbation of an array. Removal indices are 1-based positions in
/// the array being perturbed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PerturbationSpec {
    Size(Vec<f64>),
    Position(Vec<Point>),
    Removal(BTreeSet<usize>),
}

impl PerturbationSpec {
    pub fn kind(&self) -> PerturbationKind {
        match self {
            PerturbationSpec::Size(_) => PerturbationKind::Size,
            PerturbationSpec::Position(_) => PerturbationKind::Position,
            PerturbationSpec::Removal(_) => PerturbationKind::Removal,
        }
    }

    /// Largest |alpha_i| or |beta_i|; zero for removals.
    pub fn magnitude(&self) -> f64 {
        match self {
            PerturbationSpec::Size(a) => a.iter().fold(0.0, |m, x| m.max(x.abs())),
            PerturbationSpec::Position(b) => b.iter().fold(0.0, |m, x| m.max(x.norm())),
            PerturbationSpec::Removal(_) => 0.0,
        }
    }
}

/// Applies a perturbation, returning a new validated array.
pub fn apply_perturbation(array: &ResonatorArray, spec: &PerturbationSpec) -> Result<ResonatorArray> {
    let n = array.len();
    let mut out = array.clone();
    match spec {
        PerturbationSpec::Size(alphas) => {
            if alphas.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: alphas.len(),
                });
            }
            for (i, (s, &a)) in out.resonators.iter_mut().zip(alphas).enumerate() {
                if !(a.is_finite() && a > -1.0) {
                    return Err(Error::invalid(format!("alpha_{} = {a} must be > -1", i + 1)));
                }
                s.radius *= 1.0 + a;
            }
        }
        PerturbationSpec::Position(betas) => {
            if betas.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: betas.len(),
                });
            }
            match (out.epsilon, out.reference_centers.as_mut()) {
                (Some(eps), Some(z)) => {
                    for ((zi, s), b) in z.iter_mut().zip(out.resonators.iter_mut()).zip(betas) {
                        *zi += b;
                        s.center = *zi / eps;
                    }
                }
                _ => {
                    for (s, b) in out.resonators.iter_mut().zip(betas) {
                        s.center += b;
                    }
                }
            }
        }
        PerturbationSpec::Removal(removed) => {
            if removed.is_empty() {
                return Err(Error::invalid("removal set must be nonempty"));
            }
            if let Some(&bad) = removed.iter().find(|&&i| i == 0 || i > n) {
                return Err(Error::invalid(format!("removal index {bad} outside 1..={n}")));
            }
            if removed.len() == n {
                return Err(Error::invalid("cannot remove every resonator"));
            }
            let keep = |i: &usize| !removed.contains(&(i + 1));
            out.resonators = filter_by_index(&array.resonators, keep);
            out.labels = filter_by_index(&array.labels, keep);
            out.reference_centers = array.reference_centers.as_ref().map(|z| filter_by_index(z, keep));
        }
    }
    out.validate()?;
    Ok(out)
}

fn filter_by_index<T: Clone>(items: &[T], keep: impl Fn(&usize) -> bool) -> Vec<T> {
    items
        .iter()
        .enumerate()
        .filter(|(i, _)| keep(i))
        .map(|(_, x)| x.clone())
        .collect()
}

/// i.i.d. zero-mean Gaussian size or position perturbation drawn from `rng`.
pub fn random_perturbation_with<R: Rng + ?Sized>(
    kind: PerturbationKind,
    n: usize,
    sigma: f64,
    rng: &mut R,
) -> Result<PerturbationSpec> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::invalid(format!("sigma must be >= 0, got {sigma}")));
    }
    // scaled unit normals: sigma = 0 gives exact zeros
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    match kind {
        PerturbationKind::Size => Ok(PerturbationSpec::Size(
            (0..n).map(|_| sigma * normal.sample(rng)).collect(),
        )),
        PerturbationKind::Position => Ok(PerturbationSpec::Position(
            (0..n)
                .map(|_| {
                    Point::new(
                        sigma * normal.sample(rng),
                        sigma * normal.sample(rng),
                        sigma * normal.sample(rng),
                    )
                })
                .collect(),
        )),
        PerturbationKind::Removal => Err(Error::invalid(
            "random perturbations are Gaussian; removal has no Gaussian payload",
        )),
    }
}

/// Seeded variant of [`random_perturbation_with`].
pub fn random_perturbation(kind: PerturbationKind, n: usize, sigma: f64, seed: u64) -> Result<PerturbationSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_perturbation_with(kind, n, sigma, &mut rng)
}
