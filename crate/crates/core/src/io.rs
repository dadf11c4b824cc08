//! Array configuration files and the CSV formats used by the command-line
//! tool.
//!
//! Every CSV writer takes a `manifest` string that is written verbatim as
//! leading `# ` comment lines; readers skip such lines.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::de::{self, DeserializeOwned, Error as _};
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::filterbank::{BandGap, FrequencyResponse, Signal, TransformOutput};
use crate::geometry::{
    graded_first_radius_for_length, make_dilute_array, make_graded_array, Material, Point, ResonatorArray, Sphere,
};
use crate::robustness::{GershgorinReport, InterlacingReport, MonteCarloTable};
use crate::spectral::Spectrum;

/// Parses JSON, reporting the path of the offending key on failure
/// (`array.spheres[1]: missing field `radius``).
pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." {
            Error::invalid(format!("config: {inner}"))
        } else {
            Error::invalid(format!("config key `{path}`: {inner}"))
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaterialPreset {
    AirInWater,
    Nondimensional,
}

/// Material section: an optional preset with per-field overrides.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<MaterialPreset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v0: Option<f64>,
}

impl MaterialConfig {
    pub fn resolve(&self) -> Result<Material> {
        let base = match self.preset {
            Some(MaterialPreset::AirInWater) => Some(Material::air_in_water()),
            Some(MaterialPreset::Nondimensional) => Some(Material::nondimensional(1e-3)),
            None => None,
        };
        let field = |value: Option<f64>, fallback: Option<f64>, name: &str| {
            value
                .or(fallback)
                .ok_or_else(|| Error::invalid(format!("material.{name} is required when no preset is given")))
        };
        let m = Material {
            delta: field(self.delta, base.map(|b| b.delta), "delta")?,
            v: field(self.v, base.map(|b| b.v), "v")?,
            v0: field(self.v0, base.map(|b| b.v0), "v0")?,
        };
        m.validate()?;
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphereConfig {
    pub center: [f64; 3],
    pub radius: f64,
}

/// Explicit spheres in physical coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpheresConfig {
    pub spheres: Vec<SphereConfig>,
    /// Optional dilute frame: anchors become `epsilon * center`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

/// Collinear graded array; give exactly one of `first_radius`, `length`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradedConfig {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
    pub growth: f64,
    pub spacing: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

/// `D_i = B_i + z_i / epsilon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiluteConfig {
    pub anchors: Vec<[f64; 3]>,
    pub radii: Vec<f64>,
    pub epsilon: f64,
}

/// Geometry section, selected by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArrayConfig {
    Spheres(SpheresConfig),
    Graded(GradedConfig),
    Dilute(DiluteConfig),
}

// Dispatches on `kind` by hand: serde's tagged enums buffer their content
// and lose the path of nested errors.
impl<'de> Deserialize<'de> for ArrayConfig {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        fn variant<T: DeserializeOwned, E: de::Error>(value: serde_json::Value) -> std::result::Result<T, E> {
            serde_path_to_error::deserialize(value).map_err(|e| {
                let path = e.path().to_string();
                let inner = e.into_inner();
                if path == "." {
                    E::custom(inner)
                } else {
                    E::custom(format!("{path}: {inner}"))
                }
            })
        }
        let mut value = serde_json::Value::deserialize(deserializer)?;
        let object = value
            .as_object_mut()
            .ok_or_else(|| D::Error::custom("expected an object"))?;
        let kind = object.remove("kind").ok_or_else(|| D::Error::missing_field("kind"))?;
        const KINDS: &[&str] = &["spheres", "graded", "dilute"];
        match kind.as_str() {
            Some("spheres") => variant(value).map(ArrayConfig::Spheres),
            Some("graded") => variant(value).map(ArrayConfig::Graded),
            Some("dilute") => variant(value).map(ArrayConfig::Dilute),
            Some(other) => Err(D::Error::unknown_variant(other, KINDS)),
            None => Err(D::Error::custom("`kind` must be a string")),
        }
    }
}

impl ArrayConfig {
    pub fn build(&self, material: Material) -> Result<ResonatorArray> {
        match self {
            ArrayConfig::Spheres(SpheresConfig { spheres, epsilon }) => {
                if spheres.is_empty() {
                    return Err(Error::invalid("array.spheres must not be empty"));
                }
                for (i, s) in spheres.iter().enumerate() {
                    if s.center.iter().any(|x| !x.is_finite()) {
                        return Err(Error::invalid(format!("array.spheres[{i}].center must be finite")));
                    }
                    if !(s.radius.is_finite() && s.radius > 0.0) {
                        return Err(Error::invalid(format!(
                            "array.spheres[{i}].radius must be > 0, got {}",
                            s.radius
                        )));
                    }
                }
                let array = ResonatorArray::from_spheres(
                    spheres
                        .iter()
                        .map(|s| Sphere {
                            center: Point::from(s.center),
                            radius: s.radius,
                        })
                        .collect(),
                    material,
                )?;
                with_frame(array, *epsilon)
            }
            ArrayConfig::Graded(GradedConfig {
                n,
                first_radius,
                length,
                growth,
                spacing,
                epsilon,
            }) => {
                let r0 = match (first_radius, length) {
                    (Some(r), None) => *r,
                    (None, Some(l)) => graded_first_radius_for_length(*n, *growth, *spacing, *l)?,
                    _ => {
                        return Err(Error::invalid(
                            "array: give exactly one of `first_radius` and `length` for a graded array",
                        ))
                    }
                };
                with_frame(make_graded_array(*n, r0, *growth, *spacing, material)?, *epsilon)
            }
            ArrayConfig::Dilute(DiluteConfig {
                anchors,
                radii,
                epsilon,
            }) => {
                if anchors.is_empty() {
                    return Err(Error::invalid("array.anchors must not be empty"));
                }
                if anchors.len() != radii.len() {
                    return Err(Error::invalid(format!(
                        "array.anchors has {} entries but array.radii has {}",
                        anchors.len(),
                        radii.len()
                    )));
                }
                if let Some(i) = radii.iter().position(|r| !(r.is_finite() && *r > 0.0)) {
                    return Err(Error::invalid(format!(
                        "array.radii[{i}] must be > 0, got {}",
                        radii[i]
                    )));
                }
                let points: Vec<Point> = anchors.iter().map(|&z| Point::from(z)).collect();
                make_dilute_array(&points, radii, *epsilon, material)
            }
        }
    }
}

fn with_frame(array: ResonatorArray, epsilon: Option<f64>) -> Result<ResonatorArray> {
    match epsilon {
        Some(e) => array.with_dilute_frame(e),
        None => Ok(array),
    }
}

/// Writes `manifest` as `# `-prefixed lines.
pub fn write_manifest<W: Write>(w: &mut W, manifest: &str) -> Result<()> {
    for line in manifest.lines() {
        writeln!(w, "# {line}")?;
    }
    Ok(())
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).from_writer(w)
}

fn num(x: f64) -> String {
    format!("{x}")
}

/// Columns `n,dominant_label,lambda,tau,re_omega_rad_s,im_omega_rad_s,re_omega_hz`.
pub fn write_spectrum_csv<W: Write>(mut w: W, manifest: &str, spectrum: &Spectrum) -> Result<()> {
    write_manifest(&mut w, manifest)?;
    let mut out = csv_writer(w);
    out.write_record([
        "n",
        "dominant_label",
        "lambda",
        "tau",
        "re_omega_rad_s",
        "im_omega_rad_s",
        "re_omega_hz",
    ])?;
    let hz = spectrum.frequencies_hz();
    let dominant = spectrum.dominant_labels();
    for k in 0..spectrum.len() {
        out.write_record([
            (k + 1).to_string(),
            dominant[k].to_string(),
            num(spectrum.lambdas[k]),
            num(spectrum.taus[k]),
            num(spectrum.omegas[k].re),
            num(spectrum.omegas[k].im),
            num(hz[k]),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Square matrix with a `label` column and one column per label.
pub fn write_matrix_csv<W: Write>(mut w: W, manifest: &str, labels: &[usize], matrix: &DMatrix<f64>) -> Result<()> {
    if matrix.nrows() != labels.len() || matrix.ncols() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            actual: matrix.nrows(),
        });
    }
    write_manifest(&mut w, manifest)?;
    let mut out = csv_writer(w);
    let mut header = vec!["label".to_string()];
    header.extend(labels.iter().map(|l| l.to_string()));
    out.write_record(&header)?;
    for (i, l) in labels.iter().enumerate() {
        let mut row = vec![l.to_string()];
        row.extend(matrix.row(i).iter().map(|&x| num(x)));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// Sweep table for size/position runs, or one row per trial for removal
/// runs.
pub fn write_sweep_csv<W: Write>(mut w: W, manifest: &str, table: &MonteCarloTable) -> Result<()> {
    write_manifest(&mut w, manifest)?;
    let mut out = csv_writer(w);
    if !table.removals.is_empty() {
        out.write_record(["trial", "removed", "interlaced", "violations"])?;
        for r in &table.removals {
            out.write_record([
                r.trial.to_string(),
                r.removed.to_string(),
                r.interlaced.to_string(),
                r.violations.to_string(),
            ])?;
        }
        out.flush()?;
        return Ok(());
    }
    out.write_record([
        "sigma",
        "n",
        "mean_shift",
        "std_shift",
        "wh_pass_rate",
        "std_re_shift",
        "weyl_pass_rate",
        "eigvec_error_mean",
        "eigvec_error_max",
        "valid_trials",
        "discarded_trials",
    ])?;
    for r in &table.rows {
        out.write_record([
            num(r.sigma),
            r.n.to_string(),
            num(r.mean_shift),
            num(r.std_shift),
            num(r.wh_pass_rate),
            num(r.std_re_shift),
            num(r.weyl_pass_rate),
            num(r.eigvec_error_mean),
            num(r.eigvec_error_max),
            r.valid_trials.to_string(),
            r.discarded_trials.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// One row per eigenvalue index of the full array; the reduced columns are
/// empty past the reduced size. The summary goes into comment lines.
pub fn write_interlacing_csv<W: Write>(mut w: W, manifest: &str, report: &InterlacingReport) -> Result<()> {
    write_manifest(&mut w, manifest)?;
    let join = |xs: &[usize]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";");
    writeln!(
        w,
        "# removed_labels={} interlaced={} violations={} omega_interlaced={} omega_slack={}",
        join(&report.removed_labels),
        report.interlaced,
        report.violations.len(),
        report.omega_interlaced,
        report.omega_slack
    )?;
    let mut out = csv_writer(w);
    out.write_record([
        "j",
        "lambda_full",
        "lambda_reduced",
        "re_omega_full_rad_s",
        "re_omega_reduced_rad_s",
    ])?;
    for j in 0..report.lambda_full.len() {
        let reduced = |xs: &[f64]| xs.get(j).map(|&x| num(x)).unwrap_or_default();
        out.write_record([
            (j + 1).to_string(),
            num(report.lambda_full[j]),
            reduced(&report.lambda_reduced),
            num(report.omega_real_full[j]),
            reduced(&report.omega_real_reduced),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_gershgorin_csv<W: Write>(mut w: W, manifest: &str, reports: &[GershgorinReport]) -> Result<()> {
    write_manifest(&mut w, manifest)?;
    let mut out = csv_writer(w);
    out.write_record([
        "n",
        "c",
        "epsilon",
        "admissibility",
        "bound",
        "lambda_min",
        "lambda_max",
        "disc_min",
        "disc_max",
        "violations",
        "all_inside",
    ])?;
    for r in reports {
        let lo = r.eigenvalues.first().copied().unwrap_or(f64::NAN);
        let hi = r.eigenvalues.last().copied().unwrap_or(f64::NAN);
        out.write_record([
            r.n.to_string(),
            num(r.c),
            num(r.epsilon),
            num(r.admissibility),
            num(r.bound),
            num(lo),
            num(hi),
            num(r.disc_min),
            num(r.disc_max),
            r.violations.to_string(),
            r.all_inside.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a signal file: first non-comment line `sample_rate_hz=<value>`,
/// then one sample per line.
pub fn read_signal<R: BufRead>(r: R) -> Result<Signal> {
    let mut rate = None;
    let mut samples = Vec::new();
    for (number, line) in r.lines().enumerate() {
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        match rate {
            None => {
                let value = text.strip_prefix("sample_rate_hz=").ok_or_else(|| {
                    Error::invalid(format!("signal line {}: expected `sample_rate_hz=<value>`", number + 1))
                })?;
                rate = Some(
                    value
                        .trim()
                        .parse::<f64>()
                        .map_err(|e| Error::invalid(format!("signal line {}: bad sample_rate_hz: {e}", number + 1)))?,
                );
            }
            Some(_) => samples.push(
                text.parse::<f64>()
                    .map_err(|e| Error::invalid(format!("signal line {}: {e}", number + 1)))?,
            ),
        }
    }
    let rate = rate.ok_or_else(|| Error::invalid("signal file has no `sample_rate_hz=` line"))?;
    Signal::new(samples, rate)
}

pub fn write_signal<W: Write>(mut w: W, signal: &Signal) -> Result<()> {
    writeln!(w, "sample_rate_hz={}", signal.sample_rate())?;
    for x in signal.samples() {
        writeln!(w, "{x}")?;
    }
    Ok(())
}

/// Columns `time_s` followed by one column per channel, named by `labels`.
pub fn write_outputs_csv<W: Write>(
    mut w: W,
    manifest: &str,
    labels: &[String],
    output: &TransformOutput,
) -> Result<()> {
    if labels.len() != output.channels.len() {
        return Err(Error::DimensionMismatch {
            expected: output.channels.len(),
            actual: labels.len(),
        });
    }
    write_manifest(&mut w, manifest)?;
    let mut out = csv_writer(w);
    let mut header = vec!["time_s".to_string()];
    header.extend(labels.iter().cloned());
    out.write_record(&header)?;
    let len = output.channels.iter().map(Vec::len).max().unwrap_or(0);
    for k in 0..len {
        let mut row = vec![num(k as f64 / output.sample_rate)];
        row.extend(
            output
                .channels
                .iter()
                .map(|c| c.get(k).map(|&x| num(x)).unwrap_or_default()),
        );
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// Long format `channel,freq_hz,magnitude`.
pub fn write_responses_csv<W: Write>(
    mut w: W,
    manifest: &str,
    labels: &[String],
    responses: &[FrequencyResponse],
) -> Result<()> {
    write_manifest(&mut w, manifest)?;
    let mut out = csv_writer(w);
    out.write_record(["channel", "freq_hz", "magnitude"])?;
    for (label, r) in labels.iter().zip(responses) {
        for (f, m) in r.freqs_hz.iter().zip(&r.magnitude) {
            out.write_record([label.clone(), num(*f), num(*m)])?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_gaps_csv<W: Write>(mut w: W, manifest: &str, labels: &[String], gaps: &[BandGap]) -> Result<()> {
    write_manifest(&mut w, manifest)?;
    let mut out = csv_writer(w);
    out.write_record(["below", "above", "start_hz", "end_hz", "width_hz"])?;
    for g in gaps {
        out.write_record([
            labels[g.below - 1].clone(),
            labels[g.above - 1].clone(),
            num(g.start_hz),
            num(g.end_hz),
            num(g.end_hz - g.start_hz),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// One entry of a spectrum file: mode index, label of the resonator the mode
/// peaks on, and complex frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumEntry {
    pub n: usize,
    pub dominant_label: usize,
    pub omega: Complex64,
}

/// Reads the `re_omega_rad_s`/`im_omega_rad_s` columns of a spectrum CSV.
pub fn read_spectrum_csv<R: std::io::Read>(r: R) -> Result<Vec<SpectrumEntry>> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
    let headers = reader.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::invalid(format!("spectrum file has no `{name}` column")))
    };
    let (cn, cl, cre, cim) = (
        column("n")?,
        column("dominant_label")?,
        column("re_omega_rad_s")?,
        column("im_omega_rad_s")?,
    );
    let mut entries = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let field = |c: usize| -> Result<&str> {
            record
                .get(c)
                .ok_or_else(|| Error::invalid(format!("spectrum row {} is short", row + 1)))
        };
        let parse_f = |c: usize| -> Result<f64> {
            field(c)?
                .parse()
                .map_err(|e| Error::invalid(format!("spectrum row {}, column {}: {e}", row + 1, &headers[c])))
        };
        let parse_u = |c: usize| -> Result<usize> {
            field(c)?
                .parse()
                .map_err(|e| Error::invalid(format!("spectrum row {}, column {}: {e}", row + 1, &headers[c])))
        };
        entries.push(SpectrumEntry {
            n: parse_u(cn)?,
            dominant_label: parse_u(cl)?,
            omega: Complex64::new(parse_f(cre)?, parse_f(cim)?),
        });
    }
    if entries.is_empty() {
        return Err(Error::invalid("spectrum file has no rows"));
    }
    Ok(entries)
}
