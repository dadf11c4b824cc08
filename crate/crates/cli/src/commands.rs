use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rainbow_core::bem::{assemble_single_layer, evaluate_potential, mesh_array, solve_densities};
use rainbow_core::capacitance::{dilute_gcm, gcm_from_bem, gcm_from_bem_extrapolated, GeneralizedCapacitanceMatrix};
use rainbow_core::filterbank::{
    apply_transform, band_gaps, frequency_response, make_kernel, Normalization, Signal, DEFAULT_TRUNC_TOL,
};
use rainbow_core::geometry::{apply_perturbation, PerturbationKind, PerturbationSpec, Point, ResonatorArray};
use rainbow_core::io::{
    read_signal, read_spectrum_csv, write_gaps_csv, write_gershgorin_csv, write_interlacing_csv, write_manifest,
    write_matrix_csv, write_outputs_csv, write_responses_csv, write_spectrum_csv, write_sweep_csv,
};
use rainbow_core::robustness::{
    equispaced_anchors, gershgorin_large_array_check, monte_carlo_robustness, removal_analysis, removal_analysis_bem,
};
use rainbow_core::spectral::{mode_weights, spectrum as compute_spectrum};
use rainbow_core::{Error, Result};
use serde::Serialize;

use crate::config::{FileConfig, Manifest, Method, Normalize, RunConfig};
use crate::{Common, Solver};

const DEFAULT_REFINE: u32 = 3;

/// Primary output (file or stdout) and side outputs derived from its path.
struct Outputs {
    out: Option<PathBuf>,
}

impl Outputs {
    fn new(common: &Common) -> Self {
        Outputs {
            out: common.out.clone(),
        }
    }

    fn primary(&self) -> Result<Box<dyn Write>> {
        match &self.out {
            Some(p) => Ok(Box::new(BufWriter::new(create(p)?))),
            None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
        }
    }

    /// `<stem><suffix>.<ext>` next to the primary output.
    fn side(&self, suffix: &str, ext: &str) -> Option<PathBuf> {
        let out = self.out.as_ref()?;
        let stem = out
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Some(out.with_file_name(format!("{stem}{suffix}.{ext}")))
    }

    fn write_json<T: Serialize>(&self, suffix: &str, manifest: &str, payload: &T) -> Result<()> {
        #[derive(Serialize)]
        struct Sidecar<'a, T> {
            manifest: &'a str,
            #[serde(flatten)]
            payload: &'a T,
        }
        if let Some(path) = self.side(suffix, "json") {
            let mut w = BufWriter::new(create(&path)?);
            serde_json::to_writer_pretty(&mut w, &Sidecar { manifest, payload })?;
            writeln!(w)?;
            w.flush()?;
        }
        Ok(())
    }

    fn side_writer(&self, suffix: &str) -> Result<Option<BufWriter<File>>> {
        match self.side(suffix, "csv") {
            Some(p) => Ok(Some(BufWriter::new(create(&p)?))),
            None => Ok(None),
        }
    }
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| Error::InvalidInput(format!("cannot create {}: {e}", path.display())))
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::InvalidInput(format!("cannot open {}: {e}", path.display())))
}

fn resolve_solver(solver: &Solver, file: &RunConfig, run: &mut RunConfig) {
    run.method = Some(solver.method.or(file.method).unwrap_or(Method::Dilute));
    if run.method == Some(Method::Bem) {
        run.refine = Some(solver.refine.or(file.refine).unwrap_or(DEFAULT_REFINE));
        run.extrapolate = Some(solver.extrapolate || file.extrapolate.unwrap_or(false));
    }
}

fn gcm_for(array: &ResonatorArray, run: &RunConfig) -> Result<GeneralizedCapacitanceMatrix> {
    match run.method.unwrap_or(Method::Dilute) {
        Method::Dilute => dilute_gcm(array),
        Method::Bem => {
            let refine = run.refine.unwrap_or(DEFAULT_REFINE);
            if run.extrapolate.unwrap_or(false) {
                if refine == 0 {
                    return Err(Error::InvalidInput("--extrapolate needs --refine >= 1".into()));
                }
                gcm_from_bem_extrapolated(array, refine)
            } else {
                gcm_from_bem(array, refine)
            }
        }
    }
}

fn render(command: &str, file: &FileConfig, run: &RunConfig, uses_array: bool) -> String {
    Manifest {
        command,
        material: if uses_array { file.material.as_ref() } else { None },
        array: if uses_array { file.array.as_ref() } else { None },
        run,
    }
    .render()
}

pub fn spectrum(common: &Common, solver: &Solver) -> Result<()> {
    let file = FileConfig::load(common.config.as_deref())?;
    let mut run = RunConfig::default();
    resolve_solver(solver, &file.run, &mut run);
    let array = file.array()?;
    let manifest = render("spectrum", &file, &run, true);

    let gcm = gcm_for(&array, &run)?;
    let s = compute_spectrum(&gcm, array.material())?;
    let out = Outputs::new(common);
    let mut w = out.primary()?;
    write_spectrum_csv(&mut w, &manifest, &s)?;
    w.flush()?;
    out.write_json(
        "",
        &manifest,
        &serde_json::json!({ "source": gcm.source(), "spectrum": s }),
    )
}

pub fn cap(common: &Common, solver: &Solver) -> Result<()> {
    let file = FileConfig::load(common.config.as_deref())?;
    let mut run = RunConfig::default();
    resolve_solver(solver, &file.run, &mut run);
    let array = file.array()?;
    let manifest = render("cap", &file, &run, true);

    let gcm = gcm_for(&array, &run)?;
    let out = Outputs::new(common);
    let mut w = out.primary()?;
    write_matrix_csv(&mut w, &manifest, gcm.labels(), gcm.values())?;
    w.flush()?;
    if let Some(mut w) = out.side_writer("_capacitance")? {
        write_matrix_csv(&mut w, &manifest, gcm.labels(), gcm.capacitance())?;
        w.flush()?;
    }
    if let Some(mut w) = out.side_writer("_volume_scaling")? {
        write_matrix_csv(&mut w, &manifest, gcm.labels(), &gcm.volume_scaling_matrix())?;
        w.flush()?;
    }
    out.write_json("", &manifest, &gcm)
}

pub fn perturb(
    common: &Common,
    mode: Option<PerturbationKind>,
    sigma: Option<Vec<f64>>,
    trials: Option<usize>,
    seed: Option<u64>,
) -> Result<()> {
    let file = FileConfig::load(common.config.as_deref())?;
    let kind = mode.or(file.run.mode).unwrap_or(PerturbationKind::Size);
    let run = RunConfig {
        mode: Some(kind),
        sigma: (kind != PerturbationKind::Removal)
            .then(|| sigma.or_else(|| file.run.sigma.clone()).unwrap_or_else(|| vec![0.01])),
        trials: Some(trials.or(file.run.trials).unwrap_or(100)),
        seed: Some(seed.or(file.run.seed).unwrap_or(0)),
        method: Some(Method::Dilute),
        ..RunConfig::default()
    };
    let array = file.array()?;
    let manifest = render("perturb", &file, &run, true);

    let table = monte_carlo_robustness(
        &array,
        kind,
        run.sigma.as_deref().unwrap_or(&[]),
        run.trials.unwrap_or(100),
        run.seed.unwrap_or(0),
    )?;
    let out = Outputs::new(common);
    let mut w = out.primary()?;
    write_sweep_csv(&mut w, &manifest, &table)?;
    w.flush()?;
    out.write_json("", &manifest, &table)
}

pub fn remove(common: &Common, solver: &Solver, indices: Option<Vec<usize>>) -> Result<()> {
    let file = FileConfig::load(common.config.as_deref())?;
    let mut run = RunConfig::default();
    resolve_solver(solver, &file.run, &mut run);
    run.indices = indices.or_else(|| file.run.indices.clone());
    let removed = run
        .indices
        .clone()
        .ok_or_else(|| Error::InvalidInput("--indices is required".into()))?;
    let array = file.array()?;
    let manifest = render("remove", &file, &run, true);

    let out = Outputs::new(common);
    let mut w = out.primary()?;
    match run.method {
        Some(Method::Bem) if !run.extrapolate.unwrap_or(false) => {
            let report = removal_analysis_bem(&array, &removed, run.refine.unwrap_or(DEFAULT_REFINE))?;
            write_manifest(
                &mut w,
                &format!(
                    "recomputed_interlaced={} submatrix_discrepancy={} relative_discrepancy={}",
                    report.recomputed_interlaced, report.discrepancy, report.relative_discrepancy
                ),
            )?;
            write_interlacing_csv(&mut w, &manifest, &report.submatrix)?;
            w.flush()?;
            out.write_json("", &manifest, &report)
        }
        _ => {
            let gcm = gcm_for(&array, &run)?;
            let report = removal_analysis(&gcm, &removed, array.material())?;
            write_interlacing_csv(&mut w, &manifest, &report)?;
            w.flush()?;
            out.write_json("", &manifest, &report)
        }
    }
}

pub fn scale(
    common: &Common,
    sizes: Option<Vec<usize>>,
    c: Option<f64>,
    radius: Option<f64>,
    spacing: Option<f64>,
) -> Result<()> {
    let file = FileConfig::load(common.config.as_deref())?;
    let run = RunConfig {
        sizes: Some(
            sizes
                .or_else(|| file.run.sizes.clone())
                .unwrap_or_else(|| vec![10, 50, 100]),
        ),
        c: Some(c.or(file.run.c).unwrap_or(0.5)),
        radius: Some(radius.or(file.run.radius).unwrap_or(1.0)),
        spacing: Some(spacing.or(file.run.spacing).unwrap_or(1.0)),
        ..RunConfig::default()
    };
    let manifest = render("scale", &file, &run, false);
    let (c, radius, spacing) = (
        run.c.unwrap_or(0.5),
        run.radius.unwrap_or(1.0),
        run.spacing.unwrap_or(1.0),
    );
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(Error::InvalidInput(format!("--spacing must be > 0, got {spacing}")));
    }
    let reports = run
        .sizes
        .as_deref()
        .unwrap_or(&[])
        .iter()
        .map(|&n| gershgorin_large_array_check(radius, &equispaced_anchors(n, spacing), c))
        .collect::<Result<Vec<_>>>()?;
    let out = Outputs::new(common);
    let mut w = out.primary()?;
    write_gershgorin_csv(&mut w, &manifest, &reports)?;
    w.flush()?;
    out.write_json("", &manifest, &serde_json::json!({ "reports": reports }))
}

pub struct FilterFlags {
    pub spectrum: Option<PathBuf>,
    pub signal: Option<PathBuf>,
    pub impulse: Option<usize>,
    pub sample_rate: Option<f64>,
    pub trunc_tol: Option<f64>,
    pub normalize: Option<Normalize>,
    pub indices: Option<Vec<usize>>,
}

pub fn filter(common: &Common, solver: &Solver, flags: FilterFlags) -> Result<()> {
    let file = FileConfig::load(common.config.as_deref())?;
    let f = &file.run;
    let mut run = RunConfig {
        spectrum: flags.spectrum.or_else(|| f.spectrum.clone()),
        signal: flags.signal.or_else(|| f.signal.clone()),
        impulse: flags.impulse.or(f.impulse),
        sample_rate: flags.sample_rate.or(f.sample_rate),
        trunc_tol: Some(flags.trunc_tol.or(f.trunc_tol).unwrap_or(DEFAULT_TRUNC_TOL)),
        normalize: Some(flags.normalize.or(f.normalize).unwrap_or(Normalize::Amplitude)),
        indices: flags.indices.or_else(|| f.indices.clone()),
        ..RunConfig::default()
    };
    if run.signal.is_some() && run.impulse.is_some() {
        return Err(Error::InvalidInput("give at most one of --signal and --impulse".into()));
    }
    let uses_array = run.spectrum.is_none();
    if uses_array {
        resolve_solver(solver, f, &mut run);
    }

    // channels: (mode index, ω)
    let channels: Vec<(usize, _)> = match &run.spectrum {
        Some(path) => {
            let mut entries = read_spectrum_csv(BufReader::new(open(path)?))?;
            if let Some(removed) = &run.indices {
                if let Some(bad) = removed
                    .iter()
                    .find(|l| !entries.iter().any(|e| e.dominant_label == **l))
                {
                    return Err(Error::InvalidInput(format!(
                        "--indices: no mode peaks on resonator {bad}"
                    )));
                }
                entries.retain(|e| !removed.contains(&e.dominant_label));
            }
            if entries.is_empty() {
                return Err(Error::InvalidInput("no channels left".into()));
            }
            entries.into_iter().map(|e| (e.n, e.omega)).collect()
        }
        None => {
            let mut array = file.array()?;
            if let Some(removed) = &run.indices {
                let positions = removed
                    .iter()
                    .map(|label| {
                        array
                            .labels()
                            .iter()
                            .position(|l| l == label)
                            .map(|p| p + 1)
                            .ok_or_else(|| Error::InvalidInput(format!("--indices: no resonator labelled {label}")))
                    })
                    .collect::<Result<_>>()?;
                array = apply_perturbation(&array, &PerturbationSpec::Removal(positions))?;
            }
            let s = compute_spectrum(&gcm_for(&array, &run)?, array.material())?;
            s.omegas.iter().enumerate().map(|(k, &w)| (k + 1, w)).collect()
        }
    };

    let signal = match (&run.signal, run.impulse) {
        (Some(path), _) => Some(read_signal(BufReader::new(open(path)?))?),
        (None, Some(len)) => {
            let rate = run
                .sample_rate
                .ok_or_else(|| Error::InvalidInput("--impulse needs --sample-rate".into()))?;
            Some(Signal::impulse(len, rate)?)
        }
        (None, None) => None,
    };
    let rate = match (&signal, run.sample_rate) {
        (Some(s), Some(r)) if s.sample_rate() != r => {
            return Err(Error::InvalidInput(format!(
                "--sample-rate {r} differs from the signal's {} Hz",
                s.sample_rate()
            )))
        }
        (Some(s), _) => s.sample_rate(),
        (None, Some(r)) => r,
        (None, None) => return Err(Error::InvalidInput("--sample-rate is required without a signal".into())),
    };
    run.sample_rate = Some(rate);
    let manifest = render("filter", &file, &run, uses_array);

    let normalization = match run.normalize {
        Some(Normalize::UnitL2) => Normalization::UnitL2,
        _ => Normalization::Amplitude(1.0),
    };
    let trunc_tol = run.trunc_tol.unwrap_or(DEFAULT_TRUNC_TOL);
    let kernels = channels
        .iter()
        .map(|&(_, w)| make_kernel(w, rate, trunc_tol, normalization))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<String> = channels.iter().map(|(l, _)| format!("mode_{l}")).collect();
    let responses = kernels.iter().map(frequency_response).collect::<Result<Vec<_>>>()?;
    let omegas: Vec<_> = channels.iter().map(|&(_, w)| w).collect();
    let gaps = band_gaps(&omegas);

    let out = Outputs::new(common);
    let mut w = out.primary()?;
    match &signal {
        Some(s) => {
            let output = apply_transform(s, &kernels)?;
            write_outputs_csv(&mut w, &manifest, &labels, &output)?;
            if let Some(mut r) = out.side_writer("_responses")? {
                write_responses_csv(&mut r, &manifest, &labels, &responses)?;
                r.flush()?;
            }
        }
        None => write_responses_csv(&mut w, &manifest, &labels, &responses)?,
    }
    w.flush()?;
    if let Some(mut g) = out.side_writer("_gaps")? {
        write_gaps_csv(&mut g, &manifest, &labels, &gaps)?;
        g.flush()?;
    }
    let summary: Vec<_> = channels
        .iter()
        .zip(&kernels)
        .zip(&responses)
        .map(|(((label, omega), k), r)| {
            serde_json::json!({
                "label": label,
                "omega": omega,
                "c_n": k.c_n,
                "samples": k.len(),
                "truncation_time_s": k.truncation_time,
                "peak_hz": r.peak_hz,
                "half_power_bandwidth_hz": r.half_power_bandwidth_hz,
            })
        })
        .collect();
    out.write_json("", &manifest, &serde_json::json!({ "channels": summary, "gaps": gaps }))
}

pub fn mode_field(
    common: &Common,
    solver: &Solver,
    mode_index: Option<usize>,
    from: Option<[f64; 3]>,
    to: Option<[f64; 3]>,
    samples: Option<usize>,
) -> Result<()> {
    let file = FileConfig::load(common.config.as_deref())?;
    let f = &file.run;
    let mut run = RunConfig::default();
    resolve_solver(solver, f, &mut run);
    // the field itself always needs boundary densities
    let refine = solver.refine.or(f.refine).unwrap_or(DEFAULT_REFINE);
    run.refine = Some(refine);
    let array = file.array()?;
    let centers = array.centers();
    let reach = 3.0 * array.radii().iter().fold(0.0_f64, |m, &r| m.max(r));
    let min_x = centers.iter().map(|c| c.x).fold(f64::INFINITY, f64::min) - reach;
    let max_x = centers.iter().map(|c| c.x).fold(f64::NEG_INFINITY, f64::max) + reach;
    run.mode_index = Some(mode_index.or(f.mode_index).unwrap_or(1));
    run.from = Some(from.or(f.from).unwrap_or([min_x, centers[0].y, centers[0].z]));
    run.to = Some(to.or(f.to).unwrap_or([max_x, centers[0].y, centers[0].z]));
    run.samples = Some(samples.or(f.samples).unwrap_or(201));
    let n_samples = run.samples.unwrap_or(201);
    if n_samples < 2 {
        return Err(Error::InvalidInput("--samples must be >= 2".into()));
    }
    let manifest = render("mode-field", &file, &run, true);

    let s = compute_spectrum(&gcm_for(&array, &run)?, array.material())?;
    let weights = mode_weights(&s, run.mode_index.unwrap_or(1))?;
    let meshes = mesh_array(&array, refine)?;
    let matrix = assemble_single_layer(&meshes)?;
    let densities = solve_densities(&matrix, &meshes)?;
    let (a, b) = (
        Point::from(run.from.unwrap_or_default()),
        Point::from(run.to.unwrap_or_default()),
    );

    let out = Outputs::new(common);
    let mut w = out.primary()?;
    write_manifest(&mut w, &manifest)?;
    writeln!(w, "x,y,z,value,near_surface")?;
    for k in 0..n_samples {
        let p = a + (b - a) * (k as f64 / (n_samples - 1) as f64);
        let sample = evaluate_potential(&densities, weights.as_slice(), &p)?;
        writeln!(w, "{},{},{},{},{}", p.x, p.y, p.z, sample.value, sample.near_surface)?;
    }
    w.flush()?;
    Ok(())
}
