use std::f64::consts::{E, PI};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rainbow_core::bem::capacitance_matrix_bem;
use rainbow_core::capacitance::{dilute_gcm, gcm_from_bem_extrapolated};
use rainbow_core::filterbank::{
    apply_transform_with, envelope_peak, kernel_sup_difference, make_kernel, stability_bound, ConvolutionMethod,
    Kernel, Normalization, Signal,
};
use rainbow_core::geometry::{
    graded_first_radius_for_length, make_dilute_array, make_graded_array, random_perturbation_with, Material,
    PerturbationKind, PerturbationSpec, Point, ResonatorArray, Sphere,
};
use rainbow_core::robustness::{
    compare_eigenvalues, eigvec_first_order, equispaced_anchors, gershgorin_large_array_check, perturbed_gcm_position,
    perturbed_gcm_size, removal_analysis, trial_rng,
};
use rainbow_core::spectral::spectrum;
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(elapsed: Duration, budget_s: f64) -> bool {
    elapsed.as_secs_f64() < budget_s
}

fn unit_pair(epsilon: f64) -> ResonatorArray {
    make_dilute_array(
        &[Point::zeros(), Point::new(1.0, 0.0, 0.0)],
        &[1.0, 1.0],
        epsilon,
        Material::nondimensional(1e-3),
    )
    .unwrap()
}

/// Ten resonators on a line, radii `1 + 0.05 i`, `ε = 0.02`.
fn ten_array() -> ResonatorArray {
    let anchors: Vec<Point> = (0..10).map(|i| Point::new(i as f64, 0.0, 0.0)).collect();
    let radii: Vec<f64> = (0..10).map(|i| 1.0 + 0.05 * i as f64).collect();
    make_dilute_array(&anchors, &radii, 0.02, Material::nondimensional(1e-3)).unwrap()
}

/// Seeded random graded dilute array with `2 ≤ N ≤ 20`.
fn random_graded(seed: u64) -> ResonatorArray {
    let mut rng = trial_rng(seed, 0);
    let n = rng.random_range(2..=20);
    let first = rng.random_range(0.5..1.5);
    let growth: f64 = rng.random_range(1.0..1.05);
    let epsilon = rng.random_range(0.002..0.02);
    let mut x = 0.0;
    let mut anchors = Vec::with_capacity(n);
    let mut radii = Vec::with_capacity(n);
    for i in 0..n {
        anchors.push(Point::new(x, 0.0, 0.0));
        radii.push(first * growth.powi(i as i32));
        x += rng.random_range(1.0..2.0);
    }
    make_dilute_array(&anchors, &radii, epsilon, Material::nondimensional(1e-3)).unwrap()
}

fn bem_sphere_oracle() -> Outcome {
    let sphere = ResonatorArray::from_spheres(
        vec![Sphere {
            center: Point::zeros(),
            radius: 1.0,
        }],
        Material::nondimensional(1e-3),
    )
    .unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for (refinement, tol) in [(3, 1e-2), (4, 3e-3)] {
        let start = Instant::now();
        let c = capacitance_matrix_bem(&sphere, refinement).unwrap();
        let elapsed = start.elapsed();
        let rel = (c.matrix[(0, 0)] - 4.0 * PI).abs() / (4.0 * PI);
        pass &= rel < tol && within(elapsed, 10.0);
        parts.push(format!(
            "refine {refinement} ({} triangles): rel err {rel:.2e} (< {tol:.0e}), {:.2}s",
            c.triangles,
            elapsed.as_secs_f64()
        ));
    }
    outcome(pass, parts.join("; "))
}

fn dilute_convergence() -> Outcome {
    let start = Instant::now();
    let errors: Vec<f64> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&eps| {
            let array = unit_pair(eps);
            let dilute = dilute_gcm(&array).unwrap();
            let bem = gcm_from_bem_extrapolated(&array, 3).unwrap();
            (bem.values() - dilute.values()).norm()
        })
        .collect();
    let elapsed = start.elapsed();
    let ratios = [errors[0] / errors[1], errors[1] / errors[2]];
    let pass = ratios.iter().all(|r| (2.5..=6.0).contains(r)) && within(elapsed, 60.0);
    outcome(
        pass,
        format!(
            "errors {errors:?}, ratios {:.3} {:.3} (in [2.5, 6]), {:.1}s",
            ratios[0],
            ratios[1],
            elapsed.as_secs_f64()
        ),
    )
}

fn wielandt_hoffman() -> Outcome {
    let start = Instant::now();
    let array = ten_array();
    let sigma = 0.05;
    let mut counts = Vec::new();
    for kind in [PerturbationKind::Size, PerturbationKind::Position] {
        let mut passed = 0;
        for trial in 0..100 {
            let mut rng = trial_rng(2024, trial);
            let perturbed = match random_perturbation_with(kind, array.len(), sigma, &mut rng).unwrap() {
                PerturbationSpec::Size(alphas) => perturbed_gcm_size(&array, &alphas).unwrap(),
                PerturbationSpec::Position(betas) => perturbed_gcm_position(&array, &betas).unwrap(),
                PerturbationSpec::Removal(_) => unreachable!(),
            };
            let cmp = compare_eigenvalues(perturbed.before.values(), perturbed.after.values()).unwrap();
            if cmp.bound_ok {
                passed += 1;
            }
        }
        counts.push(passed);
    }
    let elapsed = start.elapsed();
    let pass = counts.iter().all(|&c| c == 100) && within(elapsed, 5.0);
    outcome(
        pass,
        format!(
            "size {}/100, position {}/100 at sigma {sigma}, {:.2}s",
            counts[0],
            counts[1],
            elapsed.as_secs_f64()
        ),
    )
}

fn interlacing() -> Outcome {
    let start = Instant::now();
    let mut checks = 0;
    let mut violations = 0;
    let mut largest = 0;
    for seed in 0..100 {
        let array = random_graded(seed);
        largest = largest.max(array.len());
        let gcm = dilute_gcm(&array).unwrap();
        for position in 1..=array.len() {
            let report = removal_analysis(&gcm, &[position], array.material()).unwrap();
            checks += 1;
            violations += report.violations.len();
            if !report.interlaced {
                violations += usize::from(report.violations.is_empty());
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = violations == 0 && largest <= 20 && within(elapsed, 10.0);
    outcome(
        pass,
        format!(
            "{checks} single removals over 100 arrays (N <= {largest}), {violations} violations, {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn eigvec_scaling() -> Outcome {
    let start = Instant::now();
    let array = ten_array();
    let mut rng = trial_rng(7, 0);
    let PerturbationSpec::Size(direction) =
        random_perturbation_with(PerturbationKind::Size, array.len(), 1.0, &mut rng).unwrap()
    else {
        unreachable!()
    };
    let errors: Vec<f64> = [1e-2, 5e-3, 2.5e-3]
        .iter()
        .map(|&gamma| {
            let alphas: Vec<f64> = direction.iter().map(|d| gamma * d).collect();
            let p = perturbed_gcm_size(&array, &alphas).unwrap();
            let approx = eigvec_first_order(p.before.values(), &p.correction).unwrap();
            approx.errors.iter().map(|e| e * e).sum::<f64>().sqrt()
        })
        .collect();
    let elapsed = start.elapsed();
    let ratios = [errors[0] / errors[1], errors[1] / errors[2]];
    let pass = ratios.iter().all(|r| (2.5..=6.0).contains(r)) && within(elapsed, 5.0);
    outcome(
        pass,
        format!(
            "errors {errors:?}, ratios {:.3} {:.3} (in [2.5, 6]), {:.3}s",
            ratios[0],
            ratios[1],
            elapsed.as_secs_f64()
        ),
    )
}

fn large_array_bound() -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [10, 50, 100] {
        let report = gershgorin_large_array_check(1.0, &equispaced_anchors(n, 1.0), 0.5).unwrap();
        let (lo, hi) = report
            .eigenvalues
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &l| {
                (lo.min(l), hi.max(l))
            });
        let inside = lo > 0.0 && hi < 6.0;
        pass &= inside && report.violations == 0 && report.all_inside;
        parts.push(format!("N={n}: [{lo:.4}, {hi:.4}], {} violations", report.violations));
    }
    let elapsed = start.elapsed();
    pass &= within(elapsed, 30.0);
    outcome(
        pass,
        format!("{}; bound 6, {:.2}s", parts.join("; "), elapsed.as_secs_f64()),
    )
}

fn tau_structure() -> Outcome {
    let mut bad = 0;
    let mut modes = 0;
    for seed in 0..100 {
        let array = random_graded(1000 + seed);
        let s = spectrum(&dilute_gcm(&array).unwrap(), array.material()).unwrap();
        for (tau, w) in s.taus.iter().zip(&s.omegas) {
            modes += 1;
            if !(*tau >= 0.0 && w.im <= 0.0 && w.re > 0.0) {
                bad += 1;
            }
        }
    }
    let mut worst: f64 = 0.0;
    for material in [Material::nondimensional(1e-3), Material::air_in_water()] {
        let sphere = ResonatorArray::from_spheres(
            vec![Sphere {
                center: Point::zeros(),
                radius: 1.0,
            }],
            material,
        )
        .unwrap();
        let w = spectrum(&dilute_gcm(&sphere).unwrap(), &material).unwrap().omegas[0];
        let (d, v, v0) = (material.delta, material.v, material.v0);
        let closed = Complex64::new((3.0 * d).sqrt() * v, -1.5 * d * v * v / v0);
        worst = worst.max((w - closed).norm() / closed.norm());
    }
    outcome(
        bad == 0 && worst <= 1e-12,
        format!("{modes} modes over 100 arrays, {bad} sign failures; single sphere rel err {worst:.1e} (<= 1e-12)"),
    )
}

fn device_scale() -> Outcome {
    let start = Instant::now();
    let material = Material::air_in_water();
    let mut pass = true;
    let mut parts = Vec::new();
    for length in [0.030, 0.035, 0.040] {
        let first = graded_first_radius_for_length(22, 1.1, 12.0, length).unwrap();
        let array = make_graded_array(22, first, 1.1, 12.0, material).unwrap();
        let s = spectrum(&dilute_gcm(&array).unwrap(), &material).unwrap();
        let hz = s.frequencies_hz();
        let distinct = hz.windows(2).all(|w| w[1] > w[0]);
        let in_band = hz.iter().all(|f| (1e3..=100e3).contains(f));
        // mode n peaks on one resonator each; frequency falls as that resonator grows
        let radii = array.radii();
        let mut by_size: Vec<(f64, f64)> = s
            .dominant_labels()
            .iter()
            .zip(&hz)
            .map(|(&label, &f)| (radii[label - 1], f))
            .collect();
        let mut labels = s.dominant_labels();
        labels.sort_unstable();
        labels.dedup();
        by_size.sort_by(|a, b| a.0.total_cmp(&b.0));
        let monotone = labels.len() == 22 && by_size.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 < w[0].1);
        pass &= distinct && in_band && monotone;
        parts.push(format!(
            "L={:.0}mm: {:.1}-{:.1} kHz, distinct {distinct}, monotone {monotone}",
            length * 1e3,
            hz[0] / 1e3,
            hz[21] / 1e3
        ));
    }
    let elapsed = start.elapsed();
    pass &= within(elapsed, 5.0);
    outcome(pass, format!("{}; {:.2}s", parts.join("; "), elapsed.as_secs_f64()))
}

fn filter_stability() -> Outcome {
    let start = Instant::now();
    let fs = 200.0;
    let mut held = 0;
    let mut worst_ratio: f64 = 0.0;
    for case in 0..50 {
        let mut rng = trial_rng(99, case);
        let old = Complex64::new(rng.random_range(5.0..40.0), -rng.random_range(0.5..3.0));
        let new = old + Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-0.3..0.3));
        let new = Complex64::new(new.re, new.im.min(-0.2));
        let c = (-old.im).min(-new.im);
        let len = rng.random_range(50..400);
        let samples: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
        let signal = Signal::new(samples, fs).unwrap();
        let k_old = make_kernel(old, fs, 1e-12, Normalization::Amplitude(1.0)).unwrap();
        let k_new = make_kernel(new, fs, 1e-12, Normalization::Amplitude(1.0)).unwrap();
        let span = k_old.len().max(k_new.len());
        let kernels: Vec<Kernel> = vec![k_old.with_length(span), k_new.with_length(span)];
        let out = apply_transform_with(&signal, &kernels, ConvolutionMethod::Direct).unwrap();
        let sup = out.channels[0]
            .iter()
            .zip(&out.channels[1])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let bound = stability_bound(old, new, c, signal.l1_norm()).unwrap();
        let kernel_ok = kernel_sup_difference(old, new, c, fs).unwrap().within_bound;
        worst_ratio = worst_ratio.max(sup / bound);
        if sup <= bound && kernel_ok {
            held += 1;
        }
    }
    let c = 0.7;
    let (t, value) = envelope_peak(c).unwrap();
    let peak_ok = (t - 1.0 / c).abs() <= 1e-6 / c && (value - 1.0 / (c * E)).abs() <= 1e-6 / (c * E);
    let elapsed = start.elapsed();
    outcome(
        held == 50 && peak_ok && within(elapsed, 30.0),
        format!(
            "{held}/50 within bound (max sup/bound {worst_ratio:.3}); argmax t e^(-ct) = {t:.9} vs 1/c = {:.9}, {:.2}s",
            1.0 / c,
            elapsed.as_secs_f64()
        ),
    )
}

fn filter_algebra() -> Outcome {
    let fs = 100.0;
    let omegas = [
        Complex64::new(20.0, -2.0),
        Complex64::new(35.0, -1.0),
        Complex64::new(9.0, -0.5),
    ];
    let kernels: Vec<Kernel> = omegas
        .iter()
        .map(|&w| make_kernel(w, fs, 1e-6, Normalization::Amplitude(1.0)).unwrap())
        .collect();
    let mut rng = trial_rng(5, 0);
    let mut random = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-1.0..1.0)).collect() };
    let s1 = random(300);
    let s2 = random(300);
    let run = |s: &[f64]| {
        apply_transform_with(
            &Signal::new(s.to_vec(), fs).unwrap(),
            &kernels,
            ConvolutionMethod::Direct,
        )
        .unwrap()
    };

    // causality: support starting at t0 gives zero output before t0
    let t0 = 120;
    let mut late = vec![0.0; t0];
    late.extend(&s1[..100]);
    let causal = run(&late).channels.iter().all(|ch| ch[..t0].iter().all(|&y| y == 0.0));

    // linearity
    let (a, b) = (1.7, -0.4);
    let mixed: Vec<f64> = s1.iter().zip(&s2).map(|(x, y)| a * x + b * y).collect();
    let (o1, o2, om) = (run(&s1), run(&s2), run(&mixed));
    let mut linear_err: f64 = 0.0;
    for ch in 0..kernels.len() {
        let scale = om.channels[ch].iter().fold(0.0f64, |m, y| m.max(y.abs()));
        for k in 0..om.channels[ch].len() {
            let expected = a * o1.channels[ch][k] + b * o2.channels[ch][k];
            linear_err = linear_err.max((om.channels[ch][k] - expected).abs() / scale);
        }
    }
    let linear = linear_err <= 1e-12;

    // shift equivariance: exact equality of the delayed output
    let shift = 37;
    let base = Signal::new(s1.clone(), fs).unwrap();
    let shifted = run(base.delayed(shift).samples());
    let shift_exact = o1
        .channels
        .iter()
        .zip(&shifted.channels)
        .all(|(orig, del)| del[..shift].iter().all(|&y| y == 0.0) && del[shift..shift + orig.len()] == orig[..]);

    // impulse reproduces the kernel
    let impulse = apply_transform_with(&Signal::impulse(50, fs).unwrap(), &kernels, ConvolutionMethod::Direct).unwrap();
    let mut impulse_err: f64 = 0.0;
    for (ch, k) in impulse.channels.iter().zip(&kernels) {
        for (y, h) in ch.iter().zip(&k.samples) {
            impulse_err = impulse_err.max((y - h).abs());
        }
    }
    let impulse_ok = impulse_err <= 1e-15;

    // FFT path agrees with the direct reference
    let fft = apply_transform_with(&base, &kernels, ConvolutionMethod::Fft).unwrap();
    let mut fft_err: f64 = 0.0;
    for (d, f) in o1.channels.iter().zip(&fft.channels) {
        let scale = d.iter().fold(0.0f64, |m, y| m.max(y.abs()));
        for (x, y) in d.iter().zip(f) {
            fft_err = fft_err.max((x - y).abs() / scale);
        }
    }
    let fft_ok = fft_err <= 1e-9;

    outcome(
        causal && linear && shift_exact && impulse_ok && fft_ok,
        format!(
            "causal {causal}, linearity err {linear_err:.1e}, shift exact {shift_exact}, impulse err {impulse_err:.1e}, fft vs direct {fft_err:.1e}"
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("BEM sphere oracle", bem_sphere_oracle),
        ("dilute convergence", dilute_convergence),
        ("Wielandt-Hoffman bound", wielandt_hoffman),
        ("eigenvalue interlacing", interlacing),
        ("eigenvector first-order scaling", eigvec_scaling),
        ("large-array bound", large_array_bound),
        ("tau and frequency structure", tau_structure),
        ("device scale", device_scale),
        ("filter stability", filter_stability),
        ("filter algebra", filter_algebra),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = check();
        let verdict = if result.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {verdict} {name}: {}", i + 1, result.detail);
        failed += usize::from(!result.pass);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
