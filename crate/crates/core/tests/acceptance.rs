//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Runs without the libtest harness so the lines are
//! always printed.

use std::path::Path;
use std::time::Instant;

use airforge_core::air::{find_direct_path, split_early_late, DIRECT_TOLERANCE};
use airforge_core::augment::{augment, augment_drr, direct_window, drr_quadratic, solve_drr_gain, AugmentSpec};
use airforge_core::dataset::{build_dataset, fit_calibration, generate_air_set, regenerate_row, PipelineConfig};
use airforge_core::decay::{fit_signal, remove_noise_floor};
use airforge_core::rng::stream_rng;
use airforge_core::synth::{decay_signal, DecaySignal, SyntheticAir};
use airforge_core::wav::write_wav;
use airforge_core::{analyze, design_filterbank, drr_of, estimate_t60, evaluate, synthesize, Air};
use rand::Rng;

const FS: u32 = 16_000;

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn seed_airs() -> Vec<(f64, u64, Air)> {
    let mut out = Vec::new();
    for seed in [1u64, 2, 3] {
        for t60 in [0.3, 0.6, 1.2] {
            out.push((t60, seed, SyntheticAir::new(t60, 6.0, FS).generate(seed)));
        }
    }
    out
}

fn t60_round_trip(airs: &[(f64, u64, Air)]) -> Outcome {
    let start = Instant::now();
    let mut ok = 0;
    let mut total = 0;
    let mut worst = 0.0f64;
    for (_, seed, air) in airs {
        for target in [0.2, 0.5, 1.0, 1.5] {
            total += 1;
            let spec = AugmentSpec {
                target_t60: Some(target),
                target_drr: None,
                seed: *seed,
            };
            if let Ok((_, report)) = augment(air, &spec) {
                if let Some(t60) = report.achieved_t60 {
                    let err = (t60 - target).abs() / target;
                    worst = worst.max(err);
                    if err <= 0.07 {
                        ok += 1;
                    }
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let frac = ok as f64 / total as f64;
    Outcome {
        name: "T60 round trip (<=7% error in >=90% of cases, <=60 s)",
        pass: frac >= 0.9 && secs <= 60.0,
        detail: format!("{ok}/{total} within 7%, worst {:.2}%, {secs:.1} s", 100.0 * worst),
    }
}

fn drr_round_trip(airs: &[(f64, u64, Air)]) -> Outcome {
    let start = Instant::now();
    let mut unclipped = 0;
    let mut clipped = 0;
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for (t60, seed, air) in airs {
        let direct = find_direct_path(air).unwrap();
        for target in [-6.0, 0.0, 6.0, 12.0, 18.0] {
            let label = format!("T60 {t60} seed {seed} target {target}");
            let (out, report) = match augment_drr(air, target) {
                Ok(r) => r,
                Err(e) => {
                    failures.push(format!("{label}: {e}"));
                    continue;
                }
            };
            if report.clipped {
                clipped += 1;
                let split = split_early_late(&out, DIRECT_TOLERANCE).unwrap();
                let late_max = split.late.samples().iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let moved = find_direct_path(&out).unwrap() != direct;
                if !(report.achieved_drr > target) || moved || out.samples()[direct].abs() <= late_max {
                    failures.push(format!("{label}: clipped case violates dominance"));
                }
            } else {
                unclipped += 1;
                let err = (report.achieved_drr - target).abs();
                worst = worst.max(err);
                if err > 0.1 {
                    failures.push(format!("{label}: off by {err:.4} dB"));
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        name: "DRR round trip (+-0.1 dB unclipped, clipped above target and dominant, <=10 s)",
        pass: failures.is_empty() && secs <= 10.0,
        detail: format!(
            "{unclipped} unclipped (worst {worst:.2e} dB), {clipped} clipped, {} failures{}, {secs:.1} s",
            failures.len(),
            failures.first().map(|f| format!(" e.g. {f}")).unwrap_or_default()
        ),
    }
}

fn quadratic_oracle() -> Outcome {
    let mut rng = stream_rng(2024);
    let mut worst = 0.0f64;
    let mut worst_identity = 0.0f64;
    let mut solved = 0;
    let mut no_root = 0;
    for i in 0..1000u64 {
        let t60 = rng.gen_range(0.15..1.2);
        let drr = rng.gen_range(-5.0..15.0);
        let mut synth = SyntheticAir::new(t60, drr, FS);
        synth.duration = 0.01 + 0.6 * t60 + 0.05;
        let air = synth.generate(10_000 + i);
        let split = split_early_late(&air, DIRECT_TOLERANCE).unwrap();
        let window = direct_window(air.len(), split.direct_index, FS);
        let target = rng.gen_range(-6.0..18.0);
        let late = split.late_energy();
        match solve_drr_gain(&split.early, &split.late, &window, target) {
            Ok(alpha) => {
                solved += 1;
                let (a, b, c) = drr_quadratic(split.early.samples(), &window);
                let k = 10f64.powf(target / 10.0) * late;
                let residual = (a * alpha * alpha + 2.0 * b * alpha + c - k).abs() / k;
                worst = worst.max(residual);
            }
            Err(_) => no_root += 1,
        }
        let current = drr_of(&air).unwrap();
        let alpha = solve_drr_gain(&split.early, &split.late, &window, current).unwrap();
        worst_identity = worst_identity.max((alpha - 1.0).abs());
    }
    Outcome {
        name: "Quadratic-solve oracle (residual < 1e-9, identity alpha = 1 +- 1e-9)",
        pass: worst < 1e-9 && worst_identity < 1e-9 && solved > 0,
        detail: format!(
            "{solved} solved, {no_root} without real root, worst residual {worst:.2e}, worst |alpha-1| {worst_identity:.2e}"
        ),
    }
}

fn decay_fit_oracle() -> Outcome {
    let mut ok = 0;
    let mut total = 0;
    let mut removal_fail = Vec::new();
    for tau in [0.03, 0.07, 0.14, 0.22] {
        for floor in [1e-2, 1e-3, 1e-4] {
            for seed in 0..20u64 {
                total += 1;
                let spec = DecaySignal {
                    level: 1.0,
                    tau,
                    noise_floor: floor,
                    onset: 0.05,
                    duration: 0.05 + 1.5 * tau * (1.0 / floor).ln() + 0.3,
                    sample_rate: FS,
                };
                let x = decay_signal(&spec, seed);
                let Ok(fit) = fit_signal(&x, spec.onset, None) else {
                    continue;
                };
                let tau_ok = (fit.model.tau / tau - 1.0).abs() <= 0.05;
                let floor_ok = (20.0 * (fit.model.noise_floor / floor).log10()).abs() <= 3.0;
                if tau_ok && floor_ok {
                    ok += 1;
                }
                if seed == 0 {
                    let clean = remove_noise_floor(&x, &fit.model, 77);
                    match fit_signal(&clean, spec.onset, None) {
                        Ok(refit) => {
                            let floor_db = 20.0 * refit.model.noise_floor.log10();
                            let shift = (refit.model.tau / fit.model.tau - 1.0).abs();
                            if floor_db >= -90.0 || shift > 0.05 {
                                removal_fail.push(format!(
                                    "tau {tau} floor {floor}: refit floor {floor_db:.1} dB, tau moved {:.2}%",
                                    100.0 * shift
                                ));
                            }
                        }
                        Err(e) => removal_fail.push(format!("tau {tau} floor {floor}: {e}")),
                    }
                }
            }
        }
    }
    let frac = ok as f64 / total as f64;
    Outcome {
        name: "Decay-fit oracle (grid >= 95%, floor removal < -90 dB with tau within 5%)",
        pass: frac >= 0.95 && removal_fail.is_empty(),
        detail: format!(
            "grid {ok}/{total} ({:.1}%), floor removal {} failures{}",
            100.0 * frac,
            removal_fail.len(),
            removal_fail.first().map(|f| format!(" e.g. {f}")).unwrap_or_default()
        ),
    }
}

fn filterbank(airs: &[(f64, u64, Air)]) -> Outcome {
    let spec = design_filterbank(FS).unwrap();
    let mut worst_db = 0.0f64;
    for k in 0..=400 {
        let f = 100.0 * (60.0f64).powf(k as f64 / 400.0);
        worst_db = worst_db.max((10.0 * spec.power_sum(f).log10()).abs());
    }
    let mut worst_t60 = 0.0f64;
    for (_, _, air) in airs {
        let before = estimate_t60(air).unwrap();
        let after = estimate_t60(&synthesize(&analyze(air, &spec).unwrap()).unwrap()).unwrap();
        worst_t60 = worst_t60.max((after / before - 1.0).abs());
    }
    Outcome {
        name: "Filterbank (power sum +-1 dB over 100 Hz-6 kHz, round-trip T60 change < 2%)",
        pass: worst_db <= 1.0 && worst_t60 < 0.02,
        detail: format!(
            "max power-sum deviation {worst_db:.2e} dB, worst T60 change {:.2e}%",
            100.0 * worst_t60
        ),
    }
}

fn flat_within(values: &[f64], range: [f64; 2], bins: usize, tol: f64) -> (bool, Vec<usize>) {
    let mut counts = vec![0usize; bins];
    for &v in values {
        let k = ((v - range[0]) / (range[1] - range[0]) * bins as f64).floor();
        counts[(k.max(0.0) as usize).min(bins - 1)] += 1;
    }
    let expected = values.len() as f64 / bins as f64;
    let ok = counts.iter().all(|&c| (c as f64 - expected).abs() <= tol * expected);
    (ok, counts)
}

fn balance() -> Outcome {
    let start = Instant::now();
    let seeds = vec![
        SyntheticAir::new(0.4, 8.0, FS).generate(41),
        SyntheticAir::new(0.9, 4.0, FS).generate(42),
    ];
    let t60_range = [0.1, 1.5];
    let drr_range = [-6.0, 18.0];
    let set = generate_air_set(&seeds, 200, t60_range, drr_range, 5, None).unwrap();
    let t60s: Vec<f64> = set.iter().map(|a| a.label_t60).collect();
    let drrs: Vec<f64> = set.iter().map(|a| a.label_drr).collect();
    let (t_ok, t_counts) = flat_within(&t60s, t60_range, 10, 0.3);
    let (d_ok, d_counts) = flat_within(&drrs, drr_range, 10, 0.3);
    Outcome {
        name: "Balance (2 AIRs x 200 draws, 10-bin label histograms within +-30%)",
        pass: set.len() == 400 && t_ok && d_ok,
        detail: format!(
            "{} outputs, T60 bins {t_counts:?}, DRR bins {d_counts:?}, {:.1} s",
            set.len(),
            start.elapsed().as_secs_f64()
        ),
    }
}

fn calibration() -> Outcome {
    let mut rng = stream_rng(8);
    let est: Vec<f64> = (0..500).map(|_| rng.gen_range(0.1..1.5)).collect();
    let noisy: Vec<f64> = est.iter().map(|e| 0.8 * e + 0.05 + rng.gen_range(-0.1..0.1)).collect();
    let cal = fit_calibration(&est, &noisy).unwrap();
    let calibrated: Vec<f64> = est.iter().map(|&e| cal.apply(e)).collect();
    let bias = evaluate(&calibrated, &noisy).unwrap().bias.abs();

    let exact: Vec<f64> = est.iter().map(|e| 2.0 * e + 3.0).collect();
    let affine = fit_calibration(&est, &exact).unwrap();
    let slope_err = (affine.slope - 2.0).abs();
    let intercept_err = (affine.intercept - 3.0).abs();
    Outcome {
        name: "Calibration (bias < 1e-12, exact affine recovery)",
        pass: bias < 1e-12 && slope_err < 1e-12 && intercept_err < 1e-12,
        detail: format!("bias {bias:.2e}, slope error {slope_err:.2e}, intercept error {intercept_err:.2e}"),
    }
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let manifest = match build_dataset(&PipelineConfig::synthetic(11), dir.path()) {
        Ok(m) => m,
        Err(e) => {
            return Outcome {
                name: "Determinism (regenerated rows are bit-identical WAVs)",
                pass: false,
                detail: format!("build failed: {e}"),
            }
        }
    };
    let mut mismatches = 0;
    for row in &manifest.rows {
        let regen = regenerate_row(dir.path(), row).unwrap();
        let path = dir.path().join("regen.wav");
        write_wav(&path, &regen).unwrap();
        if read(&path) != read(&dir.path().join(&row.mixture)) {
            mismatches += 1;
        }
    }
    Outcome {
        name: "Determinism (regenerated rows are bit-identical WAVs)",
        pass: mismatches == 0 && !manifest.rows.is_empty(),
        detail: format!("{} rows regenerated, {mismatches} mismatches", manifest.rows.len()),
    }
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap()
}

fn eval_identities() -> Outcome {
    let labels = [0.3, -0.7, 1.1, -0.2, 0.5, -1.0];
    let mut problems = Vec::new();

    let same = evaluate(&labels, &labels).unwrap();
    if !(same.bias == 0.0 && same.mse == 0.0 && (same.pearson.unwrap() - 1.0).abs() < 1e-12) {
        problems.push("identity");
    }
    let centred: Vec<f64> = {
        let m = labels.iter().sum::<f64>() / labels.len() as f64;
        labels.iter().map(|l| l - m).collect()
    };
    let neg: Vec<f64> = centred.iter().map(|l| -l).collect();
    if (evaluate(&neg, &centred).unwrap().pearson.unwrap() + 1.0).abs() > 1e-12 {
        problems.push("negation");
    }
    let shifted: Vec<f64> = labels.iter().map(|l| l + 0.5).collect();
    let s = evaluate(&shifted, &labels).unwrap();
    if (s.bias - 0.5).abs() > 1e-12 || (s.mse - 0.25).abs() > 1e-12 || (s.pearson.unwrap() - 1.0).abs() > 1e-12 {
        problems.push("offset");
    }

    let mut rng = stream_rng(9);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(2..200);
        let l: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let e: Vec<f64> = l.iter().map(|x| x + rng.gen_range(-2.0..3.0)).collect();
        let st = evaluate(&e, &l).unwrap();
        let d: Vec<f64> = e.iter().zip(&l).map(|(a, b)| a - b).collect();
        let md = d.iter().sum::<f64>() / n as f64;
        let var = d.iter().map(|x| (x - md) * (x - md)).sum::<f64>() / n as f64;
        worst = worst.max((st.mse - (st.bias * st.bias + var)).abs() / st.mse);
    }
    if worst >= 1e-12 {
        problems.push("decomposition");
    }
    Outcome {
        name: "Evaluation identities (three examples, mse = bias^2 + var to 1e-12)",
        pass: problems.is_empty(),
        detail: format!("failed: {problems:?}, worst decomposition error {worst:.2e}"),
    }
}

fn main() {
    let airs = seed_airs();
    let checks: Vec<Box<dyn Fn() -> Outcome>> = vec![
        Box::new(|| t60_round_trip(&airs)),
        Box::new(|| drr_round_trip(&airs)),
        Box::new(quadratic_oracle),
        Box::new(decay_fit_oracle),
        Box::new(|| filterbank(&airs)),
        Box::new(balance),
        Box::new(calibration),
        Box::new(determinism),
        Box::new(eval_identities),
    ];
    let mut failed = 0;
    for check in &checks {
        let o = check();
        println!("{} {}: {}", if o.pass { "PASS" } else { "FAIL" }, o.name, o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
