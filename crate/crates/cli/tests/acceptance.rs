//! Acceptance suite: every release-gating check, one test per criterion,
//! each printing a single PASS/FAIL line (visible with `--nocapture`).

use std::f64::consts::PI;
use std::time::Instant;

use qmetro::channels::{
    extended_operator, extended_scalar_derivative, DependentFamily, FunctionForm, SuDChannel,
};
use qmetro::estimation::{
    adaptive_estimate, run_mse_experiment, sweep, ChannelProblem, ExperimentConfig, SweepVariable,
};
use qmetro::information::{
    conjugated_state_derivative, cr_dominance_gap, fisher_information, qfi_from_slds,
    qfi_pure_channel, sld_solve,
};
use qmetro::optimize::{
    ballester_ratio, maximize_trace_qfi, sweep_thetas, trace_qfi_objective, ExtendedChannel,
    OptimizerSettings,
};
use qmetro::quantum::{
    c, cr, exp_directional_derivative, matrix_exp, max_abs, CMatrix, CVector, DensityOperator,
    Ket,
};
use qmetro::rng;
use qmetro::schemes::{
    ghz_state, mes_state, multipartite_mes, random_povm, random_projective_povm, SchemeKind,
    SchemeSpec,
};
use rand::Rng;

fn report(num: u32, name: &str, pass: bool) -> bool {
    println!(
        "ACCEPTANCE criterion {num:02} ({name}): {}",
        if pass { "PASS" } else { "FAIL" }
    );
    pass
}

fn random_ket(dim: usize, rng: &mut impl Rng) -> Ket {
    let v = CVector::from_fn(dim, |_, _| {
        c(
            rng.sample(rand_distr::StandardNormal),
            rng.sample(rand_distr::StandardNormal),
        )
    });
    Ket::normalized(v).unwrap()
}

fn random_density(dim: usize, rng: &mut impl Rng) -> DensityOperator {
    let m = CMatrix::from_fn(dim, dim, |_, _| {
        c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    });
    let psd = &m * m.adjoint();
    let tr = psd.trace();
    DensityOperator::new(psd / tr).unwrap()
}

fn random_traceless_hermitian(dim: usize, rng: &mut impl Rng) -> CMatrix {
    let m = CMatrix::from_fn(dim, dim, |_, _| {
        c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    });
    let h = (&m + m.adjoint()) * cr(0.5);
    let shift = h.trace() / cr(dim as f64);
    h - CMatrix::identity(dim, dim) * shift
}

fn linear_family(n: usize, domain: f64) -> DependentFamily {
    DependentFamily::uniform(FunctionForm::Linear { a: 1.0 }, n, domain).unwrap()
}

#[test]
fn criterion_01_mes_qfi_identity() {
    let start = Instant::now();
    let mut origin_ok = true;
    for d in [2usize, 3] {
        let channel = SuDChannel::from_dimension(d).unwrap();
        let p = channel.param_count();
        let ext = ExtendedChannel::assemble(&channel, &[vec![0.0; p]]).unwrap();
        let mes = mes_state(d).unwrap().density();
        let h = qfi_pure_channel(ext.operator(), ext.derivatives(), &mes).unwrap();
        for j in 0..p {
            for k in 0..p {
                let expect = if j == k { 4.0 / d as f64 } else { 0.0 };
                origin_ok &= (h.entry(j, k) - expect).abs() <= 1e-9;
            }
        }
    }
    let within_time = start.elapsed().as_secs_f64() < 1.0;

    // The identity at generic θ is evaluated and reported, never gated.
    for d in [2usize, 3] {
        let channel = SuDChannel::from_dimension(d).unwrap();
        let p = channel.param_count();
        let mes = mes_state(d).unwrap().density();
        let mut max_dev: f64 = 0.0;
        for thetas in sweep_thetas(p, 1, 8, 40 + d as u64).iter().skip(1) {
            let ext = ExtendedChannel::assemble(&channel, thetas).unwrap();
            let h = qfi_pure_channel(ext.operator(), ext.derivatives(), &mes).unwrap();
            for j in 0..p {
                for k in 0..p {
                    let expect = if j == k { 4.0 / d as f64 } else { 0.0 };
                    max_dev = max_dev.max((h.entry(j, k) - expect).abs());
                }
            }
        }
        if max_dev > 1e-6 {
            println!(
                "  note: H(mes) deviates from (4/{d})·I by up to {max_dev:.3e} at generic θ \
                 (plain-coordinate derivative convention); identity asserted at θ = 0 only"
            );
        }
    }
    assert!(report(
        1,
        "MES quantum information equals (4/d)·I at the origin",
        origin_ok && within_time
    ));
}

#[test]
fn criterion_02_trace_bound_and_attainment() {
    let start = Instant::now();
    let mut pass = true;
    for d in [2usize, 3] {
        let channel = SuDChannel::from_dimension(d).unwrap();
        let p = channel.param_count();
        let bound = 4.0 * ((d * d - 1) as f64) / d as f64;

        // 10³ random probes never exceed the bound, at the origin and at
        // random parameter points.
        let theta_points = sweep_thetas(p, 1, 2, 1000 + d as u64);
        let draws_per_point = 1000 / theta_points.len() + 1;
        let mut rng = rng::stream(2024, d as u64);
        let mut total = 0;
        for thetas in &theta_points {
            let ext = ExtendedChannel::assemble(&channel, thetas).unwrap();
            for _ in 0..draws_per_point {
                let ket = random_ket(d * d, &mut rng);
                let value = trace_qfi_objective(&ext, &ket).unwrap();
                pass &= value <= bound + 1e-6;
                total += 1;
            }
        }
        assert!(total >= 1000);

        // The optimizer attains the bound with a uniform Schmidt spectrum.
        let ext0 = ExtendedChannel::assemble(&channel, &[vec![0.0; p]]).unwrap();
        let settings = OptimizerSettings::default();
        let opt = maximize_trace_qfi(&ext0, &settings, 11 + d as u64).unwrap();
        pass &= opt.gap.abs() < 1e-4;
        let uniform = 1.0 / (d as f64).sqrt();
        pass &= opt.schmidt_spectrum[0]
            .iter()
            .all(|s| (s - uniform).abs() < 1e-3);
    }
    pass &= start.elapsed().as_secs_f64() < 60.0;
    assert!(report(
        2,
        "trace bound 4(d²−1)/d holds and is attained by a maximally entangled probe",
        pass
    ));
}

#[test]
fn criterion_03_trace_ratio_inequality() {
    let mut pass = true;
    for d in [2usize, 3] {
        let channel = SuDChannel::from_dimension(d).unwrap();
        let p = channel.param_count();
        let cap = (d * d - 1) as f64;
        let mes = mes_state(d).unwrap();
        let theta_points = sweep_thetas(p, 1, 2, 3000 + d as u64);
        let draws_per_point = 1000 / theta_points.len() + 1;
        let mut rng = rng::stream(2025, d as u64);
        for thetas in &theta_points {
            let ext = ExtendedChannel::assemble(&channel, thetas).unwrap();
            for _ in 0..draws_per_point {
                let ket = random_ket(d * d, &mut rng);
                let ratio = ballester_ratio(&ext, &ket).unwrap();
                pass &= ratio <= cap + 1e-6;
            }
            let at_mes = ballester_ratio(&ext, &mes).unwrap();
            pass &= (at_mes - cap).abs() <= 1e-9;
        }
    }
    assert!(report(
        3,
        "tr{H(mes)⁻¹H(ρ)} ≤ d²−1 with equality at the MES probe",
        pass
    ));
}

#[test]
fn criterion_04_two_channel_maximizers() {
    let start = Instant::now();
    let channel = SuDChannel::from_dimension(2).unwrap();
    let ext = ExtendedChannel::assemble(&channel, &[vec![0.0; 3], vec![0.0; 3]]).unwrap();
    let mut pass = (ext.trace_bound() - 12.0).abs() < 1e-12;

    let opt = maximize_trace_qfi(&ext, &OptimizerSettings::default(), 17).unwrap();
    pass &= (opt.best_value - 12.0).abs() < 1e-3;
    pass &= opt.best_value <= 12.0 + 1e-6;

    let multi = multipartite_mes(2, 4).unwrap();
    let multi_value = trace_qfi_objective(&ext, &multi).unwrap();
    pass &= (multi_value - 12.0).abs() <= 1e-9;

    pass &= start.elapsed().as_secs_f64() < 120.0;
    assert!(report(
        4,
        "full 16-dim search attains 12; the 4-partite probe also attains it",
        pass
    ));
}

#[test]
fn criterion_05_scheme_information_contrast() {
    let n = 3;
    let family = linear_family(n, PI / 3.0);
    let theta = 0.35; // φ = 1.05 ∈ (0, π)
    let us = family.unitaries_at(theta).unwrap();
    let dus = family.unitary_derivatives_at(theta).unwrap();

    // GHZ probe: (Σ f′)² = 9.
    let probe = ghz_state(2 * n).unwrap();
    let u = extended_operator(&us).unwrap();
    let du = extended_scalar_derivative(&us, &dus).unwrap();
    let h_ghz = qfi_pure_channel(&u, std::slice::from_ref(&du), &probe.density()).unwrap();
    let mut pass = (h_ghz.trace() - 9.0).abs() <= 1e-9;

    // Tensor-MES probes: Σ (f′)² = 3.
    let mes = mes_state(2).unwrap();
    let mut h_mes_total = 0.0;
    for j in 0..n {
        let us_j = vec![family.member_unitary(j, theta).unwrap()];
        let u_j = extended_operator(&us_j).unwrap();
        let du_j = qmetro::channels::extended_partial_derivative(
            &us_j,
            0,
            &family.member_unitary_derivative(j, theta).unwrap(),
        )
        .unwrap();
        let h_j =
            qfi_pure_channel(&u_j, std::slice::from_ref(&du_j), &mes.density()).unwrap();
        h_mes_total += h_j.scalar().unwrap();
    }
    pass &= (h_mes_total - 3.0).abs() <= 1e-9;

    // The GHZ projector measurement extracts everything: F = 9.
    let rho_out = probe.density().conjugate_by(&u).unwrap();
    let drho = conjugated_state_derivative(&u, &du, &probe.density());
    let povm = qmetro::schemes::two_outcome_projector(&probe);
    let f = fisher_information(&povm, &rho_out, std::slice::from_ref(&drho)).unwrap();
    pass &= (f.scalar().unwrap() - 9.0).abs() <= 1e-9;

    assert!(report(
        5,
        "GHZ tr H = 9 vs tensor-MES tr H = 3; GHZ measurement reaches F = 9",
        pass
    ));
}

#[test]
fn criterion_06_mse_asymptotics() {
    let start = Instant::now();
    let n = 2;
    let family = linear_family(n, PI / 2.0);
    let theta = PI / 4.0; // φ = π/2, mid-range
    let shots = 10_000;
    let trials = 2000;

    let ghz = ExperimentConfig {
        scheme: SchemeSpec::new(SchemeKind::MultipartiteGhz, n, 2).unwrap(),
        problem: ChannelProblem::Dependent {
            family: family.clone(),
            theta,
        },
        shots,
        trials,
        seed: 7,
    };
    let ghz_result = run_mse_experiment(&ghz).unwrap();
    let ghz_ratio =
        ghz_result.empirical_mse.scalar().unwrap() / (1.0 / (4.0 * shots as f64));
    let mut pass = (0.8..=1.25).contains(&ghz_ratio);

    let mes = ExperimentConfig {
        scheme: SchemeSpec::new(SchemeKind::TensorMes, n, 2).unwrap(),
        problem: ChannelProblem::Dependent {
            family: family.clone(),
            theta,
        },
        shots,
        trials,
        seed: 8,
    };
    let mes_result = run_mse_experiment(&mes).unwrap();
    let mes_ratio =
        mes_result.empirical_mse.scalar().unwrap() / (1.0 / (2.0 * shots as f64));
    pass &= (0.8..=1.25).contains(&mes_ratio);
    pass &= start.elapsed().as_secs_f64() < 120.0;

    println!("  GHZ ratio {ghz_ratio:.4}, tensor-MES ratio {mes_ratio:.4}");
    assert!(report(
        6,
        "empirical MSE sits on 1/(N·H) for GHZ and tensor-MES probes",
        pass
    ));
}

#[test]
fn criterion_07_sequential_scaling() {
    let start = Instant::now();
    // Identical channels, n ∈ {1, 2, 4}: empirical MSE within ±25% of the
    // 1 : 1/4 : 1/16 law.
    let template = ExperimentConfig {
        scheme: SchemeSpec::new(SchemeKind::Sequential, 1, 2).unwrap(),
        problem: ChannelProblem::Dependent {
            family: linear_family(1, PI / 4.0),
            theta: 0.55,
        },
        shots: 10_000,
        trials: 2000,
        seed: 29,
    };
    let rows = sweep(&template, &SweepVariable::Channels(vec![1, 2, 4]));
    let mut pass = rows.iter().all(|r| r.error.is_none());
    let base = rows[0].empirical_mse;
    for (row, n) in rows.iter().zip([1.0f64, 2.0, 4.0]) {
        let expected = base / (n * n);
        pass &= (row.empirical_mse / expected - 1.0).abs() <= 0.25;
    }

    // GHZ and sequential schemes on the same family have the same error.
    let family = linear_family(2, PI / 2.0);
    let theta = PI / 4.0;
    let mut results = Vec::new();
    for kind in [SchemeKind::MultipartiteGhz, SchemeKind::Sequential] {
        let config = ExperimentConfig {
            scheme: SchemeSpec::new(kind, 2, 2).unwrap(),
            problem: ChannelProblem::Dependent {
                family: family.clone(),
                theta,
            },
            shots: 10_000,
            trials: 2000,
            seed: 31,
        };
        results.push(
            run_mse_experiment(&config)
                .unwrap()
                .empirical_mse
                .scalar()
                .unwrap(),
        );
    }
    let scheme_ratio = results[0] / results[1];
    pass &= (0.8..=1.25).contains(&scheme_ratio);
    pass &= start.elapsed().as_secs_f64() < 120.0;

    println!("  sequential n-scaling rows {rows:?}");
    println!("  GHZ/sequential MSE ratio {scheme_ratio:.4}");
    assert!(report(
        7,
        "sequential MSE scales as 1/(N·n²) and matches the GHZ scheme",
        pass
    ));
}

#[test]
fn criterion_08_measurement_dominance() {
    let mut pass = true;
    let mut worst = f64::INFINITY;
    let channel = SuDChannel::from_dimension(2).unwrap();

    // 250 pure channel outputs with random measurements.
    let mut rng = rng::stream(777, 0);
    for i in 0..250 {
        let theta: Vec<f64> = (0..3).map(|_| rng.random::<f64>() - 0.5).collect();
        let ext = ExtendedChannel::assemble(&channel, &[theta]).unwrap();
        let probe = random_ket(4, &mut rng).density();
        let h = qfi_pure_channel(ext.operator(), ext.derivatives(), &probe).unwrap();
        let rho = probe.conjugate_by(ext.operator()).unwrap();
        let drho: Vec<CMatrix> = ext
            .derivatives()
            .iter()
            .map(|du| conjugated_state_derivative(ext.operator(), du, &probe))
            .collect();
        let povm = if i % 2 == 0 {
            random_projective_povm(4, &mut rng)
        } else {
            random_povm(4, 5, &mut rng).unwrap()
        };
        let f = fisher_information(&povm, &rho, &drho).unwrap();
        let gap = cr_dominance_gap(&f, &h).unwrap();
        worst = worst.min(gap);
        pass &= gap >= -1e-9;
    }

    // 250 full-rank mixed states with random tangent directions, through
    // the SLD solver.
    for i in 0..250u64 {
        let mut rng = rng::stream(778, i);
        let dim = 2 + (i % 3) as usize;
        let rho = random_density(dim, &mut rng);
        let p = 1 + (i % 2) as usize;
        let drho: Vec<CMatrix> = (0..p)
            .map(|_| random_traceless_hermitian(dim, &mut rng) * cr(0.1))
            .collect();
        let slds = sld_solve(&rho, &drho).unwrap();
        let h = qfi_from_slds(&rho, &slds).unwrap();
        let povm = if i % 2 == 0 {
            random_projective_povm(dim, &mut rng)
        } else {
            random_povm(dim, dim + 2, &mut rng).unwrap()
        };
        let f = fisher_information(&povm, &rho, &drho).unwrap();
        let gap = cr_dominance_gap(&f, &h).unwrap();
        worst = worst.min(gap);
        pass &= gap >= -1e-9;
    }

    println!("  worst dominance gap over 500 triples: {worst:.3e}");
    assert!(report(
        8,
        "measured information never exceeds quantum information (500 triples)",
        pass
    ));
}

#[test]
fn criterion_09_oracle_equivalences() {
    let mut pass = true;

    // SLD-solved information equals the pure-channel formula.
    let channel = SuDChannel::from_dimension(2).unwrap();
    let mut rng = rng::stream(555, 0);
    for _ in 0..50 {
        let theta: Vec<f64> = (0..3).map(|_| rng.random::<f64>() - 0.5).collect();
        let ext = ExtendedChannel::assemble(&channel, &[theta]).unwrap();
        let probe = random_ket(4, &mut rng).density();
        let direct = qfi_pure_channel(ext.operator(), ext.derivatives(), &probe).unwrap();
        let rho = probe.conjugate_by(ext.operator()).unwrap();
        let drho: Vec<CMatrix> = ext
            .derivatives()
            .iter()
            .map(|du| conjugated_state_derivative(ext.operator(), du, &probe))
            .collect();
        let via_slds = qfi_from_slds(&rho, &sld_solve(&rho, &drho).unwrap()).unwrap();
        for j in 0..3 {
            for k in 0..3 {
                pass &= (direct.entry(j, k) - via_slds.entry(j, k)).abs() <= 1e-8;
            }
        }
    }

    // Directional exponential derivatives match finite differences.
    let h = 1e-5;
    for i in 0..100u64 {
        let mut rng = rng::stream(556, i);
        let a = CMatrix::from_fn(2, 2, |_, _| {
            c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let e = CMatrix::from_fn(2, 2, |_, _| {
            c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let exact = exp_directional_derivative(&a, &e).unwrap();
        let plus = matrix_exp(&(&a + &e * cr(h))).unwrap();
        let minus = matrix_exp(&(&a - &e * cr(h))).unwrap();
        let fd = (plus - minus) / cr(2.0 * h);
        let scale = max_abs(&exact).max(1e-6);
        pass &= max_abs(&(fd - exact)) / scale < 1e-6;
    }

    // SU(d) channel derivatives match finite differences of the unitary.
    let su3 = SuDChannel::from_dimension(3).unwrap();
    for i in 0..100u64 {
        let mut rng = rng::stream(557, i);
        let theta: Vec<f64> = (0..8).map(|_| rng.random::<f64>() - 0.5).collect();
        let j = rng.random_range(0..8);
        let exact = su3.unitary_derivative(&theta, j).unwrap();
        let mut tp = theta.clone();
        tp[j] += h;
        let mut tm = theta;
        tm[j] -= h;
        let fd = (su3.unitary_at(&tp).unwrap() - su3.unitary_at(&tm).unwrap()) / cr(2.0 * h);
        let scale = max_abs(&exact).max(1e-3);
        pass &= max_abs(&(fd - exact)) / scale < 1e-6;
    }

    assert!(report(
        9,
        "SLD route matches the pure-channel formula; derivatives match finite differences",
        pass
    ));
}

#[test]
fn criterion_10_adaptive_refinement_and_coverage() {
    let start = Instant::now();
    let family = linear_family(2, PI / 2.0);
    let theta = 0.4;
    let runs = 200;
    let mut narrower = 0;
    let mut covered = 0;
    for seed in 0..runs {
        let trace = adaptive_estimate(&family, theta, 40_000, seed).unwrap();
        if trace.complete && trace.stages.len() == 2 {
            if trace.stages[1].width() < trace.stages[0].width() {
                narrower += 1;
            }
            let [lo, hi] = trace.stages[1].interval;
            if lo <= theta && theta <= hi {
                covered += 1;
            }
        }
    }
    let pass = narrower >= 190 && covered >= 198 && start.elapsed().as_secs_f64() < 120.0;
    println!("  stage-2 narrower in {narrower}/200 runs; final interval covered θ in {covered}/200");
    assert!(report(
        10,
        "adaptive stages shrink (≥95%) and cover the truth (≥99%)",
        pass
    ));
}

#[test]
fn criterion_11_cli_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_qmetro");

    let sim_config = dir.path().join("sim.json");
    std::fs::write(
        &sim_config,
        r#"{
  "version": 1,
  "seed": 7,
  "scheme": {"kind": "multipartite_ghz", "n": 2, "d": 2},
  "family": {"t": 1.5707963267948966, "functions": [
    {"form": "linear", "a": 1.0},
    {"form": "linear", "a": 1.0}
  ]},
  "theta_true": 0.7853981633974483,
  "shots_n": 5000,
  "trials": 200
}"#,
    )
    .unwrap();
    let lemma_config = dir.path().join("lemma.json");
    std::fs::write(
        &lemma_config,
        r#"{"version": 1, "seed": 3, "d": 2, "n": 1, "restarts": 8,
            "random_inputs": 100, "random_thetas": 2}"#,
    )
    .unwrap();

    let mut pass = true;
    for (subcommand, config) in [("simulate", &sim_config), ("verify-lemma", &lemma_config)] {
        let mut outputs: Vec<(Vec<u8>, Option<Vec<u8>>)> = Vec::new();
        for run in 0..2 {
            let out = dir.path().join(format!("{subcommand}-{run}"));
            let status = std::process::Command::new(bin)
                .args([
                    subcommand,
                    "--config",
                    config.to_str().unwrap(),
                    "--out",
                    out.to_str().unwrap(),
                ])
                .status()
                .unwrap();
            pass &= status.success();
            let json = std::fs::read(out.with_extension("json")).unwrap();
            let csv = std::fs::read(out.with_extension("csv")).ok();
            outputs.push((json, csv));
        }
        pass &= outputs[0] == outputs[1];
    }

    // Same config through a different seed must differ.
    let out_a = dir.path().join("reseeded");
    let status = std::process::Command::new(bin)
        .args([
            "simulate",
            "--config",
            sim_config.to_str().unwrap(),
            "--seed",
            "8",
            "--out",
            out_a.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    pass &= status.success();
    let reseeded = std::fs::read(out_a.with_extension("json")).unwrap();
    let original = std::fs::read(
        dir.path()
            .join("simulate-0")
            .with_extension("json"),
    )
    .unwrap();
    pass &= reseeded != original;

    assert!(report(
        11,
        "identical config and seed give byte-identical output files",
        pass
    ));
}
