//! Subcommand implementations. Each one parses its config, delegates to the
//! library, and assembles a serializable report embedding the resolved
//! config.

use nalgebra::DMatrix;
use serde::Serialize;

use qmetro::channels::{
    apply_extended, extended_operator, extended_partial_derivative,
    extended_scalar_derivative, sequential_operator, sequential_scalar_derivative,
    DependentFamily, SuDChannel, DEFAULT_CONDITION_GRID,
};
use qmetro::error::Error as CoreError;
use qmetro::estimation::{
    adaptive_estimate, rows_to_csv, run_mse_experiment, sweep, AdaptiveTrace, ChannelProblem,
    ExperimentConfig, ExperimentResult, SweepRow, SweepVariable,
};
use qmetro::information::{
    conjugated_state_derivative, cr_dominance_gap, fisher_information, qfi_pure_channel,
    qfi_pure_channel_blocked, FisherMatrix, QfiMatrix,
};
use qmetro::quantum::{CMatrix, DensityOperator, Ket};
use qmetro::rng;
use qmetro::optimize::{
    ballester_ratio, maximize_trace_qfi, sweep_thetas, trace_qfi_objective, ExtendedChannel,
    OptReport, OptimizerSettings,
};
use qmetro::schemes::{
    ghz_state, mes_state, multipartite_mes, plus_state, scheme_povm, two_outcome_projector,
    SchemeKind, SchemePovm, SchemeSpec,
};

use crate::config::{
    AdaptiveConfig, QfiConfig, SimulateConfig, SuChannelsConfig, SweepConfig, VerifyLemmaConfig,
};
use crate::CliError;

fn random_ket(dim: usize, rng: &mut impl rand::Rng) -> Ket {
    use qmetro::quantum::{c, CVector};
    let v = CVector::from_fn(dim, |_, _| {
        c(
            rng.sample(rand_distr::StandardNormal),
            rng.sample(rand_distr::StandardNormal),
        )
    });
    Ket::normalized(v).expect("gaussian draw is nonzero")
}

/// Adds the family's condition report to condition-violation errors so a
/// failing config explains itself.
fn explain_family_error(e: CoreError, family: &DependentFamily) -> CliError {
    match e {
        CoreError::NonMonotoneFamily | CoreError::DomainViolation(_) => {
            let detail = family
                .validate(DEFAULT_CONDITION_GRID)
                .ok()
                .and_then(|r| serde_json::to_string(&r).ok())
                .unwrap_or_default();
            CliError::Config(format!("{e}; condition report: {detail}"))
        }
        other => CliError::from(other),
    }
}

// ---------------------------------------------------------------------------
// qfi
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
pub struct QfiReport {
    pub command: &'static str,
    pub config: QfiConfig,
    pub qfi: QfiMatrix,
    pub trace_qfi: f64,
    pub fisher: FisherMatrix,
    pub trace_fisher: f64,
    /// min eig(H − F); nonnegative up to numerical tolerance.
    pub cr_gap: f64,
}

struct SchemeInformation {
    qfi: QfiMatrix,
    fisher: FisherMatrix,
}

fn dependent_inputs(
    family: &Option<crate::config::FamilyConfig>,
    theta: Option<f64>,
) -> Result<(DependentFamily, f64), CliError> {
    let fam = family
        .as_ref()
        .ok_or_else(|| CliError::Config("this scheme requires a \"family\" block".into()))?
        .build()?;
    let theta =
        theta.ok_or_else(|| CliError::Config("this scheme requires a \"theta\" value".into()))?;
    Ok((fam, theta))
}

fn phase_scheme_information(
    spec: &SchemeSpec,
    family: &DependentFamily,
    theta: f64,
) -> Result<SchemeInformation, CliError> {
    let us = family
        .unitaries_at(theta)
        .map_err(|e| explain_family_error(e, family))?;
    let dus = family.unitary_derivatives_at(theta)?;
    let n = family.n();
    let (probe, u, du, povm) = match spec.kind {
        SchemeKind::MultipartiteGhz => {
            let probe = ghz_state(2 * n)?.density();
            let u = extended_operator(&us)?;
            let du = extended_scalar_derivative(&us, &dus)?;
            let SchemePovm::Global(povm) = scheme_povm(spec)? else {
                unreachable!()
            };
            (probe, u, du, povm)
        }
        SchemeKind::Sequential | SchemeKind::Adaptive => {
            let probe = plus_state().density();
            let u = sequential_operator(&us, 2)?;
            let du = sequential_scalar_derivative(&us, &dus, 2)?;
            let SchemePovm::Global(povm) = scheme_povm(spec)? else {
                unreachable!()
            };
            (probe, u, du, povm)
        }
        _ => unreachable!(),
    };
    let qfi = qfi_pure_channel(&u, std::slice::from_ref(&du), &probe)?;
    let rho_out = probe.conjugate_by(&u)?;
    let drho = conjugated_state_derivative(&u, &du, &probe);
    let fisher = fisher_information(&povm, &rho_out, std::slice::from_ref(&drho))?;
    Ok(SchemeInformation { qfi, fisher })
}

fn tensor_mes_information(
    family: &DependentFamily,
    theta: f64,
) -> Result<SchemeInformation, CliError> {
    let probe = mes_state(2)?.density();
    let povm = two_outcome_projector(&mes_state(2)?);
    let mut h = 0.0;
    let mut f = 0.0;
    for j in 0..family.n() {
        let us = vec![family
            .member_unitary(j, theta)
            .map_err(|e| explain_family_error(e, family))?];
        let u = extended_operator(&us)?;
        let du = extended_partial_derivative(
            &us,
            0,
            &family.member_unitary_derivative(j, theta)?,
        )?;
        let qfi_j = qfi_pure_channel(&u, std::slice::from_ref(&du), &probe)?;
        h += qfi_j.scalar().expect("scalar parameter");
        let rho_out = apply_extended(&us, &probe)?;
        let drho = conjugated_state_derivative(&u, &du, &probe);
        let fisher_j = fisher_information(&povm, &rho_out, std::slice::from_ref(&drho))?;
        f += fisher_j.scalar().expect("scalar parameter");
    }
    Ok(SchemeInformation {
        qfi: QfiMatrix::new(DMatrix::from_element(1, 1, h), 1)?,
        fisher: FisherMatrix::new(DMatrix::from_element(1, 1, f))?,
    })
}

fn individual_information(su: &SuChannelsConfig) -> Result<SchemeInformation, CliError> {
    let channel = SuDChannel::from_dimension(su.d)?;
    let p = channel.param_count();
    let n = su.thetas.len();
    if n == 0 {
        return Err(CliError::Config("su_channels.thetas must be nonempty".into()));
    }
    let probe = mes_state(su.d)?.density();
    let povm = two_outcome_projector(&mes_state(su.d)?);
    let mut h = DMatrix::zeros(n * p, n * p);
    let mut f = DMatrix::zeros(n * p, n * p);
    for (j, theta) in su.thetas.iter().enumerate() {
        let u = channel.unitary_at(theta)?;
        let us = [u];
        let ext = extended_operator(&us)?;
        let dus: Vec<CMatrix> = (0..p)
            .map(|k| {
                let du = channel.unitary_derivative(theta, k)?;
                extended_partial_derivative(&us, 0, &du)
            })
            .collect::<Result<_, _>>()?;
        let block = qfi_pure_channel_blocked(&ext, &dus, &probe, p)?;
        let rho_out: DensityOperator = probe.conjugate_by(&ext)?;
        let drho: Vec<CMatrix> = dus
            .iter()
            .map(|du| conjugated_state_derivative(&ext, du, &probe))
            .collect();
        let fisher_block = fisher_information(&povm, &rho_out, &drho)?;
        for a in 0..p {
            for b in 0..p {
                h[(j * p + a, j * p + b)] = block.entry(a, b);
                f[(j * p + a, j * p + b)] = fisher_block.entries()[(a, b)];
            }
        }
    }
    Ok(SchemeInformation {
        qfi: QfiMatrix::new(h, p)?,
        fisher: FisherMatrix::new(f)?,
    })
}

pub fn cmd_qfi(config: QfiConfig) -> Result<QfiReport, CliError> {
    let spec = config.scheme.build()?;
    let info = match spec.kind {
        SchemeKind::MultipartiteGhz | SchemeKind::Sequential | SchemeKind::Adaptive => {
            let (family, theta) = dependent_inputs(&config.family, config.theta)?;
            check_scheme_matches_family(&spec, &family)?;
            phase_scheme_information(&spec, &family, theta)?
        }
        SchemeKind::TensorMes => {
            let (family, theta) = dependent_inputs(&config.family, config.theta)?;
            check_scheme_matches_family(&spec, &family)?;
            tensor_mes_information(&family, theta)?
        }
        SchemeKind::IndividualPerChannel => {
            let su = config
                .su_channels
                .as_ref()
                .ok_or_else(|| {
                    CliError::Config("individual_per_channel requires \"su_channels\"".into())
                })?;
            if su.d != spec.d || su.thetas.len() != spec.n {
                return Err(CliError::Config(
                    "scheme n/d must match su_channels".into(),
                ));
            }
            individual_information(su)?
        }
    };
    let cr_gap = cr_dominance_gap(&info.fisher, &info.qfi)?;
    Ok(QfiReport {
        command: "qfi",
        trace_qfi: info.qfi.trace(),
        trace_fisher: info.fisher.trace(),
        qfi: info.qfi,
        fisher: info.fisher,
        cr_gap,
        config,
    })
}

fn check_scheme_matches_family(
    spec: &SchemeSpec,
    family: &DependentFamily,
) -> Result<(), CliError> {
    if spec.n != family.n() {
        return Err(CliError::Config(format!(
            "scheme has n = {}, family has n = {}",
            spec.n,
            family.n()
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
pub struct SimulateReport {
    pub command: &'static str,
    pub config: SimulateConfig,
    pub result: ExperimentResult,
}

fn build_problem(
    spec: &SchemeSpec,
    family: &Option<crate::config::FamilyConfig>,
    theta: Option<f64>,
    su_channels: &Option<SuChannelsConfig>,
) -> Result<ChannelProblem, CliError> {
    match spec.kind {
        SchemeKind::IndividualPerChannel => {
            let su = su_channels.as_ref().ok_or_else(|| {
                CliError::Config("individual_per_channel requires \"su_channels\"".into())
            })?;
            Ok(ChannelProblem::IndependentSuD {
                d: su.d,
                thetas: su.thetas.clone(),
            })
        }
        _ => {
            let (fam, theta) = dependent_inputs(family, theta)?;
            Ok(ChannelProblem::Dependent { family: fam, theta })
        }
    }
}

pub fn cmd_simulate(config: SimulateConfig) -> Result<(SimulateReport, String), CliError> {
    let spec = config.scheme.build()?;
    let problem = build_problem(&spec, &config.family, config.theta_true, &config.su_channels)?;
    let experiment = ExperimentConfig {
        scheme: spec,
        problem,
        shots: config.shots_n,
        trials: config.trials,
        seed: config.seed,
    };
    let result = run_mse_experiment(&experiment).map_err(|e| match &experiment.problem {
        ChannelProblem::Dependent { family, .. } => explain_family_error(e, family),
        _ => CliError::from(e),
    })?;
    let csv = rows_to_csv(&[result.to_row(config.shots_n, config.seed, config.trials)]);
    Ok((
        SimulateReport {
            command: "simulate",
            config,
            result,
        },
        csv,
    ))
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
pub struct SweepReport {
    pub command: &'static str,
    pub config: SweepConfig,
    pub rows: Vec<SweepRow>,
}

pub fn cmd_sweep(config: SweepConfig) -> Result<(SweepReport, String), CliError> {
    let vary = match (&config.vary.shots, &config.vary.channels) {
        (Some(shots), None) if !shots.is_empty() => SweepVariable::Shots(shots.clone()),
        (None, Some(channels)) if !channels.is_empty() => {
            SweepVariable::Channels(channels.clone())
        }
        _ => {
            return Err(CliError::Config(
                "\"vary\" must set exactly one nonempty list: \"shots\" or \"channels\"".into(),
            ))
        }
    };
    let spec = config.scheme.build()?;
    let problem = build_problem(&spec, &config.family, config.theta_true, &config.su_channels)?;
    let template = ExperimentConfig {
        scheme: spec,
        problem,
        shots: config.shots_n,
        trials: config.trials,
        seed: config.seed,
    };
    let rows = sweep(&template, &vary);
    let csv = rows_to_csv(&rows);
    Ok((
        SweepReport {
            command: "sweep",
            config,
            rows,
        },
        csv,
    ))
}

// ---------------------------------------------------------------------------
// verify-lemma
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
pub struct LemmaCheck {
    pub name: &'static str,
    pub pass: bool,
    pub observed: f64,
    pub threshold: f64,
}

impl LemmaCheck {
    fn upper(name: &'static str, observed: f64, threshold: f64) -> Self {
        Self {
            name,
            pass: observed <= threshold,
            observed,
            threshold,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct VerifyLemmaReport {
    pub command: &'static str,
    pub config: VerifyLemmaConfig,
    pub bound: f64,
    pub optimizer: OptReport,
    pub checks: Vec<LemmaCheck>,
    /// Max entrywise |H(mes) − (4/d)I| across the random θ sweep; reported
    /// for inspection, not gated.
    pub mes_identity_max_deviation: f64,
    pub pass: bool,
}

pub fn cmd_verify_lemma(config: VerifyLemmaConfig) -> Result<VerifyLemmaReport, CliError> {
    if config.d < 2 {
        return Err(CliError::Config("d must be >= 2".into()));
    }
    if config.n == 0 {
        return Err(CliError::Config("n must be >= 1".into()));
    }
    let channel = SuDChannel::from_dimension(config.d)?;
    let p = channel.param_count();
    let d = config.d;
    let n = config.n;

    // Attainment at the origin.
    let origin = vec![vec![0.0; p]; n];
    let ext0 = ExtendedChannel::assemble(&channel, &origin)?;
    let bound = ext0.trace_bound();
    let settings = OptimizerSettings {
        restarts: config.restarts,
        ..OptimizerSettings::default()
    };
    let optimizer = maximize_trace_qfi(&ext0, &settings, config.seed)?;

    let gap_tol = if n == 1 { 1e-4 } else { 1e-3 };
    let mut checks = vec![LemmaCheck::upper(
        "optimizer_attains_bound",
        optimizer.gap.abs(),
        gap_tol,
    )];
    let uniform = 1.0 / (d as f64).sqrt();
    let schmidt_dev = optimizer
        .schmidt_spectrum
        .iter()
        .flatten()
        .map(|s| (s - uniform).abs())
        .fold(0.0f64, f64::max);
    checks.push(LemmaCheck::upper(
        "maximizer_schmidt_uniform",
        if optimizer.gap.abs() <= gap_tol {
            schmidt_dev
        } else {
            0.0
        },
        1e-3,
    ));
    checks.push(LemmaCheck::upper(
        "maximizer_gradient_vanishes",
        optimizer.gradient_inf_norm,
        1e-3,
    ));

    // Bound sweep over the origin plus random θ-points.
    let theta_points = sweep_thetas(p, n, config.random_thetas, config.seed);
    let mut max_excess = f64::NEG_INFINITY;
    let mut max_ballester_excess = f64::NEG_INFINITY;
    let mut max_mes_ratio_dev = f64::NEG_INFINITY;
    let mut mes_identity_max_deviation: f64 = 0.0;
    let probe_dim = d.pow(2 * n as u32);
    let mes = mes_state(d)?;
    for (ti, thetas) in theta_points.iter().enumerate() {
        let ext = ExtendedChannel::assemble(&channel, thetas)?;
        let mut rng = rng::stream(config.seed, 1 + ti as u64);
        for _ in 0..config.random_inputs {
            let ket = random_ket(probe_dim, &mut rng);
            let value = trace_qfi_objective(&ext, &ket)?;
            max_excess = max_excess.max(value - bound);
            if n == 1 {
                let ratio = ballester_ratio(&ext, &ket)?;
                max_ballester_excess = max_ballester_excess.max(ratio - (d * d - 1) as f64);
            }
        }
        if n == 1 {
            let mes_ratio = ballester_ratio(&ext, &mes)?;
            max_mes_ratio_dev = max_mes_ratio_dev.max((mes_ratio - (d * d - 1) as f64).abs());
            // H(mes) against (4/d)I, informational.
            let h = qmetro::information::qfi_pure_ket(ext.operator(), ext.derivatives(), &mes)?;
            for a in 0..p {
                for b in 0..p {
                    let expect = if a == b { 4.0 / d as f64 } else { 0.0 };
                    mes_identity_max_deviation =
                        mes_identity_max_deviation.max((h.entry(a, b) - expect).abs());
                }
            }
        }
    }
    checks.push(LemmaCheck::upper("random_probe_bound", max_excess, 1e-6));
    if n == 1 {
        checks.push(LemmaCheck::upper(
            "trace_ratio_bound",
            max_ballester_excess,
            1e-6,
        ));
        checks.push(LemmaCheck::upper(
            "trace_ratio_equality_at_mes",
            max_mes_ratio_dev,
            1e-9,
        ));
    }

    // Product of per-channel maximally entangled probes at the origin.
    let mes_factors: Vec<&Ket> = (0..n).map(|_| &mes).collect();
    let mes_product = qmetro::quantum::tensor_kets(&mes_factors)?;
    let product_value = trace_qfi_objective(&ext0, &mes_product)?;
    checks.push(LemmaCheck::upper(
        "mes_product_attains_bound",
        (product_value - bound).abs(),
        1e-9,
    ));
    if n >= 2 {
        let multi = multipartite_mes(d, 2 * n)?;
        let multi_value = trace_qfi_objective(&ext0, &multi)?;
        checks.push(LemmaCheck::upper(
            "multipartite_probe_attains_bound",
            (multi_value - bound).abs(),
            1e-9,
        ));
    }

    let pass = checks.iter().all(|c| c.pass);
    Ok(VerifyLemmaReport {
        command: "verify-lemma",
        config,
        bound,
        optimizer,
        checks,
        mes_identity_max_deviation,
        pass,
    })
}

// ---------------------------------------------------------------------------
// adaptive
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
pub struct AdaptiveReport {
    pub command: &'static str,
    pub config: AdaptiveConfig,
    pub trace: AdaptiveTrace,
}

pub fn cmd_adaptive(config: AdaptiveConfig) -> Result<AdaptiveReport, CliError> {
    let family = config.family.build()?;
    let trace = adaptive_estimate(&family, config.theta_true, config.total_shots, config.seed)
        .map_err(|e| explain_family_error(e, &family))?;
    Ok(AdaptiveReport {
        command: "adaptive",
        config,
        trace,
    })
}

