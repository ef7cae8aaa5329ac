//! Born-rule sampling, phase estimators, and Monte-Carlo mean-square-error
//! experiments for every scheme.
//!
//! Trials are independent: each draws from its own random stream derived
//! from the root seed and the trial index, so results are bit-identical
//! regardless of execution order or worker count. Aggregation is a
//! deterministic fold in trial-index order.

mod adaptive;
mod mle;

pub use adaptive::{adaptive_estimate, AdaptiveStage, AdaptiveTrace};

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;

use crate::channels::{
    apply_extended, apply_sequential, extended_operator, extended_scalar_derivative,
    sequential_operator, sequential_scalar_derivative, DependentFamily, DEFAULT_CONDITION_GRID,
};
use crate::error::{Error, Result};
use crate::information::{qfi_pure_channel, QfiMatrix};
use crate::quantum::DensityOperator;
use crate::rng::{derive_seed, stream};
use crate::schemes::{
    ghz_sign_povm, ghz_state, mes_state, plus_state, scheme_povm, sign_povm, Povm, SchemeKind,
    SchemePovm, SchemeSpec,
};

/// The channel model an experiment runs against, together with the true
/// parameter value used to generate data.
#[derive(Debug, Clone)]
pub enum ChannelProblem {
    /// Phase family with a shared scalar parameter.
    Dependent { family: DependentFamily, theta: f64 },
    /// Unrelated SU(d) channels, one parameter vector each.
    IndependentSuD { d: usize, thetas: Vec<Vec<f64>> },
}

impl ChannelProblem {
    pub fn n(&self) -> usize {
        match self {
            ChannelProblem::Dependent { family, .. } => family.n(),
            ChannelProblem::IndependentSuD { thetas, .. } => thetas.len(),
        }
    }

    pub fn d(&self) -> usize {
        match self {
            ChannelProblem::Dependent { .. } => 2,
            ChannelProblem::IndependentSuD { d, .. } => *d,
        }
    }
}

/// A full description of one Monte-Carlo experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub scheme: SchemeSpec,
    pub problem: ChannelProblem,
    /// Input-state uses per trial.
    pub shots: u64,
    /// Monte-Carlo repetitions.
    pub trials: u64,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.shots == 0 {
            return Err(Error::InvalidConfig("shots must be >= 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be >= 1".into()));
        }
        if self.scheme.n != self.problem.n() {
            return Err(Error::InvalidConfig(format!(
                "scheme has n = {}, problem has n = {}",
                self.scheme.n,
                self.problem.n()
            )));
        }
        if self.scheme.d != self.problem.d() {
            return Err(Error::InvalidConfig(format!(
                "scheme has d = {}, problem has d = {}",
                self.scheme.d,
                self.problem.d()
            )));
        }
        match (&self.scheme.kind, &self.problem) {
            (SchemeKind::IndividualPerChannel, ChannelProblem::IndependentSuD { d, thetas }) => {
                for (j, th) in thetas.iter().enumerate() {
                    if th.len() != d * d - 1 {
                        return Err(Error::InvalidConfig(format!(
                            "channel {j} has {} parameters, expected {}",
                            th.len(),
                            d * d - 1
                        )));
                    }
                }
                Ok(())
            }
            (SchemeKind::IndividualPerChannel, _) => Err(Error::InvalidConfig(
                "individual_per_channel runs against SU(d) channel lists".into(),
            )),
            (_, ChannelProblem::IndependentSuD { .. }) => Err(Error::InvalidConfig(
                "phase-family schemes run against a dependent family".into(),
            )),
            (_, ChannelProblem::Dependent { family, theta }) => {
                if !family.contains(*theta) {
                    return Err(Error::DomainViolation(format!(
                        "theta_true = {theta} outside [0, {}]",
                        family.domain_upper()
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Scalar or matrix-valued mean square error.
#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum MseEstimate {
    Scalar(f64),
    Matrix(Vec<Vec<f64>>),
}

impl MseEstimate {
    pub fn scalar(&self) -> Option<f64> {
        match self {
            MseEstimate::Scalar(v) => Some(*v),
            MseEstimate::Matrix(_) => None,
        }
    }

    /// Scalar value, or the trace of the error matrix.
    pub fn trace(&self) -> f64 {
        match self {
            MseEstimate::Scalar(v) => *v,
            MseEstimate::Matrix(m) => (0..m.len()).map(|i| m[i][i]).sum(),
        }
    }
}

/// Outcome of a Monte-Carlo experiment.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentResult {
    pub empirical_mse: MseEstimate,
    /// 1/(N·H) for scalar problems, H⁻¹/N for vector problems.
    pub theoretical_mse: MseEstimate,
    pub qfi: QfiMatrix,
    /// Per-trial outcome tallies.
    pub counts_summary: Vec<Vec<u64>>,
    /// Trials whose estimator was undefined (excluded from the mean).
    pub estimator_failures: u64,
    /// Trials that hit a count boundary (n₀ ∈ {0, N}) or a clamped phase
    /// inversion; kept in the mean but flagged.
    pub boundary_flags: u64,
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// Multinomial draw over an outcome distribution via a binomial chain.
pub fn sample_from_probabilities(
    probs: &[f64],
    shots: u64,
    rng: &mut impl Rng,
) -> Result<Vec<u64>> {
    if probs.is_empty() {
        return Err(Error::InvalidPovm("no outcomes".into()));
    }
    let total: f64 = probs.iter().sum();
    if probs.iter().any(|&p| !(0.0..=1.0 + 1e-9).contains(&p)) || (total - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidPovm(format!(
            "probabilities must be in [0,1] and sum to 1, got sum {total}"
        )));
    }
    let mut counts = vec![0u64; probs.len()];
    let mut remaining = shots;
    let mut mass_left = 1.0f64;
    for (m, &p) in probs.iter().enumerate().take(probs.len() - 1) {
        if remaining == 0 {
            break;
        }
        let q = if mass_left > 1e-300 {
            (p / mass_left).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let draw = Binomial::new(remaining, q)
            .expect("q is clamped to [0,1]")
            .sample(rng);
        counts[m] = draw;
        remaining -= draw;
        mass_left -= p;
    }
    *counts.last_mut().unwrap() = remaining;
    Ok(counts)
}

/// Samples `shots` measurement outcomes of `povm` on `rho`.
pub fn sample_outcomes(
    rho: &DensityOperator,
    povm: &Povm,
    shots: u64,
    rng: &mut impl Rng,
) -> Result<Vec<u64>> {
    if shots == 0 {
        return Err(Error::InvalidConfig("shots must be >= 1".into()));
    }
    let probs = povm.probabilities(rho)?;
    sample_from_probabilities(&probs, shots, rng)
}

// ---------------------------------------------------------------------------
// Phase estimators
// ---------------------------------------------------------------------------

/// Inverts cos²(φ̂/2) = n₀/N to φ̂ = 2 arccos √(n₀/N) ∈ [0, π].
pub fn invert_phase(n0: u64, shots: u64) -> f64 {
    assert!(shots >= 1 && n0 <= shots, "need 0 <= n0 <= N, N >= 1");
    invert_phase_ratio(n0 as f64 / shots as f64)
}

pub(crate) fn invert_phase_ratio(ratio: f64) -> f64 {
    2.0 * ratio.clamp(0.0, 1.0).sqrt().acos()
}

/// Resolves the branch of φ ∈ [0, 2π] from the auxiliary measurement whose
/// outcome-0 probability is (1 + sin φ)/2: the observed fraction decides the
/// sign of sin φ.
pub fn disambiguate_phase(phi_hat: f64, n0y: u64, shots_y: u64) -> f64 {
    assert!(shots_y >= 1 && n0y <= shots_y, "need 0 <= n0 <= N, N >= 1");
    if n0y as f64 / shots_y as f64 >= 0.5 {
        phi_hat
    } else {
        2.0 * std::f64::consts::PI - phi_hat
    }
}

/// Result of inverting an accumulated phase back to the parameter.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PhaseInversion {
    pub theta: f64,
    /// The target phase fell outside the family's range and was clamped to
    /// the nearest endpoint.
    pub clamped: bool,
}

/// Bisection interval width at which phase inversion stops.
const INVERSION_RESOLUTION: f64 = 1e-12;

fn invert_monotone(eval: impl Fn(f64) -> f64, domain_upper: f64, target: f64) -> PhaseInversion {
    let lo_val = eval(0.0);
    let hi_val = eval(domain_upper);
    if target <= lo_val {
        return PhaseInversion {
            theta: 0.0,
            clamped: target < lo_val,
        };
    }
    if target >= hi_val {
        return PhaseInversion {
            theta: domain_upper,
            clamped: target > hi_val,
        };
    }
    let (mut a, mut b) = (0.0, domain_upper);
    while b - a > INVERSION_RESOLUTION {
        let mid = 0.5 * (a + b);
        if eval(mid) < target {
            a = mid;
        } else {
            b = mid;
        }
    }
    PhaseInversion {
        theta: 0.5 * (a + b),
        clamped: false,
    }
}

pub(crate) fn invert_phase_sum(family: &DependentFamily, phi: f64) -> PhaseInversion {
    invert_monotone(|t| family.phase_sum(t), family.domain_upper(), phi)
}

pub(crate) fn invert_member(family: &DependentFamily, j: usize, phi: f64) -> PhaseInversion {
    invert_monotone(|t| family.f(j, t), family.domain_upper(), phi)
}

/// Solves Σⱼ fⱼ(θ) = φ̃ by bisection on [0, t].
///
/// The family must be monotone non-decreasing (condition (b)); targets
/// outside the phase range are clamped to the nearest endpoint and flagged.
pub fn phase_to_theta(family: &DependentFamily, phi: f64) -> Result<PhaseInversion> {
    let report = family.validate(DEFAULT_CONDITION_GRID)?;
    if !report.cond_b {
        return Err(Error::NonMonotoneFamily);
    }
    Ok(invert_phase_sum(family, phi))
}

// ---------------------------------------------------------------------------
// Monte-Carlo experiments
// ---------------------------------------------------------------------------

/// Shots spent on the sign measurement when branch disambiguation is active.
fn disambiguation_shots(shots: u64) -> u64 {
    (shots / 100).max(64)
}

pub(crate) struct TrialOutcome {
    pub counts: Vec<u64>,
    /// Per-parameter estimation error θ̂ − θ, or None when undefined.
    pub errors: Option<Vec<f64>>,
    pub boundary: bool,
}

/// Accumulated error matrix, per-trial tallies, failure count, boundary
/// count.
pub(crate) type FoldedTrials = (DMatrix<f64>, Vec<Vec<u64>>, u64, u64);

pub(crate) fn fold_trials(
    outcomes: Vec<TrialOutcome>,
    p: usize,
    trials: u64,
) -> Result<FoldedTrials> {
    let mut failures = 0u64;
    let mut boundary = 0u64;
    let mut acc = DMatrix::zeros(p, p);
    let mut counts = Vec::with_capacity(outcomes.len());
    let mut successes = 0u64;
    for t in outcomes {
        counts.push(t.counts);
        if t.boundary {
            boundary += 1;
        }
        match t.errors {
            Some(e) => {
                successes += 1;
                for j in 0..p {
                    for k in 0..p {
                        acc[(j, k)] += e[j] * e[k];
                    }
                }
            }
            None => failures += 1,
        }
    }
    if failures * 2 > trials {
        return Err(Error::EstimatorBreakdown { failures, trials });
    }
    if successes > 0 {
        acc /= successes as f64;
    }
    Ok((acc, counts, failures, boundary))
}

fn scalar_information(h: &QfiMatrix) -> Result<f64> {
    let v = h.scalar().expect("scalar problem");
    if v <= 0.0 {
        return Err(Error::SingularMatrix(
            "quantum information vanishes at theta_true".into(),
        ));
    }
    Ok(v)
}

/// Runs the configured Monte-Carlo experiment: builds the scheme's probe,
/// applies the channels at the true parameter, samples each trial, runs the
/// scheme's estimator, and compares the empirical mean square error against
/// 1/(N·H).
pub fn run_mse_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    match config.scheme.kind {
        SchemeKind::MultipartiteGhz | SchemeKind::Sequential => run_phase_sum_scheme(config),
        SchemeKind::TensorMes => run_tensor_mes(config),
        SchemeKind::Adaptive => run_adaptive(config),
        SchemeKind::IndividualPerChannel => mle::run_individual_su_d(config),
    }
}

/// GHZ-probe and sequential schemes share the cos²(φ/2) estimator; they
/// differ only in how the accumulated phase is physically realized.
fn run_phase_sum_scheme(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let ChannelProblem::Dependent { family, theta } = &config.problem else {
        unreachable!("validated");
    };
    let report = family.validate(DEFAULT_CONDITION_GRID)?;
    if !report.cond_b {
        return Err(Error::NonMonotoneFamily);
    }
    if !report.cond_c_2pi {
        return Err(Error::DomainViolation(
            "phase sum exceeds [0, 2π]; the accumulated phase is not identifiable".into(),
        ));
    }
    let disambiguate = !report.cond_c_pi;

    let us = family.unitaries_at(*theta)?;
    let dus = family.unitary_derivatives_at(*theta)?;
    let n = family.n();

    let (qfi, rho_out, povm, povm_sign) = match config.scheme.kind {
        SchemeKind::MultipartiteGhz => {
            let probe = ghz_state(2 * n)?.density();
            let u = extended_operator(&us)?;
            let du = extended_scalar_derivative(&us, &dus)?;
            let qfi = qfi_pure_channel(&u, std::slice::from_ref(&du), &probe)?;
            let rho_out = apply_extended(&us, &probe)?;
            let SchemePovm::Global(povm) = scheme_povm(&config.scheme)? else {
                unreachable!();
            };
            (qfi, rho_out, povm, ghz_sign_povm(2 * n)?)
        }
        SchemeKind::Sequential => {
            let probe = plus_state().density();
            let u = sequential_operator(&us, 2)?;
            let du = sequential_scalar_derivative(&us, &dus, 2)?;
            let qfi = qfi_pure_channel(&u, std::slice::from_ref(&du), &probe)?;
            let rho_out = apply_sequential(&us, &probe)?;
            let SchemePovm::Global(povm) = scheme_povm(&config.scheme)? else {
                unreachable!();
            };
            (qfi, rho_out, povm, sign_povm())
        }
        _ => unreachable!(),
    };

    let h = scalar_information(&qfi)?;
    let theoretical = 1.0 / (config.shots as f64 * h);
    let probs = povm.probabilities(&rho_out)?;
    let probs_sign = if disambiguate {
        Some(povm_sign.probabilities(&rho_out)?)
    } else {
        None
    };
    let y_shots = disambiguation_shots(config.shots);

    let outcomes: Vec<TrialOutcome> = (0..config.trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(config.seed, i);
            let counts = sample_from_probabilities(&probs, config.shots, &mut rng)
                .expect("probabilities validated");
            let n0 = counts[0];
            let at_boundary = n0 == 0 || n0 == config.shots;
            let phi_hat = invert_phase(n0, config.shots);
            let phi = match &probs_sign {
                Some(py) => {
                    let yc = sample_from_probabilities(py, y_shots, &mut rng)
                        .expect("probabilities validated");
                    disambiguate_phase(phi_hat, yc[0], y_shots)
                }
                None => phi_hat,
            };
            let inv = invert_phase_sum(family, phi);
            TrialOutcome {
                counts,
                errors: Some(vec![inv.theta - theta]),
                boundary: at_boundary || inv.clamped,
            }
        })
        .collect();

    let (acc, counts_summary, failures, boundary) = fold_trials(outcomes, 1, config.trials)?;
    Ok(ExperimentResult {
        empirical_mse: MseEstimate::Scalar(acc[(0, 0)]),
        theoretical_mse: MseEstimate::Scalar(theoretical),
        qfi,
        counts_summary,
        estimator_failures: failures,
        boundary_flags: boundary,
    })
}

/// One maximally entangled probe per channel; per-channel phase estimates
/// fⱼ⁻¹(φ̂ⱼ) are combined by an information-weighted average with weights
/// (f′ⱼ)².
fn run_tensor_mes(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let ChannelProblem::Dependent { family, theta } = &config.problem else {
        unreachable!("validated");
    };
    let report = family.validate(DEFAULT_CONDITION_GRID)?;
    if !report.cond_b {
        return Err(Error::NonMonotoneFamily);
    }
    let n = family.n();
    let mes = mes_state(2)?;
    let probe = mes.density();
    let SchemePovm::PerChannel(povms) = scheme_povm(&config.scheme)? else {
        unreachable!();
    };

    let mut h_total = 0.0;
    let mut probs = Vec::with_capacity(n);
    for (j, povm) in povms.iter().enumerate() {
        let us = vec![family.member_unitary(j, *theta)?];
        let du = crate::channels::extended_partial_derivative(
            &us,
            0,
            &family.member_unitary_derivative(j, *theta)?,
        )?;
        let u = extended_operator(&us)?;
        let qfi_j = qfi_pure_channel(&u, std::slice::from_ref(&du), &probe)?;
        h_total += qfi_j.scalar().expect("scalar parameter");
        let rho_out = apply_extended(&us, &probe)?;
        probs.push(povm.probabilities(&rho_out)?);
    }
    let qfi = QfiMatrix::new(DMatrix::from_element(1, 1, h_total), 1)?;
    let h = scalar_information(&qfi)?;
    let theoretical = 1.0 / (config.shots as f64 * h);

    let outcomes: Vec<TrialOutcome> = (0..config.trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(config.seed, i);
            let mut counts = Vec::with_capacity(2 * n);
            let mut weight_sum = 0.0;
            let mut weighted_theta = 0.0;
            let mut at_boundary = false;
            for pj in &probs {
                let cj = sample_from_probabilities(pj, config.shots, &mut rng)
                    .expect("probabilities validated");
                let n0 = cj[0];
                at_boundary |= n0 == 0 || n0 == config.shots;
                counts.extend_from_slice(&cj);
                let phi_hat = invert_phase(n0, config.shots);
                let j = counts.len() / 2 - 1;
                let inv = invert_member(family, j, phi_hat);
                at_boundary |= inv.clamped;
                let w = family.f_prime(j, inv.theta).powi(2);
                weight_sum += w;
                weighted_theta += w * inv.theta;
            }
            let errors = if weight_sum > 0.0 {
                Some(vec![weighted_theta / weight_sum - theta])
            } else {
                None
            };
            TrialOutcome {
                counts,
                errors,
                boundary: at_boundary,
            }
        })
        .collect();

    let (acc, counts_summary, failures, boundary) = fold_trials(outcomes, 1, config.trials)?;
    Ok(ExperimentResult {
        empirical_mse: MseEstimate::Scalar(acc[(0, 0)]),
        theoretical_mse: MseEstimate::Scalar(theoretical),
        qfi,
        counts_summary,
        estimator_failures: failures,
        boundary_flags: boundary,
    })
}

/// Staged adaptive estimation, one trace per trial; the reference value is
/// the information of the full sequential composition.
fn run_adaptive(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let ChannelProblem::Dependent { family, theta } = &config.problem else {
        unreachable!("validated");
    };
    let us = family.unitaries_at(*theta)?;
    let dus = family.unitary_derivatives_at(*theta)?;
    let probe = plus_state().density();
    let u = sequential_operator(&us, 2)?;
    let du = sequential_scalar_derivative(&us, &dus, 2)?;
    let qfi = qfi_pure_channel(&u, std::slice::from_ref(&du), &probe)?;
    let h = scalar_information(&qfi)?;
    let theoretical = 1.0 / (config.shots as f64 * h);

    let setup = adaptive::prepare(family, *theta, config.shots)?;
    let outcomes: Vec<TrialOutcome> = (0..config.trials)
        .into_par_iter()
        .map(|i| {
            let (trace, counts, at_boundary) =
                adaptive::run_trial(family, &setup, derive_seed(config.seed, i));
            let errors = trace
                .complete
                .then(|| vec![trace.final_estimate - theta]);
            TrialOutcome {
                counts,
                errors,
                boundary: at_boundary,
            }
        })
        .collect();

    let (acc, counts_summary, failures, boundary) = fold_trials(outcomes, 1, config.trials)?;
    Ok(ExperimentResult {
        empirical_mse: MseEstimate::Scalar(acc[(0, 0)]),
        theoretical_mse: MseEstimate::Scalar(theoretical),
        qfi,
        counts_summary,
        estimator_failures: failures,
        boundary_flags: boundary,
    })
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

/// What a sweep varies across rows.
#[derive(Debug, Clone)]
pub enum SweepVariable {
    Shots(Vec<u64>),
    /// Channel count; the template's first member function (or first
    /// parameter vector) is replicated n times per row.
    Channels(Vec<usize>),
}

/// One row of a sweep table. Matrix-valued errors are reported by trace.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub varied_value: f64,
    pub empirical_mse: f64,
    pub theoretical_mse: f64,
    pub trials: u64,
    pub failures: u64,
    pub seed: u64,
    pub error: Option<String>,
}

/// 17 significant digits; parses back to the identical f64.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub const CSV_HEADER: &str = "varied_value,empirical_mse,theoretical_mse,trials,failures,seed";

/// Renders rows as CSV: '.' decimals, ',' delimiter, LF line endings, a
/// header row, and round-trip-safe floats.
pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut table = String::from(CSV_HEADER);
    table.push('\n');
    for row in rows {
        table.push_str(&format!(
            "{},{},{},{},{},{}\n",
            format_f64(row.varied_value),
            format_f64(row.empirical_mse),
            format_f64(row.theoretical_mse),
            row.trials,
            row.failures,
            row.seed
        ));
    }
    table
}

impl ExperimentResult {
    /// The single-row table form of one experiment, keyed by its shot
    /// budget.
    pub fn to_row(&self, shots: u64, seed: u64, trials: u64) -> SweepRow {
        SweepRow {
            varied_value: shots as f64,
            empirical_mse: self.empirical_mse.trace(),
            theoretical_mse: self.theoretical_mse.trace(),
            trials,
            failures: self.estimator_failures,
            seed,
            error: None,
        }
    }
}

fn config_for_row(template: &ExperimentConfig, vary: &SweepVariable, idx: usize) -> Result<ExperimentConfig> {
    let mut config = template.clone();
    config.seed = derive_seed(template.seed, idx as u64);
    match vary {
        SweepVariable::Shots(values) => {
            config.shots = values[idx];
        }
        SweepVariable::Channels(values) => {
            let n = values[idx];
            if n == 0 {
                return Err(Error::InvalidConfig("channel count must be >= 1".into()));
            }
            config.scheme = SchemeSpec::new(template.scheme.kind, n, template.scheme.d)?;
            config.problem = match &template.problem {
                ChannelProblem::Dependent { family, theta } => {
                    let replicated = family.replicate_first(n)?;
                    ChannelProblem::Dependent {
                        family: replicated,
                        theta: *theta,
                    }
                }
                ChannelProblem::IndependentSuD { d, thetas } => ChannelProblem::IndependentSuD {
                    d: *d,
                    thetas: vec![thetas[0].clone(); n],
                },
            };
        }
    }
    Ok(config)
}

/// Runs one experiment per varied value; rows are independent and carry
/// seeds split from the template seed by row index. Failed rows report the
/// error instead of aborting the table.
pub fn sweep(template: &ExperimentConfig, vary: &SweepVariable) -> Vec<SweepRow> {
    let len = match vary {
        SweepVariable::Shots(v) => v.len(),
        SweepVariable::Channels(v) => v.len(),
    };
    (0..len)
        .map(|idx| {
            let varied_value = match vary {
                SweepVariable::Shots(v) => v[idx] as f64,
                SweepVariable::Channels(v) => v[idx] as f64,
            };
            let run = config_for_row(template, vary, idx).and_then(|config| {
                let result = run_mse_experiment(&config)?;
                Ok((config.seed, result))
            });
            match run {
                Ok((seed, result)) => SweepRow {
                    varied_value,
                    empirical_mse: result.empirical_mse.trace(),
                    theoretical_mse: result.theoretical_mse.trace(),
                    trials: template.trials,
                    failures: result.estimator_failures,
                    seed,
                    error: None,
                },
                Err(e) => SweepRow {
                    varied_value,
                    empirical_mse: f64::NAN,
                    theoretical_mse: f64::NAN,
                    trials: template.trials,
                    failures: template.trials,
                    seed: derive_seed(template.seed, idx as u64),
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}
