//! Per-channel maximum-likelihood estimation for unrelated SU(d) channels.
//!
//! Each channel is probed with its own maximally entangled state and read
//! out by a fixed, seeded set of random orthonormal-basis measurements
//! (informationally complete with probability 1). The likelihood is
//! maximized by gradient ascent with analytic probability derivatives from
//! a few deterministic starting points.
//!
//! The reported reference value is the quantum bound H⁻¹/N; no claim is
//! made that this particular measurement attains it.

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{
    fold_trials, sample_from_probabilities, ChannelProblem, ExperimentConfig, ExperimentResult,
    MseEstimate, TrialOutcome,
};
use crate::channels::{extended_operator, extended_partial_derivative, SuDChannel};
use crate::error::Result;
use crate::information::{conjugated_state_derivative, qfi_pure_channel_blocked, QfiMatrix};
use crate::quantum::{CMatrix, DensityOperator};
use crate::rng::stream;
use crate::schemes::{mes_state, random_unitary, Povm};

/// Random measurement bases per channel.
const DESIGN_BASES: usize = 3;
/// Ascent iteration cap per start.
const MAX_ITERATIONS: usize = 300;
/// Deterministic extra starting points beside the origin.
const RANDOM_STARTS: usize = 3;

struct ChannelSetup {
    povm: Povm,
    probs_at_truth: Vec<f64>,
}

/// Union of `DESIGN_BASES` random orthonormal bases on C^{d²}, each with
/// weight 1/DESIGN_BASES.
fn measurement_design(dim: usize, rng: &mut impl rand::Rng) -> Povm {
    let weight = crate::quantum::cr(1.0 / DESIGN_BASES as f64);
    let mut effects = Vec::with_capacity(DESIGN_BASES * dim);
    for _ in 0..DESIGN_BASES {
        let basis = random_unitary(dim, rng);
        for k in 0..dim {
            let col = basis.column(k);
            let mut m = CMatrix::zeros(dim, dim);
            for i in 0..dim {
                for j in 0..dim {
                    m[(i, j)] = weight * col[i] * col[j].conj();
                }
            }
            effects.push(m);
        }
    }
    Povm::new(effects).expect("random bases form a valid POVM")
}

fn outcome_probabilities(
    channel: &SuDChannel,
    probe: &DensityOperator,
    povm: &Povm,
    theta: &[f64],
) -> Result<Vec<f64>> {
    let u = channel.unitary_at(theta)?;
    let ext = extended_operator(std::slice::from_ref(&u))?;
    let rho = probe.conjugate_by(&ext)?;
    povm.probabilities(&rho)
}

/// Log-likelihood and its gradient at θ.
fn log_likelihood_grad(
    channel: &SuDChannel,
    probe: &DensityOperator,
    povm: &Povm,
    counts: &[u64],
    theta: &[f64],
) -> Result<(f64, Vec<f64>)> {
    let p = channel.param_count();
    let u = channel.unitary_at(theta)?;
    let us = [u];
    let ext = extended_operator(&us)?;
    let rho = probe.conjugate_by(&ext)?;
    let probs = povm.probabilities(&rho)?;

    let mut dprobs = vec![vec![0.0; povm.len()]; p];
    for (k, dp) in dprobs.iter_mut().enumerate() {
        let du = channel.unitary_derivative(theta, k)?;
        let ext_du = extended_partial_derivative(&us, 0, &du)?;
        let drho = conjugated_state_derivative(&ext, &ext_du, probe);
        for (m, effect) in povm.outcomes().iter().enumerate() {
            let mut g = 0.0;
            for i in 0..effect.nrows() {
                for j in 0..effect.ncols() {
                    g += (effect[(i, j)] * drho[(j, i)]).re;
                }
            }
            dp[m] = g;
        }
    }

    let mut ll = 0.0;
    let mut grad = vec![0.0; p];
    for (m, &c) in counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let pm = probs[m].max(1e-300);
        ll += c as f64 * pm.ln();
        for k in 0..p {
            grad[k] += c as f64 * dprobs[k][m] / pm;
        }
    }
    Ok((ll, grad))
}

/// Gradient ascent with backtracking from one starting point. Returns the
/// best parameter, its log-likelihood, and the final gradient norm.
fn ascend(
    channel: &SuDChannel,
    probe: &DensityOperator,
    povm: &Povm,
    counts: &[u64],
    start: Vec<f64>,
) -> Result<(Vec<f64>, f64, f64)> {
    let mut theta = start;
    let (mut ll, mut grad) = log_likelihood_grad(channel, probe, povm, counts, &theta)?;
    let mut step = 1e-3;
    for _ in 0..MAX_ITERATIONS {
        let grad_sq: f64 = grad.iter().map(|g| g * g).sum();
        if grad_sq.sqrt() < 1e-9 * (1.0 + ll.abs()) {
            break;
        }
        let mut accepted = false;
        for _ in 0..40 {
            let candidate: Vec<f64> = theta
                .iter()
                .zip(&grad)
                .map(|(t, g)| t + step * g)
                .collect();
            let (cand_ll, cand_grad) =
                log_likelihood_grad(channel, probe, povm, counts, &candidate)?;
            if cand_ll > ll + 1e-4 * step * grad_sq {
                let improvement = cand_ll - ll;
                theta = candidate;
                ll = cand_ll;
                grad = cand_grad;
                step *= 2.0;
                accepted = true;
                if improvement < 1e-10 * (1.0 + ll.abs()) {
                    return Ok((theta, ll, grad.iter().map(|g| g * g).sum::<f64>().sqrt()));
                }
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    Ok((theta, ll, gnorm))
}

fn mle_channel(
    channel: &SuDChannel,
    probe: &DensityOperator,
    povm: &Povm,
    counts: &[u64],
    shots: u64,
    rng: &mut impl rand::Rng,
) -> Option<Vec<f64>> {
    let p = channel.param_count();
    let mut starts = vec![vec![0.0; p]];
    for _ in 0..RANDOM_STARTS {
        starts.push(
            (0..p)
                .map(|_| std::f64::consts::FRAC_PI_2 * (rng.random::<f64>() * 2.0 - 1.0))
                .collect(),
        );
    }
    let mut best: Option<(Vec<f64>, f64, f64)> = None;
    for start in starts {
        if let Ok(result) = ascend(channel, probe, povm, counts, start) {
            if best.as_ref().is_none_or(|b| result.1 > b.1) {
                best = Some(result);
            }
        }
    }
    let (theta, _, gnorm) = best?;
    // A stationary point was not reached: the trial is undefined rather
    // than silently biased.
    if gnorm > 1e-3 * shots as f64 {
        return None;
    }
    Some(theta)
}

pub(crate) fn run_individual_su_d(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let ChannelProblem::IndependentSuD { d, thetas } = &config.problem else {
        unreachable!("validated");
    };
    let d = *d;
    let n = thetas.len();
    let channel = SuDChannel::from_dimension(d)?;
    let p = channel.param_count();
    let probe = mes_state(d)?.density();

    // Fixed measurement design, deterministic in the experiment seed.
    let mut design_rng = stream(config.seed, u64::MAX);
    let setups: Vec<ChannelSetup> = thetas
        .iter()
        .map(|theta| {
            let povm = measurement_design(d * d, &mut design_rng);
            let probs_at_truth = outcome_probabilities(&channel, &probe, &povm, theta)?;
            Ok(ChannelSetup {
                povm,
                probs_at_truth,
            })
        })
        .collect::<Result<_>>()?;

    // Block-diagonal quantum information across channels.
    let mut h = DMatrix::zeros(n * p, n * p);
    for (j, theta) in thetas.iter().enumerate() {
        let u = channel.unitary_at(theta)?;
        let us = [u];
        let ext = extended_operator(&us)?;
        let dus: Vec<CMatrix> = (0..p)
            .map(|k| {
                let du = channel.unitary_derivative(theta, k)?;
                extended_partial_derivative(&us, 0, &du)
            })
            .collect::<Result<_>>()?;
        let block = qfi_pure_channel_blocked(&ext, &dus, &probe, p)?;
        for a in 0..p {
            for b in 0..p {
                h[(j * p + a, j * p + b)] = block.entry(a, b);
            }
        }
    }
    let qfi = QfiMatrix::new(h, p)?;
    let h_inv = qfi.inverse()?;
    let theoretical: Vec<Vec<f64>> = (0..n * p)
        .map(|i| {
            (0..n * p)
                .map(|j| h_inv[(i, j)] / config.shots as f64)
                .collect()
        })
        .collect();

    let outcomes: Vec<TrialOutcome> = (0..config.trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(config.seed, i);
            let mut counts = Vec::new();
            let mut errors = Some(Vec::with_capacity(n * p));
            for (j, setup) in setups.iter().enumerate() {
                let cj =
                    sample_from_probabilities(&setup.probs_at_truth, config.shots, &mut rng)
                        .expect("probabilities validated");
                let estimate = mle_channel(
                    &channel,
                    &probe,
                    &setup.povm,
                    &cj,
                    config.shots,
                    &mut rng,
                );
                counts.extend_from_slice(&cj);
                match (estimate, errors.as_mut()) {
                    (Some(est), Some(errs)) => {
                        for k in 0..p {
                            errs.push(est[k] - thetas[j][k]);
                        }
                    }
                    _ => errors = None,
                }
            }
            TrialOutcome {
                counts,
                errors,
                boundary: false,
            }
        })
        .collect();

    let (acc, counts_summary, failures, boundary) = fold_trials(outcomes, n * p, config.trials)?;
    let empirical: Vec<Vec<f64>> = (0..n * p)
        .map(|i| (0..n * p).map(|j| acc[(i, j)]).collect())
        .collect();
    Ok(ExperimentResult {
        empirical_mse: MseEstimate::Matrix(empirical),
        theoretical_mse: MseEstimate::Matrix(theoretical),
        qfi,
        counts_summary,
        estimator_failures: failures,
        boundary_flags: boundary,
    })
}
