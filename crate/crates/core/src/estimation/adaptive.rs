//! Staged adaptive estimation for monotone phase families.
//!
//! Stage s applies the prefix product U_s⋯U_1 to a |+⟩ probe, so the
//! measured phase is g_s(θ) = Σ_{j≤s} fⱼ(θ). Each stage turns its binomial
//! tally into an exact (Clopper–Pearson) confidence interval for the outcome
//! probability, unwraps the cos² fold against the image of the previous
//! stage's θ-interval, and intersects. Interval widths never increase; an
//! unresolvable branch ambiguity aborts the trace instead of guessing.

use rand_distr::{Binomial, Distribution};
use serde::Serialize;
use statrs::distribution::{Beta, ContinuousCDF};

use crate::channels::{apply_sequential, DependentFamily, DEFAULT_CONDITION_GRID};
use crate::error::{Error, Result};
use crate::quantum::DensityOperator;
use crate::rng;
use crate::schemes::{plus_state, two_outcome_projector};

/// Overall confidence budget: each of the n stages runs its interval at
/// level 1 − 10⁻³/n, so the union bound keeps coverage at or above 99.9%.
const TOTAL_ALPHA: f64 = 1e-3;

/// One refinement stage of an adaptive trace.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AdaptiveStage {
    /// Number of channels in the prefix product.
    pub prefix_len: usize,
    /// Shots spent in this stage.
    pub shots: u64,
    /// The θ-interval after intersecting with the previous stage.
    pub interval: [f64; 2],
}

impl AdaptiveStage {
    pub fn width(&self) -> f64 {
        self.interval[1] - self.interval[0]
    }
}

/// The staged estimation record: per-stage intervals plus the midpoint of
/// the final interval. Incomplete traces stopped at a branch ambiguity or an
/// empty intersection.
#[derive(Debug, Clone, Serialize)]
pub struct AdaptiveTrace {
    pub stages: Vec<AdaptiveStage>,
    pub final_estimate: f64,
    pub complete: bool,
}

pub(crate) struct AdaptiveSetup {
    /// Outcome-0 probability cos²(g_s(θ*)/2) per stage, from simulation.
    stage_probs: Vec<f64>,
    stage_shots: Vec<u64>,
    alpha_stage: f64,
}

/// Validates the family and precomputes per-stage sampling probabilities at
/// the true parameter.
pub(crate) fn prepare(
    family: &DependentFamily,
    theta_true: f64,
    total_shots: u64,
) -> Result<AdaptiveSetup> {
    let n = family.n();
    if !family.contains(theta_true) {
        return Err(Error::DomainViolation(format!(
            "theta_true = {theta_true} outside [0, {}]",
            family.domain_upper()
        )));
    }
    let report = family.validate(DEFAULT_CONDITION_GRID)?;
    if !report.cond_b {
        return Err(Error::NonMonotoneFamily);
    }
    if total_shots < 2 * n as u64 {
        return Err(Error::InvalidConfig(format!(
            "adaptive estimation needs at least 2n = {} shots",
            2 * n
        )));
    }

    let probe = plus_state();
    let povm = two_outcome_projector(&probe);
    let rho0 = probe.density();
    let us = family.unitaries_at(theta_true)?;
    let mut stage_probs = Vec::with_capacity(n);
    for s in 1..=n {
        let rho_s: DensityOperator = apply_sequential(&us[..s], &rho0)?;
        stage_probs.push(povm.probabilities(&rho_s)?[0].clamp(0.0, 1.0));
    }

    let base = total_shots / n as u64;
    let rem = (total_shots % n as u64) as usize;
    let stage_shots = (0..n)
        .map(|s| base + u64::from(s < rem))
        .collect();

    Ok(AdaptiveSetup {
        stage_probs,
        stage_shots,
        alpha_stage: TOTAL_ALPHA / n as f64,
    })
}

/// Exact binomial confidence interval at two-sided level 1 − alpha.
fn clopper_pearson(successes: u64, trials: u64, alpha: f64) -> (f64, f64) {
    let k = successes as f64;
    let n = trials as f64;
    let lo = if successes == 0 {
        0.0
    } else {
        Beta::new(k, n - k + 1.0)
            .expect("valid Beta parameters")
            .inverse_cdf(alpha / 2.0)
    };
    let hi = if successes == trials {
        1.0
    } else {
        Beta::new(k + 1.0, n - k)
            .expect("valid Beta parameters")
            .inverse_cdf(1.0 - alpha / 2.0)
    };
    (lo, hi)
}

/// All solutions g of cos²(g/2) ∈ cos²([φ_lo, φ_hi]/2) within [j_lo, j_hi]:
/// the branches ±φ + 2πk, intersected with the window and merged where they
/// touch at fold points.
fn branch_components(phi_lo: f64, phi_hi: f64, j_lo: f64, j_hi: f64) -> Vec<(f64, f64)> {
    let two_pi = 2.0 * std::f64::consts::PI;
    let k_min = ((j_lo - phi_hi) / two_pi).floor() as i64 - 1;
    let k_max = ((j_hi + phi_hi) / two_pi).ceil() as i64 + 1;
    let mut pieces: Vec<(f64, f64)> = Vec::new();
    for k in k_min..=k_max {
        let shift = k as f64 * two_pi;
        for (lo, hi) in [
            (shift + phi_lo, shift + phi_hi),
            (shift - phi_hi, shift - phi_lo),
        ] {
            let lo = lo.max(j_lo);
            let hi = hi.min(j_hi);
            if hi >= lo {
                pieces.push((lo, hi));
            }
        }
    }
    pieces.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    const MERGE_EPS: f64 = 1e-9;
    for piece in pieces {
        match merged.last_mut() {
            Some(last) if piece.0 <= last.1 + MERGE_EPS => last.1 = last.1.max(piece.1),
            _ => merged.push(piece),
        }
    }
    merged
}

/// Smallest θ in [a, b] with g(θ) ≥ target, for monotone non-decreasing g.
fn lower_inverse(g: impl Fn(f64) -> f64, target: f64, a: f64, b: f64) -> f64 {
    if g(a) >= target {
        return a;
    }
    if g(b) < target {
        return b;
    }
    let (mut lo, mut hi) = (a, b);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Largest θ in [a, b] with g(θ) ≤ target.
fn upper_inverse(g: impl Fn(f64) -> f64, target: f64, a: f64, b: f64) -> f64 {
    if g(b) <= target {
        return b;
    }
    if g(a) > target {
        return a;
    }
    let (mut lo, mut hi) = (a, b);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if g(mid) <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// One seeded adaptive run. Returns the trace, the per-stage outcome
/// tallies (n₀ and n₁ per stage, flattened), and whether any stage hit a
/// count boundary.
pub(crate) fn run_trial(
    family: &DependentFamily,
    setup: &AdaptiveSetup,
    seed: u64,
) -> (AdaptiveTrace, Vec<u64>, bool) {
    let mut rng = rng::stream(seed, 0);
    let n = family.n();
    let mut interval = (0.0f64, family.domain_upper());
    let mut stages: Vec<AdaptiveStage> = Vec::with_capacity(n);
    let mut counts = Vec::with_capacity(2 * n);
    let mut at_boundary = false;
    let mut complete = true;

    for s in 1..=n {
        let shots = setup.stage_shots[s - 1];
        let p = setup.stage_probs[s - 1];
        let n0 = Binomial::new(shots, p)
            .expect("probability clamped to [0,1]")
            .sample(&mut rng);
        counts.push(n0);
        counts.push(shots - n0);
        at_boundary |= n0 == 0 || n0 == shots;

        let (p_lo, p_hi) = clopper_pearson(n0, shots, setup.alpha_stage);
        // cos²(φ/2) is decreasing on [0, π], so probability bounds swap.
        let phi_lo = 2.0 * p_hi.sqrt().clamp(0.0, 1.0).acos();
        let phi_hi = 2.0 * p_lo.sqrt().clamp(0.0, 1.0).acos();

        let g = |theta: f64| family.prefix_phase_sum(s, theta);
        let j_lo = g(interval.0);
        let j_hi = g(interval.1);
        if j_hi - j_lo <= 1e-12 {
            // The prefix carries no sensitivity over the current interval.
            stages.push(AdaptiveStage {
                prefix_len: s,
                shots,
                interval: [interval.0, interval.1],
            });
            continue;
        }
        let components = branch_components(phi_lo, phi_hi, j_lo, j_hi);
        if components.len() != 1 {
            complete = false;
            break;
        }
        let (g_lo, g_hi) = components[0];
        let theta_lo = lower_inverse(g, g_lo, interval.0, interval.1);
        let theta_hi = upper_inverse(g, g_hi, interval.0, interval.1);
        if theta_lo > theta_hi {
            complete = false;
            break;
        }
        interval = (theta_lo, theta_hi);
        stages.push(AdaptiveStage {
            prefix_len: s,
            shots,
            interval: [interval.0, interval.1],
        });
    }

    let final_estimate = match stages.last() {
        Some(stage) => 0.5 * (stage.interval[0] + stage.interval[1]),
        None => 0.5 * family.domain_upper(),
    };
    (
        AdaptiveTrace {
            stages,
            final_estimate,
            complete,
        },
        counts,
        at_boundary,
    )
}

/// Runs the staged adaptive procedure once against a simulated true
/// parameter, spending `total_shots` split equally across the n stages.
pub fn adaptive_estimate(
    family: &DependentFamily,
    theta_true: f64,
    total_shots: u64,
    seed: u64,
) -> Result<AdaptiveTrace> {
    let setup = prepare(family, theta_true, total_shots)?;
    Ok(run_trial(family, &setup, seed).0)
}
