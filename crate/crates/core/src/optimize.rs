//! Numerical verification of the trace-information optimality bounds:
//! maximize tr H over pure probe states, check the trace-ratio inequality
//! against the maximally entangled probe, and certify maximizers through
//! their Schmidt spectra.
//!
//! The optimizer is a plain multi-start gradient ascent over raw state
//! coordinates. The parametrization is redundant (norm and global phase),
//! which is harmless to local ascent and avoids chart singularities.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channels::{extended_operator, extended_partial_derivative, SuDChannel};
use crate::error::{Error, Result};
use crate::information::{invert_spd, qfi_pure_ket};
use crate::quantum::{c, partial_trace, CMatrix, CVector, Ket};
use crate::rng::stream;
use crate::schemes::mes_state;

/// A pure state parametrized by 2·dim raw real coordinates (real and
/// imaginary parts), normalized on decode. The encoding covers every pure
/// state up to global phase.
#[derive(Debug, Clone)]
pub struct PureStateParam {
    dim: usize,
    coords: Vec<f64>,
}

impl PureStateParam {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if coords.len() != 2 * dim {
            return Err(Error::DimensionMismatch(format!(
                "expected {} coordinates for dim {dim}, got {}",
                2 * dim,
                coords.len()
            )));
        }
        Ok(Self { dim, coords })
    }

    pub fn from_ket(ket: &Ket) -> Self {
        let mut coords = Vec::with_capacity(2 * ket.dim());
        for a in ket.amplitudes().iter() {
            coords.push(a.re);
            coords.push(a.im);
        }
        Self {
            dim: ket.dim(),
            coords,
        }
    }

    /// Uniform draw from the decoded sphere (standard normal coordinates).
    pub fn random(dim: usize, rng: &mut impl Rng) -> Self {
        let coords = (0..2 * dim)
            .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect();
        Self { dim, coords }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn decode(&self) -> Result<Ket> {
        let amps = CVector::from_fn(self.dim, |i, _| c(self.coords[2 * i], self.coords[2 * i + 1]));
        Ket::normalized(amps)
    }
}

/// A fully assembled n-channel extension ⊗ⱼ(Uⱼ ⊗ I) with the derivative
/// operator for each of the n·(d²−1) parameters.
#[derive(Debug, Clone)]
pub struct ExtendedChannel {
    u: CMatrix,
    du: Vec<CMatrix>,
    n: usize,
    d: usize,
}

impl ExtendedChannel {
    /// Extends `channel` across n slots at the given per-channel parameter
    /// points.
    pub fn assemble(channel: &SuDChannel, thetas: &[Vec<f64>]) -> Result<Self> {
        if thetas.is_empty() {
            return Err(Error::EmptyFactorList);
        }
        let us: Vec<CMatrix> = thetas
            .iter()
            .map(|t| channel.unitary_at(t))
            .collect::<Result<_>>()?;
        let u = extended_operator(&us)?;
        let mut du = Vec::with_capacity(thetas.len() * channel.param_count());
        for (j, t) in thetas.iter().enumerate() {
            for k in 0..channel.param_count() {
                let d = channel.unitary_derivative(t, k)?;
                du.push(extended_partial_derivative(&us, j, &d)?);
            }
        }
        Ok(Self {
            u,
            du,
            n: thetas.len(),
            d: channel.d(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Probe dimension d^{2n}.
    pub fn probe_dim(&self) -> usize {
        self.u.nrows()
    }

    pub fn params_per_channel(&self) -> usize {
        self.d * self.d - 1
    }

    pub fn operator(&self) -> &CMatrix {
        &self.u
    }

    pub fn derivatives(&self) -> &[CMatrix] {
        &self.du
    }

    /// The trace bound n·4(d²−1)/d attained by maximally entangled probes.
    pub fn trace_bound(&self) -> f64 {
        let d = self.d as f64;
        self.n as f64 * 4.0 * (d * d - 1.0) / d
    }
}

/// tr H for the pure probe `ket` under the extended channel.
pub fn trace_qfi_objective(ext: &ExtendedChannel, ket: &Ket) -> Result<f64> {
    Ok(qfi_pure_ket(&ext.u, &ext.du, ket)?.trace())
}

/// Diagonal-only evaluation used inside the ascent loop; identical to
/// [`trace_qfi_objective`] on normalized amplitudes.
fn trace_qfi_amps(ext: &ExtendedChannel, amps: &CVector) -> f64 {
    let w = &ext.u * amps;
    let mut total = 0.0;
    for du in &ext.du {
        let v = du * amps;
        let a = w.dotc(&v);
        total += 4.0 * (v.dotc(&v).re + (a * a).re);
    }
    total
}

fn decode_amps(coords: &[f64], dim: usize) -> CVector {
    let mut amps = CVector::from_fn(dim, |i, _| c(coords[2 * i], coords[2 * i + 1]));
    let norm = amps.norm();
    if norm > 1e-300 {
        amps /= c(norm, 0.0);
    }
    amps
}

/// Multi-start ascent settings; the defaults implement the documented
/// stopping rules.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct OptimizerSettings {
    pub restarts: usize,
    pub max_iterations: usize,
    pub gradient_step: f64,
    pub improvement_tol: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            restarts: 32,
            max_iterations: 5000,
            gradient_step: 1e-5,
            improvement_tol: 1e-12,
        }
    }
}

/// Outcome of a probe-state search.
#[derive(Debug, Clone, Serialize)]
pub struct OptReport {
    pub best_value: f64,
    pub best_state: Ket,
    /// n·4(d²−1)/d.
    pub bound: f64,
    pub gap: f64,
    pub restarts: usize,
    /// One Schmidt spectrum per channel, for the bipartition of that
    /// channel's system factor against everything else.
    pub schmidt_spectrum: Vec<Vec<f64>>,
    /// False when the winning restart stopped only at the iteration cap.
    pub converged: bool,
    /// ‖∇‖∞ of the objective at the reported maximizer.
    pub gradient_inf_norm: f64,
}

struct RestartOutcome {
    coords: Vec<f64>,
    value: f64,
    converged: bool,
}

fn finite_difference_gradient(ext: &ExtendedChannel, coords: &[f64], h: f64) -> Vec<f64> {
    let dim = ext.probe_dim();
    let mut grad = vec![0.0; coords.len()];
    let mut work = coords.to_vec();
    for i in 0..coords.len() {
        let orig = work[i];
        work[i] = orig + h;
        let plus = trace_qfi_amps(ext, &decode_amps(&work, dim));
        work[i] = orig - h;
        let minus = trace_qfi_amps(ext, &decode_amps(&work, dim));
        work[i] = orig;
        grad[i] = (plus - minus) / (2.0 * h);
    }
    grad
}

fn ascend(
    ext: &ExtendedChannel,
    start: PureStateParam,
    settings: &OptimizerSettings,
) -> RestartOutcome {
    let dim = ext.probe_dim();
    let mut coords = start.coords;
    // Keep coordinates on the unit sphere; the objective is scale-invariant.
    let norm: f64 = coords.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in coords.iter_mut() {
        *x /= norm;
    }
    let mut value = trace_qfi_amps(ext, &decode_amps(&coords, dim));
    let mut step = 0.05;
    let mut converged = false;
    for _ in 0..settings.max_iterations {
        let grad = finite_difference_gradient(ext, &coords, settings.gradient_step);
        let grad_sq: f64 = grad.iter().map(|g| g * g).sum();
        if grad_sq.sqrt() < 1e-10 {
            converged = true;
            break;
        }
        let mut improved = false;
        let mut improvement = 0.0;
        for _ in 0..50 {
            let candidate: Vec<f64> = coords
                .iter()
                .zip(&grad)
                .map(|(x, g)| x + step * g)
                .collect();
            let cand_value = trace_qfi_amps(ext, &decode_amps(&candidate, dim));
            if cand_value > value + 1e-4 * step * grad_sq {
                improvement = cand_value - value;
                coords = candidate;
                let norm: f64 = coords.iter().map(|x| x * x).sum::<f64>().sqrt();
                for x in coords.iter_mut() {
                    *x /= norm;
                }
                value = cand_value;
                step *= 2.0;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            // The line search cannot make progress at gradient resolution.
            converged = true;
            break;
        }
        if improvement < settings.improvement_tol {
            converged = true;
            break;
        }
    }
    RestartOutcome {
        coords,
        value,
        converged,
    }
}

/// Multi-start maximization of tr H over pure probes. Restarts draw their
/// own streams from the seed and run independently; the best restart wins,
/// with ties broken by the lowest restart index.
pub fn maximize_trace_qfi(
    ext: &ExtendedChannel,
    settings: &OptimizerSettings,
    seed: u64,
) -> Result<OptReport> {
    if settings.restarts == 0 {
        return Err(Error::InvalidConfig("restarts must be >= 1".into()));
    }
    let dim = ext.probe_dim();
    let outcomes: Vec<RestartOutcome> = (0..settings.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(seed, r as u64);
            let start = PureStateParam::random(dim, &mut rng);
            ascend(ext, start, settings)
        })
        .collect();
    let best = outcomes
        .iter()
        .fold(None::<&RestartOutcome>, |acc, o| match acc {
            Some(cur) if cur.value >= o.value => acc,
            _ => Some(o),
        })
        .expect("restarts >= 1");

    let best_state = Ket::normalized(decode_amps(&best.coords, dim))?;
    let best_value = trace_qfi_objective(ext, &best_state)?;
    let grad = finite_difference_gradient(ext, &best.coords, settings.gradient_step);
    let gradient_inf_norm = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    let bound = ext.trace_bound();

    Ok(OptReport {
        best_value,
        gap: bound - best_value,
        bound,
        schmidt_spectrum: per_channel_schmidt_spectra(&best_state, ext.d, ext.n)?,
        restarts: settings.restarts,
        converged: best.converged,
        gradient_inf_norm,
        best_state,
    })
}

/// Schmidt spectrum of each channel's system factor against the rest of the
/// probe, in the S₁R₁…SₙRₙ layout.
pub fn per_channel_schmidt_spectra(ket: &Ket, d: usize, n: usize) -> Result<Vec<Vec<f64>>> {
    let dims = vec![d; 2 * n];
    let rho = ket.density();
    (0..n)
        .map(|j| {
            let reduced = partial_trace(&rho, &dims, &[2 * j])?;
            let mut eigs: Vec<f64> = reduced
                .matrix()
                .clone()
                .symmetric_eigenvalues()
                .iter()
                .map(|&q| q.max(0.0).sqrt())
                .collect();
            eigs.sort_by(|a, b| b.total_cmp(a));
            Ok(eigs)
        })
        .collect()
}

/// Singular values of the dimA×dimB amplitude matrix, descending.
pub fn schmidt_spectrum(ket: &Ket, bipartition: (usize, usize)) -> Result<Vec<f64>> {
    let (da, db) = bipartition;
    if da == 0 || db == 0 || da * db != ket.dim() {
        return Err(Error::DimensionMismatch(format!(
            "bipartition {da}x{db} does not match ket dim {}",
            ket.dim()
        )));
    }
    let m = CMatrix::from_fn(da, db, |i, j| ket.amplitude(i * db + j));
    let mut sv: Vec<f64> = m.svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

/// tr{H(ρ_mes)⁻¹ H(ρ_ket)} for a single extended channel; at most d²−1,
/// with equality exactly at maximally entangled probes.
pub fn ballester_ratio(ext: &ExtendedChannel, ket: &Ket) -> Result<f64> {
    if ext.n != 1 {
        return Err(Error::InvalidConfig(
            "the trace-ratio bound is defined per channel".into(),
        ));
    }
    let mes = mes_state(ext.d)?;
    let h_mes = qfi_pure_ket(&ext.u, &ext.du, &mes)?;
    let h_mes_inv = invert_spd(h_mes.entries())?;
    let h_ket = qfi_pure_ket(&ext.u, &ext.du, ket)?;
    let p = h_ket.p();
    let mut ratio = 0.0;
    for i in 0..p {
        for j in 0..p {
            ratio += h_mes_inv[(i, j)] * h_ket.entry(j, i);
        }
    }
    Ok(ratio)
}

/// θ-points for bound sweeps: the origin plus `count` random points with
/// ‖θ‖ ≤ 1 per channel.
pub fn sweep_thetas(
    params_per_channel: usize,
    channels: usize,
    count: usize,
    seed: u64,
) -> Vec<Vec<Vec<f64>>> {
    let mut points = vec![vec![vec![0.0; params_per_channel]; channels]];
    let mut rng = stream(seed, 0);
    for _ in 0..count {
        let mut point = Vec::with_capacity(channels);
        for _ in 0..channels {
            let raw: Vec<f64> = (0..params_per_channel)
                .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
                .collect();
            let norm: f64 = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
            let radius: f64 = rng.random::<f64>();
            let scale = if norm > 0.0 { radius / norm } else { 0.0 };
            point.push(raw.iter().map(|x| x * scale).collect());
        }
        points.push(point);
    }
    points
}
