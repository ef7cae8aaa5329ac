//! Probe states, measurement POVMs, and scheme descriptors.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channels::DependentFamily;
use crate::error::{Error, Result};
use crate::quantum::{c, cr, max_abs, CMatrix, CVector, DensityOperator, Ket};

/// A positive-operator-valued measure: PSD effects summing to the identity.
#[derive(Debug, Clone)]
pub struct Povm {
    outcomes: Vec<CMatrix>,
}

/// Most negative effect eigenvalue accepted as PSD.
const EFFECT_PSD_TOL: f64 = -1e-10;
/// Tolerance on Σ M_m = I.
const COMPLETENESS_TOL: f64 = 1e-10;

impl Povm {
    pub fn new(outcomes: Vec<CMatrix>) -> Result<Self> {
        let dim = outcomes
            .first()
            .ok_or_else(|| Error::InvalidPovm("no outcomes".into()))?
            .nrows();
        let mut sum = CMatrix::zeros(dim, dim);
        for (m, effect) in outcomes.iter().enumerate() {
            if effect.nrows() != dim || effect.ncols() != dim {
                return Err(Error::InvalidPovm(format!(
                    "outcome {m} has shape {}x{}, expected {dim}x{dim}",
                    effect.nrows(),
                    effect.ncols()
                )));
            }
            let herm = crate::quantum::hermiticity_deviation(effect);
            if herm > COMPLETENESS_TOL {
                return Err(Error::InvalidPovm(format!(
                    "outcome {m} is not Hermitian (deviation {herm:.3e})"
                )));
            }
            let min_eig = effect
                .clone()
                .symmetric_eigenvalues()
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            if min_eig < EFFECT_PSD_TOL {
                return Err(Error::InvalidPovm(format!(
                    "outcome {m} is not PSD (min eigenvalue {min_eig:.3e})"
                )));
            }
            sum += effect;
        }
        let dev = max_abs(&(sum - CMatrix::identity(dim, dim)));
        if dev > COMPLETENESS_TOL {
            return Err(Error::InvalidPovm(format!(
                "outcomes sum to identity only within {dev:.3e}"
            )));
        }
        Ok(Self { outcomes })
    }

    pub fn outcomes(&self) -> &[CMatrix] {
        &self.outcomes
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.outcomes[0].nrows()
    }

    /// Born-rule outcome distribution p_m = tr{M_m ρ}, clamped at 0.
    pub fn probabilities(&self, rho: &DensityOperator) -> Result<Vec<f64>> {
        if self.dim() != rho.dim() {
            return Err(Error::DimensionMismatch(format!(
                "POVM dim {} vs state dim {}",
                self.dim(),
                rho.dim()
            )));
        }
        Ok(self
            .outcomes
            .iter()
            .map(|m| {
                let mut p = 0.0;
                for i in 0..m.nrows() {
                    for j in 0..m.ncols() {
                        p += (m[(i, j)] * rho.matrix()[(j, i)]).re;
                    }
                }
                p.max(0.0)
            })
            .collect())
    }
}

/// {|ψ⟩⟨ψ|, I − |ψ⟩⟨ψ|}.
pub fn two_outcome_projector(ket: &Ket) -> Povm {
    let p = ket.projector();
    let rest = CMatrix::identity(ket.dim(), ket.dim()) - &p;
    Povm {
        outcomes: vec![p, rest],
    }
}

// ---------------------------------------------------------------------------
// Probe states
// ---------------------------------------------------------------------------

/// Maximally entangled state 1/√d Σᵢ |ii⟩ on C^d ⊗ C^d.
pub fn mes_state(d: usize) -> Result<Ket> {
    if d < 2 {
        return Err(Error::InvalidDimension("mes_state needs d >= 2".into()));
    }
    let mut amps = CVector::zeros(d * d);
    let w = cr(1.0 / (d as f64).sqrt());
    for i in 0..d {
        amps[i * d + i] = w;
    }
    Ok(Ket::from_vector_unchecked(amps))
}

/// q-qubit state 1/√2 (|0…0⟩ + |1…1⟩).
pub fn ghz_state(qubits: usize) -> Result<Ket> {
    if qubits == 0 {
        return Err(Error::InvalidDimension("ghz_state needs q >= 1".into()));
    }
    if qubits > 26 {
        return Err(Error::InvalidDimension(
            "ghz_state beyond 26 qubits exceeds the dense representation".into(),
        ));
    }
    let dim = 1usize << qubits;
    let mut amps = CVector::zeros(dim);
    amps[0] = cr(std::f64::consts::FRAC_1_SQRT_2);
    amps[dim - 1] = cr(std::f64::consts::FRAC_1_SQRT_2);
    Ok(Ket::from_vector_unchecked(amps))
}

/// 1/√d Σᵢ |i⟩^{⊗parties} across an even number of d-level parties.
pub fn multipartite_mes(d: usize, parties: usize) -> Result<Ket> {
    if d < 2 {
        return Err(Error::InvalidDimension("multipartite_mes needs d >= 2".into()));
    }
    if parties == 0 || !parties.is_multiple_of(2) {
        return Err(Error::InvalidDimension(format!(
            "multipartite_mes needs an even positive party count, got {parties}"
        )));
    }
    let dim = d
        .checked_pow(parties as u32)
        .filter(|&x| x <= 1 << 26)
        .ok_or_else(|| {
            Error::InvalidDimension("multipartite_mes dimension exceeds the dense cap".into())
        })?;
    let mut amps = CVector::zeros(dim);
    let w = cr(1.0 / (d as f64).sqrt());
    // |i⟩^{⊗parties} has composite index i·(d^{parties-1} + … + d + 1).
    let mut repunit = 0usize;
    for _ in 0..parties {
        repunit = repunit * d + 1;
    }
    for i in 0..d {
        amps[i * repunit] = w;
    }
    Ok(Ket::from_vector_unchecked(amps))
}

/// |ψx⟩ = 1/√2 (|0⟩ + |1⟩).
pub fn plus_state() -> Ket {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Ket::from_vector_unchecked(CVector::from_vec(vec![cr(s), cr(s)]))
}

/// |ψy⟩ = 1/√2 (|0⟩ + i|1⟩).
pub fn y_state() -> Ket {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Ket::from_vector_unchecked(CVector::from_vec(vec![cr(s), c(0.0, s)]))
}

// ---------------------------------------------------------------------------
// Scheme descriptors
// ---------------------------------------------------------------------------

/// The estimation schemes supported by the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    /// One maximally entangled probe per channel, measured per channel.
    TensorMes,
    /// A single 2n-qubit GHZ probe across all channels and ancillas.
    MultipartiteGhz,
    /// All channels applied in sequence to one bare qubit probe.
    Sequential,
    /// Each channel estimated on its own (general SU(d) problems).
    IndividualPerChannel,
    /// Staged prefix-product estimation with interval refinement.
    Adaptive,
}

/// A scheme descriptor: which scheme, how many channels, local dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeSpec {
    pub kind: SchemeKind,
    pub n: usize,
    pub d: usize,
}

impl SchemeSpec {
    pub fn new(kind: SchemeKind, n: usize, d: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConfig("scheme needs n >= 1 channels".into()));
        }
        if d < 2 {
            return Err(Error::InvalidConfig("scheme needs local dimension d >= 2".into()));
        }
        match kind {
            SchemeKind::MultipartiteGhz | SchemeKind::Sequential | SchemeKind::Adaptive
                if d != 2 =>
            {
                Err(Error::InvalidConfig(format!(
                    "{kind:?} requires d = 2 phase families, got d = {d}"
                )))
            }
            _ => Ok(Self { kind, n, d }),
        }
    }
}

/// The measurement belonging to a scheme: one global POVM, or one POVM per
/// channel for the per-channel schemes.
#[derive(Debug, Clone)]
pub enum SchemePovm {
    Global(Povm),
    PerChannel(Vec<Povm>),
}

/// The two-outcome projective measurements used by each scheme.
pub fn scheme_povm(spec: &SchemeSpec) -> Result<SchemePovm> {
    match spec.kind {
        SchemeKind::MultipartiteGhz => {
            let ghz = ghz_state(2 * spec.n)?;
            Ok(SchemePovm::Global(two_outcome_projector(&ghz)))
        }
        SchemeKind::Sequential | SchemeKind::Adaptive => {
            Ok(SchemePovm::Global(two_outcome_projector(&plus_state())))
        }
        SchemeKind::TensorMes | SchemeKind::IndividualPerChannel => {
            let mes = mes_state(spec.d)?;
            let povm = two_outcome_projector(&mes);
            Ok(SchemePovm::PerChannel(vec![povm; spec.n]))
        }
    }
}

/// {|ψy⟩⟨ψy|, I − |ψy⟩⟨ψy|} on C²; outcome 0 has probability (1 + sin φ)/2
/// on the probe 1/√2 (|0⟩ + e^{iφ}|1⟩), which determines the sign of
/// cos(φ/2).
pub fn sign_povm() -> Povm {
    two_outcome_projector(&y_state())
}

/// The 2n-qubit analog of [`sign_povm`] acting on the span of |0…0⟩ and
/// |1…1⟩.
pub fn ghz_sign_povm(qubits: usize) -> Result<Povm> {
    let dim = 1usize << qubits;
    let mut amps = CVector::zeros(dim);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    amps[0] = cr(s);
    amps[dim - 1] = c(0.0, s);
    Ok(two_outcome_projector(&Ket::new(amps)?))
}

/// Splits channel indices by the sign of f′ⱼ at a pilot estimate:
/// A = {j : f′ⱼ(θ̂) ≥ 0}, B = {j : f′ⱼ(θ̂) < 0}.
pub fn partition_by_derivative_sign(
    family: &DependentFamily,
    theta_hat: f64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !family.contains(theta_hat) {
        return Err(Error::DomainViolation(format!(
            "theta_hat = {theta_hat} outside [0, {}]",
            family.domain_upper()
        )));
    }
    let mut group_a = Vec::new();
    let mut group_b = Vec::new();
    for j in 0..family.n() {
        if family.f_prime(j, theta_hat) >= 0.0 {
            group_a.push(j);
        } else {
            group_b.push(j);
        }
    }
    Ok((group_a, group_b))
}

// ---------------------------------------------------------------------------
// Randomized measurement generators (used by the dominance checks)
// ---------------------------------------------------------------------------

/// A Haar-like random orthonormal-basis measurement with dim rank-1 effects.
pub fn random_projective_povm(dim: usize, rng: &mut impl Rng) -> Povm {
    let basis = random_unitary(dim, rng);
    let outcomes = (0..dim)
        .map(|k| {
            let col = basis.column(k);
            let mut m = CMatrix::zeros(dim, dim);
            for i in 0..dim {
                for j in 0..dim {
                    m[(i, j)] = col[i] * col[j].conj();
                }
            }
            m
        })
        .collect();
    Povm { outcomes }
}

/// A random positive partition of the identity with `outcomes` effects.
pub fn random_povm(dim: usize, outcomes: usize, rng: &mut impl Rng) -> Result<Povm> {
    if outcomes == 0 {
        return Err(Error::InvalidPovm("no outcomes".into()));
    }
    let parts: Vec<CMatrix> = (0..outcomes)
        .map(|_| {
            let g = CMatrix::from_fn(dim, dim, |_, _| {
                c(
                    rng.sample(rand_distr::StandardNormal),
                    rng.sample(rand_distr::StandardNormal),
                )
            });
            &g * g.adjoint()
        })
        .collect();
    let total = parts.iter().fold(CMatrix::zeros(dim, dim), |acc, p| acc + p);
    // S^{-1/2} via the Hermitian eigendecomposition.
    let se = total.symmetric_eigen();
    let mut inv_sqrt = CMatrix::zeros(dim, dim);
    for k in 0..dim {
        let w = 1.0 / se.eigenvalues[k].max(1e-12).sqrt();
        let v = se.eigenvectors.column(k);
        for i in 0..dim {
            for j in 0..dim {
                inv_sqrt[(i, j)] += cr(w) * v[i] * v[j].conj();
            }
        }
    }
    let effects: Vec<CMatrix> = parts.iter().map(|p| &inv_sqrt * p * &inv_sqrt).collect();
    // Hermitize away roundoff before validating.
    let effects = effects
        .into_iter()
        .map(|m| {
            let adj = m.adjoint();
            (m + adj) * cr(0.5)
        })
        .collect();
    Povm::new(effects)
}

/// Haar-distributed unitary from the QR decomposition of a Ginibre matrix.
pub fn random_unitary(dim: usize, rng: &mut impl Rng) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        c(
            rng.sample(rand_distr::StandardNormal),
            rng.sample(rand_distr::StandardNormal),
        )
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    // Fix the phase convention so the distribution is Haar.
    for k in 0..dim {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / cr(d.norm()) } else { cr(1.0) };
        for i in 0..dim {
            q[(i, k)] *= phase.conj();
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{FamilyFunction, FunctionForm};
    use crate::quantum::partial_trace;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    #[test]
    fn mes_state_d2_amplitudes() {
        let mes = mes_state(2).unwrap();
        assert_eq!(mes.dim(), 4);
        assert_abs_diff_eq!(mes.amplitude(0).re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(mes.amplitude(3).re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert!(mes.amplitude(1).norm() < 1e-15);
    }

    #[test]
    fn mes_state_d3_amplitudes() {
        let mes = mes_state(3).unwrap();
        assert_eq!(mes.dim(), 9);
        let w = 1.0 / 3f64.sqrt();
        for idx in [0usize, 4, 8] {
            assert_abs_diff_eq!(mes.amplitude(idx).re, w, epsilon = 1e-15);
        }
        let sum_sq: f64 = mes.amplitudes().iter().map(|z| z.norm_sqr()).sum();
        assert_abs_diff_eq!(sum_sq, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn mes_reduced_states_are_maximally_mixed() {
        for d in [2usize, 3] {
            let rho = mes_state(d).unwrap().density();
            for keep in [0usize, 1] {
                let red = partial_trace(&rho, &[d, d], &[keep]).unwrap();
                let expect = CMatrix::identity(d, d) * cr(1.0 / d as f64);
                assert!(max_abs(&(red.matrix() - expect)) < 1e-14);
            }
        }
    }

    #[test]
    fn ghz_state_amplitudes() {
        let g3 = ghz_state(3).unwrap();
        assert_eq!(g3.dim(), 8);
        assert_abs_diff_eq!(g3.amplitude(0).re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(g3.amplitude(7).re, FRAC_1_SQRT_2, epsilon = 1e-15);
        let g2 = ghz_state(2).unwrap();
        let mes = mes_state(2).unwrap();
        for i in 0..4 {
            assert!((g2.amplitude(i) - mes.amplitude(i)).norm() < 1e-15);
        }
    }

    #[test]
    fn multipartite_mes_matches_bipartite_case() {
        for d in [2usize, 3] {
            let multi = multipartite_mes(d, 2).unwrap();
            let mes = mes_state(d).unwrap();
            for i in 0..mes.dim() {
                assert!((multi.amplitude(i) - mes.amplitude(i)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn multipartite_mes_four_qubit_corners() {
        let k = multipartite_mes(2, 4).unwrap();
        assert_eq!(k.dim(), 16);
        assert_abs_diff_eq!(k.amplitude(0).re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(k.amplitude(15).re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert!(multipartite_mes(2, 3).is_err());
    }

    #[test]
    fn scheme_povms_sum_to_identity() {
        let specs = [
            SchemeSpec::new(SchemeKind::MultipartiteGhz, 2, 2).unwrap(),
            SchemeSpec::new(SchemeKind::Sequential, 3, 2).unwrap(),
            SchemeSpec::new(SchemeKind::TensorMes, 2, 3).unwrap(),
        ];
        for spec in &specs {
            match scheme_povm(spec).unwrap() {
                SchemePovm::Global(p) => {
                    let sum = p
                        .outcomes()
                        .iter()
                        .fold(CMatrix::zeros(p.dim(), p.dim()), |acc, m| acc + m);
                    assert!(max_abs(&(sum - CMatrix::identity(p.dim(), p.dim()))) < 1e-12);
                }
                SchemePovm::PerChannel(ps) => {
                    assert_eq!(ps.len(), spec.n);
                    for p in ps {
                        let sum = p
                            .outcomes()
                            .iter()
                            .fold(CMatrix::zeros(p.dim(), p.dim()), |acc, m| acc + m);
                        assert!(max_abs(&(sum - CMatrix::identity(p.dim(), p.dim()))) < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn ghz_scheme_povm_is_ghz_projector() {
        let spec = SchemeSpec::new(SchemeKind::MultipartiteGhz, 2, 2).unwrap();
        let SchemePovm::Global(povm) = scheme_povm(&spec).unwrap() else {
            panic!("expected global POVM");
        };
        assert_eq!(povm.dim(), 16);
        let ghz = ghz_state(4).unwrap();
        let p0 = povm.probabilities(&ghz.density()).unwrap();
        assert_abs_diff_eq!(p0[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn scheme_spec_rejects_bad_dimension() {
        assert!(SchemeSpec::new(SchemeKind::MultipartiteGhz, 2, 3).is_err());
        assert!(SchemeSpec::new(SchemeKind::Sequential, 2, 3).is_err());
        assert!(SchemeSpec::new(SchemeKind::TensorMes, 0, 2).is_err());
        assert!(SchemeSpec::new(SchemeKind::TensorMes, 2, 3).is_ok());
    }

    #[test]
    fn sign_povm_probabilities() {
        let povm = sign_povm();
        for (phi, expect) in [(0.0, 0.5), (PI / 2.0, 1.0), (3.0 * PI / 2.0, 0.0)] {
            let amps = CVector::from_vec(vec![
                cr(FRAC_1_SQRT_2),
                crate::quantum::C64::from_polar(FRAC_1_SQRT_2, phi),
            ]);
            let rho = Ket::new(amps).unwrap().density();
            let p = povm.probabilities(&rho).unwrap();
            assert_abs_diff_eq!(p[0], expect, epsilon = 1e-12);
            assert_abs_diff_eq!(p[0], (1.0 + phi.sin()) / 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn ghz_outcome_probability_is_cos_squared_half_phase() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        for _ in 0..100 {
            let n = rng.random_range(1..=3);
            let forms: Vec<FunctionForm> = (0..n)
                .map(|_| FunctionForm::Affine {
                    a: rng.random::<f64>(),
                    b: 0.3 * rng.random::<f64>(),
                })
                .collect();
            let fam = crate::channels::DependentFamily::from_forms(&forms, 1.0).unwrap();
            let theta = rng.random::<f64>();
            let us = fam.unitaries_at(theta).unwrap();
            let ghz = ghz_state(2 * n).unwrap();
            let out = crate::channels::apply_extended(&us, &ghz.density()).unwrap();
            let povm = two_outcome_projector(&ghz);
            let p = povm.probabilities(&out).unwrap();
            let phi = fam.phase_sum(theta);
            assert_abs_diff_eq!(p[0], (phi / 2.0).cos().powi(2), epsilon = 1e-12);
        }
    }

    #[test]
    fn partition_splits_by_derivative_sign() {
        let fam = crate::channels::DependentFamily::new(
            vec![
                FamilyFunction::linear(1.0),
                FamilyFunction::linear(-1.0),
                FamilyFunction::linear(0.0),
            ],
            1.0,
        )
        .unwrap();
        let (a, b) = partition_by_derivative_sign(&fam, 0.5).unwrap();
        assert_eq!(a, vec![0, 2]); // f' = 0 goes to A
        assert_eq!(b, vec![1]);
        assert!(partition_by_derivative_sign(&fam, 1.5).is_err());
    }

    #[test]
    fn partition_all_nonnegative_gives_empty_b() {
        let fam =
            crate::channels::DependentFamily::uniform(FunctionForm::Linear { a: 0.5 }, 3, 1.0)
                .unwrap();
        let (a, b) = partition_by_derivative_sign(&fam, 0.2).unwrap();
        assert_eq!(a.len(), 3);
        assert!(b.is_empty());
    }

    #[test]
    fn povm_validation_rejects_bad_sets() {
        let half = CMatrix::identity(2, 2) * cr(0.5);
        assert!(Povm::new(vec![half.clone()]).is_err()); // doesn't sum to I
        assert!(Povm::new(vec![]).is_err());
        let neg = CMatrix::from_diagonal(&CVector::from_vec(vec![cr(1.5), cr(1.0)]));
        let comp = CMatrix::identity(2, 2) - &neg;
        assert!(Povm::new(vec![neg, comp]).is_err()); // negative effect
    }

    #[test]
    fn random_povms_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(72);
        for _ in 0..20 {
            let p = random_projective_povm(3, &mut rng);
            assert_eq!(p.len(), 3);
            let q = random_povm(3, 5, &mut rng).unwrap();
            assert_eq!(q.len(), 5);
        }
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        for dim in [2usize, 4] {
            let u = random_unitary(dim, &mut rng);
            let gram = u.adjoint() * &u;
            assert!(max_abs(&(gram - CMatrix::identity(dim, dim))) < 1e-12);
        }
    }
}
