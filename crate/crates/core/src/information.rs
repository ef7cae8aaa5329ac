//! Quantum (SLD) and classical Fisher information.
//!
//! The quantum information of a unitarily evolved pure state ρ_θ = U_θ ρ₀ U_θ†
//! is computed directly from the derivative operators Uʲ = ∂U/∂θʲ:
//!
//! ```text
//! H_jk = 4 Re tr{Uʲ ρ₀ U^{k†}} + 4 tr{Uʲ ρ₀ U†} tr{Uᵏ ρ₀ U†}
//! ```
//!
//! The traces in the product term are purely imaginary for normalized
//! states, so the written "+" contributes the usual negative variance
//! correction. For general mixed states the information is obtained by
//! solving the SLD equation dρ/dθʲ = ½(ρλʲ + λʲρ) in the eigenbasis of ρ.

use nalgebra::DMatrix;
use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::quantum::{hermiticity_deviation, max_abs, CMatrix, DensityOperator, C64};
use crate::schemes::Povm;

/// Eigenvalue-pair cutoff below which SLD components are set to zero.
pub const SLD_SUPPORT_CUTOFF: f64 = 1e-12;
/// Residual above this makes the SLD solve an error.
pub const SLD_RESIDUAL_TOL: f64 = 1e-6;
/// Outcome probabilities below this contribute nothing to the Fisher sum.
pub const PROBABILITY_FLOOR: f64 = 1e-12;
/// Max |dp| allowed on an outcome whose probability is below the floor.
pub const DERIVATIVE_FLOOR: f64 = 1e-9;
/// Symmetry tolerance for information matrices.
const SYMMETRY_TOL: f64 = 1e-10;
/// Most negative eigenvalue accepted as "positive semidefinite".
const PSD_EIG_TOL: f64 = -1e-9;

pub(crate) fn serialize_rows<S: Serializer>(
    m: &DMatrix<f64>,
    ser: S,
) -> std::result::Result<S::Ok, S::Error> {
    let mut seq = ser.serialize_seq(Some(m.nrows()))?;
    for i in 0..m.nrows() {
        let row: Vec<f64> = (0..m.ncols()).map(|j| m[(i, j)]).collect();
        seq.serialize_element(&row)?;
    }
    seq.end()
}

fn validate_information_matrix(entries: &DMatrix<f64>, label: &str) -> Result<()> {
    if entries.nrows() != entries.ncols() {
        return Err(Error::NotSquare {
            rows: entries.nrows(),
            cols: entries.ncols(),
        });
    }
    let mut asym: f64 = 0.0;
    for i in 0..entries.nrows() {
        for j in 0..entries.ncols() {
            asym = asym.max((entries[(i, j)] - entries[(j, i)]).abs());
        }
    }
    if asym > SYMMETRY_TOL {
        return Err(Error::NotHermitian { deviation: asym });
    }
    let min_eig = entries
        .clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if min_eig < PSD_EIG_TOL {
        return Err(Error::NotPsd {
            min_eigenvalue: min_eig,
        });
    }
    let _ = label;
    Ok(())
}

/// SLD quantum information matrix H(θ), symmetric positive semidefinite.
///
/// For multi-channel problems with p parameters per channel, row m(j,k) =
/// j·p + k (0-based) corresponds to parameter k of channel j.
#[derive(Debug, Clone, Serialize)]
pub struct QfiMatrix {
    #[serde(serialize_with = "serialize_rows")]
    entries: DMatrix<f64>,
    params_per_channel: usize,
}

impl QfiMatrix {
    pub fn new(entries: DMatrix<f64>, params_per_channel: usize) -> Result<Self> {
        validate_information_matrix(&entries, "QFI")?;
        let p = entries.nrows();
        if params_per_channel == 0 || !p.is_multiple_of(params_per_channel) {
            return Err(Error::InvalidConfig(format!(
                "params_per_channel = {params_per_channel} does not divide p = {p}"
            )));
        }
        Ok(Self {
            entries,
            params_per_channel,
        })
    }

    pub fn p(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn entry(&self, j: usize, k: usize) -> f64 {
        self.entries[(j, k)]
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace()
    }

    pub fn params_per_channel(&self) -> usize {
        self.params_per_channel
    }

    /// Flat index of parameter `k` of channel `j` (0-based).
    pub fn flat_index(&self, j: usize, k: usize) -> usize {
        j * self.params_per_channel + k
    }

    /// For scalar problems, the single entry.
    pub fn scalar(&self) -> Option<f64> {
        (self.p() == 1).then(|| self.entries[(0, 0)])
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.entries
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// H⁻¹ via the symmetric eigendecomposition.
    pub fn inverse(&self) -> Result<DMatrix<f64>> {
        invert_spd(&self.entries)
    }
}

/// Classical Fisher information matrix of a measurement.
#[derive(Debug, Clone, Serialize)]
pub struct FisherMatrix {
    #[serde(serialize_with = "serialize_rows")]
    entries: DMatrix<f64>,
}

impl FisherMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        validate_information_matrix(&entries, "Fisher")?;
        Ok(Self { entries })
    }

    pub fn p(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace()
    }

    pub fn scalar(&self) -> Option<f64> {
        (self.p() == 1).then(|| self.entries[(0, 0)])
    }
}

/// Self-adjoint solutions λʲ of dρ/dθʲ = ½(ρλʲ + λʲρ).
#[derive(Debug, Clone)]
pub struct SldSet {
    operators: Vec<CMatrix>,
}

impl SldSet {
    pub fn operators(&self) -> &[CMatrix] {
        &self.operators
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }
}

pub(crate) fn invert_spd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let se = m.clone().symmetric_eigen();
    let max_eig = se.eigenvalues.iter().copied().fold(0.0, f64::max);
    let min_eig = se.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min_eig <= 0.0 || max_eig / min_eig > 1e8 {
        return Err(Error::SingularMatrix(format!(
            "eigenvalue range [{min_eig:.3e}, {max_eig:.3e}]"
        )));
    }
    let n = m.nrows();
    let mut out = DMatrix::zeros(n, n);
    for k in 0..n {
        let v = se.eigenvectors.column(k);
        let w = 1.0 / se.eigenvalues[k];
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] += w * v[i] * v[j];
            }
        }
    }
    Ok(out)
}

fn check_dims(u: &CMatrix, du: &[CMatrix], dim: usize) -> Result<()> {
    if u.nrows() != dim || u.ncols() != dim {
        return Err(Error::DimensionMismatch(format!(
            "operator is {}x{}, state dim is {dim}",
            u.nrows(),
            u.ncols()
        )));
    }
    for d in du {
        if d.nrows() != dim || d.ncols() != dim {
            return Err(Error::DimensionMismatch(
                "derivative operator dimension mismatch".into(),
            ));
        }
    }
    if du.is_empty() {
        return Err(Error::InvalidConfig("at least one parameter required".into()));
    }
    Ok(())
}

/// tr{A B†} without forming the product.
fn trace_prod_adjoint(a: &CMatrix, b: &CMatrix) -> C64 {
    let mut acc = C64::ZERO;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(i, j)].conj();
        }
    }
    acc
}

/// SLD quantum information of the pure family ρ_θ = U_θ ρ₀ U_θ† from the
/// derivative operators dU = [∂U/∂θʲ], evaluated at the input state ρ₀.
///
/// `params_per_channel` of the result is set to `du.len()` (a single
/// channel); use [`QfiMatrix::flat_index`] semantics for multi-channel
/// layouts via [`qfi_pure_channel_blocked`].
pub fn qfi_pure_channel(u: &CMatrix, du: &[CMatrix], rho0: &DensityOperator) -> Result<QfiMatrix> {
    qfi_pure_channel_blocked(u, du, rho0, du.len())
}

/// As [`qfi_pure_channel`] with an explicit per-channel parameter count for
/// the index map of multi-channel problems.
pub fn qfi_pure_channel_blocked(
    u: &CMatrix,
    du: &[CMatrix],
    rho0: &DensityOperator,
    params_per_channel: usize,
) -> Result<QfiMatrix> {
    check_dims(u, du, rho0.dim())?;
    let purity = rho0.purity();
    if (purity - 1.0).abs() > 1e-10 {
        return Err(Error::NotPure { purity });
    }
    let p = du.len();
    // Vʲ = Uʲ ρ₀, aʲ = tr{Uʲ ρ₀ U†} (purely imaginary for unitary families).
    let v: Vec<CMatrix> = du.iter().map(|d| d * rho0.matrix()).collect();
    let a: Vec<C64> = v.iter().map(|vj| trace_prod_adjoint(vj, u)).collect();
    let mut h = DMatrix::zeros(p, p);
    for j in 0..p {
        for k in j..p {
            let t1 = trace_prod_adjoint(&v[j], &du[k]);
            let entry = 4.0 * t1.re + 4.0 * (a[j] * a[k]).re;
            h[(j, k)] = entry;
            h[(k, j)] = entry;
        }
    }
    QfiMatrix::new(h, params_per_channel)
}

/// Fast path of [`qfi_pure_channel`] for a pure input given as a ket.
pub fn qfi_pure_ket(u: &CMatrix, du: &[CMatrix], ket: &crate::quantum::Ket) -> Result<QfiMatrix> {
    check_dims(u, du, ket.dim())?;
    let p = du.len();
    let w = u * ket.amplitudes();
    let v: Vec<_> = du.iter().map(|d| d * ket.amplitudes()).collect();
    let a: Vec<C64> = v.iter().map(|vj| w.dotc(vj)).collect();
    let mut h = DMatrix::zeros(p, p);
    for j in 0..p {
        for k in j..p {
            let t1 = v[k].dotc(&v[j]);
            let entry = 4.0 * t1.re + 4.0 * (a[j] * a[k]).re;
            h[(j, k)] = entry;
            h[(k, j)] = entry;
        }
    }
    QfiMatrix::new(h, p)
}

/// Minimal-norm self-adjoint solutions of the SLD equation in the eigenbasis
/// of ρ: (λʲ)_ab = 2 (dρʲ)_ab / (qₐ + q_b) on the support, 0 elsewhere.
pub fn sld_solve(rho: &DensityOperator, drho: &[CMatrix]) -> Result<SldSet> {
    let dim = rho.dim();
    if drho.is_empty() {
        return Err(Error::InvalidConfig("at least one derivative required".into()));
    }
    for d in drho {
        if d.nrows() != dim || d.ncols() != dim {
            return Err(Error::DimensionMismatch(
                "derivative dimension does not match state".into(),
            ));
        }
        let herm = hermiticity_deviation(d);
        if herm > 1e-10 {
            return Err(Error::NotHermitian { deviation: herm });
        }
        if d.trace().norm() > 1e-8 {
            return Err(Error::DomainViolation(format!(
                "state derivative must be traceless, |tr| = {:.3e}",
                d.trace().norm()
            )));
        }
    }
    let (q, vecs) = rho.eigen();
    let mut operators = Vec::with_capacity(drho.len());
    for d in drho {
        let d_eig = vecs.adjoint() * d * &vecs;
        let mut lam = CMatrix::zeros(dim, dim);
        for a in 0..dim {
            for b in 0..dim {
                let denom = q[a] + q[b];
                if denom > SLD_SUPPORT_CUTOFF {
                    lam[(a, b)] = 2.0 / denom * d_eig[(a, b)];
                }
            }
        }
        let lam = &vecs * lam * vecs.adjoint();
        // ½(ρλ + λρ) must reproduce dρ on the support.
        let recon = (rho.matrix() * &lam + &lam * rho.matrix()) * crate::quantum::cr(0.5);
        let residual = max_abs(&(&recon - d));
        if residual > SLD_RESIDUAL_TOL {
            return Err(Error::SldResidual {
                residual,
                tolerance: SLD_RESIDUAL_TOL,
            });
        }
        operators.push(lam);
    }
    Ok(SldSet { operators })
}

/// H_jk = Re tr{λʲ ρ λᵏ}.
pub fn qfi_from_slds(rho: &DensityOperator, slds: &SldSet) -> Result<QfiMatrix> {
    let dim = rho.dim();
    let p = slds.len();
    if p == 0 {
        return Err(Error::InvalidConfig("empty SLD set".into()));
    }
    for l in slds.operators() {
        if l.nrows() != dim || l.ncols() != dim {
            return Err(Error::DimensionMismatch(
                "SLD dimension does not match state".into(),
            ));
        }
    }
    let w: Vec<CMatrix> = slds.operators().iter().map(|l| l * rho.matrix()).collect();
    let mut h = DMatrix::zeros(p, p);
    for j in 0..p {
        for k in j..p {
            // tr{λʲ ρ λᵏ} = tr{(λʲρ) (λᵏ)†} since λᵏ is Hermitian.
            let t = trace_prod_adjoint(&w[j], &slds.operators()[k]);
            h[(j, k)] = t.re;
            h[(k, j)] = t.re;
        }
    }
    QfiMatrix::new(h, p)
}

/// Classical Fisher information of a finite-outcome POVM:
/// F_jk = Σ_m (∂ⱼp_m)(∂ₖp_m)/p_m with p_m = tr{M_m ρ}, ∂ⱼp_m = tr{M_m dρʲ}.
///
/// Outcomes with p_m below [`PROBABILITY_FLOOR`] contribute nothing, but any
/// such outcome with |∂p_m| above [`DERIVATIVE_FLOOR`] signals a singular
/// parametrization and is an error.
pub fn fisher_information(
    povm: &Povm,
    rho: &DensityOperator,
    drho: &[CMatrix],
) -> Result<FisherMatrix> {
    if povm.dim() != rho.dim() {
        return Err(Error::DimensionMismatch(format!(
            "POVM dim {} vs state dim {}",
            povm.dim(),
            rho.dim()
        )));
    }
    if drho.is_empty() {
        return Err(Error::InvalidConfig("at least one derivative required".into()));
    }
    for d in drho {
        if d.nrows() != rho.dim() || d.ncols() != rho.dim() {
            return Err(Error::DimensionMismatch(
                "derivative dimension does not match state".into(),
            ));
        }
    }
    let p = drho.len();
    let mut f = DMatrix::zeros(p, p);
    for (m, effect) in povm.outcomes().iter().enumerate() {
        let pm = trace_prod_adjoint(rho.matrix(), effect).re;
        let grads: Vec<f64> = drho
            .iter()
            .map(|d| trace_prod_adjoint(d, effect).re)
            .collect();
        if pm <= PROBABILITY_FLOOR {
            if let Some(&bad) = grads.iter().find(|g| g.abs() >= DERIVATIVE_FLOOR) {
                return Err(Error::SingularParametrization {
                    outcome: m,
                    derivative: bad.abs(),
                });
            }
            continue;
        }
        for j in 0..p {
            for k in 0..p {
                f[(j, k)] += grads[j] * grads[k] / pm;
            }
        }
    }
    FisherMatrix::new(f)
}

/// Minimum eigenvalue of H − F: nonnegative (up to −1e-9) for any valid
/// POVM, which is the measurement-information dominance check.
pub fn cr_dominance_gap(f: &FisherMatrix, h: &QfiMatrix) -> Result<f64> {
    if f.p() != h.p() {
        return Err(Error::DimensionMismatch(format!(
            "Fisher is {}x{}, QFI is {}x{}",
            f.p(),
            f.p(),
            h.p(),
            h.p()
        )));
    }
    let diff = h.entries() - f.entries();
    Ok(diff
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min))
}

/// dρ/dθʲ of the conjugated family U ρ₀ U† given Uʲ: Uʲρ₀U† + Uρ₀Uʲ†.
pub fn conjugated_state_derivative(
    u: &CMatrix,
    du: &CMatrix,
    rho0: &DensityOperator,
) -> CMatrix {
    du * rho0.matrix() * u.adjoint() + u * rho0.matrix() * du.adjoint()
}
