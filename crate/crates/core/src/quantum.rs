//! Dense complex linear algebra on small Hilbert spaces: pure and mixed
//! states, tensor products, partial traces, orthonormal SU(d) generator
//! bases, and matrix exponentials with directional derivatives.
//!
//! Every value is immutable after construction and every operation is a pure
//! function, so everything here can be shared and sent between threads.
//! Composite indices are row-major: the leftmost tensor factor is the most
//! significant index.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Tolerance for ket normalization and Hermiticity/trace checks.
pub const STATE_TOL: f64 = 1e-12;
/// Eigenvalues above this are considered negative for PSD checks.
pub const PSD_TOL: f64 = -1e-10;
/// Default comparison tolerance for O(1) quantities.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Shorthand complex constructor.
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Shorthand real-to-complex constructor.
pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Largest entrywise modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest entrywise modulus of `m - m†`.
pub fn hermiticity_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

fn check_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

// ---------------------------------------------------------------------------
// Pure states
// ---------------------------------------------------------------------------

/// A normalized pure state on a finite-dimensional Hilbert space.
///
/// Serializes as a list of [re, im] amplitude pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Ket {
    amps: CVector,
}

impl serde::Serialize for Ket {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = ser.serialize_seq(Some(self.dim()))?;
        for a in self.amps.iter() {
            seq.serialize_element(&[a.re, a.im])?;
        }
        seq.end()
    }
}

impl Ket {
    /// Wraps an amplitude vector, requiring Σ|aᵢ|² = 1 within [`STATE_TOL`].
    pub fn new(amplitudes: CVector) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidDimension("ket must have dim >= 1".into()));
        }
        let sum_sq: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        let deviation = (sum_sq - 1.0).abs();
        if deviation > STATE_TOL {
            return Err(Error::NotNormalized { deviation });
        }
        Ok(Self { amps: amplitudes })
    }

    /// Normalizes an arbitrary non-zero amplitude vector.
    pub fn normalized(amplitudes: CVector) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidDimension("ket must have dim >= 1".into()));
        }
        let norm = amplitudes.norm();
        if norm < 1e-300 {
            return Err(Error::NotNormalized { deviation: 1.0 });
        }
        Ok(Self {
            amps: amplitudes / cr(norm),
        })
    }

    /// The computational basis state |index⟩.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension("ket must have dim >= 1".into()));
        }
        if index >= dim {
            return Err(Error::InvalidDimension(format!(
                "basis index {index} out of range for dim {dim}"
            )));
        }
        let mut amps = CVector::zeros(dim);
        amps[index] = cr(1.0);
        Ok(Self { amps })
    }

    pub(crate) fn from_vector_unchecked(amps: CVector) -> Self {
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amps
    }

    pub fn amplitude(&self, i: usize) -> C64 {
        self.amps[i]
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &Ket) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(format!(
                "inner product of dims {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(self.amps.dotc(&other.amps))
    }

    /// |self⟩⟨self| as a density operator.
    pub fn density(&self) -> DensityOperator {
        let mat = &self.amps * self.amps.adjoint();
        DensityOperator::from_matrix_unchecked(mat)
    }

    /// |self⟩⟨self| as a raw matrix (projector).
    pub fn projector(&self) -> CMatrix {
        &self.amps * self.amps.adjoint()
    }

    /// Applies an operator to the ket. No renormalization happens, so the
    /// operator must be norm-preserving for the result to remain a state.
    pub fn apply(&self, op: &CMatrix) -> Result<Ket> {
        if op.ncols() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "operator {}x{} applied to ket of dim {}",
                op.nrows(),
                op.ncols(),
                self.dim()
            )));
        }
        Ket::new(op * &self.amps)
    }
}

// ---------------------------------------------------------------------------
// Mixed states
// ---------------------------------------------------------------------------

/// A density operator: Hermitian, positive semidefinite, unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    mat: CMatrix,
}

impl DensityOperator {
    /// Validates Hermiticity, unit trace, and positive semidefiniteness.
    pub fn new(mat: CMatrix) -> Result<Self> {
        check_square(&mat)?;
        let herm = hermiticity_deviation(&mat);
        if herm > STATE_TOL {
            return Err(Error::NotHermitian { deviation: herm });
        }
        let trace_dev = (mat.trace() - cr(1.0)).norm();
        if trace_dev > STATE_TOL {
            return Err(Error::InvalidTrace {
                deviation: trace_dev,
            });
        }
        let min_eig = mat
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min_eig < PSD_TOL {
            return Err(Error::NotPsd {
                min_eigenvalue: min_eig,
            });
        }
        Ok(Self { mat })
    }

    /// For internal use where validity is guaranteed by construction.
    pub(crate) fn from_matrix_unchecked(mat: CMatrix) -> Self {
        Self { mat }
    }

    pub fn from_ket(ket: &Ket) -> Self {
        ket.density()
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    /// tr ρ², real part (1 for pure states).
    pub fn purity(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                acc += (self.mat[(i, j)] * self.mat[(j, i)]).re;
            }
        }
        acc
    }

    pub fn is_pure(&self, tol: f64) -> bool {
        (self.purity() - 1.0).abs() <= tol
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.mat
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Eigendecomposition ρ = V diag(q) V†.
    pub fn eigen(&self) -> (DVector<f64>, CMatrix) {
        let se = self.mat.clone().symmetric_eigen();
        (se.eigenvalues, se.eigenvectors)
    }

    /// Conjugation ρ ↦ M ρ M†.
    pub fn conjugate_by(&self, m: &CMatrix) -> Result<DensityOperator> {
        if m.ncols() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "conjugation of dim {} state by {}x{} operator",
                self.dim(),
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(DensityOperator::from_matrix_unchecked(
            m * &self.mat * m.adjoint(),
        ))
    }
}

// ---------------------------------------------------------------------------
// Tensor products
// ---------------------------------------------------------------------------

/// Kronecker product of kets, leftmost factor most significant.
pub fn tensor_kets(factors: &[&Ket]) -> Result<Ket> {
    if factors.is_empty() {
        return Err(Error::EmptyFactorList);
    }
    let mut amps = factors[0].amps.clone();
    for f in &factors[1..] {
        amps = amps.kronecker(&f.amps);
    }
    Ok(Ket::from_vector_unchecked(amps))
}

/// Kronecker product of operator matrices, leftmost factor most significant.
pub fn tensor_ops(factors: &[&CMatrix]) -> Result<CMatrix> {
    if factors.is_empty() {
        return Err(Error::EmptyFactorList);
    }
    let mut out = factors[0].clone();
    for f in &factors[1..] {
        out = out.kronecker(f);
    }
    Ok(out)
}

/// Reduces ρ to the factors listed in `keep` (indices into `factor_dims`,
/// strictly increasing). The kept factors stay in their original order.
pub fn partial_trace(
    rho: &DensityOperator,
    factor_dims: &[usize],
    keep: &[usize],
) -> Result<DensityOperator> {
    if factor_dims.contains(&0) {
        return Err(Error::InvalidDimension("factor dims must be >= 1".into()));
    }
    let total: usize = factor_dims.iter().product();
    if total != rho.dim() {
        return Err(Error::DimensionMismatch(format!(
            "factor dims multiply to {total}, state has dim {}",
            rho.dim()
        )));
    }
    if keep.is_empty() {
        return Err(Error::InvalidConfig("keep set must be nonempty".into()));
    }
    if keep.windows(2).any(|w| w[0] >= w[1]) || *keep.last().unwrap() >= factor_dims.len() {
        return Err(Error::InvalidConfig(
            "keep indices must be strictly increasing and in range".into(),
        ));
    }

    // Row-major strides: leftmost factor most significant.
    let m = factor_dims.len();
    let mut strides = vec![1usize; m];
    for i in (0..m.saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * factor_dims[i + 1];
    }
    let traced: Vec<usize> = (0..m).filter(|i| !keep.contains(i)).collect();
    let keep_dims: Vec<usize> = keep.iter().map(|&i| factor_dims[i]).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&i| factor_dims[i]).collect();
    let dim_keep: usize = keep_dims.iter().product();
    let dim_traced: usize = traced_dims.iter().product();

    // Offset of composite index `idx` (counted over the given factors).
    let offset = |idx: usize, dims: &[usize], factors: &[usize]| -> usize {
        let mut rem = idx;
        let mut off = 0;
        for (pos, &f) in factors.iter().enumerate().rev() {
            let d = dims[pos];
            off += (rem % d) * strides[f];
            rem /= d;
        }
        off
    };

    let src = rho.matrix();
    let mut out = CMatrix::zeros(dim_keep, dim_keep);
    for a in 0..dim_keep {
        let ra = offset(a, &keep_dims, keep);
        for b in 0..dim_keep {
            let cb = offset(b, &keep_dims, keep);
            let mut acc = C64::ZERO;
            for t in 0..dim_traced {
                let rt = offset(t, &traced_dims, &traced);
                acc += src[(ra + rt, cb + rt)];
            }
            out[(a, b)] = acc;
        }
    }
    Ok(DensityOperator::from_matrix_unchecked(out))
}

// ---------------------------------------------------------------------------
// SU(d) generator bases
// ---------------------------------------------------------------------------

/// An orthonormal basis of Hermitian traceless d×d generators:
/// tr tⱼ = 0 and tr tⱼtₖ = δⱼₖ.
#[derive(Debug, Clone)]
pub struct GeneratorBasis {
    d: usize,
    generators: Vec<CMatrix>,
}

impl GeneratorBasis {
    pub fn new(d: usize, generators: Vec<CMatrix>) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidDimension("generator basis needs d >= 2".into()));
        }
        if generators.len() != d * d - 1 {
            return Err(Error::InvalidDimension(format!(
                "expected {} generators for d = {d}, got {}",
                d * d - 1,
                generators.len()
            )));
        }
        for (j, t) in generators.iter().enumerate() {
            if t.nrows() != d || t.ncols() != d {
                return Err(Error::DimensionMismatch(format!(
                    "generator {j} is {}x{}, expected {d}x{d}",
                    t.nrows(),
                    t.ncols()
                )));
            }
            let herm = hermiticity_deviation(t);
            if herm > STATE_TOL {
                return Err(Error::NotHermitian { deviation: herm });
            }
            if t.trace().norm() > STATE_TOL {
                return Err(Error::InvalidConfig(format!(
                    "generator {j} is not traceless (|tr| = {:.3e})",
                    t.trace().norm()
                )));
            }
        }
        for j in 0..generators.len() {
            for k in j..generators.len() {
                let prod = (&generators[j] * &generators[k]).trace();
                let expect = if j == k { 1.0 } else { 0.0 };
                if (prod - cr(expect)).norm() > STATE_TOL {
                    return Err(Error::InvalidConfig(format!(
                        "generators {j},{k} not orthonormal: tr tj tk = {prod}"
                    )));
                }
            }
        }
        Ok(Self { d, generators })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Number of generators, d²−1.
    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn generators(&self) -> &[CMatrix] {
        &self.generators
    }

    pub fn generator(&self, j: usize) -> &CMatrix {
        &self.generators[j]
    }
}

/// Generalized Gell-Mann matrices rescaled so that tr tⱼtₖ = δⱼₖ.
///
/// Ordering: symmetric pairs, antisymmetric pairs, then diagonal generators;
/// for d = 2 this gives σx/√2, σy/√2, σz/√2.
pub fn gell_mann_basis(d: usize) -> Result<GeneratorBasis> {
    if d < 2 {
        return Err(Error::InvalidDimension("gell_mann_basis needs d >= 2".into()));
    }
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut gens = Vec::with_capacity(d * d - 1);
    for j in 0..d {
        for k in (j + 1)..d {
            let mut t = CMatrix::zeros(d, d);
            t[(j, k)] = cr(inv_sqrt2);
            t[(k, j)] = cr(inv_sqrt2);
            gens.push(t);
        }
    }
    for j in 0..d {
        for k in (j + 1)..d {
            let mut t = CMatrix::zeros(d, d);
            t[(j, k)] = c(0.0, -inv_sqrt2);
            t[(k, j)] = c(0.0, inv_sqrt2);
            gens.push(t);
        }
    }
    for l in 1..d {
        let norm = 1.0 / ((l * (l + 1)) as f64).sqrt();
        let mut t = CMatrix::zeros(d, d);
        for m in 0..l {
            t[(m, m)] = cr(norm);
        }
        t[(l, l)] = cr(-(l as f64) * norm);
        gens.push(t);
    }
    GeneratorBasis::new(d, gens)
}

// ---------------------------------------------------------------------------
// Matrix exponential
// ---------------------------------------------------------------------------

fn is_skew_hermitian(a: &CMatrix) -> bool {
    let scale = 1.0 + max_abs(a);
    let n = a.nrows();
    for i in 0..n {
        for j in 0..n {
            if (a[(i, j)] + a[(j, i)].conj()).norm() > 1e-12 * scale {
                return false;
            }
        }
    }
    true
}

/// exp(A) for skew-Hermitian A via the eigendecomposition of −iA.
fn expm_skew_hermitian(a: &CMatrix) -> CMatrix {
    let h = a.map(|z| z * c(0.0, -1.0)); // Hermitian
    let se = h.symmetric_eigen();
    let n = a.nrows();
    let mut out = CMatrix::zeros(n, n);
    for k in 0..n {
        let phase = C64::from_polar(1.0, se.eigenvalues[k]);
        let v = se.eigenvectors.column(k);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] += phase * v[i] * v[j].conj();
            }
        }
    }
    out
}

const PADE_13_THETA: f64 = 5.371920351148152;
const PADE_13_B: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn one_norm(a: &CMatrix) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Scaling-and-squaring with a degree-13 Padé approximant.
fn expm_pade(a: &CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    let norm = one_norm(a);
    let s = if norm > PADE_13_THETA {
        (norm / PADE_13_THETA).log2().ceil() as u32
    } else {
        0
    };
    let a = a.map(|z| z / cr(2f64.powi(s as i32)));

    let ident = CMatrix::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let b = &PADE_13_B;
    let u_inner = &a6 * (&a6 * cr(b[13]) + &a4 * cr(b[11]) + &a2 * cr(b[9]))
        + &a6 * cr(b[7])
        + &a4 * cr(b[5])
        + &a2 * cr(b[3])
        + &ident * cr(b[1]);
    let u = &a * u_inner;
    let v = &a6 * (&a6 * cr(b[12]) + &a4 * cr(b[10]) + &a2 * cr(b[8]))
        + &a6 * cr(b[6])
        + &a4 * cr(b[4])
        + &a2 * cr(b[2])
        + &ident * cr(b[0]);

    let lhs = &v - &u;
    let rhs = &v + &u;
    let mut exp = lhs
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::SingularMatrix("Padé denominator".into()))?;
    for _ in 0..s {
        exp = &exp * &exp;
    }
    Ok(exp)
}

/// Matrix exponential exp(A).
///
/// Skew-Hermitian inputs take an exact eigendecomposition path (the result
/// is then unitary to ~1e-10); everything else goes through
/// scaling-and-squaring Padé.
pub fn matrix_exp(a: &CMatrix) -> Result<CMatrix> {
    check_square(a)?;
    if is_skew_hermitian(a) {
        Ok(expm_skew_hermitian(a))
    } else {
        expm_pade(a)
    }
}

/// Fréchet derivative of exp at A in direction E, computed from the
/// augmented block identity: exp([[A, E], [0, A]]) has the derivative in
/// its upper-right block.
pub fn exp_directional_derivative(a: &CMatrix, e: &CMatrix) -> Result<CMatrix> {
    let n = check_square(a)?;
    if e.nrows() != n || e.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "direction is {}x{}, base point is {n}x{n}",
            e.nrows(),
            e.ncols()
        )));
    }
    let mut block = CMatrix::zeros(2 * n, 2 * n);
    block.view_mut((0, 0), (n, n)).copy_from(a);
    block.view_mut((0, n), (n, n)).copy_from(e);
    block.view_mut((n, n), (n, n)).copy_from(a);
    let exp = expm_pade(&block)?;
    Ok(exp.view((0, n), (n, n)).into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{random_cmatrix, random_density, random_ket, random_skew_hermitian};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mat_close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        a.nrows() == b.nrows() && a.ncols() == b.ncols() && max_abs(&(a - b)) < tol
    }

    #[test]
    fn ket_rejects_unnormalized() {
        let v = CVector::from_vec(vec![cr(1.0), cr(1.0)]);
        assert!(matches!(Ket::new(v), Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn tensor_of_basis_kets() {
        let zero = Ket::basis(2, 0).unwrap();
        let one = Ket::basis(2, 1).unwrap();
        let k = tensor_kets(&[&zero, &one]).unwrap();
        assert_eq!(k.dim(), 4);
        assert_abs_diff_eq!(k.amplitude(1).re, 1.0, epsilon = 1e-15);
        assert!(k.amplitudes().iter().map(|z| z.norm_sqr()).sum::<f64>() - 1.0 < 1e-15);
    }

    #[test]
    fn tensor_of_identities() {
        let i2 = CMatrix::identity(2, 2);
        let prod = tensor_ops(&[&i2, &i2]).unwrap();
        assert!(mat_close(&prod, &CMatrix::identity(4, 4), 1e-15));
    }

    #[test]
    fn tensor_rejects_empty() {
        assert!(matches!(tensor_kets(&[]), Err(Error::EmptyFactorList)));
        assert!(matches!(tensor_ops(&[]), Err(Error::EmptyFactorList)));
    }

    #[test]
    fn tensor_builds_bell_pair() {
        // 1/√2 (|00⟩ + |11⟩) assembled from tensored basis states.
        let zero = Ket::basis(2, 0).unwrap();
        let one = Ket::basis(2, 1).unwrap();
        let zz = tensor_kets(&[&zero, &zero]).unwrap();
        let oo = tensor_kets(&[&one, &one]).unwrap();
        let amps = (zz.amplitudes() + oo.amplitudes()) * cr(std::f64::consts::FRAC_1_SQRT_2);
        let bell = Ket::new(amps).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let expect = [s, 0.0, 0.0, s];
        for (i, &e) in expect.iter().enumerate() {
            assert_abs_diff_eq!(bell.amplitude(i).re, e, epsilon = 1e-12);
            assert_abs_diff_eq!(bell.amplitude(i).im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn tensor_is_associative() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let a = random_ket(2, &mut rng);
            let b = random_ket(3, &mut rng);
            let cc = random_ket(2, &mut rng);
            let ab = tensor_kets(&[&a, &b]).unwrap();
            let left = tensor_kets(&[&ab, &cc]).unwrap();
            let all = tensor_kets(&[&a, &b, &cc]).unwrap();
            let diff: f64 = (left.amplitudes() - all.amplitudes())
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            assert!(diff < 1e-14);
        }
    }

    #[test]
    fn partial_trace_of_bell_pair_is_maximally_mixed() {
        let mut amps = CVector::zeros(4);
        amps[0] = cr(std::f64::consts::FRAC_1_SQRT_2);
        amps[3] = cr(std::f64::consts::FRAC_1_SQRT_2);
        let rho = Ket::new(amps).unwrap().density();
        let reduced = partial_trace(&rho, &[2, 2], &[0]).unwrap();
        let expect = CMatrix::identity(2, 2) * cr(0.5);
        assert!(mat_close(reduced.matrix(), &expect, 1e-14));
    }

    #[test]
    fn partial_trace_of_product_recovers_factor() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let rho = random_density(2, &mut rng);
            let sigma = random_density(3, &mut rng);
            let joint = DensityOperator::from_matrix_unchecked(
                tensor_ops(&[rho.matrix(), sigma.matrix()]).unwrap(),
            );
            let back = partial_trace(&joint, &[2, 3], &[0]).unwrap();
            assert!(mat_close(back.matrix(), rho.matrix(), 1e-12));
            let back2 = partial_trace(&joint, &[2, 3], &[1]).unwrap();
            assert!(mat_close(back2.matrix(), sigma.matrix(), 1e-12));
        }
    }

    #[test]
    fn partial_trace_of_ghz_qubit() {
        // Direct 8x8 computation: keep the first qubit of a 3-qubit GHZ state.
        let mut amps = CVector::zeros(8);
        amps[0] = cr(std::f64::consts::FRAC_1_SQRT_2);
        amps[7] = cr(std::f64::consts::FRAC_1_SQRT_2);
        let rho = Ket::new(amps).unwrap().density();
        let reduced = partial_trace(&rho, &[2, 2, 2], &[0]).unwrap();
        let expect = CMatrix::from_diagonal(&CVector::from_vec(vec![cr(0.5), cr(0.5)]));
        assert!(mat_close(reduced.matrix(), &expect, 1e-14));
        assert_abs_diff_eq!(reduced.trace(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn partial_trace_rejects_bad_args() {
        let rho = Ket::basis(4, 0).unwrap().density();
        assert!(partial_trace(&rho, &[2, 3], &[0]).is_err());
        assert!(partial_trace(&rho, &[2, 2], &[]).is_err());
        assert!(partial_trace(&rho, &[2, 2], &[2]).is_err());
    }

    #[test]
    fn gell_mann_d2_matches_rescaled_paulis() {
        let basis = gell_mann_basis(2).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let sx = CMatrix::from_row_slice(2, 2, &[cr(0.0), cr(s), cr(s), cr(0.0)]);
        let sy = CMatrix::from_row_slice(2, 2, &[cr(0.0), c(0.0, -s), c(0.0, s), cr(0.0)]);
        let sz = CMatrix::from_row_slice(2, 2, &[cr(s), cr(0.0), cr(0.0), cr(-s)]);
        assert!(mat_close(basis.generator(0), &sx, 1e-15));
        assert!(mat_close(basis.generator(1), &sy, 1e-15));
        assert!(mat_close(basis.generator(2), &sz, 1e-15));
    }

    #[test]
    fn gell_mann_gram_matrix_is_identity() {
        for d in 2..=4 {
            let basis = gell_mann_basis(d).unwrap();
            assert_eq!(basis.len(), d * d - 1);
            for j in 0..basis.len() {
                assert!(basis.generator(j).trace().norm() < 1e-12);
                for k in 0..basis.len() {
                    let g = (basis.generator(j) * basis.generator(k)).trace();
                    let expect = if j == k { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(g.re, expect, epsilon = 1e-12);
                    assert_abs_diff_eq!(g.im, 0.0, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn gell_mann_rejects_d1() {
        assert!(gell_mann_basis(1).is_err());
    }

    #[test]
    fn matrix_exp_of_zero_is_identity() {
        let z = CMatrix::zeros(3, 3);
        let e = matrix_exp(&z).unwrap();
        assert!(mat_close(&e, &CMatrix::identity(3, 3), 1e-14));
    }

    #[test]
    fn matrix_exp_of_diagonal_phase() {
        // exp(i (π/2) σz) = Diag(e^{iπ/2}, e^{−iπ/2})
        let half_pi = std::f64::consts::FRAC_PI_2;
        let a = CMatrix::from_diagonal(&CVector::from_vec(vec![c(0.0, half_pi), c(0.0, -half_pi)]));
        let e = matrix_exp(&a).unwrap();
        let expect = CMatrix::from_diagonal(&CVector::from_vec(vec![
            C64::from_polar(1.0, half_pi),
            C64::from_polar(1.0, -half_pi),
        ]));
        assert!(mat_close(&e, &expect, 1e-12));
    }

    #[test]
    fn matrix_exp_of_skew_hermitian_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [2usize, 3, 5] {
            for _ in 0..10 {
                let a = random_skew_hermitian(n, &mut rng);
                let u = matrix_exp(&a).unwrap();
                let gram = u.adjoint() * &u;
                assert!(max_abs(&(gram - CMatrix::identity(n, n))) < 1e-10);
            }
        }
    }

    #[test]
    fn matrix_exp_pade_matches_eigen_path() {
        // Same skew-Hermitian input through both algorithms.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10 {
            let a = random_skew_hermitian(4, &mut rng);
            let eig = matrix_exp(&a).unwrap();
            let pade = expm_pade(&a).unwrap();
            assert!(mat_close(&eig, &pade, 1e-12));
        }
    }

    #[test]
    fn matrix_exp_rejects_non_square() {
        let m = CMatrix::zeros(2, 3);
        assert!(matches!(matrix_exp(&m), Err(Error::NotSquare { .. })));
    }

    #[test]
    fn frechet_at_zero_is_direction() {
        let a = CMatrix::zeros(3, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let e = random_cmatrix(3, &mut rng);
        let d = exp_directional_derivative(&a, &e).unwrap();
        assert!(mat_close(&d, &e, 1e-13));
    }

    #[test]
    fn frechet_commuting_case() {
        // Diagonal A and E commute, so the derivative is E·exp(A).
        let a = CMatrix::from_diagonal(&CVector::from_vec(vec![c(0.1, 0.3), c(-0.2, 0.5)]));
        let e = CMatrix::from_diagonal(&CVector::from_vec(vec![c(0.7, -0.1), c(0.2, 0.9)]));
        let expect = &e * matrix_exp(&a).unwrap();
        let got = exp_directional_derivative(&a, &e).unwrap();
        assert!(mat_close(&got, &expect, 1e-12));
    }

    #[test]
    fn frechet_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let h = 1e-5;
        for _ in 0..100 {
            let a = random_cmatrix(2, &mut rng);
            let e = random_cmatrix(2, &mut rng);
            let exact = exp_directional_derivative(&a, &e).unwrap();
            let plus = expm_pade(&(&a + &e * cr(h))).unwrap();
            let minus = expm_pade(&(&a - &e * cr(h))).unwrap();
            let fd = (plus - minus) / cr(2.0 * h);
            let scale = max_abs(&exact).max(1e-6);
            assert!(max_abs(&(&fd - &exact)) / scale < 1e-6);
        }
    }

    #[test]
    fn frechet_rejects_shape_mismatch() {
        let a = CMatrix::zeros(2, 2);
        let e = CMatrix::zeros(3, 3);
        assert!(exp_directional_derivative(&a, &e).is_err());
    }

    #[test]
    fn density_operator_validation() {
        let ok = CMatrix::identity(2, 2) * cr(0.5);
        assert!(DensityOperator::new(ok).is_ok());
        let bad_trace = CMatrix::identity(2, 2);
        assert!(matches!(
            DensityOperator::new(bad_trace),
            Err(Error::InvalidTrace { .. })
        ));
        let mut not_herm = CMatrix::identity(2, 2) * cr(0.5);
        not_herm[(0, 1)] = cr(0.3);
        assert!(matches!(
            DensityOperator::new(not_herm),
            Err(Error::NotHermitian { .. })
        ));
        let not_psd = CMatrix::from_diagonal(&CVector::from_vec(vec![cr(1.5), cr(-0.5)]));
        assert!(matches!(
            DensityOperator::new(not_psd),
            Err(Error::NotPsd { .. })
        ));
    }

    #[test]
    fn purity_of_pure_and_mixed() {
        let pure = Ket::basis(2, 0).unwrap().density();
        assert_abs_diff_eq!(pure.purity(), 1.0, epsilon = 1e-14);
        let mixed = DensityOperator::new(CMatrix::identity(2, 2) * cr(0.5)).unwrap();
        assert_abs_diff_eq!(mixed.purity(), 0.5, epsilon = 1e-14);
    }
}
