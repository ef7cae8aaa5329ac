//! Parametrized unitary channel models.
//!
//! Two families are supported: general SU(d) channels generated by an
//! orthonormal traceless basis, and two-level phase families where n
//! channels Diag(1, e^{i fⱼ(θ)}) share a single scalar parameter θ on a
//! domain [0, t].
//!
//! Ancilla layout convention: each channel's reference system sits
//! immediately to the right of its system factor, S₁R₁S₂R₂…SₙRₙ, with the
//! leftmost factor most significant.
//!
//! Channel models are immutable and all operations are pure; user-supplied
//! family functions must be safe to call concurrently.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{
    c, exp_directional_derivative, matrix_exp, tensor_ops, CMatrix, DensityOperator,
    GeneratorBasis, C64,
};

/// An SU(d) channel U_θ = exp(i Σⱼ θⱼ tⱼ) over an orthonormal generator basis.
#[derive(Debug, Clone)]
pub struct SuDChannel {
    basis: GeneratorBasis,
}

impl SuDChannel {
    pub fn new(basis: GeneratorBasis) -> Self {
        Self { basis }
    }

    /// Channel over the rescaled Gell-Mann basis for dimension d.
    pub fn from_dimension(d: usize) -> Result<Self> {
        Ok(Self::new(crate::quantum::gell_mann_basis(d)?))
    }

    pub fn d(&self) -> usize {
        self.basis.d()
    }

    /// Number of real parameters, d²−1.
    pub fn param_count(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &GeneratorBasis {
        &self.basis
    }

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.param_count() {
            return Err(Error::DimensionMismatch(format!(
                "theta has length {}, channel expects {}",
                theta.len(),
                self.param_count()
            )));
        }
        Ok(())
    }

    /// The skew-Hermitian generator i Σⱼ θⱼ tⱼ.
    pub fn generator_at(&self, theta: &[f64]) -> Result<CMatrix> {
        self.check_theta(theta)?;
        let d = self.d();
        let mut a = CMatrix::zeros(d, d);
        for (j, &th) in theta.iter().enumerate() {
            a += self.basis.generator(j) * c(0.0, th);
        }
        Ok(a)
    }

    /// U_θ = exp(i Σⱼ θⱼ tⱼ), unitary to ~1e-10.
    pub fn unitary_at(&self, theta: &[f64]) -> Result<CMatrix> {
        matrix_exp(&self.generator_at(theta)?)
    }

    /// ∂U_θ/∂θⱼ via the Fréchet derivative of exp at the generator.
    pub fn unitary_derivative(&self, theta: &[f64], j: usize) -> Result<CMatrix> {
        self.check_theta(theta)?;
        if j >= self.param_count() {
            return Err(Error::InvalidConfig(format!(
                "parameter index {j} out of range for {} parameters",
                self.param_count()
            )));
        }
        let a = self.generator_at(theta)?;
        let e = self.basis.generator(j) * c(0.0, 1.0);
        exp_directional_derivative(&a, &e)
    }
}

/// Built-in scalar function forms for phase families, constructible from
/// configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionForm {
    /// a·θ
    Linear { a: f64 },
    /// a·θ + b
    Affine { a: f64, b: f64 },
    /// a·θ^k
    Power { a: f64, k: f64 },
    /// a·sin(bθ)
    Sinusoid { a: f64, b: f64 },
}

impl FunctionForm {
    pub fn eval(&self, theta: f64) -> f64 {
        match *self {
            FunctionForm::Linear { a } => a * theta,
            FunctionForm::Affine { a, b } => a * theta + b,
            FunctionForm::Power { a, k } => a * theta.powf(k),
            FunctionForm::Sinusoid { a, b } => a * (b * theta).sin(),
        }
    }

    pub fn deriv(&self, theta: f64) -> f64 {
        match *self {
            FunctionForm::Linear { a } => a,
            FunctionForm::Affine { a, .. } => a,
            FunctionForm::Power { a, k } => a * k * theta.powf(k - 1.0),
            FunctionForm::Sinusoid { a, b } => a * b * (b * theta).cos(),
        }
    }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// One member function fⱼ of a phase family, with its analytic derivative.
#[derive(Clone)]
pub enum FamilyFunction {
    Form(FunctionForm),
    Custom { f: ScalarFn, df: ScalarFn },
}

impl FamilyFunction {
    pub fn linear(a: f64) -> Self {
        FamilyFunction::Form(FunctionForm::Linear { a })
    }

    pub fn custom(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        FamilyFunction::Custom {
            f: Arc::new(f),
            df: Arc::new(df),
        }
    }

    pub fn eval(&self, theta: f64) -> f64 {
        match self {
            FamilyFunction::Form(form) => form.eval(theta),
            FamilyFunction::Custom { f, .. } => f(theta),
        }
    }

    pub fn deriv(&self, theta: f64) -> f64 {
        match self {
            FamilyFunction::Form(form) => form.deriv(theta),
            FamilyFunction::Custom { df, .. } => df(theta),
        }
    }
}

impl fmt::Debug for FamilyFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilyFunction::Form(form) => write!(f, "{form:?}"),
            FamilyFunction::Custom { .. } => write!(f, "Custom"),
        }
    }
}

/// Grid evaluation of the family conditions: (a) real-valued, (b) monotone
/// non-decreasing members, (c) phase sum within [0, π] (or the relaxed
/// [0, 2π] variant).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ConditionReport {
    pub cond_a: bool,
    pub cond_b: bool,
    pub cond_c_pi: bool,
    pub cond_c_2pi: bool,
    pub grid_size: usize,
}

/// Number of sample points used to cross-check supplied derivatives.
const DERIVATIVE_CHECK_POINTS: usize = 32;
/// Default grid for condition evaluation.
pub const DEFAULT_CONDITION_GRID: usize = 1024;

/// n not necessarily identical two-level phase channels
/// Uⱼ(θ) = Diag(1, e^{i fⱼ(θ)}) sharing a scalar parameter θ ∈ [0, t].
#[derive(Debug, Clone)]
pub struct DependentFamily {
    funcs: Vec<FamilyFunction>,
    domain_upper: f64,
}

impl DependentFamily {
    /// Builds a family and cross-checks each supplied derivative against a
    /// central finite difference at 32 interior points.
    pub fn new(funcs: Vec<FamilyFunction>, domain_upper: f64) -> Result<Self> {
        if funcs.is_empty() {
            return Err(Error::InvalidConfig("family needs n >= 1 functions".into()));
        }
        if !domain_upper.is_finite() || domain_upper <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "domain upper bound must be positive and finite, got {domain_upper}"
            )));
        }
        let family = Self {
            funcs,
            domain_upper,
        };
        family.check_derivatives()?;
        Ok(family)
    }

    pub fn from_forms(forms: &[FunctionForm], domain_upper: f64) -> Result<Self> {
        Self::new(
            forms.iter().copied().map(FamilyFunction::Form).collect(),
            domain_upper,
        )
    }

    /// n identical copies of one function form.
    pub fn uniform(form: FunctionForm, n: usize, domain_upper: f64) -> Result<Self> {
        Self::from_forms(&vec![form; n], domain_upper)
    }

    /// A family of n copies of this family's first member function, used by
    /// channel-count sweeps.
    pub fn replicate_first(&self, n: usize) -> Result<Self> {
        Self::new(vec![self.funcs[0].clone(); n], self.domain_upper)
    }

    fn check_derivatives(&self) -> Result<()> {
        let t = self.domain_upper;
        let h = (1e-7 * t.max(1.0)).max(1e-9);
        for (j, f) in self.funcs.iter().enumerate() {
            for i in 0..DERIVATIVE_CHECK_POINTS {
                let theta = (i as f64 + 0.5) / DERIVATIVE_CHECK_POINTS as f64 * t;
                let fd = (f.eval(theta + h) - f.eval(theta - h)) / (2.0 * h);
                let df = f.deriv(theta);
                let deviation = (fd - df).abs();
                if !deviation.is_finite() || deviation > 1e-5 * (1.0 + df.abs()) {
                    return Err(Error::InconsistentDerivative {
                        index: j,
                        theta,
                        deviation,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.funcs.len()
    }

    pub fn domain_upper(&self) -> f64 {
        self.domain_upper
    }

    pub fn contains(&self, theta: f64) -> bool {
        theta.is_finite() && (0.0..=self.domain_upper).contains(&theta)
    }


    fn check_domain(&self, theta: f64) -> Result<()> {
        if !self.contains(theta) {
            return Err(Error::DomainViolation(format!(
                "theta = {theta} outside [0, {}]",
                self.domain_upper
            )));
        }
        Ok(())
    }

    fn check_member(&self, j: usize) -> Result<()> {
        if j >= self.n() {
            return Err(Error::InvalidConfig(format!(
                "channel index {j} out of range for n = {}",
                self.n()
            )));
        }
        Ok(())
    }

    /// fⱼ(θ), without domain checking.
    pub fn f(&self, j: usize, theta: f64) -> f64 {
        self.funcs[j].eval(theta)
    }

    /// dfⱼ/dθ, without domain checking.
    pub fn f_prime(&self, j: usize, theta: f64) -> f64 {
        self.funcs[j].deriv(theta)
    }

    /// Σⱼ fⱼ(θ) — the accumulated phase φ of the entangled and sequential
    /// schemes.
    pub fn phase_sum(&self, theta: f64) -> f64 {
        self.funcs.iter().map(|f| f.eval(theta)).sum()
    }

    pub fn phase_sum_derivative(&self, theta: f64) -> f64 {
        self.funcs.iter().map(|f| f.deriv(theta)).sum()
    }

    /// Σ over a prefix of the first `len` channels.
    pub fn prefix_phase_sum(&self, len: usize, theta: f64) -> f64 {
        self.funcs[..len].iter().map(|f| f.eval(theta)).sum()
    }

    pub fn prefix_phase_sum_derivative(&self, len: usize, theta: f64) -> f64 {
        self.funcs[..len].iter().map(|f| f.deriv(theta)).sum()
    }

    /// Uⱼ(θ) = Diag(1, e^{i fⱼ(θ)}); θ must lie in [0, t].
    pub fn member_unitary(&self, j: usize, theta: f64) -> Result<CMatrix> {
        self.check_member(j)?;
        self.check_domain(theta)?;
        let mut u = CMatrix::identity(2, 2);
        u[(1, 1)] = C64::from_polar(1.0, self.f(j, theta));
        Ok(u)
    }

    /// dUⱼ/dθ = Diag(0, i f′ⱼ(θ) e^{i fⱼ(θ)}).
    pub fn member_unitary_derivative(&self, j: usize, theta: f64) -> Result<CMatrix> {
        self.check_member(j)?;
        self.check_domain(theta)?;
        let mut du = CMatrix::zeros(2, 2);
        du[(1, 1)] = C64::from_polar(1.0, self.f(j, theta)) * c(0.0, self.f_prime(j, theta));
        Ok(du)
    }

    pub fn unitaries_at(&self, theta: f64) -> Result<Vec<CMatrix>> {
        (0..self.n()).map(|j| self.member_unitary(j, theta)).collect()
    }

    pub fn unitary_derivatives_at(&self, theta: f64) -> Result<Vec<CMatrix>> {
        (0..self.n())
            .map(|j| self.member_unitary_derivative(j, theta))
            .collect()
    }

    /// Evaluates conditions (a)–(c) on a uniform grid over [0, t].
    pub fn validate(&self, grid_size: usize) -> Result<ConditionReport> {
        if grid_size < 2 {
            return Err(Error::InvalidConfig("grid_size must be >= 2".into()));
        }
        let mut cond_a = true;
        let mut cond_b = true;
        let mut cond_c_pi = true;
        let mut cond_c_2pi = true;
        for i in 0..grid_size {
            let theta = i as f64 / (grid_size - 1) as f64 * self.domain_upper;
            let mut sum = 0.0;
            for f in &self.funcs {
                let v = f.eval(theta);
                let dv = f.deriv(theta);
                if !v.is_finite() || !dv.is_finite() {
                    cond_a = false;
                }
                if dv < 0.0 {
                    cond_b = false;
                }
                sum += v;
            }
            if !(-1e-12..=std::f64::consts::PI + 1e-12).contains(&sum) {
                cond_c_pi = false;
            }
            if !(-1e-12..=2.0 * std::f64::consts::PI + 1e-12).contains(&sum) {
                cond_c_2pi = false;
            }
        }
        Ok(ConditionReport {
            cond_a,
            cond_b,
            cond_c_pi,
            cond_c_2pi,
            grid_size,
        })
    }
}

// ---------------------------------------------------------------------------
// Channel application maps
// ---------------------------------------------------------------------------

fn common_dim(unitaries: &[CMatrix]) -> Result<usize> {
    let d = unitaries
        .first()
        .ok_or(Error::EmptyFactorList)?
        .nrows();
    for u in unitaries {
        if u.nrows() != d || u.ncols() != d {
            return Err(Error::DimensionMismatch(
                "all channel unitaries must be square with a common dimension".into(),
            ));
        }
    }
    Ok(d)
}

/// The full operator ⊗ⱼ (Uⱼ ⊗ I_d) in the S₁R₁S₂R₂… layout.
pub fn extended_operator(unitaries: &[CMatrix]) -> Result<CMatrix> {
    let d = common_dim(unitaries)?;
    let ident = CMatrix::identity(d, d);
    let factors: Vec<CMatrix> = unitaries.iter().map(|u| u.kronecker(&ident)).collect();
    tensor_ops(&factors.iter().collect::<Vec<_>>())
}

/// Derivative of [`extended_operator`] with respect to channel j's
/// parameter, given dUⱼ.
pub fn extended_partial_derivative(
    unitaries: &[CMatrix],
    j: usize,
    derivative: &CMatrix,
) -> Result<CMatrix> {
    let d = common_dim(unitaries)?;
    if j >= unitaries.len() {
        return Err(Error::InvalidConfig(format!(
            "channel index {j} out of range for n = {}",
            unitaries.len()
        )));
    }
    let ident = CMatrix::identity(d, d);
    let factors: Vec<CMatrix> = unitaries
        .iter()
        .enumerate()
        .map(|(i, u)| if i == j { derivative } else { u }.kronecker(&ident))
        .collect();
    tensor_ops(&factors.iter().collect::<Vec<_>>())
}

/// d/dθ of [`extended_operator`] for a shared scalar parameter:
/// Σⱼ ⊗ᵢ (dUⱼ at slot j, Uᵢ elsewhere) ⊗ I.
pub fn extended_scalar_derivative(
    unitaries: &[CMatrix],
    derivatives: &[CMatrix],
) -> Result<CMatrix> {
    if unitaries.len() != derivatives.len() {
        return Err(Error::DimensionMismatch(
            "one derivative per unitary required".into(),
        ));
    }
    let mut sum: Option<CMatrix> = None;
    for (j, derivative) in derivatives.iter().enumerate() {
        let term = extended_partial_derivative(unitaries, j, derivative)?;
        sum = Some(match sum {
            None => term,
            Some(s) => s + term,
        });
    }
    Ok(sum.unwrap())
}

/// Ordered product U₁U₂⋯Uₙ (identity for an empty list).
pub fn sequential_operator(unitaries: &[CMatrix], dim: usize) -> Result<CMatrix> {
    let mut prod = CMatrix::identity(dim, dim);
    for u in unitaries {
        if u.nrows() != dim || u.ncols() != dim {
            return Err(Error::DimensionMismatch(
                "sequential unitaries must all act on the probe dimension".into(),
            ));
        }
        prod *= u;
    }
    Ok(prod)
}

/// d/dθ of the ordered product for a shared scalar parameter.
pub fn sequential_scalar_derivative(
    unitaries: &[CMatrix],
    derivatives: &[CMatrix],
    dim: usize,
) -> Result<CMatrix> {
    if unitaries.len() != derivatives.len() {
        return Err(Error::DimensionMismatch(
            "one derivative per unitary required".into(),
        ));
    }
    let mut sum = CMatrix::zeros(dim, dim);
    for (j, derivative) in derivatives.iter().enumerate() {
        let mut prod = CMatrix::identity(dim, dim);
        for (i, u) in unitaries.iter().enumerate() {
            let factor = if i == j { derivative } else { u };
            if factor.nrows() != dim || factor.ncols() != dim {
                return Err(Error::DimensionMismatch(
                    "sequential unitaries must all act on the probe dimension".into(),
                ));
            }
            prod *= factor;
        }
        sum += prod;
    }
    Ok(sum)
}

/// Applies n channels with ancillas: ρ ↦ [⊗ⱼ(Uⱼ⊗I)] ρ [⊗ⱼ(Uⱼ⊗I)]†.
pub fn apply_extended(unitaries: &[CMatrix], rho0: &DensityOperator) -> Result<DensityOperator> {
    let d = common_dim(unitaries)?;
    let expected = d.pow(2 * unitaries.len() as u32);
    if rho0.dim() != expected {
        return Err(Error::DimensionMismatch(format!(
            "input state has dim {}, expected d^2n = {expected}",
            rho0.dim()
        )));
    }
    let op = extended_operator(unitaries)?;
    rho0.conjugate_by(&op)
}

/// Applies channels in sequence on a bare probe: ρ ↦ (U₁⋯Uₙ) ρ (U₁⋯Uₙ)†.
pub fn apply_sequential(unitaries: &[CMatrix], rho0: &DensityOperator) -> Result<DensityOperator> {
    let prod = sequential_operator(unitaries, rho0.dim())?;
    rho0.conjugate_by(&prod)
}
