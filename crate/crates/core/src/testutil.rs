//! Random-object generators shared by the unit tests.

use rand::Rng;

use crate::quantum::{c, CMatrix, CVector, DensityOperator, Ket};

pub(crate) fn random_cmatrix(n: usize, rng: &mut impl Rng) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| {
        c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    })
}

pub(crate) fn random_skew_hermitian(n: usize, rng: &mut impl Rng) -> CMatrix {
    let m = random_cmatrix(n, rng);
    let adj = m.adjoint();
    (m - adj) * c(0.5, 0.0)
}

pub(crate) fn random_ket(dim: usize, rng: &mut impl Rng) -> Ket {
    let v = CVector::from_fn(dim, |_, _| {
        let re: f64 = rng.sample(rand_distr::StandardNormal);
        let im: f64 = rng.sample(rand_distr::StandardNormal);
        c(re, im)
    });
    Ket::normalized(v).unwrap()
}

pub(crate) fn random_density(dim: usize, rng: &mut impl Rng) -> DensityOperator {
    let m = random_cmatrix(dim, rng);
    let psd = &m * m.adjoint();
    let tr = psd.trace();
    DensityOperator::from_matrix_unchecked(psd / tr)
}

pub(crate) fn random_traceless_hermitian(dim: usize, rng: &mut impl Rng) -> CMatrix {
    let m = random_cmatrix(dim, rng);
    let h = (&m + m.adjoint()) * c(0.5, 0.0);
    let shift = h.trace() / c(dim as f64, 0.0);
    h - CMatrix::identity(dim, dim) * shift
}
