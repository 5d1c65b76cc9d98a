//! Covariance matrices of Gaussian states in quadrature ordering
//! (q₁, p₁, …, q_n, p_n), their symplectic eigenvalues, and the Von Neumann
//! entropy of a Gaussian state.

use crate::error::{Error, Result};
use nalgebra::DMatrix;

/// Tolerance window below 1 inside which symplectic eigenvalues are treated
/// as exactly 1 (pure-state roundoff). Larger violations are surfaced, not
/// clamped.
pub const EIGEN_CLAMP_WINDOW: f64 = 1e-9;

/// Real symmetric covariance matrix of an n-mode Gaussian state,
/// 2n-dimensional, in (q₁, p₁, …, q_n, p_n) ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    m: DMatrix<f64>,
}

impl CovarianceMatrix {
    /// Validate and wrap a matrix: square, even dimension, symmetric within
    /// 1e-12 relative to its largest entry.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::domain("covariance matrix must be square"));
        }
        if m.nrows() == 0 || m.nrows() % 2 != 0 {
            return Err(Error::domain(
                "covariance matrix dimension must be even and positive",
            ));
        }
        let scale = m.iter().fold(0.0f64, |a, &x| a.max(x.abs())).max(1.0);
        for i in 0..m.nrows() {
            for j in (i + 1)..m.ncols() {
                if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::domain(format!(
                        "covariance matrix not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(Self { m })
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn n_modes(&self) -> usize {
        self.m.nrows() / 2
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }
}

/// The symplectic form Ω = I_n ⊗ ω with ω = [[0, 1], [-1, 0]].
pub fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

/// Symplectic eigenvalues, sorted descending, one per mode.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticSpectrum(Vec<f64>);

impl SymplecticSpectrum {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Total Von Neumann entropy Σ h(λ_k) in bits.
    pub fn entropy(&self) -> Result<f64> {
        self.0
            .iter()
            .try_fold(0.0, |acc, &l| Ok(acc + von_neumann_entropy(l)?))
    }
}

/// Symplectic eigenvalues of a covariance matrix: the absolute values of the
/// eigenvalues of jΩΣ, with ± pairs collapsed to one value per mode.
/// Values within [`EIGEN_CLAMP_WINDOW`] below 1 are clamped to exactly 1.
pub fn symplectic_eigenvalues(cov: &CovarianceMatrix) -> Result<SymplecticSpectrum> {
    let n = cov.n_modes();
    let omega = symplectic_form(n);
    let prod = &omega * cov.as_matrix();
    let eig = prod.complex_eigenvalues();

    let mut moduli: Vec<f64> = eig.iter().map(|z| z.norm()).collect();
    moduli.sort_by(|a, b| b.total_cmp(a));

    let scale = moduli.first().copied().unwrap_or(1.0).max(1.0);
    let tol = 1e-9 * scale;
    let mut values = Vec::with_capacity(n);
    for pair in moduli.chunks(2) {
        if (pair[0] - pair[1]).abs() > tol {
            return Err(Error::numerical(format!(
                "eigenvalues of ΩΣ do not form ± pairs ({} vs {}); matrix is not a \
                 physical covariance",
                pair[0], pair[1]
            )));
        }
        let mut v = 0.5 * (pair[0] + pair[1]);
        if v < 1.0 && v >= 1.0 - EIGEN_CLAMP_WINDOW {
            v = 1.0;
        }
        values.push(v);
    }
    Ok(SymplecticSpectrum(values))
}

/// Von Neumann entropy contribution of one symplectic eigenvalue, in bits:
/// ((λ+1)/2) log₂((λ+1)/2) − ((λ−1)/2) log₂((λ−1)/2), with the λ → 1 limit 0.
pub fn von_neumann_entropy(lambda: f64) -> Result<f64> {
    if lambda < 1.0 - EIGEN_CLAMP_WINDOW {
        return Err(Error::domain(format!(
            "symplectic eigenvalue {lambda} below 1 beyond the clamp window"
        )));
    }
    if lambda <= 1.0 {
        return Ok(0.0);
    }
    let a = 0.5 * (lambda + 1.0);
    let b = 0.5 * (lambda - 1.0);
    Ok(a * a.log2() - b * b.log2())
}
